//! Reference computations written directly from the model definition,
//! sharing no code with the library's solvers.

#![allow(dead_code)]

/// Onsite energies and tunneling of `H(Δ, z)` in the `{|L⟩, |R⟩}` basis.
pub fn hamiltonian(lambda: f64, delta: f64, z: f64) -> [[f64; 2]; 2] {
    let shift = lambda * z * z / 4.0;
    [
        [delta - lambda * z / 2.0 + shift, -1.0],
        [-1.0, lambda * z / 2.0 + shift],
    ]
}

/// `⟨σz⟩` of `exp(−H/kT)/Z` by explicit diagonalization; ground state at
/// `kT = 0`.
pub fn thermal_z(lambda: f64, k_t: f64, delta: f64, z: f64) -> f64 {
    let h = hamiltonian(lambda, delta, z);
    let mean = (h[0][0] + h[1][1]) / 2.0;
    let d = (h[0][0] - h[1][1]) / 2.0;
    let r = (d * d + h[0][1] * h[0][1]).sqrt();
    let (e1, e2) = (mean - r, mean + r);
    // Unnormalized eigenvector for eigenvalue e: (h01, e − h00).
    let zvec = |e: f64| {
        let (a, b) = (h[0][1], e - h[0][0]);
        (a * a - b * b) / (a * a + b * b)
    };
    let (z1, z2) = (zvec(e1), zvec(e2));
    if k_t == 0.0 {
        return z1;
    }
    let w2 = (-(e2 - e1) / k_t).exp();
    (z1 + w2 * z2) / (1.0 + w2)
}

/// Energy `Tr(ρH)` of the thermal state at polarization `z` (its own `H`).
pub fn thermal_energy(lambda: f64, k_t: f64, delta: f64, z: f64) -> f64 {
    let h = hamiltonian(lambda, delta, z);
    let mean = (h[0][0] + h[1][1]) / 2.0;
    let d = (h[0][0] - h[1][1]) / 2.0;
    let r = (d * d + 1.0).sqrt();
    let t = if k_t == 0.0 { 1.0 } else { (r / k_t).tanh() };
    mean - r * t
}

/// Roots of `z − thermal_z(z)` on `[−1, 1]` by sign-change scan and
/// bisection.
pub fn steady_roots(lambda: f64, k_t: f64, delta: f64) -> Vec<f64> {
    let g = |z: f64| z - thermal_z(lambda, k_t, delta, z);
    let n = 20_000;
    let mut roots = Vec::new();
    let mut a = -1.0;
    let mut ga = g(a);
    for i in 1..=n {
        let b = -1.0 + 2.0 * i as f64 / n as f64;
        let gb = g(b);
        if ga == 0.0 {
            roots.push(a);
        } else if ga * gb < 0.0 {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (gm < 0.0) == (glo < 0.0) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        ga = gb;
    }
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
    roots
}

/// Closed-form thermal state without coupling: `(x, z)`.
pub fn linear_gibbs(k_t: f64, delta: f64) -> (f64, f64) {
    // H = Δ/2·I − σx + Δ/2·σz, field b = (−1, 0, Δ/2).
    let r = (1.0 + delta * delta / 4.0).sqrt();
    let t = if k_t == 0.0 { 1.0 } else { (r / k_t).tanh() };
    (t / r, -t * delta / 2.0 / r)
}

/// Ordinary least squares `y = a + b·x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Parameter grid `(λ, kT, Δ)` away from folds of the steady curve.
pub const STEADY_GRID: [(f64, f64, f64); 20] = [
    (0.0, 0.25, 0.0),
    (0.0, 1.0, 3.0),
    (0.0, 3.0, -7.5),
    (1.0, 0.25, 0.5),
    (1.0, 1.0, -2.0),
    (2.0, 0.1, 0.0),
    (2.0, 0.5, 0.3),
    (3.0, 0.25, 0.0),
    (3.0, 0.25, 1.0),
    (3.0, 1.0, -0.5),
    (5.0, 0.25, 0.0),
    (5.0, 0.25, 1.0),
    (5.0, 0.25, -3.0),
    (5.0, 0.25, 10.0),
    (5.0, 1.0, 0.5),
    (8.0, 0.5, -2.0),
    (8.0, 2.0, 1.0),
    (10.0, 1.0, 0.0),
    (10.0, 1.0, 6.0),
    (10.0, 3.0, -4.0),
];
