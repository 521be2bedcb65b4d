//! Two-state cell model: parameters, Bloch states, the nonlinear Hamiltonian
//! and its closed-form eigen-decomposition.
//!
//! Units: energies are measured in the tunneling energy γ and times in
//! `Tγ = πħ/γ`. With γ = 1 and `Tγ = 1` the reduced Planck constant is
//! `ħ = 1/π` (see [`hbar`]).

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::scalar::Real;

/// Tolerance on the Bloch norm and on |z| for a state to count as physical.
pub const STATE_TOL: f64 = 1e-9;

/// ħ in units of γ·Tγ.
#[inline]
pub fn hbar<T: Real>() -> T {
    T::FRAC_1_PI()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    /// Tunneling energy γ.
    pub gamma: T,
    /// Reorganization energy λ.
    pub lambda: T,
    /// Dissipation time T_d; `+∞` for an isolated cell.
    pub t_d: T,
    /// Thermal energy k_BT.
    pub k_t: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(gamma: T, lambda: T, t_d: T, k_t: T) -> Result<Self> {
        let p = Self {
            gamma,
            lambda,
            t_d,
            k_t,
        };
        p.validate()?;
        Ok(p)
    }

    /// Open cell with γ = 1.
    pub fn open(lambda: T, t_d: T, k_t: T) -> Result<Self> {
        Self::new(T::one(), lambda, t_d, k_t)
    }

    /// Isolated cell (T_d = ∞) with γ = 1.
    pub fn isolated(lambda: T) -> Result<Self> {
        Self::new(T::one(), lambda, T::infinity(), T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Domain(what.to_string()));
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return bad("gamma must be positive and finite");
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return bad("lambda must be non-negative and finite");
        }
        if !(self.t_d > T::zero()) {
            return bad("t_d must be positive (or infinite)");
        }
        if !(self.k_t >= T::zero()) || !self.k_t.is_finite() {
            return bad("k_t must be non-negative and finite");
        }
        Ok(())
    }

    pub fn is_isolated(&self) -> bool {
        self.t_d.is_infinite()
    }

    pub fn with_lambda(self, lambda: T) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_t_d(self, t_d: T) -> Self {
        Self { t_d, ..self }
    }

    pub fn with_k_t(self, k_t: T) -> Self {
        Self { k_t, ..self }
    }
}

/// Density operator as the real vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
/// `z` is the cell polarization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochState<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> BlochState<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(v: [T; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn polarization(&self) -> T {
        self.z
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn max_abs(&self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Infinity-norm distance.
    pub fn dist_inf(&self, o: &Self) -> T {
        (*self - *o).max_abs()
    }

    /// Euclidean distance.
    pub fn dist(&self, o: &Self) -> T {
        (*self - *o).norm()
    }

    pub fn is_valid(&self) -> bool {
        let n = self.norm();
        n.is_finite() && n <= T::one() + T::lit(STATE_TOL)
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "Bloch norm {:e} exceeds 1 + {STATE_TOL:e} for ({}, {}, {})",
                self.norm(),
                self.x,
                self.y,
                self.z
            )))
        }
    }
}

impl<T: Real> Add for BlochState<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for BlochState<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for BlochState<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// `ρ = ½(I + x σx + y σy + z σz)`
pub fn bloch_to_density<T: Real>(s: &BlochState<T>) -> Result<Mat2<T>> {
    s.validate()?;
    let h = T::half();
    Ok(Mat2::from_pauli(h, [s.x * h, s.y * h, s.z * h]))
}

/// `⟨σi⟩ = Tr(ρ σi)`
pub fn density_to_bloch<T: Real>(rho: &Mat2<T>) -> Result<BlochState<T>> {
    let tol = T::lit(STATE_TOL);
    let tr = rho.trace();
    if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
        return Err(Error::InvalidState(format!(
            "trace {} + {}i is not 1",
            tr.re, tr.im
        )));
    }
    let herm = rho.hermiticity_error();
    if herm > tol {
        return Err(Error::InvalidState(format!(
            "density operator is not Hermitian (deviation {herm:e})"
        )));
    }
    let tr_with = |p: Mat2<T>| (*rho * p).trace().re;
    Ok(BlochState::new(
        tr_with(Mat2::sigma_x()),
        tr_with(Mat2::sigma_y()),
        tr_with(Mat2::sigma_z()),
    ))
}

/// The Hamiltonian of the cell at one instant, split into its electronic,
/// electron-ligand and ligand parts, with its eigen-decomposition.
///
/// `h_total = offset·I + field·σ`; the eigenvalues are `offset ∓ |field|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParts<T> {
    pub h_e: Mat2<T>,
    pub h_el: Mat2<T>,
    pub h_l: Mat2<T>,
    pub h_total: Mat2<T>,
    pub offset: T,
    pub field: BlochState<T>,
    /// `(E1, E2)`, `E1 ≤ E2`.
    pub eigvals: (T, T),
    /// `[|u1⟩, |u2⟩]` with the first nonzero component real and positive.
    pub eigvecs: [[Complex<T>; 2]; 2],
}

impl<T: Real> HamiltonianParts<T> {
    /// Assembles `H = H_E + H_EL + H_L` for bias `delta` and polarization
    /// `z` without validating `z`. Used inside integrator stages, where the
    /// trial state may sit marginally outside the Bloch ball.
    pub fn assemble(p: &ModelParams<T>, delta: T, z: T) -> Self {
        let h = T::half();
        let q = T::lit(0.25);
        let zero = T::zero();
        let h_e = Mat2::from_pauli(delta * h, [-p.gamma, zero, delta * h]);
        let h_el = Mat2::from_pauli(zero, [zero, zero, -p.lambda * h * z]);
        let h_l = Mat2::from_pauli(p.lambda * q * z * z, [zero; 3]);
        let offset = delta * h + p.lambda * q * z * z;
        let field = BlochState::new(-p.gamma, zero, (delta - p.lambda * z) * h);
        let h_total = Mat2::from_pauli(offset, field.to_array());
        let r = field.norm();
        let eigvals = (offset - r, offset + r);
        let eigvecs = [
            bloch_ket(&field.scale(-T::one() / r)),
            bloch_ket(&field.scale(T::one() / r)),
        ];
        Self {
            h_e,
            h_el,
            h_l,
            h_total,
            offset,
            field,
            eigvals,
            eigvecs,
        }
    }

    /// `E2 − E1`
    pub fn gap(&self) -> T {
        self.eigvals.1 - self.eigvals.0
    }

    /// Unit Bloch vector of the instantaneous ground state.
    pub fn ground_direction(&self) -> BlochState<T> {
        self.field.scale(-T::one() / self.field.norm())
    }
}

/// Pure state `|u⟩` whose Bloch vector is the unit vector `n`, with the
/// phase fixed so the first component is real and non-negative (second
/// component real positive when the first vanishes).
fn bloch_ket<T: Real>(n: &BlochState<T>) -> [Complex<T>; 2] {
    let h = T::half();
    let rxy = n.x.hypot(n.y);
    if n.z >= T::zero() {
        let a = ((T::one() + n.z) * h).sqrt();
        let b = Complex::new(n.x, n.y) / (T::two() * a);
        [Complex::new(a, T::zero()), b]
    } else {
        let s = ((T::one() - n.z) * h).sqrt();
        let phase = if rxy > T::zero() {
            Complex::new(n.x / rxy, n.y / rxy)
        } else {
            Complex::new(T::one(), T::zero())
        };
        let a = rxy / (T::two() * s);
        [Complex::new(a, T::zero()), phase * s]
    }
}

/// Hamiltonian at bias `delta` and polarization `z` (`|z| ≤ 1`).
pub fn build_hamiltonian<T: Real>(
    p: &ModelParams<T>,
    delta: T,
    z: T,
) -> Result<HamiltonianParts<T>> {
    if !(z.abs() <= T::one() + T::lit(STATE_TOL)) {
        return Err(Error::InvalidState(format!(
            "polarization {z} outside [-1, 1]"
        )));
    }
    Ok(HamiltonianParts::assemble(p, delta, z))
}

/// `(E_L, E_R) = (⟨L|H|L⟩, ⟨R|H|R⟩)`
pub fn onsite_energies<T: Real>(h: &HamiltonianParts<T>) -> (T, T) {
    (h.h_total.get(0, 0).re, h.h_total.get(1, 1).re)
}

/// `Tr(ρH)` from the Bloch components.
pub fn expected_energy<T: Real>(s: &BlochState<T>, h: &HamiltonianParts<T>) -> T {
    let m = &h.h_total;
    let tr = |p: Mat2<T>| (*m * p).trace().re;
    T::half()
        * (m.trace().re
            + s.x * tr(Mat2::sigma_x())
            + s.y * tr(Mat2::sigma_y())
            + s.z * tr(Mat2::sigma_z()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type S = BlochState<f64>;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn density_examples() {
        let rho = bloch_to_density(&S::zero()).unwrap();
        assert!((rho - Mat2::identity().scale(0.5)).max_abs() < 1e-15);

        let rho = bloch_to_density(&S::new(0.0, 0.0, 1.0)).unwrap();
        assert!((rho - Mat2::from_real(1.0, 0.0, 0.0, 0.0)).max_abs() < 1e-15);

        let rho = bloch_to_density(&S::new(1.0, 0.0, 0.0)).unwrap();
        assert!((rho - Mat2::from_real(0.5, 0.5, 0.5, 0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn bloch_examples() {
        let s = density_to_bloch(&Mat2::identity().scale(0.5)).unwrap();
        assert_eq!(s, S::zero());
        let s = density_to_bloch(&Mat2::from_real(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(s, S::new(0.0, 0.0, 1.0));
        let rho = (Mat2::identity() + Mat2::sigma_y()).scale(0.5);
        let s = density_to_bloch(&rho).unwrap();
        assert!(s.dist_inf(&S::new(0.0, 1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(matches!(
            bloch_to_density(&S::new(1.0, 0.1, 0.0)),
            Err(Error::InvalidState(_))
        ));
        assert!(density_to_bloch(&Mat2::<f64>::identity()).is_err());
        let non_herm = Mat2::from_real(0.5, 0.3, 0.0, 0.5);
        assert!(density_to_bloch(&non_herm).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let p = ModelParams::<f64>::isolated(0.0).unwrap();
        let h = build_hamiltonian(&p, 0.0, 0.3).unwrap();
        assert!((h.h_total + Mat2::sigma_x()).max_abs() < 1e-15);
        assert_eq!(h.eigvals, (-1.0, 1.0));

        let h = build_hamiltonian(&p, 2.0, 0.0).unwrap();
        assert!((h.h_total - Mat2::from_real(2.0, -1.0, -1.0, 0.0)).max_abs() < 1e-15);

        let p = ModelParams::<f64>::isolated(5.0).unwrap();
        let h = build_hamiltonian(&p, 0.0, 1.0).unwrap();
        assert!((h.h_el + Mat2::sigma_z().scale(2.5)).max_abs() < 1e-15);
        assert!((h.h_l - Mat2::identity().scale(1.25)).max_abs() < 1e-15);
        let (el, er) = onsite_energies(&h);
        assert!(close(el - er, -5.0, 1e-15));
    }

    #[test]
    fn linear_model_has_no_ligand_terms() {
        let p = ModelParams::<f64>::isolated(0.0).unwrap();
        let h = build_hamiltonian(&p, 3.0, -0.7).unwrap();
        assert_eq!(h.h_el.max_abs(), 0.0);
        assert_eq!(h.h_l.max_abs(), 0.0);
    }

    #[test]
    fn out_of_range_polarization_rejected() {
        let p = ModelParams::<f64>::isolated(1.0).unwrap();
        assert!(build_hamiltonian(&p, 0.0, 1.01).is_err());
    }

    #[test]
    fn onsite_difference_tracks_bias_and_reorganization() {
        let p = ModelParams::<f64>::isolated(0.0).unwrap();
        for z in [-1.0, -0.2, 0.5, 1.0] {
            let (el, er) = onsite_energies(&build_hamiltonian(&p, 4.0, z).unwrap());
            assert!(close(el - er, 4.0, 1e-14));
        }
        let p = p.with_lambda(10.0);
        let (el, er) = onsite_energies(&build_hamiltonian(&p, -25.0, 1.0).unwrap());
        assert!(close(el - er, -35.0, 1e-13));
        let (el, er) = onsite_energies(&build_hamiltonian(&p, 25.0, -1.0).unwrap());
        assert!(close(el - er, 35.0, 1e-13));
    }

    #[test]
    fn expected_energy_examples() {
        let p = ModelParams::<f64>::isolated(0.0).unwrap();
        let h = build_hamiltonian(&p, 0.0, 0.0).unwrap();
        assert!(close(
            expected_energy(&S::new(1.0, 0.0, 0.0), &h),
            -1.0,
            1e-15
        ));
        assert!(close(expected_energy(&S::zero(), &h), 0.0, 1e-15));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, -0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::INFINITY, 0.0)
            .unwrap()
            .is_isolated());
    }

    #[test]
    fn phase_convention_on_axis() {
        // Ground state along -z: first component vanishes, second is +1.
        let ket = bloch_ket(&S::new(0.0, 0.0, -1.0));
        assert_eq!(ket[0], Complex::new(0.0, 0.0));
        assert_eq!(ket[1], Complex::new(1.0, 0.0));
    }

    #[test]
    fn single_precision_hamiltonian() {
        let p = ModelParams::<f32>::isolated(5.0).unwrap();
        let h = build_hamiltonian(&p, 1.0, 0.5).unwrap();
        let (el, er) = onsite_energies(&h);
        assert!((el - er - (1.0 - 2.5)).abs() < 1e-6);
    }

    fn ball_state() -> impl Strategy<Value = S> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..1.0f64).prop_filter_map(
            "nonzero direction",
            |(x, y, z, r)| {
                let n = (x * x + y * y + z * z).sqrt();
                (n > 1e-6).then(|| S::new(x, y, z).scale(r / n))
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn density_roundtrip(s in ball_state()) {
            let rho = bloch_to_density(&s).unwrap();
            prop_assert!((rho.trace().re - 1.0).abs() < 1e-15);
            prop_assert_eq!(rho.hermiticity_error(), 0.0);
            let back = density_to_bloch(&rho).unwrap();
            prop_assert!(back.dist_inf(&s) < 1e-12);
        }

        #[test]
        fn eigen_decomposition_matches_direct(
            delta in -30.0..30.0f64,
            lambda in 0.0..12.0f64,
            z in -1.0..1.0f64,
        ) {
            let p = ModelParams::isolated(lambda).unwrap();
            let h = build_hamiltonian(&p, delta, z).unwrap();
            prop_assert_eq!(h.h_total.hermiticity_error(), 0.0);
            prop_assert!((h.h_e + h.h_el + h.h_l - h.h_total).max_abs() < 1e-12);

            // Direct 2x2 diagonalization of the real symmetric matrix.
            let a = h.h_total.get(0, 0).re;
            let b = h.h_total.get(0, 1).re;
            let d = h.h_total.get(1, 1).re;
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
            prop_assert!((h.eigvals.0 - (mean - rad)).abs() < 1e-12);
            prop_assert!((h.eigvals.1 - (mean + rad)).abs() < 1e-12);

            let gap = 2.0 * (1.0 + ((delta - lambda * z) / 2.0).powi(2)).sqrt();
            prop_assert!((h.gap() - gap).abs() < 1e-12 * gap.max(1.0));
            prop_assert!(h.gap() >= 2.0);

            let (el, er) = onsite_energies(&h);
            prop_assert!((el - er - (delta - lambda * z)).abs() < 1e-12);

            for (k, e) in [h.eigvals.0, h.eigvals.1].into_iter().enumerate() {
                let u = h.eigvecs[k];
                prop_assert!(u[0].im == 0.0 && u[0].re >= 0.0);
                let hu0 = h.h_total.get(0, 0) * u[0] + h.h_total.get(0, 1) * u[1];
                let hu1 = h.h_total.get(1, 0) * u[0] + h.h_total.get(1, 1) * u[1];
                prop_assert!((hu0 - u[0] * e).norm() < 1e-12 * gap.max(1.0));
                prop_assert!((hu1 - u[1] * e).norm() < 1e-12 * gap.max(1.0));
            }
            let u = h.eigvecs;
            let n1 = u[0][0].norm_sqr() + u[0][1].norm_sqr();
            let n2 = u[1][0].norm_sqr() + u[1][1].norm_sqr();
            let ov = u[0][0].conj() * u[1][0] + u[0][1].conj() * u[1][1];
            prop_assert!((n1 - 1.0).abs() < 1e-12 && (n2 - 1.0).abs() < 1e-12);
            prop_assert!(ov.norm() < 1e-12);
        }

        #[test]
        fn ligand_energy_is_state_independent(
            s in ball_state(),
            lambda in 0.0..12.0f64,
            z in -1.0..1.0f64,
        ) {
            let p = ModelParams::isolated(lambda).unwrap();
            let h = build_hamiltonian(&p, 0.0, z).unwrap();
            let tr = |m: Mat2<f64>| 0.5 * (m.trace().re
                + s.x * (m * Mat2::sigma_x()).trace().re
                + s.y * (m * Mat2::sigma_y()).trace().re
                + s.z * (m * Mat2::sigma_z()).trace().re);
            prop_assert!((tr(h.h_l) - lambda * z * z / 4.0).abs() < 1e-12);
            let fast = h.offset + h.field.dot(&s);
            prop_assert!((expected_energy(&s, &h) - fast).abs() < 1e-12);
        }
    }
}
