//! Dense 2×2 complex matrices and the Pauli basis.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(m: [[Complex<T>; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn from_real(a: T, b: T, c: T, d: T) -> Self {
        Self::new([[re(a), re(b)], [re(c), re(d)]])
    }

    pub fn zero() -> Self {
        Self::from_real(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::from_real(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn sigma_x() -> Self {
        Self::from_real(T::zero(), T::one(), T::one(), T::zero())
    }

    pub fn sigma_y() -> Self {
        let i = Complex::new(T::zero(), T::one());
        Self::new([[re(T::zero()), -i], [i, re(T::zero())]])
    }

    pub fn sigma_z() -> Self {
        Self::from_real(T::one(), T::zero(), T::zero(), -T::one())
    }

    /// `c0·I + v·σ` for real coefficients.
    pub fn from_pauli(c0: T, v: [T; 3]) -> Self {
        let [x, y, z] = v;
        Self::new([
            [re(c0 + z), Complex::new(x, -y)],
            [Complex::new(x, y), re(c0 - z)],
        ])
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: [Complex<T>; 2], b: [Complex<T>; 2]) -> Self {
        let mut m = [[re(T::zero()); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i] * b[j].conj();
            }
        }
        Self::new(m)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.m[i][j]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|e| e * s)
    }

    pub fn scale_c(&self, s: Complex<T>) -> Self {
        self.map(|e| e * s)
    }

    fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        let m = &self.m;
        Self::new([[f(m[0][0]), f(m[0][1])], [f(m[1][0]), f(m[1][1])]])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .map(|e| e.norm())
            .fold(T::zero(), T::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.m
            .iter()
            .flatten()
            .map(|e| e.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn hermiticity_error(&self) -> T {
        (*self - self.adjoint()).max_abs()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    /// Real Pauli coefficients `(c0, [cx, cy, cz])` with `M = c0·I + c·σ`,
    /// valid for Hermitian input.
    pub fn pauli_components(&self) -> (T, [T; 3]) {
        let m = &self.m;
        let h = T::half();
        let c0 = (m[0][0].re + m[1][1].re) * h;
        let cz = (m[0][0].re - m[1][1].re) * h;
        let cx = (m[0][1].re + m[1][0].re) * h;
        let cy = (m[1][0].im - m[0][1].im) * h;
        (c0, [cx, cy, cz])
    }
}

#[inline]
fn re<T: Real>(v: T) -> Complex<T> {
    Complex::new(v, T::zero())
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}
