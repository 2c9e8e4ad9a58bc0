//! Minimal complex 2×2 algebra for single-qubit states and SU(2) propagators.

use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Sub};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zeros() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn sigma_x() -> Self {
        Mat2::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Mat2::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn sigma_z() -> Self {
        Mat2::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    /// `(I + r·σ)/2` for a real Bloch vector `r`.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        Mat2::new(
            C64::new(0.5 * (1.0 + r[2]), 0.0),
            C64::new(0.5 * r[0], -0.5 * r[1]),
            C64::new(0.5 * r[0], 0.5 * r[1]),
            C64::new(0.5 * (1.0 - r[2]), 0.0),
        )
    }

    /// Bloch components `Tr(σ_u M)` (real parts) of a matrix.
    pub fn bloch(&self) -> [f64; 3] {
        let m = &self.0;
        [
            (m[0][1] + m[1][0]).re,
            (I * (m[0][1] - m[1][0])).re,
            (m[0][0] - m[1][1]).re,
        ]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let m = &self.0;
        let a = m[0][0].re;
        let d = m[1][1].re;
        let b = m[0][1].norm();
        let mean = 0.5 * (a + d);
        let half = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - half, mean + half]
    }

    /// Hermitian-ness defect `max |M - M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// `exp(-i t (h·σ))` for a real field `h`, exact.
pub fn su2_propagator(h: [f64; 3], t: f64) -> Mat2 {
    let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    if norm == 0.0 {
        return Mat2::identity();
    }
    let theta = norm * t;
    let (s, c) = theta.sin_cos();
    let k = s / norm;
    // cos θ I - i sin θ (ĥ·σ)
    Mat2::new(
        C64::new(c, -k * h[2]),
        C64::new(-k * h[1], -k * h[0]),
        C64::new(k * h[1], -k * h[0]),
        C64::new(c, k * h[2]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (Mat2::sigma_x(), Mat2::sigma_y(), Mat2::sigma_z());
        assert!((x * y).max_abs_diff(&z.scale(I)) < 1e-15);
        assert!((x * x).max_abs_diff(&Mat2::identity()) < 1e-15);
    }

    #[test]
    fn bloch_round_trip() {
        let r = [0.3, -0.2, 0.5];
        let b = Mat2::from_bloch(r).bloch();
        for k in 0..3 {
            assert!((b[k] - r[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn propagator_is_unitary_and_matches_series() {
        let h = [0.7, -0.4, 1.3];
        let u = su2_propagator(h, 0.37);
        let uu = u * u.adjoint();
        assert!(uu.max_abs_diff(&Mat2::identity()) < 1e-14);
        // compare with a truncated Taylor series of exp(-i t H)
        let hm = Mat2::sigma_x().scale(C64::new(h[0], 0.0))
            + Mat2::sigma_y().scale(C64::new(h[1], 0.0))
            + Mat2::sigma_z().scale(C64::new(h[2], 0.0));
        let a = hm.scale(C64::new(0.0, -0.37));
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for n in 1..30 {
            term = (term * a).scale(C64::new(1.0 / n as f64, 0.0));
            sum = sum + term;
        }
        assert!(sum.max_abs_diff(&u) < 1e-13);
    }
}
