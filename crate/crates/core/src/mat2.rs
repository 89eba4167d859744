//! Dense 2×2 complex matrices.

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major 2×2 complex matrix in the (|1⟩, |0⟩) basis, σ_z = diag(1, −1).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2C(pub [[Complex64; 2]; 2]);

impl Mat2C {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2C([[a, b], [c, d]])
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2C::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn zero() -> Self {
        Mat2C([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2C([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn sigma_x() -> Self {
        Mat2C([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> Self {
        Mat2C([[ZERO, -I], [I, ZERO]])
    }

    pub fn sigma_z() -> Self {
        Mat2C([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// |u⟩⟨v|
    pub fn outer(u: [Complex64; 2], v: [Complex64; 2]) -> Self {
        Mat2C([
            [u[0] * v[0].conj(), u[0] * v[1].conj()],
            [u[1] * v[0].conj(), u[1] * v[1].conj()],
        ])
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0[r][c]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2C([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Mat2C([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        let m = &self.0;
        Mat2C([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn commutator(&self, other: &Mat2C) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Mat2C) -> Self {
        *self * *other + *other * *self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let h = (*self + self.adjoint()).scale_re(0.5);
        let a = h.0[0][0].re;
        let d = h.0[1][1].re;
        let b = h.0[0][1].norm();
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - r, mean + r]
    }
}

impl Add for Mat2C {
    type Output = Mat2C;
    fn add(self, o: Mat2C) -> Mat2C {
        let (a, b) = (&self.0, &o.0);
        Mat2C([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl AddAssign for Mat2C {
    fn add_assign(&mut self, o: Mat2C) {
        *self = *self + o;
    }
}

impl Sub for Mat2C {
    type Output = Mat2C;
    fn sub(self, o: Mat2C) -> Mat2C {
        let (a, b) = (&self.0, &o.0);
        Mat2C([[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]])
    }
}

impl Neg for Mat2C {
    type Output = Mat2C;
    fn neg(self) -> Mat2C {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;
    fn mul(self, o: Mat2C) -> Mat2C {
        let (a, b) = (&self.0, &o.0);
        Mat2C([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl Mul<Complex64> for Mat2C {
    type Output = Mat2C;
    fn mul(self, s: Complex64) -> Mat2C {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2C {
    type Output = Mat2C;
    fn mul(self, s: f64) -> Mat2C {
        self.scale_re(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (Mat2C::sigma_x(), Mat2C::sigma_y(), Mat2C::sigma_z());
        assert_eq!(x * y, z * I);
        assert_eq!(x.commutator(&y), z * c(0.0, 2.0));
        assert_eq!(x.anticommutator(&x), Mat2C::identity() * 2.0);
        assert_eq!(z.trace(), ZERO);
        assert_eq!(y.adjoint(), y);
    }

    #[test]
    fn outer_product_and_eigenvalues() {
        let u = [c(0.6, 0.0), c(0.0, 0.8)];
        let p = Mat2C::outer(u, u);
        assert!((p.trace() - ONE).norm() < 1e-15);
        assert!(((p * p) - p).max_abs() < 1e-15);
        let ev = p.hermitian_eigenvalues();
        assert!(ev[0].abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    fn arb_mat() -> impl Strategy<Value = Mat2C> {
        proptest::array::uniform8(-5.0f64..5.0)
            .prop_map(|v| Mat2C::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7])))
    }

    proptest! {
        #[test]
        fn adjoint_reverses_products(a in arb_mat(), b in arb_mat()) {
            prop_assert!(((a * b).adjoint() - b.adjoint() * a.adjoint()).max_abs() < 1e-12);
        }

        #[test]
        fn commutator_is_traceless(a in arb_mat(), b in arb_mat()) {
            prop_assert!(a.commutator(&b).trace().norm() < 1e-12);
        }

        #[test]
        fn determinant_is_multiplicative(a in arb_mat(), b in arb_mat()) {
            let lhs = (a * b).det();
            let rhs = a.det() * b.det();
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }
}
