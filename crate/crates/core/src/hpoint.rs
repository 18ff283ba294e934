//! Points of hyperbolic 3-space modeled as positive definite Hermitian
//! 2x2 matrices of determinant 1.
//!
//! PSL(2,C) acts by `X -> g X g*`, and the distance satisfies
//! `cosh d(X, Y) = tr(X Y^-1) / 2`. The model makes two things cheap that
//! the elementarity test needs: transporting a candidate common fixed point
//! by group elements, and averaging a finite orbit to improve the candidate.

use num_complex::Complex64;

use crate::mobius::{MobiusError, MoebiusMap};

/// A point of hyperbolic 3-space: the Hermitian matrix
/// `[[e11, e12], [conj(e12), e22]]` with `e11, e22 > 0` and determinant 1.
#[derive(Debug, Clone, Copy)]
pub struct HPoint {
    e11: f64,
    e12: Complex64,
    e22: f64,
}

impl HPoint {
    /// The point fixed by SU(2): the identity matrix.
    pub fn origin() -> Self {
        HPoint { e11: 1.0, e12: Complex64::new(0.0, 0.0), e22: 1.0 }
    }

    /// Builds a point from a positive definite Hermitian matrix, rescaling
    /// to determinant 1.
    pub fn new(e11: f64, e12: Complex64, e22: f64) -> Result<Self, MobiusError> {
        let det = e11 * e22 - e12.norm_sqr();
        if !(det.is_finite() && det > 0.0 && e11 > 0.0) {
            return Err(MobiusError::Degenerate);
        }
        let s = det.sqrt();
        Ok(HPoint { e11: e11 / s, e12: e12 / s, e22: e22 / s })
    }

    /// The Hermitian entries `(e11, e12, e22)`.
    pub fn entries(&self) -> (f64, Complex64, f64) {
        (self.e11, self.e12, self.e22)
    }

    /// The image under `g`: `g X g*`, again Hermitian positive definite of
    /// determinant 1.
    pub fn transported_by(&self, g: &MoebiusMap) -> HPoint {
        // Rows of g X: (a e11 + b conj(e12), a e12 + b e22) and
        //              (c e11 + d conj(e12), c e12 + d e22).
        let r11 = g.a * self.e11 + g.b * self.e12.conj();
        let r12 = g.a * self.e12 + g.b * self.e22;
        let r21 = g.c * self.e11 + g.d * self.e12.conj();
        let r22 = g.c * self.e12 + g.d * self.e22;
        // Multiply by g* on the right.
        let e11 = (r11 * g.a.conj() + r12 * g.b.conj()).re;
        let e12 = r11 * g.c.conj() + r12 * g.d.conj();
        let e22 = (r21 * g.c.conj() + r22 * g.d.conj()).re;
        HPoint::new(e11, e12, e22).expect("isometries preserve positive definiteness")
    }

    /// `cosh` of the hyperbolic distance.
    pub fn cosh_dist(&self, other: &HPoint) -> f64 {
        // tr(X Y^-1) with Y^-1 = [[y22, -y12], [-conj(y12), y11]].
        let t = self.e11 * other.e22 + self.e22 * other.e11
            - 2.0 * (self.e12 * other.e12.conj()).re;
        t / 2.0
    }

    /// Hyperbolic distance.
    pub fn dist(&self, other: &HPoint) -> f64 {
        self.cosh_dist(other).max(1.0).acosh()
    }

    /// The normalized average of a nonempty set of points, a computable
    /// stand-in for their barycenter.
    pub fn average(points: &[HPoint]) -> Result<HPoint, MobiusError> {
        if points.is_empty() {
            return Err(MobiusError::Degenerate);
        }
        let mut e11 = 0.0;
        let mut e12 = Complex64::new(0.0, 0.0);
        let mut e22 = 0.0;
        for p in points {
            e11 += p.e11;
            e12 += p.e12;
            e22 += p.e22;
        }
        HPoint::new(e11, e12, e22)
    }
}
