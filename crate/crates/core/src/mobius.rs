//! Moebius transformations with chosen SL(2,C) lifts, points of the Riemann
//! sphere in homogeneous coordinates, and the geodesic geometry the rest of
//! the crate is built on: classification, fixed points, axes, common
//! perpendiculars and elliptic involutions.
//!
//! A [`MoebiusMap`] is always stored as a determinant-1 matrix. Equality in
//! PSL(2,C) is equality up to a global sign; the lift itself is meaningful
//! (the lifting-obstruction computation depends on it), so products
//! renormalize by the principal square root of the determinant, which never
//! flips the sign of a product of near-unimodular matrices.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::config::Tolerances;

/// Shorthand constructor for complex scalars.
pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Errors raised by the Moebius layer.
#[derive(Debug, Error)]
pub enum MobiusError {
    /// Matrix determinant is too far from 1 to accept as an SL(2,C) lift.
    #[error("determinant {det} is not 1 within {eps}")]
    NotUnimodular { det: Complex64, eps: f64 },
    /// Matrix is singular or has non-finite entries.
    #[error("matrix is singular or non-finite")]
    Degenerate,
    /// Both homogeneous coordinates vanish.
    #[error("homogeneous coordinates are both zero")]
    ZeroVector,
    /// A geodesic needs two distinct endpoints.
    #[error("geodesic endpoints coincide (chordal distance {dist:.3e})")]
    DegenerateGeodesic { dist: f64 },
    /// The operation needs a map with two distinct fixed points.
    #[error("input map is the identity or lacks two distinct fixed points")]
    IdentityInput,
    /// The map has no axis (parabolic or identity).
    #[error("map has no axis (parabolic or identity)")]
    NoAxis,
    /// The two geodesics cross in hyperbolic 3-space, are asymptotic, or
    /// coincide; `angle` is the crossing angle (0 for asymptotic/equal).
    #[error("geodesics intersect (angle {angle:.6}); no common perpendicular")]
    AxesIntersect { angle: f64 },
    /// Strict classification refused to decide: tr^2 sits within the trace
    /// tolerance of the parabolic boundary value 4.
    #[error("ambiguous class: tr^2 is {dist:.3e} away from 4")]
    AmbiguousClass { dist: f64 },
}

/// Conjugacy class of an isometry of hyperbolic 3-space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsomClass {
    Identity,
    Elliptic,
    Parabolic,
    Loxodromic,
}

impl std::fmt::Display for IsomClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            IsomClass::Identity => "identity",
            IsomClass::Elliptic => "elliptic",
            IsomClass::Parabolic => "parabolic",
            IsomClass::Loxodromic => "loxodromic",
        };
        f.write_str(s)
    }
}

/// A point of the Riemann sphere in homogeneous coordinates `(z1 : z2)`,
/// normalized so the larger-modulus coordinate is exactly 1.
///
/// `z2 = 0` encodes the point at infinity. Equality is always up to the
/// chordal metric; the type deliberately does not implement `PartialEq`.
#[derive(Debug, Clone, Copy)]
pub struct SpherePoint {
    z1: Complex64,
    z2: Complex64,
}

impl SpherePoint {
    /// Builds a point from homogeneous coordinates, rejecting `(0, 0)`.
    // z / z is computed deliberately: the pivot slot lands on exactly 1+0i.
    #[allow(clippy::eq_op)]
    pub fn from_homogeneous(z1: Complex64, z2: Complex64) -> Result<Self, MobiusError> {
        let (n1, n2) = (z1.norm(), z2.norm());
        if !n1.is_finite() || !n2.is_finite() || (n1 == 0.0 && n2 == 0.0) {
            return Err(MobiusError::ZeroVector);
        }
        // Divide by the larger coordinate: that slot becomes exactly 1 and
        // the other has modulus <= 1, so no overflow can accumulate.
        if n1 >= n2 {
            Ok(SpherePoint { z1: z1 / z1, z2: z2 / z1 })
        } else {
            Ok(SpherePoint { z1: z1 / z2, z2: z2 / z2 })
        }
    }

    /// The finite point `z`.
    pub fn finite(z: Complex64) -> Self {
        SpherePoint::from_homogeneous(z, cx(1.0, 0.0)).expect("finite point")
    }

    /// The point at infinity.
    pub fn infinity() -> Self {
        SpherePoint { z1: cx(1.0, 0.0), z2: cx(0.0, 0.0) }
    }

    pub fn z1(&self) -> Complex64 {
        self.z1
    }

    pub fn z2(&self) -> Complex64 {
        self.z2
    }

    /// Exactly the point at infinity (second coordinate identically zero).
    pub fn is_infinity(&self) -> bool {
        self.z2 == cx(0.0, 0.0)
    }

    /// Affine coordinate, or `None` for the point at infinity.
    pub fn to_complex(&self) -> Option<Complex64> {
        if self.is_infinity() {
            None
        } else {
            Some(self.z1 / self.z2)
        }
    }

    /// Chordal distance on the sphere of diameter 2 (0 to 2, with 2 for
    /// antipodal pairs): `2 |z1 w2 - z2 w1| / (|Z| |W|)`.
    pub fn chordal_to(&self, other: &SpherePoint) -> f64 {
        let cross = (self.z1 * other.z2 - self.z2 * other.z1).norm();
        let nz = (self.z1.norm_sqr() + self.z2.norm_sqr()).sqrt();
        let nw = (other.z1.norm_sqr() + other.z2.norm_sqr()).sqrt();
        2.0 * cross / (nz * nw)
    }

    /// Equality up to chordal tolerance.
    pub fn approx_eq(&self, other: &SpherePoint, eps: f64) -> bool {
        self.chordal_to(other) <= eps
    }
}

impl Serialize for SpherePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [[self.z1.re, self.z1.im], [self.z2.re, self.z2.im]].serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpherePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [[a, b], [c, e]] = <[[f64; 2]; 2]>::deserialize(d)?;
        SpherePoint::from_homogeneous(cx(a, b), cx(c, e)).map_err(D::Error::custom)
    }
}

/// An unoriented geodesic of hyperbolic 3-space, stored by its two distinct
/// ideal endpoints.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Geodesic {
    p: SpherePoint,
    q: SpherePoint,
}

impl Geodesic {
    /// Builds a geodesic, rejecting endpoint pairs closer than the point
    /// tolerance.
    pub fn new(p: SpherePoint, q: SpherePoint, tol: &Tolerances) -> Result<Self, MobiusError> {
        let dist = p.chordal_to(&q);
        if dist <= tol.point {
            return Err(MobiusError::DegenerateGeodesic { dist });
        }
        Ok(Geodesic { p, q })
    }

    pub fn endpoints(&self) -> (SpherePoint, SpherePoint) {
        (self.p, self.q)
    }

    /// Unordered endpoint comparison up to chordal tolerance.
    pub fn same_as(&self, other: &Geodesic, eps: f64) -> bool {
        (self.p.approx_eq(&other.p, eps) && self.q.approx_eq(&other.q, eps))
            || (self.p.approx_eq(&other.q, eps) && self.q.approx_eq(&other.p, eps))
    }

    /// True when `x` coincides with either endpoint.
    pub fn has_endpoint(&self, x: &SpherePoint, eps: f64) -> bool {
        self.p.approx_eq(x, eps) || self.q.approx_eq(x, eps)
    }
}

/// Fixed points of a non-identity Moebius transformation.
#[derive(Debug, Clone, Copy)]
pub enum FixedPoints {
    /// Parabolic: a single fixed point.
    Single(SpherePoint),
    /// Loxodromic: two fixed points with a dynamical orientation.
    Pair {
        attracting: SpherePoint,
        repelling: SpherePoint,
    },
    /// Elliptic: two fixed points, neither attracts.
    NeutralPair(SpherePoint, SpherePoint),
}

impl FixedPoints {
    /// All fixed points, one or two.
    pub fn points(&self) -> Vec<SpherePoint> {
        match self {
            FixedPoints::Single(p) => vec![*p],
            FixedPoints::Pair { attracting, repelling } => vec![*attracting, *repelling],
            FixedPoints::NeutralPair(p, q) => vec![*p, *q],
        }
    }

    /// The two fixed points when there are two, in (attracting, repelling)
    /// order for loxodromics.
    pub fn pair(&self) -> Option<(SpherePoint, SpherePoint)> {
        match self {
            FixedPoints::Single(_) => None,
            FixedPoints::Pair { attracting, repelling } => Some((*attracting, *repelling)),
            FixedPoints::NeutralPair(p, q) => Some((*p, *q)),
        }
    }
}

/// One-sided results of the fixed-point interchange test.
///
/// `forward` holds when the tested map sends the first fixed point of the
/// reference map onto the second, `backward` when it sends the second onto
/// the first. The interchange predicate of the search routines is
/// [`FixedPointSwap::either`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointSwap {
    pub forward: bool,
    pub backward: bool,
}

impl FixedPointSwap {
    /// True when at least one fixed point is carried onto the other.
    pub fn either(&self) -> bool {
        self.forward || self.backward
    }
}

/// An element of PSL(2,C) with a chosen determinant-1 lift, acting on the
/// sphere by `z -> (a z + b) / (c z + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MoebiusMap {
    /// Builds a map from any invertible matrix, rescaling to determinant 1
    /// by the principal square root (positive real part, so a matrix that
    /// already has determinant 1 is returned bit-for-bit unchanged).
    pub fn new(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Result<Self, MobiusError> {
        let det = a * d - b * c;
        if !det.is_finite() || det.norm() < 1e-100 {
            return Err(MobiusError::Degenerate);
        }
        let s = det.sqrt();
        Ok(MoebiusMap { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    /// Accepts a matrix as an SL(2,C) lift without rescaling; the
    /// determinant must already be 1 within `tol.det`.
    pub fn from_sl(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
        tol: &Tolerances,
    ) -> Result<Self, MobiusError> {
        let det = a * d - b * c;
        if !det.is_finite() {
            return Err(MobiusError::Degenerate);
        }
        if (det - 1.0).norm() > tol.det {
            return Err(MobiusError::NotUnimodular { det, eps: tol.det });
        }
        Ok(MoebiusMap { a, b, c, d })
    }

    pub fn identity() -> Self {
        MoebiusMap {
            a: cx(1.0, 0.0),
            b: cx(0.0, 0.0),
            c: cx(0.0, 0.0),
            d: cx(1.0, 0.0),
        }
    }

    /// `z -> z + t`.
    pub fn translation(t: Complex64) -> Self {
        MoebiusMap {
            a: cx(1.0, 0.0),
            b: t,
            c: cx(0.0, 0.0),
            d: cx(1.0, 0.0),
        }
    }

    /// `diag(lambda, 1/lambda)`, acting as `z -> lambda^2 z`.
    pub fn diagonal(lambda: Complex64) -> Result<Self, MobiusError> {
        if !lambda.is_finite() || lambda.norm() < 1e-100 {
            return Err(MobiusError::Degenerate);
        }
        Ok(MoebiusMap {
            a: lambda,
            b: cx(0.0, 0.0),
            c: cx(0.0, 0.0),
            d: 1.0 / lambda,
        })
    }

    /// The matrix `[p | q]` with the two points as columns, rescaled to
    /// determinant 1: it sends infinity to `p` and 0 to `q`.
    pub fn frame(p: &SpherePoint, q: &SpherePoint) -> Result<Self, MobiusError> {
        MoebiusMap::new(p.z1(), q.z1(), p.z2(), q.z2())
            .map_err(|_| MobiusError::DegenerateGeodesic { dist: p.chordal_to(q) })
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// The square of the trace, the conjugation invariant behind the
    /// classification trichotomy.
    pub fn trace_squared(&self) -> Complex64 {
        let t = self.trace();
        t * t
    }

    /// Inverse of a determinant-1 matrix.
    pub fn inverse(&self) -> Self {
        MoebiusMap { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// The lift with the opposite sign (the same PSL element).
    pub fn negate(&self) -> Self {
        MoebiusMap { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    /// `g * self * g^-1`.
    pub fn conjugate_by(&self, g: &MoebiusMap) -> Self {
        *g * *self * g.inverse()
    }

    /// Integer power (negative exponents via the inverse).
    pub fn pow(&self, n: i32) -> Self {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = MoebiusMap::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Largest entrywise distance to another lift.
    pub fn entry_dist(&self, other: &MoebiusMap) -> f64 {
        let d = [
            (self.a - other.a).norm(),
            (self.b - other.b).norm(),
            (self.c - other.c).norm(),
            (self.d - other.d).norm(),
        ];
        d.into_iter().fold(0.0, f64::max)
    }

    /// Distance in PSL(2,C): entrywise distance minimized over the sign.
    pub fn psl_dist(&self, other: &MoebiusMap) -> f64 {
        self.entry_dist(other).min(self.entry_dist(&other.negate()))
    }

    /// Equality in PSL(2,C) up to tolerance.
    pub fn psl_eq(&self, other: &MoebiusMap, eps: f64) -> bool {
        self.psl_dist(other) <= eps
    }

    /// True when the matrix equals plus or minus the identity entrywise
    /// within `eps`.
    pub fn is_identity_up_to_sign(&self, eps: f64) -> bool {
        self.psl_dist(&MoebiusMap::identity()) <= eps
    }

    /// Projective action on a point of the sphere; exact at infinity.
    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        let w1 = self.a * p.z1() + self.b * p.z2();
        let w2 = self.c * p.z1() + self.d * p.z2();
        SpherePoint::from_homogeneous(w1, w2).expect("image of a sphere point under an invertible map")
    }

    /// Classification by the trace-squared trichotomy.
    ///
    /// Identity means the matrix itself is within the identity tolerance of
    /// plus or minus the identity; parabolic means tr^2 is within the trace
    /// tolerance of 4 (and the map is not the identity); elliptic means tr^2
    /// is real within the trace tolerance and lies in [0, 4); everything
    /// else, including negative real tr^2, is loxodromic.
    pub fn classify(&self, tol: &Tolerances) -> IsomClass {
        if self.is_identity_up_to_sign(tol.identity) {
            return IsomClass::Identity;
        }
        let t2 = self.trace_squared();
        if (t2 - 4.0).norm() <= tol.trace {
            return IsomClass::Parabolic;
        }
        if t2.im.abs() <= tol.trace && t2.re >= -tol.trace && t2.re < 4.0 {
            return IsomClass::Elliptic;
        }
        IsomClass::Loxodromic
    }

    /// Strict classification: refuses to distinguish parabolic from
    /// near-parabolic. Any non-identity matrix whose tr^2 lands within the
    /// trace tolerance of 4 is reported as ambiguous instead of guessed.
    pub fn classify_strict(&self, tol: &Tolerances) -> Result<IsomClass, MobiusError> {
        if self.is_identity_up_to_sign(tol.identity) {
            return Ok(IsomClass::Identity);
        }
        let dist = (self.trace_squared() - 4.0).norm();
        if dist <= tol.trace {
            return Err(MobiusError::AmbiguousClass { dist });
        }
        Ok(self.classify(tol))
    }

    /// Eigenvector of the 2x2 matrix for eigenvalue `lambda`, as a sphere
    /// point. Picks the better conditioned of the two row-kernel candidates.
    fn eigenvector(&self, lambda: Complex64) -> SpherePoint {
        let u = (self.b, lambda - self.a);
        let v = (lambda - self.d, self.c);
        let nu = u.0.norm_sqr() + u.1.norm_sqr();
        let nv = v.0.norm_sqr() + v.1.norm_sqr();
        let (z1, z2) = if nu >= nv { u } else { v };
        SpherePoint::from_homogeneous(z1, z2).expect("eigenvector of a non-scalar matrix")
    }

    /// Fixed points on the sphere, tagged attracting/repelling for
    /// loxodromics (larger versus smaller eigenvalue modulus).
    pub fn fixed_points(&self, tol: &Tolerances) -> Result<FixedPoints, MobiusError> {
        if self.is_identity_up_to_sign(tol.identity) {
            return Err(MobiusError::IdentityInput);
        }
        let t = self.trace();
        match self.classify(tol) {
            IsomClass::Parabolic => Ok(FixedPoints::Single(self.eigenvector(t / 2.0))),
            IsomClass::Elliptic => {
                let disc = (t * t - 4.0).sqrt();
                let p = self.eigenvector((t + disc) / 2.0);
                let q = self.eigenvector((t - disc) / 2.0);
                Ok(FixedPoints::NeutralPair(p, q))
            }
            IsomClass::Loxodromic => {
                let disc = (t * t - 4.0).sqrt();
                let (l1, l2) = ((t + disc) / 2.0, (t - disc) / 2.0);
                let (big, small) = if l1.norm() >= l2.norm() { (l1, l2) } else { (l2, l1) };
                Ok(FixedPoints::Pair {
                    attracting: self.eigenvector(big),
                    repelling: self.eigenvector(small),
                })
            }
            IsomClass::Identity => Err(MobiusError::IdentityInput),
        }
    }

    /// Axis of a map with two fixed points; parabolic and identity inputs
    /// have none.
    pub fn axis(&self, tol: &Tolerances) -> Result<Geodesic, MobiusError> {
        let fps = self.fixed_points(tol).map_err(|_| MobiusError::NoAxis)?;
        let (p, q) = fps.pair().ok_or(MobiusError::NoAxis)?;
        Geodesic::new(p, q, tol)
    }
}

impl std::ops::Mul for MoebiusMap {
    type Output = MoebiusMap;

    /// Matrix product renormalized by the principal square root of its
    /// determinant. Both factors have determinant near 1, so the root is
    /// near +1: drift is corrected and the lift sign is never flipped.
    ///
    /// The true determinant is 1 by the class invariant, so if the computed
    /// one lands far from 1 it is cancellation noise (entries of size `s`
    /// lose about `s^2 * ulp` to it), and dividing by its root would scale
    /// and phase-rotate the product arbitrarily, or produce NaN on exact
    /// cancellation. Renormalization is skipped in that regime; the
    /// projective map is unaffected either way.
    fn mul(self, rhs: MoebiusMap) -> MoebiusMap {
        let a = self.a * rhs.a + self.b * rhs.c;
        let b = self.a * rhs.b + self.b * rhs.d;
        let c = self.c * rhs.a + self.d * rhs.c;
        let d = self.c * rhs.b + self.d * rhs.d;
        let det = a * d - b * c;
        let drift = (det - Complex64::new(1.0, 0.0)).norm();
        // drift == 0 keeps exact products exact; NaN and large drift fall
        // through to the raw product.
        if !(drift > 0.0 && drift <= 0.5) {
            return MoebiusMap { a, b, c, d };
        }
        let s = det.sqrt();
        MoebiusMap { a: a / s, b: b / s, c: c / s, d: d / s }
    }
}

impl std::fmt::Display for MoebiusMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[[{:.6}{:+.6}i, {:.6}{:+.6}i], [{:.6}{:+.6}i, {:.6}{:+.6}i]]",
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re, self.d.im
        )
    }
}

impl Serialize for MoebiusMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [
            [self.a.re, self.a.im],
            [self.b.re, self.b.im],
            [self.c.re, self.c.im],
            [self.d.re, self.d.im],
        ]
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoebiusMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = <[[f64; 2]; 4]>::deserialize(d)?;
        let e: Vec<Complex64> = m.iter().map(|[re, im]| cx(*re, *im)).collect();
        // Accept a loose determinant here: files are validated against the
        // caller's tolerances when a representation is checked, and exact
        // round-trips of emitted certificates must never be rejected.
        let loose = Tolerances { det: 1e-6, ..Tolerances::default() };
        MoebiusMap::from_sl(e[0], e[1], e[2], e[3], &loose).map_err(D::Error::custom)
    }
}

/// Does `a` carry a fixed point of `b` onto the other one?
///
/// `b` must have two distinct fixed points (loxodromic or elliptic). The
/// report carries both one-sided answers; the usual predicate is
/// [`FixedPointSwap::either`].
pub fn swaps_fixed_points(
    a: &MoebiusMap,
    b: &MoebiusMap,
    tol: &Tolerances,
) -> Result<FixedPointSwap, MobiusError> {
    let fps = b.fixed_points(tol)?;
    let (p, q) = fps.pair().ok_or(MobiusError::IdentityInput)?;
    if p.chordal_to(&q) <= tol.point {
        return Err(MobiusError::IdentityInput);
    }
    Ok(FixedPointSwap {
        forward: a.apply(&p).approx_eq(&q, tol.point),
        backward: a.apply(&q).approx_eq(&p, tol.point),
    })
}

/// The elliptic involution (half-turn) whose axis is `l`.
///
/// For endpoints `(p1 : p2)` and `(q1 : q2)` the half-turn is
/// `[[p1 q2 + p2 q1, -2 p1 q1], [2 p2 q2, -(p1 q2 + p2 q1)]]` divided by
/// `i (p1 q2 - p2 q1)`, which has determinant exactly 1 and trace exactly 0,
/// so its square is minus the identity by Cayley-Hamilton.
pub fn elliptic_involution(l: &Geodesic) -> MoebiusMap {
    let (p, q) = l.endpoints();
    let (p1, p2) = (p.z1(), p.z2());
    let (q1, q2) = (q.z1(), q.z2());
    let s = p1 * q2 + p2 * q1;
    let w = p1 * q2 - p2 * q1;
    let denom = Complex64::i() * w;
    MoebiusMap {
        a: s / denom,
        b: -2.0 * p1 * q1 / denom,
        c: 2.0 * p2 * q2 / denom,
        d: -(s / denom),
    }
}

/// Absolute trace of the product of the two half-turns: zero exactly when
/// the geodesics meet orthogonally (the inversive-distance criterion).
pub fn orthogonality_residual(l: &Geodesic, m: &Geodesic) -> f64 {
    (elliptic_involution(l) * elliptic_involution(m)).trace().norm()
}

/// The common perpendicular of two disjoint geodesics.
///
/// The product of the two half-turns is loxodromic exactly when the
/// geodesics are disjoint and non-asymptotic, and its axis is the unique
/// common perpendicular. Crossing geodesics (elliptic product) and
/// asymptotic or equal ones are rejected with the crossing angle.
pub fn common_perpendicular(
    g1: &Geodesic,
    g2: &Geodesic,
    tol: &Tolerances,
) -> Result<Geodesic, MobiusError> {
    perpendicular_axis(g1, g2, tol, false)
}

/// Shared implementation of the common perpendicular. With
/// `allow_crossing`, an elliptic half-turn product is accepted and its
/// rotation axis returned: for crossing geodesics that axis passes through
/// the intersection point orthogonally to both, which is exactly what the
/// pentagon construction needs.
pub(crate) fn perpendicular_axis(
    g1: &Geodesic,
    g2: &Geodesic,
    tol: &Tolerances,
    allow_crossing: bool,
) -> Result<Geodesic, MobiusError> {
    let (p1, q1) = g1.endpoints();
    if g2.has_endpoint(&p1, tol.point) || g2.has_endpoint(&q1, tol.point) {
        return Err(MobiusError::AxesIntersect { angle: 0.0 });
    }
    let s = elliptic_involution(g1) * elliptic_involution(g2);
    match s.classify(tol) {
        IsomClass::Loxodromic => s.axis(tol),
        IsomClass::Elliptic => {
            if allow_crossing {
                s.axis(tol)
            } else {
                // Rotation by twice the crossing angle: tr = +-2 cos(angle).
                let cos = (s.trace().re.abs() / 2.0).clamp(0.0, 1.0);
                Err(MobiusError::AxesIntersect { angle: cos.acos() })
            }
        }
        _ => Err(MobiusError::AxesIntersect { angle: 0.0 }),
    }
}

/// Writes `g` as a product of two half-turns, exactly as lifts:
/// `g = s1 * s2`.
///
/// `s2` is the half-turn about a geodesic crossing the axis of `g`
/// orthogonally; `g * s2` is then itself a half-turn, and the pair is fixed
/// up by a sign so the lift product reproduces `g` on the nose. Parabolic
/// and identity inputs are rejected (no axis).
pub fn half_turn_factorization(
    g: &MoebiusMap,
    tol: &Tolerances,
) -> Result<(MoebiusMap, MoebiusMap), MobiusError> {
    let axis = g.axis(tol)?;
    let (p, q) = axis.endpoints();
    let h = MoebiusMap::frame(&p, &q)?;
    let m = Geodesic::new(
        h.apply(&SpherePoint::finite(cx(1.0, 0.0))),
        h.apply(&SpherePoint::finite(cx(-1.0, 0.0))),
        tol,
    )?;
    let s2 = elliptic_involution(&m);
    // s2^2 = -Id, so (g * s2) * s2 = -g; negate the first factor.
    let s1 = (*g * s2).negate();
    Ok((s1, s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn map(a: f64, b: f64, c: f64, d: f64) -> MoebiusMap {
        MoebiusMap::new(cx(a, 0.0), cx(b, 0.0), cx(c, 0.0), cx(d, 0.0)).unwrap()
    }

    use crate::testutil::random_sl;

    #[test]
    fn classify_trichotomy_examples() {
        let t = tol();
        assert_eq!(map(1.0, 1.0, 0.0, 1.0).classify(&t), IsomClass::Parabolic);
        assert_eq!(map(2.0, 0.0, 0.0, 0.5).classify(&t), IsomClass::Loxodromic);
        assert_eq!(map(0.0, -1.0, 1.0, 0.0).classify(&t), IsomClass::Elliptic);
        assert_eq!(MoebiusMap::identity().classify(&t), IsomClass::Identity);
        assert_eq!(MoebiusMap::identity().negate().classify(&t), IsomClass::Identity);
        // Negative real trace squared is loxodromic, not elliptic.
        let m = MoebiusMap::diagonal(cx(0.0, 2.0)).unwrap();
        assert!((m.trace_squared().re + 2.25).abs() < 1e-12);
        assert_eq!(m.classify(&t), IsomClass::Loxodromic);
    }

    #[test]
    fn strict_mode_refuses_near_parabolic() {
        let t = tol();
        // tr^2 within 1e-10 of 4 but entries far from the identity.
        let m = map(1.0 + 1e-11, 1.0, 0.0, 1.0 / (1.0 + 1e-11));
        assert!(matches!(
            m.classify_strict(&t),
            Err(MobiusError::AmbiguousClass { .. })
        ));
        assert!(matches!(
            map(2.0, 0.0, 0.0, 0.5).classify_strict(&t),
            Ok(IsomClass::Loxodromic)
        ));
        assert!(matches!(
            MoebiusMap::identity().classify_strict(&t),
            Ok(IsomClass::Identity)
        ));
    }

    #[test]
    fn fixed_points_examples() {
        let t = tol();
        // Attracting at infinity, repelling at 0 for z -> 4z.
        match map(2.0, 0.0, 0.0, 0.5).fixed_points(&t).unwrap() {
            FixedPoints::Pair { attracting, repelling } => {
                assert!(attracting.approx_eq(&SpherePoint::infinity(), t.point));
                assert!(repelling.approx_eq(&SpherePoint::finite(cx(0.0, 0.0)), t.point));
            }
            other => panic!("expected a loxodromic pair, got {other:?}"),
        }
        match map(1.0, 1.0, 0.0, 1.0).fixed_points(&t).unwrap() {
            FixedPoints::Single(p) => assert!(p.approx_eq(&SpherePoint::infinity(), t.point)),
            other => panic!("expected a single parabolic fixed point, got {other:?}"),
        }
        match map(0.0, -1.0, 1.0, 0.0).fixed_points(&t).unwrap() {
            FixedPoints::NeutralPair(p, q) => {
                let i = SpherePoint::finite(cx(0.0, 1.0));
                let mi = SpherePoint::finite(cx(0.0, -1.0));
                assert!(p.approx_eq(&i, t.point) || p.approx_eq(&mi, t.point));
                assert!(q.approx_eq(&i, t.point) || q.approx_eq(&mi, t.point));
                assert!(p.chordal_to(&q) > t.point);
            }
            other => panic!("expected an elliptic pair, got {other:?}"),
        }
        assert!(matches!(
            MoebiusMap::identity().fixed_points(&t),
            Err(MobiusError::IdentityInput)
        ));
    }

    #[test]
    fn swap_test_examples() {
        let t = tol();
        let b = map(2.0, 0.0, 0.0, 0.5);
        let r = swaps_fixed_points(&map(0.0, -1.0, 1.0, 0.0), &b, &t).unwrap();
        assert!(r.either() && r.forward && r.backward);
        let r = swaps_fixed_points(&map(1.0, 1.0, 0.0, 1.0), &b, &t).unwrap();
        assert!(!r.either());
        let r = swaps_fixed_points(&map(3.0, 0.0, 0.0, 1.0 / 3.0), &b, &t).unwrap();
        assert!(!r.either());
        // Parabolic reference map is rejected.
        assert!(matches!(
            swaps_fixed_points(&b, &map(1.0, 1.0, 0.0, 1.0), &t),
            Err(MobiusError::IdentityInput)
        ));
    }

    #[test]
    fn apply_examples() {
        let t = tol();
        let inf = SpherePoint::infinity();
        assert!(map(1.0, 1.0, 0.0, 1.0).apply(&inf).approx_eq(&inf, t.point));
        let zero = SpherePoint::finite(cx(0.0, 0.0));
        assert!(map(0.0, -1.0, 1.0, 0.0).apply(&zero).approx_eq(&inf, t.point));
        let one = SpherePoint::finite(cx(1.0, 0.0));
        let four = SpherePoint::finite(cx(4.0, 0.0));
        assert!(map(2.0, 0.0, 0.0, 0.5).apply(&one).approx_eq(&four, t.point));
    }

    #[test]
    fn involution_examples() {
        let t = tol();
        let zero = SpherePoint::finite(cx(0.0, 0.0));
        let l = Geodesic::new(zero, SpherePoint::infinity(), &t).unwrap();
        let s = elliptic_involution(&l);
        // z -> -z is diag(i, -i).
        assert!(s.entry_dist(&MoebiusMap::new(cx(0.0, 1.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(0.0, -1.0)).unwrap()) < 1e-12);
        let l = Geodesic::new(
            SpherePoint::finite(cx(1.0, 0.0)),
            SpherePoint::finite(cx(-1.0, 0.0)),
            &t,
        )
        .unwrap();
        let s = elliptic_involution(&l);
        // z -> 1/z sends 2 to 0.5.
        let img = s.apply(&SpherePoint::finite(cx(2.0, 0.0)));
        assert!(img.approx_eq(&SpherePoint::finite(cx(0.5, 0.0)), t.point));
        assert_eq!(s.classify(&t), IsomClass::Elliptic);
    }

    #[test]
    fn involution_generic_properties() {
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = SpherePoint::finite(cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)));
            let q = SpherePoint::finite(cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)));
            // The half-turn's entries scale like the inverse endpoint
            // separation; stay in the generic regime here.
            if p.chordal_to(&q) <= 1e-2 {
                continue;
            }
            let l = Geodesic::new(p, q, &t).unwrap();
            let s = elliptic_involution(&l);
            let scale = entry_scale(&s);
            assert!((s.det() - 1.0).norm() <= 1e-13 * scale * scale);
            assert!(s.trace().norm() <= 1e-12);
            // Square is minus the identity entrywise.
            assert!((s * s).entry_dist(&MoebiusMap::identity().negate()) <= 1e-9);
            // Fixed points are the endpoints.
            let fps = s.fixed_points(&t).unwrap();
            let (u, v) = fps.pair().unwrap();
            let axis = Geodesic::new(u, v, &t).unwrap();
            assert!(axis.same_as(&l, 1e-7));
        }
    }

    #[test]
    fn common_perpendicular_examples() {
        let t = tol();
        let vertical = Geodesic::new(
            SpherePoint::finite(cx(0.0, 0.0)),
            SpherePoint::infinity(),
            &t,
        )
        .unwrap();
        let g2 = Geodesic::new(
            SpherePoint::finite(cx(1.0, 0.0)),
            SpherePoint::finite(cx(2.0, 0.0)),
            &t,
        )
        .unwrap();
        let perp = common_perpendicular(&vertical, &g2, &t).unwrap();
        let r2 = 2.0f64.sqrt();
        let expected = Geodesic::new(
            SpherePoint::finite(cx(r2, 0.0)),
            SpherePoint::finite(cx(-r2, 0.0)),
            &t,
        )
        .unwrap();
        assert!(perp.same_as(&expected, 1e-9));
        assert!(orthogonality_residual(&perp, &vertical) <= 1e-9);
        assert!(orthogonality_residual(&perp, &g2) <= 1e-9);

        // Both pass through the point at height 1 above the origin.
        let g3 = Geodesic::new(
            SpherePoint::finite(cx(-1.0, 0.0)),
            SpherePoint::finite(cx(1.0, 0.0)),
            &t,
        )
        .unwrap();
        assert!(matches!(
            common_perpendicular(&vertical, &g3, &t),
            Err(MobiusError::AxesIntersect { .. })
        ));
        // The crossing-tolerant variant returns their common orthogonal.
        let axis = perpendicular_axis(&vertical, &g3, &t, true).unwrap();
        assert!(orthogonality_residual(&axis, &vertical) <= 1e-9);
        assert!(orthogonality_residual(&axis, &g3) <= 1e-9);

        let g4 = Geodesic::new(
            SpherePoint::finite(cx(3.0, 0.0)),
            SpherePoint::finite(cx(6.0, 0.0)),
            &t,
        )
        .unwrap();
        let perp = common_perpendicular(&vertical, &g4, &t).unwrap();
        let r18 = 18.0f64.sqrt();
        let expected = Geodesic::new(
            SpherePoint::finite(cx(r18, 0.0)),
            SpherePoint::finite(cx(-r18, 0.0)),
            &t,
        )
        .unwrap();
        assert!(perp.same_as(&expected, 1e-9));
    }

    // Independent oracle for the two frozen endpoint values above: a
    // geodesic with real endpoints (p, q) is the half-circle over the
    // real line with center (p+q)/2 and radius |p-q|/2, and it crosses the
    // vertical line over 0 orthogonally exactly when the two boundary
    // circles are orthogonal in the plane: d^2 = r1^2 + r2^2.
    #[test]
    fn perpendicular_endpoints_match_planar_orthogonality() {
        for (p, q) in [(1.0f64, 2.0), (3.0, 6.0)] {
            let r = (p * q).sqrt();
            let center = (p + q) / 2.0;
            let radius = (q - p) / 2.0;
            // Circle through (r, -r) centered 0; circle through (p, q).
            let d2 = center * center;
            assert!((d2 - (radius * radius + r * r)).abs() < 1e-12);
        }
        assert!((2.0f64.sqrt() * 2.0f64.sqrt() - 2.0).abs() < 1e-12);
        assert!((18.0f64.sqrt() * 18.0f64.sqrt() - 18.0).abs() < 1e-9);
    }

    #[test]
    fn common_perpendicular_rejects_shared_endpoint() {
        let t = tol();
        let g1 = Geodesic::new(
            SpherePoint::finite(cx(0.0, 0.0)),
            SpherePoint::infinity(),
            &t,
        )
        .unwrap();
        let g2 = Geodesic::new(
            SpherePoint::finite(cx(0.0, 0.0)),
            SpherePoint::finite(cx(1.0, 0.0)),
            &t,
        )
        .unwrap();
        assert!(matches!(
            common_perpendicular(&g1, &g2, &t),
            Err(MobiusError::AxesIntersect { .. })
        ));
    }

    #[test]
    fn trace_identity_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a = random_sl(&mut rng);
            let b = random_sl(&mut rng);
            let lhs = (a * b).trace() + (a * b.inverse()).trace();
            let rhs = a.trace() * b.trace();
            assert!(
                (lhs - rhs).norm() <= 1e-9,
                "trace identity violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn classification_is_conjugation_invariant() {
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let m = random_sl(&mut rng);
            let g = random_sl(&mut rng);
            // Skip the ambiguous band: conjugation can move tr^2 across it.
            if (m.trace_squared() - 4.0).norm() < 1e-4 {
                continue;
            }
            assert_eq!(m.classify(&t), m.conjugate_by(&g).classify(&t));
        }
    }

    #[test]
    fn fixed_points_are_fixed() {
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let m = random_sl(&mut rng);
            if m.classify(&t) == IsomClass::Identity {
                continue;
            }
            if (m.trace_squared() - 4.0).norm() < 1e-6 {
                continue;
            }
            let Ok(fps) = m.fixed_points(&t) else { continue };
            for p in fps.points() {
                let moved = m.apply(&p).chordal_to(&p);
                assert!(moved <= 10.0 * t.point, "fixed point moved by {moved}");
            }
        }
    }

    /// Largest entry modulus, the right scale for relative error bounds:
    /// recomputing a determinant near 1 from entries of size s loses about
    /// s^2 ulps to cancellation.
    fn entry_scale(m: &MoebiusMap) -> f64 {
        [m.a.norm(), m.b.norm(), m.c.norm(), m.d.norm()]
            .into_iter()
            .fold(1.0, f64::max)
    }

    #[test]
    fn products_renormalize_without_sign_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let mut acc = MoebiusMap::identity();
            let mut word = Vec::new();
            let mut smax = 1.0f64;
            for _ in 0..25 {
                let g = random_sl(&mut rng);
                word.push(g);
                acc = acc * g;
                smax = smax.max(entry_scale(&acc));
            }
            let s = entry_scale(&acc);
            assert!((acc.det() - 1.0).norm() <= 1e-12 * s * s);
            // Rebuild with the opposite parenthesization: same lift, same
            // sign, up to error on the scale of the worst intermediate.
            let mut acc2 = MoebiusMap::identity();
            for g in word.iter().rev() {
                acc2 = *g * acc2;
                smax = smax.max(entry_scale(&acc2));
            }
            assert!(acc.entry_dist(&acc2) <= 1e-7 * smax);
            assert!(acc.entry_dist(&acc2) < acc.entry_dist(&acc2.negate()));
        }
    }

    #[test]
    fn pow_matches_repeated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let g = random_sl(&mut rng);
            let mut acc = MoebiusMap::identity();
            for _ in 0..7 {
                acc = acc * g;
            }
            assert!(g.pow(7).entry_dist(&acc) <= 1e-10 * entry_scale(&acc));
            assert!(g.pow(-3).entry_dist(&g.inverse().pow(3)) <= 1e-12 * entry_scale(&g.pow(3)));
            assert!(g.pow(0).entry_dist(&MoebiusMap::identity()) <= 1e-12);
        }
    }

    #[test]
    fn half_turn_factorization_reconstructs_the_map() {
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut tested = 0;
        for _ in 0..400 {
            let g = random_sl(&mut rng);
            if g.axis(&t).is_err() {
                continue;
            }
            let (s1, s2) = half_turn_factorization(&g, &t).unwrap();
            assert!((s1 * s1).psl_dist(&MoebiusMap::identity()) <= 1e-8);
            assert!((s2 * s2).psl_dist(&MoebiusMap::identity()) <= 1e-8);
            // Exact lift equality, not only PSL equality.
            assert!((s1 * s2).entry_dist(&g) <= 1e-8);
            tested += 1;
        }
        assert!(tested > 300, "only {tested} usable samples");
    }

    #[test]
    fn sphere_point_chordal_basics() {
        let zero = SpherePoint::finite(cx(0.0, 0.0));
        let inf = SpherePoint::infinity();
        assert!((zero.chordal_to(&inf) - 2.0).abs() < 1e-15);
        assert!(zero.chordal_to(&zero) == 0.0);
        let far = SpherePoint::finite(cx(1e12, 0.0));
        assert!(far.chordal_to(&inf) < 1e-11);
        assert_eq!(far.to_complex().unwrap().re, 1e12);
        assert!(inf.to_complex().is_none());
        assert!(matches!(
            SpherePoint::from_homogeneous(cx(0.0, 0.0), cx(0.0, 0.0)),
            Err(MobiusError::ZeroVector)
        ));
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let m = map(0.0, -1.0, 1.0, 0.0);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[0.0,0.0],[-1.0,0.0],[1.0,0.0],[0.0,0.0]]");
        let back: MoebiusMap = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let p = SpherePoint::finite(cx(0.25, -3.5));
        let s = serde_json::to_string(&p).unwrap();
        let back: SpherePoint = serde_json::from_str(&s).unwrap();
        assert!(p.approx_eq(&back, 1e-15));
    }
}
