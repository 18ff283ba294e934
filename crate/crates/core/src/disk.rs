//! Closed round disks on the Riemann sphere: Euclidean circles with a side
//! flag, and half-planes (circles through infinity).
//!
//! Moebius maps send round disks to round disks; [`map_disk`] computes the
//! image exactly as a circle or line via the symmetric-point trick rather
//! than by fitting sample points. For metric questions (disjointness gaps,
//! containment margins) every disk is converted to a spherical cap, where
//! chordal geometry reduces to angles at the sphere's center.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mobius::{cx, MobiusError, MoebiusMap, SpherePoint};

/// A closed round disk on the Riemann sphere.
///
/// `Circle` with `interior = true` is the Euclidean disk `|z - center| <=
/// radius`; with `interior = false` its complement on the sphere, which
/// contains infinity. `Halfplane` with `positive = true` is `Re(conj(normal)
/// z) >= offset`; both half-plane sides contain infinity on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disk {
    Circle {
        center: Complex64,
        radius: f64,
        interior: bool,
    },
    Halfplane {
        normal: Complex64,
        offset: f64,
        positive: bool,
    },
}

/// A spherical cap `{x in S^2 : x . axis >= cos_alpha}` on the unit sphere,
/// the metric avatar of a [`Disk`].
#[derive(Debug, Clone, Copy)]
pub struct Cap {
    pub axis: [f64; 3],
    pub cos_alpha: f64,
}

/// Stereographic image of a sphere point on the unit sphere in R^3, with
/// infinity at the north pole (0, 0, 1).
pub fn stereographic(p: &SpherePoint) -> [f64; 3] {
    let (z1, z2) = (p.z1(), p.z2());
    let n = z1.norm_sqr() + z2.norm_sqr();
    let cross = z1 * z2.conj();
    [2.0 * cross.re / n, 2.0 * cross.im / n, (z1.norm_sqr() - z2.norm_sqr()) / n]
}

fn dot(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn angle_between(u: [f64; 3], v: [f64; 3]) -> f64 {
    dot(u, v).clamp(-1.0, 1.0).acos()
}

impl Cap {
    /// Angular radius in (0, pi).
    pub fn alpha(&self) -> f64 {
        self.cos_alpha.clamp(-1.0, 1.0).acos()
    }

    /// Signed angular depth of a point: positive inside, negative outside.
    pub fn angular_depth(&self, p: &SpherePoint) -> f64 {
        self.alpha() - angle_between(stereographic(p), self.axis)
    }
}

/// Signed chordal equivalent of an angular separation on the unit sphere.
fn chord(angle: f64) -> f64 {
    2.0 * (angle / 2.0).sin()
}

impl Disk {
    /// Euclidean circle disk; the radius must be positive and finite.
    pub fn circle(center: Complex64, radius: f64, interior: bool) -> Result<Self, MobiusError> {
        if !(radius.is_finite() && radius > 0.0) || !center.is_finite() {
            return Err(MobiusError::Degenerate);
        }
        Ok(Disk::Circle { center, radius, interior })
    }

    /// Half-plane disk; the normal is rescaled to unit length.
    pub fn halfplane(normal: Complex64, offset: f64, positive: bool) -> Result<Self, MobiusError> {
        let n = normal.norm();
        if !(n.is_finite() && n > 0.0) || !offset.is_finite() {
            return Err(MobiusError::Degenerate);
        }
        Ok(Disk::Halfplane { normal: normal / n, offset: offset / n, positive })
    }

    /// The closure of the complement: the same boundary, the other side.
    pub fn complement(&self) -> Disk {
        match *self {
            Disk::Circle { center, radius, interior } => {
                Disk::Circle { center, radius, interior: !interior }
            }
            Disk::Halfplane { normal, offset, positive } => {
                Disk::Halfplane { normal, offset, positive: !positive }
            }
        }
    }

    /// The spherical cap covering the same points.
    pub fn cap(&self) -> Cap {
        match *self {
            Disk::Circle { center, radius, interior } => {
                let t = center.norm_sqr();
                let n = [2.0 * center.re, 2.0 * center.im, t - radius * radius - 1.0];
                let e = 1.0 + t - radius * radius;
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                let sign = if interior { 1.0 } else { -1.0 };
                Cap {
                    axis: [sign * n[0] / len, sign * n[1] / len, sign * n[2] / len],
                    cos_alpha: sign * e / len,
                }
            }
            Disk::Halfplane { normal, offset, positive } => {
                let n = [normal.re, normal.im, offset];
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                let sign = if positive { 1.0 } else { -1.0 };
                Cap {
                    axis: [sign * n[0] / len, sign * n[1] / len, sign * n[2] / len],
                    cos_alpha: sign * offset / len,
                }
            }
        }
    }

    /// Closed membership (no tolerance; use [`Disk::chordal_depth`] when a
    /// quantitative margin matters).
    pub fn contains(&self, p: &SpherePoint) -> bool {
        self.chordal_depth(p) >= 0.0
    }

    /// Signed chordal depth of a point: positive inside, negative outside,
    /// zero on the boundary.
    pub fn chordal_depth(&self, p: &SpherePoint) -> f64 {
        chord(self.cap().angular_depth(p))
    }

    /// Points spread over the boundary circle. For half-planes the line is
    /// sampled by a tangent substitution and the point at infinity (which
    /// lies on every line's closure) is appended.
    pub fn boundary_samples(&self, count: usize) -> Vec<SpherePoint> {
        match *self {
            Disk::Circle { center, radius, .. } => (0..count)
                .map(|k| {
                    let phi = 2.0 * std::f64::consts::PI * (k as f64) / (count as f64);
                    SpherePoint::finite(center + radius * cx(phi.cos(), phi.sin()))
                })
                .collect(),
            Disk::Halfplane { normal, offset, .. } => {
                let tangent = Complex64::i() * normal;
                let mut pts: Vec<SpherePoint> = (0..count)
                    .map(|k| {
                        let u = ((k as f64) + 0.5) / (count as f64) - 0.5;
                        let t = (std::f64::consts::PI * u).tan();
                        SpherePoint::finite(offset * normal + t * tangent)
                    })
                    .collect();
                pts.push(SpherePoint::infinity());
                pts
            }
        }
    }
}

/// Chordal gap between two disks: 0 when they touch or overlap, otherwise
/// the chordal distance between the two caps.
pub fn chordal_gap(d1: &Disk, d2: &Disk) -> f64 {
    let (c1, c2) = (d1.cap(), d2.cap());
    let sep = angle_between(c1.axis, c2.axis) - c1.alpha() - c2.alpha();
    if sep <= 0.0 {
        0.0
    } else {
        chord(sep)
    }
}

/// Signed chordal containment margin of `inner` inside `outer`: positive
/// when `inner` sits strictly inside `outer` with that much room.
pub fn containment_margin(inner: &Disk, outer: &Disk) -> f64 {
    let (ci, co) = (inner.cap(), outer.cap());
    chord(co.alpha() - ci.alpha() - angle_between(ci.axis, co.axis))
}

/// Test points on either side of a boundary, used to orient image disks by
/// membership instead of sign bookkeeping.
fn side_samples(d: &Disk) -> Vec<SpherePoint> {
    match *d {
        Disk::Circle { center, radius, interior } => {
            if interior {
                vec![
                    SpherePoint::finite(center),
                    SpherePoint::finite(center + cx(0.5 * radius, 0.0)),
                    SpherePoint::finite(center + cx(0.0, -0.5 * radius)),
                ]
            } else {
                vec![
                    SpherePoint::infinity(),
                    SpherePoint::finite(center + cx(4.0 * radius, 0.0)),
                    SpherePoint::finite(center + cx(0.0, 4.0 * radius)),
                ]
            }
        }
        Disk::Halfplane { normal, offset, positive } => {
            let sign = if positive { 1.0 } else { -1.0 };
            let foot = offset * normal;
            let tangent = Complex64::i() * normal;
            vec![
                SpherePoint::finite(foot + sign * normal),
                SpherePoint::finite(foot + sign * 3.0 * normal + tangent),
                SpherePoint::finite(foot + sign * 2.0 * normal - 2.0 * tangent),
            ]
        }
    }
}

/// The exact image of a disk under a Moebius map.
///
/// The image boundary is computed in closed form: the image circle's center
/// is the image of the point symmetric to the map's pole across the source
/// boundary; when the pole lies on the boundary the image is a line through
/// the images of three boundary points. The image's side flag is fixed by
/// mapping an interior test point, which keeps the orientation logic out of
/// the formulas.
pub fn map_disk(m: &MoebiusMap, d: &Disk) -> Disk {
    let affine = m.c == cx(0.0, 0.0);
    let pole = if affine { None } else { Some(-m.d / m.c) };

    let boundary = match *d {
        Disk::Circle { center, radius, .. } => match pole {
            None => {
                // z -> (a/d) z + b/d sends the circle to a circle.
                let scale = m.a / m.d;
                ImageBoundary::Circle {
                    center: scale * center + m.b / m.d,
                    radius: scale.norm() * radius,
                }
            }
            Some(p) => {
                let off_boundary = ((p - center).norm() - radius).abs();
                if off_boundary <= 1e-11 * (1.0 + p.norm()) {
                    // Pole on the boundary: the image is a line.
                    let theta = (p - center).arg();
                    let pts = [0.5, 1.0, 1.5].map(|h| {
                        let phi = theta + h * std::f64::consts::PI;
                        apply_finite(m, center + radius * cx(phi.cos(), phi.sin()))
                    });
                    line_through(pts)
                } else {
                    // Image circle center = image of the pole reflected
                    // across the source circle.
                    let diff = p - center;
                    let sym = if diff.norm() < 1e-14 * (1.0 + radius) {
                        SpherePoint::infinity()
                    } else {
                        SpherePoint::finite(center + radius * radius / diff.conj())
                    };
                    let w0 = m
                        .apply(&sym)
                        .to_complex()
                        .expect("pole off the boundary gives a finite image center");
                    // Boundary point farthest from the pole, for stability.
                    let dir = if diff.norm() < 1e-14 * (1.0 + radius) {
                        cx(1.0, 0.0)
                    } else {
                        diff / diff.norm()
                    };
                    let wb = apply_finite(m, center + radius * dir);
                    ImageBoundary::Circle { center: w0, radius: (wb - w0).norm() }
                }
            }
        },
        Disk::Halfplane { normal, offset, .. } => {
            let foot = offset * normal;
            let tangent = Complex64::i() * normal;
            match pole {
                None => {
                    // Affine image of a line is a line.
                    let pts = [-1.0, 0.0, 1.0].map(|t| apply_finite(m, foot + t * tangent));
                    line_through(pts)
                }
                Some(p) => {
                    let dist = (p - foot).re * normal.re + (p - foot).im * normal.im;
                    if dist.abs() <= 1e-11 * (1.0 + p.norm()) {
                        // Pole on the line: image is again a line. Sample
                        // away from the pole along the tangent direction.
                        let pts = [1.0, 2.0, -1.0].map(|t| apply_finite(m, p + t * tangent));
                        line_through(pts)
                    } else {
                        // Reflection of the pole across the line, for a unit
                        // normal: p + 2 (offset - <p, n>) n.
                        let sym =
                            p + 2.0 * (offset - (p.re * normal.re + p.im * normal.im)) * normal;
                        let w0 = apply_finite(m, sym);
                        let wb = apply_finite(m, p + (offset - (p.re * normal.re + p.im * normal.im)) * normal);
                        ImageBoundary::Circle { center: w0, radius: (wb - w0).norm() }
                    }
                }
            }
        }
    };

    // Orient the image by membership of a mapped test point chosen far from
    // the pole.
    let pole_pt = pole.map(SpherePoint::finite);
    let test = side_samples(d)
        .into_iter()
        .max_by(|x, y| {
            let dx = pole_pt.as_ref().map_or(1.0, |pp| x.chordal_to(pp));
            let dy = pole_pt.as_ref().map_or(1.0, |pp| y.chordal_to(pp));
            dx.total_cmp(&dy)
        })
        .expect("side samples are never empty");
    let image_test = m.apply(&test);

    match boundary {
        ImageBoundary::Circle { center, radius } => {
            let inside = match image_test.to_complex() {
                Some(w) => (w - center).norm() <= radius,
                None => false,
            };
            Disk::Circle { center, radius, interior: inside }
        }
        ImageBoundary::Line { normal, offset } => {
            let positive = match image_test.to_complex() {
                Some(w) => w.re * normal.re + w.im * normal.im >= offset,
                // Infinity lies on the line's closure; fall back to a second
                // sample (cannot happen: test points avoid the pole).
                None => true,
            };
            Disk::Halfplane { normal, offset, positive }
        }
    }
}

enum ImageBoundary {
    Circle { center: Complex64, radius: f64 },
    Line { normal: Complex64, offset: f64 },
}

fn apply_finite(m: &MoebiusMap, z: Complex64) -> Complex64 {
    m.apply(&SpherePoint::finite(z))
        .to_complex()
        .expect("image expected to be finite")
}

fn line_through(pts: [Complex64; 3]) -> ImageBoundary {
    let dir = pts[1] - pts[0];
    let dir = dir / dir.norm();
    let normal = Complex64::i() * dir;
    let offset = pts[0].re * normal.re + pts[0].im * normal.im;
    debug_assert!(
        (pts[2].re * normal.re + pts[2].im * normal.im - offset).abs()
            <= 1e-6 * (1.0 + pts[2].norm()),
        "image points are not collinear"
    );
    ImageBoundary::Line { normal, offset }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DiskRepr {
    Circle {
        center: [f64; 2],
        radius: f64,
        side: String,
    },
    Halfplane {
        normal: [f64; 2],
        offset: f64,
        side: String,
    },
}

impl Serialize for Disk {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match *self {
            Disk::Circle { center, radius, interior } => DiskRepr::Circle {
                center: [center.re, center.im],
                radius,
                side: if interior { "interior" } else { "exterior" }.into(),
            },
            Disk::Halfplane { normal, offset, positive } => DiskRepr::Halfplane {
                normal: [normal.re, normal.im],
                offset,
                side: if positive { "positive" } else { "negative" }.into(),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Disk {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match DiskRepr::deserialize(d)? {
            DiskRepr::Circle { center, radius, side } => {
                let interior = match side.as_str() {
                    "interior" => true,
                    "exterior" => false,
                    other => return Err(D::Error::custom(format!("unknown circle side {other:?}"))),
                };
                Disk::circle(cx(center[0], center[1]), radius, interior).map_err(D::Error::custom)
            }
            DiskRepr::Halfplane { normal, offset, side } => {
                let positive = match side.as_str() {
                    "positive" => true,
                    "negative" => false,
                    other => return Err(D::Error::custom(format!("unknown half-plane side {other:?}"))),
                };
                Disk::halfplane(cx(normal[0], normal[1]), offset, positive).map_err(D::Error::custom)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_circle() -> Disk {
        Disk::circle(cx(0.0, 0.0), 1.0, true).unwrap()
    }

    #[test]
    fn translate_unit_disk() {
        let m = MoebiusMap::translation(cx(4.0, 0.0));
        let img = map_disk(&m, &unit_circle());
        match img {
            Disk::Circle { center, radius, interior } => {
                assert!((center - cx(4.0, 0.0)).norm() < 1e-12);
                assert!((radius - 1.0).abs() < 1e-12);
                assert!(interior);
            }
            other => panic!("expected a circle, got {other:?}"),
        }
    }

    #[test]
    fn inversion_sends_small_disk_to_exterior() {
        // z -> 1/z as a determinant-1 matrix.
        let m = MoebiusMap::new(cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)).unwrap();
        let d = Disk::circle(cx(0.0, 0.0), 0.5, true).unwrap();
        match map_disk(&m, &d) {
            Disk::Circle { center, radius, interior } => {
                assert!(center.norm() < 1e-12);
                assert!((radius - 2.0).abs() < 1e-12);
                assert!(!interior, "image must contain infinity");
            }
            other => panic!("expected a circle, got {other:?}"),
        }
    }

    #[test]
    fn scaling_moves_halfplane() {
        // z -> 2z on Re z >= 1 gives Re z >= 2.
        let m = MoebiusMap::diagonal(cx(2.0f64.sqrt(), 0.0)).unwrap();
        let d = Disk::halfplane(cx(1.0, 0.0), 1.0, true).unwrap();
        match map_disk(&m, &d) {
            Disk::Halfplane { normal, offset, positive } => {
                // Same point set whichever sign convention came out.
                let sign = if positive { 1.0 } else { -1.0 };
                assert!((sign * normal - cx(1.0, 0.0)).norm() < 1e-12);
                assert!((sign * offset - 2.0).abs() < 1e-12);
            }
            other => panic!("expected a half-plane, got {other:?}"),
        }
    }

    #[test]
    fn inversion_of_halfplane_is_disk() {
        let m = MoebiusMap::new(cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)).unwrap();
        let d = Disk::halfplane(cx(1.0, 0.0), 1.0, true).unwrap();
        match map_disk(&m, &d) {
            Disk::Circle { center, radius, interior } => {
                assert!((center - cx(0.5, 0.0)).norm() < 1e-12);
                assert!((radius - 0.5).abs() < 1e-12);
                assert!(interior);
            }
            other => panic!("expected a circle, got {other:?}"),
        }
    }

    #[test]
    fn pole_on_boundary_gives_line() {
        // z -> 1/z on |z - 1| = 1: pole 0 sits on the boundary; the image is
        // the line Re w = 1/2, and the disk interior (containing the pole)
        // maps to the side containing infinity, i.e. Re w <= 1/2... the
        // image of the center 1 is 1, so the interior maps to Re w >= 1/2.
        let m = MoebiusMap::new(cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)).unwrap();
        let d = Disk::circle(cx(1.0, 0.0), 1.0, true).unwrap();
        match map_disk(&m, &d) {
            Disk::Halfplane { normal, offset, positive } => {
                let signed = if positive { 1.0 } else { -1.0 };
                let n = signed * normal;
                let o = signed * offset;
                assert!((n - cx(1.0, 0.0)).norm() < 1e-9, "normal {n}");
                assert!((o - 0.5).abs() < 1e-9, "offset {o}");
            }
            other => panic!("expected a half-plane, got {other:?}"),
        }
    }

    #[test]
    fn membership_commutes_with_mapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let m = crate::testutil::random_sl(&mut rng);
            let d = random_disk(&mut rng);
            let img = map_disk(&m, &d);
            for p in test_points(&d, &mut rng) {
                // Skip points too close to the boundary for a clean verdict.
                if d.chordal_depth(&p).abs() < 1e-6 {
                    continue;
                }
                let q = m.apply(&p);
                assert_eq!(
                    d.contains(&p),
                    img.contains(&q),
                    "membership broke for {d:?} under {m}"
                );
            }
        }
    }

    #[test]
    fn cap_gap_matches_sampled_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..40 {
            let d1 = random_disk(&mut rng);
            let d2 = random_disk(&mut rng);
            let gap = chordal_gap(&d1, &d2);
            if gap <= 1e-3 {
                continue;
            }
            let mut sampled = f64::INFINITY;
            for p in d1.boundary_samples(96) {
                for q in d2.boundary_samples(96) {
                    sampled = sampled.min(p.chordal_to(&q));
                }
            }
            // The boundary-to-boundary distance can only exceed the cap gap,
            // and with 96 samples it should come close.
            assert!(sampled >= gap - 1e-9, "sampled {sampled} below gap {gap}");
            assert!(sampled <= gap + 0.02, "sampled {sampled} far above gap {gap}");
        }
    }

    #[test]
    fn containment_margin_sign() {
        let small = Disk::circle(cx(0.0, 0.0), 0.5, true).unwrap();
        let big = unit_circle();
        assert!(containment_margin(&small, &big) > 0.0);
        assert!(containment_margin(&big, &small) < 0.0);
        let far = Disk::circle(cx(9.0, 0.0), 0.5, true).unwrap();
        assert!(containment_margin(&far, &big) < 0.0);
        // A disk is contained in the complement of a distant disk.
        assert!(containment_margin(&far, &big.complement()) > 0.0);
    }

    #[test]
    fn halfplane_cap_membership() {
        let d = Disk::halfplane(cx(0.0, 1.0), -1.0, true).unwrap();
        assert!(d.contains(&SpherePoint::finite(cx(3.0, 5.0))));
        assert!(d.contains(&SpherePoint::infinity()));
        assert!(!d.contains(&SpherePoint::finite(cx(0.0, -2.0))));
        assert!(d.complement().contains(&SpherePoint::finite(cx(0.0, -2.0))));
    }

    #[test]
    fn serde_round_trip() {
        let disks = [
            unit_circle(),
            Disk::circle(cx(1.5, -2.0), 0.25, false).unwrap(),
            Disk::halfplane(cx(0.6, 0.8), 1.25, false).unwrap(),
        ];
        for d in disks {
            let s = serde_json::to_string(&d).unwrap();
            let back: Disk = serde_json::from_str(&s).unwrap();
            assert_eq!(d, back, "round trip through {s}");
        }
    }

    fn random_disk(rng: &mut ChaCha8Rng) -> Disk {
        if rng.gen_bool(0.7) {
            Disk::circle(
                cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                rng.gen_range(0.2..1.5),
                rng.gen_bool(0.5),
            )
            .unwrap()
        } else {
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            Disk::halfplane(cx(phi.cos(), phi.sin()), rng.gen_range(-1.5..1.5), rng.gen_bool(0.5))
                .unwrap()
        }
    }

    fn test_points(d: &Disk, rng: &mut ChaCha8Rng) -> Vec<SpherePoint> {
        let mut pts = side_samples(d);
        pts.extend(side_samples(&d.complement()));
        pts.extend(d.boundary_samples(8));
        for _ in 0..8 {
            pts.push(SpherePoint::finite(cx(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            )));
        }
        pts
    }
}
