//! Numerical toolkit for representations of surface groups into PSL(2,C).
//!
//! The crate takes a finite set of Moebius transformations, regarded as the
//! images of the standard generators of a closed surface group (or of a
//! hyperbolic orbifold group generated by half-turns), and tries to certify
//! geometric structure: free ping-pong pairs, pants decompositions whose
//! cuffs are loxodromic, pentagon witnesses built from five involutions, and
//! branched affine structures realised by explicit plane polygons.
//!
//! Everything is double precision. Every predicate that could be corrupted
//! by rounding takes explicit tolerances from [`config::Tolerances`] and
//! every search loop is capped by [`config::Budgets`]; procedures report
//! honest failure instead of looping or guessing.
//!
//! Module map:
//!
//! * [`mobius`]: Moebius maps, points on the Riemann sphere, classification,
//!   fixed points, common perpendiculars, elliptic involutions.
//! * [`disk`]: disks and spherical caps, exact images under Moebius maps,
//!   chordal gaps and containment margins.
//! * [`hpoint`]: points of hyperbolic 3-space as Hermitian matrices, used by
//!   the elementarity test.
//! * [`group`]: words, presentations, representations, evaluation, the
//!   second Stiefel-Whitney class, and the elementarity decision.
//! * [`mcg`]: mapping class substitutions (twists, swaps, handle moves),
//!   relator-safety validation, move logs.
//! * [`analysis`]: normalisation searches that make designated images
//!   loxodromic, the special handle arrangement, ping-pong certification.
//! * [`schottky`]: cut procedures, pants decompositions, pentagon detection
//!   and witnesses for genus two.
//! * [`projective`]: branched affine structures from a loxodromic pair and
//!   the explicit heptagon construction.
//! * [`corpus`]: seeded generators of test representations (Schottky-glued,
//!   pentagon, near-elementary, right-angled pentagon fixture).
//! * [`report`]: serialisable run reports with digests, for the CLI and the
//!   replay verifier.

pub mod analysis;
pub mod config;
pub mod corpus;
pub mod disk;
pub mod group;
pub mod hpoint;
pub mod mcg;
pub mod mobius;
pub mod projective;
pub mod report;
pub mod schottky;

#[cfg(test)]
pub(crate) mod testutil;

pub use config::{Budgets, Tolerances};
pub use mobius::{MoebiusMap, SpherePoint};
