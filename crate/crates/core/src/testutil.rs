//! Seeded random generators shared by the unit tests.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mobius::{cx, MoebiusMap};

/// A random determinant-1 matrix with entries of moderate size.
pub(crate) fn random_sl(rng: &mut ChaCha8Rng) -> MoebiusMap {
    loop {
        let e: Vec<Complex64> = (0..4)
            .map(|_| cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let det = e[0] * e[3] - e[1] * e[2];
        if det.norm() > 0.1 {
            return MoebiusMap::new(e[0], e[1], e[2], e[3]).unwrap();
        }
    }
}
