//! Surface-group and orbifold-group presentations, words over their
//! generators, and representation evaluation.
//!
//! Two presentation families appear. Closed or bordered surface groups have
//! generators `a1, b1, ..., ag, bg, c1, ..., cn`; the closed relator is
//! `[a_g, b_g] ... [a_1, b_1]` with `[x, y] = y^-1 x^-1 y x`, and bordered
//! groups are kept free. The genus-2 group embeds into the hyperbolic
//! orbifold group generated by six half-turns `q1, ..., q6` subject to
//! `q_i^2 = 1` and `q1 q2 q3 q4 q5 q6 = 1`; the embedding [`iota`] and the
//! lifting obstruction [`sw_class`] live here, together with the
//! elementarity decision procedure.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::config::{Budgets, Tolerances};
use crate::hpoint::HPoint;
use crate::mobius::{IsomClass, MobiusError, MoebiusMap, SpherePoint};

/// Errors of the group layer.
#[derive(Debug, Error)]
pub enum GroupError {
    #[error("unknown generator {name:?}")]
    UnknownGenerator { name: String },
    #[error("generator index {index} out of range (presentation has {count})")]
    BadIndex { index: usize, count: usize },
    #[error("relator violated: residual {residual:.3e}")]
    RelatorViolation { residual: f64 },
    #[error("expected {expected} presentation")]
    WrongPresentation { expected: &'static str },
    #[error("got {got} images for {want} generators")]
    ImageCount { got: usize, want: usize },
    #[error("cannot parse word token {token:?}: {msg}")]
    Parse { token: String, msg: String },
    #[error(transparent)]
    Mobius(#[from] MobiusError),
}

/// The two presentation families of the toolkit.
///
/// `Surface { genus, boundary }` is free when `boundary >= 1` (all
/// generators kept, no relator) and carries the closed surface relator when
/// `boundary = 0`. `Orbifold6` is the group generated by six involutions
/// with `q1 q2 q3 q4 q5 q6 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Presentation {
    Surface { genus: usize, boundary: usize },
    Orbifold6,
}

impl Presentation {
    pub fn generator_count(&self) -> usize {
        match *self {
            Presentation::Surface { genus, boundary } => 2 * genus + boundary,
            Presentation::Orbifold6 => 6,
        }
    }

    /// Index of the handle generators `a_k`, `b_k` (1-based handle number).
    pub fn a(k: usize) -> usize {
        2 * (k - 1)
    }

    pub fn b(k: usize) -> usize {
        2 * (k - 1) + 1
    }

    /// Index of the orbifold generator `q_k` (1-based).
    pub fn q(k: usize) -> usize {
        k - 1
    }

    pub fn generator_name(&self, index: usize) -> String {
        match *self {
            Presentation::Surface { genus, .. } => {
                if index < 2 * genus {
                    let k = index / 2 + 1;
                    if index.is_multiple_of(2) {
                        format!("a{k}")
                    } else {
                        format!("b{k}")
                    }
                } else {
                    format!("c{}", index - 2 * genus + 1)
                }
            }
            Presentation::Orbifold6 => format!("q{}", index + 1),
        }
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        let (head, digits) = name.split_at(1);
        let k: usize = digits.parse().ok()?;
        if k == 0 {
            return None;
        }
        let index = match (*self, head) {
            (Presentation::Surface { .. }, "a") => Presentation::a(k),
            (Presentation::Surface { .. }, "b") => Presentation::b(k),
            (Presentation::Surface { genus, .. }, "c") => 2 * genus + k - 1,
            (Presentation::Orbifold6, "q") => Presentation::q(k),
            _ => return None,
        };
        (index < self.generator_count()).then_some(index)
    }

    /// The defining relator: the closed-surface commutator product, the long
    /// orbifold relator, or the empty word for free (bordered) groups.
    pub fn relator(&self) -> Word {
        match *self {
            Presentation::Surface { genus, boundary } => {
                if boundary >= 1 {
                    return Word::empty();
                }
                let mut w = Word::empty();
                for k in (1..=genus).rev() {
                    w = w.concat(&Word::commutator(
                        &Word::gen(Presentation::a(k)),
                        &Word::gen(Presentation::b(k)),
                    ));
                }
                w
            }
            Presentation::Orbifold6 => {
                Word::from_letters((0..6).map(|q| (q, 1)).collect())
            }
        }
    }

    /// Reduction appropriate to the presentation: free reduction for
    /// surfaces, free reduction with exponents mod 2 for the orbifold.
    pub fn reduce(&self, w: &Word) -> Word {
        match self {
            Presentation::Surface { .. } => w.clone(),
            Presentation::Orbifold6 => orbifold_reduce(w),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PresentationRepr {
    Surface { genus: usize, boundary: usize },
    Orbifold { orbifold6: bool },
}

impl Serialize for Presentation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Presentation::Surface { genus, boundary } => {
                PresentationRepr::Surface { genus, boundary }.serialize(s)
            }
            Presentation::Orbifold6 => PresentationRepr::Orbifold { orbifold6: true }.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Presentation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match PresentationRepr::deserialize(d)? {
            PresentationRepr::Surface { genus, boundary } => {
                Ok(Presentation::Surface { genus, boundary })
            }
            PresentationRepr::Orbifold { orbifold6: true } => Ok(Presentation::Orbifold6),
            PresentationRepr::Orbifold { orbifold6: false } => {
                Err(D::Error::custom("orbifold6 must be true when present"))
            }
        }
    }
}

/// A freely reduced word: a sequence of (generator index, nonzero exponent)
/// letters with no two consecutive letters on the same generator.
///
/// Serialized as the raw letter list `[[index, exp], ...]`; human-readable
/// name grammar rendering needs a presentation and lives in
/// [`Word::display`] / [`Word::parse`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<(usize, i64)>,
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.letters.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Word::from_letters(Vec::<(usize, i64)>::deserialize(d)?))
    }
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    /// The single-letter word `g`.
    pub fn gen(index: usize) -> Self {
        Word { letters: vec![(index, 1)] }
    }

    /// The single-letter word `g^e` (empty when `e = 0`).
    pub fn gen_pow(index: usize, e: i64) -> Self {
        Word::from_letters(vec![(index, e)])
    }

    /// Builds a word from raw letters, freely reducing.
    pub fn from_letters(letters: Vec<(usize, i64)>) -> Self {
        let mut out: Vec<(usize, i64)> = Vec::with_capacity(letters.len());
        for (g, e) in letters {
            if e == 0 {
                continue;
            }
            match out.last_mut() {
                Some((h, f)) if *h == g => {
                    *f += e;
                    if *f == 0 {
                        out.pop();
                    }
                }
                _ => out.push((g, e)),
            }
        }
        Word { letters: out }
    }

    pub fn letters(&self) -> &[(usize, i64)] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Total letter count with multiplicity.
    pub fn len(&self) -> usize {
        self.letters.iter().map(|(_, e)| e.unsigned_abs() as usize).sum()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().copied());
        Word::from_letters(letters)
    }

    pub fn pow(&self, e: i64) -> Word {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::empty();
        for _ in 0..e.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    /// `[x, y] = y^-1 x^-1 y x`.
    pub fn commutator(x: &Word, y: &Word) -> Word {
        y.inverse().concat(&x.inverse()).concat(y).concat(x)
    }

    /// `c w c^-1`.
    pub fn conjugated_by(&self, c: &Word) -> Word {
        c.concat(self).concat(&c.inverse())
    }

    /// Replaces every letter `g^e` by `table[g]^e` and reduces freely.
    pub fn substitute(&self, table: &[Word]) -> Result<Word, GroupError> {
        let mut out = Word::empty();
        for &(g, e) in &self.letters {
            let img = table.get(g).ok_or(GroupError::BadIndex { index: g, count: table.len() })?;
            out = out.concat(&img.pow(e));
        }
        Ok(out)
    }

    /// Renders in the `a1 b1^-1 a2^3` grammar (empty word as `""`).
    pub fn display(&self, p: &Presentation) -> String {
        self.letters
            .iter()
            .map(|&(g, e)| {
                let name = p.generator_name(g);
                if e == 1 {
                    name
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the whitespace-separated `name` or `name^exp` grammar.
    pub fn parse(s: &str, p: &Presentation) -> Result<Word, GroupError> {
        let mut letters = Vec::new();
        for token in s.split_whitespace() {
            let (name, exp) = match token.split_once('^') {
                None => (token, 1),
                Some((name, e)) => (
                    name,
                    e.parse::<i64>().map_err(|err| GroupError::Parse {
                        token: token.to_string(),
                        msg: err.to_string(),
                    })?,
                ),
            };
            let index = p.generator_index(name).ok_or_else(|| GroupError::Parse {
                token: token.to_string(),
                msg: "unknown generator".to_string(),
            })?;
            letters.push((index, exp));
        }
        Ok(p.reduce(&Word::from_letters(letters)))
    }
}

/// Reduction in the orbifold group: every generator is an involution, so
/// exponents collapse mod 2 and equal adjacent letters cancel.
pub fn orbifold_reduce(w: &Word) -> Word {
    let mut out: Vec<usize> = Vec::with_capacity(w.letters.len());
    for &(g, e) in &w.letters {
        if e.rem_euclid(2) == 0 {
            continue;
        }
        if out.last() == Some(&g) {
            out.pop();
        } else {
            out.push(g);
        }
    }
    Word { letters: out.into_iter().map(|g| (g, 1)).collect() }
}

/// Normal-ish form in the orbifold group: involution reduction plus
/// shortening with the long relator `q1 q2 q3 q4 q5 q6 = 1`.
///
/// Any run of 4 or more letters whose indices step up (or down) by 1 mod 6
/// is a subword of a rotated copy of the relator (or its inverse), so it
/// equals the reversed complementary run of length at most 2; replacing it
/// strictly shortens the word. The rewriting is sound (every step is a
/// relator consequence) but not claimed complete; callers that need a
/// definitive answer also evaluate numerically.
pub fn orbifold_normalize(w: &Word) -> Word {
    let mut current = orbifold_reduce(w);
    loop {
        let letters: Vec<usize> = current.letters.iter().map(|&(g, _)| g).collect();
        let Some((start, len, ascending)) = longest_cyclic_run(&letters) else {
            return current;
        };
        let mut out: Vec<(usize, i64)> = Vec::new();
        out.extend(&current.letters[..start]);
        // An ascending run of length L starting at index s equals the
        // descending run of length 6 - L starting at s - 1 (mod 6), and
        // symmetrically for descending runs.
        let s = letters[start];
        if ascending {
            for k in 0..(6 - len) {
                out.push(((s + 5 - k) % 6, 1));
            }
        } else {
            for k in 0..(6 - len) {
                out.push(((s + 1 + k) % 6, 1));
            }
        }
        out.extend(&current.letters[start + len..]);
        current = orbifold_reduce(&Word { letters: out });
    }
}

/// Longest run of length >= 4 whose indices are consecutive mod 6, scanning
/// ascending and descending directions. Returns (start, length, ascending).
fn longest_cyclic_run(letters: &[usize]) -> Option<(usize, usize, bool)> {
    let mut best: Option<(usize, usize, bool)> = None;
    for ascending in [true, false] {
        let step = if ascending { 1 } else { 5 };
        let mut start = 0;
        while start < letters.len() {
            let mut len = 1;
            while start + len < letters.len()
                && letters[start + len] == (letters[start + len - 1] + step) % 6
                && len < 6
            {
                len += 1;
            }
            if len >= 4 && best.is_none_or(|(_, l, _)| len > l) {
                best = Some((start, len, ascending));
            }
            start += len.max(1);
        }
    }
    best
}

/// Two words denote the same orbifold element if their difference
/// normalizes to the empty word. A `true` is definitive; a `false` only
/// means the rewriting could not see the equality.
pub fn orbifold_words_equal(u: &Word, v: &Word) -> bool {
    orbifold_normalize(&u.concat(&v.inverse())).is_empty()
}

/// The embedding of the closed genus-2 group into the orbifold group:
/// `a1 -> q2 q1`, `b1 -> q2 q3`, `a2 -> q5 q4`, `b2 -> q5 q6`.
pub fn iota(w: &Word) -> Result<Word, GroupError> {
    let table: Vec<Word> = [
        [Presentation::q(2), Presentation::q(1)],
        [Presentation::q(2), Presentation::q(3)],
        [Presentation::q(5), Presentation::q(4)],
        [Presentation::q(5), Presentation::q(6)],
    ]
    .iter()
    .map(|pair| Word::from_letters(pair.iter().map(|&q| (q, 1)).collect()))
    .collect();
    for &(g, _) in w.letters() {
        if g >= 4 {
            return Err(GroupError::BadIndex { index: g, count: 4 });
        }
    }
    Ok(orbifold_reduce(&w.substitute(&table)?))
}

/// An assignment of Moebius maps to the generators of a presentation.
///
/// The images carry chosen SL(2,C) lifts. Construction through
/// [`Representation::new`] checks the defining relators within the identity
/// tolerance; deserialized values only have their shape checked and must be
/// validated explicitly.
#[derive(Debug, Clone)]
pub struct Representation {
    presentation: Presentation,
    images: Vec<MoebiusMap>,
}

impl Representation {
    pub fn new(
        presentation: Presentation,
        images: Vec<MoebiusMap>,
        tol: &Tolerances,
    ) -> Result<Self, GroupError> {
        let rep = Representation::new_unchecked(presentation, images)?;
        rep.validate(tol)?;
        Ok(rep)
    }

    /// Shape check only (image count); no relator evaluation.
    pub fn new_unchecked(
        presentation: Presentation,
        images: Vec<MoebiusMap>,
    ) -> Result<Self, GroupError> {
        let want = presentation.generator_count();
        if images.len() != want {
            return Err(GroupError::ImageCount { got: images.len(), want });
        }
        Ok(Representation { presentation, images })
    }

    /// The representation sending every generator to the identity.
    pub fn trivial(presentation: Presentation) -> Self {
        let images = vec![MoebiusMap::identity(); presentation.generator_count()];
        Representation { presentation, images }
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn images(&self) -> &[MoebiusMap] {
        &self.images
    }

    pub fn image(&self, index: usize) -> Result<&MoebiusMap, GroupError> {
        self.images.get(index).ok_or(GroupError::BadIndex {
            index,
            count: self.images.len(),
        })
    }

    /// Replaces the image of one generator (the lift as given).
    pub fn with_image(&self, index: usize, m: MoebiusMap) -> Result<Self, GroupError> {
        let mut images = self.images.clone();
        *images.get_mut(index).ok_or(GroupError::BadIndex {
            index,
            count: self.images.len(),
        })? = m;
        Ok(Representation { presentation: self.presentation, images })
    }

    /// Checks the defining relators within the identity tolerance: the
    /// surface relator for closed surfaces, the six involution relators and
    /// the long relator for the orbifold, nothing for free groups.
    pub fn validate(&self, tol: &Tolerances) -> Result<(), GroupError> {
        match self.presentation {
            Presentation::Surface { .. } => {
                let residual = self.relator_residual()?;
                if residual > tol.identity {
                    return Err(GroupError::RelatorViolation { residual });
                }
            }
            Presentation::Orbifold6 => {
                for q in &self.images {
                    let sq = *q * *q;
                    let residual = sq.psl_dist(&MoebiusMap::identity());
                    if residual > tol.identity {
                        return Err(GroupError::RelatorViolation { residual });
                    }
                }
                let residual = self.relator_residual()?;
                if residual > tol.identity {
                    return Err(GroupError::RelatorViolation { residual });
                }
            }
        }
        Ok(())
    }

    /// PSL distance of the evaluated relator from the identity.
    pub fn relator_residual(&self) -> Result<f64, GroupError> {
        let r = self.evaluate(&self.presentation.relator())?;
        Ok(r.psl_dist(&MoebiusMap::identity()))
    }

    /// Evaluates a word left to right: the image of `gd` is
    /// `image(g) * image(d)`.
    pub fn evaluate(&self, w: &Word) -> Result<MoebiusMap, GroupError> {
        let mut acc = MoebiusMap::identity();
        for &(g, e) in w.letters() {
            let img = self.image(g)?;
            acc = acc * img.pow(e as i32);
        }
        Ok(acc)
    }
}

#[derive(Serialize, Deserialize)]
struct RepresentationRepr {
    presentation: Presentation,
    images: BTreeMap<String, MoebiusMap>,
}

impl Serialize for Representation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let images = self
            .images
            .iter()
            .enumerate()
            .map(|(i, m)| (self.presentation.generator_name(i), *m))
            .collect();
        RepresentationRepr { presentation: self.presentation, images }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Representation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = RepresentationRepr::deserialize(d)?;
        let count = repr.presentation.generator_count();
        let mut images = vec![None; count];
        for (name, m) in &repr.images {
            let index = repr
                .presentation
                .generator_index(name)
                .ok_or_else(|| D::Error::custom(format!("unknown generator {name:?}")))?;
            images[index] = Some(*m);
        }
        let images: Option<Vec<MoebiusMap>> = images.into_iter().collect();
        let images = images.ok_or_else(|| D::Error::custom("missing generator image"))?;
        Representation::new_unchecked(repr.presentation, images).map_err(D::Error::custom)
    }
}

/// Restriction of an orbifold representation to the genus-2 subgroup along
/// [`iota`]. The orbifold relators are checked first; the resulting surface
/// relator then holds automatically and is verified as a guard.
pub fn restrict(rho: &Representation, tol: &Tolerances) -> Result<Representation, GroupError> {
    if *rho.presentation() != Presentation::Orbifold6 {
        return Err(GroupError::WrongPresentation { expected: "orbifold6" });
    }
    rho.validate(tol)?;
    let genus2 = Presentation::Surface { genus: 2, boundary: 0 };
    let mut images = Vec::with_capacity(4);
    for g in 0..4 {
        images.push(rho.evaluate(&iota(&Word::gen(g))?)?);
    }
    Representation::new(genus2, images, tol)
}

/// The second Stiefel-Whitney class of a closed-surface representation: the
/// sign of the relator evaluated on the stored lifts. `0` means the
/// representation lifts to SL(2,C); `1` means it does not.
///
/// Every generator occurs in the commutator relator with total exponent
/// zero, so the result does not depend on the choice of lifts.
pub fn sw_class(rho: &Representation, tol: &Tolerances) -> Result<u8, GroupError> {
    let Presentation::Surface { boundary: 0, .. } = rho.presentation() else {
        return Err(GroupError::WrongPresentation { expected: "closed surface" });
    };
    let r = rho.evaluate(&rho.presentation().relator())?;
    let id = MoebiusMap::identity();
    if r.entry_dist(&id) <= tol.identity {
        Ok(0)
    } else if r.entry_dist(&id.negate()) <= tol.identity {
        Ok(1)
    } else {
        Err(GroupError::RelatorViolation { residual: r.psl_dist(&id) })
    }
}

/// Verdict of the elementarity decision.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Elementarity {
    Elementary { witness: ElementaryWitness },
    NotElementary,
    /// Budgets exhausted or residuals landed inside the ambiguity band.
    Undecided { best_residual: f64 },
}

impl Elementarity {
    /// `Some(true)` / `Some(false)` when decided, `None` when not.
    pub fn decided(&self) -> Option<bool> {
        match self {
            Elementarity::Elementary { .. } => Some(true),
            Elementarity::NotElementary => Some(false),
            Elementarity::Undecided { .. } => None,
        }
    }

    pub fn is_certified_nonelementary(&self) -> bool {
        matches!(self, Elementarity::NotElementary)
    }
}

/// The invariant set witnessing elementarity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ElementaryWitness {
    /// A boundary point fixed by every generator image.
    FixedBoundaryPoint { point: SpherePoint },
    /// An unordered boundary pair preserved by every generator image.
    InvariantPair { first: SpherePoint, second: SpherePoint },
    /// A point of hyperbolic 3-space (Hermitian coordinates
    /// `[e11, Re e12, Im e12, e22]`) moved by at most the interior
    /// tolerance by every generator image.
    FixedInteriorPoint { coords: [f64; 4] },
}

/// Decides whether the generator images preserve a boundary point, a
/// boundary pair, or an interior point.
///
/// The decision is numerical and honest: `Elementary` comes with a witness
/// whose residual is below the point tolerance, `NotElementary` requires
/// every candidate invariant set to fail by more than the ambiguity band,
/// and anything in between is `Undecided`.
pub fn is_elementary(rho: &Representation, tol: &Tolerances, budgets: &Budgets) -> Elementarity {
    let id_eps = tol.identity;
    let gens: Vec<MoebiusMap> = rho
        .images()
        .iter()
        .copied()
        .filter(|m| !m.is_identity_up_to_sign(id_eps))
        .collect();
    if gens.is_empty() {
        // Trivial image: everything is preserved.
        return Elementarity::Elementary {
            witness: ElementaryWitness::FixedInteriorPoint { coords: [1.0, 0.0, 0.0, 1.0] },
        };
    }

    let band = tol.point_band();
    let mut best_residual = f64::INFINITY;

    // (i) A common fixed point on the boundary must be a fixed point of any
    // single non-identity image; take the first as the candidate source.
    if let Ok(fps) = gens[0].fixed_points(tol) {
        for p in fps.points() {
            let residual = gens
                .iter()
                .map(|g| g.apply(&p).chordal_to(&p))
                .fold(0.0, f64::max);
            best_residual = best_residual.min(residual);
            if residual <= tol.point {
                return Elementarity::Elementary {
                    witness: ElementaryWitness::FixedBoundaryPoint { point: p },
                };
            }
        }
    }

    // (ii) An invariant pair is the fixed-point pair of some non-parabolic
    // element; generators and length-2 products cover all cases (when every
    // generator swaps the pair, any product of two fixes it pointwise).
    let mut pair_sources: Vec<MoebiusMap> = gens.clone();
    for (i, g) in gens.iter().enumerate() {
        for (j, h) in gens.iter().enumerate() {
            if i != j {
                pair_sources.push(*g * *h);
            }
        }
    }
    let mut candidate_pairs: Vec<(SpherePoint, SpherePoint)> = Vec::new();
    for m in &pair_sources {
        if m.is_identity_up_to_sign(id_eps) {
            continue;
        }
        if let Ok(fps) = m.fixed_points(tol) {
            if let Some(pair) = fps.pair() {
                candidate_pairs.push(pair);
            }
        }
    }
    // One orbit step: images of candidate pairs are candidates too.
    for k in 0..candidate_pairs.len() {
        let (p, q) = candidate_pairs[k];
        for g in &gens {
            candidate_pairs.push((g.apply(&p), g.apply(&q)));
        }
    }
    for &(p, q) in &candidate_pairs {
        if p.chordal_to(&q) <= tol.point {
            continue;
        }
        let residual = gens
            .iter()
            .map(|g| {
                let (gp, gq) = (g.apply(&p), g.apply(&q));
                let keeps = gp.chordal_to(&p).max(gq.chordal_to(&q));
                let swaps = gp.chordal_to(&q).max(gq.chordal_to(&p));
                keeps.min(swaps)
            })
            .fold(0.0, f64::max);
        best_residual = best_residual.min(residual);
        if residual <= tol.point {
            return Elementarity::Elementary {
                witness: ElementaryWitness::InvariantPair { first: p, second: q },
            };
        }
    }

    // (iii) Interior fixed point or bounded orbit: only possible when every
    // element is elliptic. A loxodromic (or parabolic) generator settles the
    // question, given that (i) and (ii) failed.
    let all_elliptic = gens
        .iter()
        .all(|g| matches!(g.classify(tol), IsomClass::Elliptic));
    if !all_elliptic {
        return if best_residual > band {
            Elementarity::NotElementary
        } else {
            Elementarity::Undecided { best_residual }
        };
    }

    // Scan short words for a certified loxodromic: elliptic generators can
    // still generate one, which rules the interior case out.
    let (escaped, max_orbit_dist) = explore_orbit(&gens, tol, budgets);
    if escaped {
        return if best_residual > band {
            Elementarity::NotElementary
        } else {
            Elementarity::Undecided { best_residual }
        };
    }

    // Averaging iteration toward a common fixed point in the interior.
    let mut x = HPoint::origin();
    let mut last_step = f64::INFINITY;
    for _ in 0..budgets.max_iter {
        let mut pts = vec![x];
        pts.extend(gens.iter().map(|g| x.transported_by(g)));
        let Ok(next) = HPoint::average(&pts) else { break };
        last_step = x.dist(&next);
        x = next;
        if last_step <= 1e-13 {
            break;
        }
    }
    let interior_residual = gens
        .iter()
        .map(|g| x.transported_by(g).dist(&x))
        .fold(0.0, f64::max);
    // Interior tolerances mirror the chordal ones.
    if interior_residual <= 10.0 * tol.point {
        let (e11, e12, e22) = x.entries();
        return Elementarity::Elementary {
            witness: ElementaryWitness::FixedInteriorPoint {
                coords: [e11, e12.re, e12.im, e22],
            },
        };
    }
    // The orbit stayed bounded but the iteration stalled: undecided, with
    // the honest residual.
    let _ = (last_step, max_orbit_dist);
    Elementarity::Undecided {
        best_residual: best_residual.min(interior_residual),
    }
}

/// Breadth-first orbit exploration. Returns whether the orbit (or a word
/// classification) certifies escape to infinity, plus the largest distance
/// seen.
fn explore_orbit(gens: &[MoebiusMap], tol: &Tolerances, budgets: &Budgets) -> (bool, f64) {
    let origin = HPoint::origin();
    let mut frontier: Vec<MoebiusMap> = vec![MoebiusMap::identity()];
    let mut max_dist = 0.0f64;
    let mut visited = 0u32;
    let letters: Vec<MoebiusMap> = gens
        .iter()
        .flat_map(|g| [*g, g.inverse()])
        .collect();
    for _len in 0..20 {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                let m = *w * *l;
                visited += 1;
                if visited > budgets.max_iter {
                    return (false, max_dist);
                }
                let t2 = m.trace_squared();
                if m.classify(tol) == IsomClass::Loxodromic && (t2 - 4.0).norm() > 1e-4 {
                    return (true, max_dist);
                }
                let d = origin.transported_by(&m).dist(&origin);
                max_dist = max_dist.max(d);
                if d > 30.0 {
                    return (true, max_dist);
                }
                next.push(m);
            }
        }
        // Keep the frontier bounded: the farthest elements explore fastest.
        next.sort_by(|a, b| {
            let da = origin.transported_by(a).dist(&origin);
            let db = origin.transported_by(b).dist(&origin);
            db.total_cmp(&da)
        });
        next.truncate(64);
        frontier = next;
    }
    (false, max_dist)
}
