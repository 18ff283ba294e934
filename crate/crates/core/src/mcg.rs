//! Marking changes: the moves that re-mark a representation.
//!
//! A move is a substitution table sending each generator of the marking to a
//! word in the same generators. Applying it to a representation replaces the
//! image of each generator `g` by the evaluation of the table word for `g`,
//! which realizes precomposition with the inverse of the marking change.
//! Every move must induce an automorphism of the presentation: for a closed
//! surface the relator has to map to a conjugate of the relator or its
//! inverse, for the orbifold the involution relators and the long relator
//! have to map to relations. Both conditions are checked on the word level
//! each time a move is applied, and the new images are re-validated
//! numerically afterwards.
//!
//! [`MoveLog`] accumulates the substitution induced on the original
//! generators, so a logged pipeline can always be replayed from its starting
//! representation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::group::{iota, orbifold_words_equal, GroupError, Presentation, Representation, Word};

/// Largest letter count a logged substitution word may reach; beyond this the
/// log refuses to grow instead of exhausting memory.
const MAX_SUBSTITUTION_LETTERS: usize = 200_000;

/// Errors of the marking-change layer.
#[derive(Debug, Error)]
pub enum McgError {
    /// The move does not define an automorphism of this presentation.
    #[error("invalid move: {reason}")]
    InvalidMove { reason: String },
    /// The substituted images fail the relator check numerically.
    #[error("move broke the relator: residual {residual:.3e}")]
    RelatorBroken { residual: f64 },
    /// A curve outside the normalization catalogue.
    #[error("curve {word:?} is not in the normalization catalogue")]
    NotInCatalogue { word: String },
    /// A composed substitution word outgrew the length budget.
    #[error("composed substitution exceeds the word length budget")]
    SubstitutionOverflow,
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// One change of marking.
///
/// The word fields are over the marking the move is applied to. Constructors
/// for the catalogued composite substitutions ([`phi_move`],
/// [`handle_transpose`], [`cross_handle_twist`], [`swap_move`], ...) produce
/// `GeneralSubst` moves; every move passes through the same validation when
/// applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Move {
    /// `a_h -> b_h^k a_h` on handle `h`; fixes the relator exactly.
    TwistPhi { handle: usize, k: i64 },
    /// `b_h -> a_h^k b_h` on handle `h`; fixes the relator exactly.
    TwistPsi { handle: usize, k: i64 },
    /// Braid move on the orbifold marking: `q_i -> q_{i+1}`,
    /// `q_{i+1} -> q_{i+1} q_i q_{i+1}`, for `1 <= i <= 5`.
    Sigma { i: usize },
    /// `(a_h, b_h) -> (b_h^-1, b_h^-1 a_h b_h)`; fixes the relator exactly.
    HandleSwapSeq { handle: usize },
    /// `n`-fold twist along the genus-2 curve `d = b2 a1^-1 b1^k`.
    TwistAlong { d: Word, n: i64 },
    /// Explicit substitution table, one word per generator.
    GeneralSubst { images: Vec<Word> },
}

fn invalid<T>(reason: impl Into<String>) -> Result<T, McgError> {
    Err(McgError::InvalidMove { reason: reason.into() })
}

fn identity_table(n: usize) -> Vec<Word> {
    (0..n).map(Word::gen).collect()
}

fn handle_indices(p: &Presentation, h: usize) -> Result<(usize, usize), McgError> {
    let Presentation::Surface { genus, .. } = *p else {
        return invalid("handle moves act on surface markings");
    };
    if h == 0 || h > genus {
        return invalid(format!("handle {h} out of range for genus {genus}"));
    }
    Ok((Presentation::a(h), Presentation::b(h)))
}

/// The substitution table of a move over the given presentation, one word
/// per generator. Structural validity is checked separately by
/// [`validate_table`].
pub fn move_table(m: &Move, p: &Presentation) -> Result<Vec<Word>, McgError> {
    let n_gens = p.generator_count();
    let mut table = identity_table(n_gens);
    match m {
        Move::TwistPhi { handle, k } => {
            let (ia, ib) = handle_indices(p, *handle)?;
            table[ia] = Word::gen_pow(ib, *k).concat(&Word::gen(ia));
        }
        Move::TwistPsi { handle, k } => {
            let (ia, ib) = handle_indices(p, *handle)?;
            table[ib] = Word::gen_pow(ia, *k).concat(&Word::gen(ib));
        }
        Move::Sigma { i } => {
            if *p != Presentation::Orbifold6 {
                return invalid("braid moves act on the orbifold marking");
            }
            if !(1..=5).contains(i) {
                return invalid(format!("braid index {i} out of range 1..=5"));
            }
            let qi = Presentation::q(*i);
            let qj = Presentation::q(*i + 1);
            table[qi] = Word::gen(qj);
            table[qj] = Word::from_letters(vec![(qj, 1), (qi, 1), (qj, 1)]);
        }
        Move::HandleSwapSeq { handle } => {
            let (ia, ib) = handle_indices(p, *handle)?;
            table[ia] = Word::gen_pow(ib, -1);
            table[ib] = Word::gen(ia).conjugated_by(&Word::gen_pow(ib, -1));
        }
        Move::TwistAlong { d, n } => {
            let Presentation::Surface { genus, .. } = *p else {
                return invalid("twists act on surface markings");
            };
            if genus < 2 {
                return invalid("the twist curve needs two handles");
            }
            let ia1 = Presentation::a(1);
            let ib1 = Presentation::b(1);
            let ia2 = Presentation::a(2);
            let ib2 = Presentation::b(2);
            let k = match d.letters() {
                [(g2, 1), (g1, -1)] if *g2 == ib2 && *g1 == ia1 => 0,
                [(g2, 1), (g1, -1), (gb, k)] if *g2 == ib2 && *g1 == ia1 && *gb == ib1 => *k,
                _ => return invalid("twist curve outside the fixed catalogue"),
            };
            let zn = d.inverse().pow(*n);
            let b1z = Word::gen(ib1).concat(&zn);
            // The twist fixes d itself; a1 picks up the compensating frame.
            table[ia1] = b1z.pow(k).concat(&Word::gen_pow(ib1, -k)).concat(&Word::gen(ia1));
            table[ib1] = b1z;
            table[ia2] = Word::gen(ia2).concat(&zn);
        }
        Move::GeneralSubst { images } => {
            if images.len() != n_gens {
                return invalid(format!(
                    "substitution has {} words for {} generators",
                    images.len(),
                    n_gens
                ));
            }
            table = images.clone();
        }
    }
    Ok(table)
}

/// Checks that a substitution induces an automorphism of the presentation.
///
/// Closed surface: the relator must map to a conjugate of the relator or its
/// inverse (decided exactly by cyclic words in the free group). Orbifold:
/// every generator image must square to a relation and the long relator must
/// map to a relation (decided by the orbifold rewriting, which is sound but
/// not complete, so exotic valid substitutions may be rejected; the
/// catalogued moves all pass). Free (bordered) groups have no relator to
/// preserve.
pub fn validate_table(table: &[Word], p: &Presentation) -> Result<(), McgError> {
    let n = p.generator_count();
    if table.len() != n {
        return invalid(format!("substitution has {} words for {n} generators", table.len()));
    }
    match *p {
        Presentation::Surface { boundary, .. } if boundary >= 1 => Ok(()),
        Presentation::Surface { .. } => {
            let r = p.relator();
            let tr = r.substitute(table)?;
            if conjugator_to_rotation(&tr, &r).is_some() {
                Ok(())
            } else {
                invalid("relator does not map to a conjugate of the relator or its inverse")
            }
        }
        Presentation::Orbifold6 => {
            for (g, w) in table.iter().enumerate() {
                if !orbifold_words_equal(&w.concat(w), &Word::empty()) {
                    return invalid(format!("image of q{} is not an involution", g + 1));
                }
            }
            let tr = p.relator().substitute(table)?;
            if orbifold_words_equal(&tr, &Word::empty()) {
                Ok(())
            } else {
                invalid("long orbifold relator does not map to a relation")
            }
        }
    }
}

fn frob(m: &crate::mobius::MoebiusMap) -> f64 {
    (m.a.norm_sqr() + m.b.norm_sqr() + m.c.norm_sqr() + m.d.norm_sqr()).sqrt()
}

/// Floating-point noise floor of evaluating `w` on the representation's
/// images: proportional to the product of the entry scales along the word.
/// At unit scale this sits far below the identity tolerance, so the check in
/// [`apply_move`] is exactly the identity tolerance there; it relaxes only
/// when the entries themselves make a tighter answer meaningless.
fn word_noise_floor(rep: &Representation, w: &Word) -> f64 {
    let mut prod = 1.0f64;
    for &(g, e) in w.letters() {
        let Ok(m) = rep.image(g) else { continue };
        let n = frob(m).max(1.0);
        for _ in 0..e.unsigned_abs().min(64) {
            prod *= n;
            if prod > 1e280 {
                return 1e280;
            }
        }
    }
    prod * 1e-13
}

/// Numeric relator check with the scale-aware floor described at
/// [`word_noise_floor`].
fn validate_scaled(rep: &Representation, tol: &Tolerances) -> Result<(), McgError> {
    let broken = |residual: f64, floor: f64| {
        if residual.is_finite() && residual <= tol.identity.max(floor) {
            Ok(())
        } else {
            Err(McgError::RelatorBroken { residual })
        }
    };
    match *rep.presentation() {
        Presentation::Surface { boundary, .. } if boundary >= 1 => Ok(()),
        Presentation::Surface { .. } => {
            let r = rep.presentation().relator();
            broken(rep.relator_residual()?, word_noise_floor(rep, &r))
        }
        Presentation::Orbifold6 => {
            let id = crate::mobius::MoebiusMap::identity();
            for g in 0..6 {
                let q = rep.image(g)?;
                let sq = *q * *q;
                let floor = frob(q).max(1.0).powi(2) * 1e-13;
                broken(sq.psl_dist(&id), floor)?;
            }
            let r = rep.presentation().relator();
            broken(rep.relator_residual()?, word_noise_floor(rep, &r))
        }
    }
}

fn substituted_rep(
    rho: &Representation,
    table: &[Word],
    tol: &Tolerances,
) -> Result<Representation, McgError> {
    let images = table
        .iter()
        .map(|w| rho.evaluate(w))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = Representation::new_unchecked(*rho.presentation(), images)?;
    validate_scaled(&rep, tol)?;
    Ok(rep)
}

/// Applies one move: validates it structurally, substitutes the images, and
/// re-checks the relators numerically.
pub fn apply_move(
    rho: &Representation,
    m: &Move,
    tol: &Tolerances,
) -> Result<Representation, McgError> {
    let table = move_table(m, rho.presentation())?;
    validate_table(&table, rho.presentation())?;
    substituted_rep(rho, &table, tol)
}

/// An ordered record of applied moves together with the substitution they
/// induce on the original generators.
///
/// Invariant: if `rho0` is the representation the log started at and `rho`
/// the current one, then `rho.image(g)` equals `rho0.evaluate(subst[g])` as a
/// lift for every generator `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveLog {
    presentation: Presentation,
    moves: Vec<Move>,
    substitution: Vec<Word>,
}

impl MoveLog {
    /// The empty log over a presentation (identity substitution).
    pub fn identity(p: Presentation) -> MoveLog {
        MoveLog {
            presentation: p,
            moves: Vec::new(),
            substitution: identity_table(p.generator_count()),
        }
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    /// Current-generator images as words in the original generators.
    pub fn substitution(&self) -> &[Word] {
        &self.substitution
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Folds one more move into the log: the move's table words are routed
    /// through the substitution accumulated so far.
    pub fn record(&mut self, m: Move, table: &[Word]) -> Result<(), McgError> {
        let mut next = Vec::with_capacity(table.len());
        for w in table {
            let composed = w.substitute(&self.substitution)?;
            if composed.letters().len() > MAX_SUBSTITUTION_LETTERS {
                return Err(McgError::SubstitutionOverflow);
            }
            next.push(composed);
        }
        self.substitution = next;
        self.moves.push(m);
        Ok(())
    }

    /// Re-derives the final representation from the starting one by
    /// evaluating the accumulated substitution.
    pub fn replay(&self, rho0: &Representation) -> Result<Representation, GroupError> {
        let images = self
            .substitution
            .iter()
            .map(|w| rho0.evaluate(w))
            .collect::<Result<Vec<_>, _>>()?;
        Representation::new_unchecked(*rho0.presentation(), images)
    }
}

/// A representation carried together with the log of marking changes applied
/// to it. Pipelines thread this through so their output stays replayable.
#[derive(Debug, Clone)]
pub struct MarkedRep {
    pub rep: Representation,
    pub log: MoveLog,
}

impl MarkedRep {
    pub fn new(rep: Representation) -> MarkedRep {
        let log = MoveLog::identity(*rep.presentation());
        MarkedRep { rep, log }
    }

    /// Applies a move to the representation and records it in the log.
    pub fn apply(&mut self, m: Move, tol: &Tolerances) -> Result<(), McgError> {
        let table = move_table(&m, self.rep.presentation())?;
        validate_table(&table, self.rep.presentation())?;
        let rep = substituted_rep(&self.rep, &table, tol)?;
        self.log.record(m, &table)?;
        self.rep = rep;
        Ok(())
    }
}

/// The twist along the genus-2 curve `d_k = b2 a1^-1 b1^k`, applied `n`
/// times. `twist_along(0, 1)` is the cross-handle move of [`phi_move`] for
/// index 3.
pub fn twist_along(k: i64, n: i64) -> Move {
    let d = Word::gen(Presentation::b(2))
        .concat(&Word::gen_pow(Presentation::a(1), -1))
        .concat(&Word::gen_pow(Presentation::b(1), k));
    Move::TwistAlong { d, n }
}

/// The genus-2 move matching the orbifold braid move of the same index under
/// the embedding `iota`; see [`sigma_commutes_with_iota`].
pub fn phi_move(i: usize) -> Result<Move, McgError> {
    Ok(match i {
        1 => Move::TwistPsi { handle: 1, k: 1 },
        2 => Move::TwistPhi { handle: 1, k: -1 },
        3 => twist_along(0, 1),
        4 => Move::TwistPsi { handle: 2, k: 1 },
        5 => Move::TwistPhi { handle: 2, k: -1 },
        _ => return invalid(format!("braid index {i} out of range 1..=5")),
    })
}

/// Builds the substitution supported on one handle with the given images for
/// `a_h` and `b_h`, conjugating every other generator so the closed relator
/// still maps to an exact conjugate of itself. Images that reverse the
/// handle commutator are rejected: no conjugation frame can repair those.
fn decorated_handle_move(
    p: &Presentation,
    h: usize,
    a_img: Word,
    b_img: Word,
) -> Result<Move, McgError> {
    let (ia, ib) = handle_indices(p, h)?;
    let n = p.generator_count();
    let mut table = identity_table(n);
    table[ia] = a_img;
    table[ib] = b_img;
    let rh = Word::commutator(&Word::gen(ia), &Word::gen(ib));
    let trh = rh.substitute(&table)?;
    let Some((sign, u)) = conjugator_to_rotation(&trh, &rh) else {
        return invalid("handle images do not preserve the handle commutator up to conjugation");
    };
    if sign < 0 {
        return invalid("handle images reverse the handle commutator");
    }
    if !u.is_empty() {
        for (g, slot) in table.iter_mut().enumerate() {
            if g != ia && g != ib {
                *slot = Word::gen(g).conjugated_by(&u);
            }
        }
    }
    Ok(Move::GeneralSubst { images: table })
}

/// The quarter-turn marking change on handle `h`: `a_h -> b_h`,
/// `b_h -> a_h^-1`, with every other generator conjugated by `a_h` (the
/// frame that keeps the closed relator an exact conjugate of itself; the
/// bare two-generator swap is not an automorphism of a closed surface group
/// of genus at least two).
pub fn swap_move(p: &Presentation, h: usize) -> Result<Move, McgError> {
    let (ia, ib) = handle_indices(p, h)?;
    decorated_handle_move(p, h, Word::gen(ib), Word::gen_pow(ia, -1))
}

/// Exchange of the adjacent handles `h` and `h + 1`: the lower handle's
/// generators move up unchanged and the upper ones come down conjugated by
/// the upper commutator, which keeps the relator fixed exactly.
pub fn handle_transpose(p: &Presentation, h: usize) -> Result<Move, McgError> {
    Ok(Move::GeneralSubst { images: transpose_table(p, h)? })
}

fn transpose_table(p: &Presentation, h: usize) -> Result<Vec<Word>, McgError> {
    let (ia, ib) = handle_indices(p, h)?;
    let (ja, jb) = handle_indices(p, h + 1)?;
    let mut table = identity_table(p.generator_count());
    let u = Word::commutator(&Word::gen(ja), &Word::gen(jb));
    table[ia] = Word::gen(ja);
    table[ib] = Word::gen(jb);
    table[ja] = Word::gen(ia).conjugated_by(&u);
    table[jb] = Word::gen(ib).conjugated_by(&u);
    Ok(table)
}

/// The `n`-fold twist along a curve joining handle 1 to handle `j`
/// (`2 <= j <= genus`) of a closed surface, decorated with the commutator
/// frames between the two handles so the relator maps to an exact conjugate.
pub fn cross_handle_twist(p: &Presentation, j: usize, n: i64) -> Result<Move, McgError> {
    let Presentation::Surface { genus, boundary: 0 } = *p else {
        return invalid("cross-handle twists act on closed surface markings");
    };
    if j < 2 || j > genus {
        return invalid(format!("target handle {j} out of range 2..={genus}"));
    }
    let comm = |k: usize| {
        Word::commutator(&Word::gen(Presentation::a(k)), &Word::gen(Presentation::b(k)))
    };
    // Frames: the commutators strictly between handle j and handle 1, and
    // strictly above handle j.
    let mut mj = Word::empty();
    for k in (2..j).rev() {
        mj = mj.concat(&comm(k));
    }
    let mut sj = Word::empty();
    for k in (j + 1..=genus).rev() {
        sj = sj.concat(&comm(k));
    }
    let z = Word::gen(Presentation::b(j))
        .concat(&sj.inverse())
        .concat(&Word::gen_pow(Presentation::a(1), -1))
        .concat(&mj.inverse());
    let v = z.pow(n);
    let u = v.conjugated_by(&mj.inverse());
    let mut table = identity_table(p.generator_count());
    table[Presentation::b(1)] = Word::gen(Presentation::b(1)).concat(&u);
    table[Presentation::a(j)] = Word::gen(Presentation::a(j)).concat(&v);
    Ok(Move::GeneralSubst { images: table })
}

/// The genus-3 twist along a curve meeting handles 1, 2 and 3 at once:
/// `b1` and `a2` pick up the `b2`-conjugated twisting word, `a3` the plain
/// one.
pub fn composite_cross_twist(n: i64) -> Move {
    let q = Word::gen(Presentation::b(3))
        .concat(&Word::gen_pow(Presentation::a(1), -1))
        .concat(&Word::gen(Presentation::b(2)));
    let v = q.pow(n);
    let w = v.conjugated_by(&Word::gen(Presentation::b(2)));
    let p = Presentation::Surface { genus: 3, boundary: 0 };
    let mut table = identity_table(p.generator_count());
    table[Presentation::b(1)] = Word::gen(Presentation::b(1)).concat(&w);
    table[Presentation::a(2)] = Word::gen(Presentation::a(2)).concat(&w);
    table[Presentation::a(3)] = Word::gen(Presentation::a(3)).concat(&v);
    Move::GeneralSubst { images: table }
}

/// The witness that a genus-2 move matches an orbifold braid move under the
/// embedding: `iota(phi(g))` equals `sigma_i(iota(g))` in the orbifold group
/// for every handle generator `g`.
#[derive(Debug, Clone)]
pub struct CommutationCertificate {
    pub i: usize,
    pub phi: Move,
    /// One flag per generator `a1, b1, a2, b2`, in that order.
    pub verified: [bool; 4],
}

impl CommutationCertificate {
    pub fn all_verified(&self) -> bool {
        self.verified.iter().all(|&v| v)
    }
}

/// Produces the genus-2 move `phi_i` with `iota . phi_i = sigma_i . iota`
/// and checks that word identity on all four handle generators.
pub fn sigma_commutes_with_iota(i: usize) -> Result<CommutationCertificate, McgError> {
    let surface = Presentation::Surface { genus: 2, boundary: 0 };
    let phi = phi_move(i)?;
    let phi_table = move_table(&phi, &surface)?;
    let sigma_table = move_table(&Move::Sigma { i }, &Presentation::Orbifold6)?;
    let gens = [
        Presentation::a(1),
        Presentation::b(1),
        Presentation::a(2),
        Presentation::b(2),
    ];
    let mut verified = [false; 4];
    for (slot, &g) in gens.iter().enumerate() {
        let lhs = iota(&phi_table[g])?;
        let rhs = iota(&Word::gen(g))?.substitute(&sigma_table)?;
        verified[slot] = orbifold_words_equal(&lhs, &rhs);
    }
    Ok(CommutationCertificate { i, phi, verified })
}

/// Produces a single validated substitution sending the given nonseparating
/// simple curve class to `a1` or `a1^-1` exactly.
///
/// The catalogue covers the curves the pipelines ask about: `a1^+-1`,
/// `b1^+-1`, `a1 b1`, `b1 a1`, and `a_j^+-1`, `b_j^+-1` on any handle (walked
/// down to handle 1 by transpositions). Anything else is reported as
/// [`McgError::NotInCatalogue`].
pub fn normalize_nonseparating(gamma: &Word, p: &Presentation) -> Result<Move, McgError> {
    let Presentation::Surface { genus, .. } = *p else {
        return invalid("curve normalization needs a surface marking");
    };
    let not_catalogued = || McgError::NotInCatalogue { word: gamma.display(p) };
    let ia1 = Presentation::a(1);
    let ib1 = Presentation::b(1);
    let n = p.generator_count();

    // A base move making gamma's image conjugate into {a1^+-1, b1^+-1}.
    let base: Vec<Word> = match gamma.letters() {
        [(g, 1 | -1)] if *g == ia1 || *g == ib1 => identity_table(n),
        [(ga, 1), (gb, 1)] if *ga == ia1 && *gb == ib1 => {
            // a1 -> a1 b1^-1 absorbs the trailing b1.
            let a_img = Word::from_letters(vec![(ia1, 1), (ib1, -1)]);
            match decorated_handle_move(p, 1, a_img, Word::gen(ib1))? {
                Move::GeneralSubst { images } => images,
                _ => unreachable!("decorated moves are general substitutions"),
            }
        }
        [(gb, 1), (ga, 1)] if *gb == ib1 && *ga == ia1 => {
            // a1 -> b1^-1 a1 absorbs the leading b1; exact on the relator.
            move_table(&Move::TwistPhi { handle: 1, k: -1 }, p)?
        }
        [(g, 1 | -1)] if *g < 2 * genus => {
            // A higher handle: walk it down to handle 1.
            let handle = *g / 2 + 1;
            let mut table = identity_table(n);
            for h in 1..handle {
                table = compose_tables(&table, &transpose_table(p, h)?)?;
            }
            table
        }
        _ => return Err(not_catalogued()),
    };
    finish_normalization(gamma, base, p).ok_or_else(not_catalogued)
}

/// Post-processing shared by the catalogue arms: strip the conjugation frame
/// from gamma's image with a global inner move, turn a `b1` target into `a1`
/// with the swap, check the result is exactly `a1^+-1`, and validate.
fn finish_normalization(
    gamma: &Word,
    mut table: Vec<Word>,
    p: &Presentation,
) -> Option<Move> {
    let ia1 = Presentation::a(1);
    let ib1 = Presentation::b(1);
    let img = gamma.substitute(&table).ok()?;
    let (prefix, core) = cyclic_reduce(expand(&img));
    if core.len() != 1 || (core[0].0 != ia1 && core[0].0 != ib1) {
        return None;
    }
    if !prefix.is_empty() {
        // Conjugate the whole marking back by the frame.
        let u = letters_to_word(&prefix);
        let inner: Vec<Word> = (0..table.len())
            .map(|g| Word::gen(g).conjugated_by(&u.inverse()))
            .collect();
        table = compose_tables(&inner, &table).ok()?;
    }
    if core[0].0 == ib1 {
        let Ok(Move::GeneralSubst { images: swap }) = swap_move(p, 1) else {
            return None;
        };
        table = compose_tables(&swap, &table).ok()?;
    }
    let final_img = gamma.substitute(&table).ok()?;
    if final_img.letters() != [(ia1, 1)] && final_img.letters() != [(ia1, -1)] {
        return None;
    }
    validate_table(&table, p).ok()?;
    Some(Move::GeneralSubst { images: table })
}

/// The table of the endomorphism `x -> outer(inner(x))`.
fn compose_tables(outer: &[Word], inner: &[Word]) -> Result<Vec<Word>, GroupError> {
    inner.iter().map(|w| w.substitute(outer)).collect()
}

/// Single letters with exponent split to +-1, for cyclic-word comparisons.
type Letter = (usize, i8);

fn expand(w: &Word) -> Vec<Letter> {
    let mut out = Vec::new();
    for &(g, e) in w.letters() {
        let s: i8 = if e < 0 { -1 } else { 1 };
        for _ in 0..e.unsigned_abs() {
            out.push((g, s));
        }
    }
    out
}

fn invert_expanded(v: &[Letter]) -> Vec<Letter> {
    v.iter().rev().map(|&(g, s)| (g, -s)).collect()
}

fn letters_to_word(v: &[Letter]) -> Word {
    Word::from_letters(v.iter().map(|&(g, s)| (g, s as i64)).collect())
}

/// Strips matched conjugation from an expanded word: returns the stripped
/// prefix and the cyclically reduced core.
fn cyclic_reduce(mut v: Vec<Letter>) -> (Vec<Letter>, Vec<Letter>) {
    let mut prefix = Vec::new();
    while v.len() >= 2 {
        let first = v[0];
        let last = v[v.len() - 1];
        if first.0 == last.0 && first.1 == -last.1 {
            prefix.push(first);
            v.remove(0);
            v.pop();
        } else {
            break;
        }
    }
    (prefix, v)
}

/// Decides conjugacy of `w` to `base` or `base^-1` in the free group by
/// comparing cyclic words, and returns the sign together with a word `u`
/// such that `w = u base^sign u^-1`.
fn conjugator_to_rotation(w: &Word, base: &Word) -> Option<(i8, Word)> {
    let base_exp = expand(base);
    let (prefix, core) = cyclic_reduce(expand(w));
    if core.len() != base_exp.len() {
        return None;
    }
    if core.is_empty() {
        return Some((1, letters_to_word(&prefix)));
    }
    for (sign, b) in [(1i8, base_exp.clone()), (-1i8, invert_expanded(&base_exp))] {
        for r in 0..b.len() {
            if core.iter().enumerate().all(|(i, &l)| l == b[(r + i) % b.len()]) {
                // Rotation by r conjugates by the suffix it moved forward.
                let mut u = prefix.clone();
                u.extend_from_slice(&b[r..]);
                return Some((sign, letters_to_word(&u)));
            }
        }
    }
    None
}
