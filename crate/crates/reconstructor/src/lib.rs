//! Reconstructs a hidden caterpillar from an oracle that answers induced
//! subgraph counts for patterns with at most floor((n+2)/2) vertices.
//!
//! The entry point is [`reconstruct`]. It recovers the degree multiset,
//! dispatches on the shape of the degree list, and runs the matching
//! recovery pipeline: a direct pendant-pattern scan for low-diameter spines,
//! or maximal baton/triton table recovery followed by spine assembly for
//! high-diameter spines.

use caterpillar_core::Caterpillar;
use maximal_recovery::{LevelPairs, RecoveryError};
use pattern_oracle::{DeckOracle, OracleError, PatternGraph};
use thiserror::Error;

mod assembly;
mod baton_discovery;
mod few_branches;
mod low_diameter;
mod one_max;
mod three_max;
mod triton_discovery;
mod two_max;

pub use assembly::finalize_from_tables;
pub use baton_discovery::discover_short_batons;
pub use few_branches::reconstruct_few_branches;
pub use low_diameter::reconstruct_low_diameter;
pub use one_max::reconstruct_one_max;
pub use three_max::reconstruct_three_max;
pub use triton_discovery::discover_shorter_tritons;
pub use two_max::reconstruct_two_max;

/// How strictly the size hypotheses of the recovery pipeline are enforced.
///
/// `Strict` refuses inputs below the proven threshold of 48 vertices and
/// treats any case fallthrough as a defect. `Permissive` attempts every
/// input and reports [`ReconError::CaseFallthrough`] when an intermediate
/// step needs a pattern that no longer fits in a card.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Permissive,
}

/// Which branch of the reconstruction the degree list selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// n <= 2: a single vertex or a single edge.
    Trivial,
    /// Maximum degree 2.
    Path,
    /// One spine vertex.
    Star,
    /// Two spine vertices: the spine is the multiset of non-leaf degrees.
    TwoSpine,
    /// 2r <= n - 6: every pendant-marking pattern on the whole spine fits.
    LowDiameter,
    /// High diameter, at most three branch vertices.
    FewBranches,
    /// High diameter, d_1 = d_6: all shorter tritons fit in cards.
    SixMax,
    /// High diameter, four or five vertices of maximum degree.
    FourMax,
    /// High diameter, exactly three vertices of maximum degree.
    ThreeMax,
    /// High diameter, exactly two vertices of maximum degree.
    TwoMax,
    /// High diameter, a unique vertex of maximum degree.
    OneMax,
}

/// Working state threaded through the recovery pipeline, also reported
/// inside [`ReconError::CaseFallthrough`] to show how far a small instance
/// progressed.
#[derive(Debug, Clone)]
pub struct ReconState {
    pub n: usize,
    pub r: usize,
    /// Full degree multiset, nonincreasing (spine degrees first).
    pub degrees: Vec<usize>,
    /// alpha = floor((n - r + 1) / 4), the short-baton fit parameter.
    pub alpha: usize,
    pub case: CaseTag,
    /// Degree pairs {d(v_k), d(v_{r+1-k})} once recovered.
    pub level_pairs: Option<LevelPairs>,
    /// Known prefix d(v_1), d(v_2), ... of the oriented spine.
    pub prefix: Vec<usize>,
    /// Known suffix d(v_r), d(v_{r-1}), ... of the oriented spine.
    pub suffix: Vec<usize>,
    /// Spine indices of the two maximum-degree vertices (two-max case).
    pub b1b2: Option<(usize, usize)>,
    /// Doubled middle-distances of the three maximum-degree vertices:
    /// shallowest depth, the two gaps, and the doubled distance from the
    /// deepest vertex to its spine end (three-max case).
    pub depths: Option<(usize, usize, usize, usize)>,
    /// Spine indices of the branch vertices (few-branch case).
    pub branch_indices: Option<Vec<usize>>,
}

impl ReconState {
    fn new(n: usize, degrees: Vec<usize>, case: CaseTag) -> Self {
        let r = degrees.iter().filter(|&&d| d >= 2).count();
        let alpha = (n - r + 1) / 4;
        ReconState {
            n,
            r,
            degrees,
            alpha,
            case,
            level_pairs: None,
            prefix: Vec::new(),
            suffix: Vec::new(),
            b1b2: None,
            depths: None,
            branch_indices: None,
        }
    }

    /// The non-leaf degrees, nonincreasing.
    pub fn spine_degrees(&self) -> &[usize] {
        &self.degrees[..self.r]
    }

    /// d_k with 1-based k, or 1 when the index runs off the list.
    pub fn d(&self, k: usize) -> usize {
        self.degrees.get(k - 1).copied().unwrap_or(1)
    }
}

#[derive(Debug, Error)]
pub enum ReconError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    /// A size hypothesis of the pipeline fails for this n; the caller may
    /// fall back to exhaustive search.
    #[error("no recovery case applies at n = {n} (reached {:?})", state.case)]
    CaseFallthrough { n: usize, state: Box<ReconState> },
    /// The oracle's answers are not the deck of any caterpillar.
    #[error("inconsistent deck: {0}")]
    InconsistentDeck(String),
}

impl From<RecoveryError> for ReconError {
    fn from(e: RecoveryError) -> Self {
        match e {
            RecoveryError::Oracle(o) => ReconError::Oracle(o),
            other => ReconError::InconsistentDeck(other.to_string()),
        }
    }
}

fn fallthrough<T>(state: &ReconState) -> Result<T, ReconError> {
    Err(ReconError::CaseFallthrough {
        n: state.n,
        state: Box::new(state.clone()),
    })
}

/// Query with a size pre-check so that no illegal pattern ever reaches the
/// oracle. A pattern that does not fit means a fit lemma's hypothesis fails
/// at this n, which is a case fallthrough, not an oracle error.
fn checked_query(
    o: &DeckOracle,
    state: &ReconState,
    p: &PatternGraph,
) -> Result<u64, ReconError> {
    if p.vertex_count() > o.max_card() {
        fallthrough(state)
    } else {
        Ok(o.query(p)?)
    }
}

/// Exact division helper: deck counts that fail a predicted divisibility
/// can only come from a corrupted deck.
fn exact_div(num: u64, den: u64, what: &str) -> Result<u64, ReconError> {
    if den == 0 || num % den != 0 {
        return Err(ReconError::InconsistentDeck(format!(
            "{what}: {num} is not a positive multiple of {den}"
        )));
    }
    Ok(num / den)
}

/// The same in the wide integers of the pattern-count arithmetic.
fn div_exact(num: u128, den: u128, what: &str) -> Result<u64, ReconError> {
    if den == 0 || num % den != 0 {
        return Err(ReconError::InconsistentDeck(format!(
            "{what}: {num} is not a multiple of {den}"
        )));
    }
    u64::try_from(num / den)
        .map_err(|_| ReconError::InconsistentDeck(format!("{what}: quotient overflow")))
}

/// The dispatcher's case predicate. Total over all valid degree multisets:
/// every input lands in exactly one case.
pub fn case_tag(n: usize, degrees: &[usize]) -> CaseTag {
    if n <= 2 {
        return CaseTag::Trivial;
    }
    let d1 = degrees.first().copied().unwrap_or(0);
    if d1 <= 2 {
        return CaseTag::Path;
    }
    let r = degrees.iter().filter(|&&d| d >= 2).count();
    if r == 1 {
        return CaseTag::Star;
    }
    if r == 2 {
        return CaseTag::TwoSpine;
    }
    if 2 * r <= n - 6 {
        return CaseTag::LowDiameter;
    }
    let branch = degrees.iter().filter(|&&d| d >= 3).count();
    if branch <= 3 {
        return CaseTag::FewBranches;
    }
    let d = |k: usize| degrees.get(k - 1).copied().unwrap_or(1);
    if d1 == d(6) {
        CaseTag::SixMax
    } else if d1 == d(4) {
        CaseTag::FourMax
    } else if d1 == d(3) {
        CaseTag::ThreeMax
    } else if d1 == d(2) {
        CaseTag::TwoMax
    } else {
        CaseTag::OneMax
    }
}

/// Reconstruct the hidden caterpillar behind `o`.
///
/// The output is in canonical orientation and isomorphic to the hidden
/// graph. Every oracle query fits in a card; identical oracles produce
/// identical outputs and query sequences.
pub fn reconstruct(n: usize, o: &DeckOracle, mode: Mode) -> Result<Caterpillar, ReconError> {
    if o.n() != n {
        return Err(ReconError::InconsistentDeck(format!(
            "oracle serves n = {}, caller claims n = {n}",
            o.n()
        )));
    }
    let degrees = recover_degrees(n, o)?;
    let case = case_tag(n, &degrees);
    let mut state = ReconState::new(n, degrees, case);
    if mode == Mode::Strict && n < 48 {
        return fallthrough(&state);
    }

    match case {
        CaseTag::Trivial => Ok(Caterpillar::trivial(n).expect("n <= 2")),
        CaseTag::Path => Ok(Caterpillar::path(n).expect("n >= 3")),
        CaseTag::Star => {
            Ok(Caterpillar::from_spine(&[n - 1]).expect("single spine vertex"))
        }
        CaseTag::TwoSpine => {
            let spine = [state.d(2), state.d(1)];
            Caterpillar::from_spine(&spine)
                .map_err(|e| ReconError::InconsistentDeck(e.to_string()))
        }
        CaseTag::LowDiameter => reconstruct_low_diameter(&mut state, o),
        CaseTag::FewBranches => reconstruct_few_branches(&mut state, o),
        CaseTag::SixMax | CaseTag::FourMax => {
            let batons = discover_short_batons(&mut state, o)?;
            let tritons = discover_shorter_tritons(&mut state, o, &batons)?;
            finalize_from_tables(&mut state, o, &batons, &tritons)
        }
        CaseTag::ThreeMax => {
            let batons = discover_short_batons(&mut state, o)?;
            reconstruct_three_max(&mut state, o, &batons)
        }
        CaseTag::TwoMax => {
            let batons = discover_short_batons(&mut state, o)?;
            reconstruct_two_max(&mut state, o, &batons)
        }
        CaseTag::OneMax => reconstruct_one_max(&mut state, o),
    }
}

/// Degree multiset recovery plus validation of the handshake identity.
fn recover_degrees(n: usize, o: &DeckOracle) -> Result<Vec<usize>, ReconError> {
    let degrees = pattern_oracle::recover_degree_multiset(o)?;
    if degrees.len() != n {
        return Err(ReconError::InconsistentDeck(format!(
            "degree multiset has {} entries for n = {n}",
            degrees.len()
        )));
    }
    let sum: usize = degrees.iter().sum();
    if n >= 1 && sum != 2 * (n - 1) {
        return Err(ReconError::InconsistentDeck(format!(
            "degree sum {sum} does not match a tree on {n} vertices"
        )));
    }
    Ok(degrees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use caterpillar_core::enumerate_caterpillars;

    #[test]
    fn case_predicate_is_total_and_unique() {
        // Sweep all spine degree lists indirectly: every caterpillar up to a
        // size bound maps to exactly one case, and the high-diameter split
        // is the exact complement of the low-diameter gate.
        for n in 1..=16 {
            for g in enumerate_caterpillars(n) {
                let mut degrees = g.degree_multiset();
                degrees.sort_unstable_by(|a, b| b.cmp(a));
                let tag = case_tag(n, &degrees);
                let r = g.r();
                match tag {
                    CaseTag::Trivial => assert!(n <= 2),
                    CaseTag::Path => assert!(degrees[0] <= 2 && n >= 3),
                    CaseTag::Star => assert_eq!(r, 1),
                    CaseTag::TwoSpine => assert_eq!(r, 2),
                    CaseTag::LowDiameter => assert!(2 * r <= n - 6 && r >= 3),
                    _ => assert!(2 * r >= n - 5 && r >= 3 && degrees[0] >= 3),
                }
            }
        }
    }

    #[test]
    fn forced_shapes_come_back_directly() {
        for (spine, n) in [
            (vec![2, 2, 2, 2], 6),
            (vec![7], 8),
            (vec![3, 5], 8),
            (vec![4, 4], 8),
        ] {
            let g = Caterpillar::from_spine(&spine).unwrap();
            assert_eq!(g.n(), n);
            let o = DeckOracle::hidden(g.clone());
            let got = reconstruct(n, &o, Mode::Permissive).unwrap();
            assert_eq!(got.spine(), g.spine());
        }
        let o = DeckOracle::hidden(Caterpillar::trivial(2).unwrap());
        assert_eq!(reconstruct(2, &o, Mode::Permissive).unwrap().n(), 2);
    }

    #[test]
    fn strict_mode_rejects_small_inputs() {
        let g = Caterpillar::from_spine(&[4, 4]).unwrap();
        let o = DeckOracle::hidden(g);
        match reconstruct(8, &o, Mode::Strict) {
            Err(ReconError::CaseFallthrough { n: 8, .. }) => {}
            other => panic!("expected fallthrough, got {other:?}"),
        }
    }
}
