//! Final spine assembly from complete maximal baton and triton tables.
//!
//! The baton tables locate the unordered degree pair at every level
//! k <= (r-1)/2, and the triton tables orient the two spine ends against
//! each other from the outermost level whose pair is unequal.  That pins
//! the spine degrees down to level q-1 where q = floor((r-2)/2); the level
//! q and q+1 pairs admit two placements each, so at most four candidate
//! spines remain.  Each candidate's own maximal tables are recomputed and
//! compared against the recovered ones, and if several candidates produce
//! identical tables, they are told apart by querying patterns on which
//! their predicted counts differ: a long baton reaching past the middle,
//! or a short triton keyed into the middle degrees when that baton no
//! longer fits in a card.

use std::collections::{BTreeMap, BTreeSet};

use crate::{checked_query, fallthrough, ReconError, ReconState};
use caterpillar_core::Caterpillar;
use maximal_recovery::{
    direct_maximal_table, level_pairs, ordered_pair_sets, FamilyKind, LevelPairs,
    MaximalFamilyTable,
};
use pattern_oracle::{count_induced, DeckOracle, PatternGraph};

pub fn finalize_from_tables(
    state: &mut ReconState,
    o: &DeckOracle,
    batons: &BTreeMap<usize, MaximalFamilyTable>,
    tritons: &BTreeMap<(usize, usize), MaximalFamilyTable>,
) -> Result<Caterpillar, ReconError> {
    let r = state.r;
    if r < 4 {
        return fallthrough(state);
    }
    let lp = level_pairs(batons, state.spine_degrees())?;
    state.level_pairs = Some(lp.clone());

    // Levels 1..q-1 are fixed below; the level-q and level-(q+1) pairs are
    // placed both ways. For even r the level q+1 = r/2 pair is the central
    // adjacent pair, left over by the level computation; for odd r the
    // single leftover degree is the spine center.
    let q = (r - 2) / 2;
    let outer = q - 1;
    let h = (1..=outer).find(|&k| lp.pairs[k - 1].0 != lp.pairs[k - 1].1);
    let mut prefix: Vec<usize> = Vec::with_capacity(outer);
    let mut suffix: Vec<usize> = Vec::with_capacity(outer);
    for k in 1..=outer {
        let (lo, hi) = lp.pairs[k - 1];
        match h {
            Some(hh) if k == hh => {
                // Orientation convention: the larger degree of the first
                // unequal pair sits on the prefix side.
                prefix.push(hi);
                suffix.push(lo);
            }
            Some(hh) if k > hh => {
                let s = k - hh;
                let sets = ordered_pair_sets(batons, tritons, state.spine_degrees(), s, outer)?;
                let [p0, p1] = sets[hh - 1];
                let anchor = prefix[hh - 1];
                let (near, far) = if p0.0 == anchor {
                    (p0, p1)
                } else if p1.0 == anchor {
                    (p1, p0)
                } else {
                    return Err(ReconError::InconsistentDeck(format!(
                        "no ordered end pair at level {hh} starts with degree {anchor}"
                    )));
                };
                prefix.push(near.1);
                suffix.push(far.1);
            }
            _ => {
                // Equal pair: both placements coincide.
                prefix.push(lo);
                suffix.push(lo);
            }
        }
    }
    assemble_from_prefix(state, o, batons, tritons, &lp, prefix, suffix)
}

/// Finish a spine whose degrees are pinned down to level q-1 on both ends,
/// where q = floor((r-2)/2): place the level-q and middle pairs both ways,
/// keep the candidates whose own maximal tables reproduce every supplied
/// table, and separate any remainder with direct probes.
pub(crate) fn assemble_from_prefix(
    state: &mut ReconState,
    o: &DeckOracle,
    batons: &BTreeMap<usize, MaximalFamilyTable>,
    tritons: &BTreeMap<(usize, usize), MaximalFamilyTable>,
    lp: &LevelPairs,
    prefix: Vec<usize>,
    suffix: Vec<usize>,
) -> Result<Caterpillar, ReconError> {
    let r = state.r;
    let q = (r - 2) / 2;
    debug_assert_eq!(prefix.len(), q - 1);
    debug_assert_eq!(suffix.len(), q - 1);
    state.prefix = prefix.clone();
    state.suffix = suffix.clone();

    let a_pair = lp.pairs[q - 1];
    let (b_pair, center) = if r % 2 == 0 {
        ((lp.middle[0], lp.middle[1]), None)
    } else {
        (lp.pairs[q], Some(lp.middle[0]))
    };

    let mut canon: BTreeSet<Vec<usize>> = BTreeSet::new();
    for &(x, xp) in &[a_pair, (a_pair.1, a_pair.0)] {
        for &(y, yp) in &[b_pair, (b_pair.1, b_pair.0)] {
            let mut sp = prefix.clone();
            sp.push(x);
            sp.push(y);
            if let Some(c) = center {
                sp.push(c);
            }
            sp.push(yp);
            sp.push(xp);
            sp.extend(suffix.iter().rev());
            let g = Caterpillar::from_spine(&sp)
                .map_err(|e| ReconError::InconsistentDeck(e.to_string()))?;
            canon.insert(g.spine().to_vec());
        }
    }

    let mut survivors: Vec<Caterpillar> = Vec::new();
    'cand: for sp in &canon {
        let g = Caterpillar::from_spine(sp).expect("candidate spine was already built once");
        for (&j, table) in batons {
            let kind = FamilyKind::batons(j).expect("positive window length");
            if direct_maximal_table(&g, kind) != *table {
                continue 'cand;
            }
        }
        for (&(j, jp), table) in tritons {
            let kind = FamilyKind::tritons(j, jp).expect("positive arm lengths");
            if direct_maximal_table(&g, kind) != *table {
                continue 'cand;
            }
        }
        survivors.push(g);
    }

    if survivors.len() > 1 {
        probe_apart(state, o, &mut survivors)?;
    }
    match survivors.len() {
        1 => Ok(survivors.pop().expect("one survivor")),
        0 => Err(ReconError::InconsistentDeck(
            "no spine produces the recovered window tables".into(),
        )),
        _ => fallthrough(state),
    }
}

/// Tell apart candidates that share every recovered table by querying
/// patterns on which their predicted counts differ.
///
/// Such candidates differ only in the four or five middle degrees, so a
/// separating pattern exists among batons keyed by spine degrees or their
/// successors, and among tritons with unit arms around one middle vertex.
/// Predictions are evaluated on the candidates themselves; the oracle is
/// consulted once per separating pattern, and only with fitting sizes.
pub(crate) fn probe_apart(
    state: &ReconState,
    o: &DeckOracle,
    survivors: &mut Vec<Caterpillar>,
) -> Result<(), ReconError> {
    let max = o.max_card();
    let mut keys: BTreeSet<usize> = BTreeSet::from([2, 3]);
    for &d in state.spine_degrees() {
        keys.insert(d);
        keys.insert(d + 1);
    }
    // An end key needs a host vertex of at least that degree.
    let keys: Vec<usize> = keys.into_iter().filter(|&k| k <= state.d(1)).collect();

    let mut pats: Vec<PatternGraph> = Vec::new();
    for j in 1..state.r {
        for (ai, &a) in keys.iter().enumerate() {
            for &b in &keys[ai..] {
                if j + a + b - 1 <= max {
                    pats.push(PatternGraph::baton(j, a, b).expect("keys are at least 2"));
                }
            }
        }
    }
    for &y in &keys {
        for (xi, &x) in keys.iter().enumerate() {
            for &z in &keys[xi..] {
                if x + y + z + 1 <= max {
                    pats.push(PatternGraph::triton(2, 2, x, y, z).expect("keys are at least 2"));
                }
            }
        }
    }

    for p in &pats {
        let predicted: Vec<u64> = survivors.iter().map(|g| count_induced(g, p)).collect();
        if predicted.iter().all(|&c| c == predicted[0]) {
            continue;
        }
        let actual = checked_query(o, state, p)?;
        let mut i = 0;
        survivors.retain(|_| {
            let keep = predicted[i] == actual;
            i += 1;
            keep
        });
        if survivors.len() <= 1 {
            break;
        }
    }
    Ok(())
}
