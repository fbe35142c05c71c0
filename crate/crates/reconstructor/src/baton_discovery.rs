//! Recovery of the maximal-baton tables for every window length
//! j <= (r-1)/2, in the setting with two or more vertices of maximum
//! degree and at least four branch vertices (d_1 = d_2, d_4 >= 3).
//!
//! Probes whose key degrees are at most alpha+1 always fit in cards:
//! with alpha = floor((n-r+1)/4) the probe has at most
//! (r-1)/2 + 2*alpha + 1 <= (n+2)/2 vertices.  Each case below derives,
//! from such probes, the multiplicities of exactly those maximal batons
//! that may be too large to query, and hands them to `solve_exclusion`
//! as the seed.  The high-degree structure splits on how the top four
//! degrees compare to alpha:
//!
//!   * d_3 <= alpha:   only w_1, w_2 reach above alpha  (`seed_two_dominant`)
//!   * d_4 <= alpha < d_3:  w_1..w_3 reach above alpha  (`seed_three_dominant`)
//!   * d_4 > alpha, loose fit (4a+2 <= n-r+1):          (`seed_pinched`)
//!   * d_4 > alpha, tight fit:                          (`seed_forced_tight`)
//!
//! The degree-sum identity sum(d_i - 2) = n - r - 2 pins the possible
//! degree profiles in the last two cases and shows that in every case all
//! unseeded maximal batons fit in cards.

use std::collections::BTreeMap;

use crate::{checked_query, div_exact, fallthrough, ReconError, ReconState};
use caterpillar_core::binomial;
use maximal_recovery::{
    s_baton_in_baton, solve_exclusion, FamilyKey, FamilyKind, MaximalFamilyTable,
};
use pattern_oracle::{DeckOracle, PatternGraph};

fn probe(
    o: &DeckOracle,
    state: &ReconState,
    j: usize,
    a: usize,
    b: usize,
) -> Result<u128, ReconError> {
    let p = PatternGraph::baton(j, a, b)
        .map_err(|e| ReconError::InconsistentDeck(e.to_string()))?;
    Ok(checked_query(o, state, &p)? as u128)
}

/// Complete maximal-baton tables for all window lengths j <= (r-1)/2.
pub fn discover_short_batons(
    state: &mut ReconState,
    o: &DeckOracle,
) -> Result<BTreeMap<usize, MaximalFamilyTable>, ReconError> {
    if state.d(1) != state.d(2) || state.d(4) < 3 {
        return fallthrough(state);
    }
    let r = state.r;
    let mut out = BTreeMap::new();
    for j in 1..=(r - 1) / 2 {
        let table = baton_table(state, o, j)?;
        if table.total() != (r - j) as u64 {
            return Err(ReconError::InconsistentDeck(format!(
                "length-{j} baton table covers {} of {} spine windows",
                table.total(),
                r - j
            )));
        }
        out.insert(j, table);
    }
    Ok(out)
}

fn baton_table(
    state: &mut ReconState,
    o: &DeckOracle,
    j: usize,
) -> Result<MaximalFamilyTable, ReconError> {
    let kind = FamilyKind::batons(j).expect("window length is positive");
    let alpha = state.alpha;
    let mut seed = MaximalFamilyTable::new(kind);
    if state.d(1) <= alpha + 1 {
        // Every maximal baton's keys are at most alpha+1, so all of them fit
        // in cards and the plain exclusion needs no seed.
    } else if state.d(4) <= alpha {
        if state.d(3) <= alpha {
            seed_two_dominant(state, o, j, &mut seed)?;
        } else {
            seed_three_dominant(state, o, j, &mut seed)?;
        }
    } else if 4 * alpha + 2 <= state.n - state.r + 1 {
        if alpha == 1 {
            // Degree profile forced to (3,3,3,3) with n-r = 6; the probe
            // keys collapse to spine degrees and a direct linear system
            // yields the whole table without exclusion.
            return table_all_threes(state, o, j);
        }
        seed_pinched(state, o, j, &mut seed)?;
    } else {
        seed_forced_tight(state, o, j, &mut seed)?;
    }
    Ok(solve_exclusion(o, kind, &seed)?)
}

/// d_3 <= alpha < d_1 = d_2: only w_1 and w_2 have degree above alpha, so
/// probes with an alpha+1 key land only in batons anchored at them.  The
/// symmetric probe gives the (d_1,d_1) indicator; the mixed probe then
/// gives the (d_1,d_3) multiplicity.  Every other maximal baton has both
/// keys at most d_3, or one key d_1 and the other under d_3; the degree-sum
/// identity bounds those by (n+2)/2 vertices, so no further seeds needed.
fn seed_two_dominant(
    state: &ReconState,
    o: &DeckOracle,
    j: usize,
    seed: &mut MaximalFamilyTable,
) -> Result<(), ReconError> {
    let (d1, d3) = (state.d(1), state.d(3));
    let a1 = state.alpha + 1;
    let t1 = probe(o, state, j, a1, a1)?;
    let e = div_exact(t1, s_baton_in_baton(a1, a1, d1, d1), "top-pair indicator")?;
    if e > 1 {
        return Err(ReconError::InconsistentDeck(format!(
            "{e} batons join the two maximum-degree vertices at one distance"
        )));
    }
    seed.add(FamilyKey::Pair(d1, d1), e);

    let t2 = probe(o, state, j, a1, d3)?;
    let inside_top = e as u128 * s_baton_in_baton(a1, d3, d1, d1);
    let rest = t2.checked_sub(inside_top).ok_or_else(|| {
        ReconError::InconsistentDeck("mixed probe count below its forced share".into())
    })?;
    let q = div_exact(rest, s_baton_in_baton(a1, d3, d1, d3), "mixed-pair count")?;
    seed.add(FamilyKey::Pair(d1, d3), q);
    Ok(())
}

/// 2 < d_4 <= alpha <= d_3 - 1: exactly w_1..w_3 have degree above alpha.
/// The symmetric alpha+1 probe decomposes over the (d_1,d_1) and (d_1,d_3)
/// maximal batons; the coefficient arithmetic admits one collision, which
/// a second probe with keys alpha resolves.
fn seed_three_dominant(
    state: &ReconState,
    o: &DeckOracle,
    j: usize,
    seed: &mut MaximalFamilyTable,
) -> Result<(), ReconError> {
    let (d1, d3, d4) = (state.d(1), state.d(3), state.d(4));
    let alpha = state.alpha;
    let a1 = alpha + 1;
    let t = probe(o, state, j, a1, a1)?;
    let top_sq = s_baton_in_baton(a1, a1, d1, d1);

    if state.d(2) == d3 {
        // Three vertices of maximum degree: every probe copy lies in a
        // (d_1,d_1) maximal baton, of which at most two exist per length.
        let e = div_exact(t, top_sq, "top-pair count")?;
        if e > 2 {
            return Err(ReconError::InconsistentDeck(format!(
                "{e} batons join maximum-degree vertices at one distance"
            )));
        }
        seed.add(FamilyKey::Pair(d1, d1), e);
        return Ok(());
    }

    // d_1 = d_2 > d_3 > d_4: a unique vertex of degree d_3.
    let cross = s_baton_in_baton(a1, a1, d1, d3);
    let mut matches: Vec<(u64, u64)> = Vec::new();
    for e in 0..=1u64 {
        for f in 0..=2u64 {
            if e as u128 * top_sq + f as u128 * cross == t {
                matches.push((e, f));
            }
        }
    }
    let (e, f) = match matches.len() {
        1 => matches[0],
        2 if d4 < alpha => {
            // Collision requires the square coefficient to be exactly twice
            // the cross one; a probe one key lower has a different ratio.
            let tp = probe(o, state, j, alpha, alpha)?;
            matches.retain(|&(e, f)| {
                e as u128 * s_baton_in_baton(alpha, alpha, d1, d1)
                    + f as u128 * s_baton_in_baton(alpha, alpha, d1, d3)
                    == tp
            });
            if matches.len() != 1 {
                return Err(ReconError::InconsistentDeck(
                    "probe collision not separated by the lower-key probe".into(),
                ));
            }
            matches[0]
        }
        2 => {
            // With d_4 = alpha the degree-sum identity forces d_1 <= alpha+3,
            // whose coefficient ratio exceeds 2, so the collision cannot
            // arise from any caterpillar deck.
            return Err(ReconError::InconsistentDeck(
                "probe collision in a regime where none is possible".into(),
            ));
        }
        _ => {
            return Err(ReconError::InconsistentDeck(
                "probe count matches no placement of the three top vertices".into(),
            ));
        }
    };
    seed.add(FamilyKey::Pair(d1, d1), e);
    seed.add(FamilyKey::Pair(d1, d3), f);
    Ok(())
}

/// d_4 > alpha with room to spare (4*alpha + 2 <= n - r + 1): the degree-sum
/// identity forces the top four degrees into alpha+1..alpha+3, and the
/// single probe with keys (alpha+2, alpha+1) decomposes as
/// F * (2*C(d_1-1, alpha) * e + f) with f <= 4 < 2*C(d_1-1, alpha), where
/// e counts (d_1,d_1) windows and f counts (d_1, alpha+1) windows.
fn seed_pinched(
    state: &ReconState,
    o: &DeckOracle,
    j: usize,
    seed: &mut MaximalFamilyTable,
) -> Result<(), ReconError> {
    let d1 = state.d(1);
    let alpha = state.alpha;
    let t = probe(o, state, j, alpha + 2, alpha + 1)?;
    let u = div_exact(t, binomial(d1 - 1, alpha + 1) as u128, "pinched probe")?;
    let e2 = 2 * binomial(d1 - 1, alpha);
    let (e, f) = (u / e2, u % e2);
    if e > 3 || f > 4 {
        return Err(ReconError::InconsistentDeck(format!(
            "pinched probe decomposition ({e}, {f}) exceeds the window bounds"
        )));
    }
    seed.add(FamilyKey::Pair(d1, d1), e);
    seed.add(FamilyKey::Pair(d1, alpha + 1), f);
    Ok(())
}

/// The alpha = 1 corner of the pinched case: degrees (3,3,3,3) with
/// n - r = 6.  Probe keys at alpha+2 = 3 coincide with actual spine degrees,
/// so maximal batons of every key shape exist and the division argument of
/// `seed_pinched` breaks.  Instead the two smallest probes and the window
/// count give an exact linear system for the full table:
///
///   #B_{j:3,2} = 4e + f,  #B_{j:2,2} = 4e + 2f + g,  e + f + g = r - j
fn table_all_threes(
    state: &ReconState,
    o: &DeckOracle,
    j: usize,
) -> Result<MaximalFamilyTable, ReconError> {
    let kind = FamilyKind::batons(j).expect("window length is positive");
    let windows = (state.r - j) as u128;
    let t32 = probe(o, state, j, 3, 2)?;
    let t22 = probe(o, state, j, 2, 2)?;
    let bad = || ReconError::InconsistentDeck("all-threes linear system has no solution".into());
    let fg = t22.checked_sub(t32).ok_or_else(bad)?;
    let e = windows.checked_sub(fg).ok_or_else(bad)?;
    let f = t32.checked_sub(4 * e).ok_or_else(bad)?;
    let g = fg.checked_sub(f).ok_or_else(bad)?;
    let mut table = MaximalFamilyTable::new(kind);
    table.add(FamilyKey::Pair(3, 3), e as u64);
    table.add(FamilyKey::Pair(3, 2), f as u64);
    table.add(FamilyKey::Pair(2, 2), g as u64);
    Ok(table)
}

/// d_4 > alpha in the tight regime (4*alpha >= n - r): the degree-sum
/// identity forces d_5 = 2, alpha = (n-r)/4 and degrees
/// (alpha+2, alpha+2, beta, beta) with beta = alpha+1 >= 3.  The symmetric
/// beta probe decomposes as beta^2 e + beta f + g over the twelve
/// geometrically possible placements of the four branch vertices; the lone
/// arithmetic collision (beta = 3, 9 = beta^2 = 3*beta) is settled by a
/// (d_1, beta) probe, which fits because the colliding placement needs
/// 3j <= r - 1.
fn seed_forced_tight(
    state: &ReconState,
    o: &DeckOracle,
    j: usize,
    seed: &mut MaximalFamilyTable,
) -> Result<(), ReconError> {
    let d1 = state.d(1);
    let alpha = state.alpha;
    let beta = alpha + 1;
    if d1 != alpha + 2
        || state.d(2) != alpha + 2
        || state.d(3) != beta
        || state.d(4) != beta
        || state.d(5) > 2
        || beta < 3
    {
        return Err(ReconError::InconsistentDeck(
            "degree profile contradicts the tight-fit regime".into(),
        ));
    }
    let t = probe(o, state, j, beta, beta)?;
    // (e, f, g) = windows keyed (d_1,d_1), (d_1,beta), (beta,beta); the
    // placements of four marked spine vertices allow exactly these combos.
    const COMBOS: [(u64, u64, u64); 12] = [
        (1, 2, 0),
        (1, 1, 1),
        (1, 1, 0),
        (1, 0, 1),
        (1, 0, 0),
        (0, 3, 0),
        (0, 2, 1),
        (0, 2, 0),
        (0, 1, 1),
        (0, 1, 0),
        (0, 0, 1),
        (0, 0, 0),
    ];
    let b = beta as u128;
    let mut matches: Vec<(u64, u64, u64)> = COMBOS
        .iter()
        .copied()
        .filter(|&(e, f, g)| e as u128 * b * b + f as u128 * b + g as u128 == t)
        .collect();
    if matches.len() == 2 {
        let collision = matches == [(1, 0, 0), (0, 3, 0)] || matches == [(0, 3, 0), (1, 0, 0)];
        if !collision {
            return Err(ReconError::InconsistentDeck(
                "unexpected probe collision in the tight-fit regime".into(),
            ));
        }
        // Three (d_1, beta) windows need the branch vertices equally spaced,
        // which is impossible unless 3j fits on the spine.
        if 3 * j > state.r - 1 {
            matches = vec![(1, 0, 0)];
        } else {
            let t2 = probe(o, state, j, d1, beta)?;
            let inside_top = s_baton_in_baton(d1, beta, d1, d1);
            let per_own = s_baton_in_baton(d1, beta, d1, beta);
            matches = if t2 == inside_top {
                vec![(1, 0, 0)]
            } else if t2 == 3 * per_own {
                vec![(0, 3, 0)]
            } else {
                Vec::new()
            };
        }
    }
    if matches.len() != 1 {
        return Err(ReconError::InconsistentDeck(
            "tight-fit probe matches no placement of the four branch vertices".into(),
        ));
    }
    let (e, f, g) = matches[0];
    seed.add(FamilyKey::Pair(d1, d1), e);
    seed.add(FamilyKey::Pair(d1, beta), f);
    seed.add(FamilyKey::Pair(beta, beta), g);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_tag;
    use caterpillar_core::{enumerate_caterpillars, Caterpillar};
    use maximal_recovery::direct_maximal_table;

    fn check_tables(spine: &[usize]) {
        let g = Caterpillar::from_spine(spine).unwrap();
        let mut degrees = g.degree_multiset();
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        let mut state = crate::ReconState::new(g.n(), degrees, case_tag(g.n(), &[]));
        let o = pattern_oracle::DeckOracle::hidden(g.clone());
        let tables = discover_short_batons(&mut state, &o).unwrap();
        assert_eq!(tables.len(), (g.r() - 1) / 2, "hidden {spine:?}");
        for (j, table) in &tables {
            let kind = FamilyKind::batons(*j).unwrap();
            assert_eq!(
                table,
                &direct_maximal_table(&g, kind),
                "hidden {spine:?}, length {j}"
            );
        }
        assert_eq!(o.illegal_attempts(), 0);
    }

    #[test]
    fn all_keys_fit_gate() {
        // Five branch vertices of degree 3: alpha+1 = 3 reaches d_1.
        check_tables(&[3, 2, 3, 2, 3, 2, 3, 2, 3]);
    }

    #[test]
    fn two_dominant_degrees() {
        // (7,7,3,3): alpha = 3 >= d_3, top pair far apart and near.
        check_tables(&[7, 2, 3, 2, 2, 2, 3, 2, 7]);
        check_tables(&[7, 2, 2, 7, 3, 2, 3, 2, 2]);
    }

    #[test]
    fn three_dominant_degrees() {
        // (6,6,6,3): alpha = 4 sits between d_4 = 3 and d_3 = 6.
        check_tables(&[6, 2, 6, 2, 2, 3, 2, 2, 6, 2]);
        // (7,7,5,3): alpha = 4, unique third vertex above alpha.
        check_tables(&[7, 2, 5, 2, 2, 3, 2, 2, 2, 2, 7]);
        check_tables(&[7, 5, 2, 3, 2, 2, 7, 2, 2, 2, 2]);
    }

    #[test]
    fn pinched_profiles() {
        // (5,5,3,3) with n-r = 10: top degrees alpha+3, alpha+3/alpha+1.
        check_tables(&[5, 2, 3, 2, 3, 2, 5]);
        check_tables(&[5, 3, 2, 2, 3, 2, 5]);
        // (4,4,4,4) with n-r = 10: all four at alpha+2.
        check_tables(&[4, 2, 4, 2, 2, 4, 2, 4]);
        // (4,4,4,3,3) with n-r = 10: three at alpha+2.
        check_tables(&[4, 3, 4, 2, 3, 2, 2, 4, 2]);
        // (4,4,3,3,3) with n-r = 9: two at alpha+2.
        check_tables(&[4, 3, 2, 3, 2, 3, 2, 2, 4]);
    }

    #[test]
    fn all_threes_profile() {
        // (3,3,3,3) with n-r = 6 is the alpha = 1 linear-system path.
        check_tables(&[3, 2, 3, 2, 2, 3, 2, 2, 3]);
        check_tables(&[3, 3, 2, 2, 3, 2, 3, 2, 2]);
        check_tables(&[3, 3, 3, 3, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn tight_fit_profiles() {
        // (5,5,4,4) with n-r = 12: beta = 4, no probe collision.
        check_tables(&[5, 2, 4, 2, 2, 2, 4, 2, 5]);
        // (4,4,3,3) with n-r = 8: beta = 3; first spine realizes the
        // adjacent-top side of the 9 = beta^2 = 3*beta collision, second
        // the equally-spaced side.
        check_tables(&[4, 2, 4, 3, 2, 2, 2, 3, 2]);
        check_tables(&[4, 2, 3, 2, 4, 2, 3, 2, 2]);
    }

    #[test]
    fn exhaustive_small_instances() {
        for n in 10..=16 {
            for g in enumerate_caterpillars(n) {
                let mut degrees = g.degree_multiset();
                degrees.sort_unstable_by(|a, b| b.cmp(a));
                let r = g.r();
                let high = r >= 3 && 2 * r >= n.saturating_sub(5);
                let applies = high && degrees[0] == degrees[1] && degrees.get(3).map_or(false, |&d| d >= 3);
                if applies && r >= 3 {
                    check_tables(&g.spine().to_vec());
                }
            }
        }
    }
}
