//! Recovery of the maximal-triton tables for every arm pair with
//! j + j' <= (r-4)/2, in the setting with at least four vertices of
//! maximum degree (d_1 = d_4).
//!
//! The two-end windows of these tritons always fit in cards here: the
//! degree-sum identity gives 4(d_1 - 2) <= n - r - 2, so a window baton
//! has at most (r-4)/2 + 2*d_1 - 1 <= n/2 vertices.  What may not fit are
//! triples keyed by several top degrees.  Each case below derives exactly
//! those from probes that provably fit and hands them to `solve_exclusion`
//! as the seed:
//!
//!   * 6*d_1 <= n-r+12:  every shorter maximal triton fits, empty seed
//!   * d_1 = d_5:        all-maximum triple from one probe   (`seed_five_max`)
//!   * d_1 = d_4 > d_5, 6*d_5 <= n-r+6:  probe descent       (`seed_low_fifth`)
//!   * d_1 = d_4 > d_5, 6*d_5 >= n-r+7:  unique fifth vertex (`seed_high_fifth`)

use std::collections::BTreeMap;

use crate::{checked_query, div_exact, fallthrough, ReconError, ReconState};
use maximal_recovery::{
    s_triton_in_triton, solve_exclusion, FamilyKey, FamilyKind, MaximalFamilyTable,
};
use pattern_oracle::{DeckOracle, PatternGraph};

fn probe(
    o: &DeckOracle,
    state: &ReconState,
    arms: (usize, usize),
    keys: (usize, usize, usize),
) -> Result<u128, ReconError> {
    let p = PatternGraph::triton(arms.0, arms.1, keys.0, keys.1, keys.2)
        .map_err(|e| ReconError::InconsistentDeck(e.to_string()))?;
    Ok(checked_query(o, state, &p)? as u128)
}

fn triple(key: FamilyKey) -> (usize, usize, usize) {
    match key {
        FamilyKey::Triple(x, y, z) => (x, y, z),
        FamilyKey::Pair(..) => panic!("triton keys are triples"),
    }
}

/// Complete maximal-triton tables for all arm pairs with j + j' <= (r-4)/2.
pub fn discover_shorter_tritons(
    state: &mut ReconState,
    o: &DeckOracle,
    batons: &BTreeMap<usize, MaximalFamilyTable>,
) -> Result<BTreeMap<(usize, usize), MaximalFamilyTable>, ReconError> {
    if state.d(1) != state.d(4) {
        return fallthrough(state);
    }
    let r = state.r;
    let mut out = BTreeMap::new();
    for jj in 2..=r.saturating_sub(4) / 2 {
        for j in 1..=jj / 2 {
            let jp = jj - j;
            let table = triton_table(state, o, batons, j, jp)?;
            let windows = (r - jj) as u64;
            let expect = if j == jp { windows } else { 2 * windows };
            if table.total() != expect {
                return Err(ReconError::InconsistentDeck(format!(
                    "arm pair ({j},{jp}): triton table covers {} of {expect} directed windows",
                    table.total()
                )));
            }
            out.insert((j, jp), table);
        }
    }
    Ok(out)
}

fn triton_table(
    state: &ReconState,
    o: &DeckOracle,
    batons: &BTreeMap<usize, MaximalFamilyTable>,
    j: usize,
    jp: usize,
) -> Result<MaximalFamilyTable, ReconError> {
    let kind = FamilyKind::tritons(j, jp).expect("arm lengths are positive");
    let nr = state.n - state.r;
    let (d1, d5) = (state.d(1), state.d(5));
    let mut seed = MaximalFamilyTable::new(kind);
    if 6 * d1 <= nr + 12 {
        // Every key degree is at most d_1, so every shorter maximal triton
        // has at most (r-4)/2 + 3*d_1 - 3 <= (n+2)/2 vertices and fits.
    } else if d1 == d5 {
        seed_five_max(state, o, (j, jp), &mut seed)?;
    } else if 6 * d5 <= nr + 6 {
        seed_low_fifth(state, o, (j, jp), &mut seed)?;
    } else {
        seed_high_fifth(state, o, batons, (j, jp), &mut seed)?;
    }
    Ok(solve_exclusion(o, kind, &seed)?)
}

/// d_1 = d_5 > d_6: with five vertices of maximum degree, a subgraph vertex
/// of degree D = d_6 + 1 must come from one of them, so the all-D probe
/// lands exactly in the all-maximum triples.  The probe fits since the top
/// six spine degrees sum to at most n - r + 10 >= 6*d_6 + 4, and every
/// other maximal triton has a key of degree at most d_6 and fits too,
/// since 4*d_1 + 2*d_6 <= n - r + 9.
fn seed_five_max(
    state: &ReconState,
    o: &DeckOracle,
    arms: (usize, usize),
    seed: &mut MaximalFamilyTable,
) -> Result<(), ReconError> {
    let (d1, d6) = (state.d(1), state.d(6));
    let dd = d6 + 1;
    let t = probe(o, state, arms, (dd, dd, dd))?;
    let per = s_triton_in_triton(arms.0 == arms.1, (dd, dd, dd), (d1, d1, d1));
    let e = div_exact(t, per, "all-maximum triton count")?;
    seed.add(FamilyKey::Triple(d1, d1, d1), e);
    Ok(())
}

/// Solve one entry with a key vertex of maximum degree: probe with the
/// stated keys, subtract the copies lying in already-solved entries, and
/// divide by the multiplicity inside the entry's own triton.  Sound
/// whenever every entry that can contain the probe is already in `seed`.
fn solve_entry(
    state: &ReconState,
    o: &DeckOracle,
    arms: (usize, usize),
    seed: &mut MaximalFamilyTable,
    pat: (usize, usize, usize),
    key: (usize, usize, usize),
) -> Result<(), ReconError> {
    let eq = arms.0 == arms.1;
    let t = probe(o, state, arms, pat)?;
    let mut known: u128 = 0;
    for (&hkey, &mult) in seed.entries() {
        known += s_triton_in_triton(eq, pat, triple(hkey)) * mult as u128;
    }
    let rest = t.checked_sub(known).ok_or_else(|| {
        ReconError::InconsistentDeck(format!(
            "probe ({},{},{}) counts fewer copies than its solved share",
            pat.0, pat.1, pat.2
        ))
    })?;
    let own = s_triton_in_triton(eq, pat, key);
    let c = div_exact(rest, own, "descent entry")?;
    seed.add(FamilyKey::Triple(key.0, key.1, key.2), c);
    Ok(())
}

/// d_1 = d_4 > d_5 with 6*d_5 <= n - r + 6: probes whose keys are at most
/// L = d_5 + 1 fit in cards ((r-4)/2 + 3*L - 3 <= (n+2)/2), and a subgraph
/// vertex of degree L must map to a vertex of maximum degree.  Walking the
/// degree values below the maximum downward, such probes pin every entry
/// with one, two or three maximum keys; all remaining entries have keys at
/// most d_5 and fit in cards.
fn seed_low_fifth(
    state: &ReconState,
    o: &DeckOracle,
    arms: (usize, usize),
    seed: &mut MaximalFamilyTable,
) -> Result<(), ReconError> {
    let uneq = arms.0 != arms.1;
    let (d1, d5) = (state.d(1), state.d(5));
    let l = d5 + 1;
    let mut vals: Vec<usize> = state
        .spine_degrees()
        .iter()
        .copied()
        .filter(|&d| d < d1)
        .collect();
    vals.sort_unstable_by(|a, b| b.cmp(a));
    vals.dedup();

    // Three maximum keys.
    solve_entry(state, o, arms, seed, (l, l, l), (d1, d1, d1))?;
    // Two maximum keys: small near end, then small far end (these differ
    // only when the arms do), then small middle.
    for &a in &vals {
        solve_entry(state, o, arms, seed, (a, l, l), (a, d1, d1))?;
    }
    if uneq {
        for &c in &vals {
            solve_entry(state, o, arms, seed, (l, l, c), (d1, d1, c))?;
        }
    }
    for &b in &vals {
        if b >= 3 {
            solve_entry(state, o, arms, seed, (l, b, l), (d1, b, d1))?;
        }
    }
    // One maximum key at an end; larger middles and larger ends first, so
    // every entry that can contain the probe is already solved.
    for &y in &vals {
        if y < 3 {
            continue;
        }
        for &x in &vals {
            solve_entry(state, o, arms, seed, (x, y, l), (x, y, d1))?;
        }
        if uneq {
            for &z in &vals {
                solve_entry(state, o, arms, seed, (l, y, z), (d1, y, z))?;
            }
        }
    }
    // One maximum key in the middle; end pairs by descending degree sum,
    // so containing entries (componentwise larger ends) come first.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &x in &vals {
        for &z in &vals {
            if uneq || x <= z {
                pairs.push((x, z));
            }
        }
    }
    pairs.sort_unstable_by(|p, q| (q.0 + q.1, q.0).cmp(&(p.0 + p.1, p.0)));
    for (x, z) in pairs {
        solve_entry(state, o, arms, seed, (x, l, z), (x, d1, z))?;
    }
    Ok(())
}

/// d_1 = d_4 > d_5 with 6*d_5 >= n - r + 7: the degree-sum identity forces
/// d_6 < d_5, so the fifth spine vertex w_5 is unique, and the entries that
/// may not fit in cards all read their keys off w_5 and the four maximum
/// vertices.  The maximal-baton tables say how many maximum-degree vertices
/// sit at each arm distance from w_5, which pins the (d_1, d_5, d_1) count g
/// except when both distances hold exactly one; the probe with keys
/// (d_5+1, d_6+1, d_5+1) then gives the all-maximum count e and settles
/// that split, since g contributes a nonzero residue modulo e's
/// coefficient.  Probes with the d_6+1 key moved to an end give the
/// w_5-at-an-end counts.  Everything else has a key of degree at most d_6
/// and fits in a card, since 4*d_1 + d_5 + d_6 <= n - r + 12.
fn seed_high_fifth(
    state: &ReconState,
    o: &DeckOracle,
    batons: &BTreeMap<usize, MaximalFamilyTable>,
    arms: (usize, usize),
    seed: &mut MaximalFamilyTable,
) -> Result<(), ReconError> {
    let (j, jp) = arms;
    let eq = j == jp;
    let (d1, d5, d6) = (state.d(1), state.d(5), state.d(6));

    // Maximum-degree vertices at spine distance k from w_5, read off the
    // maximal batons keyed {d_1, d_5}; at most one per side.
    let near = |k: usize| -> Result<u64, ReconError> {
        let t = batons.get(&k).ok_or_else(|| {
            ReconError::InconsistentDeck(format!("no baton table for window length {k}"))
        })?;
        let c = t.get(FamilyKey::Pair(d1, d5));
        if c > 2 {
            return Err(ReconError::InconsistentDeck(format!(
                "{c} maximum-degree vertices at distance {k} from the fifth vertex"
            )));
        }
        Ok(c)
    };
    let (nj, njp) = (near(j)?, near(jp)?);
    let g_known: Option<u64> = if eq {
        Some(u64::from(nj == 2))
    } else if nj == 0 || njp == 0 {
        Some(0)
    } else if nj == 2 || njp == 2 {
        // One side always supplies the opposite end, so every vertex at the
        // scarcer distance yields a unit.
        Some(nj.min(njp))
    } else {
        None
    };

    let bp = (d5 + 1, d6 + 1, d5 + 1);
    let t_beta = probe(o, state, arms, bp)?;
    let top = s_triton_in_triton(eq, bp, (d1, d1, d1));
    let mid = s_triton_in_triton(eq, bp, (d1, d5, d1));
    let (e, g) = match g_known {
        Some(g) => {
            let rest = t_beta.checked_sub(g as u128 * mid).ok_or_else(|| {
                ReconError::InconsistentDeck(
                    "symmetric probe counts fewer copies than the middle-fifth share".into(),
                )
            })?;
            (div_exact(rest, top, "all-maximum triton count")?, g)
        }
        None => {
            // One maximum vertex at each arm distance from w_5: a unit
            // exists exactly when they sit on opposite sides.
            let rem = t_beta % top;
            if rem == 0 {
                (div_exact(t_beta, top, "all-maximum triton count")?, 0)
            } else if rem == mid {
                (div_exact(t_beta - mid, top, "all-maximum triton count")?, 1)
            } else {
                return Err(ReconError::InconsistentDeck(
                    "symmetric probe residue matches no side split around the fifth vertex"
                        .into(),
                ));
            }
        }
    };
    seed.add(FamilyKey::Triple(d1, d1, d1), e);
    seed.add(FamilyKey::Triple(d1, d5, d1), g);

    // w_5 at the near end, and at the far end when the arms differ.
    let gp = (d6 + 1, d5 + 1, d5 + 1);
    solve_entry(state, o, arms, seed, gp, (d5, d1, d1))?;
    if !eq {
        let gp2 = (d5 + 1, d5 + 1, d6 + 1);
        solve_entry(state, o, arms, seed, gp2, (d1, d1, d5))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{case_tag, discover_short_batons};
    use caterpillar_core::{enumerate_caterpillars, Caterpillar};
    use maximal_recovery::direct_maximal_table;

    fn check_tables(spine: &[usize]) {
        let g = Caterpillar::from_spine(spine).unwrap();
        let mut degrees = g.degree_multiset();
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        let mut state = crate::ReconState::new(g.n(), degrees, case_tag(g.n(), &[]));
        let o = pattern_oracle::DeckOracle::hidden(g.clone());
        let batons = discover_short_batons(&mut state, &o).unwrap();
        let tables = discover_shorter_tritons(&mut state, &o, &batons).unwrap();
        let r = g.r();
        let families: usize = (2..=r.saturating_sub(4) / 2).map(|jj| jj / 2).sum();
        assert_eq!(tables.len(), families, "hidden {spine:?}");
        for ((j, jp), table) in &tables {
            let kind = FamilyKind::tritons(*j, *jp).unwrap();
            assert_eq!(
                table,
                &direct_maximal_table(&g, kind),
                "hidden {spine:?}, arms ({j},{jp})"
            );
        }
        assert_eq!(o.illegal_attempts(), 0);
    }

    #[test]
    fn all_keys_fit_gate() {
        // Six vertices of maximum degree 3: every shorter triton fits.
        check_tables(&[3, 2, 3, 2, 3, 2, 3, 2, 3]);
        check_tables(&[3, 3, 3, 3, 2, 2, 2]);
    }

    #[test]
    fn five_maximum_vertices() {
        // (5,5,5,5,5) on twelve spine vertices: n = 29, so the all-maximum
        // triple at arm sum 4 has 16 > 15 vertices and needs the seed.
        check_tables(&[5, 5, 5, 5, 5, 2, 2, 2, 2, 2, 2, 2]);
        check_tables(&[5, 2, 5, 5, 2, 5, 2, 5, 2, 2, 2, 2]);
    }

    #[test]
    fn low_fifth_degree() {
        // (6,6,6,6,4,3): 6*d_5 = 24 <= n-r+6 = 27, descent over {4,3,2}.
        check_tables(&[6, 2, 6, 4, 2, 6, 3, 2, 6, 2, 2, 2, 2, 2, 2, 2]);
        // (5,5,5,5,3,3): descent over {3,2}.
        check_tables(&[5, 2, 5, 3, 2, 5, 3, 2, 5, 2, 2]);
    }

    #[test]
    fn high_fifth_degree() {
        // (6,6,6,6,5) with n-r = 21 <= 6*d_5 - 7: the fifth vertex is
        // unique; its maximum neighbors at distances 1 and 3 give units.
        check_tables(&[6, 2, 6, 5, 6, 2, 2, 6, 2, 2, 2, 2, 2, 2, 2, 2]);
        // One maximum vertex at each of two distances, same side: the
        // symmetric probe divides evenly and the split resolves to zero.
        check_tables(&[2, 6, 6, 5, 2, 2, 6, 2, 6, 2, 2, 2, 2, 2, 2, 2]);
        // Same counts on opposite sides: nonzero residue, split resolves
        // to one.
        check_tables(&[2, 2, 6, 5, 2, 6, 2, 2, 6, 2, 6, 2, 2, 2, 2, 2]);
        // A sixth degree above 2.
        check_tables(&[6, 2, 6, 5, 6, 2, 3, 6, 2, 2, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn exhaustive_small_instances() {
        for n in 10..=18 {
            for g in enumerate_caterpillars(n) {
                let mut degrees = g.degree_multiset();
                degrees.sort_unstable_by(|a, b| b.cmp(a));
                let r = g.r();
                let high = r >= 3 && 2 * r >= n.saturating_sub(5);
                let four_max = degrees[0] >= 3 && degrees.get(3) == Some(&degrees[0]);
                if high && four_max {
                    check_tables(&g.spine().to_vec());
                }
            }
        }
    }
}
