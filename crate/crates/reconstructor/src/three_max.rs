//! Reconstruction with exactly three vertices of maximum degree on a
//! high-diameter spine: d_1 = d_3 > d_4 >= 3 and at least four branch
//! vertices.
//!
//! The maximum-degree vertices come first.  Each occupies a level that
//! leaves at most two mirror slots, so at most eight placements exist, and
//! the (d_1, d_1) baton counts eliminate all but one reflection class.  Two
//! classes survive only in one equal-gap layout, where the lone vertex may
//! sit shallow on one side or deep on the other; a pair of triton probes
//! rooted at the pair both layouts share decides between them.
//!
//! Branch vertices of unique degree are then located one level at a time by
//! matching baton counts against the vertices already placed, down to d_t,
//! the first repeated branch degree.  If d_t = 2 the spine is complete.
//! Otherwise the shorter-triton tables finish the job as in the
//! four-maximum case.  The new difficulty is seeding those tables: an entry
//! too large to query need not be dominated by the maximum degree here.
//! Windows whose three key vertices are all placed are tallied directly
//! from the positions; every other oversized entry is solved by a probe
//! whose keys step just past the next smaller degree value, so the probe
//! binds exactly the entries dominating its target componentwise.  Solving
//! in decreasing key-sum order makes that triangular, and each such probe
//! fits in a card.

use std::collections::{BTreeMap, BTreeSet};

use caterpillar_core::{binomial, Caterpillar};
use maximal_recovery::{
    level_pairs, s_triton_in_triton, solve_exclusion, FamilyKey, FamilyKind, LevelPairs,
    MaximalFamilyTable,
};
use pattern_oracle::{DeckOracle, PatternGraph};

use crate::{
    checked_query, div_exact, fallthrough, finalize_from_tables, ReconError, ReconState,
};

/// Reconstruct a caterpillar with d_1 = d_3 > d_4 >= 3 on a long spine.
pub fn reconstruct_three_max(
    state: &mut ReconState,
    o: &DeckOracle,
    batons: &BTreeMap<usize, MaximalFamilyTable>,
) -> Result<Caterpillar, ReconError> {
    if state.d(1) != state.d(3) || state.d(3) == state.d(4) || state.d(4) < 3 || state.r < 9 {
        return fallthrough(state);
    }
    let r = state.r;
    let lp = level_pairs(batons, state.spine_degrees())?;
    let w3 = locate_w3(state, o, batons, &lp)?;
    let d1 = state.d(1);
    let mut positioned: BTreeMap<usize, usize> = w3.iter().map(|&p| (p, d1)).collect();
    let mut branch_order = w3;

    // First repeated branch degree: every vertex above it gets located.  A
    // strictly decreasing run d_4 > ... > d_r would force a short spine.
    let t = (4..r).find(|&i| state.d(i) == state.d(i + 1)).ok_or_else(|| {
        ReconError::InconsistentDeck("no repeated branch degree on a long spine".into())
    })?;
    for i in 4..t {
        let p = locate_unique_branch(state, o, batons, &lp, &positioned, state.d(i))?;
        positioned.insert(p, state.d(i));
        branch_order.push(p);
    }
    state.level_pairs = Some(lp);
    state.branch_indices = Some(branch_order);

    if state.d(t) == 2 {
        return spine_from_positions(state, &positioned);
    }
    let tritons = shorter_tritons(state, o, &positioned)?;
    finalize_from_tables(state, o, batons, &tritons)
}

/// |2p - (r+1)|: twice the distance from spine position p to the middle.
fn doubled_depth(r: usize, p: usize) -> usize {
    (2 * p).abs_diff(r + 1)
}

/// Candidate spine positions for each occurrence of `deg` in the levels.
fn level_slots(lp: &LevelPairs, r: usize, deg: usize) -> Vec<Vec<usize>> {
    let mut slots = Vec::new();
    for (i, &(a, b)) in lp.pairs.iter().enumerate() {
        let k = i + 1;
        for v in [a, b] {
            if v == deg {
                slots.push(vec![k, r + 1 - k]);
            }
        }
    }
    for &m in &lp.middle {
        if m == deg {
            if r % 2 == 1 {
                slots.push(vec![(r + 1) / 2]);
            } else {
                slots.push(vec![r / 2, r / 2 + 1]);
            }
        }
    }
    slots
}

/// Positions of the three maximum-degree vertices, canonical under
/// reflection, sorted by depth with the one nearest the middle first.
/// Records the depth gaps in `state.depths`.
fn locate_w3(
    state: &mut ReconState,
    o: &DeckOracle,
    batons: &BTreeMap<usize, MaximalFamilyTable>,
    lp: &LevelPairs,
) -> Result<Vec<usize>, ReconError> {
    let r = state.r;
    let d1 = state.d(1);
    let slots = level_slots(lp, r, d1);
    if slots.len() != 3 {
        return Err(ReconError::InconsistentDeck(format!(
            "levels hold {} maximum-degree vertices instead of 3",
            slots.len()
        )));
    }
    let q = (r - 1) / 2;
    let observed: Vec<u64> = (1..=q)
        .map(|l| batons[&l].get(FamilyKey::Pair(d1, d1)))
        .collect();
    let mut seen = BTreeSet::new();
    let mut survivors: Vec<Vec<usize>> = Vec::new();
    for &p0 in &slots[0] {
        for &p1 in &slots[1] {
            for &p2 in &slots[2] {
                let mut pos = vec![p0, p1, p2];
                pos.sort_unstable();
                if pos[0] == pos[1] || pos[1] == pos[2] {
                    continue;
                }
                let mirror: Vec<usize> = pos.iter().rev().map(|&p| r + 1 - p).collect();
                let canon = pos.clone().min(mirror);
                if !seen.insert(canon.clone()) {
                    continue;
                }
                // Windows longer than q have no baton table and stay unseen.
                let mut predicted = vec![0u64; q];
                for a in 0..3 {
                    for b in a + 1..3 {
                        let l = canon[b] - canon[a];
                        if l <= q {
                            predicted[l - 1] += 1;
                        }
                    }
                }
                if predicted == observed {
                    survivors.push(canon);
                }
            }
        }
    }
    let mut chosen = match survivors.len() {
        1 => survivors.pop().unwrap(),
        2 => split_w3_tie(state, o, &survivors[0], &survivors[1])?,
        k => {
            return Err(ReconError::InconsistentDeck(format!(
                "{k} placements of the maximum-degree vertices match the batons"
            )))
        }
    };
    chosen.sort_unstable_by_key(|&p| (doubled_depth(r, p), p));
    let dd: Vec<usize> = chosen.iter().map(|&p| doubled_depth(r, p)).collect();
    state.depths = Some((dd[0], dd[1] - dd[0], dd[2] - dd[1], r + 1 - dd[2]));
    Ok(chosen)
}

/// Decide between two tied placements of the maximum-degree vertices.
///
/// A tie arises only when the depth gaps are equal and all cross-side
/// distances exceed the known window lengths: one placement has the
/// shallowest vertex alone on its side, the other the deepest.  Both agree
/// on a same-side pair at distance c whose deeper end sits h from the spine
/// end.  Hanging a free end at offset h off that pair reaches one vertex in
/// the shallow-alone layout and two in the deep-alone layout, and asking
/// for one and then two pendants there tells a single host from a split.
fn split_w3_tie(
    state: &ReconState,
    o: &DeckOracle,
    first: &[usize],
    second: &[usize],
) -> Result<Vec<usize>, ReconError> {
    let r = state.r;
    let bad =
        || ReconError::InconsistentDeck("tied maximum-degree placements are not a tie shape".into());
    // Depth-sorted positions, their depths, and whether the lone vertex is
    // the shallow one; center positions and unequal gaps never tie.
    let classify = |pos: &[usize]| -> Option<(Vec<usize>, Vec<usize>, bool)> {
        let mut p = pos.to_vec();
        p.sort_unstable_by_key(|&x| doubled_depth(r, x));
        let d: Vec<usize> = p.iter().map(|&x| doubled_depth(r, x)).collect();
        if d[0] == 0 || d[0] == d[1] || d[1] == d[2] || d[1] - d[0] != d[2] - d[1] {
            return None;
        }
        let h: Vec<bool> = p.iter().map(|&x| 2 * x > r + 1).collect();
        let shallow_alone = h[0] != h[1] && h[1] == h[2];
        let deep_alone = h[2] != h[1] && h[0] == h[1];
        if shallow_alone == deep_alone {
            return None;
        }
        Some((p, d, shallow_alone))
    };
    let a = classify(first).ok_or_else(bad)?;
    let b = classify(second).ok_or_else(bad)?;
    if a.1 != b.1 || a.2 == b.2 {
        return Err(bad());
    }
    let (shallow, deep) = if a.2 { (a, b) } else { (b, a) };
    let c = (shallow.1[2] - shallow.1[1]) / 2;
    let h = (r + 1 - shallow.1[2]) / 2;
    let (d1, d4) = (state.d(1), state.d(4));
    let m = binomial(d1 - 1, d4) as u128 * binomial(d1 - 2, d4 - 1) as u128;
    let count = |end_key: usize| -> Result<u128, ReconError> {
        let pat = PatternGraph::triton(c, h, d4 + 1, d4 + 1, end_key)
            .expect("arm lengths and keys are positive");
        let t = checked_query(o, state, &pat)? as u128;
        Ok(div_exact(t, m, "pendant count at the tied pair")? as u128)
    };
    let pendants = count(2)?;
    let pendant_pairs = count(3)?;
    let one_host = pendants * pendants.saturating_sub(1) / 2;
    match pendant_pairs.cmp(&one_host) {
        std::cmp::Ordering::Equal => Ok(shallow.0),
        std::cmp::Ordering::Less => Ok(deep.0),
        std::cmp::Ordering::Greater => Err(ReconError::InconsistentDeck(
            "the tied pair sees more pendant pairs than its pendants allow".into(),
        )),
    }
}

/// Position of the unique spine vertex of degree `deg`, given the vertices
/// located so far.  Its level leaves at most two mirror slots; occupied
/// slots drop out, then each free slot predicts the (deg, d') window counts
/// toward every located degree d', which usually leaves one match.  A
/// surviving tie is split by the first queryable pattern whose presence
/// differs under the two placements, built from keys 2 (satisfied by any
/// spine vertex), deg (the located vertices and the candidate) and deg + 1
/// (the located vertices alone).  No separating pattern exists only when
/// the located set is mirror symmetric, in which case the two placements
/// are reflections of each other and either will do.
fn locate_unique_branch(
    state: &ReconState,
    o: &DeckOracle,
    batons: &BTreeMap<usize, MaximalFamilyTable>,
    lp: &LevelPairs,
    positioned: &BTreeMap<usize, usize>,
    deg: usize,
) -> Result<usize, ReconError> {
    let r = state.r;
    let mut slots = level_slots(lp, r, deg);
    if slots.len() != 1 {
        return Err(ReconError::InconsistentDeck(format!(
            "levels hold {} vertices of degree {deg} instead of 1",
            slots.len()
        )));
    }
    let mut cands = slots.pop().unwrap();
    cands.retain(|p| !positioned.contains_key(p));
    if cands.len() == 1 {
        return Ok(cands[0]);
    }
    if cands.is_empty() {
        return Err(ReconError::InconsistentDeck(format!(
            "every level slot for degree {deg} is already taken"
        )));
    }
    let q = (r - 1) / 2;
    let located: BTreeSet<usize> = positioned.values().copied().collect();
    let fits: Vec<usize> = cands
        .iter()
        .copied()
        .filter(|&cand| {
            (1..=q).all(|l| {
                located.iter().all(|&dv| {
                    let pred = positioned
                        .iter()
                        .filter(|&(&p, &pv)| pv == dv && p.abs_diff(cand) == l)
                        .count() as u64;
                    batons[&l].get(FamilyKey::Pair(deg, dv)) == pred
                })
            })
        })
        .collect();
    match fits.len() {
        1 => Ok(fits[0]),
        0 => Err(ReconError::InconsistentDeck(format!(
            "no level slot for degree {deg} matches the known windows"
        ))),
        _ => presence_split(state, o, positioned, deg, cands[0], cands[1]),
    }
}

/// Split a two-way positional tie by pattern presence.  Keys are limited to
/// 2, deg and deg + 1 so that presence is decidable from the located
/// vertices and the candidate alone: no unlocated vertex has degree > deg.
fn presence_split(
    state: &ReconState,
    o: &DeckOracle,
    positioned: &BTreeMap<usize, usize>,
    deg: usize,
    ca: usize,
    cb: usize,
) -> Result<usize, ReconError> {
    let r = state.r;
    let mc = o.max_card();
    let keys = [2, deg, deg + 1];
    let sat =
        |key: usize, p: usize, cand: usize| key == 2 || positioned.contains_key(&p) || (p == cand && key <= deg);
    for l in 1..r {
        for (i, &ka) in keys.iter().enumerate() {
            for &kb in &keys[i..] {
                if l + ka + kb - 1 > mc {
                    continue;
                }
                let pres = |cand: usize| {
                    (1..=r - l).any(|p| {
                        (sat(ka, p, cand) && sat(kb, p + l, cand))
                            || (sat(kb, p, cand) && sat(ka, p + l, cand))
                    })
                };
                let (pa, pb) = (pres(ca), pres(cb));
                if pa != pb {
                    let pat = PatternGraph::baton(l, ka, kb).expect("keys are at least 2");
                    let found = checked_query(o, state, &pat)? > 0;
                    return Ok(if found == pa { ca } else { cb });
                }
            }
        }
    }
    for la in 1..=r.saturating_sub(2) {
        for lb in la..r - la {
            for &kx in &keys {
                for &ky in &keys {
                    for &kz in &keys {
                        if la == lb && (kz, ky, kx) < (kx, ky, kz) {
                            continue;
                        }
                        if la + lb + kx + ky + kz - 3 > mc {
                            continue;
                        }
                        let pres = |cand: usize| {
                            (1..=r - la - lb).any(|p| {
                                (sat(kx, p, cand)
                                    && sat(ky, p + la, cand)
                                    && sat(kz, p + la + lb, cand))
                                    || (sat(kz, p, cand)
                                        && sat(ky, p + lb, cand)
                                        && sat(kx, p + la + lb, cand))
                            })
                        };
                        let (pa, pb) = (pres(ca), pres(cb));
                        if pa != pb {
                            let pat = PatternGraph::triton(la, lb, kx, ky, kz)
                                .expect("arm lengths and keys are positive");
                            let found = checked_query(o, state, &pat)? > 0;
                            return Ok(if found == pa { ca } else { cb });
                        }
                    }
                }
            }
        }
    }
    let mirrored = positioned
        .iter()
        .all(|(&p, &dv)| positioned.get(&(r + 1 - p)) == Some(&dv));
    if mirrored {
        return Ok(ca.min(cb));
    }
    Err(ReconError::InconsistentDeck(format!(
        "no queryable pattern separates positions {ca} and {cb} for degree {deg}"
    )))
}

/// All branch vertices are located: write them onto a spine of 2s.
fn spine_from_positions(
    state: &ReconState,
    positioned: &BTreeMap<usize, usize>,
) -> Result<Caterpillar, ReconError> {
    let mut spine = vec![2usize; state.r];
    for (&p, &dv) in positioned {
        spine[p - 1] = dv;
    }
    let mut have = spine.clone();
    have.sort_unstable_by(|a, b| b.cmp(a));
    if have.as_slice() != state.spine_degrees() {
        return Err(ReconError::InconsistentDeck(
            "located branch degrees disagree with the degree list".into(),
        ));
    }
    Caterpillar::from_spine(&spine).map_err(|e| ReconError::InconsistentDeck(e.to_string()))
}

/// Maximal-triton tables for every arm pair with j + j' <= (r-4)/2.
fn shorter_tritons(
    state: &ReconState,
    o: &DeckOracle,
    positioned: &BTreeMap<usize, usize>,
) -> Result<BTreeMap<(usize, usize), MaximalFamilyTable>, ReconError> {
    let r = state.r;
    let mut out = BTreeMap::new();
    for jj in 2..=r.saturating_sub(4) / 2 {
        for j in 1..=jj / 2 {
            let jp = jj - j;
            let table = family_table(state, o, positioned, j, jp)?;
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

fn canon3((x, y, z): (usize, usize, usize)) -> (usize, usize, usize) {
    if (z, y, x) < (x, y, z) {
        (z, y, x)
    } else {
        (x, y, z)
    }
}

/// One arm pair: tally the windows whose key vertices are all located,
/// solve the remaining oversized entries by descending probes, and hand
/// both to `solve_exclusion` as the seed.
///
/// The probe for entry (x, y, z) carries each key one past the next degree
/// value below it, so a located degree satisfies the probe key exactly when
/// it is at least the entry's own key.  Entries it binds therefore dominate
/// (x, y, z) componentwise, hence have a larger key sum or are (x, y, z)
/// itself, and domination keeps them oversized: by the time (x, y, z) is
/// probed, everything else the probe counts is known.  Every probe fits in
/// a card: its keys never exceed d_4 + 1 twice plus the degree below d_t
/// once, which the degree sum caps at half the vertex count.
fn family_table(
    state: &ReconState,
    o: &DeckOracle,
    positioned: &BTreeMap<usize, usize>,
    j: usize,
    jp: usize,
) -> Result<MaximalFamilyTable, ReconError> {
    let r = state.r;
    let jj = j + jp;
    let mc = o.max_card();
    let eq = j == jp;
    let kind = FamilyKind::tritons(j, jp).expect("arm lengths are positive");

    let located: BTreeSet<usize> = positioned.values().copied().collect();
    let at = |p: usize| positioned.get(&p).copied();

    // Directed window tally over the located vertices.  With unequal arms
    // the two readings of a window have different middle vertices, so each
    // reading needs its own middle to be located.
    let mut known: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    for p in 1..=r - jj {
        if let (Some(x), Some(z)) = (at(p), at(p + jj)) {
            if let Some(y) = at(p + j) {
                let key = if eq { canon3((x, y, z)) } else { (x, y, z) };
                *known.entry(key).or_insert(0) += 1;
            }
            if !eq {
                if let Some(y) = at(p + jp) {
                    *known.entry((z, y, x)).or_insert(0) += 1;
                }
            }
        }
    }

    let mut values: Vec<usize> = state.spine_degrees().to_vec();
    values.sort_unstable();
    values.dedup();
    let sel = |v: usize| match values.iter().rev().find(|&&u| u < v) {
        Some(&u) => u + 1,
        None => 2,
    };

    // Oversized entries not covered by the tally, largest key sum first.
    let mut cands: Vec<(usize, usize, usize)> = Vec::new();
    for &x in &values {
        for &y in &values {
            for &z in &values {
                if eq && (z, y, x) < (x, y, z) {
                    continue;
                }
                if jj + x + y + z - 3 <= mc {
                    continue;
                }
                if located.contains(&x) && located.contains(&y) && located.contains(&z) {
                    continue;
                }
                cands.push((x, y, z));
            }
        }
    }
    cands.sort_unstable_by_key(|&(x, y, z)| std::cmp::Reverse((x + y + z, x, y, z)));

    let mut solved: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    for &(x, y, z) in &cands {
        let keys = (sel(x), sel(y), sel(z));
        let pat = PatternGraph::triton(j, jp, keys.0, keys.1, keys.2)
            .expect("arm lengths and keys are positive");
        let mut rest = checked_query(o, state, &pat)? as u128;
        for (&other, &cnt) in known.iter().chain(solved.iter()) {
            let s = s_triton_in_triton(eq, keys, other) * cnt as u128;
            rest = rest.checked_sub(s).ok_or_else(|| {
                ReconError::InconsistentDeck(format!(
                    "probe ({},{},{}) counts fewer copies than its solved share",
                    keys.0, keys.1, keys.2
                ))
            })?;
        }
        let own = s_triton_in_triton(eq, keys, (x, y, z));
        let cnt = div_exact(rest, own, "oversized triton entry")?;
        if cnt > 0 {
            solved.insert((x, y, z), cnt);
        }
    }

    let mut seed = MaximalFamilyTable::new(kind);
    for (&(x, y, z), &cnt) in known.iter().chain(solved.iter()) {
        seed.add(FamilyKey::Triple(x, y, z), cnt);
    }
    Ok(solve_exclusion(o, kind, &seed)?)
}
