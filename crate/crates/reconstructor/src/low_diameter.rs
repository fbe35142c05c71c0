//! Low-diameter reconstruction: when 2r <= n - 6, a pendant-marking pattern
//! on the whole spine has at most r + 4 vertices and fits in a card, so the
//! leaf counts of every spine position can be read off directly.
//!
//! Writing lambda_i for the number of leaves at spine position i and
//! M = lambda_1 * lambda_r for the number of spanning-spine paths, the
//! marked-path counts satisfy
//!
//!   #P          = M
//!   #Y_1        = M (lambda_1 + lambda_r - 2) / 2
//!   #Y_i        = M (lambda_i + lambda_{r+1-i})          (interior i)
//!   #Z_i        = M  lambda_i * lambda_{r+1-i}
//!   #X_{j,k}    = pairing counts that separate the two orientations.
//!
//! Each level pair {lambda_i, lambda_{r+1-i}} is the root pair of an integer
//! quadratic; the X patterns then correlate the sides across levels.

use crate::{checked_query, exact_div, ReconError, ReconState};
use caterpillar_core::{binomial, Caterpillar};
use pattern_oracle::{DeckOracle, PatternGraph};

/// Spanning-spine path with one extra pendant at each listed position
/// (1-based spine positions; position repeats add parallel pendants).
fn marked(r: usize, marks: &[usize]) -> PatternGraph {
    let mut c = vec![0usize; r];
    c[0] = 1;
    c[r - 1] += 1;
    for &i in marks {
        c[i - 1] += 1;
    }
    PatternGraph::decorated(&c)
}

/// Roots of t^2 - s t + p as a nonnegative integer pair (hi, lo).
fn quadratic_roots(s: u64, p: u64, what: &str) -> Result<(usize, usize), ReconError> {
    let disc = (s * s).checked_sub(4 * p).ok_or_else(|| {
        ReconError::InconsistentDeck(format!("{what}: negative discriminant"))
    })?;
    let root = disc.isqrt();
    if root * root != disc || (s + root) % 2 != 0 {
        return Err(ReconError::InconsistentDeck(format!(
            "{what}: no integer roots for sum {s}, product {p}"
        )));
    }
    let hi = (s + root) / 2;
    let lo = (s - root) / 2;
    Ok((hi as usize, lo as usize))
}

/// Reconstruct a caterpillar with 2r <= n - 6 from marked-path counts.
pub fn reconstruct_low_diameter(
    state: &mut ReconState,
    o: &DeckOracle,
) -> Result<Caterpillar, ReconError> {
    let (n, r) = (state.n, state.r);
    debug_assert!(r >= 3 && 2 * r <= n - 6);
    let leaves_total = n - r;
    let half = r / 2;

    let m = checked_query(o, state, &marked(r, &[]))?;
    if m == 0 {
        return Err(ReconError::InconsistentDeck(
            "no path spans the spine".into(),
        ));
    }

    // Level 1: lambda_1 + lambda_r from #Y_1, product from M.
    let y1 = checked_query(o, state, &marked(r, &[1]))?;
    let end_sum = exact_div(2 * y1, m, "end-leaf sum")? + 2;
    let (a, b) = quadratic_roots(end_sum, m, "end-leaf pair")?;

    // Interior levels: sum from #Y_i, product from #Z_i.
    let mut level: Vec<(usize, usize)> = vec![(a, b)];
    for i in 2..=half {
        let s = exact_div(
            checked_query(o, state, &marked(r, &[i]))?,
            m,
            "level leaf sum",
        )?;
        let p = exact_div(
            checked_query(o, state, &marked(r, &[i, r + 1 - i]))?,
            m,
            "level leaf product",
        )?;
        level.push(quadratic_roots(s, p, "level leaf pair")?);
    }

    // The central position (odd r) holds whatever leaf count remains.
    let located: usize = level.iter().map(|&(x, y)| x + y).sum();
    let mut lambda_mid = None;
    if r % 2 == 1 {
        let mid = leaves_total.checked_sub(located).ok_or_else(|| {
            ReconError::InconsistentDeck("located leaves exceed the leaf total".into())
        })?;
        lambda_mid = Some(mid);
    } else if located != leaves_total {
        return Err(ReconError::InconsistentDeck(format!(
            "levels hold {located} leaves, the tree has {leaves_total}"
        )));
    }

    // Orient: put the larger count of the first unequal level on the low
    // side, then correlate every later unequal level against it.
    let mut low: Vec<usize> = level.iter().map(|&(hi, _)| hi).collect();
    let mut high: Vec<usize> = level.iter().map(|&(_, lo)| lo).collect();
    if let Some(j) = (0..half).find(|&i| level[i].0 != level[i].1) {
        let (cj, cj_ov) = (low[j], high[j]);
        for k in (j + 1)..half {
            let (hi, lo) = level[k];
            if hi == lo {
                continue;
            }
            let count = checked_query(o, state, &marked(r, &[j + 1, k + 1]))?;
            let predict = |x: usize, y: usize| -> u64 {
                if j == 0 {
                    binomial(cj, 2) * (cj_ov as u64) * (x as u64)
                        + binomial(cj_ov, 2) * (cj as u64) * (y as u64)
                } else {
                    ((cj * x + cj_ov * y) as u64) * m
                }
            };
            if count == predict(hi, lo) {
                // already oriented
            } else if count == predict(lo, hi) {
                low[k] = lo;
                high[k] = hi;
            } else {
                return Err(ReconError::InconsistentDeck(format!(
                    "level correlation count {count} matches neither orientation"
                )));
            }
        }
    }

    // Leaf counts to spine degrees: interior positions carry two spine
    // neighbours, the two ends carry one.
    let mut lambdas: Vec<usize> = Vec::with_capacity(r);
    lambdas.extend_from_slice(&low);
    if let Some(mid) = lambda_mid {
        lambdas.push(mid);
    }
    lambdas.extend(high.iter().rev());
    let spine: Vec<usize> = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| l + if i == 0 || i == r - 1 { 1 } else { 2 })
        .collect();

    state.prefix = spine.clone();
    let g = Caterpillar::from_spine(&spine)
        .map_err(|e| ReconError::InconsistentDeck(e.to_string()))?;
    let mut got = g.degree_multiset();
    got.sort_unstable_by(|x, y| y.cmp(x));
    if got != state.degrees {
        return Err(ReconError::InconsistentDeck(
            "assembled spine contradicts the degree multiset".into(),
        ));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use crate::{reconstruct, Mode};
    use caterpillar_core::{enumerate_caterpillars, Caterpillar};
    use pattern_oracle::DeckOracle;

    fn roundtrip(spine: &[usize]) {
        let g = Caterpillar::from_spine(spine).unwrap();
        let o = DeckOracle::hidden(g.clone());
        let got = reconstruct(g.n(), &o, Mode::Permissive).unwrap();
        assert_eq!(got.spine(), g.spine(), "hidden {spine:?}");
        assert_eq!(o.illegal_attempts(), 0);
    }

    #[test]
    fn named_examples_round_trip() {
        roundtrip(&[6, 2, 6]);
        roundtrip(&[5, 2, 2, 7]);
    }

    #[test]
    fn asymmetric_levels_round_trip() {
        // Exercises the orientation stage: distinct pairs at several levels,
        // anchored both at the end level (j = 1) and at interior levels.
        roundtrip(&[3, 5, 2, 4, 6]);
        roundtrip(&[4, 4, 3, 2, 6]);
        roundtrip(&[5, 5, 2, 3, 5]);
        roundtrip(&[5, 6, 5, 2, 2, 3, 5]);
        roundtrip(&[5, 5, 2, 9, 2, 5, 4]);
    }

    #[test]
    fn exhaustive_small_low_diameter() {
        for n in 7..=14 {
            for g in enumerate_caterpillars(n) {
                if g.r() >= 3 && 2 * g.r() <= n - 6 {
                    roundtrip(&g.spine().to_vec());
                }
            }
        }
    }
}
