//! Caterpillar trees stored as spine degree sequences.
//!
//! A caterpillar is a tree whose nonleaf vertices induce a path, the spine
//! `v_1..v_r`. The degrees `d(v_1)..d(v_r)` along the spine determine the
//! tree up to isomorphism: a spine vertex of degree `d` keeps `d-1` leaf
//! neighbors at the spine ends and `d-2` in the interior, giving
//! `n = r + 2 + sum(d_i - 2)` vertices in total. Spines are normalized to be
//! lexicographically no larger than their reversal, so equality of
//! `Caterpillar` values is isomorphism.
//!
//! The one- and two-vertex trees have no nonleaf vertex; they are carried as
//! degenerate cases with an empty spine and an explicit vertex count.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CaterpillarError {
    #[error("invalid spine: {0}")]
    InvalidSpine(String),
}

/// A caterpillar in canonical form.
///
/// `spine` is empty exactly when `n <= 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Caterpillar {
    spine: Vec<usize>,
    n: usize,
}

impl Caterpillar {
    /// Builds a caterpillar from spine degrees. The input may be in either
    /// orientation; the stored spine is the lexicographic minimum of the
    /// sequence and its reversal.
    pub fn from_spine(degrees: &[usize]) -> Result<Self, CaterpillarError> {
        if degrees.is_empty() {
            return Err(CaterpillarError::InvalidSpine("empty spine".into()));
        }
        if let Some(&d) = degrees.iter().find(|&&d| d < 2) {
            return Err(CaterpillarError::InvalidSpine(format!(
                "spine degree {d} < 2"
            )));
        }
        let mut spine = degrees.to_vec();
        let mut rev = spine.clone();
        rev.reverse();
        if rev < spine {
            spine = rev;
        }
        let n = spine.len() + 2 + spine.iter().map(|&d| d - 2).sum::<usize>();
        Ok(Caterpillar { spine, n })
    }

    /// The 1- or 2-vertex tree (empty spine).
    pub fn trivial(n: usize) -> Result<Self, CaterpillarError> {
        if n == 1 || n == 2 {
            Ok(Caterpillar { spine: Vec::new(), n })
        } else {
            Err(CaterpillarError::InvalidSpine(format!(
                "trivial caterpillar needs n in {{1,2}}, got {n}"
            )))
        }
    }

    /// The path on `n >= 1` vertices (all-2 spine for `n >= 3`).
    pub fn path(n: usize) -> Result<Self, CaterpillarError> {
        if n <= 2 {
            Self::trivial(n.max(1))
        } else {
            Self::from_spine(&vec![2; n - 2])
        }
    }

    /// The spider `T_{a,b}`: paths of lengths 1, `a`, and `b` sharing an
    /// endpoint, `a + b + 2` vertices in total. Requires `a >= 0`, `b >= 1`.
    pub fn t_ab(a: usize, b: usize) -> Result<Self, CaterpillarError> {
        if b < 1 {
            return Err(CaterpillarError::InvalidSpine(
                "t_ab needs b >= 1".into(),
            ));
        }
        if a == 0 {
            // Legs 1 and b in a row: the path on b+2 vertices.
            return Self::path(b + 2);
        }
        // Nonleaf vertices: a-1 inner vertices of the a-leg, the center
        // (degree 3), b-1 inner vertices of the b-leg.
        let mut spine = vec![2; a - 1];
        spine.push(3);
        spine.extend(std::iter::repeat(2).take(b - 1));
        Self::from_spine(&spine)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of spine (nonleaf) vertices.
    pub fn r(&self) -> usize {
        self.spine.len()
    }

    pub fn spine(&self) -> &[usize] {
        &self.spine
    }

    /// Leaf-neighbor count of spine vertex `i` (0-based). For `r = 1` every
    /// neighbor of the unique spine vertex is a leaf.
    pub fn leaf_count(&self, i: usize) -> usize {
        let r = self.r();
        assert!(i < r, "spine index {i} out of range (r = {r})");
        let d = self.spine[i];
        if r == 1 {
            d
        } else if i == 0 || i == r - 1 {
            d - 1
        } else {
            d - 2
        }
    }

    /// All `n` vertex degrees, sorted descending (spine degrees, then 1 per
    /// leaf).
    pub fn degree_multiset(&self) -> Vec<usize> {
        match self.n {
            1 => return vec![0],
            2 => return vec![1, 1],
            _ => {}
        }
        let mut degs = self.spine.clone();
        degs.sort_unstable_by(|a, b| b.cmp(a));
        degs.extend(std::iter::repeat(1).take(self.n - self.r()));
        degs
    }

    /// Edge list over vertices `0..n`. Spine vertices come first in spine
    /// order, then the leaves of `v_0`, of `v_1`, and so on.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match self.n {
            1 => return Vec::new(),
            2 => return vec![(0, 1)],
            _ => {}
        }
        let r = self.r();
        let mut edges = Vec::with_capacity(self.n - 1);
        for i in 1..r {
            edges.push((i - 1, i));
        }
        let mut next = r;
        for i in 0..r {
            for _ in 0..self.leaf_count(i) {
                edges.push((i, next));
                next += 1;
            }
        }
        debug_assert_eq!(next, self.n);
        edges
    }
}

/// Upper bound on the maximum spine degree when `m` vertices attain it:
/// `floor((n - r - 2) / m) + 2`.
pub fn degree_bound(n: usize, r: usize, m: usize) -> usize {
    assert!(r >= 1 && m >= 1 && n >= r + 2);
    (n - r - 2) / m + 2
}

/// C(n, k) as an exact u64. The counting formulas here never exceed u64;
/// hitting the checked-arithmetic panic means a caller bug.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial overflow")
}

impl fmt::Display for Caterpillar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.spine.is_empty() {
            // No spine to print for the 1- and 2-vertex trees.
            return write!(f, "p{}", self.n);
        }
        let mut first = true;
        for d in &self.spine {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Caterpillar {
    type Err = CaterpillarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "p1" => return Caterpillar::trivial(1),
            "p2" => return Caterpillar::trivial(2),
            _ => {}
        }
        let degrees: Result<Vec<usize>, _> = s
            .split(',')
            .map(|tok| tok.trim().parse::<usize>())
            .collect();
        let degrees = degrees.map_err(|e| {
            CaterpillarError::InvalidSpine(format!("bad spine `{s}`: {e}"))
        })?;
        Caterpillar::from_spine(&degrees)
    }
}

/// Parses the line-oriented caterpillar format: one spine per line, blank
/// lines and `#` comments skipped.
pub fn parse_caterpillar_lines(text: &str) -> Result<Vec<Caterpillar>, CaterpillarError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse()?);
    }
    Ok(out)
}

/// Iterator over all n-vertex caterpillars in canonical form, each exactly
/// once. Spines are emitted grouped by spine length r, compositions of
/// `n - r - 2` in lexicographic order, skipping spines larger than their
/// reversal.
pub fn enumerate_caterpillars(n: usize) -> CaterpillarEnumerator {
    CaterpillarEnumerator {
        n,
        r: 0,
        comp: Vec::new(),
        done: n == 0,
        emitted_trivial: false,
    }
}

pub struct CaterpillarEnumerator {
    n: usize,
    r: usize,
    comp: Vec<usize>,
    done: bool,
    emitted_trivial: bool,
}

impl CaterpillarEnumerator {
    /// Advances `comp` to the next weak composition in lexicographic order;
    /// false when exhausted.
    fn next_composition(&mut self) -> bool {
        let r = self.comp.len();
        let Some(p) = self.comp.iter().rposition(|&c| c > 0) else {
            return false;
        };
        if p == 0 {
            return false;
        }
        let tail = self.comp[p] - 1;
        self.comp[p - 1] += 1;
        for c in &mut self.comp[p..] {
            *c = 0;
        }
        self.comp[r - 1] = tail;
        true
    }

    fn start_spine_len(&mut self, r: usize) -> bool {
        if r > self.n.saturating_sub(2) || self.n < r + 2 {
            return false;
        }
        let extra = self.n - r - 2;
        self.comp = vec![0; r];
        self.comp[r - 1] = extra;
        self.r = r;
        true
    }
}

impl Iterator for CaterpillarEnumerator {
    type Item = Caterpillar;

    fn next(&mut self) -> Option<Caterpillar> {
        if self.done {
            return None;
        }
        if self.n <= 2 {
            if self.emitted_trivial {
                self.done = true;
                return None;
            }
            self.emitted_trivial = true;
            return Some(Caterpillar::trivial(self.n).unwrap());
        }
        loop {
            if self.r == 0 {
                if !self.start_spine_len(1) {
                    self.done = true;
                    return None;
                }
            } else {
                let mut advanced = self.next_composition();
                while !advanced {
                    let next_r = self.r + 1;
                    if !self.start_spine_len(next_r) {
                        self.done = true;
                        return None;
                    }
                    advanced = true;
                }
            }
            let spine: Vec<usize> = self.comp.iter().map(|&c| c + 2).collect();
            let mut rev = spine.clone();
            rev.reverse();
            if spine <= rev {
                return Some(Caterpillar { n: self.n, spine });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn from_spine_examples() {
        let c = Caterpillar::from_spine(&[3, 2, 3]).unwrap();
        assert_eq!((c.n(), c.r()), (7, 3));
        let p5 = Caterpillar::from_spine(&[2, 2, 2]).unwrap();
        assert_eq!(p5.n(), 5);
        assert_eq!(p5, Caterpillar::path(5).unwrap());
        let c = Caterpillar::from_spine(&[4, 2, 3]).unwrap();
        assert_eq!(c.spine(), &[3, 2, 4]);
    }

    #[test]
    fn from_spine_rejects_low_degrees() {
        assert!(matches!(
            Caterpillar::from_spine(&[3, 1, 3]),
            Err(CaterpillarError::InvalidSpine(_))
        ));
        assert!(Caterpillar::from_spine(&[]).is_err());
    }

    #[test]
    fn t_ab_examples() {
        let t22 = Caterpillar::t_ab(2, 2).unwrap();
        assert_eq!(t22.n(), 6);
        assert_eq!(t22.spine(), &[2, 3, 2]);
        assert_eq!(Caterpillar::t_ab(0, 1).unwrap(), Caterpillar::path(3).unwrap());
        let t13 = Caterpillar::t_ab(1, 3).unwrap();
        assert_eq!(t13.n(), 6);
        assert_eq!(t13.spine(), &[2, 2, 3]);
        assert!(Caterpillar::t_ab(3, 0).is_err());
    }

    #[test]
    fn t_ab_symmetric() {
        for a in 1..6 {
            for b in a..7 {
                assert_eq!(
                    Caterpillar::t_ab(a, b).unwrap(),
                    Caterpillar::t_ab(b, a).unwrap()
                );
            }
        }
    }

    #[test]
    fn binomial_table() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(24, 12), 2_704_156);
        assert_eq!(binomial(3, 5), 0);
        // Pascal identity on a grid.
        for n in 1..30 {
            for k in 1..n {
                assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
            }
        }
    }

    #[test]
    fn degree_bound_examples() {
        assert_eq!(degree_bound(7, 3, 1), 4);
        assert_eq!(degree_bound(14, 8, 2), 4);
        assert_eq!(degree_bound(13, 3, 2), 6);
    }

    #[test]
    fn enumeration_counts() {
        // 2^(n-4) + 2^(floor(n/2)-2) caterpillars for n >= 4; one for n = 3.
        assert_eq!(enumerate_caterpillars(3).count(), 1);
        for n in 4..=14 {
            let expect = (1usize << (n - 4)) + (1usize << (n / 2 - 2));
            assert_eq!(enumerate_caterpillars(n).count(), expect, "n = {n}");
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let n4: Vec<String> = enumerate_caterpillars(4).map(|c| c.to_string()).collect();
        assert_eq!(n4, ["3", "2,2"]);
        assert_eq!(enumerate_caterpillars(5).count(), 3);
        // 11 trees on 7 vertices, 10 of them caterpillars.
        assert_eq!(enumerate_caterpillars(7).count(), 10);
    }

    #[test]
    fn enumeration_all_canonical_and_distinct() {
        for n in 1..=12 {
            let all: Vec<Caterpillar> = enumerate_caterpillars(n).collect();
            for c in &all {
                assert_eq!(c.n(), n);
                let mut rev = c.spine().to_vec();
                rev.reverse();
                assert!(c.spine() <= rev.as_slice());
            }
            let mut sorted = all.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), all.len());
        }
    }

    #[test]
    fn edges_and_degrees_agree() {
        for n in 3..=10 {
            for c in enumerate_caterpillars(n) {
                let edges = c.edges();
                assert_eq!(edges.len(), n - 1);
                let mut deg = vec![0usize; n];
                for &(u, v) in &edges {
                    deg[u] += 1;
                    deg[v] += 1;
                }
                deg.sort_unstable_by(|a, b| b.cmp(a));
                assert_eq!(deg, c.degree_multiset());
            }
        }
    }

    #[test]
    fn display_parse_round_trip() {
        for n in 1..=10 {
            for c in enumerate_caterpillars(n) {
                let shown = c.to_string();
                let back: Caterpillar = shown.parse().unwrap();
                assert_eq!(back, c);
            }
        }
    }

    #[test]
    fn parse_lines_tolerates_comments() {
        let text = "# header\n\n3,2,3\n  2,2 \n# tail\np2\n";
        let cats = parse_caterpillar_lines(text).unwrap();
        assert_eq!(cats.len(), 3);
        assert_eq!(cats[0].n(), 7);
        assert_eq!(cats[2].n(), 2);
    }

    proptest! {
        #[test]
        fn round_trip_canonical(raw in proptest::collection::vec(2usize..7, 1..9)) {
            let c = Caterpillar::from_spine(&raw).unwrap();
            let again = Caterpillar::from_spine(c.spine()).unwrap();
            prop_assert_eq!(&again, &c);
            // Vertex-count identity n - r - 2 = sum(d_i - 2).
            let extra: usize = c.spine().iter().map(|&d| d - 2).sum();
            prop_assert_eq!(c.n(), c.r() + 2 + extra);
        }

        #[test]
        fn reversal_invariant(raw in proptest::collection::vec(2usize..7, 1..9)) {
            let mut rev = raw.clone();
            rev.reverse();
            prop_assert_eq!(
                Caterpillar::from_spine(&raw).unwrap(),
                Caterpillar::from_spine(&rev).unwrap()
            );
        }
    }
}
