//! Exhaustive decks: the multiset of isomorphism classes of induced
//! subgraphs with at most `m` vertices.
//!
//! A deck is cumulative, holding every card size from 1 up to `m`; the
//! single-size views are slices of it. Exhaustive computation enumerates all
//! vertex subsets of the host, so it is gated behind a budget, `n <= 24` by
//! default. Kelly projection derives the `(m-1)`-slice from the `m`-slice by
//! vertex deletion; each `(m-1)`-card must arise exactly `n - m + 1` times,
//! and a failed division or a mismatch against the stored slice is reported
//! as a corrupted deck rather than a crash.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use caterpillar_core::{binomial, Caterpillar};
use forest_canon::{code_of_forest_unchecked, CanonicalCode, ForestGraph};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeckError {
    #[error("host too large for exhaustive deck: {0}")]
    TooLargeForExhaustive(String),
    #[error("inconsistent deck: {0}")]
    InconsistentDeck(String),
    #[error("deck size mismatch: m = {0} vs m = {1}")]
    SizeMismatch(usize, usize),
    #[error("cards of {0} vertices cannot decide caterpillarness (need 7)")]
    CardTooSmallToDecide(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeckParseError {
    #[error("bad deck header: {0}")]
    BadHeader(String),
    #[error("bad deck line {0}: {1}")]
    BadLine(usize, String),
    #[error("deck fails validation: {0}")]
    Invalid(String),
}

/// Multiset of canonical codes of cards, all of at most `m` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeckFingerprint {
    n: usize,
    m: usize,
    entries: BTreeMap<CanonicalCode, u64>,
}

impl DeckFingerprint {
    /// Assembles a deck without checking invariants; `validate` enforces
    /// them where untrusted data enters (file parsing, tests).
    pub fn from_parts(n: usize, m: usize, entries: BTreeMap<CanonicalCode, u64>) -> Self {
        DeckFingerprint { n, m, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &BTreeMap<CanonicalCode, u64> {
        &self.entries
    }

    pub fn multiplicity(&self, code: &CanonicalCode) -> u64 {
        self.entries.get(code).copied().unwrap_or(0)
    }

    /// Cards with exactly `k` vertices.
    pub fn size_slice(&self, k: usize) -> impl Iterator<Item = (&CanonicalCode, u64)> {
        self.entries
            .iter()
            .filter(move |(c, _)| c.vertex_count() == k)
            .map(|(c, &m)| (c, m))
    }

    /// The cumulative deck restricted to cards of at most `m2` vertices.
    pub fn restrict(&self, m2: usize) -> DeckFingerprint {
        assert!(m2 <= self.m);
        DeckFingerprint {
            n: self.n,
            m: m2,
            entries: self
                .entries
                .iter()
                .filter(|(c, _)| c.vertex_count() <= m2)
                .map(|(c, &mult)| (c.clone(), mult))
                .collect(),
        }
    }

    /// Checks the deck invariants: 1 <= m <= n, card sizes within bound,
    /// and exactly C(n, k) cards of each size k <= m.
    pub fn validate(&self) -> Result<(), DeckError> {
        if self.m < 1 || self.m > self.n {
            return Err(DeckError::InconsistentDeck(format!(
                "m = {} out of range for n = {}",
                self.m, self.n
            )));
        }
        let mut per_size = vec![0u64; self.m + 1];
        for (code, &mult) in &self.entries {
            let k = code.vertex_count();
            if k == 0 || k > self.m {
                return Err(DeckError::InconsistentDeck(format!(
                    "card with {k} vertices in an m = {} deck",
                    self.m
                )));
            }
            per_size[k] += mult;
        }
        for k in 1..=self.m {
            let want = binomial(self.n, k);
            if per_size[k] != want {
                return Err(DeckError::InconsistentDeck(format!(
                    "{} cards of size {k}, expected C({}, {k}) = {want}",
                    per_size[k], self.n
                )));
            }
        }
        Ok(())
    }
}

/// Next k-subset bitmask in colex order (Gosper's hack).
fn next_subset(v: u64) -> u64 {
    let c = v & v.wrapping_neg();
    let r = v + c;
    (((r ^ v) >> 2) / c) | r
}

fn deck_slice_for_size(n: usize, edges: &[(usize, usize)], k: usize) -> BTreeMap<CanonicalCode, u64> {
    let mut out: BTreeMap<CanonicalCode, u64> = BTreeMap::new();
    let mut mask: u64 = (1u64 << k) - 1;
    let end: u64 = 1u64 << n;
    let mut buf: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
    while mask < end {
        buf.clear();
        for &(u, v) in edges {
            if mask >> u & 1 == 1 && mask >> v & 1 == 1 {
                // Subset-relative index = rank of the vertex inside the mask.
                let iu = (mask & ((1 << u) - 1)).count_ones() as usize;
                let iv = (mask & ((1 << v) - 1)).count_ones() as usize;
                buf.push((iu, iv));
            }
        }
        *out.entry(code_of_forest_unchecked(k, &buf)).or_insert(0) += 1;
        if k == 0 {
            break;
        }
        mask = next_subset(mask);
    }
    out
}

/// Number of subsets the exhaustive enumeration would visit.
fn subset_load(n: usize, m: usize) -> u64 {
    (1..=m).map(|k| binomial(n, k)).sum()
}

pub const DEFAULT_HOST_LIMIT: usize = 24;

/// Exact cumulative deck of all induced subgraphs with <= m vertices.
pub fn full_deck(host: &ForestGraph, m: usize) -> Result<DeckFingerprint, DeckError> {
    full_deck_with_budget(host, m, None)
}

/// As `full_deck`, with the subset budget overridden: `None` applies the
/// default host limit of n <= 24, `Some(b)` admits any host whose subset
/// count fits in `b`.
pub fn full_deck_with_budget(
    host: &ForestGraph,
    m: usize,
    budget_subsets: Option<u64>,
) -> Result<DeckFingerprint, DeckError> {
    let n = host.n();
    assert!(m >= 1 && m <= n, "need 1 <= m <= n, got m = {m}, n = {n}");
    if n >= 64 {
        return Err(DeckError::TooLargeForExhaustive(format!(
            "n = {n} exceeds the bitmask width"
        )));
    }
    match budget_subsets {
        None if n > DEFAULT_HOST_LIMIT => {
            return Err(DeckError::TooLargeForExhaustive(format!(
                "n = {n} > {DEFAULT_HOST_LIMIT}"
            )));
        }
        Some(b) if subset_load(n, m) > b => {
            return Err(DeckError::TooLargeForExhaustive(format!(
                "{} subsets exceed budget {b}",
                subset_load(n, m)
            )));
        }
        _ => {}
    }
    let entries = (1..=m)
        .into_par_iter()
        .map(|k| deck_slice_for_size(n, host.edges(), k))
        .reduce(BTreeMap::new, |mut a, b| {
            for (code, mult) in b {
                *a.entry(code).or_insert(0) += mult;
            }
            a
        });
    Ok(DeckFingerprint { n, m, entries })
}

pub fn full_deck_of_caterpillar(host: &Caterpillar, m: usize) -> Result<DeckFingerprint, DeckError> {
    let f = ForestGraph::new(host.n(), &host.edges()).expect("caterpillar is a tree");
    full_deck(&f, m)
}

/// Derives the (m-1)-deck: every (m-1)-card arises from the m-slice by
/// single-vertex deletion exactly n-m+1 times. The derived slice is checked
/// against the stored one, so a tampered deck surfaces here.
pub fn kelly_project(d: &DeckFingerprint) -> Result<DeckFingerprint, DeckError> {
    assert!(d.m >= 2, "kelly_project needs m >= 2");
    let factor = (d.n as u64)
        .checked_sub(d.m as u64 - 1)
        .filter(|&f| f > 0)
        .ok_or_else(|| DeckError::InconsistentDeck(format!("m = {} > n = {}", d.m, d.n)))?;
    let mut derived: BTreeMap<CanonicalCode, u64> = BTreeMap::new();
    for (code, mult) in d.size_slice(d.m) {
        let card = code.decode_forest();
        for drop in 0..card.n() {
            let edges: Vec<(usize, usize)> = card
                .edges()
                .iter()
                .filter(|&&(u, v)| u != drop && v != drop)
                .map(|&(u, v)| (u - (u > drop) as usize, v - (v > drop) as usize))
                .collect();
            let smaller = code_of_forest_unchecked(card.n() - 1, &edges);
            *derived.entry(smaller).or_insert(0) += mult;
        }
    }
    let mut entries: BTreeMap<CanonicalCode, u64> = d
        .entries
        .iter()
        .filter(|(c, _)| c.vertex_count() < d.m)
        .map(|(c, &mult)| (c.clone(), mult))
        .collect();
    let mut seen_smaller = 0usize;
    for (code, total) in derived {
        if total % factor != 0 {
            return Err(DeckError::InconsistentDeck(format!(
                "card {code} arises {total} times, not divisible by {factor}"
            )));
        }
        let q = total / factor;
        let stored = entries.get(&code).copied().unwrap_or(0);
        if stored != q {
            return Err(DeckError::InconsistentDeck(format!(
                "card {code}: stored multiplicity {stored}, projected {q}"
            )));
        }
        seen_smaller += 1;
    }
    // Every stored (m-1)-card must also be derivable.
    let stored_mminus1 = entries
        .keys()
        .filter(|c| c.vertex_count() == d.m - 1)
        .count();
    if stored_mminus1 != seen_smaller {
        return Err(DeckError::InconsistentDeck(format!(
            "{stored_mminus1} stored cards of size {} but {seen_smaller} projected",
            d.m - 1
        )));
    }
    entries.retain(|c, _| c.vertex_count() <= d.m - 1);
    Ok(DeckFingerprint {
        n: d.n,
        m: d.m - 1,
        entries,
    })
}

/// The spider with three legs of length 2: the smallest tree that is not a
/// caterpillar. Its absence from a tree's deck certifies caterpillarness.
pub fn spider_s222() -> ForestGraph {
    ForestGraph::new(7, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]).unwrap()
}

pub fn is_caterpillar_deck(d: &DeckFingerprint) -> Result<bool, DeckError> {
    if d.m < 7 {
        return Err(DeckError::CardTooSmallToDecide(d.m));
    }
    let probe = forest_canon::canonical_code(&spider_s222());
    Ok(d.multiplicity(&probe) == 0)
}

pub fn decks_equal(a: &DeckFingerprint, b: &DeckFingerprint) -> Result<bool, DeckError> {
    if a.m != b.m {
        return Err(DeckError::SizeMismatch(a.m, b.m));
    }
    Ok(a.entries == b.entries)
}

/// Serializes as `n=<n> m=<m>` then one `<multiplicity> <hex code>` line per
/// card class, sorted by code.
pub fn write_deck(d: &DeckFingerprint) -> String {
    let mut out = String::new();
    writeln!(out, "n={} m={}", d.n, d.m).unwrap();
    for (code, mult) in &d.entries {
        writeln!(out, "{mult} {code}").unwrap();
    }
    out
}

pub fn parse_deck(text: &str) -> Result<DeckFingerprint, DeckParseError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| DeckParseError::BadHeader("empty input".into()))?;
    let mut n = None;
    let mut m = None;
    for tok in header.split_whitespace() {
        if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse::<usize>().ok();
        } else if let Some(v) = tok.strip_prefix("m=") {
            m = v.parse::<usize>().ok();
        }
    }
    let (n, m) = match (n, m) {
        (Some(n), Some(m)) => (n, m),
        _ => return Err(DeckParseError::BadHeader(header.to_string())),
    };
    let mut entries = BTreeMap::new();
    for (lineno, line) in lines {
        let mut parts = line.split_whitespace();
        let (mult, hex) = match (parts.next(), parts.next(), parts.next()) {
            (Some(m), Some(h), None) => (m, h),
            _ => return Err(DeckParseError::BadLine(lineno + 1, line.to_string())),
        };
        let mult: u64 = mult
            .parse()
            .map_err(|e| DeckParseError::BadLine(lineno + 1, format!("{e}")))?;
        let code = CanonicalCode::from_hex(hex)
            .map_err(|e| DeckParseError::BadLine(lineno + 1, format!("{e}")))?;
        if entries.insert(code, mult).is_some() {
            return Err(DeckParseError::BadLine(lineno + 1, "duplicate code".into()));
        }
    }
    let deck = DeckFingerprint { n, m, entries };
    deck.validate()
        .map_err(|e| DeckParseError::Invalid(e.to_string()))?;
    Ok(deck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use caterpillar_core::enumerate_caterpillars;

    fn deck_of(spine: &[usize], m: usize) -> DeckFingerprint {
        let c = Caterpillar::from_spine(spine).unwrap();
        full_deck_of_caterpillar(&c, m).unwrap()
    }

    fn code(n: usize, edges: &[(usize, usize)]) -> CanonicalCode {
        forest_canon::code_of_edges(n, edges).unwrap()
    }

    #[test]
    fn p3_two_deck_by_hand() {
        let host = Caterpillar::path(3).unwrap();
        let d = full_deck_of_caterpillar(&host, 2).unwrap();
        assert_eq!(d.multiplicity(&code(1, &[])), 3);
        assert_eq!(d.multiplicity(&code(2, &[(0, 1)])), 2);
        assert_eq!(d.multiplicity(&code(2, &[])), 1);
        assert_eq!(d.entries().len(), 3);
    }

    #[test]
    fn star_two_deck_by_hand() {
        let d = deck_of(&[4], 2);
        assert_eq!(d.n(), 5);
        assert_eq!(d.multiplicity(&code(1, &[])), 5);
        assert_eq!(d.multiplicity(&code(2, &[(0, 1)])), 4);
        assert_eq!(d.multiplicity(&code(2, &[])), 6);
    }

    #[test]
    fn spider_pair_decks_agree_at_half() {
        // T_{2,2} and T_{1,3} share 3-decks but not 4-decks.
        let t22 = Caterpillar::t_ab(2, 2).unwrap();
        let t13 = Caterpillar::t_ab(1, 3).unwrap();
        let a3 = full_deck_of_caterpillar(&t22, 3).unwrap();
        let b3 = full_deck_of_caterpillar(&t13, 3).unwrap();
        assert!(decks_equal(&a3, &b3).unwrap());
        let a4 = full_deck_of_caterpillar(&t22, 4).unwrap();
        let b4 = full_deck_of_caterpillar(&t13, 4).unwrap();
        assert!(!decks_equal(&a4, &b4).unwrap());
        assert!(matches!(
            decks_equal(&a3, &a4),
            Err(DeckError::SizeMismatch(3, 4))
        ));
    }

    #[test]
    fn per_size_totals_hit_binomials() {
        for n in 1..=10 {
            for c in enumerate_caterpillars(n) {
                let m = (n + 2) / 2;
                let m = m.max(1).min(n);
                let d = full_deck_of_caterpillar(&c, m).unwrap();
                d.validate().unwrap();
            }
        }
    }

    #[test]
    fn kelly_matches_direct_recomputation() {
        for n in 2..=9 {
            for c in enumerate_caterpillars(n) {
                let full = full_deck_of_caterpillar(&c, n).unwrap();
                let mut d = full;
                for m in (1..n).rev() {
                    let projected = kelly_project(&d).unwrap();
                    let direct = full_deck_of_caterpillar(&c, m).unwrap();
                    assert!(decks_equal(&projected, &direct).unwrap(), "{c} m={m}");
                    d = projected;
                }
            }
        }
    }

    #[test]
    fn kelly_p5_edge_count() {
        let d = deck_of(&[2, 2, 2], 3);
        let two = kelly_project(&d).unwrap();
        assert_eq!(two.multiplicity(&code(2, &[(0, 1)])), 4);
    }

    #[test]
    fn kelly_rejects_tampered_deck() {
        let d = deck_of(&[3, 2, 3], 4);
        let mut entries = d.entries().clone();
        let victim = entries
            .keys()
            .find(|c| c.vertex_count() == 4)
            .unwrap()
            .clone();
        *entries.get_mut(&victim).unwrap() += 1;
        let tampered = DeckFingerprint::from_parts(d.n(), d.m(), entries);
        assert!(matches!(
            kelly_project(&tampered),
            Err(DeckError::InconsistentDeck(_))
        ));
    }

    #[test]
    fn caterpillar_decks_lack_the_spider() {
        for spine in [vec![3, 2, 3], vec![4, 3, 2, 3], vec![2; 8]] {
            let c = Caterpillar::from_spine(&spine).unwrap();
            let m = (c.n() + 2) / 2;
            if m >= 7 {
                let d = full_deck_of_caterpillar(&c, m).unwrap();
                assert!(is_caterpillar_deck(&d).unwrap());
            }
        }
        let big = deck_of(&[2, 2, 2, 2, 2, 2, 2, 2, 2, 2], 7);
        assert!(is_caterpillar_deck(&big).unwrap());
    }

    #[test]
    fn spider_decks_contain_the_spider() {
        let spider = spider_s222();
        let d = full_deck(&spider, 7).unwrap();
        assert!(!is_caterpillar_deck(&d).unwrap());
        assert!(matches!(
            is_caterpillar_deck(&full_deck(&spider, 6).unwrap()),
            Err(DeckError::CardTooSmallToDecide(6))
        ));
    }

    #[test]
    fn thirteen_vertex_non_caterpillar_detected() {
        // Path a0..a10 plus a 2-edge pendant path at a2: the degree-3 vertex
        // sits at distance 2 from the path end, so leaf-stripping leaves a
        // non-path.
        let mut edges: Vec<(usize, usize)> = (0..10).map(|i| (i, i + 1)).collect();
        edges.push((2, 11));
        edges.push((11, 12));
        let t = ForestGraph::new(13, &edges).unwrap();
        let d = full_deck(&t, 7).unwrap();
        assert!(!is_caterpillar_deck(&d).unwrap());
    }

    #[test]
    fn budget_guard() {
        let c = Caterpillar::from_spine(&vec![2; 23]).unwrap();
        assert_eq!(c.n(), 25);
        let f = ForestGraph::new(c.n(), &c.edges()).unwrap();
        assert!(matches!(
            full_deck(&f, 5),
            Err(DeckError::TooLargeForExhaustive(_))
        ));
        // Budget override admits it.
        assert!(full_deck_with_budget(&f, 3, Some(10_000)).is_ok());
        assert!(matches!(
            full_deck_with_budget(&f, 3, Some(100)),
            Err(DeckError::TooLargeForExhaustive(_))
        ));
    }

    #[test]
    fn restrict_is_smaller_full_deck() {
        let c = Caterpillar::from_spine(&[3, 2, 2, 4]).unwrap();
        let d7 = full_deck_of_caterpillar(&c, 7).unwrap();
        let d5 = full_deck_of_caterpillar(&c, 5).unwrap();
        assert!(decks_equal(&d7.restrict(5), &d5).unwrap());
    }

    #[test]
    fn deck_file_round_trip() {
        let d = deck_of(&[3, 2, 3], 4);
        let text = write_deck(&d);
        assert!(text.starts_with("n=7 m=4\n"));
        let back = parse_deck(&text).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn deck_file_rejects_garbage() {
        assert!(matches!(parse_deck(""), Err(DeckParseError::BadHeader(_))));
        assert!(matches!(
            parse_deck("n=3 m=oops\n"),
            Err(DeckParseError::BadHeader(_))
        ));
        assert!(matches!(
            parse_deck("n=3 m=2\n1 zz\n"),
            Err(DeckParseError::BadLine(_, _))
        ));
        // Valid lines, wrong totals.
        let bad = "n=3 m=1\n2 0100\n";
        assert!(matches!(parse_deck(bad), Err(DeckParseError::Invalid(_))));
    }
}
