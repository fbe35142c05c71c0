//! Induced-subgraph counting for connected caterpillar patterns.
//!
//! Patterns are decorated paths: a path `u_0..u_L` with `c_i` extra pendant
//! leaves at `u_i`. Every connected induced subgraph of a caterpillar is one,
//! so these cover all the pattern shapes the reconstruction ever counts.
//! `count_induced` runs in time polynomial in the host size by scanning
//! placements of the pattern's nonleaf path over the host spine; the
//! subtle boundary cases (a pattern pendant landing on a host spine vertex,
//! a pattern path end landing on a host leaf) are covered by the two
//! end-extension terms of the scan and are pinned extensionally by the
//! brute-force equivalence tests.
//!
//! [`DeckOracle`] wraps the counting behind the legality gate
//! `|V(pattern)| <= floor((n+2)/2)`: reconstruction code can only learn what
//! a deck of that card size supports.

mod oracle;

pub use oracle::{recover_degree_multiset, DeckOracle, OracleError};

use caterpillar_core::{binomial, Caterpillar};
use forest_canon::ForestGraph;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("not a baton: {0}")]
    NotABaton(String),
    #[error("not a triton: {0}")]
    NotATriton(String),
    #[error("bad pattern literal `{0}`")]
    BadLiteral(String),
}

/// A decorated path, canonicalized so the pendant vector is lexicographically
/// no larger than its reversal. Note two distinct decorated paths can still
/// describe isomorphic graphs (a star is a one-vertex path with k pendants
/// and also a two-edge path with k-2 pendants in the middle); counting is by
/// graph isomorphism, so such patterns get equal counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternGraph {
    pendants: Vec<usize>,
}

impl PatternGraph {
    /// Pattern from raw pendant counts `c_0..c_L`.
    pub fn decorated(c: &[usize]) -> Self {
        assert!(!c.is_empty(), "decorated path needs at least one vertex");
        let mut pendants = c.to_vec();
        let mut rev = pendants.clone();
        rev.reverse();
        if rev < pendants {
            pendants = rev;
        }
        PatternGraph { pendants }
    }

    /// The bare path with `len` edges (`len`+1 vertices).
    pub fn path(len: usize) -> Self {
        PatternGraph {
            pendants: vec![0; len + 1],
        }
    }

    /// The star K_{1,k} (k = 0 and 1 degenerate to P_1, P_2).
    pub fn star(k: usize) -> Self {
        PatternGraph { pendants: vec![k] }
    }

    /// Baton B_{j:a,b}: a path of j edges whose ends are the key vertices,
    /// padded with pendants to degrees a and b; j+a+b-1 vertices.
    pub fn baton(j: usize, a: usize, b: usize) -> Result<Self, PatternError> {
        if j < 1 || a < 2 || b < 2 {
            return Err(PatternError::NotABaton(format!(
                "need j >= 1 and a, b >= 2, got ({j}, {a}, {b})"
            )));
        }
        let mut c = vec![0; j + 1];
        c[0] = a - 1;
        c[j] = b - 1;
        Ok(PatternGraph::decorated(&c))
    }

    /// Triton B_{j,j':a,b,c}: key vertices of degrees a, b, c at distances
    /// j and j' along a path; j+j'+a+b+c-3 vertices.
    pub fn triton(j: usize, jp: usize, a: usize, b: usize, c: usize) -> Result<Self, PatternError> {
        if j < 1 || jp < 1 || a < 2 || c < 2 || b < 2 {
            return Err(PatternError::NotATriton(format!(
                "need j, j' >= 1 and a, b, c >= 2, got ({j}, {jp}, {a}, {b}, {c})"
            )));
        }
        let mut cs = vec![0; j + jp + 1];
        cs[0] = a - 1;
        cs[j] = b - 2;
        cs[j + jp] = c - 1;
        Ok(PatternGraph::decorated(&cs))
    }

    pub fn path_len(&self) -> usize {
        self.pendants.len() - 1
    }

    pub fn pendants(&self) -> &[usize] {
        &self.pendants
    }

    pub fn vertex_count(&self) -> usize {
        self.pendants.len() + self.pendants.iter().sum::<usize>()
    }

    /// Explicit graph: path vertices 0..=L, then pendants grouped by anchor.
    pub fn to_forest(&self) -> ForestGraph {
        let l = self.path_len();
        let mut edges: Vec<(usize, usize)> = (0..l).map(|i| (i, i + 1)).collect();
        let mut next = l + 1;
        for (i, &c) in self.pendants.iter().enumerate() {
            for _ in 0..c {
                edges.push((i, next));
                next += 1;
            }
        }
        ForestGraph::new(next, &edges).expect("decorated path is a tree")
    }

    /// `path:L`, `star:k`, `baton:j,a,b`, `triton:j,jp,a,b,c`,
    /// `decorated:c0,c1,...,cL`.
    pub fn parse_literal(s: &str) -> Result<Self, PatternError> {
        let bad = || PatternError::BadLiteral(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<usize> = rest
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind, nums.as_slice()) {
            ("path", [l]) => Ok(PatternGraph::path(*l)),
            ("star", [k]) => Ok(PatternGraph::star(*k)),
            ("baton", [j, a, b]) => PatternGraph::baton(*j, *a, *b),
            ("triton", [j, jp, a, b, c]) => PatternGraph::triton(*j, *jp, *a, *b, *c),
            ("decorated", c) if !c.is_empty() => Ok(PatternGraph::decorated(c)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for PatternGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.pendants.len() == 1 {
            return write!(f, "star:{}", self.pendants[0]);
        }
        if self.pendants.iter().all(|&c| c == 0) {
            return write!(f, "path:{}", self.path_len());
        }
        write!(f, "decorated:")?;
        for (i, c) in self.pendants.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Shape of the pattern as an abstract graph: trivial, a star, or a
/// caterpillar with a >= 2-vertex spine. This resolves the decorated-path
/// representation ambiguity before counting.
enum Structural {
    P1,
    P2,
    Star(usize),
    Spine(Vec<usize>),
}

fn structural_form(p: &PatternGraph) -> Structural {
    let c = &p.pendants;
    let l = c.len() - 1;
    let deg = |i: usize| c[i] + usize::from(i > 0) + usize::from(i < l);
    if l == 0 {
        return match c[0] {
            0 => Structural::P1,
            1 => Structural::P2,
            k => Structural::Star(k),
        };
    }
    let a = if deg(0) >= 2 { 0 } else { 1 };
    let b = if deg(l) >= 2 { l } else { l - 1 };
    if a > b {
        // Both ends are leaves of the graph with nothing between: P_2.
        return Structural::P2;
    }
    if a == b {
        return Structural::Star(deg(a));
    }
    Structural::Spine((a..=b).map(deg).collect())
}

/// Number of vertex subsets of the host inducing a copy of the pattern.
pub fn count_induced(host: &Caterpillar, p: &PatternGraph) -> u64 {
    match structural_form(p) {
        Structural::P1 => host.n() as u64,
        Structural::P2 => (host.n() - 1) as u64,
        Structural::Star(k) => {
            // Any k neighbors of any vertex induce a star; in a caterpillar
            // only spine vertices have degree >= 2, and for k >= 2 the
            // center of a copy is unique.
            host.spine().iter().map(|&d| binomial(d, k)).sum()
        }
        Structural::Spine(e) => {
            let mut rev = e.clone();
            rev.reverse();
            if rev == e {
                spine_scan(host, &e)
            } else {
                spine_scan(host, &e) + spine_scan(host, &rev)
            }
        }
    }
}

/// Counts subsets whose induced subgraph has nonleaf degree sequence
/// exactly `e` read left to right. The nonleaf vertices of any connected
/// induced subgraph are a window of consecutive host spine vertices; the
/// pendants demanded at each window position come from that vertex's host
/// leaves, except that each window end may instead absorb the next spine
/// vertex outward as a pendant (that vertex's remaining neighbors stay
/// outside the subset, making it a leaf of the copy).
fn spine_scan(host: &Caterpillar, e: &[usize]) -> u64 {
    let r = host.r();
    let q = e.len();
    debug_assert!(q >= 2);
    if q > r {
        return 0;
    }
    let lam: Vec<usize> = (0..r).map(|i| host.leaf_count(i)).collect();
    let mut total: u64 = 0;
    for s in 0..=r - q {
        let left_end = s;
        let right_end = s + q - 1;
        let mut ways = binomial(lam[left_end], e[0] - 1)
            + if left_end >= 1 {
                binomial(lam[left_end], e[0].wrapping_sub(2))
            } else {
                0
            };
        let right = binomial(lam[right_end], e[q - 1] - 1)
            + if right_end + 1 < r {
                binomial(lam[right_end], e[q - 1].wrapping_sub(2))
            } else {
                0
            };
        ways = ways.saturating_mul(right);
        for t in 1..q - 1 {
            if ways == 0 {
                break;
            }
            ways = ways.saturating_mul(binomial(lam[s + t], e[t] - 2));
        }
        total += ways;
    }
    total
}
