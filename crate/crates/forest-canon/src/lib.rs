//! Canonical byte codes for forests.
//!
//! Two forests receive equal codes exactly when they are isomorphic. Each
//! tree component is rooted at its center (for bicentral trees, the smaller
//! of the two rootings) and encoded with the classical sorted-subtree
//! scheme: a vertex encodes as `1`, the sorted codes of its children, `0`.
//! Component codes are sorted and concatenated, which keeps the whole code
//! self-delimiting: components start and end at nesting depth zero.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NotAForest {
    #[error("vertex index {0} out of range (n = {1})")]
    IndexOutOfRange(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0:?}")]
    DuplicateEdge((usize, usize)),
    #[error("edge {0:?} closes a cycle")]
    Cycle((usize, usize)),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeParseError {
    #[error("bad hex: {0}")]
    BadHex(String),
    #[error("malformed code bytes")]
    Malformed,
}

/// A forest over vertices `0..n`, validated at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl ForestGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, NotAForest> {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in edges {
            if u >= n {
                return Err(NotAForest::IndexOutOfRange(u, n));
            }
            if v >= n {
                return Err(NotAForest::IndexOutOfRange(v, n));
            }
            if u == v {
                return Err(NotAForest::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(NotAForest::DuplicateEdge((u, v)));
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return Err(NotAForest::Cycle((u, v)));
            }
            parent[ru] = rv;
        }
        Ok(ForestGraph {
            n,
            edges: edges.to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }
}

/// Isomorphism-invariant code; order and equality are plain byte order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode(Vec<u8>);

impl CanonicalCode {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Vertex count of the encoded forest: one `1` byte per vertex.
    pub fn vertex_count(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    /// Rebuilds a forest the code encodes: each `1` opens a vertex (child
    /// of the currently open one), each `0` closes it.
    pub fn decode_forest(&self) -> ForestGraph {
        let mut edges = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut next = 0usize;
        for &b in &self.0 {
            if b == 1 {
                if let Some(&parent) = stack.last() {
                    edges.push((parent, next));
                }
                stack.push(next);
                next += 1;
            } else {
                stack.pop().expect("balanced code");
            }
        }
        ForestGraph {
            n: next,
            edges,
        }
    }

    pub fn from_hex(s: &str) -> Result<Self, CodeParseError> {
        let bytes = hex::decode(s).map_err(|e| CodeParseError::BadHex(e.to_string()))?;
        // Structural check: 0/1 alphabet, balanced, depth never negative.
        let mut depth = 0i64;
        for &b in &bytes {
            match b {
                1 => depth += 1,
                0 => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(CodeParseError::Malformed);
                    }
                }
                _ => return Err(CodeParseError::Malformed),
            }
        }
        if depth != 0 {
            return Err(CodeParseError::Malformed);
        }
        Ok(CanonicalCode(bytes))
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Sorted-subtree code of the component of `root`, recursing away from
/// `parent`.
fn rooted_code(adj: &[Vec<usize>], root: usize, parent: usize) -> Vec<u8> {
    let mut child_codes: Vec<Vec<u8>> = adj[root]
        .iter()
        .filter(|&&w| w != parent)
        .map(|&w| rooted_code(adj, w, root))
        .collect();
    child_codes.sort_unstable();
    let mut code = Vec::with_capacity(2 + child_codes.iter().map(Vec::len).sum::<usize>());
    code.push(1);
    for c in child_codes {
        code.extend_from_slice(&c);
    }
    code.push(0);
    code
}

/// Center(s) of the tree component containing `start`: strip leaf layers
/// until one or two vertices remain. Appends the component's vertices to
/// `verts` and marks them in `seen`.
fn component_centers(
    adj: &[Vec<usize>],
    start: usize,
    seen: &mut [bool],
    verts: &mut Vec<usize>,
) -> Vec<usize> {
    let base = verts.len();
    verts.push(start);
    seen[start] = true;
    let mut i = base;
    while i < verts.len() {
        for &w in &adj[verts[i]] {
            if !seen[w] {
                seen[w] = true;
                verts.push(w);
            }
        }
        i += 1;
    }
    let comp = &verts[base..];
    // Adjacency lists stay within the component, so degrees need no filter.
    let mut deg: Vec<usize> = vec![0; adj.len()];
    let mut alive: Vec<bool> = vec![false; adj.len()];
    for &v in comp {
        deg[v] = adj[v].len();
        alive[v] = true;
    }
    let mut remaining = comp.len();
    let mut layer: Vec<usize> = comp.iter().copied().filter(|&v| deg[v] <= 1).collect();
    while remaining > 2 {
        let mut next = Vec::new();
        for &v in &layer {
            alive[v] = false;
        }
        remaining -= layer.len();
        for &v in &layer {
            for &w in &adj[v] {
                if alive[w] {
                    deg[w] -= 1;
                    if deg[w] == 1 {
                        next.push(w);
                    }
                }
            }
        }
        layer = next;
    }
    let mut centers: Vec<usize> = comp.iter().copied().filter(|&v| alive[v]).collect();
    centers.sort_unstable();
    centers
}

fn code_from_adjacency(n: usize, adj: &[Vec<usize>]) -> CanonicalCode {
    let mut seen = vec![false; n];
    let mut verts = Vec::with_capacity(n);
    let mut component_codes = Vec::new();
    for v in 0..n {
        if seen[v] {
            continue;
        }
        let centers = component_centers(adj, v, &mut seen, &mut verts);
        let code = centers
            .iter()
            .map(|&c| rooted_code(adj, c, usize::MAX))
            .min()
            .expect("component has a center");
        component_codes.push(code);
    }
    component_codes.sort_unstable();
    CanonicalCode(component_codes.concat())
}

pub fn canonical_code(f: &ForestGraph) -> CanonicalCode {
    code_from_adjacency(f.n, &f.adjacency())
}

/// Convenience wrapper validating raw edges first.
pub fn code_of_edges(n: usize, edges: &[(usize, usize)]) -> Result<CanonicalCode, NotAForest> {
    Ok(canonical_code(&ForestGraph::new(n, edges)?))
}

/// Canonical code without the forest validation pass, for hot loops whose
/// inputs are forests by construction (e.g. induced subgraphs of a tree).
/// Feeding a cyclic graph here loses the acyclicity invariant silently.
pub fn code_of_forest_unchecked(n: usize, edges: &[(usize, usize)]) -> CanonicalCode {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    code_from_adjacency(n, &adj)
}

pub fn is_isomorphic(f: &ForestGraph, g: &ForestGraph) -> bool {
    canonical_code(f) == canonical_code(g)
}
