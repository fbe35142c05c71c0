//! The size-gated query interface reconstruction code sees.

use std::sync::Mutex;

use caterpillar_core::{binomial, Caterpillar};
use thiserror::Error;

use crate::{count_induced, PatternGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("illegal query: pattern has {size} vertices, deck cards hold {max_card}")]
    IllegalQuery { size: usize, max_card: usize },
    #[error("deck with m = {m} cannot serve an oracle needing cards of {need}")]
    DeckTooSmall { m: usize, need: usize },
    #[error("degree multiset not determined by star counts: {0}")]
    AmbiguousDegrees(String),
}

enum Backing {
    /// Precomputed exhaustive deck (what an adversary would actually hand us).
    Exhaustive(deck_backing::ExhaustiveDeck),
    /// The hidden host itself, answered via polynomial counting. Only the
    /// gate keeps reconstruction honest; tests assert both backings agree.
    Direct(Caterpillar),
}

/// Minimal view of a deck the oracle needs, kept behind a trait object-free
/// facade so this crate does not depend on the deck crate.
pub mod deck_backing {
    use forest_canon::CanonicalCode;
    use std::collections::BTreeMap;

    pub struct ExhaustiveDeck {
        pub entries: BTreeMap<CanonicalCode, u64>,
    }
}

/// Answers induced-subgraph counts for patterns that fit in a card:
/// `|V(pattern)| <= max_card = floor((n+2)/2)`. Every answered query is
/// logged; an oversized query is a reconstruction-logic bug and comes back
/// as an error rather than an answer.
pub struct DeckOracle {
    n: usize,
    max_card: usize,
    backing: Backing,
    query_log: Mutex<Vec<(PatternGraph, usize)>>,
    illegal_attempts: Mutex<u64>,
}

impl DeckOracle {
    /// Oracle over a hidden caterpillar.
    pub fn hidden(host: Caterpillar) -> Self {
        let n = host.n();
        DeckOracle {
            n,
            max_card: (n + 2) / 2,
            backing: Backing::Direct(host),
            query_log: Mutex::new(Vec::new()),
            illegal_attempts: Mutex::new(0),
        }
    }

    /// Oracle over an exhaustive deck; the deck must hold cards up to
    /// floor((n+2)/2) vertices.
    pub fn from_deck(
        n: usize,
        m: usize,
        entries: std::collections::BTreeMap<forest_canon::CanonicalCode, u64>,
    ) -> Result<Self, OracleError> {
        let max_card = (n + 2) / 2;
        if m < max_card {
            return Err(OracleError::DeckTooSmall { m, need: max_card });
        }
        Ok(DeckOracle {
            n,
            max_card,
            backing: Backing::Exhaustive(deck_backing::ExhaustiveDeck { entries }),
            query_log: Mutex::new(Vec::new()),
            illegal_attempts: Mutex::new(0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_card(&self) -> usize {
        self.max_card
    }

    pub fn query(&self, p: &PatternGraph) -> Result<u64, OracleError> {
        let size = p.vertex_count();
        if size > self.max_card {
            *self.illegal_attempts.lock().unwrap() += 1;
            return Err(OracleError::IllegalQuery {
                size,
                max_card: self.max_card,
            });
        }
        let answer = match &self.backing {
            Backing::Direct(host) => count_induced(host, p),
            Backing::Exhaustive(d) => {
                let code = forest_canon::canonical_code(&p.to_forest());
                d.entries.get(&code).copied().unwrap_or(0)
            }
        };
        self.query_log.lock().unwrap().push((p.clone(), size));
        Ok(answer)
    }

    pub fn query_count(&self) -> usize {
        self.query_log.lock().unwrap().len()
    }

    pub fn illegal_attempts(&self) -> u64 {
        *self.illegal_attempts.lock().unwrap()
    }

    /// Largest pattern size among answered queries (0 if none).
    pub fn max_answered_size(&self) -> usize {
        self.query_log
            .lock()
            .unwrap()
            .iter()
            .map(|&(_, s)| s)
            .max()
            .unwrap_or(0)
    }

    pub fn log_snapshot(&self) -> Vec<(PatternGraph, usize)> {
        self.query_log.lock().unwrap().clone()
    }
}

/// Recovers the host's full degree multiset (including leaves) from star
/// counts #K_{1,j} = sum_v C(d(v), j).
///
/// When the maximum degree is at most max_card - 1 the largest j with a
/// positive star count equals d_1, its count is the multiplicity, and
/// peeling downward recovers everything. Otherwise up to two degrees exceed
/// the visible range (a third is impossible: three degrees of at least
/// (n+2)/2 - 1 would need more than n - r - 2 extra leaves), and a bounded
/// search over those candidates keeps only assignments reproducing every
/// legal star count and the vertex-count identity.
pub fn recover_degree_multiset(o: &DeckOracle) -> Result<Vec<usize>, OracleError> {
    let n = o.n;
    if n <= 2 {
        return Ok(if n == 1 { vec![0] } else { vec![1, 1] });
    }
    if n == 3 {
        return Ok(vec![2, 1, 1]);
    }
    let kmax = o.max_card - 1;
    debug_assert!(kmax >= 2);
    let star = |j: usize| o.query(&PatternGraph::star(j)).expect("star fits in a card");
    let counts: Vec<u64> = (0..=kmax).map(|j| if j < 2 { 0 } else { star(j) }).collect();

    let finish = |spine_degrees: Vec<usize>| -> Result<Vec<usize>, OracleError> {
        let r = spine_degrees.len();
        let extra: usize = spine_degrees.iter().map(|&d| d - 2).sum();
        if r == 0 || r + 2 + extra != n {
            return Err(OracleError::AmbiguousDegrees(format!(
                "candidate spine degrees {spine_degrees:?} do not fit n = {n}"
            )));
        }
        let mut all = spine_degrees;
        all.sort_unstable_by(|a, b| b.cmp(a));
        all.extend(std::iter::repeat(1).take(n - r));
        Ok(all)
    };

    if counts[kmax] == 0 {
        // All degrees visible: peel from the top.
        let mut residual = counts.clone();
        let mut degrees = Vec::new();
        for d in (2..=kmax).rev() {
            let mult = residual[d];
            if mult == 0 {
                continue;
            }
            for j in 2..=d {
                let used = mult * binomial(d, j);
                if residual[j] < used {
                    return Err(OracleError::AmbiguousDegrees(format!(
                        "star counts are not a caterpillar's: deficit at j = {j}"
                    )));
                }
                residual[j] -= used;
            }
            degrees.extend(std::iter::repeat(d).take(mult as usize));
        }
        return finish(degrees);
    }

    // Some degree is at least kmax; try one or two hidden degrees.
    let consistent = |big: &[usize]| -> Option<Vec<usize>> {
        let mut residual = counts.clone();
        for &x in big {
            for j in 2..=kmax {
                let c = binomial(x, j);
                residual[j] = residual[j].checked_sub(c)?;
            }
        }
        if residual[kmax] != 0 {
            return None;
        }
        let mut degrees: Vec<usize> = big.to_vec();
        for d in (2..kmax).rev() {
            let mult = residual[d];
            for j in 2..=d {
                residual[j] = residual[j].checked_sub(mult * binomial(d, j))?;
            }
            degrees.extend(std::iter::repeat(d).take(mult as usize));
        }
        if residual[2..].iter().any(|&x| x != 0) {
            return None;
        }
        let r = degrees.len();
        let extra: usize = degrees.iter().map(|&d| d - 2).sum();
        (r >= 1 && r + 2 + extra == n).then_some(degrees)
    };

    // Degrees >= kmax, largest first; q of them force q(kmax-1) <= n-2, so
    // three at most (three only in tiny hosts where kmax = 2).
    let mut solutions: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(big) = stack.pop() {
        let spent: u64 = big.iter().map(|&x| binomial(x, kmax)).sum();
        if spent == counts[kmax] && !big.is_empty() {
            if let Some(sol) = consistent(&big) {
                solutions.push(sol);
            }
            continue;
        }
        if big.len() == 3 || spent >= counts[kmax] {
            continue;
        }
        let cap = big.last().copied().unwrap_or(n - 1);
        for x in kmax..=cap {
            if spent + binomial(x, kmax) > counts[kmax] {
                break;
            }
            let mut next = big.clone();
            next.push(x);
            stack.push(next);
        }
    }
    solutions.sort();
    solutions.dedup();
    match solutions.len() {
        1 => finish(solutions.pop().unwrap()),
        0 => Err(OracleError::AmbiguousDegrees(
            "no degree multiset matches the star counts".into(),
        )),
        k => Err(OracleError::AmbiguousDegrees(format!(
            "{k} degree multisets match the star counts"
        ))),
    }
}
