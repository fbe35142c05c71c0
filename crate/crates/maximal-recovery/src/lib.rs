//! Tables of maximal baton and triton subgraphs of a hidden caterpillar,
//! recovered from bounded-size induced-subgraph counts.
//!
//! A baton of window length `j` is a path of `j+1` vertices with pendant
//! leaves attached at both ends; a triton additionally decorates one
//! interior path vertex, at distance `j` from one end and `jp` from the
//! other.  Inside a caterpillar every occurrence of such a subgraph extends
//! to a unique maximal one anchored at a spine window, so the multiplicities
//! of the maximal occurrences satisfy a triangular linear system against
//! plain induced-subgraph counts.  `solve_exclusion` solves that system from
//! the largest members down; `level_pairs` and `ordered_pair_sets` then
//! cancel the recovered tables against each other to locate spine degrees by
//! their distance from the spine ends.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use caterpillar_core::{binomial, Caterpillar};
use pattern_oracle::{DeckOracle, OracleError, PatternGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecoveryError {
    /// Family parameters that denote no valid window shape.
    #[error("illegal family: {0}")]
    IllegalFamily(String),
    /// Subtracting the contributions of larger members drove a count
    /// negative, or the seed itself is malformed.
    #[error("inconsistent seed: {0}")]
    InconsistentSeed(String),
    /// A multiset cancellation did not leave the promised remainder.
    #[error("inconsistent tables: {0}")]
    InconsistentTables(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A family of window subgraphs: batons at a fixed window length, or
/// tritons at a fixed split of the window around the decorated middle.
/// Triton splits are stored with `j <= jp`; the two orders describe the
/// same family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FamilyKind {
    Batons { j: usize },
    Tritons { j: usize, jp: usize },
}

impl FamilyKind {
    pub fn batons(j: usize) -> Result<Self, RecoveryError> {
        if j == 0 {
            return Err(RecoveryError::IllegalFamily(
                "baton window length must be positive".into(),
            ));
        }
        Ok(FamilyKind::Batons { j })
    }

    pub fn tritons(j: usize, jp: usize) -> Result<Self, RecoveryError> {
        if j == 0 || jp == 0 {
            return Err(RecoveryError::IllegalFamily(
                "triton arm lengths must be positive".into(),
            ));
        }
        Ok(FamilyKind::Tritons {
            j: j.min(jp),
            jp: j.max(jp),
        })
    }

    /// Canonical storage form of a key under this family.
    ///
    /// Baton end pairs are unordered.  A triton triple is directed, near arm
    /// first, except that a triple is identified with its reversal when the
    /// two arms are equal, and also when the middle has degree 2: such a
    /// triple is the same subgraph read in either direction, so no
    /// orientation for it exists in the host.
    fn canon_key(self, key: FamilyKey) -> FamilyKey {
        match (self, key) {
            (FamilyKind::Batons { .. }, FamilyKey::Pair(a, b)) => {
                FamilyKey::Pair(a.min(b), a.max(b))
            }
            (FamilyKind::Tritons { j, jp }, FamilyKey::Triple(x, y, z)) => {
                if (j == jp || y == 2) && (z, y, x) < (x, y, z) {
                    FamilyKey::Triple(z, y, x)
                } else {
                    FamilyKey::Triple(x, y, z)
                }
            }
            _ => panic!("family key shape mismatch"),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::Batons { j } => write!(f, "batons:{j}"),
            FamilyKind::Tritons { j, jp } => write!(f, "tritons:{j},{jp}"),
        }
    }
}

/// Key degrees of one family member: the two window-end degrees of a baton,
/// or the (near end, middle, far end) degrees of a triton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FamilyKey {
    Pair(usize, usize),
    Triple(usize, usize, usize),
}

fn pair_of(key: FamilyKey) -> (usize, usize) {
    match key {
        FamilyKey::Pair(a, b) => (a, b),
        _ => panic!("expected a baton key"),
    }
}

fn triple_of(key: FamilyKey) -> (usize, usize, usize) {
    match key {
        FamilyKey::Triple(x, y, z) => (x, y, z),
        _ => panic!("expected a triton key"),
    }
}

/// Number of vertices of the member with the given key degrees.
pub fn member_vertex_count(kind: FamilyKind, key: FamilyKey) -> usize {
    match (kind, key) {
        (FamilyKind::Batons { j }, FamilyKey::Pair(a, b)) => j + a + b - 1,
        (FamilyKind::Tritons { j, jp }, FamilyKey::Triple(x, y, z)) => j + jp + x + y + z - 3,
        _ => panic!("family key shape mismatch"),
    }
}

/// Multiplicities of the maximal members of one family inside one host.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaximalFamilyTable {
    kind: FamilyKind,
    entries: BTreeMap<FamilyKey, u64>,
}

impl MaximalFamilyTable {
    pub fn new(kind: FamilyKind) -> Self {
        MaximalFamilyTable {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn entries(&self) -> &BTreeMap<FamilyKey, u64> {
        &self.entries
    }

    pub fn add(&mut self, key: FamilyKey, mult: u64) {
        if mult == 0 {
            return;
        }
        *self.entries.entry(self.kind.canon_key(key)).or_insert(0) += mult;
    }

    pub fn get(&self, key: FamilyKey) -> u64 {
        self.entries
            .get(&self.kind.canon_key(key))
            .copied()
            .unwrap_or(0)
    }

    pub fn contains(&self, key: FamilyKey) -> bool {
        self.entries.contains_key(&self.kind.canon_key(key))
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tab-separated dump, one row per entry: window parameters, key
    /// degrees, multiplicity.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (&key, &mult) in &self.entries {
            match (self.kind, key) {
                (FamilyKind::Batons { j }, FamilyKey::Pair(a, b)) => {
                    out.push_str(&format!("{j}\t{a}\t{b}\t{mult}\n"));
                }
                (FamilyKind::Tritons { j, jp }, FamilyKey::Triple(x, y, z)) => {
                    out.push_str(&format!("{j},{jp}\t{x}\t{y}\t{z}\t{mult}\n"));
                }
                _ => unreachable!("keys are canonicalized on insertion"),
            }
        }
        out
    }
}

/// Ground-truth table read directly off a known spine (test oracle; the
/// solver below must reproduce it from counts alone).
pub fn direct_maximal_table(g: &Caterpillar, family: FamilyKind) -> MaximalFamilyTable {
    let d = g.spine();
    let r = d.len();
    let mut t = MaximalFamilyTable::new(family);
    match family {
        FamilyKind::Batons { j } => {
            for p in 0..r.saturating_sub(j) {
                t.add(FamilyKey::Pair(d[p], d[p + j]), 1);
            }
        }
        FamilyKind::Tritons { j, jp } => {
            let jj = j + jp;
            for p in 0..r.saturating_sub(jj) {
                t.add(FamilyKey::Triple(d[p], d[p + j], d[p + jj]), 1);
                if j != jp {
                    // Same window read from the other end; a distinct
                    // maximal member whenever the arms differ.
                    t.add(FamilyKey::Triple(d[p + jj], d[p + jp], d[p]), 1);
                }
            }
        }
    }
    t
}

/// Induced copies of the baton with end degrees (a, b) inside the baton
/// with end degrees (ba, bb), both at the same window length.  The windows
/// must coincide, so a copy is a choice of pendants at each end, summed
/// over the at most two end assignments.
pub fn s_baton_in_baton(a: usize, b: usize, ba: usize, bb: usize) -> u128 {
    let direct = binomial(ba - 1, a - 1) as u128 * binomial(bb - 1, b - 1) as u128;
    if a == b {
        direct
    } else {
        direct + binomial(ba - 1, b - 1) as u128 * binomial(bb - 1, a - 1) as u128
    }
}

/// Induced copies of the triton (x, y, z) inside the triton (tx, ty, tz),
/// both with arms (j, jp) and decorated middles.  The middle must map to
/// the middle; when the arms are equal both orientations fit.
pub fn s_triton_in_triton(
    equal_arms: bool,
    (x, y, z): (usize, usize, usize),
    (tx, ty, tz): (usize, usize, usize),
) -> u128 {
    let mid = binomial(ty - 2, y - 2) as u128;
    let direct = binomial(tx - 1, x - 1) as u128 * mid * binomial(tz - 1, z - 1) as u128;
    if equal_arms && x != z {
        direct + binomial(tx - 1, z - 1) as u128 * mid * binomial(tz - 1, x - 1) as u128
    } else {
        direct
    }
}

/// Recover the full multiplicity table of a family from the oracle, given
/// the multiplicities of every member too large to query.
///
/// Members are processed in strictly decreasing vertex count; the count of
/// each member is its induced-copy count minus the copies it has inside the
/// strictly larger maximal members already known.  Seed entries are taken
/// as authoritative and never re-solved.
pub fn solve_exclusion(
    o: &DeckOracle,
    family: FamilyKind,
    seeded: &MaximalFamilyTable,
) -> Result<MaximalFamilyTable, RecoveryError> {
    if seeded.kind() != family {
        return Err(RecoveryError::IllegalFamily(format!(
            "seed table is for {} but the requested family is {}",
            seeded.kind(),
            family
        )));
    }
    match family {
        FamilyKind::Batons { j } => solve_batons(o, j, seeded),
        FamilyKind::Tritons { j, jp } => solve_tritons(o, j, jp, seeded),
    }
}

fn solve_batons(
    o: &DeckOracle,
    j: usize,
    seeded: &MaximalFamilyTable,
) -> Result<MaximalFamilyTable, RecoveryError> {
    let kind = FamilyKind::Batons { j };
    let mut table = seeded.clone();
    // Members with exactly max_card vertices still fit in cards, so they are
    // solvable; the seed only has to cover strictly larger members.
    let max_solvable = o.max_card();
    let min_size = j + 3;
    for v in (min_size..=max_solvable).rev() {
        let keysum = v + 1 - j;
        for a in 2..=keysum / 2 {
            let b = keysum - a;
            let key = FamilyKey::Pair(a, b);
            if table.contains(key) {
                continue;
            }
            let pattern = PatternGraph::baton(j, a, b).expect("end degrees at least 2");
            let mut remainder = o.query(&pattern)? as i128;
            for (&hkey, &mult) in table.entries() {
                if member_vertex_count(kind, hkey) <= v {
                    continue;
                }
                let (ba, bb) = pair_of(hkey);
                remainder -= (s_baton_in_baton(a, b, ba, bb) * mult as u128) as i128;
            }
            if remainder < 0 {
                return Err(RecoveryError::InconsistentSeed(format!(
                    "member ({a},{b}) of {kind} has negative count {remainder}"
                )));
            }
            if remainder > 0 {
                table.add(key, remainder as u64);
            }
        }
    }
    Ok(table)
}

fn solve_tritons(
    o: &DeckOracle,
    j: usize,
    jp: usize,
    seeded: &MaximalFamilyTable,
) -> Result<MaximalFamilyTable, RecoveryError> {
    let kind = FamilyKind::Tritons { j, jp };
    let jj = j + jp;
    let slots_per_window: u64 = if j == jp { 1 } else { 2 };

    // Split the seed: triples with a decorated middle solve by exclusion;
    // triples around a degree-2 middle are completed afterwards against the
    // window count, since they carry no orientation of their own.  Seed
    // entries whose two-end window is itself too large to query double as
    // the seed of that window count.
    let mut decorated = MaximalFamilyTable::new(kind);
    let mut window_seed_slots: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (&key, &mult) in seeded.entries() {
        let (x, y, z) = triple_of(key);
        if y >= 3 {
            decorated.add(key, mult);
        }
        let (lo, hi) = (x.min(z), x.max(z));
        if jj + lo + hi - 1 > o.max_card() {
            *window_seed_slots.entry((lo, hi)).or_insert(0) += mult;
        }
    }
    let mut window_seed = MaximalFamilyTable::new(FamilyKind::Batons { j: jj });
    for ((lo, hi), c) in window_seed_slots {
        if c % slots_per_window != 0 {
            return Err(RecoveryError::InconsistentSeed(format!(
                "window ends ({lo},{hi}) carry {c} seed triples, not a multiple of {slots_per_window}"
            )));
        }
        window_seed.add(FamilyKey::Pair(lo, hi), c / slots_per_window);
    }
    let windows = solve_batons(o, jj, &window_seed)?;

    let max_solvable = o.max_card();
    let min_size = jj + 4;

    // Key degrees of genuine members are spine degrees, and every spine
    // degree shows up among the window end pairs; enumerating candidate
    // keys over that value set, and only while a window with matching ends
    // still has an open slot, keeps the query count near the table size.
    let mut values: BTreeSet<usize> = BTreeSet::new();
    let mut remaining: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (&key, &mult) in windows.entries() {
        let (lo, hi) = pair_of(key);
        values.insert(lo);
        values.insert(hi);
        remaining.insert((lo, hi), mult * slots_per_window);
    }
    for (&key, &mult) in decorated.entries() {
        let (x, _, z) = triple_of(key);
        let slot = remaining.get_mut(&(x.min(z), x.max(z))).ok_or_else(|| {
            RecoveryError::InconsistentSeed(format!(
                "seeded member {key:?} has no window with matching ends"
            ))
        })?;
        *slot = slot.checked_sub(mult).ok_or_else(|| {
            RecoveryError::InconsistentSeed(format!(
                "seeded members with the ends of {key:?} exceed their window slots"
            ))
        })?;
    }

    for v in (min_size..=max_solvable).rev() {
        let keysum = v + 3 - jj;
        for &x in &values {
            for &y in values.range(3..) {
                if x + y + 2 > keysum {
                    break;
                }
                let z = keysum - x - y;
                if !values.contains(&z) || (j == jp && z < x) {
                    continue;
                }
                let key = FamilyKey::Triple(x, y, z);
                if decorated.contains(key)
                    || remaining.get(&(x.min(z), x.max(z))).copied().unwrap_or(0) == 0
                {
                    continue;
                }
                let pattern =
                    PatternGraph::triton(j, jp, x, y, z).expect("degrees within range");
                let mut remainder = o.query(&pattern)? as i128;
                for (&hkey, &mult) in decorated.entries() {
                    if member_vertex_count(kind, hkey) <= v {
                        continue;
                    }
                    let h = triple_of(hkey);
                    remainder -=
                        (s_triton_in_triton(j == jp, (x, y, z), h) * mult as u128) as i128;
                }
                if remainder < 0 {
                    return Err(RecoveryError::InconsistentSeed(format!(
                        "member ({x},{y},{z}) of {kind} has negative count {remainder}"
                    )));
                }
                if remainder > 0 {
                    let found = remainder as u64;
                    let slot = remaining
                        .get_mut(&(x.min(z), x.max(z)))
                        .expect("slot presence checked above");
                    *slot = slot.checked_sub(found).ok_or_else(|| {
                        RecoveryError::InconsistentSeed(format!(
                            "members with ends ({x},{z}) exceed their window slots"
                        ))
                    })?;
                    decorated.add(key, found);
                }
            }
        }
    }

    // Every window slot not occupied by a decorated triple reads as the two
    // window ends around a degree-2 middle.
    let mut out = decorated.clone();
    let mut decorated_by_ends: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (&key, &mult) in decorated.entries() {
        let (x, _, z) = triple_of(key);
        *decorated_by_ends
            .entry((x.min(z), x.max(z)))
            .or_insert(0) += mult;
    }
    let mut all_ends: BTreeSet<(usize, usize)> = decorated_by_ends.keys().copied().collect();
    for (&key, _) in windows.entries() {
        all_ends.insert(pair_of(key));
    }
    for (lo, hi) in all_ends {
        let slots = windows.get(FamilyKey::Pair(lo, hi)) * slots_per_window;
        let dec = decorated_by_ends.get(&(lo, hi)).copied().unwrap_or(0);
        if dec > slots {
            return Err(RecoveryError::InconsistentSeed(format!(
                "window ends ({lo},{hi}): {dec} decorated triples exceed {slots} window slots"
            )));
        }
        if slots > dec {
            out.add(FamilyKey::Triple(lo, 2, hi), slots - dec);
        }
    }
    Ok(out)
}

/// Unordered degree pairs at equal distance from the two spine ends,
/// outermost first, plus the one or two degrees left in the middle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelPairs {
    /// Entry `k-1` is `{d(v_k), d(v_{r+1-k})}`, sorted, for `1 <= k <= (r-1)/2`.
    pub pairs: Vec<(usize, usize)>,
    /// The remaining central degree (odd spine) or degree pair (even spine).
    pub middle: Vec<usize>,
}

/// Locate the degree pair at every level from the baton tables alone.
///
/// For level k, start from two copies of every spine degree; each maximal
/// window of length k deletes its two key degrees, which removes interior
/// degrees twice and the k outermost degrees on each side once; deleting
/// the already-located outer pairs once more leaves exactly the level-k
/// pair.
pub fn level_pairs(
    batons: &BTreeMap<usize, MaximalFamilyTable>,
    spine_degrees: &[usize],
) -> Result<LevelPairs, RecoveryError> {
    let r = spine_degrees.len();
    let q = if r == 0 { 0 } else { (r - 1) / 2 };
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(q);
    for k in 1..=q {
        let table = batons.get(&k).ok_or_else(|| {
            RecoveryError::InconsistentTables(format!("missing table for window length {k}"))
        })?;
        if table.kind() != (FamilyKind::Batons { j: k }) {
            return Err(RecoveryError::InconsistentTables(format!(
                "table stored under window length {k} is for {}",
                table.kind()
            )));
        }
        if table.total() != (r - k) as u64 {
            return Err(RecoveryError::InconsistentTables(format!(
                "window length {k}: {} entries for {} windows",
                table.total(),
                r - k
            )));
        }
        let mut m: BTreeMap<usize, i64> = BTreeMap::new();
        for &d in spine_degrees {
            *m.entry(d).or_insert(0) += 2;
        }
        for (&key, &mult) in table.entries() {
            let (a, b) = pair_of(key);
            *m.entry(a).or_insert(0) -= mult as i64;
            *m.entry(b).or_insert(0) -= mult as i64;
        }
        for &(a, b) in &pairs {
            *m.entry(a).or_insert(0) -= 1;
            *m.entry(b).or_insert(0) -= 1;
        }
        let rest = positive_multiset(&m, || {
            format!("window length {k} deletes a degree more often than it occurs")
        })?;
        if rest.len() != 2 {
            return Err(RecoveryError::InconsistentTables(format!(
                "level {k}: expected two remaining degrees, found {}",
                rest.len()
            )));
        }
        pairs.push((rest[0], rest[1]));
    }
    let mut m: BTreeMap<usize, i64> = BTreeMap::new();
    for &d in spine_degrees {
        *m.entry(d).or_insert(0) += 1;
    }
    for &(a, b) in &pairs {
        *m.entry(a).or_insert(0) -= 1;
        *m.entry(b).or_insert(0) -= 1;
    }
    let middle = positive_multiset(&m, || {
        "located level pairs are not a submultiset of the spine degrees".to_string()
    })?;
    if middle.len() != r - 2 * q {
        return Err(RecoveryError::InconsistentTables(format!(
            "expected {} middle degrees, found {}",
            r - 2 * q,
            middle.len()
        )));
    }
    Ok(LevelPairs { pairs, middle })
}

fn positive_multiset(
    m: &BTreeMap<usize, i64>,
    err: impl Fn() -> String,
) -> Result<Vec<usize>, RecoveryError> {
    let mut rest = Vec::new();
    for (&d, &c) in m {
        if c < 0 {
            return Err(RecoveryError::InconsistentTables(err()));
        }
        for _ in 0..c {
            rest.push(d);
        }
    }
    Ok(rest)
}

/// A set of two ordered degree pairs `(d(v_k), d(v_{k+s}))` and
/// `(d(v_{ov k}), d(v_{ov(k+s)}))`, stored sorted.
pub type OrderedPairSet = [(usize, usize); 2];

fn normalize_set(a: (usize, usize), b: (usize, usize)) -> OrderedPairSet {
    if b < a {
        [b, a]
    } else {
        [a, b]
    }
}

/// For each `k` with `k+s <= q`, recover the unordered set of the two
/// ordered degree pairs at distance `s` inward from the two spine ends.
///
/// The multiset of all ordered end pairs of distance-s windows, written in
/// both orders, cancels against the triton tables: a triple with arms
/// (k, s) pairs its middle with its s-distant end and thereby deletes the
/// pair of one window whose near key lies more than k from the spine end.
/// Degree-2 rows carry no orientation (their triples are undecorated), so
/// the cancellation runs on rows whose first degree exceeds 2 and the
/// degree-2 rows of the result are reconstituted from the level pairs.
pub fn ordered_pair_sets(
    batons: &BTreeMap<usize, MaximalFamilyTable>,
    tritons: &BTreeMap<(usize, usize), MaximalFamilyTable>,
    spine_degrees: &[usize],
    s: usize,
    q: usize,
) -> Result<Vec<OrderedPairSet>, RecoveryError> {
    if s == 0 {
        return Err(RecoveryError::IllegalFamily(
            "window distance s must be positive".into(),
        ));
    }
    let r = spine_degrees.len();
    if r == 0 {
        return Ok(Vec::new());
    }
    if q > (r - 1) / 2 {
        return Err(RecoveryError::IllegalFamily(format!(
            "q = {q} exceeds half the spine length"
        )));
    }
    let lp = level_pairs(batons, spine_degrees)?;
    let mut out: Vec<OrderedPairSet> = Vec::new();
    for k in 1..=q.saturating_sub(s) {
        let (ka, kb) = lp.pairs[k - 1];
        let (sa, sb) = lp.pairs[k + s - 1];
        if ka == kb {
            // Both ends carry the same degree at level k, so the set is
            // determined by the level pair one window further in.
            out.push(normalize_set((ka, sa), (kb, sb)));
            continue;
        }
        let stable = batons.get(&s).ok_or_else(|| {
            RecoveryError::InconsistentTables(format!("missing table for window length {s}"))
        })?;
        let mut l: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for (&key, &mult) in stable.entries() {
            let (a, b) = pair_of(key);
            if a != 2 {
                *l.entry((a, b)).or_insert(0) += mult as i64;
            }
            if b != 2 {
                *l.entry((b, a)).or_insert(0) += mult as i64;
            }
        }
        let tkey = (k.min(s), k.max(s));
        let ttable = tritons.get(&tkey).ok_or_else(|| {
            RecoveryError::InconsistentTables(format!(
                "missing triple table for arm split {},{}",
                tkey.0, tkey.1
            ))
        })?;
        for (&key, &mult) in ttable.entries() {
            let (x, y, z) = triple_of(key);
            if y == 2 {
                continue;
            }
            // Delete the (middle, s-distant end) pair; with equal arms both
            // ends lie at distance s.
            if k == s {
                *l.entry((y, z)).or_insert(0) -= mult as i64;
                *l.entry((y, x)).or_insert(0) -= mult as i64;
            } else if k < s {
                *l.entry((y, z)).or_insert(0) -= mult as i64;
            } else {
                *l.entry((y, x)).or_insert(0) -= mult as i64;
            }
        }
        for prior in &out {
            for &(f, sc) in prior {
                if f != 2 {
                    *l.entry((f, sc)).or_insert(0) -= 1;
                }
            }
        }
        let mut rest: Vec<(usize, usize)> = Vec::new();
        for (&pv, &c) in &l {
            if c < 0 {
                return Err(RecoveryError::InconsistentTables(format!(
                    "distance {s}, level {k}: pair ({},{}) deleted too often",
                    pv.0, pv.1
                )));
            }
            for _ in 0..c {
                rest.push(pv);
            }
        }
        let set = if ka != 2 && kb != 2 {
            if rest.len() != 2 {
                return Err(RecoveryError::InconsistentTables(format!(
                    "distance {s}, level {k}: expected two remaining pairs, found {}",
                    rest.len()
                )));
            }
            let firsts = [rest[0].0.min(rest[1].0), rest[0].0.max(rest[1].0)];
            if firsts != [ka.min(kb), ka.max(kb)] {
                return Err(RecoveryError::InconsistentTables(format!(
                    "distance {s}, level {k}: remaining pairs do not start at the level degrees"
                )));
            }
            normalize_set(rest[0], rest[1])
        } else {
            // Exactly one end of level k has degree 2; its far degree is the
            // member of the inner level pair not used by the other end.
            let big = if ka == 2 { kb } else { ka };
            if rest.len() != 1 || rest[0].0 != big {
                return Err(RecoveryError::InconsistentTables(format!(
                    "distance {s}, level {k}: expected one remaining pair starting at {big}"
                )));
            }
            let other = if rest[0].1 == sa {
                sb
            } else if rest[0].1 == sb {
                sa
            } else {
                return Err(RecoveryError::InconsistentTables(format!(
                    "distance {s}, level {k}: far degree {} is not in the inner level pair",
                    rest[0].1
                )));
            };
            normalize_set(rest[0], (2, other))
        };
        out.push(set);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use caterpillar_core::enumerate_caterpillars;

    fn cat(spine: &[usize]) -> Caterpillar {
        Caterpillar::from_spine(spine).unwrap()
    }

    fn batons(j: usize) -> FamilyKind {
        FamilyKind::batons(j).unwrap()
    }

    fn tritons(j: usize, jp: usize) -> FamilyKind {
        FamilyKind::tritons(j, jp).unwrap()
    }

    /// All legal families of a host with spine length r, capped so tests
    /// stay fast: baton windows up to r-1, triton windows up to r-1.
    fn all_families(r: usize) -> Vec<FamilyKind> {
        let mut fams = Vec::new();
        for j in 1..r {
            fams.push(batons(j));
        }
        for j in 1..r {
            for jp in j..r {
                if j + jp <= r - 1 {
                    fams.push(tritons(j, jp));
                }
            }
        }
        fams
    }

    fn seed_of_large_members(g: &Caterpillar, family: FamilyKind, max_card: usize) -> MaximalFamilyTable {
        let full = direct_maximal_table(g, family);
        let mut seed = MaximalFamilyTable::new(family);
        for (&key, &mult) in full.entries() {
            if member_vertex_count(family, key) >= max_card {
                seed.add(key, mult);
            }
        }
        seed
    }

    #[test]
    fn direct_table_reads_windows_off_the_spine() {
        let t = direct_maximal_table(&cat(&[3, 2, 3]), batons(2));
        assert_eq!(t.entries().len(), 1);
        assert_eq!(t.get(FamilyKey::Pair(3, 3)), 1);

        let t = direct_maximal_table(&cat(&[4, 3, 2, 3]), batons(1));
        assert_eq!(t.get(FamilyKey::Pair(3, 4)), 1);
        assert_eq!(t.get(FamilyKey::Pair(2, 3)), 2);
        assert_eq!(t.total(), 3);

        let t = direct_maximal_table(&cat(&[2, 2, 2]), batons(1));
        assert_eq!(t.get(FamilyKey::Pair(2, 2)), 2);
        assert_eq!(t.total(), 2);

        // No window fits when j exceeds r-1.
        let t = direct_maximal_table(&cat(&[3, 2, 3]), batons(3));
        assert!(t.is_empty());
    }

    #[test]
    fn direct_triton_table_lists_both_window_readings() {
        let t = direct_maximal_table(&cat(&[2, 3, 2, 2, 3, 3, 2, 3]), tritons(2, 2));
        assert_eq!(t.total(), 4);
        assert_eq!(t.get(FamilyKey::Triple(2, 2, 3)), 1);
        assert_eq!(t.get(FamilyKey::Triple(3, 2, 3)), 1);
        assert_eq!(t.get(FamilyKey::Triple(2, 3, 2)), 1);
        assert_eq!(t.get(FamilyKey::Triple(2, 3, 3)), 1);

        // Unequal arms: one window, two readings, near arm first.
        let t = direct_maximal_table(&cat(&[4, 3, 2, 3]), tritons(1, 2));
        assert_eq!(t.total(), 2);
        assert_eq!(t.get(FamilyKey::Triple(4, 3, 3)), 1);
        // The second reading has an undecorated middle and is stored up to
        // reversal.
        assert_eq!(t.get(FamilyKey::Triple(3, 2, 4)), 1);
        assert_eq!(t.get(FamilyKey::Triple(4, 2, 3)), 1);
    }

    #[test]
    fn table_cardinalities_match_window_counts() {
        for n in 3..=12 {
            for g in enumerate_caterpillars(n) {
                let r = g.r();
                for fam in all_families(r) {
                    let t = direct_maximal_table(&g, fam);
                    let expect = match fam {
                        FamilyKind::Batons { j } => (r - j) as u64,
                        FamilyKind::Tritons { j, jp } if j == jp => (r - j - jp) as u64,
                        FamilyKind::Tritons { j, jp } => 2 * (r - j - jp) as u64,
                    };
                    assert_eq!(t.total(), expect, "{g} {fam}");
                }
            }
        }
    }

    #[test]
    fn exclusion_matches_direct_scan_small() {
        for n in 3..=11 {
            for g in enumerate_caterpillars(n) {
                let o = DeckOracle::hidden(g.clone());
                for fam in all_families(g.r()) {
                    let seed = seed_of_large_members(&g, fam, o.max_card());
                    let solved = solve_exclusion(&o, fam, &seed).unwrap();
                    let direct = direct_maximal_table(&g, fam);
                    assert_eq!(solved, direct, "{g} {fam}");
                }
            }
        }
    }

    #[test]
    fn exclusion_matches_direct_scan_spot_large() {
        let spines: [&[usize]; 5] = [
            &[6, 2, 6],
            &[2, 3, 3, 2, 3, 2, 2, 3],
            &[5, 2, 2, 2, 5],
            &[2, 2, 4, 3, 2, 2, 4],
            &[3, 4, 2, 5, 2, 2, 3],
        ];
        for spine in spines {
            let g = cat(spine);
            let o = DeckOracle::hidden(g.clone());
            for fam in all_families(g.r()) {
                let seed = seed_of_large_members(&g, fam, o.max_card());
                let solved = solve_exclusion(&o, fam, &seed).unwrap();
                assert_eq!(solved, direct_maximal_table(&g, fam), "{g} {fam}");
            }
        }
    }

    #[test]
    fn inflated_seed_is_rejected() {
        let g = cat(&[5, 2, 5]);
        let o = DeckOracle::hidden(g.clone());
        let fam = batons(1);
        let mut seed = seed_of_large_members(&g, fam, o.max_card());
        assert!(!seed.is_empty(), "test wants genuinely large members");
        // An oversized phantom member forces some smaller count negative.
        seed.add(FamilyKey::Pair(5, 5), 3);
        match solve_exclusion(&o, fam, &seed) {
            Err(RecoveryError::InconsistentSeed(_)) => {}
            other => panic!("expected InconsistentSeed, got {other:?}"),
        }
    }

    #[test]
    fn solver_requires_matching_seed_kind() {
        let g = cat(&[3, 2, 3]);
        let o = DeckOracle::hidden(g);
        let seed = MaximalFamilyTable::new(batons(2));
        match solve_exclusion(&o, batons(1), &seed) {
            Err(RecoveryError::IllegalFamily(_)) => {}
            other => panic!("expected IllegalFamily, got {other:?}"),
        }
    }

    fn direct_baton_tables(g: &Caterpillar) -> BTreeMap<usize, MaximalFamilyTable> {
        (1..g.r())
            .map(|j| (j, direct_maximal_table(g, batons(j))))
            .collect()
    }

    fn direct_triton_tables(g: &Caterpillar) -> BTreeMap<(usize, usize), MaximalFamilyTable> {
        let r = g.r();
        let mut out = BTreeMap::new();
        for j in 1..r {
            for jp in j..r {
                if j + jp <= r.saturating_sub(1) {
                    out.insert((j, jp), direct_maximal_table(g, tritons(j, jp)));
                }
            }
        }
        out
    }

    #[test]
    fn level_pairs_examples() {
        let g = cat(&[2, 3, 4, 3, 2]);
        let lp = level_pairs(&direct_baton_tables(&g), g.spine()).unwrap();
        assert_eq!(lp.pairs, vec![(2, 2), (3, 3)]);
        assert_eq!(lp.middle, vec![4]);

        let g = cat(&[2, 3, 3, 2, 3, 2, 2, 3]);
        let lp = level_pairs(&direct_baton_tables(&g), g.spine()).unwrap();
        assert_eq!(lp.pairs, vec![(2, 3), (2, 3), (2, 3)]);
        assert_eq!(lp.middle, vec![2, 3]);

        let g = cat(&[6, 2, 6]);
        let lp = level_pairs(&direct_baton_tables(&g), g.spine()).unwrap();
        assert_eq!(lp.pairs, vec![(6, 6)]);
        assert_eq!(lp.middle, vec![2]);
    }

    #[test]
    fn level_pairs_match_direct_reading_exhaustively() {
        for n in 4..=12 {
            for g in enumerate_caterpillars(n) {
                let r = g.r();
                if r < 2 {
                    continue;
                }
                let d = g.spine();
                let lp = level_pairs(&direct_baton_tables(&g), d).unwrap();
                let q = (r - 1) / 2;
                for k in 1..=q {
                    let (a, b) = (d[k - 1], d[r - k]);
                    assert_eq!(lp.pairs[k - 1], (a.min(b), a.max(b)), "{g} level {k}");
                }
                let mut mid: Vec<usize> = d[q..r - q].to_vec();
                mid.sort_unstable();
                assert_eq!(lp.middle, mid, "{g} middle");
            }
        }
    }

    #[test]
    fn level_pairs_reject_corrupted_tables() {
        let g = cat(&[2, 3, 4, 3, 2]);
        let mut tables = direct_baton_tables(&g);
        let t = tables.get_mut(&1).unwrap();
        // Swap one window's keys for a wrong pair.
        let mut bad = MaximalFamilyTable::new(batons(1));
        for (&key, &mult) in t.entries() {
            bad.add(key, mult);
        }
        bad.add(FamilyKey::Pair(4, 4), 1);
        // Keep the window count plausible by removing an existing entry.
        let mut rebuilt = MaximalFamilyTable::new(batons(1));
        let mut dropped = false;
        for (&key, &mult) in bad.entries() {
            let m = if !dropped && key == FamilyKey::Pair(2, 3) {
                dropped = true;
                mult - 1
            } else {
                mult
            };
            rebuilt.add(key, m);
        }
        tables.insert(1, rebuilt);
        assert!(level_pairs(&tables, g.spine()).is_err());
    }

    #[test]
    fn ordered_pair_sets_examples() {
        let g = cat(&[2, 3, 4, 4, 3, 2]);
        let sets = ordered_pair_sets(
            &direct_baton_tables(&g),
            &direct_triton_tables(&g),
            g.spine(),
            1,
            2,
        )
        .unwrap();
        assert_eq!(sets, vec![[(2, 3), (2, 3)]]);

        let g = cat(&[2, 3, 3, 2, 3, 2, 2, 3]);
        let sets = ordered_pair_sets(
            &direct_baton_tables(&g),
            &direct_triton_tables(&g),
            g.spine(),
            2,
            3,
        )
        .unwrap();
        assert_eq!(sets, vec![[(2, 3), (3, 2)]]);

        let g = cat(&[6, 2, 6]);
        let sets = ordered_pair_sets(
            &direct_baton_tables(&g),
            &direct_triton_tables(&g),
            g.spine(),
            1,
            1,
        )
        .unwrap();
        assert!(sets.is_empty());
    }

    #[test]
    fn ordered_pair_sets_match_direct_reading_exhaustively() {
        for n in 5..=12 {
            for g in enumerate_caterpillars(n) {
                let r = g.r();
                if r < 3 {
                    continue;
                }
                let d = g.spine();
                let q = (r - 1) / 2;
                let bt = direct_baton_tables(&g);
                let tt = direct_triton_tables(&g);
                for s in 1..q {
                    let sets = ordered_pair_sets(&bt, &tt, d, s, q).unwrap();
                    assert_eq!(sets.len(), q - s, "{g} s={s}");
                    for (idx, set) in sets.iter().enumerate() {
                        let k = idx + 1;
                        let expect = normalize_set(
                            (d[k - 1], d[k + s - 1]),
                            (d[r - k], d[r - k - s]),
                        );
                        assert_eq!(*set, expect, "{g} s={s} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn ordered_pair_sets_reject_corrupted_tables() {
        let g = cat(&[2, 3, 3, 2, 3, 2, 2, 3]);
        let bt = direct_baton_tables(&g);
        let mut tt = direct_triton_tables(&g);
        let t = tt.get_mut(&(1, 2)).unwrap();
        let mut rebuilt = MaximalFamilyTable::new(tritons(1, 2));
        let mut dropped = false;
        for (&key, &mult) in t.entries() {
            let m = if !dropped && key == FamilyKey::Triple(2, 3, 2) {
                dropped = true;
                mult - 1
            } else {
                mult
            };
            rebuilt.add(key, m);
        }
        tt.insert((1, 2), rebuilt);
        assert!(ordered_pair_sets(&bt, &tt, g.spine(), 2, 3).is_err());
    }

    #[test]
    fn tsv_dump_is_stable() {
        let t = direct_maximal_table(&cat(&[4, 3, 2, 3]), batons(1));
        assert_eq!(t.to_tsv(), "1\t2\t3\t2\n1\t3\t4\t1\n");
        let t = direct_maximal_table(&cat(&[4, 3, 2, 3]), tritons(1, 2));
        assert_eq!(t.to_tsv(), "1,2\t3\t2\t4\t1\n1,2\t4\t3\t3\t1\n");
    }

    #[test]
    fn family_normalization_and_validation() {
        assert_eq!(tritons(3, 1), tritons(1, 3));
        assert!(FamilyKind::batons(0).is_err());
        assert!(FamilyKind::tritons(0, 2).is_err());
        assert_eq!(batons(2).to_string(), "batons:2");
        assert_eq!(tritons(2, 1).to_string(), "tritons:1,2");
    }
}
