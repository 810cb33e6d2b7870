//! Separated, spanning and covering numbers of finite pseudo-metric families, and the
//! microstate counting engines built on top of them.
//!
//! Conventions: a set is `ε`-separated when distinct members are at distance `> ε`, a
//! set is `ε`-spanning when every element is at distance `< ε` from it, and a cover
//! uses sets of diameter `< ε`. Ties at exactly `ε` are neither separated nor spanned.

mod bitset;
pub mod count;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use bitset::BitSet;

pub use count::{
    count_microstates, transfer_matrix_count, CountError, CountLimits, DfsCounter, EngineKind,
};

/// Families above this size only get greedy bounds.
pub const EXACT_FAMILY_LIMIT: usize = 4096;

/// Default search-node budget for exact packing engines.
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PackingError {
    #[error("family has {0} elements, above the exact-engine limit of {EXACT_FAMILY_LIMIT}")]
    TooLarge(usize),
    #[error("exact search exceeded its node budget of {0}")]
    BudgetExceeded(u64),
}

/// A finite family with a pairwise pseudo-metric.
pub trait MetricFamily {
    fn len(&self) -> usize;
    fn distance(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Explicit distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    /// Symmetry, zero diagonal, nonnegativity and the triangle inequality.
    pub fn is_pseudo_metric(&self) -> bool {
        let n = self.rows.len();
        if self.rows.iter().any(|r| r.len() != n) {
            return false;
        }
        for i in 0..n {
            if self.rows[i][i] != 0.0 {
                return false;
            }
            for j in 0..n {
                let d = self.rows[i][j];
                if d < 0.0 || crate::math::abs(d - self.rows[j][i]) > 1e-12 {
                    return false;
                }
                for k in 0..n {
                    if d > self.rows[i][k] + self.rows[k][j] + 1e-12 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl MetricFamily for DistanceMatrix {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }
}

/// Labelings under normalized Hamming distance (`ρ^M` on a uniform-weight model).
#[derive(Debug, Clone, PartialEq)]
pub struct HammingFamily {
    members: Vec<Vec<crate::Symbol>>,
}

impl HammingFamily {
    pub fn new(members: Vec<Vec<crate::Symbol>>) -> Self {
        Self { members }
    }

    pub fn members(&self) -> &[Vec<crate::Symbol>] {
        &self.members
    }
}

impl MetricFamily for HammingFamily {
    fn len(&self) -> usize {
        self.members.len()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        let a = &self.members[i];
        crate::microstate::hamming(a, &self.members[j]) as f64 / a.len().max(1) as f64
    }
}

/// Exact value or certified bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CountValue {
    Exact { value: u128 },
    Bounds { lower: u128, upper: u128 },
}

impl CountValue {
    pub fn lower(&self) -> u128 {
        match *self {
            CountValue::Exact { value } => value,
            CountValue::Bounds { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> u128 {
        match *self {
            CountValue::Exact { value } => value,
            CountValue::Bounds { upper, .. } => upper,
        }
    }

    pub fn exact(&self) -> Option<u128> {
        match *self {
            CountValue::Exact { value } => Some(value),
            CountValue::Bounds { .. } => None,
        }
    }
}

/// An independent check run alongside a count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub oracle: String,
    pub value: u128,
    pub agrees: bool,
}

/// A count with the engine that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountResult {
    pub value: CountValue,
    pub engine: String,
    pub oracle: Option<OracleCheck>,
}

/// Graph on family indices with edge `i ~ j` iff `pred(d(i, j))`, `i ≠ j`.
fn threshold_graph<F: MetricFamily + ?Sized>(family: &F, pred: impl Fn(f64) -> bool) -> Vec<BitSet> {
    let n = family.len();
    let mut rows = vec![BitSet::new(n); n];
    for i in 0..n {
        for j in i + 1..n {
            if pred(family.distance(i, j)) {
                rows[i].insert(j);
                rows[j].insert(i);
            }
        }
    }
    rows
}

fn guard<F: MetricFamily + ?Sized>(family: &F) -> Result<(), PackingError> {
    if family.len() > EXACT_FAMILY_LIMIT {
        Err(PackingError::TooLarge(family.len()))
    } else {
        Ok(())
    }
}

/// Maximum size of an `ε`-separated subset (branch and bound over cliques of the
/// "separated" graph with a greedy-colouring bound).
pub fn sep_exact<F: MetricFamily + ?Sized>(family: &F, eps: f64, budget: u64) -> Result<usize, PackingError> {
    guard(family)?;
    if family.is_empty() {
        return Ok(0);
    }
    let adj = threshold_graph(family, |d| d > eps);
    let mut search = CliqueSearch {
        adj: &adj,
        best: greedy_sep_lower(family, eps),
        nodes: 0,
        budget,
    };
    let all = BitSet::full(family.len());
    search.expand(0, all)?;
    Ok(search.best)
}

struct CliqueSearch<'a> {
    adj: &'a [BitSet],
    best: usize,
    nodes: u64,
    budget: u64,
}

impl CliqueSearch<'_> {
    fn expand(&mut self, size: usize, candidates: BitSet) -> Result<(), PackingError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(PackingError::BudgetExceeded(self.budget));
        }
        if candidates.is_empty() {
            self.best = self.best.max(size);
            return Ok(());
        }
        // greedy colouring gives an upper bound on the clique inside `candidates`
        let (order, colours) = self.colour(&candidates);
        let mut cand = candidates;
        for idx in (0..order.len()).rev() {
            if size + colours[idx] <= self.best {
                return Ok(());
            }
            let v = order[idx];
            let next = cand.intersection(&self.adj[v]);
            self.expand(size + 1, next)?;
            cand.remove(v);
        }
        Ok(())
    }

    fn colour(&self, candidates: &BitSet) -> (Vec<usize>, Vec<usize>) {
        let mut uncoloured = candidates.clone();
        let mut order = Vec::with_capacity(candidates.count());
        let mut colours = Vec::with_capacity(candidates.count());
        let mut colour = 0;
        while !uncoloured.is_empty() {
            colour += 1;
            let mut avail = uncoloured.clone();
            while let Some(v) = avail.first() {
                avail.remove(v);
                avail.difference_with(&self.adj[v]);
                uncoloured.remove(v);
                order.push(v);
                colours.push(colour);
            }
        }
        (order, colours)
    }
}

/// Minimum size of an `ε`-spanning subset (minimum dominating set of the `< ε` graph).
pub fn span_exact<F: MetricFamily + ?Sized>(family: &F, eps: f64, budget: u64) -> Result<usize, PackingError> {
    guard(family)?;
    let n = family.len();
    if n == 0 {
        return Ok(0);
    }
    let mut closed = threshold_graph(family, |d| d < eps);
    for (i, row) in closed.iter_mut().enumerate() {
        row.insert(i);
    }
    let mut search = DominationSearch {
        closed: &closed,
        best: greedy_span_upper(&closed),
        nodes: 0,
        budget,
    };
    search.expand(0, BitSet::full(n))?;
    Ok(search.best)
}

fn greedy_span_upper(closed: &[BitSet]) -> usize {
    let mut undominated = BitSet::full(closed.len());
    let mut used = 0;
    while !undominated.is_empty() {
        let best = (0..closed.len())
            .max_by_key(|&u| (closed[u].intersection(&undominated).count(), usize::MAX - u))
            .unwrap();
        undominated.difference_with(&closed[best]);
        used += 1;
    }
    used
}

struct DominationSearch<'a> {
    closed: &'a [BitSet],
    best: usize,
    nodes: u64,
    budget: u64,
}

impl DominationSearch<'_> {
    fn expand(&mut self, used: usize, undominated: BitSet) -> Result<(), PackingError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(PackingError::BudgetExceeded(self.budget));
        }
        let left = undominated.count();
        if left == 0 {
            self.best = self.best.min(used);
            return Ok(());
        }
        let reach = self
            .closed
            .iter()
            .map(|c| c.intersection(&undominated).count())
            .max()
            .unwrap_or(1)
            .max(1);
        if used + left.div_ceil(reach) >= self.best {
            return Ok(());
        }
        // branch on the undominated element with the fewest dominators
        let v = undominated
            .iter()
            .min_by_key(|&v| self.closed[v].count())
            .unwrap();
        let mut options: Vec<usize> = self.closed[v].iter().collect();
        options.sort_by_key(|&u| core::cmp::Reverse(self.closed[u].intersection(&undominated).count()));
        for u in options {
            let mut next = undominated.clone();
            next.difference_with(&self.closed[u]);
            self.expand(used + 1, next)?;
        }
        Ok(())
    }
}

/// Minimum number of sets of diameter `< ε` covering the family (minimum clique
/// partition of the `< ε` graph, i.e. the chromatic number of its complement).
pub fn cov_exact<F: MetricFamily + ?Sized>(family: &F, eps: f64, budget: u64) -> Result<usize, PackingError> {
    guard(family)?;
    let n = family.len();
    if n == 0 {
        return Ok(0);
    }
    // conflict: cannot share a cover set
    let conflict = threshold_graph(family, |d| d >= eps);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (core::cmp::Reverse(conflict[v].count()), v));
    let mut search = ColouringSearch {
        conflict: &conflict,
        order,
        colour: vec![usize::MAX; n],
        best: greedy_cov_upper(family, eps),
        nodes: 0,
        budget,
    };
    search.expand(0, 0)?;
    Ok(search.best)
}

struct ColouringSearch<'a> {
    conflict: &'a [BitSet],
    order: Vec<usize>,
    colour: Vec<usize>,
    best: usize,
    nodes: u64,
    budget: u64,
}

impl ColouringSearch<'_> {
    fn expand(&mut self, depth: usize, used: usize) -> Result<(), PackingError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(PackingError::BudgetExceeded(self.budget));
        }
        if used >= self.best {
            return Ok(());
        }
        if depth == self.order.len() {
            self.best = used;
            return Ok(());
        }
        let v = self.order[depth];
        for c in 0..=used {
            if c + 1 >= self.best && c == used {
                break;
            }
            let clash = self.conflict[v].iter().any(|u| self.colour[u] == c);
            if clash {
                continue;
            }
            self.colour[v] = c;
            self.expand(depth + 1, used.max(c + 1))?;
            self.colour[v] = usize::MAX;
        }
        Ok(())
    }
}

/// Size of the maximal `ε`-separated set built greedily in index order.
pub fn greedy_sep_lower<F: MetricFamily + ?Sized>(family: &F, eps: f64) -> usize {
    greedy_separated_set(family, eps).len()
}

/// The greedy maximal `ε`-separated set itself.
pub fn greedy_separated_set<F: MetricFamily + ?Sized>(family: &F, eps: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..family.len() {
        if chosen.iter().all(|&j| family.distance(i, j) > eps) {
            chosen.push(i);
        }
    }
    chosen
}

/// Number of sets in a greedy cover by sets of diameter `< ε`.
pub fn greedy_cov_upper<F: MetricFamily + ?Sized>(family: &F, eps: f64) -> usize {
    let n = family.len();
    let mut covered = vec![false; n];
    let mut sets = 0;
    for i in 0..n {
        if covered[i] {
            continue;
        }
        sets += 1;
        covered[i] = true;
        let mut members = vec![i];
        for j in i + 1..n {
            if !covered[j] && members.iter().all(|&m| family.distance(j, m) < eps) {
                covered[j] = true;
                members.push(j);
            }
        }
    }
    sets
}

/// `sep_ε` of a family, exact when the family is small enough and the search finishes
/// within `budget`, a greedy lower bound (upper bound: family size) otherwise.
pub fn sep_bounds<F: MetricFamily + ?Sized>(family: &F, eps: f64, budget: u64) -> CountResult {
    match sep_exact(family, eps, budget) {
        Ok(v) => CountResult {
            value: CountValue::Exact { value: v as u128 },
            engine: "sep-branch-and-bound".into(),
            oracle: None,
        },
        Err(_) => CountResult {
            value: CountValue::Bounds {
                lower: greedy_sep_lower(family, eps) as u128,
                upper: family.len() as u128,
            },
            engine: "sep-greedy".into(),
            oracle: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<crate::Symbol> {
        s.bytes().map(|b| (b - b'0') as crate::Symbol).collect()
    }

    /// Brute force over all subsets.
    fn oracle<F: MetricFamily>(f: &F, eps: f64) -> (usize, usize, usize) {
        let n = f.len();
        let mut sep = 0;
        let mut span = n;
        let mut cliques = Vec::new();
        for mask in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let separated = members
                .iter()
                .all(|&i| members.iter().all(|&j| i == j || f.distance(i, j) > eps));
            if separated {
                sep = sep.max(members.len());
            }
            let spanning = (0..n).all(|x| members.iter().any(|&y| f.distance(x, y) < eps));
            if spanning {
                span = span.min(members.len());
            }
            if members.iter().all(|&i| members.iter().all(|&j| f.distance(i, j) < eps)) {
                cliques.push(mask);
            }
        }
        // cover: fewest small-diameter sets whose union is everything
        let full = (1u32 << n) - 1;
        let mut best = vec![usize::MAX; 1 << n];
        best[0] = 0;
        for mask in 0..=full as usize {
            if best[mask] == usize::MAX {
                continue;
            }
            for &c in &cliques {
                let next = mask | c as usize;
                best[next] = best[next].min(best[mask] + 1);
            }
        }
        (sep, span, best[full as usize])
    }

    #[test]
    fn single_element() {
        let f = HammingFamily::new(vec![bits("01")]);
        assert_eq!(sep_exact(&f, 0.3, 1000).unwrap(), 1);
        assert_eq!(span_exact(&f, 0.3, 1000).unwrap(), 1);
        assert_eq!(cov_exact(&f, 0.3, 1000).unwrap(), 1);
    }

    #[test]
    fn three_labelings() {
        let f = HammingFamily::new(vec![bits("00"), bits("01"), bits("11")]);
        let (sep, _, _) = oracle(&f, 0.6);
        assert_eq!(sep, 2);
        assert_eq!(sep_exact(&f, 0.6, 1000).unwrap(), 2);
    }

    #[test]
    fn below_resolution_everything_is_separated() {
        let f = HammingFamily::new(vec![bits("000"), bits("001"), bits("011"), bits("111"), bits("000")]);
        // four distinct labelings; the duplicate is at distance 0
        assert_eq!(sep_exact(&f, 0.1, 1000).unwrap(), 4);
    }

    #[test]
    fn two_far_points() {
        let f = DistanceMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(span_exact(&f, 0.5, 1000).unwrap(), 2);
        assert_eq!(cov_exact(&f, 0.5, 1000).unwrap(), 2);
    }

    #[test]
    fn tie_at_epsilon_breaks_span_le_sep() {
        // with strict conventions a tie is neither separated nor spanned
        let f = DistanceMatrix::new(vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
        assert_eq!(sep_exact(&f, 0.5, 1000).unwrap(), 1);
        assert_eq!(span_exact(&f, 0.5, 1000).unwrap(), 2);
    }

    #[test]
    fn exact_engines_match_brute_force() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..60 {
            let n = 1 + (next() % 9) as usize;
            let len = 1 + (next() % 6) as usize;
            let members: Vec<Vec<crate::Symbol>> = (0..n)
                .map(|_| (0..len).map(|_| (next() % 2) as crate::Symbol).collect())
                .collect();
            let f = HammingFamily::new(members);
            let eps = (next() % 7) as f64 / 6.0 + 0.01;
            let (sep, span, cov) = oracle(&f, eps);
            assert_eq!(sep_exact(&f, eps, 1 << 20).unwrap(), sep);
            assert_eq!(span_exact(&f, eps, 1 << 20).unwrap(), span);
            assert_eq!(cov_exact(&f, eps, 1 << 20).unwrap(), cov);
            assert!(greedy_sep_lower(&f, eps) <= sep);
            assert!(greedy_cov_upper(&f, eps) >= cov);
        }
    }

    #[test]
    fn oversized_family_is_rejected() {
        let f = HammingFamily::new(vec![vec![0]; EXACT_FAMILY_LIMIT + 1]);
        assert_eq!(sep_exact(&f, 0.5, 10), Err(PackingError::TooLarge(EXACT_FAMILY_LIMIT + 1)));
        let r = sep_bounds(&f, 0.5, 10);
        assert_eq!(r.value, CountValue::Bounds { lower: 1, upper: EXACT_FAMILY_LIMIT as u128 + 1 });
    }

    #[test]
    fn distance_matrix_metric_check() {
        assert!(DistanceMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_pseudo_metric());
        let bad = DistanceMatrix::new(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ]);
        assert!(!bad.is_pseudo_metric());
    }
}
