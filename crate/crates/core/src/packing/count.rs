//! Exact microstate counting.
//!
//! Three engines, tried in this order:
//! - closed form for full shifts without marginal constraints (`|A|ⁿ`);
//! - a block dynamic program for cyclic one-dimensional models, tracking the defect
//!   count and the pattern counts of the constraint window;
//! - depth-first search over labelings in a fixed traversal order, pruning as soon as
//!   a completed point pushes the defect count or the marginal counts out of reach.
//!
//! For strict counts on cyclic models of nearest-neighbour systems the transfer-matrix
//! trace is computed as an independent check and embedded in the result.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use super::{CountResult, CountValue, OracleCheck};
use crate::microstate::{CompiledProblem, Engine, MapSpaceSpec, MicrostateError};
use crate::model::{LocalGSpace, ModelKind};
use crate::shift::{window_offsets, ShiftError, ShiftSystem};
use crate::Symbol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountError {
    #[error(transparent)]
    Microstate(#[from] MicrostateError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error("count does not fit in 128 bits")]
    Overflow,
    #[error("search exceeded its node budget of {0}")]
    BudgetExceeded(u64),
    #[error("dynamic program exceeded {0} states")]
    TooManyStates(usize),
    #[error("engine not applicable: {0}")]
    NotApplicable(&'static str),
}

/// Resource limits for the counting engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountLimits {
    pub max_nodes: u64,
    pub max_dp_states: usize,
}

impl Default for CountLimits {
    fn default() -> Self {
        Self {
            max_nodes: 2_000_000_000,
            max_dp_states: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EngineKind {
    ClosedForm,
    CyclicDp,
    Dfs,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::ClosedForm => "closed-form",
            EngineKind::CyclicDp => "cyclic-dp",
            EngineKind::Dfs => "dfs",
        }
    }
}

/// `trace(Tⁿ)`: the number of period-`n` points of a nearest-neighbour system.
pub fn transfer_matrix_count(system: &ShiftSystem, n: usize) -> Result<u128, CountError> {
    let t = system.transfer_matrix()?;
    let k = t.len();
    let base: Vec<Vec<u128>> = t.iter().map(|r| r.iter().map(|&x| x as u128).collect()).collect();
    let mul = |a: &[Vec<u128>], b: &[Vec<u128>]| -> Result<Vec<Vec<u128>>, CountError> {
        let mut c = vec![vec![0u128; k]; k];
        for i in 0..k {
            for l in 0..k {
                if a[i][l] == 0 {
                    continue;
                }
                for j in 0..k {
                    let term = a[i][l].checked_mul(b[l][j]).ok_or(CountError::Overflow)?;
                    c[i][j] = c[i][j].checked_add(term).ok_or(CountError::Overflow)?;
                }
            }
        }
        Ok(c)
    };
    let mut result: Vec<Vec<u128>> = (0..k)
        .map(|i| (0..k).map(|j| (i == j) as u128).collect())
        .collect();
    let mut power = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = mul(&result, &power)?;
        }
        e >>= 1;
        if e > 0 {
            power = mul(&power, &power)?;
        }
    }
    (0..k).try_fold(0u128, |acc, i| acc.checked_add(result[i][i]).ok_or(CountError::Overflow))
}

/// Counts microstates in `Map(M, X, ρ: U, δ)` (or the constrained variants), picking
/// the first applicable engine.
pub fn count_microstates(
    model: &LocalGSpace,
    spec: &MapSpaceSpec,
    system: &ShiftSystem,
    limits: CountLimits,
) -> Result<CountResult, CountError> {
    let problem = CompiledProblem::new(model, spec, system)?;
    let (value, engine) = if problem.allowed_defects.is_none() {
        (0, EngineKind::ClosedForm)
    } else if system.is_full_shift() && !problem.has_constraint() {
        let k = problem.alphabet_size as u128;
        let v = (0..problem.n).try_fold(1u128, |acc, _| acc.checked_mul(k).ok_or(CountError::Overflow))?;
        (v, EngineKind::ClosedForm)
    } else {
        match CyclicDp::new(model, spec, system, &problem, limits) {
            Ok(dp) => match dp.count() {
                Ok(v) => (v, EngineKind::CyclicDp),
                Err(CountError::TooManyStates(_)) => (DfsCounter::new(model, &problem, limits).count()?, EngineKind::Dfs),
                Err(e) => return Err(e),
            },
            Err(CountError::NotApplicable(_)) => (DfsCounter::new(model, &problem, limits).count()?, EngineKind::Dfs),
            Err(e) => return Err(e),
        }
    };
    let oracle = trace_oracle(model, spec, system, &problem)
        .map(|t| OracleCheck {
            oracle: "transfer-matrix-trace".into(),
            value: t,
            agrees: t == value,
        });
    Ok(CountResult {
        value: CountValue::Exact { value },
        engine: engine.name().into(),
        oracle,
    })
}

fn trace_oracle(
    model: &LocalGSpace,
    spec: &MapSpaceSpec,
    system: &ShiftSystem,
    problem: &CompiledProblem,
) -> Option<u128> {
    let cyclic = matches!(model.kind(), ModelKind::Cyclic { .. } | ModelKind::Circle { .. });
    if !cyclic || spec.engine != Engine::Strict || problem.has_constraint() || problem.allowed_defects.is_none() {
        return None;
    }
    match system.memory_span() {
        Some(s) if s <= 2 => transfer_matrix_count(system, model.len()).ok(),
        _ => None,
    }
}

fn offset_of(g: &crate::group::GroupElement) -> Option<i64> {
    window_offsets(core::slice::from_ref(g)).map(|v| v[0])
}

/// Block dynamic program for cyclic one-dimensional models.
///
/// Every point `p` reads the labels at `p - o` for the offsets `o` of the forbidden
/// patterns and of the constraint window. With `A ≤ o ≤ B` these form a block of
/// `S = B - A + 1` consecutive labels ending at `p - A`, so walking the cycle block by
/// block visits each point exactly once. The state is the first and last `S - 1`
/// labels, the defect count and the pattern counts.
struct CyclicDp<'a> {
    problem: &'a CompiledProblem,
    span: usize,
    /// Per block (`k^S` of them): defective flag.
    defective: Vec<bool>,
    /// Per block: constraint slot, when there is a constraint.
    slot: Vec<usize>,
    limits: CountLimits,
}

impl<'a> CyclicDp<'a> {
    fn new(
        model: &LocalGSpace,
        spec: &MapSpaceSpec,
        system: &ShiftSystem,
        problem: &'a CompiledProblem,
        limits: CountLimits,
    ) -> Result<Self, CountError> {
        if !matches!(model.kind(), ModelKind::Cyclic { .. } | ModelKind::Circle { .. }) {
            return Err(CountError::NotApplicable("model is not cyclic"));
        }
        let mut patterns: Vec<Vec<(i64, Symbol)>> = Vec::new();
        for p in system.forbidden() {
            let offs = window_offsets(&p.window).ok_or(CountError::NotApplicable("system is not one-dimensional"))?;
            patterns.push(offs.into_iter().zip(p.symbols.iter().copied()).collect());
        }
        let window: Vec<i64> = match &spec.constraint {
            Some(c) => c
                .window
                .iter()
                .map(offset_of)
                .collect::<Option<_>>()
                .ok_or(CountError::NotApplicable("window is not one-dimensional"))?,
            None => Vec::new(),
        };
        let all = patterns.iter().flatten().map(|&(o, _)| o).chain(window.iter().copied());
        let (lo, hi) = all.fold((0i64, 0i64), |(lo, hi), o| (lo.min(o), hi.max(o)));
        let span = (hi - lo + 1) as usize;
        let k = problem.alphabet_size;
        if span > problem.n || span > 24 {
            return Err(CountError::NotApplicable("window span exceeds the cycle"));
        }
        let blocks = k
            .checked_pow(span as u32)
            .filter(|&b| b <= 1 << 16)
            .ok_or(CountError::NotApplicable("too many blocks"))?;
        let mut defective = vec![false; blocks];
        let mut slot = vec![0usize; blocks];
        let mut symbols = vec![0 as Symbol; span];
        for b in 0..blocks {
            let mut x = b;
            for s in symbols.iter_mut().rev() {
                *s = (x % k) as Symbol;
                x /= k;
            }
            // offset o sits at block index hi - o
            let at = |o: i64| symbols[(hi - o) as usize];
            defective[b] = patterns.iter().any(|cells| cells.iter().all(|&(o, s)| at(o) == s));
            slot[b] = window.iter().fold(0, |acc, &o| acc * k + at(o) as usize);
        }
        Ok(Self {
            problem,
            span,
            defective,
            slot,
            limits,
        })
    }

    fn count(&self) -> Result<u128, CountError> {
        let p = self.problem;
        let Some(allowed) = p.allowed_defects else { return Ok(0) };
        let k = p.alphabet_size;
        let n = p.n;
        let edge = self.span - 1;
        let edge_size = k.pow(edge as u32);
        let constrained = p.has_constraint();
        type Key = (u32, u32, u32, Vec<u64>);
        let mut states: BTreeMap<Key, u128> = BTreeMap::new();
        for head in 0..edge_size as u32 {
            states.insert((head, head, 0, vec![0; p.slots]), 1);
        }
        let mut processed = 0usize;
        for _ in edge..n {
            processed += 1;
            let remaining = n - processed;
            let mut next: BTreeMap<Key, u128> = BTreeMap::new();
            for ((head, tail, defects, counts), ways) in &states {
                for s in 0..k {
                    let block = *tail as usize * k + s;
                    let d = *defects + self.defective[block] as u32;
                    if d as usize > allowed {
                        continue;
                    }
                    let mut c = counts.clone();
                    if constrained {
                        c[self.slot[block]] += 1;
                        if !p.counts_feasible(&c, remaining) {
                            continue;
                        }
                    }
                    let new_tail = if edge == 0 { 0 } else { (block % edge_size) as u32 };
                    let entry = next.entry((*head, new_tail, d, c)).or_insert(0);
                    *entry = entry.checked_add(*ways).ok_or(CountError::Overflow)?;
                }
            }
            if next.len() > self.limits.max_dp_states {
                return Err(CountError::TooManyStates(self.limits.max_dp_states));
            }
            states = next;
        }
        // close the cycle: blocks ending at positions 0..S-2 wrap around
        let mut total = 0u128;
        for ((head, tail, defects, counts), ways) in states {
            let tail_digits = digits(tail as usize, edge, k);
            let head_digits = digits(head as usize, edge, k);
            let mut d = defects as usize;
            let mut c = counts;
            for e in 0..edge {
                let block = tail_digits[e..]
                    .iter()
                    .chain(&head_digits[..=e])
                    .fold(0usize, |acc, &x| acc * k + x);
                d += self.defective[block] as usize;
                if constrained {
                    c[self.slot[block]] += 1;
                }
            }
            if d <= allowed && p.counts_satisfied(&c) {
                total = total.checked_add(ways).ok_or(CountError::Overflow)?;
            }
        }
        Ok(total)
    }
}

fn digits(mut x: usize, len: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for d in out.iter_mut().rev() {
        *d = x % k;
        x /= k;
    }
    out
}

/// Depth-first enumeration of good microstates.
///
/// Points are labeled in the model's traversal order. Each point's defect and pattern
/// are scored at the depth where its last dependency gets a label, so the search can
/// prune on partial labelings. The search space splits by label prefix for parallel
/// callers: [`prefixes`](Self::prefixes) lists the surviving prefixes and
/// [`count_from`](Self::count_from) finishes one of them.
pub struct DfsCounter<'a> {
    problem: &'a CompiledProblem,
    order: Vec<usize>,
    completes_at: Vec<Vec<usize>>,
    upfront: Vec<usize>,
    limits: CountLimits,
}

struct DfsState {
    labels: Vec<Symbol>,
    defects: usize,
    counts: Vec<u64>,
    scored: usize,
    nodes: u64,
}

impl<'a> DfsCounter<'a> {
    pub fn new(model: &LocalGSpace, problem: &'a CompiledProblem, limits: CountLimits) -> Self {
        let order = model.traversal_order();
        let mut depth_of = vec![0usize; problem.n];
        for (d, &p) in order.iter().enumerate() {
            depth_of[p] = d;
        }
        let mut completes_at = vec![Vec::new(); problem.n];
        let mut upfront = Vec::new();
        for (i, check) in problem.checks.iter().enumerate() {
            match check.dependencies().map(|q| depth_of[q as usize]).max() {
                Some(d) => completes_at[d].push(i),
                None => upfront.push(i),
            }
        }
        Self {
            problem,
            order,
            completes_at,
            upfront,
            limits,
        }
    }

    fn fresh_state(&self) -> Option<DfsState> {
        let p = self.problem;
        let allowed = p.allowed_defects?;
        let mut st = DfsState {
            labels: vec![0; p.n],
            defects: 0,
            counts: vec![0; p.slots],
            scored: 0,
            nodes: 0,
        };
        // checks with no dependencies score the same for every labeling
        for &i in &self.upfront {
            self.score(&mut st, i);
        }
        (st.defects <= allowed && self.feasible(&st)).then_some(st)
    }

    fn score(&self, st: &mut DfsState, i: usize) {
        let p = self.problem;
        let check = &p.checks[i];
        if check.is_defective(&st.labels) {
            st.defects += 1;
        }
        if p.has_constraint() {
            st.counts[check.pattern_slot(&st.labels, p.alphabet_size, p.slots - 1)] += 1;
        }
        st.scored += 1;
    }

    fn unscore(&self, st: &mut DfsState, i: usize) {
        let p = self.problem;
        let check = &p.checks[i];
        if check.is_defective(&st.labels) {
            st.defects -= 1;
        }
        if p.has_constraint() {
            st.counts[check.pattern_slot(&st.labels, p.alphabet_size, p.slots - 1)] -= 1;
        }
        st.scored -= 1;
    }

    fn feasible(&self, st: &DfsState) -> bool {
        let p = self.problem;
        !p.has_constraint() || p.counts_feasible(&st.counts, p.n - st.scored)
    }

    /// Assigns `s` at `depth`; returns false (with the assignment undone) when pruned.
    fn push(&self, st: &mut DfsState, depth: usize, s: Symbol) -> bool {
        st.labels[self.order[depth]] = s;
        for &i in &self.completes_at[depth] {
            self.score(st, i);
        }
        let ok = st.defects <= self.problem.allowed_defects.unwrap_or(0) && self.feasible(st);
        if !ok {
            self.pop(st, depth);
        }
        ok
    }

    fn pop(&self, st: &mut DfsState, depth: usize) {
        for &i in self.completes_at[depth].iter().rev() {
            self.unscore(st, i);
        }
    }

    fn accept_leaf(&self, st: &DfsState) -> bool {
        st.defects <= self.problem.allowed_defects.unwrap_or(0) && self.problem.counts_satisfied(&st.counts)
    }

    fn walk(
        &self,
        st: &mut DfsState,
        depth: usize,
        stop_at: usize,
        visit: &mut dyn FnMut(&DfsState) -> bool,
    ) -> Result<bool, CountError> {
        st.nodes += 1;
        if st.nodes > self.limits.max_nodes {
            return Err(CountError::BudgetExceeded(self.limits.max_nodes));
        }
        if depth == stop_at {
            return Ok(visit(st));
        }
        for s in 0..self.problem.alphabet_size as Symbol {
            if self.push(st, depth, s) {
                let go_on = self.walk(st, depth + 1, stop_at, visit)?;
                self.pop(st, depth);
                if !go_on {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Total number of accepted labelings.
    pub fn count(&self) -> Result<u128, CountError> {
        self.count_from(&[])
    }

    /// Number of accepted labelings extending `prefix` (labels in traversal order).
    pub fn count_from(&self, prefix: &[Symbol]) -> Result<u128, CountError> {
        let Some(mut st) = self.fresh_state() else { return Ok(0) };
        for (d, &s) in prefix.iter().enumerate() {
            if !self.push(&mut st, d, s) {
                return Ok(0);
            }
        }
        let mut total = 0u128;
        let mut overflow = false;
        self.walk(&mut st, prefix.len(), self.problem.n, &mut |st| {
            if self.accept_leaf(st) {
                match total.checked_add(1) {
                    Some(t) => total = t,
                    None => overflow = true,
                }
            }
            !overflow
        })?;
        if overflow {
            return Err(CountError::Overflow);
        }
        Ok(total)
    }

    /// Prefixes of length `depth` (in traversal order) that survive pruning.
    pub fn prefixes(&self, depth: usize) -> Result<Vec<Vec<Symbol>>, CountError> {
        let depth = depth.min(self.problem.n);
        let Some(mut st) = self.fresh_state() else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        let order = &self.order;
        self.walk(&mut st, 0, depth, &mut |st| {
            out.push(order[..depth].iter().map(|&p| st.labels[p]).collect());
            true
        })?;
        Ok(out)
    }

    /// Calls `f` with each accepted labeling (indexed by point) until it returns false.
    pub fn for_each_member(&self, f: &mut dyn FnMut(&[Symbol]) -> bool) -> Result<(), CountError> {
        let Some(mut st) = self.fresh_state() else { return Ok(()) };
        self.walk(&mut st, 0, self.problem.n, &mut |st| {
            if self.accept_leaf(st) {
                f(&st.labels)
            } else {
                true
            }
        })?;
        Ok(())
    }

    /// Collects up to `limit` accepted labelings; `None` if there are more.
    pub fn members(&self, limit: usize) -> Result<Option<Vec<Vec<Symbol>>>, CountError> {
        let mut out = Vec::new();
        let mut overflow = false;
        self.for_each_member(&mut |labels| {
            if out.len() == limit {
                overflow = true;
                return false;
            }
            out.push(labels.to_vec());
            true
        })?;
        Ok((!overflow).then_some(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupModel;
    use crate::microstate::{is_member, MarginalConstraint, MembershipMode, Microstate};
    use crate::shift::InvariantMeasure;

    fn binom(n: u128, k: u128) -> u128 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
    }

    /// Lucas numbers: trace(Tⁿ) for the golden mean matrix, by the recurrence.
    fn lucas(n: usize) -> u128 {
        let (mut a, mut b) = (2u128, 1u128);
        for _ in 0..n {
            (a, b) = (b, a + b);
        }
        a
    }

    fn strict(delta: f64) -> MapSpaceSpec {
        MapSpaceSpec::new(GroupModel::integers().ball(1.0), delta, MembershipMode::Strict, Engine::Strict)
    }

    #[test]
    fn transfer_matrix_examples() {
        let gm = ShiftSystem::golden_mean();
        assert_eq!(transfer_matrix_count(&gm, 5).unwrap(), 11);
        assert_eq!(transfer_matrix_count(&gm, 1).unwrap(), 1);
        assert_eq!(transfer_matrix_count(&gm, 16).unwrap(), 2207);
        let full = ShiftSystem::full_shift(GroupModel::integers(), 2).unwrap();
        assert_eq!(transfer_matrix_count(&full, 4).unwrap(), 16);
        let f2 = ShiftSystem::full_shift(GroupModel::FreeGroup { rank: 2 }, 2).unwrap();
        assert!(transfer_matrix_count(&f2, 4).is_err());
    }

    #[test]
    fn count_examples() {
        let zz = GroupModel::integers();
        let full = ShiftSystem::full_shift(zz, 2).unwrap();
        let m4 = LocalGSpace::cyclic_quotient(4).unwrap();
        let r = count_microstates(&m4, &strict(0.01), &full, CountLimits::default()).unwrap();
        assert_eq!(r.value.exact(), Some(16));

        let gm = ShiftSystem::golden_mean();
        let m5 = LocalGSpace::cyclic_quotient(5).unwrap();
        let r = count_microstates(&m5, &strict(0.0), &gm, CountLimits::default()).unwrap();
        assert_eq!(r.value.exact(), Some(11));
        assert!(r.oracle.unwrap().agrees);

        let b = InvariantMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let f = vec![zz.identity()];
        let spec = strict(0.01).with_constraint(MarginalConstraint::tv_ball(f.clone(), &b.marginal(&f).unwrap(), 0.0));
        let r = count_microstates(&m4, &spec, &full, CountLimits::default()).unwrap();
        assert_eq!(r.value.exact(), Some(6));
    }

    #[test]
    fn strict_counts_match_lucas_numbers() {
        let gm = ShiftSystem::golden_mean();
        for n in 1..=20 {
            let m = LocalGSpace::cyclic_quotient(n).unwrap();
            let problem = CompiledProblem::new(&m, &strict(0.0), &gm).unwrap();
            let dfs = DfsCounter::new(&m, &problem, CountLimits::default()).count().unwrap();
            let r = count_microstates(&m, &strict(0.0), &gm, CountLimits::default()).unwrap();
            assert_eq!(dfs, lucas(n), "n = {n}");
            assert_eq!(r.value.exact(), Some(lucas(n)), "n = {n}");
        }
    }

    #[test]
    fn dp_and_dfs_agree_with_constraints() {
        let zz = GroupModel::integers();
        let gm = ShiftSystem::golden_mean();
        let f = vec![GroupElement::Lattice(vec![0]), GroupElement::Lattice(vec![1])];
        let mu = InvariantMeasure::markov(vec![vec![0.6, 0.4], vec![1.0, 0.0]]).unwrap();
        let target = mu.marginal(&f).unwrap();
        for n in [6, 9, 12] {
            let m = LocalGSpace::cyclic_quotient(n).unwrap();
            for (delta, engine) in [(0.0, Engine::Strict), (0.2, Engine::Soft)] {
                for eta in [0.05, 0.2, 0.5] {
                    let spec = MapSpaceSpec::new(zz.ball(1.0), delta, MembershipMode::Strict, engine)
                        .with_constraint(MarginalConstraint::tv_ball(f.clone(), &target, eta));
                    let problem = CompiledProblem::new(&m, &spec, &gm).unwrap();
                    let dp = CyclicDp::new(&m, &spec, &gm, &problem, CountLimits::default()).unwrap().count().unwrap();
                    let dfs = DfsCounter::new(&m, &problem, CountLimits::default()).count().unwrap();
                    let brute = (0..1u32 << n)
                        .filter(|bits| {
                            let omega: Vec<Symbol> = (0..n).map(|i| (bits >> i & 1) as Symbol).collect();
                            is_member(&m, &Microstate::new(omega), &spec, &gm).unwrap()
                        })
                        .count() as u128;
                    assert_eq!(dp, brute, "dp n={n} eta={eta} {engine:?}");
                    assert_eq!(dfs, brute, "dfs n={n} eta={eta} {engine:?}");
                }
            }
        }
    }

    use crate::group::GroupElement;

    #[test]
    fn bernoulli_counts_are_binomial() {
        let zz = GroupModel::integers();
        let full = ShiftSystem::full_shift(zz, 2).unwrap();
        let f = vec![zz.identity()];
        let b = InvariantMeasure::bernoulli(vec![0.25, 0.75]).unwrap();
        let m = LocalGSpace::cyclic_quotient(64).unwrap();
        let spec = strict(0.01).with_constraint(MarginalConstraint::tv_ball(f, &b.marginal(&[zz.identity()]).unwrap(), 0.0));
        let r = count_microstates(&m, &spec, &full, CountLimits::default()).unwrap();
        assert_eq!(r.value.exact(), Some(binom(64, 16)));
        assert_eq!(r.engine, "cyclic-dp");
    }

    #[test]
    fn schreier_counts_use_dfs() {
        let f2 = GroupModel::FreeGroup { rank: 2 };
        let sys = ShiftSystem::new(
            f2,
            crate::shift::Alphabet::numbered(2),
            vec![crate::shift::Pattern::new(
                vec![f2.identity(), GroupElement::parse_word("a").unwrap()],
                vec![1, 1],
            )
            .unwrap()],
        )
        .unwrap();
        let m = LocalGSpace::random_schreier(10, 2, 3).unwrap();
        let spec = MapSpaceSpec::new(f2.ball(1.0), 0.0, MembershipMode::Strict, Engine::Strict);
        let r = count_microstates(&m, &spec, &sys, CountLimits::default()).unwrap();
        assert_eq!(r.engine, "dfs");
        let brute = (0..1u32 << 10)
            .filter(|bits| {
                let omega: Vec<Symbol> = (0..10).map(|i| (bits >> i & 1) as Symbol).collect();
                is_member(&m, &Microstate::new(omega), &spec, &sys).unwrap()
            })
            .count() as u128;
        assert_eq!(r.value.exact(), Some(brute));
    }

    #[test]
    fn prefix_split_sums_to_total() {
        let gm = ShiftSystem::golden_mean();
        let m = LocalGSpace::cyclic_quotient(14).unwrap();
        let problem = CompiledProblem::new(&m, &strict(0.0), &gm).unwrap();
        let dfs = DfsCounter::new(&m, &problem, CountLimits::default());
        let total: u128 = dfs
            .prefixes(4)
            .unwrap()
            .iter()
            .map(|p| dfs.count_from(p).unwrap())
            .sum();
        assert_eq!(total, lucas(14));
        assert_eq!(dfs.members(10_000).unwrap().unwrap().len() as u128, lucas(14));
        assert!(dfs.members(5).unwrap().is_none());
    }

    #[test]
    fn node_budget_is_enforced() {
        let gm = ShiftSystem::golden_mean();
        let m = LocalGSpace::cyclic_quotient(20).unwrap();
        let problem = CompiledProblem::new(&m, &strict(0.0), &gm).unwrap();
        let limits = CountLimits { max_nodes: 100, max_dp_states: 10 };
        assert!(matches!(DfsCounter::new(&m, &problem, limits).count(), Err(CountError::BudgetExceeded(100))));
    }

    #[test]
    fn interval_models_charge_the_boundary() {
        // on an interval, translation by 1 is undefined at one of n points
        let zz = GroupModel::integers();
        let full = ShiftSystem::full_shift(zz, 2).unwrap();
        let m = LocalGSpace::interval(10).unwrap();
        let tight = MapSpaceSpec::new(zz.ball(1.0), 0.05, MembershipMode::Strict, Engine::Strict);
        assert_eq!(count_microstates(&m, &tight, &full, CountLimits::default()).unwrap().value.exact(), Some(0));
        let loose = MapSpaceSpec::new(zz.ball(1.0), 0.1, MembershipMode::Strict, Engine::Strict);
        assert_eq!(count_microstates(&m, &loose, &full, CountLimits::default()).unwrap().value.exact(), Some(1024));
        // the Haar average over {-1,0,1} is 2/30
        let avg = MapSpaceSpec::new(zz.ball(1.0), 0.07, MembershipMode::Averaged, Engine::Strict);
        assert_eq!(count_microstates(&m, &avg, &full, CountLimits::default()).unwrap().value.exact(), Some(1024));
    }
}
