//! Microstates: labelings `ω: M → A` and the maps `φ_ω: M → A^G` they induce through
//! pullback names, `φ_ω(p)(h) = ω(h⁻¹.p)`.
//!
//! Distances between maps use the identity-coordinate observable, so `ρ^M` between two
//! labelings is their normalized weighted Hamming distance. Wherever a translate is
//! undefined the point is charged the full distance 1.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{GroupElement, GroupError, GroupModel, WeightedElementSet};
use crate::math::{self, TOL};
use crate::model::{LocalGSpace, ModelError};
use crate::shift::{pattern_index, MarginalDistribution, ShiftError, ShiftSystem};
use crate::Symbol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MicrostateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error("labeling has {labels} entries but the model has {points} points")]
    LengthMismatch { labels: usize, points: usize },
    #[error("symbol {0} is outside the alphabet")]
    BadSymbol(Symbol),
    #[error("target is not quantizable: {0}")]
    NotQuantizable(&'static str),
    #[error("invalid map-space specification: {0}")]
    InvalidSpec(&'static str),
    #[error("{0} must be nonnegative")]
    Negative(&'static str),
}

/// A labeling of the points of a model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Microstate {
    labels: Vec<Symbol>,
}

impl Microstate {
    pub fn new(labels: Vec<Symbol>) -> Self {
        Self { labels }
    }

    pub fn labels(&self) -> &[Symbol] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<Symbol> {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Applies a symbol renaming.
    pub fn relabel(&self, perm: &[Symbol]) -> Self {
        Self {
            labels: self.labels.iter().map(|&s| perm[s as usize]).collect(),
        }
    }

    fn check(&self, model: &LocalGSpace) -> Result<(), MicrostateError> {
        if self.labels.len() != model.len() {
            return Err(MicrostateError::LengthMismatch {
                labels: self.labels.len(),
                points: model.len(),
            });
        }
        Ok(())
    }
}

/// Pullback tables `p ↦ h⁻¹.p` for the elements of a window.
fn pullback_tables(
    model: &LocalGSpace,
    window: &[GroupElement],
) -> Result<Vec<Vec<Option<u32>>>, MicrostateError> {
    let group = model.group();
    window
        .iter()
        .map(|h| Ok(model.action_table(&group.inverse(h)?)?))
        .collect()
}

/// `ρ^M(g∘φ_ω, φ_ω∘g)` with the identity-coordinate observable: the mass where `g.p`
/// is undefined plus the mass where `(g·φ_ω(p))(e)` and `φ_ω(g.p)(e)` differ.
pub fn equivariance_defect(
    model: &LocalGSpace,
    omega: &Microstate,
    g: &GroupElement,
) -> Result<f64, MicrostateError> {
    omega.check(model)?;
    let group = model.group();
    let forward = model.action_table(g)?;
    // (g·x)(e) = x(g⁻¹), and φ(p)(g⁻¹) = ω((g⁻¹)⁻¹.p)
    let g_inv = group.inverse(g)?;
    let name_table = model.action_table(&group.inverse(&g_inv)?)?;
    let labels = omega.labels();
    let mut bad = 0usize;
    for p in 0..model.len() {
        match (forward[p], name_table[p]) {
            (Some(q), Some(r)) => {
                if labels[r as usize] != labels[q as usize] {
                    bad += 1;
                }
            }
            _ => bad += 1,
        }
    }
    Ok(bad as f64 / model.len() as f64)
}

/// Mass of `{p : g.p undefined}`; equals [`equivariance_defect`] for every labeling.
pub fn undefined_mass(model: &LocalGSpace, g: &GroupElement) -> Result<f64, MicrostateError> {
    let t = model.action_table(g)?;
    Ok(t.iter().filter(|q| q.is_none()).count() as f64 / t.len() as f64)
}

fn compile_sft(
    model: &LocalGSpace,
    system: &ShiftSystem,
) -> Result<Vec<PointCheck>, MicrostateError> {
    let n = model.len();
    let mut checks: Vec<PointCheck> = (0..n)
        .map(|_| PointCheck {
            always_defective: false,
            patterns: Vec::new(),
            window: None,
        })
        .collect();
    for pat in system.forbidden() {
        let tables = pullback_tables(model, &pat.window)?;
        for (p, check) in checks.iter_mut().enumerate() {
            let mut cells = Vec::with_capacity(pat.window.len());
            for (t, &s) in tables.iter().zip(&pat.symbols) {
                match t[p] {
                    Some(q) => cells.push((q, s)),
                    None => {
                        check.always_defective = true;
                        break;
                    }
                }
            }
            if cells.len() == pat.window.len() {
                check.patterns.push(cells);
            }
        }
    }
    Ok(checks)
}

/// Weighted fraction of points at which some forbidden pattern occurs in the pullback
/// name (points where a forbidden window is not fully defined count as defective).
pub fn sft_defect(
    model: &LocalGSpace,
    omega: &Microstate,
    system: &ShiftSystem,
) -> Result<f64, MicrostateError> {
    omega.check(model)?;
    let checks = compile_sft(model, system)?;
    let bad = checks.iter().filter(|c| c.is_defective(omega.labels())).count();
    Ok(bad as f64 / model.len() as f64)
}

/// How the equivariance condition quantifies over `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipMode {
    /// Defect at most `δ` for every `g ∈ U`.
    Strict,
    /// Haar-average of the defect over `U` at most `δ`.
    Averaged,
    /// Strict, plus an exact match of the quantized target marginal.
    MeasurePreserving,
}

/// How membership in the subshift is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// No forbidden pattern may occur anywhere.
    Strict,
    /// Points carrying forbidden patterns are charged against the `δ` budget.
    Soft,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Strict => "strict",
            Engine::Soft => "soft",
        }
    }
}

/// A region of marginal space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    /// Total-variation ball around a target marginal.
    TvBall { target: Vec<f64>, eta: f64 },
    /// Coordinatewise bounds on pattern frequencies.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Exact pattern counts (quantized target for measure-preserving microstates).
    Exact { counts: Vec<u64> },
}

/// Constraint on the empirical `F`-marginal: it must lie in at least one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalConstraint {
    pub window: Vec<GroupElement>,
    pub regions: Vec<Region>,
}

impl MarginalConstraint {
    pub fn tv_ball(window: Vec<GroupElement>, target: &MarginalDistribution, eta: f64) -> Self {
        Self {
            window,
            regions: vec![Region::TvBall {
                target: target.masses.clone(),
                eta,
            }],
        }
    }

    /// Exact match of the largest-remainder quantization of `target` at `n` points.
    pub fn exact(
        window: Vec<GroupElement>,
        target: &MarginalDistribution,
        n: usize,
    ) -> Result<Self, MicrostateError> {
        Ok(Self {
            window,
            regions: vec![Region::Exact {
                counts: quantize_target(&target.masses, n)?,
            }],
        })
    }

    fn universe(&self, alphabet_size: usize) -> usize {
        alphabet_size.pow(self.window.len() as u32)
    }

    fn validate(&self, alphabet_size: usize) -> Result<(), MicrostateError> {
        let u = self.universe(alphabet_size);
        if self.regions.is_empty() {
            return Err(MicrostateError::InvalidSpec("constraint has no regions"));
        }
        for r in &self.regions {
            let ok = match r {
                Region::TvBall { target, eta } => target.len() == u && *eta >= 0.0,
                Region::Box { lower, upper } => {
                    lower.len() == u && upper.len() == u && lower.iter().zip(upper).all(|(l, h)| l <= h)
                }
                Region::Exact { counts } => counts.len() == u,
            };
            if !ok {
                return Err(MicrostateError::InvalidSpec("region does not match the window universe"));
            }
        }
        Ok(())
    }
}

/// Counts check for one region. `counts` has one slot per pattern plus a final
/// undefined slot.
fn region_satisfied(region: &Region, counts: &[u64], n: usize) -> bool {
    let nf = n as f64;
    let (patterns, undefined) = counts.split_at(counts.len() - 1);
    let undefined = undefined[0];
    match region {
        Region::TvBall { target, eta } => {
            let l1: f64 = patterns
                .iter()
                .zip(target)
                .map(|(&c, &t)| math::abs(c as f64 / nf - t))
                .sum::<f64>()
                + undefined as f64 / nf;
            0.5 * l1 <= eta + 1e-12
        }
        Region::Box { lower, upper } => {
            undefined == 0
                && patterns.iter().zip(lower.iter().zip(upper)).all(|(&c, (&lo, &hi))| {
                    let c = c as f64;
                    c >= lo * nf - TOL && c <= hi * nf + TOL
                })
        }
        Region::Exact { counts: target } => undefined == 0 && patterns == target.as_slice(),
    }
}

/// Whether partial counts (with `remaining` points still unplaced) can still end up in
/// the region. Used for pruning, so it must never reject a feasible completion.
fn region_feasible(region: &Region, counts: &[u64], n: usize, remaining: usize) -> bool {
    let nf = n as f64;
    let (patterns, undefined) = counts.split_at(counts.len() - 1);
    let undefined = undefined[0];
    match region {
        Region::TvBall { target, eta } => {
            // counts only grow, and with equal totals TV = Σ positive excess
            let excess: f64 = patterns
                .iter()
                .zip(target)
                .map(|(&c, &t)| (c as f64 / nf - t).max(0.0))
                .sum::<f64>()
                + undefined as f64 / nf;
            excess <= eta + 1e-12
        }
        Region::Box { lower, upper } => {
            if undefined > 0 {
                return false;
            }
            let mut deficit = 0.0;
            for (&c, (&lo, &hi)) in patterns.iter().zip(lower.iter().zip(upper)) {
                let c = c as f64;
                if c > hi * nf + TOL {
                    return false;
                }
                deficit += (libm::ceil(lo * nf - TOL) - c).max(0.0);
            }
            deficit <= remaining as f64
        }
        Region::Exact { counts: target } => {
            if undefined > 0 {
                return false;
            }
            let mut deficit = 0u64;
            for (&c, &t) in patterns.iter().zip(target) {
                if c > t {
                    return false;
                }
                deficit += t - c;
            }
            deficit <= remaining as u64
        }
    }
}

/// The parameters `(U, δ, mode, engine, 𝒪)` of a space of good microstates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpaceSpec {
    pub u: WeightedElementSet,
    pub delta: f64,
    pub mode: MembershipMode,
    pub engine: Engine,
    pub constraint: Option<MarginalConstraint>,
}

impl MapSpaceSpec {
    pub fn new(u: WeightedElementSet, delta: f64, mode: MembershipMode, engine: Engine) -> Self {
        Self {
            u,
            delta,
            mode,
            engine,
            constraint: None,
        }
    }

    pub fn with_constraint(mut self, c: MarginalConstraint) -> Self {
        self.constraint = Some(c);
        self
    }

    pub fn validate(&self, group: &GroupModel, alphabet_size: usize) -> Result<(), MicrostateError> {
        if !(self.delta >= 0.0) {
            return Err(MicrostateError::Negative("delta"));
        }
        if !self.u.contains(&group.identity()) {
            return Err(MicrostateError::InvalidSpec("U must contain the identity"));
        }
        if let Some(c) = &self.constraint {
            c.validate(alphabet_size)?;
        }
        if self.mode == MembershipMode::MeasurePreserving
            && !self
                .constraint
                .as_ref()
                .is_some_and(|c| c.regions.iter().all(|r| matches!(r, Region::Exact { .. })))
        {
            return Err(MicrostateError::InvalidSpec(
                "measure-preserving mode needs an exact quantized target",
            ));
        }
        Ok(())
    }
}

/// Largest number of defective points a microstate may carry, given the
/// label-independent part of the defect; `None` when no labeling qualifies.
pub fn allowed_defects(n: usize, delta: f64, base: f64, engine: Engine) -> Option<usize> {
    if base > delta + 1e-12 {
        return None;
    }
    Some(match engine {
        Engine::Strict => 0,
        Engine::Soft => math::floor((delta - base) * n as f64 + 1e-9).max(0.0) as usize,
    })
}

/// Label-independent equivariance defect of a spec (max or Haar mean over `U`).
pub fn base_defect(model: &LocalGSpace, spec: &MapSpaceSpec) -> Result<f64, MicrostateError> {
    let mut worst: f64 = 0.0;
    let mut acc = 0.0;
    let mut weight = 0.0;
    for (g, w) in &spec.u.elements {
        let d = undefined_mass(model, g)?;
        worst = worst.max(d);
        acc += w * d;
        weight += w;
    }
    Ok(match spec.mode {
        MembershipMode::Averaged if weight > 0.0 => acc / weight,
        MembershipMode::Averaged => 0.0,
        _ => worst,
    })
}

/// Membership of `φ_ω` in `Map(M, X, ρ: U, δ)` (or its averaged / measure-constrained
/// variants), evaluated from the literal defect functions.
pub fn is_member(
    model: &LocalGSpace,
    omega: &Microstate,
    spec: &MapSpaceSpec,
    system: &ShiftSystem,
) -> Result<bool, MicrostateError> {
    omega.check(model)?;
    spec.validate(model.group(), system.alphabet().len())?;
    let n = model.len();
    let sft_bad = math::round(sft_defect(model, omega, system)? * n as f64) as usize;
    let mut worst: f64 = 0.0;
    let mut acc = 0.0;
    let mut weight = 0.0;
    for (g, w) in &spec.u.elements {
        let d = equivariance_defect(model, omega, g)?;
        worst = worst.max(d);
        acc += w * d;
        weight += w;
    }
    let base = match spec.mode {
        MembershipMode::Averaged => acc / weight,
        _ => worst,
    };
    match allowed_defects(n, spec.delta, base, spec.engine) {
        Some(allowed) if sft_bad <= allowed => {}
        _ => return Ok(false),
    }
    if let Some(c) = &spec.constraint {
        let k = system.alphabet().len();
        let emp = empirical_measure(model, omega, &c.window, k)?;
        let mut counts: Vec<u64> = emp
            .masses
            .iter()
            .map(|m| math::round(m * n as f64) as u64)
            .collect();
        counts.push(math::round(emp.undefined * n as f64) as u64);
        if !c.regions.iter().any(|r| region_satisfied(r, &counts, n)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The `F`-marginal of `φ_ω * bvol`: the distribution of pullback patterns
/// `(ω(f⁻¹.p))_{f ∈ F}`, with undefined windows collected separately.
pub fn empirical_measure(
    model: &LocalGSpace,
    omega: &Microstate,
    window: &[GroupElement],
    alphabet_size: usize,
) -> Result<MarginalDistribution, MicrostateError> {
    omega.check(model)?;
    if let Some(&s) = omega.labels().iter().find(|&&s| s as usize >= alphabet_size) {
        return Err(MicrostateError::BadSymbol(s));
    }
    let tables = pullback_tables(model, window)?;
    let n = model.len();
    let mut masses = vec![0.0; alphabet_size.pow(window.len() as u32)];
    let mut undefined = 0.0;
    let unit = 1.0 / n as f64;
    let mut buf = Vec::with_capacity(window.len());
    for p in 0..n {
        buf.clear();
        for t in &tables {
            match t[p] {
                Some(q) => buf.push(omega.labels()[q as usize]),
                None => break,
            }
        }
        if buf.len() == window.len() {
            masses[pattern_index(&buf, alphabet_size)] += unit;
        } else {
            undefined += unit;
        }
    }
    Ok(MarginalDistribution {
        alphabet_size,
        window_len: window.len(),
        masses,
        undefined,
    })
}

/// `ρ^M(φ_ω, φ_ω')`: normalized weighted Hamming distance.
pub fn rho_m_distance(model: &LocalGSpace, a: &Microstate, b: &Microstate) -> Result<f64, MicrostateError> {
    a.check(model)?;
    b.check(model)?;
    Ok(hamming(a.labels(), b.labels()) as f64 / model.len() as f64)
}

pub(crate) fn hamming(a: &[Symbol], b: &[Symbol]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Largest-remainder rounding of a distribution to integer counts summing to `n`.
///
/// Ties in the fractional part go to the larger target first, then to the lower index.
pub fn quantize_target(target: &[f64], n: usize) -> Result<Vec<u64>, MicrostateError> {
    if target.is_empty() || target.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(MicrostateError::NotQuantizable("entries must be finite and nonnegative"));
    }
    let s: f64 = target.iter().sum();
    if math::abs(s - 1.0) > 1e-9 {
        return Err(MicrostateError::NotQuantizable("entries must sum to 1"));
    }
    let nf = n as f64;
    let mut counts: Vec<u64> = target.iter().map(|&t| math::floor(t * nf + 1e-9) as u64).collect();
    let placed: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..target.len()).collect();
    let rem = |i: usize| target[i] * nf - counts[i] as f64;
    order.sort_by(|&a, &b| {
        rem(b)
            .total_cmp(&rem(a))
            .then(target[b].total_cmp(&target[a]))
            .then(a.cmp(&b))
    });
    let missing = (n as u64).saturating_sub(placed) as usize;
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// Result of [`transport_to_target`].
#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    pub microstate: Microstate,
    pub relabeled: usize,
    pub quantized: Vec<u64>,
}

/// Relabels the fewest points needed to make the symbol frequencies equal the
/// quantized target exactly: every surplus point of a symbol is moved to the lowest
/// symbol still in deficit, scanning points in index order.
pub fn transport_to_target(
    model: &LocalGSpace,
    omega: &Microstate,
    target: &[f64],
) -> Result<Transport, MicrostateError> {
    omega.check(model)?;
    let k = target.len();
    if let Some(&s) = omega.labels().iter().find(|&&s| s as usize >= k) {
        return Err(MicrostateError::BadSymbol(s));
    }
    let n = model.len();
    let quantized = quantize_target(target, n)?;
    let mut counts = vec![0u64; k];
    for &s in omega.labels() {
        counts[s as usize] += 1;
    }
    let mut labels = omega.labels().to_vec();
    let mut relabeled = 0;
    let mut next_deficit = 0usize;
    for s in labels.iter_mut() {
        let a = *s as usize;
        if counts[a] > quantized[a] {
            while counts[next_deficit] >= quantized[next_deficit] {
                next_deficit += 1;
            }
            counts[a] -= 1;
            counts[next_deficit] += 1;
            *s = next_deficit as Symbol;
            relabeled += 1;
        }
    }
    Ok(Transport {
        microstate: Microstate::new(labels),
        relabeled,
        quantized,
    })
}

/// Extra defect allowed after perturbing a good microstate by `ρ^M < ε` on a
/// `(U, κ)`-sofic model: `√ε + ε + κ`. The modulus-of-continuity term vanishes for
/// the discrete observable.
pub fn perturbation_stability_bound(kappa: f64, epsilon: f64) -> Result<f64, MicrostateError> {
    if !(kappa >= 0.0) {
        return Err(MicrostateError::Negative("kappa"));
    }
    if !(epsilon >= 0.0) {
        return Err(MicrostateError::Negative("epsilon"));
    }
    Ok(math::sqrt(epsilon) + epsilon + kappa)
}

/// Per-point data needed to score a labeling: forbidden-pattern cells and the
/// constraint window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    /// Some forbidden window is undefined here.
    pub always_defective: bool,
    /// For each forbidden pattern, the `(point, symbol)` cells that must all match.
    pub patterns: Vec<Vec<(u32, Symbol)>>,
    /// Points read by the constraint window, or `None` when it is undefined.
    pub window: Option<Vec<u32>>,
}

impl PointCheck {
    pub fn is_defective(&self, labels: &[Symbol]) -> bool {
        self.always_defective
            || self
                .patterns
                .iter()
                .any(|cells| cells.iter().all(|&(q, s)| labels[q as usize] == s))
    }

    /// Every point this check reads.
    pub fn dependencies(&self) -> impl Iterator<Item = u32> + '_ {
        self.patterns
            .iter()
            .flatten()
            .map(|&(q, _)| q)
            .chain(self.window.iter().flatten().copied())
    }

    pub fn pattern_slot(&self, labels: &[Symbol], alphabet_size: usize, undefined_slot: usize) -> usize {
        match &self.window {
            Some(cells) => cells
                .iter()
                .fold(0, |acc, &q| acc * alphabet_size + labels[q as usize] as usize),
            None => undefined_slot,
        }
    }
}

/// A map-space spec resolved against a concrete model and system.
#[derive(Debug, Clone)]
pub struct CompiledProblem {
    pub n: usize,
    pub alphabet_size: usize,
    /// `None` when the label-independent defect already exceeds `δ`.
    pub allowed_defects: Option<usize>,
    pub checks: Vec<PointCheck>,
    pub regions: Vec<Region>,
    /// Number of pattern slots including the trailing undefined slot.
    pub slots: usize,
}

impl CompiledProblem {
    pub fn new(model: &LocalGSpace, spec: &MapSpaceSpec, system: &ShiftSystem) -> Result<Self, MicrostateError> {
        let k = system.alphabet().len();
        spec.validate(model.group(), k)?;
        if system.group() != model.group() {
            return Err(MicrostateError::InvalidSpec("system and model act by different groups"));
        }
        let n = model.len();
        let base = base_defect(model, spec)?;
        let mut checks = compile_sft(model, system)?;
        let (regions, slots) = match &spec.constraint {
            Some(c) => {
                let tables = pullback_tables(model, &c.window)?;
                for (p, check) in checks.iter_mut().enumerate() {
                    check.window = tables.iter().map(|t| t[p]).collect();
                }
                (c.regions.clone(), c.universe(k) + 1)
            }
            None => (Vec::new(), 0),
        };
        Ok(Self {
            n,
            alphabet_size: k,
            allowed_defects: allowed_defects(n, spec.delta, base, spec.engine),
            checks,
            regions,
            slots,
        })
    }

    pub fn has_constraint(&self) -> bool {
        !self.regions.is_empty()
    }

    pub fn counts_satisfied(&self, counts: &[u64]) -> bool {
        self.regions.is_empty() || self.regions.iter().any(|r| region_satisfied(r, counts, self.n))
    }

    pub fn counts_feasible(&self, counts: &[u64], remaining: usize) -> bool {
        self.regions.is_empty()
            || self
                .regions
                .iter()
                .any(|r| region_feasible(r, counts, self.n, remaining))
    }

    /// Membership from the compiled data; agrees with [`is_member`].
    pub fn accepts(&self, labels: &[Symbol]) -> bool {
        let Some(allowed) = self.allowed_defects else { return false };
        let bad = self.checks.iter().filter(|c| c.is_defective(labels)).count();
        if bad > allowed {
            return false;
        }
        if self.regions.is_empty() {
            return true;
        }
        let mut counts = vec![0u64; self.slots];
        for c in &self.checks {
            counts[c.pattern_slot(labels, self.alphabet_size, self.slots - 1)] += 1;
        }
        self.counts_satisfied(&counts)
    }
}
