//! Entropy estimates over finite schedules.
//!
//! An [`EstimateProblem`] fixes a system, a mode, a family of models and a
//! [`Schedule`]. It splits into independent [`CellJob`]s (one per model size, `U`
//! radius, `δ`, `η` and engine); each job counts microstates once and evaluates every
//! `ε` of the schedule. [`EstimateProblem::assemble`] merges job output by key, so the
//! report does not depend on the order jobs ran in.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{GroupElement, GroupError, GroupModel};
use crate::math::{self, ln_count};
use crate::microstate::{
    empirical_measure, quantize_target, CompiledProblem, Engine, MapSpaceSpec, MarginalConstraint,
    MembershipMode, Microstate, MicrostateError, Region,
};
use crate::model::{is_atomless, LocalGSpace, ModelError};
use crate::packing::{
    count_microstates, greedy_sep_lower, sep_exact, CountError, CountLimits, CountValue, DfsCounter,
    HammingFamily, OracleCheck, EXACT_FAMILY_LIMIT,
};
use crate::shift::{tv_distance, InvariantMeasure, ShiftError, ShiftSystem};
use crate::Symbol;

/// Largest family enumerated for the greedy separated-set bound.
pub const GREEDY_FAMILY_LIMIT: usize = 65_536;

/// Default node budget of the exact `sep_ε` search inside a cell.
pub const SEP_NODE_BUDGET: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Microstate(#[from] MicrostateError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error("invalid schedule: {0}")]
    Schedule(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("no accepted microstates found")]
    NoSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    Top,
    Avg,
    Measure,
    Mp,
    #[serde(rename = "relA")]
    RelA,
}

impl EstimateMode {
    pub fn name(self) -> &'static str {
        match self {
            EstimateMode::Top => "top",
            EstimateMode::Avg => "avg",
            EstimateMode::Measure => "measure",
            EstimateMode::Mp => "mp",
            EstimateMode::RelA => "relA",
        }
    }

    pub fn needs_measure(self) -> bool {
        matches!(self, EstimateMode::Measure | EstimateMode::Mp)
    }
}

/// Finite stand-in for the iterated limits: model sizes, `U` radii, `δ`, `ε`, `η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Model sizes, increasing.
    pub sizes: Vec<usize>,
    /// Radii of `U`, increasing.
    pub radii: Vec<f64>,
    /// Decreasing.
    pub deltas: Vec<f64>,
    /// Decreasing.
    pub epsilons: Vec<f64>,
    /// Decreasing; only read by the measure mode.
    #[serde(default)]
    pub etas: Vec<f64>,
    /// Marginal window `F`; defaults to the measure's natural window.
    #[serde(default)]
    pub window: Option<Vec<GroupElement>>,
    #[serde(default = "default_engines")]
    pub engines: Vec<Engine>,
}

fn default_engines() -> Vec<Engine> {
    vec![Engine::Strict, Engine::Soft]
}

fn strictly(v: &[f64], increasing: bool) -> bool {
    v.windows(2).all(|w| if increasing { w[0] < w[1] } else { w[0] > w[1] })
}

impl Schedule {
    pub fn validate(&self, mode: EstimateMode) -> Result<(), EntropyError> {
        if self.sizes.is_empty() || self.sizes.contains(&0) || !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(EntropyError::Schedule("sizes must be positive and increasing"));
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r >= 0.0)) || !strictly(&self.radii, true) {
            return Err(EntropyError::Schedule("radii must be nonnegative and increasing"));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d >= 0.0)) || !strictly(&self.deltas, false) {
            return Err(EntropyError::Schedule("deltas must be nonnegative and decreasing"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) || !strictly(&self.epsilons, false) {
            return Err(EntropyError::Schedule("epsilons must be positive and decreasing"));
        }
        if self.etas.iter().any(|e| !(*e >= 0.0)) || !strictly(&self.etas, false) {
            return Err(EntropyError::Schedule("etas must be nonnegative and decreasing"));
        }
        if mode == EstimateMode::Measure && self.etas.is_empty() {
            return Err(EntropyError::Schedule("measure mode needs at least one eta"));
        }
        if self.engines.is_empty() {
            return Err(EntropyError::Schedule("no engines selected"));
        }
        let mut engines = self.engines.clone();
        engines.sort();
        engines.dedup();
        if engines.len() != self.engines.len() {
            return Err(EntropyError::Schedule("engines listed twice"));
        }
        Ok(())
    }

    fn eta_count(&self, mode: EstimateMode) -> usize {
        if mode == EstimateMode::Measure {
            self.etas.len()
        } else {
            0
        }
    }
}

/// How the model of each size is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelFamily {
    /// `ℤ/nℤ`.
    Cyclic,
    /// `{0, …, n-1}` with the partial translation action.
    Interval,
    /// `(ℤ/nℤ)^dim`.
    Torus { dim: usize },
    /// Random Schreier space on `n` points; the seed is offset by `n`.
    Schreier { rank: usize, seed: u64 },
    /// Grid circle with `n` points of the given step (length `n·step`).
    Circle { step: f64 },
}

impl ModelFamily {
    pub fn group(&self) -> GroupModel {
        match *self {
            ModelFamily::Cyclic | ModelFamily::Interval => GroupModel::integers(),
            ModelFamily::Torus { dim } => GroupModel::IntegerLattice { dim },
            ModelFamily::Schreier { rank, .. } => GroupModel::FreeGroup { rank },
            ModelFamily::Circle { step } => GroupModel::RealLine { step },
        }
    }

    pub fn build(&self, n: usize) -> Result<LocalGSpace, ModelError> {
        match *self {
            ModelFamily::Cyclic => LocalGSpace::cyclic_quotient(n),
            ModelFamily::Interval => LocalGSpace::interval(n),
            ModelFamily::Torus { dim } => LocalGSpace::torus_quotient(&vec![n; dim]),
            ModelFamily::Schreier { rank, seed } => LocalGSpace::random_schreier(n, rank, seed.wrapping_add(n as u64)),
            ModelFamily::Circle { step } => LocalGSpace::circle_space(n as f64 * step, step),
        }
    }
}

/// A cell value: `vol(M)⁻¹ log sep_ε`, or the empty marker standing for `-∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CellValue {
    Finite { value: f64 },
    Empty,
}

impl CellValue {
    pub fn from_count(count: u128, volume: f64) -> Self {
        if count == 0 {
            CellValue::Empty
        } else {
            CellValue::Finite {
                value: ln_count(count) / volume,
            }
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            CellValue::Finite { value } => Some(value),
            CellValue::Empty => None,
        }
    }

    pub fn is_empty(self) -> bool {
        self == CellValue::Empty
    }

    /// `Empty` sorts below every finite value.
    pub fn min(self, other: Self) -> Self {
        match (self, other) {
            (CellValue::Finite { value: a }, CellValue::Finite { value: b }) => {
                CellValue::Finite { value: a.min(b) }
            }
            _ => CellValue::Empty,
        }
    }

    pub fn le(self, other: Self) -> bool {
        match (self, other) {
            (CellValue::Empty, _) => true,
            (_, CellValue::Empty) => false,
            (CellValue::Finite { value: a }, CellValue::Finite { value: b }) => a <= b,
        }
    }
}

/// Index of a cell in the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub size: usize,
    pub radius: usize,
    pub delta: usize,
    pub epsilon: usize,
    pub eta: Option<usize>,
    pub engine: Engine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: CellKey,
    pub n: usize,
    pub volume: f64,
    pub radius: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub engine: Engine,
    pub count: CountValue,
    pub count_engine: String,
    pub separated: CountValue,
    pub sep_engine: String,
    /// From the lower bound on `sep_ε`.
    pub value: CellValue,
    /// From the upper bound on `sep_ε`, when `sep_ε` is not exact.
    pub value_upper: Option<f64>,
    pub oracle: Option<OracleCheck>,
}

/// A unit of work: one microstate count, evaluated at every `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellJob {
    pub size: usize,
    pub radius: usize,
    pub delta: usize,
    pub eta: Option<usize>,
    pub engine: Engine,
    /// Measure-preserving runs also count the `η = 1/n` measure space for comparison.
    pub companion: bool,
}

/// Value at the largest model size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proxy {
    pub radius: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub engine: Engine,
    pub value: CellValue,
}

/// Inf over `(U, δ, η)` of the proxies, at each `ε`; `estimate` is the smallest-`ε`
/// entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalEstimate {
    pub engine: Engine,
    pub by_epsilon: Vec<(f64, CellValue)>,
    pub estimate: CellValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationError {
    pub n: usize,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpComparison {
    pub n: usize,
    pub radius: f64,
    pub delta: f64,
    pub engine: Engine,
    pub mp: CellValue,
    pub measure: CellValue,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub monotonicity_violations: Vec<String>,
    pub oracle_checks: usize,
    pub oracle_failures: usize,
    pub inexact_cells: usize,
    /// Measure-preserving runs only: whether every model is atomless (never, for
    /// finite models; the quantized target stands in).
    pub atomless: Option<bool>,
    pub quantization: Vec<QuantizationError>,
    pub mp_vs_measure: Vec<MpComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub mode: EstimateMode,
    pub cells: Vec<Cell>,
    pub proxies: Vec<Proxy>,
    pub finals: Vec<FinalEstimate>,
    pub diagnostics: Diagnostics,
}

impl EntropyReport {
    pub fn final_for(&self, engine: Engine) -> Option<CellValue> {
        self.finals.iter().find(|f| f.engine == engine).map(|f| f.estimate)
    }

    pub fn cell(&self, key: &CellKey) -> Option<&Cell> {
        self.cells.iter().find(|c| &c.key == key)
    }
}

/// Everything needed to produce one [`EntropyReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateProblem {
    pub system: ShiftSystem,
    pub mode: EstimateMode,
    pub measure: Option<InvariantMeasure>,
    /// Regions of the relative estimate; empty means all of `Prob(X)`.
    pub regions: Vec<Region>,
    pub family: ModelFamily,
    pub schedule: Schedule,
    pub limits: CountLimits,
    /// Node budget of the exact `sep_ε` search; past it the cell reports greedy bounds.
    pub sep_budget: u64,
}

impl EstimateProblem {
    pub fn new(
        system: ShiftSystem,
        mode: EstimateMode,
        family: ModelFamily,
        schedule: Schedule,
    ) -> Result<Self, EntropyError> {
        let p = Self {
            system,
            mode,
            measure: None,
            regions: Vec::new(),
            family,
            schedule,
            limits: CountLimits::default(),
            sep_budget: SEP_NODE_BUDGET,
        };
        Ok(p)
    }

    pub fn with_measure(mut self, mu: InvariantMeasure) -> Self {
        self.measure = Some(mu);
        self
    }

    pub fn with_regions(mut self, regions: Vec<Region>) -> Self {
        self.regions = regions;
        self
    }

    pub fn with_sep_budget(mut self, budget: u64) -> Self {
        self.sep_budget = budget;
        self
    }

    pub fn with_limits(mut self, limits: CountLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn validate(&self) -> Result<(), EntropyError> {
        self.schedule.validate(self.mode)?;
        if self.family.group() != *self.system.group() {
            return Err(EntropyError::Invalid("model family and system act by different groups".into()));
        }
        if self.mode.needs_measure() {
            let mu = self
                .measure
                .as_ref()
                .ok_or_else(|| EntropyError::Invalid(format!("mode {} needs a measure", self.mode.name())))?;
            mu.validate_for(&self.system)?;
        }
        if self.mode == EstimateMode::RelA && !self.regions.is_empty() {
            let k = self.system.alphabet().len();
            let c = MarginalConstraint {
                window: self.window()?,
                regions: self.regions.clone(),
            };
            MapSpaceSpec::new(self.system.group().ball(0.0), 0.0, MembershipMode::Strict, Engine::Strict)
                .with_constraint(c)
                .validate(self.system.group(), k)?;
        }
        Ok(())
    }

    pub fn window(&self) -> Result<Vec<GroupElement>, EntropyError> {
        if let Some(w) = &self.schedule.window {
            return Ok(w.clone());
        }
        match &self.measure {
            Some(mu) => Ok(mu.natural_window(self.system.group())?),
            None => Ok(vec![self.system.group().identity()]),
        }
    }

    /// All jobs, in key order.
    pub fn jobs(&self) -> Result<Vec<CellJob>, EntropyError> {
        self.validate()?;
        let s = &self.schedule;
        let etas: Vec<Option<usize>> = match s.eta_count(self.mode) {
            0 => vec![None],
            k => (0..k).map(Some).collect(),
        };
        let mut jobs = Vec::new();
        for size in 0..s.sizes.len() {
            for radius in 0..s.radii.len() {
                for delta in 0..s.deltas.len() {
                    for &engine in &s.engines {
                        for &eta in &etas {
                            jobs.push(CellJob {
                                size,
                                radius,
                                delta,
                                eta,
                                engine,
                                companion: false,
                            });
                        }
                        if self.mode == EstimateMode::Mp {
                            jobs.push(CellJob {
                                size,
                                radius,
                                delta,
                                eta: None,
                                engine,
                                companion: true,
                            });
                        }
                    }
                }
            }
        }
        jobs.sort();
        Ok(jobs)
    }

    fn spec_for(&self, job: &CellJob, model: &LocalGSpace) -> Result<MapSpaceSpec, EntropyError> {
        let s = &self.schedule;
        let group = self.system.group();
        let u = group.ball(s.radii[job.radius]);
        let delta = s.deltas[job.delta];
        let n = model.len();
        let target = || -> Result<_, EntropyError> {
            let mu = self.measure.as_ref().ok_or(EntropyError::Invalid("missing measure".into()))?;
            let w = self.window()?;
            let m = mu.marginal(&w)?;
            Ok((w, m))
        };
        if job.companion {
            let (w, m) = target()?;
            return Ok(MapSpaceSpec::new(u, delta, MembershipMode::Strict, job.engine)
                .with_constraint(MarginalConstraint::tv_ball(w, &m, 1.0 / n as f64)));
        }
        Ok(match self.mode {
            EstimateMode::Top => MapSpaceSpec::new(u, delta, MembershipMode::Strict, job.engine),
            EstimateMode::Avg => MapSpaceSpec::new(u, delta, MembershipMode::Averaged, job.engine),
            EstimateMode::Measure => {
                let (w, m) = target()?;
                let eta = s.etas[job.eta.ok_or(EntropyError::Invalid("measure job without eta".into()))?];
                MapSpaceSpec::new(u, delta, MembershipMode::Strict, job.engine)
                    .with_constraint(MarginalConstraint::tv_ball(w, &m, eta))
            }
            EstimateMode::Mp => {
                let (w, m) = target()?;
                MapSpaceSpec::new(u, delta, MembershipMode::MeasurePreserving, job.engine)
                    .with_constraint(MarginalConstraint::exact(w, &m, n)?)
            }
            EstimateMode::RelA => {
                let spec = MapSpaceSpec::new(u, delta, MembershipMode::Strict, job.engine);
                if self.regions.is_empty() {
                    spec
                } else {
                    spec.with_constraint(MarginalConstraint {
                        window: self.window()?,
                        regions: self.regions.clone(),
                    })
                }
            }
        })
    }

    /// Counts the job's microstates and evaluates it at every `ε` (companion jobs: at
    /// the smallest `ε` only).
    pub fn run_job(&self, job: &CellJob) -> Result<Vec<Cell>, EntropyError> {
        let s = &self.schedule;
        let n_param = s.sizes[job.size];
        let model = self.family.build(n_param)?;
        let spec = self.spec_for(job, &model)?;
        let counted = count_microstates(&model, &spec, &self.system, self.limits)?;
        let count = counted.value.lower();
        let volume = model.volume();
        let n = model.len();
        let eps_indices: Vec<usize> = if job.companion {
            vec![s.epsilons.len() - 1]
        } else {
            (0..s.epsilons.len()).collect()
        };
        let mut members: Option<Option<Vec<Vec<Symbol>>>> = None;
        let mut cells = Vec::with_capacity(eps_indices.len());
        for e in eps_indices {
            let eps = s.epsilons[e];
            let (separated, sep_engine) = if count == 0 || eps * (n as f64) < 1.0 {
                // distinct labelings are at distance ≥ 1/n > ε
                (CountValue::Exact { value: count }, String::from("count"))
            } else if count <= GREEDY_FAMILY_LIMIT as u128 {
                let family = members.get_or_insert_with(|| {
                    CompiledProblem::new(&model, &spec, &self.system)
                        .ok()
                        .and_then(|p| DfsCounter::new(&model, &p, self.limits).members(GREEDY_FAMILY_LIMIT).ok().flatten())
                });
                match family {
                    Some(m) => sep_from_members(m, eps, count, self.sep_budget),
                    None => hamming_volume_bound(count, n, self.system.alphabet().len(), eps),
                }
            } else {
                hamming_volume_bound(count, n, self.system.alphabet().len(), eps)
            };
            let value = CellValue::from_count(separated.lower(), volume);
            let value_upper = match separated {
                CountValue::Exact { .. } => None,
                CountValue::Bounds { upper, .. } => CellValue::from_count(upper, volume).finite(),
            };
            cells.push(Cell {
                key: CellKey {
                    size: job.size,
                    radius: job.radius,
                    delta: job.delta,
                    epsilon: e,
                    eta: job.eta,
                    engine: job.engine,
                },
                n,
                volume,
                radius: s.radii[job.radius],
                delta: s.deltas[job.delta],
                epsilon: eps,
                eta: if job.companion {
                    Some(1.0 / n as f64)
                } else {
                    job.eta.map(|i| s.etas[i])
                },
                engine: job.engine,
                count: counted.value,
                count_engine: counted.engine.clone(),
                separated,
                sep_engine,
                value,
                value_upper,
                oracle: counted.oracle.clone(),
            });
        }
        Ok(cells)
    }

    /// Merges job output into a report. `results` pairs each job with its cells, in any
    /// order.
    pub fn assemble(&self, results: Vec<(CellJob, Vec<Cell>)>) -> Result<EntropyReport, EntropyError> {
        let s = &self.schedule;
        let mut main: BTreeMap<CellKey, Cell> = BTreeMap::new();
        let mut companions: BTreeMap<CellKey, Cell> = BTreeMap::new();
        for (job, cells) in results {
            for c in cells {
                let target = if job.companion { &mut companions } else { &mut main };
                target.insert(c.key, c);
            }
        }
        let expected = self.jobs()?.iter().filter(|j| !j.companion).count() * s.epsilons.len();
        if main.len() != expected {
            return Err(EntropyError::Invalid(format!(
                "expected {expected} cells, got {}",
                main.len()
            )));
        }
        let cells: Vec<Cell> = main.into_values().collect();
        let last = s.sizes.len() - 1;
        let proxies: Vec<Proxy> = cells
            .iter()
            .filter(|c| c.key.size == last)
            .map(|c| Proxy {
                radius: c.radius,
                delta: c.delta,
                epsilon: c.epsilon,
                eta: c.eta,
                engine: c.engine,
                value: c.value,
            })
            .collect();
        let mut finals = Vec::new();
        for &engine in &s.engines {
            let by_epsilon: Vec<(f64, CellValue)> = s
                .epsilons
                .iter()
                .map(|&eps| {
                    let v = proxies
                        .iter()
                        .filter(|p| p.engine == engine && p.epsilon == eps)
                        .map(|p| p.value)
                        .reduce(CellValue::min)
                        .unwrap_or(CellValue::Empty);
                    (eps, v)
                })
                .collect();
            let estimate = by_epsilon.last().map(|x| x.1).unwrap_or(CellValue::Empty);
            finals.push(FinalEstimate {
                engine,
                by_epsilon,
                estimate,
            });
        }
        let mut diagnostics = Diagnostics {
            monotonicity_violations: monotonicity_violations(&cells),
            oracle_checks: cells.iter().filter(|c| c.oracle.is_some()).count(),
            oracle_failures: cells.iter().filter(|c| c.oracle.as_ref().is_some_and(|o| !o.agrees)).count(),
            inexact_cells: cells.iter().filter(|c| c.separated.exact().is_none()).count(),
            ..Diagnostics::default()
        };
        if self.mode == EstimateMode::Mp {
            let mut atomless = true;
            for &n in &s.sizes {
                let model = self.family.build(n)?;
                atomless &= is_atomless(&model);
                let mu = self.measure.as_ref().ok_or(EntropyError::Invalid("missing measure".into()))?;
                let target = mu.marginal(&self.window()?)?;
                let q = quantize_target(&target.masses, model.len())?;
                let diffs = q.iter().zip(&target.masses).map(|(&c, &t)| c as f64 / model.len() as f64 - t);
                diagnostics.quantization.push(QuantizationError {
                    n: model.len(),
                    tv: sorted_half_l1(diffs),
                });
            }
            diagnostics.atomless = Some(atomless);
            let eps = s.epsilons.len() - 1;
            for c in cells.iter().filter(|c| c.key.epsilon == eps) {
                if let Some(m) = companions.get(&c.key) {
                    diagnostics.mp_vs_measure.push(MpComparison {
                        n: c.n,
                        radius: c.radius,
                        delta: c.delta,
                        engine: c.engine,
                        mp: c.value,
                        measure: m.value,
                        gap: match (c.value.finite(), m.value.finite()) {
                            (Some(a), Some(b)) => Some(math::abs(a - b)),
                            _ => None,
                        },
                    });
                }
            }
        }
        Ok(EntropyReport {
            mode: self.mode,
            cells,
            proxies,
            finals,
            diagnostics,
        })
    }

    /// Runs every job in order on the calling thread.
    pub fn run(&self) -> Result<EntropyReport, EntropyError> {
        let jobs = self.jobs()?;
        let mut results = Vec::with_capacity(jobs.len());
        for job in jobs {
            let cells = self.run_job(&job)?;
            results.push((job, cells));
        }
        self.assemble(results)
    }
}

/// Half the `ℓ¹` norm, summed in sorted order so the result does not depend on the
/// order of the terms.
fn sorted_half_l1(diffs: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = diffs.map(math::abs).collect();
    v.sort_by(f64::total_cmp);
    0.5 * v.iter().sum::<f64>()
}

/// Largest number of symbol orders tried when canonicalizing a family.
const CANONICAL_ORDER_LIMIT: usize = 720;

fn next_permutation(v: &mut [Symbol]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// The family up to renaming of symbols: used symbols are renamed by decreasing
/// frequency, frequency ties are broken by the order giving the smallest sorted
/// family. Conjugate families get the same result, so greedy bounds computed on it
/// do not depend on the alphabet's labels.
fn canonical_family(members: &[Vec<Symbol>]) -> Vec<Vec<Symbol>> {
    let mut freq: BTreeMap<Symbol, u64> = BTreeMap::new();
    for m in members {
        for &s in m {
            *freq.entry(s).or_insert(0) += 1;
        }
    }
    let mut groups: Vec<(u64, Vec<Symbol>)> = Vec::new();
    for (&s, &f) in &freq {
        match groups.iter_mut().find(|(g, _)| *g == f) {
            Some((_, v)) => v.push(s),
            None => groups.push((f, vec![s])),
        }
    }
    groups.sort_by(|a, b| b.0.cmp(&a.0));
    let orders: usize = groups
        .iter()
        .map(|(_, v)| (1..=v.len()).product::<usize>())
        .try_fold(1usize, |acc, x| acc.checked_mul(x))
        .unwrap_or(usize::MAX);
    let mut groups: Vec<Vec<Symbol>> = groups.into_iter().map(|(_, v)| v).collect();
    let image = |groups: &[Vec<Symbol>]| {
        let mut rename: BTreeMap<Symbol, Symbol> = BTreeMap::new();
        for (i, &s) in groups.iter().flatten().enumerate() {
            rename.insert(s, i as Symbol);
        }
        let mut fam: Vec<Vec<Symbol>> = members.iter().map(|m| m.iter().map(|s| rename[s]).collect()).collect();
        fam.sort_unstable();
        fam
    };
    let mut best = image(&groups);
    if orders > CANONICAL_ORDER_LIMIT {
        return best;
    }
    // odometer over the permutations of each tie group
    loop {
        let mut advanced = false;
        for g in groups.iter_mut().rev() {
            if next_permutation(g) {
                advanced = true;
                break;
            }
            g.sort_unstable();
        }
        if !advanced {
            return best;
        }
        let fam = image(&groups);
        if fam < best {
            best = fam;
        }
    }
}

fn sep_from_members(members: &[Vec<Symbol>], eps: f64, count: u128, budget: u64) -> (CountValue, String) {
    let family = HammingFamily::new(canonical_family(members));
    if members.len() <= EXACT_FAMILY_LIMIT {
        if let Ok(v) = sep_exact(&family, eps, budget) {
            return (CountValue::Exact { value: v as u128 }, "sep-branch-and-bound".into());
        }
    }
    (
        CountValue::Bounds {
            lower: greedy_sep_lower(&family, eps) as u128,
            upper: count,
        },
        "sep-greedy".into(),
    )
}

/// `sep_ε ≥ count / |Hamming ball of radius εn|`: a maximal separated set covers the
/// family by closed `ε`-balls.
fn hamming_volume_bound(count: u128, n: usize, k: usize, eps: f64) -> (CountValue, String) {
    let t = (math::floor(eps * n as f64 + 1e-9) as usize).min(n);
    let ln_k1 = if k > 1 { math::ln((k - 1) as f64) } else { f64::NEG_INFINITY };
    // log Σ_{j ≤ t} C(n, j)(k-1)^j by log-sum-exp
    let mut terms = Vec::with_capacity(t + 1);
    let mut ln_binom = 0.0;
    for j in 0..=t {
        if j > 0 {
            ln_binom += math::ln((n - j + 1) as f64) - math::ln(j as f64);
        }
        let term = if j == 0 { 0.0 } else { ln_binom + j as f64 * ln_k1 };
        terms.push(term);
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_ball = top + math::ln(terms.iter().map(|x| libm::exp(x - top)).sum::<f64>());
    let ratio = libm::exp(ln_count(count) - ln_ball);
    let lower = if ratio >= u128::MAX as f64 {
        u128::MAX
    } else {
        (libm::ceil(ratio - 1e-9) as u128).max(1)
    };
    (
        CountValue::Bounds {
            lower: lower.min(count),
            upper: count,
        },
        "hamming-volume".into(),
    )
}

fn monotonicity_violations(cells: &[Cell]) -> Vec<String> {
    let by_key: BTreeMap<CellKey, &Cell> = cells.iter().map(|c| (c.key, c)).collect();
    let mut out = Vec::new();
    let tol = 1e-12;
    for c in cells {
        if c.separated.exact().is_none() {
            continue;
        }
        let k = c.key;
        // (neighbour key, axis, whether the neighbour may not exceed c)
        let mut neighbours = vec![
            (CellKey { delta: k.delta + 1, ..k }, "delta", true),
            (CellKey { radius: k.radius + 1, ..k }, "radius", true),
            (CellKey { epsilon: k.epsilon + 1, ..k }, "epsilon", false),
        ];
        if let Some(e) = k.eta {
            neighbours.push((CellKey { eta: Some(e + 1), ..k }, "eta", true));
        }
        for (nk, axis, nonincreasing) in neighbours {
            let Some(d) = by_key.get(&nk) else { continue };
            if d.separated.exact().is_none() {
                continue;
            }
            let ok = match (c.value, d.value) {
                (a, b) if nonincreasing => b.le(a) || within(a, b, tol),
                (a, b) => a.le(b) || within(a, b, tol),
            };
            if !ok {
                out.push(format!(
                    "{} engine, n={}: value moves the wrong way along {axis} (radius {}, delta {}, epsilon {}, eta {:?})",
                    c.engine.name(),
                    c.n,
                    c.radius,
                    c.delta,
                    c.epsilon,
                    c.eta
                ));
            }
        }
    }
    out
}

fn within(a: CellValue, b: CellValue, tol: f64) -> bool {
    match (a.finite(), b.finite()) {
        (Some(x), Some(y)) => math::abs(x - y) <= tol,
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Equidistribution

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    Rejection,
    Enumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionReport {
    pub sampler: Sampler,
    pub attempts: u64,
    /// Per sample: max over generators and their inverses of the shift non-invariance.
    pub tvs: Vec<f64>,
    pub max_tv: f64,
}

/// Largest number of accepted labelings enumerated by the fallback sampler.
pub const ENUMERATION_CAP: usize = 100_000;

/// Samples accepted microstates and measures how far their empirical `F`-marginals are
/// from invariant: `TV(φ_*vol |_F, φ_*vol |_{gF})` over generators `g^{±1}`.
pub fn equidistribution_check(
    model: &LocalGSpace,
    spec: &MapSpaceSpec,
    system: &ShiftSystem,
    window: &[GroupElement],
    samples: usize,
    seed: u64,
    limits: CountLimits,
) -> Result<EquidistributionReport, EntropyError> {
    if spec.mode != MembershipMode::Strict {
        return Err(EntropyError::Invalid("equidistribution check needs strict membership".into()));
    }
    let problem = CompiledProblem::new(model, spec, system)?;
    let k = system.alphabet().len();
    let n = model.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = (samples as u64).saturating_mul(200).max(1000);
    let mut accepted: Vec<Vec<Symbol>> = Vec::new();
    let mut attempts = 0u64;
    let mut labels = vec![0 as Symbol; n];
    while accepted.len() < samples && attempts < cap {
        attempts += 1;
        for s in labels.iter_mut() {
            *s = rng.gen_range(0..k) as Symbol;
        }
        if problem.accepts(&labels) {
            accepted.push(labels.clone());
        }
    }
    let sampler = if accepted.len() < samples {
        let mut pool = Vec::new();
        DfsCounter::new(model, &problem, limits).for_each_member(&mut |m| {
            pool.push(m.to_vec());
            pool.len() < ENUMERATION_CAP
        })?;
        if pool.is_empty() {
            return Err(EntropyError::NoSamples);
        }
        accepted = (0..samples).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
        Sampler::Enumeration
    } else {
        Sampler::Rejection
    };
    let group = model.group();
    let mut shifted = Vec::new();
    for i in 0..group.generator_count() {
        let g = group.generator(i);
        for h in [g.clone(), group.inverse(&g)?] {
            let w: Vec<GroupElement> = window
                .iter()
                .map(|f| group.multiply(&h, f))
                .collect::<Result<_, _>>()?;
            shifted.push(w);
        }
    }
    let mut tvs = Vec::with_capacity(accepted.len());
    for labels in accepted {
        let omega = Microstate::new(labels);
        let base = empirical_measure(model, &omega, window, k)?;
        let mut worst: f64 = 0.0;
        for w in &shifted {
            let m = empirical_measure(model, &omega, w, k)?;
            worst = worst.max(tv_distance(&base, &m)?);
        }
        tvs.push(worst);
    }
    let max_tv = tvs.iter().copied().fold(0.0, f64::max);
    Ok(EquidistributionReport {
        sampler,
        attempts,
        tvs,
        max_tv,
    })
}

// ---------------------------------------------------------------------------
// Variational scan

/// Binary Bernoulli measures `(1-p, p)` for `p = 0, step, …, 1`.
pub fn bernoulli_grid(step: f64) -> Result<Vec<(f64, InvariantMeasure)>, EntropyError> {
    grid_points(step)?
        .into_iter()
        .map(|p| Ok((p, InvariantMeasure::bernoulli(vec![1.0 - p, p])?)))
        .collect()
}

/// Markov chains on `{0, 1}` with `P(0→1) = p` and `P(1→0) = 1`, i.e. the chains
/// supported on the golden mean shift, for `p = 0, step, …, 1`.
pub fn markov_grid(step: f64) -> Result<Vec<(f64, InvariantMeasure)>, EntropyError> {
    grid_points(step)?
        .into_iter()
        .map(|p| Ok((p, InvariantMeasure::markov(vec![vec![1.0 - p, p], vec![1.0, 0.0]])?)))
        .collect()
}

fn grid_points(step: f64) -> Result<Vec<f64>, EntropyError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(EntropyError::Invalid("grid step must lie in (0, 1]".into()));
    }
    let m = math::round(1.0 / step) as usize;
    if math::abs(m as f64 * step - 1.0) > 1e-9 {
        return Err(EntropyError::Invalid("grid step must divide 1".into()));
    }
    // p = i/m rounded to 12 digits so that grid labels print cleanly
    Ok((0..=m).map(|i| math::round(i as f64 / m as f64 * 1e12) / 1e12).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub parameter: f64,
    pub estimate: CellValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalScan {
    pub engine: Engine,
    pub points: Vec<ScanPoint>,
    pub sup: CellValue,
    pub argmax: Option<f64>,
    pub topological: CellValue,
    /// Topological estimate minus the supremum.
    pub gap: Option<f64>,
}

/// A topological estimate plus one measure estimate per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalProblem {
    pub top: EstimateProblem,
    pub grid: Vec<(f64, EstimateProblem)>,
}

impl VariationalProblem {
    pub fn new(
        system: ShiftSystem,
        grid: Vec<(f64, InvariantMeasure)>,
        family: ModelFamily,
        schedule: Schedule,
        limits: CountLimits,
    ) -> Result<Self, EntropyError> {
        let top = EstimateProblem::new(system.clone(), EstimateMode::Top, family.clone(), schedule.clone())?
            .with_limits(limits);
        top.validate()?;
        let grid = grid
            .into_iter()
            .map(|(p, mu)| {
                let prob = EstimateProblem::new(system.clone(), EstimateMode::Measure, family.clone(), schedule.clone())?
                    .with_measure(mu)
                    .with_limits(limits);
                prob.validate()?;
                Ok((p, prob))
            })
            .collect::<Result<Vec<_>, EntropyError>>()?;
        Ok(Self { top, grid })
    }

    /// The topological problem followed by the grid problems.
    pub fn problems(&self) -> Vec<&EstimateProblem> {
        core::iter::once(&self.top).chain(self.grid.iter().map(|(_, p)| p)).collect()
    }

    /// `reports` in the order of [`problems`](Self::problems).
    pub fn assemble(&self, reports: &[EntropyReport]) -> Result<VariationalScan, EntropyError> {
        if reports.len() != self.grid.len() + 1 {
            return Err(EntropyError::Invalid("one report per problem expected".into()));
        }
        let engine = self.top.schedule.engines[0];
        let value = |r: &EntropyReport| r.final_for(engine).unwrap_or(CellValue::Empty);
        let points: Vec<ScanPoint> = self
            .grid
            .iter()
            .zip(&reports[1..])
            .map(|((p, _), r)| ScanPoint {
                parameter: *p,
                estimate: value(r),
            })
            .collect();
        let mut sup = CellValue::Empty;
        let mut argmax = None;
        for pt in &points {
            if let Some(v) = pt.estimate.finite() {
                if sup.finite().is_none_or(|s| v > s) {
                    sup = pt.estimate;
                    argmax = Some(pt.parameter);
                }
            }
        }
        let topological = value(&reports[0]);
        let gap = match (topological.finite(), sup.finite()) {
            (Some(t), Some(s)) => Some(t - s),
            _ => None,
        };
        Ok(VariationalScan {
            engine,
            points,
            sup,
            argmax,
            topological,
            gap,
        })
    }

    pub fn run(&self) -> Result<VariationalScan, EntropyError> {
        let reports = self
            .problems()
            .into_iter()
            .map(EstimateProblem::run)
            .collect::<Result<Vec<_>, _>>()?;
        self.assemble(&reports)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lucas(n: usize) -> u128 {
        let (mut a, mut b) = (2u128, 1u128);
        for _ in 0..n {
            (a, b) = (b, a + b);
        }
        a
    }

    fn binom(n: u128, k: u128) -> u128 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
    }

    fn schedule(sizes: Vec<usize>, epsilons: Vec<f64>) -> Schedule {
        Schedule {
            sizes,
            radii: vec![1.0],
            deltas: vec![0.01],
            epsilons,
            etas: vec![],
            window: None,
            engines: vec![Engine::Strict],
        }
    }

    #[test]
    fn canonical_family_ignores_symbol_names() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for k in 2..=4u16 {
            let fam: Vec<Vec<Symbol>> = (0..40).map(|_| (0..6).map(|_| rng.gen_range(0..k)).collect()).collect();
            let perm: Vec<Symbol> = (0..k).rev().collect();
            let swapped: Vec<Vec<Symbol>> = fam.iter().map(|m| m.iter().map(|&s| perm[s as usize]).collect()).collect();
            let (a, b) = (canonical_family(&fam), canonical_family(&swapped));
            assert_eq!(a, b);
            assert_eq!(
                greedy_sep_lower(&HammingFamily::new(a), 0.3),
                greedy_sep_lower(&HammingFamily::new(b), 0.3)
            );
        }
        // symmetric family: both symbols equally frequent
        let fam = vec![vec![0, 1, 0], vec![1, 0, 1], vec![0, 0, 1], vec![1, 1, 0]];
        let swapped: Vec<Vec<Symbol>> = fam.iter().map(|m| m.iter().map(|&s| 1 - s).collect()).collect();
        assert_eq!(canonical_family(&fam), canonical_family(&swapped));
    }

    #[test]
    fn full_shift_is_log_two() {
        let sys = ShiftSystem::full_shift(GroupModel::integers(), 2).unwrap();
        let p = EstimateProblem::new(sys, EstimateMode::Top, ModelFamily::Cyclic, schedule(vec![16], vec![1.0 / 32.0])).unwrap();
        let r = p.run().unwrap();
        assert_eq!(r.cells[0].count.exact(), Some(65536));
        assert_eq!(r.final_for(Engine::Strict).unwrap().finite(), Some(core::f64::consts::LN_2));
    }

    #[test]
    fn golden_mean_top() {
        let p = EstimateProblem::new(
            ShiftSystem::golden_mean(),
            EstimateMode::Top,
            ModelFamily::Cyclic,
            schedule(vec![8, 16], vec![0.05]),
        )
        .unwrap();
        let r = p.run().unwrap();
        let v = r.final_for(Engine::Strict).unwrap().finite().unwrap();
        let oracle = libm::log(lucas(16) as f64) / 16.0;
        assert!((v - oracle).abs() < 1e-12);
        assert_eq!(r.diagnostics.oracle_checks, 2);
        assert_eq!(r.diagnostics.oracle_failures, 0);
    }

    #[test]
    fn coarse_epsilon_uses_separated_sets() {
        // n = 8 golden mean: 47 labelings; at ε = 1/8 distinct ones at Hamming distance 1
        // are no longer separated
        let p = EstimateProblem::new(
            ShiftSystem::golden_mean(),
            EstimateMode::Top,
            ModelFamily::Cyclic,
            schedule(vec![8], vec![0.3, 0.125, 0.05]),
        )
        .unwrap();
        let r = p.run().unwrap();
        let seps: Vec<u128> = r.cells.iter().map(|c| c.separated.exact().unwrap()).collect();
        assert_eq!(seps[2], 47);
        assert!(seps[0] <= seps[1] && seps[1] <= seps[2]);
        assert!(seps[1] < 47);
        assert!(r.diagnostics.monotonicity_violations.is_empty());
    }

    #[test]
    fn mp_examples() {
        let sys = ShiftSystem::full_shift(GroupModel::integers(), 2).unwrap();
        let mu = InvariantMeasure::bernoulli(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let p = EstimateProblem::new(sys, EstimateMode::Mp, ModelFamily::Cyclic, schedule(vec![9], vec![0.1]))
            .unwrap()
            .with_measure(mu);
        let r = p.run().unwrap();
        assert_eq!(r.cells[0].count.exact(), Some(binom(9, 3)));
        assert_eq!(r.diagnostics.atomless, Some(false));
        assert_eq!(r.diagnostics.mp_vs_measure.len(), 1);
    }

    #[test]
    fn empty_cells_use_the_marker() {
        // a golden-mean measure on the full-shift-free system is fine, but asking for
        // all-ones on the golden mean is empty
        let mu = InvariantMeasure::point_mass(2, 1);
        let sys = ShiftSystem::golden_mean();
        assert!(mu.validate_for(&sys).is_err());
        let mut s = schedule(vec![6], vec![0.1]);
        s.deltas = vec![0.0];
        let p = EstimateProblem::new(sys, EstimateMode::RelA, ModelFamily::Cyclic, s)
            .unwrap()
            .with_regions(vec![Region::Box {
                lower: vec![0.0, 0.9],
                upper: vec![0.1, 1.0],
            }]);
        let r = p.run().unwrap();
        assert_eq!(r.cells[0].value, CellValue::Empty);
        assert_eq!(r.final_for(Engine::Strict), Some(CellValue::Empty));
    }

    #[test]
    fn hamming_bound_is_below_count() {
        let (v, _) = hamming_volume_bound(1 << 20, 20, 2, 0.1);
        // ball of radius 2 in {0,1}^20 has 1 + 20 + 190 = 211 points
        assert_eq!(v.lower(), (1u128 << 20).div_ceil(211));
        assert_eq!(v.upper(), 1 << 20);
    }

    #[test]
    fn schedule_validation() {
        let mut s = schedule(vec![8, 4], vec![0.1]);
        assert!(s.validate(EstimateMode::Top).is_err());
        s.sizes = vec![4, 8];
        assert!(s.validate(EstimateMode::Top).is_ok());
        assert!(s.validate(EstimateMode::Measure).is_err());
        s.deltas = vec![0.1, 0.2];
        assert!(s.validate(EstimateMode::Top).is_err());
    }

    #[test]
    fn grids() {
        let g = markov_grid(0.05).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[8].0, 0.4);
        assert!(bernoulli_grid(0.3).is_err());
        for (_, mu) in &g {
            mu.validate_for(&ShiftSystem::golden_mean()).unwrap();
        }
    }

    #[test]
    fn cyclic_equidistribution_is_exact() {
        let sys = ShiftSystem::golden_mean();
        let m = LocalGSpace::cyclic_quotient(12).unwrap();
        let spec = MapSpaceSpec::new(GroupModel::integers().ball(1.0), 0.0, MembershipMode::Strict, Engine::Strict);
        let w = crate::shift::interval_window(&GroupModel::integers(), 2).unwrap();
        let r = equidistribution_check(&m, &spec, &sys, &w, 20, 7, CountLimits::default()).unwrap();
        assert_eq!(r.tvs.len(), 20);
        assert!(r.max_tv < 1e-12);
    }
}
