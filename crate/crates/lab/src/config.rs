//! Experiment configuration files (TOML).

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use sofic_core::entropy::{bernoulli_grid, markov_grid, EstimateMode, EstimateProblem, ModelFamily, Schedule};
use sofic_core::group::{GroupElement, GroupModel};
use sofic_core::microstate::{Engine, MapSpaceSpec, MembershipMode, Region};
use sofic_core::packing::CountLimits;
use sofic_core::shift::{Alphabet, Pattern};
use sofic_core::{InvariantMeasure, ShiftSystem, Symbol};

/// A configuration problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    group: GroupBlock,
    model: ModelBlock,
    system: SystemBlock,
    measure: Option<MeasureBlock>,
    spec: Option<SpecBlock>,
    schedule: Option<ScheduleBlock>,
    #[serde(rename = "rel-a")]
    rel_a: Option<RelABlock>,
    scan: Option<ScanBlock>,
    verify: Option<VerifyBlock>,
    output: Option<OutputBlock>,
    limits: Option<LimitsBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct GroupBlock {
    kind: String,
    dim: Option<usize>,
    rank: Option<usize>,
    step: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ModelBlock {
    kind: String,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SystemBlock {
    alphabet: Option<Vec<String>>,
    preset: Option<String>,
    #[serde(default)]
    forbidden: Vec<ForbiddenBlock>,
    period: Option<Vec<String>>,
    block: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForbiddenBlock {
    offsets: Vec<Offset>,
    symbols: Vec<String>,
}

/// A group element: an integer (ℤ or grid index on ℝ), a lattice vector, or a word.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Offset {
    Int(i64),
    Vector(Vec<i64>),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct MeasureBlock {
    kind: String,
    probs: Option<Vec<f64>>,
    matrix: Option<Vec<Vec<f64>>>,
    symbol: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SpecBlock {
    radius: f64,
    delta: f64,
    #[serde(default = "strict_engine")]
    engine: Engine,
    #[serde(default = "strict_mode")]
    mode: MembershipMode,
}

fn strict_engine() -> Engine {
    Engine::Strict
}

fn strict_mode() -> MembershipMode {
    MembershipMode::Strict
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ScheduleBlock {
    sizes: Vec<usize>,
    radii: Vec<f64>,
    #[serde(default)]
    deltas: Vec<f64>,
    #[serde(default)]
    epsilons: Vec<f64>,
    #[serde(default)]
    etas: Vec<f64>,
    window: Option<Vec<Offset>>,
    engines: Option<Vec<Engine>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelABlock {
    #[serde(default)]
    boxes: Vec<BoxBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxBlock {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ScanBlock {
    family: String,
    step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifyBlock {
    #[serde(default = "default_verify_size")]
    pub size: usize,
    #[serde(default = "default_verify_samples")]
    pub samples: usize,
    #[serde(default)]
    pub corrupt_action_table: bool,
}

fn default_verify_size() -> usize {
    12
}

fn default_verify_samples() -> usize {
    100
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            size: default_verify_size(),
            samples: default_verify_samples(),
            corrupt_action_table: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct OutputBlock {
    dir: Option<String>,
    name: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct LimitsBlock {
    max_nodes: Option<u64>,
    max_dp_states: Option<usize>,
}

/// Which family of measures the variational scan sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanFamily {
    Bernoulli { step: f64 },
    Markov { step: f64 },
}

impl ScanFamily {
    pub fn grid(&self) -> Result<Vec<(f64, InvariantMeasure)>, sofic_core::entropy::EntropyError> {
        match *self {
            ScanFamily::Bernoulli { step } => bernoulli_grid(step),
            ScanFamily::Markov { step } => markov_grid(step),
        }
    }
}

/// A parsed and cross-checked configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub seed: u64,
    pub group: GroupModel,
    pub family: ModelFamily,
    pub system: ShiftSystem,
    pub measure: Option<InvariantMeasure>,
    pub spec: Option<(f64, f64, Engine, MembershipMode)>,
    pub schedule: Option<Schedule>,
    pub regions: Vec<Region>,
    pub scan: Option<ScanFamily>,
    pub verify: VerifyBlock,
    pub output_dir: String,
    pub output_name: String,
    pub limits: CountLimits,
    /// SHA-256 of the config text.
    pub hash: String,
}

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    /// Line (1-based) of the `[name]` or `[[name]]` header, if present.
    fn header_line(&self, name: &str) -> Option<usize> {
        self.text.lines().position(|l| {
            let t = l.trim();
            t == format!("[{name}]") || t == format!("[[{name}]]") || t.starts_with(&format!("[{name}."))
        })
        .map(|i| i + 1)
    }

    /// Line of `key =` inside the `[block]` table, falling back to the header.
    fn key_line(&self, block: &str, key: &str) -> Option<usize> {
        let start = self.header_line(block)?;
        for (i, l) in self.text.lines().enumerate().skip(start) {
            let t = l.trim();
            if t.starts_with('[') {
                break;
            }
            if t.split('=').next().map(str::trim) == Some(key) {
                return Some(i + 1);
            }
        }
        Some(start)
    }

    fn err(&self, block: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.header_line(block),
            message: message.into(),
        }
    }

    fn key_err(&self, block: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.key_line(block, key),
            message: message.into(),
        }
    }
}

pub fn hash_text(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        let src = Source { text };
        let seed = raw.seed.unwrap_or(0);
        let group = resolve_group(&src, &raw.group)?;
        let family = resolve_family(&src, &raw.model, &group, seed)?;
        let system = resolve_system(&src, &raw.system, &group)?;
        let alphabet = system.alphabet().clone();
        let measure = raw
            .measure
            .as_ref()
            .map(|m| resolve_measure(&src, m, &alphabet, &system))
            .transpose()?;
        let spec = raw.spec.as_ref().map(|s| (s.radius, s.delta, s.engine, s.mode));
        if let Some((r, d, _, _)) = spec {
            if !(r >= 0.0) || !(d >= 0.0) {
                return Err(src.err("spec", "radius and delta must be nonnegative"));
            }
        }
        let schedule = raw
            .schedule
            .as_ref()
            .map(|s| resolve_schedule(&src, s, &group))
            .transpose()?;
        let regions = raw
            .rel_a
            .as_ref()
            .map(|r| {
                r.boxes
                    .iter()
                    .map(|b| Region::Box {
                        lower: b.lower.clone(),
                        upper: b.upper.clone(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let scan = raw
            .scan
            .as_ref()
            .map(|s| match s.family.as_str() {
                "bernoulli" => Ok(ScanFamily::Bernoulli { step: s.step }),
                "markov" => Ok(ScanFamily::Markov { step: s.step }),
                other => Err(src.key_err("scan", "family", format!("unknown scan family `{other}` (bernoulli, markov)"))),
            })
            .transpose()?;
        if let Some(f) = &scan {
            f.grid().map_err(|e| src.key_err("scan", "step", e.to_string()))?;
        }
        let mut limits = CountLimits::default();
        if let Some(l) = &raw.limits {
            if let Some(v) = l.max_nodes {
                limits.max_nodes = v;
            }
            if let Some(v) = l.max_dp_states {
                limits.max_dp_states = v;
            }
        }
        let output_dir = raw.output.as_ref().and_then(|o| o.dir.clone()).unwrap_or_else(|| "out".into());
        let output_name = raw
            .output
            .as_ref()
            .and_then(|o| o.name.clone())
            .unwrap_or_else(|| "experiment".into());
        let exp = Self {
            seed,
            group,
            family,
            system,
            measure,
            spec,
            schedule,
            regions,
            scan,
            verify: raw.verify.clone().unwrap_or_default(),
            output_dir,
            output_name,
            limits,
            hash: hash_text(text),
        };
        if let Some(s) = &exp.schedule {
            s.validate(EstimateMode::Top).map_err(|e| src.err("schedule", e.to_string()))?;
        }
        if !exp.regions.is_empty() {
            exp.problem(EstimateMode::RelA)
                .and_then(|p| p.validate().map_err(|e| src.err("rel-a", e.to_string())))
                .map_err(|e| ConfigError {
                    line: e.line.or(src.header_line("rel-a")),
                    message: e.message,
                })?;
        }
        Ok(exp)
    }

    /// The estimate problem for `mode`, checking that the blocks it needs are present.
    pub fn problem(&self, mode: EstimateMode) -> Result<EstimateProblem, ConfigError> {
        let no_line = |m: String| ConfigError { line: None, message: m };
        let schedule = self
            .schedule
            .clone()
            .ok_or_else(|| no_line("estimate needs a [schedule] block".into()))?;
        if schedule.deltas.is_empty() || schedule.epsilons.is_empty() {
            return Err(no_line("estimate needs schedule deltas and epsilons".into()));
        }
        let mut p = EstimateProblem::new(self.system.clone(), mode, self.family.clone(), schedule)
            .map_err(|e| no_line(e.to_string()))?
            .with_limits(self.limits);
        if mode.needs_measure() {
            let mu = self
                .measure
                .clone()
                .ok_or_else(|| no_line(format!("mode {} needs a [measure] block", mode.name())))?;
            p = p.with_measure(mu);
        } else if let Some(mu) = &self.measure {
            p = p.with_measure(mu.clone());
        }
        if mode == EstimateMode::RelA {
            p = p.with_regions(self.regions.clone());
        }
        p.validate().map_err(|e| no_line(e.to_string()))?;
        Ok(p)
    }

    /// The `[spec]` block as a map-space spec.
    pub fn map_spec(&self) -> Option<MapSpaceSpec> {
        self.spec
            .map(|(r, d, engine, mode)| MapSpaceSpec::new(self.group.ball(r), d, mode, engine))
    }
}

fn resolve_group(src: &Source, g: &GroupBlock) -> Result<GroupModel, ConfigError> {
    let need = |v: Option<usize>, key: &str| v.ok_or_else(|| src.err("group", format!("group kind `{}` needs `{key}`", g.kind)));
    let group = match g.kind.as_str() {
        "integers" => GroupModel::integers(),
        "lattice" => GroupModel::IntegerLattice { dim: need(g.dim, "dim")? },
        "free" => GroupModel::FreeGroup { rank: need(g.rank, "rank")? },
        "real" => GroupModel::RealLine {
            step: g.step.ok_or_else(|| src.err("group", "group kind `real` needs `step`"))?,
        },
        other => {
            return Err(src.key_err(
                "group",
                "kind",
                format!("unknown group kind `{other}` (integers, lattice, free, real)"),
            ))
        }
    };
    group.validate().map_err(|e| src.err("group", e.to_string()))?;
    Ok(group)
}

fn resolve_family(src: &Source, m: &ModelBlock, group: &GroupModel, seed: u64) -> Result<ModelFamily, ConfigError> {
    let family = match (m.kind.as_str(), *group) {
        ("cyclic", GroupModel::IntegerLattice { dim: 1 }) => ModelFamily::Cyclic,
        ("interval", GroupModel::IntegerLattice { dim: 1 }) => ModelFamily::Interval,
        ("torus", GroupModel::IntegerLattice { dim }) => ModelFamily::Torus { dim },
        ("schreier", GroupModel::FreeGroup { rank }) => ModelFamily::Schreier {
            rank,
            seed: m.seed.unwrap_or(seed),
        },
        ("circle", GroupModel::RealLine { step }) => ModelFamily::Circle { step },
        (kind @ ("cyclic" | "interval" | "torus" | "schreier" | "circle"), _) => {
            return Err(src.key_err("model", "kind", format!("model kind `{kind}` does not fit the group")))
        }
        (other, _) => {
            return Err(src.key_err(
                "model",
                "kind",
                format!("unknown model kind `{other}` (cyclic, interval, torus, schreier, circle)"),
            ))
        }
    };
    Ok(family)
}

fn resolve_offset(src: &Source, block: &str, group: &GroupModel, o: &Offset) -> Result<GroupElement, ConfigError> {
    let g = match (o, group) {
        (Offset::Int(k), GroupModel::IntegerLattice { dim: 1 }) => GroupElement::Lattice(vec![*k]),
        (Offset::Int(k), GroupModel::RealLine { .. }) => GroupElement::Real(*k),
        (Offset::Vector(v), GroupModel::IntegerLattice { .. }) => GroupElement::Lattice(v.clone()),
        (Offset::Word(w), GroupModel::FreeGroup { .. }) => {
            GroupElement::parse_word(w).map_err(|e| src.err(block, e.to_string()))?
        }
        _ => return Err(src.err(block, format!("offset {o:?} does not fit the group"))),
    };
    if !group.contains(&g) {
        return Err(src.err(block, format!("offset {g} is not an element of the group")));
    }
    Ok(g)
}

fn resolve_system(src: &Source, s: &SystemBlock, group: &GroupModel) -> Result<ShiftSystem, ConfigError> {
    let names = s.alphabet.clone().unwrap_or_else(|| vec!["0".into(), "1".into()]);
    let alphabet = Alphabet::new(names).map_err(|e| src.key_err("system", "alphabet", e.to_string()))?;
    let symbols = |v: &[String]| -> Result<Vec<Symbol>, ConfigError> {
        v.iter()
            .map(|n| {
                alphabet
                    .symbol(n)
                    .ok_or_else(|| src.err("system", format!("symbol `{n}` is not in the alphabet")))
            })
            .collect()
    };
    let mut forbidden = Vec::new();
    match s.preset.as_deref() {
        None | Some("full-shift") => {}
        Some("golden-mean") => {
            if alphabet.len() != 2 {
                return Err(src.key_err("system", "preset", "golden-mean needs a two-letter alphabet"));
            }
            let w = sofic_core::shift::interval_window(group, 2).map_err(|e| src.key_err("system", "preset", e.to_string()))?;
            forbidden.push(Pattern::new(w, vec![1, 1]).map_err(|e| src.err("system", e.to_string()))?);
        }
        Some("periodic") => {
            let period = s
                .period
                .as_ref()
                .ok_or_else(|| src.key_err("system", "preset", "periodic preset needs `period`"))?;
            let word = symbols(period)?;
            let block = s.block.unwrap_or(word.len() + 1);
            let sys = ShiftSystem::periodic_orbit(*group, alphabet.clone(), &word, block)
                .map_err(|e| src.key_err("system", "period", e.to_string()))?;
            forbidden.extend(sys.forbidden().iter().cloned());
        }
        Some(other) => {
            return Err(src.key_err(
                "system",
                "preset",
                format!("unknown preset `{other}` (full-shift, golden-mean, periodic)"),
            ))
        }
    }
    for f in &s.forbidden {
        let window = f
            .offsets
            .iter()
            .map(|o| resolve_offset(src, "system", group, o))
            .collect::<Result<Vec<_>, _>>()?;
        forbidden.push(Pattern::new(window, symbols(&f.symbols)?).map_err(|e| src.err("system", e.to_string()))?);
    }
    ShiftSystem::new(*group, alphabet, forbidden).map_err(|e| src.err("system", e.to_string()))
}

fn resolve_measure(
    src: &Source,
    m: &MeasureBlock,
    alphabet: &Alphabet,
    system: &ShiftSystem,
) -> Result<InvariantMeasure, ConfigError> {
    let mu = match m.kind.as_str() {
        "bernoulli" => InvariantMeasure::bernoulli(
            m.probs
                .clone()
                .ok_or_else(|| src.err("measure", "bernoulli measure needs `probs`"))?,
        ),
        "markov" => InvariantMeasure::markov(
            m.matrix
                .clone()
                .ok_or_else(|| src.err("measure", "markov measure needs `matrix`"))?,
        ),
        "point-mass" => {
            let name = m
                .symbol
                .as_ref()
                .ok_or_else(|| src.err("measure", "point-mass measure needs `symbol`"))?;
            let s = alphabet
                .symbol(name)
                .ok_or_else(|| src.key_err("measure", "symbol", format!("symbol `{name}` is not in the alphabet")))?;
            Ok(InvariantMeasure::point_mass(alphabet.len(), s))
        }
        other => {
            return Err(src.key_err(
                "measure",
                "kind",
                format!("unknown measure kind `{other}` (bernoulli, markov, point-mass)"),
            ))
        }
    }
    .map_err(|e| src.err("measure", e.to_string()))?;
    mu.validate_for(system).map_err(|e| src.err("measure", e.to_string()))?;
    Ok(mu)
}

fn resolve_schedule(src: &Source, s: &ScheduleBlock, group: &GroupModel) -> Result<Schedule, ConfigError> {
    let window = s
        .window
        .as_ref()
        .map(|w| {
            w.iter()
                .map(|o| resolve_offset(src, "schedule", group, o))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    Ok(Schedule {
        sizes: s.sizes.clone(),
        radii: s.radii.clone(),
        deltas: s.deltas.clone(),
        epsilons: s.epsilons.clone(),
        etas: s.etas.clone(),
        window,
        engines: s.engines.clone().unwrap_or_else(|| vec![Engine::Strict, Engine::Soft]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = r#"
seed = 3

[group]
kind = "integers"

[model]
kind = "cyclic"

[system]
preset = "golden-mean"

[schedule]
sizes = [8, 16]
radii = [1.0]
deltas = [0.01]
epsilons = [0.05]
"#;

    #[test]
    fn parses_golden_mean() {
        let e = Experiment::parse(GOLDEN).unwrap();
        assert_eq!(e.system.forbidden().len(), 1);
        assert_eq!(e.family, ModelFamily::Cyclic);
        assert_eq!(e.hash.len(), 64);
        assert!(e.problem(EstimateMode::Top).is_ok());
        let err = e.problem(EstimateMode::Measure).unwrap_err();
        assert!(err.message.contains("measure"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = GOLDEN.replace("kind = \"cyclic\"", "kind = \"cyclic\"\nsize = 3");
        let err = Experiment::parse(&text).unwrap_err();
        assert_eq!(err.line, Some(9), "{err}");
    }

    #[test]
    fn group_and_model_must_agree() {
        let text = GOLDEN.replace("kind = \"cyclic\"", "kind = \"circle\"");
        let err = Experiment::parse(&text).unwrap_err();
        assert_eq!(err.line, Some(8), "{err}");
        assert!(err.message.contains("does not fit"));
    }

    #[test]
    fn measure_must_live_on_the_system() {
        let text = format!("{GOLDEN}\n[measure]\nkind = \"point-mass\"\nsymbol = \"1\"\n");
        let err = Experiment::parse(&text).unwrap_err();
        assert!(err.message.contains("forbidden"), "{err}");
        assert_eq!(err.line, Some(19));
    }
}
