//! Target dynamics: full shifts and subshifts of finite type over a finite alphabet,
//! cylinder probabilities of Bernoulli and Markov measures, mollified metrics and
//! total-variation distance between pattern marginals.
//!
//! Configurations are never materialised. Everything is phrased in terms of patterns on
//! finite windows, with the left-shift convention `(g·x)(h) = x(g⁻¹h)`.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{GroupElement, GroupError, GroupModel, WeightedElementSet};
use crate::math::{self, TOL};
use crate::Symbol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShiftError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid alphabet: {0}")]
    Alphabet(String),
    #[error("invalid pattern: {0}")]
    Pattern(String),
    #[error("invalid measure: {0}")]
    Measure(String),
    #[error("Markov measures need an interval window on Z, got {0}")]
    NonIntervalWindow(String),
    #[error("operation needs a one-dimensional system: {0}")]
    NotOneDimensional(String),
    #[error("distributions live on different pattern universes")]
    UniverseMismatch,
    #[error("mollifier weights must be positive and sum to 1 (sum = {0})")]
    Unnormalized(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Result<Self, ShiftError> {
        if names.is_empty() {
            return Err(ShiftError::Alphabet("empty alphabet".into()));
        }
        if names.len() > Symbol::MAX as usize {
            return Err(ShiftError::Alphabet("too many symbols".into()));
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(ShiftError::Alphabet("symbol names must be unique".into()));
        }
        Ok(Self { names })
    }

    /// Symbols named `"0"`, `"1"`, ….
    pub fn numbered(k: usize) -> Self {
        Self {
            names: (0..k).map(|i| i.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.names.iter().position(|n| n == name).map(|i| i as Symbol)
    }
}

/// Symbols placed on a finite window: `x(window[j]) = symbols[j]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern {
    pub window: Vec<GroupElement>,
    pub symbols: Vec<Symbol>,
}

impl Pattern {
    pub fn new(window: Vec<GroupElement>, symbols: Vec<Symbol>) -> Result<Self, ShiftError> {
        if window.len() != symbols.len() || window.is_empty() {
            return Err(ShiftError::Pattern("window and symbols must have the same nonzero length".into()));
        }
        let distinct: BTreeSet<&GroupElement> = window.iter().collect();
        if distinct.len() != window.len() {
            return Err(ShiftError::Pattern("window elements must be distinct".into()));
        }
        Ok(Self { window, symbols })
    }

    /// A pattern on consecutive integer offsets `start, start+1, …`.
    pub fn on_interval(start: i64, symbols: Vec<Symbol>) -> Self {
        let window = (0..symbols.len() as i64)
            .map(|k| GroupElement::Lattice(vec![start + k]))
            .collect();
        Self { window, symbols }
    }

    pub fn symbol_at(&self, g: &GroupElement) -> Option<Symbol> {
        self.window.iter().position(|h| h == g).map(|j| self.symbols[j])
    }
}

/// One-dimensional offsets of a window (`ℤ` or grid `ℝ`).
pub fn window_offsets(window: &[GroupElement]) -> Option<Vec<i64>> {
    window
        .iter()
        .map(|g| match g {
            GroupElement::Lattice(v) if v.len() == 1 => Some(v[0]),
            GroupElement::Real(k) => Some(*k),
            _ => None,
        })
        .collect()
}

/// The window `{0, 1, …, len-1}` in a one-dimensional group.
pub fn interval_window(group: &GroupModel, len: usize) -> Result<Vec<GroupElement>, ShiftError> {
    match group {
        GroupModel::IntegerLattice { dim: 1 } => {
            Ok((0..len as i64).map(|k| GroupElement::Lattice(vec![k])).collect())
        }
        GroupModel::RealLine { .. } => Ok((0..len as i64).map(GroupElement::Real).collect()),
        g => Err(ShiftError::NotOneDimensional(alloc::format!("{g}"))),
    }
}

/// Index of a pattern in `A^F` (first window entry most significant).
pub fn pattern_index(symbols: &[Symbol], alphabet_size: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * alphabet_size + s as usize)
}

/// Inverse of [`pattern_index`].
pub fn pattern_symbols(mut index: usize, len: usize, alphabet_size: usize) -> Vec<Symbol> {
    let mut out = vec![0; len];
    for s in out.iter_mut().rev() {
        *s = (index % alphabet_size) as Symbol;
        index /= alphabet_size;
    }
    out
}

/// A subshift of `A^G` given by forbidden patterns; no patterns means the full shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSystem {
    group: GroupModel,
    alphabet: Alphabet,
    forbidden: Vec<Pattern>,
}

impl ShiftSystem {
    pub fn new(group: GroupModel, alphabet: Alphabet, forbidden: Vec<Pattern>) -> Result<Self, ShiftError> {
        group.validate()?;
        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(forbidden.len());
        for p in forbidden {
            let p = Pattern::new(p.window, p.symbols)?;
            for g in &p.window {
                if !group.contains(g) {
                    return Err(GroupError::Mismatch {
                        model: alloc::format!("{group}"),
                        element: alloc::format!("{g}"),
                    }
                    .into());
                }
            }
            if p.symbols.iter().any(|&s| s as usize >= alphabet.len()) {
                return Err(ShiftError::Pattern("symbol outside the alphabet".into()));
            }
            let mut key: Vec<(GroupElement, Symbol)> =
                p.window.iter().cloned().zip(p.symbols.iter().copied()).collect();
            key.sort();
            if seen.insert(key) {
                kept.push(p);
            }
        }
        let sys = Self { group, alphabet, forbidden: kept };
        if sys.is_nonempty() == Some(false) {
            return Err(ShiftError::Pattern("system has no configurations".into()));
        }
        Ok(sys)
    }

    pub fn full_shift(group: GroupModel, symbols: usize) -> Result<Self, ShiftError> {
        Self::new(group, Alphabet::numbered(symbols), Vec::new())
    }

    /// Binary `ℤ`-shift with no two adjacent 1s.
    pub fn golden_mean() -> Self {
        Self::new(
            GroupModel::integers(),
            Alphabet::numbered(2),
            vec![Pattern::on_interval(0, vec![1, 1])],
        )
        .expect("golden mean shift is well formed")
    }

    /// One-dimensional SFT whose allowed words of length `len` are exactly `allowed`.
    pub fn from_allowed_blocks(
        group: GroupModel,
        alphabet: Alphabet,
        len: usize,
        allowed: &[Vec<Symbol>],
    ) -> Result<Self, ShiftError> {
        let window = interval_window(&group, len)?;
        let k = alphabet.len();
        let allowed: BTreeSet<usize> = allowed.iter().map(|b| pattern_index(b, k)).collect();
        let total = k.checked_pow(len as u32).ok_or_else(|| ShiftError::Pattern("block too long".into()))?;
        let forbidden = (0..total)
            .filter(|i| !allowed.contains(i))
            .map(|i| Pattern {
                window: window.clone(),
                symbols: pattern_symbols(i, len, k),
            })
            .collect();
        Self::new(group, alphabet, forbidden)
    }

    /// The orbit closure of the periodic configuration `…www…` (a finite rotation),
    /// presented by its allowed blocks of length `block_len`.
    pub fn periodic_orbit(
        group: GroupModel,
        alphabet: Alphabet,
        word: &[Symbol],
        block_len: usize,
    ) -> Result<Self, ShiftError> {
        if word.is_empty() {
            return Err(ShiftError::Pattern("empty period".into()));
        }
        let p = word.len();
        let blocks: Vec<Vec<Symbol>> = (0..p)
            .map(|s| (0..block_len).map(|j| word[(s + j) % p]).collect())
            .collect();
        Self::from_allowed_blocks(group, alphabet, block_len, &blocks)
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn forbidden(&self) -> &[Pattern] {
        &self.forbidden
    }

    pub fn is_full_shift(&self) -> bool {
        self.forbidden.is_empty()
    }

    /// The same system with every symbol `s` renamed to `perm[s]`.
    pub fn relabel(&self, perm: &[Symbol]) -> Result<Self, ShiftError> {
        check_perm(perm, self.alphabet.len())?;
        let mut names = vec![String::new(); self.alphabet.len()];
        for (s, name) in self.alphabet.names.iter().enumerate() {
            names[perm[s] as usize] = name.clone();
        }
        let forbidden = self
            .forbidden
            .iter()
            .map(|p| Pattern {
                window: p.window.clone(),
                symbols: p.symbols.iter().map(|&s| perm[s as usize]).collect(),
            })
            .collect();
        Ok(Self {
            group: self.group,
            alphabet: Alphabet { names },
            forbidden,
        })
    }

    /// Width of the smallest interval containing each forbidden window, maximised over
    /// patterns. `None` for systems that are not one-dimensional.
    pub fn memory_span(&self) -> Option<usize> {
        let mut span = 1;
        for p in &self.forbidden {
            let offs = window_offsets(&p.window)?;
            let lo = *offs.iter().min()?;
            let hi = *offs.iter().max()?;
            span = span.max((hi - lo + 1) as usize);
        }
        match self.group {
            GroupModel::IntegerLattice { dim: 1 } | GroupModel::RealLine { .. } => Some(span),
            _ => None,
        }
    }

    /// Whether the word `x(0)x(1)…x(len-1)` avoids every forbidden pattern that fits
    /// inside it.
    pub fn word_is_allowed(&self, word: &[Symbol]) -> bool {
        self.forbidden.iter().all(|p| {
            let Some(offs) = window_offsets(&p.window) else { return true };
            let lo = *offs.iter().min().unwrap();
            let hi = *offs.iter().max().unwrap();
            let width = (hi - lo + 1) as usize;
            if width > word.len() {
                return true;
            }
            (0..=word.len() - width).all(|start| {
                !offs
                    .iter()
                    .zip(&p.symbols)
                    .all(|(&o, &s)| word[start + (o - lo) as usize] == s)
            })
        })
    }

    /// 0/1 transfer matrix `T[a][b] = 1` iff `ab` is allowed, for systems of memory
    /// span at most 2.
    pub fn transfer_matrix(&self) -> Result<Vec<Vec<u8>>, ShiftError> {
        match self.memory_span() {
            Some(s) if s <= 2 => {}
            _ => {
                return Err(ShiftError::NotOneDimensional(
                    "transfer matrix needs a nearest-neighbour system on Z".into(),
                ))
            }
        }
        let k = self.alphabet.len();
        let mut t = vec![vec![0u8; k]; k];
        for a in 0..k {
            for b in 0..k {
                t[a][b] = self.word_is_allowed(&[a as Symbol, b as Symbol]) as u8;
            }
        }
        Ok(t)
    }

    /// Nonemptiness for one-dimensional systems: the de Bruijn graph of allowed
    /// blocks must contain a cycle. `None` when undecided (higher-rank groups).
    pub fn is_nonempty(&self) -> Option<bool> {
        let span = self.memory_span()?;
        let k = self.alphabet.len();
        let node_len = span.saturating_sub(1).max(1);
        let nodes = k.checked_pow(node_len as u32)?;
        if nodes > 1 << 16 {
            return None;
        }
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        let mut alive = vec![false; nodes];
        for v in 0..nodes {
            let word = pattern_symbols(v, node_len, k);
            if !self.word_is_allowed(&word) {
                continue;
            }
            alive[v] = true;
            for s in 0..k {
                let mut w = word.clone();
                w.push(s as Symbol);
                if self.word_is_allowed(&w) {
                    succ[v].push(pattern_index(&w[1..], k));
                }
            }
        }
        // repeatedly strip nodes with no live successor
        let mut changed = true;
        while changed {
            changed = false;
            for v in 0..nodes {
                if alive[v] && !succ[v].iter().any(|&u| alive[u]) {
                    alive[v] = false;
                    changed = true;
                }
            }
        }
        Some(alive.iter().any(|&a| a))
    }
}

fn check_perm(perm: &[Symbol], k: usize) -> Result<(), ShiftError> {
    let set: BTreeSet<Symbol> = perm.iter().copied().collect();
    if perm.len() != k || set.len() != k || set.iter().any(|&s| s as usize >= k) {
        return Err(ShiftError::Alphabet("relabeling is not a permutation".into()));
    }
    Ok(())
}

/// A `G`-invariant measure on a shift system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InvariantMeasure {
    Bernoulli { probs: Vec<f64> },
    /// Stationary Markov chain on `ℤ`; `matrix[a][b]` is the probability that
    /// `x(i+1) = b` given `x(i) = a`.
    Markov { matrix: Vec<Vec<f64>>, stationary: Vec<f64> },
}

impl InvariantMeasure {
    pub fn bernoulli(probs: Vec<f64>) -> Result<Self, ShiftError> {
        check_distribution(&probs)?;
        Ok(InvariantMeasure::Bernoulli { probs })
    }

    /// Markov measure with the stationary vector solved from `πP = π`.
    pub fn markov(matrix: Vec<Vec<f64>>) -> Result<Self, ShiftError> {
        let k = matrix.len();
        if k == 0 || matrix.iter().any(|r| r.len() != k) {
            return Err(ShiftError::Measure("transition matrix must be square".into()));
        }
        for row in &matrix {
            check_distribution(row)?;
        }
        let stationary = stationary_vector(&matrix)?;
        Ok(InvariantMeasure::Markov { matrix, stationary })
    }

    /// Point mass on the constant configuration `s`.
    pub fn point_mass(symbols: usize, s: Symbol) -> Self {
        let mut probs = vec![0.0; symbols];
        probs[s as usize] = 1.0;
        InvariantMeasure::Bernoulli { probs }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            InvariantMeasure::Bernoulli { probs } => probs.len(),
            InvariantMeasure::Markov { stationary, .. } => stationary.len(),
        }
    }

    /// The natural window for this measure's marginals: `{0}` for Bernoulli, `{0, 1}`
    /// for Markov.
    pub fn natural_window(&self, group: &GroupModel) -> Result<Vec<GroupElement>, ShiftError> {
        match self {
            InvariantMeasure::Bernoulli { .. } => Ok(vec![group.identity()]),
            InvariantMeasure::Markov { .. } => interval_window(group, 2),
        }
    }

    /// Checks alphabet size, stationarity, and that the measure gives no mass to
    /// forbidden patterns of `system`.
    pub fn validate_for(&self, system: &ShiftSystem) -> Result<(), ShiftError> {
        if self.alphabet_size() != system.alphabet().len() {
            return Err(ShiftError::Measure("alphabet size differs from the system".into()));
        }
        if let InvariantMeasure::Markov { matrix, stationary } = self {
            if !matches!(system.group(), GroupModel::IntegerLattice { dim: 1 }) {
                return Err(ShiftError::Measure("Markov measures are only defined on Z-systems".into()));
            }
            for b in 0..stationary.len() {
                let s: f64 = (0..stationary.len()).map(|a| stationary[a] * matrix[a][b]).sum();
                if math::abs(s - stationary[b]) > 1e-9 {
                    return Err(ShiftError::Measure("stationary vector is not invariant".into()));
                }
            }
        }
        for p in system.forbidden() {
            let prob = match self.pattern_probability(p) {
                Ok(v) => v,
                // Markov on a non-interval forbidden window: fall back to its hull
                Err(ShiftError::NonIntervalWindow(_)) => continue,
                Err(e) => return Err(e),
            };
            if prob > 1e-12 {
                return Err(ShiftError::Measure(alloc::format!(
                    "forbidden pattern {:?} has probability {prob}",
                    p.symbols
                )));
            }
        }
        Ok(())
    }

    /// Cylinder probability `μ{x : x(F) = q}`.
    pub fn pattern_probability(&self, q: &Pattern) -> Result<f64, ShiftError> {
        match self {
            InvariantMeasure::Bernoulli { probs } => Ok(q
                .symbols
                .iter()
                .map(|&s| probs.get(s as usize).copied().unwrap_or(0.0))
                .product()),
            InvariantMeasure::Markov { matrix, stationary } => {
                let mut cells: Vec<(i64, Symbol)> = match window_offsets(&q.window) {
                    Some(offs) if q.window.iter().all(|g| matches!(g, GroupElement::Lattice(_))) => {
                        offs.into_iter().zip(q.symbols.iter().copied()).collect()
                    }
                    _ => return Err(ShiftError::NonIntervalWindow(alloc::format!("{:?}", q.window))),
                };
                cells.sort();
                if cells.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
                    return Err(ShiftError::NonIntervalWindow(alloc::format!("{:?}", q.window)));
                }
                let k = stationary.len();
                if cells.iter().any(|&(_, s)| s as usize >= k) {
                    return Ok(0.0);
                }
                let mut p = stationary[cells[0].1 as usize];
                for w in cells.windows(2) {
                    p *= matrix[w[0].1 as usize][w[1].1 as usize];
                }
                Ok(p)
            }
        }
    }

    /// The marginal on `A^F`, indexed by [`pattern_index`] in window order.
    pub fn marginal(&self, window: &[GroupElement]) -> Result<MarginalDistribution, ShiftError> {
        let k = self.alphabet_size();
        let total = k
            .checked_pow(window.len() as u32)
            .filter(|&t| t <= 1 << 20)
            .ok_or_else(|| ShiftError::Pattern("window too large".into()))?;
        let masses = (0..total)
            .map(|i| {
                self.pattern_probability(&Pattern {
                    window: window.to_vec(),
                    symbols: pattern_symbols(i, window.len(), k),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MarginalDistribution {
            alphabet_size: k,
            window_len: window.len(),
            masses,
            undefined: 0.0,
        })
    }

    /// The pushforward under the symbol renaming `s ↦ perm[s]`.
    pub fn relabel(&self, perm: &[Symbol]) -> Result<Self, ShiftError> {
        check_perm(perm, self.alphabet_size())?;
        let k = perm.len();
        Ok(match self {
            InvariantMeasure::Bernoulli { probs } => {
                let mut out = vec![0.0; k];
                for (s, p) in probs.iter().enumerate() {
                    out[perm[s] as usize] = *p;
                }
                InvariantMeasure::Bernoulli { probs: out }
            }
            InvariantMeasure::Markov { matrix, stationary } => {
                let mut m = vec![vec![0.0; k]; k];
                let mut st = vec![0.0; k];
                for a in 0..k {
                    st[perm[a] as usize] = stationary[a];
                    for b in 0..k {
                        m[perm[a] as usize][perm[b] as usize] = matrix[a][b];
                    }
                }
                InvariantMeasure::Markov { matrix: m, stationary: st }
            }
        })
    }
}

fn check_distribution(p: &[f64]) -> Result<(), ShiftError> {
    if p.is_empty() || p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(ShiftError::Measure("probabilities must be finite and nonnegative".into()));
    }
    let s: f64 = p.iter().sum();
    if math::abs(s - 1.0) > 1e-9 {
        return Err(ShiftError::Measure(alloc::format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// Solves `πP = π`, `Σπ = 1` by Gaussian elimination with partial pivoting.
fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>, ShiftError> {
    let k = p.len();
    // rows: (Pᵀ - I) with the last equation replaced by the normalisation
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| p[j][i] - if i == j { 1.0 } else { 0.0 }).collect();
            row.push(0.0);
            row
        })
        .collect();
    a[k - 1] = vec![1.0; k + 1];
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| math::abs(a[x][col]).total_cmp(&math::abs(a[y][col])))
            .unwrap();
        if math::abs(a[pivot][col]) < 1e-12 {
            return Err(ShiftError::Measure("stationary distribution is not unique".into()));
        }
        a.swap(col, pivot);
        for row in 0..k {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=k {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    let pi: Vec<f64> = (0..k).map(|i| (a[i][k] / a[i][i]).max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|x| x / s).collect())
}

/// A distribution on `A^F` plus a bucket for points whose window is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDistribution {
    pub alphabet_size: usize,
    pub window_len: usize,
    pub masses: Vec<f64>,
    pub undefined: f64,
}

impl MarginalDistribution {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.undefined
    }

    /// Pattern probability by symbols.
    pub fn mass(&self, symbols: &[Symbol]) -> f64 {
        self.masses[pattern_index(symbols, self.alphabet_size)]
    }
}

/// Half the `ℓ¹` distance, undefined buckets included.
pub fn tv_distance(m1: &MarginalDistribution, m2: &MarginalDistribution) -> Result<f64, ShiftError> {
    if m1.alphabet_size != m2.alphabet_size
        || m1.window_len != m2.window_len
        || m1.masses.len() != m2.masses.len()
    {
        return Err(ShiftError::UniverseMismatch);
    }
    let l1: f64 = m1
        .masses
        .iter()
        .zip(&m2.masses)
        .map(|(a, b)| math::abs(a - b))
        .sum::<f64>()
        + math::abs(m1.undefined - m2.undefined);
    Ok((0.5 * l1).min(1.0))
}

/// `ρ_f(x, y) = Σ_g f(g)·[x(g⁻¹) ≠ y(g⁻¹)]`: the identity-coordinate metric averaged
/// over translates by a positive normalized weight `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedMetric {
    group: GroupModel,
    weights: WeightedElementSet,
}

impl MollifiedMetric {
    /// `f` holds the quadrature products `f(g)·λ(g)`; they must be positive and sum to 1.
    pub fn new(group: GroupModel, weights: WeightedElementSet) -> Result<Self, ShiftError> {
        let sum: f64 = weights.elements.iter().map(|(_, w)| w).sum();
        if weights.is_empty() || weights.elements.iter().any(|(_, w)| !(*w > 0.0)) || math::abs(sum - 1.0) > TOL {
            return Err(ShiftError::Unnormalized(sum));
        }
        for g in weights.iter() {
            if !group.contains(g) {
                return Err(GroupError::Mismatch {
                    model: alloc::format!("{group}"),
                    element: alloc::format!("{g}"),
                }
                .into());
            }
        }
        Ok(Self { group, weights })
    }

    /// Uniform weights on a set.
    pub fn uniform(group: GroupModel, support: &WeightedElementSet) -> Result<Self, ShiftError> {
        let m = support.len() as f64;
        let weights = WeightedElementSet::new(support.iter().cloned().map(|g| (g, 1.0 / m)).collect())?;
        Self::new(group, weights)
    }

    pub fn weights(&self) -> &WeightedElementSet {
        &self.weights
    }

    /// Evaluates on two patterns whose windows contain `supp(f)⁻¹`.
    pub fn distance(&self, x: &Pattern, y: &Pattern) -> Result<f64, ShiftError> {
        let mut d = 0.0;
        for (g, w) in &self.weights.elements {
            let at = self.group.inverse(g)?;
            let (a, b) = match (x.symbol_at(&at), y.symbol_at(&at)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(ShiftError::Pattern(alloc::format!(
                        "pattern does not cover coordinate {at}"
                    )))
                }
            };
            if a != b {
                d += w;
            }
        }
        Ok(d.min(1.0))
    }
}

/// The discrete observable metric `ρ(x, y) = [x(e) ≠ y(e)]`.
pub fn observable_distance(group: &GroupModel, x: &Pattern, y: &Pattern) -> Result<f64, ShiftError> {
    let e = group.identity();
    match (x.symbol_at(&e), y.symbol_at(&e)) {
        (Some(a), Some(b)) => Ok(if a == b { 0.0 } else { 1.0 }),
        _ => Err(ShiftError::Pattern("pattern does not cover the identity".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_parry() -> InvariantMeasure {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        InvariantMeasure::markov(vec![vec![1.0 / phi, 1.0 / (phi * phi)], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn pattern_probability_examples() {
        let b = InvariantMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        assert_eq!(b.pattern_probability(&Pattern::on_interval(0, vec![0])).unwrap(), 0.5);
        let b = InvariantMeasure::bernoulli(vec![0.25, 0.75]).unwrap();
        assert_eq!(b.pattern_probability(&Pattern::on_interval(0, vec![0, 0])).unwrap(), 0.0625);
        let m = golden_parry();
        assert_eq!(m.pattern_probability(&Pattern::on_interval(0, vec![1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn markov_rejects_non_interval_windows() {
        let m = golden_parry();
        let q = Pattern::new(
            vec![GroupElement::Lattice(vec![0]), GroupElement::Lattice(vec![2])],
            vec![0, 0],
        )
        .unwrap();
        assert!(matches!(m.pattern_probability(&q), Err(ShiftError::NonIntervalWindow(_))));
    }

    #[test]
    fn parry_stationary_vector() {
        let InvariantMeasure::Markov { stationary, .. } = golden_parry() else { unreachable!() };
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let expect0 = phi * phi / (1.0 + phi * phi);
        assert!((stationary[0] - expect0).abs() < 1e-12);
    }

    #[test]
    fn measures_validate_against_system() {
        let gm = ShiftSystem::golden_mean();
        golden_parry().validate_for(&gm).unwrap();
        let b = InvariantMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        assert!(b.validate_for(&gm).is_err());
        InvariantMeasure::point_mass(2, 0).validate_for(&gm).unwrap();
    }

    #[test]
    fn mollified_examples() {
        let zz = GroupModel::integers();
        let f = MollifiedMetric::uniform(zz, &zz.ball(1.0)).unwrap();
        let x = Pattern::on_interval(-1, vec![0, 0, 0]);
        let y = Pattern::on_interval(-1, vec![0, 1, 0]);
        assert!((f.distance(&x, &y).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(f.distance(&x, &x).unwrap(), 0.0);
        let z = Pattern::on_interval(-1, vec![1, 1, 1]);
        assert!((f.distance(&x, &z).unwrap() - 1.0).abs() < 1e-12);
        let unnormalized = WeightedElementSet::from_elements(&zz, vec![zz.identity()]).unwrap();
        let mut half = unnormalized.clone();
        half.elements[0].1 = 0.5;
        assert!(matches!(MollifiedMetric::new(zz, half), Err(ShiftError::Unnormalized(_))));
    }

    #[test]
    fn tv_examples() {
        let d = |m: Vec<f64>| MarginalDistribution { alphabet_size: 2, window_len: 1, masses: m, undefined: 0.0 };
        assert_eq!(tv_distance(&d(vec![0.5, 0.5]), &d(vec![0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(tv_distance(&d(vec![1.0, 0.0]), &d(vec![0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(tv_distance(&d(vec![0.5, 0.5]), &d(vec![0.75, 0.25])).unwrap(), 0.25);
        let other = MarginalDistribution { alphabet_size: 2, window_len: 2, masses: vec![0.25; 4], undefined: 0.0 };
        assert!(matches!(tv_distance(&d(vec![0.5, 0.5]), &other), Err(ShiftError::UniverseMismatch)));
    }

    #[test]
    fn golden_mean_transfer_matrix() {
        assert_eq!(ShiftSystem::golden_mean().transfer_matrix().unwrap(), vec![vec![1, 1], vec![1, 0]]);
    }

    #[test]
    fn empty_system_rejected() {
        let sys = ShiftSystem::new(
            GroupModel::integers(),
            Alphabet::numbered(2),
            vec![Pattern::on_interval(0, vec![0]), Pattern::on_interval(0, vec![1])],
        );
        assert!(sys.is_err());
    }

    #[test]
    fn periodic_orbit_words() {
        let sys = ShiftSystem::periodic_orbit(GroupModel::integers(), Alphabet::numbered(2), &[0, 0, 1, 1], 3).unwrap();
        assert!(sys.word_is_allowed(&[0, 0, 1, 1, 0, 0]));
        assert!(!sys.word_is_allowed(&[0, 1, 0]));
        assert!(!sys.word_is_allowed(&[0, 0, 0]));
    }

    #[test]
    fn relabel_swaps_forbidden_symbols() {
        let gm = ShiftSystem::golden_mean().relabel(&[1, 0]).unwrap();
        assert!(gm.word_is_allowed(&[1, 1, 0, 1]));
        assert!(!gm.word_is_allowed(&[0, 0]));
        let m = golden_parry().relabel(&[1, 0]).unwrap();
        m.validate_for(&gm).unwrap();
    }

    #[test]
    fn marginals_are_shift_invariant() {
        let zz = GroupModel::integers();
        for m in [golden_parry(), InvariantMeasure::bernoulli(vec![0.3, 0.7]).unwrap()] {
            for len in 1..4 {
                let f = interval_window(&zz, len).unwrap();
                let shifted: Vec<GroupElement> = f
                    .iter()
                    .map(|g| zz.multiply(&GroupElement::Lattice(vec![5]), g).unwrap())
                    .collect();
                let a = m.marginal(&f).unwrap();
                let b = m.marginal(&shifted).unwrap();
                assert!(tv_distance(&a, &b).unwrap() < 1e-15);
                assert!((a.total() - 1.0).abs() < 1e-12);
            }
        }
    }
}
