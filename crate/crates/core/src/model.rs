//! Finite local `G`-spaces.
//!
//! A model is a finite set of equally weighted points together with a partial action
//! stored as one table per generator (and one for its inverse). A group element acts by
//! composing generator tables letter by letter, right to left: `(g₁g₂).p = g₁.(g₂.p)`.
//! The composition identity `g.h.p = gh.p` is therefore not automatic for partial
//! tables; the good-point set `M[U]` records where it holds.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{GroupElement, GroupError, GroupModel, Letter, WeightedElementSet};
use crate::math::{self, TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("model needs at least one point")]
    Empty,
    #[error("input {0} is not a permutation")]
    NotBijective(usize),
    #[error("permutations have different sizes")]
    SizeMismatch,
    #[error("incompatible grid: length {length} is not a positive multiple of step {step}")]
    IncompatibleGrid { length: f64, step: f64 },
    #[error("element {element} is undefined at point {point}")]
    UndefinedAction { element: String, point: usize },
    #[error("table for generator {generator} violates the inverse axiom at point {point}")]
    InverseAxiom { generator: usize, point: usize },
    #[error("point {0} is out of range")]
    PointOutOfRange(usize),
    #[error("{0}")]
    Invalid(String),
}

/// How a model was built. Counting engines use this to pick specialised paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    Cyclic { n: usize },
    Torus { dims: Vec<usize> },
    Schreier { n: usize },
    Circle { length: f64, step: f64 },
    Interval { n: usize },
    Custom,
}

/// Forward and inverse table of one generator.
#[derive(Debug, Clone, PartialEq, Eq)]
struct GeneratorTable {
    forward: Vec<Option<u32>>,
    backward: Vec<Option<u32>>,
}

/// A finite weighted local `G`-space.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGSpace {
    group: GroupModel,
    weight: f64,
    tables: Vec<GeneratorTable>,
    kind: ModelKind,
    label: String,
}

fn table_from_map(n: usize, f: impl Fn(usize) -> Option<usize>) -> GeneratorTable {
    let forward: Vec<Option<u32>> = (0..n).map(|p| f(p).map(|q| q as u32)).collect();
    let mut backward = vec![None; n];
    for (p, q) in forward.iter().enumerate() {
        if let Some(q) = q {
            backward[*q as usize] = Some(p as u32);
        }
    }
    GeneratorTable { forward, backward }
}

impl LocalGSpace {
    /// `ℤ` acting on `ℤ/nℤ` by translation.
    pub fn cyclic_quotient(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Empty);
        }
        Ok(Self {
            group: GroupModel::integers(),
            weight: 1.0,
            tables: vec![table_from_map(n, |p| Some((p + 1) % n))],
            kind: ModelKind::Cyclic { n },
            label: alloc::format!("Z/{n}Z"),
        })
    }

    /// `ℤᵈ` acting componentwise on `∏ ℤ/nⱼℤ`. Points are indexed row-major.
    pub fn torus_quotient(dims: &[usize]) -> Result<Self, ModelError> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(ModelError::Empty);
        }
        let n: usize = dims.iter().product();
        let strides: Vec<usize> = (0..dims.len())
            .map(|j| dims[j + 1..].iter().product())
            .collect();
        let tables = (0..dims.len())
            .map(|j| {
                table_from_map(n, |p| {
                    let c = (p / strides[j]) % dims[j];
                    let c2 = (c + 1) % dims[j];
                    Some(p - c * strides[j] + c2 * strides[j])
                })
            })
            .collect();
        Ok(Self {
            group: GroupModel::IntegerLattice { dim: dims.len() },
            weight: 1.0,
            tables,
            kind: ModelKind::Torus { dims: dims.to_vec() },
            label: alloc::format!("torus {dims:?}"),
        })
    }

    /// `ℤ` acting partially on `{0, …, n-1}` by translation; `k.p` is undefined when
    /// `p + k` leaves the interval.
    pub fn interval(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Empty);
        }
        Ok(Self {
            group: GroupModel::integers(),
            weight: 1.0,
            tables: vec![table_from_map(n, |p| (p + 1 < n).then_some(p + 1))],
            kind: ModelKind::Interval { n },
            label: alloc::format!("interval [0,{n})"),
        })
    }

    /// Free group acting through one permutation per generator.
    pub fn schreier_space(perms: &[Vec<u32>]) -> Result<Self, ModelError> {
        let n = perms.first().map(Vec::len).ok_or(ModelError::Empty)?;
        if n == 0 {
            return Err(ModelError::Empty);
        }
        let mut tables = Vec::with_capacity(perms.len());
        for (i, perm) in perms.iter().enumerate() {
            if perm.len() != n {
                return Err(ModelError::SizeMismatch);
            }
            let mut seen = vec![false; n];
            for &q in perm {
                let q = q as usize;
                if q >= n || seen[q] {
                    return Err(ModelError::NotBijective(i));
                }
                seen[q] = true;
            }
            tables.push(table_from_map(n, |p| Some(perm[p] as usize)));
        }
        Ok(Self {
            group: GroupModel::FreeGroup { rank: perms.len() },
            weight: 1.0,
            tables,
            kind: ModelKind::Schreier { n },
            label: alloc::format!("Schreier space, {} generators, {n} points", perms.len()),
        })
    }

    /// Schreier space with uniformly random permutations drawn from `seed`.
    pub fn random_schreier(n: usize, rank: usize, seed: u64) -> Result<Self, ModelError> {
        let perms = random_permutations(n, rank, seed);
        Self::schreier_space(&perms)
    }

    /// Grid-discretized `ℝ/Lℤ`: `L/h` cells of width `h`, translations by grid steps.
    pub fn circle_space(length: f64, step: f64) -> Result<Self, ModelError> {
        let ratio = length / step;
        let n = math::round(ratio);
        if !(step > 0.0) || !(n >= 1.0) || math::abs(ratio - n) > 1e-9 * ratio.max(1.0) {
            return Err(ModelError::IncompatibleGrid { length, step });
        }
        let n = n as usize;
        Ok(Self {
            group: GroupModel::RealLine { step },
            weight: step,
            tables: vec![table_from_map(n, |p| Some((p + 1) % n))],
            kind: ModelKind::Circle { length, step },
            label: alloc::format!("R/{length}Z, step {step}"),
        })
    }

    /// Builds a model from raw generator tables without checking the inverse axiom.
    ///
    /// Intended for fixtures that exercise [`validate`](Self::validate) and
    /// [`check_local_mp`] on malformed input.
    pub fn from_raw_tables(
        group: GroupModel,
        weight: f64,
        forward: Vec<Vec<Option<u32>>>,
        backward: Vec<Vec<Option<u32>>>,
        label: &str,
    ) -> Result<Self, ModelError> {
        group.validate()?;
        let n = forward.first().map(Vec::len).ok_or(ModelError::Empty)?;
        if n == 0 || !(weight > 0.0) {
            return Err(ModelError::Empty);
        }
        if forward.len() != group.generator_count()
            || backward.len() != forward.len()
            || forward.iter().chain(&backward).any(|t| t.len() != n)
        {
            return Err(ModelError::SizeMismatch);
        }
        if forward
            .iter()
            .chain(&backward)
            .flatten()
            .flatten()
            .any(|&q| q as usize >= n)
        {
            return Err(ModelError::Invalid("table entry out of range".into()));
        }
        let tables = forward
            .into_iter()
            .zip(backward)
            .map(|(forward, backward)| GeneratorTable { forward, backward })
            .collect();
        Ok(Self {
            group,
            weight,
            tables,
            kind: ModelKind::Custom,
            label: label.into(),
        })
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.tables.first().map_or(0, |t| t.forward.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight of each point.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Total volume `n · weight`.
    pub fn volume(&self) -> f64 {
        self.len() as f64 * self.weight
    }

    /// Generator permutations, when every table is total and bijective.
    pub fn permutations(&self) -> Option<Vec<Vec<u32>>> {
        self.tables
            .iter()
            .map(|t| t.forward.iter().copied().collect::<Option<Vec<u32>>>())
            .collect()
    }

    /// Cell center of a circle point.
    pub fn coordinate(&self, p: usize) -> Option<f64> {
        match self.kind {
            ModelKind::Circle { step, .. } if p < self.len() => Some((p as f64 + 0.5) * step),
            _ => None,
        }
    }

    /// Circle point whose cell contains `x` (taken mod `L`).
    pub fn point_at(&self, x: f64) -> Option<usize> {
        match self.kind {
            ModelKind::Circle { length, step } => {
                let y = x - math::floor(x / length) * length;
                Some((math::floor(y / step) as usize).min(self.len() - 1))
            }
            _ => None,
        }
    }

    fn apply_letter(&self, gen: usize, inverse: bool, p: u32) -> Option<u32> {
        let t = &self.tables[gen];
        let table = if inverse { &t.backward } else { &t.forward };
        table[p as usize]
    }

    /// The generator word evaluated for `g`, leftmost letter first.
    fn letters(&self, g: &GroupElement) -> Result<Vec<(usize, bool, u64)>, ModelError> {
        if !self.group.contains(g) {
            return Err(GroupError::Mismatch {
                model: alloc::format!("{}", self.group),
                element: alloc::format!("{g}"),
            }
            .into());
        }
        Ok(match g {
            // canonical word e₁^{v₁} ⋯ e_d^{v_d}
            GroupElement::Lattice(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(j, &x)| (j, x < 0, x.unsigned_abs()))
                .collect(),
            GroupElement::Word(w) => w
                .iter()
                .map(|l: &Letter| (l.generator as usize, l.inverse, 1))
                .collect(),
            GroupElement::Real(k) if *k != 0 => vec![(0, *k < 0, k.unsigned_abs())],
            GroupElement::Real(_) => Vec::new(),
        })
    }

    /// `g.p`, or `None` where the partial action is undefined.
    pub fn act(&self, g: &GroupElement, p: usize) -> Result<Option<usize>, ModelError> {
        if p >= self.len() {
            return Err(ModelError::PointOutOfRange(p));
        }
        let word = self.letters(g)?;
        Ok(self.act_word(&word, p as u32).map(|q| q as usize))
    }

    fn act_word(&self, word: &[(usize, bool, u64)], p: u32) -> Option<u32> {
        let mut q = p;
        for &(gen, inv, times) in word.iter().rev() {
            for _ in 0..times {
                q = self.apply_letter(gen, inv, q)?;
            }
        }
        Some(q)
    }

    /// `g.p` for every point.
    pub fn action_table(&self, g: &GroupElement) -> Result<Vec<Option<u32>>, ModelError> {
        let word = self.letters(g)?;
        Ok((0..self.len() as u32).map(|p| self.act_word(&word, p)).collect())
    }

    /// Checks the identity and inverse axioms on the stored tables.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, t) in self.tables.iter().enumerate() {
            for (p, q) in t.forward.iter().enumerate() {
                if let Some(q) = q {
                    if t.backward[*q as usize] != Some(p as u32) {
                        return Err(ModelError::InverseAxiom { generator: i, point: p });
                    }
                }
            }
            for (q, p) in t.backward.iter().enumerate() {
                if let Some(p) = p {
                    if t.forward[*p as usize] != Some(q as u32) {
                        return Err(ModelError::InverseAxiom { generator: i, point: q });
                    }
                }
            }
        }
        Ok(())
    }

    /// A deterministic point order in which neighbours appear early: `0..n` for
    /// cyclic-type models, breadth-first from point 0 otherwise.
    pub fn traversal_order(&self) -> Vec<usize> {
        let n = self.len();
        match self.kind {
            ModelKind::Cyclic { .. } | ModelKind::Circle { .. } | ModelKind::Interval { .. } => {
                (0..n).collect()
            }
            _ => {
                let mut seen = vec![false; n];
                let mut order = Vec::with_capacity(n);
                for start in 0..n {
                    if seen[start] {
                        continue;
                    }
                    seen[start] = true;
                    let mut queue = VecDeque::from([start as u32]);
                    while let Some(p) = queue.pop_front() {
                        order.push(p as usize);
                        for t in &self.tables {
                            for q in [t.forward[p as usize], t.backward[p as usize]].into_iter().flatten() {
                                if !seen[q as usize] {
                                    seen[q as usize] = true;
                                    queue.push_back(q);
                                }
                            }
                        }
                    }
                }
                order
            }
        }
    }
}

/// `rank` uniformly random permutations of `0..n`.
pub fn random_permutations(n: usize, rank: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rank)
        .map(|_| {
            let mut p: Vec<u32> = (0..n as u32).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect()
}

/// The good points `M[U]`: points where every `g ∈ U` acts, `g ↦ g.p` is injective on
/// `U`, and `g.(h.p) = (gh).p` whenever `g, h, gh ∈ U`.
pub fn good_points(model: &LocalGSpace, u: &WeightedElementSet) -> Result<Vec<usize>, ModelError> {
    let group = *model.group();
    let elements: Vec<GroupElement> = u.iter().cloned().collect();
    let index: BTreeMap<GroupElement, usize> =
        elements.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
    let tables: Vec<Vec<Option<u32>>> = elements
        .iter()
        .map(|g| model.action_table(g))
        .collect::<Result<_, _>>()?;
    let mut triples = Vec::new();
    for (i, g) in elements.iter().enumerate() {
        for (j, h) in elements.iter().enumerate() {
            let gh = group.multiply(g, h)?;
            if let Some(&k) = index.get(&gh) {
                triples.push((i, j, k));
            }
        }
    }
    let mut good = Vec::new();
    let mut images = BTreeSet::new();
    'points: for p in 0..model.len() {
        images.clear();
        for t in &tables {
            match t[p] {
                Some(q) if images.insert(q) => {}
                _ => continue 'points,
            }
        }
        for &(i, j, k) in &triples {
            let hp = tables[j][p];
            let ghp = hp.and_then(|q| tables[i][q as usize]);
            if ghp.is_none() || ghp != tables[k][p] {
                continue 'points;
            }
        }
        good.push(p);
    }
    Ok(good)
}

/// `vol(M[U]) / vol(M)`; the model is `(U, ε)`-sofic iff this is at least `1 - ε`.
pub fn sofic_quality(model: &LocalGSpace, u: &WeightedElementSet) -> Result<f64, ModelError> {
    Ok(good_points(model, u)?.len() as f64 / model.len() as f64)
}

/// Compares `vol(g.K)` with `vol(K)`. A mismatch means some generator table is not
/// injective.
pub fn check_local_mp(model: &LocalGSpace, g: &GroupElement, k: &[usize]) -> Result<bool, ModelError> {
    let table = model.action_table(g)?;
    let source: BTreeSet<usize> = k.iter().copied().collect();
    let mut image = BTreeSet::new();
    for &p in &source {
        match table.get(p) {
            None => return Err(ModelError::PointOutOfRange(p)),
            Some(None) => {
                return Err(ModelError::UndefinedAction {
                    element: alloc::format!("{g}"),
                    point: p,
                })
            }
            Some(Some(q)) => {
                image.insert(*q);
            }
        }
    }
    let w = model.weight();
    Ok(math::abs(image.len() as f64 * w - source.len() as f64 * w) <= TOL)
}

/// Whether the canonical volume is atomless. Finite models always have atoms, which is
/// why measure-preserving microstates are matched to quantized targets.
pub fn is_atomless(_model: &LocalGSpace) -> bool {
    false
}

/// Quality certificate `(U, ε)` attached to a model in a sofic approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoficCertificate {
    pub u_radius: f64,
    pub epsilon: f64,
}

/// A finite stretch of a sofic approximation.
#[derive(Debug, Clone)]
pub struct SoficApproximation {
    entries: Vec<(LocalGSpace, SoficCertificate)>,
}

impl SoficApproximation {
    /// Certificates must have nondecreasing radii and nonincreasing `ε`; each is
    /// checked against the model's measured quality.
    pub fn new(entries: Vec<(LocalGSpace, SoficCertificate)>) -> Result<Self, ModelError> {
        for w in entries.windows(2) {
            let (a, b) = (w[0].1, w[1].1);
            if b.u_radius < a.u_radius || b.epsilon > a.epsilon {
                return Err(ModelError::Invalid(
                    "certificates must have nondecreasing radius and nonincreasing epsilon".into(),
                ));
            }
        }
        for (m, c) in &entries {
            let q = sofic_quality(m, &m.group().ball(c.u_radius))?;
            if q < 1.0 - c.epsilon - TOL {
                return Err(ModelError::Invalid(alloc::format!(
                    "{} has quality {q} below 1 - {}",
                    m.label(),
                    c.epsilon
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn models(&self) -> impl Iterator<Item = &LocalGSpace> {
        self.entries.iter().map(|(m, _)| m)
    }

    pub fn certificates(&self) -> impl Iterator<Item = &SoficCertificate> {
        self.entries.iter().map(|(_, c)| c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(k: i64) -> GroupElement {
        GroupElement::Lattice(vec![k])
    }

    fn w(s: &str) -> GroupElement {
        GroupElement::parse_word(s).unwrap()
    }

    #[test]
    fn cyclic_examples() {
        let m = LocalGSpace::cyclic_quotient(4).unwrap();
        assert_eq!(m.act(&z(1), 3).unwrap(), Some(0));
        assert_eq!(m.act(&z(-1), 0).unwrap(), Some(3));
        let m1 = LocalGSpace::cyclic_quotient(1).unwrap();
        for k in -5..=5 {
            assert_eq!(m1.act(&z(k), 0).unwrap(), Some(0));
        }
        assert!(LocalGSpace::cyclic_quotient(0).is_err());
    }

    #[test]
    fn torus_examples() {
        let m = LocalGSpace::torus_quotient(&[2, 2]).unwrap();
        // (1,1) is index 3
        assert_eq!(m.act(&GroupElement::Lattice(vec![1, 1]), 3).unwrap(), Some(0));
        assert_eq!(LocalGSpace::torus_quotient(&[3, 2]).unwrap().len(), 6);
        let one = LocalGSpace::torus_quotient(&[1, 1]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.act(&GroupElement::Lattice(vec![3, -2]), 0).unwrap(), Some(0));
    }

    #[test]
    fn schreier_examples() {
        let m = LocalGSpace::schreier_space(&[vec![1, 2, 0], vec![0, 1, 2]]).unwrap();
        assert_eq!(m.act(&w("a"), 0).unwrap(), Some(1));
        for p in 0..3 {
            let q = m.act(&w("a"), p).unwrap().unwrap();
            assert_eq!(m.act(&w("A"), q).unwrap(), Some(p));
        }
        let ab = m.act(&w("ab"), 0).unwrap();
        let b0 = m.act(&w("b"), 0).unwrap().unwrap();
        assert_eq!(ab, m.act(&w("a"), b0).unwrap());
        assert!(matches!(
            LocalGSpace::schreier_space(&[vec![0, 0, 1]]),
            Err(ModelError::NotBijective(0))
        ));
    }

    #[test]
    fn circle_examples() {
        let m = LocalGSpace::circle_space(1.0, 0.25).unwrap();
        assert_eq!(m.len(), 4);
        assert!((m.volume() - 1.0).abs() < 1e-12);
        let g = *m.group();
        let (half, _) = g.quantize(0.5).unwrap();
        let p = m.point_at(0.875).unwrap();
        let q = m.act(&half, p).unwrap().unwrap();
        assert_eq!(m.coordinate(q), Some(0.375));
        let (back, _) = g.quantize(-0.25).unwrap();
        let q = m.act(&back, m.point_at(0.125).unwrap()).unwrap().unwrap();
        assert_eq!(m.coordinate(q), Some(0.875));
        assert!(LocalGSpace::circle_space(1.0, 0.3).is_err());
    }

    #[test]
    fn interval_is_partial() {
        let m = LocalGSpace::interval(5).unwrap();
        assert_eq!(m.act(&z(2), 2).unwrap(), Some(4));
        assert_eq!(m.act(&z(3), 2).unwrap(), None);
        assert_eq!(m.act(&z(-1), 0).unwrap(), None);
        m.validate().unwrap();
    }

    #[test]
    fn good_points_examples() {
        let zz = GroupModel::integers();
        let m8 = LocalGSpace::cyclic_quotient(8).unwrap();
        assert_eq!(good_points(&m8, &zz.ball(1.0)).unwrap().len(), 8);
        let m2 = LocalGSpace::cyclic_quotient(2).unwrap();
        assert!(good_points(&m2, &zz.ball(1.0)).unwrap().is_empty());

        let f2 = GroupModel::FreeGroup { rank: 2 };
        let s = LocalGSpace::schreier_space(&[vec![1, 2, 0], vec![0, 1, 2]]).unwrap();
        assert!(good_points(&s, &f2.ball(1.0)).unwrap().is_empty());
    }

    #[test]
    fn interval_good_points_drop_boundary() {
        let zz = GroupModel::integers();
        let m = LocalGSpace::interval(10).unwrap();
        let good = good_points(&m, &zz.ball(1.0)).unwrap();
        // g.h.p with g,h,gh in {-1,0,1} needs p±1 defined
        assert_eq!(good, (1..9).collect::<Vec<_>>());
    }

    #[test]
    fn quality_examples() {
        let zz = GroupModel::integers();
        assert_eq!(sofic_quality(&LocalGSpace::cyclic_quotient(8).unwrap(), &zz.ball(1.0)).unwrap(), 1.0);
        assert_eq!(sofic_quality(&LocalGSpace::cyclic_quotient(2).unwrap(), &zz.ball(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn local_mp_examples() {
        let m = LocalGSpace::cyclic_quotient(8).unwrap();
        assert!(check_local_mp(&m, &z(3), &[0, 2, 5]).unwrap());

        let c = LocalGSpace::circle_space(1.0, 0.25).unwrap();
        let (half, _) = c.group().quantize(0.5).unwrap();
        let k = [c.point_at(0.125).unwrap(), c.point_at(0.375).unwrap()];
        assert!(check_local_mp(&c, &half, &k).unwrap());

        let s = LocalGSpace::schreier_space(&[vec![1, 2, 0], vec![0, 1, 2]]).unwrap();
        assert!(check_local_mp(&s, &w("a"), &[0, 1, 2]).unwrap());

        let i = LocalGSpace::interval(4).unwrap();
        assert!(matches!(
            check_local_mp(&i, &z(1), &[3]),
            Err(ModelError::UndefinedAction { .. })
        ));
    }

    #[test]
    fn corrupted_table_is_detected() {
        // generator sends 0 and 1 both to 1
        let m = LocalGSpace::from_raw_tables(
            GroupModel::integers(),
            1.0,
            vec![vec![Some(1), Some(1), Some(0)]],
            vec![vec![Some(2), Some(0), None]],
            "corrupt",
        )
        .unwrap();
        assert!(m.validate().is_err());
        assert!(!check_local_mp(&m, &z(1), &[0, 1]).unwrap());
    }

    #[test]
    fn models_are_never_atomless() {
        assert!(!is_atomless(&LocalGSpace::cyclic_quotient(8).unwrap()));
        assert!(!is_atomless(&LocalGSpace::circle_space(1.0, 0.25).unwrap()));
    }

    #[test]
    fn sofic_approximation_checks_certificates() {
        let seq = (3..6)
            .map(|k| {
                (
                    LocalGSpace::cyclic_quotient(2 * k + 1).unwrap(),
                    SoficCertificate { u_radius: k as f64, epsilon: 0.0 },
                )
            })
            .collect();
        assert_eq!(SoficApproximation::new(seq).unwrap().len(), 3);
        let bad = vec![(
            LocalGSpace::cyclic_quotient(3).unwrap(),
            SoficCertificate { u_radius: 2.0, epsilon: 0.5 },
        )];
        assert!(SoficApproximation::new(bad).is_err());
    }
}
