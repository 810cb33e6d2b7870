//! Acting groups: integer lattices, free groups and the grid-discretized real line.
//!
//! Balls are closed in the word metric for discrete groups (`ℓ∞` on `ℤᵈ`, word length on
//! free groups) and open for the real line, where they are quadrature objects: grid points
//! in `(-r, r)` carrying weight `h` each.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{self, TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("element {element} does not belong to {model}")]
    Mismatch { model: String, element: String },
    #[error("invalid group model: {0}")]
    InvalidModel(String),
    #[error("element {element} is not in the ball of radius {radius}")]
    OutsideBall { element: String, radius: f64 },
    #[error("invalid ball-product parameters: {0}")]
    InvalidParameters(String),
    #[error("cannot parse group element {0:?}")]
    Parse(String),
}

/// The acting group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupModel {
    /// `ℤᵈ`, balls in the `ℓ∞` metric.
    IntegerLattice { dim: usize },
    /// Free group on `rank` generators, balls in word length.
    FreeGroup { rank: usize },
    /// `ℝ` sampled on the grid `step·ℤ`; Haar measure is Lebesgue.
    RealLine { step: f64 },
}

/// One letter of a free-group word: generator index plus orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub generator: u16,
    pub inverse: bool,
}

impl Letter {
    pub const fn new(generator: u16, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub const fn inv(self) -> Self {
        Self {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }
}

/// An element of a [`GroupModel`].
///
/// Free-group words are always reduced and real-line elements are stored as integer
/// multiples of the grid step, so derived equality is group equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupElement {
    Lattice(Vec<i64>),
    Word(Vec<Letter>),
    /// Grid index `k`, standing for the real number `k·step`.
    Real(i64),
}

impl GroupElement {
    /// Builds a reduced word, cancelling adjacent inverse pairs.
    pub fn word<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        GroupElement::Word(reduce(letters))
    }

    /// Parses a word such as `"abA"`: lowercase letters are generators, uppercase their
    /// inverses, `"e"`/`""` the identity.
    pub fn parse_word(s: &str) -> Result<Self, GroupError> {
        let s = s.trim();
        if s.is_empty() || s == "e" || s == "1" {
            return Ok(GroupElement::Word(Vec::new()));
        }
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let l = match c {
                'a'..='z' => Letter::new(c as u16 - 'a' as u16, false),
                'A'..='Z' => Letter::new(c as u16 - 'A' as u16, true),
                _ => return Err(GroupError::Parse(s.into())),
            };
            letters.push(l);
        }
        Ok(GroupElement::word(letters))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Lattice(v) => {
                if v.len() == 1 {
                    write!(f, "{}", v[0])
                } else {
                    write!(f, "(")?;
                    for (i, x) in v.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{x}")?;
                    }
                    write!(f, ")")
                }
            }
            GroupElement::Word(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Word(w) => {
                for l in w {
                    let base = if l.inverse { b'A' } else { b'a' };
                    write!(f, "{}", (base + l.generator as u8) as char)?;
                }
                Ok(())
            }
            GroupElement::Real(k) => write!(f, "{k}h"),
        }
    }
}

fn reduce<I: IntoIterator<Item = Letter>>(letters: I) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::new();
    for l in letters {
        if out.last() == Some(&l.inv()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

impl fmt::Display for GroupModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupModel::IntegerLattice { dim } => write!(f, "Z^{dim}"),
            GroupModel::FreeGroup { rank } => write!(f, "F_{rank}"),
            GroupModel::RealLine { step } => write!(f, "R(step {step})"),
        }
    }
}

impl GroupModel {
    pub fn integers() -> Self {
        GroupModel::IntegerLattice { dim: 1 }
    }

    pub fn validate(&self) -> Result<(), GroupError> {
        match *self {
            GroupModel::IntegerLattice { dim } if dim == 0 => {
                Err(GroupError::InvalidModel("lattice dimension must be >= 1".into()))
            }
            GroupModel::FreeGroup { rank } if rank == 0 || rank > 26 => Err(
                GroupError::InvalidModel("free-group rank must be in 1..=26".into()),
            ),
            GroupModel::RealLine { step } if !(step > 0.0 && step.is_finite()) => {
                Err(GroupError::InvalidModel("real-line step must be > 0".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match *self {
            GroupModel::IntegerLattice { dim } => GroupElement::Lattice(vec![0; dim]),
            GroupModel::FreeGroup { .. } => GroupElement::Word(Vec::new()),
            GroupModel::RealLine { .. } => GroupElement::Real(0),
        }
    }

    /// Number of generators used by model-space tables.
    pub fn generator_count(&self) -> usize {
        match *self {
            GroupModel::IntegerLattice { dim } => dim,
            GroupModel::FreeGroup { rank } => rank,
            GroupModel::RealLine { .. } => 1,
        }
    }

    /// The `i`-th generator (unit vector, letter, or one grid step).
    pub fn generator(&self, i: usize) -> GroupElement {
        match *self {
            GroupModel::IntegerLattice { dim } => {
                let mut v = vec![0; dim];
                v[i] = 1;
                GroupElement::Lattice(v)
            }
            GroupModel::FreeGroup { .. } => {
                GroupElement::Word(vec![Letter::new(i as u16, false)])
            }
            GroupModel::RealLine { .. } => GroupElement::Real(1),
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self, g) {
            (GroupModel::IntegerLattice { dim }, GroupElement::Lattice(v)) => v.len() == *dim,
            (GroupModel::FreeGroup { rank }, GroupElement::Word(w)) => w
                .iter()
                .zip(w.iter().skip(1))
                .all(|(a, b)| *b != a.inv())
                && w.iter().all(|l| (l.generator as usize) < *rank),
            (GroupModel::RealLine { .. }, GroupElement::Real(_)) => true,
            _ => false,
        }
    }

    fn check(&self, g: &GroupElement) -> Result<(), GroupError> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(GroupError::Mismatch {
                model: alloc::format!("{self}"),
                element: alloc::format!("{g}"),
            })
        }
    }

    /// The group law.
    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(g)?;
        self.check(h)?;
        Ok(match (g, h) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                GroupElement::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupElement::Word(a), GroupElement::Word(b)) => {
                GroupElement::Word(reduce(a.iter().chain(b).copied()))
            }
            (GroupElement::Real(a), GroupElement::Real(b)) => GroupElement::Real(a + b),
            _ => unreachable!("checked above"),
        })
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(g)?;
        Ok(match g {
            GroupElement::Lattice(a) => GroupElement::Lattice(a.iter().map(|x| -x).collect()),
            GroupElement::Word(w) => GroupElement::Word(w.iter().rev().map(|l| l.inv()).collect()),
            GroupElement::Real(k) => GroupElement::Real(-k),
        })
    }

    /// Distance from the identity: `ℓ∞` norm, word length, or `|k|·step`.
    pub fn norm(&self, g: &GroupElement) -> Result<f64, GroupError> {
        self.check(g)?;
        Ok(match (self, g) {
            (_, GroupElement::Lattice(v)) => v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64,
            (_, GroupElement::Word(w)) => w.len() as f64,
            (GroupModel::RealLine { step }, GroupElement::Real(k)) => k.unsigned_abs() as f64 * step,
            _ => unreachable!("checked above"),
        })
    }

    /// Ball membership under this crate's convention (closed for discrete groups,
    /// open for the real line).
    pub fn in_ball(&self, g: &GroupElement, r: f64) -> Result<bool, GroupError> {
        let d = self.norm(g)?;
        Ok(match self {
            GroupModel::RealLine { .. } => d < r - TOL * r.max(1.0),
            _ => d <= r + TOL,
        })
    }

    /// The real number a grid element stands for.
    pub fn real_value(&self, g: &GroupElement) -> Option<f64> {
        match (self, g) {
            (GroupModel::RealLine { step }, GroupElement::Real(k)) => Some(*k as f64 * step),
            _ => None,
        }
    }

    /// Rounds a real translation to the grid; returns the element and the rounding error.
    pub fn quantize(&self, t: f64) -> Result<(GroupElement, f64), GroupError> {
        match *self {
            GroupModel::RealLine { step } => {
                let k = math::round(t / step);
                Ok((GroupElement::Real(k as i64), math::abs(t - k * step)))
            }
            _ => Err(GroupError::InvalidModel(alloc::format!(
                "{self} has no real quantization"
            ))),
        }
    }

    /// The ball `B(r)` as a weighted element set.
    pub fn ball(&self, r: f64) -> WeightedElementSet {
        let r = if r.is_finite() { r.max(0.0) } else { 0.0 };
        match *self {
            GroupModel::IntegerLattice { dim } => {
                let m = math::floor(r + TOL) as i64;
                let side = (2 * m + 1) as usize;
                let total = side.pow(dim as u32);
                let mut elements = Vec::with_capacity(total);
                for idx in 0..total {
                    let mut rest = idx;
                    let mut v = vec![0i64; dim];
                    for x in v.iter_mut().rev() {
                        *x = (rest % side) as i64 - m;
                        rest /= side;
                    }
                    elements.push((GroupElement::Lattice(v), 1.0));
                }
                WeightedElementSet { elements }
            }
            GroupModel::FreeGroup { rank } => {
                let m = math::floor(r + TOL) as usize;
                let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
                let mut elements = vec![(GroupElement::Word(Vec::new()), 1.0)];
                for _ in 0..m {
                    let mut next = Vec::new();
                    for w in &layer {
                        for g in 0..rank as u16 {
                            for inverse in [false, true] {
                                let l = Letter::new(g, inverse);
                                if w.last() == Some(&l.inv()) {
                                    continue;
                                }
                                let mut nw = w.clone();
                                nw.push(l);
                                next.push(nw);
                            }
                        }
                    }
                    elements.extend(next.iter().cloned().map(|w| (GroupElement::Word(w), 1.0)));
                    layer = next;
                }
                WeightedElementSet { elements }
            }
            GroupModel::RealLine { step } => {
                // largest k with k·step < r
                let mut kmax = math::floor(r / step) as i64;
                while kmax >= 0 && (kmax as f64) * step >= r - TOL * r.max(1.0) {
                    kmax -= 1;
                }
                let elements = (-kmax..=kmax)
                    .map(|k| (GroupElement::Real(k), step))
                    .collect();
                WeightedElementSet { elements }
            }
        }
    }
}

/// A finite set of group elements with quadrature weights.
///
/// Weights are 1 for discrete groups and the grid step for the real line, so the total
/// weight is the Haar measure of the represented set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightedElementSet {
    pub elements: Vec<(GroupElement, f64)>,
}

impl WeightedElementSet {
    pub fn new(elements: Vec<(GroupElement, f64)>) -> Result<Self, GroupError> {
        let mut seen = BTreeSet::new();
        for (g, w) in &elements {
            if !(*w >= 0.0 && w.is_finite()) {
                return Err(GroupError::InvalidParameters(alloc::format!(
                    "weight of {g} must be a finite nonnegative number"
                )));
            }
            if !seen.insert(g.clone()) {
                return Err(GroupError::InvalidParameters(alloc::format!(
                    "duplicate element {g}"
                )));
            }
        }
        Ok(Self { elements })
    }

    /// Unit weights for discrete groups, `step` weights on the real line.
    pub fn from_elements(group: &GroupModel, elements: Vec<GroupElement>) -> Result<Self, GroupError> {
        let w = match group {
            GroupModel::RealLine { step } => *step,
            _ => 1.0,
        };
        for g in &elements {
            group.check(g)?;
        }
        Self::new(elements.into_iter().map(|g| (g, w)).collect())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupElement> {
        self.elements.iter().map(|(g, _)| g)
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.iter().any(|(h, _)| h == g)
    }
}

/// Haar measure of a weighted set: the sum of its weights.
pub fn haar(set: &WeightedElementSet) -> f64 {
    set.elements.iter().map(|(_, w)| w).sum()
}

/// Outcome of [`check_ball_product`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallProductVerdict {
    pub hypotheses_hold: bool,
    pub conclusion_holds: bool,
}

/// Evaluates the ball-product inclusion `W0·W2 ⊇ B(r1)` on a concrete instance.
///
/// Hypotheses: `r0 + r1 < r2`, `δ·|B(r2)| < (1-δ)·|B(r0)|` and `|Wᵢ| > (1-δ)·|B(rᵢ)|`
/// for `i ∈ {0, 2}`. Conclusion: `W0·W2 ⊇ B(r1)`, decided by forming the product set.
pub fn check_ball_product(
    group: &GroupModel,
    r0: f64,
    r1: f64,
    r2: f64,
    delta: f64,
    w0: &WeightedElementSet,
    w2: &WeightedElementSet,
) -> Result<BallProductVerdict, GroupError> {
    if !(0.0 < r0 && r0 < r1 && r1 < r2) || !(delta > 0.0) {
        return Err(GroupError::InvalidParameters(alloc::format!(
            "need 0 < r0 < r1 < r2 and delta > 0, got r=({r0}, {r1}, {r2}), delta={delta}"
        )));
    }
    for (set, r) in [(w0, r0), (w2, r2)] {
        for g in set.iter() {
            if !group.in_ball(g, r)? {
                return Err(GroupError::OutsideBall {
                    element: alloc::format!("{g}"),
                    radius: r,
                });
            }
        }
    }
    let b0 = haar(&group.ball(r0));
    let b2 = haar(&group.ball(r2));
    let hypotheses_hold = r0 + r1 < r2
        && delta * b2 < (1.0 - delta) * b0
        && haar(w0) > (1.0 - delta) * b0
        && haar(w2) > (1.0 - delta) * b2;

    let mut product = BTreeSet::new();
    for g in w0.iter() {
        for h in w2.iter() {
            product.insert(group.multiply(g, h)?);
        }
    }
    let conclusion_holds = group.ball(r1).iter().all(|b| product.contains(b));
    Ok(BallProductVerdict {
        hypotheses_hold,
        conclusion_holds,
    })
}
