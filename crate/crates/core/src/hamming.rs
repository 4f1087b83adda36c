//! Weight vectors and α-Hamming distances between points and from points to
//! sets.
//!
//! For a weight vector `α ∈ [0, ∞)^n` the α-Hamming distance between two
//! points is the sum of the weights over the coordinates where they differ:
//!
//! ```text
//! d_α(x, y) = Σ_{i : x_i ≠ y_i} α_i
//! d_α(x, A) = min_{y ∈ A} d_α(x, y)
//! ```
//!
//! Distances are accumulated in coordinate order without compensation; the
//! dimensions handled here are small enough that plain summation is exact to
//! well within `1e-12`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::space::FiniteSpace;
use crate::EXACT_TOL;

/// Tolerance on `| ||α|| - 1 |` below which weights count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-9;

/// A nonnegative weight vector with its cached L2 norm and L1 sum.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaWeights {
    weights: Vec<f64>,
    l2_norm: f64,
    l1_sum: f64,
}

impl AlphaWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument(
                "weight vector must be nonempty".into(),
            ));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        let l2_norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let l1_sum = weights.iter().sum();
        Ok(Self {
            weights,
            l2_norm,
            l1_sum,
        })
    }

    /// The unit vector with every weight equal to `1/√n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "weight vector must be nonempty".into(),
            ));
        }
        Self::new(vec![1.0 / (n as f64).sqrt(); n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    /// `Σ α_i`, the diameter of the space under `d_α`.
    pub fn l1_sum(&self) -> f64 {
        self.l1_sum
    }

    pub fn is_normalized(&self) -> bool {
        (self.l2_norm - 1.0).abs() <= NORMALIZED_TOL
    }

    /// Errors unless `||α|| = 1`; every bound evaluator relies on it.
    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm: self.l2_norm })
        }
    }

    /// Rescale to unit L2 norm.
    pub fn normalize(&self) -> Result<Self> {
        if self.l2_norm <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        let weights = self.weights.iter().map(|w| w / self.l2_norm).collect();
        Self::new(weights)
    }

    /// α-Hamming distance between two points.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        Ok(self.distance_unchecked(x.symbols(), y.symbols()))
    }

    pub(crate) fn distance_unchecked(&self, x: &[usize], y: &[usize]) -> f64 {
        let mut d = 0.0;
        for ((a, b), w) in x.iter().zip(y).zip(&self.weights) {
            if a != b {
                d += w;
            }
        }
        d
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: dim,
            });
        }
        Ok(())
    }
}

/// A point of the product space, stored as one symbol index per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<usize>);

impl Point {
    pub fn new(symbols: Vec<usize>) -> Self {
        Self(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `x^{(i)}`: the point with coordinate `i` removed.
    pub fn drop_coordinate(&self, i: usize) -> Vec<usize> {
        let mut reduced = self.0.clone();
        reduced.remove(i);
        reduced
    }

    pub fn into_symbols(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for Point {
    fn from(symbols: Vec<usize>) -> Self {
        Self(symbols)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// α-Hamming distance `d_α(x, y)`.
pub fn hamming_distance(alpha: &AlphaWeights, x: &Point, y: &Point) -> Result<f64> {
    alpha.distance(x, y)
}

pub type Predicate = Arc<dyn Fn(&Point) -> bool + Send + Sync>;

/// A subset of the space.
#[derive(Clone)]
pub enum SetSpec {
    /// Explicit member list. Duplicates are ignored.
    Points(Vec<Point>),
    /// Every point of the space satisfying the predicate.
    Predicate(Predicate),
    /// `{y : f(y) ≤ level}`.
    Sublevel { f: Functional, level: f64 },
    /// `{y : f(y) ≥ level}`.
    Superlevel { f: Functional, level: f64 },
}

impl fmt::Debug for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Points(points) => f.debug_tuple("Points").field(points).finish(),
            SetSpec::Predicate(_) => f.write_str("Predicate(..)"),
            SetSpec::Sublevel { level, .. } => {
                f.debug_struct("Sublevel").field("level", level).finish()
            }
            SetSpec::Superlevel { level, .. } => {
                f.debug_struct("Superlevel").field("level", level).finish()
            }
        }
    }
}

impl SetSpec {
    pub fn points<I, P>(points: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<Point>,
    {
        SetSpec::Points(points.into_iter().map(Into::into).collect())
    }

    pub fn predicate(pred: impl Fn(&Point) -> bool + Send + Sync + 'static) -> Self {
        SetSpec::Predicate(Arc::new(pred))
    }

    /// Membership test. Level sets admit points within [`EXACT_TOL`] of the
    /// level so that ties produced by different summation orders collapse.
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            SetSpec::Points(points) => points.iter().any(|p| p == x),
            SetSpec::Predicate(pred) => pred(x),
            SetSpec::Sublevel { f, level } => f.eval(x) <= level + EXACT_TOL,
            SetSpec::Superlevel { f, level } => f.eval(x) >= level - EXACT_TOL,
        }
    }

    /// The members of the set inside `space`, in lexicographic order.
    ///
    /// Explicit lists are validated against the space; predicate and level
    /// sets scan every outcome, which costs `O(|space| · n)`.
    pub fn materialize(&self, space: &FiniteSpace) -> Result<SetMembers> {
        let mut members = match self {
            SetSpec::Points(points) => {
                for p in points {
                    space.check_point(p)?;
                }
                let mut points = points.clone();
                points.sort();
                points.dedup();
                points
            }
            _ => {
                space.check_enumerable()?;
                space.points().filter(|p| self.contains(p)).collect()
            }
        };
        members.shrink_to_fit();
        Ok(SetMembers { members })
    }
}

/// A materialized, sorted member list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetMembers {
    members: Vec<Point>,
}

impl SetMembers {
    /// Wrap a member list that is already sorted and duplicate-free.
    pub(crate) fn from_sorted(members: Vec<Point>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Self { members }
    }

    pub fn members(&self) -> &[Point] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.members.binary_search(x).is_ok()
    }

    /// `d_α(x, A)`; errors on an empty set.
    pub fn distance_from(&self, alpha: &AlphaWeights, x: &Point) -> Result<f64> {
        alpha.check_dim(x.dim())?;
        if self.members.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(self.distance_unchecked(alpha, x.symbols()))
    }

    pub(crate) fn distance_unchecked(&self, alpha: &AlphaWeights, x: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        for y in &self.members {
            let d = alpha.distance_unchecked(x, y.symbols());
            if d < best {
                best = d;
                if best == 0.0 {
                    break;
                }
            }
        }
        best
    }
}

/// `d_α(x, A) = min_{y ∈ A} d_α(x, y)`.
pub fn distance_to_set(
    alpha: &AlphaWeights,
    x: &Point,
    set: &SetSpec,
    space: &FiniteSpace,
) -> Result<f64> {
    space.check_point(x)?;
    let members = set.materialize(space)?;
    members.distance_from(alpha, x)
}
