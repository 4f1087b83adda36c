//! Functions on the space, their exact statistics, and certificates for the
//! structural conditions the bounds assume.
//!
//! A [`Functional`] is an evaluator `f : E^n → ℝ` with an optional
//! coordinate-drop family `f_i : E^{n-1} → ℝ` and optional `(a, b)`
//! self-bounding parameters. The checks in this module are exhaustive over
//! the finite space and return a [`Certificate`] that either holds or carries
//! a witness reproducing the violation.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamming::{AlphaWeights, Point, SetSpec};
use crate::space::{substream_rng, Distribution, Enumeration, FiniteSpace};
use crate::EXACT_TOL;

pub type Evaluator = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;
pub type DropEvaluator = Arc<dyn Fn(usize, &[usize]) -> f64 + Send + Sync>;

/// Parameters `(a, b)` of the self-bounding condition
/// `Σ_i (f(x) − f_i(x^{(i)})) ≤ a·f(x) + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfBoundingParams {
    pub a: f64,
    pub b: f64,
}

impl SelfBoundingParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) || !(b.is_finite() && b >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "self-bounding parameters need a > 0 and b >= 0 (got a = {a}, b = {b})"
            )));
        }
        Ok(Self { a, b })
    }
}

#[derive(Clone)]
pub struct Functional {
    eval: Evaluator,
    drop: Option<DropEvaluator>,
    self_bounding: Option<SelfBoundingParams>,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional")
            .field("drop_family", &self.drop.is_some())
            .field("self_bounding", &self.self_bounding)
            .finish()
    }
}

impl Functional {
    pub fn new(f: impl Fn(&[usize]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            drop: None,
            self_bounding: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    /// `f(x) = values[rank(x)]`.
    pub fn from_table(space: &FiniteSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != space.outcome_count() {
            return Err(Error::InvalidArgument(format!(
                "value table has {} entries, space has {} outcomes",
                values.len(),
                space.outcome_count()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite table value {v}"
            )));
        }
        let space = space.clone();
        Ok(Self::new(move |x| values[space.rank(x) as usize]))
    }

    /// `f(x) = Σ_i c_i · x_i`, reading each symbol index as a number.
    pub fn weighted_sum(coefficients: Vec<f64>) -> Self {
        Self::new(move |x| {
            x.iter()
                .zip(&coefficients)
                .map(|(&s, c)| c * s as f64)
                .sum()
        })
    }

    /// `f(x) = d_α(x, A)`, tabulated once over the space.
    pub fn distance_to_set(
        alpha: &AlphaWeights,
        set: &SetSpec,
        space: &FiniteSpace,
    ) -> Result<Self> {
        alpha.check_dim(space.dim())?;
        let members = set.materialize(space)?;
        if members.is_empty() {
            return Err(Error::EmptySet);
        }
        let values = space
            .points()
            .map(|p| members.distance_unchecked(alpha, p.symbols()))
            .collect();
        Self::from_table(space, values)
    }

    pub fn with_drop_family(
        mut self,
        family: impl Fn(usize, &[usize]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.drop = Some(Arc::new(family));
        self
    }

    /// Drop family given as one table per coordinate, each indexed by the
    /// rank of `x^{(i)}` in the reduced space.
    pub fn with_drop_tables(self, space: &FiniteSpace, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: tables.len(),
            });
        }
        let mut reduced = Vec::with_capacity(space.dim());
        for (i, table) in tables.iter().enumerate() {
            let sizes = space.reduced_sizes(i);
            let count: usize = sizes.iter().product();
            if table.len() != count {
                return Err(Error::InvalidArgument(format!(
                    "drop table {i} has {} entries, reduced space has {count}",
                    table.len()
                )));
            }
            reduced.push(sizes);
        }
        Ok(self.with_drop_family(move |i, r| {
            let rank = r
                .iter()
                .zip(&reduced[i])
                .fold(0usize, |acc, (&s, &k)| acc * k + s);
            tables[i][rank]
        }))
    }

    pub fn with_self_bounding(mut self, params: SelfBoundingParams) -> Self {
        self.self_bounding = Some(params);
        self
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x.symbols())
    }

    pub fn eval_symbols(&self, x: &[usize]) -> f64 {
        (self.eval)(x)
    }

    /// `f_i(x^{(i)})`, if a drop family is attached.
    pub fn drop_value(&self, i: usize, reduced: &[usize]) -> Option<f64> {
        self.drop.as_ref().map(|g| g(i, reduced))
    }

    pub fn has_drop_family(&self) -> bool {
        self.drop.is_some()
    }

    pub fn self_bounding(&self) -> Option<SelfBoundingParams> {
        self.self_bounding
    }

    /// Values of `f` in rank order.
    pub fn tabulate(&self, space: &FiniteSpace) -> Result<Vec<f64>> {
        space.check_enumerable()?;
        Ok(space.points().map(|p| self.eval(&p)).collect())
    }

    /// Values of every `f_i` over its reduced space, in reduced rank order.
    pub fn tabulate_drop(&self, space: &FiniteSpace) -> Result<Option<Vec<Vec<f64>>>> {
        let Some(drop) = &self.drop else {
            return Ok(None);
        };
        space.check_enumerable()?;
        let tables = (0..space.dim())
            .map(|i| {
                reduced_points(space, i)
                    .iter()
                    .map(|r| drop(i, r))
                    .collect()
            })
            .collect();
        Ok(Some(tables))
    }
}

/// Points of `E^{n-1}` with coordinate `i` removed, in rank order. For
/// `n = 1` this is the single empty point.
pub fn reduced_points(space: &FiniteSpace, i: usize) -> Vec<Vec<usize>> {
    let sizes = space.reduced_sizes(i);
    if sizes.is_empty() {
        return vec![Vec::new()];
    }
    FiniteSpace::new(sizes)
        .expect("reduced sizes inherit validity")
        .points()
        .map(Point::into_symbols)
        .collect()
}

/// Attach `f_i(x^{(i)}) = min_s f(x with coordinate i set to s)`.
///
/// The gap `f(x) − f_i(x^{(i)})` is nonnegative by construction; its upper
/// bound must still be certified with [`check_drop_condition`].
pub fn drop_infimum_family(f: &Functional, space: &FiniteSpace) -> Functional {
    let base = f.clone();
    let sizes = space.alphabet_sizes().to_vec();
    f.clone().with_drop_family(move |i, reduced| {
        let mut x = Vec::with_capacity(reduced.len() + 1);
        x.extend_from_slice(&reduced[..i]);
        x.push(0);
        x.extend_from_slice(&reduced[i..]);
        let mut best = f64::INFINITY;
        for s in 0..sizes[i] {
            x[i] = s;
            best = best.min(base.eval_symbols(&x));
        }
        best
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `|f(x) − f(x')| ≤ d_α(x, x')`.
    Lipschitz,
    /// `0 ≤ f(x) − f_i(x^{(i)}) ≤ α_i`.
    Drop,
    /// `0 ≤ f(x) − f_i(x^{(i)}) ≤ 1`.
    UnitDrop,
    /// Unit drop plus `Σ_i (f(x) − f_i(x^{(i)})) ≤ a·f(x) + b`.
    SelfBounding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMethod {
    /// Every ordered pair, or every point and coordinate.
    Exhaustive,
    /// Pairs differing in one coordinate; exact for Lipschitz because
    /// `d_α` is a path metric.
    Neighbours,
    /// Uniformly drawn pairs; can only refute.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Point(Point),
    Pair(Point, Point),
    Drop { point: Point, coordinate: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub condition: Condition,
    pub method: CheckMethod,
    pub holds: bool,
    pub witness: Option<Witness>,
    pub worst_slack: f64,
}

impl Certificate {
    fn from_worst(
        condition: Condition,
        method: CheckMethod,
        worst_slack: f64,
        worst: Option<Witness>,
    ) -> Self {
        let holds = worst_slack <= EXACT_TOL;
        Self {
            condition,
            method,
            holds,
            witness: if holds { None } else { worst },
            worst_slack,
        }
    }
}

/// How [`check_lipschitz_with`] chooses pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairPolicy {
    /// Every ordered pair; errors when there are more than `max_pairs`.
    Exhaustive { max_pairs: u64 },
    /// Every pair differing in exactly one coordinate.
    Neighbours,
    /// `pairs` uniformly drawn pairs.
    Sampled { pairs: u64, seed: u64 },
    /// Exhaustive up to `max_pairs`, neighbour pairs beyond.
    Auto { max_pairs: u64 },
}

pub const DEFAULT_MAX_PAIRS: u64 = 1_000_000;

impl Default for PairPolicy {
    fn default() -> Self {
        PairPolicy::Auto {
            max_pairs: DEFAULT_MAX_PAIRS,
        }
    }
}

/// Lipschitz check under the default policy.
pub fn check_lipschitz(
    f: &Functional,
    alpha: &AlphaWeights,
    space: &FiniteSpace,
) -> Result<Certificate> {
    check_lipschitz_with(f, alpha, space, PairPolicy::default())
}

pub fn check_lipschitz_with(
    f: &Functional,
    alpha: &AlphaWeights,
    space: &FiniteSpace,
    policy: PairPolicy,
) -> Result<Certificate> {
    alpha.check_dim(space.dim())?;
    let n = space.check_enumerable()? as u128;
    let pairs = n * n.saturating_sub(1);
    let policy = match policy {
        PairPolicy::Auto { max_pairs } if pairs > max_pairs as u128 => PairPolicy::Neighbours,
        PairPolicy::Auto { max_pairs } => PairPolicy::Exhaustive { max_pairs },
        other => other,
    };
    let values = f.tabulate(space)?;
    let points: Vec<Point> = space.points().collect();

    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut consider = |x: &Point, y: &Point, slack: f64| {
        if slack > worst {
            worst = slack;
            witness = Some(Witness::Pair(x.clone(), y.clone()));
        }
    };

    let method = match policy {
        PairPolicy::Exhaustive { max_pairs } => {
            if pairs > max_pairs as u128 {
                return Err(Error::PairBudgetExceeded {
                    pairs,
                    budget: max_pairs,
                });
            }
            for (i, x) in points.iter().enumerate() {
                for (j, y) in points.iter().enumerate().skip(i + 1) {
                    let d = alpha.distance_unchecked(x.symbols(), y.symbols());
                    consider(x, y, (values[i] - values[j]).abs() - d);
                }
            }
            CheckMethod::Exhaustive
        }
        PairPolicy::Neighbours => {
            for (r, x) in points.iter().enumerate() {
                let mut y = x.symbols().to_vec();
                for i in 0..space.dim() {
                    let own = y[i];
                    for s in own + 1..space.alphabet_size(i) {
                        y[i] = s;
                        let ry = space.rank(&y) as usize;
                        let slack = (values[r] - values[ry]).abs() - alpha.weight(i);
                        consider(x, &points[ry], slack);
                    }
                    y[i] = own;
                }
            }
            CheckMethod::Neighbours
        }
        PairPolicy::Sampled { pairs, seed } => {
            let mut rng = substream_rng(seed, 0);
            let total = points.len();
            if total > 1 {
                for _ in 0..pairs {
                    let a = rng.random_range(0..total);
                    let mut b = rng.random_range(0..total - 1);
                    if b >= a {
                        b += 1;
                    }
                    let d = alpha.distance_unchecked(points[a].symbols(), points[b].symbols());
                    consider(&points[a], &points[b], (values[a] - values[b]).abs() - d);
                }
            }
            CheckMethod::Sampled
        }
        PairPolicy::Auto { .. } => unreachable!("resolved above"),
    };
    Ok(Certificate::from_worst(
        Condition::Lipschitz,
        method,
        worst,
        witness,
    ))
}

fn drop_gaps<'a>(
    f: &'a Functional,
    space: &'a FiniteSpace,
) -> Result<impl Iterator<Item = (Point, f64, Vec<f64>)> + 'a> {
    if !f.has_drop_family() {
        return Err(Error::MissingDropFamily);
    }
    space.check_enumerable()?;
    Ok(space.points().map(move |x| {
        let fx = f.eval(&x);
        let gaps = (0..space.dim())
            .map(|i| {
                fx - f
                    .drop_value(i, &x.drop_coordinate(i))
                    .expect("checked above")
            })
            .collect();
        (x, fx, gaps)
    }))
}

fn check_gap_band(
    f: &Functional,
    space: &FiniteSpace,
    condition: Condition,
    upper: impl Fn(usize) -> f64,
) -> Result<Certificate> {
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for (x, _, gaps) in drop_gaps(f, space)? {
        for (i, gap) in gaps.into_iter().enumerate() {
            let slack = (-gap).max(gap - upper(i));
            if slack > worst {
                worst = slack;
                witness = Some(Witness::Drop {
                    point: x.clone(),
                    coordinate: i,
                });
            }
        }
    }
    Ok(Certificate::from_worst(
        condition,
        CheckMethod::Exhaustive,
        worst,
        witness,
    ))
}

/// `0 ≤ f(x) − f_i(x^{(i)}) ≤ α_i` at every point and coordinate.
pub fn check_drop_condition(
    f: &Functional,
    alpha: &AlphaWeights,
    space: &FiniteSpace,
) -> Result<Certificate> {
    alpha.check_dim(space.dim())?;
    check_gap_band(f, space, Condition::Drop, |i| alpha.weight(i))
}

/// `0 ≤ f(x) − f_i(x^{(i)}) ≤ 1` at every point and coordinate.
pub fn check_unit_drop(f: &Functional, space: &FiniteSpace) -> Result<Certificate> {
    check_gap_band(f, space, Condition::UnitDrop, |_| 1.0)
}

/// Unit-drop gaps plus `Σ_i gap_i(x) ≤ a·f(x) + b` everywhere.
///
/// `worst_slack` is `max_x Σ_i gap_i(x) − a·f(x) − b`; a unit-drop violation
/// makes the certificate fail with a drop witness regardless of that value.
pub fn check_self_bounding(f: &Functional, space: &FiniteSpace) -> Result<Certificate> {
    let params = f.self_bounding().ok_or(Error::MissingSelfBoundingParams)?;
    let mut worst_sum = f64::NEG_INFINITY;
    let mut sum_witness = None;
    let mut worst_unit = f64::NEG_INFINITY;
    let mut unit_witness = None;
    for (x, fx, gaps) in drop_gaps(f, space)? {
        for (i, &gap) in gaps.iter().enumerate() {
            let slack = (-gap).max(gap - 1.0);
            if slack > worst_unit {
                worst_unit = slack;
                unit_witness = Some(Witness::Drop {
                    point: x.clone(),
                    coordinate: i,
                });
            }
        }
        let slack = gaps.iter().sum::<f64>() - params.a * fx - params.b;
        if slack > worst_sum {
            worst_sum = slack;
            sum_witness = Some(Witness::Point(x.clone()));
        }
    }
    let (holds, witness) = if worst_unit > EXACT_TOL {
        (false, unit_witness)
    } else if worst_sum > EXACT_TOL {
        (false, sum_witness)
    } else {
        (true, None)
    };
    Ok(Certificate {
        condition: Condition::SelfBounding,
        method: CheckMethod::Exhaustive,
        holds,
        witness,
        worst_slack: worst_sum,
    })
}

/// Re-evaluate a failing certificate at its witness. True when the witness
/// still shows a violation.
pub fn witness_reproduces(cert: &Certificate, f: &Functional, alpha: &AlphaWeights) -> bool {
    let gap = |x: &Point, i: usize| {
        f.drop_value(i, &x.drop_coordinate(i))
            .map(|fi| f.eval(x) - fi)
    };
    match (&cert.witness, cert.condition) {
        (Some(Witness::Pair(x, y)), Condition::Lipschitz) => {
            let d = alpha.distance_unchecked(x.symbols(), y.symbols());
            (f.eval(x) - f.eval(y)).abs() - d > EXACT_TOL
        }
        (Some(Witness::Drop { point, coordinate }), condition) => {
            let upper = match condition {
                Condition::Drop => alpha.weight(*coordinate),
                _ => 1.0,
            };
            gap(point, *coordinate)
                .map(|g| g < -EXACT_TOL || g > upper + EXACT_TOL)
                .unwrap_or(false)
        }
        (Some(Witness::Point(x)), Condition::SelfBounding) => {
            let Some(params) = f.self_bounding() else {
                return false;
            };
            let total: Option<f64> = (0..x.dim()).map(|i| gap(x, i)).sum();
            total
                .map(|t| t - params.a * f.eval(x) - params.b > EXACT_TOL)
                .unwrap_or(false)
        }
        _ => false,
    }
}

/// Mean, median interval and aggregated law of `f(X)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub median_lo: f64,
    pub median_hi: f64,
    /// `(value, probability)` sorted by value, ties within `1e-12` merged,
    /// zero-mass values dropped.
    pub value_distribution: Vec<(f64, f64)>,
}

/// Sort and merge `(value, mass)` pairs. Values within [`EXACT_TOL`] of the
/// first value of a run collapse onto it.
pub(crate) fn aggregate_law(mut pairs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pairs.retain(|&(_, p)| p > 0.0);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (v, p) in pairs {
        match out.last_mut() {
            Some((head, mass)) if v - *head <= EXACT_TOL => *mass += p,
            _ => out.push((v, p)),
        }
    }
    out
}

impl Stats {
    /// Build from a law and its exact mean.
    pub(crate) fn from_law(mean: f64, law: Vec<(f64, f64)>) -> Self {
        let half = 0.5 - EXACT_TOL;
        let mut below = 0.0;
        let mut median_lo = f64::NAN;
        for &(v, p) in &law {
            below += p;
            if below >= half {
                median_lo = v;
                break;
            }
        }
        let mut above = 0.0;
        let mut median_hi = f64::NAN;
        for &(v, p) in law.iter().rev() {
            above += p;
            if above >= half {
                median_hi = v;
                break;
            }
        }
        Self {
            mean,
            median_lo,
            median_hi,
            value_distribution: law,
        }
    }

    pub fn medians(&self) -> [f64; 2] {
        [self.median_lo, self.median_hi]
    }
}

pub(crate) fn stats_from_values(enumeration: &Enumeration, values: &[f64]) -> Stats {
    let mean = values
        .iter()
        .zip(&enumeration.probs)
        .map(|(v, p)| v * p)
        .sum();
    let law = aggregate_law(
        values
            .iter()
            .copied()
            .zip(enumeration.probs.iter().copied())
            .collect(),
    );
    Stats::from_law(mean, law)
}

/// Exact mean and median interval of `f(X)`.
pub fn stats(f: &Functional, space: &FiniteSpace, dist: &Distribution) -> Result<Stats> {
    let enumeration = Enumeration::new(space, dist)?;
    let values: Vec<f64> = enumeration.points.iter().map(|p| f.eval(p)).collect();
    Ok(stats_from_values(&enumeration, &values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(n: usize) -> FiniteSpace {
        FiniteSpace::new(vec![2; n]).unwrap()
    }

    fn scaled_sum(n: usize) -> Functional {
        let c = 1.0 / (n as f64).sqrt();
        Functional::weighted_sum(vec![c; n])
    }

    #[test]
    fn constant_is_lipschitz_with_min_distance_slack() {
        let space = FiniteSpace::new(vec![2, 3]).unwrap();
        let alpha = AlphaWeights::new(vec![0.6, 0.8]).unwrap();
        let cert = check_lipschitz(&Functional::constant(3.0), &alpha, &space).unwrap();
        assert!(cert.holds);
        assert_eq!(cert.method, CheckMethod::Exhaustive);
        assert!((cert.worst_slack + 0.6).abs() < 1e-12);
    }

    #[test]
    fn scaled_sum_is_tight_lipschitz() {
        let space = bits(2);
        let alpha = AlphaWeights::uniform(2).unwrap();
        let cert = check_lipschitz(&scaled_sum(2), &alpha, &space).unwrap();
        assert!(cert.holds);
        assert!(cert.worst_slack.abs() < 1e-12);
    }

    #[test]
    fn steep_function_fails_with_witness() {
        let space = bits(1);
        let alpha = AlphaWeights::new(vec![1.0]).unwrap();
        let f = Functional::from_table(&space, vec![0.0, 2.0]).unwrap();
        let cert = check_lipschitz(&f, &alpha, &space).unwrap();
        assert!(!cert.holds);
        assert_eq!(
            cert.witness,
            Some(Witness::Pair(vec![0].into(), vec![1].into()))
        );
        assert!((cert.worst_slack - 1.0).abs() < 1e-12);
        assert!(witness_reproduces(&cert, &f, &alpha));
    }

    #[test]
    fn exhaustive_budget_errors() {
        let space = bits(4);
        let alpha = AlphaWeights::uniform(4).unwrap();
        let err = check_lipschitz_with(
            &scaled_sum(4),
            &alpha,
            &space,
            PairPolicy::Exhaustive { max_pairs: 10 },
        );
        assert!(matches!(err, Err(Error::PairBudgetExceeded { .. })));
        let auto = check_lipschitz_with(
            &scaled_sum(4),
            &alpha,
            &space,
            PairPolicy::Auto { max_pairs: 10 },
        )
        .unwrap();
        assert_eq!(auto.method, CheckMethod::Neighbours);
        assert!(auto.holds);
    }

    #[test]
    fn sampled_mode_finds_gross_violation() {
        let space = FiniteSpace::new(vec![3, 3]).unwrap();
        let alpha = AlphaWeights::uniform(2).unwrap();
        let f = Functional::weighted_sum(vec![5.0, 5.0]);
        let cert = check_lipschitz_with(
            &f,
            &alpha,
            &space,
            PairPolicy::Sampled {
                pairs: 200,
                seed: 1,
            },
        )
        .unwrap();
        assert!(!cert.holds);
        assert_eq!(cert.method, CheckMethod::Sampled);
        assert!(witness_reproduces(&cert, &f, &alpha));
    }

    #[test]
    fn drop_condition_for_scaled_sum() {
        let space = bits(3);
        let alpha = AlphaWeights::uniform(3).unwrap();
        let c = 1.0 / 3f64.sqrt();
        let f = scaled_sum(3).with_drop_family(move |_, r| r.iter().map(|&s| s as f64 * c).sum());
        let cert = check_drop_condition(&f, &alpha, &space).unwrap();
        assert!(cert.holds, "{cert:?}");
        assert!(cert.worst_slack.abs() < 1e-12);

        let g = drop_infimum_family(&scaled_sum(3), &space);
        let cert = check_drop_condition(&g, &alpha, &space).unwrap();
        assert!(cert.holds);
    }

    #[test]
    fn drop_condition_fails_for_zero_family() {
        let space = bits(3);
        let alpha = AlphaWeights::uniform(3).unwrap();
        let f = Functional::constant(1.0).with_drop_family(|_, _| 0.0);
        let cert = check_drop_condition(&f, &alpha, &space).unwrap();
        assert!(!cert.holds);
        assert!(matches!(cert.witness, Some(Witness::Drop { .. })));
        assert!(witness_reproduces(&cert, &f, &alpha));
        assert!(matches!(
            check_drop_condition(&Functional::constant(1.0), &alpha, &space),
            Err(Error::MissingDropFamily)
        ));
    }

    #[test]
    fn drop_infimum_examples() {
        let space = bits(3);
        let c = 1.0 / 3f64.sqrt();
        let f = drop_infimum_family(&scaled_sum(3), &space);
        assert!((f.drop_value(1, &[1, 1]).unwrap() - 2.0 * c).abs() < 1e-12);
        assert!((f.drop_value(0, &[0, 1]).unwrap() - c).abs() < 1e-12);

        let k = drop_infimum_family(&Functional::constant(2.5), &space);
        assert_eq!(k.drop_value(2, &[1, 0]), Some(2.5));

        let two = bits(2);
        let ind = Functional::new(|x| if x == [1, 1] { 1.0 } else { 0.0 });
        let ind = drop_infimum_family(&ind, &two);
        assert_eq!(ind.drop_value(0, &[0]), Some(0.0));
        assert_eq!(ind.drop_value(0, &[1]), Some(0.0));
        assert_eq!(
            ind.eval(&vec![1, 1].into()) - ind.drop_value(0, &[1]).unwrap(),
            1.0
        );
    }

    #[test]
    fn drop_family_for_one_dimensional_space() {
        let space = bits(1);
        let f = drop_infimum_family(
            &Functional::from_table(&space, vec![0.2, 0.9]).unwrap(),
            &space,
        );
        assert_eq!(f.drop_value(0, &[]), Some(0.2));
        let tables = f.tabulate_drop(&space).unwrap().unwrap();
        assert_eq!(tables, vec![vec![0.2]]);
    }

    #[test]
    fn self_bounding_examples() {
        let space = bits(3);
        let sum = Functional::weighted_sum(vec![1.0; 3]);
        let f = drop_infimum_family(&sum, &space)
            .with_self_bounding(SelfBoundingParams::new(1.0, 0.0).unwrap());
        let cert = check_self_bounding(&f, &space).unwrap();
        assert!(cert.holds);
        assert!(cert.worst_slack.abs() < 1e-12);

        let f = drop_infimum_family(&sum, &space)
            .with_self_bounding(SelfBoundingParams::new(0.5, 0.0).unwrap());
        let cert = check_self_bounding(&f, &space).unwrap();
        assert!(!cert.holds);
        assert_eq!(cert.witness, Some(Witness::Point(vec![1, 1, 1].into())));
        assert!((cert.worst_slack - 1.5).abs() < 1e-12);
        let alpha = AlphaWeights::uniform(3).unwrap();
        assert!(witness_reproduces(&cert, &f, &alpha));

        let zero = Functional::constant(0.0)
            .with_drop_family(|_, _| 0.0)
            .with_self_bounding(SelfBoundingParams::new(2.0, 0.0).unwrap());
        assert!(check_self_bounding(&zero, &space).unwrap().holds);

        assert!(matches!(
            check_self_bounding(&drop_infimum_family(&sum, &space), &space),
            Err(Error::MissingSelfBoundingParams)
        ));
        assert!(SelfBoundingParams::new(0.0, 1.0).is_err());
        assert!(SelfBoundingParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn stats_of_scaled_binomial() {
        let space = bits(3);
        let s = stats(&scaled_sum(3), &space, &Distribution::uniform(&space)).unwrap();
        let c = 1.0 / 3f64.sqrt();
        assert!((s.mean - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((s.median_lo - c).abs() < 1e-12);
        assert!((s.median_hi - 2.0 * c).abs() < 1e-12);
        assert_eq!(s.value_distribution.len(), 4);
    }

    #[test]
    fn stats_of_point_mass_and_bit() {
        let space = bits(2);
        let dist = Distribution::joint(&space, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let f = Functional::weighted_sum(vec![0.3, 0.7]);
        let s = stats(&f, &space, &dist).unwrap();
        assert_eq!((s.mean, s.median_lo, s.median_hi), (0.3, 0.3, 0.3));

        let one = bits(1);
        let s = stats(
            &Functional::weighted_sum(vec![1.0]),
            &one,
            &Distribution::uniform(&one),
        )
        .unwrap();
        assert_eq!((s.mean, s.median_lo, s.median_hi), (0.5, 0.0, 1.0));
    }

    #[test]
    fn aggregation_merges_near_ties() {
        let law = aggregate_law(vec![(0.1 + 0.2, 0.25), (0.3, 0.25), (1.0, 0.5), (2.0, 0.0)]);
        assert_eq!(law.len(), 2);
        assert_eq!(law[0].1, 0.5);
    }
}
