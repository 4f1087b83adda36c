//! Exact laws of distances and functionals by enumeration, and Monte Carlo
//! tail estimates with Hoeffding confidence bands.
//!
//! Exact sums run sequentially in rank order so results are bit-identical
//! regardless of thread count; only per-outcome evaluation is parallel.
//! Monte Carlo work is split into fixed-size chunks, chunk `k` drawing from
//! substream `k` of the seed, so estimates do not depend on scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{aggregate_law, stats_from_values, Functional, Stats};
use crate::hamming::{AlphaWeights, SetMembers, SetSpec};
use crate::space::{substream_rng, Distribution, Enumeration, FiniteSpace, Sampler};
use crate::EXACT_TOL;

/// Default Monte Carlo confidence parameter.
pub const DEFAULT_DELTA: f64 = 0.01;
/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 100_000;
/// Samples drawn per substream.
pub const MC_CHUNK: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// `P(V ≥ t)`; support points within `1e-12` below `t` count.
    Geq,
    /// `P(V > t)`; diagnostics only.
    Gt,
}

/// Exact law of a real random variable with finite support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCurve {
    support: Vec<f64>,
    cdf: Vec<f64>,
    #[serde(skip)]
    survival: Vec<f64>,
}

impl TailCurve {
    /// From `(value, mass)` pairs in any order; ties are merged.
    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Self {
        Self::from_law(&aggregate_law(pairs))
    }

    /// From an already aggregated law sorted by value.
    pub fn from_law(law: &[(f64, f64)]) -> Self {
        let support = law.iter().map(|&(v, _)| v).collect();
        let total: f64 = law.iter().map(|&(_, p)| p).sum();
        let mut acc = 0.0;
        let cdf = law
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc / total
            })
            .collect();
        let mut survival = vec![0.0; law.len() + 1];
        for j in (0..law.len()).rev() {
            survival[j] = survival[j + 1] + law[j].1;
        }
        Self {
            support,
            cdf,
            survival,
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn mass(&self, j: usize) -> f64 {
        self.survival[j] - self.survival[j + 1]
    }

    pub fn max(&self) -> Option<f64> {
        self.support.last().copied()
    }

    /// `P(V ≥ t)` or `P(V > t)`, summed from the top of the support.
    pub fn tail(&self, t: f64, mode: TailMode) -> f64 {
        let idx = match mode {
            TailMode::Geq => self.support.partition_point(|&v| v < t - EXACT_TOL),
            TailMode::Gt => self.support.partition_point(|&v| v <= t + EXACT_TOL),
        };
        self.survival[idx]
    }

    /// `P(V ≤ t)` with the same tie tolerance as [`TailMode::Geq`].
    pub fn lower_tail(&self, t: f64) -> f64 {
        let idx = self.support.partition_point(|&v| v <= t + EXACT_TOL);
        self.survival[0] - self.survival[idx]
    }

    pub fn expectation(&self) -> f64 {
        (0..self.support.len())
            .map(|j| self.support[j] * self.mass(j))
            .sum()
    }
}

/// Query a curve at `t`.
pub fn exact_tail(curve: &TailCurve, t: f64, mode: TailMode) -> f64 {
    curve.tail(t, mode)
}

/// `P(X ∈ A)`, `ρ = E[d_α(X, A)]` and the exact law of `d_α(X, A)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetStats {
    pub p_in: f64,
    pub rho: f64,
    pub distance_curve: TailCurve,
}

pub(crate) fn set_stats_from_members(
    enumeration: &Enumeration,
    alpha: &AlphaWeights,
    members: &SetMembers,
) -> Result<SetStats> {
    if members.is_empty() {
        return Err(Error::EmptySet);
    }
    let distances: Vec<f64> = enumeration
        .points
        .par_iter()
        .map(|x| members.distance_unchecked(alpha, x.symbols()))
        .collect();
    let mut p_in = 0.0;
    let mut rho = 0.0;
    for ((x, p), d) in enumeration.iter().zip(&distances) {
        if members.contains(x) {
            p_in += p;
        }
        rho += p * d;
    }
    let distance_curve = TailCurve::from_pairs(
        distances
            .into_iter()
            .zip(enumeration.probs.iter().copied())
            .collect(),
    );
    Ok(SetStats {
        p_in,
        rho,
        distance_curve,
    })
}

pub fn exact_set_stats(
    space: &FiniteSpace,
    dist: &Distribution,
    alpha: &AlphaWeights,
    set: &SetSpec,
) -> Result<SetStats> {
    alpha.check_dim(space.dim())?;
    let enumeration = Enumeration::new(space, dist)?;
    let members = set.materialize(space)?;
    set_stats_from_members(&enumeration, alpha, &members)
}

pub fn exact_functional_stats(
    space: &FiniteSpace,
    dist: &Distribution,
    f: &Functional,
) -> Result<(Stats, TailCurve)> {
    let enumeration = Enumeration::new(space, dist)?;
    let values = tabulate_par(f, &enumeration);
    let stats = stats_from_values(&enumeration, &values);
    let curve = TailCurve::from_law(&stats.value_distribution);
    Ok((stats, curve))
}

pub(crate) fn tabulate_par(f: &Functional, enumeration: &Enumeration) -> Vec<f64> {
    enumeration.points.par_iter().map(|x| f.eval(x)).collect()
}

/// Exact law of `f(X) − μ`, built from raw values so that no support point
/// is shifted twice.
pub(crate) fn centered_curve(enumeration: &Enumeration, values: &[f64], mu: f64) -> TailCurve {
    TailCurve::from_pairs(
        values
            .iter()
            .map(|v| v - mu)
            .zip(enumeration.probs.iter().copied())
            .collect(),
    )
}

pub(crate) fn mgf_from_values(
    enumeration: &Enumeration,
    values: &[f64],
    mu: f64,
    lambda: f64,
) -> f64 {
    let mut total = 0.0;
    let mut mass = 0.0;
    for (v, p) in values.iter().zip(&enumeration.probs) {
        total += p * (lambda * (v - mu)).exp();
        mass += p;
    }
    total / mass
}

/// `E[e^{λ(f(X) − μ)}]`, normalized by the total mass so that `λ = 0`
/// gives exactly 1.
pub fn exact_mgf(
    space: &FiniteSpace,
    dist: &Distribution,
    f: &Functional,
    lambda: f64,
) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite, got {lambda}"
        )));
    }
    let enumeration = Enumeration::new(space, dist)?;
    let values = tabulate_par(f, &enumeration);
    let mu = stats_from_values(&enumeration, &values).mean;
    Ok(mgf_from_values(&enumeration, &values, mu, lambda))
}

/// What a Monte Carlo run measures.
#[derive(Debug, Clone)]
pub enum McQuantity {
    DistanceToSet { alpha: AlphaWeights, set: SetSpec },
    Functional(Functional),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub delta: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub substreams: u64,
}

impl McEstimate {
    pub fn covers(&self, exact: f64) -> bool {
        (self.estimate - exact).abs() <= self.half_width
    }
}

/// `sqrt(ln(2/δ) / (2N))`.
pub fn hoeffding_half_width(n_samples: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n_samples as f64)).sqrt()
}

/// Empirical `P(V ≥ t)` from `n_samples` draws with a two-sided Hoeffding
/// band at confidence `1 − δ`.
pub fn mc_tail(
    space: &FiniteSpace,
    dist: &Distribution,
    quantity: &McQuantity,
    t: f64,
    n_samples: usize,
    seed: u64,
    delta: f64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "n_samples must be at least 1".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let members = match quantity {
        McQuantity::DistanceToSet { alpha, set } => {
            alpha.check_dim(space.dim())?;
            let members = set.materialize(space)?;
            if members.is_empty() {
                return Err(Error::EmptySet);
            }
            Some(members)
        }
        McQuantity::Functional(_) => None,
    };
    let value = |x: &[usize]| match (quantity, &members) {
        (McQuantity::DistanceToSet { alpha, .. }, Some(m)) => m.distance_unchecked(alpha, x),
        (McQuantity::Functional(f), _) => f.eval_symbols(x),
        _ => unreachable!(),
    };
    let sampler = Sampler::new(space, dist);
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream_rng(seed, k as u64);
            let len = MC_CHUNK.min(n_samples - k * MC_CHUNK);
            (0..len)
                .filter(|_| value(sampler.draw(&mut rng).symbols()) >= t - EXACT_TOL)
                .count()
        })
        .sum();
    Ok(McEstimate {
        estimate: hits as f64 / n_samples as f64,
        half_width: hoeffding_half_width(n_samples, delta),
        delta,
        n_samples,
        seed,
        substreams: chunks as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn s1() -> (FiniteSpace, Distribution, AlphaWeights, SetSpec) {
        let space = FiniteSpace::new(vec![2, 2]).unwrap();
        let dist = Distribution::uniform(&space);
        (
            space,
            dist,
            AlphaWeights::uniform(2).unwrap(),
            SetSpec::points([vec![0, 0]]),
        )
    }

    #[test]
    fn s1_set_stats() {
        let (space, dist, alpha, set) = s1();
        let s = exact_set_stats(&space, &dist, &alpha, &set).unwrap();
        assert_eq!(s.p_in, 0.25);
        assert!((s.rho - FRAC_1_SQRT_2).abs() < 1e-12);
        let c = &s.distance_curve;
        assert_eq!(c.support().len(), 3);
        assert!((c.support()[1] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((c.support()[2] - SQRT_2).abs() < 1e-12);
        assert_eq!((c.mass(0), c.mass(1), c.mass(2)), (0.25, 0.5, 0.25));
        assert!((c.expectation() - s.rho).abs() < 1e-10);
    }

    #[test]
    fn whole_space_has_zero_distance() {
        let (space, dist, alpha, _) = s1();
        let all = SetSpec::predicate(|_| true);
        let s = exact_set_stats(&space, &dist, &alpha, &all).unwrap();
        assert_eq!((s.p_in, s.rho), (1.0, 0.0));
        assert_eq!(s.distance_curve.support(), &[0.0]);
        assert_eq!(exact_tail(&s.distance_curve, 0.0, TailMode::Geq), 1.0);
    }

    #[test]
    fn joint_table_set_stats() {
        let (space, _, alpha, set) = s1();
        let dist = Distribution::joint(&space, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let s = exact_set_stats(&space, &dist, &alpha, &set).unwrap();
        assert!((s.p_in - 0.1).abs() < 1e-15);
        let expected = 0.2 * FRAC_1_SQRT_2 + 0.3 * FRAC_1_SQRT_2 + 0.4 * SQRT_2;
        assert!((s.rho - expected).abs() < 1e-12);
        assert!((s.rho - 0.91924).abs() < 1e-5);
    }

    #[test]
    fn empty_set_is_an_error() {
        let (space, dist, alpha, _) = s1();
        let none = SetSpec::predicate(|_| false);
        assert!(matches!(
            exact_set_stats(&space, &dist, &alpha, &none),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn tail_queries() {
        let (space, dist, alpha, set) = s1();
        let c = exact_set_stats(&space, &dist, &alpha, &set)
            .unwrap()
            .distance_curve;
        assert_eq!(exact_tail(&c, FRAC_1_SQRT_2, TailMode::Geq), 0.75);
        assert_eq!(exact_tail(&c, FRAC_1_SQRT_2, TailMode::Gt), 0.25);
        assert_eq!(exact_tail(&c, 2.0, TailMode::Geq), 0.0);
        assert_eq!(c.lower_tail(FRAC_1_SQRT_2), 0.75);
    }

    #[test]
    fn functional_laws() {
        let space = FiniteSpace::new(vec![2; 3]).unwrap();
        let c = 1.0 / 3f64.sqrt();
        let f = Functional::weighted_sum(vec![c; 3]);
        let (_, curve) =
            exact_functional_stats(&space, &Distribution::uniform(&space), &f).unwrap();
        let masses: Vec<f64> = (0..4).map(|j| curve.mass(j)).collect();
        assert_eq!(masses, vec![0.125, 0.375, 0.375, 0.125]);
        assert!((curve.support()[2] - 2.0 * c).abs() < 1e-12);

        let (_, curve) = exact_functional_stats(
            &space,
            &Distribution::uniform(&space),
            &Functional::constant(4.0),
        )
        .unwrap();
        assert_eq!(curve.support(), &[4.0]);

        let one = FiniteSpace::new(vec![2]).unwrap();
        let dist = Distribution::product(&one, vec![vec![0.7, 0.3]]).unwrap();
        let (stats, curve) =
            exact_functional_stats(&one, &dist, &Functional::weighted_sum(vec![1.0])).unwrap();
        assert_eq!(curve.support(), &[0.0, 1.0]);
        assert!((curve.mass(0) - 0.7).abs() < 1e-15);
        assert!((stats.mean - 0.3).abs() < 1e-15);
    }

    #[test]
    fn mgf_examples() {
        let one = FiniteSpace::new(vec![2]).unwrap();
        let dist = Distribution::uniform(&one);
        let f = Functional::weighted_sum(vec![1.0]);
        assert_eq!(exact_mgf(&one, &dist, &f, 0.0).unwrap(), 1.0);
        let v = exact_mgf(&one, &dist, &f, 2.0).unwrap();
        assert!((v - 1f64.cosh()).abs() < 1e-12);
        assert!(v <= (0.5f64).exp());
        let k = exact_mgf(&one, &dist, &Functional::constant(3.0), 5.0).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mc_examples() {
        let (space, dist, alpha, set) = s1();
        let q = McQuantity::DistanceToSet { alpha, set };
        let est = mc_tail(&space, &dist, &q, FRAC_1_SQRT_2, 100_000, 9, 0.01).unwrap();
        assert!((est.half_width - ((200f64).ln() / 2e5).sqrt()).abs() < 1e-15);
        assert!((est.half_width - 0.005147).abs() < 1e-6);
        assert!((est.estimate - 0.75).abs() <= 0.0163);
        assert!(est.covers(0.75), "{est:?}");
        let again = mc_tail(&space, &dist, &q, FRAC_1_SQRT_2, 100_000, 9, 0.01).unwrap();
        assert_eq!(est, again);

        let all = McQuantity::DistanceToSet {
            alpha: AlphaWeights::uniform(2).unwrap(),
            set: SetSpec::predicate(|_| true),
        };
        let zero = mc_tail(&space, &dist, &all, 0.1, 1000, 1, 0.01).unwrap();
        assert_eq!(zero.estimate, 0.0);

        assert!(mc_tail(&space, &dist, &all, 0.1, 0, 1, 0.01).is_err());
        assert!(mc_tail(&space, &dist, &all, 0.1, 10, 1, 1.0).is_err());
    }
}
