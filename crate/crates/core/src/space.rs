//! Finite product spaces, product and joint laws on them, exact enumeration
//! and seeded sampling.
//!
//! Outcomes are ranked by mixed-radix encoding with the last coordinate
//! varying fastest, so rank order is lexicographic order of symbol indices.
//! Joint tables are indexed by that rank.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamming::Point;

/// Default upper limit on the number of outcomes an exact pass may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Tolerance on `|Σ p − 1|` for every pmf and joint table.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// Name of the generator behind every sampling API; recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng(seed_from_u64(seed), stream = substream)";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    sizes: Vec<usize>,
    count: u64,
    cap: u64,
}

impl FiniteSpace {
    pub fn new(alphabet_sizes: Vec<usize>) -> Result<Self> {
        if alphabet_sizes.is_empty() {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        let mut count: u64 = 1;
        for (i, &k) in alphabet_sizes.iter().enumerate() {
            if k == 0 {
                return Err(Error::InvalidSpace(format!(
                    "alphabet size at coordinate {i} must be at least 1"
                )));
            }
            count = count.checked_mul(k as u64).ok_or_else(|| {
                Error::InvalidSpace("outcome count does not fit in 64 bits".into())
            })?;
        }
        Ok(Self {
            sizes: alphabet_sizes,
            count,
            cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn alphabet_size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    /// `Π alphabet_sizes`.
    pub fn outcome_count(&self) -> u64 {
        self.count
    }

    /// Errors if an exact pass over the space would exceed the cap.
    pub fn check_enumerable(&self) -> Result<usize> {
        if self.count > self.cap {
            return Err(Error::CapExceeded {
                count: self.count as u128,
                cap: self.cap,
            });
        }
        Ok(self.count as usize)
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        self.check_symbols(x.symbols())
    }

    pub(crate) fn check_symbols(&self, symbols: &[usize]) -> Result<()> {
        if symbols.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: symbols.len(),
            });
        }
        for (index, (&symbol, &size)) in symbols.iter().zip(&self.sizes).enumerate() {
            if symbol >= size {
                return Err(Error::SymbolOutOfRange {
                    index,
                    symbol,
                    size,
                });
            }
        }
        Ok(())
    }

    pub fn rank(&self, symbols: &[usize]) -> u64 {
        symbols
            .iter()
            .zip(&self.sizes)
            .fold(0u64, |acc, (&s, &k)| acc * k as u64 + s as u64)
    }

    pub fn unrank(&self, mut rank: u64) -> Point {
        let mut symbols = vec![0; self.dim()];
        for (slot, &k) in symbols.iter_mut().zip(&self.sizes).rev() {
            *slot = (rank % k as u64) as usize;
            rank /= k as u64;
        }
        Point::new(symbols)
    }

    /// Every point in rank order. Does not consult the cap.
    pub fn points(&self) -> Points<'_> {
        Points {
            sizes: &self.sizes,
            next: Some(vec![0; self.dim()]),
        }
    }

    /// Alphabet sizes of `E^{n-1}` after dropping coordinate `i`.
    pub fn reduced_sizes(&self, i: usize) -> Vec<usize> {
        let mut sizes = self.sizes.clone();
        sizes.remove(i);
        sizes
    }
}

/// Lexicographic iterator over the points of a space.
pub struct Points<'a> {
    sizes: &'a [usize],
    next: Option<Vec<usize>>,
}

impl Iterator for Points<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.sizes[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(Point::new(current))
    }
}

/// Law of `X` on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Independent coordinates, one pmf per coordinate.
    Product { pmfs: Vec<Vec<f64>> },
    /// Arbitrary joint pmf indexed by outcome rank.
    Joint { table: Vec<f64> },
}

fn check_pmf(what: &str, pmf: &[f64]) -> Result<()> {
    for (j, &p) in pmf.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {j} is {p}, probabilities must be finite and nonnegative"
            )));
        }
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > PMF_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

impl Distribution {
    pub fn product(space: &FiniteSpace, pmfs: Vec<Vec<f64>>) -> Result<Self> {
        if pmfs.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: pmfs.len(),
            });
        }
        for (i, pmf) in pmfs.iter().enumerate() {
            if pmf.len() != space.alphabet_size(i) {
                return Err(Error::InvalidDistribution(format!(
                    "pmf {i} has {} entries, alphabet size is {}",
                    pmf.len(),
                    space.alphabet_size(i)
                )));
            }
            check_pmf(&format!("pmf {i}"), pmf)?;
        }
        Ok(Distribution::Product { pmfs })
    }

    pub fn joint(space: &FiniteSpace, table: Vec<f64>) -> Result<Self> {
        if table.len() as u64 != space.outcome_count() {
            return Err(Error::InvalidDistribution(format!(
                "joint table has {} entries, space has {} outcomes",
                table.len(),
                space.outcome_count()
            )));
        }
        check_pmf("joint table", &table)?;
        Ok(Distribution::Joint { table })
    }

    pub fn uniform(space: &FiniteSpace) -> Self {
        let pmfs = space
            .alphabet_sizes()
            .iter()
            .map(|&k| vec![1.0 / k as f64; k])
            .collect();
        Distribution::Product { pmfs }
    }

    pub fn is_product(&self) -> bool {
        matches!(self, Distribution::Product { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Distribution::Product { .. } => "product",
            Distribution::Joint { .. } => "joint",
        }
    }

    /// `P(X = x)`. Assumes `x` lies in `space`.
    pub fn prob(&self, space: &FiniteSpace, x: &[usize]) -> f64 {
        match self {
            Distribution::Product { pmfs } => x.iter().zip(pmfs).map(|(&s, pmf)| pmf[s]).product(),
            Distribution::Joint { table } => table[space.rank(x) as usize],
        }
    }

    /// The full pmf table indexed by rank.
    pub fn joint_table(&self, space: &FiniteSpace) -> Result<Vec<f64>> {
        match self {
            Distribution::Joint { table } => Ok(table.clone()),
            Distribution::Product { .. } => {
                space.check_enumerable()?;
                Ok(space
                    .points()
                    .map(|p| self.prob(space, p.symbols()))
                    .collect())
            }
        }
    }

    /// Per-coordinate marginal pmfs.
    pub fn marginals(&self, space: &FiniteSpace) -> Result<Vec<Vec<f64>>> {
        match self {
            Distribution::Product { pmfs } => Ok(pmfs.clone()),
            Distribution::Joint { table } => {
                let mut out: Vec<Vec<f64>> = space
                    .alphabet_sizes()
                    .iter()
                    .map(|&k| vec![0.0; k])
                    .collect();
                for (p, &mass) in space.points().zip(table) {
                    for (marginal, &s) in out.iter_mut().zip(p.symbols()) {
                        marginal[s] += mass;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Lazily enumerated `(point, probability)` pairs in rank order.
pub struct Outcomes<'a> {
    space: &'a FiniteSpace,
    dist: &'a Distribution,
    points: Points<'a>,
}

impl Iterator for Outcomes<'_> {
    type Item = (Point, f64);

    fn next(&mut self) -> Option<Self::Item> {
        let p = self.points.next()?;
        let mass = self.dist.prob(self.space, p.symbols());
        Some((p, mass))
    }
}

/// Every outcome exactly once, in lexicographic order, with its mass.
pub fn enumerate_outcomes<'a>(
    space: &'a FiniteSpace,
    dist: &'a Distribution,
) -> Result<Outcomes<'a>> {
    space.check_enumerable()?;
    Ok(Outcomes {
        space,
        dist,
        points: space.points(),
    })
}

/// All outcomes of a space collected in rank order.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub points: Vec<Point>,
    pub probs: Vec<f64>,
}

impl Enumeration {
    pub fn new(space: &FiniteSpace, dist: &Distribution) -> Result<Self> {
        let (points, probs) = enumerate_outcomes(space, dist)?.unzip();
        Ok(Self { points, probs })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.probs.iter().copied())
    }
}

/// The generator for substream `substream` of `seed`.
pub fn substream_rng(seed: u64, substream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(substream);
    rng
}

/// Inverse-CDF sampler for a distribution.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    space: &'a FiniteSpace,
    cdfs: Cdfs,
}

#[derive(Debug, Clone)]
enum Cdfs {
    Product(Vec<Vec<f64>>),
    Joint(Vec<f64>),
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    pmf.iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

fn invert(cdf: &[f64], pmf_positive: impl Fn(usize) -> bool, u: f64) -> usize {
    let idx = cdf.partition_point(|&c| c <= u);
    if idx < cdf.len() {
        return idx;
    }
    // u landed past a total that rounded below 1.
    (0..cdf.len()).rev().find(|&j| pmf_positive(j)).unwrap_or(0)
}

impl<'a> Sampler<'a> {
    pub fn new(space: &'a FiniteSpace, dist: &Distribution) -> Self {
        let cdfs = match dist {
            Distribution::Product { pmfs } => {
                Cdfs::Product(pmfs.iter().map(|p| cumulative(p)).collect())
            }
            Distribution::Joint { table } => Cdfs::Joint(cumulative(table)),
        };
        Self { space, cdfs }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.cdfs {
            Cdfs::Product(cdfs) => Point::new(
                cdfs.iter()
                    .map(|cdf| {
                        let u: f64 = rng.random();
                        invert(cdf, |j| j == 0 || cdf[j] > cdf[j - 1], u)
                    })
                    .collect(),
            ),
            Cdfs::Joint(cdf) => {
                let u: f64 = rng.random();
                let rank = invert(cdf, |j| j == 0 || cdf[j] > cdf[j - 1], u);
                self.space.unrank(rank as u64)
            }
        }
    }
}

/// `count` i.i.d. draws from `dist`, deterministic given `seed`.
pub fn sample(
    space: &FiniteSpace,
    dist: &Distribution,
    seed: u64,
    count: usize,
) -> Result<Vec<Point>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let sampler = Sampler::new(space, dist);
    let mut rng = substream_rng(seed, 0);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_single_bit() {
        let space = FiniteSpace::new(vec![2]).unwrap();
        let dist = Distribution::uniform(&space);
        let out: Vec<_> = enumerate_outcomes(&space, &dist).unwrap().collect();
        assert_eq!(
            out,
            vec![(Point::new(vec![0]), 0.5), (Point::new(vec![1]), 0.5)]
        );
    }

    #[test]
    fn enumerates_uniform_product() {
        let space = FiniteSpace::new(vec![2, 2]).unwrap();
        let dist = Distribution::product(&space, vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let out: Vec<_> = enumerate_outcomes(&space, &dist).unwrap().collect();
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|(_, p)| *p == 0.25));
    }

    #[test]
    fn joint_table_is_echoed_in_lex_order() {
        let space = FiniteSpace::new(vec![2, 2]).unwrap();
        let dist = Distribution::joint(&space, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out: Vec<_> = enumerate_outcomes(&space, &dist).unwrap().collect();
        let points: Vec<Vec<usize>> = out.iter().map(|(p, _)| p.symbols().to_vec()).collect();
        assert_eq!(points, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let probs: Vec<f64> = out.iter().map(|(_, p)| *p).collect();
        assert_eq!(probs, vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn cap_exceeded_names_count_and_cap() {
        let space = FiniteSpace::new(vec![10, 10, 10]).unwrap().with_cap(999);
        let dist = Distribution::uniform(&space);
        let err = enumerate_outcomes(&space, &dist).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("1000") && msg.contains("999"), "{msg}");
    }

    #[test]
    fn rank_round_trips() {
        let space = FiniteSpace::new(vec![3, 1, 4, 2]).unwrap();
        for (r, p) in space.points().enumerate() {
            assert_eq!(space.rank(p.symbols()), r as u64);
            assert_eq!(space.unrank(r as u64), p);
        }
        assert_eq!(space.points().count() as u64, space.outcome_count());
    }

    #[test]
    fn rejects_invalid_spaces_and_laws() {
        assert!(FiniteSpace::new(vec![]).is_err());
        assert!(FiniteSpace::new(vec![2, 0]).is_err());
        assert!(FiniteSpace::new(vec![usize::MAX, usize::MAX]).is_err());
        let space = FiniteSpace::new(vec![2]).unwrap();
        assert!(Distribution::product(&space, vec![vec![0.5, 0.6]]).is_err());
        assert!(Distribution::product(&space, vec![vec![1.5, -0.5]]).is_err());
        assert!(Distribution::joint(&space, vec![1.0]).is_err());
    }

    #[test]
    fn product_marginals_round_trip_through_joint_table() {
        let space = FiniteSpace::new(vec![2, 3]).unwrap();
        let pmfs = vec![vec![0.3, 0.7], vec![0.2, 0.5, 0.3]];
        let dist = Distribution::product(&space, pmfs.clone()).unwrap();
        let joint = Distribution::joint(&space, dist.joint_table(&space).unwrap()).unwrap();
        let marginals = joint.marginals(&space).unwrap();
        for (m, p) in marginals.iter().flatten().zip(pmfs.iter().flatten()) {
            assert!((m - p).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_bit_frequency_is_in_band() {
        let space = FiniteSpace::new(vec![2]).unwrap();
        let dist = Distribution::uniform(&space);
        let draws = sample(&space, &dist, 2024, 100_000).unwrap();
        let ones = draws.iter().filter(|p| p.symbols()[0] == 1).count();
        let freq = ones as f64 / 1e5;
        assert!((0.494..=0.506).contains(&freq), "{freq}");
    }

    #[test]
    fn point_mass_always_sampled() {
        let space = FiniteSpace::new(vec![2, 2]).unwrap();
        let dist = Distribution::joint(&space, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let draws = sample(&space, &dist, 3, 1000).unwrap();
        assert!(draws.iter().all(|p| p.symbols() == [0, 0]));
    }

    #[test]
    fn sampling_is_deterministic() {
        let space = FiniteSpace::new(vec![3, 2]).unwrap();
        let dist = Distribution::uniform(&space);
        assert_eq!(
            sample(&space, &dist, 11, 500).unwrap(),
            sample(&space, &dist, 11, 500).unwrap()
        );
        assert_ne!(
            sample(&space, &dist, 11, 500).unwrap(),
            sample(&space, &dist, 12, 500).unwrap()
        );
        assert!(sample(&space, &dist, 11, 0).is_err());
    }

    #[test]
    fn substreams_differ() {
        let mut a = substream_rng(5, 0);
        let mut b = substream_rng(5, 1);
        let xa: u64 = a.random();
        let xb: u64 = b.random();
        assert_ne!(xa, xb);
    }
}
