//! Scenario harness: compute exact left-hand sides, evaluate every
//! applicable bound, and collect the comparisons into a [`BoundReport`].
//!
//! Median-based checks run at both endpoints of the median interval. The
//! upper deviation `f − m` is bounded through `ρ` of the sublevel set
//! `{f ≤ m}`; the lower deviation `m − f` through `ρ` of the superlevel set
//! `{f ≥ m}`, which is the sublevel set of `−f` at `−m`. The lower deviation
//! measured against the sublevel `ρ` is kept as a diagnostic row because it
//! can fail (one biased bit at its upper median is enough).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bounds::{self, BoundId};
use crate::error::{Error, Result};
use crate::estimators::{
    centered_curve, mgf_from_values, set_stats_from_members, tabulate_par, TailCurve, TailMode,
};
use crate::functionals::{
    check_drop_condition, check_lipschitz_with, check_self_bounding, check_unit_drop,
    drop_infimum_family, stats_from_values, Functional, PairPolicy, SelfBoundingParams, Stats,
    Witness,
};
use crate::hamming::{AlphaWeights, Point, SetMembers, SetSpec};
use crate::report::{
    nums, BoundReport, Derived, MedianEndpoint, MedianSummary, Num, ReportRow, Side, Summary,
    TargetKind,
};
use crate::space::{substream_rng, Distribution, Enumeration, FiniteSpace};
use crate::EXACT_TOL;

pub const DEFAULT_LAMBDA_GRID: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_T_POINTS: usize = 24;
pub const T_GRID_START: f64 = 0.05;
/// Multiple of `Σα_i` at which the default t-grid ends.
pub const T_GRID_END_FACTOR: f64 = 1.2;
/// Multiple of `Σα_i` at which the centered tail must already vanish.
pub const DIAMETER_PROBE_FACTOR: f64 = 1.001;

/// 24 geometric points from 0.05 to `1.2·diameter`, merged with the
/// positive `extras`.
pub fn default_t_grid(diameter: f64, extras: &[f64]) -> Vec<f64> {
    let end = (T_GRID_END_FACTOR * diameter).max(2.0 * T_GRID_START);
    let ratio = (end / T_GRID_START).powf(1.0 / (DEFAULT_T_POINTS - 1) as f64);
    let mut grid: Vec<f64> = (0..DEFAULT_T_POINTS)
        .map(|k| T_GRID_START * ratio.powi(k as i32))
        .collect();
    grid.extend(extras.iter().copied().filter(|x| x.is_finite() && *x > 0.0));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|b, a| (*b - *a).abs() <= EXACT_TOL);
    grid
}

#[derive(Debug, Clone)]
pub enum Target {
    /// Set concentration for `d_α(X, A)`.
    Set(SetSpec),
    /// Median tails of a Lipschitz functional.
    Median(Functional),
    /// Median–mean gap of a Lipschitz functional.
    Gap(Functional),
    /// Mean tails of a functional satisfying the coordinate-drop condition.
    Drop(Functional),
}

impl Target {
    pub fn kind(&self) -> TargetKind {
        match self {
            Target::Set(_) => TargetKind::Set,
            Target::Median(_) => TargetKind::Median,
            Target::Gap(_) => TargetKind::Gap,
            Target::Drop(_) => TargetKind::Drop,
        }
    }

    pub fn functional(&self) -> Option<&Functional> {
        match self {
            Target::Set(_) => None,
            Target::Median(f) | Target::Gap(f) | Target::Drop(f) => Some(f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub space: FiniteSpace,
    pub dist: Distribution,
    pub alpha: AlphaWeights,
    pub target: Target,
    pub t_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
    pub pair_policy: PairPolicy,
}

fn check_dist_shape(space: &FiniteSpace, dist: &Distribution) -> Result<()> {
    match dist {
        Distribution::Product { pmfs } => {
            Distribution::product(space, pmfs.clone())?;
        }
        Distribution::Joint { table } => {
            Distribution::joint(space, table.clone())?;
        }
    }
    Ok(())
}

impl Scenario {
    pub fn new(
        space: FiniteSpace,
        dist: Distribution,
        alpha: AlphaWeights,
        target: Target,
        mut t_grid: Vec<f64>,
        mut lambda_grid: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        alpha.check_dim(space.dim())?;
        alpha.require_normalized()?;
        check_dist_shape(&space, &dist)?;
        if t_grid.is_empty() {
            return Err(Error::InvalidGrid("t grid is empty".into()));
        }
        if let Some(t) = t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "t values must be positive, got {t}"
            )));
        }
        if lambda_grid.is_empty() {
            return Err(Error::InvalidGrid("lambda grid is empty".into()));
        }
        if let Some(l) = lambda_grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "lambda values must be nonnegative, got {l}"
            )));
        }
        t_grid.sort_by(f64::total_cmp);
        t_grid.dedup();
        lambda_grid.sort_by(f64::total_cmp);
        lambda_grid.dedup();
        Ok(Self {
            space,
            dist,
            alpha,
            target,
            t_grid,
            lambda_grid,
            seed,
            pair_policy: PairPolicy::default(),
        })
    }

    /// Scenario with the default t-grid (including `ρ` values and median
    /// gaps of the target) and the default λ-grid.
    pub fn with_default_grids(
        space: FiniteSpace,
        dist: Distribution,
        alpha: AlphaWeights,
        target: Target,
        seed: u64,
    ) -> Result<Self> {
        let mut s = Self::new(
            space,
            dist,
            alpha,
            target,
            vec![1.0],
            DEFAULT_LAMBDA_GRID.to_vec(),
            seed,
        )?;
        let extras = grid_extras(&s)?;
        s.t_grid = default_t_grid(s.alpha.l1_sum(), &extras);
        Ok(s)
    }

    pub fn with_pair_policy(mut self, policy: PairPolicy) -> Self {
        self.pair_policy = policy;
        self
    }

    /// Canonical serialization: the target is tabulated over the space, so
    /// two scenarios with equal fingerprints define the same checks.
    pub fn canonical_json(&self) -> Result<String> {
        let distribution = match &self.dist {
            Distribution::Product { pmfs } => CanonicalDist::Product {
                pmfs: pmfs.iter().map(|p| nums(p)).collect(),
            },
            Distribution::Joint { table } => CanonicalDist::Joint { table: nums(table) },
        };
        let target = match &self.target {
            Target::Set(set) => CanonicalTarget {
                kind: self.target.kind(),
                members: Some(set.materialize(&self.space)?.members().to_vec()),
                values: None,
                drop_tables: None,
                self_bounding: None,
            },
            Target::Median(f) | Target::Gap(f) | Target::Drop(f) => CanonicalTarget {
                kind: self.target.kind(),
                members: None,
                values: Some(nums(&f.tabulate(&self.space)?)),
                drop_tables: f
                    .tabulate_drop(&self.space)?
                    .map(|ts| ts.iter().map(|t| nums(t)).collect()),
                self_bounding: f.self_bounding().map(|p| [Num(p.a), Num(p.b)]),
            },
        };
        let canonical = CanonicalScenario {
            alphabet_sizes: self.space.alphabet_sizes(),
            distribution,
            alpha: nums(self.alpha.weights()),
            target,
            t_grid: nums(&self.t_grid),
            lambda_grid: nums(&self.lambda_grid),
            seed: self.seed,
            enumeration_cap: self.space.cap(),
            pair_policy: format!("{:?}", self.pair_policy),
        };
        Ok(serde_json::to_string(&canonical).expect("canonical scenario serializes"))
    }

    /// SHA-256 of [`Scenario::canonical_json`], hex encoded.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(
            self.canonical_json()?.as_bytes(),
        )))
    }
}

#[derive(Serialize)]
struct CanonicalScenario<'a> {
    alphabet_sizes: &'a [usize],
    distribution: CanonicalDist,
    alpha: Vec<Num>,
    target: CanonicalTarget,
    t_grid: Vec<Num>,
    lambda_grid: Vec<Num>,
    seed: u64,
    enumeration_cap: u64,
    pair_policy: String,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CanonicalDist {
    Product { pmfs: Vec<Vec<Num>> },
    Joint { table: Vec<Num> },
}

#[derive(Serialize)]
struct CanonicalTarget {
    kind: TargetKind,
    members: Option<Vec<Point>>,
    values: Option<Vec<Num>>,
    drop_tables: Option<Vec<Vec<Num>>>,
    self_bounding: Option<[Num; 2]>,
}

/// Exact law of a functional over an enumerated space.
struct ExactFunctional {
    enumeration: Enumeration,
    values: Vec<f64>,
    stats: Stats,
}

impl ExactFunctional {
    fn new(s: &Scenario, f: &Functional) -> Result<Self> {
        let enumeration = Enumeration::new(&s.space, &s.dist)?;
        let values = tabulate_par(f, &enumeration);
        let stats = stats_from_values(&enumeration, &values);
        Ok(Self {
            enumeration,
            values,
            stats,
        })
    }

    fn mean(&self) -> f64 {
        self.stats.mean
    }

    /// `{x : f(x) ≤ level}` or `{x : f(x) ≥ level}` over every point.
    fn level_set(&self, level: f64, below: bool) -> SetMembers {
        let members = self
            .enumeration
            .points
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| {
                if below {
                    v <= level + EXACT_TOL
                } else {
                    v >= level - EXACT_TOL
                }
            })
            .map(|(p, _)| p.clone())
            .collect();
        SetMembers::from_sorted(members)
    }

    /// Law of `sign·(f − c)`.
    fn deviation_curve(&self, c: f64, side: Side) -> TailCurve {
        match side {
            Side::Upper => centered_curve(&self.enumeration, &self.values, c),
            Side::Lower => {
                let negated: Vec<f64> = self.values.iter().map(|v| -v).collect();
                centered_curve(&self.enumeration, &negated, -c)
            }
        }
    }

    fn mgf(&self, lambda: f64, side: Side) -> f64 {
        let signed = match side {
            Side::Upper => lambda,
            Side::Lower => -lambda,
        };
        mgf_from_values(&self.enumeration, &self.values, self.mean(), signed)
    }
}

struct Endpoint {
    endpoint: MedianEndpoint,
    median: f64,
    rho_sublevel: f64,
    rho_superlevel: f64,
    gap: f64,
}

impl Endpoint {
    fn summary(&self) -> MedianSummary {
        MedianSummary {
            endpoint: self.endpoint,
            median: Num(self.median),
            rho_sublevel: Num(self.rho_sublevel),
            rho_superlevel: Num(self.rho_superlevel),
            gap: Num(self.gap),
        }
    }
}

fn endpoints(s: &Scenario, exact: &ExactFunctional) -> Result<Vec<Endpoint>> {
    let mu = exact.mean();
    [
        (MedianEndpoint::Lo, exact.stats.median_lo),
        (MedianEndpoint::Hi, exact.stats.median_hi),
    ]
    .into_iter()
    .map(|(endpoint, m)| {
        let below = exact.level_set(m, true);
        let above = exact.level_set(m, false);
        let rho_sublevel = set_stats_from_members(&exact.enumeration, &s.alpha, &below)?.rho;
        let rho_superlevel = set_stats_from_members(&exact.enumeration, &s.alpha, &above)?.rho;
        Ok(Endpoint {
            endpoint,
            median: m,
            rho_sublevel,
            rho_superlevel,
            gap: (mu - m).abs(),
        })
    })
    .collect()
}

fn grid_extras(s: &Scenario) -> Result<Vec<f64>> {
    match &s.target {
        Target::Set(set) => {
            let enumeration = Enumeration::new(&s.space, &s.dist)?;
            let members = set.materialize(&s.space)?;
            Ok(vec![
                set_stats_from_members(&enumeration, &s.alpha, &members)?.rho,
            ])
        }
        Target::Median(f) | Target::Gap(f) | Target::Drop(f) => {
            let exact = ExactFunctional::new(s, f)?;
            Ok(endpoints(s, &exact)?
                .into_iter()
                .flat_map(|e| [e.rho_sublevel, e.rho_superlevel, e.gap])
                .collect())
        }
    }
}

fn require_product(s: &Scenario, what: &'static str) -> Result<()> {
    if s.dist.is_product() {
        Ok(())
    } else {
        Err(Error::RequiresIndependence(what))
    }
}

/// Certify `|f(x) − f(x')| ≤ d_α(x, x')`, through the coordinate-drop
/// condition when a drop family is attached and holds, otherwise directly.
fn certify_lipschitz(s: &Scenario, f: &Functional, derived: &mut Derived) -> Result<()> {
    if f.has_drop_family() {
        let drop = check_drop_condition(f, &s.alpha, &s.space)?;
        let holds = drop.holds;
        derived.certificates.push(drop);
        if holds {
            derived.lipschitz_path = Some("drop_condition".into());
            return Ok(());
        }
    }
    let cert = check_lipschitz_with(f, &s.alpha, &s.space, s.pair_policy)?;
    let path = match cert.method {
        crate::functionals::CheckMethod::Exhaustive => "lipschitz_exhaustive",
        crate::functionals::CheckMethod::Neighbours => "lipschitz_neighbours",
        crate::functionals::CheckMethod::Sampled => "lipschitz_sampled",
    };
    if !cert.holds {
        return Err(match cert.witness {
            Some(Witness::Pair(x, y)) => Error::LipschitzViolated(x, y),
            _ => unreachable!("failed Lipschitz certificates carry a pair"),
        });
    }
    derived.lipschitz_path = Some(path.into());
    derived.certificates.push(cert);
    Ok(())
}

fn finish(s: &Scenario, rows: Vec<ReportRow>, derived: Derived) -> Result<BoundReport> {
    let scenario = s.canonical_json()?;
    let fingerprint = hex::encode(Sha256::digest(scenario.as_bytes()));
    let summary = Summary::from_rows(&rows, derived, s.seed);
    Ok(BoundReport {
        fingerprint,
        scenario: serde_json::value::RawValue::from_string(scenario)
            .expect("canonical json is valid"),
        rows,
        summary,
    })
}

/// Run the checks that match the scenario's target.
pub fn verify(s: &Scenario) -> Result<BoundReport> {
    match s.target {
        Target::Set(_) => verify_set(s),
        Target::Median(_) => verify_median(s),
        Target::Gap(_) => verify_gap(s),
        Target::Drop(_) => verify_drop_functional(s),
    }
}

/// Set concentration: `P(d ≥ t)·P(A)` against the McDiarmid, simple and
/// improved bounds, and `P(∉A)·P(A)` against the membership bound.
pub fn verify_set(s: &Scenario) -> Result<BoundReport> {
    let Target::Set(set) = &s.target else {
        return Err(Error::WrongTarget("set verification needs a set target"));
    };
    s.alpha.require_normalized()?;
    require_product(s, "set concentration")?;
    let enumeration = Enumeration::new(&s.space, &s.dist)?;
    let members = set.materialize(&s.space)?;
    let stats = set_stats_from_members(&enumeration, &s.alpha, &members)?;
    let (p_in, rho) = (stats.p_in, stats.rho);

    let kind = TargetKind::Set;
    let mut rows = Vec::with_capacity(3 * s.t_grid.len() + 1);
    for &t in &s.t_grid {
        let lhs = stats.distance_curve.tail(t, TailMode::Geq) * p_in;
        rows.push(
            ReportRow::new(kind, BoundId::McdSet, lhs, bounds::mcdiarmid_set_bound(t)?).at_t(t),
        );
        rows.push(
            ReportRow::new(kind, BoundId::SimpleSet, lhs, bounds::simple_set_bound(t)?).at_t(t),
        );
        rows.push(
            ReportRow::new(
                kind,
                BoundId::ImprovedSet,
                lhs,
                bounds::improved_set_bound(t, rho)?,
            )
            .at_t(t),
        );
    }
    rows.push(ReportRow::new(
        kind,
        BoundId::MembershipProduct,
        (1.0 - p_in) * p_in,
        bounds::membership_product_bound(rho)?,
    ));

    let derived = Derived {
        p_in: Some(Num(p_in)),
        rho: Some(Num(rho)),
        ..Default::default()
    };
    finish(s, rows, derived)
}

struct MedianContext {
    exact: ExactFunctional,
    endpoints: Vec<Endpoint>,
    derived: Derived,
}

fn median_context(s: &Scenario, f: &Functional) -> Result<MedianContext> {
    s.alpha.require_normalized()?;
    require_product(s, "median concentration")?;
    let mut derived = Derived::default();
    certify_lipschitz(s, f, &mut derived)?;
    let exact = ExactFunctional::new(s, f)?;
    let endpoints = endpoints(s, &exact)?;
    let probe = DIAMETER_PROBE_FACTOR * s.alpha.l1_sum();
    derived.tail_beyond_diameter = Some(Num(exact
        .deviation_curve(exact.mean(), Side::Upper)
        .tail(probe, TailMode::Geq)));
    derived.mu = Some(Num(exact.mean()));
    derived.median_lo = Some(Num(exact.stats.median_lo));
    derived.median_hi = Some(Num(exact.stats.median_hi));
    derived.medians = endpoints.iter().map(Endpoint::summary).collect();
    Ok(MedianContext {
        exact,
        endpoints,
        derived,
    })
}

/// Median tails at both median endpoints, plus mean tails, for a Lipschitz
/// functional of independent coordinates.
pub fn verify_median(s: &Scenario) -> Result<BoundReport> {
    let Target::Median(f) = &s.target else {
        return Err(Error::WrongTarget(
            "median verification needs a median target",
        ));
    };
    let ctx = median_context(s, f)?;
    let kind = TargetKind::Median;
    let mut rows = Vec::new();

    for e in &ctx.endpoints {
        let upper = ctx.exact.deviation_curve(e.median, Side::Upper);
        let lower = ctx.exact.deviation_curve(e.median, Side::Lower);
        for &t in &s.t_grid {
            let row = |id, lhs, bound, side| {
                ReportRow::new(kind, id, lhs, bound)
                    .at_t(t)
                    .side(side)
                    .median(e.endpoint)
            };
            let lu = upper.tail(t, TailMode::Geq);
            rows.push(row(
                BoundId::MedianImproved,
                lu,
                bounds::median_tail_bound(t, e.rho_sublevel)?,
                Side::Upper,
            ));
            rows.push(row(
                BoundId::MedianSimple,
                lu,
                bounds::median_tail_simple(t)?,
                Side::Upper,
            ));
            rows.push(row(
                BoundId::MedianClassical,
                lu,
                bounds::median_tail_classical(t)?,
                Side::Upper,
            ));
            if t > e.gap {
                rows.push(row(
                    BoundId::ShiftedMedian,
                    lu,
                    bounds::shifted_median_bound(t, e.gap)?,
                    Side::Upper,
                ));
            }

            let ll = lower.tail(t, TailMode::Geq);
            rows.push(row(
                BoundId::MedianImproved,
                ll,
                bounds::median_tail_bound(t, e.rho_superlevel)?,
                Side::Lower,
            ));
            rows.push(row(
                BoundId::MedianSimple,
                ll,
                bounds::median_tail_simple(t)?,
                Side::Lower,
            ));
            rows.push(row(
                BoundId::MedianClassical,
                ll,
                bounds::median_tail_classical(t)?,
                Side::Lower,
            ));
            rows.push(
                row(
                    BoundId::MedianImproved,
                    ll,
                    bounds::median_tail_bound(t, e.rho_sublevel)?,
                    Side::Lower,
                )
                .diagnostic(),
            );
        }
    }

    let mu = ctx.exact.mean();
    for side in [Side::Upper, Side::Lower] {
        let curve = ctx.exact.deviation_curve(mu, side);
        for &t in &s.t_grid {
            rows.push(
                ReportRow::new(
                    kind,
                    BoundId::MeanTail,
                    curve.tail(t, TailMode::Geq),
                    bounds::mean_tail_bound(t)?,
                )
                .at_t(t)
                .side(side),
            );
        }
    }

    let mut derived = ctx.derived;
    derived
        .notes
        .push("diagnostic rows: lower deviation against the sublevel-set rho".into());
    finish(s, rows, derived)
}

/// `|μ − m|` at both median endpoints against the improved and classical
/// gap bounds. The improved bound uses the sublevel `ρ` when `μ ≥ m` and the
/// superlevel `ρ` when `μ < m`.
pub fn verify_gap(s: &Scenario) -> Result<BoundReport> {
    let Target::Gap(f) = &s.target else {
        return Err(Error::WrongTarget("gap verification needs a gap target"));
    };
    let ctx = median_context(s, f)?;
    let kind = TargetKind::Gap;
    let mu = ctx.exact.mean();
    let mut rows = Vec::new();
    for e in &ctx.endpoints {
        let rho = if mu >= e.median {
            e.rho_sublevel
        } else {
            e.rho_superlevel
        };
        rows.push(
            ReportRow::new(kind, BoundId::GapImproved, e.gap, bounds::gap_bound(rho)?)
                .median(e.endpoint),
        );
        rows.push(
            ReportRow::new(
                kind,
                BoundId::GapClassical,
                e.gap,
                bounds::gap_bound_classical(),
            )
            .median(e.endpoint),
        );
        if mu < e.median {
            rows.push(
                ReportRow::new(
                    kind,
                    BoundId::GapImproved,
                    e.gap,
                    bounds::gap_bound(e.rho_sublevel)?,
                )
                .median(e.endpoint)
                .diagnostic(),
            );
        }
    }
    let mut derived = ctx.derived;
    derived
        .notes
        .push("diagnostic rows: gap below the median against the sublevel-set rho".into());
    finish(s, rows, derived)
}

/// Mean tails and moment generating function under the coordinate-drop
/// condition, which does not assume independence. Adds self-bounding rows
/// for independent coordinates and scaled rows when every drop gap lies in
/// `[0, 1]`.
///
/// The drop certificate must hold unless self-bounding parameters are
/// attached and certified, in which case only the rows whose hypotheses
/// hold are emitted.
pub fn verify_drop_functional(s: &Scenario) -> Result<BoundReport> {
    let Target::Drop(f) = &s.target else {
        return Err(Error::WrongTarget("drop verification needs a drop target"));
    };
    s.alpha.require_normalized()?;
    let mut derived = Derived::default();

    let drop = check_drop_condition(f, &s.alpha, &s.space)?;
    let drop_holds = drop.holds;
    let drop_witness = drop.witness.clone();
    derived.certificates.push(drop);

    let sb = match f.self_bounding() {
        Some(params) => {
            require_product(s, "self-bounding tail bounds")?;
            let cert = check_self_bounding(f, &s.space)?;
            let holds = cert.holds;
            derived.certificates.push(cert);
            holds.then_some(params)
        }
        None => None,
    };

    if !drop_holds && sb.is_none() {
        return Err(match drop_witness {
            Some(Witness::Drop { point, coordinate }) => {
                Error::DropConditionViolated { point, coordinate }
            }
            _ => unreachable!("failed drop certificates carry a drop witness"),
        });
    }
    if !drop_holds {
        derived
            .notes
            .push("coordinate-drop condition fails for alpha; drop-condition rows omitted".into());
    }
    if f.self_bounding().is_some() && sb.is_none() {
        derived
            .notes
            .push("self-bounding condition fails; self-bounding rows omitted".into());
    }

    let unit = check_unit_drop(f, &s.space)?;
    let unit_holds = unit.holds;
    derived.certificates.push(unit);

    let exact = ExactFunctional::new(s, f)?;
    let mu = exact.mean();
    derived.mu = Some(Num(mu));
    derived.median_lo = Some(Num(exact.stats.median_lo));
    derived.median_hi = Some(Num(exact.stats.median_hi));

    let kind = TargetKind::Drop;
    let n = s.space.dim();
    let mut rows = Vec::new();
    for side in [Side::Upper, Side::Lower] {
        let curve = exact.deviation_curve(mu, side);
        for &t in &s.t_grid {
            let lhs = curve.tail(t, TailMode::Geq);
            let row = |id, bound| ReportRow::new(kind, id, lhs, bound).at_t(t).side(side);
            if drop_holds {
                rows.push(row(BoundId::DropMeanTail, bounds::drop_mean_tail_bound(t)?));
            }
            if unit_holds {
                rows.push(row(
                    BoundId::DropMeanTailScaled,
                    bounds::drop_mean_tail_scaled(t, n)?,
                ));
            }
            if let Some(SelfBoundingParams { a, b }) = sb {
                let bound = match side {
                    Side::Upper => (
                        BoundId::SbUpper,
                        bounds::sb_upper_bound(t, mu.max(0.0), a, b)?,
                    ),
                    Side::Lower => (
                        BoundId::SbLower,
                        bounds::sb_lower_bound(t, mu.max(0.0), a, b)?,
                    ),
                };
                rows.push(row(bound.0, bound.1));
            }
        }
        if drop_holds {
            for &lambda in &s.lambda_grid {
                rows.push(
                    ReportRow::new(
                        kind,
                        BoundId::Mgf,
                        exact.mgf(lambda, side),
                        bounds::mgf_bound(lambda)?,
                    )
                    .at_lambda(lambda)
                    .side(side),
                );
            }
        }
    }
    if !s.dist.is_product() {
        derived.notes.push("joint (dependent) distribution".into());
    }
    finish(s, rows, derived)
}

/// Size limits for [`random_scenario`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioLimits {
    pub max_n: usize,
    pub max_alphabet: usize,
    pub max_outcomes: u64,
}

impl Default for ScenarioLimits {
    fn default() -> Self {
        Self {
            max_n: 4,
            max_alphabet: 3,
            max_outcomes: 4096,
        }
    }
}

/// Stream reserved for scenario generation, disjoint from sampling streams.
const GENERATOR_STREAM: u64 = 0x5ce_0a10;

fn random_pmf(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let power = rng.random_range(1.0..8.0);
    let raw: Vec<f64> = (0..k)
        .map(|_| (1.0 - rng.random::<f64>()).powf(power))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn random_members(rng: &mut ChaCha8Rng, space: &FiniteSpace, proper: bool) -> Vec<Point> {
    let total = space.outcome_count() as usize;
    loop {
        let q = rng.random_range(0.05..0.95);
        let members: Vec<Point> = space.points().filter(|_| rng.random::<f64>() < q).collect();
        if !members.is_empty() && (!proper || members.len() < total) {
            return members;
        }
    }
}

/// Values of a random function that is 1-Lipschitz for `d_α`. All values
/// are nonnegative.
fn random_lipschitz_table(
    rng: &mut ChaCha8Rng,
    space: &FiniteSpace,
    alpha: &AlphaWeights,
) -> Vec<f64> {
    let points: Vec<Point> = space.points().collect();
    let scale = if rng.random_bool(0.25) {
        rng.random::<f64>()
    } else {
        1.0
    };
    let values: Vec<f64> = match rng.random_range(0..4) {
        0 => {
            let tables: Vec<Vec<f64>> = (0..space.dim())
                .map(|i| {
                    (0..space.alphabet_size(i))
                        .map(|_| alpha.weight(i) * rng.random::<f64>())
                        .collect()
                })
                .collect();
            points
                .iter()
                .map(|p| {
                    p.symbols()
                        .iter()
                        .enumerate()
                        .map(|(i, &s)| tables[i][s])
                        .sum()
                })
                .collect()
        }
        1 => {
            let members = SetMembers::from_sorted(random_members(rng, space, false));
            points
                .iter()
                .map(|p| members.distance_unchecked(alpha, p.symbols()))
                .collect()
        }
        2 => {
            let anchors = random_members(rng, space, false);
            let heights: Vec<f64> = anchors
                .iter()
                .map(|_| rng.random::<f64>() * alpha.l1_sum())
                .collect();
            points
                .iter()
                .map(|p| {
                    anchors
                        .iter()
                        .zip(&heights)
                        .map(|(y, h)| h + alpha.distance_unchecked(p.symbols(), y.symbols()))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        }
        _ => vec![rng.random::<f64>(); points.len()],
    };
    values.into_iter().map(|v| v * scale).collect()
}

/// A random scenario, deterministic in `seed`.
///
/// Set, median and gap targets use product laws. Drop targets use a joint
/// table for about half of the seeds and attach the drop-infimum family;
/// about half of the product-law drop targets also carry certified
/// self-bounding parameters.
pub fn random_scenario(seed: u64, limits: ScenarioLimits, kind: TargetKind) -> Result<Scenario> {
    if limits.max_n == 0 || limits.max_alphabet == 0 {
        return Err(Error::InvalidArgument("limits must be positive".into()));
    }
    if limits.max_alphabet < 2 {
        return Err(Error::InvalidArgument(
            "max_alphabet must be at least 2".into(),
        ));
    }
    let mut rng = substream_rng(seed, GENERATOR_STREAM);

    let space = loop {
        let n = rng.random_range(1..=limits.max_n);
        let mut sizes: Vec<usize> = (0..n)
            .map(|_| rng.random_range(1..=limits.max_alphabet))
            .collect();
        if sizes.iter().all(|&k| k == 1) {
            let i = rng.random_range(0..n);
            sizes[i] = 2;
        }
        let space = FiniteSpace::new(sizes)?;
        if space.outcome_count() <= limits.max_outcomes {
            break space;
        }
    };
    let n = space.dim();

    let alpha = loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0.0
                } else {
                    1.0 - rng.random::<f64>()
                }
            })
            .collect();
        if raw.iter().any(|&w| w > 0.0) {
            break AlphaWeights::new(raw)?.normalize()?;
        }
    };

    let joint = kind == TargetKind::Drop && rng.random_bool(0.5);
    let dist = if joint {
        let table = random_pmf(&mut rng, space.outcome_count() as usize);
        Distribution::joint(&space, table)?
    } else {
        let pmfs = space
            .alphabet_sizes()
            .iter()
            .map(|&k| random_pmf(&mut rng, k))
            .collect();
        Distribution::product(&space, pmfs)?
    };

    let target = match kind {
        TargetKind::Set => Target::Set(SetSpec::Points(random_members(&mut rng, &space, true))),
        TargetKind::Median | TargetKind::Gap | TargetKind::Drop => {
            let values = random_lipschitz_table(&mut rng, &space, &alpha);
            let f = Functional::from_table(&space, values)?;
            match kind {
                TargetKind::Median => Target::Median(f),
                TargetKind::Gap => Target::Gap(f),
                _ => {
                    let mut f = drop_infimum_family(&f, &space);
                    if !joint && rng.random_bool(0.5) {
                        let a = rng.random_range(0.25..2.0);
                        let b = self_bounding_offset(&f, &space, a)?;
                        f = f.with_self_bounding(SelfBoundingParams::new(a, b)?);
                    }
                    Target::Drop(f)
                }
            }
        }
    };
    Scenario::with_default_grids(space, dist, alpha, target, seed)
}

/// Smallest `b ≥ 0` with `Σ_i gap_i(x) ≤ a·f(x) + b` everywhere.
fn self_bounding_offset(f: &Functional, space: &FiniteSpace, a: f64) -> Result<f64> {
    let mut b: f64 = 0.0;
    for x in space.points() {
        let fx = f.eval(&x);
        let total: f64 = (0..space.dim())
            .map(|i| fx - f.drop_value(i, &x.drop_coordinate(i)).unwrap_or(fx))
            .sum();
        b = b.max(total - a * fx);
    }
    Ok(b)
}

/// Outcome of one sweep trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub all_pass: bool,
    pub failures: usize,
    pub diagnostic_failures: usize,
    pub min_slack: f64,
    pub joint: bool,
    /// Largest `|μ − m|` over both endpoints, for functional targets.
    pub max_gap: Option<f64>,
    pub tail_beyond_diameter: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub kind: TargetKind,
    pub trials: usize,
    pub passed: usize,
    pub outcomes: Vec<TrialOutcome>,
}

impl SweepSummary {
    pub fn all_pass(&self) -> bool {
        self.passed == self.trials
    }

    pub fn worst_slack(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.min_slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn failing_seeds(&self) -> Vec<u64> {
        self.outcomes
            .iter()
            .filter(|o| !o.all_pass)
            .map(|o| o.seed)
            .collect()
    }

    pub fn max_gap(&self) -> Option<f64> {
        self.outcomes
            .iter()
            .filter_map(|o| o.max_gap)
            .reduce(f64::max)
    }

    pub fn joint_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.joint).count()
    }

    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "{}: {}/{} pass, worst slack {:.6e}",
            self.kind.as_str(),
            self.passed,
            self.trials,
            self.worst_slack()
        );
        if let Some(g) = self.max_gap() {
            line.push_str(&format!(", max gap {g:.6}"));
        }
        if self.kind == TargetKind::Drop {
            line.push_str(&format!(", joint {}", self.joint_count()));
        }
        let diag: usize = self.outcomes.iter().map(|o| o.diagnostic_failures).sum();
        if diag > 0 {
            line.push_str(&format!(", diagnostic failures {diag}"));
        }
        let failing = self.failing_seeds();
        if !failing.is_empty() {
            let seeds: Vec<String> = failing.iter().map(u64::to_string).collect();
            line.push_str(&format!(", failing seeds [{}]", seeds.join(",")));
        }
        line
    }
}

/// The seed of trial `index` in a sweep started at `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

pub fn run_trial(seed: u64, limits: ScenarioLimits, kind: TargetKind) -> TrialOutcome {
    let result = random_scenario(seed, limits, kind).and_then(|s| {
        let joint = !s.dist.is_product();
        verify(&s).map(|r| (r, joint))
    });
    match result {
        Ok((report, joint)) => {
            let derived = &report.summary.derived;
            TrialOutcome {
                seed,
                all_pass: report.all_pass(),
                failures: report.summary.failures,
                diagnostic_failures: report.summary.diagnostic_failures,
                min_slack: report.summary.min_slack(),
                joint,
                max_gap: derived.medians.iter().map(|m| m.gap.0).reduce(f64::max),
                tail_beyond_diameter: derived.tail_beyond_diameter.map(|n| n.0),
                error: None,
            }
        }
        Err(e) => TrialOutcome {
            seed,
            all_pass: false,
            failures: 0,
            diagnostic_failures: 0,
            min_slack: f64::NEG_INFINITY,
            joint: false,
            max_gap: None,
            tail_beyond_diameter: None,
            error: Some(e.to_string()),
        },
    }
}

/// Run `trials` random scenarios in parallel; outcomes are ordered by trial
/// index.
pub fn sweep(kind: TargetKind, trials: usize, seed: u64, limits: ScenarioLimits) -> SweepSummary {
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(trial_seed(seed, i), limits, kind))
        .collect();
    let passed = outcomes.iter().filter(|o| o.all_pass).count();
    SweepSummary {
        kind,
        trials,
        passed,
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bits(n: usize) -> FiniteSpace {
        FiniteSpace::new(vec![2; n]).unwrap()
    }

    fn s1(t_grid: Vec<f64>) -> Scenario {
        let space = bits(2);
        Scenario::new(
            space.clone(),
            Distribution::uniform(&space),
            AlphaWeights::uniform(2).unwrap(),
            Target::Set(SetSpec::points([vec![0, 0]])),
            t_grid,
            DEFAULT_LAMBDA_GRID.to_vec(),
            1,
        )
        .unwrap()
    }

    fn scaled_sum3(target: fn(Functional) -> Target) -> Scenario {
        let space = bits(3);
        let c = 1.0 / 3f64.sqrt();
        let f = drop_infimum_family(&Functional::weighted_sum(vec![c; 3]), &space);
        Scenario::new(
            space.clone(),
            Distribution::uniform(&space),
            AlphaWeights::uniform(3).unwrap(),
            target(f),
            vec![c],
            DEFAULT_LAMBDA_GRID.to_vec(),
            3,
        )
        .unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let g = default_t_grid(2f64.sqrt(), &[]);
        assert_eq!(g.len(), 24);
        assert!((g[0] - 0.05).abs() < 1e-15);
        assert!((g[23] - 1.2 * 2f64.sqrt()).abs() < 1e-12);
        let g = default_t_grid(1.0, &[0.3, 0.0, -1.0, f64::NAN]);
        assert_eq!(g.len(), 25);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn s1_set_rows() {
        let r = verify_set(&s1(vec![FRAC_1_SQRT_2])).unwrap();
        assert_eq!(r.rows.len(), 4);
        let improved = r.rows_for(BoundId::ImprovedSet).next().unwrap();
        assert!((improved.lhs.0 - 0.1875).abs() < 1e-15);
        assert!((improved.bound.0 - (-1f64).exp()).abs() < 1e-12);
        assert!(improved.pass);
        let member = r.rows_for(BoundId::MembershipProduct).next().unwrap();
        assert!((member.lhs.0 - 0.1875).abs() < 1e-15);
        assert!((member.bound.0 - (-1f64).exp()).abs() < 1e-12);
        assert!(r.all_pass());
    }

    #[test]
    fn whole_space_set_passes_with_zero_lhs() {
        let mut s = s1(vec![0.1, 1.0]);
        s.target = Target::Set(SetSpec::predicate(|_| true));
        let r = verify_set(&s).unwrap();
        assert!(r.all_pass());
        assert!(r.rows.iter().all(|row| row.lhs.0 == 0.0));
    }

    #[test]
    fn set_requires_product_law() {
        let mut s = s1(vec![0.5]);
        s.dist = Distribution::joint(&s.space, vec![0.25; 4]).unwrap();
        assert!(matches!(
            verify_set(&s),
            Err(Error::RequiresIndependence(_))
        ));
    }

    #[test]
    fn scenario_rejects_bad_inputs() {
        let space = bits(2);
        let mk = |alpha: Vec<f64>, t: Vec<f64>| {
            Scenario::new(
                space.clone(),
                Distribution::uniform(&space),
                AlphaWeights::new(alpha).unwrap(),
                Target::Set(SetSpec::points([vec![0, 0]])),
                t,
                vec![0.0],
                0,
            )
        };
        assert!(matches!(
            mk(vec![1.0, 1.0], vec![1.0]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            mk(vec![0.6, 0.8], vec![]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            mk(vec![0.6, 0.8], vec![0.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            mk(vec![0.6], vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn median_example_three_bits() {
        let r = verify_median(&scaled_sum3(Target::Median)).unwrap();
        assert!(r.all_pass(), "{:?}", r.failing_rows().collect::<Vec<_>>());
        let c = 1.0 / 3f64.sqrt();
        let row = r
            .rows
            .iter()
            .find(|row| {
                row.bound_id == BoundId::MedianImproved
                    && row.median_used == Some(MedianEndpoint::Lo)
                    && row.side == Some(Side::Upper)
            })
            .unwrap();
        assert!((row.lhs.0 - 0.5).abs() < 1e-15);
        // rho of the 4-point sublevel set: distance c from each weight-2 string
        // and 2c from (1,1,1), so (3/8)c + (1/8)(2c).
        let rho = 3.0 / 8.0 * c + 2.0 * c / 8.0;
        let lo = &r.summary.derived.medians[0];
        assert!((lo.rho_sublevel.0 - rho).abs() < 1e-12);
        assert!((row.bound.0 - 2.0 * (-bounds::h_exponent(c, rho).unwrap()).exp()).abs() < 1e-12);
        assert_eq!(
            r.summary.derived.lipschitz_path.as_deref(),
            Some("drop_condition")
        );
        for row in r.rows_for(BoundId::MedianClassical) {
            let improved = bounds::median_tail_bound(row.t.unwrap().0, 0.0).unwrap();
            assert!(row.bound.0 >= improved);
        }
    }

    #[test]
    fn constant_median_has_zero_tails() {
        let space = bits(2);
        let s = Scenario::with_default_grids(
            space.clone(),
            Distribution::uniform(&space),
            AlphaWeights::uniform(2).unwrap(),
            Target::Median(Functional::constant(0.7)),
            0,
        )
        .unwrap();
        let r = verify_median(&s).unwrap();
        assert!(r.all_pass());
        assert!(r.rows.iter().all(|row| row.lhs.0 == 0.0));
        assert_eq!(r.summary.derived.tail_beyond_diameter, Some(Num(0.0)));
    }

    #[test]
    fn median_rejects_non_lipschitz() {
        let space = bits(1);
        let s = Scenario::new(
            space.clone(),
            Distribution::uniform(&space),
            AlphaWeights::uniform(1).unwrap(),
            Target::Median(Functional::weighted_sum(vec![2.0])),
            vec![0.5],
            vec![0.0],
            0,
        )
        .unwrap();
        assert!(matches!(
            verify_median(&s),
            Err(Error::LipschitzViolated(_, _))
        ));
    }

    #[test]
    fn lower_tail_with_sublevel_rho_is_only_diagnostic() {
        // One bit with P(1) = 0.6 and f(x) = x: both median endpoints are 1,
        // the sublevel set is everything, and P(m − f ≥ 0.95) = 0.4 exceeds
        // 2·exp(−2·0.95²) ≈ 0.329.
        let space = bits(1);
        let s = Scenario::new(
            space.clone(),
            Distribution::product(&space, vec![vec![0.4, 0.6]]).unwrap(),
            AlphaWeights::uniform(1).unwrap(),
            Target::Median(Functional::weighted_sum(vec![1.0])),
            vec![0.95],
            vec![0.0],
            0,
        )
        .unwrap();
        let r = verify_median(&s).unwrap();
        assert!(r.all_pass());
        assert_eq!(r.summary.diagnostic_failures, 2);
        for diag in r.rows.iter().filter(|row| row.diagnostic) {
            assert!(!diag.pass);
            assert!((diag.lhs.0 - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn gap_example_three_bits() {
        let r = verify_gap(&scaled_sum3(Target::Gap)).unwrap();
        assert!(r.all_pass());
        let lo = r
            .rows_for(BoundId::GapImproved)
            .find(|row| row.median_used == Some(MedianEndpoint::Lo))
            .unwrap();
        let expected_gap = 3f64.sqrt() / 2.0 - 1.0 / 3f64.sqrt();
        assert!((lo.lhs.0 - expected_gap).abs() < 1e-12);
        assert!(lo.bound.0 > 0.28868);
        for row in r.rows_for(BoundId::GapImproved) {
            assert!(row.bound.0 <= bounds::GAP_BOUND_CEILING);
        }
    }

    #[test]
    fn drop_example_three_bits() {
        let r = verify_drop_functional(&scaled_sum3(Target::Drop)).unwrap();
        assert!(r.all_pass());
        let row = r
            .rows_for(BoundId::DropMeanTail)
            .find(|row| row.side == Some(Side::Upper))
            .unwrap();
        assert!((row.lhs.0 - 0.125).abs() < 1e-15);
        assert!((row.bound.0 - (-2.0f64 / 3.0).exp()).abs() < 1e-12);
        let zero = r
            .rows_for(BoundId::Mgf)
            .find(|row| row.lambda == Some(Num(0.0)))
            .unwrap();
        assert_eq!((zero.lhs.0, zero.bound.0, zero.slack.0), (1.0, 1.0, 0.0));
    }

    #[test]
    fn drop_requires_certificate() {
        let space = bits(2);
        let f = Functional::weighted_sum(vec![1.0, 1.0]);
        let s = Scenario::new(
            space.clone(),
            Distribution::uniform(&space),
            AlphaWeights::uniform(2).unwrap(),
            Target::Drop(drop_infimum_family(&f, &space)),
            vec![0.5],
            vec![0.0],
            0,
        )
        .unwrap();
        assert!(matches!(
            verify_drop_functional(&s),
            Err(Error::DropConditionViolated { .. })
        ));
    }

    #[test]
    fn self_bounding_rows_need_independence() {
        let space = bits(2);
        let f = drop_infimum_family(&Functional::weighted_sum(vec![1.0, 1.0]), &space)
            .with_self_bounding(SelfBoundingParams::new(1.0, 0.0).unwrap());
        let mut s = Scenario::new(
            space.clone(),
            Distribution::uniform(&space),
            AlphaWeights::uniform(2).unwrap(),
            Target::Drop(f),
            vec![0.5, 1.0],
            vec![0.0],
            0,
        )
        .unwrap();
        let r = verify_drop_functional(&s).unwrap();
        assert!(r.all_pass());
        assert!(r.rows_for(BoundId::SbUpper).count() == 2);
        assert!(r.rows_for(BoundId::DropMeanTail).count() == 0);
        assert!(r.rows_for(BoundId::DropMeanTailScaled).count() == 4);

        s.dist = Distribution::joint(&space, vec![0.25; 4]).unwrap();
        assert!(matches!(
            verify_drop_functional(&s),
            Err(Error::RequiresIndependence(_))
        ));
    }

    #[test]
    fn wrong_target_is_rejected() {
        let s = s1(vec![1.0]);
        assert!(matches!(verify_median(&s), Err(Error::WrongTarget(_))));
        assert!(matches!(verify_gap(&s), Err(Error::WrongTarget(_))));
        assert!(matches!(
            verify_drop_functional(&s),
            Err(Error::WrongTarget(_))
        ));
    }

    #[test]
    fn random_scenarios_are_reproducible_and_well_formed() {
        for kind in [
            TargetKind::Set,
            TargetKind::Median,
            TargetKind::Gap,
            TargetKind::Drop,
        ] {
            for seed in 0..20 {
                let a = random_scenario(seed, ScenarioLimits::default(), kind).unwrap();
                let b = random_scenario(seed, ScenarioLimits::default(), kind).unwrap();
                assert_eq!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
                assert!((a.alpha.l2_norm() - 1.0).abs() < 1e-9);
                assert!(a.space.outcome_count() <= 4096);
                if let Target::Set(set) = &a.target {
                    let m = set.materialize(&a.space).unwrap();
                    assert!(!m.is_empty());
                    assert!((m.len() as u64) < a.space.outcome_count());
                }
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let s = random_scenario(42, ScenarioLimits::default(), TargetKind::Median).unwrap();
        assert_eq!(verify(&s).unwrap().to_json(), verify(&s).unwrap().to_json());
    }
}
