//! Closed-form bounds.
//!
//! Tail bounds are returned uncapped: a value above 1 is valid but vacuous,
//! and callers flag it instead of clamping. `ρ` always denotes the expected
//! distance `E[d_α(X, A)]` to the relevant set.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Key of every bound formula that appears in a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundId {
    /// `P(d ≥ t)·P(A) ≤ e^{−t²/2}`
    McdSet,
    /// `P(d ≥ t)·P(A) ≤ e^{−h(t)}`
    ImprovedSet,
    /// `P(d ≥ t)·P(A) ≤ e^{−t²}`
    SimpleSet,
    /// `P(X ∉ A)·P(X ∈ A) ≤ e^{−2ρ²}`
    MembershipProduct,
    /// `P(±(f − m) ≥ t) ≤ 2e^{−t²/2}`
    MedianClassical,
    /// `P(±(f − m) ≥ t) ≤ 2e^{−h(t)}`
    MedianImproved,
    /// `P(±(f − m) ≥ t) ≤ 2e^{−t²}`
    MedianSimple,
    /// `P(±(f − μ) ≥ t) ≤ e^{−2t²}` for Lipschitz `f`
    MeanTail,
    /// `E[e^{±λ(f − μ)}] ≤ e^{λ²/8}`
    Mgf,
    /// `P(f − m ≥ t) ≤ e^{−2(t − |m − μ|)²}` for `t > |m − μ|`
    ShiftedMedian,
    /// `|m − μ| ≤ √(2π)`
    GapClassical,
    /// `|m − μ| ≤ (2ρ + √(π/2))e^{−2ρ²}`
    GapImproved,
    /// `P(f − μ ≥ t) ≤ exp(−t²/(2(aμ + b + at)))`
    SbUpper,
    /// `P(μ − f ≥ t) ≤ exp(−t²/(2(aμ + b + t/3)))`
    SbLower,
    /// `P(±(f − μ) ≥ t) ≤ e^{−2t²}` under the coordinate-drop condition
    DropMeanTail,
    /// `P(±(f − μ) ≥ t) ≤ e^{−2t²/n}` under unit drop gaps
    DropMeanTailScaled,
}

impl BoundId {
    pub const ALL: [BoundId; 16] = [
        BoundId::McdSet,
        BoundId::ImprovedSet,
        BoundId::SimpleSet,
        BoundId::MembershipProduct,
        BoundId::MedianClassical,
        BoundId::MedianImproved,
        BoundId::MedianSimple,
        BoundId::MeanTail,
        BoundId::Mgf,
        BoundId::ShiftedMedian,
        BoundId::GapClassical,
        BoundId::GapImproved,
        BoundId::SbUpper,
        BoundId::SbLower,
        BoundId::DropMeanTail,
        BoundId::DropMeanTailScaled,
    ];

    /// Name used in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::McdSet => "MCD_SET",
            BoundId::ImprovedSet => "IMPROVED_SET",
            BoundId::SimpleSet => "SIMPLE_SET",
            BoundId::MembershipProduct => "MEMBERSHIP_PRODUCT",
            BoundId::MedianClassical => "MEDIAN_CLASSICAL",
            BoundId::MedianImproved => "MEDIAN_IMPROVED",
            BoundId::MedianSimple => "MEDIAN_SIMPLE",
            BoundId::MeanTail => "MEAN_TAIL",
            BoundId::Mgf => "MGF",
            BoundId::ShiftedMedian => "SHIFTED_MEDIAN",
            BoundId::GapClassical => "GAP_CLASSICAL",
            BoundId::GapImproved => "GAP_IMPROVED",
            BoundId::SbUpper => "SB_UPPER",
            BoundId::SbLower => "SB_LOWER",
            BoundId::DropMeanTail => "DROP_MEAN_TAIL",
            BoundId::DropMeanTailScaled => "DROP_MEAN_TAIL_SCALED",
        }
    }

    /// Kebab-case name used on the command line.
    pub fn cli_name(self) -> String {
        self.as_str().to_ascii_lowercase().replace('_', "-")
    }

    /// Whether the bound caps a probability (and so can be vacuous).
    pub fn is_probability(self) -> bool {
        !matches!(
            self,
            BoundId::Mgf | BoundId::GapClassical | BoundId::GapImproved
        )
    }

    /// Evaluate from named parameters; missing parameters are errors.
    pub fn evaluate(self, p: &BoundParams) -> Result<f64> {
        match self {
            BoundId::McdSet => mcdiarmid_set_bound(p.need_t()?),
            BoundId::ImprovedSet => improved_set_bound(p.need_t()?, p.need_rho()?),
            BoundId::SimpleSet => simple_set_bound(p.need_t()?),
            BoundId::MembershipProduct => membership_product_bound(p.need_rho()?),
            BoundId::MedianClassical => median_tail_classical(p.need_t()?),
            BoundId::MedianImproved => median_tail_bound(p.need_t()?, p.need_rho()?),
            BoundId::MedianSimple => median_tail_simple(p.need_t()?),
            BoundId::MeanTail => mean_tail_bound(p.need_t()?),
            BoundId::Mgf => mgf_bound(p.need("lambda", p.lambda)?),
            BoundId::ShiftedMedian => shifted_median_bound(p.need_t()?, p.need("gap", p.gap)?),
            BoundId::GapClassical => Ok(gap_bound_classical()),
            BoundId::GapImproved => gap_bound(p.need_rho()?),
            BoundId::SbUpper => sb_upper_bound(
                p.need_t()?,
                p.need("mu", p.mu)?,
                p.need("a", p.a)?,
                p.need("b", p.b)?,
            ),
            BoundId::SbLower => sb_lower_bound(
                p.need_t()?,
                p.need("mu", p.mu)?,
                p.need("a", p.a)?,
                p.need("b", p.b)?,
            ),
            BoundId::DropMeanTail => drop_mean_tail_bound(p.need_t()?),
            BoundId::DropMeanTailScaled => {
                let n = p.need("n", p.n)?;
                if n.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "n must be an integer, got {n}"
                    )));
                }
                drop_mean_tail_scaled(p.need_t()?, n as usize)
            }
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    /// Accepts either the report name or the kebab-case CLI name.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_uppercase().replace('-', "_");
        BoundId::ALL
            .into_iter()
            .find(|id| id.as_str() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bound `{s}`")))
    }
}

/// Named inputs for [`BoundId::evaluate`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundParams {
    pub t: Option<f64>,
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub gap: Option<f64>,
    pub mu: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n: Option<f64>,
}

impl BoundParams {
    fn need(&self, name: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| Error::InvalidArgument(format!("missing parameter --{name}")))
    }

    fn need_t(&self) -> Result<f64> {
        self.need("t", self.t)
    }

    fn need_rho(&self) -> Result<f64> {
        self.need("rho", self.rho)
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be nonnegative and finite, got {v}"
        )))
    }
}

/// Piecewise exponent: `2ρ²` for `t < ρ`, `t² + (t − 2ρ)²` for `t ≥ ρ`.
/// Both branches equal `2ρ²` at `t = ρ`.
pub fn h_exponent(t: f64, rho: f64) -> Result<f64> {
    let t = positive("t", t)?;
    let rho = nonnegative("rho", rho)?;
    Ok(if t < rho {
        2.0 * rho * rho
    } else {
        t * t + (t - 2.0 * rho).powi(2)
    })
}

pub fn mcdiarmid_set_bound(t: f64) -> Result<f64> {
    let t = positive("t", t)?;
    Ok((-t * t / 2.0).exp())
}

pub fn simple_set_bound(t: f64) -> Result<f64> {
    let t = positive("t", t)?;
    Ok((-t * t).exp())
}

pub fn improved_set_bound(t: f64, rho: f64) -> Result<f64> {
    Ok((-h_exponent(t, rho)?).exp())
}

pub fn membership_product_bound(rho: f64) -> Result<f64> {
    let rho = nonnegative("rho", rho)?;
    Ok((-2.0 * rho * rho).exp())
}

pub fn median_tail_bound(t: f64, rho: f64) -> Result<f64> {
    Ok(2.0 * improved_set_bound(t, rho)?)
}

pub fn median_tail_classical(t: f64) -> Result<f64> {
    Ok(2.0 * mcdiarmid_set_bound(t)?)
}

pub fn median_tail_simple(t: f64) -> Result<f64> {
    Ok(2.0 * simple_set_bound(t)?)
}

pub fn mean_tail_bound(t: f64) -> Result<f64> {
    let t = positive("t", t)?;
    Ok((-2.0 * t * t).exp())
}

pub fn mgf_bound(lambda: f64) -> Result<f64> {
    let lambda = nonnegative("lambda", lambda)?;
    Ok((lambda * lambda / 8.0).exp())
}

/// Valid only for `t > gap`.
pub fn shifted_median_bound(t: f64, gap: f64) -> Result<f64> {
    let t = positive("t", t)?;
    let gap = nonnegative("gap", gap)?;
    if t <= gap {
        return Err(Error::OutsideValidity {
            bound: "shifted median bound",
            t,
        });
    }
    Ok((-2.0 * (t - gap).powi(2)).exp())
}

/// `(2ρ + √(π/2))·e^{−2ρ²}`.
pub fn gap_bound(rho: f64) -> Result<f64> {
    let rho = nonnegative("rho", rho)?;
    Ok((2.0 * rho + (PI / 2.0).sqrt()) * (-2.0 * rho * rho).exp())
}

/// `√(2π)`.
pub fn gap_bound_classical() -> f64 {
    (2.0 * PI).sqrt()
}

/// Upper bound on every value of [`gap_bound`].
pub const GAP_BOUND_CEILING: f64 = 1.5503;

/// Maximum of [`gap_bound`] over `ρ ∈ [lo, hi]` on a uniform grid with the
/// given step. Returns `(max, argmax)`.
pub fn gap_bound_grid_max(lo: f64, hi: f64, step: f64) -> Result<(f64, f64)> {
    let lo = nonnegative("lo", lo)?;
    let step = positive("step", step)?;
    if !hi.is_finite() || hi < lo {
        return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
    }
    let steps = ((hi - lo) / step).round() as usize;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 0..=steps {
        let rho = lo + k as f64 * step;
        let v = gap_bound(rho)?;
        if v > best.0 {
            best = (v, rho);
        }
    }
    Ok(best)
}

fn check_sb(t: f64, mu: f64, a: f64, b: f64) -> Result<()> {
    positive("t", t)?;
    positive("a", a)?;
    nonnegative("b", b)?;
    nonnegative("mu", mu)?;
    Ok(())
}

/// `exp(−t²/(2(aμ + b + a·t)))`.
pub fn sb_upper_bound(t: f64, mu: f64, a: f64, b: f64) -> Result<f64> {
    check_sb(t, mu, a, b)?;
    let denom = a * mu + b + a * t;
    if denom <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "nonpositive denominator {denom}"
        )));
    }
    Ok((-t * t / (2.0 * denom)).exp())
}

/// `exp(−t²/(2(aμ + b + t/3)))`.
pub fn sb_lower_bound(t: f64, mu: f64, a: f64, b: f64) -> Result<f64> {
    check_sb(t, mu, a, b)?;
    let denom = a * mu + b + t / 3.0;
    if denom <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "nonpositive denominator {denom}"
        )));
    }
    Ok((-t * t / (2.0 * denom)).exp())
}

pub fn drop_mean_tail_bound(t: f64) -> Result<f64> {
    mean_tail_bound(t)
}

/// `e^{−2t²/n}`.
pub fn drop_mean_tail_scaled(t: f64, n: usize) -> Result<f64> {
    let t = positive("t", t)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok((-2.0 * t * t / n as f64).exp())
}
