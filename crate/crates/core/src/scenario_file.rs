//! JSON scenario files.
//!
//! ```json
//! {
//!   "space": { "alphabet_sizes": [2, 2] },
//!   "distribution": { "kind": "product", "pmfs": [[0.5, 0.5], [0.5, 0.5]] },
//!   "alpha": { "weights": [1, 1], "normalize": true },
//!   "target": { "kind": "set", "set": { "points": [[0, 0]] } },
//!   "grids": { "t": [0.70710678118654757] },
//!   "seed": 1
//! }
//! ```
//!
//! `distribution.kind` is `product` (with `pmfs`), `joint` (with
//! `joint_table`, indexed by outcome rank) or `uniform`. Functional targets
//! (`median`, `gap`, `drop`) carry a `functional` of type `table`,
//! `weighted_sum` or `distance_to_set`, and optionally a `drop_family`
//! (`"infimum"` or `{"tables": [...]}`) and `self_bounding` `{a, b}`.
//! Missing grids fall back to the defaults; `caps` may set `enumeration` and
//! `lipschitz_pairs`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::functionals::{drop_infimum_family, Functional, PairPolicy, SelfBoundingParams};
use crate::hamming::{AlphaWeights, Point, SetSpec};
use crate::space::{Distribution, FiniteSpace, DEFAULT_ENUMERATION_CAP};
use crate::verify::{Scenario, Target, DEFAULT_LAMBDA_GRID};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub space: SpaceSpec,
    pub distribution: DistributionSpec,
    pub alpha: AlphaSpec,
    pub target: TargetSpec,
    #[serde(default)]
    pub grids: GridSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: CapSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub alphabet_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Product { pmfs: Vec<Vec<f64>> },
    Joint { joint_table: Vec<f64> },
    Uniform,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetFileSpec {
    pub points: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    /// One value per outcome, in rank order.
    Table { values: Vec<f64> },
    /// `Σ c_i · x_i` over symbol indices.
    WeightedSum { coefficients: Vec<f64> },
    /// `d_α(x, set)` under the scenario's weights.
    DistanceToSet { set: SetFileSpec },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DropFamilySpec {
    Named(DropFamilyName),
    Tables { tables: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropFamilyName {
    Infimum,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfBoundingSpec {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: String,
    pub set: Option<SetFileSpec>,
    pub functional: Option<FunctionalSpec>,
    pub drop_family: Option<DropFamilySpec>,
    pub self_bounding: Option<SelfBoundingSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapSpec {
    pub enumeration: Option<u64>,
    pub lipschitz_pairs: Option<u64>,
}

fn at<T>(key: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::AtKey {
        key,
        source: Box::new(e),
    })
}

fn set_spec(spec: &SetFileSpec) -> SetSpec {
    SetSpec::Points(spec.points.iter().cloned().map(Point::new).collect())
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Build the scenario. `default_cap` applies when `caps.enumeration` is
    /// absent.
    pub fn build(&self, default_cap: u64) -> Result<Scenario> {
        let cap = self.caps.enumeration.unwrap_or(default_cap);
        if cap == 0 {
            return Err(Error::AtKey {
                key: "caps.enumeration",
                source: Box::new(Error::InvalidArgument("cap must be positive".into())),
            });
        }
        let space = at(
            "space.alphabet_sizes",
            FiniteSpace::new(self.space.alphabet_sizes.clone()),
        )?
        .with_cap(cap);
        at("space.alphabet_sizes", space.check_enumerable())?;

        let dist = at(
            "distribution",
            match &self.distribution {
                DistributionSpec::Product { pmfs } => Distribution::product(&space, pmfs.clone()),
                DistributionSpec::Joint { joint_table } => {
                    Distribution::joint(&space, joint_table.clone())
                }
                DistributionSpec::Uniform => Ok(Distribution::uniform(&space)),
            },
        )?;

        let weights = at(
            "alpha.weights",
            AlphaWeights::new(self.alpha.weights.clone()),
        )?;
        at("alpha.weights", weights.check_dim(space.dim()))?;
        let alpha = if self.alpha.normalize {
            at("alpha.weights", weights.normalize())?
        } else {
            at(
                "alpha.normalize",
                weights.require_normalized().map(|_| weights),
            )?
        };

        let target = at("target", self.target(&space, &alpha))?;

        let lambda = self
            .grids
            .lambda
            .clone()
            .unwrap_or_else(|| DEFAULT_LAMBDA_GRID.to_vec());
        let t = self.grids.t.clone().unwrap_or_else(|| vec![1.0]);
        let mut scenario = at(
            "grids",
            Scenario::new(space, dist, alpha, target, t, lambda, self.seed),
        )?;
        if let Some(max_pairs) = self.caps.lipschitz_pairs {
            scenario.pair_policy = PairPolicy::Auto { max_pairs };
        }
        if self.grids.t.is_none() {
            let defaults = Scenario::with_default_grids(
                scenario.space.clone(),
                scenario.dist.clone(),
                scenario.alpha.clone(),
                scenario.target.clone(),
                scenario.seed,
            )?;
            scenario.t_grid = defaults.t_grid;
        }
        Ok(scenario)
    }

    fn target(&self, space: &FiniteSpace, alpha: &AlphaWeights) -> Result<Target> {
        let spec = &self.target;
        let kind = spec.kind.as_str();
        if kind == "set" {
            let set = spec
                .set
                .as_ref()
                .ok_or_else(|| Error::Schema("set target needs `set`".into()))?;
            if spec.functional.is_some()
                || spec.drop_family.is_some()
                || spec.self_bounding.is_some()
            {
                return Err(Error::Schema("set target takes only `set`".into()));
            }
            let set = set_spec(set);
            at("target.set", set.materialize(space))?;
            return Ok(Target::Set(set));
        }
        if !matches!(kind, "median" | "gap" | "drop") {
            return Err(Error::Schema(format!(
                "unknown kind `{kind}` (expected set, median, gap or drop)"
            )));
        }
        if spec.set.is_some() {
            return Err(Error::Schema(format!(
                "{kind} target takes `functional`, not `set`"
            )));
        }
        let fspec = spec
            .functional
            .as_ref()
            .ok_or_else(|| Error::Schema(format!("{kind} target needs `functional`")))?;
        let mut f = at(
            "target.functional",
            match fspec {
                FunctionalSpec::Table { values } => Functional::from_table(space, values.clone()),
                FunctionalSpec::WeightedSum { coefficients } => {
                    if coefficients.len() != space.dim() {
                        Err(Error::DimensionMismatch {
                            expected: space.dim(),
                            actual: coefficients.len(),
                        })
                    } else {
                        Functional::from_table(
                            space,
                            Functional::weighted_sum(coefficients.clone()).tabulate(space)?,
                        )
                    }
                }
                FunctionalSpec::DistanceToSet { set } => {
                    Functional::distance_to_set(alpha, &set_spec(set), space)
                }
            },
        )?;
        f = match &spec.drop_family {
            None => f,
            Some(DropFamilySpec::Named(DropFamilyName::Infimum)) => drop_infimum_family(&f, space),
            Some(DropFamilySpec::Tables { tables }) => at(
                "target.drop_family",
                f.with_drop_tables(space, tables.clone()),
            )?,
        };
        if let Some(SelfBoundingSpec { a, b }) = spec.self_bounding {
            if !f.has_drop_family() {
                return Err(Error::AtKey {
                    key: "target.self_bounding",
                    source: Box::new(Error::MissingDropFamily),
                });
            }
            f = f.with_self_bounding(at("target.self_bounding", SelfBoundingParams::new(a, b))?);
        }
        Ok(match kind {
            "median" => Target::Median(f),
            "gap" => Target::Gap(f),
            _ => {
                if !f.has_drop_family() {
                    return Err(Error::AtKey {
                        key: "target.drop_family",
                        source: Box::new(Error::MissingDropFamily),
                    });
                }
                Target::Drop(f)
            }
        })
    }
}

/// Parse and build a scenario file with the given default enumeration cap.
pub fn load_scenario(path: &Path, default_cap: u64) -> Result<Scenario> {
    ScenarioFile::read(path)?.build(default_cap)
}

/// Parse and build scenario text with the library default cap.
pub fn scenario_from_str(text: &str) -> Result<Scenario> {
    ScenarioFile::parse(text)?.build(DEFAULT_ENUMERATION_CAP)
}
