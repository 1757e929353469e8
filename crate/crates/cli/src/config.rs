//! JSON config files accepted by the subcommands.

use std::f64::consts::TAU;

use markov_transport::harness::HarnessOptions;
use markov_transport::line::LineGrid;
use markov_transport::models::circle_nodes;
use markov_transport::transport::SolverOptions;
use markov_transport::{DensityVector, Error, MarkovTriple, ModelSpec, Result, XiFunction};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A density given inline or by name.
///
/// Names: `uniform`, `random` (seeded, weights in `[0.5, 1.5]`), `cos` and
/// `sin` (`1 ± 0.3` times one period over the states), and on line grids
/// `{"mean": m, "sigma": s}` Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Values(Vec<f64>),
    Gaussian { mean: f64, sigma: f64 },
    Named(String),
}

impl DensitySpec {
    /// Density on a finite triple, normalized to unit `μ`-mean.
    pub fn on_chain(&self, triple: &MarkovTriple, seed: u64) -> Result<Vec<f64>> {
        let m = triple.len();
        let raw = match self {
            DensitySpec::Values(v) => {
                return Ok(DensityVector::new(triple, v.clone())?.into_inner())
            }
            DensitySpec::Gaussian { .. } => {
                return Err(Error::Config("Gaussian densities need a line model".into()))
            }
            DensitySpec::Named(name) => match name.as_str() {
                "uniform" => vec![1.0; m],
                "random" => seeded_weights(m, seed),
                "cos" | "sin" => periodic(name, &circle_nodes(m, 1.0)),
                other => return Err(Error::Config(format!("unknown density preset '{other}'"))),
            },
        };
        Ok(DensityVector::normalized(triple, raw)?.into_inner())
    }

    /// Density on a line grid, normalized to unit integral.
    pub fn on_line(&self, grid: &LineGrid) -> Result<Vec<f64>> {
        let v = match self {
            DensitySpec::Values(v) if v.len() == grid.len() => v.clone(),
            DensitySpec::Values(v) => {
                return Err(Error::ShapeMismatch {
                    expected: grid.len(),
                    got: v.len(),
                })
            }
            DensitySpec::Gaussian { mean, sigma } => return Ok(grid.gaussian(*mean, *sigma)),
            DensitySpec::Named(name) => {
                return Err(Error::Config(format!(
                    "preset '{name}' is not available on line grids"
                )))
            }
        };
        let mass = grid.integrate(&v);
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::NotNormalized(mass));
        }
        Ok(v.into_iter().map(|x| x / mass).collect())
    }
}

fn periodic(name: &str, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| match name {
            "cos" => 1.0 + 0.3 * (TAU * x).cos(),
            _ => 1.0 + 0.3 * (TAU * x).sin(),
        })
        .collect()
}

/// SplitMix64 draws mapped to `[0.5, 1.5]`; stable across platforms and releases.
fn seeded_weights(m: usize, seed: u64) -> Vec<f64> {
    let mut state = seed;
    (0..m)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            0.5 + (z >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Dimension parameter: a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension(pub f64);

impl Default for Dimension {
    fn default() -> Self {
        Dimension(f64::INFINITY)
    }
}

impl Serialize for Dimension {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Dimension {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(Dimension(n)),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(Dimension(f64::INFINITY))
            }
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad dimension '{t}'"))),
        }
    }
}

/// Either a finite triple or a uniform grid on an interval of the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    Line(LineModel),
    Chain(ModelSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum LineModel {
    Line { a: f64, b: f64, m: usize },
}

impl LineModel {
    pub fn grid(&self) -> Result<LineGrid> {
        let LineModel::Line { a, b, m } = self;
        LineGrid::new(*a, *b, *m)
    }
}

fn default_slices() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub model: ModelSpec,
    pub f: DensitySpec,
    pub g: DensitySpec,
    #[serde(rename = "K", default = "default_slices")]
    pub slices: usize,
    #[serde(default)]
    pub xi: Option<XiFunction>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub n: Dimension,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
}

fn default_samples() -> usize {
    64
}

/// Numeric parameters of a scenario; each check reads the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Dimension>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub slices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Log-Sobolev constant.
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<XiFunction>,
    /// Two-point geodesic endpoints, as the mass parameter of each state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub inequality_id: String,
    pub model: ModelChoice,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<DensitySpec>,
    /// Vector field for the weighted-field heat check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// When set, the report is labeled diagnostic with this reason and does
    /// not gate the exit code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub options: HarnessOptions,
}

pub const BUNDLED_SUITE: &str = include_str!("../presets/paper-suite.json");

/// Reads and parses a config, mapping every failure to a config error.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl VerifyConfig {
    /// Expands a named preset into its scenarios, keeping explicit scenarios after them.
    pub fn resolve(mut self) -> Result<Self> {
        if let Some(name) = &self.preset {
            let base: VerifyConfig = match name.as_str() {
                "paper-suite" => parse(BUNDLED_SUITE)?,
                other => return Err(Error::Config(format!("unknown preset '{other}'"))),
            };
            let mut scenarios = base.scenarios;
            scenarios.append(&mut self.scenarios);
            self.scenarios = scenarios;
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios to run".into()));
        }
        Ok(self)
    }
}
