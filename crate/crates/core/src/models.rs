//! Constructors for the concrete triples: two-point space, rings, discretized
//! circle diffusions `L = Δ − V'∂` and product triples.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{MarkovTriple, TripleDocument};

/// Default cap on the size of a product state space.
pub const DEFAULT_PRODUCT_CAP: usize = 16384;

/// Two-point space `{a, b}` with `Lf(a) = κ(f(b) − f(a))`, `μ = ½(δ_a + δ_b)`.
pub fn two_point(kappa: f64) -> Result<MarkovTriple> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::NonPositiveRate(kappa));
    }
    MarkovTriple::new(
        vec!["a".into(), "b".into()],
        DMatrix::from_row_slice(2, 2, &[-kappa, kappa, kappa, -kappa]),
        vec![0.5, 0.5],
    )
}

/// Nearest-neighbour ring on `m ≥ 3` states with uniform measure.
pub fn ring_chain(m: usize, rate: f64) -> Result<MarkovTriple> {
    if m < 3 {
        return Err(Error::BadSize(format!("ring needs m >= 3, got {m}")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::NonPositiveRate(rate));
    }
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        l[(i, (i + 1) % m)] += rate;
        l[(i, (i + m - 1) % m)] += rate;
        l[(i, i)] = -2.0 * rate;
    }
    MarkovTriple::new(
        (0..m).map(|i| i.to_string()).collect(),
        l,
        vec![1.0 / m as f64; m],
    )
}

/// Node positions `x_i = i·ℓ/m` of a circle of circumference `ℓ`.
pub fn circle_nodes(m: usize, circumference: f64) -> Vec<f64> {
    (0..m)
        .map(|i| i as f64 * circumference / m as f64)
        .collect()
}

/// Reversible discretization of `Δ − V'∂` on a circle with `m ≥ 16` nodes.
///
/// Rates `c_{i,j} = e^{(V_i − V_j)/2}/h²` between neighbours and `μ_i ∝ e^{−V_i}`,
/// so that `μ_i c_{i,j} ∝ e^{−(V_i+V_j)/2}` is symmetric for every `m`.
pub fn circle_diffusion(potential: &[f64], circumference: f64) -> Result<MarkovTriple> {
    let m = potential.len();
    if m < 16 {
        return Err(Error::BadSize(format!(
            "circle diffusion needs m >= 16, got {m}"
        )));
    }
    if !(circumference.is_finite() && circumference > 0.0) {
        return Err(Error::BadParameters(format!(
            "circumference {circumference}"
        )));
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadParameters(
            "potential has non-finite values".into(),
        ));
    }
    let h = circumference / m as f64;
    let inv_h2 = 1.0 / (h * h);
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in [(i + 1) % m, (i + m - 1) % m] {
            l[(i, j)] = (0.5 * (potential[i] - potential[j])).exp() * inv_h2;
        }
        let exit: f64 = l[(i, (i + 1) % m)] + l[(i, (i + m - 1) % m)];
        l[(i, i)] = -exit;
    }
    let vmin = potential.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = potential.iter().map(|v| (vmin - v).exp()).collect();
    let z: f64 = weights.iter().sum();
    let measure = weights.iter().map(|w| w / z).collect();
    MarkovTriple::new((0..m).map(|i| i.to_string()).collect(), l, measure)
}

/// Product triple `L = L₁ ⊕ L₂`, `μ = μ₁ ⊗ μ₂`; state `(x, y)` has index `x·m₂ + y`.
pub fn product(first: &MarkovTriple, second: &MarkovTriple) -> Result<MarkovTriple> {
    product_with_cap(first, second, DEFAULT_PRODUCT_CAP)
}

pub fn product_with_cap(
    first: &MarkovTriple,
    second: &MarkovTriple,
    cap: usize,
) -> Result<MarkovTriple> {
    let (m1, m2) = (first.len(), second.len());
    let size = m1.saturating_mul(m2);
    if size > cap {
        return Err(Error::SizeOverflow { size, cap });
    }
    let (l1, l2) = (first.generator(), second.generator());
    let mut l = DMatrix::zeros(size, size);
    for x in 0..m1 {
        for y in 0..m2 {
            let row = x * m2 + y;
            for xp in 0..m1 {
                if xp != x {
                    l[(row, xp * m2 + y)] = l1[(x, xp)];
                }
            }
            for yp in 0..m2 {
                if yp != y {
                    l[(row, x * m2 + yp)] = l2[(y, yp)];
                }
            }
        }
    }
    for row in 0..size {
        let off: f64 = (0..size).filter(|&c| c != row).map(|c| l[(row, c)]).sum();
        l[(row, row)] = -off;
    }
    let mut states = Vec::with_capacity(size);
    let mut measure = Vec::with_capacity(size);
    for x in 0..m1 {
        for y in 0..m2 {
            states.push(format!("({},{})", first.states()[x], second.states()[y]));
            measure.push(first.measure()[x] * second.measure()[y]);
        }
    }
    let total: f64 = measure.iter().sum();
    measure.iter_mut().for_each(|v| *v /= total);
    let tol = first
        .detailed_balance_tol()
        .max(second.detailed_balance_tol());
    MarkovTriple::with_tolerance(states, l, measure, tol)
}

/// `f(x, y) = f₁(x)` on a product of sizes `(m₁, m₂)`.
pub fn lift_first(f1: &[f64], m2: usize) -> Vec<f64> {
    f1.iter()
        .flat_map(|&v| std::iter::repeat_n(v, m2))
        .collect()
}

/// `f(x, y) = f₂(y)` on a product of sizes `(m₁, m₂)`.
pub fn lift_second(f2: &[f64], m1: usize) -> Vec<f64> {
    (0..m1).flat_map(|_| f2.iter().copied()).collect()
}

/// `f(x, y) = f₁(x) f₂(y)`.
pub fn tensor(f1: &[f64], f2: &[f64]) -> Vec<f64> {
    f1.iter()
        .flat_map(|&a| f2.iter().map(move |&b| a * b))
        .collect()
}

/// `x ↦ ∫ f(x, y) dμ₂(y)`.
pub fn marginal_first(f: &[f64], mu2: &[f64]) -> Vec<f64> {
    let m2 = mu2.len();
    f.chunks(m2)
        .map(|row| row.iter().zip(mu2).map(|(v, w)| v * w).sum())
        .collect()
}

/// `y ↦ ∫ f(x, y) dμ₁(x)`.
pub fn marginal_second(f: &[f64], mu1: &[f64]) -> Vec<f64> {
    let m2 = f.len() / mu1.len();
    let mut out = vec![0.0; m2];
    for (row, w) in f.chunks(m2).zip(mu1) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    out
}

/// Named potentials on the circle, or explicit node values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Named(String),
    Values(Vec<f64>),
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Named("zero".into())
    }
}

impl PotentialSpec {
    /// Values at the `m` nodes; named forms are `zero`, `cos` and `sin`
    /// (one period over the circumference, scaled by `amplitude`).
    pub fn values(&self, m: usize, circumference: f64, amplitude: f64) -> Result<Vec<f64>> {
        let xs = circle_nodes(m, circumference);
        let w = 2.0 * std::f64::consts::PI / circumference;
        match self {
            PotentialSpec::Named(name) => match name.as_str() {
                "zero" | "0" | "none" => Ok(vec![0.0; m]),
                "cos" => Ok(xs.iter().map(|x| amplitude * (w * x).cos()).collect()),
                "sin" => Ok(xs.iter().map(|x| amplitude * (w * x).sin()).collect()),
                other => Err(Error::Config(format!("unknown potential '{other}'"))),
            },
            PotentialSpec::Values(v) => {
                if v.len() != m {
                    return Err(Error::ShapeMismatch {
                        expected: m,
                        got: v.len(),
                    });
                }
                Ok(v.clone())
            }
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Model selection as it appears in config files, e.g.
/// `{"model":"two_point","kappa":2.0}` or `{"model":"circle_diffusion","m":64,"V":"cos"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoPoint {
        kappa: f64,
    },
    Ring {
        m: usize,
        #[serde(default = "one")]
        rate: f64,
    },
    CircleDiffusion {
        m: usize,
        #[serde(rename = "V", default)]
        potential: PotentialSpec,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        circumference: f64,
    },
    Product {
        factors: [Box<ModelSpec>; 2],
    },
    Triple {
        #[serde(flatten)]
        document: TripleDocument,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<MarkovTriple> {
        match self {
            ModelSpec::TwoPoint { kappa } => two_point(*kappa),
            ModelSpec::Ring { m, rate } => ring_chain(*m, *rate),
            ModelSpec::CircleDiffusion {
                m,
                potential,
                amplitude,
                circumference,
            } => {
                if *m < 16 {
                    return Err(Error::BadSize(format!(
                        "circle diffusion needs m >= 16, got {m}"
                    )));
                }
                let v = potential.values(*m, *circumference, *amplitude)?;
                circle_diffusion(&v, *circumference)
            }
            ModelSpec::Product { factors } => product(&factors[0].build()?, &factors[1].build()?),
            ModelSpec::Triple { document } => MarkovTriple::from_document(document.clone()),
        }
    }

    /// Whether the model is a diffusion limit (the circle discretization).
    pub fn is_diffusion_limit(&self) -> bool {
        matches!(self, ModelSpec::CircleDiffusion { .. })
    }

    /// Mesh size for circle diffusions.
    pub fn mesh(&self) -> Option<f64> {
        match self {
            ModelSpec::CircleDiffusion {
                m, circumference, ..
            } => Some(circumference / *m as f64),
            _ => None,
        }
    }
}
