//! Finite reversible Markov triples and the Γ-calculus built on them.
//!
//! A triple is a generator `L` on `m` states together with a probability
//! measure `μ` satisfying detailed balance `μ(x)L(x,y) = μ(y)L(y,x)`. All
//! operators are evaluated with the discrete double-sum formulas
//!
//! ```text
//! Lf(x)     = Σ_y L(x,y) (f(y) − f(x))
//! Γ(f,g)(x) = ½ Σ_y L(x,y) (f(x) − f(y)) (g(x) − g(y))
//! Γ₂(f)     = ½ (LΓ(f) − 2Γ(f, Lf))
//! ```
//!
//! which keep `Γ(f)` pointwise non-negative in floating point.

use std::ops::Deref;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::SpectralCache;
use crate::xi::XiFunction;

/// Default absolute tolerance on `μ(x)L(x,y) − μ(y)L(y,x)`.
pub const DEFAULT_DETAILED_BALANCE_TOL: f64 = 1e-10;

/// Row sums of the generator must vanish to this tolerance (scaled by the
/// largest exit rate when that exceeds one).
const ROW_SUM_TOL: f64 = 1e-12;

/// Mass tolerance for densities.
pub const MASS_TOL: f64 = 1e-10;

/// Densities below this are clamped inside logarithms.
const LOG_FLOOR: f64 = 1e-300;

/// A real function on the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn constant(m: usize, value: f64) -> Self {
        ScalarField(vec![value; m])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        ScalarField(v)
    }
}

/// A probability density with respect to the invariant measure.
///
/// Construction checks non-negativity and `Σ μ(x) f(x) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityVector(Vec<f64>);

impl DensityVector {
    pub fn new(triple: &MarkovTriple, values: Vec<f64>) -> Result<Self> {
        triple.check_len(values.len())?;
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::ZeroDensity { index: i, value: v });
        }
        let mass = triple.mean(&values);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized(mass));
        }
        Ok(DensityVector(values))
    }

    /// Rescales arbitrary positive weights into a density.
    pub fn normalized(triple: &MarkovTriple, mut values: Vec<f64>) -> Result<Self> {
        triple.check_len(values.len())?;
        let mass = triple.mean(&values);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::NotNormalized(mass));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        DensityVector::new(triple, values)
    }

    pub fn uniform(triple: &MarkovTriple) -> Self {
        DensityVector(vec![1.0; triple.len()])
    }

    /// Membership in the admissible class: every entry strictly positive.
    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }

    pub fn require_positive(&self) -> Result<()> {
        match self.0.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            Some((i, &v)) => Err(Error::ZeroDensity { index: i, value: v }),
            None => Ok(()),
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DensityVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One off-diagonal transition `from → to` with positive rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// A validated finite reversible Markov triple `(E, L, μ)`.
#[derive(Debug, Clone)]
pub struct MarkovTriple {
    states: Vec<String>,
    generator: DMatrix<f64>,
    measure: Vec<f64>,
    detailed_balance_tol: f64,
    transitions: Vec<Transition>,
    spectral: OnceLock<SpectralCache>,
}

/// JSON document form of a triple: generator is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleDocument {
    pub states: Vec<String>,
    pub generator: Vec<Vec<f64>>,
    pub measure: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detailed_balance_tol: Option<f64>,
}

impl MarkovTriple {
    /// Validates and builds a triple with the default detailed-balance tolerance.
    pub fn new(states: Vec<String>, generator: DMatrix<f64>, measure: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(states, generator, measure, DEFAULT_DETAILED_BALANCE_TOL)
    }

    pub fn with_tolerance(
        states: Vec<String>,
        generator: DMatrix<f64>,
        measure: Vec<f64>,
        detailed_balance_tol: f64,
    ) -> Result<Self> {
        let m = states.len();
        if m == 0 {
            return Err(Error::BadSize("empty state space".into()));
        }
        if generator.nrows() != m || generator.ncols() != m {
            return Err(Error::ShapeMismatch {
                expected: m,
                got: generator.nrows().max(generator.ncols()),
            });
        }
        if measure.len() != m {
            return Err(Error::ShapeMismatch {
                expected: m,
                got: measure.len(),
            });
        }

        for x in 0..m {
            let mut exit = 0.0;
            let mut sum = 0.0;
            for y in 0..m {
                let l = generator[(x, y)];
                if !l.is_finite() {
                    return Err(Error::NonMarkovGenerator(format!("entry ({x},{y}) is {l}")));
                }
                if x != y {
                    if l < 0.0 {
                        return Err(Error::NonMarkovGenerator(format!(
                            "negative off-diagonal entry L({x},{y}) = {l}"
                        )));
                    }
                    exit += l;
                }
                sum += l;
            }
            if sum.abs() > ROW_SUM_TOL * exit.max(1.0) {
                return Err(Error::NonMarkovGenerator(format!(
                    "row {x} sums to {sum:e}"
                )));
            }
        }

        if let Some(v) = measure.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositiveMeasure(format!("entry {v}")));
        }
        let total: f64 = measure.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::NonPositiveMeasure(format!("total mass {total}")));
        }

        for x in 0..m {
            for y in (x + 1)..m {
                let residual = measure[x] * generator[(x, y)] - measure[y] * generator[(y, x)];
                if residual.abs() > detailed_balance_tol {
                    return Err(Error::DetailedBalanceViolation { x, y, residual });
                }
            }
        }

        let mut transitions = Vec::new();
        for x in 0..m {
            for y in 0..m {
                if x != y && generator[(x, y)] > 0.0 {
                    transitions.push(Transition {
                        from: x,
                        to: y,
                        rate: generator[(x, y)],
                    });
                }
            }
        }

        Ok(MarkovTriple {
            states,
            generator,
            measure,
            detailed_balance_tol,
            transitions,
            spectral: OnceLock::new(),
        })
    }

    /// The triple with generator `c·L` and the same measure.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::NonPositiveRate(c));
        }
        Self::with_tolerance(
            self.states.clone(),
            &self.generator * c,
            self.measure.clone(),
            self.detailed_balance_tol * c.max(1.0),
        )
    }

    /// Builds from row-major nested vectors, with state labels `0..m`.
    pub fn from_rows(generator: Vec<Vec<f64>>, measure: Vec<f64>) -> Result<Self> {
        let states = (0..generator.len()).map(|i| i.to_string()).collect();
        Self::from_document(TripleDocument {
            states,
            generator,
            measure,
            detailed_balance_tol: None,
        })
    }

    pub fn from_document(doc: TripleDocument) -> Result<Self> {
        let m = doc.states.len();
        if doc.generator.len() != m {
            return Err(Error::ShapeMismatch {
                expected: m,
                got: doc.generator.len(),
            });
        }
        let mut data = Vec::with_capacity(m * m);
        for row in &doc.generator {
            if row.len() != m {
                return Err(Error::ShapeMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        let generator = DMatrix::from_row_slice(m, m, &data);
        Self::with_tolerance(
            doc.states,
            generator,
            doc.measure,
            doc.detailed_balance_tol
                .unwrap_or(DEFAULT_DETAILED_BALANCE_TOL),
        )
    }

    pub fn to_document(&self) -> TripleDocument {
        let m = self.len();
        TripleDocument {
            states: self.states.clone(),
            generator: (0..m)
                .map(|x| (0..m).map(|y| self.generator[(x, y)]).collect())
                .collect(),
            measure: self.measure.clone(),
            detailed_balance_tol: Some(self.detailed_balance_tol),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn detailed_balance_tol(&self) -> f64 {
        self.detailed_balance_tol
    }

    /// Largest exit rate `max_x |L(x,x)|`.
    pub fn max_rate(&self) -> f64 {
        (0..self.len())
            .map(|x| self.generator[(x, x)].abs())
            .fold(0.0, f64::max)
    }

    /// Spectral decomposition of `L` in `L²(μ)`, computed on first use.
    pub fn spectral(&self) -> &SpectralCache {
        self.spectral.get_or_init(|| SpectralCache::new(self))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }

    /// `Σ μ(x) f(x)`.
    pub fn mean(&self, f: &[f64]) -> f64 {
        self.measure.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// `Σ μ(x) f(x) g(x)`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.measure
            .iter()
            .zip(f.iter().zip(g))
            .map(|(m, (a, b))| m * a * b)
            .sum()
    }

    pub fn apply(&self, f: &[f64]) -> Result<ScalarField> {
        self.check_len(f.len())?;
        let mut out = vec![0.0; self.len()];
        self.apply_into(f, &mut out);
        Ok(ScalarField(out))
    }

    pub(crate) fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.transitions {
            out[t.from] += t.rate * (f[t.to] - f[t.from]);
        }
    }

    /// `Lᵀ v`, the Euclidean adjoint of [`apply`](Self::apply).
    pub(crate) fn apply_transpose_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for t in &self.transitions {
            out[t.to] += t.rate * v[t.from];
            out[t.from] -= t.rate * v[t.from];
        }
    }

    pub(crate) fn gamma_into(&self, f: &[f64], g: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.transitions {
            out[t.from] += 0.5 * t.rate * (f[t.from] - f[t.to]) * (g[t.from] - g[t.to]);
        }
    }

    /// Carré du champ `Γ(f,g)`.
    pub fn gamma(&self, f: &[f64], g: &[f64]) -> Result<ScalarField> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        let mut out = vec![0.0; self.len()];
        self.gamma_into(f, g, &mut out);
        Ok(ScalarField(out))
    }

    /// `Γ(f) = Γ(f,f)`.
    pub fn gamma_sq(&self, f: &[f64]) -> Result<ScalarField> {
        self.gamma(f, f)
    }

    /// `½(L(fg) − f Lg − g Lf)` through the dense matrix; agrees with
    /// [`gamma`](Self::gamma) up to rounding.
    pub fn gamma_operator_form(&self, f: &[f64], g: &[f64]) -> Result<ScalarField> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        let m = self.len();
        let matvec = |v: &[f64]| -> Vec<f64> {
            (0..m)
                .map(|x| (0..m).map(|y| self.generator[(x, y)] * v[y]).sum())
                .collect()
        };
        let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        let lfg = matvec(&fg);
        let lf = matvec(f);
        let lg = matvec(g);
        Ok(ScalarField(
            (0..m)
                .map(|x| 0.5 * (lfg[x] - f[x] * lg[x] - g[x] * lf[x]))
                .collect(),
        ))
    }

    /// Iterated carré du champ `Γ₂(f) = ½(LΓ(f) − 2Γ(f, Lf))`.
    pub fn gamma2(&self, f: &[f64]) -> Result<ScalarField> {
        self.check_len(f.len())?;
        let m = self.len();
        let mut gf = vec![0.0; m];
        self.gamma_into(f, f, &mut gf);
        let mut lgf = vec![0.0; m];
        self.apply_into(&gf, &mut lgf);
        let mut lf = vec![0.0; m];
        self.apply_into(f, &mut lf);
        let mut cross = vec![0.0; m];
        self.gamma_into(f, &lf, &mut cross);
        Ok(ScalarField(
            (0..m).map(|x| 0.5 * lgf[x] - cross[x]).collect(),
        ))
    }

    /// `Ent_μ(f) = Σ μ f log f` with `0·log 0 = 0`.
    pub fn entropy(&self, f: &[f64]) -> f64 {
        self.measure
            .iter()
            .zip(f)
            .map(|(&m, &v)| {
                if v > 0.0 {
                    m * v * v.max(LOG_FLOOR).ln()
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// `Ent^Φ(f) = Σ μ Φ(f) − Φ(Σ μ f)`.
    pub fn phi_entropy(&self, f: &[f64], xi: &XiFunction) -> Result<f64> {
        self.check_len(f.len())?;
        if let Some(v) = f.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::DomainError(format!(
                "phi-entropy needs a non-negative argument, got {v}"
            )));
        }
        let integral: f64 = self
            .measure
            .iter()
            .zip(f)
            .map(|(&m, &v)| m * xi.phi(v))
            .sum();
        Ok(integral - xi.phi(self.mean(f)))
    }

    /// `I(f) = Σ μ Γ(f)/f`.
    pub fn fisher_information(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        if let Some((i, &v)) = f.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::ZeroDensity { index: i, value: v });
        }
        let mut g = vec![0.0; self.len()];
        self.gamma_into(f, f, &mut g);
        Ok(self
            .measure
            .iter()
            .zip(g.iter().zip(f))
            .map(|(m, (gv, fv))| m * gv / fv)
            .sum())
    }

    /// Entropy dissipation `Σ μ Γ(f, log f) = −d/dt Ent(P_t f)|_{t=0}`.
    ///
    /// Equals [`fisher_information`](Self::fisher_information) for diffusions;
    /// on jump chains it is strictly smaller unless `f` is constant.
    pub fn entropy_dissipation(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        if let Some((i, &v)) = f.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::ZeroDensity { index: i, value: v });
        }
        let logf: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        let mut g = vec![0.0; self.len()];
        self.gamma_into(f, &logf, &mut g);
        Ok(self.mean(&g))
    }

    /// Solves `Lh = rhs` for mean-zero `rhs`, returning the mean-zero solution.
    pub fn solve_poisson(&self, rhs: &[f64]) -> Result<ScalarField> {
        self.check_len(rhs.len())?;
        let mean = self.mean(rhs);
        let scale = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if mean.abs() > 1e-10 * scale {
            return Err(Error::NotMeanZero(mean));
        }
        let spectral = self.spectral();
        let kernel = spectral.kernel_dimension();
        if kernel > 1 {
            return Err(Error::ReducibleChain(kernel));
        }
        Ok(ScalarField(spectral.pseudo_inverse_apply(rhs)))
    }
}
