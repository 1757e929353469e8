//! Exact evolution `P_t = e^{tL}` on finite reversible triples.
//!
//! Reversibility makes `L` self-adjoint in `L²(μ)`, so with `D = diag(μ)` the
//! matrix `D^{1/2} L D^{-1/2}` is symmetric. Its eigendecomposition gives an
//! `L²(μ)`-orthonormal basis `φ_j = D^{-1/2} u_j` with `Lφ_j = λ_j φ_j`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::markov::MarkovTriple;

/// Eigenvalues below this (relative to the largest rate) count as zero.
const KERNEL_CUTOFF: f64 = 1e-12;

/// Eigen-decomposition of a triple's generator, ordered by decreasing eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    eigenvalues: Vec<f64>,
    /// Column `j` is `φ_j`, orthonormal in `L²(μ)`.
    modes: DMatrix<f64>,
    measure: Vec<f64>,
    kernel_dim: usize,
}

impl SpectralCache {
    pub fn new(triple: &MarkovTriple) -> Self {
        let m = triple.len();
        let mu = triple.measure();
        let l = triple.generator();
        let sq: Vec<f64> = mu.iter().map(|v| v.sqrt()).collect();
        let sym = DMatrix::from_fn(m, m, |x, y| {
            let a = sq[x] * l[(x, y)] / sq[y];
            let b = sq[y] * l[(y, x)] / sq[x];
            0.5 * (a + b)
        });
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let scale = triple.max_rate().max(1.0);
        let mut eigenvalues = Vec::with_capacity(m);
        let mut modes = DMatrix::zeros(m, m);
        for (j, &k) in order.iter().enumerate() {
            let mut lambda = eig.eigenvalues[k];
            if lambda.abs() < KERNEL_CUTOFF * scale {
                lambda = 0.0;
            }
            eigenvalues.push(lambda.min(0.0));
            let u = eig.eigenvectors.column(k);
            for x in 0..m {
                modes[(x, j)] = u[x] / sq[x];
            }
        }
        let kernel_dim = eigenvalues.iter().filter(|v| **v == 0.0).count();
        if kernel_dim == 1 {
            // the invariant mode is the constant function
            let sign = if modes[(0, 0)] < 0.0 { -1.0 } else { 1.0 };
            for x in 0..m {
                modes[(x, 0)] = sign;
            }
        }
        SpectralCache {
            eigenvalues,
            modes,
            measure: mu.to_vec(),
            kernel_dim,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in decreasing order; the first is 0.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn kernel_dimension(&self) -> usize {
        self.kernel_dim
    }

    /// Spectral gap `−λ₁`, or 0 for a reducible (or one-state) chain.
    pub fn gap(&self) -> f64 {
        if self.kernel_dim > 1 || self.eigenvalues.len() < 2 {
            0.0
        } else {
            -self.eigenvalues[1]
        }
    }

    /// Coefficients `⟨f, φ_j⟩_μ`.
    pub fn coefficients(&self, f: &[f64]) -> DVector<f64> {
        let weighted =
            DVector::from_iterator(f.len(), f.iter().zip(&self.measure).map(|(a, m)| a * m));
        self.modes.tr_mul(&weighted)
    }

    pub fn synthesize(&self, coeffs: &DVector<f64>) -> Vec<f64> {
        (&self.modes * coeffs).as_slice().to_vec()
    }

    /// `Σ_j λ_j φ_j φ_jᵀ D`, which should reproduce `L`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let m = self.len();
        let scaled = DMatrix::from_fn(m, m, |x, j| self.modes[(x, j)] * self.eigenvalues[j]);
        let weighted = DMatrix::from_fn(m, m, |y, j| self.modes[(y, j)] * self.measure[y]);
        scaled * weighted.transpose()
    }

    /// `e^{tL} f` for `t ≥ 0`.
    pub fn evolve(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        if t == 0.0 {
            return Ok(f.to_vec());
        }
        let mut c = self.coefficients(f);
        for (cj, lambda) in c.iter_mut().zip(&self.eigenvalues) {
            *cj *= (lambda * t).exp();
        }
        Ok(self.synthesize(&c))
    }

    /// Minimum-norm solution of `Lh = rhs` on the complement of the kernel.
    pub(crate) fn pseudo_inverse_apply(&self, rhs: &[f64]) -> Vec<f64> {
        let mut c = self.coefficients(rhs);
        for (cj, lambda) in c.iter_mut().zip(&self.eigenvalues) {
            *cj = if *lambda == 0.0 { 0.0 } else { *cj / lambda };
        }
        self.synthesize(&c)
    }
}

/// `P_t f` through the triple's cached spectral decomposition.
pub fn evolve(triple: &MarkovTriple, f: &[f64], t: f64) -> Result<Vec<f64>> {
    triple.spectral().evolve(f, t)
}

/// Samples `t ↦ P_t f` on the given times.
pub fn trajectory(triple: &MarkovTriple, f: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    times.iter().map(|&t| evolve(triple, f, t)).collect()
}
