//! Uniform grids on a truncated line and the Euclidean heat semigroup on them.
//!
//! `H_t f(x) = ∫ f(y) e^{−(x−y)²/4t} / √(4πt) dy`, evaluated by trapezoid
//! quadrature of the Gaussian convolution. The same kernel acts on vector
//! fields (`R_t`), which in one dimension are scalar fields without the
//! unit-mass constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input densities must have unit mass to this tolerance.
pub const LINE_MASS_TOL: f64 = 1e-6;
/// Mass deviation after evolution that signals a too-tight truncation.
pub const BOUNDARY_LOSS_TOL: f64 = 1e-4;

/// A uniform grid `a = x_0 < … < x_{m−1} = b` with trapezoid weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    a: f64,
    b: f64,
    m: usize,
}

impl LineGrid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::BadParameters(format!(
                "line grid needs a < b, got [{a}, {b}]"
            )));
        }
        if m < 16 {
            return Err(Error::BadSize(format!("line grid needs m >= 16, got {m}")));
        }
        Ok(LineGrid { a, b, m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left(&self) -> f64 {
        self.a
    }

    pub fn right(&self) -> f64 {
        self.b
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.m - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.node(i)).collect()
    }

    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i + 1 == self.m {
            0.5 * h
        } else {
            h
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.weight(i)).collect()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.m {
            return Err(Error::ShapeMismatch {
                expected: self.m,
                got: len,
            });
        }
        Ok(())
    }

    /// Trapezoid rule `∫ f dx`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// `∫ f log f dx` with `0 log 0 = 0`.
    pub fn entropy(&self, f: &[f64]) -> f64 {
        f.iter()
            .enumerate()
            .map(|(i, &v)| {
                if v > 0.0 {
                    self.weight(i) * v * v.ln()
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Second-order finite-difference derivative (one-sided at the ends).
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let h = self.spacing();
        let m = self.m;
        (0..m)
            .map(|i| {
                if i == 0 {
                    (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
                } else if i + 1 == m {
                    (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h)
                } else {
                    (f[i + 1] - f[i - 1]) / (2.0 * h)
                }
            })
            .collect()
    }

    /// Samples the `N(mean, σ²)` density at the nodes.
    pub fn gaussian(&self, mean: f64, sigma: f64) -> Vec<f64> {
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        self.nodes()
            .iter()
            .map(|x| norm * (-0.5 * ((x - mean) / sigma).powi(2)).exp())
            .collect()
    }

    /// Heat-kernel weights `w_j G_t(x_i − x_j)` depend only on `|i − j|`.
    ///
    /// The samples are scaled to unit lattice sum `h Σ_{d∈ℤ} G_t(dh) = 1`. For
    /// `√t ≫ h` the factor is 1 to rounding; for kernels narrower than the
    /// spacing it keeps the discrete flow mass-preserving and tending to the
    /// identity as `t → 0`.
    fn kernel(&self, t: f64) -> Vec<f64> {
        let h = self.spacing();
        let gauss = |d: usize| {
            let r = d as f64 * h;
            (-r * r / (4.0 * t)).exp()
        };
        let mut lattice = gauss(0);
        let mut d = 1;
        loop {
            let v = gauss(d);
            lattice += 2.0 * v;
            if v < 1e-18 * lattice {
                break;
            }
            d += 1;
        }
        let norm = 1.0 / (h * lattice);
        (0..self.m).map(|d| norm * gauss(d)).collect()
    }

    fn convolve(&self, f: &[f64], t: f64) -> Vec<f64> {
        let kern = self.kernel(t);
        let wf: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(j, v)| self.weight(j) * v)
            .collect();
        (0..self.m)
            .map(|i| {
                wf.iter()
                    .enumerate()
                    .map(|(j, v)| v * kern[i.abs_diff(j)])
                    .sum()
            })
            .collect()
    }
}

/// `H_t f` for a unit-mass density on the grid.
pub fn heat_evolve_line(grid: &LineGrid, f: &[f64], t: f64) -> Result<Vec<f64>> {
    grid.check_len(f.len())?;
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let mass = grid.integrate(f);
    if (mass - 1.0).abs() > LINE_MASS_TOL {
        return Err(Error::NotNormalized(mass));
    }
    if t == 0.0 {
        return Ok(f.to_vec());
    }
    let out = grid.convolve(f, t);
    let after = grid.integrate(&out);
    let deviation = (after - mass).abs();
    if deviation > BOUNDARY_LOSS_TOL {
        return Err(Error::BoundaryMassLoss {
            mass: after,
            deviation,
        });
    }
    Ok(out)
}

/// `R_t w` for a (one-dimensional) vector field on the grid.
pub fn heat_evolve_vector_line(grid: &LineGrid, w: &[f64], t: f64) -> Result<Vec<f64>> {
    grid.check_len(w.len())?;
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    // constants are fixed by R_t on the whole line
    if t == 0.0 || is_constant(w) {
        return Ok(w.to_vec());
    }
    let abs: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    let total = grid.integrate(&abs);
    if total > 0.0 {
        let kept = grid.integrate(&grid.convolve(&abs, t));
        let deviation = (kept - total).abs() / total;
        if deviation > BOUNDARY_LOSS_TOL {
            return Err(Error::BoundaryMassLoss {
                mass: kept,
                deviation,
            });
        }
    }
    Ok(grid.convolve(w, t))
}

fn is_constant(w: &[f64]) -> bool {
    w.iter().all(|v| *v == w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> LineGrid {
        LineGrid::new(-12.0, 12.0, 1024).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(LineGrid::new(1.0, 0.0, 64).is_err());
        assert!(LineGrid::new(0.0, 1.0, 8).is_err());
    }

    #[test]
    fn gaussian_variance_grows_by_2t() {
        let g = grid();
        let f = g.gaussian(0.0, 0.8);
        let t = 0.3;
        let evolved = heat_evolve_line(&g, &f, t).unwrap();
        let expected = g.gaussian(0.0, (0.64 + 2.0 * t).sqrt());
        let err = evolved
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "max error {err}");
        assert!((g.integrate(&evolved) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn translation_commutes_with_heat_flow() {
        let g = grid();
        let shift = 40.0 * g.spacing();
        let f = g.gaussian(-1.0, 0.7);
        let fs = g.gaussian(-1.0 + shift, 0.7);
        let a = heat_evolve_line(&g, &f, 0.2).unwrap();
        let b = heat_evolve_line(&g, &fs, 0.2).unwrap();
        for i in 0..(g.len() - 40) {
            assert!((a[i] - b[i + 40]).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_entropy_closed_form() {
        let g = grid();
        let f = g.gaussian(0.0, 1.0);
        for &t in &[0.1, 0.5, 1.0] {
            let e = g.entropy(&heat_evolve_line(&g, &f, t).unwrap());
            let closed =
                -0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * (1.0 + 2.0 * t)).ln();
            assert!((e - closed).abs() < 1e-4, "t={t}: {e} vs {closed}");
        }
    }

    #[test]
    fn boundary_loss_is_reported() {
        let g = LineGrid::new(-2.0, 2.0, 128).unwrap();
        let f = g.gaussian(0.0, 0.5);
        let mass = g.integrate(&f);
        let f: Vec<f64> = f.iter().map(|v| v / mass).collect();
        assert!(matches!(
            heat_evolve_line(&g, &f, 1.0),
            Err(Error::BoundaryMassLoss { .. })
        ));
    }

    #[test]
    fn vector_semigroup_commutes_with_derivative() {
        let g = grid();
        let rho = g.gaussian(0.5, 0.9);
        let t = 0.25;
        let lhs = g.derivative(&heat_evolve_line(&g, &rho, t).unwrap());
        let rhs = heat_evolve_vector_line(&g, &g.derivative(&rho), t).unwrap();
        let err = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn vector_semigroup_trivial_fields() {
        let g = grid();
        let zero = heat_evolve_vector_line(&g, &vec![0.0; g.len()], 0.4).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        let c = heat_evolve_vector_line(&g, &vec![2.5; g.len()], 0.4).unwrap();
        assert!(c.iter().all(|v| *v == 2.5));
    }
}
