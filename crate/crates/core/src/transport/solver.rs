//! Action minimization over feasible discrete paths.
//!
//! With uniform steps `Δs = 1/K` the endpoint condition `Σ Δs L h_k = f − g`
//! says the slice average of the `h_k` equals `h* = L⁻¹(f − g)` up to constants.
//! Potentials are written in the scaled eigenbasis, `h_k = Σ_j c_{kj} φ_j /
//! √(|λ_j| Δs)`, so that `Δs Σ μ Γ(h_k) = |c_k|²`, and the `c_k` are split as
//! `c* + z_k` with `Σ_k z_k = 0`. Densities follow from `ρ_{k+1} = ρ_k − Δs L h_k`,
//! so every iterate is feasible; a quasi-Newton descent on `z` with a line search
//! that refuses non-positive densities keeps it so and never increases the action.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cost::interval_weight;
use super::path::{
    action_unchecked, center, constant_path, initial_path, uniform_times, DiscretePath,
};
use super::reparam::reparametrize_eps_geodesic_xi;
use crate::error::{Error, Result};
use crate::markov::MarkovTriple;
use crate::xi::XiFunction;

/// Tunables of [`minimize_action`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stop once the relative decrease stays below this for `stall_iterations` steps.
    pub tol_rel: f64,
    pub max_iterations: usize,
    /// Line-search steps that push any density to or below this are rejected.
    pub rho_floor: f64,
    /// Gradient norm (relative to `√action`) regarded as stationary.
    pub gradient_tol: f64,
    pub stall_iterations: usize,
    /// Quasi-Newton memory.
    pub memory: usize,
    /// Seed reparametrization uses `ε = seed_epsilon · action(seed)`; 0 disables it.
    pub seed_epsilon: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_rel: 1e-8,
            max_iterations: 10_000,
            rho_floor: 1e-9,
            gradient_tol: 1e-7,
            stall_iterations: 3,
            memory: 12,
            seed_epsilon: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Gradient norm on the constraint manifold at the returned iterate.
    pub gradient_norm: f64,
    /// `max_k |φ_k − φ̄| / φ̄` of the returned path.
    pub phi_deviation: f64,
    pub converged: bool,
    /// Action of the seed path the descent started from.
    pub initial_value: f64,
    /// Accepted action values, one per iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Certified upper bound on the (discrete) transport cost with its witness path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    /// Action of `path`.
    pub value: f64,
    pub xi: XiFunction,
    pub path: DiscretePath,
    pub phi_profile: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl TransportResult {
    /// `√value`.
    pub fn distance(&self) -> f64 {
        self.value.sqrt()
    }

    /// Turns a flagged non-converged result into an error.
    pub fn require_converged(&self) -> Result<()> {
        if self.diagnostics.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence {
                iterations: self.diagnostics.iterations,
                gradient_norm: self.diagnostics.gradient_norm,
            })
        }
    }
}

/// Upper bound on `T₂²(fμ, gμ)` from `K` slices.
pub fn minimize_action(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    slices: usize,
    options: &SolverOptions,
) -> Result<TransportResult> {
    minimize_action_xi(triple, f, g, &XiFunction::Entropy, slices, options)
}

/// Upper bound on `T_ξ²(fμ, gμ)` from `K` slices.
pub fn minimize_action_xi(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    xi: &XiFunction,
    slices: usize,
    options: &SolverOptions,
) -> Result<TransportResult> {
    xi.validate()?;
    if slices < 8 {
        return Err(Error::BadSize(format!("solver needs K >= 8, got {slices}")));
    }
    triple.check_len(f.len())?;
    triple.check_len(g.len())?;
    for v in [f, g] {
        if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
            return Err(Error::ZeroDensity { index, value });
        }
        let mass = triple.mean(v);
        if (mass - 1.0).abs() > crate::markov::MASS_TOL {
            return Err(Error::NotNormalized(mass));
        }
    }
    if f == g {
        let path = constant_path(triple, f, slices)?;
        return Ok(finish(triple, xi, path, 0, 0.0, true, 0.0, Vec::new()));
    }
    let spectral = triple.spectral();
    if spectral.kernel_dimension() > 1 {
        return Err(Error::ReducibleChain(spectral.kernel_dimension()));
    }

    let mut seed = initial_path(triple, f, g, slices)?;
    let seed_value = action_unchecked(triple, &seed, xi);
    if options.seed_epsilon > 0.0 && seed_value > 0.0 {
        seed = reparametrize_eps_geodesic_xi(triple, &seed, options.seed_epsilon * seed_value, xi)?;
    }
    let problem = Problem::new(triple, f, g, *xi, slices, options.rho_floor)?;
    let z0 = problem.coordinates(&seed);
    let (z, iterations, gradient_norm, converged, history) = problem.descend(z0, options);
    let path = problem.path(&z)?;
    let initial_value = action_unchecked(triple, &seed, xi);
    Ok(finish(
        triple,
        xi,
        path,
        iterations,
        gradient_norm,
        converged,
        initial_value,
        history,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    triple: &MarkovTriple,
    xi: &XiFunction,
    path: DiscretePath,
    iterations: usize,
    gradient_norm: f64,
    converged: bool,
    initial_value: f64,
    history: Vec<f64>,
) -> TransportResult {
    let phi_profile = path.phi_profile_xi(triple, xi);
    let value: f64 = phi_profile
        .iter()
        .enumerate()
        .map(|(k, v)| path.step(k) * v)
        .sum();
    let phi_deviation = path.phi_deviation(triple, xi);
    TransportResult {
        value,
        xi: *xi,
        path,
        phi_profile,
        diagnostics: Diagnostics {
            iterations,
            gradient_norm,
            phi_deviation,
            converged,
            initial_value,
            history,
        },
    }
}

struct Problem<'a> {
    triple: &'a MarkovTriple,
    f: Vec<f64>,
    g: Vec<f64>,
    xi: XiFunction,
    slices: usize,
    step: f64,
    floor: f64,
    /// Unordered edges `(x, y, μ(x)L(x,y))`.
    edges: Vec<(usize, usize, f64)>,
    /// Columns `φ_j / √(|λ_j| Δs)` over the non-kernel modes.
    basis: DMatrix<f64>,
    /// Scaled coefficients of `h*`.
    centre: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(
        triple: &'a MarkovTriple,
        f: &[f64],
        g: &[f64],
        xi: XiFunction,
        slices: usize,
        floor: f64,
    ) -> Result<Self> {
        let m = triple.len();
        let step = 1.0 / slices as f64;
        let mu = triple.measure();
        let l = triple.generator();
        let mut edges = Vec::new();
        for x in 0..m {
            for y in x + 1..m {
                let w = 0.5 * (mu[x] * l[(x, y)] + mu[y] * l[(y, x)]);
                if w > 0.0 {
                    edges.push((x, y, w));
                }
            }
        }
        let spectral = triple.spectral();
        let modes: Vec<usize> = (0..m)
            .filter(|&j| spectral.eigenvalues()[j] < 0.0)
            .collect();
        let scales: Vec<f64> = modes
            .iter()
            .map(|&j| 1.0 / (-spectral.eigenvalues()[j] * step).sqrt())
            .collect();
        let basis = DMatrix::from_fn(m, modes.len(), |x, c| {
            spectral.modes()[(x, modes[c])] * scales[c]
        });
        let diff: Vec<f64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
        let target = triple.solve_poisson(&diff)?.into_inner();
        let mut problem = Problem {
            triple,
            f: f.to_vec(),
            g: g.to_vec(),
            xi,
            slices,
            step,
            floor,
            edges,
            basis,
            centre: Vec::new(),
        };
        problem.centre = problem.scaled_coefficients(&target);
        Ok(problem)
    }

    fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Coefficients `c` with `basis · c` equal to `h` modulo constants.
    fn scaled_coefficients(&self, h: &[f64]) -> Vec<f64> {
        let spectral = self.triple.spectral();
        let coeffs = spectral.coefficients(h);
        let m = self.triple.len();
        (0..m)
            .filter(|&j| spectral.eigenvalues()[j] < 0.0)
            .map(|j| coeffs[j] * (-spectral.eigenvalues()[j] * self.step).sqrt())
            .collect()
    }

    /// Tangent coordinates `z` of a feasible uniform path.
    fn coordinates(&self, path: &DiscretePath) -> Vec<f64> {
        let n = self.dim();
        let mut z = Vec::with_capacity(n * self.slices);
        for h in path.potentials() {
            z.extend(self.scaled_coefficients(h));
        }
        project(&mut z, n, self.slices);
        z
    }

    fn potentials(&self, z: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let c = DMatrix::from_fn(n, self.slices, |j, k| z[j + n * k] + self.centre[j]);
        &self.basis * c
    }

    /// Densities along the path, or `None` if some node falls to the floor.
    fn densities(&self, h: &DMatrix<f64>) -> Option<Vec<Vec<f64>>> {
        let m = self.triple.len();
        let mut rho = Vec::with_capacity(self.slices + 1);
        rho.push(self.f.clone());
        let mut lh = vec![0.0; m];
        for k in 0..self.slices - 1 {
            self.triple.apply_into(h.column(k).as_slice(), &mut lh);
            let next: Vec<f64> = rho[k]
                .iter()
                .zip(&lh)
                .map(|(r, v)| r - self.step * v)
                .collect();
            if next.iter().any(|v| !(*v > self.floor)) {
                return None;
            }
            rho.push(next);
        }
        rho.push(self.g.clone());
        Some(rho)
    }

    /// Action and projected gradient at `z`.
    fn evaluate(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        let m = self.triple.len();
        let (kk, ds) = (self.slices, self.step);
        let h = self.potentials(z);
        let rho = self.densities(&h)?;
        let mut value = 0.0;
        let mut grad_h = DMatrix::zeros(m, kk);
        let mut grad_rho = vec![vec![0.0; m]; kk + 1];
        let mut gam = vec![0.0; m];
        let mut w = vec![0.0; m];
        for k in 0..kk {
            let hk = h.column(k);
            gam.iter_mut().for_each(|v| *v = 0.0);
            for &(x, y, pi) in &self.edges {
                let d = hk[x] - hk[y];
                let e = 0.5 * pi * d * d;
                gam[x] += e;
                gam[y] += e;
            }
            for x in 0..m {
                let (wx, wa, wb) = interval_weight(&self.xi, rho[k][x], rho[k + 1][x]);
                w[x] = wx;
                value += ds * gam[x] * wx;
                grad_rho[k][x] += ds * gam[x] * wa;
                grad_rho[k + 1][x] += ds * gam[x] * wb;
            }
            let mut col = grad_h.column_mut(k);
            for &(x, y, pi) in &self.edges {
                let c = ds * pi * (hk[x] - hk[y]) * (w[x] + w[y]);
                col[x] += c;
                col[y] -= c;
            }
        }
        if !value.is_finite() {
            return None;
        }
        // ρ_k depends on h_i for i < k (interior nodes only)
        let mut acc = vec![0.0; m];
        let mut lt = vec![0.0; m];
        for i in (0..kk).rev() {
            if i + 1 < kk {
                acc.iter_mut()
                    .zip(&grad_rho[i + 1])
                    .for_each(|(a, b)| *a += b);
            }
            if i + 1 < kk {
                self.triple.apply_transpose_into(&acc, &mut lt);
                let mut col = grad_h.column_mut(i);
                for x in 0..m {
                    col[x] -= ds * lt[x];
                }
            }
        }
        let gc = self.basis.tr_mul(&grad_h);
        let mut grad = gc.as_slice().to_vec();
        project(&mut grad, self.dim(), kk);
        Some((value, grad))
    }

    fn descend(
        &self,
        mut z: Vec<f64>,
        options: &SolverOptions,
    ) -> (Vec<f64>, usize, f64, bool, Vec<f64>) {
        let Some((mut value, mut grad)) = self.evaluate(&z) else {
            return (z, 0, f64::INFINITY, false, Vec::new());
        };
        let mut history = vec![value];
        let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut stall = 0;
        let mut iterations = 0;
        let stationary =
            |value: f64, gnorm: f64| gnorm <= options.gradient_tol * value.sqrt().max(1e-150);
        let mut gnorm = norm(&grad);
        let mut converged = stationary(value, gnorm);
        while !converged && iterations < options.max_iterations {
            iterations += 1;
            let mut dir = two_loop(&grad, &memory);
            if dot(&dir, &grad) >= 0.0 {
                memory.clear();
                dir = grad.iter().map(|v| -v).collect();
            }
            if memory.is_empty() {
                // the Hessian is close to 2ξ(ρ) in these coordinates
                dir.iter_mut().for_each(|v| *v *= 0.5);
            }
            let slope = dot(&dir, &grad);
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
                if let Some((v, g)) = self.evaluate(&trial) {
                    if v <= value + 1e-4 * alpha * slope {
                        accepted = Some((trial, v, g));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((trial, new_value, new_grad)) = accepted else {
                if memory.is_empty() {
                    // no descent possible at working precision
                    converged = gnorm <= 1e3 * options.gradient_tol * value.sqrt().max(1e-150);
                    break;
                }
                memory.clear();
                continue;
            };
            let s: Vec<f64> = trial.iter().zip(&z).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) {
                if memory.len() == options.memory.max(1) {
                    memory.pop_front();
                }
                memory.push_back((s, y, 1.0 / sy));
            }
            let decrease = (value - new_value) / new_value.abs().max(1e-300);
            z = trial;
            value = new_value;
            grad = new_grad;
            gnorm = norm(&grad);
            history.push(value);
            if decrease < options.tol_rel {
                stall += 1;
            } else {
                stall = 0;
            }
            if stationary(value, gnorm) || stall >= options.stall_iterations {
                converged = true;
            }
        }
        (z, iterations, gnorm, converged, history)
    }

    /// Feasible path at `z`, with one residual-refinement sweep on the potentials.
    fn path(&self, z: &[f64]) -> Result<DiscretePath> {
        let h = self.potentials(z);
        let densities = self
            .densities(&h)
            .ok_or(Error::InfeasiblePath(f64::INFINITY))?;
        let m = self.triple.len();
        let mut potentials: Vec<Vec<f64>> = (0..self.slices)
            .map(|k| h.column(k).as_slice().to_vec())
            .collect();
        let mut lh = vec![0.0; m];
        for (k, hk) in potentials.iter_mut().enumerate() {
            self.triple.apply_into(hk, &mut lh);
            let mut r: Vec<f64> = (0..m)
                .map(|x| (densities[k + 1][x] - densities[k][x]) / self.step + lh[x])
                .collect();
            center(self.triple, &mut r);
            let dh = self.triple.spectral().pseudo_inverse_apply(&r);
            hk.iter_mut().zip(&dh).for_each(|(a, b)| *a += b);
        }
        DiscretePath::new(
            self.triple,
            uniform_times(self.slices),
            densities,
            potentials,
        )
    }
}

/// Removes the slice average so that `Σ_k z_k = 0`.
fn project(z: &mut [f64], n: usize, slices: usize) {
    for j in 0..n {
        let mean: f64 = (0..slices).map(|k| z[j + n * k]).sum::<f64>() / slices as f64;
        for k in 0..slices {
            z[j + n * k] -= mean;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// L-BFGS two-loop recursion returning the descent direction.
fn two_loop(grad: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ring_chain, two_point};
    use crate::transport::exact::t2_two_point_exact;
    use crate::transport::path::action;

    #[test]
    fn two_point_closed_form() {
        for &kappa in &[1.0, 2.0] {
            let t = two_point(kappa).unwrap();
            let r = minimize_action(&t, &[1.5, 0.5], &[0.5, 1.5], 64, &SolverOptions::default())
                .unwrap();
            let exact = t2_two_point_exact(kappa, 0.25, 0.75).unwrap();
            assert!(
                (r.value - exact).abs() < 5e-3 * exact,
                "kappa {kappa}: {} vs {exact}",
                r.value
            );
            assert!(r.value >= exact - 1e-12);
            assert!(r.diagnostics.converged);
            assert!((action(&t, &r.path).unwrap() - r.value).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_endpoints_give_zero() {
        let t = ring_chain(5, 1.0).unwrap();
        let f = vec![1.0; 5];
        let r = minimize_action(&t, &f, &f, 16, &SolverOptions::default()).unwrap();
        assert!(r.value <= 1e-12);
    }

    #[test]
    fn action_never_increases() {
        let t = ring_chain(6, 1.0).unwrap();
        let f = [0.4, 1.6, 1.2, 0.8, 1.5, 0.5];
        let g = [1.3, 0.7, 0.6, 1.4, 0.9, 1.1];
        let r = minimize_action(&t, &f, &g, 16, &SolverOptions::default()).unwrap();
        let h = &r.diagnostics.history;
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.value <= r.diagnostics.initial_value);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = ring_chain(4, 1.3).unwrap();
        let f = [0.6, 1.4, 1.1, 0.9];
        let g = [1.2, 0.7, 0.8, 1.3];
        for xi in [XiFunction::Entropy, XiFunction::Power { p: 1.5 }] {
            let p = Problem::new(&t, &f, &g, xi, 8, 1e-9).unwrap();
            let seed = initial_path(&t, &f, &g, 8).unwrap();
            let mut z = p.coordinates(&seed);
            for (i, v) in z.iter_mut().enumerate() {
                *v += 0.01 * ((i * 7 % 5) as f64 - 2.0);
            }
            project(&mut z, p.dim(), 8);
            let (_, grad) = p.evaluate(&z).unwrap();
            let mut dir: Vec<f64> = (0..z.len()).map(|i| ((i * 3 % 7) as f64) - 3.0).collect();
            project(&mut dir, p.dim(), 8);
            let e = 1e-6;
            let plus: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + e * b).collect();
            let minus: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a - e * b).collect();
            let fd = (p.evaluate(&plus).unwrap().0 - p.evaluate(&minus).unwrap().0) / (2.0 * e);
            let an = dot(&grad, &dir);
            assert!(
                (fd - an).abs() < 1e-6 * (1.0 + an.abs()),
                "{xi:?}: {fd} vs {an}"
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = two_point(1.0).unwrap();
        let o = SolverOptions::default();
        assert!(minimize_action(&t, &[2.0, 0.0], &[1.0, 1.0], 16, &o).is_err());
        assert!(minimize_action(&t, &[1.5, 0.5], &[1.0, 1.0], 4, &o).is_err());
        assert!(minimize_action(&t, &[1.5, 0.7], &[1.0, 1.0], 16, &o).is_err());
    }
}
