use serde::{Deserialize, Serialize};

use super::cost::interval_weight_value;
use crate::error::{Error, Result};
use crate::markov::MarkovTriple;
use crate::xi::XiFunction;

/// Largest admissible continuity residual `‖(ρ_{k+1}−ρ_k)/Δs_k + L h_k‖∞`,
/// relative to the size of the two terms when that exceeds 1.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Mass conservation tolerance on every node.
pub const PATH_MASS_TOL: f64 = 1e-9;

/// A discrete admissible path: densities on `K+1` time nodes and potentials on
/// the `K` slices between them, with `ρ` linear and `h` frozen on each slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePath {
    times: Vec<f64>,
    densities: Vec<Vec<f64>>,
    potentials: Vec<Vec<f64>>,
}

impl DiscretePath {
    /// Builds and validates a path against `triple`.
    pub fn new(
        triple: &MarkovTriple,
        times: Vec<f64>,
        densities: Vec<Vec<f64>>,
        potentials: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let path = DiscretePath {
            times,
            densities,
            potentials,
        };
        path.validate(triple)?;
        Ok(path)
    }

    pub(crate) fn new_unchecked(
        times: Vec<f64>,
        densities: Vec<Vec<f64>>,
        potentials: Vec<Vec<f64>>,
    ) -> Self {
        DiscretePath {
            times,
            densities,
            potentials,
        }
    }

    /// Number of slices `K`.
    pub fn slices(&self) -> usize {
        self.potentials.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn densities(&self) -> &[Vec<f64>] {
        &self.densities
    }

    pub fn potentials(&self) -> &[Vec<f64>] {
        &self.potentials
    }

    pub fn start(&self) -> &[f64] {
        &self.densities[0]
    }

    pub fn end(&self) -> &[f64] {
        &self.densities[self.densities.len() - 1]
    }

    pub fn step(&self, k: usize) -> f64 {
        self.times[k + 1] - self.times[k]
    }

    /// `max_k ‖(ρ_{k+1}−ρ_k)/Δs_k + L h_k‖∞`.
    pub fn residual(&self, triple: &MarkovTriple) -> f64 {
        self.residual_and_scale(triple).0
    }

    /// Residual together with the size of the cancelling terms,
    /// `max_k (‖(ρ_{k+1}−ρ_k)/Δs_k‖∞ + 2·max_rate·‖h_k‖∞)`.
    fn residual_and_scale(&self, triple: &MarkovTriple) -> (f64, f64) {
        let m = triple.len();
        let rate = triple.max_rate();
        let mut lh = vec![0.0; m];
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..self.slices() {
            let h = &self.potentials[k];
            triple.apply_into(h, &mut lh);
            let ds = self.step(k);
            let hmax = h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut dmax = 0.0f64;
            for ((next, prev), l) in self.densities[k + 1]
                .iter()
                .zip(&self.densities[k])
                .zip(&lh)
            {
                let d = (next - prev) / ds;
                dmax = dmax.max(d.abs());
                worst = worst.max((d + l).abs());
            }
            scale = scale.max(dmax + 2.0 * rate * hmax);
        }
        (worst, scale)
    }

    /// Checks shapes, time grid, positivity, mass and the continuity residual.
    pub fn validate(&self, triple: &MarkovTriple) -> Result<()> {
        let k = self.potentials.len();
        if k == 0 || self.times.len() != k + 1 || self.densities.len() != k + 1 {
            return Err(Error::BadSize(format!(
                "path needs K >= 1 slices with K+1 nodes; got {} times, {} densities, {} potentials",
                self.times.len(),
                self.densities.len(),
                k
            )));
        }
        if self.times[0] != 0.0 || self.times[k] != 1.0 {
            return Err(Error::BadParameters(
                "path times must run from 0 to 1".into(),
            ));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadParameters("path times must increase".into()));
        }
        for v in self.densities.iter().chain(&self.potentials) {
            triple.check_len(v.len())?;
        }
        for (slice, rho) in self.densities.iter().enumerate() {
            if let Some((state, &value)) = rho.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(Error::NonPositiveDensity {
                    slice,
                    state,
                    value,
                });
            }
            let mass = triple.mean(rho);
            if (mass - 1.0).abs() > PATH_MASS_TOL {
                return Err(Error::NotNormalized(mass));
            }
        }
        let (r, scale) = self.residual_and_scale(triple);
        if !(r <= RESIDUAL_TOL * scale.max(1.0)) {
            return Err(Error::InfeasiblePath(r));
        }
        Ok(())
    }

    /// Per-slice costs `φ_k = Σ μ Γ(h_k) ∫ ξ(ρ) ds / Δs_k` (no validation).
    pub fn phi_profile_xi(&self, triple: &MarkovTriple, xi: &XiFunction) -> Vec<f64> {
        let m = triple.len();
        let mu = triple.measure();
        let mut gam = vec![0.0; m];
        (0..self.slices())
            .map(|k| {
                let h = &self.potentials[k];
                triple.gamma_into(h, h, &mut gam);
                let (a, b) = (&self.densities[k], &self.densities[k + 1]);
                (0..m)
                    .map(|x| mu[x] * gam[x] * interval_weight_value(xi, a[x], b[x]))
                    .sum()
            })
            .collect()
    }

    pub fn phi_profile(&self, triple: &MarkovTriple) -> Vec<f64> {
        self.phi_profile_xi(triple, &XiFunction::Entropy)
    }

    /// `max_k |φ_k − φ̄| / φ̄` with `φ̄` the time average; 0 for a null path.
    pub fn phi_deviation(&self, triple: &MarkovTriple, xi: &XiFunction) -> f64 {
        let phi = self.phi_profile_xi(triple, xi);
        let mean: f64 = phi.iter().enumerate().map(|(k, v)| self.step(k) * v).sum();
        if mean <= 0.0 {
            return 0.0;
        }
        phi.iter()
            .map(|v| (v - mean).abs() / mean)
            .fold(0.0, f64::max)
    }

    /// Reversed path `s ↦ (ρ_{1−s}, −h_{1−s})`.
    pub fn reversed(&self) -> DiscretePath {
        DiscretePath {
            times: self.times.iter().rev().map(|t| 1.0 - t).collect(),
            densities: self.densities.iter().rev().cloned().collect(),
            potentials: self
                .potentials
                .iter()
                .rev()
                .map(|h| h.iter().map(|v| -v).collect())
                .collect(),
        }
    }

    /// Writes `k, s_k, state, rho, h` rows; `h` is empty on the final node.
    pub fn write_csv<W: std::io::Write>(
        &self,
        triple: &MarkovTriple,
        out: &mut W,
    ) -> std::io::Result<()> {
        writeln!(out, "k,s_k,state,rho,h")?;
        for (k, rho) in self.densities.iter().enumerate() {
            for (x, value) in rho.iter().enumerate() {
                let state = &triple.states()[x];
                match self.potentials.get(k) {
                    Some(h) => writeln!(
                        out,
                        "{k},{:e},{state},{:e},{:e}",
                        self.times[k], value, h[x]
                    )?,
                    None => writeln!(out, "{k},{:e},{state},{:e},", self.times[k], value)?,
                }
            }
        }
        Ok(())
    }
}

/// `Σ_k Δs_k φ_k` with the exact slice integral of `ξ(ρ)`; validates the path.
pub fn action_xi(triple: &MarkovTriple, path: &DiscretePath, xi: &XiFunction) -> Result<f64> {
    path.validate(triple)?;
    Ok(action_unchecked(triple, path, xi))
}

/// Action `∫₀¹ Σ μ Γ(h_s)/ρ_s ds` of a validated path.
pub fn action(triple: &MarkovTriple, path: &DiscretePath) -> Result<f64> {
    action_xi(triple, path, &XiFunction::Entropy)
}

pub(crate) fn action_unchecked(triple: &MarkovTriple, path: &DiscretePath, xi: &XiFunction) -> f64 {
    path.phi_profile_xi(triple, xi)
        .iter()
        .enumerate()
        .map(|(k, v)| path.step(k) * v)
        .sum()
}

/// The same sum with the midpoint weight `ξ(½(ρ_k+ρ_{k+1}))`, for comparison.
pub fn midpoint_action(triple: &MarkovTriple, path: &DiscretePath, xi: &XiFunction) -> Result<f64> {
    path.validate(triple)?;
    let m = triple.len();
    let mu = triple.measure();
    let mut gam = vec![0.0; m];
    let mut total = 0.0;
    for k in 0..path.slices() {
        let h = &path.potentials[k];
        triple.gamma_into(h, h, &mut gam);
        let (a, b) = (&path.densities[k], &path.densities[k + 1]);
        let phi: f64 = (0..m)
            .map(|x| mu[x] * gam[x] * xi.xi(0.5 * (a[x] + b[x])))
            .sum();
        total += path.step(k) * phi;
    }
    Ok(total)
}

/// `∫₀¹ Σ μ Γ(h_s, ρ_s) ξ(ρ_s) ds`. Under the chain rule this is
/// `Ent^Φ(ρ_1) − Ent^Φ(ρ_0)`; on jump chains the two differ.
pub fn phi_entropy_increment(
    triple: &MarkovTriple,
    path: &DiscretePath,
    xi: &XiFunction,
) -> Result<f64> {
    path.validate(triple)?;
    let m = triple.len();
    let mu = triple.measure();
    let mut total = 0.0;
    // three-point Gauss–Legendre in s on each slice
    let nodes = [
        (0.5 - 0.5 * (3.0f64 / 5.0).sqrt(), 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + 0.5 * (3.0f64 / 5.0).sqrt(), 5.0 / 18.0),
    ];
    let mut rho = vec![0.0; m];
    let mut g = vec![0.0; m];
    let mut w = vec![0.0; m];
    for k in 0..path.slices() {
        let (a, b, h) = (
            &path.densities[k],
            &path.densities[k + 1],
            &path.potentials[k],
        );
        for &(theta, weight) in &nodes {
            for x in 0..m {
                rho[x] = (1.0 - theta) * a[x] + theta * b[x];
            }
            triple.gamma_into(h, &rho, &mut g);
            for x in 0..m {
                w[x] = mu[x] * g[x] * xi.xi(rho[x]);
            }
            total += path.step(k) * weight * w.iter().sum::<f64>();
        }
    }
    Ok(total)
}

/// Straight-line path `ρ_k = (1−s_k) f + s_k g` with constant `h = L⁻¹(f − g)`.
pub fn initial_path(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    slices: usize,
) -> Result<DiscretePath> {
    if slices < 2 {
        return Err(Error::BadSize(format!(
            "initial path needs K >= 2, got {slices}"
        )));
    }
    triple.check_len(f.len())?;
    triple.check_len(g.len())?;
    let diff: Vec<f64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
    let h = triple.solve_poisson(&diff)?.into_inner();
    let times = uniform_times(slices);
    let densities = times
        .iter()
        .map(|&s| {
            f.iter()
                .zip(g)
                .map(|(a, b)| (1.0 - s) * a + s * b)
                .collect()
        })
        .collect();
    let potentials = vec![h; slices];
    DiscretePath::new(triple, times, densities, potentials)
}

pub(crate) fn uniform_times(slices: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..=slices).map(|k| k as f64 / slices as f64).collect();
    t[slices] = 1.0;
    t
}

/// Path through the given nodes on the given times, with each `h_k` solving
/// `L h_k = −(ρ_{k+1}−ρ_k)/Δs_k` (one step of residual refinement).
pub fn path_from_nodes(
    triple: &MarkovTriple,
    times: Vec<f64>,
    densities: Vec<Vec<f64>>,
) -> Result<DiscretePath> {
    if densities.len() < 2 || times.len() != densities.len() {
        return Err(Error::BadSize(
            "path needs matching times and at least two nodes".into(),
        ));
    }
    let m = triple.len();
    let mut potentials = Vec::with_capacity(densities.len() - 1);
    let mut lh = vec![0.0; m];
    for k in 0..densities.len() - 1 {
        let ds = times[k + 1] - times[k];
        let mut rhs: Vec<f64> = (0..m)
            .map(|x| -(densities[k + 1][x] - densities[k][x]) / ds)
            .collect();
        center(triple, &mut rhs);
        let mut h = triple.solve_poisson(&rhs)?.into_inner();
        triple.apply_into(&h, &mut lh);
        let mut r: Vec<f64> = (0..m).map(|x| rhs[x] - lh[x]).collect();
        center(triple, &mut r);
        let dh = triple.spectral().pseudo_inverse_apply(&r);
        h.iter_mut().zip(&dh).for_each(|(a, b)| *a += b);
        potentials.push(h);
    }
    DiscretePath::new(triple, times, densities, potentials)
}

/// Removes the `μ`-mean (rounding drift in differences of unit-mass vectors).
pub(crate) fn center(triple: &MarkovTriple, v: &mut [f64]) {
    let mean = triple.mean(v);
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Path sampled from `s ↦ ρ(s)` at `K+1` uniform nodes.
pub fn path_from_curve<F>(triple: &MarkovTriple, slices: usize, curve: F) -> Result<DiscretePath>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let times = uniform_times(slices);
    let densities = times
        .iter()
        .map(|&s| curve(s))
        .collect::<Result<Vec<_>>>()?;
    path_from_nodes(triple, times, densities)
}

/// `(P_T ρ_s, P_T h_s)`, feasible because `P_T` commutes with `L`.
pub fn push_forward(triple: &MarkovTriple, path: &DiscretePath, t: f64) -> Result<DiscretePath> {
    let spectral = triple.spectral();
    let densities = path
        .densities
        .iter()
        .map(|rho| spectral.evolve(rho, t))
        .collect::<Result<Vec<_>>>()?;
    let potentials = path
        .potentials
        .iter()
        .map(|h| spectral.evolve(h, t))
        .collect::<Result<Vec<_>>>()?;
    DiscretePath::new(triple, path.times.clone(), densities, potentials)
}

/// The null path `ρ ≡ f`, `h ≡ 0`.
pub fn constant_path(triple: &MarkovTriple, f: &[f64], slices: usize) -> Result<DiscretePath> {
    DiscretePath::new(
        triple,
        uniform_times(slices),
        vec![f.to_vec(); slices + 1],
        vec![vec![0.0; triple.len()]; slices],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ring_chain, two_point};
    use crate::transport::exact::t2_two_point_exact;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_path_has_zero_action() {
        let t = two_point(1.0).unwrap();
        let p = constant_path(&t, &[1.2, 0.8], 8).unwrap();
        assert_eq!(action(&t, &p).unwrap(), 0.0);
        let q = initial_path(&t, &[1.2, 0.8], &[1.2, 0.8], 4).unwrap();
        assert_eq!(action(&t, &q).unwrap(), 0.0);
    }

    #[test]
    fn two_point_geodesic_action() {
        let kappa = 1.0;
        let t = two_point(kappa).unwrap();
        let (theta, omega) = (std::f64::consts::PI / 6.0, std::f64::consts::PI / 3.0);
        let path = path_from_curve(&t, 64, |s| {
            let r = (s * omega + (1.0 - s) * theta).sin().powi(2);
            Ok(vec![2.0 * (1.0 - r), 2.0 * r])
        })
        .unwrap();
        let a = action(&t, &path).unwrap();
        let exact = t2_two_point_exact(kappa, 0.25, 0.75).unwrap();
        assert!((a - exact).abs() < 1e-3, "{a} vs {exact}");
        assert!(a >= exact - 1e-12);
    }

    #[test]
    fn seed_path_matches_log_mean_formula() {
        let t = two_point(1.0).unwrap();
        let (f, g) = ([1.5, 0.5], [0.5, 1.5]);
        let p = initial_path(&t, &f, &g, 8).unwrap();
        let h = t.solve_poisson(&[1.0, -1.0]).unwrap();
        let gam = t.gamma_sq(&h).unwrap();
        let formula: f64 = (0..2)
            .map(|x| 0.5 * gam[x] * (f[x].ln() - g[x].ln()) / (f[x] - g[x]))
            .sum();
        let a = action(&t, &p).unwrap();
        assert!((a - formula).abs() < 1e-12, "{a} vs {formula}");
        assert!(a >= t2_two_point_exact(1.0, 0.25, 0.75).unwrap());
        let mid = midpoint_action(&t, &p, &XiFunction::Entropy).unwrap();
        assert!(mid < a && (a - mid) / a < 0.05);
    }

    #[test]
    fn ring_random_pair_is_feasible() {
        let t = ring_chain(8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f: Vec<f64> = (0..8).map(|_| rng.random_range(0.2..2.0)).collect();
        let g: Vec<f64> = (0..8).map(|_| rng.random_range(0.2..2.0)).collect();
        let (f, g) = (normalize(&t, f), normalize(&t, g));
        let p = initial_path(&t, &f, &g, 16).unwrap();
        assert!(p.residual(&t) <= RESIDUAL_TOL);
        let rev = p.reversed();
        rev.validate(&t).unwrap();
        let (a, b) = (action(&t, &p).unwrap(), action(&t, &rev).unwrap());
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn validation_errors() {
        let t = two_point(1.0).unwrap();
        let bad = DiscretePath::new(
            &t,
            vec![0.0, 1.0],
            vec![vec![1.5, 0.5], vec![0.5, 1.5]],
            vec![vec![0.0, 0.0]],
        );
        assert!(matches!(bad, Err(Error::InfeasiblePath(_))));
        let neg = DiscretePath::new(
            &t,
            vec![0.0, 1.0],
            vec![vec![2.0, 0.0], vec![1.0, 1.0]],
            vec![vec![0.5, 0.0]],
        );
        assert!(matches!(neg, Err(Error::NonPositiveDensity { .. })));
    }

    #[test]
    fn push_forward_is_feasible_and_contracts_on_two_point() {
        let t = two_point(1.0).unwrap();
        let p = initial_path(&t, &[1.5, 0.5], &[0.5, 1.5], 16).unwrap();
        let q = push_forward(&t, &p, 0.3).unwrap();
        assert!(action(&t, &q).unwrap() < action(&t, &p).unwrap());
    }

    #[test]
    fn phi_entropy_increment_on_circle() {
        let m = 64;
        let t = crate::models::circle_diffusion(&vec![0.0; m], 1.0).unwrap();
        let xs = crate::models::circle_nodes(m, 1.0);
        let two_pi = 2.0 * std::f64::consts::PI;
        let f = normalize(
            &t,
            xs.iter().map(|x| 1.0 + 0.5 * (two_pi * x).sin()).collect(),
        );
        let g = normalize(
            &t,
            xs.iter().map(|x| 1.0 + 0.4 * (two_pi * x).cos()).collect(),
        );
        let p = initial_path(&t, &f, &g, 32).unwrap();
        for xi in [XiFunction::Entropy, XiFunction::Power { p: 1.5 }] {
            let inc = phi_entropy_increment(&t, &p, &xi).unwrap();
            let diff = t.phi_entropy(&g, &xi).unwrap() - t.phi_entropy(&f, &xi).unwrap();
            assert!(
                (inc - diff).abs() < 1e-2 * diff.abs().max(1e-3),
                "{xi:?}: {inc} vs {diff}"
            );
        }
    }

    pub(crate) fn normalize(t: &MarkovTriple, v: Vec<f64>) -> Vec<f64> {
        let m = t.mean(&v);
        v.into_iter().map(|x| x / m).collect()
    }
}
