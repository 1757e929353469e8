//! Constant-speed time change turning a path into an ε-geodesic.
//!
//! With slice costs `φ` and total `Φ = ∫φ`, pick `a` with
//! `∫₀¹ √(φ+a) = √(Φ+ε)` and set `τ(u) = ∫₀ᵘ √(φ+a)/√(Φ+ε)`. The reparametrized
//! path `ρ'(s) = ρ(τ⁻¹(s))` has cost `(Φ+ε)φ/(φ+a) ≤ Φ+ε` at every time.

use super::path::{uniform_times, DiscretePath};
use crate::error::{Error, Result};
use crate::markov::MarkovTriple;
use crate::xi::XiFunction;

/// ε-geodesic reparametrization for the plain transport cost.
pub fn reparametrize_eps_geodesic(
    triple: &MarkovTriple,
    path: &DiscretePath,
    eps: f64,
) -> Result<DiscretePath> {
    reparametrize_eps_geodesic_xi(triple, path, eps, &XiFunction::Entropy)
}

pub fn reparametrize_eps_geodesic_xi(
    triple: &MarkovTriple,
    path: &DiscretePath,
    eps: f64,
    xi: &XiFunction,
) -> Result<DiscretePath> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::BadParameters(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    path.validate(triple)?;
    let phi = path.phi_profile_xi(triple, xi);
    if phi.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::RootFindFailure(
            "slice costs are not finite and non-negative".into(),
        ));
    }
    let k = path.slices();
    let steps: Vec<f64> = (0..k).map(|j| path.step(j)).collect();
    let total: f64 = steps.iter().zip(&phi).map(|(d, v)| d * v).sum();
    let target = (total + eps).sqrt();
    let shift = solve_shift(&steps, &phi, target)?;

    // τ at the old nodes
    let mut tau = Vec::with_capacity(k + 1);
    tau.push(0.0);
    let mut acc = 0.0;
    for j in 0..k {
        acc += steps[j] * (phi[j] + shift).sqrt() / target;
        tau.push(acc);
    }
    let end = tau[k];
    tau.iter_mut().for_each(|v| *v /= end);
    tau[k] = 1.0;

    let new_times = uniform_times(k);
    let old_times = path.times();
    let u: Vec<f64> = new_times
        .iter()
        .map(|&s| invert(&tau, old_times, s))
        .collect();

    let m = triple.len();
    let rho = path.densities();
    let mut densities = Vec::with_capacity(k + 1);
    for (i, &ui) in u.iter().enumerate() {
        if i == 0 {
            densities.push(rho[0].clone());
        } else if i == k {
            densities.push(rho[k].clone());
        } else {
            let j = locate(old_times, ui);
            let w = (ui - old_times[j]) / steps[j];
            densities.push(
                (0..m)
                    .map(|x| (1.0 - w) * rho[j][x] + w * rho[j + 1][x])
                    .collect(),
            );
        }
    }
    // h'_i = Σ_j |[u_i, u_{i+1}] ∩ I_j| h_j / Δs', exactly feasible for linear slices
    let h = path.potentials();
    let mut potentials = Vec::with_capacity(k);
    for i in 0..k {
        let ds = new_times[i + 1] - new_times[i];
        let (lo, hi) = (u[i], u[i + 1]);
        let mut out = vec![0.0; m];
        let start = locate(old_times, lo);
        for j in start..k {
            if old_times[j] >= hi {
                break;
            }
            let overlap = hi.min(old_times[j + 1]) - lo.max(old_times[j]);
            if overlap > 0.0 {
                let c = overlap / ds;
                out.iter_mut().zip(&h[j]).for_each(|(o, v)| *o += c * v);
            }
        }
        potentials.push(out);
    }
    let mut result = DiscretePath::new_unchecked(new_times, densities, potentials);
    if result.validate(triple).is_err() {
        repair_last_slice(triple, &mut result)?;
    }
    result.validate(triple)?;
    Ok(result)
}

/// Bisection for `a ≥ 0` with `Σ Δs_j √(φ_j + a) = target`.
fn solve_shift(steps: &[f64], phi: &[f64], target: f64) -> Result<f64> {
    let eval = |a: f64| -> f64 {
        steps
            .iter()
            .zip(phi)
            .map(|(d, v)| d * (v + a).sqrt())
            .sum::<f64>()
            - target
    };
    let mut lo = 0.0;
    let mut hi = target * target;
    if eval(lo) > 0.0 || eval(hi) < 0.0 {
        return Err(Error::RootFindFailure(format!(
            "no sign change on [0, {hi}]: {} .. {}",
            eval(lo),
            eval(hi)
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `β(s) = τ⁻¹(s)` for piecewise-linear `τ` given at the old nodes.
fn invert(tau: &[f64], times: &[f64], s: f64) -> f64 {
    let j = locate(tau, s);
    let span = tau[j + 1] - tau[j];
    let w = if span > 0.0 { (s - tau[j]) / span } else { 0.0 };
    times[j] + w * (times[j + 1] - times[j])
}

/// Interval index `j` with `nodes[j] ≤ v ≤ nodes[j+1]`.
fn locate(nodes: &[f64], v: f64) -> usize {
    let k = nodes.len() - 1;
    match nodes.binary_search_by(|x| x.total_cmp(&v)) {
        Ok(i) => i.min(k - 1),
        Err(i) => i.saturating_sub(1).min(k - 1),
    }
}

/// Absorbs rounding drift in the final slice by a Poisson correction.
fn repair_last_slice(triple: &MarkovTriple, path: &mut DiscretePath) -> Result<()> {
    let times = path.times().to_vec();
    let densities = path.densities().to_vec();
    let mut potentials = path.potentials().to_vec();
    let m = triple.len();
    let mut lh = vec![0.0; m];
    for (k, h) in potentials.iter_mut().enumerate() {
        let ds = times[k + 1] - times[k];
        triple.apply_into(h, &mut lh);
        let mut r: Vec<f64> = (0..m)
            .map(|x| (densities[k + 1][x] - densities[k][x]) / ds + lh[x])
            .collect();
        super::path::center(triple, &mut r);
        let dh = triple.spectral().pseudo_inverse_apply(&r);
        h.iter_mut().zip(&dh).for_each(|(a, b)| *a += b);
    }
    *path = DiscretePath::new_unchecked(times, densities, potentials);
    Ok(())
}
