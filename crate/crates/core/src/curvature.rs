//! Pointwise curvature-dimension margins and sampled estimates of the best
//! curvature and of the log-Sobolev constant.
//!
//! Estimators work on `L/c` with `c` the largest exit rate and rescale the
//! result, so `estimate(cL) = c·estimate(L)` holds up to rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::markov::MarkovTriple;

/// States where `Γ(f)` is at most this are left out of ratios.
pub const GAMMA_FLOOR: f64 = 1e-12;

/// Accepts `n ≥ 1`, with `f64::INFINITY` standing for `n = ∞`.
pub fn check_dimension(n: f64) -> Result<f64> {
    if n.is_nan() || n < 1.0 {
        return Err(Error::BadDimension(n));
    }
    Ok(if n.is_infinite() { 0.0 } else { 1.0 / n })
}

/// `min_x [Γ₂(f) − RΓ(f) − (Lf)²/n]`.
pub fn cd_margin(triple: &MarkovTriple, f: &[f64], r: f64, n: f64) -> Result<f64> {
    let inv_n = check_dimension(n)?;
    let g2 = triple.gamma2(f)?;
    let g = triple.gamma_sq(f)?;
    let lf = triple.apply(f)?;
    Ok((0..triple.len())
        .map(|x| g2[x] - r * g[x] - inv_n * lf[x] * lf[x])
        .fold(f64::INFINITY, f64::min))
}

/// Both sides of `Γ₂(f) + Γ(Γ(f), g) + Γ(f)Γ(g) ≥ RΓ(f) + (Lf + Γ(f,g))²/n`
/// at every state, as `(lower, upper)` with `lower ≤ upper` the claim.
pub fn weighted_cd_sides(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    n: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let inv_n = check_dimension(n)?;
    let g2 = triple.gamma2(f)?;
    let gf = triple.gamma_sq(f)?;
    let gg = triple.gamma_sq(g)?;
    let gfg = triple.gamma(f, g)?;
    let cross = triple.gamma(&gf, g)?;
    let lf = triple.apply(f)?;
    let m = triple.len();
    let upper = (0..m).map(|x| g2[x] + cross[x] + gf[x] * gg[x]).collect();
    let lower = (0..m)
        .map(|x| {
            let t = lf[x] + gfg[x];
            r * gf[x] + inv_n * t * t
        })
        .collect();
    Ok((lower, upper))
}

/// `min_x` of the gap in [`weighted_cd_sides`].
pub fn weighted_cd_margin(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    n: f64,
) -> Result<f64> {
    let (lower, upper) = weighted_cd_sides(triple, f, g, r, n)?;
    Ok(lower
        .iter()
        .zip(&upper)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min))
}

/// `min_x (Γ₂(f) − (Lf)²/n)/Γ(f)` over states with `Γ(f) > GAMMA_FLOOR·scale`.
fn curvature_ratio(triple: &MarkovTriple, f: &[f64], inv_n: f64) -> f64 {
    let (Ok(g2), Ok(g), Ok(lf)) = (triple.gamma2(f), triple.gamma_sq(f), triple.apply(f)) else {
        return f64::INFINITY;
    };
    let scale = f
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .powi(2)
        .max(f64::MIN_POSITIVE);
    (0..triple.len())
        .filter(|&x| g[x] > GAMMA_FLOOR * scale)
        .map(|x| (g2[x] - inv_n * lf[x] * lf[x]) / g[x])
        .fold(f64::INFINITY, f64::min)
}

fn gaussian_field(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn normalized_copy(triple: &MarkovTriple) -> Result<(MarkovTriple, f64)> {
    let c = triple.max_rate();
    if c <= 0.0 {
        return Err(Error::BadParameters("generator has no transitions".into()));
    }
    Ok((triple.scaled(1.0 / c)?, c))
}

/// Sampled upper bound on the largest `R` with `CD(R, n)`.
///
/// Candidates are the eigenvectors and `sample_count` Gaussian fields; the
/// best few are refined by a seeded random descent. For finite `n` the
/// functions visited by the `n = ∞` search are also scored, so the estimate
/// never exceeds the `n = ∞` one.
#[allow(non_snake_case)]
pub fn estimate_best_R(
    triple: &MarkovTriple,
    n: f64,
    sample_count: usize,
    seed: u64,
) -> Result<f64> {
    let inv_n = check_dimension(n)?;
    let (work, c) = normalized_copy(triple)?;
    let (mut best, visited) = curvature_search(&work, 0.0, sample_count, seed);
    if inv_n > 0.0 {
        let (own, _) = curvature_search(&work, inv_n, sample_count, seed);
        best = visited
            .iter()
            .map(|f| curvature_ratio(&work, f, inv_n))
            .fold(own, f64::min);
    }
    Ok(best * c)
}

/// Minimum ratio found and the functions accepted along the way.
fn curvature_search(
    work: &MarkovTriple,
    inv_n: f64,
    sample_count: usize,
    seed: u64,
) -> (f64, Vec<Vec<f64>>) {
    let m = work.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = work.spectral().modes();
    let mut candidates: Vec<Vec<f64>> = (1..m)
        .map(|j| modes.column(j).iter().copied().collect())
        .collect();
    candidates.extend((0..sample_count).map(|_| gaussian_field(&mut rng, m)));
    let mut scored: Vec<(f64, Vec<f64>)> = candidates
        .into_iter()
        .map(|f| (curvature_ratio(work, &f, inv_n), f))
        .filter(|(r, _)| r.is_finite())
        .collect();
    if scored.is_empty() {
        return (f64::INFINITY, Vec::new());
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut visited: Vec<Vec<f64>> = scored.iter().map(|s| s.1.clone()).collect();
    scored.truncate(4);
    let mut best = scored[0].0;
    for (mut value, mut f) in scored {
        let mut sigma = 0.1;
        for _ in 0..300 {
            let norm = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let step = gaussian_field(&mut rng, m);
            let trial: Vec<f64> = f
                .iter()
                .zip(&step)
                .map(|(a, b)| a + sigma * norm * b)
                .collect();
            let r = curvature_ratio(work, &trial, inv_n);
            if r < value {
                value = r;
                f = trial;
                visited.push(f.clone());
                sigma = (sigma * 1.5).min(1.0);
            } else {
                sigma = (sigma * 0.8).max(1e-6);
            }
        }
        best = best.min(value);
    }
    (best, visited)
}

/// `Ent(f)` for a density with `Σμf = 1`, written as `Σμ[(1+u)log(1+u) − u]`.
fn entropy_stable(triple: &MarkovTriple, f: &[f64]) -> f64 {
    triple
        .measure()
        .iter()
        .zip(f)
        .map(|(w, &v)| {
            let u = v - 1.0;
            w * ((1.0 + u) * u.ln_1p() - u)
        })
        .sum()
}

fn lsi_ratio(triple: &MarkovTriple, f: &[f64]) -> f64 {
    if f.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return f64::NEG_INFINITY;
    }
    let mass = triple.mean(f);
    let f: Vec<f64> = f.iter().map(|v| v / mass).collect();
    match triple.fisher_information(&f) {
        Ok(i) if i > 0.0 => entropy_stable(triple, &f) / i,
        _ => f64::NEG_INFINITY,
    }
}

/// Sampled lower bound on the optimal constant in `Ent(f) ≤ C ∫Γ(f)/f dμ`.
pub fn lsi_lower_bound(triple: &MarkovTriple, sample_count: usize, seed: u64) -> Result<f64> {
    let (work, c) = normalized_copy(triple)?;
    let spectral = work.spectral();
    if spectral.kernel_dimension() > 1 {
        return Err(Error::ReducibleChain(spectral.kernel_dimension()));
    }
    let m = work.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = spectral.modes();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for j in 1..m {
        let v: Vec<f64> = modes.column(j).iter().copied().collect();
        let vmax = v
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        candidates.push(v.iter().map(|x| 1.0 + 1e-4 * x / vmax).collect());
        for t in [0.5, 1.0, 2.0, 4.0] {
            candidates.push(v.iter().map(|x| (t * x / vmax).exp()).collect());
        }
    }
    for _ in 0..sample_count {
        let scale = rng.random_range(0.05..2.0);
        candidates.push(
            gaussian_field(&mut rng, m)
                .iter()
                .map(|x| (scale * x).exp())
                .collect(),
        );
    }
    let mut scored: Vec<(f64, Vec<f64>)> = candidates
        .into_iter()
        .map(|f| (lsi_ratio(&work, &f), f))
        .filter(|(r, _)| r.is_finite())
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.truncate(4);
    let mut best = scored.first().map(|s| s.0).unwrap_or(0.0);
    for (mut value, f) in scored {
        // ascend in log f
        let mut logf: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        let mut sigma = 0.1;
        for _ in 0..300 {
            let step = gaussian_field(&mut rng, m);
            let trial: Vec<f64> = logf.iter().zip(&step).map(|(a, b)| a + sigma * b).collect();
            let r = lsi_ratio(&work, &trial.iter().map(|v| v.exp()).collect::<Vec<_>>());
            if r > value {
                value = r;
                logf = trial;
                sigma = (sigma * 1.5).min(2.0);
            } else {
                sigma = (sigma * 0.8).max(1e-6);
            }
        }
        best = best.max(value);
    }
    Ok(best / c)
}
