//! Numerical instances of the functional inequalities.
//!
//! Each check returns a [`VerificationReport`] with both sides, where they came
//! from and the tolerance applied. Wherever a proof pushes an explicit path
//! through the semigroup, the left side is the recomputed action of that very
//! path, so a pass is a genuine numerical instance of the proof inequality.

mod chain;
mod heat;
mod report;

pub use chain::{
    factor_product_density, power_coefficient, verify_de_bruijn, verify_dimensional_contraction,
    verify_dimensional_evi, verify_dimensional_evi_two_point, verify_evi,
    verify_integrated_gradient_bound, verify_kuwada_bound, verify_kuwada_derivative,
    verify_phi_contraction, verify_phi_entropy_identity, verify_phi_evi,
    verify_pointwise_gradient_bound, verify_power_contraction, verify_talagrand,
    verify_tensorization, verify_tensorization_xi,
};
pub use heat::{
    verify_evi_heat_dimensional, verify_heat_contraction, verify_heat_different_times,
    verify_heat_field_contraction, LINE_DIMENSION,
};
pub use report::{HarnessOptions, Provenance, Side, VerificationReport, EMPIRICAL_NOTE};

use crate::error::{Error, Result};

/// Geometric nodes added below the first uniform step.
const GEOMETRIC_NODES: usize = 12;

/// `[0, t]` sampled by `uniform + 1` equispaced nodes merged with a geometric
/// cluster near 0, where entropies move fastest.
pub fn time_grid(t: f64, uniform: usize) -> Vec<f64> {
    if t <= 0.0 {
        return vec![0.0];
    }
    let uniform = uniform.max(1);
    let h = t / uniform as f64;
    let mut nodes: Vec<f64> = (0..=uniform).map(|i| i as f64 * h).collect();
    nodes.extend((1..=GEOMETRIC_NODES).map(|j| h * 0.5f64.powi(j as i32)));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    *nodes.last_mut().unwrap() = t;
    nodes
}

/// Trapezoid rule on arbitrary nodes.
pub fn trapezoid(nodes: &[f64], values: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `∫₀ᵗ F` by five-point Gauss–Legendre on the panels of [`time_grid`],
/// further split geometrically (ratio 0.7) down to `t·10⁻¹²` so fast-decaying
/// modes are resolved.
pub(crate) fn integrate_in_time<F>(t: f64, uniform: usize, mut integrand: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let mut edges = time_grid(t, uniform);
    if edges.len() < 2 {
        return Ok(0.0);
    }
    edges.extend((1..=80).map(|j| t * 0.7f64.powi(j)));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (mid, h) = (0.5 * (w[0] + w[1]), w[1] - w[0]);
        for (x, weight) in NODES {
            total += 0.5 * h * weight * integrand(mid + 0.5 * h * x)?;
        }
    }
    Ok(total)
}

/// `(1 − e^{−x})/x`, equal to 1 at `x = 0`.
pub(crate) fn relaxation(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Upper bound `e^{−2RT}Λ₀ / (1 + nRΛ₀(1 − e^{−2RT})/(4(n−1)²))` on the
/// squared distance to equilibrium after time `T` under `CD(R, n)`.
pub fn equilibrium_decay_bound(t2sq_0: f64, r: f64, n: f64, t: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::BadParameters(format!(
            "curvature must be positive, got {r}"
        )));
    }
    if !(n.is_finite() && n > 1.0) {
        return Err(Error::BadParameters(format!(
            "dimension must exceed 1, got {n}"
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::BadParameters(format!(
            "time must be non-negative, got {t}"
        )));
    }
    if !(t2sq_0.is_finite() && t2sq_0 >= 0.0) {
        return Err(Error::BadParameters(format!(
            "initial distance must be non-negative, got {t2sq_0}"
        )));
    }
    let decay = -(-2.0 * r * t).exp_m1();
    let denom = 1.0 + n * r * t2sq_0 * decay / (4.0 * (n - 1.0) * (n - 1.0));
    Ok((-2.0 * r * t).exp() * t2sq_0 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_sorted_and_dense_near_zero() {
        let g = time_grid(2.0, 64);
        assert!(g.len() >= 64 + GEOMETRIC_NODES);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[1] < 1e-5);
        assert_eq!(time_grid(0.0, 64), vec![0.0]);
    }

    #[test]
    fn trapezoid_is_exact_on_lines() {
        let g = time_grid(1.5, 40);
        let v: Vec<f64> = g.iter().map(|t| 3.0 * t - 1.0).collect();
        assert!((trapezoid(&g, &v) - (3.0 * 1.125 - 1.5)).abs() < 1e-13);
    }

    #[test]
    fn time_integral_resolves_fast_decay() {
        for rate in [1.0, 50.0, 5000.0] {
            let v = integrate_in_time(1.0, 64, |u| Ok(rate * (-rate * u).exp())).unwrap();
            assert!((v + (-rate).exp_m1()).abs() < 1e-10, "{rate}: {v}");
        }
        assert_eq!(integrate_in_time(0.0, 64, |_| Ok(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn relaxation_limits() {
        assert_eq!(relaxation(0.0), 1.0);
        assert!((relaxation(1e-9) - 1.0).abs() < 1e-9);
        assert!((relaxation(2.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn decay_bound_arithmetic() {
        assert_eq!(equilibrium_decay_bound(0.7, 1.0, 2.0, 0.0).unwrap(), 0.7);
        assert_eq!(equilibrium_decay_bound(0.0, 1.0, 2.0, 3.0).unwrap(), 0.0);
        let e2 = (-2.0f64).exp();
        let v = equilibrium_decay_bound(1.0, 1.0, 2.0, 1.0).unwrap();
        assert!((v - e2 / (1.0 + 2.0 * (1.0 - e2) / 4.0)).abs() < 1e-15);
        assert!((v - 0.0944859).abs() < 1e-6);
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let t = 0.25 * i as f64;
            let b = equilibrium_decay_bound(0.5, 2.0, 5.0, t).unwrap();
            assert!(b <= last && b <= (-4.0 * t).exp() * 0.5 + 1e-16);
            last = b;
        }
        assert!(equilibrium_decay_bound(1.0, 0.0, 2.0, 1.0).is_err());
        assert!(equilibrium_decay_bound(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(equilibrium_decay_bound(1.0, 1.0, 2.0, -1.0).is_err());
    }
}
