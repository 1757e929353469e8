//! Checks for the Euclidean heat semigroup on a line grid, with `n = 1`.

use super::integrate_in_time;
use super::report::{HarnessOptions, Provenance, Side, VerificationReport};
use crate::error::{Error, Result};
use crate::line::{heat_evolve_line, heat_evolve_vector_line, LineGrid};
use crate::transport::{displacement_interpolation_1d, w2_quantile_1d};

/// Dimension of the line.
pub const LINE_DIMENSION: f64 = 1.0;

/// Relative tolerance of the heat checks.
const HEAT_REL_TOL: f64 = 1e-3;
/// Nodes where the weight falls below this fraction of its maximum are dropped
/// from `∫ F²/g`-type integrals (rounding there is not relative).
const RATIO_FLOOR: f64 = 1e-12;
/// Intervals of the geodesic `s`-grid (Simpson, so 33 nodes).
const GEODESIC_INTERVALS: usize = 32;

fn w2_sq(grid: &LineGrid, f: &[f64], g: &[f64]) -> Result<f64> {
    Ok(w2_quantile_1d(grid, f, g)?.powi(2))
}

fn entropy_at(grid: &LineGrid, f: &[f64], t: f64) -> Result<f64> {
    Ok(grid.entropy(&heat_evolve_line(grid, f, t)?))
}

/// `∫ a·b / w` over nodes where `w` is significant.
fn ratio_integral(grid: &LineGrid, a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    (0..grid.len())
        .filter(|&i| w[i] > RATIO_FLOOR * wmax)
        .map(|i| grid.weight(i) * a[i] * b[i] / w[i])
        .sum()
}

/// Contraction of `W₂²` under the heat flow with the entropy correction.
pub fn verify_heat_contraction(
    grid: &LineGrid,
    f: &[f64],
    g: &[f64],
    t: f64,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    let (ft, gt) = (heat_evolve_line(grid, f, t)?, heat_evolve_line(grid, g, t)?);
    let lhs = w2_sq(grid, &ft, &gt)?;
    let start = w2_sq(grid, f, g)?;
    let correction = integrate_in_time(t, options.time_nodes, |u| {
        Ok((entropy_at(grid, f, u)? - entropy_at(grid, g, u)?).powi(2))
    })?;
    let rhs = start - 2.0 / LINE_DIMENSION * correction;
    Ok(VerificationReport::new(
        "heat_contraction",
        Side::new(lhs, Provenance::Quadrature),
        Side::new(rhs, Provenance::Quadrature),
        start,
        options.relative_tolerance(HEAT_REL_TOL, start),
    )
    .param("T", t)
    .param("n", LINE_DIMENSION)
    .param("m", grid.len())
    .detail("w2_sq_initial", start)
    .detail("correction", correction))
}

/// Weighted contraction of a vector field `F` against the density `g`.
pub fn verify_heat_field_contraction(
    grid: &LineGrid,
    field: &[f64],
    g: &[f64],
    t: f64,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    grid.check_len(field.len())?;
    if let Some((index, &value)) = g.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::ZeroDensity { index, value });
    }
    let ft = heat_evolve_vector_line(grid, field, t)?;
    let gt = heat_evolve_line(grid, g, t)?;
    let lhs = ratio_integral(grid, &ft, &ft, &gt);
    let start = ratio_integral(grid, field, field, g);
    let correction = integrate_in_time(t, options.time_nodes, |u| {
        let fu = heat_evolve_vector_line(grid, field, u)?;
        let gu = heat_evolve_line(grid, g, u)?;
        let dg = grid.derivative(&gu);
        Ok(ratio_integral(grid, &fu, &dg, &gu).powi(2))
    })?;
    let rhs = start - 2.0 / LINE_DIMENSION * correction;
    Ok(VerificationReport::new(
        "heat_field_contraction",
        Side::new(lhs, Provenance::Quadrature),
        Side::new(rhs, Provenance::Quadrature),
        start,
        options.relative_tolerance(HEAT_REL_TOL, start),
    )
    .param("T", t)
    .param("n", LINE_DIMENSION)
    .param("m", grid.len())
    .detail("weighted_norm_initial", start)
    .detail("correction", correction))
}

/// `W₂²(H_t f, H_s g) ≤ W₂²(f, g) + 2n(t−s) − (2/n)∫₀ˢ(Ent H_{t−s+u}f − Ent H_u g)² du`.
///
/// The time-shift constant is `2n(t−s)`: it comes from bounding
/// `W₂²(H_{t−s} f, f)` by `2n(t−s)`, and it cannot be smaller (take `f = g` a
/// narrow bump and `s = 0`). The right side with `n(t−s)` is kept as a detail.
pub fn verify_heat_different_times(
    grid: &LineGrid,
    f: &[f64],
    g: &[f64],
    s: f64,
    t: f64,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    if !(s <= t) {
        return Err(Error::BadTimes { s, t });
    }
    if s < 0.0 {
        return Err(Error::NegativeTime(s));
    }
    let lhs = w2_sq(
        grid,
        &heat_evolve_line(grid, f, t)?,
        &heat_evolve_line(grid, g, s)?,
    )?;
    let start = w2_sq(grid, f, g)?;
    let shift = t - s;
    let correction = integrate_in_time(s, options.time_nodes, |u| {
        Ok((entropy_at(grid, f, shift + u)? - entropy_at(grid, g, u)?).powi(2))
    })?;
    let damped = start - 2.0 / LINE_DIMENSION * correction;
    let rhs = damped + 2.0 * LINE_DIMENSION * shift;
    let scale = start + 2.0 * LINE_DIMENSION * shift;
    Ok(VerificationReport::new(
        "heat_different_times",
        Side::new(lhs, Provenance::Quadrature),
        Side::new(rhs, Provenance::Quadrature),
        scale,
        options.relative_tolerance(HEAT_REL_TOL, scale),
    )
    .param("s", s)
    .param("t", t)
    .param("n", LINE_DIMENSION)
    .param("m", grid.len())
    .detail("w2_sq_initial", start)
    .detail("correction", correction)
    .detail("rhs_with_constant_n", damped + LINE_DIMENSION * shift)
    .note("time-shift term 2n(t-s)"))
}

/// Composite Simpson weights on `[0, 1]` with an even number of intervals.
fn simpson(intervals: usize) -> Vec<(f64, f64)> {
    let h = 1.0 / intervals as f64;
    (0..=intervals)
        .map(|j| {
            let w = if j == 0 || j == intervals {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (j as f64 * h, w * h / 3.0)
        })
        .collect()
}

/// Forward-difference instance of the dimensional EVI for the heat flow.
/// Diagnostic: the derivative is replaced by a difference quotient.
pub fn verify_evi_heat_dimensional(
    grid: &LineGrid,
    f: &[f64],
    g: &[f64],
    dt: f64,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    if !(dt > 0.0) {
        return Err(Error::BadParameters(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let before = w2_sq(grid, f, g)?;
    let after = w2_sq(grid, f, &heat_evolve_line(grid, g, dt)?)?;
    let lhs = (after - before) / (2.0 * dt);
    let mut average = 0.0;
    for (s, w) in simpson(GEODESIC_INTERVALS) {
        average += w * displacement_interpolation_1d(grid, f, g, s)?.entropy;
    }
    let (ent_f, ent_g) = (grid.entropy(f), grid.entropy(g));
    let defect = ent_g - average;
    let rhs = -2.0 / LINE_DIMENSION * defect * defect + ent_f - ent_g;
    let scale = (ent_f - ent_g).abs().max(1.0);
    Ok(VerificationReport::new(
        "evi_heat_dimensional",
        Side::new(lhs, Provenance::Quadrature),
        Side::new(rhs, Provenance::Quadrature),
        scale,
        options.tolerance.unwrap_or(10.0 * dt * scale),
    )
    .param("dt", dt)
    .param("n", LINE_DIMENSION)
    .param("m", grid.len())
    .detail("geodesic_entropy_average", average)
    .detail("correction", 2.0 / LINE_DIMENSION * defect * defect)
    .as_diagnostic("derivative-approximation"))
}
