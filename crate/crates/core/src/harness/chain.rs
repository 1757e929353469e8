//! Checks on finite triples. Path-level checks recompute the action of the
//! very path a proof constructs; the solver-side variants are kept as details.

use super::report::{HarnessOptions, Provenance, Side, VerificationReport, EMPIRICAL_NOTE};
use super::{integrate_in_time, relaxation};
use crate::curvature::{check_dimension, weighted_cd_sides};
use crate::error::{Error, Result};
use crate::markov::MarkovTriple;
use crate::models::{marginal_first, marginal_second, product, tensor, two_point};
use crate::transport::{
    action, action_xi, minimize_action, minimize_action_xi, path_from_curve, path_from_nodes,
    phi_entropy_increment, push_forward, t2_two_point_exact, two_point_density, two_point_geodesic,
    DiscretePath, TransportResult,
};
use crate::xi::XiFunction;

/// Panels of the Gauss–Legendre rule used for identities checked to `1e-6`.
const IDENTITY_PANELS: usize = 64;
/// Absolute slack of the small-time derivative bound.
const DERIVATIVE_SLACK: f64 = 0.05;
/// Largest slice-cost deviation accepted as a geodesic.
const GEODESIC_DEVIATION: f64 = 0.01;
/// Relative tolerance when factoring a density into a product.
const PRODUCT_TOL: f64 = 1e-10;

fn evolve(triple: &MarkovTriple, f: &[f64], t: f64) -> Result<Vec<f64>> {
    triple.spectral().evolve(f, t)
}

fn require_positive(f: &[f64]) -> Result<()> {
    match f.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        Some((index, &value)) => Err(Error::ZeroDensity { index, value }),
        None => Ok(()),
    }
}

fn labeled(report: VerificationReport, options: &HarnessOptions) -> VerificationReport {
    if options.is_jump_chain() {
        report.note(EMPIRICAL_NOTE)
    } else {
        report.param("mesh", options.mesh.unwrap_or(0.0))
    }
}

/// `Ent f − Ent P_t f = ∫₀ᵗ Σμ Γ(P_u f, log P_u f) du`, reported as the
/// absolute defect against zero. The Fisher-information form of the integrand
/// agrees only under the chain rule and is kept as a detail.
pub fn verify_de_bruijn(
    triple: &MarkovTriple,
    f: &[f64],
    t: f64,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    require_positive(f)?;
    let drop = triple.entropy(f) - triple.entropy(&evolve(triple, f, t)?);
    let dissipated = integrate_in_time(t, IDENTITY_PANELS, |u| {
        triple.entropy_dissipation(&evolve(triple, f, u)?)
    })?;
    let fisher = integrate_in_time(t, IDENTITY_PANELS, |u| {
        triple.fisher_information(&evolve(triple, f, u)?)
    })?;
    Ok(VerificationReport::new(
        "de_bruijn",
        Side::new((drop - dissipated).abs(), Provenance::Quadrature),
        Side::new(0.0, Provenance::ExactFormula),
        drop.abs(),
        options.tolerance.unwrap_or(1e-6),
    )
    .param("t", t)
    .detail("entropy_drop", drop)
    .detail("dissipation_integral", dissipated)
    .detail("fisher_integral", fisher))
}

/// Path `s ↦ P_{st} f` from `f` to `P_t f` at `K+1` nodes.
fn heat_path(triple: &MarkovTriple, f: &[f64], t: f64, slices: usize) -> Result<DiscretePath> {
    path_from_curve(triple, slices, |s| evolve(triple, f, s * t))
}

/// `T₂²(P_t f, f) ≤ t(Ent f − Ent P_t f)`, certified by the semigroup path
/// itself; the solver's bound for the same pair is a detail.
pub fn verify_kuwada_bound(
    triple: &MarkovTriple,
    f: &[f64],
    t: f64,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    require_positive(f)?;
    let ft = evolve(triple, f, t)?;
    let rhs = t * (triple.entropy(f) - triple.entropy(&ft));
    let explicit = action(triple, &heat_path(triple, f, t, slices)?)?;
    let solver = minimize_action(triple, &ft, f, slices, &options.solver)?.value;
    let report = VerificationReport::new(
        "kuwada",
        Side::new(explicit, Provenance::CertifiedPathAction),
        Side::new(rhs, Provenance::ExactFormula),
        rhs.abs(),
        options.chain_tolerance(rhs),
    )
    .param("t", t)
    .param("K", slices)
    .detail("solver_upper_bound", solver)
    .detail("best_upper_bound", solver.min(explicit))
    .detail("solver_margin", rhs - solver);
    Ok(labeled(report, options))
}

/// `T₂(P_t f, f)/t ≤ √I(f)` at a small `t`, from the better of the two bounds.
pub fn verify_kuwada_derivative(
    triple: &MarkovTriple,
    f: &[f64],
    t: f64,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    require_positive(f)?;
    if !(t > 0.0) {
        return Err(Error::BadParameters(format!(
            "time must be positive, got {t}"
        )));
    }
    let ft = evolve(triple, f, t)?;
    let explicit = action(triple, &heat_path(triple, f, t, slices)?)?;
    let solver = minimize_action(triple, &ft, f, slices, &options.solver)?.value;
    let (best, provenance) = if explicit <= solver {
        (explicit, Provenance::CertifiedPathAction)
    } else {
        (solver, Provenance::SolverUpperBound)
    };
    let fisher = triple.fisher_information(f)?.sqrt();
    Ok(VerificationReport::new(
        "kuwada_derivative",
        Side::new(best.sqrt() / t, provenance),
        Side::new(fisher, Provenance::ExactFormula),
        fisher,
        options.tolerance.unwrap_or(DERIVATIVE_SLACK),
    )
    .param("t", t)
    .param("K", slices))
}

/// `T₂²(f, P_T f) ≤ 4C Ent f` along a list of times, one report per time.
/// The sharper chain `T₂ ≤ √(4C)(√Ent f − √Ent P_T f)` is kept as details.
pub fn verify_talagrand(
    triple: &MarkovTriple,
    f: &[f64],
    constant: f64,
    times: &[f64],
    slices: usize,
    options: &HarnessOptions,
) -> Result<Vec<VerificationReport>> {
    require_positive(f)?;
    if !(constant.is_finite() && constant > 0.0) {
        return Err(Error::BadParameters(format!(
            "log-Sobolev constant must be positive, got {constant}"
        )));
    }
    let ent = triple.entropy(f);
    let rhs = 4.0 * constant * ent;
    times
        .iter()
        .map(|&t| {
            let ft = evolve(triple, f, t)?;
            let ub = minimize_action(triple, f, &ft, slices, &options.solver)?.value;
            let chain = (4.0 * constant).sqrt()
                * (ent.max(0.0).sqrt() - triple.entropy(&ft).max(0.0).sqrt());
            let report = VerificationReport::new(
                "talagrand",
                Side::new(ub, Provenance::SolverUpperBound),
                Side::new(rhs, Provenance::ExactFormula),
                rhs,
                options.chain_tolerance(rhs),
            )
            .param("T", t)
            .param("C", constant)
            .param("K", slices)
            .detail("sharper_chain_lhs", ub.sqrt())
            .detail("sharper_chain_rhs", chain)
            .detail("sharper_chain_margin", chain - ub.sqrt());
            Ok(labeled(report, options))
        })
        .collect()
}

struct Pushed {
    start: TransportResult,
    pushed_action: f64,
}

/// Near-geodesic between `f` and `g`, pushed through `P_t`.
fn push_geodesic(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    xi: &XiFunction,
    t: f64,
    slices: usize,
    options: &HarnessOptions,
) -> Result<Pushed> {
    let start = minimize_action_xi(triple, f, g, xi, slices, &options.solver)?;
    let pushed = push_forward(triple, &start.path, t)?;
    let pushed_action = action_xi(triple, &pushed, xi)?;
    Ok(Pushed {
        start,
        pushed_action,
    })
}

/// Solver bound for the evolved pair, the uncertified companion of a pushed check.
fn evolved_upper_bound(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    xi: &XiFunction,
    t: f64,
    slices: usize,
    options: &HarnessOptions,
) -> Result<f64> {
    let (ft, gt) = (evolve(triple, f, t)?, evolve(triple, g, t)?);
    Ok(minimize_action_xi(triple, &ft, &gt, xi, slices, &options.solver)?.value)
}

/// `T₂²(P_T f, P_T g) ≤ e^{−2RT}T₂²(f, g) − (2/n)∫₀ᵀ e^{−2R(T−t)}(Ent P_t g − Ent P_t f)² dt`,
/// with the left side the action of the pushed near-geodesic.
#[allow(clippy::too_many_arguments)]
pub fn verify_dimensional_contraction(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    n: f64,
    t: f64,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    let inv_n = check_dimension(n)?;
    let xi = XiFunction::Entropy;
    let run = push_geodesic(triple, f, g, &xi, t, slices, options)?;
    let correction = if inv_n > 0.0 {
        integrate_in_time(t, options.time_nodes, |u| {
            let d = triple.entropy(&evolve(triple, g, u)?) - triple.entropy(&evolve(triple, f, u)?);
            Ok((-2.0 * r * (t - u)).exp() * d * d)
        })?
    } else {
        0.0
    };
    let scale = (-2.0 * r * t).exp() * run.start.value;
    let rhs = scale - 2.0 * inv_n * correction;
    let ub = evolved_upper_bound(triple, f, g, &xi, t, slices, options)?;
    let report = VerificationReport::new(
        "dimensional_contraction",
        Side::new(run.pushed_action, Provenance::CertifiedPathAction),
        Side::new(rhs, Provenance::Quadrature),
        scale,
        options.chain_tolerance(scale),
    )
    .param("R", r)
    .param(
        "n",
        if n.is_finite() {
            n.into()
        } else {
            serde_json::Value::from("inf")
        },
    )
    .param("T", t)
    .param("K", slices)
    .detail("initial_action", run.start.value)
    .detail("correction", 2.0 * inv_n * correction)
    .detail("solver_upper_bound", ub)
    .detail("solver_margin", rhs - ub);
    Ok(labeled(report, options))
}

/// `∫Γ(P_t f)/P_t g ≤ e^{−2Rt}∫Γ(f)/g − (2/n)∫₀ᵗ e^{−2R(t−u)}(∫Γ(P_u f, P_u g)/P_u g)² du`.
#[allow(clippy::too_many_arguments)]
pub fn verify_integrated_gradient_bound(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    n: f64,
    t: f64,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    let inv_n = check_dimension(n)?;
    require_positive(g)?;
    let weighted = |a: &[f64], b: &[f64], w: &[f64]| -> Result<f64> {
        let gam = triple.gamma(a, b)?;
        Ok((0..triple.len())
            .map(|x| triple.measure()[x] * gam[x] / w[x])
            .sum())
    };
    let (ft, gt) = (evolve(triple, f, t)?, evolve(triple, g, t)?);
    let lhs = weighted(&ft, &ft, &gt)?;
    let scale = (-2.0 * r * t).exp() * weighted(f, f, g)?;
    let correction = integrate_in_time(t, options.time_nodes, |u| {
        let (fu, gu) = (evolve(triple, f, u)?, evolve(triple, g, u)?);
        let c = weighted(&fu, &gu, &gu)?;
        Ok((-2.0 * r * (t - u)).exp() * c * c)
    })?;
    let rhs = scale - 2.0 * inv_n * correction;
    let report = VerificationReport::new(
        "integrated_gradient_bound",
        Side::new(lhs, Provenance::Quadrature),
        Side::new(rhs, Provenance::Quadrature),
        scale,
        options.chain_tolerance(scale),
    )
    .param("R", r)
    .param("n", n)
    .param("t", t)
    .detail("correction", 2.0 * inv_n * correction);
    Ok(labeled(report, options))
}

/// The weighted curvature-dimension inequality at the worst state.
pub fn verify_pointwise_gradient_bound(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    n: f64,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    let (lower, upper) = weighted_cd_sides(triple, f, g, r, n)?;
    let worst = (0..triple.len())
        .min_by(|&a, &b| (upper[a] - lower[a]).total_cmp(&(upper[b] - lower[b])))
        .unwrap_or(0);
    let scale = upper.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let report = VerificationReport::new(
        "pointwise_gradient_bound",
        Side::new(lower[worst], Provenance::ExactFormula),
        Side::new(upper[worst], Provenance::ExactFormula),
        scale,
        options.chain_tolerance(scale),
    )
    .param("R", r)
    .param("n", n)
    .param("worst_state", worst);
    Ok(labeled(report, options))
}

/// Nodes `P_{t s_k} ρ_k` of the proof's path from `f` to `P_t g`.
fn evi_path(triple: &MarkovTriple, geodesic: &DiscretePath, t: f64) -> Result<DiscretePath> {
    let times = geodesic.times().to_vec();
    let nodes = times
        .iter()
        .zip(geodesic.densities())
        .map(|(&s, rho)| evolve(triple, rho, s * t))
        .collect::<Result<Vec<_>>>()?;
    path_from_nodes(triple, times, nodes)
}

#[allow(clippy::too_many_arguments)]
fn evi_check(
    id: &str,
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    xi: &XiFunction,
    r: f64,
    t: f64,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    let start = minimize_action_xi(triple, f, g, xi, slices, &options.solver)?;
    let built = evi_path(triple, &start.path, t)?;
    let lhs = action_xi(triple, &built, xi)?;
    let gt = evolve(triple, g, t)?;
    let scale = relaxation(2.0 * r * t) * start.value;
    let drift = 2.0 * t * (triple.phi_entropy(f, xi)? - triple.phi_entropy(&gt, xi)?);
    let rhs = scale + drift;
    let ub = minimize_action_xi(triple, f, &gt, xi, slices, &options.solver)?.value;
    let report = VerificationReport::new(
        id,
        Side::new(lhs, Provenance::CertifiedPathAction),
        Side::new(rhs, Provenance::Quadrature),
        scale,
        options.chain_tolerance(scale),
    )
    .param("R", r)
    .param("t", t)
    .param("K", slices)
    .param("xi", xi.label())
    .detail("initial_action", start.value)
    .detail("entropy_term", drift)
    .detail("solver_upper_bound", ub)
    .detail("solver_margin", rhs - ub);
    Ok(labeled(report, options))
}

/// `T₂²(f, P_t g) ≤ ((1 − e^{−2Rt})/(2Rt))T₂²(f, g) + 2t(Ent f − Ent P_t g)`,
/// certified on the path `(P_{ts}ρ_s)` built from a near-geodesic.
pub fn verify_evi(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    t: f64,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    evi_check(
        "evi",
        triple,
        f,
        g,
        &XiFunction::Entropy,
        r,
        t,
        slices,
        options,
    )
}

/// The generalized EVI with cost weight `ξ` and `Φ`-entropy.
#[allow(clippy::too_many_arguments)]
pub fn verify_phi_evi(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    t: f64,
    xi: &XiFunction,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    xi.validate()?;
    evi_check("phi_evi", triple, f, g, xi, r, t, slices, options)
}

/// `T_ξ²(P_t f, P_t g) ≤ e^{−2Rt}T_ξ²(f, g)` on the pushed near-geodesic.
#[allow(clippy::too_many_arguments)]
pub fn verify_phi_contraction(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    t: f64,
    xi: &XiFunction,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    xi.validate()?;
    let run = push_geodesic(triple, f, g, xi, t, slices, options)?;
    let rhs = (-2.0 * r * t).exp() * run.start.value;
    let ub = evolved_upper_bound(triple, f, g, xi, t, slices, options)?;
    let report = VerificationReport::new(
        "phi_contraction",
        Side::new(run.pushed_action, Provenance::CertifiedPathAction),
        Side::new(rhs, Provenance::Quadrature),
        rhs,
        options.chain_tolerance(rhs),
    )
    .param("R", r)
    .param("t", t)
    .param("K", slices)
    .param("xi", xi.label())
    .detail("initial_action", run.start.value)
    .detail("solver_upper_bound", ub)
    .detail("solver_margin", rhs - ub);
    Ok(labeled(report, options))
}

/// `∫₀¹Σμ Γ(h_s, ρ_s)ξ(ρ_s) ds = Ent^Φ(g) − Ent^Φ(f)` along the solver path,
/// reported as the absolute defect. Needs the chain rule.
pub fn verify_phi_entropy_identity(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    xi: &XiFunction,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    let run = minimize_action_xi(triple, f, g, xi, slices, &options.solver)?;
    let increment = phi_entropy_increment(triple, &run.path, xi)?;
    let exact = triple.phi_entropy(g, xi)? - triple.phi_entropy(f, xi)?;
    let scale = exact.abs();
    let report = VerificationReport::new(
        "phi_entropy_identity",
        Side::new((increment - exact).abs(), Provenance::Quadrature),
        Side::new(0.0, Provenance::ExactFormula),
        scale,
        options.chain_tolerance(scale),
    )
    .param("K", slices)
    .param("xi", xi.label())
    .detail("path_integral", increment)
    .detail("entropy_difference", exact);
    Ok(labeled(report, options))
}

/// Contraction with the power-entropy correction
/// `4(2−p)/(p²(p−1))∫₀ᵗ e^{−2R(t−u)}(√∫(P_u f)^p − √∫(P_u g)^p)² du`.
#[allow(clippy::too_many_arguments)]
pub fn verify_power_contraction(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    p: f64,
    t: f64,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::BadExponent(p));
    }
    let xi = XiFunction::power(p)?;
    let run = push_geodesic(triple, f, g, &xi, t, slices, options)?;
    let root_moment = |v: &[f64]| -> f64 {
        triple
            .measure()
            .iter()
            .zip(v)
            .map(|(m, x)| m * x.powf(p))
            .sum::<f64>()
            .sqrt()
    };
    let coefficient = power_coefficient(p);
    let correction = integrate_in_time(t, options.time_nodes, |u| {
        let d = root_moment(&evolve(triple, f, u)?) - root_moment(&evolve(triple, g, u)?);
        Ok((-2.0 * r * (t - u)).exp() * d * d)
    })?;
    let scale = (-2.0 * r * t).exp() * run.start.value;
    let rhs = scale - coefficient * correction;
    let report = VerificationReport::new(
        "power_contraction",
        Side::new(run.pushed_action, Provenance::CertifiedPathAction),
        Side::new(rhs, Provenance::Quadrature),
        scale,
        options.chain_tolerance(scale),
    )
    .param("R", r)
    .param("p", p)
    .param("t", t)
    .param("K", slices)
    .detail("initial_action", run.start.value)
    .detail("coefficient", coefficient)
    .detail("correction", coefficient * correction);
    Ok(labeled(report, options))
}

/// `4(2−p)/(p²(p−1))`.
pub fn power_coefficient(p: f64) -> f64 {
    4.0 * (2.0 - p) / (p * p * (p - 1.0))
}

/// Finite-difference dimensional EVI along solver bounds. Diagnostic only:
/// the inequality presumes geodesics exist.
#[allow(clippy::too_many_arguments)]
pub fn verify_dimensional_evi(
    triple: &MarkovTriple,
    f: &[f64],
    g: &[f64],
    r: f64,
    n: f64,
    slices: usize,
    dt: f64,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    let inv_n = check_dimension(n)?;
    if !(dt > 0.0) {
        return Err(Error::BadParameters(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let start = minimize_action(triple, f, g, slices, &options.solver)?;
    let deviation = start.diagnostics.phi_deviation;
    if start.value > 0.0 && !(deviation < GEODESIC_DEVIATION) {
        return Err(Error::GeodesicQuality(deviation));
    }
    let after = minimize_action(triple, f, &evolve(triple, g, dt)?, slices, &options.solver)?.value;
    let lhs = (after - start.value) / (2.0 * dt);
    let entropies: Vec<f64> = start
        .path
        .densities()
        .iter()
        .map(|rho| triple.entropy(rho))
        .collect();
    let average = super::trapezoid(start.path.times(), &entropies);
    let (ent_f, ent_g) = (triple.entropy(f), triple.entropy(g));
    let defect = ent_g - average;
    let rhs = -0.5 * r * start.value - 2.0 * inv_n * defect * defect + ent_f - ent_g;
    let scale = (ent_f - ent_g).abs().max(start.value);
    let report = VerificationReport::new(
        "dimensional_evi",
        Side::new(lhs, Provenance::SolverUpperBound),
        Side::new(rhs, Provenance::Quadrature),
        scale,
        options.tolerance.unwrap_or(10.0 * dt * scale.max(1.0)),
    )
    .param("R", r)
    .param("n", n)
    .param("K", slices)
    .param("dt", dt)
    .detail("geodesic_entropy_average", average)
    .detail("phi_deviation", deviation)
    .as_diagnostic("diagnostic: geodesic existence assumed");
    Ok(labeled(report, options))
}

/// The same diagnostic on the two-point space from closed forms: distances
/// from the arcsine formula and entropies along the exact geodesic.
pub fn verify_dimensional_evi_two_point(
    kappa: f64,
    from: f64,
    to: f64,
    r: f64,
    n: f64,
    dt: f64,
) -> Result<VerificationReport> {
    let inv_n = check_dimension(n)?;
    if !(dt > 0.0) {
        return Err(Error::BadParameters(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let triple = two_point(kappa)?;
    let before = t2_two_point_exact(kappa, from, to)?;
    let moved = 0.5 + (to - 0.5) * (-2.0 * kappa * dt).exp();
    let after = t2_two_point_exact(kappa, from, moved)?;
    let lhs = (after - before) / (2.0 * dt);
    let intervals = 32;
    let mut average = 0.0;
    for j in 0..=intervals {
        let s = j as f64 / intervals as f64;
        let w = if j == 0 || j == intervals {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        average += w / (3.0 * intervals as f64) * triple.entropy(&two_point_geodesic(from, to, s));
    }
    let (ent_f, ent_g) = (
        triple.entropy(&two_point_density(from)),
        triple.entropy(&two_point_density(to)),
    );
    let defect = ent_g - average;
    let rhs = -0.5 * r * before - 2.0 * inv_n * defect * defect + ent_f - ent_g;
    let scale = (ent_f - ent_g).abs().max(before);
    Ok(VerificationReport::new(
        "dimensional_evi",
        Side::new(lhs, Provenance::ExactFormula),
        Side::new(rhs, Provenance::Quadrature),
        scale,
        10.0 * dt * scale.max(1.0),
    )
    .param("kappa", kappa)
    .param("from", from)
    .param("to", to)
    .param("R", r)
    .param("n", n)
    .param("dt", dt)
    .detail("geodesic_entropy_average", average)
    .as_diagnostic("diagnostic: geodesic existence assumed")
    .note(EMPIRICAL_NOTE))
}

/// Splits a density on a product space into its two marginals, failing when
/// it is not their tensor product.
pub fn factor_product_density(
    first: &MarkovTriple,
    second: &MarkovTriple,
    f: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (m1, m2) = (first.len(), second.len());
    if f.len() != m1 * m2 {
        return Err(Error::ShapeMismatch {
            expected: m1 * m2,
            got: f.len(),
        });
    }
    let a = marginal_first(f, second.measure());
    let b = marginal_second(f, first.measure());
    let scale = f.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let joined = tensor(&a, &b);
    let worst = joined
        .iter()
        .zip(f)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if worst > PRODUCT_TOL * scale {
        return Err(Error::NotProductForm(format!(
            "deviation {worst:e} from the product of marginals"
        )));
    }
    Ok((a, b))
}

/// Projection of a product path onto one factor: densities and potentials
/// averaged over the other coordinate.
fn marginal_path(
    triple: &MarkovTriple,
    path: &DiscretePath,
    project: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<DiscretePath> {
    DiscretePath::new(
        triple,
        path.times().to_vec(),
        path.densities().iter().map(|v| project(v)).collect(),
        path.potentials().iter().map(|v| project(v)).collect(),
    )
}

/// Superadditivity of the transport cost on products, certified on the
/// marginals of the product solver path.
#[allow(clippy::too_many_arguments)]
pub fn verify_tensorization(
    first: &MarkovTriple,
    second: &MarkovTriple,
    f1: &[f64],
    g1: &[f64],
    f2: &[f64],
    g2: &[f64],
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    verify_tensorization_xi(
        first,
        second,
        f1,
        g1,
        f2,
        g2,
        &XiFunction::Entropy,
        slices,
        options,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn verify_tensorization_xi(
    first: &MarkovTriple,
    second: &MarkovTriple,
    f1: &[f64],
    g1: &[f64],
    f2: &[f64],
    g2: &[f64],
    xi: &XiFunction,
    slices: usize,
    options: &HarnessOptions,
) -> Result<VerificationReport> {
    xi.validate()?;
    let joint = product(first, second)?;
    let (f, g) = (tensor(f1, f2), tensor(g1, g2));
    let run = minimize_action_xi(&joint, &f, &g, xi, slices, &options.solver)?;
    let (mu1, mu2) = (first.measure().to_vec(), second.measure().to_vec());
    let p1 = marginal_path(first, &run.path, |v| marginal_first(v, &mu2))?;
    let p2 = marginal_path(second, &run.path, |v| marginal_second(v, &mu1))?;
    let (a1, a2) = (action_xi(first, &p1, xi)?, action_xi(second, &p2, xi)?);
    let u1 = minimize_action_xi(first, f1, g1, xi, slices, &options.solver)?.value;
    let u2 = minimize_action_xi(second, f2, g2, xi, slices, &options.solver)?.value;
    Ok(VerificationReport::new(
        "tensorization",
        Side::new(a1 + a2, Provenance::CertifiedPathAction),
        Side::new(run.value, Provenance::CertifiedPathAction),
        run.value,
        options.tolerance.unwrap_or(1e-9 * run.value.max(1.0)),
    )
    .param("K", slices)
    .param("xi", xi.label())
    .detail("first_marginal_action", a1)
    .detail("second_marginal_action", a2)
    .detail("first_upper_bound", u1)
    .detail("second_upper_bound", u2))
}
