//! Dispatch from a scenario's `inequality_id` to the matching check.

use markov_transport::harness::*;
use markov_transport::line::LineGrid;
use markov_transport::{Error, MarkovTriple, ModelSpec, Result, XiFunction};

use crate::config::{DensitySpec, ModelChoice, Scenario};

/// Check names accepted in `inequality_id`.
pub const KNOWN_IDS: &[&str] = &[
    "de_bruijn",
    "kuwada",
    "kuwada_derivative",
    "talagrand",
    "dimensional_contraction",
    "integrated_gradient_bound",
    "pointwise_gradient_bound",
    "evi",
    "phi_evi",
    "phi_contraction",
    "phi_entropy_identity",
    "power_contraction",
    "dimensional_evi",
    "tensorization",
    "heat_contraction",
    "heat_field_contraction",
    "heat_different_times",
    "evi_heat_dimensional",
];

fn json<T: serde::Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

fn need<T: Copy>(value: Option<T>, name: &str, id: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("scenario '{id}' needs parameter '{name}'")))
}

fn density(spec: &Option<DensitySpec>, name: &str, id: &str) -> Result<DensitySpec> {
    spec.clone()
        .ok_or_else(|| Error::Config(format!("scenario '{id}' needs density '{name}'")))
}

/// Runs one scenario; `seed` is used when the scenario names none.
pub fn run(sc: &Scenario, base: &HarnessOptions, seed: u64) -> Result<Vec<VerificationReport>> {
    let id = sc.inequality_id.as_str();
    if !KNOWN_IDS.contains(&id) {
        return Err(Error::Config(format!("unknown inequality_id '{id}'")));
    }
    let seed = sc.seed.unwrap_or(seed);
    let reports = match &sc.model {
        ModelChoice::Line(line) => run_line(sc, &line.grid()?, base)?,
        ModelChoice::Chain(spec) => run_chain(sc, spec, base, seed)?,
    };
    Ok(reports
        .into_iter()
        .map(|mut r| {
            r = r.param("model", json(&sc.model)).param("seed", seed);
            for (key, spec) in [("f", &sc.f), ("g", &sc.g), ("field", &sc.field)] {
                if let Some(spec) = spec {
                    r = r.param(key, json(spec));
                }
            }
            match &sc.diagnostic {
                Some(reason) => r.as_diagnostic(reason),
                None => r,
            }
        })
        .collect())
}

fn run_line(
    sc: &Scenario,
    grid: &LineGrid,
    opts: &HarnessOptions,
) -> Result<Vec<VerificationReport>> {
    let id = sc.inequality_id.as_str();
    let p = &sc.params;
    let g = density(&sc.g, "g", id)?.on_line(grid)?;
    let report = match id {
        "heat_contraction" => {
            let f = density(&sc.f, "f", id)?.on_line(grid)?;
            verify_heat_contraction(grid, &f, &g, need(p.t, "t", id)?, opts)?
        }
        "heat_field_contraction" => {
            let field = match &sc.field {
                Some(DensitySpec::Named(n)) if n == "score" => grid.derivative(&g),
                Some(DensitySpec::Values(v)) => v.clone(),
                Some(DensitySpec::Gaussian { mean, sigma }) => grid.gaussian(*mean, *sigma),
                _ => {
                    return Err(Error::Config(
                        "field must be \"score\", values or a Gaussian".into(),
                    ))
                }
            };
            verify_heat_field_contraction(grid, &field, &g, need(p.t, "t", id)?, opts)?
        }
        "heat_different_times" => {
            let f = density(&sc.f, "f", id)?.on_line(grid)?;
            verify_heat_different_times(
                grid,
                &f,
                &g,
                need(p.s, "s", id)?,
                need(p.t, "t", id)?,
                opts,
            )?
        }
        "evi_heat_dimensional" => {
            let f = density(&sc.f, "f", id)?.on_line(grid)?;
            verify_evi_heat_dimensional(grid, &f, &g, p.dt.unwrap_or(1e-3), opts)?
        }
        other => {
            return Err(Error::Config(format!(
                "'{other}' needs a finite model, not a line grid"
            )))
        }
    };
    Ok(vec![report])
}

fn run_chain(
    sc: &Scenario,
    spec: &ModelSpec,
    base: &HarnessOptions,
    seed: u64,
) -> Result<Vec<VerificationReport>> {
    let id = sc.inequality_id.as_str();
    let p = &sc.params;
    let mut opts = base.clone();
    if opts.mesh.is_none() {
        opts.mesh = spec.mesh();
    }
    let triple = spec.build()?;
    let slices = p.slices.unwrap_or(32);
    let r = p.curvature.unwrap_or(0.0);
    let n = p.n.map_or(f64::INFINITY, |d| d.0);
    let xi = p.xi.unwrap_or(XiFunction::Entropy);

    if id == "dimensional_evi" {
        if let (Some(from), Some(to)) = (p.from, p.to) {
            let kappa = match spec {
                ModelSpec::TwoPoint { kappa } => *kappa,
                _ => return Err(Error::Config("'from'/'to' need a two_point model".into())),
            };
            return Ok(vec![verify_dimensional_evi_two_point(
                kappa,
                from,
                to,
                r,
                n,
                p.dt.unwrap_or(1e-4),
            )?]);
        }
    }
    if id == "tensorization" {
        return tensorization(sc, spec, &opts, seed, slices, &xi);
    }

    // `f` and `g` draw from different streams so "random" gives distinct densities
    let f = density(&sc.f, "f", id)?.on_chain(&triple, seed)?;
    let g = || -> Result<Vec<f64>> { density(&sc.g, "g", id)?.on_chain(&triple, seed ^ 0x5eed) };
    let t = || need(p.t, "t", id);
    let one = |r: VerificationReport| Ok(vec![r]);
    match id {
        "de_bruijn" => one(verify_de_bruijn(&triple, &f, t()?, &opts)?),
        "kuwada" => one(verify_kuwada_bound(&triple, &f, t()?, slices, &opts)?),
        "kuwada_derivative" => one(verify_kuwada_derivative(&triple, &f, t()?, slices, &opts)?),
        "talagrand" => {
            let times = p
                .times
                .clone()
                .ok_or_else(|| Error::Config("talagrand needs 'times'".into()))?;
            verify_talagrand(
                &triple,
                &f,
                need(p.constant, "C", id)?,
                &times,
                slices,
                &opts,
            )
        }
        "dimensional_contraction" => one(verify_dimensional_contraction(
            &triple,
            &f,
            &g()?,
            r,
            n,
            t()?,
            slices,
            &opts,
        )?),
        "integrated_gradient_bound" => one(verify_integrated_gradient_bound(
            &triple,
            &f,
            &g()?,
            r,
            n,
            t()?,
            &opts,
        )?),
        "pointwise_gradient_bound" => one(verify_pointwise_gradient_bound(
            &triple,
            &f,
            &g()?,
            r,
            n,
            &opts,
        )?),
        "evi" => one(verify_evi(&triple, &f, &g()?, r, t()?, slices, &opts)?),
        "phi_evi" => one(verify_phi_evi(
            &triple,
            &f,
            &g()?,
            r,
            t()?,
            &xi,
            slices,
            &opts,
        )?),
        "phi_contraction" => one(verify_phi_contraction(
            &triple,
            &f,
            &g()?,
            r,
            t()?,
            &xi,
            slices,
            &opts,
        )?),
        "phi_entropy_identity" => one(verify_phi_entropy_identity(
            &triple,
            &f,
            &g()?,
            &xi,
            slices,
            &opts,
        )?),
        "power_contraction" => one(verify_power_contraction(
            &triple,
            &f,
            &g()?,
            r,
            need(p.p, "p", id)?,
            t()?,
            slices,
            &opts,
        )?),
        "dimensional_evi" => one(verify_dimensional_evi(
            &triple,
            &f,
            &g()?,
            r,
            n,
            slices,
            p.dt.unwrap_or(1e-3),
            &opts,
        )?),
        other => Err(Error::Config(format!("'{other}' needs a line model"))),
    }
}

fn tensorization(
    sc: &Scenario,
    spec: &ModelSpec,
    opts: &HarnessOptions,
    seed: u64,
    slices: usize,
    xi: &XiFunction,
) -> Result<Vec<VerificationReport>> {
    let ModelSpec::Product { factors } = spec else {
        return Err(Error::Config("tensorization needs a product model".into()));
    };
    let first: MarkovTriple = factors[0].build()?;
    let second: MarkovTriple = factors[1].build()?;
    let joint = spec.build()?;
    let f = density(&sc.f, "f", "tensorization")?.on_chain(&joint, seed)?;
    let g = density(&sc.g, "g", "tensorization")?.on_chain(&joint, seed ^ 0x5eed)?;
    let (f1, f2) = factor_product_density(&first, &second, &f)?;
    let (g1, g2) = factor_product_density(&first, &second, &g)?;
    Ok(vec![verify_tensorization_xi(
        &first, &second, &f1, &g1, &f2, &g2, xi, slices, opts,
    )?])
}
