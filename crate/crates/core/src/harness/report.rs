use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::transport::SolverOptions;

/// Mandatory note on checks whose proofs need the chain rule, run on a jump chain.
pub const EMPIRICAL_NOTE: &str = "empirical-only (no diffusion property)";

/// Where a side of an inequality came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Recomputed action of an explicit feasible path.
    CertifiedPathAction,
    /// Action of a solver path; an upper bound on the distance.
    SolverUpperBound,
    ExactFormula,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Side {
    pub value: f64,
    pub provenance: Provenance,
}

impl Side {
    pub fn new(value: f64, provenance: Provenance) -> Self {
        Side { value, provenance }
    }
}

/// One checked instance of `lhs ≤ rhs`.
///
/// `margin = rhs − lhs` and `pass = margin ≥ −tolerance` are always derived
/// from the stored sides, never set independently.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    inequality_id: String,
    parameters: BTreeMap<String, Value>,
    lhs: Side,
    rhs: Side,
    margin: f64,
    tolerance: f64,
    pass: bool,
    /// Size of the leading right-hand term, the unit for relative tolerances.
    scale: f64,
    /// Reported but never asserted.
    diagnostic: bool,
    details: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(id: &str, lhs: Side, rhs: Side, scale: f64, tolerance: f64) -> Self {
        let margin = rhs.value - lhs.value;
        VerificationReport {
            inequality_id: id.to_string(),
            parameters: BTreeMap::new(),
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin >= -tolerance,
            scale,
            diagnostic: false,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, text: &str) -> Self {
        self.notes.push(text.to_string());
        self
    }

    pub fn as_diagnostic(mut self, reason: &str) -> Self {
        self.diagnostic = true;
        self.note(reason)
    }

    pub fn inequality_id(&self) -> &str {
        &self.inequality_id
    }

    pub fn parameters(&self) -> &BTreeMap<String, Value> {
        &self.parameters
    }

    pub fn lhs(&self) -> Side {
        self.lhs
    }

    pub fn rhs(&self) -> Side {
        self.rhs
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn pass(&self) -> bool {
        self.pass
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_diagnostic(&self) -> bool {
        self.diagnostic
    }

    pub fn details(&self) -> &BTreeMap<String, f64> {
        &self.details
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Margin in units of `scale` (the margin itself when the scale vanishes).
    pub fn relative_margin(&self) -> f64 {
        if self.scale > 0.0 {
            self.margin / self.scale
        } else {
            self.margin
        }
    }
}

/// Settings shared by all checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessOptions {
    pub solver: SolverOptions,
    /// Uniform nodes of the time quadrature (a geometric cluster near 0 is added).
    pub time_nodes: usize,
    /// Absolute tolerance overriding every default.
    pub tolerance: Option<f64>,
    /// Grid spacing when the triple discretizes a diffusion; `None` marks a
    /// genuine jump chain.
    pub mesh: Option<f64>,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            solver: SolverOptions::default(),
            time_nodes: 64,
            tolerance: None,
            mesh: None,
        }
    }
}

/// Absolute slack of path-level checks on jump chains.
const CHAIN_TOL: f64 = 1e-6;

impl HarnessOptions {
    pub fn with_mesh(mesh: f64) -> Self {
        HarnessOptions {
            mesh: Some(mesh),
            ..Default::default()
        }
    }

    /// `max(0.05, 5h)·scale` on diffusion grids, `1e-6·max(1, scale)` otherwise.
    pub fn chain_tolerance(&self, scale: f64) -> f64 {
        if let Some(t) = self.tolerance {
            return t;
        }
        match self.mesh {
            Some(h) => (0.05f64).max(5.0 * h) * scale.abs(),
            None => CHAIN_TOL * scale.abs().max(1.0),
        }
    }

    /// `rel·scale` unless overridden.
    pub fn relative_tolerance(&self, rel: f64, scale: f64) -> f64 {
        self.tolerance.unwrap_or(rel * scale.abs())
    }

    pub(crate) fn is_jump_chain(&self) -> bool {
        self.mesh.is_none()
    }
}
