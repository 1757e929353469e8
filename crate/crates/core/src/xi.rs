//! Weight functions ξ for the generalized transport cost `Γ(h) ξ(ρ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive weight `ξ` on `(0, ∞)` with `1/ξ` concave, together with the
/// convex `Φ` satisfying `Φ'' = ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiFunction {
    /// `ξ(x) = 1/x`, `Φ(x) = x log x`: the plain transport cost.
    Entropy,
    /// `ξ_p(x) = x^{p−2}`, `Φ_p(x) = x^p / (p(p−1))`.
    Power { p: f64 },
}

impl XiFunction {
    pub fn entropy() -> Self {
        XiFunction::Entropy
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::XiDomainError(format!(
                "power exponent p = {p} must exceed 1"
            )));
        }
        let xi = XiFunction::Power { p };
        xi.validate()?;
        Ok(xi)
    }

    /// `ξ(x)`.
    pub fn xi(&self, x: f64) -> f64 {
        match *self {
            XiFunction::Entropy => 1.0 / x,
            XiFunction::Power { p } => x.powf(p - 2.0),
        }
    }

    pub fn xi_prime(&self, x: f64) -> f64 {
        match *self {
            XiFunction::Entropy => -1.0 / (x * x),
            XiFunction::Power { p } => (p - 2.0) * x.powf(p - 3.0),
        }
    }

    pub fn xi_second(&self, x: f64) -> f64 {
        match *self {
            XiFunction::Entropy => 2.0 / (x * x * x),
            XiFunction::Power { p } => (p - 2.0) * (p - 3.0) * x.powf(p - 4.0),
        }
    }

    /// `Φ(x)`, extended by continuity at 0.
    pub fn phi(&self, x: f64) -> f64 {
        match *self {
            XiFunction::Entropy => {
                if x > 0.0 {
                    x * x.ln()
                } else {
                    0.0
                }
            }
            XiFunction::Power { p } => x.powf(p) / (p * (p - 1.0)),
        }
    }

    /// `Φ'(x)`.
    pub fn phi_prime(&self, x: f64) -> f64 {
        match *self {
            XiFunction::Entropy => x.ln() + 1.0,
            XiFunction::Power { p } => x.powf(p - 1.0) / (p - 1.0),
        }
    }

    /// `(1/ξ)''` from `(2ξ'² − ξξ'')/ξ³`.
    pub fn inverse_second_derivative(&self, x: f64) -> f64 {
        let (a, b, c) = (self.xi(x), self.xi_prime(x), self.xi_second(x));
        (2.0 * b * b - a * c) / (a * a * a)
    }

    /// Checks `ξ > 0` and `(1/ξ)'' ≤ 1e-9` on 200 log-spaced points of `[1e-4, 1e4]`.
    pub fn validate(&self) -> Result<()> {
        let n = 200;
        for i in 0..n {
            let x = 10f64.powf(-4.0 + 8.0 * i as f64 / (n - 1) as f64);
            let v = self.xi(x);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::XiDomainError(format!("xi({x}) = {v}")));
            }
            let d2 = self.inverse_second_derivative(x);
            if !(d2 <= 1e-9) {
                return Err(Error::XiDomainError(format!(
                    "1/xi is not concave: (1/xi)''({x}) = {d2:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match *self {
            XiFunction::Entropy => "1/x".to_string(),
            XiFunction::Power { p } => format!("x^{}", p - 2.0),
        }
    }
}
