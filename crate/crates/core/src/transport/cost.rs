//! Exact time integral of the cost weight along one linear slice.
//!
//! On a slice where `ρ` moves linearly from `a` to `b` and `h` is frozen, the
//! action density is `Γ(h) ∫₀¹ ξ((1−θ)a + θb) dθ`. Writing `m = (a+b)/2` and
//! `δ = (b−a)/(a+b)` the integral is `ξ(m) H(δ)` with an even `H`, `H(0) = 1`.

use crate::xi::XiFunction;

const SERIES_CUTOFF: f64 = 1e-2;

/// `(W, ∂W/∂a, ∂W/∂b)` for `W(a, b) = ∫₀¹ ξ((1−θ)a + θb) dθ`, `a, b > 0`.
pub(crate) fn interval_weight(xi: &XiFunction, a: f64, b: f64) -> (f64, f64, f64) {
    let sum = a + b;
    let mid = 0.5 * sum;
    let delta = (b - a) / sum;
    let (h, dh) = shape(xi, delta);
    let base = xi.xi(mid);
    let dbase = xi.xi_prime(mid);
    let w = base * h;
    let dda = -2.0 * b / (sum * sum);
    let ddb = 2.0 * a / (sum * sum);
    let wa = 0.5 * dbase * h + base * dh * dda;
    let wb = 0.5 * dbase * h + base * dh * ddb;
    (w, wa, wb)
}

/// Value of the weight only.
pub(crate) fn interval_weight_value(xi: &XiFunction, a: f64, b: f64) -> f64 {
    let sum = a + b;
    xi.xi(0.5 * sum) * shape(xi, (b - a) / sum).0
}

/// `H(δ)` and `H'(δ)`.
fn shape(xi: &XiFunction, delta: f64) -> (f64, f64) {
    match *xi {
        XiFunction::Entropy => {
            // H = atanh(δ)/δ
            if delta.abs() < SERIES_CUTOFF {
                let d2 = delta * delta;
                let h = 1.0 + d2 * (1.0 / 3.0 + d2 * (1.0 / 5.0 + d2 * (1.0 / 7.0 + d2 / 9.0)));
                let dh = delta * (2.0 / 3.0 + d2 * (4.0 / 5.0 + d2 * (6.0 / 7.0 + d2 * 8.0 / 9.0)));
                (h, dh)
            } else {
                let h = delta.atanh() / delta;
                let dh = (1.0 / (1.0 - delta * delta) - h) / delta;
                (h, dh)
            }
        }
        XiFunction::Power { p } => {
            // H = ((1+δ)^r − (1−δ)^r) / (2rδ), r = p − 1
            let r = p - 1.0;
            if delta.abs() < SERIES_CUTOFF {
                let d2 = delta * delta;
                let mut h = 0.0;
                let mut dh = 0.0;
                let mut pow = 1.0;
                let mut odd = delta;
                for k in 0..5 {
                    let c = binomial(r, 2 * k + 1) / r;
                    h += c * pow;
                    if k > 0 {
                        dh += 2.0 * k as f64 * c * odd;
                        odd *= d2;
                    }
                    pow *= d2;
                }
                (h, dh)
            } else {
                let up = (1.0 + delta).powf(r);
                let down = (1.0 - delta).powf(r);
                let h = (up - down) / (2.0 * r * delta);
                let dh = (up / (1.0 + delta) + down / (1.0 - delta)) / (2.0 * delta) - h / delta;
                (h, dh)
            }
        }
    }
}

fn binomial(r: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (r - i as f64) / (i + 1) as f64)
}
