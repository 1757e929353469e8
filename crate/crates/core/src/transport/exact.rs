//! Closed-form and one-dimensional reference values.

use crate::error::{Error, Result};
use crate::line::{LineGrid, LINE_MASS_TOL};

/// Minimum number of uniform `u` points merged into the quantile breakpoints.
pub const QUANTILE_POINTS: usize = 4096;

/// `T₂²` on the two-point space between `(2(1−r), 2r)` and `(2(1−t), 2t)`:
/// `2(arcsin√t − arcsin√r)²/κ`.
pub fn t2_two_point_exact(kappa: f64, r: f64, t: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::DomainError(format!(
            "kappa = {kappa} must be positive"
        )));
    }
    for v in [r, t] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::DomainError(format!(
                "two-point parameter {v} must lie in (0, 1)"
            )));
        }
    }
    let d = t.sqrt().asin() - r.sqrt().asin();
    Ok(2.0 * d * d / kappa)
}

/// Density on the two-point space with parameter `r`: `(2(1−r), 2r)`.
pub fn two_point_density(r: f64) -> [f64; 2] {
    [2.0 * (1.0 - r), 2.0 * r]
}

/// Point `s` of the two-point geodesic from parameter `r` to `t`.
pub fn two_point_geodesic(r: f64, t: f64, s: f64) -> [f64; 2] {
    let (a, b) = (r.sqrt().asin(), t.sqrt().asin());
    two_point_density(((1.0 - s) * a + s * b).sin().powi(2))
}

/// Piecewise-linear CDF of a density on the grid, normalized by its mass.
struct Cdf {
    x: Vec<f64>,
    c: Vec<f64>,
}

impl Cdf {
    fn new(grid: &LineGrid, f: &[f64]) -> Result<Self> {
        if f.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: f.len(),
            });
        }
        if let Some(v) = f.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::DomainError(format!("density value {v}")));
        }
        let mass = grid.integrate(f);
        if !((mass - 1.0).abs() <= LINE_MASS_TOL) {
            return Err(Error::NotNormalized(mass));
        }
        let h = grid.spacing();
        let mut c = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        c.push(0.0);
        for i in 1..f.len() {
            acc += 0.5 * h * (f[i - 1] + f[i]);
            c.push(acc);
        }
        let total = acc;
        c.iter_mut().for_each(|v| *v /= total);
        let last = c.len() - 1;
        c[last] = 1.0;
        Ok(Cdf { x: grid.nodes(), c })
    }

    /// Segment `i` (between nodes `i`, `i+1`) containing `u`, skipping flat ones.
    fn segment(&self, u: f64, hint: usize) -> usize {
        let mut i = hint;
        let last = self.c.len() - 2;
        while i < last && (self.c[i + 1] < u || self.c[i + 1] <= self.c[i]) {
            i += 1;
        }
        i
    }

    fn quantile_on(&self, i: usize, u: f64) -> f64 {
        let (c0, c1) = (self.c[i], self.c[i + 1]);
        if c1 <= c0 {
            return self.x[i];
        }
        self.x[i] + (self.x[i + 1] - self.x[i]) * (u - c0) / (c1 - c0)
    }

    fn quantile(&self, u: f64) -> f64 {
        let i = self.segment(u, 0);
        self.quantile_on(i, u)
    }

    fn value(&self, x: f64) -> f64 {
        let h = self.x[1] - self.x[0];
        let pos = (x - self.x[0]) / h;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.x.len() {
            return 1.0;
        }
        let w = pos - i as f64;
        (1.0 - w) * self.c[i] + w * self.c[i + 1]
    }
}

/// `W₂` between two grid densities through their quantile functions.
pub fn w2_quantile_1d(grid: &LineGrid, f: &[f64], g: &[f64]) -> Result<f64> {
    let (cf, cg) = (Cdf::new(grid, f)?, Cdf::new(grid, g)?);
    let mut breaks: Vec<f64> =
        cf.c.iter()
            .chain(&cg.c)
            .copied()
            .chain((0..=QUANTILE_POINTS).map(|i| i as f64 / QUANTILE_POINTS as f64))
            .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if u1 <= u0 {
            continue;
        }
        let mid = 0.5 * (u0 + u1);
        i = cf.segment(mid, i);
        j = cg.segment(mid, j);
        let a = cf.quantile_on(i, u0) - cg.quantile_on(j, u0);
        let b = cf.quantile_on(i, u1) - cg.quantile_on(j, u1);
        total += (u1 - u0) * (a * a + a * b + b * b) / 3.0;
    }
    Ok(total.sqrt())
}

/// Displacement interpolation `((1−s)id + sT)_# f` with `T = G⁻¹∘F`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    /// The interpolated density resampled on the grid.
    pub density: Vec<f64>,
    /// `∫ f log(f / ((1−s) + sT')) dx`.
    pub entropy: f64,
}

/// Relative threshold below which `f` is treated as zero mass.
const NEGLIGIBLE: f64 = 1e-12;

pub fn displacement_interpolation_1d(
    grid: &LineGrid,
    f: &[f64],
    g: &[f64],
    s: f64,
) -> Result<Interpolant> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::DomainError(format!(
            "interpolation time {s} outside [0, 1]"
        )));
    }
    let (cf, cg) = (Cdf::new(grid, f)?, Cdf::new(grid, g)?);
    if s == 0.0 {
        return Ok(Interpolant {
            density: f.to_vec(),
            entropy: grid.entropy(f),
        });
    }
    let xs = grid.nodes();
    let h = grid.spacing();
    let fmax = f.iter().cloned().fold(0.0, f64::max);
    let gmax = g.iter().cloned().fold(0.0, f64::max);
    let g_at = |y: f64| -> f64 {
        let pos = ((y - xs[0]) / h).clamp(0.0, (xs.len() - 1) as f64);
        let i = (pos.floor() as usize).min(xs.len() - 2);
        let w = pos - i as f64;
        (1.0 - w) * g[i] + w * g[i + 1]
    };

    // Map, its slope and the pushed positions on the significant support.
    let mut pos = Vec::new();
    let mut val = Vec::new();
    let mut entropy = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let fi = f[i];
        if fi <= NEGLIGIBLE * fmax {
            continue;
        }
        let u = cf.value(x);
        let y = cg.quantile(u);
        let gy = g_at(y);
        if gy <= NEGLIGIBLE * gmax {
            continue;
        }
        let slope = fi / gy;
        let jac = (1.0 - s) + s * slope;
        if !(jac > 0.0 && jac.is_finite()) {
            return Err(Error::DegenerateMap { node: i, slope });
        }
        entropy += grid.weight(i) * fi * (fi / jac).ln();
        pos.push((1.0 - s) * x + s * y);
        val.push(fi / jac);
    }
    let density = resample(&xs, &pos, &val);
    Ok(Interpolant { density, entropy })
}

/// Linear interpolation of `(pos, val)` (increasing `pos`) onto `xs`, zero outside.
fn resample(xs: &[f64], pos: &[f64], val: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    if pos.len() < 2 {
        return out;
    }
    let mut j = 0;
    for (o, &x) in out.iter_mut().zip(xs) {
        if x < pos[0] || x > pos[pos.len() - 1] {
            continue;
        }
        while j + 2 < pos.len() && pos[j + 1] < x {
            j += 1;
        }
        let span = pos[j + 1] - pos[j];
        let w = if span > 0.0 { (x - pos[j]) / span } else { 0.0 };
        *o = (1.0 - w) * val[j] + w * val[j + 1];
    }
    out
}
