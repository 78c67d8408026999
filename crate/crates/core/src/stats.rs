//! Binomial estimates with Wilson intervals and log-log power-law fits.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes out of `n` trials.
pub fn wilson(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // Exact at the extremes; clamp rounding elsewhere.
    let lo = if hits == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let hi = if hits == n { 1.0 } else { (centre + half).clamp(p, 1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub hits: u64,
    pub samples: u64,
    pub seed: u64,
    pub spec: String,
}

impl Estimate {
    pub fn from_counts(hits: u64, samples: u64, seed: u64, spec: impl Into<String>) -> Estimate {
        let value = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
        let (ci_lo, ci_hi) = wilson(hits, samples, Z95);
        Estimate { value, ci_lo, ci_hi, hits, samples, seed, spec: spec.into() }
    }

    /// Binomial standard error `sqrt(p(1-p)/n)`.
    pub fn stderr(&self) -> f64 {
        if self.samples == 0 {
            return f64::INFINITY;
        }
        (self.value * (1.0 - self.value) / self.samples as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub scale: f64,
    pub value: f64,
    pub stderr: f64,
}

impl From<(f64, &Estimate)> for FitPoint {
    fn from((scale, e): (f64, &Estimate)) -> FitPoint {
        FitPoint { scale, value: e.value, stderr: e.stderr() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Fitted log-log slope.
    pub slope: f64,
    /// `-slope`, the decay exponent.
    pub exponent: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points_used: usize,
    pub warnings: Vec<String>,
}

/// Weighted least squares of `ln value` against `ln scale` with weights
/// `(value / stderr)^2` (delta method). Points with nonpositive value are
/// dropped with a warning. The slope error is inflated by the square root of
/// the reduced chi-square when that exceeds one.
pub fn fit_power_law(points: &[FitPoint]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return param("a power-law fit needs at least 3 points");
    }
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for p in points {
        if !(p.scale > 0.0) {
            return param(format!("scale {} is not positive", p.scale));
        }
        if !(p.value > 0.0) {
            warnings.push(format!("excluded scale {}: nonpositive estimate {}", p.scale, p.value));
            continue;
        }
        // Relative error floor keeps exact inputs finite and equally weighted.
        let rel = (p.stderr / p.value).max(1e-9);
        rows.push((p.scale.ln(), p.value.ln(), 1.0 / (rel * rel)));
    }
    if rows.len() < 2 {
        return param("fewer than 2 positive estimates remain");
    }
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let mx = rows.iter().map(|r| r.2 * r.0).sum::<f64>() / sw;
    let my = rows.iter().map(|r| r.2 * r.1).sum::<f64>() / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return param("all scales coincide");
    }
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - mx) * (r.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut stderr = (1.0 / sxx).sqrt();
    if rows.len() > 2 {
        let chi2: f64 = rows.iter().map(|r| r.2 * (r.1 - intercept - slope * r.0).powi(2)).sum();
        let red = chi2 / (rows.len() - 2) as f64;
        if red > 1.0 {
            stderr *= red.sqrt();
        }
    } else {
        warnings.push("two points: stderr from weights only".into());
    }
    Ok(PowerLawFit {
        slope,
        exponent: -slope,
        intercept,
        stderr,
        points_used: rows.len(),
        warnings,
    })
}
