//! Statistical verification layer for the tunneling-time claims: summary
//! statistics, barrier-exponent regression, exponentiality and uniformity
//! tests, and the Wald identity between targeted and untargeted tunneling
//! means.
//!
//! Everything here is a pure function of its sample inputs; no randomness
//! is consumed. Pass thresholds live in the callers, except where a test
//! carries its own conventional level noted on the function.

use crate::dynamics::HittingSample;
use crate::{Error, Result};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Moments of a batch of hitting times.
///
/// Censored samples are counted and their truncated step counts do enter
/// the moments, so any consumer estimating means must first check
/// `censored_count == 0`; the refusal helpers below do exactly that.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HittingSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Normal-approximation 95% interval for the mean.
    pub ci95: (f64, f64),
    pub censored_count: usize,
}

impl HittingSummary {
    pub fn from_values(values: &[f64], censored_count: usize) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Input("cannot summarize an empty sample".into()));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let half = 1.959_963_984_540_054 * (variance / n as f64).sqrt();
        Ok(HittingSummary {
            n,
            mean,
            variance,
            ci95: (mean - half, mean + half),
            censored_count,
        })
    }

    pub fn from_samples(samples: &[HittingSample]) -> Result<Self> {
        let values: Vec<f64> = samples.iter().map(|s| s.steps as f64).collect();
        let censored = samples.iter().filter(|s| s.censored).count();
        Self::from_values(&values, censored)
    }

    fn require_uncensored(&self, what: &str) -> Result<()> {
        if self.censored_count > 0 {
            return Err(Error::Input(format!(
                "{what}: {} of {} samples were censored; raise max_steps",
                self.censored_count, self.n
            )));
        }
        Ok(())
    }
}

/// Outcome of one statistical check, serialized into reports.
#[derive(Clone, Debug, Serialize)]
pub struct TestVerdict {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
    pub note: String,
    pub seed_provenance: String,
}

impl TestVerdict {
    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.seed_provenance = provenance.into();
        self
    }
}

/// Least-squares fit of log(mean) against beta.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentFit {
    /// Estimated barrier: the regression slope.
    pub gamma_hat: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits log(mean_tau) = intercept + gamma * beta by ordinary least
/// squares. Needs at least 3 distinct beta values and strictly positive
/// means; rescaling every mean by a common factor moves only the
/// intercept.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let mut betas: Vec<f64> = points.iter().map(|p| p.0).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    if betas.len() < 3 {
        return Err(Error::Input(format!(
            "exponent fit needs at least 3 distinct beta values, got {}",
            betas.len()
        )));
    }
    for &(beta, mean) in points {
        if !beta.is_finite() || !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::Input(format!(
                "exponent fit needs finite beta and positive mean, got ({beta}, {mean})"
            )));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let df = points.len() as f64 - 2.0;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if df > 0.0 { (rss / df / sxx).sqrt() } else { 0.0 };
    Ok(ExponentFit { gamma_hat: slope, stderr, intercept, points: points.len() })
}

/// `fit_exponent` over per-temperature batch summaries; refuses when any
/// batch contains censored runs, since truncated means bias the slope.
pub fn fit_exponent_from_summaries(points: &[(f64, HittingSummary)]) -> Result<ExponentFit> {
    for (beta, summary) in points {
        summary.require_uncensored(&format!("exponent fit at beta {beta}"))?;
    }
    let raw: Vec<(f64, f64)> = points.iter().map(|(b, s)| (*b, s.mean)).collect();
    fit_exponent(&raw)
}

/// Kolmogorov-Smirnov statistic of `samples` against the given
/// distribution function: sup over the sample of |F_n - F|.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("KS statistic of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Survival function of the Kolmogorov distribution: the asymptotic
/// p-value of sqrt(n) * D. Theta-series form below t = 1, alternating
/// series above; both are exact expansions of the same function.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if !(t > 0.0) {
        return 1.0;
    }
    if t < 1.0 {
        // 1 - (sqrt(2 pi)/t) sum over odd j of exp(-j^2 pi^2 / (8 t^2))
        let mut sum = 0.0;
        let a = std::f64::consts::PI * std::f64::consts::PI / (8.0 * t * t);
        for j in (1..20).step_by(2) {
            sum += (-a * (j * j) as f64).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * sum).clamp(0.0, 1.0)
    } else {
        // 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..100 {
            let term = (-2.0 * (k * k) as f64 * t * t).exp();
            sum += sign * term;
            sign = -sign;
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample KS test of mean-rescaled hitting times against the
/// unit-mean exponential law. Callers rescale by the sample mean before
/// calling; at least 100 positive values are required.
pub fn test_exp1(samples: &[f64]) -> Result<TestVerdict> {
    if samples.len() < 100 {
        return Err(Error::Input(format!(
            "exponentiality test needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Input(format!("nonpositive rescaled sample {bad}")));
    }
    let d = ks_statistic(samples, |x| 1.0 - (-x).exp())?;
    let p = kolmogorov_sf((samples.len() as f64).sqrt() * d);
    Ok(TestVerdict {
        test: "exp1_ks".into(),
        statistic: d,
        p_value: p,
        pass: p > 0.01,
        note: format!("n = {}, KS distance {d:.4}", samples.len()),
        seed_provenance: String::new(),
    })
}

/// Two-sample KS p-value (asymptotic), used to compare simulation methods
/// that should share a law.
pub fn ks_two_sample_p(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.is_empty() || ys.is_empty() {
        return 1.0;
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let mut i = 0;
    let mut j = 0;
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n + m) as f64;
    kolmogorov_sf(ne.sqrt() * d)
}

/// Chi-square test of exit colors against the uniform law on the q-1
/// colors other than `c`. Vacuous for q = 2, where one exit color exists.
pub fn test_exit_uniform(exits: &[u8], c: u8, q: u8) -> Result<TestVerdict> {
    if q < 2 {
        return Err(Error::Input("need at least 2 colors".into()));
    }
    if q == 2 {
        return Ok(TestVerdict {
            test: "exit_uniform_chi2".into(),
            statistic: 0.0,
            p_value: 1.0,
            pass: true,
            note: "vacuous for q = 2: a single exit color exists".into(),
            seed_provenance: String::new(),
        });
    }
    if exits.is_empty() {
        return Err(Error::Input("no exit observations".into()));
    }
    let mut counts = vec![0u64; q as usize + 1];
    for &e in exits {
        if e < 1 || e > q {
            return Err(Error::SpinRange { spin: e, q });
        }
        if e == c {
            return Err(Error::Input(format!("exit color {e} equals the start color")));
        }
        counts[e as usize] += 1;
    }
    let expect = exits.len() as f64 / (q - 1) as f64;
    let chi2: f64 = (1..=q)
        .filter(|&k| k != c)
        .map(|k| {
            let diff = counts[k as usize] as f64 - expect;
            diff * diff / expect
        })
        .sum();
    let df = (q - 2) as f64;
    let p = if df == 0.0 {
        1.0
    } else {
        ChiSquared::new(df)
            .map_err(|e| Error::Numerical(e.to_string()))?
            .sf(chi2)
    };
    Ok(TestVerdict {
        test: "exit_uniform_chi2".into(),
        statistic: chi2,
        p_value: p,
        pass: p > 0.01,
        note: format!("{} exits over {} colors, chi2 = {chi2:.3}", exits.len(), q - 1),
        seed_provenance: String::new(),
    })
}

/// Two-sided z-test of the identity mean(tau to one target color) =
/// (q-1) * mean(tau to any other color), a consequence of the uniform
/// exit distribution and the geometric renewal count. Passes at the 5%
/// level, i.e. the ratio sits inside its 95% interval.
pub fn test_wald(
    to_any: &HittingSummary,
    to_one: &HittingSummary,
    q: u8,
) -> Result<TestVerdict> {
    if q < 2 {
        return Err(Error::Input("need at least 2 colors".into()));
    }
    to_any.require_uncensored("Wald identity, unrestricted target")?;
    to_one.require_uncensored("Wald identity, single target")?;
    if to_any.n < 2 || to_one.n < 2 {
        return Err(Error::Input("Wald identity needs at least 2 samples per arm".into()));
    }
    let factor = (q - 1) as f64;
    let diff = to_one.mean - factor * to_any.mean;
    let se = (to_one.variance / to_one.n as f64
        + factor * factor * to_any.variance / to_any.n as f64)
        .sqrt();
    if !(se > 0.0) {
        return Err(Error::Input("degenerate samples: zero pooled standard error".into()));
    }
    let z = diff / se;
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let p = 2.0 * normal.sf(z.abs());
    let ratio = to_one.mean / to_any.mean;
    Ok(TestVerdict {
        test: "wald_ratio_z".into(),
        statistic: z,
        p_value: p,
        pass: p > 0.05,
        note: format!("observed ratio {ratio:.3}, expected {factor} (q = {q})"),
        seed_provenance: String::new(),
    })
}

/// Checks the renewal count law: the number of legs until a tunneling run
/// first reaches its goal is geometric with success 1/(q-1), so the
/// fraction of one-leg runs must sit within 3 sigma of 1/(q-1).
pub fn test_renewal_geometric(legs: &[u32], q: u8) -> Result<TestVerdict> {
    if q < 3 {
        return Ok(TestVerdict {
            test: "renewal_geometric".into(),
            statistic: 0.0,
            p_value: 1.0,
            pass: true,
            note: "vacuous for q = 2: every run has exactly one leg".into(),
            seed_provenance: String::new(),
        });
    }
    if legs.is_empty() {
        return Err(Error::Input("no renewal observations".into()));
    }
    if let Some(bad) = legs.iter().find(|l| **l == 0) {
        return Err(Error::Input(format!("invalid leg count {bad}")));
    }
    let n = legs.len() as f64;
    let p0 = 1.0 / (q - 1) as f64;
    let observed = legs.iter().filter(|l| **l == 1).count() as f64 / n;
    let sigma = (p0 * (1.0 - p0) / n).sqrt();
    let z = (observed - p0) / sigma;
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let p = 2.0 * normal.sf(z.abs());
    Ok(TestVerdict {
        test: "renewal_geometric".into(),
        statistic: z,
        p_value: p,
        pass: z.abs() <= 3.0,
        note: format!("P(legs = 1) observed {observed:.4}, expected {p0:.4}"),
        seed_provenance: String::new(),
    })
}
