//! Small statistics toolbox: Monte Carlo estimates, log-log regression and a
//! Poisson goodness-of-fit check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct McEstimate<T> {
    pub mean: T,
    pub stderr: T,
    pub count: usize,
    pub seed: u64,
}

impl<T: Real> McEstimate<T> {
    pub fn from_samples(samples: &[T], seed: u64) -> Self {
        let n = samples.len();
        assert!(n > 1, "estimate needs at least two samples");
        let nf = T::of(n as f64);
        let mean = samples.iter().copied().sum::<T>() / nf;
        let var = samples
            .iter()
            .map(|&x| (x - mean) * (x - mean))
            .sum::<T>()
            / (nf - T::one());
        McEstimate {
            mean,
            stderr: (var / nf).sqrt(),
            count: n,
            seed,
        }
    }
}

/// Ordinary least squares in log-log coordinates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LogLogFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

/// Fit `log y = slope * log x + intercept`; requires positive data.
pub fn loglog_fit<T: Real>(xs: &[T], ys: &[T]) -> Result<LogLogFit<T>> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "log-log fit needs matching samples, at least two".into(),
        ));
    }
    if xs.iter().chain(ys.iter()).any(|&v| v <= T::zero()) {
        return Err(Error::Domain("log-log fit needs positive data".into()));
    }
    let lx: Vec<T> = xs.iter().map(|&x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|&y| y.ln()).collect();
    let n = T::of(lx.len() as f64);
    let sx = lx.iter().copied().sum::<T>();
    let sy = ly.iter().copied().sum::<T>();
    let sxx = lx.iter().map(|&x| x * x).sum::<T>();
    let sxy = lx.iter().zip(&ly).map(|(&x, &y)| x * y).sum::<T>();
    let denom = n * sxx - sx * sx;
    if denom.abs() < T::of(1e-14) {
        return Err(Error::Numerical("degenerate abscissae in fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot = ly.iter().map(|&y| (y - mean_y) * (y - mean_y)).sum::<T>();
    let ss_res = lx
        .iter()
        .zip(&ly)
        .map(|(&x, &y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<T>();
    let r_squared = if ss_tot < T::of(1e-300) {
        T::one()
    } else {
        T::one() - ss_res / ss_tot
    };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Chi-squared goodness-of-fit verdict for Poisson counts.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Chi2Report {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub pass: bool,
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Upper critical value of chi-squared via the Wilson-Hilferty cube
/// approximation; `z` is the standard normal quantile of the level.
fn chi2_critical(dof: usize, z: f64) -> f64 {
    let d = dof as f64;
    let t = 1.0 - 2.0 / (9.0 * d) + z * (2.0 / (9.0 * d)).sqrt();
    d * t * t * t
}

/// Test observed event counts against Poisson(rate * span) at the 1% level.
/// Tail bins with expected count below 5 are merged.
pub fn poisson_chi_square(counts: &[usize], mean: f64) -> Chi2Report {
    let n = counts.len() as f64;
    let max_count = counts.iter().copied().max().unwrap_or(0);
    // per-bin expected counts
    let mut expected: Vec<f64> = (0..=max_count)
        .map(|k| n * (-mean + k as f64 * mean.ln() - ln_factorial(k)).exp())
        .collect();
    // everything above max_count folds into the last bin
    let covered: f64 = expected.iter().sum();
    if let Some(last) = expected.last_mut() {
        *last += (n - covered).max(0.0);
    }
    let mut observed = vec![0f64; max_count + 1];
    for &c in counts {
        observed[c] += 1.0;
    }
    // merge sparse bins from the right, then from the left
    let mut bins: Vec<(f64, f64)> = expected.into_iter().zip(observed).collect();
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (e, o) in bins.drain(..) {
        match merged.last_mut() {
            Some(last) if last.0 < 5.0 => {
                last.0 += e;
                last.1 += o;
            }
            _ => merged.push((e, o)),
        }
    }
    if merged.len() > 1 {
        if let Some(&(e, o)) = merged.last() {
            if e < 5.0 {
                merged.pop();
                let last = merged.last_mut().unwrap();
                last.0 += e;
                last.1 += o;
            }
        }
    }
    let statistic: f64 = merged
        .iter()
        .map(|&(e, o)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let dof = merged.len().saturating_sub(1).max(1);
    let critical = chi2_critical(dof, 2.3263478740408408); // 99th percentile
    Chi2Report {
        statistic,
        dof,
        critical,
        pass: statistic <= critical,
    }
}
