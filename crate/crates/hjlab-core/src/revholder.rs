//! Empirical weak reverse Holder inequality on sampled process paths.
//!
//! The hypothesis is checked verbatim on a dyadic time grid. The integrability
//! gain `theta` is estimated by binary search: a candidate passes when the
//! constant the conclusion display requires on the deep (small `t - a`) half
//! of the dyadic grid does not outgrow the one required on the coarse half -
//! the finite-sample reading of "holds with a finite constant uniformly down
//! to `t = a`". The reported constant is the fitted maximum over the whole
//! grid, so the returned pair `(theta, C)` always satisfies the display at
//! every grid time.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{pow_pos, Real};

/// Batch of nonnegative paths `|xi|` sampled as per-interval values on a
/// uniform grid over `(a, b)`; expectations are batch means.
#[derive(Clone, Debug)]
pub struct PathBatch<T> {
    a: T,
    b: T,
    paths: Vec<Vec<T>>,
}

impl<T: Real> PathBatch<T> {
    pub fn new(a: T, b: T, paths: Vec<Vec<T>>) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Domain("need a < b".into()));
        }
        let m = paths.first().map(|p| p.len()).unwrap_or(0);
        if m < 4 {
            return Err(Error::InvalidParameter(
                "paths need at least 4 intervals".into(),
            ));
        }
        if paths.iter().any(|p| p.len() != m) {
            return Err(Error::InvalidParameter("ragged path batch".into()));
        }
        if paths.iter().flatten().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidParameter(
                "paths must hold finite nonnegative |xi| values".into(),
            ));
        }
        Ok(Self { a, b, paths })
    }

    pub fn intervals(&self) -> usize {
        self.paths[0].len()
    }

    pub fn ds(&self) -> T {
        (self.b - self.a) / T::of(self.intervals() as f64)
    }
}

/// Knobs of the theta search.
#[derive(Clone, Copy, Debug)]
pub struct ReverseHolderConfig<T> {
    /// allowed growth of the fitted constant between the coarse and deep
    /// halves of the dyadic grid
    pub growth_cap: T,
    pub bisection_steps: usize,
}

impl<T: Real> Default for ReverseHolderConfig<T> {
    fn default() -> Self {
        Self {
            growth_cap: T::of(1.25),
            bisection_steps: 48,
        }
    }
}

/// Verdict of the reverse Holder check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReverseHolderReport<T> {
    pub a_const: T,
    pub b_const: T,
    /// min over the dyadic grid of (hypothesis RHS - LHS)
    pub hypothesis_margin: T,
    pub theta_est: Option<T>,
    pub c_est: Option<T>,
}

struct GridStats<T> {
    /// `t_j - a` per dyadic level, descending
    spans: Vec<T>,
    /// `E[(1/(t-a)) int |xi|^p]`
    mean_power: Vec<T>,
    /// `E[((1/(t-a)) int |xi|)^p]`
    mean_avg_pow: Vec<T>,
    /// `E[(int |xi|)^p]`
    mean_int_pow: Vec<T>,
    /// `E[int_a^b |xi|^p]`
    norm_pp: T,
}

fn grid_stats<T: Real>(batch: &PathBatch<T>, p: T) -> GridStats<T> {
    let m = batch.intervals();
    let ds = batch.ds();
    let n = T::of(batch.paths.len() as f64);
    // dyadic interval counts m, m/2, m/4, ..., >= 2
    let mut counts = Vec::new();
    let mut c = m;
    while c >= 2 {
        counts.push(c);
        c /= 2;
    }
    let mut spans = Vec::with_capacity(counts.len());
    let mut mean_power = vec![T::zero(); counts.len()];
    let mut mean_avg_pow = vec![T::zero(); counts.len()];
    let mut mean_int_pow = vec![T::zero(); counts.len()];
    let mut norm_pp = T::zero();
    for &c in &counts {
        spans.push(T::of(c as f64) * ds);
    }
    for path in &batch.paths {
        // prefix sums of |xi| and |xi|^p
        let mut acc = T::zero();
        let mut acc_p = T::zero();
        let mut pref = Vec::with_capacity(m + 1);
        let mut pref_p = Vec::with_capacity(m + 1);
        pref.push(acc);
        pref_p.push(acc_p);
        for &v in path {
            acc += v * ds;
            acc_p += pow_pos(v, p) * ds;
            pref.push(acc);
            pref_p.push(acc_p);
        }
        norm_pp += acc_p / n;
        for (j, &c) in counts.iter().enumerate() {
            let span = spans[j];
            mean_power[j] += (pref_p[c] / span) / n;
            mean_avg_pow[j] += pow_pos(pref[c] / span, p) / n;
            mean_int_pow[j] += pow_pos(pref[c], p) / n;
        }
    }
    GridStats {
        spans,
        mean_power,
        mean_avg_pow,
        mean_int_pow,
        norm_pp,
    }
}

/// Run the hypothesis check and the theta search.
pub fn reverse_holder<T: Real>(
    batch: &PathBatch<T>,
    a_const: T,
    b_const: T,
    p: T,
    config: &ReverseHolderConfig<T>,
) -> Result<ReverseHolderReport<T>> {
    if !(a_const > T::zero() && b_const >= T::zero()) {
        return Err(Error::InvalidParameter(
            "hypothesis constants must be positive".into(),
        ));
    }
    if !(p > T::one() && p < T::of(2.0)) {
        return Err(Error::Domain("p must lie in (1, 2)".into()));
    }
    let stats = grid_stats(batch, p);
    let mut hypothesis_margin = T::infinity();
    for j in 0..stats.spans.len() {
        let rhs = a_const * stats.mean_avg_pow[j]
            + b_const * pow_pos(stats.spans[j], -p / T::of(2.0));
        hypothesis_margin = hypothesis_margin.min(rhs - stats.mean_power[j]);
    }
    if hypothesis_margin < T::zero() {
        return Ok(ReverseHolderReport {
            a_const,
            b_const,
            hypothesis_margin,
            theta_est: None,
            c_est: None,
        });
    }
    // the braces factor is t-independent, so it cancels in the deep/coarse
    // comparison; the constant growth between halves decides theta
    let levels = stats.spans.len();
    let half = levels / 2;
    let requirement = |theta: T| -> (T, T) {
        let ex = p - p / theta;
        let mut coarse = T::zero();
        let mut deep = T::zero();
        for j in 0..levels {
            let v = stats.mean_int_pow[j] * pow_pos(stats.spans[j], -ex);
            if j < half {
                coarse = coarse.max(v);
            } else {
                deep = deep.max(v);
            }
        }
        (coarse, deep)
    };
    let passes = |theta: T| -> bool {
        let (coarse, deep) = requirement(theta);
        deep <= config.growth_cap * coarse
    };
    let eps = T::of(1e-6);
    let mut lo = p + eps;
    if !passes(lo) {
        return Ok(ReverseHolderReport {
            a_const,
            b_const,
            hypothesis_margin,
            theta_est: None,
            c_est: None,
        });
    }
    let mut hi = T::of(2.0);
    let theta = if passes(hi) {
        hi
    } else {
        for _ in 0..config.bisection_steps {
            let mid = (lo + hi) / T::of(2.0);
            if passes(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    // fitted constant over the whole grid at the selected theta
    let span_total = batch.ds() * T::of(batch.intervals() as f64);
    let ex = p - p / theta;
    let braces = pow_pos(span_total, p / theta - T::one()) * stats.norm_pp
        + b_const * pow_pos(span_total, p / theta - p / T::of(2.0));
    let mut c_est = T::zero();
    for j in 0..levels {
        c_est = c_est.max(stats.mean_int_pow[j] * pow_pos(stats.spans[j], -ex) / braces);
    }
    Ok(ReverseHolderReport {
        a_const,
        b_const,
        hypothesis_margin,
        theta_est: Some(theta),
        c_est: Some(c_est),
    })
}

/// Hypothesis constant the batch actually needs at the given `B`: the
/// smallest `A` making every dyadic margin nonnegative.
pub fn fitted_hypothesis_constant<T: Real>(batch: &PathBatch<T>, b_const: T, p: T) -> T {
    let stats = grid_stats(batch, p);
    let mut a_needed = T::zero();
    for j in 0..stats.spans.len() {
        let slack = stats.mean_power[j] - b_const * pow_pos(stats.spans[j], -p / T::of(2.0));
        if slack > T::zero() && stats.mean_avg_pow[j] > T::zero() {
            a_needed = a_needed.max(slack / stats.mean_avg_pow[j]);
        }
    }
    a_needed.max(T::one())
}
