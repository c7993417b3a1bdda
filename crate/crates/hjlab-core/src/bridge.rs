//! Explicit supersolution of the upper extremal equation built from bridge
//! trajectories, with its cost scalings, the two-sided value sandwich and
//! the subsolution oscillation bounds it implies.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField};
use crate::params::StructureParams;
use crate::real::{pow_pos, Real};
use crate::rng::{exp_sample, stream_rng};
use crate::simulate::{validate_bridge_alpha, ControlValue};
use crate::solver::Solution;
use crate::stats::McEstimate;

/// Target point, singularity exponent and the restricted control family.
#[derive(Clone, Debug)]
pub struct BridgeParams<T> {
    pub target_x: T,
    pub target_t: T,
    pub alpha: T,
    pub family: Vec<ControlValue<T>>,
}

impl<T: Real> BridgeParams<T> {
    pub fn new(
        target_x: T,
        target_t: T,
        alpha: T,
        family: Vec<ControlValue<T>>,
        params: &StructureParams<T>,
    ) -> Result<Self> {
        validate_bridge_alpha(alpha, params)?;
        if family.is_empty() {
            return Err(Error::Config("control family is empty".into()));
        }
        Ok(Self {
            target_x,
            target_t,
            alpha,
            family,
        })
    }

    /// Midpoint of the admissible interval `(1 - 1/p, 1/2)`.
    pub fn default_alpha(params: &StructureParams<T>) -> T {
        ((T::one() - T::one() / params.p()) + T::of(0.5)) / T::of(2.0)
    }

    /// Symmetric family of unit-lambda controls at a few base lengths.
    pub fn default_family(n: usize) -> Vec<ControlValue<T>> {
        let mut fam = Vec::with_capacity(2 * n);
        for k in 0..n {
            let b = T::of(0.1) + T::of(0.9) * T::of(k as f64) / T::of(n.max(2) as f64 - 1.0);
            fam.push(ControlValue {
                lambda: T::one(),
                base: b,
            });
            fam.push(ControlValue {
                lambda: T::one(),
                base: -b,
            });
        }
        fam
    }
}

/// Geometric quadrature mesh refined toward the target time; the relative
/// cutoff bounds the neglected singular tail.
fn quad_taus<T: Real>(s: T, t: T, n: usize, cut_rel: T) -> Vec<T> {
    let ratio = pow_pos(cut_rel, T::one() / T::of((n - 1) as f64));
    (0..n).map(|i| t - (t - s) * pow_pos(ratio, T::of(i as f64))).collect()
}

/// Cost integral along one realization given its jump times on `[s, t)`:
/// trapezoid over the geometric mesh plus the analytic singular-tail bound.
#[allow(clippy::too_many_arguments)]
fn cost_from_jumps<T: Real>(
    y: T,
    s: T,
    t: T,
    alpha: T,
    ctrl: ControlValue<T>,
    rate: T,
    jump_times: &[T],
    taus: &[T],
    p: T,
) -> T {
    let one_m_a = T::one() - alpha;
    let det_scale = pow_pos(t - s, -alpha);
    let comp_rate = ctrl.jump() * rate;
    let mut integrand = Vec::with_capacity(taus.len());
    let mut jump_sum = T::zero();
    let mut idx = 0;
    for &tau in taus {
        while idx < jump_times.len() && jump_times[idx] <= tau {
            jump_sum += pow_pos(t - jump_times[idx], -alpha) * ctrl.jump();
            idx += 1;
        }
        let comp = comp_rate * (pow_pos(t - s, one_m_a) - pow_pos(t - tau, one_m_a)) / one_m_a;
        let w = pow_pos(t - tau, alpha);
        let state = det_scale * w * y + w * (jump_sum - comp);
        let z = alpha * state / (t - tau);
        integrand.push(pow_pos(z.abs(), p));
    }
    let mut total = T::zero();
    for k in 0..taus.len() - 1 {
        total += (integrand[k] + integrand[k + 1]) / T::of(2.0) * (taus[k + 1] - taus[k]);
    }
    // tail beyond the cutoff, integrable since (1-alpha)p < 1
    let last = *taus.last().unwrap();
    let tail = *integrand.last().unwrap() * (t - last) / (T::one() - one_m_a * p);
    total + tail
}

/// Closed-form cost of the jump-free bridge:
/// `alpha^p |y|^p (t-s)^(1-p) / (1 - p(1-alpha))`.
pub fn bridge_cost_deterministic<T: Real>(
    y: T,
    s: T,
    t: T,
    alpha: T,
    params: &StructureParams<T>,
) -> T {
    let p = params.p();
    pow_pos(alpha, p) * pow_pos(y.abs(), p) * pow_pos(t - s, T::one() - p)
        / (T::one() - p * (T::one() - alpha))
}

/// Monte Carlo estimate of `J(y, s, a)` with an explicit activity level
/// (the jump rate is `activity/|b|^2`; pass `params.delta()` for the real
/// process, something tiny to suppress jumps).
#[allow(clippy::too_many_arguments)]
pub fn bridge_cost_with_activity<T: Real>(
    bp: &BridgeParams<T>,
    params: &StructureParams<T>,
    activity: T,
    y: T,
    s: T,
    ctrl: ControlValue<T>,
    n: usize,
    seed: u64,
    n_quad: usize,
) -> Result<McEstimate<T>> {
    let t = bp.target_t;
    if !(s < t) {
        return Err(Error::Domain("bridge cost needs s < t".into()));
    }
    let taus = quad_taus(s, t, n_quad, T::of(1e-4));
    let rate = activity / (ctrl.base * ctrl.base);
    let p = params.p();
    let alpha = bp.alpha;
    let samples: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut jumps = Vec::new();
            let mut cur = s;
            loop {
                cur += exp_sample(&mut rng, rate);
                if cur >= t {
                    break;
                }
                jumps.push(cur);
            }
            cost_from_jumps(y, s, t, alpha, ctrl, rate, &jumps, &taus, p)
        })
        .collect();
    Ok(McEstimate::from_samples(&samples, seed))
}

/// `J(y, s, a)` for the actual controlled process.
#[allow(clippy::too_many_arguments)]
pub fn bridge_cost<T: Real>(
    bp: &BridgeParams<T>,
    params: &StructureParams<T>,
    y: T,
    s: T,
    ctrl: ControlValue<T>,
    n: usize,
    seed: u64,
    n_quad: usize,
) -> Result<McEstimate<T>> {
    bridge_cost_with_activity(bp, params, params.delta(), y, s, ctrl, n, seed, n_quad)
}

/// Bridge value `w(y, s) = C- max_a J(y, s, a) - delta (t - s)` over the
/// restricted control family.
pub fn bridge_value<T: Real>(
    bp: &BridgeParams<T>,
    params: &StructureParams<T>,
    y: T,
    s: T,
    n: usize,
    seed: u64,
    n_quad: usize,
) -> Result<T> {
    let mut best = T::neg_infinity();
    for (c_idx, &ctrl) in bp.family.iter().enumerate() {
        let ctrl_seed = seed.wrapping_add((c_idx as u64) << 40);
        let est = bridge_cost(bp, params, y, s, ctrl, n, ctrl_seed, n_quad)?;
        if est.mean > best {
            best = est.mean;
        }
    }
    Ok(params.c_minus() * best - params.delta() * (bp.target_t - s))
}

/// Bridge values over a `(y, s)` probe grid with common random numbers: one
/// set of jump realizations per control, shared by every probe point, so
/// the surface is smooth in `(y, s)` and finite differences are meaningful.
/// Each entry carries the value and the standard error of its maximizing
/// control's cost estimate.
pub fn bridge_value_grid<T: Real>(
    bp: &BridgeParams<T>,
    params: &StructureParams<T>,
    ys: &[T],
    ss: &[T],
    n: usize,
    seed: u64,
    n_quad: usize,
) -> Result<Vec<Vec<(T, T)>>> {
    let t = bp.target_t;
    let s_min = ss
        .iter()
        .copied()
        .fold(T::infinity(), |a, b| a.min(b));
    if !(s_min < t) {
        return Err(Error::Domain("probe times must precede the target".into()));
    }
    let p = params.p();
    let alpha = bp.alpha;
    // per control: jump-time realizations over [s_min, t); a query at s
    // consumes the suffix after s, which has the correct restarted law
    let realizations: Vec<(ControlValue<T>, T, Vec<Vec<T>>)> = bp
        .family
        .iter()
        .enumerate()
        .map(|(c_idx, &ctrl)| {
            let rate = ctrl.rate(params.delta());
            let jumps: Vec<Vec<T>> = (0..n)
                .map(|i| {
                    let mut rng = stream_rng(seed, ((c_idx as u64) << 32) | i as u64);
                    let mut times = Vec::new();
                    let mut cur = s_min;
                    loop {
                        cur += exp_sample(&mut rng, rate);
                        if cur >= t {
                            break;
                        }
                        times.push(cur);
                    }
                    times
                })
                .collect();
            (ctrl, rate, jumps)
        })
        .collect();
    let grid: Vec<Vec<(T, T)>> = ss
        .par_iter()
        .map(|&s| {
            let taus = quad_taus(s, t, n_quad, T::of(1e-4));
            ys.iter()
                .map(|&y| {
                    let mut best = T::neg_infinity();
                    let mut best_stderr = T::zero();
                    for (ctrl, rate, jumps) in &realizations {
                        let samples: Vec<T> = jumps
                            .iter()
                            .map(|times| {
                                let from = times.partition_point(|&tt| tt <= s);
                                cost_from_jumps(
                                    y,
                                    s,
                                    t,
                                    alpha,
                                    *ctrl,
                                    *rate,
                                    &times[from..],
                                    &taus,
                                    p,
                                )
                            })
                            .collect();
                        let est = McEstimate::from_samples(&samples, seed);
                        if est.mean > best {
                            best = est.mean;
                            best_stderr = est.stderr;
                        }
                    }
                    (
                        params.c_minus() * best - params.delta() * (t - s),
                        params.c_minus() * best_stderr,
                    )
                })
                .collect()
        })
        .collect();
    Ok(grid)
}

/// Fitted constant of the two-sided bridge-value sandwich.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SandwichFit<T> {
    pub constant: T,
    pub probes: usize,
}

/// Smallest `C >= 1` with
/// `(1/C) A - C B <= w <= C A + C B` over all probes, where
/// `A = (t-s)^(1-p)|x-y|^p` and `B = (t-s)^(1-p/2)`.
pub fn fit_value_sandwich<T: Real>(
    bp: &BridgeParams<T>,
    params: &StructureParams<T>,
    ys: &[T],
    ss: &[T],
    w: &[Vec<(T, T)>],
) -> SandwichFit<T> {
    let p = params.p();
    let t = bp.target_t;
    let x = bp.target_x;
    let mut c: T = T::one();
    let mut probes = 0;
    for (si, &s) in ss.iter().enumerate() {
        for (yi, &y) in ys.iter().enumerate() {
            let a = pow_pos(t - s, T::one() - p) * pow_pos((x - y).abs(), p);
            let b = pow_pos(t - s, T::one() - p / T::of(2.0));
            let val = w[si][yi].0;
            probes += 1;
            if val > T::zero() {
                c = c.max(val / (a + b));
            }
            // lower side: C^2 B + C w - A >= 0
            let disc = (val * val + T::of(4.0) * a * b).sqrt();
            c = c.max((disc - val) / (T::of(2.0) * b));
        }
    }
    SandwichFit {
        constant: c,
        probes,
    }
}

/// Fitted constant of the subsolution oscillation bound on a space-time
/// field: smallest `C` with
/// `u(y,s) <= u(x,t) + C (|y-x|^p (t-s)^(1-p) + (t-s)^(1-p/2))`
/// over a deterministic probe set of ordered pairs.
pub fn subsolution_bound_fit<T: Real>(
    u: &Solution<T>,
    params: &StructureParams<T>,
    space_probes: usize,
    time_probes: usize,
) -> T {
    let field = &u.field;
    let p = params.p();
    let nt = field.nt();
    let nx = field.nx();
    let period = field.period();
    let step_x = (nx / space_probes.max(1)).max(1);
    let step_t = (nt / time_probes.max(1)).max(1);
    let mut c = T::zero();
    let mut levels: Vec<usize> = (0..nt).step_by(step_t).collect();
    if levels.len() < 2 {
        levels = vec![0, nt - 1];
    }
    for (li, &ls) in levels.iter().enumerate() {
        for &lt in levels.iter().skip(li + 1) {
            let s = field.times()[ls];
            let t = field.times()[lt];
            let gap = t - s;
            for iy in (0..nx).step_by(step_x) {
                let y = T::of(iy as f64) * field.dx();
                for ix in (0..nx).step_by(step_x) {
                    let x = T::of(ix as f64) * field.dx();
                    let mut d = (x - y).abs();
                    if d > period / T::of(2.0) {
                        d = period - d;
                    }
                    let phi = pow_pos(d, p) * pow_pos(gap, T::one() - p)
                        + pow_pos(gap, T::one() - p / T::of(2.0));
                    let diff = field.at(ls, iy) - field.at(lt, ix);
                    if diff > T::zero() {
                        c = c.max(diff / phi);
                    }
                }
            }
        }
    }
    c
}

/// Periodic cusp profile `kappa d(x, x0)^(2-p)`: a stationary subsolution of
/// the upper extremal equation when `kappa` is small enough.
pub fn stationary_cusp_field<T: Real>(
    nx: usize,
    length: T,
    x0: T,
    params: &StructureParams<T>,
) -> Result<GridFunction<T>> {
    let p = params.p();
    let q = params.q();
    let delta = params.delta();
    // kappa below the subsolution threshold, with a safety factor
    let kappa = T::of(0.5)
        * pow_pos(
            delta * delta / T::of(2.0),
            T::one() / (q - T::one()),
        )
        / (T::of(2.0) - p);
    GridFunction::from_fn(nx, length, |x| {
        let mut d = (x - x0).abs();
        if d > length / T::of(2.0) {
            d = length - d;
        }
        kappa * pow_pos(d, T::of(2.0) - p)
    })
}

/// View a stationary profile as a two-level space-time field (zero time
/// derivative), for residual checks.
pub fn stationary_as_field<T: Real>(g: &GridFunction<T>, horizon: T) -> SpaceTimeField<T> {
    let mut values = g.values().to_vec();
    values.extend_from_slice(g.values());
    SpaceTimeField::new(g.nx(), g.dx(), vec![T::zero(), horizon], values)
        .expect("two-level field is valid")
}
