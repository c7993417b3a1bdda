//! Monte Carlo verification of the control representation of the lower
//! extremal equation, near-optimal feedback rollouts, and moment checks.
//!
//! Any admissible policy makes the expected cost an upper bound of the true
//! infimum, so restricted-policy estimates may only undercut the PDE value
//! by statistical noise; the value feedback extracted from the solved field
//! should close the gap to within scheme error.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::params::StructureParams;
use crate::real::{pow_pos, Real};
use crate::rng::stream_rng;
use crate::simulate::{simulate_controlled, ControlValue, Drift, JumpPolicy, Trajectory};
use crate::solver::{EquationSpec, Solution, Variant};
use crate::stats::McEstimate;
use crate::{extremal, levy::LevyMeasureSpec};

/// Feedback synthesized from a solved field: the Legendre maximizer for the
/// drift and the discrete minimizing jump pair per node and level.
#[derive(Clone, Debug)]
pub struct FeedbackTable<T> {
    nx: usize,
    dx: T,
    times: Vec<T>,
    zeta: Vec<T>,
    lambda: Vec<T>,
    base: Vec<T>,
}

impl<T: Real> FeedbackTable<T> {
    pub fn times(&self) -> &[T] {
        &self.times
    }

    fn level_of(&self, t: T) -> usize {
        let dt = self.times[1] - self.times[0];
        let m = ((t - self.times[0]) / dt).round().to64() as isize;
        m.clamp(0, self.times.len() as isize - 1) as usize
    }

    /// Drift feedback, linear in space between nodes.
    pub fn drift(&self, x: T, t: T) -> T {
        let m = self.level_of(t);
        let nx = self.nx as isize;
        let pos = x / self.dx;
        let base = pos.floor();
        let w = pos - base;
        let i = base.to64() as isize;
        let wrap = |k: isize| ((k % nx + nx) % nx) as usize;
        let a = self.zeta[m * self.nx + wrap(i)];
        let b = self.zeta[m * self.nx + wrap(i + 1)];
        a + w * (b - a)
    }

    /// Jump feedback, from the nearest node.
    pub fn jump_control(&self, x: T, t: T) -> ControlValue<T> {
        let m = self.level_of(t);
        let nx = self.nx as isize;
        let i = (x / self.dx).round().to64() as isize;
        let node = ((i % nx + nx) % nx) as usize;
        ControlValue {
            lambda: self.lambda[m * self.nx + node],
            base: self.base[m * self.nx + node],
        }
    }
}

/// Build the feedback pair from a solved lower-extremal field.
pub fn feedback_from_value<T: Real>(
    solution: &Solution<T>,
    params: &StructureParams<T>,
) -> Result<FeedbackTable<T>> {
    let field = &solution.field;
    let nx = field.nx();
    let nt = field.nt();
    let mut zeta = vec![T::zero(); nx * nt];
    let mut lambda = vec![T::one(); nx * nt];
    let mut base = vec![T::one(); nx * nt];
    let exponent = T::one() / (params.p() - T::one());
    for m in 0..nt {
        let slice = field.slice_grid(m);
        for i in 0..nx {
            let dv = slice.central_gradient(i);
            let idx = m * nx + i;
            if dv.abs() > T::zero() {
                let mag = pow_pos(dv.abs() / (params.c_plus() * params.p()), exponent);
                zeta[idx] = -mag * dv.signum();
            }
            let arg = extremal::extremal_lower_argmin(&slice, dv, i)?;
            lambda[idx] = arg.lambda;
            base[idx] = arg.base;
        }
    }
    Ok(FeedbackTable {
        nx,
        dx: field.dx(),
        times: field.times().to_vec(),
        zeta,
        lambda,
        base,
    })
}

/// Policy classes for the representation estimates.
pub enum PolicyClass<'a, T> {
    ZeroDrift,
    ValueFeedback(&'a FeedbackTable<T>),
    ConstantGrid(&'a [(T, ControlValue<T>)]),
}

fn default_control<T: Real>() -> ControlValue<T> {
    ControlValue {
        lambda: T::one(),
        base: T::one(),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_batch<T: Real>(
    measure: &LevyMeasureSpec<T>,
    params: &StructureParams<T>,
    x: T,
    t0: T,
    t1: T,
    mesh_n: usize,
    drift: &Drift<'_, T>,
    policy: &JumpPolicy<'_, T>,
    n: usize,
    seed: u64,
) -> Result<Vec<Trajectory<T>>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            simulate_controlled(measure, params, x, t0, t1, mesh_n, drift, policy, &mut rng)
        })
        .collect()
}

fn value_samples<T: Real>(
    batch: &[Trajectory<T>],
    terminal: &GridFunction<T>,
    params: &StructureParams<T>,
    span: T,
) -> Vec<T> {
    batch
        .iter()
        .map(|tr| {
            terminal.sample(tr.terminal_state()) + params.c_plus() * tr.terminal_cost()
                - params.delta() * span
        })
        .collect()
}

/// Monte Carlo estimate of the representation value at `(x, t)` under the
/// given policy. Estimates are computed at the nearest solver output level.
#[allow(clippy::too_many_arguments)]
pub fn mc_value<T: Real>(
    eq: &EquationSpec<T>,
    measure: &LevyMeasureSpec<T>,
    terminal: &GridFunction<T>,
    x: T,
    t: T,
    policy: &PolicyClass<'_, T>,
    n: usize,
    seed: u64,
    mesh_n: usize,
) -> Result<McEstimate<T>> {
    if !matches!(eq.variant, Variant::ExtremalLower) {
        return Err(Error::Config(
            "the representation formula applies to the lower extremal equation".into(),
        ));
    }
    if n < 100 {
        return Err(Error::InvalidParameter(
            "fewer than 100 samples gives a meaningless confidence interval".into(),
        ));
    }
    let params = &eq.params;
    let horizon = params.horizon();
    let span = horizon - t;
    if !(span > T::zero()) {
        return Err(Error::Domain("need t < horizon".into()));
    }
    match policy {
        PolicyClass::ZeroDrift => {
            let ctrl = default_control();
            let batch = run_batch(
                measure,
                params,
                x,
                t,
                horizon,
                mesh_n,
                &Drift::Zero,
                &JumpPolicy::Constant(ctrl),
                n,
                seed,
            )?;
            Ok(McEstimate::from_samples(
                &value_samples(&batch, terminal, params, span),
                seed,
            ))
        }
        PolicyClass::ValueFeedback(table) => {
            let drift_fn = |y: T, s: T| table.drift(y, s);
            let jump_fn = |y: T, s: T| table.jump_control(y, s);
            let batch = run_batch(
                measure,
                params,
                x,
                t,
                horizon,
                mesh_n,
                &Drift::Feedback(&drift_fn),
                &JumpPolicy::Feedback(&jump_fn),
                n,
                seed,
            )?;
            Ok(McEstimate::from_samples(
                &value_samples(&batch, terminal, params, span),
                seed,
            ))
        }
        PolicyClass::ConstantGrid(constants) => {
            if constants.is_empty() {
                return Err(Error::Config("constant policy grid is empty".into()));
            }
            let mut best: Option<McEstimate<T>> = None;
            for (k, &(drift, ctrl)) in constants.iter().enumerate() {
                let batch = run_batch(
                    measure,
                    params,
                    x,
                    t,
                    horizon,
                    mesh_n,
                    &Drift::Constant(drift),
                    &JumpPolicy::Constant(ctrl),
                    n,
                    seed.wrapping_add(k as u64),
                )?;
                let est = McEstimate::from_samples(
                    &value_samples(&batch, terminal, params, span),
                    seed,
                );
                if best.as_ref().is_none_or(|b| est.mean < b.mean) {
                    best = Some(est);
                }
            }
            Ok(best.unwrap())
        }
    }
}

/// One checkpoint of a supersolution rollout.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckpointMargin<T> {
    pub t: T,
    pub margin: T,
    pub stderr: T,
    pub slack: T,
}

/// Rollout verdict for the monotonicity inequality along near-optimal
/// trajectories.
#[derive(Clone, Debug, Serialize)]
pub struct RolloutReport<T> {
    pub checkpoints: Vec<CheckpointMargin<T>>,
    pub worst_margin: T,
    pub energy: T,
    pub energy_bound: T,
    pub pass: bool,
}

/// Verify `u(x,t) >= E[u(Y_s, s) + C+ int |zeta|^p] - delta (s - t) - slack`
/// at the requested checkpoint times along feedback rollouts.
#[allow(clippy::too_many_arguments)]
pub fn rollout_check<T: Real>(
    u: &Solution<T>,
    measure: &LevyMeasureSpec<T>,
    params: &StructureParams<T>,
    x_bar: T,
    t_bar: T,
    table: &FeedbackTable<T>,
    checkpoints: &[T],
    n: usize,
    seed: u64,
    slack_coeff: T,
) -> Result<RolloutReport<T>> {
    if n < 100 {
        return Err(Error::InvalidParameter(
            "fewer than 100 samples gives a meaningless confidence interval".into(),
        ));
    }
    let field = &u.field;
    let horizon = params.horizon();
    let start_level = field.level_of(t_bar);
    let t0 = field.times()[start_level];
    let mesh_n = field.nt() - 1 - start_level;
    if mesh_n == 0 {
        return Err(Error::Domain("start time too close to the horizon".into()));
    }
    let drift_fn = |y: T, s: T| table.drift(y, s);
    let jump_fn = |y: T, s: T| table.jump_control(y, s);
    let batch = run_batch(
        measure,
        params,
        x_bar,
        t0,
        horizon,
        mesh_n,
        &Drift::Feedback(&drift_fn),
        &JumpPolicy::Feedback(&jump_fn),
        n,
        seed,
    )?;
    let dt = field.dt();
    let dx = field.dx();
    let scheme_slack = slack_coeff * (dt + dx);
    let u0 = field.sample_at_level(start_level, x_bar);
    let mut report = Vec::new();
    let mut worst = T::infinity();
    for &tc in checkpoints {
        let level = field.level_of(tc);
        if level <= start_level {
            continue;
        }
        let k = level - start_level;
        let t_k = field.times()[level];
        let samples: Vec<T> = batch
            .iter()
            .map(|tr| {
                field.sample_at_level(level, tr.states[k]) + params.c_plus() * tr.cost[k]
            })
            .collect();
        let est = McEstimate::from_samples(&samples, seed);
        let margin = u0 - (est.mean - params.delta() * (t_k - t0));
        let slack = T::of(3.0) * est.stderr + scheme_slack;
        worst = worst.min(margin + slack);
        report.push(CheckpointMargin {
            t: t_k,
            margin,
            stderr: est.stderr,
            slack,
        });
    }
    // energy bound on the feedback controls
    let costs: Vec<T> = batch.iter().map(|tr| tr.terminal_cost()).collect();
    let cost_est = McEstimate::from_samples(&costs, seed);
    let energy = params.c_plus() * cost_est.mean;
    let energy_bound = T::of(2.0) * params.sup_bound()
        + (params.delta() + T::one()) * horizon
        + T::of(3.0) * params.c_plus() * cost_est.stderr;
    let pass = worst >= T::zero() && energy <= energy_bound;
    Ok(RolloutReport {
        checkpoints: report,
        worst_margin: worst,
        energy,
        energy_bound,
        pass,
    })
}

/// One moment-bound entry.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentEntry<T> {
    pub r: T,
    pub t: T,
    pub sample: T,
    pub bound: T,
    pub stderr: T,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport<T> {
    pub entries: Vec<MomentEntry<T>>,
    pub pass: bool,
}

/// Check `E|Y_t - x - int zeta|^r <= delta^(r/2) (t - t0)^(r/2)` with 3-sigma
/// slack on a trajectory batch, for each requested `r` in `(0, 2]`.
pub fn moment_check<T: Real>(
    batch: &[Trajectory<T>],
    params: &StructureParams<T>,
    rs: &[T],
    checkpoints: &[usize],
) -> Result<MomentReport<T>> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory batch".into()));
    }
    let t0 = batch[0].mesh[0];
    let delta = params.delta();
    let mut entries = Vec::new();
    let mut pass = true;
    for &r in rs {
        if !(r > T::zero() && r <= T::of(2.0)) {
            return Err(Error::Domain("moment order must lie in (0, 2]".into()));
        }
        for &k in checkpoints {
            let t = batch[0].mesh[k];
            let samples: Vec<T> = batch
                .iter()
                .map(|tr| pow_pos(tr.martingale[k].abs(), r))
                .collect();
            let est = McEstimate::from_samples(&samples, 0);
            let bound = pow_pos(delta, r / T::of(2.0)) * pow_pos(t - t0, r / T::of(2.0));
            let ok = est.mean <= bound + T::of(3.0) * est.stderr;
            pass &= ok;
            entries.push(MomentEntry {
                r,
                t,
                sample: est.mean,
                bound,
                stderr: est.stderr,
                pass: ok,
            });
        }
    }
    Ok(MomentReport { entries, pass })
}

/// Convenience: simulate a batch under a fixed policy, for moment checks and
/// reverse-Holder inputs.
#[allow(clippy::too_many_arguments)]
pub fn sample_batch<T: Real>(
    measure: &LevyMeasureSpec<T>,
    params: &StructureParams<T>,
    x: T,
    t0: T,
    t1: T,
    mesh_n: usize,
    drift: T,
    ctrl: ControlValue<T>,
    n: usize,
    seed: u64,
) -> Result<Vec<Trajectory<T>>> {
    run_batch(
        measure,
        params,
        x,
        t0,
        t1,
        mesh_n,
        &Drift::Constant(drift),
        &JumpPolicy::Constant(ctrl),
        n,
        seed,
    )
}

/// Rollout batch under the value feedback, exposing the drift-control paths
/// `|zeta_s|` sampled on the rollout mesh (for the reverse-Holder pipeline).
#[allow(clippy::too_many_arguments)]
pub fn feedback_control_paths<T: Real>(
    u: &Solution<T>,
    measure: &LevyMeasureSpec<T>,
    params: &StructureParams<T>,
    x_bar: T,
    t_bar: T,
    table: &FeedbackTable<T>,
    n: usize,
    seed: u64,
) -> Result<(Vec<Vec<T>>, T, T)> {
    let field = &u.field;
    let start_level = field.level_of(t_bar);
    let t0 = field.times()[start_level];
    let horizon = params.horizon();
    let mesh_n = field.nt() - 1 - start_level;
    let drift_fn = |y: T, s: T| table.drift(y, s);
    let jump_fn = |y: T, s: T| table.jump_control(y, s);
    let batch = run_batch(
        measure,
        params,
        x_bar,
        t0,
        horizon,
        mesh_n,
        &Drift::Feedback(&drift_fn),
        &JumpPolicy::Feedback(&jump_fn),
        n,
        seed,
    )?;
    let dt = field.dt();
    let paths: Vec<Vec<T>> = batch
        .iter()
        .map(|tr| {
            (0..mesh_n)
                .map(|k| ((tr.drift_integral[k + 1] - tr.drift_integral[k]) / dt).abs())
                .collect()
        })
        .collect();
    Ok((paths, t0, horizon))
}
