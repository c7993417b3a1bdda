//! Exact simulation of the controlled compensated-Poisson martingale, of
//! controlled trajectories, and of the bridge process.
//!
//! The martingale only ever charges the jump set of mass `delta/|b|^2`, and
//! on that set the integrand is the constant `lambda b`. So each constant
//! control piece is a compensated compound Poisson process with rate
//! `delta/|b|^2` and deterministic jump `lambda b`: exponential inter-arrival
//! times make the simulation exact, with no small-jump truncation.

use rand::Rng;

use crate::error::{Error, Result};
use crate::levy::LevyMeasureSpec;
use crate::params::StructureParams;
use crate::real::{pow_pos, Real};
use crate::rng::exp_sample;

/// Jump control `(lambda, b)`; one-dimensional, `b` carries the sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlValue<T> {
    pub lambda: T,
    pub base: T,
}

impl<T: Real> ControlValue<T> {
    pub fn new(lambda: T, base: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda <= T::one()) {
            return Err(Error::InvalidParameter("lambda must lie in (0, 1]".into()));
        }
        let ab = base.abs();
        if !(ab > T::zero() && ab <= T::one()) {
            return Err(Error::InvalidParameter(
                "base |b| must lie in (0, 1]".into(),
            ));
        }
        Ok(Self { lambda, base })
    }

    pub fn jump(&self) -> T {
        self.lambda * self.base
    }

    /// Poisson rate `delta/|b|^2` of the charged jump set.
    pub fn rate(&self, delta: T) -> T {
        delta / (self.base * self.base)
    }
}

/// One constant-control piece of a martingale path.
#[derive(Clone, Copy, Debug)]
pub struct Piece<T> {
    pub start: T,
    pub end: T,
    pub control: ControlValue<T>,
    pub rate: T,
    /// density of the compensator drift: `lambda b rate`
    pub comp_rate: T,
}

/// Realization of the controlled martingale on `[t0, t1]`.
#[derive(Clone, Debug)]
pub struct MartingalePath<T> {
    pub t0: T,
    pub t1: T,
    pub jump_times: Vec<T>,
    pub jump_sizes: Vec<T>,
    pub pieces: Vec<Piece<T>>,
}

impl<T: Real> MartingalePath<T> {
    /// Value at `t`: jump sum up to `t` minus the compensator integral.
    pub fn value_at(&self, t: T) -> T {
        let mut v = T::zero();
        for (tau, size) in self.jump_times.iter().zip(&self.jump_sizes) {
            if *tau <= t {
                v += *size;
            }
        }
        for piece in &self.pieces {
            if t <= piece.start {
                break;
            }
            let upto = t.min(piece.end);
            v -= piece.comp_rate * (upto - piece.start);
        }
        v
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }
}

fn validate_pieces<T: Real>(controls: &[(T, ControlValue<T>)], t0: T, t1: T) -> Result<()> {
    if !(t1 > t0) {
        return Err(Error::Domain("piece length must be positive".into()));
    }
    if controls.is_empty() {
        return Err(Error::InvalidParameter("control path is empty".into()));
    }
    if controls[0].0 > t0 {
        return Err(Error::InvalidParameter(
            "control path must cover the start time".into(),
        ));
    }
    for w in controls.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidParameter(
                "control path times must increase".into(),
            ));
        }
    }
    Ok(())
}

/// Exact simulation of the controlled martingale under a piecewise-constant
/// control path (`controls[k].0` is the time the k-th value takes effect).
pub fn simulate_martingale<T: Real>(
    measure: &LevyMeasureSpec<T>,
    delta: T,
    controls: &[(T, ControlValue<T>)],
    t0: T,
    t1: T,
    rng: &mut impl Rng,
) -> Result<MartingalePath<T>> {
    validate_pieces(controls, t0, t1)?;
    let mut jump_times = Vec::new();
    let mut jump_sizes = Vec::new();
    let mut pieces = Vec::new();
    for (idx, &(start, ctrl)) in controls.iter().enumerate() {
        let end = controls.get(idx + 1).map(|c| c.0).unwrap_or(t1);
        let start = start.max(t0);
        let end = end.min(t1);
        if end <= start {
            continue;
        }
        let rate = ctrl.rate(delta);
        // the jump set of this piece has prescribed measure: its inner radius
        // exists because the tail diverges at the origin
        debug_assert!(measure.inverse_tail(rate).is_ok());
        let mut t = start;
        loop {
            t += exp_sample(rng, rate);
            if t >= end {
                break;
            }
            jump_times.push(t);
            jump_sizes.push(ctrl.jump());
        }
        pieces.push(Piece {
            start,
            end,
            control: ctrl,
            rate,
            comp_rate: ctrl.jump() * rate,
        });
    }
    Ok(MartingalePath {
        t0,
        t1,
        jump_times,
        jump_sizes,
        pieces,
    })
}

/// Drift control: a path of time is integrated by the midpoint rule, a
/// feedback of `(state, time)` is frozen between mesh points.
pub enum Drift<'a, T> {
    Zero,
    Constant(T),
    Path(&'a (dyn Fn(T) -> T + Sync)),
    Feedback(&'a (dyn Fn(T, T) -> T + Sync)),
}

/// Jump control policy, frozen between mesh points when state-dependent.
pub enum JumpPolicy<'a, T> {
    Constant(ControlValue<T>),
    Path(&'a (dyn Fn(T) -> ControlValue<T> + Sync)),
    Feedback(&'a (dyn Fn(T, T) -> ControlValue<T> + Sync)),
}

/// One jump with the state on both sides.
#[derive(Clone, Copy, Debug)]
pub struct JumpEvent<T> {
    pub time: T,
    pub before: T,
    pub after: T,
}

/// Controlled path `Y = x + int zeta + M^a` recorded on a mesh.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub mesh: Vec<T>,
    pub states: Vec<T>,
    pub drift_integral: Vec<T>,
    pub martingale: Vec<T>,
    /// running cost `int |zeta|^p`
    pub cost: Vec<T>,
    pub jumps: Vec<JumpEvent<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn terminal_state(&self) -> T {
        *self.states.last().unwrap()
    }
    pub fn terminal_cost(&self) -> T {
        *self.cost.last().unwrap()
    }
}

/// Simulate the controlled system on `[t0, t1]` with `mesh_n` uniform mesh
/// intervals. Jumps are exact; only the drift freezing carries mesh error.
#[allow(clippy::too_many_arguments)]
pub fn simulate_controlled<T: Real>(
    measure: &LevyMeasureSpec<T>,
    params: &StructureParams<T>,
    x0: T,
    t0: T,
    t1: T,
    mesh_n: usize,
    drift: &Drift<'_, T>,
    policy: &JumpPolicy<'_, T>,
    rng: &mut impl Rng,
) -> Result<Trajectory<T>> {
    if !(t1 > t0) {
        return Err(Error::Domain("horizon must exceed the start time".into()));
    }
    if mesh_n == 0 {
        return Err(Error::Config("mesh must have at least one interval".into()));
    }
    let delta = params.delta();
    let p = params.p();
    let dt = (t1 - t0) / T::of(mesh_n as f64);
    let mut mesh = Vec::with_capacity(mesh_n + 1);
    let mut states = Vec::with_capacity(mesh_n + 1);
    let mut drift_integral = Vec::with_capacity(mesh_n + 1);
    let mut martingale = Vec::with_capacity(mesh_n + 1);
    let mut cost = Vec::with_capacity(mesh_n + 1);
    let mut jumps = Vec::new();

    let mut y = x0;
    let mut zint = T::zero();
    let mut m = T::zero();
    let mut c = T::zero();
    mesh.push(t0);
    states.push(y);
    drift_integral.push(zint);
    martingale.push(m);
    cost.push(c);

    for k in 0..mesh_n {
        let a = t0 + dt * T::of(k as f64);
        let b = if k + 1 == mesh_n {
            t1
        } else {
            t0 + dt * T::of((k + 1) as f64)
        };
        let zeta = match drift {
            Drift::Zero => T::zero(),
            Drift::Constant(v) => *v,
            Drift::Path(f) => f((a + b) / T::of(2.0)),
            Drift::Feedback(f) => f(y, a),
        };
        if !zeta.is_finite() {
            return Err(Error::Numerical(format!(
                "drift feedback returned a non-finite value at state {y}, time {a}"
            )));
        }
        let ctrl = match policy {
            JumpPolicy::Constant(c) => *c,
            JumpPolicy::Path(f) => f(a),
            JumpPolicy::Feedback(f) => f(y, a),
        };
        ControlValue::new(ctrl.lambda, ctrl.base).map_err(|_| {
            Error::Numerical(format!(
                "jump feedback returned an invalid control at state {y}, time {a}"
            ))
        })?;
        debug_assert!(measure.inverse_tail(ctrl.rate(delta)).is_ok());
        let rate = ctrl.rate(delta);
        let comp = ctrl.jump() * rate;
        let slope = zeta - comp;
        let mut cur = a;
        loop {
            let tau = cur + exp_sample(rng, rate);
            if tau >= b {
                let span = b - cur;
                y += slope * span;
                m -= comp * span;
                break;
            }
            let span = tau - cur;
            y += slope * span;
            m -= comp * span;
            let before = y;
            y += ctrl.jump();
            m += ctrl.jump();
            jumps.push(JumpEvent {
                time: tau,
                before,
                after: y,
            });
            cur = tau;
        }
        zint += zeta * (b - a);
        c += pow_pos(zeta.abs(), p) * (b - a);
        mesh.push(b);
        states.push(y);
        drift_integral.push(zint);
        martingale.push(m);
        cost.push(c);
    }
    Ok(Trajectory {
        mesh,
        states,
        drift_integral,
        martingale,
        cost,
        jumps,
    })
}

/// Bridge path evaluated exactly at the requested times.
#[derive(Clone, Debug)]
pub struct BridgeTrajectory<T> {
    pub taus: Vec<T>,
    pub states: Vec<T>,
    /// the induced drift control `Z = -alpha Y/(t - tau)`
    pub pull: Vec<T>,
    pub jump_count: usize,
}

/// Check `alpha` against its admissible interval `(1 - 1/p, 1/2)`.
pub fn validate_bridge_alpha<T: Real>(alpha: T, params: &StructureParams<T>) -> Result<()> {
    let lo = T::one() - T::one() / params.p();
    let hi = T::of(0.5);
    if !(alpha > lo && alpha < hi) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} outside ({lo}, {hi})"
        )));
    }
    Ok(())
}

/// Evaluate the bridge driven by a given martingale realization:
/// `Y_tau = (t-s)^(-a) (t-tau)^a y + (t-tau)^a int_s^tau (t-sigma)^(-a) dM`.
///
/// The stochastic integral is a finite jump sum plus a closed-form
/// compensator integral, so the evaluation is exact at every `tau < t`.
pub fn bridge_from_martingale<T: Real>(
    y: T,
    s: T,
    t: T,
    alpha: T,
    path: &MartingalePath<T>,
    taus: &[T],
) -> Result<BridgeTrajectory<T>> {
    if !(s < t) {
        return Err(Error::Domain("bridge needs s < t".into()));
    }
    let one_m_a = T::one() - alpha;
    let det_scale = pow_pos(t - s, -alpha);
    let mut states = Vec::with_capacity(taus.len());
    let mut pull = Vec::with_capacity(taus.len());
    for &tau in taus {
        if !(tau >= s && tau < t) {
            return Err(Error::Domain(
                "bridge evaluation times must lie in [s, t)".into(),
            ));
        }
        let mut integral = T::zero();
        for (ti, size) in path.jump_times.iter().zip(&path.jump_sizes) {
            if *ti > s && *ti <= tau {
                integral += pow_pos(t - *ti, -alpha) * *size;
            }
        }
        for piece in &path.pieces {
            let lo = piece.start.max(s);
            let hi = piece.end.min(tau);
            if hi > lo {
                let seg = (pow_pos(t - lo, one_m_a) - pow_pos(t - hi, one_m_a)) / one_m_a;
                integral -= piece.comp_rate * seg;
            }
        }
        let w = pow_pos(t - tau, alpha);
        let state = det_scale * w * y + w * integral;
        states.push(state);
        pull.push(-alpha * state / (t - tau));
    }
    Ok(BridgeTrajectory {
        taus: taus.to_vec(),
        states,
        pull,
        jump_count: path.jump_count(),
    })
}

/// Simulate a fresh martingale and evaluate the bridge along it.
#[allow(clippy::too_many_arguments)]
pub fn simulate_bridge<T: Real>(
    measure: &LevyMeasureSpec<T>,
    params: &StructureParams<T>,
    y: T,
    s: T,
    t: T,
    alpha: T,
    controls: &[(T, ControlValue<T>)],
    taus: &[T],
    rng: &mut impl Rng,
) -> Result<BridgeTrajectory<T>> {
    validate_bridge_alpha(alpha, params)?;
    let path = simulate_martingale(measure, params.delta(), controls, s, t, rng)?;
    bridge_from_martingale(y, s, t, alpha, &path, taus)
}

/// Euler route for the same bridge realization: integrate
/// `dY = -alpha Y/(t - tau) dtau + dM` on a uniform mesh with exact jumps.
/// Used to cross-check the closed-form route.
pub fn bridge_euler_route<T: Real>(
    y: T,
    s: T,
    t: T,
    alpha: T,
    path: &MartingalePath<T>,
    mesh_n: usize,
    t_cut: T,
) -> Vec<(T, T)> {
    let dt = (t_cut - s) / T::of(mesh_n as f64);
    let mut out = Vec::with_capacity(mesh_n + 1);
    let mut state = y;
    let mut cur = s;
    out.push((cur, state));
    let mut jump_idx = 0;
    for _ in 0..mesh_n {
        let next = cur + dt;
        // jumps inside (cur, next]: apply drift piecewise then the jump
        let mut seg_start = cur;
        while jump_idx < path.jump_times.len() && path.jump_times[jump_idx] <= next {
            let tj = path.jump_times[jump_idx];
            if tj > seg_start {
                let span = tj - seg_start;
                state += (-alpha * state / (t - seg_start)) * span;
                seg_start = tj;
            }
            state += path.jump_sizes[jump_idx];
            jump_idx += 1;
        }
        let span = next - seg_start;
        state += (-alpha * state / (t - seg_start)) * span;
        // compensator drift of the martingale over (cur, next]
        for piece in &path.pieces {
            let lo = piece.start.max(cur);
            let hi = piece.end.min(next);
            if hi > lo {
                state -= piece.comp_rate * (hi - lo);
            }
        }
        cur = next;
        out.push((cur, state));
    }
    out
}
