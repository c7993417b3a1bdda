//! Monotone explicit solver for the terminal-value extremal equations and
//! for sandwiched general equations.
//!
//! Backward Euler-in-time marching of `v_t = F_h(v)` with `v(., T)` given.
//! Every spatial term is discretized so the update is monotone in each
//! stencil value under the CFL restriction, which makes the discrete
//! comparison principle exact:
//!
//! - gradient term: Godunov flux `max(D-, -D+, 0)^q`, clamped;
//! - extremal operators: second difference quotients over the jump family,
//!   symmetric pairs for every base length plus one-sided candidates with a
//!   downwind difference in the compensator, the latter restricted to base
//!   lengths `k >= ~sqrt(K)` where the compensator error is subordinate;
//! - integral operators: quadrature with downwind compensators per jump sign.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField};
use crate::levy::LevyIntegralSpec;
use crate::params::StructureParams;
use crate::real::{pow_pos, Real};

/// Scalar coefficient field of a general equation.
#[derive(Clone, Debug)]
pub enum CoeffField<T> {
    Constant(T),
    /// Space-time checkerboard with square cells of the given side length.
    Checkerboard { cell: T, low: T, high: T },
}

impl<T: Real> CoeffField<T> {
    pub fn eval(&self, x: T, t: T) -> T {
        match self {
            CoeffField::Constant(c) => *c,
            CoeffField::Checkerboard { cell, low, high } => {
                let ix = (x / *cell).floor().to64() as i64;
                let it = (t / *cell).floor().to64() as i64;
                if (ix + it) % 2 == 0 {
                    *high
                } else {
                    *low
                }
            }
        }
    }

    fn range(&self) -> (T, T) {
        match self {
            CoeffField::Constant(c) => (*c, *c),
            CoeffField::Checkerboard { low, high, .. } => (low.min(*high), low.max(*high)),
        }
    }
}

/// Which equation the solver marches.
#[derive(Clone, Debug)]
pub enum Variant<T> {
    /// `-v_t - delta M^-[v] + delta |Dv|^q + delta = 0`
    ExtremalLower,
    /// `-v_t - delta M^+[v] + (1/delta) |Dv|^q - delta = 0`
    ExtremalUpper,
    /// `-v_t - a(x,t) v_xx + h(x,t) |Dv|^q + g(x,t) = 0`
    LocalGeneral {
        diffusion: CoeffField<T>,
        hamiltonian_scale: CoeffField<T>,
        source: CoeffField<T>,
    },
    /// `-v_t - I[v] + h(x,t) |Dv|^q + g(x,t) = 0`
    NonlocalGeneral {
        integral: LevyIntegralSpec<T>,
        hamiltonian_scale: CoeffField<T>,
        source: CoeffField<T>,
    },
}

/// Equation with its structure parameters; general variants are probed
/// against the structure sandwich at construction.
#[derive(Clone, Debug)]
pub struct EquationSpec<T> {
    pub variant: Variant<T>,
    pub params: StructureParams<T>,
}

impl<T: Real> EquationSpec<T> {
    pub fn new(variant: Variant<T>, params: StructureParams<T>, period: T) -> Result<Self> {
        let delta = params.delta();
        let check_range = |f: &CoeffField<T>, lo: T, hi: T, what: &str| -> Result<()> {
            let (a, b) = f.range();
            if a < lo - T::of(1e-12) || b > hi + T::of(1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "{what} coefficient leaves the structure interval [{lo}, {hi}]"
                )));
            }
            Ok(())
        };
        match &variant {
            Variant::ExtremalLower | Variant::ExtremalUpper => {}
            Variant::LocalGeneral {
                diffusion,
                hamiltonian_scale,
                source,
            } => {
                check_range(diffusion, T::zero(), delta, "diffusion")?;
                check_range(hamiltonian_scale, T::one() / delta, delta, "hamiltonian")?;
                check_range(source, -delta, delta, "source")?;
            }
            Variant::NonlocalGeneral {
                integral,
                hamiltonian_scale,
                source,
            } => {
                let m2 = integral.max_second_moment(period, params.horizon());
                if m2 > delta * (T::one() + T::of(1e-6)) {
                    return Err(Error::InvalidParameter(format!(
                        "jump catalog second moment {m2} exceeds delta = {delta}"
                    )));
                }
                check_range(hamiltonian_scale, T::one() / delta, delta, "hamiltonian")?;
                check_range(source, -delta, delta, "source")?;
            }
        }
        Ok(Self { variant, params })
    }
}

/// Solver knobs; `dt` itself is adaptive.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverConfig<T> {
    pub cfl_safety: T,
    /// gradient clamp is `clamp_factor * range / dx`
    pub clamp_factor: T,
    pub max_steps: usize,
    /// number of uniform output intervals over `[0, T]`
    pub nt_out: usize,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(nt_out: usize) -> Self {
        Self {
            cfl_safety: T::of(0.8),
            clamp_factor: T::of(2.0),
            max_steps: 4_000_000,
            nt_out,
        }
    }
}

/// Space-time solution with solver diagnostics.
#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub field: SpaceTimeField<T>,
    pub substeps: usize,
    pub clamp_events: usize,
}

struct Stencil<'a, T> {
    v: &'a [T],
    nx: usize,
    dx: T,
    k_max: usize,
    /// smallest base length index for one-sided candidates
    k_side: usize,
}

impl<'a, T: Real> Stencil<'a, T> {
    fn new(v: &'a [T], dx: T) -> Result<Self> {
        let k_max = (T::one() / dx).floor().to64() as usize;
        if k_max < 1 {
            return Err(Error::Config(
                "mesh coarser than the unit jump range (dx > 1)".into(),
            ));
        }
        let k_side = ((k_max as f64).sqrt().round() as usize).max(2).min(k_max);
        Ok(Self {
            v,
            nx: v.len(),
            dx,
            k_max,
            k_side,
        })
    }

    #[inline]
    fn at(&self, i: isize) -> T {
        let n = self.nx as isize;
        self.v[(((i % n) + n) % n) as usize]
    }

    /// Monotone lower extremal value at node `i`.
    fn m_lower(&self, i: usize) -> T {
        self.m_extremal::<true>(i)
    }

    /// Monotone upper extremal value at node `i`.
    fn m_upper(&self, i: usize) -> T {
        self.m_extremal::<false>(i)
    }

    fn m_extremal<const LOWER: bool>(&self, i: usize) -> T {
        let i = i as isize;
        let dx2 = self.dx * self.dx;
        let far = {
            let k = T::of(self.k_max as f64);
            k * k * dx2
        };
        let center = self.at(i);
        let back = center - self.at(i - 1);
        let fwd = self.at(i + 1) - center;
        let mut best = if LOWER { T::infinity() } else { T::neg_infinity() };
        let mut consider = |num: T, j: usize, k_floor: usize| {
            let wide = if LOWER { num >= T::zero() } else { num < T::zero() };
            let den = if wide {
                far
            } else {
                let k = T::of(j.max(k_floor) as f64);
                k * k * dx2
            };
            let val = num / den;
            if LOWER {
                if val < best {
                    best = val;
                }
            } else if val > best {
                best = val;
            }
        };
        for j in 1..=self.k_max {
            let jj = T::of(j as f64);
            let up = self.at(i + j as isize) - center;
            let down = self.at(i - j as isize) - center;
            // symmetric pair: the gradient compensator cancels
            consider((up + down) / T::of(2.0), j, j);
            // one-sided with downwind compensator, large bases only
            consider(up - jj * back, j, self.k_side);
            consider(down + jj * fwd, j, self.k_side);
        }
        best
    }

    /// Godunov slope `max(D-, -D+, 0)`, clamped.
    fn godunov_slope(&self, i: usize, clamp: T) -> T {
        let i = i as isize;
        let back = (self.at(i) - self.at(i - 1)) / self.dx;
        let fwd = (self.at(i + 1) - self.at(i)) / self.dx;
        back.max(-fwd).max(T::zero()).min(clamp)
    }

    fn second_difference(&self, i: usize) -> T {
        let i = i as isize;
        (self.at(i + 1) + self.at(i - 1) - T::of(2.0) * self.at(i)) / (self.dx * self.dx)
    }

    /// Quadrature integral with downwind compensators; linear interpolation
    /// keeps every off-diagonal coefficient nonnegative, and sub-grid jumps
    /// act through the (equally monotone) second difference.
    fn levy_value(&self, spec: &LevyIntegralSpec<T>, i: usize, x: T, t: T, period: T) -> T {
        let ii = i as isize;
        let center = self.at(ii);
        let back = (center - self.at(ii - 1)) / self.dx;
        let fwd = (self.at(ii + 1) - center) / self.dx;
        let small = T::of(4.0) * self.dx;
        let curvature = (self.at(ii + 1) + self.at(ii - 1) - T::of(2.0) * center)
            / (self.dx * self.dx);
        let mut inf = T::infinity();
        for row in &spec.catalog {
            let mut sup = T::neg_infinity();
            for map in row {
                let mut total = T::zero();
                for qn in &spec.quad.nodes {
                    let half = qn.mass / T::of(2.0);
                    for sign in [T::one(), -T::one()] {
                        let jump = map.eval(x, t, sign * qn.radius, period);
                        if jump.abs() < small {
                            total += half * jump * jump * curvature / T::of(2.0);
                            continue;
                        }
                        let pos = (x + jump) / self.dx;
                        let base = pos.floor();
                        let w = pos - base;
                        let b = base.to64() as isize;
                        let displaced = self.at(b) + w * (self.at(b + 1) - self.at(b));
                        let grad = if jump >= T::zero() { back } else { fwd };
                        total += half * (displaced - center - grad * jump);
                    }
                }
                if total > sup {
                    sup = total;
                }
            }
            if sup < inf {
                inf = sup;
            }
        }
        inf
    }
}

/// Right-hand side `F_h(v)` of `v_t = F_h(v)` at one node.
fn rhs_at<T: Real>(
    eq: &EquationSpec<T>,
    st: &Stencil<'_, T>,
    i: usize,
    x: T,
    t: T,
    period: T,
    clamp: T,
) -> T {
    let delta = eq.params.delta();
    let q = eq.params.q();
    match &eq.variant {
        Variant::ExtremalLower => {
            let slope = st.godunov_slope(i, clamp);
            -delta * st.m_lower(i) + delta * pow_pos(slope, q) + delta
        }
        Variant::ExtremalUpper => {
            let slope = st.godunov_slope(i, clamp);
            -delta * st.m_upper(i) + pow_pos(slope, q) / delta - delta
        }
        Variant::LocalGeneral {
            diffusion,
            hamiltonian_scale,
            source,
        } => {
            let slope = st.godunov_slope(i, clamp);
            -diffusion.eval(x, t) * st.second_difference(i)
                + hamiltonian_scale.eval(x, t) * pow_pos(slope, q)
                + source.eval(x, t)
        }
        Variant::NonlocalGeneral {
            integral,
            hamiltonian_scale,
            source,
        } => {
            let slope = st.godunov_slope(i, clamp);
            -st.levy_value(integral, i, x, t, period)
                + hamiltonian_scale.eval(x, t) * pow_pos(slope, q)
                + source.eval(x, t)
        }
    }
}

/// Lipschitz bound of the update in the stencil values, for the CFL step.
fn diag_bound<T: Real>(eq: &EquationSpec<T>, dx: T, grad_bound: T) -> T {
    let delta = eq.params.delta();
    let q = eq.params.q();
    let nl = match &eq.variant {
        Variant::ExtremalLower | Variant::ExtremalUpper => {
            delta * T::of(2.0) / (dx * dx)
        }
        Variant::LocalGeneral { diffusion, .. } => {
            let (_, a_max) = diffusion.range();
            T::of(2.0) * a_max / (dx * dx)
        }
        Variant::NonlocalGeneral { integral, .. } => {
            let c_max = integral
                .catalog
                .iter()
                .flatten()
                .map(|m| m.growth().1)
                .fold(T::zero(), |a, b| a.max(b));
            integral
                .quad
                .nodes
                .iter()
                .map(|n| {
                    let j = c_max * n.radius;
                    // worst of the interpolation and curvature branches
                    let interp = T::one() + j / dx;
                    let curv = j * j / (dx * dx);
                    n.mass * interp.max(curv)
                })
                .sum()
        }
    };
    let h_coef = match &eq.variant {
        Variant::ExtremalLower => delta,
        Variant::ExtremalUpper => T::one() / delta,
        Variant::LocalGeneral { hamiltonian_scale, .. }
        | Variant::NonlocalGeneral { hamiltonian_scale, .. } => hamiltonian_scale.range().1,
    };
    let ham = h_coef * q * pow_pos(grad_bound, q - T::one()) / dx;
    nl + ham
}

fn max_one_sided_diff<T: Real>(v: &[T], dx: T) -> T {
    let n = v.len();
    let mut g = T::zero();
    for i in 0..n {
        let d = (v[(i + 1) % n] - v[i]).abs() / dx;
        if d > g {
            g = d;
        }
    }
    g
}

/// Explicit monotone step from `t` to `t - dt` writing into `out`.
#[allow(clippy::too_many_arguments)]
fn step_into<T: Real>(
    eq: &EquationSpec<T>,
    v: &[T],
    t: T,
    dt: T,
    dx: T,
    period: T,
    clamp: T,
    out: &mut [T],
) -> Result<()> {
    let st = Stencil::new(v, dx)?;
    for i in 0..v.len() {
        let x = T::of(i as f64) * dx;
        out[i] = v[i] - dt * rhs_at(eq, &st, i, x, t, period, clamp);
        if !out[i].is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite value at node {i}, t = {t}"
            )));
        }
    }
    Ok(())
}

struct March<T> {
    v: Vec<T>,
    scratch: Vec<T>,
    substeps: usize,
    clamp_events: usize,
}

impl<T: Real> March<T> {
    /// Advance the field backward from `t_hi` to `t_lo` with CFL substeps.
    fn run(
        &mut self,
        eq: &EquationSpec<T>,
        t_hi: T,
        t_lo: T,
        dx: T,
        period: T,
        config: &SolverConfig<T>,
    ) -> Result<()> {
        let mut t = t_hi;
        while t > t_lo + T::of(1e-14) {
            let range = {
                let mut lo = self.v[0];
                let mut hi = self.v[0];
                for &x in &self.v {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                hi - lo
            };
            let clamp = (config.clamp_factor * range / dx).max(T::one());
            let g_raw = max_one_sided_diff(&self.v, dx);
            let g = if g_raw > clamp {
                self.clamp_events += 1;
                clamp
            } else {
                g_raw
            };
            let bound = diag_bound(eq, dx, g);
            let dt_cfl = config.cfl_safety / bound;
            let dt = dt_cfl.min(t - t_lo);
            if !(dt > T::zero()) {
                return Err(Error::Numerical("time step collapsed to zero".into()));
            }
            step_into(eq, &self.v, t, dt, dx, period, clamp, &mut self.scratch)?;
            std::mem::swap(&mut self.v, &mut self.scratch);
            t -= dt;
            self.substeps += 1;
            if self.substeps > config.max_steps {
                return Err(Error::Numerical(format!(
                    "step budget exhausted: CFL dt = {dt_cfl} at t = {t}"
                )));
            }
        }
        Ok(())
    }
}

/// March the terminal-value problem backward and record the field on
/// `nt_out + 1` uniform output times.
pub fn solve_terminal<T: Real>(
    eq: &EquationSpec<T>,
    terminal: &GridFunction<T>,
    config: &SolverConfig<T>,
) -> Result<Solution<T>> {
    if terminal.max_abs() > eq.params.sup_bound() + T::of(1e-12) {
        return Err(Error::InvalidParameter(
            "terminal data exceeds the declared sup bound".into(),
        ));
    }
    let horizon = eq.params.horizon();
    let nt = config.nt_out;
    if nt < 2 {
        return Err(Error::Config("need at least two output intervals".into()));
    }
    let nx = terminal.nx();
    let dx = terminal.dx();
    let period = terminal.period();
    let times: Vec<T> = (0..=nt)
        .map(|m| horizon * T::of(m as f64) / T::of(nt as f64))
        .collect();
    let mut values = vec![T::zero(); (nt + 1) * nx];
    values[nt * nx..].copy_from_slice(terminal.values());

    let mut march = March {
        v: terminal.values().to_vec(),
        scratch: vec![T::zero(); nx],
        substeps: 0,
        clamp_events: 0,
    };
    for m in (0..nt).rev() {
        march.run(eq, times[m + 1], times[m], dx, period, config)?;
        values[m * nx..(m + 1) * nx].copy_from_slice(&march.v);
    }
    Ok(Solution {
        field: SpaceTimeField::new(nx, dx, times, values)?,
        substeps: march.substeps,
        clamp_events: march.clamp_events,
    })
}

/// Pointwise discrete residual of the scheme on a space-time field, one row
/// per interior-in-time level (time difference against the next level).
pub fn residual<T: Real>(field: &SpaceTimeField<T>, eq: &EquationSpec<T>) -> Result<SpaceTimeField<T>> {
    let nx = field.nx();
    let dx = field.dx();
    let period = field.period();
    let nt = field.nt();
    let dt = field.dt();
    let clamp = T::infinity();
    let mut out = vec![T::zero(); (nt - 1) * nx];
    for m in 0..nt - 1 {
        let upper = field.slice(m + 1);
        let st = Stencil::new(upper, dx)?;
        let t = field.times()[m + 1];
        for i in 0..nx {
            let x = T::of(i as f64) * dx;
            let vt = (field.at(m + 1, i) - field.at(m, i)) / dt;
            out[m * nx + i] = -vt + rhs_at(eq, &st, i, x, t, period, clamp);
        }
    }
    SpaceTimeField::new(nx, dx, field.times()[..nt - 1].to_vec(), out)
}

/// Residual of an extremal equation evaluated with the reference operators
/// (full jump family, central-difference compensator) instead of the
/// marching scheme's monotone surrogates. Meant for fields that were not
/// produced by the solver, where consistency matters more than
/// monotonicity.
pub fn reference_residual<T: Real>(
    field: &SpaceTimeField<T>,
    eq: &EquationSpec<T>,
) -> Result<SpaceTimeField<T>> {
    let (sign_lower, coef_h, source) = match eq.variant {
        Variant::ExtremalLower => (true, eq.params.delta(), eq.params.delta()),
        Variant::ExtremalUpper => (false, T::one() / eq.params.delta(), -eq.params.delta()),
        _ => {
            return Err(Error::Config(
                "reference residual supports the extremal variants only".into(),
            ))
        }
    };
    let delta = eq.params.delta();
    let q = eq.params.q();
    let nx = field.nx();
    let nt = field.nt();
    let dt = field.dt();
    let mut out = vec![T::zero(); (nt - 1) * nx];
    for m in 0..nt - 1 {
        let slice = field.slice_grid(m + 1);
        for i in 0..nx {
            let grad = slice.central_gradient(i);
            let nonlocal = if sign_lower {
                crate::extremal::extremal_lower(&slice, grad, i)?
            } else {
                crate::extremal::extremal_upper(&slice, grad, i)?
            };
            let ii = i as isize;
            let back = (slice.value(ii) - slice.value(ii - 1)) / field.dx();
            let fwd = (slice.value(ii + 1) - slice.value(ii)) / field.dx();
            let slope = back.max(-fwd).max(T::zero());
            let vt = (field.at(m + 1, i) - field.at(m, i)) / dt;
            out[m * nx + i] = -vt - delta * nonlocal + coef_h * pow_pos(slope, q) + source;
        }
    }
    SpaceTimeField::new(nx, field.dx(), field.times()[..nt - 1].to_vec(), out)
}

/// Result of the exact discrete comparison check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ComparisonReport<T> {
    pub preserved: bool,
    pub min_gap: T,
}

/// Solve two ordered terminal data with a shared step sequence and check the
/// ordering at every substep. A `false` verdict is a scheme bug.
pub fn comparison_test<T: Real>(
    terminal_lo: &GridFunction<T>,
    terminal_hi: &GridFunction<T>,
    eq: &EquationSpec<T>,
    config: &SolverConfig<T>,
) -> Result<ComparisonReport<T>> {
    if terminal_lo.nx() != terminal_hi.nx() {
        return Err(Error::Config("terminal grids differ".into()));
    }
    for (a, b) in terminal_lo.values().iter().zip(terminal_hi.values()) {
        if a > b {
            return Err(Error::InvalidParameter(
                "terminal data not ordered lo <= hi".into(),
            ));
        }
    }
    let dx = terminal_lo.dx();
    let period = terminal_lo.period();
    let horizon = eq.params.horizon();
    let mut lo = terminal_lo.values().to_vec();
    let mut hi = terminal_hi.values().to_vec();
    let mut scratch_lo = lo.clone();
    let mut scratch_hi = hi.clone();
    let mut min_gap = T::infinity();
    for (a, b) in lo.iter().zip(&hi) {
        min_gap = min_gap.min(*b - *a);
    }
    let mut t = horizon;
    let mut steps = 0usize;
    while t > T::of(1e-14) {
        let range_of = |v: &[T]| {
            let mut l = v[0];
            let mut h = v[0];
            for &x in v {
                l = l.min(x);
                h = h.max(x);
            }
            h - l
        };
        let clamp = (config.clamp_factor * range_of(&lo).max(range_of(&hi)) / dx).max(T::one());
        let g = max_one_sided_diff(&lo, dx)
            .max(max_one_sided_diff(&hi, dx))
            .min(clamp);
        let dt = (config.cfl_safety / diag_bound(eq, dx, g)).min(t);
        step_into(eq, &lo, t, dt, dx, period, clamp, &mut scratch_lo)?;
        step_into(eq, &hi, t, dt, dx, period, clamp, &mut scratch_hi)?;
        std::mem::swap(&mut lo, &mut scratch_lo);
        std::mem::swap(&mut hi, &mut scratch_hi);
        for (a, b) in lo.iter().zip(&hi) {
            min_gap = min_gap.min(*b - *a);
        }
        t -= dt;
        steps += 1;
        if steps > config.max_steps {
            return Err(Error::Numerical("step budget exhausted".into()));
        }
    }
    Ok(ComparisonReport {
        preserved: min_gap >= T::zero(),
        min_gap,
    })
}

/// General solution sandwiched between the two extremal solutions.
#[derive(Clone, Debug)]
pub struct SandwichReport<T> {
    pub general: Solution<T>,
    pub lower_envelope: Solution<T>,
    pub upper_envelope: Solution<T>,
    /// worst `lower - general` (positive means violation)
    pub lower_violation: T,
    /// worst `general - upper` (positive means violation)
    pub upper_violation: T,
    pub slack: T,
    pub ok: bool,
}

/// Solve a general equation together with the extremal pair on the same
/// data; the reduction behind the uniform regularity estimate demands
/// `lower <= v <= upper` up to scheme slack.
pub fn sandwich_solutions<T: Real>(
    eq: &EquationSpec<T>,
    terminal: &GridFunction<T>,
    config: &SolverConfig<T>,
    slack_coeff: T,
) -> Result<SandwichReport<T>> {
    let general = solve_terminal(eq, terminal, config)?;
    let lower_eq = EquationSpec::new(Variant::ExtremalLower, eq.params, terminal.period())?;
    let upper_eq = EquationSpec::new(Variant::ExtremalUpper, eq.params, terminal.period())?;
    let lower = solve_terminal(&lower_eq, terminal, config)?;
    let upper = solve_terminal(&upper_eq, terminal, config)?;
    let dt = general.field.dt();
    let dx = terminal.dx();
    let slack = slack_coeff * (dt + dx);
    let mut lower_violation = T::neg_infinity();
    let mut upper_violation = T::neg_infinity();
    for idx in 0..general.field.nt() * terminal.nx() {
        let m = idx / terminal.nx();
        let i = idx % terminal.nx();
        let v = general.field.at(m, i);
        lower_violation = lower_violation.max(lower.field.at(m, i) - v);
        upper_violation = upper_violation.max(v - upper.field.at(m, i));
    }
    let ok = lower_violation <= slack && upper_violation <= slack;
    Ok(SandwichReport {
        general,
        lower_envelope: lower,
        upper_envelope: upper,
        lower_violation,
        upper_violation,
        slack,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{JumpMap, LevyMeasureSpec};

    fn params() -> StructureParams<f64> {
        StructureParams::new(1.0, 4.0, 1.0, 0.25, 0.05).unwrap()
    }

    fn config(nt: usize) -> SolverConfig<f64> {
        SolverConfig::new(nt)
    }

    fn cosine_terminal(nx: usize, amp: f64) -> GridFunction<f64> {
        GridFunction::from_fn(nx, 2.0, |x| amp * (std::f64::consts::PI * x).cos()).unwrap()
    }

    #[test]
    fn constant_terminal_exact_solutions() {
        let pr = params();
        let term = GridFunction::from_fn(32, 2.0, |_| 0.4).unwrap();
        let cfg = config(8);
        let lo = solve_terminal(
            &EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap(),
            &term,
            &cfg,
        )
        .unwrap();
        let hi = solve_terminal(
            &EquationSpec::new(Variant::ExtremalUpper, pr, 2.0).unwrap(),
            &term,
            &cfg,
        )
        .unwrap();
        for m in 0..lo.field.nt() {
            let t = lo.field.times()[m];
            for i in 0..term.nx() {
                let exact_lo = 0.4 - pr.delta() * (pr.horizon() - t);
                let exact_hi = 0.4 + pr.delta() * (pr.horizon() - t);
                assert!((lo.field.at(m, i) - exact_lo).abs() < 1e-12);
                assert!((hi.field.at(m, i) - exact_hi).abs() < 1e-12);
            }
        }
        assert_eq!(lo.clamp_events, 0);
    }

    #[test]
    fn residual_vanishes_on_exact_constant_solution() {
        let pr = params();
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let nx = 16;
        let nt = 6;
        let times: Vec<f64> = (0..=nt).map(|m| 0.25 * m as f64 / nt as f64).collect();
        let mut values = vec![0.0; (nt + 1) * nx];
        for (m, &t) in times.iter().enumerate() {
            for i in 0..nx {
                values[m * nx + i] = 0.4 - 1.0 * (0.25 - t);
            }
        }
        let field = SpaceTimeField::new(nx, 2.0 / nx as f64, times, values).unwrap();
        let r = residual(&field, &eq).unwrap();
        for m in 0..r.nt() {
            for i in 0..nx {
                assert!(r.at(m, i).abs() < 1e-10, "residual {}", r.at(m, i));
            }
        }
    }

    #[test]
    fn residual_small_on_solver_output_and_spikes_under_perturbation() {
        let pr = params();
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let term = cosine_terminal(64, 0.5);
        let cfg = config(64);
        let sol = solve_terminal(&eq, &term, &cfg).unwrap();
        let r = residual(&sol.field, &eq).unwrap();
        let dt = sol.field.dt();
        let dx = term.dx();
        // interior times: the backward transient hugging t = T is excluded
        let interior = r.nt() - r.nt() / 8;
        let mut worst: f64 = 0.0;
        for m in 0..interior {
            for i in 0..term.nx() {
                worst = worst.max(r.at(m, i).abs());
            }
        }
        assert!(worst <= 10.0 * (dt + dx), "residual {worst} vs {}", 10.0 * (dt + dx));

        // perturb one interior node: the residual there must spike ~ eps/dt
        let eps = 1e-3;
        let mut values: Vec<f64> = Vec::new();
        for m in 0..sol.field.nt() {
            values.extend_from_slice(sol.field.slice(m));
        }
        let (pm, pi) = (sol.field.nt() / 2, 20usize);
        values[pm * term.nx() + pi] += eps;
        let per = SpaceTimeField::new(term.nx(), dx, sol.field.times().to_vec(), values).unwrap();
        let rp = residual(&per, &eq).unwrap();
        // the row whose time difference reads the perturbed level from below
        let spike = (rp.at(pm, pi) - r.at(pm, pi)).abs();
        assert!(
            (spike - eps / dt).abs() < 0.1 * eps / dt,
            "spike {spike} vs eps/dt {}",
            eps / dt
        );
    }

    #[test]
    fn self_convergence_on_smooth_terminal() {
        let pr = params();
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let mut sup_errors = Vec::new();
        let fine_cfg = config(128);
        let fine = solve_terminal(&eq, &cosine_terminal(256, 0.5), &fine_cfg).unwrap();
        for nx in [64usize, 128] {
            let sol = solve_terminal(&eq, &cosine_terminal(nx, 0.5), &config(128)).unwrap();
            let stride = 256 / nx;
            let mut err: f64 = 0.0;
            for m in 0..sol.field.nt() {
                for i in 0..nx {
                    err = err.max((sol.field.at(m, i) - fine.field.at(m, i * stride)).abs());
                }
            }
            sup_errors.push(err);
        }
        assert!(
            sup_errors[0] / sup_errors[1] >= 1.5,
            "errors {sup_errors:?} did not contract"
        );
    }

    #[test]
    fn linfty_bound_from_constant_solutions() {
        let pr = params();
        for variant in [Variant::ExtremalLower, Variant::ExtremalUpper] {
            let eq = EquationSpec::new(variant, pr, 2.0).unwrap();
            let term = cosine_terminal(64, 0.9);
            let sol = solve_terminal(&eq, &term, &config(32)).unwrap();
            for m in 0..sol.field.nt() {
                let t = sol.field.times()[m];
                let cap = 0.9 + pr.delta() * (pr.horizon() - t) + 1e-12;
                for i in 0..term.nx() {
                    assert!(sol.field.at(m, i).abs() <= cap);
                }
            }
        }
    }

    #[test]
    fn constant_in_space_stays_constant() {
        let pr = params();
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let term = GridFunction::from_fn(32, 2.0, |_| -0.3).unwrap();
        let sol = solve_terminal(&eq, &term, &config(16)).unwrap();
        for m in 0..sol.field.nt() {
            let v0 = sol.field.at(m, 0);
            for i in 0..32 {
                assert_eq!(sol.field.at(m, i), v0);
            }
        }
    }

    #[test]
    fn comparison_identical_terminals_equal() {
        let pr = params();
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let t1 = cosine_terminal(48, 0.5);
        let rep = comparison_test(&t1, &t1, &eq, &config(16)).unwrap();
        assert!(rep.preserved);
        assert_eq!(rep.min_gap, 0.0);
    }

    #[test]
    fn comparison_shifted_pair_preserved() {
        let pr = params();
        for variant in [Variant::ExtremalLower, Variant::ExtremalUpper] {
            let eq = EquationSpec::new(variant, pr, 2.0).unwrap();
            let hi = cosine_terminal(48, 0.45);
            let lo = GridFunction::new(
                hi.values().iter().map(|v| v - 0.1).collect(),
                hi.dx(),
            )
            .unwrap();
            let rep = comparison_test(&lo, &hi, &eq, &config(16)).unwrap();
            assert!(rep.preserved);
            assert!(rep.min_gap >= 0.0);
        }
    }

    #[test]
    fn update_map_monotone_on_random_stencils() {
        // raise one stencil entry: the updated center value must not decrease
        let pr = params();
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let mut state = 42u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let nx = 32;
        let dx = 2.0 / nx as f64;
        for _ in 0..200 {
            let v: Vec<f64> = (0..nx).map(|_| 0.5 * next()).collect();
            let clamp = 2.0 * 1.0 / dx;
            let g = max_one_sided_diff(&v, dx).min(clamp);
            let dt = 0.8 / diag_bound(&eq, dx, g);
            let mut out_base = vec![0.0; nx];
            step_into(&eq, &v, 0.2, dt, dx, 2.0, clamp, &mut out_base).unwrap();
            let node = (next().abs() * nx as f64) as usize % nx;
            let mut bumped = v.clone();
            bumped[node] += 0.05;
            let g2 = max_one_sided_diff(&bumped, dx).min(clamp);
            let dt2 = dt.min(0.8 / diag_bound(&eq, dx, g2));
            let mut a = vec![0.0; nx];
            let mut b = vec![0.0; nx];
            step_into(&eq, &v, 0.2, dt2, dx, 2.0, clamp, &mut a).unwrap();
            step_into(&eq, &bumped, 0.2, dt2, dx, 2.0, clamp, &mut b).unwrap();
            for i in 0..nx {
                assert!(
                    b[i] >= a[i] - 1e-13,
                    "monotonicity violated at {i}: {} vs {}",
                    b[i],
                    a[i]
                );
            }
        }
    }

    #[test]
    fn sandwich_extremal_lower_is_tight() {
        let pr = params();
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let rep = sandwich_solutions(&eq, &cosine_terminal(48, 0.5), &config(24), 10.0).unwrap();
        assert!(rep.ok);
        assert!(rep.lower_violation.abs() < 1e-12, "{}", rep.lower_violation);
    }

    #[test]
    fn sandwich_holds_for_degenerate_checkerboard() {
        let pr = params();
        let term = cosine_terminal(48, 0.5);
        let eq = EquationSpec::new(
            Variant::LocalGeneral {
                diffusion: CoeffField::Checkerboard {
                    cell: 4.0 * term.dx(),
                    low: 0.0,
                    high: pr.delta(),
                },
                hamiltonian_scale: CoeffField::Constant(1.0),
                source: CoeffField::Constant(0.0),
            },
            pr,
            2.0,
        )
        .unwrap();
        let rep = sandwich_solutions(&eq, &term, &config(24), 10.0).unwrap();
        assert!(
            rep.ok,
            "violations {} / {} vs slack {}",
            rep.lower_violation, rep.upper_violation, rep.slack
        );
    }

    #[test]
    fn sandwich_holds_for_nonlocal_catalog() {
        let pr = params();
        let term = cosine_terminal(48, 0.5);
        let measure = LevyMeasureSpec::new(1, 1.0, 0.5).unwrap();
        let scale = (pr.delta() / measure.second_moment()).sqrt() * 0.9;
        let integral = LevyIntegralSpec::new(
            vec![vec![
                JumpMap::Scaled { c: scale },
                JumpMap::Capped { c: scale, cap: 0.5 },
            ]],
            measure,
            32,
            term.dx() / 2.0,
            2.0,
            pr.horizon(),
        )
        .unwrap();
        let eq = EquationSpec::new(
            Variant::NonlocalGeneral {
                integral,
                hamiltonian_scale: CoeffField::Constant(1.0),
                source: CoeffField::Constant(0.0),
            },
            pr,
            2.0,
        )
        .unwrap();
        let rep = sandwich_solutions(&eq, &term, &config(24), 10.0).unwrap();
        assert!(
            rep.ok,
            "violations {} / {} vs slack {}",
            rep.lower_violation, rep.upper_violation, rep.slack
        );
    }

    #[test]
    fn step_budget_exhaustion_aborts_with_diagnostic() {
        let pr = params();
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let mut cfg = config(16);
        cfg.max_steps = 5;
        let err = solve_terminal(&eq, &cosine_terminal(64, 0.5), &cfg).unwrap_err();
        assert!(err.to_string().contains("step budget"), "{err}");
    }

    #[test]
    fn oversized_terminal_is_rejected() {
        let pr = params(); // sup bound 1
        let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
        let term = GridFunction::from_fn(32, 2.0, |_| 1.5).unwrap();
        assert!(solve_terminal(&eq, &term, &config(8)).is_err());
    }

    #[test]
    fn structure_probe_rejects_out_of_class_equations() {
        let pr = params();
        let bad = EquationSpec::new(
            Variant::LocalGeneral {
                diffusion: CoeffField::Constant(1.5), // exceeds delta = 1
                hamiltonian_scale: CoeffField::Constant(1.0),
                source: CoeffField::Constant(0.0),
            },
            pr,
            2.0,
        );
        assert!(bad.is_err());
    }
}
