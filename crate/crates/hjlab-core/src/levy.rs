//! Radial truncated-stable jump measure and the example integral operators.
//!
//! The measure has density `c |e|^(-N-s)` on the unit ball, which gives a
//! closed-form tail and an exact inverse tail. That inverse is what makes
//! the controlled-martingale construction exact: a jump set of prescribed
//! mass `delta/|b|^2` always exists because the tail diverges at the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::real::{pow_pos, Real};

/// Truncated-stable radial jump measure on the unit ball.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LevyMeasureSpec<T> {
    pub dimension: usize,
    /// stability index `s` in `(0, 2)`
    pub stability: T,
    /// intensity `c > 0`
    pub intensity: T,
}

fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("dimension validated at construction"),
    }
}

impl<T: Real> LevyMeasureSpec<T> {
    pub fn new(dimension: usize, stability: T, intensity: T) -> Result<Self> {
        if dimension == 0 || dimension > 3 {
            return Err(Error::Config("dimension must be 1, 2 or 3".into()));
        }
        if !(stability > T::zero() && stability < T::of(2.0)) {
            return Err(Error::InvalidParameter(
                "stability index must lie in (0, 2)".into(),
            ));
        }
        if !(intensity > T::zero()) {
            return Err(Error::InvalidParameter("intensity must be positive".into()));
        }
        Ok(Self {
            dimension,
            stability,
            intensity,
        })
    }

    fn surface(&self) -> T {
        T::of(sphere_area(self.dimension))
    }

    /// Mass outside radius `r`: `nu(B \ B_r) = c S (r^-s - 1)/s`, zero at 1,
    /// diverging as `r -> 0`.
    pub fn tail(&self, r: T) -> T {
        if r >= T::one() {
            return T::zero();
        }
        let s = self.stability;
        self.intensity * self.surface() * (pow_pos(r, -s) - T::one()) / s
    }

    /// `inf { r > 0 : tail(r) <= y }` in closed form; domain error for y <= 0.
    pub fn inverse_tail(&self, y: T) -> Result<T> {
        if !(y > T::zero()) {
            return Err(Error::Domain("inverse tail needs y > 0".into()));
        }
        let s = self.stability;
        let r = pow_pos(
            T::one() + s * y / (self.intensity * self.surface()),
            -T::one() / s,
        );
        Ok(r.min(T::one()))
    }

    /// `int_B |e|^2 dnu = c S / (2 - s)`, finite for s < 2.
    pub fn second_moment(&self) -> T {
        self.intensity * self.surface() / (T::of(2.0) - self.stability)
    }

    /// `int_B |e| dnu`, finite for s < 1, else over `(r, 1]` only.
    pub fn first_moment_above(&self, r: T) -> T {
        let s = self.stability;
        let cs = self.intensity * self.surface();
        if (s - T::one()).abs() < T::of(1e-12) {
            cs * (T::one() / r).ln()
        } else {
            cs * (T::one() - pow_pos(r, T::one() - s)) / (T::one() - s)
        }
    }

    /// Second moment carried by radii below `r`.
    pub fn second_moment_below(&self, r: T) -> T {
        let s = self.stability;
        self.intensity * self.surface() * pow_pos(r, T::of(2.0) - s) / (T::of(2.0) - s)
    }

    /// Radial quadrature: shells of exact mass with nodes placed so each
    /// shell reproduces its own second moment, plus one inner pseudo-shell
    /// matching the second moment carried below `r_min` (the mass there is
    /// infinite, the curvature action is not).
    pub fn quadrature(&self, shells: usize, r_min: T) -> LevyQuadrature<T> {
        assert!(shells >= 2, "need at least two shells");
        let s = self.stability;
        let cs = self.intensity * self.surface();
        let ratio = pow_pos(r_min, -T::one() / T::of(shells as f64));
        let mut nodes = Vec::with_capacity(shells + 1);
        let mut r_lo = r_min;
        for _ in 0..shells {
            let r_hi = (r_lo * ratio).min(T::one());
            let mass = self.tail(r_lo) - self.tail(r_hi);
            // node radius reproducing the shell second moment
            let sm = cs * (pow_pos(r_hi, T::of(2.0) - s) - pow_pos(r_lo, T::of(2.0) - s))
                / (T::of(2.0) - s);
            if mass > T::zero() && sm > T::zero() {
                nodes.push(QuadNode {
                    radius: (sm / mass).sqrt(),
                    mass,
                });
            }
            r_lo = r_hi;
        }
        // inner pseudo-shell: finite mass placed at r_min/2 with the exact
        // small-ball second moment
        let inner_sm = self.second_moment_below(r_min);
        let inner_radius = r_min / T::of(2.0);
        if inner_sm > T::zero() {
            nodes.push(QuadNode {
                radius: inner_radius,
                mass: inner_sm / (inner_radius * inner_radius),
            });
        }
        LevyQuadrature { nodes }
    }
}

/// One radial quadrature node: all its mass concentrated at `radius`.
#[derive(Clone, Copy, Debug)]
pub struct QuadNode<T> {
    pub radius: T,
    pub mass: T,
}

/// Discretization of the radial measure as weighted point masses; in one
/// dimension each node splits evenly over the two signs.
#[derive(Clone, Debug)]
pub struct LevyQuadrature<T> {
    pub nodes: Vec<QuadNode<T>>,
}

impl<T: Real> LevyQuadrature<T> {
    pub fn total_mass(&self) -> T {
        self.nodes.iter().map(|n| n.mass).sum()
    }

    pub fn second_moment(&self) -> T {
        self.nodes.iter().map(|n| n.mass * n.radius * n.radius).sum()
    }
}

/// Growth class a jump map declares and is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GrowthBound {
    /// `|j(x,t,e)| <= C (|e| ^ 1)`
    BoundedByUnit,
    /// `|j(x,t,e)| <= C |e|`
    Linear,
}

/// Named jump maps `j_{alpha,beta}(x, t, e)` in one dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum JumpMap<T> {
    /// `j = c e`
    Scaled { c: T },
    /// `j = sign(e) min(c|e|, cap)`
    Capped { c: T, cap: T },
    /// `j = c e (1 + amp sin(2 pi x / L)) / (1 + amp)`, `|amp| < 1`
    SpaceModulated { c: T, amp: T },
    /// `j = c e (1 + amp cos(2 pi t / horizon)) / (1 + amp)`
    TimeModulated { c: T, amp: T, horizon: T },
}

impl<T: Real> JumpMap<T> {
    pub fn eval(&self, x: T, t: T, e: T, period: T) -> T {
        match self {
            JumpMap::Scaled { c } => *c * e,
            JumpMap::Capped { c, cap } => {
                let m = (*c * e.abs()).min(*cap);
                m * e.signum()
            }
            JumpMap::SpaceModulated { c, amp } => {
                let two_pi = T::of(2.0) * T::PI();
                *c * e * (T::one() + *amp * (two_pi * x / period).sin()) / (T::one() + amp.abs())
            }
            JumpMap::TimeModulated { c, amp, horizon } => {
                let two_pi = T::of(2.0) * T::PI();
                *c * e * (T::one() + *amp * (two_pi * t / *horizon).cos()) / (T::one() + amp.abs())
            }
        }
    }

    pub fn growth(&self) -> (GrowthBound, T) {
        match self {
            JumpMap::Scaled { c } => (GrowthBound::Linear, c.abs()),
            JumpMap::Capped { c, cap: _ } => (GrowthBound::BoundedByUnit, c.abs()),
            JumpMap::SpaceModulated { c, .. } => (GrowthBound::Linear, c.abs()),
            JumpMap::TimeModulated { c, .. } => (GrowthBound::Linear, c.abs()),
        }
    }

    /// Check the declared growth bound on sampled jump sizes.
    pub fn respects_growth(&self, period: T, horizon: T) -> bool {
        let (kind, c) = self.growth();
        let samples = 64;
        for ei in 1..=samples {
            let e = T::of(ei as f64) / T::of(samples as f64);
            for xi in 0..8 {
                let x = period * T::of(xi as f64) / T::of(8.0);
                for ti in 0..4 {
                    let t = horizon * T::of(ti as f64) / T::of(4.0);
                    for sign in [T::one(), -T::one()] {
                        let j = self.eval(x, t, sign * e, period).abs();
                        let cap = match kind {
                            GrowthBound::BoundedByUnit => c * e.min(T::one()),
                            GrowthBound::Linear => c * e,
                        };
                        if j > cap * (T::one() + T::of(1e-12)) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Inf-sup catalog of jump maps with its measure and quadrature.
#[derive(Clone, Debug)]
pub struct LevyIntegralSpec<T> {
    /// outer index: inf over rows; inner: sup over columns
    pub catalog: Vec<Vec<JumpMap<T>>>,
    pub measure: LevyMeasureSpec<T>,
    pub quad: LevyQuadrature<T>,
}

impl<T: Real> LevyIntegralSpec<T> {
    pub fn new(
        catalog: Vec<Vec<JumpMap<T>>>,
        measure: LevyMeasureSpec<T>,
        shells: usize,
        r_min: T,
        period: T,
        horizon: T,
    ) -> Result<Self> {
        if catalog.is_empty() || catalog.iter().any(|row| row.is_empty()) {
            return Err(Error::Config("jump catalog must be non-empty".into()));
        }
        for row in &catalog {
            for map in row {
                if !map.respects_growth(period, horizon) {
                    return Err(Error::InvalidParameter(
                        "jump map violates its declared growth bound".into(),
                    ));
                }
            }
        }
        let quad = measure.quadrature(shells, r_min);
        Ok(Self {
            catalog,
            measure,
            quad,
        })
    }

    /// Worst-case `int |j|^2 dnu` over the catalog, the constant that must
    /// stay below `delta` for the structure sandwich.
    pub fn max_second_moment(&self, period: T, horizon: T) -> T {
        let mut worst = T::zero();
        for row in &self.catalog {
            for map in row {
                for xi in 0..8 {
                    let x = period * T::of(xi as f64) / T::of(8.0);
                    for ti in 0..4 {
                        let t = horizon * T::of(ti as f64) / T::of(4.0);
                        let mut total = T::zero();
                        for node in &self.quad.nodes {
                            let half = node.mass / T::of(2.0);
                            for sign in [T::one(), -T::one()] {
                                let j = map.eval(x, t, sign * node.radius, period);
                                total += half * j * j;
                            }
                        }
                        if total > worst {
                            worst = total;
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Quadrature evaluation of the inf-sup integral operator at a grid node.
///
/// Jumps are split at `|e| = 1`; the measure here is supported inside the
/// ball, so the outside part carries zero mass and the gradient compensator
/// applies to every node.
pub fn levy_integral<T: Real>(
    spec: &LevyIntegralSpec<T>,
    phi: &GridFunction<T>,
    gradient: T,
    node: usize,
    t: T,
) -> T {
    let x = phi.node_x(node);
    let center = phi.value(node as isize);
    let period = phi.period();
    let dx = phi.dx();
    // jumps below the grid scale act through curvature: interpolating phi
    // there would charge the infinite small-ball mass with O(dx^2) noise
    let small = T::of(4.0) * dx;
    let curvature = {
        let i = node as isize;
        (phi.value(i + 1) + phi.value(i - 1) - T::of(2.0) * center) / (dx * dx)
    };
    let mut inf = T::infinity();
    for row in &spec.catalog {
        let mut sup = T::neg_infinity();
        for map in row {
            let mut total = T::zero();
            for qn in &spec.quad.nodes {
                let half = qn.mass / T::of(2.0);
                for sign in [T::one(), -T::one()] {
                    let e = sign * qn.radius;
                    let j = map.eval(x, t, e, period);
                    if j.abs() < small {
                        total += half * j * j * curvature / T::of(2.0);
                    } else {
                        total += half * (phi.sample(x + j) - center - gradient * j);
                    }
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
