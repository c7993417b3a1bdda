//! Periodic grid fields in one space dimension, with and without a time axis.

use crate::error::{Error, Result};
use crate::real::Real;

/// Samples of a periodic function on a uniform grid of `nx` nodes with mesh
/// `dx`; node `i` sits at `x = i dx` and the domain has length `nx * dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    values: Vec<T>,
    dx: T,
    period: T,
}

impl<T: Real> GridFunction<T> {
    pub fn new(values: Vec<T>, dx: T) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::Config("grid needs at least 4 nodes".into()));
        }
        if !(dx > T::zero()) {
            return Err(Error::Config("mesh size must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid values must be finite".into()));
        }
        let period = T::of(values.len() as f64) * dx;
        Ok(Self { values, dx, period })
    }

    /// Sample `f` at the nodes of a grid with `nx` nodes over `[0, length)`.
    pub fn from_fn(nx: usize, length: T, f: impl Fn(T) -> T) -> Result<Self> {
        let dx = length / T::of(nx as f64);
        let values = (0..nx).map(|i| f(T::of(i as f64) * dx)).collect();
        Self::new(values, dx)
    }

    pub fn nx(&self) -> usize {
        self.values.len()
    }
    pub fn dx(&self) -> T {
        self.dx
    }
    pub fn period(&self) -> T {
        self.period
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn node_x(&self, i: usize) -> T {
        T::of(i as f64) * self.dx
    }

    /// Node index wrapped periodically.
    pub fn wrap(&self, i: isize) -> usize {
        let n = self.values.len() as isize;
        (((i % n) + n) % n) as usize
    }

    pub fn value(&self, i: isize) -> T {
        self.values[self.wrap(i)]
    }

    /// Linear interpolation at an arbitrary point, wrapped periodically.
    pub fn sample(&self, x: T) -> T {
        let pos = x / self.dx;
        let base = pos.floor();
        let w = pos - base;
        let i = base.to64() as isize;
        let a = self.value(i);
        let b = self.value(i + 1);
        a + w * (b - a)
    }

    /// Central difference gradient at node `i`.
    pub fn central_gradient(&self, i: usize) -> T {
        let i = i as isize;
        (self.value(i + 1) - self.value(i - 1)) / (T::of(2.0) * self.dx)
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn oscillation(&self) -> T {
        let mut lo = self.values[0];
        let mut hi = self.values[0];
        for &v in &self.values {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        hi - lo
    }

    /// Shortest periodic distance between two points of the domain.
    pub fn periodic_distance(&self, a: T, b: T) -> T {
        let l = self.period;
        let mut d = (a - b).abs() % l;
        if d > l / T::of(2.0) {
            d = l - d;
        }
        d
    }
}

/// Space-time field on uniformly spaced output times; row `m` holds the
/// spatial slice at `times[m]`.
#[derive(Clone, Debug)]
pub struct SpaceTimeField<T> {
    nx: usize,
    dx: T,
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> SpaceTimeField<T> {
    pub fn new(nx: usize, dx: T, times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Config("need at least one time level".into()));
        }
        if values.len() != nx * times.len() {
            return Err(Error::Config("value storage does not match nx*nt".into()));
        }
        Ok(Self {
            nx,
            dx,
            times,
            values,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn dx(&self) -> T {
        self.dx
    }
    pub fn period(&self) -> T {
        T::of(self.nx as f64) * self.dx
    }
    pub fn nt(&self) -> usize {
        self.times.len()
    }
    pub fn times(&self) -> &[T] {
        &self.times
    }
    pub fn dt(&self) -> T {
        assert!(self.times.len() >= 2, "dt needs at least two levels");
        self.times[1] - self.times[0]
    }

    pub fn slice(&self, level: usize) -> &[T] {
        &self.values[level * self.nx..(level + 1) * self.nx]
    }

    pub fn slice_grid(&self, level: usize) -> GridFunction<T> {
        GridFunction::new(self.slice(level).to_vec(), self.dx).expect("slice is a valid grid")
    }

    pub fn at(&self, level: usize, node: usize) -> T {
        self.values[level * self.nx + node]
    }

    /// Index of the time level closest to `t`.
    pub fn level_of(&self, t: T) -> usize {
        let dt = self.dt();
        let m = ((t - self.times[0]) / dt).round().to64() as isize;
        m.clamp(0, self.times.len() as isize - 1) as usize
    }

    /// Linear interpolation in space at a fixed level.
    pub fn sample_at_level(&self, level: usize, x: T) -> T {
        let nx = self.nx as isize;
        let pos = x / self.dx;
        let base = pos.floor();
        let w = pos - base;
        let i = base.to64() as isize;
        let wrap = |k: isize| ((k % nx + nx) % nx) as usize;
        let a = self.at(level, wrap(i));
        let b = self.at(level, wrap(i + 1));
        a + w * (b - a)
    }

    pub fn oscillation(&self) -> T {
        let mut lo = self.values[0];
        let mut hi = self.values[0];
        for &v in &self.values {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_or_invalid_grids() {
        assert!(GridFunction::new(vec![0.0f64; 3], 0.1).is_err());
        assert!(GridFunction::new(vec![0.0f64; 8], 0.0).is_err());
        assert!(GridFunction::new(vec![f64::NAN; 8], 0.1).is_err());
    }

    #[test]
    fn period_is_nx_dx() {
        let g = GridFunction::new(vec![0.0f64; 10], 0.25).unwrap();
        assert!((g.period() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn wrap_and_sample() {
        let g = GridFunction::from_fn(8, 2.0f64, |x| x).unwrap();
        assert_eq!(g.wrap(-1), 7);
        assert_eq!(g.wrap(8), 0);
        // interpolation midway between node 1 and 2
        let dx = g.dx();
        assert!((g.sample(1.5 * dx) - 1.5 * dx).abs() < 1e-12);
        // sampling past the period wraps
        assert!((g.sample(2.0 + 0.25) - g.sample(0.25)).abs() < 1e-12);
    }

    #[test]
    fn periodic_distance_shortest_arc() {
        let g = GridFunction::new(vec![0.0f64; 8], 0.25).unwrap();
        assert!((g.periodic_distance(0.1, 1.9) - 0.2).abs() < 1e-12);
        assert!((g.periodic_distance(0.3, 0.8) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn space_time_levels() {
        let nx = 4;
        let times = vec![0.0f64, 0.5, 1.0];
        let values: Vec<f64> = (0..12).map(|k| k as f64).collect();
        let f = SpaceTimeField::new(nx, 0.5, times, values).unwrap();
        assert_eq!(f.slice(1), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(f.level_of(0.74), 1);
        assert_eq!(f.level_of(2.0), 2);
        assert!((f.sample_at_level(0, 0.25) - 0.5).abs() < 1e-12);
    }
}
