//! Discrete extremal nonlocal operators and the local eigenvalue maps.
//!
//! The lower/upper operators scan normalized second difference quotients
//! `(phi(x + lb) - phi(x) - <Dphi(x), lb>)/|b|^2` over the grid-representable
//! jump family `l = j/k`, `|b| = k dx`, `1 <= j <= k <= K`, both signs, with
//! `K = floor(1/dx)`. For a fixed shift the quotient is monotone in the base
//! length, so only `k = j` and `k = K` can be extremal and each node costs
//! `O(K)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::real::Real;

/// Jump pair `(lambda, b)` attaining a discrete extremum, with its value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtremalPoint<T> {
    pub lambda: T,
    pub base: T,
    pub value: T,
}

fn max_shift<T: Real>(dx: T) -> Result<usize> {
    let k = (T::one() / dx).floor().to64() as usize;
    if k < 1 {
        return Err(Error::Config(
            "mesh coarser than the unit jump range (dx > 1)".into(),
        ));
    }
    Ok(k)
}

fn scan<T: Real, const LOWER: bool>(
    phi: &GridFunction<T>,
    gradient: T,
    node: usize,
) -> Result<ExtremalPoint<T>> {
    let dx = phi.dx();
    let k_max = max_shift(dx)?;
    let den_far = {
        let b = T::of(k_max as f64) * dx;
        b * b
    };
    let center = phi.value(node as isize);
    let mut best: Option<ExtremalPoint<T>> = None;
    for sign in [T::one(), -T::one()] {
        for j in 1..=k_max {
            let shift = sign * T::of(j as f64) * dx;
            let num = phi.value(node as isize + (sign * T::of(j as f64)).to64() as isize)
                - center
                - shift * gradient;
            // numerator >= 0: inf wants the largest base, sup the smallest
            let wide = if LOWER { num >= T::zero() } else { num < T::zero() };
            let (den, k) = if wide {
                (den_far, k_max)
            } else {
                let b = T::of(j as f64) * dx;
                (b * b, j)
            };
            let value = num / den;
            let better = match &best {
                None => true,
                Some(b) => {
                    if LOWER {
                        value < b.value
                    } else {
                        value > b.value
                    }
                }
            };
            if better {
                best = Some(ExtremalPoint {
                    lambda: T::of(j as f64) / T::of(k as f64),
                    base: sign * T::of(k as f64) * dx,
                    value,
                });
            }
        }
    }
    Ok(best.expect("k_max >= 1 guarantees a candidate"))
}

/// Discrete infimum operator `M^-` at a node, with the touching gradient
/// supplied by the caller.
pub fn extremal_lower<T: Real>(phi: &GridFunction<T>, gradient: T, node: usize) -> Result<T> {
    Ok(scan::<T, true>(phi, gradient, node)?.value)
}

/// Discrete supremum operator `M^+` at a node.
pub fn extremal_upper<T: Real>(phi: &GridFunction<T>, gradient: T, node: usize) -> Result<T> {
    Ok(scan::<T, false>(phi, gradient, node)?.value)
}

/// `M^-` together with its minimizing jump pair.
pub fn extremal_lower_argmin<T: Real>(
    phi: &GridFunction<T>,
    gradient: T,
    node: usize,
) -> Result<ExtremalPoint<T>> {
    scan::<T, true>(phi, gradient, node)
}

/// `M^+` together with its maximizing jump pair.
pub fn extremal_upper_argmax<T: Real>(
    phi: &GridFunction<T>,
    gradient: T,
    node: usize,
) -> Result<ExtremalPoint<T>> {
    scan::<T, false>(phi, gradient, node)
}

/// Dense two-parameter reference evaluation of the continuum quotient for a
/// closed-form `phi`, used to validate consistency of the grid scan.
pub fn extremal_oracle<T: Real>(
    phi: impl Fn(T) -> T,
    dphi: T,
    x: T,
    resolution: usize,
    lower: bool,
) -> T {
    let mut best = if lower {
        T::infinity()
    } else {
        T::neg_infinity()
    };
    let m = resolution;
    for li in 1..=m {
        let lambda = T::of(li as f64) / T::of(m as f64);
        for bi in 1..=m {
            for sign in [T::one(), -T::one()] {
                let b = sign * T::of(bi as f64) / T::of(m as f64);
                let q = (phi(x + lambda * b) - phi(x) - lambda * b * dphi) / (b * b);
                if lower {
                    if q < best {
                        best = q;
                    }
                } else if q > best {
                    best = q;
                }
            }
        }
    }
    best
}

/// Symmetric matrix of dimension at most 3, stored as the upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix<T> {
    dim: usize,
    // row-major upper triangle: n=1 -> [a11]; n=2 -> [a11,a12,a22];
    // n=3 -> [a11,a12,a13,a22,a23,a33]
    upper: Vec<T>,
}

impl<T: Real> SymmetricMatrix<T> {
    pub fn new(dim: usize, upper: Vec<T>) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::Config("dimension must be 1, 2 or 3".into()));
        }
        if upper.len() != dim * (dim + 1) / 2 {
            return Err(Error::Config("upper triangle storage size mismatch".into()));
        }
        Ok(Self { dim, upper })
    }

    pub fn diagonal(entries: &[T]) -> Result<Self> {
        let dim = entries.len();
        let mut upper = vec![T::zero(); dim * (dim + 1) / 2];
        let mut idx = 0;
        for (i, &d) in entries.iter().enumerate() {
            upper[idx] = d;
            idx += dim - i;
        }
        Self::new(dim, upper)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let mut k = 0;
        for row in 0..r {
            k += self.dim - row;
        }
        self.upper[k + (c - r)]
    }

    /// Eigenvalues in ascending order, by closed form.
    pub fn eigenvalues(&self) -> Vec<T> {
        match self.dim {
            1 => vec![self.upper[0]],
            2 => {
                let (a, b, c) = (self.upper[0], self.upper[1], self.upper[2]);
                let mean = (a + c) / T::of(2.0);
                let r = ((a - c) * (a - c) / T::of(4.0) + b * b).sqrt();
                vec![mean - r, mean + r]
            }
            3 => {
                // trigonometric solution of the characteristic cubic
                let a11 = self.entry(0, 0);
                let a22 = self.entry(1, 1);
                let a33 = self.entry(2, 2);
                let a12 = self.entry(0, 1);
                let a13 = self.entry(0, 2);
                let a23 = self.entry(1, 2);
                let p1 = a12 * a12 + a13 * a13 + a23 * a23;
                let tr = a11 + a22 + a33;
                let qm = tr / T::of(3.0);
                if p1 == T::zero() {
                    let mut e = vec![a11, a22, a33];
                    e.sort_by(|x, y| x.partial_cmp(y).unwrap());
                    return e;
                }
                let d1 = a11 - qm;
                let d2 = a22 - qm;
                let d3 = a33 - qm;
                let p2 = d1 * d1 + d2 * d2 + d3 * d3 + T::of(2.0) * p1;
                let pp = (p2 / T::of(6.0)).sqrt();
                // det of (A - q I)/p
                let b11 = d1 / pp;
                let b22 = d2 / pp;
                let b33 = d3 / pp;
                let b12 = a12 / pp;
                let b13 = a13 / pp;
                let b23 = a23 / pp;
                let det = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13)
                    + b13 * (b12 * b23 - b22 * b13);
                let half = det / T::of(2.0);
                let phi = if half <= -T::one() {
                    T::PI() / T::of(3.0)
                } else if half >= T::one() {
                    T::zero()
                } else {
                    half.acos() / T::of(3.0)
                };
                let two = T::of(2.0);
                let e1 = qm + two * pp * phi.cos();
                let e3 = qm + two * pp * (phi + two * T::PI() / T::of(3.0)).cos();
                let e2 = tr - e1 - e3;
                let mut e = vec![e1, e2, e3];
                e.sort_by(|x, y| x.partial_cmp(y).unwrap());
                e
            }
            _ => unreachable!(),
        }
    }
}

/// Extremes of `z -> <Xz, z>` over the closed unit ball: `z = 0` pins them
/// to `(min(0, lambda_min), max(0, lambda_max))`.
pub fn eigen_extremes<T: Real>(x: &SymmetricMatrix<T>) -> (T, T) {
    let e = x.eigenvalues();
    let lo = e[0];
    let hi = e[e.len() - 1];
    (lo.min(T::zero()), hi.max(T::zero()))
}
