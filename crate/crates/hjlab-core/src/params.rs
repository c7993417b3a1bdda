//! Universal structure parameters and the dual constants they induce.
//!
//! Everything downstream reads `(delta, q, p, M, T, tau)` from here. The two
//! constants `C+` and `C-` are cached at construction together with the
//! conjugate exponent, and the Legendre/Young identities that make them
//! correct are exposed as checkable operations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{dot, norm, pow_pos, Real};

/// Conjugate exponent `p = q/(q-1)`; requires superquadratic `q > 2`.
pub fn conjugate_exponent<T: Real>(q: T) -> Result<T> {
    if !(q > T::of(2.0)) {
        return Err(Error::Domain(
            "structure condition requires q>2".to_string(),
        ));
    }
    Ok(q / (q - T::one()))
}

/// The universal data every estimate depends on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StructureParams<T> {
    delta: T,
    q: T,
    p: T,
    sup_bound: T,
    horizon: T,
    tail_time: T,
    c_plus: T,
    c_minus: T,
}

impl<T: Real> StructureParams<T> {
    pub fn new(delta: T, q: T, sup_bound: T, horizon: T, tail_time: T) -> Result<Self> {
        if !(delta >= T::one()) {
            return Err(Error::InvalidParameter("delta must be >= 1".into()));
        }
        let p = conjugate_exponent(q)?;
        if !(sup_bound > T::zero()) {
            return Err(Error::InvalidParameter("sup bound must be positive".into()));
        }
        if !(horizon > T::zero()) {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if !(tail_time > T::zero() && tail_time < horizon) {
            return Err(Error::InvalidParameter(
                "tail time must lie strictly inside (0, horizon)".into(),
            ));
        }
        // C+ = delta^(-p/q) / (p q^(p/q)),  C- = delta^(p/q) / (p q^(p/q)).
        let pq = p / q;
        let denom = p * pow_pos(q, pq);
        let c_plus = pow_pos(delta, -pq) / denom;
        let c_minus = pow_pos(delta, pq) / denom;
        Ok(Self {
            delta,
            q,
            p,
            sup_bound,
            horizon,
            tail_time,
            c_plus,
            c_minus,
        })
    }

    pub fn delta(&self) -> T {
        self.delta
    }
    pub fn q(&self) -> T {
        self.q
    }
    pub fn p(&self) -> T {
        self.p
    }
    pub fn sup_bound(&self) -> T {
        self.sup_bound
    }
    pub fn horizon(&self) -> T {
        self.horizon
    }
    pub fn tail_time(&self) -> T {
        self.tail_time
    }

    /// Running-cost constant of the lower extremal representation formula.
    pub fn c_plus(&self) -> T {
        self.c_plus
    }

    /// Value-function constant of the bridge supersolution.
    pub fn c_minus(&self) -> T {
        self.c_minus
    }
}

/// `c_plus` as a free operation.
pub fn c_plus<T: Real>(params: &StructureParams<T>) -> T {
    params.c_plus()
}

/// `c_minus` as a free operation; satisfies `c_minus = delta^(2p/q) c_plus`.
pub fn c_minus<T: Real>(params: &StructureParams<T>) -> T {
    params.c_minus()
}

/// Closed-form maximizer of `sup_z (-<z,xi> - C+|z|^p)`:
/// `z* = -(|xi|/(C+ p))^(1/(p-1)) xi/|xi|`, zero at `xi = 0`.
pub fn legendre_maximizer<T: Real>(xi: &[T], params: &StructureParams<T>) -> Vec<T> {
    let n = norm(xi);
    if n <= T::zero() {
        return vec![T::zero(); xi.len()];
    }
    let radius = pow_pos(
        n / (params.c_plus() * params.p()),
        T::one() / (params.p() - T::one()),
    );
    xi.iter().map(|&c| -radius * c / n).collect()
}

/// Closed-form value of `sup_z (-<z,xi> - C+|z|^p)` minus `delta |xi|^q`.
///
/// The contract is that this vanishes identically: the running cost
/// `C+|zeta|^p` is the Legendre dual of the superquadratic Hamiltonian
/// `delta |xi|^q`.
pub fn legendre_gap<T: Real>(xi: &[T], params: &StructureParams<T>) -> T {
    let n = norm(xi);
    if n <= T::zero() {
        return T::zero();
    }
    let zeta = legendre_maximizer(xi, params);
    let value = -dot(&zeta, xi) - params.c_plus() * pow_pos(norm(&zeta), params.p());
    value - params.delta() * pow_pos(n, params.q())
}

/// Young margin `C-|a|^p + (1/delta)|b|^q - |<a,b>|`, nonnegative for all
/// inputs; equality on the ray `|b| = C- p |a|^(p-1)` with `a` parallel `b`.
pub fn young_margin<T: Real>(a: &[T], b: &[T], params: &StructureParams<T>) -> T {
    let na = norm(a);
    let nb = norm(b);
    params.c_minus() * pow_pos(na, params.p()) + pow_pos(nb, params.q()) / params.delta()
        - dot(a, b).abs()
}

/// A pair attaining Young equality: `a` of the given magnitude along `dir`,
/// `b = C- p |a|^(p-1)` along the same direction.
pub fn young_critical_pair<T: Real>(
    magnitude: T,
    dir: &[T],
    params: &StructureParams<T>,
) -> (Vec<T>, Vec<T>) {
    let nd = norm(dir);
    let unit: Vec<T> = if nd > T::zero() {
        dir.iter().map(|&c| c / nd).collect()
    } else {
        let mut e = vec![T::zero(); dir.len().max(1)];
        e[0] = T::one();
        e
    };
    let a: Vec<T> = unit.iter().map(|&c| c * magnitude).collect();
    let b_mag = params.c_minus() * params.p() * pow_pos(magnitude, params.p() - T::one());
    let b: Vec<T> = unit.iter().map(|&c| c * b_mag).collect();
    (a, b)
}

/// Fitted regularity outcome: exponents predicted from an integrability
/// gain `theta` in `(p, 2)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RegularityEstimate<T> {
    pub theta: T,
    pub space_exponent: T,
    pub time_exponent: T,
    pub constant: T,
}

impl<T: Real> RegularityEstimate<T> {
    pub fn new(theta: T, constant: T, params: &StructureParams<T>) -> Result<Self> {
        let p = params.p();
        if !(theta > p && theta <= T::of(2.0)) {
            return Err(Error::Domain(format!(
                "theta must lie in (p, 2], got {theta} with p = {p}"
            )));
        }
        if !(constant > T::zero()) {
            return Err(Error::InvalidParameter("constant must be positive".into()));
        }
        let space_exponent = (theta - p) / (theta - T::one());
        let time_exponent = (theta - p) / theta;
        let est = Self {
            theta,
            space_exponent,
            time_exponent,
            constant,
        };
        debug_assert!(est.space_exponent > T::zero() && est.space_exponent < T::one());
        debug_assert!(est.time_exponent > T::zero() && est.time_exponent < T::one());
        debug_assert!(est.space_exponent / est.time_exponent > T::one());
        Ok(est)
    }
}
