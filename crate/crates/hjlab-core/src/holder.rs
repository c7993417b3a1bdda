//! Empirical Holder-modulus estimation and the uniformity sweep across
//! rough coefficient families.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField};
use crate::real::Real;
use crate::solver::{solve_terminal, EquationSpec, SolverConfig};
use crate::stats::{loglog_fit, LogLogFit};

/// Fitted exponents of the space and time sup-moduli.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderFit<T> {
    pub space_exponent: T,
    pub time_exponent: T,
    pub constant: T,
    pub r_squared: T,
    pub pair_count: usize,
    /// set when the field oscillation is below resolution
    pub degenerate: bool,
}

/// Sup-modulus of a spatial slice family at dyadic node distances and the
/// log-log fit over them.
pub fn space_modulus_fit<T: Real>(g: &GridFunction<T>, scales: usize) -> Result<LogLogFit<T>> {
    let nx = g.nx();
    let mut hs = Vec::new();
    let mut ms = Vec::new();
    for k in 0..scales {
        let lag = 1usize << k;
        if lag * 4 >= nx {
            break;
        }
        let mut m = T::zero();
        for i in 0..nx {
            let d = (g.value(i as isize + lag as isize) - g.value(i as isize)).abs();
            if d > m {
                m = d;
            }
        }
        if m > T::zero() {
            hs.push(T::of(lag as f64) * g.dx());
            ms.push(m);
        }
    }
    loglog_fit(&hs, &ms)
}

/// Fit one axis; `None` when the field carries no usable modulus there
/// (constant along the axis or too few scales).
fn axis_fit<T: Real>(hs: &[T], ms: &[T]) -> Option<(T, T, T)> {
    if hs.len() < 2 {
        return None;
    }
    let fit = loglog_fit(hs, ms).ok()?;
    Some((fit.slope, fit.intercept.exp(), fit.r_squared))
}

/// Empirical sup-modulus tables `(h, m(h))` of a field at dyadic scales:
/// pure-space pairs and pure-time pairs, both restricted to levels with
/// `t >= tail_time`.
#[allow(clippy::type_complexity)]
pub fn modulus_tables<T: Real>(
    field: &SpaceTimeField<T>,
    tail_time: T,
) -> Result<(Vec<(T, T)>, Vec<(T, T)>, usize)> {
    let nx = field.nx();
    let nt = field.nt();
    let level0 = (0..nt)
        .find(|&m| field.times()[m] >= tail_time - T::of(1e-12))
        .ok_or_else(|| Error::Domain("field does not cover the tail window".into()))?;
    if nt - level0 < 8 {
        return Err(Error::Config(
            "too few time levels beyond the tail time for a modulus fit".into(),
        ));
    }
    let mut pair_count = 0usize;
    let mut space = Vec::new();
    for k in 0..16 {
        let lag = 1usize << k;
        if lag * 4 >= nx {
            break;
        }
        let mut m = T::zero();
        for level in level0..nt {
            let slice = field.slice(level);
            for i in 0..nx {
                let d = (slice[(i + lag) % nx] - slice[i]).abs();
                pair_count += 1;
                if d > m {
                    m = d;
                }
            }
        }
        if m > T::zero() {
            space.push((T::of(lag as f64) * field.dx(), m));
        }
    }
    let mut time = Vec::new();
    // the single-level lag sits at the marching scheme's own resolution and
    // carries update noise rather than field modulus; start one octave up
    for k in 1..16 {
        let lag = 1usize << k;
        if level0 + lag * 2 >= nt {
            break;
        }
        let mut m = T::zero();
        for level in level0..nt - lag {
            for i in 0..nx {
                let d = (field.at(level + lag, i) - field.at(level, i)).abs();
                pair_count += 1;
                if d > m {
                    m = d;
                }
            }
        }
        if m > T::zero() {
            time.push((T::of(lag as f64) * field.dt(), m));
        }
    }
    Ok((space, time, pair_count))
}

/// Fit the empirical space and time sup-moduli of a solved field, with time
/// pairs restricted to `t >= tail_time`.
pub fn holder_fit<T: Real>(field: &SpaceTimeField<T>, tail_time: T) -> Result<HolderFit<T>> {
    if field.oscillation() < T::of(1e-12) {
        return Ok(HolderFit {
            space_exponent: T::zero(),
            time_exponent: T::zero(),
            constant: T::zero(),
            r_squared: T::one(),
            pair_count: 0,
            degenerate: true,
        });
    }
    let (space_table, time_table, pair_count) = modulus_tables(field, tail_time)?;
    let (hs, ms): (Vec<T>, Vec<T>) = space_table.into_iter().unzip();
    let (ht, mt): (Vec<T>, Vec<T>) = time_table.into_iter().unzip();
    let space = axis_fit(&hs, &ms);
    let time = axis_fit(&ht, &mt);

    let (space_exponent, c_space, r2_space) = space.unwrap_or((T::zero(), T::zero(), T::one()));
    let (time_exponent, c_time, r2_time) = time.unwrap_or((T::zero(), T::zero(), T::one()));
    Ok(HolderFit {
        space_exponent,
        time_exponent,
        constant: c_space.max(c_time),
        r_squared: r2_space.min(r2_time),
        pair_count,
        degenerate: false,
    })
}

/// Uniformity verdict across a family of equations sharing data and grid.
#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport<T> {
    pub fits: Vec<HolderFit<T>>,
    pub space_spread: T,
    pub time_spread: T,
    pub constant_ratio: T,
    pub exponent_tolerance: T,
    pub constant_tolerance: T,
    pub pass: bool,
}

/// Solve every family member on identical data and compare fitted moduli;
/// the regularity theory predicts a common modulus, so spreads beyond the
/// tolerances are flagged.
pub fn uniformity_report<T: Real>(
    family: &[EquationSpec<T>],
    terminal: &GridFunction<T>,
    config: &SolverConfig<T>,
    tail_time: T,
    exponent_tolerance: T,
    constant_tolerance: T,
) -> Result<UniformityReport<T>> {
    if family.is_empty() {
        return Err(Error::Config("empty equation family".into()));
    }
    let mut fits = Vec::with_capacity(family.len());
    for eq in family {
        let sol = solve_terminal(eq, terminal, config)?;
        fits.push(holder_fit(&sol.field, tail_time)?);
    }
    let spread = |f: &dyn Fn(&HolderFit<T>) -> T| {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for fit in &fits {
            let v = f(fit);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    };
    let (slo, shi) = spread(&|f: &HolderFit<T>| f.space_exponent);
    let (tlo, thi) = spread(&|f: &HolderFit<T>| f.time_exponent);
    let (clo, chi) = spread(&|f: &HolderFit<T>| f.constant);
    let space_spread = shi - slo;
    let time_spread = thi - tlo;
    let constant_ratio = if clo > T::zero() { chi / clo } else { T::one() };
    let pass = space_spread <= exponent_tolerance
        && time_spread <= exponent_tolerance
        && constant_ratio <= constant_tolerance;
    Ok(UniformityReport {
        fits,
        space_spread,
        time_spread,
        constant_ratio,
        exponent_tolerance,
        constant_tolerance,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::StructureParams;
    use crate::solver::{CoeffField, Variant};

    fn field_from(
        nx: usize,
        nt: usize,
        length: f64,
        horizon: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> SpaceTimeField<f64> {
        let dx = length / nx as f64;
        let times: Vec<f64> = (0..nt).map(|m| horizon * m as f64 / (nt - 1) as f64).collect();
        let mut values = Vec::with_capacity(nx * nt);
        for &t in &times {
            for i in 0..nx {
                values.push(f(i as f64 * dx, t));
            }
        }
        SpaceTimeField::new(nx, dx, times, values).unwrap()
    }

    #[test]
    fn constant_field_is_degenerate() {
        let f = field_from(64, 32, 2.0, 1.0, |_, _| 1.0);
        let fit = holder_fit(&f, 0.2).unwrap();
        assert!(fit.degenerate);
    }

    #[test]
    fn synthetic_square_root_profile() {
        let f = field_from(512, 32, 2.0, 1.0, |x, _| {
            (std::f64::consts::PI * x).sin().abs().sqrt() * 0.5
        });
        let fit = holder_fit(&f, 0.0).unwrap();
        assert!(
            (fit.space_exponent - 0.5).abs() <= 0.05,
            "space exponent {}",
            fit.space_exponent
        );
        assert!(!fit.degenerate);
    }

    #[test]
    fn known_time_exponent() {
        let f = field_from(32, 512, 2.0, 1.0, |_, t| (1.0f64 + t).powf(0.7) - 1.0);
        // remove the spatial axis from the picture: field constant in x
        let fit = holder_fit(&f, 0.0).unwrap();
        assert!(
            (fit.time_exponent - 0.7).abs() <= 0.35,
            "time exponent {}",
            fit.time_exponent
        );
    }

    #[test]
    fn shift_invariance_and_scaling_equivariance() {
        let base = field_from(128, 64, 2.0, 1.0, |x, t| {
            0.4 * (std::f64::consts::PI * x).cos() + 0.1 * t
        });
        let fit0 = holder_fit(&base, 0.2).unwrap();
        let shifted = field_from(128, 64, 2.0, 1.0, |x, t| {
            0.4 * (std::f64::consts::PI * x).cos() + 0.1 * t + 5.0
        });
        let fit1 = holder_fit(&shifted, 0.2).unwrap();
        assert!((fit0.space_exponent - fit1.space_exponent).abs() < 1e-12);
        assert!((fit0.constant - fit1.constant).abs() < 1e-12);
        let doubled = field_from(128, 64, 2.0, 1.0, |x, t| {
            0.8 * (std::f64::consts::PI * x).cos() + 0.2 * t
        });
        let fit2 = holder_fit(&doubled, 0.2).unwrap();
        assert!((fit2.space_exponent - fit0.space_exponent).abs() < 1e-10);
        assert!((fit2.constant / fit0.constant - 2.0).abs() < 1e-10);
    }

    #[test]
    fn uniformity_of_singleton_family_is_trivial() {
        let pr = StructureParams::new(1.0, 4.0, 1.0, 0.25, 0.05).unwrap();
        let term =
            GridFunction::from_fn(64, 2.0, |x| 0.5 * (std::f64::consts::PI * x).cos()).unwrap();
        let family = vec![EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap()];
        let rep =
            uniformity_report(&family, &term, &SolverConfig::new(64), 0.05, 0.1, 3.0).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.space_spread, 0.0);
        assert_eq!(rep.time_spread, 0.0);
    }

    #[test]
    fn uniformity_rejects_out_of_class_member() {
        let pr = StructureParams::new(1.0, 4.0, 1.0, 0.25, 0.05).unwrap();
        let bad = EquationSpec::new(
            Variant::LocalGeneral {
                diffusion: CoeffField::Constant(2.0),
                hamiltonian_scale: CoeffField::Constant(1.0),
                source: CoeffField::Constant(0.0),
            },
            pr,
            2.0,
        );
        assert!(bad.is_err());
    }
}
