//! Run configuration: strict TOML tables mapped onto core types.
//!
//! Unknown keys anywhere are a parse error, so a typo in `delta` or `q`
//! cannot silently change an experiment.

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use hjlab_core::levy::{JumpMap, LevyIntegralSpec, LevyMeasureSpec};
use hjlab_core::simulate::ControlValue;
use hjlab_core::solver::{CoeffField, EquationSpec, SolverConfig, Variant};
use hjlab_core::{bridge::BridgeParams, GridFunction64, StructureParams64};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub structure: StructureTable,
    pub grid: GridTable,
    pub levy: LevyTable,
    pub mc: McTable,
    pub equation: EquationTable,
    #[serde(default)]
    pub solver: SolverTable,
    #[serde(default)]
    pub nonlocal: NonlocalTable,
    #[serde(default)]
    pub bridge: BridgeTable,
    #[serde(default)]
    pub output: OutputTable,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureTable {
    pub delta: f64,
    pub q: f64,
    pub sup_bound: f64,
    pub horizon: f64,
    pub tail_time: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTable {
    pub nx: usize,
    pub nt: usize,
    pub length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTable {
    pub stability: f64,
    pub intensity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McTable {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationTable {
    pub variant: String,
    pub terminal: TerminalTable,
    #[serde(default)]
    pub diffusion: Option<CoeffTable>,
    #[serde(default)]
    pub hamiltonian: Option<CoeffTable>,
    #[serde(default)]
    pub source: Option<CoeffTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalTable {
    pub kind: String,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub mode: u32,
    #[serde(default)]
    pub amplitude2: f64,
    #[serde(default = "two")]
    pub mode2: u32,
}

fn one() -> u32 {
    1
}
fn two() -> u32 {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffTable {
    pub kind: String,
    #[serde(default)]
    pub value: f64,
    /// checkerboard cell side, in multiples of dx
    #[serde(default)]
    pub cell_dx: f64,
    #[serde(default)]
    pub low: f64,
    #[serde(default)]
    pub high: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverTable {
    pub cfl_safety: f64,
    pub clamp_factor: f64,
    pub max_steps: usize,
}

impl Default for SolverTable {
    fn default() -> Self {
        Self {
            cfl_safety: 0.8,
            clamp_factor: 2.0,
            max_steps: 4_000_000,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlocalTable {
    pub shells: usize,
    /// catalog scale relative to the structure bound sqrt(delta / m2)
    pub scale_rel: f64,
    /// jump maps by name: scaled, capped, space-modulated, time-modulated
    pub maps: Vec<String>,
    pub cap: f64,
    pub amp: f64,
}

impl Default for NonlocalTable {
    fn default() -> Self {
        Self {
            shells: 32,
            scale_rel: 0.9,
            maps: vec!["scaled".into(), "capped".into()],
            cap: 0.5,
            amp: 0.4,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgeTable {
    /// defaults to the midpoint of the admissible interval
    pub alpha: f64,
    pub family: usize,
    pub target_x: f64,
    /// horizon of the bridge problem; defaults to the structure horizon
    pub target_time: f64,
    pub probes_y: usize,
    pub probes_s: usize,
    pub window: f64,
}

impl Default for BridgeTable {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            family: 4,
            target_x: 0.0,
            target_time: 0.0,
            probes_y: 20,
            probes_s: 10,
            window: 4.0,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputTable {
    #[serde(default)]
    pub dir: Option<String>,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).context("parsing config")?;
        let hash = fnv64(text.as_bytes());
        cfg.validate()?;
        Ok((cfg, hash))
    }

    fn validate(&self) -> Result<()> {
        if self.structure.q <= 2.0 {
            bail!("structure condition requires q>2");
        }
        if self.grid.nx < 8 || self.grid.nt < 8 {
            bail!("grid needs nx >= 8 and nt >= 8");
        }
        if self.mc.samples < 100 {
            bail!("mc.samples below 100 gives meaningless confidence intervals");
        }
        Ok(())
    }

    pub fn structure_params(&self) -> Result<StructureParams64> {
        Ok(StructureParams64::new(
            self.structure.delta,
            self.structure.q,
            self.structure.sup_bound,
            self.structure.horizon,
            self.structure.tail_time,
        )?)
    }

    pub fn measure(&self) -> Result<LevyMeasureSpec<f64>> {
        Ok(LevyMeasureSpec::new(
            1,
            self.levy.stability,
            self.levy.intensity,
        )?)
    }

    pub fn terminal(&self) -> Result<GridFunction64> {
        let t = &self.equation.terminal;
        let length = self.grid.length;
        let two_pi = 2.0 * std::f64::consts::PI;
        let grid = match t.kind.as_str() {
            "cosine" => GridFunction64::from_fn(self.grid.nx, length, |x| {
                t.amplitude * (two_pi * t.mode as f64 * x / length).cos()
            })?,
            "sine" => GridFunction64::from_fn(self.grid.nx, length, |x| {
                t.amplitude * (two_pi * t.mode as f64 * x / length).sin()
            })?,
            "two-mode" => GridFunction64::from_fn(self.grid.nx, length, |x| {
                t.amplitude * (two_pi * t.mode as f64 * x / length).cos()
                    + t.amplitude2 * (two_pi * t.mode2 as f64 * x / length).sin()
            })?,
            other => bail!("unknown terminal kind '{other}'"),
        };
        Ok(grid)
    }

    fn coeff(&self, table: &Option<CoeffTable>, default: f64) -> Result<CoeffField<f64>> {
        let Some(t) = table else {
            return Ok(CoeffField::Constant(default));
        };
        match t.kind.as_str() {
            "constant" => Ok(CoeffField::Constant(t.value)),
            "checkerboard" => Ok(CoeffField::Checkerboard {
                cell: t.cell_dx * self.grid.length / self.grid.nx as f64,
                low: t.low,
                high: t.high,
            }),
            other => bail!("unknown coefficient kind '{other}'"),
        }
    }

    pub fn levy_integral_spec(&self) -> Result<LevyIntegralSpec<f64>> {
        let params = self.structure_params()?;
        let measure = self.measure()?;
        let scale = (params.delta() / measure.second_moment()).sqrt() * self.nonlocal.scale_rel;
        let dx = self.grid.length / self.grid.nx as f64;
        let mut row = Vec::new();
        for name in &self.nonlocal.maps {
            row.push(match name.as_str() {
                "scaled" => JumpMap::Scaled { c: scale },
                "capped" => JumpMap::Capped {
                    c: scale,
                    cap: self.nonlocal.cap,
                },
                "space-modulated" => JumpMap::SpaceModulated {
                    c: scale,
                    amp: self.nonlocal.amp,
                },
                "time-modulated" => JumpMap::TimeModulated {
                    c: scale,
                    amp: self.nonlocal.amp,
                    horizon: params.horizon(),
                },
                other => bail!("unknown jump map '{other}'"),
            });
        }
        Ok(LevyIntegralSpec::new(
            vec![row],
            measure,
            self.nonlocal.shells,
            (dx / 2.0).min(1e-2),
            self.grid.length,
            params.horizon(),
        )?)
    }

    pub fn equation(&self) -> Result<EquationSpec<f64>> {
        let params = self.structure_params()?;
        let variant = match self.equation.variant.as_str() {
            "extremal-lower" => Variant::ExtremalLower,
            "extremal-upper" => Variant::ExtremalUpper,
            "local-general" => Variant::LocalGeneral {
                diffusion: self.coeff(&self.equation.diffusion, 0.0)?,
                hamiltonian_scale: self.coeff(&self.equation.hamiltonian, 1.0)?,
                source: self.coeff(&self.equation.source, 0.0)?,
            },
            "nonlocal-general" => Variant::NonlocalGeneral {
                integral: self.levy_integral_spec()?,
                hamiltonian_scale: self.coeff(&self.equation.hamiltonian, 1.0)?,
                source: self.coeff(&self.equation.source, 0.0)?,
            },
            other => bail!("unknown equation variant '{other}'"),
        };
        Ok(EquationSpec::new(variant, params, self.grid.length)?)
    }

    pub fn solver_config(&self) -> SolverConfig<f64> {
        let mut cfg = SolverConfig::new(self.grid.nt);
        cfg.cfl_safety = self.solver.cfl_safety;
        cfg.clamp_factor = self.solver.clamp_factor;
        cfg.max_steps = self.solver.max_steps;
        cfg
    }

    pub fn bridge_params(&self) -> Result<BridgeParams<f64>> {
        let params = self.structure_params()?;
        let alpha = if self.bridge.alpha > 0.0 {
            self.bridge.alpha
        } else {
            BridgeParams::default_alpha(&params)
        };
        let target_time = if self.bridge.target_time > 0.0 {
            self.bridge.target_time
        } else {
            params.horizon()
        };
        let mut family: Vec<ControlValue<f64>> = BridgeParams::default_family(self.bridge.family);
        family.truncate(2 * self.bridge.family);
        Ok(BridgeParams::new(
            self.bridge.target_x,
            target_time,
            alpha,
            family,
            &params,
        )?)
    }
}

/// FNV-1a over raw bytes; stable fingerprint for configs and manifests.
pub fn fnv64(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
