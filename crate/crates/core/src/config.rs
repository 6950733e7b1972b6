//! Experiment configuration: a TOML document that fully determines a run.

use crate::error::{Error, Result};
use crate::fields::{self, BeltramiSpec, BumpSpec};
use crate::grid::{Field, Grid};
use crate::norms::Constants;
use crate::regularity::default_apertures;
use crate::solver::SolverConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Direct,
    Perturbed,
    Mollified,
    #[serde(rename = "2d")]
    Planar,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Mode::Direct),
            "perturbed" => Ok(Mode::Perturbed),
            "mollified" => Ok(Mode::Mollified),
            "2d" => Ok(Mode::Planar),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "three")]
    pub dims: usize,
    pub n: usize,
    #[serde(default = "pi")]
    pub half_width: f64,
}

fn three() -> usize {
    3
}
fn pi() -> f64 {
    PI
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dims, self.n, self.half_width).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Initial velocity (or perturbation, when a reference flow is present).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Zero,
    Abc(BeltramiSpec),
    Bump(BumpSpec),
    TaylorGreen { amplitude: f64 },
    /// Band-limited random solenoidal field seeded from the run seed.
    Random { kmax: i64, energy: f64 },
    /// Zero-swirl axisymmetric Gaussian ring about the `x3` axis.
    AxisymRing { amplitude: f64, width: f64 },
    /// NSRF snapshot file.
    File { path: String },
}

impl InitialSpec {
    pub fn build(&self, grid: &Grid, seed: u64) -> Result<Field> {
        match self {
            InitialSpec::Zero => Ok(Field::zeros(*grid, grid.dims())),
            InitialSpec::Abc(s) => fields::make_abc_flow(s, grid),
            InitialSpec::Bump(s) => fields::make_bump(s, grid),
            InitialSpec::TaylorGreen { amplitude } => {
                if grid.dims() == 2 {
                    fields::taylor_green_2d(grid, *amplitude)
                } else {
                    let g2 = Grid::new(2, grid.n(), grid.half_width())?;
                    fields::extend_2d_to_3d(&fields::taylor_green_2d(&g2, *amplitude)?, grid)
                }
            }
            InitialSpec::Random { kmax, energy } => fields::random_solenoidal(grid, seed, *kmax, *energy),
            InitialSpec::AxisymRing { amplitude, width } => {
                Ok(fields::make_axisym_zero_swirl(&fields::AxisymSpec::gaussian_ring(*amplitude, *width), grid)?.field)
            }
            InitialSpec::File { path } => {
                let f = crate::io::read_field(path)?;
                f.grid().same_as(grid)?;
                Ok(f)
            }
        }
    }
}

/// Parameters of the post-processing stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    pub center: [f64; 3],
    /// Scan radii, strictly decreasing.
    pub radii: Vec<f64>,
    /// Lattice times for the regularity map; empty means every stored time with a full window.
    pub times: Vec<f64>,
    /// Lattice offsets per axis, in grid cells.
    pub offsets: Vec<i64>,
    pub apertures: Vec<f64>,
    pub mus: Vec<f64>,
    pub xi: [f64; 3],
    pub split_s: f64,
    pub gap_p: f64,
    pub ensemble_size: usize,
    pub ensemble_seed: u64,
    /// Windowed t* level.
    pub m: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            center: [0.0; 3],
            radii: vec![0.8, 0.6],
            times: Vec::new(),
            offsets: vec![0],
            apertures: default_apertures(),
            mus: vec![1e-4, 1e-2, 1.0],
            xi: [0.0; 3],
            split_s: 1.0,
            gap_p: 2.5,
            ensemble_size: 100,
            ensemble_seed: 1,
            m: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    /// Paper result the scenario exercises.
    #[serde(default)]
    pub result: Option<String>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
    /// Mollification scales for the mollified mode.
    #[serde(default = "default_ladder")]
    pub eps: Vec<f64>,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub constants: Constants,
    /// Beltrami reference flow for the perturbed and mollified modes.
    #[serde(default)]
    pub reference: Option<BeltramiSpec>,
    pub initial: InitialSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

fn default_output() -> String {
    "out".into()
}
fn default_ladder() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05, 0.0]
}

impl ExperimentConfig {
    pub fn new(scenario: &str, grid: GridSpec, initial: InitialSpec) -> Self {
        ExperimentConfig {
            scenario: scenario.into(),
            result: None,
            mode: Mode::Direct,
            seed: 0,
            output: default_output(),
            eps: default_ladder(),
            grid,
            solver: SolverConfig::default(),
            constants: Constants::default(),
            reference: None,
            initial,
            analysis: AnalysisSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form with the output directory blanked.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output.clear();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        self.solver.steps().map_err(|e| Error::Config(e.to_string()))?;
        let cfg = |m: String| Err(Error::Config(m));
        match self.mode {
            Mode::Planar if grid.dims() != 2 => return cfg("mode 2d needs a planar grid".into()),
            Mode::Direct | Mode::Perturbed | Mode::Mollified if grid.dims() != 3 => {
                return cfg(format!("mode {:?} needs a 3D grid", self.mode))
            }
            Mode::Perturbed | Mode::Mollified if self.reference.is_none() => {
                return cfg("perturbed runs need a [reference] flow".into())
            }
            _ => {}
        }
        if self.eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return cfg("mollification scales must be finite and >= 0".into());
        }
        if self.analysis.radii.windows(2).any(|w| w[1] >= w[0]) || self.analysis.radii.iter().any(|r| *r <= 0.0) {
            return cfg("analysis radii must be positive and strictly decreasing".into());
        }
        if self.analysis.mus.iter().any(|m| !(*m >= 0.0)) {
            return cfg("mu values must be >= 0".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
scenario = "demo"
mode = "perturbed"
seed = 3

[grid]
n = 16

[solver]
dt = 0.01
t_end = 0.1

[reference]
a = 1.0
b = 1.0
c = 1.0

[initial]
kind = "bump"
center = [0.0, 0.0, 0.0]
direction = [1.0, 0.0, 0.0]
shift = 0.0
amplitude = 0.1
polarization = [0.0, 0.0, 1.0]
profile = { kind = "compact", radius = 1.0 }
"#;

    #[test]
    fn parses_and_roundtrips() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.mode, Mode::Perturbed);
        assert_eq!(c.grid.half_width, PI);
        assert_eq!(c.solver.snapshot_stride, 10);
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn hash_ignores_output_but_not_physics() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut d = c.clone();
        d.output = "elsewhere".into();
        assert_eq!(c.hash().unwrap(), d.hash().unwrap());
        d.solver.dt = 0.005;
        assert_ne!(c.hash().unwrap(), d.hash().unwrap());
        assert_eq!(c.hash().unwrap().len(), 64);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        assert!(ExperimentConfig::from_toml(&SAMPLE.replace("[reference]\na = 1.0\nb = 1.0\nc = 1.0\n", "")).is_err());
        assert!(ExperimentConfig::from_toml(&SAMPLE.replace("n = 16", "n = 15")).is_err());
        assert!(ExperimentConfig::from_toml(&SAMPLE.replace("t_end = 0.1", "t_end = 0.105")).is_err());
        assert!(ExperimentConfig::from_toml(&SAMPLE.replace("seed = 3", "seed = 3\nbogus = 1")).is_err());
    }

    #[test]
    fn taylor_green_extension_builds() {
        let g = GridSpec { dims: 3, n: 8, half_width: PI }.build().unwrap();
        let u = InitialSpec::TaylorGreen { amplitude: 1.0 }.build(&g, 0).unwrap();
        assert!(u.component(2).iter().all(|v| *v == 0.0));
    }
}
