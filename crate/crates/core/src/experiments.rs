//! Named scenarios and the drivers shared by the command-line runner and the examples.

use crate::config::{AnalysisSpec, ExperimentConfig, GridSpec, InitialSpec, Mode};
use crate::error::{Error, Result};
use crate::fields::{BeltramiFlow, BeltramiSpec, BumpSpec, Profile};
use crate::grid::{Field, Grid};
use crate::io::{self, Table};
use crate::norms::{smallness_threshold, weighted_lp_norm, Threshold, Weight};
use crate::regularity::{map_regular_set, RegularityMap};
use crate::solver::{
    energy_audit, solve_2d_nse, solve_mollified, solve_nse, solve_perturbed, EnergyAudit, EnergyMonitor, PerturbedRun,
    Provenance, Reference, SolverConfig, Trajectory,
};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug)]
pub struct Preset {
    pub name: &'static str,
    /// Paper result the scenario exercises.
    pub result: &'static str,
    pub about: &'static str,
    build: fn() -> ExperimentConfig,
}

impl Preset {
    pub fn config(&self) -> ExperimentConfig {
        let mut c = (self.build)();
        c.scenario = self.name.into();
        c.result = Some(self.result.into());
        c
    }
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "regular-set", result: "thm1.7", about: "small bump on a weak ABC flow, regular-set map", build: regular_set },
    Preset { name: "axisymmetric", result: "prop2.1", about: "zero-swirl axisymmetric ring", build: axisymmetric },
    Preset { name: "planar-extension", result: "prop2.3", about: "Taylor-Green vortex extended to 3D", build: planar_extension },
    Preset {
        name: "beltrami-perturbation",
        result: "prop2.4",
        about: "bump below the Beltrami threshold on an ABC reference",
        build: beltrami_perturbation,
    },
    Preset { name: "beltrami-decay", result: "prop2.4", about: "exact ABC decay", build: beltrami_decay },
    Preset { name: "gap-split", result: "thm6.1-gap", about: "threshold and gap decompositions", build: gap_split },
    Preset { name: "ckn-ensemble", result: "appendix-ckn", about: "weighted interpolation ensemble", build: ckn_ensemble },
    Preset { name: "stein-ensemble", result: "appendix-stein", about: "weighted Riesz ensemble", build: stein_ensemble },
    Preset { name: "mollified-ladder", result: "prop4.4-mollified", about: "mollification ladder", build: mollified_ladder },
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(Preset::config)
        .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))
}

fn grid3(n: usize) -> GridSpec {
    GridSpec { dims: 3, n, half_width: PI }
}

fn small_bump(amplitude: f64) -> InitialSpec {
    InitialSpec::Bump(BumpSpec::new(Profile::Compact { radius: 1.0 }, amplitude))
}

fn regular_set() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("", grid3(32), small_bump(5e-6));
    c.mode = Mode::Perturbed;
    c.reference = Some(BeltramiSpec::abc(0.1, 0.1, 0.1));
    c.solver = SolverConfig::new(0.01, 0.6, 1);
    c.analysis = AnalysisSpec {
        radii: vec![0.6, 0.4],
        times: vec![0.35, 0.45, 0.55],
        offsets: vec![-2, 0, 2],
        ..AnalysisSpec::default()
    };
    c
}

fn axisymmetric() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        "",
        GridSpec { dims: 3, n: 32, half_width: 2.0 * PI },
        InitialSpec::AxisymRing { amplitude: 1.0, width: 1.5 },
    );
    c.solver = SolverConfig::new(0.01, 0.5, 10);
    c
}

fn planar_extension() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("", grid3(32), InitialSpec::TaylorGreen { amplitude: 1.0 });
    c.solver = SolverConfig::new(1e-3, 0.5, 50);
    c
}

fn beltrami_perturbation() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("", grid3(16), small_bump(1e-4));
    c.mode = Mode::Perturbed;
    c.reference = Some(BeltramiSpec::abc(0.05, 0.05, 0.05));
    c.solver = SolverConfig::new(0.01, 0.5, 5);
    c
}

fn beltrami_decay() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("", grid3(32), InitialSpec::Abc(BeltramiSpec::abc(1.0, 1.0, 1.0)));
    c.solver = SolverConfig::new(1e-3, 0.5, 50);
    c
}

fn gap_split() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("", grid3(32), InitialSpec::Random { kmax: 4, energy: 100.0 });
    c.seed = 1;
    c
}

fn ckn_ensemble() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("", grid3(32), InitialSpec::Zero);
    c.seed = 1;
    c
}

fn stein_ensemble() -> ExperimentConfig {
    ckn_ensemble()
}

fn mollified_ladder() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("", grid3(16), small_bump(0.5));
    c.mode = Mode::Mollified;
    c.reference = Some(BeltramiSpec::abc(1.0, 1.0, 1.0));
    c.solver = SolverConfig::new(5e-3, 0.2, 10);
    c
}

/// Size of `v0 = u0 - w0` against the admissible thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Smallness {
    /// `| |x - c|^{-1/2} v0 |_{L^2}`.
    pub norm: f64,
    /// Reference size `lambda^-2 |w0|_inf^2 / 2`.
    pub size: f64,
    /// `delta_0 exp(-K / delta_0)`.
    pub general: f64,
    /// `delta_3 exp(-lambda^-2 |w0|_inf^2 / delta_3)`.
    pub beltrami: f64,
}

impl Smallness {
    pub fn below(&self) -> bool {
        self.norm <= self.general.min(self.beltrami)
    }
}

pub fn smallness(cfg: &ExperimentConfig, v0: &Field, flow: &BeltramiFlow) -> Result<Smallness> {
    let norm = weighted_lp_norm(v0, 2.0, &Weight::new(cfg.analysis.center, 0.0, -0.5))?;
    let sup = flow.initial().max_magnitude();
    let size = flow.size();
    Ok(Smallness {
        norm,
        size,
        general: smallness_threshold(Threshold::ReferenceSize { size }, &cfg.constants)?,
        beltrami: smallness_threshold(Threshold::Beltrami { lambda: flow.lambda(), sup_norm: sup }, &cfg.constants)?,
    })
}

/// One rung of a mollification ladder.
#[derive(Clone, Debug)]
pub struct Rung {
    pub eps: f64,
    pub run: PerturbedRun,
    /// `L^2` distance of the final state to the previous rung.
    pub step: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub config: ExperimentConfig,
    pub mode: Mode,
    /// Velocity for direct runs, perturbation `v` otherwise.
    pub trajectory: Trajectory,
    pub reference: Option<Trajectory>,
    pub monitor: Option<EnergyMonitor>,
    /// On the full velocity.
    pub audit: EnergyAudit,
    pub ladder: Vec<Rung>,
    pub smallness: Option<Smallness>,
}

impl Simulation {
    /// Full velocity `w + v` (or the direct solution).
    pub fn velocity(&self) -> Result<Trajectory> {
        match &self.reference {
            Some(w) => w.sum(&self.trajectory),
            None => Ok(self.trajectory.clone()),
        }
    }
}

fn stamp(traj: &mut Trajectory, cfg: &ExperimentConfig, label: &str, hash: &str) {
    traj.provenance = Provenance { label: format!("{}:{label}", cfg.scenario), config_hash: hash.into(), seed: Some(cfg.seed) };
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    cfg.validate()?;
    let hash = cfg.hash()?;
    let grid = cfg.grid.build()?;
    let initial = cfg.initial.build(&grid, cfg.seed)?;
    let flow = cfg.reference.as_ref().map(|s| BeltramiFlow::from_spec(s, &grid)).transpose()?;
    let smallness = flow.as_ref().map(|f| smallness(cfg, &initial, f)).transpose()?;
    let mut sim = match (cfg.mode, flow) {
        (Mode::Planar, _) => {
            let t = solve_2d_nse(&initial, &cfg.solver)?;
            let audit = energy_audit(&t)?;
            Simulation { config: cfg.clone(), mode: cfg.mode, trajectory: t, reference: None, monitor: None, audit, ladder: vec![], smallness }
        }
        (Mode::Direct, flow) => {
            let u0 = match &flow {
                Some(f) => f.initial().add(&initial)?,
                None => initial,
            };
            let t = solve_nse(&u0, &cfg.solver)?;
            let audit = energy_audit(&t)?;
            Simulation { config: cfg.clone(), mode: cfg.mode, trajectory: t, reference: None, monitor: None, audit, ladder: vec![], smallness }
        }
        (Mode::Perturbed, Some(flow)) => {
            let run = solve_perturbed(&initial, &Reference::Beltrami(flow), &cfg.solver)?;
            let audit = energy_audit(&run.reconstruction()?)?;
            Simulation {
                config: cfg.clone(),
                mode: cfg.mode,
                trajectory: run.v,
                reference: Some(run.w),
                monitor: Some(run.monitor),
                audit,
                ladder: vec![],
                smallness,
            }
        }
        (Mode::Mollified, Some(flow)) => {
            let reference = Reference::Beltrami(flow);
            let mut ladder: Vec<Rung> = Vec::new();
            for &eps in &cfg.eps {
                let run = solve_mollified(&initial, &reference, eps, &cfg.solver)?;
                let step = match ladder.last() {
                    Some(prev) => Some(run.v.last().unwrap().sub(prev.run.v.last().unwrap())?.l2_norm()),
                    None => None,
                };
                ladder.push(Rung { eps, run, step });
            }
            let last = ladder.last().ok_or_else(|| Error::Config("empty mollification ladder".into()))?.run.clone();
            let audit = energy_audit(&last.reconstruction()?)?;
            Simulation {
                config: cfg.clone(),
                mode: cfg.mode,
                trajectory: last.v,
                reference: Some(last.w),
                monitor: Some(last.monitor),
                audit,
                ladder,
                smallness,
            }
        }
        (m, None) => return Err(Error::Config(format!("mode {m:?} needs a reference flow"))),
    };
    stamp(&mut sim.trajectory, cfg, "trajectory", &hash);
    if let Some(w) = sim.reference.as_mut() {
        stamp(w, cfg, "reference", &hash);
    }
    Ok(sim)
}

/// Writes `trajectory/`, `reference/`, `energy.csv`, `monitor.csv`, `ladder.csv` and
/// `config.toml` as applicable; returns the paths written.
pub fn write_simulation(sim: &Simulation, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let cfg = &sim.config;
    let hash = cfg.hash()?;
    let text = cfg.to_toml()?;
    let result = cfg.result.as_deref();
    let mut out = Vec::new();
    let p = io::output_path(dir, "config.toml")?;
    std::fs::write(&p, &text)?;
    out.push(p);
    io::write_trajectory(dir.join("trajectory"), &sim.trajectory, result, Some(&text))?;
    out.push(dir.join("trajectory"));
    if let Some(w) = &sim.reference {
        io::write_trajectory(dir.join("reference"), w, result, Some(&text))?;
        out.push(dir.join("reference"));
    }
    let mut energy = io::energy_table(&sim.audit, &hash);
    if let Some(s) = &sim.smallness {
        energy.summary("perturbation_norm", s.norm);
        energy.summary("reference_size", s.size);
        energy.summary("threshold_general", s.general);
        energy.summary("threshold_beltrami", s.beltrami);
        energy.summary("below_threshold", s.below());
    }
    let p = dir.join("energy.csv");
    energy.write(&p)?;
    out.push(p);
    if let Some(m) = &sim.monitor {
        let p = dir.join("monitor.csv");
        io::monitor_table(m, &hash).write(&p)?;
        out.push(p);
    }
    if !sim.ladder.is_empty() {
        let mut t = Table::new(&hash, &["eps", "l2_step", "monitor_max_ratio"]);
        for r in &sim.ladder {
            t.push(vec![r.eps.to_string(), r.step.map_or(String::new(), |s| s.to_string()), r.run.monitor.max_ratio.to_string()]);
        }
        let p = dir.join("ladder.csv");
        t.write(&p)?;
        out.push(p);
    }
    Ok(out)
}

/// Space-time sample points: the configured times (or every stored time whose largest
/// cylinder fits) crossed with the cube of offsets, in cells, around the centre.
pub fn lattice(traj: &Trajectory, a: &AnalysisSpec) -> Result<Vec<(f64, [f64; 3])>> {
    let r0 = a.radii.first().copied().ok_or_else(|| Error::Config("empty radius ladder".into()))?;
    let (t0, t1) = (traj.times()[0], traj.t_end());
    let times: Vec<f64> = if a.times.is_empty() {
        traj.times().iter().copied().filter(|&t| t - 7.0 * r0 * r0 / 8.0 >= t0 && t + r0 * r0 / 8.0 <= t1).collect()
    } else {
        a.times.clone()
    };
    if times.is_empty() {
        return Err(Error::Config(format!("no stored time fits a cylinder of radius {r0}")));
    }
    let h = traj.grid().spacing();
    let mut pts = Vec::new();
    for &t in &times {
        for &i in &a.offsets {
            for &j in &a.offsets {
                for &k in &a.offsets {
                    let x = [a.center[0] + i as f64 * h, a.center[1] + j as f64 * h, a.center[2] + k as f64 * h];
                    pts.push((t, x));
                }
            }
        }
    }
    Ok(pts)
}

pub fn regularity_map(traj: &Trajectory, cfg: &ExperimentConfig) -> Result<RegularityMap> {
    let a = &cfg.analysis;
    map_regular_set(traj, a.center, &lattice(traj, a)?, &a.radii, cfg.constants.eps_star, &a.apertures)
}

/// The configured grid.
pub fn grid(cfg: &ExperimentConfig) -> Result<Grid> {
    cfg.grid.build()
}
