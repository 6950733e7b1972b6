//! Command-line runner behind the `nslab` binary.

use crate::config::{ExperimentConfig, GridSpec, InitialSpec, Mode};
use crate::decompose::{gap_split, kato_check, threshold_split};
use crate::error::{Error, Result};
use crate::experiments::{self, regularity_map, simulate, smallness, write_simulation};
use crate::fields::{BeltramiFlow, BeltramiSpec, BumpSpec, Profile};
use crate::grid::Field;
use crate::inequalities::{verify_ckn_inequality, verify_stein_inequality, CknParams, Ensemble};
use crate::io::{self, Table};
use crate::norms::{mixed_norm, sobolev_norm, theta2, weighted_lp_norm, MixedNormSpec, Weight};
use crate::regularity::{segment_diagnostic, t_star, t_star_windowed};
use crate::solver::Trajectory;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "nslab", version, about = "Perturbative regularity experiments for 3D Navier-Stokes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Source {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named preset; see `nslab simulate --list`.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Option<ExperimentConfig>> {
        match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::load(p).map(Some),
            (None, Some(n)) => experiments::preset(n).map(Some),
            (None, None) => Ok(None),
        }
    }

    fn require(&self, default_preset: &str) -> Result<ExperimentConfig> {
        match self.load()? {
            Some(c) => Ok(c),
            None => experiments::preset(default_preset),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Abc,
    Bump,
    TaylorGreen,
    Random,
    Axisym,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Direct,
    Perturbed,
    Mollified,
    #[value(name = "2d")]
    Planar,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Direct => Mode::Direct,
            ModeArg::Perturbed => Mode::Perturbed,
            ModeArg::Mollified => Mode::Mollified,
            ModeArg::Planar => Mode::Planar,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct FieldArgs {
    #[arg(long, value_enum, default_value = "abc")]
    pub family: Family,
    #[arg(long = "A", default_value_t = 1.0)]
    pub a: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    pub b: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// Wavenumber of the ABC flow.
    #[arg(long, default_value_t = 1)]
    pub mode: u32,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub dims: usize,
    /// Half-width L of the box `[-L, L)^d`.
    #[arg(long, default_value_t = PI)]
    pub half_width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Bump radius or ring width.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 4)]
    pub kmax: i64,
    #[arg(long, default_value_t = 1.0)]
    pub energy: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl FieldArgs {
    fn build(&self) -> Result<Field> {
        let g = GridSpec { dims: self.dims, n: self.n, half_width: self.half_width }.build()?;
        let spec = match self.family {
            Family::Abc => InitialSpec::Abc(BeltramiSpec { a: self.a, b: self.b, c: self.c, mode: self.mode }),
            Family::Bump => InitialSpec::Bump(BumpSpec::new(Profile::Compact { radius: self.radius }, self.amplitude)),
            Family::TaylorGreen => InitialSpec::TaylorGreen { amplitude: self.amplitude },
            Family::Random => InitialSpec::Random { kmax: self.kmax, energy: self.energy },
            Family::Axisym => InitialSpec::AxisymRing { amplitude: self.amplitude, width: self.radius },
        };
        spec.build(&g, self.seed)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write an initial field as an NSRF snapshot.
    Generate {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value = "field.nsrf")]
        out: PathBuf,
    },
    /// Run a solver and write the trajectory archive and energy audit.
    Simulate {
        #[arg(value_enum)]
        mode: Option<ModeArg>,
        #[command(flatten)]
        source: Source,
        /// List the presets and exit.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build `u0 = w0 + v0` and measure `v0` against the smallness thresholds.
    Perturb {
        #[command(flatten)]
        source: Source,
        /// Override the perturbation amplitude of a bump.
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long, default_value = "perturb")]
        out: PathBuf,
    },
    /// CKN scores on a space-time lattice and the fitted paraboloid aperture.
    RegularMap {
        /// Simulation output or trajectory archive.
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        /// Lattice offsets per axis in grid cells.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        offsets: Option<Vec<i64>>,
        #[arg(long)]
        eps_star: Option<f64>,
        #[arg(long, default_value = "regularity.csv")]
        out: PathBuf,
    },
    /// Weighted dissipation along the segment `x = c + xi t` as `mu -> 0`.
    Segment {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0")]
        center: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0")]
        xi: Vec<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.01,0.001")]
        mus: Vec<f64>,
        #[arg(long, default_value = "segment.csv")]
        out: PathBuf,
    },
    /// Changeover time between the weighted dissipation of `v` and the reference norm.
    Tstar {
        /// Simulation output containing `trajectory/` and `reference/`.
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0")]
        center: Vec<f64>,
        #[arg(long, default_value_t = 1e-2)]
        mu: f64,
        #[arg(long, default_value_t = 4.0)]
        r: f64,
        #[arg(long, default_value_t = 6.0)]
        q: f64,
        /// Also report the windowed variant at level M.
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, default_value = "tstar.csv")]
        out: PathBuf,
    },
    /// Threshold and gap splits of initial data.
    Decompose {
        #[command(flatten)]
        source: Source,
        /// NSRF initial field instead of the configured one.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        #[arg(long, default_value = "decompose.txt")]
        out: PathBuf,
    },
    /// Small-data gate `|w0|_{L^3} < eps_1`.
    KatoCheck {
        #[arg(long)]
        field: Option<PathBuf>,
        #[command(flatten)]
        generate: FieldArgs,
        #[arg(long, default_value_t = 0.1)]
        eps1: f64,
        /// Trajectory for the `L^5_t L^5_x` norm.
        #[arg(long)]
        traj: Option<PathBuf>,
    },
    /// Weighted interpolation inequality over a seeded ensemble.
    VerifyCkn {
        #[command(flatten)]
        ens: EnsembleArgs,
        /// Members of the `2 theta = 1 + 3/q` family.
        #[arg(long, value_delimiter = ',', default_value = "3.5,6,12")]
        q: Vec<f64>,
        /// Skip the cubic set.
        #[arg(long)]
        no_cubic: bool,
        #[arg(long, default_value = "ckn.csv")]
        out: PathBuf,
    },
    /// Weighted bound for `R_i R_j` over a seeded ensemble.
    VerifyStein {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Weight `sigma_mu^a`.
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        a: f64,
        /// Index pairs `i:j`, one-based.
        #[arg(long, value_delimiter = ',', default_value = "1:1,1:2,2:3")]
        pairs: Vec<String>,
        #[arg(long, default_value = "stein.csv")]
        out: PathBuf,
    },
    /// Norms of an NSRF field.
    Norms {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0")]
        center: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Weight `(mu + |x - c|^2)^(exponent/2)`.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        exponent: f64,
        #[arg(long)]
        sobolev: Option<f64>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-2,1")]
    pub mus: Vec<f64>,
}

impl EnsembleArgs {
    fn ensemble(&self) -> Result<Ensemble> {
        Ok(Ensemble::new(GridSpec { dims: 3, n: self.n, half_width: PI }.build()?, self.size, self.seed))
    }
}

/// Hash of the invocation with output paths removed, for runs without a config file.
pub fn args_hash(args: &[String]) -> String {
    let mut h = Sha256::new();
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        h.update(a.as_bytes());
        h.update([0]);
    }
    hex::encode(h.finalize())
}

fn point(v: &[f64]) -> Result<[f64; 3]> {
    match v {
        [x, y, z] => Ok([*x, *y, *z]),
        [x, y] => Ok([*x, *y, 0.0]),
        _ => Err(Error::Config(format!("expected 2 or 3 coordinates, got {}", v.len()))),
    }
}

/// The full velocity and, for perturbed runs, `(v, w)`.
pub struct LoadedRun {
    pub velocity: Trajectory,
    pub perturbation: Option<(Trajectory, Trajectory)>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    if dir.join(io::MANIFEST).exists() {
        return Ok(LoadedRun { velocity: io::read_trajectory(dir)?, perturbation: None });
    }
    let t = dir.join("trajectory");
    if !t.join(io::MANIFEST).exists() {
        return Err(Error::Config(format!("{} holds no trajectory archive", dir.display())));
    }
    let v = io::read_trajectory(&t)?;
    let r = dir.join("reference");
    if r.join(io::MANIFEST).exists() {
        let w = io::read_trajectory(&r)?;
        let mut velocity = w.sum(&v)?;
        velocity.provenance = v.provenance.clone();
        Ok(LoadedRun { velocity, perturbation: Some((v, w)) })
    } else {
        Ok(LoadedRun { velocity: v, perturbation: None })
    }
}

fn trajectory_hash(run: &Trajectory, fallback: &str) -> String {
    if run.provenance.config_hash.is_empty() {
        fallback.into()
    } else {
        run.provenance.config_hash.clone()
    }
}

fn kv(table: &mut Table, key: &str, value: impl ToString) {
    table.push(vec![key.into(), value.to_string()]);
}

pub fn execute(cmd: &Command, hash: &str) -> Result<()> {
    match cmd {
        Command::Generate { field, out } => {
            let f = field.build()?;
            io::write_field(out, &f)?;
            println!("wrote {} (energy {})", out.display(), f.energy());
        }
        Command::Simulate { mode, source, list, out } => {
            if *list {
                for p in experiments::PRESETS {
                    println!("{:<24}{:<20}{}", p.name, p.result, p.about);
                }
                return Ok(());
            }
            let mut cfg = source.require("beltrami-perturbation")?;
            if let Some(m) = mode {
                cfg.mode = (*m).into();
            }
            if let Some(o) = out {
                cfg.output = o.display().to_string();
            }
            cfg.validate()?;
            let sim = simulate(&cfg)?;
            let written = write_simulation(&sim, &cfg.output)?;
            println!("scenario {} ({:?}), {} snapshots", cfg.scenario, cfg.mode, sim.trajectory.len());
            println!("energy audit max violation {:e} (relative {:e})", sim.audit.max_violation, sim.audit.relative());
            if let Some(s) = &sim.smallness {
                println!("perturbation norm {:e}, thresholds {:e} / {:e}, below: {}", s.norm, s.general, s.beltrami, s.below());
            }
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Perturb { source, amplitude, out } => {
            let mut cfg = source.require("beltrami-perturbation")?;
            if let (Some(a), InitialSpec::Bump(b)) = (amplitude, &mut cfg.initial) {
                b.amplitude = *a;
            }
            cfg.validate()?;
            let g = cfg.grid.build()?;
            let spec = cfg.reference.ok_or_else(|| Error::Config("perturb needs a [reference] flow".into()))?;
            let flow = BeltramiFlow::from_spec(&spec, &g)?;
            let v0 = cfg.initial.build(&g, cfg.seed)?;
            let u0 = flow.initial().add(&v0)?;
            let s = smallness(&cfg, &v0, &flow)?;
            std::fs::create_dir_all(out)?;
            io::write_field(out.join("initial.nsrf"), &u0)?;
            io::write_field(out.join("perturbation.nsrf"), &v0)?;
            io::write_field(out.join("reference.nsrf"), flow.initial())?;
            let mut t = Table::new(&cfg.hash()?, &["key", "value"]);
            kv(&mut t, "perturbation_norm", s.norm);
            kv(&mut t, "reference_size", s.size);
            kv(&mut t, "threshold_general", s.general);
            kv(&mut t, "threshold_beltrami", s.beltrami);
            kv(&mut t, "below_threshold", s.below());
            t.write(out.join("smallness.csv"))?;
            println!("perturbation norm {:e}; below threshold: {}", s.norm, s.below());
        }
        Command::RegularMap { traj, source, center, radii, times, offsets, eps_star, out } => {
            let run = load_run(traj)?;
            let mut cfg = match source.load()? {
                Some(c) => c,
                None => experiments::preset("regular-set")?,
            };
            if let Some(c) = center {
                cfg.analysis.center = point(c)?;
            }
            if let Some(r) = radii {
                cfg.analysis.radii = r.clone();
            }
            if let Some(t) = times {
                cfg.analysis.times = t.clone();
            }
            if let Some(o) = offsets {
                cfg.analysis.offsets = o.clone();
            }
            if let Some(e) = eps_star {
                cfg.constants.eps_star = *e;
            }
            let map = regularity_map(&run.velocity, &cfg)?;
            io::regularity_table(&map, &trajectory_hash(&run.velocity, hash)).write(out)?;
            let pass = map.points.iter().filter(|p| p.scan.pass).count();
            println!("{pass}/{} points pass; alpha_hat = {:?}", map.points.len(), map.alpha_hat);
        }
        Command::Segment { traj, center, xi, t_end, mus, out } => {
            let run = load_run(traj)?;
            let v = run.perturbation.as_ref().map(|p| &p.0).unwrap_or(&run.velocity);
            let r = segment_diagnostic(v, point(center)?, point(xi)?, t_end.unwrap_or(v.t_end()), mus)?;
            let mut t = Table::new(&trajectory_hash(v, hash), &["mu", "value"]);
            for (m, val) in r.mus.iter().zip(&r.values) {
                t.push(vec![m.to_string(), val.to_string()]);
            }
            t.summary("limit", r.limit);
            t.summary("extrapolated", r.extrapolated);
            t.write(out)?;
            println!("limit {:e}, extrapolated {:e}", r.limit, r.extrapolated);
        }
        Command::Tstar { traj, center, mu, r, q, m, out } => {
            let run = load_run(traj)?;
            let (v, w) = run.perturbation.as_ref().ok_or_else(|| Error::Config("tstar needs a perturbed run".into()))?;
            let weight = Weight::sigma(point(center)?, *mu);
            let ts = t_star(v, w, &weight, MixedNormSpec { r: *r, q: *q })?;
            let mut t = Table::new(&trajectory_hash(v, hash), &["t", "dissipation", "reference"]);
            for (i, time) in v.times().iter().enumerate() {
                t.push(vec![time.to_string(), ts.dissipation[i].to_string(), ts.reference[i].to_string()]);
            }
            t.summary("t_star", ts.time);
            t.summary("bracket_holds", ts.bracket_holds());
            t.summary("reference_mixed_norm", mixed_norm(w, MixedNormSpec { r: *r, q: *q })?.value);
            if let Some(m) = m {
                let wt = t_star_windowed(v, &weight, *m, v.t_end())?;
                t.summary("windowed_t_star", wt.time);
                t.summary("windowed_dissipation", wt.dissipation);
                t.summary("windowed_bound", wt.bound);
            }
            t.write(out)?;
            println!("t* = {} (bracket holds: {})", ts.time, ts.bracket_holds());
        }
        Command::Decompose { source, field, s, p, center, out } => {
            let cfg = source.require("gap-split")?;
            let u0 = match field {
                Some(f) => io::read_field(f)?,
                None => cfg.initial.build(&cfg.grid.build()?, cfg.seed)?,
            };
            let c = match center {
                Some(c) => point(c)?,
                None => cfg.analysis.center,
            };
            let split = threshold_split(&u0, s.unwrap_or(cfg.analysis.split_s), c)?;
            let p = p.unwrap_or(cfg.analysis.gap_p);
            let gap = gap_split(&u0, p, c)?;
            let mut text = format!("# config-hash: {}\n[threshold]\n{}\n[gap]\n{}\n[p_table]\n", cfg.hash()?, split.report(), gap.report());
            for &pm in &[2.1, 2.5, 2.9, 2.99, 2.999] {
                let m = weighted_lp_norm(&u0, pm, &Weight::new(c, 0.0, 1.0 - 3.0 / pm))?;
                let v = theta2(pm)? * (m * m / cfg.constants.delta1).exp();
                text.push_str(&format!("p = {pm}, theta2_times_exp = {v:.17e}\n"));
            }
            std::fs::write(out, text)?;
            println!("wrote {}", out.display());
        }
        Command::KatoCheck { field, generate, eps1, traj } => {
            let w0 = match field {
                Some(f) => io::read_field(f)?,
                None => generate.build()?,
            };
            let t = traj.as_ref().map(|d| load_run(d)).transpose()?;
            let r = kato_check(&w0, *eps1, t.as_ref().map(|r| &r.velocity))?;
            println!("pass = {}", r.pass);
            println!("l3 = {:e}", r.l3);
            if let (Some(n), Some(q)) = (r.l5l5, r.ratio) {
                println!("l5l5 = {n:e}");
                println!("ratio = {q:e}");
            }
        }
        Command::VerifyCkn { ens, q, no_cubic, out } => {
            let e = ens.ensemble()?;
            let mut params = q
                .iter()
                .map(|&qv| {
                    num_rational::Rational64::approximate_float(qv)
                        .map(CknParams::gradient_family)
                        .ok_or_else(|| Error::Config(format!("q = {qv} is not representable")))
                })
                .collect::<Result<Vec<_>>>()?;
            if !no_cubic {
                params.push(CknParams::cubic());
            }
            let runs = params.iter().map(|p| verify_ckn_inequality(p, &e, &ens.mus)).collect::<Result<Vec<_>>>()?;
            io::verification_table(&runs, hash).write(out)?;
            for (i, r) in runs.iter().enumerate() {
                println!("{i}: {} max ratio {:e}, mu variation {:.3}", r.label, r.max_ratio(), r.mu_variation());
            }
        }
        Command::VerifyStein { ens, p, a, pairs, out } => {
            let e = ens.ensemble()?;
            let pairs = pairs
                .iter()
                .map(|s| {
                    let bad = || Error::Config(format!("bad index pair {s:?}"));
                    let (i, j) = s.split_once(':').ok_or_else(bad)?;
                    let (i, j): (usize, usize) = (i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?);
                    if !(1..=3).contains(&i) || !(1..=3).contains(&j) {
                        return Err(bad());
                    }
                    Ok((i - 1, j - 1))
                })
                .collect::<Result<Vec<_>>>()?;
            let runs = verify_stein_inequality(*p, *a, &pairs, &e, &ens.mus)?;
            io::verification_table(&runs, hash).write(out)?;
            for (i, r) in runs.iter().enumerate() {
                println!("{i}: {} max ratio {:e}, mu variation {:.3}", r.label, r.max_ratio(), r.mu_variation());
            }
        }
        Command::Norms { field, p, center, mu, exponent, sobolev } => {
            let f = io::read_field(field)?;
            let w = Weight::new(point(center)?, *mu, *exponent);
            println!("weighted_lp = {:e}", weighted_lp_norm(&f, *p, &w)?);
            println!("energy = {:e}", f.energy());
            println!("sup = {:e}", f.max_magnitude());
            if let Some(s) = sobolev {
                println!("sobolev_homogeneous = {:e}", sobolev_norm(&f, *s, true)?);
                println!("sobolev = {:e}", sobolev_norm(&f, *s, false)?);
            }
        }
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::BlowUp { .. } => EXIT_BLOWUP,
        _ => EXIT_FAILURE,
    }
}

/// Parses the process arguments, runs the command and returns the exit status.
pub fn main() -> i32 {
    crate::init_threads();
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&args);
    match execute(&cli.command, &args_hash(&args)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
