//! Experiment configuration: a JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use geodisc::control::{Boundary, Obstacle, Quadrature};
use geodisc::hamiltonian::SecondOrderState;
use geodisc::lifts::Discretization;
use geodisc::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Free,
    Obstacle,
    Se2,
    SphereLiftCheck,
}

impl ProblemKind {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "free" => Ok(ProblemKind::Free),
            "obstacle" => Ok(ProblemKind::Obstacle),
            "se2" => Ok(ProblemKind::Se2),
            "sphere-lift-check" => Ok(ProblemKind::SphereLiftCheck),
            _ => Err(format!("unknown problem '{s}' (expected free, obstacle, se2 or sphere-lift-check)")),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryFile {
    pub q_start: Vec<f64>,
    pub qdot_start: Vec<f64>,
    pub q_end: Vec<f64>,
    pub qdot_end: Vec<f64>,
}

/// Contents of a `--config` JSON file; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub n: Option<usize>,
    pub h: Option<f64>,
    pub steps: Option<usize>,
    pub horizon: Option<f64>,
    pub tau: Option<f64>,
    pub r: Option<f64>,
    pub center: Option<[f64; 2]>,
    /// Flat `(q, qdot, p0, p1)`.
    pub init: Option<Vec<f64>>,
    pub boundary: Option<BoundaryFile>,
    pub discretization: Option<String>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub guess: Option<Vec<f64>>,
    pub cost_includes_potential: Option<bool>,
    pub quadrature: Option<String>,
    pub suites: Option<Vec<String>>,
    pub convergence_h: Option<Vec<f64>>,
}

pub fn load_file(path: Option<&Path>) -> Result<FileConfig, String> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("'{t}' is not a number"))
        })
        .collect()
}

pub fn parse_center(s: &str) -> Result<[f64; 2], String> {
    match parse_list(s)?.as_slice() {
        [x, y] => Ok([*x, *y]),
        other => Err(format!("center needs two numbers, got {}", other.len())),
    }
}

fn parse_discretization(s: &str) -> Result<Discretization, String> {
    if s == "midpoint" {
        return Ok(Discretization::Midpoint);
    }
    if let Some(t) = s.strip_prefix("theta:") {
        let theta: f64 = t.parse().map_err(|_| format!("'{t}' is not a number"))?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(format!("theta must lie in [0, 1], got {theta}"));
        }
        return Ok(Discretization::Theta(theta));
    }
    Err(format!("unknown discretization '{s}' (expected midpoint or theta:<value>)"))
}

fn parse_quadrature(s: &str) -> Result<Quadrature, String> {
    match s {
        "left" => Ok(Quadrature::LeftEndpoint),
        "trapezoid" => Ok(Quadrature::Trapezoid),
        _ => Err(format!("unknown quadrature '{s}' (expected left or trapezoid)")),
    }
}

/// Flags shared by `simulate` and `shoot`.
#[derive(Debug, Clone, Default, Args)]
pub struct ProblemFlags {
    /// JSON config file; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// free | obstacle | se2
    #[arg(long)]
    pub problem: Option<String>,
    /// Configuration-space dimension (se2 is always 3)
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Obstacle potential strength
    #[arg(long)]
    pub tau: Option<f64>,
    /// Obstacle radius
    #[arg(long)]
    pub r: Option<f64>,
    /// Obstacle center as x,y
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    /// midpoint | theta:<value>
    #[arg(long)]
    pub discretization: Option<String>,
    /// Trajectory CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional SVG plot of the xy path
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateFlags {
    #[command(flatten)]
    pub common: ProblemFlags,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Initial state as a comma list q,qdot,p0,p1 (4n numbers)
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ShootFlags {
    #[command(flatten)]
    pub common: ProblemFlags,
    /// Time horizon T (a multiple of h)
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q_start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub qdot_start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub q_end: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub qdot_end: Option<String>,
    /// Initial costate guess p0,p1 (2n numbers)
    #[arg(long, allow_hyphen_values = true)]
    pub guess: Option<String>,
    /// Terminal defect tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Leave V(q) out of the reported cost
    #[arg(long)]
    pub control_cost_only: bool,
    /// left | trapezoid
    #[arg(long)]
    pub quadrature: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CheckFlags {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Suites to run (comma list or repeated); default all
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    /// Step sizes for the convergence suite, e.g. 0.04,0.02,0.01
    #[arg(long = "h")]
    pub convergence_h: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Problem settings after merging file and flags.
#[derive(Debug, Clone)]
pub struct ProblemSettings {
    pub kind: ProblemKind,
    pub n: usize,
    pub h: f64,
    pub obstacle: Option<Obstacle>,
    pub discretization: Discretization,
    pub out: PathBuf,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub problem: ProblemSettings,
    pub steps: usize,
    pub initial: SecondOrderState,
}

#[derive(Debug, Clone)]
pub struct ShootConfig {
    pub problem: ProblemSettings,
    pub horizon: f64,
    pub boundary: Boundary,
    pub guess: Vector,
    pub tol: f64,
    pub cost_includes_potential: bool,
    pub quadrature: Quadrature,
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub suites: Vec<String>,
    pub seed: u64,
    pub convergence_h: Vec<f64>,
}

fn positive(name: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

fn problem_settings(flags: &ProblemFlags, file: &FileConfig, default_kind: ProblemKind, inferred_n: Option<usize>) -> Result<ProblemSettings, String> {
    let kind = match flags.problem.as_deref().or(file.problem.as_deref()) {
        Some(s) => ProblemKind::parse(s)?,
        None => default_kind,
    };
    if kind == ProblemKind::SphereLiftCheck {
        return Err("problem 'sphere-lift-check' is run by the check command".into());
    }
    let n = match (kind, flags.n.or(file.n), inferred_n) {
        (ProblemKind::Se2, Some(n), _) if n != 3 => return Err(format!("the se2 problem has n = 3, got {n}")),
        (ProblemKind::Se2, _, _) => 3,
        (_, Some(n), _) => n,
        (_, None, Some(n)) => n,
        (_, None, None) => return Err("dimension n is required".into()),
    };
    if n == 0 {
        return Err("dimension n must be positive".into());
    }
    if let Some(m) = inferred_n {
        if m != n {
            return Err(format!("state data has dimension {m}, but n = {n}"));
        }
    }
    let h = positive("h", flags.h.or(file.h).unwrap_or(0.01))?;
    let obstacle = if kind == ProblemKind::Free {
        None
    } else {
        if n < 2 {
            return Err(format!("the obstacle acts on two coordinates, n = {n}"));
        }
        let center = match &flags.center {
            Some(s) => parse_center(s)?,
            None => file.center.unwrap_or([0.0, 0.0]),
        };
        let tau = flags.tau.or(file.tau).unwrap_or(1e-20);
        let r = flags.r.or(file.r).unwrap_or(1.0);
        Some(Obstacle::new(tau, r, center).map_err(|e| e.to_string())?)
    };
    let discretization = parse_discretization(flags.discretization.as_deref().or(file.discretization.as_deref()).unwrap_or("midpoint"))?;
    Ok(ProblemSettings {
        kind,
        n,
        h,
        obstacle,
        discretization,
        out: flags.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("trajectory.csv")),
        svg: flags.svg.clone().or_else(|| file.svg.clone()),
    })
}

fn list_flag(flag: &Option<String>, file: Option<&Vec<f64>>) -> Result<Option<Vec<f64>>, String> {
    match flag {
        Some(s) => parse_list(s).map(Some),
        None => Ok(file.cloned()),
    }
}

fn finite(name: &str, v: &[f64]) -> Result<(), String> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(format!("{name} contains a non-finite value"))
    }
}

pub fn simulate_config(flags: &SimulateFlags) -> Result<SimulateConfig, String> {
    let file = load_file(flags.common.config.as_deref())?;
    if file.boundary.is_some() {
        return Err("simulate takes an initial state, not boundary data".into());
    }
    let init = list_flag(&flags.init, file.init.as_ref())?.ok_or("an initial state is required (--init q,qdot,p0,p1)")?;
    finite("init", &init)?;
    if init.is_empty() || init.len() % 4 != 0 {
        return Err(format!("--init needs 4n numbers (q, qdot, p0, p1), got {}", init.len()));
    }
    let problem = problem_settings(&flags.common, &file, ProblemKind::Se2, Some(init.len() / 4))?;
    let steps = flags.steps.or(file.steps).unwrap_or(400);
    if steps == 0 {
        return Err("steps must be at least 1".into());
    }
    let initial = SecondOrderState::from_phase(&Vector::from_vec(init)).map_err(|e| e.to_string())?;
    if let Some(o) = &problem.obstacle {
        let c = o.clearance(&initial.q);
        if c <= 0.0 {
            return Err(format!("initial point lies inside the obstacle (clearance {c:.3e})"));
        }
    }
    Ok(SimulateConfig { problem, steps, initial })
}

pub fn shoot_config(flags: &ShootFlags) -> Result<ShootConfig, String> {
    let file = load_file(flags.common.config.as_deref())?;
    if file.init.is_some() {
        return Err("shoot takes boundary data, not an initial state".into());
    }
    let fb = file.boundary.clone();
    let part = |flag: &Option<String>, pick: fn(&BoundaryFile) -> &Vec<f64>, name: &str| -> Result<Vec<f64>, String> {
        let v = list_flag(flag, fb.as_ref().map(pick))?.ok_or_else(|| format!("boundary data is required (missing --{name})"))?;
        finite(name, &v)?;
        Ok(v)
    };
    let q_start = part(&flags.q_start, |b| &b.q_start, "q-start")?;
    let qdot_start = part(&flags.qdot_start, |b| &b.qdot_start, "qdot-start")?;
    let q_end = part(&flags.q_end, |b| &b.q_end, "q-end")?;
    let qdot_end = part(&flags.qdot_end, |b| &b.qdot_end, "qdot-end")?;
    let problem = problem_settings(&flags.common, &file, ProblemKind::Free, Some(q_start.len()))?;
    let n = problem.n;
    for (name, v) in [("qdot-start", &qdot_start), ("q-end", &q_end), ("qdot-end", &qdot_end)] {
        if v.len() != n {
            return Err(format!("{name} has {} entries, expected {n}", v.len()));
        }
    }
    let guess = list_flag(&flags.guess, file.guess.as_ref())?.unwrap_or_else(|| vec![0.0; 2 * n]);
    finite("guess", &guess)?;
    if guess.len() != 2 * n {
        return Err(format!("guess needs 2n = {} numbers, got {}", 2 * n, guess.len()));
    }
    let tol = flags.tol.or(file.tol).unwrap_or(1e-10);
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(format!("tol must be non-negative, got {tol}"));
    }
    let quadrature = parse_quadrature(flags.quadrature.as_deref().or(file.quadrature.as_deref()).unwrap_or("left"))?;
    Ok(ShootConfig {
        horizon: positive("horizon", flags.horizon.or(file.horizon).unwrap_or(1.0))?,
        boundary: Boundary {
            q_start: Vector::from_vec(q_start),
            qdot_start: Vector::from_vec(qdot_start),
            q_end: Vector::from_vec(q_end),
            qdot_end: Vector::from_vec(qdot_end),
        },
        guess: Vector::from_vec(guess),
        tol,
        cost_includes_potential: !flags.control_cost_only && file.cost_includes_potential.unwrap_or(true),
        quadrature,
        problem,
    })
}

pub fn check_config(flags: &CheckFlags, env_seed: Option<&str>) -> Result<CheckConfig, String> {
    let file = load_file(flags.config.as_deref())?;
    let mut suites: Vec<String> = if !flags.suite.is_empty() {
        flags.suite.iter().map(|s| s.trim().to_string()).collect()
    } else if let Some(s) = &file.suites {
        s.clone()
    } else {
        Vec::new()
    };
    if suites.is_empty() {
        if let Some(p) = &file.problem {
            if ProblemKind::parse(p)? == ProblemKind::SphereLiftCheck {
                suites.push("sphere-lift".into());
            }
        }
    }
    if suites.is_empty() {
        suites = geodisc::checks::SUITES.iter().map(|s| s.to_string()).collect();
    }
    for s in &suites {
        if !geodisc::checks::SUITES.contains(&s.as_str()) {
            return Err(format!("unknown suite '{s}' (known: {})", geodisc::checks::SUITES.join(", ")));
        }
    }
    let seed = match env_seed {
        Some(s) => s.trim().parse::<u64>().map_err(|_| format!("GEODISC_SEED '{s}' is not an unsigned integer"))?,
        None => flags.seed.or(file.seed).unwrap_or(geodisc::checks::CheckOptions::default().seed),
    };
    let convergence_h = match &flags.convergence_h {
        Some(s) => parse_list(s)?,
        None => file.convergence_h.clone().unwrap_or_else(|| geodisc::checks::CheckOptions::default().convergence_steps),
    };
    if convergence_h.len() < 2 {
        return Err("the convergence suite needs at least two step sizes".into());
    }
    for &h in &convergence_h {
        positive("convergence step", h)?;
        geodisc::control::step_count(1.0, h).map_err(|_| format!("convergence step {h} does not divide the unit horizon"))?;
    }
    Ok(CheckConfig { suites, seed, convergence_h })
}
