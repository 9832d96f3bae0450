use std::path::Path;

use serde_json::{json, Value};

use geodisc::checks::{all_passed, run_suites, CheckOptions};
use geodisc::control::{make_free_spline, make_obstacle_problem, shoot, simulate, Obstacle, OCProblem, Quadrature};
use geodisc::hamiltonian::{Potential, Trajectory};
use geodisc::{Error, Vector};

use crate::config::{CheckConfig, ProblemKind, ProblemSettings, ShootConfig, SimulateConfig};
use crate::output::{read_xy, trajectory_csv, write_atomic, xy_svg};

/// A failed command: exit code plus a one-line `error: <kind>: <message>`.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { kind: "config", code: 2, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Failure { kind: "solver", code: 1, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure { kind: "io", code: 1, message: message.into() }
    }

    pub fn line(&self) -> String {
        let msg: Vec<&str> = self.message.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        format!("error: {}: {}", self.kind, msg.join("; "))
    }
}

fn from_core(e: Error) -> Failure {
    match e {
        Error::BadDiscretization { .. }
        | Error::StartInsideObstacle { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidArgument(_)
        | Error::UnsupportedOrder { .. } => Failure::config(e.to_string()),
        _ => Failure::solver(e.to_string()),
    }
}

fn vec_json(v: &Vector) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

fn state_json(traj: &Trajectory, k: usize) -> Value {
    let s = &traj.states[k];
    json!({
        "t": traj.time(k),
        "q": vec_json(&s.q),
        "qdot": vec_json(&s.qdot),
        "p0": vec_json(&s.p0),
        "p1": vec_json(&s.p1),
    })
}

fn write_outputs(settings: &ProblemSettings, traj: &Trajectory) -> Result<(), Failure> {
    let bytes = trajectory_csv(traj, settings.obstacle.as_ref()).map_err(Failure::io)?;
    write_atomic(&settings.out, &bytes).map_err(|e| Failure::io(format!("{}: {e}", settings.out.display())))?;
    if let Some(svg) = &settings.svg {
        let pts: Vec<(f64, f64)> = traj.states.iter().map(|s| (s.q[0], if s.n() > 1 { s.q[1] } else { 0.0 })).collect();
        let circle = settings.obstacle.map(|o| (o.radius, o.center));
        write_atomic(svg, xy_svg(&pts, circle).as_bytes()).map_err(|e| Failure::io(format!("{}: {e}", svg.display())))?;
    }
    Ok(())
}

fn min_clearance(traj: &Trajectory, obstacle: Option<&Obstacle>) -> Option<f64> {
    obstacle.map(|o| traj.states.iter().map(|s| o.clearance(&s.q)).fold(f64::INFINITY, f64::min))
}

/// Left-endpoint cost `sum_k h (|u_k|^2 / 2 + V(q_k))`.
fn running_cost(traj: &Trajectory, obstacle: Option<&Obstacle>) -> f64 {
    (0..traj.steps())
        .map(|k| {
            let v = obstacle.map(|o| o.value(&traj.states[k].q)).unwrap_or(0.0);
            traj.h * (0.5 * traj.controls[k].norm_squared() + v)
        })
        .sum()
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn problem_name(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Free => "free",
        ProblemKind::Obstacle => "obstacle",
        ProblemKind::Se2 => "se2",
        ProblemKind::SphereLiftCheck => "sphere-lift-check",
    }
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> Result<(), Failure> {
    let p = &cfg.problem;
    let c = p.discretization.lifted_cotangent(p.n).map_err(from_core)?;
    let traj = simulate(c.as_ref(), p.n, p.obstacle.as_ref(), p.h, cfg.steps, &cfg.initial).map_err(from_core)?;
    write_outputs(p, &traj)?;
    let last = traj.len() - 1;
    print_json(&json!({
        "problem": problem_name(p.kind),
        "steps": traj.steps(),
        "h": p.h,
        "final_state": state_json(&traj, last),
        "hamiltonian_initial": traj.hamiltonian[0],
        "max_hamiltonian_drift": traj.max_hamiltonian_drift(),
        "min_clearance": min_clearance(&traj, p.obstacle.as_ref()),
        "cost": running_cost(&traj, p.obstacle.as_ref()),
        "csv": p.out.display().to_string(),
    }));
    Ok(())
}

fn build_problem(cfg: &ShootConfig) -> Result<OCProblem, Failure> {
    let p = &cfg.problem;
    let mut prob = match p.obstacle {
        Some(o) => make_obstacle_problem(p.n, o.tau, o.radius, o.center, cfg.boundary.clone(), cfg.horizon, p.h),
        None => make_free_spline(p.n, cfg.boundary.clone(), cfg.horizon, p.h),
    }
    .map_err(|e| Failure::config(e.to_string()))?;
    prob.cost_includes_potential = cfg.cost_includes_potential;
    prob.quadrature = cfg.quadrature;
    Ok(prob)
}

pub fn cmd_shoot(cfg: &ShootConfig) -> Result<(), Failure> {
    let p = &cfg.problem;
    let prob = build_problem(cfg)?;
    let c = p.discretization.lifted_cotangent(p.n).map_err(from_core)?;
    let res = shoot(&prob, c.as_ref(), &cfg.guess, cfg.tol).map_err(from_core)?;
    write_outputs(p, &res.trajectory)?;
    print_json(&json!({
        "problem": problem_name(p.kind),
        "converged": res.converged,
        "iterations": res.iterations,
        "p0": vec_json(&res.p0),
        "p1": vec_json(&res.p1),
        "defect": res.defect_norm,
        "tolerance": cfg.tol,
        "cost": res.cost,
        "cost_includes_potential": prob.cost_includes_potential,
        "quadrature": match prob.quadrature {
            Quadrature::LeftEndpoint => "left",
            Quadrature::Trapezoid => "trapezoid",
        },
        "steps": prob.steps,
        "min_clearance": min_clearance(&res.trajectory, prob.obstacle.as_ref()),
        "csv": p.out.display().to_string(),
    }));
    if res.converged {
        Ok(())
    } else {
        Err(Failure::solver(format!(
            "shooting did not converge after {} iterations (terminal defect {:.3e}, tolerance {:.3e})",
            res.iterations, res.defect_norm, cfg.tol
        )))
    }
}

pub fn cmd_check(cfg: &CheckConfig) -> Result<(), Failure> {
    let opts = CheckOptions { seed: cfg.seed, convergence_steps: cfg.convergence_h.clone() };
    let names: Vec<&str> = cfg.suites.iter().map(String::as_str).collect();
    let results = run_suites(&names, &opts).map_err(from_core)?;
    let passed = all_passed(&results);
    print_json(&json!({
        "all_passed": passed,
        "seed": cfg.seed,
        "results": results,
    }));
    if passed {
        Ok(())
    } else {
        let failed = results.iter().filter(|e| e.status == geodisc::checks::Status::Fail).count();
        Err(Failure::solver(format!("{failed} check(s) failed")))
    }
}

pub fn cmd_plot(csv: &Path, svg: &Path, circle: Option<(f64, [f64; 2])>) -> Result<(), Failure> {
    if let Some((r, c)) = circle {
        if !(r > 0.0 && r.is_finite() && c.iter().all(|x| x.is_finite())) {
            return Err(Failure::config(format!("invalid obstacle circle: r = {r}")));
        }
    }
    let pts = read_xy(csv).map_err(|e| Failure { kind: "io", code: 2, message: e })?;
    write_atomic(svg, xy_svg(&pts, circle).as_bytes()).map_err(|e| Failure::io(format!("{}: {e}", svg.display())))?;
    Ok(())
}
