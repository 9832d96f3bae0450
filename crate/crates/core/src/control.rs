//! Second-order optimal control problems: free splines, obstacle avoidance
//! with an artificial potential, and the planar rigid body in `(x, y, theta)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{ensure_dim, Error, Result};
use crate::hamiltonian::{integrate_guarded, Potential, SecondOrderHamiltonian, SecondOrderState, Trajectory, ZeroPotential};
use crate::lifts::Discretization;
use crate::maps::DiscretizationMap;
use crate::numeric::{concat, inf_norm, newton, NewtonOptions, Vector};

/// Clearance at or below which the obstacle potential is treated as singular.
pub const CLEARANCE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub q_start: Vector,
    pub qdot_start: Vector,
    pub q_end: Vector,
    pub qdot_end: Vector,
}

impl Boundary {
    fn check(&self, n: usize) -> Result<()> {
        for v in [&self.q_start, &self.qdot_start, &self.q_end, &self.qdot_end] {
            ensure_dim(n, v.len())?;
        }
        Ok(())
    }
}

/// `V(q) = tau / ((x - cx)^2 + (y - cy)^2 - r^2)` on the first two coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Obstacle {
    pub tau: f64,
    pub radius: f64,
    pub center: [f64; 2],
}

impl Obstacle {
    pub fn new(tau: f64, radius: f64, center: [f64; 2]) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("obstacle radius must be positive, got {radius}")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("potential strength must be non-negative, got {tau}")));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("obstacle center must be finite".into()));
        }
        Ok(Obstacle { tau, radius, center })
    }

    /// `(x - cx)^2 + (y - cy)^2 - r^2`.
    pub fn clearance(&self, q: &Vector) -> f64 {
        let (dx, dy) = (q[0] - self.center[0], q[1] - self.center[1]);
        dx * dx + dy * dy - self.radius * self.radius
    }
}

impl Potential for Obstacle {
    fn value(&self, q: &Vector) -> f64 {
        self.tau / self.clearance(q)
    }
    fn gradient(&self, q: &Vector) -> Vector {
        let d = self.clearance(q);
        let scale = -2.0 * self.tau / (d * d);
        let mut g = Vector::zeros(q.len());
        g[0] = scale * (q[0] - self.center[0]);
        g[1] = scale * (q[1] - self.center[1]);
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quadrature {
    LeftEndpoint,
    Trapezoid,
}

#[derive(Debug, Clone)]
pub struct OCProblem {
    pub n: usize,
    pub horizon: f64,
    pub h: f64,
    pub steps: usize,
    pub boundary: Boundary,
    pub obstacle: Option<Obstacle>,
    /// Whether `J` integrates `V(q)` alongside `|u|^2 / 2`.
    pub cost_includes_potential: bool,
    pub quadrature: Quadrature,
}

/// `N = T / h`, required to be an integer within `1e-9`.
pub fn step_count(horizon: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite() && horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::BadDiscretization { horizon, step: h });
    }
    let n = (horizon / h).round();
    if n < 1.0 || (n * h - horizon).abs() > 1e-9 {
        return Err(Error::BadDiscretization { horizon, step: h });
    }
    Ok(n as usize)
}

pub fn make_free_spline(n: usize, boundary: Boundary, horizon: f64, h: f64) -> Result<OCProblem> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    boundary.check(n)?;
    let steps = step_count(horizon, h)?;
    Ok(OCProblem { n, horizon, h, steps, boundary, obstacle: None, cost_includes_potential: true, quadrature: Quadrature::LeftEndpoint })
}

pub fn make_obstacle_problem(n: usize, tau: f64, radius: f64, center: [f64; 2], boundary: Boundary, horizon: f64, h: f64) -> Result<OCProblem> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("the obstacle acts on two coordinates, n = {n}")));
    }
    let obstacle = Obstacle::new(tau, radius, center)?;
    let mut prob = make_free_spline(n, boundary, horizon, h)?;
    for q in [&prob.boundary.q_start, &prob.boundary.q_end] {
        let clearance = obstacle.clearance(q);
        if clearance <= 0.0 {
            return Err(Error::StartInsideObstacle { clearance });
        }
    }
    prob.obstacle = Some(obstacle);
    Ok(prob)
}

impl OCProblem {
    pub fn potential(&self) -> Arc<dyn Potential> {
        match self.obstacle {
            Some(o) => Arc::new(o),
            None => Arc::new(ZeroPotential),
        }
    }

    pub fn hamiltonian(&self) -> SecondOrderHamiltonian {
        SecondOrderHamiltonian::new(self.n, self.potential())
    }

    pub fn initial_state(&self, p0: &Vector, p1: &Vector) -> Result<SecondOrderState> {
        SecondOrderState::new(self.boundary.q_start.clone(), self.boundary.qdot_start.clone(), p0.clone(), p1.clone())
    }
}

/// Discrete cost `sum_k h (|u_k|^2 / 2 + V(q_k))` over the `N` steps.
pub fn cost_of(traj: &Trajectory, prob: &OCProblem) -> f64 {
    let pot = prob.potential();
    let running = |k: usize| {
        let v = if prob.cost_includes_potential { pot.value(&traj.states[k].q) } else { 0.0 };
        0.5 * traj.controls[k].norm_squared() + v
    };
    let steps = traj.steps();
    match prob.quadrature {
        Quadrature::LeftEndpoint => (0..steps).map(|k| traj.h * running(k)).sum(),
        Quadrature::Trapezoid => (0..steps).map(|k| 0.5 * traj.h * (running(k) + running(k + 1))).sum(),
    }
}

/// Forward run from `initial`, failing with [`Error::SingularPotential`]
/// as soon as a state comes within [`CLEARANCE_EPS`] of the obstacle.
pub fn simulate(
    c: &dyn DiscretizationMap,
    n: usize,
    obstacle: Option<&Obstacle>,
    h: f64,
    steps: usize,
    initial: &SecondOrderState,
) -> Result<Trajectory> {
    ensure_dim(n, initial.n())?;
    let ham = match obstacle {
        Some(o) => {
            if n < 2 {
                return Err(Error::InvalidArgument(format!("the obstacle acts on two coordinates, n = {n}")));
            }
            let clearance = o.clearance(&initial.q);
            if clearance <= 0.0 {
                return Err(Error::StartInsideObstacle { clearance });
            }
            SecondOrderHamiltonian::new(n, Arc::new(*o))
        }
        None => SecondOrderHamiltonian::free(n),
    };
    let mut guard = |k: usize, z: &Vector| {
        if let Some(o) = obstacle {
            let clearance = o.clearance(&z.rows(0, n).into_owned());
            if clearance <= CLEARANCE_EPS {
                return Err(Error::SingularPotential { step: k, clearance });
            }
        }
        Ok(())
    };
    integrate_guarded(c, &ham, h, steps, &initial.to_phase(), &mut guard)
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub p0: Vector,
    pub p1: Vector,
    pub trajectory: Trajectory,
    /// `|(q_N - q_end, qdot_N - qdot_end)|_inf`.
    pub defect_norm: f64,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Single shooting over the initial costates `(p0, p1)`.
///
/// Trials whose trajectory enters the obstacle are rejected and the Newton
/// step is halved. Without convergence the best iterate is returned with
/// `converged = false`.
pub fn shoot(prob: &OCProblem, c: &dyn DiscretizationMap, guess: &Vector, tol: f64) -> Result<ShootingResult> {
    let n = prob.n;
    ensure_dim(2 * n, guess.len())?;
    ensure_dim(4 * n, c.dim())?;
    if !guess.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument("shooting guess must be finite".into()));
    }
    let ham = prob.hamiltonian();
    let run = |x: &Vector| -> Result<Trajectory> {
        let z0 = concat(&[&prob.boundary.q_start, &prob.boundary.qdot_start, &x.rows(0, n).into_owned(), &x.rows(n, n).into_owned()]);
        let mut guard = |k: usize, z: &Vector| {
            if let Some(o) = &prob.obstacle {
                let clearance = o.clearance(&z.rows(0, n).into_owned());
                if clearance <= CLEARANCE_EPS {
                    return Err(Error::ObstaclePenetration { step: k, clearance });
                }
            }
            Ok(())
        };
        integrate_guarded(c, &ham, prob.h, prob.steps, &z0, &mut guard)
    };
    let defect = |traj: &Trajectory| {
        let end = traj.last();
        concat(&[&(&end.q - &prob.boundary.q_end), &(&end.qdot - &prob.boundary.qdot_end)])
    };
    let residual = |x: &Vector| run(x).map(|t| defect(&t));
    let opts = NewtonOptions { tol, max_iter: 50, backtracking: true };
    let report = newton(residual, None, guess, &opts)?;
    let trajectory = run(&report.x)?;
    let defect_norm = inf_norm(&defect(&trajectory));
    Ok(ShootingResult {
        p0: report.x.rows(0, n).into_owned(),
        p1: report.x.rows(n, n).into_owned(),
        cost: cost_of(&trajectory, prob),
        defect_norm,
        converged: report.converged,
        iterations: report.iterations,
        trajectory,
    })
}

#[derive(Debug, Clone)]
pub struct Se2Config {
    pub tau: f64,
    pub radius: f64,
    pub center: [f64; 2],
    pub h: f64,
    pub steps: usize,
    pub initial: SecondOrderState,
    pub discretization: Discretization,
}

/// A state left of the obstacle, heading right and drifting upward past it.
pub fn default_se2_initial_state() -> SecondOrderState {
    SecondOrderState {
        q: Vector::from_column_slice(&[-3.0, 0.5, 0.0]),
        qdot: Vector::from_column_slice(&[1.5, 0.5, 0.4]),
        p0: Vector::from_column_slice(&[0.0, 0.1, 0.0]),
        p1: Vector::from_column_slice(&[0.0, 0.2, 0.0]),
    }
}

impl Default for Se2Config {
    fn default() -> Self {
        Se2Config {
            tau: 1e-20,
            radius: 1.0,
            center: [0.0, 0.0],
            h: 0.01,
            steps: 400,
            initial: default_se2_initial_state(),
            discretization: Discretization::Midpoint,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Se2Report {
    pub trajectory: Trajectory,
    pub clearances: Vec<f64>,
    pub min_clearance: f64,
    pub max_h_drift: f64,
}

/// Forward run of the planar rigid body in chart coordinates `(x, y, theta)`.
pub fn run_se2_experiment(cfg: &Se2Config) -> Result<Se2Report> {
    ensure_dim(3, cfg.initial.n())?;
    let obstacle = Obstacle::new(cfg.tau, cfg.radius, cfg.center)?;
    let c = cfg.discretization.lifted_cotangent(3)?;
    let trajectory = simulate(c.as_ref(), 3, Some(&obstacle), cfg.h, cfg.steps, &cfg.initial)?;
    let clearances: Vec<f64> = trajectory.states.iter().map(|s| obstacle.clearance(&s.q)).collect();
    Ok(Se2Report {
        min_clearance: clearances.iter().copied().fold(f64::INFINITY, f64::min),
        max_h_drift: trajectory.max_hamiltonian_drift(),
        clearances,
        trajectory,
    })
}
