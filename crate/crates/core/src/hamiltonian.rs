//! Second-order Hamiltonians on `T*(TQ)` and the implicit symplectic
//! integrator generated by a cotangent-lifted discretization map.

use std::sync::Arc;

use crate::error::{ensure_dim, Error, Result};
use crate::jets::Jet;
use crate::maps::DiscretizationMap;
use crate::numeric::{concat, inf_norm, newton, split, NewtonOptions, NewtonReport, Vector};

/// A Hamiltonian on `T*M`, with points `(m, p)`.
pub trait HamiltonianSystem: Send + Sync {
    /// Dimension of `M`.
    fn dim(&self) -> usize;
    fn value(&self, m: &Vector, p: &Vector) -> f64;
    fn grad_m(&self, m: &Vector, p: &Vector) -> Vector;
    fn grad_p(&self, m: &Vector, p: &Vector) -> Vector;
}

pub trait Potential: Send + Sync {
    fn value(&self, q: &Vector) -> f64;
    fn gradient(&self, q: &Vector) -> Vector;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn value(&self, _q: &Vector) -> f64 {
        0.0
    }
    fn gradient(&self, q: &Vector) -> Vector {
        Vector::zeros(q.len())
    }
}

/// A potential given by a value closure and a gradient closure.
pub struct FnPotential<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> Potential for FnPotential<V, G>
where
    V: Fn(&Vector) -> f64 + Send + Sync,
    G: Fn(&Vector) -> Vector + Send + Sync,
{
    fn value(&self, q: &Vector) -> f64 {
        (self.value)(q)
    }
    fn gradient(&self, q: &Vector) -> Vector {
        (self.gradient)(q)
    }
}

/// `H(q, qdot, p0, p1) = |p1|^2 / 2 + p0 . qdot - V(q)` on `T*(TQ)`.
#[derive(Clone)]
pub struct SecondOrderHamiltonian {
    n: usize,
    potential: Arc<dyn Potential>,
}

impl SecondOrderHamiltonian {
    pub fn new(n: usize, potential: Arc<dyn Potential>) -> Self {
        assert!(n >= 1, "dimension must be positive");
        SecondOrderHamiltonian { n, potential }
    }

    pub fn free(n: usize) -> Self {
        Self::new(n, Arc::new(ZeroPotential))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.potential
    }

    pub fn value_at(&self, s: &SecondOrderState) -> f64 {
        let (m, p) = s.split_phase();
        self.value(&m, &p)
    }
}

pub fn second_order_hamiltonian<V, G>(n: usize, v: V, grad_v: G) -> SecondOrderHamiltonian
where
    V: Fn(&Vector) -> f64 + Send + Sync + 'static,
    G: Fn(&Vector) -> Vector + Send + Sync + 'static,
{
    SecondOrderHamiltonian::new(n, Arc::new(FnPotential { value: v, gradient: grad_v }))
}

impl HamiltonianSystem for SecondOrderHamiltonian {
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn value(&self, m: &Vector, p: &Vector) -> f64 {
        let n = self.n;
        let (q, qdot) = (m.rows(0, n), m.rows(n, n));
        let (p0, p1) = (p.rows(0, n), p.rows(n, n));
        0.5 * p1.norm_squared() + p0.dot(&qdot) - self.potential.value(&q.into_owned())
    }
    fn grad_m(&self, m: &Vector, p: &Vector) -> Vector {
        let n = self.n;
        let grad = -self.potential.gradient(&m.rows(0, n).into_owned());
        concat(&[&grad, &p.rows(0, n).into_owned()])
    }
    fn grad_p(&self, m: &Vector, p: &Vector) -> Vector {
        let n = self.n;
        concat(&[&m.rows(n, n).into_owned(), &p.rows(n, n).into_owned()])
    }
}

/// A point `(q, qdot, p0, p1)` of `T*(TQ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderState {
    pub q: Vector,
    pub qdot: Vector,
    pub p0: Vector,
    pub p1: Vector,
}

impl SecondOrderState {
    pub fn new(q: Vector, qdot: Vector, p0: Vector, p1: Vector) -> Result<Self> {
        let n = q.len();
        ensure_dim(n, qdot.len())?;
        ensure_dim(n, p0.len())?;
        ensure_dim(n, p1.len())?;
        Ok(SecondOrderState { q, qdot, p0, p1 })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Flat phase vector `(q, qdot, p0, p1)`.
    pub fn to_phase(&self) -> Vector {
        concat(&[&self.q, &self.qdot, &self.p0, &self.p1])
    }

    pub fn from_phase(z: &Vector) -> Result<Self> {
        if z.len() % 4 != 0 || z.is_empty() {
            return Err(Error::InvalidArgument(format!("phase vector length {} is not a positive multiple of 4", z.len())));
        }
        let n = z.len() / 4;
        let p = split(z, &[n, n, n, n]);
        Ok(SecondOrderState { q: p[0].clone(), qdot: p[1].clone(), p0: p[2].clone(), p1: p[3].clone() })
    }

    /// `(m, p) = ((q, qdot), (p0, p1))`.
    pub fn split_phase(&self) -> (Vector, Vector) {
        (concat(&[&self.q, &self.qdot]), concat(&[&self.p0, &self.p1]))
    }
}

/// Momenta of a second-order Lagrangian along a 3-jet `(q, qdot, qddot, q3)`:
/// `p1 = dL/dqddot`, `p0 = dL/dqdot - d/dt dL/dqddot`.
pub fn legendre_second_order(lagrangian: &dyn Fn(&Vector, &Vector, &Vector) -> f64, jet: &Jet) -> Result<SecondOrderState> {
    if jet.order() != 3 {
        return Err(Error::InvalidArgument(format!("a 3-jet is required, got order {}", jet.order())));
    }
    let (q, qd, qdd, q3) = (jet.slot(0), jet.slot(1), jet.slot(2), jet.slot(3));
    let grad = |slot: usize, q: &Vector, qd: &Vector, qdd: &Vector| -> Vector {
        let x = [q, qd, qdd];
        let base = x[slot];
        Vector::from_fn(base.len(), |i, _| {
            let eps = 1e-3 * base[i].abs().max(1.0);
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += eps;
            minus[i] -= eps;
            let eval = |b: &Vector| match slot {
                1 => lagrangian(q, b, qdd),
                2 => lagrangian(q, qd, b),
                _ => lagrangian(b, qd, qdd),
            };
            (eval(&plus) - eval(&minus)) / (2.0 * eps)
        })
    };
    let p1 = grad(2, q, qd, qdd);
    // d/dt along the jet by a central difference in time.
    let dt = 1e-3;
    let shifted = |s: f64| grad(2, &(q + qd * s), &(qd + qdd * s), &(qdd + q3 * s));
    let dp1 = (shifted(dt) - shifted(-dt)) / (2.0 * dt);
    let p0 = grad(1, q, qd, qdd) - dp1;
    SecondOrderState::new(q.clone(), qd.clone(), p0, p1)
}

/// `E_L = qdot . p0 + qddot . p1 - L` along a 3-jet.
pub fn lagrangian_energy(lagrangian: &dyn Fn(&Vector, &Vector, &Vector) -> f64, jet: &Jet) -> Result<f64> {
    let s = legendre_second_order(lagrangian, jet)?;
    Ok(jet.slot(1).dot(&s.p0) + jet.slot(2).dot(&s.p1) - lagrangian(jet.slot(0), jet.slot(1), jet.slot(2)))
}

/// Absolute Newton tolerance of one step, relative to `max(1, |z0|_inf)`.
pub const STEP_TOL: f64 = 1e-12;
pub const STEP_MAX_ITER: usize = 50;

/// One step of the integrator as a full Newton report.
///
/// Solves for `z1` such that `(m, p, mdot, pdot) = C^-1(z0, z1)` satisfies
/// `mdot = h dH/dp(m, p)` and `pdot = -h dH/dm(m, p)`, starting from `z1 = z0`.
pub fn symplectic_step_report(c: &dyn DiscretizationMap, ham: &dyn HamiltonianSystem, h: f64, z0: &Vector) -> Result<NewtonReport> {
    let d = ham.dim();
    ensure_dim(2 * d, c.dim())?;
    ensure_dim(2 * d, z0.len())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    let residual = |z1: &Vector| -> Result<Vector> {
        let (x, xdot) = c.inverse(z0, z1)?;
        let (m, p) = (x.rows(0, d).into_owned(), x.rows(d, d).into_owned());
        let (mdot, pdot) = (xdot.rows(0, d), xdot.rows(d, d));
        let rm = mdot - ham.grad_p(&m, &p) * h;
        let rp = pdot + ham.grad_m(&m, &p) * h;
        Ok(concat(&[&rm, &rp]))
    };
    let opts = NewtonOptions { tol: STEP_TOL * inf_norm(z0).max(1.0), max_iter: STEP_MAX_ITER, backtracking: false };
    newton(residual, None, z0, &opts)
}

pub fn symplectic_step(c: &dyn DiscretizationMap, ham: &dyn HamiltonianSystem, h: f64, z0: &Vector) -> Result<Vector> {
    let report = symplectic_step_report(c, ham, h, z0)?;
    if report.converged {
        Ok(report.x)
    } else {
        Err(Error::NonConvergence { iterations: report.iterations, residual_norm: report.residual_norm })
    }
}

/// States, Hamiltonian values and controls of a uniformly stepped run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub h: f64,
    pub states: Vec<SecondOrderState>,
    pub hamiltonian: Vec<f64>,
    /// `u_k = dH/dp1` at state `k`.
    pub controls: Vec<Vector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn last(&self) -> &SecondOrderState {
        self.states.last().expect("trajectories are non-empty")
    }

    pub fn max_hamiltonian_drift(&self) -> f64 {
        let h0 = self.hamiltonian[0];
        self.hamiltonian.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max)
    }
}

/// Runs `steps` integrator steps from `z0`.
pub fn integrate(c: &dyn DiscretizationMap, ham: &dyn HamiltonianSystem, h: f64, steps: usize, z0: &Vector) -> Result<Trajectory> {
    integrate_guarded(c, ham, h, steps, z0, &mut |_, _| Ok(()))
}

/// As [`integrate`], calling `guard(k, z_k)` on every state; an error aborts the run.
pub fn integrate_guarded(
    c: &dyn DiscretizationMap,
    ham: &dyn HamiltonianSystem,
    h: f64,
    steps: usize,
    z0: &Vector,
    guard: &mut dyn FnMut(usize, &Vector) -> Result<()>,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    let d = ham.dim();
    if d % 2 != 0 {
        return Err(Error::InvalidArgument(format!("a second-order system has even dim M, got {d}")));
    }
    ensure_dim(2 * d, z0.len())?;
    let n = d / 2;
    let mut traj = Trajectory {
        h,
        states: Vec::with_capacity(steps + 1),
        hamiltonian: Vec::with_capacity(steps + 1),
        controls: Vec::with_capacity(steps + 1),
    };
    let mut record = |z: &Vector| -> Result<()> {
        let (m, p) = (z.rows(0, d).into_owned(), z.rows(d, d).into_owned());
        traj.hamiltonian.push(ham.value(&m, &p));
        traj.controls.push(ham.grad_p(&m, &p).rows(n, n).into_owned());
        traj.states.push(SecondOrderState::from_phase(z)?);
        Ok(())
    };
    guard(0, z0)?;
    record(z0)?;
    let mut z = z0.clone();
    for k in 1..=steps {
        z = symplectic_step(c, ham, h, &z)?;
        guard(k, &z)?;
        record(&z)?;
    }
    Ok(traj)
}

/// `max_i |(delta^4 q)_i / h^4 + dV/dq_i|` at every interior node (`2 <= k < N - 1`).
pub fn el_residual_fourth_order(traj: &Trajectory, grad_v: &dyn Fn(&Vector) -> Vector) -> Result<Vec<f64>> {
    let len = traj.states.len();
    if len < 5 {
        return Err(Error::TooFewPoints { needed: 5, got: len });
    }
    let q: Vec<&Vector> = traj.states.iter().map(|s| &s.q).collect();
    let h4 = traj.h.powi(4);
    Ok((2..len - 2)
        .map(|k| {
            let diff = q[k - 2] - q[k - 1] * 4.0 + q[k] * 6.0 - q[k + 1] * 4.0 + q[k + 2];
            inf_norm(&(diff / h4 + grad_v(q[k])))
        })
        .collect())
}

/// Exact flow of the free second-order Hamiltonian (`V = 0`) at time `t`.
pub fn free_spline_flow(s: &SecondOrderState, t: f64) -> SecondOrderState {
    let q = &s.q + &s.qdot * t + &s.p1 * (t * t / 2.0) - &s.p0 * (t * t * t / 6.0);
    let qdot = &s.qdot + &s.p1 * t - &s.p0 * (t * t / 2.0);
    let p1 = &s.p1 - &s.p0 * t;
    SecondOrderState { q, qdot, p0: s.p0.clone(), p1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifts::{lifted_midpoint_on_cotangent_tq, Discretization};
    use crate::numeric::{jacobian_fd, vector};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> Vector {
        vector(x).unwrap()
    }

    fn obstacle_like(n: usize) -> SecondOrderHamiltonian {
        second_order_hamiltonian(
            n,
            |q: &Vector| 1.0 / (q[0] * q[0] + q[1] * q[1] - 1.0),
            |q: &Vector| {
                let d = q[0] * q[0] + q[1] * q[1] - 1.0;
                let mut g = Vector::zeros(q.len());
                g[0] = -2.0 * q[0] / (d * d);
                g[1] = -2.0 * q[1] / (d * d);
                g
            },
        )
    }

    #[test]
    fn hamiltonian_values() {
        let h = SecondOrderHamiltonian::free(1);
        assert_eq!(h.value(&v(&[0.0, 1.0]), &v(&[2.0, 3.0])), 6.5);
        assert_eq!(h.value(&v(&[0.4, 1.0]), &v(&[0.0, 0.0])), 0.0);
        let o = obstacle_like(3);
        let val = o.value(&v(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]), &v(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]));
        assert_abs_diff_eq!(val, 0.5 - 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let systems = [SecondOrderHamiltonian::free(2), obstacle_like(3)];
        for ham in &systems {
            let d = ham.dim();
            for _ in 0..30 {
                let mut m = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                m[0] += 2.5;
                let p = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                let gm = jacobian_fd(|x: &Vector| Ok(v(&[ham.value(x, &p)])), &m, 1e-6).unwrap();
                let gp = jacobian_fd(|x: &Vector| Ok(v(&[ham.value(&m, x)])), &p, 1e-6).unwrap();
                assert!(inf_norm(&(gm.row(0).transpose() - ham.grad_m(&m, &p))) < 1e-6);
                assert!(inf_norm(&(gp.row(0).transpose() - ham.grad_p(&m, &p))) < 1e-6);
            }
        }
    }

    fn half_qdd(_q: &Vector, _qd: &Vector, qdd: &Vector) -> f64 {
        0.5 * qdd.norm_squared()
    }

    #[test]
    fn legendre_examples() {
        let jet = Jet::new(vec![v(&[0.0]), v(&[1.0]), v(&[2.0]), v(&[3.0])]).unwrap();
        let s = legendre_second_order(&half_qdd, &jet).unwrap();
        assert_abs_diff_eq!(s.p0[0], -3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s.p1[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(lagrangian_energy(&half_qdd, &jet).unwrap(), -1.0, epsilon = 1e-8);

        let zero = Jet::zero(3, 2).unwrap();
        let s = legendre_second_order(&half_qdd, &zero).unwrap();
        assert!(inf_norm(&s.p0) < 1e-12 && inf_norm(&s.p1) < 1e-12);
        assert_abs_diff_eq!(lagrangian_energy(&half_qdd, &zero).unwrap(), 0.0, epsilon = 1e-12);

        let with_v = |q: &Vector, qd: &Vector, qdd: &Vector| half_qdd(q, qd, qdd) + q.norm_squared().sin();
        let s2 = legendre_second_order(&with_v, &jet).unwrap();
        let s1 = legendre_second_order(&half_qdd, &jet).unwrap();
        assert!(inf_norm(&(s2.p0 - s1.p0)) < 1e-8 && inf_norm(&(s2.p1 - s1.p1)) < 1e-8);

        assert!(legendre_second_order(&half_qdd, &Jet::zero(2, 1).unwrap()).is_err());
    }

    #[test]
    fn energy_equals_hamiltonian_of_legendre_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pot = |q: &Vector| 0.3 * q.norm_squared() + q[0].cos();
        let grad = |q: &Vector| {
            let mut g = q * 0.6;
            g[0] -= q[0].sin();
            g
        };
        let lag = move |q: &Vector, _qd: &Vector, qdd: &Vector| 0.5 * qdd.norm_squared() + pot(q);
        let ham = second_order_hamiltonian(2, pot, grad);
        for _ in 0..20 {
            let jet = Jet::new((0..4).map(|_| Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0))).collect()).unwrap();
            let e = lagrangian_energy(&lag, &jet).unwrap();
            let s = legendre_second_order(&lag, &jet).unwrap();
            assert_abs_diff_eq!(e, ham.value_at(&s), epsilon = 1e-9);
        }
    }

    #[test]
    fn free_step_hand_value() {
        let c = lifted_midpoint_on_cotangent_tq(1);
        let z1 = symplectic_step(&c, &SecondOrderHamiltonian::free(1), 0.1, &v(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        for (a, b) in z1.iter().zip([0.1145, 1.29, 2.0, 2.8]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-11);
        }
        let generic = Discretization::Midpoint.lifted_cotangent(1).unwrap();
        let z2 = symplectic_step(generic.as_ref(), &SecondOrderHamiltonian::free(1), 0.1, &v(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert!(inf_norm(&(z2 - z1)) < 1e-11);
    }

    struct Constant;
    impl HamiltonianSystem for Constant {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, _m: &Vector, _p: &Vector) -> f64 {
            4.0
        }
        fn grad_m(&self, _m: &Vector, _p: &Vector) -> Vector {
            Vector::zeros(2)
        }
        fn grad_p(&self, _m: &Vector, _p: &Vector) -> Vector {
            Vector::zeros(2)
        }
    }

    #[test]
    fn constant_hamiltonian_is_a_fixed_point() {
        let c = lifted_midpoint_on_cotangent_tq(1);
        let z0 = v(&[0.3, -1.0, 2.0, 0.5]);
        for h in [0.01, 1.0, 10.0] {
            assert_eq!(symplectic_step(&c, &Constant, h, &z0).unwrap(), z0);
        }
    }

    #[test]
    fn affine_step_converges_quickly() {
        let c = Discretization::Midpoint.lifted_cotangent(2).unwrap();
        let report = symplectic_step_report(c.as_ref(), &SecondOrderHamiltonian::free(2), 0.05, &v(&[0.1, 0.2, 1.0, -1.0, 2.0, 0.5, 3.0, 1.0])).unwrap();
        assert!(report.converged && report.iterations <= 3);
    }

    #[test]
    fn obstacle_step_satisfies_displayed_relations() {
        let c = lifted_midpoint_on_cotangent_tq(3);
        let ham = obstacle_like(3);
        let h = 0.01;
        let z0 = v(&[2.0, 0.5, 0.1, -0.3, 0.2, 0.1, 0.4, -0.2, 0.1, 0.3, 0.5, -0.1]);
        let z1 = symplectic_step(&c, &ham, h, &z0).unwrap();
        let (a, b) = (SecondOrderState::from_phase(&z0).unwrap(), SecondOrderState::from_phase(&z1).unwrap());
        let qm = (&a.q + &b.q) * 0.5;
        let grad = ham.potential().gradient(&qm);
        assert!(inf_norm(&((&b.p0 - &a.p0) / h - grad)) < 1e-8);
        assert!(inf_norm(&((&b.q - &a.q) / h - (&a.qdot + &b.qdot) * 0.5)) < 1e-8);
        assert!(inf_norm(&((&b.qdot - &a.qdot) / h - (&a.p1 + &b.p1) * 0.5)) < 1e-8);
        assert!(inf_norm(&((&b.p1 - &a.p1) / h + (&a.p0 + &b.p0) * 0.5)) < 1e-8);
    }

    #[test]
    fn free_integration_conserves_p0() {
        let c = lifted_midpoint_on_cotangent_tq(2);
        let s = SecondOrderState::new(v(&[0.0, 1.0]), v(&[1.0, -1.0]), v(&[2.0, 0.5]), v(&[3.0, -2.0])).unwrap();
        let traj = integrate(&c, &SecondOrderHamiltonian::free(2), 0.01, 200, &s.to_phase()).unwrap();
        assert_eq!(traj.len(), 201);
        for st in &traj.states {
            assert!(inf_norm(&(&st.p0 - &s.p0)) <= 1e-12);
        }
        assert!(traj.max_hamiltonian_drift() <= 1e-10);
        assert_eq!(traj.controls[0], s.p1);

        let one = integrate(&c, &SecondOrderHamiltonian::free(2), 0.01, 1, &s.to_phase()).unwrap();
        let direct = symplectic_step(&c, &SecondOrderHamiltonian::free(2), 0.01, &s.to_phase()).unwrap();
        assert_eq!(one.last().to_phase(), direct);
        assert!(integrate(&c, &SecondOrderHamiltonian::free(2), 0.01, 0, &s.to_phase()).is_err());
    }

    fn sampled(h: f64, f: impl Fn(f64) -> f64, count: usize) -> Trajectory {
        let states = (0..count)
            .map(|k| {
                let z = Vector::zeros(1);
                SecondOrderState { q: v(&[f(k as f64 * h)]), qdot: z.clone(), p0: z.clone(), p1: z }
            })
            .collect();
        Trajectory { h, states, hamiltonian: vec![0.0; count], controls: vec![Vector::zeros(1); count] }
    }

    #[test]
    fn fourth_order_residual_examples() {
        let zero = |q: &Vector| Vector::zeros(q.len());
        let cubic = el_residual_fourth_order(&sampled(0.1, |t| t * t * t, 20), &zero).unwrap();
        assert!(cubic.iter().all(|&r| r <= 1e-6));
        let quartic = el_residual_fourth_order(&sampled(0.1, |t| t.powi(4) / 24.0, 20), &zero).unwrap();
        assert_eq!(quartic.len(), 16);
        assert!(quartic.iter().all(|&r| (r - 1.0).abs() < 1e-6));
        assert!(matches!(el_residual_fourth_order(&sampled(0.1, |t| t, 4), &zero), Err(Error::TooFewPoints { needed: 5, got: 4 })));

        let c = lifted_midpoint_on_cotangent_tq(1);
        let traj = integrate(&c, &SecondOrderHamiltonian::free(1), 0.01, 100, &v(&[0.0, 0.0, 12.0, 6.0])).unwrap();
        let r = el_residual_fourth_order(&traj, &zero).unwrap();
        assert!(r.iter().all(|&x| x <= 1e-3), "{:?}", r.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn free_flow_matches_hamilton_equations() {
        let s = SecondOrderState::new(v(&[0.0]), v(&[1.0]), v(&[2.0]), v(&[3.0])).unwrap();
        let e = free_spline_flow(&s, 1.0);
        assert_abs_diff_eq!(e.q[0], 1.0 + 1.5 - 2.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.qdot[0], 1.0 + 3.0 - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.p1[0], 1.0, epsilon = 1e-15);
    }
}
