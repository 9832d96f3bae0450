//! Discretization maps `R_d : TQ -> Q x Q`, `(q, v) -> (q-, q+)`.
//!
//! A discretization map must send `(q, 0)` to `(q, q)`, and the difference
//! of the fiber derivatives of its two components at `v = 0` must be the
//! identity on `T_qQ`. [`verify_discretization_axioms`] checks both
//! numerically for any implementation.

use std::f64::consts::PI;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{ensure_dim, Error, Result};
use crate::jets::{exact_jacobian, SmoothMap};
use crate::numeric::{concat, inf_norm, jacobian_fd, mat_inf_norm, split, Matrix, Vector};
use crate::taylor::{dot, Real};

/// Object-safe interface shared by base maps and their lifts.
pub trait DiscretizationMap: Send + Sync {
    fn name(&self) -> String;

    /// Number of coordinates of a point of `Q` (also of a fiber vector).
    fn dim(&self) -> usize;

    /// Rejects `(q, v)` outside the validity domain.
    fn check_domain(&self, q: &Vector, v: &Vector) -> Result<()> {
        ensure_dim(self.dim(), q.len())?;
        ensure_dim(self.dim(), v.len())
    }

    fn forward(&self, q: &Vector, v: &Vector) -> Result<(Vector, Vector)>;

    fn inverse(&self, q_minus: &Vector, q_plus: &Vector) -> Result<(Vector, Vector)>;

    /// `2n x 2n` Jacobian; rows `(q-, q+)`, columns `(q, v)`.
    fn jacobian(&self, q: &Vector, v: &Vector) -> Result<Matrix> {
        let n = self.dim();
        let x = concat(&[q, v]);
        let f = |x: &Vector| {
            let parts = split(x, &[n, n]);
            let (a, b) = self.forward(&parts[0], &parts[1])?;
            Ok(concat(&[&a, &b]))
        };
        jacobian_fd(f, &x, crate::numeric::default_fd_step(&x))
    }

    /// Orthonormal columns spanning the admissible fiber directions at `q`.
    fn fiber_basis(&self, q: &Vector) -> Matrix {
        Matrix::identity(q.len(), q.len())
    }

    /// Identification of a fiber vector with a coordinate tangent vector at `q`.
    fn fiber_to_chart(&self, q: &Vector) -> Matrix {
        Matrix::identity(q.len(), q.len())
    }

    fn sample_base_point(&self, rng: &mut dyn RngCore) -> Vector {
        Vector::from_fn(self.dim(), |_, _| rng.random_range(-2.0..2.0))
    }

    fn sample_velocity(&self, q: &Vector, rng: &mut dyn RngCore) -> Vector {
        Vector::from_fn(q.len(), |_, _| rng.random_range(-1.0..1.0))
    }
}

impl<D: DiscretizationMap + ?Sized> DiscretizationMap for Box<D> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn check_domain(&self, q: &Vector, v: &Vector) -> Result<()> {
        (**self).check_domain(q, v)
    }
    fn forward(&self, q: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
        (**self).forward(q, v)
    }
    fn inverse(&self, q_minus: &Vector, q_plus: &Vector) -> Result<(Vector, Vector)> {
        (**self).inverse(q_minus, q_plus)
    }
    fn jacobian(&self, q: &Vector, v: &Vector) -> Result<Matrix> {
        (**self).jacobian(q, v)
    }
    fn fiber_basis(&self, q: &Vector) -> Matrix {
        (**self).fiber_basis(q)
    }
    fn fiber_to_chart(&self, q: &Vector) -> Matrix {
        (**self).fiber_to_chart(q)
    }
    fn sample_base_point(&self, rng: &mut dyn RngCore) -> Vector {
        (**self).sample_base_point(rng)
    }
    fn sample_velocity(&self, q: &Vector, rng: &mut dyn RngCore) -> Vector {
        (**self).sample_velocity(q, rng)
    }
}

/// Maps that can be evaluated over any [`Real`] and therefore lifted to jets.
pub trait GenericDiscretization: DiscretizationMap {
    fn forward_generic<T: Real>(&self, q: &[T], v: &[T]) -> Result<(Vec<T>, Vec<T>)>;
    fn inverse_generic<T: Real>(&self, q_minus: &[T], q_plus: &[T]) -> Result<(Vec<T>, Vec<T>)>;
}

/// The forward map `(q, v) -> (q-, q+)` as a [`SmoothMap`] on `R^2n`.
pub struct ForwardMap<'a, D>(pub &'a D);

impl<D: GenericDiscretization> SmoothMap for ForwardMap<'_, D> {
    fn input_dim(&self) -> usize {
        2 * self.0.dim()
    }
    fn output_dim(&self) -> usize {
        2 * self.0.dim()
    }
    fn eval<T: Real>(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.0.dim();
        let (a, mut b) = self.0.forward_generic(&x[..n], &x[n..])?;
        let mut out = a;
        out.append(&mut b);
        Ok(out)
    }
}

/// The inverse map `(q-, q+) -> (q, v)` as a [`SmoothMap`] on `R^2n`.
pub struct InverseMap<'a, D>(pub &'a D);

impl<D: GenericDiscretization> SmoothMap for InverseMap<'_, D> {
    fn input_dim(&self) -> usize {
        2 * self.0.dim()
    }
    fn output_dim(&self) -> usize {
        2 * self.0.dim()
    }
    fn eval<T: Real>(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.0.dim();
        let (a, mut b) = self.0.inverse_generic(&x[..n], &x[n..])?;
        let mut out = a;
        out.append(&mut b);
        Ok(out)
    }
}

/// Jacobian of a generic map by forward-mode differentiation.
pub fn generic_jacobian<D: GenericDiscretization>(d: &D, q: &Vector, v: &Vector) -> Result<Matrix> {
    exact_jacobian(&ForwardMap(d), &concat(&[q, v]))
}

fn to_vectors(pair: (Vec<f64>, Vec<f64>)) -> (Vector, Vector) {
    (Vector::from_vec(pair.0), Vector::from_vec(pair.1))
}

/// `R_d(q, v) = (q - v/2, q + v/2)` on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Midpoint {
    n: usize,
}

pub fn midpoint_map(n: usize) -> Midpoint {
    assert!(n >= 1, "dimension must be positive");
    Midpoint { n }
}

impl DiscretizationMap for Midpoint {
    fn name(&self) -> String {
        format!("midpoint(n={})", self.n)
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn forward(&self, q: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(q, v)?;
        Ok((q - v * 0.5, q + v * 0.5))
    }
    fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(a, b)?;
        Ok(((a + b) * 0.5, b - a))
    }
    fn jacobian(&self, q: &Vector, v: &Vector) -> Result<Matrix> {
        self.check_domain(q, v)?;
        Ok(block_jacobian(self.n, 0.5))
    }
}

impl GenericDiscretization for Midpoint {
    fn forward_generic<T: Real>(&self, q: &[T], v: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(self.n, q.len())?;
        Ok((
            q.iter().zip(v).map(|(&q, &v)| q - v * 0.5).collect(),
            q.iter().zip(v).map(|(&q, &v)| q + v * 0.5).collect(),
        ))
    }
    fn inverse_generic<T: Real>(&self, a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(self.n, a.len())?;
        Ok((a.iter().zip(b).map(|(&a, &b)| (a + b) * 0.5).collect(), a.iter().zip(b).map(|(&a, &b)| b - a).collect()))
    }
}

/// `[[I, -theta I], [I, (1 - theta) I]]`.
fn block_jacobian(n: usize, theta: f64) -> Matrix {
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, i)] = 1.0;
        j[(i, n + i)] = -theta;
        j[(n + i, i)] = 1.0;
        j[(n + i, n + i)] = 1.0 - theta;
    }
    j
}

/// `R_d(q, v) = (q - theta v, q + (1 - theta) v)`, `theta` in `[0, 1]`.
///
/// `theta = 0` is the initial-point (explicit Euler) map, `theta = 1/2` the midpoint.
#[derive(Debug, Clone, Copy)]
pub struct ThetaMap {
    n: usize,
    theta: f64,
}

pub fn theta_map(n: usize, theta: f64) -> Result<ThetaMap> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta must lie in [0, 1], got {theta}")));
    }
    Ok(ThetaMap { n, theta })
}

impl ThetaMap {
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl DiscretizationMap for ThetaMap {
    fn name(&self) -> String {
        format!("theta(n={}, theta={})", self.n, self.theta)
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn forward(&self, q: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(q, v)?;
        Ok((q - v * self.theta, q + v * (1.0 - self.theta)))
    }
    fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(a, b)?;
        let v = b - a;
        Ok((a + &v * self.theta, v))
    }
    fn jacobian(&self, q: &Vector, v: &Vector) -> Result<Matrix> {
        self.check_domain(q, v)?;
        Ok(block_jacobian(self.n, self.theta))
    }
}

impl GenericDiscretization for ThetaMap {
    fn forward_generic<T: Real>(&self, q: &[T], v: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(self.n, q.len())?;
        let th = self.theta;
        Ok((
            q.iter().zip(v).map(|(&q, &v)| q - v * th).collect(),
            q.iter().zip(v).map(|(&q, &v)| q + v * (1.0 - th)).collect(),
        ))
    }
    fn inverse_generic<T: Real>(&self, a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(self.n, a.len())?;
        let v: Vec<T> = a.iter().zip(b).map(|(&a, &b)| b - a).collect();
        Ok((a.iter().zip(&v).map(|(&a, &v)| a + v * self.theta).collect(), v))
    }
}

const SPHERE_TOL: f64 = 1e-9;

fn check_sphere_point(q: &Vector) -> Result<()> {
    ensure_dim(3, q.len())?;
    let defect = (q.dot(q) - 1.0).abs();
    if defect > SPHERE_TOL {
        return Err(Error::DomainViolation(format!("point is off the unit sphere (|q.q - 1| = {defect:.3e})")));
    }
    Ok(())
}

fn check_sphere_tangent(q: &Vector, xi: &Vector) -> Result<()> {
    check_sphere_point(q)?;
    ensure_dim(3, xi.len())?;
    let defect = q.dot(xi).abs();
    if defect > SPHERE_TOL * (1.0 + xi.norm()) {
        return Err(Error::DomainViolation(format!("velocity is not tangent to the sphere (q.xi = {defect:.3e})")));
    }
    Ok(())
}

/// Orthonormal basis of the plane orthogonal to the unit vector `q`.
fn sphere_tangent_basis(q: &Vector) -> Matrix {
    let q = q.normalize();
    let seed = if q[0].abs() < 0.9 { Vector::from_column_slice(&[1.0, 0.0, 0.0]) } else { Vector::from_column_slice(&[0.0, 1.0, 0.0]) };
    let e1 = (&seed - &q * q.dot(&seed)).normalize();
    let q3 = nalgebra::Vector3::new(q[0], q[1], q[2]);
    let e13 = nalgebra::Vector3::new(e1[0], e1[1], e1[2]);
    let e2 = q3.cross(&e13);
    Matrix::from_column_slice(3, 2, &[e1[0], e1[1], e1[2], e2[0], e2[1], e2[2]])
}

fn sample_unit_vector(rng: &mut dyn RngCore) -> Vector {
    loop {
        let v = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn sample_sphere_tangent(q: &Vector, max_norm: f64, rng: &mut dyn RngCore) -> Vector {
    let b = sphere_tangent_basis(q);
    let c = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
    let v = &b * c;
    let scale = rng.random_range(0.0..max_norm) / v.norm().max(1e-12);
    v * scale
}

/// Initial-point map on the unit sphere: `(q, xi) -> (q, (q + xi) / |q + xi|)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SphereInitialPoint;

pub fn sphere_initial_point_map() -> SphereInitialPoint {
    SphereInitialPoint
}

impl DiscretizationMap for SphereInitialPoint {
    fn name(&self) -> String {
        "sphere-initial-point".into()
    }
    fn dim(&self) -> usize {
        3
    }
    fn check_domain(&self, q: &Vector, v: &Vector) -> Result<()> {
        check_sphere_tangent(q, v)
    }
    fn forward(&self, q: &Vector, xi: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(q, xi)?;
        self.forward_generic(q.as_slice(), xi.as_slice()).map(to_vectors)
    }
    fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
        check_sphere_point(a)?;
        check_sphere_point(b)?;
        self.inverse_generic(a.as_slice(), b.as_slice()).map(to_vectors)
    }
    fn jacobian(&self, q: &Vector, xi: &Vector) -> Result<Matrix> {
        ensure_dim(3, q.len())?;
        ensure_dim(3, xi.len())?;
        let w = q + xi;
        let norm = w.norm();
        if norm == 0.0 {
            return Err(Error::DomainViolation("q + xi vanishes".into()));
        }
        let u = &w / norm;
        let block = (Matrix::identity(3, 3) - &u * u.transpose()) / norm;
        let mut j = Matrix::zeros(6, 6);
        j.view_mut((0, 0), (3, 3)).fill_with_identity();
        j.view_mut((3, 0), (3, 3)).copy_from(&block);
        j.view_mut((3, 3), (3, 3)).copy_from(&block);
        Ok(j)
    }
    fn fiber_basis(&self, q: &Vector) -> Matrix {
        sphere_tangent_basis(q)
    }
    fn sample_base_point(&self, rng: &mut dyn RngCore) -> Vector {
        sample_unit_vector(rng)
    }
    fn sample_velocity(&self, q: &Vector, rng: &mut dyn RngCore) -> Vector {
        sample_sphere_tangent(q, 2.0, rng)
    }
}

impl GenericDiscretization for SphereInitialPoint {
    fn forward_generic<T: Real>(&self, q: &[T], xi: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(3, q.len())?;
        let w: Vec<T> = q.iter().zip(xi).map(|(&a, &b)| a + b).collect();
        let n2 = dot(&w, &w);
        if n2.value() <= 0.0 {
            return Err(Error::DomainViolation("q + xi vanishes".into()));
        }
        let norm = n2.sqrt();
        Ok((q.to_vec(), w.iter().map(|&c| c / norm).collect()))
    }

    /// `xi = q+ / (q . q+) - q`, defined while `q . q+ > 0`.
    fn inverse_generic<T: Real>(&self, a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(3, a.len())?;
        let c = dot(a, b);
        if c.value() <= 0.0 {
            return Err(Error::DomainViolation(format!("q . q+ = {:.3e} must be positive", c.value())));
        }
        Ok((a.to_vec(), a.iter().zip(b).map(|(&q, &p)| p / c - q).collect()))
    }
}

/// `(cos r, sin r / r)` as functions of `s = r^2`, smooth through `s = 0`.
fn cos_sinc_of_square<T: Real>(s: T) -> (T, T) {
    if s.value() < 1e-4 {
        // Alternating series in s; truncation error below 1e-40 on this branch.
        let mut cos = T::cst(0.0);
        let mut sinc = T::cst(0.0);
        let mut pow = T::cst(1.0);
        let mut fact_even = 1.0;
        let mut fact_odd = 1.0;
        for k in 0..8 {
            if k > 0 {
                pow = pow * (-s);
                fact_even *= ((2 * k - 1) * (2 * k)) as f64;
                fact_odd *= ((2 * k) * (2 * k + 1)) as f64;
            }
            cos = cos + pow / fact_even;
            sinc = sinc + pow / fact_odd;
        }
        (cos, sinc)
    } else {
        let r = s.sqrt();
        (r.cos(), r.sin() / r)
    }
}

/// `exp_q(eta) = cos|eta| q + sin|eta| eta / |eta|` on the unit sphere.
pub fn sphere_exp<T: Real>(q: &[T], eta: &[T]) -> Vec<T> {
    let (c, sinc) = cos_sinc_of_square(dot(eta, eta));
    q.iter().zip(eta).map(|(&q, &e)| q * c + e * sinc).collect()
}

/// `phi / sin(phi)` as a function of `sigma = sin^2(phi)` and `cos(phi) > 0`.
fn angle_over_sine<T: Real>(sigma: T, cos_phi: T) -> T {
    if sigma.value() < 1e-4 {
        // asin(s)/s = sum_k (2k)! / (4^k (k!)^2 (2k+1)) s^(2k)
        let coeffs = [1.0, 1.0 / 6.0, 3.0 / 40.0, 5.0 / 112.0, 35.0 / 1152.0, 63.0 / 2816.0, 231.0 / 13312.0, 143.0 / 10240.0];
        let mut acc = T::cst(0.0);
        for &c in coeffs.iter().rev() {
            acc = acc * sigma + c;
        }
        acc
    } else {
        let s = sigma.sqrt();
        (s / cos_phi).atan() / s
    }
}

/// Geodesic midpoint map on the unit sphere: `(exp_q(-xi/2), exp_q(xi/2))`.
///
/// Invertible for `|xi| < pi`; the inverse returns the geodesic midpoint of
/// the short arc and the full arc vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct SphereGeodesicMidpoint;

pub fn sphere_geodesic_midpoint_map() -> SphereGeodesicMidpoint {
    SphereGeodesicMidpoint
}

impl DiscretizationMap for SphereGeodesicMidpoint {
    fn name(&self) -> String {
        "sphere-geodesic-midpoint".into()
    }
    fn dim(&self) -> usize {
        3
    }
    fn check_domain(&self, q: &Vector, xi: &Vector) -> Result<()> {
        check_sphere_tangent(q, xi)?;
        if xi.norm() >= PI {
            return Err(Error::DomainViolation(format!("|xi| = {:.6} must be below pi", xi.norm())));
        }
        Ok(())
    }
    fn forward(&self, q: &Vector, xi: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(q, xi)?;
        self.forward_generic(q.as_slice(), xi.as_slice()).map(to_vectors)
    }
    fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
        check_sphere_point(a)?;
        check_sphere_point(b)?;
        self.inverse_generic(a.as_slice(), b.as_slice()).map(to_vectors)
    }
    fn jacobian(&self, q: &Vector, xi: &Vector) -> Result<Matrix> {
        generic_jacobian(self, q, xi)
    }
    fn fiber_basis(&self, q: &Vector) -> Matrix {
        sphere_tangent_basis(q)
    }
    fn sample_base_point(&self, rng: &mut dyn RngCore) -> Vector {
        sample_unit_vector(rng)
    }
    fn sample_velocity(&self, q: &Vector, rng: &mut dyn RngCore) -> Vector {
        sample_sphere_tangent(q, 3.0, rng)
    }
}

impl GenericDiscretization for SphereGeodesicMidpoint {
    fn forward_generic<T: Real>(&self, q: &[T], xi: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(3, q.len())?;
        let half: Vec<T> = xi.iter().map(|&x| x * 0.5).collect();
        let neg: Vec<T> = half.iter().map(|&x| -x).collect();
        Ok((sphere_exp(q, &neg), sphere_exp(q, &half)))
    }

    fn inverse_generic<T: Real>(&self, a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(3, a.len())?;
        let sum: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x + y).collect();
        let n2 = dot(&sum, &sum);
        if n2.value() < 1e-24 {
            return Err(Error::DomainViolation("antipodal points have no unique geodesic midpoint".into()));
        }
        let norm = n2.sqrt();
        let q: Vec<T> = sum.iter().map(|&x| x / norm).collect();
        let cos_phi = dot(&q, b);
        let w: Vec<T> = b.iter().zip(&q).map(|(&p, &m)| p - m * cos_phi).collect();
        let ratio = angle_over_sine(dot(&w, &w), cos_phi);
        let xi = w.iter().map(|&x| x * ratio * 2.0).collect();
        Ok((q, xi))
    }
}

/// `(cos w, sin w, sin w / w, (1 - cos w) / w)`, smooth through `w = 0`.
fn se2_trig<T: Real>(w: T) -> (T, T, T, T) {
    let (c, s) = (w.cos(), w.sin());
    if w.value().abs() < 1e-2 {
        let w2 = w * w;
        let mut sinc = T::cst(0.0);
        let mut cosc = T::cst(0.0);
        // sin w / w = sum (-1)^k w^2k / (2k+1)!, (1 - cos w) / w = sum (-1)^k w^(2k+1) / (2k+2)!
        let mut pow = T::cst(1.0);
        let mut f_odd = 1.0;
        let mut f_even = 2.0;
        for k in 0..7 {
            if k > 0 {
                pow = pow * (-w2);
                f_odd *= ((2 * k) * (2 * k + 1)) as f64;
                f_even *= ((2 * k + 1) * (2 * k + 2)) as f64;
            }
            sinc = sinc + pow / f_odd;
            cosc = cosc + pow * w / f_even;
        }
        (c, s, sinc, cosc)
    } else {
        (c, s, s / w, (-c + 1.0) / w)
    }
}

/// Closed-form group exponential of SE(2) in `(x, y, theta)` coordinates.
pub fn se2_exp<T: Real>(xi: &[T]) -> [T; 3] {
    let (_, _, a, b) = se2_trig(xi[2]);
    [a * xi[0] - b * xi[1], b * xi[0] + a * xi[1], xi[2]]
}

/// Group logarithm; the rotation angle must lie in `(-pi, pi)`.
pub fn se2_log<T: Real>(g: &[T]) -> Result<[T; 3]> {
    let w = g[2];
    if w.value().abs() >= PI {
        return Err(Error::DomainViolation(format!("rotation angle {:.6} outside (-pi, pi)", w.value())));
    }
    let (_, _, a, b) = se2_trig(w);
    // V = [[a, -b], [b, a]], V^-1 = [[a, b], [-b, a]] / (a^2 + b^2)
    let det = a * a + b * b;
    Ok([(a * g[0] + b * g[1]) / det, (a * g[1] - b * g[0]) / det, w])
}

pub fn se2_compose<T: Real>(g: &[T], h: &[T]) -> [T; 3] {
    let (c, s) = (g[2].cos(), g[2].sin());
    [g[0] + c * h[0] - s * h[1], g[1] + s * h[0] + c * h[1], g[2] + h[2]]
}

pub fn se2_inverse<T: Real>(g: &[T]) -> [T; 3] {
    let (c, s) = (g[2].cos(), g[2].sin());
    [-(c * g[0] + s * g[1]), s * g[0] - c * g[1], -g[2]]
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta - 2.0 * PI * (theta / (2.0 * PI)).round();
    if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Left-trivialized exponential map on SE(2): `(g exp(-xi/2), g exp(xi/2))`.
///
/// Points are `(x, y, theta)` with `theta` unwrapped; fiber vectors are Lie
/// algebra elements `(v1, v2, omega)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Se2Exp;

pub fn se2_exp_map() -> Se2Exp {
    Se2Exp
}

impl DiscretizationMap for Se2Exp {
    fn name(&self) -> String {
        "se2-exp".into()
    }
    fn dim(&self) -> usize {
        3
    }
    fn check_domain(&self, q: &Vector, v: &Vector) -> Result<()> {
        ensure_dim(3, q.len())?;
        ensure_dim(3, v.len())?;
        if v[2].abs() >= PI {
            return Err(Error::DomainViolation(format!("rotation rate {:.6} outside (-pi, pi)", v[2])));
        }
        Ok(())
    }
    fn forward(&self, q: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(q, v)?;
        self.forward_generic(q.as_slice(), v.as_slice()).map(to_vectors)
    }
    fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
        ensure_dim(3, a.len())?;
        ensure_dim(3, b.len())?;
        self.inverse_generic(a.as_slice(), b.as_slice()).map(to_vectors)
    }
    fn jacobian(&self, q: &Vector, v: &Vector) -> Result<Matrix> {
        generic_jacobian(self, q, v)
    }
    fn fiber_to_chart(&self, q: &Vector) -> Matrix {
        let (s, c) = q[2].sin_cos();
        Matrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
    }
    fn sample_velocity(&self, _q: &Vector, rng: &mut dyn RngCore) -> Vector {
        Vector::from_column_slice(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0)])
    }
}

impl GenericDiscretization for Se2Exp {
    fn forward_generic<T: Real>(&self, g: &[T], xi: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(3, g.len())?;
        let half: Vec<T> = xi.iter().map(|&x| x * 0.5).collect();
        let neg: Vec<T> = half.iter().map(|&x| -x).collect();
        Ok((se2_compose(g, &se2_exp(&neg)).to_vec(), se2_compose(g, &se2_exp(&half)).to_vec()))
    }

    /// `xi = log(g-^-1 g+)` and `g = g- exp(xi / 2)`.
    fn inverse_generic<T: Real>(&self, a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(3, a.len())?;
        let mut rel = se2_compose(&se2_inverse(a), b);
        let raw = rel[2].value();
        rel[2] = rel[2] - (raw - wrap_angle(raw));
        let xi = se2_log(&rel)?;
        let half: Vec<T> = xi.iter().map(|&x| x * 0.5).collect();
        Ok((se2_compose(a, &se2_exp(&half)).to_vec(), xi.to_vec()))
    }
}

/// Per-sample outcome of [`verify_discretization_axioms`].
#[derive(Debug, Clone, Serialize)]
pub struct AxiomSample {
    pub point: Vec<f64>,
    /// `|R_d(q, 0) - (q, q)|_inf`.
    pub zero_section_defect: f64,
    /// `|T_0 R^2 - T_0 R^1 - Id|_inf` on admissible fiber directions.
    pub identity_defect: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub map: String,
    pub tolerance: f64,
    pub samples: Vec<AxiomSample>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.samples.iter().all(|s| s.passed)
    }

    pub fn max_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.zero_section_defect.max(s.identity_defect)).fold(0.0, f64::max)
    }
}

/// Checks `R_d(q, 0) = (q, q)` and `T_0 R^2 - T_0 R^1 = Id` at each base point.
///
/// The fiber derivative is a central difference along the map's
/// [`fiber_basis`](DiscretizationMap::fiber_basis), compared against
/// [`fiber_to_chart`](DiscretizationMap::fiber_to_chart). Evaluation errors
/// count as failed samples.
pub fn verify_discretization_axioms(map: &dyn DiscretizationMap, samples: &[Vector], tol: f64) -> AxiomReport {
    let n = map.dim();
    let samples = samples
        .iter()
        .map(|q| {
            let zero_section_defect = match map.forward(q, &Vector::zeros(n)) {
                Ok((a, b)) => inf_norm(&(a - q)).max(inf_norm(&(b - q))),
                Err(_) => f64::INFINITY,
            };
            let basis = map.fiber_basis(q);
            let along_fiber = |s: &Vector| {
                let (a, b) = map.forward(q, &(&basis * s))?;
                Ok(concat(&[&a, &b]))
            };
            let identity_defect = match jacobian_fd(along_fiber, &Vector::zeros(basis.ncols()), 1e-5) {
                Ok(j) => {
                    let diff = j.rows(n, n) - j.rows(0, n);
                    let expected = map.fiber_to_chart(q) * &basis;
                    mat_inf_norm(&(basis.transpose() * (diff - expected)))
                }
                Err(_) => f64::INFINITY,
            };
            AxiomSample {
                point: q.iter().copied().collect(),
                zero_section_defect,
                identity_defect,
                passed: zero_section_defect <= tol && identity_defect <= tol,
            }
        })
        .collect();
    AxiomReport { map: map.name(), tolerance: tol, samples }
}
