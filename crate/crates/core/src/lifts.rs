//! Tangent, higher-order and cotangent lifts of discretization maps.

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{ensure_dim, Error, Result};
use crate::jets::{jet_pushforward_faa_di_bruno, phi_k, Differentiable, FiniteDifferences, Jet, JetTangent};
use crate::maps::{generic_jacobian, midpoint_map, theta_map, DiscretizationMap, GenericDiscretization};
use crate::numeric::{concat, default_fd_step, inf_norm, jacobian_fd, mat_inf_norm, solve, split, Matrix, Vector};
use crate::taylor::{Real, Taylor, MAX_ORDER};

/// `T R_d`: sends `(q, v, qdot, vdot)` to the two points
/// `(q-, dq-)` and `(q+, dq+)` of `TQ`, with `(dq-, dq+) = DR_d(q, v) (qdot, vdot)`.
pub struct TangentLift<D> {
    base: D,
}

pub fn tangent_lift<D: DiscretizationMap>(base: D) -> TangentLift<D> {
    TangentLift { base }
}

pub type TqPoint = (Vector, Vector);

impl<D: DiscretizationMap> TangentLift<D> {
    pub fn apply(&self, q: &Vector, v: &Vector, qdot: &Vector, vdot: &Vector) -> Result<(TqPoint, TqPoint)> {
        let n = self.base.dim();
        ensure_dim(n, qdot.len())?;
        ensure_dim(n, vdot.len())?;
        let (a, b) = self.base.forward(q, v)?;
        let dot = self.base.jacobian(q, v)? * concat(&[qdot, vdot]);
        let parts = split(&dot, &[n, n]);
        Ok(((a, parts[0].clone()), (b, parts[1].clone())))
    }
}

/// `R_d^(k) = (T^(k)R_d) o phi_k`, a discretization map on `T^(k)Q`.
///
/// A point of `T^(k)Q` is stored as its flattened raw-derivative slots
/// `(q, q', ..., q^(k))`, so the lift has dimension `n (k + 1)`.
#[derive(Debug, Clone)]
pub struct HigherOrderLift<D> {
    base: D,
    order: usize,
}

pub fn higher_order_lift<D: GenericDiscretization>(base: D, k: usize) -> Result<HigherOrderLift<D>> {
    if k > MAX_ORDER {
        return Err(Error::UnsupportedOrder { order: k, max: MAX_ORDER });
    }
    Ok(HigherOrderLift { base, order: k })
}

/// Which derivatives of the base map feed the Faà di Bruno path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    /// The map's own Jacobian; second derivatives by differencing it.
    Analytic,
    FiniteDifference,
}

struct BaseDerivatives<'a, D>(&'a D);

impl<D: DiscretizationMap> BaseDerivatives<'_, D> {
    fn eval(&self, x: &Vector) -> Result<Vector> {
        let n = self.0.dim();
        let p = split(x, &[n, n]);
        let (a, b) = self.0.forward(&p[0], &p[1])?;
        Ok(concat(&[&a, &b]))
    }

    fn jac(&self, x: &Vector) -> Result<Matrix> {
        let n = self.0.dim();
        let p = split(x, &[n, n]);
        self.0.jacobian(&p[0], &p[1])
    }
}

impl<D: DiscretizationMap> Differentiable for BaseDerivatives<'_, D> {
    fn value(&self, x: &Vector) -> Result<Vector> {
        self.eval(x)
    }
    fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        self.jac(x)
    }
    fn second_directional(&self, x: &Vector, v: &Vector) -> Result<Vector> {
        let h = 1e-4 * (1.0 + inf_norm(x)) / inf_norm(v).max(1e-300);
        let plus = self.jac(&(x + v * h))?;
        let minus = self.jac(&(x - v * h))?;
        Ok((plus - minus) * v / (2.0 * h))
    }
}

impl<D: GenericDiscretization> HigherOrderLift<D> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base(&self) -> &D {
        &self.base
    }

    fn base_dim(&self) -> usize {
        self.base.dim()
    }

    fn series<T: Real>(&self, flat: &[T]) -> Vec<Taylor<T>> {
        let n = self.base_dim();
        (0..n)
            .map(|i| {
                let raw: Vec<T> = (0..=self.order).map(|r| flat[r * n + i]).collect();
                Taylor::from_derivatives(&raw)
            })
            .collect()
    }

    fn flatten<T: Real>(&self, s: &[Taylor<T>]) -> Vec<T> {
        (0..=self.order).flat_map(|r| s.iter().map(move |c| c.derivative(r))).collect()
    }

    fn to_jet(&self, flat: &Vector) -> Result<Jet> {
        Jet::from_flat(flat, self.order, self.base_dim())
    }

    pub fn forward_jet(&self, x: &JetTangent) -> Result<(Jet, Jet)> {
        let (a, b) = self.forward(&x.base.flatten(), &x.fiber_flat())?;
        Ok((self.to_jet(&a)?, self.to_jet(&b)?))
    }

    pub fn inverse_jet(&self, minus: &Jet, plus: &Jet) -> Result<JetTangent> {
        let (z, v) = self.inverse(&minus.flatten(), &plus.flatten())?;
        let n = self.base_dim();
        let fiber = (0..=self.order).map(|r| v.rows(r * n, n).into_owned()).collect();
        JetTangent::new(self.to_jet(&z)?, fiber)
    }

    /// Forward map by the explicit chain rule instead of Taylor arithmetic (`k <= 2`).
    pub fn forward_faa_di_bruno(&self, x: &JetTangent, source: DerivativeSource) -> Result<(Jet, Jet)> {
        let n = self.base_dim();
        ensure_dim(n, x.base.dim())?;
        ensure_dim(self.order, x.base.order())?;
        let j = phi_k(x);
        let pushed = match source {
            DerivativeSource::Analytic => jet_pushforward_faa_di_bruno(&BaseDerivatives(&self.base), &j)?,
            DerivativeSource::FiniteDifference => {
                let f = |x: &Vector| BaseDerivatives(&self.base).eval(x);
                let eps = 1e-5 * (1.0 + inf_norm(j.base()));
                jet_pushforward_faa_di_bruno(&FiniteDifferences { f, eps }, &j)?
            }
        };
        let minus = pushed.slots().iter().map(|s| s.rows(0, n).into_owned()).collect();
        let plus = pushed.slots().iter().map(|s| s.rows(n, n).into_owned()).collect();
        Ok((Jet::new(minus)?, Jet::new(plus)?))
    }
}

impl<D: GenericDiscretization> DiscretizationMap for HigherOrderLift<D> {
    fn name(&self) -> String {
        format!("lift{}({})", self.order, self.base.name())
    }
    fn dim(&self) -> usize {
        self.base_dim() * (self.order + 1)
    }
    fn check_domain(&self, z: &Vector, v: &Vector) -> Result<()> {
        ensure_dim(self.dim(), z.len())?;
        ensure_dim(self.dim(), v.len())?;
        let n = self.base_dim();
        self.base.check_domain(&z.rows(0, n).into_owned(), &v.rows(0, n).into_owned())
    }
    fn forward(&self, z: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(z, v)?;
        let (a, b) = self.forward_generic(z.as_slice(), v.as_slice())?;
        Ok((Vector::from_vec(a), Vector::from_vec(b)))
    }
    fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
        ensure_dim(self.dim(), a.len())?;
        ensure_dim(self.dim(), b.len())?;
        let (z, v) = self.inverse_generic(a.as_slice(), b.as_slice())?;
        Ok((Vector::from_vec(z), Vector::from_vec(v)))
    }
    fn jacobian(&self, z: &Vector, v: &Vector) -> Result<Matrix> {
        self.check_domain(z, v)?;
        generic_jacobian(self, z, v)
    }
    fn sample_base_point(&self, rng: &mut dyn RngCore) -> Vector {
        let q = self.base.sample_base_point(rng);
        let rest = Vector::from_fn(self.dim() - q.len(), |_, _| rng.random_range(-1.0..1.0));
        concat(&[&q, &rest])
    }
    fn sample_velocity(&self, z: &Vector, rng: &mut dyn RngCore) -> Vector {
        let n = self.base_dim();
        let v = self.base.sample_velocity(&z.rows(0, n).into_owned(), rng);
        let rest = Vector::from_fn(self.dim() - n, |_, _| rng.random_range(-1.0..1.0));
        concat(&[&v, &rest])
    }
}

impl<D: GenericDiscretization> GenericDiscretization for HigherOrderLift<D> {
    fn forward_generic<T: Real>(&self, z: &[T], v: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(self.dim(), z.len())?;
        ensure_dim(self.dim(), v.len())?;
        let (a, b) = self.base.forward_generic(&self.series(z), &self.series(v))?;
        Ok((self.flatten(&a), self.flatten(&b)))
    }
    fn inverse_generic<T: Real>(&self, a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        ensure_dim(self.dim(), a.len())?;
        ensure_dim(self.dim(), b.len())?;
        let (z, v) = self.base.inverse_generic(&self.series(a), &self.series(b))?;
        Ok((self.flatten(&z), self.flatten(&v)))
    }
}

/// Cotangent lift `R_d^{T*}` of a discretization map on `M` (dimension `d`).
///
/// Points of `T*M` are `(m, p)` and tangent vectors `(mdot, pdot)`, both of
/// length `2d`. The image pair is `((m0, p0), (m1, p1))` where
/// `(m0, m1) = R_d(m, mdot)` and `(-p0, p1) DR_d(m, mdot) = (pdot, p)`.
#[derive(Debug, Clone)]
pub struct CotangentLift<D> {
    base: D,
}

pub fn cotangent_lift<D: DiscretizationMap>(base: D) -> CotangentLift<D> {
    CotangentLift { base }
}

impl<D: DiscretizationMap> CotangentLift<D> {
    pub fn base(&self) -> &D {
        &self.base
    }
}

impl<D: DiscretizationMap> DiscretizationMap for CotangentLift<D> {
    fn name(&self) -> String {
        format!("cotangent({})", self.base.name())
    }
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }
    fn check_domain(&self, z: &Vector, v: &Vector) -> Result<()> {
        let d = self.base.dim();
        ensure_dim(2 * d, z.len())?;
        ensure_dim(2 * d, v.len())?;
        self.base.check_domain(&z.rows(0, d).into_owned(), &v.rows(0, d).into_owned())
    }
    fn forward(&self, z: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(z, v)?;
        let d = self.base.dim();
        let (m, p) = (z.rows(0, d).into_owned(), z.rows(d, d).into_owned());
        let (mdot, pdot) = (v.rows(0, d).into_owned(), v.rows(d, d).into_owned());
        let (m0, m1) = self.base.forward(&m, &mdot)?;
        let jac = self.base.jacobian(&m, &mdot)?;
        let y = solve(&jac.transpose(), &concat(&[&pdot, &p]))?;
        let p0 = -y.rows(0, d);
        let p1 = y.rows(d, d).into_owned();
        Ok((concat(&[&m0, &p0]), concat(&[&m1, &p1])))
    }
    fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
        let d = self.base.dim();
        ensure_dim(2 * d, a.len())?;
        ensure_dim(2 * d, b.len())?;
        let (m, mdot) = self.base.inverse(&a.rows(0, d).into_owned(), &b.rows(0, d).into_owned())?;
        let jac = self.base.jacobian(&m, &mdot)?;
        let covector = concat(&[&(-a.rows(d, d)), &b.rows(d, d).into_owned()]);
        let w = jac.transpose() * covector;
        let (pdot, p) = (w.rows(0, d).into_owned(), w.rows(d, d).into_owned());
        Ok((concat(&[&m, &p]), concat(&[&mdot, &pdot])))
    }
    fn sample_base_point(&self, rng: &mut dyn RngCore) -> Vector {
        let m = self.base.sample_base_point(rng);
        let p = Vector::from_fn(m.len(), |_, _| rng.random_range(-2.0..2.0));
        concat(&[&m, &p])
    }
    fn sample_velocity(&self, z: &Vector, rng: &mut dyn RngCore) -> Vector {
        let d = self.base.dim();
        let mdot = self.base.sample_velocity(&z.rows(0, d).into_owned(), rng);
        let pdot = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        concat(&[&mdot, &pdot])
    }
}

/// Closed form of the cotangent-lifted midpoint map on `T*R^d`:
/// `((m - mdot/2, p - pdot/2), (m + mdot/2, p + pdot/2))`.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormLiftedMidpoint {
    d: usize,
}

/// Cotangent lift of the midpoint map on `R^n`, in closed form.
pub fn cotangent_midpoint_closed_form(n: usize) -> ClosedFormLiftedMidpoint {
    assert!(n >= 1, "dimension must be positive");
    ClosedFormLiftedMidpoint { d: n }
}

/// Cotangent lift of the first-order lifted midpoint map on `T*(TR^n)`,
/// points ordered `(q, qdot, p0, p1)`, in closed form.
pub fn lifted_midpoint_on_cotangent_tq(n: usize) -> ClosedFormLiftedMidpoint {
    assert!(n >= 1, "dimension must be positive");
    ClosedFormLiftedMidpoint { d: 2 * n }
}

impl DiscretizationMap for ClosedFormLiftedMidpoint {
    fn name(&self) -> String {
        format!("closed-form-lifted-midpoint(d={})", self.d)
    }
    fn dim(&self) -> usize {
        2 * self.d
    }
    fn forward(&self, z: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(z, v)?;
        Ok((z - v * 0.5, z + v * 0.5))
    }
    fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
        self.check_domain(a, b)?;
        Ok(((a + b) * 0.5, b - a))
    }
    fn jacobian(&self, z: &Vector, v: &Vector) -> Result<Matrix> {
        self.check_domain(z, v)?;
        midpoint_map(2 * self.d).jacobian(z, v)
    }
}

/// Base discretization used by the integrators on `T*(TQ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Discretization {
    Midpoint,
    Theta(f64),
}

impl Discretization {
    /// Cotangent lift of the first-order lift of this map on `R^n`.
    pub fn lifted_cotangent(&self, n: usize) -> Result<Box<dyn DiscretizationMap>> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(match *self {
            Discretization::Midpoint => Box::new(cotangent_lift(higher_order_lift(midpoint_map(n), 1)?)),
            Discretization::Theta(t) => Box::new(cotangent_lift(higher_order_lift(theta_map(n, t)?, 1)?)),
        })
    }
}

/// `Omega_12 = -omega_1 + omega_2` on `T*M x T*M` in `(m0, p0, m1, p1)` coordinates.
fn product_form(d: usize) -> Matrix {
    let mut w = Matrix::zeros(4 * d, 4 * d);
    for i in 0..d {
        for (off, sign) in [(0, -1.0), (2 * d, 1.0)] {
            w[(off + i, off + d + i)] = sign;
            w[(off + d + i, off + i)] = -sign;
        }
    }
    w
}

/// Canonical form of `T*(T*M)` in `(m, p, mdot, pdot)` coordinates.
fn tangent_cotangent_form(d: usize) -> Matrix {
    let mut w = Matrix::zeros(4 * d, 4 * d);
    let (m, p, mdot, pdot) = (0, d, 2 * d, 3 * d);
    for i in 0..d {
        w[(m + i, pdot + i)] = 1.0;
        w[(pdot + i, m + i)] = -1.0;
        w[(mdot + i, p + i)] = 1.0;
        w[(p + i, mdot + i)] = -1.0;
    }
    w
}

/// `|S^T Omega_12 S - Omega_{TT*M}|_inf` with `S` the difference Jacobian of the map at `(z, v)`.
pub fn symplectic_defect(c: &dyn DiscretizationMap, z: &Vector, v: &Vector) -> Result<f64> {
    let dim = c.dim();
    if dim % 2 != 0 {
        return Err(Error::InvalidArgument(format!("a cotangent bundle has even dimension, got {dim}")));
    }
    let d = dim / 2;
    let x = concat(&[z, v]);
    let f = |x: &Vector| {
        let p = split(x, &[dim, dim]);
        let (a, b) = c.forward(&p[0], &p[1])?;
        Ok(concat(&[&a, &b]))
    };
    let s = jacobian_fd(f, &x, default_fd_step(&x))?;
    let pulled = s.transpose() * product_form(d) * &s;
    Ok(mat_inf_norm(&(pulled - tangent_cotangent_form(d))))
}

#[derive(Debug, Clone, Serialize)]
pub struct SymplecticReport {
    pub map: String,
    pub tolerance: f64,
    pub defects: Vec<f64>,
}

impl SymplecticReport {
    pub fn max_defect(&self) -> f64 {
        self.defects.iter().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.defects.iter().all(|&d| d <= self.tolerance)
    }
}

/// Evaluates [`symplectic_defect`] at each `(z, v)`; evaluation errors count as infinite defect.
pub fn check_symplectomorphism(c: &dyn DiscretizationMap, samples: &[(Vector, Vector)], tol: f64) -> SymplecticReport {
    let defects = samples.iter().map(|(z, v)| symplectic_defect(c, z, v).unwrap_or(f64::INFINITY)).collect();
    SymplecticReport { map: c.name(), tolerance: tol, defects }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::phi_k_inverse;
    use crate::maps::{se2_exp_map, sphere_geodesic_midpoint_map, sphere_initial_point_map};
    use crate::numeric::vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> Vector {
        vector(x).unwrap()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vector {
        Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0))
    }

    fn random_jet_tangent(n: usize, k: usize, rng: &mut ChaCha8Rng) -> JetTangent {
        let base = Jet::new((0..=k).map(|_| random(n, rng)).collect()).unwrap();
        JetTangent::new(base, (0..=k).map(|_| random(n, rng)).collect()).unwrap()
    }

    #[test]
    fn tangent_lift_of_midpoint() {
        let t = tangent_lift(midpoint_map(1));
        let ((a, da), (b, db)) = t.apply(&v(&[1.0]), &v(&[2.0]), &v(&[3.0]), &v(&[4.0])).unwrap();
        assert_eq!((a[0], b[0], da[0], db[0]), (0.0, 2.0, 1.0, 5.0));
    }

    #[test]
    fn tangent_lift_is_first_order_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = se2_exp_map();
        let lift = higher_order_lift(base, 1).unwrap();
        let t = tangent_lift(base);
        for _ in 0..20 {
            let q = base.sample_base_point(&mut rng);
            let vel = base.sample_velocity(&q, &mut rng);
            let (qd, vd) = (random(3, &mut rng), random(3, &mut rng));
            let ((a, da), (b, db)) = t.apply(&q, &vel, &qd, &vd).unwrap();
            let (l0, l1) = lift.forward(&concat(&[&q, &qd]), &concat(&[&vel, &vd])).unwrap();
            assert!(inf_norm(&(l0 - concat(&[&a, &da]))) < 1e-12);
            assert!(inf_norm(&(l1 - concat(&[&b, &db]))) < 1e-12);
        }
    }

    #[test]
    fn second_order_lift_of_midpoint_all_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lift = higher_order_lift(midpoint_map(2), 2).unwrap();
        for _ in 0..20 {
            let x = random_jet_tangent(2, 2, &mut rng);
            let expect_minus: Vec<Vector> = x.base.slots().iter().zip(&x.fiber).map(|(q, v)| q - v * 0.5).collect();
            let expect_plus: Vec<Vector> = x.base.slots().iter().zip(&x.fiber).map(|(q, v)| q + v * 0.5).collect();
            let (em, ep) = (Jet::new(expect_minus).unwrap(), Jet::new(expect_plus).unwrap());
            for (path, tol) in [(None, 1e-12), (Some(DerivativeSource::Analytic), 1e-9), (Some(DerivativeSource::FiniteDifference), 1e-6)] {
                let (m, p) = match path {
                    None => lift.forward_jet(&x).unwrap(),
                    Some(s) => lift.forward_faa_di_bruno(&x, s).unwrap(),
                };
                assert!(m.max_abs_diff(&em) <= tol && p.max_abs_diff(&ep) <= tol, "{path:?}");
            }
        }
    }

    #[test]
    fn faa_di_bruno_matches_taylor_on_nonlinear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base = se2_exp_map();
        let lift = higher_order_lift(base, 2).unwrap();
        for _ in 0..10 {
            let mut x = random_jet_tangent(3, 2, &mut rng);
            x.fiber[0][2] = rng.random_range(-2.0..2.0);
            let (m, p) = lift.forward_jet(&x).unwrap();
            let (m2, p2) = lift.forward_faa_di_bruno(&x, DerivativeSource::Analytic).unwrap();
            assert!(m.max_abs_diff(&m2) < 1e-6 && p.max_abs_diff(&p2) < 1e-6);
            let (m3, p3) = lift.forward_faa_di_bruno(&x, DerivativeSource::FiniteDifference).unwrap();
            assert!(m.max_abs_diff(&m3) < 1e-5 && p.max_abs_diff(&p3) < 1e-5);
        }
        let x3 = random_jet_tangent(3, 3, &mut rng);
        let lift3 = higher_order_lift(base, 3).unwrap();
        assert!(matches!(lift3.forward_faa_di_bruno(&x3, DerivativeSource::Analytic), Err(Error::UnsupportedOrder { .. })));
        assert!(lift3.forward_jet(&x3).is_ok());
    }

    #[test]
    fn order_above_cap_is_rejected() {
        assert!(matches!(higher_order_lift(midpoint_map(1), 5), Err(Error::UnsupportedOrder { order: 5, max: 4 })));
    }

    #[test]
    fn zero_fiber_gives_diagonal_for_shipped_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 0..=2 {
            let flat: Vec<Box<dyn DiscretizationMap>> = vec![
                Box::new(higher_order_lift(midpoint_map(2), k).unwrap()),
                Box::new(higher_order_lift(theta_map(2, 0.2).unwrap(), k).unwrap()),
                Box::new(higher_order_lift(se2_exp_map(), k).unwrap()),
                Box::new(higher_order_lift(sphere_geodesic_midpoint_map(), k).unwrap()),
            ];
            for m in &flat {
                let z = m.sample_base_point(&mut rng);
                let (a, b) = m.forward(&z, &Vector::zeros(z.len())).unwrap();
                assert!(inf_norm(&(a - &z)) < 1e-14 && inf_norm(&(b - &z)) < 1e-14, "{}", m.name());
            }
            // The initial-point sphere map needs a genuine sphere jet: q(t) = (cos t, sin t, 0).
            let lift = higher_order_lift(sphere_initial_point_map(), k).unwrap();
            let slots = [v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[-1.0, 0.0, 0.0])];
            let z = concat(&slots.iter().take(k + 1).collect::<Vec<_>>());
            let (a, b) = lift.forward(&z, &Vector::zeros(z.len())).unwrap();
            assert!(inf_norm(&(a - &z)) < 1e-14 && inf_norm(&(b - &z)) < 1e-14);
        }
    }

    #[test]
    fn lifts_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let maps: Vec<Box<dyn DiscretizationMap>> = vec![
            Box::new(higher_order_lift(midpoint_map(2), 2).unwrap()),
            Box::new(higher_order_lift(se2_exp_map(), 2).unwrap()),
            Box::new(cotangent_lift(midpoint_map(3))),
            Box::new(cotangent_lift(higher_order_lift(theta_map(2, 0.3).unwrap(), 1).unwrap())),
            Box::new(cotangent_lift(se2_exp_map())),
        ];
        for m in &maps {
            for _ in 0..30 {
                let z = m.sample_base_point(&mut rng);
                let vel = m.sample_velocity(&z, &mut rng);
                let (a, b) = m.forward(&z, &vel).unwrap();
                let (z2, v2) = m.inverse(&a, &b).unwrap();
                assert!(inf_norm(&(z2 - &z)) < 1e-9 && inf_norm(&(v2 - &vel)) < 1e-9, "{}", m.name());
            }
        }
    }

    #[test]
    fn jet_api_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let lift = higher_order_lift(se2_exp_map(), 2).unwrap();
        let x = random_jet_tangent(3, 2, &mut rng);
        let (m, p) = lift.forward_jet(&x).unwrap();
        let back = lift.inverse_jet(&m, &p).unwrap();
        let again = phi_k_inverse(&phi_k(&back)).unwrap();
        assert!(again.base.max_abs_diff(&x.base) < 1e-10);
        assert!(inf_norm(&(again.fiber_flat() - x.fiber_flat())) < 1e-10);
    }

    #[test]
    fn cotangent_midpoint_hand_values() {
        let c = lifted_midpoint_on_cotangent_tq(1);
        let (a, b) = c.forward(&v(&[0.0, 1.0, 2.0, 3.0]), &v(&[1.0, 2.0, 4.0, 6.0])).unwrap();
        assert_eq!(a, v(&[-0.5, 0.0, 0.0, 0.0]));
        assert_eq!(b, v(&[0.5, 2.0, 4.0, 6.0]));
        let generic = cotangent_lift(higher_order_lift(midpoint_map(1), 1).unwrap());
        let (a2, b2) = generic.forward(&v(&[0.0, 1.0, 2.0, 3.0]), &v(&[1.0, 2.0, 4.0, 6.0])).unwrap();
        assert!(inf_norm(&(a2 - a)) < 1e-14 && inf_norm(&(b2 - b)) < 1e-14);
    }

    #[test]
    fn generic_cotangent_lift_matches_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 3] {
            let pairs: [(Box<dyn DiscretizationMap>, Box<dyn DiscretizationMap>); 2] = [
                (Box::new(cotangent_lift(midpoint_map(n))), Box::new(cotangent_midpoint_closed_form(n))),
                (Box::new(cotangent_lift(higher_order_lift(midpoint_map(n), 1).unwrap())), Box::new(lifted_midpoint_on_cotangent_tq(n))),
            ];
            for (generic, closed) in &pairs {
                for _ in 0..100 {
                    let z = random(generic.dim(), &mut rng);
                    let vel = random(generic.dim(), &mut rng);
                    let (a, b) = generic.forward(&z, &vel).unwrap();
                    let (c, d) = closed.forward(&z, &vel).unwrap();
                    assert!(inf_norm(&(a - c)) <= 1e-12 && inf_norm(&(b - d)) <= 1e-12);
                }
            }
        }
    }

    struct Perturbed<D>(D);
    impl<D: DiscretizationMap> DiscretizationMap for Perturbed<D> {
        fn name(&self) -> String {
            "perturbed".into()
        }
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn forward(&self, z: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
            let (a, mut b) = self.0.forward(z, v)?;
            let d = self.dim() / 2;
            for i in d..2 * d {
                b[i] *= 1.1;
            }
            Ok((a, b))
        }
        fn inverse(&self, a: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
            self.0.inverse(a, b)
        }
    }

    #[test]
    fn symplectic_check_accepts_lifts_and_rejects_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for n in [1, 3] {
            let good = cotangent_lift(higher_order_lift(midpoint_map(n), 1).unwrap());
            let se2 = cotangent_lift(se2_exp_map());
            let samples: Vec<_> = (0..20)
                .map(|_| {
                    let z = random(good.dim(), &mut rng);
                    let vel = random(good.dim(), &mut rng);
                    (z, vel)
                })
                .collect();
            assert!(check_symplectomorphism(&good, &samples, 1e-6).passed());
            assert!(check_symplectomorphism(&lifted_midpoint_on_cotangent_tq(n), &samples, 1e-6).passed());
            let bad = check_symplectomorphism(&Perturbed(good), &samples, 1e-6);
            assert!(bad.defects.iter().all(|&d| d >= 0.05), "{:?}", bad.defects);

            let se2_samples: Vec<_> = (0..10)
                .map(|_| {
                    let z = se2.sample_base_point(&mut rng);
                    let vel = se2.sample_velocity(&z, &mut rng);
                    (z, vel)
                })
                .collect();
            let r = check_symplectomorphism(&se2, &se2_samples, 1e-6);
            assert!(r.passed(), "{}", r.max_defect());
        }
    }

    #[test]
    fn singular_base_jacobian_surfaces() {
        // The ambient Jacobian of the sphere initial-point map is rank deficient.
        let c = cotangent_lift(sphere_initial_point_map());
        let z = v(&[1.0, 0.0, 0.0, 0.1, 0.2, 0.3]);
        let vel = v(&[0.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(c.forward(&z, &vel), Err(Error::SingularJacobian(_))));
    }

    #[test]
    fn discretization_choices_build() {
        let mid = Discretization::Midpoint.lifted_cotangent(2).unwrap();
        assert_eq!(mid.dim(), 8);
        assert!(Discretization::Theta(1.5).lifted_cotangent(2).is_err());
        assert!(Discretization::Midpoint.lifted_cotangent(0).is_err());
    }
}
