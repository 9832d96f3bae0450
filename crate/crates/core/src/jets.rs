//! Points of higher-order tangent bundles in coordinates.
//!
//! A [`Jet`] of order `k` stores the raw derivatives `c(0), c'(0), ..., c^(k)(0)`
//! of a curve. The `1/r!`-scaled coordinates are available through
//! [`Jet::to_normalized`] / [`Jet::from_normalized`] but are never used
//! internally.

use crate::error::{ensure_dim, Error, Result};
use crate::numeric::{is_finite, jacobian_fd, Matrix, Vector};
use crate::taylor::{check_order, factorial, taylor_derivatives, DerivativeBackend, Real, SmoothCurve, Taylor, MAX_ORDER};

/// Map `R^a -> R^b` written once for any [`Real`] scalar.
pub trait SmoothMap {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval<T: Real>(&self, x: &[T]) -> Result<Vec<T>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    derivs: Vec<Vector>,
}

impl Jet {
    pub fn new(derivs: Vec<Vector>) -> Result<Self> {
        let first = derivs.first().ok_or_else(|| Error::InvalidArgument("a jet needs at least a base point".into()))?;
        check_order(derivs.len() - 1)?;
        let n = first.len();
        for d in &derivs {
            ensure_dim(n, d.len())?;
            if !is_finite(d) {
                return Err(Error::InvalidArgument("non-finite jet entry".into()));
            }
        }
        Ok(Jet { derivs })
    }

    pub fn zero(order: usize, dim: usize) -> Result<Self> {
        Jet::new(vec![Vector::zeros(dim); order + 1])
    }

    /// Unpacks `(slot 0, slot 1, ...)` laid out end to end.
    pub fn from_flat(flat: &Vector, order: usize, dim: usize) -> Result<Self> {
        ensure_dim((order + 1) * dim, flat.len())?;
        Jet::new((0..=order).map(|r| flat.rows(r * dim, dim).into_owned()).collect())
    }

    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.derivs[0].len()
    }

    pub fn slot(&self, r: usize) -> &Vector {
        &self.derivs[r]
    }

    pub fn slots(&self) -> &[Vector] {
        &self.derivs
    }

    pub fn base(&self) -> &Vector {
        &self.derivs[0]
    }

    pub fn flatten(&self) -> Vector {
        Vector::from_iterator(self.derivs.len() * self.dim(), self.derivs.iter().flat_map(|d| d.iter().copied()))
    }

    /// Slot `r` divided by `r!`.
    pub fn to_normalized(&self) -> Jet {
        Jet { derivs: self.derivs.iter().enumerate().map(|(r, d)| d / factorial(r)).collect() }
    }

    /// Slot `r` multiplied by `r!`.
    pub fn from_normalized(&self) -> Jet {
        Jet { derivs: self.derivs.iter().enumerate().map(|(r, d)| d * factorial(r)).collect() }
    }

    /// Per-coordinate Taylor series of the jet's curve.
    pub(crate) fn series<T: Real>(&self) -> Vec<Taylor<T>> {
        (0..self.dim())
            .map(|i| {
                let raw: Vec<T> = self.derivs.iter().map(|d| T::cst(d[i])).collect();
                Taylor::from_derivatives(&raw)
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        self.derivs
            .iter()
            .zip(&other.derivs)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// A point of `T(T^(k)Q)`: a jet together with a velocity for each of its slots.
#[derive(Debug, Clone, PartialEq)]
pub struct JetTangent {
    pub base: Jet,
    pub fiber: Vec<Vector>,
}

impl JetTangent {
    pub fn new(base: Jet, fiber: Vec<Vector>) -> Result<Self> {
        ensure_dim(base.order() + 1, fiber.len())?;
        for f in &fiber {
            ensure_dim(base.dim(), f.len())?;
        }
        Ok(JetTangent { base, fiber })
    }

    pub fn zero_fiber(base: Jet) -> Self {
        let fiber = vec![Vector::zeros(base.dim()); base.order() + 1];
        JetTangent { base, fiber }
    }

    pub fn fiber_flat(&self) -> Vector {
        let n = self.base.dim();
        Vector::from_iterator(self.fiber.len() * n, self.fiber.iter().flat_map(|d| d.iter().copied()))
    }
}

/// Canonical identification `T(T^(k)Q) -> T^(k)(TQ)`.
///
/// In flat coordinates slot `r` of the result is `(q^(r), v^(r))`.
pub fn phi_k(x: &JetTangent) -> Jet {
    let derivs = x
        .base
        .slots()
        .iter()
        .zip(&x.fiber)
        .map(|(q, v)| Vector::from_iterator(q.len() + v.len(), q.iter().chain(v.iter()).copied()))
        .collect();
    Jet { derivs }
}

/// Inverse of [`phi_k`]; the jet must have even dimension.
pub fn phi_k_inverse(j: &Jet) -> Result<JetTangent> {
    if j.dim() % 2 != 0 {
        return Err(Error::InvalidArgument(format!("a TQ jet has even dimension, got {}", j.dim())));
    }
    let n = j.dim() / 2;
    let base = Jet { derivs: j.slots().iter().map(|s| s.rows(0, n).into_owned()).collect() };
    let fiber = j.slots().iter().map(|s| s.rows(n, n).into_owned()).collect();
    Ok(JetTangent { base, fiber })
}

/// `T^(k)F`: pushes a jet through `f` by Taylor propagation (any `k <= 4`).
pub fn jet_pushforward<F: SmoothMap>(f: &F, j: &Jet) -> Result<Jet> {
    ensure_dim(f.input_dim(), j.dim())?;
    let out = f.eval(&j.series::<f64>())?;
    Jet::new((0..=j.order()).map(|r| Vector::from_iterator(out.len(), out.iter().map(|s| s.derivative(r)))).collect())
}

/// First and second derivative access for Faà di Bruno pushforwards.
pub trait Differentiable {
    fn value(&self, x: &Vector) -> Result<Vector>;
    fn jacobian(&self, x: &Vector) -> Result<Matrix>;
    /// `D^2 f(x)(v, v)`.
    fn second_directional(&self, x: &Vector, v: &Vector) -> Result<Vector>;
}

/// Derivatives of a [`SmoothMap`] by forward-mode Taylor arithmetic.
pub struct Exact<'a, F>(pub &'a F);

impl<F: SmoothMap> Differentiable for Exact<'_, F> {
    fn value(&self, x: &Vector) -> Result<Vector> {
        Ok(Vector::from_vec(self.0.eval(x.as_slice())?))
    }

    fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        exact_jacobian(self.0, x)
    }

    fn second_directional(&self, x: &Vector, v: &Vector) -> Result<Vector> {
        let line: Vec<Taylor<f64>> = x.iter().zip(v.iter()).map(|(&xi, &vi)| Taylor::from_derivatives(&[xi, vi])).collect();
        let out = self.0.eval(&line)?;
        Ok(Vector::from_iterator(out.len(), out.iter().map(|s| s.derivative(2))))
    }
}

/// Jacobian of a [`SmoothMap`] by one directional Taylor evaluation per column.
pub fn exact_jacobian<F: SmoothMap>(f: &F, x: &Vector) -> Result<Matrix> {
    let n = x.len();
    let mut jac = Matrix::zeros(f.output_dim(), n);
    for col in 0..n {
        let seeded: Vec<Taylor<f64>> = (0..n)
            .map(|i| if i == col { Taylor::variable(x[i]) } else { Taylor::constant(x[i]) })
            .collect();
        let out = f.eval(&seeded)?;
        for (row, s) in out.iter().enumerate() {
            jac[(row, col)] = s.c[1];
        }
    }
    Ok(jac)
}

/// Derivatives of a plain closure by central differences.
pub struct FiniteDifferences<F> {
    pub f: F,
    pub eps: f64,
}

impl<F: Fn(&Vector) -> Result<Vector>> Differentiable for FiniteDifferences<F> {
    fn value(&self, x: &Vector) -> Result<Vector> {
        (self.f)(x)
    }

    fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        jacobian_fd(&self.f, x, self.eps)
    }

    fn second_directional(&self, x: &Vector, v: &Vector) -> Result<Vector> {
        let h = 1e-4 * (1.0 + crate::numeric::inf_norm(x)) / crate::numeric::inf_norm(v).max(1e-300);
        let plus = (self.f)(&(x + v * h))?;
        let minus = (self.f)(&(x - v * h))?;
        let mid = (self.f)(x)?;
        Ok((plus - mid * 2.0 + minus) / (h * h))
    }
}

/// Pushforward by the explicit Faà di Bruno formula, orders 0 to 2:
/// slot 1 is `Df c'`, slot 2 is `D^2f(c', c') + Df c''`.
pub fn jet_pushforward_faa_di_bruno(f: &dyn Differentiable, j: &Jet) -> Result<Jet> {
    if j.order() > 2 {
        return Err(Error::UnsupportedOrder { order: j.order(), max: 2 });
    }
    let x = j.base();
    let mut derivs = vec![f.value(x)?];
    if j.order() >= 1 {
        let jac = f.jacobian(x)?;
        derivs.push(&jac * j.slot(1));
        if j.order() == 2 {
            let curvature = if j.slot(1).iter().all(|&c| c == 0.0) {
                Vector::zeros(derivs[0].len())
            } else {
                f.second_directional(x, j.slot(1))?
            };
            derivs.push(curvature + &jac * j.slot(2));
        }
    }
    Jet::new(derivs)
}

/// The `k`-jet at `t = 0` of a curve.
pub fn jet_of_curve<C: SmoothCurve>(curve: &C, k: usize, backend: DerivativeBackend) -> Result<Jet> {
    check_order(k)?;
    Jet::new(taylor_derivatives(curve, 0.0, k, backend)?)
}

/// Largest order any jet in the crate may have.
pub const MAX_JET_ORDER: usize = MAX_ORDER;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::vector;
    use approx::assert_abs_diff_eq;

    fn jet(slots: &[&[f64]]) -> Jet {
        Jet::new(slots.iter().map(|s| vector(s).unwrap()).collect()).unwrap()
    }

    struct Square;
    impl SmoothMap for Square {
        fn input_dim(&self) -> usize {
            1
        }
        fn output_dim(&self) -> usize {
            1
        }
        fn eval<T: Real>(&self, x: &[T]) -> Result<Vec<T>> {
            Ok(vec![x[0] * x[0]])
        }
    }

    struct Linear(Matrix);
    impl SmoothMap for Linear {
        fn input_dim(&self) -> usize {
            self.0.ncols()
        }
        fn output_dim(&self) -> usize {
            self.0.nrows()
        }
        fn eval<T: Real>(&self, x: &[T]) -> Result<Vec<T>> {
            Ok((0..self.0.nrows())
                .map(|i| (0..self.0.ncols()).fold(T::cst(0.0), |acc, j| acc + x[j] * self.0[(i, j)]))
                .collect())
        }
    }

    #[test]
    fn normalization_scales_by_factorial() {
        let j = jet(&[&[1.0], &[2.0], &[4.0]]);
        assert_eq!(j.to_normalized(), jet(&[&[1.0], &[2.0], &[2.0]]));
        let low = jet(&[&[3.0, 1.0], &[-2.0, 5.0]]);
        assert_eq!(low.to_normalized(), low);
        assert_eq!(low.from_normalized(), low);
    }

    #[test]
    fn square_pushforward() {
        let j = jet(&[&[1.0], &[1.0], &[0.0]]);
        let expected = jet(&[&[1.0], &[2.0], &[2.0]]);
        assert!(jet_pushforward(&Square, &j).unwrap().max_abs_diff(&expected) < 1e-15);
        let fdb = jet_pushforward_faa_di_bruno(&Exact(&Square), &j).unwrap();
        assert!(fdb.max_abs_diff(&expected) < 1e-15);
        let fd = FiniteDifferences { f: |x: &Vector| Ok(x.map(|v| v * v)), eps: 1e-5 };
        assert!(jet_pushforward_faa_di_bruno(&fd, &j).unwrap().max_abs_diff(&expected) < 1e-6);
    }

    #[test]
    fn linear_pushforward_multiplies_every_slot() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 3.0]);
        let j = jet(&[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 0.25], &[-2.0, 1.0], &[0.1, 0.2]]);
        let out = jet_pushforward(&Linear(a.clone()), &j).unwrap();
        for r in 0..=4 {
            assert!((out.slot(r) - &a * j.slot(r)).amax() < 1e-13);
        }
    }

    #[test]
    fn identity_pushforward_is_noop() {
        let j = jet(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]);
        let out = jet_pushforward(&Linear(Matrix::identity(3, 3)), &j).unwrap();
        assert_eq!(out, j);
    }

    #[test]
    fn faa_di_bruno_caps_at_order_two() {
        let j = Jet::zero(3, 1).unwrap();
        assert!(matches!(
            jet_pushforward_faa_di_bruno(&Exact(&Square), &j),
            Err(Error::UnsupportedOrder { order: 3, max: 2 })
        ));
    }

    #[test]
    fn jets_above_order_four_are_rejected() {
        assert!(matches!(Jet::zero(5, 2), Err(Error::UnsupportedOrder { .. })));
    }

    #[test]
    fn phi_k_reindexes() {
        let base = jet(&[&[1.0], &[2.0], &[3.0]]);
        let x = JetTangent::new(base, vec![vector(&[4.0]).unwrap(), vector(&[5.0]).unwrap(), vector(&[6.0]).unwrap()]).unwrap();
        let tq = phi_k(&x);
        assert_eq!(tq, jet(&[&[1.0, 4.0], &[2.0, 5.0], &[3.0, 6.0]]));
        assert_eq!(phi_k_inverse(&tq).unwrap(), x);

        let k0 = JetTangent::new(jet(&[&[7.0, 8.0]]), vec![vector(&[9.0, 10.0]).unwrap()]).unwrap();
        assert_eq!(phi_k(&k0), jet(&[&[7.0, 8.0, 9.0, 10.0]]));
    }

    struct Parabola;
    impl SmoothCurve for Parabola {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Real>(&self, t: T) -> Result<Vec<T>> {
            Ok(vec![t, t * t])
        }
    }

    struct Constant;
    impl SmoothCurve for Constant {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Real>(&self, _t: T) -> Result<Vec<T>> {
            Ok(vec![T::cst(3.0), T::cst(-1.0)])
        }
    }

    #[test]
    fn jets_of_simple_curves() {
        let j = jet_of_curve(&Parabola, 2, DerivativeBackend::Taylor).unwrap();
        assert_eq!(j, jet(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 2.0]]));
        for (backend, tol) in [(DerivativeBackend::Taylor, 0.0), (DerivativeBackend::FiniteDifference, 1e-9)] {
            let c = jet_of_curve(&Constant, 4, backend).unwrap();
            for r in 1..=4 {
                assert_abs_diff_eq!(c.slot(r).amax(), 0.0, epsilon = tol);
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_jet(order: usize, dim: usize) -> impl Strategy<Value = Jet> {
            proptest::collection::vec(-5.0..5.0f64, (order + 1) * dim)
                .prop_map(move |v| Jet::from_flat(&Vector::from_vec(v), order, dim).unwrap())
        }

        proptest! {
            #[test]
            fn normalization_round_trips(j in (0usize..=4).prop_flat_map(|k| arb_jet(k, 3))) {
                prop_assert!(j.to_normalized().from_normalized().max_abs_diff(&j) <= 1e-12);
            }

            #[test]
            fn phi_k_round_trips(j in (0usize..=4).prop_flat_map(|k| arb_jet(k, 4))) {
                prop_assert_eq!(phi_k(&phi_k_inverse(&j).unwrap()), j);
            }
        }
    }
}
