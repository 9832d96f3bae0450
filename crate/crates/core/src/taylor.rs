//! Truncated Taylor arithmetic and derivative estimation along curves.
//!
//! [`Taylor<T>`] stores the normalized coefficients `c_r = f^(r)(t0) / r!`
//! of a scalar function up to [`MAX_ORDER`]. It is generic over its own
//! coefficient type, so `Taylor<Taylor<f64>>` differentiates through an
//! already-differentiated computation. All maps in this crate are written
//! against [`Real`] so they can be pushed through jets exactly.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::numeric::Vector;

/// Highest derivative order carried anywhere in the crate.
pub const MAX_ORDER: usize = 4;
const LEN: usize = MAX_ORDER + 1;

/// Scalar field usable by every map in the crate: `f64` or a Taylor series.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    /// The plain `f64` value (constant term all the way down).
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan(self) -> Self;

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }

    fn powi(self, n: u32) -> Self {
        (0..n).fold(Self::cst(1.0), |acc, _| acc * self)
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn recip(self) -> Self {
        f64::recip(self)
    }
}

/// Dot product over any [`Real`].
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::cst(0.0), |acc, (&x, &y)| acc + x * y)
}

/// Truncated power series in one variable with coefficients of type `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor<T> {
    pub c: [T; LEN],
}

impl<T: Real> Taylor<T> {
    pub fn constant(x: T) -> Self {
        let mut c = [T::cst(0.0); LEN];
        c[0] = x;
        Taylor { c }
    }

    /// The independent variable `x0 + t`.
    pub fn variable(x0: T) -> Self {
        let mut c = [T::cst(0.0); LEN];
        c[0] = x0;
        c[1] = T::cst(1.0);
        Taylor { c }
    }

    /// Series from raw derivatives `d[r] = f^(r)(t0)`; missing orders are zero.
    pub fn from_derivatives(d: &[T]) -> Self {
        let mut c = [T::cst(0.0); LEN];
        for (r, &v) in d.iter().take(LEN).enumerate() {
            c[r] = v / factorial(r);
        }
        Taylor { c }
    }

    /// The raw `r`-th derivative, `c_r * r!`.
    pub fn derivative(&self, r: usize) -> T {
        self.c[r] * factorial(r)
    }

    fn zero() -> Self {
        Taylor { c: [T::cst(0.0); LEN] }
    }

    fn map(self, f: impl Fn(T) -> T) -> Self {
        Taylor { c: self.c.map(f) }
    }

    /// Series of `g(self)` given `g(a0)` and the series of `g'(self)`,
    /// via `k g_k = sum_j j a_j (g')_{k-j}`.
    fn integrate_chain(self, g0: T, dg: &Self) -> Self {
        let mut out = Self::zero();
        out.c[0] = g0;
        for k in 1..LEN {
            let mut s = T::cst(0.0);
            for j in 1..=k {
                s = s + self.c[j] * dg.c[k - j] * j as f64;
            }
            out.c[k] = s / k as f64;
        }
        out
    }
}

pub fn factorial(r: usize) -> f64 {
    (1..=r).fold(1.0, |acc, k| acc * k as f64)
}

impl<T: Real> Add for Taylor<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a = *a + b;
        }
        Taylor { c }
    }
}

impl<T: Real> Sub for Taylor<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a = *a - b;
        }
        Taylor { c }
    }
}

impl<T: Real> Mul for Taylor<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::zero();
        for k in 0..LEN {
            let mut s = T::cst(0.0);
            for i in 0..=k {
                s = s + self.c[i] * o.c[k - i];
            }
            out.c[k] = s;
        }
        out
    }
}

impl<T: Real> Div for Taylor<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut q = Self::zero();
        for k in 0..LEN {
            let mut s = self.c[k];
            for i in 1..=k {
                s = s - o.c[i] * q.c[k - i];
            }
            q.c[k] = s / o.c[0];
        }
        q
    }
}

impl<T: Real> Neg for Taylor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|x| -x)
    }
}

impl<T: Real> Add<f64> for Taylor<T> {
    type Output = Self;
    fn add(mut self, x: f64) -> Self {
        self.c[0] = self.c[0] + x;
        self
    }
}

impl<T: Real> Sub<f64> for Taylor<T> {
    type Output = Self;
    fn sub(mut self, x: f64) -> Self {
        self.c[0] = self.c[0] - x;
        self
    }
}

impl<T: Real> Mul<f64> for Taylor<T> {
    type Output = Self;
    fn mul(self, x: f64) -> Self {
        self.map(|a| a * x)
    }
}

impl<T: Real> Div<f64> for Taylor<T> {
    type Output = Self;
    fn div(self, x: f64) -> Self {
        self.map(|a| a / x)
    }
}

impl<T: Real> Real for Taylor<T> {
    fn cst(x: f64) -> Self {
        Self::constant(T::cst(x))
    }

    fn value(&self) -> f64 {
        self.c[0].value()
    }

    fn sin(self) -> Self {
        self.sin_cos().0
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    fn exp(self) -> Self {
        let mut e = Self::zero();
        e.c[0] = self.c[0].exp();
        for k in 1..LEN {
            let mut s = T::cst(0.0);
            for j in 1..=k {
                s = s + self.c[j] * e.c[k - j] * j as f64;
            }
            e.c[k] = s / k as f64;
        }
        e
    }

    fn ln(self) -> Self {
        let dg = Self::cst(1.0) / self;
        self.integrate_chain(self.c[0].ln(), &dg)
    }

    fn sqrt(self) -> Self {
        let mut r = Self::zero();
        r.c[0] = self.c[0].sqrt();
        let two_r0 = r.c[0] * 2.0;
        for k in 1..LEN {
            let mut s = self.c[k];
            for j in 1..k {
                s = s - r.c[j] * r.c[k - j];
            }
            r.c[k] = s / two_r0;
        }
        r
    }

    fn atan(self) -> Self {
        let dg = (self * self + 1.0).recip();
        self.integrate_chain(self.c[0].atan(), &dg)
    }
}

impl<T: Real> Taylor<T> {
    fn sin_cos(self) -> (Self, Self) {
        let mut s = Self::zero();
        let mut c = Self::zero();
        s.c[0] = self.c[0].sin();
        c.c[0] = self.c[0].cos();
        for k in 1..LEN {
            let mut ss = T::cst(0.0);
            let mut cc = T::cst(0.0);
            for j in 1..=k {
                let w = self.c[j] * j as f64;
                ss = ss + w * c.c[k - j];
                cc = cc - w * s.c[k - j];
            }
            s.c[k] = ss / k as f64;
            c.c[k] = cc / k as f64;
        }
        (s, c)
    }
}

/// A smooth curve `R -> R^n` that can be evaluated over any [`Real`].
pub trait SmoothCurve {
    fn dim(&self) -> usize;
    fn eval<T: Real>(&self, t: T) -> Result<Vec<T>>;
}

/// How [`taylor_derivatives`] obtains derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeBackend {
    /// Exact propagation of truncated Taylor series through the curve.
    Taylor,
    /// Wide symmetric finite-difference stencils.
    FiniteDifference,
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::UnsupportedOrder { order, max: MAX_ORDER })
    } else {
        Ok(())
    }
}

/// Raw derivatives `c^(r)(t0)` for `r = 0..=order`.
pub fn taylor_derivatives<C: SmoothCurve>(curve: &C, t0: f64, order: usize, backend: DerivativeBackend) -> Result<Vec<Vector>> {
    check_order(order)?;
    match backend {
        DerivativeBackend::Taylor => {
            let series = curve.eval(Taylor::variable(t0))?;
            Ok((0..=order).map(|r| Vector::from_iterator(series.len(), series.iter().map(|s| s.derivative(r)))).collect())
        }
        DerivativeBackend::FiniteDifference => fd_derivatives(|t| curve.eval(t).map(Vector::from_vec), t0, order),
    }
}

const STENCIL_HALF_WIDTH: usize = 8;

// Per-order stencil spacing for the 17-point stencil. Chosen so truncation
// (order ~16 - r) and round-off (~eps / h^r) balance on O(1) analytic curves.
const STENCIL_SPACING: [f64; LEN] = [0.0, 0.025, 0.035, 0.03, 0.035];

/// Finite-difference derivative estimates for a plain closure.
pub fn fd_derivatives<F>(f: F, t0: f64, order: usize) -> Result<Vec<Vector>>
where
    F: Fn(f64) -> Result<Vector>,
{
    check_order(order)?;
    let f0 = f(t0)?;
    let mut out = vec![f0.clone()];
    let m = STENCIL_HALF_WIDTH as i64;
    let offsets: Vec<f64> = (-m..=m).map(|i| i as f64).collect();
    let weights = fornberg_weights(0.0, &offsets, MAX_ORDER);
    for r in 1..=order {
        let h = STENCIL_SPACING[r];
        let mut acc = Vector::zeros(f0.len());
        for (i, &x) in offsets.iter().enumerate() {
            let w = weights[r][i];
            // Weights sum to zero for r >= 1; differencing against f0 avoids cancellation.
            if w != 0.0 && x != 0.0 {
                acc += (f(t0 + x * h)? - &f0) * w;
            }
        }
        out.push(acc / h.powi(r as i32));
    }
    Ok(out)
}

/// Finite-difference weights for derivatives `0..=max_deriv` at `z` on nodes `x`.
pub fn fornberg_weights(z: f64, x: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Cubic;
    impl SmoothCurve for Cubic {
        fn dim(&self) -> usize {
            1
        }
        fn eval<T: Real>(&self, t: T) -> Result<Vec<T>> {
            Ok(vec![t * t * t])
        }
    }

    struct Circle;
    impl SmoothCurve for Circle {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Real>(&self, t: T) -> Result<Vec<T>> {
            Ok(vec![t.cos(), t.sin()])
        }
    }

    struct Exp2;
    impl SmoothCurve for Exp2 {
        fn dim(&self) -> usize {
            1
        }
        fn eval<T: Real>(&self, t: T) -> Result<Vec<T>> {
            Ok(vec![(t * 2.0).exp()])
        }
    }

    fn flat(d: &[Vector]) -> Vec<f64> {
        d.iter().flat_map(|v| v.iter().copied()).collect()
    }

    fn both(curve: &impl SmoothCurve, t0: f64, order: usize, expected: &[f64]) {
        for backend in [DerivativeBackend::Taylor, DerivativeBackend::FiniteDifference] {
            let got = flat(&taylor_derivatives(curve, t0, order, backend).unwrap());
            assert_eq!(got.len(), expected.len());
            for (g, e) in got.iter().zip(expected) {
                assert_abs_diff_eq!(g, e, epsilon = 1e-7 * e.abs().max(1.0));
            }
        }
    }

    #[test]
    fn cubic_derivatives() {
        both(&Cubic, 1.0, 3, &[1.0, 3.0, 6.0, 6.0]);
    }

    #[test]
    fn circle_derivatives() {
        both(&Circle, 0.0, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn exponential_derivatives() {
        both(&Exp2, 0.0, 4, &[1.0, 2.0, 4.0, 8.0, 16.0]);
    }

    #[test]
    fn order_above_four_is_rejected() {
        let err = taylor_derivatives(&Cubic, 0.0, 5, DerivativeBackend::Taylor).unwrap_err();
        assert_eq!(err, Error::UnsupportedOrder { order: 5, max: 4 });
    }

    #[test]
    fn fornberg_reproduces_classic_stencil() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn nested_series_differentiate_twice() {
        // d/ds d/dt exp(s t) at s = 1, t = 0 is 1; d^2/dt^2 at the same point is s^2 = 1.
        let s = Taylor::<Taylor<f64>>::constant(Taylor::variable(1.0));
        let t = Taylor::<Taylor<f64>>::variable(Taylor::constant(0.0));
        let e = (s * t).exp();
        assert_abs_diff_eq!(e.c[1].c[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.derivative(2).c[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn elementary_functions_invert_each_other() {
        let x = Taylor::from_derivatives(&[0.7, 1.3, -0.4, 2.0, 0.5]);
        let back = x.exp().ln();
        let root = (x * x).sqrt();
        let tan_atan = {
            let a = x.atan();
            a.sin() / a.cos()
        };
        for k in 0..LEN {
            assert_abs_diff_eq!(back.c[k], x.c[k], epsilon = 1e-13);
            assert_abs_diff_eq!(root.c[k], x.c[k], epsilon = 1e-13);
            assert_abs_diff_eq!(tan_atan.c[k], x.c[k], epsilon = 1e-13);
        }
    }
}
