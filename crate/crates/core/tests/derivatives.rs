use geodisc::jets::{jet_of_curve, jet_pushforward, SmoothMap};
use geodisc::taylor::{taylor_derivatives, DerivativeBackend, Real, SmoothCurve, MAX_ORDER};
use geodisc::{Result, Vector};

/// Twenty scalar test functions of `t`.
struct Suite(usize);

impl SmoothCurve for Suite {
    fn dim(&self) -> usize {
        1
    }

    fn eval<T: Real>(&self, t: T) -> Result<Vec<T>> {
        let one = T::cst(1.0);
        let x = match self.0 {
            0 => t.sin(),
            1 => t.cos(),
            2 => t.exp(),
            3 => (t * 2.0).exp() * t.sin(),
            4 => (t + 2.0).ln(),
            5 => (t * t + 1.0).sqrt(),
            6 => t.atan(),
            7 => (one + t * t).recip(),
            8 => t.powi(5) - t.powi(3) * 2.0 + t,
            9 => (t * 3.0).sin() * (t * 0.5).cos(),
            10 => (t.sin()).exp(),
            11 => (t * t + 0.5).ln(),
            12 => t / (t * t + 2.0).sqrt(),
            13 => (t * 0.7).cos().powi(3),
            14 => (-(t * t)).exp(),
            15 => (t.exp() + 1.0).ln(),
            16 => (t * 2.0).atan() * t,
            17 => (t + 3.0).sqrt() * (t - 1.0),
            18 => (t.cos() + 2.0).recip(),
            19 => (t * 1.5).sin().exp() - t.powi(2),
            _ => unreachable!(),
        };
        Ok(vec![x])
    }
}

#[test]
fn backends_agree_on_twenty_functions() {
    for i in 0..20 {
        for t0 in [-0.4, 0.3, 0.9] {
            let a = taylor_derivatives(&Suite(i), t0, MAX_ORDER, DerivativeBackend::Taylor).unwrap();
            let b = taylor_derivatives(&Suite(i), t0, MAX_ORDER, DerivativeBackend::FiniteDifference).unwrap();
            for r in 0..=MAX_ORDER {
                let (x, y) = (a[r][0], b[r][0]);
                let rel = (x - y).abs() / x.abs().max(1.0);
                assert!(rel <= 1e-7, "function {i}, t0 {t0}, order {r}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn taylor_backend_matches_hand_derivatives() {
    let t0: f64 = 0.3;
    let d = taylor_derivatives(&Suite(3), t0, 4, DerivativeBackend::Taylor).unwrap();
    // e^{2t} sin t: derivatives are e^{2t} Im((2 + i)^r e^{it}).
    let (mut re, mut im) = (1.0, 0.0);
    for (r, slot) in d.iter().enumerate() {
        let want = (2.0 * t0).exp() * (re * t0.sin() + im * t0.cos());
        assert!((slot[0] - want).abs() <= 1e-12 * want.abs().max(1.0), "order {r}");
        (re, im) = (2.0 * re - im, re + 2.0 * im);
    }
    let d = taylor_derivatives(&Suite(8), t0, 4, DerivativeBackend::Taylor).unwrap();
    let want = [t0.powi(5) - 2.0 * t0.powi(3) + t0, 5.0 * t0.powi(4) - 6.0 * t0 * t0 + 1.0, 20.0 * t0.powi(3) - 12.0 * t0, 60.0 * t0 * t0 - 12.0, 120.0 * t0];
    for r in 0..=4 {
        assert!((d[r][0] - want[r]).abs() <= 1e-12, "order {r}");
    }
}

/// `(x, y) -> (x y, sin x + y^2)`.
struct Twist;

impl SmoothMap for Twist {
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        2
    }
    fn eval<T: Real>(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(vec![x[0] * x[1], x[0].sin() + x[1] * x[1]])
    }
}

struct Curve {
    a: [f64; 3],
    b: [f64; 3],
}

impl SmoothCurve for Curve {
    fn dim(&self) -> usize {
        2
    }
    fn eval<T: Real>(&self, t: T) -> Result<Vec<T>> {
        Ok(vec![(t * self.a[1]).sin() + self.a[0] + t * t * self.a[2], (t * self.b[1]).exp() * self.b[0] + t * self.b[2]])
    }
}

struct Composed<'a>(&'a Curve);

impl SmoothCurve for Composed<'_> {
    fn dim(&self) -> usize {
        2
    }
    fn eval<T: Real>(&self, t: T) -> Result<Vec<T>> {
        Twist.eval(&self.0.eval(t)?)
    }
}

#[test]
fn pushforward_of_curve_jet_is_jet_of_composed_curve() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let mut draw = || [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let curve = Curve { a: draw(), b: draw() };
        for k in 0..=MAX_ORDER {
            let pushed = jet_pushforward(&Twist, &jet_of_curve(&curve, k, DerivativeBackend::Taylor).unwrap()).unwrap();
            let oracle = jet_of_curve(&Composed(&curve), k, DerivativeBackend::FiniteDifference).unwrap();
            for r in 0..=k {
                let gap: Vector = pushed.slot(r) - oracle.slot(r);
                assert!(gap.amax() <= 1e-7 * oracle.slot(r).amax().max(1.0), "k {k}, slot {r}: {gap}");
            }
        }
    }
}
