//! Weighted line functionals of species 1 and 4 and their comparison bounds.

use crate::error::{Error, Result};
use crate::fields::Field;

/// Parameters of the decay estimate for data bounded by `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Params {
    pub kappa: f64,
    pub epsilon: f64,
}

impl Theorem1Params {
    /// `epsilon = e^{-2 kappa} / 2`.
    pub fn new(kappa: f64) -> Result<Self> {
        Self::with_epsilon(kappa, 0.5 * (-2.0 * kappa).exp())
    }

    pub fn with_epsilon(kappa: f64, epsilon: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        if !(epsilon > 0.0)
            || epsilon >= 1.0 / kappa
            || epsilon * (2.0 * kappa).exp() > 0.5 * (1.0 + 1e-15)
        {
            return Err(Error::Domain(format!(
                "epsilon = {epsilon} must satisfy 0 < epsilon < 1/kappa and epsilon e^(2 kappa) <= 1/2"
            )));
        }
        Ok(Self { kappa, epsilon })
    }

    pub fn weight_1(&self, x: f64) -> f64 {
        1.0 - self.epsilon * (2.0 * self.kappa * x).exp()
    }

    pub fn weight_4(&self, x: f64) -> f64 {
        1.0 - self.epsilon * (-2.0 * self.kappa * x).exp()
    }
}

/// Parameters of the logarithmic-growth estimate `w <= theta ln t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem2Params {
    pub theta: f64,
    /// First time with `k(t) = 1/2`.
    pub t0: f64,
    pub a0: f64,
}

impl Theorem2Params {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 0.25) {
            return Err(Error::Domain(format!(
                "theta must lie in (0, 1/4), got {theta}"
            )));
        }
        let t0 = (0.5 / theta).exp();
        let k0 = theta * t0.ln();
        // 8 (1 - 3 theta) with a single rounding
        let linear = (-24.0f64).mul_add(theta, 8.0);
        let a0 = (2.0 * k0 * t0.powf(1.0 - 4.0 * theta)).max(linear);
        Ok(Self { theta, t0, a0 })
    }

    /// Weight exponent `k(t) = theta ln t`.
    pub fn k(&self, t: f64) -> f64 {
        self.theta * t.ln()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= self.t0 * (1.0 - 1e-12)) {
            return Err(Error::Domain(format!("t = {t} precedes t0 = {}", self.t0)));
        }
        Ok(())
    }
}

/// `int_{-1}^{1} [(1 - eps e^{2 kappa x}) w1 + (1 - eps e^{-2 kappa x}) w4] dx`
/// on the grid row nearest `y`.
pub fn q14_thm1(field: &Field, params: &Theorem1Params, y: f64) -> f64 {
    q14_thm1_row(field, params, field.domain().nearest_row(y))
}

fn q14_thm1_row(field: &Field, p: &Theorem1Params, iy: usize) -> f64 {
    field.row_integral(0, iy, -1.0, 1.0, |x| p.weight_1(x))
        + field.row_integral(3, iy, -1.0, 1.0, |x| p.weight_4(x))
}

/// Largest [`q14_thm1`] over grid rows with `|y| <= 1`.
pub fn q14_thm1_sup(field: &Field, params: &Theorem1Params) -> f64 {
    field
        .domain()
        .rows_within(-1.0, 1.0)
        .map(|iy| q14_thm1_row(field, params, iy))
        .fold(0.0, f64::max)
}

/// `z(t) = (1/(4 kappa) + eps^2 t / 2)^{-1}`.
pub fn comparison_ode_thm1(params: &Theorem1Params, t: f64) -> f64 {
    1.0 / (0.25 / params.kappa + 0.5 * params.epsilon * params.epsilon * t)
}

/// Bound on the integral of each species over `[-1, 1]^2`.
pub fn decay_bound_35(params: &Theorem1Params, t: f64) -> f64 {
    4.0 / (0.25 / params.kappa + (-4.0 * params.kappa).exp() * t / 8.0)
}

/// Functional with weights `1 - e^{2k(x-1)}/2` and `1 - e^{-2k(x+1)}/2`,
/// `k = k(t)`, on the grid row nearest `y`. Defined for `t >= t0`.
pub fn q14_thm2(field: &Field, params: &Theorem2Params, t: f64, y: f64) -> Result<f64> {
    params.check_time(t)?;
    Ok(q14_thm2_row(
        field,
        params.k(t),
        field.domain().nearest_row(y),
    ))
}

fn q14_thm2_row(field: &Field, k: f64, iy: usize) -> f64 {
    field.row_integral(0, iy, -1.0, 1.0, |x| {
        1.0 - 0.5 * (2.0 * k * (x - 1.0)).exp()
    }) + field.row_integral(3, iy, -1.0, 1.0, |x| {
        1.0 - 0.5 * (-2.0 * k * (x + 1.0)).exp()
    })
}

pub fn q14_thm2_sup(field: &Field, params: &Theorem2Params, t: f64) -> Result<f64> {
    params.check_time(t)?;
    let k = params.k(t);
    Ok(field
        .domain()
        .rows_within(-1.0, 1.0)
        .map(|iy| q14_thm2_row(field, k, iy))
        .fold(0.0, f64::max))
}

/// `A0 t^{4 theta - 1}`.
pub fn comparison_thm2(params: &Theorem2Params, t: f64) -> f64 {
    params.a0 * t.powf(4.0 * params.theta - 1.0)
}

/// Bound on the integral of any species along a line through the square.
pub fn line_bound_49(params: &Theorem2Params, t: f64) -> f64 {
    2.0 * comparison_thm2(params, t)
}

/// Largest violation `-h_k(s)` of `h_k(s) = 1 - e^{2ks} + s e^{2ks} >= 0`
/// over `samples` equispaced points of `[-2, 0]`.
pub fn weight_inequality_check(k: f64, samples: usize) -> Result<f64> {
    if !(k >= 0.5) {
        return Err(Error::Domain(format!(
            "weight exponent k = {k} must be at least 1/2"
        )));
    }
    if samples < 2 {
        return Err(Error::Domain(format!(
            "need at least two samples, got {samples}"
        )));
    }
    let h = |s: f64| {
        let e = (2.0 * k * s).exp();
        1.0 - e + s * e
    };
    Ok((0..samples)
        .map(|j| -h(-2.0 + 2.0 * j as f64 / (samples - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Integral of the total density over `[-1, 1]^2`.
pub fn mass(field: &Field) -> f64 {
    (0..field.nspecies())
        .map(|s| field.square_integral(s, -1.0, 1.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Domain};
    use proptest::prelude::*;

    fn grid(n: usize) -> Domain {
        Domain::square(1.0, n, Boundary::Outflow).unwrap()
    }

    #[test]
    fn thm1_weight_integral() {
        let p = Theorem1Params::new(1.0).unwrap();
        let f = Field::from_fn(grid(4000), 4, |s, _, _| if s == 0 { 1.0 } else { 0.0 });
        // int (1 - eps e^{2x}) dx = 2 - eps (e^2 - e^-2) / 2
        let want = 2.0 - p.epsilon * (1f64.exp().powi(2) - (-2f64).exp()) / 2.0;
        assert!((q14_thm1(&f, &p, 0.3) - want).abs() < 1e-6);
        assert!((want - 1.754_578_9).abs() < 1e-6);
    }

    #[test]
    fn thm1_weights_in_range() {
        for kappa in [0.01, 0.5, 1.0, 3.0, 10.0] {
            let p = Theorem1Params::new(kappa).unwrap();
            for j in 0..=200 {
                let x = -1.0 + j as f64 / 100.0;
                for w in [p.weight_1(x), p.weight_4(x)] {
                    assert!((0.5 - 1e-15..=1.0).contains(&w), "{kappa} {x} {w}");
                }
            }
        }
        assert!(Theorem1Params::with_epsilon(1.0, 0.5).is_err());
        assert!(Theorem1Params::new(0.0).is_err());
    }

    #[test]
    fn sup_over_lines_matches_scan() {
        let p = Theorem1Params::new(1.0).unwrap();
        let f = Field::random_smoothed(
            Domain::square(3.0, 96, Boundary::Outflow).unwrap(),
            4,
            1.0,
            3,
            1,
        );
        let d = *f.domain();
        let mut best = 0.0f64;
        for iy in 0..d.ny {
            if d.y(iy).abs() <= 1.0 {
                let mut v = 0.0;
                for ix in 0..d.nx {
                    let x = d.x(ix);
                    let lo = (x - 0.5 * d.hx()).max(-1.0);
                    let hi = (x + 0.5 * d.hx()).min(1.0);
                    if hi > lo {
                        let m = 0.5 * (lo + hi);
                        v += (hi - lo)
                            * (p.weight_1(m) * f.get(0, ix, iy) + p.weight_4(m) * f.get(3, ix, iy));
                    }
                }
                best = best.max(v);
            }
        }
        assert!((q14_thm1_sup(&f, &p) - best).abs() < 1e-12);
        assert!(q14_thm1_sup(&f, &p) <= 2.0 * 2.0);
    }

    #[test]
    fn comparison_values() {
        let p = Theorem1Params::new(1.0).unwrap();
        assert_eq!(comparison_ode_thm1(&p, 0.0), 4.0);
        let t = 2.0 / (p.epsilon * p.epsilon);
        assert!((comparison_ode_thm1(&p, t) - 0.8).abs() < 1e-12);
        assert!((decay_bound_35(&p, 0.0) - 16.0).abs() < 1e-12);
        assert!(decay_bound_35(&p, 5.0) < decay_bound_35(&p, 1.0));
    }

    #[test]
    fn thm2_constants() {
        let p = Theorem2Params::new(0.2).unwrap();
        assert!((p.t0 - 12.182_494).abs() < 1e-6);
        assert!((p.k(p.t0) - 0.5).abs() < 1e-15);
        // 3.2 up to the representation error of theta = 0.2
        assert!((p.a0 - 3.2).abs() <= 3.2 * f64::EPSILON);
        let z0 = comparison_thm2(&p, p.t0);
        assert!((z0 - 3.2 * (-0.5f64).exp()).abs() < 1e-12);
        assert_eq!(line_bound_49(&p, p.t0), 2.0 * z0);
        assert!(Theorem2Params::new(0.25).is_err());
        assert!(Theorem2Params::new(0.0).is_err());
    }

    #[test]
    fn thm2_functional() {
        let p = Theorem2Params::new(0.2).unwrap();
        let f = Field::from_fn(grid(4000), 4, |s, _, _| if s == 0 { 1.0 } else { 0.0 });
        let t = 20.0;
        let k = p.k(t);
        let want = 2.0 - (1.0 - (-4.0 * k).exp()) / (4.0 * k);
        assert!((q14_thm2(&f, &p, t, 0.0).unwrap() - want).abs() < 1e-6);
        assert!(q14_thm2(&f, &p, 5.0, 0.0).is_err());
        assert_eq!(q14_thm2_sup(&Field::zeros(grid(8), 4), &p, t).unwrap(), 0.0);
    }

    #[test]
    fn weight_inequality() {
        assert!(weight_inequality_check(0.4, 10).is_err());
        let h = 1.0 - 3.0 * (-2.0f64).exp();
        assert!((h - 0.593_994).abs() < 1e-6);
        for k in [0.5, 0.7, 1.0, 2.0, 5.0] {
            assert!(weight_inequality_check(k, 10_000).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn mass_of_ones() {
        let f = Field::uniform(
            Domain::square(3.0, 64, Boundary::Outflow).unwrap(),
            &[1.0; 4],
        );
        assert!((mass(&f) - 16.0).abs() < 1e-10);
        assert_eq!(mass(&Field::zeros(grid(8), 4)), 0.0);
    }

    proptest! {
        #[test]
        fn weight_inequality_random_k(k in 0.5f64..20.0) {
            prop_assert!(weight_inequality_check(k, 2001).unwrap() <= 1e-12);
        }
    }
}
