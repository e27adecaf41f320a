//! Change of variables anchored at a candidate blow-up point `(t*, x*)`:
//! `tau = -ln(t* - t)`, `eta = (x - x*) / (t* - t)`, `w = (t* - t) u`.

use super::{Domain, Field};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTransform {
    t_star: f64,
    x_star: [f64; 2],
}

impl FrameTransform {
    pub fn new(t_star: f64, x_star: [f64; 2]) -> Result<Self> {
        if !(t_star > 0.0 && t_star.is_finite()) {
            return Err(Error::InvalidFrame(format!(
                "t* must be positive, got {t_star}"
            )));
        }
        if !x_star.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidFrame("x* must be finite".into()));
        }
        Ok(Self { t_star, x_star })
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn x_star(&self) -> [f64; 2] {
        self.x_star
    }

    pub fn tau(&self, t: f64) -> Result<f64> {
        Ok(-self.remaining(t)?.ln())
    }

    /// Physical time corresponding to rescaled time `tau`.
    pub fn time(&self, tau: f64) -> f64 {
        self.t_star - (-tau).exp()
    }

    pub fn eta(&self, x: [f64; 2], t: f64) -> Result<[f64; 2]> {
        let d = self.remaining(t)?;
        Ok([(x[0] - self.x_star[0]) / d, (x[1] - self.x_star[1]) / d])
    }

    fn remaining(&self, t: f64) -> Result<f64> {
        let d = self.t_star - t;
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::InvalidFrame(format!(
                "time {t} is not before t* = {}",
                self.t_star
            )))
        }
    }
}

/// Samples the rescaled field `w` on `target` (coordinates are `eta`).
pub fn to_rescaled(u: &Field, frame: &FrameTransform, target: Domain) -> Result<Field> {
    let d = frame.remaining(u.time)?;
    let xs = frame.x_star;
    let mut w = Field::from_fn(target, u.nspecies(), |s, ex, ey| {
        d * u.interpolate(s, [xs[0] + d * ex, xs[1] + d * ey])
    });
    w.time = -d.ln();
    Ok(w)
}

/// Samples the physical field `u` on `target` from a rescaled field whose
/// `time` is the rescaled time `tau`.
pub fn from_rescaled(w: &Field, frame: &FrameTransform, target: Domain) -> Result<Field> {
    if !w.time.is_finite() {
        return Err(Error::InvalidFrame(format!(
            "rescaled time {} is not finite",
            w.time
        )));
    }
    let d = (-w.time).exp();
    if d <= 0.0 {
        return Err(Error::InvalidFrame(format!(
            "rescaled time {} is too large",
            w.time
        )));
    }
    let xs = frame.x_star;
    let mut u = Field::from_fn(target, w.nspecies(), |s, x, y| {
        w.interpolate(s, [(x - xs[0]) / d, (y - xs[1]) / d]) / d
    });
    u.time = frame.t_star - d;
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;

    fn physical() -> Domain {
        Domain::square(1.0, 40, Boundary::Outflow).unwrap()
    }

    #[test]
    fn rejects_bad_frames() {
        assert!(FrameTransform::new(0.0, [0.0, 0.0]).is_err());
        let f = FrameTransform::new(1.0, [0.0, 0.0]).unwrap();
        let mut u = Field::zeros(physical(), 4);
        u.time = 1.0;
        assert!(matches!(
            to_rescaled(&u, &f, physical()),
            Err(Error::InvalidFrame(_))
        ));
    }

    #[test]
    fn zero_and_constant_data() {
        let f = FrameTransform::new(1.0, [0.0, 0.0]).unwrap();
        let mut u = Field::zeros(physical(), 4);
        u.time = 0.9;
        let w = to_rescaled(&u, &f, physical()).unwrap();
        assert!(w.data().iter().all(|&v| v == 0.0));
        assert!((w.time - (-(0.1f64).ln())).abs() < 1e-12);

        let mut u = Field::uniform(physical(), &[1.0; 4]);
        u.time = 0.9;
        let w = to_rescaled(&u, &f, Domain::square(3.0, 16, Boundary::Outflow).unwrap()).unwrap();
        // eta in [-3, 3] maps to x in [-0.3, 0.3], inside the data
        assert!(w.data().iter().all(|&v| (v - 0.1).abs() < 1e-12));
        assert!((w.time - std::f64::consts::LN_10).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_constant() {
        let f = FrameTransform::new(1.0, [0.0, 0.0]).unwrap();
        let mut w = Field::uniform(
            Domain::square(3.0, 16, Boundary::Outflow).unwrap(),
            &[0.1; 4],
        );
        w.time = -(0.1f64).ln();
        let u = from_rescaled(&w, &f, Domain::square(0.25, 8, Boundary::Outflow).unwrap()).unwrap();
        assert!(u.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!((u.time - 0.9).abs() < 1e-12);
    }

    #[test]
    fn round_trip_on_aligned_nodes() {
        // t* - t = 0.5: eta spacing 0.1 on [-2, 2] maps onto x spacing 0.05 on [-1, 1]
        let f = FrameTransform::new(1.0, [0.0, 0.0]).unwrap();
        let mut u = Field::from_fn(physical(), 4, |s, x, y| {
            1.0 + s as f64 + x * y + (3.0 * x).sin().powi(2)
        });
        u.time = 0.5;
        let eta_dom = Domain::square(2.0, 40, Boundary::Outflow).unwrap();
        let w = to_rescaled(&u, &f, eta_dom).unwrap();
        let back = from_rescaled(&w, &f, physical()).unwrap();
        for (a, b) in back.data().iter().zip(u.data()) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
        assert!((back.time - 0.5).abs() < 1e-15);
    }
}
