//! Time integrators for the physical and rescaled systems.

mod advect;
mod collision;
mod physical;
mod picard;
mod rescaled;

pub use collision::{exact_pair_exchange, CollisionIntegrator};
pub use physical::{run_physical, step_physical, DtMode, PhysicalStepConfig};
pub use picard::{picard_solve, PicardConfig, PicardSolution};
pub use rescaled::{characteristic_foot, run_rescaled, step_rescaled, RescaledStepConfig};

use crate::error::Result;
use crate::fields::Field;
use crate::functionals::FunctionalSeries;

/// Smallest step a run will take before giving up.
pub const DT_UNDERFLOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Diverged,
    DtUnderflow,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Completed => "Completed",
            RunStatus::Diverged => "Diverged",
            RunStatus::DtUnderflow => "DtUnderflow",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: Field,
    pub series: FunctionalSeries,
    pub status: RunStatus,
    pub steps: usize,
    /// Sup-norm change over the last step of a rescaled run.
    pub final_residual: Option<f64>,
}

/// Residual above which a finished rescaled run is tagged nonstationary.
pub const STATIONARY_RESIDUAL: f64 = 1e-6;

impl RunOutput {
    pub fn is_nonstationary(&self) -> bool {
        self.status == RunStatus::Completed
            && self.final_residual.is_some_and(|r| r > STATIONARY_RESIDUAL)
    }
}

/// Something evaluated on the solution at every output time.
pub trait Probe {
    fn sample(&mut self, field: &Field, series: &mut FunctionalSeries) -> Result<()>;
}

impl<F: FnMut(&Field, &mut FunctionalSeries) -> Result<()>> Probe for F {
    fn sample(&mut self, field: &Field, series: &mut FunctionalSeries) -> Result<()> {
        self(field, series)
    }
}

/// Output cadence plus the probes to run at each output time.
pub struct Monitors<'a> {
    every_t: f64,
    probes: Vec<Box<dyn Probe + 'a>>,
}

impl<'a> Monitors<'a> {
    pub fn new(every_t: f64) -> Self {
        Self {
            every_t,
            probes: Vec::new(),
        }
    }

    pub fn with(mut self, probe: impl Probe + 'a) -> Self {
        self.probes.push(Box::new(probe));
        self
    }

    pub fn push(&mut self, probe: impl Probe + 'a) {
        self.probes.push(Box::new(probe));
    }

    pub fn every_t(&self) -> f64 {
        self.every_t
    }

    fn sample(&mut self, field: &Field, series: &mut FunctionalSeries) -> Result<()> {
        for p in &mut self.probes {
            p.sample(field, series)?;
        }
        Ok(())
    }
}

/// Tracks when the next output is due.
struct Cadence {
    start: f64,
    every: f64,
    next: usize,
    last_sampled: Option<f64>,
}

impl Cadence {
    fn new(start: f64, every: f64) -> Self {
        Self {
            start,
            every,
            next: 1,
            last_sampled: None,
        }
    }

    fn next_time(&self) -> f64 {
        if self.every > 0.0 {
            self.start + self.next as f64 * self.every
        } else {
            f64::INFINITY
        }
    }

    fn due(&self, t: f64) -> bool {
        t >= self.next_time() - 1e-9 * self.every.max(1e-300)
    }

    /// Replaces a time within rounding distance of an output time or
    /// `t_end` by that exact value.
    fn snap(&self, t: f64, t_end: f64) -> f64 {
        let tol = 1e-9 * self.every.max(t_end.abs()).max(1e-300);
        let next = self.next_time();
        if (t - next).abs() <= tol {
            next
        } else if (t - t_end).abs() <= tol {
            t_end
        } else {
            t
        }
    }

    fn mark(&mut self, t: f64) {
        self.last_sampled = Some(t);
        while self.due(t) {
            self.next += 1;
        }
    }
}
