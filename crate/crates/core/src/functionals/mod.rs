//! Monitored quantities: weighted line functionals, line integrals, mass,
//! and the closed-form comparison bounds they are checked against.

mod lines;
mod lyapunov;
mod monitor;

pub use lines::{
    line_max, moving_line_monitor, moving_line_value, LinePair, MovingLineSeries,
    MOVING_LINE_OFFSETS,
};
pub use lyapunov::{
    comparison_ode_thm1, comparison_thm2, decay_bound_35, line_bound_49, mass, q14_thm1,
    q14_thm1_sup, q14_thm2, q14_thm2_sup, weight_inequality_check, Theorem1Params, Theorem2Params,
};
pub use monitor::{
    bound_holds, check_series, CheckReport, MonitorKind, PhysicalProbe, RescaledProbe,
    BOUND_ABS_FLOOR, BOUND_SLACK, MONOTONE_TOL,
};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub time: f64,
    pub name: String,
    pub value: f64,
    pub bound: Option<f64>,
    pub line_coord: Option<f64>,
}

/// Timestamped records of named quantities. Times are strictly increasing
/// within each name; different names interleave freely.
#[derive(Debug, Clone, Default)]
pub struct FunctionalSeries {
    records: Vec<Record>,
    last: HashMap<String, f64>,
}

impl FunctionalSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        time: f64,
        name: &str,
        value: f64,
        bound: Option<f64>,
        line_coord: Option<f64>,
    ) -> Result<()> {
        if let Some(&prev) = self.last.get(name) {
            if !(time > prev) {
                return Err(Error::NonMonotoneSeries {
                    name: name.to_string(),
                    time,
                });
            }
        }
        self.last.insert(name.to_string(), time);
        self.records.push(Record {
            time,
            name: name.to_string(),
            value,
            bound,
            line_coord,
        });
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Record> + 'a {
        self.records.iter().filter(move |r| r.name == name)
    }

    pub fn values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = f64> + 'a {
        self.of(name).map(|r| r.value)
    }

    /// `(time, value)` pairs of one quantity.
    pub fn points(&self, name: &str) -> Vec<(f64, f64)> {
        self.of(name).map(|r| (r.time, r.value)).collect()
    }

    /// Distinct names in order of first appearance.
    pub fn names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.name.as_str()) {
                out.push(&r.name);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,name,value,bound,line_coord\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.time,
                r.name,
                r.value,
                opt(r.bound),
                opt(r.line_coord)
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_strictly_increase_per_name() {
        let mut s = FunctionalSeries::new();
        s.push(0.0, "a", 1.0, None, None).unwrap();
        s.push(0.0, "b", 1.0, None, None).unwrap();
        s.push(0.5, "a", 2.0, Some(3.0), None).unwrap();
        assert!(s.push(0.5, "a", 2.0, None, None).is_err());
        assert!(s.push(0.2, "a", 2.0, None, None).is_err());
        assert!(s.push(f64::NAN, "b", 2.0, None, None).is_err());
        assert_eq!(s.points("a"), vec![(0.0, 1.0), (0.5, 2.0)]);
        assert_eq!(s.names(), vec!["a", "b"]);
    }

    #[test]
    fn csv_layout() {
        let mut s = FunctionalSeries::new();
        s.push(0.25, "q", 1.5, Some(2.0), None).unwrap();
        s.push(0.25, "m", 0.0, None, Some(-1.0)).unwrap();
        assert_eq!(
            s.to_csv(),
            "time,name,value,bound,line_coord\n0.25,q,1.5,2,\n0.25,m,0,,-1\n"
        );
    }
}
