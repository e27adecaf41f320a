//! Packet initial data and centroid tracking for packet-interaction runs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{Domain, Field};
use crate::functionals::FunctionalSeries;
use crate::solver::Probe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PacketShape {
    Box,
    #[default]
    SmoothBump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    /// 1-based species index.
    pub species: usize,
    pub center: [f64; 2],
    pub widths: [f64; 2],
    pub amplitude: f64,
    pub shape: PacketShape,
}

impl PacketSpec {
    pub fn new(
        species: usize,
        center: [f64; 2],
        widths: [f64; 2],
        amplitude: f64,
        shape: PacketShape,
    ) -> Result<Self> {
        let p = Self {
            species,
            center,
            widths,
            amplitude,
            shape,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.species) {
            return Err(Error::Domain(format!(
                "packet species must be 1..4, got {}",
                self.species
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Domain(format!(
                "packet amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.widths[0] > 0.0 && self.widths[1] > 0.0) {
            return Err(Error::Domain(format!(
                "packet widths must be positive, got {:?}",
                self.widths
            )));
        }
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return Err(Error::Domain(format!(
                "packet center must be finite, got {:?}",
                self.center
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let dx = (x - self.center[0]) / self.widths[0];
        let dy = (y - self.center[1]) / self.widths[1];
        match self.shape {
            PacketShape::Box => {
                if dx.abs() <= 1.0 && dy.abs() <= 1.0 {
                    self.amplitude
                } else {
                    0.0
                }
            }
            PacketShape::SmoothBump => {
                let r = (1.0 - dx * dx - dy * dy).max(0.0);
                self.amplitude * r * r
            }
        }
    }

    /// Packet lies within `[-h, h]^2`.
    fn inside(&self, h: f64) -> bool {
        (0..2)
            .all(|a| self.center[a] - self.widths[a] >= -h && self.center[a] + self.widths[a] <= h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub packets: Vec<PacketSpec>,
    /// Half width `q` of the inner square; packets entering it become old.
    pub inner_square_halfwidth: f64,
    pub background: f64,
}

/// Default packet amplitude and width.
pub const FIG3_AMPLITUDE: f64 = 4.0;
pub const FIG3_WIDTH: f64 = 0.1;

impl Default for ScenarioConfig {
    /// A 1-packet at `(-0.8, -0.8)` and a 3-packet at `(0, 0)` meet at
    /// `(-0.4, -0.4)` at `t = 0.4`; the 4-particles produced there meet a
    /// 2-packet started at `(-0.88, 0.08)` at `(-0.44, -0.36)`, `t = 0.44`.
    fn default() -> Self {
        let w = [FIG3_WIDTH; 2];
        let p = |species, center| PacketSpec {
            species,
            center,
            widths: w,
            amplitude: FIG3_AMPLITUDE,
            shape: PacketShape::SmoothBump,
        };
        Self {
            packets: vec![p(1, [-0.8, -0.8]), p(3, [0.0, 0.0]), p(2, [-0.88, 0.08])],
            inner_square_halfwidth: 0.5,
            background: 0.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_square_halfwidth > 0.0 && self.inner_square_halfwidth < 1.0) {
            return Err(Error::Domain(format!(
                "inner square half width must lie in (0, 1), got {}",
                self.inner_square_halfwidth
            )));
        }
        if !(self.background >= 0.0) {
            return Err(Error::Domain(format!(
                "background must be non-negative, got {}",
                self.background
            )));
        }
        self.packets.iter().try_for_each(PacketSpec::validate)
    }
}

/// Superposition of packets on a uniform background, sampled at cell centres.
pub fn make_packet_field(domain: Domain, specs: &[PacketSpec], background: f64) -> Result<Field> {
    for p in specs {
        p.validate()?;
    }
    Ok(Field::from_fn(domain, 4, |s, x, y| {
        background
            + specs
                .iter()
                .filter(|p| p.species == s + 1)
                .map(|p| p.value(x, y))
                .sum::<f64>()
    }))
}

/// Builds the packet arrangement of `cfg` on `domain`. The second value
/// lists packets not contained in the square `[-1, 1]^2`.
pub fn scenario_fig3(cfg: &ScenarioConfig, domain: Domain) -> Result<(Field, Vec<String>)> {
    cfg.validate()?;
    let warnings = cfg
        .packets
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.inside(1.0))
        .map(|(i, p)| {
            format!(
                "packet {} (species {}) at {:?} extends outside [-1, 1]^2",
                i + 1,
                p.species,
                p.center
            )
        })
        .collect();
    Ok((
        make_packet_field(domain, &cfg.packets, cfg.background)?,
        warnings,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub cx: f64,
    pub cy: f64,
    pub mass: f64,
}

/// Smallest species mass for which a centroid is reported.
pub const CENTROID_MIN_MASS: f64 = 1e-12;

/// Mass-weighted mean position of each species.
pub fn centroids(field: &Field) -> Vec<Option<Centroid>> {
    let d = *field.domain();
    (0..field.nspecies())
        .map(|s| {
            let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
            for iy in 0..d.ny {
                let y = d.y(iy);
                for ix in 0..d.nx {
                    let v = field.get(s, ix, iy);
                    m += v;
                    mx += v * d.x(ix);
                    my += v * y;
                }
            }
            let mass = m * d.cell_area();
            (mass > CENTROID_MIN_MASS).then(|| Centroid {
                cx: mx / m,
                cy: my / m,
                mass,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgeFlag {
    Young,
    Old,
}

impl AgeFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            AgeFlag::Young => "young",
            AgeFlag::Old => "old",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentroidRecord {
    pub time: f64,
    /// 1-based species index.
    pub species: usize,
    pub centroid: Centroid,
    pub age: AgeFlag,
}

/// Interaction detected at a sampled time: the largest product of a
/// colliding pair exceeded the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionEvent {
    pub time: f64,
    /// `"13"` or `"24"`.
    pub pair: &'static str,
    pub max_product: f64,
    pub location: [f64; 2],
}

/// Products above this fraction of `sup^2` count as an interaction.
pub const INTERACTION_THRESHOLD: f64 = 1e-3;

/// Records per-species centroids, young/old flags and interaction events
/// at every sampled time.
#[derive(Debug, Clone)]
pub struct CentroidTracker {
    inner: f64,
    old: [bool; 4],
    pub records: Vec<CentroidRecord>,
    pub events: Vec<InteractionEvent>,
}

impl CentroidTracker {
    pub fn new(inner_square_halfwidth: f64) -> Self {
        Self {
            inner: inner_square_halfwidth,
            old: [false; 4],
            records: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn observe(&mut self, field: &Field) {
        let t = field.time;
        for (s, c) in centroids(field).into_iter().enumerate().take(4) {
            let Some(c) = c else { continue };
            if c.cx.abs() <= self.inner && c.cy.abs() <= self.inner {
                self.old[s] = true;
            }
            self.records.push(CentroidRecord {
                time: t,
                species: s + 1,
                centroid: c,
                age: if self.old[s] {
                    AgeFlag::Old
                } else {
                    AgeFlag::Young
                },
            });
        }
        let sup = field.sup_norm().value;
        if sup > 0.0 && field.nspecies() == 4 {
            let d = *field.domain();
            for (pair, a, b) in [("13", 0, 2), ("24", 1, 3)] {
                let mut best = (0.0, [0.0; 2]);
                for iy in 0..d.ny {
                    for ix in 0..d.nx {
                        let p = field.get(a, ix, iy) * field.get(b, ix, iy);
                        if p > best.0 {
                            best = (p, [d.x(ix), d.y(iy)]);
                        }
                    }
                }
                if best.0 > INTERACTION_THRESHOLD * sup * sup {
                    self.events.push(InteractionEvent {
                        time: t,
                        pair,
                        max_product: best.0,
                        location: best.1,
                    });
                }
            }
        }
    }

    /// Centroid series of one species, `(time, centroid)`.
    pub fn series(&self, species: usize) -> Vec<(f64, Centroid)> {
        self.records
            .iter()
            .filter(|r| r.species == species)
            .map(|r| (r.time, r.centroid))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,species,cx,cy,mass,age_flag\n");
        for r in &self.records {
            let c = r.centroid;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.time,
                r.species,
                c.cx,
                c.cy,
                c.mass,
                r.age.as_str()
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

impl Probe for CentroidTracker {
    fn sample(&mut self, field: &Field, _: &mut FunctionalSeries) -> Result<()> {
        self.observe(field);
        Ok(())
    }
}

/// Centroid records of a sequence of snapshots.
pub fn track_centroids(snapshots: &[Field], inner_square_halfwidth: f64) -> Vec<CentroidRecord> {
    let mut t = CentroidTracker::new(inner_square_halfwidth);
    for f in snapshots {
        t.observe(f);
    }
    t.records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;

    fn dom() -> Domain {
        Domain::square(1.0, 200, Boundary::Periodic).unwrap()
    }

    #[test]
    fn empty_is_zero() {
        let f = make_packet_field(dom(), &[], 0.0).unwrap();
        assert!(f.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn box_mass() {
        let p = PacketSpec::new(2, [0.1, -0.2], [0.25, 0.15], 3.0, PacketShape::Box).unwrap();
        let f = make_packet_field(dom(), &[p], 0.0).unwrap();
        let want = 4.0 * 0.25 * 0.15 * 3.0;
        // one cell row or column of error
        let h = f.domain().hx();
        assert!((f.total(1) - want).abs() <= 3.0 * 2.0 * (0.5 + 0.3) * h);
        assert_eq!(f.total(0), 0.0);
    }

    #[test]
    fn superposition_is_linear() {
        let a = PacketSpec::new(1, [-0.5, 0.0], [0.1, 0.1], 2.0, PacketShape::SmoothBump).unwrap();
        let b = PacketSpec::new(1, [0.5, 0.0], [0.1, 0.1], 1.0, PacketShape::SmoothBump).unwrap();
        let both = make_packet_field(dom(), &[a, b], 0.0).unwrap();
        let fa = make_packet_field(dom(), &[a], 0.0).unwrap();
        let fb = make_packet_field(dom(), &[b], 0.0).unwrap();
        for ((x, y), z) in fa.data().iter().zip(fb.data()).zip(both.data()) {
            assert_eq!(x + y, *z);
        }
    }

    #[test]
    fn invalid_packets() {
        assert!(PacketSpec::new(0, [0.0; 2], [0.1; 2], 1.0, PacketShape::Box).is_err());
        assert!(PacketSpec::new(1, [0.0; 2], [0.0, 0.1], 1.0, PacketShape::Box).is_err());
        assert!(PacketSpec::new(1, [0.0; 2], [0.1; 2], -1.0, PacketShape::Box).is_err());
    }

    #[test]
    fn default_arrangement_meets() {
        let cfg = ScenarioConfig::default();
        let p1 = cfg.packets[0].center;
        let p3 = cfg.packets[1].center;
        let t = 0.4;
        assert!(((p1[0] + t) - (p3[0] - t)).abs() < 1e-15);
        assert!(((p1[1] + t) - (-0.4f64)).abs() < 1e-15);
        let (f, warn) = scenario_fig3(&cfg, dom()).unwrap();
        assert!(warn.is_empty());
        assert_eq!(f.total(3), 0.0);
    }

    #[test]
    fn outside_packet_warns() {
        let mut cfg = ScenarioConfig::default();
        cfg.packets[0].center = [-0.95, 0.0];
        let (_, warn) =
            scenario_fig3(&cfg, Domain::square(2.0, 64, Boundary::Periodic).unwrap()).unwrap();
        assert_eq!(warn.len(), 1);
    }

    #[test]
    fn zero_amplitudes_give_zero() {
        let mut cfg = ScenarioConfig::default();
        cfg.packets.iter_mut().for_each(|p| p.amplitude = 0.0);
        let (f, _) = scenario_fig3(&cfg, dom()).unwrap();
        assert!(f.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centroid_of_symmetric_data() {
        let p = PacketSpec::new(1, [0.3, -0.4], [0.1, 0.2], 1.0, PacketShape::SmoothBump).unwrap();
        let f = make_packet_field(dom(), &[p], 0.0).unwrap();
        let c = centroids(&f)[0].unwrap();
        let h = f.domain().hx();
        assert!((c.cx - 0.3).abs() < h && (c.cy + 0.4).abs() < h);
        assert!(centroids(&f)[1].is_none());

        let a = PacketSpec::new(2, [-0.5, 0.1], [0.1; 2], 1.0, PacketShape::SmoothBump).unwrap();
        let b = PacketSpec {
            center: [0.5, 0.3],
            ..a
        };
        let g = make_packet_field(dom(), &[a, b], 0.0).unwrap();
        let c = centroids(&g)[1].unwrap();
        assert!(c.cx.abs() < 1e-10 && (c.cy - 0.2).abs() < 1e-10);
    }

    #[test]
    fn age_flag_is_sticky() {
        let mut tr = CentroidTracker::new(0.5);
        let mut f = make_packet_field(
            dom(),
            &[PacketSpec::new(1, [-0.8, -0.8], [0.1; 2], 1.0, PacketShape::SmoothBump).unwrap()],
            0.0,
        )
        .unwrap();
        tr.observe(&f);
        f = make_packet_field(
            dom(),
            &[PacketSpec::new(1, [0.0, 0.0], [0.1; 2], 1.0, PacketShape::SmoothBump).unwrap()],
            0.0,
        )
        .unwrap();
        f.time = 1.0;
        tr.observe(&f);
        f = make_packet_field(
            dom(),
            &[PacketSpec::new(1, [0.8, 0.8], [0.1; 2], 1.0, PacketShape::SmoothBump).unwrap()],
            0.0,
        )
        .unwrap();
        f.time = 2.0;
        tr.observe(&f);
        let ages: Vec<_> = tr.records.iter().map(|r| r.age).collect();
        assert_eq!(ages, vec![AgeFlag::Young, AgeFlag::Old, AgeFlag::Old]);
        assert!(tr
            .to_csv()
            .starts_with("time,species,cx,cy,mass,age_flag\n0,1,"));
    }

    #[test]
    fn interaction_event_on_overlap() {
        let a = PacketSpec::new(1, [0.0, 0.0], [0.1; 2], 1.0, PacketShape::SmoothBump).unwrap();
        let b = PacketSpec { species: 3, ..a };
        let mut tr = CentroidTracker::new(0.5);
        tr.observe(&make_packet_field(dom(), &[a, b], 0.0).unwrap());
        assert_eq!(tr.events.len(), 1);
        assert_eq!(tr.events[0].pair, "13");
    }
}
