//! Blow-up time extrapolation, rate ratios and the backward-cone test.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Rate constant proved for primary blow-up points.
pub const COROLLARY_RATE: f64 = 0.25;
/// Alternative constant, selectable in configuration.
pub const ABSTRACT_RATE: f64 = 0.2;

/// Minimum number of samples accepted by [`estimate_tstar`].
pub const MIN_SAMPLES: usize = 8;

/// Fits `1/s` against `t` by least squares on the last third of the
/// samples and returns the root of the fit with its `R^2`. The root may
/// precede the last sample when the growth is slower than a simple pole.
pub fn estimate_tstar(sup_series: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = sup_series.len();
    if n < MIN_SAMPLES {
        return Err(Error::NoBlowupTrend(format!(
            "{n} samples, need at least {MIN_SAMPLES}"
        )));
    }
    let tail = &sup_series[n - n.div_ceil(3)..];
    if tail
        .iter()
        .any(|&(t, s)| !(s > 0.0) || !s.is_finite() || !t.is_finite())
    {
        return Err(Error::NoBlowupTrend(
            "non-positive or non-finite values on the tail".into(),
        ));
    }
    if tail
        .windows(2)
        .any(|w| !(w[1].1 > w[0].1) || !(w[1].0 > w[0].0))
    {
        return Err(Error::NoBlowupTrend(
            "sup is not strictly increasing on the fitted tail".into(),
        ));
    }
    let m = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / m;
    let my = tail.iter().map(|p| 1.0 / p.1).sum::<f64>() / m;
    let (mut sty, mut stt, mut syy) = (0.0, 0.0, 0.0);
    for &(t, s) in tail {
        let (dt, dy) = (t - mt, 1.0 / s - my);
        sty += dt * dy;
        stt += dt * dt;
        syy += dy * dy;
    }
    let slope = sty / stt;
    if !(slope < 0.0) {
        return Err(Error::NoBlowupTrend(format!(
            "fitted slope of 1/sup is {slope}"
        )));
    }
    let intercept = my - slope * mt;
    let t_star = -intercept / slope;
    let r2 = if syy > 0.0 {
        sty * sty / (stt * syy)
    } else {
        1.0
    };
    Ok((t_star, r2))
}

/// `s (t* - t) / ln|ln(t* - t)|`, defined for `0 < t* - t < 1/e`.
pub fn corollary_ratio(s: f64, t: f64, t_star: f64) -> Result<f64> {
    let gap = t_star - t;
    if !(gap > 0.0 && gap < (-1.0f64).exp()) {
        return Err(Error::Domain(format!(
            "t* - t = {gap} must lie in (0, 1/e)"
        )));
    }
    Ok(s * gap / (-gap.ln()).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupCandidate {
    pub t_star_est: f64,
    pub x_star_est: [f64; 2],
    /// `(t, ratio)` for samples inside the ratio's domain.
    pub ratio_series: Vec<(f64, f64)>,
    pub fit_quality: f64,
}

/// One row of the blow-up report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    pub sup: f64,
    pub ratio: Option<f64>,
    /// `ok`, `below_rate` (ratio under the rate constant) or `n/a`.
    pub flag: &'static str,
}

/// Extrapolates the blow-up time from `(t, sup, location)` samples and
/// evaluates the rate ratio wherever it is defined. Ratios under `rate`
/// are flagged as inconsistent with a true blow-up at the estimated time.
pub fn analyze_blowup(
    samples: &[(f64, f64, [f64; 2])],
    rate: f64,
) -> Result<(BlowupCandidate, Vec<ReportRow>)> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.0, s.1)).collect();
    let (t_star, r2) = estimate_tstar(&pts)?;
    let last = pts[pts.len() - 1].0;
    if !(t_star > last) {
        return Err(Error::NoBlowupTrend(format!(
            "extrapolated time {t_star} precedes the last sample {last}"
        )));
    }
    let mut ratios = Vec::new();
    let rows = samples
        .iter()
        .map(|&(t, s, _)| match corollary_ratio(s, t, t_star) {
            Ok(r) => {
                ratios.push((t, r));
                ReportRow {
                    t,
                    sup: s,
                    ratio: Some(r),
                    flag: if r < rate { "below_rate" } else { "ok" },
                }
            }
            Err(_) => ReportRow {
                t,
                sup: s,
                ratio: None,
                flag: "n/a",
            },
        })
        .collect();
    let x_star = samples.last().map_or([0.0; 2], |s| s.2);
    Ok((
        BlowupCandidate {
            t_star_est: t_star,
            x_star_est: x_star,
            ratio_series: ratios,
            fit_quality: r2,
        },
        rows,
    ))
}

/// Writes `blowup_report.csv` content: `t,sup,t_star_est,ratio,flag`.
pub fn write_blowup_report(path: &Path, t_star: Option<f64>, rows: &[ReportRow]) -> Result<()> {
    let mut s = String::from("t,sup,t_star_est,ratio,flag\n");
    let ts = t_star.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.t, r.sup, ts, ratio, r.flag);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub t: f64,
    pub x: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeLabel {
    Primary,
    Secondary,
}

/// A candidate is primary when no other candidate lies strictly inside
/// its backward cone `|x - x*| < 2 C (t* - t)`.
pub fn classify_primary(candidates: &[ConePoint], max_speed: f64) -> Result<Vec<ConeLabel>> {
    if !(max_speed > 0.0) {
        return Err(Error::Domain(format!(
            "cone speed must be positive, got {max_speed}"
        )));
    }
    Ok(candidates
        .iter()
        .enumerate()
        .map(|(i, apex)| {
            let covered = candidates.iter().enumerate().any(|(j, p)| {
                if i == j {
                    return false;
                }
                let dist = (p.x[0] - apex.x[0]).hypot(p.x[1] - apex.x[1]);
                dist < 2.0 * max_speed * (apex.t - p.t)
            });
            if covered {
                ConeLabel::Secondary
            } else {
                ConeLabel::Primary
            }
        })
        .collect())
}
