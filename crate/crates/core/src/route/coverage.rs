//! Intra-ROI coverage: a rim pass around the circle, then a zigzag over
//! parallel chords that split the diameter into equal pieces.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::tsp::TourSolution;
use crate::error::{Error, Result};
use crate::geo::{dist, Circle, LocalPoint};
use crate::survey::Roi;

pub const DEFAULT_LANES: usize = 8;

/// Waypoints covering one ROI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiCoverage {
    pub roi_id: usize,
    pub waypoints: Vec<LocalPoint>,
    pub lanes: usize,
    pub lane_spacing: f64,
    /// Fewer than two lanes: both chords are tangent points.
    pub degenerate: bool,
}

impl RoiCoverage {
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| dist(w[0], w[1])).sum()
    }
}

/// Coverage blocks indexed like the ROI list they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePlan {
    pub per_roi: Vec<RoiCoverage>,
    pub lanes: usize,
}

/// Covers `roi` with `lanes + 1` chords spaced `2R / lanes` apart.
///
/// Chords are perpendicular to the entry-to-center direction, so the first
/// chord is the tangent point nearest `entry`. The path starts there, loops
/// once around the rim and then sweeps the chords in alternating directions.
pub fn circle_coverage(roi: &Roi, lanes: usize, entry: LocalPoint) -> Result<RoiCoverage> {
    let mut cov = cover_circle(&roi.circle, lanes, entry)?;
    cov.roi_id = roi.cluster_id;
    Ok(cov)
}

pub fn cover_circle(circle: &Circle, lanes: usize, entry: LocalPoint) -> Result<RoiCoverage> {
    let r = circle.radius;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("coverage radius must be > 0, got {r}")));
    }
    if lanes == 0 {
        return Err(Error::domain("coverage needs at least one lane"));
    }
    let c = circle.center;
    let to_center = c - entry;
    let u = if to_center.norm() > 1e-9 * (1.0 + r) {
        to_center * (1.0 / to_center.norm())
    } else {
        LocalPoint::new(1.0, 0.0)
    };
    let v = u.perp();
    let degenerate = lanes < 2;
    if degenerate {
        log::warn!("coverage with {lanes} lane(s) degenerates to tangent points");
    }

    let first = c + u * (-r);
    let mut waypoints = vec![first];

    // Rim pass, counter-clockwise from the first tangent point.
    let rim_segments = (4 * lanes).max(16);
    let theta0 = (-u.north).atan2(-u.east);
    for k in 1..rim_segments {
        let a = theta0 + TAU * k as f64 / rim_segments as f64;
        waypoints.push(c + LocalPoint::new(a.cos(), a.sin()) * r);
    }
    waypoints.push(first);

    for i in 1..=lanes {
        let d = r * (-1.0 + 2.0 * i as f64 / lanes as f64);
        let h = (r * r - d * d).max(0.0).sqrt();
        let mid = c + u * d;
        if h == 0.0 {
            waypoints.push(mid);
            continue;
        }
        let (a, b) = (mid + v * (-h), mid + v * h);
        if i % 2 == 1 {
            waypoints.extend([a, b]);
        } else {
            waypoints.extend([b, a]);
        }
    }

    Ok(RoiCoverage { roi_id: 0, waypoints, lanes, lane_spacing: 2.0 * r / lanes as f64, degenerate })
}

/// Builds coverage for every ROI in tour order, entering each ROI from the
/// previous block's exit.
pub fn plan_coverage(rois: &[Roi], tour: &TourSolution, start: LocalPoint, lanes: usize) -> Result<CoveragePlan> {
    if tour.order.len() != rois.len() {
        return Err(Error::domain(format!(
            "tour visits {} ROIs but {} were given",
            tour.order.len(),
            rois.len()
        )));
    }
    let mut per_roi: Vec<Option<RoiCoverage>> = vec![None; rois.len()];
    let mut exit = start;
    for &idx in &tour.order {
        let roi = rois.get(idx).ok_or_else(|| Error::domain(format!("tour references unknown ROI {idx}")))?;
        let cov = circle_coverage(roi, lanes, exit)?;
        exit = *cov.waypoints.last().expect("coverage is nonempty");
        per_roi[idx] = Some(cov);
    }
    let per_roi = per_roi
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::domain("tour order is not a permutation"))?;
    Ok(CoveragePlan { per_roi, lanes })
}
