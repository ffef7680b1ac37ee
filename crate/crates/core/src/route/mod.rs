//! Stage-2 planning: ROI ordering, intra-ROI coverage, stitching into a
//! single mission and the path-length energy check.

mod coverage;
mod geojson;
mod tsp;

pub use self::coverage::{circle_coverage, cover_circle, plan_coverage, CoveragePlan, RoiCoverage, DEFAULT_LANES};
pub use self::geojson::mission_geojson;
pub use self::tsp::{held_karp, nearest_neighbor, tour_length, tsp_order, two_opt, TourMethod, TourSolution, EXACT_LIMIT};

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{dist, LocalPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaypointTag {
    Survey,
    Transit,
    Coverage,
}

impl WaypointTag {
    pub fn as_str(self) -> &'static str {
        match self {
            WaypointTag::Survey => "survey",
            WaypointTag::Transit => "transit",
            WaypointTag::Coverage => "coverage",
        }
    }
}

impl std::str::FromStr for WaypointTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "survey" => Ok(WaypointTag::Survey),
            "transit" => Ok(WaypointTag::Transit),
            "coverage" => Ok(WaypointTag::Coverage),
            other => Err(Error::domain(format!("unknown waypoint tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub pos: LocalPoint,
    pub tag: WaypointTag,
    /// ROI whose coverage block this waypoint belongs to.
    pub roi: Option<usize>,
}

impl Waypoint {
    pub fn new(pos: LocalPoint, tag: WaypointTag) -> Self {
        Waypoint { pos, tag, roi: None }
    }
}

/// Ordered, nonempty waypoint list with its cached total length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionPath {
    waypoints: Vec<Waypoint>,
    length: f64,
}

impl MissionPath {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::domain("mission path must have at least one waypoint"));
        }
        if let Some(i) = waypoints.iter().position(|w| !w.pos.is_finite()) {
            return Err(Error::domain(format!("waypoint {i} is not finite")));
        }
        let length = waypoints.windows(2).map(|w| dist(w[0].pos, w[1].pos)).sum();
        Ok(MissionPath { waypoints, length })
    }

    pub fn from_points(points: &[LocalPoint], tag: WaypointTag) -> Result<Self> {
        Self::new(points.iter().map(|&p| Waypoint::new(p, tag)).collect())
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn points(&self) -> Vec<LocalPoint> {
        self.waypoints.iter().map(|w| w.pos).collect()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> LocalPoint {
        self.waypoints[0].pos
    }

    pub fn last(&self) -> LocalPoint {
        self.waypoints[self.waypoints.len() - 1].pos
    }

    /// Class of the segment ending at waypoint `i` (for `i >= 1`).
    ///
    /// Segments inside one ROI block are coverage, survey-to-survey is
    /// survey, anything else is transit.
    pub fn segment_tag(&self, i: usize) -> WaypointTag {
        let (a, b) = (&self.waypoints[i - 1], &self.waypoints[i]);
        match (a.tag, b.tag) {
            (WaypointTag::Coverage, WaypointTag::Coverage) if a.roi == b.roi => WaypointTag::Coverage,
            (WaypointTag::Survey, WaypointTag::Survey) => WaypointTag::Survey,
            _ => WaypointTag::Transit,
        }
    }

    /// Total length per segment class.
    pub fn length_by_tag(&self, tag: WaypointTag) -> f64 {
        (1..self.waypoints.len())
            .filter(|&i| self.segment_tag(i) == tag)
            .map(|i| dist(self.waypoints[i - 1].pos, self.waypoints[i].pos))
            .sum()
    }

    /// Writes `index,tag,roi,east_m,north_m`, one row per waypoint.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "tag", "roi", "east_m", "north_m"])?;
        for (i, wp) in self.waypoints.iter().enumerate() {
            w.write_record([
                i.to_string(),
                wp.tag.as_str().to_string(),
                wp.roi.map(|r| r.to_string()).unwrap_or_default(),
                wp.pos.east.to_string(),
                wp.pos.north.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut waypoints = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            let parse = |k: usize, name: &str| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse { line, message: format!("field {name}: not a number") })
            };
            let tag = rec
                .get(1)
                .unwrap_or("")
                .parse::<WaypointTag>()
                .map_err(|e| Error::Parse { line, message: e.to_string() })?;
            let roi = match rec.get(2).unwrap_or("") {
                "" => None,
                s => Some(s.parse::<usize>().map_err(|_| Error::Parse { line, message: "field roi: not an index".into() })?),
            };
            waypoints.push(Waypoint { pos: LocalPoint::new(parse(3, "east_m")?, parse(4, "north_m")?), tag, roi });
        }
        Self::new(waypoints)
    }
}

/// Concatenates start, then each ROI block in tour order.
///
/// A block is traversed in reverse when its last waypoint is closer to the
/// previous exit than its first.
pub fn stitch_mission(tour: &TourSolution, plan: &CoveragePlan, start: LocalPoint) -> Result<MissionPath> {
    let n = plan.per_roi.len();
    let mut seen = vec![false; n];
    if tour.order.len() != n {
        return Err(Error::domain(format!("tour has {} ROIs, coverage plan has {n}", tour.order.len())));
    }
    let mut waypoints = vec![Waypoint::new(start, WaypointTag::Transit)];
    let mut exit = start;
    for &idx in &tour.order {
        if idx >= n || std::mem::replace(&mut seen[idx], true) {
            return Err(Error::domain(format!("tour entry {idx} does not match the coverage plan")));
        }
        let block = &plan.per_roi[idx];
        let (first, last) = match (block.waypoints.first(), block.waypoints.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(Error::domain(format!("ROI {} has no coverage waypoints", block.roi_id))),
        };
        let reversed = dist(exit, last) < dist(exit, first);
        let mut pts = block.waypoints.clone();
        if reversed {
            pts.reverse();
        }
        exit = *pts.last().unwrap();
        waypoints.extend(pts.into_iter().map(|pos| Waypoint { pos, tag: WaypointTag::Coverage, roi: Some(block.roi_id) }));
    }
    MissionPath::new(waypoints)
}

/// Path length standing in for the energy reserve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub max_length_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum BudgetCheck {
    Fits { slack_m: f64 },
    Exceeds { by_m: f64 },
}

impl BudgetCheck {
    pub fn fits(&self) -> bool {
        matches!(self, BudgetCheck::Fits { .. })
    }
}

pub fn check_budget(path: &MissionPath, budget: EnergyBudget) -> BudgetCheck {
    let len = path.length();
    if len <= budget.max_length_m {
        BudgetCheck::Fits { slack_m: budget.max_length_m - len }
    } else {
        BudgetCheck::Exceeds { by_m: len - budget.max_length_m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Circle;
    use crate::survey::Roi;

    fn roi(id: usize, east: f64, north: f64, r: f64) -> Roi {
        Roi { circle: Circle { center: LocalPoint::new(east, north), radius: r }, members: vec![], cluster_id: id }
    }

    #[test]
    fn single_roi_mission_is_additive() {
        let rois = [roi(0, 100.0, 0.0, 10.0)];
        let tour = tsp_order(&[rois[0].circle.center], LocalPoint::ORIGIN).unwrap();
        let plan = plan_coverage(&rois, &tour, LocalPoint::ORIGIN, 8).unwrap();
        let m = stitch_mission(&tour, &plan, LocalPoint::ORIGIN).unwrap();
        assert_eq!(m.waypoints()[0].tag, WaypointTag::Transit);
        let transit = dist(LocalPoint::ORIGIN, plan.per_roi[0].waypoints[0]);
        assert!((m.length() - transit - plan.per_roi[0].length()).abs() < 1e-9);
        assert!((m.length_by_tag(WaypointTag::Transit) - transit).abs() < 1e-9);
    }

    #[test]
    fn blocks_are_contiguous_and_visited_once() {
        let rois: Vec<_> = (0..5).map(|i| roi(i, 80.0 * i as f64, 40.0 * (i % 2) as f64, 12.0)).collect();
        let centers: Vec<_> = rois.iter().map(|r| r.circle.center).collect();
        let start = LocalPoint::new(0.0, -50.0);
        let tour = tsp_order(&centers, start).unwrap();
        let plan = plan_coverage(&rois, &tour, start, 8).unwrap();
        let m = stitch_mission(&tour, &plan, start).unwrap();
        let mut blocks: Vec<usize> = Vec::new();
        for w in m.waypoints() {
            if let Some(r) = w.roi {
                if blocks.last() != Some(&r) {
                    assert!(!blocks.contains(&r), "ROI {r} revisited");
                    blocks.push(r);
                }
            }
        }
        assert_eq!(blocks, tour.order);
        let sum: f64 = plan.per_roi.iter().map(|c| c.length()).sum();
        assert!((m.length_by_tag(WaypointTag::Coverage) - sum).abs() < 1e-9);
    }

    #[test]
    fn mismatched_plan_is_rejected() {
        let rois = [roi(0, 10.0, 0.0, 5.0), roi(1, 40.0, 0.0, 5.0)];
        let tour = TourSolution { order: vec![0, 1], length: 0.0, method: TourMethod::Exact };
        let plan = plan_coverage(&rois, &tour, LocalPoint::ORIGIN, 8).unwrap();
        let short = TourSolution { order: vec![0], length: 0.0, method: TourMethod::Exact };
        assert!(stitch_mission(&short, &plan, LocalPoint::ORIGIN).is_err());
        let dup = TourSolution { order: vec![0, 0], length: 0.0, method: TourMethod::Exact };
        assert!(stitch_mission(&dup, &plan, LocalPoint::ORIGIN).is_err());
    }

    #[test]
    fn budget_boundaries() {
        let m = MissionPath::from_points(&[LocalPoint::ORIGIN, LocalPoint::new(30.0, 40.0)], WaypointTag::Transit).unwrap();
        assert!(check_budget(&m, EnergyBudget { max_length_m: 1e12 }).fits());
        assert!(check_budget(&m, EnergyBudget { max_length_m: 50.0 }).fits());
        assert_eq!(check_budget(&m, EnergyBudget { max_length_m: 49.0 }), BudgetCheck::Exceeds { by_m: 1.0 });
    }

    #[test]
    fn mission_csv_round_trip() {
        let rois = [roi(3, 10.0, 0.0, 5.0)];
        let tour = TourSolution { order: vec![0], length: 0.0, method: TourMethod::Exact };
        let plan = plan_coverage(&rois, &tour, LocalPoint::ORIGIN, 4).unwrap();
        let m = stitch_mission(&tour, &plan, LocalPoint::ORIGIN).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(MissionPath::read_csv(buf.as_slice()).unwrap(), m);
        assert!(MissionPath::new(vec![]).is_err());
    }
}
