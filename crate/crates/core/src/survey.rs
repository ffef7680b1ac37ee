//! Stage-1 coarse survey: boustrophedon sweep, site selection from sonar
//! evidence, k-means clustering and ROI circles.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envsim::DetectionEvent;
use crate::error::{Error, Result};
use crate::geo::{dist, smallest_enclosing_circle, Circle, LocalPoint};
use crate::numeric::derive_seed;
use crate::route::{MissionPath, WaypointTag};

/// Default floor on ROI radius, meters.
pub const DEFAULT_MIN_ROI_RADIUS: f64 = 5.0;

/// Axis-aligned rectangle in the local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub min_east: f64,
    pub max_east: f64,
    pub min_north: f64,
    pub max_north: f64,
}

impl Workspace {
    pub fn new(min_east: f64, max_east: f64, min_north: f64, max_north: f64) -> Result<Self> {
        let ws = Workspace { min_east, max_east, min_north, max_north };
        ws.validate()?;
        Ok(ws)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.min_east, self.max_east, self.min_north, self.max_north].iter().all(|v| v.is_finite())
            && self.max_east > self.min_east
            && self.max_north > self.min_north;
        if ok {
            Ok(())
        } else {
            Err(Error::domain("workspace must be a finite rectangle with positive area"))
        }
    }

    pub fn width(&self) -> f64 {
        self.max_east - self.min_east
    }

    pub fn height(&self) -> f64 {
        self.max_north - self.min_north
    }

    pub fn contains(&self, p: LocalPoint) -> bool {
        (self.min_east..=self.max_east).contains(&p.east) && (self.min_north..=self.max_north).contains(&p.north)
    }

    pub fn clamp(&self, p: LocalPoint) -> LocalPoint {
        LocalPoint::new(p.east.clamp(self.min_east, self.max_east), p.north.clamp(self.min_north, self.max_north))
    }

    pub fn corners(&self) -> [LocalPoint; 4] {
        [
            LocalPoint::new(self.min_east, self.min_north),
            LocalPoint::new(self.max_east, self.min_north),
            LocalPoint::new(self.max_east, self.max_north),
            LocalPoint::new(self.min_east, self.max_north),
        ]
    }
}

/// Direction the survey lanes run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneAxis {
    East,
    North,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zigzag {
    pub path: MissionPath,
    pub lanes: usize,
    /// Actual distance between adjacent lanes (never above the request).
    pub lane_spacing: f64,
    /// Spacing was at least the workspace width; a single center lane was used.
    pub degenerate: bool,
}

/// Boustrophedon sweep starting from the workspace corner nearest `start`.
///
/// `ceil(W / spacing) + 1` lanes are spread evenly across the width `W`
/// perpendicular to the lanes, so the first and last lanes lie on the edges.
pub fn zigzag_path(ws: &Workspace, lane_spacing: f64, axis: LaneAxis, start: LocalPoint) -> Result<Zigzag> {
    ws.validate()?;
    if !(lane_spacing > 0.0 && lane_spacing.is_finite()) {
        return Err(Error::domain(format!("lane spacing must be > 0, got {lane_spacing}")));
    }
    // (along-lane range, across-lane range)
    let ((a0, a1), (c0, c1)) = match axis {
        LaneAxis::East => ((ws.min_east, ws.max_east), (ws.min_north, ws.max_north)),
        LaneAxis::North => ((ws.min_north, ws.max_north), (ws.min_east, ws.max_east)),
    };
    let to_point = |along: f64, across: f64| match axis {
        LaneAxis::East => LocalPoint::new(along, across),
        LaneAxis::North => LocalPoint::new(across, along),
    };
    let corner = ws
        .corners()
        .into_iter()
        .min_by(|a, b| dist(*a, start).total_cmp(&dist(*b, start)))
        .unwrap();
    let (corner_along, corner_across) = match axis {
        LaneAxis::East => (corner.east, corner.north),
        LaneAxis::North => (corner.north, corner.east),
    };
    let width = c1 - c0;
    let along_forward = corner_along == a0;
    let across_forward = corner_across == c0;

    let (offsets, spacing, degenerate): (Vec<f64>, f64, bool) = if lane_spacing >= width {
        log::warn!("lane spacing {lane_spacing} m >= workspace width {width} m; using a single lane");
        (vec![(c0 + c1) / 2.0], width, true)
    } else {
        let lanes = (width / lane_spacing).ceil() as usize + 1;
        let step = width / (lanes - 1) as f64;
        let offs = (0..lanes)
            .map(|i| if i + 1 == lanes { c1 } else { c0 + step * i as f64 })
            .collect();
        (offs, step, false)
    };
    let offsets: Vec<f64> = if across_forward { offsets } else { offsets.into_iter().rev().collect() };

    let mut points = Vec::with_capacity(2 * offsets.len());
    for (i, &off) in offsets.iter().enumerate() {
        let forward = (i % 2 == 0) == along_forward;
        let (from, to) = if forward { (a0, a1) } else { (a1, a0) };
        points.push(to_point(from, off));
        points.push(to_point(to, off));
    }
    Ok(Zigzag {
        path: MissionPath::from_points(&points, WaypointTag::Survey)?,
        lanes: offsets.len(),
        lane_spacing: spacing,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteMode {
    /// Threshold on detection counts per grid cell.
    Count,
    /// Threshold on an occurrence probability per position.
    Probability,
}

/// Sites of interest extracted from stage-1 evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    pub points: Vec<LocalPoint>,
    pub epsilon: f64,
    pub mode: SiteMode,
}

impl SiteSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["east_m", "north_m"])?;
        for p in &self.points {
            w.write_record([p.east.to_string(), p.north.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, epsilon: f64, mode: SiteMode) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            let (east, north) = rec?;
            points.push(LocalPoint::new(east, north));
        }
        Ok(SiteSet { points, epsilon, mode })
    }
}

/// Bins positive detections into square cells and keeps the centers of
/// cells whose count exceeds `epsilon`.
pub fn select_sites(events: &[DetectionEvent], epsilon: f64, cell_size: f64, ws: &Workspace) -> Result<SiteSet> {
    if !(epsilon >= 0.0) {
        return Err(Error::domain("count threshold must be >= 0"));
    }
    let grid = CellGrid::new(ws, cell_size)?;
    let mut counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for e in events.iter().filter(|e| e.detected && ws.contains(e.pos)) {
        *counts.entry(grid.cell(e.pos)).or_default() += 1;
    }
    let points = counts.into_iter().filter(|&(_, n)| n as f64 > epsilon).map(|(c, _)| grid.center(c)).collect();
    Ok(SiteSet { points, epsilon, mode: SiteMode::Count })
}

/// Per-cell fraction of sonar draws that detected fish, keyed by the
/// (clamped) cell center. Cells without draws are omitted.
pub fn detection_rates(events: &[DetectionEvent], cell_size: f64, ws: &Workspace) -> Result<Vec<(LocalPoint, f64)>> {
    let grid = CellGrid::new(ws, cell_size)?;
    let mut tallies: BTreeMap<(i64, i64), (usize, usize)> = BTreeMap::new();
    for e in events.iter().filter(|e| ws.contains(e.pos)) {
        let t = tallies.entry(grid.cell(e.pos)).or_default();
        t.0 += usize::from(e.detected);
        t.1 += 1;
    }
    Ok(tallies.into_iter().map(|(c, (hits, n))| (grid.center(c), hits as f64 / n as f64)).collect())
}

/// Square cells centered on `min + i * size` along each axis, so survey
/// lanes starting at the workspace edge run through cell centers rather
/// than along cell borders.
struct CellGrid {
    ws: Workspace,
    size: f64,
    nx: i64,
    ny: i64,
}

impl CellGrid {
    fn new(ws: &Workspace, size: f64) -> Result<Self> {
        ws.validate()?;
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::domain(format!("cell size must be > 0, got {size}")));
        }
        let nx = (ws.width() / size + 0.5).floor() as i64 + 1;
        let ny = (ws.height() / size + 0.5).floor() as i64 + 1;
        Ok(CellGrid { ws: *ws, size, nx, ny })
    }

    /// (row, column) of the cell holding `p`.
    fn cell(&self, p: LocalPoint) -> (i64, i64) {
        let ix = (((p.east - self.ws.min_east) / self.size + 0.5).floor() as i64).clamp(0, self.nx - 1);
        let iy = (((p.north - self.ws.min_north) / self.size + 0.5).floor() as i64).clamp(0, self.ny - 1);
        (iy, ix)
    }

    /// Cell center, clamped into the workspace.
    fn center(&self, (iy, ix): (i64, i64)) -> LocalPoint {
        self.ws.clamp(LocalPoint::new(
            self.ws.min_east + ix as f64 * self.size,
            self.ws.min_north + iy as f64 * self.size,
        ))
    }
}

/// Keeps positions whose occurrence probability exceeds `epsilon`.
pub fn select_sites_by_probability(scored: &[(LocalPoint, f64)], epsilon: f64, ws: &Workspace) -> Result<SiteSet> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain(format!("probability threshold {epsilon} outside [0, 1]")));
    }
    let points = scored.iter().filter(|(p, prob)| *prob > epsilon && ws.contains(*p)).map(|(p, _)| *p).collect();
    Ok(SiteSet { points, epsilon, mode: SiteMode::Probability })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the summed squared centroid shift, m².
    pub tol: f64,
    pub restarts: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig { k, seed, max_iter: 300, tol: 1e-6, restarts: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<LocalPoint>,
    /// Sum over sites of squared distance to the assigned centroid.
    pub inertia: f64,
    /// Inertia after every assignment step of the returned run.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `sum_i min_j |x_i - c_j|^2`.
pub fn inertia(points: &[LocalPoint], centroids: &[LocalPoint]) -> f64 {
    points
        .iter()
        .map(|p| centroids.iter().map(|c| sq_dist(*p, *c)).fold(f64::INFINITY, f64::min))
        .sum()
}

fn sq_dist(a: LocalPoint, b: LocalPoint) -> f64 {
    let d = a - b;
    d.dot(d)
}

fn nearest(p: LocalPoint, centroids: &[LocalPoint]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, *c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn plus_plus_init<R: Rng>(points: &[LocalPoint], k: usize, rng: &mut R) -> Vec<LocalPoint> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(*p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(*p, c));
        }
    }
    centroids
}

/// Moves the farthest member of a multi-member cluster into each empty cluster.
fn repair_empty(points: &[LocalPoint], assignments: &mut [usize], centroids: &mut [LocalPoint]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let donor = (0..points.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .max_by(|&a, &b| {
                sq_dist(points[a], centroids[assignments[a]])
                    .total_cmp(&sq_dist(points[b], centroids[assignments[b]]))
                    .then(b.cmp(&a))
            })
            .expect("n >= k guarantees a multi-member cluster");
        assignments[donor] = empty;
        centroids[empty] = points[donor];
    }
}

fn assigned_inertia(points: &[LocalPoint], assignments: &[usize], centroids: &[LocalPoint]) -> f64 {
    points.iter().zip(assignments).map(|(p, &a)| sq_dist(*p, centroids[a])).sum()
}

/// One Lloyd run from k-means++ seeding.
pub fn kmeans_run<R: Rng>(points: &[LocalPoint], k: usize, max_iter: usize, tol: f64, rng: &mut R) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::domain("k must be >= 1"));
    }
    if points.len() < k {
        return Err(Error::domain(format!("{} sites cannot form {k} clusters", points.len())));
    }
    let mut centroids = plus_plus_init(points, k, rng);
    let mut assignments = vec![0; points.len()];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        for (a, p) in assignments.iter_mut().zip(points) {
            *a = nearest(*p, &centroids);
        }
        repair_empty(points, &mut assignments, &mut centroids);
        history.push(assigned_inertia(points, &assignments, &centroids));

        let mut sums = vec![(LocalPoint::ORIGIN, 0usize); k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a].0 = sums[a].0 + *p;
            sums[a].1 += 1;
        }
        let mut shift = 0.0;
        for (c, (sum, n)) in centroids.iter_mut().zip(sums) {
            let next = sum * (1.0 / n as f64);
            shift += sq_dist(*c, next);
            *c = next;
        }
        if shift < tol {
            converged = true;
            break;
        }
    }
    for (a, p) in assignments.iter_mut().zip(points) {
        *a = nearest(*p, &centroids);
    }
    repair_empty(points, &mut assignments, &mut centroids);
    let final_inertia = assigned_inertia(points, &assignments, &centroids);
    history.push(final_inertia);
    Ok(Clustering { k, assignments, centroids, inertia: final_inertia, inertia_history: history, iterations, converged })
}

/// Best of `cfg.restarts` seeded Lloyd runs by inertia.
pub fn kmeans(points: &[LocalPoint], cfg: &KMeansConfig) -> Result<Clustering> {
    let mut best: Option<Clustering> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("kmeans-restart-{r}")));
        let run = kmeans_run(points, cfg.k, cfg.max_iter, cfg.tol, &mut rng)?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// A disk bounding one cluster of sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub cluster_id: usize,
    pub circle: Circle,
    pub members: Vec<LocalPoint>,
}

/// One ROI per nonempty cluster: the smallest enclosing circle, radius
/// raised to at least `min_radius`.
pub fn build_rois(clustering: &Clustering, sites: &[LocalPoint], min_radius: f64) -> Result<Vec<Roi>> {
    if clustering.assignments.len() != sites.len() {
        return Err(Error::domain("clustering does not match the site list"));
    }
    let mut rois = Vec::new();
    for id in 0..clustering.k {
        let members: Vec<LocalPoint> =
            sites.iter().zip(&clustering.assignments).filter(|(_, &a)| a == id).map(|(p, _)| *p).collect();
        if members.is_empty() {
            continue;
        }
        let mut circle = smallest_enclosing_circle(&members)?;
        circle.radius = circle.radius.max(min_radius);
        rois.push(Roi { cluster_id: id, circle, members });
    }
    Ok(rois)
}
