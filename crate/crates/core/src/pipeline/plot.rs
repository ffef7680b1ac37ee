//! Hand-written SVG figures. Output depends only on the input artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::commands::{files, open};
use super::config::ScenarioConfig;
use crate::envsim::ingest_log;
use crate::error::Result;
use crate::geo::LocalPoint;
use crate::route::{MissionPath, WaypointTag};
use crate::survey::{Roi, SiteSet, Workspace};

pub const PLOT_SURVEY: &str = "plot_survey.svg";
pub const PLOT_CLUSTERS: &str = "plot_clusters.svg";
pub const PLOT_MISSION: &str = "plot_mission.svg";
pub const PLOT_SURFACE: &str = "plot_surface.svg";

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];
const CANVAS_PX: f64 = 800.0;
const MARGIN_PX: f64 = 30.0;

/// Maps local meters onto SVG pixels, north up.
struct Canvas {
    ws: Workspace,
    scale: f64,
    width: f64,
    height: f64,
    body: String,
}

impl Canvas {
    fn new(ws: &Workspace, title: &str) -> Self {
        let scale = (CANVAS_PX - 2.0 * MARGIN_PX) / ws.width().max(ws.height());
        let width = ws.width() * scale + 2.0 * MARGIN_PX;
        let height = ws.height() * scale + 2.0 * MARGIN_PX;
        let mut c = Canvas { ws: *ws, scale, width, height, body: String::new() };
        let (x0, y0) = c.xy(LocalPoint::new(ws.min_east, ws.max_north));
        let _ = writeln!(
            c.body,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="#f4f8fb" stroke="#333" stroke-width="1"/>"##,
            ws.width() * scale,
            ws.height() * scale
        );
        let _ = writeln!(c.body, r#"<text x="{MARGIN_PX}" y="{:.2}" font-family="sans-serif" font-size="14">{title}</text>"#, MARGIN_PX - 10.0);
        c
    }

    fn xy(&self, p: LocalPoint) -> (f64, f64) {
        (MARGIN_PX + (p.east - self.ws.min_east) * self.scale, MARGIN_PX + (self.ws.max_north - p.north) * self.scale)
    }

    fn polyline(&mut self, pts: &[LocalPoint], color: &str, width: f64, dash: Option<&str>) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = self.xy(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let dash = dash.map_or(String::new(), |d| format!(r#" stroke-dasharray="{d}""#));
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
            coords.join(" ")
        );
    }

    fn dot(&mut self, p: LocalPoint, r: f64, color: &str) {
        let (x, y) = self.xy(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}"/>"#);
    }

    fn square(&mut self, p: LocalPoint, half: f64, color: &str) {
        let (x, y) = self.xy(p);
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            x - half,
            y - half,
            2.0 * half,
            2.0 * half
        );
    }

    fn circle(&mut self, roi: &Roi, color: &str) {
        let (x, y) = self.xy(roi.circle.center);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="5 3"/>"#,
            roi.circle.radius * self.scale
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="{color}">ROI {}</text>"#,
            x + 4.0,
            y - 4.0,
            roi.cluster_id
        );
    }

    fn star(&mut self, p: LocalPoint, color: &str) {
        let (x, y) = self.xy(p);
        let pts: Vec<String> = (0..10)
            .map(|i| {
                let r = if i % 2 == 0 { 9.0 } else { 4.0 };
                let a = -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 5.0;
                format!("{:.2},{:.2}", x + r * a.cos(), y + r * a.sin())
            })
            .collect();
        let _ = writeln!(self.body, r#"<polygon points="{}" fill="{color}"/>"#, pts.join(" "));
    }

    fn rect_cell(&mut self, center: LocalPoint, size_m: f64, color: &str) {
        let (x, y) = self.xy(center);
        let s = size_m * self.scale;
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{s:.2}" height="{s:.2}" fill="{color}"/>"#,
            x - s / 2.0,
            y - s / 2.0
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.2} {:.2}\">\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

/// Stage-1 sweep, sonar hits and selected sites.
pub fn survey_svg(ws: &Workspace, track: &[LocalPoint], hits: &[LocalPoint], sites: &[LocalPoint], cell: f64) -> String {
    let mut c = Canvas::new(ws, "stage 1: zigzag survey, detections, sites");
    c.polyline(track, "#7a8a99", 1.0, None);
    for &h in hits {
        c.dot(h, 1.8, "#d62728");
    }
    let half = cell * c.scale / 2.0;
    for &s in sites {
        c.square(s, half, "#111");
    }
    c.finish()
}

/// Sites colored by cluster with their enclosing circles.
pub fn clusters_svg(ws: &Workspace, sites: &[LocalPoint], rois: &[Roi]) -> String {
    let mut c = Canvas::new(ws, "sites, clusters and ROI circles");
    for (k, roi) in rois.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for &m in &roi.members {
            c.dot(m, 4.0, color);
        }
        c.circle(roi, color);
    }
    let clustered: Vec<LocalPoint> = rois.iter().flat_map(|r| r.members.iter().copied()).collect();
    for &s in sites.iter().filter(|s| !clustered.contains(s)) {
        c.dot(s, 4.0, "#555");
    }
    c.finish()
}

fn tag_style(tag: WaypointTag) -> (&'static str, f64, Option<&'static str>) {
    match tag {
        WaypointTag::Survey => ("#7a8a99", 1.0, None),
        WaypointTag::Transit => ("#ff7f0e", 2.0, Some("6 4")),
        WaypointTag::Coverage => ("#1f77b4", 1.5, None),
    }
}

/// Planned stage-2 mission by segment class, the flown track, and ROIs.
pub fn mission_svg(ws: &Workspace, mission: &MissionPath, flown: &[LocalPoint], rois: &[Roi]) -> String {
    let mut c = Canvas::new(ws, "stage 2: ROI tour with circle coverage");
    for roi in rois {
        c.circle(roi, "#2ca02c");
    }
    let wps = mission.waypoints();
    let mut i = 1;
    while i < wps.len() {
        let tag = mission.segment_tag(i);
        let mut run = vec![wps[i - 1].pos];
        while i < wps.len() && mission.segment_tag(i) == tag {
            run.push(wps[i].pos);
            i += 1;
        }
        let (color, width, dash) = tag_style(tag);
        c.polyline(&run, color, width, dash);
    }
    c.polyline(flown, "#d62728", 0.6, None);
    c.star(mission.first(), "#d62728");
    c.finish()
}

/// Sequential blue-to-yellow ramp.
fn ramp(p: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 4] =
        [(0.0, [68.0, 1.0, 84.0]), (0.35, [49.0, 104.0, 142.0]), (0.7, [53.0, 183.0, 121.0]), (1.0, [253.0, 231.0, 37.0])];
    let p = p.clamp(0.0, 1.0);
    let j = STOPS.iter().position(|s| s.0 >= p).unwrap_or(STOPS.len() - 1).max(1);
    let (a, b) = (STOPS[j - 1], STOPS[j]);
    let u = (p - a.0) / (b.0 - a.0);
    let ch: Vec<u8> = (0..3).map(|k| (a.1[k] + u * (b.1[k] - a.1[k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", ch[0], ch[1], ch[2])
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct SurfaceRow {
    pub roi_id: usize,
    pub east_m: f64,
    pub north_m: f64,
    pub p: f64,
    pub inside: u8,
}

/// Predicted occurrence probability inside each held-out ROI.
pub fn surface_svg(ws: &Workspace, rows: &[SurfaceRow], rois: &[Roi]) -> String {
    let mut c = Canvas::new(ws, "predicted occurrence probability, held-out ROIs");
    let mut start = 0;
    while start < rows.len() {
        let id = rows[start].roi_id;
        let end = start + rows[start..].iter().take_while(|r| r.roi_id == id).count();
        let block = &rows[start..end];
        let step = block
            .windows(2)
            .map(|w| (w[1].east_m - w[0].east_m).abs())
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let step = if step.is_finite() { step } else { 1.0 };
        for r in block.iter().filter(|r| r.inside == 1) {
            c.rect_cell(LocalPoint::new(r.east_m, r.north_m), step, &ramp(r.p));
        }
        start = end;
    }
    for roi in rois {
        c.circle(roi, "#333");
    }
    for i in 0..=10 {
        let p = f64::from(i) / 10.0;
        let x = c.width - MARGIN_PX - 110.0 + f64::from(i) * 10.0;
        let _ = writeln!(c.body, r#"<rect x="{x:.2}" y="6" width="10" height="10" fill="{}"/>"#, ramp(p));
    }
    c.finish()
}

#[derive(Deserialize)]
struct TrajRow {
    east_m: f64,
    north_m: f64,
}

/// Trajectory positions thinned to one per `every` rows.
fn read_track(dir: &Path, name: &str, every: usize) -> Result<Vec<LocalPoint>> {
    let mut rdr = csv::Reader::from_reader(open(dir, name)?);
    let rows: Vec<TrajRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    let mut pts: Vec<LocalPoint> = rows.iter().step_by(every.max(1)).map(|r| LocalPoint::new(r.east_m, r.north_m)).collect();
    if let Some(last) = rows.last() {
        let last = LocalPoint::new(last.east_m, last.north_m);
        if pts.last() != Some(&last) {
            pts.push(last);
        }
    }
    Ok(pts)
}

/// Renders the four figures from the artifacts in `out`.
pub fn cmd_plot(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let ws = &cfg.workspace;
    let thin = ((1.0 / cfg.sim.dt).round() as usize).max(1);
    let sites = SiteSet::read_csv(open(out, files::SITES)?, cfg.survey.epsilon, cfg.survey.mode)?;
    let track = read_track(out, files::SURVEY_TRAJECTORY, thin)?;
    let log_path = out.join(files::SURVEY_LOG);
    let hits: Vec<LocalPoint> = ingest_log(&log_path, cfg.origin)?.events.iter().filter(|e| e.detected).map(|e| e.pos).collect();
    let rois: Vec<Roi> = serde_json::from_reader(std::io::BufReader::new(open(out, files::ROIS)?))?;
    let mission = MissionPath::read_csv(open(out, files::MISSION_CSV)?)?;
    let flown = read_track(out, files::STAGE2_TRAJECTORY, thin)?;
    let mut rdr = csv::Reader::from_reader(open(out, files::SURFACES)?);
    let surface_rows: Vec<SurfaceRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    let held_out: Vec<Roi> = rois.iter().filter(|r| surface_rows.iter().any(|s| s.roi_id == r.cluster_id)).cloned().collect();

    let figures = [
        (PLOT_SURVEY, survey_svg(ws, &track, &hits, &sites.points, cfg.survey.cell_size())),
        (PLOT_CLUSTERS, clusters_svg(ws, &sites.points, &rois)),
        (PLOT_MISSION, mission_svg(ws, &mission, &flown, &rois)),
        (PLOT_SURFACE, surface_svg(ws, &surface_rows, &held_out)),
    ];
    let mut written = Vec::with_capacity(figures.len());
    for (name, svg) in figures {
        let path = out.join(name);
        fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}
