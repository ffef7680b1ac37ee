use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envsim::{EnvField, GaussianBump, NoiseStd, OccurrenceField, ParamField};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, LocalPoint};
use crate::nav::{PidGains, SimConfig, ThrusterFailure};
use crate::route::DEFAULT_LANES;
use crate::survey::{LaneAxis, SiteMode, Workspace, DEFAULT_MIN_ROI_RADIUS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyConfig {
    pub lane_spacing: f64,
    #[serde(default = "default_axis")]
    pub axis: LaneAxis,
    /// Launch point; the sweep begins at the nearest workspace corner.
    #[serde(default)]
    pub start: LocalPoint,
    /// Site threshold. Count mode: detections per cell. Probability mode:
    /// per-cell detection rate. No default.
    pub epsilon: f64,
    #[serde(default = "default_mode")]
    pub mode: SiteMode,
    /// Site grid cell size; defaults to `lane_spacing`.
    #[serde(default)]
    pub cell_size: Option<f64>,
}

fn default_axis() -> LaneAxis {
    LaneAxis::North
}

fn default_mode() -> SiteMode {
    SiteMode::Count
}

impl SurveyConfig {
    pub fn cell_size(&self) -> f64 {
        self.cell_size.unwrap_or(self.lane_spacing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub k: usize,
    #[serde(default = "default_lanes")]
    pub lanes: usize,
    #[serde(default = "default_min_radius")]
    pub min_roi_radius: f64,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: usize,
    /// Stage-2 start; defaults to the end of the stage-1 sweep.
    #[serde(default)]
    pub start: Option<LocalPoint>,
    pub budget_m: f64,
}

fn default_lanes() -> usize {
    DEFAULT_LANES
}

fn default_min_radius() -> f64 {
    DEFAULT_MIN_ROI_RADIUS
}

fn default_restarts() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Use the GPS-noise simulator preset for stage 2.
    pub gps_noise: bool,
    pub failures: Vec<ThrusterFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub folds: usize,
    pub threshold: f64,
    pub align_tol_s: f64,
    pub surface_resolution_m: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig { c: 1.0, max_iter: 1000, tol: 1e-8, folds: 5, threshold: 0.5, align_tol_s: 0.5, surface_resolution_m: 2.0 }
    }
}

/// Everything one scenario needs, loaded from a single JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub origin: GeoPoint,
    pub workspace: Workspace,
    pub env: EnvField,
    pub occurrence: OccurrenceField,
    pub survey: SurveyConfig,
    pub plan: PlanConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub gains: PidGains,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub predict: PredictConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_seed() -> u64 {
    42
}

/// Removes `//` line comments that sit outside JSON strings.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let mut in_str = false;
        let mut escaped = false;
        let mut cut = line.len();
        let bytes = line.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
            } else if b == b'"' {
                in_str = true;
            } else if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
                cut = i;
                break;
            }
        }
        out.push_str(&line[..cut]);
        out.push('\n');
    }
    out
}

fn field_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(path, format!("must be a finite number > 0, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cleaned = strip_comments(text);
        let de = &mut serde_json::Deserializer::from_str(&cleaned);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            field_err(if path == "." { "<root>" } else { &path }, format!("{inner}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json_str(&text)
    }

    /// Checks every sub-config, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        self.origin.validate().map_err(|e| field_err("origin", e.to_string()))?;
        self.workspace.validate().map_err(|e| field_err("workspace", e.to_string()))?;
        self.env.validate().map_err(|e| field_err("env", e.to_string()))?;
        self.occurrence.validate().map_err(|e| field_err("occurrence", e.to_string()))?;

        positive("survey.lane_spacing", self.survey.lane_spacing)?;
        if let Some(c) = self.survey.cell_size {
            positive("survey.cell_size", c)?;
        }
        match self.survey.mode {
            SiteMode::Count if !(self.survey.epsilon >= 0.0 && self.survey.epsilon.is_finite()) => {
                return Err(field_err("survey.epsilon", "must be a finite count >= 0"));
            }
            SiteMode::Probability if !(0.0..1.0).contains(&self.survey.epsilon) => {
                return Err(field_err("survey.epsilon", "must lie in [0, 1) in probability mode"));
            }
            _ => {}
        }
        if !self.survey.start.is_finite() {
            return Err(field_err("survey.start", "must be finite"));
        }

        if self.plan.k == 0 {
            return Err(field_err("plan.k", "must be >= 1"));
        }
        if self.plan.lanes == 0 {
            return Err(field_err("plan.lanes", "must be >= 1"));
        }
        if self.plan.kmeans_restarts == 0 {
            return Err(field_err("plan.kmeans_restarts", "must be >= 1"));
        }
        positive("plan.min_roi_radius", self.plan.min_roi_radius)?;
        positive("plan.budget_m", self.plan.budget_m)?;
        if self.plan.start.is_some_and(|p| !p.is_finite()) {
            return Err(field_err("plan.start", "must be finite"));
        }

        self.sim.validate().map_err(|e| field_err("sim", e.to_string()))?;
        self.gains.validate().map_err(|e| field_err("gains", e.to_string()))?;
        for (i, f) in self.run.failures.iter().enumerate() {
            if f.thruster > 2 {
                return Err(field_err(&format!("run.failures[{i}].thruster"), "must be 0, 1 or 2"));
            }
            if !(f.t >= 0.0 && f.t.is_finite()) {
                return Err(field_err(&format!("run.failures[{i}].t"), "must be >= 0"));
            }
        }

        let p = &self.predict;
        positive("predict.C", p.c)?;
        positive("predict.tol", p.tol)?;
        positive("predict.surface_resolution_m", p.surface_resolution_m)?;
        if !(p.align_tol_s >= 0.0) {
            return Err(field_err("predict.align_tol_s", "must be >= 0"));
        }
        if p.max_iter == 0 {
            return Err(field_err("predict.max_iter", "must be >= 1"));
        }
        if p.folds < 2 {
            return Err(field_err("predict.folds", "must be >= 2"));
        }
        if !(0.0..=1.0).contains(&p.threshold) {
            return Err(field_err("predict.threshold", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Stage-2 simulator settings.
    pub fn stage2_sim(&self) -> SimConfig {
        if self.run.gps_noise {
            SimConfig { acceptance_radius: 10.0, gps_noise_std: 3.3, ..self.sim }
        } else {
            self.sim
        }
    }

    /// Built-in scenario: a 400 m x 300 m pond with five warm spots where
    /// fish gather.
    pub fn demo() -> Self {
        let hotspots = [(80.0, 70.0), (300.0, 60.0), (200.0, 160.0), (90.0, 230.0), (320.0, 240.0)];
        let bumps = hotspots
            .iter()
            .map(|&(e, n)| GaussianBump { center: LocalPoint::new(e, n), amplitude: 6.0, length_scale: 25.0 })
            .collect();
        ScenarioConfig {
            seed: 42,
            origin: GeoPoint { lat: 22.3364, lon: 114.2655 },
            workspace: Workspace { min_east: 0.0, max_east: 400.0, min_north: 0.0, max_north: 300.0 },
            env: EnvField {
                ph: ParamField::constant(7.2),
                temp_c: ParamField { baseline: 20.0, bumps },
                tds_ppm: ParamField::constant(320.0),
                do_mgl: ParamField::constant(7.5),
                noise: NoiseStd::default(),
                seed: 0,
            },
            // F = sigmoid(1.2 (T - 20) - 3)
            occurrence: OccurrenceField { weights: [0.0, 1.2, 0.0, 0.0], intercept: -27.0 },
            survey: SurveyConfig {
                lane_spacing: 25.0,
                axis: LaneAxis::North,
                start: LocalPoint::ORIGIN,
                epsilon: 6.0,
                mode: SiteMode::Count,
                cell_size: None,
            },
            plan: PlanConfig {
                k: 5,
                lanes: DEFAULT_LANES,
                min_roi_radius: DEFAULT_MIN_ROI_RADIUS,
                kmeans_restarts: 10,
                start: None,
                budget_m: 20_000.0,
            },
            sim: SimConfig::default(),
            gains: PidGains::default(),
            run: RunConfig::default(),
            predict: PredictConfig::default(),
            output_dir: None,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Commented listing of every config field and its default.
pub fn config_reference() -> String {
    let mut s = String::new();
    s.push_str("// Scenario config: JSON, `//` comments allowed. Unknown fields are rejected.\n");
    s.push_str("// Fields without a default are required. The demo scenario is shown below.\n");
    s.push_str("//\n");
    let rows: &[(&str, &str)] = &[
        ("seed", "master seed, default 42; --seed overrides"),
        ("origin.lat / origin.lon", "WGS-84 origin of the local frame, degrees (required)"),
        ("workspace.min_east .. max_north", "survey rectangle in local meters (required)"),
        ("env.<ph|temp_c|tds_ppm|do_mgl>", "{baseline, bumps: [{center:{east,north}, amplitude, length_scale}]}"),
        ("env.noise", "sensor noise std, default {ph:0.05, temp_c:0.1, tds_ppm:5, do_mgl:0.1}"),
        ("env.seed", "seed for standalone field samplers, default 0; the pipeline derives its own"),
        ("occurrence.weights / intercept", "planted model over raw [ph, temp_c, tds_ppm, do_mgl] (required)"),
        ("survey.lane_spacing", "stage-1 lane spacing, m (required)"),
        ("survey.axis", "\"north\" (default) or \"east\": direction the lanes run"),
        ("survey.start", "launch point, default {east:0, north:0}"),
        ("survey.epsilon", "site threshold (required, no default)"),
        ("survey.mode", "\"count\" (default): detections per cell > epsilon; \"probability\": detection rate > epsilon"),
        ("survey.cell_size", "site grid cell, m, default lane_spacing"),
        ("plan.k", "number of ROIs (required)"),
        ("plan.lanes", "coverage chords per ROI, default 8"),
        ("plan.min_roi_radius", "floor on ROI radius, m, default 5"),
        ("plan.kmeans_restarts", "k-means++ restarts, default 10"),
        ("plan.start", "stage-2 start, default end of the stage-1 sweep"),
        ("plan.budget_m", "maximum stage-2 path length, m (required)"),
        ("sim.dt", "integration step, s, default 0.1"),
        ("sim.cruise_speed", "m/s, default 1.0"),
        ("sim.acceptance_radius", "waypoint capture radius, m, default 2.0"),
        ("sim.gps_noise_std", "reported-position noise, m, default 0"),
        ("sim.max_mission_time", "s, default 36000"),
        ("sim.sample_interval", "sensor period, s, default 1.0"),
        ("sim.max_turn_rate", "rad/s, default 0.5; failover dwell = (2 pi / 3) / max_turn_rate"),
        ("gains", "heading PID {kp:1.5, ki:0, kd:0.5, integral_clamp:1.0, output_clamp:0.5}"),
        ("run.gps_noise", "stage 2 with 3.3 m GPS noise and 10 m acceptance, default false"),
        ("run.failures", "[{t, thruster}] stage-2 thruster failures, default []"),
        ("predict.C", "inverse L2 strength, default 1.0"),
        ("predict.max_iter / tol", "default 1000 / 1e-8 (gradient inf-norm)"),
        ("predict.folds", "k-fold count, default 5"),
        ("predict.threshold", "positive when p >= threshold, default 0.5"),
        ("predict.align_tol_s", "label matching window, s, default 0.5"),
        ("predict.surface_resolution_m", "surface grid step, m, default 2"),
        ("output_dir", "artifact directory; --out and AQUAPLAN_OUT take precedence"),
    ];
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (k, v) in rows {
        s.push_str(&format!("// {k:<width$}  {v}\n"));
    }
    s.push_str(&ScenarioConfig::demo().to_json_pretty());
    s.push('\n');
    s
}
