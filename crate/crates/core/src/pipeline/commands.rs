use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::envsim::{export_log, ingest_log, occurrence_prob, EnvSample, IngestedLog};
use crate::error::{Error, Result};
use crate::geo::{dist, LocalPoint};
use crate::nav::{run_mission, MissionRun, MissionStatus};
use crate::numeric::derive_seed;
use crate::predictor::{
    align_labels, evaluate, fit, kfold, surface, AlignStats, EvalReport, FitOptions, LabeledDataset, LogisticModel,
    ProbabilitySurface, write_surfaces_csv,
};
use crate::route::{
    check_budget, mission_geojson, plan_coverage, stitch_mission, tsp_order, BudgetCheck, EnergyBudget, MissionPath,
    TourSolution,
};
use crate::survey::{
    build_rois, detection_rates, kmeans, select_sites, select_sites_by_probability, zigzag_path, Clustering,
    KMeansConfig, Roi, SiteMode, SiteSet, Zigzag,
};

/// Artifact file names inside the output directory.
pub mod files {
    pub const SURVEY_PATH: &str = "survey_path.csv";
    pub const SURVEY_LOG: &str = "survey_log.csv";
    pub const SURVEY_TRAJECTORY: &str = "survey_trajectory.csv";
    pub const SURVEY_SUMMARY: &str = "survey.json";
    pub const SITES: &str = "sites.csv";
    pub const ROIS: &str = "rois.json";
    pub const PLAN: &str = "plan.json";
    pub const MISSION_CSV: &str = "mission.csv";
    pub const MISSION_GEOJSON: &str = "mission.geojson";
    pub const STAGE2_LOG: &str = "stage2_log.csv";
    pub const STAGE2_TRAJECTORY: &str = "stage2_trajectory.csv";
    pub const RUN_SUMMARY: &str = "run.json";
    pub const MODEL: &str = "model.json";
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_TXT: &str = "report.txt";
    pub const SURFACES: &str = "surfaces.csv";
    pub const SUMMARY: &str = "summary.json";
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub(crate) fn open(dir: &Path, name: &str) -> Result<File> {
    let path = dir.join(name);
    File::open(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path),
        _ => Error::Io(e),
    })
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(open(dir, name)?))?)
}

/// Output directory: explicit flag, then `AQUAPLAN_OUT`, then the config,
/// then `./aquaplan_out`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: Option<&ScenarioConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("AQUAPLAN_OUT").filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.and_then(|c| c.output_dir.clone()).unwrap_or_else(|| PathBuf::from("aquaplan_out"))
}

/// Mean planted occurrence probability over sample positions.
pub fn mean_occurrence(cfg: &ScenarioConfig, samples: &[EnvSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| occurrence_prob(&cfg.occurrence, &cfg.env, s.pos)).sum::<f64>() / samples.len() as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurveySummary {
    pub status: MissionStatus,
    pub lanes: usize,
    pub lane_spacing: f64,
    pub degenerate: bool,
    pub path_length_m: f64,
    pub duration_s: f64,
    pub samples: usize,
    pub detections: usize,
    pub sites: usize,
    pub mean_occurrence: f64,
}

#[derive(Debug, Clone)]
pub struct SurveyOutcome {
    pub zigzag: Zigzag,
    pub run: MissionRun,
    pub sites: SiteSet,
    pub summary: SurveySummary,
}

/// Stage 1: zigzag sweep, simulated run with sampling, site selection.
pub fn cmd_survey(cfg: &ScenarioConfig, out: &Path) -> Result<SurveyOutcome> {
    let zigzag = zigzag_path(&cfg.workspace, cfg.survey.lane_spacing, cfg.survey.axis, cfg.survey.start)?;
    let run = run_mission(&zigzag.path, &cfg.sim, &cfg.gains, &cfg.env, &cfg.occurrence, &[], derive_seed(cfg.seed, "stage1"))?;
    if run.log.status != MissionStatus::Completed {
        log::warn!("stage-1 mission ended with status {}", run.log.status.as_str());
    }
    let events: Vec<_> = run.records.iter().map(|r| r.event()).collect();
    let sites = match cfg.survey.mode {
        SiteMode::Count => select_sites(&events, cfg.survey.epsilon, cfg.survey.cell_size(), &cfg.workspace)?,
        SiteMode::Probability => {
            let rates = detection_rates(&events, cfg.survey.cell_size(), &cfg.workspace)?;
            select_sites_by_probability(&rates, cfg.survey.epsilon, &cfg.workspace)?
        }
    };
    if sites.is_empty() {
        log::warn!("no survey cell exceeded epsilon = {}; sites file is empty", cfg.survey.epsilon);
    }

    zigzag.path.write_csv(create(out, files::SURVEY_PATH)?)?;
    export_log(&run.records, cfg.origin, &out.join(files::SURVEY_LOG))?;
    run.log.write_csv(create(out, files::SURVEY_TRAJECTORY)?)?;
    sites.write_csv(create(out, files::SITES)?)?;
    let summary = SurveySummary {
        status: run.log.status,
        lanes: zigzag.lanes,
        lane_spacing: zigzag.lane_spacing,
        degenerate: zigzag.degenerate,
        path_length_m: zigzag.path.length(),
        duration_s: run.log.points.last().map_or(0.0, |p| p.state.t),
        samples: run.records.len(),
        detections: events.iter().filter(|e| e.detected).count(),
        sites: sites.points.len(),
        mean_occurrence: mean_occurrence(cfg, &run.samples()),
    };
    write_json(out, files::SURVEY_SUMMARY, &summary)?;
    Ok(SurveyOutcome { zigzag, run, sites, summary })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanSummary {
    pub start: LocalPoint,
    pub tour: TourSolution,
    pub kmeans_inertia: f64,
    pub mission_length_m: f64,
    pub budget_m: f64,
    pub budget: BudgetCheck,
    pub waypoints: usize,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub clustering: Clustering,
    pub rois: Vec<Roi>,
    pub mission: MissionPath,
    pub summary: PlanSummary,
}

/// Stage-2 planning from the survey artifacts: clusters, ROIs, tour,
/// coverage and budget check.
///
/// Over budget, `rois.json` and `plan.json` are still written but the
/// mission files are not, unless `allow_over_budget` is set.
pub fn cmd_plan(cfg: &ScenarioConfig, out: &Path, allow_over_budget: bool) -> Result<PlanOutcome> {
    let sites = SiteSet::read_csv(open(out, files::SITES)?, cfg.survey.epsilon, cfg.survey.mode)?;
    let start = match cfg.plan.start {
        Some(p) => p,
        None => MissionPath::read_csv(open(out, files::SURVEY_PATH)?)?.last(),
    };
    let k = cfg.plan.k;
    if sites.points.len() < k {
        return Err(Error::Domain(format!(
            "only {} survey sites for k = {k} regions; lower survey.epsilon or plan.k",
            sites.points.len()
        )));
    }
    let kcfg = KMeansConfig { restarts: cfg.plan.kmeans_restarts, ..KMeansConfig::new(k, derive_seed(cfg.seed, "kmeans")) };
    let clustering = kmeans(&sites.points, &kcfg)?;
    let rois = build_rois(&clustering, &sites.points, cfg.plan.min_roi_radius)?;
    let centers: Vec<LocalPoint> = rois.iter().map(|r| r.circle.center).collect();
    let tour = tsp_order(&centers, start)?;
    let coverage = plan_coverage(&rois, &tour, start, cfg.plan.lanes)?;
    let mission = stitch_mission(&tour, &coverage, start)?;
    let budget = check_budget(&mission, EnergyBudget { max_length_m: cfg.plan.budget_m });

    write_json(out, files::ROIS, &rois)?;
    let summary = PlanSummary {
        start,
        tour,
        kmeans_inertia: clustering.inertia,
        mission_length_m: mission.length(),
        budget_m: cfg.plan.budget_m,
        budget,
        waypoints: mission.len(),
    };
    write_json(out, files::PLAN, &summary)?;
    if let BudgetCheck::Exceeds { by_m } = budget {
        if !allow_over_budget {
            return Err(Error::OverBudget { length: mission.length(), excess: by_m });
        }
        log::warn!("mission exceeds budget by {by_m:.1} m; continuing as requested");
    }
    mission.write_csv(create(out, files::MISSION_CSV)?)?;
    let gj = mission_geojson(&mission, &rois, cfg.origin)?;
    write_json(out, files::MISSION_GEOJSON, &gj)?;
    Ok(PlanOutcome { clustering, rois, mission, summary })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: MissionStatus,
    pub gps_noise: bool,
    pub waypoints: usize,
    pub reached: usize,
    pub duration_s: f64,
    pub distance_m: f64,
    pub longest_hold_s: f64,
    pub samples: usize,
    pub detections: usize,
    pub mean_occurrence: f64,
}

/// Stage-2 execution of `mission.csv` with the configured failure schedule.
pub fn cmd_run(cfg: &ScenarioConfig, out: &Path) -> Result<(MissionRun, RunSummary)> {
    let mission = MissionPath::read_csv(open(out, files::MISSION_CSV)?)?;
    let run = run_mission(
        &mission,
        &cfg.stage2_sim(),
        &cfg.gains,
        &cfg.env,
        &cfg.occurrence,
        &cfg.run.failures,
        derive_seed(cfg.seed, "stage2"),
    )?;
    if run.log.status != MissionStatus::Completed {
        log::warn!("stage-2 mission ended with status {}", run.log.status.as_str());
    }
    export_log(&run.records, cfg.origin, &out.join(files::STAGE2_LOG))?;
    run.log.write_csv(create(out, files::STAGE2_TRAJECTORY)?)?;
    let summary = RunSummary {
        status: run.log.status,
        gps_noise: cfg.run.gps_noise,
        waypoints: mission.len(),
        reached: run.log.reached.len(),
        duration_s: run.log.points.last().map_or(0.0, |p| p.state.t),
        distance_m: run.log.distance_travelled(),
        longest_hold_s: run.log.longest_hold(),
        samples: run.records.len(),
        detections: run.records.iter().filter(|r| r.detected).count(),
        mean_occurrence: mean_occurrence(cfg, &run.samples()),
    };
    write_json(out, files::RUN_SUMMARY, &summary)?;
    Ok((run, summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoiData {
    pub roi_id: usize,
    pub rows: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeldOutReport {
    pub eval: EvalReport,
    /// Expected accuracy of the planted model on the test positions.
    pub bayes_accuracy: f64,
    /// Accuracy gate: 0.5 + 0.8 (bayes - 0.5).
    pub accuracy_floor: f64,
    pub passes_floor: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictReport {
    pub alignment: AlignStats,
    pub per_roi: Vec<RoiData>,
    pub train_roi: usize,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub kfold: EvalReport,
    pub test_rois: Vec<usize>,
    pub held_out: Option<HeldOutReport>,
}

#[derive(Debug, Clone)]
pub struct FitPredictOutcome {
    pub model: LogisticModel,
    pub report: PredictReport,
    pub surfaces: Vec<ProbabilitySurface>,
}

/// ROI containing `p` (circle plus `slack` meters), nearest center first.
fn roi_of(rois: &[Roi], p: LocalPoint, slack: f64) -> Option<usize> {
    rois.iter()
        .enumerate()
        .filter(|(_, r)| dist(p, r.circle.center) <= r.circle.radius + slack)
        .min_by(|a, b| dist(p, a.1.circle.center).total_cmp(&dist(p, b.1.circle.center)))
        .map(|(i, _)| i)
}

/// Labels stage-2 samples, fits on the most class-balanced ROI, and tests on
/// the others.
pub fn cmd_fit_predict(cfg: &ScenarioConfig, out: &Path) -> Result<FitPredictOutcome> {
    let IngestedLog { samples, events, .. } = ingest_log(&out.join(files::STAGE2_LOG), cfg.origin)?;
    let rois: Vec<Roi> = read_json(out, files::ROIS)?;
    if rois.is_empty() {
        return Err(Error::domain("rois.json holds no regions"));
    }
    let p = &cfg.predict;
    let (data, alignment) = align_labels(&samples, &events, p.align_tol_s);
    let slack = cfg.stage2_sim().acceptance_radius;
    let owner: Vec<Option<usize>> = data.rows.iter().map(|r| roi_of(&rois, r.pos, slack)).collect();
    let per_roi_idx: Vec<Vec<usize>> =
        (0..rois.len()).map(|k| (0..data.len()).filter(|&i| owner[i] == Some(k)).collect()).collect();
    let per_roi: Vec<RoiData> = per_roi_idx
        .iter()
        .enumerate()
        .map(|(k, idx)| RoiData {
            roi_id: rois[k].cluster_id,
            rows: idx.len(),
            positives: idx.iter().filter(|&&i| data.rows[i].label).count(),
        })
        .collect();

    // Most informative ROI: largest minority class, then lowest index.
    let minority = |d: &RoiData| d.positives.min(d.rows - d.positives);
    let train = (0..rois.len())
        .filter(|&k| minority(&per_roi[k]) > 0 && per_roi[k].rows >= p.folds)
        .max_by(|&a, &b| minority(&per_roi[a]).cmp(&minority(&per_roi[b])).then(b.cmp(&a)));
    let Some(train) = train else {
        let positives = data.positives();
        return Err(Error::DegenerateLabels { positives, negatives: data.len() - positives });
    };
    let train_set = data.subset(&per_roi_idx[train]);
    let opts = FitOptions { c: p.c, max_iter: p.max_iter, tol: p.tol };
    let fitted = fit(&train_set, &opts)?;
    let cv = kfold(&train_set, p.folds, derive_seed(cfg.seed, "kfold"), &opts, p.threshold)?;

    let test_rois: Vec<usize> = (0..rois.len()).filter(|&k| k != train && !per_roi_idx[k].is_empty()).collect();
    let test_idx: Vec<usize> = test_rois.iter().flat_map(|&k| per_roi_idx[k].iter().copied()).collect();
    let held_out = if test_idx.is_empty() {
        log::warn!("no held-out ROI samples; only k-fold results are reported");
        None
    } else {
        let test_set: LabeledDataset = data.subset(&test_idx);
        let eval = evaluate(&fitted.model, &test_set, p.threshold)?;
        let bayes_accuracy = test_set
            .rows
            .iter()
            .map(|r| {
                let f = occurrence_prob(&cfg.occurrence, &cfg.env, r.pos);
                f.max(1.0 - f)
            })
            .sum::<f64>()
            / test_set.len() as f64;
        let accuracy_floor = 0.5 + 0.8 * (bayes_accuracy - 0.5);
        Some(HeldOutReport { passes_floor: eval.accuracy >= accuracy_floor, eval, bayes_accuracy, accuracy_floor })
    };

    let surfaces = test_rois
        .iter()
        .map(|&k| surface(&fitted.model, &rois[k], &cfg.env, p.surface_resolution_m))
        .collect::<Result<Vec<_>>>()?;

    let report = PredictReport {
        alignment,
        per_roi,
        train_roi: rois[train].cluster_id,
        converged: fitted.converged,
        iterations: fitted.iterations,
        grad_norm: fitted.grad_norm,
        kfold: cv,
        test_rois: test_rois.iter().map(|&k| rois[k].cluster_id).collect(),
        held_out,
    };
    write_json(out, files::MODEL, &fitted.model)?;
    write_json(out, files::REPORT_JSON, &report)?;
    let mut txt = create(out, files::REPORT_TXT)?;
    txt.write_all(render_report(&report).as_bytes())?;
    txt.flush()?;
    write_surfaces_csv(&surfaces, create(out, files::SURFACES)?)?;
    Ok(FitPredictOutcome { model: fitted.model, report, surfaces })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a (no positive predictions)".to_string(), |x| format!("{x:.4}"))
}

/// Human-readable summary of a [`PredictReport`].
pub fn render_report(r: &PredictReport) -> String {
    let mut s = String::new();
    s.push_str("fish occurrence model\n");
    s.push_str(&format!(
        "labels: {} positive events, {} matched, {} unmatched\n",
        r.alignment.positive_events, r.alignment.matched, r.alignment.unmatched
    ));
    for d in &r.per_roi {
        s.push_str(&format!("  roi {}: {} samples, {} positive\n", d.roi_id, d.rows, d.positives));
    }
    s.push_str(&format!(
        "training roi {}: converged {} after {} iterations (gradient {:.2e})\n",
        r.train_roi, r.converged, r.iterations, r.grad_norm
    ));
    let m = &r.kfold.matrix;
    s.push_str(&format!(
        "{}-fold: tp {} fp {} tn {} fn {}  precision {}  accuracy {:.4}\n",
        r.kfold.folds.len(),
        m.tp,
        m.fp,
        m.tn,
        m.fn_,
        fmt_opt(r.kfold.precision),
        r.kfold.accuracy
    ));
    match &r.held_out {
        Some(h) => {
            let m = &h.eval.matrix;
            s.push_str(&format!(
                "held-out rois {:?}: tp {} fp {} tn {} fn {}  precision {}  accuracy {:.4}\n",
                r.test_rois,
                m.tp,
                m.fp,
                m.tn,
                m.fn_,
                fmt_opt(h.eval.precision),
                h.eval.accuracy
            ));
            s.push_str(&format!(
                "planted-model accuracy {:.4}, floor {:.4}: {}\n",
                h.bayes_accuracy,
                h.accuracy_floor,
                if h.passes_floor { "ok" } else { "below floor" }
            ));
        }
        None => s.push_str("held-out: none\n"),
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoSummary {
    pub seed: u64,
    pub stage1_samples: usize,
    pub stage1_mean_occurrence: f64,
    pub stage2_samples: usize,
    pub stage2_mean_occurrence: f64,
    pub occurrence_gain: f64,
    pub rois: usize,
    pub mission_length_m: f64,
    pub stage2_status: MissionStatus,
    pub kfold_accuracy: f64,
    pub held_out_accuracy: Option<f64>,
    pub bayes_accuracy: Option<f64>,
    pub plots: Vec<String>,
}

/// Runs every stage into `out` and writes `summary.json`.
pub fn cmd_demo(cfg: &ScenarioConfig, out: &Path, allow_over_budget: bool) -> Result<DemoSummary> {
    let survey = cmd_survey(cfg, out)?;
    let plan = cmd_plan(cfg, out, allow_over_budget)?;
    let (_, run) = cmd_run(cfg, out)?;
    let fp = cmd_fit_predict(cfg, out)?;
    let plots = super::plot::cmd_plot(cfg, out)?;
    let s1 = survey.summary.mean_occurrence;
    let s2 = run.mean_occurrence;
    let summary = DemoSummary {
        seed: cfg.seed,
        stage1_samples: survey.summary.samples,
        stage1_mean_occurrence: s1,
        stage2_samples: run.samples,
        stage2_mean_occurrence: s2,
        occurrence_gain: if s1 > 0.0 { s2 / s1 } else { f64::INFINITY },
        rois: plan.rois.len(),
        mission_length_m: plan.mission.length(),
        stage2_status: run.status,
        kfold_accuracy: fp.report.kfold.accuracy,
        held_out_accuracy: fp.report.held_out.as_ref().map(|h| h.eval.accuracy),
        bayes_accuracy: fp.report.held_out.as_ref().map(|h| h.bayes_accuracy),
        plots: plots.iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect(),
    };
    write_json(out, files::SUMMARY, &summary)?;
    Ok(summary)
}
