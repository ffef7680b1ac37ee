//! The two-stage scenario: config, per-stage commands and figures.

mod commands;
mod config;
mod plot;

pub use commands::{
    cmd_demo, cmd_fit_predict, cmd_plan, cmd_run, cmd_survey, files, mean_occurrence, render_report, resolve_out_dir,
    DemoSummary, FitPredictOutcome, HeldOutReport, PlanOutcome, PlanSummary, PredictReport, RoiData, RunSummary,
    SurveyOutcome, SurveySummary,
};
pub use config::{config_reference, strip_comments, PlanConfig, PredictConfig, RunConfig, ScenarioConfig, SurveyConfig};
pub use plot::{
    clusters_svg, cmd_plot, mission_svg, surface_svg, survey_svg, SurfaceRow, PLOT_CLUSTERS, PLOT_MISSION, PLOT_SURFACE,
    PLOT_SURVEY,
};
