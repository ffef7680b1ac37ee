use std::path::PathBuf;
use std::process::ExitCode;

use aquaplan::pipeline::{self, ScenarioConfig};
use aquaplan::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aquaplan", version, about = "Coarse-to-fine survey planning for a water-monitoring boat")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON (`//` comments allowed); the built-in demo when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Artifact directory; falls back to $AQUAPLAN_OUT, then the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Stage-1 zigzag survey and site selection.
    Survey(Common),
    /// Cluster sites into ROIs and plan the stage-2 mission.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        allow_over_budget: bool,
    },
    /// Fly the stage-2 mission.
    Run(Common),
    /// Fit the occurrence model and predict held-out ROIs.
    FitPredict(Common),
    /// Render SVG figures from existing artifacts.
    Plot(Common),
    /// Every stage in sequence.
    Demo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        allow_over_budget: bool,
    },
    /// Print every config field with its default.
    ConfigReference,
}

fn load(common: &Common) -> Result<(ScenarioConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::demo(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = pipeline::resolve_out_dir(common.out.as_deref(), Some(&cfg));
    Ok((cfg, out))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Survey(c) => {
            let (cfg, out) = load(&c)?;
            let s = pipeline::cmd_survey(&cfg, &out)?;
            println!("survey {}: {} samples, {} sites", s.summary.status.as_str(), s.summary.samples, s.summary.sites);
        }
        Command::Plan { common, allow_over_budget } => {
            let (cfg, out) = load(&common)?;
            let p = pipeline::cmd_plan(&cfg, &out, allow_over_budget)?;
            println!("plan: {} ROIs, mission {:.1} m of {:.1} m budget", p.rois.len(), p.mission.length(), cfg.plan.budget_m);
        }
        Command::Run(c) => {
            let (cfg, out) = load(&c)?;
            let (_, r) = pipeline::cmd_run(&cfg, &out)?;
            println!("run {}: {}/{} waypoints in {:.1} s", r.status.as_str(), r.reached, r.waypoints, r.duration_s);
        }
        Command::FitPredict(c) => {
            let (cfg, out) = load(&c)?;
            let f = pipeline::cmd_fit_predict(&cfg, &out)?;
            print!("{}", pipeline::render_report(&f.report));
        }
        Command::Plot(c) => {
            let (cfg, out) = load(&c)?;
            for p in pipeline::cmd_plot(&cfg, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Demo { common, allow_over_budget } => {
            let (cfg, out) = load(&common)?;
            let s = pipeline::cmd_demo(&cfg, &out, allow_over_budget)?;
            println!(
                "demo: {} ROIs, mean occurrence {:.3} -> {:.3} ({:.2}x), artifacts in {}",
                s.rois,
                s.stage1_mean_occurrence,
                s.stage2_mean_occurrence,
                s.occurrence_gain,
                out.display()
            );
        }
        Command::ConfigReference => print!("{}", pipeline::config_reference()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
