//! Every stage end to end on the built-in scenario.
//!
//! ```text
//! cargo run --release --example coarse_to_fine_demo -- /tmp/aquaplan_demo
//! ```

use std::path::PathBuf;

use aquaplan::pipeline::{cmd_demo, ScenarioConfig};

fn main() -> aquaplan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("aquaplan_demo"), PathBuf::from);
    let cfg = ScenarioConfig::demo();
    let s = cmd_demo(&cfg, &out, false)?;

    println!("stage 1: {} samples, mean F = {:.4}", s.stage1_samples, s.stage1_mean_occurrence);
    println!("stage 2: {} samples, mean F = {:.4}", s.stage2_samples, s.stage2_mean_occurrence);
    println!("gain {:.2}x over {} ROIs, mission {:.0} m ({})", s.occurrence_gain, s.rois, s.mission_length_m, s.stage2_status.as_str());
    println!("k-fold accuracy {:.3}", s.kfold_accuracy);
    if let (Some(acc), Some(bayes)) = (s.held_out_accuracy, s.bayes_accuracy) {
        println!("held-out accuracy {acc:.3} (planted model reaches {bayes:.3})");
    }
    for p in &s.plots {
        println!("wrote {}", out.join(p).display());
    }
    Ok(())
}
