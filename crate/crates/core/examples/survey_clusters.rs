//! Stage one: lawnmower survey, detection sites, k-means regions of interest.
//!
//! Run with `RUST_LOG=info` to see the survey mission's progress.

use aquaplan::envsim::{EnvField, GaussianBump, OccurrenceField, WaterReading};
use aquaplan::nav::{run_mission, PidGains, SimConfig};
use aquaplan::survey::{build_rois, kmeans, select_sites, zigzag_path, KMeansConfig, LaneAxis, Workspace};
use aquaplan::LocalPoint;

fn main() -> aquaplan::Result<()> {
    env_logger::init();
    let ws = Workspace::new(0.0, 300.0, 0.0, 200.0)?;
    let mut env = EnvField::uniform(WaterReading { ph: 7.2, temp_c: 20.0, tds_ppm: 320.0, do_mgl: 7.5 });
    for (e, n) in [(70.0, 60.0), (230.0, 140.0), (220.0, 40.0)] {
        env.temp_c.bumps.push(GaussianBump { center: LocalPoint::new(e, n), amplitude: 6.0, length_scale: 20.0 });
    }
    let occ = OccurrenceField { weights: [0.0, 1.2, 0.0, 0.0], intercept: -27.0 };

    let zz = zigzag_path(&ws, 20.0, LaneAxis::North, LocalPoint::ORIGIN)?;
    println!("zigzag: {} lanes at {:.1} m, {:.0} m long", zz.lanes, zz.lane_spacing, zz.path.length());

    let run = run_mission(&zz.path, &SimConfig::default(), &PidGains::default(), &env, &occ, &[], 42)?;
    let events: Vec<_> = run.records.iter().map(|r| r.event()).collect();
    let hits = events.iter().filter(|e| e.detected).count();
    println!("survey {}: {} samples, {hits} detections", run.log.status.as_str(), events.len());

    let sites = select_sites(&events, 4.0, 20.0, &ws)?;
    println!("{} cells with more than 4 detections", sites.points.len());

    let clustering = kmeans(&sites.points, &KMeansConfig::new(3, 7))?;
    println!("k-means: inertia {:.1} after {} iterations", clustering.inertia, clustering.iterations);
    for roi in build_rois(&clustering, &sites.points, 5.0)? {
        let c = roi.circle;
        println!(
            "  ROI {}: {} sites, center ({:.1}, {:.1}), r = {:.1} m",
            roi.cluster_id,
            roi.members.len(),
            c.center.east,
            c.center.north,
            c.radius
        );
    }
    Ok(())
}
