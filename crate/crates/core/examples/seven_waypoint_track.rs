//! LOS guidance with PID heading control around a seven-point track, once
//! clean and once losing a thruster mid-run.

use aquaplan::envsim::{EnvField, OccurrenceField, WaterReading};
use aquaplan::geo::point_polyline_distance;
use aquaplan::nav::{run_mission, MissionRun, PidGains, SimConfig, ThrusterFailure};
use aquaplan::route::{MissionPath, WaypointTag};
use aquaplan::LocalPoint;

fn report(label: &str, path: &MissionPath, run: &MissionRun) {
    let pts = path.points();
    let worst = run.log.points.iter().map(|p| point_polyline_distance(p.state.pos, &pts)).fold(0.0, f64::max);
    let done = run.log.points.last().map_or(0.0, |p| p.state.t);
    println!(
        "{label}: {} in {done:.1} s, {}/{} waypoints, max cross-track {worst:.2} m, longest hold {:.2} s",
        run.log.status.as_str(),
        run.log.reached.len(),
        pts.len(),
        run.log.longest_hold()
    );
}

fn main() -> aquaplan::Result<()> {
    let track = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (-100.0, 100.0), (-100.0, -50.0), (50.0, -100.0), (150.0, -50.0)]
        .map(|(e, n)| LocalPoint::new(e, n));
    let path = MissionPath::from_points(&track, WaypointTag::Transit)?;
    let env = EnvField::uniform(WaterReading { ph: 7.0, temp_c: 22.0, tds_ppm: 300.0, do_mgl: 8.0 });
    let occ = OccurrenceField { weights: [0.0; 4], intercept: -3.0 };
    let (cfg, gains) = (SimConfig::default(), PidGains::default());

    let clean = run_mission(&path, &cfg, &gains, &env, &occ, &[], 1)?;
    report("clean", &path, &clean);
    for (i, t) in &clean.log.reached {
        println!("  waypoint {i} at {t:.1} s");
    }

    let failure = [ThrusterFailure { t: 120.0, thruster: 0 }];
    let degraded = run_mission(&path, &cfg, &gains, &env, &occ, &failure, 1)?;
    report("thruster 0 lost at 120 s", &path, &degraded);
    println!("expected reorientation dwell {:.3} s", cfg.reorientation_time());

    let noisy = run_mission(&path, &SimConfig::gps_mode(), &gains, &env, &occ, &[], 1)?;
    report("GPS noise", &path, &noisy);
    Ok(())
}
