//! Stage-two route: order ROIs, cover each disk, check the budget, export GeoJSON.

use aquaplan::geo::{Circle, GeoPoint};
use aquaplan::route::{
    check_budget, mission_geojson, plan_coverage, stitch_mission, tsp_order, EnergyBudget, WaypointTag,
};
use aquaplan::survey::Roi;
use aquaplan::LocalPoint;

fn main() -> aquaplan::Result<()> {
    let rois: Vec<Roi> = [(60.0, 50.0, 15.0), (250.0, 70.0, 22.0), (180.0, 210.0, 12.0), (40.0, 230.0, 18.0)]
        .iter()
        .enumerate()
        .map(|(i, &(e, n, r))| {
            let center = LocalPoint::new(e, n);
            Roi { cluster_id: i, circle: Circle { center, radius: r }, members: vec![center] }
        })
        .collect();
    let start = LocalPoint::new(300.0, 0.0);
    let centers: Vec<LocalPoint> = rois.iter().map(|r| r.circle.center).collect();

    let tour = tsp_order(&centers, start)?;
    println!("tour {:?} ({:?}), {:.1} m between centers", tour.order, tour.method, tour.length);

    let plan = plan_coverage(&rois, &tour, start, 8)?;
    for cov in &plan.per_roi {
        println!("  ROI {}: {} waypoints, {:.1} m at {:.1} m spacing", cov.roi_id, cov.waypoints.len(), cov.length(), cov.lane_spacing);
    }
    let mission = stitch_mission(&tour, &plan, start)?;
    println!(
        "mission: {} waypoints, {:.1} m ({:.1} m transit)",
        mission.len(),
        mission.length(),
        mission.length_by_tag(WaypointTag::Transit)
    );

    for budget in [5000.0, 1500.0] {
        println!("budget {budget} m: {:?}", check_budget(&mission, EnergyBudget { max_length_m: budget }));
    }

    let origin = GeoPoint::new(22.3364, 114.2655)?;
    let geo = mission_geojson(&mission, &rois, origin)?;
    let features = geo["features"].as_array().map_or(0, Vec::len);
    println!("GeoJSON with {features} features");
    Ok(())
}
