use std::f64::consts::PI;

use aquaplan::envsim::{DetectionEvent, EnvSample, WaterReading};
use aquaplan::geo::{dist, point_polyline_distance, smallest_enclosing_circle, to_geo, to_local, Circle, GeoPoint, LocalPoint};
use aquaplan::nav::{los_heading, wrap_angle};
use aquaplan::predictor::{align_labels, fit, stratified_folds, FitOptions, LabeledDataset, LabeledRow, LogisticModel};
use aquaplan::route::cover_circle;
use aquaplan::survey::{zigzag_path, LaneAxis, Workspace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn local() -> impl Strategy<Value = LocalPoint> {
    (-500.0..500.0f64, -500.0..500.0f64).prop_map(|(e, n)| LocalPoint::new(e, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn enclosing_circle_contains_every_point(pts in prop::collection::vec(local(), 1..40)) {
        let c = smallest_enclosing_circle(&pts).unwrap();
        for p in &pts {
            prop_assert!(dist(*p, c.center) <= c.radius);
        }
    }

    #[test]
    fn projection_round_trips(lat in -60.0..60.0f64, lon in -179.0..179.0f64, e in -5000.0..5000.0f64, n in -5000.0..5000.0f64) {
        let origin = GeoPoint::new(lat, lon).unwrap();
        let p = LocalPoint::new(e, n);
        let back = to_local(to_geo(p, origin).unwrap(), origin).unwrap();
        prop_assert!(dist(p, back) < 1e-6);
    }

    #[test]
    fn distance_is_symmetric(a in local(), b in local()) {
        prop_assert_eq!(dist(a, b), dist(b, a));
    }

    #[test]
    fn reverse_bearing_differs_by_pi(a in local(), b in local()) {
        prop_assume!(dist(a, b) > 1e-6);
        let fwd = los_heading(a, b).unwrap();
        let back = los_heading(b, a).unwrap();
        prop_assert!(wrap_angle(fwd - wrap_angle(back + PI)).abs() < 1e-12);
        prop_assert!(fwd > -PI && fwd <= PI);
    }

    #[test]
    fn probability_stays_open(
        w in prop::collection::vec(-1e3..1e3f64, 4),
        w0 in -1e4..1e4f64,
        x in prop::collection::vec(-1e3..1e3f64, 4),
    ) {
        let m = LogisticModel::from_raw(LabeledDataset::water_feature_names(), w, w0);
        let p = m.predict_proba(&x).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn positive_labels_trace_to_events(
        sample_dt in prop::collection::vec(0.05..3.0f64, 1..60),
        event_t in prop::collection::vec((0.0..100.0f64, any::<bool>()), 0..40),
        tol in 0.0..1.0f64,
    ) {
        let mut t = 0.0;
        let samples: Vec<EnvSample> = sample_dt
            .iter()
            .map(|dt| {
                t += dt;
                EnvSample { t, pos: LocalPoint::ORIGIN, reading: WaterReading { ph: 7.0, temp_c: 20.0, tds_ppm: 300.0, do_mgl: 8.0 } }
            })
            .collect();
        let events: Vec<DetectionEvent> =
            event_t.iter().map(|&(t, detected)| DetectionEvent { t, pos: LocalPoint::ORIGIN, detected }).collect();
        let (data, stats) = align_labels(&samples, &events, tol);
        let positive_events = events.iter().filter(|e| e.detected).count();
        prop_assert_eq!(data.len(), samples.len());
        prop_assert!(data.positives() <= positive_events);
        prop_assert_eq!(stats.matched + stats.unmatched, positive_events);
        prop_assert_eq!(stats.matched, data.positives());
        for row in data.rows.iter().filter(|r| r.label) {
            prop_assert!(events.iter().any(|e| e.detected && (e.t - row.t).abs() <= tol));
        }
    }

    #[test]
    fn zigzag_reaches_every_point(
        w in 10.0..400.0f64,
        h in 10.0..400.0f64,
        spacing in 5.0..80.0f64,
        north_lanes in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let ws = Workspace::new(0.0, w, 0.0, h).unwrap();
        let axis = if north_lanes { LaneAxis::North } else { LaneAxis::East };
        let z = zigzag_path(&ws, spacing, axis, LocalPoint::ORIGIN).unwrap();
        let path = z.path.points();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let p = LocalPoint::new(rng.random_range(0.0..=w), rng.random_range(0.0..=h));
            prop_assert!(point_polyline_distance(p, &path) <= spacing / 2.0 + 1e-9);
        }
    }

    #[test]
    fn coverage_starts_and_ends_on_the_rim(
        center in local(),
        radius in 1.0..200.0f64,
        lanes in 2usize..20,
        entry in local(),
    ) {
        let cov = cover_circle(&Circle { center, radius }, lanes, entry).unwrap();
        let first = *cov.waypoints.first().unwrap();
        let last = *cov.waypoints.last().unwrap();
        prop_assert!((dist(first, center) - radius).abs() < 1e-9 * radius.max(1.0));
        prop_assert!((dist(last, center) - radius).abs() < 1e-9 * radius.max(1.0));
        for p in &cov.waypoints {
            prop_assert!(dist(*p, center) <= radius * (1.0 + 1e-12));
        }
    }

    #[test]
    fn folds_partition_rows(labels in prop::collection::vec(any::<bool>(), 2..200), k in 2usize..10, seed in any::<u64>()) {
        prop_assume!(labels.len() >= k);
        let folds = stratified_folds(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

#[test]
fn weight_norm_shrinks_with_c() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rows: Vec<LabeledRow> = (0..400)
        .map(|i| {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let z = 1.5 * x[0] - 0.7 * x[1] + 0.2;
            let label = rng.random::<f64>() < 1.0 / (1.0 + (-z).exp());
            LabeledRow { features: x, label, pos: LocalPoint::ORIGIN, t: i as f64 }
        })
        .collect();
    let data = LabeledDataset::new(vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
    let mut last = f64::INFINITY;
    for c in [10.0, 1.0, 0.1, 0.01] {
        let r = fit(&data, &FitOptions { c, ..FitOptions::default() }).unwrap();
        assert!(r.converged);
        // The penalty acts on standardized weights.
        let norm = r.model.w.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm <= last + 1e-9, "C = {c}: |w| = {norm} after {last}");
        last = norm;
    }
}
