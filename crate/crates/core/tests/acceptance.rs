//! End-to-end acceptance gates, one line per criterion.
//!
//! Runs without the libtest harness so the report prints in order.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use aquaplan::envsim::{EnvField, OccurrenceField, WaterReading};
use aquaplan::geo::{dist, smallest_enclosing_circle, Circle, LocalPoint};
use aquaplan::nav::{run_mission, MissionStatus, PidGains, SimConfig, ThrusterFailure};
use aquaplan::numeric::sigmoid;
use aquaplan::pipeline::{cmd_demo, ScenarioConfig};
use aquaplan::predictor::{
    evaluate, fit, kfold, stratified_folds, ConfusionMatrix, FitOptions, LabeledDataset, LabeledRow, LogisticModel,
    LogisticObjective,
};
use aquaplan::route::{cover_circle, held_karp, nearest_neighbor, tour_length, two_opt, MissionPath, WaypointTag};
use aquaplan::survey::{kmeans, kmeans_run, KMeansConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Name, time budget in seconds, check.
type Criterion<'a> = (&'a str, f64, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Vec<LocalPoint> {
    (0..n).map(|_| LocalPoint::new(rng.random_range(0.0..span), rng.random_range(0.0..span))).collect()
}

fn brute_circle(pts: &[LocalPoint]) -> f64 {
    let covers = |c: &Circle| pts.iter().all(|p| dist(*p, c.center) <= c.radius * (1.0 + 1e-12) + 1e-12);
    let mut best = if pts.len() == 1 { 0.0 } else { f64::INFINITY };
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let c = Circle { center: pts[i].midpoint(pts[j]), radius: dist(pts[i], pts[j]) / 2.0 };
            if c.radius < best && covers(&c) {
                best = c.radius;
            }
            for k in j + 1..pts.len() {
                let (a, b, cc) = (pts[i], pts[j], pts[k]);
                let ab = b - a;
                let ac = cc - a;
                let d = 2.0 * ab.cross(ac);
                if d.abs() < 1e-12 {
                    continue;
                }
                let center = a + LocalPoint::new(
                    (ac.north * ab.dot(ab) - ab.north * ac.dot(ac)) / d,
                    (ab.east * ac.dot(ac) - ac.east * ab.dot(ab)) / d,
                );
                let circle = Circle { center, radius: dist(center, a) };
                if circle.radius < best && covers(&circle) {
                    best = circle.radius;
                }
            }
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut contained = true;
    for _ in 0..200 {
        let n = rng.random_range(1..=50);
        let pts = random_points(&mut rng, n, 100.0);
        let c = smallest_enclosing_circle(&pts).unwrap();
        worst = worst.max((c.radius - brute_circle(&pts)).abs());
        contained &= pts.iter().all(|p| dist(*p, c.center) <= c.radius);
    }
    outcome(worst <= 1e-9 && contained, format!("200 sets, max |r - brute| = {worst:.2e}, containment {contained}"))
}

fn exhaustive_inertia(pts: &[LocalPoint], k: usize) -> f64 {
    let n = pts.len();
    let total = k.pow(n as u32);
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    for code in 0..total {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % k;
            c /= k;
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in pts.iter().zip(&labels) {
            sums[l].0 += p.east;
            sums[l].1 += p.north;
            sums[l].2 += 1;
        }
        let means: Vec<LocalPoint> =
            sums.iter().map(|s| if s.2 > 0 { LocalPoint::new(s.0 / s.2 as f64, s.1 / s.2 as f64) } else { LocalPoint::ORIGIN }).collect();
        let inertia: f64 = pts.iter().zip(&labels).map(|(p, &l)| (*p - means[l]).dot(*p - means[l])).sum();
        best = best.min(inertia);
    }
    best
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut monotone = true;
    for run in 0..100 {
        let n = rng.random_range(10..=120);
        let k = rng.random_range(1..=6);
        let pts = random_points(&mut rng, n, 50.0);
        let c = kmeans_run(&pts, k, 300, 0.0, &mut ChaCha8Rng::seed_from_u64(run)).unwrap();
        monotone &= c.inertia_history.windows(2).all(|w| w[1] <= w[0]);
    }
    let mut worst = 0.0f64;
    for inst in 0..20 {
        let n = rng.random_range(3..=12);
        let pts = random_points(&mut rng, n, 10.0);
        let got = kmeans(&pts, &KMeansConfig::new(3, inst)).unwrap().inertia;
        worst = worst.max((got - exhaustive_inertia(&pts, 3)).abs());
    }
    outcome(
        monotone && worst <= 1e-9,
        format!("100 runs monotone {monotone}; 20 tiny instances max |best-of-restarts - exhaustive| = {worst:.2e}"),
    )
}

fn permutations_min(centers: &[LocalPoint], start: LocalPoint) -> f64 {
    fn rec(centers: &[LocalPoint], start: LocalPoint, order: &mut Vec<usize>, used: &mut [bool], best: &mut f64) {
        if order.len() == centers.len() {
            *best = best.min(tour_length(centers, start, order));
            return;
        }
        for i in 0..centers.len() {
            if !used[i] {
                used[i] = true;
                order.push(i);
                rec(centers, start, order, used, best);
                order.pop();
                used[i] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(centers, start, &mut Vec::new(), &mut vec![false; centers.len()], &mut best);
    best
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=9);
        let pts = random_points(&mut rng, n, 500.0);
        let start = LocalPoint::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0));
        let hk = held_karp(&pts, start).unwrap();
        worst = worst.max((hk.length - permutations_min(&pts, start)).abs());
    }
    let mut within = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        let pts = random_points(&mut rng, n, 500.0);
        let start = LocalPoint::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0));
        let exact = held_karp(&pts, start).unwrap().length;
        let nn = nearest_neighbor(&pts, start).unwrap();
        let heur = two_opt(&pts, start, nn.order).length;
        if heur <= 1.05 * exact + 1e-9 {
            within += 1;
        }
    }
    outcome(
        worst <= 1e-9 && within >= 95,
        format!("Held-Karp max |diff| vs permutations = {worst:.2e} (50 instances); 2-opt within 5% on {within}/100"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pass = true;
    let mut worst_ratio = 0.0f64;
    let mut worst_endpoint = 0.0f64;
    for (radius, entry) in [(30.0, LocalPoint::new(-100.0, 20.0)), (12.5, LocalPoint::new(40.0, 90.0)), (75.0, LocalPoint::new(0.0, -300.0))] {
        let circle = Circle { center: LocalPoint::new(10.0, -5.0), radius };
        let cov = cover_circle(&circle, 8, entry).unwrap();
        let half = cov.lane_spacing / 2.0;
        for w in &cov.waypoints {
            worst_endpoint = worst_endpoint.max((dist(*w, circle.center) - radius).abs());
        }
        for _ in 0..10_000 {
            let r = radius * rng.random::<f64>().sqrt();
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let p = circle.center + LocalPoint::new(r * a.cos(), r * a.sin());
            let d = aquaplan::geo::point_polyline_distance(p, &cov.waypoints);
            worst_ratio = worst_ratio.max(d / cov.lane_spacing);
            pass &= d <= half;
        }
    }
    pass &= worst_endpoint <= 1e-9;
    outcome(
        pass,
        format!("3 circles x 10000 points, max distance {worst_ratio:.4} x spacing (limit 0.5); endpoint error {worst_endpoint:.2e}"),
    )
}

fn planted_rows(rng: &mut ChaCha8Rng, n: usize, w: &[f64; 4], w0: f64) -> Vec<LabeledRow> {
    let ph = Normal::new(7.2, 0.3).unwrap();
    let tds = Normal::new(320.0, 30.0).unwrap();
    let dox = Normal::new(7.5, 0.5).unwrap();
    (0..n)
        .map(|i| {
            let x = vec![ph.sample(rng), rng.random_range(18.0..28.0), tds.sample(rng), dox.sample(rng)];
            let z: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w0;
            LabeledRow { label: rng.random::<f64>() < sigmoid(z), features: x, pos: LocalPoint::ORIGIN, t: i as f64 }
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Finite-difference gradient check.
    let x: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<bool> = (0..300).map(|_| rng.random_bool(0.35)).collect();
    let obj = LogisticObjective::new(x, &y, 1.0);
    let h = 1e-5;
    let mut worst_rel = 0.0f64;
    for _ in 0..20 {
        let params: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = obj.gradient(&params);
        let mut diff2 = 0.0;
        for j in 0..5 {
            let mut up = params.clone();
            let mut dn = params.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (obj.cost(&up) - obj.cost(&dn)) / (2.0 * h);
            diff2 += (fd - g[j]).powi(2);
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_rel = worst_rel.max(diff2.sqrt() / norm);
    }

    // Planted recovery.
    let w = [0.0, 1.2, 0.0, 0.0];
    let w0 = -27.6;
    let names = LabeledDataset::water_feature_names();
    let train = LabeledDataset::new(names.clone(), planted_rows(&mut rng, 5000, &w, w0)).unwrap();
    let test = LabeledDataset::new(names.clone(), planted_rows(&mut rng, 5000, &w, w0)).unwrap();
    let fitted = fit(&train, &FitOptions::default()).unwrap();
    let monotone = fitted.cost_history.windows(2).all(|c| c[1] <= c[0]);
    let acc = evaluate(&fitted.model, &test, 0.5).unwrap().accuracy;
    let planted = LogisticModel::from_raw(names, w.to_vec(), w0);
    let bayes = evaluate(&planted, &test, 0.5).unwrap().accuracy;
    let gap = (bayes - acc).abs();
    outcome(
        worst_rel < 1e-6 && monotone && fitted.converged && gap <= 0.02,
        format!(
            "FD rel err {worst_rel:.2e}; cost monotone {monotone} over {} steps; held-out acc {acc:.4} vs Bayes {bayes:.4} (gap {:.2} pts)",
            fitted.iterations,
            100.0 * gap
        ),
    )
}

fn seven_waypoints() -> MissionPath {
    let pts = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (-100.0, 100.0), (-100.0, -50.0), (50.0, -100.0), (150.0, -50.0)];
    let pts: Vec<LocalPoint> = pts.iter().map(|&(e, n)| LocalPoint::new(e, n)).collect();
    MissionPath::from_points(&pts, WaypointTag::Coverage).unwrap()
}

fn cross_track(p: LocalPoint, a: LocalPoint, b: LocalPoint) -> f64 {
    let d = b - a;
    ((p - a).cross(d) / d.norm()).abs()
}

fn criterion_6() -> Outcome {
    let path = seven_waypoints();
    let cfg = SimConfig::default();
    let gains = PidGains::default();
    let env = EnvField::uniform(WaterReading { ph: 7.0, temp_c: 20.0, tds_ppm: 300.0, do_mgl: 8.0 });
    let occ = OccurrenceField { weights: [0.0; 4], intercept: 0.0 };
    let base = run_mission(&path, &cfg, &gains, &env, &occ, &[], 6).unwrap();
    let in_order = base.log.reached.iter().map(|r| r.0).eq(0..7);
    let completed = base.log.status == MissionStatus::Completed && in_order;

    // 200 m leg from waypoint 2 to 3, after a 90 degree turn.
    let (a, b) = (path.points()[2], path.points()[3]);
    let leg: Vec<_> = base.log.points.iter().filter(|p| p.wp_index == 3).collect();
    let final_xte = leg.last().map_or(f64::INFINITY, |p| cross_track(p.state.pos, a, b));

    let duration = base.log.points.last().unwrap().state.t;
    let dwell = cfg.reorientation_time();
    let mut survived = 0;
    let mut dwell_ok = 0;
    for i in 0..20 {
        let t = duration * (i as f64 + 0.5) / 20.0;
        let fail = [ThrusterFailure { t, thruster: i % 2 }];
        let run = run_mission(&path, &cfg, &gains, &env, &occ, &fail, 6).unwrap();
        if run.log.status == MissionStatus::Completed && run.log.reached.len() == 7 {
            survived += 1;
        }
        if (run.log.longest_hold() - dwell).abs() <= cfg.dt {
            dwell_ok += 1;
        }
    }
    outcome(
        completed && final_xte < 0.5 && survived == 20 && dwell_ok == 20,
        format!(
            "7 waypoints in order {completed}; 200 m leg final cross-track {final_xte:.3} m; failures survived {survived}/20, dwell {dwell:.3} s seen {dwell_ok}/20"
        ),
    )
}

fn criterion_7(out: &Path) -> Outcome {
    let cfg = ScenarioConfig::demo();
    match cmd_demo(&cfg, out, false) {
        Ok(s) => outcome(
            s.occurrence_gain >= 1.2,
            format!(
                "mean F stage 1 {:.4}, stage 2 {:.4}, ratio {:.3} (needs >= 1.2)",
                s.stage1_mean_occurrence, s.stage2_mean_occurrence, s.occurrence_gain
            ),
        ),
        Err(e) => outcome(false, format!("demo failed: {e}")),
    }
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn criterion_8(root: &Path) -> Outcome {
    let bin = env!("CARGO_BIN_EXE_aquaplan");
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let dir = root.join(name);
        let status = Command::new(bin)
            .args(["demo", "--seed", "42", "--out"])
            .arg(&dir)
            .env_remove("AQUAPLAN_OUT")
            .stdout(Stdio::null())
            .status();
        match status {
            Ok(s) if s.success() => trees.push(tree(&dir)),
            other => return outcome(false, format!("demo run {name} failed: {other:?}")),
        }
    }
    let same = trees[0] == trees[1];
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    outcome(same && !trees[0].is_empty(), format!("{} files, {bytes} bytes, identical {same}", trees[0].len()))
}

fn criterion_9() -> Outcome {
    // x = 0..9, predicted positive iff x >= 5.5: rows 6..9.
    let labels = [false, false, false, true, true, false, true, true, true, false];
    let rows: Vec<LabeledRow> = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| LabeledRow { features: vec![i as f64], label, pos: LocalPoint::ORIGIN, t: i as f64 })
        .collect();
    let data = LabeledDataset::new(vec!["x".into()], rows).unwrap();
    let model = LogisticModel::from_raw(vec!["x".into()], vec![1.0], -5.5);
    let r = evaluate(&model, &data, 0.5).unwrap();
    let fixture_ok = r.matrix == ConfusionMatrix { tp: 3, fp: 1, tn: 4, fn_: 2 } && r.precision == Some(0.75) && r.accuracy == 0.7;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let names = LabeledDataset::water_feature_names();
    let planted = LabeledDataset::new(names, planted_rows(&mut rng, 400, &[0.0, 1.2, 0.0, 0.0], -27.6)).unwrap();
    let cv = kfold(&planted, 5, 77, &FitOptions::default(), 0.5).unwrap();
    let mut pooled = ConfusionMatrix::default();
    for f in &cv.folds {
        pooled.tp += f.tp;
        pooled.fp += f.fp;
        pooled.tn += f.tn;
        pooled.fn_ += f.fn_;
    }
    let labels: Vec<bool> = planted.rows.iter().map(|r| r.label).collect();
    let fold_sizes: Vec<usize> = stratified_folds(&labels, 5, 77).unwrap().iter().map(Vec::len).collect();
    let recomputed = (pooled.tp + pooled.tn) as f64 / pooled.total() as f64;
    let pooled_ok = pooled == cv.matrix
        && cv.accuracy == recomputed
        && cv.precision == Some(pooled.tp as f64 / (pooled.tp + pooled.fp) as f64)
        && pooled.total() == planted.len()
        && fold_sizes.iter().max().unwrap() - fold_sizes.iter().min().unwrap() <= 1;
    outcome(
        fixture_ok && pooled_ok,
        format!(
            "fixture {:?} precision {:?} accuracy {}; k-fold pooled {:?} accuracy {:.4} matches {pooled_ok}",
            (r.matrix.tp, r.matrix.fp, r.matrix.tn, r.matrix.fn_),
            r.precision,
            r.accuracy,
            (pooled.tp, pooled.fp, pooled.tn, pooled.fn_),
            cv.accuracy
        ),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let scratch = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        ("enclosing-circle oracle", 10.0, Box::new(criterion_1)),
        ("k-means correctness", 30.0, Box::new(criterion_2)),
        ("TSP exactness", 60.0, Box::new(criterion_3)),
        ("circle coverage", f64::INFINITY, Box::new(criterion_4)),
        ("logistic regression", 60.0, Box::new(criterion_5)),
        ("navigation", 60.0, Box::new(criterion_6)),
        ("coarse-to-fine gain", 120.0, Box::new({
            let dir = scratch.path().join("gain");
            move || criterion_7(&dir)
        })),
        ("determinism", f64::INFINITY, Box::new({
            let dir = scratch.path().join("determinism");
            move || criterion_8(&dir)
        })),
        ("evaluation arithmetic", f64::INFINITY, Box::new(criterion_9)),
    ];
    let mut failures = 0;
    for (i, (name, budget_s, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let mut o = run();
        let secs = started.elapsed().as_secs_f64();
        if secs >= *budget_s {
            o.pass = false;
            o.detail.push_str(&format!("; over the {budget_s:.0} s budget"));
        }
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {name}: {} ({secs:.2} s)", i + 1, o.detail);
        failures += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
