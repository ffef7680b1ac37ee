//! Fit the occurrence model on labelled readings and score it.

use aquaplan::envsim::{DetectionEvent, EnvSample, WaterReading};
use aquaplan::numeric::sigmoid;
use aquaplan::predictor::{align_labels, evaluate, fit, kfold, FitOptions};
use aquaplan::LocalPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn simulate(n: usize, seed: u64) -> (Vec<EnvSample>, Vec<DetectionEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let temp = Normal::new(22.0, 2.5).unwrap();
    let mut samples = Vec::with_capacity(n);
    let mut events = Vec::new();
    for i in 0..n {
        let t = i as f64;
        let reading = WaterReading {
            ph: rng.random_range(6.5..8.0),
            temp_c: temp.sample(&mut rng),
            tds_ppm: rng.random_range(250.0..400.0),
            do_mgl: rng.random_range(6.0..9.0),
        };
        let p = sigmoid(1.2 * (reading.temp_c - 22.0) - 0.5);
        let detected = rng.random::<f64>() < p;
        samples.push(EnvSample { t, pos: LocalPoint::ORIGIN, reading });
        // Sonar timestamps jitter slightly against the sensor clock.
        events.push(DetectionEvent { t: t + rng.random_range(-0.2..0.2), pos: LocalPoint::ORIGIN, detected });
    }
    (samples, events)
}

fn main() -> aquaplan::Result<()> {
    let (samples, events) = simulate(3000, 4);
    let (data, stats) = align_labels(&samples, &events, 0.5);
    println!("{} rows, {} positive ({} unmatched events)", data.len(), data.positives(), stats.unmatched);

    let (train, test): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|i| i % 3 != 0);
    let opts = FitOptions::default();
    let report = fit(&data.subset(&train), &opts)?;
    println!("converged = {} after {} iterations, |grad| = {:.1e}", report.converged, report.iterations, report.grad_norm);
    let m = &report.model;
    for (name, (w, s)) in m.feature_names.iter().zip(m.w.iter().zip(&m.std)) {
        println!("  {name:>8}: {w:+.3} per std, {:+.3} raw", w / s);
    }

    let held = evaluate(m, &data.subset(&test), 0.5)?;
    println!("held out: {:?}, accuracy {:.3}, precision {:?}", held.matrix, held.accuracy, held.precision);

    let cv = kfold(&data.subset(&train), 5, 7, &opts, 0.5)?;
    println!("5-fold accuracy {:.3}", cv.accuracy);

    let warm = [7.2, 26.0, 320.0, 7.5];
    println!("p(fish | 26 C) = {:.3}", m.predict_proba(&warm)?);
    println!("model json: {}", serde_json::to_string(m).unwrap_or_default());
    Ok(())
}
