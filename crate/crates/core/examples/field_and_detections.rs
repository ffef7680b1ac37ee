//! A synthetic lake: water-quality field, planted occurrence model, sonar draws.

use aquaplan::envsim::{detect, occurrence_prob, EnvField, GaussianBump, OccurrenceField, WaterReading};
use aquaplan::LocalPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut env = EnvField::uniform(WaterReading { ph: 7.2, temp_c: 20.0, tds_ppm: 320.0, do_mgl: 7.5 });
    env.temp_c.bumps.push(GaussianBump { center: LocalPoint::new(100.0, 80.0), amplitude: 6.0, length_scale: 25.0 });
    env.seed = 1;

    // Warm water attracts fish.
    let occ = OccurrenceField { weights: [0.0, 1.2, 0.0, 0.0], intercept: -27.0 };

    println!("{:>8} {:>8} {:>8}", "east_m", "temp_c", "F(x)");
    for east in (0..=200).step_by(25) {
        let p = LocalPoint::new(east as f64, 80.0);
        println!("{east:>8} {:>8.3} {:>8.4}", env.eval(p).temp_c, occurrence_prob(&occ, &env, p));
    }

    let mut sampler = env.sampler();
    let s = sampler.sample(LocalPoint::new(100.0, 80.0), 0.0);
    println!("noisy reading at the bump: {:?}", s.reading);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (label, pos) in [("bump", LocalPoint::new(100.0, 80.0)), ("shore", LocalPoint::new(0.0, 0.0))] {
        let hits = (0..1000).filter(|&i| detect(&occ, &env, pos, i as f64, &mut rng).detected).count();
        println!("{label}: {hits}/1000 detections, F = {:.4}", occurrence_prob(&occ, &env, pos));
    }
}
