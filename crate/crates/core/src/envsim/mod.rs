//! Synthetic water body: smooth water-parameter fields, a planted
//! fish-occurrence probability and stochastic sonar detections.

mod logfile;

pub use self::logfile::{export_log, ingest_log, read_log, write_log, IngestedLog, LogRecord, LOG_HEADER};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{dist, LocalPoint};
use crate::numeric::sigmoid;

/// Feature order used everywhere a reading becomes a vector.
pub const FEATURE_NAMES: [&str; 4] = ["ph", "temp_c", "tds_ppm", "do_mgl"];

/// One set of water-quality readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaterReading {
    pub ph: f64,
    pub temp_c: f64,
    pub tds_ppm: f64,
    pub do_mgl: f64,
}

impl WaterReading {
    pub fn features(&self) -> [f64; 4] {
        [self.ph, self.temp_c, self.tds_ppm, self.do_mgl]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in FEATURE_NAMES.iter().zip(self.features()) {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} is not finite")));
            }
        }
        if !(0.0..=14.0).contains(&self.ph) {
            return Err(Error::domain(format!("ph {} outside [0, 14]", self.ph)));
        }
        Ok(())
    }
}

/// A timestamped, positioned reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvSample {
    pub t: f64,
    pub pos: LocalPoint,
    pub reading: WaterReading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub t: f64,
    pub pos: LocalPoint,
    pub detected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBump {
    pub center: LocalPoint,
    pub amplitude: f64,
    pub length_scale: f64,
}

/// Baseline plus a sum of isotropic Gaussian bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamField {
    pub baseline: f64,
    #[serde(default)]
    pub bumps: Vec<GaussianBump>,
}

impl ParamField {
    pub fn constant(baseline: f64) -> Self {
        ParamField { baseline, bumps: Vec::new() }
    }

    pub fn value(&self, pos: LocalPoint) -> f64 {
        self.bumps.iter().fold(self.baseline, |acc, b| {
            let d = dist(pos, b.center) / b.length_scale;
            acc + b.amplitude * (-0.5 * d * d).exp()
        })
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !self.baseline.is_finite() {
            return Err(Error::domain(format!("{name}: baseline is not finite")));
        }
        for (i, b) in self.bumps.iter().enumerate() {
            if !(b.length_scale > 0.0 && b.length_scale.is_finite()) {
                return Err(Error::domain(format!("{name}.bumps[{i}]: length_scale must be > 0")));
            }
            if !b.amplitude.is_finite() || !b.center.is_finite() {
                return Err(Error::domain(format!("{name}.bumps[{i}]: non-finite value")));
            }
        }
        Ok(())
    }
}

/// Additive Gaussian sensor noise, one standard deviation per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseStd {
    pub ph: f64,
    pub temp_c: f64,
    pub tds_ppm: f64,
    pub do_mgl: f64,
}

impl Default for NoiseStd {
    fn default() -> Self {
        NoiseStd { ph: 0.05, temp_c: 0.1, tds_ppm: 5.0, do_mgl: 0.1 }
    }
}

impl NoiseStd {
    pub const ZERO: NoiseStd = NoiseStd { ph: 0.0, temp_c: 0.0, tds_ppm: 0.0, do_mgl: 0.0 };

    fn as_array(&self) -> [f64; 4] {
        [self.ph, self.temp_c, self.tds_ppm, self.do_mgl]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvField {
    pub ph: ParamField,
    pub temp_c: ParamField,
    pub tds_ppm: ParamField,
    pub do_mgl: ParamField,
    #[serde(default)]
    pub noise: NoiseStd,
    #[serde(default)]
    pub seed: u64,
}

impl EnvField {
    /// A spatially constant field with default noise.
    pub fn uniform(reading: WaterReading) -> Self {
        EnvField {
            ph: ParamField::constant(reading.ph),
            temp_c: ParamField::constant(reading.temp_c),
            tds_ppm: ParamField::constant(reading.tds_ppm),
            do_mgl: ParamField::constant(reading.do_mgl),
            noise: NoiseStd::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ph.validate("ph")?;
        self.temp_c.validate("temp_c")?;
        self.tds_ppm.validate("tds_ppm")?;
        self.do_mgl.validate("do_mgl")?;
        for (name, s) in FEATURE_NAMES.iter().zip(self.noise.as_array()) {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::domain(format!("noise.{name} must be >= 0")));
            }
        }
        Ok(())
    }

    fn params(&self) -> [&ParamField; 4] {
        [&self.ph, &self.temp_c, &self.tds_ppm, &self.do_mgl]
    }

    /// Noise-free field values at `pos`.
    pub fn eval(&self, pos: LocalPoint) -> WaterReading {
        let [ph, temp_c, tds_ppm, do_mgl] = self.params().map(|f| f.value(pos));
        WaterReading { ph, temp_c, tds_ppm, do_mgl }
    }

    /// Field values plus seeded sensor noise drawn from `rng`. pH is clamped to [0, 14].
    pub fn eval_noisy<R: Rng + ?Sized>(&self, pos: LocalPoint, rng: &mut R) -> WaterReading {
        let clean = self.eval(pos).features();
        let noise = self.noise.as_array();
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = clean[i] + gaussian(rng, noise[i]);
        }
        WaterReading { ph: out[0].clamp(0.0, 14.0), temp_c: out[1], tds_ppm: out[2], do_mgl: out[3] }
    }

    /// Stateful noisy sampler seeded from this field's `seed`.
    pub fn sampler(&self) -> FieldSampler<'_> {
        FieldSampler { field: self, rng: ChaCha8Rng::seed_from_u64(self.seed) }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std).expect("validated std").sample(rng)
}

/// Noisy field reader. Identical query sequences give bit-identical readings.
pub struct FieldSampler<'a> {
    field: &'a EnvField,
    rng: ChaCha8Rng,
}

impl FieldSampler<'_> {
    pub fn sample(&mut self, pos: LocalPoint, t: f64) -> EnvSample {
        EnvSample { t, pos, reading: self.field.eval_noisy(pos, &mut self.rng) }
    }
}

/// Planted ground truth: `F(x) = sigmoid(w · f(x) + w0)` over raw readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccurrenceField {
    pub weights: [f64; 4],
    pub intercept: f64,
}

impl OccurrenceField {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().chain([&self.intercept]).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::domain("occurrence weights must be finite"))
        }
    }

    pub fn prob_from_reading(&self, reading: &WaterReading) -> f64 {
        let z: f64 = self.weights.iter().zip(reading.features()).map(|(w, x)| w * x).sum();
        sigmoid(z + self.intercept)
    }
}

/// True occurrence probability at `pos`, always in (0, 1).
pub fn occurrence_prob(occ: &OccurrenceField, env: &EnvField, pos: LocalPoint) -> f64 {
    occ.prob_from_reading(&env.eval(pos))
}

/// One Bernoulli sonar draw at `pos`.
pub fn detect<R: Rng + ?Sized>(
    occ: &OccurrenceField,
    env: &EnvField,
    pos: LocalPoint,
    t: f64,
    rng: &mut R,
) -> DetectionEvent {
    let p = occurrence_prob(occ, env, pos);
    DetectionEvent { t, pos, detected: rng.random::<f64>() < p }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calm() -> WaterReading {
        WaterReading { ph: 7.0, temp_c: 20.0, tds_ppm: 300.0, do_mgl: 8.0 }
    }

    fn one_bump(amplitude: f64, length_scale: f64) -> EnvField {
        let mut f = EnvField::uniform(calm());
        f.temp_c.bumps.push(GaussianBump { center: LocalPoint::new(10.0, -5.0), amplitude, length_scale });
        f
    }

    #[test]
    fn constant_field_everywhere() {
        let f = EnvField::uniform(calm());
        for p in [LocalPoint::ORIGIN, LocalPoint::new(1e3, -7.5)] {
            assert_eq!(f.eval(p).ph, 7.0);
        }
    }

    #[test]
    fn bump_peak_and_three_sigma() {
        let f = one_bump(4.0, 12.0);
        assert_eq!(f.eval(LocalPoint::new(10.0, -5.0)).temp_c, 24.0);
        let at3 = f.eval(LocalPoint::new(10.0 + 36.0, -5.0)).temp_c;
        assert!((at3 - (20.0 + 4.0 * (-4.5f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn gradient_converges_second_order() {
        let f = one_bump(4.0, 12.0);
        let p = LocalPoint::new(3.0, 2.0);
        // Analytic d/d(east) of the bump.
        let d = p - LocalPoint::new(10.0, -5.0);
        let exact = 4.0 * (-(d.dot(d)) / 288.0).exp() * (-d.east / 144.0);
        let err = |h: f64| {
            let fd = (f.eval(p + LocalPoint::new(h, 0.0)).temp_c - f.eval(p - LocalPoint::new(h, 0.0)).temp_c) / (2.0 * h);
            (fd - exact).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn sampler_is_reproducible() {
        let f = one_bump(4.0, 12.0);
        let pts: Vec<_> = (0..50).map(|i| LocalPoint::new(i as f64, 0.5 * i as f64)).collect();
        let a: Vec<_> = { let mut s = f.sampler(); pts.iter().map(|&p| s.sample(p, 0.0)).collect() };
        let b: Vec<_> = { let mut s = f.sampler(); pts.iter().map(|&p| s.sample(p, 0.0)).collect() };
        assert_eq!(a, b);
        assert!(a.iter().any(|s| s.reading != f.eval(s.pos)));
    }

    #[test]
    fn occurrence_reference_values() {
        let env = EnvField::uniform(calm());
        let zero = OccurrenceField { weights: [0.0; 4], intercept: 0.0 };
        assert_eq!(occurrence_prob(&zero, &env, LocalPoint::ORIGIN), 0.5);
        let three = OccurrenceField { weights: [0.0; 4], intercept: 3f64.ln() };
        assert!((occurrence_prob(&three, &env, LocalPoint::ORIGIN) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn occurrence_increases_with_positively_weighted_parameter() {
        let env = one_bump(4.0, 12.0);
        let occ = OccurrenceField { weights: [0.0, 0.8, 0.0, 0.0], intercept: -16.0 };
        let center = LocalPoint::new(10.0, -5.0);
        // Moving toward the bump raises temperature and therefore probability.
        let mut last = 0.0;
        for k in (0..20).rev() {
            let p = occurrence_prob(&occ, &env, center + LocalPoint::new(k as f64 * 2.0, 0.0));
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn detection_extremes_and_frequency() {
        let env = EnvField::uniform(calm());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sure = OccurrenceField { weights: [0.0; 4], intercept: 50.0 };
        let never = OccurrenceField { weights: [0.0; 4], intercept: -50.0 };
        let half = OccurrenceField { weights: [0.0; 4], intercept: 0.0 };
        for _ in 0..1000 {
            assert!(detect(&sure, &env, LocalPoint::ORIGIN, 0.0, &mut rng).detected);
            assert!(!detect(&never, &env, LocalPoint::ORIGIN, 0.0, &mut rng).detected);
        }
        let hits = (0..10_000).filter(|_| detect(&half, &env, LocalPoint::ORIGIN, 0.0, &mut rng).detected).count();
        let rate = hits as f64 / 10_000.0;
        assert!((0.48..=0.52).contains(&rate), "rate {rate}");
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut f = one_bump(1.0, 0.0);
        assert!(f.validate().is_err());
        f.temp_c.bumps[0].length_scale = 5.0;
        f.noise.tds_ppm = -1.0;
        assert!(f.validate().is_err());
    }
}
