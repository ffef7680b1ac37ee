//! Fish-occurrence learning: timestamp label alignment and L2-regularized
//! logistic regression, plus evaluation and probability surfaces.

mod eval;

pub use self::eval::{
    evaluate, kfold, stratified_folds, surface, write_surfaces_csv, ConfusionMatrix, EvalReport, ProbabilitySurface, SurfaceCell,
};

use serde::{Deserialize, Serialize};

use crate::envsim::{DetectionEvent, EnvSample, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::geo::LocalPoint;
use crate::numeric::{log_sigmoid, logit, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub features: Vec<f64>,
    pub label: bool,
    pub pos: LocalPoint,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<LabeledRow>) -> Result<Self> {
        let d = feature_names.len();
        for (i, r) in rows.iter().enumerate() {
            if r.features.len() != d {
                return Err(Error::domain(format!("row {i} has {} features, expected {d}", r.features.len())));
            }
            if r.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("row {i} has a missing or non-finite feature")));
            }
        }
        Ok(LabeledDataset { feature_names, rows })
    }

    pub fn water_feature_names() -> Vec<String> {
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label).count()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn filter(&self, keep: impl Fn(&LabeledRow) -> bool) -> LabeledDataset {
        LabeledDataset { feature_names: self.feature_names.clone(), rows: self.rows.iter().filter(|r| keep(r)).cloned().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignStats {
    pub positive_events: usize,
    pub matched: usize,
    pub unmatched: usize,
}

/// Labels samples from sonar events by timestamp.
///
/// Each positive event claims the sample nearest in time (earlier sample on
/// ties) if it lies within `tol` seconds and is not already claimed;
/// otherwise the event is counted as unmatched. Unclaimed samples get label 0.
pub fn align_labels(samples: &[EnvSample], events: &[DetectionEvent], tol: f64) -> (LabeledDataset, AlignStats) {
    let mut labels = vec![false; samples.len()];
    let mut stats = AlignStats::default();
    for e in events.iter().filter(|e| e.detected) {
        stats.positive_events += 1;
        // First sample at or after the event.
        let idx = samples.partition_point(|s| s.t < e.t);
        let mut best: Option<usize> = None;
        for cand in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
            if cand >= samples.len() {
                continue;
            }
            let d = (samples[cand].t - e.t).abs();
            if best.is_none_or(|b| d < (samples[b].t - e.t).abs()) {
                best = Some(cand);
            }
        }
        match best {
            Some(i) if (samples[i].t - e.t).abs() <= tol && !labels[i] => {
                labels[i] = true;
                stats.matched += 1;
            }
            _ => stats.unmatched += 1,
        }
    }
    let rows = samples
        .iter()
        .zip(labels)
        .map(|(s, label)| LabeledRow { features: s.reading.features().to_vec(), label, pos: s.pos, t: s.t })
        .collect();
    (LabeledDataset { feature_names: LabeledDataset::water_feature_names(), rows }, stats)
}

/// Binary logistic model over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub w: Vec<f64>,
    pub w0: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl LogisticModel {
    /// A model acting on raw features (identity standardization).
    pub fn from_raw(feature_names: Vec<String>, w: Vec<f64>, w0: f64) -> Self {
        let d = w.len();
        LogisticModel { feature_names, mean: vec![0.0; d], std: vec![1.0; d], w, w0, c: f64::INFINITY }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::domain(format!("feature vector has {} entries, model expects {}", x.len(), self.dim())));
        }
        Ok(x.iter()
            .zip(&self.w)
            .zip(self.mean.iter().zip(&self.std))
            .map(|((xi, wi), (m, s))| wi * (xi - m) / s)
            .sum::<f64>()
            + self.w0)
    }

    /// Occurrence probability, strictly inside (0, 1).
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.decision_value(x)?))
    }

    /// Natural log of the occurrence probability, exact in the tails.
    pub fn predict_log_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(log_sigmoid(self.decision_value(x)?))
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.mean.len() != d || self.std.len() != d || self.feature_names.len() != d {
            return Err(Error::domain("model vectors disagree in dimension"));
        }
        if self.w.iter().chain(&self.mean).chain([&self.w0]).any(|v| !v.is_finite()) {
            return Err(Error::domain("model parameters must be finite"));
        }
        if self.std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::domain("model std entries must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Inverse regularization strength multiplying the data term.
    pub c: f64,
    pub max_iter: usize,
    /// Convergence threshold on the gradient infinity-norm.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { c: 1.0, max_iter: 1000, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: LogisticModel,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective after every accepted step, starting from the initial point.
    pub cost_history: Vec<f64>,
}

fn expit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `C * sum(log loss) + ||w||^2 / 2` over a fixed design; the intercept is
/// the last parameter and is not penalized.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    c: f64,
}

impl LogisticObjective {
    pub fn new(x: Vec<Vec<f64>>, y: &[bool], c: f64) -> Self {
        LogisticObjective { x, y: y.iter().map(|&b| f64::from(u8::from(b))).collect(), c }
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    fn margins(&self, params: &[f64]) -> Vec<f64> {
        let d = self.dim();
        self.x.iter().map(|row| row.iter().zip(&params[..d]).map(|(a, b)| a * b).sum::<f64>() + params[d]).collect()
    }

    pub fn cost(&self, params: &[f64]) -> f64 {
        let d = self.dim();
        // -y log p - (1-y) log(1-p) = -log_sigmoid(-z) - y z
        let data: f64 = self.margins(params).iter().zip(&self.y).map(|(z, y)| -log_sigmoid(-z) - y * z).sum();
        let reg: f64 = params[..d].iter().map(|w| w * w).sum::<f64>() / 2.0;
        self.c * data + reg
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut g = vec![0.0; d + 1];
        for (row, (z, y)) in self.x.iter().zip(self.margins(params).iter().zip(&self.y)) {
            let r = self.c * (expit(*z) - y);
            for (gj, xj) in g.iter_mut().zip(row) {
                *gj += r * xj;
            }
            g[d] += r;
        }
        for j in 0..d {
            g[j] += params[j];
        }
        g
    }

    /// `cost(to) - cost(from)` without the cancellation of differencing two
    /// large totals.
    pub fn cost_delta(&self, from: &[f64], to: &[f64]) -> f64 {
        let d = self.dim();
        let z0 = self.margins(from);
        let step: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        // Margin changes come from the step itself, not z(to) - z(from).
        let dzs = self.margins(&step);
        let data: f64 = z0
            .iter()
            .zip(&dzs)
            .zip(&self.y)
            .map(|((a, &dz), y)| {
                let b = a + dz;
                // softplus(b) - softplus(a) = ln(1 + sigmoid(a) * (e^dz - 1))
                let ds = if dz > 30.0 { -log_sigmoid(-b) + log_sigmoid(-a) } else { (expit(*a) * dz.exp_m1()).ln_1p() };
                ds - y * dz
            })
            .sum();
        let reg: f64 = (0..d).map(|j| (to[j] - from[j]) * (to[j] + from[j])).sum::<f64>() / 2.0;
        self.c * data + reg
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking on standardized features.
pub fn fit(data: &LabeledDataset, opts: &FitOptions) -> Result<FitReport> {
    if !(opts.c > 0.0 && opts.c.is_finite()) {
        return Err(Error::domain("C must be > 0"));
    }
    let positives = data.positives();
    let negatives = data.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels { positives, negatives });
    }
    let d = data.feature_names.len();
    let n = data.len() as f64;

    let mut mean = vec![0.0; d];
    let mut std = vec![0.0; d];
    for j in 0..d {
        mean[j] = data.rows.iter().map(|r| r.features[j]).sum::<f64>() / n;
        let var = data.rows.iter().map(|r| (r.features[j] - mean[j]).powi(2)).sum::<f64>() / n;
        std[j] = var.sqrt();
        if !(std[j] > 1e-12 * (1.0 + mean[j].abs())) {
            log::warn!("feature {} is constant; it will carry no weight", data.feature_names[j]);
            std[j] = 1.0;
        }
    }
    let x: Vec<Vec<f64>> =
        data.rows.iter().map(|r| r.features.iter().zip(mean.iter().zip(&std)).map(|(v, (m, s))| (v - m) / s).collect()).collect();
    let y: Vec<bool> = data.rows.iter().map(|r| r.label).collect();
    let obj = LogisticObjective::new(x, &y, opts.c);

    let mut params = vec![0.0; d + 1];
    params[d] = logit(positives as f64 / n);
    let mut cost = obj.cost(&params);
    let mut grad = obj.gradient(&params);
    let mut history = vec![cost];
    // Lipschitz bound of the standardized problem: C n (d + 1) / 4 + 1.
    let mut step = 1.0 / (opts.c * n * (d as f64 + 1.0) / 4.0 + 1.0);
    let mut iterations = 0;
    let mut converged = inf_norm(&grad) < opts.tol;

    while !converged && iterations < opts.max_iter {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let mut t = step;
        let accepted = loop {
            let cand: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - t * g).collect();
            let delta = obj.cost_delta(&params, &cand);
            if delta <= -1e-4 * t * g2 {
                break Some((cand, delta));
            }
            t *= 0.5;
            if t < 1e-30 {
                break None;
            }
        };
        let Some((cand, delta)) = accepted else {
            log::warn!("line search stalled at gradient norm {:.3e}", inf_norm(&grad));
            break;
        };
        let next_grad = obj.gradient(&cand);
        let s: Vec<f64> = cand.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy > 0.0 { ss / sy } else { 2.0 * t };
        params = cand;
        grad = next_grad;
        cost += delta;
        history.push(cost);
        iterations += 1;
        converged = inf_norm(&grad) < opts.tol;
    }
    let grad_norm = inf_norm(&grad);
    if !converged {
        log::warn!("logistic fit did not converge: gradient norm {grad_norm:.3e} after {iterations} iterations");
    }
    let model = LogisticModel { feature_names: data.feature_names.clone(), mean, std, w: params[..d].to_vec(), w0: params[d], c: opts.c };
    Ok(FitReport { model, converged, iterations, grad_norm, cost_history: history })
}
