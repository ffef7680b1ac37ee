use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fit, FitOptions, LabeledDataset, LogisticModel};
use crate::envsim::EnvField;
use crate::error::{Error, Result};
use crate::geo::LocalPoint;
use crate::survey::Roi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `None` when nothing was predicted positive.
    pub fn precision(&self) -> Option<f64> {
        let predicted = self.tp + self.fp;
        (predicted > 0).then(|| self.tp as f64 / predicted as f64)
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    fn add(&mut self, o: &ConfusionMatrix) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matrix: ConfusionMatrix,
    pub precision: Option<f64>,
    pub accuracy: f64,
    /// Per-fold matrices for cross-validation; empty otherwise.
    pub folds: Vec<ConfusionMatrix>,
}

impl EvalReport {
    fn from_matrix(matrix: ConfusionMatrix, folds: Vec<ConfusionMatrix>) -> Self {
        EvalReport { precision: matrix.precision(), accuracy: matrix.accuracy(), matrix, folds }
    }
}

/// Confusion counts with the positive class predicted when `p >= threshold`.
pub fn evaluate(model: &LogisticModel, test: &LabeledDataset, threshold: f64) -> Result<EvalReport> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::domain("threshold must lie in [0, 1]"));
    }
    let mut m = ConfusionMatrix::default();
    for row in &test.rows {
        let predicted = model.predict_proba(&row.features)? >= threshold;
        match (predicted, row.label) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, false) => m.tn += 1,
            (false, true) => m.fn_ += 1,
        }
    }
    Ok(EvalReport::from_matrix(m, Vec::new()))
}

/// Partitions row indices into `k` folds, dealing each class round-robin
/// after a seeded shuffle so class ratios match across folds.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::domain("k-fold needs k >= 2"));
    }
    if labels.len() < k {
        return Err(Error::domain(format!("cannot split {} rows into {k} folds", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Stratified k-fold cross-validation, pooling the held-out confusion counts.
pub fn kfold(data: &LabeledDataset, k: usize, seed: u64, opts: &FitOptions, threshold: f64) -> Result<EvalReport> {
    let labels: Vec<bool> = data.rows.iter().map(|r| r.label).collect();
    let folds = stratified_folds(&labels, k, seed)?;
    let mut pooled = ConfusionMatrix::default();
    let mut per_fold = Vec::with_capacity(k);
    for (i, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, f)| f.iter().copied()).collect();
        let report = fit(&data.subset(&train_idx), opts)?;
        let r = evaluate(&report.model, &data.subset(test_idx), threshold)?;
        pooled.add(&r.matrix);
        per_fold.push(r.matrix);
    }
    Ok(EvalReport::from_matrix(pooled, per_fold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub pos: LocalPoint,
    pub p: f64,
    pub inside: bool,
}

/// Occurrence probability on a square grid covering one ROI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySurface {
    pub roi_id: usize,
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, north rows outer.
    pub cells: Vec<SurfaceCell>,
}

impl ProbabilitySurface {
    pub fn inside_cells(&self) -> impl Iterator<Item = &SurfaceCell> {
        self.cells.iter().filter(|c| c.inside)
    }
}

/// Writes surfaces as one CSV: `roi_id,east_m,north_m,p,inside`.
pub fn write_surfaces_csv<W: Write>(surfaces: &[ProbabilitySurface], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["roi_id", "east_m", "north_m", "p", "inside"])?;
    for s in surfaces {
        for c in &s.cells {
            w.write_record([
                s.roi_id.to_string(),
                c.pos.east.to_string(),
                c.pos.north.to_string(),
                c.p.to_string(),
                u8::from(c.inside).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Evaluates the model on noise-free field readings over the ROI's bounding
/// square at `resolution` meters.
pub fn surface(model: &LogisticModel, roi: &Roi, env: &EnvField, resolution: f64) -> Result<ProbabilitySurface> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::domain("surface resolution must be > 0"));
    }
    let c = roi.circle;
    let n = ((2.0 * c.radius / resolution).ceil() as usize).max(1) + 1;
    let step = if n > 1 { 2.0 * c.radius / (n - 1) as f64 } else { 0.0 };
    let mut cells = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let pos = LocalPoint::new(c.center.east - c.radius + ix as f64 * step, c.center.north - c.radius + iy as f64 * step);
            let p = model.predict_proba(&env.eval(pos).features())?;
            cells.push(SurfaceCell { pos, p, inside: crate::geo::dist(pos, c.center) <= c.radius * (1.0 + 1e-12) });
        }
    }
    Ok(ProbabilitySurface { roi_id: roi.cluster_id, resolution, nx: n, ny: n, cells })
}
