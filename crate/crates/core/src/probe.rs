//! Linear probes: multinomial logistic regression with elastic-net
//! regularization, trained by mini-batch Adam.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::activations::{feature_matrix, ActivationContainer, FeatureDescriptor, FeatureMatrix};
use crate::exec;
use crate::hash::sha256_hex;
use crate::tasks::{Dataset, TaskKind};
use crate::treebank::PUNCT_CHUNK_LABEL;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l1: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Standard deviation of the Gaussian weight initialization.
    pub init_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            learning_rate: 1e-3,
            l1: 1e-3,
            l2: 1e-3,
            batch_size: 512,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            init_std: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epochs > 0
            && self.batch_size > 0
            && self.learning_rate > 0.0
            && self.l1 >= 0.0
            && self.l2 >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.init_std >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid training configuration {:?}", self)))
        }
    }
}

/// Regularized mean cross-entropy over a feature matrix. Parameters are
/// laid out as `W` (classes × features, row-major) and `b` (classes).
pub struct Objective<'a> {
    pub x: &'a FeatureMatrix,
    pub y: &'a [usize],
    pub classes: usize,
    pub l1: f64,
    pub l2: f64,
}

fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn scores(x: &[f32], w: &[f64], b: &[f64]) -> Vec<f64> {
    let d = x.len();
    b.iter()
        .enumerate()
        .map(|(c, bc)| {
            let row = &w[c * d..(c + 1) * d];
            bc + row.iter().zip(x).map(|(wk, &xk)| wk * xk as f64).sum::<f64>()
        })
        .collect()
}

/// First index of the maximum.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = k;
        }
    }
    best
}

impl Objective<'_> {
    fn check_shapes(&self, w: &[f64], b: &[f64]) {
        assert_eq!(w.len(), self.classes * self.x.cols, "weight shape");
        assert_eq!(b.len(), self.classes, "bias shape");
    }

    pub fn penalty(&self, w: &[f64]) -> f64 {
        self.l1 * w.iter().map(|v| v.abs()).sum::<f64>() + self.l2 * w.iter().map(|v| v * v).sum::<f64>()
    }

    /// Per-row softmax residuals `p - onehot(y)` and the summed log loss.
    fn residuals(&self, rows: &[usize], w: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let per_row = exec::map(rows, |&i| {
            let s = scores(self.x.row(i), w, b);
            let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = s.iter().map(|v| (v - m).exp()).sum();
            let lse = m + z.ln();
            let mut r: Vec<f64> = s.iter().map(|v| (v - lse).exp()).collect();
            r[self.y[i]] -= 1.0;
            (r, lse - s[self.y[i]])
        });
        let mut resid = Vec::with_capacity(rows.len() * self.classes);
        let mut total = 0.0;
        for (r, l) in per_row {
            resid.extend(r);
            total += l;
        }
        (resid, total)
    }

    pub fn loss(&self, rows: &[usize], w: &[f64], b: &[f64]) -> f64 {
        self.check_shapes(w, b);
        let (_, total) = self.residuals(rows, w, b);
        total / rows.len() as f64 + self.penalty(w)
    }

    /// Loss and (sub)gradients of the full objective on `rows`. The L1
    /// subgradient at zero is zero; the bias is not penalized.
    pub fn loss_and_gradient(&self, rows: &[usize], w: &[f64], b: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        self.check_shapes(w, b);
        let d = self.x.cols;
        let c_count = self.classes;
        let n = rows.len() as f64;
        let (resid, total) = self.residuals(rows, w, b);
        let per_class = exec::map_range(c_count, |c| {
            let mut g = vec![0.0f64; d];
            let mut gb = 0.0;
            for (bi, &i) in rows.iter().enumerate() {
                let r = resid[bi * c_count + c];
                gb += r;
                for (gk, &xk) in g.iter_mut().zip(self.x.row(i)) {
                    *gk += r * xk as f64;
                }
            }
            let wc = &w[c * d..(c + 1) * d];
            for (gk, &wk) in g.iter_mut().zip(wc) {
                *gk = *gk / n + self.l1 * sign(wk) + 2.0 * self.l2 * wk;
            }
            (g, gb / n)
        });
        let mut gw = Vec::with_capacity(c_count * d);
        let mut gb = Vec::with_capacity(c_count);
        for (g, b) in per_class {
            gw.extend(g);
            gb.push(b);
        }
        (total / n + self.penalty(w), gw, gb)
    }
}

/// Maximum relative error between `analytic` and central finite
/// differences of `loss_at` around `params`.
pub fn gradient_check(params: &[f64], loss_at: impl Fn(&[f64]) -> f64, analytic: &[f64], step: f64) -> f64 {
    assert_eq!(params.len(), analytic.len());
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for k in 0..p.len() {
        let orig = p[k];
        p[k] = orig + step;
        let up = loss_at(&p);
        p[k] = orig - step;
        let down = loss_at(&p);
        p[k] = orig;
        let numeric = (up - down) / (2.0 * step);
        let a = analytic[k];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

/// Gradient check of an objective at `(w, b)` over all rows.
pub fn check_objective(obj: &Objective, w: &[f64], b: &[f64]) -> f64 {
    let rows: Vec<usize> = (0..obj.x.rows).collect();
    let (_, gw, gb) = obj.loss_and_gradient(&rows, w, b);
    let split = w.len();
    let mut params = w.to_vec();
    params.extend_from_slice(b);
    let mut analytic = gw;
    analytic.extend(gb);
    gradient_check(&params, |p| obj.loss(&rows, &p[..split], &p[split..]), &analytic, 1e-5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub config: TrainConfig,
    /// SHA-256 over the training dataset and container identity.
    pub data_hash: String,
    pub container_model_id: String,
    pub instances: usize,
    /// Mean regularized batch loss per epoch.
    pub loss_trajectory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub task: TaskKind,
    pub classes: Vec<String>,
    pub features: usize,
    /// `classes × features`, row-major.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub descriptor: FeatureDescriptor,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    task: TaskKind,
    classes: Vec<String>,
    features: usize,
    descriptor: FeatureDescriptor,
    metadata: TrainingMetadata,
    weights_file: String,
    weights_sha256: String,
    bias_file: String,
    bias_sha256: String,
}

fn f32_bytes(v: &[f32]) -> Vec<u8> {
    v.iter().flat_map(|x| x.to_le_bytes()).collect()
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{}.{}", stem, suffix))
}

impl ProbeModel {
    pub fn weight_row(&self, c: usize) -> &[f32] {
        &self.weights[c * self.features..(c + 1) * self.features]
    }

    /// Writes `path` (JSON) plus `<stem>.weights.f32` and `<stem>.bias.f32`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let wp = sibling(path, "weights.f32");
        let bp = sibling(path, "bias.f32");
        let wb = f32_bytes(&self.weights);
        let bb = f32_bytes(&self.bias);
        let name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
        let header = ModelHeader {
            task: self.task,
            classes: self.classes.clone(),
            features: self.features,
            descriptor: self.descriptor.clone(),
            metadata: self.metadata.clone(),
            weights_file: name(&wp),
            weights_sha256: sha256_hex(&wb),
            bias_file: name(&bp),
            bias_sha256: sha256_hex(&bb),
        };
        fs::write(&wp, wb).map_err(|e| Error::io(&wp, e))?;
        fs::write(&bp, bb).map_err(|e| Error::io(&bp, e))?;
        fs::write(path, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let h: ModelHeader = serde_json::from_str(&text)?;
        let blob = |file: &str, sha: &str, len: usize| -> Result<Vec<f32>> {
            let p = path.with_file_name(file);
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            if bytes.len() != len * 4 || sha256_hex(&bytes) != sha {
                return Err(Error::Integrity {
                    item: p.display().to_string(),
                    reason: "size or checksum mismatch".into(),
                });
            }
            Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
        };
        let weights = blob(&h.weights_file, &h.weights_sha256, h.classes.len() * h.features)?;
        let bias = blob(&h.bias_file, &h.bias_sha256, h.classes.len())?;
        Ok(ProbeModel {
            task: h.task,
            classes: h.classes,
            features: h.features,
            weights,
            bias,
            descriptor: h.descriptor,
            metadata: h.metadata,
        })
    }

    fn params_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.weights.iter().map(|&v| v as f64).collect(),
            self.bias.iter().map(|&v| v as f64).collect(),
        )
    }

    /// Predicted class index per feature row.
    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        if x.cols != self.features {
            return Err(Error::invalid(format!(
                "model expects {} features, got {}",
                self.features, x.cols
            )));
        }
        let (w, b) = self.params_f64();
        Ok(exec::map_range(x.rows, |r| argmax(&scores(x.row(r), &w, &b))))
    }

    /// Predicted labels for every instance of `ds`.
    pub fn predict(&self, ds: &Dataset, container: &ActivationContainer) -> Result<Vec<String>> {
        let x = feature_matrix(container, &self.descriptor, ds)?;
        Ok(self
            .predict_matrix(&x)?
            .into_iter()
            .map(|k| self.classes[k].clone())
            .collect())
    }
}

fn data_hash(ds: &Dataset, container: &ActivationContainer, desc: &FeatureDescriptor) -> Result<String> {
    let mut text = ds.to_tsv()?;
    text.push_str(&container.manifest().model_id);
    text.push_str(&serde_json::to_string(desc)?);
    Ok(sha256_hex(text.as_bytes()))
}

/// Trains a probe on `ds` using features selected by `desc`.
pub fn train(
    ds: &Dataset,
    container: &ActivationContainer,
    desc: &FeatureDescriptor,
    config: &TrainConfig,
) -> Result<ProbeModel> {
    let x = feature_matrix(container, desc, ds)?;
    let mut model = train_matrix(ds, &x, config)?;
    model.descriptor = desc.clone();
    model.metadata.data_hash = data_hash(ds, container, desc)?;
    model.metadata.container_model_id = container.manifest().model_id.clone();
    Ok(model)
}

/// Trains on a precomputed feature matrix aligned with `ds.instances`.
pub fn train_matrix(ds: &Dataset, x: &FeatureMatrix, config: &TrainConfig) -> Result<ProbeModel> {
    config.validate()?;
    if x.rows != ds.len() {
        return Err(Error::invalid(format!("{} feature rows for {} instances", x.rows, ds.len())));
    }
    let classes = ds.labels();
    if classes.len() < 2 {
        return Err(Error::invalid(format!(
            "training data has {} class(es); at least 2 are required",
            classes.len()
        )));
    }
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
    let y: Vec<usize> = ds.instances.iter().map(|i| index[i.label.as_str()]).collect();
    let obj = Objective {
        x,
        y: &y,
        classes: classes.len(),
        l1: config.l1,
        l2: config.l2,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = Normal::new(0.0, config.init_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut w: Vec<f64> = (0..classes.len() * x.cols).map(|_| init.sample(&mut rng)).collect();
    let mut b = vec![0.0f64; classes.len()];
    let (mut mw, mut vw) = (vec![0.0; w.len()], vec![0.0; w.len()]);
    let (mut mb, mut vb) = (vec![0.0; b.len()], vec![0.0; b.len()]);
    let mut order: Vec<usize> = (0..x.rows).collect();
    let mut step = 0i32;
    let mut trajectory = Vec::with_capacity(config.epochs);

    let adam = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], t: i32| {
        let c1 = 1.0 - config.beta1.powi(t);
        let c2 = 1.0 - config.beta2.powi(t);
        for k in 0..p.len() {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
            p[k] -= config.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + config.epsilon);
        }
    };

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0;
        for batch in order.chunks(config.batch_size) {
            let (loss, gw, gb) = obj.loss_and_gradient(batch, &w, &b);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss {} at epoch {} step {}",
                    loss,
                    epoch + 1,
                    step + 1
                )));
            }
            step += 1;
            adam(&mut w, &gw, &mut mw, &mut vw, step);
            adam(&mut b, &gb, &mut mb, &mut vb, step);
            sum += loss;
            batches += 1;
        }
        let mean = sum / batches as f64;
        debug!("epoch {} mean loss {:.6}", epoch + 1, mean);
        trajectory.push(mean);
    }
    info!(
        "trained {} probe: {} classes, {} features, final loss {:.6}",
        ds.task.name(),
        classes.len(),
        x.cols,
        trajectory.last().copied().unwrap_or(f64::NAN)
    );
    if w.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite parameters after training".into()));
    }
    Ok(ProbeModel {
        task: ds.task,
        features: x.cols,
        weights: w.iter().map(|&v| v as f32).collect(),
        bias: b.iter().map(|&v| v as f32).collect(),
        classes,
        descriptor: FeatureDescriptor::default(),
        metadata: TrainingMetadata {
            config: config.clone(),
            data_hash: String::new(),
            container_model_id: String::new(),
            instances: ds.len(),
            loss_trajectory: trajectory,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub support: usize,
    pub predicted: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceBucket {
    /// Token distance `second - first`.
    pub distance: usize,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: TaskKind,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Instances left out of scoring (punctuation in keep-punctuation mode).
    pub excluded: usize,
    /// Union of gold labels and model classes, sorted.
    pub labels: Vec<String>,
    /// `confusion[gold][predicted]`, indexed like `labels`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    /// Pair tasks only.
    pub distance: Vec<DistanceBucket>,
    /// Identifies the evaluated instance positions, independent of labels.
    pub instance_digest: String,
}

fn instance_digest(ds: &Dataset) -> String {
    let mut text = ds.sentence_ids.join("\n");
    for i in &ds.instances {
        let _ = write!(text, "\n{}:{}:{}", i.sentence, i.first, i.second);
    }
    sha256_hex(text.as_bytes())
}

/// Scores predicted labels against the gold labels of `ds`.
pub fn evaluate_predictions(ds: &Dataset, predicted: &[String], classes: &[String]) -> Result<EvalReport> {
    if predicted.len() != ds.len() {
        return Err(Error::invalid(format!("{} predictions for {} instances", predicted.len(), ds.len())));
    }
    let mut labels: Vec<String> = ds.labels();
    labels.extend(classes.iter().cloned());
    labels.extend(predicted.iter().cloned());
    labels.sort();
    labels.dedup();
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    let mut buckets: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let (mut total, mut correct, mut excluded) = (0, 0, 0);
    for (inst, p) in ds.instances.iter().zip(predicted) {
        if inst.label == PUNCT_CHUNK_LABEL {
            excluded += 1;
            continue;
        }
        total += 1;
        let hit = inst.label == *p;
        correct += hit as usize;
        confusion[index[inst.label.as_str()]][index[p.as_str()]] += 1;
        if ds.task.is_pair() {
            let e = buckets.entry(inst.second.abs_diff(inst.first)).or_default();
            e.0 += 1;
            e.1 += hit as usize;
        }
    }
    let per_class = labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let support: usize = confusion[k].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[k]).sum();
            let tp = confusion[k][k] as f64;
            ClassMetrics {
                label: label.clone(),
                support,
                predicted,
                precision: (predicted > 0).then(|| tp / predicted as f64),
                recall: (support > 0).then(|| tp / support as f64),
            }
        })
        .collect();
    Ok(EvalReport {
        task: ds.task,
        total,
        correct,
        accuracy: if total > 0 { correct as f64 / total as f64 } else { 0.0 },
        excluded,
        labels,
        confusion,
        per_class,
        distance: buckets
            .into_iter()
            .map(|(distance, (total, correct))| DistanceBucket {
                distance,
                total,
                correct,
                accuracy: correct as f64 / total as f64,
            })
            .collect(),
        instance_digest: instance_digest(ds),
    })
}

pub fn evaluate(model: &ProbeModel, ds: &Dataset, container: &ActivationContainer) -> Result<EvalReport> {
    let predicted = model.predict(ds, container)?;
    evaluate_predictions(ds, &predicted, &model.classes)
}

/// Task accuracy minus control accuracy on the same instances.
pub fn selectivity(task: &EvalReport, control: &EvalReport) -> Result<f64> {
    if task.instance_digest != control.instance_digest || task.total != control.total {
        return Err(Error::invalid("task and control reports cover different instances"));
    }
    Ok(task.accuracy - control.accuracy)
}

impl EvalReport {
    /// Aligned-column summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "task      {}", self.task.name());
        let _ = writeln!(out, "accuracy  {:.4} ({}/{})", self.accuracy, self.correct, self.total);
        if self.excluded > 0 {
            let _ = writeln!(out, "excluded  {}", self.excluded);
        }
        let width = self.labels.iter().map(|l| l.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(out, "\n{:<width$}  {:>8}  {:>9}  {:>7}", "label", "support", "precision", "recall");
        let fmt = |v: Option<f64>| v.map(|x| format!("{:.4}", x)).unwrap_or_else(|| "-".into());
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>9}  {:>7}",
                m.label,
                m.support,
                fmt(m.precision),
                fmt(m.recall)
            );
        }
        if !self.distance.is_empty() {
            let _ = writeln!(out, "\n{:>8}  {:>7}  {:>8}", "distance", "total", "accuracy");
            for b in &self.distance {
                let _ = writeln!(out, "{:>8}  {:>7}  {:>8.4}", b.distance, b.total, b.accuracy);
            }
        }
        out
    }

    /// Confusion matrix as CSV with a header row of predicted labels.
    pub fn confusion_csv(&self) -> String {
        let quote = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
        let mut out = String::from("gold");
        for l in &self.labels {
            out.push(',');
            out.push_str(&quote(l));
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            out.push_str(&quote(l));
            for v in row {
                let _ = write!(out, ",{}", v);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::Instance;
    use rand::Rng;

    fn matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> FeatureMatrix {
        FeatureMatrix {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
        }
    }

    fn dataset(labels: &[&str]) -> Dataset {
        Dataset {
            task: TaskKind::ChunkSimple,
            sentence_ids: vec!["s".into()],
            instances: labels
                .iter()
                .enumerate()
                .map(|(k, l)| Instance { sentence: 0, first: k, second: k, label: l.to_string() })
                .collect(),
            corpus_hash: String::new(),
            seed: None,
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (l1, l2) in [(0.0, 0.0), (0.01, 0.0), (0.0, 0.05), (0.02, 0.03)] {
            let x = matrix(5, 4, &mut rng);
            let y: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
            let obj = Objective { x: &x, y: &y, classes: 3, l1, l2 };
            let w: Vec<f64> = (0..12).map(|_| rng.random_range(-0.5..0.5)).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
            assert!(check_objective(&obj, &w, &b) < 1e-4);
        }
    }

    #[test]
    fn bias_gradient_at_uniform_softmax() {
        let x = FeatureMatrix { rows: 4, cols: 2, data: vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0] };
        let y = [0, 0, 0, 1];
        let obj = Objective { x: &x, y: &y, classes: 2, l1: 0.0, l2: 0.0 };
        let (loss, _, gb) = obj.loss_and_gradient(&[0, 1, 2, 3], &[0.0; 4], &[0.0; 2]);
        assert!((loss - 2f64.ln()).abs() < 1e-12);
        assert!((gb[0] - (0.5 - 0.75)).abs() < 1e-12);
        assert!((gb[1] - (0.5 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn l2_shift_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = matrix(6, 3, &mut rng);
        let y = [0, 1, 1, 0, 1, 0];
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = [0.1, -0.2];
        let rows = [0, 1, 2, 3, 4, 5];
        let plain = Objective { x: &x, y: &y, classes: 2, l1: 0.0, l2: 0.0 };
        let reg = Objective { l2: 0.25, ..plain };
        let (_, g0, _) = plain.loss_and_gradient(&rows, &w, &b);
        let (_, g1, _) = reg.loss_and_gradient(&rows, &w, &b);
        for k in 0..6 {
            assert_eq!(g1[k] - g0[k], 2.0 * 0.25 * w[k]);
        }
        let heavier = Objective { l1: 0.5, l2: 0.5, ..plain };
        assert!(heavier.penalty(&w) >= reg.penalty(&w));
    }

    #[test]
    fn two_point_boundary_sign() {
        // Logistic regression on {(-1, A), (2, B)}: the decision function
        // s(x) = (w_B - w_A) x + (b_B - b_A) must be negative at -1 and
        // positive at 2 once fitted.
        let ds = dataset(&["A", "B"]);
        let x = FeatureMatrix { rows: 2, cols: 1, data: vec![-1.0, 2.0] };
        let cfg = TrainConfig { l1: 0.0, l2: 0.0, epochs: 2000, learning_rate: 0.05, ..Default::default() };
        let m = train_matrix(&ds, &x, &cfg).unwrap();
        let slope = m.weights[1] - m.weights[0];
        assert!(slope > 0.0);
        assert_eq!(m.predict_matrix(&x).unwrap(), vec![0, 1]);
    }

    #[test]
    fn heavy_l1_sparsifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let labels: Vec<&str> = (0..5000).map(|k| if k % 3 == 0 { "a" } else { "b" }).collect();
        let ds = dataset(&labels);
        let x = matrix(5000, 20, &mut rng);
        let cfg = TrainConfig { l1: 10.0, ..Default::default() };
        let m = train_matrix(&ds, &x, &cfg).unwrap();
        let small = m.weights.iter().filter(|w| w.abs() < 1e-3).count();
        assert!(small as f64 >= 0.9 * m.weights.len() as f64, "{small}/{}", m.weights.len());
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = dataset(&["a", "a"]);
        let x = FeatureMatrix { rows: 2, cols: 1, data: vec![0.0, 1.0] };
        assert!(train_matrix(&ds, &x, &TrainConfig::default()).is_err());
        let bad = TrainConfig { learning_rate: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn argmax_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let s: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let c = rng.random_range(-100.0..100.0);
            let t: Vec<f64> = s.iter().map(|v| v + c).collect();
            assert_eq!(argmax(&s), argmax(&t));
        }
    }

    #[test]
    fn hand_tallied_confusion() {
        let ds = dataset(&["B", "B", "I", "E", "E", "S"]);
        let pred: Vec<String> = ["B", "I", "I", "E", "B", "S"].iter().map(|s| s.to_string()).collect();
        let r = evaluate_predictions(&ds, &pred, &["B".into(), "E".into(), "I".into(), "S".into()]).unwrap();
        assert_eq!(r.labels, vec!["B", "E", "I", "S"]);
        assert_eq!(r.confusion, vec![vec![1, 0, 1, 0], vec![1, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 1]]);
        assert_eq!(r.correct, 4);
        assert!((r.accuracy - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.per_class[0].precision, Some(0.5));
        assert_eq!(r.per_class[2].precision, Some(0.5));
        assert_eq!(r.per_class[1].recall, Some(0.5));
        for (k, row) in r.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), r.per_class[k].support);
        }
    }

    #[test]
    fn majority_model_and_selectivity() {
        let labels: Vec<&str> = (0..10).map(|k| if k < 7 { "x" } else { "y" }).collect();
        let ds = dataset(&labels);
        let pred = vec!["x".to_string(); 10];
        let r = evaluate_predictions(&ds, &pred, &["x".into(), "y".into()]).unwrap();
        assert!((r.accuracy - 0.7).abs() < 1e-12);
        assert_eq!(selectivity(&r, &r).unwrap(), 0.0);
        let ctrl = ds.relabeled(|i| (i.first % 2).to_string());
        let cr = evaluate_predictions(&ctrl, &vec!["0".to_string(); 10], &[]).unwrap();
        assert!((selectivity(&r, &cr).unwrap() - 0.2).abs() < 1e-12);
        let other = dataset(&labels[..9]);
        let or = evaluate_predictions(&other, &pred[..9], &[]).unwrap();
        assert!(selectivity(&r, &or).is_err());
    }

    #[test]
    fn punctuation_is_excluded() {
        let ds = dataset(&["B", "PCT", "E"]);
        let pred: Vec<String> = ["B", "B", "E"].iter().map(|s| s.to_string()).collect();
        let r = evaluate_predictions(&ds, &pred, &[]).unwrap();
        assert_eq!((r.total, r.correct, r.excluded), (2, 2, 1));
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = dataset(&["a", "b", "a", "c"]);
        let x = matrix(4, 3, &mut rng);
        let m = train_matrix(&ds, &x, &TrainConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        assert_eq!(ProbeModel::load(&p).unwrap(), m);
        let wp = dir.path().join("m.weights.f32");
        let mut bytes = fs::read(&wp).unwrap();
        bytes[0] ^= 0x40;
        fs::write(&wp, bytes).unwrap();
        assert!(ProbeModel::load(&p).is_err());
    }
}
