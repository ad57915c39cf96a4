//! Token-aligned activation containers and probe feature extraction.
//!
//! On disk a container is a directory holding `manifest.json` and one matrix
//! file per sentence. A matrix file is `token_count × (layer_count · width)`
//! little-endian IEEE-754 `f32` values in row-major order with no header;
//! within a row, layer 0 (the embedding layer) comes first, each layer
//! occupying `width` consecutive values. The manifest records each file's
//! SHA-256, which is verified when the matrix is first read.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::hash::{keyed_seed, sha256_hex};
use crate::tasks::{Dataset, Instance};
use crate::treebank::{chunk_labels, ConstTree};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PRECISION_F32LE: &str = "f32le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub sentence_id: String,
    pub token_count: usize,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub model_id: String,
    /// Number of layers including the embedding layer.
    pub layer_count: usize,
    /// Values per layer and token.
    pub width: usize,
    pub precision: String,
    pub sentences: Vec<SentenceRecord>,
    /// Producer-specific metadata (seeds, tokenizer hashes, ...).
    #[serde(default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn row_width(&self) -> usize {
        self.layer_count * self.width
    }
}

#[derive(Debug)]
pub struct ActivationContainer {
    manifest: Manifest,
    dir: Option<PathBuf>,
    matrices: Vec<OnceLock<Vec<f32>>>,
}

fn f32s_to_bytes(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn bytes_to_f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

fn matrix_file(k: usize) -> String {
    format!("{:06}.f32", k)
}

impl ActivationContainer {
    /// In-memory container. Each matrix is `token_count × layer_count·width`.
    pub fn from_matrices(
        model_id: impl Into<String>,
        layer_count: usize,
        width: usize,
        sentences: Vec<(String, usize, Vec<f32>)>,
    ) -> Result<Self> {
        let row = layer_count * width;
        let mut records = Vec::with_capacity(sentences.len());
        let mut matrices = Vec::with_capacity(sentences.len());
        for (k, (id, tokens, data)) in sentences.into_iter().enumerate() {
            if data.len() != tokens * row {
                return Err(Error::Integrity {
                    item: format!("sentence {}", id),
                    reason: format!("{} values for {} tokens of width {}", data.len(), tokens, row),
                });
            }
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integrity {
                    item: format!("sentence {}", id),
                    reason: "non-finite activation".into(),
                });
            }
            records.push(SentenceRecord {
                sentence_id: id,
                token_count: tokens,
                file: matrix_file(k),
                sha256: sha256_hex(&f32s_to_bytes(&data)),
            });
            let cell = OnceLock::new();
            let _ = cell.set(data);
            matrices.push(cell);
        }
        Ok(ActivationContainer {
            manifest: Manifest {
                model_id: model_id.into(),
                layer_count,
                width,
                precision: PRECISION_F32LE.into(),
                sentences: records,
                extra: BTreeMap::new(),
            },
            dir: None,
            matrices,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn manifest_mut(&mut self) -> &mut Manifest {
        &mut self.manifest
    }

    pub fn layer_count(&self) -> usize {
        self.manifest.layer_count
    }

    pub fn width(&self) -> usize {
        self.manifest.width
    }

    pub fn sentence_count(&self) -> usize {
        self.manifest.sentences.len()
    }

    /// Matrix of sentence `s`, read and verified on first access.
    pub fn matrix(&self, s: usize) -> Result<&[f32]> {
        let rec = self
            .manifest
            .sentences
            .get(s)
            .ok_or(Error::OutOfRange { index: s, len: self.sentence_count() })?;
        if let Some(m) = self.matrices[s].get() {
            return Ok(m);
        }
        let dir = self.dir.as_ref().expect("in-memory matrices are always initialised");
        let path = dir.join(&rec.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let integrity = |reason: String| Error::Integrity {
            item: format!("sentence {}", rec.sentence_id),
            reason,
        };
        if bytes.len() != rec.token_count * self.manifest.row_width() * 4 {
            return Err(integrity(format!("matrix file has {} bytes", bytes.len())));
        }
        if sha256_hex(&bytes) != rec.sha256 {
            return Err(integrity("checksum mismatch".into()));
        }
        let values = bytes_to_f32s(&bytes);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(integrity("non-finite activation".into()));
        }
        Ok(self.matrices[s].get_or_init(|| values))
    }

    /// Full row (all layers) of token `t` in sentence `s`.
    pub fn row(&self, s: usize, t: usize) -> Result<&[f32]> {
        let m = self.matrix(s)?;
        let w = self.manifest.row_width();
        let n = self.manifest.sentences[s].token_count;
        if t >= n {
            return Err(Error::OutOfRange { index: t, len: n });
        }
        Ok(&m[t * w..(t + 1) * w])
    }

    /// Writes the container to `dir`, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for s in 0..self.sentence_count() {
            let path = dir.join(&self.manifest.sentences[s].file);
            fs::write(&path, f32s_to_bytes(self.matrix(s)?)).map_err(|e| Error::io(&path, e))?;
        }
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    /// Checks that the container has one matrix per corpus sentence with
    /// matching ids and token counts.
    pub fn check_alignment(&self, corpus: &[ConstTree]) -> Result<()> {
        if corpus.len() != self.sentence_count() {
            return Err(Error::Alignment {
                sentence: corpus
                    .get(self.sentence_count())
                    .map(|t| t.sentence_id.clone())
                    .unwrap_or_default(),
                reason: format!(
                    "{} sentences in the corpus, {} in the container",
                    corpus.len(),
                    self.sentence_count()
                ),
            });
        }
        for (t, rec) in corpus.iter().zip(&self.manifest.sentences) {
            if t.sentence_id != rec.sentence_id || t.len() != rec.token_count {
                return Err(Error::Alignment {
                    sentence: t.sentence_id.clone(),
                    reason: format!(
                        "container has {} with {} tokens, corpus has {} tokens",
                        rec.sentence_id,
                        rec.token_count,
                        t.len()
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Opens a container directory. Matrix files are size-checked here and
/// checksum-verified on first read.
pub fn load_container(dir: impl AsRef<Path>) -> Result<ActivationContainer> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.precision != PRECISION_F32LE {
        return Err(Error::Integrity {
            item: path.display().to_string(),
            reason: format!("unsupported precision {}", manifest.precision),
        });
    }
    for rec in &manifest.sentences {
        let p = dir.join(&rec.file);
        let meta = fs::metadata(&p).map_err(|e| Error::io(&p, e))?;
        let expected = (rec.token_count * manifest.row_width() * 4) as u64;
        if meta.len() != expected {
            return Err(Error::Integrity {
                item: format!("sentence {}", rec.sentence_id),
                reason: format!("matrix file has {} bytes, expected {}", meta.len(), expected),
            });
        }
    }
    let matrices = (0..manifest.sentences.len()).map(|_| OnceLock::new()).collect();
    Ok(ActivationContainer {
        manifest,
        dir: Some(dir.to_path_buf()),
        matrices,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerSelection {
    All,
    Single(usize),
    List(Vec<usize>),
}

/// How two token vectors become one pair feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combine {
    Concat,
    Avg,
    /// Per coordinate, the value with the larger magnitude (the second on ties).
    MaxS,
    Left,
    Right,
}

impl std::str::FromStr for Combine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(Combine::Concat),
            "avg" => Ok(Combine::Avg),
            "max-s" | "max_s" | "maxs" => Ok(Combine::MaxS),
            "left" => Ok(Combine::Left),
            "right" => Ok(Combine::Right),
            _ => Err(Error::invalid(format!("unknown combination method '{}'", s))),
        }
    }
}

pub fn combine(a: &[f32], b: &[f32], method: Combine) -> Result<Vec<f32>> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("cannot combine vectors of length {} and {}", a.len(), b.len())));
    }
    Ok(match method {
        Combine::Concat => {
            let mut v = Vec::with_capacity(a.len() * 2);
            v.extend_from_slice(a);
            v.extend_from_slice(b);
            v
        }
        Combine::Avg => a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect(),
        Combine::MaxS => a
            .iter()
            .zip(b)
            .map(|(&m, &n)| if m.abs() > n.abs() { m } else { n })
            .collect(),
        Combine::Left => a.to_vec(),
        Combine::Right => b.to_vec(),
    })
}

/// Which parts of the activations a probe sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub layers: LayerSelection,
    /// Subset of the (combined) feature space, in the order given.
    pub neurons: Option<Vec<usize>>,
    pub combine: Combine,
}

impl Default for FeatureDescriptor {
    fn default() -> Self {
        FeatureDescriptor {
            layers: LayerSelection::All,
            neurons: None,
            combine: Combine::Concat,
        }
    }
}

impl FeatureDescriptor {
    pub fn layers(layers: LayerSelection) -> Self {
        FeatureDescriptor {
            layers,
            ..Default::default()
        }
    }

    pub fn layer_indices(&self, layer_count: usize) -> Result<Vec<usize>> {
        let list = match &self.layers {
            LayerSelection::All => (0..layer_count).collect(),
            LayerSelection::Single(l) => vec![*l],
            LayerSelection::List(v) => v.clone(),
        };
        if list.is_empty() {
            return Err(Error::invalid("empty layer selection"));
        }
        if let Some(&bad) = list.iter().find(|&&l| l >= layer_count) {
            return Err(Error::OutOfRange { index: bad, len: layer_count });
        }
        Ok(list)
    }

    /// Number of token vectors stacked by the combination.
    fn blocks(&self, pair: bool) -> usize {
        if pair && self.combine == Combine::Concat {
            2
        } else {
            1
        }
    }

    /// Dimensionality before the neuron subset is applied.
    pub fn full_dim(&self, layer_count: usize, width: usize, pair: bool) -> Result<usize> {
        Ok(self.layer_indices(layer_count)?.len() * width * self.blocks(pair))
    }

    pub fn dim(&self, layer_count: usize, width: usize, pair: bool) -> Result<usize> {
        let full = self.full_dim(layer_count, width, pair)?;
        match &self.neurons {
            None => Ok(full),
            Some(n) => {
                if n.is_empty() {
                    return Err(Error::invalid("empty neuron selection"));
                }
                if let Some(&bad) = n.iter().find(|&&k| k >= full) {
                    return Err(Error::OutOfRange { index: bad, len: full });
                }
                Ok(n.len())
            }
        }
    }

    /// Source layer of output feature `k`.
    pub fn source_layer(&self, k: usize, layer_count: usize, width: usize, pair: bool) -> Result<usize> {
        let layers = self.layer_indices(layer_count)?;
        let full = layers.len() * width * self.blocks(pair);
        let idx = match &self.neurons {
            None => k,
            Some(n) => *n.get(k).ok_or(Error::OutOfRange { index: k, len: n.len() })?,
        };
        if idx >= full {
            return Err(Error::OutOfRange { index: idx, len: full });
        }
        Ok(layers[(idx % (layers.len() * width)) / width])
    }

    fn select(&self, v: Vec<f32>) -> Vec<f32> {
        match &self.neurons {
            None => v,
            Some(n) => n.iter().map(|&k| v[k]).collect(),
        }
    }
}

/// Concatenates the given layer blocks of a full row.
pub fn gather_layers(row: &[f32], layers: &[usize], width: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(layers.len() * width);
    for &l in layers {
        out.extend_from_slice(&row[l * width..(l + 1) * width]);
    }
    out
}

/// Feature vector of a single token: selected layers, then the neuron subset.
pub fn slice(container: &ActivationContainer, s: usize, t: usize, desc: &FeatureDescriptor) -> Result<Vec<f32>> {
    let layers = desc.layer_indices(container.layer_count())?;
    desc.dim(container.layer_count(), container.width(), false)?;
    let row = container.row(s, t)?;
    Ok(desc.select(gather_layers(row, &layers, container.width())))
}

/// Feature vector of an instance. Pair instances combine the two token
/// vectors before the neuron subset is applied.
pub fn instance_features(
    container: &ActivationContainer,
    desc: &FeatureDescriptor,
    pair: bool,
    inst: &Instance,
) -> Result<Vec<f32>> {
    let layers = desc.layer_indices(container.layer_count())?;
    let w = container.width();
    let first = gather_layers(container.row(inst.sentence, inst.first)?, &layers, w);
    if !pair {
        return Ok(desc.select(first));
    }
    let second = gather_layers(container.row(inst.sentence, inst.second)?, &layers, w);
    Ok(desc.select(combine(&first, &second, desc.combine)?))
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Keeps only the given columns, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        FeatureMatrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }
}

/// Features for every instance of `ds`, checking sentence alignment first.
pub fn feature_matrix(container: &ActivationContainer, desc: &FeatureDescriptor, ds: &Dataset) -> Result<FeatureMatrix> {
    let pair = ds.task.is_pair();
    let cols = desc.dim(container.layer_count(), container.width(), pair)?;
    for inst in &ds.instances {
        let rec = container
            .manifest()
            .sentences
            .get(inst.sentence)
            .ok_or(Error::OutOfRange { index: inst.sentence, len: container.sentence_count() })?;
        let id = &ds.sentence_ids[inst.sentence];
        if !id.is_empty() && *id != rec.sentence_id {
            return Err(Error::Alignment {
                sentence: id.clone(),
                reason: format!("container holds {} at this position", rec.sentence_id),
            });
        }
    }
    let rows = exec::map(&ds.instances, |inst| instance_features(container, desc, pair, inst));
    let mut data = Vec::with_capacity(ds.len() * cols);
    for r in rows {
        data.extend(r?);
    }
    Ok(FeatureMatrix {
        rows: ds.len(),
        cols,
        data,
    })
}

/// Layers used for tree reconstruction: every third transformer layer of a
/// 12-layer model (3, 6, 9, 12), every second of a 6-layer model (2, 4, 6).
/// Layer 0 (embeddings) is not included.
pub fn default_reconstruction_layers(transformer_layers: usize) -> Vec<usize> {
    let step = if transformer_layers <= 6 { 2 } else { 3 };
    let v: Vec<usize> = (1..=transformer_layers).filter(|l| l % step == 0).collect();
    if v.is_empty() {
        (1..=transformer_layers.max(1)).collect()
    } else {
        v
    }
}

/// Label source for a planted signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalTask {
    ChunkSimple,
    ChunkDetailed,
}

impl SignalTask {
    fn labels(self, tree: &ConstTree) -> Vec<String> {
        chunk_labels(tree, self == SignalTask::ChunkDetailed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignal {
    pub task: SignalTask,
    pub strength: f32,
    /// Confine the signal to one layer block; `None` spreads it over all.
    pub layer: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthMode {
    /// I.i.d. standard normal values.
    Gaussian,
    /// One fixed random vector per word type.
    TypeStatic,
    /// Gaussian noise plus `strength · u_y` for the token's gold label `y`,
    /// with `u_y` a random unit direction per label.
    Structured(PlantedSignal),
}

impl SynthMode {
    fn name(&self) -> &'static str {
        match self {
            SynthMode::Gaussian => "gaussian",
            SynthMode::TypeStatic => "type-static",
            SynthMode::Structured(_) => "structured",
        }
    }
}

fn gaussian_vec(seed: u64, len: usize) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Unit directions of the planted signal, keyed by label. Each direction
/// has full row width and is zero outside the signal's layer block.
pub fn planted_directions(
    corpus: &[ConstTree],
    width: usize,
    layer_count: usize,
    signal: &PlantedSignal,
    seed: u64,
) -> BTreeMap<String, Vec<f32>> {
    let mut labels: Vec<String> = corpus.iter().flat_map(|t| signal.task.labels(t)).collect();
    labels.sort();
    labels.dedup();
    let (lo, hi) = match signal.layer {
        Some(l) => (l * width, (l + 1) * width),
        None => (0, layer_count * width),
    };
    labels
        .into_iter()
        .map(|label| {
            let raw = gaussian_vec(keyed_seed(seed, &format!("direction:{}", label)), hi - lo);
            let norm = raw.iter().map(|x| x * x).sum::<f32>().sqrt();
            let mut v = vec![0.0f32; layer_count * width];
            for (k, x) in raw.into_iter().enumerate() {
                v[lo + k] = x / norm;
            }
            (label, v)
        })
        .collect()
}

/// Synthetic container aligned with `corpus`; identical for identical
/// arguments regardless of thread count.
pub fn synth_container(
    corpus: &[ConstTree],
    width: usize,
    layer_count: usize,
    mode: SynthMode,
    seed: u64,
) -> Result<ActivationContainer> {
    if width == 0 || layer_count == 0 {
        return Err(Error::invalid("width and layer count must be positive"));
    }
    if let SynthMode::Structured(sig) = &mode {
        if sig.layer.is_some_and(|l| l >= layer_count) {
            return Err(Error::OutOfRange { index: sig.layer.unwrap(), len: layer_count });
        }
    }
    let row = width * layer_count;
    let directions = match &mode {
        SynthMode::Structured(sig) => planted_directions(corpus, width, layer_count, sig, seed),
        _ => BTreeMap::new(),
    };
    let sentences = exec::map_range(corpus.len(), |k| {
        let tree = &corpus[k];
        let n = tree.len();
        let data = match &mode {
            SynthMode::Gaussian => gaussian_vec(keyed_seed(seed, &format!("sentence:{}", k)), n * row),
            SynthMode::TypeStatic => tree
                .tokens
                .iter()
                .flat_map(|t| gaussian_vec(keyed_seed(seed, &format!("type:{}", t.form)), row))
                .collect(),
            SynthMode::Structured(sig) => {
                let mut data = gaussian_vec(keyed_seed(seed, &format!("sentence:{}", k)), n * row);
                for (i, label) in sig.task.labels(tree).iter().enumerate() {
                    let dir = &directions[label];
                    for (x, d) in data[i * row..(i + 1) * row].iter_mut().zip(dir) {
                        *x += sig.strength * d;
                    }
                }
                data
            }
        };
        (tree.sentence_id.clone(), n, data)
    });
    let mut c = ActivationContainer::from_matrices(format!("synthetic-{}", mode.name()), layer_count, width, sentences)?;
    let extra = &mut c.manifest_mut().extra;
    extra.insert("mode".into(), mode.name().into());
    extra.insert("seed".into(), seed.into());
    if let SynthMode::Structured(sig) = mode {
        extra.insert("signal".into(), serde_json::to_value(sig)?);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::toy_corpus;

    fn small() -> ActivationContainer {
        let m = |n: usize, off: f32| (0..n * 6).map(|k| k as f32 + off).collect::<Vec<_>>();
        ActivationContainer::from_matrices(
            "m",
            3,
            2,
            vec![("a".into(), 3, m(3, 0.0)), ("b".into(), 5, m(5, 100.0))],
        )
        .unwrap()
    }

    #[test]
    fn shape_arithmetic() {
        let c = ActivationContainer::from_matrices(
            "m",
            13,
            768,
            vec![
                ("a".into(), 3, vec![0.0; 3 * 9984]),
                ("b".into(), 5, vec![0.0; 5 * 9984]),
            ],
        )
        .unwrap();
        assert_eq!(c.matrix(0).unwrap().len() / c.manifest().row_width(), 3);
        assert_eq!(c.matrix(1).unwrap().len() / c.manifest().row_width(), 5);
        assert_eq!(c.manifest().row_width(), 9984);
        let d = FeatureDescriptor::default();
        assert_eq!(d.dim(13, 768, false).unwrap(), 9984);
        let d = FeatureDescriptor::layers(LayerSelection::List(vec![3, 6, 9, 12]));
        assert_eq!(d.dim(13, 768, false).unwrap(), 3072);
        assert!(ActivationContainer::from_matrices("m", 2, 2, vec![("a".into(), 2, vec![0.0; 7])]).is_err());
        assert!(ActivationContainer::from_matrices("m", 1, 1, vec![("a".into(), 1, vec![f32::NAN])]).is_err());
    }

    #[test]
    fn save_load_is_bit_exact() {
        let c = small();
        let dir = tempfile::tempdir().unwrap();
        c.save(dir.path()).unwrap();
        let back = load_container(dir.path()).unwrap();
        assert_eq!(back.manifest(), c.manifest());
        for s in 0..2 {
            let a: Vec<u32> = c.matrix(s).unwrap().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u32> = back.matrix(s).unwrap().iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn truncated_and_corrupted_files() {
        let c = small();
        let dir = tempfile::tempdir().unwrap();
        c.save(dir.path()).unwrap();
        let f = dir.path().join(&c.manifest().sentences[1].file);
        let mut bytes = fs::read(&f).unwrap();
        bytes[0] ^= 1;
        fs::write(&f, &bytes).unwrap();
        let back = load_container(dir.path()).unwrap();
        assert!(back.matrix(0).is_ok());
        assert!(matches!(back.matrix(1), Err(Error::Integrity { .. })));
        bytes.truncate(bytes.len() - 4);
        fs::write(&f, &bytes).unwrap();
        match load_container(dir.path()) {
            Err(Error::Integrity { item, .. }) => assert_eq!(item, "sentence b"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn combination_rules() {
        assert_eq!(combine(&[3.0], &[-5.0], Combine::MaxS).unwrap(), vec![-5.0]);
        assert_eq!(combine(&[-5.0], &[3.0], Combine::MaxS).unwrap(), vec![-5.0]);
        assert_eq!(combine(&[3.0], &[-3.0], Combine::MaxS).unwrap(), vec![-3.0]);
        assert_eq!(combine(&[1.0, 2.0], &[3.0, 4.0], Combine::Concat).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(combine(&[1.0, 2.0], &[3.0, 4.0], Combine::Avg).unwrap(), vec![2.0, 3.0]);
        assert_eq!(combine(&[1.0], &[3.0], Combine::Left).unwrap(), vec![1.0]);
        assert_eq!(combine(&[1.0], &[3.0], Combine::Right).unwrap(), vec![3.0]);
        assert!(combine(&[1.0], &[3.0, 1.0], Combine::Avg).is_err());
    }

    #[test]
    fn slicing() {
        let c = small();
        let row = c.row(0, 1).unwrap().to_vec();
        assert_eq!(row, vec![6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
        let d0 = FeatureDescriptor::layers(LayerSelection::Single(0));
        assert_eq!(slice(&c, 0, 1, &d0).unwrap(), vec![6.0, 7.0]);
        let d = FeatureDescriptor::layers(LayerSelection::List(vec![2, 0]));
        assert_eq!(slice(&c, 0, 1, &d).unwrap(), vec![10.0, 11.0, 6.0, 7.0]);
        let d = FeatureDescriptor { neurons: Some(vec![5, 0]), ..Default::default() };
        assert_eq!(slice(&c, 0, 1, &d).unwrap(), vec![11.0, 6.0]);
        let bad = FeatureDescriptor::layers(LayerSelection::Single(3));
        assert!(slice(&c, 0, 1, &bad).is_err());
        assert!(c.row(0, 3).is_err());
        // Splitting the all-layer slice reproduces each single-layer slice.
        let all = slice(&c, 1, 4, &FeatureDescriptor::default()).unwrap();
        for l in 0..3 {
            let one = slice(&c, 1, 4, &FeatureDescriptor::layers(LayerSelection::Single(l))).unwrap();
            assert_eq!(&all[l * 2..(l + 1) * 2], one.as_slice());
        }
    }

    #[test]
    fn pair_features_and_source_layers() {
        let c = small();
        let mut d = FeatureDescriptor::layers(LayerSelection::List(vec![1, 2]));
        let inst = Instance { sentence: 0, first: 0, second: 2, label: "x".into() };
        let f = instance_features(&c, &d, true, &inst).unwrap();
        assert_eq!(f, vec![2.0, 3.0, 4.0, 5.0, 14.0, 15.0, 16.0, 17.0]);
        let layers: Vec<usize> = (0..8).map(|k| d.source_layer(k, 3, 2, true).unwrap()).collect();
        assert_eq!(layers, vec![1, 1, 2, 2, 1, 1, 2, 2]);
        d.neurons = Some(vec![7, 2]);
        assert_eq!(instance_features(&c, &d, true, &inst).unwrap(), vec![17.0, 4.0]);
        assert_eq!(d.source_layer(0, 3, 2, true).unwrap(), 2);
    }

    #[test]
    fn reconstruction_layers() {
        assert_eq!(default_reconstruction_layers(12), vec![3, 6, 9, 12]);
        assert_eq!(default_reconstruction_layers(6), vec![2, 4, 6]);
    }

    #[test]
    fn synth_modes() {
        let (trees, _) = toy_corpus(5, 1);
        let a = synth_container(&trees, 4, 3, SynthMode::Gaussian, 7).unwrap();
        let b = synth_container(&trees, 4, 3, SynthMode::Gaussian, 7).unwrap();
        for s in 0..5 {
            assert_eq!(a.matrix(s).unwrap(), b.matrix(s).unwrap());
        }
        a.check_alignment(&trees).unwrap();
        assert!(a.check_alignment(&trees[1..]).is_err());

        let t = synth_container(&trees, 4, 3, SynthMode::TypeStatic, 7).unwrap();
        let (s, i, j) = trees
            .iter()
            .enumerate()
            .find_map(|(s, tr)| {
                (0..tr.len())
                    .flat_map(|i| (i + 1..tr.len()).map(move |j| (i, j)))
                    .find(|&(i, j)| tr.tokens[i].form == tr.tokens[j].form)
                    .map(|(i, j)| (s, i, j))
            })
            .or_else(|| {
                // Fall back to the same type in two sentences.
                let f = &trees[0].tokens[0].form;
                trees.iter().enumerate().skip(1).find_map(|(s, tr)| {
                    tr.tokens.iter().position(|x| &x.form == f).map(|j| (s, 0, j))
                })
            })
            .expect("toy corpus repeats a word type");
        if i < j && trees[s].tokens[i].form == trees[s].tokens[j].form {
            assert_eq!(t.row(s, i).unwrap(), t.row(s, j).unwrap());
        } else {
            assert_eq!(t.row(0, 0).unwrap(), t.row(s, j).unwrap());
        }
    }
}
