//! Probing datasets for the three diagnostic tasks and their control tasks.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{canonicalize, decode, encode, DepthCode, SeqLabelTriple, NONE_LABEL, SENTINEL};
use crate::exec;
use crate::hash::sha256_hex;
use crate::treebank::{chunk_labels, ConstTree};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    /// Label of the lowest common ancestor of a token pair.
    Lca,
    ChunkSimple,
    ChunkDetailed,
    /// Tree-encoding label 1: ancestor label of `(w_i, w_{i+1})`.
    SeqLca,
    /// Tree-encoding label 2: relative ancestor depth of `(w_i, w_{i+1})`.
    SeqDepth,
    /// Tree-encoding label 3: phrase directly above a single token.
    SeqUnary,
}

impl TaskKind {
    /// Whether instances are token pairs (and features are combined).
    pub fn is_pair(self) -> bool {
        matches!(self, TaskKind::Lca | TaskKind::SeqLca | TaskKind::SeqDepth)
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Lca => "lca",
            TaskKind::ChunkSimple => "chunk-simple",
            TaskKind::ChunkDetailed => "chunk-detailed",
            TaskKind::SeqLca => "seq-lca",
            TaskKind::SeqDepth => "seq-depth",
            TaskKind::SeqUnary => "seq-unary",
        }
    }
}

/// One labelled token or token pair. Single-token instances have
/// `first == second`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    pub sentence: usize,
    pub first: usize,
    pub second: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub task: TaskKind,
    /// Sorted distinct labels.
    pub labels: Vec<String>,
    pub corpus_hash: String,
    pub seed: Option<u64>,
    pub sentence_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: TaskKind,
    /// Ids of the corpus sentences, indexed like [`Instance::sentence`].
    pub sentence_ids: Vec<String>,
    pub instances: Vec<Instance>,
    pub corpus_hash: String,
    pub seed: Option<u64>,
}

impl Dataset {
    fn new(task: TaskKind, corpus: &[ConstTree], instances: Vec<Instance>, seed: Option<u64>) -> Self {
        Dataset {
            task,
            sentence_ids: corpus.iter().map(|t| t.sentence_id.clone()).collect(),
            instances,
            corpus_hash: corpus_hash(corpus),
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        let mut l: Vec<String> = self.instances.iter().map(|i| i.label.clone()).collect();
        l.sort();
        l.dedup();
        l
    }

    /// Label shares, keyed by label.
    pub fn label_distribution(&self) -> BTreeMap<String, f64> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for i in &self.instances {
            *counts.entry(i.label.clone()).or_default() += 1;
        }
        let n = self.len().max(1) as f64;
        counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            task: self.task,
            labels: self.labels(),
            corpus_hash: self.corpus_hash.clone(),
            seed: self.seed,
            sentence_count: self.sentence_ids.len(),
        }
    }

    /// `# {json header}` followed by
    /// `sentence_index \t sentence_id \t first \t second \t label` lines.
    pub fn to_tsv(&self) -> Result<String> {
        let mut out = format!("# {}\n", serde_json::to_string(&self.header())?);
        for i in &self.instances {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                i.sentence, self.sentence_ids[i.sentence], i.first, i.second, i.label
            ));
        }
        Ok(out)
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header: DatasetHeader = match lines.next() {
            Some((_, l)) if l.starts_with("# ") => serde_json::from_str(&l[2..])?,
            _ => return Err(Error::invalid("dataset file lacks its header line")),
        };
        let mut sentence_ids = vec![String::new(); header.sentence_count];
        let mut instances = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                line: lineno + 1,
                column: 1,
                message: m.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
            let sentence = num(cols[0])?;
            if sentence >= sentence_ids.len() {
                return Err(bad("sentence index beyond the header's sentence count"));
            }
            sentence_ids[sentence] = cols[1].to_string();
            instances.push(Instance {
                sentence,
                first: num(cols[2])?,
                second: num(cols[3])?,
                label: cols[4].to_string(),
            });
        }
        Ok(Dataset {
            task: header.task,
            sentence_ids,
            instances,
            corpus_hash: header.corpus_hash,
            seed: header.seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Dataset::from_tsv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Copy with every label passed through `f`.
    pub fn relabeled(&self, mut f: impl FnMut(&Instance) -> String) -> Dataset {
        let mut out = self.clone();
        for inst in out.instances.iter_mut() {
            inst.label = f(inst);
        }
        out
    }
}

pub fn corpus_hash(corpus: &[ConstTree]) -> String {
    let mut text = String::new();
    for t in corpus {
        text.push_str(&t.to_bracketed());
        text.push('\n');
    }
    sha256_hex(text.as_bytes())
}

/// Target share of label `y` in the balanced sample: the mean of its corpus
/// share and the uniform share.
pub fn balanced_share(freq: f64, label_count: usize) -> f64 {
    (freq + 1.0 / label_count as f64) * 0.5
}

/// Splits `n` draws over labels with the given supplies and target shares.
///
/// Labels whose supply is below their share of the remaining draws give up
/// all their instances; the rest is re-split over the other labels in
/// proportion to their shares, until no label is capped. Fractional counts
/// are then rounded by largest remainder (ties to the lower label index).
pub fn allocate(supply: &[usize], shares: &[f64], n: usize) -> Result<Vec<usize>> {
    assert_eq!(supply.len(), shares.len());
    let total: usize = supply.iter().sum();
    if n > total {
        return Err(Error::invalid(format!(
            "requested {} instances but only {} are available (maximum {})",
            n, total, total
        )));
    }
    let k = supply.len();
    let mut capped = vec![false; k];
    loop {
        let fixed: usize = (0..k).filter(|&y| capped[y]).map(|y| supply[y]).sum();
        let remaining = (n - fixed) as f64;
        let share_sum: f64 = (0..k).filter(|&y| !capped[y]).map(|y| shares[y]).sum();
        let mut changed = false;
        for y in 0..k {
            if !capped[y] && (supply[y] as f64) <= remaining * shares[y] / share_sum {
                capped[y] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut counts: Vec<usize> = (0..k).map(|y| if capped[y] { supply[y] } else { 0 }).collect();
    let fixed: usize = counts.iter().sum();
    let remaining = n - fixed;
    let share_sum: f64 = (0..k).filter(|&y| !capped[y]).map(|y| shares[y]).sum();
    let mut fractions = Vec::new();
    let mut assigned = 0;
    for y in (0..k).filter(|&y| !capped[y]) {
        let t = remaining as f64 * shares[y] / share_sum;
        let fl = (t.floor() as usize).min(supply[y]);
        counts[y] = fl;
        assigned += fl;
        fractions.push((t - t.floor(), y));
    }
    let mut leftover = remaining.saturating_sub(assigned);
    fractions.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, y) in fractions.iter().cycle() {
        if leftover == 0 {
            break;
        }
        if counts[y] < supply[y] {
            counts[y] += 1;
            leftover -= 1;
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone)]
pub struct SampledDataset {
    pub dataset: Dataset,
    /// Label shares over all candidate pairs.
    pub original_frequencies: BTreeMap<String, f64>,
    /// Balanced shares before supply limits.
    pub target_frequencies: BTreeMap<String, f64>,
    pub achieved_frequencies: BTreeMap<String, f64>,
    pub seed: u64,
}

/// All `(i, j)` pairs with `i <= j` (or `i < j`) of one sentence, with their
/// LCA labels.
fn lca_pairs(tree: &ConstTree, include_identity: bool) -> Vec<(&str, usize, usize)> {
    let paths: Vec<_> = (0..tree.len()).map(|i| tree.path_to(i)).collect();
    let mut out = Vec::new();
    for i in 0..tree.len() {
        let start = if include_identity { i } else { i + 1 };
        for j in start..tree.len() {
            let shared = paths[i]
                .iter()
                .zip(&paths[j])
                .take_while(|(a, b)| std::ptr::eq(**a, **b))
                .count();
            out.push((paths[i][shared - 1].label.as_str(), i, j));
        }
    }
    out
}

/// Draws `n` token pairs whose label distribution is the balanced mix of the
/// corpus distribution and the uniform one, subject to supply (see
/// [`allocate`]). Instances are drawn uniformly without replacement within a
/// label.
pub fn sample_lca(corpus: &[ConstTree], n: usize, seed: u64, include_identity: bool) -> Result<SampledDataset> {
    let per_sentence = exec::map(corpus, |t| lca_pairs(t, include_identity));
    let mut by_label: BTreeMap<&str, Vec<(u32, u32, u32)>> = BTreeMap::new();
    for (s, pairs) in per_sentence.iter().enumerate() {
        for &(label, i, j) in pairs {
            by_label.entry(label).or_default().push((s as u32, i as u32, j as u32));
        }
    }
    let labels: Vec<&str> = by_label.keys().copied().collect();
    let supply: Vec<usize> = by_label.values().map(|v| v.len()).collect();
    let total: usize = supply.iter().sum();
    let freqs: Vec<f64> = supply.iter().map(|&c| c as f64 / total.max(1) as f64).collect();
    let shares: Vec<f64> = freqs.iter().map(|&f| balanced_share(f, labels.len())).collect();
    let counts = allocate(&supply, &shares, n)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(n);
    for (y, pool) in by_label.values().enumerate() {
        for k in rand::seq::index::sample(&mut rng, pool.len(), counts[y]) {
            let (s, i, j) = pool[k];
            instances.push(Instance {
                sentence: s as usize,
                first: i as usize,
                second: j as usize,
                label: labels[y].to_string(),
            });
        }
    }
    instances.shuffle(&mut rng);

    let to_map = |v: &[f64]| -> BTreeMap<String, f64> {
        labels.iter().map(|l| l.to_string()).zip(v.iter().copied()).collect()
    };
    let achieved: Vec<f64> = counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect();
    Ok(SampledDataset {
        dataset: Dataset::new(TaskKind::Lca, corpus, instances, Some(seed)),
        original_frequencies: to_map(&freqs),
        target_frequencies: to_map(&shares),
        achieved_frequencies: to_map(&achieved),
        seed,
    })
}

/// One instance per token of the first `limit` sentences.
pub fn build_chunk_dataset(corpus: &[ConstTree], detailed: bool, limit: Option<usize>) -> Dataset {
    let take = limit.unwrap_or(corpus.len()).min(corpus.len());
    let per_sentence = exec::map(&corpus[..take], |t| chunk_labels(t, detailed));
    let instances = per_sentence
        .into_iter()
        .enumerate()
        .flat_map(|(s, labels)| {
            labels.into_iter().enumerate().map(move |(i, label)| Instance {
                sentence: s,
                first: i,
                second: i,
                label,
            })
        })
        .collect();
    let task = if detailed { TaskKind::ChunkDetailed } else { TaskKind::ChunkSimple };
    Dataset::new(task, corpus, instances, None)
}

#[derive(Debug, Clone)]
pub struct SeqDatasets {
    pub lca: Dataset,
    pub depth: Dataset,
    pub unary: Dataset,
}

/// Label datasets for tree reconstruction. Pair datasets cover
/// `(w_i, w_{i+1})` for `i < n - 1`; the unary dataset covers every token.
/// Trees are canonicalized first.
pub fn build_seq_datasets(corpus: &[ConstTree]) -> SeqDatasets {
    let encoded = exec::map(corpus, |t| encode(&canonicalize(t)));
    let mut lca = Vec::new();
    let mut depth = Vec::new();
    let mut unary = Vec::new();
    for (s, triples) in encoded.iter().enumerate() {
        for (i, t) in triples.iter().enumerate() {
            if t.depth != DepthCode::Sentinel {
                lca.push(Instance {
                    sentence: s,
                    first: i,
                    second: i + 1,
                    label: t.lca_label.clone(),
                });
                depth.push(Instance {
                    sentence: s,
                    first: i,
                    second: i + 1,
                    label: t.depth.to_string(),
                });
            }
            unary.push(Instance {
                sentence: s,
                first: i,
                second: i,
                label: t.unary_label().to_string(),
            });
        }
    }
    SeqDatasets {
        lca: Dataset::new(TaskKind::SeqLca, corpus, lca, None),
        depth: Dataset::new(TaskKind::SeqDepth, corpus, depth, None),
        unary: Dataset::new(TaskKind::SeqUnary, corpus, unary, None),
    }
}

impl SeqDatasets {
    /// Gold labels of the lca, depth and unary datasets, in instance order.
    pub fn gold_labels(&self) -> [Vec<String>; 3] {
        [&self.lca, &self.depth, &self.unary].map(|ds| ds.instances.iter().map(|i| i.label.clone()).collect())
    }

    /// Per-token triples from one label per instance of each dataset.
    pub fn assemble(&self, corpus: &[ConstTree], labels: &[Vec<String>; 3]) -> Result<Vec<Vec<SeqLabelTriple>>> {
        for (ds, l) in [&self.lca, &self.depth, &self.unary].into_iter().zip(labels) {
            if ds.len() != l.len() {
                return Err(Error::invalid(format!(
                    "{} labels for {} {} instances",
                    l.len(),
                    ds.len(),
                    ds.task.name()
                )));
            }
        }
        let blank = SeqLabelTriple {
            lca_label: SENTINEL.to_string(),
            depth: DepthCode::Sentinel,
            unary: None,
        };
        let mut triples: Vec<Vec<SeqLabelTriple>> = corpus.iter().map(|t| vec![blank.clone(); t.len()]).collect();
        fn slot<'t>(triples: &'t mut [Vec<SeqLabelTriple>], inst: &Instance) -> Result<&'t mut SeqLabelTriple> {
            let len = triples.len();
            triples
                .get_mut(inst.sentence)
                .and_then(|t| t.get_mut(inst.first))
                .ok_or(Error::OutOfRange { index: inst.sentence, len })
        }
        for (inst, l) in self.lca.instances.iter().zip(&labels[0]) {
            slot(&mut triples, inst)?.lca_label = l.clone();
        }
        for (inst, l) in self.depth.instances.iter().zip(&labels[1]) {
            slot(&mut triples, inst)?.depth = DepthCode::parse(l)?;
        }
        for (inst, l) in self.unary.instances.iter().zip(&labels[2]) {
            slot(&mut triples, inst)?.unary = (l != NONE_LABEL).then(|| l.clone());
        }
        Ok(triples)
    }
}

/// Decodes one tree per sentence of `corpus` from assembled triples.
pub fn reconstruct(corpus: &[ConstTree], triples: &[Vec<SeqLabelTriple>]) -> Result<Vec<ConstTree>> {
    if corpus.len() != triples.len() {
        return Err(Error::invalid(format!("{} sentences but {} triple rows", corpus.len(), triples.len())));
    }
    exec::map_range(corpus.len(), |s| {
        let t = &corpus[s];
        decode(&t.sentence_id, &triples[s], &t.forms(), &t.pos_tags())
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone)]
pub struct LcaEval {
    pub dataset: Dataset,
    /// Number of sentences that passed the length filter and were used.
    pub sentences_used: usize,
    /// Set when fewer than the requested sentences qualified.
    pub short: bool,
}

/// Every pair `i <= j` of the first `max_sentences` sentences of length at
/// most `max_len`.
pub fn build_lca_eval(corpus: &[ConstTree], max_sentences: usize, max_len: usize) -> LcaEval {
    let chosen: Vec<usize> = (0..corpus.len())
        .filter(|&s| corpus[s].len() <= max_len)
        .take(max_sentences)
        .collect();
    let short = chosen.len() < max_sentences;
    if short {
        warn!(
            "only {} sentences of length <= {} available (wanted {})",
            chosen.len(),
            max_len,
            max_sentences
        );
    }
    let mut instances = Vec::new();
    for &s in &chosen {
        for (label, i, j) in lca_pairs(&corpus[s], true) {
            instances.push(Instance {
                sentence: s,
                first: i,
                second: j,
                label: label.to_string(),
            });
        }
    }
    LcaEval {
        dataset: Dataset::new(TaskKind::Lca, corpus, instances, None),
        sentences_used: chosen.len(),
        short,
    }
}

/// Control task: every word type (single-token tasks) or ordered word-type
/// pair (pair tasks) receives one random numeric label, drawn once from the
/// training class distribution.
#[derive(Debug, Clone)]
pub struct ControlMapping {
    pub task: TaskKind,
    pub seed: u64,
    /// Class distribution the labels are drawn from, indexed by numeric label.
    pub weights: Vec<f64>,
    assigned: HashMap<String, usize>,
    /// Keys in order of first assignment.
    order: Vec<String>,
    rng: ChaCha8Rng,
    dist: WeightedIndex<f64>,
}

#[derive(Serialize, Deserialize)]
struct ControlFile {
    task: TaskKind,
    seed: u64,
    weights: Vec<f64>,
    stream_position: String,
    assigned: Vec<(String, usize)>,
}

fn control_key(task: TaskKind, inst: &Instance, corpus: &[ConstTree]) -> Result<String> {
    let tree = corpus
        .get(inst.sentence)
        .ok_or(Error::OutOfRange { index: inst.sentence, len: corpus.len() })?;
    let form = |i: usize| {
        tree.tokens
            .get(i)
            .map(|t| t.form.as_str())
            .ok_or(Error::OutOfRange { index: i, len: tree.len() })
    };
    Ok(if task.is_pair() {
        format!("{}\u{1f}{}", form(inst.first)?, form(inst.second)?)
    } else {
        form(inst.first)?.to_string()
    })
}

impl ControlMapping {
    /// Builds the mapping from `train` and returns it with the relabelled
    /// training set.
    pub fn fit(train: &Dataset, corpus: &[ConstTree], seed: u64) -> Result<(Self, Dataset)> {
        let weights: Vec<f64> = train.label_distribution().into_values().collect();
        if weights.is_empty() {
            return Err(Error::invalid("control task needs a nonempty training set"));
        }
        let dist = WeightedIndex::new(weights.clone()).map_err(|e| Error::invalid(e.to_string()))?;
        let mut mapping = ControlMapping {
            task: train.task,
            seed,
            weights,
            assigned: HashMap::new(),
            order: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            dist,
        };
        let relabeled = mapping.relabel(train, corpus)?;
        Ok((mapping, relabeled))
    }

    /// Numeric label of `key`, drawing one if the key is new.
    pub fn label_for(&mut self, key: &str) -> usize {
        if let Some(&c) = self.assigned.get(key) {
            return c;
        }
        let c = self.dist.sample(&mut self.rng);
        self.assigned.insert(key.to_string(), c);
        self.order.push(key.to_string());
        c
    }

    /// Relabels `ds` through the mapping; unseen keys are drawn in instance
    /// order from the continuing seeded stream.
    pub fn relabel(&mut self, ds: &Dataset, corpus: &[ConstTree]) -> Result<Dataset> {
        let mut out = ds.clone();
        for inst in out.instances.iter_mut() {
            let key = control_key(self.task, inst, corpus)?;
            inst.label = self.label_for(&key).to_string();
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.assigned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assigned.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ControlFile {
            task: self.task,
            seed: self.seed,
            weights: self.weights.clone(),
            stream_position: self.rng.get_word_pos().to_string(),
            assigned: self.order.iter().map(|k| (k.clone(), self.assigned[k])).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ControlFile = serde_json::from_str(text)?;
        let mut rng = ChaCha8Rng::seed_from_u64(file.seed);
        let pos: u128 = file
            .stream_position
            .parse()
            .map_err(|_| Error::invalid("bad control stream position"))?;
        rng.set_word_pos(pos);
        let dist = WeightedIndex::new(file.weights.clone()).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(ControlMapping {
            task: file.task,
            seed: file.seed,
            weights: file.weights,
            order: file.assigned.iter().map(|(k, _)| k.clone()).collect(),
            assigned: file.assigned.into_iter().collect(),
            rng,
            dist,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::toy_corpus;
    use crate::treebank::tests::luxury_maker;
    use crate::treebank::{parse_const_treebank, ReadOptions};

    #[test]
    fn balanced_share_two_labels() {
        assert!((balanced_share(0.9, 2) - 0.70).abs() < 1e-12);
        assert!((balanced_share(0.1, 2) - 0.30).abs() < 1e-12);
    }

    #[test]
    fn balanced_share_table5b_s() {
        // 28 labels, S at 39.20%.
        assert!((balanced_share(0.392, 28) - 0.2139).abs() < 5e-5);
    }

    #[test]
    fn allocate_ample_and_scarce() {
        let c = allocate(&[900, 100], &[0.7, 0.3], 100).unwrap();
        assert_eq!(c, vec![70, 30]);
        // Label 1 only has 10: the other 20 go to label 0.
        let c = allocate(&[900, 10], &[0.7, 0.3], 100).unwrap();
        assert_eq!(c, vec![90, 10]);
        assert!(allocate(&[5, 5], &[0.5, 0.5], 11).is_err());
        assert_eq!(allocate(&[5, 5], &[0.5, 0.5], 10).unwrap(), vec![5, 5]);
    }

    #[test]
    fn allocate_rounds_to_n() {
        let c = allocate(&[100, 100, 100], &[1.0 / 3.0; 3], 10).unwrap();
        assert_eq!(c.iter().sum::<usize>(), 10);
        assert_eq!(c, vec![4, 3, 3]);
    }

    #[test]
    fn sample_is_deterministic_and_exact() {
        let (trees, _) = toy_corpus(40, 5);
        let a = sample_lca(&trees, 300, 9, true).unwrap();
        let b = sample_lca(&trees, 300, 9, true).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.dataset.len(), 300);
        let s: f64 = a.achieved_frequencies.values().sum();
        assert!((s - 1.0).abs() < 1e-9);
        let s: f64 = a.target_frequencies.values().sum();
        assert!((s - 1.0).abs() < 1e-9);
        for inst in &a.dataset.instances {
            assert!(inst.first <= inst.second);
            let t = &trees[inst.sentence];
            assert_eq!(crate::treebank::lca_label(t, inst.first, inst.second).unwrap(), inst.label);
        }
        let total: usize = trees.iter().map(|t| t.len() * (t.len() + 1) / 2).sum();
        let err = sample_lca(&trees, total + 1, 9, true).unwrap_err();
        assert!(err.to_string().contains(&total.to_string()));
    }

    #[test]
    fn chunk_dataset_luxury_maker() {
        let d = build_chunk_dataset(&[luxury_maker()], false, None);
        assert_eq!(d.len(), 12);
        let labels: Vec<&str> = d.instances.iter().map(|i| i.label.as_str()).collect();
        assert_eq!(labels.join(" "), "B I I E B E B B E B B E");
        assert!(build_chunk_dataset(&[], false, None).is_empty());
        let (trees, _) = toy_corpus(3, 1);
        let n: usize = trees.iter().map(|t| t.len()).sum();
        assert_eq!(build_chunk_dataset(&trees, true, None).len(), n);
        assert_eq!(build_chunk_dataset(&trees, true, Some(1)).len(), trees[0].len());
    }

    #[test]
    fn seq_datasets_luxury_maker() {
        let d = build_seq_datasets(&[luxury_maker()]);
        assert_eq!(d.lca.len(), 11);
        assert_eq!(d.depth.len(), 11);
        assert_eq!(d.unary.len(), 12);
        assert!(d.unary.instances.iter().all(|i| i.label == "NONE"));
        assert_eq!(d.depth.instances[3].label, "ROOT");
        assert_eq!(d.depth.instances[8].label, "-1");
        let one = parse_const_treebank("(S (NP (DT the)))", &ReadOptions::default(), "x").unwrap().trees;
        let d = build_seq_datasets(&one);
        assert_eq!((d.lca.len(), d.unary.len()), (0, 1));
    }

    #[test]
    fn lca_eval_filters_length() {
        let text = "(S (NN a) (NN b) (NN c))\n(S (NN a) (NN b))";
        let trees = parse_const_treebank(text, &ReadOptions::default(), "x").unwrap().trees;
        let e = build_lca_eval(&trees, 200, 2);
        assert_eq!(e.sentences_used, 1);
        assert!(e.short);
        assert_eq!(e.dataset.len(), 3);
        let e = build_lca_eval(&trees, 1, 20);
        assert_eq!(e.dataset.len(), 6);
        assert!(!e.short);
    }

    #[test]
    fn dataset_tsv_round_trip() {
        let (trees, _) = toy_corpus(10, 5);
        let d = sample_lca(&trees, 50, 1, true).unwrap().dataset;
        let back = Dataset::from_tsv(&d.to_tsv().unwrap()).unwrap();
        assert_eq!(back.instances, d.instances);
        assert_eq!(back.task, d.task);
        assert_eq!(back.corpus_hash, d.corpus_hash);
    }

    #[test]
    fn control_is_per_type() {
        let (trees, _) = toy_corpus(30, 2);
        let d = build_chunk_dataset(&trees, false, None);
        let (mut m, ctl) = ControlMapping::fit(&d, &trees, 4).unwrap();
        let mut seen: HashMap<&str, &str> = HashMap::new();
        for (inst, c) in d.instances.iter().zip(&ctl.instances) {
            let form = trees[inst.sentence].tokens[inst.first].form.as_str();
            assert_eq!(*seen.entry(form).or_insert(c.label.as_str()), c.label.as_str());
        }
        // Persisted mappings continue the same stream.
        let mut restored = ControlMapping::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(restored.label_for("never-seen"), m.label_for("never-seen"));
        assert_eq!(restored.label_for("the"), m.label_for("the"));
    }

    #[test]
    fn control_pairs_are_ordered() {
        let t = luxury_maker();
        let d = Dataset::new(
            TaskKind::Lca,
            std::slice::from_ref(&t),
            vec![
                Instance { sentence: 0, first: 9, second: 6, label: "x".into() },
                Instance { sentence: 0, first: 10, second: 6, label: "y".into() },
            ],
            None,
        );
        // Both instances are the pair ("the", "sold").
        let (_, ctl) = ControlMapping::fit(&d, &[t], 1).unwrap();
        assert_eq!(ctl.instances[0].label, ctl.instances[1].label);
    }
}
