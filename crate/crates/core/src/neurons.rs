//! Neuron saliency from probe weights, subset selection, layer spread and
//! ranking overlap.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activations::FeatureDescriptor;
use crate::probe::ProbeModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRanking {
    pub label: String,
    /// Feature indices by descending normalized saliency for this class.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronRanking {
    /// Overall saliency per feature: the maximum normalized class saliency.
    pub scores: Vec<f64>,
    /// Feature indices by descending saliency, ties by lower index.
    pub order: Vec<usize>,
    pub per_class: Vec<ClassRanking>,
    pub descriptor: FeatureDescriptor,
    /// Whether features are combined token pairs.
    pub pair: bool,
}

fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Ranks the model's input features by weight magnitude. Each class row is
/// normalized by its largest absolute weight; an all-zero row contributes
/// nothing.
pub fn rank_neurons(model: &ProbeModel) -> NeuronRanking {
    let d = model.features;
    let mut scores = vec![0.0f64; d];
    let mut per_class = Vec::with_capacity(model.classes.len());
    for (c, label) in model.classes.iter().enumerate() {
        let row = model.weight_row(c);
        let max = row.iter().fold(0.0f64, |m, w| m.max(w.abs() as f64));
        let class_scores: Vec<f64> = if max > 0.0 {
            row.iter().map(|w| w.abs() as f64 / max).collect()
        } else {
            warn!("class {} has an all-zero weight row", label);
            vec![0.0; d]
        };
        for (s, cs) in scores.iter_mut().zip(&class_scores) {
            *s = s.max(*cs);
        }
        per_class.push(ClassRanking {
            label: label.clone(),
            order: descending(&class_scores),
        });
    }
    NeuronRanking {
        order: descending(&scores),
        scores,
        per_class,
        descriptor: model.descriptor.clone(),
        pair: model.task.is_pair(),
    }
}

/// `⌈fraction · total⌉`, tolerant of floating-point noise in the product.
pub fn prefix_len(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64 - 1e-9).ceil().max(0.0) as usize).min(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetMode {
    Top,
    Bottom,
    Random,
}

impl std::str::FromStr for SubsetMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" => Ok(SubsetMode::Top),
            "bottom" => Ok(SubsetMode::Bottom),
            "random" => Ok(SubsetMode::Random),
            _ => Err(Error::invalid(format!("unknown subset mode '{}'", s))),
        }
    }
}

/// Feature indices (sorted ascending) of the top, bottom or a random
/// `⌈fraction · D⌉` features.
pub fn select_subset(ranking: &NeuronRanking, mode: SubsetMode, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction {} outside (0, 1]", fraction)));
    }
    let d = ranking.order.len();
    let k = prefix_len(fraction, d);
    if k == 0 {
        return Err(Error::invalid("empty neuron selection"));
    }
    let mut picked: Vec<usize> = match mode {
        SubsetMode::Top => ranking.order[..k].to_vec(),
        SubsetMode::Bottom => ranking.order[d - k..].to_vec(),
        SubsetMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, d, k).into_vec()
        }
    };
    picked.sort_unstable();
    Ok(picked)
}

/// Descriptor that restricts `base` to `subset`, where `subset` indexes
/// the feature space of `base`.
pub fn subset_descriptor(base: &FeatureDescriptor, subset: &[usize]) -> FeatureDescriptor {
    let neurons = match &base.neurons {
        Some(existing) => subset.iter().map(|&k| existing[k]).collect(),
        None => subset.to_vec(),
    };
    FeatureDescriptor {
        neurons: Some(neurons),
        ..base.clone()
    }
}

/// Number of top-ranked features per source layer. Features of both tokens
/// of a concatenated pair are folded onto their layer. With `class`, that
/// class's own ranking is used.
pub fn layer_spread(
    ranking: &NeuronRanking,
    top_fraction: f64,
    layer_count: usize,
    width: usize,
    class: Option<&str>,
) -> Result<BTreeMap<usize, usize>> {
    let order = match class {
        None => &ranking.order,
        Some(c) => {
            &ranking
                .per_class
                .iter()
                .find(|r| r.label == c)
                .ok_or_else(|| Error::invalid(format!("no class '{}' in ranking", c)))?
                .order
        }
    };
    let expected = ranking.descriptor.dim(layer_count, width, ranking.pair)?;
    if expected != order.len() {
        return Err(Error::invalid(format!(
            "ranking covers {} features, the layout implies {}",
            order.len(),
            expected
        )));
    }
    let mut hist: BTreeMap<usize, usize> = ranking
        .descriptor
        .layer_indices(layer_count)?
        .into_iter()
        .map(|l| (l, 0))
        .collect();
    for &k in &order[..prefix_len(top_fraction, order.len())] {
        let l = ranking.descriptor.source_layer(k, layer_count, width, ranking.pair)?;
        *hist.entry(l).or_default() += 1;
    }
    Ok(hist)
}

/// Share of `a`'s top features that are also among `b`'s top features.
pub fn ranking_overlap(a: &NeuronRanking, b: &NeuronRanking, fraction: f64) -> Result<f64> {
    if a.order.len() != b.order.len() {
        return Err(Error::invalid(format!(
            "rankings cover {} and {} features",
            a.order.len(),
            b.order.len()
        )));
    }
    let k = prefix_len(fraction, a.order.len());
    if k == 0 {
        return Err(Error::invalid("empty prefix"));
    }
    let top_b: HashSet<usize> = b.order[..k].iter().copied().collect();
    let shared = a.order[..k].iter().filter(|i| top_b.contains(i)).count();
    Ok(shared as f64 / k as f64)
}

impl NeuronRanking {
    /// One feature index per line, most salient first.
    pub fn index_list(&self) -> String {
        let mut out = String::new();
        for k in &self.order {
            let _ = writeln!(out, "{}", k);
        }
        out
    }
}

pub fn spread_csv(hist: &BTreeMap<usize, usize>) -> String {
    let mut out = String::from("layer,count\n");
    for (l, c) in hist {
        let _ = writeln!(out, "{},{}", l, c);
    }
    out
}
