//! Nonce corpora: semantically scrambled, syntactically intact copies of a
//! treebank, built by swapping tokens for other tokens seen in the same
//! dependency context.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec;
use crate::treebank::{ConstTree, DepSentence};
use crate::{Error, Result};

/// Syntactic slot of a token: its POS tag, its relation to its head, and the
/// sorted multiset of its dependents' relations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DepContext {
    pub pos: String,
    pub head_rel: String,
    pub dep_rels: Vec<String>,
}

pub fn dep_context(sentence: &DepSentence, i: usize) -> DepContext {
    let mut dep_rels: Vec<String> = sentence
        .dependents(i)
        .into_iter()
        .map(|k| sentence.deprels[k].clone())
        .collect();
    dep_rels.sort();
    DepContext {
        pos: sentence.tokens[i].pos.clone(),
        head_rel: sentence.deprels[i].clone(),
        dep_rels,
    }
}

/// How replacement forms are drawn from a pool entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolSampling {
    /// Proportional to corpus frequency in the context.
    #[default]
    Occurrences,
    /// Uniform over distinct forms.
    Types,
}

#[derive(Debug, Clone, Default)]
pub struct PoolEntry {
    /// Every occurrence, in corpus order.
    pub occurrences: Vec<String>,
    /// Distinct forms in order of first occurrence.
    pub types: Vec<String>,
}

impl PoolEntry {
    fn has_alternative_to(&self, form: &str) -> bool {
        self.types.len() > 1 || self.types.first().is_some_and(|t| t != form)
    }
}

/// Forms indexed by the dependency context they occur in.
#[derive(Debug, Clone, Default)]
pub struct ReplacementPool {
    entries: HashMap<DepContext, PoolEntry>,
}

impl ReplacementPool {
    /// Indexes every token of `corpus` by its dependency context. The corpus
    /// should be the split whose vocabulary replacements may come from.
    pub fn build(corpus: &[DepSentence]) -> Self {
        let per_sentence = exec::map(corpus, |s| {
            (0..s.len())
                .map(|i| (dep_context(s, i), s.tokens[i].form.clone()))
                .collect::<Vec<_>>()
        });
        let mut entries: HashMap<DepContext, PoolEntry> = HashMap::new();
        for (ctx, form) in per_sentence.into_iter().flatten() {
            let e = entries.entry(ctx).or_default();
            if !e.types.contains(&form) {
                e.types.push(form.clone());
            }
            e.occurrences.push(form);
        }
        ReplacementPool { entries }
    }

    pub fn get(&self, ctx: &DepContext) -> Option<&PoolEntry> {
        self.entries.get(ctx)
    }

    /// Number of distinct contexts.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contexts(&self) -> impl Iterator<Item = (&DepContext, &PoolEntry)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replacement {
    pub sentence: usize,
    pub sentence_id: String,
    pub index: usize,
    pub old_form: String,
    pub new_form: String,
}

#[derive(Debug, Clone)]
pub struct Corruption {
    pub trees: Vec<ConstTree>,
    pub deps: Vec<DepSentence>,
    /// In the order replacements were drawn.
    pub log: Vec<Replacement>,
    /// `⌊fraction · total_tokens⌋`.
    pub target: usize,
    pub total_tokens: usize,
}

impl Corruption {
    pub fn achieved_fraction(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.log.len() as f64 / self.total_tokens as f64
        }
    }

    /// Tab-separated log with a `#` header line carrying the counts.
    pub fn log_text(&self) -> String {
        let mut out = format!(
            "# tokens={} target={} replaced={} achieved_fraction={:.6}\n",
            self.total_tokens,
            self.target,
            self.log.len(),
            self.achieved_fraction()
        );
        for r in &self.log {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", r.sentence_id, r.index, r.old_form, r.new_form));
        }
        out
    }

    pub fn write_log(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.log_text()).map_err(|e| Error::io(path, e))
    }
}

/// Checks that both corpora have the same sentences with the same forms.
pub fn check_alignment(trees: &[ConstTree], deps: &[DepSentence]) -> Result<()> {
    if trees.len() != deps.len() {
        let k = trees.len().min(deps.len());
        let id = trees
            .get(k)
            .map(|t| t.sentence_id.clone())
            .or_else(|| deps.get(k).map(|d| d.sentence_id.clone()))
            .unwrap_or_default();
        return Err(Error::Alignment {
            sentence: id,
            reason: format!("{} constituency vs {} dependency sentences", trees.len(), deps.len()),
        });
    }
    for (t, d) in trees.iter().zip(deps) {
        if t.len() != d.len() {
            return Err(Error::Alignment {
                sentence: t.sentence_id.clone(),
                reason: format!("{} vs {} tokens", t.len(), d.len()),
            });
        }
        if let Some(k) = (0..t.len()).find(|&k| t.tokens[k].form != d.tokens[k].form) {
            return Err(Error::Alignment {
                sentence: t.sentence_id.clone(),
                reason: format!(
                    "token {} is '{}' vs '{}'",
                    k, t.tokens[k].form, d.tokens[k].form
                ),
            });
        }
    }
    Ok(())
}

/// Replaces `⌊fraction · N⌋` tokens (N = corpus token count) by forms drawn
/// from `pool` under the token's dependency context, never the token's own
/// form. Candidates are visited in a seeded random order; a candidate with
/// no alternative in the pool is skipped and the next one is tried, so the
/// quota is met whenever the pool allows. Only forms change.
pub fn corrupt(
    trees: &[ConstTree],
    deps: &[DepSentence],
    pool: &ReplacementPool,
    fraction: f64,
    seed: u64,
    sampling: PoolSampling,
) -> Result<Corruption> {
    if !(0.0..=1.0).contains(&fraction) || fraction.is_nan() {
        return Err(Error::invalid(format!("fraction {} outside [0, 1]", fraction)));
    }
    check_alignment(trees, deps)?;
    let total_tokens: usize = trees.iter().map(|t| t.len()).sum();
    let target = (fraction * total_tokens as f64).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(usize, usize)> = trees
        .iter()
        .enumerate()
        .flat_map(|(s, t)| (0..t.len()).map(move |i| (s, i)))
        .collect();
    candidates.shuffle(&mut rng);

    let mut log = Vec::with_capacity(target);
    for (s, i) in candidates {
        if log.len() == target {
            break;
        }
        let own = &deps[s].tokens[i].form;
        let Some(entry) = pool.get(&dep_context(&deps[s], i)) else {
            continue;
        };
        if !entry.has_alternative_to(own) {
            continue;
        }
        let list = match sampling {
            PoolSampling::Occurrences => &entry.occurrences,
            PoolSampling::Types => &entry.types,
        };
        let new_form = loop {
            let f = &list[rng.random_range(0..list.len())];
            if f != own {
                break f.clone();
            }
        };
        log.push(Replacement {
            sentence: s,
            sentence_id: trees[s].sentence_id.clone(),
            index: i,
            old_form: own.clone(),
            new_form,
        });
    }

    let mut trees = trees.to_vec();
    let mut deps = deps.to_vec();
    for r in &log {
        trees[r.sentence].tokens[r.index].form = r.new_form.clone();
        deps[r.sentence].tokens[r.index].form = r.new_form.clone();
    }
    Ok(Corruption {
        trees,
        deps,
        log,
        target,
        total_tokens,
    })
}
