//! Synthetic corpora for tests, benchmarks and smoke runs.
//!
//! [`toy_corpus`] samples sentences from a small English-like grammar and
//! returns each one both as a constituency tree and as a token-aligned
//! dependency tree (heads are fixed by the grammar rules themselves).
//! [`random_tree`] draws arbitrary labelled trees of bounded size.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::treebank::{Child, ConstNode, ConstTree, DepSentence, Token};

const LEXICON: &[(&str, &[&str])] = &[
    ("DT", &["the", "a", "this", "every", "some", "that"]),
    ("NN", &["maker", "year", "board", "director", "company", "car", "market", "deal", "price", "week", "group", "plan"]),
    ("NNS", &["cars", "shares", "years", "increases", "prices", "investors", "sales", "bonds"]),
    ("NNP", &["Pierre", "Vinken", "Elsevier", "Dale", "Lang", "Sassy", "Mesnil", "Tokyo", "Berry"]),
    ("JJ", &["last", "luxury", "nonexecutive", "Dutch", "new", "cash-rich", "big", "old"]),
    ("VBD", &["sold", "bought", "completed", "sought", "joined", "rejected", "said", "had"]),
    ("VB", &["join", "buy", "sell", "complete", "succeed", "raise"]),
    ("MD", &["will", "shall", "could", "may"]),
    ("IN", &["in", "of", "on", "at", "after", "without"]),
    ("PRP", &["he", "she", "it", "they"]),
    ("RB", &["now", "also", "still", "quickly"]),
    ("CD", &["61", "29", "1,214", "5,400", "80.3", "22"]),
    ("CC", &["and", "or"]),
    ("$", &["$"]),
];

fn word(rng: &mut ChaCha8Rng, pos: &'static str) -> Gen {
    let forms = LEXICON.iter().find(|(p, _)| *p == pos).expect("unknown POS").1;
    Gen::Word {
        pos,
        form: forms.choose(rng).unwrap(),
    }
}

enum Gen {
    Word {
        pos: &'static str,
        form: &'static str,
    },
    Phrase {
        label: &'static str,
        tags: &'static [&'static str],
        head: usize,
        /// Relation of each non-head child to the head; ignored at `head`.
        rels: Vec<&'static str>,
        children: Vec<Gen>,
    },
}

fn phrase(label: &'static str, tags: &'static [&'static str], head: usize, parts: Vec<(&'static str, Gen)>) -> Gen {
    let (rels, children) = parts.into_iter().unzip();
    Gen::Phrase {
        label,
        tags,
        head,
        rels,
        children,
    }
}

struct Grammar<'r> {
    rng: &'r mut ChaCha8Rng,
    max_depth: usize,
}

impl Grammar<'_> {
    fn sentence(&mut self, depth: usize) -> Gen {
        let subj = self.np(depth + 1, &["SBJ"]);
        let r: f64 = self.rng.random();
        if r < 0.15 {
            let tmp = phrase("NP", &["TMP"], 1, vec![("amod", word(self.rng, "JJ")), ("", word(self.rng, "NN"))]);
            let vp = self.vp(depth + 1);
            phrase("S", &[], 2, vec![("nsubj", subj), ("tmod", tmp), ("", vp)])
        } else if r < 0.25 {
            let adv = phrase("ADVP", &[], 0, vec![("", word(self.rng, "RB"))]);
            let vp = self.vp(depth + 1);
            phrase("S", &[], 2, vec![("advmod", adv), ("nsubj", subj), ("", vp)])
        } else {
            let vp = self.vp(depth + 1);
            phrase("S", &[], 1, vec![("nsubj", subj), ("", vp)])
        }
    }

    fn np(&mut self, depth: usize, tags: &'static [&'static str]) -> Gen {
        let deep = depth >= self.max_depth;
        let r: f64 = self.rng.random();
        if !deep && r < 0.15 {
            let inner = self.np(depth + 1, &[]);
            let pp = self.pp(depth + 1);
            return phrase("NP", tags, 0, vec![("", inner), ("prep", pp)]);
        }
        match (r * 100.0) as u32 % 7 {
            0 => phrase("NP", tags, 1, vec![("det", word(self.rng, "DT")), ("", word(self.rng, "NN"))]),
            1 => phrase(
                "NP",
                tags,
                2,
                vec![("det", word(self.rng, "DT")), ("amod", word(self.rng, "JJ")), ("", word(self.rng, "NN"))],
            ),
            2 => phrase("NP", tags, 1, vec![("nn", word(self.rng, "NNP")), ("", word(self.rng, "NNP"))]),
            3 => phrase("NP", tags, 0, vec![("", word(self.rng, "PRP"))]),
            4 => phrase("NP", tags, 1, vec![("num", word(self.rng, "CD")), ("", word(self.rng, "NNS"))]),
            5 => {
                let qp = phrase(
                    "QP",
                    &[],
                    0,
                    vec![("", word(self.rng, "$")), ("number", word(self.rng, "CD")), ("num", word(self.rng, "CD"))],
                );
                phrase("NP", tags, 0, vec![("", qp)])
            }
            _ => phrase("NP", tags, 1, vec![("det", word(self.rng, "DT")), ("", word(self.rng, "NNS"))]),
        }
    }

    fn pp(&mut self, depth: usize) -> Gen {
        let obj = self.np(depth + 1, &[]);
        phrase("PP", &[], 0, vec![("", word(self.rng, "IN")), ("pobj", obj)])
    }

    fn vp(&mut self, depth: usize) -> Gen {
        let deep = depth >= self.max_depth;
        let r: f64 = self.rng.random();
        let verb = word(self.rng, "VBD");
        if deep || r < 0.1 {
            return phrase("VP", &[], 0, vec![("", verb)]);
        }
        if r < 0.4 {
            let obj = self.np(depth + 1, &[]);
            phrase("VP", &[], 0, vec![("", verb), ("dobj", obj)])
        } else if r < 0.6 {
            let obj = self.np(depth + 1, &[]);
            let pp = self.pp(depth + 1);
            phrase("VP", &[], 0, vec![("", verb), ("dobj", obj), ("prep", pp)])
        } else if r < 0.75 {
            let obj = self.np(depth + 1, &[]);
            let inner = phrase("VP", &[], 0, vec![("", word(self.rng, "VB")), ("dobj", obj)]);
            phrase("VP", &[], 1, vec![("aux", word(self.rng, "MD")), ("", inner)])
        } else if r < 0.88 && depth + 3 < self.max_depth {
            let s = self.sentence(depth + 2);
            let sbar = phrase("SBAR", &[], 1, vec![("mark", word(self.rng, "IN")), ("", s)]);
            phrase("VP", &[], 0, vec![("", verb), ("ccomp", sbar)])
        } else {
            let adv = phrase("ADVP", &[], 0, vec![("", word(self.rng, "RB"))]);
            phrase("VP", &[], 0, vec![("", verb), ("advmod", adv)])
        }
    }
}

/// Flattens a generated sentence into tokens, a constituency node, and the
/// index of its head token.
fn flatten(
    g: &Gen,
    tokens: &mut Vec<Token>,
    heads: &mut Vec<usize>,
    rels: &mut Vec<String>,
) -> (Child, usize) {
    match g {
        Gen::Word { pos, form } => {
            let index = tokens.len();
            tokens.push(Token {
                index,
                form: form.to_string(),
                pos: pos.to_string(),
            });
            heads.push(0);
            rels.push("root".into());
            (Child::Token(index), index)
        }
        Gen::Phrase {
            label,
            tags,
            head,
            rels: child_rels,
            children,
        } => {
            let mut built = Vec::with_capacity(children.len());
            let mut child_heads = Vec::with_capacity(children.len());
            for c in children {
                let (child, h) = flatten(c, tokens, heads, rels);
                built.push(child);
                child_heads.push(h);
            }
            let h = child_heads[*head];
            for (k, &ch) in child_heads.iter().enumerate() {
                if k != *head {
                    heads[ch] = h + 1;
                    rels[ch] = child_rels[k].to_string();
                }
            }
            let node = ConstNode::new(*label, tags.iter().map(|t| t.to_string()).collect(), built);
            (Child::Node(node), h)
        }
    }
}

/// Samples `sentences` aligned constituency/dependency pairs.
pub fn toy_corpus(sentences: usize, seed: u64) -> (Vec<ConstTree>, Vec<DepSentence>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(sentences);
    let mut deps = Vec::with_capacity(sentences);
    for k in 0..sentences {
        let g = Grammar {
            rng: &mut rng,
            max_depth: 7,
        }
        .sentence(1);
        let mut tokens = Vec::new();
        let mut heads = Vec::new();
        let mut rels = Vec::new();
        let (root, _) = flatten(&g, &mut tokens, &mut heads, &mut rels);
        let root = match root {
            Child::Node(n) => n,
            Child::Token(_) => unreachable!(),
        };
        let id = format!("toy:{}", k);
        deps.push(DepSentence::new(id.clone(), tokens.clone(), heads, rels).expect("grammar yields trees"));
        trees.push(ConstTree::new(id, root, tokens).expect("grammar yields valid trees"));
    }
    (trees, deps)
}

/// Samples sentences until the corpus holds at least `min_tokens` tokens.
pub fn toy_corpus_with_tokens(min_tokens: usize, seed: u64) -> (Vec<ConstTree>, Vec<DepSentence>) {
    let mut n = (min_tokens / 8).max(1);
    loop {
        let (t, d) = toy_corpus(n, seed);
        if t.iter().map(|x| x.len()).sum::<usize>() >= min_tokens {
            let mut total = 0;
            let keep = t
                .iter()
                .take_while(|x| {
                    let before = total;
                    total += x.len();
                    before < min_tokens
                })
                .count();
            return (t[..keep].to_vec(), d[..keep].to_vec());
        }
        n *= 2;
    }
}

#[derive(Debug, Clone)]
pub struct RandomTreeParams {
    pub max_len: usize,
    pub max_depth: usize,
    pub labels: Vec<String>,
    pub pos_tags: Vec<String>,
    /// Probability that a single token gets a phrase of its own.
    pub unary_prob: f64,
    /// Probability of stacking an extra unary node above any phrase, which
    /// makes the tree non-canonical.
    pub chain_prob: f64,
}

impl Default for RandomTreeParams {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        RandomTreeParams {
            max_len: 25,
            max_depth: 8,
            labels: s(&["S", "NP", "VP", "PP", "SBAR", "ADJP", "ADVP", "QP", "WHNP", "PRN"]),
            pos_tags: s(&["DT", "NN", "VBD", "IN", "JJ", "RB", "CD", "NNS"]),
            unary_prob: 0.2,
            chain_prob: 0.0,
        }
    }
}

/// Draws a random tree with `1..=max_len` tokens and depth ≤ `max_depth`.
/// With `chain_prob == 0` the result is canonical.
pub fn random_tree(rng: &mut impl Rng, params: &RandomTreeParams, sentence_id: &str) -> ConstTree {
    let n = rng.random_range(1..=params.max_len);
    let tokens: Vec<Token> = (0..n)
        .map(|i| Token {
            index: i,
            form: format!("w{}", rng.random_range(0..50)),
            pos: params.pos_tags.choose(rng).unwrap().clone(),
        })
        .collect();
    let root = if n == 1 {
        ConstNode::new(params.labels.choose(rng).unwrap().clone(), Vec::new(), vec![Child::Token(0)])
    } else {
        random_node(rng, params, 0, n, 1)
    };
    ConstTree::new(sentence_id, root, tokens).expect("generator yields valid trees")
}

fn random_node(rng: &mut impl Rng, params: &RandomTreeParams, start: usize, end: usize, depth: usize) -> ConstNode {
    let len = end - start;
    let label = params.labels.choose(rng).unwrap().clone();
    let mut bounds = vec![start];
    if depth + 1 >= params.max_depth {
        bounds.extend(start + 1..end);
    } else {
        let k = rng.random_range(2..=len.min(4));
        let mut cuts: Vec<usize> = rand::seq::index::sample(rng, len - 1, k - 1)
            .into_iter()
            .map(|c| start + c + 1)
            .collect();
        cuts.sort_unstable();
        bounds.extend(cuts);
    }
    bounds.push(end);
    let children = bounds
        .windows(2)
        .map(|w| {
            if w[1] - w[0] == 1 {
                let tok = Child::Token(w[0]);
                if depth + 1 < params.max_depth && rng.random_bool(params.unary_prob) {
                    let l = params.labels.choose(rng).unwrap().clone();
                    Child::Node(ConstNode::new(l, Vec::new(), vec![tok]))
                } else {
                    tok
                }
            } else {
                Child::Node(random_node(rng, params, w[0], w[1], depth + 1))
            }
        })
        .collect();
    let node = ConstNode::new(label, Vec::new(), children);
    if params.chain_prob > 0.0 && rng.random_bool(params.chain_prob) {
        let l = params.labels.choose(rng).unwrap().clone();
        ConstNode::new(l, Vec::new(), vec![Child::Node(node)])
    } else {
        node
    }
}
