//! Per-token label-triple encoding of constituency trees.
//!
//! Token `i` (except the last) carries the label of the lowest common
//! ancestor of `(w_i, w_{i+1})` and the depth of that ancestor, coded
//! relative to the previous pair's ancestor. The root has depth 1; a pair
//! whose ancestor is the root gets the `ROOT` code; the first pair's depth is
//! absolute. A third label names the phrase directly above a token that forms
//! a constituent on its own. The last token carries a sentinel in place of
//! the first two labels.
//!
//! Only canonical trees are encodable: no unary node above a multiword span
//! and at most one phrase directly above any single token.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::treebank::{Child, ConstNode, ConstTree, Token};
use crate::{Error, Result};

/// Placeholder carried by the last token.
pub const SENTINEL: &str = "·";
/// Negative class of the unary task.
pub const NONE_LABEL: &str = "NONE";
pub const ROOT_CODE: &str = "ROOT";
/// Root label used when decoding a one-token sentence without a unary label.
pub const FALLBACK_ROOT_LABEL: &str = "S";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DepthCode {
    /// Depth of the first pair's ancestor.
    Absolute(i32),
    /// Difference to the previous pair's ancestor depth.
    Relative(i32),
    Root,
    Sentinel,
}

impl fmt::Display for DepthCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepthCode::Absolute(d) | DepthCode::Relative(d) => write!(f, "{}", d),
            DepthCode::Root => f.write_str(ROOT_CODE),
            DepthCode::Sentinel => f.write_str(SENTINEL),
        }
    }
}

impl DepthCode {
    /// Parses a depth label. Integers are read as relative; the decoder
    /// treats the first token's code as absolute regardless.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            ROOT_CODE => Ok(DepthCode::Root),
            SENTINEL => Ok(DepthCode::Sentinel),
            _ => i32::from_str(s)
                .map(DepthCode::Relative)
                .map_err(|_| Error::invalid(format!("bad depth code '{}'", s))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeqLabelTriple {
    pub lca_label: String,
    pub depth: DepthCode,
    /// `None` encodes the negative class.
    pub unary: Option<String>,
}

impl SeqLabelTriple {
    pub fn is_sentinel(&self) -> bool {
        self.depth == DepthCode::Sentinel
    }

    pub fn unary_label(&self) -> &str {
        self.unary.as_deref().unwrap_or(NONE_LABEL)
    }
}

/// A tree in the encodable class. Function tags are stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalTree(ConstTree);

impl CanonicalTree {
    /// Wraps `tree` if it is already canonical and tag-free.
    pub fn try_from_tree(tree: ConstTree) -> Result<Self> {
        if is_canonical(&tree) {
            Ok(CanonicalTree(tree))
        } else {
            Err(Error::invalid(format!(
                "tree {} is not canonical",
                tree.sentence_id
            )))
        }
    }

    pub fn tree(&self) -> &ConstTree {
        &self.0
    }

    pub fn into_tree(self) -> ConstTree {
        self.0
    }
}

/// True if no phrase has a single phrasal child and no node carries
/// function tags.
pub fn is_canonical(tree: &ConstTree) -> bool {
    let mut ok = true;
    tree.root.walk(1, &mut |n, _| {
        if !n.function_tags.is_empty()
            || (n.children.len() == 1 && matches!(n.children[0], Child::Node(_)))
        {
            ok = false;
        }
    });
    ok
}

/// Strips function tags and collapses every unary chain to its lowest node.
pub fn canonicalize(tree: &ConstTree) -> CanonicalTree {
    fn collapse(node: &ConstNode) -> ConstNode {
        if node.children.len() == 1 {
            if let Child::Node(only) = &node.children[0] {
                return collapse(only);
            }
        }
        let children = node
            .children
            .iter()
            .map(|c| match c {
                Child::Node(n) => Child::Node(collapse(n)),
                Child::Token(i) => Child::Token(*i),
            })
            .collect();
        ConstNode::new(node.label.clone(), Vec::new(), children)
    }
    CanonicalTree(ConstTree {
        sentence_id: tree.sentence_id.clone(),
        root: collapse(&tree.root),
        tokens: tree.tokens.clone(),
    })
}

/// Encodes a canonical tree as one triple per token.
pub fn encode(tree: &CanonicalTree) -> Vec<SeqLabelTriple> {
    let tree = tree.tree();
    let n = tree.len();
    let paths: Vec<Vec<&ConstNode>> = (0..n).map(|i| tree.path_to(i)).collect();
    let mut out = Vec::with_capacity(n);
    let mut prev_depth = 0i32;
    for i in 0..n {
        let lowest = paths[i][paths[i].len() - 1];
        let unary = (lowest.span.len() == 1).then(|| lowest.label.clone());
        if i + 1 == n {
            out.push(SeqLabelTriple {
                lca_label: SENTINEL.to_string(),
                depth: DepthCode::Sentinel,
                unary,
            });
            break;
        }
        let shared = paths[i]
            .iter()
            .zip(&paths[i + 1])
            .take_while(|(a, b)| std::ptr::eq(**a, **b))
            .count();
        let lca = paths[i][shared - 1];
        let depth = shared as i32;
        let code = if i == 0 {
            DepthCode::Absolute(depth)
        } else if depth == 1 {
            DepthCode::Root
        } else {
            DepthCode::Relative(depth - prev_depth)
        };
        prev_depth = depth;
        out.push(SeqLabelTriple {
            lca_label: lca.label.clone(),
            depth: code,
            unary,
        });
    }
    out
}

/// Absolute ancestor depths for the `n - 1` adjacent pairs, clamped to ≥ 1.
/// A sentinel in a pair slot counts as "no change".
pub fn absolute_depths(triples: &[SeqLabelTriple]) -> Vec<i32> {
    let pairs = triples.len().saturating_sub(1);
    let mut depths = Vec::with_capacity(pairs);
    let mut prev = 1i32;
    for (i, t) in triples.iter().take(pairs).enumerate() {
        let d = match t.depth {
            DepthCode::Root => 1,
            DepthCode::Absolute(k) | DepthCode::Relative(k) if i == 0 => k,
            DepthCode::Absolute(k) | DepthCode::Relative(k) => prev.saturating_add(k),
            DepthCode::Sentinel => prev,
        };
        let d = d.max(1);
        depths.push(d);
        prev = d;
    }
    depths
}

/// Builds a tree from (possibly inconsistent) predicted triples.
///
/// Within any multiword segment, the pairs of minimal depth become the split
/// points of that segment's node. Levels no pair claims are skipped, which
/// clamps jumps such as `1, +5` to one level below the parent. The node label
/// is the majority label of its split pairs, ties going to the leftmost.
/// Decoding never fails for `triples.len() == tokens.len() >= 1`.
pub fn decode(
    sentence_id: &str,
    triples: &[SeqLabelTriple],
    forms: &[&str],
    pos_tags: &[&str],
) -> Result<ConstTree> {
    let n = forms.len();
    if n == 0 || triples.len() != n || pos_tags.len() != n {
        return Err(Error::invalid(format!(
            "decode needs one triple and one tag per token ({} tokens, {} triples, {} tags)",
            n,
            triples.len(),
            pos_tags.len()
        )));
    }
    let depths = absolute_depths(triples);
    let tokens: Vec<Token> = (0..n)
        .map(|i| Token {
            index: i,
            form: forms[i].to_string(),
            pos: pos_tags[i].to_string(),
        })
        .collect();
    let unary = |i: usize| triples[i].unary.clone().filter(|l| l != NONE_LABEL);
    let root = if n == 1 {
        let label = unary(0).unwrap_or_else(|| FALLBACK_ROOT_LABEL.to_string());
        ConstNode::new(label, Vec::new(), vec![Child::Token(0)])
    } else {
        build_segment(0, n, &depths, triples, &unary)
    };
    ConstTree::new(sentence_id, root, tokens)
}

fn build_segment(
    start: usize,
    end: usize,
    depths: &[i32],
    triples: &[SeqLabelTriple],
    unary: &impl Fn(usize) -> Option<String>,
) -> ConstNode {
    debug_assert!(end - start >= 2);
    let pairs = start..end - 1;
    let min = pairs.clone().map(|i| depths[i]).min().unwrap();
    let splits: Vec<usize> = pairs.filter(|&i| depths[i] == min).collect();

    let mut counts: Vec<(&str, usize)> = Vec::new();
    for &i in &splits {
        let l = triples[i].lca_label.as_str();
        match counts.iter_mut().find(|(x, _)| *x == l) {
            Some((_, c)) => *c += 1,
            None => counts.push((l, 1)),
        }
    }
    // First maximum in first-occurrence order is the leftmost among ties.
    let mut label = counts[0];
    for &c in &counts[1..] {
        if c.1 > label.1 {
            label = c;
        }
    }

    let mut children = Vec::with_capacity(splits.len() + 1);
    let mut seg_start = start;
    for boundary in splits.iter().map(|&i| i + 1).chain(std::iter::once(end)) {
        if boundary - seg_start == 1 {
            let tok = Child::Token(seg_start);
            children.push(match unary(seg_start) {
                Some(l) => Child::Node(ConstNode::new(l, Vec::new(), vec![tok])),
                None => tok,
            });
        } else {
            children.push(Child::Node(build_segment(seg_start, boundary, depths, triples, unary)));
        }
        seg_start = boundary;
    }
    ConstNode::new(label.0, Vec::new(), children)
}

/// Writes `token \t lca_label \t depth_code \t unary_label` lines, one blank
/// line between sentences.
pub fn write_triples(path: impl AsRef<Path>, sentences: &[(Vec<String>, Vec<SeqLabelTriple>)]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (forms, triples) in sentences {
        for (f, t) in forms.iter().zip(triples) {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", f, t.lca_label, t.depth, t.unary_label()));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads the format of [`write_triples`].
pub fn parse_triples(text: &str) -> Result<Vec<(Vec<String>, Vec<SeqLabelTriple>)>> {
    let mut out = Vec::new();
    let mut forms = Vec::new();
    let mut triples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !forms.is_empty() {
                out.push((std::mem::take(&mut forms), std::mem::take(&mut triples)));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::Parse {
                line: lineno + 1,
                column: 1,
                message: format!("expected 4 columns, found {}", cols.len()),
            });
        }
        let depth = DepthCode::parse(cols[2]).map_err(|e| Error::Parse {
            line: lineno + 1,
            column: 1,
            message: e.to_string(),
        })?;
        let depth = match depth {
            DepthCode::Relative(k) if triples.is_empty() => DepthCode::Absolute(k),
            d => d,
        };
        forms.push(cols[0].to_string());
        triples.push(SeqLabelTriple {
            lca_label: cols[1].to_string(),
            depth,
            unary: (cols[3] != NONE_LABEL).then(|| cols[3].to_string()),
        });
    }
    if !forms.is_empty() {
        out.push((forms, triples));
    }
    Ok(out)
}
