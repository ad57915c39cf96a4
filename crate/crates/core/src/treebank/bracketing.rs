//! Unlabeled bracketings of constituency and dependency trees.

use std::collections::BTreeSet;

use super::{ConstTree, DepSentence};

/// Set of token positions spanned by a subtree, optionally labeled.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bracketing {
    /// Sorted, nonempty.
    pub tokens: Vec<usize>,
    pub label: Option<String>,
}

impl Bracketing {
    pub fn is_contiguous(&self) -> bool {
        self.tokens.windows(2).all(|w| w[1] == w[0] + 1)
    }
}

/// One bracketing per phrasal node; duplicate index sets (unary chains)
/// collapse to the first, highest node.
pub fn const_bracketings(tree: &ConstTree) -> Vec<Bracketing> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (node, _) in tree.nodes() {
        if seen.insert((node.span.start, node.span.end)) {
            out.push(Bracketing {
                tokens: (node.span.start..node.span.end).collect(),
                label: Some(node.label.clone()),
            });
        }
    }
    out
}

/// One bracketing per token: the token together with all its transitive
/// dependents.
pub fn dep_bracketings(dep: &DepSentence) -> Vec<Bracketing> {
    let n = dep.len();
    let mut children = vec![Vec::new(); n];
    for (k, &h) in dep.heads.iter().enumerate() {
        if h > 0 {
            children[h - 1].push(k);
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for i in 0..n {
        let mut yield_ = Vec::new();
        let mut stack = vec![i];
        while let Some(k) = stack.pop() {
            yield_.push(k);
            stack.extend(children[k].iter().copied());
        }
        yield_.sort_unstable();
        if seen.insert(yield_.clone()) {
            out.push(Bracketing {
                tokens: yield_,
                label: None,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketingOverlap {
    pub shared: usize,
    pub dep_total: usize,
    pub const_total: usize,
}

impl BracketingOverlap {
    /// Share of dependency bracketings that are also constituency
    /// bracketings; `None` when there are no dependency bracketings.
    pub fn dep_in_const(&self) -> Option<f64> {
        (self.dep_total > 0).then(|| self.shared as f64 / self.dep_total as f64)
    }

    pub fn const_in_dep(&self) -> Option<f64> {
        (self.const_total > 0).then(|| self.shared as f64 / self.const_total as f64)
    }
}

/// Micro-averaged overlap of unlabeled bracketings over paired sentences.
/// Bracketings are compared by their index sets only.
pub fn bracketing_overlap(consts: &[Vec<Bracketing>], deps: &[Vec<Bracketing>]) -> BracketingOverlap {
    let mut shared = 0;
    let mut dep_total = 0;
    let mut const_total = 0;
    for (c, d) in consts.iter().zip(deps) {
        let cs: BTreeSet<&[usize]> = c.iter().map(|b| b.tokens.as_slice()).collect();
        let ds: BTreeSet<&[usize]> = d.iter().map(|b| b.tokens.as_slice()).collect();
        shared += cs.intersection(&ds).count();
        dep_total += ds.len();
        const_total += cs.len();
    }
    BracketingOverlap {
        shared,
        dep_total,
        const_total,
    }
}
