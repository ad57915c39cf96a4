//! Constituency and dependency treebanks.
//!
//! Trees are immutable after construction. Token positions are 0-based and
//! node spans are half-open intervals over those positions.

mod bracketing;
mod conll;
mod reader;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use bracketing::{
    bracketing_overlap, const_bracketings, dep_bracketings, Bracketing, BracketingOverlap,
};
pub use conll::{parse_conllx, read_conllx, write_conllx, DepSentence};
pub use reader::{parse_const_treebank, read_const_treebank, write_const_treebank, ReadOptions, ReadOutcome};

/// POS tags treated as punctuation.
pub const PUNCTUATION_TAGS: [&str; 7] = [".", ",", ":", "``", "''", "-LRB-", "-RRB-"];

/// POS tag of null elements (traces, empty complementizers, ...).
pub const NULL_TAG: &str = "-NONE-";

/// Chunk label given to punctuation tokens when punctuation is kept.
pub const PUNCT_CHUNK_LABEL: &str = "PCT";

pub fn is_punctuation(pos: &str) -> bool {
    PUNCTUATION_TAGS.contains(&pos)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub pos: String,
}

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Child {
    Node(ConstNode),
    /// Index into [`ConstTree::tokens`]. The token's POS tag plays the role
    /// of the preterminal, which is never a phrase.
    Token(usize),
}

impl Child {
    pub fn span(&self) -> Span {
        match self {
            Child::Node(n) => n.span,
            Child::Token(i) => Span::new(*i, *i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstNode {
    /// Category without function tags, e.g. `NP`.
    pub label: String,
    /// Function tags in order, e.g. `["SBJ"]` for `NP-SBJ`.
    pub function_tags: Vec<String>,
    pub span: Span,
    pub children: Vec<Child>,
}

impl ConstNode {
    /// Builds a node over `children`, deriving its span from theirs.
    ///
    /// Panics if `children` is empty or not adjacent.
    pub fn new(label: impl Into<String>, function_tags: Vec<String>, children: Vec<Child>) -> Self {
        assert!(!children.is_empty(), "internal node without children");
        for w in children.windows(2) {
            assert_eq!(w[0].span().end, w[1].span().start, "children not adjacent");
        }
        let span = Span::new(
            children[0].span().start,
            children[children.len() - 1].span().end,
        );
        ConstNode {
            label: label.into(),
            function_tags,
            span,
            children,
        }
    }

    /// Label with function tags, e.g. `NP-SBJ`.
    pub fn full_label(&self) -> String {
        let mut s = self.label.clone();
        for t in &self.function_tags {
            s.push('-');
            s.push_str(t);
        }
        s
    }

    pub fn child_nodes(&self) -> impl Iterator<Item = &ConstNode> {
        self.children.iter().filter_map(|c| match c {
            Child::Node(n) => Some(n),
            Child::Token(_) => None,
        })
    }

    /// Pre-order walk; `depth` of `self` is the value passed in.
    pub fn walk<'a>(&'a self, depth: usize, f: &mut impl FnMut(&'a ConstNode, usize)) {
        f(self, depth);
        for c in self.child_nodes() {
            c.walk(depth + 1, f);
        }
    }

    fn walk_mut(&mut self, f: &mut impl FnMut(&mut ConstNode)) {
        f(self);
        for c in self.children.iter_mut() {
            if let Child::Node(n) = c {
                n.walk_mut(f);
            }
        }
    }

    /// The child node (if any) whose span contains both `i` and `j`.
    fn child_containing(&self, i: usize, j: usize) -> Option<&ConstNode> {
        self.child_nodes()
            .find(|n| n.span.contains(i) && n.span.contains(j))
    }

    fn check(&self, tokens: usize, seen: &mut [bool]) -> Result<()> {
        if self.children.is_empty() {
            return Err(Error::invalid(format!("node {} has no children", self.label)));
        }
        if self.span.is_empty() || self.span.end > tokens {
            return Err(Error::invalid(format!("node {} has bad span", self.label)));
        }
        let mut expected = self.span.start;
        for c in &self.children {
            let s = c.span();
            if s.start != expected || s.is_empty() {
                return Err(Error::invalid(format!(
                    "children of {} do not tile its span",
                    self.label
                )));
            }
            expected = s.end;
            match c {
                Child::Node(n) => n.check(tokens, seen)?,
                Child::Token(i) => {
                    if *i >= tokens || seen[*i] {
                        return Err(Error::invalid(format!("token {} reached twice", i)));
                    }
                    seen[*i] = true;
                }
            }
        }
        if expected != self.span.end {
            return Err(Error::invalid(format!(
                "children of {} do not cover its span",
                self.label
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstTree {
    pub sentence_id: String,
    pub root: ConstNode,
    pub tokens: Vec<Token>,
}

impl ConstTree {
    /// Assembles a tree and checks its invariants.
    pub fn new(sentence_id: impl Into<String>, root: ConstNode, tokens: Vec<Token>) -> Result<Self> {
        let tree = ConstTree {
            sentence_id: sentence_id.into(),
            root,
            tokens,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// Checks span consistency, token coverage and token numbering.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(Error::invalid("tree without tokens"));
        }
        for (k, t) in self.tokens.iter().enumerate() {
            if t.index != k {
                return Err(Error::invalid(format!("token {} carries index {}", k, t.index)));
            }
            if t.form.is_empty() {
                return Err(Error::invalid(format!("token {} has an empty form", k)));
            }
        }
        if self.root.span != Span::new(0, n) {
            return Err(Error::invalid("root does not span the sentence"));
        }
        let mut seen = vec![false; n];
        self.root.check(n, &mut seen)?;
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("unreachable token"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    pub fn pos_tags(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.pos.as_str()).collect()
    }

    /// All phrasal nodes with their depth (root has depth 1), pre-order.
    pub fn nodes(&self) -> Vec<(&ConstNode, usize)> {
        let mut out = Vec::new();
        self.root.walk(1, &mut |n, d| out.push((n, d)));
        out
    }

    /// Lowest phrasal node containing tokens `i` and `j`, with its depth.
    pub fn lca_node(&self, i: usize, j: usize) -> Result<(&ConstNode, usize)> {
        let n = self.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::OutOfRange { index: idx, len: n });
            }
        }
        let mut node = &self.root;
        let mut depth = 1;
        while let Some(child) = node.child_containing(i, j) {
            node = child;
            depth += 1;
        }
        Ok((node, depth))
    }

    /// Chain of phrasal nodes from the root down to the lowest one above
    /// token `i`.
    pub fn path_to(&self, i: usize) -> Vec<&ConstNode> {
        let mut path = vec![&self.root];
        let mut node = &self.root;
        while let Some(child) = node.child_containing(i, i) {
            path.push(child);
            node = child;
        }
        path
    }

    /// Removes function tags from every node.
    pub fn strip_function_tags(&mut self) {
        self.root.walk_mut(&mut |n| n.function_tags.clear());
    }

    /// One-line bracketed form, e.g. `(S (NP (DT the) (NN cat)) (VP (VBD sat)))`.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write_node(&self.root, &mut out);
        out
    }

    fn write_node(&self, node: &ConstNode, out: &mut String) {
        out.push('(');
        out.push_str(&node.full_label());
        for c in &node.children {
            out.push(' ');
            match c {
                Child::Node(n) => self.write_node(n, out),
                Child::Token(i) => {
                    let t = &self.tokens[*i];
                    out.push('(');
                    out.push_str(&t.pos);
                    out.push(' ');
                    out.push_str(&t.form);
                    out.push(')');
                }
            }
        }
        out.push(')');
    }
}

/// Label of the lowest common ancestor of tokens `i` and `j`, function tags
/// stripped. For `i == j` this is the lowest phrasal node above the token.
pub fn lca_label(tree: &ConstTree, i: usize, j: usize) -> Result<String> {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    tree.lca_node(lo, hi).map(|(n, _)| n.label.clone())
}

/// Per-token chunk labels relative to the shortest phrase containing each
/// token: `B`, `I`, `E` or `S`. In detailed mode the phrase label (with
/// function tags) is appended, e.g. `B-NP-SBJ`. Punctuation tokens that
/// survived preprocessing are labelled [`PUNCT_CHUNK_LABEL`].
pub fn chunk_labels(tree: &ConstTree, detailed: bool) -> Vec<String> {
    (0..tree.len())
        .map(|i| {
            if is_punctuation(&tree.tokens[i].pos) {
                return PUNCT_CHUNK_LABEL.to_string();
            }
            let path = tree.path_to(i);
            let phrase = path[path.len() - 1];
            let pos = match (phrase.span.start == i, phrase.span.end == i + 1) {
                (true, true) => "S",
                (true, false) => "B",
                (false, true) => "E",
                (false, false) => "I",
            };
            if detailed {
                format!("{}-{}", pos, phrase.full_label())
            } else {
                pos.to_string()
            }
        })
        .collect()
}

/// Splits a raw treebank label such as `NP-SBJ-1` or `NP=2` into its category
/// and function tags. Gapping indices (`=N`) are always dropped; co-indices
/// (`-N`) are dropped when `strip_numeric` is set.
pub fn split_label(raw: &str, strip_numeric: bool) -> (String, Vec<String>) {
    if raw.is_empty() || raw.starts_with('-') {
        return (raw.to_string(), Vec::new());
    }
    let mut parts = raw.split('-');
    let head = parts.next().unwrap_or("");
    let base = head.split('=').next().unwrap_or(head).to_string();
    let mut tags = Vec::new();
    for p in parts {
        let p = p.split('=').next().unwrap_or(p);
        if p.is_empty() {
            continue;
        }
        if strip_numeric && p.chars().all(|c| c.is_ascii_digit()) {
            continue;
        }
        tags.push(p.to_string());
    }
    (base, tags)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub const LUXURY_MAKER: &str = "(S (NP-SBJ (DT The) (NN luxury) (NN auto) (NN maker)) \
        (NP-TMP (JJ last) (NN year)) (VP (VBD sold) (NP (CD 1,214) (NNS cars)) \
        (PP-LOC (IN in) (NP (DT the) (NNP U.S.)))))";

    pub fn luxury_maker() -> ConstTree {
        parse_const_treebank(LUXURY_MAKER, &ReadOptions::default(), "luxury_maker")
            .unwrap()
            .trees
            .remove(0)
    }

    fn one(text: &str) -> ConstTree {
        parse_const_treebank(text, &ReadOptions::default(), "t")
            .unwrap()
            .trees
            .remove(0)
    }

    #[test]
    fn luxury_maker_structure() {
        let t = luxury_maker();
        assert_eq!(t.len(), 12);
        assert_eq!(t.root.label, "S");
        let kids: Vec<_> = t.root.child_nodes().map(|n| (n.full_label(), n.span)).collect();
        assert_eq!(
            kids,
            vec![
                ("NP-SBJ".to_string(), Span::new(0, 4)),
                ("NP-TMP".to_string(), Span::new(4, 6)),
                ("VP".to_string(), Span::new(6, 12)),
            ]
        );
    }

    #[test]
    fn lca_examples() {
        let t = luxury_maker();
        let idx = |w: &str| t.tokens.iter().position(|x| x.form == w).unwrap();
        assert_eq!(lca_label(&t, idx("luxury"), idx("maker")).unwrap(), "NP");
        assert_eq!(lca_label(&t, idx("sold"), idx("sold")).unwrap(), "VP");
        assert_eq!(lca_label(&t, 0, 11).unwrap(), "S");
        assert_eq!(lca_label(&t, 8, 10).unwrap(), "VP");
        assert!(matches!(lca_label(&t, 0, 12), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn lca_is_symmetric() {
        let t = luxury_maker();
        for i in 0..t.len() {
            for j in 0..t.len() {
                assert_eq!(lca_label(&t, i, j).unwrap(), lca_label(&t, j, i).unwrap());
            }
        }
    }

    #[test]
    fn chunking_luxury_maker() {
        let t = luxury_maker();
        assert_eq!(
            chunk_labels(&t, false).join(" "),
            "B I I E B E B B E B B E"
        );
        let detailed = chunk_labels(&t, true);
        assert_eq!(detailed[7], "B-NP");
        assert_eq!(detailed[0], "B-NP-SBJ");
        assert_eq!(detailed[5], "E-NP-TMP");
    }

    #[test]
    fn chunking_single_token() {
        let t = one("(S (ADVP (RB now)))");
        assert_eq!(chunk_labels(&t, false), vec!["S"]);
        assert_eq!(chunk_labels(&t, true), vec!["S-ADVP"]);
    }

    #[test]
    fn label_splitting() {
        assert_eq!(split_label("NP-SBJ-1", true), ("NP".into(), vec!["SBJ".into()]));
        assert_eq!(
            split_label("NP-SBJ-1", false),
            ("NP".into(), vec!["SBJ".into(), "1".into()])
        );
        assert_eq!(split_label("NP=2", true), ("NP".into(), vec![]));
        assert_eq!(split_label("PP-LOC-CLR", true).1, vec!["LOC", "CLR"]);
        assert_eq!(split_label("-NONE-", true).0, "-NONE-");
        assert_eq!(split_label("PRT|ADVP", true).0, "PRT|ADVP");
    }

    #[test]
    fn validate_rejects_gaps() {
        let t = luxury_maker();
        let mut bad = t.clone();
        bad.tokens.pop();
        assert!(bad.validate().is_err());
        let mut bad = t;
        bad.tokens[3].index = 7;
        assert!(bad.validate().is_err());
    }
}
