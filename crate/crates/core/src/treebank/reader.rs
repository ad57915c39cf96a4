//! Bracketed (PTB `.mrg` style) treebank reading and writing.

use std::fs;
use std::path::Path;

use log::warn;

use super::{is_punctuation, split_label, Child, ConstNode, ConstTree, Token, NULL_TAG};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOptions {
    pub strip_numeric_indices: bool,
    pub remove_punct: bool,
    pub remove_null: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            strip_numeric_indices: true,
            remove_punct: true,
            remove_null: true,
        }
    }
}

impl ReadOptions {
    /// Reads trees exactly as written.
    pub fn verbatim() -> Self {
        ReadOptions {
            strip_numeric_indices: false,
            remove_punct: false,
            remove_null: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReadOutcome {
    pub trees: Vec<ConstTree>,
    /// Sentences that became empty after filtering.
    pub dropped: usize,
}

pub fn read_const_treebank(path: impl AsRef<Path>, opts: &ReadOptions) -> Result<ReadOutcome> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let prefix = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_const_treebank(&text, opts, &prefix)
}

/// Writes one tree per line.
pub fn write_const_treebank(path: impl AsRef<Path>, trees: &[ConstTree]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for t in trees {
        out.push_str(&t.to_bracketed());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses bracketed trees from `text`. Sentence ids are `{prefix}:{k}` with
/// `k` the 0-based position of the tree in the input, so ids stay stable when
/// sentences are dropped.
pub fn parse_const_treebank(text: &str, opts: &ReadOptions, prefix: &str) -> Result<ReadOutcome> {
    let sexps = Lexer::new(text).parse_all()?;
    let mut trees = Vec::with_capacity(sexps.len());
    let mut dropped = 0;
    for (k, sexp) in sexps.into_iter().enumerate() {
        let raw = to_raw(sexp)?;
        let raw = unwrap_root(raw);
        match filter(raw, opts) {
            Some(raw) => {
                let id = format!("{}:{}", prefix, k);
                trees.push(build_tree(id, raw, opts)?);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        warn!("{} sentence(s) empty after filtering were dropped", dropped);
    }
    Ok(ReadOutcome { trees, dropped })
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

enum Sexp {
    List(Vec<Sexp>, Pos),
    Atom(String, Pos),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn error(&self, pos: Pos, message: impl Into<String>) -> Error {
        Error::Parse {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn parse_all(mut self) -> Result<Vec<Sexp>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            match self.chars.peek() {
                None => return Ok(out),
                Some('(') => out.push(self.parse_list()?),
                Some(_) => {
                    let p = self.pos();
                    return Err(self.error(p, "text outside of a tree"));
                }
            }
        }
    }

    fn parse_list(&mut self) -> Result<Sexp> {
        let open = self.pos();
        self.bump();
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.chars.peek().copied() {
                None => return Err(self.error(open, "unclosed parenthesis")),
                Some(')') => {
                    self.bump();
                    return Ok(Sexp::List(items, open));
                }
                Some('(') => items.push(self.parse_list()?),
                Some(_) => {
                    let p = self.pos();
                    let mut atom = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' {
                            break;
                        }
                        atom.push(c);
                        self.bump();
                    }
                    items.push(Sexp::Atom(atom, p));
                }
            }
        }
    }
}

enum Raw {
    Node { label: String, children: Vec<Raw> },
    Leaf { pos: String, form: String },
}

fn to_raw(sexp: Sexp) -> Result<Raw> {
    let (items, pos) = match sexp {
        Sexp::List(items, pos) => (items, pos),
        Sexp::Atom(_, pos) => {
            return Err(Error::Parse {
                line: pos.line,
                column: pos.column,
                message: "bare word where a bracket was expected".into(),
            })
        }
    };
    let mut it = items.into_iter().peekable();
    let label = match it.peek() {
        Some(Sexp::Atom(..)) => match it.next() {
            Some(Sexp::Atom(s, _)) => s,
            _ => unreachable!(),
        },
        _ => String::new(),
    };
    let rest: Vec<Sexp> = it.collect();
    if rest.is_empty() {
        return Err(Error::Parse {
            line: pos.line,
            column: pos.column,
            message: format!("empty constituent '{}'", label),
        });
    }
    if rest.len() == 1 {
        if let Sexp::Atom(..) = &rest[0] {
            let form = match rest.into_iter().next() {
                Some(Sexp::Atom(s, _)) => s,
                _ => unreachable!(),
            };
            return Ok(Raw::Leaf { pos: label, form });
        }
    }
    let mut children = Vec::with_capacity(rest.len());
    for s in rest {
        if let Sexp::Atom(_, p) = s {
            return Err(Error::Parse {
                line: p.line,
                column: p.column,
                message: format!("bare word inside constituent '{}'", label),
            });
        }
        children.push(to_raw(s)?);
    }
    Ok(Raw::Node { label, children })
}

/// Removes an unlabelled (or `ROOT`/`TOP`) wrapper around a single phrase.
fn unwrap_root(raw: Raw) -> Raw {
    match raw {
        Raw::Node { label, mut children }
            if (label.is_empty() || label == "ROOT" || label == "TOP")
                && children.len() == 1
                && matches!(children[0], Raw::Node { .. }) =>
        {
            children.pop().unwrap()
        }
        other => other,
    }
}

fn filter(raw: Raw, opts: &ReadOptions) -> Option<Raw> {
    match raw {
        Raw::Leaf { ref pos, .. } => {
            if (opts.remove_null && pos == NULL_TAG) || (opts.remove_punct && is_punctuation(pos)) {
                None
            } else {
                Some(raw)
            }
        }
        Raw::Node { label, children } => {
            let children: Vec<Raw> = children.into_iter().filter_map(|c| filter(c, opts)).collect();
            if children.is_empty() {
                None
            } else {
                Some(Raw::Node { label, children })
            }
        }
    }
}

fn build_tree(id: String, raw: Raw, opts: &ReadOptions) -> Result<ConstTree> {
    let mut tokens = Vec::new();
    let root = match raw {
        // A lone preterminal gets an unlabelled phrase above it.
        leaf @ Raw::Leaf { .. } => ConstNode::new("", Vec::new(), vec![build_child(leaf, opts, &mut tokens)]),
        node => match build_child(node, opts, &mut tokens) {
            Child::Node(n) => n,
            Child::Token(_) => unreachable!(),
        },
    };
    ConstTree::new(id, root, tokens)
}

fn build_child(raw: Raw, opts: &ReadOptions, tokens: &mut Vec<Token>) -> Child {
    match raw {
        Raw::Leaf { pos, form } => {
            let index = tokens.len();
            tokens.push(Token { index, form, pos });
            Child::Token(index)
        }
        Raw::Node { label, children } => {
            let (label, tags) = split_label(&label, opts.strip_numeric_indices);
            let children = children
                .into_iter()
                .map(|c| build_child(c, opts, tokens))
                .collect();
            Child::Node(ConstNode::new(label, tags, children))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::Span;
    use super::*;

    #[test]
    fn no_filtering_needed_is_identity() {
        let out = parse_const_treebank("(S (NP (DT the)))", &ReadOptions::default(), "x").unwrap();
        assert_eq!(out.trees.len(), 1);
        assert_eq!(out.trees[0].to_bracketed(), "(S (NP (DT the)))");
    }

    #[test]
    fn null_removal_cascades() {
        // The NP dominating only the trace disappears with it.
        let text = "(S (NP-SBJ (DT the) (NN dog)) (VP (VBD saw) (NP (-NONE- *T*-1)) (NN x)))";
        let t = parse_const_treebank(text, &ReadOptions::default(), "x").unwrap().trees.remove(0);
        assert_eq!(
            t.to_bracketed(),
            "(S (NP-SBJ (DT the) (NN dog)) (VP (VBD saw) (NN x)))"
        );
        assert_eq!(t.len(), 4);
        let vp = t.root.child_nodes().nth(1).unwrap();
        assert_eq!(vp.span, Span::new(2, 4));
        assert_eq!(vp.children[1].span(), Span::new(3, 4));
    }

    #[test]
    fn null_removal_three_tokens() {
        let text = "(S (NP (-NONE- *T*-1)) (VP (VBD ran) (ADVP (RB away))) (NN x))";
        let t = parse_const_treebank(text, &ReadOptions::default(), "x").unwrap().trees.remove(0);
        assert_eq!(t.forms(), vec!["ran", "away", "x"]);
        let vp = t.root.child_nodes().next().unwrap();
        assert_eq!(vp.label, "VP");
        assert_eq!(vp.span, Span::new(0, 2));
    }

    #[test]
    fn punctuation_and_indices() {
        let text = "( (S (NP-SBJ-1 (NNP Pierre) (NNP Vinken)) (, ,) (VP (MD will) (VP (VB join))) (. .)) )";
        let t = parse_const_treebank(text, &ReadOptions::default(), "x").unwrap().trees.remove(0);
        assert_eq!(t.forms(), vec!["Pierre", "Vinken", "will", "join"]);
        assert_eq!(t.root.label, "S");
        assert_eq!(t.root.child_nodes().next().unwrap().full_label(), "NP-SBJ");

        let t = parse_const_treebank(text, &ReadOptions::verbatim(), "x").unwrap().trees.remove(0);
        assert_eq!(t.len(), 6);
        assert_eq!(t.root.child_nodes().next().unwrap().full_label(), "NP-SBJ-1");
        // Currency stays.
        let t = parse_const_treebank("(NP (QP ($ $) (CD 80.3) (CD million)))", &ReadOptions::default(), "x")
            .unwrap()
            .trees
            .remove(0);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn empty_after_filtering_is_dropped() {
        let text = "(S (NP (-NONE- *)) (. .)) (S (NN a))";
        let out = parse_const_treebank(text, &ReadOptions::default(), "x").unwrap();
        assert_eq!(out.dropped, 1);
        assert_eq!(out.trees.len(), 1);
        assert_eq!(out.trees[0].sentence_id, "x:1");
    }

    #[test]
    fn malformed_input_reports_position() {
        let err = parse_const_treebank("(S (NP (DT the)\n  (NN cat)", &ReadOptions::default(), "x").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 4)),
            e => panic!("unexpected {e:?}"),
        }
        let err = parse_const_treebank("(S (NP the cat))", &ReadOptions::default(), "x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, column: 8, .. }), "{err:?}");
        assert!(parse_const_treebank("S (NN a)", &ReadOptions::default(), "x").is_err());
    }

    #[test]
    fn multiple_trees_and_whitespace() {
        let text = "(S\n  (NP (DT a)\n      (NN b)))\n\n(S (VP (VB go)))";
        let out = parse_const_treebank(text, &ReadOptions::default(), "f").unwrap();
        assert_eq!(out.trees.len(), 2);
        assert_eq!(out.trees[0].to_bracketed(), "(S (NP (DT a) (NN b)))");
    }
}
