//! CoNLL-X dependency files.

use std::fs;
use std::path::Path;

use super::{is_punctuation, Token};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepSentence {
    pub sentence_id: String,
    pub tokens: Vec<Token>,
    /// Per token: 0 for the artificial root, else the 1-based head position.
    pub heads: Vec<usize>,
    pub deprels: Vec<String>,
}

impl DepSentence {
    pub fn new(
        sentence_id: impl Into<String>,
        tokens: Vec<Token>,
        heads: Vec<usize>,
        deprels: Vec<String>,
    ) -> Result<Self> {
        let s = DepSentence {
            sentence_id: sentence_id.into(),
            tokens,
            heads,
            deprels,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Checks that the heads form a single tree rooted at 0.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        let bad = |reason: String| Error::Integrity {
            item: format!("sentence {}", self.sentence_id),
            reason,
        };
        if self.heads.len() != n || self.deprels.len() != n {
            return Err(bad("head/relation count differs from token count".into()));
        }
        if let Some((k, h)) = self.heads.iter().enumerate().find(|(_, &h)| h > n) {
            return Err(bad(format!("token {} has head {} beyond the sentence", k + 1, h)));
        }
        // Every token must reach the root without revisiting a node.
        for start in 0..n {
            let mut cur = start + 1;
            let mut steps = 0;
            while cur != 0 {
                cur = self.heads[cur - 1];
                steps += 1;
                if steps > n {
                    return Err(bad(format!("cycle through token {}", start + 1)));
                }
            }
        }
        Ok(())
    }

    /// 0-based indices of the direct dependents of 0-based token `i`.
    pub fn dependents(&self, i: usize) -> Vec<usize> {
        self.heads
            .iter()
            .enumerate()
            .filter(|(_, &h)| h == i + 1)
            .map(|(k, _)| k)
            .collect()
    }

    /// Drops tokens for which `remove` holds; dependents of a removed token
    /// are reattached to its nearest surviving ancestor.
    pub fn without(&self, remove: impl Fn(&Token) -> bool) -> DepSentence {
        let n = self.len();
        let keep: Vec<bool> = self.tokens.iter().map(|t| !remove(t)).collect();
        let mut new_pos = vec![0usize; n];
        let mut next = 0;
        for k in 0..n {
            if keep[k] {
                next += 1;
                new_pos[k] = next;
            }
        }
        let mut tokens = Vec::new();
        let mut heads = Vec::new();
        let mut deprels = Vec::new();
        for k in 0..n {
            if !keep[k] {
                continue;
            }
            let mut h = self.heads[k];
            while h != 0 && !keep[h - 1] {
                h = self.heads[h - 1];
            }
            let mut t = self.tokens[k].clone();
            t.index = tokens.len();
            tokens.push(t);
            heads.push(if h == 0 { 0 } else { new_pos[h - 1] });
            deprels.push(self.deprels[k].clone());
        }
        DepSentence {
            sentence_id: self.sentence_id.clone(),
            tokens,
            heads,
            deprels,
        }
    }

    fn to_conllx(&self) -> String {
        let mut out = String::new();
        for (k, t) in self.tokens.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t_\t{}\t{}\t_\t{}\t{}\t_\t_\n",
                k + 1,
                t.form,
                t.pos,
                t.pos,
                self.heads[k],
                self.deprels[k]
            ));
        }
        out
    }
}

/// Reads a CoNLL-X file. When `remove_punct` is set, punctuation tokens are
/// removed as in [`DepSentence::without`], keeping the dependency corpus
/// token-aligned with a punctuation-free constituency corpus.
pub fn read_conllx(path: impl AsRef<Path>, remove_punct: bool) -> Result<Vec<DepSentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let prefix = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_conllx(&text, remove_punct, &prefix)
}

pub fn parse_conllx(text: &str, remove_punct: bool, prefix: &str) -> Result<Vec<DepSentence>> {
    let mut sentences = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    for (lineno, line) in lines.iter().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !block.is_empty() {
                let k = sentences.len();
                sentences.push(parse_block(&block, &format!("{}:{}", prefix, k))?);
                block.clear();
            }
        } else if !line.starts_with('#') {
            block.push((lineno + 1, line));
        }
    }
    if !block.is_empty() {
        let k = sentences.len();
        sentences.push(parse_block(&block, &format!("{}:{}", prefix, k))?);
    }
    if remove_punct {
        for s in sentences.iter_mut() {
            *s = s.without(|t| is_punctuation(&t.pos));
        }
    }
    Ok(sentences)
}

fn parse_block(lines: &[(usize, &str)], id: &str) -> Result<DepSentence> {
    let mut tokens = Vec::new();
    let mut heads = Vec::new();
    let mut deprels = Vec::new();
    for &(lineno, line) in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |message: String| Error::Parse {
            line: lineno,
            column: 1,
            message,
        };
        if cols.len() < 8 {
            return Err(err(format!("expected at least 8 columns, found {}", cols.len())));
        }
        let id_col: usize = cols[0]
            .parse()
            .map_err(|_| err(format!("bad token id '{}'", cols[0])))?;
        if id_col != tokens.len() + 1 {
            return Err(err(format!("token id {} out of sequence", id_col)));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| err(format!("bad head '{}'", cols[6])))?;
        let pos = if cols[4] != "_" { cols[4] } else { cols[3] };
        tokens.push(Token {
            index: tokens.len(),
            form: cols[1].to_string(),
            pos: pos.to_string(),
        });
        heads.push(head);
        deprels.push(cols[7].to_string());
    }
    DepSentence::new(id, tokens, heads, deprels)
}

pub fn write_conllx(path: impl AsRef<Path>, sentences: &[DepSentence]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.to_conllx());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// "I am walking on the moon" with Stanford basic dependencies.
    pub const MOON: &str = "1\tI\t_\tPRP\tPRP\t_\t3\tnsubj\t_\t_
2\tam\t_\tVBP\tVBP\t_\t3\taux\t_\t_
3\twalking\t_\tVBG\tVBG\t_\t0\troot\t_\t_
4\ton\t_\tIN\tIN\t_\t6\tcase\t_\t_
5\tthe\t_\tDT\tDT\t_\t6\tdet\t_\t_
6\tmoon\t_\tNN\tNN\t_\t3\tdobj\t_\t_
";

    #[test]
    fn parses_moon() {
        let s = parse_conllx(MOON, false, "m").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].heads, vec![3, 3, 0, 6, 6, 3]);
        assert_eq!(s[0].dependents(5), vec![3, 4]);
        assert_eq!(s[0].sentence_id, "m:0");
    }

    #[test]
    fn rejects_cycles_and_bad_heads() {
        let toks = |n: usize| {
            (0..n)
                .map(|i| Token { index: i, form: format!("w{i}"), pos: "NN".into() })
                .collect::<Vec<_>>()
        };
        assert!(DepSentence::new("c", toks(2), vec![2, 1], vec!["a".into(), "b".into()]).is_err());
        assert!(DepSentence::new("c", toks(2), vec![0, 3], vec!["a".into(), "b".into()]).is_err());
        assert!(DepSentence::new("c", toks(2), vec![0, 1], vec!["a".into(), "b".into()]).is_ok());
    }

    #[test]
    fn punctuation_removal_reattaches() {
        let text = "1\tHi\t_\tUH\tUH\t_\t0\troot\t_\t_
2\t,\t_\t,\t,\t_\t1\tpunct\t_\t_
3\tyou\t_\tPRP\tPRP\t_\t1\tdep\t_\t_
";
        let s = parse_conllx(text, true, "p").unwrap().remove(0);
        assert_eq!(s.len(), 2);
        assert_eq!(s.heads, vec![0, 1]);
        assert_eq!(s.tokens[1].index, 1);
    }

    #[test]
    fn malformed_line() {
        let err = parse_conllx("1\tx\t_\n", false, "p").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn write_read_round_trip() {
        let s = parse_conllx(MOON, false, "m").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.conll");
        write_conllx(&p, &s).unwrap();
        let back = read_conllx(&p, false).unwrap();
        assert_eq!(back, s);
    }
}
