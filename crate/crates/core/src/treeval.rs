//! Labeled bracket scoring of predicted trees and cross-model comparison.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::exec;
use crate::treebank::ConstTree;
use crate::{Error, Result};

/// `(label, start, end)` of every phrasal node, root included, function
/// tags ignored. Unary chains yield repeated spans.
pub fn brackets(tree: &ConstTree) -> Vec<(String, usize, usize)> {
    tree.nodes()
        .into_iter()
        .map(|(n, _)| (n.label.clone(), n.span.start, n.span.end))
        .collect()
}

/// Size of the multiset intersection of two bracket lists.
pub fn matched_brackets(gold: &[(String, usize, usize)], predicted: &[(String, usize, usize)]) -> usize {
    let mut counts: HashMap<&(String, usize, usize), usize> = HashMap::new();
    for b in gold {
        *counts.entry(b).or_default() += 1;
    }
    let mut matched = 0;
    for b in predicted {
        if let Some(c) = counts.get_mut(b) {
            if *c > 0 {
                *c -= 1;
                matched += 1;
            }
        }
    }
    matched
}

fn f_measure(matched: usize, gold: usize, predicted: usize) -> (f64, f64, f64) {
    let p = if predicted > 0 { matched as f64 / predicted as f64 } else { 0.0 };
    let r = if gold > 0 { matched as f64 / gold as f64 } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub sentence_id: String,
    pub gold: usize,
    pub predicted: usize,
    pub matched: usize,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub gold_brackets: usize,
    pub predicted_brackets: usize,
    pub per_sentence: Vec<SentenceScore>,
}

impl ParseScore {
    pub fn sentence_f1(&self) -> Vec<f64> {
        self.per_sentence.iter().map(|s| s.f1).collect()
    }

    pub fn to_text(&self) -> String {
        format!(
            "sentences  {}\nbrackets   gold {} predicted {} matched {}\nprecision  {:.4}\nrecall     {:.4}\nf1         {:.4}\n",
            self.per_sentence.len(),
            self.gold_brackets,
            self.predicted_brackets,
            self.matched,
            self.precision,
            self.recall,
            self.f1
        )
    }

    pub fn per_sentence_csv(&self) -> String {
        let mut out = String::from("sentence_id,gold,predicted,matched,f1\n");
        for s in &self.per_sentence {
            let _ = writeln!(out, "\"{}\",{},{},{},{}", s.sentence_id, s.gold, s.predicted, s.matched, s.f1);
        }
        out
    }
}

fn check_aligned(gold: &[ConstTree], predicted: &[ConstTree]) -> Result<()> {
    if gold.len() != predicted.len() {
        return Err(Error::Alignment {
            sentence: String::new(),
            reason: format!("{} gold sentences, {} predicted", gold.len(), predicted.len()),
        });
    }
    for (g, p) in gold.iter().zip(predicted) {
        if g.len() != p.len() {
            return Err(Error::Alignment {
                sentence: g.sentence_id.clone(),
                reason: format!("{} gold tokens, {} predicted", g.len(), p.len()),
            });
        }
    }
    Ok(())
}

/// Micro-averaged labeled precision, recall and F1 plus per-sentence F1.
pub fn score(gold: &[ConstTree], predicted: &[ConstTree]) -> Result<ParseScore> {
    check_aligned(gold, predicted)?;
    let per_sentence = exec::map_range(gold.len(), |k| {
        let g = brackets(&gold[k]);
        let p = brackets(&predicted[k]);
        let matched = matched_brackets(&g, &p);
        SentenceScore {
            sentence_id: gold[k].sentence_id.clone(),
            gold: g.len(),
            predicted: p.len(),
            matched,
            f1: f_measure(matched, g.len(), p.len()).2,
        }
    });
    let matched = per_sentence.iter().map(|s| s.matched).sum();
    let gold_brackets = per_sentence.iter().map(|s| s.gold).sum();
    let predicted_brackets = per_sentence.iter().map(|s| s.predicted).sum();
    let (precision, recall, f1) = f_measure(matched, gold_brackets, predicted_brackets);
    Ok(ParseScore {
        precision,
        recall,
        f1,
        matched,
        gold_brackets,
        predicted_brackets,
        per_sentence,
    })
}

/// Product-moment correlation of two equal-length series.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid(format!("series lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Undefined("correlation of a constant series".into()));
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub names: Vec<String>,
    /// F1 of each corpus against gold.
    pub gold_f1: Vec<f64>,
    /// `f1[a][b]`: corpus `a` taken as gold, `b` as predicted.
    pub f1: Vec<Vec<f64>>,
    /// Correlation of per-sentence F1-vs-gold; `None` where undefined.
    pub pearson: Vec<Vec<Option<f64>>>,
}

/// Pairwise comparison of predicted corpora that share one gold corpus.
pub fn compare_models(gold: &[ConstTree], corpora: &[(String, Vec<ConstTree>)]) -> Result<ModelComparison> {
    let vs_gold = corpora
        .iter()
        .map(|(_, c)| score(gold, c))
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<Vec<f64>> = vs_gold.iter().map(|s| s.sentence_f1()).collect();
    let n = corpora.len();
    let mut f1 = vec![vec![0.0; n]; n];
    let mut corr = vec![vec![None; n]; n];
    for a in 0..n {
        for b in 0..n {
            f1[a][b] = score(&corpora[a].1, &corpora[b].1)?.f1;
            corr[a][b] = pearson(&series[a], &series[b]).ok();
        }
    }
    Ok(ModelComparison {
        names: corpora.iter().map(|(n, _)| n.clone()).collect(),
        gold_f1: vs_gold.iter().map(|s| s.f1).collect(),
        f1,
        pearson: corr,
    })
}

impl ModelComparison {
    fn matrix_csv<T>(&self, m: &[Vec<T>], cell: impl Fn(&T) -> String) -> String {
        let mut out = String::from("model");
        for n in &self.names {
            let _ = write!(out, ",{}", n);
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(m) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{}", cell(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn f1_csv(&self) -> String {
        self.matrix_csv(&self.f1, |v| format!("{}", v))
    }

    pub fn pearson_csv(&self) -> String {
        self.matrix_csv(&self.pearson, |v| v.map(|x| x.to_string()).unwrap_or_default())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::treebank::{parse_const_treebank, ReadOptions};

    pub(crate) const CONFLATED_GOLD: &str = "(NP-SBJ (NP (NNP Dale) (NNP Lang)) (, ,) (SBAR (WHNP (WP who)) (S (NP-TMP (DT this) (NN week)) (VP (VBD completed) (NP (NP (DT the) (NN acquisition)) (PP (IN of) (NP (NP (DT the) (NN publisher)) (PP (IN of) (NP (NNP Ms.) (CC and) (NNP Sassy))))))))))";
    pub(crate) const CONFLATED_PRED: &str = "(NP (NP (NNP Dale) (NNP Lang)) (, ,) (SBAR (WHNP (WP who)) (NP (DT this) (NN week)) (VP (VBD completed) (NP (NP (DT the) (NN acquisition)) (PP (IN of) (NP (NP (DT the) (NN publisher)) (PP (IN of) (NP (NNP Ms.) (CC and) (NNP Sassy)))))))))";

    fn tree(text: &str) -> ConstTree {
        parse_const_treebank(text, &ReadOptions::verbatim(), "t").unwrap().trees.remove(0)
    }

    #[test]
    fn conflated_clause_tally() {
        let g = [tree(CONFLATED_GOLD)];
        let p = [tree(CONFLATED_PRED)];
        let s = score(&g, &p).unwrap();
        assert_eq!((s.gold_brackets, s.predicted_brackets, s.matched), (14, 13, 13));
        assert_eq!(s.precision, 1.0);
        assert!((s.recall - 13.0 / 14.0).abs() < 1e-15);
        assert!((s.f1 - 26.0 / 27.0).abs() < 1e-15);
        let swapped = score(&p, &g).unwrap();
        assert_eq!(swapped.precision, s.recall);
        assert_eq!(swapped.recall, s.precision);
    }

    #[test]
    fn unary_chains_count_with_multiplicity() {
        let g = [tree("(S (NP (QP (CD 5))) (VP (VBD fell)))")];
        let p = [tree("(S (NP (CD 5)) (VP (VBD fell)))")];
        let s = score(&g, &p).unwrap();
        assert_eq!((s.gold_brackets, s.predicted_brackets, s.matched), (4, 3, 3));
        assert_eq!(score(&g, &g).unwrap().f1, 1.0);
    }

    #[test]
    fn misaligned_corpora() {
        let g = [tree(CONFLATED_GOLD)];
        let short = tree("(S (NP (DT a)))");
        assert!(matches!(score(&g, &[short]), Err(Error::Alignment { .. })));
        assert!(score(&g, &[]).is_err());
    }

    #[test]
    fn pearson_by_hand() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 1.0, 4.0, 3.0, 5.0];
        // Means 3 and 3; cov sum 8; variance sums 10 and 10.
        assert!((pearson(&a, &b).unwrap() - 0.8).abs() < 1e-12);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        let affine: Vec<f64> = b.iter().map(|x| 3.0 * x - 7.0).collect();
        assert!((pearson(&a, &affine).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(pearson(&a, &[1.0; 5]), Err(Error::Undefined(_))));
    }
}
