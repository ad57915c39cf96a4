use constprobe::treebank::{
    bracketing_overlap, const_bracketings, dep_bracketings, parse_const_treebank, ConstNode, ConstTree,
    DepSentence, ReadOptions, Token,
};

const PAIRS: [(&str, &[usize]); 5] = [
    ("(S (NP (PRP I)) (VP (VBP am) (VP (VBG walking) (PP (IN on) (NP (DT the) (NN moon))))))", &[3, 3, 0, 6, 6, 3]),
    ("(S (NP (DT the) (NN cat)) (VP (VBD sat)))", &[2, 3, 0]),
    ("(S (NP (NNS dogs)) (VP (VBP bark) (ADVP (RB loudly))))", &[2, 0, 2]),
    ("(NP (NP (DT a) (NN book)) (PP (IN of) (NP (NNS poems))))", &[2, 0, 4, 2]),
    ("(S (NP (PRP she)) (VP (VBD gave) (NP (PRP him)) (NP (DT a) (NN pen))))", &[2, 0, 2, 5, 2]),
];

fn corpus() -> (Vec<ConstTree>, Vec<DepSentence>) {
    PAIRS
        .iter()
        .enumerate()
        .map(|(k, (text, heads))| {
            let tree = parse_const_treebank(text, &ReadOptions::default(), &format!("p{k}"))
                .unwrap()
                .trees
                .remove(0);
            let tokens: Vec<Token> = tree.tokens.clone();
            let rels = heads.iter().map(|&h| if h == 0 { "root" } else { "dep" }.to_string()).collect();
            let dep = DepSentence::new(tree.sentence_id.clone(), tokens, heads.to_vec(), rels).unwrap();
            (tree, dep)
        })
        .unzip()
}

fn spans(node: &ConstNode, out: &mut Vec<Vec<usize>>) {
    let s: Vec<usize> = (node.span.start..node.span.end).collect();
    if !out.contains(&s) {
        out.push(s);
    }
    for c in node.child_nodes() {
        spans(c, out);
    }
}

/// Token `k` is in the yield of `i` when `i` lies on `k`'s path to the root.
fn yields(dep: &DepSentence) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..dep.len() {
        let y: Vec<usize> = (0..dep.len())
            .filter(|&k| {
                let mut cur = k + 1;
                while cur != 0 {
                    if cur == i + 1 {
                        return true;
                    }
                    cur = dep.heads[cur - 1];
                }
                false
            })
            .collect();
        if !out.contains(&y) {
            out.push(y);
        }
    }
    out
}

#[test]
fn five_pair_overlap_matches_exhaustive_comparison() {
    let (trees, deps) = corpus();
    let consts: Vec<_> = trees.iter().map(const_bracketings).collect();
    let depb: Vec<_> = deps.iter().map(dep_bracketings).collect();
    let o = bracketing_overlap(&consts, &depb);

    let (mut shared, mut c_total, mut d_total) = (0, 0, 0);
    for (t, d) in trees.iter().zip(&deps) {
        let mut c = Vec::new();
        spans(&t.root, &mut c);
        let d = yields(d);
        shared += c.iter().filter(|x| d.contains(x)).count();
        c_total += c.len();
        d_total += d.len();
    }
    assert_eq!((o.shared, o.const_total, o.dep_total), (shared, c_total, d_total));
    // Counted by hand: shared 3+2+3+2+4, dependency 6+3+3+4+5, constituency 6+3+4+4+5.
    assert_eq!((shared, d_total, c_total), (14, 21, 22));
    assert_eq!(o.dep_in_const(), Some(14.0 / 21.0));
    assert_eq!(o.const_in_dep(), Some(14.0 / 22.0));
}
