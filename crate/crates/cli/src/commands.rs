//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::warn;
use serde_json::json;

use constprobe::activations::{
    default_reconstruction_layers, load_container, synth_container, ActivationContainer, Combine,
    FeatureDescriptor, LayerSelection, PlantedSignal, SignalTask, SynthMode,
};
use constprobe::codec::{canonicalize, write_triples, SeqLabelTriple};
use constprobe::neurons::{
    layer_spread, rank_neurons, ranking_overlap, select_subset, spread_csv, subset_descriptor,
    NeuronRanking, SubsetMode,
};
use constprobe::nonce::{check_alignment, corrupt, PoolSampling, ReplacementPool};
use constprobe::probe::{evaluate, selectivity, train, EvalReport, ProbeModel, TrainConfig};
use constprobe::tasks::{
    build_chunk_dataset, build_lca_eval, build_seq_datasets, corpus_hash, reconstruct as reconstruct_trees,
    sample_lca, ControlMapping, Dataset, TaskKind,
};
use constprobe::treebank::{
    bracketing_overlap, const_bracketings, dep_bracketings, parse_const_treebank, parse_conllx,
    write_conllx, write_const_treebank, ConstTree, DepSentence, ReadOptions,
};
use constprobe::{exec, treeval};

use crate::manifest::write_manifest;
use crate::*;

/// Sentence ids are positional (`s:{k}`), so corpora, datasets and
/// containers line up regardless of file names.
const ID_PREFIX: &str = "s";
/// Fallback root for relative activation paths.
const CACHE_ENV: &str = "CONSTPROBE_CACHE";

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn require(path: &Path) -> anyhow::Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("no such file or directory: {}", path.display())))
    }
}

/// Activation directories given as relative paths that do not exist are
/// looked up under `$CONSTPROBE_CACHE`.
fn container_dir(path: &Path) -> anyhow::Result<PathBuf> {
    if !path.exists() && path.is_relative() {
        if let Some(root) = std::env::var_os(CACHE_ENV) {
            let cached = Path::new(&root).join(path);
            if cached.exists() {
                return Ok(cached);
            }
        }
    }
    require(path)?;
    Ok(path.to_path_buf())
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    require(path)?;
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_trees(path: &Path, keep_punct: bool) -> anyhow::Result<Vec<ConstTree>> {
    let text = read_text(path)?;
    let opts = ReadOptions {
        remove_punct: !keep_punct,
        ..ReadOptions::default()
    };
    let out = parse_const_treebank(&text, &opts, ID_PREFIX).with_context(|| format!("parsing {}", path.display()))?;
    if out.dropped > 0 {
        warn!("{}: {} sentences became empty after filtering", path.display(), out.dropped);
    }
    Ok(out.trees)
}

fn read_deps(path: &Path, remove_punct: bool) -> anyhow::Result<Vec<DepSentence>> {
    let text = read_text(path)?;
    parse_conllx(&text, remove_punct, ID_PREFIX).with_context(|| format!("parsing {}", path.display()))
}

/// Reads the treebank a dataset was built from, with or without
/// punctuation, whichever matches the dataset's corpus hash.
fn read_dataset_corpus(path: &Path, ds: &Dataset) -> anyhow::Result<Vec<ConstTree>> {
    for keep in [false, true] {
        let trees = read_trees(path, keep)?;
        if corpus_hash(&trees) == ds.corpus_hash {
            return Ok(trees);
        }
    }
    bail!("{} is not the treebank the dataset was built from", path.display())
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let name = prefix.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    prefix.with_file_name(format!("{}{}", name, suffix))
}

/// `<stem>.control.json` beside a model file.
fn control_mapping_path(model: &Path) -> PathBuf {
    let stem = model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    model.with_file_name(format!("{}.control.json", stem))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| usage(format!("bad {} '{}'", what, p))))
        .collect()
}

fn percent(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}%", 100.0 * x)).unwrap_or_else(|| "undefined (no bracketings)".into())
}

fn check_variant(v: &Option<String>) -> anyhow::Result<()> {
    const TAGS: [&str; 3] = ["orig", ".33", ".67"];
    if let Some(v) = v {
        let ok = v.split_once('/').is_some_and(|(a, b)| TAGS.contains(&a) && TAGS.contains(&b));
        if !ok {
            return Err(usage(format!("variant '{}' is not TRAIN/TEST with tags orig, .33, .67", v)));
        }
    }
    Ok(())
}

pub fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::StatsBracketing(a) => stats_bracketing(&a),
        Command::Nonce(a) => nonce(&a),
        Command::Build(a) => build(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Eval(a) => eval(&a),
        Command::RankNeurons(a) => rank(&a),
        Command::SelectNeurons(a) => select(&a),
        Command::Reconstruct(a) => reconstruct(&a),
        Command::Score(a) => score(&a),
        Command::Compare(a) => compare(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn stats_bracketing(a: &StatsArgs) -> anyhow::Result<()> {
    let trees = read_trees(&a.constituency, a.keep_punct)?;
    let deps = read_deps(&a.dep, !a.keep_punct)?;
    check_alignment(&trees, &deps)?;
    let consts: Vec<_> = exec::map(&trees, const_bracketings);
    let dep_sets: Vec<_> = exec::map(&deps, dep_bracketings);
    let ov = bracketing_overlap(&consts, &dep_sets);
    println!("sentences                  {}", trees.len());
    println!("shared bracketings         {}", ov.shared);
    println!(
        "dependency bracketings     {} ({} also constituency)",
        ov.dep_total,
        percent(ov.dep_in_const())
    );
    println!(
        "constituency bracketings   {} ({} also dependency)",
        ov.const_total,
        percent(ov.const_in_dep())
    );
    if let Some(out) = &a.out {
        let body = json!({
            "sentences": trees.len(),
            "shared": ov.shared,
            "dep_total": ov.dep_total,
            "const_total": ov.const_total,
            "dep_in_const": ov.dep_in_const(),
            "const_in_dep": ov.const_in_dep(),
        });
        write_text(out, &(serde_json::to_string_pretty(&body)? + "\n"))?;
        write_manifest("stats-bracketing", a, &[&a.constituency, &a.dep], std::slice::from_ref(out), out)?;
    }
    Ok(())
}

fn nonce(a: &NonceArgs) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&a.fraction) {
        return Err(usage(format!("--fraction {} outside [0, 1]", a.fraction)));
    }
    let trees = read_trees(&a.constituency, false)?;
    let deps = read_deps(&a.dep, true)?;
    let pool_deps = match &a.pool {
        Some(p) => read_deps(p, true)?,
        None => deps.clone(),
    };
    let pool = ReplacementPool::build(&pool_deps);
    let sampling = match a.sampling {
        SamplingArg::Occurrences => PoolSampling::Occurrences,
        SamplingArg::Types => PoolSampling::Types,
    };
    let c = corrupt(&trees, &deps, &pool, a.fraction, a.seed, sampling)?;
    if c.log.len() < c.target {
        warn!("pool supply allowed only {} of {} replacements", c.log.len(), c.target);
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let outputs = vec![
        a.out.join("corrupted.mrg"),
        a.out.join("corrupted.conll"),
        a.out.join("replacements.tsv"),
    ];
    write_const_treebank(&outputs[0], &c.trees)?;
    write_conllx(&outputs[1], &c.deps)?;
    c.write_log(&outputs[2])?;
    println!(
        "replaced {} of {} tokens (target {}, achieved {:.4})",
        c.log.len(),
        c.total_tokens,
        c.target,
        c.achieved_fraction()
    );
    let mut inputs: Vec<&Path> = vec![&a.constituency, &a.dep];
    if let Some(p) = &a.pool {
        inputs.push(p);
    }
    write_manifest("nonce", a, &inputs, &outputs, &a.out)
}

fn build(a: &BuildArgs) -> anyhow::Result<()> {
    let trees = read_trees(&a.treebank, a.keep_punct)?;
    let mut outputs = Vec::new();
    match a.task {
        BuildTask::Lca => {
            let n = a.n.ok_or_else(|| usage("--n is required for the lca task"))?;
            let s = sample_lca(&trees, n, a.seed, !a.exclude_identity)?;
            s.dataset.save(&a.out)?;
            let stats = with_suffix(&a.out, ".labels.json");
            let body = json!({
                "original": s.original_frequencies,
                "target": s.target_frequencies,
                "achieved": s.achieved_frequencies,
                "seed": s.seed,
            });
            write_text(&stats, &(serde_json::to_string_pretty(&body)? + "\n"))?;
            println!("wrote {} lca pairs to {}", s.dataset.len(), a.out.display());
            outputs.extend([a.out.clone(), stats]);
        }
        BuildTask::LcaEval => {
            let e = build_lca_eval(&trees, a.max_sentences, a.max_len);
            e.dataset.save(&a.out)?;
            println!(
                "wrote {} lca pairs from {} sentences to {}",
                e.dataset.len(),
                e.sentences_used,
                a.out.display()
            );
            outputs.push(a.out.clone());
        }
        BuildTask::ChunkSimple | BuildTask::ChunkDetailed => {
            let ds = build_chunk_dataset(&trees, a.task == BuildTask::ChunkDetailed, a.limit);
            ds.save(&a.out)?;
            println!("wrote {} tokens to {}", ds.len(), a.out.display());
            outputs.push(a.out.clone());
        }
        BuildTask::Seq => {
            let seq = build_seq_datasets(&trees);
            fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            for (ds, name) in [(&seq.lca, "seq-lca.tsv"), (&seq.depth, "seq-depth.tsv"), (&seq.unary, "seq-unary.tsv")] {
                let p = a.out.join(name);
                ds.save(&p)?;
                outputs.push(p);
            }
            println!(
                "wrote {} pair and {} token instances to {}",
                seq.lca.len(),
                seq.unary.len(),
                a.out.display()
            );
        }
    }
    write_manifest("build", a, &[&a.treebank], &outputs, &a.out)
}

fn descriptor(f: &FeatureArgs, c: &ActivationContainer, pair: bool) -> anyhow::Result<FeatureDescriptor> {
    let layers = match f.layers.as_str() {
        "all" => LayerSelection::All,
        "reconstruction" => LayerSelection::List(default_reconstruction_layers(c.layer_count().saturating_sub(1))),
        s => {
            let v: Vec<usize> = parse_list(s, "layer index")?;
            match v.as_slice() {
                [] => return Err(usage("empty --layers")),
                [one] => LayerSelection::Single(*one),
                _ => LayerSelection::List(v),
            }
        }
    };
    let combine: Combine = f.combine.parse().map_err(|e: constprobe::Error| usage(e.to_string()))?;
    let neurons = match &f.neurons {
        None => None,
        Some(s) if Path::new(s).is_file() => Some(parse_list(&read_text(Path::new(s))?, "neuron index")?),
        Some(s) => Some(parse_list(s, "neuron index")?),
    };
    let d = FeatureDescriptor { layers, neurons, combine };
    d.dim(c.layer_count(), c.width(), pair)?;
    Ok(d)
}

fn train_cmd(a: &TrainArgs) -> anyhow::Result<()> {
    check_variant(&a.variant)?;
    let config = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        l1: a.l1,
        l2: a.l2,
        batch_size: a.batch_size,
        seed: a.seed,
        ..TrainConfig::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    require(&a.dataset)?;
    let act = container_dir(&a.activations)?;
    let ds = Dataset::load(&a.dataset)?;
    let container = load_container(&act)?;
    let desc = descriptor(&a.features, &container, ds.task.is_pair())?;
    let mut inputs: Vec<&Path> = vec![&a.dataset, &act];
    let mut outputs = vec![a.out.clone()];
    let (train_ds, mapping) = if a.control {
        let tb = a.treebank.as_ref().ok_or_else(|| usage("--control needs --treebank"))?;
        inputs.push(tb);
        let trees = read_dataset_corpus(tb, &ds)?;
        let (mapping, relabeled) = ControlMapping::fit(&ds, &trees, a.control_seed)?;
        (relabeled, Some(mapping))
    } else {
        (ds, None)
    };
    let model = train(&train_ds, &container, &desc, &config)?;
    ensure_parent(&a.out)?;
    model.save(&a.out)?;
    if let Some(m) = mapping {
        let p = control_mapping_path(&a.out);
        write_text(&p, &m.to_json()?)?;
        outputs.push(p);
    }
    let report = evaluate(&model, &train_ds, &container)?;
    println!(
        "trained {} probe on {} instances: {} classes, {} features, final loss {:.6}, training accuracy {:.4}",
        model.task.name(),
        train_ds.len(),
        model.classes.len(),
        model.features,
        model.metadata.loss_trajectory.last().copied().unwrap_or(f64::NAN),
        report.accuracy
    );
    write_manifest("train", a, &inputs, &outputs, &a.out)
}

fn write_report(prefix: &Path, body: &serde_json::Value, report: &EvalReport, text: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut outputs = vec![with_suffix(prefix, ".json"), with_suffix(prefix, ".txt"), with_suffix(prefix, ".confusion.csv")];
    write_text(&outputs[0], &(serde_json::to_string_pretty(body)? + "\n"))?;
    write_text(&outputs[1], text)?;
    write_text(&outputs[2], &report.confusion_csv())?;
    if !report.distance.is_empty() {
        let mut csv = String::from("distance,total,correct,accuracy\n");
        for b in &report.distance {
            let _ = writeln!(csv, "{},{},{},{}", b.distance, b.total, b.correct, b.accuracy);
        }
        let p = with_suffix(prefix, ".distance.csv");
        write_text(&p, &csv)?;
        outputs.push(p);
    }
    Ok(outputs)
}

fn eval(a: &EvalArgs) -> anyhow::Result<()> {
    check_variant(&a.variant)?;
    require(&a.model)?;
    require(&a.dataset)?;
    let act = container_dir(&a.activations)?;
    let model = ProbeModel::load(&a.model)?;
    let ds = Dataset::load(&a.dataset)?;
    if model.task != ds.task {
        bail!("model is a {} probe, dataset is {}", model.task.name(), ds.task.name());
    }
    let container = load_container(&act)?;
    let report = evaluate(&model, &ds, &container)?;
    let mut text = report.to_text();
    let mut inputs: Vec<&Path> = vec![&a.model, &a.dataset, &act];
    let mut control = None;
    let mut sel = None;
    if let Some(cm_path) = &a.control_model {
        let tb = a.treebank.as_ref().ok_or_else(|| usage("--control-model needs --treebank"))?;
        require(cm_path)?;
        let map_path = control_mapping_path(cm_path);
        inputs.extend([cm_path.as_path(), tb.as_path()]);
        let cm = ProbeModel::load(cm_path)?;
        let mut mapping = ControlMapping::from_json(&read_text(&map_path)?)?;
        let trees = read_dataset_corpus(tb, &ds)?;
        let cds = mapping.relabel(&ds, &trees)?;
        let cr = evaluate(&cm, &cds, &container)?;
        let s = selectivity(&report, &cr)?;
        let _ = writeln!(text, "\ncontrol accuracy  {:.4}\nselectivity       {:.4}", cr.accuracy, s);
        control = Some(cr);
        sel = Some(s);
    }
    print!("{}", text);
    if let Some(out) = &a.out {
        let body = json!({ "report": report, "control": control, "selectivity": sel, "variant": a.variant });
        let outputs = write_report(out, &body, &report, &text)?;
        write_manifest("eval", a, &inputs, &outputs, &outputs[0])?;
    }
    Ok(())
}

fn rank(a: &RankArgs) -> anyhow::Result<()> {
    require(&a.model)?;
    let model = ProbeModel::load(&a.model)?;
    let ranking = rank_neurons(&model);
    let mut inputs: Vec<&Path> = vec![&a.model];
    let mut outputs = vec![with_suffix(&a.out, ".ranking.json"), with_suffix(&a.out, ".order.txt")];
    write_text(&outputs[0], &(serde_json::to_string_pretty(&ranking)? + "\n"))?;
    write_text(&outputs[1], &ranking.index_list())?;
    println!("ranked {} features; most salient: {:?}", ranking.order.len(), &ranking.order[..ranking.order.len().min(10)]);
    let act = a.activations.as_deref().map(container_dir).transpose()?;
    if let Some(act) = &act {
        inputs.push(act);
        let c = load_container(act)?;
        let hist = layer_spread(&ranking, a.top_fraction, c.layer_count(), c.width(), a.class.as_deref())?;
        let p = with_suffix(&a.out, ".spread.csv");
        write_text(&p, &spread_csv(&hist))?;
        outputs.push(p);
        println!("layer spread of the top {}:", a.top_fraction);
        for (l, n) in &hist {
            println!("  layer {:>3}  {}", l, n);
        }
    }
    if let Some(other) = &a.compare {
        require(other)?;
        inputs.push(other);
        let b = rank_neurons(&ProbeModel::load(other)?);
        let mut csv = String::from("fraction,overlap\n");
        for f in parse_list::<f64>(&a.overlap_fractions, "fraction")? {
            let o = ranking_overlap(&ranking, &b, f)?;
            let _ = writeln!(csv, "{},{}", f, o);
            println!("overlap at {:>5}: {:.4}", f, o);
        }
        let p = with_suffix(&a.out, ".overlap.csv");
        write_text(&p, &csv)?;
        outputs.push(p);
    }
    write_manifest("rank-neurons", a, &inputs, &outputs, &outputs[0].clone())
}

fn select(a: &SelectArgs) -> anyhow::Result<()> {
    if !(a.fraction > 0.0 && a.fraction <= 1.0) {
        return Err(usage(format!("--fraction {} outside (0, 1]", a.fraction)));
    }
    let ranking: NeuronRanking = serde_json::from_str(&read_text(&a.ranking)?)?;
    let mode = match a.mode {
        ModeArg::Top => SubsetMode::Top,
        ModeArg::Bottom => SubsetMode::Bottom,
        ModeArg::Random => SubsetMode::Random,
    };
    let subset = select_subset(&ranking, mode, a.fraction, a.seed)?;
    // Indices are written in the full feature space of the layer selection.
    let full = subset_descriptor(&ranking.descriptor, &subset).neurons.unwrap_or_default();
    let mut text = String::new();
    for k in &full {
        let _ = writeln!(text, "{}", k);
    }
    write_text(&a.out, &text)?;
    println!("selected {} of {} features", full.len(), ranking.order.len());
    write_manifest("select-neurons", a, &[&a.ranking], std::slice::from_ref(&a.out), &a.out)
}

fn reconstruct(a: &ReconstructArgs) -> anyhow::Result<()> {
    let trees = read_trees(&a.treebank, false)?;
    let seq = build_seq_datasets(&trees);
    let act: PathBuf;
    let mut inputs: Vec<&Path> = vec![&a.treebank];
    let labels: [Vec<String>; 3] = if a.oracle {
        seq.gold_labels()
    } else {
        let given = a.activations.as_ref().ok_or_else(|| usage("--activations is required without --oracle"))?;
        act = container_dir(given)?;
        let container = load_container(&act)?;
        container.check_alignment(&trees)?;
        inputs.push(&act);
        let mut out: [Vec<String>; 3] = Default::default();
        let slots = [
            (&a.lca_model, &seq.lca, TaskKind::SeqLca, "--lca-model"),
            (&a.depth_model, &seq.depth, TaskKind::SeqDepth, "--depth-model"),
            (&a.unary_model, &seq.unary, TaskKind::SeqUnary, "--unary-model"),
        ];
        for (k, (path, ds, task, flag)) in slots.into_iter().enumerate() {
            let path = path.as_ref().ok_or_else(|| usage(format!("{} is required without --oracle", flag)))?;
            require(path)?;
            inputs.push(path);
            let model = ProbeModel::load(path)?;
            if model.task != task {
                bail!("{} is a {} probe, expected {}", path.display(), model.task.name(), task.name());
            }
            out[k] = model.predict(ds, &container)?;
        }
        out
    };

    let triples = seq.assemble(&trees, &labels)?;
    let decoded = reconstruct_trees(&trees, &triples)?;
    ensure_parent(&a.out)?;
    write_const_treebank(&a.out, &decoded)?;
    let label_path = with_suffix(&a.out, ".labels.tsv");
    let rows: Vec<(Vec<String>, Vec<SeqLabelTriple>)> = trees
        .iter()
        .zip(triples)
        .map(|(t, tr)| (t.forms().iter().map(|f| f.to_string()).collect(), tr))
        .collect();
    write_triples(&label_path, &rows)?;
    println!("reconstructed {} trees into {}", decoded.len(), a.out.display());
    write_manifest("reconstruct", a, &inputs, &[a.out.clone(), label_path], &a.out)
}

fn read_gold(path: &Path, canonical: bool) -> anyhow::Result<Vec<ConstTree>> {
    let trees = read_trees(path, false)?;
    Ok(if canonical {
        trees.iter().map(|t| canonicalize(t).into_tree()).collect()
    } else {
        trees
    })
}

fn score(a: &ScoreArgs) -> anyhow::Result<()> {
    let gold = read_gold(&a.gold, a.canonicalize_gold)?;
    let pred = read_trees(&a.predicted, false)?;
    let s = treeval::score(&gold, &pred)?;
    print!("{}", s.to_text());
    if let Some(out) = &a.out {
        let outputs = vec![with_suffix(out, ".json"), with_suffix(out, ".sentences.csv")];
        write_text(&outputs[0], &(serde_json::to_string_pretty(&s)? + "\n"))?;
        write_text(&outputs[1], &s.per_sentence_csv())?;
        write_manifest("score", a, &[&a.gold, &a.predicted], &outputs, &outputs[0])?;
    }
    Ok(())
}

fn compare(a: &CompareArgs) -> anyhow::Result<()> {
    let gold = read_gold(&a.gold, a.canonicalize_gold)?;
    let mut corpora = Vec::new();
    let mut paths = Vec::new();
    for entry in &a.predicted {
        let (name, path) = entry
            .split_once('=')
            .ok_or_else(|| usage(format!("--predicted expects NAME=PATH, got '{}'", entry)))?;
        let path = PathBuf::from(path);
        corpora.push((name.to_string(), read_trees(&path, false)?));
        paths.push(path);
    }
    let cmp = treeval::compare_models(&gold, &corpora)?;
    println!("F1 (row as gold, column as predicted)");
    print!("{}", cmp.f1_csv());
    println!("\nPearson of per-sentence F1 against gold");
    print!("{}", cmp.pearson_csv());
    let outputs = vec![with_suffix(&a.out, ".json"), with_suffix(&a.out, ".f1.csv"), with_suffix(&a.out, ".pearson.csv")];
    write_text(&outputs[0], &(serde_json::to_string_pretty(&cmp)? + "\n"))?;
    write_text(&outputs[1], &cmp.f1_csv())?;
    write_text(&outputs[2], &cmp.pearson_csv())?;
    let mut inputs: Vec<&Path> = vec![&a.gold];
    inputs.extend(paths.iter().map(|p| p.as_path()));
    write_manifest("compare", a, &inputs, &outputs, &outputs[0])
}

fn synth(a: &SynthArgs) -> anyhow::Result<()> {
    let trees = read_trees(&a.treebank, a.keep_punct)?;
    let mode = match a.mode {
        SynthModeArg::Gaussian => SynthMode::Gaussian,
        SynthModeArg::TypeStatic => SynthMode::TypeStatic,
        SynthModeArg::Structured => SynthMode::Structured(PlantedSignal {
            task: match a.signal_task {
                SignalArg::ChunkSimple => SignalTask::ChunkSimple,
                SignalArg::ChunkDetailed => SignalTask::ChunkDetailed,
            },
            strength: a.strength,
            layer: a.signal_layer,
        }),
    };
    let c = synth_container(&trees, a.width, a.layer_count, mode, a.seed)?;
    c.save(&a.out)?;
    println!(
        "wrote {} sentences ({} layers x {} values per token) to {}",
        c.sentence_count(),
        a.layer_count,
        a.width,
        a.out.display()
    );
    write_manifest("synth", a, &[&a.treebank], std::slice::from_ref(&a.out), &a.out)
}
