//! Acceptance criteria, one PASS/FAIL/SKIP line each.
//!
//! Runs as a plain binary (no libtest harness) so that the per-criterion
//! lines always reach stdout. Exits non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use boundsrl::conll::{extract_instances, parse_str, serialize_corpus, Corpus, FormatConfig, PredicateInstance, Sentence, Token};
use boundsrl::decoder::{decode, ArgumentSet};
use boundsrl::encoder::{attend, AttentionParams};
use boundsrl::gradcheck::toy_gradient_check;
use boundsrl::numerics::rng::derive_rng;
use boundsrl::numerics::{tape, ParamStore, Tape, Tensor};
use boundsrl::synth::{generate, GenConfig};
use boundsrl::tags::{is_argument, NULL_LABEL};
use boundsrl::train::{evaluate_model, train, Dataset};
use boundsrl::{
    augment_labels, evaluate, strip_tags, LabelSet, PredictionMatrix, TrainConfig,
};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::Rng;

const BIN: &str = env!("CARGO_BIN_EXE_boundsrl");
const PROPERTY_CASES: u32 = 128;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).env("RUST_LOG", "warn").output().expect("run boundsrl");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn key_value(text: &str, key: &str) -> Option<f64> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('=')?.trim().parse().ok())
}

fn write_corpus(path: &Path, corpus: &Corpus) {
    std::fs::write(path, serialize_corpus(corpus, &FormatConfig::conll2009())).unwrap();
}

// ---------------------------------------------------------------- criterion 2

fn has_out_of_window_tokens(inst: &PredicateInstance) -> bool {
    let span: Vec<usize> = (0..inst.len())
        .filter(|&i| i == inst.predicate_index || is_argument(&inst.gold_labels[i]))
        .collect();
    let (lo, hi) = (span[0], *span.last().unwrap());
    lo > 1 || hi + 2 < inst.len()
}

fn stats_via_cli(path: &Path, scope: &str) -> (f64, f64) {
    let (code, out) = cli(&["stats", "--data", path.to_str().unwrap(), "--scope", scope]);
    assert_eq!(code, 0, "stats exited with {}", code);
    (
        key_value(&out, &format!("{}.arg_pct", scope)).unwrap(),
        key_value(&out, &format!("{}.nonarg_pct", scope)).unwrap(),
    )
}

fn criterion_2(dir: &Path) -> Vec<Verdict> {
    let mut out = Vec::new();
    let start = Instant::now();

    // Analytic density against `stats --scope full_sequence`.
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (i, (window, args)) in [(3, (1, 3)), (2, (1, 4)), (5, (2, 6)), (1, (1, 2))].into_iter().enumerate() {
        let config = GenConfig {
            sentences: 3000,
            min_predicates: 1,
            max_predicates: 1,
            window,
            min_args: args.0,
            max_args: args.1,
            seed: 20 + i as u64,
            ..GenConfig::default()
        };
        let expected = 100.0 * config.expected_arg_fraction().unwrap();
        let path = dir.join(format!("density{}.conll", i));
        write_corpus(&path, &generate(&config).unwrap());
        let (arg_pct, _) = stats_via_cli(&path, "full_sequence");
        let rel = (arg_pct - expected).abs() / expected;
        worst = worst.max(rel);
        detail.push(format!("w={} {:.2}% vs {:.2}%", window, arg_pct, expected));
    }
    out.push(verdict(
        worst <= 0.10,
        format!("2a synthetic full_sequence density within 10%: max rel dev {:.4} [{}]", worst, detail.join("; ")),
    ));

    // window_only strictly raises the argument share whenever some instance
    // has tokens outside its tagged span.
    let mut checked = 0;
    let mut violations = 0;
    for seed in 0..12u64 {
        let config = GenConfig {
            sentences: 40 + 10 * seed as usize,
            max_predicates: 1 + (seed % 3) as usize,
            window: 1 + (seed % 4) as usize,
            min_args: 1,
            max_args: 2,
            min_len: 4,
            max_len: 8 + 2 * seed as usize,
            seed: 300 + seed,
            ..GenConfig::default()
        };
        let corpus = generate(&config).unwrap();
        let instances = extract_instances(&corpus);
        if !instances.iter().any(has_out_of_window_tokens) {
            continue;
        }
        checked += 1;
        let path = dir.join(format!("window{}.conll", seed));
        write_corpus(&path, &corpus);
        let (full, _) = stats_via_cli(&path, "full_sequence");
        let (window, _) = stats_via_cli(&path, "window_only");
        if window <= full {
            violations += 1;
        }
    }
    out.push(verdict(
        checked > 0 && violations == 0,
        format!("2b window_only arg share strictly above full_sequence on {} corpora ({} violations)", checked, violations),
    ));

    match std::env::var("BOUNDSRL_CONLL09_TRAIN") {
        Ok(path) => {
            let (fa, fn_) = stats_via_cli(Path::new(&path), "full_sequence");
            let (wa, wn) = stats_via_cli(Path::new(&path), "window_only");
            let close = |a: f64, b: f64| (a - b).abs() <= 0.05;
            out.push(verdict(
                close(fa, 7.65) && close(fn_, 92.35) && close(wa, 43.81) && close(wn, 56.19),
                format!("2c CoNLL-2009 English train: full {:.2}/{:.2}, window {:.2}/{:.2}", fa, fn_, wa, wn),
            ));
        }
        Err(_) => out.push(Verdict::Skip(
            "2c CoNLL-2009 English statistics: set BOUNDSRL_CONLL09_TRAIN to a licensed copy to run".into(),
        )),
    }
    out.push(verdict(
        start.elapsed() < Duration::from_secs(60),
        format!("2d runtime {:.1}s", start.elapsed().as_secs_f64()),
    ));
    out
}

// ---------------------------------------------------------------- criterion 3

fn criterion_3() -> Vec<Verdict> {
    let start = Instant::now();
    let toy = TrainConfig::toy();
    let dims = toy.dims;
    let small = [dims.word, dims.pretrained, dims.lemma, dims.pos, dims.indicator, dims.external]
        .iter()
        .all(|&d| d <= 8);
    let shape_ok = toy.hidden == 4 && toy.hops == 2 && toy.layers == 1 && small;
    let mut worst = 0.0f64;
    let mut tensors = 0;
    for seed in 0..5 {
        let report = toy_gradient_check(seed).unwrap();
        tensors = report.params.len();
        worst = worst.max(report.max_rel_err());
    }
    let (code, out) = cli(&["gradcheck", "--preset", "toy", "--seed", "0", "--seeds", "5"]);
    let cli_err = key_value(&out, "max_rel_err").unwrap_or(f64::INFINITY);
    let elapsed = start.elapsed();
    vec![verdict(
        shape_ok && worst < 1e-4 && code == 0 && cli_err < 1e-4 && elapsed < Duration::from_secs(60),
        format!(
            "3 full-model gradient check, 5 seeds x {} tensors: max rel err {:.2e} (cli {:.2e}, exit {}), {:.1}s",
            tensors,
            worst,
            cli_err,
            code,
            elapsed.as_secs_f64()
        ),
    )]
}

// ------------------------------------------------------------ criteria 4 and 5

fn overfit_data(seed: u64) -> (Dataset, Dataset) {
    let base = GenConfig {
        window: 3,
        labels: vec!["A0".into(), "A1".into()],
        min_predicates: 1,
        max_predicates: 1,
        ..GenConfig::default()
    };
    let train_corpus = generate(&GenConfig { sentences: 50, seed: 100 * seed, ..base.clone() }).unwrap();
    let dev_corpus = generate(&GenConfig { sentences: 20, seed: 100 * seed + 1, ..base }).unwrap();
    (Dataset::new(train_corpus), Dataset::new(dev_corpus))
}

fn overfit_config(seed: u64) -> TrainConfig {
    TrainConfig {
        max_epochs: 300,
        seed,
        ..TrainConfig::desk()
    }
}

struct RunResult {
    train_f1: f64,
    dev_f1: f64,
    best_epoch: usize,
}

fn overfit_run(seed: u64, use_aux_tags: bool) -> RunResult {
    let (train_data, dev_data) = overfit_data(seed);
    let config = TrainConfig {
        use_aux_tags,
        ..overfit_config(seed)
    };
    let outcome = train(&train_data, Some(&dev_data), &config, None, &mut |_| {}).unwrap();
    RunResult {
        train_f1: evaluate_model(&outcome.model, &train_data).unwrap().f1,
        dev_f1: evaluate_model(&outcome.model, &dev_data).unwrap().f1,
        best_epoch: outcome.best_epoch,
    }
}

const ABLATION_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn criterion_4_and_5() -> Vec<Verdict> {
    let config = overfit_config(1);
    let shape_ok = config.hidden == 32 && config.hops == 2 && config.layers == 2 && config.dims.external == 0;

    let start = Instant::now();
    let full: Vec<RunResult> = ABLATION_SEEDS.iter().map(|&s| overfit_run(s, true)).collect();
    let first = &full[0];
    let first_time = start.elapsed() / ABLATION_SEEDS.len() as u32;
    let no_aux: Vec<RunResult> = ABLATION_SEEDS.iter().map(|&s| overfit_run(s, false)).collect();

    let c4 = verdict(
        shape_ok && first.train_f1 >= 0.99 && first.dev_f1 >= 0.90 && first_time < Duration::from_secs(600),
        format!(
            "4 overfit, 50 sentences, w=3, 2 labels, d=32 r=2 L=2, 300 epochs: train F1 {:.4}, dev F1 {:.4} (best epoch {}), ~{:.0}s per run",
            first.train_f1,
            first.dev_f1,
            first.best_epoch,
            first_time.as_secs_f64()
        ),
    );
    let mean = |runs: &[RunResult]| runs.iter().map(|r| r.dev_f1).sum::<f64>() / runs.len() as f64;
    let (m_full, m_no_aux) = (mean(&full), mean(&no_aux));
    let fmt = |runs: &[RunResult]| runs.iter().map(|r| format!("{:.3}", r.dev_f1)).collect::<Vec<_>>().join(",");
    let c5 = verdict(
        m_full >= m_no_aux - 0.02,
        format!(
            "5 ablation over {} seeds: full dev F1 {:.4} [{}] vs no-aux-tags {:.4} [{}]",
            ABLATION_SEEDS.len(),
            m_full,
            fmt(&full),
            m_no_aux,
            fmt(&no_aux)
        ),
    );
    vec![c4, c5]
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Vec<Verdict> {
    let mut instances = Vec::new();
    let mut seed = 0;
    while instances.len() < 1000 {
        let config = GenConfig {
            sentences: 50,
            max_predicates: 3,
            min_args: 0,
            max_args: (2 + 2 * (seed as usize % 4)).min(4),
            window: 1 + seed as usize % 4,
            seed: 600 + seed,
            ..GenConfig::default()
        };
        instances.extend(extract_instances(&generate(&config).unwrap()));
        seed += 1;
    }
    instances.truncate(1000);
    let labels = LabelSet::from_labels(GenConfig::default().labels);
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    let mut mismatches = 0;
    for (k, inst) in instances.iter().enumerate() {
        let aug = augment_labels(inst).unwrap();
        let matrix = PredictionMatrix::one_hot(&labels.encode(&aug.gold_labels).unwrap(), labels.len()).unwrap();
        let got = decode(&matrix, &labels, k, inst.predicate_index, true).unwrap();
        let want = ArgumentSet::from_labels(k, inst.predicate_index, &inst.gold_labels);
        if got != want {
            mismatches += 1;
        }
        pred.push(got);
        gold.push(want);
    }
    let report = evaluate(&pred, &gold).unwrap();
    vec![verdict(
        mismatches == 0 && report.f1 == 1.0,
        format!("6 decode(one-hot augmented gold) == gold on 1000 instances: {} mismatches, F1 {}", mismatches, report.f1),
    )]
}

// ---------------------------------------------------------------- criterion 7

fn brute_force_scores(pred: &[ArgumentSet], gold: &[ArgumentSet]) -> (f64, f64, f64) {
    let triples = |sets: &[ArgumentSet]| -> Vec<(usize, usize, usize, String)> {
        sets.iter()
            .flat_map(|s| s.args.iter().map(move |(i, l)| (s.sentence_id, s.predicate_index, *i, l.clone())))
            .collect()
    };
    let (p, g) = (triples(pred), triples(gold));
    if p.is_empty() && g.is_empty() {
        return (1.0, 1.0, 1.0);
    }
    let correct = p.iter().filter(|t| g.contains(t)).count() as f64;
    let precision = if p.is_empty() { 0.0 } else { correct / p.len() as f64 };
    let recall = if g.is_empty() { 0.0 } else { correct / g.len() as f64 };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    (precision, recall, f1)
}

fn random_set(rng: &mut impl Rng, sentence_id: usize, predicate_index: usize) -> ArgumentSet {
    let labels = ["A0", "A1", "A2", "AM-TMP"];
    let mut set = ArgumentSet::new(sentence_id, predicate_index);
    for _ in 0..rng.random_range(0..6) {
        set.args.insert(rng.random_range(0..10), labels[rng.random_range(0..labels.len())].to_string());
    }
    set
}

fn criterion_7() -> Vec<Verdict> {
    let mut rng = derive_rng(7, &[]);
    let mut max_diff = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..6);
        let keys: Vec<(usize, usize)> = (0..n).map(|i| (i, rng.random_range(0..10))).collect();
        let gold: Vec<ArgumentSet> = keys.iter().map(|&(s, p)| random_set(&mut rng, s, p)).collect();
        let pred: Vec<ArgumentSet> = keys
            .iter()
            .zip(&gold)
            .map(|(&(s, p), g)| {
                // Mix copies of gold arguments with random ones.
                let mut set = random_set(&mut rng, s, p);
                for (i, l) in &g.args {
                    if rng.random_bool(0.5) {
                        set.args.insert(*i, l.clone());
                    }
                }
                set
            })
            .collect();
        let r = evaluate(&pred, &gold).unwrap();
        let (p, rc, f) = brute_force_scores(&pred, &gold);
        max_diff = max_diff.max((r.precision - p).abs()).max((r.recall - rc).abs()).max((r.f1 - f).abs());
    }

    let mut gold = ArgumentSet::new(0, 2);
    for (i, l) in [(0, "A0"), (1, "A1"), (3, "A2"), (4, "A3")] {
        gold.args.insert(i, l.to_string());
    }
    let mut pred = ArgumentSet::new(0, 2);
    for (i, l) in [(0, "A0"), (1, "A1"), (3, "A3")] {
        pred.args.insert(i, l.to_string());
    }
    let r = evaluate(&[pred], &[gold]).unwrap();
    let worked = (r.precision - 2.0 / 3.0).abs() <= 1e-12 && (r.recall - 0.5).abs() <= 1e-12 && (r.f1 - 4.0 / 7.0).abs() <= 1e-12;
    vec![
        verdict(max_diff == 0.0, format!("7a scorer vs brute-force triples on 1000 pairs: max |diff| {:e}", max_diff)),
        verdict(
            worked,
            format!("7b worked example P={:.12} R={:.12} F1={:.12} (2/3, 1/2, 4/7)", r.precision, r.recall, r.f1),
        ),
    ]
}

// ---------------------------------------------------------------- criterion 8

fn property<S: Strategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Verdict {
    let mut runner = TestRunner::new(PropConfig {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..PropConfig::default()
    });
    match runner.run(&strategy, test) {
        Ok(()) => Verdict::Pass(format!("8 {} ({} cases)", name, PROPERTY_CASES)),
        Err(e) => Verdict::Fail(format!("8 {}: {}", name, e)),
    }
}

fn matrix(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>, scale: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (rows, cols).prop_flat_map(move |(r, c)| prop::collection::vec(prop::collection::vec(-scale..scale, c), r))
}

fn random_sentence() -> impl Strategy<Value = Sentence> {
    (1usize..9).prop_flat_map(|n| {
        (
            prop::collection::vec(("[a-z]{1,6}", "[a-z]{1,6}", "[A-Z]{2}", prop::bool::weighted(0.3)), n),
            prop::collection::vec(prop::collection::vec(prop::option::weighted(0.3, 0..4usize), n), n),
        )
            .prop_map(|(rows, labels)| {
                let preds: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].3).collect();
                let tokens = rows
                    .iter()
                    .enumerate()
                    .map(|(i, (form, lemma, pos, is_pred))| {
                        let mut t = Token::new(form, lemma, pos);
                        if *is_pred {
                            t.is_predicate = true;
                            t.sense = format!("{}.01", lemma);
                        }
                        t.arg_labels = (0..preds.len())
                            .map(|k| labels[k][i].map_or(NULL_LABEL.to_string(), |a| format!("A{}", a)))
                            .collect();
                        t
                    })
                    .collect();
                Sentence::new(tokens).unwrap()
            })
    })
}

fn random_instance() -> impl Strategy<Value = PredicateInstance> {
    (1usize..15).prop_flat_map(|n| {
        (0..n, prop::collection::vec(prop::option::weighted(0.3, 0..4usize), n)).prop_map(move |(p, raw)| {
            let gold: Vec<String> = raw
                .iter()
                .enumerate()
                .map(|(i, l)| match l {
                    Some(k) if i != p => format!("A{}", k),
                    _ => NULL_LABEL.to_string(),
                })
                .collect();
            let tokens = (0..n)
                .map(|i| {
                    let mut t = Token::new("w", "w", "NN");
                    t.is_predicate = i == p;
                    if i == p {
                        t.sense = "w.01".into();
                    }
                    t.arg_labels = vec![gold[i].clone()];
                    t
                })
                .collect();
            PredicateInstance {
                sentence_id: 0,
                sentence: Arc::new(Sentence::new(tokens).unwrap()),
                frame: 0,
                predicate_index: p,
                gold_labels: gold,
            }
        })
    })
}

fn tiny_train_config(seed: u64, workers: usize) -> TrainConfig {
    let mut c = TrainConfig::desk();
    c.hidden = 4;
    c.layers = 1;
    c.hops = 2;
    c.dims.word = 3;
    c.dims.lemma = 3;
    c.dims.pos = 2;
    c.dims.indicator = 2;
    c.batch_size = 3;
    c.max_epochs = 2;
    c.seed = seed;
    c.workers = workers;
    c
}

fn train_and_predict(corpus: &Corpus, config: &TrainConfig) -> (Vec<u8>, String, String) {
    let data = Dataset::new(corpus.clone());
    let outcome = train(&data, Some(&data), config, None, &mut |_| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("m.ckpt");
    outcome.model.save(&ckpt).unwrap();
    let predicted = boundsrl::decoder::predict_corpus(&outcome.model, corpus, None).unwrap();
    (
        std::fs::read(&ckpt).unwrap(),
        format!("{:?}", outcome.history),
        serialize_corpus(&predicted, &FormatConfig::conll2009()),
    )
}

fn criterion_8(dir: &Path) -> Vec<Verdict> {
    let mut out = Vec::new();
    out.push(property("softmax rows sum to 1 within 1e-9", matrix(1..=6, 1..=9, 80.0), |m| {
        let p = tape::softmax_rows(&Tensor::from_rows(&m).unwrap()).unwrap();
        for i in 0..p.rows() {
            prop_assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        Ok(())
    }));

    let attention_case = || (matrix(1..=8, 1..=6, 4.0), 1usize..6, 1usize..4, any::<u64>());
    let attention = |(h, k, hops, seed): (Vec<Vec<f64>>, usize, usize, u64)| -> Result<(Tensor, Tensor), TestCaseError> {
        let mut store = ParamStore::new();
        let params = AttentionParams::new(h[0].len(), k, hops, &mut store, &mut derive_rng(seed, &[])).unwrap();
        for id in store.ids().collect::<Vec<_>>() {
            let t = Tensor::uniform(store.get(id).shape(), 3.0, &mut derive_rng(seed, &[1 + id.index() as u64]));
            *store.get_mut(id) = t;
        }
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let hv = tape.constant(Tensor::from_rows(&h).unwrap());
        let (m, s) = attend(&mut tape, &bound, &params, hv).unwrap();
        Ok((tape.value(m).clone(), tape.value(s).clone()))
    };
    out.push(property("attention rows of M sum to 1", attention_case(), |case| {
        let (m, _) = attention(case)?;
        for r in 0..m.rows() {
            prop_assert!((m.row(r).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        Ok(())
    }));
    out.push(property("rows of S within column bounds of H", attention_case(), |case| {
        let h = case.0.clone();
        let (_, s) = attention(case)?;
        for r in 0..s.rows() {
            for j in 0..s.cols() {
                let lo = h.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min);
                let hi = h.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(s.get(r, j) >= lo - 1e-9 && s.get(r, j) <= hi + 1e-9);
            }
        }
        Ok(())
    }));
    out.push(property("strip(augment(x)) == x", random_instance(), |inst| {
        prop_assert_eq!(strip_tags(&augment_labels(&inst).unwrap()), inst);
        Ok(())
    }));
    out.push(property(
        "parse(serialize(c)) == c and serialization is byte-stable",
        prop::collection::vec(random_sentence(), 1..5),
        |sentences| {
            let corpus = Corpus::new(sentences);
            for fmt in [FormatConfig::conll2009(), FormatConfig::simple()] {
                let text = serialize_corpus(&corpus, &fmt);
                let back = parse_str(&text, &fmt).unwrap();
                prop_assert_eq!(&back, &corpus);
                prop_assert_eq!(serialize_corpus(&back, &fmt), text);
            }
            Ok(())
        },
    ));
    out.push(property(
        "seeded train/predict double run is bitwise identical",
        (any::<u64>(), 1usize..4, 1usize..3),
        |(seed, predicates, workers)| {
            let corpus = generate(&GenConfig {
                sentences: 3,
                min_len: 3,
                max_len: 7,
                max_predicates: predicates,
                min_predicates: 1,
                seed,
                ..GenConfig::default()
            })
            .unwrap();
            let config = tiny_train_config(seed, workers);
            let a = train_and_predict(&corpus, &config);
            let b = train_and_predict(&corpus, &config);
            prop_assert!(a == b);
            Ok(())
        },
    ));

    // Same determinism end to end through the executable.
    let data = dir.join("det_train.conll");
    write_corpus(&data, &generate(&GenConfig { sentences: 12, seed: 5, ..GenConfig::default() }).unwrap());
    let run = |tag: &str| {
        let ckpt = dir.join(format!("det_{}.ckpt", tag));
        let pred = dir.join(format!("det_{}.pred", tag));
        let (c1, o1) = cli(&[
            "train", "--data", data.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap(),
            "--set", "epochs=3", "--set", "d=8", "--set", "layers=1", "--seed", "9",
        ]);
        let (c2, o2) = cli(&[
            "predict", "--checkpoint", ckpt.to_str().unwrap(), "--data", data.to_str().unwrap(),
            "--out", pred.to_str().unwrap(),
        ]);
        let mut history = ckpt.as_os_str().to_owned();
        history.push(".history.tsv");
        (
            c1 + c2,
            o1 + &o2,
            std::fs::read(&ckpt).unwrap_or_default(),
            std::fs::read(history).unwrap_or_default(),
            std::fs::read(&pred).unwrap_or_default(),
        )
    };
    let (a, b) = (run("a"), run("b"));
    out.push(verdict(
        a.0 == 0 && a == b && !a.2.is_empty(),
        "8 cli train+predict twice: checkpoint, history, predictions and stdout byte-identical".into(),
    ));
    out
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let verdicts = vec![Verdict::Skip(
        "1 full-scale benchmark (CoNLL-2009 English F1 89.0) needs licensed data and full-scale training; replaced by 2-8".into(),
    )];
    let sections: Vec<(&str, Box<dyn Fn() -> Vec<Verdict>>)> = vec![
        ("2", Box::new(|| criterion_2(dir.path()))),
        ("3", Box::new(criterion_3)),
        ("6", Box::new(criterion_6)),
        ("7", Box::new(criterion_7)),
        ("8", Box::new(|| criterion_8(dir.path()))),
        ("4+5", Box::new(criterion_4_and_5)),
    ];
    let only = std::env::var("BOUNDSRL_ACCEPTANCE_ONLY").ok();
    let (mut passed, mut failed, mut skipped) = (0, 0, 0);
    let mut report = |v: &Verdict| match v {
        Verdict::Pass(d) => {
            passed += 1;
            println!("PASS {}", d)
        }
        Verdict::Fail(d) => {
            failed += 1;
            println!("FAIL {}", d)
        }
        Verdict::Skip(d) => {
            skipped += 1;
            println!("SKIP {}", d)
        }
    };
    verdicts.iter().for_each(&mut report);
    for (name, section) in sections {
        if only.as_deref().is_some_and(|o| !o.split(',').any(|x| x == name)) {
            continue;
        }
        section().iter().for_each(&mut report);
    }
    println!(
        "acceptance: {} pass, {} fail, {} skip in {:.1}s",
        passed,
        failed,
        skipped,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
