use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use weakner::tagger::Model;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn weakner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakner")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", stderr(out));
}

fn assert_one_line_error(out: &Output) -> String {
    assert!(!out.status.success());
    let err = stderr(out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(out.stdout.is_empty());
    err
}

#[test]
fn annotate_matches_golden_and_handles_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.conll");
    let run = weakner(&["annotate", "--abstracts", s(&fixture("mini_wiki.tsv")), "--gazetteer", s(&fixture("gazetteer.tsv")), "--out", s(&out)]);
    assert_ok(&run);
    assert!(run.stdout.is_empty());
    assert_eq!(fs::read(&out).unwrap(), fs::read(fixture("annotate.golden.conll")).unwrap());

    let empty = dir.path().join("empty.tsv");
    fs::write(&empty, "").unwrap();
    let run = weakner(&["annotate", "--abstracts", s(&empty), "--gazetteer", s(&fixture("gazetteer.tsv")), "--out", s(&out)]);
    assert_ok(&run);
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn missing_gazetteer_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-gazetteer.tsv");
    let run = weakner(&["annotate", "--abstracts", s(&fixture("mini_wiki.tsv")), "--gazetteer", s(&missing), "--out", s(&dir.path().join("x"))]);
    let err = assert_one_line_error(&run);
    assert!(err.contains("no-such-gazetteer.tsv"), "{err}");
}

#[test]
fn markup_errors_name_the_document() {
    let dir = tempfile::tempdir().unwrap();
    let abstracts = dir.path().join("bad.tsv");
    fs::write(&abstracts, "broken\t[[Paris is big\n").unwrap();
    let run = weakner(&["annotate", "--abstracts", s(&abstracts), "--gazetteer", s(&fixture("gazetteer.tsv")), "--out", s(&dir.path().join("x"))]);
    let err = assert_one_line_error(&run);
    assert!(err.contains("broken"), "{err}");
}

#[test]
fn build_correction_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pairs.tsv");
    let run = weakner(&["build-correction", "--noisy", s(&fixture("annotate.golden.conll")), "--gold", s(&fixture("gold_inventory.tsv")), "--out", s(&out)]);
    assert_ok(&run);
    assert_eq!(fs::read(&out).unwrap(), fs::read(fixture("correction.golden.tsv")).unwrap());

    let nothing = dir.path().join("nothing.tsv");
    fs::write(&nothing, "london\tAtlantis\tLOC\n").unwrap();
    let run = weakner(&["build-correction", "--noisy", s(&fixture("annotate.golden.conll")), "--gold", s(&nothing), "--out", s(&out)]);
    assert_ok(&run);
    assert!(stderr(&run).contains("warning"));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");

    let stranger = dir.path().join("stranger.tsv");
    fs::write(&stranger, "no-such-doc\tParis\tLOC\n").unwrap();
    let run = weakner(&["build-correction", "--noisy", s(&fixture("annotate.golden.conll")), "--gold", s(&stranger), "--out", s(&out)]);
    let err = assert_one_line_error(&run);
    assert!(err.contains("no-such-doc"), "{err}");
}

fn train_correction(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let model = dir.join("model.json");
    let data = fixture("correction_train.tsv");
    let mut args = vec!["train-correction", "--data", s(&data), "--out", s(&model)];
    args.extend_from_slice(&["--epochs", "3"]);
    args.extend_from_slice(extra);
    let run = weakner(&args);
    assert_ok(&run);
    (model.clone(), model.with_extension("trace.tsv"))
}

#[test]
fn train_correction_is_deterministic_and_honours_ablation_flags() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ma, ta) = train_correction(a.path(), &["--seed", "5"]);
    let (mb, tb) = train_correction(b.path(), &["--seed", "5"]);
    assert_eq!(fs::read(&ma).unwrap(), fs::read(&mb).unwrap());
    assert_eq!(fs::read(&ta).unwrap(), fs::read(&tb).unwrap());
    let trace = fs::read_to_string(&ta).unwrap();
    assert!(trace.starts_with("stage\tepoch\tbatches\tsamples\tloss\n"));
    let stages: Vec<&str> = trace.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(stages, ["0", "0", "0", "1", "1", "1", "2", "2", "2"]);

    let c = tempfile::tempdir().unwrap();
    let (_, tc) = train_correction(c.path(), &["--no-curriculum"]);
    let trace = fs::read_to_string(&tc).unwrap();
    assert!(trace.lines().skip(1).all(|l| l.starts_with("0\t") && l.split('\t').nth(3) == Some("50")));

    let (mc, _) = train_correction(c.path(), &["--no-noisy-input"]);
    let model = Model::load(&mc).unwrap();
    assert!(model.params.label_embedder.is_none());
}

#[test]
fn config_file_is_applied_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("settings.toml");
    fs::write(&config, "seed = 4\nepochs_per_stage = 2\nhidden_dim = 6\n").unwrap();
    let model = dir.path().join("m.json");
    let run = weakner(&["--config", s(&config), "train-correction", "--data", s(&fixture("correction_train.tsv")), "--out", s(&model), "--hidden-dim", "5"]);
    assert_ok(&run);
    let loaded = Model::load(&model).unwrap();
    assert_eq!(loaded.seed, 4);
    assert_eq!(loaded.params.encoder.hidden_dim(), 5);
    assert_eq!(fs::read_to_string(model.with_extension("trace.tsv")).unwrap().lines().count(), 1 + 3 * 2);

    fs::write(&config, "sed = 4\n").unwrap();
    let run = weakner(&["--config", s(&config), "stats", s(&fixture("annotate.golden.conll"))]);
    assert_one_line_error(&run);
}

#[test]
fn correct_and_evaluate_with_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _) = train_correction(dir.path(), &[]);
    let corrected = dir.path().join("corrected.conll");
    let noisy = fixture("annotate.golden.conll");
    assert_ok(&weakner(&["correct", "--input", s(&noisy), "--model", s(&model), "--out", s(&corrected)]));
    let docs = weakner::read_conll(&corrected).unwrap();
    assert_eq!(docs.len(), 12);

    let direct = weakner(&["evaluate", "--predicted", s(&corrected), "--reference", s(&noisy)]);
    assert_ok(&direct);
    let via_model = weakner(&["evaluate", "--model", s(&model), "--input", s(&noisy), "--reference", s(&noisy)]);
    assert_ok(&via_model);
    assert_eq!(direct.stdout, via_model.stdout);

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{}").unwrap();
    assert_one_line_error(&weakner(&["correct", "--input", s(&noisy), "--model", s(&garbage), "--out", s(&corrected)]));
}

#[test]
fn evaluate_identity_scores_one() {
    let golden = fixture("annotate.golden.conll");
    let run = weakner(&["evaluate", "--predicted", s(&golden), "--reference", s(&golden)]);
    assert_ok(&run);
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("span.micro.f1 = 1\n"), "{text}");
    assert!(text.contains("token.accuracy = 1\n"), "{text}");

    let run = weakner(&["evaluate", "--predicted", s(&golden), "--reference", s(&golden), "--json"]);
    assert_ok(&run);
    let json: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(json["span"]["micro"]["f1"], 1.0);

    assert!(!weakner(&["evaluate", "--reference", s(&golden)]).status.success());
}

#[test]
fn stats_reports_fixture_counts() {
    let run = weakner(&["stats", s(&fixture("annotate.golden.conll"))]);
    assert_ok(&run);
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("tokens = 246\n"));
    assert!(text.contains("annotated_tokens = 62\n"));
    assert!(text.contains(&format!("rat = {}\n", 62.0 / 246.0)));
    assert!(text.contains("spans.PER = 13\n"));
}

fn write_corpus(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn train_tagger_orders_corpora_and_builds_heads() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.conll");
    let second = dir.path().join("second.conll");
    write_corpus(&first, "Alice\tB-PER\nruns\tO\n\n");
    write_corpus(&second, "-DOCSTART- x\tO\n\nParis\tB-LOC\n\nRome\tB-LOC\nis\tO\n\n");
    let model = dir.path().join("tagger.json");
    let trace = dir.path().join("trace.tsv");
    let run = weakner(&[
        "train", "--data", s(&first), "--data", s(&second), "--out", s(&model), "--trace", s(&trace),
        "--binary-window", "2", "--binary-window", "4", "--positional-window", "1", "--epochs", "2",
    ]);
    assert_ok(&run);
    assert_eq!(Model::load(&model).unwrap().params.heads.len(), 19);
    let rows: Vec<String> = fs::read_to_string(&trace).unwrap().lines().skip(1).map(|l| {
        let c: Vec<&str> = l.split('\t').collect();
        format!("{}:{}", c[0], c[3])
    }).collect();
    assert_eq!(rows, ["0:1", "0:1", "1:2", "1:2"]);

    let run = weakner(&["train", "--data", s(&first), "--out", s(&model), "--epochs", "1"]);
    assert_ok(&run);
    assert_eq!(Model::load(&model).unwrap().params.heads.len(), 1);

    let run = weakner(&["evaluate", "--model", s(&model), "--input", s(&first), "--reference", s(&first)]);
    assert_ok(&run);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conll");
    write_corpus(&bad, "Alice\tI-PER\n\n");
    let err = assert_one_line_error(&weakner(&["stats", s(&bad)]));
    assert!(err.contains("bad.conll"), "{err}");
    assert_one_line_error(&weakner(&["--threads", "0", "stats", s(&fixture("annotate.golden.conll"))]));
    assert_ok(&weakner(&["--threads", "2", "stats", s(&fixture("annotate.golden.conll"))]));
}
