use std::path::{Path, PathBuf};

use sprint::cli;
use sprint::eval::EvalReport;
use sprint::manifest::RunManifest;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("sprint").chain(args.iter().copied()), &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small deterministic fixture in `dir/fx`.
fn synth_fixture(dir: &Path) -> PathBuf {
    let fx = dir.join("fx");
    let o = run(&[
        "synth", "--n", "200", "--p-hi", "1", "--p-lo", "0", "--heads", "6", "--layers", "2", "--clusters", "3",
        "--feature-dim", "5", "--out-dir", s(&fx),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    fx
}

fn train_quick(fx: &Path, out: &Path) -> Output {
    run(&[
        "train", "--outcomes", s(&fx.join("train.csv")), "--features", s(&fx.join("train.jsonl")),
        "--catalog", s(&fx.join("catalog.json")), "--out", s(out), "--steps", "150", "--embed-dim", "4",
    ])
}

#[test]
fn synth_writes_the_fixture_set() {
    let dir = tempfile::tempdir().unwrap();
    let fx = synth_fixture(dir.path());
    for name in ["train.csv", "test.csv", "train.jsonl", "test.jsonl", "catalog.json", "truth.json", "fixture.manifest.json"] {
        assert!(fx.join(name).exists(), "{name}");
    }
    let header = std::fs::read_to_string(fx.join("train.csv")).unwrap();
    assert!(header.starts_with("question_id,subject,base,L0H0,L0H1,L0H2,L1H0,L1H1,L1H2\n"));
    assert!(!header.contains('\r'));
    let catalog = std::fs::read_to_string(fx.join("catalog.json")).unwrap();
    assert!(catalog.starts_with(r#"[{"j":0,"layer":0,"head":0}"#));
    assert_eq!(header.lines().count(), 1 + 160);
}

#[test]
fn train_writes_model_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let fx = synth_fixture(dir.path());
    let model = dir.path().join("m.sprint");
    let o = train_quick(&fx, &model);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("trained 150 steps"));
    let bytes = std::fs::read(&model).unwrap();
    assert_eq!(&bytes[..8], b"SPRINTM1");

    let manifest = RunManifest::load(RunManifest::path_for(&model)).unwrap();
    assert_eq!(manifest.command, "train");
    assert_eq!(manifest.seed, Some(0));
    assert_eq!(manifest.inputs.len(), 3);
    assert!(manifest.changed_files().unwrap().is_empty());
    assert_eq!(manifest.options["steps"], 150);
    assert_eq!(manifest.options["lambda"], 0.01);

    let again = dir.path().join("m2.sprint");
    assert_eq!(train_quick(&fx, &again).code, 0);
    assert_eq!(std::fs::read(&again).unwrap(), bytes);
}

#[test]
fn misaligned_features_exit_with_align_code() {
    let dir = tempfile::tempdir().unwrap();
    let fx = synth_fixture(dir.path());
    let o = run(&[
        "train", "--outcomes", s(&fx.join("train.csv")), "--features", s(&fx.join("test.jsonl")),
        "--out", s(&dir.path().join("m.sprint")),
    ]);
    assert_eq!(o.code, 4, "{}", o.stderr);
    assert!(o.stderr.contains("alignment"));
}

#[test]
fn failure_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = run(&["stats", "--outcomes", s(&missing)]);
    assert_eq!(o.code, 6);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "question_id,base,L0H0\na,1,2\n").unwrap();
    assert_eq!(run(&["stats", "--outcomes", s(&bad)]).code, 3);

    let no_base = dir.path().join("nobase.csv");
    std::fs::write(&no_base, "question_id,L0H0\na,1\n").unwrap();
    let o = run(&["stats", "--outcomes", s(&no_base)]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("base"));

    assert_eq!(run(&["train", "--bogus"]).code, 2);
    assert_eq!(run(&["attn-demo", "--heads", "2", "--head-dim", "2", "--model-dim", "5"]).code, 2);

    let fx = synth_fixture(dir.path());
    let o = run(&[
        "train", "--outcomes", s(&fx.join("train.csv")), "--features", s(&fx.join("train.jsonl")),
        "--optimizer", "sgd", "--learning-rate", "1e200", "--out", s(&dir.path().join("m.sprint")),
    ]);
    assert_eq!(o.code, 5, "{}", o.stderr);
}

#[test]
fn select_ranks_heads_per_question() {
    let dir = tempfile::tempdir().unwrap();
    let fx = synth_fixture(dir.path());
    let model = dir.path().join("m.sprint");
    assert_eq!(train_quick(&fx, &model).code, 0);
    let o = run(&["select", "--model", s(&model), "--features", s(&fx.join("test.jsonl")), "--top-n", "3"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let parsed: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    let items = parsed.as_array().unwrap();
    assert_eq!(items.len(), 40);
    let ranked = items[0]["ranked"].as_array().unwrap();
    assert_eq!(ranked.len(), 3);
    assert!(ranked[0]["layer"].is_u64() && ranked[0]["head"].is_u64());
    let d: Vec<f64> = ranked.iter().map(|r| r["squared_distance"].as_f64().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(items[0]["clamped"], false);

    let o = run(&["select", "--model", s(&model), "--features", s(&fx.join("test.jsonl")), "--top-n", "99"]);
    let parsed: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(parsed[0]["clamped"], true);
    assert_eq!(parsed[0]["ranked"].as_array().unwrap().len(), 6);

    let out = dir.path().join("sel.json");
    let o = run(&["select", "--model", s(&model), "--features", s(&fx.join("test.jsonl")), "--out", s(&out)]);
    assert_eq!(o.code, 0);
    assert!(RunManifest::path_for(&out).exists());
    assert_eq!(run(&["select", "--model", s(&model), "--features", s(&fx.join("test.jsonl")), "--top-n", "0"]).code, 2);
}

/// 5-question fixture: only b and d are solvable by some head.
fn oracle_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let csv = dir.join("five.csv");
    std::fs::write(
        &csv,
        "question_id,L0H0,L0H1,L0H2\na,0,0,0\nb,0,1,0\nc,0,0,0\nd,1,0,1\ne,0,0,0\n",
    )
    .unwrap();
    let jsonl = dir.join("five.jsonl");
    let lines: String = ["a", "b", "c", "d", "e"]
        .iter()
        .map(|id| format!("{{\"id\":\"{id}\",\"features\":[0.0]}}\n"))
        .collect();
    std::fs::write(&jsonl, lines).unwrap();
    (csv, jsonl)
}

#[test]
fn oracle_only_eval_matches_hand_count() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, jsonl) = oracle_fixture(dir.path());
    let report = dir.path().join("r.json");
    let plot = dir.path().join("p.csv");
    let o = run(&[
        "eval", "--outcomes", s(&csv), "--features", s(&jsonl), "--policies", "oracle", "--n-max", "3",
        "--report", s(&report), "--plot", s(&plot),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    // 2 of 5 questions have a solving head
    let r = EvalReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r.policy("oracle").unwrap().pass_at.iter().all(|p| p.mean == 2.0 / 5.0));
    assert_eq!(
        std::fs::read_to_string(&plot).unwrap(),
        "policy,N,mean,stddev\noracle,1,0.4,0\noracle,2,0.4,0\noracle,3,0.4,0\n"
    );
    assert!(o.stdout.contains("oracle") && o.stdout.contains("0.4000"));

    let o = run(&[
        "eval", "--outcomes", s(&csv), "--features", s(&jsonl), "--policies", "oracle", "--n-max", "1",
        "--report", s(&report), "--plot", s(&plot),
    ]);
    assert_eq!(o.code, 0);
    let header = o.stdout.lines().next().unwrap();
    assert_eq!(header.split_whitespace().collect::<Vec<_>>(), vec!["policy", "N=1"]);
}

#[test]
fn unknown_policy_lists_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, jsonl) = oracle_fixture(dir.path());
    let o = run(&["eval", "--outcomes", s(&csv), "--features", s(&jsonl), "--policies", "oracle,greedy"]);
    assert_eq!(o.code, 2);
    for name in ["sprint", "random", "fixed", "oracle"] {
        assert!(o.stderr.contains(name), "{}", o.stderr);
    }
    let o = run(&["eval", "--outcomes", s(&csv), "--features", s(&jsonl), "--policies", "sprint"]);
    assert_eq!(o.code, 2, "sprint without --model is a usage error");
}

#[test]
fn stats_reports_gains() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("z.csv");
    std::fs::write(
        &csv,
        "question_id,base,L3H0,L3H1\na,1,1,0\nb,0,1,1\nc,0,0,1\nd,0,1,0\n",
    )
    .unwrap();
    let prefix = dir.path().join("out/st");
    let o = run(&["stats", "--outcomes", s(&csv), "--out-prefix", s(&prefix)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    // no subject column: a single "all" group; base 1/4, best head L3H0 3/4
    let summary = std::fs::read_to_string(dir.path().join("out/st_summary.csv")).unwrap();
    assert_eq!(
        summary,
        "group,n,baseline_accuracy,best_layer,best_head,best_accuracy,gain\nall,4,0.25,3,0,0.75,0.5\n"
    );
    let violin = std::fs::read_to_string(dir.path().join("out/st_violin.csv")).unwrap();
    assert_eq!(violin.lines().count(), 3);
    assert!(violin.contains("all,1,3,1,0.5,0.25"));
    assert!(dir.path().join("out/st_summary.csv.manifest.json").exists());
}

#[test]
fn attn_demo_prints_json_lines() {
    let o = run(&["attn-demo", "--heads", "2", "--head-dim", "2", "--seq-len", "2", "--seed", "0"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let lines: Vec<serde_json::Value> = o.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert!(l["max_abs_deviation"].as_f64().unwrap() <= 1e-12);
    }
    let o = run(&["attn-demo", "--heads", "1"]);
    assert_eq!(o.stdout.lines().count(), 1);
}

#[test]
fn help_lists_flags_with_defaults() {
    let o = run(&["train", "--help"]);
    assert_eq!(o.code, 0);
    for needle in [
        "--lambda", "[default: 0.01]", "--learning-rate", "--steps", "[default: 2000]", "--batch-size",
        "[default: 64]", "--radius", "[default: 10]", "--optimizer", "[default: adam]", "--beta2",
        "[default: 0.999]", "--eps", "[default: 0.00000001]", "--config",
    ] {
        assert!(o.stdout.contains(needle), "missing {needle:?} in\n{}", o.stdout);
    }
    for sub in ["select", "eval", "stats", "synth", "attn-demo"] {
        let o = run(&[sub, "--help"]);
        assert_eq!(o.code, 0);
        assert!(o.stdout.contains("--config"));
    }
    let eval_help = run(&["eval", "--help"]).stdout;
    assert!(eval_help.contains("[default: sprint,random,oracle]"));
    assert!(eval_help.contains("[default: 30]"));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let fx = synth_fixture(dir.path());
    let cfg = dir.path().join("train.toml");
    std::fs::write(&cfg, "steps = 20\nembed_dim = 3\nlambda = 0.5\n").unwrap();
    let model = dir.path().join("m.sprint");
    let o = run(&[
        "train", "--config", s(&cfg), "--outcomes", s(&fx.join("train.csv")), "--features",
        s(&fx.join("train.jsonl")), "--out", s(&model), "--steps", "30",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let m = sprint::load_model(&model).unwrap();
    assert_eq!(m.config.steps, 30);
    assert_eq!(m.config.embed_dim, 3);
    assert_eq!(m.config.lambda, 0.5);
    assert_eq!(m.config.batch_size, 64);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_flag = 1\n").unwrap();
    assert_eq!(run(&["synth", "--config", s(&bad)]).code, 2);
}
