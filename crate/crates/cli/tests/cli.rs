use std::path::Path;
use std::process::{Command, Output};

fn rsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsl"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn rsl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, patients: usize, cycles: usize) {
    let o = rsl(&["synth", "--out", p(dir), "--patients", &patients.to_string(), "--cycles", &cycles.to_string()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_1() {
    for args in [&[][..], &["frobnicate"][..], &["ingest", "--corpus"][..], &["stats", "--bogus", "x"][..]] {
        let o = rsl(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
    assert_eq!(rsl(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = rsl(&["ingest", "--corpus", p(&dir.path().join("missing")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(dir.path().join("cfg.json"), "{\"corpus_dir\": 3}").unwrap();
    let o = rsl(&["crossval", "--config", p(&dir.path().join("cfg.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ingest_three_cycle_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("data");
    synth(&corpus, 1, 3);
    let out = dir.path().join("run");
    let o = rsl(&["ingest", "--corpus", p(&corpus), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let manifest = std::fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 3);
    assert!(manifest.starts_with("recording_id,patient_id,cycle_index,start_s,end_s,crackle,wheeze,fold"));
    let text = stdout(&o);
    assert!(text.contains("class\tcycles") && text.contains("total\t3"), "{text}");
}

#[test]
fn features_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("data");
    synth(&corpus, 2, 2);
    let feats = dir.path().join("features");
    let o = rsl(&["features", "--corpus", p(&corpus), "--out", p(&feats), "--representation", "cqt"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(feats.join("cqt")).unwrap().count(), 4 + 1);
    let img = dir.path().join("img");
    let o = rsl(&["render", "--input", p(&feats.join("cqt")), "--out", p(&img), "--limit", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let pngs: Vec<_> = std::fs::read_dir(&img).unwrap().collect();
    assert_eq!(pngs.len(), 2);
    let o = rsl(&["features", "--corpus", p(&corpus), "--out", p(&feats), "--representation", "wavelet"]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_config(dir: &Path, corpus: &Path, out: &str, model: &str) -> std::path::PathBuf {
    let cfg = serde_json::json!({
        "corpus_dir": corpus,
        "representation": "cochleogram",
        "model": model,
        "task": "wheeze-binary",
        "output_dir": dir.join(out),
        "seed": 5,
        "train": {"epochs": 1, "batch_size": 8, "patience": 1}
    });
    let path = dir.join(format!("{out}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn crossval_stats_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("data");
    synth(&corpus, 10, 2);
    let vit = write_config(dir.path(), &corpus, "vit", "vit");
    let o = rsl(&["crossval", "--config", p(&vit)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("vit/results.csv")).unwrap();
    let folds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(folds, ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "mean", "pooled"]);
    assert!(dir.path().join("vit/manifest.json").exists());

    let cnn = write_config(dir.path(), &corpus, "cnn", "baseline-cnn");
    let o = rsl(&["crossval", "--config", p(&cnn), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cnn/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);

    let (a, b) = (dir.path().join("vit/results.csv"), dir.path().join("cnn/results.csv"));
    let stats_csv = dir.path().join("stats.csv");
    let o = rsl(&["stats", "--a", p(&a), "--b", p(&b), "--metric", "acc", "--out", p(&stats_csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("mann-whitney-u: statistic")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("wilcoxon-signed-rank: ")), "{text}");
    assert!(text.contains("alpha 0.05") || text.contains("undefined"));
    assert!(std::fs::read_to_string(&stats_csv).unwrap().starts_with("comparison,U_p,W_p,significant\n"));

    let table = dir.path().join("table.csv");
    let o = rsl(&["report", "--results", p(&a), p(&b), "--out", p(&table)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("model\ttf\tacc wheeze-binary"));
    assert!(text.contains("vit\tcochleogram\t") && text.contains("baseline-cnn\tcochleogram\t"));
    assert!(table.exists());
}

#[test]
fn train_writes_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("data");
    synth(&corpus, 3, 2);
    let cfg = serde_json::json!({
        "corpus_dir": corpus, "representation": "stft", "model": "baseline-cnn",
        "task": "four-class", "output_dir": dir.path().join("out"), "folds": 3,
        "train": {"epochs": 1, "patience": 1}
    });
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = rsl(&["train", "--config", p(&path), "--test-fold", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/model.rslm").exists());
    assert!(dir.path().join("out/model.json").exists());
    let o = rsl(&["train", "--config", p(&path), "--test-fold", "3"]);
    assert_eq!(o.status.code(), Some(2));
}
