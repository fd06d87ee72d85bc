use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn vectorplus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vectorplus"))
        .args(args)
        .env("VECTORPLUS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A copy of the toy config trimmed to a few epochs.
fn quick_config(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(fixture("toy_config.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["dataset"]["path"] = fixture("toy_two_class.csv")
        .to_string_lossy()
        .into_owned()
        .into();
    cfg["encoder"]["epochs"] = 2.into();
    cfg["decoder"]["epochs"] = 20.into();
    cfg["decoder"]["layers"] = 1.into();
    cfg["generation"]["samples"] = 10.into();
    let path = dir.join("quick.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = vectorplus(&["preprocess", "--data", "/no/such/file.csv", "--output", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/file.csv"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(vectorplus(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        vectorplus(&["generate", "--reward", "qed"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"seed\": \"x\"}").unwrap();
    assert_eq!(
        vectorplus(&["preprocess", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn preprocess_reports_class_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = fixture("pdl1_config.json");
    let o = vectorplus(&[
        "preprocess",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("high activity: 174"));
    assert!(stdout(&o).contains("low activity: 173"));

    let cfg = fixture("kinase_config.json");
    let o = vectorplus(&[
        "preprocess",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for line in [
        "Type I: 1425",
        "Type I½: 394",
        "Type II: 190",
        "allosteric: 47",
    ] {
        assert!(
            stdout(&o).contains(line),
            "{line} missing from {}",
            stdout(&o)
        );
    }
}

#[test]
fn verify_budget_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let start = Instant::now();
    let o = vectorplus(&["verify", "--grad-check-only", "--output", out]);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS gradient"));
    assert!(!stdout(&o).contains("uniform"));

    let o = vectorplus(&["verify", "--samples", "100", "--output", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert!(stdout(&o).contains("trajectory"));

    let o = vectorplus(&["verify", "--output", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 6);
}

#[test]
fn train_generate_evaluate_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let cfg = quick_config(dir.path());
    let cfg = cfg.to_str().unwrap();

    let o = vectorplus(&["train", "--config", cfg, "--output", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("alignment: component 1 -> class"));

    let o = vectorplus(&[
        "generate",
        "--config",
        cfg,
        "--output",
        out,
        "--class",
        "1",
        "--count",
        "5",
        "--reward",
        "lipinski",
        "--hill-steps",
        "4",
        "--knn",
        "3",
        "--alpha",
        "0.2",
        "--temperature",
        "0.9",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(out).join("class_1_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["requested"], 5);
    assert_eq!(summary["config"]["reward"], "lipinski");
    assert_eq!(summary["config"]["hill_steps"], 4);
    assert_eq!(summary["config"]["knn"], 3);
    let attempts = std::fs::read_to_string(Path::new(out).join("class_1_attempts.csv")).unwrap();
    assert!(attempts.lines().next().unwrap().contains("reward"));
    assert!(!Path::new(out).join("class_2.smi").exists());

    let o = vectorplus(&["evaluate", "--config", cfg, "--output", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(Path::new(out).join("class_1_metrics.json").is_file());

    // a config whose shapes differ from the bundle is a pipeline failure
    let o = vectorplus(&["generate", "--config", cfg, "--output", out, "--class", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let text = std::fs::read_to_string(cfg)
        .unwrap()
        .replace("\"dim\": 8", "\"dim\": 12");
    let stale = dir.path().join("stale.json");
    std::fs::write(&stale, text).unwrap();
    let o = vectorplus(&[
        "generate",
        "--config",
        stale.to_str().unwrap(),
        "--output",
        out,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("encoder.dim"), "{}", stderr(&o));
}

#[test]
fn per_class_mixture_generates_one_file_per_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = fixture("kinase_small_config.json");
    let cfg = cfg.to_str().unwrap();
    let o = vectorplus(&["train", "--config", cfg, "--output", out, "--per-class-gmm"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut files = Vec::new();
    for c in 1..=4 {
        let class = c.to_string();
        let o = vectorplus(&[
            "generate", "--config", cfg, "--output", out, "--class", &class, "--count", "5",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let summary = Path::new(out).join(format!("class_{c}_summary.json"));
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
        assert_eq!(summary["class"], c);
        assert_eq!(summary["component"], c - 1);
        files.push(std::fs::read(Path::new(out).join(format!("class_{c}.smi"))).unwrap());
    }
    // generating again for one class leaves the others untouched
    let o = vectorplus(&[
        "generate", "--config", cfg, "--output", out, "--class", "2", "--count", "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for c in [1, 3, 4] {
        assert_eq!(
            std::fs::read(Path::new(out).join(format!("class_{c}.smi"))).unwrap(),
            files[c - 1]
        );
    }
}

#[test]
fn run_all_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = vectorplus(&[
            "run-all",
            "--config",
            cfg,
            "--seed",
            "5",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for name in names {
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
    let o = vectorplus(&[
        "run-all",
        "--config",
        cfg,
        "--seed",
        "6",
        "--output",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(
        std::fs::read(a.join("bundle.json")).unwrap(),
        std::fs::read(dir.path().join("c/bundle.json")).unwrap()
    );
}
