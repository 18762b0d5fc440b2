use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn imatch(dir: &Path, args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_imatch"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!(
        "ball_radius = 3\nsamples = 20\nbfs_budget = 500\nexplore_samples = 4\n{extra}\n[dynamics]\nk = [3, 5]\nwindow = 40\ninstances = 12\nbridge_instances = 2\n"
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn explore_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(imatch(out, &["explore", "--point", "1", "--budget", "50"]), 0);
    let v = read_json(&out.join("explore.json"));
    assert_eq!(v["degree"], 1);
    assert_eq!(v["component"]["kind"]["endpoints"][0]["u"], "1");

    assert_eq!(imatch(out, &["explore", "--point", "1/2", "--budget", "0"]), 0);
    let v = read_json(&out.join("explore.json"));
    assert_eq!(v["degree"], 2);
    assert_eq!(v["component"]["kind"]["kind"], "partial");

    assert_eq!(
        imatch(out, &["explore", "--point", "1,1", "--side", "J", "--budget", "10"]),
        0
    );
    assert_eq!(read_json(&out.join("explore.json"))["degree"], 1);

    assert_eq!(imatch(out, &["explore", "--point", "1/x"]), 2);
    assert_eq!(imatch(out, &["explore", "--point", "3/2"]), 2);
    assert_eq!(imatch(out, &["explore", "--point", "1/2", "--side", "K"]), 2);
}

#[test]
fn lemma_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = small_config(out, "");
    assert_eq!(imatch(out, &["--config", &cfg, "verify-lemma"]), 0);
    let v = read_json(&out.join("lemma.json"));
    assert_eq!(v["status"], "clean");
    assert_eq!(v["report"]["ball_size"], 23);

    let zero = small_config(out, "ball_radius = 0");
    // Duplicate keys are a config error.
    assert_eq!(imatch(out, &["--config", &zero, "verify-lemma"]), 2);
    fs::write(out.join("zero.toml"), "ball_radius = 0\nsamples = 5\n").unwrap();
    assert_eq!(
        imatch(
            out,
            &["--config", out.join("zero.toml").to_str().unwrap(), "verify-lemma"]
        ),
        0
    );
    assert_eq!(read_json(&out.join("lemma.json"))["report"]["ball_size"], 1);

    fs::write(out.join("big.toml"), "ball_radius = 11\n").unwrap();
    assert_eq!(
        imatch(
            out,
            &["--config", out.join("big.toml").to_str().unwrap(), "verify-lemma"]
        ),
        2
    );
    assert_eq!(imatch(out, &["--alpha", "1,0,2,2", "verify-lemma"]), 2);
    assert_eq!(imatch(out, &["--config", "/nonexistent.toml", "figure"]), 2);
}

#[test]
fn dynamics_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    fs::write(
        out.join("none.toml"),
        "[dynamics]\ninstances = 0\nbridge_instances = 0\n",
    )
    .unwrap();
    assert_eq!(
        imatch(out, &["--config", out.join("none.toml").to_str().unwrap(), "dynamics"]),
        0
    );
    let v = read_json(&out.join("dynamics.json"));
    assert_eq!(v["instances"].as_array().unwrap().len(), 0);
    assert_eq!(
        fs::read_to_string(out.join("traces.csv")).unwrap(),
        "instance,k,seed,n,S_size,cost,cost_after,rewired_pairs\n"
    );

    fs::write(out.join("even.toml"), "[dynamics]\nk = [3, 4]\n").unwrap();
    assert_eq!(
        imatch(out, &["--config", out.join("even.toml").to_str().unwrap(), "dynamics"]),
        2
    );

    let cfg = small_config(out, "");
    assert_eq!(imatch(out, &["--config", &cfg, "dynamics"]), 0);
    let v = read_json(&out.join("dynamics.json"));
    assert_eq!(v["status"], "clean");
    assert_eq!(v["instances"].as_array().unwrap().len(), 12);
    assert!(v["instances"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["extracted_standard"] == true));
    assert_eq!(v["header"]["config"]["seed"], 0);
}

#[test]
fn report_requires_inputs_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(imatch(a.path(), &["report"]), 2);
    let files = [
        "explore.json",
        "lemma.json",
        "dynamics.json",
        "traces.csv",
        "final_matchings.json",
        "figure.svg",
        "report.json",
    ];
    for dir in [a.path(), b.path()] {
        let cfg = small_config(dir, "seed = 7");
        for cmd in [
            &["explore", "--point", "1/3"][..],
            &["verify-lemma"],
            &["dynamics"],
            &["figure"],
            &["report"],
        ] {
            let mut args = vec!["--config", cfg.as_str()];
            args.extend_from_slice(cmd);
            // Same relative output path for both runs, so the config echo matches.
            let code = Command::new(env!("CARGO_BIN_EXE_imatch"))
                .current_dir(dir)
                .args(["--out", "out"])
                .args(&args)
                .status()
                .unwrap()
                .code()
                .unwrap();
            assert_eq!(code, 0, "{cmd:?}");
        }
    }
    for f in files {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    let report = read_json(&a.path().join("out/report.json"));
    for section in ["explore", "lemma", "dynamics", "figure"] {
        assert!(report.get(section).is_some(), "{section}");
    }
    assert_eq!(report["status"], "clean");
    assert_eq!(report["header"]["config"]["seed"], 7);
}
