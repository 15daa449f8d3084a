use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tokgraph(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tokgraph"))
        .args(args)
        .current_dir(dir)
        .env_remove("TOKGRAPH_THREADS")
        .output()
        .expect("failed to launch tokgraph")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = tokgraph(args, dir);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], dir: &Path) -> i32 {
    tokgraph(args, dir).status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn analyze_reports_closed_form_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let stdout = ok(
        &[
            "toymodel-analyze",
            "--n",
            "10",
            "--m",
            "2",
            "--partition",
            "mae",
            "--out",
            "r.json",
        ],
        d,
    );
    assert_eq!(stdout.lines().count(), 1);
    let r = json(&d.join("r.json"));
    assert_eq!(r["command"], "toymodel-analyze");
    assert_eq!(r["config"]["c2"], 2.5);
    assert!((r["report"]["intra_weight"].as_f64().unwrap() - 0.0045).abs() < 1e-15);
    assert_eq!(
        r["report"]["closed_form"]["intra_weight"].as_f64().unwrap(),
        0.0045
    );
    assert_eq!(
        r["report"]["reconciliation"]["intra_weight"]["verdict"],
        "match"
    );
    assert_eq!(r["report"]["passed"], true);
}

#[test]
fn analyze_class_without_overlap_has_zero_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "toymodel-analyze",
            "--n",
            "10",
            "--m",
            "0",
            "--partition",
            "class",
            "--out",
            "r.json",
            "--matrix-csv",
            "a.csv",
        ],
        d,
    );
    assert_eq!(
        json(&d.join("r.json"))["report"]["alpha"].as_f64().unwrap(),
        0.0
    );
    let csv = std::fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(csv.lines().count(), 20);
    assert!(csv.lines().all(|l| l.split(',').count() == 20));
}

#[test]
fn analyze_bound_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut bounds = Vec::new();
    for p in ["class", "mae", "cross:2"] {
        ok(
            &[
                "toymodel-analyze",
                "--n",
                "20",
                "--m",
                "2",
                "--partition",
                p,
                "--out",
                "r.json",
            ],
            d,
        );
        bounds.push(
            json(&d.join("r.json"))["report"]["bound_raw"]
                .as_f64()
                .unwrap(),
        );
    }
    assert!(bounds[0] < bounds[1] && bounds[1] < bounds[2], "{bounds:?}");
}

#[test]
fn analyze_validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = ["toymodel-analyze", "--out", "r.json"];
    let run = |extra: &[&str]| code(&[&base[..], extra].concat(), d);
    assert_eq!(run(&["--n", "3", "--m", "5", "--partition", "mae"]), 2);
    assert_eq!(run(&["--n", "10", "--m", "2", "--partition", "cross:3"]), 2);
    assert_eq!(run(&["--n", "10", "--m", "2", "--partition", "nope"]), 2);
    assert_eq!(
        run(&["--n", "10", "--m", "2", "--partition", "mae", "--c1", "-1"]),
        2
    );
    assert_eq!(
        run(&[
            "--n",
            "10",
            "--m",
            "2",
            "--partition",
            "mae",
            "--frobnicate"
        ]),
        2
    );
    assert_eq!(run(&["--n", "10", "--partition", "mae"]), 2);
    assert!(!d.join("r.json").exists());
}

#[test]
fn theorem_search_report_and_size_limit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let stdout = ok(
        &[
            "toymodel-theorem1",
            "--n",
            "3",
            "--c1",
            "1",
            "--c2",
            "1",
            "--out",
            "t.json",
        ],
        d,
    );
    assert!(stdout.starts_with("203 partitions"));
    let r = json(&d.join("t.json"));
    assert_eq!(r["result"]["partitions_enumerated"], 203);
    assert!(r["result"]["label_attains_minimum"].is_boolean());
    assert!(!r["result"]["minimizers"].as_array().unwrap().is_empty());
    assert_eq!(r["config"]["m"], 0);

    ok(
        &[
            "toymodel-theorem1",
            "--n",
            "3",
            "--skip-leading",
            "2",
            "--out",
            "t.json",
        ],
        d,
    );
    assert_eq!(
        json(&d.join("t.json"))["result"]["label_attains_minimum"],
        true
    );

    assert_eq!(
        code(&["toymodel-theorem1", "--n", "6", "--out", "t.json"], d),
        2
    );
    assert_eq!(
        code(
            &[
                "toymodel-theorem1",
                "--classes",
                "4",
                "--n",
                "3",
                "--out",
                "t.json"
            ],
            d
        ),
        2
    );
}

#[test]
fn train_apply_score_on_separable_blobs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "synth-generate",
            "--classes",
            "3",
            "--per-class",
            "100",
            "--dim",
            "8",
            "--spread",
            "50",
            "--sigma",
            "1",
            "--seed",
            "4",
            "--out",
            "p.pmim",
            "--labels-out",
            "l.lbls",
        ],
        d,
    );
    ok(
        &[
            "tokenizer-train",
            "--patches",
            "p.pmim",
            "--k",
            "3",
            "--seed",
            "2",
            "--epochs",
            "10",
            "--out",
            "cb.cbok",
            "--report",
            "train.json",
        ],
        d,
    );
    let train = json(&d.join("train.json"));
    assert_eq!(train["config"]["seed"], 2);
    assert_eq!(train["epoch_inertia"].as_array().unwrap().len(), 10);
    assert!(train["initial_inertia"].is_f64());
    ok(
        &[
            "tokenizer-apply",
            "--patches",
            "p.pmim",
            "--codebook",
            "cb.cbok",
            "--out",
            "t.toks",
        ],
        d,
    );
    ok(
        &[
            "tcas-compute",
            "--tokens",
            "t.toks",
            "--labels",
            "l.lbls",
            "--classes",
            "3",
            "--out",
            "s.json",
            "--cooccurrence-csv",
            "co.csv",
        ],
        d,
    );
    let score = json(&d.join("s.json"));
    assert!(score["score"]["value"].as_f64().unwrap() < 0.05);
    assert_eq!(score["config"]["codebook_size"], 3);
    let csv = std::fs::read_to_string(d.join("co.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "0,1,2");
}

#[test]
fn commands_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = [
        "synth-generate",
        "--classes",
        "2",
        "--per-class",
        "50",
        "--dim",
        "4",
        "--seed",
        "1",
    ];
    ok(
        &[&synth[..], &["--out", "a.pmim", "--labels-out", "a.lbls"]].concat(),
        d,
    );
    ok(
        &[&synth[..], &["--out", "b.pmim", "--labels-out", "b.lbls"]].concat(),
        d,
    );
    assert_eq!(
        std::fs::read(d.join("a.pmim")).unwrap(),
        std::fs::read(d.join("b.pmim")).unwrap()
    );

    let train = [
        "tokenizer-train",
        "--patches",
        "a.pmim",
        "--k",
        "4",
        "--seed",
        "7",
        "--epochs",
        "5",
    ];
    ok(&[&train[..], &["--out", "a.cbok"]].concat(), d);
    let out = Command::new(env!("CARGO_BIN_EXE_tokgraph"))
        .args([&train[..], &["--out", "b.cbok"]].concat())
        .current_dir(d)
        .env("TOKGRAPH_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(d.join("a.cbok")).unwrap(),
        std::fs::read(d.join("b.cbok")).unwrap()
    );
}

#[test]
fn apply_with_mismatched_dim_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "synth-generate",
            "--classes",
            "2",
            "--per-class",
            "10",
            "--dim",
            "4",
            "--out",
            "a.pmim",
            "--labels-out",
            "a.lbls",
        ],
        d,
    );
    ok(
        &[
            "synth-generate",
            "--classes",
            "2",
            "--per-class",
            "10",
            "--dim",
            "5",
            "--out",
            "b.pmim",
            "--labels-out",
            "b.lbls",
        ],
        d,
    );
    ok(
        &[
            "tokenizer-train",
            "--patches",
            "a.pmim",
            "--k",
            "2",
            "--epochs",
            "1",
            "--out",
            "a.cbok",
        ],
        d,
    );
    assert_eq!(
        code(
            &[
                "tokenizer-apply",
                "--patches",
                "b.pmim",
                "--codebook",
                "a.cbok",
                "--out",
                "t.toks"
            ],
            d
        ),
        2
    );
    assert_eq!(
        code(
            &[
                "tokenizer-train",
                "--patches",
                "a.pmim",
                "--k",
                "21",
                "--out",
                "x.cbok"
            ],
            d
        ),
        2
    );
}

#[test]
fn tcas_identity_assignment_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ids: Vec<u32> = (0..40).map(|i| i % 4).collect();
    tokgraph::dataio::write_labels(&d.join("l.lbls"), &ids).unwrap();
    tokgraph::dataio::write_tokens(
        &d.join("t.toks"),
        &tokgraph::dataio::TokenFile { k: 4, tokens: ids },
    )
    .unwrap();
    let stdout = ok(
        &[
            "tcas-compute",
            "--tokens",
            "t.toks",
            "--labels",
            "l.lbls",
            "--classes",
            "4",
            "--out",
            "s.json",
        ],
        d,
    );
    assert!(stdout.starts_with("tcas=0.000000"));
    assert_eq!(
        json(&d.join("s.json"))["score"]["value"].as_f64().unwrap(),
        0.0
    );

    assert_eq!(
        code(
            &[
                "tcas-compute",
                "--tokens",
                "t.toks",
                "--labels",
                "l.lbls",
                "--classes",
                "3",
                "--out",
                "s.json"
            ],
            d
        ),
        2
    );
    tokgraph::dataio::write_labels(&d.join("short.lbls"), &[0, 1]).unwrap();
    assert_eq!(
        code(
            &[
                "tcas-compute",
                "--tokens",
                "t.toks",
                "--labels",
                "short.lbls",
                "--classes",
                "4",
                "--out",
                "s.json"
            ],
            d
        ),
        2
    );
}

#[test]
fn io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(
            &[
                "tokenizer-apply",
                "--patches",
                "missing.pmim",
                "--codebook",
                "x.cbok",
                "--out",
                "t.toks"
            ],
            d
        ),
        3
    );
    assert_eq!(
        code(
            &[
                "toymodel-analyze",
                "--n",
                "4",
                "--m",
                "0",
                "--partition",
                "mae",
                "--out",
                "no/such/dir/r.json"
            ],
            d
        ),
        3
    );
    std::fs::write(d.join("junk.pmim"), b"PMIM\x01\x00").unwrap();
    assert_eq!(
        code(
            &[
                "tokenizer-train",
                "--patches",
                "junk.pmim",
                "--k",
                "1",
                "--out",
                "x.cbok"
            ],
            d
        ),
        3
    );
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tokgraph"))
        .args([
            "toymodel-analyze",
            "--n",
            "4",
            "--m",
            "0",
            "--partition",
            "mae",
            "--out",
            "r.json",
        ])
        .current_dir(dir.path())
        .env("TOKGRAPH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn image_to_patches() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut bytes = b"P6\n8 4\n255\n".to_vec();
    bytes.extend((0..8 * 4 * 3).map(|i| i as u8));
    std::fs::write(d.join("img.ppm"), bytes).unwrap();
    let stdout = ok(
        &[
            "image-patches",
            "--image",
            "img.ppm",
            "--patch-size",
            "4",
            "--out",
            "p.pmim",
        ],
        d,
    );
    assert!(stdout.contains("2 patches of dim 48"));
    assert_eq!(
        code(
            &[
                "image-patches",
                "--image",
                "img.ppm",
                "--patch-size",
                "3",
                "--out",
                "p.pmim"
            ],
            d
        ),
        2
    );
    std::fs::write(d.join("ascii.pgm"), b"P2\n1 1\n255\n0\n").unwrap();
    assert_eq!(
        code(
            &[
                "image-patches",
                "--image",
                "ascii.pgm",
                "--patch-size",
                "1",
                "--out",
                "p.pmim"
            ],
            d
        ),
        3
    );
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["--help"], dir.path()), 0);
    assert_eq!(code(&[], dir.path()), 2);
}
