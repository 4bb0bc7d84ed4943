use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use symcum::cli_io::{ingest_csv, load_tensor};
use symcum::{cumulants_upto, moment};

fn symcum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symcum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = symcum(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn generate(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    let p = path(dir, name);
    let mut args = vec!["generate", "--output", &p];
    args.extend_from_slice(extra);
    ok(&args);
    p
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = [
        "--dist", "gaussian", "--cov", "random", "--n", "4", "--t", "200", "--seed", "9",
    ];
    let a = generate(&dir, "a.csv", &args);
    let b = generate(&dir, "b.csv", &args);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = generate(&dir, "c.csv", &["--n", "4", "--t", "200", "--seed", "10"]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let x = ingest_csv(Path::new(&a)).unwrap();
    assert_eq!((x.t(), x.n()), (200, 4));
}

#[test]
fn tensor_output_is_bit_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let input = generate(
        &dir,
        "x.csv",
        &["--dist", "exponential", "--n", "5", "--t", "300"],
    );
    for (cmd, workers, mode) in [
        ("moment", "1", "samples"),
        ("cumulants", "3", "samples"),
        ("cumulants", "2", "blocks"),
    ] {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let o = path(&dir, &format!("{cmd}{mode}{k}.json"));
                ok(&[
                    cmd,
                    "--input",
                    &input,
                    "--order",
                    "4",
                    "--workers",
                    workers,
                    "--parallel",
                    mode,
                    "--output",
                    &o,
                ]);
                fs::read(o).unwrap()
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{cmd} {mode}");
    }
}

#[test]
fn low_order_cumulants_equal_moments_on_centred_input() {
    let dir = TempDir::new().unwrap();
    // rows paired with their negation give column means of exactly zero
    let mut text = String::from("a,b,c\n");
    for k in 0..25 {
        let r = [
            0.3 * k as f64 - 2.0,
            (k as f64).sin(),
            1.0 / (1.0 + k as f64),
        ];
        text += &format!("{},{},{}\n", r[0], r[1], r[2]);
        text += &format!("{},{},{}\n", -r[0], -r[1], -r[2]);
    }
    let input = path(&dir, "centred.csv");
    fs::write(&input, text).unwrap();
    for order in ["2", "3"] {
        let a = ok(&[
            "moment",
            "--input",
            &input,
            "--order",
            order,
            "--block-size",
            "2",
        ])
        .stdout;
        let b = ok(&[
            "cumulants",
            "--input",
            &input,
            "--order",
            order,
            "--block-size",
            "2",
        ])
        .stdout;
        assert_eq!(a, b, "order {order}");
    }
}

#[test]
fn cli_results_match_the_library() {
    let dir = TempDir::new().unwrap();
    let input = generate(
        &dir,
        "x.csv",
        &["--dist", "uniform", "--n", "4", "--t", "150", "--seed", "3"],
    );
    let x = ingest_csv(Path::new(&input)).unwrap();
    let m = path(&dir, "m.json");
    ok(&[
        "moment",
        "--input",
        &input,
        "--order",
        "3",
        "--block-size",
        "3",
        "--output",
        &m,
    ]);
    assert_eq!(
        load_tensor(Path::new(&m)).unwrap(),
        moment(&x, 3, 3).unwrap()
    );
    let c = path(&dir, "c.json");
    ok(&[
        "cumulants",
        "--input",
        &input,
        "--order",
        "4",
        "--block-size",
        "3",
        "--output",
        &c,
    ]);
    let set = cumulants_upto(&x, 4, 3).unwrap();
    assert_eq!(&load_tensor(Path::new(&c)).unwrap(), set.tensor(4).unwrap());
    let dense = path(&dir, "d.json");
    ok(&[
        "cumulants",
        "--input",
        &input,
        "--order",
        "4",
        "--engine",
        "naive4",
        "--output",
        &dense,
    ]);
    let d = load_tensor(Path::new(&dense)).unwrap();
    let block = set.tensor(4).unwrap().to_dense().unwrap();
    let naive = d.to_dense().unwrap();
    for (a, b) in block.data().iter().zip(naive.data()) {
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-2));
    }
}

#[test]
fn json_document_uses_one_based_indices() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "x.csv", &["--n", "3", "--t", "20"]);
    let out = ok(&[
        "moment",
        "--input",
        &input,
        "--order",
        "2",
        "--block-size",
        "2",
    ]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["n"], 3);
    assert_eq!(doc["m"], 2);
    assert_eq!(doc["b"], 2);
    let blocks = doc["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 3);
    assert_eq!(blocks[0]["j"], serde_json::json!([1, 1]));
    assert_eq!(blocks[2]["j"], serde_json::json!([2, 2]));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "1,2\n3\n").unwrap();
    let out = symcum(&["moment", "--input", &bad, "--order", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");

    let missing = path(&dir, "missing.csv");
    assert_eq!(
        symcum(&["moment", "--input", &missing, "--order", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(symcum(&["moment", "--bogus"]).status.code(), Some(1));
    assert_eq!(symcum(&["--help"]).status.code(), Some(0));

    let wide = generate(&dir, "wide.csv", &["--n", "100", "--t", "3"]);
    let guard = symcum(&[
        "cumulants",
        "--input",
        &wide,
        "--order",
        "5",
        "--engine",
        "naive-general",
    ]);
    assert_eq!(
        guard.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&guard.stderr)
    );

    let x = generate(&dir, "x.csv", &["--n", "2", "--t", "10"]);
    let bad_order = symcum(&["cumulants", "--input", &x, "--order", "13"]);
    assert_eq!(bad_order.status.code(), Some(1));
}

#[test]
fn bench_report_echoes_config_and_phases() {
    let dir = TempDir::new().unwrap();
    let report = path(&dir, "bench.json");
    let out = ok(&[
        "bench", "--order", "4", "--n-list", "6", "--b-list", "1,2", "--t", "300", "--reps", "2",
        "--output", &report,
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("naive4"));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["config"]["order"], 4);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row["reps"].as_u64().unwrap() >= 1);
        if row["engine"] == "block" {
            let phases = row["phases"].as_object().unwrap();
            for key in ["center", "lower", "moment", "correction"] {
                assert!(phases.contains_key(key), "missing phase {key}");
            }
        }
    }
}

#[test]
fn selftest_passes() {
    let out = ok(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 5);
    assert!(!text.contains("FAIL"));
}
