use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pedeval_synth::demo::EXPECTED;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo")
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        if e.file_type().unwrap().is_dir() {
            if e.file_name() != "out" {
                copy_dir(&e.path(), &to.join(e.file_name()));
            }
        } else {
            std::fs::copy(e.path(), to.join(e.file_name())).unwrap();
        }
    }
}

fn demo_copy() -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("demo");
    copy_dir(&fixture(), &dir);
    (tmp, dir)
}

fn pedeval(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pedeval"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn table_count(table: &str, name: &str) -> usize {
    table
        .lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(name)).then(|| it.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no `{name}` row in\n{table}"))
}

#[test]
fn categorize_demo_matches_constructed_partition() {
    let (_tmp, dir) = demo_copy();
    let out = pedeval(&["categorize"], &dir.join("config.json"));
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    let (counts, ignored) = EXPECTED;
    for (name, want) in ["F", "B", "E", "C", "A"].into_iter().zip(counts) {
        assert_eq!(table_count(&table, name), want, "{name}");
    }
    assert_eq!(table_count(&table, "ignored"), ignored);
    assert!(dir.join("out/gt_categories.json").exists());
}

#[test]
fn metric_flag_matches_report() {
    let (_tmp, dir) = demo_copy();
    let cfg = dir.join("config.json");
    let out = pedeval(&["evaluate", "--metric", "flamr-ghost", "--category", "F"], &cfg);
    assert!(out.status.success(), "{}", stderr(&out));
    let printed: f64 = stdout(&out).trim().parse().unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["flamr_ghost"]["F"].as_f64().unwrap(), printed);

    let out = pedeval(&["evaluate", "--metric", "c-star"], &cfg);
    let c: f64 = stdout(&out).trim().parse().unwrap();
    assert_eq!(report["operating_point"]["c_star_F"].as_f64().unwrap(), c);
}

#[test]
fn evaluate_writes_all_outputs() {
    let (_tmp, dir) = demo_copy();
    let out = pedeval(&["evaluate"], &dir.join("config.json"));
    assert!(out.status.success(), "{}", stderr(&out));
    for f in ["report.json", "gt_categories.json", "fp_categories.json", "curve_fppi.csv", "curve_gdpi.csv"] {
        assert!(dir.join("out").join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.join("out/curve_fppi.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "c,mr_F,mr_B,mr_E,mr_C,mr_A,mr_reasonable,fppi");
}

#[test]
fn missing_mask_names_the_frame() {
    let (_tmp, dir) = demo_copy();
    std::fs::remove_file(dir.join("masks/demo_2_instance.pgm")).unwrap();
    let out = pedeval(&["evaluate"], &dir.join("config.json"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("demo_2"), "{}", stderr(&out));

    let out = pedeval(&["validate"], &dir.join("config.json"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("demo_2"));
}

#[test]
fn validate_accepts_demo() {
    let (_tmp, dir) = demo_copy();
    let out = pedeval(&["validate"], &dir.join("config.json"));
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("0 errors"));
}

#[test]
fn config_errors_exit_two() {
    let (_tmp, dir) = demo_copy();
    let cfg = dir.join("config.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();

    v["thresholds"] = serde_json::json!({ "lambda_phi": 1.5 });
    std::fs::write(&cfg, v.to_string()).unwrap();
    assert_eq!(pedeval(&["evaluate"], &cfg).status.code(), Some(2));

    v["thresholds"] = serde_json::json!({ "no_such_threshold": 1 });
    std::fs::write(&cfg, v.to_string()).unwrap();
    assert_eq!(pedeval(&["categorize"], &cfg).status.code(), Some(2));

    v.as_object_mut().unwrap().remove("thresholds");
    v["labels"] = serde_json::json!({ "occluders": ["flying saucer"] });
    std::fs::write(&cfg, v.to_string()).unwrap();
    assert_eq!(pedeval(&["evaluate"], &cfg).status.code(), Some(2));

    assert_eq!(pedeval(&["evaluate"], &dir.join("absent.json")).status.code(), Some(2));
}

#[test]
fn empty_dataset_gives_zero_table() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("gt.json"), "[]").unwrap();
    std::fs::create_dir(d.join("masks")).unwrap();
    std::fs::write(d.join("config.json"), r#"{"ground_truth":"gt.json","masks":"masks"}"#).unwrap();
    let out = pedeval(&["categorize"], &d.join("config.json"));
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    for name in ["F", "B", "E", "C", "A", "ignored", "total"] {
        assert_eq!(table_count(&table, name), 0);
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let (_tmp, dir) = demo_copy();
    let cfg = dir.join("config.json");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_pedeval"))
            .env("PEDEVAL_THREADS", threads)
            .args(["evaluate", "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        (out.status.code(), std::fs::read(dir.join("out/report.json")).ok())
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.0, Some(0));
    assert_eq!(one, four);
    assert_eq!(run("lots").0, Some(2));
}

#[test]
fn synth_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("s");
    let out = Command::new(env!("CARGO_BIN_EXE_pedeval"))
        .args(["synth", "--frames", "3", "--seed", "9", "--width", "96", "--height", "64", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v = pedeval(&["validate"], &out_dir.join("config.json"));
    assert!(v.status.success(), "{}", stderr(&v));
    assert!(stdout(&v).starts_with("3 frames"));
}
