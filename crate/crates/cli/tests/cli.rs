use std::path::PathBuf;
use std::process::{Command, Output};

fn circlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circlab"))
        .args(args)
        .env_remove("CIRCLAB_DEPTH_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("circlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn seq_listing() {
    let o = circlab(&["seq", "--spec", "linear:1", "--kind", "d", "--count", "7"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1,2,4,6,12,18,24\n");
    let o = circlab(&["seq", "--spec", "pow:2", "--kind", "n", "--count", "4"]);
    assert_eq!(stdout(&o), "1,2,5,12\n");
}

#[test]
fn lift_of_singleton() {
    let o = circlab(&["lift", "--spec", "linear:1", "--set", "fin:{3}"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "[4,6]\n");
}

#[test]
fn scan_of_one_sixth() {
    let o = circlab(&["scan", "--spec", "linear:1", "--x", "rat:1/6", "--eps", "1/10", "--horizons", "100", "--format", "table"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("3/100,3/100"), "{}", stdout(&o));
    let o = circlab(&["scan", "--spec", "linear:1", "--x", "rat:1/6", "--eps", "1/10", "--horizons", "100"]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let est = &report["result"]["scan"]["estimates"][0];
    assert_eq!(est["lo"], "3/100");
    assert_eq!(est["hi"], "3/100");
    assert_eq!(report["config"]["spec"], "linear:1");
    assert_eq!(report["tool"], "circlab");
}

#[test]
fn exit_codes() {
    assert_eq!(circlab(&["seq", "--spec", "bogus"]).status.code(), Some(2));
    assert_eq!(circlab(&["seq", "--spec", "const:1"]).status.code(), Some(3));
    let o = circlab(&["scan", "--spec", "pow:2", "--x", "zero", "--eps", "3/4", "--horizons", "10"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
    let o = circlab(&["density", "--spec", "pow:2", "--set", "evens@100", "--horizons", "50,200"]);
    assert_eq!(o.status.code(), Some(4));
    let o = circlab(&["witness", "--kind", "arbault", "--spec", "linear:1", "--keep-degenerate"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(circlab(&["witness", "--kind", "arbault", "--spec", "linear:1"]).status.success());
}

#[test]
fn config_replay_is_byte_identical() {
    let cfg = scratch("scan.toml");
    let args = [
        "scan", "--spec", "pow:2", "--x", "ones-on:all", "--eps", "1/8", "--horizons", "100,400,1000", "--depth", "2",
    ];
    let mut first = vec!["--save-config", cfg.to_str().unwrap()];
    first.extend(args);
    let a = circlab(&first);
    assert!(a.status.success());
    let b = circlab(&["--config", cfg.to_str().unwrap()]);
    assert!(b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(std::fs::read_to_string(&cfg).unwrap().contains("command = \"scan\""));
}

#[test]
fn depth_cap_from_environment() {
    let run = |cap: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_circlab"));
        c.args(["scan", "--spec", "pow:2", "--x", "ones-on:all", "--eps", "1/8", "--horizons", "200"]);
        match cap {
            Some(v) => c.env("CIRCLAB_DEPTH_CAP", v),
            None => c.env_remove("CIRCLAB_DEPTH_CAP"),
        };
        serde_json::from_str::<serde_json::Value>(&String::from_utf8(c.output().unwrap().stdout).unwrap()).unwrap()
    };
    assert_eq!(run(Some("0"))["config"]["depth_cap"], 0);
    assert_eq!(run(None)["config"]["depth_cap"], 64);
    assert!(!run(Some("0"))["result"]["scan"]["undecided"].as_array().unwrap().is_empty());
}

#[test]
fn witness_csv_table() {
    let csv = scratch("nonmember.csv");
    let o = circlab(&[
        "--csv-out", csv.to_str().unwrap(), "witness", "--kind", "nonmember", "--spec", "pow:2", "--x", "ones-on:all",
        "--m0", "10", "--horizon", "2000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("index,k,r,depth,lo,hi,verdict\n"));
    assert!(table.lines().count() > 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["result"]["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn verify_and_classify() {
    let o = circlab(&["verify", "tail-bound", "--format", "table"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("tail-bound: pass"));
    let o = circlab(&["classify", "--spec", "pow:2", "--property", "snd", "--horizon", "30", "--alpha", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["verdict"]["kind"], "holds-at-horizon");
    let o = circlab(&["factor", "--spec", "linear:1", "--u", "36"]);
    assert_eq!(stdout(&o), "36 = a_2 * 6\n");
}
