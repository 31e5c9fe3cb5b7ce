use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn peqlib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peqlib")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn build_into(dir: &Path, args: &[&str]) -> PathBuf {
    let mut full = vec!["--out", dir.to_str().unwrap(), "build"];
    full.extend_from_slice(args);
    let o = peqlib(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join(format!("{}.json", args[0]))
}

fn edit_json(src: &Path, dst: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(src).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(dst, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn builtins_validate() {
    let o = peqlib(&["validate", "gm", "s3", "swap", "gm-s3", "s9"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&peqlib(&["validate"])), 2);
    assert_eq!(code(&peqlib(&["validate", "/definitely/not/here.json"])), 2);
    assert_eq!(code(&peqlib(&["build", "section"])), 2);
    assert_eq!(code(&peqlib(&["frobnicate"])), 2);
}

#[test]
fn unparsable_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("junk.json");
    std::fs::write(&p, "{\"kind\": \"groupoid\", \"g0\": 3}").unwrap();
    assert_eq!(code(&peqlib(&["validate", p.to_str().unwrap()])), 2);
}

#[test]
fn broken_grading_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let germ = build_into(dir.path(), &["germ", "--action", "s3-on-sigma"]);
    let bad = dir.path().join("bad.json");
    edit_json(&germ, &bad, |v| v["slices"]["e"] = serde_json::json!(["[1,c]"]));
    let o = peqlib(&["validate", germ.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("FAIL") && out.contains("Gr1"), "{out}");
}

#[test]
fn corrupted_multiplication_fails_report() {
    let dir = tempfile::tempdir().unwrap();
    let gm = dir.path().join("gm.json");
    peqlib(&["--out", dir.path().to_str().unwrap(), "example", "section9"]);
    let bad = dir.path().join("bad-gm.json");
    edit_json(&gm, &bad, |v| {
        for row in v["mult"].as_array_mut().unwrap() {
            if row[0] == "[g,c]" && row[1] == "[g,c]" || row[0] == "g-" && row[1] == "g-" {
                row[2] = row[0].clone();
            }
        }
    });
    assert_ne!(std::fs::read(&gm).unwrap(), std::fs::read(&bad).unwrap());
    let o = peqlib(&["report", "cstar", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn built_fixtures_revalidate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut files = vec![
        build_into(d, &["germ", "--action", "s3-on-sigma"]),
        build_into(d, &["compose", "--left", "swap", "--right", "swap"]),
        build_into(d, &["dual", "--peq", "l_g"]),
        build_into(d, &["fell", "--grading", "gm-s3"]),
    ];
    files.push(build_into(d, &["section", "--bundle", files[3].to_str().unwrap()]));
    let args: Vec<&str> = std::iter::once("validate").chain(files.iter().map(|p| p.to_str().unwrap())).collect();
    let o = peqlib(&args);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn swap_composed_with_itself_is_global() {
    let o = peqlib(&["--format", "json", "build", "compose", "--left", "swap", "--right", "swap"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"global\": true") || stdout(&o).contains("\"global\":true"));
}

#[test]
fn examples_revalidate() {
    for name in ["section9", "germ-sigma", "z4", "cech3", "pair"] {
        let dir = tempfile::tempdir().unwrap();
        let o = peqlib(&["--out", dir.path().to_str().unwrap(), "example", name]);
        assert_eq!(code(&o), 0, "{name}");
        let files: Vec<String> =
            std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path().to_string_lossy().into_owned()).collect();
        assert!(!files.is_empty(), "{name} wrote nothing");
        let mut args = vec!["validate"];
        args.extend(files.iter().map(String::as_str));
        let v = peqlib(&args);
        assert_eq!(code(&v), 0, "{name}: {}", stdout(&v));
    }
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(code(&peqlib(&["--out", d.path().to_str().unwrap(), "example", "section9"])), 0);
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
    let r1 = peqlib(&["--format", "json", "--seed", "7", "report", "action"]);
    let r2 = peqlib(&["--format", "json", "--seed", "7", "report", "action"]);
    assert_eq!(r1.stdout, r2.stdout);
}

#[test]
fn json_report_is_machine_readable() {
    let o = peqlib(&["--format", "json", "validate", "gm", "p2"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["fixtures"].as_array().unwrap().len(), 2);
    assert_eq!(v["fixtures"][1]["flags"]["proper"], true);
}
