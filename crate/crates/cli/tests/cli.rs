//! End-to-end runs of the `qmcover` binary against a temporary registry.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qmcover(reg: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmcover"))
        .arg("--registry")
        .arg(reg)
        .args(args)
        .env_remove("QMCOVER_REGISTRY")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(reg: &Path, args: &[&str]) -> String {
    let out = qmcover(reg, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    stdout(&out)
}

#[test]
fn seed_verify_passes() {
    let reg = TempDir::new().unwrap();
    for name in ["kr", "ok", "golay"] {
        let text = ok(reg.path(), &["seed", "verify", name]);
        assert!(text.starts_with("PASS"), "{text}");
    }
    let log = ok(reg.path(), &["log", "kr"]);
    assert!(log.contains("\"verdict\":\"PASS\""));
}

#[test]
fn tokens_skip_identity_prefix() {
    let reg = TempDir::new().unwrap();
    ok(reg.path(), &["seed", "add", "kr"]);
    let text = ok(reg.path(), &["export", "kr", "--format", "tokens"]);
    assert!(text.starts_with("1B6,193,1CC"), "{text}");
    assert_eq!(text.trim().split(',').count(), 51 - 10);
}

#[test]
fn export_import_round_trip() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(a.path(), &["seed", "add", "kr"]);
    let doc = a.path().join("kr.json");
    ok(a.path(), &["export", "kr", "--format", "json", "--out", doc.to_str().unwrap()]);
    ok(b.path(), &["import", "kr", "--from", doc.to_str().unwrap()]);
    for file in ["meta.json", "matrix.hex", "partitions/pkr.txt", "partitions/pkr-star.txt"] {
        let x = fs::read_to_string(a.path().join("kr").join(file)).unwrap();
        let y = fs::read_to_string(b.path().join("kr").join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn hex_import_with_check() {
    let reg = TempDir::new().unwrap();
    ok(reg.path(), &["seed", "add", "kr"]);
    let hex = reg.path().join("kr.hex");
    ok(reg.path(), &["export", "kr", "--out", hex.to_str().unwrap()]);
    ok(reg.path(), &["import", "copy", "--matrix", hex.to_str().unwrap(), "--R", "2", "--check"]);
    let out = qmcover(reg.path(), &["import", "bad", "--matrix", hex.to_str().unwrap(), "--R", "1", "--check"]);
    assert!(!out.status.success());
    assert!(!reg.path().join("bad").join("meta.json").exists());
}

#[test]
fn unknown_record_is_an_error() {
    let reg = TempDir::new().unwrap();
    let out = qmcover(reg.path(), &["export", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown record"));
}

#[test]
fn held_lock_blocks_writers() {
    let reg = TempDir::new().unwrap();
    fs::write(reg.path().join(".lock"), "0").unwrap();
    let out = qmcover(reg.path(), &["seed", "add", "kr"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("locked"));
    fs::remove_file(reg.path().join(".lock")).unwrap();
    ok(reg.path(), &["seed", "add", "kr"]);
    assert!(!reg.path().join(".lock").exists());
}

#[test]
fn construct_and_verify_r18() {
    let reg = TempDir::new().unwrap();
    ok(reg.path(), &["construct", "--variant", "QM4_2", "--start", "kr", "--partition", "pkr-star", "--m", "4", "--out", "r18"]);
    let text = ok(reg.path(), &["verify", "r18", "--mode", "exhaustive"]);
    assert!(text.starts_with("PASS"), "{text}");
    let text = ok(reg.path(), &["verify", "r18", "--mode", "sample", "--trials", "20000"]);
    assert!(text.starts_with("PASS"), "{text}");
    let names = ok(reg.path(), &["list"]);
    assert_eq!(names.lines().collect::<Vec<_>>(), ["kr", "r18"]);
}

#[test]
fn family_chain_verifies() {
    let reg = TempDir::new().unwrap();
    let text = ok(reg.path(), &["family", "--R", "2", "--rmax", "24", "--construct", "--verify-upto", "24"]);
    let steps: Vec<&str> = text.lines().filter(|l| l.starts_with('r')).collect();
    assert_eq!(steps.len(), 4, "{text}");
    assert!(steps.iter().all(|l| l.contains("PASS")), "{text}");
    assert!(steps[0].contains("n=831") && steps[1].contains("n=1663"));
}

#[test]
fn search_attaches_partition() {
    let reg = TempDir::new().unwrap();
    ok(reg.path(), &["seed", "add", "kr"]);
    let text = ok(reg.path(), &["search-partition", "--in", "kr", "--R", "2", "--max-subsets", "12", "--attach", "kr", "--save-as", "found"]);
    assert!(text.starts_with("partition R=2 ell=0 n=51"), "{text}");
    assert!(reg.path().join("kr/partitions/found.txt").is_file());
    let verified = ok(reg.path(), &["seed", "verify", "kr"]);
    assert!(verified.contains("found (") && verified.starts_with("PASS"), "{verified}");
}

#[test]
fn tables_r3_rows() {
    let reg = TempDir::new().unwrap();
    let text = ok(reg.path(), &["tables", "--R", "3", "--rmin", "21", "--rmax", "26"]);
    let row21 = text.lines().find(|l| l.trim_start().starts_with("21 ")).unwrap();
    assert!(row21.contains("303") && row21.contains("QM4_3"), "{row21}");
    let csv = ok(reg.path(), &["tables", "--R", "2", "--rmin", "18", "--rmax", "18", "--format", "csv"]);
    assert!(csv.lines().nth(1).unwrap().starts_with("18,2,831,"), "{csv}");
}

#[test]
fn bound_and_delta() {
    let reg = TempDir::new().unwrap();
    assert_eq!(ok(reg.path(), &["bound", "fam4_new", "40"]).trim(), "2942");
    assert_eq!(ok(reg.path(), &["delta", "44", "3"]).trim(), "128");
    assert!(!qmcover(reg.path(), &["bound", "nonsense", "40"]).status.success());
}
