use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn pdcris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdcris")).args(args).env_remove("PDCRIS_OUT_DIR").output().unwrap()
}

fn job(name: &str) -> String {
    dir().join("jobs").join(format!("{name}.json")).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("pdcris-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&p);
    std::fs::create_dir_all(&p).unwrap();
    p
}

/// (job, exit code); outputs are compared with tests/golden/<job>.out, rewritten when
/// PDCRIS_BLESS is set.
const GOLDEN: &[(&str, i32)] = &[
    ("a1_compare", 0),
    ("a1_crystal", 0),
    ("a1_derham_f2", 0),
    ("a1_twisted", 3),
    ("a2_cech", 0),
    ("bo_base_change", 1),
    ("bo_envelope", 0),
    ("bo_torsion", 0),
];

#[test]
fn golden_files_regenerate() {
    let bless = std::env::var_os("PDCRIS_BLESS").is_some();
    for &(name, code) in GOLDEN {
        let o = pdcris(&["run", "--job", &job(name)]);
        assert_eq!(o.status.code(), Some(code), "{name}: {}", stderr(&o));
        let path = dir().join("golden").join(format!("{name}.out"));
        if bless {
            std::fs::write(&path, &o.stdout).unwrap();
        }
        let want = std::fs::read(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert!(o.stdout == want, "{name}: output differs from {}", path.display());
    }
}

#[test]
fn output_is_identical_across_thread_counts() {
    for name in ["a1_compare", "bo_torsion", "a2_cech"] {
        let one = pdcris(&["--threads", "1", "run", "--job", &job(name)]);
        let many = pdcris(&["--threads", "4", "run", "--job", &job(name)]);
        assert!(one.status.success());
        assert_eq!(one.stdout, many.stdout, "{name}");
    }
}

#[test]
fn golden_summaries() {
    let o = pdcris(&["compare", "--job", &job("a1_compare")]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(s.contains("\"status\": \"pass\""));
    assert!(stderr(&o).contains("time:"));
    let o = pdcris(&["torsion", "--job", &job("bo_torsion")]);
    assert!(String::from_utf8(o.stdout.clone()).unwrap().contains("g(y1,2)*g(y3,2) + 2*g(y2,4)"));
}

#[test]
fn input_errors_exit_2() {
    let o = pdcris(&["envelope", "--job", &job("bad_generator")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("\"x^\": parse error at position 2"), "{}", stderr(&o));

    let o = pdcris(&["compare", "--job", &job("unknown_key")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field `levels`"), "{}", stderr(&o));

    let o = pdcris(&["torsion", "--job", &job("a1_compare")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("job is for compare, not torsion"));

    let o = pdcris(&["run", "--job", "/nonexistent/job.json"]);
    assert_eq!(o.status.code(), Some(2));

    let tmp = scratch("errors");
    let bad = [
        r#"{"prime": 4, "precision": 2, "variables": ["x"], "truncation": 4}"#,
        r#"{"prime": 2, "precision": 2, "nilpotency": 3, "variables": ["x"], "truncation": 4}"#,
        r#"{"prime": 2, "precision": 2, "variables": ["x", "x"], "truncation": 4}"#,
        r#"{"prime": 2, "precision": 2, "variables": ["x"], "truncation": 1}"#,
        r#"{"prime": 2, "precision": 2, "variables": ["x"], "truncation": 4, "crystal": {"rank": 1, "connection": [[["x"]]]}}"#,
        r#"{"prime": 2, "precision": 2, "variables": ["x"], "truncation": 4, "crystal": {"rank": 2, "connection": [[["0"]]]}}"#,
    ];
    for (i, text) in bad.iter().enumerate() {
        let p = tmp.join(format!("bad{i}.json"));
        std::fs::write(&p, text).unwrap();
        let o = pdcris(&["derham", "--job", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
    }
}

#[test]
fn overrides_and_failures() {
    // the BO class lives in weight 8, so d = 4 finds nothing
    let o = pdcris(&["torsion", "--job", &job("bo_torsion"), "--degree", "4"]);
    assert_eq!(o.status.code(), Some(1));
    let s = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(s.contains("\"degree\": 4") && s.contains("\"degree\": 6"));
    let o = pdcris(&["torsion", "--job", &job("bo_torsion"), "--degree", "4", "--stability-margin", "6"]);
    assert!(String::from_utf8(o.stdout.clone()).unwrap().contains("\"degree\": 10"));
    let o = pdcris(&["cech", "--job", &job("a2_cech"), "--level", "1"]);
    assert!(o.status.success());
}

#[test]
fn output_destinations() {
    let tmp = scratch("out");
    let out = tmp.join("r.json");
    let o = pdcris(&["compare", "--job", &job("a1_compare"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(dir().join("golden/a1_compare.out")).unwrap());

    let o = Command::new(env!("CARGO_BIN_EXE_pdcris"))
        .args(["envelope", "--job", &job("bo_envelope")])
        .env("PDCRIS_OUT_DIR", &tmp)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(tmp.join("bo_envelope.envelope.txt")).unwrap(), std::fs::read(dir().join("golden/bo_envelope.out")).unwrap());
}

#[test]
fn selftest_passes() {
    let o = pdcris(&["selftest"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout.clone()).unwrap().contains("\"status\": \"pass\""));
    assert!(!stderr(&o).contains("FAIL"));
}
