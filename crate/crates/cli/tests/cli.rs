use std::path::PathBuf;
use std::process::{Command, Output};

use sts_core::io::{parse_system, to_json};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn sts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sts"))
        .args(args)
        .env_remove("STS_BUDGET_MS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_fixtures() {
    let o = sts(&["validate", &fixture("fano.json")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("total system: 7 points, 7 blocks"));
    let o = sts(&["validate", &fixture("aff9.json")]);
    assert!(stdout(&o).contains("total system: 9 points, 12 blocks"));
    let o = sts(&["validate", &fixture("triangle.json")]);
    assert!(stdout(&o).contains("partial system: 3 points, 0 blocks"));
    let o = sts(&["validate", &fixture("one-block.json")]);
    assert!(stdout(&o).contains("total system: 3 points, 1 blocks"));
}

#[test]
fn malformed_inputs_exit_2() {
    let o = sts(&["validate", &fixture("dup-pair.json")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lies in two blocks"));
    for f in ["bad-arity.json", "unknown-point.json", "no-such-file.json"] {
        assert_eq!(code(&sts(&["validate", &fixture(f)])), 2, "{f}");
    }
    assert_eq!(code(&sts(&["frobnicate"])), 2);
    assert_eq!(code(&sts(&["normalize", &fixture("triangle.json"), "--term", "(a.z)"])), 2);
}

#[test]
fn fixtures_round_trip() {
    for f in ["fano.json", "aff9.json", "triangle.json", "one-block.json", "twin-fano.json"] {
        let text = std::fs::read_to_string(fixture(f)).unwrap();
        let s = parse_system(&text).unwrap();
        assert_eq!(to_json(&s), text, "{f} is not in canonical form");
    }
}

#[test]
fn doyen_order_8_is_not_admissible() {
    let o = sts(&["doyen", "--order", "8"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("not an admissible order"));
}

#[test]
fn seeded_commands_are_deterministic() {
    for args in [
        vec!["complete", &fixture("triangle.json") as &str, "--seed", "11"],
        vec!["doyen", "--order", "13", "--seed", "5", "--budget", "30"],
    ] {
        let a = sts(&args);
        let b = sts(&args);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout);
    }
    let dir = tempfile::tempdir().unwrap();
    let p = |tag: &str| dir.path().join(tag).to_string_lossy().into_owned();
    for tag in ["x", "y"] {
        let o = sts(&[
            "generic",
            "--seed-file",
            &fixture("point.json"),
            "--stages",
            "1",
            "--bound",
            "3",
            "--rng",
            "2",
            "--out-prefix",
            &p(tag),
        ]);
        assert_eq!(code(&o), 0);
    }
    let x = std::fs::read(p("x1.json")).unwrap();
    assert_eq!(x, std::fs::read(p("y1.json")).unwrap());
    assert!(parse_system(std::str::from_utf8(&x).unwrap()).unwrap().is_total());
}

#[test]
fn completion_output_is_a_total_extension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = sts(&["complete", &fixture("triangle.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = parse_system(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(s.is_total());
    let tri = parse_system(&std::fs::read_to_string(fixture("triangle.json")).unwrap()).unwrap();
    assert!(s.has_substructure(&tri));
}

#[test]
fn report_document() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = sts(&["--report", report.to_str().unwrap(), "delta-check", &fixture("fano.json"), &fixture("eight-discrete.json")]);
    assert_eq!(code(&o), 1);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["command"], "delta-check");
    assert_eq!(doc["exit_code"], 1);
    assert_eq!(doc["verdict"], "fails");

    let o = sts(&["--report", report.to_str().unwrap(), "validate", &fixture("dup-pair.json")]);
    assert_eq!(code(&o), 2);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["verdict"], "invalid-input");
}

#[test]
fn term_commands() {
    let o = sts(&["normalize", &fixture("triangle.json"), "--term", "(a.(a.b))"]);
    assert_eq!(stdout(&o).trim(), "b");
    let o = sts(&["normalize", &fixture("one-block.json"), "--term", "(a.b)"]);
    assert_eq!(stdout(&o).trim(), "c");
    let o = sts(&["closure", &fixture("triangle.json"), "--gens", "a,b", "--k", "5"]);
    assert!(stdout(&o).contains("size 3"));
    let o = sts(&["closure", &fixture("triangle.json"), "--gens", "a,b,c", "--k", "2"]);
    assert!(stdout(&o).contains("size 6"));
    let o = sts(&["closure", &fixture("triangle.json"), "--gens", "a,b,c", "--k", "9", "--budget", "50"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn orbit_verdicts() {
    let o = sts(&["einf", &fixture("pair.json"), "--phi", "x != a & x != b"]);
    assert_eq!((code(&o), stdout(&o).lines().next().unwrap()), (0, "infinite"));
    let o = sts(&["einf", &fixture("pair.json"), "--phi", "x = (a.b)"]);
    assert_eq!((code(&o), stdout(&o).lines().next().unwrap()), (1, "finite"));
}

#[test]
fn delta_instances() {
    assert_eq!(code(&sts(&["delta-check", &fixture("fano.json"), &fixture("eight-discrete.json")])), 1);
    assert_eq!(code(&sts(&["delta-check", &fixture("fano.json"), &fixture("block-instance.json")])), 0);
    // The instance needs an "inner" list.
    assert_eq!(code(&sts(&["delta-check", &fixture("fano.json"), &fixture("triangle.json")])), 2);
}

#[test]
fn merges() {
    let o = sts(&["merge", "al1", &fixture("merge-al1.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("|U_i| [1, 1]"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let o = sts(&["merge", "al25", &fixture("merge-al25.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("fresh |A| 1, |W| 1, |U_i| [2, 2]"));
    assert!(parse_system(&std::fs::read_to_string(&out).unwrap()).is_ok());
    let o = sts(&["merge", "al1", &fixture("merge-bad.json")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("hypothesis violated"));
}

#[test]
fn independence() {
    let o = sts(&["indep", &fixture("triangle.json"), "--a", "a", "--b", "b"]);
    assert_eq!(code(&o), 0);
    // a and c are dependent over b inside a block.
    let o = sts(&["indep", &fixture("one-block.json"), "--a", "a", "--b", "c", "--c", "b"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("dependent"));
}

#[test]
fn tp2_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = sts(&["tp2", "--rows", "2", "--cols", "2", "--verify-depth", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("28 points, 24 blocks"));
    assert!(stdout(&o).contains("8 paths"));
    let labels: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json.labels.json")).unwrap()).unwrap();
    assert_eq!(labels["c"].as_array().unwrap().len(), 4);
    assert_eq!(labels["d"].as_array().unwrap().len(), 4);
}

#[test]
fn sma1_over_two_planes() {
    let o = sts(&["sma1", &fixture("fano.json"), &fixture("aff9.json"), "--prefix", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("audit passed"));
    let o = sts(&["sma1", &fixture("triangle.json"), "--prefix", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn isolate_and_equiv() {
    let o = sts(&["isolate", &fixture("fano.json"), "--tuple", "1,2,4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("exists: x4, x5, x6, x7"));
    let args = |m: &'static str| {
        sts(&[
            "equiv",
            &fixture("fano.json"),
            "--t1",
            "1,2,4",
            "--model2",
            &fixture("aff9.json"),
            "--t2",
            "00,01,10",
            "--m",
            m,
        ])
    };
    assert_eq!(code(&args("1")), 0);
    assert_eq!(code(&args("2")), 1);
}
