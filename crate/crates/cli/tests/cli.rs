use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use indexlab_cli::record::RunRecord;
use indexlab_cli::scenario::Scenario;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn indexlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indexlab"))
        .args(args)
        .current_dir(dir)
        .env("INDEXLAB_CACHE_DIR", dir.join("cache"))
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn record(dir: &Path) -> RunRecord {
    serde_json::from_str(&std::fs::read_to_string(dir.join("record.json")).unwrap()).unwrap()
}

#[test]
fn shipped_scenarios_validate() {
    let mut n = 0;
    for e in std::fs::read_dir(scenarios()).unwrap() {
        let p = e.unwrap().path();
        Scenario::load(p.to_str().unwrap()).unwrap_or_else(|f| panic!("{}: {f}", p.display()));
        n += 1;
    }
    assert!(n >= 6);
}

#[test]
fn dir_plus_matches_with_a_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let o = indexlab(tmp.path(), &["verify", "--scenario", "builtin:dir-plus", "--grid", "8x8", "--lattice", "8x8", "--out", "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("MATCH"));
    let r = record(&tmp.path().join("run"));
    assert_eq!(r.topological.unwrap().total, 0);
    assert_eq!(r.analytical.unwrap().spectral_flow, 0);
    assert!(r.gap.unwrap() > 0.1);
    for f in ["eigenvalues.csv", "flux.csv", "spectral_flow.svg", "flux.svg"] {
        assert!(tmp.path().join("run").join(f).is_file(), "{f}");
    }
}

#[test]
fn winding_matches_with_index_minus_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = indexlab(tmp.path(), &["verify", "--scenario", "builtin:winding", "--grid", "12x12", "--lattice", "24x24", "--out", "w"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = record(&tmp.path().join("w"));
    assert_eq!(r.topological.unwrap().total, -1);
    let a = r.analytical.unwrap();
    assert_eq!(a.spectral_flow, -1);
    assert_eq!(a.cayley_flow, Some(-1));
    assert_eq!(a.whole_spectrum_flow, 0);
    assert!(r.gap.is_none());
}

#[test]
fn cache_hit_reproduces_reports_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["chern", "--scenario", "builtin:winding", "--lattice", "16x16", "--out", "a"];
    let first = indexlab(tmp.path(), &args);
    assert_eq!(first.status.code(), Some(0));
    let mut again = args;
    again[6] = "b";
    let second = indexlab(tmp.path(), &again);
    assert!(stdout(&second).contains("[cached]"));
    for f in ["record.json", "flux.csv", "flux.svg"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn uncached_runs_agree_up_to_timestamp() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = indexlab(tmp.path(), &["sf", "--scenario", "builtin:locally-constant", "--grid", "8x8", "--no-cache", "--out", out]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert!(!tmp.path().join("cache").exists());
    let (mut a, mut b) = (record(&tmp.path().join("a")), record(&tmp.path().join("b")));
    a.created_unix = 0;
    b.created_unix = 0;
    assert_eq!(a, b);
    let ea = std::fs::read(tmp.path().join("a/eigenvalues.csv")).unwrap();
    assert_eq!(ea, std::fs::read(tmp.path().join("b/eigenvalues.csv")).unwrap());
}

#[test]
fn plot_regenerates_identical_svg() {
    let tmp = tempfile::tempdir().unwrap();
    indexlab(tmp.path(), &["verify", "--scenario", "builtin:dir-minus", "--grid", "6x6", "--lattice", "8x8", "--out", "r"]);
    let before = std::fs::read(tmp.path().join("r/spectral_flow.svg")).unwrap();
    let o = indexlab(tmp.path(), &["plot", "--out", "r"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(before, std::fs::read(tmp.path().join("r/spectral_flow.svg")).unwrap());
    let missing = indexlab(tmp.path(), &["plot", "--out", "nothing-here"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn invalid_scenarios_exit_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"name": "x", "family": {"kind": "dir-plus"}}"#,
        r#"{"schema_version": 1, "name": "x", "family": {"kind": "winding", "k_theta": 1, "k_s": 1, "mass": 0.0}}"#,
        r#"{"schema_version": 1, "name": "x", "family": {"kind": "torus"}}"#,
        r#"{"schema_version": 1, "name": "x", "family": {"kind": "dir-plus"}, "window": 0}"#,
        r#"{"schema_version": 1, "name": "x", "family": {"kind": "inline", "r": 1,
            "t0": {"kind": "constant", "matrix": [[1]]}, "t1": {"kind": "constant", "matrix": [[1, 0], [0, 1]]}}}"#,
        "not json",
    ];
    for (k, text) in cases.iter().enumerate() {
        let p = tmp.path().join(format!("s{k}.json"));
        std::fs::write(&p, text).unwrap();
        let o = indexlab(tmp.path(), &["verify", "--scenario", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(3), "case {k}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = indexlab(tmp.path(), &["gap", "--scenario", "builtin:dir-plus", "--grid", "2x8"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn nyquist_violation_is_invalid_input() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("fast.json");
    std::fs::write(
        &p,
        r#"{"schema_version": 1, "name": "fast", "family": {"kind": "winding", "k_theta": 5, "k_s": 1, "mass": 1.0},
            "grid": {"n_t": 6, "n_theta": 8}}"#,
    )
    .unwrap();
    let o = indexlab(tmp.path(), &["sf", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ktheory_verb() {
    let tmp = tempfile::tempdir().unwrap();
    let o = indexlab(tmp.path(), &["ktheory", "--n-max", "4", "--out", "k"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("k/ktheory.json")).unwrap()).unwrap();
    assert_eq!(v["all_passed"], true);
    let coeffs: Vec<&str> = v["pi_star_b"].as_array().unwrap().iter().map(|w| w["coefficient"].as_str().unwrap()).collect();
    assert_eq!(coeffs, ["-2", "-6", "24"]);
    assert_eq!(v["verify_dn"][2]["expected_coefficient"], "24");
    let o = indexlab(tmp.path(), &["ktheory", "--n-max", "6"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("pi_star_b supports"));
}

#[test]
fn properties_verb_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let a = indexlab(tmp.path(), &["properties", "--seed", "11", "--cases", "10"]);
    let b = indexlab(tmp.path(), &["properties", "--seed", "11", "--cases", "10"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).matches("PASS").count(), 6);
    let sc = scenarios().join("inline-sum.json");
    let c = indexlab(tmp.path(), &["properties", "--scenario", sc.to_str().unwrap(), "--cases", "4"]);
    assert_eq!(stdout(&c).matches("PASS").count(), 12);
}
