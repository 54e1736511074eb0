use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_psiwork"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("psiwork-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_config_is_a_schema_error() {
    let dir = scratch("empty");
    let cfg = dir.join("empty.json");
    std::fs::write(&cfg, "{}").unwrap();
    let o = run(&["minimal", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("missing field `n`"), "{err}");
}

#[test]
fn unknown_fields_and_names_are_reported_together() {
    let dir = scratch("schema");
    let cfg = dir.join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"n": 2, "symbols": {"a": {"fixture": "nope"}, "b": {}},
            "factor": {"p": "a", "q": "zzz", "x0": [0, 0], "xi0": [0, 1]}}"#,
    )
    .unwrap();
    let o = run(&["factor", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("unknown fixture 'nope'"), "{err}");
    assert!(err.contains("symbol 'b'"), "{err}");
    assert!(err.contains("unknown symbol 'zzz'"), "{err}");

    std::fs::write(&cfg, r#"{"n": 2, "typo": 1}"#).unwrap();
    let o = run(&["factor", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field `typo`"));
}

#[test]
fn missing_config_is_a_schema_error() {
    let dir = scratch("noconfig");
    let o = run(&["itau"], &dir);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fixtures_p1_sign_grid() {
    let dir = scratch("fixtures");
    let o = run(&["fixtures", "--name", "p1"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("fixture_p1.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    // header plus 101 rows of x2, 201 columns of x1
    assert_eq!(rows.len(), 102);
    assert_eq!(rows[1].len(), 202);
    let x1: Vec<f64> = rows[0][1..].iter().map(|v| v.parse().unwrap()).collect();
    let col = |v: f64| x1.iter().position(|a| (a - v).abs() < 1e-9).unwrap() + 1;
    // x2 = 0.5 row: negative left of 0, positive on (0, 2) and beyond
    let row = |x2: f64| rows.iter().skip(1).find(|r| (r[0].parse::<f64>().unwrap() - x2).abs() < 1e-9).unwrap();
    assert_eq!(row(0.5)[col(-0.5)], "-1");
    assert_eq!(row(0.5)[col(1.0)], "1");
    assert_eq!(row(0.5)[col(2.5)], "1");
    assert_eq!(row(-0.5)[col(1.0)], "-1");
    assert_eq!(row(-0.5)[col(2.5)], "1");
    // x2 = 0: flat zero on [0, 2]
    assert_eq!(row(0.0)[col(1.0)], "0");
    let svg = std::fs::read_to_string(dir.join("fixture_p1.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("#d6604d") && svg.contains("#4393c3"));
}

#[test]
fn minimal_on_p2_finds_the_interval() {
    let dir = scratch("minimal");
    let o = run(&["minimal", "--fixture", "p2"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.join("minimal.json"));
    let iv = &v["report"]["interval"];
    assert!(iv[0].as_f64().unwrap().abs() < 1e-6);
    assert!((iv[1].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((v["report"]["l_estimate"].as_f64().unwrap() - 2.0).abs() < 0.1);
    assert!(v["report"]["rho"].as_f64().unwrap() >= 0.5);
}

#[test]
fn minimal_without_sign_change_is_inconclusive() {
    let dir = scratch("minimal-none");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n": 2, "symbols": {"p": {"terms": [{"degree": 1, "expr": "xi1 + i*x2^2*xi2"}]}},
            "curve": {"symbol": "p", "a": -1, "b": 1, "w": [0, 1]}}"#,
    )
    .unwrap();
    let o = run(&["minimal", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.join("minimal.json").exists());
}

#[test]
fn psi_scan_counts_sign_changes() {
    let dir = scratch("scan");
    let o = run(&["psi-scan", "--fixture", "p2", "--workers", "2"], &dir);
    assert!(o.status.success());
    let v = json(&dir.join("psi_scan.json"));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let off = r["offset"].as_f64().unwrap();
        assert_eq!(r["sign_change"].is_null(), off == 0.0, "offset {off}");
    }
}

#[test]
fn factor_reports_first_coefficient() {
    let dir = scratch("factor");
    let cfg = configs().join("factor_planted.json");
    let o = run(&["factor", "--config", cfg.to_str().unwrap()], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.join("factor.json"));
    assert!(v["max_residual"].as_f64().unwrap() < 1e-8);
    let first = &v["first_nonvanishing"];
    assert_eq!(first["index"]["j"], -1);
    // (x1^2 + x2 + 1) at x = (0, 0.3)
    assert!((first["value"][0].as_f64().unwrap() - 1.3).abs() < 1e-12);
}

#[test]
fn wkb_generic_slope() {
    let dir = scratch("wkb");
    let cfg = configs().join("wkb_generic.json");
    let o = run(&["wkb", "--config", cfg.to_str().unwrap()], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.join("wkb.json"));
    assert!((v["eiconal"]["slope"].as_f64().unwrap() - 4.0).abs() < 0.3);
    assert!(v["min_pd_margin"].as_f64().unwrap() > 0.0);
    assert!(v["transport"].is_object());
}

#[test]
fn itau_pipeline_and_exit_codes() {
    let dir = scratch("itau");
    let cfg = configs().join("itau_planted.json");
    let o = run(&["itau", "--config", cfg.to_str().unwrap(), "--tau-min", "16", "--tau-max", "256"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.join("itau.json"));
    assert_eq!(v["report"]["verdict"], "match");
    assert_eq!(v["report"]["tau_grid"].as_array().unwrap().len(), 5);

    // the same symbol tested at the wrong order is inconclusive
    let text = std::fs::read_to_string(&cfg).unwrap().replace("\"m\": 0", "\"m\": 1");
    let bad = dir.join("m1.json");
    std::fs::write(&bad, text).unwrap();
    let o = run(&["itau", "--config", bad.to_str().unwrap(), "--tau-min", "16", "--tau-max", "256"], &dir);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn proportionality_and_commutator() {
    let dir = scratch("prop");
    let cfg = configs().join("proportionality_lewy.json");
    let o = run(&["proportionality", "--config", cfg.to_str().unwrap()], &dir);
    assert!(o.status.success());
    let v = json(&dir.join("proportionality.json"));
    assert!((v["report"]["mu"][0].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!((v["report"]["mu"][1].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(v["report"]["proportional"], true);

    let cfg = configs().join("commutator_model.json");
    let o = run(&["commutator", "--config", cfg.to_str().unwrap()], &dir);
    assert!(o.status.success());
    assert_eq!(json(&dir.join("commutator.json"))["pass"], true);
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    for dir in [&a, &b] {
        assert!(run(&["fixtures"], dir).status.success());
        assert!(run(&["minimal", "--fixture", "p2", "--seed", "3", "--workers", "1"], dir).status.success());
    }
    b_matches(&a, &b, &["fixture_p1.csv", "fixture_p1.svg", "fixture_p2.csv", "fixture_p2.svg", "minimal.json"]);
}

fn b_matches(a: &Path, b: &Path, names: &[&str]) {
    for n in names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
}
