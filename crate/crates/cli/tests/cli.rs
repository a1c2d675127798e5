use std::process::{Command, Output};

fn tqf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tqf")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn assert_single_line_error(o: &Output) {
    assert!(!o.status.success());
    let err = stderr(o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "), "{err}");
}

fn value_line(o: &Output) -> f64 {
    let out = stdout(o);
    let first = out.lines().next().unwrap();
    first.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn info_lists_ranks_and_entropies() {
    let o = tqf(&["info", "sp:p=0.5"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row = out.lines().find(|l| l.starts_with("AB|CD")).unwrap();
    let cells: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(cells, ["AB|CD", "4", "2"]);

    let w = stdout(&tqf(&["info", "w:k=4"]));
    let row = w.lines().find(|l| l.starts_with("A|BCD")).unwrap();
    let h: f64 = row.split_whitespace().nth(2).unwrap().parse().unwrap();
    let want = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
    assert!((h - want).abs() < 1e-11);
}

#[test]
fn info_reads_json_files_and_rejects_zero_tensors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("bell.json");
    let r = std::f64::consts::FRAC_1_SQRT_2;
    std::fs::write(&good, format!(r#"{{"shape":[2,2],"entries":[[{r},0],[0,0],[0,0],[{r},0]]}}"#)).unwrap();
    let o = tqf(&["info", good.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["A|B", "2", "1"]));

    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, r#"{"shape":[2,2],"entries":[[0,0],[0,0],[0,0],[0,0]]}"#).unwrap();
    let o = tqf(&["info", zero.to_str().unwrap()]);
    assert_single_line_error(&o);
    assert!(stderr(&o).contains("nonzero tensor required"));

    let o = tqf(&["info", "sp:q=0.5"]);
    assert_single_line_error(&o);
    assert!(stderr(&o).contains("position"));
}

#[test]
fn functional_values() {
    let lower = value_line(&tqf(&["functional", "lower", "unit:n=3,k=4", "AB:0.5,A:0.25,C:0.25", "--restarts", "1"]));
    assert!((lower - 3f64.log2()).abs() < 1e-9);
    let upper =
        value_line(&tqf(&["functional", "upper", "sp:p=0.333", "AB:0.5,A:0.125,B:0.125,C:0.125,D:0.125", "--n", "4"]));
    assert!((upper - 1.5).abs() < 1e-11);
    let det = value_line(&tqf(&["functional", "detbound", "sp:p=0.333", "AB"]));
    assert!((det - 1.93).abs() < 5e-3, "{det}");
    let cap = value_line(&tqf(&["functional", "capacity", "qgamma:g=0.9"]));
    assert!((cap - 1.0).abs() < 1e-6);
    let m = value_line(&tqf(&["functional", "mtheta", "sp:p=0.2", "AB:0.5,A:0.125,B:0.125,C:0.125,D:0.125"]));
    assert_eq!(m, 1.5);

    // the second line is the report JSON
    let o = tqf(&["functional", "upper", "unit:n=2,k=4", "AB:0.5,A:0.5", "--n", "2"]);
    let report: serde_json::Value = serde_json::from_str(stdout(&o).lines().nth(1).unwrap()).unwrap();
    assert_eq!(report["n"], 2);
}

#[test]
fn functional_errors() {
    let o = tqf(&["functional", "upper", "unit:n=2,k=4", "AB:0.5,AC:0.5", "--n", "2"]);
    assert_single_line_error(&o);
    assert!(stderr(&o).contains("order"));
    let o = tqf(&["functional", "upper", "unit:n=2,k=4", "AB:0.5,AC:0.5", "--n", "2", "--order", "AB,AC"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tqf(&["functional", "detbound", "sp:p=0.3", "A"]);
    assert_single_line_error(&o);
    assert!(stderr(&o).contains("unbalanced"));
    assert_single_line_error(&tqf(&["functional", "sideways", "sp:p=0.3"]));
    assert_single_line_error(&tqf(&["functional", "lower", "sp:p=0.3"]));
}

#[test]
fn verify_reports_json_and_exit_code() {
    let o = tqf(&["verify", "crossing"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["claim_id"], "crossing");
    assert_eq!(v["passed"], true);
    assert_eq!(v["expected"]["upper_level"]["value"], 1.25);
    assert!(v["runtime_ms"].is_u64());

    let o = tqf(&["verify", "bogus"]);
    assert_single_line_error(&o);
    assert!(stderr(&o).contains("sp-separation") && stderr(&o).contains("embedding"));
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sp.csv");
    let args = |out: &str| {
        vec![
            "sweep".to_string(),
            "sp:p=$".into(),
            "--start".into(),
            "0.05".into(),
            "--stop".into(),
            "0.95".into(),
            "--steps".into(),
            "19".into(),
            "--theta".into(),
            "AB:0.5,A:0.125,B:0.125,C:0.125,D:0.125".into(),
            "--quantities".into(),
            "H_theta,m_theta,lower".into(),
            "--restarts".into(),
            "1".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let run = |out: &str| {
        let a = args(out);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = tqf(&refs);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    run(path.to_str().unwrap());
    let first = std::fs::read(&path).unwrap();
    let again = dir.path().join("again.csv");
    run(again.to_str().unwrap());
    assert_eq!(first, std::fs::read(&again).unwrap());

    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "p,H_theta,m_theta,lower");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 19);
    for r in &rows {
        let (p, h, m) = (r[0], r[1], r[2]);
        if (p - 0.5).abs() < 1e-12 {
            assert!((h - m).abs() < 1e-11);
        } else {
            assert!(h < m - 1e-6, "p = {p}: {h} vs {m}");
        }
    }
}

#[test]
fn qgamma_sweep_detbound_matches_entropy() {
    let o = tqf(&[
        "sweep",
        "qgamma:g=$",
        "--start",
        "0.75",
        "--stop",
        "1",
        "--steps",
        "6",
        "--theta",
        "AB:1",
        "--quantities",
        "H_theta,detbound",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for line in stdout(&o).lines().skip(1) {
        let c: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((c[1] - c[2]).abs() < 1e-6, "{line}");
    }
}

#[test]
fn sweep_errors() {
    let base = ["sweep", "sp:p=$", "--start", "0.1", "--stop", "0.2"];
    let with = |extra: &[&str]| {
        let mut a: Vec<&str> = base.to_vec();
        a.extend_from_slice(extra);
        tqf(&a)
    };
    assert_single_line_error(&with(&["--steps", "3", "--quantities", ""]));
    assert_single_line_error(&with(&["--steps", "1", "--quantities", "c_psi"]));
    assert_single_line_error(&with(&["--steps", "3", "--quantities", "entropy"]));
    assert_single_line_error(&with(&["--steps", "3", "--quantities", "H_theta"]));
    let o = tqf(&["sweep", "sp:p=$", "--start", "0.5", "--stop", "1.5", "--steps", "3", "--quantities", "c_psi"]);
    assert_single_line_error(&o);
    let o = tqf(&["sweep", "sp:p=0.2", "--start", "0.5", "--stop", "0.6", "--steps", "3", "--quantities", "c_psi"]);
    assert_single_line_error(&o);
}

#[test]
fn thread_setting_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_tqf")).args(["info", "sp:p=0.5"]).env("TQF_THREADS", "zero").output().unwrap();
    assert_single_line_error(&o);
    let o = Command::new(env!("CARGO_BIN_EXE_tqf")).args(["info", "sp:p=0.5"]).env("TQF_THREADS", "2").output().unwrap();
    assert!(o.status.success());
}
