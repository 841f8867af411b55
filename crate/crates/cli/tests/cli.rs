use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catmouse"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn ring6(dir: &Path) -> String {
    let mut s = String::from("# lazy-free ring, steps of 1 and 2\n6\n");
    for x in 0..6 {
        let row: Vec<&str> = (0..6)
            .map(|y| match (y + 6 - x) % 6 {
                1 | 2 | 4 | 5 => "0.25",
                _ => "0",
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    let p = dir.join("ring6.txt");
    fs::write(&p, s).unwrap();
    p.display().to_string()
}

#[test]
fn analyze_ring_gives_alpha_five() {
    let d = tempfile::tempdir().unwrap();
    let m = ring6(d.path());
    let o = run(d.path(), &["--out", "res", "analyze", "--matrix", &m]);
    assert!(o.status.success(), "{}", text(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("res/summary.json")).unwrap()).unwrap();
    assert!((v["alpha"].as_f64().unwrap() - 5.0).abs() < 1e-9);
    assert_eq!(v["reversible"], true);
    let nu = fs::read_to_string(d.path().join("res/nu.csv")).unwrap();
    assert!(nu.lines().any(|l| l == "x,y,value"));
    assert_eq!(nu.lines().filter(|l| !l.starts_with('#')).count(), 37);
}

#[test]
fn malformed_matrix_reports_line() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.txt");
    fs::write(&p, "2\n0.5 0.5\n0.5 x\n").unwrap();
    let o = run(d.path(), &["analyze", "--matrix", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("line 3"), "{}", text(&o));
}

#[test]
fn config_errors_exit_two_with_line_numbers() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "# settings\nrho = 1\nbogus = 3\n").unwrap();
    let o = run(d.path(), &["--config", cfg.to_str().unwrap(), "experiment", "mminf-F"]);
    assert_eq!(o.status.code(), Some(2));
    let t = text(&o);
    assert!(t.contains("line 3") && t.contains("bogus"), "{t}");

    let o = run(d.path(), &["experiment", "mminf-F", "--nonsense", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let o = run(d.path(), &["experiment", "no-such-experiment"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn budget_refusal_exits_three() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["--budget", "1000", "experiment", "reflected-hitting"]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
}

#[test]
fn small_experiment_passes_and_writes_report() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["--seed", "7", "--out", "f", "experiment", "mminf-F", "--rho", "1", "--replicas=2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let csv = fs::read_to_string(d.path().join("f/f.csv")).unwrap();
    assert!(csv.contains("# seed=7"));
    assert!(csv.lines().any(|l| l == "rho,replica,f"));
    assert!(d.path().join("f/summary.txt").exists());
}

#[test]
fn simulate_and_oracle_write_csv() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["--out", "s", "simulate", "--chain", "reflected", "--steps", "50"]);
    assert!(o.status.success(), "{}", text(&o));
    let t = fs::read_to_string(d.path().join("s/trajectory.csv")).unwrap();
    let rows: Vec<&str> = t.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "step,cat,mouse");
    assert_eq!(rows.len(), 52);

    let o = run(d.path(), &["--out", "s", "simulate", "--chain", "mminf", "--steps", "20"]);
    assert!(o.status.success(), "{}", text(&o));
    let t = fs::read_to_string(d.path().join("s/trajectory.csv")).unwrap();
    assert!(t.lines().any(|l| l == "step,cat,mouse,clock"));

    let o = run(d.path(), &["--out", "o", "oracle", "half-normal", "--samples", "100"]);
    assert!(o.status.success(), "{}", text(&o));
    let t = fs::read_to_string(d.path().join("o/half-normal.csv")).unwrap();
    assert_eq!(t.lines().filter(|l| !l.starts_with('#')).count(), 101);
    assert!(t.lines().filter(|l| !l.starts_with('#')).skip(1).all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn same_seed_same_output() {
    let d = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run(d.path(), &["--seed", "3", "--out", out, "simulate", "--chain", "line", "--steps", "200"]);
        assert!(o.status.success());
    }
    assert_eq!(
        fs::read(d.path().join("a/trajectory.csv")).unwrap(),
        fs::read(d.path().join("b/trajectory.csv")).unwrap()
    );
}
