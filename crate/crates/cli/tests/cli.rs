use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cwlm(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cwlm"));
    cmd.args(args).env_remove("CWLM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    cwlm(&args, &[])
}

/// Parses a numeric CSV into its header and rows; empty cells become None.
fn read_csv(path: &Path) -> (String, Vec<Vec<Option<f64>>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| {
                    if c.is_empty() {
                        None
                    } else {
                        Some(c.parse().unwrap())
                    }
                })
                .collect()
        })
        .collect();
    (header, rows)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Integral of the `p` column of a joint CSV.
fn joint_mass(path: &Path) -> f64 {
    let (_, rows) = read_csv(path);
    let o1: Vec<f64> = rows.iter().map(|r| r[0].unwrap()).collect();
    let o2: Vec<f64> = rows.iter().map(|r| r[1].unwrap()).collect();
    let n2 = o1.iter().take_while(|&&x| x == o1[0]).count();
    let area = (o1[n2] - o1[0]) * (o2[1] - o2[0]);
    rows.iter().map(|r| r[2].unwrap()).sum::<f64>() * area
}

const IDEAL_JUMP: &str = r#"{
  "scenario": "ideal",
  "post": {"mode": "pure", "bloch": [0, 0, -1]},
  "times": [0.05],
  "time_unit": "rabi",
  "grid": {"n": 128, "o_max": [18.0, 18.0]},
  "products": {"marginals": true, "slices": {"axis": 2, "y": [-1.0, 0.0, 50.0]}}
}"#;

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ok = write_config(
        dir.path(),
        "ok.json",
        r#"{"scenario": "ideal", "times": [1.0]}"#,
    );
    let o = cwlm(&["validate", "--config", ok.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("short_time_cross_zm_to_zp") && stdout.contains("all 10 checks pass"));

    let halved = write_config(
        dir.path(),
        "halved.json",
        r#"{"scenario": "ideal", "times": [1.0],
            "correlators": {"s_qq": [[0.5, 0], [0, 0.5]], "s_vv": [[1, 0], [0, 1]], "a_vq": [[2, 0], [0, 2]]}}"#,
    );
    assert_eq!(
        code(&cwlm(
            &["validate", "--config", halved.to_str().unwrap()],
            &[]
        )),
        2
    );

    let broken = write_config(
        dir.path(),
        "broken.json",
        r#"{"scenario": "ideal", "times": [1.0"#,
    );
    assert_eq!(
        code(&cwlm(
            &["validate", "--config", broken.to_str().unwrap()],
            &[]
        )),
        1
    );
    let missing = dir.path().join("absent.json");
    assert_eq!(
        code(&cwlm(
            &["validate", "--config", missing.to_str().unwrap()],
            &[]
        )),
        1
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&cwlm(&["simulate"], &[])), 1);
    assert_eq!(code(&cwlm(&["frobnicate", "--config", "x.json"], &[])), 1);
    assert_eq!(code(&cwlm(&["--help"], &[])), 0);
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"scenario": "ideal", "times": [1.0]}"#,
    );
    let o = cwlm(
        &["validate", "--config", cfg.to_str().unwrap()],
        &[("CWLM_THREADS", "0")],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn simulate_refuses_invalid_model_unless_forced() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"scenario": "ideal", "times": [0.2], "grid": {"n": 64},
            "correlators": {"s_qq": [[0.5, 0], [0, 0.5]], "s_vv": [[1, 0], [0, 1]], "a_vq": [[2, 0], [0, 2]]}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(code(&run("simulate", &cfg, &out, &[])), 2);
    assert!(!out.join("run.json").exists());
    assert_eq!(code(&run("simulate", &cfg, &out, &["--force"])), 0);
    assert_eq!(json(&out.join("run.json"))["forced"], true);
}

#[test]
fn sudden_jump_mean_and_csv_layout() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "jump.json", IDEAL_JUMP);
    let out = dir.path().join("out");
    let o = run("simulate", &cfg, &out, &["--plots"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = out.join("t00");

    let (header, rows) = read_csv(&t.join("joint.csv"));
    assert_eq!(header, "o1,o2,p");
    assert_eq!(rows.len(), 128 * 128);
    assert!((joint_mass(&t.join("joint.csv")) - 1.0).abs() < 1e-4);

    // -2 Omega_x / (4 gamma + T Omega^2) with gamma = 2 (S_QQ = 1 per detector).
    let expected = -2.0 / (8.0 + 0.05);
    let mean = json(&t.join("moments.json"))["mean"][1].as_f64().unwrap();
    assert!(
        ((mean - expected) / expected).abs() < 0.05,
        "{mean} vs {expected}"
    );
    let meta = json(&t.join("joint.json"));
    assert_eq!(meta["scenario"], "ideal");
    assert!(meta["post_probability"].as_f64().unwrap() > 0.0);

    let (h, rows) = read_csv(&t.join("marginal_o2.csv"));
    assert_eq!(h, "o,p");
    assert_eq!(rows.len(), 128);
    assert!(t.join("slice_00.csv").exists() && t.join("slice_01.csv").exists());
    // y = 50 lies outside the grid: skipped with a warning, not an error.
    assert!(!t.join("slice_02.csv").exists());
    let run_json = json(&out.join("run.json"));
    assert_eq!(
        run_json["times"][0]["warnings"].as_array().unwrap().len(),
        1
    );
    for svg in ["joint.svg", "marginals.svg", "slices.svg"] {
        let text = fs::read_to_string(t.join(svg)).unwrap();
        assert!(
            text.starts_with("<svg") && text.trim_end().ends_with("</svg>"),
            "{svg}"
        );
    }
}

#[test]
fn csv_values_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "jump.json", IDEAL_JUMP);
    let out = dir.path().join("out");
    assert_eq!(code(&run("simulate", &cfg, &out, &[])), 0);
    let text = fs::read_to_string(out.join("t00/joint.csv")).unwrap();
    let mut rebuilt = String::from("o1,o2,p\n");
    for line in text.lines().skip(1) {
        let cells: Vec<String> = line
            .split(',')
            .map(|c| format!("{:.8e}", c.parse::<f64>().unwrap()))
            .collect();
        rebuilt.push_str(&cells.join(","));
        rebuilt.push('\n');
    }
    assert_eq!(rebuilt, text);
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "jump.json", IDEAL_JUMP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run("simulate", &cfg, &a, &["--plots"])), 0);
    let o = cwlm(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
            "--plots",
        ],
        &[("CWLM_THREADS", "3")],
    );
    assert_eq!(code(&o), 0);
    let mut files: Vec<PathBuf> = fs::read_dir(a.join("t00"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.push(a.join("run.json"));
    assert!(files.len() > 5);
    for f in files {
        let rel = f.strip_prefix(&a).unwrap();
        assert_eq!(
            fs::read(&f).unwrap(),
            fs::read(b.join(rel)).unwrap(),
            "{}",
            rel.display()
        );
    }
}

#[test]
fn experimental_masses() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.json",
        r#"{"scenario": "experimental", "post": {"mode": "pure", "bloch": [0, 0, -1]},
            "times": [0.4, 0.8, 1.2], "time_unit": "acquisition", "grid": {"n": 128}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(code(&run("simulate", &cfg, &out, &[])), 0);
    for k in 0..3 {
        let path = out.join(format!("t{k:02}/joint.csv"));
        assert!((joint_mass(&path) - 1.0).abs() < 1e-4, "{}", path.display());
    }
}

#[test]
fn shift_weights_product() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "shift.json",
        r#"{"scenario": "ideal", "hamiltonian": {"omega_x": 0},
            "post": {"mode": "pure", "bloch": [0, 0, 1]}, "times": [0.025], "grid": {"n": 64},
            "products": {"joint": false, "shifts": {"xi": 0.01, "spacing": 0.03125}}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(code(&run("simulate", &cfg, &out, &[])), 0);
    let text = fs::read_to_string(out.join("shifts/weights.csv")).unwrap();
    let x: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("x,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(x, vec![0.25, 0.5, 0.25]);
    let meta = json(&out.join("shifts/shifts.json"));
    assert!((meta["mass"].as_f64().unwrap() - 1.0).abs() < 0.01);
    let (h, rows) = read_csv(&out.join("shifts/measure_2d.csv"));
    assert_eq!(h, "s_x,s_y,density");
    assert_eq!(rows.len(), 129 * 129);
}

#[test]
fn zero_postselection_is_recorded_and_run_continues() {
    let dir = TempDir::new().unwrap();
    // Both detectors measure sigma_z, so only the Rabi drive moves |Z+> to |Z->.
    let cfg = write_config(
        dir.path(),
        "zero.json",
        r#"{"scenario": "ideal", "measured": ["z", "z"], "post": {"mode": "pure", "bloch": [0, 0, -1]},
            "times": [1e-8, 0.5], "grid": {"n": 64}}"#,
    );
    let out = dir.path().join("out");
    let o = run("sweep", &cfg, &out, &[]);
    assert_eq!(code(&o), 3);
    let r = json(&out.join("run.json"));
    assert_eq!(r["times"][0]["ok"], false);
    assert!(r["times"][0]["error"]
        .as_str()
        .unwrap()
        .contains("post-selection"));
    assert_eq!(r["times"][1]["ok"], true);
    assert!(out.join("t01/joint.csv").exists());
    let (_, rows) = read_csv(&out.join("summary.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][11], Some(0.0));
    assert!(rows[0][4].is_none());
}

#[test]
fn sweep_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"scenario": "ideal", "post": {"mode": "pure", "bloch": [0, 0, -1]},
            "times": [0.01, 0.02, 0.05, 0.1], "grid": {"n": 128, "o_max": [20.0, 20.0]},
            "products": {"joint": false, "certainty": {"axis": 1, "y": [0.0], "fit_o_max": 3.0}}}"#,
    );
    let out = dir.path().join("out");
    let o = run("sweep", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("summary.csv"));
    assert_eq!(
        header,
        "t,time_value,post_probability,mass,mean_o1,mean_o2,cov_11,cov_12,cov_22,beta,beta_residual,ok"
    );
    assert_eq!(rows.len(), 4);
    let means: Vec<f64> = rows.iter().map(|r| r[5].unwrap()).collect();
    assert!(
        means.windows(2).all(|w| w[1].abs() < w[0].abs()),
        "{means:?}"
    );
    for r in &rows {
        assert!(r[9].is_some() && r[10].is_some());
        assert!((r[3].unwrap() - 1.0).abs() < 1e-4);
    }
    assert!(!out.join("t00/joint.csv").exists());
    assert!(out.join("t00/certainty_00.csv").exists());
}
