use std::path::Path;
use std::process::{Command, Output};

const AROB: &str = "3 16
3 1 1 2 1 2 2 1 0 1 1 1 3 1 1 1
3 2 2 0 2 2 2 2 2 0 1 1 3 2 1 2
3 0 0 1 0 0 0 0 1 2 3 3 3 0 0 0
2 2 2 2 3 3 3 3 4 4 4 4 1 1 1 1
";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pasldpc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pasldpc"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn rates_grid_rows() {
    let o = run(&[
        "rates",
        "--c",
        "13/16",
        "--m",
        "4",
        "--rgrid",
        "0.7:2.7:0.1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("R,snr_capacity_db,snr_shaped_db,snr_uniform_db"));
    assert_eq!(lines.count(), 21);
}

#[test]
fn threshold_json() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("arob.pg");
    std::fs::write(&m, AROB).unwrap();
    let o = run(&["threshold", "--matrix", p(&m), "--R", "2.1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    let th = v["threshold_db"].as_f64().unwrap();
    let gap = v["gap_db"].as_f64().unwrap();
    assert!(gap > 0.0 && gap < 1.05);
    assert!((th - gap - v["capacity_db"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["rates", "--rgrid", "2:1:0.1"]).status.code(), Some(2));
    assert_eq!(
        run(&["threshold", "--matrix", "/nonexistent.pg", "--R", "1.1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    std::fs::write(
        &csv,
        "R,snr_db,frames,frame_errors,bit_errors,fer,ci95_lo,ci95_hi,wallclock_s,seed\n\
         1.1,5.0,100,50,10,0.5,0.39,0.6,0,1\n1.1,5.5,100,20,10,0.2,0.12,0.29,0,1\n",
    )
    .unwrap();
    assert_eq!(
        run(&["gap", "--results", p(&csv), "--target", "1e-3"])
            .status
            .code(),
        Some(3)
    );
    let o = run(&["gap", "--results", p(&csv), "--target", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("R,gap_db\n1.1,"));
}

#[test]
fn lift_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("arob.pg");
    let code = dir.path().join("code.alist");
    let edges = dir.path().join("code.edges");
    std::fs::write(&m, AROB).unwrap();
    let o = run(&[
        "lift",
        "--in",
        p(&m),
        "--f",
        "3",
        "--Q",
        "4",
        "--seed",
        "5",
        "--out",
        p(&code),
        "--edges",
        p(&edges),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        (v["rows"].as_u64(), v["cols"].as_u64()),
        (Some(36), Some(192))
    );
    assert!(std::fs::read_to_string(&code)
        .unwrap()
        .starts_with("192 36\n"));

    let args = [
        "simulate",
        "--code",
        p(&code),
        "--R",
        "1.1",
        "--snr",
        "4.0:6.0:0.25",
        "--max-frames",
        "5",
        "--min-errors",
        "5",
    ];
    let o = run(&args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 9);
    // the binary edge list carries the same code and lineage
    let mut args2 = args;
    args2[2] = p(&edges);
    assert_eq!(stdout(&run(&args2)), text);
}

#[test]
fn config_file_and_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("arob.pg");
    let code = dir.path().join("code.alist");
    std::fs::write(&m, AROB).unwrap();
    assert_eq!(
        run(&["lift", "--in", p(&m), "--Q", "4", "--out", p(&code)])
            .status
            .code(),
        Some(0)
    );
    let cfg = dir.path().join("sim.toml");
    std::fs::write(
        &cfg,
        format!("code = {:?}\nR = [2.1]\nsnr = \"8.0:9.0:1.0\"\nmax_frames = 3\nmin_errors = 3\nseed = 4\n", p(&code)),
    )
    .unwrap();
    let base = run(&["simulate", "--config", p(&cfg)]);
    assert_eq!(
        base.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&base.stderr)
    );
    assert!(stdout(&base).lines().nth(1).unwrap().ends_with(",4"));
    let env = run_env(
        &["simulate", "--config", p(&cfg)],
        &[("PASLDPC_SEED", "77"), ("PASLDPC_WORKERS", "1")],
    );
    assert!(stdout(&env).lines().nth(1).unwrap().ends_with(",77"));
    let flag = run_env(
        &["simulate", "--config", p(&cfg), "--seed", "9"],
        &[("PASLDPC_SEED", "77")],
    );
    assert!(stdout(&flag).lines().nth(1).unwrap().ends_with(",9"));

    std::fs::write(&cfg, "not_a_key = 3\n").unwrap();
    assert_eq!(
        run(&["simulate", "--config", p(&cfg)]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "simulate",
            "--code",
            p(&code),
            "--R",
            "2.1",
            "--snr",
            "8:9:1",
            "--min-errors",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn optimize_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("best.pg");
    let log = dir.path().join("log.csv");
    let o = run(&[
        "optimize",
        "--rate",
        "1/2",
        "--m",
        "2",
        "--D",
        "2",
        "--pset",
        "0.7",
        "--mode",
        "single",
        "--generations",
        "2",
        "--np",
        "4",
        "--seed",
        "3",
        "--out",
        p(&out),
        "--log",
        p(&log),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("2 4\n"));
    let log = std::fs::read_to_string(&log).unwrap();
    assert!(log.starts_with("generation,best_fitness,mean_fitness,evaluations\n"));
    assert_eq!(log.lines().count(), 1 + 3);
    assert_eq!(
        run(&["optimize", "--pset", "3.5", "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
}
