use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn teleport(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teleport"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

const SMALL: [&str; 14] = [
    "--n",
    "8",
    "--d",
    "3",
    "--T",
    "40",
    "--topology",
    "ring",
    "--sigma2",
    "1",
    "--zeta2",
    "1",
    "--seed",
    "5",
];

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec![
        "run",
        "--algorithm",
        "teleport",
        "--k",
        "4",
        "--eta",
        "0.01",
        "--out-dir",
        out,
    ];
    args.extend(SMALL);
    let res = teleport(&args);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let trace = read(dir.path(), "trace_teleport_ring_n8_k4_eta0.01_seed5.csv");
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "iteration,error,consensus_error,grad_norm_sq");
    assert_eq!(lines.len(), 1 + 41);
    let summary = read(dir.path(), "summary.csv");
    assert!(summary.starts_with("algorithm,topology,n,k,eta,seed,iters_to_target,final_error\n"));
    assert!(read(dir.path(), "metadata.toml").contains("etas = [0.01]"));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let mut args = vec![
            "grid",
            "--algorithm",
            "search-k",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ];
        args.extend(SMALL);
        assert!(teleport(&args).status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 13);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap()
        );
    }
}

#[test]
fn overlap_schedule_matches_plain_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for alg in ["teleport", "teleport-overlap"] {
        let mut args = vec![
            "run",
            "--algorithm",
            alg,
            "--k",
            "4",
            "--eta",
            "0.02",
            "--out-dir",
            out,
        ];
        args.extend(SMALL);
        assert!(teleport(&args).status.success());
    }
    assert_eq!(
        read(dir.path(), "trace_teleport_ring_n8_k4_eta0.02_seed5.csv"),
        read(
            dir.path(),
            "trace_teleport-overlap_ring_n8_k4_eta0.02_seed5.csv"
        )
    );
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "algorithm = \"dsgd\"\nn = 6\nd = 2\nT = 10\ntopology = \"complete\"\nsigma2 = 0\nzeta2 = 0\neta = 0.01\nseed = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = teleport(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--T",
        "20",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let trace = read(&out, "trace_dsgd_complete_n6_k6_eta0.01_seed1.csv");
    assert_eq!(trace.lines().count(), 22);
}

#[test]
fn seeds_flag_adds_mean_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "run",
        "--algorithm",
        "dsgd",
        "--eta",
        "0.01",
        "--seeds",
        "3",
        "--target-error",
        "10",
    ];
    args.extend(["--out-dir", dir.path().to_str().unwrap()]);
    args.extend(SMALL);
    assert!(teleport(&args).status.success());
    assert_eq!(read(dir.path(), "summary.csv").lines().count(), 4);
    let mean = read(dir.path(), "summary_mean.csv");
    assert!(mean.lines().nth(1).unwrap().contains(",mean,"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // teleport without k
    let mut args = vec![
        "run",
        "--algorithm",
        "teleport",
        "--eta",
        "0.01",
        "--out-dir",
        out,
    ];
    args.extend(SMALL);
    let res = teleport(&args);
    assert_eq!(res.status.code(), Some(1));
    assert!(!res.stderr.is_empty());
    // unknown flag value
    assert_eq!(
        teleport(&["run", "--topology", "star"]).status.code(),
        Some(1)
    );
    assert_eq!(teleport(&["run", "--eta", "fast"]).status.code(), Some(1));
}

#[test]
fn all_diverged_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // L = n = 100, so η = 0.1 is far beyond the stability limit.
    let res = teleport(&[
        "run",
        "--algorithm",
        "dsgd",
        "--n",
        "100",
        "--d",
        "2",
        "--T",
        "500",
        "--topology",
        "complete",
        "--eta",
        "0.1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        res.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
}

#[test]
fn search_k_selects_a_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "search-k",
        "--eta",
        "0.01",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ];
    args.extend(SMALL);
    let res = teleport(&args);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary = read(dir.path(), "summary.csv");
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "search-k");
    assert!(["1", "2", "4", "8"].contains(&row[3]));
}

#[test]
fn rates_table() {
    let dir = tempfile::tempdir().unwrap();
    let res = teleport(&[
        "rates",
        "--n",
        "64",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let text = read(dir.path(), "rates.csv");
    assert!(text.starts_with("method,topology,n,k,gap,term1,term2,term3,total\n"));
    assert!(text.lines().any(|l| l.starts_with("teleport,ring,64,")));
    assert!(text.lines().any(|l| l.starts_with("dsgd,torus,64,64,")));
}
