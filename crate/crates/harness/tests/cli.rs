use std::path::Path;
use std::process::{Command, Output};

use clv_harness::output::without_wall_clock;

fn clv(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_clv"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("CLV_THREADS", n),
        None => cmd.env_remove("CLV_THREADS"),
    };
    cmd.output().expect("clv runs")
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn config(name: &str) -> String {
    configs().join(format!("{name}.json")).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_exits_zero() {
    let o = clv(&["run", "--list"], None);
    assert_eq!(o.status.code(), Some(0));
    for name in ["convergence", "admissibility_scaling", "lyapunov_spectrum", "ginelli_run"] {
        assert!(stdout(&o).contains(name));
    }
}

#[test]
fn malformed_config_exits_two_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"experiment": "ginelli_run", "cocycle": {"kind": "rotating", "lambda1": 0.5, "lambda2": -0.5}, "ginelli": {"t1": 30, "t2": 30, "ortho": 2}}"#).unwrap();
    let o = clv(&["run", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ortho"), "{}", stderr(&o));

    std::fs::write(&bad, r#"{"experiment": "ginelli_run", "cocycle": {"kind": "rotating", "lambda1": 0.5, "lambda2": -0.5}, "ginelli": {"t1": 30, "t2": 0}}"#).unwrap();
    let o = clv(&["run", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ginelli.t2"), "{}", stderr(&o));

    std::fs::write(&bad, r#"{"experiment": "nosuch"}"#).unwrap();
    let o = clv(&["run", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("convergence"), "registry is listed: {}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(clv(&["verify", "nosuch"], None).status.code(), Some(2));
    assert_eq!(clv(&["verify", "ginelli", "--cocycle", "nosuch"], None).status.code(), Some(2));
    assert_eq!(clv(&["run"], None).status.code(), Some(2));
    assert_eq!(clv(&["run", "/nonexistent/config.json"], None).status.code(), Some(2));
    assert_eq!(clv(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.json");
    // Runtimes far too short for this tolerance.
    std::fs::write(&cfg, r#"{"experiment": "ginelli_run", "cocycle": {"kind": "rotating", "lambda1": 0.5, "lambda2": -0.5}, "ginelli": {"t1": 2, "t2": 2}, "tolerance": 1e-12}"#).unwrap();
    let out = dir.path().join("strict");
    let o = clv(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL distance_at_origin"));
}

#[test]
fn verify_prints_pass_lines() {
    let o = clv(&["verify", "ginelli", "--cocycle", "diagonal"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
    assert!(stdout(&o).contains("diagonal/rate_bound"));
    let o = clv(&["verify", "subspace_geometry"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn outputs_are_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["diag_convergence", "admissibility_scaling", "rotating_run"] {
        for format in ["csv", "json"] {
            let mut texts = Vec::new();
            for (k, threads) in [None, Some("0"), Some("3")].into_iter().enumerate() {
                let prefix = dir.path().join(format!("{name}_{k}"));
                let o = clv(&["run", &config(name), "--out", prefix.to_str().unwrap(), "--format", format], threads);
                assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
                let read = |suffix: &str| {
                    let path = format!("{}_{suffix}.{format}", prefix.display());
                    without_wall_clock(&std::fs::read_to_string(path).unwrap())
                };
                texts.push((read("table"), read("series")));
            }
            assert!(texts.windows(2).all(|w| w[0] == w[1]), "{name} {format} differs");
        }
    }
}

#[test]
fn seed_override_changes_hash_and_results() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    clv(&["run", &config("rotating_run"), "--out", a.to_str().unwrap()], None);
    clv(&["run", &config("rotating_run"), "--out", b.to_str().unwrap(), "--seed", "7"], None);
    let ta = std::fs::read_to_string(format!("{}_table.csv", a.display())).unwrap();
    let tb = std::fs::read_to_string(format!("{}_table.csv", b.display())).unwrap();
    let hash = |t: &str| t.lines().find(|l| l.starts_with("# config_hash")).unwrap().to_string();
    assert_ne!(hash(&ta), hash(&tb));
    assert!(tb.contains("# seed: 7"));
}

/// Column headers are versioned; a change here needs a schema version bump.
#[test]
fn golden_schema_headers() {
    let golden = [
        (
            "diag_convergence",
            "block,dim,fitted_rate,expected_rate,fit_residual,window_start,window_end,saturated,restriction_rate",
            "t1,t2,time,block,distance,log_distance,success_fraction",
        ),
        ("admissibility_scaling", "delta,fraction,envelope,under_envelope,samples", "delta,log_delta,fraction,log_fraction"),
        ("rotating_run", "time,block,dim,distance,exponent", "time,block,distance,log_distance"),
        ("lorenz_spectrum", "index,estimate,analytic,abs_error,group", "time,index,estimate"),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (name, table, series) in golden {
        let prefix = dir.path().join(name);
        let o = clv(&["run", &config(name), "--out", prefix.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        for (suffix, expected) in [("table", table), ("series", series)] {
            let text = std::fs::read_to_string(format!("{}_{suffix}.csv", prefix.display())).unwrap();
            let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
            assert_eq!(header, expected, "{name} {suffix}");
            assert!(text.contains("# schema_version: 1"));
        }
    }
}
