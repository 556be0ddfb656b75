use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn hygrosim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hygrosim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_bundled_scenarios() {
    let o = hygrosim(&["scenarios"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["wall_nonlinear", "one_zone_linear", "two_zone_nonlinear"] {
        assert!(text.contains(name), "{text}");
    }
    let o = hygrosim(&["scenarios", "one_zone_linear"]);
    assert!(stdout(&o).contains("[numerics]"));
}

#[test]
fn one_zone_df_covers_the_horizon() {
    let dir = out_dir("one_zone_df");
    let o = hygrosim(&["run", "one_zone_linear", "--scheme", "df", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("one_zone_linear.df.timeseries.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t_star,entity,kind,node_or_zone,x_star,u,v,T_K,P_v_Pa,phi");
    let zone_times: Vec<f64> = csv
        .lines()
        .filter(|l| l.contains(",room,zone,"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(zone_times.first(), Some(&0.0));
    assert!((zone_times.last().unwrap() - 80.0).abs() < 1e-9, "{:?}", zone_times.last());
    assert_eq!(zone_times.len(), 801);
}

#[test]
fn overrides_are_echoed_in_the_header() {
    let dir = out_dir("overrides");
    let o = hygrosim(&[
        "run",
        "one_zone_linear",
        "--dt-star",
        "1e-3",
        "--dx-star",
        "1e-2",
        "--horizon",
        "0.5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let header = stdout(&o);
    assert!(header.contains("scheme = df, dx* = 1e-2, dt* = 1e-3"), "{header}");
    assert!(header.contains("t_0 = 3600 s"), "{header}");
    assert!(header.contains("material 'north'"), "{header}");
    let report = fs::read_to_string(dir.join("one_zone_linear.df.report.txt")).unwrap();
    assert!(report.starts_with("# scenario one_zone_linear: scheme = df"));
    assert!(report.contains("# completed 500 steps"), "{report}");
}

#[test]
fn explicit_above_cfl_reports_divergence() {
    let dir = out_dir("explicit_divergence");
    let o = hygrosim(&[
        "run",
        "wall_nonlinear",
        "--scheme",
        "euler-explicit",
        "--dt-star",
        "1e-3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"), "{}", stderr(&o));
    let report = fs::read_to_string(dir.join("wall_nonlinear.euler-explicit.report.txt")).unwrap();
    assert!(report.contains("# FAILED"), "{report}");
    // The partial series holds at least the initial record.
    let csv = fs::read_to_string(dir.join("wall_nonlinear.euler-explicit.timeseries.csv")).unwrap();
    assert!(csv.lines().count() >= 3);
}

#[test]
fn schema_errors_exit_with_2() {
    let dir = out_dir("schema");
    fs::create_dir_all(&dir).unwrap();
    let empty = dir.join("empty.toml");
    fs::write(&empty, "").unwrap();
    let o = hygrosim(&["run", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let text = hygrosim(&["scenarios", "wall_nonlinear"]).stdout;
    let bad = String::from_utf8(text).unwrap().replace("material = \"load_bearing\"", "material = \"granite\"");
    let path = dir.join("bad.toml");
    fs::write(&path, bad).unwrap();
    let o = hygrosim(&["run", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("walls[0].material"), "{}", stderr(&o));
    assert!(stderr(&o).contains("granite"));

    let o = hygrosim(&["run", "one_zone_linear", "--scheme", "leapfrog"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cfl_reports_bounds_and_seconds() {
    let dir = out_dir("cfl");
    let o = hygrosim(&["cfl", "wall_nonlinear", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("slab: heat "), "{text}");
    assert!(text.contains("moisture "), "{text}");
    assert!(text.contains(" s)"), "{text}");
    assert!(dir.join("wall_nonlinear.cfl.txt").exists());
}

#[test]
fn bench_writes_one_row_per_scheme() {
    let dir = out_dir("bench");
    let o = hygrosim(&["bench", "one_zone_linear", "--horizon", "1", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("one_zone_linear.bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scheme,wall_clock_s,mean_subiters,max_subiters");
    assert!(lines[1].starts_with("df,"));
    assert!(lines[2].starts_with("euler-implicit,"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn study_writes_convergence_table() {
    let dir = out_dir("study");
    let o = hygrosim(&[
        "study",
        "one_zone_linear",
        "--scheme",
        "euler-implicit",
        "--horizon",
        "0.2",
        "--dt-list",
        "1e-2,1e-3,5e-4,1e-4",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("one_zone_linear.euler-implicit.study.csv")).unwrap();
    assert!(csv.starts_with("dt_star,scheme,eps_global,slope_region\n"));
    assert_eq!(csv.lines().count(), 5);
    assert!(stdout(&o).contains("slope"));

    let o = hygrosim(&["study", "one_zone_linear", "--dt-list", "1e-3,1e-4"]);
    assert_eq!(o.status.code(), Some(2), "too few time steps is a usage error");
}

#[test]
fn runs_are_bitwise_reproducible() {
    let a = out_dir("repro_a");
    let b = out_dir("repro_b");
    for dir in [&a, &b] {
        let o = hygrosim(&[
            "run",
            "two_zone_nonlinear",
            "--scheme",
            "euler-implicit",
            "--horizon",
            "0.3",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let name = "two_zone_nonlinear.euler-implicit.timeseries.csv";
    assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
}
