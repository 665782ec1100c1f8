use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use monofdr::cli_io::{analyze_values, bins_table, AnalysisConfig, Table};
use monofdr::simulation::{sample_scenario, ScenarioSpec};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_monofdr"));
    c.env_remove("MONOFDR_OUT_DIR");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_stats(dir: &Path, n: usize) -> (PathBuf, Vec<f64>) {
    let spec = ScenarioSpec {
        n,
        base_seed: 9,
        ..ScenarioSpec::normal_preset()
    };
    let (stats, _) = sample_scenario(&spec, 0);
    let mut text = String::from("id,stat\n");
    for (i, s) in stats.iter().enumerate() {
        text.push_str(&format!("g{i},{s:?}\n"));
    }
    let p = dir.join("stats.csv");
    std::fs::write(&p, text).unwrap();
    (p, stats)
}

fn analyze_args(input: &Path) -> Vec<String> {
    [
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--column",
        "stat",
        "--range=-6,8",
        "--width",
        "0.1",
        "--null-region=-1.3,1.7",
        "--alpha",
        "0.05,0.1,0.15",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn analyze_is_deterministic_and_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let (input, stats) = write_stats(tmp.path(), 5000);
    for out in ["a", "b"] {
        let o = run(bin().args(analyze_args(&input)).arg("--out-dir").arg(tmp.path().join(out)));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["bins.csv", "decisions.csv", "summary.txt", "fdr_plot.svg"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }

    // re-parsed CSV equals the in-memory table bit for bit
    let mut cfg = AnalysisConfig::default();
    for (k, v) in [("range", "-6,8"), ("width", "0.1"), ("null_region", "-1.3,1.7"), ("alpha", "0.05,0.1,0.15")] {
        cfg.set(k, v).unwrap();
    }
    let analysis = analyze_values(&stats, &cfg).unwrap();
    let file = Table::read(std::fs::File::open(tmp.path().join("a/bins.csv")).unwrap()).unwrap();
    let mem = bins_table(&analysis);
    assert_eq!(file, mem);
    let iso = file.column_f64("fdr_iso").unwrap();
    for (x, y) in iso.iter().zip(analysis.out.mono.fdr_iso()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }

    let dec = Table::read(std::fs::File::open(tmp.path().join("a/decisions.csv")).unwrap()).unwrap();
    assert_eq!(dec.rows.len(), stats.len());
    let rejected = dec.column("reject_local_0.1").unwrap().iter().filter(|v| **v == "1").count();
    assert_eq!(rejected, analysis.decisions[1].local_iso.u);
    let summary = std::fs::read_to_string(tmp.path().join("a/summary.txt")).unwrap();
    assert!(summary.contains("p0_hat = "));
    assert!(summary.contains(&format!("0.1,{},", analysis.decisions[1].local_iso.u)));
}

#[test]
fn out_dir_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let (input, _) = write_stats(tmp.path(), 3000);
    let cfg = tmp.path().join("settings.cfg");
    std::fs::write(
        &cfg,
        format!(
            "range = -6,8\nwidth = 0.1\nnull_region = -1.3,1.7\ncolumn = stat\nout_dir = {}\n",
            tmp.path().join("from_config").display()
        ),
    )
    .unwrap();
    let base = |c: &mut Command| {
        c.args(["analyze", "--input"]).arg(&input).arg("--config").arg(&cfg);
    };

    let mut c = bin();
    base(&mut c);
    assert!(run(&mut c).status.success());
    assert!(tmp.path().join("from_config/bins.csv").exists());

    let mut c = bin();
    base(&mut c);
    c.env("MONOFDR_OUT_DIR", tmp.path().join("from_env"));
    assert!(run(&mut c).status.success());
    assert!(tmp.path().join("from_env/bins.csv").exists());

    let mut c = bin();
    base(&mut c);
    c.env("MONOFDR_OUT_DIR", tmp.path().join("from_env2"));
    c.arg("--out-dir").arg(tmp.path().join("from_flag"));
    assert!(run(&mut c).status.success());
    assert!(tmp.path().join("from_flag/bins.csv").exists());
    assert!(!tmp.path().join("from_env2").exists());
}

#[test]
fn config_violations_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let (input, _) = write_stats(tmp.path(), 500);
    let o = run(bin()
        .args(["analyze", "--input"])
        .arg(&input)
        .args(["--range=-1,1", "--column", "stat"])
        .arg("--out-dir")
        .arg(tmp.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("null region"));

    let o = run(bin()
        .args(["analyze", "--input"])
        .arg(&input)
        .args(["--range=-6,8", "--column", "stat", "--alpha", "0.05,1.5"])
        .arg("--out-dir")
        .arg(tmp.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("bins.csv").exists());
}

#[test]
fn failed_fit_exits_nonzero_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("few.csv");
    std::fs::write(&p, "t\n5\n6\n7\n").unwrap();
    let out = tmp.path().join("out");
    let o = run(bin().args(["analyze", "--input"]).arg(&p).args(["--range=-6,8"]).arg("--out-dir").arg(&out));
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!out.join("bins.csv").exists());
}

#[test]
fn transform_zeros_and_bad_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("t.csv");
    std::fs::write(&p, "t\n0\n0\n0\n").unwrap();
    let out = tmp.path().join("z.csv");
    let o = run(bin().args(["transform", "--df", "36", "--input"]).arg(&p).arg("--output").arg(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let z = Table::read(std::fs::File::open(&out).unwrap()).unwrap().column_f64("z").unwrap();
    assert_eq!(z.len(), 3);
    assert!(z.iter().all(|v| v.abs() < 1e-12));

    std::fs::write(&p, "t\n0.5\n1.5\noops\n").unwrap();
    let o = run(bin().args(["transform", "--df", "36", "--input"]).arg(&p).arg("--output").arg(&out));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));

    std::fs::write(&p, "t\n1\n").unwrap();
    let o = run(bin().args(["transform", "--df", "0", "--input"]).arg(&p).arg("--output").arg(&out));
    assert!(!o.status.success());
}

#[test]
fn transform_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("t.csv");
    let ts = [-4.0, -1.0, 0.25, 2.0, 9.0, 40.0];
    let mut text = String::from("t\n");
    for t in ts {
        text.push_str(&format!("{t}\n"));
    }
    std::fs::write(&p, text).unwrap();
    let out = tmp.path().join("z.csv");
    let o = run(bin().args(["transform", "--df", "34", "--input"]).arg(&p).arg("--output").arg(&out));
    assert!(o.status.success());
    assert!(stderr(&o).contains("1 clamped"), "{}", stderr(&o));
    let z = Table::read(std::fs::File::open(&out).unwrap()).unwrap().column_f64("z").unwrap();
    let df = monofdr::Dof::new(34.0).unwrap();
    for (t, zv) in ts.iter().zip(&z) {
        let want = monofdr::stats_numerics::z_transform(*t, df);
        assert_eq!(zv.to_bits(), want.to_bits());
    }
}

#[test]
fn simulate_single_rep_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["x", "y"] {
        let o = run(bin()
            .args(["simulate", "--preset", "normal-sec4", "--reps", "1", "--n", "3000"])
            .arg("--out-dir")
            .arg(tmp.path().join(out)));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["study_summary.csv", "study_errors.csv", "study_reps.csv", "study_meta.txt", "fdr_plot.svg"] {
        assert_eq!(
            std::fs::read(tmp.path().join("x").join(f)).unwrap(),
            std::fs::read(tmp.path().join("y").join(f)).unwrap()
        );
    }
    let t = Table::read(std::fs::File::open(tmp.path().join("x/study_summary.csv")).unwrap()).unwrap();
    // one replication: the band collapses onto the curve
    let lo = t.column_f64("band_lo_iso").unwrap();
    let hi = t.column_f64("band_hi_iso").unwrap();
    let mean = t.column_f64("mean_fdr_iso").unwrap();
    for k in 0..lo.len() {
        assert_eq!(lo[k], hi[k]);
        assert_eq!(lo[k], mean[k]);
    }
    let meta = std::fs::read_to_string(tmp.path().join("x/study_meta.txt")).unwrap();
    assert!(meta.contains("p0 = 0.9"));
    assert!(meta.contains("fitting_interval = -1.3,1.7"));
    assert!(meta.contains("band_scale = natural"));
}

#[test]
fn simulate_from_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("study.cfg");
    std::fs::write(&cfg, "preset = chisq-sec4\nreps = 2\nn = 2000\nalpha = 0.1\n").unwrap();
    let o = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out-dir").arg(tmp.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = std::fs::read_to_string(tmp.path().join("study_meta.txt")).unwrap();
    assert!(meta.contains("scenario = chisq"));
    assert!(meta.contains("fitting_interval = 0,4"));
    assert!(meta.contains("reps = 2"));
    let errs = Table::read(std::fs::File::open(tmp.path().join("study_errors.csv")).unwrap()).unwrap();
    assert_eq!(errs.rows.len(), 3);
    assert!(tmp.path().join("tail_fdr_plot.svg").exists());
}
