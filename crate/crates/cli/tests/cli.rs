use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gridseason"));
    c.env("RUST_LOG", "error");
    c
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin().arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = run(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SCAN: &[&str] = &["scan", "--approach", "both", "--selections", "3", "--seed", "7"];

/// Runs every stage once into a shared directory.
fn pipeline() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let d = tempfile::tempdir().unwrap();
        let out = d.path();
        ok(out, &["build-wind"]);
        ok(out, &["validate-wind"]);
        ok(out, &["build-load"]);
        ok(out, SCAN);
        d
    })
    .path()
}

fn copy_dir(from: &Path, to: &Path) {
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dst = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            fs::create_dir_all(&dst).unwrap();
            copy_dir(&e.path(), &dst);
        } else {
            fs::copy(e.path(), dst).unwrap();
        }
    }
}

fn files(dir: &Path, prefix: &str, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let n = p.file_name().unwrap().to_string_lossy();
            n.starts_with(prefix) && n.ends_with(ext)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn build_wind_writes_profiles_and_plot_tables() {
    let wind = pipeline().join("wind");
    assert_eq!(files(&wind, "profile_", ".json").len(), 4);
    let plots = files(&wind, "fig", ".csv");
    assert_eq!(plots.len(), 5);
    let fig1 = fs::read_to_string(wind.join("fig1_summer.csv")).unwrap();
    assert_eq!(fig1.lines().next(), Some("slot,normp,lower,upper"));
    assert_eq!(fig1.lines().count(), 49);
    let fig2 = fs::read_to_string(wind.join("fig2_actual_mean.csv")).unwrap();
    assert_eq!(fig2.lines().next(), Some("slot,winter,spring,summer,fall"));
}

#[test]
fn validation_summary_has_one_row_per_season() {
    let s = fs::read_to_string(pipeline().join("wind/outlier_summary.csv")).unwrap();
    let rows: Vec<&str> = s.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let pct: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(pct <= 10.0, "{r}");
    }
}

#[test]
fn load_profiles_peak_at_100() {
    let load = pipeline().join("load");
    assert_eq!(files(&load, "profile_", ".json").len(), 5);
    let fig3 = fs::read_to_string(load.join("fig3_percent.csv")).unwrap();
    for col in 1..=4 {
        let max = fig3
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(col).unwrap().parse::<f64>().unwrap())
            .fold(f64::MIN, f64::max);
        assert_eq!(max, 100.0);
    }
}

#[test]
fn scan_outputs_and_ranking_order() {
    let scan = pipeline().join("scan");
    for f in [
        "report_season-focused.csv",
        "report_season-independent.csv",
        "ranking.csv",
        "comparison.csv",
        "fig5_annual_violations.csv",
    ] {
        assert!(scan.join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(scan.join("report_season-focused.csv")).unwrap();
    assert_eq!(report.lines().next(), Some("bus,season,criterion,mode,count,total,fraction"));
    let ranking = fs::read_to_string(scan.join("ranking.csv")).unwrap();
    assert_eq!(ranking.lines().next(), Some("rank,bus,wv,alpha1,pv1,alpha2,pv2,group"));
    let both: Vec<f64> = ranking
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",both"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(both.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn rerun_is_byte_identical() {
    let base = pipeline();
    let d = tempfile::tempdir().unwrap();
    copy_dir(base, d.path());
    ok(d.path(), &[SCAN, &["--serial"]].concat());
    for f in ["report_season-focused.csv", "report_season-focused.json", "ranking.csv", "comparison.csv"] {
        let a = fs::read(base.join("scan").join(f)).unwrap();
        let b = fs::read(d.path().join("scan").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn report_renders_season_table() {
    let d = tempfile::tempdir().unwrap();
    copy_dir(pipeline(), d.path());
    let text = ok(d.path(), &["report"]);
    assert!(text.contains("| Bus | Winter | Spring | Summer | Fall | Total |"));
    assert!(d.path().join("summary.md").exists());
}

#[test]
fn tampered_output_exits_with_integrity_code() {
    let d = tempfile::tempdir().unwrap();
    copy_dir(pipeline(), d.path());
    let p = d.path().join("scan/ranking.csv");
    let mut s = fs::read_to_string(&p).unwrap();
    s.push_str("0,0,0,,0,,0,both\n");
    fs::write(&p, s).unwrap();
    let o = run(d.path(), &["report"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    // a stale profile stops the scan before it runs
    let p = d.path().join("wind/profile_winter.json");
    fs::write(&p, fs::read_to_string(&p).unwrap().replace("\"winter\"", "\"winter\" ")).unwrap();
    assert_eq!(code(&run(d.path(), SCAN)), 4);
}

#[test]
fn scan_without_profiles_is_an_input_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), SCAN);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("scan"));
}

#[test]
fn starved_solver_is_a_numerical_failure() {
    let d = tempfile::tempdir().unwrap();
    copy_dir(pipeline(), d.path());
    let o = run(d.path(), &["scan", "--pf-max-iter", "1"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_industrial_shapes_name_the_sector() {
    let d = tempfile::tempdir().unwrap();
    let bundled = include_str!("../../core/data/shapes.csv");
    let partial: String = bundled
        .lines()
        .filter(|l| !l.starts_with("industrial"))
        .map(|l| format!("{l}\n"))
        .collect();
    let shapes = d.path().join("shapes.csv");
    fs::write(&shapes, partial).unwrap();
    let o = run(d.path(), &["build-load", "--shapes", shapes.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("industrial"));
}

#[test]
fn config_file_and_manifest_rerun() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    fs::write(&cfg, "seed = 11\n[load]\ntraining_years = [2008, 2010]\n").unwrap();
    let out = d.path().join("a");
    let o = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "build-load"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 11"));

    // the manifest alone reproduces the stage
    let again = d.path().join("b");
    let o = bin()
        .args(["--config", out.join("manifest.json").to_str().unwrap(), "--out", again.to_str().unwrap(), "build-load"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(
        fs::read(out.join("load/profile_winter.json")).unwrap(),
        fs::read(again.join("load/profile_winter.json")).unwrap()
    );

    fs::write(&cfg, "[load]\nbogus = 1\n").unwrap();
    let o = bin().args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "build-load"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn synth_writes_parseable_series() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["synth", "--years", "2009-2010"]);
    let text = fs::read_to_string(d.path().join("power.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("timestamp,value"));
    assert_eq!(text.lines().count(), 1 + 2 * 365 * 48);
    // and build-wind accepts it
    let o = run(d.path(), &["build-wind", "--power", d.path().join("power.csv").to_str().unwrap(), "--train", "2009-2010"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
