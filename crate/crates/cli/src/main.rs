use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridseason::report::{self, PipelineConfig, PipelineManifest};
use gridseason::scan::{Approach, Mode};
use gridseason::synthetic::series_to_csv;
use gridseason::{Error, ErrorKind, Execution};
use log::info;

#[derive(Parser, Debug)]
#[command(name = "gridseason", version, about = "Seasonal wind and load profiles driving bus voltage-violation scans")]
struct Cli {
    /// TOML configuration, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for wind selections and the synthetic generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the seasonal normative-day wind profiles.
    BuildWind(WindArgs),
    /// Check held-out years against the stored wind envelopes.
    ValidateWind(WindArgs),
    /// Compose the seasonal system-load curves.
    BuildLoad(LoadArgs),
    /// Dispatch, scan wind placements and rank buses.
    Scan(ScanArgs),
    /// Verify the manifest and write a Markdown summary.
    Report,
    /// Write seeded synthetic power and speed CSVs.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct WindArgs {
    /// Half-hourly power CSV (`timestamp,value`).
    #[arg(long)]
    power: Option<PathBuf>,
    /// Half-hourly speed CSV.
    #[arg(long)]
    speed: Option<PathBuf>,
    /// Training years, e.g. 2007-2011.
    #[arg(long, value_parser = parse_years)]
    train: Option<(i32, i32)>,
    /// Test years, e.g. 2012-2015.
    #[arg(long, value_parser = parse_years)]
    test: Option<(i32, i32)>,
}

#[derive(Args, Debug)]
struct LoadArgs {
    #[arg(long)]
    demand: Option<PathBuf>,
    /// Shape CSV; repeat to merge several files.
    #[arg(long)]
    shapes: Vec<PathBuf>,
    #[arg(long)]
    ratios: Option<PathBuf>,
    #[arg(long, value_parser = parse_years)]
    train: Option<(i32, i32)>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ApproachArg {
    Focused,
    Independent,
    Both,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// MATPOWER or JSON network case.
    #[arg(long)]
    case: Option<PathBuf>,
    #[arg(long)]
    selections: Option<usize>,
    /// Target wind share of capacity (0 disables wind).
    #[arg(long)]
    penetration: Option<f64>,
    #[arg(long, value_enum)]
    approach: Option<ApproachArg>,
    /// Comma-separated modes: mean,min,max.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<Mode>>,
    #[arg(long)]
    pf_tol: Option<f64>,
    #[arg(long)]
    pf_max_iter: Option<usize>,
    /// Run scan cells on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_parser = parse_years, default_value = "2007-2015")]
    years: (i32, i32),
}

fn parse_years(s: &str) -> std::result::Result<(i32, i32), String> {
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let a: i32 = a.trim().parse().map_err(|_| format!("bad year '{a}'"))?;
    let b: i32 = b.trim().parse().map_err(|_| format!("bad year '{b}'"))?;
    Ok((a, b))
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let Some(p) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    })?;
    if p.extension().is_some_and(|e| e == "json") {
        // re-run from a manifest snapshot
        let m: PipelineManifest = serde_json::from_str(&text).map_err(|e| Error::Structure(format!("{}: {e}", p.display())))?;
        return serde_json::from_value(m.config)
            .map_err(|e| Error::Structure(format!("{}: config snapshot: {e}", p.display())).into());
    }
    toml::from_str(&text).map_err(|e| Error::Structure(format!("{}: {e}", p.display())).into())
}

fn apply_wind(cfg: &mut PipelineConfig, a: WindArgs) {
    if a.power.is_some() {
        cfg.wind.power = a.power;
    }
    if a.speed.is_some() {
        cfg.wind.speed = a.speed;
    }
    if let Some(t) = a.train {
        cfg.wind.training_years = t;
    }
    if let Some(t) = a.test {
        cfg.wind.test_years = t;
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.as_path();
    match cli.command {
        Command::BuildWind(a) => {
            apply_wind(&mut cfg, a);
            let r = report::build_wind(&cfg, out)?;
            for p in &r.profiles {
                println!("{}: {} days, envelope width {:.3}", p.season, p.n_days, p.mean_envelope_width());
            }
        }
        Command::ValidateWind(a) => {
            apply_wind(&mut cfg, a);
            let r = report::validate_wind(&cfg, out)?;
            println!("season   tested  outliers  percent");
            for s in &r.summary {
                println!("{:<8} {:>6}  {:>8}  {:>6.2}", s.season.name(), s.tested, s.outliers, s.percentage);
            }
        }
        Command::BuildLoad(a) => {
            if a.demand.is_some() {
                cfg.load.demand = a.demand;
            }
            if !a.shapes.is_empty() {
                cfg.load.shapes = a.shapes;
            }
            if a.ratios.is_some() {
                cfg.load.ratios = a.ratios;
            }
            if let Some(t) = a.train {
                cfg.load.training_years = t;
            }
            let r = report::build_load(&cfg, out)?;
            for p in &r.seasonal {
                println!("{}: peak {:.0} MW at slot {}", p.period, p.peak_mw, p.peak_slot() + 1);
            }
        }
        Command::Scan(a) => {
            let s = &mut cfg.scan;
            if a.case.is_some() {
                s.case = a.case;
            }
            if let Some(n) = a.selections {
                s.selections = n;
            }
            if let Some(p) = a.penetration {
                s.penetration = p;
            }
            if let Some(ap) = a.approach {
                s.approaches = match ap {
                    ApproachArg::Focused => vec![Approach::SeasonFocused],
                    ApproachArg::Independent => vec![Approach::SeasonIndependent],
                    ApproachArg::Both => vec![Approach::SeasonFocused, Approach::SeasonIndependent],
                };
            }
            if let Some(m) = a.modes {
                s.modes = m;
            }
            if let Some(t) = a.pf_tol {
                s.pf.tolerance = t;
            }
            if let Some(n) = a.pf_max_iter {
                s.pf.max_iter = n;
            }
            if a.serial {
                cfg.execution = Execution::Serial;
            }
            let r = report::scan(&cfg, out)?;
            for (a, rep) in &r.reports {
                println!("{}: {} tallies, {} diverged", a.name(), rep.tallies.len(), rep.diverged());
            }
            if let Some(rank) = &r.ranking {
                let top: Vec<String> = rank.entries.iter().take(10).map(|e| e.bus.to_string()).collect();
                println!("most vulnerable: {}", if top.is_empty() { "none".into() } else { top.join(", ") });
            }
        }
        Command::Report => {
            let text = report::report(out)?;
            print!("{text}");
        }
        Command::Synth(a) => {
            let g = cfg.synth();
            let years = a.years.0..=a.years.1;
            for (name, series) in [("power.csv", g.power(years.clone())?), ("speed.csv", g.speed(years)?)] {
                let path = out.join(name);
                report::io::write_atomic(&path, series_to_csv(&series).as_bytes())?;
                info!("wrote {}", path.display());
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()).map(Error::kind) {
        Some(ErrorKind::Numerical) => 3,
        Some(ErrorKind::Integrity) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
