//! stratcheck: scenario-driven checks of stratification-regularity
//! conditions on graph-stratified sets.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use stratcheck_cli::report::{write_all, Format};
use stratcheck_cli::runner;
use stratcheck_cli::scenario::{self, CheckKind, Scenario, ScenarioFile, SetSpec};

#[derive(Parser)]
#[command(name = "stratcheck", version, about)]
struct Cli {
    /// Output directory for reports and CSV tables.
    #[arg(long, global = true, default_value = "stratcheck-out")]
    out: PathBuf,
    /// Monte Carlo seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Convergence tolerance override for limit classification.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Monte Carlo sample count override.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Worker threads (default: all cores; STRATCHECK_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report formats to write.
    #[arg(long, global = true, value_parser = ["md", "json", "csv"])]
    format: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (JSON).
    Run { scenario: PathBuf },
    /// Regularity condition verdicts on a catalog set.
    Check {
        #[arg(long)]
        set: String,
        /// Comma-separated conditions (a, bpi, b, r, w, re(0.5), rint).
        #[arg(long, default_value = "a,b,r")]
        conditions: String,
    },
    /// Cone fiber dimensions, (n) and (npf) over a base grid.
    Cone {
        #[arg(long)]
        set: String,
        /// Comma-separated base x-coordinates.
        #[arg(long, default_value = "0,0.1,0.3")]
        grid: String,
    },
    /// Density profile along the base stratum.
    Density {
        #[arg(long)]
        set: String,
        /// Stratum to measure (defaults to the first pair's Y).
        #[arg(long)]
        stratum: Option<String>,
        /// Comma-separated base x-coordinates.
        #[arg(long, default_value = "0")]
        at: String,
    },
    /// Codimension-one slice {y = a z}: solved curve and its (b) verdict.
    Slice {
        #[arg(long)]
        set: String,
        #[arg(long)]
        a: f64,
    },
    /// Full bundle on a catalog set: conditions, cones, density.
    Report {
        #[arg(long)]
        set: String,
    },
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad {what} `{p}`: {e}")))
        .collect()
}

fn base_scenario(set: &str) -> Result<Scenario, String> {
    let file = ScenarioFile {
        set: SetSpec::Catalog(set.to_string()),
        pairs: vec![],
        basepoints: vec![],
        conditions: vec![],
        family: None,
        tolerances: None,
        density: None,
        expect: Default::default(),
    };
    scenario::resolve(file).map_err(|e| e.to_string())
}

fn apply_overrides(sc: &mut Scenario, cli: &Cli) {
    if let Some(seed) = cli.seed {
        sc.density_seed = seed;
    }
    if let Some(samples) = cli.samples {
        sc.density_samples = samples;
    }
    if let Some(tol) = cli.tol {
        sc.tolerances.limit.converge_tol = tol;
    }
    // one-sided probe families for Sf: its defining formula is odd in x and
    // cancels catastrophically for x < 0 at extended range
    if sc.set.name == "Sf" {
        sc.family.mirror = false;
    }
}

fn formats(cli: &Cli) -> Vec<Format> {
    if cli.format.is_empty() {
        return vec![Format::Md, Format::Json, Format::Csv];
    }
    cli.format
        .iter()
        .map(|f| match f.as_str() {
            "md" => Format::Md,
            "json" => Format::Json,
            _ => Format::Csv,
        })
        .collect()
}

fn finish(report: &runner::Report, cli: &Cli, had_expectations: bool) -> ExitCode {
    match write_all(report, &cli.out, &formats(cli)) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error writing reports: {e}");
            return ExitCode::from(2);
        }
    }
    println!("{}", stratcheck_cli::report::render_markdown(report));
    if report.has_errors() {
        return ExitCode::from(1);
    }
    if had_expectations && !report.all_expectations_met() {
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("STRATCHECK_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("warning: thread pool already initialized");
        }
    }

    match &cli.command {
        Command::Run { scenario: path } => {
            let sc = match scenario::load(path) {
                Ok(mut sc) => {
                    apply_overrides(&mut sc, &cli);
                    sc
                }
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            let had_expect = !sc.expect.is_empty();
            let report = runner::run(&sc);
            finish(&report, &cli, had_expect)
        }
        Command::Check { set, conditions } => {
            let mut sc = match base_scenario(set) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            apply_overrides(&mut sc, &cli);
            let mut kinds = Vec::new();
            for c in conditions.split(',') {
                match CheckKind::parse_name(c.trim()) {
                    Some(k) => kinds.push(k),
                    None => {
                        eprintln!("unknown condition `{c}`");
                        return ExitCode::from(2);
                    }
                }
            }
            sc.conditions = kinds;
            let report = runner::run(&sc);
            finish(&report, &cli, false)
        }
        Command::Cone { set, grid } => {
            let mut sc = match base_scenario(set) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            apply_overrides(&mut sc, &cli);
            let grid = match parse_f64_list(grid, "grid value") {
                Ok(g) => g,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            sc.basepoints = grid.iter().map(|&x| {
                let mut b = vec![0.0; sc.set.ambient_dim];
                b[0] = x;
                b
            }).collect();
            sc.conditions = vec![CheckKind::N, CheckKind::Npf, CheckKind::C1];
            let report = runner::run(&sc);
            match runner::cone_dimensions(&sc, &grid) {
                Ok(dims) => {
                    let v: Vec<String> = dims
                        .iter()
                        .map(|(x, d)| {
                            format!("{x}:{}", d.map(|d| d.to_string()).unwrap_or("?".into()))
                        })
                        .collect();
                    println!("fiber dimensions: ({})", v.join(", "));
                }
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(1);
                }
            }
            finish(&report, &cli, false)
        }
        Command::Density { set, stratum, at } => {
            let mut sc = match base_scenario(set) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            apply_overrides(&mut sc, &cli);
            if let Some(s) = stratum {
                if sc.set.stratum(s).is_err() {
                    eprintln!("unknown stratum `{s}` in set `{set}`");
                    return ExitCode::from(2);
                }
                sc.density_stratum = Some(s.clone());
            }
            let xs = match parse_f64_list(at, "grid value") {
                Ok(g) => g,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            sc.basepoints = xs.iter().map(|&x| {
                let mut b = vec![0.0; sc.set.ambient_dim];
                b[0] = x;
                b
            }).collect();
            sc.conditions = vec![CheckKind::Density];
            let report = runner::run(&sc);
            finish(&report, &cli, false)
        }
        Command::Slice { set, a } => {
            let mut sc = match base_scenario(set) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            apply_overrides(&mut sc, &cli);
            match runner::slice_check(&sc, *a) {
                Ok((outcome, detail)) => {
                    println!("sliced (b) at y = {a}z: {outcome} ({detail})");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Report { set } => {
            let mut sc = match base_scenario(set) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            apply_overrides(&mut sc, &cli);
            sc.basepoints = [-0.3, -0.1, 0.0, 0.1, 0.3]
                .iter()
                .map(|&x| {
                    let mut b = vec![0.0; sc.set.ambient_dim];
                    b[0] = x;
                    b
                })
                .collect();
            sc.conditions = vec![
                CheckKind::Condition(stratcheck_core::regularity::Condition::A),
                CheckKind::Condition(stratcheck_core::regularity::Condition::BPi),
                CheckKind::Condition(stratcheck_core::regularity::Condition::B),
                CheckKind::Condition(stratcheck_core::regularity::Condition::R),
                CheckKind::Condition(stratcheck_core::regularity::Condition::W),
                CheckKind::Condition(stratcheck_core::regularity::Condition::RInt),
                CheckKind::N,
                CheckKind::Npf,
                CheckKind::C1,
                CheckKind::Density,
            ];
            let report = runner::run(&sc);
            finish(&report, &cli, false)
        }
    }
}
