//! Command line front end: configuration ingestion, scenario orchestration,
//! report and plot-data emission.
//!
//! Exit codes: 0 on success, 1 on verification failure, 2 on usage or
//! configuration errors.

use anosov_core::affine_flow::trace_orbit;
use anosov_core::birkhoff;
use anosov_core::config::RunConfig;
use anosov_core::geometry::Point3;
use anosov_core::hyperbolicity::{check_by_name, check_names, Check, SearchInput};
use anosov_core::report;
use anosov_core::sections;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DEFAULTS_HELP: &str = "\
Config file: `key = value` lines, `#` comments. Keys and defaults:
  lambda=0.5  n=1  m=-1  p=1  r1=0.4  r2=0.1  r1_init=r1
  ratio=0.25  budget=12  seed=20240  samples=10000  max_factors=9
  grid=256  mesh=200  tol_boundary=1e-12  n_max=4  m_max=1
Every key can be omitted; every value is validated before any computation.
Reports echo the configuration, so identical (config, seed) runs are
byte-identical.";

#[derive(Parser)]
#[command(name = "anosov", version, about = "Local surgery models and cone-field verification for flows near a surgered periodic orbit", after_long_help = DEFAULTS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Write the output here (atomically); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite at the configured radii.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated subset of checks to run (default: all).
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
    },
    /// Halve the radii at fixed ratio until the cone suite passes.
    Search {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate quadrant permutations, defects and intersections over a
    /// coprime (n, m) range.
    Combinatorics {
        #[command(flatten)]
        common: CommonArgs,
        /// Largest linking number (default from config n_max).
        #[arg(long)]
        n_max: Option<u32>,
        /// Largest |multiplicity| (default from config m_max).
        #[arg(long)]
        m_max: Option<u32>,
    },
    /// Sample one flow orbit as CSV rows (t, x, y, z, region).
    Trace {
        #[command(flatten)]
        common: CommonArgs,
        /// Start point as `x,y,z`.
        #[arg(long, default_value = "0.4,0.01,0.0")]
        start: String,
        #[arg(long, default_value_t = 8.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
    },
    /// Run the cat-map end-to-end scenario.
    Fixture {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {}", message);
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, String> {
    let mut config = match &common.config {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {}", path.display(), e))?;
            RunConfig::parse(&body).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(samples) = common.samples {
        config.samples = samples;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), String> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| format!("cannot write {}: {}", tmp.display(), e))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| format!("cannot rename into {}: {}", path.display(), e))?;
    Ok(())
}

fn emit(common: &CommonArgs, contents: &str) -> Result<(), String> {
    match &common.out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{}", contents);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Verify { common, checks } => cmd_verify(common, checks),
        Command::Search { common } => cmd_search(common),
        Command::Combinatorics { common, n_max, m_max } => {
            cmd_combinatorics(common, n_max, m_max)
        }
        Command::Trace { common, start, t_max, dt } => cmd_trace(common, start, t_max, dt),
        Command::Fixture { common } => cmd_fixture(common),
    }
}

fn selected_checks(names: &[String]) -> Result<Vec<Box<dyn Check>>, String> {
    if names.is_empty() {
        return Ok(anosov_core::hyperbolicity::builtin_checks());
    }
    names
        .iter()
        .map(|name| {
            check_by_name(name).ok_or_else(|| {
                format!("unknown check `{}`; available: {}", name, check_names().join(", "))
            })
        })
        .collect()
}

fn cmd_verify(common: CommonArgs, checks: Vec<String>) -> Result<ExitCode, String> {
    let config = load_config(&common)?;
    let params = config.params().map_err(|e| e.to_string())?;
    let selected = selected_checks(&checks)?;
    let names: Vec<String> = selected.iter().map(|c| c.name().to_string()).collect();
    let report = report::build_verify_report(&params, config.echo(names), &selected)
        .map_err(|e| e.to_string())?;
    match common.format {
        Format::Json => emit(&common, &report.to_json())?,
        Format::Csv => {
            // (t, log-growth) pairs of the sampled suite, for expansion fits.
            let constants = &report.constants;
            let (weak, _, _) = anosov_core::hyperbolicity::search::sample_suite_words(
                &params,
                constants.t1_bound.value,
                report.t_threshold,
                config.samples,
                config.max_factors,
                config.seed,
            )
            .map_err(|e| e.to_string())?;
            emit(&common, &report::growth_csv(&params, &weak))?;
        }
    }
    if report.violations() == 0 {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_search(common: CommonArgs) -> Result<ExitCode, String> {
    let config = load_config(&common)?;
    let input = SearchInput {
        lambda: config.lambda,
        n: config.n,
        m: config.m,
        p: config.p,
        ratio: config.ratio,
        r1_init: config.r1_init,
        budget: config.budget,
        samples: config.samples,
        max_factors: config.max_factors,
        seed: config.seed,
        grid: config.grid,
        mesh: config.mesh,
    };
    let report = anosov_core::hyperbolicity::parameter_search(&input).map_err(|e| e.to_string())?;
    match common.format {
        Format::Json => {
            let mut body = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            body.push('\n');
            emit(&common, &body)?;
        }
        Format::Csv => {
            let mut csv = String::from(
                "halvings,r1,r2,t1_bound,t0,conditions_ok,violations,feasible\n",
            );
            for h in &report.history {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    h.halvings, h.r1, h.r2, h.t1_bound, h.t0, h.conditions_ok, h.violations,
                    h.feasible
                ));
            }
            emit(&common, &csv)?;
        }
    }
    if report.feasible {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

#[derive(serde::Serialize)]
struct CombinatoricsRow {
    n: u32,
    m: i64,
    p: u32,
    shift: i64,
    inverse_residue: u64,
    order: u64,
    k_power: Option<u64>,
    holonomy_defect: i64,
    meridian_intersection: i64,
    longitude_intersection: i64,
    prongs: u32,
    embedded: bool,
}

fn cmd_combinatorics(
    common: CommonArgs,
    n_max: Option<u32>,
    m_max: Option<u32>,
) -> Result<ExitCode, String> {
    let config = load_config(&common)?;
    let n_max = n_max.unwrap_or(config.n_max);
    let m_max = m_max.unwrap_or(config.m_max) as i64;
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for m_abs in 1..=m_max {
            for m in [-m_abs, m_abs] {
                let data = birkhoff::BirkhoffBoundaryData { p: config.p, n, m };
                if !birkhoff::validate(&data).ok() {
                    continue;
                }
                let perm = birkhoff::quadrant_permutation(n, m).map_err(|e| e.to_string())?;
                let blow = birkhoff::blowdown_bookkeeping(std::slice::from_ref(&data));
                rows.push(CombinatoricsRow {
                    n,
                    m,
                    p: config.p,
                    shift: perm.shift,
                    inverse_residue: perm.l,
                    order: perm.order(),
                    k_power: birkhoff::kth_power_shift(n, m).ok(),
                    holonomy_defect: birkhoff::holonomy_defect(&data),
                    meridian_intersection: birkhoff::homological_intersection(1, 0, n, m),
                    longitude_intersection: birkhoff::homological_intersection(0, 1, n, m),
                    prongs: blow[0].prongs,
                    embedded: birkhoff::validate(&data).embedded,
                });
            }
        }
    }
    match common.format {
        Format::Json => {
            let mut body = serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?;
            body.push('\n');
            emit(&common, &body)?;
        }
        Format::Csv => {
            let mut csv = String::from(
                "n,m,p,shift,inverse_residue,order,k_power,holonomy_defect,meridian_intersection,longitude_intersection,prongs,embedded\n",
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.m,
                    r.p,
                    r.shift,
                    r.inverse_residue,
                    r.order,
                    r.k_power.map_or(String::from("-"), |k| k.to_string()),
                    r.holonomy_defect,
                    r.meridian_intersection,
                    r.longitude_intersection,
                    r.prongs,
                    r.embedded
                ));
            }
            emit(&common, &csv)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_trace(common: CommonArgs, start: String, t_max: f64, dt: f64) -> Result<ExitCode, String> {
    let config = load_config(&common)?;
    let params = config.params().map_err(|e| e.to_string())?;
    let parts: Vec<f64> = start
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("start must be `x,y,z`, got `{}`", start))?;
    if parts.len() != 3 {
        return Err(format!("start must have three components, got {}", parts.len()));
    }
    if !(t_max > 0.0 && dt > 0.0 && dt <= t_max) {
        return Err("need 0 < dt <= t_max".into());
    }
    let samples = trace_orbit(&params, &Point3::new(parts[0], parts[1], parts[2]), t_max, dt);
    match common.format {
        Format::Csv => emit(&common, &report::trace_csv(&samples))?,
        Format::Json => {
            // Bundle the region descriptor with the samples for plotting.
            #[derive(serde::Serialize)]
            struct TraceReport {
                region: anosov_core::geometry::CrossRegion,
                samples: Vec<anosov_core::affine_flow::TraceSample>,
            }
            let region =
                anosov_core::geometry::build_cross_region(&params).map_err(|e| e.to_string())?;
            let mut body = serde_json::to_string_pretty(&TraceReport { region, samples })
                .map_err(|e| e.to_string())?;
            body.push('\n');
            emit(&common, &body)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fixture(common: CommonArgs) -> Result<ExitCode, String> {
    let config = load_config(&common)?;
    let fixture =
        sections::catmap_fixture(config.samples, config.budget, config.seed, config.grid)
            .map_err(|e| e.to_string())?;
    match common.format {
        Format::Json => {
            let mut body = serde_json::to_string_pretty(&fixture).map_err(|e| e.to_string())?;
            body.push('\n');
            emit(&common, &body)?;
        }
        Format::Csv => {
            // Mesh of the helicoid bands at the feasible radii.
            let k = fixture
                .search
                .halvings_used
                .ok_or("fixture search found no feasible radii")?;
            let params = fixture.search.input.params_at(k).map_err(|e| e.to_string())?;
            let section = sections::build_helicoid(&params).map_err(|e| e.to_string())?;
            let rows = sections::band_mesh(&section, config.mesh.min(64));
            emit(&common, &report::mesh_csv(&rows))?;
        }
    }
    let ok = fixture.search.feasible
        && fixture.validation.ok()
        && fixture.transversality.is_some_and(|t| t.pass);
    if ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
