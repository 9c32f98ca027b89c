use clap::{Parser, Subcommand};
use minkowski_dual::cli_io::{
    dualize, run_checks, run_dual_flow, slice_oracle_report, solve_minkowski,
    write_diagnostics_jsonl, write_field_csv, CheckConfig, CliError, DualizeConfig, SolveConfig,
};
use minkowski_dual::curvfunc::CurvatureFunctionSpec;
use minkowski_dual::flow::PrescribedData;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "minkowski-dual",
    version,
    about = "Prescribed-curvature convex hypersurfaces in hyperbolic space via de Sitter duality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration document
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the JSON summary on stdout
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: dual flow, Gauss map back, primal verification
    Solve,
    /// Dual flow only
    Flow,
    /// Gauss map of a graph given as a field CSV
    Dualize,
    /// Verification suites
    Check,
    /// Closed-form radial answer for constant f
    SliceOracle {
        /// Constant value of f
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

fn need_config(cli: &Cli) -> Result<PathBuf, CliError> {
    cli.config
        .clone()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))
}

fn solve_config(cli: &Cli) -> Result<SolveConfig, CliError> {
    let mut cfg = SolveConfig::from_path(&need_config(cli)?)?;
    if let Some(o) = &cli.out {
        cfg.output_dir = Some(o.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn print(cli: &Cli, v: &impl Serialize) {
    if !cli.quiet {
        println!("{}", serde_json::to_string_pretty(v).expect("plain record"));
    }
}

#[derive(Serialize)]
struct FlowSummary {
    converged: bool,
    steps: usize,
    final_residual: f64,
    tau_min: f64,
    tau_max: f64,
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let converged = |c: bool| {
        if c {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(2)
        }
    };
    match &cli.command {
        Command::Solve => {
            let out = solve_minkowski(&solve_config(cli)?)?;
            print(cli, &out.report);
            Ok(converged(out.report.converged))
        }
        Command::Flow => {
            let cfg = solve_config(cli)?;
            let grid = cfg.validate()?;
            let r = run_dual_flow(&cfg, &grid)?;
            if let Some(d) = &cfg.output_dir {
                if cfg.emit.fields {
                    write_field_csv(&d.join("dual_u.csv"), &grid, &r.u)?;
                }
                if cfg.emit.diagnostics {
                    write_diagnostics_jsonl(&d.join("diagnostics.jsonl"), &r.history)?;
                }
            }
            let fold = |f: fn(f64, f64) -> f64, init| r.u.iter().cloned().fold(init, f);
            print(
                cli,
                &FlowSummary {
                    converged: r.converged,
                    steps: r.steps,
                    final_residual: r.final_residual,
                    tau_min: fold(f64::min, f64::INFINITY),
                    tau_max: fold(f64::max, f64::NEG_INFINITY),
                },
            );
            Ok(converged(r.converged))
        }
        Command::Dualize => {
            let mut cfg = DualizeConfig::from_path(&need_config(cli)?)?;
            if let Some(o) = &cli.out {
                cfg.output_dir = Some(o.clone());
            }
            let (report, _) = dualize(&cfg)?;
            print(cli, &report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let mut cfg = match &cli.config {
                Some(p) => CheckConfig::from_path(p)?,
                None => CheckConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let report = run_checks(&cfg);
            if let Some(d) = &cli.out {
                std::fs::create_dir_all(d).map_err(|e| CliError::Io {
                    path: d.clone(),
                    source: e,
                })?;
                let p = d.join("check.json");
                std::fs::write(
                    &p,
                    serde_json::to_string_pretty(&report).expect("plain record"),
                )
                .map_err(|e| CliError::Io { path: p, source: e })?;
            }
            print(cli, &report);
            Ok(if report.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::SliceOracle { c, n } => {
            let spec = match &cli.config {
                Some(p) => {
                    let cfg = SolveConfig::from_path(p)?;
                    if !matches!(cfg.f, PrescribedData::Constant { .. }) {
                        return Err(CliError::Config("slice-oracle needs a constant f".into()));
                    }
                    cfg.curvature
                }
                None => CurvatureFunctionSpec::hk(1),
            };
            print(cli, &slice_oracle_report(&spec, *n, *c)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
