use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zoll_cli::commands::{
    cmd_deform, cmd_funk, cmd_kernel, cmd_killing, cmd_spectrum, cmd_verify, killing_preset, load_killing_config,
    Outcome,
};
use zoll_cli::config::{config_preset, RunConfig};
use zoll_cli::error::{CliError, CliResult};

/// Conformal Zoll deformations of the round sphere and Killing-tensor
/// metrics with minimal equators.
///
/// Exit codes: 0 ok, 1 numerical failure or failed check, 2 usage or file
/// format error.
#[derive(Parser)]
#[command(name = "zoll", version)]
struct Cli {
    /// Worker threads for per-equator work; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Deform the round metric along an odd direction ρ̇ and solve for a Zoll family.
    /// Writes trace.csv, state.json, state_normalized.json, deform.json.
    Deform {
        /// Flat JSON config (schema "zoll.config/1").
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<String>,
        /// Named config: guillemin-xyz.
        #[arg(long)]
        preset: Option<String>,
        /// Override the deformation parameter.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
    },
    /// Re-verify a state file at refined chart resolution. Writes report.json.
    Verify {
        state: String,
        /// Chart nodes for the re-quadrature (default 2Q).
        #[arg(long)]
        chart_nodes: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Funk transform of a field (schema "zoll.field/1") at every grid representative. Writes funk.csv.
    Funk {
        field: String,
        /// State to transform over (default: round equators).
        #[arg(long)]
        state: Option<String>,
    },
    /// Kernel of ℱ*ℱ on S² as i,j,value. Writes kernel.csv, kernel.json.
    Kernel {
        #[arg(long)]
        state: Option<String>,
        /// Band limit of the operator (default L).
        #[arg(long)]
        band: Option<usize>,
    },
    /// Metric with minimal equators from a Killing tensor on S³. Writes killing.json.
    Killing {
        /// JSON config (schema "zoll.killing-config/1").
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<String>,
        /// Named tensor: eqdiagonal.
        #[arg(long)]
        preset: Option<String>,
        /// Also write the sampled metric to metric.csv.
        #[arg(long)]
        metric_csv: bool,
    },
    /// Round Funk eigenvalues by degree. Writes spectrum.json.
    Spectrum {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        lmax: usize,
    },
}

fn run(cli: Cli) -> CliResult<(Outcome, Option<PathBuf>)> {
    let threads = cli.threads;
    if threads == 0 {
        return Err(CliError::usage("--threads must be at least 1"));
    }
    let mut out_dir = cli.out;
    let outcome = match cli.cmd {
        Cmd::Deform { config, preset, t } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => RunConfig::load(&path)?,
                (None, Some(name)) => config_preset(&name)?,
                (None, None) => return Err(CliError::usage("give --config or --preset")),
            };
            if let Some(t) = t {
                cfg.t = t;
            }
            if out_dir.is_none() {
                out_dir = cfg.out_dir.clone().map(PathBuf::from);
            }
            cmd_deform(&cfg, threads)?
        }
        Cmd::Verify { state, chart_nodes, tol } => cmd_verify(&state, chart_nodes, tol, threads)?,
        Cmd::Funk { field, state } => cmd_funk(&field, state.as_deref(), threads)?,
        Cmd::Kernel { state, band } => cmd_kernel(state.as_deref(), band, threads)?,
        Cmd::Killing {
            config,
            preset,
            metric_csv,
        } => {
            let cfg = match (config, preset) {
                (Some(path), _) => load_killing_config(&path)?,
                (None, Some(name)) => killing_preset(&name)?,
                (None, None) => return Err(CliError::usage("give --config or --preset")),
            };
            cmd_killing(&cfg, metric_csv)?
        }
        Cmd::Spectrum { n, lmax } => cmd_spectrum(n, lmax)?,
    };
    Ok((outcome, out_dir))
}

fn write_files(dir: &std::path::Path, outcome: &Outcome) -> CliResult<()> {
    let io = |p: &std::path::Path, source| CliError::Io {
        path: p.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for (name, body) in &outcome.files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| io(&p, e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(outcome, dir)| {
        write_files(&dir.unwrap_or_else(|| PathBuf::from(".")), &outcome)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("zoll: checks failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("zoll: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
