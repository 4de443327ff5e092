//! `isospec` — spectra, isomodulus scans, saturation certificates, and
//! bilinear control schedules on the circle and compact metric graphs.
//!
//! Exit codes: 0 success; 2 validation failure (bad flags, unparsable
//! inputs, unknown domains); 3 numerical-acceptance failure (the run
//! completed but breached a monitored invariant).

use isospec_cli::commands;

use clap::{Parser, Subcommand};
use isospec_cli::commands::NumericalFailure;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "isospec", version, about = "Schrödinger spectra, isomodulus eigenfunctions, and bilinear control synthesis on metric graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a spectrum and write (index, λ, cluster, residual) CSV.
    Spectrum {
        /// Domain: eight | three-branch | circle:LENGTH | graph.json
        #[arg(long)]
        domain: String,
        /// Potential: none | remark38:j=N | trig text (edges split by ';')
        #[arg(long)]
        potential: Option<String>,
        /// Number of modes.
        #[arg(long, default_value_t = 12)]
        modes: usize,
        /// Grid nodes per edge.
        #[arg(long, default_value_t = 512)]
        nodes: usize,
        /// Force the analytic (secular) or numeric (finite-difference) path.
        #[arg(long)]
        method: Option<String>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write per-mode eigenfunction CSVs into this directory.
        #[arg(long)]
        eigenfunctions: Option<PathBuf>,
    },
    /// Sample a catalog eigenfunction to CSV.
    Catalog {
        /// Family: eight | three-branch | torus | sphere | disk | disk-real | hermite
        #[arg(long)]
        family: String,
        /// Comma-separated key=value parameters (e.g. k=2,j=1).
        #[arg(long, default_value = "")]
        params: String,
        /// Sampling resolution (nodes per edge / per axis).
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise modulus-sharing scan over a catalog family.
    Isomod {
        /// Family: eight | three-branch | torus | sphere | disk | hermite
        #[arg(long)]
        family: String,
        /// Inclusive level range a..b.
        #[arg(long)]
        levels: String,
        /// Sharing tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Sampling resolution.
        #[arg(long, default_value_t = 512)]
        resolution: usize,
        /// Output JSON report path.
        #[arg(long)]
        report: PathBuf,
    },
    /// Derive a saturation certificate and write it as JSON.
    Saturate {
        /// Domain: eight | circle:6.283185307179586
        #[arg(long)]
        domain: String,
        /// Target: phi0 | phi_o:K | phi_e:K:J | wave-cos:K | wave-sin:K (eight) or cos:K | sin:K (circle).
        #[arg(long)]
        target: String,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a control schedule and write a trajectory CSV.
    Evolve {
        /// Domain: eight | three-branch | circle:LENGTH | graph.json
        #[arg(long)]
        domain: String,
        /// Potential: none | remark38:j=N | trig text
        #[arg(long)]
        potential: Option<String>,
        /// Schedule JSON (a ControlSchedule).
        #[arg(long)]
        schedule: PathBuf,
        /// Initial state mode spec (e.g. constant, eta:1, eight:even:1:1).
        #[arg(long)]
        psi0: String,
        /// Optional target state; adds a fidelity column.
        #[arg(long)]
        target: Option<String>,
        /// Grid nodes per edge.
        #[arg(long, default_value_t = 1024)]
        nodes: usize,
        /// Eigenbasis size.
        #[arg(long, default_value_t = 256)]
        modes: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario file (phase or transition experiment).
    Synthesize {
        /// Scenario JSON path.
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also rerun once with (δ/2, γ/2) and record the refined result.
        #[arg(long, default_value_t = false)]
        refine: bool,
    },
    /// One-shot eight-graph transition demo: (η₁,η₁) → (η₂,η₂).
    DemoEight {
        /// Override the report output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the (δ/2, γ/2) refinement rerun.
        #[arg(long, default_value_t = false)]
        skip_refine: bool,
    },
    /// One-shot circle transition demo: e^{ix} → e^{−ix}.
    DemoTorus {
        /// Override the report output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the (δ/2, γ/2) refinement rerun.
        #[arg(long, default_value_t = false)]
        skip_refine: bool,
    },
    /// Dump special-function values or zeros as CSV.
    Specfun {
        /// Kind: besselj:N | bessel-zeros:N | legendre:L:M | hermite:N
        #[arg(long)]
        kind: String,
        /// Sampling range a:b:n (value kinds).
        #[arg(long)]
        points: Option<String>,
        /// Zero count (bessel-zeros).
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Spectrum { domain, potential, modes, nodes, method, out, eigenfunctions } => {
            commands::cmd_spectrum(
                &domain,
                potential.as_deref(),
                modes,
                nodes,
                method.as_deref(),
                &out,
                eigenfunctions.as_deref(),
            )
        }
        Cmd::Catalog { family, params, grid, out } => {
            commands::cmd_catalog(&family, &params, grid, &out)
        }
        Cmd::Isomod { family, levels, tol, resolution, report } => {
            commands::cmd_isomod(&family, &levels, tol, resolution, &report)
        }
        Cmd::Saturate { domain, target, out } => commands::cmd_saturate(&domain, &target, &out),
        Cmd::Evolve { domain, potential, schedule, psi0, target, nodes, modes, out } => {
            commands::cmd_evolve(
                &domain,
                potential.as_deref(),
                &schedule,
                &psi0,
                target.as_deref(),
                nodes,
                modes,
                &out,
            )
        }
        Cmd::Synthesize { scenario, out, refine } => {
            commands::cmd_synthesize(&scenario, out.as_deref(), refine)
        }
        Cmd::DemoEight { out, skip_refine } => commands::cmd_demo("eight", out.as_deref(), skip_refine),
        Cmd::DemoTorus { out, skip_refine } => commands::cmd_demo("torus", out.as_deref(), skip_refine),
        Cmd::Specfun { kind, points, count, out } => {
            commands::cmd_specfun(&kind, points.as_deref(), count, &out)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with code 2 on usage errors / missing subcommand.
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<NumericalFailure>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
