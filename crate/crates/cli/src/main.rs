use clap::{Parser, Subcommand};
use haptolab_cli::{exec, scenario, CliError};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "haptolab",
    about = "Simulator and verification laboratory for 1-D haptotaxis with degenerate myopic diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's mode (single run, member sweep or grid study).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Parallel worker slots for sweep members.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Execute twice and require byte-identical series output.
        #[arg(long, default_value_t = false)]
        seed_check: bool,
    },
    /// Construct and verify the coefficient family only; optionally write
    /// the CSV inspection bundle.
    VerifyFamily {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the hypothesis audit for the scenario's problem data.
    Hypotheses {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            workers,
            seed_check,
        } => {
            let sc = scenario::load_scenario(&config)?;
            if seed_check {
                exec::seed_check(&sc, &out, workers)
            } else {
                exec::execute(&sc, &out, workers)
            }
        }
        Command::VerifyFamily { config, out } => {
            let sc = scenario::load_scenario(&config)?;
            let family = exec::build_family(&sc)?;
            haptolab::regularize::verify_family(&family)
                .map_err(|e| CliError::Abort(format!("family verification: {e}")))?;
            for row in &family.ledger().rows {
                println!(
                    "member j={} eps={:.6e}: grad_sq={:.3e} grad_quartic={:.3e} floor={:.3e} log_slope={:.3e} (all <= 1) w_energy={:.3e} w_weight={:.3e}",
                    row.j,
                    row.eps,
                    row.grad_sq_bound,
                    row.grad_quartic_bound,
                    row.floor_bound,
                    row.log_slope_bound,
                    row.w_energy,
                    row.w_weight
                );
            }
            println!(
                "family verified: {} members, uniform w_energy max {:.6e}, w_weight max {:.6e}",
                family.len(),
                family.ledger().max_w_energy(),
                family.ledger().max_w_weight()
            );
            if let Some(dir) = out {
                exec::write_family_bundle(&dir, &family)?;
                println!("family bundle written to {}", dir.display());
            }
            Ok(())
        }
        Command::Hypotheses { config } => {
            let sc = scenario::load_scenario_with(&config, true)?;
            let text = serde_json::to_string_pretty(&sc.hypotheses)
                .map_err(|e| CliError::Abort(format!("serializing report: {e}")))?;
            println!("{text}");
            Ok(())
        }
    }
}
