use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prefloop_cli::{commands, server};
use prefloop_core::map::bundled;
use prefloop_core::{FitnessParams, GaConfig, StudyOption};

#[derive(Parser)]
#[command(name = "prefloop", version, about = "Route choice with complaint-driven preference adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank the routes of a map under a preference vector.
    Plan {
        /// Bundled map name or path to a map file.
        map: String,
        #[arg(long, value_name = "W1,W2,W3")]
        prefs: String,
        #[arg(long)]
        json: bool,
    },
    /// Complain about the recommended route and adapt the preference.
    Adapt {
        map: String,
        #[arg(long, value_name = "W1,W2,W3")]
        prefs: String,
        /// dislike_road, excessive_noise, excessive_bumpiness, excessive_distance or none.
        #[arg(long)]
        complaint: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Run a simulated cohort and write report.json and report.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Start the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of *.map.json files; the bundled maps when absent.
        #[arg(long, env = "PREFLOOP_MAPS_DIR")]
        maps: Option<PathBuf>,
        /// Write a JSON snapshot of every session after each change.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Plan { map, prefs, json } => {
            let prefs = commands::parse_prefs(&prefs)?;
            let graph = commands::resolve_map(&map)?;
            let name = graph.name().to_string();
            let ranked = commands::plan(graph, &prefs)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&ranked)?);
            } else {
                print!("{}", commands::render_plan(&name, &prefs, &ranked));
            }
        }
        Command::Adapt {
            map,
            prefs,
            complaint,
            seed,
            json,
        } => {
            let prefs = commands::parse_prefs(&prefs)?;
            let option: StudyOption = complaint.parse()?;
            let ga = GaConfig::default().with_seed(seed);
            let outcome =
                commands::adapt(commands::resolve_map(&map)?, &prefs, option, FitnessParams::default(), &ga)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&outcome)?);
            } else {
                print!("{}", commands::render_adapt(&outcome));
            }
        }
        Command::Simulate { config, out } => {
            for path in commands::simulate(&config, &out)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Serve { port, maps, snapshots } => {
            let graphs = match maps {
                Some(dir) => commands::load_map_dir(&dir)?,
                None => bundled::load_all(),
            };
            let state = server::AppState::new(graphs, snapshots)?;
            tokio::runtime::Runtime::new()?.block_on(server::serve(state, port))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
