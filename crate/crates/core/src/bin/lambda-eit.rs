use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lambda_eit::cli_io::{self, emit_figure_data, metrics_json, FIGURE_IDS};
use lambda_eit::scenarios::{preset, preset_names};
use lambda_eit::Error;

#[derive(Parser)]
#[command(name = "lambda-eit", version, about = "Light storage and retrieval in three-level lambda media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its record and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every point of the configured sweep axes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics from a run directory and print them as JSON.
    Diagnose {
        #[arg(long)]
        record: PathBuf,
    },
    /// List the named presets.
    Presets,
    /// Write figure tables for a run directory.
    Figures {
        #[arg(long)]
        record: PathBuf,
        /// Figure ids; all of them when omitted.
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn figures(record: PathBuf, ids: Vec<String>, out: Option<PathBuf>) -> Result<(), Error> {
    let config = cli_io::load_config(&record.join(cli_io::CONFIG_ECHO))?;
    let resolved = config.resolve()?;
    let rec = cli_io::read_record(&record, resolved.params, resolved.spec)?;
    let out = out.unwrap_or(record);
    std::fs::create_dir_all(&out).map_err(|e| Error::io("creating output directory", &out, e))?;
    let ids = if ids.is_empty() {
        FIGURE_IDS.iter().map(|s| s.to_string()).collect()
    } else {
        ids
    };
    for id in ids {
        for p in emit_figure_data(&rec, &id, &out)? {
            println!("{}", p.display());
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    cli_io::init_threads()?;
    match cli.command {
        Command::Run { config, out } => {
            let m = cli_io::run(&config, out.as_deref())?;
            println!("{}", serde_json::to_string(&m.summary).unwrap_or_default());
            Ok(0)
        }
        Command::Sweep { config, out } => {
            let points = cli_io::sweep(&config, out.as_deref())?;
            let mut code = 0;
            for p in &points {
                match &p.status {
                    Ok(_) => println!("{}: ok", p.dir.display()),
                    Err(e) => {
                        eprintln!("{}: {e}", p.dir.display());
                        if code == 0 {
                            code = p.exit_code;
                        }
                    }
                }
            }
            Ok(code)
        }
        Command::Diagnose { record } => {
            print!("{}", metrics_json(&cli_io::diagnose(&record)?));
            Ok(0)
        }
        Command::Presets => {
            for name in preset_names() {
                let p = preset(&name)?;
                println!(
                    "{name}\talpha_c/alpha_p = {:.4}\tdepth = {:.1}\tt_end = {}",
                    p.params.alpha_ratio(),
                    p.params.depth_p(),
                    p.params.t_end()
                );
            }
            Ok(0)
        }
        Command::Figures { record, ids, out } => figures(record, ids, out).map(|_| 0),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
