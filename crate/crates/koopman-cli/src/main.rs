use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use koopman_cli::config::Format;
use koopman_cli::output::write_outcome;
use koopman_cli::pipeline;
use koopman_cli::study::Study;
use koopman_cli::{symbolic_file, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "koopman", version, about = "Cuntz families for expanding maps, verified numerically")]
struct Cli {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiply every tolerance by this factor.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Output directory (default: config value, then $KOOPMAN_OUT, then ./out/<config name>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage of a config and write the reports.
    Run { config: PathBuf },
    /// Track one check across the truncation schedule.
    Study {
        config: PathBuf,
        #[arg(long)]
        check: String,
    },
    /// Normalize expressions and run module checks from a file.
    Symbolic { file: PathBuf },
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig, path: &Path) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os("KOOPMAN_OUT").map(PathBuf::from))
        .unwrap_or_else(|| {
            let stem = cfg.name.clone().unwrap_or_else(|| path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into()));
            PathBuf::from("out").join(stem)
        })
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if !(cli.tolerance_scale.is_finite() && cli.tolerance_scale > 0.0) {
        return Err(CliError::Config { field: "--tolerance-scale".into(), line: None, message: "must be positive".into() });
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            let outcome = pipeline::run(&cfg, cli.tolerance_scale, None)?;
            let dir = out_dir(cli, &cfg, config);
            write_outcome(&dir, cfg.name.as_deref().unwrap_or("run"), &outcome, &cfg.output.formats)?;
            print!("{}", outcome.summary().to_table());
            println!("{}: {}", dir.display(), if outcome.status() { "pass" } else { "FAIL" });
            Ok(outcome.status())
        }
        Command::Study { config, check } => {
            let cfg = load(cli, config)?;
            let outcome = pipeline::run(&cfg, cli.tolerance_scale, None)?;
            let study = Study::collect(&outcome, check)?;
            let dir = out_dir(cli, &cfg, config);
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Io { path: dir.clone(), source: e })?;
            let stem = format!("study-{}", check.replace(['/', '~'], "_"));
            for f in &cfg.output.formats {
                let (path, text) = match f {
                    Format::Json => (dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&study)? + "\n"),
                    Format::Txt => (dir.join(format!("{stem}.txt")), study.to_table()),
                };
                std::fs::write(&path, text).map_err(|e| CliError::Io { path, source: e })?;
            }
            print!("{}", study.to_table());
            Ok(study.nonincreasing && study.points.iter().all(|p| p.pass))
        }
        Command::Symbolic { file } => {
            let text = std::fs::read_to_string(file).map_err(|e| CliError::Io { path: file.clone(), source: e })?;
            let (out, ok) = symbolic_file::evaluate(&text, cli.seed.unwrap_or(0))?;
            print!("{out}");
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
