use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fatigue_core::kstore::KnowledgeSnapshot;
use fatigue_core::ontology::fatigue_taxonomy;
use fatigue_core::pipeline::{generate_scenario, report_line, Pipeline, PipelineConfig, PipelineError, ScenarioSpec};
use fatigue_core::qualify::QualificationScheme;
use fatigue_core::rules::parse_rules;
use fatigue_core::signal::{parse_trace, write_trace, TraceFormat};

#[derive(Parser)]
#[command(name = "fatigue", version, about = "Driver-fatigue inference over driving traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a trace and emit one JSON report per window.
    Run {
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the rule pack with the table's input classes as printed.
        #[arg(long)]
        verbatim_table1: bool,
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
    /// Generate a synthetic trace from a scenario spec.
    Gen {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rule pack commands.
    Rules {
        #[command(subcommand)]
        command: RulesCommand,
    },
    /// Snapshot commands.
    Snapshot {
        #[command(subcommand)]
        command: SnapshotCommand,
    },
    /// Print the default configuration.
    DefaultConfig,
    /// Print the built-in qualification bands as a scheme file.
    DefaultScheme,
}

#[derive(Subcommand)]
enum RulesCommand {
    /// Parse and validate a rule pack against the default ontology.
    Check {
        pack: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SnapshotCommand {
    /// Pretty-print a snapshot file.
    Dump { file: PathBuf },
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(p) => {
            let bytes = read(p)?;
            Ok(PipelineConfig::from_json(&bytes, p.parent())?)
        }
        None => Ok(PipelineConfig::default()),
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { trace, config, out, verbatim_table1, snapshot_dir } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.verbatim_table1 |= verbatim_table1;
            if snapshot_dir.is_some() {
                cfg.snapshot_dir = snapshot_dir;
            }
            let bytes = read(&trace)?;
            let frames = parse_trace(&bytes, TraceFormat::from_path(&trace))
                .map_err(|e| Failure::Input(format!("{}: {e}", trace.display())))?;
            let trace_id = trace.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
            let reports = Pipeline::new(cfg)?.run(&frames, &trace_id)?;
            let body: String = reports.iter().map(report_line).collect();
            match out {
                Some(p) => write(&p, body.as_bytes())?,
                None => std::io::stdout()
                    .write_all(body.as_bytes())
                    .map_err(|e| Failure::Internal(e.to_string()))?,
            }
        }
        Command::Gen { spec, out } => {
            let spec = ScenarioSpec::from_json(&read(&spec)?).map_err(|e| Failure::Input(e.to_string()))?;
            let frames = generate_scenario(&spec).map_err(|e| Failure::Input(e.to_string()))?;
            write(&out, write_trace(&frames, TraceFormat::from_path(&out)).as_bytes())?;
        }
        Command::Rules { command: RulesCommand::Check { pack, config } } => {
            let cfg = load_config(config.as_deref())?;
            let scheme = match &cfg.scheme_path {
                Some(p) => QualificationScheme::load(&read(p)?).map_err(|e| Failure::Input(e.to_string()))?,
                None => QualificationScheme::default(),
            };
            let taxonomy = fatigue_taxonomy(&scheme).map_err(|e| Failure::Internal(e.to_string()))?;
            let parsed = parse_rules(&read(&pack)?, &taxonomy)
                .map_err(|e| Failure::Input(format!("{}: {e}", pack.display())))?;
            println!("{} rules OK", parsed.len());
        }
        Command::Snapshot { command: SnapshotCommand::Dump { file } } => {
            let snapshot = KnowledgeSnapshot::load(&read(&file)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
            std::io::stdout()
                .write_all(&snapshot.save())
                .map_err(|e| Failure::Internal(e.to_string()))?;
        }
        Command::DefaultConfig => print!("{}", PipelineConfig::default().to_json()),
        Command::DefaultScheme => {
            let json = serde_json::to_string_pretty(&QualificationScheme::default().to_json())
                .map_err(|e| Failure::Internal(e.to_string()))?;
            println!("{json}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
