use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use peakmdp::cli::{self, Command, OutputFormat, Verb};
use peakmdp::PropagationMode;

#[derive(Parser)]
#[command(name = "peakmdp", version, about = "Peak-based solver for deterministic discounted MDPs")]
struct Args {
    #[command(subcommand)]
    verb: VerbArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Achievable,
    Literal,
}

#[derive(Subcommand)]
enum VerbArgs {
    /// Check a scenario file against the model requirements
    Validate {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Solve the scenario and list its peaks
    Solve {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Report dominance and collected rewards at one state
    Explain {
        scenario: PathBuf,
        /// x,y on grids, state index on graphs
        #[arg(long)]
        state: String,
        #[arg(long, value_enum, default_value = "achievable")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Render the dominance regions
    Map {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "achievable")]
        mode: ModeArg,
        /// Also write a binary P6 image here (grids only)
        #[arg(long)]
        ppm: Option<PathBuf>,
        /// Pixels per cell in the image
        #[arg(long, default_value_t = 1)]
        scale: u32,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Break one state's value into per-peak shares
    Contributions {
        scenario: PathBuf,
        /// x,y on grids, state index on graphs
        #[arg(long)]
        state: String,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Trace the greedy path from one state
    Path {
        scenario: PathBuf,
        /// x,y on grids, state index on graphs
        #[arg(long)]
        state: String,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Compare peak values against value iteration
    Check {
        scenario: PathBuf,
        /// Largest accepted absolute deviation
        #[arg(long, default_value_t = 1e-8)]
        budget: f64,
        /// Value-iteration convergence tolerance
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
}

fn to_format(f: FormatArg) -> OutputFormat {
    match f {
        FormatArg::Text => OutputFormat::Text,
        FormatArg::Json => OutputFormat::Json,
    }
}

fn to_mode(m: ModeArg) -> PropagationMode {
    match m {
        ModeArg::Achievable => PropagationMode::Achievable,
        ModeArg::Literal => PropagationMode::Literal,
    }
}

fn to_command(verb: VerbArgs) -> (Command, PathBuf) {
    match verb {
        VerbArgs::Validate { scenario, format } => {
            let mut cmd = Command::new(Verb::Validate);
            cmd.format = to_format(format);
            (cmd, scenario)
        }
        VerbArgs::Solve { scenario, format } => {
            let mut cmd = Command::new(Verb::Solve);
            cmd.format = to_format(format);
            (cmd, scenario)
        }
        VerbArgs::Explain { scenario, state, mode, format } => {
            let mut cmd = Command::new(Verb::Explain);
            cmd.state = Some(state);
            cmd.mode = to_mode(mode);
            cmd.format = to_format(format);
            (cmd, scenario)
        }
        VerbArgs::Map { scenario, mode, ppm, scale, format } => {
            let mut cmd = Command::new(Verb::Map);
            cmd.mode = to_mode(mode);
            cmd.ppm = ppm;
            cmd.scale = scale;
            cmd.format = to_format(format);
            (cmd, scenario)
        }
        VerbArgs::Contributions { scenario, state, format } => {
            let mut cmd = Command::new(Verb::Contributions);
            cmd.state = Some(state);
            cmd.format = to_format(format);
            (cmd, scenario)
        }
        VerbArgs::Path { scenario, state, format } => {
            let mut cmd = Command::new(Verb::Path);
            cmd.state = Some(state);
            cmd.format = to_format(format);
            (cmd, scenario)
        }
        VerbArgs::Check { scenario, budget, tol, format } => {
            let mut cmd = Command::new(Verb::Check);
            cmd.budget = budget;
            cmd.tol = tol;
            cmd.format = to_format(format);
            (cmd, scenario)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (cmd, path) = to_command(args.verb);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error reading {}: {e}", path.display());
            return ExitCode::from(1);
        }
    };
    let result = cli::run(&cmd, &text);
    print!("{}", result.stdout);
    for (file, bytes) in &result.files {
        if let Err(e) = std::fs::write(file, bytes) {
            eprintln!("error writing {}: {e}", file.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(result.exit_code as u8)
}
