use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use si_predict::model::ModelKind;
use si_predict::pipeline::{
    cmd_evaluate, cmd_extract, cmd_report, cmd_train, EvaluateOptions, RunConfig, SplitSelection,
};
use si_predict::Error;

#[derive(Parser)]
#[command(name = "si-predict", version, about = "Speech intelligibility prediction from ASR decoder features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cache decoder features for both channels of every manifest record.
    Extract(Common),
    /// Train the primary or secondary model.
    Train(Common),
    /// Predict the evaluation manifest and write the report.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Directory holding split-<n>/<model>/ checkpoints [default: --out]
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        primary: Option<PathBuf>,
        #[arg(long)]
        secondary: Option<PathBuf>,
        /// Evaluate only this model instead of the ensemble.
        #[arg(long, value_parser = parse_kind)]
        single_model: Option<ModelKind>,
    },
    /// Rebuild report.json and plot data from a predictions CSV.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        predictions: PathBuf,
        /// Checkpoints whose layer weights go into the report.
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "manifest.json")]
    manifest: PathBuf,
    #[arg(long, default_value = "cache")]
    cache: PathBuf,
    /// mock:<seed>[:planted] or pretrained_asr:<model>
    #[arg(long, default_value = "mock:0")]
    backend: String,
    /// 1, 2, 3 or all
    #[arg(long, default_value = "1")]
    split: String,
    #[arg(long, default_value = "primary", value_parser = parse_kind)]
    model: ModelKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    exemplars: Option<usize>,
    /// Merge the disjoint validation set back into training.
    #[arg(long)]
    r#final: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, Error> {
        Ok(RunConfig {
            manifest: self.manifest.clone(),
            cache_dir: self.cache.clone(),
            backend: self.backend.clone(),
            split: self.split.parse::<SplitSelection>()?,
            out: self.out.clone(),
            seed: self.seed,
            model: self.model,
            final_run: self.r#final,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            weight_decay: self.weight_decay,
            exemplars: self.exemplars,
            workers: self.workers,
        })
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serialisable"));
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Extract(c) => print_json(&cmd_extract(&c.run_config()?)?),
        Command::Train(c) => print_json(&cmd_train(&c.run_config()?)?),
        Command::Evaluate {
            common,
            models,
            primary,
            secondary,
            single_model,
        } => {
            let opts = EvaluateOptions {
                models_dir: models,
                primary,
                secondary,
                single_model,
            };
            let outcome = cmd_evaluate(&common.run_config()?, &opts)?;
            print_json(&outcome.report);
        }
        Command::Report {
            common,
            predictions,
            checkpoints,
        } => print_json(&cmd_report(&common.run_config()?, &predictions, &checkpoints)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
