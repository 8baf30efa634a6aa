use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wlkaf::activations::ActivationSpec;
use wlkaf::config::ExperimentConfig;
use wlkaf::experiment::{self, describe_dataset};
use wlkaf::Result;

#[derive(Parser)]
#[command(name = "wlkaf", version, about = "Complex-valued networks with (widely linear) kernel activation functions")]
struct Cli {
    /// `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    #[arg(long, global = true)]
    dataset: Option<String>,
    /// real_nn, kaf_independent, wlkaf_case1, wlkaf_case2 or an activation name.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Comma list of models for `compare`.
    #[arg(long, global = true)]
    models: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Comma list of seeds.
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// Regularization weight for `train`.
    #[arg(long, global = true)]
    c: Option<String>,
    /// Comma list of regularization weights searched by `compare`.
    #[arg(long, global = true)]
    c_grid: Option<String>,
    #[arg(long, global = true)]
    lr: Option<String>,
    #[arg(long, global = true)]
    batch_size: Option<String>,
    #[arg(long, global = true)]
    patience: Option<String>,
    #[arg(long, global = true)]
    eval_every: Option<String>,
    #[arg(long, global = true)]
    max_iterations: Option<String>,
    /// Comma list of hidden widths.
    #[arg(long, global = true)]
    hidden: Option<String>,
    #[arg(long, global = true)]
    dict_points: Option<String>,
    /// `lo..hi`
    #[arg(long, global = true, allow_hyphen_values = true)]
    dict_range: Option<String>,
    #[arg(long, global = true)]
    k_coeffs: Option<String>,
    #[arg(long, global = true)]
    train_size: Option<String>,
    #[arg(long, global = true)]
    val_size: Option<String>,
    #[arg(long, global = true)]
    test_size: Option<String>,
    #[arg(long, global = true)]
    data_seed: Option<String>,
    #[arg(long, global = true)]
    cache: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// Raw data root; defaults to $WLKAF_DATA_DIR, else `data`.
    #[arg(long, global = true)]
    data_dir: Option<String>,
    /// Any configuration key, as `key=value` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// FFT features, coefficient ranking and the dataset cache.
    Preprocess,
    /// Train one model for one seed and C.
    Train,
    /// Accuracy of a saved model on the validation and test splits.
    Evaluate {
        #[arg(long)]
        model_file: PathBuf,
    },
    /// Grid search and multi-seed comparison of several models.
    Compare,
    /// Finite-difference check of the backward pass on tiny networks.
    Gradcheck {
        /// Activation name, or `all`.
        #[arg(long, default_value = "all")]
        variant: String,
    },
    /// Merge trace CSVs (`path` or `label=path`) into mean/std loss curves.
    Curves {
        #[arg(long)]
        output: PathBuf,
        /// Merge the regularized objective instead of the data loss.
        #[arg(long)]
        objective: bool,
        #[arg(required = true)]
        traces: Vec<String>,
    },
}

impl Flags {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        let pairs = [
            ("dataset", &self.dataset),
            ("model", &self.model),
            ("models", &self.models),
            ("seed", &self.seed),
            ("seeds", &self.seeds),
            ("c", &self.c),
            ("c_grid", &self.c_grid),
            ("lr", &self.lr),
            ("batch_size", &self.batch_size),
            ("patience", &self.patience),
            ("eval_every", &self.eval_every),
            ("max_iterations", &self.max_iterations),
            ("hidden", &self.hidden),
            ("dict_points", &self.dict_points),
            ("dict_range", &self.dict_range),
            ("k_coeffs", &self.k_coeffs),
            ("train_size", &self.train_size),
            ("val_size", &self.val_size),
            ("test_size", &self.test_size),
            ("data_seed", &self.data_seed),
            ("cache", &self.cache),
            ("out", &self.out),
            ("data_dir", &self.data_dir),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| wlkaf::Error::Parameter(format!("--set expects key=value, got '{kv}'")))?;
            cfg.set(k, v)?;
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cli.flags.apply(&mut cfg)?;
    match cli.command {
        Command::Preprocess => {
            let (path, ds) = experiment::cmd_preprocess(&cfg)?;
            println!("{}", describe_dataset(&ds));
            println!("cache written to {}", path.display());
        }
        Command::Train => {
            let s = experiment::cmd_train(&cfg)?;
            println!(
                "{} seed {} C {:e}: best val {:.4} at iteration {} of {}, test {:.4}",
                s.model,
                s.seed,
                s.c,
                s.best_val_accuracy,
                s.best_iteration,
                s.iterations_run,
                s.test_accuracy.unwrap_or(f64::NAN)
            );
            println!("artifacts in {}", cfg.out.display());
        }
        Command::Evaluate { model_file } => {
            let (val, test) = experiment::cmd_evaluate(&cfg, &model_file)?;
            println!("validation accuracy {val:.4}\ntest accuracy {test:.4}");
        }
        Command::Compare => {
            let report = experiment::cmd_compare(&cfg)?;
            print!("{}", report.render());
            println!("report written to {}", cfg.out.join("report.json").display());
        }
        Command::Gradcheck { variant } => {
            let spec = match variant.as_str() {
                "all" => None,
                v => Some(v.parse::<ActivationSpec>()?),
            };
            let seeds = if cli.flags.seeds.is_some() { cfg.seeds.clone() } else { vec![cfg.seed] };
            for r in experiment::cmd_gradcheck(spec.as_ref(), &seeds)? {
                println!("{r}");
            }
        }
        Command::Curves { output, objective, traces } => {
            experiment::cmd_curves(&traces, &output, objective)?;
            println!("merged {} traces into {}", traces.len(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
