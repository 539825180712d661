//! `policycite`: run the policy-citation prediction pipeline, whole or by stage.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use policycite::dataset::{self, InputFormat, RecordSet};
use policycite::evalkit::{self, EvalReport};
use policycite::experiment::{self, ExperimentConfig, ExperimentError};
use policycite::ranking::{self, rankings_markdown};
use policycite::synthgen::{self, GenSpec};
use policycite::{ErrorKind, ModelKind, ModelParams, TrainedModel};

#[derive(Parser)]
#[command(name = "policycite", version, about = "Predict policy-document citation from online attention counts")]
struct Cli {
    /// Experiment config (JSON). Required by `run`; supplies hyperparameters elsewhere.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Args)]
struct InputArgs {
    /// Records file in the CSV or JSONL schema.
    #[arg(long)]
    input: PathBuf,
    /// Defaults to the file extension (`.jsonl`, otherwise CSV).
    #[arg(long, value_enum)]
    input_format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl InputArgs {
    fn format(&self) -> InputFormat {
        match self.input_format {
            Some(FormatArg::Csv) => InputFormat::Csv,
            Some(FormatArg::Jsonl) => InputFormat::Jsonl,
            None if self.input.extension().is_some_and(|e| e == "jsonl") => InputFormat::Jsonl,
            None => InputFormat::Csv,
        }
    }

    fn load(&self) -> Result<RecordSet> {
        Ok(dataset::load_record_set(&self.input, self.format())?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw records and rewrite them in the canonical CSV schema.
    Ingest(InputArgs),
    /// Generate a synthetic labeled set from a generator spec.
    Synth {
        #[arg(long)]
        genspec: PathBuf,
    },
    /// Undersample the majority class.
    Balance(InputArgs),
    /// Stratified train/test split.
    Split {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Fit one model and save it as JSON.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
        /// Pretty-print tree `i` of a fitted forest.
        #[arg(long, value_name = "I")]
        dump_tree: Option<usize>,
    },
    /// Score a saved model on a labeled set.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        model: PathBuf,
    },
    /// Stratified k-fold cross-validation.
    Cv {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated subset of mnb,rf,svm.
        #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
        models: Option<Vec<ModelKind>>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Feature ranking of a saved model.
    Rank {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_name = "I")]
        dump_tree: Option<usize>,
    },
    /// The full pipeline described by `--config`.
    Run,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: policycite::Error| e.to_string())
}

struct Context_ {
    config: Option<ExperimentConfig>,
    seed: u64,
    out: PathBuf,
    format: Format,
}

impl Context_ {
    fn params(&self) -> ModelParams {
        self.config.as_ref().map(ExperimentConfig::model_params).unwrap_or_default()
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }

    fn emit(&self, stem: &str, json: String, markdown: String) -> Result<()> {
        let (name, body) = match self.format {
            Format::Json => (format!("{stem}.json"), json + "\n"),
            Format::Markdown => (format!("{stem}.md"), markdown),
        };
        let path = self.out_file(&name)?;
        fs::write(&path, &body).with_context(|| format!("writing {}", path.display()))?;
        print!("{body}");
        Ok(())
    }
}

fn save_set(ctx: &Context_, name: &str, set: &RecordSet) -> Result<PathBuf> {
    let path = ctx.out_file(name)?;
    dataset::save_record_set(&path, set)?;
    Ok(path)
}

fn class_line(set: &RecordSet) -> String {
    let [neg, pos] = set.class_counts();
    format!("{} rows ({pos} positive, {neg} negative)", set.len())
}

fn dump_tree(model: &TrainedModel, index: usize) -> Result<()> {
    let TrainedModel::Rf(forest) = model else {
        bail!(policycite::Error::Config("--dump-tree needs a random forest model".into()));
    };
    let Some(tree) = forest.trees.get(index) else {
        bail!(policycite::Error::Config(format!(
            "tree {index} out of range, forest has {} trees",
            forest.trees.len()
        )));
    };
    print!("{}", tree.render(&forest.feature_order));
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    let out = cli
        .out
        .clone()
        .or_else(|| config.as_ref().map(|c| c.resolve(&c.output)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context_ {
        config,
        seed,
        out,
        format: cli.format,
    };

    match cli.command {
        Command::Ingest(input) => {
            let records = dataset::load_records(&input.input, input.format())?;
            let path = ctx.out_file("records.csv")?;
            let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
            dataset::write_records_csv(std::io::BufWriter::new(file), &records)?;
            let set = RecordSet::from_records(&records, input.input.display().to_string());
            println!("ingested {} -> {}", class_line(&set), path.display());
        }
        Command::Synth { genspec } => {
            let mut spec = GenSpec::load(&genspec)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let set = synthgen::generate(&spec)?;
            let path = save_set(&ctx, "synthetic.csv", &set)?;
            println!("generated {} -> {}", class_line(&set), path.display());
        }
        Command::Balance(input) => {
            let set = input.load()?;
            let balanced = dataset::balance(&set, ctx.seed)?;
            let path = save_set(&ctx, "balanced.csv", &balanced)?;
            println!("balanced {} -> {}", class_line(&balanced), path.display());
        }
        Command::Split { input, test_fraction } => {
            let fraction = test_fraction
                .or(ctx.config.as_ref().map(|c| c.test_fraction))
                .unwrap_or(0.2);
            let set = input.load()?;
            let (train, test) = evalkit::split_train_test(&set, fraction, ctx.seed)?;
            let train_path = save_set(&ctx, "train.csv", &train)?;
            let test_path = save_set(&ctx, "test.csv", &test)?;
            println!("train {} -> {}", class_line(&train), train_path.display());
            println!("test {} -> {}", class_line(&test), test_path.display());
        }
        Command::Train {
            input,
            model,
            dump_tree: tree,
        } => {
            let set = input.load()?;
            let fitted = TrainedModel::fit(model, &set, &ctx.params(), ctx.seed)?;
            let path = ctx.out_file(&format!("model-{model}.json"))?;
            fitted.save(&path)?;
            println!("trained {model} on {} -> {}", class_line(&set), path.display());
            if let Some(i) = tree {
                dump_tree(&fitted, i)?;
            }
        }
        Command::Evaluate { input, model } => {
            let fitted = TrainedModel::load(&model)?;
            let set = input.load()?;
            let cm = evalkit::confusion(&fitted.predict_all(&set), &set.labels())?;
            let mut report = EvalReport::new("held-out", None);
            report.models.insert(fitted.kind().name().into(), evalkit::metrics(&cm)?);
            let json = serde_json::to_string_pretty(&serde_json::json!({
                "confusion": cm,
                "report": report,
            }))?;
            ctx.emit("evaluation", json, report.markdown())?;
        }
        Command::Cv { input, models, folds } => {
            let set = input.load()?;
            let models = models
                .or(ctx.config.as_ref().map(ExperimentConfig::selected_models))
                .unwrap_or_else(|| ModelKind::ALL.to_vec());
            let k = folds.or(ctx.config.as_ref().map(|c| c.cv_folds)).unwrap_or(10);
            let cv = experiment::cross_validate(
                &set,
                &models,
                &ctx.params(),
                k,
                ctx.seed,
                &experiment::NoObserver,
            )?;
            ctx.emit("cv", serde_json::to_string_pretty(&cv)?, cv.report.markdown())?;
        }
        Command::Rank { model, dump_tree: tree } => {
            let fitted = TrainedModel::load(&model)?;
            if let Some(i) = tree {
                dump_tree(&fitted, i)?;
            }
            let r = ranking::rank_features(&fitted)?;
            ctx.emit(
                "ranking",
                serde_json::to_string_pretty(&r)?,
                rankings_markdown(std::slice::from_ref(&r)),
            )?;
        }
        Command::Run => {
            let Some(mut config) = ctx.config.clone() else {
                bail!(policycite::Error::Config("`run` needs --config".into()));
            };
            config.seed = ctx.seed;
            let outcome = experiment::run_experiment(&config)?;
            experiment::write_outputs(&ctx.out, &outcome.report, &outcome.timings)?;
            if ctx.format == Format::Markdown {
                print!("{}", outcome.report.markdown());
            }
            println!("wrote {}", summarize_outputs(&ctx.out));
        }
    }
    Ok(())
}

fn summarize_outputs(dir: &Path) -> String {
    [experiment::REPORT_JSON, experiment::REPORT_MD, experiment::TIMINGS_JSON]
        .iter()
        .map(|n| dir.join(n).display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let kind = if let Some(e) = err.downcast_ref::<policycite::Error>() {
        e.kind()
    } else if let Some(e) = err.downcast_ref::<ExperimentError>() {
        e.kind()
    } else {
        ErrorKind::Data
    };
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Fit => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
