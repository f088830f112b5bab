//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use plumber_core::components::Task;
use plumber_core::evaluation::{
    attribute_errors, evaluate_pipeline, evaluate_selector, format_attribution, microbench,
    EvalReport, Selection,
};
use plumber_core::pipeline::{generate_pipelines, PipelineConfig, PipelinePool};
use plumber_core::selector::{
    cross_validate_dataset, label_training_data, select_pipeline, train_selector, CvReport,
    Hyperparams, SelectorModel,
};

use crate::context::{write_file, Context, GlobalArgs};
use crate::output::{extract, json, select_config, table};
use crate::{server, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "plumber",
    version,
    about = "Build, select and evaluate knowledge-graph extraction pipelines"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate every valid pipeline for the KG.
    Generate {
        /// Also write the pool file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one pipeline on a text.
    Run {
        #[arg(long)]
        pipeline: String,
        #[arg(long)]
        text: String,
        #[arg(long)]
        pipelines: Option<PathBuf>,
        /// Include the pipeline, text triples and stage trace.
        #[arg(long)]
        verbose: bool,
    },
    /// Pick a pipeline with the selector and run it.
    Extract {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        text: String,
        #[arg(long)]
        pipelines: Option<PathBuf>,
        #[arg(long)]
        verbose: bool,
    },
    /// Label a dataset with its best pipelines and fit the selector.
    TrainSelector(TrainArgs),
    /// Print the pipeline the selector picks for a text.
    Select {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        text: String,
        #[arg(long)]
        pipelines: Option<PathBuf>,
    },
    /// Score a pipeline, a selector or the oracle on a dataset.
    #[command(group(ArgGroup::new("subject").required(true).args(["pipeline", "model", "oracle"])))]
    Evaluate {
        #[arg(long)]
        pipeline: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        pipelines: Option<PathBuf>,
    },
    /// k-fold cross-validation of the selector.
    CrossValidate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long)]
        pipelines: Option<PathBuf>,
        #[command(flatten)]
        hp: HyperArgs,
    },
    /// Share of the error caused by each pipeline stage.
    AttributeErrors {
        #[arg(long)]
        pipeline: String,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        pipelines: Option<PathBuf>,
    },
    /// Per-component F1 by sentence bucket, as CSV.
    Microbench {
        #[arg(long, value_parser = parse_task)]
        task: Task,
        #[arg(long)]
        dataset: PathBuf,
        /// Also write the grid here and the bucket sizes next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated component ids; all components of the task by default.
        #[arg(long, value_delimiter = ',')]
        components: Vec<String>,
    },
    /// List registered components.
    ListComponents {
        #[arg(long, value_parser = parse_task)]
        task: Option<Task>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        pipelines: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub l2: f64,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Drop examples on which every pipeline scores zero.
    #[arg(long)]
    pub exclude_degenerate: bool,
}

impl HyperArgs {
    fn hyperparams(&self, seed: u64) -> Hyperparams {
        Hyperparams {
            epochs: self.epochs,
            learning_rate: self.lr,
            l2: self.l2,
            batch_size: self.batch_size,
            seed,
            exclude_degenerate: self.exclude_degenerate,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub pipelines: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub hp: HyperArgs,
    /// Write the labeled training examples as JSONL.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse()
}

fn print(s: &str) {
    println!("{s}");
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let ctx = Context::new(&cli.global)?;
    match cli.command {
        Command::Generate { out } => generate(&ctx, out.as_deref()),
        Command::Run {
            pipeline,
            text,
            pipelines,
            verbose,
        } => {
            let cfg = ctx.find_pipeline(pipelines.as_deref(), &pipeline)?;
            if let Some(kg) = &ctx.kg_flag {
                if *kg != cfg.kg {
                    return Err(CliError::Invalid(format!(
                        "pipeline {pipeline} is bound to KG {:?}, not {kg:?}",
                        cfg.kg
                    )));
                }
            }
            let out = extract(&ctx.registry, &cfg, ctx.kg(&cfg.kg)?, &text, verbose)?;
            print(&json(&out, ctx.pretty));
            Ok(())
        }
        Command::Extract {
            model,
            text,
            pipelines,
            verbose,
        } => {
            let model = SelectorModel::load(ctx.model_path(model.as_deref())?)?;
            let kg = ctx.kg_name();
            let pool = ctx.pipelines(pipelines.as_deref(), kg)?;
            let cfg = select_config(&model, &text, |id| {
                pool.iter().find(|p| p.id == id).cloned()
            })?;
            let out = extract(&ctx.registry, &cfg, ctx.kg(kg)?, &text, verbose)?;
            print(&json(&out, ctx.pretty));
            Ok(())
        }
        Command::TrainSelector(args) => train(&ctx, &args),
        Command::Select {
            model,
            text,
            pipelines,
        } => {
            #[derive(Serialize)]
            struct Selected {
                pipeline_id: String,
                #[serde(skip_serializing_if = "Option::is_none")]
                pipeline: Option<PipelineConfig>,
            }
            let model = SelectorModel::load(ctx.model_path(model.as_deref())?)?;
            let id = select_pipeline(&model, &text);
            let pipeline = ctx.find_pipeline(pipelines.as_deref(), &id).ok();
            print(&json(
                &Selected {
                    pipeline_id: id,
                    pipeline,
                },
                ctx.pretty,
            ));
            Ok(())
        }
        Command::Evaluate {
            pipeline,
            model,
            oracle,
            dataset,
            pipelines,
        } => {
            let (examples, kg_name) = ctx.dataset(&dataset)?;
            let kg = ctx.kg(&kg_name)?;
            let report = if let Some(id) = pipeline {
                let cfg = ctx.find_pipeline(pipelines.as_deref(), &id)?;
                if cfg.kg != kg_name {
                    return Err(CliError::Invalid(format!(
                        "pipeline {id} is bound to KG {:?} but the dataset targets {kg_name:?}",
                        cfg.kg
                    )));
                }
                evaluate_pipeline(&ctx.registry, &cfg, &examples, kg)
            } else {
                let pool = ctx.pipelines(pipelines.as_deref(), &kg_name)?;
                if oracle {
                    evaluate_selector(&ctx.registry, &Selection::Oracle, &pool, &examples, kg)?
                } else {
                    let path = ctx.model_path(model.as_deref())?;
                    let model = SelectorModel::load(path)?;
                    evaluate_selector(
                        &ctx.registry,
                        &Selection::Model(&model),
                        &pool,
                        &examples,
                        kg,
                    )?
                }
            };
            print(&render_report(&report, ctx.pretty));
            Ok(())
        }
        Command::CrossValidate {
            dataset,
            folds,
            pipelines,
            hp,
        } => {
            let (examples, kg_name) = ctx.dataset(&dataset)?;
            let pool = ctx.pipelines(pipelines.as_deref(), &kg_name)?;
            let report = cross_validate_dataset(
                &ctx.registry,
                &pool,
                &examples,
                ctx.kg(&kg_name)?,
                folds,
                &hp.hyperparams(ctx.seed),
            )?;
            print(&render_cv(&report, ctx.pretty));
            Ok(())
        }
        Command::AttributeErrors {
            pipeline,
            dataset,
            pipelines,
        } => {
            let (examples, kg_name) = ctx.dataset(&dataset)?;
            let cfg = ctx.find_pipeline(pipelines.as_deref(), &pipeline)?;
            let attribution = attribute_errors(&ctx.registry, &cfg, &examples, ctx.kg(&kg_name)?)?;
            if ctx.pretty {
                print(&format_attribution(&attribution));
            } else {
                print(&json(&attribution, false));
            }
            Ok(())
        }
        Command::Microbench {
            task,
            dataset,
            out,
            components,
        } => {
            let (examples, kg_name) = ctx.dataset(&dataset)?;
            let components = if components.is_empty() {
                ctx.registry
                    .all()
                    .filter(|m| {
                        m.supports(&kg_name)
                            && (m.task == task
                                || (m.task == Task::ElRl && matches!(task, Task::El | Task::Rl)))
                    })
                    .map(|m| m.id.clone())
                    .collect()
            } else {
                components
            };
            let grid = microbench(
                &ctx.registry,
                task,
                &components,
                &examples,
                ctx.kg(&kg_name)?,
                &ctx.lexicons,
            )?;
            let csv = grid.to_csv();
            if let Some(path) = out {
                write_file(&path, &csv)?;
                write_file(&support_path(&path), &grid.support_csv())?;
            }
            if ctx.pretty {
                let mut header = vec!["component"];
                header.extend(grid.columns.iter().map(String::as_str));
                let rows: Vec<Vec<String>> = grid
                    .rows
                    .iter()
                    .zip(&grid.cells)
                    .map(|(r, cells)| {
                        std::iter::once(r.clone())
                            .chain(cells.iter().map(|v| fmt4(*v)))
                            .collect()
                    })
                    .collect();
                print(&table(&header, &rows));
            } else {
                print!("{csv}");
            }
            Ok(())
        }
        Command::ListComponents { task } => {
            let metas: Vec<_> = ctx
                .registry
                .all()
                .filter(|m| task.is_none_or(|t| m.task == t))
                .filter(|m| ctx.kg_flag.as_deref().is_none_or(|kg| m.supports(kg)))
                .collect();
            if ctx.pretty {
                let rows: Vec<Vec<String>> = metas
                    .iter()
                    .map(|m| {
                        vec![
                            m.id.clone(),
                            m.task.to_string(),
                            m.supported_kgs.join(","),
                            m.name.clone(),
                        ]
                    })
                    .collect();
                print(&table(&["id", "task", "kgs", "name"], &rows));
            } else {
                print(&json(&metas, false));
            }
            Ok(())
        }
        Command::Serve {
            host,
            port,
            model,
            pipelines,
        } => server::serve(ctx, &host, port, model.as_deref(), pipelines.as_deref()),
    }
}

fn generate(ctx: &Context, out: Option<&Path>) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct PoolOut<'a> {
        pipelines: &'a [PipelineConfig],
    }
    let kg = ctx.kg_name();
    ctx.kg(kg)?;
    let configs = generate_pipelines(&ctx.registry, kg)?;
    if let Some(path) = out {
        PipelinePool::from_configs(configs.iter().cloned()).save(path)?;
    }
    if ctx.pretty {
        let rows: Vec<Vec<String>> = configs
            .iter()
            .map(|c| vec![c.id.clone(), c.describe()])
            .collect();
        print(&table(&["id", "pipeline"], &rows));
    } else {
        print(&json(
            &PoolOut {
                pipelines: &configs,
            },
            false,
        ));
    }
    Ok(())
}

fn train(ctx: &Context, args: &TrainArgs) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Summary {
        model: PathBuf,
        examples: usize,
        degenerate: usize,
        pipelines: usize,
        classes: usize,
        constant: bool,
        hyperparams: Hyperparams,
    }
    let (examples, kg_name) = ctx.dataset(&args.dataset)?;
    let pool = ctx.pipelines(args.pipelines.as_deref(), &kg_name)?;
    let labeled = label_training_data(&ctx.registry, &pool, &examples, ctx.kg(&kg_name)?)?;
    if let Some(path) = &args.labels_out {
        let mut lines = String::new();
        for ex in &labeled {
            lines.push_str(&json(ex, false));
            lines.push('\n');
        }
        write_file(path, &lines)?;
    }
    let hp = args.hp.hyperparams(ctx.seed);
    let model = train_selector(&labeled, &hp)?;
    model.save(&args.out)?;
    let summary = Summary {
        model: args.out.clone(),
        examples: labeled.len(),
        degenerate: labeled.iter().filter(|e| e.degenerate).count(),
        pipelines: pool.len(),
        classes: model.classes.len(),
        constant: model.constant,
        hyperparams: hp,
    };
    print(&json(&summary, ctx.pretty));
    Ok(())
}

fn render_report(report: &EvalReport, pretty: bool) -> String {
    if !pretty {
        return json(report, false);
    }
    let rows = vec![vec![
        report.metadata.subject.clone(),
        fmt4(report.precision),
        fmt4(report.recall),
        fmt4(report.f1),
        report.per_sentence.len().to_string(),
    ]];
    table(
        &["subject", "precision", "recall", "f1", "sentences"],
        &rows,
    )
}

fn render_cv(report: &CvReport, pretty: bool) -> String {
    if !pretty {
        return json(report, false);
    }
    let mut rows: Vec<Vec<String>> = report
        .folds
        .iter()
        .map(|f| {
            vec![
                f.fold.to_string(),
                f.test_size.to_string(),
                fmt4(f.precision),
                fmt4(f.recall),
                fmt4(f.f1),
            ]
        })
        .collect();
    rows.push(vec![
        "mean".into(),
        String::new(),
        fmt4(report.mean.precision),
        fmt4(report.mean.recall),
        fmt4(report.mean.f1),
    ]);
    rows.push(vec![
        "std".into(),
        String::new(),
        fmt4(report.std.precision),
        fmt4(report.std.recall),
        fmt4(report.std.f1),
    ]);
    table(&["fold", "size", "precision", "recall", "f1"], &rows)
}

/// `out.csv` → `out_support.csv`.
pub fn support_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_support.csv"))
}
