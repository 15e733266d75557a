use std::path::{Path, PathBuf};

use autovid::dataio::{generate_synthetic_dataset, split_table, SynthError, SyntheticSpec};
use autovid::hyperspace::{default_autovideo_space, SearchSpace};
use autovid::pipeline::{
    fit_pipeline, load_fitted, produce_pipeline, resolve_config_key, save_fitted, write_atomic, ArtifactError,
    ExecError, Registry,
};
use autovid::table::{load_annotations, read_csv, TableError};
use autovid::tuners::{run_search, JsonlSink, SearchBudget, StrategyRegistry, TunerError};
use autovid::workflow::{
    accuracy, expect_probabilities, pipeline_inputs, predictions_table, prepare_frames, validation_accuracy,
    with_overrides, WorkflowError,
};
use autovid::zoo::{builtin_registry, build_standard_pipeline, save_pretrained, BuildConfig, ClassifierState};
use autovid::Table;

use crate::args::*;
use crate::error::{config, data, runtime, CliError};

fn table_error(e: TableError) -> CliError {
    match e {
        TableError::BadTargetIndex { .. } => config(e),
        _ => data(e),
    }
}

fn workflow_error(e: WorkflowError) -> CliError {
    match e {
        WorkflowError::NoVideos { .. } | WorkflowError::Extract(_) => data(e),
        WorkflowError::Build(_) => config(e),
        WorkflowError::Exec(e) => exec_error(e),
        WorkflowError::NotProbabilities | WorkflowError::NoLabels => runtime(e),
    }
}

fn exec_error(e: ExecError) -> CliError {
    match e {
        ExecError::ValidationFailed(_) => config(e),
        _ => runtime(e),
    }
}

fn load_table(path: &Path, target_index: Option<usize>) -> Result<Table, CliError> {
    match target_index {
        Some(i) => load_annotations(path, i).map_err(table_error),
        None => read_csv(path).map_err(table_error),
    }
}

/// Loads the table and makes sure every clip it names has frames on disk.
fn load_bundle(table: &Path, media: &Path, target_index: Option<usize>) -> Result<(Table, Vec<PathBuf>), CliError> {
    let table = load_table(table, target_index)?;
    let dirs = prepare_frames(media).map_err(workflow_error)?;
    let column = table
        .column_index("video")
        .ok_or_else(|| CliError::Data("annotation table has no `video` column".into()))?;
    if let Some(missing) = table.column(column).find(|v| !media.join(v).is_file()) {
        return Err(CliError::Data(format!("video {missing:?} not found in {}", media.display())));
    }
    Ok((table, dirs))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes()).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        num_classes: args.classes,
        videos_per_class: args.videos_per_class,
        frames: args.frames,
        height: args.height,
        width: args.width,
        channels: args.channels,
        noise_std: args.noise_std,
        seed: args.seed,
    };
    let bundle = generate_synthetic_dataset(&spec, &args.out).map_err(|e| match e {
        SynthError::InvalidSpec(_) => config(e),
        _ => data(e),
    })?;
    let table = load_annotations(&bundle.table_path, bundle.target_index).map_err(data)?;
    let split = split_table(&table, args.valid_fraction, args.seed).map_err(config)?;
    for w in &split.warnings {
        eprintln!("warning: {w:?}");
    }
    write_text(&args.out.join("train.csv"), &split.train.to_csv())?;
    write_text(&args.out.join("valid.csv"), &split.valid.to_csv())?;
    println!("synth ok videos={} train={} valid={}", table.len(), split.train.len(), split.valid.len());
    Ok(())
}

fn build_config(algorithm: Option<&String>, file: &FileConfig, pretrained: Option<&PathBuf>, set: &[String]) -> Result<BuildConfig, CliError> {
    let pretrained = pretrained.or(file.pretrained.as_ref());
    Ok(BuildConfig {
        algorithm: algorithm.or(file.algorithm.as_ref()).cloned().unwrap_or_else(|| DEFAULT_ALGORITHM.into()),
        load_pretrained: pretrained.is_some(),
        pretrained_path: pretrained.map(|p| p.display().to_string()),
        overrides: overrides(file, set)?,
    })
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let run = args.common.resolve(&file, true)?;
    let registry = builtin_registry();
    let cfg = build_config(args.algorithm.as_ref(), &file, args.pretrained.as_ref(), &args.set)?;
    if let Some(p) = &cfg.pretrained_path {
        if !Path::new(p).is_file() {
            return Err(CliError::Data(format!("pretrained weights {p} not found")));
        }
    }
    let desc = build_standard_pipeline(&cfg, &registry).map_err(config)?;
    let (table, dirs) = load_bundle(&run.table, &run.media, run.target_index)?;
    let inputs = pipeline_inputs(&table, &dirs);
    let fitted = fit_pipeline(&desc, &inputs, &registry, run.seed).map_err(exec_error)?;
    let probs = expect_probabilities(produce_pipeline(&fitted, &inputs, &registry).map_err(exec_error)?)
        .map_err(workflow_error)?;
    let train_acc = accuracy(&probs, &table).ok_or_else(|| runtime("training table has no labels"))?;
    save_fitted(&fitted, &run.out).map_err(|e| runtime(format!("cannot write {}: {e}", run.out.display())))?;
    if let Some(path) = args.save_weights.as_ref().or(file.save_weights.as_ref()) {
        let last = fitted.step_states().last().expect("pipeline has steps");
        let state = ClassifierState::from_bytes(last).map_err(runtime)?;
        save_pretrained(&state.model, path).map_err(runtime)?;
    }
    println!("fit ok steps={} train_acc={train_acc:.4}", desc.steps.len());
    Ok(())
}

pub fn produce(args: &ProduceArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let run = args.common.resolve(&file, false)?;
    let fitted_path = args.fitted.clone().or(file.fitted.clone()).ok_or_else(|| missing("fitted"))?;
    let fitted = load_fitted(&fitted_path).map_err(|e| match e {
        ArtifactError::Io(_) => CliError::Data(format!("cannot read {}: {e}", fitted_path.display())),
        _ => data(e),
    })?;
    let registry = builtin_registry();
    let (table, dirs) = load_bundle(&run.table, &run.media, run.target_index)?;
    let out = produce_pipeline(&fitted, &pipeline_inputs(&table, &dirs), &registry).map_err(exec_error)?;
    let probs = expect_probabilities(out).map_err(workflow_error)?;
    write_text(&run.out, &predictions_table(&table, &probs).to_csv())?;
    match accuracy(&probs, &table) {
        Some(acc) => println!("produce ok rows={} acc={acc:.4}", table.len()),
        None => println!("produce ok rows={}", table.len()),
    }
    Ok(())
}

fn load_space(path: Option<&PathBuf>) -> Result<SearchSpace, CliError> {
    let Some(path) = path else { return Ok(default_autovideo_space()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read space {}: {e}", path.display())))?;
    SearchSpace::from_json(&text).map_err(|e| CliError::Config(format!("bad space {}: {e}", path.display())))
}

/// Every space key must name a hyperparameter of the pipeline.
fn check_space(space: &SearchSpace, base: &BuildConfig, registry: &Registry) -> Result<(), CliError> {
    let desc = build_standard_pipeline(base, registry).map_err(config)?;
    for name in space.names() {
        resolve_config_key(&desc, registry, name).map_err(config)?;
    }
    Ok(())
}

pub fn search(args: &SearchArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let run = args.common.resolve(&file, true)?;
    let valid_table = args.valid_table.clone().or(file.valid_table.clone()).ok_or_else(|| missing("valid-table"))?;
    let valid_media = args.valid_media.clone().or(file.valid_media.clone()).unwrap_or_else(|| run.media.clone());
    let strategy_name = args.strategy.clone().or(file.strategy.clone()).unwrap_or_else(|| DEFAULT_STRATEGY.into());
    let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
    let log_path = args
        .log
        .clone()
        .or(file.log.clone())
        .unwrap_or_else(|| run.out.with_extension("trials.jsonl"));

    let registry = builtin_registry();
    let strategy = StrategyRegistry::with_builtins().get(&strategy_name).map_err(config)?;
    let space = load_space(args.space.as_ref().or(file.space.as_ref()))?;
    let base = build_config(args.algorithm.as_ref(), &file, None, &args.set)?;
    check_space(&space, &base, &registry)?;
    if trials == 0 {
        return Err(config(TunerError::ZeroBudget));
    }

    let train = load_bundle(&run.table, &run.media, run.target_index)?;
    let valid = load_bundle(&valid_table, &valid_media, run.target_index)?;
    let mut sink = JsonlSink::create(&log_path)
        .map_err(|e| runtime(format!("cannot create {}: {e}", log_path.display())))?;
    let mut objective = |c: &autovid::hyperspace::ConfigSample| {
        let cfg = with_overrides(&base, c);
        validation_accuracy(&cfg, &registry, (&train.0, &train.1), (&valid.0, &valid.1), run.seed).map(|acc| 1.0 - acc)
    };
    let budget = SearchBudget { max_trials: trials, seed: run.seed };
    let result = run_search(&mut objective, &space, strategy.as_ref(), budget, &mut sink).map_err(|e| match e {
        TunerError::AllTrialsFailed { .. } => CliError::AllTrialsFailed(e.to_string()),
        TunerError::ZeroBudget | TunerError::EmptySpace | TunerError::Space(_) => config(e),
        _ => runtime(e),
    })?;
    write_text(&run.out, &(result.best_config.to_json() + "\n"))?;
    println!("search ok trials={} best={:.4}", result.trials.len(), result.best_value);
    Ok(())
}
