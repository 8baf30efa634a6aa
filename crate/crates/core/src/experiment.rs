//! The experiment commands behind the `wlkaf` binary. Each command takes an
//! [`ExperimentConfig`] and writes its artifacts under `config.out`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activations::{ActivationSpec, KernelKind, SplitFn};
use crate::config::ExperimentConfig;
use crate::data::{build_with_test_pool, cache_dataset, load_cached, synthetic, ComplexDataset, ImageDataset, SplitPlan};
use crate::error::{Error, Result};
use crate::gradcheck::{gradcheck_variant, GradCheckConfig, GradCheckReport};
use crate::model::{Classifier, TrainObjective};
use crate::model_file::{Model, ModelVariant};
use crate::optim::{evaluate, grid_search_c, train, TrainTrace};
use crate::report::{merge_curves, read_trace_csv, ComparisonReport, LabelledTrace, ReportRow};

/// Per-run record written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dataset: String,
    pub model: String,
    pub seed: u64,
    pub c: f64,
    pub parameters: usize,
    pub iterations_run: usize,
    pub best_iteration: usize,
    pub best_val_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub status: String,
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Toy datasets are generated in memory; image datasets come from the cache,
/// which is built from the raw files (and written) when absent.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<ComplexDataset> {
    let (n_train, n_val, n_test) = (cfg.train_size, cfg.val_size, cfg.test_size);
    match cfg.dataset.as_str() {
        "toy-xor" => return Ok(synthetic::xor_like(n_train, n_val, n_test, cfg.data_seed)),
        "toy-linear" => return Ok(synthetic::linear_separable(n_train, n_val, n_test, cfg.data_seed)),
        _ => {}
    }
    let path = cfg.cache_path();
    if cfg.cache.is_some() || path.is_file() {
        return load_cached(&path);
    }
    let ds = build_image_dataset(cfg)?;
    cache_dataset(&ds, &path)?;
    Ok(ds)
}

fn build_image_dataset(cfg: &ExperimentConfig) -> Result<ComplexDataset> {
    let which = ImageDataset::parse(&cfg.dataset).ok_or_else(|| {
        Error::Parameter(format!(
            "unknown dataset '{}' (mnist, fashion-mnist, emnist-digits, latin-ocr, toy-xor, toy-linear)",
            cfg.dataset
        ))
    })?;
    if cfg.k_coeffs == 0 {
        return Err(Error::Parameter("K must be at least 1".into()));
    }
    let (pool, test) = which.load(&cfg.resolved_data_dir())?;
    let plan = SplitPlan::Counts { train: cfg.train_size, val: cfg.val_size, test: cfg.test_size };
    build_with_test_pool(which.name(), &pool, &test, cfg.k_coeffs, plan, cfg.data_seed)
}

/// Build the feature cache for `cfg.dataset` and write it to `cfg.cache_path()`.
pub fn cmd_preprocess(cfg: &ExperimentConfig) -> Result<(PathBuf, ComplexDataset)> {
    let ds = build_image_dataset(cfg)?;
    let path = cfg.cache_path();
    cache_dataset(&ds, &path)?;
    Ok((path, ds))
}

/// Human-readable summary of a preprocessed dataset.
pub fn describe_dataset(ds: &ComplexDataset) -> String {
    let head: Vec<String> = ds
        .selected
        .iter()
        .take(10)
        .map(|&j| format!("({},{})", j / ds.cols.max(1), j % ds.cols.max(1)))
        .collect();
    format!(
        "{}: {} train / {} val / {} test, F = {}, {} classes; top coefficients (row,col): {}{}",
        ds.name,
        ds.train.len(),
        ds.val.len(),
        ds.test.len(),
        ds.dim(),
        ds.classes,
        head.join(" "),
        if ds.selected.len() > 10 { " ..." } else { "" }
    )
}

fn build_model(cfg: &ExperimentConfig, variant: &ModelVariant, ds: &ComplexDataset, seed: u64) -> Result<Model> {
    variant.build(ds.dim(), ds.classes, &cfg.arch, seed)
}

/// Train `variant` with one seed and one `C`, writing the run directory:
/// `config.txt`, `model.bin`, `trace.csv`, `timing.csv`, `summary.json`.
pub fn train_run(
    cfg: &ExperimentConfig,
    ds: &ComplexDataset,
    variant: &ModelVariant,
    seed: u64,
    c: f64,
    dir: &Path,
) -> Result<(Model, TrainTrace, RunSummary)> {
    let model = build_model(cfg, variant, ds, seed)?;
    let result = train(model, &ds.train, &ds.val, &cfg.train_config(seed), &TrainObjective::cross_entropy(c));
    let done = match result {
        Ok(done) => Ok(done),
        Err(abort) => Err((abort.error, abort.trace)),
    };
    write_run(cfg, ds, variant, seed, c, dir, done)
}

/// Write the artifacts of a finished (or failed) run.
fn write_run(
    cfg: &ExperimentConfig,
    ds: &ComplexDataset,
    variant: &ModelVariant,
    seed: u64,
    c: f64,
    dir: &Path,
    outcome: std::result::Result<(Model, TrainTrace), (Error, TrainTrace)>,
) -> Result<(Model, TrainTrace, RunSummary)> {
    create_dir(dir)?;
    let snapshot = ExperimentConfig { model: variant.clone(), seed, c, ..cfg.clone() };
    write(&dir.join("config.txt"), snapshot.to_text())?;
    let trace = match &outcome {
        Ok((_, t)) | Err((_, t)) => t,
    };
    write(&dir.join("trace.csv"), trace.to_csv(false))?;
    write(&dir.join("timing.csv"), trace.timing_csv())?;
    let mut summary = RunSummary {
        dataset: ds.name.clone(),
        model: variant.to_string(),
        seed,
        c,
        parameters: 0,
        iterations_run: trace.iterations_run,
        best_iteration: trace.best_iteration,
        best_val_accuracy: trace.best_val_accuracy,
        test_accuracy: None,
        status: "ok".into(),
    };
    let summary_path = dir.join("summary.json");
    match outcome {
        Err((error, _)) => {
            summary.status = format!("failed: {error}");
            write(&summary_path, serde_json::to_string_pretty(&summary).expect("serializable"))?;
            Err(error)
        }
        Ok((model, trace)) => {
            summary.parameters = model.parameter_count();
            summary.test_accuracy = Some(evaluate(&model, &ds.test)?);
            model.save(&dir.join("model.bin"))?;
            write(&summary_path, serde_json::to_string_pretty(&summary).expect("serializable"))?;
            Ok((model, trace, summary))
        }
    }
}

/// Train `cfg.model` with `cfg.seed` and `cfg.c` into `cfg.out`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let ds = load_dataset(cfg)?;
    let (_, _, summary) = train_run(cfg, &ds, &cfg.model, cfg.seed, cfg.c, &cfg.out)?;
    Ok(summary)
}

/// Accuracy of a saved model on the validation and test splits.
pub fn cmd_evaluate(cfg: &ExperimentConfig, model_path: &Path) -> Result<(f64, f64)> {
    let model = Model::load(model_path)?;
    let ds = load_dataset(cfg)?;
    Ok((evaluate(&model, &ds.val)?, evaluate(&model, &ds.test)?))
}

fn compare_variant(cfg: &ExperimentConfig, ds: &ComplexDataset, variant: &ModelVariant, row: &mut ReportRow) -> Result<()> {
    let name = variant.to_string();
    let first = *cfg.seeds.first().ok_or_else(|| Error::Parameter("no seeds given".into()))?;
    // the grid search already trains the first seed at the chosen C
    let mut first_run = None;
    let best_c = if cfg.train.c_grid.len() == 1 {
        cfg.train.c_grid[0]
    } else {
        let factory = || build_model(cfg, variant, ds, first);
        let gs = grid_search_c(factory, &ds.train, &ds.val, &cfg.train_config(first), crate::model::Loss::CrossEntropy)?;
        row.c_search = gs.accuracies;
        first_run = Some((gs.model, gs.trace));
        gs.best_c
    };
    row.best_c = Some(best_c);
    for &seed in &cfg.seeds {
        let dir = cfg.out.join(&name).join(format!("seed{seed}"));
        let (_, _, summary) = match first_run.take().filter(|_| seed == first) {
            Some(done) => write_run(cfg, ds, variant, seed, best_c, &dir, Ok(done))?,
            None => train_run(cfg, ds, variant, seed, best_c, &dir)?,
        };
        row.seeds.push(seed);
        row.accuracies.push(summary.test_accuracy.expect("successful run has a test accuracy"));
    }
    Ok(())
}

/// Grid search over `C` (first seed) then one run per seed for every model
/// in `cfg.models`. Writes `report.txt` and `report.json` into `cfg.out`.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    if cfg.models.is_empty() {
        return Err(Error::Parameter("no models to compare".into()));
    }
    let ds = load_dataset(cfg)?;
    create_dir(&cfg.out)?;
    let mut rows = Vec::new();
    for variant in &cfg.models {
        let mut row = ReportRow::new(variant.to_string());
        if let Err(e) = compare_variant(cfg, &ds, variant, &mut row) {
            row.error = Some(e.to_string());
        }
        row.finish();
        rows.push(row);
    }
    let report = ComparisonReport { dataset: ds.name.clone(), rows };
    write(&cfg.out.join("report.txt"), report.render())?;
    write(&cfg.out.join("report.json"), report.to_json())?;
    Ok(report)
}

/// The six activation variants covered by the gradient check.
pub fn gradcheck_variants() -> Vec<ActivationSpec> {
    vec![
        ActivationSpec::Split(SplitFn::Tanh),
        ActivationSpec::PhaseAmplitude,
        ActivationSpec::Kaf(KernelKind::Independent),
        ActivationSpec::Kaf(KernelKind::RealGaussian),
        ActivationSpec::WlKafCase1,
        ActivationSpec::case2_default(),
    ]
}

/// Gradient check of `variant` (or all six when `None`) for every seed.
/// Fails with a gradient-check error naming each offending parameter group.
pub fn cmd_gradcheck(variant: Option<&ActivationSpec>, seeds: &[u64]) -> Result<Vec<GradCheckReport>> {
    let variants = variant.map_or_else(gradcheck_variants, |v| vec![v.clone()]);
    let mut reports = Vec::new();
    for v in &variants {
        for &seed in seeds {
            reports.push(gradcheck_variant(v, seed, GradCheckConfig::default())?);
        }
    }
    let failures: Vec<String> =
        reports.iter().filter(|r| !r.passed()).map(|r| r.clone().into_result().unwrap_err().to_string()).collect();
    if failures.is_empty() {
        Ok(reports)
    } else {
        Err(Error::GradCheck(failures.join("; ")))
    }
}

/// Label for a trace path: explicit `label=path`, else the `model` field of a
/// sibling `summary.json`, else the parent directory name.
fn trace_label(arg: &str) -> (String, PathBuf) {
    if let Some((label, path)) = arg.split_once('=') {
        return (label.to_string(), PathBuf::from(path));
    }
    let path = PathBuf::from(arg);
    let parent = path.parent().unwrap_or(Path::new("."));
    let from_summary = fs::read_to_string(parent.join("summary.json"))
        .ok()
        .and_then(|s| serde_json::from_str::<RunSummary>(&s).ok())
        .map(|s| s.model);
    let label = from_summary.unwrap_or_else(|| {
        parent.file_name().map_or_else(|| "trace".to_string(), |n| n.to_string_lossy().into_owned())
    });
    (label, path)
}

/// Merge trace CSVs (arguments `path` or `label=path`) into `out`. The data
/// loss is merged, or the full objective when `objective` is set.
pub fn cmd_curves(traces: &[String], out: &Path, objective: bool) -> Result<String> {
    let mut labelled = Vec::with_capacity(traces.len());
    for arg in traces {
        let (label, path) = trace_label(arg);
        let records = read_trace_csv(&path)?;
        let points = records
            .iter()
            .map(|r| (r.iteration, if objective { r.train_loss } else { r.data_loss }))
            .collect();
        labelled.push(LabelledTrace { label, points });
    }
    let csv = merge_curves(&labelled)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write(out, &csv)?;
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_cfg(out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        for (k, v) in [
            ("dataset", "toy-xor"),
            ("train_size", "400"),
            ("val_size", "100"),
            ("test_size", "200"),
            ("hidden", "8,8"),
            ("dict_points", "6"),
            ("batch_size", "20"),
            ("eval_every", "20"),
            ("patience", "400"),
            ("max_iterations", "1500"),
            ("lr", "0.05"),
            ("c", "0"),
        ] {
            cfg.set(k, v).unwrap();
        }
        cfg.out = out.to_path_buf();
        cfg
    }

    #[test]
    fn train_writes_artifacts_and_beats_chance() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = toy_cfg(&dir.path().join("run"));
        let summary = cmd_train(&cfg).unwrap();
        for f in ["config.txt", "model.bin", "trace.csv", "timing.csv", "summary.json"] {
            assert!(cfg.out.join(f).is_file(), "{f}");
        }
        assert!(summary.test_accuracy.unwrap() > 0.8, "{summary:?}");
        let (val, test) = cmd_evaluate(&cfg, &cfg.out.join("model.bin")).unwrap();
        assert_eq!(Some(test), summary.test_accuracy);
        assert_eq!(val, summary.best_val_accuracy);
    }

    #[test]
    fn repeated_train_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_cfg(&dir.path().join("a"));
        cfg.set("max_iterations", "100").unwrap();
        cmd_train(&cfg).unwrap();
        let mut again = cfg.clone();
        again.out = dir.path().join("b");
        cmd_train(&again).unwrap();
        for f in ["model.bin", "trace.csv", "summary.json"] {
            assert_eq!(fs::read(cfg.out.join(f)).unwrap(), fs::read(again.out.join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn compare_reports_every_model() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_cfg(&dir.path().join("cmp"));
        cfg.set("max_iterations", "60").unwrap();
        cfg.set("seeds", "0,1").unwrap();
        cfg.set("c_grid", "0,1e-4").unwrap();
        let report = cmd_compare(&cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!(report.rows.iter().all(|r| r.error.is_none() && r.accuracies.len() == 2 && r.std.is_some()));
        assert!(report.rows.iter().all(|r| r.c_search.len() == 2));
        assert!(cfg.out.join("report.json").is_file());
        assert!(cfg.out.join("wlkaf_case1/seed1/trace.csv").is_file());
    }

    #[test]
    fn compare_keeps_failed_variants() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_cfg(&dir.path().join("cmp"));
        cfg.set("max_iterations", "20").unwrap();
        cfg.set("seeds", "0").unwrap();
        cfg.set("c_grid", "0").unwrap();
        cfg.set("dict_points", "1").unwrap(); // invalid dictionary for kernel models
        let report = cmd_compare(&cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!(report.rows[0].error.is_none());
        assert!(report.rows[1..].iter().all(|r| r.error.is_some()));
        assert!(report.render().contains("FAILED"));
    }

    #[test]
    fn curves_from_run_directories() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_cfg(&dir.path().join("r1"));
        cfg.set("max_iterations", "60").unwrap();
        cmd_train(&cfg).unwrap();
        let t = cfg.out.join("trace.csv").display().to_string();
        let csv = cmd_curves(&[t.clone(), format!("other={t}")], &dir.path().join("curves/out.csv"), false).unwrap();
        assert!(csv.starts_with("iteration,wlkaf_case1_mean,wlkaf_case1_std,wlkaf_case1_n,other_mean"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn missing_raw_data_names_the_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.data_dir = Some(dir.path().to_path_buf());
        let err = cmd_preprocess(&cfg).unwrap_err();
        assert!(matches!(err, Error::MissingData(_)));
        assert!(err.to_string().contains("train-images-idx3-ubyte"));
        assert_eq!(err.exit_code(), 3);
        cfg.k_coeffs = 0;
        assert!(matches!(cmd_preprocess(&cfg), Err(Error::Parameter(_))));
    }

    #[test]
    fn gradcheck_command_covers_all_variants() {
        let reports = cmd_gradcheck(None, &[3]).unwrap();
        assert_eq!(reports.len(), 6);
        let one = cmd_gradcheck(Some(&ActivationSpec::WlKafCase1), &[0, 1]).unwrap();
        assert_eq!(one.len(), 2);
    }
}
