//! Experiment configuration as flat `key = value` text.
//!
//! Keys (defaults in parentheses):
//!
//! | key | meaning |
//! |---|---|
//! | `dataset` | `mnist`, `fashion-mnist`, `emnist-digits`, `latin-ocr`, `toy-xor`, `toy-linear` (`mnist`) |
//! | `model` | `real_nn`, `kaf_independent`, `wlkaf_case1`, `wlkaf_case2` or an activation name (`wlkaf_case1`) |
//! | `models` | comma list compared by `compare` (the four benchmark variants) |
//! | `seed` | model/batch seed for `train` (`0`) |
//! | `seeds` | comma list for `compare` (`0,1,2,3,4`) |
//! | `data_seed` | split shuffling seed (`0`) |
//! | `c` | regularization weight for `train` (`0.0001`) |
//! | `c_grid` | comma list searched by `compare` (`0,1e-5,1e-4,1e-3`) |
//! | `lr`, `batch_size`, `patience`, `eval_every`, `max_iterations` | optimizer (`0.01`, `40`, `1000`, `50`, `100000`) |
//! | `hidden` | comma list of hidden widths (`100,100,100`) |
//! | `dict_points`, `dict_range` | dictionary grid (`8`, `-2..2`) |
//! | `k_coeffs` | kept FFT coefficients (`100`) |
//! | `train_size`, `val_size`, `test_size` | split counts (`50000`, `10000`, `10000`) |
//! | `data_dir` | raw data root (`$WLKAF_DATA_DIR`, else `data`) |
//! | `cache` | dataset cache file (derived from the data settings) |
//! | `out` | output directory (`runs`) |
//!
//! Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::{self, DEFAULT_K};
use crate::error::{Error, Result};
use crate::model_file::{Architecture, ModelVariant};
use crate::optim::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub model: ModelVariant,
    pub models: Vec<ModelVariant>,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub data_seed: u64,
    pub c: f64,
    pub arch: Architecture,
    pub k_coeffs: usize,
    /// `train.seed` is ignored; runs use `seed` / `seeds`.
    pub train: TrainConfig,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub data_dir: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: "mnist".into(),
            model: ModelVariant::Complex(crate::activations::ActivationSpec::WlKafCase1),
            models: ModelVariant::benchmark(),
            seed: 0,
            seeds: vec![0, 1, 2, 3, 4],
            data_seed: 0,
            c: 1e-4,
            arch: Architecture::default(),
            k_coeffs: DEFAULT_K,
            train: TrainConfig::default(),
            train_size: 50_000,
            val_size: 10_000,
            test_size: 10_000,
            data_dir: None,
            cache: None,
            out: PathBuf::from("runs"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parameter(format!("invalid value '{v}' for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Parameter(format!("{key} needs at least one value")));
    }
    Ok(items)
}

/// `"-2..2"` or `"-2,2"`.
pub fn parse_range(v: &str) -> Result<(f64, f64)> {
    let (lo, hi) = v
        .split_once("..")
        .or_else(|| v.split_once(','))
        .ok_or_else(|| Error::Parameter(format!("range '{v}' must look like lo..hi")))?;
    let (lo, hi) = (parse("dict_range", lo.trim())?, parse("dict_range", hi.trim())?);
    if !(lo < hi) {
        return Err(Error::Parameter(format!("empty range {lo}..{hi}")));
    }
    Ok((lo, hi))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let key = key.trim().replace('-', "_");
        match key.as_str() {
            "dataset" => self.dataset = v.to_string(),
            "model" => self.model = v.parse()?,
            "models" => self.models = parse_list::<String>("models", v)?.iter().map(|s| s.parse()).collect::<Result<_>>()?,
            "seed" => self.seed = parse(&key, v)?,
            "seeds" => self.seeds = parse_list(&key, v)?,
            "data_seed" => self.data_seed = parse(&key, v)?,
            "c" => self.c = parse(&key, v)?,
            "c_grid" => self.train.c_grid = parse_list(&key, v)?,
            "lr" => self.train.lr = parse(&key, v)?,
            "batch_size" => self.train.batch_size = parse(&key, v)?,
            "patience" => self.train.patience = parse(&key, v)?,
            "eval_every" => self.train.eval_every = parse(&key, v)?,
            "max_iterations" => self.train.max_iterations = parse(&key, v)?,
            "hidden" => self.arch.hidden = parse_list(&key, v)?,
            "dict_points" => self.arch.dict_points = parse(&key, v)?,
            "dict_range" => self.arch.dict_range = parse_range(v)?,
            "k_coeffs" => self.k_coeffs = parse(&key, v)?,
            "train_size" => self.train_size = parse(&key, v)?,
            "val_size" => self.val_size = parse(&key, v)?,
            "test_size" => self.test_size = parse(&key, v)?,
            "data_dir" => self.data_dir = Some(PathBuf::from(v)),
            "cache" => self.cache = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            _ => return Err(Error::Parameter(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Apply every setting of a `key = value` document.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v).map_err(|e| Error::Parameter(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Snapshot in the same format, every key present.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let t = &self.train;
        let models: Vec<String> = self.models.iter().map(ToString::to_string).collect();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        kv("dataset", self.dataset.clone());
        kv("model", self.model.to_string());
        kv("models", models.join(","));
        kv("seed", self.seed.to_string());
        kv("seeds", join(&self.seeds));
        kv("data_seed", self.data_seed.to_string());
        kv("c", format!("{:e}", self.c));
        kv("c_grid", t.c_grid.iter().map(|c| format!("{c:e}")).collect::<Vec<_>>().join(","));
        kv("lr", format!("{:e}", t.lr));
        kv("batch_size", t.batch_size.to_string());
        kv("patience", t.patience.to_string());
        kv("eval_every", t.eval_every.to_string());
        kv("max_iterations", t.max_iterations.to_string());
        kv("hidden", join(&self.arch.hidden));
        kv("dict_points", self.arch.dict_points.to_string());
        kv("dict_range", format!("{}..{}", self.arch.dict_range.0, self.arch.dict_range.1));
        kv("k_coeffs", self.k_coeffs.to_string());
        kv("train_size", self.train_size.to_string());
        kv("val_size", self.val_size.to_string());
        kv("test_size", self.test_size.to_string());
        if let Some(d) = &self.data_dir {
            kv("data_dir", d.display().to_string());
        }
        if let Some(c) = &self.cache {
            kv("cache", c.display().to_string());
        }
        kv("out", self.out.display().to_string());
        s
    }

    pub fn resolved_data_dir(&self) -> PathBuf {
        data::data_dir(self.data_dir.as_deref())
    }

    /// Explicit cache path, else one derived from every setting that affects the features.
    pub fn cache_path(&self) -> PathBuf {
        self.cache.clone().unwrap_or_else(|| {
            self.resolved_data_dir().join("cache").join(format!(
                "{}-k{}-n{}-{}-{}-s{}.bin",
                self.dataset, self.k_coeffs, self.train_size, self.val_size, self.test_size, self.data_seed
            ))
        })
    }

    /// Training settings for one run.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig { seed, ..self.train.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("# comment\ndataset = toy-xor\nmodel = real_nn\nc-grid = 0, 1e-3\nhidden = 10,5\ndict_range = -3..3\n\n")
            .unwrap();
        assert_eq!(cfg.dataset, "toy-xor");
        assert_eq!(cfg.train.c_grid, vec![0.0, 1e-3]);
        assert_eq!(cfg.arch.dict_range, (-3.0, 3.0));
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn defaults_follow_the_protocol() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.train.batch_size, 40);
        assert_eq!(cfg.train.patience, 1000);
        assert_eq!(cfg.arch.hidden, vec![100, 100, 100]);
        assert_eq!(cfg.arch.dict_points, 8);
        assert_eq!(cfg.arch.dict_range, (-2.0, 2.0));
        assert_eq!(cfg.k_coeffs, 100);
        assert_eq!(cfg.models.len(), 4);
    }

    #[test]
    fn bad_input_is_a_parameter_error() {
        let mut cfg = ExperimentConfig::default();
        for text in ["nonsense", "unknown = 1", "batch_size = -1", "dict_range = 2..-2", "seeds = ", "model = foo"] {
            assert!(matches!(cfg.apply_text(text), Err(Error::Parameter(_))), "{text}");
        }
    }
}
