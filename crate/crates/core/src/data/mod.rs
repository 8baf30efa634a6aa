//! Image datasets turned into complex classification problems: FFT of each
//! image, top-K coefficients ranked by mean magnitude on the training split,
//! per-coefficient standardization, seeded splits and a binary cache.

pub mod cache;
pub mod fft;
pub mod idx;
pub mod synthetic;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cnum::{C64, ZERO};
use crate::error::{Error, Result};

pub use cache::{cache_dataset, load_cached};
pub use fft::{fft2, Fft2};
pub use idx::{load_idx, RawImageSet};

/// Environment variable naming the data directory.
pub const DATA_DIR_ENV: &str = "WLKAF_DATA_DIR";

/// Default number of kept coefficients.
pub const DEFAULT_K: usize = 100;

/// Feature rows with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Row-major `len × dim`.
    pub features: Vec<C64>,
    pub labels: Vec<usize>,
    pub dim: usize,
}

impl Split {
    pub fn new(features: Vec<C64>, labels: Vec<usize>, dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::Dimension(format!("{} features for {} rows of width {dim}", features.len(), labels.len())));
        }
        Ok(Self { features, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subset(&self, rows: &[usize]) -> Split {
        Split {
            features: rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }

    /// The first `n` rows (or all of them).
    pub fn head(&self, n: usize) -> Split {
        let n = n.min(self.len());
        Split { features: self.features[..n * self.dim].to_vec(), labels: self.labels[..n].to_vec(), dim: self.dim }
    }
}

/// Where the test rows come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestSource {
    /// Same pool as train and validation (disjoint indices).
    SamePool,
    /// A separate image set, e.g. the official test files.
    SeparatePool,
    /// Not built from images.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDataset {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub classes: usize,
    /// Selected flat FFT indices, most significant first.
    pub selected: Vec<usize>,
    /// Training-split complex mean per selected coefficient.
    pub mean: Vec<C64>,
    /// Training-split scale per selected coefficient.
    pub scale: Vec<f64>,
    pub seed: u64,
    pub test_source: TestSource,
    /// Source-pool index of every row in each split.
    pub train_index: Vec<usize>,
    pub val_index: Vec<usize>,
    pub test_index: Vec<usize>,
    pub train: Split,
    pub val: Split,
    pub test: Split,
}

impl ComplexDataset {
    /// Number of complex features per sample.
    pub fn dim(&self) -> usize {
        self.train.dim
    }
}

/// Mean `|F[j]|` over the given spectra for every flat index `j`.
pub fn mean_magnitudes(spectra: &[Vec<C64>]) -> Vec<f64> {
    let n = spectra.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; n];
    for s in spectra {
        acc.iter_mut().zip(s).for_each(|(a, z)| *a += z.norm());
    }
    let inv = 1.0 / spectra.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

/// Indices of the `k` largest mean magnitudes, ties by ascending index.
pub fn rank_and_select(train_spectra: &[Vec<C64>], k: usize) -> Result<Vec<usize>> {
    let hw = train_spectra.first().map_or(0, Vec::len);
    if train_spectra.is_empty() {
        return Err(Error::Parameter("cannot rank coefficients without training images".into()));
    }
    if k == 0 || k > hw {
        return Err(Error::Parameter(format!("K must be in 1..={hw}, got {k}")));
    }
    let mags = mean_magnitudes(train_spectra);
    let mut order: Vec<usize> = (0..hw).collect();
    order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

/// Spectra of selected images from a raw set.
pub fn spectra(raw: &RawImageSet, indices: &[usize]) -> Result<Vec<Vec<C64>>> {
    let plan = Fft2::new(raw.rows, raw.cols)?;
    indices.iter().map(|&i| plan.transform(raw.image(i))).collect()
}

/// Per-column complex mean and `sqrt(mean |x − mean|²)`; zero spread maps to 1.
pub fn fit_standardization(rows: &[Vec<C64>]) -> (Vec<C64>, Vec<f64>) {
    let k = rows.first().map_or(0, Vec::len);
    let inv = 1.0 / rows.len().max(1) as f64;
    let mut mean = vec![ZERO; k];
    for r in rows {
        mean.iter_mut().zip(r).for_each(|(m, z)| *m += z);
    }
    mean.iter_mut().for_each(|m| *m *= inv);
    let mut var = vec![0.0; k];
    for r in rows {
        var.iter_mut().zip(r.iter().zip(&mean)).for_each(|(v, (z, m))| *v += (z - m).norm_sqr());
    }
    let scale = var
        .into_iter()
        .zip(&mean)
        .map(|(v, m)| {
            let s = (v * inv).sqrt();
            // spread at round-off level of the mean counts as constant
            if s > 1e-12 * m.norm().max(1.0) {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

fn features(spectra: &[Vec<C64>], selected: &[usize], mean: &[C64], scale: &[f64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(spectra.len() * selected.len());
    for s in spectra {
        for ((&j, m), sc) in selected.iter().zip(mean).zip(scale) {
            out.push((s[j] - m) / sc);
        }
    }
    out
}

/// Requested split sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPlan {
    /// Fractions of one pool, each rounded to the nearest count.
    Fractions { train: f64, val: f64, test: f64 },
    /// Exact counts. With a separate test pool, train and validation come
    /// from the first pool and test rows from the second.
    Counts { train: usize, val: usize, test: usize },
}

impl SplitPlan {
    fn counts(&self, pool: usize, separate_test: bool) -> Result<[usize; 3]> {
        let counts = match *self {
            SplitPlan::Fractions { train, val, test } => {
                let f = [train, val, test];
                if f.iter().any(|v| !(*v > 0.0)) || f.iter().sum::<f64>() > 1.0 + 1e-12 {
                    return Err(Error::Parameter(format!("split fractions {f:?} must be positive and sum to ≤ 1")));
                }
                if separate_test {
                    return Err(Error::Parameter("fractions apply to a single pool".into()));
                }
                let mut c = f.map(|v| (v * pool as f64).round() as usize);
                while c.iter().sum::<usize>() > pool {
                    let i = (0..3).max_by_key(|&i| c[i]).expect("three splits");
                    c[i] -= 1;
                }
                c
            }
            SplitPlan::Counts { train, val, test } => [train, val, test],
        };
        if counts.contains(&0) {
            return Err(Error::Parameter(format!("empty split in {counts:?}")));
        }
        let from_pool = if separate_test { counts[0] + counts[1] } else { counts.iter().sum() };
        if from_pool > pool {
            return Err(Error::Parameter(format!("{counts:?} needs {from_pool} samples, pool has {pool}")));
        }
        Ok(counts)
    }
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Build a dataset from one image pool.
pub fn build_complex_dataset(raw: &RawImageSet, k: usize, plan: SplitPlan, seed: u64) -> Result<ComplexDataset> {
    let [a, b, c] = plan.counts(raw.len(), false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perm = shuffled(raw.len(), &mut rng);
    let (train, rest) = perm.split_at(a);
    let (val, rest) = rest.split_at(b);
    assemble("custom", raw, raw, train, val, &rest[..c], k, seed, TestSource::SamePool)
}

/// Build a dataset whose test rows come from a separate pool.
pub fn build_with_test_pool(
    name: &str,
    pool: &RawImageSet,
    test_pool: &RawImageSet,
    k: usize,
    plan: SplitPlan,
    seed: u64,
) -> Result<ComplexDataset> {
    if (pool.rows, pool.cols) != (test_pool.rows, test_pool.cols) {
        return Err(Error::Dimension("train and test images differ in shape".into()));
    }
    let [a, b, c] = plan.counts(pool.len(), true)?;
    if c > test_pool.len() {
        return Err(Error::Parameter(format!("{c} test samples requested, test pool has {}", test_pool.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perm = shuffled(pool.len(), &mut rng);
    let test_perm = shuffled(test_pool.len(), &mut rng);
    assemble(name, pool, test_pool, &perm[..a], &perm[a..a + b], &test_perm[..c], k, seed, TestSource::SeparatePool)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    name: &str,
    pool: &RawImageSet,
    test_pool: &RawImageSet,
    train: &[usize],
    val: &[usize],
    test: &[usize],
    k: usize,
    seed: u64,
    test_source: TestSource,
) -> Result<ComplexDataset> {
    if k == 0 || k > pool.rows * pool.cols {
        return Err(Error::Parameter(format!("K must be in 1..={}, got {k}", pool.rows * pool.cols)));
    }
    let train_s = spectra(pool, train)?;
    let selected = rank_and_select(&train_s, k)?;
    let picked: Vec<Vec<C64>> = train_s.iter().map(|s| selected.iter().map(|&j| s[j]).collect()).collect();
    let (mean, scale) = fit_standardization(&picked);
    let labels = |set: &RawImageSet, idx: &[usize]| idx.iter().map(|&i| set.labels[i] as usize).collect::<Vec<_>>();
    let make = |set: &RawImageSet, idx: &[usize], s: &[Vec<C64>]| Split::new(features(s, &selected, &mean, &scale), labels(set, idx), k);
    let train_split = make(pool, train, &train_s)?;
    let val_split = make(pool, val, &spectra(pool, val)?)?;
    let test_split = make(test_pool, test, &spectra(test_pool, test)?)?;
    Ok(ComplexDataset {
        name: name.to_string(),
        rows: pool.rows,
        cols: pool.cols,
        classes: pool.classes.max(test_pool.classes),
        selected,
        mean,
        scale,
        seed,
        test_source,
        train_index: train.to_vec(),
        val_index: val.to_vec(),
        test_index: test.to_vec(),
        train: train_split,
        val: val_split,
        test: test_split,
    })
}

/// `explicit`, else `$WLKAF_DATA_DIR`, else `./data`.
pub fn data_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Image datasets with an IDX layout under the data directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageDataset {
    Mnist,
    FashionMnist,
    EmnistDigits,
    /// Any local IDX-shaped corpus placed under `latin-ocr/`.
    LatinOcr,
}

impl ImageDataset {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "mnist" => Some(Self::Mnist),
            "fashion-mnist" => Some(Self::FashionMnist),
            "emnist-digits" => Some(Self::EmnistDigits),
            "latin-ocr" => Some(Self::LatinOcr),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mnist => "mnist",
            Self::FashionMnist => "fashion-mnist",
            Self::EmnistDigits => "emnist-digits",
            Self::LatinOcr => "latin-ocr",
        }
    }

    /// File stems for (train images, train labels, test images, test labels).
    pub fn file_stems(self) -> [&'static str; 4] {
        match self {
            Self::EmnistDigits => [
                "emnist-digits-train-images-idx3-ubyte",
                "emnist-digits-train-labels-idx1-ubyte",
                "emnist-digits-test-images-idx3-ubyte",
                "emnist-digits-test-labels-idx1-ubyte",
            ],
            _ => [
                "train-images-idx3-ubyte",
                "train-labels-idx1-ubyte",
                "t10k-images-idx3-ubyte",
                "t10k-labels-idx1-ubyte",
            ],
        }
    }

    /// Resolve the four files (plain or `.gz`), or name what is missing.
    pub fn locate(self, dir: &Path) -> Result<[PathBuf; 4]> {
        let base = dir.join(self.name());
        let mut missing = Vec::new();
        let found = self.file_stems().map(|stem| {
            let plain = base.join(stem);
            let gz = base.join(format!("{stem}.gz"));
            if plain.is_file() {
                plain
            } else if gz.is_file() {
                gz
            } else {
                missing.push(plain.display().to_string());
                plain
            }
        });
        if missing.is_empty() {
            Ok(found)
        } else {
            Err(Error::MissingData(format!(
                "{} files not found (plain or .gz): {}; set --data-dir or {DATA_DIR_ENV}",
                self.name(),
                missing.join(", ")
            )))
        }
    }

    /// Load (train pool, test pool).
    pub fn load(self, dir: &Path) -> Result<(RawImageSet, RawImageSet)> {
        let [ti, tl, si, sl] = self.locate(dir)?;
        Ok((load_idx(&ti, &tl)?, load_idx(&si, &sl)?))
    }
}
