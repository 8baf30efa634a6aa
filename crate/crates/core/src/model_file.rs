//! Model variants used in experiments and the versioned binary model file.
//!
//! Layout (little-endian): magic `WLKAFNET`, format version `u32`, kind byte
//! (0 = complex network, 1 = real baseline), then the model body. Length
//! prefixes are `u64`; complex arrays are stored as interleaved `(re, im)`.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::activations::{ActivationSpec, KernelKind};
use crate::baseline::RealMlp;
use crate::cnum::C64;
use crate::error::{Error, Result};
use crate::model::{Classifier, GradBuf, ParamBuf, ParamBufMut, Targets, TrainObjective};
use crate::network::{ComplexNetwork, NetworkConfig};
use crate::persist::{invalid, Reader, Writer};

pub const MODEL_MAGIC: &[u8; 8] = b"WLKAFNET";
pub const MODEL_VERSION: u32 = 1;

/// Architecture family trained by the experiment commands.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelVariant {
    /// Real MLP on `[Re x; Im x]`.
    RealNn,
    /// Complex network with the given hidden activation.
    Complex(ActivationSpec),
}

impl ModelVariant {
    /// The four benchmark variants, in report order.
    pub fn benchmark() -> Vec<ModelVariant> {
        vec![
            ModelVariant::RealNn,
            ModelVariant::Complex(ActivationSpec::Kaf(KernelKind::Independent)),
            ModelVariant::Complex(ActivationSpec::WlKafCase1),
            ModelVariant::Complex(ActivationSpec::case2_default()),
        ]
    }

    /// Build an untrained model for `input_dim` complex features.
    pub fn build(&self, input_dim: usize, classes: usize, arch: &Architecture, seed: u64) -> Result<Model> {
        match self {
            ModelVariant::RealNn => Ok(Model::Real(RealMlp::new(input_dim, &arch.hidden, classes, seed)?)),
            ModelVariant::Complex(spec) => {
                let mut cfg = NetworkConfig::new(input_dim, classes, spec.clone(), seed);
                cfg.hidden = arch.hidden.clone();
                cfg.dict_points = arch.dict_points;
                cfg.dict_range = arch.dict_range;
                Ok(Model::Complex(ComplexNetwork::new(cfg)?))
            }
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelVariant::RealNn => f.write_str("real_nn"),
            ModelVariant::Complex(ActivationSpec::Kaf(KernelKind::Independent)) => f.write_str("kaf_independent"),
            ModelVariant::Complex(ActivationSpec::WlKafCase1) => f.write_str("wlkaf_case1"),
            ModelVariant::Complex(s) if *s == ActivationSpec::case2_default() => f.write_str("wlkaf_case2"),
            ModelVariant::Complex(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    /// Accepts the four benchmark names or any activation name.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real_nn" => Ok(ModelVariant::RealNn),
            "kaf_independent" => Ok(ModelVariant::Complex(ActivationSpec::Kaf(KernelKind::Independent))),
            "wlkaf_case1" => Ok(ModelVariant::Complex(ActivationSpec::WlKafCase1)),
            "wlkaf_case2" => Ok(ModelVariant::Complex(ActivationSpec::case2_default())),
            other => other.parse::<ActivationSpec>().map(ModelVariant::Complex).map_err(|_| {
                Error::Parameter(format!(
                    "unknown model '{other}' (expected real_nn, kaf_independent, wlkaf_case1, wlkaf_case2 or an activation name)"
                ))
            }),
        }
    }
}

/// Shared architecture settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub dict_points: usize,
    pub dict_range: (f64, f64),
}

impl Default for Architecture {
    fn default() -> Self {
        Self { hidden: vec![100, 100, 100], dict_points: 8, dict_range: (-2.0, 2.0) }
    }
}

/// Either trainable model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Complex(ComplexNetwork),
    Real(RealMlp),
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Complex($m) => $e,
            Model::Real($m) => $e,
        }
    };
}

impl Classifier for Model {
    fn input_dim(&self) -> usize {
        delegate!(self, m => m.input_dim())
    }

    fn classes(&self) -> usize {
        delegate!(self, m => m.classes())
    }

    fn param_names(&self) -> Vec<String> {
        delegate!(self, m => m.param_names())
    }

    fn params(&self) -> Vec<ParamBuf<'_>> {
        delegate!(self, m => m.params())
    }

    fn params_mut(&mut self) -> Vec<ParamBufMut<'_>> {
        delegate!(self, m => m.params_mut())
    }

    fn predict_proba(&self, x: &[C64]) -> Result<Vec<f64>> {
        delegate!(self, m => m.predict_proba(x))
    }

    fn loss_and_grad(&self, x: &[C64], targets: Targets<'_>, obj: &TrainObjective) -> Result<(f64, Vec<GradBuf>)> {
        delegate!(self, m => m.loss_and_grad(x, targets, obj))
    }

    fn objective(&self, x: &[C64], targets: Targets<'_>, obj: &TrainObjective) -> Result<f64> {
        delegate!(self, m => m.objective(x, targets, obj))
    }
}

impl Model {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(Vec::new());
        self.write(&mut w).expect("writing to memory cannot fail");
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read(bytes, "<memory>")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Writer::new(BufWriter::new(file));
        self.write(&mut w).map_err(|e| Error::io(path, e))?;
        w.into_inner().flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), &path.display().to_string())
    }

    fn write<W: Write>(&self, w: &mut Writer<W>) -> std::io::Result<()> {
        w.bytes(MODEL_MAGIC)?;
        w.u32(MODEL_VERSION)?;
        match self {
            Model::Complex(net) => {
                w.u8(0)?;
                net.write_body(w)
            }
            Model::Real(net) => {
                w.u8(1)?;
                net.write_body(w)
            }
        }
    }

    fn read<R: Read>(src: R, what: &str) -> Result<Self> {
        let mut r = Reader::new(src, 1 << 28);
        let format = |r: &Reader<R>, e: std::io::Error| Error::Format {
            what: what.to_string(),
            offset: r.offset(),
            reason: e.to_string(),
        };
        let result = (|| {
            if r.bytes(8)? != MODEL_MAGIC {
                return Err(invalid("not a model file (bad magic)"));
            }
            let version = r.u32()?;
            if version != MODEL_VERSION {
                return Err(invalid(&format!("unsupported model format version {version}")));
            }
            let model = match r.u8()? {
                0 => Model::Complex(ComplexNetwork::read_body(&mut r)?),
                1 => Model::Real(RealMlp::read_body(&mut r)?),
                k => return Err(invalid(&format!("unknown model kind {k}"))),
            };
            r.expect_end()?;
            Ok(model)
        })();
        result.map_err(|e| format(&r, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(variant: &ModelVariant) -> Model {
        let arch = Architecture { hidden: vec![5, 4], dict_points: 4, dict_range: (-2.0, 2.0) };
        variant.build(3, 2, &arch, 11).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let mut all = ModelVariant::benchmark();
        all.push("split-tanh".parse().unwrap());
        all.push("kaf-real-gaussian".parse().unwrap());
        for v in all {
            let m = small(&v);
            let bytes = m.to_bytes();
            let back = Model::from_bytes(&bytes).unwrap();
            assert_eq!(back.to_bytes(), bytes, "{v}");
            assert_eq!(back, m, "{v}");
            let x = [C64::new(0.3, -0.2), C64::new(1.0, 0.5), C64::new(-0.4, 0.0)];
            assert_eq!(back.predict_proba(&x).unwrap(), m.predict_proba(&x).unwrap());
        }
    }

    #[test]
    fn trained_model_reloads_equal() {
        use crate::data::synthetic::xor_like;
        use crate::model::TrainObjective;
        use crate::optim::{train, TrainConfig};
        let ds = xor_like(200, 50, 50, 1);
        let arch = Architecture { hidden: vec![6], dict_points: 4, dict_range: (-2.0, 2.0) };
        let cfg = TrainConfig { max_iterations: 60, eval_every: 20, ..TrainConfig::default() };
        for v in ModelVariant::benchmark() {
            let m = v.build(ds.dim(), ds.classes, &arch, 2).unwrap();
            let (best, _) = train(m, &ds.train, &ds.val, &cfg, &TrainObjective::cross_entropy(1e-4)).map_err(|a| a.error).unwrap();
            assert_eq!(Model::from_bytes(&best.to_bytes()).unwrap(), best, "{v}");
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in ModelVariant::benchmark() {
            assert_eq!(v.to_string().parse::<ModelVariant>().unwrap(), v);
        }
        assert!(matches!("nope".parse::<ModelVariant>(), Err(Error::Parameter(_))));
    }

    #[test]
    fn corrupted_files_fail_with_offsets() {
        let bytes = small(&ModelVariant::Complex(ActivationSpec::WlKafCase1)).to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Model::from_bytes(&bad), Err(Error::Format { offset: 8, .. })));
        let truncated = &bytes[..bytes.len() - 5];
        assert!(matches!(Model::from_bytes(truncated), Err(Error::Format { .. })));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(Model::from_bytes(&extra), Err(Error::Format { .. })));
        let mut version = bytes;
        version[8] = 99;
        assert!(matches!(Model::from_bytes(&version), Err(Error::Format { .. })));
    }
}
