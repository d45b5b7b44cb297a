use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use super::train::TrainConfig;
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT: &str = "scenid-mlp";

/// On-disk model: JSON with shortest round-trip float formatting, so equal
/// parameters always serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub activation: String,
    pub layer_sizes: Vec<usize>,
    /// Row-major `(out x in)` matrices.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    /// SHA-256 of the training configuration and dataset fingerprint.
    pub train_fingerprint: String,
    pub train_config: TrainConfig,
}

impl ModelFile {
    pub fn new(params: &MlpParams, config: &TrainConfig, dataset_fingerprint: &str) -> Result<Self> {
        let config_json = serde_json::to_string(config).map_err(|e| Error::Format(e.to_string()))?;
        let train_fingerprint =
            crate::sha256_hex(&[config_json.as_bytes(), b"\n", dataset_fingerprint.as_bytes()]);
        Ok(Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            activation: "tanh".into(),
            layer_sizes: params.layer_sizes.clone(),
            weights: params.weights.clone(),
            biases: params.biases.clone(),
            train_fingerprint,
            train_config: config.clone(),
        })
    }

    pub fn params(&self) -> Result<MlpParams> {
        if self.format != MODEL_FORMAT || self.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        if self.activation != "tanh" {
            return Err(Error::Format(format!("unsupported activation {}", self.activation)));
        }
        let params = MlpParams {
            layer_sizes: self.layer_sizes.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        };
        params.validate()?;
        Ok(params)
    }
}

pub fn write_model<W: Write>(model: &ModelFile, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, model).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_model<R: Read>(input: R) -> Result<ModelFile> {
    serde_json::from_reader(input).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).context(format!("opening {}", path.display())))?;
    read_model(std::io::BufReader::new(file)).map_err(|e| e.context(format!("reading {}", path.display())))
}
