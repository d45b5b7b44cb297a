use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_est::{estimate_windowed, CirEstimate, PilotFrame, WindowConfig};
use crate::features::{build_ddpdp, flatten, FeatureVector, BIN_COUNT};
use crate::scenario_sim::{
    add_awgn, apply_channel, generate_fading, load_profile, qpsk_symbol, ComplexSignal, SimConfig,
    Snr, MAX_TAPS,
};
use crate::{seed, Error, Result, C64};

pub const DATASET_FORMAT: &str = "scenid-dataset";
pub const DATASET_FORMAT_VERSION: u32 = 1;
/// Length of the repeated pilot block.
pub const PILOT_BLOCK_LEN: usize = 512;
const PILOT_SEED_TAG: u64 = 0x5049_4c4f_5453;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMode {
    /// Simulated tap gains used directly as the estimate.
    OracleCir,
    BemLs,
}

/// BEM-LS settings; the Slepian bandwidth follows the simulated Doppler.
/// The default basis of 3 sequences per 512-sample window is smaller than
/// the `ceil(2 nu N) + 3` sizing rule: it smooths the fastest fading but
/// keeps the noise on empty delay rows low enough for a classifier trained
/// on noiseless features to hold up at low SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BemSettings {
    pub window_len: usize,
    pub basis_count: Option<usize>,
}

impl Default for BemSettings {
    fn default() -> Self {
        Self {
            window_len: PILOT_BLOCK_LEN,
            basis_count: Some(3),
        }
    }
}

/// Dataset protocol. Records are generated for every scenario, every
/// condition (noiseless first when enabled, then `snr_list_db` in order) and
/// `vectors_per_condition` indices. `sim.seed` is not used: every record
/// seed derives from `master_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub scenario_labels: Vec<u8>,
    pub vectors_per_condition: usize,
    pub include_noiseless: bool,
    pub snr_list_db: Vec<f64>,
    pub samples_per_vector: usize,
    pub sim: SimConfig,
    pub estimation: EstimationMode,
    pub bem: BemSettings,
    pub master_seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            scenario_labels: (1..=6).collect(),
            vectors_per_condition: 20,
            include_noiseless: true,
            snr_list_db: vec![0.0, 10.0, 20.0, 30.0, 40.0],
            samples_per_vector: 25600,
            sim: SimConfig::default(),
            estimation: EstimationMode::BemLs,
            bem: BemSettings::default(),
            master_seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.scenario_labels.is_empty() {
            return Err(Error::InvalidArgument("no scenario labels".into()));
        }
        for &label in &self.scenario_labels {
            load_profile(label)?;
        }
        if self.vectors_per_condition == 0 {
            return Err(Error::InvalidArgument("vectors_per_condition must be >= 1".into()));
        }
        if self.samples_per_vector < BIN_COUNT {
            return Err(Error::InvalidArgument(format!(
                "samples_per_vector must be >= {BIN_COUNT}, got {}",
                self.samples_per_vector
            )));
        }
        if let Some(s) = self.snr_list_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("SNR {s} is not finite")));
        }
        if self.conditions().is_empty() {
            return Err(Error::InvalidArgument("no SNR conditions".into()));
        }
        if self.bem.window_len == 0 {
            return Err(Error::InvalidArgument("bem.window_len must be >= 1".into()));
        }
        Ok(())
    }

    pub fn conditions(&self) -> Vec<Snr> {
        let mut c = Vec::new();
        if self.include_noiseless {
            c.push(Snr::Noiseless);
        }
        c.extend(self.snr_list_db.iter().map(|&db| Snr::Db(db)));
        c
    }

    pub fn record_count(&self) -> usize {
        self.scenario_labels.len() * self.conditions().len() * self.vectors_per_condition
    }

    /// SHA-256 of the canonical JSON form of the spec.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        crate::sha256_hex(&[json.as_bytes()])
    }

    pub fn record_seed(&self, label: u8, snr: Snr, index: usize) -> u64 {
        seed::derive(self.master_seed, &[label as u64, snr.key(), index as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub feature: FeatureVector,
    pub label: u8,
    pub snr: Snr,
    pub realization_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub fingerprint: String,
    pub spec: DatasetSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<DatasetRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    label: u8,
    snr_db: Option<f64>,
    seed: u64,
    features: Vec<f64>,
}

/// The fixed QPSK pilot block shared by every record of a dataset.
pub fn pilot_block(master_seed: u64) -> Vec<C64> {
    let mut rng = seed::rng(seed::derive(master_seed, &[PILOT_SEED_TAG]));
    (0..PILOT_BLOCK_LEN)
        .map(|_| qpsk_symbol(rng.random(), rng.random()))
        .collect()
}

/// Channel output for one realization: the pilot block repeated to cover
/// `n` samples behind a cyclic prefix of `MAX_TAPS - 1` symbols, with the
/// prefix samples dropped. Returns the received samples (noiseless) and the
/// true gains aligned with them.
fn simulate_probe(
    spec: &DatasetSpec,
    label: u8,
    realization_seed: u64,
    block: &[C64],
) -> Result<(ComplexSignal, CirEstimate, PilotFrame)> {
    let profile = load_profile(label)?;
    let n = spec.samples_per_vector;
    let prefix = MAX_TAPS - 1;
    let symbols: Vec<C64> = (0..n + prefix)
        .map(|i| block[(i + block.len() - prefix % block.len()) % block.len()])
        .collect();
    let tx = ComplexSignal::new(symbols.clone(), spec.sim.sample_period_s())?;
    let cir = generate_fading(&profile, n + prefix, &spec.sim, seed::derive(realization_seed, &[0]))?;
    let rx = apply_channel(&tx, &cir)?.slice(prefix, n + prefix);
    let grid: Vec<usize> = (0..MAX_TAPS).collect();
    let truth = CirEstimate::from_truth(&cir.slice(prefix, n + prefix), &grid)?;
    Ok((rx, truth, PilotFrame::all_known(&symbols, prefix)))
}

/// One record, fully determined by the spec and its (label, SNR, index).
pub fn generate_record(spec: &DatasetSpec, label: u8, snr: Snr, index: usize, block: &[C64]) -> Result<DatasetRecord> {
    let realization_seed = spec.record_seed(label, snr, index);
    let (rx, truth, pilots) = simulate_probe(spec, label, realization_seed, block)?;
    let estimate = match spec.estimation {
        EstimationMode::OracleCir => truth,
        EstimationMode::BemLs => {
            let rx = add_awgn(&rx, snr, seed::derive(realization_seed, &[1]))?;
            let window = WindowConfig {
                window_len: spec.bem.window_len,
                doppler: spec.sim.doppler_per_sample(),
                basis_count: spec.bem.basis_count,
            };
            estimate_windowed(&rx, &pilots, &truth.delay_grid, &window)?
        }
    };
    let mut feature = flatten(&build_ddpdp(&estimate)?);
    feature.label = Some(label);
    Ok(DatasetRecord {
        feature,
        label,
        snr,
        realization_seed,
    })
}

/// Generates every record of the spec in protocol order. Records are
/// computed in parallel on the current rayon pool; the result does not
/// depend on the thread count.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let block = pilot_block(spec.master_seed);
    let jobs: Vec<(u8, Snr, usize)> = spec
        .scenario_labels
        .iter()
        .flat_map(|&label| {
            spec.conditions()
                .into_iter()
                .flat_map(move |snr| (0..spec.vectors_per_condition).map(move |i| (label, snr, i)))
        })
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(label, snr, i)| {
            generate_record(spec, label, snr, i, &block)
                .map_err(|e| e.context(format!("scenario {label}, {snr}, vector {i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        header: DatasetHeader {
            format: DATASET_FORMAT.into(),
            version: DATASET_FORMAT_VERSION,
            fingerprint: spec.fingerprint(),
            spec: spec.clone(),
        },
        records,
    })
}

/// JSON Lines: the header, then one record per line. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let fmt = |e: serde_json::Error| Error::Format(e.to_string());
    serde_json::to_writer(&mut out, &dataset.header).map_err(fmt)?;
    out.write_all(b"\n")?;
    for r in &dataset.records {
        let line = RecordLine {
            label: r.label,
            snr_db: r.snr.db(),
            seed: r.realization_seed,
            features: r.feature.values.clone(),
        };
        serde_json::to_writer(&mut out, &line).map_err(fmt)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Dataset> {
    let mut lines = input.lines().enumerate();
    let header_line = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::Parse { line: 1, message: "empty dataset file".into() }),
    };
    let header: DatasetHeader = serde_json::from_str(&header_line).map_err(|e| Error::Parse {
        line: 1,
        message: format!("bad header: {e}"),
    })?;
    if header.format != DATASET_FORMAT || header.version != DATASET_FORMAT_VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported dataset format {} v{}", header.format, header.version),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let r: RecordLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let bad = |message: String| Error::Parse { line: lineno, message };
        if !(1..=6).contains(&r.label) {
            return Err(bad(format!("label {} outside 1..=6", r.label)));
        }
        if r.features.len() != MAX_TAPS * BIN_COUNT {
            return Err(bad(format!(
                "{} feature values, expected {}",
                r.features.len(),
                MAX_TAPS * BIN_COUNT
            )));
        }
        records.push(DatasetRecord {
            feature: FeatureVector {
                values: r.features,
                label: Some(r.label),
            },
            label: r.label,
            snr: r.snr_db.into(),
            realization_seed: r.seed,
        });
    }
    Ok(Dataset { header, records })
}

pub fn save_dataset(dataset: &Dataset, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
    write_dataset(dataset, std::io::BufWriter::new(file))
}

pub fn load_dataset(path: &std::path::Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).context(format!("opening {}", path.display())))?;
    read_dataset(std::io::BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
}

/// Records grouped by SNR, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TestGroup {
    pub snr_db: f64,
    pub records: Vec<DatasetRecord>,
}

/// Noiseless records form the training set; finite-SNR records form the
/// test set, grouped by SNR.
pub fn split_train_test(records: &[DatasetRecord]) -> Result<(Vec<DatasetRecord>, Vec<TestGroup>)> {
    let train: Vec<DatasetRecord> = records.iter().filter(|r| r.snr.is_noiseless()).cloned().collect();
    if train.is_empty() {
        return Err(Error::InvalidSplit(
            "no noiseless records to train on; generate the dataset with include_noiseless = true".into(),
        ));
    }
    let mut groups: Vec<TestGroup> = Vec::new();
    for r in records {
        let Some(db) = r.snr.db() else { continue };
        match groups.iter_mut().find(|g| g.snr_db.to_bits() == db.to_bits()) {
            Some(g) => g.records.push(r.clone()),
            None => groups.push(TestGroup {
                snr_db: db,
                records: vec![r.clone()],
            }),
        }
    }
    if groups.is_empty() {
        log::warn!("dataset has no noisy records; the test set is empty");
    }
    groups.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    Ok((train, groups))
}
