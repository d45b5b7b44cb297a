//! End-to-end flows: dataset generation, the noiseless-train protocol,
//! evaluation reports, sounding and signal files.

mod dataset;
mod eval;
mod signal_io;
mod sound;

pub use dataset::{
    generate_dataset, generate_record, load_dataset, pilot_block, read_dataset, save_dataset,
    split_train_test, write_dataset, BemSettings, Dataset, DatasetHeader, DatasetRecord,
    DatasetSpec, EstimationMode, TestGroup, DATASET_FORMAT, DATASET_FORMAT_VERSION,
    PILOT_BLOCK_LEN,
};
pub use eval::{evaluate, evaluate_with, report_csv, EvalReport, SnrResult};
pub use signal_io::{load_signal, parse_signal, save_signal, write_signal};
pub use sound::sound_and_profile;
