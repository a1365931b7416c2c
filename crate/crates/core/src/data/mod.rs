//! Dataset ingestion, synthetic domain-shift generation, and model
//! persistence.

mod model_io;
mod sparse;
mod synth;

pub use model_io::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use sparse::{read_sparse_dataset, write_sparse_dataset};
pub use synth::{make_shifted_pair, ShiftKind, ShiftMap, SynthConfig, SynthOutput};
