//! Dataset ingestion, synthetic generators and result persistence.

mod generate;
mod idx;
mod results;

pub use generate::{generate_mixture_scene, generate_two_cluster_2d, Interval, MixtureScene, TabularDataset};
pub use idx::{load_digit_pair, read_idx, read_idx_file, write_idx, DigitPair, IdxData, IdxTensor, IdxType};
pub use results::{read_results, write_results, Cell, ResultTable};
