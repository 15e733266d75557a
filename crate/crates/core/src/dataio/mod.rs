//! On-disk data: rawvid clips, frame images, synthetic datasets and splits.

use std::path::PathBuf;

pub mod pnm;
pub mod rawvid;
pub mod split;
pub mod synth;

pub use rawvid::{read_rawvid, write_rawvid, RawVidError, RawVidHeader};
pub use split::{split_table, Split, SplitError, SplitWarning};
pub use synth::{generate_synthetic_dataset, SynthError, SyntheticSpec};

/// Annotation table plus the directory holding the clips it names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetBundle {
    pub table_path: PathBuf,
    pub media_dir: PathBuf,
    pub target_index: usize,
}
