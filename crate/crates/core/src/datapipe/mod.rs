//! Keypoint dataset handling: labels, augmentation, partitioning and
//! per-corner evaluation.

pub mod augment;
pub mod eval;
pub mod labels;
pub mod order;
pub mod split;

pub use augment::{augment, augment_dataset, AugmentOp};
pub use eval::{evaluate, EvalReport};
pub use labels::{denormalize_labels, normalize_labels, LabeledImage, Units};
pub use order::reorder_canonical;
pub use split::{kfold_partition, split_train_val, FoldPlan};

#[derive(Debug, thiserror::Error)]
pub enum DatapipeError {
    #[error("corner order is ambiguous: {0}")]
    AmbiguousOrder(String),
    #[error("labels of {id} are in {found} units, expected {expected}")]
    Units {
        id: String,
        found: Units,
        expected: Units,
    },
    #[error("id {0} is present in only one of the label sets")]
    IdMismatch(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("no items to process")]
    Empty,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("label CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
