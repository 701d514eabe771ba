//! Temporal tracking of parse-tree nodes across keystroke-level edit logs,
//! and process metrics built on top of it.

pub mod analysis;
pub mod behaviors;
pub mod bridging;
pub mod correspondence;
pub mod error;
pub mod grammar;
pub mod metrics;
pub mod report;
pub mod session;
pub mod synth;
pub mod tracking;

pub use correspondence::{CharRange, CorrespondenceArray, Correspondences};
pub use error::*;
pub use grammar::{GrammarAdapter, ParseNode, Tree, TreeKind, TreeVersion};
pub use session::{apply_edit, ingest_log, EditEvent, EditKind, Session, Snapshot};
