//! File-level tooling around [`gflavor_core`]: building paired chunk
//! corpora, IoU evaluation, PGM layer images and a synthetic file-pair
//! generator. The `gflavor` binary exposes all of it on the command line.

pub mod corpus;
pub mod evaluate;
pub mod pgm;
pub mod summary;
pub mod synth;

pub use corpus::{build_corpus, CorpusOptions, CorpusReport, FilePair, PairRecord};
pub use evaluate::{evaluate_texts, evaluate_translation, MetricsTable};
