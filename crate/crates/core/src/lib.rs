//! Online syslog template mining by word-length similarity.
//!
//! Messages are tokenized into words, compared against existing clusters of
//! the same word count by the cosine similarity of their word-length vectors
//! (gated by the number of literal words shared at the same positions), and
//! either merged into the best cluster or used to found a new one. Merging
//! turns every differing template position into a wildcard.
//!
//! ```
//! use lenma::{Miner, RawLine};
//!
//! let mut miner = Miner::default();
//! for text in [
//!     "Dec  1 00:27:27 backup sshd[15406]: Invalid user admin from 222.186.30.174",
//!     "Dec  1 04:29:58 backup sshd[16287]: Invalid user a from 218.38.12.218",
//! ] {
//!     miner.process(&RawLine::new(text, "example")).unwrap();
//! }
//! let templates = miner.index().snapshot_templates();
//! assert_eq!(templates[0].template, "sshd * : Invalid user * from *");
//! ```

pub mod analyze;
pub mod cluster;
pub mod ingest;
pub mod miner;
pub mod state;
pub mod tokenizer;
pub mod vectors;

pub use cluster::{
    Assignment, Cluster, ClusterId, ClusterIndex, ConfigError, MiningConfig, ShortMessagePolicy, TemplateSummary,
};
pub use miner::{Counters, Miner, Processed};
pub use state::{export_templates, load_state, save_state, ExportFormat, StateError, StateSnapshot};
pub use tokenizer::{tokenize, HeaderMode, ParsedMessage, RawLine, TokenizeError, TokenizerConfig};
pub use vectors::{
    cosine_similarity, positional_similarity, template_matches, LengthMismatch, TemplateWordVector, Token,
    WordLengthVector,
};
