use serde::{Deserialize, Serialize};

use crate::cluster::{Assignment, ClusterIndex, ConfigError, MiningConfig};
use crate::tokenizer::{tokenize, RawLine, TokenizeError, TokenizerConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub messages_processed: u64,
    pub header_parse_failures: u64,
}

/// Outcome of feeding one line to a [`Miner`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Processed {
    pub assignment: Assignment,
    pub header_fallback: bool,
}

/// A cluster index bundled with the configuration it was built under and
/// running counters. This is the unit that gets saved and restored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Miner {
    pub(crate) index: ClusterIndex,
    pub(crate) mining: MiningConfig,
    pub(crate) tokenizer: TokenizerConfig,
    pub(crate) counters: Counters,
}

impl Miner {
    pub fn new(mining: MiningConfig, tokenizer: TokenizerConfig) -> Result<Self, ConfigError> {
        mining.validate()?;
        Ok(Miner {
            mining,
            tokenizer,
            ..Miner::default()
        })
    }

    pub(crate) fn from_parts(
        index: ClusterIndex,
        mining: MiningConfig,
        tokenizer: TokenizerConfig,
        counters: Counters,
    ) -> Self {
        Miner {
            index,
            mining,
            tokenizer,
            counters,
        }
    }

    pub fn index(&self) -> &ClusterIndex {
        &self.index
    }

    pub fn mining_config(&self) -> &MiningConfig {
        &self.mining
    }

    pub fn tokenizer_config(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    /// Tokenizes and clusters one line. Lines with no body words are
    /// rejected without touching the index or the counters.
    pub fn process(&mut self, line: &RawLine) -> Result<Processed, TokenizeError> {
        let msg = tokenize(line, &self.tokenizer)?;
        let assignment = self.index.find_or_create(&msg, &self.mining);
        self.counters.messages_processed += 1;
        if msg.header_fallback {
            self.counters.header_parse_failures += 1;
        }
        Ok(Processed {
            assignment,
            header_fallback: msg.header_fallback,
        })
    }
}
