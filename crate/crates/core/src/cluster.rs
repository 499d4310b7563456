//! The online clustering engine.
//!
//! Each incoming message is compared only against clusters with the same
//! number of words. A cluster whose template already matches the message
//! scores 1. Otherwise the cluster must share at least the positional
//! threshold of literal words with the message, and then scores the cosine
//! similarity of the two word-length vectors. The best cluster scoring
//! strictly above the cluster threshold absorbs the message; if there is
//! none a new cluster is founded.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::ParsedMessage;
use crate::vectors::{
    cosine_similarity, positional_similarity, template_matches, LengthMismatch, TemplateWordVector, Token,
    WordLengthVector,
};

pub type ClusterId = u64;

/// How the positional gate treats messages with fewer words than the
/// positional threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortMessagePolicy {
    /// Gate on `min(position_threshold, word_count)`.
    #[default]
    EffectiveMin,
    /// Gate on `position_threshold` regardless of message length.
    Strict,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("cluster threshold must be in (0, 1], got {0}")]
    ClusterThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub cluster_threshold: f64,
    pub position_threshold: usize,
    #[serde(default)]
    pub short_message_policy: ShortMessagePolicy,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            cluster_threshold: 0.9,
            position_threshold: 3,
            short_message_policy: ShortMessagePolicy::EffectiveMin,
        }
    }
}

impl MiningConfig {
    pub fn new(
        cluster_threshold: f64,
        position_threshold: usize,
        short_message_policy: ShortMessagePolicy,
    ) -> Result<Self, ConfigError> {
        let cfg = MiningConfig {
            cluster_threshold,
            position_threshold,
            short_message_policy,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let tc = self.cluster_threshold;
        if tc > 0.0 && tc <= 1.0 {
            Ok(())
        } else {
            Err(ConfigError::ClusterThreshold(tc))
        }
    }

    /// Minimum number of shared literal positions for a message of `words`
    /// words.
    pub fn position_gate(&self, words: usize) -> usize {
        match self.short_message_policy {
            ShortMessagePolicy::EffectiveMin => self.position_threshold.min(words),
            ShortMessagePolicy::Strict => self.position_threshold,
        }
    }
}

/// An inferred template together with its current length vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub(crate) id: ClusterId,
    pub(crate) length_vec: WordLengthVector,
    pub(crate) template: TemplateWordVector,
    pub(crate) match_count: u64,
    pub(crate) first_seen: DateTime<Utc>,
    pub(crate) last_seen: DateTime<Utc>,
}

impl Cluster {
    /// A fresh cluster whose template is the message verbatim.
    pub fn new<S: AsRef<str>>(id: ClusterId, words: &[S], seen: DateTime<Utc>) -> Option<Self> {
        Some(Cluster {
            id,
            length_vec: WordLengthVector::from_words(words)?,
            template: TemplateWordVector::from_words(words),
            match_count: 1,
            first_seen: seen,
            last_seen: seen,
        })
    }

    pub(crate) fn from_parts(
        id: ClusterId,
        length_vec: WordLengthVector,
        template: TemplateWordVector,
        match_count: u64,
        first_seen: DateTime<Utc>,
        last_seen: DateTime<Utc>,
    ) -> Self {
        Cluster {
            id,
            length_vec,
            template,
            match_count,
            first_seen,
            last_seen,
        }
    }

    pub fn id(&self) -> ClusterId {
        self.id
    }

    pub fn length_vec(&self) -> &WordLengthVector {
        &self.length_vec
    }

    pub fn template(&self) -> &TemplateWordVector {
        &self.template
    }

    pub fn match_count(&self) -> u64 {
        self.match_count
    }

    pub fn first_seen(&self) -> DateTime<Utc> {
        self.first_seen
    }

    pub fn last_seen(&self) -> DateTime<Utc> {
        self.last_seen
    }

    pub fn len(&self) -> usize {
        self.length_vec.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Score of a message against this cluster, in [0, 1]. The checks run in
    /// order: word count, template match, positional gate, cosine.
    pub fn similarity(&self, lengths: &WordLengthVector, words: &TemplateWordVector, cfg: &MiningConfig) -> f64 {
        if self.length_vec.len() != lengths.len() || self.template.len() != words.len() {
            return 0.0;
        }
        if template_matches(&self.template, words) {
            return 1.0;
        }
        let shared = positional_similarity(&self.template, words).unwrap_or(0);
        if shared < cfg.position_gate(words.len()) {
            return 0.0;
        }
        cosine_similarity(&self.length_vec, lengths).unwrap_or(0.0)
    }

    /// Overwrites every differing length with the message's; the vector ends
    /// up equal to `lengths`.
    pub fn update_length_vec(&mut self, lengths: &WordLengthVector) -> Result<(), LengthMismatch> {
        if self.length_vec.len() != lengths.len() {
            return Err(LengthMismatch {
                left: self.length_vec.len(),
                right: lengths.len(),
            });
        }
        if self.length_vec != *lengths {
            self.length_vec = lengths.clone();
        }
        Ok(())
    }

    /// Replaces every template position that differs from the message word
    /// with a wildcard. Wildcards stay wildcards.
    pub fn update_template(&mut self, words: &TemplateWordVector) -> Result<(), LengthMismatch> {
        if self.template.len() != words.len() {
            return Err(LengthMismatch {
                left: self.template.len(),
                right: words.len(),
            });
        }
        for (slot, word) in self.template.tokens_mut().iter_mut().zip(words.tokens()) {
            if slot != word {
                *slot = Token::Wildcard;
            }
        }
        Ok(())
    }
}

/// Result of placing one message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub cluster_id: ClusterId,
    pub created: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSummary {
    pub id: ClusterId,
    pub template: String,
    pub count: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("duplicate cluster id {0}")]
    DuplicateId(ClusterId),
    #[error("cluster {id} is not below next_cluster_id {next}")]
    IdOutOfRange { id: ClusterId, next: ClusterId },
    #[error("cluster {0}: length vector and template differ in length")]
    ShapeMismatch(ClusterId),
    #[error("cluster {0}: match_count must be at least 1")]
    ZeroCount(ClusterId),
    #[error("cluster {0}: template word is empty or contains whitespace")]
    BadWord(ClusterId),
}

/// The set of clusters, bucketed by word count. Clusters inside a bucket are
/// kept in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterIndex {
    buckets: BTreeMap<usize, Vec<Cluster>>,
    locations: HashMap<ClusterId, (usize, usize)>,
    next_id: ClusterId,
}

impl Default for ClusterIndex {
    fn default() -> Self {
        Self::new()
    }
}

impl ClusterIndex {
    pub const FIRST_ID: ClusterId = 1;

    pub fn new() -> Self {
        ClusterIndex {
            buckets: BTreeMap::new(),
            locations: HashMap::new(),
            next_id: Self::FIRST_ID,
        }
    }

    /// Rebuilds an index from stored clusters, checking every invariant.
    pub fn from_clusters(clusters: Vec<Cluster>, next_id: ClusterId) -> Result<Self, IndexError> {
        let mut seen = HashSet::new();
        for c in &clusters {
            if !seen.insert(c.id) {
                return Err(IndexError::DuplicateId(c.id));
            }
            if c.id >= next_id {
                return Err(IndexError::IdOutOfRange {
                    id: c.id,
                    next: next_id,
                });
            }
            if c.length_vec.len() != c.template.len() {
                return Err(IndexError::ShapeMismatch(c.id));
            }
            if c.match_count == 0 {
                return Err(IndexError::ZeroCount(c.id));
            }
            let bad_word = c
                .template
                .tokens()
                .iter()
                .filter_map(Token::as_word)
                .any(|w| w.is_empty() || w.contains(char::is_whitespace));
            if bad_word {
                return Err(IndexError::BadWord(c.id));
            }
        }

        let mut index = ClusterIndex {
            next_id,
            ..ClusterIndex::new()
        };
        let mut sorted = clusters;
        sorted.sort_by_key(|c| c.id);
        for c in sorted {
            index.push(c);
        }
        Ok(index)
    }

    fn push(&mut self, cluster: Cluster) {
        let bucket = self.buckets.entry(cluster.len()).or_default();
        self.locations.insert(cluster.id, (cluster.len(), bucket.len()));
        bucket.push(cluster);
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn next_cluster_id(&self) -> ClusterId {
        self.next_id
    }

    pub fn get(&self, id: ClusterId) -> Option<&Cluster> {
        let &(n, pos) = self.locations.get(&id)?;
        self.buckets.get(&n).map(|b| &b[pos])
    }

    /// Clusters with exactly `words` words, oldest first.
    pub fn bucket(&self, words: usize) -> &[Cluster] {
        self.buckets.get(&words).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All clusters in ascending id order.
    pub fn clusters(&self) -> Vec<&Cluster> {
        let mut all: Vec<&Cluster> = self.buckets.values().flatten().collect();
        all.sort_by_key(|c| c.id);
        all
    }

    pub fn find_or_create(&mut self, msg: &ParsedMessage<'_>, cfg: &MiningConfig) -> Assignment {
        self.assign(&msg.words, msg.seen_at(), cfg)
    }

    /// Places a word list, creating a cluster when no existing one scores
    /// strictly above the cluster threshold. Ties go to the lowest id.
    ///
    /// # Panics
    ///
    /// Panics if `words` is empty or contains an empty word.
    pub fn assign<S: AsRef<str>>(&mut self, words: &[S], seen: DateTime<Utc>, cfg: &MiningConfig) -> Assignment {
        let lengths = WordLengthVector::from_words(words).expect("message must have non-empty words");
        let template = TemplateWordVector::from_words(words);

        let mut best: Option<(usize, f64)> = None;
        for (pos, cluster) in self.bucket(lengths.len()).iter().enumerate() {
            let score = cluster.similarity(&lengths, &template, cfg);
            if score > cfg.cluster_threshold && best.is_none_or(|(_, s)| score > s) {
                best = Some((pos, score));
            }
        }

        match best {
            None => {
                let id = self.next_id;
                self.next_id += 1;
                let cluster = Cluster::new(id, words, seen).expect("checked above");
                self.push(cluster);
                Assignment {
                    cluster_id: id,
                    created: true,
                }
            }
            Some((pos, _)) => {
                let cluster = &mut self.buckets.get_mut(&lengths.len()).expect("bucket exists")[pos];
                cluster.update_length_vec(&lengths).expect("same bucket");
                cluster.update_template(&template).expect("same bucket");
                cluster.match_count += 1;
                cluster.first_seen = cluster.first_seen.min(seen);
                cluster.last_seen = cluster.last_seen.max(seen);
                Assignment {
                    cluster_id: cluster.id,
                    created: false,
                }
            }
        }
    }

    /// `(id, rendered template, count)` for every cluster, ascending id.
    pub fn snapshot_templates(&self) -> Vec<TemplateSummary> {
        self.clusters()
            .into_iter()
            .map(|c| TemplateSummary {
                id: c.id,
                template: c.template.render(),
                count: c.match_count,
            })
            .collect()
    }
}
