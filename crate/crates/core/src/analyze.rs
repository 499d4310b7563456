//! Per-minute group analysis of an assignment log.
//!
//! Messages are bucketed by the minute of their timestamp into template
//! histograms. The histograms are then clustered online with a normalized
//! chi-square distance against running-mean centroids, and the resulting
//! group clusters are split into frequent and unique patterns.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use serde::Serialize;

use crate::cluster::ClusterId;
use crate::tokenizer::{tokenize, RawLine, TokenizerConfig};

pub const DEFAULT_DISTANCE_THRESHOLD: f64 = 0.5;

/// Group clusters holding at most this fraction of all groups (and never
/// fewer than one group) count as unique patterns.
pub const UNIQUE_FRACTION: f64 = 0.01;

pub type Histogram = BTreeMap<ClusterId, u64>;
type Distribution = BTreeMap<ClusterId, f64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinuteGroup {
    pub minute_key: DateTime<Utc>,
    pub histogram: Histogram,
}

impl MinuteGroup {
    pub fn total(&self) -> u64 {
        self.histogram.values().sum()
    }

    fn distribution(&self) -> Distribution {
        normalize(&self.histogram)
    }
}

fn normalize(h: &Histogram) -> Distribution {
    let total: u64 = h.values().sum();
    if total == 0 {
        return Distribution::new();
    }
    h.iter().map(|(&k, &v)| (k, v as f64 / total as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grouping {
    pub groups: Vec<MinuteGroup>,
    /// Records dropped for lacking a timestamp.
    pub missing_timestamps: u64,
}

pub fn truncate_to_minute(ts: DateTime<Utc>) -> DateTime<Utc> {
    ts.duration_trunc(TimeDelta::minutes(1)).unwrap_or(ts)
}

/// Buckets `(cluster_id, timestamp)` records into per-minute histograms,
/// sorted by minute. Records without a timestamp are counted and skipped.
pub fn group_by_minute<I>(records: I) -> Grouping
where
    I: IntoIterator<Item = (ClusterId, Option<DateTime<Utc>>)>,
{
    let mut minutes: BTreeMap<DateTime<Utc>, Histogram> = BTreeMap::new();
    let mut missing = 0;
    for (id, ts) in records {
        match ts {
            Some(ts) => {
                *minutes
                    .entry(truncate_to_minute(ts))
                    .or_default()
                    .entry(id)
                    .or_default() += 1
            }
            None => missing += 1,
        }
    }
    Grouping {
        groups: minutes
            .into_iter()
            .map(|(minute_key, histogram)| MinuteGroup { minute_key, histogram })
            .collect(),
        missing_timestamps: missing,
    }
}

/// Half the chi-square sum over two distributions: 0 for identical, 1 for
/// disjoint supports.
fn chi2(a: &Distribution, b: &Distribution) -> f64 {
    let mut sum = 0.0;
    let mut term = |x: f64, y: f64| {
        if x + y > 0.0 {
            sum += (x - y) * (x - y) / (x + y);
        }
    };
    for (k, &x) in a {
        term(x, b.get(k).copied().unwrap_or(0.0));
    }
    for (k, &y) in b {
        if !a.contains_key(k) {
            term(0.0, y);
        }
    }
    (0.5 * sum).clamp(0.0, 1.0)
}

/// Symmetric chi-square distance between the normalized histograms of two
/// groups, in [0, 1].
pub fn chi2_distance(a: &MinuteGroup, b: &MinuteGroup) -> f64 {
    chi2(&a.distribution(), &b.distribution())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCluster {
    pub id: usize,
    pub members: Vec<DateTime<Utc>>,
    /// Mean of the members' normalized histograms.
    pub centroid: BTreeMap<ClusterId, f64>,
}

impl GroupCluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    fn absorb(&mut self, minute: DateTime<Utc>, dist: &Distribution) {
        let n = self.members.len() as f64;
        for v in self.centroid.values_mut() {
            *v *= n / (n + 1.0);
        }
        for (&k, &p) in dist {
            *self.centroid.entry(k).or_insert(0.0) += p / (n + 1.0);
        }
        self.members.push(minute);
    }
}

/// Assigns each group, in order, to the nearest group cluster whose centroid
/// is closer than `threshold`, or starts a new one. Ties go to the lowest id.
pub fn cluster_groups(groups: &[MinuteGroup], threshold: f64) -> Vec<GroupCluster> {
    let mut clusters: Vec<GroupCluster> = Vec::new();
    for g in groups {
        let dist = g.distribution();
        let nearest = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (i, chi2(&dist, &c.centroid)))
            .filter(|&(_, d)| d < threshold)
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((i, d)),
            });
        match nearest {
            Some((i, _)) => clusters[i].absorb(g.minute_key, &dist),
            None => clusters.push(GroupCluster {
                id: clusters.len(),
                members: vec![g.minute_key],
                centroid: dist,
            }),
        }
    }
    clusters
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternEntry {
    pub group_cluster_id: usize,
    pub size: usize,
    pub first_minute: DateTime<Utc>,
    /// `(template id, share)` by descending share.
    pub breakdown: Vec<(ClusterId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PatternReport {
    pub total_groups: usize,
    pub frequent: Vec<PatternEntry>,
    pub unique: Vec<PatternEntry>,
}

impl PatternReport {
    pub fn is_empty(&self) -> bool {
        self.frequent.is_empty() && self.unique.is_empty()
    }
}

fn entry(gc: &GroupCluster) -> PatternEntry {
    let mut breakdown: Vec<(ClusterId, f64)> = gc.centroid.iter().map(|(&k, &v)| (k, v)).collect();
    breakdown.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    PatternEntry {
        group_cluster_id: gc.id,
        size: gc.size(),
        first_minute: gc.members.iter().min().copied().expect("group clusters are non-empty"),
        breakdown,
    }
}

/// The `top_k` largest group clusters are frequent patterns; of the rest,
/// those at or below the unique-size cutoff are unique patterns.
pub fn report_patterns(gcs: &[GroupCluster], top_k: usize) -> PatternReport {
    let total: usize = gcs.iter().map(GroupCluster::size).sum();
    let cutoff = ((total as f64 * UNIQUE_FRACTION).floor() as usize).max(1);

    let mut by_size: Vec<&GroupCluster> = gcs.iter().collect();
    by_size.sort_by(|a, b| b.size().cmp(&a.size()).then(a.id.cmp(&b.id)));
    let (frequent, rest) = by_size.split_at(top_k.min(by_size.len()));

    let mut unique: Vec<PatternEntry> = rest
        .iter()
        .filter(|gc| gc.size() <= cutoff)
        .map(|gc| entry(gc))
        .collect();
    unique.sort_by_key(|e| e.first_minute);
    PatternReport {
        total_groups: total,
        frequent: frequent.iter().map(|gc| entry(gc)).collect(),
        unique,
    }
}

/// Parsed assignment log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssignmentLog {
    pub records: Vec<(ClusterId, Option<DateTime<Utc>>)>,
    pub malformed: u64,
}

/// Reads `cluster_id<TAB>raw text` records and recovers each message
/// timestamp by re-tokenizing the raw text. `reference` supplies the year
/// for headers that carry none.
pub fn read_assignment_log<R: BufRead>(
    reader: R,
    tokenizer: &TokenizerConfig,
    reference: DateTime<Utc>,
) -> io::Result<AssignmentLog> {
    let mut log = AssignmentLog::default();
    for line in reader.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let Some((id, text)) = line.split_once('\t') else {
            log.malformed += 1;
            continue;
        };
        let Ok(id) = id.parse::<ClusterId>() else {
            log.malformed += 1;
            continue;
        };
        let raw = RawLine::with_arrival(text, "assignments", reference);
        let ts = tokenize(&raw, tokenizer).ok().and_then(|m| m.msg_ts);
        log.records.push((id, ts));
    }
    Ok(log)
}

fn template_name(templates: &BTreeMap<ClusterId, String>, id: ClusterId) -> &str {
    templates.get(&id).map(String::as_str).unwrap_or("?")
}

/// Human-readable report. `templates` maps template ids to their rendering.
pub fn write_report_text<W: Write>(
    report: &PatternReport,
    templates: &BTreeMap<ClusterId, String>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "groups: {}", report.total_groups)?;
    for (title, entries) in [("frequent", &report.frequent), ("unique", &report.unique)] {
        writeln!(out, "{title} patterns: {}", entries.len())?;
        for e in entries {
            writeln!(
                out,
                "  group-cluster {} size {} first {}",
                e.group_cluster_id,
                e.size,
                e.first_minute.format("%Y-%m-%dT%H:%M")
            )?;
            for (id, share) in &e.breakdown {
                writeln!(out, "    {share:.4}  [{id}] {}", template_name(templates, *id))?;
            }
        }
    }
    out.flush()
}

/// One row per (group cluster, template) pair.
pub fn write_report_csv<W: Write>(
    report: &PatternReport,
    templates: &BTreeMap<ClusterId, String>,
    out: W,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind",
        "group_cluster",
        "size",
        "first_minute",
        "template_id",
        "share",
        "template",
    ])?;
    for (kind, entries) in [("frequent", &report.frequent), ("unique", &report.unique)] {
        for e in entries {
            for (id, share) in &e.breakdown {
                w.write_record([
                    kind.to_string(),
                    e.group_cluster_id.to_string(),
                    e.size.to_string(),
                    e.first_minute.format("%Y-%m-%dT%H:%M").to_string(),
                    id.to_string(),
                    format!("{share:.6}"),
                    template_name(templates, *id).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
