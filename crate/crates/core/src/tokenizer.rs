//! Turns raw syslog lines into word lists.
//!
//! A line goes through three steps: an optional header strip (timestamp and
//! host), replacement of delimiter characters by spaces, and whitespace
//! splitting. The process name is never stripped, so it stays word 0 of the
//! message body.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveTime, TimeDelta, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vectors::WordLengthVector;

/// One log line as received, without its trailing newline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLine {
    pub text: String,
    /// File path or socket peer the line came from.
    pub source_id: String,
    /// Wall-clock arrival time, seconds resolution.
    pub arrival_ts: DateTime<Utc>,
    /// Set when the reader cut the line at its size limit.
    pub truncated: bool,
}

impl RawLine {
    /// Builds a line stamped with the current time.
    pub fn new(text: impl Into<String>, source_id: impl Into<String>) -> Self {
        Self::with_arrival(text, source_id, now_seconds())
    }

    /// Builds a line with an explicit arrival time. Line breaks inside `text`
    /// are folded into spaces and a trailing line terminator is dropped.
    pub fn with_arrival(text: impl Into<String>, source_id: impl Into<String>, arrival_ts: DateTime<Utc>) -> Self {
        let mut text = text.into();
        while text.ends_with('\n') || text.ends_with('\r') {
            text.pop();
        }
        if text.contains(['\n', '\r']) {
            text = text.replace(['\n', '\r'], " ");
        }
        RawLine {
            text,
            source_id: source_id.into(),
            arrival_ts: arrival_ts.with_nanosecond(0).unwrap_or(arrival_ts),
            truncated: false,
        }
    }
}

pub(crate) fn now_seconds() -> DateTime<Utc> {
    let now = Utc::now();
    now.with_nanosecond(0).unwrap_or(now)
}

/// How the leading header of a line is recognised and removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderMode {
    /// `Mon DD HH:MM:SS host ...`
    ClassicBsd,
    /// `[<PRI>]VERSION TIMESTAMP HOST APP PROCID MSGID SD MSG`
    Rfc5424,
    None,
    /// Drop the first `n` whitespace-separated fields.
    SkipN(usize),
}

impl fmt::Display for HeaderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeaderMode::ClassicBsd => f.write_str("classic-bsd"),
            HeaderMode::Rfc5424 => f.write_str("rfc5424"),
            HeaderMode::None => f.write_str("none"),
            HeaderMode::SkipN(n) => write!(f, "skip:{n}"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown header mode {0:?} (expected classic-bsd, rfc5424, none or skip:N)")]
pub struct ParseHeaderModeError(String);

impl FromStr for HeaderMode {
    type Err = ParseHeaderModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic-bsd" | "classic_bsd" | "bsd" => Ok(HeaderMode::ClassicBsd),
            "rfc5424" => Ok(HeaderMode::Rfc5424),
            "none" => Ok(HeaderMode::None),
            _ => s
                .strip_prefix("skip:")
                .and_then(|n| n.parse().ok())
                .map(HeaderMode::SkipN)
                .ok_or_else(|| ParseHeaderModeError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub header_mode: HeaderMode,
    /// Characters replaced by spaces before splitting.
    pub delimiter_chars: BTreeSet<char>,
    /// Trim trailing colons and discard tokens made only of punctuation.
    pub drop_punct_tokens: bool,
}

pub const DEFAULT_DELIMITERS: [char; 5] = ['[', ']', '(', ')', '='];

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            header_mode: HeaderMode::ClassicBsd,
            delimiter_chars: DEFAULT_DELIMITERS.into_iter().collect(),
            drop_punct_tokens: false,
        }
    }
}

impl TokenizerConfig {
    pub fn with_header_mode(mut self, mode: HeaderMode) -> Self {
        self.header_mode = mode;
        self
    }

    pub fn with_drop_punct(mut self, drop: bool) -> Self {
        self.drop_punct_tokens = drop;
        self
    }
}

/// A tokenized message. Only [`tokenize`] builds one, so `words` is never
/// empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMessage<'a> {
    pub words: Vec<String>,
    pub msg_ts: Option<DateTime<Utc>>,
    pub host: Option<String>,
    /// The requested header did not parse and the whole line was used as body.
    pub header_fallback: bool,
    pub raw: &'a RawLine,
}

impl ParsedMessage<'_> {
    pub fn word_length_vector(&self) -> WordLengthVector {
        WordLengthVector::from_words(&self.words).expect("parsed messages have non-empty words")
    }

    /// Timestamp used for cluster bookkeeping: the header time when present,
    /// the arrival time otherwise.
    pub fn seen_at(&self) -> DateTime<Utc> {
        self.msg_ts.unwrap_or(self.raw.arrival_ts)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("no message body left after header stripping")]
    EmptyMessage,
}

struct Header {
    body: String,
    msg_ts: Option<DateTime<Utc>>,
    host: Option<String>,
}

pub fn tokenize<'a>(line: &'a RawLine, cfg: &TokenizerConfig) -> Result<ParsedMessage<'a>, TokenizeError> {
    let text = line.text.trim();
    if text.is_empty() {
        return Err(TokenizeError::EmptyMessage);
    }

    let mut header_fallback = false;
    let (body, msg_ts, host) = match cfg.header_mode {
        HeaderMode::None | HeaderMode::SkipN(0) => (text.to_string(), None, None),
        HeaderMode::SkipN(n) => {
            let body = take_fields(text, n).map(|(_, rest)| rest).unwrap_or("");
            (body.to_string(), None, None)
        }
        HeaderMode::ClassicBsd | HeaderMode::Rfc5424 => {
            let parsed = if cfg.header_mode == HeaderMode::ClassicBsd {
                parse_bsd_header(text, line.arrival_ts)
            } else {
                parse_rfc5424_header(text)
            };
            match parsed {
                Some(h) => (h.body, h.msg_ts, h.host),
                None => {
                    header_fallback = true;
                    (text.to_string(), None, None)
                }
            }
        }
    };

    let words = split_words(&body, cfg);
    if words.is_empty() {
        return Err(TokenizeError::EmptyMessage);
    }
    Ok(ParsedMessage {
        words,
        msg_ts,
        host,
        header_fallback,
        raw: line,
    })
}

fn split_words(body: &str, cfg: &TokenizerConfig) -> Vec<String> {
    body.split(|c: char| c.is_whitespace() || cfg.delimiter_chars.contains(&c))
        .filter(|t| !t.is_empty())
        .filter_map(|t| {
            if !cfg.drop_punct_tokens {
                return Some(t.to_string());
            }
            let t = t.trim_end_matches(':');
            if t.is_empty() || t.chars().all(|c| c.is_ascii_punctuation()) {
                None
            } else {
                Some(t.to_string())
            }
        })
        .collect()
}

/// Strips a leading `<PRI>` priority tag (one to three digits).
pub fn strip_pri(text: &str) -> &str {
    let Some(rest) = text.strip_prefix('<') else {
        return text;
    };
    match rest.find('>') {
        Some(end @ 1..=3) if rest[..end].bytes().all(|b| b.is_ascii_digit()) => &rest[end + 1..],
        _ => text,
    }
}

/// Splits off the first `n` whitespace-separated fields, returning them and
/// the remainder with leading whitespace removed.
fn take_fields(text: &str, n: usize) -> Option<(Vec<&str>, &str)> {
    let mut fields = Vec::with_capacity(n);
    let mut rest = text.trim_start();
    for _ in 0..n {
        if rest.is_empty() {
            return None;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        fields.push(&rest[..end]);
        rest = rest[end..].trim_start();
    }
    Some((fields, rest))
}

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

/// The year comes from `arrival`; a stamp more than a day past arrival is
/// taken to be from the previous year (a December line read in January).
fn parse_bsd_header(text: &str, arrival: DateTime<Utc>) -> Option<Header> {
    let (fields, rest) = take_fields(strip_pri(text), 4)?;
    let month = MONTHS.iter().position(|m| *m == fields[0])? as u32 + 1;
    if fields[1].len() > 2 || !fields[1].bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let day: u32 = fields[1].parse().ok()?;
    let time = NaiveTime::parse_from_str(fields[2], "%H:%M:%S").ok()?;
    let at = |year| NaiveDate::from_ymd_opt(year, month, day).map(|d| Utc.from_utc_datetime(&d.and_time(time)));
    let mut msg_ts = at(arrival.year())?;
    if msg_ts > arrival + TimeDelta::days(1) {
        msg_ts = at(arrival.year() - 1).unwrap_or(msg_ts);
    }
    Some(Header {
        body: rest.to_string(),
        msg_ts: Some(msg_ts),
        host: Some(fields[3].to_string()),
    })
}

fn nil_or(field: &str) -> Option<&str> {
    (field != "-").then_some(field)
}

fn parse_rfc5424_header(text: &str) -> Option<Header> {
    let (fields, rest) = take_fields(strip_pri(text), 6)?;
    let version = fields[0];
    if version.is_empty() || version.len() > 2 || !version.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let msg_ts = match nil_or(fields[1]) {
        Some(ts) => Some(DateTime::parse_from_rfc3339(ts).ok()?.with_timezone(&Utc)),
        None => None,
    };
    let host = nil_or(fields[2]).map(str::to_string);

    // Structured data stays in the body unless it is the nil value.
    let msg = if rest == "-" {
        ""
    } else {
        rest.strip_prefix("- ").unwrap_or(rest)
    };
    let msg = msg.trim_start_matches('\u{feff}');

    let mut body: Vec<&str> = fields[3..].iter().copied().filter_map(nil_or).collect();
    if !msg.is_empty() {
        body.push(msg);
    }
    Some(Header {
        body: body.join(" "),
        msg_ts,
        host,
    })
}
