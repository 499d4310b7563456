//! Line sources and the pump that feeds them into a [`Miner`].
//!
//! Sources yield `io::Result<RawLine>` in arrival order. The pump is the
//! single consumer of a miner; producers may live on other threads and hand
//! lines over through [`spawn_source`].

use std::fs::File;
use std::io::{self, BufRead, BufReader, ErrorKind, Read, Write};
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use thiserror::Error;

use crate::miner::Miner;
use crate::tokenizer::{now_seconds, strip_pri, RawLine};

/// Longer lines are cut to this many bytes.
pub const MAX_LINE_BYTES: usize = 64 * 1024;

const POLL_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: io::Error },
    #[error("input error: {0}")]
    Source(io::Error),
    #[error("assignment sink error: {0}")]
    Sink(io::Error),
}

/// Reads newline-delimited lines with a per-line size cap. In follow mode
/// the reader keeps polling at end of input until its stop flag is raised.
pub struct LineReader<R> {
    inner: R,
    source_id: String,
    follow: bool,
    stop: Option<Arc<AtomicBool>>,
    buf: Vec<u8>,
    overflow: bool,
    in_line: bool,
    truncated: u64,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(inner: R, source_id: impl Into<String>) -> Self {
        LineReader {
            inner,
            source_id: source_id.into(),
            follow: false,
            stop: None,
            buf: Vec::new(),
            overflow: false,
            in_line: false,
            truncated: 0,
        }
    }

    pub fn follow(mut self, follow: bool) -> Self {
        self.follow = follow;
        self
    }

    /// Ends the stream at the next line boundary once the flag becomes true.
    pub fn with_stop_flag(mut self, stop: Arc<AtomicBool>) -> Self {
        self.stop = Some(stop);
        self
    }

    /// Lines cut at [`MAX_LINE_BYTES`] so far.
    pub fn truncated(&self) -> u64 {
        self.truncated
    }

    fn stopped(&self) -> bool {
        self.stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed))
    }

    fn push(&mut self, bytes: &[u8]) {
        self.in_line = true;
        let room = MAX_LINE_BYTES - self.buf.len();
        if bytes.len() > room {
            self.buf.extend_from_slice(&bytes[..room]);
            self.overflow = true;
        } else {
            self.buf.extend_from_slice(bytes);
        }
    }

    fn finish_line(&mut self) -> RawLine {
        if self.buf.last() == Some(&b'\r') && !self.overflow {
            self.buf.pop();
        }
        let text = String::from_utf8_lossy(&self.buf).into_owned();
        let mut line = RawLine::with_arrival(text, self.source_id.clone(), now_seconds());
        if self.overflow {
            line.truncated = true;
            self.truncated += 1;
        }
        self.buf.clear();
        self.overflow = false;
        self.in_line = false;
        line
    }
}

impl<R: BufRead> Iterator for LineReader<R> {
    type Item = io::Result<RawLine>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.stopped() {
            return None;
        }
        loop {
            let available = match self.inner.fill_buf() {
                Ok(bytes) => bytes,
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) => return Some(Err(e)),
            };
            if available.is_empty() {
                if self.follow && !self.stopped() {
                    thread::sleep(POLL_INTERVAL);
                    continue;
                }
                return self.in_line.then(|| Ok(self.finish_line()));
            }
            match available.iter().position(|&b| b == b'\n') {
                Some(i) => {
                    let chunk = available[..i].to_vec();
                    self.inner.consume(i + 1);
                    self.push(&chunk);
                    return Some(Ok(self.finish_line()));
                }
                None => {
                    let chunk = available.to_vec();
                    self.inner.consume(chunk.len());
                    self.push(&chunk);
                }
            }
        }
    }
}

/// Opens a file for line reading; `follow` tails it for appended lines.
pub fn read_file(path: impl AsRef<Path>, follow: bool) -> io::Result<LineReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    Ok(LineReader::new(BufReader::new(file), path.display().to_string()).follow(follow))
}

pub fn read_stdin() -> LineReader<BufReader<io::Stdin>> {
    LineReader::new(BufReader::new(io::stdin()), "-")
}

pub fn read_from<R: Read>(reader: R, source_id: impl Into<String>) -> LineReader<BufReader<R>> {
    LineReader::new(BufReader::new(reader), source_id)
}

/// Turns one datagram into a line: trailing NUL/CR/LF removed, a leading
/// `<PRI>` tag stripped. Returns `None` for empty or non-UTF-8 payloads.
pub fn datagram_to_line(payload: &[u8], peer: SocketAddr) -> Option<RawLine> {
    let text = std::str::from_utf8(payload).ok()?;
    let text = text.trim_end_matches(['\0', '\r', '\n']);
    let text = strip_pri(text);
    if text.trim().is_empty() {
        return None;
    }
    Some(RawLine::with_arrival(text, peer.to_string(), now_seconds()))
}

/// Receives syslog datagrams, one line per datagram.
pub struct UdpSource {
    socket: UdpSocket,
    stop: Option<Arc<AtomicBool>>,
    buf: Vec<u8>,
    skipped: u64,
}

pub fn listen_udp(bind_addr: &str, port: u16) -> Result<UdpSource, IngestError> {
    let addr = format!("{bind_addr}:{port}");
    let bind_err = |source| IngestError::Bind {
        addr: addr.clone(),
        source,
    };
    let resolved: Vec<SocketAddr> = (bind_addr, port).to_socket_addrs().map_err(bind_err)?.collect();
    let socket = UdpSocket::bind(&resolved[..]).map_err(bind_err)?;
    socket.set_read_timeout(Some(POLL_INTERVAL)).map_err(bind_err)?;
    Ok(UdpSource {
        socket,
        stop: None,
        buf: vec![0; 65_536],
        skipped: 0,
    })
}

impl UdpSource {
    pub fn with_stop_flag(mut self, stop: Arc<AtomicBool>) -> Self {
        self.stop = Some(stop);
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    /// Empty or non-text datagrams dropped so far.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }
}

impl Iterator for UdpSource {
    type Item = io::Result<RawLine>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed)) {
                return None;
            }
            match self.socket.recv_from(&mut self.buf) {
                Ok((n, peer)) => match datagram_to_line(&self.buf[..n], peer) {
                    Some(line) => return Some(Ok(line)),
                    None => {
                        self.skipped += 1;
                        log::debug!("skipped malformed datagram from {peer}");
                    }
                },
                Err(e)
                    if matches!(
                        e.kind(),
                        ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted
                    ) => {}
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

/// Runs `source` on its own thread and returns a FIFO iterator over what it
/// produces. `capacity` bounds the number of buffered lines.
pub fn spawn_source<S>(source: S, capacity: usize) -> mpsc::IntoIter<io::Result<RawLine>>
where
    S: Iterator<Item = io::Result<RawLine>> + Send + 'static,
{
    let (tx, rx) = mpsc::sync_channel(capacity);
    thread::spawn(move || {
        for item in source {
            if tx.send(item).is_err() {
                break;
            }
        }
    });
    rx.into_iter()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    /// Lines received, including skipped ones.
    pub lines: u64,
    /// Lines that were clustered.
    pub messages: u64,
    pub clusters_created: u64,
    pub parse_failures: u64,
    pub truncations: u64,
    /// Lines with no body words.
    pub skipped: u64,
}

impl std::ops::AddAssign for IngestReport {
    fn add_assign(&mut self, rhs: Self) {
        self.lines += rhs.lines;
        self.messages += rhs.messages;
        self.clusters_created += rhs.clusters_created;
        self.parse_failures += rhs.parse_failures;
        self.truncations += rhs.truncations;
        self.skipped += rhs.skipped;
    }
}

/// Writes one `cluster_id<TAB>raw text` record.
pub fn write_assignment<W: Write + ?Sized>(sink: &mut W, cluster_id: u64, text: &str) -> io::Result<()> {
    writeln!(sink, "{cluster_id}\t{text}")
}

/// Tokenizes and clusters every line of `stream` in order. When `sink` is
/// given, one assignment record is written per clustered line.
pub fn pump<I>(stream: I, miner: &mut Miner, mut sink: Option<&mut dyn Write>) -> Result<IngestReport, IngestError>
where
    I: IntoIterator<Item = io::Result<RawLine>>,
{
    let mut report = IngestReport::default();
    for item in stream {
        let line = item.map_err(IngestError::Source)?;
        report.lines += 1;
        if line.truncated {
            report.truncations += 1;
        }
        match miner.process(&line) {
            Ok(p) => {
                report.messages += 1;
                report.clusters_created += u64::from(p.assignment.created);
                report.parse_failures += u64::from(p.header_fallback);
                if let Some(sink) = sink.as_deref_mut() {
                    write_assignment(sink, p.assignment.cluster_id, &line.text).map_err(IngestError::Sink)?;
                }
            }
            Err(e) => {
                report.skipped += 1;
                log::debug!("skipping line from {}: {e}", line.source_id);
            }
        }
    }
    Ok(report)
}
