use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, TimeZone, Utc};
use lenma::analyze::{self, cluster_groups, group_by_minute, read_assignment_log, report_patterns};
use lenma::ingest::{self, pump, IngestError, IngestReport};
use lenma::state::{write_templates, ParseExportFormatError};
use lenma::{ExportFormat, HeaderMode, Miner, MiningConfig, TokenizerConfig};

use crate::args::{AnalyzeArgs, BenchArgs, ExportArgs, MineArgs, MiningFlags, ReportFormat, ResumeArgs};
use crate::{EXIT_IO, EXIT_USAGE};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err<E>(context: String) -> impl FnOnce(E) -> CliError
where
    E: std::error::Error + Send + Sync + 'static,
{
    move |e| CliError::Io(anyhow::Error::new(e).context(context))
}

fn load_state(path: &Path) -> Result<Miner, CliError> {
    lenma::load_state(path).map_err(io_err(format!("cannot load state {}", path.display())))
}

fn save_state(miner: &Miner, path: &Path) -> Result<(), CliError> {
    lenma::save_state(miner, path).map_err(io_err(format!("cannot save state {}", path.display())))
}

fn fresh_miner(flags: &MiningFlags) -> Result<Miner, CliError> {
    let defaults = MiningConfig::default();
    let mining = MiningConfig::new(
        flags.tc.unwrap_or(defaults.cluster_threshold),
        flags.tp.unwrap_or(defaults.position_threshold),
        flags.short_messages.map_or(defaults.short_message_policy, Into::into),
    )
    .map_err(|e| usage(e.to_string()))?;
    let tokenizer = TokenizerConfig::default()
        .with_header_mode(flags.header_mode.unwrap_or(HeaderMode::ClassicBsd))
        .with_drop_punct(flags.drop_punct);
    Miner::new(mining, tokenizer).map_err(|e| usage(e.to_string()))
}

/// A resumed miner keeps its stored configuration; explicit flags must agree
/// with it.
fn check_flags_against(miner: &Miner, flags: &MiningFlags) -> Result<(), CliError> {
    let m = miner.mining_config();
    let t = miner.tokenizer_config();
    let conflict = |name: &str, stored: String| {
        usage(format!(
            "--{name} conflicts with the resumed state (stored value {stored})"
        ))
    };
    if flags.tc.is_some_and(|tc| tc != m.cluster_threshold) {
        return Err(conflict("tc", m.cluster_threshold.to_string()));
    }
    if flags.tp.is_some_and(|tp| tp != m.position_threshold) {
        return Err(conflict("tp", m.position_threshold.to_string()));
    }
    if flags.header_mode.is_some_and(|h| h != t.header_mode) {
        return Err(conflict("header-mode", t.header_mode.to_string()));
    }
    if flags.drop_punct && !t.drop_punct_tokens {
        return Err(conflict("drop-punct", "off".into()));
    }
    if flags
        .short_messages
        .is_some_and(|s| lenma::ShortMessagePolicy::from(s) != m.short_message_policy)
    {
        return Err(conflict("short-messages", format!("{:?}", m.short_message_policy)));
    }
    Ok(())
}

fn parse_listen(addr: &str) -> Result<(String, u16), CliError> {
    if let Ok(sock) = addr.parse::<SocketAddr>() {
        return Ok((sock.ip().to_string(), sock.port()));
    }
    let (host, port) = addr
        .rsplit_once(':')
        .ok_or_else(|| usage(format!("--listen expects addr:port, got {addr:?}")))?;
    let port = port
        .parse()
        .map_err(|_| usage(format!("invalid port in --listen {addr:?}")))?;
    Ok((host.to_string(), port))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => {
            let f = File::create(p).map_err(io_err(format!("cannot create {}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn sink_of(sink: &mut Option<BufWriter<File>>) -> Option<&mut dyn Write> {
    sink.as_mut().map(|s| s as &mut dyn Write)
}

fn pump_err(e: IngestError) -> CliError {
    CliError::Io(anyhow::Error::new(e))
}

pub fn cmd_mine(args: &MineArgs, stop: &Arc<AtomicBool>) -> Result<(), CliError> {
    let exports = args
        .export
        .as_deref()
        .unwrap_or_default()
        .chunks(2)
        .map(|pair| {
            let format: ExportFormat = pair[0]
                .parse()
                .map_err(|e: ParseExportFormatError| usage(e.to_string()))?;
            Ok((format, pair[1].clone()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let listen = args.listen.as_deref().map(parse_listen).transpose()?;
    match (&listen, args.inputs.is_empty()) {
        (Some(_), false) => return Err(usage("--listen cannot be combined with input files")),
        (None, true) => return Err(usage("no input given (paths, \"-\" for stdin, or --listen addr:port)")),
        _ => {}
    }
    if args.follow && (args.inputs.len() != 1 || args.inputs[0] == "-") {
        return Err(usage("--follow needs exactly one input file"));
    }

    let mut miner = match &args.state_in {
        Some(path) => {
            let miner = load_state(path)?;
            check_flags_against(&miner, &args.mining)?;
            miner
        }
        None => fresh_miner(&args.mining)?,
    };
    let clusters_before = miner.index().len();

    let mut sink = match &args.assignments {
        Some(path) => {
            let file = OpenOptions::new()
                .create(true)
                .write(true)
                .append(args.state_in.is_some())
                .truncate(args.state_in.is_none())
                .open(path)
                .map_err(io_err(format!("cannot open {}", path.display())))?;
            Some(BufWriter::new(file))
        }
        None => None,
    };

    let started = Instant::now();
    let mut report = IngestReport::default();
    if let Some((host, port)) = &listen {
        let source = ingest::listen_udp(host, *port)
            .map_err(pump_err)?
            .with_stop_flag(stop.clone());
        log::info!("listening on {host}:{port}");
        report += pump(ingest::spawn_source(source, 10_000), &mut miner, sink_of(&mut sink)).map_err(pump_err)?;
    }
    for input in &args.inputs {
        let r = if input == "-" {
            pump(
                ingest::read_stdin().with_stop_flag(stop.clone()),
                &mut miner,
                sink_of(&mut sink),
            )
        } else {
            let reader = ingest::read_file(input, args.follow)
                .map_err(io_err(format!("cannot open {input}")))?
                .with_stop_flag(stop.clone());
            pump(reader, &mut miner, sink_of(&mut sink))
        };
        report += r.map_err(pump_err)?;
    }
    if let Some(s) = sink.as_mut() {
        s.flush().map_err(io_err("cannot write assignments".into()))?;
    }
    let elapsed = started.elapsed();

    for (format, path) in &exports {
        let out = open_output(Some(Path::new(path)))?;
        write_templates(miner.index(), *format, out).map_err(io_err(format!("cannot export to {path}")))?;
    }
    if let Some(path) = args.state_out.as_ref() {
        save_state(&miner, path)?;
    }

    if report.parse_failures > 0 {
        log::warn!("{} lines did not match the header format", report.parse_failures);
    }
    if report.truncations > 0 {
        log::warn!("{} oversized lines were truncated", report.truncations);
    }
    println!(
        "{} messages, {} clusters ({} new) in {:.3}s",
        report.messages,
        miner.index().len(),
        miner.index().len() - clusters_before,
        elapsed.as_secs_f64()
    );
    Ok(())
}

pub(crate) fn cmd_resume(args: ResumeArgs, stop: &Arc<AtomicBool>) -> Result<(), CliError> {
    if args.mine.state_in.is_some() {
        return Err(usage(
            "resume takes the state file as its first argument, not --state-in",
        ));
    }
    let mut mine = args.mine;
    mine.state_out.get_or_insert_with(|| args.state.clone());
    mine.state_in = Some(args.state);
    cmd_mine(&mine, stop)
}

pub fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let format: ExportFormat = args
        .format
        .parse()
        .map_err(|e: ParseExportFormatError| usage(e.to_string()))?;
    let miner = load_state(&args.state)?;
    let out = open_output(args.output.as_deref())?;
    write_templates(miner.index(), format, out).map_err(io_err("cannot write export".into()))
}

/// Stand-in arrival time for re-parsing headers without a year: the latest
/// time the mined state saw, so re-parsed timestamps line up with the
/// original run.
fn reference_time(miner: &Miner) -> DateTime<Utc> {
    miner
        .index()
        .clusters()
        .iter()
        .map(|c| c.last_seen())
        .max()
        .unwrap_or_else(|| Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).unwrap())
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    if args.top_k == 0 {
        return Err(usage("--top-k must be at least 1"));
    }
    if !(args.distance_threshold > 0.0 && args.distance_threshold < 1.0) {
        return Err(usage("--distance-threshold must be in (0, 1)"));
    }
    let miner = load_state(&args.state)?;
    let file = File::open(&args.assignments).map_err(io_err(format!("cannot open {}", args.assignments.display())))?;
    let log = read_assignment_log(BufReader::new(file), miner.tokenizer_config(), reference_time(&miner))
        .map_err(io_err(format!("cannot read {}", args.assignments.display())))?;
    if log.malformed > 0 {
        log::warn!("{} malformed assignment records skipped", log.malformed);
    }

    let grouping = group_by_minute(log.records);
    if grouping.missing_timestamps > 0 {
        log::warn!("{} records without a timestamp skipped", grouping.missing_timestamps);
    }
    let gcs = cluster_groups(&grouping.groups, args.distance_threshold);
    let report = report_patterns(&gcs, args.top_k);

    let templates: BTreeMap<u64, String> = miner
        .index()
        .snapshot_templates()
        .into_iter()
        .map(|t| (t.id, t.template))
        .collect();
    let out = open_output(args.output.as_deref())?;
    match args.format {
        ReportFormat::Text => analyze::write_report_text(&report, &templates, out),
        ReportFormat::Csv => analyze::write_report_csv(&report, &templates, out),
    }
    .map_err(io_err("cannot write report".into()))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.batch_size == 0 {
        return Err(usage("--batch-size must be at least 1"));
    }
    let mut miner = fresh_miner(&args.mining)?;
    let mut reader =
        ingest::read_file(&args.corpus, false).map_err(io_err(format!("cannot open {}", args.corpus.display())))?;
    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "batch,messages,seconds,templates").map_err(io_err("cannot write bench output".into()))?;

    for batch in 0.. {
        let started = Instant::now();
        let report = pump(reader.by_ref().take(args.batch_size), &mut miner, None).map_err(pump_err)?;
        let seconds = started.elapsed().as_secs_f64();
        if report.lines == 0 {
            break;
        }
        writeln!(out, "{batch},{},{seconds:.6},{}", report.lines, miner.index().len())
            .map_err(io_err("cannot write bench output".into()))?;
        if report.lines < args.batch_size as u64 {
            break;
        }
    }
    out.flush().map_err(io_err("cannot write bench output".into()))
}
