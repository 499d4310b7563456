//! Shared fixtures: the four sample lines and a seeded synthetic syslog corpus.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use chrono::{DateTime, TimeDelta, TimeZone, Utc};
use lenma::{tokenize, RawLine, Token, TokenizerConfig};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const SAMPLE: [&str; 4] = [
    "Dec  1 00:05:01 vm1.example.com postfix/cleanup[2767]: 7EF561405E3: message-id=<20151130150501.7EF561405E3@vm1.example.com>",
    "Dec  1 00:27:27 backup sshd[15406]: Invalid user admin from 222.186.30.174",
    "Dec  1 00:05:01 vm1.example.com postfix/cleanup[2769]: 6B22F1405E4: message-id=<20151130150501.6B22F1405E4@vm1.example.com>",
    "Dec  1 04:29:58 backup sshd[16287]: Invalid user a from 218.38.12.218",
];

/// Message bodies with `{pid}`, `{ip}` and `{user}` variable slots.
pub const TEMPLATES: [&str; 50] = [
    "sshd[{pid}]: Accepted password for {user} from {ip} port 22 ssh2",
    "sshd[{pid}]: Failed password for invalid user {user} from {ip} port 22 ssh2 after repeated attempts",
    "sshd[{pid}]: Received disconnect from {ip}: 11: Bye Bye [preauth]",
    "sshd[{pid}]: pam_unix(sshd:session): session opened for user {user} by (uid=0)",
    "sshd[{pid}]: Connection closed by {ip}",
    "sshd[{pid}]: Invalid user {user} from {ip}",
    "sshd[{pid}]: input_userauth_request: invalid user {user}",
    "sshd[{pid}]: Did not receive identification string from {ip}",
    "sshd[{pid}]: reverse mapping checking getaddrinfo for unknown.example.net [{ip}] failed - POSSIBLE BREAK-IN ATTEMPT!",
    "sshd[{pid}]: error: maximum authentication attempts exceeded for root from {ip} port 22 ssh2 [preauth] disconnecting now",
    "su[{pid}]: FAILED su for root by {user}",
    "sudo: {user} : TTY=pts/0 ; PWD=/home/ops ; USER=root ; COMMAND=/usr/bin/systemctl restart nginx.service",
    "CRON[{pid}]: pam_unix(cron:session): session closed for user root",
    "CRON[{pid}]: (root) CMD (/usr/lib/sysstat/debian-sa1 1 1)",
    "postfix/smtpd[{pid}]: connect from unknown[{ip}]",
    "postfix/smtpd[{pid}]: lost connection after AUTH from unknown[{ip}] during the authentication handshake phase",
    "postfix/smtpd[{pid}]: NOQUEUE: reject: RCPT from unknown[{ip}]: 554 5.7.1 Relay access denied; proto=ESMTP",
    "postfix/anvil[{pid}]: statistics: max connection rate 1/60s for (smtp:{ip}) at Dec  1 00:00:00",
    "postfix/qmgr[{pid}]: removed",
    "dovecot: imap-login: Login: user=<{user}>, method=PLAIN, rip={ip}, lip=10.0.0.1, mpid={pid}, TLS, session=<AbCdEf>",
    "dovecot: pop3-login: Disconnected (no auth attempts in 0 secs): user=<>, rip={ip}, lip=10.0.0.1, session=<XyZ>",
    "dovecot: auth-worker({pid}): pam({user},{ip}): pam_authenticate() failed: Authentication failure (password mismatch?)",
    "kernel: [UFW BLOCK] IN=eth0 OUT= MAC=00:16:3e:5e:6c:00 SRC={ip} DST=10.0.0.1 LEN=40 TOS=0x00 PREC=0x00 TTL=241 ID={pid} PROTO=TCP",
    "kernel: Out of memory: Kill process {pid} (java) score 902 or sacrifice child",
    "kernel: possible SYN flooding on port 80. Sending cookies.  Check SNMP counters from {ip}",
    "systemd[1]: Started Session {pid} of user {user}.",
    "systemd-logind[{pid}]: New session 42 of user {user}.",
    "systemd-logind[{pid}]: Removed session {pid}.",
    "ntpd[{pid}]: synchronized to {ip}, stratum 2",
    "ntpd[{pid}]: kernel time sync status change 2001",
    "named[{pid}]: client {ip}#53 (example.org): query (cache) 'example.org/A/IN' denied",
    "named[{pid}]: lame server resolving 'example.com' (in 'example.com'?): {ip}#53",
    "dhclient[{pid}]: DHCPREQUEST of {ip} on eth0 to 255.255.255.255 port 67",
    "dhclient[{pid}]: bound to {ip} -- renewal in 1800 seconds.",
    "httpd[{pid}]: [error] [client {ip}] File does not exist: /var/www/html/favicon.ico",
    "nginx: {ip} - {user} \"GET /index.html HTTP/1.1\" 200 612",
    "vsftpd[{pid}]: [{user}] OK LOGIN: Client \"{ip}\"",
    "vsftpd[{pid}]: [{user}] FAIL LOGIN: Client \"{ip}\" after too many failed attempts to log in",
    "proftpd[{pid}]: localhost ({ip}[{ip}]) - USER {user}: no such user found from {ip} to 10.0.0.1:21",
    "useradd[{pid}]: new user: name={user}, UID=1001, GID=1001, home=/home/{user}, shell=/bin/bash",
    "passwd[{pid}]: pam_unix(passwd:chauthtok): password changed for {user}",
    "login[{pid}]: FAILED LOGIN 1 FROM tty1 FOR {user}, Authentication failure",
    "xinetd[{pid}]: START: telnet pid={pid} from={ip}",
    "rsyslogd: [origin software=\"rsyslogd\" swVersion=\"8.16.0\" x-pid=\"{pid}\" x-info=\"http://www.rsyslog.com\"] rsyslogd was HUPed",
    "smartd[{pid}]: Device: /dev/sda [SAT], SMART Usage Attribute: 194 Temperature_Celsius changed from 35 to 36",
    "mysqld[{pid}]: Access denied for user '{user}'@'{ip}' (using password: YES)",
    "openvpn[{pid}]: {user}/{ip}:1194 MULTI_sva: pool returned IPv4=10.8.0.6, IPv6=(Not enabled)",
    "fail2ban.actions[{pid}]: WARNING [sshd] Ban {ip}",
    "fail2ban.filter[{pid}]: INFO [sshd] Found {ip} - 2015-12-01 00:00:00 while scanning the journal for matching entries",
    "audispd: node=backup type=USER_LOGIN msg=audit(1448928000.000:{pid}): pid={pid} uid=0 auid={pid} ses=1 acct=\"{user}\" exe=\"/usr/sbin/sshd\" hostname=? addr={ip} terminal=ssh res=failed",
];

const USERS: [&str; 24] = [
    "root", "admin", "test", "oracle", "guest", "user", "ubuntu", "postgres", "git", "nagios", "a", "ftpuser", "pi",
    "support", "www-data", "jenkins", "hadoop", "deploy", "alice", "bob", "mysql", "ec2-user", "tomcat", "sysadmin",
];
const HOSTS: [&str; 4] = ["backup", "web01", "mail", "vm1.example.com"];

fn slot_value(kind: &str, rng: &mut StdRng) -> String {
    match kind {
        "pid" => rng.gen_range(2..65536u32).to_string(),
        "ip" => format!(
            "{}.{}.{}.{}",
            rng.gen_range(1..224u8),
            rng.gen_range(0..=255u8),
            rng.gen_range(0..=255u8),
            rng.gen_range(1..255u8)
        ),
        "user" => USERS.choose(rng).unwrap().to_string(),
        other => panic!("unknown slot {other}"),
    }
}

/// Fills every slot of `template` with a random value.
pub fn fill(template: &str, rng: &mut StdRng) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let end = start + rest[start..].find('}').expect("unclosed slot");
        out.push_str(&rest[..start]);
        out.push_str(&slot_value(&rest[start + 1..end], rng));
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    out
}

/// The tokenized form of a template: `None` at every word touched by a slot.
pub fn ground_truth(template: &str, cfg: &TokenizerConfig) -> Vec<Option<String>> {
    let marked = template
        .replace("{pid}", "\u{1}")
        .replace("{ip}", "\u{1}")
        .replace("{user}", "\u{1}");
    let line = RawLine::with_arrival(marked, "truth", epoch());
    let msg = tokenize(&line, &cfg.clone().with_header_mode(lenma::HeaderMode::None)).unwrap();
    msg.words
        .into_iter()
        .map(|w| if w.contains('\u{1}') { None } else { Some(w) })
        .collect()
}

/// Does an inferred template refine the ground truth: same shape, equal
/// literals, and a wildcard at every variable slot?
pub fn refines(inferred: &[Token], truth: &[Option<String>]) -> bool {
    inferred.len() == truth.len()
        && inferred.iter().zip(truth).all(|(t, g)| match (t, g) {
            (Token::Wildcard, None) => true,
            (Token::Word(w), Some(g)) => w == g,
            _ => false,
        })
}

pub fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2015, 12, 1, 0, 0, 0).unwrap()
}

pub fn bsd_line(ts: DateTime<Utc>, host: &str, body: &str) -> String {
    format!("{} {}", ts.format("%b %e %H:%M:%S"), host) + " " + body
}

/// `n` syslog lines drawn uniformly from `templates`, one every 100 ms.
pub fn corpus(templates: &[&str], n: usize, seed: u64) -> Vec<String> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let t = templates[rng.gen_range(0..templates.len())];
            let host = HOSTS[rng.gen_range(0..HOSTS.len())];
            let ts = epoch() + TimeDelta::milliseconds(100 * i as i64);
            bsd_line(ts, host, &fill(t, &mut rng))
        })
        .collect()
}

pub fn write_lines(path: &Path, lines: &[String]) {
    let mut text = String::new();
    for l in lines {
        writeln!(text, "{l}").unwrap();
    }
    fs::write(path, text).unwrap();
}

/// Runs the CLI in-process with a fresh stop flag.
pub fn run_cli(args: &[&str]) -> i32 {
    let stop = Arc::new(AtomicBool::new(false));
    lenma_cli::run(std::iter::once("lenma").chain(args.iter().copied()), &stop)
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn tmp_path(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}
