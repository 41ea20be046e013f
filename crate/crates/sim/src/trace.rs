//! Event trace as tab-separated lines: `time kind peer message`, with `-` for
//! events that involve no message.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Online,
    Offline,
    Generate,
    Sample,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Online => "online",
            EventKind::Offline => "offline",
            EventKind::Generate => "generate",
            EventKind::Sample => "sample",
        })
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "online" => Ok(EventKind::Online),
            "offline" => Ok(EventKind::Offline),
            "generate" => Ok(EventKind::Generate),
            "sample" => Ok(EventKind::Sample),
            other => Err(format!("unknown event kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: EventKind,
    pub peer: usize,
    pub message: Option<u64>,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}\t{}\t{}\t", self.time, self.kind, self.peer)?;
        match self.message {
            Some(m) => write!(f, "{m}"),
            None => f.write_str("-"),
        }
    }
}

impl FromStr for TraceRecord {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [time, kind, peer, message] = fields[..] else {
            return Err(format!("expected 4 fields, got {}", fields.len()));
        };
        Ok(TraceRecord {
            time: time.parse().map_err(|e| format!("time: {e}"))?,
            kind: kind.parse()?,
            peer: peer.parse().map_err(|e| format!("peer: {e}"))?,
            message: match message {
                "-" => None,
                m => Some(m.parse().map_err(|e| format!("message: {e}"))?),
            },
        })
    }
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    out.flush()
}

pub fn read_trace<R: BufRead>(input: R) -> io::Result<Vec<TraceRecord>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.is_empty()))
        .map(|l| l?.parse().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
        .collect()
}
