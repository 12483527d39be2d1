//! Event-trace export: one JSON object per delivery attempt.

use std::io::{self, Write};

use crate::ident::MacAddr;

use super::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: SimTime,
    pub kind: &'static str,
    pub src: MacAddr,
    /// `None` for multicast frames.
    pub dst: Option<MacAddr>,
    pub bytes: u32,
    pub outcome: &'static str,
}

impl TraceRecord {
    /// Hand-rolled serialization keeps the byte layout independent of
    /// serializer versions, which the determinism contract relies on.
    pub fn to_json_line(&self) -> String {
        let dst = match self.dst {
            Some(mac) => format!("\"{mac}\""),
            None => "null".to_string(),
        };
        format!(
            "{{\"t\":{},\"kind\":\"{}\",\"src\":\"{}\",\"dst\":{},\"bytes\":{},\"outcome\":\"{}\"}}",
            self.t, self.kind, self.src, dst, self.bytes, self.outcome
        )
    }
}

/// Where delivery records go. Sweeps run with `Null`; single runs keep the
/// trace in memory or stream it to a writer.
pub enum TraceSink {
    Null,
    Memory(Vec<TraceRecord>),
    Writer(Box<dyn Write>),
}

impl TraceSink {
    pub fn record(&mut self, rec: TraceRecord) -> io::Result<()> {
        match self {
            TraceSink::Null => Ok(()),
            TraceSink::Memory(buf) => {
                buf.push(rec);
                Ok(())
            }
            TraceSink::Writer(w) => {
                w.write_all(rec.to_json_line().as_bytes())?;
                w.write_all(b"\n")
            }
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, TraceSink::Null)
    }
}

impl std::fmt::Debug for TraceSink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceSink::Null => write!(f, "TraceSink::Null"),
            TraceSink::Memory(buf) => write!(f, "TraceSink::Memory({} records)", buf.len()),
            TraceSink::Writer(_) => write!(f, "TraceSink::Writer"),
        }
    }
}

pub fn to_ndjson(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::DeviceId;

    #[test]
    fn json_line_layout_is_stable() {
        let rec = TraceRecord {
            t: SimTime::from_micros(1_250_000),
            kind: "dio",
            src: MacAddr::device_default(DeviceId(1)),
            dst: None,
            bytes: 76,
            outcome: "delivered",
        };
        assert_eq!(
            rec.to_json_line(),
            "{\"t\":1.250000,\"kind\":\"dio\",\"src\":\"02:00:00:00:00:01\",\"dst\":null,\"bytes\":76,\"outcome\":\"delivered\"}"
        );
    }
}
