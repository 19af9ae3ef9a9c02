//! Line-delimited session format.
//!
//! ```text
//! H <subject_id> <session_epoch_iso8601>
//! D <device_id> <channel> <rate_hz>
//! S <t> <device_id> <channel> <value>
//! E <t> <kind> <ids comma-separated | -> <payload | ->
//! ```
//!
//! Canonical output: header, declarations sorted by (device, channel), then
//! body lines ordered by time; at equal time samples come first (by device,
//! then channel) followed by events in their recorded order. Times and values
//! use six decimals.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Channel, EventKind, GameEvent, Sample, SessionMeta, SessionRecording, StreamDecl, StreamKey, TimedValue};
use crate::{Error, Result};

fn fmt6(x: f64) -> String {
    // `+ 0.0` folds negative zero so "-0.000000" never appears.
    format!("{:.6}", x + 0.0)
}

fn fmt_rate(x: f64) -> String {
    format!("{x}")
}

fn parse_f64(line: usize, what: &str, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::parse(line, format!("bad {what} `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Parses one `S` line. Used both by the session parser and by the TCP
/// ingestion protocol, which carries bare sample lines.
pub fn parse_sample_line(line_no: usize, line: &str) -> Result<Sample> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["S", t, dev, ch, v] => {
            let channel: Channel = ch.parse().map_err(|e: String| Error::parse(line_no, e))?;
            let s = Sample {
                t: parse_f64(line_no, "time", t)?,
                device_id: dev.to_string(),
                channel,
                value: parse_f64(line_no, "value", v)?,
            };
            s.validate().map_err(|e| Error::parse(line_no, e.to_string()))?;
            Ok(s)
        }
        ["S", ..] => Err(Error::parse(line_no, "sample line needs 4 fields")),
        _ => Err(Error::parse(line_no, "expected a sample line `S <t> <device> <channel> <value>`")),
    }
}

fn parse_event_line(line_no: usize, fields: &[&str]) -> Result<GameEvent> {
    let [t, kind, ids, payload] = fields else {
        return Err(Error::parse(line_no, "event line needs 4 fields"));
    };
    let kind: EventKind = kind.parse().map_err(|e: String| Error::parse(line_no, e))?;
    let pattern_ids = if *ids == "-" { Vec::new() } else { ids.split(',').map(str::to_string).collect() };
    let payload = if *payload == "-" { None } else { Some(parse_f64(line_no, "payload", payload)?) };
    let e = GameEvent { t: parse_f64(line_no, "time", t)?, kind, pattern_ids, payload };
    e.validate().map_err(|err| Error::parse(line_no, err.to_string()))?;
    Ok(e)
}

/// Parses a session file. Streams come back sorted; per-stream timestamps
/// must already be strictly increasing in file order.
pub fn parse_session(bytes: &[u8]) -> Result<SessionRecording> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(0, format!("not UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());

    let (hline, header) = lines.next().ok_or(Error::EmptyInput)?;
    let meta = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["H", subject, epoch] => SessionMeta::new(*subject, *epoch),
        _ => return Err(Error::parse(hline, "expected header `H <subject_id> <session_epoch>`")),
    };
    chrono::DateTime::parse_from_rfc3339(&meta.session_epoch)
        .map_err(|e| Error::parse(hline, format!("session epoch: {e}")))?;

    let mut decls: Vec<StreamDecl> = Vec::new();
    let mut streams: BTreeMap<StreamKey, Vec<TimedValue>> = BTreeMap::new();
    let mut events: Vec<GameEvent> = Vec::new();
    let mut body_started = false;

    for (no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "D" => {
                if body_started {
                    return Err(Error::parse(no, "stream declaration after body lines"));
                }
                let [_, dev, ch, rate] = fields.as_slice() else {
                    return Err(Error::parse(no, "declaration needs `D <device> <channel> <rate_hz>`"));
                };
                let channel: Channel = ch.parse().map_err(|e: String| Error::parse(no, e))?;
                let rate_hz = parse_f64(no, "rate", rate)?;
                if rate_hz <= 0.0 {
                    return Err(Error::parse(no, "rate must be positive"));
                }
                let key = StreamKey::new(*dev, channel);
                if streams.contains_key(&key) {
                    return Err(Error::parse(no, format!("stream {key} declared twice")));
                }
                streams.insert(key.clone(), Vec::new());
                decls.push(StreamDecl { key, rate_hz });
            }
            "S" => {
                body_started = true;
                let s = parse_sample_line(no, line)?;
                let key = s.key();
                let Some(stream) = streams.get_mut(&key) else {
                    return Err(Error::parse(no, format!("unknown device/channel {key}")));
                };
                if let Some(prev) = stream.last() {
                    if s.t <= prev.t {
                        return Err(Error::parse(
                            no,
                            format!("stream {key} not strictly increasing ({} after {})", s.t, prev.t),
                        ));
                    }
                }
                stream.push(TimedValue::new(s.t, s.value));
            }
            "E" => {
                body_started = true;
                let e = parse_event_line(no, &fields[1..])?;
                if let Some(prev) = events.last() {
                    if e.t < prev.t {
                        return Err(Error::parse(no, format!("event at {} precedes previous event at {}", e.t, prev.t)));
                    }
                }
                events.push(e);
            }
            "H" => return Err(Error::parse(no, "duplicate header")),
            other => return Err(Error::parse(no, format!("unknown line kind `{other}`"))),
        }
    }

    let mut meta = meta;
    decls.sort_by(|a, b| a.key.cmp(&b.key));
    meta.streams = decls;
    let rec = SessionRecording { meta, streams, events };
    rec.validate()?;
    Ok(rec)
}

enum Body<'a> {
    Sample(&'a StreamKey, TimedValue),
    Event(&'a GameEvent),
}

impl Body<'_> {
    fn t(&self) -> f64 {
        match self {
            Body::Sample(_, s) => s.t,
            Body::Event(e) => e.t,
        }
    }
}

fn body_order(a: &Body, b: &Body) -> Ordering {
    a.t().total_cmp(&b.t()).then_with(|| match (a, b) {
        (Body::Sample(ka, _), Body::Sample(kb, _)) => ka.cmp(kb),
        (Body::Sample(..), Body::Event(_)) => Ordering::Less,
        (Body::Event(_), Body::Sample(..)) => Ordering::Greater,
        (Body::Event(_), Body::Event(_)) => Ordering::Equal,
    })
}

/// Serializes a recording in canonical order. The recording is validated
/// first.
pub fn write_session(rec: &SessionRecording) -> Result<Vec<u8>> {
    rec.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "H {} {}", rec.meta.subject_id, rec.meta.session_epoch);
    let mut decls: Vec<&StreamDecl> = rec.meta.streams.iter().collect();
    decls.sort_by(|a, b| a.key.cmp(&b.key));
    for d in decls {
        let _ = writeln!(out, "D {} {} {}", d.key.device_id, d.key.channel, fmt_rate(d.rate_hz));
    }

    let mut body: Vec<Body> = rec
        .streams
        .iter()
        .flat_map(|(k, v)| v.iter().map(move |s| Body::Sample(k, *s)))
        .chain(rec.events.iter().map(Body::Event))
        .collect();
    // Stable sort keeps recorded event order at equal timestamps.
    body.sort_by(body_order);

    for line in body {
        match line {
            Body::Sample(k, s) => {
                let _ = writeln!(out, "S {} {} {} {}", fmt6(s.t), k.device_id, k.channel, fmt6(s.value));
            }
            Body::Event(e) => {
                let ids = if e.pattern_ids.is_empty() { "-".to_string() } else { e.pattern_ids.join(",") };
                let payload = e.payload.map(fmt6).unwrap_or_else(|| "-".to_string());
                let _ = writeln!(out, "E {} {} {} {}", fmt6(e.t), e.kind, ids, payload);
            }
        }
    }
    Ok(out.into_bytes())
}

/// Formats a single sample as a wire line (no trailing newline).
pub fn sample_line(s: &Sample) -> String {
    format!("S {} {} {} {}", fmt6(s.t), s.device_id, s.channel, fmt6(s.value))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "H p01 2018-03-20T10:00:00Z\n\
                         D bit1 eda 4\n\
                         S 0.000000 bit1 eda 2.000000\n\
                         S 0.250000 bit1 eda 2.010000\n\
                         E 0.250000 phase_marker calibration -\n";

    #[test]
    fn smallest_valid_file() {
        let rec = parse_session(SMALL.as_bytes()).unwrap();
        assert_eq!(rec.streams.len(), 1);
        let s = rec.stream(&StreamKey::new("bit1", Channel::Eda)).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(rec.events.len(), 1);
        assert_eq!(write_session(&rec).unwrap(), SMALL.as_bytes());
    }

    #[test]
    fn decreasing_time_names_the_line() {
        let text = "H p01 2018-03-20T10:00:00Z\nD a eda 4\nS 1.000000 a eda 2.0\nS 0.500000 a eda 2.0\n";
        match parse_session(text.as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("strictly increasing"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_things() {
        let base = "H p01 2018-03-20T10:00:00Z\nD a eda 4\n";
        for (bad, line) in [
            ("S 0.0 b eda 1.0\n", 3),
            ("X 0.0\n", 3),
            ("S 0.0 a ecg 1.0\n", 3),
            ("E 0.0 pattern_event - -\n", 3),
            ("E 0.0 rating - 12\n", 3),
            ("S 0.0 a eda -1.0\n", 3),
        ] {
            let err = parse_session(format!("{base}{bad}").as_bytes()).unwrap_err();
            assert!(matches!(err, Error::Parse { line: l, .. } if l == line), "{bad}: {err}");
        }
        assert!(matches!(parse_session(b""), Err(Error::EmptyInput)));
        assert!(matches!(parse_session(b"\n\n"), Err(Error::EmptyInput)));
    }

    #[test]
    fn empty_streams_with_one_event() {
        let mut rec = SessionRecording::new(SessionMeta::new("s", "2018-03-20T10:00:00Z"));
        rec.events.push(GameEvent::pattern(1.5, "enemies"));
        let text = String::from_utf8(write_session(&rec).unwrap()).unwrap();
        assert_eq!(text, "H s 2018-03-20T10:00:00Z\nE 1.500000 pattern_event enemies -\n");
    }

    #[test]
    fn interleaved_devices_are_time_sorted() {
        let text = "H p 2018-03-20T10:00:00Z\nD b eda 2\nD a pulse 2\n\
                    S 0.000000 b eda 1.0\nS 0.500000 b eda 1.0\nS 1.000000 b eda 1.0\n\
                    S 0.250000 a pulse 0.1\nS 0.750000 a pulse 0.1\n";
        let rec = parse_session(text.as_bytes()).unwrap();
        let out = String::from_utf8(write_session(&rec).unwrap()).unwrap();
        let times: Vec<f64> = out
            .lines()
            .filter(|l| l.starts_with('S'))
            .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert!(out.starts_with("H p 2018-03-20T10:00:00Z\nD a pulse 2\nD b eda 2\n"));
    }

    #[test]
    fn sample_line_roundtrip() {
        let s = parse_sample_line(1, "S 12.345678 dev hr 71.250000").unwrap();
        assert_eq!(sample_line(&s), "S 12.345678 dev hr 71.250000");
        assert!(parse_sample_line(1, "hello").is_err());
        assert!(parse_sample_line(1, "S 1.0 dev hr 400").is_err());
    }
}
