//! Live ingestion over TCP and the matching replay client.
//!
//! Clients send bare `S` sample lines. One reader thread per connection parses
//! lines and forwards samples to a single processing loop, which owns the
//! estimator and controller and writes affect states and directives to
//! standard output. A bad line gets `ERR <line#> <msg>` back on its
//! connection and the stream continues.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::path::Path;
use std::sync::mpsc::{channel, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use affloop_core::catalog::Catalog;
use affloop_core::engine::{control_step, merged_samples, CtlState, Estimator};
use affloop_core::features::Baseline;
use affloop_core::signal::{parse_sample_line, sample_line, Sample};
use affloop_core::Error;

use crate::commands::read_session;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

enum Msg {
    Sample { sample: Sample, line_no: usize, conn: Arc<TcpStream> },
    Shutdown,
}

fn reply_err(conn: &TcpStream, line_no: usize, e: &Error) {
    let msg = match e {
        Error::Parse { msg, .. } => msg.clone(),
        other => other.to_string(),
    };
    let mut w: &TcpStream = conn;
    // The client may already be gone; nothing else to do then.
    let _ = writeln!(w, "ERR {line_no} {}", msg.replace('\n', " "));
}

fn read_connection(conn: Arc<TcpStream>, tx: Sender<Msg>) {
    let reader = BufReader::new(&*conn);
    for (idx, line) in reader.lines().enumerate() {
        let Ok(line) = line else { break };
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_sample_line(line_no, &line) {
            Ok(sample) => {
                if tx.send(Msg::Sample { sample, line_no, conn: Arc::clone(&conn) }).is_err() {
                    break;
                }
            }
            Err(e) => reply_err(&conn, line_no, &e),
        }
    }
}

pub struct ServeArgs<'a> {
    pub bind: &'a str,
    pub port: u16,
    pub baseline: Baseline,
    pub catalog: Catalog,
    pub control: bool,
}

/// Runs until interrupted. Listening address goes to stderr as
/// `listening <addr>`.
pub fn serve(cfg: &RunConfig, args: ServeArgs) -> CliResult<()> {
    let listener = TcpListener::bind((args.bind, args.port))
        .map_err(|e| CliError::net(format!("bind {}:{}", args.bind, args.port), e))?;
    let addr = listener.local_addr().map_err(|e| CliError::net("listener", e))?;
    eprintln!("listening {addr}");

    let (tx, rx) = channel::<Msg>();
    let sig = tx.clone();
    ctrlc::set_handler(move || {
        let _ = sig.send(Msg::Shutdown);
    })
    .map_err(|e| CliError::net("signal handler", std::io::Error::other(e.to_string())))?;
    thread::spawn(move || {
        for conn in listener.incoming().flatten() {
            let tx = tx.clone();
            thread::spawn(move || read_connection(Arc::new(conn), tx));
        }
    });

    let mut est = Estimator::new(cfg.estimator, args.baseline)?;
    let mut ctl = CtlState::default();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io_err = |e| CliError::net("stdout", e);
    for msg in rx {
        match msg {
            Msg::Sample { sample, line_no, conn } => {
                if let Err(e) = est.push(&sample) {
                    reply_err(&conn, line_no, &e);
                    continue;
                }
                let states = est.poll()?;
                for s in &states {
                    writeln!(out, "{}", s.to_line()).map_err(io_err)?;
                    if args.control {
                        let (directives, next) = control_step(s.t, s, &cfg.controller, &args.catalog, &ctl)?;
                        ctl = next;
                        for d in directives {
                            writeln!(out, "{}", d.to_line()).map_err(io_err)?;
                        }
                    }
                }
                if !states.is_empty() {
                    out.flush().map_err(io_err)?;
                }
            }
            Msg::Shutdown => {
                if let Some(s) = est.flush()? {
                    writeln!(out, "{}", s.to_line()).map_err(io_err)?;
                }
                out.flush().map_err(io_err)?;
                return Ok(());
            }
        }
    }
    Ok(())
}

pub struct ReplayArgs<'a> {
    pub session: &'a Path,
    pub addr: &'a str,
    /// Session seconds per wall-clock second; 0 sends as fast as possible.
    pub speed: f64,
    pub devices: &'a [String],
}

/// Streams a session's samples in time order. Returns the server's replies.
pub fn replay(args: ReplayArgs) -> CliResult<String> {
    if !(args.speed >= 0.0 && args.speed.is_finite()) {
        return Err(CliError::Usage(format!("speed {} must be >= 0", args.speed)));
    }
    let mut rec = read_session(args.session)?;
    if !args.devices.is_empty() {
        let ids: Vec<&str> = args.devices.iter().map(String::as_str).collect();
        rec = rec.select_devices(&ids);
    }
    let conn = TcpStream::connect(args.addr).map_err(|e| CliError::net(args.addr, e))?;
    let net = |e| CliError::net(args.addr, e);
    let mut w = BufWriter::new(&conn);
    let start = Instant::now();
    let samples = merged_samples(&rec);
    let t0 = samples.first().map_or(0.0, |s| s.t);
    for s in &samples {
        if args.speed > 0.0 {
            let due = Duration::from_secs_f64((s.t - t0) / args.speed);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                w.flush().map_err(net)?;
                thread::sleep(wait);
            }
        }
        writeln!(w, "{}", sample_line(s)).map_err(net)?;
    }
    w.flush().map_err(net)?;
    drop(w);
    conn.shutdown(Shutdown::Write).map_err(net)?;
    let mut replies = String::new();
    (&conn).read_to_string(&mut replies).map_err(net)?;
    Ok(replies)
}
