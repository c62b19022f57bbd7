//! External SMT solvers driven as one-shot subprocesses.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use super::registry::{SolverConfig, SolverKind};
use super::{SolveResult, SolveStatus};
use crate::encode::sexp::{self, Sexp};
use crate::encode::{model_value, SmtQuery};
use crate::transform::ssa::SymKey;

const POLL: Duration = Duration::from_millis(10);

static FILE_COUNTER: AtomicU64 = AtomicU64::new(0);

struct TempScript(PathBuf);

impl Drop for TempScript {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

fn temp_script(text: &str) -> std::io::Result<TempScript> {
    let n = FILE_COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!("cvbmc-{}-{n}.smt2", std::process::id()));
    std::fs::write(&path, text)?;
    Ok(TempScript(path))
}

fn reader<R: Read + Send + 'static>(r: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut r) = r {
            let _ = r.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn stop(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

type Model = Vec<(SymKey, i128)>;

/// Parse solver output: the verdict on the first line and, after `sat`,
/// the `get-value` response.
pub fn parse_output(out: &str, q: &SmtQuery) -> Result<(SolveStatus, Option<Model>), String> {
    let mut lines = out.lines().skip_while(|l| l.trim().is_empty());
    let first = lines.next().map(str::trim).unwrap_or("");
    match first {
        "unsat" => return Ok((SolveStatus::Unsat, None)),
        "unknown" => return Ok((SolveStatus::Unknown, None)),
        "timeout" => return Ok((SolveStatus::Timeout, None)),
        "sat" => {}
        other => return Err(format!("unexpected solver output `{other}`")),
    }
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let parsed = sexp::parse_all(&rest).map_err(|e| e.to_string())?;
    let pairs = parsed
        .iter()
        .find_map(|e| {
            let l = e.as_list()?;
            l.iter().all(|p| p.as_list().is_some_and(|p| p.len() == 2)).then_some(l)
        })
        .ok_or_else(|| "missing get-value response".to_string())?;
    let mut model = Vec::new();
    for (name, sym) in q.value_symbols.iter().zip(&q.symbols) {
        let bare = name.trim_matches('|');
        let value = pairs
            .iter()
            .filter_map(Sexp::as_list)
            .find(|p| p[0].as_symbol() == Some(bare))
            .and_then(|p| sexp::constant_value(&p[1]))
            .ok_or_else(|| format!("no value for {name}"))?;
        model.push((sym.key.clone(), model_value(q.encoding.kind, sym.ty, value)));
    }
    Ok((SolveStatus::Sat, Some(model)))
}

pub fn solve_external(q: &SmtQuery, cfg: &SolverConfig, cancel: &AtomicBool) -> SolveResult {
    let start = Instant::now();
    let fail = |status, msg: String| SolveResult::failed(status, &cfg.name, q.encoding.kind, q.encoding.precision, msg, start.elapsed());
    let SolverKind::External { command, file_mode } = &cfg.kind else {
        return fail(SolveStatus::SolverError, "not an external solver".into());
    };
    let script = if *file_mode {
        match temp_script(&q.text) {
            Ok(f) => Some(f),
            Err(e) => return fail(SolveStatus::SolverError, format!("cannot write script: {e}")),
        }
    } else {
        None
    };
    let args: Vec<String> = command[1..]
        .iter()
        .map(|a| match &script {
            Some(f) => a.replace("{file}", &f.0.display().to_string()),
            None => a.clone(),
        })
        .collect();
    let spawned = Command::new(&command[0])
        .args(&args)
        .stdin(if *file_mode { Stdio::null() } else { Stdio::piped() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => return fail(SolveStatus::SolverError, format!("spawn failed: {e}")),
    };
    let writer = child.stdin.take().map(|mut w| {
        let text = q.text.clone();
        thread::spawn(move || {
            let _ = w.write_all(text.as_bytes());
        })
    });
    let out = reader(child.stdout.take());
    let err = reader(child.stderr.take());
    let deadline = start + cfg.timeout;
    let exit = loop {
        if cancel.load(Ordering::Relaxed) {
            stop(&mut child);
            break None;
        }
        let now = Instant::now();
        if now >= deadline {
            stop(&mut child);
            break None;
        }
        match child.wait_timeout(POLL.min(deadline - now)) {
            Ok(Some(status)) => break Some(status),
            Ok(None) => {}
            Err(e) => {
                stop(&mut child);
                return fail(SolveStatus::SolverError, format!("wait failed: {e}"));
            }
        }
    };
    if let Some(w) = writer {
        let _ = w.join();
    }
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    let Some(status) = exit else {
        return if cancel.load(Ordering::Relaxed) {
            fail(SolveStatus::Unknown, "cancelled".into())
        } else {
            fail(SolveStatus::Timeout, format!("killed after {:?}", cfg.timeout))
        };
    };
    // A definitive first line wins even when the exit status is non-zero:
    // some solvers exit with an error after `unsat` because `get-value` has
    // no model to report.
    match parse_output(&stdout, q) {
        Ok((s, model)) => SolveResult {
            status: s,
            model,
            precision: q.encoding.precision,
            encoding: q.encoding.kind,
            solver: cfg.name.clone(),
            wall_time: start.elapsed(),
            message: None,
        },
        Err(e) => fail(SolveStatus::SolverError, format!("{e} (exit {status}); stderr: {}", stderr.trim())),
    }
}
