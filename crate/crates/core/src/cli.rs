//! `cvbmc` command line.
//!
//! Exit codes: 0 safe or equivalent, 10 violation or not equivalent,
//! 20 unknown or incomparable, 2 usage, input or configuration error.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::cv::{self, plan::parse_tests, Cache, CvConfig};
use crate::equiv;
use crate::frontend::{self, ast::UnwindingMode, Program};
use crate::pipeline::{self, EncodingChoice, Options};
use crate::solve::{self, registry};
use crate::vcgen::PropertyKind;
use crate::witness::cex::{parse_vc_id, replay, replay_config};
use crate::witness::Counterexample;

pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cvbmc", version, about = "Bounded model checker for MiniC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check every property of one entry function up to the bound.
    Verify {
        file: PathBuf,
        #[arg(long, default_value = "main")]
        function: String,
        #[command(flatten)]
        common: Common,
    },
    /// Decide bounded equivalence of a function across two versions.
    Equiv {
        old: PathBuf,
        new: PathBuf,
        #[arg(long)]
        function: String,
        #[command(flatten)]
        common: Common,
    },
    /// Re-verify what changed between two versions (files or directories of `.mc` files).
    Cv {
        old: PathBuf,
        new: PathBuf,
        /// Verdict cache (JSON lines); created if missing.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Test cases (JSON list).
        #[arg(long)]
        tests: Option<PathBuf>,
        /// Equivalence bound; defaults to the unwinding bound.
        #[arg(long)]
        equiv_unwind: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the feature vector and selected strategy for every VC.
    Features {
        file: PathBuf,
        #[arg(long, default_value = "main")]
        function: String,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run a counterexample through the interpreter. Exits 10 when the
    /// violation reproduces, 0 when it does not.
    Replay {
        file: PathBuf,
        /// Counterexample JSON, or any report containing a `witness`.
        witness: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Assume,
    Assert,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EncodingArg {
    Bv,
    Int,
    Auto,
    Portfolio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long = "unwind", default_value_t = 8)]
    pub unwind: u32,
    #[arg(long, value_enum, default_value = "assume")]
    pub unwinding_mode: ModeArg,
    /// Comma-separated property kinds, `all` or `none`.
    #[arg(long, default_value = "all")]
    pub checks: String,
    #[arg(long, value_enum, default_value = "auto")]
    pub encoding: EncodingArg,
    /// Solver registry file; overrides `CVBMC_SOLVERS`.
    #[arg(long)]
    pub solvers: Option<PathBuf>,
    /// Per-VC solver timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
    #[arg(long)]
    pub dump_smt: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub force_approximate: bool,
}

/// Failure before any verdict exists; always exit 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

pub fn parse_checks(s: &str) -> Result<BTreeSet<PropertyKind>, String> {
    match s.trim() {
        "all" => return Ok(PropertyKind::ALL.into_iter().collect()),
        "none" | "" => return Ok(BTreeSet::new()),
        _ => {}
    }
    s.split(',').map(|c| PropertyKind::from_name(c.trim()).ok_or_else(|| format!("unknown check `{}`", c.trim()))).collect()
}

impl Common {
    pub fn options(&self) -> Result<Options, UsageError> {
        if self.unwind < 1 {
            return Err(UsageError("--unwind must be at least 1".into()));
        }
        let mut solvers = registry::resolve_registry(self.solvers.as_deref())?;
        if let Some(t) = self.timeout {
            let t = Duration::try_from_secs_f64(t).map_err(|e| UsageError(format!("--timeout: {e}")))?;
            solvers = solvers.into_iter().map(|s| s.with_timeout(t)).collect();
        }
        let mut o = Options::new(self.unwind, solvers);
        o.mode = match self.unwinding_mode {
            ModeArg::Assume => UnwindingMode::Assumption,
            ModeArg::Assert => UnwindingMode::Assertion,
        };
        o.checks = parse_checks(&self.checks)?;
        o.encoding = match self.encoding {
            EncodingArg::Bv => EncodingChoice::Bv,
            EncodingArg::Int => EncodingChoice::Int,
            EncodingArg::Auto => EncodingChoice::Auto,
            EncodingArg::Portfolio => EncodingChoice::Portfolio,
        };
        o.force_approximate = self.force_approximate;
        o.dump_smt = self.dump_smt.clone();
        o.jobs = self.jobs.max(1);
        Ok(o)
    }
}

fn read(path: &Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

/// A file, or every `.mc` file of a directory in name order.
pub fn load_program(path: &Path) -> Result<Program, UsageError> {
    let mut units = Vec::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| UsageError(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "mc"))
            .collect();
        files.sort();
        for f in files {
            units.push((f.display().to_string(), read(&f)?));
        }
    } else {
        units.push((path.display().to_string(), read(path)?));
    }
    Ok(frontend::parse_units(&units)?)
}

fn require_function(p: &Program, f: &str, path: &Path) -> Result<(), UsageError> {
    match p.function(f) {
        Some(_) => Ok(()),
        None => Err(UsageError(format!("{}: no function `{f}`", path.display()))),
    }
}

/// First object stored under a `witness` key, searching depth-first.
fn find_witness(v: &Value) -> Option<&Value> {
    match v {
        Value::Object(m) => {
            if m.contains_key("vc_id") && m.contains_key("inputs") {
                return Some(v);
            }
            m.get("witness").filter(|w| w.is_object()).or_else(|| m.values().find_map(find_witness))
        }
        Value::Array(a) => a.iter().find_map(find_witness),
        _ => None,
    }
}

#[derive(Serialize)]
struct FeatureRow {
    vc_id: String,
    features: solve::FeatureVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategies: Option<Vec<solve::Strategy>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct ReplayReport {
    vc_id: String,
    reproduced: bool,
}

fn human(v: &Value) -> String {
    let mut out = String::new();
    let s = |v: &Value| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
    let status = |v: &Value| match v.as_str() {
        Some("safe") => "SAFE-up-to-k".to_string(),
        Some("violation") => "VIOLATION".to_string(),
        Some("unknown") => "UNKNOWN".to_string(),
        _ => s(v),
    };
    let inputs = |w: &Value| -> String {
        w["inputs"]
            .as_array()
            .map_or(String::new(), |a| a.iter().map(|i| format!("{}={}", s(&i["symbol"]), i["value"])).collect::<Vec<_>>().join(" "))
    };
    if let Some(vcs) = v.get("vcs").and_then(Value::as_array) {
        for vc in vcs {
            out.push_str(&format!("{} {}", s(&vc["vc_id"]), status(&vc["status"])));
            if let Some(w) = vc.get("witness") {
                out.push_str(&format!("  [{}]", inputs(w)));
            }
            if let Some(r) = vc.get("reason") {
                out.push_str(&format!("  ({})", s(r)));
            }
            out.push('\n');
        }
        out.push_str(&format!("{}: {}\n", s(&v["function"]), status(&v["status"])));
    } else if let Some(rows) = v.as_array() {
        for r in rows {
            let chosen = r["strategies"]
                .get(0)
                .map_or_else(|| s(&r["error"]), |st| format!("{} via {}", s(&st["encoding"]), s(&st["solver"]["name"])));
            out.push_str(&format!("{} {}  {}\n", s(&r["vc_id"]), chosen, r["features"]));
        }
    } else if v.get("plan_stats").is_some() {
        for (k, set) in v["changes"].as_object().into_iter().flatten() {
            if let Some(a) = set.as_array().filter(|a| !a.is_empty()) {
                out.push_str(&format!("{k}: {}\n", a.iter().map(&s).collect::<Vec<_>>().join(", ")));
            }
        }
        for e in v["equivalences"].as_array().into_iter().flatten() {
            out.push_str(&format!("equiv {} {}\n", s(&e["function"]), s(&e["status"])));
        }
        for r in v["verdicts"].as_array().into_iter().flatten() {
            let cached = if r["cached"] == Value::Bool(true) { " (cached)" } else { "" };
            out.push_str(&format!("{} {}{cached}", s(&r["vc_id"]), status(&r["status"])));
            if let Some(w) = r.get("witness") {
                out.push_str(&format!("  [{}]", inputs(w)));
            }
            out.push('\n');
        }
        for n in v["notes"].as_array().into_iter().flatten() {
            out.push_str(&format!("note: {}\n", s(n)));
        }
        let st = &v["plan_stats"];
        out.push_str(&format!(
            "planned {} executed {} cache-hits {}: {}\n",
            st["planned"],
            st["executed"],
            st["cache_hits"],
            status(&v["status"])
        ));
    } else if v.get("reproduced").is_some() {
        let r = if v["reproduced"] == Value::Bool(true) { "reproduced" } else { "not reproduced" };
        out.push_str(&format!("{} {r}\n", s(&v["vc_id"])));
    } else {
        out.push_str(&format!("{}: {}", s(&v["function"]), s(&v["status"])));
        if let Some(w) = v.get("witness") {
            out.push_str(&format!("  [{}]", inputs(w)));
        }
        if let Some(r) = v.get("reason") {
            out.push_str(&format!("  ({})", s(r)));
        }
        out.push('\n');
    }
    out
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, report: &T) -> std::io::Result<()> {
    let v = serde_json::to_value(report).expect("reports serialize");
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json")),
        Format::Human => out.write_all(human(&v).as_bytes()),
    }
}

/// Run one command, writing the report to `out`. Returns the exit code.
pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32, UsageError> {
    match cmd {
        Command::Verify { file, function, common } => {
            let opts = common.options()?;
            let p = load_program(file)?;
            require_function(&p, function, file)?;
            let r = pipeline::verify(&p, function, &opts)?;
            emit(out, common.format, &r)?;
            Ok(r.status.exit_code())
        }
        Command::Equiv { old, new, function, common } => {
            let opts = common.options()?;
            let (po, pn) = (load_program(old)?, load_program(new)?);
            let v = equiv::equivalence(&po, &pn, function, &opts)?;
            emit(out, common.format, &v)?;
            Ok(v.status.exit_code())
        }
        Command::Cv { old, new, cache, tests, equiv_unwind, common } => {
            let opts = common.options()?;
            let (po, pn) = (load_program(old)?, load_program(new)?);
            let tests = match tests {
                Some(t) => parse_tests(&read(t)?).map_err(|e| UsageError(format!("{}: {e}", t.display())))?,
                None => Vec::new(),
            };
            let mut c = match cache {
                Some(path) => Cache::load(path)?,
                None => Cache::new(),
            };
            let cfg = CvConfig { opts, k_eq: *equiv_unwind };
            let r = cv::run_cv(&po, &pn, &tests, &mut c, &cfg)?;
            if let Some(path) = cache {
                c.save(path)?;
            }
            emit(out, common.format, &r)?;
            Ok(r.exit_code())
        }
        Command::Features { file, function, common } => {
            let opts = common.options()?;
            let p = load_program(file)?;
            require_function(&p, function, file)?;
            let vcs = pipeline::generate(&p, function, &opts)?;
            let rows: Vec<FeatureRow> = vcs
                .iter()
                .map(|vc| {
                    let (strategies, error) = match pipeline::strategies_for(vc, &opts) {
                        Ok(s) => (Some(s), None),
                        Err(e) => (None, Some(e)),
                    };
                    FeatureRow { vc_id: vc.id.clone(), features: solve::extract_features(vc), strategies, error }
                })
                .collect();
            emit(out, common.format, &rows)?;
            Ok(0)
        }
        Command::Replay { file, witness, common } => {
            let opts = common.options()?;
            let p = load_program(file)?;
            let v: Value = serde_json::from_str(&read(witness)?)?;
            let w = find_witness(&v).ok_or_else(|| UsageError(format!("{}: no counterexample found", witness.display())))?;
            let cex: Counterexample = serde_json::from_value(w.clone())?;
            let (entry, ..) = parse_vc_id(&cex.vc_id).ok_or_else(|| UsageError(format!("malformed vc id `{}`", cex.vc_id)))?;
            require_function(&p, &entry, file)?;
            let cfg = replay_config(&cex, opts.k, opts.mode, &opts.checks);
            let reproduced = replay(&p, &cex, &cfg);
            emit(out, common.format, &ReplayReport { vc_id: cex.vc_id.clone(), reproduced })?;
            Ok(if reproduced { 10 } else { 0 })
        }
    }
}

/// Parse `args` and run; usage errors print to stderr and return 2.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            let _ = writeln!(err, "cvbmc: {msg}");
            EXIT_USAGE
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_list() {
        assert_eq!(parse_checks("all").unwrap().len(), PropertyKind::ALL.len());
        assert!(parse_checks("none").unwrap().is_empty());
        assert_eq!(parse_checks("user-assert, div-by-zero").unwrap().len(), 2);
        assert!(parse_checks("bogus").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["cvbmc", "verify"], &mut o, &mut e), 2);
        assert_eq!(run(["cvbmc", "verify", "/nonexistent.mc"], &mut o, &mut e), 2);
        assert_eq!(run(["cvbmc", "--help"], &mut o, &mut e), 0);
    }
}
