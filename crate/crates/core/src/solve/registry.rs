//! Solver configurations and the registry file.
//!
//! ```toml
//! builtin = true          # keep the enumerative fallback (default)
//! builtin_limit_bits = 20
//!
//! [[solver]]
//! name = "z3"
//! command = ["z3", "-in"]     # `{file}` in an argument switches to file mode
//! logics = ["QF_ABV", "QF_AUFLIA", "QF_AUFNIA"]
//! timeout = 10
//! ```
//!
//! `CVBMC_SOLVERS` names the registry file; `CVBMC_SOLVER_<NAME>` replaces
//! the executable of solver `<name>` (upper-cased, `-` as `_`).

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_LIMIT_BITS: u32 = 20;
pub const BUILTIN_NAME: &str = "builtin";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolverKind {
    External {
        /// Executable followed by arguments.
        command: Vec<String>,
        /// Script passed through a temporary file instead of stdin.
        file_mode: bool,
    },
    BuiltinEnumerative {
        limit_bits: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolverConfig {
    pub name: String,
    pub kind: SolverKind,
    /// Supported logics; empty means any.
    pub logics: Vec<String>,
    #[serde(with = "secs")]
    pub timeout: Duration,
}

mod secs {
    use std::time::Duration;

    pub fn serialize<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}

impl SolverConfig {
    pub fn builtin(limit_bits: u32) -> SolverConfig {
        SolverConfig {
            name: BUILTIN_NAME.into(),
            kind: SolverKind::BuiltinEnumerative { limit_bits },
            logics: Vec::new(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn external(name: &str, command: &[&str], logics: &[&str]) -> SolverConfig {
        SolverConfig {
            name: name.into(),
            kind: SolverKind::External {
                command: command.iter().map(|s| s.to_string()).collect(),
                file_mode: command.iter().any(|a| a.contains("{file}")),
            },
            logics: logics.iter().map(|s| s.to_string()).collect(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self.kind, SolverKind::BuiltinEnumerative { .. })
    }

    pub fn supports_logic(&self, logic: &str) -> bool {
        self.logics.is_empty() || self.logics.iter().any(|l| l == logic)
    }

    /// A builtin solver only handles VCs within its bit budget.
    pub fn can_solve(&self, logic: &str, input_bits: u32) -> bool {
        match self.kind {
            SolverKind::BuiltinEnumerative { limit_bits } => input_bits <= limit_bits,
            SolverKind::External { .. } => self.supports_logic(logic),
        }
    }

    pub fn with_timeout(mut self, t: Duration) -> SolverConfig {
        self.timeout = t;
        self
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("cannot read solver registry {path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("invalid solver registry: {0}")]
    Parse(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    #[serde(default = "yes")]
    builtin: bool,
    #[serde(default = "limit")]
    builtin_limit_bits: u32,
    #[serde(default)]
    solver: Vec<RawSolver>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    name: String,
    command: Command,
    #[serde(default)]
    logics: Vec<String>,
    timeout: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Command {
    Line(String),
    Argv(Vec<String>),
}

fn yes() -> bool {
    true
}

fn limit() -> u32 {
    DEFAULT_LIMIT_BITS
}

fn env_key(name: &str) -> String {
    format!("CVBMC_SOLVER_{}", name.to_ascii_uppercase().replace('-', "_"))
}

/// Parse registry text. `env` resolves executable overrides.
pub fn parse_registry(text: &str, env: &dyn Fn(&str) -> Option<String>) -> Result<Vec<SolverConfig>, RegistryError> {
    let raw: RawRegistry = toml::from_str(text).map_err(|e| RegistryError::Parse(e.message().to_string()))?;
    let mut out = Vec::new();
    for s in raw.solver {
        let mut argv = match s.command {
            Command::Line(l) => l.split_whitespace().map(str::to_string).collect(),
            Command::Argv(v) => v,
        };
        if argv.is_empty() {
            return Err(RegistryError::Parse(format!("solver `{}` has an empty command", s.name)));
        }
        if s.name == BUILTIN_NAME {
            return Err(RegistryError::Parse(format!("`{BUILTIN_NAME}` is reserved")));
        }
        if let Some(exe) = env(&env_key(&s.name)) {
            argv[0] = exe;
        }
        let timeout = match s.timeout {
            Some(t) if t.is_finite() && t > 0.0 => Duration::from_secs_f64(t),
            Some(_) => return Err(RegistryError::Parse(format!("solver `{}` has a non-positive timeout", s.name))),
            None => DEFAULT_TIMEOUT,
        };
        let file_mode = argv.iter().any(|a| a.contains("{file}"));
        out.push(SolverConfig { name: s.name, kind: SolverKind::External { command: argv, file_mode }, logics: s.logics, timeout });
    }
    if raw.builtin {
        out.push(SolverConfig::builtin(raw.builtin_limit_bits));
    }
    Ok(out)
}

pub fn load_registry(path: &Path) -> Result<Vec<SolverConfig>, RegistryError> {
    let text = std::fs::read_to_string(path).map_err(|e| RegistryError::Io { path: path.into(), msg: e.to_string() })?;
    parse_registry(&text, &|k| std::env::var(k).ok())
}

/// Find an executable on `PATH`.
pub fn which(exe: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(exe)).find(|p| p.is_file())
}

/// Registry used without a file: z3 when it is installed, then the builtin.
pub fn default_registry() -> Vec<SolverConfig> {
    let mut out = Vec::new();
    let exe = std::env::var(env_key("z3")).ok().or_else(|| which("z3").map(|p| p.display().to_string()));
    if let Some(exe) = exe {
        out.push(SolverConfig::external("z3", &[&exe, "-in"], &["QF_ABV", "QF_AUFLIA", "QF_AUFNIA"]));
    }
    out.push(SolverConfig::builtin(DEFAULT_LIMIT_BITS));
    out
}

/// Registry from an explicit path, else `CVBMC_SOLVERS`, else the default.
pub fn resolve_registry(path: Option<&Path>) -> Result<Vec<SolverConfig>, RegistryError> {
    match path {
        Some(p) => load_registry(p),
        None => match std::env::var_os("CVBMC_SOLVERS") {
            Some(p) => load_registry(Path::new(&p)),
            None => Ok(default_registry()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_override() {
        let text = r#"
            builtin_limit_bits = 12
            [[solver]]
            name = "my-z3"
            command = "z3 -in"
            logics = ["QF_ABV"]
            timeout = 2.5
            [[solver]]
            name = "cvc"
            command = ["cvc5", "{file}"]
        "#;
        let env = |k: &str| (k == "CVBMC_SOLVER_MY_Z3").then(|| "/opt/z3".to_string());
        let r = parse_registry(text, &env).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].kind, SolverKind::External { command: vec!["/opt/z3".into(), "-in".into()], file_mode: false });
        assert_eq!(r[0].timeout, Duration::from_millis(2500));
        assert!(r[0].supports_logic("QF_ABV") && !r[0].supports_logic("QF_AUFLIA"));
        assert!(matches!(r[1].kind, SolverKind::External { file_mode: true, .. }));
        assert!(r[1].supports_logic("QF_AUFNIA"));
        assert_eq!(r[2], SolverConfig::builtin(12));
    }

    #[test]
    fn builtin_can_be_disabled() {
        let r = parse_registry("builtin = false", &|_| None).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(parse_registry("[[solver]]\nname = \"x\"\ncommand = []", &|_| None).is_err());
        assert!(parse_registry("[[solver]]\nname = \"x\"\ncommand = \"x\"\ntimeout = 0", &|_| None).is_err());
        assert!(parse_registry("bogus = 1", &|_| None).is_err());
    }

    #[test]
    fn builtin_budget() {
        let b = SolverConfig::builtin(20);
        assert!(b.can_solve("QF_ABV", 20));
        assert!(!b.can_solve("QF_ABV", 21));
    }
}
