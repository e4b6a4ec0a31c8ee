//! The `gw` command line: argument grammar, report type, and one handler per
//! subcommand. [`run`] never panics on bad input; problems become exit codes.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gw_core::engine::{kontsevich_table, parse_records, CorrelatorKey, Engine, InvariantCache, PrimaryBackend};
use gw_core::target::{load_target, preset, TargetSpace, PRESET_NAMES};
use gw_core::virasoro::{
    commutator_residual, l0_scalar_check, psi, psi_tilde_report, verify_identity, IdentityId, PsiReport,
};
use gw_core::{format_rational, Error, NovikovDegree, Rational, TruncationPolicy};
use serde::{Deserialize, Serialize};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ENGINE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub status: Status,
    pub item: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
}

impl Finding {
    fn new(status: Status, item: impl Into<String>, message: impl Into<String>) -> Self {
        Finding { status, item: item.into(), message: message.into(), location: None, lhs: None, rhs: None }
    }

    fn info(item: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(Status::Info, item, message)
    }

    fn check(ok: bool, item: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(if ok { Status::Pass } else { Status::Fail }, item, message)
    }

    fn at(mut self, location: String, lhs: String, rhs: String) -> Self {
        self.location = Some(location);
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// Fingerprint of the active target, empty when none was resolved.
    pub target: String,
    pub policy: Option<TruncationPolicy>,
    pub outcome: Outcome,
    pub details: Vec<Finding>,
    pub wall_time_ms: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "gw", about = "Exact genus-0 Gromov-Witten invariants and Virasoro constraint checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for independent checks.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Args, Clone)]
struct TargetArgs {
    /// Preset name (point, P1, P2) or path to a target file.
    #[arg(long, default_value = "P2")]
    target: String,
    /// Primary invariants for a file target, as cache-format records.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
struct PolicyArgs {
    /// Maximum number of insertions K.
    #[arg(long)]
    insertions: Option<u32>,
    /// Maximum descendent level M.
    #[arg(long)]
    level: Option<u32>,
    /// Maximum Novikov degree D in every direction.
    #[arg(long)]
    degree: Option<u32>,
}

impl PolicyArgs {
    fn policy(&self, ts: &TargetSpace) -> TruncationPolicy {
        TruncationPolicy::uniform(
            self.insertions.unwrap_or(4),
            self.level.unwrap_or(3),
            self.degree.unwrap_or(2),
            ts.novikov_rank,
        )
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List, show, or validate targets.
    Targets {
        #[command(subcommand)]
        action: TargetsAction,
    },
    /// One invariant, keyed as `deg=a1,..,ar;ins=(m,alpha)...`.
    Invariant {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        key: String,
    },
    /// Degree-d rational plane curve counts through 3d-1 points.
    Nd {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        max: u32,
    },
    /// Coefficients of the genus-0 free energy.
    FreeEnergy {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Residual of the genus-0 L_n constraint.
    Psi {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        n: i64,
    },
    /// Residual of the tilde L_n constraint, n = 1 or 2.
    PsiTilde {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        n: i64,
    },
    /// Checks [L_m, L_n] = (m - n) L_(m+n).
    Commutator {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: i64,
        /// Highest operator level; defaults to m + n + 2.
        #[arg(long)]
        level: Option<u32>,
    },
    /// Both sides of the central condition and the [L_-1, L_1] scalar.
    CentralCondition {
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Runs registry identities.
    Identities {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        all: bool,
        #[arg(long, value_delimiter = ',')]
        tags: Vec<String>,
    },
    /// Manages the on-disk invariant cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Subcommand)]
enum TargetsAction {
    List,
    Show {
        #[command(flatten)]
        target: TargetArgs,
    },
    Validate {
        #[command(flatten)]
        target: TargetArgs,
    },
}

#[derive(Debug, Subcommand)]
enum CacheAction {
    Warm {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    Verify {
        #[command(flatten)]
        target: TargetArgs,
    },
    Clear {
        #[command(flatten)]
        target: TargetArgs,
    },
}

/// Error carrying the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::Validation(_)
            | Error::UnknownPreset(_)
            | Error::UnknownIdentity(_)
            | Error::IndexOutOfRange(_)
            | Error::UnsupportedIndex(_)
            | Error::PolicyTooTight(_) => EXIT_USAGE,
            _ => EXIT_ENGINE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

/// What a handler hands back before timing and outcome are filled in.
struct Partial {
    target: String,
    policy: Option<TruncationPolicy>,
    details: Vec<Finding>,
}

impl Partial {
    fn new(target: &TargetSpace, policy: Option<TruncationPolicy>) -> Self {
        Partial { target: target.fingerprint(), policy, details: Vec::new() }
    }
}

pub fn cache_dir() -> PathBuf {
    std::env::var_os("GW_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".gw-cache"))
}

fn cache_path(ts: &TargetSpace) -> PathBuf {
    let safe: String = ts
        .name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    cache_dir().join(format!("{safe}.cache"))
}

fn resolve_target(args: &TargetArgs) -> Result<(TargetSpace, PrimaryBackend), Failure> {
    if PRESET_NAMES.contains(&args.target.as_str()) && args.table.is_none() {
        let ts = preset(&args.target)?;
        let backend = PrimaryBackend::for_preset(&args.target).expect("preset backend");
        return Ok((ts, backend));
    }
    let ts = if PRESET_NAMES.contains(&args.target.as_str()) {
        preset(&args.target)?
    } else {
        let text = std::fs::read_to_string(&args.target)
            .map_err(|e| usage(format!("cannot read target {}: {e}", args.target)))?;
        load_target(&text)?
    };
    let backend = match &args.table {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read table {}: {e}", path.display())))?;
            PrimaryBackend::table(parse_records(text.lines())?)?
        }
        None => match PrimaryBackend::for_preset(&ts.name) {
            Some(b) if b.check_target(&ts).is_ok() => b,
            _ => PrimaryBackend::table([])?,
        },
    };
    Ok((ts, backend))
}

/// Engine backed by the on-disk cache when one exists for this target.
fn engine_for(args: &TargetArgs) -> Result<Engine, Failure> {
    let (ts, backend) = resolve_target(args)?;
    let path = cache_path(&ts);
    let cache = if path.exists() {
        InvariantCache::load_or_new(&path, &ts.fingerprint())?
    } else {
        InvariantCache::new(ts.fingerprint())
    };
    Ok(Engine::with_cache(ts, backend, Arc::new(cache))?)
}

fn psi_findings(r: &PsiReport, label: &str, out: &mut Vec<Finding>) {
    if r.residual.is_empty() {
        out.push(Finding::check(true, label, "all coefficients zero"));
    }
    for (m, c) in r.residual.iter() {
        out.push(
            Finding::check(false, label, "nonzero residual coefficient").at(m.to_string(), format_rational(c), "0".into()),
        );
    }
    if let Some(agrees) = r.displayed_agrees {
        out.push(Finding::check(agrees, format!("{label} displayed form"), "displayed expression equals generic operator residual"));
    }
    out.push(Finding::check(
        r.families.dilaton_relations_hold,
        format!("{label} dilaton relations"),
        "derivative families at the origin satisfy the dilaton shift relations",
    ));
}

fn cmd_targets(action: &TargetsAction) -> Result<Partial, Failure> {
    match action {
        TargetsAction::List => {
            let mut p = Partial { target: String::new(), policy: None, details: Vec::new() };
            for name in PRESET_NAMES {
                let ts = preset(name)?;
                p.details.push(Finding::info(
                    name.to_string(),
                    format!("N={} d={} rank={} fingerprint={}", ts.classes, ts.complex_dim, ts.novikov_rank, ts.fingerprint()),
                ));
            }
            Ok(p)
        }
        TargetsAction::Show { target } => {
            let (ts, _) = resolve_target(target)?;
            let mut p = Partial::new(&ts, None);
            p.details.push(Finding::info(&ts.name, ts.to_json()));
            let b: Vec<String> = ts.b_values().iter().map(format_rational).collect();
            p.details.push(Finding::info("b", b.join(" ")));
            Ok(p)
        }
        TargetsAction::Validate { target } => {
            let (ts, _) = resolve_target(target)?;
            ts.validate()?;
            let mut p = Partial::new(&ts, None);
            p.details.push(Finding::check(true, &ts.name, "all target invariants hold"));
            Ok(p)
        }
    }
}

fn cmd_cache(action: &CacheAction) -> Result<Partial, Failure> {
    match action {
        CacheAction::Warm { target, policy } => {
            let e = engine_for(target)?;
            let pol = policy.policy(e.target());
            let f0 = e.free_energy(&pol)?;
            let path = cache_path(e.target());
            e.cache().save(&path)?;
            let mut p = Partial::new(e.target(), Some(pol));
            p.details.push(Finding::info(
                path.display().to_string(),
                format!("{} cached invariants, {} free-energy coefficients", e.cache().len(), f0.len()),
            ));
            Ok(p)
        }
        CacheAction::Verify { target } => {
            let (ts, backend) = resolve_target(target)?;
            let path = cache_path(&ts);
            if !path.exists() {
                return Err(Failure { code: EXIT_ENGINE, message: format!("no cache at {}", path.display()) });
            }
            let cache = InvariantCache::load_or_new(&path, &ts.fingerprint())?;
            let cold = Engine::new(ts.clone(), backend)?;
            let entries = cache.sorted_entries();
            let mut p = Partial::new(&ts, None);
            let step = 20;
            for (key, val) in entries.iter().step_by(step) {
                let fresh = cold.invariant(key)?;
                if fresh != *val {
                    p.details.push(
                        Finding::check(false, key.to_string(), "cached value differs from cold recomputation")
                            .at(key.to_string(), format_rational(val), format_rational(&fresh)),
                    );
                }
            }
            let sampled = entries.len().div_ceil(step);
            if p.details.is_empty() {
                p.details.push(Finding::check(true, path.display().to_string(), format!("{sampled} of {} entries recomputed cold and equal", entries.len())));
            }
            Ok(p)
        }
        CacheAction::Clear { target } => {
            let (ts, _) = resolve_target(target)?;
            let path = cache_path(&ts);
            let existed = path.exists();
            if existed {
                std::fs::remove_file(&path).map_err(|e| Failure { code: EXIT_ENGINE, message: e.to_string() })?;
            }
            let mut p = Partial::new(&ts, None);
            p.details.push(Finding::info(
                path.display().to_string(),
                if existed { "removed" } else { "nothing to remove" },
            ));
            Ok(p)
        }
    }
}

fn dispatch(cmd: &Command) -> Result<Partial, Failure> {
    match cmd {
        Command::Targets { action } => cmd_targets(action),
        Command::Cache { action } => cmd_cache(action),
        Command::Invariant { target, key } => {
            let e = engine_for(target)?;
            let key: CorrelatorKey = key.parse()?;
            let v = e.invariant(&key)?;
            let mut p = Partial::new(e.target(), None);
            p.details.push(Finding::info(key.to_string(), format_rational(&v)));
            Ok(p)
        }
        Command::Nd { target, max } => {
            let e = engine_for(target)?;
            if *e.backend() != PrimaryBackend::ProjPlane {
                return Err(Error::TargetUnsupported(format!("N_d is defined here for P2, not {}", e.target().name)).into());
            }
            let mut p = Partial::new(e.target(), None);
            let recursion = kontsevich_table(*max);
            for d in 1..=*max {
                let key: CorrelatorKey = format!("deg={d};ins={}", "(0,3)".repeat(3 * d as usize - 1)).parse()?;
                let v = e.invariant(&key)?;
                let agrees = recursion.get(d as usize - 1).map(|n| Rational::from_integer(n.clone())) == Some(v.clone());
                p.details.push(Finding::check(agrees, format!("N_{d}"), format_rational(&v)));
            }
            Ok(p)
        }
        Command::FreeEnergy { target, policy } => {
            let e = engine_for(target)?;
            let pol = policy.policy(e.target());
            let f0 = e.free_energy(&pol)?;
            let mut p = Partial::new(e.target(), Some(pol));
            for (m, c) in f0.iter() {
                p.details.push(Finding::info(m.to_string(), format_rational(c)));
            }
            Ok(p)
        }
        Command::Psi { target, policy, n } => {
            let e = engine_for(target)?;
            let pol = policy.policy(e.target());
            let r = psi(&e, *n, &pol)?;
            let mut p = Partial::new(e.target(), Some(pol));
            psi_findings(&r, &format!("psi n={n}"), &mut p.details);
            Ok(p)
        }
        Command::PsiTilde { target, policy, n } => {
            let e = engine_for(target)?;
            let pol = policy.policy(e.target());
            let r = psi_tilde_report(&e, *n, &pol)?;
            let mut p = Partial::new(e.target(), Some(pol));
            psi_findings(&r, &format!("psi-tilde n={n}"), &mut p.details);
            Ok(p)
        }
        Command::Commutator { target, m, n, level } => {
            let (ts, _) = resolve_target(target)?;
            let max_level = level.unwrap_or((m.max(&0) + n.max(&0) + 2) as u32);
            let r = commutator_residual(&ts, *m, *n, max_level)?;
            let pol = TruncationPolicy::new(0, max_level, NovikovDegree::zero(ts.novikov_rank));
            let mut p = Partial::new(&ts, Some(pol));
            let label = format!("[L_{m}, L_{n}] - ({}) L_{}", m - n, m + n);
            if r.is_empty() {
                p.details.push(Finding::check(true, &label, format!("vanishes on source levels <= {}", r.window)));
            }
            for (w, c) in &r.residual.0 {
                p.details.push(Finding::check(false, &label, "nonzero term").at(w.to_string(), format_rational(c), "0".into()));
            }
            Ok(p)
        }
        Command::CentralCondition { target } => {
            let (ts, _) = resolve_target(target)?;
            let c = ts.central_condition();
            let mut p = Partial::new(&ts, None);
            p.details.push(
                Finding::check(c.holds, "central condition", "1/4 sum b(1-b) against (1/24)((3-d)/2 chi - int c1 c_(d-1))")
                    .at("both sides".into(), format_rational(&c.lhs), format_rational(&c.rhs)),
            );
            let s = l0_scalar_check(&ts, 4)?;
            let scalar = s.scalar.as_ref().map(format_rational).unwrap_or_else(|| "undetermined".into());
            p.details.push(Finding::info("[L_-1, L_1] scalar", format!("[L_-1, L_1] = c L_0 with c = {scalar}")));
            p.details.push(Finding::check(s.operator_part_holds, "[L_-1, L_1] operator part", "equals c L_0 apart from the constant"));
            p.details.push(
                Finding::check(s.constant_holds, "[L_-1, L_1] constant", "bracket constant against c times the L_0 constant").at(
                    "constant".into(),
                    format_rational(&s.bracket_constant),
                    s.expected_constant.as_ref().map(format_rational).unwrap_or_default(),
                ),
            );
            Ok(p)
        }
        Command::Identities { target, policy, all, tags } => {
            let ids: Vec<IdentityId> = if *all {
                IdentityId::ALL.to_vec()
            } else if tags.is_empty() {
                return Err(usage("give --all or --tags"));
            } else {
                tags.iter().map(|t| t.parse()).collect::<Result<_, Error>>()?
            };
            let e = engine_for(target)?;
            let pol = policy.policy(e.target());
            let mut p = Partial::new(e.target(), Some(pol.clone()));
            for id in ids {
                let r = verify_identity(&e, id, &pol)?;
                let failures: Vec<_> = r.failures().collect();
                match failures.first() {
                    None => p.details.push(Finding::check(true, id.name(), format!("{} index tuples", r.tuples.len()))),
                    Some(t) => {
                        let f = t.failure.clone().expect("failed tuple has a failure");
                        p.details.push(
                            Finding::check(
                                false,
                                id.name(),
                                format!("{} of {} tuples fail, first at {}", failures.len(), r.tuples.len(), t.labels.join(" ")),
                            )
                            .at(f.location, f.lhs, f.rhs),
                        );
                    }
                }
            }
            Ok(p)
        }
    }
}

fn command_name(cmd: &Command) -> String {
    match cmd {
        Command::Targets { action } => match action {
            TargetsAction::List => "targets list",
            TargetsAction::Show { .. } => "targets show",
            TargetsAction::Validate { .. } => "targets validate",
        }
        .into(),
        Command::Invariant { .. } => "invariant".into(),
        Command::Nd { .. } => "nd".into(),
        Command::FreeEnergy { .. } => "free-energy".into(),
        Command::Psi { .. } => "psi".into(),
        Command::PsiTilde { .. } => "psi-tilde".into(),
        Command::Commutator { .. } => "commutator".into(),
        Command::CentralCondition { .. } => "central-condition".into(),
        Command::Identities { .. } => "identities".into(),
        Command::Cache { action } => match action {
            CacheAction::Warm { .. } => "cache warm",
            CacheAction::Verify { .. } => "cache verify",
            CacheAction::Clear { .. } => "cache clear",
        }
        .into(),
    }
}

/// Parses `argv` (including the program name), runs one subcommand, and
/// returns the exit code, the report, and its rendering in the chosen format.
pub fn run_rendered<I, T>(argv: I) -> (i32, RunReport, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let start = Instant::now();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let report = RunReport {
                command: "usage".into(),
                target: String::new(),
                policy: None,
                outcome: if code == EXIT_PASS { Outcome::Pass } else { Outcome::Error },
                details: vec![Finding::info("usage", e.render().to_string())],
                wall_time_ms: start.elapsed().as_millis() as u64,
            };
            let text = e.render().to_string();
            return (code, report, text);
        }
    };
    let result = match cli.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(Failure { code: EXIT_ENGINE, message: e.to_string() }),
        },
        None => dispatch(&cli.command),
    };
    let (code, report) = match result {
        Ok(p) => {
            let failed = p.details.iter().any(|f| f.status == Status::Fail);
            let report = RunReport {
                command: command_name(&cli.command),
                target: p.target,
                policy: p.policy,
                outcome: if failed { Outcome::Fail } else { Outcome::Pass },
                details: p.details,
                wall_time_ms: 0,
            };
            (if failed { EXIT_FAIL } else { EXIT_PASS }, report)
        }
        Err(f) => (
            f.code,
            RunReport {
                command: command_name(&cli.command),
                target: String::new(),
                policy: None,
                outcome: Outcome::Error,
                details: vec![Finding::info("error", f.message)],
                wall_time_ms: 0,
            },
        ),
    };
    let report = RunReport { wall_time_ms: start.elapsed().as_millis() as u64, ..report };
    let text = render(&report, cli.format);
    (code, report, text)
}

/// Like [`run_rendered`] without the rendering.
pub fn run<I, T>(argv: I) -> (i32, RunReport)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let (code, report, _) = run_rendered(argv);
    (code, report)
}

pub fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Structured => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "command: {}", report.command);
            if !report.target.is_empty() {
                let _ = writeln!(s, "target: {}", report.target);
            }
            if let Some(p) = &report.policy {
                let _ = writeln!(s, "policy: {p}");
            }
            for f in &report.details {
                let tag = match f.status {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::Info => "    ",
                };
                let _ = write!(s, "[{tag}] {}: {}", f.item, f.message);
                if let (Some(loc), Some(l), Some(r)) = (&f.location, &f.lhs, &f.rhs) {
                    let _ = write!(s, " at {loc}: {l} vs {r}");
                }
                s.push('\n');
            }
            let outcome = match report.outcome {
                Outcome::Pass => "pass",
                Outcome::Fail => "fail",
                Outcome::Error => "error",
            };
            let _ = writeln!(s, "outcome: {outcome}");
            let _ = writeln!(s, "wall_time_ms: {}", report.wall_time_ms);
            s
        }
    }
}

/// Parses a structured report back.
pub fn parse_report(text: &str) -> Result<RunReport, serde_json::Error> {
    serde_json::from_str(text)
}

/// Location of the cache file for `target` under the current environment.
pub fn cache_file_for(target: &str) -> Option<PathBuf> {
    let args = TargetArgs { target: target.to_string(), table: None };
    resolve_target(&args).ok().map(|(ts, _)| cache_path(&ts))
}
