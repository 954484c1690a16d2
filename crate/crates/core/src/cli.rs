//! The `delegate-rla` command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::audit::{init_audit, next_manifest, run_audit_round, AuditState, AuditStatus, RoundReport};
use crate::error::{Error, Result};
use crate::model::{load_cvrs, load_election, ElectionProfile};
use crate::risk::{read_manifest, write_manifest, Asn, RiskParams};
use crate::spec::{estimate_audit_asn, generate, load_audit_spec, save_audit_spec, AuditLevel, AuditSpec, Generated};
use crate::tabulation::{tabulate, OutcomeReport};
use crate::viability::SpecStatus;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_UNSUPPORTED: u8 = 3;
pub const EXIT_FULL_COUNT: u8 = 4;
pub const EXIT_ESCALATE: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "delegate-rla", version, about = "Risk-limiting audits for delegate-allocation primaries")]
pub struct Cli {
    /// Output format for stdout.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate viability and the delegate allocation.
    Tabulate {
        election: PathBuf,
        /// Also write the outcome JSON here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate the audit specification for one level.
    Generate {
        election: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: u8,
        #[command(flatten)]
        risk: RiskArgs,
        /// Write the specification JSON here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the branch-and-bound proof log.
        #[arg(long)]
        proof_log: bool,
    },
    /// Estimate sample sizes for levels 1, 2 and 3.
    Estimate {
        /// Election files; each becomes one row of the summary table.
        #[arg(required_unless_present = "spec")]
        elections: Vec<PathBuf>,
        /// Re-estimate an existing specification instead.
        #[arg(long, conflicts_with = "elections")]
        spec: Option<PathBuf>,
        #[command(flatten)]
        risk: RiskArgs,
    },
    /// Run a ballot-level comparison audit.
    Audit {
        #[command(subcommand)]
        phase: AuditPhase,
    },
}

#[derive(Args, Debug, Clone)]
pub struct RiskArgs {
    /// Risk limit.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Error inflation factor.
    #[arg(long, default_value_t = 1.1)]
    pub gamma: f64,
    /// Simulated per-draw overstatement probability.
    #[arg(long, default_value_t = 0.002)]
    pub error_rate: f64,
    /// Simulated audits per assertion.
    #[arg(long, default_value_t = 20)]
    pub trials: u32,
    /// Seed for all randomness; generated and reported when absent.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum AuditPhase {
    /// Create the state file and the first-round manifest.
    Init {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        cvrs: PathBuf,
        /// Manifest CSV to write.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Sampling seed; defaults to the specification's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Record one round of manual interpretations.
    Round {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        cvrs: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        interpretations: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// On escalation, write the next round's manifest here.
        #[arg(long)]
        next_manifest: Option<PathBuf>,
    },
}

impl RiskArgs {
    fn params(&self) -> Result<RiskParams> {
        let seed = self.seed.unwrap_or_else(|| {
            let s = rand::random::<u64>();
            eprintln!("no --seed given; using generated seed {s}");
            s
        });
        let p =
            RiskParams { alpha: self.alpha, gamma: self.gamma, error_rate: self.error_rate, trials: self.trials, seed };
        p.validate()?;
        Ok(p)
    }
}

pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::UnsupportedOutcome(_) => EXIT_UNSUPPORTED,
        Error::FullCount(_) => EXIT_FULL_COUNT,
        _ => EXIT_INPUT,
    }
}

/// Parses the process arguments, runs the command and maps the result to an exit code.
pub fn run() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    match execute(&cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let _ = out.flush();
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Runs `cli`, writing its report to `out`; returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    let fmt = cli.format;
    match &cli.command {
        Command::Tabulate { election, output } => cmd_tabulate(election, output.as_deref(), fmt, out),
        Command::Generate { election, level, risk, output, proof_log } => {
            cmd_generate(election, AuditLevel::new(*level)?, &risk.params()?, output.as_deref(), *proof_log, fmt, out)
        }
        Command::Estimate { elections, spec, risk } => match spec {
            Some(path) => cmd_estimate_spec(path, &risk.params()?, fmt, out),
            None => cmd_estimate(elections, &risk.params()?, fmt, out),
        },
        Command::Audit { phase: AuditPhase::Init { spec, cvrs, manifest, state, seed } } => {
            cmd_audit_init(spec, cvrs, manifest, state, *seed, fmt, out)
        }
        Command::Audit { phase: AuditPhase::Round { spec, cvrs, manifest, interpretations, state, next_manifest } } => {
            cmd_audit_round(spec, cvrs, manifest, interpretations, state, next_manifest.as_deref(), fmt, out)
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(io_err)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_tabulate(election: &Path, output: Option<&Path>, fmt: Format, out: &mut dyn Write) -> Result<u8> {
    let profile = load_election(election)?;
    let outcome = tabulate(&profile)?;
    let report = OutcomeReport::new(&profile, &outcome);
    if let Some(path) = output {
        write_file(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    match fmt {
        Format::Json => print_json(out, &report)?,
        Format::Text => write_outcome_text(&report, out).map_err(io_err)?,
    }
    Ok(EXIT_OK)
}

fn write_outcome_text(r: &OutcomeReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:?} contest, threshold {}, {} delegates, {} ballots ({} valid)",
        r.style, r.threshold, r.delegates, r.total_ballots, r.valid_ballots
    )?;
    for (i, round) in r.rounds.iter().enumerate() {
        write!(out, "round {}:", i + 1)?;
        for p in &round.piles {
            write!(out, "  {} {} ({:.3}%)", p.candidate, p.ballots, 100.0 * p.proportion)?;
        }
        if round.exhausted > 0 {
            write!(out, "  exhausted {}", round.exhausted)?;
        }
        match &round.eliminated {
            Some(c) => writeln!(out, "  -> eliminate {c}")?,
            None => writeln!(out)?,
        }
    }
    writeln!(out, "viable: {}", r.viable.join(", "))?;
    writeln!(out, "{:<12} {:>10} {:>9} {:>8} {:>9}", "candidate", "tally", "share", "quota", "delegates")?;
    for a in &r.allocation {
        writeln!(
            out,
            "{:<12} {:>10} {:>8.3}% {:>8.3} {:>9}",
            a.candidate,
            a.tally,
            100.0 * a.proportion,
            a.quota_approx,
            a.delegates
        )?;
    }
    if r.elimination_tie {
        writeln!(out, "warning: an elimination tie was broken by roster order")?;
    }
    if r.remainder_tie {
        writeln!(out, "warning: a remainder tie decided the last delegate")?;
    }
    Ok(())
}

fn write_spec_text(g: &Generated, out: &mut dyn Write) -> std::io::Result<()> {
    let spec = &g.spec;
    writeln!(out, "level {} audit, {} assertions", spec.level.get(), spec.assertions.len())?;
    writeln!(out, "{:<9} {:>10} {:>8}  assertion", "role", "margin", "eae")?;
    for a in &spec.assertions {
        let role = match a.role {
            crate::spec::AssertionRole::Viability => "viability",
            crate::spec::AssertionRole::Delegate => "delegate",
        };
        writeln!(
            out,
            "{:<9} {:>10.3} {:>8}  {}",
            role,
            a.margin_f64(),
            a.eae.to_string(),
            a.assertion.describe(&spec.roster)
        )?;
    }
    writeln!(out, "overall ASN: {}", spec.overall_asn)?;
    if spec.status == SpecStatus::RequiresFullCount {
        writeln!(out, "status: full recount required")?;
    }
    writeln!(out, "generated in {:.3}s", g.elapsed.as_secs_f64())
}

pub fn cmd_generate(
    election: &Path,
    level: AuditLevel,
    params: &RiskParams,
    output: Option<&Path>,
    proof_log: bool,
    fmt: Format,
    out: &mut dyn Write,
) -> Result<u8> {
    let profile = load_election(election)?;
    let g = generate(&profile, level, *params)?;
    if let Some(path) = output {
        save_audit_spec(&g.spec, path)?;
    }
    match fmt {
        Format::Json => write!(out, "{}", g.spec.to_json()?).map_err(io_err)?,
        Format::Text => {
            write_spec_text(&g, out).map_err(io_err)?;
            if proof_log {
                for line in &g.proof_log {
                    writeln!(out, "  {line}").map_err(io_err)?;
                }
            }
        }
    }
    Ok(if g.spec.status == SpecStatus::RequiresFullCount { EXIT_FULL_COUNT } else { EXIT_OK })
}

#[derive(Serialize)]
struct LevelEstimate {
    level: u8,
    status: SpecStatus,
    overall_asn: Asn,
    seconds: f64,
    assertions: Vec<AssertionEstimate>,
}

#[derive(Serialize)]
struct AssertionEstimate {
    assertion: String,
    margin: f64,
    asn: Asn,
}

#[derive(Serialize)]
struct ElectionEstimate {
    election: String,
    levels: Vec<LevelEstimate>,
}

fn level_estimate(profile: &ElectionProfile, level: AuditLevel, params: &RiskParams) -> Result<LevelEstimate> {
    let g = generate(profile, level, *params)?;
    Ok(LevelEstimate {
        level: level.get(),
        status: g.spec.status,
        overall_asn: g.spec.overall_asn,
        seconds: g.elapsed.as_secs_f64(),
        assertions: g
            .spec
            .assertions
            .iter()
            .map(|a| AssertionEstimate {
                assertion: a.assertion.describe(&g.spec.roster).to_string(),
                margin: a.margin_f64(),
                asn: a.eae,
            })
            .collect(),
    })
}

pub fn cmd_estimate(elections: &[PathBuf], params: &RiskParams, fmt: Format, out: &mut dyn Write) -> Result<u8> {
    let mut rows = Vec::with_capacity(elections.len());
    for path in elections {
        let profile = load_election(path)?;
        let levels = [AuditLevel::VIABILITY, AuditLevel::ALMOST_ALL_DELEGATES, AuditLevel::ALL_DELEGATES]
            .into_iter()
            .map(|l| level_estimate(&profile, l, params))
            .collect::<Result<Vec<_>>>()?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        rows.push(ElectionEstimate { election: name, levels });
    }
    match fmt {
        Format::Json => print_json(out, &json!({ "params": params, "elections": rows }))?,
        Format::Text => write_estimate_text(&rows, out).map_err(io_err)?,
    }
    Ok(EXIT_OK)
}

fn write_estimate_text(rows: &[ElectionEstimate], out: &mut dyn Write) -> std::io::Result<()> {
    for row in rows {
        writeln!(out, "{}", row.election)?;
        for l in &row.levels {
            writeln!(out, "  level {}: overall ASN {} ({:.3}s)", l.level, l.overall_asn, l.seconds)?;
            for a in &l.assertions {
                writeln!(out, "    {:>8}  {:>8.3}  {}", a.asn.to_string(), a.margin, a.assertion)?;
            }
        }
    }
    writeln!(out)?;
    writeln!(
        out,
        "{:<16} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "election", "L1 ASN", "L1 time", "L2 ASN", "L2 time", "L3 ASN", "L3 time"
    )?;
    for row in rows {
        write!(out, "{:<16}", row.election)?;
        for l in &row.levels {
            write!(out, " {:>9} {:>8.3}s", l.overall_asn.to_string(), l.seconds)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn cmd_estimate_spec(path: &Path, params: &RiskParams, fmt: Format, out: &mut dyn Write) -> Result<u8> {
    let spec = load_audit_spec(path)?;
    let start = Instant::now();
    let assertions: Vec<AssertionEstimate> = spec
        .assertions
        .iter()
        .map(|a| AssertionEstimate {
            assertion: a.assertion.describe(&spec.roster).to_string(),
            margin: a.margin_f64(),
            asn: crate::risk::estimate_asn(&a.assertion, &a.margin, spec.total_ballots, params),
        })
        .collect();
    let est = LevelEstimate {
        level: spec.level.get(),
        status: spec.status,
        overall_asn: estimate_audit_asn(&spec, params),
        seconds: start.elapsed().as_secs_f64(),
        assertions,
    };
    match fmt {
        Format::Json => print_json(out, &est)?,
        Format::Text => {
            let row = ElectionEstimate {
                election: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                levels: vec![est],
            };
            write_estimate_text(std::slice::from_ref(&row), out).map_err(io_err)?;
        }
    }
    Ok(EXIT_OK)
}

fn load_spec_and_cvrs(spec: &Path, cvrs: &Path) -> Result<(AuditSpec, crate::model::CvrIndex)> {
    let spec = load_audit_spec(spec)?;
    let cvrs = load_cvrs(cvrs, &spec.roster)?;
    Ok((spec, cvrs))
}

pub fn cmd_audit_init(
    spec: &Path,
    cvrs: &Path,
    manifest: &Path,
    state_path: &Path,
    seed: Option<u64>,
    fmt: Format,
    out: &mut dyn Write,
) -> Result<u8> {
    let (spec, cvrs) = load_spec_and_cvrs(spec, cvrs)?;
    let seed = seed.unwrap_or_else(|| {
        eprintln!("no --seed given; sampling with the specification's seed {}", spec.risk.seed);
        spec.risk.seed
    });
    let (state, draws) = init_audit(&spec, &cvrs, seed)?;
    write_manifest(&draws, manifest)?;
    state.save(state_path)?;
    match fmt {
        Format::Json => print_json(out, &json!({ "seed": seed, "draws": draws.len(), "manifest": manifest }))?,
        Format::Text => {
            writeln!(out, "wrote {} draws to {} (seed {seed})", draws.len(), manifest.display()).map_err(io_err)?
        }
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_audit_round(
    spec: &Path,
    cvrs: &Path,
    manifest: &Path,
    interpretations: &Path,
    state_path: &Path,
    next_manifest_path: Option<&Path>,
    fmt: Format,
    out: &mut dyn Write,
) -> Result<u8> {
    let (spec, cvrs) = load_spec_and_cvrs(spec, cvrs)?;
    let interpretations = load_cvrs(interpretations, &spec.roster)?;
    let draws = read_manifest(manifest)?;
    let mut state = AuditState::load(state_path)?;
    let report = run_audit_round(&spec, &cvrs, &draws, &interpretations, &mut state)?;
    state.save(state_path)?;
    if let (Some(path), Some(n)) = (next_manifest_path, report.suggested_additional) {
        write_manifest(&next_manifest(&state, &cvrs, n), path)?;
    }
    match fmt {
        Format::Json => print_json(out, &report)?,
        Format::Text => write_round_text(&report, out).map_err(io_err)?,
    }
    Ok(match report.status {
        AuditStatus::Confirmed => EXIT_OK,
        AuditStatus::Escalate => EXIT_ESCALATE,
        AuditStatus::FullCount => EXIT_FULL_COUNT,
    })
}

fn write_round_text(r: &RoundReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "round {}: {} draws ({} total)", r.round, r.round_draws, r.total_draws)?;
    for a in &r.assertions {
        let d = &a.discrepancies;
        writeln!(
            out,
            "  p = {:<10.6} margin {:>7.3}  o1 {} o2 {} u {}  {}",
            a.p_value, a.margin, d.one_vote, d.two_vote, d.understatement, a.assertion
        )?;
    }
    match (r.status, r.suggested_additional) {
        (AuditStatus::Confirmed, _) => writeln!(out, "status: confirmed"),
        (AuditStatus::Escalate, Some(n)) => writeln!(out, "status: escalate; draw about {n} more ballots"),
        (AuditStatus::Escalate, None) => writeln!(out, "status: escalate"),
        (AuditStatus::FullCount, _) => writeln!(out, "status: full manual count required"),
    }
}
