//! Command-line front end: feasibility checks, synthesis, spectrum
//! analysis, verification, fuzzing, and the five-DOF bound.
//!
//! All numbers in JSON inputs and outputs are decimal strings so that
//! high-precision values survive round trips exactly; `--float64`
//! downgrades output for human reading.

use std::fs;
use std::io::{Read, Write};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use chainspec_core::chain::ChainJson;
use chainspec_core::decimal::{parse_decimal, to_exact_decimal, to_f64_string};
use chainspec_core::error::Error as CoreError;
use chainspec_core::forward::SpectrumReportJson;
use chainspec_core::plan::{build_plan, feasibility_violations, SpectrumJson};
use chainspec_core::synthesis::{synthesize, trace_csv, Mode, SynthesisResultJson};
use chainspec_core::verify::{five_dof_bound, necessity_fuzz, verify, VerificationReportJson};
use chainspec_core::PrecisionConfig;

#[derive(Parser)]
#[command(name = "chainspec", version, about = "Spectrum tools for mass-spring-inerter chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output path, or '-' for stdout.
    #[arg(short, long, global = true, default_value = "-")]
    output: String,

    /// Working precision in mantissa bits.
    #[arg(long, global = true, default_value_t = 256)]
    bits: u32,

    /// Relative tolerance for grouping eigenvalues into multiplicities.
    #[arg(long, global = true, default_value = "1e-12")]
    cluster_tol: String,

    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Print numbers as shortest f64 instead of exact decimals.
    #[arg(long, global = true, default_value_t = false)]
    float64: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a target spectrum against the multiplicity gate.
    Feasible {
        /// Spectrum JSON path, or '-' for stdin.
        input: String,
    },
    /// Synthesize a chain realizing a target spectrum.
    Synth {
        input: String,
        /// Use the published sufficiency constants verbatim (small
        /// chains only) or gap-scaled perturbations with verification.
        #[arg(long, value_enum, default_value_t = ModeArg::Adaptive)]
        mode: ModeArg,
        /// Also write the step trace as CSV.
        #[arg(long)]
        trace_csv: Option<String>,
    },
    /// Compute the spectrum of a chain.
    Analyze {
        input: String,
    },
    /// Certify a chain against the spectrum it is claimed to realize.
    Verify {
        /// JSON object {"chain": {...}, "target": {...}}.
        input: String,
    },
    /// Random-chain fuzzing of the multiplicity gate.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
    /// Evaluate the five-DOF mass-ratio bound.
    Bound5 {
        /// JSON object {"chain": {...}, "lambdas": [l1, l2, l3]}.
        input: String,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    Faithful,
    Adaptive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Faithful => Mode::Faithful,
            ModeArg::Adaptive => Mode::Adaptive,
        }
    }
}

#[derive(Deserialize)]
struct VerifyInput {
    chain: ChainJson,
    target: SpectrumJson,
}

#[derive(Deserialize)]
struct Bound5Input {
    chain: ChainJson,
    lambdas: Vec<String>,
}

#[derive(Serialize)]
struct FeasibleOutput {
    feasible: bool,
    violations: Vec<FeasibleViolation>,
}

#[derive(Serialize)]
struct FeasibleViolation {
    index: usize,
    mult: usize,
    constraint: String,
}

#[derive(Serialize)]
struct Bound5Output {
    lhs: String,
    rhs: String,
    holds: bool,
}

fn read_input(path: &str) -> anyhow::Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading stdin")?;
        Ok(buf)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn write_output(path: &str, data: &str) -> anyhow::Result<()> {
    if path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(data.as_bytes())?;
        out.write_all(b"\n")?;
        Ok(())
    } else {
        fs::write(path, format!("{data}\n")).with_context(|| format!("writing {path}"))
    }
}

/// Exit codes: 0 success, 1 malformed input, 2 infeasible or failed
/// verification, 3 precision exhausted.
fn exit_for(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        match core {
            CoreError::InfeasibleSpectrum { .. } => 2,
            CoreError::PrecisionExhausted { .. } => 3,
            _ => 1,
        }
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_for(&err))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let bits = cli.common.bits;
    let cfg = PrecisionConfig::new(bits, bits.saturating_sub(16), 2, 4)
        .map_err(|e| anyhow!(e.to_string()))?;
    let cluster_tol =
        parse_decimal(&cli.common.cluster_tol, 64).context("parsing --cluster-tol")?;
    if cluster_tol <= 0u32 {
        return Err(anyhow!("--cluster-tol must be positive"));
    }

    match cli.command {
        Command::Feasible { input } => {
            let raw = read_input(&input)?;
            let parsed: SpectrumJson = serde_json::from_str(&raw).context("parsing spectrum")?;
            let (spec, _) = parsed.into_parts(bits)?;
            let violations = feasibility_violations(&spec);
            let out = FeasibleOutput {
                feasible: violations.is_empty(),
                violations: violations
                    .iter()
                    .map(|&(index, mult)| FeasibleViolation {
                        index,
                        mult,
                        constraint: format!("t_{index} <= {index}"),
                    })
                    .collect(),
            };
            write_output(&cli.common.output, &serde_json::to_string(&out)?)?;
            Ok(if out.feasible { 0 } else { 2 })
        }
        Command::Synth {
            input,
            mode,
            trace_csv: csv_path,
        } => {
            let raw = read_input(&input)?;
            let parsed: SpectrumJson = serde_json::from_str(&raw).context("parsing spectrum")?;
            let (spec, pinned) = parsed.into_parts(bits)?;
            let plan = build_plan(&spec, pinned)?;
            let result = synthesize(&spec, &plan, mode.into(), &cfg)?;
            if let Some(path) = csv_path {
                fs::write(&path, trace_csv(&result)).with_context(|| format!("writing {path}"))?;
            }
            let json = SynthesisResultJson::from_result(&result, cli.common.float64);
            write_output(&cli.common.output, &serde_json::to_string(&json)?)?;
            Ok(0)
        }
        Command::Analyze { input } => {
            let raw = read_input(&input)?;
            let parsed: ChainJson = serde_json::from_str(&raw).context("parsing chain")?;
            let chain = parsed.into_chain(bits)?;
            let report = chainspec_core::spectrum(&chain, &cfg, &cluster_tol)?;
            let json = SpectrumReportJson::from_report(&report, cli.common.float64);
            write_output(&cli.common.output, &serde_json::to_string(&json)?)?;
            Ok(0)
        }
        Command::Verify { input } => {
            let raw = read_input(&input)?;
            let parsed: VerifyInput = serde_json::from_str(&raw).context("parsing input")?;
            let chain = parsed.chain.into_chain(bits)?;
            let (spec, pinned) = parsed.target.into_parts(bits)?;
            let plan = build_plan(&spec, pinned)?;
            let report = verify(&chain, &spec, &plan, &cfg)?;
            let json = VerificationReportJson::from_report(&report, cli.common.float64);
            write_output(&cli.common.output, &serde_json::to_string(&json)?)?;
            Ok(if report.all_green() { 0 } else { 2 })
        }
        Command::Fuzz { trials, n_max } => {
            let summary = necessity_fuzz(trials, n_max, cli.common.seed, &cfg)?;
            write_output(&cli.common.output, &serde_json::to_string(&summary)?)?;
            Ok(if summary.violations == 0 { 0 } else { 2 })
        }
        Command::Bound5 { input } => {
            let raw = read_input(&input)?;
            let parsed: Bound5Input = serde_json::from_str(&raw).context("parsing input")?;
            let chain = parsed.chain.into_chain(bits)?;
            let lambdas = parsed
                .lambdas
                .iter()
                .map(|s| parse_decimal(s, bits))
                .collect::<Result<Vec<_>, _>>()?;
            let (lhs, rhs, holds) = five_dof_bound(&chain, &lambdas, bits)?;
            let out = Bound5Output {
                lhs: if cli.common.float64 {
                    to_f64_string(&lhs)
                } else {
                    to_exact_decimal(&lhs)
                },
                rhs: if cli.common.float64 {
                    to_f64_string(&rhs)
                } else {
                    to_exact_decimal(&rhs)
                },
                holds,
            };
            write_output(&cli.common.output, &serde_json::to_string(&out)?)?;
            Ok(0)
        }
    }
}
