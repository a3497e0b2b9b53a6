//! Command-line front end for the `qsignal` binary.
//!
//! Exit status: 0 on success, 2 when an input fails validation (a diagnostic JSON document is
//! printed), 1 when a solver or numerical routine fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::choi::{apply_superchannel, validate_comb, ChannelDescriptor, CombPairs, SuperchannelDescriptor, CHANNEL_TOL};
use crate::error::{Error, Result};
use crate::jc::{backflow_scan, EnvMode, JcConfig};
use crate::phase_cov::{divisibility_thresholds, scan, uniform_grid, RateModel, ThresholdOptions, QUAD_TOL};
use crate::process::{
    cause_mixture, random_process_matrix, validate_process_matrix, CausalClass, MixtureKind, ProcessMatrix,
};
use crate::random::{random_bistochastic_superchannel, random_channel, seeded};
use crate::sdp::SdpOptions;
use crate::signalling::{
    causal_loop_inequality, exclusion_power_with, extract_exclusion_strategy, extract_superdense_strategy,
    signalling_power_with,
};
use crate::tensor::{LabeledOperator, OperatorJson, Wire};

#[derive(Debug, Parser)]
#[command(name = "qsignal", version, about = "Signalling and exclusion power of quantum channels and processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Numerical tolerance override (solver, validation and quadrature).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel scans.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the report or CSV here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Choi operator JSON.
    #[arg(long, visible_alias = "op")]
    pub channel: PathBuf,
    /// Input wires (comma separated); defaults to the first wire.
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "kappa")]
    pub model: String,
    /// Model parameter as `key=value`; repeatable.
    #[arg(long = "param")]
    pub params: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ClassArg {
    General,
    AThenB,
    BThenA,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Coherent,
    Incoherent,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Signalling power S of a channel.
    Signalling(ChannelArgs),
    /// Exclusion power P of a channel.
    Exclusion(ChannelArgs),
    /// Optimal superdense-coding (or exclusion) strategy of a square channel.
    Strategy {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        exclusion: bool,
    },
    /// Data-processing check S(T⋆N) ≤ S(N), for given operators or random bistochastic samples.
    DpiCheck {
        /// Superchannel JSON: `{"op": <operator>, "outer_in": [..], "inner_in": [..], "inner_out": [..], "outer_out": [..]}`.
        #[arg(long)]
        op: Option<PathBuf>,
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Validate a comb against its ordered (in, out) pairs.
    CombValidate {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Validate a bipartite process matrix on A_i, A_o, B_i, B_o.
    PmValidate {
        #[arg(long)]
        op: PathBuf,
        #[arg(long, value_enum, default_value = "general")]
        class: ClassArg,
    },
    /// S along the common-cause/direct-cause mixture curve, as CSV `alpha,s_bits`.
    PmCurve {
        #[arg(long, value_enum, default_value = "coherent")]
        kind: KindArg,
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
    /// Causal-loop inequality for a process matrix, or for random valid processes.
    CausalLoop {
        #[arg(long)]
        op: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Phase-covariant scan as CSV `t,G,H,Gamma_z,s_bits,p_value,backflow_lhs`.
    PcScan {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },
    /// κ thresholds of the CP, P-divisibility, trace-distance and exclusion-power criteria.
    PcThresholds {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 20.0)]
        tmax: f64,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long, default_value_t = 3.0)]
        kappa_max: f64,
    },
    /// Jaynes–Cummings quantum-memory witness on an (s, t) grid, as CSV `s,t,witness`.
    JcScan {
        /// JcConfig JSON; otherwise built from `--param g=..,n_max=..,fock=..`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        tmax: f64,
        #[arg(long, default_value_t = 40)]
        grid: usize,
        /// Replace the cavity by a Fock-basis measure-and-prepare memory.
        #[arg(long)]
        intercept: bool,
    },
}

/// Superchannel file layout used by `dpi-check`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SuperchannelFile {
    pub op: OperatorJson,
    pub outer_in: Vec<String>,
    pub inner_in: Vec<String>,
    pub inner_out: Vec<String>,
    pub outer_out: Vec<String>,
}

/// Outcome of a subcommand: what to print and with which status.
#[derive(Debug)]
pub enum Outcome {
    Json(Value),
    Csv(String),
    /// Validation failed; the value is the diagnostic.
    Invalid(Value),
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. }
        | Error::NumericalTrouble(_)
        | Error::ProblemTooLarge { .. }
        | Error::QuadratureFailure { .. }
        | Error::GridTooCoarse(_)
        | Error::TruncationLeak { .. } => 1,
        _ => 2,
    }
}

fn error_kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

pub fn diagnostic(e: &Error) -> Value {
    json!({
        "status": if exit_code(e) == 2 { "validation_failed" } else { "solver_failed" },
        "kind": error_kind(e),
        "error": e.to_string(),
    })
}

/// Formats `x` with `digits` significant digits.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{:.*e}", digits.saturating_sub(1), x);
    }
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn csv_text(header: &[&str], rows: &[Vec<f64>], digits: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|x| sig(*x, digits)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_params(params: &[String]) -> Result<Vec<(String, f64)>> {
    params
        .iter()
        .flat_map(|p| p.split(','))
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("parameter `{p}` is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("parameter `{p}` has a non-numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn load_channel(args: &ChannelArgs, tol: f64) -> Result<ChannelDescriptor> {
    let op = LabeledOperator::read_json(&args.channel)?;
    let names: Vec<String> = op.names().iter().map(|s| s.to_string()).collect();
    let inputs: Vec<String> = if args.inputs.is_empty() {
        names.iter().take(1).cloned().collect()
    } else {
        args.inputs.clone()
    };
    let outputs: Vec<&str> = names
        .iter()
        .filter(|n| !inputs.contains(n))
        .map(String::as_str)
        .collect();
    let inputs: Vec<&str> = inputs.iter().map(String::as_str).collect();
    ChannelDescriptor::with_tolerance(op, &inputs, &outputs, tol)
}

fn sdp_options(tol: Option<f64>) -> SdpOptions {
    let mut o = SdpOptions::default();
    if let Some(t) = tol {
        o.feas_tol = t;
        o.gap_tol = t;
    }
    o
}

fn with_tolerances(report: impl Serialize, tolerances: Value) -> Result<Value> {
    let mut v = serde_json::to_value(report)?;
    if let Value::Object(map) = &mut v {
        map.insert("tolerances".into(), tolerances);
    }
    Ok(v)
}

fn sdp_tolerances(opts: &SdpOptions, channel_tol: f64) -> Value {
    json!({ "feas_tol": opts.feas_tol, "gap_tol": opts.gap_tol, "channel_tol": channel_tol })
}

/// Runs one subcommand and returns what it produced; errors carry their exit code.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let tol = cli.common.tol;
    let channel_tol = tol.unwrap_or(CHANNEL_TOL);
    let opts = sdp_options(tol);
    match &cli.command {
        Command::Signalling(args) => {
            let n = load_channel(args, channel_tol)?;
            let r = signalling_power_with(&n, &opts)?;
            Ok(Outcome::Json(with_tolerances(r, sdp_tolerances(&opts, channel_tol))?))
        }
        Command::Exclusion(args) => {
            let n = load_channel(args, channel_tol)?;
            let r = exclusion_power_with(&n, &opts)?;
            Ok(Outcome::Json(with_tolerances(r, sdp_tolerances(&opts, channel_tol))?))
        }
        Command::Strategy { channel, exclusion } => {
            let n = load_channel(channel, channel_tol)?;
            let s = if *exclusion {
                extract_exclusion_strategy(&n)?
            } else {
                extract_superdense_strategy(&n)?
            };
            let mut v = with_tolerances(&s, sdp_tolerances(&opts, channel_tol))?;
            if let Value::Object(map) = &mut v {
                map.insert("exclusion_value".into(), json!(s.exclusion_value()));
            }
            Ok(Outcome::Json(v))
        }
        Command::DpiCheck { op, channel, trials } => dpi_check(op.as_deref(), channel.as_deref(), *trials, cli, &opts),
        Command::CombValidate { op, pairs } => {
            let op = LabeledOperator::read_json(op)?;
            let pairs: CombPairs = serde_json::from_str(&fs::read_to_string(pairs)?)?;
            let r = validate_comb(&op, &pairs.pairs, channel_tol)?;
            let v = serde_json::to_value(&r)?;
            Ok(if r.valid { Outcome::Json(v) } else { Outcome::Invalid(v) })
        }
        Command::PmValidate { op, class } => {
            let op = LabeledOperator::read_json(op)?;
            let class = match class {
                ClassArg::General => CausalClass::General,
                ClassArg::AThenB => CausalClass::AThenB,
                ClassArg::BThenA => CausalClass::BThenA,
            };
            let r = validate_process_matrix(&op, class, channel_tol)?;
            let v = serde_json::to_value(&r)?;
            Ok(if r.valid { Outcome::Json(v) } else { Outcome::Invalid(v) })
        }
        Command::PmCurve { kind, grid } => {
            let kind = match kind {
                KindArg::Coherent => MixtureKind::Coherent,
                KindArg::Incoherent => MixtureKind::Incoherent,
            };
            let alphas = uniform_grid(1.0, (*grid).max(2));
            let curve = crate::process::process_signalling_curve(kind, &alphas)?;
            let rows: Vec<Vec<f64>> = curve.into_iter().map(|(a, s)| vec![a, s]).collect();
            Ok(Outcome::Csv(csv_text(&["alpha", "s_bits"], &rows, 6)?))
        }
        Command::CausalLoop { op, trials } => causal_loop(op.as_deref(), *trials, cli.common.seed),
        Command::PcScan { model, tmax, grid } => {
            let m = RateModel::from_name(&model.model, &parse_params(&model.params)?)?;
            let rows = scan(&m, &uniform_grid(*tmax, (*grid).max(2)), tol.unwrap_or(QUAD_TOL))?;
            let rows: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| vec![r.t, r.g, r.h, r.gamma_z, r.s_bits, r.p_value, r.backflow_lhs])
                .collect();
            Ok(Outcome::Csv(csv_text(
                &["t", "G", "H", "Gamma_z", "s_bits", "p_value", "backflow_lhs"],
                &rows,
                9,
            )?))
        }
        Command::PcThresholds {
            model,
            tmax,
            grid,
            kappa_max,
        } => {
            if model.model != "kappa" {
                return Err(Error::InvalidArgument("thresholds are defined for the kappa model".into()));
            }
            let o = ThresholdOptions {
                t_max: *tmax,
                grid: *grid,
                kappa_hi: *kappa_max,
                quad_tol: tol.unwrap_or(QUAD_TOL),
                ..ThresholdOptions::default()
            };
            Ok(Outcome::Json(serde_json::to_value(divisibility_thresholds(&o)?)?))
        }
        Command::JcScan {
            config,
            params,
            tmax,
            grid,
            intercept,
        } => {
            let cfg = match config {
                Some(p) => serde_json::from_str::<JcConfig>(&fs::read_to_string(p)?)?,
                None => {
                    let ps = parse_params(params)?;
                    let get = |k: &str, d: f64| ps.iter().find(|(n, _)| n == k).map(|(_, v)| *v).unwrap_or(d);
                    if let Some((k, _)) = ps.iter().find(|(k, _)| !["g", "n_max", "fock"].contains(&k.as_str())) {
                        return Err(Error::InvalidArgument(format!("jc-scan has no parameter `{k}`")));
                    }
                    JcConfig::with_fock(get("g", 1.0), get("n_max", 4.0) as usize, get("fock", 1.0) as usize)?
                }
            };
            let mode = if *intercept { EnvMode::MeasurePrepare } else { EnvMode::Coherent };
            let times = uniform_grid(*tmax, (*grid).max(2));
            let g = backflow_scan(&cfg, &times, &times, mode)?;
            let rows: Vec<Vec<f64>> = g.rows().into_iter().map(|(s, t, w)| vec![s, t, w]).collect();
            Ok(Outcome::Csv(csv_text(&["s", "t", "witness"], &rows, 9)?))
        }
    }
}

fn dpi_check(op: Option<&Path>, channel: Option<&Path>, trials: usize, cli: &Cli, opts: &SdpOptions) -> Result<Outcome> {
    let tol = cli.common.tol.unwrap_or(1e-6);
    match (op, channel) {
        (Some(op), Some(ch)) => {
            let file: SuperchannelFile = serde_json::from_str(&fs::read_to_string(op)?)?;
            fn strs(v: &[String]) -> Vec<&str> {
                v.iter().map(String::as_str).collect()
            }
            let t = SuperchannelDescriptor::new(
                LabeledOperator::try_from(file.op)?,
                &strs(&file.outer_in),
                &strs(&file.inner_in),
                &strs(&file.inner_out),
                &strs(&file.outer_out),
                CHANNEL_TOL,
            )?;
            let args = ChannelArgs {
                channel: ch.to_path_buf(),
                inputs: file.inner_in.clone(),
            };
            let n = load_channel(&args, CHANNEL_TOL)?;
            let bist = t.is_bistochastic(CHANNEL_TOL)?;
            let before = signalling_power_with(&n, opts)?.s_value;
            let after = signalling_power_with(&apply_superchannel(&t, &n)?, opts)?.s_value;
            Ok(Outcome::Json(json!({
                "bistochastic": bist,
                "s_before": before,
                "s_after": after,
                "dpi_holds": after <= before + tol,
                "tolerance": tol,
            })))
        }
        (None, None) => {
            let mut rng = seeded(cli.common.seed);
            let q = |n: &str| Wire::new(n, 2);
            let mut worst = f64::NEG_INFINITY;
            let mut violations = 0;
            for _ in 0..trials {
                let k = 1 + (rand::Rng::random::<u32>(&mut rng) % 3) as usize;
                let t = random_bistochastic_superchannel(q("X"), q("A"), q("B"), q("Y"), k, &mut rng)?;
                let n = random_channel(q("A"), q("B"), &mut rng)?;
                let before = signalling_power_with(&n, opts)?.s_value;
                let after = signalling_power_with(&apply_superchannel(&t, &n)?, opts)?.s_value;
                worst = worst.max(after - before);
                if after > before + tol {
                    violations += 1;
                }
            }
            Ok(Outcome::Json(json!({
                "trials": trials,
                "seed": cli.common.seed,
                "max_increase": worst,
                "violations": violations,
                "tolerance": tol,
            })))
        }
        _ => Err(Error::InvalidArgument("dpi-check needs both --op and --channel, or neither".into())),
    }
}

fn causal_loop(op: Option<&Path>, trials: usize, seed: u64) -> Result<Outcome> {
    match op {
        Some(p) => {
            let pm = ProcessMatrix::new(LabeledOperator::read_json(p)?, CausalClass::General)?;
            Ok(Outcome::Json(serde_json::to_value(causal_loop_inequality(&pm)?)?))
        }
        None => {
            let mut rng = seeded(seed);
            let mut max_sum = f64::NEG_INFINITY;
            let mut violations = 0;
            for _ in 0..trials {
                let pm = random_process_matrix([2, 2, 2, 2], 0.999, &mut rng)?;
                let r = causal_loop_inequality(&pm)?;
                max_sum = max_sum.max(r.sum);
                if !r.satisfied {
                    violations += 1;
                }
            }
            let dc = causal_loop_inequality(&cause_mixture(0.0, MixtureKind::Incoherent)?)?;
            Ok(Outcome::Json(json!({
                "trials": trials,
                "seed": seed,
                "max_sum": max_sum,
                "violations": violations,
                "direct_cause": dc,
            })))
        }
    }
}

fn write_out(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_else(|_| v.to_string())
}

/// Parses arguments, runs the subcommand and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.common.jobs {
        // the global pool can only be set once per process; ignore a second attempt
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let out = cli.common.out.as_deref();
    let result = execute(&cli).and_then(|o| match o {
        Outcome::Json(v) => write_out(&pretty(&v), out).map(|_| 0),
        Outcome::Csv(s) => write_out(&s, out).map(|_| 0),
        Outcome::Invalid(v) => {
            let v = json!({ "status": "validation_failed", "report": v });
            let _ = writeln!(std::io::stdout(), "{}", pretty(&v));
            Ok(2)
        }
    });
    match result {
        Ok(code) => code,
        // a closed stdout (e.g. piping into `head`) is not worth a diagnostic
        Err(Error::Io(msg)) if msg.contains("Broken pipe") => 0,
        Err(e) => {
            let _ = writeln!(std::io::stdout(), "{}", pretty(&diagnostic(&e)));
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run(Cli::parse())
}
