//! Command-line front end: runs distillation schedules, compiles rotations,
//! emits overhead tables and plot data, and runs the verification suite.
//!
//! Data goes to `--out` (or standard output); progress and summaries go to
//! standard error so output can be piped cleanly. All numeric output uses
//! full double precision for bit-exact regression testing.

mod verify;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use ydistill_core::schedule::{
    optimize_m, rotation_overhead, CostFit, ScheduleConfig, TableBuilder,
};
use ydistill_core::synth::{adaptive_execute, compile_rotation, SeededOutcomes};
use ydistill_core::Error as CoreError;

/// Default seed so documented examples reproduce exactly.
const DEFAULT_SEED: u64 = 20140213;

#[derive(Parser)]
#[command(
    name = "ydistill",
    version,
    about = "Magic-state distillation cost engine and rotation compiler"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MArg {
    #[value(name = "1")]
    One,
    Auto,
}

#[derive(Args)]
struct CommonOut {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<String>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Worker pool size for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed for randomized executions.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Zero all off-diagonal noise parameters.
    #[arg(long, default_value_t = false)]
    zero_delta: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build a distillation cost table for one level.
    Distill {
        /// Family index k of the target |Y_k> (3..=89).
        #[arg(long)]
        k: u32,
        /// Target output error.
        #[arg(long)]
        target_eps: f64,
        /// Accuracy of purchased input states.
        #[arg(long, default_value_t = 0.01)]
        input_eps: f64,
        /// Code-size policy: the exact table is m = 1; `auto` appends a
        /// leading-order optimal-m comparison to the summary.
        #[arg(long, value_enum, default_value = "1")]
        m: MArg,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Compile (and optionally execute) an arbitrary rotation.
    Synthesize {
        /// Rotation axis as "x,y,z" (unit vector).
        #[arg(long, default_value = "0,1,0", value_parser = parse_axis)]
        axis: (f64, f64, f64),
        /// Rotation angle in radians (|theta| <= pi/8 after axis flips).
        #[arg(long)]
        theta: f64,
        /// Relative accuracy of the synthesized gate.
        #[arg(long)]
        eps_rel: f64,
        /// Execute the adaptive protocol with the configured seed and attach
        /// transcripts.
        #[arg(long, default_value_t = false)]
        execute: bool,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Emit overhead-versus-accuracy data.
    Overhead {
        /// Gate accuracy delta; may repeat for a sweep.
        #[arg(long, required = true, num_args = 1..)]
        delta: Vec<f64>,
        /// `family` sweeps the |Y_k> states; `arbitrary` prices a generic
        /// rotation of angle theta (default 8*delta).
        #[arg(long, value_enum, default_value = "family")]
        mode: OverheadMode,
        /// Rotation angle for arbitrary mode.
        #[arg(long)]
        theta: Option<f64>,
        /// Append an m = 1 versus optimal-m comparison.
        #[arg(long, default_value_t = false)]
        compare_m: bool,
        /// Accuracy of purchased input states.
        #[arg(long, default_value_t = 0.01)]
        input_eps: f64,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Run the identity, oracle, and invariant checks.
    Verify {
        /// Perturb a named check to validate failure reporting.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OverheadMode {
    Family,
    Arbitrary,
}

fn parse_axis(text: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err("axis must be three comma-separated components".into());
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad axis component `{part}`: {e}"))?;
    }
    Ok((v[0], v[1], v[2]))
}

fn emit(common: &CommonOut, data: &str) -> Result<(), CoreError> {
    match &common.out {
        Some(path) => fs::write(path, data)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(data.as_bytes())?;
        }
    }
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), CoreError> {
    match cli.command {
        Command::Distill {
            k,
            target_eps,
            input_eps,
            m,
            common,
        } => cmd_distill(k, target_eps, input_eps, m, &common),
        Command::Synthesize {
            axis,
            theta,
            eps_rel,
            execute,
            common,
        } => cmd_synthesize([axis.0, axis.1, axis.2], theta, eps_rel, execute, &common),
        Command::Overhead {
            delta,
            mode,
            theta,
            compare_m,
            input_eps,
            common,
        } => cmd_overhead(&delta, mode, theta, compare_m, input_eps, &common),
        Command::Verify { inject_fault } => cmd_verify(inject_fault.as_deref()),
    }
}

fn schedule_config(input_eps: f64, zero_delta: bool) -> ScheduleConfig {
    ScheduleConfig {
        k_max: 89,
        input_eps,
        zero_delta,
    }
}

fn cmd_distill(
    k: u32,
    target_eps: f64,
    input_eps: f64,
    m: MArg,
    common: &CommonOut,
) -> Result<(), CoreError> {
    let config = schedule_config(input_eps, common.zero_delta);
    let mut builder = TableBuilder::new(config)?;
    let entry = builder.ensure(k, target_eps)?;
    let table = builder.snapshot();
    eprintln!(
        "distill: k = {k}, achieved eps = {}, cost = {}, rounds = {}",
        fmt(entry.eps),
        fmt(entry.cost),
        entry.rounds
    );
    if m == MArg::Auto {
        let fit = CostFit::from_table(&table);
        match optimize_m(target_eps.max(2e-15), &fit, input_eps) {
            Ok(opt) => eprintln!(
                "optimal-m estimate: baseline = {}, optimized = {}, improvement = {:.3}",
                fmt(opt.baseline_cost),
                fmt(opt.optimized_cost),
                opt.improvement
            ),
            Err(e) => eprintln!("optimal-m estimate unavailable: {e}"),
        }
    }
    let data = match common.format {
        Format::Json => table.to_json()? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    emit(common, &data)
}

fn cmd_synthesize(
    axis: [f64; 3],
    theta: f64,
    eps_rel: f64,
    execute: bool,
    common: &CommonOut,
) -> Result<(), CoreError> {
    let compiled = compile_rotation(axis, theta, eps_rel)?;
    eprintln!(
        "synthesize: ell = {}, expected non-Cliffords = {}",
        compiled.ell,
        fmt(compiled.expected_noncliffords)
    );
    let mut per_angle = Vec::new();
    for (idx, prog) in compiled.per_angle.iter().enumerate() {
        let transcript = if execute && !prog.expansion.zero {
            let mut source = SeededOutcomes::new(common.seed.wrapping_add(idx as u64));
            Some(adaptive_execute(&prog.expansion, &mut source))
        } else {
            None
        };
        per_angle.push(serde_json::json!({
            "h": if prog.expansion.zero { serde_json::Value::Null } else { prog.expansion.h.into() },
            "bits": prog.expansion.bits,
            "negative": prog.expansion.negative,
            "expected_injections": prog.expected_injections,
            "profile": prog.profile,
            "transcript": transcript,
        }));
    }
    let report = serde_json::json!({
        "target": { "axis": compiled.axis, "theta": compiled.theta },
        "eps_rel": compiled.eps_rel,
        "euler": compiled.euler.as_array(),
        "per_angle": per_angle,
        "expected_noncliffords": compiled.expected_noncliffords,
    });
    let data = match common.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => {
            let mut out = String::from("angle,k,p_inject\n");
            for (idx, prog) in compiled.per_angle.iter().enumerate() {
                for (k, p) in &prog.profile {
                    out.push_str(&format!("{idx},{k},{}\n", fmt(*p)));
                }
            }
            out
        }
    };
    emit(common, &data)
}

#[derive(Debug, Clone, serde::Serialize)]
struct OverheadRow {
    delta: f64,
    overhead: f64,
    k: Option<u32>,
    label: String,
}

fn family_sweep(
    delta: f64,
    input_eps: f64,
    zero_delta: bool,
) -> Result<Vec<OverheadRow>, CoreError> {
    let mut builder = TableBuilder::new(schedule_config(input_eps, zero_delta))?;
    let k_hi = (std::f64::consts::TAU / delta).log2().ceil() as u32;
    let mut rows = Vec::new();
    for k in 4..=k_hi.min(89) {
        let entry = builder.ensure(k, delta)?;
        rows.push(OverheadRow {
            delta,
            overhead: entry.cost,
            k: Some(k),
            label: "family".into(),
        });
        eprintln!("  k = {k}: cost = {}", fmt(entry.cost));
    }
    Ok(rows)
}

fn arbitrary_point(
    delta: f64,
    theta: Option<f64>,
    input_eps: f64,
    zero_delta: bool,
) -> Result<Vec<OverheadRow>, CoreError> {
    let mut builder = TableBuilder::new(schedule_config(input_eps, zero_delta))?;
    let theta = theta.unwrap_or(8.0 * delta).min(std::f64::consts::PI / 8.0);
    let report = rotation_overhead(theta, delta, &mut builder)?;
    Ok(vec![OverheadRow {
        delta,
        overhead: report.total,
        k: None,
        label: format!("arbitrary theta={theta:.6e}"),
    }])
}

fn cmd_overhead(
    deltas: &[f64],
    mode: OverheadMode,
    theta: Option<f64>,
    compare_m: bool,
    input_eps: f64,
    common: &CommonOut,
) -> Result<(), CoreError> {
    for &d in deltas {
        if !(d > 1e-15 && d < 1e-1) {
            return Err(CoreError::DeltaOutOfRange(d));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.max(1))
        .build()
        .expect("worker pool");
    let zero_delta = common.zero_delta;
    let results: Vec<Result<Vec<OverheadRow>, CoreError>> = pool.install(|| {
        deltas
            .par_iter()
            .map(|&delta| {
                eprintln!("overhead: delta = {delta:e}");
                match mode {
                    OverheadMode::Family => family_sweep(delta, input_eps, zero_delta),
                    OverheadMode::Arbitrary => arbitrary_point(delta, theta, input_eps, zero_delta),
                }
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let mut compare_rows = Vec::new();
    if compare_m {
        // The fit comes from an exact table deep enough for the anchor.
        let mut builder = TableBuilder::new(schedule_config(input_eps, zero_delta))?;
        builder.ensure(3, 1e-8)?;
        builder.ensure(4, 1e-8)?;
        let fit = CostFit::from_table(&builder.snapshot());
        for &delta in deltas {
            let opt = optimize_m(delta, &fit, input_eps)?;
            compare_rows.push(opt);
        }
    }
    let data = match common.format {
        Format::Csv => {
            let mut out = String::from("delta,overhead,k,label\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt(r.delta),
                    fmt(r.overhead),
                    r.k.map_or(String::new(), |k| k.to_string()),
                    r.label
                ));
            }
            if compare_m {
                out.push_str("delta,m1,optimized,ratio\n");
                for c in &compare_rows {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt(c.target),
                        fmt(c.baseline_cost),
                        fmt(c.optimized_cost),
                        fmt(c.improvement)
                    ));
                }
            }
            out
        }
        Format::Json => {
            let doc = serde_json::json!({
                "schema_version": ydistill_core::schedule::SCHEMA_VERSION,
                "rows": rows,
                "compare_m": compare_rows,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    emit(common, &data)
}

fn cmd_verify(inject_fault: Option<&str>) -> Result<(), CoreError> {
    let results = verify::run_checks(inject_fault);
    let mut failed = 0;
    for check in &results {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<24} {}", check.name, check.detail);
        if !check.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} verification check(s) failed");
        std::process::exit(1);
    }
    Ok(())
}
