//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Node, Scenario, ScenarioFile, ScenarioStatistics};
use crate::montecarlo::{run_sweep, SweepSpec, DESK_TRIALS, FULL_TRIALS};
use crate::oracle::{random_scenarios, ComparisonReport, GridSpec};
use crate::par::Execution;
use crate::solver::{solve_igs, solve_pgs, BreakpointKind, Regime, Solution, SolutionKind};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "igs-underlay",
    version,
    about = "SU power and circularity design for underlay sharing with full-duplex PUs"
)]
pub struct Cli {
    /// Worker threads (defaults to RAYON_NUM_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario file.
    Solve(SolveArgs),
    /// Check the solver against a brute-force grid search.
    Verify(VerifyArgs),
    /// Run a Monte Carlo sweep and write CSV.
    Sweep(SweepArgs),
    /// Print the bundled default statistics, canonical scenario or example spec.
    Defaults(DefaultsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Igs,
    Pgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "igs")]
    pub scheme: Scheme,
    /// Override a field, e.g. `--set su_power_max_w=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Scenario JSON file (alternative to --random).
    pub scenario: Option<PathBuf>,
    /// Number of random scenarios to verify.
    #[arg(long, conflicts_with = "scenario")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Grid size as POWERxCIRCULARITY.
    #[arg(long, default_value = "201x201")]
    pub grid: String,
    /// Allowed rate shortfall; defaults to the grid-spacing tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// CSV output path (stdout if omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Built-in experiment 1, 2 or 3.
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    pub example: Option<u8>,
    /// Sweep spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Use the full-scale trial count.
    #[arg(long, conflicts_with = "trials")]
    pub full_scale: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a spec field, e.g. `--set base.pu_target_rate=[2,2]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// CSV output path (stdout if omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DefaultsArgs {
    /// Print the mean values as an instantaneous scenario file.
    #[arg(long, conflicts_with = "example")]
    pub scenario: bool,
    /// Print the sweep spec of a built-in experiment.
    #[arg(long)]
    pub example: Option<u8>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Applies `key=value` overrides to a JSON document. Keys may be dotted
/// paths; values are parsed as JSON.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidSpec(format!("override {item:?} is not KEY=VALUE")))?;
        let value: Value =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut target = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            target = target
                .get_mut(*part)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown override key {key:?}")))?;
        }
        let last = parts[parts.len() - 1];
        let slot = target
            .get_mut(last)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown override key {key:?}")))?;
        *slot = value;
    }
    Ok(())
}

fn load_scenario(path: &Path, overrides: &[String]) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| with_path(path, e))?;
    let mut doc: Value = serde_json::from_str(&text)?;
    apply_overrides(&mut doc, overrides)?;
    let file: ScenarioFile = serde_json::from_value(doc)?;
    let scenario = Scenario::from(&file);
    scenario.validate()?;
    Ok(scenario)
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn open_output<'a>(path: &Option<PathBuf>, out: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| with_path(p, e))?,
        )),
        None => Box::new(out),
    })
}

fn regime_label(regime: Regime) -> String {
    match regime {
        Regime::Budget => "budget".into(),
        Regime::Constraint(n) => format!("constraint-{n}"),
    }
}

pub fn print_solution(
    out: &mut dyn Write,
    scheme: Scheme,
    sol: &Solution,
    scenario: &Scenario,
) -> Result<()> {
    let kind = match sol.kind {
        SolutionKind::Idle => "idle",
        SolutionKind::Proper => "proper",
        SolutionKind::Improper => "improper",
    };
    let scheme = match scheme {
        Scheme::Igs => "igs",
        Scheme::Pgs => "pgs",
    };
    writeln!(
        out,
        "scheme={scheme} kind={kind} ps={:.6} cx={:.6} rs={:.6}",
        sol.design.power,
        sol.design.circularity,
        sol.su_rate()
    )?;
    for node in Node::BOTH {
        let k = node.index();
        writeln!(
            out,
            "pu{node}: rate={:.6} target={:.6} working={}",
            sol.rates.pu_rate[k], scenario.pu_target_rate[k], sol.working[k]
        )?;
    }
    writeln!(out, "outage={}", sol.outage())?;
    if sol.kind == SolutionKind::Improper {
        let points: Vec<String> = sol
            .breakpoints
            .points()
            .iter()
            .map(|b| {
                let tag = match b.kind {
                    BreakpointKind::Budget(n) => format!("budget-{n}"),
                    BreakpointKind::Cross => "cross".into(),
                };
                format!("{:.6}({tag})", b.circularity)
            })
            .collect();
        writeln!(
            out,
            "breakpoints k={} [{}]",
            sol.breakpoints.k(),
            points.join(", ")
        )?;
        for c in &sol.candidates {
            writeln!(
                out,
                "candidate z={} [{:.6}, {:.6}] regime={} ps={:.6} cx={:.6} rs={:.6}{}",
                c.interval,
                c.lower,
                c.upper,
                regime_label(c.regime),
                c.design.power,
                c.design.circularity,
                c.su_rate,
                if c.midpoint_tie { " midpoint-tie" } else { "" }
            )?;
        }
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<u8> {
    let scenario = load_scenario(&args.scenario, &args.overrides)?;
    let sol = match args.scheme {
        Scheme::Igs => solve_igs(&scenario),
        Scheme::Pgs => solve_pgs(&scenario),
    };
    print_solution(out, args.scheme, &sol, &scenario)?;
    Ok(EXIT_OK)
}

pub fn write_reports<W: Write>(reports: &[ComparisonReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let grid = GridSpec::parse(&args.grid)?;
    let scenarios = match (&args.scenario, args.random) {
        (Some(path), _) => vec![Scenario::load(path)?],
        (None, Some(n)) => random_scenarios(n, args.seed),
        (None, None) => {
            return Err(Error::InvalidSpec(
                "give a scenario file or --random N".into(),
            ));
        }
    };
    let tolerance = args.tolerance.unwrap_or_else(|| grid.tolerance());
    let reports: Vec<ComparisonReport> = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let sol = solve_igs(s);
            crate::oracle::compare_with_tolerance(
                i,
                s,
                &grid,
                &sol,
                tolerance,
                Execution::default(),
            )
        })
        .collect();
    write_reports(&reports, open_output(&args.output, out)?)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    writeln!(
        err,
        "verified {} scenario(s) on a {}x{} grid, tolerance {tolerance:.6}: {failed} failed",
        reports.len(),
        grid.power_samples,
        grid.circularity_samples
    )?;
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let trials = if args.full_scale {
        Some(FULL_TRIALS)
    } else {
        args.trials
    };
    let mut spec = match (&args.spec, args.example) {
        (Some(path), _) => SweepSpec::load(path)?,
        (None, Some(n)) => SweepSpec::example(n, DESK_TRIALS, 1)?,
        (None, None) => return Err(Error::InvalidSpec("give --example N or --spec FILE".into())),
    };
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if !args.overrides.is_empty() {
        let mut doc = serde_json::to_value(&spec)?;
        apply_overrides(&mut doc, &args.overrides)?;
        spec = serde_json::from_value(doc)?;
    }
    spec.validate()?;
    // fail on an unwritable path before spending time on the sweep
    let sink = open_output(&args.output, out)?;
    let result = run_sweep(&spec)?;
    result.write_csv(sink)?;
    writeln!(
        err,
        "sweep: {} points, {} trials, seed {}, PU direct envelope correlation {:.4}",
        result.rows.len(),
        result.trials,
        result.seed,
        result.envelope_correlation
    )?;
    Ok(EXIT_OK)
}

fn cmd_defaults(args: &DefaultsArgs, out: &mut dyn Write) -> Result<u8> {
    let text = if args.scenario {
        serde_json::to_string_pretty(&ScenarioStatistics::default().mean_file())?
    } else if let Some(n) = args.example {
        serde_json::to_string_pretty(&SweepSpec::example(n, DESK_TRIALS, 1)?)?
    } else {
        ScenarioStatistics::bundled_json().trim_end().to_string()
    };
    let mut sink = open_output(&args.output, out)?;
    writeln!(sink, "{text}")?;
    sink.flush()?;
    Ok(EXIT_OK)
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        // a pool may already exist when run in-process more than once
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_threads: Option<usize>) -> Result<()> {
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads(cli.threads).and_then(|_| match &cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Verify(a) => cmd_verify(a, out, err),
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Defaults(a) => cmd_defaults(a, out),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_nested_fields() {
        let mut doc = serde_json::json!({"a": 1, "b": {"c": [1, 2]}});
        apply_overrides(&mut doc, &["a=2.5".into(), "b.c=[3,4]".into()]).unwrap();
        assert_eq!(doc, serde_json::json!({"a": 2.5, "b": {"c": [3, 4]}}));
        assert!(apply_overrides(&mut doc, &["missing=1".into()]).is_err());
        assert!(apply_overrides(&mut doc, &["noequals".into()]).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(
            run(["igs-underlay", "bogus"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(
            run(["igs-underlay", "verify"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(run(["igs-underlay", "--help"], &mut out, &mut err), EXIT_OK);
    }
}
