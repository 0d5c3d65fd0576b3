//! Command-line entry point: wires configurations to the verification
//! suites, the solver, and the sweep experiments, and writes machine-readable
//! reports plus plot-ready CSV data.

use kinetic_fpu::config::RunConfig;
use kinetic_fpu::error::Error;
use kinetic_fpu::report::Report;
use kinetic_fpu::suites;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DEFAULT_SEED: u64 = 3141592653;

const USAGE: &str = "\
usage: kfpu <command> [options]

commands:
  verify-resonance      closed-form structure of the resonant manifold
  verify-dispersion     decay of the free flow in weighted mixed norms
  verify-bounds         weighted bounds on the collision trilinear forms
  verify-conservation   equilibria, moments, and the conservation run
  simulate              integrate a configured run and emit the trajectory
  lifespan-sweep        lifespan scaling for small amplitudes
  emit-kernel           dump the collision kernel table as CSV

options:
  --config <path>   run configuration (TOML or JSON); required by simulate
  --out <dir>       output directory for report.json and artifacts (default: out)
  --np <int>        momentum nodes where a command takes a grid (default: 512)
  --nx <int>        spatial nodes override for simulate
  --seed <u64>      RNG seed recorded in the report (default: 3141592653)
  --trials <int>    trials per randomized probe (default: 100)

exit codes: 0 all checks passed, 1 a verification check failed,
            2 usage or configuration error, 3 I/O failure";

struct Options {
    config: Option<PathBuf>,
    out: PathBuf,
    np: usize,
    nx: Option<usize>,
    seed: u64,
    trials: usize,
}

fn parse_options(args: &[String]) -> Result<Options, String> {
    let mut opts = Options {
        config: None,
        out: PathBuf::from("out"),
        np: 512,
        nx: None,
        seed: DEFAULT_SEED,
        trials: 100,
    };
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .map(String::as_str)
                .ok_or_else(|| format!("flag {flag} needs a value"))
        };
        match flag.as_str() {
            "--config" => opts.config = Some(PathBuf::from(value()?)),
            "--out" => opts.out = PathBuf::from(value()?),
            "--np" => {
                opts.np = value()?.parse().map_err(|e| format!("--np: {e}"))?;
            }
            "--nx" => {
                opts.nx = Some(value()?.parse().map_err(|e| format!("--nx: {e}"))?);
            }
            "--seed" => {
                opts.seed = value()?.parse().map_err(|e| format!("--seed: {e}"))?;
            }
            "--trials" => {
                opts.trials = value()?.parse().map_err(|e| format!("--trials: {e}"))?;
            }
            other => return Err(format!("unknown flag {other}")),
        }
    }
    Ok(opts)
}

fn load_config(opts: &Options) -> Result<RunConfig, Error> {
    let path = opts
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("this command needs --config <path>".into()))?;
    if !path.exists() {
        return Err(Error::Config(format!("config file {} does not exist", path.display())));
    }
    let mut cfg = RunConfig::load(path)?;
    if let Some(nx) = opts.nx {
        cfg.grids.n_x = nx;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(report: Report, out: &Path) -> Result<ExitCode, Error> {
    report.write_json(&out.join("report.json"))?;
    for check in &report.checks {
        let status = if check.pass { "pass" } else { "FAIL" };
        println!(
            "[{status}] {}: value {:.6e}, tolerance {:.6e}",
            check.id, check.value, check.tolerance
        );
    }
    if report.passed() {
        println!("{}: all {} checks passed", report.command, report.checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        for check in report.failed_checks() {
            eprintln!("failed check {}: {}", check.id, check.anchor);
        }
        Ok(ExitCode::from(1))
    }
}

fn dispatch(command: &str, opts: &Options) -> Result<ExitCode, Error> {
    let out = opts.out.clone();
    let report = match command {
        "verify-resonance" => suites::verify_resonance(opts.np, opts.seed, &out)?,
        "verify-dispersion" => suites::verify_dispersion(&out)?,
        "verify-bounds" => suites::verify_bounds(opts.trials, opts.seed, &out)?,
        "verify-conservation" => suites::verify_conservation(opts.seed, &out)?,
        "simulate" => {
            let cfg = load_config(opts)?;
            suites::simulate(&cfg, &out)?
        }
        "lifespan-sweep" => suites::lifespan(&out)?,
        "emit-kernel" => suites::emit_kernel(opts.np, &out)?,
        other => {
            return Err(Error::Config(format!("unknown command {other}")));
        }
    };
    finish(report, &out)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    };
    if command == "--help" || command == "-h" || command == "help" {
        println!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    let opts = match parse_options(&args[1..]) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    match dispatch(command, &opts) {
        Ok(code) => code,
        Err(Error::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
