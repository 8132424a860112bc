use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use surfslice::error::{Error, Result};
use surfslice::fock_kernel::{commutator_battery, raising_overlap};
use surfslice::harness::{self, RunConfig, ScenarioReport};
use surfslice::lattice_phonon::{normal_modes, LatticeModel};
use surfslice::measurement::{born_from_records, read_ledger};

#[derive(Parser)]
#[command(name = "surfslice", version, about = "Wave capture by absorbing bodies, slice ledgers, phonon and Fock tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write ledger, report and probes into a directory.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario config without stepping it.
    Validate { config: PathBuf },
    /// Normal modes of a lattice config.
    Modes { lattice: PathBuf },
    /// Commutator battery and raise-factor check of the Fock kernel.
    FockCheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Re-summarize a run directory.
    Report { dir: PathBuf },
    /// Write a bundled scenario config (or list them when no name is given).
    Emit { name: Option<String>, path: Option<PathBuf> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeFile {
    #[serde(default = "one")]
    hbar: f64,
    lattice: LatticeModel,
}

fn one() -> f64 {
    1.0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_audit_failure() {
        3
    } else if matches!(e, Error::Config(_) | Error::Parse(_)) {
        2
    } else {
        1
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let res = harness::run_to_dir(&cfg, &out)?;
            print_report(&res.report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            let setup = cfg.setup()?;
            println!("{}: ok ({} steps, {} bodies, bin width {:e})", cfg.name, setup.steps, setup.bodies.len(), setup.bin_width);
            Ok(ExitCode::SUCCESS)
        }
        Command::Modes { lattice } => {
            let text = read(&lattice)?;
            let file: LatticeFile = toml::from_str(&text).map_err(|e| Error::config(format!("lattice config: {e}")))?;
            let modes = normal_modes(&file.lattice, file.hbar)?;
            print!("{}", modes.table());
            Ok(ExitCode::SUCCESS)
        }
        Command::FockCheck { seed, trials } => {
            let r = commutator_battery(seed, trials)?;
            println!("trials = {}", r.trials);
            println!("max |[a_s, a+_t] - delta_st| = {:e}", r.max_mixed);
            println!("max |[a_s, a_t]| = {:e}", r.max_aa);
            println!("max |[a+_s, a+_t]| = {:e}", r.max_cc);
            let mut raise = 0.0_f64;
            for n in 0..5 {
                raise = raise.max((raising_overlap(n, 1.0, 1.0, 1.0)? - f64::from(n + 1).sqrt()).abs());
            }
            println!("max |raise overlap - sqrt(n+1)| (n < 5) = {raise:e}");
            let ok = r.max_mixed < 1e-12 && r.max_aa < 1e-12 && r.max_cc < 1e-12 && raise < 1e-8;
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::Report { dir } => {
            let report = ScenarioReport::load(&dir.join("report.toml"))?;
            let ledger = read_ledger(&dir.join("ledger.csv"))?;
            print_report(&report);
            let born = born_from_records(&ledger.records);
            println!("records in file = {}", ledger.records.len());
            println!("sum of |weight|^2 = {:.12}", born.total);
            for (site, p) in &born.per_site {
                println!("  site {site}: {p:.9e}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Emit { name, path } => {
            let Some(name) = name else {
                for c in harness::bundled() {
                    println!("{}", c.name);
                }
                return Ok(ExitCode::SUCCESS);
            };
            let cfg = harness::by_name(&name).ok_or_else(|| Error::config(format!("no bundled scenario named {name}")))?;
            match path {
                Some(p) => cfg.save(&p)?,
                None => print!("{}", cfg.to_toml()),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn print_report(r: &ScenarioReport) {
    println!("scenario {}", r.name);
    println!("  steps = {}, dt = {}, bin width = {}", r.steps, r.dt, r.bin_width);
    println!("  captured = {:.12}, free norm = {:.12}", r.total_captured, r.free_norm);
    println!("  norm identity (max) = {:e}, step residual (max) = {:e}", r.max_norm_identity, r.max_step_residual);
    println!("  energy residual = {:e}, momentum residual = {:?}", r.audit.energy_residual, r.audit.momentum_residual);
    println!("  overlap metric = {} ({})", r.overlap_metric, if r.overlap_flag { "flagged" } else { "ok" });
    if let Some(l1) = r.born_l1 {
        println!("  Born L1 = {l1:e}");
    }
    for w in &r.audit.warnings {
        println!("  warning: {w}");
    }
    for (k, v) in &r.extras {
        println!("  {k} = {v}");
    }
    println!("  wall clock = {:.2} s", r.wall_clock_s);
}
