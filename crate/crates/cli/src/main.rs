//! `equiroute` command-line tool.
//!
//! Scenario arguments are file paths, or `preset:sample` / `preset:chatter`
//! for the shipped scenarios. Log verbosity comes from `EQUIROUTE_LOG`
//! (`error`, `warn`, `info`, `debug`, `trace`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use equiroute::experiments::{
    self, exit, iterate_demo, parse_list, parse_split, parse_weights, run_solve, run_sweep, scenario_digest,
    write_demo_outputs, write_solve_outputs, write_sweep_outputs, NcrSpec, SolveParams, SweepOptions,
};
use equiroute::game::{GameConfig, GameStatus, GapMode, TimeFormula};
use equiroute::network::{load_scenario, sample_scenario, serialize_scenario, Scenario};
use equiroute::{presets, Error, Execution};

#[derive(Parser)]
#[command(name = "equiroute", version, about = "Mixed-traffic routing game and mobility-equity sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the 12-node sample scenario for a seed; the default seed
    /// reproduces `preset:sample`.
    Generate {
        #[arg(long, default_value_t = presets::SAMPLE_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play one game and write its run record and travel-time table.
    Solve {
        scenario: String,
        /// Comma-separated mode weights summing to 1, in scenario mode order.
        #[arg(long)]
        weights: String,
        /// Rescale private demand to this noncompliance rate.
        #[arg(long)]
        ncr: Option<f64>,
        /// Split of noncompliant demand over levels 0, 1, 2.
        #[arg(long, default_value = "0.5,0.3,0.2")]
        level_split: String,
        #[arg(long, default_value = "paper")]
        time_formula: TimeFormula,
        #[arg(long, value_enum, default_value = "mean-difference")]
        gap_mode: GapArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a weight grid for each noncompliance rate and report the best
    /// feasible weights per rate.
    Sweep {
        scenario: String,
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
        /// Comma-separated noncompliance rates; `file` keeps the scenario's rates.
        #[arg(long, default_value = "0.2,0.4,0.6,0.8")]
        ncr_list: String,
        #[arg(long, default_value = "0.5,0.3,0.2")]
        level_split: String,
        /// Upper bound on the CPV/NPV travel-time gap.
        #[arg(long, default_value_t = f64::INFINITY, allow_negative_numbers = true)]
        gap_limit: f64,
        /// Worker threads; 1 runs sequentially, omitted uses all cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "paper")]
        time_formula: TimeFormula,
        #[arg(long, value_enum, default_value = "mean-difference")]
        gap_mode: GapArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare travel times just before and after the redistribution that
    /// breaks a routing cycle.
    IterateDemo {
        scenario: String,
        /// Mode weights; defaults to 0.7 on public transport, the rest split
        /// evenly.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, default_value = "paper")]
        time_formula: TimeFormula,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum GapArg {
    MeanDifference,
    PairedTrips,
}

impl From<GapArg> for GapMode {
    fn from(g: GapArg) -> Self {
        match g {
            GapArg::MeanDifference => GapMode::MeanDifference,
            GapArg::PairedTrips => GapMode::PairedTrips,
        }
    }
}

fn load(arg: &str) -> Result<Scenario, Error> {
    match arg.strip_prefix("preset:") {
        Some("sample") => Ok(presets::sample()),
        Some("chatter") => Ok(presets::chatter()),
        Some(other) => Err(Error::InvalidInput(format!(
            "unknown preset '{other}' (expected sample or chatter)"
        ))),
        None => load_scenario(&fs::read_to_string(arg)?),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Generate { seed, out } => {
            let scenario = sample_scenario(seed);
            write_file(&out, &serialize_scenario(&scenario))?;
            println!("wrote {} (digest {})", out.display(), scenario_digest(&scenario));
            Ok(exit::OK)
        }
        Command::Solve {
            scenario,
            weights,
            ncr,
            level_split,
            time_formula,
            gap_mode,
            out,
        } => {
            let scenario = load(&scenario)?;
            let params = SolveParams {
                weights: parse_weights(&weights)?.as_slice().to_vec(),
                ncr,
                level_split: parse_split(&level_split)?,
                time_formula,
            };
            let config = GameConfig {
                gap_mode: gap_mode.into(),
                ..GameConfig::default()
            };
            let outcome = run_solve(&scenario, &params, &config)?;
            write_solve_outputs(&outcome, &out)?;
            match (&outcome.error, &outcome.record.summary) {
                (Some(e), _) => eprintln!("error: {e}"),
                (None, Some(s)) => {
                    let mem = outcome.record.mem.as_ref().map(|m| m.mem).unwrap_or(f64::NAN);
                    println!(
                        "status {} after {} iteration(s); mem {mem}; delta_pv {}",
                        s.status, s.iterations, s.delta_pv
                    );
                    if s.status == GameStatus::MaxIterations {
                        eprintln!("warning: play did not settle within the iteration cap");
                    }
                }
                (None, None) => {}
            }
            println!("wrote {}", out.display());
            Ok(outcome.exit_code())
        }
        Command::Sweep {
            scenario,
            grid_step,
            ncr_list,
            level_split,
            gap_limit,
            jobs,
            time_formula,
            gap_mode,
            out,
        } => {
            let scenario = load(&scenario)?;
            let ncr = if ncr_list == "file" {
                None
            } else {
                Some(NcrSpec::new(parse_list(&ncr_list)?, parse_split(&level_split)?)?)
            };
            let options = SweepOptions {
                grid_step,
                ncr,
                gap_limit,
                config: GameConfig {
                    time_formula,
                    gap_mode: gap_mode.into(),
                    ..GameConfig::default()
                },
                exec: jobs.map(Execution::with_jobs).unwrap_or_default(),
            };
            let outcome = run_sweep(&scenario, &options)?;
            write_sweep_outputs(&outcome, &scenario.modes, &out)?;
            let mut code = exit::OK;
            for b in &outcome.best {
                let ncr = b.ncr.map(|r| r.to_string()).unwrap_or_else(|| "file".into());
                match (&b.weights, b.mem) {
                    (Some(w), Some(mem)) => println!("ncr {ncr}: best weights {w:?}, mem {mem}"),
                    _ => {
                        println!("ncr {ncr}: no weights satisfy the gap limit");
                        code = exit::INFEASIBLE;
                    }
                }
            }
            let capped = outcome.records.iter().filter(|r| r.status == GameStatus::MaxIterations).count();
            if capped > 0 {
                eprintln!("warning: {capped} point(s) hit the iteration cap");
                if code == exit::OK {
                    code = exit::NON_CONVERGENCE;
                }
            }
            println!("wrote {}", out.display());
            Ok(code)
        }
        Command::IterateDemo {
            scenario,
            weights,
            time_formula,
            out,
        } => {
            let scenario = load(&scenario)?;
            let weights = match weights {
                Some(w) => parse_weights(&w)?,
                None => presets::demo_weights(&scenario.modes),
            };
            let config = GameConfig {
                time_formula,
                ..GameConfig::default()
            };
            let demo = iterate_demo(&scenario, &weights, &config)?;
            write_demo_outputs(&demo, &scenario, &out)?;
            print!("{}", experiments::write_demo_table(&demo, &scenario));
            match demo.checks {
                None => println!("play did not chatter ({}); one column only", demo.result.status),
                Some(c) => println!(
                    "totals preserved: {} (max change {:e}); npv paths unchanged: {}; \
                     public time not increased: {}; objective not increased: {}",
                    c.totals_preserved,
                    c.max_total_change,
                    c.npv_paths_unchanged,
                    c.public_time_not_increased,
                    c.objective_not_increased
                ),
            }
            println!("wrote {}", out.display());
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EQUIROUTE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            experiments::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
