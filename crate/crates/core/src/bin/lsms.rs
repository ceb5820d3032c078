use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lsms::generator::{
    build_instance, enumerate_grid, write_grid_csv, GeneratorConfig, GridOptions, Horizon, Level,
};
use lsms::harness::{
    emit_figure_data, level_averages, levels_companion, read_summary_csv, run_grid, solve_instance,
    write_level_averages,
};
use lsms::oracle::{grid_search_solve_with, toy_instance};
use lsms::{Error, FlowMode, HeuristicConfig, Instance};

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_CONTRACT: u8 = 5;

#[derive(Parser)]
#[command(
    name = "lsms",
    version,
    about = "Lot sizing and machine speed planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with the two-phase heuristic.
    Solve {
        #[command(flatten)]
        source: InstanceSource,
        #[command(flatten)]
        heuristic: HeuristicArgs,
        /// Write the solution, trace and feasibility report here (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also save the instance that was solved.
        #[arg(long)]
        save_instance: Option<PathBuf>,
    },
    /// Run the full horizon x capacity x inventory scenario grid.
    Grid {
        #[arg(long, default_value_t = 10)]
        seeds_per_cell: usize,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Draw fresh demand for every cell instead of sharing it across
        /// capacity and inventory levels.
        #[arg(long)]
        independent_demand: bool,
        #[arg(long, default_value = "grid-out")]
        out_dir: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Omit the timestamp line and wall-clock columns so reruns are
        /// byte-identical.
        #[arg(long, alias = "no-timestamp")]
        reproducible: bool,
        #[command(flatten)]
        heuristic: HeuristicArgs,
    },
    /// Solve one instance and write per-period plot data.
    Figures {
        #[command(flatten)]
        source: InstanceSource,
        #[command(flatten)]
        heuristic: HeuristicArgs,
        #[arg(long, default_value = "series.csv")]
        out: PathBuf,
        /// Summary CSV from `grid`; its per-level averages replace the
        /// single-run companion file.
        #[arg(long)]
        grid_summary: Option<PathBuf>,
    },
    /// Compare the heuristic with grid search on small instances.
    OracleCompare {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        max_periods: usize,
        #[arg(long, default_value_t = 9)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        heuristic: HeuristicArgs,
    },
}

#[derive(Args)]
struct InstanceSource {
    /// Instance JSON file; when absent an instance is generated.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "10")]
    horizon: Horizon,
    #[arg(long, default_value = "high")]
    capacity: Level,
    #[arg(long, default_value = "high")]
    inventory: Level,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceSource {
    fn load(&self) -> Result<(Instance, Option<(Horizon, Level)>), Error> {
        match &self.instance {
            Some(path) => Ok((Instance::from_json_file(path)?, None)),
            None => {
                let cfg =
                    GeneratorConfig::new(self.horizon, self.capacity, self.inventory, self.seed);
                Ok((build_instance(&cfg)?, Some((self.horizon, self.capacity))))
            }
        }
    }
}

#[derive(Args)]
struct HeuristicArgs {
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Enforce upstream/downstream flow equality in every period.
    #[arg(long)]
    strict_flow: bool,
}

impl HeuristicArgs {
    fn config(&self) -> HeuristicConfig {
        HeuristicConfig {
            eps: self.eps,
            max_iter: self.max_iter,
            v_init: None,
            flow_mode: if self.strict_flow {
                FlowMode::PerPeriod
            } else {
                FlowMode::Aggregate
            },
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::Input(_) => EXIT_PARSE,
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::Solver(_) => EXIT_SOLVER,
        Error::Contract(_) => EXIT_CONTRACT,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
    }
}

fn write_json(path: Option<&PathBuf>, value: &impl serde::Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve {
            source,
            heuristic,
            out,
            save_instance,
        } => {
            let (inst, _) = source.load()?;
            if let Some(path) = save_instance {
                std::fs::write(path, inst.to_json_string() + "\n")?;
            }
            let report = solve_instance(&inst, &heuristic.config())?;
            write_json(out.as_ref(), &report)?;
            eprintln!(
                "z = {:.2}, cycles = {}, termination = {:?}, {}",
                report.solution.objective,
                report.trace.cycle_count(),
                report.trace.termination,
                report.feasibility
            );
            Ok(if report.feasibility.is_feasible() {
                0
            } else {
                EXIT_INFEASIBLE
            })
        }
        Command::Grid {
            seeds_per_cell,
            base_seed,
            independent_demand,
            out_dir,
            workers,
            reproducible,
            heuristic,
        } => {
            let opts = GridOptions {
                seeds_per_cell,
                base_seed,
                share_demand: !independent_demand,
            };
            std::fs::create_dir_all(&out_dir)?;
            write_grid_csv(
                &enumerate_grid(&opts)?,
                File::create(out_dir.join("grid.csv"))?,
            )?;
            let report = run_grid(&opts, &heuristic.config(), workers, &out_dir, reproducible)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            writeln!(
                out,
                "T,m_t,inventory,z_bar,cpu_ms,iter,s_bar,u_bar,v1_bar,failed"
            )?;
            for s in &report.summaries {
                writeln!(
                    out,
                    "{},{},{},{:.2},{:.2},{:.2},{:.3},{:.3},{:.2},{}",
                    s.periods,
                    s.m_t,
                    s.inventory,
                    s.z_bar,
                    s.cpu_ms.unwrap_or(f64::NAN),
                    s.iter,
                    s.s_bar,
                    s.u_bar,
                    s.v1_bar,
                    s.failed
                )?;
            }
            eprintln!("wrote {}", report.summary_path.display());
            let failed: usize = report.summaries.iter().map(|s| s.failed).sum();
            Ok(if failed == 0 { 0 } else { EXIT_INFEASIBLE })
        }
        Command::Figures {
            source,
            heuristic,
            out,
            grid_summary,
        } => {
            let (inst, cell) = source.load()?;
            let report = solve_instance(&inst, &heuristic.config())?;
            let series = emit_figure_data(&inst, &report.solution, cell, &out)?;
            if let Some(summary) = grid_summary {
                let levels = level_averages(&read_summary_csv(summary)?);
                write_level_averages(&levels, File::create(levels_companion(&out))?)?;
            }
            eprintln!(
                "wrote {} periods to {}",
                series.periods.len(),
                out.display()
            );
            Ok(0)
        }
        Command::OracleCompare {
            count,
            max_periods,
            points,
            base_seed,
            out,
            heuristic,
        } => {
            let config = heuristic.config();
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for k in 0..count {
                let periods = 1 + k % max_periods.max(1);
                let seed = base_seed + k as u64;
                let inst = toy_instance(seed, periods);
                let (sol, trace) = match lsms::two_phase(&inst, &config) {
                    Ok(r) => r,
                    Err(e) => {
                        eprintln!("seed {seed}: heuristic failed: {e}");
                        continue;
                    }
                };
                let oracle = grid_search_solve_with(&inst, points, config.flow_mode)?;
                let gap = (sol.objective - oracle.objective) / oracle.objective.abs().max(1.0);
                worst = worst.max(gap);
                rows.push(serde_json::json!({
                    "seed": seed,
                    "periods": periods,
                    "heuristic": sol.objective,
                    "oracle": oracle.objective,
                    "relative_gap": gap,
                    "cycles": trace.cycle_count(),
                    "trace": trace,
                }));
            }
            write_json(out.as_ref(), &rows)?;
            eprintln!("{} instances, worst relative gap {:.3e}", rows.len(), worst);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
