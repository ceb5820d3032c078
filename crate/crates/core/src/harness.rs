//! Scenario-grid runs, per-cell summaries and plot-ready CSV series.
//!
//! Averaging conventions: `s_bar` and `u_bar` are means over every
//! (product, period) cell of every replicate; `v1_bar` is the mean machine-0
//! processing time over periods and replicates; CPU time is the wall clock of
//! the heuristic call alone.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{
    build_instance, enumerate_grid, GeneratorConfig, GridOptions, Horizon, Level,
};
use crate::heuristic::{two_phase, HeuristicConfig, HeuristicTrace};
use crate::model::{
    check_feasibility_with, evaluate_objective, FeasibilityReport, Instance, Solution, FEAS_TOL,
};

const AVERAGING_NOTE: &str = "# s_bar,u_bar: mean over all (product, period) cells and replicates; \
     v1_bar: mean machine-1 processing time over periods and replicates; cpu_ms: heuristic wall clock";

/// Result of solving one instance with the heuristic, ready to serialize.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleRunReport {
    pub solution: Solution,
    pub trace: HeuristicTrace,
    pub feasibility: FeasibilityReport,
}

pub fn solve_instance(inst: &Instance, config: &HeuristicConfig) -> Result<SingleRunReport> {
    let (solution, trace) = two_phase(inst, config)?;
    let feasibility = check_feasibility_with(inst, &solution, FEAS_TOL, config.flow_mode);
    Ok(SingleRunReport {
        solution,
        trace,
        feasibility,
    })
}

/// Mean end-item stock, mean WIP stock and mean machine-0 processing time of
/// one solution.
pub fn solution_means(sol: &Solution) -> (f64, f64, f64) {
    let mean = |rows: &[Vec<f64>]| {
        let n = rows.iter().map(Vec::len).sum::<usize>().max(1);
        rows.iter().flatten().sum::<f64>() / n as f64
    };
    (
        mean(&sol.end_inventory),
        mean(&sol.wip_inventory),
        mean(&sol.proc_time[..1]),
    )
}

/// One replicate of one grid cell.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub config: GeneratorConfig,
    pub instance: Instance,
    pub outcome: std::result::Result<SingleRunReport, String>,
}

impl GridRun {
    pub fn cell(&self) -> (Horizon, Level, Level) {
        (
            self.config.horizon,
            self.config.capacity_level,
            self.config.inventory_level,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(rename = "T")]
    pub periods: usize,
    pub m_t: String,
    pub inventory: String,
    pub replicate: usize,
    pub seed: u64,
    pub status: String,
    pub z: Option<f64>,
    pub cpu_ms: Option<f64>,
    pub iter: Option<usize>,
    pub s_bar: Option<f64>,
    pub u_bar: Option<f64>,
    pub v1_bar: Option<f64>,
    pub total_demand: f64,
    pub feasible: Option<bool>,
    pub message: String,
}

impl From<&GridRun> for RunRecord {
    fn from(run: &GridRun) -> Self {
        let c = &run.config;
        let total_demand: f64 = run.instance.demand.iter().flatten().sum();
        let mut rec = RunRecord {
            periods: c.horizon.periods(),
            m_t: c.capacity_level.to_string(),
            inventory: c.inventory_level.to_string(),
            replicate: c.replicate,
            seed: c.seed,
            status: String::new(),
            z: None,
            cpu_ms: None,
            iter: None,
            s_bar: None,
            u_bar: None,
            v1_bar: None,
            total_demand,
            feasible: None,
            message: String::new(),
        };
        match &run.outcome {
            Ok(report) => {
                let (s, u, v1) = solution_means(&report.solution);
                rec.status = format!("{:?}", report.trace.termination).to_lowercase();
                rec.z = Some(report.solution.objective);
                rec.cpu_ms = Some(report.trace.total_ms);
                rec.iter = Some(report.trace.cycle_count());
                rec.s_bar = Some(s);
                rec.u_bar = Some(u);
                rec.v1_bar = Some(v1);
                rec.feasible = Some(report.feasibility.is_feasible());
            }
            Err(msg) => {
                rec.status = "failed".into();
                rec.message = msg.clone();
            }
        }
        rec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    #[serde(rename = "T")]
    pub periods: usize,
    pub m_t: Level,
    pub inventory: Level,
    pub z_bar: f64,
    /// Blank in reproducible output.
    pub cpu_ms: Option<f64>,
    pub iter: f64,
    pub s_bar: f64,
    pub u_bar: f64,
    pub v1_bar: f64,
    pub runs: usize,
    pub failed: usize,
}

/// Run every config, in parallel on up to `workers` threads (all cores when
/// zero). Output order matches input order.
pub fn run_configs(
    configs: &[GeneratorConfig],
    heuristic: &HeuristicConfig,
    workers: usize,
) -> Result<Vec<GridRun>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::input(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        configs
            .par_iter()
            .map(|config| {
                let instance = build_instance(config)?;
                let outcome = solve_instance(&instance, heuristic).map_err(|e| e.to_string());
                Ok(GridRun {
                    config: config.clone(),
                    instance,
                    outcome,
                })
            })
            .collect()
    })
}

/// Aggregate runs per cell, ordered by horizon, capacity, then inventory.
/// Failed runs are counted but excluded from the means.
pub fn summarize(runs: &[GridRun]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(Horizon, Level, Level), Vec<&GridRun>> = BTreeMap::new();
    for run in runs {
        cells.entry(run.cell()).or_default().push(run);
    }
    cells
        .into_iter()
        .map(|((h, cap, inv), runs)| {
            let ok: Vec<&SingleRunReport> = runs
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let n = ok.len().max(1) as f64;
            let mut sum = [0.0; 6];
            for report in &ok {
                let (s, u, v1) = solution_means(&report.solution);
                sum[0] += report.solution.objective;
                sum[1] += report.trace.total_ms;
                sum[2] += report.trace.cycle_count() as f64;
                sum[3] += s;
                sum[4] += u;
                sum[5] += v1;
            }
            let nan_if_empty = |x: f64| if ok.is_empty() { f64::NAN } else { x / n };
            CellSummary {
                periods: h.periods(),
                m_t: cap,
                inventory: inv,
                z_bar: nan_if_empty(sum[0]),
                cpu_ms: Some(nan_if_empty(sum[1])),
                iter: nan_if_empty(sum[2]),
                s_bar: nan_if_empty(sum[3]),
                u_bar: nan_if_empty(sum[4]),
                v1_bar: nan_if_empty(sum[5]),
                runs: runs.len(),
                failed: runs.len() - ok.len(),
            }
        })
        .collect()
}

fn write_header_lines<W: Write>(out: &mut W, reproducible: bool) -> Result<()> {
    if !reproducible {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# generated_unix_time={secs}")?;
    }
    writeln!(out, "{AVERAGING_NOTE}")?;
    Ok(())
}

/// Write per-cell summaries. `reproducible` drops the timestamp line and the
/// wall-clock column so identical runs produce identical bytes.
pub fn write_summary_csv<W: Write>(
    summaries: &[CellSummary],
    mut out: W,
    reproducible: bool,
) -> Result<()> {
    write_header_lines(&mut out, reproducible)?;
    let mut w = csv::Writer::from_writer(out);
    for s in summaries {
        let mut row = s.clone();
        if reproducible {
            row.cpu_ms = None;
        }
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_detail_csv<W: Write>(runs: &[GridRun], mut out: W, reproducible: bool) -> Result<()> {
    write_header_lines(&mut out, reproducible)?;
    let mut w = csv::Writer::from_writer(out);
    for run in runs {
        let mut rec = RunRecord::from(run);
        if reproducible {
            rec.cpu_ms = None;
        }
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a summary CSV written by [`write_summary_csv`].
pub fn read_summary_csv(path: impl AsRef<Path>) -> Result<Vec<CellSummary>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAverage {
    #[serde(rename = "T")]
    pub periods: usize,
    pub m_t: Level,
    pub v1_bar: f64,
}

/// Mean machine-0 processing time per (horizon, capacity level), averaged
/// over the inventory levels of the summary rows.
pub fn level_averages(summaries: &[CellSummary]) -> Vec<LevelAverage> {
    let mut acc: BTreeMap<(usize, Level), (f64, usize)> = BTreeMap::new();
    for s in summaries.iter().filter(|s| s.v1_bar.is_finite()) {
        let e = acc.entry((s.periods, s.m_t)).or_insert((0.0, 0));
        e.0 += s.v1_bar;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|((periods, m_t), (sum, n))| LevelAverage {
            periods,
            m_t,
            v1_bar: sum / n as f64,
        })
        .collect()
}

pub fn write_level_averages<W: Write>(rows: &[LevelAverage], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub runs: Vec<GridRun>,
    pub summaries: Vec<CellSummary>,
    pub summary_path: PathBuf,
    pub detail_path: PathBuf,
    pub levels_path: PathBuf,
}

/// Run the whole scenario grid and write `summary.csv`, `runs.csv` and
/// `v1_by_level.csv` into `out_dir`.
pub fn run_grid(
    opts: &GridOptions,
    heuristic: &HeuristicConfig,
    workers: usize,
    out_dir: impl AsRef<Path>,
    reproducible: bool,
) -> Result<GridReport> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let configs = enumerate_grid(opts)?;
    let runs = run_configs(&configs, heuristic, workers)?;
    let summaries = summarize(&runs);

    let summary_path = out_dir.join("summary.csv");
    let detail_path = out_dir.join("runs.csv");
    let levels_path = out_dir.join("v1_by_level.csv");
    write_summary_csv(&summaries, File::create(&summary_path)?, reproducible)?;
    write_detail_csv(&runs, File::create(&detail_path)?, reproducible)?;
    write_level_averages(&level_averages(&summaries), File::create(&levels_path)?)?;
    Ok(GridReport {
        runs,
        summaries,
        summary_path,
        detail_path,
        levels_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub t: usize,
    pub demand: f64,
    pub v1: f64,
    /// Finished output: `sum_i y[i][m*][t]`.
    pub production: f64,
    pub end_inventory: f64,
    pub wip_inventory: f64,
    /// Units processed on machine 0: `sum_i y[i][0][t]`.
    pub machine1_load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSeries {
    pub periods: Vec<PeriodRecord>,
    pub levels: Vec<LevelAverage>,
}

/// Per-period series of one solution.
pub fn figure_series(inst: &Instance, sol: &Solution) -> Result<Vec<PeriodRecord>> {
    sol.check_dimensions(inst)?;
    Ok((0..inst.num_periods)
        .map(|t| PeriodRecord {
            t: t + 1,
            demand: inst.period_demand(t),
            v1: sol.proc_time[0][t],
            production: (0..inst.num_products)
                .map(|i| sol.production[i][inst.last_machine(i)][t])
                .sum(),
            end_inventory: sol.end_inventory.iter().map(|r| r[t]).sum(),
            wip_inventory: sol.wip_inventory.iter().map(|r| r[t]).sum(),
            machine1_load: sol.machine_load(0, t),
        })
        .collect())
}

/// Path of the level-average companion of a series file: `foo.csv` gives
/// `foo_levels.csv`.
pub fn levels_companion(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("series");
    path.with_file_name(format!("{stem}_levels.csv"))
}

/// Write the per-period series of a feasible solution to `path`, plus a
/// companion file with machine-0 processing-time averages per level. `cell`
/// tags the solution with its grid coordinates when known.
pub fn emit_figure_data(
    inst: &Instance,
    sol: &Solution,
    cell: Option<(Horizon, Level)>,
    path: impl AsRef<Path>,
) -> Result<FigureSeries> {
    let path = path.as_ref();
    let report = check_feasibility_with(inst, sol, FEAS_TOL, crate::model::FlowMode::Aggregate);
    if !report.is_feasible() {
        return Err(Error::Contract(format!(
            "figure data needs a feasible solution: {report}"
        )));
    }
    let periods = figure_series(inst, sol)?;
    let mut w = csv::Writer::from_path(path)?;
    for rec in &periods {
        w.serialize(rec)?;
    }
    w.flush()?;

    let (_, _, v1) = solution_means(sol);
    let levels: Vec<LevelAverage> = cell
        .map(|(h, cap)| LevelAverage {
            periods: h.periods(),
            m_t: cap,
            v1_bar: v1,
        })
        .into_iter()
        .collect();
    write_level_averages(&levels, File::create(levels_companion(path))?)?;
    Ok(FigureSeries { periods, levels })
}

/// Recompute the objective stored in a run and report the relative gap.
pub fn objective_gap(run: &GridRun) -> Option<f64> {
    let report = run.outcome.as_ref().ok()?;
    let z = evaluate_objective(&run.instance, &report.solution).ok()?;
    Some((z - report.solution.objective).abs() / z.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::plant_instance;

    #[test]
    fn zero_demand_series_is_flat() {
        let inst = plant_instance(3, 630.0, 6.0, 3.0, vec![vec![0.0; 3]; 4]);
        let report = solve_instance(&inst, &HeuristicConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let series = emit_figure_data(
            &inst,
            &report.solution,
            Some((Horizon::T10, Level::Low)),
            &path,
        )
        .unwrap();
        assert_eq!(series.periods.len(), 3);
        assert!(series
            .periods
            .iter()
            .all(|p| p.production == 0.0 && p.end_inventory == 0.0 && p.wip_inventory == 0.0));
        assert!(levels_companion(&path).exists());
        assert_eq!(
            levels_companion(&path).file_name().unwrap(),
            "series_levels.csv"
        );
    }

    #[test]
    fn infeasible_solution_is_refused() {
        let mut demand = vec![vec![0.0; 2]; 4];
        demand[0][1] = 3.0;
        let inst = plant_instance(2, 630.0, 6.0, 3.0, demand);
        let sol = Solution::zeros(&inst);
        let dir = tempfile::tempdir().unwrap();
        let err = emit_figure_data(&inst, &sol, None, dir.path().join("x.csv"));
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn summary_roundtrip_and_level_average() {
        let configs: Vec<GeneratorConfig> = enumerate_grid(&GridOptions::new(1))
            .unwrap()
            .into_iter()
            .filter(|c| c.horizon == Horizon::T10 && c.inventory_level == Level::High)
            .collect();
        let runs = run_configs(&configs, &HeuristicConfig::default(), 2).unwrap();
        let summaries = summarize(&runs);
        assert_eq!(summaries.len(), 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_summary_csv(&summaries, File::create(&path).unwrap(), false).unwrap();
        let back = read_summary_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].m_t, Level::Low);
        let levels = level_averages(&summaries);
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[2].v1_bar, summaries[2].v1_bar);
    }
}
