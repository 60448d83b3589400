//! Replicate orchestration and deterministic aggregation.
//!
//! Replicate `i` uses seed `base_seed + i`. Replicates run on a worker pool
//! and are collected back in index order, so every output file depends only
//! on the configuration and never on the number of workers.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, InitialSpec};
use super::csv::{fmt_f64, fmt_opt, CsvBuf};
use crate::error::{Error, Result};
use crate::observables::{self, compensated_sum};
use crate::sim::{self, EventCounts, PopulationState, SimConfig};
use crate::theory::{self, EdgeProfile, ModelParams};

/// Environment variable that fixes the number of worker threads.
pub const WORKERS_ENV: &str = "BBM_WORKERS";

pub const REPLICATES_FILE: &str = "replicates.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const EXPLODED_FILE: &str = "exploded.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Observables of one replicate at one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub seed: u64,
    pub time: f64,
    pub initial_count: usize,
    pub row: observables::ObservableRow,
    pub events: EventCounts,
    /// `D_n` per configured interval; `None` for an empty population or a
    /// vanishing theory integral.
    pub ratio_dn: Vec<Option<f64>>,
    pub zeta_ks: Option<f64>,
    pub xi_ks: Option<f64>,
    pub max_over_l_star: Option<f64>,
    pub min_over_l_dagger: Option<f64>,
}

/// A replicate that hit the particle cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exploded {
    pub replicate: usize,
    pub seed: u64,
    pub time: f64,
    pub count: usize,
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateOutcome {
    Done(Vec<ReplicateRow>),
    Exploded(Exploded),
}

/// Mean and standard error of one column at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: Option<f64>,
}

/// Median of a statistic over the replicates where it is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Median {
    pub median: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub time: f64,
    pub replicates: usize,
    pub n_total: MeanSe,
    pub n_interval: Vec<MeanSe>,
    pub y_stat: MeanSe,
    pub z_stat: MeanSe,
    pub ratio_dn: Vec<Median>,
    pub zeta_ks: Median,
    pub xi_ks: Median,
    pub max_over_l_star: Median,
    pub min_over_l_dagger: Median,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub rows: Vec<ReplicateRow>,
    pub exploded: Vec<Exploded>,
    pub aggregate: Vec<AggregateRow>,
}

/// Worker count from [`WORKERS_ENV`], or `None` for the pool default.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn initial_state(cfg: &ExperimentConfig, sim: &SimConfig, seed: u64) -> Result<PopulationState> {
    match cfg.initial {
        InitialSpec::Single { x } => Ok(sim::initial_single(x)),
        InitialSpec::Airy => sim::initial_airy(&cfg.params, seed, sim.max_particles),
    }
}

fn snapshot_row(
    params: &ModelParams,
    cfg: &ExperimentConfig,
    denominators: &[f64],
    replicate: usize,
    seed: u64,
    state: &PopulationState,
) -> Result<ReplicateRow> {
    let row = observables::observe(state, params, &cfg.intervals)?;
    let n = state.len();
    let ratio_dn = row
        .n_interval
        .iter()
        .zip(denominators)
        .map(|(&k, &den)| (n > 0 && den > 0.0).then(|| k as f64 / n as f64 / den))
        .collect();
    let (zeta_ks, xi_ks) = if n > 0 {
        let zeta = observables::empirical_zeta(state, params)?;
        let xi = observables::empirical_xi(state, params)?;
        let h = EdgeProfile::get();
        (
            Some(observables::ks_distance(&zeta, standard_normal_cdf)),
            Some(observables::ks_distance(&xi, |y| h.cdf(y))),
        )
    } else {
        (None, None)
    };
    Ok(ReplicateRow {
        replicate,
        seed,
        time: state.time,
        initial_count: state.initial_count,
        ratio_dn,
        zeta_ks,
        xi_ks,
        max_over_l_star: row.max_pos.map(|m| m / params.l_star()),
        min_over_l_dagger: row.min_pos.map(|m| m / params.l_dagger()),
        events: state.events,
        row,
    })
}

/// Runs replicate `index` of `cfg`.
pub fn run_one(
    cfg: &ExperimentConfig,
    sim_cfg: &SimConfig,
    denominators: &[f64],
    index: usize,
) -> Result<ReplicateOutcome> {
    let seed = cfg.replicate_seed(index);
    let exploded = |time, count, cap| {
        Ok(ReplicateOutcome::Exploded(Exploded {
            replicate: index,
            seed,
            time,
            count,
            cap,
        }))
    };
    let initial = match initial_state(cfg, sim_cfg, seed) {
        Ok(s) => s,
        Err(Error::Explosion { time, count, cap }) => return exploded(time, count, cap),
        Err(e) => return Err(e),
    };
    let snapshots = match sim::run_replicate(sim_cfg, &initial, seed) {
        Ok(s) => s,
        Err(Error::Explosion { time, count, cap }) => return exploded(time, count, cap),
        Err(e) => return Err(e),
    };
    let rows = snapshots
        .iter()
        .map(|s| snapshot_row(&cfg.params, cfg, denominators, index, seed, &s.state))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateOutcome::Done(rows))
}

/// `∫_{q ∩ (-∞, L*]} f` for every configured interval.
pub fn ratio_denominators(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    cfg.intervals
        .iter()
        .map(|q| theory::density_integral(&cfg.params, q.lo(), q.hi()))
        .collect()
}

fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: None,
        };
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    let se = (n > 1).then(|| {
        let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
        (ss / (n - 1) as f64 / n as f64).sqrt()
    });
    MeanSe { mean, se }
}

fn median(values: impl Iterator<Item = Option<f64>>) -> Median {
    let mut v: Vec<f64> = values.flatten().collect();
    v.sort_by(f64::total_cmp);
    let count = v.len();
    let median = match count {
        0 => None,
        n if n % 2 == 1 => Some(v[n / 2]),
        n => Some(0.5 * (v[n / 2 - 1] + v[n / 2])),
    };
    Median { median, count }
}

/// Reduces per-replicate rows, in replicate order, into one row per snapshot.
pub fn aggregate(rows: &[ReplicateRow], snapshot_count: usize, intervals: usize) -> Vec<AggregateRow> {
    (0..snapshot_count)
        .map(|j| {
            let at: Vec<&ReplicateRow> = rows.iter().skip(j).step_by(snapshot_count).collect();
            let col = |f: &dyn Fn(&ReplicateRow) -> f64| mean_se(&at.iter().map(|r| f(r)).collect::<Vec<_>>());
            AggregateRow {
                time: at.first().map_or(f64::NAN, |r| r.time),
                replicates: at.len(),
                n_total: col(&|r| r.row.n_total as f64),
                n_interval: (0..intervals).map(|i| col(&|r| r.row.n_interval[i] as f64)).collect(),
                y_stat: col(&|r| r.row.y_stat),
                z_stat: col(&|r| r.row.z_stat),
                ratio_dn: (0..intervals)
                    .map(|i| median(at.iter().map(|r| r.ratio_dn[i])))
                    .collect(),
                zeta_ks: median(at.iter().map(|r| r.zeta_ks)),
                xi_ks: median(at.iter().map(|r| r.xi_ks)),
                max_over_l_star: median(at.iter().map(|r| r.max_over_l_star)),
                min_over_l_dagger: median(at.iter().map(|r| r.min_over_l_dagger)),
            }
        })
        .collect()
}

/// Runs every replicate and aggregates; writes nothing.
pub fn simulate(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SimulationOutput> {
    let sim_cfg = cfg.sim_config()?;
    let denominators = ratio_denominators(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<Result<ReplicateOutcome>> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|i| run_one(cfg, &sim_cfg, &denominators, i))
            .collect()
    });

    let mut rows = Vec::new();
    let mut exploded = Vec::new();
    for outcome in outcomes {
        match outcome? {
            ReplicateOutcome::Done(r) => rows.extend(r),
            ReplicateOutcome::Exploded(e) => exploded.push(e),
        }
    }
    let aggregate = aggregate(&rows, sim_cfg.snapshot_times.len(), cfg.intervals.len());
    Ok(SimulationOutput {
        rows,
        exploded,
        aggregate,
    })
}

pub fn replicates_csv(out: &SimulationOutput, intervals: usize) -> String {
    let mut header: Vec<String> = ["replicate", "seed", "time", "initial_count", "n_total"]
        .map(String::from)
        .to_vec();
    header.extend((0..intervals).map(|i| format!("n_q{i}")));
    header.extend(
        [
            "y_stat",
            "z_stat",
            "max_pos",
            "min_pos",
            "splits",
            "deaths",
            "absorptions",
        ]
        .map(String::from),
    );
    header.extend((0..intervals).map(|i| format!("ratio_dn_q{i}")));
    header.extend(["zeta_ks", "xi_ks", "max_over_l_star", "min_over_l_dagger"].map(String::from));
    let mut buf = CsvBuf::new(&header);
    for r in &out.rows {
        let mut cells = vec![
            r.replicate.to_string(),
            r.seed.to_string(),
            fmt_f64(r.time),
            r.initial_count.to_string(),
            r.row.n_total.to_string(),
        ];
        cells.extend(r.row.n_interval.iter().map(|n| n.to_string()));
        cells.extend([
            fmt_f64(r.row.y_stat),
            fmt_f64(r.row.z_stat),
            fmt_opt(r.row.max_pos),
            fmt_opt(r.row.min_pos),
            r.events.splits.to_string(),
            r.events.deaths.to_string(),
            r.events.absorptions.to_string(),
        ]);
        cells.extend(r.ratio_dn.iter().map(|&d| fmt_opt(d)));
        cells.extend([r.zeta_ks, r.xi_ks, r.max_over_l_star, r.min_over_l_dagger].map(fmt_opt));
        buf.row(cells);
    }
    buf.into_string()
}

/// Header names for the median columns of the aggregate file.
pub const MEDIAN_COLUMNS: [&str; 4] = ["zeta_ks", "xi_ks", "max_over_l_star", "min_over_l_dagger"];

pub fn aggregate_csv(out: &SimulationOutput, intervals: usize) -> String {
    let mut header: Vec<String> = vec!["time".into(), "replicates".into(), "exploded".into()];
    let mut mean_cols = vec!["n_total".to_string()];
    mean_cols.extend((0..intervals).map(|i| format!("n_q{i}")));
    mean_cols.extend(["y_stat".to_string(), "z_stat".to_string()]);
    for c in &mean_cols {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_se"));
    }
    let mut median_cols: Vec<String> = (0..intervals).map(|i| format!("ratio_dn_q{i}")).collect();
    median_cols.extend(MEDIAN_COLUMNS.map(String::from));
    for c in &median_cols {
        header.push(format!("{c}_median"));
        header.push(format!("{c}_count"));
    }
    let mut buf = CsvBuf::new(&header);
    for a in &out.aggregate {
        let mut cells = vec![
            fmt_f64(a.time),
            a.replicates.to_string(),
            out.exploded.len().to_string(),
        ];
        let mut means = vec![a.n_total];
        means.extend(a.n_interval.iter().copied());
        means.extend([a.y_stat, a.z_stat]);
        for m in means {
            cells.push(fmt_f64(m.mean));
            cells.push(fmt_opt(m.se));
        }
        let mut medians = a.ratio_dn.clone();
        medians.extend([a.zeta_ks, a.xi_ks, a.max_over_l_star, a.min_over_l_dagger]);
        for m in medians {
            cells.push(fmt_opt(m.median));
            cells.push(m.count.to_string());
        }
        buf.row(cells);
    }
    buf.into_string()
}

pub fn exploded_csv(out: &SimulationOutput) -> String {
    let mut buf = CsvBuf::new(&["replicate", "seed", "time", "count", "cap"]);
    for e in &out.exploded {
        buf.row([
            e.replicate.to_string(),
            e.seed.to_string(),
            fmt_f64(e.time),
            e.count.to_string(),
            e.cap.to_string(),
        ]);
    }
    buf.into_string()
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    replicates_completed: usize,
    replicates_exploded: usize,
    files: [&'static str; 4],
}

/// Configuration echo without the output directory, so that two runs into
/// different directories produce identical trees.
pub fn manifest_json(cfg: &ExperimentConfig, out: &SimulationOutput) -> Result<String> {
    let mut echo = cfg.clone();
    echo.output_dir = ".".into();
    let m = Manifest {
        config: &echo,
        replicates_completed: cfg.replicates - out.exploded.len(),
        replicates_exploded: out.exploded.len(),
        files: [REPLICATES_FILE, AGGREGATE_FILE, EXPLODED_FILE, MANIFEST_FILE],
    };
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    Ok(text)
}

/// Runs the experiment and writes the output tree into `cfg.output_dir`.
pub fn cmd_simulate(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SimulationOutput> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let out = simulate(cfg, workers)?;
    let n = cfg.intervals.len();
    write(dir, REPLICATES_FILE, &replicates_csv(&out, n))?;
    write(dir, AGGREGATE_FILE, &aggregate_csv(&out, n))?;
    write(dir, EXPLODED_FILE, &exploded_csv(&out))?;
    write(dir, MANIFEST_FILE, &manifest_json(cfg, &out)?)?;
    Ok(out)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}
