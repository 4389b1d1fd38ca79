use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::array_model::{noise_std_for_snr, synthesize_snapshot_with, ArrayGeometry, SourceScene};
use crate::dictionary::{build_dictionary, DictionarySet, FrequencyGrid};
use crate::error::Result;
use crate::estimators::{estimate, EstimateStatus, EstimatorConfig, ExtractOptions, Method};
use crate::parallel::map_indexed;
use crate::seeding::{stream_id, substream};

use super::config::{ExperimentConfig, Selection, Sweep};
use super::crb::{crb_mean_variance, variance_to_db};
use super::metrics::{format_rmse, pcd, rmse_db};

const SELECTION_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// One estimator run inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    pub sweep_value: f64,
    pub frequencies: Vec<f64>,
    pub offsets: Vec<f64>,
    pub status: EstimateStatus,
    pub iterations: usize,
    pub runtime_ms: f64,
}

/// Aggregate over the trials of one method at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub method: Method,
    pub sweep_value: f64,
    /// `None` when every trial failed; `-∞` when all estimates were exact.
    pub rmse_db: Option<f64>,
    pub pcd: f64,
    pub n_fail: usize,
    pub crb_db: Option<f64>,
    pub mean_iterations: f64,
    pub mean_runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    /// Name of the swept quantity, `snr_db` or `num_sensors`.
    pub axis: &'static str,
    pub num_sources: usize,
    pub methods: Vec<Method>,
    pub rows: Vec<MetricRow>,
    pub trials: Vec<TrialRecord>,
}

struct Point {
    snr_db: f64,
    num_sensors: usize,
}

fn sweep_points(cfg: &ExperimentConfig) -> Vec<Point> {
    match &cfg.sweep {
        Sweep::Snr { values } => values
            .iter()
            .map(|&snr_db| Point { snr_db, num_sensors: cfg.array.num_sensors.unwrap_or(cfg.array.total_sensors) })
            .collect(),
        Sweep::Sensors { values, snr_db } => values
            .iter()
            .map(|&num_sensors| Point { snr_db: *snr_db, num_sensors })
            .collect(),
    }
}

fn fixed_geometry(cfg: &ExperimentConfig, m: usize) -> Result<ArrayGeometry> {
    let mut rng = substream(cfg.array.selection_seed, stream_id(SELECTION_STREAM, m as u64, 0));
    ArrayGeometry::random_subarray_with(cfg.array.total_sensors, m, &mut rng)
}

fn trial_geometry(cfg: &ExperimentConfig, m: usize, point: usize, trial: usize) -> Result<ArrayGeometry> {
    let mut rng = substream(cfg.seed, stream_id(SELECTION_STREAM, point as u64, trial as u64));
    ArrayGeometry::random_subarray_with(cfg.array.total_sensors, m, &mut rng)
}

struct TrialOutcome {
    records: Vec<TrialRecord>,
    crb_variance: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    cfg: &ExperimentConfig,
    grid: &FrequencyGrid,
    scene: &SourceScene,
    point_index: usize,
    point: &Point,
    sweep_value: f64,
    shared: Option<(&ArrayGeometry, &DictionarySet)>,
    trial: usize,
) -> Result<TrialOutcome> {
    let owned;
    let (geometry, dict) = match shared {
        Some(pair) => pair,
        None => {
            let geo = trial_geometry(cfg, point.num_sensors, point_index, trial)?;
            let dict = build_dictionary(&geo, grid, 2)?;
            owned = (geo, dict);
            (&owned.0, &owned.1)
        }
    };
    let mut rng = substream(cfg.seed, stream_id(NOISE_STREAM, point_index as u64, trial as u64));
    let snapshot = synthesize_snapshot_with(geometry, scene, &mut rng);
    let mu = cfg.mu.mu(scene.noise_std(), point.num_sensors);
    let mut records = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let mut est_cfg = EstimatorConfig::new(method, mu, scene.num_sources());
        est_cfg.eta = cfg.eta;
        let start = Instant::now();
        let result = estimate(&snapshot, dict, &est_cfg)?;
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        records.push(TrialRecord {
            trial,
            method,
            sweep_value,
            frequencies: result.frequencies,
            offsets: result.offsets,
            status: result.status,
            iterations: result.solver.iterations,
            runtime_ms,
        });
    }
    let crb_variance = if cfg.crb && shared.is_none() {
        crb_mean_variance(geometry, scene)
    } else {
        None
    };
    Ok(TrialOutcome { records, crb_variance })
}

/// Runs every method on every trial of every sweep value. Trials draw from
/// their own substreams of the master seed, so the output does not depend on
/// the worker count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let grid = FrequencyGrid::new(cfg.grid_size)?;
    let truth = &cfg.scene.frequencies;
    let values = cfg.sweep.values();
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for (i, point) in sweep_points(cfg).iter().enumerate() {
        let scene = cfg.scene.scene(noise_std_for_snr(point.snr_db))?;
        let shared = match cfg.selection() {
            Selection::Fixed => {
                let geo = fixed_geometry(cfg, point.num_sensors)?;
                let dict = build_dictionary(&geo, &grid, 2)?;
                Some((geo, dict))
            }
            Selection::PerTrial => None,
        };
        let shared_ref = shared.as_ref().map(|(g, d)| (g, d));
        let outcomes = map_indexed(cfg.trials, |q| {
            run_trial(cfg, &grid, &scene, i, point, values[i], shared_ref, q)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let crb_db = if !cfg.crb {
            None
        } else if let Some((geo, _)) = &shared {
            crb_mean_variance(geo, &scene).map(variance_to_db)
        } else {
            let vars: Option<Vec<f64>> = outcomes.iter().map(|o| o.crb_variance).collect();
            vars.map(|v| variance_to_db(v.iter().sum::<f64>() / v.len() as f64))
        };

        let records: Vec<TrialRecord> = outcomes.into_iter().flat_map(|o| o.records).collect();
        for &method in &cfg.methods {
            let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.method == method).collect();
            rows.push(aggregate(method, values[i], &mine, truth, cfg.grid_size, crb_db)?);
        }
        trials.extend(records);
    }
    Ok(SweepOutput {
        axis: cfg.sweep.axis_name(),
        num_sources: truth.len(),
        methods: cfg.methods.clone(),
        rows,
        trials,
    })
}

fn aggregate(
    method: Method,
    sweep_value: f64,
    records: &[&TrialRecord],
    truth: &[f64],
    grid_size: f64,
    crb_db: Option<f64>,
) -> Result<MetricRow> {
    let estimates: Vec<Option<Vec<f64>>> = records
        .iter()
        .map(|r| (r.status == EstimateStatus::Success).then(|| r.frequencies.clone()))
        .collect();
    let successes: Vec<Vec<f64>> = estimates.iter().flatten().cloned().collect();
    let rmse = if successes.is_empty() { None } else { Some(rmse_db(&successes, truth)?) };
    let n = records.len().max(1) as f64;
    Ok(MetricRow {
        method,
        sweep_value,
        rmse_db: rmse,
        pcd: pcd(&estimates, truth, grid_size),
        n_fail: records.len() - successes.len(),
        crb_db,
        mean_iterations: records.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
        mean_runtime_ms: records.iter().map(|r| r.runtime_ms).sum::<f64>() / n,
    })
}

pub const AGGREGATE_HEADER: [&str; 6] = ["method", "sweep_value", "rmse_db", "pcd", "n_fail", "crb_db"];

pub fn write_aggregate_csv<W: Write>(out: W, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.sweep_value.to_string(),
            format_rmse(r.rmse_db),
            r.pcd.to_string(),
            r.n_fail.to_string(),
            r.crb_db.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn trials_header(num_sources: usize) -> Vec<String> {
    let mut h = vec!["trial".to_string(), "method".into(), "sweep_value".into()];
    h.extend((1..=num_sources).map(|k| format!("u_hat_{k}")));
    h.extend((1..=num_sources).map(|k| format!("p_hat_{k}")));
    h.extend(["status".to_string(), "iterations".into(), "runtime_ms".into()]);
    h
}

/// Per-trial CSV. Failed trials leave the estimate cells empty.
pub fn write_trials_csv<W: Write>(out: W, trials: &[TrialRecord], num_sources: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trials_header(num_sources))?;
    for t in trials {
        let mut rec = vec![t.trial.to_string(), t.method.name().to_string(), t.sweep_value.to_string()];
        for values in [&t.frequencies, &t.offsets] {
            rec.extend((0..num_sources).map(|k| values.get(k).map(|v| v.to_string()).unwrap_or_default()));
        }
        rec.extend([t.status.as_str().to_string(), t.iterations.to_string(), format!("{:.3}", t.runtime_ms)]);
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated table with one column per method, `NaN` where a
/// value is missing. `metric` picks the plotted value.
pub fn write_plot_data<W: Write>(
    mut out: W,
    output: &SweepOutput,
    metric: &str,
    value: impl Fn(&MetricRow) -> Option<f64>,
    with_crb: bool,
) -> Result<()> {
    let fmt = |v: Option<f64>| match v {
        Some(v) if v.is_finite() => format!("{v:.6}"),
        _ => "NaN".to_string(),
    };
    write!(out, "# {metric} vs {}\n# {}", output.axis, output.axis)?;
    for m in &output.methods {
        write!(out, " {}", m.name())?;
    }
    if with_crb {
        write!(out, " crb")?;
    }
    writeln!(out)?;
    let mut values: Vec<f64> = output.rows.iter().map(|r| r.sweep_value).collect();
    values.dedup();
    for v in values {
        let at: Vec<&MetricRow> = output.rows.iter().filter(|r| r.sweep_value == v).collect();
        write!(out, "{v}")?;
        for m in &output.methods {
            let row = at.iter().find(|r| r.method == *m);
            write!(out, " {}", fmt(row.and_then(|r| value(r))))?;
        }
        if with_crb {
            write!(out, " {}", fmt(at.first().and_then(|r| r.crb_db)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    axis: &'a str,
    pairing: &'a str,
    failed_trials: &'a str,
    crb_model: &'a str,
    extraction: ExtractOptions,
    config: &'a ExperimentConfig,
}

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const TRIALS_FILE: &str = "trials.csv";
pub const METADATA_FILE: &str = "metadata.toml";

/// Writes the aggregate and per-trial CSVs, the RMSE and PCD plot data and a
/// metadata file into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, output: &SweepOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_aggregate_csv(std::fs::File::create(dir.join(AGGREGATE_FILE))?, &output.rows)?;
    write_trials_csv(std::fs::File::create(dir.join(TRIALS_FILE))?, &output.trials, output.num_sources)?;
    write_plot_data(
        std::fs::File::create(dir.join(format!("rmse_vs_{}.dat", output.axis)))?,
        output,
        "rmse_db",
        |r| r.rmse_db,
        cfg.crb,
    )?;
    write_plot_data(
        std::fs::File::create(dir.join(format!("pcd_vs_{}.dat", output.axis)))?,
        output,
        "pcd",
        |r| Some(r.pcd),
        false,
    )?;
    let meta = Metadata {
        axis: output.axis,
        pairing: "sorted estimates paired positionally with sorted truth",
        failed_trials: "excluded from rmse_db, counted as misses in pcd",
        crb_model: "deterministic single-snapshot bound, known amplitudes",
        extraction: ExtractOptions::default(),
        config: cfg,
    };
    let text = toml::to_string(&meta).map_err(|e| crate::error::Error::Config(e.to_string()))?;
    std::fs::write(dir.join(METADATA_FILE), text)?;
    Ok(())
}
