//! Seeded simulation sweeps comparing every estimator with exact optima.
//!
//! Each replication draws from its own RNG seeded by hashing
//! `(master_seed, grid index, replication index)`, and results are gathered
//! in index order, so output does not depend on the worker count.

use std::io::Write;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{ensure, Error, Result};
use crate::estimators::{
    balanced_estimate, baseline_estimate, closed_unbalanced_estimate, dispatch_estimate,
    recursive_estimate,
};
use crate::exact::optimal_match_1d;
use crate::network::{build_regular_network, exact_network_match, network_estimate, sample_instance};
use crate::types::{EdgeParams, Instance1D};

pub const DEFAULT_REPLICATIONS: usize = 100;

/// Draws allowed per network replication before giving up on finding one
/// with enough supply.
const MAX_NETWORK_DRAWS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Segment,
    Edge,
    Network,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Segment => "segment",
            ExperimentKind::Edge => "edge",
            ExperimentKind::Network => "network",
        }
    }
}

/// One parameter combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridPoint {
    /// `m` demand and `n` supply points on `[0, length]`.
    Segment { m: u64, n: u64, length: f64 },
    /// Counts `mu L` and `lambda L` on a segment of length `length`.
    Edge { mu: f64, lambda: f64, length: f64 },
    /// Poisson points on a `degree`-regular lattice with `edge_count` edges.
    Network {
        degree: usize,
        edge_count: usize,
        mu: f64,
        lambda: f64,
        length: f64,
    },
}

impl GridPoint {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            GridPoint::Segment { .. } => ExperimentKind::Segment,
            GridPoint::Edge { .. } => ExperimentKind::Edge,
            GridPoint::Network { .. } => ExperimentKind::Network,
        }
    }

    fn length(&self) -> f64 {
        match *self {
            GridPoint::Segment { length, .. }
            | GridPoint::Edge { length, .. }
            | GridPoint::Network { length, .. } => length,
        }
    }

    /// Fixed point counts for segment and edge points.
    fn counts(&self) -> Result<Option<(u64, u64)>> {
        Ok(match *self {
            GridPoint::Segment { m, n, .. } => Some((m, n)),
            GridPoint::Edge { mu, lambda, length } => {
                let p = EdgeParams::new(mu, lambda, length)?;
                // Validates integrality and positivity of both counts.
                dispatch_estimate(&p)?;
                Some(((mu * length).round() as u64, (lambda * length).round() as u64))
            }
            GridPoint::Network { .. } => None,
        })
    }

    fn validate(&self) -> Result<()> {
        ensure!(
            self.length().is_finite() && self.length() > 0.0,
            InvalidInput,
            "length must be positive, got {}",
            self.length()
        );
        match *self {
            GridPoint::Segment { m, n, .. } => {
                ensure!(m >= 1, InvalidInput, "segment grid needs m >= 1");
                ensure!(n >= m, InvalidInput, "segment grid needs n >= m (m = {m}, n = {n})");
            }
            GridPoint::Edge { .. } => {
                self.counts()?;
            }
            GridPoint::Network {
                degree,
                edge_count,
                mu,
                lambda,
                length,
            } => {
                EdgeParams::new(mu, lambda, length)?;
                build_regular_network(degree, edge_count, length)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub grid: Vec<GridPoint>,
    pub replications: usize,
    pub master_seed: u64,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
    /// Search layers for the network estimator.
    pub kappa: usize,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, grid: Vec<GridPoint>, replications: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            kind,
            grid,
            replications,
            master_seed,
            workers: 1,
            kappa: crate::network::DEFAULT_KAPPA,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.replications >= 1, InvalidInput, "replications must be at least 1");
        ensure!(!self.grid.is_empty(), InvalidInput, "parameter grid is empty");
        ensure!(self.workers >= 1, InvalidInput, "workers must be at least 1");
        ensure!(self.kappa >= 1, InvalidInput, "kappa must be at least 1");
        for (i, p) in self.grid.iter().enumerate() {
            ensure!(
                p.kind() == self.kind,
                InvalidInput,
                "grid point {i} is a {} point in a {} experiment",
                p.kind().name(),
                self.kind.name()
            );
            p.validate()?;
        }
        Ok(())
    }
}

/// Estimator columns reported for every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Balanced,
    Closed,
    ClosedRaw,
    Recursive,
    RecursiveRaw,
    Baseline,
    Edge,
    Network,
}

impl Column {
    pub const ALL: [Column; 8] = [
        Column::Balanced,
        Column::Closed,
        Column::ClosedRaw,
        Column::Recursive,
        Column::RecursiveRaw,
        Column::Baseline,
        Column::Edge,
        Column::Network,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Balanced => "balanced",
            Column::Closed => "closed",
            Column::ClosedRaw => "closed_raw",
            Column::Recursive => "recursive",
            Column::RecursiveRaw => "recursive_raw",
            Column::Baseline => "baseline",
            Column::Edge => "edge",
            Column::Network => "network",
        }
    }

    pub fn parse(s: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Simulation statistics and estimator values for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub index: usize,
    pub point: GridPoint,
    /// Realised counts for segment and edge points.
    pub m: Option<u64>,
    pub n: Option<u64>,
    pub replications: usize,
    /// Network draws discarded for having no demand or too little supply.
    pub resampled: u64,
    pub sim_mean: f64,
    pub sim_std: f64,
    pub sim_sem: f64,
    estimates: [Option<f64>; 8],
}

impl SummaryRecord {
    pub fn estimate(&self, c: Column) -> Option<f64> {
        self.estimates[c as usize]
    }

    /// `(estimate - sim_mean) / sim_mean`.
    pub fn relative_error(&self, c: Column) -> Option<f64> {
        let e = self.estimate(c)?;
        (self.sim_mean > 0.0).then(|| (e - self.sim_mean) / self.sim_mean)
    }

    pub fn absolute_error(&self, c: Column) -> Option<f64> {
        self.estimate(c).map(|e| e - self.sim_mean)
    }

    /// Flat `(column, value)` view shared by the CSV and JSON writers.
    pub fn fields(&self) -> Vec<(String, Option<Field>)> {
        let (mut mu, mut lambda, mut degree, mut edges) = (None, None, None, None);
        match self.point {
            GridPoint::Segment { .. } => {}
            GridPoint::Edge { mu: a, lambda: b, .. } => {
                mu = Some(a);
                lambda = Some(b);
            }
            GridPoint::Network {
                degree: d,
                edge_count,
                mu: a,
                lambda: b,
                ..
            } => {
                mu = Some(a);
                lambda = Some(b);
                degree = Some(d as u64);
                edges = Some(edge_count as u64);
            }
        }
        let mut out = vec![
            ("kind".into(), Some(Field::Text(self.point.kind().name().into()))),
            ("index".into(), Some(Field::Int(self.index as u64))),
            ("m".into(), self.m.map(Field::Int)),
            ("n".into(), self.n.map(Field::Int)),
            ("length".into(), Some(Field::Real(self.point.length()))),
            ("mu".into(), mu.map(Field::Real)),
            ("lambda".into(), lambda.map(Field::Real)),
            ("degree".into(), degree.map(Field::Int)),
            ("edges".into(), edges.map(Field::Int)),
            ("reps".into(), Some(Field::Int(self.replications as u64))),
            ("resampled".into(), Some(Field::Int(self.resampled))),
            ("sim_mean".into(), Some(Field::Real(self.sim_mean))),
            ("sim_std".into(), Some(Field::Real(self.sim_std))),
            ("sim_sem".into(), Some(Field::Real(self.sim_sem))),
        ];
        for c in Column::ALL {
            out.push((format!("est_{}", c.name()), self.estimate(c).map(Field::Real)));
        }
        for c in Column::ALL {
            out.push((format!("relerr_{}", c.name()), self.relative_error(c).map(Field::Real)));
        }
        for c in Column::ALL {
            out.push((format!("abserr_{}", c.name()), self.absolute_error(c).map(Field::Real)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Text(String),
    Int(u64),
    Real(f64),
}

impl Field {
    fn to_text(&self) -> String {
        match self {
            Field::Text(s) => s.clone(),
            Field::Int(i) => i.to_string(),
            Field::Real(x) => x.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Field::Text(s) => Value::String(s.clone()),
            Field::Int(i) => Value::from(*i),
            Field::Real(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
        }
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the RNG stream for one replication.
pub fn stream_seed(master_seed: u64, grid_index: usize, replication: usize) -> u64 {
    mix(mix(mix(master_seed) ^ grid_index as u64) ^ replication as u64)
}

fn estimates_for(point: &GridPoint, counts: Option<(u64, u64)>, kappa: usize) -> Result<[Option<f64>; 8]> {
    let mut est = [None; 8];
    let length = point.length();
    if let Some((m, n)) = counts {
        if n == m {
            est[Column::Balanced as usize] = Some(balanced_estimate(n, length)?.value);
        } else {
            est[Column::Closed as usize] = Some(closed_unbalanced_estimate(m, n, length, true)?.value);
            est[Column::ClosedRaw as usize] = Some(closed_unbalanced_estimate(m, n, length, false)?.value);
            est[Column::Recursive as usize] = Some(recursive_estimate(m, n, length, true)?.value);
            est[Column::RecursiveRaw as usize] = Some(recursive_estimate(m, n, length, false)?.value);
        }
        est[Column::Baseline as usize] = Some(baseline_estimate(m, n, length)?.value);
    }
    match *point {
        GridPoint::Segment { .. } => {}
        GridPoint::Edge { mu, lambda, length } => {
            est[Column::Edge as usize] = Some(dispatch_estimate(&EdgeParams::new(mu, lambda, length)?)?.value);
        }
        GridPoint::Network {
            degree,
            mu,
            lambda,
            length,
            ..
        } => {
            let parts = network_estimate(degree, mu, lambda, length, kappa)?;
            est[Column::Edge as usize] = Some(parts.local);
            est[Column::Network as usize] = Some(parts.total);
        }
    }
    Ok(est)
}

/// Mean matching distance of one replication and the number of discarded
/// network draws.
fn replicate(point: &GridPoint, counts: Option<(u64, u64)>, seed: u64) -> Result<(f64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *point {
        GridPoint::Segment { length, .. } | GridPoint::Edge { length, .. } => {
            let (m, n) = counts.expect("segment and edge points have counts");
            let inst = Instance1D::random(m as usize, n as usize, length, &mut rng)?;
            Ok((optimal_match_1d(&inst).mean_distance, 0))
        }
        GridPoint::Network {
            degree,
            edge_count,
            mu,
            lambda,
            length,
        } => {
            let net = build_regular_network(degree, edge_count, length)?;
            for draws in 0..MAX_NETWORK_DRAWS {
                let inst = sample_instance(&net, mu, lambda, &mut rng)?;
                let (dm, ds) = (inst.total_demand(), inst.total_supply());
                if dm == 0 || dm > ds {
                    continue;
                }
                return Ok((exact_network_match(&net, &inst)?.mean_distance, draws));
            }
            Err(Error::Infeasible(format!(
                "no draw with enough supply after {MAX_NETWORK_DRAWS} attempts"
            )))
        }
    }
}

fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std, std / k.sqrt())
}

/// Runs every replication of every grid point and summarises them in grid
/// order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SummaryRecord>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {} workers: {e}", cfg.workers)))?;
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &ExperimentConfig) -> Result<Vec<SummaryRecord>> {
    let counts: Vec<Option<(u64, u64)>> = cfg
        .grid
        .iter()
        .map(|p| p.counts())
        .collect::<Result<_>>()?;
    let estimates: Vec<[Option<f64>; 8]> = cfg
        .grid
        .par_iter()
        .zip(&counts)
        .map(|(p, &c)| estimates_for(p, c, cfg.kappa))
        .collect::<Result<_>>()?;

    let reps = cfg.replications;
    let outcomes: Vec<(f64, u64)> = (0..cfg.grid.len() * reps)
        .into_par_iter()
        .map(|task| {
            let (g, r) = (task / reps, task % reps);
            replicate(&cfg.grid[g], counts[g], stream_seed(cfg.master_seed, g, r))
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(cfg.grid.len());
    for (g, point) in cfg.grid.iter().enumerate() {
        let chunk = &outcomes[g * reps..(g + 1) * reps];
        let values: Vec<f64> = chunk.iter().map(|o| o.0).collect();
        let resampled = chunk.iter().map(|o| o.1).sum();
        if resampled > 0 {
            info!("grid point {g}: resampled {resampled} network draws");
        }
        let (sim_mean, sim_std, sim_sem) = summarize(&values);
        records.push(SummaryRecord {
            index: g,
            point: *point,
            m: counts[g].map(|c| c.0),
            n: counts[g].map(|c| c.1),
            replications: reps,
            resampled,
            sim_mean,
            sim_std,
            sim_sem,
            estimates: estimates[g],
        });
    }
    Ok(records)
}

/// Accuracy of one estimator over a slice of records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub column: Column,
    /// Records where the estimator applies.
    pub count: usize,
    pub mean_abs_relative_error: f64,
    pub max_abs_relative_error: f64,
    /// Mean signed relative error.
    pub mean_relative_error: f64,
}

/// Mean absolute relative error of every estimator that applies to at least
/// one record.
pub fn relative_error_table(records: &[SummaryRecord]) -> Result<Vec<ErrorSummary>> {
    ensure!(!records.is_empty(), InvalidInput, "no records to summarise");
    let mut out = Vec::new();
    for c in Column::ALL {
        let errs: Vec<f64> = records.iter().filter_map(|r| r.relative_error(c)).collect();
        if errs.is_empty() {
            continue;
        }
        let k = errs.len() as f64;
        out.push(ErrorSummary {
            column: c,
            count: errs.len(),
            mean_abs_relative_error: errs.iter().map(|e| e.abs()).sum::<f64>() / k,
            max_abs_relative_error: errs.iter().fold(0.0, |a, e| a.max(e.abs())),
            mean_relative_error: errs.iter().sum::<f64>() / k,
        });
    }
    Ok(out)
}

/// Looks up one estimator in a [`relative_error_table`] result.
pub fn mean_abs_relative_error(records: &[SummaryRecord], c: Column) -> Option<f64> {
    relative_error_table(records)
        .ok()?
        .into_iter()
        .find(|s| s.column == c)
        .map(|s| s.mean_abs_relative_error)
}

pub fn write_csv<W: Write>(records: &[SummaryRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = records.first() {
        w.write_record(first.fields().iter().map(|(k, _)| k.as_str()))?;
    }
    for r in records {
        w.write_record(
            r.fields()
                .iter()
                .map(|(_, v)| v.as_ref().map(Field::to_text).unwrap_or_default()),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[SummaryRecord], mut out: W) -> Result<()> {
    let rows: Vec<Value> = records
        .iter()
        .map(|r| {
            let map: Map<String, Value> = r
                .fields()
                .into_iter()
                .map(|(k, v)| (k, v.as_ref().map_or(Value::Null, Field::to_json)))
                .collect();
            Value::Object(map)
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn csv_string(records: &[SummaryRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
