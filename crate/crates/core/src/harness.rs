//! Seeded recovery sweeps and their CSV form.
//!
//! Trial `(m, t)` uses seed `derive_seed(base_seed, [m, t])`; the ground
//! truth comes from `derive_seed(seed, [0])` and the ensemble from
//! `derive_seed(seed, [1])`, so rows can be computed in any order.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_nuclear, NuclearVariant};
use crate::decomp::{random_tucker, sigma_map};
use crate::error::{Error, Result};
use crate::norms::nuclear_avg;
use crate::rng::derive_seed;
use crate::rpp::omega_biconj;
use crate::sensing::make_ensemble;
use crate::solvers::{recover_rpp, recover_sum_nuclear, SolverConfig, SolverKind};
use crate::tensor::Shape;

pub const CSV_HEADER: [&str; 14] = [
    "seed",
    "dims",
    "ranks",
    "m",
    "solver",
    "iterations",
    "converged",
    "rel_error",
    "nuclear_avg",
    "bound_stated",
    "bound_proof",
    "alpha",
    "omega_value",
    "wallclock_ms",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    /// Tucker ranks of the ground truth; empty or absent means full rank.
    #[serde(default)]
    pub ranks: Vec<usize>,
    pub m_values: Vec<usize>,
    pub solver: SolverKind,
    /// RPP radius as a multiple of `‖X♯‖_F`.
    pub alpha_multiplier: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub output: Option<String>,
    pub solver_config: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: vec![4, 4, 4],
            ranks: vec![1, 1, 1],
            m_values: vec![10, 20, 30, 40, 50],
            solver: SolverKind::Sumnuc,
            alpha_multiplier: 2.0,
            trials: 20,
            base_seed: 2024,
            output: None,
            solver_config: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Shape> {
        let shape = Shape::new(self.dims.clone())?;
        if self.m_values.is_empty() {
            return Err(Error::InvalidArgument("m_values must not be empty".into()));
        }
        if self.m_values.contains(&0) {
            return Err(Error::InvalidArgument("every m must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if !(self.alpha_multiplier >= 1.0 && self.alpha_multiplier.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha_multiplier must be ≥ 1, got {}", self.alpha_multiplier)));
        }
        if !self.ranks.is_empty() && self.ranks.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!("{} ranks for {} modes", self.ranks.len(), self.dims.len())));
        }
        Ok(shape)
    }

    pub fn effective_ranks(&self) -> Vec<usize> {
        if self.ranks.is_empty() {
            self.dims.clone()
        } else {
            self.ranks.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub m: usize,
    pub solver: SolverKind,
    pub iterations: usize,
    pub converged: bool,
    pub rel_error: f64,
    pub nuclear_avg: f64,
    pub bound_stated: f64,
    pub bound_proof: f64,
    pub alpha: Option<f64>,
    pub omega_value: Option<f64>,
    pub wallclock_ms: u64,
    /// `‖X♯‖_F`; not part of the CSV.
    #[serde(skip)]
    pub truth_norm: Option<f64>,
}

impl ExperimentRow {
    /// `bound_proof / ‖X♯‖_F`, when the truth norm is known.
    pub fn normalized_bound_proof(&self) -> Option<f64> {
        self.truth_norm.map(|n| self.bound_proof / n)
    }
}

fn run_trial(cfg: &ExperimentConfig, shape: &Shape, ranks: &[usize], m: usize, trial: usize) -> Result<ExperimentRow> {
    let start = Instant::now();
    let seed = derive_seed(cfg.base_seed, &[m as u64, trial as u64]);
    let truth = random_tucker(shape, ranks, derive_seed(seed, &[0]))?;
    let ensemble = make_ensemble(shape, m, derive_seed(seed, &[1]))?;
    let y = ensemble.forward(&truth)?;
    let nuc = nuclear_avg(&truth);
    let xnorm = truth.frobenius();

    let (alpha, omega_value) = match cfg.solver {
        SolverKind::Sumnuc => (None, None),
        SolverKind::Rpp => {
            let alpha = cfg.alpha_multiplier * xnorm;
            let omega = omega_biconj(&sigma_map(&truth).entries, alpha, crate::rpp::DEFAULT_VALUE_TOL)?.value;
            (Some(alpha), Some(omega))
        }
    };
    let outcome = match cfg.solver {
        SolverKind::Sumnuc => recover_sum_nuclear(&ensemble, &y, &cfg.solver_config),
        SolverKind::Rpp => recover_rpp(&ensemble, &y, alpha.expect("rpp alpha"), &cfg.solver_config),
    };
    let (iterations, converged, rel_error) = match outcome {
        Ok(r) => (r.iterations, r.converged, r.relative_error(&truth)?),
        Err(_) => (0, false, f64::NAN),
    };
    Ok(ExperimentRow {
        seed,
        dims: cfg.dims.clone(),
        ranks: ranks.to_vec(),
        m,
        solver: cfg.solver.clone(),
        iterations,
        converged,
        rel_error,
        nuclear_avg: nuc,
        bound_stated: bound_nuclear(&cfg.dims, m, nuc, NuclearVariant::Stated)?.value,
        bound_proof: bound_nuclear(&cfg.dims, m, nuc, NuclearVariant::Proof)?.value,
        alpha,
        omega_value,
        wallclock_ms: start.elapsed().as_millis() as u64,
        truth_norm: Some(xnorm),
    })
}

/// All `(m, trial)` rows, ordered by `m` as listed and then by trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    let shape = cfg.validate()?;
    let ranks = cfg.effective_ranks();
    let jobs: Vec<(usize, usize)> = cfg.m_values.iter().flat_map(|&m| (0..cfg.trials).map(move |t| (m, t))).collect();
    jobs.par_iter().map(|&(m, t)| run_trial(cfg, &shape, &ranks, m, t)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct MSummary {
    pub m: usize,
    pub trials: usize,
    pub converged: usize,
    pub median_rel_error: f64,
    pub mean_rel_error: f64,
    pub mean_normalized_bound_proof: Option<f64>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-`m` statistics in order of first appearance.
pub fn summarize(rows: &[ExperimentRow]) -> Vec<MSummary> {
    let mut ms: Vec<usize> = Vec::new();
    for r in rows {
        if !ms.contains(&r.m) {
            ms.push(r.m);
        }
    }
    ms.into_iter()
        .map(|m| {
            let group: Vec<&ExperimentRow> = rows.iter().filter(|r| r.m == m).collect();
            let mut errs: Vec<f64> = group.iter().map(|r| r.rel_error).collect();
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let norm: Option<Vec<f64>> = group.iter().map(|r| r.normalized_bound_proof()).collect();
            MSummary {
                m,
                trials: group.len(),
                converged: group.iter().filter(|r| r.converged).count(),
                median_rel_error: median(&mut errs),
                mean_rel_error: mean,
                mean_normalized_bound_proof: norm.map(|v| v.iter().sum::<f64>() / v.len() as f64),
            }
        })
        .collect()
}

fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

fn join_dims(d: &[usize]) -> String {
    d.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")
}

fn split_dims(s: &str) -> Result<Vec<usize>> {
    s.split('x').map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("dims {s:?}: {e}")))).collect()
}

fn row_record(r: &ExperimentRow) -> [String; 14] {
    [
        r.seed.to_string(),
        join_dims(&r.dims),
        join_dims(&r.ranks),
        r.m.to_string(),
        r.solver.to_string(),
        r.iterations.to_string(),
        r.converged.to_string(),
        fmt_float(r.rel_error),
        fmt_float(r.nuclear_avg),
        fmt_float(r.bound_stated),
        fmt_float(r.bound_proof),
        r.alpha.map(fmt_float).unwrap_or_default(),
        r.omega_value.map(fmt_float).unwrap_or_default(),
        r.wallclock_ms.to_string(),
    ]
}

pub fn write_csv(rows: &[ExperimentRow], w: impl Write) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in rows {
        wr.write_record(row_record(r))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ExperimentRow], path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(f))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).ok_or_else(|| Error::Parse(format!("missing column {}", CSV_HEADER[i])))?;
    raw.parse::<T>().map_err(|e| Error::Parse(format!("{} {raw:?}: {e}", CSV_HEADER[i])))
}

fn optional_float(rec: &csv::StringRecord, i: usize) -> Result<Option<f64>> {
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => field(rec, i).map(Some),
    }
}

pub fn read_csv(r: impl Read) -> Result<Vec<ExperimentRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ExperimentRow {
                seed: field(&rec, 0)?,
                dims: split_dims(rec.get(1).unwrap_or_default())?,
                ranks: split_dims(rec.get(2).unwrap_or_default())?,
                m: field(&rec, 3)?,
                solver: field(&rec, 4)?,
                iterations: field(&rec, 5)?,
                converged: field(&rec, 6)?,
                rel_error: field(&rec, 7)?,
                nuclear_avg: field(&rec, 8)?,
                bound_stated: field(&rec, 9)?,
                bound_proof: field(&rec, 10)?,
                alpha: optional_float(&rec, 11)?,
                omega_value: optional_float(&rec, 12)?,
                wallclock_ms: field(&rec, 13)?,
                truth_norm: None,
            })
        })
        .collect()
}
