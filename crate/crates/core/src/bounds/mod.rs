//! Closed-form error and complexity bounds, plus Monte Carlo estimators for
//! the Gaussian quantities they control.
//!
//! Notation: `N = Σ n_d`, `n* = max n_d`, and for a rank sum `r`
//!
//! ```text
//! p(r) = C(r−1, D−1) · 3^{r n*},   q(r) = r n* + (r/D)^D
//! ```
//!
//! where `C(r−1, D−1)` counts compositions of `r` into `D` positive parts.

pub mod net;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decomp::sigma_map;
use crate::error::{Error, Result};
use crate::norms::{operator_norm_with, AlsOptions};
use crate::rng::derive_seed;
use crate::rpp::omega_star;
use crate::tensor::{gaussian_tensor, Shape};

pub use net::{build_net, CoveringNet};

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub variant: Option<String>,
    pub inputs: BTreeMap<String, Value>,
    pub value: f64,
    pub intermediates: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(name: &str, variant: Option<&str>, value: f64) -> Self {
        Self {
            name: name.into(),
            variant: variant.map(Into::into),
            inputs: BTreeMap::new(),
            value,
            intermediates: BTreeMap::new(),
        }
    }

    fn input(mut self, k: &str, v: Value) -> Self {
        self.inputs.insert(k.into(), v);
        self
    }

    fn inter(mut self, k: &str, v: f64) -> Self {
        self.intermediates.insert(k.into(), v);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuclearVariant {
    /// `4√π (Σ√n_d) / m · ‖X♯‖_*`, the formula as printed.
    Stated,
    /// `2√(2π) (Σ√n_d) / √m · ‖X♯‖_*`, recomposed from the proof steps.
    Proof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DudleyForm {
    /// Integral-approximated printed expression with `p, q` at one rank sum.
    Closed,
    /// Per-rank sum before the integral approximation.
    Summed,
}

fn parse_err(what: &str, s: &str) -> Error {
    Error::InvalidArgument(format!("unknown {what} {s:?}"))
}

impl std::str::FromStr for NuclearVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stated" => Ok(Self::Stated),
            "proof" => Ok(Self::Proof),
            _ => Err(parse_err("variant", s)),
        }
    }
}

impl std::str::FromStr for DudleyForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Self::Closed),
            "summed" => Ok(Self::Summed),
            _ => Err(parse_err("form", s)),
        }
    }
}

pub fn sqrt_dim_sum(dims: &[usize]) -> f64 {
    dims.iter().map(|&n| (n as f64).sqrt()).sum()
}

/// Recovery-error bound for sum-of-nuclear-norms minimization.
pub fn bound_nuclear(dims: &[usize], m: usize, nuclear_value: f64, variant: NuclearVariant) -> Result<BoundReport> {
    if m < 1 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if !(nuclear_value >= 0.0 && nuclear_value.is_finite()) {
        return Err(Error::InvalidArgument(format!("nuclear value must be finite and ≥ 0, got {nuclear_value}")));
    }
    let s = sqrt_dim_sum(dims);
    let mf = m as f64;
    let (constant, denom, tag) = match variant {
        NuclearVariant::Stated => (4.0 * PI.sqrt(), mf, "stated"),
        NuclearVariant::Proof => (2.0 * (2.0 * PI).sqrt(), mf.sqrt(), "proof"),
    };
    let value = constant * s / denom * nuclear_value;
    Ok(BoundReport::new("errnuc", Some(tag), value)
        .input("dims", json!(dims))
        .input("m", json!(m))
        .input("nuclear_value", json!(nuclear_value))
        .inter("sqrt_dim_sum", s)
        .inter("constant", constant)
        .inter("denominator", denom))
}

/// Upper bound `Σ_d √n_d` on the expected operator norm of a Gaussian tensor.
pub fn expected_opnorm_bound(dims: &[usize]) -> f64 {
    sqrt_dim_sum(dims)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonteCarlo {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

fn summarize(samples: &[f64]) -> MonteCarlo {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    MonteCarlo { mean, stderr: (var / n).sqrt(), trials: samples.len() }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed for a standard error".into()));
    }
    Ok(())
}

/// Monte Carlo estimate of `E‖G‖` for standard Gaussian `G`.
pub fn mc_expected_opnorm(dims: &[usize], trials: usize, seed: u64) -> Result<MonteCarlo> {
    check_trials(trials)?;
    let shape = Shape::new(dims.to_vec())?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = gaussian_tensor(shape.clone(), derive_seed(seed, &[t as u64]));
            let opts = AlsOptions { seed: derive_seed(seed, &[t as u64, 1]), ..Default::default() };
            operator_norm_with(&g, &opts)
        })
        .collect();
    Ok(summarize(&samples))
}

/// Gaussian mean width of the nuclear ball of radius `t`, `2t·E‖G‖`.
pub fn mean_width_nuclear_mc(dims: &[usize], t: f64, trials: usize, seed: u64) -> Result<MonteCarlo> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be ≥ 0, got {t}")));
    }
    let mc = mc_expected_opnorm(dims, trials, seed)?;
    Ok(MonteCarlo { mean: 2.0 * t * mc.mean, stderr: 2.0 * t * mc.stderr, trials })
}

/// Monte Carlo estimate of `E ω*_α(σ(G))`.
pub fn mc_expected_omega_star(dims: &[usize], alpha: f64, trials: usize, seed: u64) -> Result<MonteCarlo> {
    check_trials(trials)?;
    let shape = Shape::new(dims.to_vec())?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| omega_star(&sigma_map(&gaussian_tensor(shape.clone(), derive_seed(seed, &[t as u64]))).entries, alpha))
        .collect();
    Ok(summarize(&samples))
}

/// `ln C(n, k)`, `−∞` when `k > n`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
}

fn ln_p(r: usize, order: usize, n_star: usize) -> f64 {
    ln_binomial(r - 1, order - 1) + (r * n_star) as f64 * 3f64.ln()
}

fn q_of(r: usize, order: usize, n_star: usize) -> f64 {
    (r * n_star) as f64 + (r as f64 / order as f64).powi(order as i32)
}

/// `√ln p` with `p` clamped to at least 1 (no compositions gives an empty
/// term rather than `√−∞`).
fn sqrt_ln_p(r: usize, order: usize, n_star: usize) -> f64 {
    ln_p(r, order, n_star).max(0.0).sqrt()
}

fn check_dudley(n: usize, order: usize, alpha: f64) -> Result<()> {
    if n < 1 || order < 1 {
        return Err(Error::InvalidArgument("N and D must be at least 1".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be ≥ 0, got {alpha}")));
    }
    Ok(())
}

/// The closed-form bracket shared by the dual and recovery bounds, without
/// the trailing `−N(1+N)/2`.
fn closed_bracket(n: usize, order: usize, n_star: usize, r: usize) -> (f64, f64, f64) {
    let nf = n as f64;
    let d = order as f64;
    let dp1 = order as i32 + 1;
    let slp = sqrt_ln_p(r, order, n_star);
    let q = q_of(r, order, n_star);
    let first = slp * ((1.0 + nf).powi(dp1) - 2f64.powi(dp1)) / (d + 1.0);
    let inner = nf + (nf * (1.0 + nf).powi(order as i32) - 2f64.powi(order as i32)) / d
        + (2f64.powi(dp1) - (1.0 + nf).powi(dp1)) / (d * (d + 1.0));
    let second = 0.25 * (PI * q).sqrt() * inner;
    (first + second, slp, q)
}

/// Dudley-type bound on `E ω*_α(σ(G))`.
///
/// `Summed` evaluates `8√2·α·Σ_{r=1..N} [√ln p(r)·(1+r)^D + ¼√(π q(r))·(1 + rD(1+r)^{D−1})] − Σ_r r`;
/// `Closed` evaluates the integral approximation with `p, q` taken at
/// `r_param` (default `N`) and the trailing `−N(1+N)/2` outside the `α`
/// factor, as printed.
pub fn bound_rpp_dual(n: usize, order: usize, n_star: usize, alpha: f64, form: DudleyForm, r_param: Option<usize>) -> Result<BoundReport> {
    check_dudley(n, order, alpha)?;
    let c = 8.0 * 2f64.sqrt();
    let tail = (n * (n + 1)) as f64 / 2.0;
    let report = match form {
        DudleyForm::Summed => {
            let d = order as i32;
            let sum: f64 = (1..=n)
                .map(|r| {
                    let rf = r as f64;
                    sqrt_ln_p(r, order, n_star) * (1.0 + rf).powi(d)
                        + 0.25 * (PI * q_of(r, order, n_star)).sqrt() * (1.0 + rf * order as f64 * (1.0 + rf).powi(d - 1))
                })
                .sum();
            BoundReport::new("lemmaB", Some("summed"), c * alpha * sum - tail).inter("dudley_sum", sum)
        }
        DudleyForm::Closed => {
            let r = r_param.unwrap_or(n);
            if r < 1 {
                return Err(Error::InvalidArgument("r_param must be at least 1".into()));
            }
            let (bracket, slp, q) = closed_bracket(n, order, n_star, r);
            BoundReport::new("lemmaB", Some("closed"), c * alpha * bracket - tail)
                .input("r_param", json!(r))
                .inter("bracket", bracket)
                .inter("sqrt_ln_p", slp)
                .inter("q", q)
        }
    };
    Ok(report
        .input("N", json!(n))
        .input("D", json!(order))
        .input("n_star", json!(n_star))
        .input("alpha", json!(alpha))
        .inter("constant", c)
        .inter("tail", tail))
}

/// Bound on `E‖X̂ − X♯‖_F` for the `ω**_α ∘ σ` program, given the caller's
/// value `omega = ω**_α(σ(X♯))`.
///
/// `Closed` is `(64α√π/√m)·[bracket − N(1+N)/2]·omega` with `p, q` at
/// `r_param`; `Summed` is `√(2π)/√m · 4 · bound_rpp_dual(Summed) · omega`.
#[allow(clippy::too_many_arguments)]
pub fn bound_rpp_recovery(
    n: usize,
    order: usize,
    n_star: usize,
    alpha: f64,
    m: usize,
    r_param: Option<usize>,
    form: DudleyForm,
    omega: f64,
) -> Result<BoundReport> {
    check_dudley(n, order, alpha)?;
    if m < 1 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let sm = (m as f64).sqrt();
    let report = match form {
        DudleyForm::Closed => {
            let r = r_param.unwrap_or(n);
            if r < 1 {
                return Err(Error::InvalidArgument("r_param must be at least 1".into()));
            }
            let (bracket, slp, q) = closed_bracket(n, order, n_star, r);
            let tail = (n * (n + 1)) as f64 / 2.0;
            let prefactor = 64.0 * alpha * PI.sqrt() / sm;
            BoundReport::new("errrpp", Some("closed"), prefactor * (bracket - tail) * omega)
                .input("r_param", json!(r))
                .inter("prefactor", prefactor)
                .inter("bracket", bracket)
                .inter("sqrt_ln_p", slp)
                .inter("q", q)
        }
        DudleyForm::Summed => {
            let dual = bound_rpp_dual(n, order, n_star, alpha, DudleyForm::Summed, None)?;
            let prefactor = (2.0 * PI).sqrt() / sm * 4.0;
            BoundReport::new("errrpp", Some("summed"), prefactor * dual.value * omega)
                .inter("prefactor", prefactor)
                .inter("dual_summed", dual.value)
        }
    };
    Ok(report
        .input("N", json!(n))
        .input("D", json!(order))
        .input("n_star", json!(n_star))
        .input("alpha", json!(alpha))
        .input("m", json!(m))
        .input("omega", json!(omega)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoveringSpec {
    pub alpha: f64,
    pub epsilon: f64,
    /// Sum of the Tucker ranks.
    pub r: usize,
    pub dims: Vec<usize>,
    /// Per-mode ranks summing to `r`, when a single stratum is meant.
    pub partition: Option<Vec<usize>>,
}

impl CoveringSpec {
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// `ε′ = ε + α((1 + rε)^D − 1)`.
    pub fn epsilon_prime(&self) -> f64 {
        self.epsilon + self.alpha * ((1.0 + self.r as f64 * self.epsilon).powi(self.order() as i32) - 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.r < 1 {
            return Err(Error::InvalidArgument("rank sum r must be at least 1".into()));
        }
        Shape::new(self.dims.clone())?;
        if self.r < self.order() {
            return Err(Error::InvalidArgument(format!(
                "rank sum {} cannot be split into {} positive per-mode ranks",
                self.r,
                self.order()
            )));
        }
        if let Some(nu) = &self.partition {
            if nu.len() != self.order() || nu.iter().sum::<usize>() != self.r || nu.contains(&0) {
                return Err(Error::InvalidArgument(format!("partition {nu:?} must have {} positive parts summing to {}", self.order(), self.r)));
            }
            if let Some(d) = nu.iter().zip(&self.dims).position(|(v, n)| v > n) {
                return Err(Error::RankExceedsDimension { mode: d, rank: nu[d], dim: self.dims[d] });
            }
        }
        Ok(())
    }
}

/// Log of the covering-count bound
/// `C(r−1, D−1)·(3/α)^{r n*}·(3α/ε)^{r n* + (r/D)^D}` and `ε′`.
pub fn covering_bound(spec: &CoveringSpec) -> Result<BoundReport> {
    spec.validate()?;
    let order = spec.order();
    let n_star = *spec.dims.iter().max().expect("nonempty dims");
    let rn = (spec.r * n_star) as f64;
    let extra = (spec.r as f64 / order as f64).powi(order as i32);
    let ln_c = ln_binomial(spec.r - 1, order - 1);
    let log_count = ln_c + rn * (3.0 / spec.alpha).ln() + (rn + extra) * (3.0 * spec.alpha / spec.epsilon).ln();
    let mut report = BoundReport::new("covering", None, log_count)
        .input("alpha", json!(spec.alpha))
        .input("epsilon", json!(spec.epsilon))
        .input("r", json!(spec.r))
        .input("dims", json!(spec.dims))
        .inter("log_count", log_count)
        .inter("count", log_count.exp())
        .inter("epsilon_prime", spec.epsilon_prime())
        .inter("ln_compositions", ln_c)
        .inter("r_n_star", rn)
        .inter("core_exponent", extra);
    if let Some(nu) = &spec.partition {
        // the single-stratum count before maximizing over partitions
        let stiefel: usize = nu.iter().zip(&spec.dims).map(|(v, n)| v * n).sum();
        let core: usize = nu.iter().product();
        let ln_stratum = stiefel as f64 * (9.0 / spec.epsilon).ln() + core as f64 * (3.0 * spec.alpha / spec.epsilon).ln();
        report = report.input("partition", json!(nu)).inter("log_stratum_count", ln_stratum);
    }
    Ok(report)
}
