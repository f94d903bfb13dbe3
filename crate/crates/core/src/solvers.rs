//! Recovery from `y = A(X♯)` by ADMM on the consensus splitting
//!
//! ```text
//! minimize f(Z_0, …, Z_{D−1})  subject to  Z_d = X,  A(X) = y
//! ```
//!
//! `X` is kept exactly feasible: its update is the Euclidean projection of
//! `mean_d (Z_d − W_d/ρ)` onto the affine set `{A(X) = y}`, computed once
//! from a thin SVD of the measurement matrix. The `Z` updates are proximal
//! steps on the mode unfoldings:
//!
//! - sum of nuclear norms: singular-value soft-thresholding per mode
//! - `ω**_α ∘ σ`: a joint prox on the concatenated, `1/√D`-scaled spectra

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, thin_svd};
use crate::rpp::{omega_biconj, prox_omega_biconj};
use crate::sensing::{Measurements, SensingEnsemble};
use crate::tensor::{matricize, tensorize, DenseTensor, Matricized, Shape};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial penalty ρ.
    pub rho: f64,
    /// Double / halve ρ when the primal and dual residuals drift apart by 10×.
    pub adaptive_rho: bool,
    /// Accuracy requested from each `ω**_α` prox evaluation.
    pub prox_tol: f64,
    /// Radius for the RPP program when none is passed explicitly.
    pub alpha: Option<f64>,
    /// Recorded in reports only; the initialization `A*(y)/m` is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            rho: 1.0,
            adaptive_rho: true,
            prox_tol: 1e-8,
            alpha: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.prox_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {}", self.rho)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[serde(alias = "sum_nuclear")]
    Sumnuc,
    Rpp,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Sumnuc => "sumnuc",
            SolverKind::Rpp => "rpp",
        })
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sumnuc" | "sum_nuclear" => Ok(SolverKind::Sumnuc),
            "rpp" => Ok(SolverKind::Rpp),
            other => Err(Error::InvalidArgument(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub estimate: DenseTensor,
    pub iterations: usize,
    /// `‖A(X̂) − y‖₂`.
    pub feasibility_residual: f64,
    pub objective: f64,
    pub objective_history: Vec<f64>,
    /// Consensus residual `(Σ_d ‖X − Z_d‖²)^{1/2}` per iteration.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `y` is not in the range of `A`; the estimate is a least-squares point.
    pub inconsistent: bool,
    /// Consensus residual failed to be nonincreasing after the burn-in window.
    pub trend_warning: bool,
    pub final_rho: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryDiagnostics {
    pub iterations: usize,
    pub feasibility_residual: f64,
    pub objective: f64,
    pub converged: bool,
    pub inconsistent: bool,
    pub trend_warning: bool,
    pub final_rho: f64,
    pub residual_history: Vec<f64>,
    pub objective_history: Vec<Option<f64>>,
}

impl RecoveryResult {
    pub fn diagnostics(&self) -> RecoveryDiagnostics {
        RecoveryDiagnostics {
            iterations: self.iterations,
            feasibility_residual: self.feasibility_residual,
            objective: self.objective,
            converged: self.converged,
            inconsistent: self.inconsistent,
            trend_warning: self.trend_warning,
            final_rho: self.final_rho,
            residual_history: self.residual_history.clone(),
            objective_history: self.objective_history.iter().map(|v| v.is_finite().then_some(*v)).collect(),
        }
    }

    pub fn relative_error(&self, truth: &DenseTensor) -> Result<f64> {
        let n = truth.frobenius();
        let d = self.estimate.sub(truth)?.frobenius();
        Ok(if n > 0.0 { d / n } else { d })
    }
}

const BURN_IN: usize = 50;

/// Euclidean projection onto `{x : A x = y}` (least squares when inconsistent).
struct AffineProjector {
    a: DMatrix<f64>,
    y: DVector<f64>,
    v: DMatrix<f64>,
    ut: DMatrix<f64>,
    s_inv: DVector<f64>,
    inconsistent: bool,
}

impl AffineProjector {
    fn new(a: DMatrix<f64>, y: &[f64]) -> Self {
        let (u, s, vt) = thin_svd(&a);
        let smax = s.first().copied().unwrap_or(0.0);
        let cutoff = smax * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
        let k = s.iter().take_while(|&&v| v > cutoff).count();
        let u = u.columns(0, k).into_owned();
        let v = vt.rows(0, k).transpose();
        let s_inv = DVector::from_iterator(k, s[..k].iter().map(|v| 1.0 / v));
        let y = DVector::from_column_slice(y);
        let off_range = &y - &u * (u.transpose() * &y);
        let inconsistent = off_range.norm() > 1e-9 * y.norm().max(f64::MIN_POSITIVE);
        Self { a, y, v, ut: u.transpose(), s_inv, inconsistent }
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        let r = &self.a * &x - &self.y;
        let c = (&self.ut * r).component_mul(&self.s_inv);
        (x - &self.v * c).as_slice().to_vec()
    }

    fn residual(&self, x: &[f64]) -> f64 {
        (&self.a * DVector::from_column_slice(x) - &self.y).norm()
    }

    /// Minimum-norm point of the affine set.
    fn min_norm_point(&self) -> Vec<f64> {
        let c = (&self.ut * &self.y).component_mul(&self.s_inv);
        (&self.v * c).as_slice().to_vec()
    }
}

struct Unfolding {
    u: DMatrix<f64>,
    s: Vec<f64>,
    vt: DMatrix<f64>,
}

fn unfold_svd(x: &DenseTensor, mode: usize) -> Unfolding {
    let m = matricize(x, mode).expect("mode in range");
    let (u, s, vt) = thin_svd(&m.matrix);
    Unfolding { u, s, vt }
}

fn fold(parts: &Unfolding, s: &[f64], mode: usize, shape: &Shape) -> DenseTensor {
    let mut us = parts.u.clone();
    for (j, sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(*sj);
    }
    let matrix = us * &parts.vt;
    tensorize(&Matricized { mode, matrix }, shape).expect("consistent shape")
}

fn sum_nuclear(x: &DenseTensor) -> f64 {
    (0..x.shape().order())
        .map(|d| singular_values(&matricize(x, d).expect("mode").matrix).iter().sum::<f64>())
        .sum()
}

/// The proximal step applied to `V_d = X + W_d/ρ` for all modes at once.
trait ZStep: Sync {
    fn apply(&self, v: &[DenseTensor], rho: f64) -> Result<Vec<DenseTensor>>;
    fn objective(&self, x: &DenseTensor) -> f64;
}

struct NuclearStep;

impl ZStep for NuclearStep {
    fn apply(&self, v: &[DenseTensor], rho: f64) -> Result<Vec<DenseTensor>> {
        let thr = 1.0 / rho;
        Ok(v.par_iter()
            .enumerate()
            .map(|(d, vd)| {
                let parts = unfold_svd(vd, d);
                let shrunk: Vec<f64> = parts.s.iter().map(|s| (s - thr).max(0.0)).collect();
                fold(&parts, &shrunk, d, vd.shape())
            })
            .collect())
    }

    fn objective(&self, x: &DenseTensor) -> f64 {
        sum_nuclear(x)
    }
}

struct RppStep {
    alpha: f64,
    prox_tol: f64,
}

impl ZStep for RppStep {
    fn apply(&self, v: &[DenseTensor], rho: f64) -> Result<Vec<DenseTensor>> {
        let order = v.len();
        let scale = (order as f64).sqrt();
        let parts: Vec<Unfolding> = v.par_iter().enumerate().map(|(d, vd)| unfold_svd(vd, d)).collect();
        // concatenated spectra, padded to n_d values per mode
        let dims = v[0].dims();
        let mut c = Vec::with_capacity(dims.iter().sum());
        for (d, p) in parts.iter().enumerate() {
            c.extend((0..dims[d]).map(|j| p.s.get(j).copied().unwrap_or(0.0) / scale));
        }
        let shrunk = prox_omega_biconj(&c, self.alpha, 1.0 / (rho * order as f64), self.prox_tol)?;
        let mut offset = 0;
        let mut out = Vec::with_capacity(order);
        for (d, p) in parts.iter().enumerate() {
            let s: Vec<f64> = shrunk[offset..offset + p.s.len()].iter().map(|u| u * scale).collect();
            offset += dims[d];
            out.push(fold(p, &s, d, v[d].shape()));
        }
        Ok(out)
    }

    fn objective(&self, x: &DenseTensor) -> f64 {
        let s = crate::decomp::sigma_map(x);
        omega_biconj(&s.entries, self.alpha, 1e-8).map(|v| v.value).unwrap_or(f64::NAN)
    }
}

fn frob_sum(ts: &[DenseTensor]) -> f64 {
    ts.iter().map(|t| t.frobenius().powi(2)).sum::<f64>().sqrt()
}

fn admm(e: &SensingEnsemble, y: &Measurements, cfg: &SolverConfig, step: &dyn ZStep, projector: AffineProjector) -> Result<RecoveryResult> {
    let shape = e.shape().clone();
    let order = shape.order();
    let total = shape.total();
    let ynorm = y.norm();
    let root_d = (order as f64).sqrt();

    let x0 = e.adjoint(&y.values)?.scaled(1.0 / e.m() as f64);
    let mut x = DenseTensor::from_vec(shape.clone(), projector.project(x0.data()))?;
    let mut z: Vec<DenseTensor> = vec![x.clone(); order];
    let mut w: Vec<DenseTensor> = vec![DenseTensor::zeros(shape.clone()); order];
    let mut rho = cfg.rho;

    let mut objective_history = Vec::new();
    let mut residual_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..cfg.max_iters {
        iterations = it + 1;
        // Z step on V_d = X + W_d/ρ
        let v: Vec<DenseTensor> = (0..order)
            .map(|d| {
                let mut vd = x.clone();
                vd.add_scaled(1.0 / rho, &w[d]).expect("same shape");
                vd
            })
            .collect();
        let z_new = step.apply(&v, rho)?;

        // X step: project mean_d(Z_d − W_d/ρ) onto the measurement constraint
        let mut target = vec![0.0; total];
        for d in 0..order {
            for ((t, zv), wv) in target.iter_mut().zip(z_new[d].data()).zip(w[d].data()) {
                *t += (zv - wv / rho) / order as f64;
            }
        }
        let x_new = DenseTensor::from_vec(shape.clone(), projector.project(&target))?;

        // multipliers
        let mut primal_sq = 0.0;
        for d in 0..order {
            let diff = x_new.sub(&z_new[d])?;
            primal_sq += diff.frobenius().powi(2);
            w[d].add_scaled(rho, &diff)?;
        }
        let primal = primal_sq.sqrt();
        let dual = rho * root_d * x_new.sub(&x)?.frobenius();

        x = x_new;
        z = z_new;
        residual_history.push(primal);
        objective_history.push(step.objective(&x));

        let eps_primal = cfg.abs_tol * root_d + cfg.rel_tol * (root_d * x.frobenius()).max(frob_sum(&z));
        let eps_dual = cfg.abs_tol * root_d + cfg.rel_tol * frob_sum(&w);
        let feas = projector.residual(x.data());
        if primal <= eps_primal && dual <= eps_dual && feas <= cfg.abs_tol + cfg.rel_tol * ynorm {
            converged = true;
            break;
        }

        if cfg.adaptive_rho {
            if primal > 10.0 * dual {
                rho *= 2.0;
            } else if dual > 10.0 * primal {
                rho /= 2.0;
            }
        }
    }

    let feasibility_residual = projector.residual(x.data());
    let trend_warning = residual_history
        .get(BURN_IN..)
        .is_some_and(|tail| tail.windows(100).step_by(100).any(|w| w[w.len() - 1] > w[0] * (1.0 + 1e-9)));
    Ok(RecoveryResult {
        objective: step.objective(&x),
        estimate: x,
        iterations,
        feasibility_residual,
        objective_history,
        residual_history,
        converged: converged && !projector.inconsistent,
        inconsistent: projector.inconsistent,
        trend_warning,
        final_rho: rho,
    })
}

fn check_measurements(e: &SensingEnsemble, y: &Measurements) -> Result<()> {
    if y.len() != e.m() {
        return Err(Error::DimensionMismatch(format!("{} measurements for an ensemble of {}", y.len(), e.m())));
    }
    if let Some(i) = y.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// `min Σ_d ‖X_(d)‖_*` subject to `A(X) = y`.
pub fn recover_sum_nuclear(e: &SensingEnsemble, y: &Measurements, cfg: &SolverConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    check_measurements(e, y)?;
    let projector = AffineProjector::new(e.matrix(), &y.values);
    admm(e, y, cfg, &NuclearStep, projector)
}

/// `min ω**_α(σ(X))` subject to `A(X) = y`.
///
/// Every feasible point has norm at least `‖A⁺y‖`, so the program is
/// infeasible when that exceeds `α`.
pub fn recover_rpp(e: &SensingEnsemble, y: &Measurements, alpha: f64, cfg: &SolverConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    check_measurements(e, y)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let projector = AffineProjector::new(e.matrix(), &y.values);
    let min_norm = projector.min_norm_point().iter().map(|v| v * v).sum::<f64>().sqrt();
    if min_norm > alpha {
        return Err(Error::OutOfDomain { norm: min_norm, alpha });
    }
    admm(e, y, cfg, &RppStep { alpha, prox_tol: cfg.prox_tol }, projector)
}

pub fn recover(e: &SensingEnsemble, y: &Measurements, kind: &SolverKind, cfg: &SolverConfig) -> Result<RecoveryResult> {
    match kind {
        SolverKind::Sumnuc => recover_sum_nuclear(e, y, cfg),
        SolverKind::Rpp => {
            let alpha = cfg
                .alpha
                .ok_or_else(|| Error::InvalidArgument("the rpp solver needs alpha".into()))?;
            recover_rpp(e, y, alpha, cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::random_tucker;
    use crate::sensing::make_ensemble;
    use crate::tensor::gaussian_tensor;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn zero_measurements_give_zero() {
        let s = shape(&[3, 3, 3]);
        let e = make_ensemble(&s, 10, 1).unwrap();
        let y = Measurements { values: vec![0.0; 10] };
        let r = recover_sum_nuclear(&e, &y, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.estimate.frobenius(), 0.0);
        let r = recover_rpp(&e, &y, 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(r.estimate.frobenius(), 0.0);
    }

    #[test]
    fn full_measurements_pin_the_solution() {
        let s = shape(&[3, 3, 3]);
        let x = gaussian_tensor(s.clone(), 4);
        let e = make_ensemble(&s, 27, 2).unwrap();
        let y = e.forward(&x).unwrap();
        let r = recover_sum_nuclear(&e, &y, &SolverConfig::default()).unwrap();
        assert!(r.relative_error(&x).unwrap() <= 1e-6);
        let r = recover_rpp(&e, &y, 2.0 * x.frobenius(), &SolverConfig::default()).unwrap();
        assert!(r.relative_error(&x).unwrap() <= 1e-6);
    }

    #[test]
    fn low_rank_recovery_and_objective_sanity() {
        let s = shape(&[4, 4, 4]);
        let x = random_tucker(&s, &[1, 1, 1], 3).unwrap();
        let e = make_ensemble(&s, 30, 9).unwrap();
        let y = e.forward(&x).unwrap();
        let r = recover_sum_nuclear(&e, &y, &SolverConfig::default()).unwrap();
        assert!(r.converged, "{} iterations", r.iterations);
        assert!(r.feasibility_residual <= 1e-10 + 1e-8 * y.norm());
        assert!(r.objective <= sum_nuclear(&x) + 1e-6 * sum_nuclear(&x));
        assert!(r.relative_error(&x).unwrap() <= 1e-3, "{}", r.relative_error(&x).unwrap());
    }

    #[test]
    fn rpp_rejects_small_alpha() {
        let s = shape(&[2, 2, 2]);
        let x = gaussian_tensor(s.clone(), 1);
        let e = make_ensemble(&s, 8, 1).unwrap();
        let y = e.forward(&x).unwrap();
        assert!(matches!(recover_rpp(&e, &y, 0.1 * x.frobenius(), &SolverConfig::default()), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn overdetermined_inconsistent_system_is_flagged() {
        let s = shape(&[2, 2]);
        let e = make_ensemble(&s, 8, 3).unwrap();
        let mut y = e.forward(&gaussian_tensor(s, 2)).unwrap();
        y.values[0] += 1.0;
        let r = recover_sum_nuclear(&e, &y, &SolverConfig { max_iters: 50, ..Default::default() }).unwrap();
        assert!(r.inconsistent && !r.converged);
    }

    #[test]
    fn solves_are_deterministic() {
        let s = shape(&[3, 3, 3]);
        let x = random_tucker(&s, &[1, 1, 1], 5).unwrap();
        let e = make_ensemble(&s, 18, 5).unwrap();
        let y = e.forward(&x).unwrap();
        let cfg = SolverConfig { max_iters: 200, ..Default::default() };
        let a = recover_rpp(&e, &y, 2.0 * x.frobenius(), &cfg).unwrap();
        let b = recover_rpp(&e, &y, 2.0 * x.frobenius(), &cfg).unwrap();
        assert_eq!(a.residual_history, b.residual_history);
        assert_eq!(a.estimate, b.estimate);
    }
}
