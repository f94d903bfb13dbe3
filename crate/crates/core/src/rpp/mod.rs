//! The conjugate pair `ω*_α` / `ω**_α` on vectors and the proximal map of
//! `ω**_α`.
//!
//! `ω**_α` is the convex envelope of the cardinality `‖·‖₀` on the ℓ₂ ball
//! of radius `α`, and `ω*_α` is its Fenchel conjugate:
//!
//! ```text
//! ω*_α(g) = sup_{‖s‖₂ ≤ α} ⟨g, s⟩ − ‖s‖₀ = max_{r=0..N} α‖|g|↓_{1:r}‖₂ − r
//! ```
//!
//! `ω**_α` and its prox have no closed form here; both are computed from a
//! sorted epigraph reformulation of the conjugate with a barrier method.

mod barrier;

use serde::Serialize;

use crate::error::{Error, Result};
use barrier::EpigraphProgram;

pub const DEFAULT_VALUE_TOL: f64 = 1e-8;
pub const DEFAULT_PROX_TOL: f64 = 1e-6;

/// Relative slack accepted on `‖s‖₂ ≤ α` before a point is declared outside
/// the domain of `ω**_α`.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RppParams {
    pub alpha: f64,
    pub n: usize,
}

impl RppParams {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if n == 0 {
            return Err(Error::InvalidArgument("vector length must be at least 1".into()));
        }
        Ok(Self { alpha, n })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive and finite, got {alpha}")));
    }
    Ok(())
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Magnitudes sorted nonincreasing with their original positions.
fn sorted_magnitudes(v: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    (order.iter().map(|&i| v[i].abs()).collect(), order)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `ω*_α(g)`, exact.
pub fn omega_star(g: &[f64], alpha: f64) -> f64 {
    let (sorted, _) = sorted_magnitudes(g);
    let mut best = 0.0f64;
    let mut acc = 0.0;
    for (r, v) in sorted.iter().enumerate() {
        acc += v * v;
        best = best.max(alpha * acc.sqrt() - (r + 1) as f64);
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct BiconjValue {
    /// `ω**_α(s)`; `+∞` when `s` is outside the α-ball.
    pub value: f64,
    /// Certified bound on `ω**_α(s) − value`.
    pub gap: f64,
    pub iterations: usize,
    pub in_domain: bool,
}

/// `ω**_α(s)` to an absolute duality gap of `tol`.
///
/// The returned value is the objective of a feasible dual point, so it never
/// exceeds the true value.
pub fn omega_biconj(s: &[f64], alpha: f64, tol: f64) -> Result<BiconjValue> {
    check_alpha(alpha)?;
    check_finite(s)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let norm = l2(s);
    if norm > alpha * (1.0 + DOMAIN_SLACK) {
        return Ok(BiconjValue { value: f64::INFINITY, gap: 0.0, iterations: 0, in_domain: false });
    }
    let (mut sorted, _) = sorted_magnitudes(s);
    sorted.retain(|&v| v > 0.0);
    if sorted.is_empty() {
        return Ok(BiconjValue { value: 0.0, gap: 0.0, iterations: 0, in_domain: true });
    }
    let k = sorted.len();
    let program = EpigraphProgram { s: &sorted, alpha, tau: 0.0, bound: 1e6 * (k + 1) as f64 / alpha };
    let sol = program.solve(tol)?;
    Ok(BiconjValue { value: sol.value.max(0.0), gap: sol.gap, iterations: sol.iterations, in_domain: true })
}

/// `ω**_α(s)`, erroring when `s` is outside the α-ball.
pub fn omega_biconj_value(s: &[f64], alpha: f64, tol: f64) -> Result<f64> {
    let v = omega_biconj(s, alpha, tol)?;
    if !v.in_domain {
        return Err(Error::OutOfDomain { norm: l2(s), alpha });
    }
    Ok(v.value)
}

#[derive(Clone, Debug)]
pub struct ProxOutput {
    pub x: Vec<f64>,
    /// Dual point `g` with `x = v − τ g`.
    pub dual: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
}

/// `argmin_x ½‖x − v‖² + τ ω**_α(x)`, accurate to about `tol` in ℓ₂.
pub fn prox_omega_biconj(v: &[f64], alpha: f64, tau: f64, tol: f64) -> Result<Vec<f64>> {
    Ok(prox_omega_biconj_detailed(v, alpha, tau, tol)?.x)
}

pub fn prox_omega_biconj_detailed(v: &[f64], alpha: f64, tau: f64, tol: f64) -> Result<ProxOutput> {
    check_alpha(alpha)?;
    check_finite(v)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be nonnegative, got {tau}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let n = v.len();
    if tau == 0.0 {
        return Ok(ProxOutput { x: v.to_vec(), dual: vec![0.0; n], gap: 0.0, iterations: 0 });
    }
    let (sorted, order) = sorted_magnitudes(v);
    let k = sorted.iter().take_while(|&&a| a > 0.0).count();
    if k == 0 {
        return Ok(ProxOutput { x: vec![0.0; n], dual: vec![0.0; n], gap: 0.0, iterations: 0 });
    }
    let active = &sorted[..k];
    let bound = 10.0 * (l2(active) + alpha) / tau + 1e6 * (k + 1) as f64 / alpha;
    let program = EpigraphProgram { s: active, alpha, tau, bound };
    // the dual is τ-strongly concave, so a gap ε moves x by at most √(2τε)
    let gap_tol = (tol * tol / (2.0 * tau)).max(1e-14);
    let sol = program.solve(gap_tol)?;

    let mut x = vec![0.0; n];
    let mut dual = vec![0.0; n];
    for (j, &pos) in order.iter().take(k).enumerate() {
        let mag = (active[j] - tau * sol.g[j]).max(0.0);
        x[pos] = mag.copysign(v[pos]);
        dual[pos] = sol.g[j].copysign(v[pos]);
    }
    Ok(ProxOutput { x, dual, gap: sol.gap, iterations: sol.iterations })
}
