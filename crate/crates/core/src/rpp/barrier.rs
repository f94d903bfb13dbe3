//! Log-barrier Newton method for the sorted epigraph program
//!
//! ```text
//! maximize   ⟨s, g⟩ − t − (τ/2)‖g‖²
//! subject to α‖g_{1:r}‖₂ ≤ t + r   (r = 1..k)
//!            g_1 ≥ g_2 ≥ … ≥ g_k ≥ 0,  t ≥ 0,  g_1 ≤ B
//! ```
//!
//! with `s` sorted nonincreasing and positive. With `t ≥ 0` and the cone
//! constraints, `t` is the epigraph variable of `ω*_α(g)` restricted to
//! sorted nonnegative `g`, which is enough by rearrangement.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct EpigraphProgram<'a> {
    pub s: &'a [f64],
    pub alpha: f64,
    pub tau: f64,
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct EpigraphSolution {
    pub g: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
}

const MAX_NEWTON: usize = 100_000;

impl EpigraphProgram<'_> {
    fn k(&self) -> usize {
        self.s.len()
    }

    /// Barrier parameter: 2 per second-order cone, 1 per linear inequality.
    fn nu(&self) -> f64 {
        (3 * self.k() + 2) as f64
    }

    fn objective(&self, z: &DVector<f64>) -> f64 {
        let k = self.k();
        let mut v = -z[k];
        for i in 0..k {
            v += self.s[i] * z[i] - 0.5 * self.tau * z[i] * z[i];
        }
        v
    }

    /// Slacks of every inequality, or `None` outside the interior.
    fn slacks(&self, z: &DVector<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
        let k = self.k();
        let t = z[k];
        let a2 = self.alpha * self.alpha;
        let mut cones = Vec::with_capacity(k);
        let mut acc = 0.0;
        for r in 0..k {
            acc += z[r] * z[r];
            let w = (t + (r + 1) as f64).powi(2) - a2 * acc;
            if !(w > 0.0) {
                return None;
            }
            cones.push(w);
        }
        let mut lins = Vec::with_capacity(k + 2);
        for i in 0..k {
            let l = if i + 1 < k { z[i] - z[i + 1] } else { z[i] };
            lins.push(l);
        }
        lins.push(t);
        lins.push(self.bound - z[0]);
        if lins.iter().any(|&l| !(l > 0.0)) {
            return None;
        }
        Some((cones, lins))
    }

    fn merit(&self, theta: f64, z: &DVector<f64>) -> Option<f64> {
        let (cones, lins) = self.slacks(z)?;
        let barrier: f64 = cones.iter().chain(&lins).map(|v| -v.ln()).sum();
        Some(-theta * self.objective(z) + barrier)
    }

    fn gradient_hessian(&self, theta: f64, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.k();
        let n = k + 1;
        let t = z[k];
        let a2 = self.alpha * self.alpha;
        let (cones, lins) = self.slacks(z).expect("interior point");
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);

        for i in 0..k {
            grad[i] = theta * (self.tau * z[i] - self.s[i]);
            hess[(i, i)] += theta * self.tau;
        }
        grad[k] = theta;

        // −log((t + r)² − α²‖g_{1:r}‖²)
        let mut dw = DVector::zeros(n);
        for (r0, &w) in cones.iter().enumerate() {
            let r = r0 + 1;
            dw.fill(0.0);
            for j in 0..r {
                dw[j] = -2.0 * a2 * z[j];
            }
            dw[k] = 2.0 * (t + r as f64);
            grad.axpy(-1.0 / w, &dw, 1.0);
            let inv_w2 = 1.0 / (w * w);
            for a in 0..r {
                if dw[a] == 0.0 {
                    continue;
                }
                for b in 0..r {
                    hess[(a, b)] += dw[a] * dw[b] * inv_w2;
                }
                hess[(a, k)] += dw[a] * dw[k] * inv_w2;
                hess[(k, a)] += dw[a] * dw[k] * inv_w2;
            }
            hess[(k, k)] += dw[k] * dw[k] * inv_w2 - 2.0 / w;
            for j in 0..r {
                hess[(j, j)] += 2.0 * a2 / w;
            }
        }

        // −log of the ordering, nonnegativity, t ≥ 0 and box slacks
        for i in 0..k {
            let l = lins[i];
            let inv = 1.0 / l;
            let inv2 = inv * inv;
            grad[i] -= inv;
            hess[(i, i)] += inv2;
            if i + 1 < k {
                grad[i + 1] += inv;
                hess[(i + 1, i + 1)] += inv2;
                hess[(i, i + 1)] -= inv2;
                hess[(i + 1, i)] -= inv2;
            }
        }
        let lt = lins[k];
        grad[k] -= 1.0 / lt;
        hess[(k, k)] += 1.0 / (lt * lt);
        let lb = lins[k + 1];
        grad[0] += 1.0 / lb;
        hess[(0, 0)] += 1.0 / (lb * lb);

        (grad, hess)
    }

    fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> DVector<f64> {
        let n = grad.len();
        if let Some(ch) = hess.clone().cholesky() {
            return -ch.solve(grad);
        }
        let scale = hess.diagonal().amax().max(1.0);
        let mut ridge = 1e-14 * scale;
        loop {
            let shifted = &hess + DMatrix::identity(n, n) * ridge;
            if let Some(ch) = shifted.cholesky() {
                return -ch.solve(grad);
            }
            ridge *= 100.0;
        }
    }

    fn start(&self) -> DVector<f64> {
        let k = self.k();
        let c = (0.5 / self.alpha).min(0.5 * self.bound);
        let mut z = DVector::zeros(k + 1);
        for i in 0..k {
            z[i] = c * (k - i) as f64 / k as f64;
        }
        z[k] = 1.0;
        z
    }

    /// Solve to duality gap at most `gap_tol`.
    pub fn solve(&self, gap_tol: f64) -> Result<EpigraphSolution> {
        let mut z = self.start();
        let nu = self.nu();
        let mut theta = 1.0;
        let mut iterations = 0;
        loop {
            // centering
            for _ in 0..60 {
                let (grad, hess) = self.gradient_hessian(theta, &z);
                let dir = Self::newton_direction(&grad, hess);
                let decrement = -grad.dot(&dir);
                iterations += 1;
                if decrement <= 1e-9 {
                    break;
                }
                let phi0 = self.merit(theta, &z).expect("interior point");
                let mut step = 1.0;
                let mut moved = false;
                while step > 1e-14 {
                    let cand = &z + &dir * step;
                    if let Some(phi) = self.merit(theta, &cand) {
                        if phi <= phi0 - 0.25 * step * decrement {
                            z = cand;
                            moved = true;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                if !moved || iterations >= MAX_NEWTON {
                    // no representable descent left at this θ
                    break;
                }
            }
            let gap = nu / theta;
            if gap <= gap_tol {
                let k = self.k();
                return Ok(EpigraphSolution {
                    g: z.as_slice()[..k].to_vec(),
                    value: self.objective(&z),
                    gap,
                    iterations,
                });
            }
            if iterations >= MAX_NEWTON {
                return Err(Error::NonConvergence { iterations, best: self.objective(&z), gap });
            }
            theta *= 10.0;
        }
    }
}
