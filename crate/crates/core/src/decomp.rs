//! Higher-order SVD, mode spectra and the concatenated spectrum map.
//!
//! The HOSVD takes `U_d` from the full SVD of each unfolding `X_(d)` and
//! the core `S = X ×_0 U_0ᵀ ... ×_{D-1} U_{D-1}ᵀ`. Unfolding the core gives
//! `S_(d) = U_dᵀ X_(d) (U_{d+1} ⊗ ... ⊗ U_{d-1}) = Σ_d V_dᵀ (U_{d+1} ⊗ ... ⊗ U_{d-1})`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{left_singular_system, random_orthonormal, singular_values};
use crate::rng::rng_from_seed;
use crate::tensor::{gaussian_tensor, matricize, multi_mode_product, DenseTensor, Shape};

#[derive(Clone, Debug)]
pub struct HosvdFactors {
    pub core: DenseTensor,
    /// Orthogonal `n_d × n_d` factor per mode.
    pub factors: Vec<DMatrix<f64>>,
    /// Singular values of each unfolding, nonincreasing, length `n_d`.
    pub mode_spectra: Vec<Vec<f64>>,
}

/// Residuals of the HOSVD defining properties, all absolute.
#[derive(Clone, Debug, Serialize)]
pub struct HosvdResiduals {
    /// `‖X − S ×_0 U_0 … ×_{D−1} U_{D−1}‖_F`
    pub reconstruction: f64,
    /// max over modes of `‖U_dᵀU_d − I‖_F`
    pub factor_orthogonality: f64,
    /// max over modes and `α ≠ β` of `|⟨S_{i_d=α}, S_{i_d=β}⟩|`
    pub subtensor_orthogonality: f64,
    /// max over modes of `max(0, ‖S_{i_d=k+1}‖ − ‖S_{i_d=k}‖)`
    pub ordering_violation: f64,
    /// max over modes and `k` of `| ‖S_{i_d=k}‖ − σ_k(X_(d)) |`
    pub slice_spectrum_mismatch: f64,
}

pub fn hosvd(x: &DenseTensor) -> HosvdFactors {
    let order = x.shape().order();
    let mut factors = Vec::with_capacity(order);
    let mut mode_spectra = Vec::with_capacity(order);
    for d in 0..order {
        let unfolding = matricize(x, d).expect("mode in range");
        let (u, sigma) = left_singular_system(&unfolding.matrix);
        factors.push(u);
        mode_spectra.push(sigma);
    }
    let transposed: Vec<DMatrix<f64>> = factors.iter().map(|u| u.transpose()).collect();
    let core = multi_mode_product(x, &transposed).expect("square factors");
    HosvdFactors { core: zero_null_slices(core), factors, mode_spectra }
}

/// Slices `k ≥ rank bound` of mode `d` (`min(n_d, total/n_d)`) are zero in
/// exact arithmetic; clear their roundoff.
fn zero_null_slices(core: DenseTensor) -> DenseTensor {
    let dims = core.dims().to_vec();
    let total: usize = dims.iter().product();
    let shape = core.shape().clone();
    let mut data = core.into_data();
    let mut stride = total;
    for &n in &dims {
        stride /= n;
        let bound = n.min(total / n);
        if bound < n {
            for (flat, v) in data.iter_mut().enumerate() {
                if (flat / stride) % n >= bound {
                    *v = 0.0;
                }
            }
        }
    }
    DenseTensor::from_vec(shape, data).expect("finite core")
}

impl HosvdFactors {
    pub fn reconstruct(&self) -> DenseTensor {
        multi_mode_product(&self.core, &self.factors).expect("square factors")
    }

    pub fn residuals(&self, x: &DenseTensor) -> HosvdResiduals {
        let reconstruction = self.reconstruct().sub(x).map(|d| d.frobenius()).unwrap_or(f64::INFINITY);
        let factor_orthogonality = self
            .factors
            .iter()
            .map(|u| (u.transpose() * u - DMatrix::identity(u.ncols(), u.ncols())).norm())
            .fold(0.0, f64::max);
        let mut subtensor_orthogonality: f64 = 0.0;
        let mut ordering_violation: f64 = 0.0;
        let mut slice_spectrum_mismatch: f64 = 0.0;
        for d in 0..self.core.shape().order() {
            let n = self.core.dims()[d];
            let slices: Vec<Vec<f64>> =
                (0..n).map(|k| self.core.subtensor(d, k).expect("in range")).collect();
            let norms: Vec<f64> =
                slices.iter().map(|s| s.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
            for a in 0..n {
                for b in a + 1..n {
                    let ip: f64 = slices[a].iter().zip(&slices[b]).map(|(p, q)| p * q).sum();
                    subtensor_orthogonality = subtensor_orthogonality.max(ip.abs());
                }
            }
            for k in 1..n {
                ordering_violation = ordering_violation.max(norms[k] - norms[k - 1]);
            }
            for (k, nk) in norms.iter().enumerate() {
                slice_spectrum_mismatch =
                    slice_spectrum_mismatch.max((nk - self.mode_spectra[d][k]).abs());
            }
        }
        HosvdResiduals {
            reconstruction,
            factor_orthogonality,
            subtensor_orthogonality,
            ordering_violation,
            slice_spectrum_mismatch,
        }
    }
}

/// Singular values of the mode-`mode` unfolding, padded to length `n_mode`.
pub fn mode_spectrum(x: &DenseTensor, mode: usize) -> Result<Vec<f64>> {
    let m = matricize(x, mode)?;
    let mut s = singular_values(&m.matrix);
    s.resize(m.rows(), 0.0);
    Ok(s)
}

/// `σ(X) = (σ^(0), …, σ^(D−1)) / √D`, of length `Σ n_d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumVector {
    pub entries: Vec<f64>,
    pub dims: Vec<usize>,
}

impl SpectrumVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SpectrumVector) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum()
    }

    /// Slice of the entries belonging to mode `d`.
    pub fn block(&self, d: usize) -> &[f64] {
        let start: usize = self.dims[..d].iter().sum();
        &self.entries[start..start + self.dims[d]]
    }
}

pub fn sigma_map(x: &DenseTensor) -> SpectrumVector {
    let order = x.shape().order();
    let scale = 1.0 / (order as f64).sqrt();
    let mut entries = Vec::with_capacity(x.shape().dim_sum());
    for d in 0..order {
        entries.extend(mode_spectrum(x, d).expect("mode in range").into_iter().map(|s| s * scale));
    }
    SpectrumVector { entries, dims: x.dims().to_vec() }
}

/// `S ×_0 Q_0 … ×_{D−1} Q_{D−1}` with a Gaussian `r_0 × … × r_{D−1}` core and
/// Haar-orthonormal `n_d × r_d` factors.
pub fn random_tucker(shape: &Shape, ranks: &[usize], seed: u64) -> Result<DenseTensor> {
    if ranks.len() != shape.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} ranks for an order-{} shape",
            ranks.len(),
            shape.order()
        )));
    }
    for (mode, (&rank, &dim)) in ranks.iter().zip(shape.dims()).enumerate() {
        if rank == 0 || rank > dim {
            return Err(Error::RankExceedsDimension { mode, rank, dim });
        }
    }
    let core = gaussian_tensor(Shape::new(ranks.to_vec())?, seed);
    let mut rng = rng_from_seed(seed ^ 0x5EED_FAC7_0000_0000);
    let factors: Vec<DMatrix<f64>> = shape
        .dims()
        .iter()
        .zip(ranks)
        .map(|(&n, &r)| random_orthonormal(n, r, &mut rng))
        .collect();
    multi_mode_product(&core, &factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;
    use crate::tensor::gaussian_matrix;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter().map(|a| a / n).collect()
    }

    #[test]
    fn rank_one_core_has_single_entry() {
        let (u, v, w) = (unit(&[1.0, -2.0, 0.5]), unit(&[0.3, 0.4]), unit(&[2.0, 1.0, -1.0, 1.0]));
        let lambda = 2.5;
        let x = DenseTensor::outer(&[&u, &v, &w]).unwrap().scaled(lambda);
        let h = hosvd(&x);
        assert!((h.core.get(&[0, 0, 0]).abs() - lambda).abs() < 1e-12);
        assert!((h.core.frobenius() - lambda).abs() < 1e-12);
        let rest: f64 = h.core.data()[1..].iter().map(|a| a * a).sum();
        assert!(rest.sqrt() < 1e-12);
        for d in 0..3 {
            let s = mode_spectrum(&x, d).unwrap();
            assert!((s[0] - lambda).abs() < 1e-12);
            assert!(s[1..].iter().all(|&a| a < 1e-12));
        }
    }

    #[test]
    fn matrix_case_is_ordinary_svd() {
        let mut rng = rng_from_seed(4);
        let m = gaussian_matrix(4, 3, &mut rng);
        let x = DenseTensor::from_vec(shape(&[4, 3]), m.transpose().as_slice().to_vec()).unwrap();
        let h = hosvd(&x);
        let sv = singular_values(&m);
        for (a, b) in h.mode_spectra[0].iter().zip(&sv) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in h.mode_spectra[1].iter().zip(&sv) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(h.mode_spectra[0][3], 0.0);
        // core is diagonal up to sign
        for i in 0..4 {
            for j in 0..3 {
                let c = h.core.get(&[i, j]);
                if i == j {
                    assert!((c.abs() - sv[i]).abs() < 1e-10);
                } else {
                    assert!(c.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_tensor() {
        let x = DenseTensor::zeros(shape(&[2, 3, 2]));
        let h = hosvd(&x);
        assert_eq!(h.core.frobenius(), 0.0);
        assert!(h.mode_spectra.iter().flatten().all(|&s| s == 0.0));
        assert!(h.residuals(&x).factor_orthogonality < 1e-12);
        assert_eq!(sigma_map(&x).entries, vec![0.0; 7]);
    }

    #[test]
    fn spectrum_examples() {
        let eye = DenseTensor::from_vec(shape(&[2, 2]), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(mode_spectrum(&eye, 0).unwrap(), vec![1.0, 1.0]);
        let s = sigma_map(&eye);
        let h = 1.0 / 2f64.sqrt();
        for v in &s.entries {
            assert!((v - h).abs() < 1e-15);
        }
        assert!(mode_spectrum(&eye, 2).is_err());
        assert_eq!(s.block(1).len(), 2);
    }

    #[test]
    fn hosvd_properties_on_random_tensors() {
        for (i, dims) in [[3usize, 4, 2, 5], [6, 5, 4, 3], [2, 7, 3, 1]].iter().enumerate() {
            let x = gaussian_tensor(shape(dims), i as u64);
            let h = hosvd(&x);
            let r = h.residuals(&x);
            let f = x.frobenius();
            assert!(r.reconstruction <= 1e-9 * f, "{r:?}");
            assert!(r.factor_orthogonality <= 1e-10);
            assert!(r.subtensor_orthogonality <= 1e-8 * f * f);
            assert!(r.ordering_violation <= 0.0);
            assert!(r.slice_spectrum_mismatch <= 1e-8);
        }
    }

    #[test]
    fn sigma_norm_identity() {
        for seed in 0..20 {
            let x = gaussian_tensor(shape(&[3, 2, 4]), seed);
            let s = sigma_map(&x);
            assert_eq!(s.entries.len(), 9);
            assert!(s.entries.iter().all(|&v| v >= 0.0));
            assert!((s.norm() - x.frobenius()).abs() <= 1e-10);
            for d in 0..3 {
                let sd = mode_spectrum(&x, d).unwrap();
                let n = sd.iter().map(|a| a * a).sum::<f64>().sqrt();
                assert!((n - x.frobenius()).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn von_neumann_trace_inequality() {
        for seed in 0..1000u64 {
            let s = if seed % 2 == 0 { shape(&[3, 3, 3]) } else { shape(&[2, 3, 4]) };
            let g = gaussian_tensor(s.clone(), derive_seed(seed, &[0]));
            let x = gaussian_tensor(s, derive_seed(seed, &[1]));
            let lhs = g.inner(&x).unwrap();
            let rhs = sigma_map(&g).dot(&sigma_map(&x));
            assert!(lhs <= rhs + 1e-9, "seed {seed}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn random_tucker_ranks() {
        let s = shape(&[5, 4, 3]);
        assert!(random_tucker(&s, &[6, 1, 1], 0).is_err());
        assert!(random_tucker(&s, &[1, 1], 0).is_err());
        let x1 = random_tucker(&s, &[1, 1, 1], 3).unwrap();
        for d in 0..3 {
            let sp = mode_spectrum(&x1, d).unwrap();
            assert!(sp[1] <= 1e-12 * sp[0]);
        }
        let full = random_tucker(&s, &[5, 4, 3], 3).unwrap();
        for d in 0..3 {
            let sp = mode_spectrum(&full, d).unwrap();
            assert!(*sp.last().unwrap() > 1e-10 * sp[0]);
        }
        for seed in 0..100 {
            let ranks = [2, 3, 2];
            let x = random_tucker(&s, &ranks, seed).unwrap();
            for d in 0..3 {
                let sp = mode_spectrum(&x, d).unwrap();
                let numerical = sp.iter().filter(|&&v| v > 1e-10 * sp[0]).count();
                assert_eq!(numerical, ranks[d], "seed {seed} mode {d}");
            }
        }
    }
}
