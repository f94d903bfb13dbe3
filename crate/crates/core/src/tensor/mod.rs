//! Dense real tensors.
//!
//! Storage is a single row-major buffer (last index fastest). Modes are
//! 0-based throughout the API.
//!
//! The mode-`d` matricization places the mode-`d` fibers in the rows. Columns
//! run over the remaining modes in cyclic order `d+1, ..., D-1, 0, ..., d-1`
//! with the first listed mode varying slowest, which is the ordering under
//! which
//!
//! ```text
//! X_(d) = U_d S_(d) (U_{d+1} ⊗ ... ⊗ U_{D-1} ⊗ U_0 ⊗ ... ⊗ U_{d-1})^T
//! ```
//!
//! holds for a Tucker product `X = S ×_0 U_0 ... ×_{D-1} U_{D-1}`.

pub mod io;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Dimensions `(n_0, ..., n_{D-1})` of a tensor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("order must be at least 1".into()));
        }
        if let Some(pos) = dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidShape(format!("dimension {pos} is zero")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of modes `D`.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Product of the dimensions.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Sum of the dimensions, the length of the concatenated spectrum.
    pub fn dim_sum(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn max_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for d in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.dims[d + 1];
        }
        strides
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            Err(Error::ModeOutOfRange { mode, order: self.order() })
        } else {
            Ok(())
        }
    }

    /// Cyclic mode order used for the columns of the mode-`mode` unfolding.
    pub fn cyclic_modes(&self, mode: usize) -> Vec<usize> {
        let order = self.order();
        (1..order).map(|k| (mode + k) % order).collect()
    }

    /// Same shape with mode `mode` resized to `n`.
    pub fn with_dim(&self, mode: usize, n: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims[mode] = n;
        Self::new(dims)
    }

    /// Column stride of every mode in the mode-`mode` unfolding (0 for `mode`).
    fn unfolding_strides(&self, mode: usize) -> Vec<usize> {
        let mut strides = vec![0; self.order()];
        let mut acc = 1;
        for &e in self.cyclic_modes(mode).iter().rev() {
            strides[e] = acc;
            acc *= self.dims[e];
        }
        strides
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Vec<usize> {
        s.dims
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

/// Odometer over the multi-indices of a shape in row-major order.
pub(crate) struct MultiIndex<'a> {
    dims: &'a [usize],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> MultiIndex<'a> {
    pub(crate) fn new(dims: &'a [usize]) -> Self {
        Self { dims, idx: vec![0; dims.len()], done: false }
    }

    /// Current index, or `None` once every index has been visited.
    pub(crate) fn next_index(&self) -> Option<&[usize]> {
        if self.done {
            None
        } else {
            Some(&self.idx)
        }
    }

    pub(crate) fn advance(&mut self) {
        for d in (0..self.dims.len()).rev() {
            self.idx[d] += 1;
            if self.idx[d] < self.dims[d] {
                return;
            }
            self.idx[d] = 0;
        }
        self.done = true;
    }
}

/// A `D`-way array of finite `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: Shape) -> Self {
        let total = shape.total();
        Self { shape, data: vec![0.0; total] }
    }

    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.total() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for shape {} ({} entries)",
                data.len(),
                shape,
                shape.total()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { shape, data })
    }

    /// Build from a function of the multi-index.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.total());
        let mut it = MultiIndex::new(shape.dims());
        while let Some(idx) = it.next_index() {
            data.push(f(idx));
            it.advance();
        }
        Self { shape, data }
    }

    /// Outer product `v_0 ⊗ v_1 ⊗ ... ⊗ v_{D-1}`.
    pub fn outer(factors: &[&[f64]]) -> Result<Self> {
        let shape = Shape::new(factors.iter().map(|v| v.len()).collect())?;
        Ok(Self::from_fn(shape, |idx| {
            idx.iter().zip(factors).map(|(&i, v)| v[i]).product()
        }))
    }

    /// Superdiagonal tensor with `diag[k]` at `(k, k, ..., k)`.
    pub fn superdiagonal(order: usize, diag: &[f64]) -> Result<Self> {
        let shape = Shape::new(vec![diag.len(); order])?;
        Ok(Self::from_fn(shape, |idx| {
            if idx.iter().all(|&i| i == idx[0]) {
                diag[idx[0]]
            } else {
                0.0
            }
        }))
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.order());
        idx.iter()
            .zip(self.shape.strides())
            .map(|(&i, s)| i * s)
            .sum()
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.dims().to_vec(),
                got: other.dims().to_vec(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|v| c * v).collect() }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise ℓ1 norm.
    pub fn l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// Subtensor with mode `mode` fixed to `index`, as a flat vector in
    /// row-major order over the remaining modes.
    pub fn subtensor(&self, mode: usize, index: usize) -> Result<Vec<f64>> {
        self.shape.check_mode(mode)?;
        if index >= self.dims()[mode] {
            return Err(Error::InvalidArgument(format!(
                "index {index} out of range for mode {mode}"
            )));
        }
        let dims = self.dims();
        let left: usize = dims[..mode].iter().product();
        let right: usize = dims[mode + 1..].iter().product();
        let n = dims[mode];
        let mut out = Vec::with_capacity(left * right);
        for l in 0..left {
            let base = (l * n + index) * right;
            out.extend_from_slice(&self.data[base..base + right]);
        }
        Ok(out)
    }

    /// Mode-`mode` unfolding.
    pub fn matricize(&self, mode: usize) -> Result<Matricized> {
        matricize(self, mode)
    }

    /// Mode-`mode` product with `u` (shape `n' × n_mode`).
    pub fn mode_product(&self, u: &DMatrix<f64>, mode: usize) -> Result<Self> {
        mode_product(self, u, mode)
    }
}

/// Mode-`d` unfolding of a tensor: an `n_d × (total / n_d)` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matricized {
    pub mode: usize,
    pub matrix: DMatrix<f64>,
}

impl Matricized {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn matricize(x: &DenseTensor, mode: usize) -> Result<Matricized> {
    let shape = x.shape();
    shape.check_mode(mode)?;
    let rows = shape.dims()[mode];
    let cols = shape.total() / rows;
    let cstrides = shape.unfolding_strides(mode);
    let mut matrix = DMatrix::zeros(rows, cols);
    let mut it = MultiIndex::new(shape.dims());
    let mut flat = 0;
    while let Some(idx) = it.next_index() {
        let col: usize = idx.iter().zip(&cstrides).map(|(&i, &s)| i * s).sum();
        matrix[(idx[mode], col)] = x.data[flat];
        flat += 1;
        it.advance();
    }
    Ok(Matricized { mode, matrix })
}

/// Inverse of [`matricize`].
pub fn tensorize(m: &Matricized, shape: &Shape) -> Result<DenseTensor> {
    shape.check_mode(m.mode)?;
    let rows = shape.dims()[m.mode];
    if m.rows() != rows || m.rows() * m.cols() != shape.total() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} unfolding does not fit shape {} in mode {}",
            m.rows(),
            m.cols(),
            shape,
            m.mode
        )));
    }
    let cstrides = shape.unfolding_strides(m.mode);
    let mut data = Vec::with_capacity(shape.total());
    let mut it = MultiIndex::new(shape.dims());
    while let Some(idx) = it.next_index() {
        let col: usize = idx.iter().zip(&cstrides).map(|(&i, &s)| i * s).sum();
        data.push(m.matrix[(idx[m.mode], col)]);
        it.advance();
    }
    DenseTensor::from_vec(shape.clone(), data)
}

/// `(X ×_d U)[.., i', ..] = Σ_i X[.., i, ..] U[i', i]`.
pub fn mode_product(x: &DenseTensor, u: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
    x.shape().check_mode(mode)?;
    let dims = x.dims();
    let n = dims[mode];
    if u.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, mode {} has dimension {}",
            u.ncols(),
            mode,
            n
        )));
    }
    let n_out = u.nrows();
    let out_shape = x.shape().with_dim(mode, n_out)?;
    let left: usize = dims[..mode].iter().product();
    let right: usize = dims[mode + 1..].iter().product();
    let mut out = vec![0.0; left * n_out * right];
    for l in 0..left {
        let src = &x.data[l * n * right..(l + 1) * n * right];
        let dst = &mut out[l * n_out * right..(l + 1) * n_out * right];
        for ip in 0..n_out {
            let row = &mut dst[ip * right..(ip + 1) * right];
            for i in 0..n {
                let c = u[(ip, i)];
                if c == 0.0 {
                    continue;
                }
                let fiber = &src[i * right..(i + 1) * right];
                for (r, v) in row.iter_mut().zip(fiber) {
                    *r += c * v;
                }
            }
        }
    }
    DenseTensor::from_vec(out_shape, out)
}

/// Multiply every mode by its matrix: `S ×_0 U_0 ×_1 ... ×_{D-1} U_{D-1}`.
pub fn multi_mode_product(core: &DenseTensor, factors: &[DMatrix<f64>]) -> Result<DenseTensor> {
    if factors.len() != core.shape().order() {
        return Err(Error::DimensionMismatch(format!(
            "{} factors for an order-{} tensor",
            factors.len(),
            core.shape().order()
        )));
    }
    let mut out = core.clone();
    for (d, u) in factors.iter().enumerate() {
        out = mode_product(&out, u, d)?;
    }
    Ok(out)
}

pub fn inner(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    x.inner(y)
}

pub fn frobenius(x: &DenseTensor) -> f64 {
    x.frobenius()
}

/// Tensor with i.i.d. standard normal entries, deterministic in `seed`.
pub fn gaussian_tensor(shape: Shape, seed: u64) -> DenseTensor {
    let mut rng = rng_from_seed(seed);
    let data = (0..shape.total()).map(|_| StandardNormal.sample(&mut rng)).collect();
    DenseTensor { shape, data }
}

/// `n × k` matrix with i.i.d. standard normal entries.
pub(crate) fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_seed, rng_from_seed};
    use proptest::prelude::*;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn one_to_eight() -> DenseTensor {
        DenseTensor::from_vec(shape(&[2, 2, 2]), (1..=8).map(f64::from).collect()).unwrap()
    }

    /// Column position of a multi-index, written out from the cyclic rule.
    fn oracle_column(dims: &[usize], mode: usize, idx: &[usize]) -> usize {
        let order = dims.len();
        let mut col = 0;
        for k in 1..order {
            let e = (mode + k) % order;
            col = col * dims[e] + idx[e];
        }
        col
    }

    #[test]
    fn shape_validation() {
        assert!(Shape::new(vec![]).is_err());
        assert!(Shape::new(vec![2, 0]).is_err());
        let s = shape(&[2, 3, 4]);
        assert_eq!(s.total(), 24);
        assert_eq!(s.dim_sum(), 9);
        assert_eq!(s.strides(), vec![12, 4, 1]);
        assert_eq!(s.to_string(), "2x3x4");
    }

    #[test]
    fn mode0_unfolding_of_one_to_eight() {
        // X[i,j,k] = 1 + 4i + 2j + k; mode-0 fibers are (X[0,j,k], X[1,j,k]),
        // columns ordered (j,k) with j slowest.
        let x = one_to_eight();
        let m = matricize(&x, 0).unwrap();
        let expected = DMatrix::from_row_slice(2, 4, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        assert_eq!(m.matrix, expected);
        // mode 1: columns (k, i) with k slowest
        let m1 = matricize(&x, 1).unwrap();
        let expected1 = DMatrix::from_row_slice(2, 4, &[1., 5., 2., 6., 3., 7., 4., 8.]);
        assert_eq!(m1.matrix, expected1);
        // mode 2: columns (i, j) with i slowest
        let m2 = matricize(&x, 2).unwrap();
        let expected2 = DMatrix::from_row_slice(2, 4, &[1., 3., 5., 7., 2., 4., 6., 8.]);
        assert_eq!(m2.matrix, expected2);
    }

    #[test]
    fn tensorize_inverts_worked_example() {
        let m = Matricized {
            mode: 0,
            matrix: DMatrix::from_row_slice(2, 4, &[1., 2., 3., 4., 5., 6., 7., 8.]),
        };
        let x = tensorize(&m, &shape(&[2, 2, 2])).unwrap();
        assert_eq!(x, one_to_eight());
        let zero = Matricized { mode: 2, matrix: DMatrix::zeros(2, 4) };
        assert_eq!(tensorize(&zero, &shape(&[2, 2, 2])).unwrap(), DenseTensor::zeros(shape(&[2, 2, 2])));
        assert!(tensorize(&zero, &shape(&[3, 2, 2])).is_err());
    }

    #[test]
    fn matrix_unfolding_is_identity() {
        let x = gaussian_tensor(shape(&[3, 5]), 4);
        let m = matricize(&x, 0).unwrap();
        assert_eq!(m.matrix, DMatrix::from_row_slice(3, 5, x.data()));
        let mt = matricize(&x, 1).unwrap();
        assert_eq!(mt.matrix, m.matrix.transpose());
    }

    #[test]
    fn matricize_matches_column_oracle() {
        let x = gaussian_tensor(shape(&[2, 3, 4, 2]), 11);
        for mode in 0..4 {
            let m = matricize(&x, mode).unwrap();
            let mut it = MultiIndex::new(x.dims());
            while let Some(idx) = it.next_index() {
                let col = oracle_column(x.dims(), mode, idx);
                assert_eq!(m.matrix[(idx[mode], col)], x.get(idx));
                it.advance();
            }
        }
    }

    #[test]
    fn mode_out_of_range() {
        let x = one_to_eight();
        assert!(matches!(matricize(&x, 3), Err(Error::ModeOutOfRange { .. })));
        assert!(mode_product(&x, &DMatrix::identity(2, 2), 5).is_err());
    }

    #[test]
    fn mode_product_identity_and_mismatch() {
        let x = gaussian_tensor(shape(&[3, 4, 2]), 2);
        for d in 0..3 {
            let n = x.dims()[d];
            assert_eq!(mode_product(&x, &DMatrix::identity(n, n), d).unwrap(), x);
        }
        assert!(mode_product(&x, &DMatrix::zeros(2, 5), 1).is_err());
        let y = mode_product(&x, &DMatrix::zeros(5, 4), 1).unwrap();
        assert_eq!(y.dims(), &[3, 5, 2]);
    }

    #[test]
    fn mode_product_rank_one_matrix() {
        // (u ⊗ v) ×_0 A = (A u) ⊗ v, entries hand-summed
        let u = [1.0, 2.0];
        let v = [3.0, -1.0];
        let x = DenseTensor::outer(&[&u, &v]).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let au = [2.0 * 1.0 + 1.0 * 2.0, 3.0 * 2.0];
        let expected = DenseTensor::outer(&[&au, &v]).unwrap();
        let got = mode_product(&x, &a, 0).unwrap();
        assert_eq!(got, expected);
        assert_eq!(got.data(), &[12.0, -4.0, 18.0, -6.0]);
    }

    #[test]
    fn distinct_mode_products_commute() {
        let x = gaussian_tensor(shape(&[3, 3, 3]), 9);
        let mut rng = rng_from_seed(10);
        let a = gaussian_matrix(3, 3, &mut rng);
        let b = gaussian_matrix(4, 3, &mut rng);
        let ab = mode_product(&mode_product(&x, &a, 0).unwrap(), &b, 1).unwrap();
        let ba = mode_product(&mode_product(&x, &b, 1).unwrap(), &a, 0).unwrap();
        assert!(ab.sub(&ba).unwrap().frobenius() <= 1e-12);
    }

    #[test]
    fn inner_and_frobenius_examples() {
        let ones = DenseTensor::from_vec(shape(&[2, 2, 2]), vec![1.0; 8]).unwrap();
        assert_eq!(ones.inner(&one_to_eight()).unwrap(), 36.0);
        assert!((ones.frobenius() - 8f64.sqrt()).abs() < 1e-15);
        let zero = DenseTensor::zeros(shape(&[2, 2, 2]));
        assert_eq!(zero.frobenius(), 0.0);
        assert_eq!(one_to_eight().inner(&zero).unwrap(), 0.0);
        let x = gaussian_tensor(shape(&[2, 3]), 1);
        assert!((x.inner(&x).unwrap() - x.frobenius().powi(2)).abs() < 1e-12);
        assert!(x.inner(&ones).is_err());
    }

    #[test]
    fn frobenius_orthogonal_invariance() {
        let x = gaussian_tensor(shape(&[4, 3, 5]), 21);
        let mut rng = rng_from_seed(22);
        for d in 0..3 {
            let n = x.dims()[d];
            let q = gaussian_matrix(n, n, &mut rng).qr().q();
            let y = mode_product(&x, &q, d).unwrap();
            assert!((y.frobenius() - x.frobenius()).abs() <= 1e-10);
        }
    }

    #[test]
    fn gaussian_determinism_and_moments() {
        let s = shape(&[100, 1000]);
        let a = gaussian_tensor(s.clone(), 5);
        let b = gaussian_tensor(s.clone(), 5);
        assert_eq!(a, b);
        let c = gaussian_tensor(s, 6);
        assert_ne!(a, c);
        let n = a.len() as f64;
        let mean = a.data().iter().sum::<f64>() / n;
        let var = a.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert!((0.97..=1.03).contains(&var), "var {var}");
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(DenseTensor::from_vec(shape(&[2, 2]), vec![1.0; 3]).is_err());
        assert!(matches!(
            DenseTensor::from_vec(shape(&[2]), vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn subtensor_slices() {
        let x = one_to_eight();
        assert_eq!(x.subtensor(0, 1).unwrap(), vec![5., 6., 7., 8.]);
        assert_eq!(x.subtensor(1, 0).unwrap(), vec![1., 2., 5., 6.]);
        assert_eq!(x.subtensor(2, 1).unwrap(), vec![2., 4., 6., 8.]);
    }

    fn arb_shape() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..7, 1..5).prop_filter("total", |d| d.iter().product::<usize>() <= 10_000)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn roundtrip_every_mode(dims in arb_shape(), seed in any::<u64>()) {
            let x = gaussian_tensor(Shape::new(dims.clone()).unwrap(), seed);
            for mode in 0..dims.len() {
                let m = matricize(&x, mode).unwrap();
                prop_assert_eq!(m.rows() * m.cols(), x.len());
                let back = tensorize(&m, x.shape()).unwrap();
                prop_assert_eq!(&back, &x);
                // column norms of any unfolding sum to the squared Frobenius norm
                let col_sq: f64 = m.matrix.column_iter().map(|c| c.norm_squared()).sum();
                prop_assert!((col_sq - x.frobenius().powi(2)).abs() <= 1e-10 * (1.0 + col_sq));
            }
        }

        #[test]
        fn inner_symmetric_bilinear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let s = Shape::new(vec![3, 2, 4]).unwrap();
            let x = gaussian_tensor(s.clone(), derive_seed(seed, &[0]));
            let y = gaussian_tensor(s.clone(), derive_seed(seed, &[1]));
            let z = gaussian_tensor(s, derive_seed(seed, &[2]));
            prop_assert!((x.inner(&y).unwrap() - y.inner(&x).unwrap()).abs() <= 1e-12);
            let mut comb = x.scaled(a);
            comb.add_scaled(b, &y).unwrap();
            let lhs = comb.inner(&z).unwrap();
            let rhs = a * x.inner(&z).unwrap() + b * y.inner(&z).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()) * 10.0);
        }
    }
}
