//! Gaussian measurement ensembles `y_i = ⟨G_i, X⟩`, `i = 1..m`.
//!
//! Filter `i` is `gaussian_tensor(shape, derive_seed(seed, [i]))`, so any
//! filter can be regenerated on its own. Entries are standard normal with no
//! `1/√m` normalization.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::tensor::{gaussian_tensor, DenseTensor, Shape};

/// Ensembles with at most this many filter entries keep an explicit matrix.
pub const MATERIALIZE_LIMIT: usize = 10_000_000;

#[derive(Clone, Debug)]
pub struct SensingEnsemble {
    shape: Shape,
    m: usize,
    seed: u64,
    /// Row `i` is the flattened filter `G_i`.
    matrix: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleDescriptor {
    pub dims: Vec<usize>,
    pub m: usize,
    pub seed: u64,
}

pub fn make_ensemble(shape: &Shape, m: usize, seed: u64) -> Result<SensingEnsemble> {
    if m == 0 {
        return Err(Error::InvalidArgument("measurement count must be at least 1".into()));
    }
    let mut e = SensingEnsemble { shape: shape.clone(), m, seed, matrix: None };
    let total = shape.total();
    if m.checked_mul(total).is_some_and(|n| n <= MATERIALIZE_LIMIT) {
        let rows: Vec<DenseTensor> = (0..m).into_par_iter().map(|i| e.filter(i)).collect();
        e.matrix = Some(DMatrix::from_fn(m, total, |i, j| rows[i].data()[j]));
    }
    Ok(e)
}

impl SensingEnsemble {
    pub fn from_descriptor(d: &EnsembleDescriptor) -> Result<Self> {
        make_ensemble(&Shape::new(d.dims.clone())?, d.m, d.seed)
    }

    pub fn descriptor(&self) -> EnsembleDescriptor {
        EnsembleDescriptor { dims: self.shape.dims().to_vec(), m: self.m, seed: self.seed }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_materialized(&self) -> bool {
        self.matrix.is_some()
    }

    /// Filter `G_i`, regenerated from its seed.
    pub fn filter(&self, i: usize) -> DenseTensor {
        gaussian_tensor(self.shape.clone(), derive_seed(self.seed, &[i as u64]))
    }

    /// The `m × total` measurement matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.matrix {
            Some(a) => a.clone(),
            None => {
                let total = self.shape.total();
                let mut a = DMatrix::zeros(self.m, total);
                for i in 0..self.m {
                    let g = self.filter(i);
                    for (j, v) in g.data().iter().enumerate() {
                        a[(i, j)] = *v;
                    }
                }
                a
            }
        }
    }

    fn check_shape(&self, x: &DenseTensor) -> Result<()> {
        if x.shape() != &self.shape {
            return Err(Error::ShapeMismatch { expected: self.shape.dims().to_vec(), got: x.dims().to_vec() });
        }
        Ok(())
    }

    /// `y_i = ⟨G_i, X⟩`.
    pub fn forward(&self, x: &DenseTensor) -> Result<Measurements> {
        self.check_shape(x)?;
        let y = match &self.matrix {
            Some(a) => (a * DVector::from_column_slice(x.data())).as_slice().to_vec(),
            None => (0..self.m)
                .into_par_iter()
                .map(|i| self.filter(i).inner(x).expect("same shape"))
                .collect(),
        };
        Ok(Measurements { values: y })
    }

    /// `Σ_i c_i G_i`.
    pub fn adjoint(&self, c: &[f64]) -> Result<DenseTensor> {
        if c.len() != self.m {
            return Err(Error::DimensionMismatch(format!("{} coefficients for {} measurements", c.len(), self.m)));
        }
        let data = match &self.matrix {
            Some(a) => (a.transpose() * DVector::from_column_slice(c)).as_slice().to_vec(),
            None => {
                let mut acc = DenseTensor::zeros(self.shape.clone());
                for (i, &ci) in c.iter().enumerate() {
                    if ci != 0.0 {
                        acc.add_scaled(ci, &self.filter(i))?;
                    }
                }
                acc.into_data()
            }
        };
        DenseTensor::from_vec(self.shape.clone(), data)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    pub values: Vec<f64>,
}

impl Measurements {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// CSV with header `index,value`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            wr.write_record([i.to_string(), format!("{v:e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut values = Vec::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let idx: usize = rec.get(0).unwrap_or_default().trim().parse().map_err(|e| Error::Parse(format!("index: {e}")))?;
            if idx != row {
                return Err(Error::Parse(format!("expected index {row}, found {idx}")));
            }
            let v: f64 = rec.get(1).unwrap_or_default().trim().parse().map_err(|e| Error::Parse(format!("value: {e}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite(row));
            }
            values.push(v);
        }
        Ok(Self { values })
    }
}
