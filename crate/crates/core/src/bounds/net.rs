//! Constructive nets for fixed-Tucker-rank tensors of Frobenius norm `α`:
//!
//! ```text
//! 𝔗(ν) = { S ×_0 U_0 ⋯ ×_{D−1} U_{D−1} : ‖S‖_F = α, U_d ∈ O(n_d, ν_d) }
//! ```
//!
//! Component nets are grown by greedy farthest-point insertion over a random
//! pool and then certified on fresh probes. Stiefel distances use the largest
//! column ℓ₂ distance. The product of the component nets, mapped through the
//! Tucker composition, is a candidate `ε′`-net with
//! `ε′ = ε + α((1 + rε)^D − 1)`, which is also probed.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::CoveringSpec;
use crate::error::{Error, Result};
use crate::linalg::random_orthonormal;
use crate::rng::{derive_seed, rng_from_seed, SeededRng};
use crate::tensor::{multi_mode_product, DenseTensor, Shape};

const PROBES: usize = 1000;
/// Pool points are covered to this fraction of `ε` before probing.
const POOL_MARGIN: f64 = 0.8;
const MAX_POOL: usize = 64_000;

#[derive(Clone, Debug)]
pub struct CoveringNet {
    pub elements: Vec<DenseTensor>,
    pub core_size: usize,
    pub stiefel_sizes: Vec<usize>,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// Largest probe-to-net distance seen when certifying the composed net.
    pub achieved_radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NetSummary {
    pub size: usize,
    pub core_size: usize,
    pub stiefel_sizes: Vec<usize>,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub achieved_radius: f64,
}

impl CoveringNet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn summary(&self) -> NetSummary {
        NetSummary {
            size: self.len(),
            core_size: self.core_size,
            stiefel_sizes: self.stiefel_sizes.clone(),
            epsilon: self.epsilon,
            epsilon_prime: self.epsilon_prime,
            achieved_radius: self.achieved_radius,
        }
    }

    /// Distance from `x` to the nearest net element.
    pub fn distance(&self, x: &DenseTensor) -> f64 {
        self.elements
            .iter()
            .map(|e| e.sub(x).expect("same shape").frobenius())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Greedy farthest-point net over samples drawn by `sample`, certified on
/// `PROBES` fresh draws.
fn grow_net<T: Clone + Send + Sync>(
    eps: f64,
    seed: u64,
    sample: impl Fn(&mut SeededRng) -> T + Sync,
    dist: impl Fn(&T, &T) -> f64 + Sync,
) -> Result<Vec<T>> {
    let mut pool_size = 2000;
    let mut round = 0u64;
    let mut net: Vec<T> = Vec::new();
    loop {
        let mut rng = rng_from_seed(derive_seed(seed, &[round]));
        let pool: Vec<T> = (0..pool_size).map(|_| sample(&mut rng)).collect();
        let mut gap: Vec<f64> = pool
            .par_iter()
            .map(|p| net.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .collect();
        loop {
            let (far, &d) = gap.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty pool");
            if d <= POOL_MARGIN * eps {
                break;
            }
            let center = pool[far].clone();
            gap.par_iter_mut().zip(&pool).for_each(|(g, p)| *g = g.min(dist(p, &center)));
            net.push(center);
        }

        let mut probe_rng = rng_from_seed(derive_seed(seed, &[round, 0xF0]));
        let probes: Vec<T> = (0..PROBES).map(|_| sample(&mut probe_rng)).collect();
        let worst = probes
            .par_iter()
            .map(|p| net.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max);
        if worst <= eps {
            return Ok(net);
        }
        if pool_size >= MAX_POOL {
            return Err(Error::CoverageFailed { achieved: worst, target: eps });
        }
        pool_size *= 2;
        round += 1;
    }
}

fn sphere_point(dim: usize, alpha: f64, rng: &mut SeededRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| alpha * x / n).collect();
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn max_column_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

struct Stratum {
    core_shape: Shape,
    dims: Vec<usize>,
    nu: Vec<usize>,
    alpha: f64,
}

impl Stratum {
    fn sample(&self, rng: &mut SeededRng) -> DenseTensor {
        let core = DenseTensor::from_vec(self.core_shape.clone(), sphere_point(self.core_shape.total(), self.alpha, rng)).expect("finite");
        let factors: Vec<DMatrix<f64>> = self.dims.iter().zip(&self.nu).map(|(&n, &v)| random_orthonormal(n, v, rng)).collect();
        multi_mode_product(&core, &factors).expect("conforming factors")
    }
}

/// Candidate `ε′`-net of `𝔗(ν)` from component `ε`-nets.
pub fn build_net(nu: &[usize], dims: &[usize], alpha: f64, epsilon: f64, seed: u64) -> Result<CoveringNet> {
    let spec = CoveringSpec { alpha, epsilon, r: nu.iter().sum(), dims: dims.to_vec(), partition: Some(nu.to_vec()) };
    spec.validate()?;
    let eps_prime = spec.epsilon_prime();
    let stratum = Stratum { core_shape: Shape::new(nu.to_vec())?, dims: dims.to_vec(), nu: nu.to_vec(), alpha };

    let (elements, core_size, stiefel_sizes) = if epsilon >= 2.0 * alpha {
        // every element has norm α, so any single one is within 2α ≤ ε
        let mut rng = rng_from_seed(seed);
        (vec![stratum.sample(&mut rng)], 1, vec![1; dims.len()])
    } else {
        let core_net = grow_net(
            epsilon,
            derive_seed(seed, &[0]),
            |rng| sphere_point(stratum.core_shape.total(), alpha, rng),
            |a, b| euclid(a, b),
        )?;
        let stiefel_nets: Vec<Vec<DMatrix<f64>>> = dims
            .iter()
            .zip(nu)
            .enumerate()
            .map(|(d, (&n, &v))| {
                grow_net(epsilon, derive_seed(seed, &[1, d as u64]), |rng| random_orthonormal(n, v, rng), max_column_distance)
            })
            .collect::<Result<_>>()?;

        let sizes: Vec<usize> = stiefel_nets.iter().map(Vec::len).collect();
        let combos: usize = sizes.iter().product::<usize>() * core_net.len();
        let elements: Vec<DenseTensor> = (0..combos)
            .into_par_iter()
            .map(|mut k| {
                let c = k % core_net.len();
                k /= core_net.len();
                let factors: Vec<DMatrix<f64>> = stiefel_nets
                    .iter()
                    .map(|net| {
                        let f = net[k % net.len()].clone();
                        k /= net.len();
                        f
                    })
                    .collect();
                let core = DenseTensor::from_vec(stratum.core_shape.clone(), core_net[c].clone()).expect("finite");
                multi_mode_product(&core, &factors).expect("conforming factors")
            })
            .collect();
        (elements, core_net.len(), sizes)
    };

    let mut net = CoveringNet { elements, core_size, stiefel_sizes, epsilon, epsilon_prime: eps_prime, achieved_radius: 0.0 };
    let mut rng = rng_from_seed(derive_seed(seed, &[2]));
    let probes: Vec<DenseTensor> = (0..PROBES).map(|_| stratum.sample(&mut rng)).collect();
    net.achieved_radius = probes.par_iter().map(|p| net.distance(p)).reduce(|| 0.0, f64::max);
    if net.achieved_radius > eps_prime {
        return Err(Error::CoverageFailed { achieved: net.achieved_radius, target: eps_prime });
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::covering_bound;

    #[test]
    fn rank_one_two_by_two_net() {
        let net = build_net(&[1, 1], &[2, 2], 1.0, 0.5, 1).unwrap();
        assert!((net.epsilon_prime - 3.5).abs() < 1e-14);
        assert!(net.achieved_radius <= net.epsilon_prime);
        assert_eq!(net.core_size, 2);
        let spec = CoveringSpec { alpha: 1.0, epsilon: 0.5, r: 2, dims: vec![2, 2], partition: Some(vec![1, 1]) };
        let count = covering_bound(&spec).unwrap().intermediates["count"];
        assert!((count - 629_856.0).abs() < 1e-6);
        assert!((net.len() as f64) <= count);

        // independent probes of unit-norm rank-one matrices
        let mut rng = rng_from_seed(99);
        for _ in 0..200 {
            let a = sphere_point(2, 1.0, &mut rng);
            let b = sphere_point(2, 1.0, &mut rng);
            let x = DenseTensor::outer(&[&a, &b]).unwrap();
            assert!(net.distance(&x) <= net.epsilon_prime);
        }
    }

    #[test]
    fn component_nets_meet_their_radius() {
        let net = grow_net(0.3, 5, |rng| random_orthonormal(3, 2, rng), max_column_distance).unwrap();
        let mut rng = rng_from_seed(1234);
        for _ in 0..500 {
            let u = random_orthonormal(3, 2, &mut rng);
            let d = net.iter().map(|q| max_column_distance(&u, q)).fold(f64::INFINITY, f64::min);
            assert!(d <= 0.3 + 0.05, "{d}");
        }
    }

    #[test]
    fn large_epsilon_gives_single_point() {
        let net = build_net(&[1, 2], &[2, 3], 1.0, 2.0, 3).unwrap();
        assert_eq!(net.len(), 1);
        assert!((net.elements[0].frobenius() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_partitions() {
        assert!(build_net(&[3, 1], &[2, 2], 1.0, 0.5, 0).is_err());
        assert!(build_net(&[1], &[2, 2], 1.0, 0.5, 0).is_err());
        assert!(build_net(&[1, 1], &[2, 2], 1.0, 0.0, 0).is_err());
    }
}
