//! Low-Tucker-rank tensor recovery from Gaussian linear measurements.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: dense storage, unfoldings, mode products, Gaussian draws, file formats
//! - [`decomp`]: HOSVD, mode spectra, the concatenated spectrum map `σ`
//! - [`norms`]: operator norm (alternating rank-one maximization), nuclear-norm surrogate and brackets
//! - [`rpp`]: the conjugate pair `ω*_α` / `ω**_α` and the proximal map of `ω**_α`
//! - [`sensing`]: Gaussian measurement ensembles with forward and adjoint maps
//! - [`solvers`]: ADMM for sum-of-nuclear-norms and `ω**_α ∘ σ` recovery
//! - [`bounds`]: closed-form error bounds, covering counts, ε-nets, Monte Carlo checks
//! - [`harness`]: seeded sweeps and CSV output

pub mod bounds;
pub mod decomp;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod norms;
pub mod rng;
pub mod rpp;
pub mod sensing;
pub mod solvers;
pub mod tensor;

pub use decomp::{hosvd, mode_spectrum, random_tucker, sigma_map, HosvdFactors, SpectrumVector};
pub use error::{Error, Result};
pub use tensor::{gaussian_tensor, matricize, mode_product, tensorize, DenseTensor, Matricized, Shape};
