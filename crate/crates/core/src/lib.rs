//! Numerical laboratory for gradient kernels along optimizer trajectories.
//!
//! The crate trains small fully connected networks with a family of
//! first-order optimizers (plain gradient descent, SGD, SGD with momentum,
//! RMSprop, Adam), records the full optimizer state along the trajectory,
//! and analyzes the run through the lens of tangent features
//! `∇_Θ f(x, Θ_t)`:
//!
//! * gradient kernels `K_t(x, x') = ⟨∇_Θ f(x,Θ_t), ∇_Θ f(x',Θ_t)⟩`,
//!   their two-time, normalized and preconditioner-weighted variants,
//!   and path-kernel time integrals ([`kernels`]);
//! * kernel-weighted reconstructions of the trained output from the
//!   residual history ([`domingos`]);
//! * Euler–Maruyama simulation of the continuous-time surrogates of the
//!   discrete optimizers and a weak-order tester ([`sde`]);
//! * tangent-geometry diagnostics: rank gaps, kernel neighbors, centered
//!   kernel alignment, null-space residuals, linear margins
//!   ([`diagnostics`]).
//!
//! Everything is deterministic given the run configuration: batches and
//! Brownian increments come from counter-based RNG streams keyed by
//! `(seed, step)`, and parallel reductions use fixed orders.

pub mod autodiff;
pub mod config;
pub mod datagen;
pub mod diagnostics;
pub mod domingos;
pub mod error;
pub mod experiments;
pub mod export;
pub mod kernels;
pub mod optim;
pub mod rng;
pub mod sde;
pub mod trajectory;

pub use error::{Error, Result};
