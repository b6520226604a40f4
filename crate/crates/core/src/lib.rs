//! Numerical engine for Poisson shot noise processes
//! `S_t = Σ_n H(t − T_n, M_n) 1{T_n ≤ t}`.
//!
//! The crate evaluates closed-form asymptotics of `S_t` — sharp deviation
//! tails and point masses at scale `O(t)`, fluctuation expansions at scales
//! `o(t)`, Cramér–Lundberg ruin bounds, and stable-law approximation rates —
//! and ships the Monte Carlo simulators that act as independent oracles for
//! every formula.
//!
//! Module map:
//! - [`dist`]: probability-law primitives (offspring, total progeny, marks,
//!   stable laws and their transforms).
//! - [`tilt`]: exponential tilting: the equation `λ E[Z e^{θZ}] = x`, tilted
//!   moments, rate function, Lundberg root.
//! - [`phi`]: the shot-shape correction integral
//!   `φ(z) = ∫₀^∞ (E[e^{zH(s,M)}] − E[e^{zZ}]) ds` with certified truncation.
//! - [`asym`]: partition/Faà di Bruno combinatorics, the lattice expansion
//!   coefficients, assembled tail/point-mass estimates and fluctuations.
//! - [`sim`]: path and cluster simulation with counter-based RNG streams.
//! - [`stable_approx`]: Kolmogorov distance and convergence-rate experiments.
//! - [`ruin`]: finite-horizon ruin Monte Carlo and two-sided bounds.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod asym;
pub mod dist;
pub mod error;
pub mod math;
pub mod model;
pub mod phi;
pub mod quad;
pub mod rng;
pub mod ruin;
pub mod sim;
pub mod stable_approx;
pub mod tilt;

pub use error::{Error, Result};
