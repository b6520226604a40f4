//! Assembled sharp-deviation estimates at scale O(t): the non-lattice tail
//! `P(S_t ≥ tx) ≈ e^{−tη*(x)+λφ(θ_x)} / (θ_x √(2πλt E[Z²e^{θ_x Z}]))`,
//! and the lattice point-mass/tail forms with their 1/t^k corrections.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::MarkedShotModel;
use crate::phi::{phi_derivatives_auto, ClusterPhiConfig, PhiMethod};
use crate::tilt::{cluster_tilt_closed_form_with_moments, solve_tilt_with_moments, TiltSolution};

use super::fdb::psi_derivatives;
use super::lattice::{lattice_point_coeff, lattice_tail_coeff, ExpansionInputs};

use core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SharpKind {
    NonLatticeTail,
    LatticePoint,
    LatticeTail,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SharpDeviationEstimate {
    pub kind: SharpKind,
    pub x: f64,
    pub t: f64,
    /// Expansion order: σ = 1 is the plain formula, σ ≥ 2 adds Σ c_k/t^k.
    pub sigma: u32,
    /// The σ = 1 value.
    pub leading: f64,
    /// a_k or b_k for k = 1..=σ−1.
    pub corrections: Vec<f64>,
    /// The assembled approximation.
    pub value: f64,
    pub theta: f64,
    pub rate: f64,
    /// φ(θ_x) and the method that produced it.
    pub phi: f64,
    pub phi_method: PhiMethod,
    /// Seed of the φ estimator when Monte Carlo backed.
    pub phi_seed: Option<u64>,
}

/// Controls expansion order and the φ evaluation route.
#[derive(Debug, Clone, Copy)]
pub struct SharpConfig {
    pub sigma: u32,
    pub phi_tol: f64,
    pub cluster_phi: ClusterPhiConfig,
}

impl Default for SharpConfig {
    fn default() -> Self {
        SharpConfig {
            sigma: 1,
            phi_tol: 1e-9,
            cluster_phi: ClusterPhiConfig::default(),
        }
    }
}

fn solve_model_tilt(model: &MarkedShotModel, x: f64, order: u32) -> Result<TiltSolution> {
    match &model.marks {
        crate::model::MarkSource::Cluster(law) => {
            cluster_tilt_closed_form_with_moments(law, model.lambda, x, order)
        }
        _ => solve_tilt_with_moments(&model.z_model()?, x, order),
    }
}

/// One sharp-deviation estimate of the requested kind.
pub fn sharp_estimate(
    model: &MarkedShotModel,
    x: f64,
    t: f64,
    kind: SharpKind,
    cfg: &SharpConfig,
) -> Result<SharpDeviationEstimate> {
    if !(t > 0.0) {
        return Err(Error::domain("horizon t must be positive"));
    }
    if cfg.sigma == 0 {
        return Err(Error::domain("expansion order sigma must be ≥ 1"));
    }
    let lattice = model.is_lattice();
    match kind {
        SharpKind::NonLatticeTail => {
            if lattice {
                return Err(Error::precondition(
                    "model is lattice-valued; use the lattice forms",
                ));
            }
            if cfg.sigma > 1 {
                return Err(Error::domain(
                    "1/t^k corrections are only available for the lattice forms",
                ));
            }
        }
        SharpKind::LatticePoint | SharpKind::LatticeTail => {
            if !lattice {
                return Err(Error::precondition(
                    "model is not lattice-valued; use the non-lattice tail",
                ));
            }
            let tx = t * x;
            if math::abs(tx - math::round(tx)) > 1e-9 * tx.max(1.0) {
                return Err(Error::precondition(alloc::format!(
                    "lattice forms need tx ∈ ℕ, got tx = {tx}"
                )));
            }
        }
    }

    let lambda = model.lambda;
    let moment_order = 2 * (cfg.sigma - 1) + 2;
    let tilt = solve_model_tilt(model, x, moment_order.max(2))?;
    let mean_slope = lambda * solve_mean(model)?;
    if matches!(kind, SharpKind::NonLatticeTail | SharpKind::LatticeTail) && x <= mean_slope {
        return Err(Error::domain(alloc::format!(
            "tail estimates need x > λE[Z] = {mean_slope}, got {x}"
        )));
    }

    // φ and its derivatives up to the order the corrections need
    let phi_order = 2 * (cfg.sigma - 1);
    let phis = phi_derivatives_auto(model, tilt.theta, phi_order, cfg.phi_tol, &cfg.cluster_phi)?;
    let (phi_method, phi_seed) = phi_provenance(model, &cfg.cluster_phi);
    let psi = psi_derivatives(&phis, lambda, phi_order)?;

    let sqrt_denom = math::sqrt(2.0 * lambda * PI * t * tilt.m2);
    let decay = math::exp(-t * tilt.rate);
    let psi0 = psi[0];

    let mut corrections = Vec::new();
    let inputs = ExpansionInputs {
        theta: tilt.theta,
        lambda,
        tilted: &tilt.higher,
        psi: &psi,
    };
    for k in 1..cfg.sigma {
        let c = match kind {
            SharpKind::LatticePoint => lattice_point_coeff(&inputs, k)?,
            SharpKind::LatticeTail => lattice_tail_coeff(&inputs, k)?,
            SharpKind::NonLatticeTail => unreachable!("σ = 1 enforced above"),
        };
        corrections.push(c);
    }
    let correction_sum: f64 = corrections
        .iter()
        .enumerate()
        .map(|(i, c)| c / math::powi(t, i as i32 + 1))
        .sum();

    let (leading, value) = match kind {
        SharpKind::NonLatticeTail => {
            let v = decay * psi0 / (tilt.theta * sqrt_denom);
            (v, v)
        }
        SharpKind::LatticePoint => {
            let leading = decay * psi0 / sqrt_denom;
            let value = if corrections.is_empty() {
                leading
            } else {
                decay / sqrt_denom * (psi0 + correction_sum)
            };
            (leading, value)
        }
        SharpKind::LatticeTail => {
            let geo = 1.0 - math::exp(-tilt.theta);
            let leading = decay * psi0 / (geo * sqrt_denom);
            // b_k pairs with ψ/(1−e^{−θ}); see asym::lattice
            let value = if corrections.is_empty() {
                leading
            } else {
                decay / sqrt_denom * (psi0 / geo + correction_sum)
            };
            (leading, value)
        }
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::numeric("sharp estimate not positive/finite", value));
    }
    Ok(SharpDeviationEstimate {
        kind,
        x,
        t,
        sigma: cfg.sigma,
        leading,
        corrections,
        value,
        theta: tilt.theta,
        rate: tilt.rate,
        phi: phis[0],
        phi_method,
        phi_seed,
    })
}

fn phi_provenance(model: &MarkedShotModel, cfg: &ClusterPhiConfig) -> (PhiMethod, Option<u64>) {
    match &model.marks {
        crate::model::MarkSource::Cluster(_) => (PhiMethod::NestedMc, Some(cfg.seed)),
        _ => (PhiMethod::Quadrature, None),
    }
}

fn solve_mean(model: &MarkedShotModel) -> Result<f64> {
    model.z_model()?.z_moment(1)
}

/// `P(S_t ≥ tx)` estimate; picks the lattice or non-lattice tail form from
/// the model's declared lattice structure.
pub fn sharp_tail(
    model: &MarkedShotModel,
    x: f64,
    t: f64,
    cfg: &SharpConfig,
) -> Result<SharpDeviationEstimate> {
    let kind = if model.is_lattice() {
        SharpKind::LatticeTail
    } else {
        SharpKind::NonLatticeTail
    };
    sharp_estimate(model, x, t, kind, cfg)
}

/// `P(S_t = tx)` estimate (lattice models only).
pub fn sharp_point_mass(
    model: &MarkedShotModel,
    x: f64,
    t: f64,
    cfg: &SharpConfig,
) -> Result<SharpDeviationEstimate> {
    sharp_estimate(model, x, t, SharpKind::LatticePoint, cfg)
}

/// The O(1)-accurate asymptotes (E[S_t], Var(S_t)) ≈ (λE[Z]t, λE[Z²]t).
pub fn mean_variance_asymptote(model: &MarkedShotModel, t: f64) -> Result<(f64, f64)> {
    let z = model.z_model()?;
    Ok((
        model.lambda * z.z_moment(1)? * t,
        model.lambda * z.z_moment(2)? * t,
    ))
}
