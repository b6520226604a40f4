//! Fluctuations of `S_t − λE[Z]t` at scales o(t): the Gaussian regime, the
//! extended regime driven by the rate function, and the explicit
//! exponential-polynomial expansion built from derivatives of the tilt at
//! the mean.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::MarkedShotModel;
use crate::tilt::{solve_tilt_with_moments, ZModel};

use super::fdb::faa_di_bruno;

use core::f64::consts::PI;

/// Power-law scaling schedule y(t) = coeff·t^exponent. The o(·) regime
/// preconditions are checked symbolically on (coeff, exponent) rather than
/// sampled pointwise.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub coeff: f64,
    pub exponent: f64,
}

impl Schedule {
    pub fn new(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff > 0.0) || !(0.0..0.5).contains(&exponent) {
            return Err(Error::domain(
                "schedule needs coeff > 0 and exponent in [0, 1/2)",
            ));
        }
        Ok(Schedule { coeff, exponent })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeff * math::powf(t, self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Regime {
    /// y(t) = o(t^{1/6}): plain Gaussian tail.
    Clt,
    /// y → ∞, y = o(t^{1/2}): rate-function tail e^{−tη*(v(t))}/(y√(2π)).
    Extended,
    /// y = o(t^{1/2−1/m}): explicit polynomial-in-(y/√t) exponent of
    /// order m ≥ 3.
    Expansion { m: u32 },
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FluctuationEstimate {
    pub regime: Regime,
    pub t: f64,
    pub y: f64,
    /// Estimate of P((S_t − λE[Z]t)/√(λE[Z²]t) > y(t)).
    pub value: f64,
    /// Regime-(iii) derivative table θ^{(j)} at the mean, j = 1..=m−1.
    pub theta_derivs: Vec<f64>,
}

/// Derivatives θ^{(j)}_{λE[Z]} for j = 1..=count, from the recursion
/// θ' = g(θ) with g(u) = 1/(λE[Z²e^{uZ}]): each further derivative is a
/// Faà di Bruno composition of g-derivatives at 0 with the table built so
/// far.
pub fn tilt_derivatives_at_mean(model: &ZModel, count: u32) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let lambda = model.lambda;
    // h(u) = E[Z² e^{uZ}]: h^{(m)}(0) = E[Z^{m+2}]
    let h0 = model.z_moment(2)?;
    let max_inner = count as usize;
    let inner_h: Vec<f64> = (1..=max_inner)
        .map(|m| model.z_moment(m as u32 + 2))
        .collect::<Result<_>>()?;
    // outer reciprocal derivatives r^{(i)}(w) = (−1)^i i!/(λ w^{i+1}) at h0
    let outer_r: Vec<f64> = (1..=max_inner)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * math::factorial(i as u64) / (lambda * math::powf(h0, i as f64 + 1.0))
        })
        .collect();
    // g^{(i)}(0) for g = 1/(λ h)
    let mut g = alloc::vec![0.0f64; max_inner];
    for i in 1..=max_inner {
        g[i - 1] = faa_di_bruno(&outer_r, &inner_h, i as u32)?;
    }
    let mut theta = alloc::vec![1.0 / (lambda * h0)];
    for j in 1..count {
        let next = faa_di_bruno(&g, &theta, j)?;
        theta.push(next);
    }
    Ok(theta)
}

/// One fluctuation estimate at time t for the declared schedule and regime.
pub fn fluctuation(
    model: &MarkedShotModel,
    schedule: &Schedule,
    regime: Regime,
    t: f64,
) -> Result<FluctuationEstimate> {
    if !(t > 1.0) {
        return Err(Error::domain("fluctuation estimates need t > 1"));
    }
    let y = schedule.eval(t);
    if y * y > t {
        return Err(Error::domain(alloc::format!(
            "schedule leaves the fluctuation range at t = {t}: y = {y} exceeds √t"
        )));
    }
    let z = model.z_model()?;
    let lambda = model.lambda;
    let mean = z.z_moment(1)?;
    let var = z.z_moment(2)?;
    match regime {
        Regime::Clt => {
            if schedule.exponent >= 1.0 / 6.0 {
                return Err(Error::domain(
                    "CLT regime needs y(t) = o(t^{1/6}): declare exponent < 1/6",
                ));
            }
            Ok(FluctuationEstimate {
                regime,
                t,
                y,
                value: math::normal_tail(y),
                theta_derivs: Vec::new(),
            })
        }
        Regime::Extended => {
            if schedule.exponent <= 0.0 {
                return Err(Error::domain(
                    "extended regime needs y(t) → ∞: declare exponent > 0",
                ));
            }
            let v = lambda * mean + y / math::sqrt(t) * math::sqrt(lambda * var);
            let sol = solve_tilt_with_moments(&z, v, 2)?;
            let value = math::exp(-t * sol.rate) / (y * math::sqrt(2.0 * PI));
            Ok(FluctuationEstimate {
                regime,
                t,
                y,
                value,
                theta_derivs: Vec::new(),
            })
        }
        Regime::Expansion { m } => {
            if m < 3 {
                return Err(Error::domain("expansion regime needs order m ≥ 3"));
            }
            let limit = 0.5 - 1.0 / m as f64;
            if schedule.exponent >= limit {
                return Err(Error::domain(alloc::format!(
                    "expansion of order {m} needs y(t) = o(t^{{{limit}}}): declare a \
                     smaller exponent"
                )));
            }
            let derivs = tilt_derivatives_at_mean(&z, m - 1)?;
            let lam_var = lambda * var;
            let ratio = y / math::sqrt(t);
            let mut series = 0.0f64;
            for j in 1..=(m - 2) {
                series += math::powf(lam_var, (j as f64 + 2.0) / 2.0)
                    * derivs[j as usize]
                    / math::factorial(j as u64 + 2)
                    * math::powi(ratio, j as i32);
            }
            let value = math::exp(-y * y / 2.0 * (1.0 + 2.0 * series))
                / (y * math::sqrt(2.0 * PI));
            Ok(FluctuationEstimate {
                regime,
                t,
                y,
                value,
                theta_derivs: derivs,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::MarkLaw;
    use crate::model::ShotShape;
    use crate::tilt::solve_tilt;

    fn exp_model() -> MarkedShotModel {
        MarkedShotModel::with_mark(1.0, ShotShape::Capped, MarkLaw::exponential(1.0).unwrap())
            .unwrap()
    }

    #[test]
    fn first_derivative_is_reciprocal_second_moment() {
        let model = exp_model().z_model().unwrap();
        let d = tilt_derivatives_at_mean(&model, 1).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-14); // 1/(λE[M²]) = 1/2
    }

    #[test]
    fn derivative_table_exponential_marks() {
        // exp(1), λ=1: θ_x = 1 − x^{−1/2} exactly, so
        // θ' (1) = 1/2, θ'' = −3/4, θ^{(3)} = 15/8 at x = λE[M] = 1
        let model = exp_model().z_model().unwrap();
        let d = tilt_derivatives_at_mean(&model, 3).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12);
        assert!((d[1] - (-0.75)).abs() < 1e-12, "theta'' = {}", d[1]);
        assert!((d[2] - 1.875).abs() < 1e-12, "theta''' = {}", d[2]);
    }

    #[test]
    fn derivative_table_matches_numeric_differentiation_of_tilt() {
        // independent oracle: central differences of the solved θ_x at the
        // mean slope, Richardson extrapolated
        let model = exp_model().z_model().unwrap();
        let d = tilt_derivatives_at_mean(&model, 3).unwrap();
        let theta_at = |x: f64| solve_tilt(&model, x).unwrap().theta;
        let second = |h: f64| (theta_at(1.0 + h) - 2.0 * theta_at(1.0) + theta_at(1.0 - h)) / (h * h);
        let (c1, c2) = (second(1e-3), second(5e-4));
        let second_rich = (4.0 * c2 - c1) / 3.0;
        assert!(
            (d[1] - second_rich).abs() < 1e-5,
            "{} vs {second_rich}",
            d[1]
        );
        let third = |h: f64| {
            (theta_at(1.0 + 2.0 * h) - 2.0 * theta_at(1.0 + h) + 2.0 * theta_at(1.0 - h)
                - theta_at(1.0 - 2.0 * h))
                / (2.0 * h * h * h)
        };
        let (c1, c2) = (third(1e-2), third(5e-3));
        let third_rich = (4.0 * c2 - c1) / 3.0;
        assert!(
            (d[2] - third_rich).abs() < 1e-4 * d[2].abs(),
            "{} vs {third_rich}",
            d[2]
        );
    }

    #[test]
    fn regime_two_rate_identity() {
        // |2tη*(v(t))/y(t)² − 1| ≤ 0.05 at t = 10⁴ with y = t^{1/4}.
        // λ = 4 keeps the third-moment correction ≈ θ''(λE[Z²])^{3/2}/(3t^{1/4})
        // inside the budget at this horizon.
        let model = MarkedShotModel::with_mark(
            4.0,
            ShotShape::Capped,
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        let z = model.z_model().unwrap();
        let t = 1.0e4f64;
        let y = math::powf(t, 0.25);
        let v = 4.0 + y / math::sqrt(t) * math::sqrt(4.0 * 2.0);
        let sol = solve_tilt(&z, v).unwrap();
        let ratio = 2.0 * t * sol.rate / (y * y);
        assert!((ratio - 1.0).abs() <= 0.05, "ratio {ratio}");
    }

    #[test]
    fn clt_regime_is_gaussian_tail() {
        let model = exp_model();
        let sched = Schedule::new(1.2, 0.1).unwrap();
        let est = fluctuation(&model, &sched, Regime::Clt, 400.0).unwrap();
        let want = math::normal_tail(sched.eval(400.0));
        assert_eq!(est.value, want);
    }

    #[test]
    fn regime_preconditions_enforced() {
        let model = exp_model();
        // CLT needs exponent < 1/6
        let too_fast = Schedule::new(1.0, 0.3).unwrap();
        assert!(fluctuation(&model, &too_fast, Regime::Clt, 100.0).is_err());
        // extended needs growth
        let flat = Schedule::new(2.0, 0.0).unwrap();
        assert!(fluctuation(&model, &flat, Regime::Extended, 100.0).is_err());
        // expansion order bound: m = 4 needs exponent < 1/4
        let quarter = Schedule::new(1.0, 0.3).unwrap();
        assert!(
            fluctuation(&model, &quarter, Regime::Expansion { m: 4 }, 100.0).is_err()
        );
        // pointwise guard: y(t) > √t
        let big = Schedule::new(40.0, 0.1).unwrap();
        assert!(fluctuation(&model, &big, Regime::Clt, 30.0).is_err());
    }

    #[test]
    fn extended_and_expansion_agree_for_moderate_y() {
        // both regimes approximate the same probability; in the overlap they
        // should agree to a few percent
        let model = exp_model();
        let sched = Schedule::new(1.0, 0.2).unwrap();
        let t = 1.0e5;
        let ext = fluctuation(&model, &sched, Regime::Extended, t).unwrap();
        let exp4 = fluctuation(&model, &sched, Regime::Expansion { m: 4 }, t).unwrap();
        let ratio = ext.value / exp4.value;
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }
}
