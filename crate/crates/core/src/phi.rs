//! The shot-shape correction integral
//! `φ(z) = ∫₀^∞ (E[e^{zH(s,M₁)}] − E[e^{zZ}]) ds`
//! and its derivatives `φ⁽ⁿ⁾(z) = ∫₀^∞ (E[H^n e^{zH}] − E[Z^n e^{zZ}]) ds`,
//! with closed forms where they exist, certified truncation for quadrature,
//! the sign/Hölder envelope bounds, and a common-random-number Monte Carlo
//! estimator for cluster counting shapes.

use alloc::format;
use alloc::vec::Vec;

use crate::dist::{ClusterLaw, MarkLaw};
use crate::error::{Error, Result};
use crate::math;
use crate::quad;
use crate::rng::StreamRng;
use crate::sim::simulate_cluster;
use crate::tilt::{ZKind, ZModel};

pub use crate::model::{MarkSource, MarkedShotModel, ShapeCdf, ShotShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PhiMethod {
    ClosedForm,
    Quadrature,
    NestedMc,
}

/// A computed value of φ (or one of its derivatives) with provenance.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PhiValue {
    pub value: f64,
    pub abs_error: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub method: PhiMethod,
}

impl PhiValue {
    fn with_bounds(mut self, bounds: Option<(f64, f64)>) -> Result<Self> {
        if let Some((lo, hi)) = bounds {
            self.lower_bound = lo;
            self.upper_bound = hi;
            let slack = self.abs_error + 1e-12;
            if self.value < lo - slack || self.value > hi + slack {
                return Err(Error::numeric(
                    "phi value escapes its analytic envelope",
                    (self.value - hi).max(lo - self.value),
                ));
            }
        }
        Ok(self)
    }
}

/// Closed form where the (shape, mark) pair admits one:
///   capped + exponential(a):          φ(θ) = −θ/(a−θ)²
///   capped + deterministic/table:     elementary integral per atom
///   multiplicative·Uniform01 + exp:   φ(θ) = −(aθ/(a−θ)) Φ(θ) with
///       Φ(θ) = ((a−θ)/θ²)·log((a−θ)/a) + 1/θ
///   constant / F ≡ 1:                 φ ≡ 0
/// Unsupported pairs fall through to quadrature (flagged in `method`).
pub fn phi_closed_form(shape: &ShotShape, mark: &MarkLaw, theta: f64) -> Result<PhiValue> {
    if theta >= mark.mgf_edge() {
        return Err(Error::domain(format!(
            "phi needs theta below the Z mgf edge {}, got {theta}",
            mark.mgf_edge()
        )));
    }
    let closed = closed_form_value(shape, mark, theta)?;
    match closed {
        Some(value) => Ok(PhiValue {
            value,
            abs_error: 0.0,
            lower_bound: f64::NEG_INFINITY,
            upper_bound: f64::INFINITY,
            method: PhiMethod::ClosedForm,
        }),
        None => phi_quadrature(shape, mark, theta, 1e-9),
    }
}

fn closed_form_value(shape: &ShotShape, mark: &MarkLaw, theta: f64) -> Result<Option<f64>> {
    Ok(match (shape, mark) {
        (ShotShape::Constant, _) => Some(0.0),
        (ShotShape::Multiplicative { f: ShapeCdf::Degenerate }, _) => Some(0.0),
        (ShotShape::Capped, MarkLaw::Exponential { rate }) => {
            let a = *rate;
            Some(-theta / ((a - theta) * (a - theta)))
        }
        (ShotShape::Capped, MarkLaw::Deterministic { value }) => {
            Some(capped_atom_integral(*value, theta))
        }
        (ShotShape::Capped, MarkLaw::Table { values, probs }) => Some(
            values
                .iter()
                .zip(probs)
                .map(|(&v, &q)| q * capped_atom_integral(v, theta))
                .sum(),
        ),
        (ShotShape::Multiplicative { f: ShapeCdf::Uniform01 }, MarkLaw::Exponential { rate }) => {
            let a = *rate;
            if theta == 0.0 {
                Some(0.0)
            } else {
                let big_phi =
                    (a - theta) / (theta * theta) * math::ln((a - theta) / a) + 1.0 / theta;
                Some(-(a * theta / (a - theta)) * big_phi)
            }
        }
        _ => None,
    })
}

/// `∫₀^∞ (e^{θ(s∧v)} − e^{θv}) ds = (e^{θv}−1)/θ − v e^{θv}` for a point
/// mass at v.
fn capped_atom_integral(v: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    math::exp_m1(theta * v) / theta - v * math::exp(theta * v)
}

/// The order-n integrand `E[H^n e^{θH}] − E[Z^n e^{θZ}]` at elapsed time s,
/// for shapes whose mark expectations are analytic.
fn integrand(shape: &ShotShape, mark: &MarkLaw, theta: f64, n: u32, s: f64) -> Result<f64> {
    let settled = mark.tilted_moment(n, theta)?;
    match shape {
        ShotShape::Constant => Ok(0.0),
        ShotShape::Multiplicative { f } => {
            let fs = f.cdf(s);
            Ok(math::powi(fs, n as i32) * mark.tilted_moment(n, theta * fs)? - settled)
        }
        ShotShape::Capped => Ok(mark.capped_tilted_moment(n, theta, s)? - settled),
        ShotShape::ClusterCount => Err(Error::domain(
            "cluster-count integrand has no closed form; use the nested-MC estimator",
        )),
    }
}

/// Upper bound on `∫_T^∞ |integrand| ds`, or None when no certified bound
/// exists (e.g. Pareto-1 F, whose correction integral diverges).
fn tail_bound(shape: &ShotShape, mark: &MarkLaw, theta: f64, n: u32, t_star: f64) -> Option<f64> {
    let theta_plus = theta.max(0.0);
    match shape {
        ShotShape::Constant => Some(0.0),
        ShotShape::Multiplicative { f } => {
            let remaining = f.tail_integral(t_star);
            if !remaining.is_finite() {
                return None;
            }
            // |v^n m_n(θv) − m_n(θ)| ≤ (1−v)·(n·m_n(θ⁺) + |θ|·m_{n+1}(θ⁺))
            let m_n = mark.tilted_moment(n, theta_plus).ok()?;
            let m_n1 = mark.tilted_moment(n + 1, theta_plus).ok()?;
            Some((n as f64 * m_n + math::abs(theta) * m_n1) * remaining)
        }
        ShotShape::Capped => match mark {
            MarkLaw::Exponential { rate } => {
                let c = rate - theta;
                if c <= 0.0 {
                    return None;
                }
                // ∫_T^∞ s^n e^{−cs} ds + a ∫_T^∞ J_n(s) ds, where
                // J_n(s) = ∫_s^∞ u^n e^{−cu} du and
                // ∫_T^∞ J_n ds = J_{n+1}(T) − T·J_n(T)
                let j = upper_incomplete_poly_table(n + 1, c, t_star);
                let tail_point = j[n as usize];
                let tail_bulk = j[(n + 1) as usize] - t_star * j[n as usize];
                Some(tail_point + rate * tail_bulk)
            }
            // bounded marks: the integrand vanishes past the largest atom
            MarkLaw::Deterministic { .. } | MarkLaw::Table { .. } => {
                if t_star >= mark.support_sup() {
                    Some(0.0)
                } else {
                    None
                }
            }
            MarkLaw::Custom(_) => None,
        },
        ShotShape::ClusterCount => None,
    }
}

/// J_k(T) = ∫_T^∞ u^k e^{−cu} du for k = 0..=n, by upward recursion.
fn upper_incomplete_poly_table(n: u32, c: f64, t: f64) -> Vec<f64> {
    let et = math::exp(-c * t);
    let mut j = alloc::vec![et / c];
    for k in 1..=n {
        let prev = j[(k - 1) as usize];
        j.push((math::powi(t, k as i32) * et + k as f64 * prev) / c);
    }
    j
}

/// Picks a truncation horizon with certified tail below `budget`.
fn pick_horizon(shape: &ShotShape, mark: &MarkLaw, theta: f64, n: u32, budget: f64) -> Result<f64> {
    // shapes with compact support settle exactly
    let hard_end = match shape {
        ShotShape::Multiplicative { f } => f.support_end(),
        ShotShape::Capped => mark.support_sup(),
        _ => f64::INFINITY,
    };
    if hard_end.is_finite() {
        return Ok(hard_end);
    }
    let mut t_star = 1.0f64;
    for _ in 0..120 {
        match tail_bound(shape, mark, theta, n, t_star) {
            Some(b) if b <= budget => return Ok(t_star),
            Some(_) => t_star *= 1.6,
            None => {
                return Err(Error::domain(
                    "no certified truncation horizon for this shape/mark pair; \
                     supply an explicit horizon",
                ))
            }
        }
    }
    Err(Error::numeric("truncation horizon search failed", t_star))
}

/// φ⁽ⁿ⁾(θ) by adaptive quadrature on [0, T*], with T* chosen so the
/// certified tail bound stays below tol/2.
pub fn phi_quadrature_derivative(
    shape: &ShotShape,
    mark: &MarkLaw,
    theta: f64,
    n: u32,
    tol: f64,
) -> Result<PhiValue> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    if theta >= mark.mgf_edge() {
        return Err(Error::domain(format!(
            "phi needs theta below the Z mgf edge {}, got {theta}",
            mark.mgf_edge()
        )));
    }
    if matches!(shape, ShotShape::Constant)
        || matches!(shape, ShotShape::Multiplicative { f: ShapeCdf::Degenerate })
    {
        return Ok(PhiValue {
            value: 0.0,
            abs_error: 0.0,
            lower_bound: 0.0,
            upper_bound: 0.0,
            method: PhiMethod::ClosedForm,
        });
    }
    let t_star = pick_horizon(shape, mark, theta, n, tol / 2.0)?;
    let tail = tail_bound(shape, mark, theta, n, t_star).unwrap_or(0.0);
    let f = |s: f64| integrand(shape, mark, theta, n, s).unwrap_or(f64::NAN);
    let r = quad::adaptive_simpson(&f, 0.0, t_star, tol / 2.0, 48)?;
    let value = PhiValue {
        value: r.value,
        abs_error: r.abs_error + tail,
        lower_bound: f64::NEG_INFINITY,
        upper_bound: f64::INFINITY,
        method: PhiMethod::Quadrature,
    };
    if n == 0 {
        // sign envelope asserted on every quadrature result
        value.with_bounds(Some(sign_envelope(shape, mark, theta)))
    } else {
        Ok(value)
    }
}

/// φ(θ) by quadrature with the sign envelope asserted.
pub fn phi_quadrature(shape: &ShotShape, mark: &MarkLaw, theta: f64, tol: f64) -> Result<PhiValue> {
    phi_quadrature_derivative(shape, mark, theta, 0, tol)
}

/// Unconditional envelope: θ ≤ 0 gives [0, −θ·∫E[Z−H]]; θ > 0 gives
/// (−∞, 0] (tight lower bounds need conjugate exponents; see `phi_bounds`).
fn sign_envelope(shape: &ShotShape, mark: &MarkLaw, theta: f64) -> (f64, f64) {
    if theta == 0.0 {
        return (0.0, 0.0);
    }
    if theta < 0.0 {
        let gap = mean_gap_mark(shape, mark);
        let hi = if gap.is_finite() {
            -theta * gap
        } else {
            f64::INFINITY
        };
        (0.0, hi)
    } else {
        (f64::NEG_INFINITY, 0.0)
    }
}

/// `∫₀^∞ E[Z − H(s, M)] ds` for mark-driven shapes.
fn mean_gap_mark(shape: &ShotShape, mark: &MarkLaw) -> f64 {
    match shape {
        ShotShape::Constant => 0.0,
        ShotShape::Multiplicative { f } => mark.moment(1) * f.tail_integral(0.0),
        ShotShape::Capped => mark.moment(2) / 2.0,
        ShotShape::ClusterCount => f64::NAN,
    }
}

/// `∫₀^∞ E[Z − H(s, M)] ds` for the full model. For clusters this is the
/// expected sum of all birth times, E[B]·μ/(1−μ)².
pub fn mean_gap(model: &MarkedShotModel) -> Result<f64> {
    match (&model.shape, &model.marks) {
        (ShotShape::ClusterCount, MarkSource::Cluster(law)) => {
            let mu = law.offspring().mean();
            Ok(law.lag().moment(1) * mu / ((1.0 - mu) * (1.0 - mu)))
        }
        (shape, MarkSource::Mark(mark)) => Ok(mean_gap_mark(shape, mark)),
        _ => unreachable!("constructor enforces pairing"),
    }
}

/// Two-sided analytic bounds on φ(θ):
///  - θ < 0: `[0, −θ·∫E[Z−H]]` generically; Galton-Watson clusters refine
///    the lower side to `p₁E[B]e^θ(1−E[e^{θZ}])` and the upper side to lag
///    and progeny norm products.
///  - θ > 0: `[−θ‖e^{θZ}‖_q‖∫(Z−H)‖_{q'}, 0]` over the supplied conjugate
///    pairs, with the matching Galton-Watson refinements.
pub fn phi_bounds(
    shape: &ShotShape,
    model: &ZModel,
    theta: f64,
    exponents: &[(f64, f64)],
) -> Result<(f64, f64)> {
    for &(q, qp) in exponents {
        if !(q > 1.0 && qp > 1.0) || math::abs(1.0 / q + 1.0 / qp - 1.0) > 1e-9 {
            return Err(Error::domain(format!(
                "({q}, {qp}) is not a conjugate exponent pair"
            )));
        }
    }
    if theta == 0.0 {
        return Ok((0.0, 0.0));
    }
    let edge = model.mgf_edge();
    if theta >= edge {
        return Err(Error::domain(format!(
            "phi bounds need theta < a_Z = {edge}, got {theta}"
        )));
    }

    match (&model.kind, shape) {
        (ZKind::Cluster(law), ShotShape::ClusterCount) => cluster_phi_bounds(law, theta, exponents),
        (ZKind::DirectMark(mark), shape) | (ZKind::Bounded { law: mark, .. }, shape) => {
            if theta < 0.0 {
                let gap = mean_gap_mark(shape, mark);
                let hi = if gap.is_finite() {
                    -theta * gap
                } else {
                    f64::INFINITY
                };
                Ok((0.0, hi))
            } else {
                // lower: best over admissible pairs of −θ‖e^{θZ}‖_q‖∫(Z−H)‖_{q'}
                let mut best = f64::NEG_INFINITY;
                let mut any = false;
                for &(q, qp) in exponents {
                    if theta * q >= mark.mgf_edge() {
                        continue;
                    }
                    let zq = match mark.mgf(theta * q) {
                        Ok(v) => math::powf(v, 1.0 / q),
                        Err(_) => continue,
                    };
                    let gap_norm = gap_norm_mark(shape, mark, qp);
                    if !gap_norm.is_finite() {
                        continue;
                    }
                    any = true;
                    best = best.max(-theta * zq * gap_norm);
                }
                if !any {
                    let q_sup = mark.mgf_edge() / theta;
                    return Err(Error::domain(format!(
                        "no admissible conjugate pair: need q in (1, {q_sup})"
                    )));
                }
                Ok((best, 0.0))
            }
        }
        _ => Err(Error::domain("shape/model pairing not supported for bounds")),
    }
}

/// ‖∫(Z−H) ds‖_{q'} for mark-driven shapes (upper estimates only widen the
/// envelope, so the ceiling-moment route is acceptable).
fn gap_norm_mark(shape: &ShotShape, mark: &MarkLaw, qp: f64) -> f64 {
    match shape {
        ShotShape::Constant => 0.0,
        ShotShape::Multiplicative { f } => {
            let r = f.tail_integral(0.0);
            if r.is_finite() {
                math::powf(mark.abs_moment(qp), 1.0 / qp) * r
            } else {
                f64::INFINITY
            }
        }
        ShotShape::Capped => math::powf(mark.abs_moment(2.0 * qp), 1.0 / qp) / 2.0,
        ShotShape::ClusterCount => f64::INFINITY,
    }
}

/// Galton-Watson refinements: the one-sided `p₁E[B]e^θ(1−E[e^{θZ}])` bound
/// plus lag/progeny norm products on the other side.
fn cluster_phi_bounds(
    law: &ClusterLaw,
    theta: f64,
    exponents: &[(f64, f64)],
) -> Result<(f64, f64)> {
    let p1 = law.offspring().pmf(1);
    let eb = law.lag().moment(1);
    let mgf = law.mgf(theta)?;
    let one_sided = p1 * eb * math::exp(theta) * (1.0 - mgf);
    let znorm = |r: f64| -> f64 {
        let order = math::ceil(r).min(12.0).max(1.0) as u32;
        match law.progeny_moment(order) {
            Ok(m) => math::powf(m, 1.0 / r),
            Err(_) => f64::INFINITY,
        }
    };
    if theta < 0.0 {
        // lower = p₁E[B]e^θ(1−mgf) ≥ 0; upper = −θ·inf_q ‖B‖_q‖Z‖_q‖Z‖_{q'}
        let mut hi = f64::INFINITY;
        for &(q, qp) in exponents {
            let cand =
                -theta * math::powf(law.lag().abs_moment(q), 1.0 / q) * znorm(q) * znorm(qp);
            hi = hi.min(cand);
        }
        Ok((one_sided.max(0.0), hi))
    } else {
        let (_, b_c) = law.critical_exponents();
        let mut lo = f64::NEG_INFINITY;
        let mut any = false;
        for &(q, q1) in exponents {
            if theta * q >= b_c {
                continue;
            }
            let zq = match law.mgf(theta * q) {
                Ok(v) => math::powf(v, 1.0 / q),
                Err(_) => continue,
            };
            let qp = q / (q - 1.0);
            let q2 = q1 / (q1 - 1.0);
            let cand = -theta
                * zq
                * math::powf(law.lag().abs_moment(qp * q1), 1.0 / (qp * q1))
                * znorm(qp * q1)
                * znorm(qp * q2);
            any = true;
            lo = lo.max(cand);
        }
        if !any {
            return Err(Error::domain(format!(
                "no admissible conjugate pair: bounds are non-trivial only for \
                 q in (1, {})",
                b_c / theta
            )));
        }
        // upper = p₁E[B]e^θ(1−mgf) ≤ 0 for θ > 0
        Ok((lo, one_sided.min(0.0)))
    }
}

/// Configuration for the cluster-count Monte Carlo estimator.
#[derive(Debug, Clone, Copy)]
pub struct ClusterPhiConfig {
    pub n_clusters: usize,
    pub seed: u64,
}

impl Default for ClusterPhiConfig {
    fn default() -> Self {
        ClusterPhiConfig {
            n_clusters: 10_000,
            seed: 0x5107_0e15,
        }
    }
}

/// φ⁽ⁿ⁾(θ) for n = 0..=max_order for the cluster-count shape.
///
/// One set of simulated clusters serves every order (common random
/// numbers), and the inner time integral
/// `∫ (N(s)^n e^{θN(s)} − Z^n e^{θZ}) ds` is evaluated exactly on the
/// piecewise-constant path of each realization, so the only stochastic
/// error is the outer cluster average. `abs_error` is that standard error.
pub fn phi_cluster_derivatives(
    law: &ClusterLaw,
    theta: f64,
    max_order: u32,
    cfg: &ClusterPhiConfig,
) -> Result<Vec<PhiValue>> {
    let (_, b_c) = law.critical_exponents();
    if theta >= b_c {
        return Err(Error::domain(format!(
            "phi needs theta < b_c = {b_c}, got {theta}"
        )));
    }
    if cfg.n_clusters == 0 {
        return Err(Error::domain("n_clusters must be ≥ 1"));
    }
    let orders = (max_order + 1) as usize;
    let mut sums = alloc::vec![0.0f64; orders];
    let mut sq_sums = alloc::vec![0.0f64; orders];
    let mut rng = StreamRng::new(cfg.seed, 0);
    let mut truncated = 0u64;
    for _ in 0..cfg.n_clusters {
        let cluster = simulate_cluster(law, &mut rng);
        truncated += u64::from(cluster.truncated);
        let births = cluster.sorted_births();
        let z = cluster.total_points as f64;
        let ez = math::exp(theta * z);
        for (n, (sum, sq)) in sums.iter_mut().zip(sq_sums.iter_mut()).enumerate() {
            let zn = math::powi(z, n as i32) * ez;
            let mut acc = 0.0f64;
            for j in 0..births.len().saturating_sub(1) {
                let level = (j + 1) as f64;
                let seg = births[j + 1] - births[j];
                acc += (math::powi(level, n as i32) * math::exp(theta * level) - zn) * seg;
            }
            *sum += acc;
            *sq += acc * acc;
        }
    }
    let n = cfg.n_clusters as f64;
    let mut out = Vec::with_capacity(orders);
    for order in 0..orders {
        let mean = sums[order] / n;
        let var = ((sq_sums[order] - n * mean * mean) / (n - 1.0).max(1.0)).max(0.0);
        let std_err = math::sqrt(var / n);
        // truncated clusters bias the integral; widen honestly
        let bias = truncated as f64 / n;
        let mut v = PhiValue {
            value: mean,
            abs_error: std_err + bias,
            lower_bound: f64::NEG_INFINITY,
            upper_bound: f64::INFINITY,
            method: PhiMethod::NestedMc,
        };
        if order == 0 {
            let envelope = if theta < 0.0 {
                (0.0, f64::INFINITY)
            } else if theta == 0.0 {
                (0.0, 0.0)
            } else {
                (f64::NEG_INFINITY, 0.0)
            };
            let widened = PhiValue {
                abs_error: 4.0 * std_err + bias,
                ..v
            }
            .with_bounds(Some(envelope))?;
            v.lower_bound = widened.lower_bound;
            v.upper_bound = widened.upper_bound;
        }
        out.push(v);
    }
    Ok(out)
}

/// φ through whichever route the model admits: closed form, quadrature, or
/// nested MC for cluster counting.
pub fn phi_auto(
    model: &MarkedShotModel,
    theta: f64,
    tol: f64,
    cfg: &ClusterPhiConfig,
) -> Result<PhiValue> {
    match (&model.shape, &model.marks) {
        (ShotShape::ClusterCount, MarkSource::Cluster(law)) => {
            Ok(phi_cluster_derivatives(law, theta, 0, cfg)?[0])
        }
        (shape, MarkSource::Mark(mark)) => {
            if let Some(value) = closed_form_value(shape, mark, theta)? {
                return Ok(PhiValue {
                    value,
                    abs_error: 0.0,
                    lower_bound: f64::NEG_INFINITY,
                    upper_bound: f64::INFINITY,
                    method: PhiMethod::ClosedForm,
                });
            }
            phi_quadrature(shape, mark, theta, tol)
        }
        _ => unreachable!("constructor enforces pairing"),
    }
}

/// φ⁽ⁿ⁾ values for n = 0..=max_order through the model-appropriate route.
pub fn phi_derivatives_auto(
    model: &MarkedShotModel,
    theta: f64,
    max_order: u32,
    tol: f64,
    cfg: &ClusterPhiConfig,
) -> Result<Vec<f64>> {
    match (&model.shape, &model.marks) {
        (ShotShape::ClusterCount, MarkSource::Cluster(law)) => {
            Ok(phi_cluster_derivatives(law, theta, max_order, cfg)?
                .into_iter()
                .map(|v| v.value)
                .collect())
        }
        (shape, MarkSource::Mark(mark)) => (0..=max_order)
            .map(|n| phi_quadrature_derivative(shape, mark, theta, n, tol).map(|v| v.value))
            .collect(),
        _ => unreachable!("constructor enforces pairing"),
    }
}
