//! Shot-shape family and the full marked model
//! `S_t = Σ H(t − T_n, M_n) 1{T_n ≤ t}`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;

use crate::dist::{ClusterLaw, MarkLaw};
use crate::error::{Error, Result};
use crate::math;
use crate::tilt::{ZKind, ZModel};

/// Distribution function F on [0, ∞) used by the multiplicative shape
/// `H(t, m) = m F(t)`.
#[derive(Clone)]
pub enum ShapeCdf {
    /// Uniform law on (0,1): F(t) = t ∧ 1.
    Uniform01,
    /// Pareto with parameter 1: F(t) = t/(1+t); infinite mean.
    Pareto1,
    /// Exponential: F(t) = 1 − e^{−rate·t}.
    Exponential { rate: f64 },
    /// F ≡ 1 on [0, ∞): the shot contributes fully on arrival.
    Degenerate,
    /// User-supplied distribution function.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl core::fmt::Debug for ShapeCdf {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.describe())
    }
}

impl ShapeCdf {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::domain(format!("shape cdf rate must be > 0, got {rate}")));
        }
        Ok(ShapeCdf::Exponential { rate })
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            ShapeCdf::Uniform01 => t.min(1.0),
            ShapeCdf::Pareto1 => t / (1.0 + t),
            ShapeCdf::Exponential { rate } => -math::exp_m1(-rate * t),
            ShapeCdf::Degenerate => 1.0,
            ShapeCdf::Custom(f) => f(t).clamp(0.0, 1.0),
        }
    }

    pub fn bar(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    /// `∫_T^∞ (1 − F(s)) ds`; ∞ when the law has no mean.
    pub fn tail_integral(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            ShapeCdf::Uniform01 => {
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - t) * (1.0 - t) / 2.0
                }
            }
            ShapeCdf::Pareto1 => f64::INFINITY,
            ShapeCdf::Exponential { rate } => math::exp(-rate * t) / rate,
            ShapeCdf::Degenerate => 0.0,
            ShapeCdf::Custom(_) => f64::INFINITY,
        }
    }

    /// Smallest T with F(t) = 1 for all t ≥ T, or ∞.
    pub fn support_end(&self) -> f64 {
        match self {
            ShapeCdf::Uniform01 => 1.0,
            ShapeCdf::Degenerate => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ShapeCdf::Uniform01 => String::from("uniform(0,1)"),
            ShapeCdf::Pareto1 => String::from("pareto(1)"),
            ShapeCdf::Exponential { rate } => format!("exponential(rate={rate})"),
            ShapeCdf::Degenerate => String::from("degenerate"),
            ShapeCdf::Custom(_) => String::from("custom"),
        }
    }
}

/// The shot shape H(t, m).
#[derive(Debug, Clone)]
pub enum ShotShape {
    /// H(t, m) = m.
    Constant,
    /// H(t, m) = m·F(t).
    Multiplicative { f: ShapeCdf },
    /// H(t, m) = t ∧ m (workload of a job of size m served at unit rate).
    Capped,
    /// H(t, ν) = ν([0, t]): births of a cluster up to elapsed time t.
    ClusterCount,
}

/// Mark sampler attached to each arrival: a plain mark law, or a whole
/// cluster point process for the cluster-count shape.
#[derive(Debug, Clone)]
pub enum MarkSource {
    Mark(MarkLaw),
    Cluster(ClusterLaw),
}

/// Intensity λ plus shot shape plus mark sampler; the object every
/// estimator and simulator consumes.
#[derive(Debug, Clone)]
pub struct MarkedShotModel {
    pub lambda: f64,
    pub shape: ShotShape,
    pub marks: MarkSource,
}

impl MarkedShotModel {
    pub fn new(lambda: f64, shape: ShotShape, marks: MarkSource) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::domain(format!("intensity must be > 0, got {lambda}")));
        }
        match (&shape, &marks) {
            (ShotShape::ClusterCount, MarkSource::Cluster(_)) => {}
            (ShotShape::ClusterCount, _) => {
                return Err(Error::domain(
                    "cluster-count shape requires a cluster mark source",
                ))
            }
            (_, MarkSource::Cluster(_)) => {
                return Err(Error::domain(
                    "cluster mark source only pairs with the cluster-count shape",
                ))
            }
            _ => {}
        }
        Ok(MarkedShotModel {
            lambda,
            shape,
            marks,
        })
    }

    pub fn with_mark(lambda: f64, shape: ShotShape, mark: MarkLaw) -> Result<Self> {
        MarkedShotModel::new(lambda, shape, MarkSource::Mark(mark))
    }

    pub fn cluster(lambda: f64, law: ClusterLaw) -> Result<Self> {
        MarkedShotModel::new(lambda, ShotShape::ClusterCount, MarkSource::Cluster(law))
    }

    /// The compound-Poisson reference model: Z = sup_t H(t, M₁).
    ///
    /// Every built-in shape has sup_t H = M (constant, capped,
    /// multiplicative with F → 1) or sup H = total progeny (cluster-count).
    pub fn z_model(&self) -> Result<ZModel> {
        let kind = match &self.marks {
            MarkSource::Mark(mark) => ZKind::DirectMark(mark.clone()),
            MarkSource::Cluster(law) => ZKind::Cluster(law.clone()),
        };
        ZModel::new(self.lambda, kind)
    }

    /// Whether S_t is integer-valued (so the lattice forms apply). The
    /// classification follows the declared shape: cluster counts are always
    /// lattice; a constant or fully-settled multiplicative shape is lattice
    /// exactly when the marks are integers.
    pub fn is_lattice(&self) -> bool {
        match (&self.shape, &self.marks) {
            (ShotShape::ClusterCount, _) => true,
            (ShotShape::Constant, MarkSource::Mark(m)) => m.is_integer_valued(),
            (ShotShape::Multiplicative { f: ShapeCdf::Degenerate }, MarkSource::Mark(m)) => {
                m.is_integer_valued()
            }
            _ => false,
        }
    }
}
