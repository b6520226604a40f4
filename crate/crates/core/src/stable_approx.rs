//! Kolmogorov distance between `S_t/t^{1/α}` and its limiting stable law,
//! and verification of the convergence-rate exponents: the distance decays
//! like `t^{−(1−η₀)}` when `∫₀^t(1−F^α)` grows like `t^{η₀}`, and like
//! `t^{−1/α}` (α > 1) or `t^{−1}` (α ≤ 1) when that integral converges.

use alloc::vec::Vec;

use crate::dist::{StableCdfTable, StableParams};
use crate::error::{Error, Result};
use crate::math;
use crate::model::ShapeCdf;
use crate::quad;
use crate::rng::StreamRng;
use crate::sim;

/// Exact sup-distance between the empirical CDF of a sorted sample and a
/// distribution function, evaluated at the jump points:
/// `max_i max(i/n − F(x_i), F(x_i⁻) − (i−1)/n)`. The left limit is taken
/// at the adjacent float, which is exact for continuous references and
/// keeps step references (a point mass against its own CDF) at distance 0.
pub fn kolmogorov_distance<F: Fn(f64) -> f64>(sorted_sample: &[f64], cdf: F) -> Result<f64> {
    let n = sorted_sample.len();
    if n == 0 {
        return Err(Error::domain("kolmogorov distance needs a non-empty sample"));
    }
    if sorted_sample.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::precondition("sample must be sorted ascending"));
    }
    let n_f = n as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted_sample.iter().enumerate() {
        let f = cdf(x);
        let f_left = cdf(x.next_down());
        let hi = (i as f64 + 1.0) / n_f - f;
        let lo = f_left - i as f64 / n_f;
        sup = sup.max(hi.max(lo));
    }
    Ok(sup)
}

/// Verdict of the rate classification.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "case"))]
pub enum RateCase {
    /// `∫₀^∞(1−F^α) < ∞`: distance O(t^{−1/α}) for α ∈ (1,2], O(1/t)
    /// otherwise.
    FiniteIntegral,
    /// Integral grows like t^{η₀}: distance O(t^{−(1−η₀)}); `in_a` records
    /// whether the growth ratio stays bounded at η₀ itself.
    GrowthExponent { eta0: f64, in_a: bool },
    /// Estimated growth exponent exceeds 1/2: out of theorem scope.
    OutOfScope { eta_hat: f64 },
    /// Regression too ill-conditioned to call.
    Inconclusive,
}

#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RateClassification {
    pub case: RateCase,
    /// Predicted decay exponent e with d_Kol = O(t^{−e}); NaN when not
    /// classified.
    pub exponent: f64,
    /// Fitted growth exponent of ∫₀^t(1−F^α) (log-log with a slowly
    /// varying correction term).
    pub growth_exponent: f64,
}

/// Classifies the convergence rate by the growth of `I(t) = ∫₀^t(1−F^α)ds`
/// on a geometric grid: convergence of I gives the finite-integral case;
/// otherwise the growth exponent is fitted by least squares of
/// `ln I = c + η ln t + d ln ln t` (the extra term absorbs logarithmic
/// growth, which otherwise masquerades as a small power).
pub fn classify_rate(f: &ShapeCdf, alpha: f64, beta: f64) -> Result<RateClassification> {
    let params_check = StableParams::new(1.0, alpha, beta)?;
    let alpha = params_check.alpha;
    let integrand = |s: f64| 1.0 - math::powf(f.cdf(s), alpha);

    // cumulative integral on a 12-point geometric grid over [1e2, 1e6]
    let n_grid = 12usize;
    let (t_lo, t_hi) = (1.0e2f64, 1.0e6f64);
    let ratio = math::powf(t_hi / t_lo, 1.0 / (n_grid as f64 - 1.0));
    let mut ts = Vec::with_capacity(n_grid);
    let mut t = t_lo;
    for _ in 0..n_grid {
        ts.push(t);
        t *= ratio;
    }
    let mut cumulative = Vec::with_capacity(n_grid);
    let mut acc = quad::adaptive_simpson(&integrand, 0.0, ts[0], 1e-10, 48)?.value;
    cumulative.push(acc);
    for w in ts.windows(2) {
        acc += quad::adaptive_simpson(&integrand, w[0], w[1], 1e-10, 48)?.value;
        cumulative.push(acc);
    }

    // convergence test: the last decade adds essentially nothing
    let tail_added = cumulative[n_grid - 1] - cumulative[n_grid - 4];
    if tail_added <= 1e-6 * cumulative[n_grid - 1] + 1e-12 {
        let exponent = if alpha > 1.0 { 1.0 / alpha } else { 1.0 };
        return Ok(RateClassification {
            case: RateCase::FiniteIntegral,
            exponent,
            growth_exponent: 0.0,
        });
    }

    // ln I = c + η ln t + d ln ln t
    let rows: Vec<[f64; 3]> = ts
        .iter()
        .map(|&t| [1.0, math::ln(t), math::ln(math::ln(t))])
        .collect();
    let ys: Vec<f64> = cumulative.iter().map(|&v| math::ln(v)).collect();
    let coef = least_squares_3(&rows, &ys)?;
    let eta_hat = coef[1];
    // residual check
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    for (row, &y) in rows.iter().zip(&ys) {
        let fit = coef[0] + coef[1] * row[1] + coef[2] * row[2];
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - y_mean) * (y - y_mean);
    }
    if ss_tot > 0.0 && ss_res / ss_tot > 0.01 {
        return Ok(RateClassification {
            case: RateCase::Inconclusive,
            exponent: f64::NAN,
            growth_exponent: eta_hat,
        });
    }

    if eta_hat > 0.52 {
        return Ok(RateClassification {
            case: RateCase::OutOfScope { eta_hat },
            exponent: f64::NAN,
            growth_exponent: eta_hat,
        });
    }

    let edge = (0.0f64).max((alpha - 1.0) / alpha);
    if eta_hat < edge - 0.02 {
        // growth strictly below the admissible window: η₀ sits at the edge
        // and the ratio I/t^{η₀} tends to zero, so η₀ ∈ A
        return Ok(RateClassification {
            case: RateCase::GrowthExponent { eta0: edge, in_a: true },
            exponent: 1.0 - edge,
            growth_exponent: eta_hat,
        });
    }
    // growth at or above the edge: take η₀ = max(η̂, edge) and decide
    // membership from the trend of I/t^{η₀}
    let eta0 = eta_hat.max(edge);
    let first = cumulative[0] / math::powf(ts[0], eta0);
    let last = cumulative[n_grid - 1] / math::powf(ts[n_grid - 1], eta0);
    let in_a = last <= first * 1.05;
    let eta_eff = if in_a { eta0 } else { (eta0 + 0.05).min(0.99) };
    Ok(RateClassification {
        case: RateCase::GrowthExponent { eta0, in_a },
        exponent: 1.0 - eta_eff,
        growth_exponent: eta_hat,
    })
}

fn least_squares_3(rows: &[[f64; 3]], ys: &[f64]) -> Result<[f64; 3]> {
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for (row, &y) in rows.iter().zip(ys) {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            aty[i] += row[i] * y;
        }
    }
    solve_3x3(ata, aty)
}

fn solve_3x3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&r1, &r2| {
                math::abs(a[r1][col])
                    .partial_cmp(&math::abs(a[r2][col]))
                    .expect("finite")
            })
            .expect("non-empty");
        a.swap(col, piv);
        b.swap(col, piv);
        if math::abs(a[col][col]) < 1e-12 {
            return Err(Error::numeric("singular regression system", a[col][col]));
        }
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// One grid point of a rate experiment.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RatePoint {
    pub t: f64,
    pub distance: f64,
    /// Monte Carlo + table evaluation error bar.
    pub error: f64,
    /// Excluded from the slope fit (error dominates the distance).
    pub excluded: bool,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RateReport {
    pub t_grid: Vec<f64>,
    pub points: Vec<RatePoint>,
    pub fitted_slope: f64,
    /// −(predicted decay exponent); the fitted slope should not exceed it
    /// by more than the acceptance margin.
    pub predicted_slope: f64,
    pub classification: RateClassification,
    pub n_paths: u64,
}

#[derive(Debug, Clone)]
pub struct RateConfig {
    pub n_paths: u64,
    pub seeds: Vec<u64>,
    pub table_resolution: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            n_paths: 200_000,
            seeds: alloc::vec![0x5eed],
            table_resolution: 5e-4,
        }
    }
}

/// Simulates `S_t/t^{1/α}` on the grid, measures the Kolmogorov distance to
/// the limit law `stable(cλ^{1/α}, α, β)`, and fits the log-log decay slope
/// weighted by the per-point errors. Points whose error bar reaches half
/// the distance are flagged and left out of the fit.
pub fn rate_experiment(
    params: &StableParams,
    f: &ShapeCdf,
    lambda: f64,
    t_grid: &[f64],
    cfg: &RateConfig,
) -> Result<RateReport> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("t grid must be strictly increasing"));
    }
    let decades = math::ln(t_grid[t_grid.len() - 1] / t_grid[0]) / core::f64::consts::LN_10;
    if decades < 1.5 {
        return Err(Error::domain(alloc::format!(
            "t grid must span at least 1.5 decades, got {decades:.2}"
        )));
    }
    if cfg.n_paths < 100_000 {
        return Err(Error::domain("rate experiments need n_paths ≥ 1e5"));
    }
    sim::validate_seeds(&cfg.seeds)?;
    let limit = params.scaled(math::powf(lambda, 1.0 / params.alpha))?;
    let table = StableCdfTable::build(limit, cfg.table_resolution)?;
    let noise_floor = 0.87 / math::sqrt((cfg.n_paths * cfg.seeds.len() as u64) as f64);

    let classification = classify_rate(f, params.alpha, params.beta)?;

    let mut points = Vec::with_capacity(t_grid.len());
    for (ti, &t) in t_grid.iter().enumerate() {
        let total = (cfg.n_paths as usize) * cfg.seeds.len();
        let mut values = alloc::vec![0.0f64; total];
        let mut write = 0usize;
        for (si, &seed) in cfg.seeds.iter().enumerate() {
            for idx in 0..cfg.n_paths {
                // separate stream block per grid point
                let stream = (ti as u64) << 40 | idx;
                let mut rng = StreamRng::new(seed.wrapping_add(si as u64), stream);
                values[write] = sim::simulate_stable_path(params, f, lambda, t, &mut rng)?;
                write += 1;
            }
        }
        values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite paths"));
        let d = kolmogorov_distance(&values, |x| table.eval(x))?;
        let error = noise_floor + table.eval_error();
        points.push(RatePoint {
            t,
            distance: d,
            error,
            excluded: error > d / 2.0,
        });
    }

    let included: Vec<&RatePoint> = points.iter().filter(|p| !p.excluded).collect();
    let fitted_slope = if included.len() >= 2 {
        // weighted least squares of ln d on ln t, weights (d/err)²
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in &included {
            let w = (p.distance / p.error) * (p.distance / p.error);
            let (x, y) = (math::ln(p.t), math::ln(p.distance));
            sw += w;
            sx += w * x;
            sy += w * y;
            sxx += w * x * x;
            sxy += w * x * y;
        }
        (sw * sxy - sx * sy) / (sw * sxx - sx * sx)
    } else {
        f64::NAN
    };

    Ok(RateReport {
        t_grid: t_grid.into(),
        points,
        fitted_slope,
        predicted_slope: -classification.exponent,
        classification,
        n_paths: cfg.n_paths * cfg.seeds.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_against_gaussian() {
        // {0} vs standard normal: sup(|1 − Φ(0)|, |0 − Φ(0)|) = 0.5
        let d = kolmogorov_distance(&[0.0], math::normal_cdf).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_against_own_step() {
        let sample = alloc::vec![1.0; 50];
        let step = |x: f64| if x >= 1.0 { 1.0 } else { 0.0 };
        let d = kolmogorov_distance(&sample, step).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn empty_and_unsorted_rejected() {
        assert!(kolmogorov_distance(&[], math::normal_cdf).is_err());
        assert!(kolmogorov_distance(&[1.0, 0.0], math::normal_cdf).is_err());
    }

    #[test]
    fn dkw_bound_on_own_sample() {
        // sample drawn from the cdf itself: d ≤ sqrt(ln(2/δ)/2n) w.p. 1−δ
        let mut rng = StreamRng::new(2024, 0);
        let n = 100_000usize;
        let mut sample: Vec<f64> = (0..n).map(|_| rng.uniform_co()).collect();
        sample.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
        let d = kolmogorov_distance(&sample, |x| x.clamp(0.0, 1.0)).unwrap();
        let eps = math::sqrt(math::ln(2.0 / 0.01) / (2.0 * n as f64));
        assert!(d <= eps, "d = {d} vs DKW {eps}");
    }

    #[test]
    fn distance_invariant_under_increasing_maps() {
        let mut rng = StreamRng::new(7, 1);
        let mut sample: Vec<f64> = (0..2000).map(|_| rng.exponential(1.0)).collect();
        sample.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
        let cdf = |x: f64| if x > 0.0 { 1.0 - math::exp(-x) } else { 0.0 };
        let d0 = kolmogorov_distance(&sample, cdf).unwrap();
        // affine map y = 3x + 2 applied jointly
        let mapped: Vec<f64> = sample.iter().map(|&x| 3.0 * x + 2.0).collect();
        let mapped_cdf = |y: f64| cdf((y - 2.0) / 3.0);
        let d1 = kolmogorov_distance(&mapped, mapped_cdf).unwrap();
        assert!((d0 - d1).abs() < 1e-15);
    }

    #[test]
    fn classify_finite_mean_cases() {
        // finite-mean F: case (ii); exponent 1/α for α ∈ (1,2], 1 below
        let c = classify_rate(&ShapeCdf::Uniform01, 2.0, 0.0).unwrap();
        assert_eq!(c.case, RateCase::FiniteIntegral);
        assert!((c.exponent - 0.5).abs() < 1e-12);
        let c = classify_rate(&ShapeCdf::Uniform01, 0.5, 1.0).unwrap();
        assert_eq!(c.case, RateCase::FiniteIntegral);
        assert!((c.exponent - 1.0).abs() < 1e-12);
        let c = classify_rate(&ShapeCdf::Exponential { rate: 1.0 }, 0.5, 1.0).unwrap();
        assert_eq!(c.case, RateCase::FiniteIntegral);
        assert!((c.exponent - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_pareto_cases() {
        // Pareto-1, α ∈ (1,2]: η₀ = (α−1)/α ∈ A, exponent 1/α
        let c = classify_rate(&ShapeCdf::Pareto1, 1.5, 0.0).unwrap();
        match c.case {
            RateCase::GrowthExponent { eta0, in_a } => {
                assert!((eta0 - 1.0 / 3.0).abs() < 1e-9, "eta0 = {eta0}");
                assert!(in_a);
            }
            other => panic!("unexpected case {other:?}"),
        }
        assert!((c.exponent - 2.0 / 3.0).abs() < 1e-9);
        // log-growth fitted exponent stays < 0.05
        assert!(c.growth_exponent.abs() < 0.05, "{}", c.growth_exponent);
        // Pareto-1, α = 1, β = 0: η₀ = 0 ∉ A, exponent 1 − η̃₀ < 1
        let c = classify_rate(&ShapeCdf::Pareto1, 1.0, 0.0).unwrap();
        match c.case {
            RateCase::GrowthExponent { eta0, in_a } => {
                assert!(eta0.abs() < 0.03, "eta0 = {eta0}");
                assert!(!in_a);
            }
            other => panic!("unexpected case {other:?}"),
        }
        assert!(c.exponent > 0.9 && c.exponent < 1.0);
    }

    #[test]
    fn rate_experiment_constant_shape_decays_like_one_over_t() {
        // F ≡ 1: the scale-mixture effect of the Poisson count is the only
        // deviation from the limit; it decays like 1/t and reaches the
        // noise floor by t = 1000
        let params = StableParams::new(1.0, 2.0, 0.0).unwrap();
        let cfg = RateConfig {
            n_paths: 100_000,
            seeds: alloc::vec![11],
            table_resolution: 1e-3,
        };
        let report = rate_experiment(
            &params,
            &ShapeCdf::Degenerate,
            1.0,
            &[10.0, 100.0, 1000.0],
            &cfg,
        )
        .unwrap();
        assert!(report.points[0].distance < 0.02);
        let last = &report.points[2];
        assert!(
            last.distance < 2.5 * last.error,
            "t=1000: distance {} above the noise floor {}",
            last.distance,
            last.error
        );
        assert!(
            report.points[1].distance < report.points[0].distance,
            "distance should shrink with t"
        );
    }

    #[test]
    fn grid_validation() {
        let params = StableParams::new(1.0, 2.0, 0.0).unwrap();
        let cfg = RateConfig::default();
        assert!(rate_experiment(&params, &ShapeCdf::Uniform01, 1.0, &[10.0, 20.0], &cfg).is_err());
        assert!(rate_experiment(&params, &ShapeCdf::Uniform01, 1.0, &[10.0], &cfg).is_err());
    }
}
