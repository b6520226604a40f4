//! Ruin probabilities for risk processes with delayed claims:
//! `ψ(u) = P(sup_{t>0}(S_t − ct) ≥ u)` by finite-horizon Monte Carlo with a
//! certified truncation-bias bound, the Cramér–Lundberg constant, and the
//! two-sided asymptotic bounds that sandwich ψ between `C·e^{−wu}/√u` and
//! `C'·e^{−wu}`.

use alloc::vec::Vec;

use crate::dist::MarkLaw;
use crate::error::{Error, Result};
use crate::math;
use crate::model::{MarkSource, MarkedShotModel, ShapeCdf, ShotShape};
use crate::phi::{phi_auto, ClusterPhiConfig};
use crate::rng::StreamRng;
use crate::sim::validate_seeds;
use crate::tilt::{lundberg_root, ZModel};

use core::f64::consts::PI;

/// A ruin experiment: nondecreasing shot shape, premium rate, capital grid.
#[derive(Debug, Clone)]
pub struct RuinScenario {
    pub model: MarkedShotModel,
    pub premium_rate: f64,
    pub capital_grid: Vec<f64>,
    pub n_paths: u64,
    pub seeds: Vec<u64>,
    /// T_max = horizon_factor · u_max · d with d = (λE[Ze^{wZ}] − c)^{−1}.
    pub horizon_factor: f64,
}

impl RuinScenario {
    pub fn new(
        model: MarkedShotModel,
        premium_rate: f64,
        capital_grid: Vec<f64>,
        n_paths: u64,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        if let ShotShape::Multiplicative { f: ShapeCdf::Pareto1 | ShapeCdf::Custom(_) } =
            &model.shape
        {
            return Err(Error::domain(
                "ruin needs a shape with computable segment suprema",
            ));
        }
        if capital_grid.is_empty() || capital_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("capital grid must be strictly increasing"));
        }
        if capital_grid[0] < 0.0 {
            return Err(Error::domain("capital must be non-negative"));
        }
        let scenario = RuinScenario {
            model,
            premium_rate,
            capital_grid,
            n_paths,
            seeds,
            horizon_factor: 4.0,
        };
        // net-profit condition
        let z = scenario.model.z_model()?;
        let mean_claims = z.lambda * z.z_moment(1)?;
        if premium_rate <= mean_claims {
            return Err(Error::precondition(alloc::format!(
                "net-profit condition fails: c = {premium_rate} ≤ λE[Z] = {mean_claims}"
            )));
        }
        Ok(scenario)
    }

    pub fn z_model(&self) -> Result<ZModel> {
        self.model.z_model()
    }
}

/// The Cramér–Lundberg constant
/// `(λw/(c−λE[Z]) · ∫₀^∞ x e^{wx} P(Z>x) dx)^{−1}`, with the integral in
/// closed form per mark family and a certified geometric truncation for
/// integer cluster progeny.
pub fn cl_constant(model: &ZModel, premium_rate: f64) -> Result<f64> {
    let w = lundberg_root(model, premium_rate)?;
    if w < 1e-6 {
        return Err(Error::domain(
            "Lundberg coefficient degenerates to 0 (net-profit boundary); the \
             Cramér-Lundberg prefactor is numerically indeterminate there",
        ));
    }
    let lambda = model.lambda;
    let mean = model.z_moment(1)?;
    let integral = tail_weighted_integral(model, w)?;
    let denom = lambda * w / (premium_rate - lambda * mean) * integral;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::numeric("Cramér-Lundberg constant denominator", denom));
    }
    Ok(1.0 / denom)
}

/// `∫₀^∞ x e^{wx} P(Z>x) dx`.
fn tail_weighted_integral(model: &ZModel, w: f64) -> Result<f64> {
    // antiderivative of x e^{wx}: A(x) = ((wx − 1) e^{wx}) / w²
    let anti = |x: f64| (w * x - 1.0) * math::exp(w * x) / (w * w);
    match &model.kind {
        crate::tilt::ZKind::DirectMark(mark) | crate::tilt::ZKind::Bounded { law: mark, .. } => {
            match mark {
                MarkLaw::Exponential { rate } => {
                    let a = *rate;
                    if w >= a {
                        return Err(Error::domain(
                            "tail integral diverges: w reaches the claim mgf edge",
                        ));
                    }
                    // ∫ x e^{(w−a)x} dx = 1/(a−w)²
                    Ok(1.0 / ((a - w) * (a - w)))
                }
                MarkLaw::Deterministic { value } => Ok(anti(*value) - anti(0.0)),
                MarkLaw::Table { values, probs } => {
                    // P(Z > x) is piecewise constant between sorted atoms
                    let mut atoms: Vec<(f64, f64)> =
                        values.iter().cloned().zip(probs.iter().cloned()).collect();
                    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
                    let mut tail: f64 = 1.0;
                    let mut acc = 0.0;
                    let mut prev = 0.0;
                    for (v, q) in atoms {
                        acc += tail * (anti(v) - anti(prev));
                        tail -= q;
                        prev = v;
                    }
                    Ok(acc)
                }
                MarkLaw::Custom(_) => Err(Error::domain(
                    "tail integral unavailable for custom marks",
                )),
            }
        }
        crate::tilt::ZKind::Cluster(law) => {
            let (_, b_c) = law.critical_exponents();
            if w >= b_c {
                return Err(Error::domain(alloc::format!(
                    "tail integral diverges: w = {w} reaches b_c = {b_c}"
                )));
            }
            // integer Z: Σ_k P(Z > k)·(A(k+1) − A(k)); the summand decays
            // geometrically like e^{(w−b_c)k} (Chernoff on the progeny tail)
            let mgf_bc = law.mgf(b_c)?;
            let mut acc = 0.0f64;
            let mut tail = 1.0f64; // P(Z > 0) = 1
            let mut k = 0u64;
            loop {
                let seg = tail * (anti(k as f64 + 1.0) - anti(k as f64));
                acc += seg;
                k += 1;
                tail -= law.progeny_pmf(k)?;
                if tail <= 0.0 {
                    break;
                }
                // certified remainder: tail(k) ≤ E[e^{b_c Z}] e^{−b_c(k+1)}
                let tail_bound = mgf_bc * math::exp(-b_c * (k as f64 + 1.0));
                let seg_bound = tail_bound * (anti(k as f64 + 2.0) - anti(k as f64 + 1.0));
                let ratio = math::exp(w - b_c) * 1.25;
                if ratio < 1.0 && seg_bound / (1.0 - ratio) < 1e-13 * acc {
                    break;
                }
                if k > 500_000 {
                    return Err(Error::numeric("tail integral did not converge", seg));
                }
            }
            Ok(acc)
        }
    }
}

/// Two-sided asymptotic ruin bounds: lower `≈ C·e^{−wu}/√u` from the sharp
/// deviations of `S_{ud}` at the tilted slope, upper `= ψ_CL(u)` from the
/// associated Cramér–Lundberg process.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RuinBounds {
    pub w: f64,
    /// lower(u) = lower_coeff · e^{−wu}/√u
    pub lower_coeff: f64,
    /// upper(u) = upper_coeff · e^{−wu}
    pub upper_coeff: f64,
    pub lattice: bool,
}

impl RuinBounds {
    pub fn lower(&self, u: f64) -> f64 {
        self.lower_coeff * math::exp(-self.w * u) / math::sqrt(u)
    }
    pub fn upper(&self, u: f64) -> f64 {
        self.upper_coeff * math::exp(-self.w * u)
    }
    /// Capital above which lower(u) < upper(u).
    pub fn crossover(&self) -> f64 {
        let r = self.lower_coeff / self.upper_coeff;
        r * r
    }
}

pub fn ruin_bounds(scenario: &RuinScenario) -> Result<RuinBounds> {
    ruin_bounds_with(scenario, &ClusterPhiConfig::default())
}

pub fn ruin_bounds_with(scenario: &RuinScenario, cfg: &ClusterPhiConfig) -> Result<RuinBounds> {
    let z = scenario.z_model()?;
    let lambda = z.lambda;
    let c = scenario.premium_rate;
    let w = lundberg_root(&z, c)?;
    let upper_coeff = cl_constant(&z, c)?;
    let m1 = z.z_tilted_moment(1, w)?;
    let m2 = z.z_tilted_moment(2, w)?;
    let drift = lambda * m1 - c;
    if drift <= 0.0 {
        return Err(Error::precondition(
            "λE[Z e^{wZ}] − c must be positive at the Lundberg root",
        ));
    }
    let d = 1.0 / drift;
    let phi = phi_auto(&scenario.model, w, 1e-9, cfg)?;
    let lattice = scenario.model.is_lattice();
    let geo = if lattice { 1.0 - math::exp(-w) } else { 1.0 };
    let lower_coeff =
        math::exp(lambda * phi.value) / (w * geo * math::sqrt(2.0 * lambda * PI * d * m2));
    Ok(RuinBounds {
        w,
        lower_coeff,
        upper_coeff,
        lattice,
    })
}

/// One estimated point of the ruin curve.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RuinPoint {
    pub u: f64,
    pub psi_hat: f64,
    pub std_err: f64,
    pub hits: u64,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RuinMcReport {
    pub w: f64,
    pub t_max: f64,
    /// Certified bound on the truncation bias P(ruin occurs only after T_max),
    /// from the supermartingale maximal inequality of the dominating
    /// Cramér–Lundberg process.
    pub bias_bound: f64,
    pub points: Vec<RuinPoint>,
    /// Weighted log-linear slope of ψ̂ over the well-estimated points.
    pub fitted_slope: Option<f64>,
    pub n_paths: u64,
}

/// `min_{w' ∈ (0,w)} exp(−w'u − ζ(w')T)` with
/// `ζ(w') = cw' − λ(E[e^{w'Z}] − 1) ≥ 0`: a bound on ruin first occurring
/// after T, valid because H ≤ Z pathwise makes the Cramér–Lundberg process
/// dominate the shot-noise one.
fn truncation_bias_bound(z: &ZModel, c: f64, w: f64, u: f64, t_horizon: f64) -> Result<f64> {
    let lambda = z.lambda;
    let mut best = f64::INFINITY;
    for i in 1..40 {
        let wp = w * i as f64 / 40.0;
        let zeta = c * wp - lambda * (z.z_mgf(wp)? - 1.0);
        if zeta < 0.0 {
            continue;
        }
        best = best.min(math::exp(-wp * u - zeta * t_horizon));
    }
    Ok(best)
}

/// Monte Carlo estimate of ψ(u) on the capital grid with common random
/// numbers: each path yields `sup_{t ≤ T_max}(S_t − ct)` exactly (the
/// built-in shapes are piecewise linear or piecewise constant between
/// event times), compared against every u. The truncation bias bound is
/// checked against the confidence width and the horizon widens on demand.
pub fn ruin_mc(scenario: &RuinScenario) -> Result<RuinMcReport> {
    validate_seeds(&scenario.seeds)?;
    if scenario.n_paths == 0 {
        return Err(Error::domain("n_paths must be ≥ 1"));
    }
    let z = scenario.z_model()?;
    let c = scenario.premium_rate;
    let w = lundberg_root(&z, c)?;
    let m1 = z.z_tilted_moment(1, w)?;
    let d = 1.0 / (z.lambda * m1 - c);
    let u_max = *scenario
        .capital_grid
        .last()
        .expect("non-empty capital grid");
    let mut t_max = scenario.horizon_factor * u_max.max(1.0) * d;

    for _attempt in 0..4 {
        let report = run_ruin_pass(scenario, &z, w, t_max)?;
        // widen until the bias bound is below half the narrowest interesting
        // confidence width
        let fine = report.points.iter().all(|p| {
            p.u == 0.0 || p.hits == 0 || report.bias_bound <= (1.5 * p.std_err).max(1e-300)
        });
        if fine {
            return Ok(report);
        }
        t_max *= 2.0;
    }
    Err(Error::numeric(
        "truncation bias still dominates after widening the horizon",
        t_max,
    ))
}

fn run_ruin_pass(
    scenario: &RuinScenario,
    z: &ZModel,
    w: f64,
    t_max: f64,
) -> Result<RuinMcReport> {
    let c = scenario.premium_rate;
    let grid = &scenario.capital_grid;
    let mut hits = alloc::vec![0u64; grid.len()];
    let n_paths = scenario.n_paths;
    for &seed in &scenario.seeds {
        for idx in 0..n_paths {
            let mut rng = StreamRng::new(seed, idx);
            let sup = path_supremum(&scenario.model, c, t_max, &mut rng)?;
            for (j, &u) in grid.iter().enumerate() {
                if sup >= u {
                    hits[j] += 1;
                }
            }
        }
    }
    let total = n_paths * scenario.seeds.len() as u64;
    let n_f = total as f64;
    let points: Vec<RuinPoint> = grid
        .iter()
        .zip(&hits)
        .map(|(&u, &h)| {
            // u = 0: ruin is immediate by convention (the supremum from 0 is ≥ 0)
            let (psi_hat, hits) = if u == 0.0 { (1.0, total) } else { (h as f64 / n_f, h) };
            RuinPoint {
                u,
                psi_hat,
                std_err: math::sqrt(psi_hat * (1.0 - psi_hat) / n_f),
                hits,
            }
        })
        .collect();
    let bias_bound = truncation_bias_bound(z, c, w, grid[0].max(1e-9), t_max)?;

    // slope over points with enough hits and bias-dominated ones excluded
    let usable: Vec<&RuinPoint> = points
        .iter()
        .filter(|p| p.u > 0.0 && p.hits >= 25 && bias_bound < p.psi_hat / 4.0)
        .collect();
    let fitted_slope = if usable.len() >= 2 {
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in usable {
            let weight = p.hits as f64;
            let (x, y) = (p.u, math::ln(p.psi_hat));
            sw += weight;
            sx += weight * x;
            sy += weight * y;
            sxx += weight * x * x;
            sxy += weight * x * y;
        }
        Some((sw * sxy - sx * sy) / (sw * sxx - sx * sx))
    } else {
        None
    };
    Ok(RuinMcReport {
        w,
        t_max,
        bias_bound,
        points,
        fitted_slope,
        n_paths: total,
    })
}

/// Exact `sup_{t ≤ T}(S_t − ct)` for one simulated path.
fn path_supremum(
    model: &MarkedShotModel,
    c: f64,
    t_max: f64,
    rng: &mut StreamRng,
) -> Result<f64> {
    let lambda = model.lambda;
    match (&model.shape, &model.marks) {
        // S jumps at arrivals and is flat between: the supremum is attained
        // immediately after a jump
        (ShotShape::Constant, MarkSource::Mark(mark)) => {
            let mut sup = 0.0f64;
            let mut s = 0.0f64;
            let mut t = 0.0f64;
            loop {
                t += rng.exponential(lambda);
                if t > t_max {
                    return Ok(sup);
                }
                s += mark.sample(rng);
                sup = sup.max(s - c * t);
            }
        }
        // cluster counting: jumps at every birth
        (ShotShape::ClusterCount, MarkSource::Cluster(law)) => {
            let mut events: Vec<f64> = Vec::new();
            let mut t = 0.0f64;
            loop {
                t += rng.exponential(lambda);
                if t > t_max {
                    break;
                }
                let horizon = t_max - t;
                let cluster = crate::sim::simulate_cluster(law, rng);
                for &b in cluster.birth_times.iter().flatten() {
                    if b <= horizon {
                        events.push(t + b);
                    }
                }
            }
            events.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
            let mut sup = 0.0f64;
            for (i, &e) in events.iter().enumerate() {
                sup = sup.max((i as f64 + 1.0) - c * e);
            }
            Ok(sup)
        }
        // S grows piecewise linearly: track slope changes at arrivals and
        // at shot-settlement times
        (ShotShape::Capped, MarkSource::Mark(mark)) => {
            piecewise_linear_supremum(lambda, c, t_max, rng, |rng| {
                let m = mark.sample(rng);
                (1.0, m) // slope 1 for a duration of m
            })
        }
        (ShotShape::Multiplicative { f: ShapeCdf::Uniform01 }, MarkSource::Mark(mark)) => {
            piecewise_linear_supremum(lambda, c, t_max, rng, |rng| {
                let m = mark.sample(rng);
                (m, 1.0) // slope m for a duration of 1
            })
        }
        (ShotShape::Multiplicative { f: ShapeCdf::Degenerate }, MarkSource::Mark(mark)) => {
            // settles instantly: same event structure as the constant shape
            let mut sup = 0.0f64;
            let mut s = 0.0f64;
            let mut t = 0.0f64;
            loop {
                t += rng.exponential(lambda);
                if t > t_max {
                    return Ok(sup);
                }
                s += mark.sample(rng);
                sup = sup.max(s - c * t);
            }
        }
        (ShotShape::Multiplicative { f: ShapeCdf::Exponential { rate } }, MarkSource::Mark(mark)) => {
            exponential_shape_supremum(lambda, c, *rate, t_max, rng, mark)
        }
        _ => Err(Error::domain(
            "ruin supremum unavailable for this shape/mark pair",
        )),
    }
}

/// Supremum for shapes where each shot adds `slope` to S' for a fixed
/// `duration`: X = S − ct is piecewise linear with breakpoints at arrivals
/// and settlement times, so the supremum is a maximum over breakpoints.
fn piecewise_linear_supremum<G>(
    lambda: f64,
    c: f64,
    t_max: f64,
    rng: &mut StreamRng,
    mut draw: G,
) -> Result<f64>
where
    G: FnMut(&mut StreamRng) -> (f64, f64),
{
    // settlement events kept in a small sorted queue
    let mut settlements: alloc::collections::BinaryHeap<core::cmp::Reverse<OrdF64>> =
        alloc::collections::BinaryHeap::new();
    let mut slope_sum = 0.0f64;
    let mut settle_slopes: alloc::collections::BTreeMap<OrdF64, f64> =
        alloc::collections::BTreeMap::new();
    let mut sup = 0.0f64;
    let mut s = 0.0f64;
    let mut tau = 0.0f64;
    let mut next_arrival = rng.exponential(lambda);
    loop {
        let next_settle = settlements.peek().map(|r| r.0 .0);
        let next_event = match next_settle {
            Some(ts) if ts < next_arrival => ts,
            _ => next_arrival,
        };
        if next_event > t_max {
            // advance to t_max and stop; X decreases wherever slope < c and
            // increases otherwise, so checking the endpoint suffices
            s += slope_sum * (t_max - tau);
            sup = sup.max(s - c * t_max);
            return Ok(sup);
        }
        s += slope_sum * (next_event - tau);
        tau = next_event;
        if Some(next_event) == next_settle {
            let key = settlements.pop().expect("peeked").0;
            if let Some(sl) = settle_slopes.remove(&key) {
                slope_sum -= sl;
            }
        } else {
            let (slope, duration) = draw(rng);
            slope_sum += slope;
            let end = OrdF64(tau + duration);
            *settle_slopes.entry(end).or_insert(0.0) += slope;
            settlements.push(core::cmp::Reverse(end));
            next_arrival = tau + rng.exponential(lambda);
        }
        sup = sup.max(s - c * tau);
    }
}

/// Supremum for `H(t, m) = m(1 − e^{−r t})`: between events X is concave
/// with an explicit interior critical point, so each segment maximum is
/// exact. The accumulator `W = Σ m_i e^{r T_i}` lives in log space (it
/// overflows directly for fast settlement rates).
fn exponential_shape_supremum(
    lambda: f64,
    c: f64,
    r: f64,
    t_max: f64,
    rng: &mut StreamRng,
    mark: &MarkLaw,
) -> Result<f64> {
    // S(τ) = total − e^{ln W − rτ}
    let mut total = 0.0f64;
    let mut ln_w = f64::NEG_INFINITY;
    let mut sup = 0.0f64;
    let mut prev = 0.0f64;
    let mut next_arrival = rng.exponential(lambda);
    let ln_r_over_c = math::ln(r / c);
    let segment_max = |total: f64, ln_w: f64, a: f64, b: f64, sup: &mut f64| {
        let x_at = |tau: f64| total - math::exp(ln_w - r * tau) - c * tau;
        // X'(τ) = r e^{ln W − rτ} − c = 0 at τ = (ln W + ln(r/c))/r
        if ln_w > f64::NEG_INFINITY {
            let crit = (ln_w + ln_r_over_c) / r;
            if crit > a && crit < b {
                *sup = sup.max(x_at(crit));
            }
        }
        *sup = sup.max(x_at(a)).max(x_at(b));
    };
    loop {
        if next_arrival > t_max {
            segment_max(total, ln_w, prev, t_max, &mut sup);
            return Ok(sup);
        }
        segment_max(total, ln_w, prev, next_arrival, &mut sup);
        let m = mark.sample(rng);
        total += m;
        // ln W ← logaddexp(ln W, ln m + r T)
        let add = math::ln(m.max(f64::MIN_POSITIVE)) + r * next_arrival;
        ln_w = if ln_w == f64::NEG_INFINITY {
            add
        } else {
            let hi = ln_w.max(add);
            hi + math::ln_1p(math::exp(-math::abs(ln_w - add)))
        };
        prev = next_arrival;
        next_arrival += rng.exponential(lambda);
    }
}

/// Total ordering wrapper for event times.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.partial_cmp(&other.0).expect("event times are finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{ClusterLaw, OffspringLaw};

    fn exp_scenario(grid: Vec<f64>, n_paths: u64) -> RuinScenario {
        let model = MarkedShotModel::with_mark(
            1.0,
            ShotShape::Constant,
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        RuinScenario::new(model, 2.0, grid, n_paths, vec![97]).unwrap()
    }

    #[test]
    fn cl_constant_exponential_claims() {
        // exp(1), λ=1, c=2, w=0.5: ∫xe^{0.5x}e^{−x}dx = 4 ⇒ constant = 0.5
        let z = ZModel::direct(1.0, MarkLaw::exponential(1.0).unwrap()).unwrap();
        let c = cl_constant(&z, 2.0).unwrap();
        assert!((c - 0.5).abs() < 1e-12, "constant {c}");
    }

    #[test]
    fn cl_constant_unit_claims_closed_form() {
        // Z ≡ 1: ∫₀¹ x e^{wx} dx = ((w−1)e^w + 1)/w²
        let z = ZModel::direct(1.0, MarkLaw::deterministic(1.0).unwrap()).unwrap();
        let c_rate = 2.0;
        let w = lundberg_root(&z, c_rate).unwrap();
        let integral = ((w - 1.0) * w.exp() + 1.0) / (w * w);
        let want = 1.0 / (w / (c_rate - 1.0) * integral);
        let got = cl_constant(&z, c_rate).unwrap();
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn cl_constant_near_boundary_degenerates() {
        let z = ZModel::direct(1.0, MarkLaw::exponential(1.0).unwrap()).unwrap();
        assert!(cl_constant(&z, 1.0 + 1e-9).is_err());
    }

    #[test]
    fn cluster_tail_integral_matches_series() {
        // brute: Σ_k P(Z>k) ∫_k^{k+1} x e^{wx} dx with Borel tails
        let law = ClusterLaw::new(
            OffspringLaw::poisson(0.4).unwrap(),
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        let z = ZModel::cluster(1.0, law.clone()).unwrap();
        let w = 0.05;
        let got = tail_weighted_integral(&z, w).unwrap();
        let anti = |x: f64| (w * x - 1.0) * (w * x).exp() / (w * w);
        let mut tail = 1.0;
        let mut want = 0.0;
        for k in 0..2000u64 {
            want += tail * (anti(k as f64 + 1.0) - anti(k as f64));
            tail -= law.progeny_pmf(k + 1).unwrap();
            if tail < 1e-16 {
                break;
            }
        }
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn bounds_ordering_and_asymptotics() {
        let scenario = exp_scenario(vec![5.0, 10.0], 10);
        let bounds = ruin_bounds(&scenario).unwrap();
        assert!((bounds.w - 0.5).abs() < 1e-12);
        // lower < upper beyond the crossover, and their ratio → 0
        let cross = bounds.crossover();
        for u in [cross + 1.0, cross + 10.0, cross + 100.0] {
            assert!(bounds.lower(u) < bounds.upper(u));
        }
        let r1 = bounds.lower(20.0) / bounds.upper(20.0);
        let r2 = bounds.lower(80.0) / bounds.upper(80.0);
        assert!(r2 < r1);
        // d > 0 was asserted inside; sanity: lower coefficient positive
        assert!(bounds.lower_coeff > 0.0);
    }

    #[test]
    fn ruin_mc_exponential_claims_matches_exact_psi() {
        // constant shape ⇒ ψ(u) = (λ/(ca)) e^{−(a−λ/c)u} exactly
        let scenario = exp_scenario(vec![0.0, 1.0, 3.0, 5.0], 120_000);
        let report = ruin_mc(&scenario).unwrap();
        assert!((report.w - 0.5).abs() < 1e-12);
        for p in &report.points {
            let want = if p.u == 0.0 {
                1.0
            } else {
                0.5 * math::exp(-0.5 * p.u)
            };
            assert!(
                (p.psi_hat - want).abs() <= 4.0 * p.std_err + report.bias_bound + 2e-3,
                "u={}: {} vs exact {want} (se {})",
                p.u,
                p.psi_hat,
                p.std_err
            );
        }
        assert!(report.bias_bound < 1e-4, "bias {}", report.bias_bound);
    }

    #[test]
    fn ruin_mc_slope_near_lundberg() {
        let scenario = exp_scenario(vec![2.0, 4.0, 6.0, 8.0], 200_000);
        let report = ruin_mc(&scenario).unwrap();
        let slope = report.fitted_slope.expect("enough hits");
        assert!(
            (slope + 0.5).abs() < 0.05,
            "slope {slope} should be ≈ −0.5"
        );
    }

    #[test]
    fn capped_shape_ruin_below_cramer_lundberg() {
        // delayed settlement can only help: ψ_IBNR ≤ ψ_CL + noise
        let capped = MarkedShotModel::with_mark(
            1.0,
            ShotShape::Capped,
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        let scen_capped =
            RuinScenario::new(capped, 2.0, vec![2.0, 4.0], 60_000, vec![5]).unwrap();
        let capped_report = ruin_mc(&scen_capped).unwrap();
        let scen_cl = exp_scenario(vec![2.0, 4.0], 60_000);
        let cl_report = ruin_mc(&scen_cl).unwrap();
        for (a, b) in capped_report.points.iter().zip(&cl_report.points) {
            let joint = 3.0 * (a.std_err + b.std_err);
            assert!(
                a.psi_hat <= b.psi_hat + joint,
                "u={}: capped {} vs CL {}",
                a.u,
                a.psi_hat,
                b.psi_hat
            );
        }
    }

    #[test]
    fn uniform_multiplicative_supremum_sane() {
        // ramping settlement, uniform F: still dominated by CL
        let model = MarkedShotModel::with_mark(
            1.0,
            ShotShape::Multiplicative { f: ShapeCdf::Uniform01 },
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        let scen = RuinScenario::new(model, 2.0, vec![1.0, 3.0], 40_000, vec![6]).unwrap();
        let report = ruin_mc(&scen).unwrap();
        for p in &report.points {
            let cl_exact = 0.5 * math::exp(-0.5 * p.u);
            assert!(p.psi_hat <= cl_exact + 4.0 * p.std_err + 1e-3);
            assert!(p.psi_hat > 0.0);
        }
    }

    #[test]
    fn exponential_f_supremum_consistency() {
        // fast settlement (rate 50) ≈ instant settlement
        let fast = MarkedShotModel::with_mark(
            1.0,
            ShotShape::Multiplicative { f: ShapeCdf::Exponential { rate: 50.0 } },
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        let scen = RuinScenario::new(fast, 2.0, vec![2.0], 60_000, vec![8]).unwrap();
        let report = ruin_mc(&scen).unwrap();
        let want = 0.5 * math::exp(-1.0f64);
        let got = report.points[0].psi_hat;
        assert!(
            (got - want).abs() < 0.15 * want,
            "{got} vs near-CL {want}"
        );
    }

    #[test]
    fn scenario_validation() {
        let model = MarkedShotModel::with_mark(
            1.0,
            ShotShape::Constant,
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        // net profit violated
        assert!(RuinScenario::new(model.clone(), 0.9, vec![1.0], 10, vec![1]).is_err());
        // unsorted grid
        assert!(RuinScenario::new(model, 2.0, vec![2.0, 1.0], 10, vec![1]).is_err());
    }
}
