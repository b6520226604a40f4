//! Monte Carlo oracles: Galton-Watson cluster generation, shot-noise path
//! simulation for every built-in shape, stable-marked multiplicative paths,
//! and deterministic batch summaries.
//!
//! Reproducibility: path `i` of master seed `s` always uses the RNG stream
//! keyed by `(s, i)`, so results do not depend on worker scheduling; batch
//! summaries reduce with pairwise summation in index order.

use alloc::vec::Vec;

use crate::dist::{ClusterLaw, StableParams};
use crate::error::{Error, Result};
use crate::math;
use crate::model::{MarkSource, MarkedShotModel, ShapeCdf, ShotShape};
use crate::rng::StreamRng;

/// One realized Galton-Watson cluster.
#[derive(Debug, Clone)]
pub struct ClusterRealization {
    /// Birth times per generation, each sorted increasing; generation 0 is {0}.
    pub birth_times: Vec<Vec<f64>>,
    /// Total progeny Z.
    pub total_points: u64,
    /// Cluster length L = latest birth time.
    pub length: f64,
    /// Set when a safety cap interrupted generation.
    pub truncated: bool,
}

impl ClusterRealization {
    /// All birth times, globally sorted.
    pub fn sorted_births(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.birth_times.iter().flatten().copied().collect();
        all.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite births"));
        all
    }

    /// Number of births in [0, s] (the cluster-count shot shape).
    pub fn count_upto(&self, s: f64) -> u64 {
        self.birth_times
            .iter()
            .flatten()
            .filter(|&&b| b <= s)
            .count() as u64
    }
}

/// Generates one cluster breadth-first, generation by generation.
pub fn simulate_cluster(law: &ClusterLaw, rng: &mut StreamRng) -> ClusterRealization {
    let caps = law.caps();
    let mut generations: Vec<Vec<f64>> = alloc::vec![alloc::vec![0.0]];
    let mut total: u64 = 1;
    let mut length = 0.0f64;
    let mut truncated = false;
    loop {
        if generations.len() as u32 > caps.max_generations || total > caps.max_points {
            truncated = true;
            break;
        }
        let mut children: Vec<f64> = Vec::new();
        let n_parents = generations.last().expect("non-empty").len();
        for parent_idx in 0..n_parents {
            let parent = generations.last().expect("non-empty")[parent_idx];
            let count = law.offspring().sample(rng);
            for _ in 0..count {
                let lag = law.lag().sample(rng);
                children.push(parent + lag);
            }
        }
        if children.is_empty() {
            break;
        }
        children.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite births"));
        total += children.len() as u64;
        if let Some(&last) = children.last() {
            length = length.max(last);
        }
        generations.push(children);
    }
    ClusterRealization {
        birth_times: generations,
        total_points: total,
        length,
        truncated,
    }
}

/// Births in [0, horizon] of a fresh cluster, without materializing it.
/// Parents beyond the horizon are pruned (their descendants cannot lie
/// inside, lags being non-negative).
pub fn sample_cluster_count(law: &ClusterLaw, horizon: f64, rng: &mut StreamRng) -> (u64, bool) {
    let caps = law.caps();
    if horizon < 0.0 {
        return (0, false);
    }
    let mut current: Vec<f64> = alloc::vec![0.0];
    let mut count: u64 = 1;
    let mut generation = 0u32;
    let mut truncated = false;
    while !current.is_empty() {
        generation += 1;
        if generation > caps.max_generations || count > caps.max_points {
            truncated = true;
            break;
        }
        let mut next: Vec<f64> = Vec::new();
        for &parent in &current {
            let kids = law.offspring().sample(rng);
            for _ in 0..kids {
                let b = parent + law.lag().sample(rng);
                if b <= horizon {
                    next.push(b);
                }
            }
        }
        count += next.len() as u64;
        current = next;
    }
    (count, truncated)
}

/// One simulated path value S_t.
#[derive(Debug, Clone, Copy)]
pub struct PathSample {
    pub value: f64,
    pub t: f64,
    /// (master seed, stream index) that generated the path.
    pub seed: (u64, u64),
    pub n_ancestors: u64,
    pub truncated: bool,
}

/// Simulates `S_t`: Poisson(λt) ancestors with i.i.d. uniform ages, each
/// contributing `H(age, mark)`.
pub fn simulate_path(
    model: &MarkedShotModel,
    t: f64,
    rng: &mut StreamRng,
    seed: (u64, u64),
) -> Result<PathSample> {
    if !(t > 0.0) {
        return Err(Error::domain("path horizon t must be > 0"));
    }
    let n = rng.poisson(model.lambda * t);
    let mut truncated = false;
    let value = match (&model.shape, &model.marks) {
        (ShotShape::Constant, MarkSource::Mark(mark)) => {
            let mut acc = 0.0f64;
            for _ in 0..n {
                acc += mark.sample(rng);
            }
            acc
        }
        (ShotShape::Multiplicative { f }, MarkSource::Mark(mark)) => {
            let mut acc = 0.0f64;
            for _ in 0..n {
                let age = t * rng.uniform_co();
                acc += mark.sample(rng) * f.cdf(age);
            }
            acc
        }
        (ShotShape::Capped, MarkSource::Mark(mark)) => {
            let mut acc = 0.0f64;
            for _ in 0..n {
                let age = t * rng.uniform_co();
                acc += age.min(mark.sample(rng));
            }
            acc
        }
        (ShotShape::ClusterCount, MarkSource::Cluster(law)) => {
            let mut acc: u64 = 0;
            for _ in 0..n {
                let age = t * rng.uniform_co();
                let (count, trunc) = sample_cluster_count(law, age, rng);
                acc += count;
                truncated |= trunc;
            }
            acc as f64
        }
        _ => unreachable!("model constructor enforces shape/mark pairing"),
    };
    Ok(PathSample {
        value,
        t,
        seed,
        n_ancestors: n,
        truncated,
    })
}

/// `S_t / t^{1/α}` for stable marks and multiplicative shape.
pub fn simulate_stable_path(
    params: &StableParams,
    f: &ShapeCdf,
    lambda: f64,
    t: f64,
    rng: &mut StreamRng,
) -> Result<f64> {
    if !(lambda > 0.0 && t > 0.0) {
        return Err(Error::domain("stable path needs lambda > 0 and t > 0"));
    }
    let n = rng.poisson(lambda * t);
    let mut acc = 0.0f64;
    for _ in 0..n {
        let age = t * rng.uniform_co();
        acc += params.sample(rng) * f.cdf(age);
    }
    Ok(acc / math::powf(t, 1.0 / params.alpha))
}

/// Summary statistics of one batch of path values.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BatchSummary {
    pub n: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
    pub truncated_paths: u64,
}

/// Tail-count estimator P(value ≥ threshold).
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TailEstimate {
    pub threshold: f64,
    pub count: u64,
    pub p_hat: f64,
    pub std_err: f64,
}

/// Pairwise summation: deterministic and accurate regardless of how the
/// values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Order-independent summary of raw values.
pub fn summarize(
    values: &[f64],
    truncated_paths: u64,
    thresholds: &[f64],
) -> Result<(BatchSummary, Vec<TailEstimate>)> {
    let n = values.len();
    if n == 0 {
        return Err(Error::domain("empty batch: no paths simulated"));
    }
    let mean = pairwise_sum(values) / n as f64;
    let sq: Vec<f64> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let variance = if n > 1 {
        pairwise_sum(&sq) / (n as f64 - 1.0)
    } else {
        0.0
    };
    let std_err = math::sqrt(variance / n as f64);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    let summary = BatchSummary {
        n: n as u64,
        mean,
        variance,
        std_err,
        min,
        max,
        truncated_paths,
    };
    let tails = thresholds
        .iter()
        .map(|&thr| {
            let count = values.iter().filter(|&&v| v >= thr).count() as u64;
            let p = count as f64 / n as f64;
            TailEstimate {
                threshold: thr,
                count,
                p_hat: p,
                std_err: math::sqrt(p * (1.0 - p) / n as f64),
            }
        })
        .collect();
    Ok((summary, tails))
}

/// Validates a master-seed list: non-empty, pairwise distinct.
pub fn validate_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::domain("seed list must not be empty"));
    }
    let mut sorted: Vec<u64> = seeds.into();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("seed list contains duplicates"));
    }
    Ok(())
}

/// Runs `n_paths` paths per master seed through `op`, feeding each result to
/// `sink(global index, value, truncated)` in a deterministic order.
pub fn run_paths_serial<F, S>(op: &F, n_paths: u64, seeds: &[u64], sink: &mut S) -> Result<()>
where
    F: Fn(&mut StreamRng, (u64, u64)) -> Result<(f64, bool)>,
    S: FnMut(u64, f64, bool),
{
    validate_seeds(seeds)?;
    if n_paths == 0 {
        return Err(Error::domain("empty batch: n_paths must be ≥ 1"));
    }
    let mut global = 0u64;
    for &seed in seeds {
        for idx in 0..n_paths {
            let mut rng = StreamRng::new(seed, idx);
            let (value, truncated) = op(&mut rng, (seed, idx))?;
            if !value.is_finite() {
                return Err(Error::numeric("non-finite path value", value));
            }
            sink(global, value, truncated);
            global += 1;
        }
    }
    Ok(())
}

/// Batch driver: mean/variance/tail estimators with standard errors,
/// deterministic given the seed list regardless of worker count.
pub fn batch<F>(
    op: &F,
    n_paths: u64,
    seeds: &[u64],
    thresholds: &[f64],
) -> Result<(BatchSummary, Vec<TailEstimate>)>
where
    F: Fn(&mut StreamRng, (u64, u64)) -> Result<(f64, bool)>,
{
    let total = (n_paths as usize).saturating_mul(seeds.len());
    let mut values = alloc::vec![0.0f64; total];
    let mut truncated = 0u64;
    run_paths_serial(op, n_paths, seeds, &mut |i, v, trunc| {
        values[i as usize] = v;
        truncated += u64::from(trunc);
    })?;
    summarize(&values, truncated, thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{MarkLaw, OffspringLaw};

    fn poisson_cluster(mu: f64) -> ClusterLaw {
        ClusterLaw::new(
            OffspringLaw::poisson(mu).unwrap(),
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_cluster_single_point() {
        let law = ClusterLaw::new(
            OffspringLaw::table(alloc::vec![1.0]).unwrap(),
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        let mut rng = StreamRng::new(1, 0);
        let c = simulate_cluster(&law, &mut rng);
        assert_eq!(c.total_points, 1);
        assert_eq!(c.length, 0.0);
        assert!(!c.truncated);
        assert_eq!(c.birth_times.len(), 1);
        assert_eq!(c.birth_times[0], alloc::vec![0.0]);
    }

    #[test]
    fn cluster_mean_progeny() {
        // E[Z] = (1−μ)^{-1} = 2 at μ = 0.5
        let law = poisson_cluster(0.5);
        let mut rng = StreamRng::new(7, 0);
        let n = 100_000;
        let mut total = 0u64;
        let mut truncated = 0u64;
        for _ in 0..n {
            let c = simulate_cluster(&law, &mut rng);
            total += c.total_points;
            truncated += u64::from(c.truncated);
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 2.0).abs() < 0.03, "empirical E[Z] = {mean}");
        assert_eq!(truncated, 0);
    }

    #[test]
    fn cluster_progeny_matches_borel_in_total_variation() {
        let law = poisson_cluster(0.5);
        let mut rng = StreamRng::new(8, 0);
        let n = 100_000usize;
        let mut counts = alloc::vec![0u64; 2000];
        for _ in 0..n {
            let c = simulate_cluster(&law, &mut rng);
            let idx = (c.total_points as usize).min(counts.len() - 1);
            counts[idx] += 1;
        }
        let mut tv = 0.0f64;
        for k in 1..counts.len() as u64 {
            let emp = counts[k as usize] as f64 / n as f64;
            let want = crate::dist::borel_pmf(0.5, k);
            tv += (emp - want).abs();
        }
        tv *= 0.5;
        assert!(tv <= 0.01, "total variation {tv}");
    }

    #[test]
    fn progeny_tail_within_chernoff_bound() {
        // empirical P(Z > n) ≤ e^{−n a_c} + statistical slack
        let law = poisson_cluster(0.5);
        let (a_c, _) = law.critical_exponents();
        let mut rng = StreamRng::new(9, 0);
        let n = 50_000usize;
        let sizes: Vec<u64> = (0..n)
            .map(|_| simulate_cluster(&law, &mut rng).total_points)
            .collect();
        for bound_at in [5u64, 10, 20, 40] {
            let emp = sizes.iter().filter(|&&z| z > bound_at).count() as f64 / n as f64;
            let chernoff = math::exp(-(bound_at as f64) * a_c);
            let slack = 5.0 * math::sqrt(chernoff.max(1e-12) / n as f64);
            assert!(
                emp <= chernoff + slack,
                "n={bound_at}: empirical {emp} vs bound {chernoff}"
            );
        }
    }

    #[test]
    fn count_upto_consistency() {
        let law = poisson_cluster(0.4);
        let mut rng = StreamRng::new(123, 5);
        let full = simulate_cluster(&law, &mut rng);
        assert_eq!(full.count_upto(f64::INFINITY), full.total_points);
        assert_eq!(full.count_upto(-1.0), 0);
        assert!(full.count_upto(0.0) >= 1);
        let births = full.sorted_births();
        assert_eq!(births.len() as u64, full.total_points);
        assert!(births.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn constant_shape_is_compound_poisson() {
        let model = MarkedShotModel::with_mark(
            2.0,
            ShotShape::Constant,
            MarkLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        let t = 10.0;
        let (summary, _) = batch(
            &|rng: &mut StreamRng, seed| {
                simulate_path(&model, t, rng, seed).map(|p| (p.value, p.truncated))
            },
            20_000,
            &[11],
            &[],
        )
        .unwrap();
        // E[S_t] = λtE[M] = 20 exactly for the constant shape
        assert!(
            (summary.mean - 20.0).abs() < 4.0 * summary.std_err,
            "mean {} ± {}",
            summary.mean,
            summary.std_err
        );
    }

    #[test]
    fn lattice_paths_are_integer() {
        let model = MarkedShotModel::cluster(1.0, poisson_cluster(0.3)).unwrap();
        let mut rng = StreamRng::new(5, 3);
        for _ in 0..200 {
            let p = simulate_path(&model, 7.0, &mut rng, (5, 3)).unwrap();
            assert_eq!(p.value, math::round(p.value), "non-integer lattice value");
        }
    }

    #[test]
    fn batch_rejects_bad_seed_lists() {
        let op = |rng: &mut StreamRng, _seed: (u64, u64)| Ok((rng.uniform(), false));
        assert!(batch(&op, 10, &[], &[]).is_err());
        assert!(batch(&op, 10, &[1, 2, 1], &[]).is_err());
        assert!(batch(&op, 0, &[1], &[]).is_err());
    }

    #[test]
    fn batch_deterministic_and_scales() {
        let op = |rng: &mut StreamRng, _seed: (u64, u64)| Ok((rng.uniform(), false));
        let (a, _) = batch(&op, 5000, &[3, 4], &[]).unwrap();
        let (b, _) = batch(&op, 5000, &[3, 4], &[]).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.variance, b.variance);
        let (c, _) = batch(&op, 10000, &[3, 4], &[]).unwrap();
        let ratio = (a.std_err / c.std_err).powi(2);
        assert!((1.5..=2.7).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stable_constant_shape_exact_in_law() {
        // F ≡ 1: S_t/t^{1/α} is stable with scale cλ^{1/α} at every t; for
        // α = 2 that is N(0, 2(cλ^{1/2})²)
        let params = StableParams::new(0.5, 2.0, 0.0).unwrap();
        let lambda = 2.0;
        let mut rng = StreamRng::new(77, 0);
        let n = 40_000;
        let mut sq = 0.0;
        for _ in 0..n {
            let v = simulate_stable_path(&params, &ShapeCdf::Degenerate, lambda, 5.0, &mut rng)
                .unwrap();
            sq += v * v;
        }
        let var = sq / n as f64;
        let want = 2.0 * params.c * params.c * lambda;
        assert!((var - want).abs() < 0.05 * want, "var {var} want {want}");
    }
}
