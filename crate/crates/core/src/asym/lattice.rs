//! Expansion coefficients of the lattice sharp-deviation formulas: the
//! point-mass corrections a_k(θ_x) and the tail corrections b_k(θ_x),
//! assembled from partition sums over tilted moments and ψ-derivatives.

use crate::error::{Error, Result};
use crate::math;
use crate::tilt::TiltSolution;

use super::comb::partitions;

/// Inputs shared by the coefficient formulas.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionInputs<'a> {
    pub theta: f64,
    pub lambda: f64,
    /// tilted[j] = E[Z^j e^{θZ}], j = 0..=2k+2.
    pub tilted: &'a [f64],
    /// psi[n] = ψ^{(n)}(θ), n = 0..=2k.
    pub psi: &'a [f64],
}

impl<'a> ExpansionInputs<'a> {
    fn check(&self, k: u32) -> Result<()> {
        let need_tilted = (2 * k + 2) as usize + 1;
        if self.tilted.len() < need_tilted {
            return Err(Error::arity(alloc::format!(
                "coefficient k={k} needs tilted moments to order {}, got {}",
                2 * k + 2,
                self.tilted.len().saturating_sub(1)
            )));
        }
        if self.psi.len() < (2 * k) as usize + 1 {
            return Err(Error::arity(alloc::format!(
                "coefficient k={k} needs psi derivatives to order {}, got {}",
                2 * k,
                self.psi.len().saturating_sub(1)
            )));
        }
        Ok(())
    }
}

/// The inner double sum shared by a_k and b_k:
/// `Σ_{ℓ=0}^{L} ψ^{(L−ℓ)}/(L−ℓ)! Σ_{𝒮_ℓ} (−1)^{Σm}/∏(m_j!·j!^{m_j})
///   · ∏_j (E[Z^{j+2}e^{θZ}]/((j+1)(j+2)E[Z²e^{θZ}]))^{m_j}
///   · (−1)^k (2(k+Σm)−1)!! / (λE[Z²e^{θZ}])^k`.
fn partition_block(inputs: &ExpansionInputs<'_>, k: u32, max_order: u32) -> Result<f64> {
    let m2 = inputs.tilted[2];
    let lam_m2_k = math::powi(inputs.lambda * m2, k as i32);
    let k_sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut total = 0.0f64;
    for ell in 0..=max_order {
        let psi_coeff = inputs.psi[(max_order - ell) as usize]
            / math::factorial((max_order - ell) as u64);
        if psi_coeff == 0.0 {
            continue;
        }
        let mut ell_sum = 0.0f64;
        for tuple in &partitions(ell)?.tuples {
            let m_total: u32 = tuple.iter().sum();
            let sign = if m_total % 2 == 0 { 1.0 } else { -1.0 };
            let mut weight = 1.0f64;
            let mut moment_prod = 1.0f64;
            for (idx, &mj) in tuple.iter().enumerate() {
                if mj == 0 {
                    continue;
                }
                let j = (idx + 1) as u32;
                weight *= math::factorial(mj as u64)
                    * math::powi(math::factorial(j as u64), mj as i32);
                let ratio = inputs.tilted[(j + 2) as usize]
                    / ((j as f64 + 1.0) * (j as f64 + 2.0) * m2);
                moment_prod *= math::powi(ratio, mj as i32);
            }
            let dfac = math::odd_double_factorial((k + m_total) as u64);
            ell_sum += sign / weight * moment_prod * k_sign * dfac / lam_m2_k;
        }
        total += psi_coeff * ell_sum;
    }
    Ok(total)
}

/// a_k(θ_x): the 1/t^k correction of the lattice point-mass formula.
pub fn lattice_point_coeff(inputs: &ExpansionInputs<'_>, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("corrections start at k = 1"));
    }
    inputs.check(k)?;
    partition_block(inputs, k, 2 * k)
}

/// b_k(θ_x): the 1/t^k correction of the lattice tail formula; requires
/// θ_x ≠ 0 (a geometric factor (1−e^{−θ})^{−·} appears).
///
/// Normalization: the assembled tail reads
/// `e^{−tη*}/√(2πλt m₂) · (ψ(θ)/(1−e^{−θ}) + Σ_k b_k/t^k)`,
/// i.e. b_k pairs with the geometric-weighted leading term, not with a bare
/// ψ inside a factored bracket. The outer partition sum is exactly the
/// composition expansion of `d^n/dθ^n [1/(1−e^{−θ})] / n!` (so the weight
/// carries `e^{−(m₁+…+m_n)θ}`), combined with the ψ-block by the Leibniz
/// rule; an exact compound-Poisson oracle pins both conventions down (see
/// tests/lattice_oracle.rs).
pub fn lattice_tail_coeff(inputs: &ExpansionInputs<'_>, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("corrections start at k = 1"));
    }
    if inputs.theta == 0.0 {
        return Err(Error::domain(
            "tail coefficient undefined at theta = 0 (geometric factor singular)",
        ));
    }
    inputs.check(k)?;
    let theta = inputs.theta;
    let geo_base = 1.0 - math::exp(-theta);
    let mut total = 0.0f64;
    for n in 0..=2 * k {
        let n_sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut outer = 0.0f64;
        for tuple in &partitions(n)?.tuples {
            let m_total: u32 = tuple.iter().sum();
            let mut weight = 1.0f64;
            for (idx, &mj) in tuple.iter().enumerate() {
                if mj == 0 {
                    continue;
                }
                let j = (idx + 1) as u32;
                weight *= math::factorial(mj as u64)
                    * math::powi(math::factorial(j as u64), mj as i32);
            }
            outer += math::exp(-(m_total as f64) * theta) * math::factorial(m_total as u64)
                / math::powi(geo_base, m_total as i32 + 1)
                / weight;
        }
        total += n_sign * outer * partition_block(inputs, k, 2 * k - n)?;
    }
    Ok(total)
}

/// Both coefficients from a tilt solution and a ψ-derivative table.
pub fn lattice_coeffs(
    tilt: &TiltSolution,
    psi_derivs: &[f64],
    lambda: f64,
    k: u32,
) -> Result<(f64, f64)> {
    let inputs = ExpansionInputs {
        theta: tilt.theta,
        lambda,
        tilted: &tilt.higher,
        psi: psi_derivs,
    };
    let a_k = lattice_point_coeff(&inputs, k)?;
    let b_k = lattice_tail_coeff(&inputs, k)?;
    Ok((a_k, b_k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a1_constant_shape_is_classical_saddlepoint_correction() {
        // ψ ≡ 1 ⇒ a₁ = m₄/(8λ m₂²) − 5 m₃²/(24λ m₂³)
        let tilted = [1.0, 1.3, 2.0, 4.1, 10.5];
        let psi = [1.0, 0.0, 0.0];
        let lambda = 1.4;
        let inputs = ExpansionInputs {
            theta: 0.2,
            lambda,
            tilted: &tilted,
            psi: &psi,
        };
        let a1 = lattice_point_coeff(&inputs, 1).unwrap();
        let (m2, m3, m4) = (tilted[2], tilted[3], tilted[4]);
        let want = m4 / (8.0 * lambda * m2 * m2) - 5.0 * m3 * m3 / (24.0 * lambda * m2 * m2 * m2);
        assert!((a1 - want).abs() < 1e-12 * want.abs().max(1.0), "{a1} vs {want}");
    }

    #[test]
    fn b1_rejects_zero_theta() {
        let tilted = [1.0, 1.0, 2.0, 6.0, 24.0];
        let psi = [1.0, 0.0, 0.0];
        let inputs = ExpansionInputs {
            theta: 0.0,
            lambda: 1.0,
            tilted: &tilted,
            psi: &psi,
        };
        assert!(lattice_point_coeff(&inputs, 1).is_ok());
        assert!(lattice_tail_coeff(&inputs, 1).is_err());
    }

    #[test]
    fn missing_moments_rejected() {
        let tilted = [1.0, 1.0, 2.0];
        let psi = [1.0, 0.0, 0.0];
        let inputs = ExpansionInputs {
            theta: 0.1,
            lambda: 1.0,
            tilted: &tilted,
            psi: &psi,
        };
        assert!(lattice_point_coeff(&inputs, 1).is_err());
    }
}
