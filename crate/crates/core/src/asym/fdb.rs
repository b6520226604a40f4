//! Faà di Bruno composition sums and the derivative ladder of
//! `ψ(z) = e^{λφ(z)}`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

use super::comb::for_each_composition;

/// `(g∘h)^{(j)}(x)` from the derivative lists
/// `outer[i−1] = g^{(i)}(h(x))` and `inner[m−1] = h^{(m)}(x)`:
/// `j! Σ_{i=1}^{j} g^{(i)}(h)/i! Σ_{m₁+…+m_i=j} ∏ h^{(m_t)}/m_t!`.
pub fn faa_di_bruno(outer: &[f64], inner: &[f64], j: u32) -> Result<f64> {
    if j == 0 {
        return Err(Error::domain("faa_di_bruno needs j ≥ 1"));
    }
    if outer.len() < j as usize || inner.len() < j as usize {
        return Err(Error::arity(alloc::format!(
            "faa_di_bruno order {j} needs {j} outer and inner derivatives, got {} and {}",
            outer.len(),
            inner.len()
        )));
    }
    let mut total = 0.0f64;
    for i in 1..=j {
        let gi = outer[(i - 1) as usize];
        if gi == 0.0 {
            continue;
        }
        let mut comp = 0.0f64;
        for_each_composition(j, i, &mut |parts| {
            let mut prod = 1.0f64;
            for &m in parts {
                prod *= inner[(m - 1) as usize] / math::factorial(m as u64);
            }
            comp += prod;
        });
        total += gi / math::factorial(i as u64) * comp;
    }
    Ok(math::factorial(j as u64) * total)
}

/// `ψ^{(n)}(θ)` for n = 0..=order with `ψ = e^{λφ}`:
/// `ψ^{(n)} = n! Σ_{i=1}^{n} λ^i e^{λφ}/i! Σ_{m₁+…+m_i=n} ∏ φ^{(m_t)}/m_t!`.
///
/// `phi_derivs[m]` must hold φ^{(m)}(θ) for m = 0..=order.
pub fn psi_derivatives(phi_derivs: &[f64], lambda: f64, order: u32) -> Result<Vec<f64>> {
    if phi_derivs.len() <= order as usize {
        return Err(Error::arity(alloc::format!(
            "psi derivatives to order {order} need {} phi derivatives, got {}",
            order + 1,
            phi_derivs.len()
        )));
    }
    let psi0 = math::exp(lambda * phi_derivs[0]);
    let mut out = alloc::vec![psi0];
    for n in 1..=order {
        let mut total = 0.0f64;
        for i in 1..=n {
            let mut comp = 0.0f64;
            for_each_composition(n, i, &mut |parts| {
                let mut prod = 1.0f64;
                for &m in parts {
                    prod *= phi_derivs[m as usize] / math::factorial(m as u64);
                }
                comp += prod;
            });
            total += math::powi(lambda, i as i32) * psi0 / math::factorial(i as u64) * comp;
        }
        out.push(math::factorial(n as u64) * total);
    }
    Ok(out)
}
