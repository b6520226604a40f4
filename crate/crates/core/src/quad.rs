//! One-dimensional quadrature: adaptive Simpson for smooth integrands and an
//! adaptive Filon rule for `∫ B(ξ) e^{−ixξ} dξ` with slowly varying `B`,
//! where ordinary rules would have to resolve every oscillation.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
}

/// Refinement stops once local discrepancies reach rounding noise.
const ABS_NOISE_FLOOR: f64 = 1e-18;

/// Adaptive Simpson with Richardson error control.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::domain("simpson: invalid interval"));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut acc_err = 0.0f64;
    let v = simpson_rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        max_depth,
        &mut acc_err,
    )?;
    Ok(QuadResult {
        value: v,
        abs_error: acc_err,
    })
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc_err: &mut f64,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::numeric("simpson: non-finite integrand", f64::NAN));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if math::abs(delta) <= (15.0 * tol).max(ABS_NOISE_FLOOR)
        || (b - a) < 1e-14 * (1.0 + math::abs(a))
    {
        if depth == 0 && math::abs(delta) > 15.0 * tol {
            return Err(Error::numeric(
                "simpson: refinement limit reached",
                math::abs(delta) / 15.0,
            ));
        }
        *acc_err += math::abs(delta) / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::numeric(
            "simpson: max depth exceeded",
            math::abs(delta) / 15.0,
        ));
    }
    let lv = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, acc_err)?;
    let rv = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, acc_err)?;
    Ok(lv + rv)
}

/// Adaptive Simpson over `n_panels` equal initial panels; stops top-level
/// acceptance from lucking out on mildly oscillatory integrands.
pub fn adaptive_simpson_panels<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    n_panels: usize,
    tol: f64,
    max_depth: u32,
) -> Result<QuadResult> {
    let n = n_panels.max(1);
    let width = (b - a) / n as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    for i in 0..n {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == n { b } else { lo + width };
        let r = adaptive_simpson(f, lo, hi, tol / n as f64, max_depth)?;
        value += r.value;
        err += r.abs_error;
    }
    Ok(QuadResult {
        value,
        abs_error: err,
    })
}

/// Filon moments ∫_{−h}^{h} u^k e^{−ixu} du for k = 0, 1, 2.
fn filon_moments(x: f64, h: f64) -> (Complex64, Complex64, Complex64) {
    let theta = x * h;
    if math::abs(theta) < 0.05 {
        let t2 = theta * theta;
        let i0 = 2.0 * h * (1.0 - t2 / 6.0 + t2 * t2 / 120.0);
        let i1 = -2.0 * h * h * (theta / 3.0 - theta * t2 / 30.0 + theta * t2 * t2 / 840.0);
        let i2 = 2.0 * h * h * h * (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0);
        (
            Complex64::new(i0, 0.0),
            Complex64::new(0.0, i1),
            Complex64::new(i2, 0.0),
        )
    } else {
        let (s, c) = (math::sin(theta), math::cos(theta));
        let i0 = 2.0 * s / x;
        let i1 = -2.0 * (s - theta * c) / (x * x);
        let i2 = 2.0 * (theta * theta * s + 2.0 * theta * c - 2.0 * s) / (x * x * x);
        (
            Complex64::new(i0, 0.0),
            Complex64::new(0.0, i1),
            Complex64::new(i2, 0.0),
        )
    }
}

/// One quadratic-Filon panel of ∫_a^b B(ξ) e^{−ixξ} dξ.
fn filon_panel(ba: Complex64, bm: Complex64, bb: Complex64, x: f64, a: f64, b: f64) -> Complex64 {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let b0 = bm;
    let b1 = (bb - ba) / (2.0 * h);
    let b2 = (bb - 2.0 * bm + ba) / (2.0 * h * h);
    let (i0, i1, i2) = filon_moments(x, h);
    let phase = Complex64::new(0.0, -x * m).exp();
    phase * (b0 * i0 + b1 * i1 + b2 * i2)
}

/// Adaptive ∫_a^b B(ξ) e^{−ixξ} dξ; `B` must be smooth on [a, b].
pub fn adaptive_filon<F: Fn(f64) -> Complex64>(
    bfun: &F,
    x: f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<(Complex64, f64)> {
    struct Frame {
        a: f64,
        b: f64,
        ba: Complex64,
        bm: Complex64,
        bb: Complex64,
        whole: Complex64,
        depth: u32,
        tol: f64,
    }
    if a == b {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let ba = bfun(a);
    let bb = bfun(b);
    let bm = bfun(0.5 * (a + b));
    let whole = filon_panel(ba, bm, bb, x, a, b);
    let mut stack = Vec::new();
    stack.push(Frame {
        a,
        b,
        ba,
        bm,
        bb,
        whole,
        depth: max_depth,
        tol,
    });
    let mut total = Complex64::new(0.0, 0.0);
    let mut err_acc = 0.0f64;
    while let Some(fr) = stack.pop() {
        let m = 0.5 * (fr.a + fr.b);
        let blm = bfun(0.5 * (fr.a + m));
        let brm = bfun(0.5 * (m + fr.b));
        let left = filon_panel(fr.ba, blm, fr.bm, x, fr.a, m);
        let right = filon_panel(fr.bm, brm, fr.bb, x, m, fr.b);
        let delta = (left + right - fr.whole).norm();
        let accept = fr.tol.max(ABS_NOISE_FLOOR);
        if delta <= accept || fr.depth == 0 || (fr.b - fr.a) < 1e-13 * (1.0 + math::abs(fr.a)) {
            if fr.depth == 0 && delta > accept {
                return Err(Error::numeric("filon: max depth exceeded", delta));
            }
            total += left + right;
            err_acc += delta;
        } else {
            stack.push(Frame {
                a: fr.a,
                b: m,
                ba: fr.ba,
                bm: blm,
                bb: fr.bm,
                whole: left,
                depth: fr.depth - 1,
                tol: 0.5 * fr.tol,
            });
            stack.push(Frame {
                a: m,
                b: fr.b,
                ba: fr.bm,
                bm: brm,
                bb: fr.bb,
                whole: right,
                depth: fr.depth - 1,
                tol: 0.5 * fr.tol,
            });
        }
    }
    Ok((total, err_acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        let r = adaptive_simpson(&|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 40).unwrap();
        // ∫ = 4 − 4 + 2 = 2
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_exponential() {
        let r = adaptive_simpson(&math::exp, 0.0, 1.0, 1e-12, 40).unwrap();
        assert!((r.value - (core::f64::consts::E - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn simpson_kinked_integrand() {
        let f = |x: f64| if x < 0.3 { x } else { 0.3 - 2.0 * (x - 0.3) };
        let r = adaptive_simpson(&f, 0.0, 1.0, 1e-10, 48).unwrap();
        let exact = 0.045 + 0.3 * 0.7 - (0.7f64 * 0.7);
        assert!((r.value - exact).abs() < 1e-8, "got {}", r.value);
    }

    #[test]
    fn filon_matches_analytic_gaussian_piece() {
        // ∫_1^5 e^{−ξ} e^{−ixξ} dξ = (e^{−(1+ix)} − e^{−5(1+ix)})/(1+ix)
        for &x in &[0.0, 0.3, 7.0, 150.0, 4000.0] {
            let b = |xi: f64| Complex64::new(math::exp(-xi), 0.0);
            let (got, _err) = adaptive_filon(&b, x, 1.0, 5.0, 1e-12, 48).unwrap();
            let z = Complex64::new(1.0, x);
            let exact = ((-z).exp() - (-5.0 * z).exp()) / z;
            assert!(
                (got - exact).norm() < 1e-9,
                "x={x}: got {got}, exact {exact}"
            );
        }
    }

    #[test]
    fn filon_handles_huge_frequency() {
        // amplitude 1 on [0, 1]: ∫ e^{−ixξ} dξ = (1 − e^{−ix})/(ix)
        let x = 2.0e6;
        let b = |_: f64| Complex64::new(1.0, 0.0);
        let (got, _) = adaptive_filon(&b, x, 0.0, 1.0, 1e-12, 50).unwrap();
        let z = Complex64::new(0.0, x);
        let exact = (Complex64::new(1.0, 0.0) - (-z).exp()) / z;
        assert!((got - exact).norm() < 1e-10);
    }
}
