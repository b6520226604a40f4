//! Scalar math shim: `std` intrinsics when available, `libm` otherwise.
//! `lgamma`/`erf`/`erfc` always come from `libm` (absent from `std`).

#![allow(clippy::excessive_precision)]

macro_rules! shim {
    ($name:ident, $std:ident, $libm:ident) => {
        #[cfg(feature = "std")]
        #[inline(always)]
        pub fn $name(x: f64) -> f64 {
            x.$std()
        }
        #[cfg(not(feature = "std"))]
        #[inline(always)]
        pub fn $name(x: f64) -> f64 {
            libm::$libm(x)
        }
    };
}

shim!(exp, exp, exp);
shim!(ln, ln, log);
shim!(ln_1p, ln_1p, log1p);
shim!(exp_m1, exp_m1, expm1);
shim!(sqrt, sqrt, sqrt);
shim!(sin, sin, sin);
shim!(cos, cos, cos);
shim!(tan, tan, tan);
shim!(atan, atan, atan);
shim!(floor, floor, floor);
shim!(ceil, ceil, ceil);
shim!(round, round, round);

#[cfg(feature = "std")]
#[inline(always)]
pub fn abs(x: f64) -> f64 {
    x.abs()
}
#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn powf(x: f64, y: f64) -> f64 {
    x.powf(y)
}
#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn powi(x: f64, n: i32) -> f64 {
    x.powi(n)
}
#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// Natural log of the gamma function.
#[inline(always)]
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline(always)]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline(always)]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Upper tail of the standard Gaussian, `P(N(0,1) > y)`.
#[inline]
pub fn normal_tail(y: f64) -> f64 {
    0.5 * erfc(y / core::f64::consts::SQRT_2)
}

/// Standard Gaussian CDF.
#[inline]
pub fn normal_cdf(y: f64) -> f64 {
    0.5 * erfc(-y / core::f64::consts::SQRT_2)
}

/// ln n! via lgamma.
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    lgamma(n as f64 + 1.0)
}

/// n! as f64; exact for n ≤ 20.
pub fn factorial(n: u64) -> f64 {
    if n <= 20 {
        let mut acc = 1u64;
        for k in 2..=n {
            acc *= k;
        }
        acc as f64
    } else {
        exp(ln_factorial(n))
    }
}

/// Binomial coefficient C(n, k) as f64.
pub fn binomial_coeff(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 62 {
        let mut acc = 1.0f64;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc
    } else {
        exp(ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
    }
}

/// ln C(n, k).
pub fn ln_binomial_coeff(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Double factorial (2n−1)!! = 1·3·5···(2n−1); log-space past n = 10.
pub fn odd_double_factorial(n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if n <= 10 {
        let mut acc = 1.0f64;
        let mut k = 1u64;
        while k <= 2 * n - 1 {
            acc *= k as f64;
            k += 2;
        }
        acc
    } else {
        // (2n−1)!! = (2n)! / (2^n n!)
        exp(ln_factorial(2 * n) - (n as f64) * core::f64::consts::LN_2 - ln_factorial(n))
    }
}
