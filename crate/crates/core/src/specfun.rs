//! Special functions behind the research-cost model.
//!
//! The cost kernel is `c̃(ρ) = erf⁻¹(ρ)²`. Writing `ι = erf⁻¹(ρ)`:
//!
//! * `c̃′(ρ) = √π · ι · e^{ι²}`
//! * `c̃″(ρ) = 2 ι′² (1 + 2ι²)` with `ι′ = (√π/2) e^{ι²}`
//! * `(c̃′)⁻¹(x) = erf(√(W₀(2x²/π)/2))`
//!
//! `erf` itself comes from `libm`; the inverse and Lambert W are refined
//! here with Halley iterations so results carry ~1e-15 relative accuracy.
//! At `ρ = 1` the kernel returns [`INFINITE_COST`] instead of overflowing.

use std::f64::consts::{E, PI};

use crate::error::{domain, Result};

/// Sentinel returned by [`ctilde`] at `ρ = 1`.
pub const INFINITE_COST: f64 = f64::INFINITY;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Kernel value and derivatives at one probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostKernelPoint {
    pub rho: f64,
    pub ctilde: f64,
    pub ctilde_prime: f64,
    pub ctilde_second: f64,
}

impl CostKernelPoint {
    pub fn at(rho: f64) -> Result<Self> {
        check_open_unit(rho)?;
        let iota = erf_inv(rho)?;
        let (c, cp, cpp) = kernel_from_iota(iota);
        Ok(Self { rho, ctilde: c, ctilde_prime: cp, ctilde_second: cpp })
    }
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Inverse error function on `(-1, 1)`.
pub fn erf_inv(p: f64) -> Result<f64> {
    if !(p.abs() < 1.0) {
        return domain(format!("erf_inv requires |p| < 1, got {p}"));
    }
    if p == 0.0 {
        return Ok(p);
    }
    let a = p.abs();
    let mut y = erf_inv_guess(a);
    for _ in 0..2 {
        // Residual in the better-conditioned tail for large a; 1 - a is exact there.
        let f = if a <= 0.5 { erf(y) - a } else { (1.0 - a) - erfc(y) };
        let fp = TWO_OVER_SQRT_PI * (-y * y).exp();
        y -= f / (fp + y * f);
    }
    Ok(y.copysign(p))
}

// Giles' single-precision approximation; about 1e-7 relative.
fn erf_inv_guess(a: f64) -> f64 {
    let mut w = -(libm::log1p(-a) + libm::log1p(a));
    let p = if w < 5.0 {
        w -= 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * a
}

fn check_open_unit(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return domain(format!("probability must lie in [0,1), got {rho}"));
    }
    Ok(())
}

/// `c̃(ρ) = erf⁻¹(ρ)²`; `c̃(1)` is [`INFINITE_COST`].
pub fn ctilde(rho: f64) -> Result<f64> {
    if rho == 1.0 {
        return Ok(INFINITE_COST);
    }
    check_open_unit(rho)?;
    let i = erf_inv(rho)?;
    Ok(i * i)
}

pub fn ctilde_prime(rho: f64) -> Result<f64> {
    check_open_unit(rho)?;
    let i = erf_inv(rho)?;
    Ok(SQRT_PI * i * (i * i).exp())
}

pub fn ctilde_second(rho: f64) -> Result<f64> {
    check_open_unit(rho)?;
    Ok(kernel_from_iota(erf_inv(rho)?).2)
}

/// `(c̃, c̃′, c̃″)` expressed through `ι = erf⁻¹(ρ)`.
#[inline]
pub(crate) fn kernel_from_iota(iota: f64) -> (f64, f64, f64) {
    let i2 = iota * iota;
    let e = i2.exp();
    let ip = 0.5 * SQRT_PI * e;
    (i2, SQRT_PI * iota * e, 2.0 * ip * ip * (1.0 + 2.0 * i2))
}

/// Principal branch of Lambert W on `[-1/e, ∞)`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    const BRANCH: f64 = -1.0 / E;
    if x.is_nan() || x < BRANCH {
        return domain(format!("lambert_w0 requires x >= -1/e, got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let gap = E * x + 1.0;
    if gap <= 0.0 {
        return Ok(-1.0);
    }
    let mut w = if gap < 0.3 {
        // branch-point series in p = √(2(ex+1))
        let p = (2.0 * gap).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        // Winitzki
        let l = libm::log1p(x);
        l * (1.0 - libm::log1p(l) / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-14 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// `ι` with `c̃′(erf(ι)) = x`, i.e. `√(W₀(2x²/π)/2)`.
#[inline]
pub(crate) fn iota_for_slope(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    let arg = 2.0 * x * x / PI;
    // Large arguments: W grows like ln, so overflow in x² is the only hazard.
    let w = if arg.is_finite() {
        lambert_w0(arg).unwrap_or(f64::INFINITY)
    } else {
        let l1 = (2.0f64 / PI).ln() + 2.0 * x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    (0.5 * w).sqrt()
}

/// Inverse of `c̃′` on `[0, ∞)`; the result lies in `[0, 1)` for finite `x`.
pub fn ctilde_prime_inv(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return domain(format!("ctilde_prime_inv requires x >= 0, got {x}"));
    }
    Ok(erf(iota_for_slope(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_inv_reference_points() {
        assert_eq!(erf_inv(0.0).unwrap(), 0.0);
        assert!((erf_inv(erf(1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((erf_inv(0.95).unwrap() - 1.385_903_824_349_677_7).abs() < 1e-13);
        assert!(erf_inv(1.0).is_err());
        assert!(erf_inv(-1.5).is_err());
        assert!(erf_inv(f64::NAN).is_err());
    }

    #[test]
    fn erf_inv_is_odd_and_accurate() {
        for &p in &[1e-300, 1e-12, 1e-5, 0.1, 0.49, 0.5, 0.51, 0.9, 0.9999, 1.0 - 1e-12] {
            let y = erf_inv(p).unwrap();
            assert_eq!(erf_inv(-p).unwrap(), -y);
            let back = if p > 0.5 { 1.0 - erfc(y) } else { erf(y) };
            assert!(((back - p) / p).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn kernel_reference_points() {
        assert_eq!(ctilde(0.0).unwrap(), 0.0);
        assert!((ctilde(erf(1.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!((ctilde(0.5).unwrap() - 0.227_468_211_559_786_4).abs() < 1e-13);
        assert_eq!(ctilde(1.0).unwrap(), INFINITE_COST);
        assert!(ctilde(1.01).is_err());
        assert_eq!(ctilde_prime(0.0).unwrap(), 0.0);
        assert!((ctilde_prime(0.5).unwrap() - 1.061_264_121_044_212).abs() < 1e-12);
        assert!(ctilde_prime(1.0).is_err());
        assert!((ctilde_second(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(ctilde_second(1.0 - 1e-15).unwrap().is_finite());
    }

    #[test]
    fn lambert_reference_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w0(-1.0 / E).unwrap() + 1.0).abs() < 1e-7);
        assert!((lambert_w0(0.522_112).unwrap() - 0.363_127_663_030_084).abs() < 1e-14);
        assert!(lambert_w0(-0.5).is_err());
        for &x in &[-0.367, -0.3, -1e-3, 1e-10, 0.5, 2.9, 3.1, 100.0, 1e10, 1e300] {
            let w = lambert_w0(x).unwrap();
            assert!(((w * w.exp() - x) / x).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn slope_inverse_reference() {
        assert_eq!(ctilde_prime_inv(0.0).unwrap(), 0.0);
        assert!((ctilde_prime_inv(0.5).unwrap() - 0.290_285_012_839_664).abs() < 1e-14);
        let cp = ctilde_prime(0.5).unwrap();
        assert!((ctilde_prime_inv(cp).unwrap() - 0.5).abs() < 1e-14);
        assert!(ctilde_prime_inv(-1.0).is_err());
        assert!(ctilde_prime_inv(1e200).unwrap() <= 1.0);
    }
}
