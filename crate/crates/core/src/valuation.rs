//! Value of knowledge and the benefit of a single discovery.
//!
//! For an area of length `X` the decision maker's value is
//! `v(X) = X − X²/6q`, plus `((X−4q)/6q)·√X·√(X−4q)` once `X > 4q`.
//! A discovery at distance `d` splits `X` into `d` and `X − d`, so its
//! benefit is `V(d;X) = v(d) + v(X−d) − v(X)`; outside the frontier
//! `V(d;∞) = v(d)`. Finite-area APIs take the canonical half `d ≤ X/2`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::knowledge::{KnowledgeSet, Length};
use crate::solve::{bisect, golden_max, linspace};

/// The static cutoffs, all expressed in absolute units (already scaled by `q`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenefitCutoffs {
    pub x_hat0: f64,
    pub x_check0: f64,
    pub x_tilde0: f64,
    pub d0_inf: f64,
    pub v_inf_max: f64,
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return invalid(format!("tolerance q must be positive and finite, got {q}"));
    }
    Ok(())
}

fn check_canonical(d: f64, x: Length) -> Result<()> {
    if !(d >= 0.0) || d.is_infinite() {
        return domain(format!("distance must be finite and nonnegative, got {d}"));
    }
    if let Length::Finite(xv) = x {
        if !(xv > 0.0 && xv.is_finite()) {
            return domain(format!("area length must be positive, got {xv}"));
        }
        if d > 0.5 * xv * (1.0 + 1e-14) {
            return domain(format!("distance {d} exceeds half the area length {xv}"));
        }
    }
    Ok(())
}

/// `σ²(d;X) = d(X−d)/X`, and `d` for the unbounded area.
pub fn sigma2(d: f64, x: Length) -> Result<f64> {
    check_canonical(d, x)?;
    Ok(sigma2_raw(d, x.value()))
}

#[inline]
pub(crate) fn sigma2_raw(d: f64, x: f64) -> f64 {
    if x.is_infinite() {
        d
    } else {
        d * (x - d) / x
    }
}

#[inline]
pub(crate) fn v_raw(x: f64, q: f64) -> f64 {
    let base = x - x * x / (6.0 * q);
    if x > 4.0 * q {
        base + (x - 4.0 * q) / (6.0 * q) * x.sqrt() * (x - 4.0 * q).sqrt()
    } else {
        base
    }
}

/// `v′(y)`; the correction contributes `(y−q)√((y−4q)/y)/3q` above `4q`.
#[inline]
pub(crate) fn v_prime_raw(y: f64, q: f64) -> f64 {
    let base = 1.0 - y / (3.0 * q);
    if y > 4.0 * q {
        base + (y - q) * ((y - 4.0 * q) / y).sqrt() / (3.0 * q)
    } else {
        base
    }
}

/// Value of a bounded area of length `x`.
pub fn area_value(x: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    if !(x >= 0.0) || x.is_infinite() {
        return domain(format!("area length must be finite and nonnegative, got {x}"));
    }
    Ok(v_raw(x, q))
}

/// `q` from the two unbounded areas plus `v(X_i)` over bounded areas.
pub fn value_of_knowledge(f: &KnowledgeSet, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(q + f.bounded_lengths().iter().map(|&x| v_raw(x, q)).sum::<f64>())
}

#[inline]
pub(crate) fn benefit_raw(d: f64, x: f64, q: f64) -> f64 {
    if x.is_infinite() {
        v_raw(d, q)
    } else {
        v_raw(d, q) + v_raw(x - d, q) - v_raw(x, q)
    }
}

/// `∂V/∂d` at `(d; X)`.
#[inline]
pub(crate) fn benefit_d_raw(d: f64, x: f64, q: f64) -> f64 {
    if x.is_infinite() {
        v_prime_raw(d, q)
    } else {
        v_prime_raw(d, q) - v_prime_raw(x - d, q)
    }
}

/// Benefit `V(d;X)` of discovering the answer at distance `d` in an area.
pub fn benefit(d: f64, x: Length, q: f64) -> Result<f64> {
    check_q(q)?;
    check_canonical(d, x)?;
    Ok(benefit_raw(d, x.value(), q))
}

pub fn benefit_d(d: f64, x: Length, q: f64) -> Result<f64> {
    check_q(q)?;
    check_canonical(d, x)?;
    Ok(benefit_d_raw(d, x.value(), q))
}

/// The local maximiser of `V(·;X)` strictly inside `(3q, min(X/2, X−4q))`,
/// if `V_d` changes sign there.
pub(crate) fn interior_benefit_peak(x: f64, q: f64) -> Option<f64> {
    let hi = (0.5 * x).min(x - 4.0 * q);
    let lo = 3.0 * q;
    if hi <= lo {
        return None;
    }
    let grid = linspace(lo, hi, 129);
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        if benefit_d_raw(a, x, q) > 0.0 && benefit_d_raw(b, x, q) <= 0.0 {
            return bisect(|d| benefit_d_raw(d, x, q), a, b, 1e-10 * q, 200).ok();
        }
    }
    None
}

/// Benefit-maximising distance.
pub fn d0(x: Length, q: f64) -> Result<f64> {
    check_q(q)?;
    let xv = match x {
        Length::Infinite => return Ok(3.0 * q),
        Length::Finite(v) if v > 0.0 && v.is_finite() => v,
        Length::Finite(v) => return domain(format!("area length must be positive, got {v}")),
    };
    let boundary = 0.5 * xv;
    Ok(match interior_benefit_peak(xv, q) {
        Some(d) if benefit_raw(d, xv, q) > benefit_raw(boundary, xv, q) => d,
        _ => boundary,
    })
}

/// Closed form of the area length maximising `V(X/2;X)`, in units of `q`.
pub fn x_check0_unit() -> f64 {
    let r = 3.0 * 2f64.sqrt();
    (2.0 / 3.0) * (4.0 + (19.0 - r).cbrt() + (19.0 + r).cbrt())
}

pub fn benefit_cutoffs(q: f64) -> Result<BenefitCutoffs> {
    check_q(q)?;
    let hat = bisect(|l| l * l / 12.0 - l.sqrt() / 6.0 * (l - 4.0).powf(1.5) - 1.5, 4.0, 6.0, 1e-15, 200)?;
    let check = x_check0_unit();
    // Unit-q search; the interior peak overtakes the midpoint at x_tilde0.
    let gain = |x: f64| match interior_benefit_peak(x, 1.0) {
        Some(d) => benefit_raw(d, x, 1.0) - benefit_raw(0.5 * x, x, 1.0),
        None => -1.0,
    };
    let tilde = bisect(gain, check, 8.0, 1e-12, 200)?;
    Ok(BenefitCutoffs {
        x_hat0: hat * q,
        x_check0: check * q,
        x_tilde0: tilde * q,
        d0_inf: 3.0 * q,
        v_inf_max: 1.5 * q,
    })
}

/// Direct numerical maximiser of `X ↦ V(X/2;X)` on `[4q, 8q]`.
///
/// Golden-section localises the peak; the stationarity condition
/// `v′(X/2) = v′(X)` then pins it to machine precision.
pub fn argmax_midpoint_benefit(q: f64) -> Result<f64> {
    check_q(q)?;
    let (x, _) = golden_max(|x| benefit_raw(0.5 * x, x, q), 4.0 * q, 8.0 * q, 1e-6 * q);
    let slope = |x: f64| v_prime_raw(0.5 * x, q) - v_prime_raw(x, q);
    bisect(slope, x - 1e-3 * q, x + 1e-3 * q, 1e-15 * q, 200)
}
