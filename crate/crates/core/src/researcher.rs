//! The researcher's problem: pick a distance `d` and output probability `ρ`
//! to maximise `u_R = ρ·V(d;X) − η·c̃(ρ)·σ²(d;X)`.
//!
//! For fixed `d` the optimal `ρ` is `c̃′⁻¹(V/(ησ²))`; the resulting profile
//! payoff is maximised over `d` directly. When expanding, the two first-order
//! conditions collapse to a single monotone equation in `ι = erf⁻¹(ρ)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::knowledge::{KnowledgeSet, Length};
use crate::solve::{bisect, golden_max, linspace, local_max_indices};
use crate::specfun::{ctilde, ctilde_prime_inv, erf, iota_for_slope, kernel_from_iota, INFINITE_COST};
use crate::valuation::{benefit_d_raw, benefit_raw, check_q, d0, sigma2_raw};

const SQRT_PI: f64 = 1.772_453_850_905_516;
const IOTA_MAX: f64 = 6.0;
const DEEPEN_GRID: usize = 193;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomyParams {
    pub q: f64,
    pub eta: f64,
}

impl EconomyParams {
    pub fn new(q: f64, eta: f64) -> Result<Self> {
        check_q(q)?;
        if !(eta >= 0.0 && eta.is_finite()) {
            return invalid(format!("cost weight eta must be finite and nonnegative, got {eta}"));
        }
        Ok(Self { q, eta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    #[default]
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Move {
    Expand {
        side: Side,
    },
    /// Deepen the bounded area with this index (`None` when evaluated standalone).
    Deepen {
        area: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResearchChoice {
    pub action: Move,
    /// Length of the area researched.
    pub len: Length,
    pub d: f64,
    pub rho: f64,
    pub payoff: f64,
}

impl ResearchChoice {
    pub fn is_expand(&self) -> bool {
        matches!(self.action, Move::Expand { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResearcherCutoffs {
    pub x_hat: f64,
    pub x_dot: f64,
    pub x_check: f64,
    pub x_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interaction {
    Independent,
    Complements,
    Substitutes,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return domain(format!("probability must lie in [0,1], got {rho}"));
    }
    Ok(())
}

fn canonical(d: f64, x: Length) -> Result<f64> {
    // Reuse valuation's validation; sigma2 rejects d > X/2.
    crate::valuation::sigma2(d, x)
}

/// `c̃(ρ)·σ²(d;X)`, the unweighted cost.
pub fn cost(rho: f64, d: f64, x: Length) -> Result<f64> {
    check_rho(rho)?;
    let s2 = canonical(d, x)?;
    if s2 == 0.0 || rho == 0.0 {
        return Ok(0.0);
    }
    Ok(ctilde(rho)? * s2)
}

/// `ρ·V(d;X) − η·c̃(ρ)·σ²(d;X)`, using `η·c̃(1) = 0` when `η = 0`.
pub fn payoff(rho: f64, d: f64, x: Length, p: &EconomyParams) -> Result<f64> {
    check_rho(rho)?;
    canonical(d, x)?;
    let gross = rho * benefit_raw(d, x.value(), p.q);
    if p.eta == 0.0 {
        return Ok(gross);
    }
    let c = cost(rho, d, x)?;
    if c == INFINITE_COST {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(gross - p.eta * c)
}

/// Optimal `ρ` for a fixed `d`; `1` when research is costless, `0` at `d = 0`.
pub fn opt_rho_given_d(d: f64, x: Length, p: &EconomyParams) -> Result<f64> {
    let s2 = canonical(d, x)?;
    if d == 0.0 || s2 == 0.0 {
        return Ok(0.0);
    }
    if p.eta == 0.0 {
        return Ok(1.0);
    }
    ctilde_prime_inv(benefit_raw(d, x.value(), p.q) / (p.eta * s2))
}

/// Payoff and `ρ` at the best output for a given `d` (`η > 0`).
#[inline]
pub(crate) fn profile(d: f64, x: f64, q: f64, eta: f64) -> (f64, f64) {
    let s2 = sigma2_raw(d, x);
    if s2 <= 0.0 {
        return (0.0, 0.0);
    }
    let v = benefit_raw(d, x, q);
    let iota = iota_for_slope(v / (eta * s2));
    let rho = erf(iota);
    (rho * v - eta * iota * iota * s2, rho)
}

/// Envelope derivative of the profile payoff in `d`.
#[inline]
fn profile_slope(d: f64, x: f64, q: f64, eta: f64) -> f64 {
    let s2 = sigma2_raw(d, x);
    let v = benefit_raw(d, x, q);
    let iota = iota_for_slope(v / (eta * s2));
    let s2_d = if x.is_infinite() { 1.0 } else { (x - 2.0 * d) / x };
    erf(iota) * benefit_d_raw(d, x, q) - eta * iota * iota * s2_d
}

/// `c̃/(2ρc̃′ − c̃)` written to stay finite as `ι → 0` (limit 1/3).
#[inline]
fn expand_ratio(iota: f64) -> f64 {
    if iota < 1e-8 {
        return 1.0 / 3.0;
    }
    let erf_over = erf(iota) / iota;
    1.0 / (2.0 * SQRT_PI * (iota * iota).exp() * erf_over - 1.0)
}

/// Joint solution of both first-order conditions when expanding.
pub fn opt_expand(p: &EconomyParams) -> Result<ResearchChoice> {
    opt_expand_side(p, Side::Right)
}

pub fn opt_expand_side(p: &EconomyParams, side: Side) -> Result<ResearchChoice> {
    let q = p.q;
    let action = Move::Expand { side };
    if p.eta == 0.0 {
        return Ok(ResearchChoice { action, len: Length::Infinite, d: 3.0 * q, rho: 1.0, payoff: 1.5 * q });
    }
    let eta = p.eta;
    // d/6q = (1 − ratio)/2, so the residual does not involve q.
    let residual = |iota: f64| {
        let (_, cp, _) = kernel_from_iota(iota);
        eta * cp - (1.0 - 0.5 * (1.0 - expand_ratio(iota)))
    };
    let iota = if residual(IOTA_MAX) <= 0.0 { IOTA_MAX } else { bisect(residual, 0.0, IOTA_MAX, 1e-15, 300)? };
    let d = 3.0 * q * (1.0 - expand_ratio(iota));
    let rho = erf(iota);
    let payoff = rho * benefit_raw(d, f64::INFINITY, q) - eta * iota * iota * d;
    Ok(ResearchChoice { action, len: Length::Infinite, d, rho, payoff })
}

/// Best deepening choice in a bounded area of length `x`.
///
/// Candidates are the midpoint `d = X/2` and every interior local maximum
/// of the profile payoff; exact ties go to the midpoint.
pub fn opt_deepen(x: f64, p: &EconomyParams) -> Result<ResearchChoice> {
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("deepening needs a finite positive area length, got {x}"));
    }
    let q = p.q;
    let action = Move::Deepen { area: None };
    let len = Length::Finite(x);
    if p.eta == 0.0 {
        let d = d0(len, q)?;
        return Ok(ResearchChoice { action, len, d, rho: 1.0, payoff: benefit_raw(d, x, q) });
    }
    let eta = p.eta;
    let half = 0.5 * x;
    let (mut best_u, mut best_rho) = profile(half, x, q, eta);
    let mut best_d = half;

    let grid = linspace(0.0, half, DEEPEN_GRID);
    let vals: Vec<f64> = grid.iter().map(|&d| profile(d, x, q, eta).0).collect();
    for i in local_max_indices(&vals) {
        let (lo, hi) = (grid[i - 1], grid[i + 1]);
        let (mut d, _) = golden_max(|d| profile(d, x, q, eta).0, lo, hi, 1e-12 * x);
        let slope = |d: f64| profile_slope(d, x, q, eta);
        if slope(lo) > 0.0 && slope(hi) < 0.0 {
            d = bisect(slope, lo, hi, 1e-14 * x, 200)?;
        }
        let (u, rho) = profile(d, x, q, eta);
        if u > best_u {
            best_u = u;
            best_rho = rho;
            best_d = d;
        }
    }
    Ok(ResearchChoice { action, len, d: best_d, rho: best_rho, payoff: best_u })
}

/// Best move across expanding and deepening every bounded area.
///
/// Ties prefer expanding, then the lowest area index.
pub fn opt_choice(f: &KnowledgeSet, p: &EconomyParams) -> Result<ResearchChoice> {
    opt_choice_side(f, p, Side::Right)
}

pub fn opt_choice_side(f: &KnowledgeSet, p: &EconomyParams, side: Side) -> Result<ResearchChoice> {
    let mut best = opt_expand_side(p, side)?;
    for (i, x) in f.bounded_lengths().into_iter().enumerate() {
        let mut c = opt_deepen(x, p)?;
        if c.payoff > best.payoff {
            c.action = Move::Deepen { area: Some(i) };
            best = c;
        }
    }
    Ok(best)
}

/// `Ẋ = 8cos(π/18)/√3 · q`, where the midpoint branch's `V/σ²` peaks.
pub fn x_dot(q: f64) -> f64 {
    8.0 * (std::f64::consts::PI / 18.0).cos() / 3f64.sqrt() * q
}

pub fn researcher_cutoffs(p: &EconomyParams) -> Result<ResearcherCutoffs> {
    if p.eta <= 0.0 {
        return invalid("researcher cutoffs need eta > 0");
    }
    let q = p.q;
    let is_interior = |x: f64| -> Result<bool> { Ok(opt_deepen(x, p)?.d < 0.5 * x) };

    // First switch from the midpoint to an interior solution.
    let scan = linspace(4.0 * q, 8.0 * q, 401);
    let mut x_tilde = None;
    for w in scan.windows(2) {
        if is_interior(w[1])? {
            let mut lo = w[0];
            let mut hi = w[1];
            while hi - lo > 1e-9 * q {
                let mid = 0.5 * (lo + hi);
                if is_interior(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            x_tilde = Some(hi);
            break;
        }
    }
    let x_tilde = x_tilde.ok_or_else(|| Error::NoConvergence("no interior deepening below 8q".into()))?;

    let u = |x: f64| opt_deepen(x, p).map(|c| c.payoff).unwrap_or(f64::NEG_INFINITY);
    let (x_check, _) = golden_max(u, 4.0 * q, x_tilde, 1e-10 * q);
    let u_exp = opt_expand(p)?.payoff;
    let x_hat = bisect(|x| u(x) - u_exp, 2.0 * q, x_check, 1e-9 * q, 200)?;
    Ok(ResearcherCutoffs { x_hat, x_dot: x_dot(q), x_check, x_tilde })
}

/// Lower root `d̂` of the sign change of `∂(V/σ²)/∂d` for `X ∈ ((4+√6)q, 8q]`.
pub fn d_hat(x: f64, q: f64) -> f64 {
    let l = x / q;
    let disc = ((18.0 - 8.0 * l + l * l) / 2.0).sqrt();
    q * (2.0 / (l - 6.0)) * ((l * l - 6.0 * l + 6.0) - (l - 2.0) * disc)
}

/// Whether `d` and `ρ` move together along the researcher's optimum.
pub fn substitutes_or_complements(d: f64, x: Length, p: &EconomyParams) -> Result<Interaction> {
    canonical(d, x)?;
    let q = p.q;
    Ok(match x {
        Length::Infinite => Interaction::Substitutes,
        Length::Finite(xv) if xv <= 4.0 * q => Interaction::Independent,
        Length::Finite(xv) if xv < (4.0 + 6f64.sqrt()) * q => Interaction::Complements,
        Length::Finite(xv) if xv <= 8.0 * q => {
            if d < d_hat(xv, q) {
                Interaction::Substitutes
            } else {
                Interaction::Complements
            }
        }
        Length::Finite(_) => Interaction::Substitutes,
    })
}
