//! Budget-constrained research funding.
//!
//! A funder with budget `K` splits it between an ex-post reward `ζ`, paid with
//! probability `f(σ²)` on success, and an ex-ante cost reduction `h` bought at
//! relative price `κ`: `ζ + κh = K`, and the researcher faces `η = η⁰ − h`.
//! Only first discoveries from a single known point are funded, so the
//! researcher always expands and `σ² = d`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::knowledge::KnowledgeSet;
use crate::moonshot::{chain_flow_with_prob, MoonshotAssessment, NpvMode};
use crate::researcher::EconomyParams;
use crate::solve::{bisect, golden_max, linspace, local_max_indices};
use crate::specfun::{ctilde, ctilde_prime, ctilde_second, erf, iota_for_slope, kernel_from_iota};
use crate::valuation::{benefit_raw, check_q, value_of_knowledge};

/// Grid used to locate the researcher's best distance before refinement.
const D_GRID: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RewardTech {
    /// `f = σ²/s` below `s`, `1` above.
    #[default]
    PiecewiseLinear,
    /// `f = 1 − e^{−sσ²}`.
    Exponential,
}

/// Probability that a discovery of difficulty `sigma2` earns the reward.
pub fn reward_prob(sigma2: f64, s: f64, tech: RewardTech) -> f64 {
    let s2 = sigma2.max(0.0);
    match tech {
        RewardTech::PiecewiseLinear => (s2 / s).min(1.0),
        RewardTech::Exponential => -libm::expm1(-s * s2),
    }
}

fn reward_prob_d(sigma2: f64, s: f64, tech: RewardTech) -> f64 {
    match tech {
        RewardTech::PiecewiseLinear => {
            if sigma2 < s {
                1.0 / s
            } else {
                0.0
            }
        }
        RewardTech::Exponential => s * (-s * sigma2).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingParams {
    #[serde(rename = "K")]
    pub k: f64,
    pub kappa: f64,
    pub s: f64,
    pub eta0: f64,
    #[serde(default)]
    pub reward_tech: RewardTech,
}

impl FundingParams {
    pub fn new(k: f64, kappa: f64, s: f64, eta0: f64, reward_tech: RewardTech) -> Result<Self> {
        let p = Self { k, kappa, s, eta0, reward_tech };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k, self.kappa, self.s, self.eta0].iter().all(|v| v.is_finite());
        if !finite || self.k < 0.0 || self.kappa <= 0.0 || self.s <= 0.0 || self.eta0 <= 0.0 {
            return invalid(format!("bad funding parameters {self:?}"));
        }
        if self.kappa <= self.k / self.eta0 {
            return invalid(format!(
                "cost reductions must not be able to remove all research cost (kappa = {} <= K/eta0 = {})",
                self.kappa,
                self.k / self.eta0
            ));
        }
        Ok(())
    }

    /// Scheme on the budget line paying reward `zeta`.
    pub fn scheme(&self, zeta: f64) -> Result<FundingScheme> {
        if !(0.0..=self.k).contains(&zeta) {
            return invalid(format!("reward {zeta} outside [0, K = {}]", self.k));
        }
        let h = (self.k - zeta) / self.kappa;
        Ok(FundingScheme { zeta, h, eta: self.eta0 - h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingScheme {
    pub zeta: f64,
    pub h: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub rho: f64,
    pub d: f64,
    /// Researcher's payoff including the expected reward.
    pub payoff: f64,
    pub scheme: FundingScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    CostOnly,
    RewardsOnly,
    Mix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingOptimum {
    pub scheme: FundingScheme,
    pub point: FrontierPoint,
    /// Funder's objective at the optimum.
    pub value: f64,
    pub kind: SchemeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardOptimum {
    pub optimum: FundingOptimum,
    /// `npv_moonshot` is the forward optimum's NPV, `npv_myopic` that of the
    /// myopic scheme under the same forward-looking objective.
    pub assessment: MoonshotAssessment,
    pub is_moonshot: bool,
}

/// Grid sizes and tolerances of the funding optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingSettings {
    pub zeta_points: usize,
    pub forward_zeta_points: usize,
    pub tol: f64,
}

impl Default for FundingSettings {
    fn default() -> Self {
        Self { zeta_points: 2001, forward_zeta_points: 401, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleBounds {
    pub rho_low: f64,
    pub rho_high: f64,
    /// True when the rewards-only scheme attains `rho_low`.
    pub low_at_rewards_only: bool,
    /// Range of `ρ` over budget-line schemes with interior optima; empty
    /// (`+∞, −∞`) when every scheme hits the reward kink.
    pub line_min: f64,
    pub line_max: f64,
}

struct Problem {
    q: f64,
    zeta: f64,
    eta: f64,
    s: f64,
    tech: RewardTech,
}

impl Problem {
    fn gross(&self, d: f64) -> f64 {
        benefit_raw(d, f64::INFINITY, self.q) + self.zeta * reward_prob(d, self.s, self.tech)
    }

    /// Payoff and `ρ` at the best output for distance `d`.
    fn profile(&self, d: f64) -> (f64, f64) {
        let b = self.gross(d);
        if d <= 0.0 || b <= 0.0 {
            return (0.0, 0.0);
        }
        let iota = iota_for_slope(b / (self.eta * d));
        (erf(iota) * b - self.eta * iota * iota * d, erf(iota))
    }

    fn slope(&self, d: f64) -> f64 {
        let b = self.gross(d);
        let iota = iota_for_slope(b / (self.eta * d));
        let b_d = 1.0 - d / (3.0 * self.q) + self.zeta * reward_prob_d(d, self.s, self.tech);
        erf(iota) * b_d - self.eta * iota * iota
    }

    /// Largest distance with a positive gross benefit (`f ≤ 1` bounds it).
    fn horizon(&self) -> f64 {
        let q = self.q;
        let edge = 3.0 * q + (9.0 * q * q + 6.0 * q * self.zeta).sqrt();
        match self.tech {
            RewardTech::PiecewiseLinear => edge.min(self.s),
            RewardTech::Exponential => edge,
        }
    }

    fn solve(&self) -> (f64, f64, f64) {
        let hi = self.horizon();
        let grid = linspace(0.0, hi, D_GRID);
        let vals: Vec<f64> = grid.iter().map(|&d| self.profile(d).0).collect();
        // The endpoint is the reward kink when the horizon is s.
        let mut best_d = hi;
        let mut best_u = vals[D_GRID - 1];
        for i in local_max_indices(&vals) {
            let (a, c) = (grid[i - 1], grid[i + 1]);
            let (dg, ug) = golden_max(|d| self.profile(d).0, a, c, 1e-12 * hi);
            // The stationary point is sharper than golden-section on a flat peak.
            let d = match bisect(|d| self.slope(d), a.max(1e-300), c, 1e-15 * hi, 200) {
                Ok(r) if self.profile(r).0 >= ug - 1e-13 * ug.abs().max(1.0) => r,
                _ => dg,
            };
            let u = self.profile(d).0;
            if u > best_u {
                best_u = u;
                best_d = d;
            }
        }
        let (u, rho) = self.profile(best_d);
        (best_d, rho, u)
    }
}

/// The researcher's optimal first discovery under a funding scheme.
///
/// Candidates are interior stationary points of the profile payoff and the
/// upper end of the search range, which is the kink `d = s` for the
/// piecewise-linear technology.
pub fn researcher_with_rewards(scheme: &FundingScheme, fp: &FundingParams, q: f64) -> Result<FrontierPoint> {
    check_q(q)?;
    if !(scheme.eta > 0.0) || !(scheme.zeta >= 0.0) {
        return invalid(format!("scheme needs eta > 0 and zeta >= 0, got {scheme:?}"));
    }
    let pb = Problem { q, zeta: scheme.zeta, eta: scheme.eta, s: fp.s, tech: fp.reward_tech };
    let (d, rho, payoff) = pb.solve();
    Ok(FrontierPoint { rho, d, payoff, scheme: *scheme })
}

/// `(η, ζ)` that make `(d, ρ)` an interior optimum under the linear technology.
/// A negative `ζ` means the pair cannot be implemented with rewards.
pub fn scheme_from_choice(d: f64, rho: f64, s: f64, q: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    if !(rho > 0.0 && rho < 1.0) || !(d > 0.0) {
        return invalid(format!("need rho in (0,1) and d > 0, got rho = {rho}, d = {d}"));
    }
    let c = ctilde(rho)?;
    let a = rho * ctilde_prime(rho)? - c;
    let eta = d / (6.0 * q) * rho / a;
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("implied eta is not positive at rho = {rho}")));
    }
    let zeta = s * (d / (3.0 * q) - 1.0 + d / (6.0 * q) * c / a);
    Ok((eta, zeta))
}

/// Closed-form frontier without the feasibility check; meaningful only where
/// the researcher's optimum is interior.
pub fn frontier_formula(rho: f64, fp: &FundingParams, q: f64) -> f64 {
    let iota = crate::specfun::erf_inv(rho).unwrap_or(f64::INFINITY);
    let (c, cp, _) = kernel_from_iota(iota);
    let s = fp.s;
    6.0 * q * (fp.k + s - fp.kappa * fp.eta0) * (rho * cp - c) / (2.0 * s * rho * cp - s * c - fp.kappa * rho)
}

/// Distance on the research-possibility frontier at output `rho`.
pub fn frontier_d_of_rho(rho: f64, fp: &FundingParams, q: f64) -> Result<f64> {
    check_q(q)?;
    if fp.reward_tech != RewardTech::PiecewiseLinear {
        return invalid("the closed-form frontier exists only for the piecewise-linear technology");
    }
    let b = feasible_bounds(fp, q)?;
    let slack = 1e-9 * b.line_max.abs().max(1.0);
    if !(rho >= b.line_min - slack && rho <= b.line_max + slack) {
        return invalid(format!("rho = {rho} outside feasible [{}, {}]", b.line_min, b.line_max));
    }
    Ok(frontier_formula(rho, fp, q))
}

/// Output at the two polar schemes, sorted, plus the range of `ρ` over the
/// budget-line schemes whose optimum is interior (where the closed-form
/// frontier applies).
pub fn feasible_bounds(fp: &FundingParams, q: f64) -> Result<FeasibleBounds> {
    fp.validate()?;
    let at = |zeta: f64| researcher_with_rewards(&fp.scheme(zeta.clamp(0.0, fp.k))?, fp, q);
    let interior = |pt: &FrontierPoint| fp.reward_tech == RewardTech::Exponential || pt.d < fp.s - 1e-9;
    let cost_only = at(0.0)?;
    let rewards_only = at(fp.k)?;
    let (mut line_min, mut line_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut note = |pt: &FrontierPoint| {
        if interior(pt) {
            line_min = line_min.min(pt.rho);
            line_max = line_max.max(pt.rho);
        }
    };
    note(&cost_only);
    note(&rewards_only);
    if fp.k > 0.0 {
        let grid = linspace(0.0, fp.k, 201);
        let pts = grid.iter().map(|&z| at(z)).collect::<Result<Vec<_>>>()?;
        for i in 0..grid.len() {
            note(&pts[i]);
            if i + 1 < grid.len() && interior(&pts[i]) != interior(&pts[i + 1]) {
                // regime switch: approach it from the interior side
                let keep_lo = interior(&pts[i]);
                let (mut lo, mut hi) = (grid[i], grid[i + 1]);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if interior(&at(mid)?) == keep_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                note(&at(if keep_lo { lo } else { hi })?);
            }
            if i > 0 && i + 1 < grid.len() && interior(&pts[i]) {
                let (a, c) = (grid[i - 1], grid[i + 1]);
                let r = |z: f64| at(z).ok().filter(|p| interior(p)).map(|p| p.rho);
                if pts[i].rho >= pts[i - 1].rho && pts[i].rho >= pts[i + 1].rho {
                    let (z, _) = golden_max(|z| r(z).unwrap_or(f64::NEG_INFINITY), a, c, 1e-10 * fp.k);
                    note(&at(z)?);
                }
                if pts[i].rho <= pts[i - 1].rho && pts[i].rho <= pts[i + 1].rho {
                    let (z, _) = golden_max(|z| -r(z).unwrap_or(f64::INFINITY), a, c, 1e-10 * fp.k);
                    note(&at(z)?);
                }
            }
        }
    }
    let (rho_low, rho_high, low_at_rewards_only) = if rewards_only.rho <= cost_only.rho {
        (rewards_only.rho, cost_only.rho, true)
    } else {
        (cost_only.rho, rewards_only.rho, false)
    };
    Ok(FeasibleBounds { rho_low, rho_high, low_at_rewards_only, line_min, line_max })
}

/// Rate at which rewards replace cost reductions keeping `ρ` fixed.
pub fn mrs_rho(rho: f64, s: f64) -> Result<f64> {
    Ok(s * (2.0 * ctilde_prime(rho)? - ctilde(rho)? / rho))
}

/// Same rate keeping `d` fixed, per unit of `s`.
pub fn mrs_d(rho: f64) -> Result<f64> {
    let (c, cp, cpp) = (ctilde(rho)?, ctilde_prime(rho)?, ctilde_second(rho)?);
    Ok((cp * c - rho * cp * cp + rho * c * cpp) / (c - rho * cp + rho * rho * cpp))
}

/// `+1` where the frontier slopes up (output and novelty complements), `−1`
/// where it slopes down.
pub fn complementarity_sign(rho: f64, fp: &FundingParams, _q: f64) -> Result<i8> {
    let v = (fp.k + fp.s - fp.kappa * fp.eta0) * (fp.s * mrs_d(rho)? - fp.kappa);
    Ok(if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    })
}

fn classify(zeta: f64, k: f64) -> SchemeKind {
    let tol = 1e-6 * k.max(1.0);
    if zeta <= tol {
        SchemeKind::CostOnly
    } else if zeta >= k - tol {
        SchemeKind::RewardsOnly
    } else {
        SchemeKind::Mix
    }
}

/// Grid over the budget line, then golden-section around the best cell.
fn optimize_on_line<F>(fp: &FundingParams, q: f64, n: usize, tol: f64, objective: F) -> Result<FundingOptimum>
where
    F: Fn(&FrontierPoint) -> Result<f64>,
{
    fp.validate()?;
    let eval = |zeta: f64| -> Result<(FrontierPoint, f64)> {
        let pt = researcher_with_rewards(&fp.scheme(zeta.clamp(0.0, fp.k))?, fp, q)?;
        let v = objective(&pt)?;
        Ok((pt, v))
    };
    if fp.k == 0.0 {
        let (pt, v) = eval(0.0)?;
        return Ok(FundingOptimum { scheme: pt.scheme, point: pt, value: v, kind: SchemeKind::CostOnly });
    }
    let grid = linspace(0.0, fp.k, n.max(2));
    let mut vals = Vec::with_capacity(grid.len());
    for &z in &grid {
        vals.push(eval(z)?.1);
    }
    let mut i = 0;
    for (j, &v) in vals.iter().enumerate() {
        if v > vals[i] {
            i = j;
        }
    }
    let mut zeta = grid[i];
    let a = grid[i.saturating_sub(1)];
    let c = grid[(i + 1).min(grid.len() - 1)];
    let (zr, vr) = golden_max(|z| eval(z).map(|r| r.1).unwrap_or(f64::NEG_INFINITY), a, c, tol * fp.k);
    if vr > vals[i] {
        zeta = zr;
    }
    let (pt, v) = eval(zeta)?;
    Ok(FundingOptimum { scheme: pt.scheme, point: pt, value: v, kind: classify(zeta, fp.k) })
}

/// Funder maximising the expected value of the first discovery, `ρ·V(d;∞)`.
pub fn optimize_myopic(fp: &FundingParams, q: f64) -> Result<FundingOptimum> {
    optimize_myopic_with(fp, q, &FundingSettings::default())
}

pub fn optimize_myopic_with(fp: &FundingParams, q: f64, settings: &FundingSettings) -> Result<FundingOptimum> {
    optimize_on_line(fp, q, settings.zeta_points, settings.tol, |pt| Ok(pt.rho * benefit_raw(pt.d, f64::INFINITY, q)))
}

/// Funder maximising the discounted value of all future knowledge.
///
/// Funding shapes only the first discovery; afterwards researchers face the
/// baseline cost `η⁰` and follow their optimal policy.
pub fn optimize_forward(fp: &FundingParams, q: f64, delta: f64) -> Result<ForwardOptimum> {
    optimize_forward_with(fp, q, delta, &FundingSettings::default())
}

pub fn optimize_forward_with(
    fp: &FundingParams,
    q: f64,
    delta: f64,
    settings: &FundingSettings,
) -> Result<ForwardOptimum> {
    if !(0.0..1.0).contains(&delta) {
        return invalid(format!("discount factor must be in [0,1), got {delta}"));
    }
    let econ = EconomyParams::new(q, fp.eta0)?;
    let f1 = KnowledgeSet::single(0.0, 0.0)?;
    let v0 = value_of_knowledge(&f1, q)?;
    let npv = |pt: &FrontierPoint| -> Result<f64> {
        Ok((v0 + chain_flow_with_prob(&f1, pt.d, pt.rho, &econ, delta)?) / (1.0 - delta))
    };
    let n = if delta == 0.0 { settings.zeta_points } else { settings.forward_zeta_points };
    let optimum = optimize_on_line(fp, q, n, settings.tol, npv)?;
    let myopic = optimize_myopic_with(fp, q, settings)?;
    let npv_myopic = npv(&myopic.point)?;
    let is_moonshot = optimum.point.d > 3.0 * q;
    Ok(ForwardOptimum {
        optimum,
        assessment: MoonshotAssessment {
            x_hat: optimum.point.d,
            delta,
            npv_moonshot: optimum.value,
            npv_myopic,
            benefit: optimum.value - npv_myopic,
            mode: NpvMode::ConsistentFoc,
        },
        is_moonshot,
    })
}
