//! Discounted value of the first discovery's distance.
//!
//! A decision maker with discount factor `δ` values the stream
//! `Σ_t δ^{t−1} E[v(F_{t+1})]`. The first discovery is placed at `x̂`
//! (guaranteed); every later period follows the researchers' optimal policy,
//! succeeding with its `ρ`, and a failure freezes knowledge forever. The
//! chain is evaluated exactly: it is deterministic conditional on the run of
//! successes, and once researchers only expand it closes with a geometric tail.
//!
//! Internally everything is computed in "flow" form
//! `Σ_s δ^{s−1} P_s·ΔV_s`, where `P_s` is the probability that period `s` is
//! reached and succeeds; the stock NPV is `(v(F₁) + flow)/(1 − δ)`. The sign of a
//! moonshot's benefit is the same in both forms.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::knowledge::{KnowledgeSet, Length};
use crate::researcher::{opt_deepen, opt_expand, opt_rho_given_d, EconomyParams, ResearchChoice};
use crate::solve::{bisect, golden_max, linspace};
use crate::specfun::{erf, iota_for_slope, kernel_from_iota, lambert_w0};
use crate::valuation::{benefit_raw, value_of_knowledge};

/// Cap on simulated periods before the expansion regime is reached.
const MAX_TRANSIENT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NpvMode {
    /// Closed-form recipe with the printed expander distance and `ρ(6q)`;
    /// defined only for the `6q`-versus-`3q` comparison from a single point.
    PaperReplication,
    /// The researcher module's optimal policy in every period.
    #[default]
    ConsistentFoc,
}

/// Which reading of the `ρ(6q)` closed form to use in paper-replication mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Rho6Form {
    /// `erf(√(W(8(3−2/√3)/(9η²π))/2))` as printed.
    #[default]
    Printed,
    /// `erf(√(W(8(3−2/√3)²/(9η²π))/2))`, the direct substitution.
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoonshotAssessment {
    pub x_hat: f64,
    pub delta: f64,
    pub npv_moonshot: f64,
    pub npv_myopic: f64,
    pub benefit: f64,
    pub mode: NpvMode,
}

/// The first discovery: an expansion to the right at distance `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstChoice {
    pub d: f64,
    /// Success guaranteed, or left to the researcher's own optimal `ρ`.
    pub guaranteed: bool,
}

impl FirstChoice {
    pub fn guaranteed(d: f64) -> Self {
        Self { d, guaranteed: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop4Benchmark {
    pub d_inf: f64,
    pub rho_inf: f64,
    pub rho_6q: f64,
    pub losses: f64,
    pub gains_delta1: f64,
    pub benefit_delta1: f64,
}

/// Outside the known range and farther than `3q` from it.
pub fn is_moonshot(x: f64, f: &KnowledgeSet, q: f64) -> bool {
    let outside = x < f.left_frontier() || x > f.right_frontier();
    outside && f.distance(x) > 3.0 * q
}

fn check_delta(delta: f64, allow_one: bool) -> Result<()> {
    let ok = if allow_one { (0.0..=1.0).contains(&delta) } else { (0.0..1.0).contains(&delta) };
    if !ok {
        return invalid(format!("discount factor out of range: {delta}"));
    }
    Ok(())
}

/// Flow value `Σ_s δ^{s−1} P_s ΔV_s` of the policy chain, from a set of bounded
/// areas after a first discovery of `first_gain` that succeeded with `p1`.
fn consistent_flow(mut areas: Vec<f64>, first_gain: f64, p1: f64, params: &EconomyParams, delta: f64) -> Result<f64> {
    let expand = opt_expand(params)?;
    let mut memo: HashMap<u64, ResearchChoice> = HashMap::new();
    let mut deepen = |x: f64| -> Result<ResearchChoice> {
        if let Some(c) = memo.get(&x.to_bits()) {
            return Ok(*c);
        }
        let c = opt_deepen(x, params)?;
        memo.insert(x.to_bits(), c);
        Ok(c)
    };
    let v_exp = benefit_raw(expand.d, f64::INFINITY, params.q);
    let mut flow = p1 * first_gain;
    let mut reach = p1;
    let mut disc = 1.0;
    for _ in 0..MAX_TRANSIENT {
        disc *= delta;
        if reach == 0.0 || disc == 0.0 {
            return Ok(flow);
        }
        let mut best: Option<(usize, ResearchChoice)> = None;
        let mut best_u = expand.payoff;
        for (i, &x) in areas.iter().enumerate() {
            let c = deepen(x)?;
            if c.payoff > best_u {
                best_u = c.payoff;
                best = Some((i, c));
            }
        }
        match best {
            None => {
                // Expanding adds an area of length d∞; it must not be worth deepening later.
                if deepen(expand.d)?.payoff > expand.payoff {
                    areas.push(expand.d);
                    flow += disc * reach * expand.rho * v_exp;
                    reach *= expand.rho;
                    continue;
                }
                let r = expand.rho;
                if delta * r >= 1.0 {
                    return Err(Error::Invalid("expansion tail diverges (delta = 1 with rho = 1)".into()));
                }
                return Ok(flow + disc * reach * r * v_exp / (1.0 - delta * r));
            }
            Some((i, c)) => {
                let x = areas.swap_remove(i);
                flow += disc * reach * c.rho * benefit_raw(c.d, x, params.q);
                reach *= c.rho;
                areas.push(c.d);
                areas.push(x - c.d);
            }
        }
    }
    Err(Error::NoConvergence(format!("policy chain did not reach the expansion regime in {MAX_TRANSIENT} periods")))
}

/// Flow value under the closed-form recipe (paper-replication mode).
fn paper_flow(x_hat: f64, params: &EconomyParams, delta: f64, form: Rho6Form) -> Result<f64> {
    let q = params.q;
    let b = paper_prop4_benchmark_with(params, form)?;
    let v_inf = benefit_raw(b.d_inf, f64::INFINITY, q);
    let r = b.rho_inf;
    if delta * r >= 1.0 {
        return Err(Error::Invalid("expansion tail diverges".into()));
    }
    let tail = v_inf / (1.0 - delta * r);
    if (x_hat - 3.0 * q).abs() <= 1e-12 * q {
        Ok(1.5 * q + delta * r * tail)
    } else if (x_hat - 6.0 * q).abs() <= 1e-12 * q {
        let bridge = benefit_raw(3.0 * q, 6.0 * q, q);
        Ok(benefit_raw(6.0 * q, f64::INFINITY, q) + delta * b.rho_6q * bridge + delta * delta * b.rho_6q * r * tail)
    } else {
        invalid(format!("paper-replication mode only covers x̂ ∈ {{3q, 6q}}, got {x_hat}"))
    }
}

/// Flow value of a first expansion at `d` that succeeds with probability `p1`.
pub fn chain_flow_with_prob(f1: &KnowledgeSet, d: f64, p1: f64, params: &EconomyParams, delta: f64) -> Result<f64> {
    check_delta(delta, true)?;
    if !(d > 0.0 && d.is_finite()) {
        return invalid(format!("first distance must be positive, got {d}"));
    }
    if !(0.0..=1.0).contains(&p1) {
        return invalid(format!("first-period probability must be in [0,1], got {p1}"));
    }
    let mut areas = f1.bounded_lengths();
    areas.push(d);
    consistent_flow(areas, benefit_raw(d, f64::INFINITY, params.q), p1, params, delta)
}

/// Flow value for the chosen mode (`v(F₁)` excluded).
pub fn chain_flow(
    f1: &KnowledgeSet,
    first: FirstChoice,
    params: &EconomyParams,
    delta: f64,
    mode: NpvMode,
) -> Result<f64> {
    check_delta(delta, true)?;
    match mode {
        NpvMode::ConsistentFoc => {
            let p1 = if first.guaranteed { 1.0 } else { opt_rho_given_d(first.d, Length::Infinite, params)? };
            chain_flow_with_prob(f1, first.d, p1, params, delta)
        }
        NpvMode::PaperReplication => {
            if f1.len() != 1 || !first.guaranteed {
                return invalid("paper-replication mode needs a single known point and a guaranteed first discovery");
            }
            paper_flow(first.d, params, delta, Rho6Form::Printed)
        }
    }
}

/// Expected discounted value `Σ_{t≥1} δ^{t−1} E[v(F_{t+1})]`.
pub fn chain_npv(
    f1: &KnowledgeSet,
    first: FirstChoice,
    params: &EconomyParams,
    delta: f64,
    mode: NpvMode,
) -> Result<f64> {
    check_delta(delta, false)?;
    let v0 = value_of_knowledge(f1, params.q)?;
    Ok((v0 + chain_flow(f1, first, params, delta, mode)?) / (1.0 - delta))
}

/// Flow benefit of a guaranteed first discovery at `x_hat` over one at `3q`,
/// starting from a single known point.
pub fn moonshot_flow_benefit(x_hat: f64, params: &EconomyParams, delta: f64, mode: NpvMode) -> Result<f64> {
    let f1 = KnowledgeSet::single(0.0, 0.0)?;
    let q = params.q;
    Ok(chain_flow(&f1, FirstChoice::guaranteed(x_hat), params, delta, mode)?
        - chain_flow(&f1, FirstChoice::guaranteed(3.0 * q), params, delta, mode)?)
}

pub fn assess(x_hat: f64, params: &EconomyParams, delta: f64, mode: NpvMode) -> Result<MoonshotAssessment> {
    let f1 = KnowledgeSet::single(0.0, 0.0)?;
    let npv_moonshot = chain_npv(&f1, FirstChoice::guaranteed(x_hat), params, delta, mode)?;
    let npv_myopic = chain_npv(&f1, FirstChoice::guaranteed(3.0 * params.q), params, delta, mode)?;
    Ok(MoonshotAssessment { x_hat, delta, npv_moonshot, npv_myopic, benefit: npv_moonshot - npv_myopic, mode })
}

/// Expander distance and output from `d = 3q − ηc̃(ρ)/ρ` and `ηc̃′(ρ) = 1 − d/6q`.
fn paper_expander(params: &EconomyParams) -> Result<(f64, f64)> {
    let (q, eta) = (params.q, params.eta);
    if eta <= 0.0 {
        return invalid("paper recipe needs eta > 0");
    }
    let d_of = |iota: f64| 3.0 * q - eta * iota * iota / erf(iota);
    let residual = |iota: f64| {
        let (_, cp, _) = kernel_from_iota(iota);
        eta * cp - (1.0 - d_of(iota) / (6.0 * q))
    };
    let iota = bisect(residual, 1e-12, 6.0, 1e-15, 300)?;
    Ok((d_of(iota), erf(iota)))
}

pub fn paper_prop4_benchmark(params: &EconomyParams) -> Result<Prop4Benchmark> {
    paper_prop4_benchmark_with(params, Rho6Form::Printed)
}

pub fn paper_prop4_benchmark_with(params: &EconomyParams, form: Rho6Form) -> Result<Prop4Benchmark> {
    let q = params.q;
    let eta = params.eta;
    let (d_inf, rho_inf) = paper_expander(params)?;
    let c = 3.0 - 2.0 / 3f64.sqrt();
    let num = match form {
        Rho6Form::Printed => 8.0 * c,
        Rho6Form::Squared => 8.0 * c * c,
    };
    let w = lambert_w0(num / (9.0 * eta * eta * std::f64::consts::PI))?;
    let rho_6q = erf((0.5 * w).sqrt());
    let losses = (1.5 - 2.0 / 3f64.sqrt()) * q;
    let gains_delta1 = rho_6q * c * q - rho_inf * d_inf * (1.0 - d_inf / (6.0 * q));
    Ok(Prop4Benchmark { d_inf, rho_inf, rho_6q, losses, gains_delta1, benefit_delta1: gains_delta1 - losses })
}

/// Lower bound on the flow benefit of the `6q` moonshot that treats continuation
/// values from the third period on as identical.
pub fn conservative_bound(params: &EconomyParams, delta: f64, mode: NpvMode) -> Result<f64> {
    let q = params.q;
    let (d_inf, rho_inf, rho_6q) = match mode {
        NpvMode::PaperReplication => {
            let b = paper_prop4_benchmark(params)?;
            (b.d_inf, b.rho_inf, b.rho_6q)
        }
        NpvMode::ConsistentFoc => {
            let e = opt_expand(params)?;
            let r6 = opt_deepen(6.0 * q, params)?;
            (e.d, e.rho, r6.rho)
        }
    };
    let losses = (1.5 - 2.0 / 3f64.sqrt()) * q;
    let gains = rho_6q * benefit_raw(3.0 * q, 6.0 * q, q) - rho_inf * benefit_raw(d_inf, f64::INFINITY, q);
    Ok(delta * gains - losses)
}

/// Smallest `δ` above which the `6q` moonshot beats `3q`; `None` if it never does.
pub fn critical_delta(params: &EconomyParams, mode: NpvMode) -> Result<Option<f64>> {
    if params.eta == 0.0 {
        // costless research: the benefit is −(3/2 − 2/√3)q(1 − δ) < 0
        return Ok(None);
    }
    let b = |delta: f64| moonshot_flow_benefit(6.0 * params.q, params, delta, mode);
    let at_one = b(1.0)?;
    if at_one <= 0.0 {
        return Ok(None);
    }
    // Propagate chain errors rather than masking them inside the bisection.
    b(0.5)?;
    bisect(|d| b(d).unwrap_or(f64::NAN), 0.0, 1.0, 1e-11, 200).map(Some)
}

/// Interval of cost weights over which the `6q` moonshot strictly beats `3q`.
pub fn eta_range(delta: f64, q: f64, mode: NpvMode) -> Result<Option<(f64, f64)>> {
    check_delta(delta, false)?;
    if delta == 0.0 {
        return Ok(None);
    }
    let b = |log_eta: f64| -> Result<f64> {
        let p = EconomyParams::new(q, log_eta.exp())?;
        moonshot_flow_benefit(6.0 * q, &p, delta, mode)
    };
    let grid = linspace(1e-7f64.ln(), 1e3f64.ln(), 151);
    let vals = grid.iter().map(|&g| b(g)).collect::<Result<Vec<_>>>()?;
    let Some(first_pos) = vals.iter().position(|&v| v > 0.0) else {
        return Ok(None);
    };
    if first_pos == 0 {
        return Err(Error::NoConvergence("moonshot benefit positive at the smallest cost weight scanned".into()));
    }
    let refine =
        |a: f64, c: f64| -> Result<f64> { bisect(|g| b(g).unwrap_or(f64::NAN), a, c, 1e-12, 200).map(f64::exp) };
    let low = refine(grid[first_pos - 1], grid[first_pos])?;
    let Some(off) = vals[first_pos..].iter().position(|&v| v <= 0.0) else {
        return Err(Error::NoConvergence("moonshot benefit positive at the largest cost weight scanned".into()));
    };
    let last_pos = first_pos + off;
    let high = refine(grid[last_pos - 1], grid[last_pos])?;
    Ok(Some((low, high)))
}

/// Best guaranteed first distance on `[lo, hi]` (default `[3q, 12q]`).
///
/// A 0.05q grid locates the best cell (ties keep the smaller distance), then
/// golden-section refines inside it.
pub fn optimal_moonshot(delta: f64, params: &EconomyParams, bracket: Option<(f64, f64)>) -> Result<MoonshotAssessment> {
    check_delta(delta, false)?;
    let q = params.q;
    let (lo, hi) = bracket.unwrap_or((3.0 * q, 12.0 * q));
    if !(lo > 0.0 && hi > lo) {
        return invalid(format!("bad moonshot bracket [{lo}, {hi}]"));
    }
    let f1 = KnowledgeSet::single(0.0, 0.0)?;
    let flow = |x: f64| chain_flow(&f1, FirstChoice::guaranteed(x), params, delta, NpvMode::ConsistentFoc);
    let n = (((hi - lo) / (0.05 * q)).round() as usize).max(2) + 1;
    let grid = linspace(lo, hi, n);
    let vals = grid.iter().map(|&x| flow(x)).collect::<Result<Vec<_>>>()?;
    let mut i = 0;
    for (j, &v) in vals.iter().enumerate() {
        if v > vals[i] {
            i = j;
        }
    }
    let (mut x_best, mut f_best) = (grid[i], vals[i]);
    let a = grid[i.saturating_sub(1)];
    let c = grid[(i + 1).min(n - 1)];
    let (xr, fr) = golden_max(|x| flow(x).unwrap_or(f64::NEG_INFINITY), a, c, 1e-8 * q);
    if fr > f_best {
        x_best = xr;
        f_best = fr;
    }
    let v0 = value_of_knowledge(&f1, q)?;
    let myopic = flow(3.0 * q)?;
    let npv_moonshot = (v0 + f_best) / (1.0 - delta);
    let npv_myopic = (v0 + myopic) / (1.0 - delta);
    Ok(MoonshotAssessment {
        x_hat: x_best,
        delta,
        npv_moonshot,
        npv_myopic,
        benefit: npv_moonshot - npv_myopic,
        mode: NpvMode::ConsistentFoc,
    })
}

/// `ρ` at the midpoint of a `6q` area from the first-order condition.
pub fn rho_6q_consistent(params: &EconomyParams) -> f64 {
    let q = params.q;
    let ratio = benefit_raw(3.0 * q, 6.0 * q, q) / (params.eta * 1.5 * q);
    erf(iota_for_slope(ratio))
}
