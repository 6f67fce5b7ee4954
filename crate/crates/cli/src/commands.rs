use std::io::Write;

use anyhow::{bail, Context, Result};
use knowledge_core::evolution::{run_with, RunOptions};
use knowledge_core::funding::{
    feasible_bounds, frontier_formula, optimize_forward, optimize_myopic, researcher_with_rewards, FundingOptimum,
    FundingParams, RewardTech,
};
use knowledge_core::moonshot::{
    assess, chain_flow_with_prob, critical_delta, eta_range, moonshot_flow_benefit, optimal_moonshot,
    paper_prop4_benchmark, MoonshotAssessment, NpvMode,
};
use knowledge_core::researcher::{opt_choice_side, opt_deepen, researcher_cutoffs};
use knowledge_core::valuation::{
    area_value, benefit as benefit_of, benefit_cutoffs, benefit_d, sigma2, value_of_knowledge,
};
use knowledge_core::{AreaKind, BenefitCutoffs, EconomyParams, KnowledgeSet, Length, ResearcherCutoffs};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{json, num, Table};
use crate::Series;

fn econ(cfg: &RunConfig) -> Result<EconomyParams> {
    Ok(EconomyParams::new(cfg.q, cfg.eta)?)
}

fn load_knowledge(cfg: &RunConfig) -> Result<KnowledgeSet> {
    match &cfg.knowledge {
        None => Ok(KnowledgeSet::single(0.0, 0.0)?),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing knowledge file {}", p.display()))
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    linspace(lo.ln(), hi.ln(), n).map(f64::exp)
}

pub fn value(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let f = load_knowledge(cfg)?;
    let q = cfg.q;
    let pts = f.points();
    let mut t = Table::new(&["area", "start", "end", "length", "value"]);
    for a in f.areas() {
        let (name, start, end, v) = match a.kind {
            AreaKind::LeftUnbounded => ("left".to_string(), f64::NEG_INFINITY, pts[0].x, 0.5 * q),
            AreaKind::RightUnbounded => ("right".to_string(), pts[pts.len() - 1].x, f64::INFINITY, 0.5 * q),
            AreaKind::Bounded { index } => {
                (format!("bounded-{index}"), pts[index].x, pts[index + 1].x, area_value(a.len.value(), q)?)
            }
        };
        t.push(vec![name, num(start), num(end), num(a.len.value()), num(v)]);
    }
    let total = value_of_knowledge(&f, q)?;
    t.push(vec![
        "total".into(),
        num(pts[0].x),
        num(pts[pts.len() - 1].x),
        num(f.right_frontier() - f.left_frontier()),
        num(total),
    ]);
    t.write(out, "value", cfg)
}

#[derive(Serialize)]
struct BenefitPoint {
    d: f64,
    #[serde(rename = "X")]
    x: Length,
    benefit: f64,
    slope: f64,
    sigma2: f64,
}

pub fn benefit(cfg: &RunConfig, x: Length, d: Option<f64>, out: &mut dyn Write) -> Result<()> {
    let q = cfg.q;
    let point = |d: f64| -> Result<BenefitPoint> {
        Ok(BenefitPoint { d, x, benefit: benefit_of(d, x, q)?, slope: benefit_d(d, x, q)?, sigma2: sigma2(d, x)? })
    };
    if let Some(d) = d {
        return json(out, &point(d)?);
    }
    let d_max = match x {
        Length::Finite(v) => 0.5 * v,
        Length::Infinite => 8.0 * q,
    };
    let mut t = Table::new(&["d", "benefit", "slope", "sigma2"]);
    for d in linspace(0.0, d_max, cfg.points) {
        let p = point(d)?;
        t.push(vec![num(p.d), num(p.benefit), num(p.slope), num(p.sigma2)]);
    }
    t.write(out, "benefit", cfg)
}

#[derive(Serialize)]
struct Cutoffs {
    q: f64,
    eta: f64,
    benefit: BenefitCutoffs,
    researcher: Option<ResearcherCutoffs>,
}

pub fn cutoffs(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let researcher = if cfg.eta > 0.0 { Some(researcher_cutoffs(&econ(cfg)?)?) } else { None };
    json(out, &Cutoffs { q: cfg.q, eta: cfg.eta, benefit: benefit_cutoffs(cfg.q)?, researcher })
}

pub fn choose(cfg: &RunConfig, curve: bool, out: &mut dyn Write) -> Result<()> {
    let p = econ(cfg)?;
    if !curve {
        let f = load_knowledge(cfg)?;
        return json(out, &opt_choice_side(&f, &p, cfg.side)?);
    }
    let mut t = Table::new(&["X", "payoff", "d", "rho", "midpoint"]);
    for x in linspace(cfg.x_max / cfg.points as f64, cfg.x_max, cfg.points) {
        let c = opt_deepen(x, &p)?;
        let mid = (c.d - 0.5 * x).abs() <= 1e-12 * x;
        t.push(vec![num(x), num(c.payoff), num(c.d), num(c.rho), u8::from(mid).to_string()]);
    }
    t.write(out, "choose", cfg)
}

pub fn simulate(cfg: &RunConfig, first_distance: Option<f64>, out: &mut dyn Write) -> Result<()> {
    let f = load_knowledge(cfg)?;
    let opts = RunOptions { side: cfg.side, force_success: cfg.force_success, first_distance };
    let trace = run_with(&f, &econ(cfg)?, cfg.periods, cfg.seed, &opts)?;
    out.write_all(trace.to_jsonl().as_bytes())?;
    let last = match trace.periods.last() {
        Some(p) => p.value_after,
        None => value_of_knowledge(&f, cfg.q)?,
    };
    match trace.halted_at {
        Some(t) => eprintln!("halted at period {t}; final value {last}"),
        None => eprintln!("no failure in {} periods; final value {last}", trace.periods.len()),
    }
    Ok(())
}

#[derive(Serialize)]
struct MoonshotSummary {
    at_x_hat: MoonshotAssessment,
    critical_delta: Option<f64>,
    eta_range: Option<(f64, f64)>,
    optimal: MoonshotAssessment,
}

pub fn moonshot(cfg: &RunConfig, series: Option<Series>, out: &mut dyn Write) -> Result<()> {
    let p = econ(cfg)?;
    let (q, delta, mode) = (cfg.q, cfg.delta, cfg.mode);
    let flow = |eta: f64, delta: f64| -> Result<f64> {
        Ok(moonshot_flow_benefit(6.0 * q, &EconomyParams::new(q, eta)?, delta, mode)?)
    };
    match series {
        None if mode == NpvMode::PaperReplication => {
            let b = paper_prop4_benchmark(&p)?;
            let mut t = Table::new(&["d_inf", "rho_inf", "rho_6q", "losses", "gains_delta1", "benefit_delta1"]);
            t.push(vec![
                num(b.d_inf),
                num(b.rho_inf),
                num(b.rho_6q),
                num(b.losses),
                num(b.gains_delta1),
                num(b.benefit_delta1),
            ]);
            t.write(out, "moonshot", cfg)
        }
        None => {
            let summary = MoonshotSummary {
                at_x_hat: assess(cfg.x_hat, &p, delta, mode)?,
                critical_delta: critical_delta(&p, mode)?,
                eta_range: eta_range(delta, q, mode)?,
                optimal: optimal_moonshot(delta, &p, None)?,
            };
            json(out, &summary)
        }
        Some(Series::XHat) => {
            if mode == NpvMode::PaperReplication {
                bail!("the x-hat series needs --mode consistent; the closed-form recipe covers only 3q and 6q");
            }
            let mut t = Table::new(&["x_hat", "npv", "npv_myopic", "benefit"]);
            for x in linspace(3.0 * q, 12.0 * q, cfg.points) {
                let a = assess(x, &p, delta, mode)?;
                t.push(vec![num(x), num(a.npv_moonshot), num(a.npv_myopic), num(a.benefit)]);
            }
            t.write(out, "moonshot", cfg)
        }
        Some(Series::Eta) => {
            let mut t = Table::new(&["eta", "flow_benefit", "npv_benefit"]);
            for eta in logspace(1e-3, 10.0, cfg.points) {
                let b = flow(eta, delta)?;
                t.push(vec![num(eta), num(b), num(b / (1.0 - delta))]);
            }
            t.write(out, "moonshot", cfg)
        }
        Some(Series::Delta) => {
            let mut t = Table::new(&["delta", "flow_benefit", "npv_benefit"]);
            for d in linspace(0.0, 0.99, cfg.points) {
                let b = flow(cfg.eta, d)?;
                t.push(vec![num(d), num(b), num(b / (1.0 - d))]);
            }
            t.write(out, "moonshot", cfg)
        }
    }
}

fn kind_name(o: &FundingOptimum) -> &'static str {
    match o.kind {
        knowledge_core::funding::SchemeKind::CostOnly => "cost-only",
        knowledge_core::funding::SchemeKind::RewardsOnly => "rewards-only",
        knowledge_core::funding::SchemeKind::Mix => "mix",
    }
}

pub fn funding(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let q = cfg.q;
    let fp = FundingParams::new(cfg.k, cfg.kappa, cfg.s, cfg.eta0, cfg.tech)?;
    let delta = cfg.delta;
    let f1 = KnowledgeSet::single(0.0, 0.0)?;
    let after = EconomyParams::new(q, cfg.eta0)?;
    let v0 = value_of_knowledge(&f1, q)?;
    // Funder's objective for a first discovery at distance d with probability rho.
    let objective = |d: f64, rho: f64| -> Result<f64> {
        if delta == 0.0 {
            Ok(rho * benefit_of(d, Length::Infinite, q)?)
        } else {
            Ok((v0 + chain_flow_with_prob(&f1, d, rho, &after, delta)?) / (1.0 - delta))
        }
    };
    let best = if delta == 0.0 { optimize_myopic(&fp, q)? } else { optimize_forward(&fp, q, delta)?.optimum };

    let mut t = Table::new(&["series", "rho", "d", "zeta", "h", "eta", "value", "kind"]);
    let blank = String::new;
    for zeta in linspace(0.0, fp.k, cfg.points) {
        let pt = researcher_with_rewards(&fp.scheme(zeta)?, &fp, q)?;
        let v = objective(pt.d, pt.rho)?;
        t.push(vec![
            "budget-line".into(),
            num(pt.rho),
            num(pt.d),
            num(pt.scheme.zeta),
            num(pt.scheme.h),
            num(pt.scheme.eta),
            num(v),
            blank(),
        ]);
    }
    if fp.reward_tech == RewardTech::PiecewiseLinear {
        let b = feasible_bounds(&fp, q)?;
        if b.line_min < b.line_max {
            for rho in linspace(b.line_min, b.line_max, cfg.points) {
                t.push(vec![
                    "frontier".into(),
                    num(rho),
                    num(frontier_formula(rho, &fp, q)),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                ]);
            }
        }
    }
    // Funder's iso-value curve through the optimum.
    let target = best.value;
    let n_rho = cfg.points.min(60);
    for rho in linspace(0.0, 1.0, n_rho + 2).skip(1).take(n_rho) {
        if delta == 0.0 {
            let disc = 9.0 * q * q - 6.0 * q * target / rho;
            if disc >= 0.0 {
                for d in [3.0 * q - disc.sqrt(), 3.0 * q + disc.sqrt()] {
                    t.push(vec![
                        "indifference".into(),
                        num(rho),
                        num(d),
                        blank(),
                        blank(),
                        blank(),
                        num(target),
                        blank(),
                    ]);
                }
            }
        } else {
            let ds: Vec<f64> = linspace(0.02 * q, 12.0 * q, 240).collect();
            let gap = |d: f64| objective(d, rho).map(|v| v - target);
            let mut prev = gap(ds[0])?;
            for w in ds.windows(2) {
                let next = gap(w[1])?;
                if prev.signum() != next.signum() {
                    let (mut lo, mut hi, mut flo) = (w[0], w[1], prev);
                    for _ in 0..50 {
                        let mid = 0.5 * (lo + hi);
                        let fm = gap(mid)?;
                        if fm.signum() == flo.signum() {
                            lo = mid;
                            flo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    let d = 0.5 * (lo + hi);
                    t.push(vec![
                        "indifference".into(),
                        num(rho),
                        num(d),
                        blank(),
                        blank(),
                        blank(),
                        num(target),
                        blank(),
                    ]);
                }
                prev = next;
            }
        }
    }
    let pt = best.point;
    t.push(vec![
        "scheme".into(),
        num(pt.rho),
        num(pt.d),
        num(best.scheme.zeta),
        num(best.scheme.h),
        num(best.scheme.eta),
        num(best.value),
        kind_name(&best).into(),
    ]);
    t.write(out, "funding", cfg)
}
