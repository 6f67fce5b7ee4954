//! Sequential research by short-lived, identical researchers.
//!
//! Each period the researcher picks the optimal question, nature draws the
//! answer from the conjecture, and the discovery is added iff it lands in the
//! researcher's prediction interval. Because the next researcher faces the
//! same knowledge after a failure, a failure repeats forever; runs therefore
//! halt at the first failure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::knowledge::{KnowledgePoint, KnowledgeSet, Length};
use crate::researcher::{opt_choice_side, EconomyParams, Move, ResearchChoice, Side};
use crate::specfun::erf_inv;
use crate::valuation::value_of_knowledge;

/// The generator used for every run: ChaCha with 8 rounds, seeded from a `u64`.
pub type TraceRng = ChaCha8Rng;

pub fn new_rng(seed: u64) -> TraceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Closed answer interval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchInterval {
    pub a: f64,
    pub b: f64,
}

impl SearchInterval {
    pub fn contains(&self, y: f64) -> bool {
        self.a <= y && y <= self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Interval of length `2^{3/2}·erf⁻¹(ρ)·σ` centred on `mean`; it contains a
/// `N(mean, σ²)` draw with probability `ρ`.
pub fn prediction_interval(mean: f64, sigma: f64, rho: f64) -> Result<SearchInterval> {
    if !(sigma >= 0.0) {
        return domain(format!("standard deviation must be nonnegative, got {sigma}"));
    }
    if !(0.0..1.0).contains(&rho) {
        return domain(format!("prediction interval needs rho in [0,1), got {rho}"));
    }
    let half = std::f64::consts::SQRT_2 * erf_inv(rho)? * sigma;
    Ok(SearchInterval { a: mean - half, b: mean + half })
}

/// Draw the answer at an unknown question from its conjecture.
pub fn sample_answer<R: Rng + ?Sized>(f: &KnowledgeSet, x: f64, rng: &mut R) -> Result<f64> {
    let c = f.conjecture(x);
    if c.variance == 0.0 {
        return invalid(format!("question x={x} is already known"));
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(c.mean + c.variance.sqrt() * z)
}

/// Question implied by a choice: right/left of the frontier, or `d` to the
/// right of the area's lower anchor.
pub fn question_for(f: &KnowledgeSet, choice: &ResearchChoice) -> f64 {
    match choice.action {
        Move::Expand { side: Side::Right } => f.right_frontier() + choice.d,
        Move::Expand { side: Side::Left } => f.left_frontier() - choice.d,
        Move::Deepen { area } => f.points()[area.unwrap_or(0)].x + choice.d,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub choice: ResearchChoice,
    pub x: f64,
    pub y: f64,
    pub interval: SearchInterval,
    pub success: bool,
    pub knowledge: KnowledgeSet,
}

fn attempt<R: Rng + ?Sized>(f: &KnowledgeSet, choice: ResearchChoice, force: bool, rng: &mut R) -> Result<StepOutcome> {
    let x = question_for(f, &choice);
    let c = f.conjecture(x);
    let y = sample_answer(f, x, rng)?;
    // Costless research (rho = 1) searches the whole line.
    let interval = if choice.rho >= 1.0 {
        SearchInterval { a: f64::NEG_INFINITY, b: f64::INFINITY }
    } else {
        prediction_interval(c.mean, c.variance.sqrt(), choice.rho)?
    };
    let success = force || interval.contains(y);
    let knowledge = if success { f.insert(KnowledgePoint::new(x, y))? } else { f.clone() };
    Ok(StepOutcome { choice, x, y, interval, success, knowledge })
}

/// One period: optimal choice, sampled answer, membership test.
pub fn step<R: Rng + ?Sized>(f: &KnowledgeSet, params: &EconomyParams, rng: &mut R) -> Result<StepOutcome> {
    let choice = opt_choice_side(f, params, Side::Right)?;
    attempt(f, choice, false, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub side: Side,
    /// Treat every attempt as successful (pattern studies).
    pub force_success: bool,
    /// Override the first period's choice with an expansion at this distance.
    pub first_distance: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { side: Side::Right, force_success: false, first_distance: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub t: usize,
    pub choice: ResearchChoice,
    pub x: f64,
    pub y: f64,
    pub interval: SearchInterval,
    pub success: bool,
    pub knowledge_after: KnowledgeSet,
    pub value_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub periods: Vec<Period>,
    pub seed: u64,
    /// Period of the first failure, if any.
    pub halted_at: Option<usize>,
}

/// Flat per-period export record; `X` is `null` for unbounded areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub x: f64,
    pub d: f64,
    #[serde(rename = "X")]
    pub area: Length,
    pub rho: f64,
    pub y: f64,
    pub success: bool,
    pub v: f64,
}

impl EvolutionTrace {
    pub fn records(&self) -> Vec<TraceRecord> {
        self.periods
            .iter()
            .map(|p| TraceRecord {
                t: p.t,
                x: p.x,
                d: p.choice.d,
                area: p.choice.len,
                rho: p.choice.rho,
                y: p.y,
                success: p.success,
                v: p.value_after,
            })
            .collect()
    }

    /// JSON lines, one record per period.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.records() {
            out.push_str(&serde_json::to_string(&r).expect("trace records serialise"));
            out.push('\n');
        }
        out
    }

    pub fn final_knowledge(&self) -> Option<&KnowledgeSet> {
        self.periods.last().map(|p| &p.knowledge_after)
    }
}

pub fn run(f1: &KnowledgeSet, params: &EconomyParams, periods: usize, seed: u64) -> Result<EvolutionTrace> {
    run_with(f1, params, periods, seed, &RunOptions::default())
}

pub fn run_with(
    f1: &KnowledgeSet,
    params: &EconomyParams,
    periods: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<EvolutionTrace> {
    if periods == 0 {
        return invalid("horizon must be at least one period");
    }
    let mut rng = new_rng(seed);
    let mut f = f1.clone();
    let mut out = Vec::new();
    let mut halted_at = None;
    for t in 1..=periods {
        let choice = match (t, opts.first_distance) {
            (1, Some(d)) => {
                if !(d > 0.0 && d.is_finite()) {
                    return invalid(format!("first distance must be positive, got {d}"));
                }
                let rho = crate::researcher::opt_rho_given_d(d, Length::Infinite, params)?;
                let payoff = crate::researcher::payoff(rho, d, Length::Infinite, params)?;
                ResearchChoice { action: Move::Expand { side: opts.side }, len: Length::Infinite, d, rho, payoff }
            }
            _ => opt_choice_side(&f, params, opts.side)?,
        };
        let o = attempt(&f, choice, opts.force_success, &mut rng)?;
        let value_after = value_of_knowledge(&o.knowledge, params.q)?;
        out.push(Period {
            t,
            choice: o.choice,
            x: o.x,
            y: o.y,
            interval: o.interval,
            success: o.success,
            knowledge_after: o.knowledge.clone(),
            value_after,
        });
        f = o.knowledge;
        if !o.success {
            halted_at = Some(t);
            break;
        }
    }
    Ok(EvolutionTrace { periods: out, seed, halted_at })
}
