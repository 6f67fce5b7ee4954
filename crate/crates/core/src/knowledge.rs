//! Known question–answer pairs, the area partition they induce, and the
//! Brownian conjecture at an unknown question.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// An area length: finite, or the explicit unbounded marker.
///
/// Serialises as a JSON number, with `null` standing for the unbounded case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Finite(f64),
    Infinite,
}

impl Length {
    pub fn is_infinite(self) -> bool {
        matches!(self, Length::Infinite)
    }

    /// Numeric value, `f64::INFINITY` for the unbounded marker.
    pub fn value(self) -> f64 {
        match self {
            Length::Finite(x) => x,
            Length::Infinite => f64::INFINITY,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x.is_infinite() {
            Length::Infinite
        } else {
            Length::Finite(x)
        }
    }
}

impl std::fmt::Display for Length {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Length::Finite(x) => write!(f, "{x}"),
            Length::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnowledgePoint {
    pub x: f64,
    pub y: f64,
}

impl KnowledgePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// A nonempty set of known pairs with strictly increasing questions.
///
/// Values are immutable; [`KnowledgeSet::insert`] returns a new set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnowledgeFile", into = "KnowledgeFile")]
pub struct KnowledgeSet {
    points: Vec<KnowledgePoint>,
}

/// On-disk layout: `{"points": [{"x": .., "y": ..}, ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnowledgeFile {
    pub points: Vec<KnowledgePoint>,
}

impl TryFrom<KnowledgeFile> for KnowledgeSet {
    type Error = crate::Error;
    fn try_from(f: KnowledgeFile) -> Result<Self> {
        make_knowledge(f.points)
    }
}

impl From<KnowledgeSet> for KnowledgeFile {
    fn from(k: KnowledgeSet) -> Self {
        KnowledgeFile { points: k.points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaKind {
    LeftUnbounded,
    /// Between points `index` and `index + 1`.
    Bounded {
        index: usize,
    },
    RightUnbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub kind: AreaKind,
    pub len: Length,
}

/// Mean and variance of the answer at a question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conjecture {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "action")]
pub enum Action {
    Proactive { value: f64 },
    Outside,
}

/// Sorts and validates points. Exact duplicates collapse; conflicting answers
/// at the same question are rejected.
pub fn make_knowledge(mut points: Vec<KnowledgePoint>) -> Result<KnowledgeSet> {
    if points.is_empty() {
        return invalid("knowledge needs at least one point");
    }
    if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return invalid(format!("non-finite point ({}, {})", p.x, p.y));
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut out: Vec<KnowledgePoint> = Vec::with_capacity(points.len());
    for p in points {
        match out.last() {
            Some(last) if last.x == p.x => {
                if last.y != p.y {
                    return invalid(format!("duplicate question x={} with answers {} and {}", p.x, last.y, p.y));
                }
            }
            _ => out.push(p),
        }
    }
    Ok(KnowledgeSet { points: out })
}

impl KnowledgeSet {
    pub fn single(x: f64, y: f64) -> Result<Self> {
        make_knowledge(vec![KnowledgePoint::new(x, y)])
    }

    pub fn points(&self) -> &[KnowledgePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left_frontier(&self) -> f64 {
        self.points[0].x
    }

    pub fn right_frontier(&self) -> f64 {
        self.points[self.points.len() - 1].x
    }

    /// The k+1 areas, left to right.
    pub fn areas(&self) -> Vec<Area> {
        let mut v = Vec::with_capacity(self.points.len() + 1);
        v.push(Area { kind: AreaKind::LeftUnbounded, len: Length::Infinite });
        for (i, w) in self.points.windows(2).enumerate() {
            v.push(Area { kind: AreaKind::Bounded { index: i }, len: Length::Finite(w[1].x - w[0].x) });
        }
        v.push(Area { kind: AreaKind::RightUnbounded, len: Length::Infinite });
        v
    }

    /// Lengths of the bounded areas only.
    pub fn bounded_lengths(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1].x - w[0].x).collect()
    }

    // Index of the first point with x_i >= x.
    fn lower_bound(&self, x: f64) -> usize {
        self.points.partition_point(|p| p.x < x)
    }

    pub fn distance(&self, x: f64) -> f64 {
        let i = self.lower_bound(x);
        let right = self.points.get(i).map(|p| p.x - x);
        let left = i.checked_sub(1).map(|j| x - self.points[j].x);
        match (left, right) {
            (Some(l), Some(r)) => l.min(r),
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("knowledge is nonempty"),
        }
    }

    pub fn conjecture(&self, x: f64) -> Conjecture {
        let i = self.lower_bound(x);
        let n = self.points.len();
        if i < n && self.points[i].x == x {
            return Conjecture { mean: self.points[i].y, variance: 0.0 };
        }
        if i == 0 {
            let p = self.points[0];
            return Conjecture { mean: p.y, variance: p.x - x };
        }
        if i == n {
            let p = self.points[n - 1];
            return Conjecture { mean: p.y, variance: x - p.x };
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let len = b.x - a.x;
        let t = (x - a.x) / len;
        Conjecture { mean: a.y + t * (b.y - a.y), variance: (b.x - x) * (x - a.x) / len }
    }

    /// Returns a new set containing `p`; `self` is untouched.
    pub fn insert(&self, p: KnowledgePoint) -> Result<Self> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return invalid("non-finite point");
        }
        let i = self.lower_bound(p.x);
        if i < self.points.len() && self.points[i].x == p.x {
            return invalid(format!("question x={} already known", p.x));
        }
        let mut points = Vec::with_capacity(self.points.len() + 1);
        points.extend_from_slice(&self.points[..i]);
        points.push(p);
        points.extend_from_slice(&self.points[i..]);
        Ok(KnowledgeSet { points })
    }

    /// Proactive at the conjecture mean iff `σ² ≤ q`, with payoff
    /// `max{(q − σ²)/q, 0}`.
    pub fn optimal_action(&self, x: f64, q: f64) -> Result<(Action, f64)> {
        if !(q > 0.0) {
            return invalid(format!("tolerance q must be positive, got {q}"));
        }
        let c = self.conjecture(x);
        if c.variance <= q {
            Ok((Action::Proactive { value: c.mean }, (q - c.variance) / q))
        } else {
            Ok((Action::Outside, 0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> KnowledgeSet {
        make_knowledge(vec![KnowledgePoint::new(0.0, 42.0), KnowledgePoint::new(-1.2, 46.6)]).unwrap()
    }

    #[test]
    fn construction() {
        let f = make_knowledge(vec![KnowledgePoint::new(1.2, 41.8), KnowledgePoint::new(0.0, 42.0)]).unwrap();
        assert_eq!(f.points()[0].x, 0.0);
        assert_eq!(f.points()[1].x, 1.2);
        assert!(make_knowledge(vec![]).is_err());
        assert!(make_knowledge(vec![KnowledgePoint::new(0.0, 1.0), KnowledgePoint::new(0.0, 2.0)]).is_err());
        let dedup = make_knowledge(vec![KnowledgePoint::new(0.0, 1.0), KnowledgePoint::new(0.0, 1.0)]).unwrap();
        assert_eq!(dedup.len(), 1);
        assert!(make_knowledge(vec![KnowledgePoint::new(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn areas_partition() {
        let f1 = KnowledgeSet::single(0.0, 42.0).unwrap();
        let a = f1.areas();
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|a| a.len.is_infinite()));
        let a = f2().areas();
        assert_eq!(a.len(), 3);
        assert_eq!(a[1].len, Length::Finite(1.2));
        let f3 = f2().insert(KnowledgePoint::new(1.2, 40.0)).unwrap();
        let lens: Vec<_> = f3.areas().iter().map(|a| a.len.value()).collect();
        assert_eq!(lens[0], f64::INFINITY);
        assert!((lens[1] - 1.2).abs() < 1e-15 && (lens[2] - 1.2).abs() < 1e-15);
        assert_eq!(lens[3], f64::INFINITY);
    }

    #[test]
    fn distances() {
        let f1 = KnowledgeSet::single(0.0, 42.0).unwrap();
        assert_eq!(f1.distance(0.0), 0.0);
        assert_eq!(f1.distance(-3.0), 3.0);
        let f = make_knowledge(vec![KnowledgePoint::new(0.0, 0.0), KnowledgePoint::new(6.0, 0.0)]).unwrap();
        assert_eq!(f.distance(2.0), 2.0);
        assert_eq!(f.distance(3.0), 3.0);
    }

    #[test]
    fn conjectures() {
        let f1 = KnowledgeSet::single(0.0, 42.0).unwrap();
        assert_eq!(f1.conjecture(4.0), Conjecture { mean: 42.0, variance: 4.0 });
        assert_eq!(f1.conjecture(-16.0).variance, 16.0);
        let f = make_knowledge(vec![KnowledgePoint::new(0.0, 0.0), KnowledgePoint::new(4.0, 8.0)]).unwrap();
        assert_eq!(f.conjecture(2.0), Conjecture { mean: 4.0, variance: 1.0 });
        assert_eq!(f.conjecture(4.0), Conjecture { mean: 8.0, variance: 0.0 });
    }

    #[test]
    fn insert_is_persistent() {
        let f1 = KnowledgeSet::single(0.0, 42.0).unwrap();
        let f2 = f1.insert(KnowledgePoint::new(-1.2, 46.6)).unwrap();
        assert_eq!(f1.len(), 1);
        assert_eq!(f2, self::f2());
        assert!(f2.insert(KnowledgePoint::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn actions() {
        let f1 = KnowledgeSet::single(0.0, 42.0).unwrap();
        assert_eq!(f1.optimal_action(0.0, 1.0).unwrap(), (Action::Proactive { value: 42.0 }, 1.0));
        assert_eq!(f1.optimal_action(1.0, 1.0).unwrap(), (Action::Proactive { value: 42.0 }, 0.0));
        assert_eq!(f1.optimal_action(1.5, 1.0).unwrap(), (Action::Outside, 0.0));
        assert!(f1.optimal_action(1.5, 0.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = r#"{"points":[{"x":1.2,"y":41.8},{"x":0,"y":42}]}"#;
        let f: KnowledgeSet = serde_json::from_str(s).unwrap();
        assert_eq!(f.points()[0].x, 0.0);
        let out = serde_json::to_string(&f).unwrap();
        assert_eq!(out, r#"{"points":[{"x":0.0,"y":42.0},{"x":1.2,"y":41.8}]}"#);
        assert!(serde_json::from_str::<KnowledgeSet>(r#"{"points":[]}"#).is_err());
        assert_eq!(serde_json::to_string(&Length::Infinite).unwrap(), "null");
    }
}
