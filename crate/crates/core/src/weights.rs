//! Weights of curves approaching a corner and how they transform through
//! three-dimensional saddles. Chains of such transitions detect
//! infinitesimal saddle connections.
//!
//! A curve `c(t) = (c1, c2) -> 0` has weight `rho` when
//! `k1 c1^rho < c2 < k2 c1^rho` eventually. Along a skeleton edge lying in
//! `D_a ∩ D_b` with `a` created before `b`, `c1` is the distance to `D_a`
//! and `c2` the distance to `D_b`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_traits::Signed;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::atlas::ComponentId;
use crate::error::{Error, Result};
use crate::graph::{EdgeType, SeparatrixGraph};
use crate::integrate::{Stepper, Tolerances};
use crate::rational::{self, to_f64, Q};
use crate::singularity::Kind;

/// Tolerance for comparing float-mode weights.
pub const FLOAT_WEIGHT_TOL: f64 = 1e-9;

/// A positive weight, exact whenever the input data are.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Exact(Q),
    Float(f64),
}

impl Weight {
    pub fn int(n: i64) -> Self {
        Weight::Exact(Q::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Weight::Exact(rational::q(n, d))
    }

    pub fn value(&self) -> f64 {
        match self {
            Weight::Exact(q) => to_f64(q),
            Weight::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Weight::Exact(_))
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Weight::Exact(q) => q.is_positive(),
            Weight::Float(x) => *x > 0.0,
        }
    }

    fn zip(&self, o: &Weight, fq: impl Fn(&Q, &Q) -> Q, ff: impl Fn(f64, f64) -> f64) -> Weight {
        match (self, o) {
            (Weight::Exact(a), Weight::Exact(b)) => Weight::Exact(fq(a, b)),
            _ => Weight::Float(ff(self.value(), o.value())),
        }
    }

    pub fn add(&self, o: &Weight) -> Weight {
        self.zip(o, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, o: &Weight) -> Weight {
        self.zip(o, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, o: &Weight) -> Weight {
        self.zip(o, |a, b| a * b, |a, b| a * b)
    }

    pub fn div(&self, o: &Weight) -> Weight {
        self.zip(o, |a, b| a / b, |a, b| a / b)
    }

    pub fn recip(&self) -> Weight {
        Weight::int(1).div(self)
    }

    pub fn abs(&self) -> Weight {
        match self {
            Weight::Exact(q) => Weight::Exact(q.abs()),
            Weight::Float(x) => Weight::Float(x.abs()),
        }
    }

    /// Exact comparison when both sides are exact, otherwise relative
    /// tolerance `FLOAT_WEIGHT_TOL`.
    pub fn compare(&self, o: &Weight) -> Ordering {
        match (self, o) {
            (Weight::Exact(a), Weight::Exact(b)) => a.cmp(b),
            _ => {
                let (a, b) = (self.value(), o.value());
                if (a - b).abs() <= FLOAT_WEIGHT_TOL * a.abs().max(b.abs()).max(1.0) {
                    Ordering::Equal
                } else {
                    a.total_cmp(&b)
                }
            }
        }
    }
}

impl std::fmt::Display for Weight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weight::Exact(q) => write!(f, "{}", rational::to_string(q)),
            Weight::Float(x) => write!(f, "{x:.16e}"),
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Weight::Exact(q) => s.serialize_str(&rational::to_string(q)),
            Weight::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            F(f64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => rational::parse(&s)
                .map(Weight::Exact)
                .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))),
            Raw::F(x) => Ok(Weight::Float(x)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    YSide,
    ZSide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    Exit { side: Side, weight: Weight },
    Landing,
}

fn check_positive(ws: &[&Weight]) -> Result<()> {
    if ws.iter().all(|w| w.is_positive()) {
        Ok(())
    } else {
        Err(Error::NonPositive)
    }
}

/// Weight of the saturation of a curve of weight `rho1` (on the section
/// transverse to the unstable axis) read on the fence around the stable
/// plane.
pub fn transition_forward(lambda: &Weight, mu: &Weight, rho1: &Weight) -> Result<Transition> {
    check_positive(&[lambda, mu, rho1])?;
    let threshold = mu.div(lambda);
    Ok(match rho1.compare(&threshold) {
        Ordering::Greater => Transition::Exit { side: Side::YSide, weight: lambda.mul(rho1).sub(mu).recip() },
        Ordering::Less => Transition::Exit { side: Side::ZSide, weight: rho1.div(&mu.sub(&lambda.mul(rho1))) },
        Ordering::Equal => Transition::Landing,
    })
}

/// Inverse transition: from a fence curve of weight `rho2` on the given side
/// back to the section transverse to the unstable axis.
pub fn transition_inverse(lambda: &Weight, mu: &Weight, rho2: &Weight, side: Side) -> Result<Weight> {
    check_positive(&[lambda, mu, rho2])?;
    let one = Weight::int(1);
    Ok(match side {
        Side::YSide => one.add(&mu.mul(rho2)).div(&lambda.mul(rho2)),
        Side::ZSide => mu.mul(rho2).div(&one.add(&lambda.mul(rho2))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Positive,
    Negative,
}

/// What happens to the saturation at `p_next`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepExit {
    YSide,
    ZSide,
    /// Exit along the one-dimensional variety of `p_next`.
    OneD,
    /// The forbidden configuration: the curve lands in the 2D variety.
    Landing,
    /// `p_next` is not a saddle corner.
    End,
    /// `p_next` was already visited.
    Repeat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedChainStep {
    pub p_prev: usize,
    pub p_next: usize,
    pub sigma: usize,
    pub rho: Weight,
    pub lambda: Option<Weight>,
    pub mu: Option<Weight>,
    pub exit: StepExit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedChain {
    pub start: usize,
    pub steps: Vec<WeightedChainStep>,
    pub orientation: Orientation,
    pub associated_to_start: bool,
    /// The reversed chain is associated to the last vertex.
    pub connection: bool,
    pub float_mode: bool,
}

fn pair_of(carrier: &[ComponentId]) -> Option<(ComponentId, ComponentId)> {
    match carrier {
        [a, b] => Some(((*a).min(*b), (*a).max(*b))),
        _ => None,
    }
}

fn skeleton_out(graph: &SeparatrixGraph, p: usize, pair: (ComponentId, ComponentId)) -> Vec<usize> {
    graph
        .edges
        .iter()
        .filter(|e| e.edge_type == EdgeType::Skeleton && e.origin == p && pair_of(&e.carrier) == Some(pair))
        .map(|e| e.id)
        .collect()
}

/// Distance ordering on an edge: fence coordinates measure the non-transverse
/// component first; canonical weights measure the earlier component first.
fn fence_to_canonical(w: Weight, noncomp: ComponentId, c: ComponentId) -> Weight {
    if noncomp < c {
        w
    } else {
        w.recip()
    }
}

/// Chain associated to `start` leaving along the 1D-variety edge `first`.
pub fn propagate_chain_from(graph: &SeparatrixGraph, start: usize, first: usize) -> Result<WeightedChain> {
    let v0 = graph.vertex(start)?;
    let sd = match (&v0.saddle, v0.kind) {
        (Some(s), Kind::SaddleCorner | Kind::BiSaddleAngle) => s,
        _ => return Err(Error::InvalidChainStart(format!("vertex {start} is {}", v0.kind.name()))),
    };
    let e0 = graph.edges.get(first).ok_or(Error::InvalidChainStart(format!("no edge {first}")))?;
    if e0.origin != start || e0.edge_type != EdgeType::Skeleton || pair_of(&e0.carrier) != Some(sd.pair) {
        return Err(Error::InvalidChainStart("first edge is not the one-dimensional variety".into()));
    }
    let mut float_mode = !sd.weight.is_exact();
    let mut steps = Vec::new();
    let mut visited = BTreeSet::from([start]);
    let mut sigma = first;
    let mut rho = sd.weight.clone();
    let mut connection = false;
    loop {
        let e = &graph.edges[sigma];
        let p = e.end;
        let v = graph.vertex(p)?;
        let pair = pair_of(&e.carrier).expect("skeleton edge has two components");
        let mut step = WeightedChainStep {
            p_prev: e.origin,
            p_next: p,
            sigma,
            rho: rho.clone(),
            lambda: v.saddle.as_ref().map(|s| s.lambda.clone()),
            mu: v.saddle.as_ref().map(|s| s.mu.clone()),
            exit: StepExit::End,
        };
        let Some(s) = v.saddle.as_ref() else {
            steps.push(step);
            break;
        };
        float_mode |= !s.weight.is_exact();
        let incoming_one_d = pair == s.pair && !s.one_d_unstable;
        if v.kind != Kind::SaddleCorner {
            if v.kind == Kind::BiSaddleAngle && incoming_one_d && rho.compare(&s.weight) == Ordering::Equal {
                step.exit = StepExit::Landing;
                connection = true;
            }
            steps.push(step);
            break;
        }
        if visited.contains(&p) {
            step.exit = StepExit::Repeat;
            steps.push(step);
            break;
        }
        visited.insert(p);
        let c = s.transverse.expect("saddle corner has a transverse plane");
        let (a, b) = s.pair;
        let (exit_pair, next_rho) = if incoming_one_d {
            match transition_forward(&s.lambda, &s.mu, &rho)? {
                Transition::Landing => {
                    step.exit = StepExit::Landing;
                    connection = true;
                    steps.push(step);
                    break;
                }
                Transition::Exit { side, weight } => {
                    let noncomp = if side == Side::YSide { b } else { a };
                    step.exit = if side == Side::YSide { StepExit::YSide } else { StepExit::ZSide };
                    ((noncomp.min(c), noncomp.max(c)), fence_to_canonical(weight, noncomp, c))
                }
            }
        } else if s.one_d_unstable && (pair == (b.min(c), b.max(c)) || pair == (a.min(c), a.max(c))) {
            let (side, noncomp) = if pair == (b.min(c), b.max(c)) { (Side::YSide, b) } else { (Side::ZSide, a) };
            let fence = fence_to_canonical(rho.clone(), noncomp, c);
            step.exit = StepExit::OneD;
            (s.pair, transition_inverse(&s.lambda, &s.mu, &fence, side)?)
        } else {
            return Err(Error::Invalid(format!("edge {sigma} does not reach corner {p} along an invariant axis")));
        };
        let outs = skeleton_out(graph, p, exit_pair);
        let Some(&next) = outs.first() else {
            return Err(Error::ExitEdgeMissing);
        };
        steps.push(step);
        sigma = next;
        rho = next_rho;
    }
    Ok(WeightedChain {
        start,
        steps,
        orientation: Orientation::Positive,
        associated_to_start: true,
        connection,
        float_mode,
    })
}

/// Positively oriented chain associated to `start`, along its first
/// 1D-variety branch.
pub fn propagate_chain(graph: &SeparatrixGraph, start: usize) -> Result<WeightedChain> {
    let v = graph.vertex(start)?;
    let sd = v
        .saddle
        .as_ref()
        .filter(|_| v.kind.is_weighted())
        .ok_or_else(|| Error::InvalidChainStart(format!("vertex {start} is {}", v.kind.name())))?;
    if !sd.one_d_unstable {
        return Err(Error::InvalidChainStart("one-dimensional variety is not unstable".into()));
    }
    let outs = skeleton_out(graph, start, sd.pair);
    let first = *outs
        .first()
        .ok_or_else(|| Error::InvalidChainStart("one-dimensional variety is not a skeleton edge".into()))?;
    propagate_chain_from(graph, start, first)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub connections: Vec<WeightedChain>,
    pub chains: Vec<WeightedChain>,
    pub warnings: Vec<String>,
}

/// Enumerates every positively oriented chain associated to a weighted
/// saddle and keeps those whose reversal is associated to the endpoint.
pub fn detect_infinitesimal_connections(graph: &SeparatrixGraph) -> ConnectionReport {
    let mut rep = ConnectionReport::default();
    for v in &graph.vertices {
        let Some(sd) = v.saddle.as_ref().filter(|_| v.kind.is_weighted()) else { continue };
        if !sd.one_d_unstable {
            continue;
        }
        for first in skeleton_out(graph, v.id, sd.pair) {
            match propagate_chain_from(graph, v.id, first) {
                Ok(ch) => {
                    if ch.float_mode {
                        rep.warnings.push(format!(
                            "chain from vertex {} uses float weights; compared at relative tolerance {FLOAT_WEIGHT_TOL:e}",
                            v.id
                        ));
                    }
                    if ch.connection {
                        rep.connections.push(ch.clone());
                    }
                    rep.chains.push(ch);
                }
                Err(e) => rep.warnings.push(format!("chain from vertex {} along edge {first}: {e}", v.id)),
            }
        }
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightVerdict {
    Weight,
    Infinite,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEstimate {
    pub rho: f64,
    pub k1: f64,
    pub k2: f64,
    pub verdict: WeightVerdict,
    pub window_slopes: Vec<f64>,
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub const ESTIMATE_WINDOWS: usize = 8;

/// Log-log least squares over the tail half of the samples, with windowed
/// slopes to tell a weight from divergence or oscillation.
pub fn estimate_weight(samples: &[(f64, f64)]) -> Result<WeightEstimate> {
    if samples.len() < 32 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    if samples.iter().any(|(a, b)| !(*a > 0.0 && *b > 0.0)) {
        return Err(Error::NonPositive);
    }
    let tail = &samples[samples.len() / 2..];
    let x: Vec<f64> = tail.iter().map(|s| s.0.ln()).collect();
    let y: Vec<f64> = tail.iter().map(|s| s.1.ln()).collect();
    let (rho, icpt) = ols(&x, &y);
    let resid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - rho * a - icpt).collect();
    let rmin = resid.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = resid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = tail.len() / ESTIMATE_WINDOWS;
    let window_slopes: Vec<f64> = (0..ESTIMATE_WINDOWS)
        .map(|k| {
            let r = k * w..if k + 1 == ESTIMATE_WINDOWS { tail.len() } else { (k + 1) * w };
            ols(&x[r.clone()], &y[r]).0
        })
        .collect();
    let dev = window_slopes.iter().map(|s| (s - rho).abs()).fold(0.0, f64::max);
    let verdict = if rho > 0.0 && rho.is_finite() && dev < 0.05 * rho {
        WeightVerdict::Weight
    } else {
        let diffs: Vec<f64> = window_slopes.windows(2).map(|p| p[1] - p[0]).collect();
        let increasing = diffs.iter().all(|d| *d > 0.0);
        if increasing && window_slopes.last().unwrap() > &(1.5 * window_slopes[0].max(0.0) + 1e-12) {
            WeightVerdict::Infinite
        } else {
            WeightVerdict::None
        }
    };
    Ok(WeightEstimate { rho, k1: (icpt + rmin).exp() * 0.999, k2: (icpt + rmax).exp() * 1.001, verdict, window_slopes })
}

/// Numerical oracle for the forward transition: the curve `(1, s, s^rho1)`
/// on the section `x = 1` is flowed backward through the linear saddle
/// `(x, -lambda y, -mu z)` to the cylinder `y^2 + z^2 = 1`, where it is read
/// in fence coordinates `(u, v)` with `u` the normalized angle from the exit
/// axis and `v = x`. The side is the one predicted by comparing `rho1` with
/// `mu / lambda`.
pub fn fence_samples(lambda: f64, mu: f64, rho1: f64, n: usize, tol: Tolerances) -> Result<(Side, Vec<(f64, f64)>)> {
    if !(lambda > 0.0 && mu > 0.0 && rho1 > 0.0) {
        return Err(Error::NonPositive);
    }
    let side = if rho1 > mu / lambda { Side::YSide } else { Side::ZSide };
    let back = move |p: &[f64; 3]| [-p[0], lambda * p[1], mu * p[2]];
    let g = |p: &[f64; 3]| p[1] * p[1] + p[2] * p[2] - 1.0;
    let mut out = Vec::with_capacity(n);
    // Parameter s from 1e-1 down to 1e-7, evenly in log.
    for i in 0..n {
        let s = 10f64.powf(-1.0 - 6.0 * i as f64 / (n - 1) as f64);
        let mut y = [1.0, s, s.powf(rho1)];
        let mut st = Stepper::new(tol, 1e-2);
        let mut hit = None;
        for _ in 0..200_000 {
            let prev = y;
            let step = st.advance(&back, &y, 1.0, 0.05).ok_or(Error::StepLimitExceeded)?;
            y = step.y;
            if g(&y) >= 0.0 {
                // Bisect on the step to land on the cylinder.
                let (mut lo, mut hi) = (0.0, step.h);
                let mut q = y;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    q = crate::integrate::dp45_step(&back, &prev, mid).0;
                    if g(&q) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hit = Some(q);
                break;
            }
        }
        let q = hit.ok_or(Error::StepLimitExceeded)?;
        let u = match side {
            Side::YSide => q[2].atan2(q[1]),
            Side::ZSide => q[1].atan2(q[2]),
        } * 2.0
            / std::f64::consts::PI;
        out.push((u, q[0]));
    }
    Ok((side, out))
}

/// Two saddle corners joined along their common one-dimensional variety
/// with equal weights `2`: the chain from the first lands at the second,
/// which is an infinitesimal saddle connection. `mu_shift` is added to the
/// second corner's `mu`; any nonzero shift sends the chain out along one
/// of the second corner's exit edges instead.
pub fn symmetric_connection_fixture(mu_shift: Q) -> SeparatrixGraph {
    use crate::graph::{EndRole, GraphVertex, SeparatrixEdge};
    use crate::singularity::SaddleData;

    let corner = |id: usize, mu: Weight, unstable: bool, transverse: ComponentId| {
        let lambda = Weight::int(1);
        let mut v = GraphVertex::bare(id, Kind::SaddleCorner);
        v.saddle = Some(SaddleData {
            weight: mu.div(&lambda),
            lambda,
            mu,
            one_d_axis: 0,
            one_d_unstable: unstable,
            pair: (0, 1),
            transverse: Some(transverse),
        });
        v
    };
    let vertices = vec![
        corner(0, Weight::int(2), true, 2),
        corner(1, Weight::int(2).add(&Weight::Exact(mu_shift)), false, 3),
        GraphVertex::bare(2, Kind::TransverseNode),
        GraphVertex::bare(3, Kind::TransverseNode),
    ];
    let edge = |o: usize, e: usize, carrier: Vec<ComponentId>, ao: f64, ae: f64| SeparatrixEdge {
        id: 0,
        origin: o,
        end: e,
        edge_type: EdgeType::Skeleton,
        carrier,
        polyline: Vec::new(),
        origin_angle: ao,
        end_angle: ae,
        origin_role: EndRole::OneDimensional,
        end_role: EndRole::TwoDimensional,
        restricted_saddle: [false; 2],
    };
    let edges =
        vec![edge(0, 1, vec![0, 1], 0.0, 0.0), edge(1, 2, vec![0, 3], 2.0, 0.0), edge(1, 3, vec![1, 3], 4.0, 0.0)];
    SeparatrixGraph::new(vertices, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    use crate::graph::{EndRole, GraphVertex, SeparatrixEdge};
    use crate::singularity::SaddleData;

    fn corner(id: usize, l: i64, m: i64, unstable: bool, pair: (usize, usize), c: usize) -> GraphVertex {
        let mut v = GraphVertex::bare(id, Kind::SaddleCorner);
        v.saddle = Some(SaddleData {
            lambda: w(l, 1),
            mu: w(m, 1),
            weight: w(m, l),
            one_d_axis: 0,
            one_d_unstable: unstable,
            pair,
            transverse: Some(c),
        });
        v
    }

    fn skel(o: usize, e: usize, carrier: Vec<usize>) -> SeparatrixEdge {
        SeparatrixEdge {
            id: 0,
            origin: o,
            end: e,
            edge_type: EdgeType::Skeleton,
            carrier,
            polyline: Vec::new(),
            origin_angle: 0.0,
            end_angle: 0.0,
            origin_role: EndRole::OneDimensional,
            end_role: EndRole::TwoDimensional,
            restricted_saddle: [false; 2],
        }
    }

    #[test]
    fn symmetric_fixture_has_one_connection() {
        let r = detect_infinitesimal_connections(&symmetric_connection_fixture(Q::zero()));
        assert_eq!(r.connections.len(), 1);
        assert_eq!(r.connections[0].steps.len(), 1);
        assert_eq!(r.connections[0].steps[0].exit, StepExit::Landing);
        let r = detect_infinitesimal_connections(&symmetric_connection_fixture(rational::q(1, 100)));
        assert!(r.connections.is_empty());
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
        assert_eq!(r.chains[0].steps[0].exit, StepExit::ZSide);
    }

    #[test]
    fn two_corner_chain_lands() {
        // p0 weight 1 enters p1 on its z-side fence, leaves along p1's 1D
        // variety with weight 1 and lands at p2 whose weight is 1.
        let vertices =
            vec![corner(0, 1, 1, true, (0, 2), 3), corner(1, 1, 2, true, (0, 1), 2), corner(2, 1, 1, false, (0, 1), 4)];
        let g = SeparatrixGraph::new(vertices, vec![skel(0, 1, vec![0, 2]), skel(1, 2, vec![0, 1])]);
        let ch = propagate_chain(&g, 0).unwrap();
        assert_eq!(ch.steps.len(), 2);
        assert_eq!(ch.steps[0].exit, StepExit::OneD);
        assert_eq!(ch.steps[1].rho, w(1, 1));
        assert_eq!(ch.steps[1].exit, StepExit::Landing);
        assert!(ch.connection);
    }

    #[test]
    fn chain_preconditions_and_short_chains() {
        let g = SeparatrixGraph::new(
            vec![corner(0, 1, 2, true, (0, 1), 2), GraphVertex::bare(1, Kind::TransverseNode)],
            vec![skel(0, 1, vec![0, 1])],
        );
        let ch = propagate_chain(&g, 0).unwrap();
        assert_eq!(ch.steps.len(), 1);
        assert_eq!(ch.steps[0].exit, StepExit::End);
        assert!(!ch.connection);
        // The 1D variety must be a skeleton edge.
        let mut t = g.clone();
        t.edges[0].edge_type = EdgeType::Trace;
        assert!(matches!(propagate_chain(&t, 0), Err(Error::InvalidChainStart(_))));
        assert!(matches!(propagate_chain(&g, 1), Err(Error::InvalidChainStart(_))));
        // A transition demanding an absent edge.
        let g2 = SeparatrixGraph::new(
            vec![corner(0, 1, 1, true, (0, 1), 2), corner(1, 1, 2, false, (0, 1), 3)],
            vec![skel(0, 1, vec![0, 1])],
        );
        assert_eq!(propagate_chain(&g2, 0).unwrap_err(), Error::ExitEdgeMissing);
        assert!(detect_infinitesimal_connections(&SeparatrixGraph::default()).connections.is_empty());
    }

    fn w(n: i64, d: i64) -> Weight {
        Weight::ratio(n, d)
    }

    #[test]
    fn forward_examples() {
        let (l, m) = (w(1, 1), w(2, 1));
        assert_eq!(
            transition_forward(&l, &m, &w(3, 1)).unwrap(),
            Transition::Exit { side: Side::YSide, weight: w(1, 1) }
        );
        assert_eq!(
            transition_forward(&l, &m, &w(1, 1)).unwrap(),
            Transition::Exit { side: Side::ZSide, weight: w(1, 1) }
        );
        assert_eq!(transition_forward(&l, &m, &w(2, 1)).unwrap(), Transition::Landing);
        assert_eq!(transition_forward(&l, &w(-1, 1), &w(2, 1)).unwrap_err(), Error::NonPositive);
    }

    #[test]
    fn inverse_examples() {
        let (l, m) = (w(1, 1), w(2, 1));
        assert_eq!(transition_inverse(&l, &m, &w(1, 1), Side::YSide).unwrap(), w(3, 1));
        assert_eq!(transition_inverse(&l, &m, &w(1, 1), Side::ZSide).unwrap(), w(1, 1));
        assert_eq!(transition_inverse(&l, &m, &w(1, 2), Side::ZSide).unwrap(), w(2, 3));
        let Transition::Exit { side, weight } = transition_forward(&l, &m, &w(3, 1)).unwrap() else { panic!() };
        assert_eq!(transition_inverse(&l, &m, &weight, side).unwrap(), w(3, 1));
    }

    fn pos_rational() -> impl Strategy<Value = Weight> {
        (1i64..10_000, 1i64..10_000).prop_map(|(n, d)| w(n, d))
    }

    proptest! {
        #[test]
        fn inversion_is_exact(l in pos_rational(), m in pos_rational(), r in pos_rational()) {
            match transition_forward(&l, &m, &r).unwrap() {
                Transition::Exit { side, weight } => {
                    prop_assert!(weight.is_positive());
                    prop_assert_eq!(transition_inverse(&l, &m, &weight, side).unwrap(), r);
                }
                Transition::Landing => prop_assert_eq!(r, m.div(&l)),
            }
        }

        #[test]
        fn reciprocal_law(rho in 0.2f64..5.0, k in 0.5f64..2.0) {
            let s: Vec<(f64, f64)> = (1..=64).map(|i| {
                let c1 = 1.0 / (10.0 + i as f64 * 15.0);
                (c1, k * c1.powf(rho))
            }).collect();
            let a = estimate_weight(&s).unwrap();
            let swapped: Vec<(f64, f64)> = s.iter().map(|(a, b)| (*b, *a)).collect();
            let b = estimate_weight(&swapped).unwrap();
            prop_assert!((a.rho * b.rho - 1.0).abs() < 1e-6);
            prop_assert_eq!(a.verdict, WeightVerdict::Weight);
        }
    }

    #[test]
    fn estimator_examples() {
        let ts: Vec<f64> = (0..200).map(|i| 10.0 * 100f64.powf(i as f64 / 199.0)).collect();
        let sq: Vec<(f64, f64)> = ts.iter().map(|t| (1.0 / t, 1.0 / (t * t))).collect();
        let e = estimate_weight(&sq).unwrap();
        assert_eq!(e.verdict, WeightVerdict::Weight);
        assert!((e.rho - 2.0).abs() < 1e-3);
        assert!(e.k1 < e.k2);
        let diag: Vec<(f64, f64)> = ts.iter().map(|t| (1.0 / t, 1.0 / t)).collect();
        assert!((estimate_weight(&diag).unwrap().rho - 1.0).abs() < 1e-9);
        let lin: Vec<(f64, f64)> = (0..200).map(|i| 10.0 + i as f64 * 3.0).map(|t| (1.0 / t, (-t).exp())).collect();
        assert_eq!(estimate_weight(&lin).unwrap().verdict, WeightVerdict::Infinite);
        assert_eq!(estimate_weight(&sq[..10]).unwrap_err(), Error::TooFewSamples(10));
    }

    #[test]
    fn oscillating_curve_has_no_weight() {
        let s: Vec<(f64, f64)> = (0..4000)
            .map(|i| 1.0 + i as f64 * 0.05)
            .map(|t: f64| {
                let c2 = (t.sin().powi(2)) * t.powf(-1.0) + (t.cos().powi(2)) * t.powf(-3.0);
                (1.0 / t, c2)
            })
            .collect();
        assert_eq!(estimate_weight(&s).unwrap().verdict, WeightVerdict::None);
    }

    #[test]
    fn reparameterization_does_not_move_the_estimate() {
        let a: Vec<(f64, f64)> = (1..=100).map(|i| i as f64 * 10.0).map(|t| (1.0 / t, t.powf(-2.5))).collect();
        let b: Vec<(f64, f64)> =
            (1..=100).map(|i| (i as f64 * 10.0).powf(1.5)).map(|t| (1.0 / t, t.powf(-2.5))).collect();
        assert!((estimate_weight(&a).unwrap().rho - estimate_weight(&b).unwrap().rho).abs() < 1e-9);
    }

    #[test]
    fn dynamical_consistency() {
        for (l, m, r) in [(1i64, 2i64, 3i64), (1, 2, 1), (2, 3, 5)] {
            let Transition::Exit { side, weight } = transition_forward(&w(l, 1), &w(m, 1), &w(r, 1)).unwrap() else {
                panic!()
            };
            let (s2, samples) = fence_samples(l as f64, m as f64, r as f64, 64, Tolerances::default()).unwrap();
            assert_eq!(side, s2);
            let est = estimate_weight(&samples).unwrap();
            let rel = (est.rho - weight.value()).abs() / weight.value();
            assert!(rel < 0.02, "({l},{m},{r}): {} vs {}", est.rho, weight.value());
        }
    }

    #[test]
    fn weight_serialization() {
        let j = serde_json::to_string(&w(3, 7)).unwrap();
        assert_eq!(j, "\"3/7\"");
        let back: Weight = serde_json::from_str(&j).unwrap();
        assert_eq!(back, w(3, 7));
        assert_eq!(Weight::Float(1.0).compare(&Weight::Float(1.0 + 1e-12)), Ordering::Equal);
        assert!(Weight::Exact(Q::one()).is_exact());
    }
}
