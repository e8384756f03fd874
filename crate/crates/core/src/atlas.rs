//! Polar blow-up of the origin through six directional charts, successive
//! point blow-ups on the divisor, and the corner stratification of the
//! resulting manifold.
//!
//! Every chart is a polynomial map onto an open piece of the previous level:
//! for a step `(c, a, s)` the child coordinates `X` map to
//! `parent_a = c_a + s X_a` and `parent_j = c_j + X_a X_j` (`j != a`), with
//! `X_a >= 0`. Coordinates whose zero plane is a divisor component are
//! constrained to be non-negative, which is how the manifold-with-corners
//! structure shows up locally.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FloatField, Poly, PolyField3};
use crate::rational::{self, to_f64, Q};
use crate::scalar::Scalar;

pub type ChartId = usize;
pub type ComponentId = usize;

pub const DEFAULT_MAX_DEPTH: usize = 8;
const AXES: [char; 3] = ['x', 'y', 'z'];
const REGION_TOL: f64 = 1e-12;

/// One directional blow-up step: center in parent coordinates, radial axis
/// and its sign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowupStep {
    #[serde(with = "rational::serde_q3")]
    pub center: [Q; 3],
    pub axis: usize,
    pub sign: i8,
}

impl BlowupStep {
    fn center_f64(&self) -> [f64; 3] {
        self.center.clone().map(|c| to_f64(&c))
    }

    /// Child coordinates to parent coordinates.
    pub fn ascend<T: Scalar>(&self, p: &[T; 3]) -> [T; 3] {
        let a = self.axis;
        let s = T::from_q(&Q::from_integer(self.sign.into()));
        let mut out = p.clone();
        for j in 0..3 {
            let c = T::from_q(&self.center[j]);
            out[j] = if j == a { c + s.clone() * p[a].clone() } else { c + p[a].clone() * p[j].clone() };
        }
        out
    }

    /// Parent coordinates to child coordinates; `None` when the radial
    /// coordinate would not be strictly positive.
    pub fn descend<T: Scalar>(&self, q: &[T; 3]) -> Option<[T; 3]> {
        let a = self.axis;
        let s = T::from_q(&Q::from_integer(self.sign.into()));
        let ra = s * (q[a].clone() - T::from_q(&self.center[a]));
        if ra.sign() <= 0 {
            return None;
        }
        let mut out = q.clone();
        for j in 0..3 {
            out[j] = if j == a { ra.clone() } else { (q[j].clone() - T::from_q(&self.center[j])) / ra.clone() };
        }
        Some(out)
    }

    /// Transition between two sibling charts blown up at the same center.
    /// Valid on the exceptional divisor as well.
    pub fn sibling<T: Scalar>(&self, to: &BlowupStep, p: &[T; 3]) -> Option<[T; 3]> {
        let (a, s) = (self.axis, self.sign);
        let (b, t) = (to.axis, to.sign);
        if a == b {
            return if s == t { Some(p.clone()) } else { None };
        }
        let tq = T::from_q(&Q::from_integer(t.into()));
        let sq = T::from_q(&Q::from_integer(s.into()));
        let xb = p[b].clone();
        if (tq.clone() * xb.clone()).sign() <= 0 {
            return None;
        }
        let mut out = p.clone();
        for k in 0..3 {
            out[k] = if k == b {
                tq.clone() * p[a].clone() * xb.clone()
            } else if k == a {
                sq.clone() * tq.clone() / xb.clone()
            } else {
                tq.clone() * p[k].clone() / xb.clone()
            };
        }
        Some(out)
    }
}

/// A directional chart with its lifted (strict-transform) field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chart {
    pub id: ChartId,
    pub label: String,
    /// Number of blow-ups composed to reach this chart.
    pub level: usize,
    pub parent: Option<ChartId>,
    pub step: BlowupStep,
    /// Max-norm radius, in parent coordinates around the center, outside of
    /// which this chart is not used.
    pub domain: Option<f64>,
    pub field: PolyField3,
    /// `planes[i] = Some(D)` when the coordinate plane `u_i = 0` is the
    /// divisor component `D`.
    pub planes: [Option<ComponentId>; 3],
    /// Points of this chart that were blown up later.
    #[serde(with = "serde_points")]
    pub excluded: Vec<[Q; 3]>,
    /// Avoidance radius around each excluded point.
    #[serde(default)]
    pub excluded_radius: Vec<f64>,
    /// Orientation relative to the ambient space.
    pub orientation: i8,
    #[serde(skip)]
    compiled: OnceLock<FloatField>,
}

mod serde_points {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[[Q; 3]], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Vec<String>> = v.iter().map(|p| p.iter().map(crate::rational::to_string).collect()).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<[Q; 3]>, D::Error> {
        let raw = Vec::<[String; 3]>::deserialize(d)?;
        raw.into_iter()
            .map(|p| {
                let mut out: [Q; 3] = Default::default();
                for (o, s) in out.iter_mut().zip(p.iter()) {
                    *o = crate::rational::parse(s)
                        .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))?;
                }
                Ok(out)
            })
            .collect()
    }
}

impl Chart {
    pub fn float_field(&self) -> &FloatField {
        self.compiled.get_or_init(|| self.field.compile())
    }

    /// Coordinates constrained to be non-negative.
    pub fn constrained(&self, i: usize) -> bool {
        self.planes[i].is_some()
    }

    pub fn divisor_planes(&self) -> impl Iterator<Item = (usize, ComponentId)> + '_ {
        self.planes.iter().enumerate().filter_map(|(i, c)| c.map(|c| (i, c)))
    }

    pub fn in_region(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|i| !self.constrained(i) || p[i] >= -REGION_TOL)
    }

    pub fn is_excluded(&self, p: &[f64; 3], tol: f64) -> bool {
        self.excluded.iter().any(|c| (0..3).all(|k| (p[k] - to_f64(&c[k])).abs() <= tol))
    }

    /// Divisor planes containing `p` (coordinate exactly or nearly zero).
    pub fn planes_at(&self, p: &[f64; 3], tol: f64) -> Vec<usize> {
        (0..3).filter(|&i| self.constrained(i) && p[i].abs() <= tol).collect()
    }
}

/// A divisor component `D_k` with its creation index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub id: ComponentId,
    /// Position in the fixed component ordering (creation order).
    pub creation_index: usize,
    pub center_chart: Option<ChartId>,
    #[serde(with = "rational::serde_q3")]
    pub center: [Q; 3],
    /// `(chart, local plane index)` incarnations.
    pub incarnations: Vec<(ChartId, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlownUpPoint {
    pub chart: Option<ChartId>,
    #[serde(with = "rational::serde_q3")]
    pub center: [Q; 3],
    pub component: ComponentId,
}

/// Stratum of a divisor point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Plane,
    Angle,
    Corner,
}

impl Stratum {
    pub fn from_plane_count(n: usize) -> Option<Self> {
        match n {
            1 => Some(Self::Plane),
            2 => Some(Self::Angle),
            3 => Some(Self::Corner),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonCurve {
    /// The two components, smaller creation index first.
    pub components: (ComponentId, ComponentId),
    /// `(chart, free axis)`: the curve is the local axis line.
    pub incarnations: Vec<(ChartId, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerPoint {
    pub components: [ComponentId; 3],
    pub incarnations: Vec<(ChartId, [f64; 3])>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub components: Vec<ComponentRecord>,
    pub skeleton_curves: Vec<SkeletonCurve>,
    pub corners: Vec<CornerPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupAtlas {
    pub original: PolyField3,
    pub charts: Vec<Chart>,
    pub components: Vec<ComponentRecord>,
    pub history: Vec<BlownUpPoint>,
    pub max_depth: usize,
}

/// Strict transform of `g` (already centered) in the directional chart
/// `(axis, sign)`, normalized by `X_a^(m-1)`.
fn directional_lift(g: &PolyField3, m: u32, axis: usize, sign: i8) -> Result<PolyField3> {
    let a = axis;
    let sub: [Poly; 3] = [0, 1, 2].map(|k| g.components[k].blowup_substitute(a, sign));
    let s = Q::from_integer(sign.into());
    let radial = sub[a].scale(&s);
    let mut comps: [Poly; 3] = Default::default();
    for j in 0..3 {
        if j == a {
            comps[j] = radial.div_var(a, m - 1).ok_or(Error::Dicritical)?;
        } else {
            let num = &sub[j] - &(&Poly::var(j) * &radial);
            comps[j] = num.div_var(a, m).ok_or(Error::Dicritical)?;
        }
    }
    // Divisor must be invariant and not made of equilibria.
    if !comps[a].divisible_by_var(a, 1) {
        return Err(Error::Dicritical);
    }
    if comps.iter().all(|c| c.divisible_by_var(a, 1)) {
        return Err(Error::Dicritical);
    }
    Ok(PolyField3::new(comps))
}

fn axis_label(axis: usize, sign: i8) -> String {
    format!("{}{}", AXES[axis], if sign > 0 { '+' } else { '-' })
}

impl BlowupAtlas {
    pub fn chart(&self, id: ChartId) -> Result<&Chart> {
        self.charts.get(id).ok_or(Error::UnknownChart(id))
    }

    pub fn level1_charts(&self) -> impl Iterator<Item = &Chart> {
        self.charts.iter().filter(|c| c.parent.is_none())
    }

    pub fn depth(&self) -> usize {
        self.history.len()
    }

    /// Chart ids from `id` up to its level-one ancestor.
    pub fn ancestors(&self, id: ChartId) -> Vec<ChartId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.charts[cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    fn same_center(&self, a: ChartId, b: ChartId) -> bool {
        let (ca, cb) = (&self.charts[a], &self.charts[b]);
        ca.parent == cb.parent && ca.step.center == cb.step.center
    }

    /// Whether `p` lies inside the chart's own usage domain.
    pub fn in_domain<T: Scalar>(&self, chart: ChartId, p: &[T; 3]) -> bool {
        let c = &self.charts[chart];
        match c.domain {
            None => true,
            Some(r) => {
                let q = c.step.ascend(p);
                let cf = c.step.center_f64();
                (0..3).all(|k| (q[k].value() - cf[k]).abs() < r)
            }
        }
    }

    fn descend_into<T: Scalar>(&self, chart: ChartId, q: &[T; 3]) -> Option<[T; 3]> {
        let p = self.charts[chart].step.descend(q)?;
        if !self.in_domain(chart, &p) {
            return None;
        }
        Some(p)
    }

    /// Image of `p` under the transition from one chart to another, or
    /// `None` outside the overlap.
    pub fn chart_transition<T: Scalar>(&self, from: ChartId, to: ChartId, p: &[T; 3]) -> Option<[T; 3]> {
        if from >= self.charts.len() || to >= self.charts.len() {
            return None;
        }
        if from == to {
            return Some(p.clone());
        }
        let up = self.ancestors(from);
        let down = self.ancestors(to);
        let down_set: BTreeSet<ChartId> = down.iter().copied().collect();
        let lca = up.iter().copied().find(|c| down_set.contains(c));

        let mut cur = p.clone();
        let result = match lca {
            Some(l) if l == from => {
                // `to` lies below `from`.
                let idx = down.iter().position(|&c| c == l).unwrap();
                for &c in down[..idx].iter().rev() {
                    cur = self.descend_into(c, &cur)?;
                }
                cur
            }
            Some(l) if l == to => {
                let idx = up.iter().position(|&c| c == l).unwrap();
                for &c in &up[..idx] {
                    cur = self.charts[c].step.ascend(&cur);
                }
                cur
            }
            _ => {
                let ia = match lca {
                    Some(l) => up.iter().position(|&c| c == l).unwrap() - 1,
                    None => up.len() - 1,
                };
                let ib = match lca {
                    Some(l) => down.iter().position(|&c| c == l).unwrap() - 1,
                    None => down.len() - 1,
                };
                for &c in &up[..ia] {
                    cur = self.charts[c].step.ascend(&cur);
                }
                let (ca, cb) = (up[ia], down[ib]);
                if self.same_center(ca, cb) {
                    cur = self.charts[ca].step.sibling(&self.charts[cb].step, &cur)?;
                    if !self.in_domain(cb, &cur) {
                        return None;
                    }
                } else {
                    cur = self.charts[ca].step.ascend(&cur);
                    cur = self.descend_into(cb, &cur)?;
                }
                for &c in down[..ib].iter().rev() {
                    cur = self.descend_into(c, &cur)?;
                }
                cur
            }
        };
        let target = &self.charts[to];
        let vals = result.clone().map(|v| v.value());
        if !target.in_region(&vals) {
            return None;
        }
        if T::is_exact() {
            let exact_hit =
                target.excluded.iter().any(|c| (0..3).all(|k| (result[k].clone() - T::from_q(&c[k])).sign() == 0));
            if exact_hit {
                return None;
            }
        } else if target.is_excluded(&vals, 1e-12) {
            return None;
        }
        Some(result)
    }

    /// Point in the original coordinates of R^3.
    pub fn to_original(&self, chart: ChartId, p: [f64; 3]) -> [f64; 3] {
        let mut cur = p;
        for c in self.ancestors(chart) {
            cur = self.charts[c].step.ascend(&cur);
        }
        cur
    }

    /// Coordinates in the level-one ancestor chart.
    pub fn to_level1(&self, chart: ChartId, p: [f64; 3]) -> (ChartId, [f64; 3]) {
        let anc = self.ancestors(chart);
        let mut cur = p;
        for &c in &anc[..anc.len() - 1] {
            cur = self.charts[c].step.ascend(&cur);
        }
        (*anc.last().unwrap(), cur)
    }

    /// Projection of a chart point onto the first-blow-up sphere of
    /// directions.
    pub fn sphere_direction(&self, chart: ChartId, p: [f64; 3]) -> [f64; 3] {
        let (c1, q) = self.to_level1(chart, p);
        let step = &self.charts[c1].step;
        let mut d = q;
        d[step.axis] = step.sign as f64;
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        [d[0] / n, d[1] / n, d[2] / n]
    }

    /// Chart whose coordinates represent a level-one direction best.
    pub fn level1_chart_for_direction(&self, u: [f64; 3]) -> (ChartId, [f64; 3]) {
        let a = (0..3).max_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap();
        let s: i8 = if u[a] >= 0.0 { 1 } else { -1 };
        let id = self
            .level1_charts()
            .find(|c| c.step.axis == a && c.step.sign == s)
            .map(|c| c.id)
            .expect("six level-one charts");
        let mut p = [0.0; 3];
        for j in 0..3 {
            p[j] = if j == a { 0.0 } else { u[j] / (s as f64 * u[a]) };
        }
        (id, p)
    }

    /// Max-abs coordinate size used to pick well-conditioned charts.
    pub fn chart_quality(&self, chart: ChartId, p: &[f64; 3]) -> f64 {
        let ch = &self.charts[chart];
        p.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            + if ch.excluded.iter().enumerate().any(|(i, c)| {
                let r = ch.excluded_radius.get(i).copied().unwrap_or(EXCLUSION_RADIUS);
                (0..3).map(|k| (p[k] - to_f64(&c[k])).abs()).fold(0.0, f64::max) < r
            }) {
                f64::INFINITY
            } else {
                0.0
            }
    }

    /// Among all charts containing the point, the one with the smallest
    /// coordinates that keeps away from blown-up centers.
    pub fn best_chart(&self, chart: ChartId, p: &[f64; 3]) -> (ChartId, [f64; 3]) {
        let own = if self.in_domain(chart, p) { self.chart_quality(chart, p) } else { f64::INFINITY };
        let mut best = (chart, *p, own);
        for c in 0..self.charts.len() {
            if c == chart {
                continue;
            }
            if let Some(q) = self.chart_transition(chart, c, p) {
                let score = self.chart_quality(c, &q);
                if score < best.2 - 1e-12 {
                    best = (c, q, score);
                }
            }
        }
        (best.0, best.1)
    }

    /// Six-chart polar blow-up of the origin.
    pub fn polar_blowup(field: &PolyField3) -> Result<Self> {
        Self::polar_blowup_with_depth(field, DEFAULT_MAX_DEPTH)
    }

    pub fn polar_blowup_with_depth(field: &PolyField3, max_depth: usize) -> Result<Self> {
        let m = field.vanishing_order()?;
        if m == 0 {
            return Err(Error::NotAnEquilibrium);
        }
        let origin: [Q; 3] = Default::default();
        let mut charts = Vec::new();
        let mut incarnations = Vec::new();
        for axis in 0..3 {
            for sign in [1i8, -1] {
                let lifted = directional_lift(field, m, axis, sign)?;
                let id = charts.len();
                let mut planes = [None; 3];
                planes[axis] = Some(0);
                incarnations.push((id, axis));
                charts.push(Chart {
                    id,
                    label: axis_label(axis, sign),
                    level: 1,
                    parent: None,
                    step: BlowupStep { center: origin.clone(), axis, sign },
                    domain: None,
                    field: lifted,
                    planes,
                    excluded: Vec::new(),
                    excluded_radius: Vec::new(),
                    orientation: sign,
                    compiled: OnceLock::new(),
                });
            }
        }
        let comp =
            ComponentRecord { id: 0, creation_index: 0, center_chart: None, center: origin.clone(), incarnations };
        Ok(Self {
            original: field.clone(),
            charts,
            components: vec![comp],
            history: vec![BlownUpPoint { chart: None, center: origin, component: 0 }],
            max_depth,
        })
    }

    /// Blows up a singular divisor point of one chart.
    pub fn point_blowup(&self, chart_id: ChartId, center: &[Q; 3]) -> Result<Self> {
        let chart = self.chart(chart_id)?;
        let cf = center.clone().map(|c| to_f64(&c));
        let on_divisor = chart.divisor_planes().any(|(i, _)| center[i].is_zero());
        let in_region = (0..3).all(|i| !chart.constrained(i) || !center[i].is_negative());
        if !on_divisor || !in_region || chart.excluded.iter().any(|c| c == center) || !self.in_domain(chart_id, &cf) {
            return Err(Error::CenterNotOnDivisor);
        }
        if chart.field.eval_q(center).iter().any(|v| !v.is_zero()) {
            return Err(Error::CenterNotSingular);
        }
        if self.history.len() >= self.max_depth {
            return Err(Error::ReductionNotReached);
        }
        let g = chart.field.translate(center);
        let m = g.vanishing_order()?;
        let new_comp = self.components.len();

        // Keep the new charts inside a ball that avoids other divisor planes
        // and other blown-up centers of this chart.
        let mut radius = 1.0f64;
        for (i, _) in chart.divisor_planes() {
            if !center[i].is_zero() {
                radius = radius.min(0.5 * cf[i].abs());
            }
        }
        for e in &chart.excluded {
            let d = (0..3).map(|k| (to_f64(&e[k]) - cf[k]).abs()).fold(0.0, f64::max);
            radius = radius.min(0.5 * d);
        }
        if let Some(r) = chart.domain {
            // Stay inside the parent chart's own domain too.
            let pc = chart.step.ascend(&cf);
            let pcen = chart.step.center_f64();
            let used = (0..3).map(|k| (pc[k] - pcen[k]).abs()).fold(0.0, f64::max);
            radius = radius.min(0.5 * (r - used).max(0.0)).max(1e-6);
        }

        let mut next = self.clone();
        let mut incarnations = Vec::new();
        let k = self.history.len();
        for axis in 0..3 {
            for sign in [1i8, -1] {
                if sign < 0 && chart.constrained(axis) && center[axis].is_zero() {
                    continue;
                }
                let lifted = directional_lift(&g, m, axis, sign)?;
                let id = next.charts.len();
                let mut planes = [None; 3];
                for j in 0..3 {
                    if j == axis {
                        planes[j] = Some(new_comp);
                    } else if let Some(c) = chart.planes[j] {
                        if center[j].is_zero() {
                            planes[j] = Some(c);
                        }
                    }
                }
                for (j, c) in planes.iter().enumerate() {
                    if c.is_some() && j != axis {
                        next.components[c.unwrap()].incarnations.push((id, j));
                    }
                }
                incarnations.push((id, axis));
                next.charts.push(Chart {
                    id,
                    label: format!("{}/{}@{}", chart.label, axis_label(axis, sign), k),
                    level: chart.level + 1,
                    parent: Some(chart_id),
                    step: BlowupStep { center: center.clone(), axis, sign },
                    domain: Some(radius),
                    field: lifted,
                    planes,
                    excluded: Vec::new(),
                    excluded_radius: Vec::new(),
                    orientation: chart.orientation * sign,
                    compiled: OnceLock::new(),
                });
            }
        }
        // Puncture every pre-existing chart that contains the center.
        for c in 0..self.charts.len() {
            let image = if c == chart_id { Some(center.clone()) } else { self.chart_transition(chart_id, c, center) };
            if let Some(img) = image {
                next.charts[c].excluded.push(img);
                next.charts[c].excluded_radius.push(EXCLUSION_RADIUS.min(0.5 * radius));
            }
        }
        next.components.push(ComponentRecord {
            id: new_comp,
            creation_index: new_comp,
            center_chart: Some(chart_id),
            center: center.clone(),
            incarnations,
        });
        next.history.push(BlownUpPoint { chart: Some(chart_id), center: center.clone(), component: new_comp });
        Ok(next)
    }

    /// Strata of the divisor with their chart incarnations.
    pub fn stratify(&self) -> Strata {
        let mut curves: BTreeMap<(ComponentId, ComponentId), Vec<(ChartId, usize)>> = BTreeMap::new();
        let mut corners: Vec<CornerPoint> = Vec::new();
        for c in &self.charts {
            let planes: Vec<(usize, ComponentId)> = c.divisor_planes().collect();
            for x in 0..planes.len() {
                for y in x + 1..planes.len() {
                    let (i, di) = planes[x];
                    let (j, dj) = planes[y];
                    let free = 3 - i - j;
                    let key = (di.min(dj), di.max(dj));
                    curves.entry(key).or_default().push((c.id, free));
                }
            }
            if planes.len() == 3 && !c.is_excluded(&[0.0; 3], 1e-12) {
                let mut comps = [planes[0].1, planes[1].1, planes[2].1];
                comps.sort_unstable();
                // Deduplicate against corners already seen in other charts.
                let found = corners.iter_mut().find(|k| {
                    k.components == comps
                        && k.incarnations.iter().any(|(kc, kp)| {
                            self.chart_transition(*kc, c.id, kp)
                                .map(|q| q.iter().all(|v| v.abs() < 1e-9))
                                .unwrap_or(false)
                        })
                });
                match found {
                    Some(k) => k.incarnations.push((c.id, [0.0; 3])),
                    None => corners.push(CornerPoint { components: comps, incarnations: vec![(c.id, [0.0; 3])] }),
                }
            }
        }
        Strata {
            components: self.components.clone(),
            skeleton_curves: curves
                .into_iter()
                .map(|(components, incarnations)| SkeletonCurve { components, incarnations })
                .collect(),
            corners,
        }
    }

    /// Stratum of a divisor point given in chart coordinates.
    pub fn classify_point(&self, chart: ChartId, p: &[f64; 3]) -> Option<Stratum> {
        let c = self.charts.get(chart)?;
        Stratum::from_plane_count(c.planes_at(p, 1e-12).len())
    }

    /// DOT graph of component adjacency.
    pub fn component_dot(&self) -> String {
        let strata = self.stratify();
        let mut out = String::from("graph components {\n");
        for c in &strata.components {
            let _ = writeln!(out, "  D{} [label=\"D{} (#{})\"];", c.id, c.id, c.creation_index);
        }
        for s in &strata.skeleton_curves {
            let _ = writeln!(out, "  D{} -- D{};", s.components.0, s.components.1);
        }
        out.push_str("}\n");
        out
    }
}

/// Charts whose blown-up centers are closer than this (max-norm, chart
/// coordinates) are avoided during navigation.
pub const EXCLUSION_RADIUS: f64 = 0.25;
