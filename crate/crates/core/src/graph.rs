//! The oriented graph of divisor separatrices, its right-hand cycles and
//! the limit-set prediction drawn from it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::TAU;
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{BlowupAtlas, Chart, ChartId, ComponentId};
use crate::error::{Error, Result};
use crate::integrate::{Stepper, Tolerances};
use crate::singularity::{EquilibriumRecord, Kind, SaddleData};
use crate::weights::Orientation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub r_land: f64,
    pub eps_launch: f64,
    /// Ratio bound of unstable to stable eigen-coordinates for landing.
    pub cone_ratio: f64,
    pub max_steps: usize,
    pub t_max: f64,
    /// Largest displacement per step in chart coordinates.
    pub arc_cap: f64,
    /// Chart quality above which the tracer switches charts.
    pub switch_quality: f64,
    /// Two traces between the same vertices are one edge when their end
    /// angles agree to this many radians.
    pub dedup_angle: f64,
    pub tol: Tolerances,
    pub periodic_search: bool,
    pub periodic_settle: f64,
    pub periodic_max_laps: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            r_land: 1e-3,
            eps_launch: 1e-4,
            cone_ratio: 0.1,
            max_steps: 200_000,
            t_max: 1e4,
            arc_cap: 0.02,
            switch_quality: 2.0,
            dedup_angle: 0.05,
            tol: Tolerances::default(),
            periodic_search: true,
            periodic_settle: 10.0,
            periodic_max_laps: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeType {
    Skeleton,
    Trace,
}

impl EdgeType {
    pub fn name(self) -> &'static str {
        match self {
            EdgeType::Skeleton => "skeleton",
            EdgeType::Trace => "trace",
        }
    }
}

/// How an edge meets an endpoint of the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndRole {
    /// Along the one-dimensional invariant variety of a saddle.
    OneDimensional,
    /// Inside the two-dimensional variety.
    TwoDimensional,
    Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPoint {
    pub chart: ChartId,
    pub coords: [f64; 3],
    pub sphere: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixEdge {
    pub id: usize,
    pub origin: usize,
    pub end: usize,
    pub edge_type: EdgeType,
    /// One component for trace edges, the two meeting components for
    /// skeleton edges (sorted).
    pub carrier: Vec<ComponentId>,
    pub polyline: Vec<PolyPoint>,
    /// Link angles of the two ends at their vertices.
    pub origin_angle: f64,
    pub end_angle: f64,
    pub origin_role: EndRole,
    pub end_role: EndRole,
    /// Whether each endpoint is a saddle of the field restricted to the
    /// carrier component.
    pub restricted_saddle: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphVertex {
    pub id: usize,
    pub kind: Kind,
    pub saddle: Option<SaddleData>,
    pub chart: ChartId,
    pub position: [f64; 3],
    pub direction: [f64; 3],
    /// Real parts of the eigenvalues transverse to each divisor plane.
    pub transverse: Vec<f64>,
}

impl GraphVertex {
    pub fn from_record(r: &EquilibriumRecord) -> Self {
        Self {
            id: r.id,
            kind: r.kind,
            saddle: r.saddle.clone(),
            chart: r.chart,
            position: r.position,
            direction: r.direction,
            transverse: r.transverse.iter().map(|e| e.re).collect(),
        }
    }

    /// Vertex without geometry, for combinatorial fixtures.
    pub fn bare(id: usize, kind: Kind) -> Self {
        Self {
            id,
            kind,
            saddle: None,
            chart: 0,
            position: [0.0; 3],
            direction: [0.0, 0.0, 1.0],
            transverse: Vec::new(),
        }
    }

    pub fn weight_label(&self) -> Option<String> {
        self.saddle.as_ref().map(|s| s.weight.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeEnd {
    pub edge: usize,
    pub outgoing: bool,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub id: usize,
    pub component: ComponentId,
    pub polyline: Vec<PolyPoint>,
    /// First-return multiplier in forward time.
    pub multiplier: f64,
    pub attracting: bool,
    pub period: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixGraph {
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<SeparatrixEdge>,
    /// Counterclockwise order of edge ends around each vertex.
    pub rotation: Vec<Vec<EdgeEnd>>,
    pub periodic_orbits: Vec<PeriodicOrbit>,
    pub warnings: Vec<String>,
}

fn norm_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Counterclockwise turn from `a` to `b`, in `[0, 2pi)`.
fn ccw(a: f64, b: f64) -> f64 {
    norm_angle(b - a)
}

impl SeparatrixGraph {
    /// Assembles a graph and its rotation system. Edge ids are reassigned
    /// to positions.
    pub fn new(vertices: Vec<GraphVertex>, mut edges: Vec<SeparatrixEdge>) -> Self {
        for (i, e) in edges.iter_mut().enumerate() {
            e.id = i;
            e.origin_angle = norm_angle(e.origin_angle);
            e.end_angle = norm_angle(e.end_angle);
        }
        let mut rotation: Vec<Vec<EdgeEnd>> = vec![Vec::new(); vertices.len()];
        for e in &edges {
            rotation[e.origin].push(EdgeEnd { edge: e.id, outgoing: true, angle: e.origin_angle });
            rotation[e.end].push(EdgeEnd { edge: e.id, outgoing: false, angle: e.end_angle });
        }
        for r in &mut rotation {
            r.sort_by(|a, b| a.angle.total_cmp(&b.angle).then(a.edge.cmp(&b.edge)).then(b.outgoing.cmp(&a.outgoing)));
        }
        Self { vertices, edges, rotation, periodic_orbits: Vec::new(), warnings: Vec::new() }
    }

    /// Combinatorial graph: `(origin, end, origin_angle, end_angle)` per
    /// edge, all trace edges on component 0.
    pub fn from_abstract(kinds: &[Kind], edges: &[(usize, usize, f64, f64)]) -> Self {
        let vertices = kinds.iter().enumerate().map(|(i, k)| GraphVertex::bare(i, *k)).collect();
        let edges = edges
            .iter()
            .map(|&(o, e, ao, ae)| SeparatrixEdge {
                id: 0,
                origin: o,
                end: e,
                edge_type: EdgeType::Trace,
                carrier: vec![0],
                polyline: Vec::new(),
                origin_angle: ao,
                end_angle: ae,
                origin_role: EndRole::TwoDimensional,
                end_role: EndRole::TwoDimensional,
                restricted_saddle: [false; 2],
            })
            .collect();
        Self::new(vertices, edges)
    }

    pub fn vertex(&self, id: usize) -> Result<&GraphVertex> {
        self.vertices.get(id).ok_or_else(|| Error::Invalid(format!("no vertex {id}")))
    }

    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.origin, e.end)).collect()
    }

    pub fn is_cyclic(&self) -> bool {
        is_cyclic(self.vertices.len(), &self.arcs())
    }

    /// Edges lying on at least one directed cycle.
    pub fn cyclic_core(&self) -> Vec<usize> {
        let scc = scc_index(self.vertices.len(), &self.arcs());
        self.edges.iter().filter(|e| scc[e.origin] == scc[e.end]).map(|e| e.id).collect()
    }
}

fn scc_index(n: usize, arcs: &[(usize, usize)]) -> Vec<usize> {
    let mut g = DiGraph::<(), ()>::with_capacity(n, arcs.len());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for &(a, b) in arcs {
        g.add_edge(nodes[a], nodes[b], ());
    }
    let mut idx = vec![0; n];
    for (k, comp) in tarjan_scc(&g).into_iter().enumerate() {
        for v in comp {
            idx[v.index()] = k;
        }
    }
    idx
}

/// True iff every edge lies on a directed cycle (for a connected graph:
/// strong connectivity).
pub fn is_cyclic(n: usize, arcs: &[(usize, usize)]) -> bool {
    let scc = scc_index(n, arcs);
    arcs.iter().all(|&(a, b)| scc[a] == scc[b])
}

/// Partition characterization, for testing: for every split of the vertex
/// set into nonempty `T`, `T'` some edge starts in `T` and ends in `T'`.
/// Exponential in `n`.
pub fn is_cyclic_by_partitions(n: usize, arcs: &[(usize, usize)]) -> bool {
    assert!(n < 32, "partition oracle is exponential");
    let full = (1u32 << n) - 1;
    (1..full).all(|t| arcs.iter().any(|&(a, b)| t & (1 << a) != 0 && t & (1 << b) == 0))
}

/// Sign of the permutation `(i, j, k)` of `(0, 1, 2)`.
fn perm_sign(i: usize, j: usize, k: usize) -> f64 {
    if (i + 1) % 3 == j && (j + 1) % 3 == k {
        1.0
    } else {
        debug_assert!(i != j && j != k && i != k);
        -1.0
    }
}

/// Angle of the tangent `v` at the divisor point `p` in the unfolded link
/// of the divisor, counterclockwise for the outward orientation.
pub fn link_angle(chart: &Chart, p: &[f64; 3], v: &[f64; 3]) -> f64 {
    let zs = chart.planes_at(p, 1e-9);
    let o = chart.orientation as f64;
    let raw = match zs.len() {
        1 => {
            let k = zs[0];
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let (a, b) = (a.min(b), a.max(b));
            -perm_sign(k, a, b) * v[b].atan2(v[a])
        }
        2 => {
            let (i, j) = (zs[0], zs[1]);
            let f = 3 - i - j;
            // The two half-planes unfold into one: D_i above, D_j below.
            -perm_sign(i, f, j) * (v[j] - v[i]).atan2(v[f])
        }
        3 => {
            let k = (0..3).min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
            let q = |x: f64, y: f64| (4.0 / 3.0) * y.max(0.0).atan2(x.max(0.0));
            let t = match k {
                2 => q(v[0], v[1]),
                0 => TAU / 3.0 + q(v[1], v[2]),
                _ => 2.0 * TAU / 3.0 + q(v[2], v[0]),
            };
            -t
        }
        _ => v[1].atan2(v[0]),
    };
    norm_angle(o * raw)
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Real([(f64, [f64; 2]); 2]),
    Complex(f64),
    Repeated(f64),
}

fn block2(m: [[f64; 2]; 2]) -> Block {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr / 4.0 - det;
    let scale = 1e-12 * (a.abs() + b.abs() + c.abs() + d.abs()).max(1e-300);
    if disc < -scale * scale.max(1.0) {
        return Block::Complex(tr / 2.0);
    }
    let s = disc.max(0.0).sqrt();
    if s <= scale {
        return Block::Repeated(tr / 2.0);
    }
    let vec = |l: f64| {
        let v1 = [b, l - a];
        let v2 = [l - d, c];
        let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) { v1 } else { v2 };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    };
    let (l1, l2) = (tr / 2.0 - s, tr / 2.0 + s);
    Block::Real([(l1, vec(l1)), (l2, vec(l2))])
}

fn sub_block(j: &[[f64; 3]; 3], a: usize, b: usize) -> [[f64; 2]; 2] {
    [[j[a][a], j[a][b]], [j[b][a], j[b][b]]]
}

/// Coordinates of `d` in the eigenbasis `(v1, v2)`.
fn coords2(d: [f64; 2], v1: [f64; 2], v2: [f64; 2]) -> [f64; 2] {
    let det = v1[0] * v2[1] - v1[1] * v2[0];
    [(d[0] * v2[1] - d[1] * v2[0]) / det, (v1[0] * d[1] - v1[1] * d[0]) / det]
}

fn maxdist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
}

fn role_for(eigs: &[f64; 3], lambda: f64) -> EndRole {
    match eigs.iter().filter(|e| e.signum() == lambda.signum()).count() {
        1 => EndRole::OneDimensional,
        3 => EndRole::Node,
        _ => EndRole::TwoDimensional,
    }
}

const ZERO_PLANE: f64 = 1e-14;

fn zero_axes(chart: &Chart, x: &[f64; 3]) -> Vec<usize> {
    chart.planes_at(x, ZERO_PLANE)
}

struct Landing {
    vertex: usize,
    chart: ChartId,
    x: [f64; 3],
}

struct FlowEnd {
    landed: Option<Landing>,
    chart: ChartId,
    x: [f64; 3],
    poly: Vec<PolyPoint>,
}

enum Control {
    Continue,
    Stop,
}

struct Tracer<'a> {
    atlas: &'a BlowupAtlas,
    eqs: &'a [EquilibriumRecord],
    cfg: &'a TraceConfig,
    by_chart: Vec<Vec<(usize, [f64; 3])>>,
}

impl<'a> Tracer<'a> {
    fn new(atlas: &'a BlowupAtlas, eqs: &'a [EquilibriumRecord], cfg: &'a TraceConfig) -> Self {
        let mut by_chart = vec![Vec::new(); atlas.charts.len()];
        for e in eqs {
            for inc in &e.incarnations {
                by_chart[inc.chart].push((e.id, inc.position));
            }
        }
        Self { atlas, eqs, cfg, by_chart }
    }

    fn point(&self, chart: ChartId, x: [f64; 3]) -> PolyPoint {
        PolyPoint { chart, coords: x, sphere: self.atlas.sphere_direction(chart, x) }
    }

    fn jacobian(&self, chart: ChartId, x: [f64; 3]) -> [[f64; 3]; 3] {
        self.atlas.charts[chart].float_field().jacobian(x)
    }

    /// Whether displacement `d` from the equilibrium at `pos` lies in its
    /// stable cone for time direction `dir`.
    fn in_cone(&self, chart: ChartId, pos: [f64; 3], x: &[f64; 3], dir: f64) -> bool {
        let ch = &self.atlas.charts[chart];
        let zs = zero_axes(ch, x);
        let free: Vec<usize> = (0..3).filter(|k| !zs.contains(k)).collect();
        let j = self.jacobian(chart, pos);
        match free.len() {
            1 => j[free[0]][free[0]] * dir < 0.0,
            2 => {
                let (a, b) = (free[0], free[1]);
                match block2(sub_block(&j, a, b)) {
                    Block::Complex(re) | Block::Repeated(re) => re * dir < 0.0,
                    Block::Real([(l1, v1), (l2, v2)]) => {
                        let c = coords2([x[a] - pos[a], x[b] - pos[b]], v1, v2);
                        let (mut st, mut un) = (0.0f64, 0.0f64);
                        for (l, ci) in [(l1, c[0]), (l2, c[1])] {
                            if l * dir < 0.0 {
                                st = st.max(ci.abs());
                            } else {
                                un = un.max(ci.abs());
                            }
                        }
                        st > 0.0 && un <= self.cfg.cone_ratio * st
                    }
                }
            }
            _ => true,
        }
    }

    fn check_landing(
        &self,
        chart: ChartId,
        x: &[f64; 3],
        dir: f64,
        origin: Option<usize>,
        left: bool,
    ) -> Result<Option<usize>> {
        let mut hits = Vec::new();
        for &(v, pos) in &self.by_chart[chart] {
            if Some(v) == origin && !left {
                continue;
            }
            if maxdist(x, &pos) < self.cfg.r_land && self.in_cone(chart, pos, x, dir) {
                hits.push(v);
            }
        }
        match hits.len() {
            0 => Ok(None),
            1 => Ok(Some(hits[0])),
            _ => Err(Error::LandingAmbiguous),
        }
    }

    fn needs_switch(&self, chart: ChartId, x: &[f64; 3]) -> bool {
        !self.atlas.in_domain(chart, x) || self.atlas.chart_quality(chart, x) > self.cfg.switch_quality
    }

    /// Integrates the lifted field with chart switching, stopping at a
    /// landing (when `land`), on `t_max`, or when `hook` says so.
    #[allow(clippy::too_many_arguments)]
    fn flow(
        &self,
        chart: ChartId,
        x0: [f64; 3],
        dir: f64,
        origin: Option<usize>,
        land: bool,
        t_max: f64,
        hook: &mut dyn FnMut(ChartId, &[f64; 3], f64) -> Control,
    ) -> Result<FlowEnd> {
        let (mut c, mut x) = (chart, x0);
        let mut poly = vec![self.point(c, x)];
        let mut st = Stepper::new(self.cfg.tol, 1e-3);
        let mut t = 0.0;
        let mut left = origin.is_none();
        for _ in 0..self.cfg.max_steps {
            let ff = self.atlas.charts[c].float_field();
            let f = |y: &[f64; 3]| ff.eval(*y);
            let speed = f(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let cap = (self.cfg.arc_cap / speed.max(1e-300)).min(t_max - t).max(1e-12);
            let step = st.advance(&f, &x, dir, cap).ok_or(Error::StepLimitExceeded)?;
            t += step.h.abs();
            x = step.y;
            if self.needs_switch(c, &x) {
                let (c2, x2) = self.atlas.best_chart(c, &x);
                if !self.atlas.in_domain(c2, &x2) || self.atlas.chart_quality(c2, &x2) > 1e8 {
                    return Err(Error::SeparatrixEscaped);
                }
                if c2 != c {
                    st.h = st.h.min(1e-3);
                }
                c = c2;
                x = x2;
                poly.push(self.point(c, x));
            } else if poly.last().map(|p| maxdist(&p.coords, &x) > 0.01).unwrap_or(true) {
                poly.push(self.point(c, x));
            }
            if !left {
                if let Some(o) = origin {
                    let far = match self.eqs[o].position_in(c) {
                        Some(pos) => maxdist(&x, &pos) > self.cfg.r_land,
                        None => true,
                    };
                    left = far;
                }
            }
            if land {
                if let Some(v) = self.check_landing(c, &x, dir, origin, left)? {
                    poly.push(self.point(c, x));
                    return Ok(FlowEnd { landed: Some(Landing { vertex: v, chart: c, x }), chart: c, x, poly });
                }
            }
            if let Control::Stop = hook(c, &x, t) {
                poly.push(self.point(c, x));
                return Ok(FlowEnd { landed: None, chart: c, x, poly });
            }
            if t >= t_max {
                return Ok(FlowEnd { landed: None, chart: c, x, poly });
            }
        }
        Err(Error::StepLimitExceeded)
    }

    /// Angle and role of the landing end at vertex `q`.
    fn landing_end(&self, q: usize, l: &Landing) -> (f64, EndRole, bool) {
        let rec = &self.eqs[q];
        let ch = &self.atlas.charts[rec.chart];
        let y = self.atlas.chart_transition(l.chart, rec.chart, &l.x).unwrap_or(l.x);
        let v = [y[0] - rec.position[0], y[1] - rec.position[1], y[2] - rec.position[2]];
        let angle = link_angle(ch, &rec.position, &v);
        let eigs = [rec.eigenvalues[0].re, rec.eigenvalues[1].re, rec.eigenvalues[2].re];
        let zs = zero_axes(ch, &y);
        let free: Vec<usize> = (0..3).filter(|k| !zs.contains(k)).collect();
        match free.len() {
            1 => (angle, role_for(&eigs, rec.jacobian[free[0]][free[0]]), false),
            2 => match block2(sub_block(&rec.jacobian, free[0], free[1])) {
                Block::Real([(l1, v1), (l2, v2)]) => {
                    let c = coords2([v[free[0]], v[free[1]]], v1, v2);
                    let l = if c[0].abs() >= c[1].abs() { l1 } else { l2 };
                    (angle, role_for(&eigs, l), l1 * l2 < 0.0)
                }
                Block::Complex(re) | Block::Repeated(re) => (angle, role_for(&eigs, re), false),
            },
            _ => (angle, EndRole::Node, false),
        }
    }

    fn launches(&self, rec: &EquilibriumRecord) -> Vec<Launch> {
        let ch = &self.atlas.charts[rec.chart];
        let x0 = rec.position;
        let j = rec.jacobian;
        let eigs = [rec.eigenvalues[0].re, rec.eigenvalues[1].re, rec.eigenvalues[2].re];
        let plane_axes: Vec<usize> = rec.planes.iter().map(|p| p.0).collect();
        let eps = self.cfg.eps_launch;
        let mut out = Vec::new();
        let mut push = |w: [f64; 3], lambda: f64, kind: EdgeType, carrier: Vec<ComponentId>, rs: bool| {
            for s in [1.0, -1.0] {
                let v = w.map(|c| s * c);
                let start = [x0[0] + eps * v[0], x0[1] + eps * v[1], x0[2] + eps * v[2]];
                if !ch.in_region(&start) || (0..3).any(|k| ch.constrained(k) && start[k] < 0.0) {
                    continue;
                }
                out.push(Launch {
                    start,
                    dir: lambda.signum(),
                    angle: link_angle(ch, &x0, &v),
                    role: role_for(&eigs, lambda),
                    kind,
                    carrier: carrier.clone(),
                    restricted_saddle: rs,
                });
            }
        };
        // Separatrices inside each component through the point.
        for &(k, comp) in &rec.planes {
            let others: Vec<usize> = (0..3).filter(|&a| a != k).collect();
            let (a, b) = (others[0], others[1]);
            let Block::Real(pairs) = block2(sub_block(&j, a, b)) else { continue };
            let saddle = pairs[0].0 * pairs[1].0 < 0.0;
            let chosen: Vec<(f64, [f64; 2])> = if saddle {
                pairs.to_vec()
            } else {
                // Strong direction of a node.
                let s = if pairs[0].0.abs() >= pairs[1].0.abs() { pairs[0] } else { pairs[1] };
                vec![s]
            };
            for (l, v) in chosen {
                let mut w = [0.0; 3];
                w[a] = v[0];
                w[b] = v[1];
                // Directions inside another divisor plane are skeleton edges.
                if plane_axes.iter().any(|&p| p != k && w[p].abs() < 1e-9) {
                    continue;
                }
                push(w, l, EdgeType::Trace, vec![comp], saddle);
            }
        }
        // Skeleton lines: one free axis, two divisor planes.
        if rec.planes.len() >= 2 {
            for f in 0..3 {
                let on: Vec<ComponentId> = rec.planes.iter().filter(|p| p.0 != f).map(|p| p.1).collect();
                if on.len() != 2 {
                    continue;
                }
                let l = j[f][f];
                if l <= 0.0 {
                    continue;
                }
                let mut w = [0.0; 3];
                w[f] = 1.0;
                let mut carrier = on;
                carrier.sort_unstable();
                push(w, l, EdgeType::Skeleton, carrier, false);
            }
        }
        out
    }

    fn trace_launch(&self, rec: &EquilibriumRecord, l: &Launch) -> Result<SeparatrixEdge> {
        let end =
            self.flow(rec.chart, l.start, l.dir, Some(rec.id), true, self.cfg.t_max, &mut |_, _, _| Control::Continue)?;
        let landing = end.landed.ok_or(Error::StepLimitExceeded)?;
        let q = landing.vertex;
        let (q_angle, q_role, q_rs) = self.landing_end(q, &landing);
        let mut poly = end.poly;
        poly.insert(0, self.point(rec.chart, rec.position));
        let qrec = &self.eqs[q];
        poly.push(self.point(qrec.chart, qrec.position));
        let rs_here = l.restricted_saddle;
        Ok(if l.dir > 0.0 {
            SeparatrixEdge {
                id: 0,
                origin: rec.id,
                end: q,
                edge_type: l.kind,
                carrier: l.carrier.clone(),
                polyline: poly,
                origin_angle: l.angle,
                end_angle: q_angle,
                origin_role: l.role,
                end_role: q_role,
                restricted_saddle: [rs_here, q_rs],
            }
        } else {
            poly.reverse();
            SeparatrixEdge {
                id: 0,
                origin: q,
                end: rec.id,
                edge_type: l.kind,
                carrier: l.carrier.clone(),
                polyline: poly,
                origin_angle: q_angle,
                end_angle: l.angle,
                origin_role: q_role,
                end_role: l.role,
                restricted_saddle: [q_rs, rs_here],
            }
        })
    }

    /// Looks for a periodic orbit in the component of a plane node or focus
    /// by following an orbit leaving it and measuring first returns.
    fn periodic_from(&self, rec: &EquilibriumRecord) -> Option<PeriodicOrbit> {
        if rec.planes.len() != 1 {
            return None;
        }
        let (k, comp) = rec.planes[0];
        let others: Vec<usize> = (0..3).filter(|&a| a != k).collect();
        let re = match block2(sub_block(&rec.jacobian, others[0], others[1])) {
            Block::Real([(l1, _), (l2, _)]) if l1 * l2 > 0.0 => l1,
            Block::Real(_) => return None,
            Block::Complex(re) | Block::Repeated(re) => re,
        };
        let dir = re.signum();
        let ch = &self.atlas.charts[rec.chart];
        let mut x0 = rec.position;
        let d = 10.0 * self.cfg.r_land;
        x0[others[0]] += d * 0.7f64.cos();
        x0[others[1]] += d * 0.7f64.sin();
        if !ch.in_region(&x0) {
            return None;
        }
        let settle = self
            .flow(rec.chart, x0, dir, Some(rec.id), true, self.cfg.periodic_settle, &mut |_, _, _| Control::Continue)
            .ok()?;
        if settle.landed.is_some() {
            return None;
        }
        let (c0, q0) = (settle.chart, settle.x);
        let f0 = self.atlas.charts[c0].float_field().eval(q0);
        let nn = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nn == 0.0 {
            return None;
        }
        let n = f0.map(|v| v / nn);
        let mut returns: Vec<([f64; 3], f64)> = vec![(q0, 0.0)];
        let mut prev: Option<([f64; 3], f64)> = None;
        let mut lap: Vec<PolyPoint> = vec![self.point(c0, q0)];
        let mut last_lap: Vec<PolyPoint> = Vec::new();
        let max_laps = self.cfg.periodic_max_laps;
        let mut hook = |c: ChartId, x: &[f64; 3], t: f64| {
            if lap.last().map(|p| p.chart != c || maxdist(&p.coords, x) > 0.01).unwrap_or(true) {
                lap.push(self.point(c, *x));
            }
            let Some(y) = self.atlas.chart_transition(c, c0, x) else {
                prev = None;
                return Control::Continue;
            };
            let s = dir * (0..3).map(|i| n[i] * (y[i] - q0[i])).sum::<f64>();
            if let Some((py, ps)) = prev {
                if ps < 0.0 && s >= 0.0 && maxdist(&y, &q0) < 0.3 {
                    let w = ps / (ps - s);
                    let r = [0, 1, 2].map(|i| py[i] + w * (y[i] - py[i]));
                    returns.push((r, t));
                    last_lap = std::mem::take(&mut lap);
                    lap.push(self.point(c0, r));
                    let m = returns.len();
                    if m >= 3 && maxdist(&returns[m - 1].0, &returns[m - 2].0) < 1e-10 || m > max_laps {
                        return Control::Stop;
                    }
                }
            }
            prev = Some((y, s));
            Control::Continue
        };
        let budget = self.cfg.periodic_settle + 1000.0;
        let end = self.flow(c0, q0, dir, None, true, budget, &mut hook).ok()?;
        if end.landed.is_some() || returns.len() < 3 {
            return None;
        }
        let m = returns.len();
        if maxdist(&returns[m - 1].0, &returns[m - 2].0) > 1e-6 {
            return None;
        }
        let diffs: Vec<f64> = returns.windows(2).map(|w| maxdist(&w[1].0, &w[0].0)).collect();
        let mut mult = 0.0;
        for w in diffs.windows(2) {
            if w[0] > 1e-9 {
                mult = w[1] / w[0];
            }
        }
        let (multiplier, attracting) =
            if dir > 0.0 { (mult, true) } else { (if mult > 0.0 { 1.0 / mult } else { f64::INFINITY }, false) };
        let mut polyline = last_lap;
        if dir < 0.0 {
            polyline.reverse();
        }
        Some(PeriodicOrbit {
            id: 0,
            component: comp,
            polyline,
            multiplier,
            attracting,
            period: returns[m - 1].1 - returns[m - 2].1,
        })
    }
}

struct Launch {
    start: [f64; 3],
    dir: f64,
    angle: f64,
    role: EndRole,
    kind: EdgeType,
    carrier: Vec<ComponentId>,
    restricted_saddle: bool,
}

fn angle_close(a: f64, b: f64, tol: f64) -> bool {
    let d = ccw(a, b);
    d < tol || TAU - d < tol
}

fn near_polyline(atlas: &BlowupAtlas, chart: ChartId, x: &[f64; 3], poly: &[PolyPoint], tol: f64) -> bool {
    poly.iter()
        .any(|p| atlas.chart_transition(chart, p.chart, x).map(|y| maxdist(&y, &p.coords) < tol).unwrap_or(false))
}

/// Traces all separatrices of the divisor foliation and assembles the
/// graph. Failed traces are kept as warnings.
pub fn trace_separatrices(
    atlas: &BlowupAtlas,
    eqs: &[EquilibriumRecord],
    cfg: &TraceConfig,
) -> Result<SeparatrixGraph> {
    if let Some(e) = eqs.iter().find(|e| !e.is_hyperbolic()) {
        return Err(Error::NonHyperbolicVertex(e.id));
    }
    let tracer = Tracer::new(atlas, eqs, cfg);
    let per_vertex: Vec<(Vec<SeparatrixEdge>, Vec<String>, Option<PeriodicOrbit>)> = eqs
        .par_iter()
        .map(|rec| {
            let mut edges = Vec::new();
            let mut warns = Vec::new();
            for l in tracer.launches(rec) {
                match tracer.trace_launch(rec, &l) {
                    Ok(e) => edges.push(e),
                    Err(err) => warns.push(format!(
                        "{} separatrix from vertex {} at angle {:.4}: {err}",
                        l.kind.name(),
                        rec.id,
                        l.angle
                    )),
                }
            }
            let po = if cfg.periodic_search { tracer.periodic_from(rec) } else { None };
            (edges, warns, po)
        })
        .collect();

    let mut edges: Vec<SeparatrixEdge> = Vec::new();
    let mut warnings = Vec::new();
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    for (es, ws, po) in per_vertex {
        for e in es {
            let dup = edges.iter().any(|f| {
                f.origin == e.origin
                    && f.end == e.end
                    && f.edge_type == e.edge_type
                    && f.carrier == e.carrier
                    && angle_close(f.origin_angle, e.origin_angle, cfg.dedup_angle)
                    && angle_close(f.end_angle, e.end_angle, cfg.dedup_angle)
            });
            if !dup {
                edges.push(e);
            }
        }
        warnings.extend(ws);
        if let Some(o) = po {
            let p = &o.polyline[o.polyline.len() / 2];
            let dup = orbits
                .iter()
                .any(|q| q.component == o.component && near_polyline(atlas, p.chart, &p.coords, &q.polyline, 1e-2));
            if !dup {
                orbits.push(o);
            }
        }
    }
    edges.sort_by(|a, b| {
        (a.origin, a.end, a.edge_type)
            .cmp(&(b.origin, b.end, b.edge_type))
            .then(a.origin_angle.total_cmp(&b.origin_angle))
            .then(a.end_angle.total_cmp(&b.end_angle))
    });
    for (i, o) in orbits.iter_mut().enumerate() {
        o.id = i;
    }
    let vertices = eqs.iter().map(GraphVertex::from_record).collect();
    let mut g = SeparatrixGraph::new(vertices, edges);
    g.periodic_orbits = orbits;
    warnings.extend(stratum_warnings(atlas, &g));
    warnings.extend(crossing_warnings(&g, cfg.r_land));
    g.warnings = warnings;
    Ok(g)
}

/// Trace-edge samples must stay inside their component and off the
/// skeleton.
fn stratum_warnings(atlas: &BlowupAtlas, g: &SeparatrixGraph) -> Vec<String> {
    let mut out = Vec::new();
    for e in g.edges.iter().filter(|e| e.edge_type == EdgeType::Trace) {
        let n = e.polyline.len();
        let bad = e.polyline.iter().take(n.saturating_sub(2)).skip(2).any(|p| {
            let ch = &atlas.charts[p.chart];
            let zs = ch.planes_at(&p.coords, ZERO_PLANE);
            zs.len() != 1 || ch.planes[zs[0]] != Some(e.carrier[0])
        });
        if bad {
            out.push(format!("trace edge {} leaves its component", e.id));
        }
    }
    out
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Whether the short great-circle arcs `ab` and `cd` cross.
fn arcs_cross(a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]) -> bool {
    let n1 = cross(a, b);
    let n2 = cross(c, d);
    let s = |n: [f64; 3], p: [f64; 3]| dot(n, p).signum();
    s(n1, c) * s(n1, d) < 0.0 && s(n2, a) * s(n2, b) < 0.0 && dot(sub3(a, c), sub3(a, c)) < 1.0
}

/// Pairs of first-component trace edges whose sphere polylines cross away
/// from their endpoints. An embedded graph has none.
fn crossing_warnings(g: &SeparatrixGraph, r_land: f64) -> Vec<String> {
    let keep = |e: &SeparatrixEdge, i: usize| {
        let p = e.polyline[i].sphere;
        let far = |q: [f64; 3]| dot(sub3(p, q), sub3(p, q)).sqrt() > 20.0 * r_land;
        far(g.vertices[e.origin].direction) && far(g.vertices[e.end].direction)
    };
    let trace: Vec<&SeparatrixEdge> =
        g.edges.iter().filter(|e| e.edge_type == EdgeType::Trace && e.carrier == [0]).collect();
    let mut out = Vec::new();
    for (x, e) in trace.iter().enumerate() {
        for f in &trace[x + 1..] {
            let hit = (0..e.polyline.len().saturating_sub(1)).any(|i| {
                keep(e, i)
                    && keep(e, i + 1)
                    && (0..f.polyline.len().saturating_sub(1)).any(|j| {
                        keep(f, j)
                            && keep(f, j + 1)
                            && arcs_cross(
                                e.polyline[i].sphere,
                                e.polyline[i + 1].sphere,
                                f.polyline[j].sphere,
                                f.polyline[j + 1].sphere,
                            )
                    })
            });
            if hit {
                out.push(format!("trace edges {} and {} cross", e.id, f.id));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    /// `p0, ..., pn` with `pn = p0`.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` to `vertices[i + 1]`.
    pub edges: Vec<usize>,
    pub orientation: Orientation,
    /// No edge of the graph lies in the region to the right of the cycle.
    pub property_m: bool,
    /// Edges found in the right-hand region (empty when `property_m`).
    pub interior_edges: Vec<usize>,
}

/// First outgoing end counterclockwise after the incoming end at `v`.
fn right_hand_exit(g: &SeparatrixGraph, v: usize, in_angle: f64, in_edge: usize) -> Option<usize> {
    g.rotation[v]
        .iter()
        .filter(|e| e.outgoing)
        .map(|e| {
            let d = ccw(in_angle, e.angle);
            let d = if d == 0.0 && e.edge == in_edge {
                TAU
            } else if d == 0.0 {
                TAU * 0.5e-12
            } else {
                d
            };
            (d, e.edge)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|x| x.1)
}

fn walk(g: &SeparatrixGraph, start_edge: usize) -> Result<Cycle> {
    let e0 = g.edges.get(start_edge).ok_or_else(|| Error::Invalid(format!("no edge {start_edge}")))?;
    let mut verts = vec![e0.origin];
    let mut edges: Vec<usize> = Vec::new();
    let mut cur = start_edge;
    for _ in 0..=g.edges.len() + 1 {
        let e = &g.edges[cur];
        edges.push(cur);
        let w = e.end;
        if let Some(i) = verts.iter().position(|&v| v == w) {
            let mut vs = verts[i..].to_vec();
            vs.push(w);
            return Ok(Cycle {
                vertices: vs,
                edges: edges[i..].to_vec(),
                orientation: Orientation::Positive,
                property_m: false,
                interior_edges: Vec::new(),
            });
        }
        verts.push(w);
        cur = right_hand_exit(g, w, e.end_angle, cur).ok_or(Error::NoExitEdge(w))?;
    }
    Err(Error::RotationInconsistent("walk did not close".into()))
}

/// Edges in the region to the right of `cycle`, found by searching from the
/// edge ends in the counterclockwise sector from each incoming to outgoing
/// cycle end.
pub fn right_side_edges(g: &SeparatrixGraph, cycle: &Cycle) -> Result<Vec<usize>> {
    let n = cycle.edges.len();
    let on_cycle: BTreeSet<usize> = cycle.vertices.iter().copied().collect();
    let cycle_edges: BTreeSet<usize> = cycle.edges.iter().copied().collect();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for i in 0..n {
        let v = cycle.vertices[i];
        let ein = &g.edges[cycle.edges[(i + n - 1) % n]];
        let eout = &g.edges[cycle.edges[i]];
        if ein.end != v || eout.origin != v {
            return Err(Error::RotationInconsistent(format!("cycle not incident at vertex {v}")));
        }
        let (a, b) = (ein.end_angle, eout.origin_angle);
        let span = ccw(a, b);
        for end in &g.rotation[v] {
            let is_in = end.edge == ein.id && !end.outgoing;
            let is_out = end.edge == eout.id && end.outgoing;
            if is_in || is_out {
                continue;
            }
            let d = ccw(a, end.angle);
            if d > 0.0 && d < span && !cycle_edges.contains(&end.edge) && seen.insert(end.edge) {
                queue.push_back(end.edge);
            }
        }
    }
    while let Some(e) = queue.pop_front() {
        let ed = &g.edges[e];
        for w in [ed.origin, ed.end] {
            if on_cycle.contains(&w) {
                continue;
            }
            for end in &g.rotation[w] {
                if !cycle_edges.contains(&end.edge) && seen.insert(end.edge) {
                    queue.push_back(end.edge);
                }
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// Right-hand walk from `start_edge`, trimmed to a simple cycle, then
/// shrunk until no edge lies on its right.
pub fn extract_cycle(g: &SeparatrixGraph, start_edge: usize) -> Result<Cycle> {
    let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut cur = walk(g, start_edge)?;
    loop {
        let inside = right_side_edges(g, &cur)?;
        if inside.is_empty() {
            cur.property_m = true;
            cur.interior_edges.clear();
            return Ok(cur);
        }
        let mut key = cur.edges.clone();
        key.sort_unstable();
        tried.insert(key);
        cur.interior_edges = inside.clone();
        // Restart from an interior edge leaving the cycle if possible.
        let on: BTreeSet<usize> = cur.vertices.iter().copied().collect();
        let mut next = None;
        let mut order = inside.clone();
        order.sort_by_key(|&e| (!on.contains(&g.edges[e].origin), e));
        for e in order {
            if let Ok(c) = walk(g, e) {
                let mut k = c.edges.clone();
                k.sort_unstable();
                if !tried.contains(&k) {
                    next = Some(c);
                    break;
                }
            }
        }
        match next {
            Some(c) => cur = c,
            None => return Ok(cur),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Prediction {
    SinglePoint { candidates: Vec<usize> },
    PeriodicOrbit { orbit: usize },
    PolyCycle { cycle: Cycle },
}

impl Prediction {
    pub fn name(&self) -> &'static str {
        match self {
            Prediction::SinglePoint { .. } => "SinglePoint",
            Prediction::PeriodicOrbit { .. } => "PeriodicOrbit",
            Prediction::PolyCycle { .. } => "PolyCycle",
        }
    }
}

/// Predicted limit set from the graph: an attracting divisor periodic
/// orbit, else an attractor vertex, else a cycle of the cyclic core, else
/// the transversally attracting vertices.
pub fn classify_limit(g: &SeparatrixGraph, ms_ok: bool) -> Result<Prediction> {
    if !ms_ok {
        return Err(Error::Unclassifiable("weak Morse-Smale conditions fail".into()));
    }
    if let Some(o) = g.periodic_orbits.iter().find(|o| o.attracting) {
        return Ok(Prediction::PeriodicOrbit { orbit: o.id });
    }
    let attractors: Vec<usize> = g.vertices.iter().filter(|v| v.kind == Kind::Attractor).map(|v| v.id).collect();
    if !attractors.is_empty() {
        return Ok(Prediction::SinglePoint { candidates: attractors });
    }
    let core = g.cyclic_core();
    if let Some(&e) = core.first() {
        return Ok(Prediction::PolyCycle { cycle: extract_cycle(g, e)? });
    }
    let cands: Vec<usize> = g
        .vertices
        .iter()
        .filter(|v| !v.transverse.is_empty() && v.transverse.iter().all(|t| *t < 0.0))
        .map(|v| v.id)
        .collect();
    if cands.is_empty() {
        return Err(Error::Unclassifiable("no attracting candidate on the divisor".into()));
    }
    Ok(Prediction::SinglePoint { candidates: cands })
}

/// Points of the first-blow-up sphere making up the predicted set.
pub fn prediction_geometry(g: &SeparatrixGraph, p: &Prediction) -> Vec<[f64; 3]> {
    match p {
        Prediction::SinglePoint { candidates } => candidates.iter().map(|&v| g.vertices[v].direction).collect(),
        Prediction::PeriodicOrbit { orbit } => g.periodic_orbits[*orbit].polyline.iter().map(|q| q.sphere).collect(),
        Prediction::PolyCycle { cycle } => {
            // Vertex, then its outgoing edge, in cycle order.
            let mut pts = Vec::new();
            for (i, &e) in cycle.edges.iter().enumerate() {
                pts.push(g.vertices[cycle.vertices[i]].direction);
                pts.extend(g.edges[e].polyline.iter().map(|q| q.sphere));
            }
            pts
        }
    }
}

/// Trace edges joining saddles of the restricted field off the skeleton.
pub fn two_d_saddle_connections(g: &SeparatrixGraph) -> Vec<usize> {
    g.edges
        .iter()
        .filter(|e| e.edge_type == EdgeType::Trace && e.restricted_saddle[0] && e.restricted_saddle[1])
        .map(|e| e.id)
        .collect()
}

/// Graphviz rendering. Only cycle members carry `color` attributes.
pub fn export_dot(g: &SeparatrixGraph, cycle: Option<&Cycle>) -> String {
    let cv: BTreeSet<usize> = cycle.map(|c| c.vertices.iter().copied().collect()).unwrap_or_default();
    let ce: BTreeSet<usize> = cycle.map(|c| c.edges.iter().copied().collect()).unwrap_or_default();
    let mut s = String::from("digraph separatrices {\n");
    for v in &g.vertices {
        let w = v.weight_label().map(|w| format!(" w={w}")).unwrap_or_default();
        let color = if cv.contains(&v.id) { ", color=red" } else { "" };
        let _ = writeln!(s, "  v{} [label=\"{}: {}{}\"{}];", v.id, v.id, v.kind.name(), w, color);
    }
    for e in &g.edges {
        let color = if ce.contains(&e.id) { ", color=red" } else { "" };
        let _ = writeln!(s, "  v{} -> v{} [label=\"{}\"{}];", e.origin, e.end, e.edge_type.name(), color);
    }
    s.push_str("}\n");
    s
}

/// Polyline samples: one row per point.
pub fn export_polylines_csv(g: &SeparatrixGraph) -> String {
    let mut s = String::from("edge,chart,u0,u1,u2,sx,sy,sz\n");
    for e in &g.edges {
        for p in &e.polyline {
            let _ = writeln!(
                s,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                e.id, p.chart, p.coords[0], p.coords[1], p.coords[2], p.sphere[0], p.sphere[1], p.sphere[2]
            );
        }
    }
    s
}

/// Vertex and edge counts per kind and type.
pub fn summary(g: &SeparatrixGraph) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for v in &g.vertices {
        *m.entry(format!("vertex.{}", v.kind.name())).or_insert(0) += 1;
    }
    for e in &g.edges {
        *m.entry(format!("edge.{}", e.edge_type.name())).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PolyField3;
    use crate::singularity::{find_equilibria, EquilibriumConfig};
    use std::f64::consts::PI;

    fn square_with_chord() -> SeparatrixGraph {
        // a=(0,0) b=(0,1) c=(1,1) d=(1,0), clockwise, chord a->c inside.
        let pos: [(f64, f64); 4] = [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)];
        let ang = |u: usize, v: usize| {
            let (x, y) = (pos[v].0 - pos[u].0, pos[v].1 - pos[u].1);
            y.atan2(x)
        };
        let arcs = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)];
        let edges: Vec<_> = arcs.iter().map(|&(u, v)| (u, v, ang(u, v), ang(v, u))).collect();
        SeparatrixGraph::from_abstract(&[Kind::PlaneSaddle; 4], &edges)
    }

    #[test]
    fn cyclicity_examples() {
        assert!(is_cyclic(1, &[(0, 0)]));
        assert!(!is_cyclic(3, &[(0, 1), (1, 2)]));
        let tri2 = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)];
        assert!(is_cyclic(5, &tri2));
        assert!(is_cyclic_by_partitions(5, &tri2));
        assert!(!is_cyclic_by_partitions(3, &[(0, 1), (1, 2)]));
    }

    #[test]
    fn simple_cycle_is_returned() {
        let g = SeparatrixGraph::from_abstract(
            &[Kind::PlaneSaddle; 3],
            &[(0, 1, 0.0, PI), (1, 2, 2.0, 5.0), (2, 0, 1.0, 4.0)],
        );
        let c = extract_cycle(&g, 1).unwrap();
        assert_eq!(c.vertices, vec![1, 2, 0, 1]);
        assert!(c.property_m);
    }

    #[test]
    fn figure_eight_takes_right_hand_loop() {
        // Rotation order at vertex 1: in1, in_a, out_a, in_b, out_b.
        let g = SeparatrixGraph::from_abstract(
            &[Kind::Repeller, Kind::PlaneSaddle],
            &[(0, 1, 0.0, 0.0), (1, 1, 1.0, 0.8), (1, 1, 2.0, 1.8)],
        );
        let c = extract_cycle(&g, 0).unwrap();
        assert_eq!(c.edges, vec![1]);
        assert!(c.property_m);
    }

    #[test]
    fn chord_on_the_right_shrinks_the_cycle() {
        let g = square_with_chord();
        let first = walk(&g, 0).unwrap();
        assert_eq!(first.vertices, vec![0, 1, 2, 3, 0]);
        assert_eq!(right_side_edges(&g, &first).unwrap(), vec![4]);
        let c = extract_cycle(&g, 0).unwrap();
        assert_eq!(c.vertices, vec![0, 2, 3, 0]);
        assert!(c.property_m);
        assert!(right_side_edges(&g, &c).unwrap().is_empty());
    }

    #[test]
    fn missing_exit_is_reported() {
        let g = SeparatrixGraph::from_abstract(&[Kind::PlaneSaddle; 2], &[(0, 1, 0.0, PI)]);
        assert_eq!(extract_cycle(&g, 0).unwrap_err(), Error::NoExitEdge(1));
    }

    #[test]
    fn limit_classification_rules() {
        let g = SeparatrixGraph::from_abstract(&[Kind::Attractor], &[]);
        assert_eq!(classify_limit(&g, true).unwrap(), Prediction::SinglePoint { candidates: vec![0] });
        assert!(matches!(classify_limit(&g, false), Err(Error::Unclassifiable(_))));
        let p = classify_limit(&square_with_chord(), true).unwrap();
        assert!(matches!(p, Prediction::PolyCycle { .. }));
    }

    #[test]
    fn saddle_connection_flags_and_exports() {
        let mut g = SeparatrixGraph::from_abstract(&[Kind::PlaneSaddle; 2], &[(0, 1, 0.0, PI), (0, 1, 1.0, 2.0)]);
        g.edges[0].restricted_saddle = [true, true];
        g.edges[1].restricted_saddle = [true, false];
        assert_eq!(two_d_saddle_connections(&g), vec![0]);
        g.edges[0].edge_type = EdgeType::Skeleton;
        assert!(two_d_saddle_connections(&g).is_empty());
        let empty = SeparatrixGraph::default();
        assert_eq!(export_dot(&empty, None), "digraph separatrices {\n}\n");
        let sq = square_with_chord();
        let c = extract_cycle(&sq, 0).unwrap();
        let dot = export_dot(&sq, Some(&c));
        assert_eq!(dot.matches("color=red").count(), 3 + 3);
    }

    #[test]
    fn rotation_lists_each_end_once() {
        let g = square_with_chord();
        let total: usize = g.rotation.iter().map(|r| r.len()).sum();
        assert_eq!(total, 2 * g.edges.len());
    }

    #[test]
    fn link_angles_agree_across_strata() {
        let a = BlowupAtlas::polar_blowup(&PolyField3::linear_i([[1, 0, 0], [0, -1, 0], [0, 0, -2]])).unwrap();
        let ch = &a.charts[0];
        let p = [0.0, 0.0, 0.0];
        let t1 = link_angle(ch, &p, &[0.0, 1.0, 0.0]);
        let t2 = link_angle(ch, &p, &[0.0, 0.0, 1.0]);
        assert!((ccw(t1, t2) - PI / 2.0).abs() < 1e-12 || (ccw(t2, t1) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_model_graph() {
        let a = BlowupAtlas::polar_blowup(&PolyField3::linear_i([[1, 0, 0], [0, -1, 0], [0, 0, -2]])).unwrap();
        let eqs = find_equilibria(&a, &EquilibriumConfig { grid: 16, ..Default::default() }).unwrap();
        let g = trace_separatrices(&a, &eqs, &TraceConfig::default()).unwrap();
        assert_eq!(g.edges.len(), 12, "{:?}", g.warnings);
        assert!(g.warnings.is_empty(), "{:?}", g.warnings);
        assert!(g.edges.iter().all(|e| e.edge_type == EdgeType::Trace));
        assert!(!g.is_cyclic());
        assert!(g.periodic_orbits.is_empty());
        assert!(two_d_saddle_connections(&g).is_empty());
        // Every edge ends at a sink direction (+-x) and starts off it.
        for e in &g.edges {
            assert!(g.vertices[e.end].direction[0].abs() > 0.99 || g.vertices[e.end].direction[1].abs() > 0.99);
        }
    }

    #[test]
    fn equator_is_an_attracting_periodic_orbit() {
        let f = PolyField3::linear_i([[-1, -1, 0], [1, -1, 0], [0, 0, -3]]);
        let a = BlowupAtlas::polar_blowup(&f).unwrap();
        let eqs = find_equilibria(&a, &EquilibriumConfig { grid: 16, ..Default::default() }).unwrap();
        assert_eq!(eqs.len(), 2);
        let g = trace_separatrices(&a, &eqs, &TraceConfig::default()).unwrap();
        assert_eq!(g.periodic_orbits.len(), 1);
        let o = &g.periodic_orbits[0];
        assert!(o.attracting && o.multiplier < 1e-3);
        assert!((o.period - TAU).abs() < 1e-3, "{}", o.period);
        assert!(o.polyline.iter().all(|p| p.sphere[2].abs() < 1e-6));
        assert_eq!(classify_limit(&g, true).unwrap(), Prediction::PeriodicOrbit { orbit: 0 });
    }
}
