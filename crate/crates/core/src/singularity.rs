//! Divisor equilibria of the lifted foliation and their classification
//! into the saddle kinds of weak Morse-Smale fields.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{BlowupAtlas, ChartId, ComponentId, Stratum};
use crate::eigen::{self, Eigenvalue};
use crate::error::{Error, Result};
use crate::field::{FloatField, RationalMatrix3};
use crate::rational::{self, rationalize, to_f64, Q};
use crate::weights::Weight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumConfig {
    /// Seeds per coordinate direction on each chart face.
    pub grid: usize,
    /// Half-width of the seeded square in chart coordinates.
    pub extent: f64,
    pub merge_tol: f64,
    pub eps_hyp_exact: f64,
    pub eps_hyp_float: f64,
    pub newton_iters: usize,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self { grid: 64, extent: 1.25, merge_tol: 1e-9, eps_hyp_exact: 1e-9, eps_hyp_float: 1e-6, newton_iters: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    SaddleCorner,
    BiSaddleAngle,
    SaddleNodeAngle,
    PlaneSaddle,
    Attractor,
    Repeller,
    TransverseNode,
    NonHyperbolic,
}

impl Kind {
    pub fn is_weighted(self) -> bool {
        matches!(self, Kind::SaddleCorner | Kind::BiSaddleAngle)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::SaddleCorner => "SaddleCorner",
            Kind::BiSaddleAngle => "BiSaddleAngle",
            Kind::SaddleNodeAngle => "SaddleNodeAngle",
            Kind::PlaneSaddle => "PlaneSaddle",
            Kind::Attractor => "Attractor",
            Kind::Repeller => "Repeller",
            Kind::TransverseNode => "TransverseNode",
            Kind::NonHyperbolic => "NonHyperbolic",
        }
    }
}

/// Normal-form data of a weighted saddle: after rescaling time so the
/// odd-signed eigenvalue is `+1`, the others are `-lambda`, `-mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleData {
    pub lambda: Weight,
    pub mu: Weight,
    /// `mu / lambda`.
    pub weight: Weight,
    /// Local axis of the one-dimensional invariant variety.
    pub one_d_axis: usize,
    pub one_d_unstable: bool,
    /// Components of the two planes containing the 1D variety, earlier first.
    /// `lambda` belongs to the first.
    pub pair: (ComponentId, ComponentId),
    /// Component carrying the 2D variety (saddle corners only).
    pub transverse: Option<ComponentId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incarnation {
    pub chart: ChartId,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub id: usize,
    /// Chart used for the eigendata.
    pub chart: ChartId,
    pub position: [f64; 3],
    #[serde(with = "rational::serde_q3_opt")]
    pub exact: Option<[Q; 3]>,
    pub incarnations: Vec<Incarnation>,
    pub stratum: Stratum,
    /// `(local axis, component)` for each divisor plane through the point.
    pub planes: Vec<(usize, ComponentId)>,
    pub eigenvalues: [Eigenvalue; 3],
    /// Transverse eigenvalue of each plane in `planes`.
    pub transverse: Vec<Eigenvalue>,
    pub jacobian: [[f64; 3]; 3],
    pub kind: Kind,
    pub saddle: Option<SaddleData>,
    /// Direction on the first blow-up sphere.
    pub direction: [f64; 3],
}

impl EquilibriumRecord {
    pub fn is_hyperbolic(&self) -> bool {
        self.kind != Kind::NonHyperbolic
    }

    pub fn position_in(&self, chart: ChartId) -> Option<[f64; 3]> {
        self.incarnations.iter().find(|i| i.chart == chart).map(|i| i.position)
    }

    pub fn weight(&self) -> Option<&Weight> {
        self.saddle.as_ref().map(|s| &s.weight)
    }
}

/// Result of classifying a linear part at a divisor point.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: Kind,
    pub eigenvalues: [Eigenvalue; 3],
    pub transverse: Vec<Eigenvalue>,
    pub saddle: Option<SaddleData>,
}

fn diag_eig(jf: &[[f64; 3]; 3], jq: Option<&RationalMatrix3>, i: usize) -> Eigenvalue {
    match jq {
        Some(m) => Eigenvalue::exact(m.0[i][i].clone()),
        None => Eigenvalue::real(jf[i][i]),
    }
}

fn to_weight(e: &Eigenvalue) -> Weight {
    match e.as_exact_real() {
        Some(q) => Weight::Exact(q.clone()),
        None => Weight::Float(e.re),
    }
}

fn defective(jf: &[[f64; 3]; 3], jq: Option<&RationalMatrix3>, eigs: &[Eigenvalue; 3]) -> bool {
    for a in 0..3 {
        for b in a + 1..3 {
            let (ea, eb) = (&eigs[a], &eigs[b]);
            if !ea.is_real() || !eb.is_real() {
                continue;
            }
            let equal = match (ea.as_exact_real(), eb.as_exact_real(), jq) {
                (Some(x), Some(y), Some(_)) => x == y,
                _ => (ea.re - eb.re).abs() <= 1e-9 * (1.0 + ea.re.abs()),
            };
            if !equal {
                continue;
            }
            let mult =
                eigs.iter().filter(|e| e.is_real() && (e.re - ea.re).abs() <= 1e-9 * (1.0 + ea.re.abs())).count();
            let rank = match (jq, ea.as_exact_real()) {
                (Some(m), Some(v)) => {
                    let mut s = m.0.clone();
                    for (k, row) in s.iter_mut().enumerate() {
                        row[k] -= v;
                    }
                    eigen::rank_exact(&s)
                }
                _ => {
                    let mut s = *jf;
                    for (k, row) in s.iter_mut().enumerate() {
                        row[k] -= ea.re;
                    }
                    eigen::rank_f64(s, 1e-9)
                }
            };
            if rank > 3 - mult {
                return true;
            }
        }
    }
    false
}

/// Classifies the linear part at a divisor point whose invariant planes are
/// `planes` (local axis and component).
pub fn classify_linear(
    jf: &[[f64; 3]; 3],
    jq: Option<&RationalMatrix3>,
    planes: &[(usize, ComponentId)],
    cfg: &EquilibriumConfig,
) -> Result<Classification> {
    let flagged: Vec<usize> = planes.iter().map(|p| p.0).collect();
    let free: Vec<usize> = (0..3).filter(|k| !flagged.contains(k)).collect();
    let transverse: Vec<Eigenvalue> = flagged.iter().map(|&i| diag_eig(jf, jq, i)).collect();

    // Invariant planes make the matrix block triangular.
    let mut eigs: Vec<Eigenvalue> = transverse.clone();
    match free.len() {
        0 => {}
        1 => eigs.push(diag_eig(jf, jq, free[0])),
        2 => {
            let (a, b) = (free[0], free[1]);
            let e2 = match jq {
                Some(m) => eigen::eig2_exact(&m.0[a][a], &m.0[a][b], &m.0[b][a], &m.0[b][b]),
                None => eigen::eig2_f64(jf[a][a], jf[a][b], jf[b][a], jf[b][b]),
            };
            eigs.extend(e2);
        }
        _ => {
            eigs = match jq {
                Some(m) => eigen::eigenvalues_exact(m).to_vec(),
                None => eigen::eigenvalues_f64(*jf).to_vec(),
            };
        }
    }
    let mut eigenvalues: [Eigenvalue; 3] = eigs.clone().try_into().expect("three eigenvalues");
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let exact = eigenvalues.iter().all(|e| e.re_exact.is_some());
    let eps = if exact { cfg.eps_hyp_exact } else { cfg.eps_hyp_float };
    let base = Classification {
        kind: Kind::NonHyperbolic,
        eigenvalues: eigenvalues.clone(),
        transverse: transverse.clone(),
        saddle: None,
    };
    if eigenvalues.iter().any(|e| e.re.abs() <= eps) {
        return Ok(base);
    }
    if defective(jf, jq, &eigenvalues) {
        return Err(Error::AmbiguousTangency);
    }
    let pos = eigenvalues.iter().filter(|e| e.sign() > 0).count();
    if pos == 0 {
        return Ok(Classification { kind: Kind::Attractor, ..base });
    }
    if pos == 3 {
        return Ok(Classification { kind: Kind::Repeller, ..base });
    }
    let odd_sign: i8 = if pos == 1 { 1 } else { -1 };

    let make_saddle = |odd: &Eigenvalue,
                       axis: usize,
                       y: (ComponentId, &Eigenvalue),
                       z: (ComponentId, &Eigenvalue),
                       transverse_comp|
     -> Result<SaddleData> {
        if y.0 == z.0 {
            return Err(Error::UnorderedPlanes);
        }
        let (first, second) = if y.0 < z.0 { (y, z) } else { (z, y) };
        let o = to_weight(odd).abs();
        let lambda = to_weight(first.1).abs().div(&o);
        let mu = to_weight(second.1).abs().div(&o);
        let weight = mu.div(&lambda);
        Ok(SaddleData {
            lambda,
            mu,
            weight,
            one_d_axis: axis,
            one_d_unstable: odd_sign > 0,
            pair: (first.0, second.0),
            transverse: transverse_comp,
        })
    };

    match planes.len() {
        3 => {
            let o = (0..3).find(|&k| transverse[k].sign() == odd_sign).expect("odd eigenvalue");
            let others: Vec<usize> = (0..3).filter(|&k| k != o).collect();
            let saddle = make_saddle(
                &transverse[o],
                planes[o].0,
                (planes[others[0]].1, &transverse[others[0]]),
                (planes[others[1]].1, &transverse[others[1]]),
                Some(planes[o].1),
            )?;
            Ok(Classification { kind: Kind::SaddleCorner, saddle: Some(saddle), ..base })
        }
        2 => {
            let kappa = diag_eig(jf, jq, free[0]);
            if kappa.sign() == odd_sign {
                let saddle =
                    make_saddle(&kappa, free[0], (planes[0].1, &transverse[0]), (planes[1].1, &transverse[1]), None)?;
                Ok(Classification { kind: Kind::BiSaddleAngle, saddle: Some(saddle), ..base })
            } else {
                Ok(Classification { kind: Kind::SaddleNodeAngle, ..base })
            }
        }
        1 => {
            // Restriction to the plane: its two eigenvalues are the free ones.
            let restricted: Vec<&Eigenvalue> = eigs[1..].iter().collect();
            if restricted[0].sign() != restricted[1].sign() {
                Ok(Classification { kind: Kind::PlaneSaddle, ..base })
            } else {
                Ok(Classification { kind: Kind::TransverseNode, ..base })
            }
        }
        _ => Err(Error::Unclassifiable("point is not on the divisor".into())),
    }
}

/// Recomputes the kind of a record from its stored linear data.
pub fn classify(eq: &EquilibriumRecord, atlas: &BlowupAtlas, cfg: &EquilibriumConfig) -> Result<Kind> {
    let chart = atlas.chart(eq.chart)?;
    let jq = eq.exact.as_ref().map(|p| chart.field.jacobian_at(p));
    Ok(classify_linear(&eq.jacobian, jq.as_ref(), &eq.planes, cfg)?.kind)
}

/// The `(y,z)`-weight `mu / lambda` with planes ordered by creation index.
pub fn saddle_weight(eq: &EquilibriumRecord) -> Result<Weight> {
    match (&eq.saddle, eq.kind.is_weighted()) {
        (Some(s), true) => Ok(s.weight.clone()),
        _ => Err(Error::WeightUndefined(format!("equilibrium {} is {}", eq.id, eq.kind.name()))),
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    chart: ChartId,
    p: [f64; 3],
    exact: Option<[Q; 3]>,
}

fn try_exact(field: &crate::field::PolyField3, p: &[f64; 3]) -> Option<[Q; 3]> {
    let mut out: [Q; 3] = Default::default();
    for k in 0..3 {
        if p[k] == 0.0 {
            continue;
        }
        out[k] = rationalize(p[k], 1_000_000)?;
        if (to_f64(&out[k]) - p[k]).abs() > 1e-9 * (1.0 + p[k].abs()) {
            return None;
        }
    }
    if field.eval_q(&out).iter().all(Zero::is_zero) {
        Some(out)
    } else {
        None
    }
}

/// Newton on the two free coordinates of the face `u_a = 0`.
fn newton_face(f: &FloatField, a: usize, start: [f64; 3], iters: usize) -> Option<([f64; 3], f64)> {
    let (j, k) = ((a + 1) % 3, (a + 2) % 3);
    let mut p = start;
    p[a] = 0.0;
    for _ in 0..iters {
        let v = f.eval(p);
        let jac = f.jacobian(p);
        let (m00, m01, m10, m11) = (jac[j][j], jac[j][k], jac[k][j], jac[k][k]);
        let det = m00 * m11 - m01 * m10;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dj = (m11 * v[j] - m01 * v[k]) / det;
        let dk = (-m10 * v[j] + m00 * v[k]) / det;
        p[j] -= dj;
        p[k] -= dk;
        if !p[j].is_finite() || !p[k].is_finite() || p[j].abs() > 1e6 || p[k].abs() > 1e6 {
            return None;
        }
        if dj.abs().max(dk.abs()) <= 1e-15 * (1.0 + p[j].abs().max(p[k].abs())) {
            break;
        }
    }
    let v = f.eval(p);
    let scale = 1.0 + p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if v[j].abs().max(v[k].abs()) > 1e-10 * scale {
        return None;
    }
    let jac = f.jacobian(p);
    let det = jac[j][j] * jac[k][k] - jac[j][k] * jac[k][j];
    Some((p, det))
}

fn face_candidates(atlas: &BlowupAtlas, chart: ChartId, cfg: &EquilibriumConfig) -> Result<Vec<Candidate>> {
    let c = &atlas.charts[chart];
    let a = c.step.axis;
    let (j, k) = ((a + 1) % 3, (a + 2) % 3);
    let fj = c.field.components[j].on_plane(a);
    let fk = c.field.components[k].on_plane(a);
    if fj.is_zero() && fk.is_zero() {
        return Err(Error::NonIsolated);
    }
    let f = c.float_field();
    let n = cfg.grid.max(2);
    let lo = |ax: usize| if c.constrained(ax) { 0.0 } else { -cfg.extent };
    let seeds: Vec<[f64; 3]> = (0..n)
        .flat_map(|s| (0..n).map(move |t| (s, t)))
        .map(|(s, t)| {
            let mut p = [0.0; 3];
            p[j] = lo(j) + (cfg.extent - lo(j)) * (s as f64 + 0.5) / n as f64;
            p[k] = lo(k) + (cfg.extent - lo(k)) * (t as f64 + 0.5) / n as f64;
            p
        })
        .collect();
    let found: Vec<([f64; 3], f64)> =
        seeds.par_iter().filter_map(|s| newton_face(f, a, *s, cfg.newton_iters)).collect();

    let mut out: Vec<Candidate> = Vec::new();
    let mut singular: Vec<[f64; 3]> = Vec::new();
    for (mut p, det) in found {
        let mut ok = true;
        for ax in [j, k] {
            if c.constrained(ax) {
                if p[ax] < -1e-9 {
                    ok = false;
                } else if p[ax] < 1e-12 {
                    p[ax] = 0.0;
                }
            }
            if p[ax].abs() > cfg.extent * 1.5 {
                ok = false;
            }
        }
        if !ok || c.is_excluded(&p, 1e-9) {
            continue;
        }
        if out.iter().any(|q| (0..3).all(|m| (q.p[m] - p[m]).abs() <= cfg.merge_tol)) {
            continue;
        }
        let jac = f.jacobian(p);
        let scale = jac[j][j].abs().max(jac[j][k].abs()).max(jac[k][j].abs()).max(jac[k][k].abs()).max(1e-300);
        if det.abs() <= 1e-8 * scale * scale {
            singular.push(p);
        }
        let exact = try_exact(&c.field, &p);
        let p = exact.as_ref().map(|e| e.clone().map(|x| to_f64(&x))).unwrap_or(p);
        out.push(Candidate { chart, p, exact });
    }
    if singular.len() >= 3 && collinear(&singular) {
        return Err(Error::NonIsolated);
    }
    Ok(out)
}

fn collinear(pts: &[[f64; 3]]) -> bool {
    let (p0, p1) = (pts[0], pts[1]);
    let d = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let nd = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if nd == 0.0 {
        return false;
    }
    pts[2..].iter().any(|p| {
        let e = [p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]];
        let cx = [d[1] * e[2] - d[2] * e[1], d[2] * e[0] - d[0] * e[2], d[0] * e[1] - d[1] * e[0]];
        (cx[0] * cx[0] + cx[1] * cx[1] + cx[2] * cx[2]).sqrt() <= 1e-6 * nd
    })
}

fn skeleton_candidates(atlas: &BlowupAtlas, chart: ChartId, cfg: &EquilibriumConfig) -> Result<Vec<Candidate>> {
    let c = &atlas.charts[chart];
    let planes: Vec<usize> = c.divisor_planes().map(|p| p.0).collect();
    let mut out = Vec::new();
    if planes.len() == 3 {
        let p = [0.0; 3];
        if !c.is_excluded(&p, 1e-12) {
            out.push(Candidate { chart, p, exact: Some(Default::default()) });
        }
        return Ok(out);
    }
    for x in 0..planes.len() {
        for y in x + 1..planes.len() {
            let (i, j) = (planes[x], planes[y]);
            let k = 3 - i - j;
            let g = c.field.components[k].on_plane(i).on_plane(j);
            if g.is_zero() {
                return Err(Error::NonIsolated);
            }
            let deg = g.max_degree().unwrap_or(0) as usize;
            let mut coeffs = vec![Q::zero(); deg + 1];
            for (e, q) in g.terms() {
                coeffs[e.0[k] as usize] = q.clone();
            }
            let mut roots: Vec<(f64, Option<Q>)> = Vec::new();
            let rest = match eigen::rational_roots(&coeffs) {
                Some((rs, rest)) => {
                    roots.extend(rs.into_iter().map(|r| (to_f64(&r), Some(r))));
                    rest
                }
                None => coeffs.clone(),
            };
            let rf: Vec<f64> = rest.iter().map(to_f64).collect();
            roots.extend(eigen::real_roots_f64(&rf).into_iter().map(|r| (r, None)));
            for (r, rq) in roots {
                if r.abs() > cfg.extent * 1.5 || (c.constrained(k) && r < 0.0) {
                    continue;
                }
                let mut p = [0.0; 3];
                p[k] = r;
                if c.is_excluded(&p, 1e-9) || out.iter().any(|q: &Candidate| (q.p[k] - r).abs() <= cfg.merge_tol) {
                    continue;
                }
                let exact = rq.map(|q| {
                    let mut e: [Q; 3] = Default::default();
                    e[k] = q;
                    e
                });
                out.push(Candidate { chart, p, exact });
            }
        }
    }
    Ok(out)
}

fn same_point(atlas: &BlowupAtlas, a: &Candidate, inc: &[Incarnation], tol: f64) -> bool {
    inc.iter().any(|i| {
        if i.chart == a.chart {
            return (0..3).all(|k| (a.p[k] - i.position[k]).abs() <= tol * (1.0 + i.position[k].abs()));
        }
        atlas
            .chart_transition(a.chart, i.chart, &a.p)
            .map(|q| (0..3).all(|k| (q[k] - i.position[k]).abs() <= tol * (1.0 + i.position[k].abs())))
            .unwrap_or(false)
    })
}

/// Builds the record of a known equilibrium given in one chart.
pub fn record_at(
    atlas: &BlowupAtlas,
    chart: ChartId,
    p: [f64; 3],
    exact: Option<[Q; 3]>,
    id: usize,
    cfg: &EquilibriumConfig,
) -> Result<EquilibriumRecord> {
    let mut incarnations = vec![Incarnation { chart, position: p }];
    for c in 0..atlas.charts.len() {
        if c == chart {
            continue;
        }
        if let Some(q) = atlas.chart_transition(chart, c, &p) {
            incarnations.push(Incarnation { chart: c, position: q });
        }
    }
    incarnations.sort_by_key(|i| i.chart);
    // Primary chart: smallest coordinates, preferring exact representations.
    let mut best = (chart, p, exact.clone());
    let quality = |q: &[f64; 3]| q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for inc in &incarnations {
        if inc.chart == chart {
            continue;
        }
        if quality(&inc.position) < quality(&best.1) - 1e-12 {
            let ex = exact.as_ref().and_then(|e| atlas.chart_transition(chart, inc.chart, e));
            if exact.is_some() && ex.is_none() {
                continue;
            }
            best = (inc.chart, inc.position, ex);
        }
    }
    let (pc, pp, pe) = best;
    let ch = atlas.chart(pc)?;
    let planes: Vec<(usize, ComponentId)> = ch.divisor_planes().filter(|(i, _)| pp[*i].abs() <= 1e-12).collect();
    let stratum = Stratum::from_plane_count(planes.len())
        .ok_or_else(|| Error::Unclassifiable("equilibrium off the divisor".into()))?;
    let jq = pe.as_ref().map(|e| ch.field.jacobian_at(e));
    let jf = match &jq {
        Some(m) => m.to_f64(),
        None => ch.float_field().jacobian(pp),
    };
    let cl = classify_linear(&jf, jq.as_ref(), &planes, cfg)?;
    Ok(EquilibriumRecord {
        id,
        chart: pc,
        position: pp,
        exact: pe,
        incarnations,
        stratum,
        planes,
        eigenvalues: cl.eigenvalues,
        transverse: cl.transverse,
        jacobian: jf,
        kind: cl.kind,
        saddle: cl.saddle,
        direction: atlas.sphere_direction(pc, pp),
    })
}

/// All divisor equilibria, each reported once with every chart incarnation.
pub fn find_equilibria(atlas: &BlowupAtlas, cfg: &EquilibriumConfig) -> Result<Vec<EquilibriumRecord>> {
    let mut cands = Vec::new();
    for c in 0..atlas.charts.len() {
        cands.extend(skeleton_candidates(atlas, c, cfg)?);
    }
    for c in 0..atlas.charts.len() {
        cands.extend(face_candidates(atlas, c, cfg)?);
    }
    // Exact points first, then by chart and coordinates.
    cands.sort_by(|a, b| {
        b.exact
            .is_some()
            .cmp(&a.exact.is_some())
            .then(a.chart.cmp(&b.chart))
            .then(a.p[0].total_cmp(&b.p[0]))
            .then(a.p[1].total_cmp(&b.p[1]))
            .then(a.p[2].total_cmp(&b.p[2]))
    });
    let mut groups: Vec<(Candidate, Vec<Incarnation>)> = Vec::new();
    for cand in cands {
        if let Some(g) = groups.iter_mut().find(|g| same_point(atlas, &cand, &g.1, cfg.merge_tol)) {
            if !g.1.iter().any(|i| i.chart == cand.chart) {
                g.1.push(Incarnation { chart: cand.chart, position: cand.p });
            }
            continue;
        }
        let inc = vec![Incarnation { chart: cand.chart, position: cand.p }];
        groups.push((cand, inc));
    }
    let mut records: Vec<EquilibriumRecord> = groups
        .into_iter()
        .enumerate()
        .map(|(id, (c, _))| record_at(atlas, c.chart, c.p, c.exact, id, cfg))
        .collect::<Result<_>>()?;
    // Stable ids: order by primary chart then coordinates.
    records.sort_by(|a, b| {
        a.chart
            .cmp(&b.chart)
            .then(a.position[0].total_cmp(&b.position[0]))
            .then(a.position[1].total_cmp(&b.position[1]))
            .then(a.position[2].total_cmp(&b.position[2]))
    });
    for (i, r) in records.iter_mut().enumerate() {
        r.id = i;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PolyField3;
    use crate::rational::{q, qi};

    fn diag_atlas() -> BlowupAtlas {
        BlowupAtlas::polar_blowup(&PolyField3::linear_i([[1, 0, 0], [0, -1, 0], [0, 0, -2]])).unwrap()
    }

    fn small_cfg() -> EquilibriumConfig {
        EquilibriumConfig { grid: 16, ..Default::default() }
    }

    #[test]
    fn diagonal_model_has_six_axis_equilibria() {
        let a = diag_atlas();
        let eqs = find_equilibria(&a, &small_cfg()).unwrap();
        assert_eq!(eqs.len(), 6);
        for e in &eqs {
            assert!(e.exact.is_some());
            let d = e.direction;
            assert!(d.iter().filter(|x| x.abs() > 0.999).count() == 1, "{d:?}");
        }
        let kinds: Vec<(usize, Kind)> =
            eqs.iter().map(|e| ((0..3).find(|&k| e.direction[k].abs() > 0.5).unwrap(), e.kind)).collect();
        for (axis, kind) in kinds {
            let expect = if axis == 1 { Kind::PlaneSaddle } else { Kind::TransverseNode };
            assert_eq!(kind, expect);
        }
    }

    #[test]
    fn deduplication_is_idempotent() {
        let a = diag_atlas();
        let x = find_equilibria(&a, &small_cfg()).unwrap();
        let y = find_equilibria(&a, &small_cfg()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn vanishing_face_is_non_isolated() {
        let mut a = diag_atlas();
        a.charts[0].field = PolyField3::zero();
        assert_eq!(find_equilibria(&a, &small_cfg()).unwrap_err(), Error::NonIsolated);
    }

    #[test]
    fn classification_examples() {
        let cfg = EquilibriumConfig::default();
        let j = RationalMatrix3::diag([qi(1), qi(-2), qi(-3)]);
        let planes = [(0, 0), (1, 1), (2, 2)];
        let c = classify_linear(&j.to_f64(), Some(&j), &planes, &cfg).unwrap();
        assert_eq!(c.kind, Kind::SaddleCorner);
        let c = classify_linear(&j.to_f64(), Some(&j), &planes[..1], &cfg).unwrap();
        assert_eq!(c.kind, Kind::TransverseNode);
        let one = RationalMatrix3::diag([qi(1), qi(1), qi(1)]);
        let c = classify_linear(&one.to_f64(), Some(&one), &planes[..1], &cfg).unwrap();
        assert_eq!(c.kind, Kind::Repeller);
    }

    #[test]
    fn weight_examples() {
        let cfg = EquilibriumConfig::default();
        let w = |d: [i64; 3], planes: [(usize, usize); 3]| {
            let j = RationalMatrix3::diag(d.map(qi));
            classify_linear(&j.to_f64(), Some(&j), &planes, &cfg).unwrap().saddle.unwrap().weight
        };
        assert_eq!(w([1, -1, -2], [(0, 0), (1, 1), (2, 2)]), Weight::Exact(qi(2)));
        assert_eq!(w([1, -1, -2], [(0, 0), (1, 2), (2, 1)]), Weight::Exact(q(1, 2)));
        assert_eq!(w([2, -2, -4], [(0, 0), (1, 1), (2, 2)]), Weight::Exact(qi(2)));
    }

    #[test]
    fn angle_kinds() {
        let cfg = EquilibriumConfig::default();
        let planes = [(0, 0), (1, 1)];
        // Odd eigenvalue on the free (skeleton) axis.
        let j = RationalMatrix3::diag([qi(-1), qi(-2), qi(3)]);
        let c = classify_linear(&j.to_f64(), Some(&j), &planes, &cfg).unwrap();
        assert_eq!(c.kind, Kind::BiSaddleAngle);
        let s = c.saddle.unwrap();
        assert_eq!((s.pair, s.one_d_axis, s.one_d_unstable), ((0, 1), 2, true));
        assert_eq!(s.weight, Weight::Exact(qi(2)));
        let j = RationalMatrix3::diag([qi(1), qi(-2), qi(-3)]);
        assert_eq!(classify_linear(&j.to_f64(), Some(&j), &planes, &cfg).unwrap().kind, Kind::SaddleNodeAngle);
    }

    #[test]
    fn zero_real_part_is_non_hyperbolic() {
        let cfg = EquilibriumConfig::default();
        let j = RationalMatrix3([[qi(1), qi(0), qi(0)], [qi(0), qi(0), qi(-1)], [qi(0), qi(1), qi(0)]]);
        let c = classify_linear(&j.to_f64(), Some(&j), &[(0, 0)], &cfg).unwrap();
        assert_eq!(c.kind, Kind::NonHyperbolic);
    }

    #[test]
    fn defective_linear_part_is_ambiguous() {
        let cfg = EquilibriumConfig::default();
        let j = RationalMatrix3([[qi(-1), qi(0), qi(0)], [qi(0), qi(2), qi(1)], [qi(0), qi(0), qi(2)]]);
        assert_eq!(classify_linear(&j.to_f64(), Some(&j), &[(0, 0)], &cfg).unwrap_err(), Error::AmbiguousTangency);
    }

    #[test]
    fn sub_chart_equilibria_after_point_blowup() {
        let a = diag_atlas();
        let b = a.point_blowup(0, &Default::default()).unwrap();
        let eqs = find_equilibria(&b, &small_cfg()).unwrap();
        // Five untouched axis points, the new plane point along x and the
        // four axis directions on the new skeleton circle.
        let angles = eqs.iter().filter(|e| e.stratum == Stratum::Angle).count();
        assert_eq!(angles, 4);
        assert!(eqs.iter().all(|e| e.is_hyperbolic()));
        assert_eq!(eqs.len(), 5 + 1 + 4);
    }
}
