//! Orbits approaching the origin and the accumulation set of their secants
//! on the unit sphere, checked against the graph-level prediction.

use std::fmt::Write as _;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::atlas::{BlowupAtlas, ChartId};
use crate::error::{Error, Result};
use crate::field::{FloatField, Poly, PolyField3};
use crate::graph::Prediction;
use crate::integrate::{Stepper, Tolerances};
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecantConfig {
    pub rtol: f64,
    pub r_min: f64,
    pub t_max: f64,
    pub transient_radius: f64,
    /// Continue in a first-blow-up chart once inside `transient_radius`.
    pub lifted: bool,
    /// Largest secant rotation per step, radians.
    pub angle_cap: f64,
    /// Largest change of `ln r` per step.
    pub log_r_cap: f64,
    /// Time without a new minimal radius after which the origin is declared
    /// not attracting.
    pub stall_time: f64,
    pub max_steps: usize,
    pub d_point: f64,
    pub d_tube: f64,
    pub d_match: f64,
    pub min_samples: usize,
    /// Dwell minima below this fraction of the median speed mark vertices.
    pub dwell_ratio: f64,
}

impl Default for SecantConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            r_min: 1e-7,
            t_max: 1e4,
            transient_radius: 1e-2,
            lifted: true,
            angle_cap: 0.005,
            log_r_cap: 0.005,
            stall_time: 50.0,
            max_steps: 2_000_000,
            d_point: 0.02,
            d_tube: 0.03,
            d_match: 0.05,
            min_samples: 1000,
            dwell_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedRMin,
    ReachedTMax,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub steps: usize,
    pub rejected: usize,
    pub min_radius: f64,
    /// Time at which integration moved to a blow-up chart.
    pub lifted_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    pub stats: TrajectoryStats,
    pub termination: Termination,
}

fn norm(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit(x: &[f64; 3]) -> [f64; 3] {
    let n = norm(x);
    [x[0] / n, x[1] / n, x[2] / n]
}

/// Geodesic distance between unit vectors.
pub fn geodesic(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    2.0 * (0.5 * norm(&d)).min(1.0).asin()
}

struct Watch {
    r0: f64,
    best: f64,
    best_t: f64,
    stall: f64,
}

impl Watch {
    fn update(&mut self, r: f64, t: f64) -> Result<()> {
        if r > 10.0 * self.r0 {
            return Err(Error::OriginNotAttracting);
        }
        if r < self.best * (1.0 - 1e-12) {
            self.best = r;
            self.best_t = t;
        } else if t - self.best_t > self.stall {
            return Err(Error::OriginNotAttracting);
        }
        Ok(())
    }
}

/// Integrates `x' = f(x)` from `x0` until the radius drops below `r_min`
/// or time exceeds `t_max`. With `cfg.lifted`, the tail is integrated in
/// the first-blow-up charts, where the divisor is invariant.
pub fn integrate_orbit(atlas: &BlowupAtlas, x0: [f64; 3], cfg: &SecantConfig) -> Result<Trajectory> {
    let r0 = norm(&x0);
    if r0 == 0.0 {
        return Err(Error::InitialPointAtOrigin);
    }
    let field = atlas.original.compile();
    let f = |y: &[f64; 3]| field.eval(*y);
    let tol = Tolerances { rtol: cfg.rtol, atol: 1e-300 };
    let mut st = Stepper::new(tol, 1e-3);
    let mut watch = Watch { r0, best: r0, best_t: 0.0, stall: cfg.stall_time };
    let mut tr = Trajectory {
        times: vec![0.0],
        points: vec![x0],
        stats: TrajectoryStats { min_radius: r0, ..Default::default() },
        termination: Termination::ReachedTMax,
    };
    let (mut t, mut x) = (0.0, x0);
    let mut steps = 0usize;
    let finish = |mut tr: Trajectory, st: &Stepper, term| {
        tr.stats.steps = st.stats.accepted;
        tr.stats.rejected = st.stats.rejected;
        tr.termination = term;
        Ok(tr)
    };
    loop {
        let r = norm(&x);
        if r < cfg.r_min {
            return finish(tr, &st, Termination::ReachedRMin);
        }
        if t >= cfg.t_max {
            return finish(tr, &st, Termination::ReachedTMax);
        }
        if cfg.lifted && r < cfg.transient_radius {
            break;
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::StepLimitExceeded);
        }
        let v = f(&x);
        let r2 = r * r;
        let ang = norm(&cross(&x, &v)) / r2;
        let rad = dot(&x, &v).abs() / r2;
        let cap = (cfg.angle_cap / ang.max(1e-300)).min(cfg.log_r_cap / rad.max(1e-300)).min(cfg.t_max - t).max(1e-14);
        let s = st.advance(&f, &x, 1.0, cap).ok_or(Error::StepLimitExceeded)?;
        t += s.h;
        x = s.y;
        let rn = norm(&x);
        tr.times.push(t);
        tr.points.push(x);
        tr.stats.min_radius = tr.stats.min_radius.min(rn);
        watch.update(rn, t)?;
    }

    // Lifted phase in the six first-blow-up charts.
    tr.stats.lifted_at = Some(t);
    let m = atlas.original.vanishing_order()? as i32;
    let u = unit(&x);
    let (mut c, mut p) = atlas.level1_chart_for_direction(u);
    let a = atlas.charts[c].step.axis;
    p[a] = x[a].abs();
    let mut st = Stepper::new(Tolerances { rtol: cfg.rtol, atol: 1e-300 }, 1e-3);
    loop {
        let ch = &atlas.charts[c];
        let a = ch.step.axis;
        let xo = atlas.to_original(c, p);
        let r = norm(&xo);
        if !r.is_finite() {
            return Err(Error::ChartEscape);
        }
        if r < cfg.r_min {
            return finish(tr, &st, Termination::ReachedRMin);
        }
        if t >= cfg.t_max {
            return finish(tr, &st, Termination::ReachedTMax);
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::StepLimitExceeded);
        }
        let ff: &FloatField = ch.float_field();
        let g = |y: &[f64; 3]| ff.eval(*y);
        let v = g(&p);
        // Lifted time runs `p_a^(m-1)` times faster than the original.
        let scale = p[a].powi(m - 1);
        let ang = (0..3).filter(|&j| j != a).map(|j| v[j].abs()).fold(0.0, f64::max);
        let rad = (v[a] / p[a]).abs();
        let t_left = (cfg.t_max - t) * scale;
        let cap = (cfg.angle_cap / ang.max(1e-300)).min(cfg.log_r_cap / rad.max(1e-300)).min(t_left).max(1e-14);
        let s = st.advance(&g, &p, 1.0, cap).ok_or(Error::StepLimitExceeded)?;
        let dt = if m == 1 { s.h } else { s.h / (0.5 * (p[a] + s.y[a])).powi(m - 1) };
        t += dt;
        p = s.y;
        if p[a] <= 0.0 || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::ChartEscape);
        }
        if (0..3).any(|j| j != a && p[j].abs() > 2.0) {
            let xo = atlas.to_original(c, p);
            let (c2, mut p2) = atlas.level1_chart_for_direction(unit(&xo));
            let a2 = atlas.charts[c2].step.axis;
            p2[a2] = xo[a2].abs();
            if c2 == c {
                return Err(Error::ChartEscape);
            }
            c = c2;
            p = p2;
        }
        let xo = atlas.to_original(c, p);
        let rn = norm(&xo);
        tr.times.push(t);
        tr.points.push(xo);
        tr.stats.min_radius = tr.stats.min_radius.min(rn);
        watch.update(rn, t)?;
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecantCloud {
    pub times: Vec<f64>,
    pub vectors: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
    /// First index with radius below the transient radius.
    pub cutoff: usize,
}

pub fn secant_samples(tr: &Trajectory, transient_radius: f64) -> Result<SecantCloud> {
    if tr.points.is_empty() {
        return Err(Error::InsufficientSamples(0));
    }
    let mut vectors = Vec::with_capacity(tr.points.len());
    let mut radii = Vec::with_capacity(tr.points.len());
    for p in &tr.points {
        let r = norm(p);
        if r == 0.0 {
            return Err(Error::InitialPointAtOrigin);
        }
        radii.push(r);
        vectors.push(unit(p));
    }
    let cutoff = radii.iter().position(|&r| r < transient_radius).unwrap_or(radii.len());
    Ok(SecantCloud { times: tr.times.clone(), vectors, radii, cutoff })
}

/// `t, sx, sy, sz, r` rows.
pub fn export_secant_csv(cloud: &SecantCloud) -> String {
    let mut s = String::from("t,sx,sy,sz,r\n");
    for i in 0..cloud.vectors.len() {
        let v = cloud.vectors[i];
        let _ =
            writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", cloud.times[i], v[0], v[1], v[2], cloud.radii[i]);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudClass {
    Point,
    ClosedCurve,
    PolyCycleLike,
    Unknown,
}

impl CloudClass {
    pub fn name(self) -> &'static str {
        match self {
            CloudClass::Point => "Point",
            CloudClass::ClosedCurve => "Closed-curve",
            CloudClass::PolyCycleLike => "PolyCycle-like",
            CloudClass::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accumulation {
    pub class: CloudClass,
    /// Spherical diameter of the post-transient samples.
    pub diameter: f64,
    /// Closed polylines (one for curves) or a single point.
    pub polylines: Vec<Vec<[f64; 3]>>,
    /// Largest sample distance to the fitted polyline.
    pub tube_error: Option<f64>,
    /// Slow points along the fitted curve.
    pub slow_points: Vec<[f64; 3]>,
    pub samples: usize,
}

fn diameter(v: &[[f64; 3]]) -> f64 {
    let stride = (v.len() / 2000).max(1);
    let sub: Vec<&[f64; 3]> = v.iter().step_by(stride).collect();
    let mut d: f64 = 0.0;
    for i in 0..sub.len() {
        for j in i + 1..sub.len() {
            d = d.max(geodesic(sub[i], sub[j]));
        }
    }
    d
}

/// Distance from `p` to the great-circle segment `ab` (short arcs).
fn dist_to_arc(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let n = cross(a, b);
    let nn = norm(&n);
    let end = geodesic(p, a).min(geodesic(p, b));
    if nn < 1e-15 {
        return end;
    }
    let n = [n[0] / nn, n[1] / nn, n[2] / nn];
    let s = dot(p, &n);
    let proj = [p[0] - s * n[0], p[1] - s * n[1], p[2] - s * n[2]];
    if norm(&proj) < 1e-15 {
        return end;
    }
    let q = unit(&proj);
    // q lies on the arc iff it sits between a and b.
    if dot(&cross(a, &q), &n) >= 0.0 && dot(&cross(&q, b), &n) >= 0.0 {
        s.abs().min(1.0).asin()
    } else {
        end
    }
}

fn dist_to_closed(p: &[f64; 3], poly: &[[f64; 3]]) -> f64 {
    (0..poly.len()).map(|i| dist_to_arc(p, &poly[i], &poly[(i + 1) % poly.len()])).fold(f64::INFINITY, f64::min)
}

/// Classifies samples from index `from` on.
pub fn estimate_accumulation_from(cloud: &SecantCloud, from: usize, cfg: &SecantConfig) -> Result<Accumulation> {
    let from = from.min(cloud.vectors.len());
    let v = &cloud.vectors[from..];
    let t = &cloud.times[from..];
    if v.len() < cfg.min_samples {
        return Err(Error::InsufficientSamples(v.len()));
    }
    let diam = diameter(v);
    if diam < cfg.d_point {
        let mut c = [0.0; 3];
        for p in v {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        return Ok(Accumulation {
            class: CloudClass::Point,
            diameter: diam,
            polylines: vec![vec![unit(&c)]],
            tube_error: None,
            slow_points: Vec::new(),
            samples: v.len(),
        });
    }
    let unknown = |tube| Accumulation {
        class: CloudClass::Unknown,
        diameter: diam,
        polylines: Vec::new(),
        tube_error: tube,
        slow_points: Vec::new(),
        samples: v.len(),
    };

    // Greedy clusters of radius d_tube / 2.
    let rc = 0.5 * cfg.d_tube;
    let mut centers: Vec<[f64; 3]> = Vec::new();
    let mut sums: Vec<([f64; 3], usize)> = Vec::new();
    let mut assign = Vec::with_capacity(v.len());
    for p in v {
        let found = centers.iter().position(|c| geodesic(c, p) < rc);
        let k = match found {
            Some(k) => k,
            None => {
                centers.push(*p);
                sums.push(([0.0; 3], 0));
                centers.len() - 1
            }
        };
        for i in 0..3 {
            sums[k].0[i] += p[i];
        }
        sums[k].1 += 1;
        assign.push(k);
    }
    let cents: Vec<[f64; 3]> = sums.iter().map(|(s, _)| unit(s)).collect();
    if cents.len() < 3 {
        return Ok(unknown(None));
    }
    // Nearest-neighbour tour through the centroids.
    let mut order = vec![0usize];
    let mut used = vec![false; cents.len()];
    used[0] = true;
    for _ in 1..cents.len() {
        let last = *order.last().unwrap();
        let next = (0..cents.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| geodesic(&cents[last], &cents[a]).total_cmp(&geodesic(&cents[last], &cents[b])))
            .unwrap();
        used[next] = true;
        order.push(next);
    }
    let tour: Vec<[f64; 3]> = order.iter().map(|&k| cents[k]).collect();
    let max_gap = (0..tour.len()).map(|i| geodesic(&tour[i], &tour[(i + 1) % tour.len()])).fold(0.0, f64::max);
    let tube = v.iter().map(|p| dist_to_closed(p, &tour)).fold(0.0, f64::max);
    if max_gap > 4.0 * cfg.d_tube || tube > cfg.d_tube {
        return Ok(unknown(Some(tube)));
    }

    // Angular speed per cluster, ordered along the tour.
    let mut speed_sum = vec![0.0; cents.len()];
    let mut speed_n = vec![0usize; cents.len()];
    for i in 0..v.len() - 1 {
        let dt = t[i + 1] - t[i];
        if dt > 0.0 {
            speed_sum[assign[i]] += geodesic(&v[i], &v[i + 1]) / dt;
            speed_n[assign[i]] += 1;
        }
    }
    let speeds: Vec<f64> =
        order.iter().map(|&k| if speed_n[k] > 0 { speed_sum[k] / speed_n[k] as f64 } else { 0.0 }).collect();
    let mut sorted = speeds.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let n = speeds.len();
    let slow: Vec<[f64; 3]> = (0..n)
        .filter(|&i| {
            let s = speeds[i];
            s < cfg.dwell_ratio * median && s <= speeds[(i + n - 1) % n] && s <= speeds[(i + 1) % n]
        })
        .map(|i| tour[i])
        .collect();
    Ok(Accumulation {
        class: if slow.is_empty() { CloudClass::ClosedCurve } else { CloudClass::PolyCycleLike },
        diameter: diam,
        polylines: vec![tour],
        tube_error: Some(tube),
        slow_points: slow,
        samples: v.len(),
    })
}

pub fn estimate_accumulation(cloud: &SecantCloud, cfg: &SecantConfig) -> Result<Accumulation> {
    estimate_accumulation_from(cloud, cloud.cutoff, cfg)
}

/// Points along a closed or open polyline, at most `step` apart.
pub fn densify(poly: &[[f64; 3]], closed: bool, step: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    let n = poly.len();
    let segs = if closed { n } else { n.saturating_sub(1) };
    if n == 1 {
        return poly.to_vec();
    }
    for i in 0..segs {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let k = (geodesic(&a, &b) / step).ceil().max(1.0) as usize;
        for j in 0..k {
            let s = j as f64 / k as f64;
            out.push(unit(&[a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])]));
        }
    }
    if !closed {
        out.push(poly[n - 1]);
    }
    out
}

/// Symmetric Hausdorff distance between finite point sets on the sphere.
pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let one = |x: &[[f64; 3]], y: &[[f64; 3]]| {
        x.iter().map(|p| y.iter().map(|q| geodesic(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Match,
    Mismatch,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub verdict: Verdict,
    pub hausdorff: Option<f64>,
    pub detail: String,
}

/// Compares an accumulation estimate with the predicted limit set given as
/// points of the first-blow-up sphere.
pub fn compare_prediction(
    acc: &Accumulation,
    pred: &Prediction,
    geometry: &[[f64; 3]],
    cfg: &SecantConfig,
) -> Comparison {
    let compatible = matches!(
        (acc.class, pred),
        (CloudClass::Point, Prediction::SinglePoint { .. })
            | (CloudClass::ClosedCurve, Prediction::PeriodicOrbit { .. })
            | (CloudClass::PolyCycleLike, Prediction::PolyCycle { .. })
    );
    if acc.class == CloudClass::Unknown {
        return Comparison {
            verdict: Verdict::Inconclusive,
            hausdorff: None,
            detail: "accumulation set not classified".into(),
        };
    }
    if !compatible {
        return Comparison {
            verdict: Verdict::Mismatch,
            hausdorff: None,
            detail: format!("cloud is {} but prediction is {}", acc.class.name(), pred.name()),
        };
    }
    if geometry.is_empty() {
        return Comparison {
            verdict: Verdict::Inconclusive,
            hausdorff: None,
            detail: "prediction has no geometry".into(),
        };
    }
    let d = match pred {
        Prediction::SinglePoint { .. } => {
            let p = acc.polylines[0][0];
            geometry.iter().map(|q| geodesic(&p, q)).fold(f64::INFINITY, f64::min)
        }
        _ => {
            let est = densify(&acc.polylines[0], true, 0.005);
            let pr = densify(geometry, true, 0.005);
            hausdorff(&est, &pr)
        }
    };
    let verdict = if d < cfg.d_match { Verdict::Match } else { Verdict::Mismatch };
    Comparison { verdict, hausdorff: Some(d), detail: format!("Hausdorff distance {d:.3e}") }
}

/// Latitude-circle and other reference curves for tests and reports.
pub fn circle(axis: [f64; 3], height: f64, n: usize) -> Vec<[f64; 3]> {
    let a = unit(&axis);
    let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = unit(&cross(&a, &helper));
    let e2 = cross(&a, &e1);
    let rho = (1.0 - height * height).max(0.0).sqrt();
    (0..n)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / n as f64;
            let (c, s) = (th.cos(), th.sin());
            [0, 1, 2].map(|k| height * a[k] + rho * (c * e1[k] + s * e2[k]))
        })
        .collect()
}

/// Chart in which an orbit sample is best represented, for exports.
pub fn sample_chart(atlas: &BlowupAtlas, x: [f64; 3]) -> ChartId {
    atlas.level1_chart_for_direction(unit(&x)).0
}

/// `x' = A x - |x|^2 x` with `A` the rotation generator about z. Its
/// secants stay on the initial latitude circle.
pub fn cubic_rotation_field() -> PolyField3 {
    let cube = |k: usize, lin: Option<(i64, [u32; 3])>| {
        let mut t: Vec<(Q, [u32; 3])> = lin.map(|(c, e)| (Q::from_integer(c.into()), e)).into_iter().collect();
        for j in 0..3 {
            let mut e = [0u32; 3];
            e[j] += 2;
            e[k] += 1;
            t.push((-Q::one(), e));
        }
        Poly::from_terms(t)
    };
    PolyField3::new([cube(0, Some((-1, [0, 1, 0]))), cube(1, Some((1, [1, 0, 0]))), cube(2, None)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn atlas(m: [[i64; 3]; 3]) -> BlowupAtlas {
        BlowupAtlas::polar_blowup(&PolyField3::linear_i(m)).unwrap()
    }

    fn spiral() -> BlowupAtlas {
        atlas([[-1, -1, 0], [1, -1, 0], [0, 0, -3]])
    }

    #[test]
    fn spiral_radius_decays_and_reaches_r_min() {
        let a = spiral();
        let cfg = SecantConfig { lifted: false, ..Default::default() };
        let tr = integrate_orbit(&a, [1.0, 0.0, 0.5], &cfg).unwrap();
        assert_eq!(tr.termination, Termination::ReachedRMin);
        let t = *tr.times.last().unwrap();
        assert!((t - (1e-7f64).ln().abs()).abs() < 0.1, "{t}");
    }

    #[test]
    fn radial_field_decays_along_a_line() {
        let a = BlowupAtlas::polar_blowup(&PolyField3::linear_i([[-1, 0, 0], [0, -1, 0], [0, 0, -1]]));
        // The radial field is dicritical; integrate directly from its
        // original field instead.
        assert!(a.is_err());
        let cfg = SecantConfig { lifted: false, ..Default::default() };
        let rad = radial_atlas_stub();
        let tr = integrate_orbit(&rad, [1.0, 1.0, 1.0], &cfg).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.points) {
            assert!((norm(p) - 3f64.sqrt() * (-t).exp()).abs() < 1e-8 * norm(p).max(1e-7) + 1e-15);
        }
        let c = secant_samples(&tr, 1e-2).unwrap();
        let u = unit(&[1.0, 1.0, 1.0]);
        assert!(c.vectors.iter().all(|v| geodesic(v, &u) < 1e-9));
    }

    /// An atlas whose original field is the radial sink; the charts are
    /// unused by direct integration.
    fn radial_atlas_stub() -> BlowupAtlas {
        let mut a = spiral();
        a.original = PolyField3::linear_i([[-1, 0, 0], [0, -1, 0], [0, 0, -1]]);
        a
    }

    #[test]
    fn repelling_origin_is_reported() {
        let mut a = spiral();
        a.original = PolyField3::linear_i([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let err = integrate_orbit(&a, [1.0, 0.0, 0.0], &SecantConfig::default()).unwrap_err();
        assert_eq!(err, Error::OriginNotAttracting);
        assert_eq!(integrate_orbit(&a, [0.0; 3], &SecantConfig::default()).unwrap_err(), Error::InitialPointAtOrigin);
    }

    #[test]
    fn equator_cloud_is_a_closed_curve() {
        let a = spiral();
        let cfg = SecantConfig::default();
        let tr = integrate_orbit(&a, [1.0, 0.0, 0.5], &cfg).unwrap();
        let c = secant_samples(&tr, cfg.transient_radius).unwrap();
        assert!(c.vectors.iter().all(|v| (norm(v) - 1.0).abs() < 1e-12));
        let acc = estimate_accumulation(&c, &cfg).unwrap();
        assert_eq!(acc.class, CloudClass::ClosedCurve);
        let eq = circle([0.0, 0.0, 1.0], 0.0, 720);
        let h = hausdorff(&densify(&acc.polylines[0], true, 0.005), &eq);
        assert!(h < 0.03, "{h}");
        // Later samples stay in the tube around the earlier estimate.
        let later = estimate_accumulation_from(&c, c.cutoff + (c.vectors.len() - c.cutoff) / 3, &cfg).unwrap();
        assert!(later.polylines[0].iter().all(|p| dist_to_closed(p, &acc.polylines[0]) < cfg.d_tube));
    }

    #[test]
    fn pole_cloud_is_a_point() {
        let mut a = spiral();
        a.original = PolyField3::new([
            Poly::from_terms([(qi(-1), [1, 0, 0]), (qi(-1), [0, 1, 0])]),
            Poly::from_terms([(qi(1), [1, 0, 0]), (qi(-1), [0, 1, 0])]),
            Poly::from_terms([(crate::rational::q(-1, 2), [0, 0, 1])]),
        ]);
        let a = BlowupAtlas::polar_blowup(&a.original).unwrap();
        let cfg = SecantConfig::default();
        let tr = integrate_orbit(&a, [0.5, 0.0, 1.0], &cfg).unwrap();
        let c = secant_samples(&tr, cfg.transient_radius).unwrap();
        let acc = estimate_accumulation(&c, &cfg).unwrap();
        assert_eq!(acc.class, CloudClass::Point);
        assert!(acc.diameter < 0.02);
        assert!(geodesic(&acc.polylines[0][0], &[0.0, 0.0, 1.0]) < 0.02);
    }

    #[test]
    fn lifted_and_direct_secants_agree() {
        // x + iy = e^{(-1+i)t}, z = z0 e^{-3t}.
        let exact = |t: f64| unit(&[(-t).exp() * t.cos(), (-t).exp() * t.sin(), 0.5 * (-3.0 * t).exp()]);
        let a = spiral();
        for lifted in [false, true] {
            let tr = integrate_orbit(&a, [1.0, 0.0, 0.5], &SecantConfig { lifted, ..Default::default() }).unwrap();
            assert_eq!(tr.stats.lifted_at.is_some(), lifted);
            let c = secant_samples(&tr, 1e-2).unwrap();
            let err = c.times.iter().zip(&c.vectors).map(|(&t, v)| geodesic(v, &exact(t))).fold(0.0, f64::max);
            assert!(err < 1e-4, "lifted={lifted}: {err}");
        }
    }

    #[test]
    fn cubic_cloud_is_the_initial_latitude() {
        let a = BlowupAtlas::polar_blowup(&cubic_rotation_field()).unwrap();
        let cfg = SecantConfig { t_max: 100.0, ..Default::default() };
        let x0 = [0.0075, 0.0, 0.005];
        let tr = integrate_orbit(&a, x0, &cfg).unwrap();
        assert_eq!(tr.termination, Termination::ReachedTMax);
        let c = secant_samples(&tr, cfg.transient_radius).unwrap();
        let acc = estimate_accumulation(&c, &cfg).unwrap();
        assert_eq!(acc.class, CloudClass::ClosedCurve);
        let z0 = x0[2] / norm(&x0);
        assert!(c.vectors.iter().all(|v| (v[2] - z0).abs() < 1e-8));
        let lat = circle([0.0, 0.0, 1.0], z0, 720);
        let h = hausdorff(&densify(&acc.polylines[0], true, 0.005), &lat);
        assert!(h < 0.03, "{h}");
    }

    #[test]
    fn comparison_rules() {
        let acc = Accumulation {
            class: CloudClass::Point,
            diameter: 0.0,
            polylines: vec![vec![[0.0, 0.0, 1.0]]],
            tube_error: None,
            slow_points: vec![],
            samples: 2000,
        };
        let cfg = SecantConfig::default();
        let sp = Prediction::SinglePoint { candidates: vec![0] };
        assert_eq!(compare_prediction(&acc, &sp, &[[0.0, 0.0, 1.0]], &cfg).verdict, Verdict::Match);
        let pc = Prediction::PeriodicOrbit { orbit: 0 };
        assert_eq!(compare_prediction(&acc, &pc, &[[1.0, 0.0, 0.0]], &cfg).verdict, Verdict::Mismatch);
        let unk = Accumulation { class: CloudClass::Unknown, ..acc };
        assert_eq!(compare_prediction(&unk, &sp, &[[0.0, 0.0, 1.0]], &cfg).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn too_few_samples() {
        let c =
            SecantCloud { times: vec![0.0; 10], vectors: vec![[1.0, 0.0, 0.0]; 10], radii: vec![1e-3; 10], cutoff: 0 };
        assert_eq!(estimate_accumulation(&c, &SecantConfig::default()).unwrap_err(), Error::InsufficientSamples(10));
    }
}
