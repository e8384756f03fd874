//! Property tests across module boundaries.

use polycycle_core::graph::{extract_cycle, is_cyclic, is_cyclic_by_partitions, right_side_edges, trace_separatrices};
use polycycle_core::integrate::{integrate_to, Tolerances};
use polycycle_core::io::{field_to_json, parse_field};
use polycycle_core::morse_smale::check_weak_morse_smale;
use polycycle_core::pipeline::reduce;
use polycycle_core::rational::{q, qi};
use polycycle_core::secant::{densify, estimate_accumulation_from, integrate_orbit, secant_samples, CloudClass};
use polycycle_core::singularity::classify_linear;
use polycycle_core::{
    AnalysisConfig, BlowupAtlas, EquilibriumConfig, Kind, Poly, PolyField3, RationalMatrix3, SecantConfig,
    SeparatrixGraph,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

const PLANES: [(usize, usize); 3] = [(0, 0), (1, 1), (2, 2)];

fn nonzero() -> impl Strategy<Value = i64> {
    prop_oneof![-6i64..=-1, 1i64..=6]
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Largest distance from a point of `a` to the nearest point of `b`.
fn directed_hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter().map(|p| b.iter().map(|x| dist(p, x)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

fn random_poly(rng: &mut ChaCha8Rng, degrees: std::ops::RangeInclusive<u32>) -> Poly {
    let terms = (0..rng.gen_range(1..5)).map(|_| {
        let d = rng.gen_range(degrees.clone());
        let a = rng.gen_range(0..=d);
        let b = rng.gen_range(0..=d - a);
        (q(rng.gen_range(-3..=3), rng.gen_range(1..=4)), [a, b, d - a - b])
    });
    Poly::from_terms(terms.collect::<Vec<_>>())
}

proptest! {
    #[test]
    fn hyperbolic_diagonal_parts_get_exactly_one_kind(d in prop::array::uniform3(nonzero()), k in 1usize..=3) {
        let j = RationalMatrix3::diag(d.map(qi));
        let c = classify_linear(&j.to_f64(), Some(&j), &PLANES[..k], &EquilibriumConfig::default()).unwrap();
        let same_sign = d.iter().all(|&x| x > 0) || d.iter().all(|&x| x < 0);
        match c.kind {
            Kind::Attractor | Kind::Repeller => prop_assert!(same_sign),
            Kind::NonHyperbolic => prop_assert!(false, "hyperbolic part classified non-hyperbolic"),
            _ => prop_assert!(!same_sign),
        }
        prop_assert_eq!(c.saddle.is_some(), c.kind.is_weighted());
    }

    #[test]
    fn weight_survives_positive_time_rescaling(d in prop::array::uniform3(nonzero()), k in 1usize..=3, n in 1i64..20, m in 1i64..20) {
        let cfg = EquilibriumConfig::default();
        let j = RationalMatrix3::diag(d.map(qi));
        let c = q(n, m);
        let js = RationalMatrix3::diag(d.map(|x| qi(x) * &c));
        let a = classify_linear(&j.to_f64(), Some(&j), &PLANES[..k], &cfg).unwrap();
        let b = classify_linear(&js.to_f64(), Some(&js), &PLANES[..k], &cfg).unwrap();
        prop_assert_eq!(a.kind, b.kind);
        prop_assert_eq!(a.saddle.map(|s| s.weight), b.saddle.map(|s| s.weight));
    }

    #[test]
    fn field_json_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = PolyField3::new([0, 1, 2].map(|_| random_poly(&mut rng, 0..=4)));
        prop_assert_eq!(parse_field(&field_to_json(&f)).unwrap(), f);
    }

    #[test]
    fn cyclicity_matches_partition_oracle(n in 1usize..=5, raw in prop::collection::vec((0usize..5, 0usize..5), 0..=8)) {
        let arcs: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        // The oracle is stated for weakly connected graphs.
        let mut comp: Vec<usize> = (0..n).collect();
        fn root(c: &mut [usize], x: usize) -> usize {
            if c[x] == x { x } else { let r = root(c, c[x]); c[x] = r; r }
        }
        for &(a, b) in &arcs {
            let (ra, rb) = (root(&mut comp, a), root(&mut comp, b));
            comp[ra] = rb;
        }
        let r0 = root(&mut comp, 0);
        prop_assume!((0..n).all(|v| root(&mut comp, v) == r0));
        prop_assert_eq!(is_cyclic(n, &arcs), is_cyclic_by_partitions(n, &arcs));
    }

    #[test]
    fn extracted_cycles_are_simple_with_empty_right_side(
        n in 2usize..=6,
        raw in prop::collection::vec((0usize..6, 0usize..6, 0.0..TAU, 0.0..TAU), 1..=10),
    ) {
        let arcs: Vec<(usize, usize, f64, f64)> =
            raw.into_iter().map(|(a, b, x, y)| (a % n, b % n, x, y)).filter(|e| e.0 != e.1).collect();
        prop_assume!(!arcs.is_empty());
        let g = SeparatrixGraph::from_abstract(&vec![Kind::PlaneSaddle; n], &arcs);
        for start in 0..g.edges.len() {
            let Ok(c) = extract_cycle(&g, start) else { continue };
            let inner = &c.vertices[..c.vertices.len() - 1];
            let mut seen = inner.to_vec();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), inner.len());
            prop_assert_eq!(c.vertices.first(), c.vertices.last());
            for (i, &e) in c.edges.iter().enumerate() {
                prop_assert_eq!(g.edges[e].origin, c.vertices[i]);
                prop_assert_eq!(g.edges[e].end, c.vertices[i + 1]);
            }
            if c.property_m {
                prop_assert!(right_side_edges(&g, &c).unwrap().is_empty());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Integrating the chart field, rescaled back to the original time, and
    /// mapping down matches integrating the original field.
    #[test]
    fn chart_orbits_project_to_original_orbits(seed in any::<u64>(), chart in 0usize..6, u in 0.3f64..0.6, v in -0.5f64..0.5, w in -0.5f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = PolyField3::new([0, 1, 2].map(|_| random_poly(&mut rng, 1..=2)));
        let Ok(atlas) = BlowupAtlas::polar_blowup(&f) else { return Ok(()) };
        let m = f.vanishing_order().unwrap() as i32;
        let c = &atlas.charts[chart];
        let a = c.step.axis;
        let g = c.float_field();
        let lifted = |p: &[f64; 3]| {
            let s = p[a].powi(m - 1);
            g.eval(*p).map(|x| x * s)
        };
        let mut p = [v, w, v * w];
        p[a] = u;
        let tol = Tolerances { rtol: 1e-12, atol: 1e-14 };
        let x0 = atlas.to_original(chart, p);
        let (Some(up), Some(down)) = (integrate_to(&lifted, p, 0.5, tol), integrate_to(&|x: &[f64; 3]| f.eval(*x), x0, 0.5, tol)) else {
            return Ok(());
        };
        prop_assume!(up.iter().chain(&down).all(|x| x.is_finite() && x.abs() < 10.0) && up[a].abs() > 0.05);
        let projected = atlas.to_original(chart, up);
        prop_assert!(dist(&projected, &down) <= 1e-5, "distance {}", dist(&projected, &down));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Secant vectors are unit length, and the accumulation estimate from a
    /// later start stays in the tube around the estimate from an earlier one.
    #[test]
    fn secant_clouds_are_unit_and_nested(x in 0.2f64..1.0, y in -1.0f64..1.0, z in 0.2f64..1.0, pole in any::<bool>()) {
        let f = if pole {
            PolyField3::linear_i([[-3, 0, 0], [0, -3, 0], [0, 0, -1]])
        } else {
            PolyField3::linear_i([[-1, -1, 0], [1, -1, 0], [0, 0, -3]])
        };
        let atlas = BlowupAtlas::polar_blowup(&f).unwrap();
        // A tiny r_min keeps several turns after the transient.
        let cfg = SecantConfig { t_max: 60.0, r_min: 1e-40, ..Default::default() };
        let tr = integrate_orbit(&atlas, [x, y, z], &cfg).unwrap();
        let cloud = secant_samples(&tr, cfg.transient_radius).unwrap();
        for v in &cloud.vectors {
            prop_assert!((dist(v, &[0.0; 3]) - 1.0).abs() <= 1e-12);
        }
        let s1 = cloud.cutoff;
        let s2 = s1 + (cloud.vectors.len() - s1) / 2;
        let early = estimate_accumulation_from(&cloud, s1, &cfg).unwrap();
        let late = estimate_accumulation_from(&cloud, s2, &cfg).unwrap();
        prop_assert!(late.class != CloudClass::Unknown && early.class != CloudClass::Unknown);
        let shape = |a: &polycycle_core::Accumulation| -> Vec<[f64; 3]> {
            a.polylines.iter().flat_map(|p| densify(p, p.len() > 1, 0.005)).collect()
        };
        let d = directed_hausdorff(&shape(&late), &shape(&early));
        prop_assert!(d <= cfg.d_tube, "late estimate leaves the tube by {d}");
    }
}

#[test]
fn morse_smale_verdict_is_idempotent_and_resolvable() {
    let f = PolyField3::linear_i([[1, 0, 0], [0, -1, 0], [0, 0, -2]]);
    let cfg = AnalysisConfig::default();
    let red = reduce(&f, &cfg).unwrap();
    let g = trace_separatrices(&red.atlas, &red.equilibria, &cfg.trace).unwrap();
    let a = check_weak_morse_smale(&red.equilibria, Some(&g), cfg.trace.r_land);
    let b = check_weak_morse_smale(&red.equilibria, Some(&g), cfg.trace.r_land);
    assert_eq!(a, b);
    assert_eq!(a.ok, a.violations.is_empty());

    // A non-hyperbolic record must be named by its id.
    let mut eqs = red.equilibria.clone();
    eqs[2].kind = Kind::NonHyperbolic;
    let v = check_weak_morse_smale(&eqs, Some(&g), cfg.trace.r_land);
    assert!(!v.ok);
    for viol in &v.violations {
        for &c in &viol.culprits {
            let known = if viol.condition == 2 { c < g.edges.len() } else { eqs.iter().any(|e| e.id == c) };
            assert!(known, "violation {viol:?} names unknown id {c}");
        }
    }
}
