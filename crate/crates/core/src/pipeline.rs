//! End-to-end analysis: blow-ups until the divisor singularities are
//! hyperbolic, separatrix graph, weak Morse-Smale verdict, predicted limit
//! set and numerical secant checks at the configured seeds.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{BlownUpPoint, BlowupAtlas, ChartId, ComponentId};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::field::PolyField3;
use crate::graph::{
    classify_limit, prediction_geometry, summary, trace_separatrices, Cycle, EdgeType, Prediction, SeparatrixGraph,
};
use crate::morse_smale::{check_weak_morse_smale, MSVerdict};
use crate::secant::{
    compare_prediction, estimate_accumulation, integrate_orbit, secant_samples, Accumulation, Comparison, SecantCloud,
    Termination, TrajectoryStats,
};
use crate::singularity::{find_equilibria, EquilibriumRecord, Kind};
use crate::weights::{detect_infinitesimal_connections, WeightedChain};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub field: PolyField3,
    /// Human-readable components.
    pub display: [String; 3],
    pub vanishing_order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSummary {
    pub id: ChartId,
    pub label: String,
    pub level: usize,
    pub parent: Option<ChartId>,
    pub planes: [Option<ComponentId>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasSummary {
    pub depth: usize,
    pub components: usize,
    pub charts: Vec<ChartSummary>,
    pub history: Vec<BlownUpPoint>,
}

impl AtlasSummary {
    pub fn new(a: &BlowupAtlas) -> Self {
        Self {
            depth: a.depth(),
            components: a.components.len(),
            charts: a
                .charts
                .iter()
                .map(|c| ChartSummary {
                    id: c.id,
                    label: c.label.clone(),
                    level: c.level,
                    parent: c.parent,
                    planes: c.planes,
                })
                .collect(),
            history: a.history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub id: usize,
    pub origin: usize,
    pub end: usize,
    pub edge_type: EdgeType,
    pub carrier: Vec<ComponentId>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub id: usize,
    pub component: ComponentId,
    pub attracting: bool,
    pub multiplier: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub counts: BTreeMap<String, usize>,
    pub cyclic: bool,
    pub edges: Vec<EdgeSummary>,
    pub periodic_orbits: Vec<OrbitSummary>,
    pub warnings: Vec<String>,
}

impl GraphReport {
    pub fn new(g: &SeparatrixGraph) -> Self {
        Self {
            counts: summary(g),
            cyclic: g.is_cyclic(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeSummary {
                    id: e.id,
                    origin: e.origin,
                    end: e.end,
                    edge_type: e.edge_type,
                    carrier: e.carrier.clone(),
                    points: e.polyline.len(),
                })
                .collect(),
            periodic_orbits: g
                .periodic_orbits
                .iter()
                .map(|o| OrbitSummary {
                    id: o.id,
                    component: o.component,
                    attracting: o.attracting,
                    multiplier: o.multiplier,
                    period: o.period,
                })
                .collect(),
            warnings: g.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub prediction: Option<Prediction>,
    pub error: Option<String>,
    /// Support of the prediction on the first blow-up sphere.
    pub geometry: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: [f64; 3],
    pub error: Option<String>,
    pub termination: Option<Termination>,
    pub stats: Option<TrajectoryStats>,
    pub samples: usize,
    pub accumulation: Option<Accumulation>,
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: String,
    pub config_hash: String,
    /// Seconds since the Unix epoch; not part of any hash.
    pub timestamp: Option<u64>,
    pub input: InputEcho,
    pub atlas: AtlasSummary,
    pub reduction_reached: bool,
    pub equilibria: Vec<EquilibriumRecord>,
    pub graph: Option<GraphReport>,
    pub ms_verdict: MSVerdict,
    pub weighted_chains: Vec<WeightedChain>,
    pub prediction: PredictionReport,
    pub seeds: Vec<SeedResult>,
    pub errors: Vec<String>,
}

/// Report plus the intermediates the exporters need.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub atlas: BlowupAtlas,
    pub graph: Option<SeparatrixGraph>,
    pub cycle: Option<Cycle>,
    pub clouds: Vec<Option<SecantCloud>>,
}

/// Atlas after automatic reduction, with the divisor equilibria found on
/// it. Serialized between the `blowup` and `graph` stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reduction {
    pub atlas: BlowupAtlas,
    pub equilibria: Vec<EquilibriumRecord>,
    /// Every equilibrium is hyperbolic.
    pub reduction_reached: bool,
    pub errors: Vec<String>,
}

/// Polar blow-up followed by point blow-ups of non-hyperbolic divisor
/// equilibria until none is left or the depth cap is hit.
pub fn reduce(field: &PolyField3, cfg: &AnalysisConfig) -> Result<Reduction> {
    let mut atlas = BlowupAtlas::polar_blowup_with_depth(field, cfg.depth_cap)?;
    let mut errors = Vec::new();
    loop {
        let eqs = match find_equilibria(&atlas, &cfg.equilibria) {
            Ok(e) => e,
            Err(e) => {
                errors.push(format!("equilibria: {e}"));
                return Ok(Reduction { atlas, equilibria: Vec::new(), reduction_reached: false, errors });
            }
        };
        let done = |atlas, equilibria, ok, errors| Ok(Reduction { atlas, equilibria, reduction_reached: ok, errors });
        let Some(target) = eqs.iter().find(|e| e.kind == Kind::NonHyperbolic) else {
            return done(atlas, eqs, true, errors);
        };
        let Some(center) = target.exact.clone() else {
            errors.push(format!("equilibrium {} is non-hyperbolic at an irrational point", target.id));
            return done(atlas, eqs, false, errors);
        };
        if atlas.depth() >= cfg.depth_cap {
            errors.push(format!(
                "{}: depth cap {} hit at equilibrium {}",
                Error::ReductionNotReached,
                cfg.depth_cap,
                target.id
            ));
            return done(atlas, eqs, false, errors);
        }
        match atlas.point_blowup(target.chart, &center) {
            Ok(next) => atlas = next,
            Err(Error::Dicritical) => return Err(Error::Dicritical),
            Err(e) => {
                errors.push(format!("blow-up of equilibrium {}: {e}", target.id));
                return done(atlas, eqs, false, errors);
            }
        }
    }
}

fn run_seed(
    atlas: &BlowupAtlas,
    seed: [f64; 3],
    cfg: &AnalysisConfig,
    pred: &PredictionReport,
) -> (SeedResult, Option<SecantCloud>) {
    let mut res = SeedResult {
        seed,
        error: None,
        termination: None,
        stats: None,
        samples: 0,
        accumulation: None,
        comparison: None,
    };
    let tr = match integrate_orbit(atlas, seed, &cfg.secant) {
        Ok(t) => t,
        Err(e) => {
            res.error = Some(e.to_string());
            return (res, None);
        }
    };
    res.termination = Some(tr.termination);
    res.stats = Some(tr.stats.clone());
    let cloud = match secant_samples(&tr, cfg.secant.transient_radius) {
        Ok(c) => c,
        Err(e) => {
            res.error = Some(e.to_string());
            return (res, None);
        }
    };
    res.samples = cloud.vectors.len();
    match estimate_accumulation(&cloud, &cfg.secant) {
        Ok(acc) => {
            if let Some(p) = &pred.prediction {
                res.comparison = Some(compare_prediction(&acc, p, &pred.geometry, &cfg.secant));
            }
            res.accumulation = Some(acc);
        }
        Err(e) => res.error = Some(e.to_string()),
    }
    (res, Some(cloud))
}

/// Runs the whole analysis. Fails only on inputs that admit none: a zero
/// or non-singular field, or a dicritical blow-up. Anything else is
/// recorded in the report and the remaining stages run where they can.
pub fn run_pipeline(field: &PolyField3, cfg: &AnalysisConfig) -> Result<Analysis> {
    cfg.validate()?;
    let m = field.vanishing_order()?;
    let Reduction { atlas, equilibria: eqs, reduction_reached: reached, mut errors } = reduce(field, cfg)?;

    let graph = if reached {
        match trace_separatrices(&atlas, &eqs, &cfg.trace) {
            Ok(g) => Some(g),
            Err(e) => {
                errors.push(format!("separatrix graph: {e}"));
                None
            }
        }
    } else {
        None
    };
    let ms = check_weak_morse_smale(&eqs, graph.as_ref(), cfg.trace.r_land);
    let chains = graph.as_ref().map(|g| detect_infinitesimal_connections(g).chains).unwrap_or_default();

    let mut pred = PredictionReport::default();
    let mut cycle = None;
    match &graph {
        Some(g) => match classify_limit(g, ms.ok) {
            Ok(p) => {
                pred.geometry = prediction_geometry(g, &p);
                if let Prediction::PolyCycle { cycle: c } = &p {
                    cycle = Some(c.clone());
                }
                pred.prediction = Some(p);
            }
            Err(e) => pred.error = Some(e.to_string()),
        },
        None => pred.error = Some("no separatrix graph".into()),
    }

    let runs: Vec<(SeedResult, Option<SecantCloud>)> =
        cfg.seeds.par_iter().map(|&s| run_seed(&atlas, s, cfg, &pred)).collect();
    let (seeds, clouds) = runs.into_iter().unzip();

    let report = AnalysisReport {
        version: VERSION.to_string(),
        config_hash: cfg.hash(),
        timestamp: None,
        input: InputEcho {
            field: field.clone(),
            display: [0, 1, 2].map(|k| field.components[k].to_string()),
            vanishing_order: m,
        },
        atlas: AtlasSummary::new(&atlas),
        reduction_reached: reached,
        equilibria: eqs,
        graph: graph.as_ref().map(GraphReport::new),
        ms_verdict: ms,
        weighted_chains: chains,
        prediction: pred,
        seeds,
        errors,
    };
    Ok(Analysis { report, atlas, graph, cycle, clouds })
}
