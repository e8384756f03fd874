//! The weak Morse-Smale verdict: hyperbolicity, no two-dimensional saddle
//! connections off the skeleton, no infinitesimal saddle connections.

use serde::{Deserialize, Serialize};

use crate::graph::{two_d_saddle_connections, EdgeType, SeparatrixGraph};
use crate::singularity::{EquilibriumRecord, Kind};
use crate::weights::detect_infinitesimal_connections;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Exact,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: u8,
    /// Equilibrium ids for conditions 1 and 3, edge ids for condition 2.
    pub culprits: Vec<usize>,
    pub detail: String,
    pub certainty: Certainty,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MSVerdict {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl MSVerdict {
    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
        self.ok = false;
    }
}

/// Combines the three conditions. A missing graph makes conditions 2 and 3
/// undecidable and is reported as an incomplete analysis.
pub fn check_weak_morse_smale(eqs: &[EquilibriumRecord], graph: Option<&SeparatrixGraph>, r_land: f64) -> MSVerdict {
    let mut v = MSVerdict { ok: true, ..Default::default() };
    for e in eqs.iter().filter(|e| e.kind == Kind::NonHyperbolic) {
        let exact = e.eigenvalues.iter().all(|x| x.re_exact.is_some());
        let eig: Vec<String> = e.eigenvalues.iter().map(|x| format!("{:.6}{:+.6}i", x.re, x.im)).collect();
        v.push(Violation {
            condition: 1,
            culprits: vec![e.id],
            detail: format!("equilibrium {} is not hyperbolic (eigenvalues {})", e.id, eig.join(", ")),
            certainty: if exact { Certainty::Exact } else { Certainty::Numeric },
        });
    }
    let Some(g) = graph else {
        v.push(Violation {
            condition: 2,
            culprits: Vec::new(),
            detail: "incomplete analysis: separatrix graph unavailable".into(),
            certainty: Certainty::Numeric,
        });
        return v;
    };
    for id in two_d_saddle_connections(g) {
        let e = &g.edges[id];
        v.push(Violation {
            condition: 2,
            culprits: vec![id],
            detail: format!("trace edge {id} joins restricted saddles {} and {}", e.origin, e.end),
            certainty: Certainty::Numeric,
        });
    }
    v.warnings.extend(near_misses(eqs, g, r_land));
    let rep = detect_infinitesimal_connections(g);
    for ch in rep.connections {
        let mut culprits: Vec<usize> = std::iter::once(ch.start).chain(ch.steps.iter().map(|s| s.p_next)).collect();
        culprits.dedup();
        let end = *culprits.last().unwrap();
        v.push(Violation {
            condition: 3,
            culprits,
            detail: format!(
                "weighted chain from {} of length {} is associated to both ends (ends at {end})",
                ch.start,
                ch.steps.len()
            ),
            certainty: if ch.float_mode { Certainty::Numeric } else { Certainty::Exact },
        });
    }
    v.warnings.extend(rep.warnings);
    v
}

/// Trace edges passing within `10 r_land` of a plane saddle other than
/// their endpoints: not violations, but close to one.
fn near_misses(eqs: &[EquilibriumRecord], g: &SeparatrixGraph, r_land: f64) -> Vec<String> {
    let mut out = Vec::new();
    for e in g.edges.iter().filter(|e| e.edge_type == EdgeType::Trace) {
        for q in eqs.iter().filter(|q| q.kind == Kind::PlaneSaddle && q.id != e.origin && q.id != e.end) {
            let close = e.polyline.iter().any(|p| {
                q.position_in(p.chart)
                    .map(|pos| (0..3).map(|k| (pos[k] - p.coords[k]).abs()).fold(0.0, f64::max) < 10.0 * r_land)
                    .unwrap_or(false)
            });
            if close {
                out.push(format!("trace edge {} passes within {:e} of saddle {}", e.id, 10.0 * r_land, q.id));
            }
        }
    }
    out
}
