//! Analysis configuration, read from TOML. Every key is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::TraceConfig;
use crate::io::to_canonical_json;
use crate::secant::SecantConfig;
use crate::singularity::EquilibriumConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub dot: Option<PathBuf>,
    /// Secant samples of the first seed.
    pub csv: Option<PathBuf>,
    pub polylines: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Largest number of blown-up points, the initial polar blow-up included.
    pub depth_cap: usize,
    pub equilibria: EquilibriumConfig,
    pub trace: TraceConfig,
    pub secant: SecantConfig,
    pub seeds: Vec<[f64; 3]>,
    /// Excluded from the config hash.
    pub output: OutputPaths,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            depth_cap: 4,
            equilibria: EquilibriumConfig::default(),
            trace: TraceConfig::default(),
            secant: SecantConfig::default(),
            seeds: Vec::new(),
            output: OutputPaths::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Rejects non-positive tolerances and a zero depth cap.
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str| Err(Error::Invalid(format!("config: {name} must be positive")));
        if self.depth_cap < 1 {
            return Err(Error::Invalid("config: depth_cap must be at least 1".into()));
        }
        let e = &self.equilibria;
        let t = &self.trace;
        let s = &self.secant;
        let positive = [
            ("equilibria.extent", e.extent),
            ("equilibria.merge_tol", e.merge_tol),
            ("equilibria.eps_hyp_exact", e.eps_hyp_exact),
            ("equilibria.eps_hyp_float", e.eps_hyp_float),
            ("trace.r_land", t.r_land),
            ("trace.eps_launch", t.eps_launch),
            ("trace.cone_ratio", t.cone_ratio),
            ("trace.t_max", t.t_max),
            ("trace.arc_cap", t.arc_cap),
            ("trace.dedup_angle", t.dedup_angle),
            ("trace.tol.rtol", t.tol.rtol),
            ("trace.tol.atol", t.tol.atol),
            ("secant.rtol", s.rtol),
            ("secant.r_min", s.r_min),
            ("secant.t_max", s.t_max),
            ("secant.transient_radius", s.transient_radius),
            ("secant.angle_cap", s.angle_cap),
            ("secant.log_r_cap", s.log_r_cap),
            ("secant.stall_time", s.stall_time),
            ("secant.d_point", s.d_point),
            ("secant.d_tube", s.d_tube),
            ("secant.d_match", s.d_match),
            ("secant.dwell_ratio", s.dwell_ratio),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name);
            }
        }
        if e.grid == 0 {
            return bad("equilibria.grid");
        }
        if s.r_min >= s.transient_radius {
            return Err(Error::Invalid("config: secant.r_min must be below secant.transient_radius".into()));
        }
        if let Some(i) = self.seeds.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Invalid(format!("config: seed {i} is not finite")));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of everything but the output paths.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputPaths::default();
        let text = to_canonical_json(&c).expect("config serializes");
        let d = Sha256::digest(text.as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}
