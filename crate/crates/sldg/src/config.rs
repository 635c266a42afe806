//! Run configuration: a single JSON document with unknown keys rejected.
//! All defaults are documented in `docs/config.md`.

use serde::Deserialize;

use crate::error::{Result, SldgError};
use crate::problems::{self, ProblemSpec};
use crate::solver2d::{Backend, StepConfig};
use crate::splitting::{self, SplittingScheme};
use crate::velocity::{TracerConfig, TracerOrder};

/// Polynomial degree, either a number or the `"Q2"`/`"Q3"` shorthand.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DegreeSpec {
    Number(usize),
    Name(String),
}

impl DegreeSpec {
    fn resolve(&self) -> Result<usize> {
        match self {
            DegreeSpec::Number(k) => Ok(*k),
            DegreeSpec::Name(s) => {
                let trimmed = s.trim_start_matches(['q', 'Q']);
                trimmed.parse().map_err(|_| {
                    SldgError::Config(format!("bad degree {s:?}; use an integer or \"Q2\"/\"Q3\""))
                })
            }
        }
    }
}

/// Output paths; all optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub metrics_csv: Option<String>,
    pub field_dump: Option<String>,
    pub plot_svg: Option<String>,
}

/// The on-disk run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub nx: usize,
    pub ny: usize,
    pub degree: DegreeSpec,
    pub cfl: f64,
    #[serde(default = "default_splitting")]
    pub splitting: String,
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub quad_points: Option<usize>,
    #[serde(default = "default_tracer_order")]
    pub tracer_order: u32,
    #[serde(default = "default_tracer_substeps")]
    pub tracer_substeps: u32,
    #[serde(default)]
    pub t_end: Option<f64>,
    /// What the error norms compare against: the L² projection of the
    /// exact solution ("projected", the reference tables' convention) or
    /// the exact solution itself ("pointwise").
    #[serde(default = "default_error_reference")]
    pub error_reference: String,
    /// Mesh sizes for `convergence` and `bench`; `nx`/`ny` are used when
    /// absent.
    #[serde(default)]
    pub meshes: Option<Vec<usize>>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

fn default_splitting() -> String {
    "strang2".into()
}

fn default_backend() -> String {
    "svs".into()
}

fn default_tracer_order() -> u32 {
    4
}

fn default_tracer_substeps() -> u32 {
    4
}

fn default_error_reference() -> String {
    "projected".into()
}

/// Error-norm reference convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorReference {
    Projected,
    Pointwise,
}

/// A validated configuration, ready to run.
#[derive(Clone)]
pub struct ResolvedConfig {
    pub problem: ProblemSpec,
    pub nx: usize,
    pub ny: usize,
    pub degree: usize,
    pub cfl: f64,
    pub scheme: SplittingScheme,
    pub backend: Backend,
    pub step: StepConfig,
    pub t_end: f64,
    pub meshes: Vec<usize>,
    pub outputs: OutputSpec,
    pub error_reference: ErrorReference,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SldgError::Config(e.to_string()))
    }

    pub fn resolve(&self, threads: usize) -> Result<ResolvedConfig> {
        let problem = problems::by_name(&self.problem)?;
        if self.nx == 0 || self.ny == 0 {
            return Err(SldgError::Config("mesh sizes must be positive".into()));
        }
        if !(self.cfl > 0.0) {
            return Err(SldgError::Config(format!("cfl must be positive, got {}", self.cfl)));
        }
        let degree = self.degree.resolve()?;
        let order = match self.tracer_order {
            2 => TracerOrder::Rk2,
            4 => TracerOrder::Rk4,
            other => {
                return Err(SldgError::Config(format!("tracer_order must be 2 or 4, got {other}")))
            }
        };
        let tracer = TracerConfig::new(order, self.tracer_substeps)
            .map_err(|e| SldgError::Config(e.to_string()))?;
        if let Some(q) = self.quad_points {
            if q < degree + 1 {
                return Err(SldgError::Config(format!(
                    "quad_points {q} is below degree+1 = {}",
                    degree + 1
                )));
            }
        }
        let t_end = self.t_end.unwrap_or(problem.horizon);
        if !(t_end > 0.0) {
            return Err(SldgError::Config(format!("t_end must be positive, got {t_end}")));
        }
        let scheme = splitting::resolve(&self.splitting)?;
        let backend = Backend::parse(&self.backend)?;
        let error_reference = match self.error_reference.as_str() {
            "projected" => ErrorReference::Projected,
            "pointwise" => ErrorReference::Pointwise,
            other => {
                return Err(SldgError::Config(format!(
                    "error_reference must be \"projected\" or \"pointwise\", got {other:?}"
                )))
            }
        };
        let meshes = self.meshes.clone().unwrap_or_else(|| vec![self.nx]);
        if meshes.is_empty() || meshes.iter().any(|&m| m == 0) {
            return Err(SldgError::Config("meshes must be a non-empty list of positive sizes".into()));
        }
        Ok(ResolvedConfig {
            problem,
            nx: self.nx,
            ny: self.ny,
            degree,
            cfl: self.cfl,
            scheme,
            backend,
            step: StepConfig { quad_points: self.quad_points, tracer, threads },
            t_end,
            meshes,
            outputs: self.outputs.clone(),
            error_reference,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem": "constant", "nx": 16, "ny": 16, "degree": 2, "cfl": 10.5
    }"#;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap().resolve(1).unwrap();
        assert_eq!(cfg.degree, 2);
        assert_eq!(cfg.scheme.name, "strang2");
        assert_eq!(cfg.backend, Backend::Svs);
        assert_eq!(cfg.step.tracer.substeps, 4);
        assert!((cfg.t_end - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn q_shorthand_sets_degree() {
        let text = r#"{"problem":"swirling","nx":8,"ny":8,"degree":"Q3","cfl":2.5,
                       "splitting":"strang4"}"#;
        let cfg = RunConfig::from_json(text).unwrap().resolve(1).unwrap();
        assert_eq!(cfg.degree, 3);
        assert_eq!(cfg.scheme.stages.len(), 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"problem":"constant","nx":16,"ny":16,"degree":2,"cfl":10.5,
                       "mystery": true}"#;
        assert!(RunConfig::from_json(text).is_err());
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in [
            r#"{"problem":"nope","nx":16,"ny":16,"degree":2,"cfl":10.5}"#,
            r#"{"problem":"constant","nx":0,"ny":16,"degree":2,"cfl":10.5}"#,
            r#"{"problem":"constant","nx":16,"ny":16,"degree":2,"cfl":-1.0}"#,
            r#"{"problem":"constant","nx":16,"ny":16,"degree":2,"cfl":10.5,"tracer_order":3}"#,
            r#"{"problem":"constant","nx":16,"ny":16,"degree":2,"cfl":10.5,"quad_points":2}"#,
            r#"{"problem":"constant","nx":16,"ny":16,"degree":2,"cfl":10.5,"backend":"magic"}"#,
        ] {
            let parsed = RunConfig::from_json(text);
            match parsed {
                Err(_) => {}
                Ok(cfg) => assert!(cfg.resolve(1).is_err(), "accepted: {text}"),
            }
        }
    }
}
