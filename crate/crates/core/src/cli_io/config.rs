use super::CliError;
use crate::curvfunc::CurvatureFunctionSpec;
use crate::flow::{FlowOptions, PrescribedData};
use crate::geometry::Ambient;
use crate::sphere_grid::{build_grid, SphereGrid};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn default_order() -> usize {
    2
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitFlags {
    #[serde(default = "yes")]
    pub fields: bool,
    #[serde(default = "yes")]
    pub mesh: bool,
    #[serde(default = "yes")]
    pub diagnostics: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        EmitFlags {
            fields: true,
            mesh: true,
            diagnostics: true,
        }
    }
}

/// One JSON document per run; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub n: usize,
    pub resolution: Vec<usize>,
    #[serde(default = "default_order")]
    pub stencil_order: usize,
    pub curvature: CurvatureFunctionSpec,
    pub f: PrescribedData,
    #[serde(default)]
    pub flow: FlowOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub emit: EmitFlags,
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl SolveConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    /// Checks every module precondition and returns the grid.
    pub fn validate(&self) -> Result<SphereGrid, CliError> {
        let grid = build_grid(self.n, &self.resolution, self.stencil_order)
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.curvature
            .validate(self.n)
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.f
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let (lo, _) = self.f.bounds();
        if !(lo > 1.0) {
            return Err(CliError::Config(format!("inf f = {lo} must exceed 1")));
        }
        let o = &self.flow;
        if !(o.tol > 0.0 && o.cfl > 0.0 && o.margin > 0.0) || o.max_steps == 0 {
            return Err(CliError::Config("flow options must be positive".into()));
        }
        if let PrescribedData::Tabulated { n, .. } = &self.f {
            if *n != self.n {
                return Err(CliError::Config(format!(
                    "table dimension {n} differs from n = {}",
                    self.n
                )));
            }
        }
        Ok(grid)
    }
}

/// Input for `dualize`: a graph over the grid given as a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualizeConfig {
    pub n: usize,
    pub resolution: Vec<usize>,
    #[serde(default = "default_order")]
    pub stencil_order: usize,
    pub ambient: Ambient,
    pub graph: PathBuf,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl DualizeConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_defaults() {
        let c = SolveConfig::from_json(
            r#"{"n":2,"resolution":[8,16],"curvature":{"family":"gauss_k"},"f":{"kind":"constant","c":2.0}}"#,
        )
        .unwrap();
        assert_eq!(c.stencil_order, 2);
        assert_eq!(c.flow, FlowOptions::default());
        assert_eq!(c.emit, EmitFlags::default());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = SolveConfig::from_json(
            r#"{"n":2,"resolution":[8,16],"curvature":{"family":"gauss_k"},"f":{"kind":"constant","c":2.0},"tol":1e-6}"#,
        );
        assert!(matches!(e, Err(CliError::Config(_))));
        let e = SolveConfig::from_json(
            r#"{"n":2,"resolution":[8,16],"curvature":{"family":"gauss_k"},"f":{"kind":"constant","c":2.0},"flow":{"cfll":0.1}}"#,
        );
        assert!(matches!(e, Err(CliError::Config(_))));
    }

    #[test]
    fn preconditions_checked_before_compute() {
        let bad = [
            r#"{"n":2,"resolution":[8,15],"curvature":{"family":"gauss_k"},"f":{"kind":"constant","c":2.0}}"#,
            r#"{"n":2,"resolution":[8,16],"curvature":{"family":"hk","k":3},"f":{"kind":"constant","c":2.0}}"#,
            r#"{"n":2,"resolution":[8,16],"curvature":{"family":"gauss_k"},"f":{"kind":"constant","c":-2.0}}"#,
            r#"{"n":2,"resolution":[8,16],"curvature":{"family":"gauss_k"},"f":{"kind":"constant","c":2.0},"flow":{"cfl":0}}"#,
        ];
        for b in bad {
            let c = SolveConfig::from_json(b).unwrap();
            assert!(matches!(c.validate(), Err(CliError::Config(_))), "{b}");
        }
    }
}
