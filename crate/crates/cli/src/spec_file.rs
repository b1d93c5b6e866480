//! The network spec file: a TOML document with 1-based node labels.
//!
//! ```toml
//! n = 4
//! model = "kuramoto"
//! omega = [1.0, 1.0, 1.2, 1.2]
//! c = [[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]]
//! x0 = [0.0, 0.0, 0.6, 0.6]
//! edges = [{ i = 1, j = 2, weight = 1.0 }, ...]
//! delta = [{ i = 3, j = 4, weight = -1.0 }]   # optional perturbation
//!
//! [sim]                                        # optional
//! dt = 0.001
//! t_end = 50.0
//! ```
//!
//! Linear systems use `model = "linear"` with a `[linear]` table holding `a`
//! and an optional perturbation matrix `delta`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use netident::dynamics::{DeltaField, KuramotoField, LinearField, VectorField};
use netident::graph::{EdgeWeights, NetworkSpec};
use netident::indistinguishability::PerturbationSpec;
use netident::sim::{SimulationConfig, DEFAULT_DT, DEFAULT_HORIZON, DEFAULT_S_POINTS};
use netident::spectral::MeasurementMap;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type DynField = Box<dyn VectorField>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Kuramoto,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSection {
    pub a: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<Vec<f64>>>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_t_end() -> f64 {
    DEFAULT_HORIZON
}

fn default_s_points() -> usize {
    DEFAULT_S_POINTS
}

fn default_gamma() -> f64 {
    std::f64::consts::FRAC_PI_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_s_points")]
    pub s_points: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, t_end: DEFAULT_HORIZON, s_points: DEFAULT_S_POINTS, gamma: default_gamma() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpecFile {
    pub n: usize,
    #[serde(default)]
    pub model: Model,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omega: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_tilde: Option<Vec<f64>>,
    /// Perturbation magnitudes offered to candidate generation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSection>,
    #[serde(default)]
    pub sim: SimSection,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn finite(field: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(input(format!("{field}[{k}]: value must be finite"))),
        None => Ok(()),
    }
}

fn matrix(field: &str, rows: &[Vec<f64>], cols: usize) -> Result<DMatrix<f64>, CliError> {
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(input(format!("{field}[{r}]: expected {cols} entries, found {}", row.len())));
        }
        finite(&format!("{field}[{r}]"), row)?;
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

fn edge_list(field: &str, n: usize, entries: &[EdgeEntry]) -> Result<Vec<(usize, usize, f64)>, CliError> {
    let mut seen = std::collections::BTreeSet::new();
    entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            if e.i < 1 || e.j > n || e.i >= e.j {
                return Err(input(format!(
                    "{field}[{k}]: need 1 <= i < j <= {n}, found i = {}, j = {}",
                    e.i, e.j
                )));
            }
            if !e.weight.is_finite() {
                return Err(input(format!("{field}[{k}].weight: value must be finite")));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(input(format!("{field}[{k}]: edge ({}, {}) listed twice", e.i, e.j)));
            }
            Ok((e.i - 1, e.j - 1, e.weight))
        })
        .collect()
}

impl NetworkSpecFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: Self = toml::from_str(text).map_err(|e| input(format!("malformed spec file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| input(format!("{} is not UTF-8", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec file serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.n;
        if n < 1 {
            return Err(input("n: must be positive"));
        }
        if self.c.is_empty() {
            return Err(input("c: at least one measurement row required"));
        }
        matrix("c", &self.c, n)?;
        if self.x0.len() != n {
            return Err(input(format!("x0: expected {n} entries, found {}", self.x0.len())));
        }
        finite("x0", &self.x0)?;
        if let Some(x) = &self.x0_tilde {
            if x.len() != n {
                return Err(input(format!("x0_tilde: expected {n} entries, found {}", x.len())));
            }
            finite("x0_tilde", x)?;
        }
        if let Some(v) = &self.candidate_values {
            finite("candidate_values", v)?;
        }
        let sim = &self.sim;
        if !(sim.dt > 0.0 && sim.t_end > sim.dt && sim.t_end.is_finite()) {
            return Err(input(format!("sim: need 0 < dt < t_end, found dt = {}, t_end = {}", sim.dt, sim.t_end)));
        }
        if sim.s_points < 3 {
            return Err(input("sim.s_points: at least 3 required"));
        }
        if !(sim.gamma > 0.0) {
            return Err(input("sim.gamma: must be positive"));
        }
        match self.model {
            Model::Kuramoto => {
                if n < 2 {
                    return Err(input("n: a Kuramoto network needs at least 2 nodes"));
                }
                if self.omega.len() != n {
                    return Err(input(format!("omega: expected {n} entries, found {}", self.omega.len())));
                }
                finite("omega", &self.omega)?;
                edge_list("edges", n, &self.edges)?;
                edge_list("delta", n, &self.delta)?;
                if self.linear.is_some() {
                    return Err(input("linear: only allowed with model = \"linear\""));
                }
            }
            Model::Linear => {
                let lin = self.linear.as_ref().ok_or_else(|| input("linear: section required for model = \"linear\""))?;
                if lin.a.len() != n {
                    return Err(input(format!("linear.a: expected {n} rows, found {}", lin.a.len())));
                }
                matrix("linear.a", &lin.a, n)?;
                if let Some(d) = &lin.delta {
                    if d.len() != n {
                        return Err(input(format!("linear.delta: expected {n} rows, found {}", d.len())));
                    }
                    matrix("linear.delta", d, n)?;
                }
                if !self.edges.is_empty() || !self.delta.is_empty() {
                    return Err(input("edges/delta: only allowed with model = \"kuramoto\""));
                }
            }
        }
        Ok(())
    }

    pub fn measurement(&self) -> Result<MeasurementMap, CliError> {
        let c = matrix("c", &self.c, self.n)?;
        MeasurementMap::new(c).map_err(|e| input(format!("c: {e}")))
    }

    pub fn network(&self) -> Result<NetworkSpec, CliError> {
        if self.model != Model::Kuramoto {
            return Err(input("model: this command needs a Kuramoto network"));
        }
        let edges = edge_list("edges", self.n, &self.edges)?;
        let weights = EdgeWeights::from_edges(self.n, &edges).map_err(|e| input(format!("edges: {e}")))?;
        NetworkSpec::new(self.n, weights, DVector::from_row_slice(&self.omega)).map_err(|e| input(e.to_string()))
    }

    pub fn perturbation(&self) -> Result<PerturbationSpec, CliError> {
        let entries = edge_list("delta", self.n, &self.delta)?;
        PerturbationSpec::on_edges(self.n, &entries).map_err(|e| input(format!("delta: {e}")))
    }

    pub fn linear_matrices(&self) -> Result<(DMatrix<f64>, DMatrix<f64>), CliError> {
        let lin = self.linear.as_ref().ok_or_else(|| input("linear: section missing"))?;
        let a = matrix("linear.a", &lin.a, self.n)?;
        let d = match &lin.delta {
            Some(d) => matrix("linear.delta", d, self.n)?,
            None => DMatrix::zeros(self.n, self.n),
        };
        Ok((a, d))
    }

    /// Base field `f` and perturbation field `Δ` for an explicit perturbation.
    pub fn fields(
        &self,
        delta: Option<&PerturbationSpec>,
    ) -> Result<(DynField, DynField), CliError> {
        match self.model {
            Model::Kuramoto => {
                let net = self.network()?;
                let delta = match delta {
                    Some(d) => d.clone(),
                    None => self.perturbation()?,
                };
                let d = DeltaField::new(net.incidence.clone(), delta.delta).map_err(|e| input(e.to_string()))?;
                Ok((Box::new(KuramotoField::new(net)), Box::new(d)))
            }
            Model::Linear => {
                let (a, d) = self.linear_matrices()?;
                let f = LinearField::new(a).map_err(|e| input(e.to_string()))?;
                let d = LinearField::new(d).map_err(|e| input(e.to_string()))?;
                Ok((Box::new(f), Box::new(d)))
            }
        }
    }

    pub fn x0(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.x0)
    }

    pub fn x0_tilde(&self) -> DVector<f64> {
        self.x0_tilde.as_ref().map(|v| DVector::from_row_slice(v)).unwrap_or_else(|| self.x0())
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig::new(self.x0())
            .with_x0_tilde(self.x0_tilde())
            .with_step(self.sim.dt, self.sim.t_end)
            .with_s_grid(netident::sim::uniform_s_grid(self.sim.s_points))
    }
}
