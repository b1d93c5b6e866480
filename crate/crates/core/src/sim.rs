//! Simulation engine: fixed-step RK4, measurements, the output length
//! functional across the auxiliary family, and comparison metrics.

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::Serialize;

use crate::dynamics::{blend_initial, AuxiliaryField, VectorField};
use crate::error::{Error, Result};
use crate::graph::{fiedler_value, weighted_laplacian, IncidenceMatrix, NetworkSpec};
use crate::spectral::{consensus_projector, MeasurementMap};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 50.0;
pub const DEFAULT_S_POINTS: usize = 11;
/// Trailing share of the horizon used for phase alignment.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.4;
/// Any state component beyond this magnitude aborts integration.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// `points` equispaced values covering `[0, 1]`.
pub fn uniform_s_grid(points: usize) -> Vec<f64> {
    let last = points.max(2) - 1;
    (0..=last).map(|k| k as f64 / last as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub horizon: f64,
    pub x0: DVector<f64>,
    /// Initial state of the perturbed system; equals `x0` unless set.
    pub x0_tilde: DVector<f64>,
    pub s_grid: Vec<f64>,
    /// Output metric `M`; `None` picks [`default_output_metric`].
    pub metric: Option<DMatrix<f64>>,
}

impl SimulationConfig {
    pub fn new(x0: DVector<f64>) -> Self {
        Self {
            dt: DEFAULT_DT,
            horizon: DEFAULT_HORIZON,
            x0_tilde: x0.clone(),
            x0,
            s_grid: uniform_s_grid(DEFAULT_S_POINTS),
            metric: None,
        }
    }

    pub fn with_x0_tilde(mut self, x0_tilde: DVector<f64>) -> Self {
        self.x0_tilde = x0_tilde;
        self
    }

    pub fn with_step(mut self, dt: f64, horizon: f64) -> Self {
        self.dt = dt;
        self.horizon = horizon;
        self
    }

    pub fn with_s_grid(mut self, s_grid: Vec<f64>) -> Self {
        self.s_grid = s_grid;
        self
    }

    pub fn with_metric(mut self, metric: DMatrix<f64>) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.horizon > self.dt && self.horizon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "horizon {} must exceed the time step {}",
                self.horizon, self.dt
            )));
        }
        if self.x0.len() != self.x0_tilde.len() {
            return Err(Error::InvalidDimension("x0 and x0_tilde differ in length".into()));
        }
        if self.x0.iter().chain(self.x0_tilde.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("initial states must be finite".into()));
        }
        let g = &self.s_grid;
        if g.len() < 2 || g[0] != 0.0 || g[g.len() - 1] != 1.0 || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "s grid must be strictly increasing from 0 to 1".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Consensus projector on outputs when `C1ₙ ∝ 1ₚ` (and `p ≥ 2`), identity otherwise.
pub fn default_output_metric(c: &MeasurementMap) -> DMatrix<f64> {
    let p = c.outputs();
    match c.consensus_image() {
        Some(_) if p >= 2 => consensus_projector(p),
        _ => DMatrix::identity(p, p),
    }
}

/// Uniformly sampled states, one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: DMatrix<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn state(&self, k: usize) -> DVector<f64> {
        self.states.row(k).transpose()
    }

    pub fn last_state(&self) -> DVector<f64> {
        self.state(self.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTrajectory {
    pub times: Vec<f64>,
    pub outputs: DMatrix<f64>,
}

impl OutputTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn output(&self, k: usize) -> DVector<f64> {
        self.outputs.row(k).transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthSeries {
    pub times: Vec<f64>,
    pub length: Vec<f64>,
}

fn rk4_step<F: VectorField + ?Sized>(field: &F, x: &DVector<f64>, dt: f64) -> DVector<f64> {
    let k1 = field.eval(x);
    let k2 = field.eval(&(x + &k1 * (0.5 * dt)));
    let k3 = field.eval(&(x + &k2 * (0.5 * dt)));
    let k4 = field.eval(&(x + &k3 * dt));
    x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0)
}

fn diverged(x: &DVector<f64>) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_THRESHOLD)
}

/// Classical RK4 over `[0, horizon]`; on divergence returns the states up to
/// the last finite step alongside the error.
pub fn integrate_partial<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    dt: f64,
    horizon: f64,
) -> Result<(Trajectory, Option<Error>)> {
    let n = field.dim();
    if x0.len() != n {
        return Err(Error::InvalidDimension(format!(
            "initial state has {} entries, field has dimension {n}",
            x0.len()
        )));
    }
    if !(dt > 0.0) || !(horizon > dt) {
        return Err(Error::InvalidInput(format!("need 0 < dt < horizon, got dt={dt}, horizon={horizon}")));
    }
    let steps = (horizon / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut buf = Vec::with_capacity((steps + 1) * n);
    let mut x = x0.clone();
    let mut failure = None;
    if diverged(&x) {
        failure = Some(Error::Divergence { time: 0.0, threshold: DIVERGENCE_THRESHOLD });
    } else {
        times.push(0.0);
        buf.extend(x.iter());
        for k in 1..=steps {
            x = rk4_step(field, &x, dt);
            let t = k as f64 * dt;
            if diverged(&x) {
                failure = Some(Error::Divergence { time: t, threshold: DIVERGENCE_THRESHOLD });
                break;
            }
            times.push(t);
            buf.extend(x.iter());
        }
    }
    let states = DMatrix::from_row_slice(times.len(), n, &buf);
    Ok((Trajectory { times, states }, failure))
}

pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    dt: f64,
    horizon: f64,
) -> Result<Trajectory> {
    match integrate_partial(field, x0, dt, horizon)? {
        (traj, None) => Ok(traj),
        (_, Some(err)) => Err(err),
    }
}

/// `y = Cx` row by row.
pub fn measure(traj: &Trajectory, c: &MeasurementMap) -> Result<OutputTrajectory> {
    if traj.dim() != c.states() {
        return Err(Error::InvalidDimension(format!(
            "trajectory has {} states, C expects {}",
            traj.dim(),
            c.states()
        )));
    }
    Ok(OutputTrajectory { times: traj.times.clone(), outputs: &traj.states * c.matrix().transpose() })
}

fn m_norm(d: DVectorView<'_, f64>, m: &DMatrix<f64>) -> f64 {
    (d.dot(&(m * d))).max(0.0).sqrt()
}

fn check_metric(m: &DMatrix<f64>, p: usize) -> Result<()> {
    if m.shape() != (p, p) {
        return Err(Error::InvalidDimension(format!("metric is {}x{}, outputs have {p} channels", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Members `y(t, s)` of the auxiliary family, integrated from blended initial states.
pub fn auxiliary_outputs<F: VectorField, D: VectorField>(
    base: &F,
    delta: &D,
    c: &MeasurementMap,
    config: &SimulationConfig,
) -> Result<Vec<(f64, Trajectory, OutputTrajectory)>> {
    config.validate()?;
    config
        .s_grid
        .iter()
        .map(|&s| {
            let field = AuxiliaryField::new(base, delta, s)?;
            let x0 = blend_initial(&config.x0, &config.x0_tilde, s)?;
            let traj = integrate(&field, &x0, config.dt, config.horizon)?;
            let y = measure(&traj, c)?;
            Ok((s, traj, y))
        })
        .collect()
}

/// Chord-length estimate of `L(t) = ∫₀¹ ‖∂ₛy(t, s)‖_M ds` over the s grid.
pub fn length_from_members(members: &[OutputTrajectory], metric: &DMatrix<f64>) -> Result<LengthSeries> {
    let first = members
        .first()
        .ok_or_else(|| Error::InvalidInput("no auxiliary members".into()))?;
    check_metric(metric, first.outputs.ncols())?;
    if members.iter().any(|m| m.times != first.times) {
        return Err(Error::InvalidInput("auxiliary members have different time grids".into()));
    }
    let mut length = vec![0.0; first.len()];
    for pair in members.windows(2) {
        let diff = &pair[1].outputs - &pair[0].outputs;
        for (k, l) in length.iter_mut().enumerate() {
            *l += m_norm(diff.row(k).transpose().as_view(), metric);
        }
    }
    Ok(LengthSeries { times: first.times.clone(), length })
}

pub fn length_functional<F: VectorField, D: VectorField>(
    base: &F,
    delta: &D,
    c: &MeasurementMap,
    config: &SimulationConfig,
) -> Result<LengthSeries> {
    if config.s_grid.len() < 3 {
        return Err(Error::InvalidInput("length functional needs at least 3 s values".into()));
    }
    let metric = config.metric.clone().unwrap_or_else(|| default_output_metric(c));
    let members: Vec<OutputTrajectory> =
        auxiliary_outputs(base, delta, c, config)?.into_iter().map(|(_, _, y)| y).collect();
    length_from_members(&members, &metric)
}

fn check_grids(y: &OutputTrajectory, y2: &OutputTrajectory) -> Result<()> {
    if y.times != y2.times || y.outputs.shape() != y2.outputs.shape() {
        return Err(Error::InvalidInput("output trajectories are on different grids".into()));
    }
    Ok(())
}

/// Pointwise `‖y(t) - y₂(t)‖_M`.
pub fn output_distance(y: &OutputTrajectory, y2: &OutputTrajectory, metric: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_grids(y, y2)?;
    check_metric(metric, y.outputs.ncols())?;
    let diff = &y.outputs - &y2.outputs;
    Ok((0..diff.nrows()).map(|k| m_norm(diff.row(k).transpose().as_view(), metric)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseAlignment {
    /// Mean of `y₂ - y` per channel over the tail.
    pub shift: Vec<f64>,
    /// `max_t ‖y₂(t) - y(t) - shift‖∞` over the tail.
    pub residual: f64,
    /// Largest `‖·‖∞` gap between shifts estimated on four consecutive tail windows.
    pub shift_drift: f64,
    pub tail_start: f64,
}

pub fn phase_aligned_distance(y: &OutputTrajectory, y2: &OutputTrajectory, tail_fraction: f64) -> Result<PhaseAlignment> {
    check_grids(y, y2)?;
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::OutOfRange(format!("tail fraction {tail_fraction} outside (0, 1)")));
    }
    let len = y.len();
    let start = ((1.0 - tail_fraction) * len as f64).floor() as usize;
    let start = start.min(len.saturating_sub(1));
    let diff = &y2.outputs - &y.outputs;
    let tail = diff.rows(start, len - start);
    let shift: DVector<f64> = tail.row_mean().transpose();
    let residual = tail
        .row_iter()
        .map(|r| (r.transpose() - &shift).amax())
        .fold(0.0, f64::max);

    let windows = 4.min(tail.nrows());
    let width = tail.nrows() / windows.max(1);
    let means: Vec<DVector<f64>> = (0..windows)
        .map(|w| tail.rows(w * width, width.max(1)).row_mean().transpose())
        .collect();
    let mut shift_drift = 0.0_f64;
    for a in &means {
        for b in &means {
            shift_drift = shift_drift.max((a - b).amax());
        }
    }
    Ok(PhaseAlignment {
        shift: shift.iter().copied().collect(),
        residual,
        shift_drift,
        tail_start: y.times[start],
    })
}

/// `γ - ‖Bᵀx(t)‖∞` at each sample.
pub fn cohesiveness_series(traj: &Trajectory, b: &IncidenceMatrix, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("cohesiveness bound must be positive, got {gamma}")));
    }
    if traj.dim() != b.nodes() {
        return Err(Error::InvalidDimension("trajectory and graph sizes differ".into()));
    }
    Ok(traj
        .states
        .row_iter()
        .map(|x| {
            let spread = b.edges().iter().map(|&(i, j)| (x[i] - x[j]).abs()).fold(0.0, f64::max);
            gamma - spread
        })
        .collect())
}

/// `min_t (γ - ‖Bᵀx(t)‖∞)`; positive iff the trajectory stays γ-phase cohesive.
pub fn cohesiveness_margin(traj: &Trajectory, b: &IncidenceMatrix, gamma: f64) -> Result<f64> {
    Ok(cohesiveness_series(traj, b, gamma)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Both sides of `λ₂(B(s·diag(δ) + 𝒜)Bᵀ) > ‖Bᵀω‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyncCondition {
    pub connectivity: f64,
    pub frequency_spread: f64,
    pub holds: bool,
}

pub fn sync_condition(spec: &NetworkSpec, delta: &DVector<f64>, s: f64) -> Result<SyncCondition> {
    let weights = spec.weights.perturbed(delta, s)?;
    let l = weighted_laplacian(&spec.incidence, weights.as_vector())?;
    let connectivity = fiedler_value(&l)?;
    let frequency_spread = spec.incidence.differences(&spec.omega).norm();
    Ok(SyncCondition { connectivity, frequency_spread, holds: connectivity > frequency_spread })
}
