//! Deciding when a perturbed Kuramoto topology is indistinguishable from a
//! base topology under partial measurements.
//!
//! Two sufficient conditions are checked: (i) the auxiliary family
//! `ω - B(s·diag(δ) + 𝒜) sin(Bᵀx)` is contractive in the observable space
//! along the trajectories of interest (with `𝒩(C)` invariant under its
//! Jacobian, so a certificate exists), and (ii) the perturbation is invisible
//! to the measurements, `CΔ(x) = 0`. Candidate topologies are generated by
//! perturbing only edges whose incidence column lies in `𝒩(C)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{kuramoto_jacobian, DeltaField, KuramotoField, VectorField};
use crate::error::{Error, Result};
use crate::graph::{edge_index, fiedler_value, weighted_laplacian, EdgeWeights, IncidenceMatrix, NetworkSpec};
use crate::sim::{
    auxiliary_outputs, cohesiveness_margin, default_output_metric, length_from_members,
    output_distance, phase_aligned_distance, sync_condition, SimulationConfig, SyncCondition,
    Trajectory, DEFAULT_TAIL_FRACTION,
};
use crate::spectral::{analyze, ContractionReport, MeasurementMap, INVARIANCE_TOL};

/// Tolerance of the x-independent invisibility test `‖C B diag(δ)‖ = 0`.
pub const INVISIBILITY_TOL: f64 = 1e-12;
/// Default tolerance on the symmetry residual along trajectories.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Default s values at which the auxiliary family is sampled.
pub const CONTRACTION_S_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Edge-weight perturbation `δ`; the candidate weights are `𝒜 + diag(δ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub delta: DVector<f64>,
}

impl PerturbationSpec {
    pub fn new(delta: DVector<f64>) -> Result<Self> {
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("perturbation entries must be finite".into()));
        }
        Ok(Self { delta })
    }

    pub fn zeros(e: usize) -> Self {
        Self { delta: DVector::zeros(e) }
    }

    /// Perturbation on a graph with `n` nodes from `(i, j, δ)` triples.
    pub fn on_edges(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(EdgeWeights::from_edges(n, entries)?.as_vector().clone())
    }

    pub fn support(&self) -> Vec<usize> {
        self.delta.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, _)| k).collect()
    }
}

fn check_shapes(b: &IncidenceMatrix, c: &MeasurementMap) -> Result<()> {
    if c.states() != b.nodes() {
        return Err(Error::InvalidDimension(format!(
            "C acts on {} states, graph has {} nodes",
            c.states(),
            b.nodes()
        )));
    }
    Ok(())
}

/// Edges whose incidence column lies in `𝒩(C)`.
pub fn free_edges(b: &IncidenceMatrix, c: &MeasurementMap) -> Result<Vec<usize>> {
    check_shapes(b, c)?;
    let cb = c.matrix() * b.matrix();
    let scale = c.matrix().amax();
    Ok((0..b.edge_count())
        .filter(|&k| cb.column(k).amax() <= INVISIBILITY_TOL * scale)
        .collect())
}

/// `‖C B diag(δ)‖ = 0`, which gives `CΔ(x) = 0` for every `x`.
pub fn output_invisibility_check(b: &IncidenceMatrix, delta: &PerturbationSpec, c: &MeasurementMap) -> Result<bool> {
    Ok(invisibility_residual(b, delta, c)? <= INVISIBILITY_TOL * (1.0 + c.matrix().amax()))
}

pub fn invisibility_residual(b: &IncidenceMatrix, delta: &PerturbationSpec, c: &MeasurementMap) -> Result<f64> {
    check_shapes(b, c)?;
    if delta.delta.len() != b.edge_count() {
        return Err(Error::InvalidDimension(format!(
            "perturbation has {} entries for {} edges",
            delta.delta.len(),
            b.edge_count()
        )));
    }
    Ok((c.matrix() * b.matrix() * DMatrix::from_diagonal(&delta.delta)).amax())
}

/// Pointwise form for arbitrary perturbation fields: `max_x ‖CΔ(x)‖∞` over `states`.
pub fn sampled_invisibility_residual<D: VectorField + ?Sized>(
    delta: &D,
    c: &MeasurementMap,
    states: &[DVector<f64>],
) -> Result<f64> {
    if delta.dim() != c.states() {
        return Err(Error::InvalidDimension("perturbation field and C disagree on state size".into()));
    }
    Ok(states.iter().map(|x| c.apply(&delta.eval(x)).amax()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateTopology {
    #[serde(skip)]
    pub base: NetworkSpec,
    pub perturbation: PerturbationSpec,
    pub weights: EdgeWeights,
    pub connectivity: f64,
    pub connected: bool,
    pub negative_weights: bool,
}

impl CandidateTopology {
    pub fn network(&self) -> NetworkSpec {
        NetworkSpec { weights: self.weights.clone(), ..self.base.clone() }
    }
}

/// A candidate from an explicit perturbation; rejects support outside the free edges.
pub fn candidate(base: &NetworkSpec, c: &MeasurementMap, delta: PerturbationSpec) -> Result<CandidateTopology> {
    let free = free_edges(&base.incidence, c)?;
    if let Some(&edge) = delta.support().iter().find(|k| !free.contains(k)) {
        let (i, j) = base.incidence.edges()[edge];
        return Err(Error::NotFree {
            edge,
            reason: format!(
                "C maps the column of edge ({}, {}) to a nonzero vector, so CΔ(x) ≠ 0",
                i + 1,
                j + 1
            ),
        });
    }
    let weights = base.weights.perturbed(&delta.delta, 1.0)?;
    let connectivity = fiedler_value(&weighted_laplacian(&base.incidence, weights.as_vector())?)?;
    Ok(CandidateTopology {
        base: base.clone(),
        negative_weights: weights.has_negative(),
        perturbation: delta,
        weights,
        connectivity,
        connected: connectivity > 0.0,
    })
}

/// Every nonzero combination of per-free-edge perturbations.
///
/// Each free edge takes a value from `{0} ∪ values ∪ {-a_k}` (the last one
/// deletes the edge when it is present); duplicate perturbations are dropped
/// and the unperturbed base is not emitted. Order is lexicographic over the
/// free edges with the option order above.
pub fn generate_candidates(base: &NetworkSpec, c: &MeasurementMap, values: &[f64]) -> Result<Vec<CandidateTopology>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("candidate perturbation values must be finite".into()));
    }
    let free = free_edges(&base.incidence, c)?;
    let options: Vec<Vec<f64>> = free
        .iter()
        .map(|&k| {
            let mut opts = vec![0.0];
            let deletion = -base.weights[k];
            for &v in values.iter().chain(std::iter::once(&deletion)) {
                if !opts.contains(&v) {
                    opts.push(v);
                }
            }
            opts
        })
        .collect();

    let e = base.incidence.edge_count();
    let mut out = Vec::new();
    let mut idx = vec![0usize; free.len()];
    loop {
        if idx.iter().any(|&i| i != 0) {
            let mut delta = DVector::zeros(e);
            for ((&k, opts), &i) in free.iter().zip(&options).zip(&idx) {
                delta[k] = opts[i];
            }
            out.push(candidate(base, c, PerturbationSpec::new(delta)?)?);
        }
        // odometer over option indices, last edge fastest
        let mut pos = free.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < options[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `(s, x)` points at which the auxiliary Jacobian is examined.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SamplePlan {
    pub points: Vec<(f64, DVector<f64>)>,
}

impl SamplePlan {
    pub fn grid(s_values: &[f64], states: &[DVector<f64>]) -> Self {
        let points = s_values
            .iter()
            .flat_map(|&s| states.iter().map(move |x| (s, x.clone())))
            .collect();
        Self { points }
    }

    /// Every `stride`-th state of each `(s, trajectory)` member, plus its final state.
    pub fn from_trajectories(members: &[(f64, &Trajectory)], stride: usize) -> Self {
        let stride = stride.max(1);
        let mut points = Vec::new();
        for &(s, traj) in members {
            let len = traj.len();
            for k in (0..len).step_by(stride) {
                points.push((s, traj.state(k)));
            }
            if len > 0 && (len - 1) % stride != 0 {
                points.push((s, traj.last_state()));
            }
        }
        Self { points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionSample {
    pub s: f64,
    pub report: ContractionReport,
}

/// Worst case of the observable-space test over a sample plan. Sampled
/// evidence, not a proof over the whole state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledContraction {
    pub sample_count: usize,
    pub worst_abscissa: f64,
    pub worst_restricted_abscissa: f64,
    pub all_invariant: bool,
    pub max_invariance_residual: f64,
    pub certified_samples: usize,
    #[serde(skip)]
    pub samples: Vec<ContractionSample>,
}

impl SampledContraction {
    pub fn contracting(&self) -> bool {
        self.worst_restricted_abscissa < 0.0 && self.all_invariant
    }
}

/// Direction deflated from the compressed Jacobian: `C1ₙ` when it is a multiple of `1ₚ`.
fn neutral_direction(c: &MeasurementMap) -> Option<DVector<f64>> {
    (c.outputs() >= 2).then(|| c.consensus_image()).flatten()
}

/// Compresses `-B(s·diag(δ) + 𝒜) diag(cos(Bᵀx)) Bᵀ` at every sample.
pub fn verify_observable_contraction(
    base: &NetworkSpec,
    delta: &PerturbationSpec,
    c: &MeasurementMap,
    plan: &SamplePlan,
    mu: Option<f64>,
) -> Result<SampledContraction> {
    if plan.points.is_empty() {
        return Err(Error::InvalidInput("sample plan is empty".into()));
    }
    check_shapes(&base.incidence, c)?;
    let neutral = neutral_direction(c);
    let mut samples = Vec::with_capacity(plan.points.len());
    for (s, x) in &plan.points {
        let spec = base.with_perturbation(&delta.delta, *s)?;
        let jac = kuramoto_jacobian(&spec, x)?;
        let report = analyze(&jac, c, neutral.as_ref(), mu)?;
        samples.push(ContractionSample { s: *s, report });
    }
    let worst_abscissa = samples.iter().map(|r| r.report.abscissa).fold(f64::NEG_INFINITY, f64::max);
    let worst_restricted_abscissa =
        samples.iter().map(|r| r.report.restricted_abscissa).fold(f64::NEG_INFINITY, f64::max);
    let max_invariance_residual =
        samples.iter().map(|r| r.report.invariance_residual).fold(0.0, f64::max);
    Ok(SampledContraction {
        sample_count: samples.len(),
        worst_abscissa,
        worst_restricted_abscissa,
        all_invariant: samples.iter().all(|r| r.report.invariant),
        max_invariance_residual,
        certified_samples: samples.iter().filter(|r| r.report.certificate.is_some()).count(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryForm {
    /// `a₁₃cos(x₁ - x₃) = a₂₄cos(x₂ - x₄)` for the four-node pair measurement.
    FourNodePairs,
    /// `𝒩(C)` invariant under the Jacobian, relative residual.
    Invariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryCheck {
    pub form: SymmetryForm,
    pub residual: f64,
    pub passes: bool,
}

fn is_pair_measurement(c: &MeasurementMap) -> bool {
    if c.states() != 4 || c.outputs() != 2 {
        return false;
    }
    let m = c.matrix();
    let row_ok = |r: usize, on: [usize; 2], off: [usize; 2]| {
        let v = m[(r, on[0])];
        v != 0.0 && m[(r, on[1])] == v && m[(r, off[0])] == 0.0 && m[(r, off[1])] == 0.0
    };
    row_ok(0, [0, 1], [2, 3]) && row_ok(1, [2, 3], [0, 1])
}

/// Symmetry residual at `x` for the network `spec` (weights already perturbed).
pub fn symmetry_condition_check(spec: &NetworkSpec, c: &MeasurementMap, x: &DVector<f64>, tol: f64) -> Result<SymmetryCheck> {
    check_shapes(&spec.incidence, c)?;
    if x.len() != spec.nodes() {
        return Err(Error::InvalidDimension("state and network sizes differ".into()));
    }
    if is_pair_measurement(c) {
        let a13 = spec.weights[edge_index(4, 0, 2)?];
        let a24 = spec.weights[edge_index(4, 1, 3)?];
        let residual = (a13 * (x[0] - x[2]).cos() - a24 * (x[1] - x[3]).cos()).abs();
        return Ok(SymmetryCheck { form: SymmetryForm::FourNodePairs, residual, passes: residual <= tol });
    }
    let jac = kuramoto_jacobian(spec, x)?;
    let residual = crate::spectral::invariance_residual(&jac, c)? / jac.norm().max(f64::MIN_POSITIVE);
    Ok(SymmetryCheck { form: SymmetryForm::Invariance, residual, passes: residual <= tol.max(INVARIANCE_TOL) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictConfig {
    pub sim: SimulationConfig,
    /// Cohesiveness bound γ.
    pub gamma: f64,
    pub s_values: Vec<f64>,
    /// Take every `stride`-th trajectory state as a contraction/symmetry sample.
    pub stride: usize,
    pub symmetry_tol: f64,
    pub mu: Option<f64>,
    /// Phase-aligned residual below which simulation counts as agreement.
    pub agreement_tol: f64,
}

impl VerdictConfig {
    pub fn new(sim: SimulationConfig) -> Self {
        Self {
            sim,
            gamma: FRAC_PI_2,
            s_values: CONTRACTION_S_GRID.to_vec(),
            stride: 100,
            symmetry_tol: SYMMETRY_TOL,
            mu: None,
            agreement_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyncStatus {
    Satisfied,
    Violated,
    /// Some sampled member is disconnected (λ₂ = 0); the bound does not apply.
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationEvidence {
    pub max_output_distance: f64,
    pub phase_residual: f64,
    pub phase_shift: Vec<f64>,
    pub initial_length: f64,
    pub final_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    /// Conditions (i) and (ii) hold on every sample.
    Indistinguishable,
    /// The sufficient conditions fail somewhere but the simulated outputs agree.
    ObservedOnly,
    NotEstablished,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndistinguishabilityVerdict {
    pub output_invisible: bool,
    pub invisibility_residual: f64,
    pub contraction: SampledContraction,
    pub cohesive_margin: f64,
    pub symmetry_ok: bool,
    pub max_symmetry_residual: f64,
    pub sync: Vec<(f64, SyncCondition)>,
    pub sync_status: SyncStatus,
    pub simulation: SimulationEvidence,
    pub sufficient_conditions_met: bool,
    pub conclusion: Conclusion,
}

/// Runs the full checklist on `base` versus `base + δ`.
pub fn full_verdict(
    base: &NetworkSpec,
    delta: &PerturbationSpec,
    c: &MeasurementMap,
    config: &VerdictConfig,
) -> Result<IndistinguishabilityVerdict> {
    let invisibility_residual = invisibility_residual(&base.incidence, delta, c)?;
    let output_invisible = output_invisibility_check(&base.incidence, delta, c)?;

    let sim = config.sim.clone().with_s_grid(config.s_values.clone());
    let f = KuramotoField::new(base.clone());
    let d = DeltaField::new(base.incidence.clone(), delta.delta.clone())?;
    let members = auxiliary_outputs(&f, &d, c, &sim)?;

    let refs: Vec<(f64, &Trajectory)> = members.iter().map(|(s, t, _)| (*s, t)).collect();
    let plan = SamplePlan::from_trajectories(&refs, config.stride);
    let contraction = verify_observable_contraction(base, delta, c, &plan, config.mu)?;

    let mut cohesive_margin = f64::INFINITY;
    for (_, traj, _) in &members {
        cohesive_margin = cohesive_margin.min(cohesiveness_margin(traj, &base.incidence, config.gamma)?);
    }

    let mut max_symmetry_residual = 0.0_f64;
    let mut symmetry_ok = true;
    for (s, x) in &plan.points {
        let spec = base.with_perturbation(&delta.delta, *s)?;
        let check = symmetry_condition_check(&spec, c, x, config.symmetry_tol)?;
        max_symmetry_residual = max_symmetry_residual.max(check.residual);
        symmetry_ok &= check.passes;
    }

    let sync = config
        .s_values
        .iter()
        .map(|&s| Ok((s, sync_condition(base, &delta.delta, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let sync_status = if sync.iter().any(|(_, sc)| sc.connectivity <= 0.0) {
        SyncStatus::Unavailable
    } else if sync.iter().all(|(_, sc)| sc.holds) {
        SyncStatus::Satisfied
    } else {
        SyncStatus::Violated
    };

    let metric = sim.metric.clone().unwrap_or_else(|| default_output_metric(c));
    let first = &members[0].2;
    let last = &members[members.len() - 1].2;
    let distance = output_distance(first, last, &metric)?;
    let alignment = phase_aligned_distance(first, last, DEFAULT_TAIL_FRACTION)?;
    let outputs: Vec<_> = members.iter().map(|(_, _, y)| y.clone()).collect();
    let length = length_from_members(&outputs, &metric)?;
    let simulation = SimulationEvidence {
        max_output_distance: distance.iter().copied().fold(0.0, f64::max),
        phase_residual: alignment.residual,
        phase_shift: alignment.shift,
        initial_length: length.length[0],
        final_length: *length.length.last().unwrap_or(&0.0),
    };

    let sufficient_conditions_met =
        output_invisible && contraction.contracting() && symmetry_ok && cohesive_margin > 0.0;
    let conclusion = if sufficient_conditions_met {
        Conclusion::Indistinguishable
    } else if simulation.phase_residual < config.agreement_tol {
        Conclusion::ObservedOnly
    } else {
        Conclusion::NotEstablished
    };

    Ok(IndistinguishabilityVerdict {
        output_invisible,
        invisibility_residual,
        contraction,
        cohesive_margin,
        symmetry_ok,
        max_symmetry_residual,
        sync,
        sync_status,
        simulation,
        sufficient_conditions_met,
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fournode;
    use nalgebra::{dmatrix, dvector};
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn free_edges_of_pair_measurement() {
        let b = IncidenceMatrix::complete(4).unwrap();
        let c = fournode::pair_measurement();
        assert_eq!(free_edges(&b, &c).unwrap(), vec![0, 5]);
        assert!(free_edges(&b, &MeasurementMap::identity(4)).unwrap().is_empty());
        let sum = MeasurementMap::new(dmatrix![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(free_edges(&b, &sum).unwrap(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn invisibility_examples() {
        let b = IncidenceMatrix::complete(4).unwrap();
        let c = fournode::pair_measurement();
        let ok = PerturbationSpec::on_edges(4, &[(0, 1, 0.8), (2, 3, -1.3)]).unwrap();
        assert!(output_invisibility_check(&b, &ok, &c).unwrap());
        assert!(output_invisibility_check(&b, &PerturbationSpec::zeros(6), &c).unwrap());
        let bad = PerturbationSpec::on_edges(4, &[(0, 2, 0.5)]).unwrap();
        assert!(!output_invisibility_check(&b, &bad, &c).unwrap());
    }

    #[test]
    fn candidates_for_ring() {
        let base = fournode::symmetric_network();
        let c = fournode::pair_measurement();
        let cands = generate_candidates(&base, &c, &[1.0, -1.0]).unwrap();
        // options per free edge {0, 1, -1} (deletion coincides with -1)
        assert_eq!(cands.len(), 8);
        assert!(cands.iter().all(|k| output_invisibility_check(&base.incidence, &k.perturbation, &c).unwrap()));
        assert!(cands.iter().any(|k| !k.connected));
        let net4 = cands
            .iter()
            .find(|k| k.perturbation.delta == dvector![-1.0, 0.0, 0.0, 0.0, 0.0, -1.0])
            .unwrap();
        assert!(!net4.connected);
        assert_eq!(net4.connectivity, 0.0);

        let strengthened = candidate(&base, &c, PerturbationSpec::on_edges(4, &[(0, 1, 1.0)]).unwrap()).unwrap();
        assert!(strengthened.connected);
        assert_eq!(strengthened.weights[0], 2.0);

        let unchanged = candidate(&base, &c, PerturbationSpec::zeros(6)).unwrap();
        assert_eq!(unchanged.network(), base);

        let err = candidate(&base, &c, PerturbationSpec::on_edges(4, &[(0, 2, 1.0)]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotFree { edge: 1, .. }));

        assert!(generate_candidates(&base, &MeasurementMap::identity(4), &[1.0]).unwrap().is_empty());
    }

    #[test]
    fn compression_at_consensus() {
        let base = fournode::symmetric_network();
        let c = fournode::pair_measurement();
        let delta = PerturbationSpec::on_edges(4, &[(0, 1, 0.4), (2, 3, -0.7)]).unwrap();
        let plan = SamplePlan::grid(&[0.0, 0.3, 1.0], &[DVector::zeros(4)]);
        let rep = verify_observable_contraction(&base, &delta, &c, &plan, Some(2.0)).unwrap();
        assert!((rep.worst_restricted_abscissa + 2.0).abs() < 1e-12);
        assert!(rep.all_invariant);
        assert_eq!(rep.certified_samples, 3);
    }

    #[test]
    fn negative_cosine_sum_fails() {
        let base = fournode::symmetric_network();
        let c = fournode::pair_measurement();
        // x1 - x3 = x2 - x4 = 2π/3: a13 cos + a24 cos = -1
        let x = dvector![2.0 * FRAC_PI_3, 2.0 * FRAC_PI_3, 0.0, 0.0];
        let plan = SamplePlan::grid(&[0.5], &[x]);
        let rep = verify_observable_contraction(&base, &PerturbationSpec::zeros(6), &c, &plan, None).unwrap();
        assert!((rep.worst_restricted_abscissa - 1.0).abs() < 1e-12);
        assert!(!rep.contracting());
    }

    #[test]
    fn full_measurement_matches_fiedler() {
        let base = fournode::symmetric_network();
        let c = MeasurementMap::identity(4);
        let x = dvector![0.1, -0.3, 0.25, 0.4];
        let plan = SamplePlan::grid(&[0.0], std::slice::from_ref(&x));
        let rep = verify_observable_contraction(&base, &PerturbationSpec::zeros(6), &c, &plan, None).unwrap();
        let cos_w = base.incidence.differences(&x).map(f64::cos).component_mul(base.weights.as_vector());
        let l = weighted_laplacian(&base.incidence, &cos_w).unwrap();
        let lambda2 = fiedler_value(&l).unwrap();
        assert!((rep.worst_restricted_abscissa + lambda2).abs() < 1e-12);
        assert!(lambda2 > 0.0);
    }

    #[test]
    fn empty_plan_rejected() {
        let base = fournode::symmetric_network();
        let r = verify_observable_contraction(
            &base,
            &PerturbationSpec::zeros(6),
            &fournode::pair_measurement(),
            &SamplePlan::default(),
            None,
        );
        assert!(r.is_err());
    }

    #[test]
    fn symmetry_examples() {
        let base = fournode::symmetric_network();
        let c = fournode::pair_measurement();
        let x = dvector![0.2, 0.5, -0.1, 0.2];
        let r = symmetry_condition_check(&base, &c, &x, SYMMETRY_TOL).unwrap();
        assert_eq!(r.form, SymmetryForm::FourNodePairs);
        assert!(r.residual < 1e-15 && r.passes);

        let x = dvector![0.0, 0.0, FRAC_PI_3, FRAC_PI_2];
        let r = symmetry_condition_check(&base, &c, &x, SYMMETRY_TOL).unwrap();
        assert!((r.residual - 0.5).abs() < 1e-15);
        assert!(!r.passes);

        let r = symmetry_condition_check(&base, &MeasurementMap::identity(4), &x, SYMMETRY_TOL).unwrap();
        assert_eq!(r.form, SymmetryForm::Invariance);
        assert!(r.passes);
    }

    #[test]
    fn sampled_invisibility_matches_structural() {
        let b = IncidenceMatrix::complete(4).unwrap();
        let c = fournode::pair_measurement();
        let d = DeltaField::new(b, dvector![0.5, 0.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let states = vec![dvector![0.3, 1.0, -2.0, 0.5], dvector![3.0, 0.1, 0.2, -1.0]];
        assert!(sampled_invisibility_residual(&d, &c, &states).unwrap() < 1e-15);
    }
}
