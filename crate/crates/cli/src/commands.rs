//! Subcommand implementations. Each writes its outputs plus a manifest and
//! returns a human summary with the exit status.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use netident::dynamics::{blend_initial, AuxiliaryField, VectorField};
use netident::indistinguishability::{
    free_edges, full_verdict, generate_candidates, invisibility_residual, verify_observable_contraction,
    CandidateTopology, PerturbationSpec, SamplePlan, VerdictConfig, CONTRACTION_S_GRID,
};
use netident::sim::{
    auxiliary_outputs, cohesiveness_series, default_output_metric, integrate_partial, length_from_members, measure,
    output_distance, phase_aligned_distance, uniform_s_grid, OutputTrajectory, Trajectory, DEFAULT_TAIL_FRACTION,
};
use netident::spectral::{analyze as analyze_matrix, consensus_projector, ContractionReport, MeasurementMap};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::manifest::{resolve_output, sidecar, RunManifest};
use crate::spec_file::{EdgeEntry, Model, NetworkSpecFile};

/// Stable process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success,
    Infeasible,
    Diverged,
}

impl Exit {
    pub fn code(self) -> i32 {
        match self {
            Self::Success => 0,
            Self::Infeasible => 2,
            Self::Diverged => 3,
        }
    }
}

/// Exit code for failures reported through [`CliError`].
pub const INPUT_ERROR: i32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub exit: Exit,
    pub outputs: Vec<PathBuf>,
}

/// Selects the second network of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    /// The `delta` (or `linear.delta`) of the spec file.
    SpecDelta,
    /// 1-based index into the candidate list.
    Candidate(usize),
    /// Explicit perturbation, 1-based edges.
    Delta(Vec<EdgeEntry>),
}

pub const DEFAULT_VALUES: [f64; 2] = [1.0, -1.0];

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn finish(mut manifest: RunManifest, primary: &Path, mut outputs: Vec<PathBuf>, exit: Exit) -> Result<Vec<PathBuf>, CliError> {
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    manifest.exit_code = exit.code();
    outputs.push(manifest.write_beside(primary)?);
    Ok(outputs)
}

fn edge_pairs(incidence_edges: &[(usize, usize)], ks: &[usize]) -> Vec<[usize; 2]> {
    ks.iter().map(|&k| [incidence_edges[k].0 + 1, incidence_edges[k].1 + 1]).collect()
}

fn edge_entries(edges: &[(usize, usize)], values: &DVector<f64>) -> Vec<EdgeEntry> {
    edges
        .iter()
        .zip(values.iter())
        .filter(|(_, &w)| w != 0.0)
        .map(|(&(i, j), &w)| EdgeEntry { i: i + 1, j: j + 1, weight: w })
        .collect()
}

#[derive(Debug, Serialize)]
struct SampleRecord {
    s: f64,
    abscissa: f64,
    restricted_abscissa: f64,
    invariant: bool,
    invariance_residual: f64,
    certified: bool,
    lmi_residual: Option<f64>,
}

fn sample_record(s: f64, r: &ContractionReport) -> SampleRecord {
    SampleRecord {
        s,
        abscissa: r.abscissa,
        restricted_abscissa: r.restricted_abscissa,
        invariant: r.invariant,
        invariance_residual: r.invariance_residual,
        certified: r.certificate.is_some(),
        lmi_residual: r.lmi_residual,
    }
}

/// Observable-space contraction along the auxiliary family.
pub fn analyze(spec_path: &Path, mu: Option<f64>, samples: usize, out: &Path) -> Result<Outcome, CliError> {
    let (file, bytes) = NetworkSpecFile::load(spec_path)?;
    let c = file.measurement()?;
    if samples == 0 {
        return Err(CliError::Input("--samples: must be positive".into()));
    }
    let mut lines = Vec::new();
    let (records, free, inv_residual) = match file.model {
        Model::Kuramoto => {
            let base = file.network()?;
            let delta = file.perturbation()?;
            let free = free_edges(&base.incidence, &c)?;
            let residual = invisibility_residual(&base.incidence, &delta, &c)?;
            let (f, d) = file.fields(Some(&delta))?;
            let config = file.simulation().with_s_grid(CONTRACTION_S_GRID.to_vec());
            let members = auxiliary_outputs(&f, &d, &c, &config)?;
            let refs: Vec<(f64, &Trajectory)> = members.iter().map(|(s, t, _)| (*s, t)).collect();
            let stride = (config.steps() / samples).max(1);
            let sampled = verify_observable_contraction(
                &base,
                &delta,
                &c,
                &SamplePlan::from_trajectories(&refs, stride),
                mu,
            )?;
            let records: Vec<SampleRecord> = sampled.samples.iter().map(|s| sample_record(s.s, &s.report)).collect();
            (records, Some(edge_pairs(base.incidence.edges(), &free)), residual)
        }
        Model::Linear => {
            let (a, d) = file.linear_matrices()?;
            let residual = (c.matrix() * &d).norm();
            let records = CONTRACTION_S_GRID
                .iter()
                .map(|&s| Ok(sample_record(s, &analyze_matrix(&(&a + &d * s), &c, None, mu)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            (records, None, residual)
        }
    };

    let worst = records.iter().map(|r| r.abscissa).fold(f64::NEG_INFINITY, f64::max);
    let worst_restricted = records.iter().map(|r| r.restricted_abscissa).fold(f64::NEG_INFINITY, f64::max);
    let all_invariant = records.iter().all(|r| r.invariant);
    let certified = records.iter().filter(|r| r.certified).count();
    let exit = match mu {
        Some(_) if certified < records.len() => Exit::Infeasible,
        _ => Exit::Success,
    };

    lines.push(format!("samples: {}", records.len()));
    lines.push(format!("abscissa alpha(C A C+): worst {worst:.6}"));
    if worst_restricted != worst {
        lines.push(format!("abscissa with consensus direction deflated: worst {worst_restricted:.6}"));
    }
    lines.push(format!("nullspace invariance: {}", if all_invariant { "holds" } else { "violated" }));
    if let Some(mu) = mu {
        lines.push(format!("certificate at rate {mu}: {certified}/{} samples", records.len()));
    }
    if let Some(free) = &free {
        let list: Vec<String> = free.iter().map(|[i, j]| format!("({i},{j})")).collect();
        lines.push(format!("free edges: {}", if list.is_empty() { "none".into() } else { list.join(" ") }));
    }
    lines.push(format!("invisibility residual |C delta|: {inv_residual:.3e}"));

    let record = json!({
        "model": file.model,
        "mu": mu,
        "free_edges": free,
        "invisibility_residual": inv_residual,
        "worst_abscissa": worst,
        "worst_restricted_abscissa": worst_restricted,
        "all_invariant": all_invariant,
        "certified_samples": certified,
        "samples": records,
    });
    let out = resolve_output(out)?;
    write_json(&out, &record)?;
    let manifest = RunManifest::new("analyze", spec_path, &bytes, json!({ "mu": mu, "samples": samples }));
    let outputs = finish(manifest, &out, vec![out.clone()], exit)?;
    Ok(Outcome { summary: lines.join("\n"), exit, outputs })
}

fn candidate_values(file: &NetworkSpecFile, values: Option<Vec<f64>>) -> Vec<f64> {
    values.or_else(|| file.candidate_values.clone()).unwrap_or_else(|| DEFAULT_VALUES.to_vec())
}

fn candidate_list(file: &NetworkSpecFile, c: &MeasurementMap, values: &[f64]) -> Result<Vec<CandidateTopology>, CliError> {
    let base = file.network()?;
    Ok(generate_candidates(&base, c, values)?)
}

/// Output-invisible alternatives obtained by perturbing free edges.
pub fn candidates(spec_path: &Path, values: Option<Vec<f64>>, out: &Path) -> Result<Outcome, CliError> {
    let (file, bytes) = NetworkSpecFile::load(spec_path)?;
    let c = file.measurement()?;
    let values = candidate_values(&file, values);
    let base = file.network()?;
    let list = candidate_list(&file, &c, &values)?;
    let edges = base.incidence.edges();
    let records: Vec<_> = list
        .iter()
        .enumerate()
        .map(|(k, cand)| {
            json!({
                "index": k + 1,
                "delta": edge_entries(edges, &cand.perturbation.delta),
                "weights": edge_entries(edges, cand.weights.as_vector()),
                "connectivity": cand.connectivity,
                "connected": cand.connected,
                "negative_weights": cand.negative_weights,
            })
        })
        .collect();
    let out = resolve_output(out)?;
    write_json(&out, &json!({ "values": values, "candidates": records }))?;

    let summary = if list.is_empty() {
        "no free edges: candidate list is empty".to_string()
    } else {
        let disconnected = list.iter().filter(|c| !c.connected).count();
        format!("{} candidates ({disconnected} disconnected)", list.len())
    };
    let manifest = RunManifest::new("candidates", spec_path, &bytes, json!({ "values": values }));
    let outputs = finish(manifest, &out, vec![out.clone()], Exit::Success)?;
    Ok(Outcome { summary, exit: Exit::Success, outputs })
}

fn resolve_perturbation(file: &NetworkSpecFile, c: &MeasurementMap, selector: &Selector) -> Result<Option<PerturbationSpec>, CliError> {
    match (file.model, selector) {
        (Model::Linear, Selector::SpecDelta) => Ok(None),
        (Model::Linear, _) => Err(CliError::Input("--candidate/--delta: only available for Kuramoto networks".into())),
        (Model::Kuramoto, Selector::SpecDelta) => Ok(Some(file.perturbation()?)),
        (Model::Kuramoto, Selector::Candidate(k)) => {
            let list = candidate_list(file, c, &candidate_values(file, None))?;
            let cand = k
                .checked_sub(1)
                .and_then(|i| list.get(i))
                .ok_or_else(|| CliError::Input(format!("--candidate: {k} outside 1..={}", list.len())))?;
            Ok(Some(cand.perturbation.clone()))
        }
        (Model::Kuramoto, Selector::Delta(entries)) => {
            let probe = NetworkSpecFile { delta: entries.clone(), ..file.clone() };
            probe.validate().map_err(|e| CliError::Input(format!("--delta: {e}")))?;
            Ok(Some(probe.perturbation()?))
        }
    }
}

fn truncate(traj: &Trajectory, len: usize) -> Trajectory {
    Trajectory { times: traj.times[..len].to_vec(), states: traj.states.rows(0, len).into_owned() }
}

fn metric_name(m: &DMatrix<f64>) -> &'static str {
    if m.nrows() >= 2 && *m == consensus_projector(m.nrows()) {
        "consensus-projector"
    } else {
        "identity"
    }
}

/// Network A (spec file) against network B = A + δ, with the length
/// functional of the auxiliary family joining them.
pub fn compare(spec_path: &Path, selector: &Selector, x0_b: Option<Vec<f64>>, out: &Path) -> Result<Outcome, CliError> {
    let (file, bytes) = NetworkSpecFile::load(spec_path)?;
    let c = file.measurement()?;
    let n = file.n;
    let delta = resolve_perturbation(&file, &c, selector)?;
    let (f, d) = file.fields(delta.as_ref())?;
    let x0 = file.x0();
    let x0_b = match x0_b {
        Some(v) if v.len() != n => {
            return Err(CliError::Input(format!("--x0-b: expected {n} entries, found {}", v.len())))
        }
        Some(v) => DVector::from_vec(v),
        None => x0.clone(),
    };

    let mut members = Vec::new();
    let mut divergence = None;
    for s in uniform_s_grid(file.sim.s_points) {
        let field = AuxiliaryField::new(&f, &d, s)?;
        let start = blend_initial(&x0, &x0_b, s)?;
        let (traj, err) = integrate_partial(&field, &start, file.sim.dt, file.sim.t_end)?;
        if let (Some(err), None) = (err, &divergence) {
            divergence = Some(err.to_string());
        }
        members.push(traj);
    }
    let len = members.iter().map(Trajectory::len).min().unwrap_or(0);
    let members: Vec<Trajectory> = members.iter().map(|t| truncate(t, len)).collect();
    let ys = members.iter().map(|t| measure(t, &c)).collect::<Result<Vec<OutputTrajectory>, _>>()?;
    let metric = default_output_metric(&c);
    let (xa, xb) = (&members[0], &members[members.len() - 1]);
    let (ya, yb) = (&ys[0], &ys[ys.len() - 1]);

    let out = resolve_output(out)?;
    let mut summary = json!({
        "rows": len,
        "metric": metric_name(&metric),
        "diverged": divergence,
    });
    if len > 0 {
        let distance = output_distance(ya, yb, &metric)?;
        let length = length_from_members(&ys, &metric)?.length;
        let margins = match file.model {
            Model::Kuramoto => {
                let b = &file.network()?.incidence;
                Some((cohesiveness_series(xa, b, file.sim.gamma)?, cohesiveness_series(xb, b, file.sim.gamma)?))
            }
            Model::Linear => None,
        };

        let mut w = csv::Writer::from_path(&out)?;
        let p = c.outputs();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("xa{i}")));
        header.extend((1..=n).map(|i| format!("xb{i}")));
        header.extend((1..=p).map(|i| format!("ya{i}")));
        header.extend((1..=p).map(|i| format!("yb{i}")));
        header.extend(["distance", "length"].map(String::from));
        if margins.is_some() {
            header.extend(["margin_a", "margin_b"].map(String::from));
        }
        w.write_record(&header)?;
        for k in 0..len {
            let mut row = vec![fmt(xa.times[k])];
            row.extend(xa.states.row(k).iter().map(|&v| fmt(v)));
            row.extend(xb.states.row(k).iter().map(|&v| fmt(v)));
            row.extend(ya.outputs.row(k).iter().map(|&v| fmt(v)));
            row.extend(yb.outputs.row(k).iter().map(|&v| fmt(v)));
            row.push(fmt(distance[k]));
            row.push(fmt(length[k]));
            if let Some((ma, mb)) = &margins {
                row.push(fmt(ma[k]));
                row.push(fmt(mb[k]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;

        let fold_max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let fold_min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        summary["max_distance"] = json!(fold_max(&distance));
        summary["final_distance"] = json!(distance[len - 1]);
        summary["initial_length"] = json!(length[0]);
        summary["final_length"] = json!(length[len - 1]);
        summary["max_output_gap"] = json!((&ya.outputs - &yb.outputs).amax());
        if len >= 2 {
            let pa = phase_aligned_distance(ya, yb, DEFAULT_TAIL_FRACTION)?;
            summary["phase_alignment"] = json!(pa);
        }
        if let Some((ma, mb)) = &margins {
            summary["min_margin_a"] = json!(fold_min(ma));
            summary["min_margin_b"] = json!(fold_min(mb));
        }
    } else {
        csv::Writer::from_path(&out)?.flush()?;
    }
    let summary_path = sidecar(&out, "summary.json");
    write_json(&summary_path, &summary)?;

    let exit = if divergence.is_some() { Exit::Diverged } else { Exit::Success };
    let selector_json = match selector {
        Selector::SpecDelta => json!("spec"),
        Selector::Candidate(k) => json!({ "candidate": k }),
        Selector::Delta(entries) => json!({ "delta": entries }),
    };
    let params = json!({
        "selector": selector_json,
        "x0_b": x0_b.iter().collect::<Vec<_>>(),
    });
    let manifest = RunManifest::new("compare", spec_path, &bytes, params);
    let outputs = finish(manifest, &out, vec![out.clone(), summary_path], exit)?;

    let mut lines = vec![format!("rows: {len}")];
    for key in ["max_distance", "max_output_gap", "initial_length", "final_length"] {
        if let Some(v) = summary[key].as_f64() {
            lines.push(format!("{}: {v:.6e}", key.replace('_', " ")));
        }
    }
    if let Some(r) = summary["phase_alignment"]["residual"].as_f64() {
        lines.push(format!("tail phase-aligned residual: {r:.6e}"));
    }
    if let Some(msg) = &divergence {
        lines.push(format!("diverged: {msg}; partial output kept"));
    }
    Ok(Outcome { summary: lines.join("\n"), exit, outputs })
}

/// One member `f + sΔ` of the auxiliary family from `(1 - s)x₀ + s x̃₀`.
pub fn simulate(spec_path: &Path, s: f64, out: &Path) -> Result<Outcome, CliError> {
    let (file, bytes) = NetworkSpecFile::load(spec_path)?;
    let c = file.measurement()?;
    if !(0.0..=1.0).contains(&s) {
        return Err(CliError::Input(format!("--s: {s} outside [0, 1]")));
    }
    let (f, d) = file.fields(None)?;
    let field = AuxiliaryField::new(&f, &d, s)?;
    let start = blend_initial(&file.x0(), &file.x0_tilde(), s)?;
    let (traj, err) = integrate_partial(&field, &start, file.sim.dt, file.sim.t_end)?;
    let y = measure(&traj, &c)?;

    let out = resolve_output(out)?;
    let mut w = csv::Writer::from_path(&out)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=field.dim()).map(|i| format!("x{i}")));
    header.extend((1..=c.outputs()).map(|i| format!("y{i}")));
    w.write_record(&header)?;
    for k in 0..traj.len() {
        let mut row = vec![fmt(traj.times[k])];
        row.extend(traj.states.row(k).iter().map(|&v| fmt(v)));
        row.extend(y.outputs.row(k).iter().map(|&v| fmt(v)));
        w.write_record(&row)?;
    }
    w.flush()?;

    let exit = if err.is_some() { Exit::Diverged } else { Exit::Success };
    let manifest = RunManifest::new("simulate", spec_path, &bytes, json!({ "s": s }));
    let outputs = finish(manifest, &out, vec![out.clone()], exit)?;
    let mut summary = format!("rows: {}", traj.len());
    if let Some(err) = err {
        summary.push_str(&format!("\ndiverged: {err}; partial output kept"));
    }
    Ok(Outcome { summary, exit, outputs })
}

/// Full indistinguishability checklist for the spec's perturbation.
pub fn verdict(spec_path: &Path, mu: Option<f64>, out: &Path) -> Result<Outcome, CliError> {
    let (file, bytes) = NetworkSpecFile::load(spec_path)?;
    let c = file.measurement()?;
    let base = file.network()?;
    let delta = file.perturbation()?;
    let mut config = VerdictConfig::new(file.simulation());
    config.gamma = file.sim.gamma;
    config.mu = mu;
    let v = full_verdict(&base, &delta, &c, &config)?;

    let out = resolve_output(out)?;
    write_json(&out, &v)?;
    let manifest = RunManifest::new("verdict", spec_path, &bytes, json!({ "mu": mu }));
    let outputs = finish(manifest, &out, vec![out.clone()], Exit::Success)?;
    let summary = [
        format!("output invisible: {} (residual {:.3e})", v.output_invisible, v.invisibility_residual),
        format!(
            "observable contraction: {} (worst restricted abscissa {:.6})",
            v.contraction.contracting(),
            v.contraction.worst_restricted_abscissa
        ),
        format!("symmetry condition: {} (max residual {:.3e})", v.symmetry_ok, v.max_symmetry_residual),
        format!("cohesiveness margin: {:.6}", v.cohesive_margin),
        format!("sync condition: {:?}", v.sync_status),
        format!("conclusion: {}", serde_json::to_value(v.conclusion)?.as_str().unwrap_or_default()),
    ]
    .join("\n");
    Ok(Outcome { summary, exit: Exit::Success, outputs })
}
