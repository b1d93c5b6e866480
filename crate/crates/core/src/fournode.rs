//! The four-oscillator ring measured in adjacent pairs, and the bundled
//! demonstration configuration.
//!
//! Net 1 couples (1,2), (1,3), (2,4), (3,4) with unit weights and measures
//! `y = (x₁ + x₂, x₃ + x₄)`. The free edges are (1,2) and (3,4); Nets 2-4
//! perturb only those.
//!
//! The symmetric configuration uses ω = (1, 1, 1.2, 1.2) and
//! x₀ = (0, 0, 0.6, 0.6). With x₁ = x₂ and x₃ = x₄ at t = 0 and matching
//! frequencies inside each measured pair, the pairs stay locked for every
//! candidate, so `a₁₃cos(x₁ - x₃) = a₂₄cos(x₂ - x₄)` holds for all time.
//! (A start with x₁ - x₃ = x₂ - x₄ but x₁ ≠ x₂ only keeps that identity
//! while a₁₂ = a₃₄.)

use nalgebra::{dmatrix, dvector, DVector};

use crate::graph::{EdgeWeights, NetworkSpec};
use crate::indistinguishability::PerturbationSpec;
use crate::sim::SimulationConfig;
use crate::spectral::MeasurementMap;

pub const NODES: usize = 4;
pub const SYMMETRIC_OMEGA: [f64; 4] = [1.0, 1.0, 1.2, 1.2];
pub const SYMMETRIC_X0: [f64; 4] = [0.0, 0.0, 0.6, 0.6];

/// Per-net initial states for the distinct-start comparison (Nets 1-4).
pub const DISTINCT_X0: [[f64; 4]; 4] = [
    [0.0, 0.0, 0.6, 0.6],
    [0.4, 0.2, 1.0, 0.7],
    [-0.3, 0.1, 0.2, 0.9],
    [0.8, 0.5, 0.3, 1.1],
];

/// Ring weights `a` on (1,2), (1,3), (2,4), (3,4).
pub fn ring_weights(a: f64) -> EdgeWeights {
    EdgeWeights::from_edges(NODES, &[(0, 1, a), (0, 2, a), (1, 3, a), (2, 3, a)])
        .expect("ring edges are valid for four nodes")
}

pub fn network(omega: DVector<f64>) -> NetworkSpec {
    NetworkSpec::new(NODES, ring_weights(1.0), omega).expect("four-node ring is well formed")
}

/// Net 1 with the symmetric frequencies.
pub fn symmetric_network() -> NetworkSpec {
    network(DVector::from_row_slice(&SYMMETRIC_OMEGA))
}

/// `C = [1 1 0 0; 0 0 1 1]`.
pub fn pair_measurement() -> MeasurementMap {
    MeasurementMap::new(dmatrix![1.0, 1.0, 0.0, 0.0; 0.0, 0.0, 1.0, 1.0])
        .expect("pair measurement has full row rank")
}

/// Perturbations turning Net 1 into Nets 2, 3 and 4.
///
/// Net 2 strengthens (1,2); Net 3 strengthens (1,2) and removes (3,4);
/// Net 4 removes both, leaving the disconnected pairs {1,3} and {2,4}.
pub fn net_perturbations() -> [(&'static str, PerturbationSpec); 3] {
    let d = |v: DVector<f64>| PerturbationSpec::new(v).expect("finite");
    [
        ("net2", d(dvector![1.0, 0.0, 0.0, 0.0, 0.0, 0.0])),
        ("net3", d(dvector![1.0, 0.0, 0.0, 0.0, 0.0, -1.0])),
        ("net4", d(dvector![-1.0, 0.0, 0.0, 0.0, 0.0, -1.0])),
    ]
}

pub fn symmetric_config() -> SimulationConfig {
    SimulationConfig::new(DVector::from_row_slice(&SYMMETRIC_X0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fiedler_value;
    use crate::indistinguishability::{candidate, free_edges};

    #[test]
    fn nets_are_valid_candidates() {
        let base = symmetric_network();
        let c = pair_measurement();
        assert_eq!(free_edges(&base.incidence, &c).unwrap(), vec![0, 5]);
        let connected: Vec<bool> = net_perturbations()
            .into_iter()
            .map(|(_, d)| candidate(&base, &c, d).unwrap().connected)
            .collect();
        assert_eq!(connected, vec![true, true, false]);
        assert!((fiedler_value(&base.laplacian()).unwrap() - 2.0).abs() < 1e-12);
    }
}
