//! Complete-graph incidence algebra.
//!
//! Every network lives on the complete graph over `n` nodes; an absent edge is
//! simply a column whose weight is zero. Edges are ordered lexicographically by
//! `(i, j)` with `i < j`, and each column carries `+1` at `i` and `-1` at `j`.
//! Node and edge indices are zero-based throughout the library.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which a Laplacian eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

/// Number of edges of the complete graph on `n` nodes.
pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Lexicographic position of edge `(i, j)`, `i < j < n`.
pub fn edge_index(n: usize, i: usize, j: usize) -> Result<usize> {
    if i >= j || j >= n {
        return Err(Error::InvalidEdge { n, i, j });
    }
    // edges (0, *) .. (i-1, *) come first: sum_{r<i} (n - 1 - r)
    let before = i * (2 * n - i - 1) / 2;
    Ok(before + (j - i - 1))
}

/// Inverse of [`edge_index`].
pub fn edge_endpoints(n: usize, k: usize) -> Result<(usize, usize)> {
    let e = edge_count(n);
    if k >= e {
        return Err(Error::InvalidInput(format!(
            "edge position {k} out of range for {n} nodes ({e} edges)"
        )));
    }
    let mut rest = k;
    for i in 0..n {
        let row = n - 1 - i;
        if rest < row {
            return Ok((i, i + 1 + rest));
        }
        rest -= row;
    }
    unreachable!("edge position checked against edge count")
}

/// Node-by-edge incidence matrix of the complete graph.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    n: usize,
    edges: Vec<(usize, usize)>,
    matrix: DMatrix<f64>,
}

impl IncidenceMatrix {
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!(
                "complete graph needs at least 2 nodes, got {n}"
            )));
        }
        let e = edge_count(n);
        let mut edges = Vec::with_capacity(e);
        let mut matrix = DMatrix::zeros(n, e);
        for i in 0..n {
            for j in (i + 1)..n {
                let k = edges.len();
                matrix[(i, k)] = 1.0;
                matrix[(j, k)] = -1.0;
                edges.push((i, j));
            }
        }
        Ok(Self { n, edges, matrix })
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints `(source, sink)` of every column, in column order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn column(&self, k: usize) -> DVector<f64> {
        self.matrix.column(k).into_owned()
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Result<usize> {
        edge_index(self.n, i, j)
    }

    /// Edge differences `Bᵀx`.
    pub fn differences(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|&(i, j)| x[i] - x[j]))
    }
}

/// Diagonal of the edge-weight matrix, one entry per complete-graph edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights(DVector<f64>);

impl EdgeWeights {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if let Some(k) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(format!("edge weight {k} is not finite")));
        }
        Ok(Self(weights))
    }

    pub fn zeros(e: usize) -> Self {
        Self(DVector::zeros(e))
    }

    /// Builds weights for `n` nodes from a sparse `(i, j, w)` list; unlisted edges get 0.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DVector::zeros(edge_count(n));
        for &(i, j, weight) in edges {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            w[edge_index(n, a, b)?] = weight;
        }
        Self::new(w)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_negative(&self) -> bool {
        self.0.iter().any(|&w| w < 0.0)
    }

    /// Positions of edges with nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(k, _)| k).collect()
    }

    pub fn perturbed(&self, delta: &DVector<f64>, s: f64) -> Result<Self> {
        if delta.len() != self.0.len() {
            return Err(Error::InvalidDimension(format!(
                "perturbation has {} entries, weights have {}",
                delta.len(),
                self.0.len()
            )));
        }
        Self::new(&self.0 + delta * s)
    }
}

impl std::ops::Index<usize> for EdgeWeights {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// A Kuramoto network: complete-graph incidence, edge weights and natural frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub incidence: IncidenceMatrix,
    pub weights: EdgeWeights,
    pub omega: DVector<f64>,
}

impl NetworkSpec {
    pub fn new(n: usize, weights: EdgeWeights, omega: DVector<f64>) -> Result<Self> {
        let incidence = IncidenceMatrix::complete(n)?;
        if weights.len() != incidence.edge_count() {
            return Err(Error::InvalidDimension(format!(
                "{} edge weights for {} complete-graph edges",
                weights.len(),
                incidence.edge_count()
            )));
        }
        if omega.len() != n {
            return Err(Error::InvalidDimension(format!(
                "{} natural frequencies for {n} nodes",
                omega.len()
            )));
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("natural frequencies must be finite".into()));
        }
        Ok(Self { incidence, weights, omega })
    }

    pub fn nodes(&self) -> usize {
        self.incidence.nodes()
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        weighted_laplacian(&self.incidence, self.weights.as_vector())
            .expect("weights validated against incidence at construction")
    }

    /// Same network with weights `A + s·diag(δ)`.
    pub fn with_perturbation(&self, delta: &DVector<f64>, s: f64) -> Result<Self> {
        Ok(Self {
            incidence: self.incidence.clone(),
            weights: self.weights.perturbed(delta, s)?,
            omega: self.omega.clone(),
        })
    }
}

/// `B diag(w) Bᵀ`.
pub fn weighted_laplacian(b: &IncidenceMatrix, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    if w.len() != b.edge_count() {
        return Err(Error::InvalidDimension(format!(
            "{} weights for {} edges",
            w.len(),
            b.edge_count()
        )));
    }
    let n = b.nodes();
    let mut l = DMatrix::zeros(n, n);
    for (k, &(i, j)) in b.edges().iter().enumerate() {
        let wk = w[k];
        l[(i, i)] += wk;
        l[(j, j)] += wk;
        l[(i, j)] -= wk;
        l[(j, i)] -= wk;
    }
    Ok(l)
}

/// Ascending eigenvalues of a symmetric matrix, with values within
/// [`ZERO_EIGENVALUE_TOL`] of zero (relative to the largest magnitude) snapped to 0.
pub fn laplacian_spectrum(l: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !l.is_square() {
        return Err(Error::InvalidDimension(format!("{}x{} is not square", l.nrows(), l.ncols())));
    }
    let scale = l.amax().max(f64::MIN_POSITIVE);
    let asym = (l - l.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::InvalidInput(format!("matrix is not symmetric (max asymmetry {asym:e})")));
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(l.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let largest = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for v in &mut eig {
        if v.abs() <= ZERO_EIGENVALUE_TOL * largest {
            *v = 0.0;
        }
    }
    Ok(eig)
}

/// Algebraic connectivity: the second-smallest eigenvalue of a Laplacian.
pub fn fiedler_value(l: &DMatrix<f64>) -> Result<f64> {
    if l.nrows() < 2 {
        return Err(Error::InvalidDimension("Fiedler value needs at least 2 nodes".into()));
    }
    let row_sum = l.column_sum().amax();
    if row_sum > 1e-9 * (1.0 + l.amax()) {
        return Err(Error::InvalidInput(format!(
            "matrix does not annihilate the ones vector (|L1| = {row_sum:e})"
        )));
    }
    Ok(laplacian_spectrum(l)?[1])
}
