//! Observable-space linear algebra.
//!
//! A matrix `A` is contractive in the observable space of a full-row-rank
//! measurement map `C` when the compression `C A C†` is Hurwitz. When the
//! nullspace of `C` is `A`-invariant, that compression bound is equivalent to
//! the existence of a constant metric `M ≻ 0` satisfying
//! `AᵀM_C + M_C A ⪯ -2μ M_C` with `M_C = CᵀMC`. This module computes the
//! compression, its abscissa, the invariance test and the LMI residual, and
//! constructs certificates by Lyapunov solves on the compressed system.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Slack on `α(CAC†) ≤ -μ` inside which the marginal branch is attempted.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Largest LMI residual accepted for a certificate.
pub const LMI_TOL: f64 = 1e-7;
/// Default relative tolerance for the nullspace invariance test.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Relative slack of the positive-semidefinite test.
pub const PSD_TOL: f64 = 1e-8;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;

/// A full-row-rank measurement map `y = Cx` with its right pseudoinverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMap {
    c: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl MeasurementMap {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        let (p, n) = c.shape();
        if p == 0 || n == 0 {
            return Err(Error::InvalidDimension(format!("measurement matrix is {p}x{n}")));
        }
        if p > n {
            return Err(Error::InvalidDimension(format!(
                "measurement matrix has more rows ({p}) than states ({n})"
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("measurement matrix has non-finite entries".into()));
        }
        let sv = c.singular_values();
        let largest = sv.max();
        let cutoff = (n as f64) * f64::EPSILON * largest.max(f64::MIN_POSITIVE) * 16.0;
        let rank = sv.iter().filter(|&&s| s > cutoff).count();
        if rank < p {
            return Err(Error::RankDeficient { rank, rows: p });
        }
        let pinv = pseudoinverse_rows(&c)?;
        Ok(Self { c, pinv })
    }

    pub fn identity(n: usize) -> Self {
        Self { c: DMatrix::identity(n, n), pinv: DMatrix::identity(n, n) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// `C† = Cᵀ(CCᵀ)⁻¹`.
    pub fn pseudoinverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn states(&self) -> usize {
        self.c.ncols()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }

    /// Orthonormal basis (columns) of `𝒩(C)`; `n × (n - p)`.
    pub fn nullspace_basis(&self) -> DMatrix<f64> {
        let n = self.states();
        let p = self.outputs();
        let gram = self.c.transpose() * &self.c;
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let cols: Vec<DVector<f64>> =
            order.iter().take(n - p).map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
        if cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }

    /// Image of the consensus direction, `C·1ₙ`, when it is a nonzero multiple of `1ₚ`.
    pub fn consensus_image(&self) -> Option<DVector<f64>> {
        let img = self.c.column_sum();
        let p = img.len();
        let mean = img.sum() / p as f64;
        let scale = img.amax();
        if scale == 0.0 || img.iter().any(|v| (v - mean).abs() > 1e-12 * scale) {
            return None;
        }
        Some(img)
    }
}

/// `C† = Cᵀ(CCᵀ)⁻¹` for full-row-rank `C`.
pub fn pseudoinverse_rows(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = c * c.transpose();
    let chol = gram.cholesky().ok_or(Error::RankDeficient { rank: 0, rows: c.nrows() })?;
    Ok(c.transpose() * chol.inverse())
}

/// Maximum real part over the eigenvalues of a square matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::InvalidDimension(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    if a.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let schur = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// The compression `C A C†` of `A` onto the observable space.
pub fn observable_projection(a: &DMatrix<f64>, c: &MeasurementMap) -> Result<DMatrix<f64>> {
    let n = c.states();
    if a.shape() != (n, n) {
        return Err(Error::InvalidDimension(format!(
            "A is {}x{}, C expects {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(c.matrix() * a * c.pseudoinverse())
}

/// Orthonormal basis of the complement of `v` (a `p × (p-1)` matrix), via a
/// Householder reflector that maps `e₁` onto `±v/|v|`.
pub fn orthogonal_complement(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidInput("excluded direction must be nonzero and finite".into()));
    }
    let p = v.len();
    let mut u = v / norm;
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign;
    let uu = u.dot(&u);
    let h = DMatrix::identity(p, p) - (&u * u.transpose()) * (2.0 / uu);
    Ok(h.columns(1, p - 1).into_owned())
}

/// Abscissa of `A` on the complement of `excluded`.
///
/// When `excluded` is a right eigenvector of `A`, the compression `VᵀAV` onto
/// its orthogonal complement carries exactly the remaining eigenvalues. A
/// one-dimensional `A` has nothing left and reports `-∞`.
pub fn restricted_abscissa(a: &DMatrix<f64>, excluded: &DVector<f64>) -> Result<f64> {
    if !a.is_square() || a.nrows() != excluded.len() {
        return Err(Error::InvalidDimension(format!(
            "A is {}x{}, excluded direction has length {}",
            a.nrows(),
            a.ncols(),
            excluded.len()
        )));
    }
    let v = orthogonal_complement(excluded)?;
    spectral_abscissa(&(v.transpose() * a * &v))
}

/// Residual `‖C A Q‖_F` with `Q` an orthonormal basis of `𝒩(C)`.
pub fn invariance_residual(a: &DMatrix<f64>, c: &MeasurementMap) -> Result<f64> {
    let n = c.states();
    if a.shape() != (n, n) {
        return Err(Error::InvalidDimension(format!(
            "A is {}x{}, C expects {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let q = c.nullspace_basis();
    if q.ncols() == 0 {
        return Ok(0.0);
    }
    Ok((c.matrix() * a * q).norm())
}

/// Whether `𝒩(C) ⊆ 𝒩(CA)`, i.e. `‖CAQ‖ ≤ tol·‖A‖`.
pub fn check_invariance(a: &DMatrix<f64>, c: &MeasurementMap, tol: f64) -> Result<bool> {
    Ok(invariance_residual(a, c)? <= tol * a.norm())
}

/// Largest eigenvalue of `AᵀM_C + M_C A + 2μM_C`; nonpositive certifies the LMI.
pub fn lmi_residual(a: &DMatrix<f64>, c: &MeasurementMap, m: &DMatrix<f64>, mu: f64) -> Result<f64> {
    let p = c.outputs();
    let n = c.states();
    if m.shape() != (p, p) {
        return Err(Error::InvalidDimension(format!("metric is {}x{}, expected {p}x{p}", m.nrows(), m.ncols())));
    }
    if a.shape() != (n, n) {
        return Err(Error::InvalidDimension(format!("A is {}x{}, expected {n}x{n}", a.nrows(), a.ncols())));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::InvalidInput(format!("metric is not symmetric (max asymmetry {asym:e})")));
    }
    let mc = c.matrix().transpose() * m * c.matrix();
    let r = a.transpose() * &mc + &mc * a + &mc * (2.0 * mu);
    let r = (&r + r.transpose()) * 0.5;
    Ok(SymmetricEigen::new(r).eigenvalues.max())
}

/// `M ⪰ 0` up to [`PSD_TOL`].
pub fn is_positive_semidefinite(m: &DMatrix<f64>) -> bool {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues;
    let largest = eig.amax();
    eig.min() >= -PSD_TOL * (1.0 + largest)
}

/// Solves `FᵀX + XF = -Q` through the Kronecker form.
///
/// Uniquely solvable whenever no two eigenvalues of `F` sum to zero, in
/// particular when `F` is Hurwitz.
pub fn solve_lyapunov(f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = f.nrows();
    if !f.is_square() || q.shape() != (p, p) {
        return Err(Error::InvalidDimension("Lyapunov operands must be square and equal size".into()));
    }
    let id = DMatrix::<f64>::identity(p, p);
    // vec(FᵀX) = (I ⊗ Fᵀ) vec X, vec(XF) = (Fᵀ ⊗ I) vec X (column-major vec)
    let ft = f.transpose();
    let op = id.kronecker(&ft) + ft.kronecker(&id);
    let rhs = DVector::from_iterator(p * p, q.iter().map(|v| -v));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Lyapunov operator is singular".into()))?;
    let x = DMatrix::from_column_slice(p, p, sol.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// `I - (1/p)11ᵀ`.
pub fn consensus_projector(p: usize) -> DMatrix<f64> {
    DMatrix::identity(p, p) - DMatrix::from_element(p, p, 1.0 / p as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Definite,
    /// Positive semidefinite with nullspace `span(1ₚ)`.
    SemidefiniteConsensus,
}

/// A constant metric witnessing the contraction LMI at rate `mu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub metric: DMatrix<f64>,
    pub rate: f64,
    pub kind: CertificateKind,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CertificateOutcome {
    Certified(Certificate),
    Infeasible { abscissa: f64, restricted_abscissa: Option<f64> },
}

impl CertificateOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Self::Certified(c) => Some(c),
            Self::Infeasible { .. } => None,
        }
    }
}

/// Scales `m` so that `λmax(CᵀMC) = ½`. The LMI residual of a scaled
/// certificate then reads as a rate excess: a metric that is exact at rate
/// `-α` has residual at most `α + μ` at rate `μ`.
fn rate_scaled(m: DMatrix<f64>, c: &MeasurementMap) -> Option<DMatrix<f64>> {
    let mc = c.matrix().transpose() * &m * c.matrix();
    let top = SymmetricEigen::new((&mc + mc.transpose()) * 0.5).eigenvalues.max();
    (top > 0.0 && top.is_finite()).then(|| m * (0.5 / top))
}

fn accept(
    a: &DMatrix<f64>,
    c: &MeasurementMap,
    m: DMatrix<f64>,
    mu: f64,
    kind: CertificateKind,
) -> Result<Option<Certificate>> {
    let m = (&m + m.transpose()) * 0.5;
    if !m.iter().all(|v| v.is_finite()) || !is_positive_semidefinite(&m) {
        return Ok(None);
    }
    if kind == CertificateKind::Definite && SymmetricEigen::new(m.clone()).eigenvalues.min() <= 0.0 {
        return Ok(None);
    }
    let residual = lmi_residual(a, c, &m, mu)?;
    Ok((residual <= LMI_TOL).then_some(Certificate { metric: m, rate: mu, kind, residual }))
}

fn accept_scaled(
    a: &DMatrix<f64>,
    c: &MeasurementMap,
    m: DMatrix<f64>,
    mu: f64,
    kind: CertificateKind,
) -> Result<Option<Certificate>> {
    match rate_scaled(m, c) {
        Some(m) => accept(a, c, m, mu, kind),
        None => Ok(None),
    }
}

/// `Re Σ w̄ᵢwᵢᵀ` over unit left eigenvectors `Aᵀwᵢ = λᵢwᵢ`, found by inverse
/// iteration. For diagonalizable `A` it satisfies `AᵀM + MA ⪯ 2α(A)M`
/// exactly, which Lyapunov solves only approach as the rate nears `-α`.
fn modal_metric(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let p = a.nrows();
    let schur = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITER)?;
    let at: DMatrix<Complex<f64>> = a.transpose().map(|v| Complex::new(v, 0.0));
    let scale = 1.0 + a.norm();
    let mut m = DMatrix::<f64>::zeros(p, p);
    for lambda in schur.complex_eigenvalues().iter() {
        let shift = lambda + Complex::new(1e-10 * scale, 1e-10 * scale);
        let lu = (&at - DMatrix::<Complex<f64>>::identity(p, p) * shift).lu();
        let mut w = DVector::from_fn(p, |i, _| Complex::new(1.0 + 0.1 * i as f64, 0.0));
        for _ in 0..3 {
            w = lu.solve(&w)?;
            let norm = w.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return None;
            }
            w /= Complex::new(norm, 0.0);
        }
        let residual = (&at * &w - &w * *lambda).norm();
        if residual > 1e-8 * scale {
            return None;
        }
        m += (w.conjugate() * w.transpose()).map(|z| z.re);
    }
    Some(m)
}

/// Searches for a metric `M` with `AᵀM_C + M_C A ⪯ -2μM_C`.
///
/// Candidates are the Lyapunov solve on the compressed `p × p` system at
/// rate `μ`, the left-eigenvector metric of the compression (which stays
/// exact in the marginal band `α ≤ -μ + FEASIBILITY_TOL`), the identity, and,
/// when `C A C†` annihilates `1ₚ`, a Lyapunov solve on the consensus
/// complement or the consensus projector itself. Every candidate except the
/// projector is scaled so that `λmax(M_C) = ½`. Requires `𝒩(C)` to be
/// `A`-invariant.
pub fn construct_certificate(a: &DMatrix<f64>, c: &MeasurementMap, mu: f64) -> Result<CertificateOutcome> {
    if !mu.is_finite() {
        return Err(Error::InvalidInput("contraction rate must be finite".into()));
    }
    if !check_invariance(a, c, INVARIANCE_TOL)? {
        return Err(Error::Precondition(format!(
            "nullspace of C is not A-invariant (|CAQ| = {:e})",
            invariance_residual(a, c)?
        )));
    }
    let ac = observable_projection(a, c)?;
    let p = ac.nrows();
    let alpha = spectral_abscissa(&ac)?;
    let id = DMatrix::<f64>::identity(p, p);
    let definite = CertificateKind::Definite;

    if alpha < -mu {
        if let Ok(m) = solve_lyapunov(&(&ac + &id * mu), &id) {
            if let Some(cert) = accept_scaled(a, c, m, mu, definite)? {
                return Ok(CertificateOutcome::Certified(cert));
            }
        }
    }
    if alpha <= -mu + FEASIBILITY_TOL {
        if let Some(m) = modal_metric(&ac) {
            if let Some(cert) = accept_scaled(a, c, m, mu, definite)? {
                return Ok(CertificateOutcome::Certified(cert));
            }
        }
        if let Some(cert) = accept_scaled(a, c, id.clone(), mu, definite)? {
            return Ok(CertificateOutcome::Certified(cert));
        }
    }

    // semicontraction: 1ₚ is a right null vector of the compression
    let mut restricted = None;
    if p >= 2 {
        let ones = DVector::from_element(p, 1.0);
        if (&ac * &ones).amax() <= 1e-12 * (1.0 + ac.norm()) {
            let v = orthogonal_complement(&ones)?;
            let reduced = v.transpose() * &ac * &v;
            let beta = spectral_abscissa(&reduced)?;
            restricted = Some(beta);
            let semidefinite = CertificateKind::SemidefiniteConsensus;
            if beta < -mu {
                let rid = DMatrix::<f64>::identity(p - 1, p - 1);
                if let Ok(mr) = solve_lyapunov(&(&reduced + &rid * mu), &rid) {
                    if let Some(cert) = accept_scaled(a, c, &v * mr * v.transpose(), mu, semidefinite)? {
                        return Ok(CertificateOutcome::Certified(cert));
                    }
                }
            }
            if beta <= -mu + FEASIBILITY_TOL {
                if let Some(cert) = accept(a, c, consensus_projector(p), mu, semidefinite)? {
                    return Ok(CertificateOutcome::Certified(cert));
                }
                if let Some(mr) = modal_metric(&reduced) {
                    if let Some(cert) = accept_scaled(a, c, &v * mr * v.transpose(), mu, semidefinite)? {
                        return Ok(CertificateOutcome::Certified(cert));
                    }
                }
            }
        }
    }
    Ok(CertificateOutcome::Infeasible { abscissa: alpha, restricted_abscissa: restricted })
}

/// Contraction summary of one Jacobian under a measurement map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub abscissa: f64,
    /// Abscissa after deflating the declared neutral direction (equal to
    /// `abscissa` when none was declared).
    pub restricted_abscissa: f64,
    pub invariant: bool,
    pub invariance_residual: f64,
    pub certificate: Option<Certificate>,
    /// Present only together with `certificate`.
    pub lmi_residual: Option<f64>,
}

/// Compresses `A`, measures its abscissa (and restricted abscissa along
/// `neutral`), tests invariance and, if `mu` is given and invariance holds,
/// attempts a certificate.
pub fn analyze(
    a: &DMatrix<f64>,
    c: &MeasurementMap,
    neutral: Option<&DVector<f64>>,
    mu: Option<f64>,
) -> Result<ContractionReport> {
    let ac = observable_projection(a, c)?;
    let abscissa = spectral_abscissa(&ac)?;
    let restricted_abscissa = match neutral {
        Some(v) if ac.nrows() >= 2 => restricted_abscissa(&ac, v)?,
        _ => abscissa,
    };
    let invariance_residual = invariance_residual(a, c)?;
    let invariant = invariance_residual <= INVARIANCE_TOL * a.norm();
    let certificate = match (mu, invariant) {
        (Some(mu), true) => construct_certificate(a, c, mu)?.certificate().cloned(),
        _ => None,
    };
    let lmi_residual = certificate.as_ref().map(|cert| cert.residual);
    Ok(ContractionReport {
        abscissa,
        restricted_abscissa,
        invariant,
        invariance_residual,
        certificate,
        lmi_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn measurement_pairs() -> MeasurementMap {
        MeasurementMap::new(dmatrix![1.0, 1.0, 0.0, 0.0; 0.0, 0.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn pseudoinverse_examples() {
        let c = MeasurementMap::new(dmatrix![1.0, 0.0]).unwrap();
        assert_eq!(c.pseudoinverse(), &dmatrix![1.0; 0.0]);

        let c = measurement_pairs();
        let expected = c.matrix().transpose() / 2.0;
        assert!((c.pseudoinverse() - expected).amax() < 1e-15);

        let c = MeasurementMap::new(DMatrix::identity(3, 3)).unwrap();
        assert!((c.pseudoinverse() - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn rank_deficient_rejected() {
        let err = MeasurementMap::new(dmatrix![1.0, 1.0, 0.0; 2.0, 2.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 1, rows: 2 }));
        assert!(err.to_string().contains("not full row rank"));
        assert!(MeasurementMap::new(dmatrix![1.0; 0.0]).is_err());
    }

    #[test]
    fn abscissa_examples() {
        assert!((spectral_abscissa(&dmatrix![-1.0, 0.0; -1.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(spectral_abscissa(&DMatrix::zeros(3, 3)).unwrap(), 0.0);
        assert_eq!(spectral_abscissa(&-DMatrix::<f64>::identity(3, 3)).unwrap(), -1.0);
        // rotation: complex pair ±i shifted by -0.5
        let a = dmatrix![-0.5, 1.0; -1.0, -0.5];
        assert!((spectral_abscissa(&a).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn projection_examples() {
        let c = MeasurementMap::new(dmatrix![1.0, 0.0]).unwrap();
        let ac = observable_projection(&dmatrix![-1.0, 0.0; -1.0, 1.0], &c).unwrap();
        assert_eq!(ac, dmatrix![-1.0]);
        assert_eq!(spectral_abscissa(&ac).unwrap(), -1.0);

        let c = measurement_pairs();
        let ac = observable_projection(&DMatrix::identity(4, 4), &c).unwrap();
        assert!((ac - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);
    }

    #[test]
    fn restricted_examples() {
        let a = dmatrix![-1.0, 1.0; 1.0, -1.0];
        let r = restricted_abscissa(&a, &dvector![1.0, 1.0]).unwrap();
        assert!((r + 2.0).abs() < 1e-14);
        assert_eq!(restricted_abscissa(&DMatrix::zeros(3, 3), &dvector![1.0, 2.0, 3.0]).unwrap(), 0.0);
        let r = restricted_abscissa(&dmatrix![-3.0, 0.0; 0.0, 5.0], &dvector![0.0, 1.0]).unwrap();
        assert!((r + 3.0).abs() < 1e-14);
        assert!(restricted_abscissa(&a, &dvector![0.0, 0.0]).is_err());
        assert_eq!(restricted_abscissa(&dmatrix![2.0], &dvector![1.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn complement_is_orthonormal() {
        let v = dvector![0.3, -1.2, 2.0, 0.1];
        let q = orthogonal_complement(&v).unwrap();
        assert_eq!(q.shape(), (4, 3));
        assert!((q.transpose() * &q - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
        assert!((q.transpose() * &v).amax() < 1e-14);
    }

    #[test]
    fn invariance_examples() {
        let c = MeasurementMap::new(dmatrix![1.0, 0.0]).unwrap();
        assert!(check_invariance(&dmatrix![-1.0, 0.0; -1.0, 1.0], &c, INVARIANCE_TOL).unwrap());
        assert!(!check_invariance(&dmatrix![0.0, 1.0; 0.0, 0.0], &c, INVARIANCE_TOL).unwrap());
        let id = MeasurementMap::identity(3);
        assert!(check_invariance(&dmatrix![1.0, 2.0, 3.0; 4.0, 5.0, 6.0; 7.0, 8.0, 9.0], &id, 0.0).unwrap());
    }

    #[test]
    fn nullspace_basis_spans_kernel() {
        let c = measurement_pairs();
        let q = c.nullspace_basis();
        assert_eq!(q.shape(), (4, 2));
        assert!((c.matrix() * &q).amax() < 1e-14);
        assert!((q.transpose() * &q - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn lmi_residual_examples() {
        let id2 = MeasurementMap::identity(2);
        let m = consensus_projector(2);
        let r = lmi_residual(&dmatrix![-1.0, 1.0; 1.0, -1.0], &id2, &m, 2.0).unwrap();
        assert!(r.abs() < 1e-14);

        let eye = DMatrix::<f64>::identity(2, 2);
        assert!(lmi_residual(&-&eye, &id2, &eye, 1.0).unwrap().abs() < 1e-15);
        assert!((lmi_residual(&eye, &id2, &eye, 0.0).unwrap() - 2.0).abs() < 1e-15);

        let asym = dmatrix![1.0, 0.5; 0.0, 1.0];
        assert!(matches!(lmi_residual(&eye, &id2, &asym, 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn lyapunov_solution_satisfies_equation() {
        let f = dmatrix![-1.0, 2.0, 0.0; 0.0, -3.0, 1.0; 0.5, 0.0, -2.0];
        let q = DMatrix::<f64>::identity(3, 3);
        let x = solve_lyapunov(&f, &q).unwrap();
        assert!((f.transpose() * &x + &x * &f + &q).amax() < 1e-12);
        assert!(SymmetricEigen::new(x).eigenvalues.min() > 0.0);
        // scalar: -2x = -1
        let x = solve_lyapunov(&dmatrix![-1.0], &dmatrix![1.0]).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn certificate_linear_example() {
        let a = dmatrix![-1.0, 0.0; -1.0, 1.0];
        let c = MeasurementMap::new(dmatrix![1.0, 0.0]).unwrap();

        // strictly inside: Lyapunov on the scalar compression
        let cert = construct_certificate(&a, &c, 0.99).unwrap();
        let cert = cert.certificate().expect("feasible below the abscissa");
        assert_eq!(cert.kind, CertificateKind::Definite);
        assert!(cert.metric[(0, 0)] > 0.0);
        assert!(cert.residual <= 1e-9);

        // marginal: abscissa equals -mu
        let cert = construct_certificate(&a, &c, 1.0).unwrap();
        let cert = cert.certificate().expect("marginal scalar case is feasible");
        assert!(cert.residual <= 1e-9);

        assert!(matches!(
            construct_certificate(&a, &c, 1.5).unwrap(),
            CertificateOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn certificate_consensus_example() {
        let a = dmatrix![-1.0, 1.0; 1.0, -1.0];
        let c = MeasurementMap::identity(2);
        let outcome = construct_certificate(&a, &c, 2.0).unwrap();
        let cert = outcome.certificate().expect("semidefinite certificate");
        assert_eq!(cert.kind, CertificateKind::SemidefiniteConsensus);
        assert!((&cert.metric - consensus_projector(2)).amax() < 1e-14);
        assert!(cert.residual.abs() < 1e-14);

        // slower rate: Lyapunov on the consensus complement
        let outcome = construct_certificate(&a, &c, 1.0).unwrap();
        let cert = outcome.certificate().unwrap();
        assert_eq!(cert.kind, CertificateKind::SemidefiniteConsensus);
        assert!((&cert.metric * DVector::from_element(2, 1.0)).amax() < 1e-12);
    }

    #[test]
    fn certificate_infeasible_and_precondition() {
        let eye = DMatrix::<f64>::identity(2, 2);
        let c = MeasurementMap::identity(2);
        assert!(matches!(
            construct_certificate(&eye, &c, 1.0).unwrap(),
            CertificateOutcome::Infeasible { abscissa, .. } if abscissa == 1.0
        ));
        let c = MeasurementMap::new(dmatrix![1.0, 0.0]).unwrap();
        assert!(matches!(
            construct_certificate(&dmatrix![0.0, 1.0; 0.0, 0.0], &c, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn consensus_image_detection() {
        assert_eq!(measurement_pairs().consensus_image(), Some(dvector![2.0, 2.0]));
        let c = MeasurementMap::new(dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.consensus_image(), None);
    }

    #[test]
    fn analyze_attaches_residual_only_with_certificate() {
        let c = MeasurementMap::identity(2);
        let r = analyze(&dmatrix![-1.0, 1.0; 1.0, -1.0], &c, Some(&dvector![1.0, 1.0]), Some(2.0)).unwrap();
        assert!((r.restricted_abscissa + 2.0).abs() < 1e-14);
        assert!(r.abscissa.abs() < 1e-14);
        assert!(r.certificate.is_some() && r.lmi_residual.is_some());
        let r = analyze(&DMatrix::identity(2, 2), &c, None, Some(1.0)).unwrap();
        assert!(r.certificate.is_none() && r.lmi_residual.is_none());
    }
}
