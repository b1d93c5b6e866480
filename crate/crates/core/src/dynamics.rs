//! Vector fields and their Jacobians.
//!
//! Phases are never wrapped modulo 2π here; wrapping is a presentation concern.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{IncidenceMatrix, NetworkSpec};

/// An autonomous vector field `ẋ = f(x)` with an analytic Jacobian.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).eval(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).jacobian(x)
    }
}

impl<T: VectorField + ?Sized> VectorField for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).eval(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).jacobian(x)
    }
}

impl<T: VectorField + ?Sized> VectorField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).eval(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).jacobian(x)
    }
}

fn check_dim(expected: usize, x: &DVector<f64>) -> Result<()> {
    if x.len() != expected {
        return Err(Error::InvalidDimension(format!(
            "state has {} entries, field has dimension {expected}",
            x.len()
        )));
    }
    Ok(())
}

/// `-B diag(w) sin(Bᵀx)` accumulated edge by edge.
fn coupling(b: &IncidenceMatrix, w: &DVector<f64>, x: &DVector<f64>, out: &mut DVector<f64>) {
    for (k, &(i, j)) in b.edges().iter().enumerate() {
        let wk = w[k];
        if wk == 0.0 {
            continue;
        }
        let f = wk * (x[i] - x[j]).sin();
        out[i] -= f;
        out[j] += f;
    }
}

/// `-B diag(w) diag(cos(Bᵀx)) Bᵀ`.
fn coupling_jacobian(b: &IncidenceMatrix, w: &DVector<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let n = b.nodes();
    let mut j = DMatrix::zeros(n, n);
    for (k, &(a, c)) in b.edges().iter().enumerate() {
        let wk = w[k];
        if wk == 0.0 {
            continue;
        }
        let g = wk * (x[a] - x[c]).cos();
        j[(a, a)] -= g;
        j[(c, c)] -= g;
        j[(a, c)] += g;
        j[(c, a)] += g;
    }
    j
}

/// Kuramoto network `ẋ = ω - B𝒜 sin(Bᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KuramotoField {
    pub spec: NetworkSpec,
}

impl KuramotoField {
    pub fn new(spec: NetworkSpec) -> Self {
        Self { spec }
    }
}

impl VectorField for KuramotoField {
    fn dim(&self) -> usize {
        self.spec.nodes()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = self.spec.omega.clone();
        coupling(&self.spec.incidence, self.spec.weights.as_vector(), x, &mut v);
        v
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        coupling_jacobian(&self.spec.incidence, self.spec.weights.as_vector(), x)
    }
}

pub fn kuramoto_value(spec: &NetworkSpec, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(spec.nodes(), x)?;
    let mut v = spec.omega.clone();
    coupling(&spec.incidence, spec.weights.as_vector(), x, &mut v);
    Ok(v)
}

pub fn kuramoto_jacobian(spec: &NetworkSpec, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_dim(spec.nodes(), x)?;
    Ok(coupling_jacobian(&spec.incidence, spec.weights.as_vector(), x))
}

/// Edge-weight perturbation field `Δ(x) = -B diag(δ) sin(Bᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaField {
    pub incidence: IncidenceMatrix,
    pub delta: DVector<f64>,
}

impl DeltaField {
    pub fn new(incidence: IncidenceMatrix, delta: DVector<f64>) -> Result<Self> {
        if delta.len() != incidence.edge_count() {
            return Err(Error::InvalidDimension(format!(
                "perturbation has {} entries for {} edges",
                delta.len(),
                incidence.edge_count()
            )));
        }
        Ok(Self { incidence, delta })
    }
}

impl VectorField for DeltaField {
    fn dim(&self) -> usize {
        self.incidence.nodes()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        coupling(&self.incidence, &self.delta, x, &mut v);
        v
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        coupling_jacobian(&self.incidence, &self.delta, x)
    }
}

pub fn delta_value(b: &IncidenceMatrix, delta: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    let field = DeltaField::new(b.clone(), delta.clone())?;
    check_dim(field.dim(), x)?;
    Ok(field.eval(x))
}

pub fn delta_jacobian(b: &IncidenceMatrix, delta: &DVector<f64>, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let field = DeltaField::new(b.clone(), delta.clone())?;
    check_dim(field.dim(), x)?;
    Ok(field.jacobian(x))
}

/// The interpolating family `f + s·Δ`, `s ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct AuxiliaryField<F, D> {
    pub base: F,
    pub delta: D,
    s: f64,
}

impl<F: VectorField, D: VectorField> AuxiliaryField<F, D> {
    pub fn new(base: F, delta: D, s: f64) -> Result<Self> {
        check_parameter(s)?;
        if base.dim() != delta.dim() {
            return Err(Error::InvalidDimension(format!(
                "base field has dimension {}, perturbation {}",
                base.dim(),
                delta.dim()
            )));
        }
        Ok(Self { base, delta, s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

impl<F: VectorField, D: VectorField> VectorField for AuxiliaryField<F, D> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = self.base.eval(x);
        if self.s != 0.0 {
            v.axpy(self.s, &self.delta.eval(x), 1.0);
        }
        v
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.base.jacobian(x);
        if self.s != 0.0 {
            j += self.delta.jacobian(x) * self.s;
        }
        j
    }
}

fn check_parameter(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange(format!("interpolation parameter s = {s} outside [0, 1]")));
    }
    Ok(())
}

pub fn auxiliary_value<F: VectorField, D: VectorField>(
    base: &F,
    delta: &D,
    s: f64,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let field = AuxiliaryField::new(base, delta, s)?;
    check_dim(field.dim(), x)?;
    Ok(field.eval(x))
}

/// Initial condition of the `s` member: `(1 - s)x₀ + s x̃₀`.
pub fn blend_initial(x0: &DVector<f64>, x0_tilde: &DVector<f64>, s: f64) -> Result<DVector<f64>> {
    check_parameter(s)?;
    if x0.len() != x0_tilde.len() {
        return Err(Error::InvalidDimension("initial states differ in length".into()));
    }
    Ok(x0 * (1.0 - s) + x0_tilde * s)
}

/// A scalar map with its derivative.
#[derive(Clone)]
pub struct ScalarFn {
    value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ScalarFn")
    }
}

impl ScalarFn {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), derivative: Arc::new(derivative) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c, |_| 0.0)
    }

    pub fn linear(k: f64) -> Self {
        Self::new(move |x| k * x, move |_| k)
    }

    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    pub fn tanh() -> Self {
        Self::new(f64::tanh, |x| 1.0 - x.tanh().powi(2))
    }

    pub fn sin() -> Self {
        Self::new(f64::sin, f64::cos)
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }
}

/// `ẋ = h(x) + WΦ(x)` with node-wise `h` and element-wise `Φ`.
#[derive(Debug, Clone)]
pub struct GeneralNetworkField {
    pub internal: Vec<ScalarFn>,
    pub coupling: DMatrix<f64>,
    pub phi: ScalarFn,
}

impl GeneralNetworkField {
    pub fn new(internal: Vec<ScalarFn>, coupling: DMatrix<f64>, phi: ScalarFn) -> Result<Self> {
        let n = internal.len();
        if coupling.shape() != (n, n) {
            return Err(Error::InvalidDimension(format!(
                "coupling matrix is {}x{} for {n} nodes",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        Ok(Self { internal, coupling, phi })
    }

    /// Same internal dynamics and nonlinearity with coupling `W + Δ`.
    pub fn with_coupling(&self, coupling: DMatrix<f64>) -> Result<Self> {
        Self::new(self.internal.clone(), coupling, self.phi.clone())
    }
}

impl VectorField for GeneralNetworkField {
    fn dim(&self) -> usize {
        self.internal.len()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let phi = x.map(|v| self.phi.value(v));
        let h = DVector::from_iterator(x.len(), self.internal.iter().zip(x.iter()).map(|(h, &v)| h.value(v)));
        h + &self.coupling * phi
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let dphi = x.map(|v| self.phi.derivative(v));
        let dh = DVector::from_iterator(
            x.len(),
            self.internal.iter().zip(x.iter()).map(|(h, &v)| h.derivative(v)),
        );
        let mut j = self.coupling.clone();
        for (mut col, d) in j.column_iter_mut().zip(dphi.iter()) {
            col *= *d;
        }
        j.set_diagonal(&(j.diagonal() + dh));
        j
    }
}

/// `ẋ = Ax`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    pub a: DMatrix<f64>,
}

impl LinearField {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidDimension(format!("{}x{} is not square", a.nrows(), a.ncols())));
        }
        Ok(Self { a })
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }
}

/// Central-difference Jacobian, column by column.
pub fn finite_difference_jacobian<F: VectorField + ?Sized>(field: &F, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = field.dim();
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let col = (field.eval(&xp) - field.eval(&xm)) / (2.0 * h);
        j.set_column(k, &col);
    }
    j
}
