//! Finite-dimensional operator algebra: Hermitian matrices, density operators,
//! spectral calculus, tensor products, partial traces and pinching.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Max absolute deviation `|A_ij - conj(A_ji)|` accepted as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted for a density operator.
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Eigenvalues in `[-SIGN_TIE_TOL, SIGN_TIE_TOL]` count as zero in sign projections.
pub const SIGN_TIE_TOL: f64 = 1e-12;
/// Relative gap below which eigenvalues belong to the same eigenspace.
pub const CLUSTER_REL_TOL: f64 = 1e-9;
pub const DEFAULT_DIM_CAP: usize = 16384;
pub const DIM_CAP_ENV: &str = "CQCOVERT_DIM_CAP";

/// Largest Hilbert-space dimension the library will materialize.
pub fn dim_cap() -> usize {
    std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_DIM_CAP)
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    let cap = dim_cap();
    if dim > cap {
        return Err(Error::DimensionCapExceeded { dim, cap });
    }
    Ok(())
}

/// `d^n`, or `DimensionCapExceeded` if it would not fit under the cap.
pub fn checked_power_dim(d: usize, n: usize) -> Result<usize> {
    let cap = dim_cap();
    let mut dim: usize = 1;
    for _ in 0..n {
        dim = match dim.checked_mul(d) {
            Some(v) if v <= cap => v,
            _ => {
                let approx = (d as f64).powi(n as i32);
                let shown = if approx >= usize::MAX as f64 { usize::MAX } else { approx as usize };
                return Err(Error::DimensionCapExceeded { dim: shown, cap });
            }
        };
    }
    Ok(dim)
}

/// `Tr{AB}` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn max_hermitian_deviation(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(dev);
        }
    }
    worst
}

/// Eigendecomposition with eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl Spectrum {
    fn from_unsorted(values: Vec<f64>, vectors: CMatrix) -> Self {
        let d = values.len();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
        if order.iter().enumerate().all(|(k, &i)| k == i) {
            return Self { values, vectors };
        }
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let sorted_vectors = CMatrix::from_fn(vectors.nrows(), d, |r, c| vectors[(r, order[c])]);
        Self { values: sorted_values, vectors: sorted_vectors }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Orthonormal eigenvectors as columns, aligned with [`Spectrum::values`].
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.dim();
        let mut scaled = self.vectors.clone();
        for (c, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for r in 0..d {
                scaled[(r, c)] *= fv;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|v| v)
    }

    /// Projector onto the span of eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projector_where(&self, keep: impl Fn(f64) -> bool) -> Projector {
        let cols: Vec<usize> = (0..self.dim()).filter(|&i| keep(self.values[i])).collect();
        Projector::from_columns(&self.vectors, &cols)
    }
}

/// Scalar functions lifted to Hermitian operators on the support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFunction {
    Log,
    /// `A^c` on the support. `Pow(0.0)` is the support projector.
    Pow(f64),
    Pinv,
    SqrtPinv,
}

impl MatrixFunction {
    pub fn eval(self, x: f64, rank_tol: f64) -> f64 {
        if x <= rank_tol {
            return 0.0;
        }
        match self {
            MatrixFunction::Log => x.ln(),
            MatrixFunction::Pow(c) => {
                if c == 0.0 {
                    1.0
                } else {
                    x.powf(c)
                }
            }
            MatrixFunction::Pinv => 1.0 / x,
            MatrixFunction::SqrtPinv => 1.0 / x.sqrt(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HermitianMatrix {
    m: CMatrix,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Empty);
        }
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let dev = max_hermitian_deviation(&m);
        if !(dev <= HERMITICITY_TOL) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::symmetrized(m))
    }

    /// Projects onto the Hermitian part without validation.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self { m: (m + adj) * C64::new(0.5, 0.0) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let m = CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) });
        Self { m }
    }

    pub fn identity(d: usize) -> Self {
        Self { m: CMatrix::identity(d, d) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { m: CMatrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn eigen(&self) -> Spectrum {
        let eig = self.m.clone().symmetric_eigen();
        Spectrum::from_unsorted(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }

    /// Eigenvalues in descending order, without eigenvectors.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { m: &self.m * C64::new(c, 0.0) }
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self { m: &self.m - &other.m })
    }

    /// Trace norm `||A||_1`.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|v| v.abs()).sum()
    }

    pub fn apply(&self, f: MatrixFunction, rank_tol: f64) -> HermitianMatrix {
        matrix_function(self, f, rank_tol)
    }
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{a} vs {b}")));
    }
    Ok(())
}

/// Orthogonal projector stored together with its rank.
#[derive(Clone, Debug)]
pub struct Projector {
    m: CMatrix,
    rank: usize,
}

impl Projector {
    /// Projector onto the span of the selected orthonormal columns.
    pub fn from_columns(vectors: &CMatrix, cols: &[usize]) -> Self {
        let d = vectors.nrows();
        let mut m = CMatrix::zeros(d, d);
        if !cols.is_empty() {
            let sub = CMatrix::from_fn(d, cols.len(), |r, c| vectors[(r, cols[c])]);
            m = &sub * sub.adjoint();
        }
        Self { m, rank: cols.len() }
    }

    pub fn identity(d: usize) -> Self {
        Self { m: CMatrix::identity(d, d), rank: d }
    }

    pub fn complement(&self) -> Self {
        let d = self.dim();
        Self { m: CMatrix::identity(d, d) - &self.m, rank: d - self.rank }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn to_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix { m: self.m.clone() }
    }

    /// `Tr{P A}`.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        trace_product(&self.m, a).re
    }
}

/// Unit-trace positive semidefinite operator with a cached, clipped spectrum.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    h: HermitianMatrix,
    spectrum: Spectrum,
    rank_tol: f64,
}

impl DensityOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_rank_tol(m, DEFAULT_RANK_TOL)
    }

    pub fn with_rank_tol(m: CMatrix, rank_tol: f64) -> Result<Self> {
        let h = HermitianMatrix::new(m)?;
        Self::from_hermitian(h, rank_tol)
    }

    pub fn from_hermitian(h: HermitianMatrix, rank_tol: f64) -> Result<Self> {
        check_dim(h.dim())?;
        let tr = h.trace();
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::TraceNotOne(tr));
        }
        let spec = h.eigen();
        let min = spec.values.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self::from_parts(h, spec, rank_tol))
    }

    fn from_parts(h: HermitianMatrix, mut spectrum: Spectrum, rank_tol: f64) -> Self {
        for v in spectrum.values.iter_mut() {
            if *v <= rank_tol {
                *v = 0.0;
            }
        }
        Self { h, spectrum, rank_tol }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(probs).into_matrix())
    }

    /// `|psi><psi|` for a normalized copy of `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0 / d as f64; d])
    }

    /// `sum_i w_i rho_i` for a probability vector `w`.
    pub fn mixture(weights: &[f64], states: &[&DensityOperator]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::DimensionMismatch("weights and states differ in length".into()));
        }
        let d = states[0].dim();
        let mut m = CMatrix::zeros(d, d);
        for (w, s) in weights.iter().zip(states) {
            same_dim(d, s.dim())?;
            m += s.matrix() * C64::new(*w, 0.0);
        }
        Self::from_hermitian(HermitianMatrix::symmetrized(m), states[0].rank_tol)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.h.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.h
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.values
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tol
    }

    pub fn rank(&self) -> usize {
        self.spectrum.values.iter().filter(|&&v| v > self.rank_tol).count()
    }

    pub fn support_projector(&self) -> Projector {
        let tol = self.rank_tol;
        self.spectrum.projector_where(|v| v > tol)
    }

    /// Pseudo-function on the support, using the cached spectrum.
    pub fn apply(&self, f: MatrixFunction) -> HermitianMatrix {
        let tol = self.rank_tol;
        HermitianMatrix::symmetrized(self.spectrum.map(|v| f.eval(v, tol)))
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy_of_values(&self.spectrum.values, self.rank_tol)
    }

    /// `Re Tr{A rho}`.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        trace_product(a, self.matrix()).re
    }

    /// `sum_j <v_j|rho|v_j>` over the eigenvectors of `other` outside its support.
    pub fn leakage_outside(&self, other: &DensityOperator) -> f64 {
        let tol = other.rank_tol;
        let v = other.spectrum.vectors();
        let mut acc = 0.0;
        for (j, &lam) in other.spectrum.values.iter().enumerate() {
            if lam <= tol {
                acc += quadratic_form(self.matrix(), v, j);
            }
        }
        acc.max(0.0)
    }

    pub fn commutes_with(&self, other: &DensityOperator, tol: f64) -> bool {
        let a = self.matrix();
        let b = other.matrix();
        (a * b - b * a).iter().all(|z| z.norm() <= tol)
    }
}

pub(crate) fn entropy_of_values(values: &[f64], rank_tol: f64) -> f64 {
    let h: f64 = values.iter().filter(|&&v| v > rank_tol).map(|&v| -v * v.ln()).sum();
    h.max(0.0)
}

/// `Re <v|A|v>` for column `j` of `vectors`.
pub(crate) fn quadratic_form(a: &CMatrix, vectors: &CMatrix, j: usize) -> f64 {
    let v = vectors.column(j);
    let av = a * v;
    v.iter().zip(av.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn matrix_function(a: &HermitianMatrix, f: MatrixFunction, rank_tol: f64) -> HermitianMatrix {
    HermitianMatrix::symmetrized(a.eigen().map(|v| f.eval(v, rank_tol)))
}

pub fn support_projector(rho: &DensityOperator) -> Projector {
    rho.support_projector()
}

/// `{A >= 0}` or, when `strict`, `{A > 0}`. Eigenvalues in the tie window
/// `[-1e-12, 1e-12]` are treated as zero.
pub fn spectral_projection_nonneg(a: &HermitianMatrix, strict: bool) -> Projector {
    spectral_projection_from(&a.eigen(), strict)
}

pub(crate) fn spectral_projection_from(spec: &Spectrum, strict: bool) -> Projector {
    if strict {
        spec.projector_where(|v| v > SIGN_TIE_TOL)
    } else {
        spec.projector_where(|v| v >= -SIGN_TIE_TOL)
    }
}

/// Tensor product. The spectrum is assembled from the factors, so no
/// eigendecomposition of the product is needed.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    let dim = a.dim().saturating_mul(b.dim());
    check_dim(dim)?;
    let m = kron(a.matrix(), b.matrix());
    let (va, vb) = (&a.spectrum.values, &b.spectrum.values);
    let mut values = Vec::with_capacity(dim);
    for x in va {
        for y in vb {
            values.push(x * y);
        }
    }
    let vectors = kron(a.spectrum.vectors(), b.spectrum.vectors());
    let spec = Spectrum::from_unsorted(values, vectors);
    let tol = product_rank_tol(&spec.values, a.rank_tol.min(b.rank_tol));
    Ok(DensityOperator { h: HermitianMatrix { m }, spectrum: spec, rank_tol: tol })
}

/// A positive product of positive factors must stay in the support, even when
/// it falls below the factors' own tolerance.
fn product_rank_tol(values: &[f64], base: f64) -> f64 {
    let min_pos = values.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    if min_pos.is_finite() {
        base.min(0.5 * min_pos)
    } else {
        base
    }
}

pub fn kron_power(a: &DensityOperator, n: usize) -> Result<DensityOperator> {
    if n == 0 {
        return Err(Error::InvalidArgument("tensor power needs n >= 1".into()));
    }
    checked_power_dim(a.dim(), n)?;
    let mut acc = a.clone();
    for _ in 1..n {
        acc = tensor(&acc, a)?;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of an operator on `C^{da} (x) C^{db}`, keeping `keep`.
pub fn partial_trace_matrix(m: &CMatrix, dims: (usize, usize), keep: Subsystem) -> Result<CMatrix> {
    let (da, db) = dims;
    if da * db != m.nrows() || m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator cannot be split as {da} x {db}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(match keep {
        Subsystem::A => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Subsystem::B => CMatrix::from_fn(db, db, |k, l| (0..da).map(|i| m[(i * db + k, i * db + l)]).sum()),
    })
}

pub fn partial_trace(joint: &DensityOperator, dims: (usize, usize), keep: Subsystem) -> Result<DensityOperator> {
    let m = partial_trace_matrix(joint.matrix(), dims, keep)?;
    DensityOperator::from_hermitian(HermitianMatrix::symmetrized(m), joint.rank_tol.max(DEFAULT_RANK_TOL))
}

/// Eigendecomposition grouped into (numerically) degenerate eigenspaces.
#[derive(Clone, Debug)]
pub struct EigenClusters {
    spectrum: Spectrum,
    groups: Vec<std::ops::Range<usize>>,
}

impl EigenClusters {
    pub fn new(a: &HermitianMatrix) -> Self {
        let spectrum = a.eigen();
        let groups = cluster_descending(&spectrum.values, a.dim());
        Self { spectrum, groups }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn groups(&self) -> &[std::ops::Range<usize>] {
        &self.groups
    }

    /// `sum_i E_i B E_i` over the eigenprojections `E_i`.
    pub fn pinch(&self, b: &CMatrix) -> CMatrix {
        let v = self.spectrum.vectors();
        let mut w = v.adjoint() * b * v;
        let d = w.nrows();
        let mut label = vec![0usize; d];
        for (g, r) in self.groups.iter().enumerate() {
            for i in r.clone() {
                label[i] = g;
            }
        }
        for i in 0..d {
            for j in 0..d {
                if label[i] != label[j] {
                    w[(i, j)] = C64::new(0.0, 0.0);
                }
            }
        }
        v * w * v.adjoint()
    }
}

/// Contiguous clusters of a descending sequence. Neighbours merge when their
/// gap is within `CLUSTER_REL_TOL` relative, or within the eigensolver noise
/// floor of the whole spectrum.
pub(crate) fn cluster_descending(values: &[f64], dim: usize) -> Vec<std::ops::Range<usize>> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 16.0 * f64::EPSILON * dim as f64 * scale;
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (x, y) = (values[i - 1], values[i]);
            let gap = (x - y).abs();
            !(gap <= CLUSTER_REL_TOL * x.abs().max(y.abs()) || gap <= floor)
        };
        if split {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

/// Pinching of `b` with respect to the eigenspaces of `a`.
pub fn pinching(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    same_dim(a.dim(), b.dim())?;
    Ok(HermitianMatrix::symmetrized(EigenClusters::new(a).pinch(b.matrix())))
}

/// Wire format for a single matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        let re = (0..d).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
        let any_im = m.iter().any(|z| z.im != 0.0);
        let im = any_im.then(|| (0..d).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect());
        Self { dim: d, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Parse("matrix with dim 0".into()));
        }
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !rows_ok(&self.re) {
            return Err(Error::Parse(format!("\"re\" is not a {d}x{d} array")));
        }
        if let Some(im) = &self.im {
            if !rows_ok(im) {
                return Err(Error::Parse(format!("\"im\" is not a {d}x{d} array")));
            }
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            C64::new(self.re[i][j], im)
        }))
    }
}
