//! Dense complex-matrix foundation: states, projectors and composite-system algebra.
//!
//! Everything here is an immutable value. Constructors that accept user data
//! validate the defining invariants; operations that are known to preserve them
//! (tensor products, partial traces, reductions) skip re-validation.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Max entrywise |M - M†| accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Max |Tr ρ - 1| accepted as unit trace.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Max entrywise |P·P - P| accepted as idempotent.
pub const IDEMPOTENT_TOL: f64 = 1e-12;
/// Max |‖v‖ - 1| accepted as a unit vector.
pub const NORM_TOL: f64 = 1e-12;

/// Tolerances used by [`diagnose_density`] and [`diagnose_projector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub positivity: f64,
    pub idempotent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: HERMITIAN_TOL,
            trace: TRACE_TOL,
            positivity: POSITIVITY_TOL,
            idempotent: IDEMPOTENT_TOL,
        }
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entrywise modulus of `a - b`. Matrices must have equal shapes.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigenvalues of the Hermitian part (M + M†)/2, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    let mut values: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

// ---------------------------------------------------------------------------
// Diagnostics

/// One invariant check with its measured residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Pass/fail per invariant. Failures are data; nothing here panics.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub checks: Vec<Check>,
}

impl Diagnostics {
    fn push(&mut self, name: &'static str, residual: f64, tolerance: f64) {
        self.checks.push(Check {
            name,
            residual,
            tolerance,
            passed: residual.is_finite() && residual <= tolerance,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn into_result(self, what: &'static str) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::Invalid { what, report: self })
        }
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} residual {:e} > {:e}", c.name, c.residual, c.tolerance))
            .collect();
        if failed.is_empty() {
            write!(f, "all {} checks passed", self.checks.len())
        } else {
            write!(f, "{}", failed.join("; "))
        }
    }
}

fn shape_checks(m: &CMatrix, report: &mut Diagnostics) -> bool {
    let square = m.nrows() == m.ncols() && m.nrows() > 0;
    report.push("square", if square { 0.0 } else { 1.0 }, 0.0);
    let finite = m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    report.push("finite", if finite { 0.0 } else { f64::INFINITY }, 0.0);
    square && finite
}

/// Checks the density-matrix invariants (Hermitian, unit trace, PSD) of a raw matrix.
pub fn diagnose_density(m: &CMatrix, tol: &Tolerances) -> Diagnostics {
    let mut report = Diagnostics::default();
    if !shape_checks(m, &mut report) {
        return report;
    }
    report.push("hermitian", hermitian_residual(m), tol.hermitian);
    report.push("unit_trace", (m.trace() - C64::new(1.0, 0.0)).norm(), tol.trace);
    let min_eig = hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
    report.push("positive_semidefinite", (-min_eig).max(0.0), tol.positivity);
    report
}

/// Checks the projector invariants (Hermitian, idempotent) of a raw matrix.
pub fn diagnose_projector(m: &CMatrix, tol: &Tolerances) -> Diagnostics {
    let mut report = Diagnostics::default();
    if !shape_checks(m, &mut report) {
        return report;
    }
    report.push("hermitian", hermitian_residual(m), tol.hermitian);
    report.push("idempotent", max_abs_diff(&(m * m), m), tol.idempotent);
    report
}

/// Anything that can report on its own invariants.
pub trait Validate {
    fn validate(&self) -> Diagnostics;
}

impl Validate for CMatrix {
    /// Treats the raw matrix as a candidate density matrix.
    fn validate(&self) -> Diagnostics {
        diagnose_density(self, &Tolerances::default())
    }
}

// ---------------------------------------------------------------------------
// PureState

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Accepts an already-normalized amplitude vector.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes `amplitudes`; fails only for a zero (or non-finite) vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || !norm.is_finite() || norm < 1e-300 {
            return Err(Error::Normalization { norm });
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::normalized(CVector::from_iterator(
            values.len(),
            values.iter().map(|&x| c(x, 0.0)),
        ))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = c(1.0, 0.0);
        Self { amplitudes }
    }

    /// (|0⟩ + |1⟩)/√2
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitudes: CVector::from_vec(vec![c(h, 0.0), c(h, 0.0)]),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    /// |v⟩⟨v|
    pub fn outer(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    /// ⟨v|M|v⟩
    pub fn expectation(&self, m: &CMatrix) -> C64 {
        (self.amplitudes.adjoint() * m * &self.amplitudes)[(0, 0)]
    }

    /// Applies `u` and renormalizes away round-off.
    pub fn apply(&self, u: &CMatrix) -> Result<PureState> {
        if u.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: u.ncols(),
            });
        }
        PureState::normalized(u * &self.amplitudes)
    }
}

impl Validate for PureState {
    fn validate(&self) -> Diagnostics {
        let mut report = Diagnostics::default();
        report.push("unit_norm", (self.amplitudes.norm() - 1.0).abs(), NORM_TOL);
        report
    }
}

// ---------------------------------------------------------------------------
// DensityMatrix

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixJson", try_from = "MatrixJson")]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        diagnose_density(&entries, &Tolerances::default()).into_result("density matrix")?;
        Ok(Self { entries })
    }

    /// Wraps a matrix produced by an invariant-preserving operation.
    pub(crate) fn from_matrix_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self {
            entries: state.outer(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: identity(dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_matrix_unchecked(tensor(&self.entries, &other.entries))
    }

    /// Convex mixture `w·self + (1-w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        self.check_dim(other.dim())?;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Parameter {
                name: "mixing weight",
                expected: "in [0, 1]",
                value: w,
            });
        }
        Ok(DensityMatrix::from_matrix_unchecked(
            self.entries.scale(w) + other.entries.scale(1.0 - w),
        ))
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                found: dim,
            })
        }
    }
}

impl Validate for DensityMatrix {
    fn validate(&self) -> Diagnostics {
        diagnose_density(&self.entries, &Tolerances::default())
    }
}

// ---------------------------------------------------------------------------
// Projector

/// Hermitian idempotent operator: a labelled Yes/No question.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    entries: CMatrix,
    label: String,
}

impl Projector {
    pub fn new(entries: CMatrix, label: impl Into<String>) -> Result<Self> {
        diagnose_projector(&entries, &Tolerances::default()).into_result("projector")?;
        Ok(Self {
            entries,
            label: label.into(),
        })
    }

    pub(crate) fn from_matrix_unchecked(entries: CMatrix, label: impl Into<String>) -> Self {
        Self {
            entries,
            label: label.into(),
        }
    }

    /// Rank-1 projector |v⟩⟨v|.
    pub fn from_state(state: &PureState, label: impl Into<String>) -> Self {
        Self::from_matrix_unchecked(state.outer(), label)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(identity(dim), "I")
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_matrix_unchecked(CMatrix::zeros(dim, dim), "0")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn rank(&self) -> usize {
        self.entries.trace().re.round() as usize
    }

    /// I - P, labelled `!label`.
    pub fn complement(&self) -> Projector {
        Projector::from_matrix_unchecked(
            identity(self.dim()) - &self.entries,
            format!("!{}", self.label),
        )
    }

    pub fn tensor(&self, other: &Projector) -> Projector {
        Projector::from_matrix_unchecked(
            tensor(&self.entries, &other.entries),
            format!("{}*{}", self.label, other.label),
        )
    }

    /// Embeds this projector on factor `factor` of `layout` (identity elsewhere).
    pub fn lift(&self, layout: &SubsystemLayout, factor: usize) -> Result<Projector> {
        Ok(Projector::from_matrix_unchecked(
            lift_operator(layout, factor, &self.entries)?,
            self.label.clone(),
        ))
    }

    /// U P U†
    pub fn conjugate_by(&self, u: &CMatrix) -> Projector {
        Projector::from_matrix_unchecked(u * &self.entries * u.adjoint(), self.label.clone())
    }

    pub fn commutes_with(&self, m: &CMatrix, tol: f64) -> bool {
        max_abs_diff(&(&self.entries * m), &(m * &self.entries)) <= tol
    }
}

impl Validate for Projector {
    fn validate(&self) -> Diagnostics {
        diagnose_projector(&self.entries, &Tolerances::default())
    }
}

/// Rank-1 projector onto `v`, which must be a unit vector.
pub fn projector_from_vector(v: &CVector, label: impl Into<String>) -> Result<Projector> {
    let state = PureState::new(v.clone())?;
    Ok(Projector::from_state(&state, label))
}

// ---------------------------------------------------------------------------
// SubsystemLayout

/// Ordered factor dimensions of a composite space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsystemLayout {
    dims: Vec<usize>,
}

impl SubsystemLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::field("layout", format!("dims must be non-empty and >= 1, got {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if self.total_dim() == dim {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.total_dim(),
                found: dim,
            })
        }
    }

    fn factor_dim(&self, factor: usize) -> Result<usize> {
        self.dims.get(factor).copied().ok_or(Error::Dimension {
            expected: self.dims.len(),
            found: factor,
        })
    }

    /// (product of dims before, dims[factor], product of dims after)
    fn split(&self, factor: usize) -> Result<(usize, usize, usize)> {
        let d = self.factor_dim(factor)?;
        let before = self.dims[..factor].iter().product();
        let after = self.dims[factor + 1..].iter().product();
        Ok((before, d, after))
    }
}

impl TryFrom<Vec<usize>> for SubsystemLayout {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SubsystemLayout> for Vec<usize> {
    fn from(layout: SubsystemLayout) -> Self {
        layout.dims
    }
}

/// I_before ⊗ local ⊗ I_after for factor `factor` of `layout`.
pub fn lift_operator(layout: &SubsystemLayout, factor: usize, local: &CMatrix) -> Result<CMatrix> {
    let (before, d, after) = layout.split(factor)?;
    if local.nrows() != d || local.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            found: local.nrows(),
        });
    }
    Ok(tensor(&tensor(&identity(before), local), &identity(after)))
}

/// Reduced state on factor `keep`, tracing out every other factor.
pub fn partial_trace(s: &DensityMatrix, layout: &SubsystemLayout, keep: usize) -> Result<DensityMatrix> {
    layout.check(s.dim())?;
    let (before, d, after) = layout.split(keep)?;
    let m = s.entries();
    let reduced = CMatrix::from_fn(d, d, |k, l| {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..before {
            for b in 0..after {
                acc += m[((a * d + k) * after + b, (a * d + l) * after + b)];
            }
        }
        acc
    });
    Ok(DensityMatrix::from_matrix_unchecked(reduced))
}

// ---------------------------------------------------------------------------
// JSON matrix literals: {"dim": n, "re": [[...]], "im": [[...]]}, row-major.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.dim;
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !rows_ok(&self.re) || !(self.im.is_empty() || rows_ok(&self.im)) {
            return Err(Error::field("matrix", format!("re/im must be {n}x{n} row-major arrays")));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let im = if self.im.is_empty() { 0.0 } else { self.im[i][j] };
            c(self.re[i][j], im)
        }))
    }
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let n = m.nrows();
        let rows = |f: fn(&C64) -> f64| (0..n).map(|i| (0..n).map(|j| f(&m[(i, j)])).collect()).collect();
        MatrixJson {
            dim: n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl From<DensityMatrix> for MatrixJson {
    fn from(s: DensityMatrix) -> Self {
        MatrixJson::from(&s.entries)
    }
}

impl TryFrom<MatrixJson> for DensityMatrix {
    type Error = Error;
    fn try_from(json: MatrixJson) -> Result<Self> {
        DensityMatrix::new(json.to_matrix()?)
    }
}
