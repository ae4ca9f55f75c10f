//! Unitary (Schrödinger) evolution, environmental dephasing and branch decomposition.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{
    c, hermitian_residual, identity, lift_operator, max_abs_diff, CMatrix, DensityMatrix, Projector, PureState,
    SubsystemLayout, C64, HERMITIAN_TOL,
};

/// Weights below this are treated as empty branches.
pub const BRANCH_CUTOFF: f64 = 1e-14;

/// Hermitian generator with ħ = 1 (entries in angular-frequency units).
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    entries: CMatrix,
}

impl Hamiltonian {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Dimension {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let residual = hermitian_residual(&entries);
        if !(residual <= HERMITIAN_TOL) {
            return Err(Error::Parameter {
                name: "hamiltonian hermiticity residual",
                expected: "<= 1e-12",
                value: residual,
            });
        }
        Ok(Self { entries })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            entries: CMatrix::zeros(dim, dim),
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            entries: CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            entries: CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        }
    }

    /// ω·σx: full |0⟩ → |1⟩ transfer after time π/(2ω).
    pub fn rabi(omega: f64) -> Self {
        Self::pauli_x().scaled(omega)
    }

    /// Parses `pauli-x`, `pauli-z` or `rabi(<omega>)`.
    pub fn from_preset(name: &str) -> Result<Self> {
        let key = name.trim();
        match key {
            "pauli-x" => Ok(Self::pauli_x()),
            "pauli-z" => Ok(Self::pauli_z()),
            _ => {
                let omega = key
                    .strip_prefix("rabi(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .and_then(|arg| arg.trim().parse::<f64>().ok())
                    .filter(|w| w.is_finite())
                    .ok_or_else(|| Error::field("hamiltonian", format!("unknown preset `{name}`")))?;
                Ok(Self::rabi(omega))
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.scale(factor),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Embeds this Hamiltonian on one factor of `layout`.
    pub fn lift(&self, layout: &SubsystemLayout, factor: usize) -> Result<Self> {
        Ok(Self {
            entries: lift_operator(layout, factor, &self.entries)?,
        })
    }

    pub fn sum(&self, other: &Hamiltonian) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            entries: &self.entries + &other.entries,
        })
    }

    /// Eigendecomposition of (H + H†)/2, reusable for many time steps.
    pub fn spectrum(&self) -> Spectrum {
        let herm = (&self.entries + self.entries.adjoint()).scale(0.5);
        let eig = herm.symmetric_eigen();
        Spectrum {
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }
}

/// H = V·diag(E)·V†
#[derive(Debug, Clone)]
pub struct Spectrum {
    energies: Vec<f64>,
    vectors: CMatrix,
}

impl Spectrum {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// exp(-i·H·dt)
    pub fn propagator(&self, dt: f64) -> Result<CMatrix> {
        if !dt.is_finite() {
            return Err(Error::Parameter {
                name: "dt",
                expected: "finite",
                value: dt,
            });
        }
        let phases = DVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|&e| C64::from_polar(1.0, -e * dt)),
        );
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        Ok(scaled * self.vectors.adjoint())
    }
}

/// U = exp(-i·h·dt) by Hermitian eigendecomposition.
pub fn propagator(h: &Hamiltonian, dt: f64) -> Result<CMatrix> {
    h.spectrum().propagator(dt)
}

/// U·s·U† for a precomputed unitary.
pub fn apply_unitary(s: &DensityMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    s.check_dim(u.nrows())?;
    Ok(DensityMatrix::from_matrix_unchecked(u * s.entries() * u.adjoint()))
}

pub fn evolve(s: &DensityMatrix, h: &Hamiltonian, dt: f64) -> Result<DensityMatrix> {
    s.check_dim(h.dim())?;
    apply_unitary(s, &propagator(h, dt)?)
}

/// Complete set of mutually orthogonal projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerBasis {
    projectors: Vec<Projector>,
}

impl PointerBasis {
    pub fn new(projectors: Vec<Projector>) -> Result<Self> {
        let dim = projectors.first().map(Projector::dim).ok_or(Error::Precondition(
            "pointer basis needs at least one projector".into(),
        ))?;
        let mut sum = CMatrix::zeros(dim, dim);
        for (i, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: p.dim(),
                });
            }
            for q in &projectors[i + 1..] {
                let overlap = (p.entries() * q.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if overlap > 1e-12 {
                    return Err(Error::Precondition(format!(
                        "pointer projectors `{}` and `{}` overlap ({overlap:e})",
                        p.label(),
                        q.label()
                    )));
                }
            }
            sum += p.entries();
        }
        let completeness = max_abs_diff(&sum, &identity(dim));
        if completeness > 1e-12 {
            return Err(Error::Precondition(format!(
                "pointer projectors do not sum to identity (residual {completeness:e})"
            )));
        }
        Ok(Self { projectors })
    }

    /// {|k⟩⟨k|} on a `dim`-dimensional space.
    pub fn computational(dim: usize) -> Self {
        Self {
            projectors: (0..dim)
                .map(|k| Projector::from_state(&PureState::basis(dim, k), k.to_string()))
                .collect(),
        }
    }

    /// Two-outcome basis {P, I - P}.
    pub fn binary(p: &Projector) -> Self {
        Self {
            projectors: vec![p.clone(), p.complement()],
        }
    }

    /// Computational basis of one factor, identity on the rest.
    pub fn on_factor(layout: &SubsystemLayout, factor: usize) -> Result<Self> {
        let local = Self::computational(layout.dims().get(factor).copied().ok_or(Error::Dimension {
            expected: layout.len(),
            found: factor,
        })?);
        local.lift(layout, factor)
    }

    pub fn lift(&self, layout: &SubsystemLayout, factor: usize) -> Result<Self> {
        Ok(Self {
            projectors: self
                .projectors
                .iter()
                .map(|p| p.lift(layout, factor))
                .collect::<Result<_>>()?,
        })
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn commutes_with(&self, m: &CMatrix, tol: f64) -> bool {
        self.projectors.iter().all(|p| p.commutes_with(m, tol))
    }
}

/// Σᵢ Pᵢ·s·Pᵢ
fn block_diagonal(s: &DensityMatrix, basis: &PointerBasis) -> CMatrix {
    basis
        .projectors
        .iter()
        .map(|p| p.entries() * s.entries() * p.entries())
        .fold(CMatrix::zeros(s.dim(), s.dim()), |acc, m| acc + m)
}

/// Scales every off-block coherence by (1 - strength); strength 1 is full dephasing.
pub fn dephase(s: &DensityMatrix, basis: &PointerBasis, strength: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::Parameter {
            name: "dephasing strength",
            expected: "in [0, 1]",
            value: strength,
        });
    }
    s.check_dim(basis.dim())?;
    if strength == 0.0 {
        return Ok(s.clone());
    }
    let blocks = block_diagonal(s, basis);
    Ok(DensityMatrix::from_matrix_unchecked(
        s.entries().scale(1.0 - strength) + blocks.scale(strength),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub weight: f64,
    #[serde(skip)]
    pub state: DensityMatrix,
    pub label: usize,
}

/// Quasi-classical branches of a state relative to a pointer basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchEnsemble {
    pub branches: Vec<Branch>,
}

impl BranchEnsemble {
    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    /// Σ wᵢ·ρᵢ
    pub fn recompose(&self) -> Option<DensityMatrix> {
        let dim = self.branches.first()?.state.dim();
        let sum = self
            .branches
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, b| acc + b.state.entries().scale(b.weight));
        Some(DensityMatrix::from_matrix_unchecked(sum))
    }
}

pub fn branch_decompose(s: &DensityMatrix, basis: &PointerBasis) -> Result<BranchEnsemble> {
    s.check_dim(basis.dim())?;
    let branches = basis
        .projectors
        .iter()
        .enumerate()
        .filter_map(|(label, p)| {
            let block = p.entries() * s.entries() * p.entries();
            let weight = block.trace().re;
            (weight >= BRANCH_CUTOFF).then(|| Branch {
                weight,
                state: DensityMatrix::from_matrix_unchecked(block.unscale(weight)),
                label,
            })
        })
        .collect();
    Ok(BranchEnsemble { branches })
}
