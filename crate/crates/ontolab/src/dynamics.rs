//! Unitary dynamics over configuration spaces.
//!
//! Three pieces live here: Hermitian Hamiltonians with `exp(-i*t*H)` state
//! evolution, pointer-style measurement unitaries built from a system
//! eigenbasis, and a small periodic lattice scalar-field model whose
//! configuration atoms ground the rest of the crate in a concrete field
//! theory.
//!
//! Matrix convention: a [`HamiltonianMatrix`] acts on uniform-measure
//! amplitudes. [`evolve`] maps a state into that frame with
//! `u_i = sqrt(w_i) * psi_i`, applies the exponential, and maps back, so
//! matrix unitarity coincides with conservation of the weighted norm.
//! Units use `hbar = 1` throughout.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::configspace::{ConfigLabel, ConfigSpace};
use crate::state::{StateError, StateVector};

/// Largest lattice configuration count accepted at model construction.
pub const LATTICE_CONFIG_CAP: usize = 65_536;
/// Largest dimension routed through the dense eigendecomposition.
pub const DENSE_SOLVER_CAP: usize = 4_096;

const HERMITICITY_TOL: f64 = 1e-12;
const ORTHONORMALITY_TOL: f64 = 1e-10;
const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: operator dim {operator}, state dim {state}")]
    DimensionMismatch { operator: usize, state: usize },
    #[error("matrix is not Hermitian: residual {residual}")]
    NonHermitian { residual: f64 },
    #[error("eigenbasis is not orthonormal: residual {residual}")]
    NonOrthonormalEigenbasis { residual: f64 },
    #[error("size {size} exceeds cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("constructed map is not unitary: residual {residual}")]
    NotUnitary { residual: f64 },
    #[error("evolution drifted off the unit norm: squared norm {norm_sq}")]
    NormDrift { norm_sq: f64 },
    #[error("matrix entry ({row}, {col}) outside dimension {dim}")]
    EntryOutOfRange { row: usize, col: usize, dim: usize },
}

/// Hermitian matrix in coordinate-list form, acting on uniform-measure
/// amplitudes. Energy units with `hbar = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    dim: usize,
    /// Sorted by (row, col); duplicates summed at construction; exact zeros
    /// dropped.
    entries: Vec<(usize, usize, Complex64)>,
}

impl HamiltonianMatrix {
    /// Builds from coordinate-list entries (both triangles expected;
    /// duplicate coordinates are summed) and validates Hermiticity.
    pub fn from_coo(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self, DynamicsError> {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(DynamicsError::EntryOutOfRange {
                    row: r,
                    col: c,
                    dim,
                });
            }
            *map.entry((r, c)).or_insert(Complex64::ZERO) += v;
        }
        let entries: Vec<(usize, usize, Complex64)> = map
            .into_iter()
            .filter(|(_, v)| *v != Complex64::ZERO)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        let h = HamiltonianMatrix { dim, entries };
        let residual = h.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(DynamicsError::NonHermitian { residual });
        }
        Ok(h)
    }

    /// Builds from dense rows.
    pub fn from_dense_rows(rows: &[Vec<Complex64>]) -> Result<Self, DynamicsError> {
        let dim = rows.len();
        let mut entries = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(DynamicsError::DimensionMismatch {
                    operator: dim,
                    state: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                if *v != Complex64::ZERO {
                    entries.push((r, c, *v));
                }
            }
        }
        Self::from_coo(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nonzero entries sorted by (row, col).
    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self
            .entries
            .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
        {
            Ok(k) => self.entries[k].2,
            Err(_) => Complex64::ZERO,
        }
    }

    /// `max_ij |H_ij - conj(H_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| (v - self.entry(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Sparse matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.dim);
        let mut out = vec![Complex64::ZERO; self.dim];
        for &(r, c, val) in &self.entries {
            out[r] += val * v[c];
        }
        out
    }

    /// Infinity norm (max absolute row sum), used for step control.
    pub fn norm_inf(&self) -> f64 {
        let mut row_sums = vec![0.0; self.dim];
        for &(r, _, v) in &self.entries {
            row_sums[r] += v.norm();
        }
        row_sums.into_iter().fold(0.0, f64::max)
    }

    fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }
}

/// `exp(-i*t*H)` applied to `psi` in the uniform-measure frame.
///
/// Below [`DENSE_SOLVER_CAP`] the exponential goes through a full
/// eigendecomposition; above it, a scaling-and-squaring truncated series is
/// applied matrix-free with steps sized to keep norm drift near rounding.
pub fn evolve(
    h: &HamiltonianMatrix,
    psi: &StateVector,
    t: f64,
) -> Result<StateVector, DynamicsError> {
    let space = psi.space();
    if h.dim != psi.len() {
        return Err(DynamicsError::DimensionMismatch {
            operator: h.dim,
            state: psi.len(),
        });
    }
    let residual = h.hermiticity_residual();
    if residual > HERMITICITY_TOL {
        return Err(DynamicsError::NonHermitian { residual });
    }
    let mut u: Vec<Complex64> = (0..psi.len())
        .map(|i| psi.amplitude(i) * space.weight(i).sqrt())
        .collect();
    if t != 0.0 {
        if h.dim <= DENSE_SOLVER_CAP {
            u = exp_eigen(h, &u, t);
        } else {
            exp_series(h, &mut u, t);
        }
    }
    let amplitudes: Vec<Complex64> = u
        .iter()
        .enumerate()
        .map(|(i, ui)| ui / space.weight(i).sqrt())
        .collect();
    StateVector::from_internal(space.clone(), amplitudes).map_err(|e| match e {
        StateError::NotNormalized { norm_sq, .. } => DynamicsError::NormDrift { norm_sq },
        _ => unreachable!("internal constructor only reports normalization"),
    })
}

fn exp_eigen(h: &HamiltonianMatrix, u: &[Complex64], t: f64) -> Vec<Complex64> {
    let eig = h.to_dense().symmetric_eigen();
    let v = DVector::from_column_slice(u);
    let mut coeffs = eig.eigenvectors.adjoint() * v;
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, -t * eig.eigenvalues[k]);
    }
    (&eig.eigenvectors * coeffs).data.into()
}

fn exp_series(h: &HamiltonianMatrix, u: &mut Vec<Complex64>, t: f64) {
    let steps = ((t.abs() * h.norm_inf() / 0.5).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let phase = Complex64::new(0.0, -dt);
    for _ in 0..steps {
        let mut term = u.clone();
        let mut acc = u.clone();
        for k in 1..=64u32 {
            let hv = h.apply(&term);
            let factor = phase / k as f64;
            for (tj, hj) in term.iter_mut().zip(&hv) {
                *tj = hj * factor;
            }
            let mut term_norm = 0.0;
            for (aj, tj) in acc.iter_mut().zip(&term) {
                *aj += tj;
                term_norm += tj.norm_sqr();
            }
            if term_norm.sqrt() < 1e-16 {
                break;
            }
        }
        *u = acc;
    }
}

/// Weighted expectation value `<psi|H|psi>` in the matrix's frame.
pub fn rayleigh_quotient(h: &HamiltonianMatrix, psi: &StateVector) -> Result<f64, DynamicsError> {
    if h.dim != psi.len() {
        return Err(DynamicsError::DimensionMismatch {
            operator: h.dim,
            state: psi.len(),
        });
    }
    let space = psi.space();
    let u: Vec<Complex64> = (0..psi.len())
        .map(|i| psi.amplitude(i) * space.weight(i).sqrt())
        .collect();
    let hu = h.apply(&u);
    let num: Complex64 = u.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = u.iter().map(|a| a.norm_sqr()).sum();
    Ok(num.re / den)
}

/// A system observable's eigenbasis plus a readable pointer: the ingredients
/// of one measurement interaction. The pointer has `system_dim + 1` states;
/// index 0 is "ready".
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetup {
    eigenbasis: Vec<Vec<Complex64>>,
    environment_dim: usize,
}

impl MeasurementSetup {
    pub const READY: usize = 0;

    /// Validates that `eigenbasis` is a square orthonormal system.
    pub fn new(
        eigenbasis: Vec<Vec<Complex64>>,
        environment_dim: usize,
    ) -> Result<Self, DynamicsError> {
        let d = eigenbasis.len();
        if d == 0 || environment_dim == 0 {
            return Err(DynamicsError::DimensionMismatch {
                operator: d,
                state: environment_dim,
            });
        }
        for v in &eigenbasis {
            if v.len() != d {
                return Err(DynamicsError::DimensionMismatch {
                    operator: d,
                    state: v.len(),
                });
            }
        }
        let mut residual: f64 = 0.0;
        for (j, vj) in eigenbasis.iter().enumerate() {
            for (k, vk) in eigenbasis.iter().enumerate() {
                let gram: Complex64 = vj.iter().zip(vk).map(|(a, b)| a.conj() * b).sum();
                let target = if j == k {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                residual = residual.max((gram - target).norm());
            }
        }
        if residual > ORTHONORMALITY_TOL {
            return Err(DynamicsError::NonOrthonormalEigenbasis { residual });
        }
        Ok(MeasurementSetup {
            eigenbasis,
            environment_dim,
        })
    }

    /// Standard computational eigenbasis with a trivial environment.
    pub fn computational(system_dim: usize) -> Self {
        let eigenbasis = (0..system_dim)
            .map(|j| {
                let mut v = vec![Complex64::ZERO; system_dim];
                v[j] = Complex64::ONE;
                v
            })
            .collect();
        MeasurementSetup {
            eigenbasis,
            environment_dim: 1,
        }
    }

    pub fn system_dim(&self) -> usize {
        self.eigenbasis.len()
    }

    pub fn pointer_dim(&self) -> usize {
        self.system_dim() + 1
    }

    pub fn environment_dim(&self) -> usize {
        self.environment_dim
    }

    /// Dimension of system x pointer x environment.
    pub fn total_dim(&self) -> usize {
        self.system_dim() * self.pointer_dim() * self.environment_dim
    }

    pub fn eigenvector(&self, j: usize) -> &[Complex64] {
        &self.eigenbasis[j]
    }

    /// Flat index of `(system, pointer, environment)` in the product basis.
    pub fn index(&self, s: usize, p: usize, e: usize) -> usize {
        (s * self.pointer_dim() + p) * self.environment_dim + e
    }

    /// Product state `system x pointer basis state x environment basis state`.
    pub fn product_state(
        &self,
        system: &[Complex64],
        pointer: usize,
        env: usize,
    ) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.total_dim()];
        for (s, amp) in system.iter().enumerate() {
            out[self.index(s, pointer, env)] = *amp;
        }
        out
    }
}

/// Unitary on system x pointer x environment that copies the measured
/// eigenvalue index into the pointer.
///
/// On the ready sector it acts as
/// `|psi_j> x |zeta_0> x |e>  ->  |psi_j> x |zeta_{j+1}> x |e>`.
/// On the remaining pointer states the action is completed by the same
/// deterministic cyclic shift, `zeta_p -> zeta_{p + j + 1 mod (d+1)}` on the
/// eigenvector-`j` sector, which keeps the whole map unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementUnitary {
    matrix: DMatrix<Complex64>,
    system_dim: usize,
    pointer_dim: usize,
    environment_dim: usize,
}

/// Builds the measurement unitary of a setup and verifies unitarity.
pub fn build_measurement_unitary(
    setup: &MeasurementSetup,
) -> Result<MeasurementUnitary, DynamicsError> {
    let ds = setup.system_dim();
    let pd = setup.pointer_dim();
    let de = setup.environment_dim();
    let dim = setup.total_dim();
    let mut matrix = DMatrix::zeros(dim, dim);
    for j in 0..ds {
        let vj = setup.eigenvector(j);
        for s_out in 0..ds {
            for s_in in 0..ds {
                let coeff = vj[s_out] * vj[s_in].conj();
                if coeff == Complex64::ZERO {
                    continue;
                }
                for p_in in 0..pd {
                    let p_out = (p_in + j + 1) % pd;
                    for e in 0..de {
                        matrix[(setup.index(s_out, p_out, e), setup.index(s_in, p_in, e))] += coeff;
                    }
                }
            }
        }
    }
    let u = MeasurementUnitary {
        matrix,
        system_dim: ds,
        pointer_dim: pd,
        environment_dim: de,
    };
    let residual = u.unitarity_residual();
    if residual > UNITARITY_TOL {
        return Err(DynamicsError::NotUnitary { residual });
    }
    Ok(u)
}

impl MeasurementUnitary {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn pointer_dim(&self) -> usize {
        self.pointer_dim
    }

    pub fn environment_dim(&self) -> usize {
        self.environment_dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.dim());
        (&self.matrix * DVector::from_column_slice(v)).data.into()
    }

    /// `max |(U^H U - I)_ij|`.
    pub fn unitarity_residual(&self) -> f64 {
        let gram = self.matrix.adjoint() * &self.matrix;
        let n = gram.nrows();
        let mut residual: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let target = if r == c {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                residual = residual.max((gram[(r, c)] - target).norm());
            }
        }
        residual
    }
}

/// Periodic 1D lattice of scalar field values on a uniform grid: `sites`
/// lattice points, `bins` field values per point spaced by `dphi` and
/// centered on zero, lattice spacing `spacing`, field mass `mass`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeModel {
    sites: usize,
    bins: usize,
    mass: f64,
    spacing: f64,
    dphi: f64,
}

impl LatticeModel {
    pub fn new(
        sites: usize,
        bins: usize,
        mass: f64,
        spacing: f64,
        dphi: f64,
    ) -> Result<Self, DynamicsError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if sites == 0
            || bins < 2
            || !positive(spacing)
            || !positive(dphi)
            || mass < 0.0
            || mass.is_nan()
        {
            return Err(DynamicsError::DimensionMismatch {
                operator: sites,
                state: bins,
            });
        }
        let mut count: usize = 1;
        for _ in 0..sites {
            count = count
                .checked_mul(bins)
                .filter(|&c| c <= LATTICE_CONFIG_CAP)
                .ok_or(DynamicsError::CapExceeded {
                    size: usize::MAX,
                    cap: LATTICE_CONFIG_CAP,
                })?;
        }
        Ok(LatticeModel {
            sites,
            bins,
            mass,
            spacing,
            dphi,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dphi(&self) -> f64 {
        self.dphi
    }

    /// Number of field configurations, `bins^sites`.
    pub fn config_count(&self) -> usize {
        self.bins.pow(self.sites as u32)
    }

    /// Field value of bin `b`: grid symmetric about zero.
    pub fn field_value(&self, bin: usize) -> f64 {
        (bin as f64 - (self.bins as f64 - 1.0) / 2.0) * self.dphi
    }

    /// Per-site bin indices of configuration `idx` (site 0 least significant).
    pub fn bins_of(&self, mut idx: usize) -> Vec<usize> {
        let mut digits = Vec::with_capacity(self.sites);
        for _ in 0..self.sites {
            digits.push(idx % self.bins);
            idx /= self.bins;
        }
        digits
    }

    /// The configuration space of the model: one field-labeled atom per
    /// configuration, each carrying the grid cell measure `dphi^sites`.
    pub fn config_space(&self) -> Arc<ConfigSpace> {
        let cell = self.dphi.powi(self.sites as i32);
        let labels: Vec<ConfigLabel> = (0..self.config_count())
            .map(|idx| {
                ConfigLabel::field(
                    self.bins_of(idx)
                        .into_iter()
                        .map(|b| self.field_value(b))
                        .collect(),
                )
            })
            .collect();
        ConfigSpace::new(labels, vec![cell; self.config_count()])
            .expect("lattice grid labels are distinct and weights positive")
    }
}

/// Free scalar-field Hamiltonian on the lattice:
/// `sum_x [ pi_x^2/2 + ((phi_{x+1}-phi_x)/a)^2/2 + mass^2 phi_x^2/2 ]`,
/// with `pi^2` realized as a reflecting finite difference in the field-value
/// direction at each site. Off-diagonal entries connect only configurations
/// differing at exactly one site by one bin.
pub fn build_lattice_hamiltonian(model: &LatticeModel) -> Result<HamiltonianMatrix, DynamicsError> {
    let dim = model.config_count();
    if dim > LATTICE_CONFIG_CAP {
        return Err(DynamicsError::CapExceeded {
            size: dim,
            cap: LATTICE_CONFIG_CAP,
        });
    }
    let n = model.sites;
    let m = model.bins;
    let inv2 = 1.0 / (2.0 * model.dphi * model.dphi);
    let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut stride = 1usize;
    let strides: Vec<usize> = (0..n)
        .map(|_| {
            let s = stride;
            stride *= m;
            s
        })
        .collect();
    for idx in 0..dim {
        let digits = model.bins_of(idx);
        let values: Vec<f64> = digits.iter().map(|&b| model.field_value(b)).collect();
        let mut diag = 0.0;
        for x in 0..n {
            let grad = (values[(x + 1) % n] - values[x]) / model.spacing;
            diag += 0.5 * grad * grad + 0.5 * model.mass * model.mass * values[x] * values[x];
            // kinetic stencil diagonal: interior bins see both neighbors,
            // edge bins reflect.
            let interior = digits[x] > 0 && digits[x] < m - 1;
            diag += if interior { 2.0 * inv2 } else { inv2 };
            if digits[x] + 1 < m {
                let other = idx + strides[x];
                entries.push((idx, other, Complex64::new(-inv2, 0.0)));
                entries.push((other, idx, Complex64::new(-inv2, 0.0)));
            }
        }
        entries.push((idx, idx, Complex64::new(diag, 0.0)));
    }
    HamiltonianMatrix::from_coo(dim, entries)
}

/// Lowest eigenpair of the lattice Hamiltonian, as a normalized state over
/// the model's configuration space plus its energy.
pub fn ground_state(model: &LatticeModel) -> Result<(StateVector, f64), DynamicsError> {
    let dim = model.config_count();
    if dim > DENSE_SOLVER_CAP {
        return Err(DynamicsError::CapExceeded {
            size: dim,
            cap: DENSE_SOLVER_CAP,
        });
    }
    let h = build_lattice_hamiltonian(model)?;
    let eig = h.to_dense().symmetric_eigen();
    let mut lowest = 0;
    for k in 1..dim {
        if eig.eigenvalues[k] < eig.eigenvalues[lowest] {
            lowest = k;
        }
    }
    let energy = eig.eigenvalues[lowest];
    let column = eig.eigenvectors.column(lowest);
    // Fix the arbitrary eigenvector phase: largest-magnitude entry made
    // real positive, ties broken by index.
    let mut pivot = 0;
    for i in 1..dim {
        if column[i].norm_sqr() > column[pivot].norm_sqr() {
            pivot = i;
        }
    }
    let phase = column[pivot].conj() / column[pivot].norm();
    let space = model.config_space();
    let amplitudes: Vec<Complex64> = (0..dim)
        .map(|i| column[i] * phase / space.weight(i).sqrt())
        .collect();
    let state = StateVector::from_internal(space, amplitudes)
        .map_err(|_| DynamicsError::NormDrift { norm_sq: f64::NAN })?;
    Ok((state, energy))
}
