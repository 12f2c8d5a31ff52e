//! States over a configuration space.
//!
//! A [`StateVector`] is a complex amplitude per atom, normalized in the
//! weighted norm `sum_i w_i |psi_i|^2 = 1`. The module provides the weighted
//! inner product, per-macrostate Born weights, polar decomposition of the
//! amplitudes, and the gauge-absorption round trip: phases can be moved out of
//! the amplitudes and into U(1) gauge angles attached to the atom labels,
//! leaving a nonnegative amplitude profile and a pair of derived measures
//! (the amplitude-densitized weights `r*w` and the probability weights
//! `r^2*w`) that carry the full statistical content of the state.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::configspace::{same_space, ConfigLabel, ConfigSpace, MacroPartition};

const TWO_PI: f64 = 2.0 * PI;

/// Accepted deviation of the squared norm on user input.
pub const INPUT_NORM_TOL: f64 = 1e-8;
/// Squared-norm deviation maintained internally after construction.
pub const INTERNAL_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("length mismatch: space has {space} atoms, got {got} amplitudes")]
    LengthMismatch { space: usize, got: usize },
    #[error("state is not normalized: squared norm {norm_sq} (norm {norm})")]
    NotNormalized { norm_sq: f64, norm: f64 },
    #[error("operands live on different configuration spaces")]
    SpaceMismatch,
    #[error("atom {0} carries no field data")]
    LabelKindMismatch(usize),
    #[error("state vanishes on every atom")]
    ZeroState,
}

/// Normalized complex state over a [`ConfigSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: Arc<ConfigSpace>,
    amplitudes: Vec<Complex64>,
}

/// Reduce an angle to [0, 2*pi).
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % TWO_PI;
    if t < 0.0 {
        t += TWO_PI;
    }
    // The remainder can round to exactly 2*pi for tiny negative inputs.
    if t >= TWO_PI {
        t = 0.0;
    }
    t
}

/// Distance between two angles on the circle, in [0, pi].
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (wrap_angle(a) - wrap_angle(b)).abs();
    d.min(TWO_PI - d)
}

impl StateVector {
    /// Validates the weighted norm within [`INPUT_NORM_TOL`], then rescales so
    /// the stored amplitudes are normalized to machine precision.
    pub fn from_amplitudes(
        space: &Arc<ConfigSpace>,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self, StateError> {
        if amplitudes.len() != space.len() {
            return Err(StateError::LengthMismatch {
                space: space.len(),
                got: amplitudes.len(),
            });
        }
        let norm_sq = weighted_norm_sq(space, &amplitudes);
        if (norm_sq - 1.0).abs() > INPUT_NORM_TOL {
            return Err(StateError::NotNormalized {
                norm_sq,
                norm: norm_sq.sqrt(),
            });
        }
        Ok(Self::renormalized(space.clone(), amplitudes, norm_sq))
    }

    /// Internal constructor for amplitudes produced by the crate itself,
    /// checked against the tighter drift tolerance.
    pub(crate) fn from_internal(
        space: Arc<ConfigSpace>,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self, StateError> {
        let norm_sq = weighted_norm_sq(&space, &amplitudes);
        if (norm_sq - 1.0).abs() > INTERNAL_NORM_TOL {
            return Err(StateError::NotNormalized {
                norm_sq,
                norm: norm_sq.sqrt(),
            });
        }
        Ok(Self::renormalized(space, amplitudes, norm_sq))
    }

    fn renormalized(space: Arc<ConfigSpace>, mut amplitudes: Vec<Complex64>, norm_sq: f64) -> Self {
        let scale = 1.0 / norm_sq.sqrt();
        if scale != 1.0 {
            for a in &mut amplitudes {
                *a *= scale;
            }
        }
        StateVector { space, amplitudes }
    }

    /// Normalized basis state concentrated on atom `i`.
    pub fn basis_state(space: &Arc<ConfigSpace>, i: usize) -> Self {
        let mut amplitudes = vec![Complex64::ZERO; space.len()];
        amplitudes[i] = Complex64::new(1.0 / space.weight(i).sqrt(), 0.0);
        StateVector {
            space: space.clone(),
            amplitudes,
        }
    }

    pub fn space(&self) -> &Arc<ConfigSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize) -> Complex64 {
        self.amplitudes[i]
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Probability weight `w_i |psi_i|^2` of atom `i`.
    pub fn probability_weight(&self, i: usize) -> f64 {
        self.space.weight(i) * self.amplitudes[i].norm_sqr()
    }

    /// All probability weights; they sum to one.
    pub fn probability_weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.probability_weight(i))
            .collect()
    }

    /// The same physical state with every amplitude multiplied by
    /// `exp(i*theta)`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        StateVector {
            space: self.space.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    /// Weighted inner product `sum_i w_i conj(a_i) b_i`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64, StateError> {
        if !same_space(&self.space, &other.space) {
            return Err(StateError::SpaceMismatch);
        }
        let mut acc = Complex64::ZERO;
        for i in 0..self.len() {
            acc += self.amplitudes[i].conj() * other.amplitudes[i] * self.space.weight(i);
        }
        Ok(acc)
    }

    /// Born weight of each macrostate: `P_a = sum_{i in a} w_i |psi_i|^2`.
    pub fn born_probability(
        &self,
        partition: &MacroPartition,
    ) -> Result<BTreeMap<String, f64>, StateError> {
        if partition.atom_count() != self.len() {
            return Err(StateError::SpaceMismatch);
        }
        let mut out = BTreeMap::new();
        for id in partition.ids() {
            let p = partition
                .members(id)
                .expect("id from the partition itself")
                .iter()
                .map(|&i| self.probability_weight(i))
                .sum();
            out.insert(id.clone(), p);
        }
        Ok(out)
    }

    /// Polar form of the amplitudes: `psi_i = r_i exp(i*theta_i)` with
    /// `r_i >= 0` and `theta_i` in [0, 2*pi). A vanishing amplitude gets
    /// angle 0.
    pub fn polar_decompose(&self) -> (Vec<f64>, Vec<f64>) {
        let mut radial = Vec::with_capacity(self.len());
        let mut angles = Vec::with_capacity(self.len());
        for a in &self.amplitudes {
            let r = a.norm();
            radial.push(r);
            angles.push(if r == 0.0 { 0.0 } else { wrap_angle(a.arg()) });
        }
        (radial, angles)
    }

    /// Moves the amplitude phases into gauge angles on the atom labels.
    ///
    /// The returned [`GaugeState`] represents the same physical state: a
    /// nonnegative radial profile over a relabeled space whose atoms carry the
    /// absorbed angles, together with the densitized measure `r*w` and the
    /// probability measure `r^2*w`. Pre-existing gauge angles compose
    /// additively (mod 2*pi).
    pub fn absorb_phases(&self) -> GaugeState {
        let (radial, angles) = self.polar_decompose();
        let labels: Vec<ConfigLabel> = self
            .space
            .labels()
            .iter()
            .zip(&angles)
            .map(|(label, &theta)| {
                let base = label.gauge().unwrap_or(0.0);
                label.with_gauge(wrap_angle(base + theta))
            })
            .collect();
        let space_tilde = self.space.relabeled(labels);
        let densitized_weights: Vec<f64> = radial
            .iter()
            .enumerate()
            .map(|(i, r)| r * self.space.weight(i))
            .collect();
        let probability_weights: Vec<f64> = radial
            .iter()
            .enumerate()
            .map(|(i, r)| r * r * self.space.weight(i))
            .collect();
        GaugeState {
            origin: self.space.clone(),
            space_tilde,
            radial,
            densitized_weights,
            probability_weights,
        }
    }

    /// Field representation: one `(field configuration, amplitude)` entry per
    /// atom. Requires field-kind labels.
    pub fn to_field_rep(&self) -> Result<FieldRep, StateError> {
        let mut entries = Vec::with_capacity(self.len());
        for (i, label) in self.space.labels().iter().enumerate() {
            if label.field_values().is_none() {
                return Err(StateError::LabelKindMismatch(i));
            }
            entries.push((label.clone(), self.amplitudes[i]));
        }
        Ok(FieldRep { entries })
    }

    /// Inverse of [`to_field_rep`](Self::to_field_rep) over the same space.
    pub fn from_field_rep(space: &Arc<ConfigSpace>, rep: &FieldRep) -> Result<Self, StateError> {
        if rep.entries.len() != space.len() {
            return Err(StateError::LengthMismatch {
                space: space.len(),
                got: rep.entries.len(),
            });
        }
        for (i, (label, _)) in rep.entries.iter().enumerate() {
            if label != space.label(i) {
                return Err(StateError::SpaceMismatch);
            }
        }
        Ok(StateVector {
            space: space.clone(),
            amplitudes: rep.entries.iter().map(|(_, c)| *c).collect(),
        })
    }
}

fn weighted_norm_sq(space: &ConfigSpace, amplitudes: &[Complex64]) -> f64 {
    amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| space.weight(i) * a.norm_sqr())
        .sum()
}

/// A state after gauge absorption: nonnegative radial profile over the
/// relabeled space, plus the densitized and probability measures.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeState {
    origin: Arc<ConfigSpace>,
    space_tilde: Arc<ConfigSpace>,
    radial: Vec<f64>,
    densitized_weights: Vec<f64>,
    probability_weights: Vec<f64>,
}

impl GaugeState {
    pub fn origin_space(&self) -> &Arc<ConfigSpace> {
        &self.origin
    }

    /// The relabeled space whose atoms carry the absorbed gauge angles.
    pub fn space_tilde(&self) -> &Arc<ConfigSpace> {
        &self.space_tilde
    }

    pub fn radial(&self) -> &[f64] {
        &self.radial
    }

    /// Densitized weights `r_i * w_i`.
    pub fn densitized_weights(&self) -> &[f64] {
        &self.densitized_weights
    }

    /// Probability weights `r_i^2 * w_i`; they sum to one for a normalized
    /// origin state.
    pub fn probability_weights(&self) -> &[f64] {
        &self.probability_weights
    }

    /// The absorbed angle of atom `i` relative to the origin label's gauge.
    pub fn absorbed_angle(&self, i: usize) -> f64 {
        let tilde = self.space_tilde.label(i).gauge().unwrap_or(0.0);
        let base = self.origin.label(i).gauge().unwrap_or(0.0);
        wrap_angle(tilde - base)
    }

    /// Rebuilds the amplitude state over the origin space:
    /// `psi_i = r_i exp(i*theta_i)`. Exact inverse of
    /// [`StateVector::absorb_phases`] up to rounding.
    pub fn reconstruct(&self) -> StateVector {
        let amplitudes: Vec<Complex64> = self
            .radial
            .iter()
            .enumerate()
            .map(|(i, &r)| Complex64::from_polar(r, self.absorbed_angle(i)))
            .collect();
        StateVector {
            space: self.origin.clone(),
            amplitudes,
        }
    }

    /// Born weights computed from the probability measure alone.
    pub fn born_from_probability_weights(
        &self,
        partition: &MacroPartition,
    ) -> Result<BTreeMap<String, f64>, StateError> {
        if partition.atom_count() != self.radial.len() {
            return Err(StateError::SpaceMismatch);
        }
        let mut out = BTreeMap::new();
        for id in partition.ids() {
            let p = partition
                .members(id)
                .expect("id from the partition itself")
                .iter()
                .map(|&i| self.probability_weights[i])
                .sum();
            out.insert(id.clone(), p);
        }
        Ok(out)
    }
}

/// The state as a list of `(classical field, constant amplitude)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRep {
    entries: Vec<(ConfigLabel, Complex64)>,
}

impl FieldRep {
    pub fn entries(&self) -> &[(ConfigLabel, Complex64)] {
        &self.entries
    }
}
