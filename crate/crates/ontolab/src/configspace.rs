//! Finite weighted configuration spaces and their macrostate partitions.
//!
//! A [`ConfigSpace`] is a finite set of configuration atoms, each carrying a
//! strictly positive measure weight. States live over such a space, inner
//! products are weighted by it, and probabilities are sums of `weight * |amp|^2`
//! over atom subsets. A [`MacroPartition`] groups the atoms into disjoint
//! macrostates; projecting onto a macrostate is restriction to its member set.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

const TWO_PI: f64 = 2.0 * PI;

/// Relative tolerance on the cached total weight.
pub const TOTAL_WEIGHT_RTOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("length mismatch: {left} labels vs {right} values")]
    LengthMismatch { left: usize, right: usize },
    #[error("weight {weight} at atom {index} is not strictly positive and finite")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("atoms {first} and {second} carry the same label")]
    DuplicateLabel { first: usize, second: usize },
    #[error("unknown macrostate id `{0}`")]
    UnknownMacrostate(String),
    #[error("macrostate id `{0}` is empty or contains whitespace, ',', '\"' or '='")]
    InvalidMacroId(String),
    #[error("empty configuration space")]
    Empty,
    #[error("gauge angle {0} outside [0, 2*pi)")]
    GaugeOutOfRange(f64),
    #[error("field value at atom {0} is not finite")]
    NonFiniteField(usize),
    #[error("atom {index} has {got} field values, the space declares {expected}")]
    FieldLengthMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
}

/// Label of one configuration atom: either an opaque id or a tuple of per-site
/// field values. Both kinds may carry a U(1) gauge angle in [0, 2*pi).
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigLabel {
    Opaque {
        id: u64,
        gauge: Option<f64>,
    },
    Field {
        values: Vec<f64>,
        gauge: Option<f64>,
    },
}

impl ConfigLabel {
    pub fn opaque(id: u64) -> Self {
        ConfigLabel::Opaque { id, gauge: None }
    }

    pub fn field(values: Vec<f64>) -> Self {
        ConfigLabel::Field {
            values,
            gauge: None,
        }
    }

    /// Same label with the gauge angle replaced.
    pub fn with_gauge(&self, angle: f64) -> Self {
        match self {
            ConfigLabel::Opaque { id, .. } => ConfigLabel::Opaque {
                id: *id,
                gauge: Some(angle),
            },
            ConfigLabel::Field { values, .. } => ConfigLabel::Field {
                values: values.clone(),
                gauge: Some(angle),
            },
        }
    }

    pub fn gauge(&self) -> Option<f64> {
        match self {
            ConfigLabel::Opaque { gauge, .. } | ConfigLabel::Field { gauge, .. } => *gauge,
        }
    }

    pub fn field_values(&self) -> Option<&[f64]> {
        match self {
            ConfigLabel::Field { values, .. } => Some(values),
            ConfigLabel::Opaque { .. } => None,
        }
    }

    fn validate(&self, index: usize) -> Result<(), SpaceError> {
        if let Some(g) = self.gauge() {
            if !g.is_finite() || !(0.0..TWO_PI).contains(&g) {
                return Err(SpaceError::GaugeOutOfRange(g));
            }
        }
        if let ConfigLabel::Field { values, .. } = self {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(SpaceError::NonFiniteField(index));
            }
        }
        Ok(())
    }

    // Bit-exact key for duplicate detection.
    fn key(&self) -> (u8, Vec<u64>) {
        match self {
            ConfigLabel::Opaque { id, gauge } => {
                let mut k = vec![*id];
                if let Some(g) = gauge {
                    k.push(g.to_bits());
                }
                (0, k)
            }
            ConfigLabel::Field { values, gauge } => {
                let mut k: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
                if let Some(g) = gauge {
                    k.push(u64::MAX);
                    k.push(g.to_bits());
                }
                (1, k)
            }
        }
    }
}

/// Finite configuration space: atoms with strictly positive measure weights.
///
/// Weights need not sum to one; this is a measure, not a probability.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSpace {
    atoms: Vec<ConfigLabel>,
    weights: Vec<f64>,
    total_weight: f64,
}

impl ConfigSpace {
    /// Validated constructor: equal lengths, positive finite weights,
    /// pairwise distinct atoms.
    pub fn new(labels: Vec<ConfigLabel>, weights: Vec<f64>) -> Result<Arc<Self>, SpaceError> {
        if labels.len() != weights.len() {
            return Err(SpaceError::LengthMismatch {
                left: labels.len(),
                right: weights.len(),
            });
        }
        if labels.is_empty() {
            return Err(SpaceError::Empty);
        }
        for (i, w) in weights.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(SpaceError::NonPositiveWeight {
                    index: i,
                    weight: *w,
                });
            }
        }
        let mut seen: HashMap<(u8, Vec<u64>), usize> = HashMap::with_capacity(labels.len());
        let mut field_len: Option<usize> = None;
        for (i, label) in labels.iter().enumerate() {
            label.validate(i)?;
            if let Some(values) = label.field_values() {
                match field_len {
                    None => field_len = Some(values.len()),
                    Some(expected) if expected != values.len() => {
                        return Err(SpaceError::FieldLengthMismatch {
                            index: i,
                            expected,
                            got: values.len(),
                        })
                    }
                    Some(_) => {}
                }
            }
            if let Some(first) = seen.insert(label.key(), i) {
                return Err(SpaceError::DuplicateLabel { first, second: i });
            }
        }
        Ok(Arc::new(Self::assemble(labels, weights)))
    }

    /// Uniform space of `n` opaque atoms with weight `w` each.
    pub fn uniform(n: usize, w: f64) -> Result<Arc<Self>, SpaceError> {
        Self::new((0..n as u64).map(ConfigLabel::opaque).collect(), vec![w; n])
    }

    /// Relabeling used by gauge absorption: atoms keep their identity as
    /// measure atoms, only the label decoration changes, so the duplicate
    /// check is skipped.
    pub(crate) fn relabeled(&self, labels: Vec<ConfigLabel>) -> Arc<Self> {
        debug_assert_eq!(labels.len(), self.weights.len());
        Arc::new(Self::assemble(labels, self.weights.clone()))
    }

    fn assemble(atoms: Vec<ConfigLabel>, weights: Vec<f64>) -> Self {
        let total_weight = weights.iter().sum();
        ConfigSpace {
            atoms,
            weights,
            total_weight,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn label(&self, i: usize) -> &ConfigLabel {
        &self.atoms[i]
    }

    pub fn labels(&self) -> &[ConfigLabel] {
        &self.atoms
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }
}

/// Two space handles refer to the same space if they are literally shared or
/// structurally equal.
pub fn same_space(a: &Arc<ConfigSpace>, b: &Arc<ConfigSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn validate_macro_id(id: &str) -> Result<(), SpaceError> {
    if id.is_empty()
        || id
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || c == ',' || c == '"' || c == '=')
    {
        return Err(SpaceError::InvalidMacroId(id.to_string()));
    }
    Ok(())
}

/// Disjoint partition of a space's atoms into named macrostates.
///
/// Macrostates are ordered lexicographically by id, which fixes every
/// downstream iteration order. The partition records only index structure;
/// operations that need weights take the space as a separate argument.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroPartition {
    ids: Vec<String>,
    /// atom index -> position in `ids`
    assignment: Vec<u32>,
    /// per macrostate, ascending member atom indices
    members: Vec<Vec<usize>>,
}

impl MacroPartition {
    /// Builds the partition from a per-atom assignment of macrostate ids.
    pub fn define(space: &ConfigSpace, assignment: &[&str]) -> Result<Self, SpaceError> {
        Self::define_owned(space.len(), assignment.iter().map(|s| s.to_string()))
    }

    /// As [`define`](Self::define) but from owned ids.
    pub fn define_from<I, S>(space: &ConfigSpace, assignment: I) -> Result<Self, SpaceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::define_owned(space.len(), assignment.into_iter().map(Into::into))
    }

    fn define_owned(
        atom_count: usize,
        assignment: impl Iterator<Item = String>,
    ) -> Result<Self, SpaceError> {
        let raw: Vec<String> = assignment.collect();
        if raw.len() != atom_count {
            return Err(SpaceError::LengthMismatch {
                left: atom_count,
                right: raw.len(),
            });
        }
        for id in &raw {
            validate_macro_id(id)?;
        }
        let mut ids: Vec<String> = raw.clone();
        ids.sort();
        ids.dedup();
        let index_of: HashMap<&str, u32> = ids
            .iter()
            .enumerate()
            .map(|(k, id)| (id.as_str(), k as u32))
            .collect();
        let assignment: Vec<u32> = raw.iter().map(|id| index_of[id.as_str()]).collect();
        let mut members = vec![Vec::new(); ids.len()];
        for (atom, &m) in assignment.iter().enumerate() {
            members[m as usize].push(atom);
        }
        Ok(MacroPartition {
            ids,
            assignment,
            members,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn macro_count(&self) -> usize {
        self.ids.len()
    }

    /// Macrostate ids in lexicographic order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id_of(&self, atom: usize) -> &str {
        &self.ids[self.assignment[atom] as usize]
    }

    /// Index of `atom`'s macrostate within [`ids`](Self::ids).
    pub fn macro_index_of(&self, atom: usize) -> usize {
        self.assignment[atom] as usize
    }

    pub fn macro_index(&self, id: &str) -> Result<usize, SpaceError> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .map_err(|_| SpaceError::UnknownMacrostate(id.to_string()))
    }

    /// Ascending member atom indices of macrostate `id`.
    pub fn members(&self, id: &str) -> Result<&[usize], SpaceError> {
        Ok(&self.members[self.macro_index(id)?])
    }

    pub fn members_by_index(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    /// Measure of macrostate `id`: the sum of atom weights over its members.
    pub fn macro_measure(&self, space: &ConfigSpace, id: &str) -> Result<f64, SpaceError> {
        debug_assert_eq!(space.len(), self.atom_count());
        Ok(self.members(id)?.iter().map(|&i| space.weight(i)).sum())
    }
}
