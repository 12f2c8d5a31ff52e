//! Numerical laboratory for probability-by-counting over weighted
//! configuration spaces.
//!
//! The crate models a finite configuration space of classical-field atoms
//! with a measure, complex states over it, unitary dynamics including
//! pointer-style measurement interactions and a small lattice scalar-field
//! model, and several ways of assigning probabilities to macrostates:
//!
//! * the Born weights `sum w |psi|^2` per macrostate,
//! * equal-probability-block refinements whose block counts converge to the
//!   Born weights ([`counting::build_refinement`]),
//! * rival counting schemes (uniform branch counting, component counting,
//!   unitary-orbit sampling) that provably do not converge to them,
//! * self-location sampling over sequential-measurement branch trees, with a
//!   single-world collapse simulator for statistical comparison.
//!
//! The [`harness`] module and the `ontolab` binary drive reproducible
//! experiments from flat config files and emit deterministic CSV.

pub mod configspace;
pub mod counting;
pub mod dynamics;
pub mod harness;
pub mod rng;
pub mod selflocation;
pub mod state;
pub mod stats;
pub mod textio;

pub use configspace::{ConfigLabel, ConfigSpace, MacroPartition, SpaceError};
pub use counting::{CountReport, CountingError, OvercountReport, RefinementPartition};
pub use dynamics::{
    DynamicsError, HamiltonianMatrix, LatticeModel, MeasurementSetup, MeasurementUnitary,
};
pub use selflocation::{BranchTree, FrequencyReport, Protocol, SelfLocationError};
pub use state::{FieldRep, GaugeState, StateError, StateVector};
