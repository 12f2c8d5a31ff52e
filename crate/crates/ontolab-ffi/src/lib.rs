//! C ABI for the ontolab counting laboratory.
//!
//! The surface follows the usual opaque-handle pattern: constructors return a
//! status code and write the handle through an out-pointer, every handle has
//! a matching `_free`, and all array arguments carry explicit lengths. The
//! matching declarations live in `include/ontolab.h`; the `cbindgen.toml`
//! config regenerates that header from this file.
//!
//! Handles are not synchronized; share a handle across threads only behind
//! the caller's own lock. Passing a freed or foreign pointer is undefined
//! behavior, as usual for C.

use std::ffi::{c_char, c_int};
use std::sync::Arc;

use num_complex::Complex64;

use ontolab::configspace::{ConfigSpace, MacroPartition, SpaceError};
use ontolab::counting::{self, CountingError};
use ontolab::harness::seeded_state;
use ontolab::state::{StateError, StateVector};

pub const ONTOLAB_OK: c_int = 0;
pub const ONTOLAB_ERR_NULL_ARGUMENT: c_int = 1;
pub const ONTOLAB_ERR_INVALID_ARGUMENT: c_int = 2;
pub const ONTOLAB_ERR_LENGTH_MISMATCH: c_int = 3;
pub const ONTOLAB_ERR_NOT_NORMALIZED: c_int = 4;
pub const ONTOLAB_ERR_SPACE_MISMATCH: c_int = 5;
pub const ONTOLAB_ERR_LEVEL_TOO_DEEP: c_int = 6;
pub const ONTOLAB_ERR_ZERO_STATE: c_int = 7;
pub const ONTOLAB_ERR_DIMENSION_MISMATCH: c_int = 8;
pub const ONTOLAB_ERR_INSUFFICIENT_TRIALS: c_int = 9;

/// Weighted configuration space (opaque).
pub struct OntolabSpace(Arc<ConfigSpace>);
/// Normalized state over a space (opaque).
pub struct OntolabState(StateVector);
/// Macrostate partition (opaque). Group values are the caller's `uint32_t`
/// ids; results are ordered by ascending decimal rendering of those ids.
pub struct OntolabPartition {
    partition: MacroPartition,
    groups: Vec<u32>,
}

fn space_code(err: &SpaceError) -> c_int {
    match err {
        SpaceError::LengthMismatch { .. } => ONTOLAB_ERR_LENGTH_MISMATCH,
        _ => ONTOLAB_ERR_INVALID_ARGUMENT,
    }
}

fn state_code(err: &StateError) -> c_int {
    match err {
        StateError::LengthMismatch { .. } => ONTOLAB_ERR_LENGTH_MISMATCH,
        StateError::NotNormalized { .. } => ONTOLAB_ERR_NOT_NORMALIZED,
        StateError::SpaceMismatch => ONTOLAB_ERR_SPACE_MISMATCH,
        StateError::ZeroState => ONTOLAB_ERR_ZERO_STATE,
        StateError::LabelKindMismatch(_) => ONTOLAB_ERR_INVALID_ARGUMENT,
    }
}

fn counting_code(err: &CountingError) -> c_int {
    match err {
        CountingError::LevelTooDeep { .. } => ONTOLAB_ERR_LEVEL_TOO_DEEP,
        CountingError::ZeroState => ONTOLAB_ERR_ZERO_STATE,
        CountingError::SpaceMismatch => ONTOLAB_ERR_SPACE_MISMATCH,
        CountingError::DimensionMismatch(_) | CountingError::TooFewMacrostates(_) => {
            ONTOLAB_ERR_DIMENSION_MISMATCH
        }
        CountingError::InsufficientTrials { .. } => ONTOLAB_ERR_INSUFFICIENT_TRIALS,
    }
}

/// Version string of the library; static storage, do not free.
#[no_mangle]
pub extern "C" fn ontolab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Human-readable description of a status code; static storage, do not free.
#[no_mangle]
pub extern "C" fn ontolab_error_message(code: c_int) -> *const c_char {
    let message: &'static str = match code {
        ONTOLAB_OK => "ok\0",
        ONTOLAB_ERR_NULL_ARGUMENT => "null argument\0",
        ONTOLAB_ERR_INVALID_ARGUMENT => "invalid argument\0",
        ONTOLAB_ERR_LENGTH_MISMATCH => "length mismatch\0",
        ONTOLAB_ERR_NOT_NORMALIZED => "state is not normalized\0",
        ONTOLAB_ERR_SPACE_MISMATCH => "operands belong to different spaces\0",
        ONTOLAB_ERR_LEVEL_TOO_DEEP => "refinement level exceeds cap\0",
        ONTOLAB_ERR_ZERO_STATE => "state carries no probability weight\0",
        ONTOLAB_ERR_DIMENSION_MISMATCH => "macrostate dimensions unsuitable\0",
        ONTOLAB_ERR_INSUFFICIENT_TRIALS => "too few trials\0",
        _ => "unknown status code\0",
    };
    message.as_ptr() as *const c_char
}

/// Creates a space of `len` atoms with the given positive weights.
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn ontolab_space_new(
    weights: *const f64,
    len: usize,
    out: *mut *mut OntolabSpace,
) -> c_int {
    if weights.is_null() || out.is_null() || len == 0 {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    let weights = std::slice::from_raw_parts(weights, len).to_vec();
    let labels = (0..len as u64)
        .map(ontolab::configspace::ConfigLabel::opaque)
        .collect();
    match ConfigSpace::new(labels, weights) {
        Ok(space) => {
            *out = Box::into_raw(Box::new(OntolabSpace(space)));
            ONTOLAB_OK
        }
        Err(e) => space_code(&e),
    }
}

/// # Safety
/// `space` must be a handle from [`ontolab_space_new`] not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ontolab_space_free(space: *mut OntolabSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of atoms; 0 for a null handle.
///
/// # Safety
/// `space` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ontolab_space_len(space: *const OntolabSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.len())
}

/// Total measure weight; 0 for a null handle.
///
/// # Safety
/// `space` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ontolab_space_total_weight(space: *const OntolabSpace) -> f64 {
    space.as_ref().map_or(0.0, |s| s.0.total_weight())
}

/// Creates a normalized state from split real/imaginary amplitude arrays.
/// The weighted squared norm must be 1 within 1e-8.
///
/// # Safety
/// `space` must be a live handle; `re` and `im` must point to `len`
/// readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ontolab_state_new(
    space: *const OntolabSpace,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut OntolabState,
) -> c_int {
    let Some(space) = space.as_ref() else {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    };
    if re.is_null() || im.is_null() || out.is_null() {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    let amplitudes: Vec<Complex64> = re
        .iter()
        .zip(im)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect();
    match StateVector::from_amplitudes(&space.0, amplitudes) {
        Ok(state) => {
            *out = Box::into_raw(Box::new(OntolabState(state)));
            ONTOLAB_OK
        }
        Err(e) => state_code(&e),
    }
}

/// Creates the deterministic pseudo-random normalized state for `seed`.
///
/// # Safety
/// `space` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ontolab_state_seeded(
    space: *const OntolabSpace,
    seed: u64,
    out: *mut *mut OntolabState,
) -> c_int {
    let Some(space) = space.as_ref() else {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    };
    if out.is_null() {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    *out = Box::into_raw(Box::new(OntolabState(seeded_state(&space.0, seed))));
    ONTOLAB_OK
}

/// # Safety
/// `state` must be a handle from a state constructor not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ontolab_state_free(state: *mut OntolabState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Groups atoms into macrostates by `assignment[i]`; results of later calls
/// are ordered by ascending decimal rendering of the distinct group values
/// (see [`ontolab_partition_group_at`]).
///
/// # Safety
/// `space` must be a live handle; `assignment` must point to `len` readable
/// values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ontolab_partition_new(
    space: *const OntolabSpace,
    assignment: *const u32,
    len: usize,
    out: *mut *mut OntolabPartition,
) -> c_int {
    let Some(space) = space.as_ref() else {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    };
    if assignment.is_null() || out.is_null() {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    let assignment = std::slice::from_raw_parts(assignment, len);
    let ids: Vec<String> = assignment.iter().map(|g| g.to_string()).collect();
    match MacroPartition::define_from(&space.0, ids) {
        Ok(partition) => {
            let groups = partition
                .ids()
                .iter()
                .map(|id| id.parse::<u32>().expect("ids rendered from u32"))
                .collect();
            *out = Box::into_raw(Box::new(OntolabPartition { partition, groups }));
            ONTOLAB_OK
        }
        Err(e) => space_code(&e),
    }
}

/// # Safety
/// `partition` must be a handle from [`ontolab_partition_new`] or null.
#[no_mangle]
pub unsafe extern "C" fn ontolab_partition_free(partition: *mut OntolabPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

/// Number of macrostates; 0 for a null handle.
///
/// # Safety
/// `partition` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ontolab_partition_macro_count(
    partition: *const OntolabPartition,
) -> usize {
    partition.as_ref().map_or(0, |p| p.partition.macro_count())
}

/// Group value of the macrostate at result position `index`;
/// `UINT32_MAX` when out of range.
///
/// # Safety
/// `partition` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ontolab_partition_group_at(
    partition: *const OntolabPartition,
    index: usize,
) -> u32 {
    partition
        .as_ref()
        .and_then(|p| p.groups.get(index).copied())
        .unwrap_or(u32::MAX)
}

/// Born weight per macrostate, written to `out[0..len]` in result order;
/// `len` must equal the macrostate count.
///
/// # Safety
/// All handles live; `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ontolab_born_probability(
    state: *const OntolabState,
    partition: *const OntolabPartition,
    out: *mut f64,
    len: usize,
) -> c_int {
    let (Some(state), Some(partition)) = (state.as_ref(), partition.as_ref()) else {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    };
    if out.is_null() {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    if len != partition.partition.macro_count() {
        return ONTOLAB_ERR_LENGTH_MISMATCH;
    }
    match state.0.born_probability(&partition.partition) {
        Ok(born) => {
            let out = std::slice::from_raw_parts_mut(out, len);
            for (slot, id) in out.iter_mut().zip(partition.partition.ids()) {
                *slot = born[id];
            }
            ONTOLAB_OK
        }
        Err(e) => state_code(&e),
    }
}

/// Level-`level` refinement counting: wholly-contained block counts and
/// `count / 2^level` estimates per macrostate, in result order.
///
/// # Safety
/// All handles live; `out_blocks` and `out_estimates` writable for `len`
/// entries each.
#[no_mangle]
pub unsafe extern "C" fn ontolab_count_estimate(
    state: *const OntolabState,
    partition: *const OntolabPartition,
    level: u32,
    out_blocks: *mut u64,
    out_estimates: *mut f64,
    len: usize,
) -> c_int {
    let (Some(state), Some(partition)) = (state.as_ref(), partition.as_ref()) else {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    };
    if out_blocks.is_null() || out_estimates.is_null() {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    if len != partition.partition.macro_count() {
        return ONTOLAB_ERR_LENGTH_MISMATCH;
    }
    let refinement = match counting::build_refinement(&state.0, &partition.partition, level) {
        Ok(r) => r,
        Err(e) => return counting_code(&e),
    };
    match counting::count_estimate(&refinement, &partition.partition) {
        Ok(report) => {
            let blocks = std::slice::from_raw_parts_mut(out_blocks, len);
            let estimates = std::slice::from_raw_parts_mut(out_estimates, len);
            for (i, row) in report.rows.iter().enumerate() {
                blocks[i] = row.blocks_inside;
                estimates[i] = row.estimate;
            }
            ONTOLAB_OK
        }
        Err(e) => counting_code(&e),
    }
}

/// Uniform weight over supported macrostates, in result order.
///
/// # Safety
/// All handles live; `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ontolab_naive_branch_count(
    state: *const OntolabState,
    partition: *const OntolabPartition,
    out: *mut f64,
    len: usize,
) -> c_int {
    let (Some(state), Some(partition)) = (state.as_ref(), partition.as_ref()) else {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    };
    if out.is_null() {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    if len != partition.partition.macro_count() {
        return ONTOLAB_ERR_LENGTH_MISMATCH;
    }
    match counting::naive_branch_count(&state.0, &partition.partition) {
        Ok(map) => {
            let out = std::slice::from_raw_parts_mut(out, len);
            for (slot, id) in out.iter_mut().zip(partition.partition.ids()) {
                *slot = map[id];
            }
            ONTOLAB_OK
        }
        Err(e) => counting_code(&e),
    }
}

/// Supported-atom counting per macrostate, in result order;
/// `out_uniform` reports whether all supported probability weights are equal,
/// the only case in which this scheme matches the Born weights.
///
/// # Safety
/// All handles live; `out` writable for `len` doubles; `out_uniform` writable.
#[no_mangle]
pub unsafe extern "C" fn ontolab_eigen_component_count(
    state: *const OntolabState,
    partition: *const OntolabPartition,
    out: *mut f64,
    len: usize,
    out_uniform: *mut bool,
) -> c_int {
    let (Some(state), Some(partition)) = (state.as_ref(), partition.as_ref()) else {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    };
    if out.is_null() || out_uniform.is_null() {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    if len != partition.partition.macro_count() {
        return ONTOLAB_ERR_LENGTH_MISMATCH;
    }
    match counting::eigen_component_count(&state.0, &partition.partition) {
        Ok((map, uniform)) => {
            let out = std::slice::from_raw_parts_mut(out, len);
            for (slot, id) in out.iter_mut().zip(partition.partition.ids()) {
                *slot = map[id];
            }
            *out_uniform = uniform;
            ONTOLAB_OK
        }
        Err(e) => counting_code(&e),
    }
}

/// Monte Carlo weights induced by uniform sampling on the unitary orbits of
/// the branch components, with standard errors, in result order. Requires at
/// least two supported macrostates of equal dimension and at least 100
/// trials.
///
/// # Safety
/// All handles live; `out_weights` and `out_stderr` writable for `len`
/// doubles each.
#[no_mangle]
pub unsafe extern "C" fn ontolab_orbit_overcount(
    state: *const OntolabState,
    partition: *const OntolabPartition,
    trials: u64,
    seed: u64,
    out_weights: *mut f64,
    out_stderr: *mut f64,
    len: usize,
) -> c_int {
    let (Some(state), Some(partition)) = (state.as_ref(), partition.as_ref()) else {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    };
    if out_weights.is_null() || out_stderr.is_null() {
        return ONTOLAB_ERR_NULL_ARGUMENT;
    }
    if len != partition.partition.macro_count() {
        return ONTOLAB_ERR_LENGTH_MISMATCH;
    }
    match counting::orbit_overcount_demo(&state.0, &partition.partition, trials, seed) {
        Ok(report) => {
            let weights = std::slice::from_raw_parts_mut(out_weights, len);
            let stderrs = std::slice::from_raw_parts_mut(out_stderr, len);
            for (i, row) in report.rows.iter().enumerate() {
                weights[i] = row.orbit_weight;
                stderrs[i] = row.stderr;
            }
            ONTOLAB_OK
        }
        Err(e) => counting_code(&e),
    }
}
