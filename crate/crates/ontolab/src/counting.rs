//! Counting schemes for macrostate probabilities.
//!
//! The central construction is the equal-weight block refinement: the atoms,
//! ordered and grouped by macrostate, are laid out on the unit interval in
//! cumulative probability-weight coordinates and cut into `2^n` blocks of
//! weight exactly `2^-n` of the total, splitting atoms fractionally at block
//! boundaries. Counting the blocks that fall wholly inside a macrostate and
//! dividing by `2^n` converges to that macrostate's Born weight as the level
//! grows, with deviation bounded by `(macrostates + 1) * 2^-n`.
//!
//! Alongside it live the schemes that do not converge to the Born weights:
//! uniform counting over supported macrostates, counting supported atoms per
//! macrostate, and Monte Carlo weights induced by the rotation-invariant
//! measure on the unitary orbits of branch components, which are blind to the
//! component norms by symmetry.
//!
//! Representation note: a [`RefinementPartition`] stores the cumulative
//! boundary layout, not materialized blocks. Block boundaries are the exact
//! dyadic fractions `k * 2^-n`, so level `n+1` boundaries contain the level
//! `n` ones bit-for-bit and nesting is exact by construction. Individual
//! blocks are enumerated on demand.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::configspace::MacroPartition;
use crate::rng;
use crate::state::StateVector;

/// Deepest refinement level accepted; keeps every dyadic boundary exact.
pub const LEVEL_CAP: u32 = 30;
/// Component-norm threshold below which a macrostate counts as unsupported.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Accepted deviation when verifying block weights and fraction sums.
pub const BLOCK_WEIGHT_TOL: f64 = 1e-10;

const ORBIT_DOMAIN: u32 = 3;
const MIN_ORBIT_TRIALS: u64 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum CountingError {
    #[error("refinement level {level} exceeds cap {cap}")]
    LevelTooDeep { level: u32, cap: u32 },
    #[error("state carries no probability weight")]
    ZeroState,
    #[error("refinement and partition disagree about the space")]
    SpaceMismatch,
    #[error("macrostate dimensions {0:?} are not all equal")]
    DimensionMismatch(Vec<usize>),
    #[error("need at least two supported macrostates, found {0}")]
    TooFewMacrostates(usize),
    #[error("{got} trials given, at least {minimum} required")]
    InsufficientTrials { got: u64, minimum: u64 },
}

/// Level-`n` partition of the state's probability weight into `2^n` blocks of
/// equal weight, grouped so that blocks respect macrostate boundaries as far
/// as the dyadic grid allows.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementPartition {
    level: u32,
    /// Atom indices ordered by (macrostate id, atom index).
    order: Vec<usize>,
    /// Probability weight per ordered position, original units.
    prob: Vec<f64>,
    /// Normalized cumulative boundaries; `cum[0] = 0`, `cum[len] = 1`.
    cum: Vec<f64>,
    total_prob: f64,
    /// Macrostate index per ordered position.
    macro_of: Vec<u32>,
    /// Contiguous run `[start, end)` of ordered positions per macrostate.
    runs: Vec<(usize, usize)>,
    /// Snapshot identifying the partition the refinement was built from.
    macro_ids: Vec<String>,
    assignment: Vec<u32>,
}

/// Builds the level-`n` refinement of `psi` grouped by `partition`.
pub fn build_refinement(
    psi: &StateVector,
    partition: &MacroPartition,
    level: u32,
) -> Result<RefinementPartition, CountingError> {
    if level > LEVEL_CAP {
        return Err(CountingError::LevelTooDeep {
            level,
            cap: LEVEL_CAP,
        });
    }
    if partition.atom_count() != psi.len() {
        return Err(CountingError::SpaceMismatch);
    }
    let m = psi.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (partition.macro_index_of(i), i));
    let prob: Vec<f64> = order.iter().map(|&i| psi.probability_weight(i)).collect();
    let total_prob: f64 = prob.iter().sum();
    if total_prob <= 0.0 || total_prob.is_nan() {
        return Err(CountingError::ZeroState);
    }
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for &p in &prob {
        acc += p;
        cum.push(acc / total_prob);
    }
    cum[m] = 1.0;
    let macro_of: Vec<u32> = order
        .iter()
        .map(|&i| partition.macro_index_of(i) as u32)
        .collect();
    let mut runs = Vec::with_capacity(partition.macro_count());
    let mut start = 0;
    for a in 0..partition.macro_count() as u32 {
        let end = start + macro_of[start..].iter().take_while(|&&x| x == a).count();
        runs.push((start, end));
        start = end;
    }
    debug_assert_eq!(start, m);
    Ok(RefinementPartition {
        level,
        order,
        prob,
        cum,
        total_prob,
        macro_of,
        runs,
        macro_ids: partition.ids().to_vec(),
        assignment: (0..m).map(|i| partition.macro_index_of(i) as u32).collect(),
    })
}

impl RefinementPartition {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn block_count(&self) -> u64 {
        1u64 << self.level
    }

    /// Target probability weight of every block, `2^-n` of the total.
    pub fn block_weight(&self) -> f64 {
        self.total_prob / self.block_count() as f64
    }

    pub fn atom_count(&self) -> usize {
        self.order.len()
    }

    pub fn total_probability_weight(&self) -> f64 {
        self.total_prob
    }

    fn width(&self) -> f64 {
        1.0 / self.block_count() as f64
    }

    fn boundary(&self, k: u64) -> f64 {
        if k == self.block_count() {
            1.0
        } else {
            k as f64 * self.width()
        }
    }

    /// Block that owns the zero-width atom at ordered position `j`.
    fn assigned_block(&self, j: usize) -> u64 {
        let scaled = self.cum[j] * self.block_count() as f64;
        (scaled.floor() as u64).min(self.block_count() - 1)
    }

    /// Entries of block `k` as `(ordered position, fraction)` pairs, appended
    /// to `out`. A fraction is the share of the atom's probability weight
    /// that falls in this block; zero-weight atoms appear with fraction 1 in
    /// the single block that owns their cumulative position.
    fn block_entries_pos(&self, k: u64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let uk = self.boundary(k);
        let j0 = self.cum.partition_point(|&c| c < uk);
        // cum has m+1 boundaries; position j spans [cum[j], cum[j+1]].
        let start = j0.saturating_sub(1);
        self.scan_block(k, start, out);
    }

    fn scan_block(&self, k: u64, start: usize, out: &mut Vec<(usize, f64)>) -> usize {
        let uk = self.boundary(k);
        let uk1 = self.boundary(k + 1);
        let m = self.order.len();
        let mut consumed = start;
        let mut j = start;
        while j < m {
            let lo = self.cum[j];
            let hi = self.cum[j + 1];
            if hi == lo {
                let kz = self.assigned_block(j);
                if kz > k {
                    break;
                }
                if kz == k {
                    out.push((j, 1.0));
                }
                j += 1;
                consumed = j;
                continue;
            }
            if hi <= uk {
                j += 1;
                consumed = j;
                continue;
            }
            if lo >= uk1 {
                break;
            }
            let overlap = hi.min(uk1) - lo.max(uk);
            if overlap > 0.0 {
                out.push((j, overlap / (hi - lo)));
            }
            if hi <= uk1 {
                j += 1;
                consumed = j;
            } else {
                break;
            }
        }
        consumed
    }

    /// Entries of block `k` as `(atom index, fraction)` pairs.
    pub fn block_entries(&self, k: u64) -> Vec<(usize, f64)> {
        let mut pos = Vec::new();
        self.block_entries_pos(k, &mut pos);
        pos.into_iter().map(|(j, f)| (self.order[j], f)).collect()
    }

    /// Visits every block in order with its `(ordered position, fraction)`
    /// entries, reusing one scratch buffer.
    pub(crate) fn sweep_blocks(&self, mut f: impl FnMut(u64, &[(usize, f64)])) {
        let mut scratch = Vec::new();
        let mut start = 0usize;
        for k in 0..self.block_count() {
            scratch.clear();
            start = self.scan_block(k, start, &mut scratch);
            f(k, &scratch);
        }
    }

    /// Largest deviation of any block's probability weight from `2^-n` of
    /// the total.
    pub fn verify_block_weights(&self) -> f64 {
        let target = self.block_weight();
        let mut worst = 0.0f64;
        self.sweep_blocks(|_, entries| {
            let w: f64 = entries.iter().map(|&(j, frac)| frac * self.prob[j]).sum();
            worst = worst.max((w - target).abs());
        });
        worst
    }

    /// Largest deviation of any atom's fraction total from 1.
    pub fn verify_fraction_sums(&self) -> f64 {
        let mut sums = vec![0.0f64; self.order.len()];
        self.sweep_blocks(|_, entries| {
            for &(j, frac) in entries {
                sums[j] += frac;
            }
        });
        sums.into_iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Block-weight and fraction-sum deviations in a single sweep:
    /// `(max block-weight deviation, max fraction-sum deviation)`.
    pub fn verify_structure(&self) -> (f64, f64) {
        let target = self.block_weight();
        let mut worst_weight = 0.0f64;
        let mut sums = vec![0.0f64; self.order.len()];
        self.sweep_blocks(|_, entries| {
            let mut w = 0.0;
            for &(j, frac) in entries {
                w += frac * self.prob[j];
                sums[j] += frac;
            }
            worst_weight = worst_weight.max((w - target).abs());
        });
        let worst_fraction = sums
            .into_iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max);
        (worst_weight, worst_fraction)
    }

    /// Checks that `self` (level `n+1`) refines `coarse` (level `n`): built
    /// from the same layout, every fine block's atoms contained in exactly
    /// the coarse block at half its index, and the coarse fractions recovered
    /// as sums of fine fractions within `tol`.
    pub fn nests_in(&self, coarse: &RefinementPartition, tol: f64) -> bool {
        if self.level != coarse.level + 1
            || self.order != coarse.order
            || self.cum != coarse.cum
            || self.prob != coarse.prob
        {
            return false;
        }
        let mut fine = Vec::new();
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        let mut coarse_entries = Vec::new();
        let mut fine_start = 0usize;
        let mut coarse_start = 0usize;
        for k in 0..coarse.block_count() {
            merged.clear();
            for half in 0..2 {
                fine.clear();
                fine_start = self.scan_block(2 * k + half, fine_start, &mut fine);
                for &(j, frac) in &fine {
                    *merged.entry(j).or_insert(0.0) += frac;
                }
            }
            coarse_entries.clear();
            coarse_start = coarse.scan_block(k, coarse_start, &mut coarse_entries);
            if merged.len() != coarse_entries.len() {
                return false;
            }
            for (&(j, frac), (&jm, &fm)) in coarse_entries.iter().zip(merged.iter()) {
                if j != jm || (frac - fm).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Born weight of each macrostate from the stored layout.
    pub fn born_by_macro(&self) -> Vec<f64> {
        self.runs
            .iter()
            .map(|&(s, e)| self.prob[s..e].iter().sum::<f64>() / self.total_prob)
            .collect()
    }
}

/// Per-macrostate outcome of counting blocks at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRow {
    pub macrostate: String,
    /// Blocks wholly inside this macrostate.
    pub blocks_inside: u64,
    /// `blocks_inside / 2^n`.
    pub estimate: f64,
    /// Born reference weight.
    pub born: f64,
    pub deviation: f64,
}

/// Counting report at one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub level: u32,
    pub rows: Vec<CountRow>,
    pub max_abs_deviation: f64,
    /// `(macrostates + 1) * 2^-n`.
    pub deviation_bound: f64,
    pub within_bound: bool,
}

/// Counts, for every macrostate, the blocks of `refinement` whose members all
/// belong to it, and compares the `count / 2^n` estimates with the Born
/// weights.
pub fn count_estimate(
    refinement: &RefinementPartition,
    partition: &MacroPartition,
) -> Result<CountReport, CountingError> {
    if partition.ids() != refinement.macro_ids.as_slice()
        || partition.atom_count() != refinement.assignment.len()
        || (0..partition.atom_count())
            .any(|i| partition.macro_index_of(i) as u32 != refinement.assignment[i])
    {
        return Err(CountingError::SpaceMismatch);
    }
    let scale = refinement.block_count() as f64;
    // Wholly-inside block ranges per macrostate from interval arithmetic:
    // block k lies inside [a, b) iff k >= a*2^n and k+1 <= b*2^n. Both
    // products are exact (power-of-two scaling).
    let ranges: Vec<(u64, u64)> = refinement
        .runs
        .iter()
        .map(|&(s, e)| {
            let lo = (refinement.cum[s] * scale).ceil() as u64;
            let hi = (refinement.cum[e] * scale).floor() as u64;
            (lo, hi.max(lo))
        })
        .collect();
    let mut counts: Vec<u64> = ranges.iter().map(|&(lo, hi)| hi - lo).collect();
    // Zero-weight atoms belong to the block at their cumulative position; a
    // foreign zero atom disqualifies an otherwise wholly-inside block.
    let mut polluted: BTreeMap<u64, usize> = BTreeMap::new();
    for j in 0..refinement.order.len() {
        if refinement.cum[j + 1] > refinement.cum[j] {
            continue;
        }
        let k = refinement.assigned_block(j);
        let owner = ranges.iter().position(|&(lo, hi)| k >= lo && k < hi);
        if let Some(a) = owner {
            if refinement.macro_of[j] as usize != a {
                polluted.insert(k, a);
            }
        }
    }
    for (_, a) in polluted {
        counts[a] -= 1;
    }
    let born = refinement.born_by_macro();
    let mut rows = Vec::with_capacity(counts.len());
    let mut max_abs_deviation = 0.0f64;
    for (a, id) in refinement.macro_ids.iter().enumerate() {
        let estimate = counts[a] as f64 / scale;
        let deviation = (estimate - born[a]).abs();
        max_abs_deviation = max_abs_deviation.max(deviation);
        rows.push(CountRow {
            macrostate: id.clone(),
            blocks_inside: counts[a],
            estimate,
            born: born[a],
            deviation,
        });
    }
    debug_assert!(rows.iter().map(|r| r.blocks_inside).sum::<u64>() <= refinement.block_count());
    let deviation_bound = (refinement.macro_ids.len() as f64 + 1.0) / scale;
    Ok(CountReport {
        level: refinement.level,
        rows,
        max_abs_deviation,
        deviation_bound,
        within_bound: max_abs_deviation <= deviation_bound,
    })
}

/// Uniform weight over every macrostate whose component norm exceeds
/// `norm_threshold`; zero elsewhere.
pub fn naive_branch_count_with_threshold(
    psi: &StateVector,
    partition: &MacroPartition,
    norm_threshold: f64,
) -> Result<BTreeMap<String, f64>, CountingError> {
    if partition.atom_count() != psi.len() {
        return Err(CountingError::SpaceMismatch);
    }
    let born = psi
        .born_probability(partition)
        .map_err(|_| CountingError::SpaceMismatch)?;
    let supported: Vec<&String> = partition
        .ids()
        .iter()
        .filter(|id| born[*id].sqrt() > norm_threshold)
        .collect();
    if supported.is_empty() {
        return Err(CountingError::ZeroState);
    }
    let share = 1.0 / supported.len() as f64;
    Ok(partition
        .ids()
        .iter()
        .map(|id| {
            let p = if born[id].sqrt() > norm_threshold {
                share
            } else {
                0.0
            };
            (id.clone(), p)
        })
        .collect())
}

/// [`naive_branch_count_with_threshold`] at the default
/// [`SUPPORT_THRESHOLD`].
pub fn naive_branch_count(
    psi: &StateVector,
    partition: &MacroPartition,
) -> Result<BTreeMap<String, f64>, CountingError> {
    naive_branch_count_with_threshold(psi, partition, SUPPORT_THRESHOLD)
}

/// Counts supported atoms per macrostate, normalized by the total number of
/// supported atoms. The flag is true exactly when all supported probability
/// weights are equal within `1e-10`, the only case in which this scheme
/// reproduces the Born weights.
pub fn eigen_component_count(
    psi: &StateVector,
    partition: &MacroPartition,
) -> Result<(BTreeMap<String, f64>, bool), CountingError> {
    if partition.atom_count() != psi.len() {
        return Err(CountingError::SpaceMismatch);
    }
    let mut counts: BTreeMap<String, u64> =
        partition.ids().iter().map(|id| (id.clone(), 0)).collect();
    let mut total = 0u64;
    let mut min_w = f64::INFINITY;
    let mut max_w = f64::NEG_INFINITY;
    for i in 0..psi.len() {
        if psi.amplitude(i).norm() <= SUPPORT_THRESHOLD {
            continue;
        }
        *counts.get_mut(partition.id_of(i)).expect("id present") += 1;
        total += 1;
        let w = psi.probability_weight(i);
        min_w = min_w.min(w);
        max_w = max_w.max(w);
    }
    if total == 0 {
        return Err(CountingError::ZeroState);
    }
    let uniform = max_w - min_w <= 1e-10;
    let map = counts
        .into_iter()
        .map(|(id, c)| (id, c as f64 / total as f64))
        .collect();
    Ok((map, uniform))
}

/// One macrostate's outcome in an orbit-sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct OvercountRow {
    pub macrostate: String,
    /// Subspace dimension (member atoms).
    pub dim: usize,
    /// Monte Carlo weight induced by uniform orbit sampling.
    pub orbit_weight: f64,
    pub stderr: f64,
    /// Mean squared overlap of sampled vectors with the component direction;
    /// expectation `1/dim` regardless of the component norm.
    pub mean_overlap: f64,
    pub born: f64,
}

/// Result of [`orbit_overcount_demo`].
#[derive(Debug, Clone, PartialEq)]
pub struct OvercountReport {
    pub rows: Vec<OvercountRow>,
    pub trials: u64,
    pub seed: u64,
}

/// Samples unit vectors uniformly from the unitary orbit of each supported
/// branch component and weighs macrostates by the sampled overlap statistics.
///
/// The rotation-invariant measure on the orbit sphere knows only the subspace
/// dimension, so with equal dimensions the weights come out equal regardless
/// of the component norms; the run demonstrates that numerically. Macrostates
/// with unequal dimensions are rejected as inconclusive.
pub fn orbit_overcount_demo(
    psi: &StateVector,
    partition: &MacroPartition,
    trials: u64,
    seed: u64,
) -> Result<OvercountReport, CountingError> {
    if partition.atom_count() != psi.len() {
        return Err(CountingError::SpaceMismatch);
    }
    if trials < MIN_ORBIT_TRIALS {
        return Err(CountingError::InsufficientTrials {
            got: trials,
            minimum: MIN_ORBIT_TRIALS,
        });
    }
    let born = psi
        .born_probability(partition)
        .map_err(|_| CountingError::SpaceMismatch)?;
    let space = psi.space();
    // Components in orthonormal coordinates of the weighted inner product.
    let mut active: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (a, id) in partition.ids().iter().enumerate() {
        if born[id].sqrt() <= SUPPORT_THRESHOLD {
            continue;
        }
        let members = partition.members_by_index(a);
        let mut direction: Vec<Complex64> = members
            .iter()
            .map(|&i| psi.amplitude(i) * space.weight(i).sqrt())
            .collect();
        let norm = direction.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut direction {
            *z /= norm;
        }
        active.push((a, direction));
    }
    if active.len() < 2 {
        return Err(CountingError::TooFewMacrostates(active.len()));
    }
    let dims: Vec<usize> = active.iter().map(|(_, d)| d.len()).collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(CountingError::DimensionMismatch(dims));
    }
    let mut weight_mean = vec![0.0f64; active.len()];
    let mut weight_m2 = vec![0.0f64; active.len()];
    let mut overlap_sum = vec![0.0f64; active.len()];
    let mut overlaps = vec![0.0f64; active.len()];
    for t in 0..trials {
        let mut rng = rng::trial_stream(seed, ORBIT_DOMAIN, t as u32);
        for (slot, (_, direction)) in active.iter().enumerate() {
            let mut dot = Complex64::ZERO;
            let mut norm_sq = 0.0;
            for d in direction {
                let g = rng::complex_gaussian(&mut rng);
                norm_sq += g.norm_sqr();
                dot += d.conj() * g;
            }
            let s = dot.norm_sqr() / norm_sq;
            overlaps[slot] = s;
            overlap_sum[slot] += s;
        }
        let denom: f64 = overlaps.iter().zip(&dims).map(|(s, &d)| s * d as f64).sum();
        for slot in 0..active.len() {
            let w = overlaps[slot] * dims[slot] as f64 / denom;
            let count = (t + 1) as f64;
            let delta = w - weight_mean[slot];
            weight_mean[slot] += delta / count;
            weight_m2[slot] += delta * (w - weight_mean[slot]);
        }
    }
    let mut rows = Vec::with_capacity(partition.macro_count());
    for (a, id) in partition.ids().iter().enumerate() {
        let slot = active.iter().position(|&(idx, _)| idx == a);
        let row = match slot {
            Some(slot) => {
                let variance = weight_m2[slot] / (trials.saturating_sub(1).max(1)) as f64;
                OvercountRow {
                    macrostate: id.clone(),
                    dim: dims[slot],
                    orbit_weight: weight_mean[slot],
                    stderr: (variance / trials as f64).sqrt(),
                    mean_overlap: overlap_sum[slot] / trials as f64,
                    born: born[id],
                }
            }
            None => OvercountRow {
                macrostate: id.clone(),
                dim: partition.members_by_index(a).len(),
                orbit_weight: 0.0,
                stderr: 0.0,
                mean_overlap: 0.0,
                born: born[id],
            },
        };
        rows.push(row);
    }
    Ok(OvercountReport { rows, trials, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::{ConfigLabel, ConfigSpace};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn state_from_probs(probs: &[f64]) -> (StateVector, Arc<ConfigSpace>) {
        let space = ConfigSpace::uniform(probs.len(), 1.0).unwrap();
        let total: f64 = probs.iter().sum();
        let amps: Vec<Complex64> = probs
            .iter()
            .map(|p| Complex64::new((p / total).sqrt(), 0.0))
            .collect();
        let psi = StateVector::from_amplitudes(&space, amps).unwrap();
        (psi, space)
    }

    #[test]
    fn half_half_level_one_is_whole_atoms() {
        let (psi, space) = state_from_probs(&[0.5, 0.5]);
        let part = MacroPartition::define(&space, &["A", "B"]).unwrap();
        let r = build_refinement(&psi, &part, 1).unwrap();
        assert_eq!(r.block_entries(0), vec![(0, 1.0)]);
        assert_eq!(r.block_entries(1), vec![(1, 1.0)]);
    }

    /// Independent oracle: per-block interval intersection computed from
    /// scratch, no shared code with the production sweep.
    fn interval_oracle(probs: &[f64], level: u32) -> Vec<Vec<(usize, f64)>> {
        let total: f64 = probs.iter().sum();
        let mut cum = vec![0.0];
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cum.push(acc / total);
        }
        *cum.last_mut().unwrap() = 1.0;
        let blocks = 1u64 << level;
        let width = 1.0 / blocks as f64;
        (0..blocks)
            .map(|k| {
                let (uk, uk1) = (k as f64 * width, (k + 1) as f64 * width);
                let mut entries = Vec::new();
                for j in 0..probs.len() {
                    let (lo, hi) = (cum[j], cum[j + 1]);
                    if hi == lo {
                        let owner = ((lo * blocks as f64).floor() as u64).min(blocks - 1);
                        if owner == k {
                            entries.push((j, 1.0));
                        }
                        continue;
                    }
                    let overlap = hi.min(uk1) - lo.max(uk);
                    if overlap > 0.0 {
                        entries.push((j, overlap / (hi - lo)));
                    }
                }
                entries
            })
            .collect()
    }

    #[test]
    fn split_fractions_match_cumulative_oracle() {
        // Boundaries at 0.25 / 0.5 / 0.75 over weights [0.5, 0.3, 0.2]:
        // the middle atom splits 5/6 + 1/6 across blocks 2 and 3. In f64
        // the weights sum one ulp above 1, so a sliver of atom 0 on the
        // order of 1e-16 can leak across the 0.5 boundary; the oracle
        // reproduces that exactly and the headline fractions hold at 1e-12.
        let (psi, space) = state_from_probs(&[0.5, 0.3, 0.2]);
        let part = MacroPartition::define(&space, &["A", "A", "A"]).unwrap();
        let r = build_refinement(&psi, &part, 2).unwrap();
        let probs: Vec<f64> = (0..3).map(|i| psi.probability_weight(i)).collect();
        let oracle = interval_oracle(&probs, 2);
        for (k, want) in oracle.iter().enumerate() {
            assert_eq!(&r.block_entries(k as u64), want, "block {k}");
        }
        let headline: Vec<Vec<(usize, f64)>> = oracle
            .iter()
            .map(|b| b.iter().copied().filter(|&(_, f)| f > 1e-13).collect())
            .collect();
        let expect: Vec<Vec<(usize, f64)>> = vec![
            vec![(0, 0.5)],
            vec![(0, 0.5)],
            vec![(1, 5.0 / 6.0)],
            vec![(1, 1.0 / 6.0), (2, 1.0)],
        ];
        for (k, (got, want)) in headline.iter().zip(&expect).enumerate() {
            assert_eq!(got.len(), want.len(), "block {k}: {got:?}");
            for (g, w) in got.iter().zip(want) {
                assert_eq!(g.0, w.0, "block {k}");
                assert!((g.1 - w.1).abs() < 1e-12, "block {k}: {got:?}");
            }
        }
        assert!(r.verify_block_weights() <= BLOCK_WEIGHT_TOL);
        assert!(r.verify_fraction_sums() <= BLOCK_WEIGHT_TOL);
    }

    #[test]
    fn level_three_nests_in_level_two() {
        let (psi, space) = state_from_probs(&[0.4, 0.1, 0.2, 0.3]);
        let part = MacroPartition::define(&space, &["A", "A", "B", "B"]).unwrap();
        let coarse = build_refinement(&psi, &part, 2).unwrap();
        let fine = build_refinement(&psi, &part, 3).unwrap();
        assert!(fine.nests_in(&coarse, 1e-12));
        assert!(!coarse.nests_in(&fine, 1e-12));
    }

    #[test]
    fn level_cap_enforced() {
        let (psi, space) = state_from_probs(&[0.5, 0.5]);
        let part = MacroPartition::define(&space, &["A", "B"]).unwrap();
        assert!(matches!(
            build_refinement(&psi, &part, LEVEL_CAP + 1),
            Err(CountingError::LevelTooDeep { .. })
        ));
    }

    #[test]
    fn uniform_eight_counts_exactly() {
        let (psi, space) = state_from_probs(&[1.0; 8]);
        let part =
            MacroPartition::define(&space, &["A", "A", "A", "B", "B", "B", "B", "B"]).unwrap();
        let r = build_refinement(&psi, &part, 3).unwrap();
        let report = count_estimate(&r, &part).unwrap();
        let a = &report.rows[0];
        assert_eq!(a.macrostate, "A");
        assert_eq!(a.blocks_inside, 3);
        assert_eq!(a.estimate, 0.375);
        assert!(a.deviation < 1e-15);
    }

    #[test]
    fn ninety_ten_level_ten_bound() {
        let (psi, space) = state_from_probs(&[0.9, 0.1]);
        let part = MacroPartition::define(&space, &["A", "B"]).unwrap();
        let r = build_refinement(&psi, &part, 10).unwrap();
        let report = count_estimate(&r, &part).unwrap();
        let est_a = report.rows[0].estimate;
        assert!((est_a - 0.9).abs() <= 2.0 / 1024.0, "estimate {est_a}");
        assert!(report.within_bound);
    }

    #[test]
    fn count_rejects_foreign_partition() {
        let (psi, space) = state_from_probs(&[0.5, 0.5]);
        let part = MacroPartition::define(&space, &["A", "B"]).unwrap();
        let other = MacroPartition::define(&space, &["B", "A"]).unwrap();
        let r = build_refinement(&psi, &part, 2).unwrap();
        assert!(matches!(
            count_estimate(&r, &other),
            Err(CountingError::SpaceMismatch)
        ));
    }

    #[test]
    fn zero_weight_atoms_get_one_block() {
        let space = ConfigSpace::uniform(4, 1.0).unwrap();
        let amps = vec![
            Complex64::new(0.6f64.sqrt(), 0.0),
            Complex64::ZERO,
            Complex64::new(0.4f64.sqrt(), 0.0),
            Complex64::ZERO,
        ];
        let psi = StateVector::from_amplitudes(&space, amps).unwrap();
        let part = MacroPartition::define(&space, &["A", "A", "B", "B"]).unwrap();
        let r = build_refinement(&psi, &part, 2).unwrap();
        assert!(r.verify_fraction_sums() <= 1e-12);
        let mut appearances = [0u32; 4];
        for k in 0..r.block_count() {
            for (atom, frac) in r.block_entries(k) {
                if psi.probability_weight(atom) == 0.0 {
                    appearances[atom] += 1;
                    assert_eq!(frac, 1.0);
                }
            }
        }
        assert_eq!(appearances[1], 1);
        assert_eq!(appearances[3], 1);
        let report = count_estimate(&r, &part).unwrap();
        assert!(report.within_bound);
    }

    #[test]
    fn naive_branch_count_examples() {
        let (psi, space) = state_from_probs(&[0.9, 0.1]);
        let part = MacroPartition::define(&space, &["A", "B"]).unwrap();
        let naive = naive_branch_count(&psi, &part).unwrap();
        assert_eq!(naive["A"], 0.5);
        assert_eq!(naive["B"], 0.5);

        let space3 = ConfigSpace::uniform(3, 1.0).unwrap();
        let amps = vec![
            Complex64::new(0.5f64.sqrt(), 0.0),
            Complex64::new(0.5f64.sqrt(), 0.0),
            Complex64::ZERO,
        ];
        let psi3 = StateVector::from_amplitudes(&space3, amps).unwrap();
        let part3 = MacroPartition::define(&space3, &["A", "B", "C"]).unwrap();
        let naive3 = naive_branch_count(&psi3, &part3).unwrap();
        assert_eq!(naive3["A"], 0.5);
        assert_eq!(naive3["B"], 0.5);
        assert_eq!(naive3["C"], 0.0);
    }

    #[test]
    fn naive_matches_born_only_in_uniform_case() {
        let (psi, space) = state_from_probs(&[1.0; 4]);
        let part = MacroPartition::define(&space, &["A", "A", "B", "B"]).unwrap();
        let naive = naive_branch_count(&psi, &part).unwrap();
        let born = psi.born_probability(&part).unwrap();
        for id in part.ids() {
            assert!((naive[id] - born[id]).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_component_count_uniform_flag() {
        let (psi, space) = state_from_probs(&[1.0; 4]);
        let part = MacroPartition::define(&space, &["J", "J", "J", "K"]).unwrap();
        let (counts, uniform) = eigen_component_count(&psi, &part).unwrap();
        assert!(uniform);
        assert_eq!(counts["J"], 0.75);
        assert_eq!(counts["K"], 0.25);
        let born = psi.born_probability(&part).unwrap();
        for id in part.ids() {
            assert!((counts[id] - born[id]).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_component_count_nonuniform_counterexample() {
        let (psi, space) = state_from_probs(&[0.9, 0.1]);
        let part = MacroPartition::define(&space, &["A", "B"]).unwrap();
        let (counts, uniform) = eigen_component_count(&psi, &part).unwrap();
        assert!(!uniform);
        assert_eq!(counts["A"], 0.5);
        assert_eq!(counts["B"], 0.5);
    }

    #[test]
    fn eigen_component_count_single_atom() {
        let space = ConfigSpace::uniform(3, 1.0).unwrap();
        let amps = vec![Complex64::ZERO, Complex64::ONE, Complex64::ZERO];
        let psi = StateVector::from_amplitudes(&space, amps).unwrap();
        let part = MacroPartition::define(&space, &["A", "B", "C"]).unwrap();
        let (counts, uniform) = eigen_component_count(&psi, &part).unwrap();
        assert!(uniform);
        assert_eq!(counts["B"], 1.0);
        assert_eq!(counts["A"], 0.0);
    }

    fn orbit_state(dims: (usize, usize), borns: (f64, f64)) -> (StateVector, MacroPartition) {
        let n = dims.0 + dims.1;
        let space = ConfigSpace::uniform(n, 1.0).unwrap();
        let mut amps = vec![Complex64::ZERO; n];
        amps[0] = Complex64::new(borns.0.sqrt(), 0.0);
        amps[dims.0] = Complex64::new(borns.1.sqrt(), 0.0);
        let psi = StateVector::from_amplitudes(&space, amps).unwrap();
        let ids: Vec<&str> = (0..n).map(|i| if i < dims.0 { "A" } else { "B" }).collect();
        let part = MacroPartition::define(&space, &ids).unwrap();
        (psi, part)
    }

    #[test]
    fn orbit_demo_symmetric_case_matches_born() {
        let (psi, part) = orbit_state((3, 3), (0.5, 0.5));
        let report = orbit_overcount_demo(&psi, &part, 2_000, 7).unwrap();
        for row in &report.rows {
            assert!((row.orbit_weight - 0.5).abs() < 0.05, "{row:?}");
        }
    }

    #[test]
    fn orbit_demo_is_deterministic() {
        let (psi, part) = orbit_state((4, 4), (0.9, 0.1));
        let a = orbit_overcount_demo(&psi, &part, 500, 99).unwrap();
        let b = orbit_overcount_demo(&psi, &part, 500, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn orbit_demo_rejects_unequal_dims_and_few_trials() {
        let (psi, part) = orbit_state((4, 4), (0.9, 0.1));
        assert!(matches!(
            orbit_overcount_demo(&psi, &part, 10, 1),
            Err(CountingError::InsufficientTrials { .. })
        ));
        let space = ConfigSpace::uniform(5, 1.0).unwrap();
        let mut amps = vec![Complex64::ZERO; 5];
        amps[0] = Complex64::new(0.5f64.sqrt(), 0.0);
        amps[2] = Complex64::new(0.5f64.sqrt(), 0.0);
        let psi = StateVector::from_amplitudes(&space, amps).unwrap();
        let part = MacroPartition::define(&space, &["A", "A", "B", "B", "B"]).unwrap();
        assert!(matches!(
            orbit_overcount_demo(&psi, &part, 500, 1),
            Err(CountingError::DimensionMismatch(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn refinement_properties_hold(
            seed in 0u64..5_000,
            level in 0u32..12,
            atoms in 2usize..24,
            macros in 1usize..5,
        ) {
            let space = ConfigSpace::uniform(atoms, 1.0).unwrap();
            let psi = crate::harness::seeded_state(&space, seed);
            let ids: Vec<String> = (0..atoms).map(|i| format!("m{}", i % macros)).collect();
            let part = MacroPartition::define_from(&space, ids).unwrap();
            let r = build_refinement(&psi, &part, level).unwrap();
            prop_assert!(r.verify_block_weights() <= BLOCK_WEIGHT_TOL);
            prop_assert!(r.verify_fraction_sums() <= BLOCK_WEIGHT_TOL);
            let report = count_estimate(&r, &part).unwrap();
            prop_assert!(report.within_bound,
                "deviation {} beyond {}", report.max_abs_deviation, report.deviation_bound);
            let total: u64 = report.rows.iter().map(|row| row.blocks_inside).sum();
            prop_assert!(total <= r.block_count());
            for row in &report.rows {
                prop_assert!((0.0..=1.0).contains(&row.estimate));
            }
            if level > 0 {
                let coarse = build_refinement(&psi, &part, level - 1).unwrap();
                prop_assert!(r.nests_in(&coarse, 1e-12));
            }
        }

        #[test]
        fn naive_counting_depends_only_on_support(
            seed in 0u64..1_000,
            tilt in 0.05f64..0.95,
        ) {
            // Two states with the same zero pattern but different weights
            // give the same uniform counting.
            let space = ConfigSpace::uniform(4, 1.0).unwrap();
            let zero = seed as usize % 4;
            let make = |heavy: f64| {
                let light = (1.0 - heavy) / 2.0;
                let mut probs = [light; 4];
                probs[(zero + 1) % 4] = heavy;
                probs[zero] = 0.0;
                let amps: Vec<Complex64> = probs
                    .iter()
                    .map(|p| Complex64::new(p.sqrt(), 0.0))
                    .collect();
                StateVector::from_amplitudes(&space, amps).unwrap()
            };
            let part = MacroPartition::define(
                &space, &["A", "B", "C", "D"]).unwrap();
            let base = naive_branch_count(&make(tilt), &part).unwrap();
            let again = naive_branch_count(&make(0.5), &part).unwrap();
            prop_assert_eq!(base, again);
        }
    }

    #[test]
    fn scheme_discrimination_on_nonuniform_states() {
        for seed in [3u64, 17, 92] {
            let space =
                ConfigSpace::new((0..12u64).map(ConfigLabel::opaque).collect(), vec![1.0; 12])
                    .unwrap();
            let psi = crate::harness::seeded_state(&space, seed);
            let ids: Vec<&str> = (0..12).map(|i| ["A", "B", "C"][i % 3]).collect();
            let part = MacroPartition::define(&space, &ids).unwrap();
            let born = psi.born_probability(&part).unwrap();
            let (eigen, uniform) = eigen_component_count(&psi, &part).unwrap();
            assert!(!uniform, "seeded state should not be weight-uniform");
            let max_gap = part
                .ids()
                .iter()
                .map(|id| (eigen[id] - born[id]).abs())
                .fold(0.0, f64::max);
            assert!(max_gap > 1e-6, "seed {seed}: gap {max_gap}");
            let r = build_refinement(&psi, &part, 16).unwrap();
            let report = count_estimate(&r, &part).unwrap();
            assert!(report.max_abs_deviation <= report.deviation_bound);
        }
    }
}
