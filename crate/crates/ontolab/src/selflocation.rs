//! Self-location sampling over sequential-measurement branch trees.
//!
//! A [`Protocol`] is an ordered list of measurement setups, one per measured
//! subsystem; the universe is the tensor product of the subsystem-and-pointer
//! blocks. Running the protocol applies each measurement unitary in turn and
//! splits the state by pointer outcome, producing a [`BranchTree`] whose
//! nodes carry unnormalized component states and whose branch identity is the
//! path of pointer outcomes. Sampling a branch with its weight realizes
//! probability as uncertainty about which branch one occupies; the
//! [`collapse_comparator`] runs a single-world sampler that projects to one
//! outcome at every step, and the two empirical distributions agree within
//! Monte Carlo error on every protocol.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::rand_core::RngCore;
use thiserror::Error;

use crate::configspace::ConfigSpace;
use crate::dynamics::{
    build_measurement_unitary, DynamicsError, MeasurementSetup, MeasurementUnitary,
};
use crate::rng;
use crate::state::StateVector;
use crate::stats;

/// Branch weights below this threshold are treated as vanished outcomes.
pub const BRANCH_THRESHOLD: f64 = 1e-12;

const MANYWORLDS_DOMAIN: u32 = 1;
const COLLAPSE_DOMAIN: u32 = 2;
const MICROSTATE_DOMAIN: u32 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum SelfLocationError {
    #[error("dimension mismatch: protocol dim {protocol}, state dim {state}")]
    DimensionMismatch { protocol: usize, state: usize },
    #[error("state carries no probability weight")]
    ZeroState,
    #[error("protocol has no measurement steps")]
    EmptyProtocol,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Ordered sequence of measurement steps over independent subsystems.
#[derive(Debug, Clone)]
pub struct Protocol {
    steps: Vec<MeasurementSetup>,
    unitaries: Vec<MeasurementUnitary>,
    block_dims: Vec<usize>,
    space: Arc<ConfigSpace>,
}

impl Protocol {
    pub fn new(steps: Vec<MeasurementSetup>) -> Result<Self, SelfLocationError> {
        if steps.is_empty() {
            return Err(SelfLocationError::EmptyProtocol);
        }
        let unitaries = steps
            .iter()
            .map(build_measurement_unitary)
            .collect::<Result<Vec<_>, _>>()?;
        let block_dims: Vec<usize> = steps.iter().map(|s| s.total_dim()).collect();
        let total: usize = block_dims.iter().product();
        let space = ConfigSpace::uniform(total, 1.0).expect("nonempty product space");
        Ok(Protocol {
            steps,
            unitaries,
            block_dims,
            space,
        })
    }

    /// Single uniform qubit measurement: the minimal two-outcome protocol
    /// (even/odd stopwatch readings, Alice's qubit, and so on).
    pub fn uniform_qubit() -> Self {
        Self::new(vec![MeasurementSetup::computational(2)]).expect("valid one-step protocol")
    }

    pub fn steps(&self) -> &[MeasurementSetup] {
        &self.steps
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Dimension of the full product space.
    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().product()
    }

    /// The product configuration space (unit weights, opaque labels).
    pub fn product_space(&self) -> &Arc<ConfigSpace> {
        &self.space
    }

    /// Initial state `(psi_1 x ready x e_0) x (psi_2 x ready x e_0) x ...`
    /// from one system state per step.
    pub fn initial_state(
        &self,
        systems: &[Vec<Complex64>],
    ) -> Result<StateVector, SelfLocationError> {
        if systems.len() != self.steps.len() {
            return Err(SelfLocationError::DimensionMismatch {
                protocol: self.steps.len(),
                state: systems.len(),
            });
        }
        let mut amplitudes = vec![Complex64::ONE];
        for (setup, system) in self.steps.iter().zip(systems) {
            if system.len() != setup.system_dim() {
                return Err(SelfLocationError::DimensionMismatch {
                    protocol: setup.system_dim(),
                    state: system.len(),
                });
            }
            let block = setup.product_state(system, MeasurementSetup::READY, 0);
            let mut next = Vec::with_capacity(amplitudes.len() * block.len());
            for a in &amplitudes {
                for b in &block {
                    next.push(a * b);
                }
            }
            amplitudes = next;
        }
        StateVector::from_amplitudes(&self.space, amplitudes)
            .map_err(|_| SelfLocationError::ZeroState)
    }

    /// Applies step `k`'s unitary to a raw amplitude vector over the product
    /// space.
    fn apply_step(&self, k: usize, state: &[Complex64]) -> Vec<Complex64> {
        let block = self.block_dims[k];
        let inner: usize = self.block_dims[k + 1..].iter().product();
        let outer: usize = self.block_dims[..k].iter().product();
        let u = &self.unitaries[k];
        let mut out = vec![Complex64::ZERO; state.len()];
        let mut fiber = vec![Complex64::ZERO; block];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * block * inner + i;
                for (b, f) in fiber.iter_mut().enumerate() {
                    *f = state[base + b * inner];
                }
                let mapped = u.apply(&fiber);
                for (b, v) in mapped.iter().enumerate() {
                    out[base + b * inner] = *v;
                }
            }
        }
        out
    }

    /// Pointer index of step `k` encoded in flat product index `idx`.
    fn pointer_of(&self, k: usize, idx: usize) -> usize {
        let inner: usize = self.block_dims[k + 1..].iter().product();
        let setup = &self.steps[k];
        let local = (idx / inner) % self.block_dims[k];
        (local / setup.environment_dim()) % setup.pointer_dim()
    }

    /// Splits a raw state by step `k`'s pointer outcome. Returns the
    /// unnormalized components with weight above [`BRANCH_THRESHOLD`].
    fn split_by_pointer(&self, k: usize, state: &[Complex64]) -> Vec<(usize, Vec<Complex64>)> {
        let mut components: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for (idx, amp) in state.iter().enumerate() {
            if *amp == Complex64::ZERO {
                continue;
            }
            let p = self.pointer_of(k, idx);
            components
                .entry(p)
                .or_insert_with(|| vec![Complex64::ZERO; state.len()])[idx] = *amp;
        }
        components
            .into_iter()
            .filter(|(_, c)| c.iter().map(|z| z.norm_sqr()).sum::<f64>() > BRANCH_THRESHOLD)
            .collect()
    }
}

/// One branch: the pointer outcome taken at this step, the unnormalized
/// component state after the step, its squared-norm weight, and the branches
/// of subsequent steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchNode {
    /// Pointer outcome of the step that created this node; `None` at root.
    pub outcome: Option<usize>,
    /// Squared norm of `component`.
    pub weight: f64,
    /// Unnormalized component state over the product space.
    pub component: Vec<Complex64>,
    pub children: Vec<BranchNode>,
}

/// Weighted tree of pointer outcomes across the protocol's steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTree {
    pub root: BranchNode,
}

/// One leaf: its outcome path and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    /// Pointer outcomes along the path, one per step.
    pub path: Vec<usize>,
    pub weight: f64,
}

impl BranchTree {
    /// Leaves in path order.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        collect_leaves(&self.root, &mut path, &mut out);
        out
    }

    /// Sum of the component states of all leaves: by linearity this equals
    /// the state evolved without any splitting.
    pub fn recombined_leaf_state(&self) -> Vec<Complex64> {
        let mut acc = vec![Complex64::ZERO; self.root.component.len()];
        accumulate_leaves(&self.root, &mut acc);
        acc
    }

    /// Indented one-node-per-line rendering.
    pub fn to_indented_text(&self) -> String {
        let mut out = String::new();
        render_node(&self.root, 0, &mut out);
        out
    }

    /// Edge list rows `(parent path, child path, outcome, weight)`; the root
    /// path is the empty string.
    pub fn edge_rows(&self) -> Vec<(String, String, usize, f64)> {
        let mut rows = Vec::new();
        let mut path = Vec::new();
        collect_edges(&self.root, &mut path, &mut rows);
        rows
    }
}

fn collect_leaves(node: &BranchNode, path: &mut Vec<usize>, out: &mut Vec<Leaf>) {
    if node.children.is_empty() {
        out.push(Leaf {
            path: path.clone(),
            weight: node.weight,
        });
        return;
    }
    for child in &node.children {
        path.push(child.outcome.expect("non-root node has an outcome"));
        collect_leaves(child, path, out);
        path.pop();
    }
}

fn accumulate_leaves(node: &BranchNode, acc: &mut [Complex64]) {
    if node.children.is_empty() {
        for (a, c) in acc.iter_mut().zip(&node.component) {
            *a += c;
        }
        return;
    }
    for child in &node.children {
        accumulate_leaves(child, acc);
    }
}

fn render_node(node: &BranchNode, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    match node.outcome {
        None => out.push_str(&format!("root weight={:.12}\n", node.weight)),
        Some(o) => out.push_str(&format!("outcome={} weight={:.12}\n", o, node.weight)),
    }
    for child in &node.children {
        render_node(child, depth + 1, out);
    }
}

fn collect_edges(
    node: &BranchNode,
    path: &mut Vec<usize>,
    rows: &mut Vec<(String, String, usize, f64)>,
) {
    let parent = path_string(path);
    for child in &node.children {
        let outcome = child.outcome.expect("non-root node has an outcome");
        path.push(outcome);
        rows.push((parent.clone(), path_string(path), outcome, child.weight));
        collect_edges(child, path, rows);
        path.pop();
    }
}

/// `"1/2/1"` rendering of an outcome path.
pub fn path_string(path: &[usize]) -> String {
    path.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join("/")
}

/// Frequencies of sampled leaves against their Born weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRow {
    pub path: String,
    pub born_weight: f64,
    pub frequency: f64,
    pub stderr: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyReport {
    pub rows: Vec<FrequencyRow>,
    pub trials: u64,
    pub seed: u64,
    pub chi_square: f64,
    pub chi_square_critical: f64,
    /// Goodness of fit against the Born weights at significance 0.001.
    pub chi_square_pass: bool,
}

/// Samples one atom index with probability `w_i |psi_i|^2`.
pub fn sample_microstate(
    psi: &StateVector,
    rng: &mut impl RngCore,
) -> Result<usize, SelfLocationError> {
    let total: f64 = (0..psi.len()).map(|i| psi.probability_weight(i)).sum();
    if total <= 0.0 || total.is_nan() {
        return Err(SelfLocationError::ZeroState);
    }
    let u = rng::uniform(rng) * total;
    let mut acc = 0.0;
    for i in 0..psi.len() {
        acc += psi.probability_weight(i);
        if u < acc {
            return Ok(i);
        }
    }
    Ok(psi.len() - 1)
}

fn sample_categorical(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Builds the full branch tree of `protocol` applied to `initial`.
pub fn build_branch_tree(
    initial: &StateVector,
    protocol: &Protocol,
) -> Result<BranchTree, SelfLocationError> {
    if initial.len() != protocol.total_dim() {
        return Err(SelfLocationError::DimensionMismatch {
            protocol: protocol.total_dim(),
            state: initial.len(),
        });
    }
    let component = initial.amplitudes().to_vec();
    let mut root = BranchNode {
        outcome: None,
        weight: 1.0,
        component,
        children: Vec::new(),
    };
    grow(&mut root, protocol, 0);
    Ok(BranchTree { root })
}

fn grow(node: &mut BranchNode, protocol: &Protocol, step: usize) {
    if step == protocol.step_count() {
        return;
    }
    let evolved = protocol.apply_step(step, &node.component);
    for (outcome, component) in protocol.split_by_pointer(step, &evolved) {
        let weight: f64 = component.iter().map(|z| z.norm_sqr()).sum();
        let mut child = BranchNode {
            outcome: Some(outcome),
            weight,
            component,
            children: Vec::new(),
        };
        grow(&mut child, protocol, step + 1);
        node.children.push(child);
    }
}

/// Builds the branch tree and samples `trials` self-location draws over its
/// leaves.
pub fn run_branch_experiment(
    initial: &StateVector,
    protocol: &Protocol,
    trials: u64,
    seed: u64,
) -> Result<(BranchTree, FrequencyReport), SelfLocationError> {
    let tree = build_branch_tree(initial, protocol)?;
    let leaves = tree.leaves();
    let weights: Vec<f64> = leaves.iter().map(|l| l.weight).collect();
    let total: f64 = weights.iter().sum();
    let mut counts = vec![0u64; leaves.len()];
    for t in 0..trials {
        let mut rng = rng::trial_stream(seed, MANYWORLDS_DOMAIN, t as u32);
        let u = rng::uniform(&mut rng);
        counts[sample_categorical(&weights, total, u)] += 1;
    }
    let report = frequency_report(&leaves, &counts, trials, seed);
    Ok((tree, report))
}

fn frequency_report(leaves: &[Leaf], counts: &[u64], trials: u64, seed: u64) -> FrequencyReport {
    let rows: Vec<FrequencyRow> = leaves
        .iter()
        .zip(counts)
        .map(|(leaf, &c)| {
            let frequency = if trials > 0 {
                c as f64 / trials as f64
            } else {
                0.0
            };
            FrequencyRow {
                path: path_string(&leaf.path),
                born_weight: leaf.weight,
                frequency,
                stderr: stats::binomial_stderr(leaf.weight, trials),
                samples: c,
            }
        })
        .collect();
    let expected: Vec<f64> = leaves.iter().map(|l| l.weight).collect();
    let chi_square = stats::chi_square_statistic(counts, &expected, trials);
    let chi_square_critical =
        stats::chi_square_critical(leaves.len().saturating_sub(1) as u64, stats::Z_999);
    FrequencyReport {
        rows,
        trials,
        seed,
        chi_square,
        chi_square_critical,
        chi_square_pass: leaves.len() < 2 || chi_square <= chi_square_critical,
    }
}

/// One leaf path's statistics in a collapse-versus-many-worlds run.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub path: String,
    pub born_weight: f64,
    pub collapse_frequency: f64,
    pub manyworlds_frequency: f64,
    pub abs_difference: f64,
    /// Pooled two-sample standard error of the difference.
    pub sigma: f64,
    pub within_three_sigma: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub trials: u64,
    pub seed: u64,
    /// True when every path difference is within three sigma.
    pub agree: bool,
}

/// Runs the single-world collapse sampler against many-worlds self-location
/// sampling on the same protocol and compares final-outcome statistics.
///
/// The collapse trajectory samples one pointer outcome per step and
/// renormalizes; self-location samples a leaf of the branch tree with its
/// weight. The two empirical distributions estimate the same Born weights,
/// so each path's frequencies agree within Monte Carlo error.
pub fn collapse_comparator(
    initial: &StateVector,
    protocol: &Protocol,
    trials: u64,
    seed: u64,
) -> Result<ComparisonReport, SelfLocationError> {
    let tree = build_branch_tree(initial, protocol)?;
    let leaves = tree.leaves();
    let weights: Vec<f64> = leaves.iter().map(|l| l.weight).collect();
    let total: f64 = weights.iter().sum();
    let index_of: BTreeMap<Vec<usize>, usize> = leaves
        .iter()
        .enumerate()
        .map(|(i, l)| (l.path.clone(), i))
        .collect();

    let mut mw_counts = vec![0u64; leaves.len()];
    for t in 0..trials {
        let mut rng = rng::trial_stream(seed, MANYWORLDS_DOMAIN, t as u32);
        let u = rng::uniform(&mut rng);
        mw_counts[sample_categorical(&weights, total, u)] += 1;
    }

    let mut collapse_counts = vec![0u64; leaves.len()];
    for t in 0..trials {
        let mut rng = rng::trial_stream(seed, COLLAPSE_DOMAIN, t as u32);
        let mut state = initial.amplitudes().to_vec();
        let mut path = Vec::with_capacity(protocol.step_count());
        for step in 0..protocol.step_count() {
            let evolved = protocol.apply_step(step, &state);
            let components = protocol.split_by_pointer(step, &evolved);
            let outcome_weights: Vec<f64> = components
                .iter()
                .map(|(_, c)| c.iter().map(|z| z.norm_sqr()).sum())
                .collect();
            let step_total: f64 = outcome_weights.iter().sum();
            let u = rng::uniform(&mut rng);
            let pick = sample_categorical(&outcome_weights, step_total, u);
            let (outcome, mut component) = components.into_iter().nth(pick).expect("pick in range");
            let norm = outcome_weights[pick].sqrt();
            for z in &mut component {
                *z /= norm;
            }
            path.push(outcome);
            state = component;
        }
        let leaf = index_of
            .get(&path)
            .expect("collapse path is a branch-tree leaf");
        collapse_counts[*leaf] += 1;
    }

    let mut rows = Vec::with_capacity(leaves.len());
    let mut agree = true;
    for (i, leaf) in leaves.iter().enumerate() {
        let f_c = collapse_counts[i] as f64 / trials as f64;
        let f_m = mw_counts[i] as f64 / trials as f64;
        let pooled = (collapse_counts[i] + mw_counts[i]) as f64 / (2 * trials) as f64;
        let sigma = (pooled * (1.0 - pooled) * 2.0 / trials as f64).sqrt();
        let abs_difference = (f_c - f_m).abs();
        let within = abs_difference <= 3.0 * sigma.max(f64::EPSILON) || abs_difference == 0.0;
        agree &= within;
        rows.push(ComparisonRow {
            path: path_string(&leaf.path),
            born_weight: leaf.weight,
            collapse_frequency: f_c,
            manyworlds_frequency: f_m,
            abs_difference,
            sigma,
            within_three_sigma: within,
        });
    }
    Ok(ComparisonReport {
        rows,
        trials,
        seed,
        agree,
    })
}

/// Per-trial microstate sampling stream for leaf-level draws.
pub fn microstate_rng(seed: u64, trial: u32) -> impl RngCore {
    rng::trial_stream(seed, MICROSTATE_DOMAIN, trial)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_qubit_state(protocol: &Protocol) -> StateVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        protocol
            .initial_state(&[vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]])
            .unwrap()
    }

    #[test]
    fn qubit_protocol_has_two_half_leaves() {
        let protocol = Protocol::uniform_qubit();
        let initial = uniform_qubit_state(&protocol);
        let tree = build_branch_tree(&initial, &protocol).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 2);
        for leaf in &leaves {
            assert!((leaf.weight - 0.5).abs() < 1e-12, "{leaf:?}");
        }
        assert_eq!(leaves[0].path, vec![1]);
        assert_eq!(leaves[1].path, vec![2]);
    }

    #[test]
    fn leaf_weights_sum_to_one_two_steps() {
        let protocol = Protocol::new(vec![
            MeasurementSetup::computational(2),
            MeasurementSetup::computational(3),
        ])
        .unwrap();
        let a = vec![
            Complex64::new(0.9f64.sqrt(), 0.0),
            Complex64::new(0.1f64.sqrt(), 0.0),
        ];
        let third = (1.0f64 / 3.0).sqrt();
        let b = vec![Complex64::new(third, 0.0); 3];
        let initial = protocol.initial_state(&[a, b]).unwrap();
        let tree = build_branch_tree(&initial, &protocol).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 6);
        let total: f64 = leaves.iter().map(|l| l.weight).sum();
        assert!((total - 1.0).abs() <= 1e-10);
        // product weights
        for leaf in &leaves {
            let first = if leaf.path[0] == 1 { 0.9 } else { 0.1 };
            assert!((leaf.weight - first / 3.0).abs() < 1e-10, "{leaf:?}");
        }
    }

    #[test]
    fn children_weights_sum_to_parent() {
        let protocol = Protocol::new(vec![
            MeasurementSetup::computational(2),
            MeasurementSetup::computational(2),
        ])
        .unwrap();
        let a = vec![
            Complex64::new(0.7f64.sqrt(), 0.0),
            Complex64::new(0.3f64.sqrt(), 0.0),
        ];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)];
        let initial = protocol.initial_state(&[a, b]).unwrap();
        let tree = build_branch_tree(&initial, &protocol).unwrap();
        fn check(node: &BranchNode) {
            if node.children.is_empty() {
                return;
            }
            let sum: f64 = node.children.iter().map(|c| c.weight).sum();
            assert!((sum - node.weight).abs() <= 1e-10);
            for c in &node.children {
                check(c);
            }
        }
        check(&tree.root);
    }

    #[test]
    fn recombination_reproduces_unsplit_evolution() {
        let protocol = Protocol::new(vec![
            MeasurementSetup::computational(2),
            MeasurementSetup::computational(2),
        ])
        .unwrap();
        let initial = {
            let a = vec![
                Complex64::new(0.8f64.sqrt(), 0.0),
                Complex64::new(0.0, 0.2f64.sqrt()),
            ];
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let b = vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
            protocol.initial_state(&[a, b]).unwrap()
        };
        let tree = build_branch_tree(&initial, &protocol).unwrap();
        let recombined = tree.recombined_leaf_state();
        let mut unsplit = initial.amplitudes().to_vec();
        for step in 0..protocol.step_count() {
            unsplit = protocol.apply_step(step, &unsplit);
        }
        for (a, b) in recombined.iter().zip(&unsplit) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn sample_microstate_single_support() {
        let space = ConfigSpace::uniform(3, 1.0).unwrap();
        let amps = vec![Complex64::ZERO, Complex64::ONE, Complex64::ZERO];
        let psi = StateVector::from_amplitudes(&space, amps).unwrap();
        let mut rng = rng::stream(5, 0);
        for _ in 0..50 {
            assert_eq!(sample_microstate(&psi, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn sample_microstate_frequencies() {
        let space = ConfigSpace::uniform(2, 1.0).unwrap();
        let psi = StateVector::from_amplitudes(
            &space,
            vec![
                Complex64::new(0.75f64.sqrt(), 0.0),
                Complex64::new(0.25f64.sqrt(), 0.0),
            ],
        )
        .unwrap();
        let trials = 100_000u64;
        let mut hits = 0u64;
        for t in 0..trials {
            let mut rng = microstate_rng(11, t as u32);
            if sample_microstate(&psi, &mut rng).unwrap() == 0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        let sigma = (0.75 * 0.25 / trials as f64).sqrt();
        assert!((freq - 0.75).abs() <= 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn sample_microstate_is_deterministic() {
        let space = ConfigSpace::uniform(4, 1.0).unwrap();
        let psi = crate::harness::seeded_state(&space, 3);
        let a: Vec<usize> = {
            let mut rng = rng::stream(9, 1);
            (0..32)
                .map(|_| sample_microstate(&psi, &mut rng).unwrap())
                .collect()
        };
        let b: Vec<usize> = {
            let mut rng = rng::stream(9, 1);
            (0..32)
                .map(|_| sample_microstate(&psi, &mut rng).unwrap())
                .collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn branch_experiment_frequencies_within_three_sigma() {
        let protocol = Protocol::uniform_qubit();
        let initial = uniform_qubit_state(&protocol);
        let trials = 20_000;
        let (_, report) = run_branch_experiment(&initial, &protocol, trials, 17).unwrap();
        for row in &report.rows {
            let sigma = stats::binomial_stderr(row.born_weight, trials);
            assert!(
                (row.frequency - row.born_weight).abs() <= 3.0 * sigma,
                "{row:?}"
            );
        }
        assert!(report.chi_square_pass);
    }

    #[test]
    fn collapse_and_manyworlds_agree() {
        let protocol = Protocol::new(vec![
            MeasurementSetup::computational(2),
            MeasurementSetup::computational(2),
        ])
        .unwrap();
        let a = vec![
            Complex64::new(0.9f64.sqrt(), 0.0),
            Complex64::new(0.1f64.sqrt(), 0.0),
        ];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
        let initial = protocol.initial_state(&[a, b]).unwrap();
        let report = collapse_comparator(&initial, &protocol, 20_000, 23).unwrap();
        assert!(report.agree, "{report:?}");
        // and both estimate the product Born weights
        for row in &report.rows {
            let sigma = stats::binomial_stderr(row.born_weight, report.trials);
            assert!((row.collapse_frequency - row.born_weight).abs() <= 4.0 * sigma);
            assert!((row.manyworlds_frequency - row.born_weight).abs() <= 4.0 * sigma);
        }
    }

    #[test]
    fn comparator_single_measurement_both_modes_near_half() {
        let protocol = Protocol::uniform_qubit();
        let initial = uniform_qubit_state(&protocol);
        let trials = 20_000;
        let report = collapse_comparator(&initial, &protocol, trials, 31).unwrap();
        assert!(report.agree);
        for row in &report.rows {
            let sigma = stats::binomial_stderr(0.5, trials);
            assert!(
                (row.collapse_frequency - 0.5).abs() <= 4.0 * sigma,
                "{row:?}"
            );
            assert!(
                (row.manyworlds_frequency - 0.5).abs() <= 4.0 * sigma,
                "{row:?}"
            );
        }
    }

    #[test]
    fn comparator_is_reproducible() {
        let protocol = Protocol::uniform_qubit();
        let initial = uniform_qubit_state(&protocol);
        let a = collapse_comparator(&initial, &protocol, 2_000, 31).unwrap();
        let b = collapse_comparator(&initial, &protocol, 2_000, 31).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let protocol = Protocol::uniform_qubit();
        let space = ConfigSpace::uniform(4, 1.0).unwrap();
        let psi = crate::harness::seeded_state(&space, 1);
        assert!(matches!(
            build_branch_tree(&psi, &protocol),
            Err(SelfLocationError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn edge_rows_and_text_render() {
        let protocol = Protocol::uniform_qubit();
        let initial = uniform_qubit_state(&protocol);
        let tree = build_branch_tree(&initial, &protocol).unwrap();
        let rows = tree.edge_rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, "");
        assert_eq!(rows[0].1, "1");
        let text = tree.to_indented_text();
        assert!(text.starts_with("root weight=1"));
        assert_eq!(text.lines().count(), 3);
    }

    use crate::configspace::ConfigSpace;
}
