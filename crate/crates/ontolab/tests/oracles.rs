//! Cross-checks of library solvers against the independent oracles in
//! `common`: evolution against a Jacobi eigendecomposition and a series
//! exponential, lattice eigenpairs against Jacobi, sparsity by exhaustive
//! enumeration, block counting against a literal block sweep, and branch
//! weights against a direct tensor-product construction.

mod common;

use num_complex::Complex64;
use ontolab::configspace::{ConfigSpace, MacroPartition};
use ontolab::counting::{build_refinement, count_estimate};
use ontolab::dynamics::{
    build_lattice_hamiltonian, evolve, ground_state, HamiltonianMatrix, LatticeModel,
    MeasurementSetup,
};
use ontolab::harness::seeded_state;
use ontolab::selflocation::{build_branch_tree, Protocol};
use ontolab::state::StateVector;

fn seeded_hermitian(dim: usize, seed: u64) -> HamiltonianMatrix {
    let mut rng = ontolab::rng::stream(seed, 0);
    let mut entries = Vec::new();
    for r in 0..dim {
        for c in r..dim {
            let v = if r == c {
                Complex64::new(ontolab::rng::normal_pair(&mut rng).0, 0.0)
            } else {
                ontolab::rng::complex_gaussian(&mut rng) * 0.5
            };
            entries.push((r, c, v));
            if r != c {
                entries.push((c, r, v.conj()));
            }
        }
    }
    HamiltonianMatrix::from_coo(dim, entries).unwrap()
}

#[test]
fn evolve_matches_jacobi_eigendecomposition_oracle() {
    let dim = 10;
    let space = ConfigSpace::uniform(dim, 1.0).unwrap();
    let psi = seeded_state(&space, 42);
    let h = seeded_hermitian(dim, 1042);
    let t = 0.37;
    let got = evolve(&h, &psi, t).unwrap();

    let dense = common::dense_from_entries(dim, h.entries());
    let (eigenvalues, eigenvectors) = common::jacobi_hermitian(&dense);
    let mut want = vec![Complex64::ZERO; dim];
    for (lambda, vector) in eigenvalues.iter().zip(&eigenvectors) {
        let coeff: Complex64 = vector
            .iter()
            .zip(psi.amplitudes())
            .map(|(v, a)| v.conj() * a)
            .sum();
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for (w, v) in want.iter_mut().zip(vector) {
            *w += v * coeff * phase;
        }
    }
    let err = common::max_amp_distance(got.amplitudes(), &want);
    assert!(err <= 1e-9, "max deviation from eigen oracle: {err}");
}

#[test]
fn evolve_matches_series_oracle_on_weighted_space() {
    let dim = 8;
    let space = ConfigSpace::new(
        (0..dim as u64)
            .map(ontolab::configspace::ConfigLabel::opaque)
            .collect(),
        (0..dim).map(|i| 0.25 + 0.1 * i as f64).collect(),
    )
    .unwrap();
    let psi = seeded_state(&space, 7);
    let h = seeded_hermitian(dim, 1007);
    let t = -1.3;
    let got = evolve(&h, &psi, t).unwrap();

    // Oracle works in the uniform frame, like the matrix convention says.
    let u: Vec<Complex64> = (0..dim)
        .map(|i| psi.amplitude(i) * space.weight(i).sqrt())
        .collect();
    let dense = common::dense_from_entries(dim, h.entries());
    let evolved = common::series_expm_apply(&dense, &u, t);
    let want: Vec<Complex64> = evolved
        .iter()
        .enumerate()
        .map(|(i, z)| z / space.weight(i).sqrt())
        .collect();
    let err = common::max_amp_distance(got.amplitudes(), &want);
    assert!(err <= 1e-9, "max deviation from series oracle: {err}");
}

#[test]
fn lattice_ground_energy_matches_jacobi_oracle() {
    let model = LatticeModel::new(2, 5, 0.8, 1.0, 0.4).unwrap();
    let (psi, energy) = ground_state(&model).unwrap();
    let h = build_lattice_hamiltonian(&model).unwrap();
    let dense = common::dense_from_entries(h.dim(), h.entries());
    let (eigenvalues, eigenvectors) = common::jacobi_hermitian(&dense);
    assert!(
        (energy - eigenvalues[0]).abs() <= 1e-9,
        "energy {energy} vs oracle {}",
        eigenvalues[0]
    );
    // Same eigenvector up to phase, compared in the uniform frame.
    let space = psi.space();
    let u: Vec<Complex64> = (0..psi.len())
        .map(|i| psi.amplitude(i) * space.weight(i).sqrt())
        .collect();
    let overlap: Complex64 = eigenvectors[0]
        .iter()
        .zip(&u)
        .map(|(a, b)| a.conj() * b)
        .sum();
    assert!(
        (overlap.norm() - 1.0).abs() <= 1e-8,
        "ground vector overlap {}",
        overlap.norm()
    );
}

#[test]
fn lattice_single_mode_energy_near_half() {
    let model = LatticeModel::new(1, 33, 1.0, 1.0, 0.25).unwrap();
    let h = build_lattice_hamiltonian(&model).unwrap();
    let dense = common::dense_from_entries(h.dim(), h.entries());
    let (eigenvalues, _) = common::jacobi_hermitian(&dense);
    assert!(
        (eigenvalues[0] - 0.5).abs() <= 0.025,
        "lowest eigenvalue {}",
        eigenvalues[0]
    );
}

#[test]
fn lattice_sparsity_pattern_by_exhaustive_enumeration() {
    let model = LatticeModel::new(2, 3, 1.0, 1.0, 0.5).unwrap();
    let h = build_lattice_hamiltonian(&model).unwrap();
    let dim = h.dim();
    let digits = |idx: usize| model.bins_of(idx);
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let di = digits(i);
            let dj = digits(j);
            let site_diffs: Vec<usize> = (0..model.sites()).filter(|&x| di[x] != dj[x]).collect();
            let neighbor =
                site_diffs.len() == 1 && di[site_diffs[0]].abs_diff(dj[site_diffs[0]]) == 1;
            let nonzero = h.entry(i, j) != Complex64::ZERO;
            assert_eq!(
                nonzero, neighbor,
                "entry ({i},{j}): configs {di:?} vs {dj:?}"
            );
        }
    }
}

/// Literal counting oracle: enumerate every block's entries and count blocks
/// whose members all belong to one macrostate.
fn literal_block_count(
    refinement: &ontolab::counting::RefinementPartition,
    partition: &MacroPartition,
) -> Vec<u64> {
    let mut counts = vec![0u64; partition.macro_count()];
    for k in 0..refinement.block_count() {
        let entries = refinement.block_entries(k);
        let mut macros = entries
            .iter()
            .map(|&(atom, _)| partition.macro_index_of(atom));
        let Some(first) = macros.next() else {
            continue;
        };
        if macros.all(|m| m == first) {
            counts[first] += 1;
        }
    }
    counts
}

#[test]
fn closed_form_count_equals_literal_sweep() {
    for seed in 0..40u64 {
        let atoms = 3 + (seed as usize * 7) % 14;
        let space = ConfigSpace::uniform(atoms, 1.0).unwrap();
        // Inject zero-weight atoms by zeroing some seeded amplitudes.
        let base = seeded_state(&space, seed);
        let mut amps: Vec<Complex64> = base.amplitudes().to_vec();
        for (i, a) in amps.iter_mut().enumerate() {
            if (i + seed as usize).is_multiple_of(5) {
                *a = Complex64::ZERO;
            }
        }
        let norm_sq: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            continue;
        }
        let scale = 1.0 / norm_sq.sqrt();
        for a in &mut amps {
            *a *= scale;
        }
        let psi = StateVector::from_amplitudes(&space, amps).unwrap();
        let macros = 2 + (seed as usize) % 3;
        let ids: Vec<String> = (0..atoms).map(|i| format!("m{}", i % macros)).collect();
        let partition = MacroPartition::define_from(&space, ids).unwrap();
        for level in [0u32, 1, 2, 4, 7] {
            let refinement = build_refinement(&psi, &partition, level).unwrap();
            let report = count_estimate(&refinement, &partition).unwrap();
            let literal = literal_block_count(&refinement, &partition);
            let closed: Vec<u64> = report.rows.iter().map(|r| r.blocks_inside).collect();
            assert_eq!(closed, literal, "seed {seed} level {level}");
        }
    }
}

#[test]
fn branch_weights_match_tensor_product_oracle() {
    let protocol = Protocol::new(vec![
        MeasurementSetup::computational(2),
        MeasurementSetup::computational(2),
    ])
    .unwrap();
    let p_first: f64 = 0.7;
    let p_second: f64 = 0.2;
    let a = vec![
        Complex64::new(p_first.sqrt(), 0.0),
        Complex64::new((1.0 - p_first).sqrt(), 0.0),
    ];
    let b = vec![
        Complex64::new(p_second.sqrt(), 0.0),
        Complex64::new((1.0 - p_second).sqrt(), 0.0),
    ];
    let initial = protocol.initial_state(&[a, b]).unwrap();
    let tree = build_branch_tree(&initial, &protocol).unwrap();
    let leaves = tree.leaves();
    assert_eq!(leaves.len(), 4);
    // Independent oracle: outcome j at step k carries the squared amplitude
    // of eigenvector j-1, and the joint weight is the product.
    for leaf in &leaves {
        let w1 = if leaf.path[0] == 1 {
            p_first
        } else {
            1.0 - p_first
        };
        let w2 = if leaf.path[1] == 1 {
            p_second
        } else {
            1.0 - p_second
        };
        assert!(
            (leaf.weight - w1 * w2).abs() <= 1e-12,
            "leaf {:?}: weight {} vs {}",
            leaf.path,
            leaf.weight,
            w1 * w2
        );
    }
}

#[test]
fn jacobi_oracle_self_test() {
    // Analytic 2x2 Hermitian case.
    let i = Complex64::new(0.0, 1.0);
    let a = vec![
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0) + i * 0.25,
        ],
        vec![
            Complex64::new(0.5, 0.0) - i * 0.25,
            Complex64::new(-1.0, 0.0),
        ],
    ];
    // eigenvalues of [[1, z],[conj(z), -1]] are +-sqrt(1 + |z|^2)
    let z2 = 0.5f64 * 0.5 + 0.25 * 0.25;
    let want = (1.0 + z2).sqrt();
    let (eigenvalues, _) = common::jacobi_hermitian(&a);
    assert!((eigenvalues[0] + want).abs() <= 1e-12);
    assert!((eigenvalues[1] - want).abs() <= 1e-12);
}
