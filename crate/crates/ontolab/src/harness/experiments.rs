//! Experiment implementations behind [`run`](super::run).

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use super::config::{ExperimentConfig, ExperimentKind};
use super::{seeded_state, HarnessError, OUT_DIR_ENV};
use crate::configspace::{ConfigSpace, MacroPartition};
use crate::counting;
use crate::dynamics::{self, LatticeModel, MeasurementSetup};
use crate::selflocation::{self, Protocol};
use crate::state::StateVector;
use crate::stats;
use crate::textio::format_f64;

/// Files written by a run, plus one-line summaries for the console.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Checks every input the experiment would use, without writing anything.
pub fn validate(config: &ExperimentConfig) -> Result<(), HarnessError> {
    build_experiment(config).map(|_| ())
}

/// Runs the experiment and writes its CSV products plus a manifest.
pub fn run(
    config: &ExperimentConfig,
    out_override: Option<&Path>,
) -> Result<RunOutcome, HarnessError> {
    let started = Instant::now();
    let out_dir = resolve_out_dir(config, out_override);
    std::fs::create_dir_all(&out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let experiment = build_experiment(config)?;
    let mut products = execute(config, experiment)?;
    let mut files = Vec::new();
    let mut notes = Vec::new();
    for product in &mut products {
        let path = out_dir.join(&product.name);
        write_file(&path, &product.content)?;
        files.push(path);
    }
    for product in &products {
        notes.extend(product.notes.iter().cloned());
    }
    let manifest = render_manifest(config, &products, started.elapsed().as_millis());
    let manifest_path = out_dir.join("manifest.txt");
    write_file(&manifest_path, &manifest)?;
    files.push(manifest_path);
    Ok(RunOutcome {
        out_dir,
        files,
        notes,
    })
}

fn resolve_out_dir(config: &ExperimentConfig, out_override: Option<&Path>) -> PathBuf {
    if let Some(p) = out_override {
        return p.to_path_buf();
    }
    if let Some(p) = &config.out_dir {
        return p.clone();
    }
    if let Ok(p) = std::env::var(OUT_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from(".")
}

fn write_file(path: &Path, content: &str) -> Result<(), HarnessError> {
    std::fs::write(path, content).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One output file with its console notes.
struct Product {
    name: String,
    content: String,
    notes: Vec<String>,
}

/// Everything an experiment needs, built and validated from the config.
enum Experiment {
    CountConverge {
        psi: StateVector,
        partition: MacroPartition,
        levels: Vec<u32>,
    },
    Overcount {
        psi: StateVector,
        partition: MacroPartition,
        trials: u64,
    },
    MeasureChain {
        protocol: Protocol,
        initial: StateVector,
        trials: u64,
    },
    CollapseCompare {
        protocol: Protocol,
        initial: StateVector,
        trials: u64,
    },
    Lattice {
        model: LatticeModel,
        emit_hamiltonian: bool,
    },
    Sample {
        psi: StateVector,
        trials: u64,
    },
    GaugeRoundtrip {
        space: Arc<ConfigSpace>,
        partition: MacroPartition,
        states: u64,
        seed: u64,
    },
}

fn build_experiment(config: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    match config.kind {
        ExperimentKind::CountConverge => {
            let (_, psi) = build_state(config)?;
            let partition = build_partition(config, psi.space(), None)?;
            let levels = config.require_levels("run.levels")?;
            if let Some(&too_deep) = levels.iter().find(|&&n| n > counting::LEVEL_CAP) {
                return Err(HarnessError::config(format!(
                    "level {too_deep} exceeds cap {}",
                    counting::LEVEL_CAP
                )));
            }
            Ok(Experiment::CountConverge {
                psi,
                partition,
                levels,
            })
        }
        ExperimentKind::Overcount => {
            let dims = config.require_usize_list("run.dims")?;
            let born = config
                .get_f64_list("run.born")?
                .ok_or_else(|| HarnessError::config("missing required key `run.born`"))?;
            if dims.len() != born.len() || dims.len() < 2 {
                return Err(HarnessError::config(
                    "`run.dims` and `run.born` must list the same two or more macrostates",
                ));
            }
            if dims.contains(&0) {
                return Err(HarnessError::config("`run.dims` entries must be positive"));
            }
            let total: f64 = born.iter().sum();
            if born.iter().any(|&b| b < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(HarnessError::config(
                    "`run.born` must be nonnegative and sum to 1",
                ));
            }
            let atoms: usize = dims.iter().sum();
            let space = ConfigSpace::uniform(atoms, 1.0)
                .map_err(|e| HarnessError::config(e.to_string()))?;
            let mut amplitudes = vec![Complex64::ZERO; atoms];
            let mut ids = Vec::with_capacity(atoms);
            let mut offset = 0;
            for (a, (&dim, &b)) in dims.iter().zip(&born).enumerate() {
                amplitudes[offset] = Complex64::new(b.sqrt(), 0.0);
                ids.extend(std::iter::repeat_n(format!("m{a}"), dim));
                offset += dim;
            }
            let psi = StateVector::from_amplitudes(&space, amplitudes)
                .map_err(|e| HarnessError::config(e.to_string()))?;
            let partition = MacroPartition::define_from(&space, ids)
                .map_err(|e| HarnessError::config(e.to_string()))?;
            let trials = config.require_u64("run.trials")?;
            Ok(Experiment::Overcount {
                psi,
                partition,
                trials,
            })
        }
        ExperimentKind::MeasureChain => {
            let (protocol, initial) = build_protocol(config)?;
            let trials = config.require_u64("run.trials")?;
            Ok(Experiment::MeasureChain {
                protocol,
                initial,
                trials,
            })
        }
        ExperimentKind::CollapseCompare => {
            let (protocol, initial) = build_protocol(config)?;
            let trials = config.require_u64("run.trials")?;
            Ok(Experiment::CollapseCompare {
                protocol,
                initial,
                trials,
            })
        }
        ExperimentKind::Lattice => {
            let model = build_lattice_model(config)?;
            let emit_hamiltonian = config.get_bool("lattice.emit_hamiltonian", false)?;
            if model.config_count() > dynamics::DENSE_SOLVER_CAP {
                return Err(HarnessError::config(format!(
                    "lattice has {} configurations, dense solver cap is {}",
                    model.config_count(),
                    dynamics::DENSE_SOLVER_CAP
                )));
            }
            Ok(Experiment::Lattice {
                model,
                emit_hamiltonian,
            })
        }
        ExperimentKind::Sample => {
            let (_, psi) = build_state(config)?;
            let trials = config.require_u64("run.trials")?;
            Ok(Experiment::Sample { psi, trials })
        }
        ExperimentKind::GaugeRoundtrip => {
            let (space, _) = build_state(config)?;
            let partition = build_partition(config, &space, Some(2))?;
            let states = config.require_u64("run.states")?;
            if states == 0 {
                return Err(HarnessError::config("`run.states` must be positive"));
            }
            Ok(Experiment::GaugeRoundtrip {
                space,
                partition,
                states,
                seed: config.seed,
            })
        }
    }
}

fn build_state(config: &ExperimentConfig) -> Result<(Arc<ConfigSpace>, StateVector), HarnessError> {
    let source = config.get("state.source").unwrap_or("uniform");
    match source {
        "lattice" => {
            let model = build_lattice_model(config)?;
            if model.config_count() > dynamics::DENSE_SOLVER_CAP {
                return Err(HarnessError::config(
                    "lattice ground state needs the dense solver; reduce bins^sites",
                ));
            }
            let (psi, _) =
                dynamics::ground_state(&model).map_err(|e| HarnessError::config(e.to_string()))?;
            Ok((psi.space().clone(), psi))
        }
        "uniform" | "seeded" | "inline" => {
            let atoms = config.require_usize("state.atoms")?;
            let weights = match config.get_f64_list("state.weights")? {
                Some(w) => {
                    if w.len() != atoms {
                        return Err(HarnessError::config(
                            "`state.weights` length must equal `state.atoms`",
                        ));
                    }
                    w
                }
                None => vec![1.0; atoms],
            };
            let labels = (0..atoms as u64)
                .map(crate::configspace::ConfigLabel::opaque)
                .collect();
            let space = ConfigSpace::new(labels, weights)
                .map_err(|e| HarnessError::config(e.to_string()))?;
            let psi = match source {
                "uniform" => {
                    let amp = Complex64::new(1.0 / space.total_weight().sqrt(), 0.0);
                    StateVector::from_amplitudes(&space, vec![amp; atoms])
                        .map_err(|e| HarnessError::config(e.to_string()))?
                }
                "seeded" => seeded_state(&space, config.seed),
                _ => {
                    let amplitudes =
                        config
                            .get_complex_list("state.amplitudes")?
                            .ok_or_else(|| {
                                HarnessError::config("missing required key `state.amplitudes`")
                            })?;
                    StateVector::from_amplitudes(&space, amplitudes)
                        .map_err(|e| HarnessError::config(e.to_string()))?
                }
            };
            Ok((psi.space().clone(), psi))
        }
        other => Err(HarnessError::config(format!(
            "unknown state source `{other}` (expected uniform, seeded, inline, or lattice)"
        ))),
    }
}

fn build_partition(
    config: &ExperimentConfig,
    space: &Arc<ConfigSpace>,
    default_macrostates: Option<usize>,
) -> Result<MacroPartition, HarnessError> {
    if let Some(ids) = config.get_str_list("partition.assignment") {
        return MacroPartition::define_from(space, ids)
            .map_err(|e| HarnessError::config(e.to_string()));
    }
    let count = match config.get_u64("partition.macrostates")? {
        Some(k) => k as usize,
        None => default_macrostates.ok_or_else(|| {
            HarnessError::config("missing `partition.assignment` or `partition.macrostates`")
        })?,
    };
    if count == 0 || count > space.len() {
        return Err(HarnessError::config(
            "`partition.macrostates` must be between 1 and the atom count",
        ));
    }
    let ids: Vec<String> = (0..space.len())
        .map(|i| format!("m{}", i % count))
        .collect();
    MacroPartition::define_from(space, ids).map_err(|e| HarnessError::config(e.to_string()))
}

fn build_lattice_model(config: &ExperimentConfig) -> Result<LatticeModel, HarnessError> {
    let sites = config.require_usize("lattice.sites")?;
    let bins = config.require_usize("lattice.bins")?;
    let mass = config.require_f64("lattice.mass")?;
    let spacing = config.require_f64("lattice.spacing")?;
    let dphi = config.require_f64("lattice.dphi")?;
    LatticeModel::new(sites, bins, mass, spacing, dphi)
        .map_err(|e| HarnessError::config(format!("invalid lattice model: {e}")))
}

fn build_protocol(config: &ExperimentConfig) -> Result<(Protocol, StateVector), HarnessError> {
    if let Some(preset) = config.get("run.preset") {
        return match preset {
            // The two-outcome uniform guess (even or odd reading) as a
            // one-qubit protocol.
            "stopwatch" => {
                let protocol = Protocol::uniform_qubit();
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let initial = protocol
                    .initial_state(&[vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]])
                    .expect("qubit initial state");
                Ok((protocol, initial))
            }
            other => Err(HarnessError::config(format!(
                "unknown preset `{other}` (expected stopwatch)"
            ))),
        };
    }
    let dims = config.require_usize_list("run.steps")?;
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(HarnessError::config(
            "`run.steps` must list system dimensions of at least 2",
        ));
    }
    let mut systems = Vec::with_capacity(dims.len());
    for (k, &dim) in dims.iter().enumerate() {
        let key = format!("run.step{}", k + 1);
        let amps = config
            .get_complex_list(&key)?
            .ok_or_else(|| HarnessError::config(format!("missing required key `{key}`")))?;
        if amps.len() != dim {
            return Err(HarnessError::config(format!(
                "`{key}` must list {dim} amplitudes"
            )));
        }
        systems.push(amps);
    }
    let setups = dims
        .iter()
        .map(|&d| MeasurementSetup::computational(d))
        .collect();
    let protocol = Protocol::new(setups).map_err(|e| HarnessError::config(e.to_string()))?;
    let initial = protocol
        .initial_state(&systems)
        .map_err(|e| HarnessError::config(format!("invalid step amplitudes: {e}")))?;
    Ok((protocol, initial))
}

fn execute(
    config: &ExperimentConfig,
    experiment: Experiment,
) -> Result<Vec<Product>, HarnessError> {
    match experiment {
        Experiment::CountConverge {
            psi,
            partition,
            levels,
        } => count_converge(&psi, &partition, &levels),
        Experiment::Overcount {
            psi,
            partition,
            trials,
        } => overcount(&psi, &partition, trials, config.seed),
        Experiment::MeasureChain {
            protocol,
            initial,
            trials,
        } => measure_chain(&protocol, &initial, trials, config.seed),
        Experiment::CollapseCompare {
            protocol,
            initial,
            trials,
        } => collapse_compare(&protocol, &initial, trials, config.seed),
        Experiment::Lattice {
            model,
            emit_hamiltonian,
        } => lattice(&model, emit_hamiltonian),
        Experiment::Sample { psi, trials } => sample(&psi, trials, config.seed),
        Experiment::GaugeRoundtrip {
            space,
            partition,
            states,
            seed,
        } => gauge_roundtrip(&space, &partition, states, seed),
    }
}

fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

fn count_converge(
    psi: &StateVector,
    partition: &MacroPartition,
    levels: &[u32],
) -> Result<Vec<Product>, HarnessError> {
    let mut csv = String::from("level,macrostate,blocks_inside,estimate,born,deviation\n");
    let mut last_max = 0.0;
    for &level in levels {
        let refinement = counting::build_refinement(psi, partition, level)
            .map_err(|e| HarnessError::config(e.to_string()))?;
        let report = counting::count_estimate(&refinement, partition)
            .map_err(|e| HarnessError::config(e.to_string()))?;
        if !report.within_bound {
            return Err(HarnessError::invariant(format!(
                "level {level}: max deviation {} beyond bound {}",
                report.max_abs_deviation, report.deviation_bound
            )));
        }
        for row in &report.rows {
            csv.push_str(&csv_row(&[
                level.to_string(),
                row.macrostate.clone(),
                row.blocks_inside.to_string(),
                format_f64(row.estimate),
                format_f64(row.born),
                format_f64(row.deviation),
            ]));
        }
        last_max = report.max_abs_deviation;
    }
    Ok(vec![Product {
        name: "counts.csv".into(),
        content: csv,
        notes: vec![format!(
            "count-converge: {} levels, final max deviation {:.3e}",
            levels.len(),
            last_max
        )],
    }])
}

fn overcount(
    psi: &StateVector,
    partition: &MacroPartition,
    trials: u64,
    seed: u64,
) -> Result<Vec<Product>, HarnessError> {
    let report = counting::orbit_overcount_demo(psi, partition, trials, seed)
        .map_err(|e| HarnessError::config(e.to_string()))?;
    let active = report.rows.iter().filter(|r| r.orbit_weight > 0.0).count();
    let uniform = 1.0 / active as f64;
    let mc_bound = 3.0 / (trials as f64).sqrt();
    let mut csv = String::from("macrostate,orbit_weight,stderr,born\n");
    for row in &report.rows {
        csv.push_str(&csv_row(&[
            row.macrostate.clone(),
            format_f64(row.orbit_weight),
            format_f64(row.stderr),
            format_f64(row.born),
        ]));
        if row.orbit_weight > 0.0 && (row.orbit_weight - uniform).abs() > mc_bound {
            return Err(HarnessError::invariant(format!(
                "orbit weight of {} is {}, beyond {} of the uniform value {}",
                row.macrostate, row.orbit_weight, mc_bound, uniform
            )));
        }
    }
    Ok(vec![Product {
        name: "overcount.csv".into(),
        content: csv,
        notes: vec![format!(
            "overcount: {active} macrostates, orbit weights uniform within {:.3e}",
            mc_bound
        )],
    }])
}

fn measure_chain(
    protocol: &Protocol,
    initial: &StateVector,
    trials: u64,
    seed: u64,
) -> Result<Vec<Product>, HarnessError> {
    let (tree, report) = selflocation::run_branch_experiment(initial, protocol, trials, seed)
        .map_err(|e| HarnessError::config(e.to_string()))?;
    let leaf_total: f64 = tree.leaves().iter().map(|l| l.weight).sum();
    if (leaf_total - 1.0).abs() > 1e-10 {
        return Err(HarnessError::invariant(format!(
            "leaf weights sum to {leaf_total}, expected 1"
        )));
    }
    if trials >= 10_000 && !report.chi_square_pass {
        return Err(HarnessError::invariant(format!(
            "chi-square {} beyond critical {}",
            report.chi_square, report.chi_square_critical
        )));
    }
    let mut branches = String::from("parent,child,macrostate,weight\n");
    for (parent, child, outcome, weight) in tree.edge_rows() {
        branches.push_str(&csv_row(&[
            parent,
            child,
            outcome.to_string(),
            format_f64(weight),
        ]));
    }
    let mut freq = String::from("leaf_path,born_weight,empirical_frequency,stderr\n");
    for row in &report.rows {
        freq.push_str(&csv_row(&[
            row.path.clone(),
            format_f64(row.born_weight),
            format_f64(row.frequency),
            format_f64(row.stderr),
        ]));
    }
    Ok(vec![
        Product {
            name: "branches.csv".into(),
            content: branches,
            notes: vec![format!(
                "measure-chain: {} leaves, chi-square {:.3}",
                report.rows.len(),
                report.chi_square
            )],
        },
        Product {
            name: "frequencies.csv".into(),
            content: freq,
            notes: Vec::new(),
        },
    ])
}

fn collapse_compare(
    protocol: &Protocol,
    initial: &StateVector,
    trials: u64,
    seed: u64,
) -> Result<Vec<Product>, HarnessError> {
    let report = selflocation::collapse_comparator(initial, protocol, trials, seed)
        .map_err(|e| HarnessError::config(e.to_string()))?;
    if !report.agree {
        return Err(HarnessError::invariant(
            "collapse and many-worlds samplers disagree beyond three sigma",
        ));
    }
    let mut csv = String::from(
        "leaf_path,born_weight,collapse_frequency,manyworlds_frequency,abs_difference,sigma,within_3sigma\n",
    );
    for row in &report.rows {
        csv.push_str(&csv_row(&[
            row.path.clone(),
            format_f64(row.born_weight),
            format_f64(row.collapse_frequency),
            format_f64(row.manyworlds_frequency),
            format_f64(row.abs_difference),
            format_f64(row.sigma),
            row.within_three_sigma.to_string(),
        ]));
    }
    Ok(vec![Product {
        name: "compare.csv".into(),
        content: csv,
        notes: vec![format!(
            "collapse-compare: {} leaf paths agree within 3 sigma",
            report.rows.len()
        )],
    }])
}

fn lattice(model: &LatticeModel, emit_hamiltonian: bool) -> Result<Vec<Product>, HarnessError> {
    let h = dynamics::build_lattice_hamiltonian(model)
        .map_err(|e| HarnessError::config(e.to_string()))?;
    let hermiticity = h.hermiticity_residual();
    let (psi, energy) =
        dynamics::ground_state(model).map_err(|e| HarnessError::config(e.to_string()))?;
    let rayleigh =
        dynamics::rayleigh_quotient(&h, &psi).map_err(|e| HarnessError::config(e.to_string()))?;
    let space = psi.space();
    let u: Vec<Complex64> = (0..psi.len())
        .map(|i| psi.amplitude(i) * space.weight(i).sqrt())
        .collect();
    let hu = h.apply(&u);
    let residual: f64 = hu
        .iter()
        .zip(&u)
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if hermiticity > 1e-12 {
        return Err(HarnessError::invariant(format!(
            "hermiticity residual {hermiticity}"
        )));
    }
    if (rayleigh - energy).abs() > 1e-8 || residual > 1e-8 {
        return Err(HarnessError::invariant(format!(
            "ground state residual {residual}, rayleigh gap {}",
            (rayleigh - energy).abs()
        )));
    }
    let mut summary = String::from("quantity,value\n");
    for (k, v) in [
        ("config_count", model.config_count() as f64),
        ("ground_energy", energy),
        ("rayleigh_quotient", rayleigh),
        ("eigen_residual", residual),
        ("hermiticity_residual", hermiticity),
    ] {
        summary.push_str(&csv_row(&[k.to_string(), format_f64(v)]));
    }
    let mut header: Vec<String> = vec!["config".into()];
    header.extend((0..model.sites()).map(|x| format!("phi_{x}")));
    header.extend(["re".into(), "im".into(), "probability".into()]);
    let mut state_csv = csv_row(&header);
    for idx in 0..psi.len() {
        let mut fields = vec![idx.to_string()];
        fields.extend(
            model
                .bins_of(idx)
                .into_iter()
                .map(|b| format_f64(model.field_value(b))),
        );
        let a = psi.amplitude(idx);
        fields.push(format_f64(a.re));
        fields.push(format_f64(a.im));
        fields.push(format_f64(psi.probability_weight(idx)));
        state_csv.push_str(&csv_row(&fields));
    }
    let mut products = vec![
        Product {
            name: "lattice_summary.csv".into(),
            content: summary,
            notes: vec![format!(
                "lattice: {} configurations, ground energy {:.6}",
                model.config_count(),
                energy
            )],
        },
        Product {
            name: "lattice_state.csv".into(),
            content: state_csv,
            notes: Vec::new(),
        },
    ];
    if emit_hamiltonian {
        let mut coo = String::from("row,col,re,im\n");
        for &(r, c, v) in h.entries() {
            coo.push_str(&csv_row(&[
                r.to_string(),
                c.to_string(),
                format_f64(v.re),
                format_f64(v.im),
            ]));
        }
        products.push(Product {
            name: "hamiltonian.csv".into(),
            content: coo,
            notes: Vec::new(),
        });
    }
    Ok(products)
}

fn sample(psi: &StateVector, trials: u64, seed: u64) -> Result<Vec<Product>, HarnessError> {
    let mut counts = vec![0u64; psi.len()];
    for t in 0..trials {
        let mut rng = selflocation::microstate_rng(seed, t as u32);
        let atom = selflocation::sample_microstate(psi, &mut rng)
            .map_err(|e| HarnessError::config(e.to_string()))?;
        counts[atom] += 1;
    }
    let probs: Vec<f64> = (0..psi.len()).map(|i| psi.probability_weight(i)).collect();
    if trials >= 10_000 && !stats::chi_square_passes(&counts, &probs, trials) {
        return Err(HarnessError::invariant(format!(
            "sampled frequencies fail the chi-square fit: statistic {}",
            stats::chi_square_statistic(&counts, &probs, trials)
        )));
    }
    let mut csv = String::from("atom,probability,empirical_frequency,stderr\n");
    for (i, (&c, &p)) in counts.iter().zip(&probs).enumerate() {
        csv.push_str(&csv_row(&[
            i.to_string(),
            format_f64(p),
            format_f64(c as f64 / trials as f64),
            format_f64(stats::binomial_stderr(p, trials)),
        ]));
    }
    Ok(vec![Product {
        name: "sample.csv".into(),
        content: csv,
        notes: vec![format!("sample: {} atoms, {trials} draws", psi.len())],
    }])
}

fn gauge_roundtrip(
    space: &Arc<ConfigSpace>,
    partition: &MacroPartition,
    states: u64,
    seed: u64,
) -> Result<Vec<Product>, HarnessError> {
    let mut csv = String::from("state,max_roundtrip_error,max_born_shift\n");
    let mut worst_err = 0.0f64;
    let mut worst_shift = 0.0f64;
    for s in 0..states {
        let psi = seeded_state(space, seed.wrapping_add(s));
        let back = psi.absorb_phases().reconstruct();
        let max_err = (0..psi.len())
            .map(|i| (back.amplitude(i) - psi.amplitude(i)).norm())
            .fold(0.0, f64::max);
        let born0 = psi
            .born_probability(partition)
            .map_err(|e| HarnessError::config(e.to_string()))?;
        let mut max_shift = 0.0f64;
        for k in 0..16 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            let shifted = psi
                .with_global_phase(theta)
                .born_probability(partition)
                .map_err(|e| HarnessError::config(e.to_string()))?;
            for id in partition.ids() {
                max_shift = max_shift.max((shifted[id] - born0[id]).abs());
            }
        }
        worst_err = worst_err.max(max_err);
        worst_shift = worst_shift.max(max_shift);
        csv.push_str(&csv_row(&[
            s.to_string(),
            format_f64(max_err),
            format_f64(max_shift),
        ]));
    }
    if worst_err > 1e-12 || worst_shift > 1e-12 {
        return Err(HarnessError::invariant(format!(
            "round trip error {worst_err}, born shift {worst_shift} beyond 1e-12"
        )));
    }
    Ok(vec![Product {
        name: "gauge.csv".into(),
        content: csv,
        notes: vec![format!(
            "gauge-roundtrip: {states} states, worst error {worst_err:.3e}"
        )],
    }])
}

fn render_manifest(config: &ExperimentConfig, products: &[Product], wall_ms: u128) -> String {
    let mut out = String::from("ontolab manifest v1\n");
    out.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("kind = {}\n", config.kind));
    out.push_str(&format!("seed = {}\n", config.seed));
    out.push_str(&format!(
        "os = {}/{}\n",
        std::env::consts::OS,
        std::env::consts::ARCH
    ));
    out.push_str(&format!("wall_time_ms = {wall_ms}\n"));
    for p in products {
        out.push_str(&format!("file = {}\n", p.name));
    }
    out.push_str("config:\n");
    for line in config.raw().lines() {
        out.push_str("  ");
        out.push_str(line);
        out.push('\n');
    }
    out
}
