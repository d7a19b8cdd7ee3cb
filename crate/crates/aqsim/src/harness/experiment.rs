//! Batch experiment orchestration: the (n, scheme, instance) grid run
//! through the minimal-runtime search, resumable and deterministic.
//!
//! Determinism contract: the master seed plus the slot position fully
//! determine every record's non-timing fields, independently of thread
//! count. Each task owns its state; results funnel through one locked
//! record store.

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use crate::evolve::{min_runtime, FidelityTarget, MinRuntimeOutcome, SearchConfig};
use crate::hamiltonians::{SchemeName, SchemeSpec};
use crate::instances::{generate, Ec3Instance, DEFAULT_MAX_RESTARTS};
use crate::sector::{scan_order, solution_sector, SectorBasis, SectorChoice};
use crate::state::{uniform_state, StateVector};

use super::config::{ExperimentConfig, SectorMode};
use super::records::{RecordStore, RunRecord, RunStatus};
use super::HarnessError;

/// Slots per n are capped so slot seeds stay injective.
const MAX_INSTANCES: usize = 1_000_000;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic, distinct per-slot instance seed.
pub fn slot_seed(master: u64, n: usize, index: usize) -> u64 {
    master ^ splitmix64(n as u64 * MAX_INSTANCES as u64 + index as u64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExperimentReport {
    /// Records computed in this invocation.
    pub completed: usize,
    /// Slots already present in the store.
    pub skipped: usize,
    pub ok: usize,
    pub censored: usize,
    pub failed: usize,
}

/// Resolve or create the instance for one slot, cached on disk under
/// `out/instances/` so reruns reuse identical files.
fn slot_instance(
    config: &ExperimentConfig,
    instances_dir: &PathBuf,
    n: usize,
    index: usize,
) -> Result<Ec3Instance, HarnessError> {
    let seed = slot_seed(config.seed, n, index);
    let path = instances_dir.join(format!("n{n}-s{seed}.json"));
    if path.exists() {
        return Ok(Ec3Instance::load(&path)?);
    }
    let inst = generate(n, seed, config.hard_only, DEFAULT_MAX_RESTARTS)?;
    inst.save(&path)?;
    Ok(inst)
}

/// The initial state the protocol prescribes: |s⟩ for the full-space
/// schemes, the sector projection of |s⟩ for the Σz-conserving ones
/// (embedded when evolving in the full space).
fn initial_state(
    scheme: SchemeName,
    n: usize,
    sector: Option<&SectorChoice>,
    full_space: bool,
) -> Result<StateVector, HarnessError> {
    if !scheme.conserves_sigma_z() {
        return Ok(uniform_state(n)?);
    }
    let choice = sector.expect("conserving schemes always carry a sector choice");
    let basis = SectorBasis::build(n, choice.k)?;
    let projected = crate::sector::project_uniform(&basis);
    if full_space {
        Ok(projected.embed_full()?)
    } else {
        Ok(projected)
    }
}

struct RunPieces {
    status: RunStatus,
    t_min: Option<f64>,
    fidelity: f64,
    norm_drift: f64,
    sigma_z_drift: Option<f64>,
    steps: u64,
    error: Option<String>,
}

/// One min-runtime search in a fixed space; never panics on search
/// failure, mapping every outcome into record fields. `sector` carries
/// the preparation sector for Σz-conserving schemes (also used as the
/// evolution space unless `full_space` forces the full one).
fn search_once(
    spec: &SchemeSpec,
    sector: Option<&SectorChoice>,
    full_space: bool,
    config: &ExperimentConfig,
) -> RunPieces {
    let scheme = spec.name();
    let run = || -> Result<RunPieces, HarnessError> {
        let mut pair = spec.build()?;
        let psi0;
        if scheme.conserves_sigma_z() {
            let choice = sector.expect("sector choice required");
            if !full_space {
                let basis = SectorBasis::build(spec.n(), choice.k)?;
                pair = pair.restrict(&basis)?;
            }
            psi0 = initial_state(scheme, spec.n(), Some(choice), full_space)?;
        } else {
            psi0 = initial_state(scheme, spec.n(), None, true)?;
        }
        let target = fidelity_target(spec)?;
        let search = SearchConfig {
            target_fidelity: config.fidelity,
            t_max: config.t_max,
            evolve: crate::evolve::EvolveOptions {
                track_sigma_z: scheme.conserves_sigma_z(),
                accuracy_target: config.accuracy_target,
                ..Default::default()
            },
            ..SearchConfig::default()
        };
        let report = min_runtime(&pair, &psi0, &target, &search)?;
        Ok(match report.outcome {
            MinRuntimeOutcome::Converged { t_min, result } => RunPieces {
                status: RunStatus::Ok,
                t_min: Some(t_min),
                fidelity: result.fidelity,
                norm_drift: result.norm_drift,
                sigma_z_drift: result.sigma_z_drift,
                steps: result.steps,
                error: None,
            },
            MinRuntimeOutcome::RuntimeExceeded { best_fidelity, .. } => {
                let last = report.trace.last();
                RunPieces {
                    status: RunStatus::RuntimeExceeded,
                    t_min: None,
                    fidelity: best_fidelity,
                    norm_drift: last.map(|p| p.norm_drift).unwrap_or(0.0),
                    sigma_z_drift: None,
                    steps: last.map(|p| p.steps).unwrap_or(0),
                    error: None,
                }
            }
        })
    };
    run().unwrap_or_else(|e| RunPieces {
        status: RunStatus::Failed,
        t_min: None,
        fidelity: 0.0,
        norm_drift: 0.0,
        sigma_z_drift: None,
        steps: 0,
        error: Some(e.to_string()),
    })
}

/// The success projector for each scheme: the marked/solution state, or
/// the two ferromagnetic ground states for ising/hybrid.
fn fidelity_target(spec: &SchemeSpec) -> Result<FidelityTarget, HarnessError> {
    Ok(match spec {
        SchemeSpec::Grover { marked, .. } => FidelityTarget::BasisState(*marked),
        SchemeSpec::Ising { n } | SchemeSpec::Hybrid { n } => {
            let all_ones = (1u64 << n) - 1;
            FidelityTarget::GroundSpace(vec![
                StateVector::basis_state(*n, 0)?,
                StateVector::basis_state(*n, all_ones)?,
            ])
        }
        SchemeSpec::Conventional { instance }
        | SchemeSpec::HeisenbergEc3 { instance }
        | SchemeSpec::XyEc3 { instance } => FidelityTarget::BasisState(
            instance
                .solution()
                .expect("generated instances carry their solution"),
        ),
    })
}

/// Run one (instance, scheme) slot into a record.
fn run_slot(inst: &Ec3Instance, scheme: SchemeName, config: &ExperimentConfig) -> RunRecord {
    let wall = Instant::now();
    let n = inst.n();
    let spec = match scheme {
        SchemeName::Grover => SchemeSpec::Grover {
            n,
            marked: inst.solution().expect("generated instances carry their solution"),
        },
        SchemeName::Ising => SchemeSpec::Ising { n },
        SchemeName::Hybrid => SchemeSpec::Hybrid { n },
        SchemeName::Conventional => SchemeSpec::Conventional { instance: inst.clone() },
        SchemeName::HeisenbergEc3 => SchemeSpec::HeisenbergEc3 { instance: inst.clone() },
        SchemeName::XyEc3 => SchemeSpec::XyEc3 { instance: inst.clone() },
    };

    let (pieces, used_sector) = if scheme.conserves_sigma_z() {
        match config.sector_mode {
            SectorMode::Full => {
                let choice = solution_sector(inst).expect("generated instances carry solutions");
                (search_once(&spec, Some(&choice), true, config), Some(choice))
            }
            SectorMode::Sector => {
                let choice = solution_sector(inst).expect("generated instances carry solutions");
                (search_once(&spec, Some(&choice), false, config), Some(choice))
            }
            SectorMode::Scan => {
                // linear-overhead sweep: try sectors nearest n/3 first,
                // stop at the first converged search
                let mut best: Option<(RunPieces, SectorChoice)> = None;
                for choice in scan_order(n) {
                    let pieces = search_once(&spec, Some(&choice), false, config);
                    let done = pieces.status == RunStatus::Ok;
                    match &best {
                        Some((b, _)) if pieces.fidelity <= b.fidelity && !done => {}
                        _ => best = Some((pieces, choice)),
                    }
                    if done {
                        break;
                    }
                }
                let (pieces, choice) = best.expect("scan_order is never empty");
                (pieces, Some(choice))
            }
        }
    } else {
        (search_once(&spec, None, true, config), None)
    };

    RunRecord {
        n,
        instance_id: inst.id(),
        instance_seed: inst.seed(),
        m: inst.m(),
        scheme: scheme.as_str().to_string(),
        k: used_sector.as_ref().map(|c| c.k),
        delta: used_sector.as_ref().map(|c| c.delta),
        status: pieces.status,
        t_min: pieces.t_min,
        fidelity: pieces.fidelity,
        fidelity_target: config.fidelity,
        norm_drift: pieces.norm_drift,
        sigma_z_drift: pieces.sigma_z_drift,
        steps: pieces.steps,
        wall_secs: wall.elapsed().as_secs_f64(),
        error: pieces.error,
    }
}

/// Execute the batch described by `config`, resuming over any records
/// already in `out/records.jsonl`. `progress` fires once per freshly
/// computed record.
pub fn run_experiment(
    config: &ExperimentConfig,
    progress: impl Fn(&RunRecord) + Sync,
) -> Result<ExperimentReport, HarnessError> {
    if config.instances > MAX_INSTANCES {
        return Err(HarnessError::Invalid(format!(
            "instances {} exceeds the per-n cap {MAX_INSTANCES}",
            config.instances
        )));
    }
    std::fs::create_dir_all(&config.out).map_err(|e| HarnessError::Io {
        path: config.out.clone(),
        source: e,
    })?;
    let instances_dir = config.out.join("instances");
    std::fs::create_dir_all(&instances_dir).map_err(|e| HarnessError::Io {
        path: instances_dir.clone(),
        source: e,
    })?;

    let store = RecordStore::open(&config.out.join("records.jsonl"))?;
    let done = store.done_keys();

    // materialize instances up front (cheap next to the evolutions) so
    // the parallel phase only runs searches
    let mut tasks: Vec<(Ec3Instance, SchemeName)> = Vec::new();
    let mut skipped = 0usize;
    for &n in &config.ns {
        for index in 0..config.instances {
            let inst = slot_instance(config, &instances_dir, n, index)?;
            for &scheme in &config.schemes {
                let key = (n, inst.seed(), scheme.as_str().to_string());
                if done.contains(&key) {
                    skipped += 1;
                } else {
                    tasks.push((inst.clone(), scheme));
                }
            }
        }
    }

    let store = Mutex::new(store);
    let failure: Mutex<Option<HarnessError>> = Mutex::new(None);
    let counts = Mutex::new((0usize, 0usize, 0usize)); // ok, censored, failed

    let work = || {
        tasks.par_iter().for_each(|(inst, scheme)| {
            if failure.lock().unwrap().is_some() {
                return;
            }
            let record = run_slot(inst, *scheme, config);
            {
                let mut c = counts.lock().unwrap();
                match record.status {
                    RunStatus::Ok => c.0 += 1,
                    RunStatus::RuntimeExceeded => c.1 += 1,
                    RunStatus::Failed => c.2 += 1,
                }
            }
            progress(&record);
            let mut guard = store.lock().unwrap();
            if let Err(e) = guard.append(record) {
                *failure.lock().unwrap() = Some(e.into());
            }
        });
    };
    match config.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| HarnessError::Invalid(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let (ok, censored, failed) = counts.into_inner().unwrap();
    Ok(ExperimentReport {
        completed: tasks.len(),
        skipped,
        ok,
        censored,
        failed,
    })
}
