//! `aqsim` — adiabatic evolution experiments from the command line.

use std::error::Error;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use aqsim::evolve::{min_runtime, FidelityTarget, MinRuntimeOutcome, SearchConfig};
use aqsim::hamiltonians::{SchemeName, SchemeSpec};
use aqsim::harness::{
    self, config::load_config_file, config::Overrides, config::SectorMode, ExperimentConfig,
};
use aqsim::instances::{generate, Ec3Instance, DEFAULT_MAX_RESTARTS};
use aqsim::sector::{solution_sector, SectorBasis};
use aqsim::spectra::{
    gap_sweep, order_parameter, uniform_grid, write_gap_csv, write_value_flag_csv, EigsMethod,
    SectorOption,
};
use aqsim::state::{uniform_state, StateVector};

/// Thread count used when `--threads` is absent.
const THREADS_ENV: &str = "AQSIM_THREADS";

/// `Send + Sync` so results can cross the rayon pool boundary.
type CliError = Box<dyn Error + Send + Sync>;

#[derive(Parser)]
#[command(
    name = "aqsim",
    about = "Adiabatic quantum algorithm simulator: exact cover-3 schemes, \
             minimal-runtime searches, gap sweeps, batch experiments",
    version
)]
struct Cli {
    /// Key-value configuration file; flags override its settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: AQSIM_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate unique-solution exact cover-3 instances.
    Gen(GenArgs),
    /// Search the minimal runtime reaching the target fidelity.
    MinTime(MinTimeArgs),
    /// Sweep low-lying eigenvalues over g and locate the minimum gap.
    GapSweep(SweepArgs),
    /// Sweep the ground-state order parameter ⟨H_out − H_in⟩ over g.
    OrderParam(SweepArgs),
    /// Run the full (n, scheme, instance) batch with resume.
    Experiment(ExperimentArgs),
    /// Recompute fig3.csv from an experiment directory.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Qubit counts, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Instances per n.
    #[arg(long)]
    instances: Option<usize>,
    /// Keep only hard instances (m ≤ round(2n/3)).
    #[arg(long, action = ArgAction::SetTrue)]
    hard_only: bool,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for instance files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinTimeArgs {
    /// Scheme name (grover, ising, hybrid, conventional, heisenberg_ec3,
    /// xy_ec3).
    #[arg(long)]
    scheme: SchemeName,
    /// Qubit count (generates an instance when the scheme needs one and
    /// --instance is absent).
    #[arg(long)]
    n: Option<usize>,
    /// Instance file to load instead of generating.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Target fidelity.
    #[arg(long)]
    fidelity: Option<f64>,
    /// Seed for instance generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Runtime search budget.
    #[arg(long)]
    t_max: Option<f64>,
    /// Evolve Σz-conserving schemes in the solution's sector (default).
    #[arg(long, action = ArgAction::SetTrue, conflicts_with = "full")]
    sector: bool,
    /// Force full-space evolution.
    #[arg(long, action = ArgAction::SetTrue)]
    full: bool,
    /// Append the run record (one JSON line) to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Scheme name (grover, ising, hybrid, conventional, heisenberg_ec3,
    /// xy_ec3).
    #[arg(long)]
    scheme: SchemeName,
    /// Qubit count (generates an instance when the scheme needs one and
    /// --instance is absent).
    #[arg(long)]
    n: Option<usize>,
    /// Instance file to load instead of generating.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Grid points over [0, 1].
    #[arg(long)]
    grid: Option<usize>,
    /// Eigenvalues per grid point (gap-sweep only).
    #[arg(long, default_value_t = 2)]
    levels: usize,
    /// Use the scheme's symmetry sector (default).
    #[arg(long, action = ArgAction::SetTrue, conflicts_with = "full")]
    sector: bool,
    /// Force the full space.
    #[arg(long, action = ArgAction::SetTrue)]
    full: bool,
    /// Seed for instance generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Qubit counts, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Scheme names, comma-separated.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<SchemeName>,
    /// Instances per n.
    #[arg(long)]
    instances: Option<usize>,
    /// Keep only hard instances (m ≤ round(2n/3)).
    #[arg(long, action = ArgAction::SetTrue)]
    hard_only: bool,
    /// Target fidelity.
    #[arg(long)]
    fidelity: Option<f64>,
    /// Master seed for the instance stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Runtime search budget per run.
    #[arg(long)]
    t_max: Option<f64>,
    /// Evolve Σz-conserving schemes in the solution's sector (default).
    #[arg(long, action = ArgAction::SetTrue, conflicts_with_all = ["full", "scan_sectors"])]
    sector: bool,
    /// Force full-space evolution.
    #[arg(long, action = ArgAction::SetTrue, conflicts_with = "scan_sectors")]
    full: bool,
    /// Probe candidate sectors nearest n/3 instead of reading the
    /// solution's weight (linear overhead).
    #[arg(long, action = ArgAction::SetTrue)]
    scan_sectors: bool,
    /// Experiment directory (records.jsonl, instances/, fig3.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Experiment directory containing records.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_overrides = match &cli.config {
        Some(path) => Overrides::from_map(&load_config_file(path)?)?,
        None => Overrides::default(),
    };
    let threads = cli
        .threads
        .or_else(env_threads)
        .or(file_overrides.threads);
    with_pool(threads, || match cli.command {
        Command::Gen(args) => cmd_gen(args, &file_overrides),
        Command::MinTime(args) => cmd_min_time(args, &file_overrides),
        Command::GapSweep(args) => cmd_sweep(args, &file_overrides, SweepKind::Gap),
        Command::OrderParam(args) => cmd_sweep(args, &file_overrides, SweepKind::Order),
        Command::Experiment(args) => cmd_experiment(args, &file_overrides),
        Command::Summarize(args) => cmd_summarize(args, &file_overrides),
    })
}

fn env_threads() -> Option<usize> {
    let raw = std::env::var(THREADS_ENV).ok()?;
    match raw.trim().parse::<usize>() {
        Ok(k) if k >= 1 => Some(k),
        _ => {
            eprintln!("warning: ignoring {THREADS_ENV}={raw:?} (want a positive integer)");
            None
        }
    }
}

/// Run `f` inside a pool of the requested size (or the default pool).
fn with_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build()?;
            pool.install(f)
        }
        None => f(),
    }
}

fn merged(args_overrides: Overrides, file: &Overrides) -> Overrides {
    args_overrides.over(file.clone())
}

fn cmd_gen(args: GenArgs, file: &Overrides) -> Result<(), CliError> {
    let o = merged(
        Overrides {
            ns: if args.n.is_empty() { None } else { Some(args.n.clone()) },
            instances: args.instances,
            hard_only: args.hard_only.then_some(true),
            seed: args.seed,
            out: args.out.clone(),
            ..Overrides::default()
        },
        file,
    );
    let ns = o.ns.clone().ok_or("gen needs --n")?;
    let count = o.instances.unwrap_or(100);
    let hard_only = o.hard_only.unwrap_or(false);
    let seed = o.seed.unwrap_or(0);
    let out = o.out.clone().unwrap_or_else(|| PathBuf::from("instances"));
    std::fs::create_dir_all(&out)?;
    let mut written = 0usize;
    for &n in &ns {
        for index in 0..count {
            let slot = harness::slot_seed(seed, n, index);
            let inst = generate(n, slot, hard_only, DEFAULT_MAX_RESTARTS)?;
            let path = out.join(format!("{}.json", inst.id()));
            inst.save(&path)?;
            println!("{} m={} hard={}", path.display(), inst.m(), inst.hard());
            written += 1;
        }
    }
    println!("wrote {written} instance(s) to {}", out.display());
    Ok(())
}

/// Load `--instance` or generate one deterministic instance for
/// schemes that need it.
fn resolve_instance(
    scheme: SchemeName,
    n: Option<usize>,
    instance: &Option<PathBuf>,
    seed: u64,
) -> Result<Option<Ec3Instance>, CliError> {
    if !scheme.needs_instance() {
        return Ok(None);
    }
    if let Some(path) = instance {
        return Ok(Some(Ec3Instance::load(path)?));
    }
    let n = n.ok_or("this scheme needs --n or --instance")?;
    Ok(Some(generate(
        n,
        harness::slot_seed(seed, n, 0),
        false,
        DEFAULT_MAX_RESTARTS,
    )?))
}

fn build_spec(
    scheme: SchemeName,
    n: Option<usize>,
    inst: Option<Ec3Instance>,
) -> Result<SchemeSpec, CliError> {
    Ok(match scheme {
        SchemeName::Grover => SchemeSpec::Grover {
            n: n.ok_or("grover needs --n")?,
            marked: 0,
        },
        SchemeName::Ising => SchemeSpec::Ising { n: n.ok_or("ising needs --n")? },
        SchemeName::Hybrid => SchemeSpec::Hybrid { n: n.ok_or("hybrid needs --n")? },
        SchemeName::Conventional => SchemeSpec::Conventional {
            instance: inst.expect("resolve_instance supplies it"),
        },
        SchemeName::HeisenbergEc3 => SchemeSpec::HeisenbergEc3 {
            instance: inst.expect("resolve_instance supplies it"),
        },
        SchemeName::XyEc3 => SchemeSpec::XyEc3 {
            instance: inst.expect("resolve_instance supplies it"),
        },
    })
}

fn cmd_min_time(args: MinTimeArgs, file: &Overrides) -> Result<(), CliError> {
    let o = merged(
        Overrides {
            ns: args.n.map(|n| vec![n]),
            fidelity: args.fidelity,
            seed: args.seed,
            t_max: args.t_max,
            sector_mode: if args.full {
                Some(SectorMode::Full)
            } else if args.sector {
                Some(SectorMode::Sector)
            } else {
                None
            },
            out: args.out.clone(),
            ..Overrides::default()
        },
        file,
    );
    let scheme = args.scheme;
    let n = o.ns.as_ref().and_then(|ns| ns.first().copied());
    let seed = o.seed.unwrap_or(0);
    let inst = resolve_instance(scheme, n, &args.instance, seed)?;
    let spec = build_spec(scheme, n.or(inst.as_ref().map(|i| i.n())), inst.clone())?;
    let n = spec.n();
    let fidelity = o.fidelity.unwrap_or(0.125);
    let t_max = o.t_max.unwrap_or((1u64 << 20) as f64);
    let full_space = o.sector_mode == Some(SectorMode::Full) || !scheme.conserves_sigma_z();

    let mut pair = spec.build()?;
    let psi0: StateVector;
    let mut sector_note = String::new();
    if scheme.conserves_sigma_z() {
        let choice = solution_sector(inst.as_ref().expect("conserving schemes need instances"))
            .ok_or("instance carries no solution to pick a sector")?;
        let basis = SectorBasis::build(n, choice.k)?;
        let projected = aqsim::sector::project_uniform(&basis);
        if full_space {
            psi0 = projected.embed_full()?;
            sector_note = format!(" (full space, Δ={} prep)", choice.delta);
        } else {
            pair = pair.restrict(&basis)?;
            psi0 = projected;
            sector_note = format!(" (sector k={}, Δ={}, dim {})", choice.k, choice.delta, basis.dim());
        }
    } else {
        psi0 = uniform_state(n)?;
    }
    let target = match &spec {
        SchemeSpec::Grover { marked, .. } => FidelityTarget::BasisState(*marked),
        SchemeSpec::Ising { n } | SchemeSpec::Hybrid { n } => FidelityTarget::GroundSpace(vec![
            StateVector::basis_state(*n, 0)?,
            StateVector::basis_state(*n, (1u64 << n) - 1)?,
        ]),
        other => FidelityTarget::BasisState(
            other
                .instance()
                .and_then(|i| i.solution())
                .ok_or("instance carries no solution")?,
        ),
    };
    let search = SearchConfig {
        target_fidelity: fidelity,
        t_max,
        evolve: aqsim::evolve::EvolveOptions {
            track_sigma_z: scheme.conserves_sigma_z(),
            ..Default::default()
        },
        ..SearchConfig::default()
    };
    println!("{scheme} n={n}{sector_note}, target fidelity {fidelity}");
    let started = std::time::Instant::now();
    let report = min_runtime(&pair, &psi0, &target, &search)?;
    let wall_secs = started.elapsed().as_secs_f64();
    for p in &report.trace {
        println!("  probe T={:<12.6} fidelity={:.6} steps={}", p.t, p.fidelity, p.steps);
    }
    match &report.outcome {
        MinRuntimeOutcome::Converged { t_min, result } => {
            println!(
                "T_min = {t_min:.6}  fidelity {:.6}  norm drift {:.3e}  steps {}",
                result.fidelity, result.norm_drift, result.steps
            );
            if let Some(d) = result.sigma_z_drift {
                println!("sigma_z drift {d:.3e}");
            }
        }
        MinRuntimeOutcome::RuntimeExceeded { t_last, best_fidelity } => println!(
            "runtime exceeded: best fidelity {best_fidelity:.6} at T={t_last} (budget {t_max})"
        ),
    }
    if let Some(out) = &o.out {
        append_min_time_record(out, &spec, inst.as_ref(), &report, fidelity, wall_secs)?;
        println!("record appended to {}", out.display());
    }
    Ok(())
}

fn append_min_time_record(
    path: &Path,
    spec: &SchemeSpec,
    inst: Option<&Ec3Instance>,
    report: &aqsim::evolve::MinRuntimeReport,
    fidelity_target: f64,
    wall_secs: f64,
) -> Result<(), CliError> {
    use harness::{RecordStore, RunRecord, RunStatus};
    let scheme = spec.name();
    let sector = inst.and_then(solution_sector).filter(|_| scheme.conserves_sigma_z());
    let (status, t_min, fidelity, norm_drift, sigma_z_drift, steps) = match &report.outcome {
        MinRuntimeOutcome::Converged { t_min, result } => (
            RunStatus::Ok,
            Some(*t_min),
            result.fidelity,
            result.norm_drift,
            result.sigma_z_drift,
            result.steps,
        ),
        MinRuntimeOutcome::RuntimeExceeded { best_fidelity, .. } => {
            let last = report.trace.last();
            (
                RunStatus::RuntimeExceeded,
                None,
                *best_fidelity,
                last.map(|p| p.norm_drift).unwrap_or(0.0),
                None,
                last.map(|p| p.steps).unwrap_or(0),
            )
        }
    };
    let record = RunRecord {
        n: spec.n(),
        instance_id: inst
            .map(|i| i.id())
            .unwrap_or_else(|| format!("n{}-{}", spec.n(), scheme)),
        instance_seed: inst.map(|i| i.seed()).unwrap_or(0),
        m: inst.map(|i| i.m()).unwrap_or(0),
        scheme: scheme.as_str().to_string(),
        k: sector.as_ref().map(|c| c.k),
        delta: sector.as_ref().map(|c| c.delta),
        status,
        t_min,
        fidelity,
        fidelity_target,
        norm_drift,
        sigma_z_drift,
        steps,
        wall_secs,
        error: None,
    };
    let mut store = RecordStore::open(path)?;
    store.append(record)?;
    Ok(())
}

enum SweepKind {
    Gap,
    Order,
}

fn cmd_sweep(args: SweepArgs, file: &Overrides, kind: SweepKind) -> Result<(), CliError> {
    let o = merged(
        Overrides {
            ns: args.n.map(|n| vec![n]),
            grid: args.grid,
            seed: args.seed,
            sector_mode: if args.full {
                Some(SectorMode::Full)
            } else if args.sector {
                Some(SectorMode::Sector)
            } else {
                None
            },
            out: args.out.clone(),
            ..Overrides::default()
        },
        file,
    );
    let scheme = args.scheme;
    let n = o.ns.as_ref().and_then(|ns| ns.first().copied());
    let seed = o.seed.unwrap_or(0);
    let inst = resolve_instance(scheme, n, &args.instance, seed)?;
    let spec = build_spec(scheme, n.or(inst.as_ref().map(|i| i.n())), inst.clone())?;
    let grid = uniform_grid(o.grid.unwrap_or(201));
    let force_full = o.sector_mode == Some(SectorMode::Full);
    let pair = spec.build()?;

    // each scheme's natural symmetry resolution, unless --full
    let sector_option = if force_full {
        SectorOption::Full
    } else {
        match scheme {
            SchemeName::Ising | SchemeName::Hybrid => SectorOption::SpinFlipEven,
            SchemeName::HeisenbergEc3 | SchemeName::XyEc3 => {
                let choice = solution_sector(inst.as_ref().expect("instance present"))
                    .ok_or("instance carries no solution to pick a sector")?;
                SectorOption::SigmaZ(choice.k)
            }
            SchemeName::Grover | SchemeName::Conventional => SectorOption::Full,
        }
    };

    match kind {
        SweepKind::Gap => {
            let out = o.out.clone().unwrap_or_else(|| PathBuf::from("gap.csv"));
            let curve = gap_sweep(&pair, &grid, args.levels, sector_option, EigsMethod::Auto)?;
            write_gap_csv(&curve, &out)?;
            println!(
                "{scheme} n={}: min gap {:.6e} at g* = {:.6} ({} grid points) -> {}",
                spec.n(),
                curve.min_gap,
                curve.g_star,
                grid.len(),
                out.display()
            );
        }
        SweepKind::Order => {
            let out = o.out.clone().unwrap_or_else(|| PathBuf::from("order.csv"));
            // the order parameter needs ground-state vectors, so sector
            // support means restricting the pair itself
            let pair = match sector_option {
                SectorOption::SigmaZ(k) => {
                    let basis = SectorBasis::build(spec.n(), k)?;
                    pair.restrict(&basis)?
                }
                SectorOption::SpinFlipEven => {
                    eprintln!(
                        "note: order parameter computed in the full space; \
                         points where the ground state degenerates are flagged"
                    );
                    pair
                }
                SectorOption::Full => pair,
            };
            let curve = order_parameter(&pair, &grid, EigsMethod::Auto)?;
            write_value_flag_csv(
                curve.points.iter().map(|p| (p.g, p.value, p.degenerate)),
                &out,
            )?;
            let flagged = curve.points.iter().filter(|p| p.degenerate).count();
            println!(
                "{scheme} n={}: order parameter on {} points ({} degenerate) -> {}",
                spec.n(),
                grid.len(),
                flagged,
                out.display()
            );
        }
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs, file: &Overrides) -> Result<(), CliError> {
    let o = merged(
        Overrides {
            ns: if args.n.is_empty() { None } else { Some(args.n.clone()) },
            schemes: if args.scheme.is_empty() { None } else { Some(args.scheme.clone()) },
            instances: args.instances,
            hard_only: args.hard_only.then_some(true),
            fidelity: args.fidelity,
            seed: args.seed,
            t_max: args.t_max,
            sector_mode: if args.full {
                Some(SectorMode::Full)
            } else if args.scan_sectors {
                Some(SectorMode::Scan)
            } else if args.sector {
                Some(SectorMode::Sector)
            } else {
                None
            },
            out: args.out.clone(),
            ..Overrides::default()
        },
        file,
    );
    let mut config = ExperimentConfig::from_overrides(&o)?;
    // the surrounding pool (from --threads/env/config) already has the
    // right width; avoid building a second nested pool
    config.threads = None;
    println!(
        "experiment: n={:?} schemes={:?} instances={} fidelity={} seed={} out={}",
        config.ns,
        config.schemes.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        config.instances,
        config.fidelity,
        config.seed,
        config.out.display()
    );
    let report = harness::run_experiment(&config, |r| {
        let t = r
            .t_min
            .map(|t| format!("T_min={t:.4}"))
            .unwrap_or_else(|| format!("({:?})", r.status));
        eprintln!("  {} {} {}  fid={:.4}", r.instance_id, r.scheme, t, r.fidelity);
    })?;
    println!(
        "completed {} (skipped {} already done): ok {}, censored {}, failed {}",
        report.completed, report.skipped, report.ok, report.censored, report.failed
    );
    write_summary(&config.out)?;
    Ok(())
}

fn cmd_summarize(args: SummarizeArgs, file: &Overrides) -> Result<(), CliError> {
    let out = args
        .out
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    write_summary(&out)
}

fn write_summary(dir: &Path) -> Result<(), CliError> {
    let store = harness::RecordStore::open(&dir.join("records.jsonl"))?;
    let (rows, warnings) = harness::summarize(store.records());
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let path = dir.join("fig3.csv");
    harness::write_fig3_csv(&rows, &path)?;
    for row in &rows {
        println!(
            "n={:<3} {:<15} median T = {:<12.4} CI [{:.4}, {:.4}]  s={} censored={}",
            row.n, row.scheme, row.median_t, row.ci_lo, row.ci_hi, row.s, row.censored
        );
    }
    println!("summary written to {}", path.display());
    Ok(())
}
