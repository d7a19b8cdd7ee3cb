//! Schrödinger integration along the interpolation schedule, fidelity
//! measurement, and the minimal-runtime search.
//!
//! The schedule is linear, `g(t) = t/T`, and the state solves
//! `i dψ/dt = H(g(t)) ψ` under classical RK4. The step size starts from
//! a stability bound `dt ≤ safety/Λ` (Λ a norm bound on H) combined with
//! an accuracy estimate targeting the norm-drift tolerance, and the whole
//! integration is re-run with halved steps until the final norm drift
//! actually meets the tolerance. The state is never renormalized; drift
//! is evidence, not something to hide.
//!
//! `min_runtime` reproduces the "runtime needed to reach fidelity F"
//! protocol: double T from `t_start` until the target fidelity first
//! passes, then bisect the bracket down to 5% relative width. Exceeding
//! `t_max` is an ordinary outcome (`RuntimeExceeded`), not an error.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hamiltonians::{HamiltonianError, InterpolatedOperator};
use crate::state::{inner, StateError, StateVector};

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("initial state norm deviates from 1 by {0:.3e}")]
    NonUnitStart(f64),
    #[error("runtime T = {0} must be nonnegative and finite")]
    BadRuntime(f64),
    #[error("search config invalid: {0}")]
    BadSearchConfig(String),
    #[error("evolution failed numerically at T = {t}: {failure}")]
    Numerical { t: f64, failure: EvolveFailure },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// Why an integration did not meet its tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvolveFailure {
    /// Norm drift still above tolerance after all allowed halvings.
    NormDrift { drift: f64, halvings: u32 },
    /// The requested accuracy needs more steps than the budget allows.
    StepBudget { required: u64 },
}

impl std::fmt::Display for EvolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvolveFailure::NormDrift { drift, halvings } => write!(
                f,
                "norm drift {drift:.3e} above tolerance after {halvings} step halvings"
            ),
            EvolveFailure::StepBudget { required } => {
                write!(f, "{required} steps exceed the step budget")
            }
        }
    }
}

/// Linear schedule `g(t) = t/T`.
#[derive(Clone, Copy, Debug)]
pub struct Schedule {
    pub t_total: f64,
}

impl Schedule {
    pub fn g(&self, t: f64) -> f64 {
        if self.t_total == 0.0 {
            1.0
        } else {
            (t / self.t_total).clamp(0.0, 1.0)
        }
    }
}

/// Integration knobs. Defaults match the tolerances used throughout.
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Accepted |‖ψ(T)‖ − 1|.
    pub norm_tolerance: f64,
    /// Target for the accumulated time-discretization error of the final
    /// state (norm drift only sees the anti-Hermitian part of the
    /// truncation error, which shrinks one order faster).
    pub accuracy_target: f64,
    /// Stability cap: Λ·dt ≤ safety.
    pub safety: f64,
    /// Whole-integration retries with doubled step count.
    pub max_halvings: u32,
    /// Hard cap on steps per integration.
    pub max_steps: u64,
    /// Fixed step count, bypassing automatic selection (used to compare
    /// two runs under bitwise-identical discretization).
    pub steps_override: Option<u64>,
    /// Monitor |⟨Σz⟩(t) − ⟨Σz⟩(0)| at checkpoints along the evolution
    /// and record the maximum in the result.
    pub track_sigma_z: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            norm_tolerance: 1e-6,
            accuracy_target: 1e-9,
            safety: 0.5,
            max_halvings: 8,
            max_steps: 1 << 31,
            steps_override: None,
            track_sigma_z: false,
        }
    }
}

/// What "success" overlaps against.
#[derive(Clone, Debug)]
pub enum FidelityTarget {
    /// Arbitrary state in the evolution space.
    State(StateVector),
    /// Full-space basis index; ranked into the sector when evolving
    /// there. Outside the sector the fidelity is 0.
    BasisState(u64),
    /// Orthonormal span; fidelity is the summed overlap (degenerate
    /// final ground spaces).
    GroundSpace(Vec<StateVector>),
}

impl FidelityTarget {
    /// False when a basis-index target has no amplitude slot in `space`
    /// (solution outside the chosen sector) — callers should warn.
    pub fn in_space(&self, space: &crate::state::Space) -> bool {
        match (self, space) {
            (FidelityTarget::BasisState(x), crate::state::Space::Sector(basis)) => {
                basis.rank(*x).is_some()
            }
            _ => true,
        }
    }
}

/// `|⟨target|ψ⟩|²`, summed over the span for ground-space targets.
pub fn fidelity(psi: &StateVector, target: &FidelityTarget) -> Result<f64, EvolveError> {
    match target {
        FidelityTarget::State(t) => Ok(inner(t, psi)?.norm_sqr()),
        FidelityTarget::BasisState(x) => match psi.space() {
            crate::state::Space::Full { .. } => Ok(psi.amplitudes()[*x as usize].norm_sqr()),
            crate::state::Space::Sector(basis) => Ok(basis
                .rank(*x)
                .map(|i| psi.amplitudes()[i].norm_sqr())
                .unwrap_or(0.0)),
        },
        FidelityTarget::GroundSpace(span) => {
            let mut total = 0.0;
            for v in span {
                total += inner(v, psi)?.norm_sqr();
            }
            Ok(total)
        }
    }
}

/// Outcome of one integration.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub state: StateVector,
    pub fidelity: f64,
    pub norm_drift: f64,
    pub steps: u64,
    pub dt: f64,
    /// Retries spent tightening the step size.
    pub halvings: u32,
    /// Largest |⟨Σz⟩(t) − ⟨Σz⟩(0)| over sampled checkpoints (final
    /// step included) when tracking was requested.
    pub sigma_z_drift: Option<f64>,
    /// Present when tolerances could not be met; such a result must not
    /// be used as evidence.
    pub failure: Option<EvolveFailure>,
}

fn initial_steps(t_total: f64, scale: f64, opts: &EvolveOptions) -> u64 {
    let lambda = scale.max(1e-12);
    let dt_stability = opts.safety / lambda;
    if t_total == 0.0 {
        return 1;
    }
    // RK4's unitarity defect accumulates like T·Λ·(Λ·dt)⁵/72 and the
    // full truncation error like T·Λ·(Λ·dt)⁴/120; invert both and take
    // the strictest bound
    let dt_norm = (72.0 * opts.norm_tolerance / (t_total * lambda)).powf(0.2) / lambda;
    let dt_phase = (120.0 * opts.accuracy_target / (t_total * lambda)).powf(0.25) / lambda;
    let dt = dt_stability.min(dt_norm).min(dt_phase);
    ((t_total / dt).ceil() as u64).max(1)
}

/// Interior checkpoints per integration at which ⟨Σz⟩ is sampled when
/// tracking is on; conservation violations grow secularly, so a sparse
/// sample bounds the drift without paying a measurement every step.
const SIGMA_Z_CHECKPOINTS: u64 = 64;

/// One full RK4 pass with `steps` uniform steps. Returns the final
/// state and, when `sigma_z_start` is given, the largest
/// |⟨Σz⟩ − start| over the sampled checkpoints (the final step always
/// being one of them).
fn integrate(
    pair: &InterpolatedOperator,
    psi0: &StateVector,
    t_total: f64,
    steps: u64,
    sigma_z_start: Option<f64>,
) -> Result<(StateVector, Option<f64>), EvolveError> {
    let dim = psi0.dim();
    let mut psi = psi0.clone();
    let mut k = StateVector::zeros(psi0.space().clone());
    let mut tmp = StateVector::zeros(psi0.space().clone());
    let mut sum = StateVector::zeros(psi0.space().clone());
    let dt = t_total / steps as f64;
    let minus_i_dt = C64::new(0.0, -dt);

    // dst = H(g) · src without going through a fresh Sum handle each
    // stage; term order matches InterpolatedOperator::at exactly
    let stage = |g: f64, src: &StateVector, dst: &mut StateVector| -> Result<(), EvolveError> {
        dst.amplitudes_mut().fill(C64::new(0.0, 0.0));
        pair.h_in().apply_acc(src, dst, 1.0 - g)?;
        pair.h_out().apply_acc(src, dst, g)?;
        Ok(())
    };

    let checkpoint_interval = steps.div_ceil(SIGMA_Z_CHECKPOINTS).max(1);
    let mut max_sigma_z_dev = sigma_z_start.map(|_| 0.0f64);

    for step in 0..steps {
        // exact grid fractions so g hits 0 and 1 at the endpoints
        let g0 = step as f64 / steps as f64;
        let g_half = (step as f64 + 0.5) / steps as f64;
        let g1 = (step as f64 + 1.0) / steps as f64;

        stage(g0, &psi, &mut k)?;
        for i in 0..dim {
            sum.amplitudes_mut()[i] = k.amplitudes()[i];
            tmp.amplitudes_mut()[i] = psi.amplitudes()[i] + k.amplitudes()[i] * (minus_i_dt * 0.5);
        }
        stage(g_half, &tmp, &mut k)?;
        for i in 0..dim {
            sum.amplitudes_mut()[i] += k.amplitudes()[i] * 2.0;
            tmp.amplitudes_mut()[i] = psi.amplitudes()[i] + k.amplitudes()[i] * (minus_i_dt * 0.5);
        }
        stage(g_half, &tmp, &mut k)?;
        for i in 0..dim {
            sum.amplitudes_mut()[i] += k.amplitudes()[i] * 2.0;
            tmp.amplitudes_mut()[i] = psi.amplitudes()[i] + k.amplitudes()[i] * minus_i_dt;
        }
        stage(g1, &tmp, &mut k)?;
        for i in 0..dim {
            sum.amplitudes_mut()[i] += k.amplitudes()[i];
            psi.amplitudes_mut()[i] += sum.amplitudes()[i] * (minus_i_dt / 6.0);
        }

        if let (Some(start), Some(max_dev)) = (sigma_z_start, max_sigma_z_dev.as_mut()) {
            if (step + 1) % checkpoint_interval == 0 || step + 1 == steps {
                let dev = (psi.sigma_z_expectation() - start).abs();
                if dev > *max_dev {
                    *max_dev = dev;
                }
            }
        }
    }
    Ok((psi, max_sigma_z_dev))
}

/// Evolve `psi0` over total time `t_total` and measure the target
/// fidelity. Never renormalizes; retries with halved steps until the
/// norm-drift tolerance holds or the retry budget runs out (the latter
/// yields a result carrying a [`EvolveFailure`], not an error).
pub fn evolve(
    pair: &InterpolatedOperator,
    psi0: &StateVector,
    t_total: f64,
    target: &FidelityTarget,
    opts: &EvolveOptions,
) -> Result<EvolutionResult, EvolveError> {
    if !t_total.is_finite() || t_total < 0.0 {
        return Err(EvolveError::BadRuntime(t_total));
    }
    let start_norm_dev = (psi0.norm() - 1.0).abs();
    if start_norm_dev > 1e-9 {
        return Err(EvolveError::NonUnitStart(start_norm_dev));
    }
    if !psi0.space().same_as(pair.space()) {
        return Err(StateError::SpaceMismatch(pair.space().key(), psi0.space().key()).into());
    }

    let sigma_z_start = opts.track_sigma_z.then(|| psi0.sigma_z_expectation());

    if t_total == 0.0 {
        let fid = fidelity(psi0, target)?;
        return Ok(EvolutionResult {
            state: psi0.clone(),
            fidelity: fid,
            norm_drift: start_norm_dev,
            steps: 0,
            dt: 0.0,
            halvings: 0,
            sigma_z_drift: sigma_z_start.map(|_| 0.0),
            failure: None,
        });
    }

    let mut steps = opts
        .steps_override
        .unwrap_or_else(|| initial_steps(t_total, pair.scale_bound(), opts));
    let mut halvings = 0u32;
    loop {
        if steps > opts.max_steps {
            return Ok(EvolutionResult {
                state: psi0.clone(),
                fidelity: 0.0,
                norm_drift: f64::NAN,
                steps: 0,
                dt: 0.0,
                halvings,
                sigma_z_drift: None,
                failure: Some(EvolveFailure::StepBudget { required: steps }),
            });
        }
        let (state, sigma_z_drift) = integrate(pair, psi0, t_total, steps, sigma_z_start)?;
        let drift = (state.norm() - 1.0).abs();
        if drift <= opts.norm_tolerance {
            let fid = fidelity(&state, target)?;
            return Ok(EvolutionResult {
                fidelity: fid,
                norm_drift: drift,
                steps,
                dt: t_total / steps as f64,
                halvings,
                sigma_z_drift,
                failure: None,
                state,
            });
        }
        if opts.steps_override.is_some() || halvings >= opts.max_halvings {
            let fid = fidelity(&state, target)?;
            return Ok(EvolutionResult {
                fidelity: fid,
                norm_drift: drift,
                steps,
                dt: t_total / steps as f64,
                halvings,
                sigma_z_drift: None,
                failure: Some(EvolveFailure::NormDrift { drift, halvings }),
                state,
            });
        }
        steps *= 2;
        halvings += 1;
    }
}

/// Minimal-runtime search configuration.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub target_fidelity: f64,
    pub t_start: f64,
    pub t_max: f64,
    /// Bisection stops at (T_hi − T_lo)/T_hi ≤ rel_width.
    pub rel_width: f64,
    pub evolve: EvolveOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            target_fidelity: 0.125,
            t_start: 1.0,
            t_max: (1u64 << 20) as f64,
            rel_width: 0.05,
            evolve: EvolveOptions::default(),
        }
    }
}

/// One probe of the search trace.
#[derive(Clone, Copy, Debug)]
pub struct ProbePoint {
    pub t: f64,
    pub fidelity: f64,
    pub steps: u64,
    pub norm_drift: f64,
}

#[derive(Clone, Debug)]
pub enum MinRuntimeOutcome {
    /// Smallest passing T on the final bracket, with its evolution.
    Converged {
        t_min: f64,
        result: Box<EvolutionResult>,
    },
    /// Every probe up to the cap stayed below the target fidelity.
    RuntimeExceeded { t_last: f64, best_fidelity: f64 },
}

#[derive(Clone, Debug)]
pub struct MinRuntimeReport {
    pub outcome: MinRuntimeOutcome,
    /// Every (T, fidelity) probe in evaluation order.
    pub trace: Vec<ProbePoint>,
}

impl MinRuntimeReport {
    pub fn t_min(&self) -> Option<f64> {
        match &self.outcome {
            MinRuntimeOutcome::Converged { t_min, .. } => Some(*t_min),
            MinRuntimeOutcome::RuntimeExceeded { .. } => None,
        }
    }
}

/// Double T from `t_start` until the target fidelity passes, then bisect
/// the bracketing interval to 5% relative width. A probe that fails its
/// numeric tolerances aborts the search with an error; running past
/// `t_max` does not.
pub fn min_runtime(
    pair: &InterpolatedOperator,
    psi0: &StateVector,
    target: &FidelityTarget,
    config: &SearchConfig,
) -> Result<MinRuntimeReport, EvolveError> {
    if !(config.t_start > 0.0) || !(config.t_max >= config.t_start) {
        return Err(EvolveError::BadSearchConfig(format!(
            "need 0 < t_start ≤ t_max, got t_start = {}, t_max = {}",
            config.t_start, config.t_max
        )));
    }
    if !(0.0..=1.0).contains(&config.target_fidelity) {
        return Err(EvolveError::BadSearchConfig(format!(
            "target fidelity {} outside [0, 1]",
            config.target_fidelity
        )));
    }
    let mut trace = Vec::new();
    let mut probe = |t: f64| -> Result<EvolutionResult, EvolveError> {
        let result = evolve(pair, psi0, t, target, &config.evolve)?;
        if let Some(failure) = result.failure {
            return Err(EvolveError::Numerical { t, failure });
        }
        trace.push(ProbePoint {
            t,
            fidelity: result.fidelity,
            steps: result.steps,
            norm_drift: result.norm_drift,
        });
        Ok(result)
    };

    // doubling phase
    let mut t = config.t_start;
    let mut best_fidelity: f64 = 0.0;
    let (mut t_lo, mut t_hi, mut passing) = loop {
        let result = probe(t)?;
        best_fidelity = best_fidelity.max(result.fidelity);
        if result.fidelity >= config.target_fidelity {
            if t == config.t_start {
                // nothing below the start to bisect against
                return Ok(MinRuntimeReport {
                    outcome: MinRuntimeOutcome::Converged {
                        t_min: t,
                        result: Box::new(result),
                    },
                    trace,
                });
            }
            break (t / 2.0, t, result);
        }
        if t * 2.0 > config.t_max {
            return Ok(MinRuntimeReport {
                outcome: MinRuntimeOutcome::RuntimeExceeded {
                    t_last: t,
                    best_fidelity,
                },
                trace,
            });
        }
        t *= 2.0;
    };

    // bisection phase on [t_lo (fail), t_hi (pass)]
    while (t_hi - t_lo) / t_hi > config.rel_width {
        let mid = 0.5 * (t_lo + t_hi);
        let result = probe(mid)?;
        if result.fidelity >= config.target_fidelity {
            t_hi = mid;
            passing = result;
        } else {
            t_lo = mid;
        }
    }
    Ok(MinRuntimeReport {
        outcome: MinRuntimeOutcome::Converged {
            t_min: t_hi,
            result: Box::new(passing),
        },
        trace,
    })
}
