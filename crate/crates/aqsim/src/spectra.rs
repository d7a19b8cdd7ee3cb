//! Low-lying spectra along the interpolation path: gap curves, minimum
//! gaps, order-parameter sweeps, and the adiabatic-condition diagnostic.
//!
//! Two eigensolver routes share one interface: a dense Hermitian
//! diagonalization for dimensions up to 4096 (the oracle path) and a
//! Lanczos iteration with full reorthogonalization for everything
//! larger. Both are deterministic — the Krylov start vector comes from a
//! fixed seed and eigenvector phases are normalized so the first nonzero
//! component is real positive.
//!
//! A single-vector Lanczos recurrence meets an exactly degenerate level
//! once per Krylov subspace; the breakdown-restart logic below injects
//! fresh directions so multiplicities are still recovered, but when exact
//! multiplicities are load-bearing prefer the dense path or a symmetry
//! sector that splits the degeneracy.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::hamiltonians::{HamiltonianError, InterpolatedOperator};
use crate::operator::{OperatorError, OperatorHandle};
use crate::sector::{SectorBasis, SectorError};
use crate::state::{StateError, StateVector};

/// Hard ceiling for the dense diagonalization route.
pub const MAX_DENSE_DIM: usize = 4096;
/// Auto method switches from dense to Krylov above this dimension.
const AUTO_DENSE_DIM: usize = 256;
/// Unique-vs-degenerate ground-state tolerance.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error(
        "Krylov iteration did not converge within {iterations} iterations \
         (worst residual bound {worst_residual:.3e}, tolerance {tolerance:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        worst_residual: f64,
        tolerance: f64,
    },
    #[error("dimension {0} exceeds the dense-diagonalization ceiling {MAX_DENSE_DIM}")]
    DimTooLargeForDense(usize),
    #[error("requested {r} eigenpairs from a dimension-{dim} operator")]
    TooManyEigenpairs { r: usize, dim: usize },
    #[error("bad g grid: {0}")]
    BadGrid(String),
    #[error(
        "operator is not spin-flip symmetric: odd-sector leakage {leakage:.3e} \
         under the complement-pair wrapper"
    )]
    NotFlipSymmetric { leakage: f64 },
    #[error("at g = {g}: {source}")]
    AtG {
        g: f64,
        #[source]
        source: Box<SpectraError>,
    },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Sector(#[from] SectorError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at_g(g: f64) -> impl FnOnce(SpectraError) -> SpectraError {
    move |source| SpectraError::AtG {
        g,
        source: Box::new(source),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigsMethod {
    /// Dense for dim ≤ 256, Krylov above.
    Auto,
    Dense,
    Krylov,
}

/// Krylov iteration knobs; defaults match the stated residual contract.
#[derive(Clone, Copy, Debug)]
pub struct KrylovParams {
    /// Residual tolerance as a multiple of the operator's norm scale.
    pub tol_factor: f64,
    pub max_iterations: usize,
    pub start_seed: u64,
}

impl Default for KrylovParams {
    fn default() -> Self {
        KrylovParams {
            tol_factor: 1e-8,
            max_iterations: 500,
            start_seed: 0x1a2b3c4d,
        }
    }
}

/// Eigenvalue with its phase-normalized eigenvector.
#[derive(Clone, Debug)]
pub struct EigPair {
    pub value: f64,
    pub vector: StateVector,
}

// ---------------------------------------------------------------------
// generic solver over an apply closure, shared by operator spaces and
// the spin-flip-even wrapper

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Rotate so the first component with |v_i| > 1e-12 is real positive.
fn normalize_phase(v: &mut [C64]) {
    if let Some(lead) = v.iter().find(|a| a.norm() > 1e-12) {
        let factor = lead.conj() / lead.norm();
        for a in v.iter_mut() {
            *a *= factor;
        }
    }
}

type ApplyFn<'a> = dyn FnMut(&[C64], &mut [C64]) -> Result<(), SpectraError> + 'a;

fn eig_dense(
    apply: &mut ApplyFn,
    dim: usize,
    r: usize,
) -> Result<Vec<(f64, Vec<C64>)>, SpectraError> {
    if dim > MAX_DENSE_DIM {
        return Err(SpectraError::DimTooLargeForDense(dim));
    }
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    let mut basis = vec![C64::new(0.0, 0.0); dim];
    let mut column = vec![C64::new(0.0, 0.0); dim];
    for j in 0..dim {
        basis[j] = C64::new(1.0, 0.0);
        apply(&basis, &mut column)?;
        basis[j] = C64::new(0.0, 0.0);
        for i in 0..dim {
            matrix[(i, j)] = column[i];
        }
    }
    let eig = matrix.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    Ok(order
        .into_iter()
        .take(r)
        .map(|idx| {
            let mut vec: Vec<C64> = eig.eigenvectors.column(idx).iter().copied().collect();
            normalize_phase(&mut vec);
            (eig.eigenvalues[idx], vec)
        })
        .collect())
}

fn eig_krylov(
    apply: &mut ApplyFn,
    dim: usize,
    scale: f64,
    r: usize,
    params: &KrylovParams,
) -> Result<Vec<(f64, Vec<C64>)>, SpectraError> {
    let tol = params.tol_factor * scale.max(1e-300);
    let cap = params.max_iterations.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(params.start_seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<C64> {
        (0..dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };

    let mut v0 = random_vec(&mut rng);
    let n0 = norm(&v0);
    v0.iter_mut().for_each(|a| *a /= n0);
    let mut vs: Vec<Vec<C64>> = vec![v0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut worst = f64::INFINITY;
    let mut exhausted = false;

    for iteration in 0..cap {
        let j = vs.len() - 1;
        apply(&vs[j], &mut w)?;
        alphas.push(dot(&vs[j], &w).re);
        // full reorthogonalization, two passes; the first pass also
        // removes the α v_j and β v_{j-1} parts of the recurrence
        for _ in 0..2 {
            for v in &vs {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let beta = norm(&w);
        if beta > 1e-12 * scale.max(1.0) {
            betas.push(beta);
            vs.push(w.iter().map(|a| a / beta).collect());
        } else if vs.len() < dim {
            // invariant subspace: restart with a fresh direction so
            // remaining (possibly degenerate) levels stay reachable
            betas.push(0.0);
            let mut found = false;
            for _ in 0..32 {
                let mut fresh = random_vec(&mut rng);
                for _ in 0..2 {
                    for v in &vs {
                        let c = dot(v, &fresh);
                        for (fi, vi) in fresh.iter_mut().zip(v) {
                            *fi -= c * vi;
                        }
                    }
                }
                let fresh_norm = norm(&fresh);
                if fresh_norm > 1e-6 {
                    fresh.iter_mut().for_each(|a| *a /= fresh_norm);
                    vs.push(fresh);
                    found = true;
                    break;
                }
            }
            if !found {
                exhausted = true;
            }
        } else {
            exhausted = true;
        }

        let m = alphas.len();
        let check_now = m >= r && (m % 5 == 0 || iteration + 1 == cap || exhausted);
        if check_now {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| {
                eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap()
            });
            let tail_beta = betas.last().copied().unwrap_or(0.0);
            let bounds: Vec<f64> = order
                .iter()
                .take(r)
                .map(|&idx| (tail_beta * eig.eigenvectors[(m - 1, idx)]).abs())
                .collect();
            worst = bounds.iter().fold(0.0f64, |a, &b| a.max(b));
            if worst <= tol || exhausted {
                // assemble Ritz vectors y_i = Σ_j s_ji v_j
                let mut out = Vec::with_capacity(r);
                let mut ok = true;
                for &idx in order.iter().take(r) {
                    let mut y = vec![C64::new(0.0, 0.0); dim];
                    for (jj, v) in vs.iter().take(m).enumerate() {
                        let s = eig.eigenvectors[(jj, idx)];
                        for (yi, vi) in y.iter_mut().zip(v) {
                            *yi += vi * s;
                        }
                    }
                    let ny = norm(&y);
                    y.iter_mut().for_each(|a| *a /= ny);
                    // verify the true residual, not just the β bound
                    apply(&y, &mut w)?;
                    let theta = eig.eigenvalues[idx];
                    let res: f64 = w
                        .iter()
                        .zip(&y)
                        .map(|(hv, yv)| (hv - yv * theta).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    if res > 10.0 * tol && !exhausted {
                        ok = false;
                        break;
                    }
                    normalize_phase(&mut y);
                    out.push((theta, y));
                }
                if ok && out.len() == r {
                    return Ok(out);
                }
                if exhausted {
                    return Err(SpectraError::NonConvergence {
                        iterations: iteration + 1,
                        worst_residual: worst,
                        tolerance: tol,
                    });
                }
            }
        }
    }
    Err(SpectraError::NonConvergence {
        iterations: cap,
        worst_residual: worst,
        tolerance: tol,
    })
}

fn eig_generic(
    apply: &mut ApplyFn,
    dim: usize,
    scale: f64,
    r: usize,
    method: EigsMethod,
    params: &KrylovParams,
) -> Result<Vec<(f64, Vec<C64>)>, SpectraError> {
    if r == 0 || r > dim {
        return Err(SpectraError::TooManyEigenpairs { r, dim });
    }
    match method {
        EigsMethod::Dense => eig_dense(apply, dim, r),
        EigsMethod::Krylov => eig_krylov(apply, dim, scale, r, params),
        EigsMethod::Auto => {
            if dim <= AUTO_DENSE_DIM {
                eig_dense(apply, dim, r)
            } else {
                eig_krylov(apply, dim, scale, r, params)
            }
        }
    }
}

/// The `r` lowest eigenpairs of a Hermitian operator.
pub fn lowest_eigs(
    op: &OperatorHandle,
    r: usize,
    method: EigsMethod,
) -> Result<Vec<EigPair>, SpectraError> {
    lowest_eigs_with(op, r, method, &KrylovParams::default())
}

pub fn lowest_eigs_with(
    op: &OperatorHandle,
    r: usize,
    method: EigsMethod,
    params: &KrylovParams,
) -> Result<Vec<EigPair>, SpectraError> {
    let space = op.space().clone();
    let dim = space.dim();
    let mut src = StateVector::zeros(space.clone());
    let mut dst = StateVector::zeros(space.clone());
    let mut apply = |input: &[C64], output: &mut [C64]| -> Result<(), SpectraError> {
        src.amplitudes_mut().copy_from_slice(input);
        dst.amplitudes_mut().fill(C64::new(0.0, 0.0));
        op.apply_acc(&src, &mut dst, 1.0)?;
        output.copy_from_slice(dst.amplitudes());
        Ok(())
    };
    let pairs = eig_generic(&mut apply, dim, op.scale(), r, method, params)?;
    Ok(pairs
        .into_iter()
        .map(|(value, amps)| EigPair {
            value,
            vector: StateVector::new(space.clone(), amps).expect("solver preserves length"),
        })
        .collect())
}

// ---------------------------------------------------------------------
// spin-flip-even wrapper

/// Apply a flip-symmetric full-space operator inside the even sector
/// spanned by (|x⟩ + |x̄⟩)/√2, x̄ the bitwise complement. Representatives
/// are exactly the half-space with the top qubit 0, so even-sector index
/// i is the full-space index i.
struct EvenSectorApply<'a> {
    op: &'a OperatorHandle,
    n: usize,
    full_src: StateVector,
    full_dst: StateVector,
}

impl<'a> EvenSectorApply<'a> {
    fn new(op: &'a OperatorHandle) -> Result<Self, SpectraError> {
        let n = op.space().n();
        Ok(EvenSectorApply {
            op,
            n,
            full_src: StateVector::zeros(op.space().clone()),
            full_dst: StateVector::zeros(op.space().clone()),
        })
    }

    fn half_dim(&self) -> usize {
        1usize << (self.n - 1)
    }

    fn apply(&mut self, src: &[C64], dst: &mut [C64]) -> Result<(), SpectraError> {
        let mask = (1u64 << self.n) - 1;
        let root_half = 0.5f64.sqrt();
        let full = self.full_src.amplitudes_mut();
        full.fill(C64::new(0.0, 0.0));
        for (x, &a) in src.iter().enumerate() {
            full[x] = a * root_half;
            full[(x as u64 ^ mask) as usize] = a * root_half;
        }
        self.full_dst.amplitudes_mut().fill(C64::new(0.0, 0.0));
        self.op.apply_acc(&self.full_src, &mut self.full_dst, 1.0)?;
        let out = self.full_dst.amplitudes();
        let mut leakage_sq = 0.0f64;
        for (x, slot) in dst.iter_mut().enumerate() {
            let a = out[x];
            let b = out[(x as u64 ^ mask) as usize];
            *slot = (a + b) * root_half;
            leakage_sq += (a - b).norm_sqr() * 0.5;
        }
        let input_norm = norm(src).max(1e-300);
        let leakage = leakage_sq.sqrt() / (input_norm * self.op.scale().max(1e-300));
        if leakage > 1e-10 {
            return Err(SpectraError::NotFlipSymmetric { leakage });
        }
        Ok(())
    }

    /// Embed an even-sector vector back into the full space.
    fn embed(&self, src: &[C64]) -> StateVector {
        let mask = (1u64 << self.n) - 1;
        let root_half = 0.5f64.sqrt();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.n];
        for (x, &a) in src.iter().enumerate() {
            amps[x] = a * root_half;
            amps[(x as u64 ^ mask) as usize] = a * root_half;
        }
        StateVector::new(self.op.space().clone(), amps).expect("full-space length")
    }
}

/// Symmetry restriction applied before diagonalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SectorOption {
    Full,
    /// Σz sector with the given Hamming weight k.
    SigmaZ(usize),
    /// Spin-flip-even combinations (ising/hybrid symmetric sector).
    SpinFlipEven,
}

/// Eigenvalues at one g under a sector option (vectors discarded).
fn eigenvalues_at(
    pair: &InterpolatedOperator,
    sector_pair: Option<&InterpolatedOperator>,
    sector: SectorOption,
    g: f64,
    r: usize,
    method: EigsMethod,
    params: &KrylovParams,
) -> Result<Vec<f64>, SpectraError> {
    match sector {
        SectorOption::Full => {
            let op = pair.at(g)?;
            Ok(lowest_eigs_with(&op, r, method, params)?
                .into_iter()
                .map(|p| p.value)
                .collect())
        }
        SectorOption::SigmaZ(_) => {
            let op = sector_pair.expect("restricted pair prepared").at(g)?;
            Ok(lowest_eigs_with(&op, r, method, params)?
                .into_iter()
                .map(|p| p.value)
                .collect())
        }
        SectorOption::SpinFlipEven => {
            let op = pair.at(g)?;
            let mut wrapper = EvenSectorApply::new(&op)?;
            let dim = wrapper.half_dim();
            let scale = op.scale();
            let mut apply =
                |src: &[C64], dst: &mut [C64]| -> Result<(), SpectraError> { wrapper.apply(src, dst) };
            Ok(eig_generic(&mut apply, dim, scale, r, method, params)?
                .into_iter()
                .map(|(v, _)| v)
                .collect())
        }
    }
}

/// One grid point of a gap sweep: the `r` lowest eigenvalues at `g`.
#[derive(Clone, Debug)]
pub struct GapPoint {
    pub g: f64,
    pub eigenvalues: Vec<f64>,
}

/// Low-lying spectrum along the path, with the refined minimum gap.
#[derive(Clone, Debug)]
pub struct GapCurve {
    pub points: Vec<GapPoint>,
    /// min over g of E1 − E0, after golden-section refinement.
    pub min_gap: f64,
    /// Location of the minimum gap.
    pub g_star: f64,
}

/// Uniform grid over [0, 1] including both endpoints.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

fn validate_grid(grid: &[f64], require_endpoints: bool) -> Result<(), SpectraError> {
    if grid.len() < 2 {
        return Err(SpectraError::BadGrid("need at least two grid points".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SpectraError::BadGrid("grid must be strictly ascending".into()));
    }
    let (first, last) = (grid[0], *grid.last().unwrap());
    if first < 0.0 || last > 1.0 {
        return Err(SpectraError::BadGrid(format!(
            "grid range [{first}, {last}] escapes [0, 1]"
        )));
    }
    if require_endpoints && (first != 0.0 || last != 1.0) {
        return Err(SpectraError::BadGrid(
            "gap sweep grid must cover g = 0 and g = 1".into(),
        ));
    }
    Ok(())
}

/// Sweep the `r` lowest eigenvalues over the grid, then refine the gap
/// minimum by golden-section search down to 1e-4 in g.
pub fn gap_sweep(
    pair: &InterpolatedOperator,
    grid: &[f64],
    r: usize,
    sector: SectorOption,
    method: EigsMethod,
) -> Result<GapCurve, SpectraError> {
    validate_grid(grid, true)?;
    let r = r.max(2);
    let params = KrylovParams::default();
    let sector_pair = match sector {
        SectorOption::SigmaZ(k) => {
            let basis = SectorBasis::build(pair.space().n(), k)?;
            Some(pair.restrict(&basis)?)
        }
        _ => None,
    };

    let points: Vec<GapPoint> = grid
        .par_iter()
        .map(|&g| {
            let eigenvalues =
                eigenvalues_at(pair, sector_pair.as_ref(), sector, g, r, method, &params)
                    .map_err(at_g(g))?;
            Ok(GapPoint { g, eigenvalues })
        })
        .collect::<Result<Vec<_>, SpectraError>>()?;

    // coarse minimum of E1 − E0
    let (coarse_idx, _) = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.eigenvalues[1] - p.eigenvalues[0]))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("grid nonempty");
    let lo = if coarse_idx == 0 { grid[0] } else { grid[coarse_idx - 1] };
    let hi = if coarse_idx + 1 == grid.len() {
        grid[coarse_idx]
    } else {
        grid[coarse_idx + 1]
    };

    let gap_at = |g: f64| -> Result<f64, SpectraError> {
        let e = eigenvalues_at(pair, sector_pair.as_ref(), sector, g, 2, method, &params)
            .map_err(at_g(g))?;
        Ok(e[1] - e[0])
    };

    let (g_star, min_gap) = golden_section_min(lo, hi, 1e-4, gap_at)?;
    Ok(GapCurve {
        points,
        min_gap,
        g_star,
    })
}

/// Golden-section minimization of a unimodal-enough scalar function.
fn golden_section_min(
    mut a: f64,
    mut b: f64,
    width: f64,
    mut f: impl FnMut(f64) -> Result<f64, SpectraError>,
) -> Result<(f64, f64), SpectraError> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > width {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// One point of a scalar sweep, with a degeneracy flag.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub g: f64,
    pub value: f64,
    /// Ground state not unique within tolerance at this g; the value is
    /// basis-dependent and should not be trusted.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct OrderParameterCurve {
    pub points: Vec<CurvePoint>,
}

/// `⟨ψ0(g)| H_out − H_in |ψ0(g)⟩` along the grid; this equals dE0/dg
/// wherever the ground state is unique.
pub fn order_parameter(
    pair: &InterpolatedOperator,
    grid: &[f64],
    method: EigsMethod,
) -> Result<OrderParameterCurve, SpectraError> {
    validate_grid(grid, false)?;
    let params = KrylovParams::default();
    let points: Vec<CurvePoint> = grid
        .par_iter()
        .map(|&g| {
            let op = pair.at(g).map_err(|e| at_g(g)(e.into()))?;
            let eigs = lowest_eigs_with(&op, 2.min(op.space().dim()), method, &params)
                .map_err(at_g(g))?;
            let degenerate = eigs.len() > 1 && eigs[1].value - eigs[0].value <= DEGENERACY_TOL;
            let psi0 = &eigs[0].vector;
            let value = pair.h_out().expectation(psi0).map_err(|e| at_g(g)(e.into()))?
                - pair.h_in().expectation(psi0).map_err(|e| at_g(g)(e.into()))?;
            Ok(CurvePoint {
                g,
                value,
                degenerate,
            })
        })
        .collect::<Result<Vec<_>, SpectraError>>()?;
    Ok(OrderParameterCurve { points })
}

/// One grid point of the adiabatic-condition diagnostic.
#[derive(Clone, Debug)]
pub struct DiagnosticPoint {
    pub g: f64,
    /// `|⟨Ψ0|H_out − H_in|Ψ_j⟩| / (E_j − E_0)²` for j = 1..=n_excited.
    pub values: Vec<f64>,
    /// Set when some gap fell below tolerance; `values` is then empty.
    pub skipped: bool,
}

/// The textbook slow-evolution criterion along the grid. The maximum
/// over g sets the runtime scale the adiabatic theorem asks for.
pub fn adiabatic_diagnostic(
    pair: &InterpolatedOperator,
    grid: &[f64],
    n_excited: usize,
    sector: SectorOption,
    method: EigsMethod,
) -> Result<Vec<DiagnosticPoint>, SpectraError> {
    validate_grid(grid, false)?;
    let params = KrylovParams::default();
    let r = n_excited + 1;
    let sector_pair = match sector {
        SectorOption::SigmaZ(k) => {
            let basis = SectorBasis::build(pair.space().n(), k)?;
            Some(pair.restrict(&basis)?)
        }
        _ => None,
    };

    grid.par_iter()
        .map(|&g| {
            // eigenpairs in working coordinates plus a matrix-element
            // evaluator for dH = H_out − H_in in those coordinates
            let (eigs, elements): (Vec<(f64, Vec<C64>)>, Vec<Vec<C64>>) = match sector {
                SectorOption::SpinFlipEven => {
                    let op = pair.at(g).map_err(|e| at_g(g)(e.into()))?;
                    let mut wrapper = EvenSectorApply::new(&op).map_err(at_g(g))?;
                    let dim = wrapper.half_dim();
                    let scale = op.scale();
                    let pairs = {
                        let mut apply = |src: &[C64], dst: &mut [C64]| wrapper.apply(src, dst);
                        eig_generic(&mut apply, dim, scale, r.min(dim), method, &params)
                            .map_err(at_g(g))?
                    };
                    // dH applied to each embedded eigenvector, kept in
                    // full space for the inner products below
                    let dh_applied = pairs
                        .iter()
                        .map(|(_, v)| {
                            let full = wrapper.embed(v);
                            let mut out = StateVector::zeros(full.space().clone());
                            pair.h_out().apply_acc(&full, &mut out, 1.0)?;
                            pair.h_in().apply_acc(&full, &mut out, -1.0)?;
                            Ok(out.amplitudes().to_vec())
                        })
                        .collect::<Result<Vec<_>, SpectraError>>()
                        .map_err(at_g(g))?;
                    let embedded = pairs
                        .iter()
                        .map(|(e, v)| (*e, wrapper.embed(v).amplitudes().to_vec()))
                        .collect();
                    (embedded, dh_applied)
                }
                _ => {
                    let op = match sector {
                        SectorOption::Full => pair.at(g).map_err(|e| at_g(g)(e.into()))?,
                        SectorOption::SigmaZ(_) => sector_pair
                            .as_ref()
                            .expect("restricted pair prepared")
                            .at(g)
                            .map_err(|e| at_g(g)(e.into()))?,
                        SectorOption::SpinFlipEven => unreachable!(),
                    };
                    let work_pair = match sector {
                        SectorOption::SigmaZ(_) => sector_pair.as_ref().unwrap(),
                        _ => pair,
                    };
                    let eigs = lowest_eigs_with(&op, r.min(op.space().dim()), method, &params)
                        .map_err(at_g(g))?;
                    let dh_applied = eigs
                        .iter()
                        .map(|p| {
                            let mut out = StateVector::zeros(p.vector.space().clone());
                            work_pair.h_out().apply_acc(&p.vector, &mut out, 1.0)?;
                            work_pair.h_in().apply_acc(&p.vector, &mut out, -1.0)?;
                            Ok(out.amplitudes().to_vec())
                        })
                        .collect::<Result<Vec<_>, SpectraError>>()
                        .map_err(at_g(g))?;
                    (
                        eigs.into_iter()
                            .map(|p| (p.value, p.vector.amplitudes().to_vec()))
                            .collect(),
                        dh_applied,
                    )
                }
            };

            let e0 = eigs[0].0;
            let psi0 = &eigs[0].1;
            if eigs.iter().skip(1).any(|(e, _)| e - e0 <= DEGENERACY_TOL) {
                return Ok(DiagnosticPoint {
                    g,
                    values: Vec::new(),
                    skipped: true,
                });
            }
            let values = eigs
                .iter()
                .zip(&elements)
                .skip(1)
                .map(|((e, _), dh_j)| {
                    let element = dot(psi0, dh_j).norm();
                    element / (e - e0).powi(2)
                })
                .collect();
            Ok(DiagnosticPoint {
                g,
                values,
                skipped: false,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------
// CSV output

fn fmt_g(x: f64) -> String {
    format!("{x:.12e}")
}

/// `g,E0,E1,...` with one row per grid point.
pub fn write_gap_csv(curve: &GapCurve, path: &Path) -> Result<(), SpectraError> {
    let r = curve.points.first().map(|p| p.eigenvalues.len()).unwrap_or(0);
    let mut out = String::new();
    out.push('g');
    for i in 0..r {
        out.push_str(&format!(",E{i}"));
    }
    out.push('\n');
    for p in &curve.points {
        out.push_str(&fmt_g(p.g));
        for e in &p.eigenvalues {
            out.push(',');
            out.push_str(&fmt_g(*e));
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// `g,value,flag` rows; flag 1 marks degenerate/skipped points.
pub fn write_value_flag_csv(
    points: impl IntoIterator<Item = (f64, f64, bool)>,
    path: &Path,
) -> Result<(), SpectraError> {
    let mut out = String::from("g,value,flag\n");
    for (g, value, flag) in points {
        out.push_str(&format!("{},{},{}\n", fmt_g(g), fmt_g(value), flag as u8));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
