//! Hamiltonian families and the linear interpolation between them.
//!
//! Each scheme is a pair `(H_in, H_out)` traversed as
//! `H(g) = (1-g)·H_in + g·H_out`:
//!
//! - `grover`: projector pair `1 - |s⟩⟨s|` → `1 - |w⟩⟨w|`.
//! - `ising`: transverse field `-Σ σx` → ferromagnetic ring `-Σ σz σz`.
//! - `hybrid`: Grover's initial projector with the Ising final Hamiltonian.
//! - `conventional`: clause-participation-weighted transverse field →
//!   count of violated clauses (penalty 1 each).
//! - `heisenberg_ec3`: isotropic ferromagnet built from the clause
//!   couplings → frustrated antiferromagnet with zero ground energy.
//! - `xy_ec3`: the same ferromagnet with only its xx+yy (hop) part.
//!
//! The last two commute with `Σz`, which is what makes sector-restricted
//! evolution possible.

use std::sync::Arc;

use thiserror::Error;

use crate::instances::{coupling_data, Ec3Instance};
use crate::operator::{OperatorBuilder, OperatorError, OperatorHandle};
use crate::sector::{SectorBasis, SectorError};
use crate::state::{bit_of, uniform_state, Space, StateError, StateVector};

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("marked state {w} out of range for n = {n} qubits")]
    MarkedOutOfRange { w: u64, n: usize },
    #[error("scheme {0} requires n ≥ 2")]
    TooFewQubits(&'static str),
    #[error("interpolation parameter g = {0} outside [0, 1]")]
    GOutOfRange(f64),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// The six scheme names; the strings are the CLI vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeName {
    Grover,
    Ising,
    Hybrid,
    Conventional,
    HeisenbergEc3,
    XyEc3,
}

impl SchemeName {
    pub const ALL: [SchemeName; 6] = [
        SchemeName::Grover,
        SchemeName::Ising,
        SchemeName::Hybrid,
        SchemeName::Conventional,
        SchemeName::HeisenbergEc3,
        SchemeName::XyEc3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeName::Grover => "grover",
            SchemeName::Ising => "ising",
            SchemeName::Hybrid => "hybrid",
            SchemeName::Conventional => "conventional",
            SchemeName::HeisenbergEc3 => "heisenberg_ec3",
            SchemeName::XyEc3 => "xy_ec3",
        }
    }

    /// Does the scheme take an exact cover-3 instance?
    pub fn needs_instance(&self) -> bool {
        matches!(
            self,
            SchemeName::Conventional | SchemeName::HeisenbergEc3 | SchemeName::XyEc3
        )
    }

    /// Does `H(g)` commute with `Σz` for every g?
    pub fn conserves_sigma_z(&self) -> bool {
        matches!(self, SchemeName::HeisenbergEc3 | SchemeName::XyEc3)
    }
}

impl std::fmt::Display for SchemeName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchemeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeName::ALL
            .iter()
            .copied()
            .find(|name| name.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = SchemeName::ALL.iter().map(|n| n.as_str()).collect();
                format!("unknown scheme {s:?}; expected one of {}", known.join(", "))
            })
    }
}

/// A fully parameterized scheme, ready to build.
#[derive(Clone, Debug)]
pub enum SchemeSpec {
    Grover { n: usize, marked: u64 },
    Ising { n: usize },
    Hybrid { n: usize },
    Conventional { instance: Ec3Instance },
    HeisenbergEc3 { instance: Ec3Instance },
    XyEc3 { instance: Ec3Instance },
}

impl SchemeSpec {
    pub fn name(&self) -> SchemeName {
        match self {
            SchemeSpec::Grover { .. } => SchemeName::Grover,
            SchemeSpec::Ising { .. } => SchemeName::Ising,
            SchemeSpec::Hybrid { .. } => SchemeName::Hybrid,
            SchemeSpec::Conventional { .. } => SchemeName::Conventional,
            SchemeSpec::HeisenbergEc3 { .. } => SchemeName::HeisenbergEc3,
            SchemeSpec::XyEc3 { .. } => SchemeName::XyEc3,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SchemeSpec::Grover { n, .. } | SchemeSpec::Ising { n } | SchemeSpec::Hybrid { n } => *n,
            SchemeSpec::Conventional { instance }
            | SchemeSpec::HeisenbergEc3 { instance }
            | SchemeSpec::XyEc3 { instance } => instance.n(),
        }
    }

    pub fn instance(&self) -> Option<&Ec3Instance> {
        match self {
            SchemeSpec::Conventional { instance }
            | SchemeSpec::HeisenbergEc3 { instance }
            | SchemeSpec::XyEc3 { instance } => Some(instance),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<InterpolatedOperator, HamiltonianError> {
        match self {
            SchemeSpec::Grover { n, marked } => build_grover(*n, *marked),
            SchemeSpec::Ising { n } => build_ising(*n),
            SchemeSpec::Hybrid { n } => build_hybrid(*n),
            SchemeSpec::Conventional { instance } => build_conventional(instance),
            SchemeSpec::HeisenbergEc3 { instance } => Ok(InterpolatedOperator::new(
                build_heisenberg_in(instance)?,
                build_ec3_out(instance)?,
            )),
            SchemeSpec::XyEc3 { instance } => Ok(InterpolatedOperator::new(
                build_xy_in(instance)?,
                build_ec3_out(instance)?,
            )),
        }
    }
}

/// An `(H_in, H_out)` pair; `at(g)` is the lazy combination
/// `(1-g)·H_in + g·H_out`, exact at both endpoints.
#[derive(Clone, Debug)]
pub struct InterpolatedOperator {
    h_in: Arc<OperatorHandle>,
    h_out: Arc<OperatorHandle>,
}

impl InterpolatedOperator {
    pub fn new(h_in: OperatorHandle, h_out: OperatorHandle) -> Self {
        assert!(
            h_in.space().same_as(h_out.space()),
            "H_in and H_out must share a space"
        );
        InterpolatedOperator {
            h_in: Arc::new(h_in),
            h_out: Arc::new(h_out),
        }
    }

    pub fn h_in(&self) -> &OperatorHandle {
        &self.h_in
    }

    pub fn h_out(&self) -> &OperatorHandle {
        &self.h_out
    }

    pub fn space(&self) -> &Space {
        self.h_in.space()
    }

    pub fn at(&self, g: f64) -> Result<OperatorHandle, HamiltonianError> {
        if !(0.0..=1.0).contains(&g) || !g.is_finite() {
            return Err(HamiltonianError::GOutOfRange(g));
        }
        Ok(OperatorHandle::sum(vec![
            (1.0 - g, Arc::clone(&self.h_in)),
            (g, Arc::clone(&self.h_out)),
        ])?)
    }

    /// Norm bound valid for every g in [0, 1].
    pub fn scale_bound(&self) -> f64 {
        self.h_in.scale().max(self.h_out.scale())
    }

    /// Restrict both endpoints to a Σz sector.
    pub fn restrict(&self, basis: &Arc<SectorBasis>) -> Result<Self, SectorError> {
        Ok(InterpolatedOperator {
            h_in: Arc::new(crate::sector::restrict(&self.h_in, basis)?),
            h_out: Arc::new(crate::sector::restrict(&self.h_out, basis)?),
        })
    }
}

/// Convenience free function mirroring [`InterpolatedOperator::at`].
pub fn interpolate(
    pair: &InterpolatedOperator,
    g: f64,
) -> Result<OperatorHandle, HamiltonianError> {
    pair.at(g)
}

/// `H_in = 1 - |s⟩⟨s|`, `H_out = 1 - |w⟩⟨w|` for a marked basis state w.
pub fn build_grover(n: usize, marked: u64) -> Result<InterpolatedOperator, HamiltonianError> {
    let space = Space::full(n)?;
    if n < 64 && marked >> n != 0 {
        return Err(HamiltonianError::MarkedOutOfRange { w: marked, n });
    }
    let h_in = OperatorBuilder::new(space.clone())
        .constant(1.0)?
        .rank_one(uniform_state(n)?, -1.0)?
        .build();
    let h_out = OperatorBuilder::new(space)
        .constant(1.0)?
        .rank_one(StateVector::basis_state(n, marked)?, -1.0)?
        .build();
    Ok(InterpolatedOperator::new(h_in, h_out))
}

/// Number of neighboring bit pairs (periodic) on which `x` disagrees.
fn ring_domain_walls(x: u64, n: usize) -> u32 {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let rotated = ((x >> 1) | (x << (n - 1))) & mask;
    (x ^ rotated).count_ones()
}

/// `H_in = -Σ_α σx_α`, `H_out = -Σ_α σz_α σz_{α+1}` with periodic closure.
pub fn build_ising(n: usize) -> Result<InterpolatedOperator, HamiltonianError> {
    if n < 2 {
        return Err(HamiltonianError::TooFewQubits("ising"));
    }
    let space = Space::full(n)?;
    let mut b = OperatorBuilder::new(space.clone());
    for q in 1..=n {
        b = b.flip(q, -1.0)?;
    }
    let h_in = b.build();
    let diag: Vec<f64> = (0..space.dim() as u64)
        .map(|x| {
            let walls = ring_domain_walls(x, n);
            // aligned bonds contribute -1, walls +1
            -(n as f64 - 2.0 * walls as f64)
        })
        .collect();
    let h_out = OperatorHandle::from_diagonal(space, diag)?;
    Ok(InterpolatedOperator::new(h_in, h_out))
}

/// Grover's initial projector with the Ising ring final Hamiltonian.
pub fn build_hybrid(n: usize) -> Result<InterpolatedOperator, HamiltonianError> {
    if n < 2 {
        return Err(HamiltonianError::TooFewQubits("hybrid"));
    }
    let grover = build_grover(n, 0)?;
    let ising = build_ising(n)?;
    Ok(InterpolatedOperator {
        h_in: Arc::clone(&grover.h_in),
        h_out: Arc::clone(&ising.h_out),
    })
}

/// Penalty of a single clause given how many of its three bits are 1:
/// `(s_α + s_β + s_γ - 1)² / 4` with s = 1 - 2z.
fn clause_penalty(ones: u32) -> f64 {
    match ones {
        0 => 1.0,
        1 => 0.0,
        2 => 1.0,
        3 => 4.0,
        _ => unreachable!("a clause has three members"),
    }
}

/// Antiferromagnet final Hamiltonian: diagonal with eigenvalue
/// `Σ_clauses (s_α + s_β + s_γ - 1)² / 4` at each basis state. The
/// additive constant m is kept so the ground energy is exactly 0 at
/// satisfying assignments.
pub fn build_ec3_out(inst: &Ec3Instance) -> Result<OperatorHandle, HamiltonianError> {
    let space = Space::full(inst.n())?;
    let masks: Vec<u64> = inst.clauses().iter().map(|c| c.mask()).collect();
    let diag: Vec<f64> = (0..space.dim() as u64)
        .map(|x| {
            masks
                .iter()
                .map(|&m| clause_penalty((x & m).count_ones()))
                .sum()
        })
        .collect();
    Ok(OperatorHandle::from_diagonal(space, diag)?)
}

/// Ferromagnetic initial Hamiltonian `-(1/4) Σ_{α≠β} M_{αβ} σ_α·σ_β`:
/// per unordered coupled pair, a diagonal part `-(1/2) M s_α s_β` and a
/// hop of amplitude `-M`. Commutes with Σz.
pub fn build_heisenberg_in(inst: &Ec3Instance) -> Result<OperatorHandle, HamiltonianError> {
    let n = inst.n();
    let space = Space::full(n)?;
    let pairs = coupling_data(inst).coupled_pairs();
    let diag: Vec<f64> = (0..space.dim() as u64)
        .map(|x| {
            pairs
                .iter()
                .map(|&(a, b, m)| {
                    let aligned = bit_of(x, a) == bit_of(x, b);
                    let zz = if aligned { 1.0 } else { -1.0 };
                    -0.5 * m as f64 * zz
                })
                .sum()
        })
        .collect();
    let mut b = OperatorBuilder::new(space).diagonal(diag)?;
    for &(p, q, m) in &pairs {
        b = b.exchange(p, q, -(m as f64))?;
    }
    Ok(b.build())
}

/// The xx+yy part of the ferromagnet alone: pure hops of amplitude
/// `-M_{αβ}`, no diagonal. Commutes with Σz.
pub fn build_xy_in(inst: &Ec3Instance) -> Result<OperatorHandle, HamiltonianError> {
    let space = Space::full(inst.n())?;
    let mut b = OperatorBuilder::new(space);
    for (p, q, m) in coupling_data(inst).coupled_pairs() {
        b = b.exchange(p, q, -(m as f64))?;
    }
    Ok(b.build())
}

/// Baseline scheme: `H_out` counts violated clauses (penalty 1 each);
/// `H_in = Σ_α N_α (1 - σx_α)/2`, whose ground state is `|s⟩` at energy 0.
pub fn build_conventional(inst: &Ec3Instance) -> Result<InterpolatedOperator, HamiltonianError> {
    let space = Space::full(inst.n())?;
    let masks: Vec<u64> = inst.clauses().iter().map(|c| c.mask()).collect();
    let diag: Vec<f64> = (0..space.dim() as u64)
        .map(|x| {
            masks
                .iter()
                .filter(|&&m| (x & m).count_ones() != 1)
                .count() as f64
        })
        .collect();
    let h_out = OperatorHandle::from_diagonal(space.clone(), diag)?;

    let nvec = coupling_data(inst).nvec;
    let total: f64 = nvec.iter().map(|&v| v as f64).sum();
    let mut b = OperatorBuilder::new(space).constant(total / 2.0)?;
    for (i, &nv) in nvec.iter().enumerate() {
        if nv != 0 {
            b = b.flip(i + 1, -(nv as f64) / 2.0)?;
        }
    }
    Ok(InterpolatedOperator::new(b.build(), h_out))
}
