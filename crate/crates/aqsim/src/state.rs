//! Basis conventions, state vectors, and inner products.
//!
//! Conventions, fixed here and asserted by tests everywhere else:
//! - Qubit labels are 1-based: qubit `α ∈ {1..n}` lives at bit position
//!   `α - 1`, so qubit 1 is the least significant bit of a basis index.
//! - A basis index `x ∈ [0, 2^n)` encodes the bit string `(z_1, ..., z_n)`.
//! - The bit value `z_α ∈ {0, 1}` maps to the σz eigenvalue
//!   `s_α = 1 - 2 z_α ∈ {+1, -1}`.
//!
//! Full-space amplitude arrays are capped at `n ≤ 24` qubits; sector
//! spaces may have larger `n` as long as `C(n, k)` fits the dimension
//! budget (see [`crate::sector`]).

use std::sync::Arc;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::sector::SectorBasis;

/// Hard cap on the qubit count for full `2^n` amplitude arrays.
pub const MAX_FULL_QUBITS: usize = 24;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("qubit count {0} outside supported range 1..={MAX_FULL_QUBITS}")]
    QubitCountOutOfRange(usize),
    #[error("space mismatch: {0} vs {1}")]
    SpaceMismatch(SpaceKey, SpaceKey),
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: u64, dim: usize },
    #[error("amplitude array length {got} does not match space dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
}

/// Bit value `z_α` of qubit `α` (1-based) in basis index `x`.
#[inline]
pub fn bit_of(x: u64, qubit: usize) -> u64 {
    (x >> (qubit - 1)) & 1
}

/// σz eigenvalue `s_α = 1 - 2 z_α ∈ {+1, -1}` of qubit `α` (1-based).
#[inline]
pub fn spin_of(x: u64, qubit: usize) -> f64 {
    1.0 - 2.0 * bit_of(x, qubit) as f64
}

/// Σz eigenvalue `n - 2·popcount(x)` of basis state `x`.
#[inline]
pub fn sigma_z_of(x: u64, n: usize) -> i64 {
    n as i64 - 2 * x.count_ones() as i64
}

/// The vector space a state or operator lives on: either the full
/// `2^n`-dimensional space of `n` qubits or a fixed-Hamming-weight sector.
#[derive(Clone)]
pub enum Space {
    Full { n: usize },
    Sector(Arc<SectorBasis>),
}

/// Value-comparable descriptor of a [`Space`]. Two sector bases with equal
/// `(n, k)` enumerate identical states, so key equality is space equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKey {
    Full { n: usize },
    Sector { n: usize, k: usize },
}

impl std::fmt::Display for SpaceKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpaceKey::Full { n } => write!(f, "full(n={n})"),
            SpaceKey::Sector { n, k } => write!(f, "sector(n={n}, k={k})"),
        }
    }
}

impl std::fmt::Debug for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl Space {
    pub fn full(n: usize) -> Result<Self, StateError> {
        if n == 0 || n > MAX_FULL_QUBITS {
            return Err(StateError::QubitCountOutOfRange(n));
        }
        Ok(Space::Full { n })
    }

    pub fn n(&self) -> usize {
        match self {
            Space::Full { n } => *n,
            Space::Sector(basis) => basis.n(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Full { n } => 1usize << n,
            Space::Sector(basis) => basis.dim(),
        }
    }

    pub fn key(&self) -> SpaceKey {
        match self {
            Space::Full { n } => SpaceKey::Full { n: *n },
            Space::Sector(basis) => SpaceKey::Sector {
                n: basis.n(),
                k: basis.k(),
            },
        }
    }

    pub fn same_as(&self, other: &Space) -> bool {
        self.key() == other.key()
    }

    pub fn sector_basis(&self) -> Option<&Arc<SectorBasis>> {
        match self {
            Space::Full { .. } => None,
            Space::Sector(basis) => Some(basis),
        }
    }

    /// Full-space basis index of local index `i` (identity on full spaces).
    pub fn member(&self, i: usize) -> u64 {
        match self {
            Space::Full { .. } => i as u64,
            Space::Sector(basis) => basis.unrank(i),
        }
    }
}

/// Complex amplitude vector over the basis of a [`Space`]. Unit norm is
/// expected (within 1e-6) whenever a state crosses a module boundary.
#[derive(Clone, Debug)]
pub struct StateVector {
    space: Space,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(space: Space, amps: Vec<C64>) -> Result<Self, StateError> {
        if amps.len() != space.dim() {
            return Err(StateError::DimensionMismatch {
                got: amps.len(),
                want: space.dim(),
            });
        }
        Ok(StateVector { space, amps })
    }

    pub fn zeros(space: Space) -> Self {
        let dim = space.dim();
        StateVector {
            space,
            amps: vec![C64::new(0.0, 0.0); dim],
        }
    }

    /// Computational basis state `|x⟩` in the full space of `n` qubits.
    pub fn basis_state(n: usize, x: u64) -> Result<Self, StateError> {
        let space = Space::full(n)?;
        let dim = space.dim();
        if x >= dim as u64 {
            return Err(StateError::IndexOutOfRange { index: x, dim });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[x as usize] = C64::new(1.0, 0.0);
        Ok(StateVector { space, amps })
    }

    /// Basis state of a sector space, addressed by its full-space index.
    pub fn sector_basis_state(basis: &Arc<SectorBasis>, x: u64) -> Result<Self, StateError> {
        let rank = basis.rank(x).ok_or(StateError::IndexOutOfRange {
            index: x,
            dim: basis.dim(),
        })?;
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[rank] = C64::new(1.0, 0.0);
        Ok(StateVector {
            space: Space::Sector(Arc::clone(basis)),
            amps,
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    /// Expectation `⟨ψ|Σz|ψ⟩ / ⟨ψ|ψ⟩`. In a sector space this is the
    /// sector's Δ exactly, since every member has the same Σz eigenvalue.
    pub fn sigma_z_expectation(&self) -> f64 {
        let n = self.space.n();
        let weighted: f64 = match &self.space {
            Space::Full { .. } => self
                .amps
                .iter()
                .enumerate()
                .map(|(x, a)| sigma_z_of(x as u64, n) as f64 * a.norm_sqr())
                .sum(),
            Space::Sector(basis) => {
                return basis.delta() as f64;
            }
        };
        weighted / self.norm_sq()
    }

    /// Embed a sector state into the full `2^n` space (identity on full
    /// states).
    pub fn embed_full(&self) -> Result<StateVector, StateError> {
        match &self.space {
            Space::Full { .. } => Ok(self.clone()),
            Space::Sector(basis) => {
                let full = Space::full(basis.n())?;
                let mut amps = vec![C64::new(0.0, 0.0); full.dim()];
                for (i, &a) in self.amps.iter().enumerate() {
                    amps[basis.unrank(i) as usize] = a;
                }
                Ok(StateVector { space: full, amps })
            }
        }
    }
}

/// Inner product `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<C64, StateError> {
    if !a.space.same_as(&b.space) {
        return Err(StateError::SpaceMismatch(a.space.key(), b.space.key()));
    }
    Ok(inner_slices(&a.amps, &b.amps))
}

pub(crate) fn inner_slices(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// The uniform superposition `|s⟩ = Σ_x |x⟩ / √(2^n)`.
pub fn uniform_state(n: usize) -> Result<StateVector, StateError> {
    let space = Space::full(n)?;
    let dim = space.dim();
    let amp = C64::new((dim as f64).sqrt().recip(), 0.0);
    Ok(StateVector {
        space,
        amps: vec![amp; dim],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_map_round_trips() {
        for x in 0u64..16 {
            for alpha in 1..=4 {
                let z = bit_of(x, alpha);
                let s = spin_of(x, alpha);
                assert!(s == 1.0 || s == -1.0);
                assert_eq!(z as f64, (1.0 - s) / 2.0);
            }
        }
    }

    #[test]
    fn qubit_one_is_least_significant() {
        // index 1 = bit string 100... = z_1 = 1, all others 0
        assert_eq!(bit_of(1, 1), 1);
        assert_eq!(bit_of(1, 2), 0);
        assert_eq!(spin_of(1, 1), -1.0);
        assert_eq!(spin_of(0b10, 2), -1.0);
    }

    #[test]
    fn sigma_z_counts_zeros_minus_ones() {
        assert_eq!(sigma_z_of(0b000, 3), 3);
        assert_eq!(sigma_z_of(0b111, 3), -3);
        assert_eq!(sigma_z_of(0b101, 3), -1);
    }

    #[test]
    fn uniform_state_definition() {
        let s1 = uniform_state(1).unwrap();
        let inv_sqrt2 = 0.5f64.sqrt();
        assert!((s1.amplitudes()[0].re - inv_sqrt2).abs() < 1e-15);
        assert!((s1.amplitudes()[1].re - inv_sqrt2).abs() < 1e-15);

        let s2 = uniform_state(2).unwrap();
        for a in s2.amplitudes() {
            assert!((a.re - 0.5).abs() < 1e-15);
            assert_eq!(a.im, 0.0);
        }

        let s10 = uniform_state(10).unwrap();
        assert_eq!(s10.dim(), 1024);
        for a in s10.amplitudes() {
            assert!((a.re - 2f64.powi(-5)).abs() < 1e-15);
        }
        assert!((s10.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_state_rejects_out_of_range_n() {
        assert!(uniform_state(0).is_err());
        assert!(uniform_state(MAX_FULL_QUBITS + 1).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let psi = uniform_state(4).unwrap();
        let self_overlap = inner(&psi, &psi).unwrap();
        assert!((self_overlap.re - 1.0).abs() < 1e-12);
        assert!(self_overlap.im.abs() < 1e-15);

        let z00 = StateVector::basis_state(2, 0).unwrap();
        let z11 = StateVector::basis_state(2, 3).unwrap();
        assert_eq!(inner(&z00, &z11).unwrap(), C64::new(0.0, 0.0));

        // ⟨s|w⟩ = 1/√N with N = 16
        let w = StateVector::basis_state(4, 7).unwrap();
        let overlap = inner(&psi, &w).unwrap();
        assert!((overlap.re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let mut a = StateVector::basis_state(2, 1).unwrap();
        a.amplitudes_mut()[1] = C64::new(0.0, 1.0);
        let b = StateVector::basis_state(2, 1).unwrap();
        let ab = inner(&a, &b).unwrap();
        assert!((ab - C64::new(0.0, -1.0)).norm() < 1e-15);
        let aa = inner(&a, &a).unwrap();
        assert!(aa.im.abs() < 1e-15);
        assert!(aa.re >= 0.0);
    }

    #[test]
    fn inner_rejects_space_mismatch() {
        let a = uniform_state(3).unwrap();
        let b = uniform_state(4).unwrap();
        assert!(matches!(
            inner(&a, &b),
            Err(StateError::SpaceMismatch(_, _))
        ));
    }
}
