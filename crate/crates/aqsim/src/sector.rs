//! Fixed-Hamming-weight (Σz) sector machinery.
//!
//! The exact cover-3 Hamiltonian pairs built from exchange hops commute
//! with the total magnetization `Σz = Σ_α σz_α`, so the dynamics stays in
//! the eigenspace `Σz|Ψ⟩ = Δ|Ψ⟩` spanned by the bit strings with exactly
//! `k = (n - Δ)/2` ones. This module enumerates those bases, ranks and
//! unranks members via the combinatorial number system, projects the
//! uniform superposition into a sector, and restricts Σz-commuting
//! operators to the `C(n, k)`-dimensional space.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::instances::Ec3Instance;
use crate::operator::OperatorHandle;
use crate::state::{Space, StateVector};

/// Dimension budget for a single sector basis enumeration.
pub const MAX_SECTOR_DIM: usize = 1 << 26;

#[derive(Debug, Error)]
pub enum SectorError {
    #[error("weight k={k} out of range for n={n}")]
    WeightOutOfRange { n: usize, k: usize },
    #[error("sector dimension C({n},{k}) = {dim} exceeds budget {MAX_SECTOR_DIM}")]
    DimOverBudget { n: usize, k: usize, dim: u64 },
    #[error("n - Δ = {0} is odd; Σz eigenvalue Δ must have the parity of n")]
    BadDeltaParity(i64),
    #[error("operator does not commute with Σz: {term}")]
    NotSigmaZInvariant { term: String },
}

/// Binomial coefficient `C(n, k)` as an exact `u64` (valid for `n ≤ 64`).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    // u128 intermediates: the running product can overflow u64 one
    // multiplication before the division brings it back (e.g. C(64, 32))
    let mut result: u128 = 1;
    for i in 1..=k {
        result = result * (n as u128 - (k as u128 - i as u128)) / i as u128;
    }
    result as u64
}

/// Enumeration of all `n`-bit strings with exactly `k` ones, in ascending
/// numeric order, with O(k) rank/unrank via the combinatorial number
/// system.
pub struct SectorBasis {
    n: usize,
    k: usize,
    states: Vec<u64>,
}

impl SectorBasis {
    /// Build the complete sector basis for Hamming weight `k` on `n` bits.
    pub fn build(n: usize, k: usize) -> Result<Arc<Self>, SectorError> {
        if n == 0 || n > 64 || k > n {
            return Err(SectorError::WeightOutOfRange { n, k });
        }
        let dim = binomial(n, k);
        if dim > MAX_SECTOR_DIM as u64 {
            return Err(SectorError::DimOverBudget { n, k, dim });
        }
        let mut states = Vec::with_capacity(dim as usize);
        if k == 0 {
            states.push(0);
        } else {
            // Gosper's hack: next-higher integer with the same popcount.
            let limit = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            let mut x = (1u64 << k) - 1;
            loop {
                states.push(x);
                if states.len() == dim as usize {
                    break;
                }
                let c = x & x.wrapping_neg();
                let r = x + c;
                x = (((r ^ x) >> 2) / c) | r;
                debug_assert!(x <= limit);
            }
        }
        Ok(Arc::new(SectorBasis { n, k, states }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Σz eigenvalue `Δ = n - 2k` shared by every member.
    pub fn delta(&self) -> i64 {
        self.n as i64 - 2 * self.k as i64
    }

    /// Full-space basis index of sector rank `i`.
    #[inline]
    pub fn unrank(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn members(&self) -> &[u64] {
        &self.states
    }

    /// Sector rank of full-space index `x`, or `None` if `popcount(x) != k`.
    ///
    /// Ascending numeric order on fixed-popcount masks is colexicographic
    /// order on the set-bit positions, so the rank is
    /// `Σ_i C(c_i, i+1)` over the ascending positions `c_0 < c_1 < ...`.
    pub fn rank(&self, x: u64) -> Option<usize> {
        if x.count_ones() as usize != self.k || (self.n < 64 && x >> self.n != 0) {
            return None;
        }
        let mut rank = 0u64;
        let mut rest = x;
        let mut i = 1usize;
        while rest != 0 {
            let pos = rest.trailing_zeros() as usize;
            rank += binomial(pos, i);
            rest &= rest - 1;
            i += 1;
        }
        Some(rank as usize)
    }
}

impl std::fmt::Debug for SectorBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SectorBasis(n={}, k={}, dim={})",
            self.n,
            self.k,
            self.dim()
        )
    }
}

/// Normalized projection of the uniform superposition `|s⟩` onto the
/// sector: every member amplitude equals `C(n,k)^{-1/2}`.
///
/// The Fourier-sum projector applied to `|s⟩` carries total weight
/// `C(n,k)/2^n` inside the sector and zero outside; this returns the
/// normalized state the algorithm actually starts from.
pub fn project_uniform(basis: &Arc<SectorBasis>) -> StateVector {
    let amp = C64::new((basis.dim() as f64).sqrt().recip(), 0.0);
    StateVector::new(Space::Sector(Arc::clone(basis)), vec![amp; basis.dim()])
        .expect("length matches dim by construction")
}

/// A target Σz eigenvalue and the Hamming weight it selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectorChoice {
    pub delta: i64,
    pub k: usize,
}

impl SectorChoice {
    pub fn from_delta(n: usize, delta: i64) -> Result<Self, SectorError> {
        let diff = n as i64 - delta;
        if diff % 2 != 0 || diff < 0 || diff > 2 * n as i64 {
            return Err(SectorError::BadDeltaParity(delta));
        }
        Ok(SectorChoice {
            delta,
            k: (diff / 2) as usize,
        })
    }

    pub fn from_weight(n: usize, k: usize) -> Result<Self, SectorError> {
        if k > n {
            return Err(SectorError::WeightOutOfRange { n, k });
        }
        Ok(SectorChoice {
            delta: n as i64 - 2 * k as i64,
            k,
        })
    }
}

/// The solution's true sector (testing mode): `k` = number of ones in the
/// known solution.
pub fn solution_sector(inst: &Ec3Instance) -> Option<SectorChoice> {
    inst.solution().map(|sol| {
        SectorChoice::from_weight(inst.n(), sol.count_ones() as usize)
            .expect("popcount of an n-bit string is within 0..=n")
    })
}

/// Candidate sectors for the linear-overhead Δ sweep, ordered by distance
/// of `k` from `n/3` (the empirical peak for hard instances), nearest
/// first, ties toward smaller `k`.
pub fn scan_order(n: usize) -> Vec<SectorChoice> {
    let target = n as f64 / 3.0;
    let mut ks: Vec<usize> = (0..=n).collect();
    ks.sort_by(|&a, &b| {
        let da = (a as f64 - target).abs();
        let db = (b as f64 - target).abs();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    ks.into_iter()
        .map(|k| SectorChoice::from_weight(n, k).unwrap())
        .collect()
}

/// Restrict a Σz-commuting full-space operator to a sector basis.
///
/// Diagonal entries are gathered at the member indices; exchange hops are
/// kept with a precomputed partner table; single-bit flips and rank-one
/// projectors with support outside the sector are rejected, naming the
/// offending term.
pub fn restrict(
    op: &OperatorHandle,
    basis: &Arc<SectorBasis>,
) -> Result<OperatorHandle, SectorError> {
    op.restrict_to_sector(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::inner;

    #[test]
    fn small_enumerations() {
        let b = SectorBasis::build(3, 1).unwrap();
        assert_eq!(b.members(), &[1, 2, 4]);
        assert_eq!(b.dim(), 3);

        let b = SectorBasis::build(9, 3).unwrap();
        assert_eq!(b.dim(), 84);

        let b = SectorBasis::build(4, 0).unwrap();
        assert_eq!(b.members(), &[0]);
    }

    #[test]
    fn rank_unrank_round_trip() {
        for (n, k) in [(6, 3), (9, 3), (10, 5), (12, 4), (5, 0), (5, 5)] {
            let b = SectorBasis::build(n, k).unwrap();
            let mut prev = None;
            for i in 0..b.dim() {
                let x = b.unrank(i);
                assert_eq!(x.count_ones() as usize, k);
                assert_eq!(b.rank(x), Some(i), "rank(unrank({i})) for n={n} k={k}");
                if let Some(p) = prev {
                    assert!(x > p, "unrank not strictly increasing");
                }
                prev = Some(x);
            }
            assert_eq!(b.rank(if n < 64 { 1 << n } else { 0 }), None);
        }
    }

    #[test]
    fn rank_rejects_wrong_weight() {
        let b = SectorBasis::build(6, 2).unwrap();
        assert_eq!(b.rank(0b111), None);
        assert_eq!(b.rank(0), None);
    }

    #[test]
    fn sector_sizes_partition_full_space() {
        for n in [4, 7, 10] {
            let total: u64 = (0..=n).map(|k| binomial(n, k)).sum();
            assert_eq!(total, 1u64 << n);
        }
    }

    #[test]
    fn delta_matches_members() {
        let b = SectorBasis::build(7, 2).unwrap();
        assert_eq!(b.delta(), 3);
        for &x in b.members() {
            assert_eq!(crate::state::sigma_z_of(x, 7), 3);
        }
    }

    #[test]
    fn project_uniform_amplitudes() {
        let b = SectorBasis::build(3, 1).unwrap();
        let psi = project_uniform(&b);
        let expect = (3f64).sqrt().recip();
        for a in psi.amplitudes() {
            assert!((a.re - expect).abs() < 1e-15);
        }

        let b = SectorBasis::build(2, 1).unwrap();
        let psi = project_uniform(&b);
        for a in psi.amplitudes() {
            assert!((a.re - 0.5f64.sqrt()).abs() < 1e-15);
        }
        assert!((psi.norm() - 1.0).abs() < 1e-15);
    }

    /// Direct evaluation of the (2n+1)-term Fourier projector applied to
    /// |s⟩ in the full space, normalized. Independent of `project_uniform`.
    fn fourier_projection_oracle(n: usize, delta: i64) -> StateVector {
        let dim = 1usize << n;
        let norm_s = (dim as f64).sqrt().recip();
        let terms = 2 * n + 1;
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        for (x, amp) in amps.iter_mut().enumerate() {
            let sz = crate::state::sigma_z_of(x as u64, n);
            let mut sum = C64::new(0.0, 0.0);
            for j in 0..terms {
                let phase =
                    2.0 * std::f64::consts::PI * (delta - sz) as f64 * j as f64 / terms as f64;
                sum += C64::from_polar(1.0, phase);
            }
            *amp = sum * norm_s / terms as f64;
        }
        let mut psi = StateVector::new(Space::full(n).unwrap(), amps).unwrap();
        psi.normalize();
        psi
    }

    #[test]
    fn project_uniform_matches_fourier_oracle() {
        for (n, k) in [(3, 1), (5, 2), (8, 3)] {
            let b = SectorBasis::build(n, k).unwrap();
            let embedded = project_uniform(&b).embed_full().unwrap();
            let oracle = fourier_projection_oracle(n, b.delta());
            let overlap = inner(&oracle, &embedded).unwrap();
            assert!(
                (overlap.re - 1.0).abs() < 1e-12 && overlap.im.abs() < 1e-12,
                "overlap {overlap} for n={n} k={k}"
            );
        }
    }

    #[test]
    fn scan_order_starts_near_n_over_3() {
        let order = scan_order(9);
        assert_eq!(order[0].k, 3);
        assert_eq!(order[0].delta, 3);
        // every k appears exactly once
        let mut ks: Vec<usize> = order.iter().map(|c| c.k).collect();
        ks.sort_unstable();
        assert_eq!(ks, (0..=9).collect::<Vec<_>>());
    }

    #[test]
    fn sector_choice_parity() {
        assert!(SectorChoice::from_delta(6, 3).is_err());
        let c = SectorChoice::from_delta(6, 2).unwrap();
        assert_eq!(c.k, 2);
        let c = SectorChoice::from_weight(9, 3).unwrap();
        assert_eq!(c.delta, 3);
    }

    #[test]
    fn budget_enforced() {
        assert!(matches!(
            SectorBasis::build(64, 32),
            Err(SectorError::DimOverBudget { .. })
        ));
    }
}
