//! Matrix-free Hermitian operators.
//!
//! Every Hamiltonian in this crate is expressible with four kinds of
//! terms, none of which require storing a matrix:
//!
//! - a real diagonal array `d[x]`,
//! - single-qubit flips `c·σx_q` (off-diagonal pairs `x ↔ x ^ mask`),
//! - pair exchanges `c·(|01⟩⟨10| + |10⟩⟨01|)_{a,b}` (hops that conserve
//!   Hamming weight),
//! - rank-one projectors `c·|v⟩⟨v|`,
//!
//! plus weighted sums of other handles, which is how interpolated
//! Hamiltonians `(1-g)·H_in + g·H_out` are represented without rebuilding
//! anything per time step.
//!
//! [`OperatorHandle::apply_acc`] is written in gather form: each output
//! amplitude is accumulated by exactly one pass in a fixed term order, so
//! results are bitwise identical whether or not the loop is chunked
//! across threads.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::sector::{SectorBasis, SectorError};
use crate::state::{Space, StateError, StateVector};

/// Dimension at which `apply` switches to chunked parallel evaluation.
const PARALLEL_MIN_DIM: usize = 1 << 14;
const PARALLEL_CHUNK: usize = 1 << 12;

/// Sentinel in an exchange partner table: no hop out of this member.
const NO_PARTNER: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("qubit {qubit} out of range 1..={n}")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("σx on qubit {qubit} does not conserve Hamming weight; not available in a sector space")]
    FlipInSector { qubit: usize },
    #[error("exchange requires two distinct qubits, got ({0}, {0})")]
    ExchangeSameQubit(usize),
    #[error("diagonal length {got} does not match space dimension {dim}")]
    DiagonalLength { got: usize, dim: usize },
    #[error("rank-one vector lives in a different space than the operator")]
    RankOneSpace,
    #[error("sum terms live in different spaces")]
    SumSpaceMismatch,
    #[error("sum of zero operators")]
    EmptySum,
}

#[derive(Clone, Debug)]
struct FlipTerm {
    qubit: usize,
    mask: u64,
    coeff: f64,
}

#[derive(Clone, Debug)]
struct ExchangeTerm {
    qubit_a: usize,
    qubit_b: usize,
    mask: u64,
    coeff: f64,
    /// For sector spaces: `partner[i]` is the rank reached by the hop, or
    /// [`NO_PARTNER`] when both bits agree.
    partner: Option<Arc<Vec<u32>>>,
}

#[derive(Clone, Debug)]
struct RankOneTerm {
    vector: Arc<StateVector>,
    coeff: f64,
}

#[derive(Clone, Debug)]
enum Repr {
    Terms {
        diagonal: Option<Arc<Vec<f64>>>,
        flips: Vec<FlipTerm>,
        exchanges: Vec<ExchangeTerm>,
        rank_ones: Vec<RankOneTerm>,
    },
    Sum(Vec<(f64, Arc<OperatorHandle>)>),
}

/// A Hermitian operator applied on the fly, never materialized.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    space: Space,
    repr: Repr,
    scale: f64,
}

/// Accumulates terms for an [`OperatorHandle`]; rejects anything
/// incompatible with the target space at insertion time.
#[derive(Debug)]
pub struct OperatorBuilder {
    space: Space,
    diagonal: Option<Vec<f64>>,
    flips: Vec<FlipTerm>,
    exchanges: Vec<ExchangeTerm>,
    rank_ones: Vec<RankOneTerm>,
}

impl OperatorBuilder {
    pub fn new(space: Space) -> Self {
        OperatorBuilder {
            space,
            diagonal: None,
            flips: Vec::new(),
            exchanges: Vec::new(),
            rank_ones: Vec::new(),
        }
    }

    /// Set the diagonal part; entries add onto any diagonal set earlier.
    pub fn diagonal(mut self, entries: Vec<f64>) -> Result<Self, OperatorError> {
        if entries.len() != self.space.dim() {
            return Err(OperatorError::DiagonalLength {
                got: entries.len(),
                dim: self.space.dim(),
            });
        }
        match &mut self.diagonal {
            Some(d) => {
                for (a, b) in d.iter_mut().zip(&entries) {
                    *a += b;
                }
            }
            None => self.diagonal = Some(entries),
        }
        Ok(self)
    }

    /// Uniform diagonal shift `c·1`.
    pub fn constant(self, c: f64) -> Result<Self, OperatorError> {
        let dim = self.space.dim();
        self.diagonal(vec![c; dim])
    }

    /// Add `coeff·σx` on a 1-based qubit. Full spaces only.
    pub fn flip(mut self, qubit: usize, coeff: f64) -> Result<Self, OperatorError> {
        let n = self.space.n();
        if qubit == 0 || qubit > n {
            return Err(OperatorError::QubitOutOfRange { qubit, n });
        }
        if !matches!(self.space, Space::Full { .. }) {
            return Err(OperatorError::FlipInSector { qubit });
        }
        self.flips.push(FlipTerm {
            qubit,
            mask: 1u64 << (qubit - 1),
            coeff,
        });
        Ok(self)
    }

    /// Add `coeff·(|01⟩⟨10| + |10⟩⟨01|)` on a 1-based qubit pair.
    pub fn exchange(mut self, qubit_a: usize, qubit_b: usize, coeff: f64) -> Result<Self, OperatorError> {
        let n = self.space.n();
        for q in [qubit_a, qubit_b] {
            if q == 0 || q > n {
                return Err(OperatorError::QubitOutOfRange { qubit: q, n });
            }
        }
        if qubit_a == qubit_b {
            return Err(OperatorError::ExchangeSameQubit(qubit_a));
        }
        let mask = (1u64 << (qubit_a - 1)) | (1u64 << (qubit_b - 1));
        let partner = match &self.space {
            Space::Full { .. } => None,
            Space::Sector(basis) => Some(Arc::new(partner_table(basis, mask))),
        };
        self.exchanges.push(ExchangeTerm {
            qubit_a,
            qubit_b,
            mask,
            coeff,
            partner,
        });
        Ok(self)
    }

    /// Add `coeff·|v⟩⟨v|` for a vector in the same space.
    pub fn rank_one(mut self, vector: StateVector, coeff: f64) -> Result<Self, OperatorError> {
        if !vector.space().same_as(&self.space) {
            return Err(OperatorError::RankOneSpace);
        }
        self.rank_ones.push(RankOneTerm {
            vector: Arc::new(vector),
            coeff,
        });
        Ok(self)
    }

    pub fn build(self) -> OperatorHandle {
        let scale = terms_scale(&self.diagonal, &self.flips, &self.exchanges, &self.rank_ones);
        OperatorHandle {
            space: self.space,
            repr: Repr::Terms {
                diagonal: self.diagonal.map(Arc::new),
                flips: self.flips,
                exchanges: self.exchanges,
                rank_ones: self.rank_ones,
            },
            scale,
        }
    }
}

fn partner_table(basis: &Arc<SectorBasis>, mask: u64) -> Vec<u32> {
    basis
        .members()
        .iter()
        .map(|&x| {
            if (x & mask).count_ones() == 1 {
                basis.rank(x ^ mask).expect("hop stays in sector") as u32
            } else {
                NO_PARTNER
            }
        })
        .collect()
}

fn terms_scale(
    diagonal: &Option<Vec<f64>>,
    flips: &[FlipTerm],
    exchanges: &[ExchangeTerm],
    rank_ones: &[RankOneTerm],
) -> f64 {
    let d_max = diagonal
        .as_ref()
        .map(|d| d.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .unwrap_or(0.0);
    let f_sum: f64 = flips.iter().map(|f| f.coeff.abs()).sum();
    let e_sum: f64 = exchanges.iter().map(|e| e.coeff.abs()).sum();
    let r_sum: f64 = rank_ones
        .iter()
        .map(|r| r.coeff.abs() * r.vector.norm_sq())
        .sum();
    d_max + f_sum + e_sum + r_sum
}

impl OperatorHandle {
    /// Zero operator on a space.
    pub fn zero(space: Space) -> Self {
        OperatorBuilder::new(space).build()
    }

    /// Purely diagonal operator.
    pub fn from_diagonal(space: Space, entries: Vec<f64>) -> Result<Self, OperatorError> {
        Ok(OperatorBuilder::new(space).diagonal(entries)?.build())
    }

    /// Weighted sum `Σ_i w_i·A_i`, applied lazily term by term. Weights
    /// may be changed cheaply by building a new sum over the same `Arc`s.
    pub fn sum(parts: Vec<(f64, Arc<OperatorHandle>)>) -> Result<Self, OperatorError> {
        let first = parts.first().ok_or(OperatorError::EmptySum)?;
        let space = first.1.space.clone();
        if !parts.iter().all(|(_, op)| op.space.same_as(&space)) {
            return Err(OperatorError::SumSpaceMismatch);
        }
        let scale = parts.iter().map(|(w, op)| w.abs() * op.scale).sum();
        Ok(OperatorHandle {
            space,
            repr: Repr::Sum(parts),
            scale,
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// Upper bound on the spectral norm, from term-wise triangle
    /// inequalities. Used to pick stable integration steps.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The diagonal array when the operator is purely diagonal; `None`
    /// for anything with off-diagonal terms (or for lazy sums).
    pub fn as_diagonal(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Terms {
                diagonal,
                flips,
                exchanges,
                rank_ones,
            } if flips.is_empty() && exchanges.is_empty() && rank_ones.is_empty() => {
                diagonal.as_ref().map(|d| d.as_slice())
            }
            _ => None,
        }
    }

    /// `out += weight · A · psi`, allocating nothing.
    pub fn apply_acc(
        &self,
        psi: &StateVector,
        out: &mut StateVector,
        weight: f64,
    ) -> Result<(), StateError> {
        if !psi.space().same_as(&self.space) {
            return Err(StateError::SpaceMismatch(self.space.key(), psi.space().key()));
        }
        if !out.space().same_as(&self.space) {
            return Err(StateError::SpaceMismatch(self.space.key(), out.space().key()));
        }
        match &self.repr {
            Repr::Terms {
                diagonal,
                flips,
                exchanges,
                rank_ones,
            } => {
                // Rank-one inner products are global reductions; do them
                // up front (serially, in term order) so the per-index pass
                // below stays embarrassingly parallel.
                let rank_pre: Vec<(C64, Arc<StateVector>)> = rank_ones
                    .iter()
                    .map(|r| {
                        let ip = crate::state::inner_slices(r.vector.amplitudes(), psi.amplitudes());
                        (ip * (weight * r.coeff), Arc::clone(&r.vector))
                    })
                    .collect();
                let dim = self.space.dim();
                let space = &self.space;
                let psi_amps = psi.amplitudes();
                let gather = |offset: usize, out_chunk: &mut [C64]| {
                    for (d, slot) in out_chunk.iter_mut().enumerate() {
                        let i = offset + d;
                        let mut acc = C64::new(0.0, 0.0);
                        if let Some(diag) = diagonal {
                            acc += psi_amps[i] * diag[i];
                        }
                        match space {
                            Space::Full { .. } => {
                                let x = i as u64;
                                for f in flips {
                                    acc += psi_amps[(x ^ f.mask) as usize] * f.coeff;
                                }
                                for e in exchanges {
                                    if (x & e.mask).count_ones() == 1 {
                                        acc += psi_amps[(x ^ e.mask) as usize] * e.coeff;
                                    }
                                }
                            }
                            Space::Sector(_) => {
                                debug_assert!(flips.is_empty());
                                for e in exchanges {
                                    let table = e.partner.as_deref().expect("sector exchange has table");
                                    let p = table[i];
                                    if p != NO_PARTNER {
                                        acc += psi_amps[p as usize] * e.coeff;
                                    }
                                }
                            }
                        }
                        acc *= weight;
                        for (pre, v) in &rank_pre {
                            acc += v.amplitudes()[i] * pre;
                        }
                        *slot += acc;
                    }
                };
                if dim >= PARALLEL_MIN_DIM {
                    out.amplitudes_mut()
                        .par_chunks_mut(PARALLEL_CHUNK)
                        .enumerate()
                        .for_each(|(c, chunk)| gather(c * PARALLEL_CHUNK, chunk));
                } else {
                    gather(0, out.amplitudes_mut());
                }
                Ok(())
            }
            Repr::Sum(parts) => {
                for (w, op) in parts {
                    op.apply_acc(psi, out, weight * w)?;
                }
                Ok(())
            }
        }
    }

    /// `A · psi` into a fresh vector.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector, StateError> {
        let mut out = StateVector::zeros(self.space.clone());
        self.apply_acc(psi, &mut out, 1.0)?;
        Ok(out)
    }

    /// Real expectation value `⟨psi|A|psi⟩` (the imaginary part of a
    /// Hermitian expectation is discarded; it is zero up to rounding).
    pub fn expectation(&self, psi: &StateVector) -> Result<f64, StateError> {
        let apsi = self.apply(psi)?;
        Ok(crate::state::inner(psi, &apsi)?.re)
    }

    pub(crate) fn restrict_to_sector(
        &self,
        basis: &Arc<SectorBasis>,
    ) -> Result<OperatorHandle, SectorError> {
        match &self.repr {
            Repr::Terms {
                diagonal,
                flips,
                exchanges,
                rank_ones,
            } => {
                if let Some(f) = flips.first() {
                    return Err(SectorError::NotSigmaZInvariant {
                        term: format!("σx on qubit {}", f.qubit),
                    });
                }
                if !rank_ones.is_empty() {
                    return Err(SectorError::NotSigmaZInvariant {
                        term: "rank-one projector with support across sectors".into(),
                    });
                }
                let new_diag = diagonal.as_ref().map(|d| {
                    Arc::new(
                        basis
                            .members()
                            .iter()
                            .map(|&x| d[x as usize])
                            .collect::<Vec<f64>>(),
                    )
                });
                let new_exchanges: Vec<ExchangeTerm> = exchanges
                    .iter()
                    .map(|e| ExchangeTerm {
                        qubit_a: e.qubit_a,
                        qubit_b: e.qubit_b,
                        mask: e.mask,
                        coeff: e.coeff,
                        partner: Some(Arc::new(partner_table(basis, e.mask))),
                    })
                    .collect();
                let scale = {
                    let d_max = new_diag
                        .as_ref()
                        .map(|d| d.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                        .unwrap_or(0.0);
                    let e_sum: f64 = new_exchanges.iter().map(|e| e.coeff.abs()).sum();
                    d_max + e_sum
                };
                Ok(OperatorHandle {
                    space: Space::Sector(Arc::clone(basis)),
                    repr: Repr::Terms {
                        diagonal: new_diag,
                        flips: Vec::new(),
                        exchanges: new_exchanges,
                        rank_ones: Vec::new(),
                    },
                    scale,
                })
            }
            Repr::Sum(parts) => {
                let restricted = parts
                    .iter()
                    .map(|(w, op)| Ok((*w, Arc::new(op.restrict_to_sector(basis)?))))
                    .collect::<Result<Vec<_>, SectorError>>()?;
                Ok(OperatorHandle::sum(restricted).expect("nonempty, same sector"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{inner, uniform_state};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(space: Space, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<C64> = (0..space.dim())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut psi = StateVector::new(space, amps).unwrap();
        psi.normalize();
        psi
    }

    /// Dense matrix assembled straight from the term definitions, with
    /// none of the gather-loop machinery.
    fn dense_of(op: &OperatorHandle) -> Vec<Vec<C64>> {
        let dim = op.space().dim();
        let mut m = vec![vec![C64::new(0.0, 0.0); dim]; dim];
        dense_acc(op, 1.0, &mut m);
        m
    }

    fn dense_acc(op: &OperatorHandle, w: f64, m: &mut Vec<Vec<C64>>) {
        match &op.repr {
            Repr::Terms {
                diagonal,
                flips,
                exchanges,
                rank_ones,
            } => {
                let dim = op.space().dim();
                if let Some(d) = diagonal {
                    for i in 0..dim {
                        m[i][i] += w * d[i];
                    }
                }
                for f in flips {
                    for x in 0..dim as u64 {
                        m[(x ^ f.mask) as usize][x as usize] += w * f.coeff;
                    }
                }
                for e in exchanges {
                    for i in 0..dim {
                        let x = match op.space() {
                            Space::Full { .. } => i as u64,
                            Space::Sector(b) => b.unrank(i),
                        };
                        if (x & e.mask).count_ones() == 1 {
                            let j = match op.space() {
                                Space::Full { .. } => (x ^ e.mask) as usize,
                                Space::Sector(b) => b.rank(x ^ e.mask).unwrap(),
                            };
                            m[j][i] += w * e.coeff;
                        }
                    }
                }
                for r in rank_ones {
                    let v = r.vector.amplitudes();
                    for i in 0..dim {
                        for j in 0..dim {
                            m[i][j] += v[i] * v[j].conj() * (w * r.coeff);
                        }
                    }
                }
            }
            Repr::Sum(parts) => {
                for (pw, p) in parts {
                    dense_acc(p, w * pw, m);
                }
            }
        }
    }

    fn dense_apply(m: &[Vec<C64>], psi: &StateVector) -> Vec<C64> {
        let a = psi.amplitudes();
        m.iter()
            .map(|row| row.iter().zip(a).map(|(h, x)| h * x).sum())
            .collect()
    }

    fn assert_matches_dense(op: &OperatorHandle, psi: &StateVector, tol: f64) {
        let got = op.apply(psi).unwrap();
        let want = dense_apply(&dense_of(op), psi);
        for (g, w) in got.amplitudes().iter().zip(&want) {
            assert!(
                (g - w).norm() < tol,
                "apply deviates from dense oracle: {g} vs {w}"
            );
        }
    }

    #[test]
    fn identity_diagonal_leaves_state_unchanged() {
        let space = Space::full(3).unwrap();
        let op = OperatorHandle::from_diagonal(space.clone(), vec![1.0; 8]).unwrap();
        let psi = random_state(space, 7);
        let out = op.apply(&psi).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn diagonal_scales_basis_state() {
        let space = Space::full(2).unwrap();
        let op = OperatorHandle::from_diagonal(space, vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        let psi = StateVector::basis_state(2, 0b11).unwrap();
        let out = op.apply(&psi).unwrap();
        assert_eq!(out.amplitudes()[3], C64::new(2.0, 0.0));
        assert_eq!(out.amplitudes()[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn flip_moves_amplitude() {
        let space = Space::full(2).unwrap();
        let op = OperatorBuilder::new(space).flip(2, 1.0).unwrap().build();
        let psi = StateVector::basis_state(2, 0b00).unwrap();
        let out = op.apply(&psi).unwrap();
        assert_eq!(out.amplitudes()[0b10], C64::new(1.0, 0.0));
    }

    #[test]
    fn projector_annihilates_orthogonal_complement() {
        // (1 - |s⟩⟨s|)|s⟩ = 0
        let n = 4;
        let s = uniform_state(n).unwrap();
        let op = OperatorBuilder::new(Space::full(n).unwrap())
            .constant(1.0)
            .unwrap()
            .rank_one(s.clone(), -1.0)
            .unwrap()
            .build();
        let out = op.apply(&s).unwrap();
        assert!(out.norm() < 1e-14, "norm {} should vanish", out.norm());

        // and leaves an orthogonal state alone
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0) / 2f64.sqrt();
        amps[1] = -amps[0];
        let perp = StateVector::new(Space::full(n).unwrap(), amps).unwrap();
        let out = op.apply(&perp).unwrap();
        let overlap = inner(&perp, &out).unwrap();
        assert!((overlap.re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exchange_hops_between_members() {
        let space = Space::full(2).unwrap();
        let op = OperatorBuilder::new(space)
            .exchange(1, 2, -1.0)
            .unwrap()
            .build();
        let psi = StateVector::basis_state(2, 0b01).unwrap();
        let out = op.apply(&psi).unwrap();
        assert_eq!(out.amplitudes()[0b10], C64::new(-1.0, 0.0));
        assert_eq!(out.amplitudes()[0b01], C64::new(0.0, 0.0));
        // |00⟩ and |11⟩ are annihilated
        let psi = StateVector::basis_state(2, 0b11).unwrap();
        assert!(op.apply(&psi).unwrap().norm() < 1e-15);
    }

    #[test]
    fn random_mixed_operator_matches_dense_oracle() {
        let n = 5;
        let space = Space::full(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let diag: Vec<f64> = (0..1usize << n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut b = OperatorBuilder::new(space.clone()).diagonal(diag).unwrap();
        for q in 1..=n {
            b = b.flip(q, rng.gen_range(-1.0..1.0)).unwrap();
        }
        for (a, c) in [(1, 3), (2, 5), (4, 5)] {
            b = b.exchange(a, c, rng.gen_range(-1.0..1.0)).unwrap();
        }
        let op = b
            .rank_one(random_state(space.clone(), 3), 0.7)
            .unwrap()
            .rank_one(uniform_state(n).unwrap(), -1.3)
            .unwrap()
            .build();
        let psi = random_state(space, 21);
        assert_matches_dense(&op, &psi, 1e-13);
    }

    #[test]
    fn sector_operator_matches_dense_oracle() {
        let basis = SectorBasis::build(6, 2).unwrap();
        let space = Space::Sector(Arc::clone(&basis));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let diag: Vec<f64> = (0..basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = OperatorBuilder::new(space.clone()).diagonal(diag).unwrap();
        for (p, q) in [(1, 2), (2, 4), (3, 6), (1, 6)] {
            b = b.exchange(p, q, rng.gen_range(-1.0..1.0)).unwrap();
        }
        let op = b.build();
        let psi = random_state(space, 40);
        assert_matches_dense(&op, &psi, 1e-13);
    }

    #[test]
    fn sum_interpolates_between_parts() {
        let n = 3;
        let space = Space::full(n).unwrap();
        let a = Arc::new(
            OperatorHandle::from_diagonal(space.clone(), (0..8).map(|x| x as f64).collect())
                .unwrap(),
        );
        let bop = Arc::new(
            OperatorBuilder::new(space.clone())
                .flip(1, 1.0)
                .unwrap()
                .build(),
        );
        let g = 0.3;
        let h = OperatorHandle::sum(vec![(1.0 - g, Arc::clone(&a)), (g, Arc::clone(&bop))]).unwrap();
        let psi = random_state(space, 1);
        let ha = a.apply(&psi).unwrap();
        let hb = bop.apply(&psi).unwrap();
        let hsum = h.apply(&psi).unwrap();
        for i in 0..psi.dim() {
            let want = ha.amplitudes()[i] * (1.0 - g) + hb.amplitudes()[i] * g;
            assert!((hsum.amplitudes()[i] - want).norm() < 1e-14);
        }
        assert_matches_dense(&h, &psi, 1e-13);
    }

    #[test]
    fn hermiticity_inner_product_symmetry() {
        let n = 4;
        let space = Space::full(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let diag: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let op = OperatorBuilder::new(space.clone())
            .diagonal(diag)
            .unwrap()
            .flip(2, 0.8)
            .unwrap()
            .exchange(1, 4, -0.6)
            .unwrap()
            .rank_one(random_state(space.clone(), 8), 1.1)
            .unwrap()
            .build();
        for seed in 0..5 {
            let phi = random_state(space.clone(), 1000 + seed);
            let psi = random_state(space.clone(), 2000 + seed);
            let lhs = inner(&phi, &op.apply(&psi).unwrap()).unwrap();
            let rhs = inner(&psi, &op.apply(&phi).unwrap()).unwrap().conj();
            assert!(
                (lhs - rhs).norm() < 1e-13,
                "⟨φ|Hψ⟩ = {lhs} but conj⟨ψ|Hφ⟩ = {rhs}"
            );
        }
    }

    #[test]
    fn restriction_matches_dense_submatrix() {
        let n = 5;
        let space = Space::full(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let diag: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let full = OperatorBuilder::new(space)
            .diagonal(diag)
            .unwrap()
            .exchange(1, 3, 0.5)
            .unwrap()
            .exchange(2, 5, -0.25)
            .unwrap()
            .build();
        let basis = SectorBasis::build(n, 2).unwrap();
        let restricted = crate::sector::restrict(&full, &basis).unwrap();

        let dense_full = dense_of(&full);
        let dense_sub = dense_of(&restricted);
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                let fi = basis.unrank(i) as usize;
                let fj = basis.unrank(j) as usize;
                assert!(
                    (dense_sub[i][j] - dense_full[fi][fj]).norm() < 1e-15,
                    "submatrix mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn restriction_rejects_flips_by_name() {
        let op = OperatorBuilder::new(Space::full(4).unwrap())
            .flip(3, 1.0)
            .unwrap()
            .build();
        let basis = SectorBasis::build(4, 2).unwrap();
        let err = crate::sector::restrict(&op, &basis).unwrap_err();
        assert!(err.to_string().contains("qubit 3"), "message: {err}");
    }

    #[test]
    fn builder_rejects_flip_in_sector_space() {
        let basis = SectorBasis::build(4, 2).unwrap();
        let err = OperatorBuilder::new(Space::Sector(basis)).flip(1, 1.0).unwrap_err();
        assert!(matches!(err, OperatorError::FlipInSector { qubit: 1 }));
    }

    #[test]
    fn scale_bounds_rayleigh_quotients() {
        let n = 4;
        let space = Space::full(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let diag: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let op = OperatorBuilder::new(space.clone())
            .diagonal(diag)
            .unwrap()
            .flip(1, 1.5)
            .unwrap()
            .exchange(2, 3, -2.0)
            .unwrap()
            .build();
        for seed in 0..8 {
            let psi = random_state(space.clone(), 300 + seed);
            let e = op.expectation(&psi).unwrap();
            assert!(e.abs() <= op.scale() + 1e-12, "|{e}| > scale {}", op.scale());
        }
    }

    #[test]
    fn apply_acc_accumulates_with_weight() {
        let space = Space::full(3).unwrap();
        let op = OperatorHandle::from_diagonal(space.clone(), vec![2.0; 8]).unwrap();
        let psi = random_state(space.clone(), 4);
        let mut out = psi.clone();
        op.apply_acc(&psi, &mut out, 0.5).unwrap();
        for (o, p) in out.amplitudes().iter().zip(psi.amplitudes()) {
            // out = psi + 0.5·2·psi = 2·psi
            assert!((o - p * 2.0).norm() < 1e-15);
        }
    }

    #[test]
    fn mismatched_space_is_an_error() {
        let op = OperatorHandle::zero(Space::full(3).unwrap());
        let psi = uniform_state(4).unwrap();
        assert!(matches!(
            op.apply(&psi),
            Err(StateError::SpaceMismatch { .. })
        ));
    }
}
