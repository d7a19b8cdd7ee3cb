//! Exact cover-3 instances: model, random generation with a unique
//! solution, brute-force oracles, and the on-disk format.
//!
//! A clause over qubits `(α, β, γ)` is satisfied when exactly one of the
//! three bits is 1. Instances are grown one random clause at a time; a
//! clause is kept only if it strictly shrinks the satisfying set without
//! emptying it, so generation terminates exactly when one assignment
//! remains. The "hard" subset keeps only instances with
//! `m ≤ round(2n/3)` clauses.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Brute-force budget for [`count_solutions`].
pub const MAX_COUNT_QUBITS: usize = 30;
/// Generation enumerates satisfying sets, so it has its own budget.
pub const MAX_GENERATE_QUBITS: usize = 26;
pub const DEFAULT_MAX_RESTARTS: u64 = 20_000;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("qubit count n={0} outside supported range")]
    NOutOfRange(usize),
    #[error("clause index {index} out of range 1..={n}")]
    ClauseIndexOutOfRange { index: usize, n: usize },
    #[error("clause ({0}, {1}, {2}) must have three strictly increasing qubit indices")]
    ClauseNotStrictlyIncreasing(usize, usize, usize),
    #[error("duplicate clause ({0}, {1}, {2})")]
    DuplicateClause(usize, usize, usize),
    #[error("field m = {declared} does not match {actual} clauses")]
    ClauseCountMismatch { declared: usize, actual: usize },
    #[error("solution string length {got} does not match n = {n}")]
    SolutionLength { got: usize, n: usize },
    #[error("solution string may contain only '0' and '1', found {0:?}")]
    SolutionChar(char),
    #[error("declared solution violates clause ({0}, {1}, {2})")]
    SolutionViolatesClause(usize, usize, usize),
    #[error("n = {0} exceeds the brute-force budget {MAX_COUNT_QUBITS}")]
    CountBudget(usize),
    #[error(
        "generation exhausted {restarts} restarts for n = {n} \
         (hard_only = {hard_only}, {candidates_tried} candidate clauses tried, \
         {hard_rejects} unique-solution instances rejected by the hard filter)"
    )]
    RestartsExhausted {
        n: usize,
        hard_only: bool,
        restarts: u64,
        candidates_tried: u64,
        hard_rejects: u64,
    },
    #[error("failed to parse instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Three distinct 1-based qubit indices, stored sorted ascending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    qubits: [usize; 3],
}

impl Clause {
    /// Build from already-ascending indices; rejects repeats, disorder,
    /// and zero (indices are 1-based).
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self, InstanceError> {
        if a == 0 {
            return Err(InstanceError::ClauseIndexOutOfRange { index: 0, n: 0 });
        }
        if !(a < b && b < c) {
            return Err(InstanceError::ClauseNotStrictlyIncreasing(a, b, c));
        }
        Ok(Clause { qubits: [a, b, c] })
    }

    /// Build from any order of three distinct indices.
    pub fn from_unsorted(mut q: [usize; 3]) -> Result<Self, InstanceError> {
        q.sort_unstable();
        Clause::new(q[0], q[1], q[2])
    }

    pub fn qubits(&self) -> [usize; 3] {
        self.qubits
    }

    /// Bitmask with the three member bits set (qubit 1 = bit 0).
    pub fn mask(&self) -> u64 {
        self.qubits.iter().map(|&q| 1u64 << (q - 1)).sum()
    }

    /// Exactly one of the three member bits is 1.
    #[inline]
    pub fn is_satisfied_by(&self, assignment: u64) -> bool {
        (assignment & self.mask()).count_ones() == 1
    }
}

/// Parse an assignment written qubit-1-first ("100" sets qubit 1) into a
/// bitmask with qubit 1 in the least significant bit.
pub fn assignment_from_str(s: &str, n: usize) -> Result<u64, InstanceError> {
    if s.chars().count() != n {
        return Err(InstanceError::SolutionLength {
            got: s.chars().count(),
            n,
        });
    }
    let mut bits = 0u64;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '1' => bits |= 1u64 << i,
            '0' => {}
            other => return Err(InstanceError::SolutionChar(other)),
        }
    }
    Ok(bits)
}

/// Render an assignment qubit-1-first.
pub fn assignment_to_string(bits: u64, n: usize) -> String {
    (0..n)
        .map(|i| if bits >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// An exact cover-3 instance, optionally carrying its unique solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ec3Instance {
    n: usize,
    clauses: Vec<Clause>,
    solution: Option<u64>,
    seed: u64,
    hard: bool,
}

impl Ec3Instance {
    /// Validating constructor; sorts clauses into canonical order.
    pub fn new(
        n: usize,
        mut clauses: Vec<Clause>,
        solution: Option<u64>,
        seed: u64,
        hard: bool,
    ) -> Result<Self, InstanceError> {
        if n < 3 || n > 64 {
            return Err(InstanceError::NOutOfRange(n));
        }
        for cl in &clauses {
            let [_, _, c] = cl.qubits();
            if c > n {
                return Err(InstanceError::ClauseIndexOutOfRange { index: c, n });
            }
        }
        clauses.sort_unstable();
        if let Some(w) = clauses.windows(2).find(|w| w[0] == w[1]) {
            let [a, b, c] = w[0].qubits();
            return Err(InstanceError::DuplicateClause(a, b, c));
        }
        if let Some(sol) = solution {
            if n < 64 && sol >> n != 0 {
                return Err(InstanceError::SolutionLength { got: 64, n });
            }
            if let Some(cl) = clauses.iter().find(|cl| !cl.is_satisfied_by(sol)) {
                let [a, b, c] = cl.qubits();
                return Err(InstanceError::SolutionViolatesClause(a, b, c));
            }
        }
        Ok(Ec3Instance {
            n,
            clauses,
            solution,
            seed,
            hard,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Clause count `m`.
    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn solution(&self) -> Option<u64> {
        self.solution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hard(&self) -> bool {
        self.hard
    }

    /// Seed-derived identifier used in run records and file names.
    pub fn id(&self) -> String {
        format!("n{}-s{}", self.n, self.seed)
    }

    /// True iff every clause has exactly one 1 among its members.
    pub fn is_satisfied(&self, assignment: u64) -> bool {
        self.clauses.iter().all(|cl| cl.is_satisfied_by(assignment))
    }

    /// String-convention counterpart of [`Self::is_satisfied`].
    pub fn is_satisfied_str(&self, assignment: &str) -> Result<bool, InstanceError> {
        Ok(self.is_satisfied(assignment_from_str(assignment, self.n)?))
    }

    /// Canonical file serialization: pretty JSON, clauses sorted, with a
    /// trailing newline. Byte-identical for equal instances.
    pub fn to_canonical_json(&self) -> String {
        let file = InstanceFile {
            n: self.n,
            m: self.clauses.len(),
            clauses: self.clauses.iter().map(|c| c.qubits()).collect(),
            solution: self.solution.map(|s| assignment_to_string(s, self.n)),
            seed: self.seed,
            hard: self.hard,
        };
        let mut text = serde_json::to_string_pretty(&file).expect("plain struct serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_canonical_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let mut clauses = Vec::with_capacity(file.clauses.len());
        for [a, b, c] in file.clauses {
            for idx in [a, b, c] {
                if idx == 0 || idx > file.n {
                    return Err(InstanceError::ClauseIndexOutOfRange {
                        index: idx,
                        n: file.n,
                    });
                }
            }
            clauses.push(Clause::new(a, b, c)?);
        }
        if file.m != clauses.len() {
            return Err(InstanceError::ClauseCountMismatch {
                declared: file.m,
                actual: clauses.len(),
            });
        }
        let solution = file
            .solution
            .map(|s| assignment_from_str(&s, file.n))
            .transpose()?;
        Ec3Instance::new(file.n, clauses, solution, file.seed, file.hard)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    m: usize,
    clauses: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solution: Option<String>,
    seed: u64,
    hard: bool,
}

/// Exact satisfying-assignment count by backtracking over qubits with
/// per-clause pruning (a clause dies as soon as two members are 1, or
/// when fully assigned without exactly one 1).
pub fn count_solutions(inst: &Ec3Instance) -> Result<u64, InstanceError> {
    let n = inst.n;
    if n > MAX_COUNT_QUBITS {
        return Err(InstanceError::CountBudget(n));
    }
    // clauses touching each qubit, by index into inst.clauses
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (ci, cl) in inst.clauses.iter().enumerate() {
        for q in cl.qubits() {
            touching[q].push(ci);
        }
    }
    let mut ones = vec![0u8; inst.clauses.len()];
    let mut assigned = vec![0u8; inst.clauses.len()];

    fn recurse(
        q: usize,
        n: usize,
        touching: &[Vec<usize>],
        ones: &mut [u8],
        assigned: &mut [u8],
    ) -> u64 {
        if q > n {
            return 1;
        }
        let mut total = 0;
        'values: for value in [0u8, 1u8] {
            for &ci in &touching[q] {
                assigned[ci] += 1;
                ones[ci] += value;
                let dead = ones[ci] >= 2 || (assigned[ci] == 3 && ones[ci] != 1);
                if dead {
                    // undo including the current clause, then try the next value
                    for &cj in &touching[q] {
                        assigned[cj] -= 1;
                        ones[cj] -= value;
                        if cj == ci {
                            continue 'values;
                        }
                    }
                }
            }
            total += recurse(q + 1, n, touching, ones, assigned);
            for &ci in &touching[q] {
                assigned[ci] -= 1;
                ones[ci] -= value;
            }
        }
        total
    }

    Ok(recurse(1, n, &touching, &mut ones, &mut assigned))
}

/// `round(2n/3)`, the clause cap defining the hard subset.
pub fn hard_clause_limit(n: usize) -> usize {
    (2.0 * n as f64 / 3.0).round() as usize
}

/// Generate a random instance with a unique satisfying assignment.
///
/// Clauses are proposed as uniformly random unseen triples; a proposal is
/// kept only if the satisfying count strictly decreases and stays ≥ 1.
/// When no unseen triple can make progress the attempt restarts from
/// empty. With `hard_only`, finished instances with `m > round(2n/3)`
/// are discarded and generation retries. Deterministic given the seed.
pub fn generate(
    n: usize,
    seed: u64,
    hard_only: bool,
    max_restarts: u64,
) -> Result<Ec3Instance, InstanceError> {
    if n < 4 || n > MAX_GENERATE_QUBITS {
        return Err(InstanceError::NOutOfRange(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_triples: Vec<Clause> = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                all_triples.push(Clause::new(a, b, c).unwrap());
            }
        }
    }
    let hard_cap = hard_clause_limit(n);
    let mut restarts = 0u64;
    let mut candidates_tried = 0u64;
    let mut hard_rejects = 0u64;

    loop {
        if restarts >= max_restarts {
            return Err(InstanceError::RestartsExhausted {
                n,
                hard_only,
                restarts,
                candidates_tried,
                hard_rejects,
            });
        }
        all_triples.shuffle(&mut rng);
        let mut clauses: Vec<Clause> = Vec::new();
        // satisfying assignments of the clauses kept so far
        let mut satisfiers: Vec<u64> = (0..1u64 << n).collect();
        let mut done = false;
        for &cand in &all_triples {
            candidates_tried += 1;
            let count = satisfiers
                .iter()
                .filter(|&&x| cand.is_satisfied_by(x))
                .count();
            if count >= 1 && count < satisfiers.len() {
                satisfiers.retain(|&x| cand.is_satisfied_by(x));
                clauses.push(cand);
                if satisfiers.len() == 1 {
                    done = true;
                    break;
                }
            }
        }
        if !done {
            // every unseen triple either empties the set or leaves it
            // unchanged; no progress is possible
            restarts += 1;
            continue;
        }
        if hard_only && clauses.len() > hard_cap {
            hard_rejects += 1;
            restarts += 1;
            continue;
        }
        let solution = satisfiers[0];
        return Ec3Instance::new(n, clauses, Some(solution), seed, hard_only);
    }
}

/// Clause-membership counts: `M[α][β]` = clauses containing both α and β,
/// `nvec[α]` = clauses containing α (both 0-indexed by qubit − 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingData {
    pub m: Vec<Vec<u32>>,
    pub nvec: Vec<u32>,
}

impl CouplingData {
    /// `M_{αβ}` with 1-based qubit labels.
    pub fn pair(&self, alpha: usize, beta: usize) -> u32 {
        self.m[alpha - 1][beta - 1]
    }

    /// `N_α` with a 1-based qubit label.
    pub fn single(&self, alpha: usize) -> u32 {
        self.nvec[alpha - 1]
    }

    /// Unordered pairs with nonzero coupling, as 1-based `(α, β, M_{αβ})`.
    pub fn coupled_pairs(&self) -> Vec<(usize, usize, u32)> {
        let n = self.nvec.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if self.m[a][b] != 0 {
                    out.push((a + 1, b + 1, self.m[a][b]));
                }
            }
        }
        out
    }
}

pub fn coupling_data(inst: &Ec3Instance) -> CouplingData {
    let n = inst.n;
    let mut m = vec![vec![0u32; n]; n];
    let mut nvec = vec![0u32; n];
    for cl in &inst.clauses {
        let [a, b, c] = cl.qubits();
        for q in [a, b, c] {
            nvec[q - 1] += 1;
        }
        for (p, q) in [(a, b), (a, c), (b, c)] {
            m[p - 1][q - 1] += 1;
            m[q - 1][p - 1] += 1;
        }
    }
    CouplingData { m, nvec }
}

/// Deduplicated convenience: generate `count` instances from consecutive
/// seeds `base_seed, base_seed+1, …`, skipping seeds whose generation
/// fails (which [`generate`] makes vanishingly rare).
pub fn generate_batch(
    n: usize,
    base_seed: u64,
    count: usize,
    hard_only: bool,
) -> Result<Vec<Ec3Instance>, InstanceError> {
    let mut out = Vec::with_capacity(count);
    let mut seed = base_seed;
    while out.len() < count {
        out.push(generate(n, seed, hard_only, DEFAULT_MAX_RESTARTS)?);
        seed += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, triples: &[(usize, usize, usize)]) -> Ec3Instance {
        let clauses = triples
            .iter()
            .map(|&(a, b, c)| Clause::new(a, b, c).unwrap())
            .collect();
        Ec3Instance::new(n, clauses, None, 0, false).unwrap()
    }

    #[test]
    fn satisfaction_requires_exactly_one() {
        let i = inst(3, &[(1, 2, 3)]);
        assert!(i.is_satisfied_str("100").unwrap());
        assert!(!i.is_satisfied_str("110").unwrap());
        assert!(!i.is_satisfied_str("000").unwrap());
        assert!(i.is_satisfied_str("010").unwrap());
        assert!(!i.is_satisfied_str("111").unwrap());
    }

    #[test]
    fn assignment_string_is_qubit_one_first() {
        // "100" sets qubit 1, i.e. the least significant bit
        assert_eq!(assignment_from_str("100", 3).unwrap(), 0b001);
        assert_eq!(assignment_from_str("001", 3).unwrap(), 0b100);
        assert_eq!(assignment_to_string(0b001, 3), "100");
        for bits in 0..8u64 {
            let s = assignment_to_string(bits, 3);
            assert_eq!(assignment_from_str(&s, 3).unwrap(), bits);
        }
    }

    #[test]
    fn count_single_clause() {
        assert_eq!(count_solutions(&inst(3, &[(1, 2, 3)])).unwrap(), 3);
    }

    #[test]
    fn count_no_clauses() {
        assert_eq!(count_solutions(&inst(3, &[])).unwrap(), 8);
    }

    #[test]
    fn count_two_overlapping_clauses() {
        // exactly one of {1,2,3} and exactly one of {2,3,4}: the shared
        // bit can be 2 or 3 (forcing everything else to 0), or neither,
        // which forces bits 1 and 4. Three assignments in total.
        let i = inst(4, &[(1, 2, 3), (2, 3, 4)]);
        assert_eq!(count_solutions(&i).unwrap(), 3);
        for s in ["0100", "0010", "1001"] {
            assert!(i.is_satisfied_str(s).unwrap(), "{s} should satisfy");
        }
    }

    #[test]
    fn count_matches_naive_enumeration() {
        for (n, triples) in [
            (5, vec![(1, 2, 3), (2, 3, 4), (3, 4, 5)]),
            (6, vec![(1, 2, 6), (2, 4, 5), (1, 3, 4)]),
            (4, vec![(1, 2, 3), (1, 2, 4), (1, 3, 4)]),
        ] {
            let i = inst(n, &triples);
            let naive = (0..1u64 << n).filter(|&x| i.is_satisfied(x)).count() as u64;
            assert_eq!(count_solutions(&i).unwrap(), naive, "n={n} {triples:?}");
        }
    }

    #[test]
    fn count_rejects_oversized_n() {
        let clauses = vec![Clause::new(1, 2, 3).unwrap()];
        let i = Ec3Instance::new(31, clauses, None, 0, false).unwrap();
        assert!(matches!(
            count_solutions(&i),
            Err(InstanceError::CountBudget(31))
        ));
    }

    #[test]
    fn generated_instances_have_unique_solutions() {
        for seed in 0..8 {
            let i = generate(6, seed, false, DEFAULT_MAX_RESTARTS).unwrap();
            assert_eq!(count_solutions(&i).unwrap(), 1, "seed {seed}");
            let sol = i.solution().expect("generation records the solution");
            assert!(i.is_satisfied(sol));
        }
    }

    #[test]
    fn hard_instances_respect_clause_cap() {
        assert_eq!(hard_clause_limit(9), 6);
        assert_eq!(hard_clause_limit(6), 4);
        assert_eq!(hard_clause_limit(12), 8);
        for seed in 0..6 {
            let i = generate(9, seed, true, DEFAULT_MAX_RESTARTS).unwrap();
            assert!(i.m() <= 6, "seed {seed} produced m = {}", i.m());
            assert!(i.hard());
            assert_eq!(count_solutions(&i).unwrap(), 1);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(8, 1234, true, DEFAULT_MAX_RESTARTS).unwrap();
        let b = generate(8, 1234, true, DEFAULT_MAX_RESTARTS).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        let c = generate(8, 1235, true, DEFAULT_MAX_RESTARTS).unwrap();
        assert_ne!(a, c, "different seeds should give different instances");
    }

    #[test]
    fn coupling_single_clause() {
        let cd = coupling_data(&inst(3, &[(1, 2, 3)]));
        assert_eq!(cd.pair(1, 2), 1);
        assert_eq!(cd.pair(1, 3), 1);
        assert_eq!(cd.pair(2, 3), 1);
        assert_eq!(cd.nvec, vec![1, 1, 1]);
    }

    #[test]
    fn coupling_two_clauses() {
        let cd = coupling_data(&inst(4, &[(1, 2, 3), (1, 2, 4)]));
        assert_eq!(cd.pair(1, 2), 2);
        assert_eq!(cd.pair(1, 3), 1);
        assert_eq!(cd.pair(2, 3), 1);
        assert_eq!(cd.pair(1, 4), 1);
        assert_eq!(cd.pair(2, 4), 1);
        assert_eq!(cd.pair(3, 4), 0);
        assert_eq!(cd.nvec, vec![2, 2, 1, 1]);
    }

    #[test]
    fn coupling_identities_on_generated_instances() {
        for seed in 0..5 {
            let i = generate(9, seed, false, DEFAULT_MAX_RESTARTS).unwrap();
            let cd = coupling_data(&i);
            let m = i.m() as u32;
            assert_eq!(cd.nvec.iter().sum::<u32>(), 3 * m);
            let pair_sum: u32 = cd.coupled_pairs().iter().map(|&(_, _, v)| v).sum();
            assert_eq!(pair_sum, 3 * m);
            for a in 1..=i.n() {
                assert_eq!(cd.m[a - 1][a - 1], 0);
                let row: u32 = (1..=i.n()).filter(|&b| b != a).map(|b| cd.pair(a, b)).sum();
                assert_eq!(row, 2 * cd.single(a), "N_α = Σ_β M_αβ / 2 at α={a}");
                for b in 1..=i.n() {
                    assert_eq!(cd.pair(a, b), cd.pair(b, a));
                }
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let original = generate(7, 99, false, DEFAULT_MAX_RESTARTS).unwrap();
        original.save(&path).unwrap();
        let loaded = Ec3Instance::load(&path).unwrap();
        assert_eq!(original, loaded);
        assert_eq!(original.to_canonical_json(), loaded.to_canonical_json());
    }

    #[test]
    fn load_rejects_zero_index() {
        let text = r#"{"n": 4, "m": 1, "clauses": [[0, 1, 2]], "seed": 0, "hard": false}"#;
        let err = Ec3Instance::from_json(text).unwrap_err();
        assert!(
            matches!(err, InstanceError::ClauseIndexOutOfRange { index: 0, .. }),
            "got {err}"
        );
    }

    #[test]
    fn load_rejects_unsatisfied_solution() {
        let text = r#"{"n": 4, "m": 1, "clauses": [[1, 2, 3]], "solution": "1100", "seed": 0, "hard": false}"#;
        let err = Ec3Instance::from_json(text).unwrap_err();
        assert!(
            matches!(err, InstanceError::SolutionViolatesClause(1, 2, 3)),
            "got {err}"
        );
    }

    #[test]
    fn load_rejects_clause_count_mismatch() {
        let text = r#"{"n": 4, "m": 2, "clauses": [[1, 2, 3]], "seed": 0, "hard": false}"#;
        assert!(matches!(
            Ec3Instance::from_json(text).unwrap_err(),
            InstanceError::ClauseCountMismatch {
                declared: 2,
                actual: 1
            }
        ));
    }

    #[test]
    fn load_rejects_duplicate_clause() {
        let text = r#"{"n": 5, "m": 2, "clauses": [[1, 2, 3], [1, 2, 3]], "seed": 0, "hard": false}"#;
        assert!(matches!(
            Ec3Instance::from_json(text).unwrap_err(),
            InstanceError::DuplicateClause(1, 2, 3)
        ));
    }

    #[test]
    fn load_rejects_malformed_json() {
        assert!(matches!(
            Ec3Instance::from_json("{not json"),
            Err(InstanceError::Parse(_))
        ));
    }

    #[test]
    fn clause_rejects_bad_shapes() {
        assert!(Clause::new(2, 2, 3).is_err());
        assert!(Clause::new(3, 2, 1).is_err());
        assert!(Clause::new(0, 1, 2).is_err());
        assert_eq!(
            Clause::from_unsorted([5, 1, 3]).unwrap().qubits(),
            [1, 3, 5]
        );
    }

    #[test]
    fn canonical_serialization_sorts_clauses() {
        let clauses = vec![
            Clause::new(2, 3, 4).unwrap(),
            Clause::new(1, 2, 3).unwrap(),
        ];
        let i = Ec3Instance::new(4, clauses, None, 7, false).unwrap();
        assert_eq!(
            i.clauses()[0].qubits(),
            [1, 2, 3],
            "constructor sorts into canonical order"
        );
        let json = i.to_canonical_json();
        let first = json.find("[\n      1,").unwrap();
        let second = json.find("[\n      2,").unwrap();
        assert!(first < second);
    }

    /// Statistical report, not an assertion: the number of ones in hard
    /// solutions should cluster at n/3. Printed for inspection with
    /// `--nocapture`.
    #[test]
    fn hard_solution_ones_cluster_near_n_over_3() {
        let n = 12;
        let mut histogram = vec![0usize; n + 1];
        for seed in 0..100u64 {
            let i = generate(n, seed, true, DEFAULT_MAX_RESTARTS).unwrap();
            let ones = i.solution().unwrap().count_ones() as usize;
            histogram[ones] += 1;
        }
        let mode = histogram
            .iter()
            .enumerate()
            .max_by_key(|&(_, c)| c)
            .unwrap()
            .0;
        println!("ones histogram over 100 hard n=12 instances: {histogram:?} (mode {mode})");
        // the cluster-at-n/3 observation is reported, not asserted; only
        // basic sanity is enforced here
        assert_eq!(histogram.iter().sum::<usize>(), 100);
    }
}
