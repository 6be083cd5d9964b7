//! Embedded SAT core and circuit-to-CNF encoding.

mod solver;
pub mod unroll;

use std::fmt::{self, Write as _};
use std::ops::Not;
use std::path::Path;

pub use solver::{Outcome, Solver, Stats};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
    pub fn pos(self) -> Lit {
        Lit::new(self, false)
    }
    pub fn neg(self) -> Lit {
        Lit::new(self, true)
    }
}

/// A CNF literal: variable with sign.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn new(v: Var, negative: bool) -> Lit {
        Lit((v.0 << 1) | negative as u32)
    }
    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }
    #[inline]
    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }
    #[inline]
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }
    pub(crate) fn from_code(c: u32) -> Lit {
        Lit(c)
    }
    #[inline]
    pub fn neg_if(self, c: bool) -> Lit {
        Lit(self.0 ^ c as u32)
    }
    /// Signed 1-based DIMACS form.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64 + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }
    pub fn from_dimacs(d: i64) -> Lit {
        assert!(d != 0);
        Lit::new(Var(d.unsigned_abs() as u32 - 1), d < 0)
    }
}

impl Not for Lit {
    type Output = Lit;
    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Anything clauses can be poured into.
pub trait ClauseSink {
    fn new_var(&mut self) -> Var;
    fn add_clause(&mut self, lits: &[Lit]);
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfInstance {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    /// Assumptions for the next solve.
    pub assumptions: Vec<Lit>,
}

impl ClauseSink for CnfInstance {
    fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        Var(self.num_vars - 1)
    }
    fn add_clause(&mut self, lits: &[Lit]) {
        for l in lits {
            self.num_vars = self.num_vars.max(l.var().0 + 1);
        }
        self.clauses.push(lits.to_vec());
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    /// Total assignment indexed by variable.
    Sat(Vec<bool>),
    /// Subset of the assumptions sufficient for unsatisfiability.
    Unsat(Vec<Lit>),
    Unknown,
}

#[derive(Debug, thiserror::Error)]
pub enum DimacsError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {0}: {1}")]
    Parse(usize, String),
}

impl CnfInstance {
    pub fn from_clauses(clauses: &[&[i64]]) -> CnfInstance {
        let mut cnf = CnfInstance::default();
        for c in clauses {
            let lits: Vec<Lit> = c.iter().map(|&d| Lit::from_dimacs(d)).collect();
            cnf.add_clause(&lits);
        }
        cnf
    }

    /// Solves with the given assumptions and conflict budget.
    pub fn solve(&self, assumptions: &[Lit], budget: Option<u64>) -> SolveResult {
        let mut s = Solver::with_seed(solver_seed());
        while s.num_vars() < self.num_vars as usize {
            s.new_var();
        }
        for c in &self.clauses {
            s.add_clause(c);
        }
        match s.solve(assumptions, budget) {
            Outcome::Sat => {
                let mut m = s.model().to_vec();
                m.resize(self.num_vars as usize, false);
                SolveResult::Sat(m)
            }
            Outcome::Unsat => SolveResult::Unsat(s.core().to_vec()),
            Outcome::Unknown => SolveResult::Unknown,
        }
    }

    /// Whether `model` satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|l| model.get(l.var().index()).copied().unwrap_or(false) != l.is_neg())
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(s, "{} ", l.to_dimacs());
            }
            s.push_str("0\n");
        }
        s
    }

    pub fn export_dimacs(&self, path: &Path) -> Result<(), DimacsError> {
        std::fs::write(path, self.to_dimacs())?;
        Ok(())
    }

    pub fn parse_dimacs(text: &str) -> Result<CnfInstance, DimacsError> {
        let mut cnf = CnfInstance::default();
        let mut declared = None;
        let mut cur = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p cnf") {
                let nums: Vec<u32> = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| DimacsError::Parse(ln + 1, t.into())))
                    .collect::<Result<_, _>>()?;
                if nums.len() != 2 {
                    return Err(DimacsError::Parse(ln + 1, "bad header".into()));
                }
                cnf.num_vars = nums[0];
                declared = Some(nums[1] as usize);
                continue;
            }
            for tok in line.split_whitespace() {
                let d: i64 = tok.parse().map_err(|_| DimacsError::Parse(ln + 1, tok.into()))?;
                if d == 0 {
                    cnf.clauses.push(std::mem::take(&mut cur));
                } else {
                    if d.unsigned_abs() > cnf.num_vars as u64 {
                        return Err(DimacsError::Parse(ln + 1, format!("variable {d} out of range")));
                    }
                    cur.push(Lit::from_dimacs(d));
                }
            }
        }
        if declared.is_some_and(|n| n != cnf.clauses.len()) {
            return Err(DimacsError::Parse(0, "clause count differs from header".into()));
        }
        Ok(cnf)
    }
}

static SEED_DEFAULT: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

/// Seed used when `SEQEQ_SOLVER_SEED` is unset.
pub fn set_default_solver_seed(seed: u64) {
    SEED_DEFAULT.store(seed, std::sync::atomic::Ordering::Relaxed);
}

/// Decision-order perturbation seed from `SEQEQ_SOLVER_SEED`, else the
/// process default (0 unless set).
pub fn solver_seed() -> u64 {
    std::env::var("SEQEQ_SOLVER_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| SEED_DEFAULT.load(std::sync::atomic::Ordering::Relaxed))
}

/// Solver seeded from the environment.
pub fn new_solver() -> Solver {
    Solver::with_seed(solver_seed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(cnf: &CnfInstance) -> bool {
        let n = cnf.num_vars;
        (0u64..1 << n).any(|m| {
            let model: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
            cnf.satisfied_by(&model)
        })
    }

    #[test]
    fn unit_contradiction() {
        let cnf = CnfInstance::from_clauses(&[&[1], &[-1]]);
        assert!(matches!(cnf.solve(&[], None), SolveResult::Unsat(_)));
    }

    #[test]
    fn assumption_forces_other_literal() {
        let cnf = CnfInstance::from_clauses(&[&[1, 2]]);
        match cnf.solve(&[Lit::from_dimacs(-1)], None) {
            SolveResult::Sat(m) => {
                assert!(!m[0]);
                assert!(m[1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn core_is_subset_and_still_unsat() {
        // x1 -> x2, x2 -> x3; assume x1, !x3, x4
        let cnf = CnfInstance::from_clauses(&[&[-1, 2], &[-2, 3], &[4, 5]]);
        let assumptions: Vec<Lit> = [1, -3, 4].iter().map(|&d| Lit::from_dimacs(d)).collect();
        let SolveResult::Unsat(core) = cnf.solve(&assumptions, None) else { panic!() };
        assert!(core.iter().all(|l| assumptions.contains(l)));
        assert!(!core.contains(&Lit::from_dimacs(4)));
        assert!(matches!(cnf.solve(&core, None), SolveResult::Unsat(_)));
    }

    #[test]
    fn random_3cnf_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let mut cnf = CnfInstance { num_vars: 14, ..Default::default() };
            for _ in 0..60 {
                let c: Vec<Lit> = (0..3)
                    .map(|_| Lit::new(Var(rng.gen_range(0..14)), rng.gen()))
                    .collect();
                cnf.clauses.push(c);
            }
            let expected = brute_force(&cnf);
            match cnf.solve(&[], None) {
                SolveResult::Sat(m) => {
                    assert!(expected);
                    assert!(cnf.satisfied_by(&m));
                }
                SolveResult::Unsat(_) => assert!(!expected),
                SolveResult::Unknown => panic!("no budget given"),
            }
        }
    }

    #[test]
    fn dimacs_format() {
        assert_eq!(CnfInstance::default().to_dimacs(), "p cnf 0 0\n");
        let cnf = CnfInstance::from_clauses(&[&[1, -2]]);
        assert_eq!(cnf.to_dimacs(), "p cnf 2 1\n1 -2 0\n");
        assert_eq!(CnfInstance::parse_dimacs(&cnf.to_dimacs()).unwrap(), cnf);
    }

    #[test]
    fn budget_zero_gives_unknown_on_hard_instance() {
        // pigeonhole 6 -> 5 needs conflicts
        let mut cnf = CnfInstance::default();
        let p = |i: u32, j: u32| Var(i * 5 + j);
        for i in 0..6 {
            cnf.add_clause(&(0..5).map(|j| p(i, j).pos()).collect::<Vec<_>>());
        }
        for j in 0..5 {
            for a in 0..6 {
                for b in a + 1..6 {
                    cnf.add_clause(&[p(a, j).neg(), p(b, j).neg()]);
                }
            }
        }
        assert_eq!(cnf.solve(&[], Some(1)), SolveResult::Unknown);
        assert!(matches!(cnf.solve(&[], None), SolveResult::Unsat(_)));
    }
}
