//! Sequential equivalence checking.
//!
//! Both designs run in lockstep inside a product machine whose `bad`
//! output flags an aligned, qualified output difference. BMC from the
//! initial state looks for counterexamples, k-induction over free initial
//! states closes proofs. Proven register pairs and helper points strengthen
//! the induction; case splits cofactor the task over input predicates.

mod engine;
mod helpers;
mod product;
mod split;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::FrontendError;
use crate::mapping::{Mapping, PairTag};
use crate::netlist::Netlist;
use crate::sat::unroll::{InitMode, Unroller};
use crate::sat::{ClauseSink, CnfInstance};
use crate::sim::{replay, SimError, Trace};

pub use engine::RunResult;
pub use helpers::{discover_lemmas, induct_pairs, prove_helpers, HelperOutcome, PairInduction};
pub use product::{build_product, ProductMachine};
pub(crate) use product::{compile_sided as compile_condition_sided, import as product_import};
pub use split::{case_split, check_completeness};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SecError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("unknown net {0}")]
    UnknownNet(String),
    #[error("width mismatch between {spec} and {imp}")]
    WidthMismatch { spec: String, imp: String },
    #[error("case split is incomplete; uncovered input: {}", fmt_witness(.0))]
    IncompleteSplit(Vec<(String, bool)>),
    #[error("internal error: {0}")]
    Internal(String),
}

fn fmt_witness(w: &[(String, bool)]) -> String {
    w.iter().map(|(n, v)| format!("{n}={}", *v as u8)).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub bmc_depth: usize,
    pub k_max: usize,
    /// Conflict limit per solver call.
    pub conflicts: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { bmc_depth: 50, k_max: 20, conflicts: 1_000_000 }
    }
}

/// A complete equivalence problem.
#[derive(Clone, Debug)]
pub struct Task {
    pub spec: Netlist,
    pub imp: Netlist,
    pub mapping: Mapping,
    /// SNL conditions assumed to hold every cycle. Names resolve in SPEC
    /// (tied inputs use their SPEC names), falling back to IMP.
    pub constraints: Vec<String>,
    /// Candidate (SPEC net, IMP net) points to prove and then assume.
    pub helpers: Vec<(String, String)>,
    /// Named case predicates; empty means no split.
    pub cases: Vec<(String, String)>,
    pub budget: Budget,
    /// Prove CANDIDATE register pairs before the main proof.
    pub refine: bool,
    /// Cap on concurrently running solver instances.
    pub jobs: usize,
}

impl Task {
    pub fn new(spec: Netlist, imp: Netlist, mapping: Mapping) -> Task {
        Task {
            spec,
            imp,
            mapping,
            constraints: Vec::new(),
            helpers: Vec::new(),
            cases: Vec::new(),
            budget: Budget::default(),
            refine: false,
            jobs: 1,
        }
    }

    /// The same problem with SPEC and IMP exchanged.
    pub fn swapped(&self) -> Task {
        Task {
            spec: self.imp.clone(),
            imp: self.spec.clone(),
            mapping: self.mapping.swapped(),
            helpers: self.helpers.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Equivalent,
    NotEquivalent,
    Inconclusive,
    Vacuous,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Equivalent => 0,
            Status::NotEquivalent => 1,
            Status::Inconclusive | Status::Vacuous => 2,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Equivalent => "EQUIVALENT",
            Status::NotEquivalent => "NOT_EQUIVALENT",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Vacuous => "VACUOUS",
        })
    }
}

impl std::str::FromStr for Status {
    type Err = String;
    fn from_str(s: &str) -> Result<Status, String> {
        match s {
            "EQUIVALENT" => Ok(Status::Equivalent),
            "NOT_EQUIVALENT" => Ok(Status::NotEquivalent),
            "INCONCLUSIVE" => Ok(Status::Inconclusive),
            "VACUOUS" => Ok(Status::Vacuous),
            _ => Err(format!("unknown status {s}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    /// Counterexample, with `out` lines filled in by replay.
    pub trace: Option<Trace>,
    /// Cycle of the first mismatch in `trace`.
    pub cex_cycle: Option<usize>,
    /// Output that mismatches in `trace`, or (when inconclusive) the one
    /// the last failed induction step tripped on.
    pub failing_output: Option<String>,
    /// Induction depth of the proof; 0 when hashing alone closed it.
    pub k: Option<usize>,
    /// Deepest frame BMC has shown clean; `None` if not even frame 0.
    pub depth: Option<usize>,
    /// Lemmas (SPEC bit, IMP bit) assumed in the proof.
    pub lemmas: Vec<(String, String)>,
    /// Mapping after refinement, if refinement ran.
    pub mapping: Option<Mapping>,
    pub cases: Vec<(String, Verdict)>,
    pub notes: Vec<String>,
    pub time_ms: u128,
}

impl Verdict {
    pub fn new(status: Status) -> Verdict {
        Verdict {
            status,
            trace: None,
            cex_cycle: None,
            failing_output: None,
            k: None,
            depth: None,
            lemmas: Vec::new(),
            mapping: None,
            cases: Vec::new(),
            notes: Vec::new(),
            time_ms: 0,
        }
    }

    /// One-line summary, e.g. `EQUIVALENT (k=3)`.
    pub fn summary(&self) -> String {
        match self.status {
            Status::Equivalent => match self.k {
                Some(k) => format!("EQUIVALENT (k={k})"),
                None => "EQUIVALENT".into(),
            },
            Status::NotEquivalent => match (&self.failing_output, self.cex_cycle) {
                (Some(o), Some(c)) => format!("NOT_EQUIVALENT ({o} differs at cycle {c})"),
                _ => "NOT_EQUIVALENT".into(),
            },
            Status::Inconclusive => {
                let d = self.depth.map_or("none".to_string(), |d| d.to_string());
                format!("INCONCLUSIVE (bmc depth {d}, k={})", self.k.unwrap_or(0))
            }
            Status::Vacuous => "VACUOUS".into(),
        }
    }
}

/// Runs the full pipeline: vacuity checks, mapping refinement, helper
/// proofs, then interleaved BMC and k-induction.
pub fn check_sec(task: &Task) -> Result<Verdict, SecError> {
    let start = Instant::now();
    let mut v = if !task.cases.is_empty() { case_split(task, &task.cases)? } else { check_unsplit(task)? };
    v.time_ms = start.elapsed().as_millis();
    Ok(v)
}

fn check_unsplit(task: &Task) -> Result<Verdict, SecError> {
    let pm0 = build_product(task, &[])?;
    if let Some(v) = engine::vacuity(&pm0, task.budget.conflicts) {
        return Ok(v);
    }
    let mut notes = Vec::new();
    let mut lemmas: Vec<(String, String)> = Vec::new();
    let mut mapping_out = None;
    let mut mapping = task.mapping.clone();
    if task.refine && mapping.pairs_with(PairTag::Candidate).next().is_some() {
        let ind = induct_pairs(task, task.budget.conflicts);
        for r in &mut mapping.registers {
            if r.tag == PairTag::Candidate {
                match ind.dropped.iter().find(|(s, i, _)| *s == r.spec && *i == r.imp) {
                    Some((_, _, why)) => {
                        r.tag = PairTag::Dropped;
                        r.dropped = Some(why.clone());
                    }
                    None if ind.unknown => {}
                    None => r.tag = PairTag::Proven,
                }
            }
        }
        mapping_out = Some(mapping.clone());
    }
    for r in &mapping.registers {
        if matches!(r.tag, PairTag::Proven | PairTag::Assumed) {
            lemmas.push((r.spec.clone(), r.imp.clone()));
        }
    }
    let mut with_mapping = task.clone();
    with_mapping.mapping = mapping;
    if task.refine {
        let found = discover_lemmas(&with_mapping, &lemmas);
        if !found.is_empty() {
            notes.push(format!("{} state equalities discovered", found.len()));
        }
        lemmas.extend(found);
    }
    if !task.helpers.is_empty() {
        for h in prove_helpers(&with_mapping, &task.helpers, &lemmas)? {
            match h.proven {
                true => lemmas.extend(h.bits),
                false => notes.push(format!("helper {}/{} not used: {}", h.spec, h.imp, h.reason)),
            }
        }
    }
    let pm = if lemmas.is_empty() { pm0 } else { build_product(&with_mapping, &lemmas)? };
    let r = engine::run(&pm, task.budget.bmc_depth, task.budget.k_max, task.budget.conflicts);
    let mut v = finish(task, &pm, r)?;
    v.lemmas = lemmas;
    v.mapping = mapping_out;
    v.notes.splice(0..0, notes);
    Ok(v)
}

/// Bounded model checking only: never proves, only refutes.
pub fn bmc(task: &Task, max_depth: usize) -> Result<Verdict, SecError> {
    let pm = build_product(task, &[])?;
    if let Some(v) = engine::vacuity(&pm, task.budget.conflicts) {
        return Ok(v);
    }
    finish(task, &pm, engine::run(&pm, max_depth, 0, task.budget.conflicts))
}

/// The BMC query for a mismatch at exactly cycle `k` as plain CNF:
/// frames 0..=k from the initial states, the constraints asserted in
/// every frame and the qualified miter asserted in frame k. Satisfiable
/// iff such a counterexample exists.
pub fn bmc_cnf(task: &Task, k: usize) -> Result<CnfInstance, SecError> {
    let pm = build_product(task, &[])?;
    let mut u = Unroller::new(&pm.nl, InitMode::Constrain);
    let mut cnf = CnfInstance::default();
    for f in 0..=k {
        u.add_frame();
        let c = u.at(f, pm.constraint);
        let c = u.encode(&mut cnf, c);
        cnf.add_clause(&[c]);
    }
    let bad = u.at(k, pm.bad);
    let bad = u.encode(&mut cnf, bad);
    cnf.add_clause(&[bad]);
    Ok(cnf)
}

/// k-induction for k = 1..=k_max, each step backed by a BMC base case.
pub fn k_induction(task: &Task, k_max: usize) -> Result<Verdict, SecError> {
    let pm = build_product(task, &[])?;
    if let Some(v) = engine::vacuity(&pm, task.budget.conflicts) {
        return Ok(v);
    }
    finish(task, &pm, engine::run(&pm, k_max.saturating_sub(1), k_max, task.budget.conflicts))
}

/// Turns an engine result into a verdict; counterexamples are replayed in
/// the simulator and must mismatch exactly where the engine claims.
fn finish(task: &Task, pm: &ProductMachine, r: RunResult) -> Result<Verdict, SecError> {
    Ok(match r {
        RunResult::Proven { k, depth } => {
            let mut v = Verdict::new(Status::Equivalent);
            v.k = Some(k);
            v.depth = depth;
            if k == 0 {
                v.notes.push("miter reduced to constant 0 by structural hashing".into());
            }
            v
        }
        RunResult::Cex { trace, depth } => {
            let rep = replay(&task.spec, &task.imp, &task.mapping, &trace)?;
            match &rep.first_mismatch {
                Some((c, _)) if *c == depth => {}
                other => {
                    return Err(SecError::Internal(format!(
                        "counterexample at cycle {depth} replays as {other:?}"
                    )))
                }
            }
            let mut v = Verdict::new(Status::NotEquivalent);
            v.trace = Some(rep.annotate(&trace));
            v.cex_cycle = Some(depth);
            v.failing_output = rep.first_mismatch.map(|(_, o)| o);
            v.depth = depth.checked_sub(1);
            v
        }
        RunResult::Inconclusive { depth, k, hardest } => {
            let mut v = Verdict::new(Status::Inconclusive);
            v.depth = depth;
            v.k = Some(k);
            v.failing_output = hardest;
            v
        }
        RunResult::Vacuous { depth } => {
            let mut v = Verdict::new(Status::Vacuous);
            v.notes.push(format!("constraints admit no execution reaching cycle {depth}"));
            v
        }
    })
    .map(|mut v: Verdict| {
        if pm.state_constraints && v.status != Status::Vacuous {
            v.notes.push("a constraint depends on register state; induction may be over-constrained".into());
        }
        v.notes.dedup();
        v
    })
}
