//! Lemma proving: helper points proven one by one with k-induction, and
//! register correspondence proven simultaneously by induction.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::mapping::{DropReason, Mapping, OutputPair, PairTag};
use crate::netlist::{Lit, Netlist};
use crate::sat::unroll::{InitMode, Unroller};
use crate::sat::{new_solver, ClauseSink, Lit as SatLit, Outcome};

use super::engine::{run, Base, RunResult};
use super::product::{build, ProductMachine};
use crate::mapper::signatures_for;
use crate::sim::Signature;
use super::{SecError, Task};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperOutcome {
    pub spec: String,
    pub imp: String,
    pub proven: bool,
    /// Induction depth of the proof.
    pub k: Option<usize>,
    /// Why the point was discarded.
    pub reason: String,
    /// Bit-level (SPEC, IMP) pairs of the point.
    pub bits: Vec<(String, String)>,
}

/// Bit names of a net or word; a leading `~` carries over to every bit.
fn bit_names(nl: &Netlist, name: &str) -> Option<Vec<String>> {
    let (base, inv) = split_inversion(name);
    let neg = if inv { "~" } else { "" };
    if nl.lookup(base).is_some() {
        return Some(vec![name.to_string()]);
    }
    let w = nl.lookup_word(base)?.len();
    Some((0..w).map(|i| format!("{neg}{base}[{i}]")).collect())
}

pub(crate) fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
}

/// Proves each candidate point always-equal, assuming `lemmas` and every
/// point proven in an earlier round. Rounds repeat until nothing new is
/// proven, so a point may rely on points listed after it.
pub fn prove_helpers(
    task: &Task,
    candidates: &[(String, String)],
    lemmas: &[(String, String)],
) -> Result<Vec<HelperOutcome>, SecError> {
    let mut out: Vec<HelperOutcome> = candidates
        .iter()
        .map(|(s, i)| {
            let mut h = HelperOutcome {
                spec: s.clone(),
                imp: i.clone(),
                proven: false,
                k: None,
                reason: String::new(),
                bits: Vec::new(),
            };
            match (bit_names(&task.spec, s), bit_names(&task.imp, i)) {
                (Some(a), Some(b)) if a.len() == b.len() => h.bits = a.into_iter().zip(b).collect(),
                (Some(_), Some(_)) => h.reason = "width mismatch".into(),
                (None, _) => h.reason = format!("unknown SPEC net {s}"),
                (_, None) => h.reason = format!("unknown IMP net {i}"),
            }
            h
        })
        .collect();
    let mut known: Vec<(String, String)> = lemmas.to_vec();
    let mut settled = vec![false; out.len()];
    for (k, h) in out.iter().enumerate() {
        settled[k] = h.bits.is_empty();
    }
    let pool = pool(task.jobs);
    loop {
        let pending: Vec<usize> = (0..out.len()).filter(|&k| !settled[k]).collect();
        let results: Vec<Result<RunResult, SecError>> = pool.install(|| {
            pending
                .par_iter()
                .map(|&k| {
                    let outputs: Vec<OutputPair> = out[k]
                        .bits
                        .iter()
                        .map(|(s, i)| OutputPair { spec: s.clone(), imp: i.clone(), latency: (0, 0) })
                        .collect();
                    let m = Mapping { qualifier: None, ..task.mapping.clone() };
                    let pm = build(&task.spec, &task.imp, &m, &outputs, &task.constraints, &known)?;
                    let b = task.budget;
                    Ok(run(&pm, b.k_max.saturating_sub(1), b.k_max, b.conflicts))
                })
                .collect()
        });
        let mut progress = false;
        for (&k, r) in pending.iter().zip(results) {
            match r? {
                RunResult::Proven { k: depth, .. } => {
                    out[k].proven = true;
                    out[k].k = Some(depth);
                    out[k].reason.clear();
                    settled[k] = true;
                    known.extend(out[k].bits.iter().cloned());
                    progress = true;
                }
                RunResult::Cex { depth, .. } => {
                    out[k].reason = format!("differs at cycle {depth}");
                    settled[k] = true;
                }
                RunResult::Vacuous { .. } => {
                    out[k].reason = "constraints are vacuous".into();
                    settled[k] = true;
                }
                RunResult::Inconclusive { k: kk, .. } => {
                    out[k].reason = format!("induction did not close within k={kk}");
                }
            }
        }
        if !progress {
            break;
        }
    }
    Ok(out)
}

/// Result of register-correspondence induction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairInduction {
    pub proven: Vec<(String, String)>,
    pub dropped: Vec<(String, String, DropReason)>,
    /// A solver budget ran out; remaining pairs are neither proven nor
    /// dropped.
    pub unknown: bool,
}

const COVER_DEPTH: usize = 10;

/// Finds the largest subset of the CANDIDATE register pairs that holds
/// initially and is inductive as a whole: pairs are assumed equal in one
/// frame and must stay equal in the next; pairs that break are dropped and
/// the rest re-checked until a fixpoint.
pub fn induct_pairs(task: &Task, conflicts: u64) -> PairInduction {
    let mut cands: Vec<(String, String)> = task
        .mapping
        .pairs_with(PairTag::Candidate)
        .map(|r| (r.spec.clone(), r.imp.clone()))
        .collect();
    cands.sort();
    let assumed: Vec<(String, String)> =
        task.mapping.pairs_with(PairTag::Assumed).map(|r| (r.spec.clone(), r.imp.clone())).collect();
    let m = Mapping { qualifier: None, ..task.mapping.clone() };
    let pm = match build(&task.spec, &task.imp, &m, &[], &task.constraints, &assumed) {
        Ok(pm) => pm,
        Err(_) => return PairInduction { unknown: true, ..Default::default() },
    };
    let mut res = PairInduction::default();
    let mut lits = Vec::new();
    let mut active = Vec::new();
    for (s, i) in &cands {
        match (pm.nl.lookup(&format!("spec/{s}")), pm.nl.lookup(&format!("imp/{i}"))) {
            (Some(a), Some(b)) => {
                lits.push((a, b));
                active.push(true);
            }
            _ => {
                lits.push((Lit::FALSE, Lit::FALSE));
                active.push(false);
                res.dropped.push((s.clone(), i.clone(), DropReason::Induction));
            }
        }
    }

    let step_dropped = match induct_points(&pm, &lits, &mut active, conflicts) {
        Some((base_dropped, step_dropped)) => {
            for p in base_dropped {
                res.dropped.push((cands[p].0.clone(), cands[p].1.clone(), DropReason::Trace { cycle: 0 }));
            }
            step_dropped
        }
        None => {
            res.unknown = true;
            return res;
        }
    };

    // Look for a concrete run separating each induction-dropped pair.
    let mut cover = Base::new(&pm);
    let mut pending = step_dropped;
    for f in 0..COVER_DEPTH {
        if pending.is_empty() {
            break;
        }
        cover.extend();
        let mut still = Vec::new();
        for p in pending {
            let d = cover.u.xor(cover.u.at(f, lits[p].0), cover.u.at(f, lits[p].1));
            let q = cover.u.encode(&mut cover.s, d);
            if cover.s.solve(&[q], Some(conflicts)) == Outcome::Sat {
                res.dropped.push((cands[p].0.clone(), cands[p].1.clone(), DropReason::Trace { cycle: f }));
            } else {
                still.push(p);
            }
        }
        pending = still;
    }
    for p in pending {
        res.dropped.push((cands[p].0.clone(), cands[p].1.clone(), DropReason::Induction));
    }
    res.dropped.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    for (p, c) in cands.into_iter().enumerate() {
        if active[p] {
            res.proven.push(c);
        }
    }
    res
}

/// Simultaneous induction over point pairs of `pm`: pairs differing in
/// some initial state are dropped, then pairs that can break in one step
/// while all active pairs are equal, until a fixpoint. Returns the indices
/// dropped by the base and by the step, or None if the budget ran out.
fn induct_points(
    pm: &ProductMachine,
    lits: &[(Lit, Lit)],
    active: &mut [bool],
    conflicts: u64,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut base_dropped = Vec::new();
    let mut base = Base::new(pm);
    base.extend();
    loop {
        let diffs: Vec<(usize, Lit)> = (0..lits.len())
            .filter(|&p| active[p])
            .map(|p| (p, base.u.xor(base.u.at(0, lits[p].0), base.u.at(0, lits[p].1))))
            .collect();
        let any = diffs.iter().fold(Lit::FALSE, |acc, &(_, d)| base.u.or(acc, d));
        if any == Lit::FALSE {
            break;
        }
        let q = base.u.encode(&mut base.s, any);
        match base.s.solve(&[q], Some(conflicts)) {
            Outcome::Unsat => break,
            Outcome::Unknown => return None,
            Outcome::Sat => {
                let model = |l: SatLit| base.s.model_value(l);
                let mut memo = HashMap::new();
                for &(p, d) in &diffs {
                    if base.u.eval(d, &model, &mut memo) {
                        active[p] = false;
                        base_dropped.push(p);
                    }
                }
            }
        }
    }

    // Inductive step: equal at frame 0 implies equal at frame 1.
    let mut u = Unroller::new(&pm.nl, InitMode::Free);
    let mut s = new_solver();
    u.add_frame();
    u.add_frame();
    for f in 0..2 {
        let g = u.and(u.at(f, pm.constraint), u.at(f, pm.lemma));
        let c = u.encode(&mut s, g);
        s.add_clause(&[c]);
    }
    let eq0: Vec<SatLit> = lits
        .iter()
        .map(|&(a, b)| {
            let x = u.xor(u.at(0, a), u.at(0, b));
            !u.encode(&mut s, x)
        })
        .collect();
    let mut step_dropped = Vec::new();
    loop {
        let diffs: Vec<(usize, Lit)> =
            (0..lits.len()).filter(|&p| active[p]).map(|p| (p, u.xor(u.at(1, lits[p].0), u.at(1, lits[p].1)))).collect();
        let any = diffs.iter().fold(Lit::FALSE, |acc, &(_, d)| u.or(acc, d));
        if any == Lit::FALSE {
            break;
        }
        let q = u.encode(&mut s, any);
        let mut assumptions: Vec<SatLit> = (0..lits.len()).filter(|&p| active[p]).map(|p| eq0[p]).collect();
        assumptions.push(q);
        match s.solve(&assumptions, Some(conflicts)) {
            Outcome::Unsat => break,
            Outcome::Unknown => return None,
            Outcome::Sat => {
                let model = |l: SatLit| s.model_value(l);
                let mut memo = HashMap::new();
                for &(p, d) in &diffs {
                    if u.eval(d, &model, &mut memo) {
                        active[p] = false;
                        step_dropped.push(p);
                    }
                }
            }
        }
    }
    Some((base_dropped, step_dropped))
}

const DISCOVER_RUNS: usize = 64;
const DISCOVER_DEPTH: usize = 12;

/// Equalities between SPEC registers and named IMP nets (possibly
/// complemented, written `~name`) that random simulation suggests and
/// simultaneous induction confirms, on top of `known`. These capture
/// state that was moved across logic, where no IMP register matches.
pub fn discover_lemmas(task: &Task, known: &[(String, String)]) -> Vec<(String, String)> {
    let (ss, si) = signatures_for(&task.spec, &task.imp, &task.mapping, DISCOVER_RUNS, DISCOVER_DEPTH, 0x5eed);
    let norm = |sig: Signature| -> (Signature, bool) {
        if sig.ones.first().is_some_and(|w| w & 1 == 1) {
            (sig, false)
        } else {
            (sig.inverted(), true)
        }
    };
    let mut by_sig: HashMap<Signature, Vec<(&str, bool)>> = HashMap::new();
    for (name, &l) in &task.imp.names {
        if l.is_const() {
            continue;
        }
        let (k, inv) = norm(si.of(l));
        by_sig.entry(k).or_default().push((name.as_str(), inv));
    }
    let is_reg = |n: &str| task.imp.register_index(n).is_some();
    let covered: std::collections::HashSet<&str> = known.iter().map(|(s, _)| s.as_str()).collect();
    let mut cands = Vec::new();
    for r in &task.spec.registers {
        if covered.contains(r.name.as_str()) {
            continue;
        }
        let sig = ss.of(Lit::new(r.node, false));
        if sig.is_binary(ss.runs) {
            if sig.ones.iter().all(|w| *w == 0) {
                cands.push((r.name.clone(), "0".to_string()));
            } else if sig.zeros.iter().all(|w| *w == 0) {
                cands.push((r.name.clone(), "1".to_string()));
            }
        }
        let (k, inv) = norm(sig);
        let Some(list) = by_sig.get(&k) else { continue };
        let mut picks: Vec<&(&str, bool)> = list.iter().filter(|(n, _)| is_reg(n)).collect();
        picks.sort();
        // Duplicated registers all need pinning; otherwise one net suffices.
        if picks.is_empty() {
            picks.extend(list.iter().min_by_key(|(n, _)| (*n != r.name, n.len(), *n)));
        }
        for pick in picks {
            let name = if pick.1 != inv { format!("~{}", pick.0) } else { pick.0.to_string() };
            cands.push((r.name.clone(), name));
        }
    }
    if cands.is_empty() {
        return Vec::new();
    }
    let m = Mapping { qualifier: None, ..task.mapping.clone() };
    let Ok(pm) = build(&task.spec, &task.imp, &m, &[], &task.constraints, known) else {
        return Vec::new();
    };
    let mut lits = Vec::new();
    let mut active = Vec::new();
    for (s, i) in &cands {
        let (name, inv) = split_inversion(i);
        match (pm.nl.lookup(&format!("spec/{s}")), imp_point(&pm.nl, name)) {
            (Some(a), Some(b)) => {
                lits.push((a, b.inv_if(inv)));
                active.push(true);
            }
            _ => {
                lits.push((Lit::FALSE, Lit::FALSE));
                active.push(false);
            }
        }
    }
    if induct_points(&pm, &lits, &mut active, task.budget.conflicts).is_none() {
        return Vec::new();
    }
    cands.into_iter().zip(active).filter(|(_, a)| *a).map(|(c, _)| c).collect()
}

/// An IMP lemma point in the product machine: a net name, or `0`/`1`
/// for a constant.
pub(crate) fn imp_point(nl: &crate::netlist::Netlist, name: &str) -> Option<Lit> {
    match name {
        "0" => Some(Lit::FALSE),
        "1" => Some(Lit::TRUE),
        _ => nl.lookup(&format!("imp/{name}")),
    }
}

/// Splits a leading `~` off a lemma net name.
pub(crate) fn split_inversion(name: &str) -> (&str, bool) {
    match name.strip_prefix('~') {
        Some(n) => (n, true),
        None => (name, false),
    }
}
