//! Combinational equivalence under a full register correspondence.
//!
//! Paired registers are cut into shared pseudo-inputs, so the check covers
//! every state, reachable or not. Outputs and paired next-state functions
//! are compared after SAT sweeping has merged internally equivalent nodes.

use std::collections::HashMap;

use thiserror::Error;

use crate::frontend::parse_expr;
use crate::mapping::{Mapping, PairTag};
use crate::netlist::{InputKind, Lit, Netlist, NetlistBuilder, Node, NodeId};
use crate::sat::unroll::{InitMode, Unroller};
use crate::sat::{new_solver, ClauseSink, Lit as SatLit, Outcome, Solver};
use crate::sec::{SecError, Status, Task, Verdict};
use crate::sim::{random_signatures, replay, Step, Trace};
use crate::tri::Tri;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CecError {
    #[error("register {0} has no partner; states do not match, use sequential checking")]
    UnmappedState(String),
    #[error("output {0} has a nonzero latency; use sequential checking")]
    Latency(String),
    #[error(transparent)]
    Sec(#[from] SecError),
}

impl From<crate::frontend::FrontendError> for CecError {
    fn from(e: crate::frontend::FrontendError) -> Self {
        CecError::Sec(e.into())
    }
}

#[derive(Clone, Debug)]
pub struct Miter {
    pub nl: Netlist,
    /// (label, miter bit); labels are SPEC output names or `next:<reg>`.
    pub targets: Vec<(String, Lit)>,
    pub constraint: Lit,
    /// (SPEC register, IMP register, pseudo-input).
    pub cuts: Vec<(String, String, Lit)>,
}

/// Builds the miter; every register on both sides must be paired.
pub fn build_miter(spec: &Netlist, imp: &Netlist, mapping: &Mapping) -> Result<Miter, CecError> {
    build_miter_with(spec, imp, mapping, &[])
}

fn build_miter_with(spec: &Netlist, imp: &Netlist, mapping: &Mapping, constraints: &[String]) -> Result<Miter, CecError> {
    let pairs: Vec<(&str, &str)> = mapping
        .registers
        .iter()
        .filter(|r| r.tag != PairTag::Dropped)
        .map(|r| (r.spec.as_str(), r.imp.as_str()))
        .collect();
    for r in &spec.registers {
        if !pairs.iter().any(|(s, _)| *s == r.name) {
            return Err(CecError::UnmappedState(format!("spec/{}", r.name)));
        }
    }
    for r in &imp.registers {
        if !pairs.iter().any(|(_, i)| *i == r.name) {
            return Err(CecError::UnmappedState(format!("imp/{}", r.name)));
        }
    }
    if let Some(o) = mapping.outputs.iter().find(|o| o.latency != (0, 0)) {
        return Err(CecError::Latency(o.spec.clone()));
    }

    let mut b = NetlistBuilder::new();
    b.global_hash = true;
    let mut spec_tied = HashMap::new();
    let mut imp_tied = HashMap::new();
    for (s, i) in &mapping.inputs {
        let si = spec.input_index(s).ok_or_else(|| SecError::UnknownNet(format!("spec/{s}")))?;
        imp.input_index(i).ok_or_else(|| SecError::UnknownNet(format!("imp/{i}")))?;
        let l = b.input(s, spec.inputs[si].kind);
        spec_tied.insert(s.as_str(), l);
        imp_tied.insert(i.as_str(), l);
    }
    let mut spec_cut = HashMap::new();
    let mut imp_cut = HashMap::new();
    let mut cuts = Vec::new();
    for (s, i) in &pairs {
        let l = b.input(&format!("cut/{s}"), InputKind::Primary);
        spec_cut.insert(*s, l);
        imp_cut.insert(*i, l);
        cuts.push((s.to_string(), i.to_string(), l));
    }
    let smap = crate::sec::product_import(&mut b, spec, "spec", &spec_tied, &spec_cut);
    let imap = crate::sec::product_import(&mut b, imp, "imp", &imp_tied, &imp_cut);
    let ts = |l: Lit| smap[l.node() as usize].inv_if(l.is_inverted());
    let ti = |l: Lit| imap[l.node() as usize].inv_if(l.is_inverted());

    let mut constraint = Lit::TRUE;
    for c in constraints {
        let e = parse_expr(c)?;
        let l = crate::sec::compile_condition_sided(&mut b, &e)?;
        constraint = b.and(constraint, l);
    }
    let qualifier = match &mapping.qualifier {
        Some(q) => {
            let e = parse_expr(q)?;
            crate::sec::compile_condition_sided(&mut b, &e)?
        }
        None => Lit::TRUE,
    };

    let mut targets = Vec::new();
    for o in &mapping.outputs {
        let a = spec.lookup(&o.spec).ok_or_else(|| SecError::UnknownNet(format!("spec/{}", o.spec)))?;
        let c = imp.lookup(&o.imp).ok_or_else(|| SecError::UnknownNet(format!("imp/{}", o.imp)))?;
        let d = b.xor(ts(a), ti(c));
        let m = b.and(qualifier, d);
        targets.push((o.spec.clone(), m));
    }
    for (s, i) in &pairs {
        let ns = spec.registers[spec.register_index(s).unwrap()].next;
        let ni = imp.registers[imp.register_index(i).unwrap()].next;
        let m = b.xor(ts(ns), ti(ni));
        targets.push((format!("next:{s}"), m));
    }
    for (n, l) in &targets {
        b.output(&format!("miter/{n}"), *l);
    }
    Ok(Miter { nl: b.finish(), targets, constraint, cuts })
}

#[derive(Clone, Debug)]
pub struct CecReport {
    pub verdict: Verdict,
    pub miter: Miter,
    /// Nodes merged by sweeping: (node, representative, complemented).
    pub merges: Vec<(NodeId, NodeId, bool)>,
}

const SWEEP_RUNS: usize = 256;
const SWEEP_CONFLICTS: u64 = 2_000;

struct Sweeper<'a> {
    u: Unroller<'a>,
    s: Solver,
}

impl Sweeper<'_> {
    fn lit(&self, n: NodeId) -> Lit {
        self.u.at(0, Lit::new(n, false))
    }

    fn value(&self, n: NodeId, memo: &mut HashMap<u32, bool>) -> bool {
        let model = |l: SatLit| self.s.model_value(l);
        self.u.eval(self.lit(n), &model, memo)
    }
}

/// Sweeps, then checks every miter target under the task's constraints.
pub fn check_cec(task: &Task) -> Result<CecReport, CecError> {
    let start = std::time::Instant::now();
    let miter = build_miter_with(&task.spec, &task.imp, &task.mapping, &task.constraints)?;
    let nl = &miter.nl;
    let mut sw = Sweeper { u: Unroller::new(nl, InitMode::Free), s: new_solver() };
    sw.u.add_frame();
    let c = sw.u.at(0, miter.constraint);
    let c = sw.u.encode(&mut sw.s, c);
    sw.s.add_clause(&[c]);
    if sw.s.solve(&[], Some(task.budget.conflicts)) == Outcome::Unsat {
        let mut v = Verdict::new(Status::Vacuous);
        v.notes.push("constraints are unsatisfiable".into());
        return Ok(CecReport { verdict: v, miter, merges: vec![] });
    }

    // Candidate classes by signature, complement-normalized on lane 0.
    let sigs = random_signatures(nl, SWEEP_RUNS, 0, crate::sat::solver_seed() ^ 0x5eed);
    let mut classes: HashMap<crate::sim::Signature, Vec<(NodeId, bool)>> = HashMap::new();
    for (id, n) in nl.nodes.iter().enumerate() {
        if matches!(n, Node::And(..) | Node::Input(_)) {
            let s = sigs.of(Lit::new(id as NodeId, false));
            let flip = s.ones[0] & 1 == 1;
            let key = if flip { s.inverted() } else { s };
            classes.entry(key).or_default().push((id as NodeId, flip));
        }
    }
    let mut groups: Vec<Vec<(NodeId, bool)>> = classes.into_values().filter(|g| g.len() > 1).collect();
    // Popped lowest representative first, i.e. fanin before fanout.
    groups.sort_by(|a, b| b.cmp(a));
    let mut merges = Vec::new();
    while let Some(g) = groups.pop() {
        let (rep, rflip) = g[0];
        let mut pending: std::collections::VecDeque<(NodeId, bool)> = g[1..].iter().copied().collect();
        let mut differ = Vec::new();
        while let Some((n, flip)) = pending.pop_front() {
            if matches!(nl.nodes[n as usize], Node::Input(_)) {
                differ.push((n, flip));
                continue;
            }
            let compl = flip != rflip;
            let x = sw.u.xor(sw.lit(rep), sw.lit(n).inv_if(compl));
            if x == Lit::FALSE {
                merges.push((n, rep, compl));
                continue;
            }
            let q = sw.u.encode(&mut sw.s, x);
            match sw.s.solve(&[q], Some(SWEEP_CONFLICTS)) {
                Outcome::Unsat => {
                    sw.s.add_clause(&[!q]);
                    merges.push((n, rep, compl));
                }
                Outcome::Unknown => {}
                Outcome::Sat => {
                    // Everything the model separates from rep leaves the class.
                    let mut memo = HashMap::new();
                    let vr = sw.value(rep, &mut memo) ^ rflip;
                    differ.push((n, flip));
                    pending.retain(|&(m, f)| {
                        let keep = sw.value(m, &mut memo) ^ f == vr;
                        if !keep {
                            differ.push((m, f));
                        }
                        keep
                    });
                }
            }
        }
        if differ.len() > 1 {
            differ.sort();
            groups.push(differ);
            groups.sort_by(|a, b| b.cmp(a));
        }
    }

    // Final per-target checks.
    let mut verdict = Verdict::new(Status::Equivalent);
    verdict.k = Some(0);
    for (name, t) in &miter.targets {
        let g = sw.u.at(0, *t);
        if g == Lit::FALSE {
            continue;
        }
        let q = sw.u.encode(&mut sw.s, g);
        match sw.s.solve(&[q], Some(task.budget.conflicts)) {
            Outcome::Unsat => {}
            Outcome::Unknown => {
                verdict = Verdict::new(Status::Inconclusive);
                verdict.failing_output = Some(name.clone());
            }
            Outcome::Sat => {
                verdict = counterexample(task, &miter, &sw, name)?;
                break;
            }
        }
    }
    verdict.notes.push(format!("{} internal nodes merged by sweeping", merges.len()));
    verdict.time_ms = start.elapsed().as_millis();
    Ok(CecReport { verdict, miter, merges })
}

fn counterexample(task: &Task, miter: &Miter, sw: &Sweeper, name: &str) -> Result<Verdict, CecError> {
    let model = |l: SatLit| sw.s.model_value(l);
    let mut memo = HashMap::new();
    let mut step = Step::default();
    let cut: HashMap<NodeId, usize> = miter.cuts.iter().enumerate().map(|(k, c)| (c.2.node(), k)).collect();
    let mut regs = vec![false; miter.cuts.len()];
    for i in &miter.nl.inputs {
        let v = sw.u.eval(sw.u.at(0, Lit::new(i.node, false)), &model, &mut memo);
        match cut.get(&i.node) {
            Some(&k) => regs[k] = v,
            None => step.inputs.push((i.name.clone(), Tri::from_bool(v))),
        }
    }
    for ((s, _, _), v) in miter.cuts.iter().zip(&regs) {
        step.regs.push((format!("spec/{s}"), *v));
    }
    for ((_, i, _), v) in miter.cuts.iter().zip(&regs) {
        step.regs.push((format!("imp/{i}"), *v));
    }
    let trace = Trace { steps: vec![step] };
    let mut v = Verdict::new(Status::NotEquivalent);
    v.failing_output = Some(name.to_string());
    if name.starts_with("next:") {
        v.trace = Some(trace);
        v.notes.push("next-state functions differ for the cut state in the trace".into());
    } else {
        let rep = replay(&task.spec, &task.imp, &task.mapping, &trace).map_err(SecError::from)?;
        if rep.first_mismatch.as_ref().map(|m| m.0) != Some(0) {
            return Err(SecError::Internal(format!("cec counterexample for {name} does not replay")).into());
        }
        v.cex_cycle = Some(0);
        v.trace = Some(rep.annotate(&trace));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{OutputPair, RegPair};
    use crate::netlist::Init;

    fn design(invert: bool) -> Netlist {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let c = b.input("c", InputKind::Primary);
        let (r, q) = b.register("r", Init::Zero);
        let x = b.xor(a, c);
        b.set_next(r, x);
        let y = b.and(q, a);
        b.output("y", y.inv_if(invert));
        b.finish()
    }

    fn mapping() -> Mapping {
        Mapping {
            inputs: vec![("a".into(), "a".into()), ("c".into(), "c".into())],
            outputs: vec![OutputPair { spec: "y".into(), imp: "y".into(), latency: (0, 0) }],
            registers: vec![RegPair { spec: "r".into(), imp: "r".into(), tag: PairTag::Candidate, dropped: None }],
            ..Default::default()
        }
    }

    #[test]
    fn identical_miter_is_constant() {
        let m = build_miter(&design(false), &design(false), &mapping()).unwrap();
        assert!(m.targets.iter().all(|(_, l)| *l == Lit::FALSE));
    }

    #[test]
    fn inverted_output_miter_is_constant_one() {
        let m = build_miter(&design(false), &design(true), &mapping()).unwrap();
        assert_eq!(m.targets[0].1, Lit::TRUE);
    }

    #[test]
    fn unmapped_register() {
        let mut m = mapping();
        m.registers.clear();
        assert_eq!(
            build_miter(&design(false), &design(false), &m).unwrap_err(),
            CecError::UnmappedState("spec/r".into())
        );
    }

    #[test]
    fn inverted_output_counterexample_replays() {
        let t = Task::new(design(false), design(true), mapping());
        let r = check_cec(&t).unwrap();
        assert_eq!(r.verdict.status, Status::NotEquivalent);
        assert_eq!(r.verdict.cex_cycle, Some(0));
    }
}
