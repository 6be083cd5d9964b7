//! BMC and k-induction over a product machine.

use std::collections::HashMap;

use crate::netlist::{Init, Lit};
use crate::sat::unroll::{InitMode, Unroller};
use crate::sat::{new_solver, ClauseSink, Lit as SatLit, Outcome, Solver};
use crate::sim::{Step, Trace};
use crate::tri::Tri;

use super::{ProductMachine, Status, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunResult {
    Proven { k: usize, depth: Option<usize> },
    /// `bad` is reachable at cycle `depth`.
    Cex { trace: Trace, depth: usize },
    Inconclusive { depth: Option<usize>, k: usize, hardest: Option<String> },
    /// Constraints kill every execution before cycle `depth`.
    Vacuous { depth: usize },
}

enum BaseOutcome {
    Clean,
    Cex(usize),
    Unknown,
    Dead,
}

/// Incremental BMC from the initial state.
pub(crate) struct Base<'a> {
    pub u: Unroller<'a>,
    pub s: Solver,
    pm: &'a ProductMachine,
}

impl<'a> Base<'a> {
    pub fn new(pm: &'a ProductMachine) -> Self {
        Base { u: Unroller::new(&pm.nl, InitMode::Constrain), s: new_solver(), pm }
    }

    /// Adds the next frame with its constraint asserted.
    pub fn extend(&mut self) -> usize {
        self.u.add_frame();
        let k = self.u.num_frames() - 1;
        let c = self.u.at(k, self.pm.constraint);
        let c = self.u.encode(&mut self.s, c);
        self.s.add_clause(&[c]);
        k
    }

    fn check_next(&mut self, conflicts: u64) -> BaseOutcome {
        let k = self.extend();
        let bad = self.u.at(k, self.pm.bad);
        let bad = self.u.encode(&mut self.s, bad);
        match self.s.solve(&[bad], Some(conflicts)) {
            Outcome::Sat => BaseOutcome::Cex(k),
            Outcome::Unknown => BaseOutcome::Unknown,
            Outcome::Unsat if self.s.core().is_empty() => BaseOutcome::Dead,
            Outcome::Unsat => {
                self.s.add_clause(&[!bad]);
                BaseOutcome::Clean
            }
        }
    }

    /// Decodes the last model into a trace of `frames` cycles.
    pub fn trace(&self, frames: usize) -> Trace {
        decode(&self.u, &self.s, self.pm, frames)
    }
}

pub(crate) fn decode(u: &Unroller, s: &Solver, pm: &ProductMachine, frames: usize) -> Trace {
    let nl = u.netlist();
    let model = |l: SatLit| s.model_value(l);
    let mut memo = HashMap::new();
    let mut steps = Vec::with_capacity(frames);
    for k in 0..frames {
        let mut step = Step::default();
        for i in &nl.inputs {
            let v = u.eval(u.at(k, Lit::new(i.node, false)), &model, &mut memo);
            step.inputs.push((i.name.clone(), Tri::from_bool(v)));
        }
        if k == 0 {
            let mut init = HashMap::new();
            for (ri, r) in nl.registers.iter().enumerate() {
                if r.init == Init::Uninit {
                    let v = u.eval(u.reg_at(0, ri), &model, &mut memo);
                    step.regs.push((r.name.clone(), v));
                    init.insert(r.name.as_str(), v);
                }
            }
            for (imp, spec) in &pm.merged {
                if let Some(&v) = init.get(spec.as_str()) {
                    step.regs.push((imp.clone(), v));
                }
            }
        }
        steps.push(step);
    }
    Trace { steps }
}

enum StepOutcome {
    Proven,
    Failed(Option<String>),
    Unknown,
}

/// Induction step over free initial states, with lazily added simple-path
/// constraints.
struct Induction<'a> {
    u: Unroller<'a>,
    s: Solver,
    pm: &'a ProductMachine,
}

impl<'a> Induction<'a> {
    fn new(pm: &'a ProductMachine) -> Self {
        let mut ind = Induction { u: Unroller::new(&pm.nl, InitMode::Free), s: new_solver(), pm };
        ind.frame();
        ind
    }

    fn frame(&mut self) -> usize {
        self.u.add_frame();
        let k = self.u.num_frames() - 1;
        for l in [self.pm.constraint, self.pm.lemma] {
            let g = self.u.at(k, l);
            let c = self.u.encode(&mut self.s, g);
            self.s.add_clause(&[c]);
        }
        k
    }

    /// Checks that `k` bad-free frames force a bad-free frame `k`.
    fn check(&mut self, k: usize, conflicts: u64) -> StepOutcome {
        while self.u.num_frames() <= k {
            let prev = self.u.num_frames() - 1;
            let b = self.u.at(prev, self.pm.bad);
            let b = self.u.encode(&mut self.s, b);
            self.s.add_clause(&[!b]);
            self.frame();
        }
        let bad = self.u.at(k, self.pm.bad);
        let bad = self.u.encode(&mut self.s, bad);
        loop {
            match self.s.solve(&[bad], Some(conflicts)) {
                Outcome::Unsat => return StepOutcome::Proven,
                Outcome::Unknown => return StepOutcome::Unknown,
                Outcome::Sat => {
                    if !self.break_loop(k) {
                        return StepOutcome::Failed(self.tripped(k));
                    }
                }
            }
        }
    }

    /// If the model revisits a product state, forbids that pair of frames
    /// from being equal and returns true.
    fn break_loop(&mut self, k: usize) -> bool {
        let nregs = self.pm.nl.registers.len();
        let states: Vec<Vec<bool>> = {
            let s = &self.s;
            let model = |l: SatLit| s.model_value(l);
            let mut memo = HashMap::new();
            (0..=k)
                .map(|f| (0..nregs).map(|r| self.u.eval(self.u.reg_at(f, r), &model, &mut memo)).collect())
                .collect()
        };
        let mut seen: HashMap<&[bool], usize> = HashMap::new();
        for (j, st) in states.iter().enumerate() {
            if let Some(&i) = seen.get(st.as_slice()) {
                let mut clause = Vec::with_capacity(nregs);
                for r in 0..nregs {
                    let (a, b) = (self.u.reg_at(i, r), self.u.reg_at(j, r));
                    let d = self.u.xor(a, b);
                    clause.push(self.u.encode(&mut self.s, d));
                }
                self.s.add_clause(&clause);
                return true;
            }
            seen.insert(st, j);
        }
        false
    }

    fn tripped(&self, k: usize) -> Option<String> {
        let model = |l: SatLit| self.s.model_value(l);
        let mut memo = HashMap::new();
        self.pm
            .miters
            .iter()
            .find(|(_, m)| self.u.eval(self.u.at(k, *m), &model, &mut memo))
            .map(|(n, _)| n.clone())
    }
}

/// Interleaves BMC frames 0..=bmc_depth with induction steps 1..=k_max.
pub(crate) fn run(pm: &ProductMachine, bmc_depth: usize, k_max: usize, conflicts: u64) -> RunResult {
    if pm.bad == Lit::FALSE {
        return RunResult::Proven { k: 0, depth: None };
    }
    let mut base = Base::new(pm);
    let mut ind = (k_max > 0).then(|| Induction::new(pm));
    let mut clean: Option<usize> = None;
    let mut hardest = None;
    let mut k_reached = 0;
    for d in 0..=bmc_depth.max(k_max.saturating_sub(1)) {
        match base.check_next(conflicts) {
            BaseOutcome::Clean => clean = Some(d),
            BaseOutcome::Cex(k) => return RunResult::Cex { trace: base.trace(k + 1), depth: k },
            BaseOutcome::Dead => return RunResult::Vacuous { depth: d },
            BaseOutcome::Unknown => break,
        }
        let k = d + 1;
        if let Some(i) = ind.as_mut().filter(|_| k <= k_max) {
            k_reached = k;
            match i.check(k, conflicts) {
                StepOutcome::Proven => return RunResult::Proven { k, depth: clean },
                StepOutcome::Failed(h) => hardest = h.or(hardest),
                StepOutcome::Unknown => {}
            }
        }
    }
    RunResult::Inconclusive { depth: clean, k: k_reached, hardest }
}

/// VACUOUS when the constraints cannot hold at cycle 0 or the qualifier
/// can never be 1 under them.
pub(crate) fn vacuity(pm: &ProductMachine, conflicts: u64) -> Option<Verdict> {
    let mut base = Base::new(pm);
    base.extend();
    if base.s.solve(&[], Some(conflicts)) == Outcome::Unsat {
        let mut v = Verdict::new(Status::Vacuous);
        v.notes.push("constraints are unsatisfiable in the initial state".into());
        return Some(v);
    }
    if pm.qualifier != Lit::TRUE {
        let mut u = Unroller::new(&pm.nl, InitMode::Free);
        let mut s = new_solver();
        u.add_frame();
        let both = u.and(u.at(0, pm.constraint), u.at(0, pm.qualifier));
        let l = u.encode(&mut s, both);
        if s.solve(&[l], Some(conflicts)) == Outcome::Unsat {
            let mut v = Verdict::new(Status::Vacuous);
            v.notes.push("the compare qualifier can never hold".into());
            return Some(v);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{Mapping, OutputPair};
    use crate::netlist::{InputKind, Netlist, NetlistBuilder};
    use crate::sec::{build_product, Task};

    /// Counter of `bits` bits counting up when `a` is 1; output is bit
    /// `bits - 1` (or the bit-vector being all ones, when `all`).
    fn counter(bits: usize, all: bool) -> Netlist {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let regs: Vec<(usize, Lit)> = (0..bits).map(|i| b.register(&format!("c[{i}]"), Init::Zero)).collect();
        let mut carry = a;
        for &(idx, q) in &regs {
            let n = b.xor(q, carry);
            carry = b.and(q, carry);
            b.set_next(idx, n);
        }
        let y = if all { b.and_all(regs.iter().map(|r| r.1)) } else { regs[bits - 1].1 };
        b.output("y", y);
        b.finish()
    }

    fn task(spec: Netlist, imp: Netlist) -> Task {
        let m = Mapping {
            inputs: vec![("a".into(), "a".into())],
            outputs: vec![OutputPair { spec: "y".into(), imp: "y".into(), latency: (0, 0) }],
            ..Default::default()
        };
        Task::new(spec, imp, m)
    }

    #[test]
    fn identical_counters_prove() {
        let c = counter(3, false);
        let pm = build_product(&task(c.clone(), c), &[]).unwrap();
        assert!(matches!(run(&pm, 10, 10, 100_000), RunResult::Proven { .. }));
    }

    #[test]
    fn first_difference_found_at_exact_depth() {
        // c[2] rises after 4 increments, all-ones after 7.
        let pm = build_product(&task(counter(3, false), counter(3, true)), &[]).unwrap();
        match run(&pm, 20, 0, 100_000) {
            RunResult::Cex { depth, trace } => {
                assert_eq!(depth, 4);
                assert_eq!(trace.len(), 5);
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn bmc_alone_is_inconclusive() {
        let c = counter(3, false);
        let pm = build_product(&task(c.clone(), c), &[]).unwrap();
        assert_eq!(run(&pm, 6, 0, 100_000), RunResult::Inconclusive { depth: Some(6), k: 0, hardest: None });
    }
}
