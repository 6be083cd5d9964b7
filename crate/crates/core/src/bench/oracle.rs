//! Explicit-state reachability over the product of two netlists.
//!
//! Shares no code with the SAT engines: the product state (both register
//! vectors, latency delay lines, a saturating cycle counter) is explored
//! breadth-first, and each state is expanded over every input valuation
//! with a 64-lane word evaluator.

use std::collections::HashSet;

use thiserror::Error;

use crate::frontend::{attach_condition, parse_expr, FrontendError};
use crate::netlist::{Init, Lit, Netlist, Node};
use crate::sec::{Status, Task};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("more than {0} reachable product states")]
    TooManyStates(usize),
    #[error("{0} free input bits per cycle is beyond exhaustive enumeration")]
    TooManyInputs(usize),
    #[error("product state needs {0} bits")]
    StateTooWide(usize),
    #[error("unknown net {0}")]
    UnknownNet(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    /// EQUIVALENT, NOT_EQUIVALENT or VACUOUS.
    pub status: Status,
    /// First cycle at which some qualified output pair differs.
    pub cex_cycle: Option<usize>,
    /// Reachable product states explored.
    pub states: usize,
}

pub const MAX_INPUT_BITS: usize = 20;
/// Default state budget: the explicit-state tier covers at most 2^12
/// product states.
pub const DEFAULT_MAX_STATES: usize = 1 << 12;

const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// One design plus the conditions compiled onto it.
struct Side {
    nl: Netlist,
    /// Input index -> enumeration variable.
    var: Vec<usize>,
    conds: Vec<Lit>,
    quals: Vec<Lit>,
    vals: Vec<u64>,
}

impl Side {
    fn new(nl: &Netlist) -> Side {
        Side { nl: nl.clone(), var: Vec::new(), conds: Vec::new(), quals: Vec::new(), vals: Vec::new() }
    }

    fn try_attach(&mut self, text: &str) -> Result<Option<Lit>, OracleError> {
        let e = parse_expr(text)?;
        match attach_condition(&self.nl, &e) {
            Ok((nl, l)) => {
                self.nl = nl;
                Ok(Some(l))
            }
            Err(FrontendError::Undeclared { .. }) | Err(FrontendError::Semantic { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn eval(&mut self, state: &[bool], inputs: &[u64]) {
        let nl = &self.nl;
        self.vals.clear();
        self.vals.resize(nl.nodes.len(), 0);
        for (id, n) in nl.nodes.iter().enumerate() {
            let v = match *n {
                Node::Const => 0,
                Node::Input(i) => inputs[self.var[i as usize]],
                Node::Reg(r) => {
                    if state[r as usize] {
                        !0
                    } else {
                        0
                    }
                }
                Node::And(a, b) => lit_val(&self.vals, a) & lit_val(&self.vals, b),
            };
            self.vals[id] = v;
        }
    }

    fn lit(&self, l: Lit) -> u64 {
        lit_val(&self.vals, l)
    }
}

fn lit_val(vals: &[u64], l: Lit) -> u64 {
    let v = vals[l.node() as usize];
    if l.is_inverted() {
        !v
    } else {
        v
    }
}

struct Compare {
    spec_out: usize,
    imp_out: usize,
    /// Delay on the SPEC side (else IMP side) and its length.
    delay_spec: bool,
    delay: usize,
    /// First compared cycle.
    from: usize,
    /// Offset of the delay line in the state vector.
    offset: usize,
}

/// Explores the product of `task.spec` and `task.imp` under the mapping's
/// input ties, latencies and qualifier and the task's constraints. Helpers,
/// case splits and register pairs are ignored: they never change the
/// answer.
pub fn explore(task: &Task, max_states: usize) -> Result<OracleResult, OracleError> {
    let mut spec = Side::new(&task.spec);
    let mut imp = Side::new(&task.imp);
    for c in &task.constraints {
        if let Some(l) = spec.try_attach(c)? {
            spec.conds.push(l);
        } else if let Some(l) = imp.try_attach(c)? {
            imp.conds.push(l);
        } else {
            return Err(OracleError::UnknownNet(c.clone()));
        }
    }
    if let Some(q) = &task.mapping.qualifier {
        if let Some(l) = spec.try_attach(q)? {
            spec.quals.push(l);
        } else if let Some(l) = imp.try_attach(q)? {
            imp.quals.push(l);
        } else {
            return Err(OracleError::UnknownNet(q.clone()));
        }
    }

    // Enumeration variables: tied pairs, then free SPEC, then free IMP inputs.
    let mut nvars = 0;
    spec.var = vec![usize::MAX; spec.nl.inputs.len()];
    imp.var = vec![usize::MAX; imp.nl.inputs.len()];
    for (s, i) in &task.mapping.inputs {
        let si = spec.nl.input_index(s).ok_or_else(|| OracleError::UnknownNet(s.clone()))?;
        let ii = imp.nl.input_index(i).ok_or_else(|| OracleError::UnknownNet(i.clone()))?;
        spec.var[si] = nvars;
        imp.var[ii] = nvars;
        nvars += 1;
    }
    for side in [&mut spec, &mut imp] {
        for v in side.var.iter_mut().filter(|v| **v == usize::MAX) {
            *v = nvars;
            nvars += 1;
        }
    }
    if nvars > MAX_INPUT_BITS {
        return Err(OracleError::TooManyInputs(nvars));
    }

    let ns = task.spec.registers.len();
    let ni = task.imp.registers.len();
    let mut cmps = Vec::new();
    let mut width = ns + ni;
    for o in &task.mapping.outputs {
        let so = task.spec.output_index(&o.spec).ok_or_else(|| OracleError::UnknownNet(o.spec.clone()))?;
        let io = task.imp.output_index(&o.imp).ok_or_else(|| OracleError::UnknownNet(o.imp.clone()))?;
        let (ls, li) = (o.latency.0 as usize, o.latency.1 as usize);
        let delay = ls.abs_diff(li);
        cmps.push(Compare { spec_out: so, imp_out: io, delay_spec: ls < li, delay, from: ls.max(li), offset: width });
        width += delay;
    }
    let horizon = cmps.iter().map(|c| c.from).max().unwrap_or(0);
    let counter_bits = usize::BITS as usize - horizon.leading_zeros() as usize;
    let counter_at = width;
    width += counter_bits;
    if width > 128 {
        return Err(OracleError::StateTooWide(width));
    }

    // Initial states: every combination of uninitialized register values.
    let mut init = 0u128;
    let mut free_bits = Vec::new();
    for (k, r) in task.spec.registers.iter().chain(&task.imp.registers).enumerate() {
        match r.init {
            Init::One => init |= 1 << k,
            Init::Zero => {}
            Init::Uninit => free_bits.push(k),
        }
    }
    if free_bits.len() > 20 || 1usize << free_bits.len() > max_states {
        return Err(OracleError::TooManyStates(max_states));
    }
    let mut frontier: Vec<u128> = (0..1u64 << free_bits.len())
        .map(|m| {
            free_bits.iter().enumerate().fold(init, |acc, (j, &b)| if m >> j & 1 == 1 { acc | 1 << b } else { acc })
        })
        .collect();
    let mut seen: HashSet<u128> = frontier.iter().copied().collect();

    let batches = if nvars <= 6 { 1 } else { 1usize << (nvars - 6) };
    let lane_mask = if nvars >= 6 { !0u64 } else { (1u64 << (1 << nvars)) - 1 };
    let mut inputs = vec![0u64; nvars];
    let mut sbits = vec![false; ns];
    let mut ibits = vec![false; ni];
    let mut died = false;
    let mut qualified = false;
    let mut depth = 0usize;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        let mut alive = false;
        for &st in &frontier {
            for (k, b) in sbits.iter_mut().enumerate() {
                *b = st >> k & 1 == 1;
            }
            for (k, b) in ibits.iter_mut().enumerate() {
                *b = st >> (ns + k) & 1 == 1;
            }
            let t = ((st >> counter_at) & ((1u128 << counter_bits) - 1)) as usize;
            for batch in 0..batches {
                for (v, w) in inputs.iter_mut().enumerate() {
                    *w = if v < 6 {
                        LANE_PATTERNS[v]
                    } else if batch >> (v - 6) & 1 == 1 {
                        !0
                    } else {
                        0
                    };
                }
                spec.eval(&sbits, &inputs);
                imp.eval(&ibits, &inputs);
                let mut ok = lane_mask;
                for &c in &spec.conds {
                    ok &= spec.lit(c);
                }
                for &c in &imp.conds {
                    ok &= imp.lit(c);
                }
                if ok == 0 {
                    continue;
                }
                alive = true;
                let mut q = ok;
                for &l in &spec.quals {
                    q &= spec.lit(l);
                }
                for &l in &imp.quals {
                    q &= imp.lit(l);
                }
                if q != 0 {
                    qualified = true;
                }
                let mut bad = 0u64;
                for c in &cmps {
                    if t < c.from {
                        continue;
                    }
                    let mut a = spec.lit(task.spec.outputs[c.spec_out].lit);
                    let mut b = imp.lit(task.imp.outputs[c.imp_out].lit);
                    if c.delay > 0 {
                        let old = if st >> (c.offset + c.delay - 1) & 1 == 1 { !0 } else { 0 };
                        if c.delay_spec {
                            a = old;
                        } else {
                            b = old;
                        }
                    }
                    bad |= q & (a ^ b);
                }
                if bad != 0 {
                    return Ok(OracleResult { status: Status::NotEquivalent, cex_cycle: Some(depth), states: seen.len() });
                }
                // Successors, one per surviving lane.
                let snext: Vec<u64> = task.spec.registers.iter().map(|r| spec.lit(r.next)).collect();
                let inext: Vec<u64> = task.imp.registers.iter().map(|r| imp.lit(r.next)).collect();
                let short: Vec<u64> = cmps
                    .iter()
                    .map(|c| {
                        if c.delay_spec {
                            spec.lit(task.spec.outputs[c.spec_out].lit)
                        } else {
                            imp.lit(task.imp.outputs[c.imp_out].lit)
                        }
                    })
                    .collect();
                let t_next = (t + 1).min(horizon) as u128;
                for lane in 0..64 {
                    if ok >> lane & 1 == 0 {
                        continue;
                    }
                    let mut s = 0u128;
                    for (k, w) in snext.iter().chain(&inext).enumerate() {
                        s |= ((w >> lane & 1) as u128) << k;
                    }
                    for (c, w) in cmps.iter().zip(&short) {
                        if c.delay == 0 {
                            continue;
                        }
                        s |= ((w >> lane & 1) as u128) << c.offset;
                        for j in 1..c.delay {
                            s |= (st >> (c.offset + j - 1) & 1) << (c.offset + j);
                        }
                    }
                    s |= t_next << counter_at;
                    if seen.insert(s) {
                        if seen.len() > max_states {
                            return Err(OracleError::TooManyStates(max_states));
                        }
                        next.push(s);
                    }
                }
            }
        }
        if !alive {
            // Every execution stops here.
            died = true;
            break;
        }
        frontier = next;
        depth += 1;
    }
    let status = if died || !qualified { Status::Vacuous } else { Status::Equivalent };
    Ok(OracleResult { status, cex_cycle: None, states: seen.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{Mapping, OutputPair};
    use crate::netlist::{InputKind, NetlistBuilder};

    /// y = a delayed by `n` registers, optionally inverted twice.
    fn shift(n: usize, name: &str) -> Netlist {
        let mut b = NetlistBuilder::new();
        let mut x = b.input("a", InputKind::Primary);
        for k in 0..n {
            let (r, q) = b.register(&format!("{name}{k}"), Init::Zero);
            b.set_next(r, x);
            x = q;
        }
        b.output("y", x);
        b.finish()
    }

    fn task(spec: Netlist, imp: Netlist, lat: (u32, u32)) -> Task {
        let m = Mapping {
            inputs: vec![("a".into(), "a".into())],
            outputs: vec![OutputPair { spec: "y".into(), imp: "y".into(), latency: lat }],
            ..Default::default()
        };
        Task::new(spec, imp, m)
    }

    #[test]
    fn equal_shift_registers() {
        let r = explore(&task(shift(3, "r"), shift(3, "q"), (0, 0)), 1 << 12).unwrap();
        assert_eq!(r.status, Status::Equivalent);
        // 3-bit shift register on each side, tied: 8 reachable pairs.
        assert_eq!(r.states, 8);
    }

    #[test]
    fn latency_difference() {
        let r = explore(&task(shift(2, "r"), shift(3, "q"), (0, 0)), 1 << 12).unwrap();
        assert_eq!((r.status, r.cex_cycle), (Status::NotEquivalent, Some(2)));
        let r = explore(&task(shift(2, "r"), shift(3, "q"), (0, 1)), 1 << 12).unwrap();
        assert_eq!(r.status, Status::Equivalent);
    }

    #[test]
    fn constraint_and_vacuity() {
        let mut t = task(shift(0, "r"), shift(1, "q"), (0, 0));
        assert_eq!(explore(&t, 64).unwrap().cex_cycle, Some(0));
        t.constraints = vec!["a == 0".into()];
        assert_eq!(explore(&t, 64).unwrap().status, Status::Equivalent);
        t.constraints = vec!["a == 0 && a == 1".into()];
        assert_eq!(explore(&t, 64).unwrap().status, Status::Vacuous);
    }

    #[test]
    fn state_budget() {
        assert_eq!(
            explore(&task(shift(6, "r"), shift(6, "q"), (0, 0)), 16),
            Err(OracleError::TooManyStates(16))
        );
    }
}
