//! Time-frame expansion. Frames are copied into one structurally hashed
//! combinational graph, and only the cones actually queried are
//! Tseitin-encoded into the clause sink.

use std::collections::HashMap;

use super::{ClauseSink, CnfInstance, Lit as SatLit, Var};
use crate::netlist::{Init, Lit, Netlist, Node};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    /// Frame-0 registers fixed to their init value; UNINIT ones are free.
    Constrain,
    /// Frame-0 registers unconstrained (induction step).
    Free,
}

#[derive(Clone, Copy, Debug)]
enum FNode {
    Const,
    Free,
    And(Lit, Lit),
}

/// Per-frame view of netlist nodes.
#[derive(Clone, Debug, Default)]
pub struct FrameMap {
    /// `frames[k][node]` is the CNF literal of `node` at frame `k`.
    pub frames: Vec<Vec<SatLit>>,
}

impl FrameMap {
    pub fn lit(&self, frame: usize, l: Lit) -> SatLit {
        self.frames[frame][l.node() as usize].neg_if(l.is_inverted())
    }
}

#[derive(Clone, Debug)]
pub struct Unroller<'a> {
    nl: &'a Netlist,
    init: InitMode,
    nodes: Vec<FNode>,
    vars: Vec<Option<Var>>,
    hash: HashMap<(Lit, Lit), u32>,
    frames: Vec<Vec<Lit>>,
}

impl<'a> Unroller<'a> {
    pub fn new(nl: &'a Netlist, init: InitMode) -> Self {
        Unroller {
            nl,
            init,
            nodes: vec![FNode::Const],
            vars: vec![None],
            hash: HashMap::new(),
            frames: Vec::new(),
        }
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.nl
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn graph_size(&self) -> usize {
        self.nodes.len()
    }

    pub fn free(&mut self) -> Lit {
        self.nodes.push(FNode::Free);
        self.vars.push(None);
        Lit::new((self.nodes.len() - 1) as u32, false)
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == Lit::FALSE || a == !b {
            return Lit::FALSE;
        }
        if a == Lit::TRUE || a == b {
            return b;
        }
        if let Some(&n) = self.hash.get(&(a, b)) {
            return Lit::new(n, false);
        }
        self.nodes.push(FNode::And(a, b));
        self.vars.push(None);
        let n = (self.nodes.len() - 1) as u32;
        self.hash.insert((a, b), n);
        Lit::new(n, false)
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let x = self.and(a, !b);
        let y = self.and(!a, b);
        self.or(x, y)
    }

    /// Appends the next time frame.
    pub fn add_frame(&mut self) {
        let k = self.frames.len();
        let mut map = vec![Lit::FALSE; self.nl.nodes.len()];
        for (id, node) in self.nl.nodes.iter().enumerate() {
            map[id] = match *node {
                Node::Const => Lit::FALSE,
                Node::Input(_) => self.free(),
                Node::Reg(r) => {
                    let reg = &self.nl.registers[r as usize];
                    if k > 0 {
                        let prev = &self.frames[k - 1];
                        prev[reg.next.node() as usize].inv_if(reg.next.is_inverted())
                    } else {
                        match (self.init, reg.init) {
                            (InitMode::Constrain, Init::Zero) => Lit::FALSE,
                            (InitMode::Constrain, Init::One) => Lit::TRUE,
                            _ => self.free(),
                        }
                    }
                }
                Node::And(a, b) => {
                    let la = map[a.node() as usize].inv_if(a.is_inverted());
                    let lb = map[b.node() as usize].inv_if(b.is_inverted());
                    self.and(la, lb)
                }
            };
        }
        self.frames.push(map);
    }

    /// Graph literal of netlist literal `l` at `frame`.
    pub fn at(&self, frame: usize, l: Lit) -> Lit {
        self.frames[frame][l.node() as usize].inv_if(l.is_inverted())
    }

    /// Graph literal of a register's current state at `frame`.
    pub fn reg_at(&self, frame: usize, reg: usize) -> Lit {
        self.at(frame, Lit::new(self.nl.registers[reg].node, false))
    }

    /// Tseitin-encodes the cone of `l` and returns its CNF literal.
    pub fn encode<S: ClauseSink>(&mut self, sink: &mut S, l: Lit) -> SatLit {
        let mut stack = vec![(l.node(), false)];
        while let Some((n, expanded)) = stack.pop() {
            if self.vars[n as usize].is_some() {
                continue;
            }
            match self.nodes[n as usize] {
                FNode::Const => {
                    let v = sink.new_var();
                    sink.add_clause(&[v.neg()]);
                    self.vars[n as usize] = Some(v);
                }
                FNode::Free => self.vars[n as usize] = Some(sink.new_var()),
                FNode::And(a, b) if expanded => {
                    let v = sink.new_var();
                    let sa = self.cnf_lit(a);
                    let sb = self.cnf_lit(b);
                    sink.add_clause(&[v.neg(), sa]);
                    sink.add_clause(&[v.neg(), sb]);
                    sink.add_clause(&[v.pos(), !sa, !sb]);
                    self.vars[n as usize] = Some(v);
                }
                FNode::And(a, b) => {
                    stack.push((n, true));
                    stack.push((a.node(), false));
                    stack.push((b.node(), false));
                }
            }
        }
        self.cnf_lit(l)
    }

    fn cnf_lit(&self, l: Lit) -> SatLit {
        self.vars[l.node() as usize].expect("node not encoded").pos().neg_if(l.is_inverted())
    }

    /// CNF literal of an already encoded graph literal.
    pub fn encoded(&self, l: Lit) -> Option<SatLit> {
        self.vars[l.node() as usize].map(|v| v.pos().neg_if(l.is_inverted()))
    }

    /// Evaluates a graph literal under a model; free nodes that were never
    /// encoded read as false.
    pub fn eval(&self, l: Lit, model: &dyn Fn(SatLit) -> bool, memo: &mut HashMap<u32, bool>) -> bool {
        let mut stack = vec![l.node()];
        while let Some(&n) = stack.last() {
            if memo.contains_key(&n) {
                stack.pop();
                continue;
            }
            if let Some(v) = self.vars[n as usize] {
                memo.insert(n, model(v.pos()));
                stack.pop();
                continue;
            }
            match self.nodes[n as usize] {
                FNode::Const => {
                    memo.insert(n, false);
                    stack.pop();
                }
                FNode::Free => {
                    memo.insert(n, false);
                    stack.pop();
                }
                FNode::And(a, b) => match (memo.get(&a.node()), memo.get(&b.node())) {
                    (Some(&va), Some(&vb)) => {
                        memo.insert(n, (va ^ a.is_inverted()) && (vb ^ b.is_inverted()));
                        stack.pop();
                    }
                    _ => {
                        stack.push(a.node());
                        stack.push(b.node());
                    }
                },
            }
        }
        memo[&l.node()] ^ l.is_inverted()
    }
}

/// Fully encodes `frames` time frames of `nl`.
pub fn unroll(nl: &Netlist, frames: usize, init: InitMode) -> (CnfInstance, FrameMap) {
    let mut u = Unroller::new(nl, init);
    let mut cnf = CnfInstance::default();
    let mut map = FrameMap::default();
    for k in 0..frames {
        u.add_frame();
        let lits: Vec<SatLit> = (0..nl.nodes.len())
            .map(|id| {
                let g = u.at(k, Lit::new(id as u32, false));
                u.encode(&mut cnf, g)
            })
            .collect();
        map.frames.push(lits);
    }
    (cnf, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{InputKind, NetlistBuilder};
    use crate::sat::SolveResult;

    fn toggler() -> Netlist {
        let mut b = NetlistBuilder::new();
        let (idx, r) = b.register("r", Init::Zero);
        b.set_next(idx, !r);
        b.output("y", r);
        b.finish()
    }

    fn trajectories(nl: &Netlist, init: InitMode) -> Vec<Vec<bool>> {
        let (cnf, map) = unroll(nl, 3, init);
        let r = Lit::new(nl.registers[0].node, false);
        let mut found = Vec::new();
        for bits in 0..8u32 {
            let assumptions: Vec<SatLit> =
                (0..3).map(|k| map.lit(k, r).neg_if(bits >> k & 1 == 0)).collect();
            if let SolveResult::Sat(_) = cnf.solve(&assumptions, None) {
                found.push((0..3).map(|k| bits >> k & 1 == 1).collect());
            }
        }
        found
    }

    #[test]
    fn constrained_toggle_is_forced() {
        assert_eq!(trajectories(&toggler(), InitMode::Constrain), vec![vec![false, true, false]]);
    }

    #[test]
    fn free_toggle_has_both_phases() {
        let t = trajectories(&toggler(), InitMode::Free);
        assert_eq!(t.len(), 2);
        assert!(t.contains(&vec![false, true, false]));
        assert!(t.contains(&vec![true, false, true]));
    }

    #[test]
    fn next_state_equals_following_frame() {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let (idx, r) = b.register("r", Init::Zero);
        let n = b.xor(a, r);
        b.set_next(idx, n);
        let nl = b.finish();
        let (_, map) = unroll(&nl, 3, InitMode::Constrain);
        for k in 0..2 {
            assert_eq!(map.lit(k, nl.registers[0].next), map.lit(k + 1, r));
        }
    }
}
