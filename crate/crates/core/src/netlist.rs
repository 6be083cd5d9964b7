//! Bit-level sequential netlist: an and-inverter graph plus registers,
//! primary I/O, black-box boundaries and a flat hierarchical name table.
//!
//! Every engine in the crate consumes this form. Netlists produced by
//! [`NetlistBuilder`] keep AND nodes in topological order (fanins always
//! have smaller node ids); raw netlists assembled by hand should go through
//! [`Netlist::normalized`] before being handed to an engine.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::ops::Not;

use thiserror::Error;

pub type NodeId = u32;

/// A reference to a node with an optional inversion.
///
/// Node 0 is the constant FALSE, so `Lit::FALSE` and `Lit::TRUE` are the
/// only constants in the IR.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Lit(u32);

impl Lit {
    pub const FALSE: Lit = Lit(0);
    pub const TRUE: Lit = Lit(1);

    #[inline]
    pub fn new(node: NodeId, inverted: bool) -> Lit {
        Lit((node << 1) | inverted as u32)
    }

    #[inline]
    pub fn node(self) -> NodeId {
        self.0 >> 1
    }

    #[inline]
    pub fn is_inverted(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn regular(self) -> Lit {
        Lit(self.0 & !1)
    }

    #[inline]
    pub fn inv_if(self, c: bool) -> Lit {
        Lit(self.0 ^ c as u32)
    }

    #[inline]
    pub fn is_const(self) -> bool {
        self.node() == 0
    }

    pub fn raw(self) -> u32 {
        self.0
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
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Lit::FALSE => write!(f, "0"),
            Lit::TRUE => write!(f, "1"),
            l if l.is_inverted() => write!(f, "!n{}", l.node()),
            l => write!(f, "n{}", l.node()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const,
    /// Index into [`Netlist::inputs`].
    Input(u32),
    /// Current-state value of [`Netlist::registers`]`[i]`.
    Reg(u32),
    And(Lit, Lit),
}

/// Where a free input comes from. Only primary inputs and black-box outputs
/// are candidates for tying across designs; X sources are always per side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum InputKind {
    Primary,
    BlackBox,
    XSource,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Input {
    pub name: String,
    pub node: NodeId,
    pub kind: InputKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Init {
    Zero,
    One,
    /// No reset value: any initial value is possible, fixed for the trace.
    Uninit,
}

impl Init {
    pub fn from_bool(b: bool) -> Init {
        if b {
            Init::One
        } else {
            Init::Zero
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub node: NodeId,
    pub next: Lit,
    pub init: Init,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub lit: Lit,
}

/// A removed submodule. Its former input ports are observed as outputs of
/// the netlist, its former output ports are free inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlackBoxInstance {
    pub name: String,
    pub inputs: Vec<(String, Lit)>,
    pub outputs: Vec<(String, NodeId)>,
}

/// Port boundary of an elaborated submodule instance, kept so that
/// [`Netlist::black_box`] can cut the instance out later.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceBoundary {
    pub path: String,
    pub scope: u32,
    pub inputs: Vec<(String, Lit)>,
    pub outputs: Vec<(String, Lit)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Netlist {
    pub nodes: Vec<Node>,
    pub inputs: Vec<Input>,
    pub outputs: Vec<Output>,
    pub registers: Vec<Register>,
    pub blackboxes: Vec<BlackBoxInstance>,
    /// Net name -> reference; hierarchical names are joined with `.`, bits
    /// of multi-bit nets carry a `[i]` suffix.
    pub names: BTreeMap<String, Lit>,
    /// Scope table; scope 0 is the top module.
    pub scopes: Vec<String>,
    /// Owning scope for every node.
    pub node_scope: Vec<u32>,
    pub instances: Vec<InstanceBoundary>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("combinational cycle: {}", .0.join(" -> "))]
    CombinationalCycle(Vec<String>),
    #[error("dangling reference in {0}")]
    DanglingRef(String),
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("unknown net {0}")]
    UnknownNet(String),
    #[error("no instance matches {0}")]
    NoSuchInstance(String),
}

/// Name of bit `i` of a `width`-bit net.
pub fn bit_name(base: &str, width: u32, i: u32) -> String {
    if width == 1 {
        base.to_string()
    } else {
        format!("{base}[{i}]")
    }
}

/// Splits `a.b[3]` into (`a.b`, Some(3)).
pub fn split_bit_name(name: &str) -> (&str, Option<u32>) {
    if let Some(stripped) = name.strip_suffix(']') {
        if let Some(pos) = stripped.rfind('[') {
            if let Ok(i) = stripped[pos + 1..].parse() {
                return (&name[..pos], Some(i));
            }
        }
    }
    (name, None)
}

impl Netlist {
    pub fn num_ands(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::And(..))).count()
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|i| i.name == name)
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o.name == name)
    }

    pub fn register_index(&self, name: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.name == name)
    }

    /// Looks a net up by exact name, falling back to output names.
    pub fn lookup(&self, name: &str) -> Option<Lit> {
        self.names
            .get(name)
            .copied()
            .or_else(|| self.output_index(name).map(|i| self.outputs[i].lit))
    }

    /// Bits of a word-level net, LSB first. Accepts a bit name as well.
    pub fn lookup_word(&self, base: &str) -> Option<Vec<Lit>> {
        if let Some(l) = self.lookup(base) {
            return Some(vec![l]);
        }
        let mut bits = Vec::new();
        while let Some(l) = self.lookup(&format!("{base}[{}]", bits.len())) {
            bits.push(l);
        }
        (!bits.is_empty()).then_some(bits)
    }

    /// Word-level view of a list of bit names, in first-appearance order.
    pub fn words<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<(String, u32)> {
        let mut order: Vec<String> = Vec::new();
        let mut width: HashMap<String, u32> = HashMap::new();
        for n in names {
            let (base, idx) = split_bit_name(n);
            let w = idx.map(|i| i + 1).unwrap_or(1);
            match width.get_mut(base) {
                Some(cur) => *cur = (*cur).max(w),
                None => {
                    order.push(base.to_string());
                    width.insert(base.to_string(), w);
                }
            }
        }
        order.into_iter().map(|b| {
            let w = width[&b];
            (b, w)
        }).collect()
    }

    fn describe(&self, node: NodeId) -> String {
        match self.nodes.get(node as usize) {
            Some(Node::Input(i)) => self.inputs.get(*i as usize).map(|x| x.name.clone()),
            Some(Node::Reg(i)) => self.registers.get(*i as usize).map(|x| x.name.clone()),
            _ => self
                .names
                .iter()
                .find(|(_, l)| l.node() == node)
                .map(|(n, _)| n.clone()),
        }
        .unwrap_or_else(|| format!("n{node}"))
    }

    /// Checks every structural invariant: references resolve, the
    /// combinational core is acyclic, and names are unique.
    pub fn validate(&self) -> Result<(), NetlistError> {
        let n = self.nodes.len() as u32;
        if n == 0 || self.nodes[0] != Node::Const {
            return Err(NetlistError::DanglingRef("constant node 0".into()));
        }
        let ok = |l: Lit| l.node() < n;
        for (id, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Const if id != 0 => {
                    return Err(NetlistError::DanglingRef(format!("extra constant n{id}")))
                }
                Node::Input(i) => {
                    if self.inputs.get(i as usize).map(|x| x.node) != Some(id as u32) {
                        return Err(NetlistError::DanglingRef(format!("input node n{id}")));
                    }
                }
                Node::Reg(i) => {
                    if self.registers.get(i as usize).map(|x| x.node) != Some(id as u32) {
                        return Err(NetlistError::DanglingRef(format!("register node n{id}")));
                    }
                }
                Node::And(a, b) => {
                    if !ok(a) || !ok(b) {
                        return Err(NetlistError::DanglingRef(self.describe(id as u32)));
                    }
                }
                Node::Const => {}
            }
        }
        for inp in &self.inputs {
            if self.nodes.get(inp.node as usize).is_none() {
                return Err(NetlistError::DanglingRef(inp.name.clone()));
            }
        }
        for o in &self.outputs {
            if !ok(o.lit) {
                return Err(NetlistError::DanglingRef(o.name.clone()));
            }
        }
        for r in &self.registers {
            if !ok(r.next) || self.nodes.get(r.node as usize).is_none() {
                return Err(NetlistError::DanglingRef(r.name.clone()));
            }
        }
        for (name, l) in &self.names {
            if !ok(*l) {
                return Err(NetlistError::DanglingRef(name.clone()));
            }
        }
        for bb in &self.blackboxes {
            for (name, l) in &bb.inputs {
                if !ok(*l) {
                    return Err(NetlistError::DanglingRef(name.clone()));
                }
            }
        }

        let mut seen = HashSet::new();
        for name in self
            .inputs
            .iter()
            .map(|i| &i.name)
            .chain(self.registers.iter().map(|r| &r.name))
        {
            if !seen.insert(name.as_str()) {
                return Err(NetlistError::DuplicateName(name.clone()));
            }
        }
        let mut seen = HashSet::new();
        for o in &self.outputs {
            if !seen.insert(o.name.as_str()) {
                return Err(NetlistError::DuplicateName(o.name.clone()));
            }
        }

        // Iterative DFS; colour 1 = on stack, 2 = done.
        let mut colour = vec![0u8; self.nodes.len()];
        for root in 0..self.nodes.len() {
            if colour[root] != 0 {
                continue;
            }
            let mut stack: Vec<(u32, u8)> = vec![(root as u32, 0)];
            colour[root] = 1;
            while let Some(&mut (node, ref mut child)) = stack.last_mut() {
                let fanins = match self.nodes[node as usize] {
                    Node::And(a, b) => [a.node(), b.node()],
                    _ => {
                        colour[node as usize] = 2;
                        stack.pop();
                        continue;
                    }
                };
                if *child == 2 {
                    colour[node as usize] = 2;
                    stack.pop();
                    continue;
                }
                let next = fanins[*child as usize];
                *child += 1;
                match colour[next as usize] {
                    0 => {
                        colour[next as usize] = 1;
                        stack.push((next, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|(n, _)| *n == next).unwrap();
                        let mut path: Vec<String> =
                            stack[start..].iter().map(|(n, _)| self.describe(*n)).collect();
                        path.push(self.describe(next));
                        return Err(NetlistError::CombinationalCycle(path));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn is_topological(&self) -> bool {
        self.nodes.iter().enumerate().all(|(id, n)| match n {
            Node::And(a, b) => (a.node() as usize) < id && (b.node() as usize) < id,
            _ => true,
        })
    }

    /// Validates and renumbers nodes into topological order.
    pub fn normalized(self) -> Result<Netlist, NetlistError> {
        self.validate()?;
        if self.is_topological() {
            return Ok(self);
        }
        let mut order: Vec<u32> = Vec::with_capacity(self.nodes.len());
        let mut placed = vec![false; self.nodes.len()];
        let mut stack = Vec::new();
        for root in 0..self.nodes.len() as u32 {
            if placed[root as usize] {
                continue;
            }
            stack.push((root, false));
            while let Some((n, expanded)) = stack.pop() {
                if placed[n as usize] {
                    continue;
                }
                match (self.nodes[n as usize], expanded) {
                    (Node::And(a, b), false) => {
                        stack.push((n, true));
                        stack.push((b.node(), false));
                        stack.push((a.node(), false));
                    }
                    _ => {
                        placed[n as usize] = true;
                        order.push(n);
                    }
                }
            }
        }
        let mut new_id = vec![0u32; self.nodes.len()];
        for (i, &old) in order.iter().enumerate() {
            new_id[old as usize] = i as u32;
        }
        let map = |l: Lit| Lit::new(new_id[l.node() as usize], l.is_inverted());
        let mut out = self.clone();
        out.nodes = order
            .iter()
            .map(|&old| match self.nodes[old as usize] {
                Node::And(a, b) => Node::And(map(a), map(b)),
                other => other,
            })
            .collect();
        out.node_scope = order
            .iter()
            .map(|&old| self.node_scope.get(old as usize).copied().unwrap_or(0))
            .collect();
        for i in &mut out.inputs {
            i.node = new_id[i.node as usize];
        }
        for r in &mut out.registers {
            r.node = new_id[r.node as usize];
            r.next = map(r.next);
        }
        for o in &mut out.outputs {
            o.lit = map(o.lit);
        }
        for l in out.names.values_mut() {
            *l = map(*l);
        }
        for bb in &mut out.blackboxes {
            for (_, l) in &mut bb.inputs {
                *l = map(*l);
            }
            for (_, n) in &mut bb.outputs {
                *n = new_id[*n as usize];
            }
        }
        for inst in &mut out.instances {
            for (_, l) in inst.inputs.iter_mut().chain(inst.outputs.iter_mut()) {
                *l = map(*l);
            }
        }
        Ok(out)
    }

    /// Nodes transitively feeding `roots`, following register next-state
    /// functions (sequential cone).
    pub fn sequential_support(&self, roots: &[Lit]) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        let mut stack: Vec<u32> = roots.iter().map(|l| l.node()).collect();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut mark[n as usize], true) {
                continue;
            }
            match self.nodes[n as usize] {
                Node::And(a, b) => {
                    stack.push(a.node());
                    stack.push(b.node());
                }
                Node::Reg(r) => stack.push(self.registers[r as usize].next.node()),
                _ => {}
            }
        }
        mark
    }

    /// Sub-netlist of everything feeding the named nets. The targets become
    /// the outputs of the result.
    pub fn cone_of_influence(&self, targets: &[&str]) -> Result<Netlist, NetlistError> {
        let mut roots = Vec::new();
        for t in targets {
            let lit = self
                .lookup(t)
                .ok_or_else(|| NetlistError::UnknownNet(t.to_string()))?;
            roots.push((t.to_string(), lit));
        }
        let lits: Vec<Lit> = roots.iter().map(|(_, l)| *l).collect();
        let keep = self.sequential_support(&lits);
        let mut rb = Rebuilder::new(self, keep, HashMap::new(), false);
        rb.copy_all();
        let mut b = rb.builder;
        for (name, lit) in roots {
            let l = rb.map[lit.node() as usize].unwrap().inv_if(lit.is_inverted());
            b.output(&name, l);
        }
        for bb in &self.blackboxes {
            let outs: Vec<(String, NodeId)> = bb
                .outputs
                .iter()
                .filter_map(|(n, id)| rb.map[*id as usize].map(|l| (n.clone(), l.node())))
                .collect();
            if !outs.is_empty() {
                b.nl.blackboxes.push(BlackBoxInstance {
                    name: bb.name.clone(),
                    inputs: vec![],
                    outputs: outs,
                });
            }
        }
        Ok(b.finish())
    }

    /// Removes every submodule instance whose hierarchical path starts with
    /// one of `prefixes`. Boundary inputs of the removed logic become
    /// observed outputs named `<path>.<port>`; boundary outputs become free
    /// inputs of kind [`InputKind::BlackBox`].
    pub fn black_box(&self, prefixes: &[&str]) -> Result<Netlist, NetlistError> {
        let under = |path: &str, p: &str| {
            p.is_empty() || path == p || path.starts_with(&format!("{p}."))
        };
        // Whole-design erasure: every output and register goes.
        if prefixes.iter().any(|p| p.is_empty()) {
            let mut b = NetlistBuilder::new();
            let mut outs = Vec::new();
            for o in &self.outputs {
                let l = b.input(&o.name, InputKind::BlackBox);
                outs.push((o.name.clone(), l.node()));
                b.output(&o.name, l);
            }
            b.nl.blackboxes.push(BlackBoxInstance {
                name: String::new(),
                inputs: vec![],
                outputs: outs,
            });
            return Ok(b.finish());
        }
        for p in prefixes {
            if !self.instances.iter().any(|i| under(&i.path, p)) {
                return Err(NetlistError::NoSuchInstance(p.to_string()));
            }
        }
        // Outermost matching instances only.
        let boxed: Vec<&InstanceBoundary> = self
            .instances
            .iter()
            .filter(|i| prefixes.iter().any(|p| under(&i.path, p)))
            .filter(|i| {
                !self.instances.iter().any(|o| {
                    o.path != i.path
                        && i.path.starts_with(&format!("{}.", o.path))
                        && prefixes.iter().any(|p| under(&o.path, p))
                })
            })
            .collect();
        let boxed_scopes: HashSet<u32> = self
            .scopes
            .iter()
            .enumerate()
            .filter(|(_, s)| boxed.iter().any(|i| under(s, &i.path)))
            .map(|(i, _)| i as u32)
            .collect();
        let owned = |l: Lit| {
            !l.is_const()
                && boxed_scopes.contains(&self.node_scope.get(l.node() as usize).copied().unwrap_or(0))
        };

        let mut b = NetlistBuilder::new();
        b.nl.scopes = self.scopes.clone();
        let mut subst: HashMap<NodeId, Lit> = HashMap::new();
        let mut bb_records = Vec::new();
        // Free inputs must exist before the rebuild so they keep low ids.
        let mut pending_inputs = Vec::new();
        for inst in &boxed {
            let mut outs = Vec::new();
            for (port, lit) in &inst.outputs {
                if !owned(*lit) || subst.contains_key(&lit.node()) {
                    continue;
                }
                let name = format!("{}.{}", inst.path, port);
                pending_inputs.push((name.clone(), *lit));
                outs.push(name);
            }
            bb_records.push((inst.path.clone(), inst.inputs.clone(), outs));
        }
        for (name, lit) in &pending_inputs {
            let fresh = b.input(name, InputKind::BlackBox);
            subst.insert(lit.node(), fresh.inv_if(lit.is_inverted()));
        }

        let mut roots: Vec<Lit> = self.outputs.iter().map(|o| o.lit).collect();
        let surviving_regs: Vec<bool> = self
            .registers
            .iter()
            .map(|r| !boxed_scopes.contains(&self.node_scope[r.node as usize]))
            .collect();
        for (r, keep) in self.registers.iter().zip(&surviving_regs) {
            if *keep {
                roots.push(Lit::new(r.node, false));
            }
        }
        for (_, ins, _) in &bb_records {
            roots.extend(ins.iter().map(|(_, l)| *l));
        }
        // Reverse reachability that stops at substituted boundary nodes.
        let mut keep = vec![false; self.nodes.len()];
        let mut stack: Vec<u32> = roots.iter().map(|l| l.node()).collect();
        while let Some(n) = stack.pop() {
            if subst.contains_key(&n) || std::mem::replace(&mut keep[n as usize], true) {
                continue;
            }
            match self.nodes[n as usize] {
                Node::And(x, y) => {
                    stack.push(x.node());
                    stack.push(y.node());
                }
                Node::Reg(r) => stack.push(self.registers[r as usize].next.node()),
                _ => {}
            }
        }
        let mut rb = Rebuilder::with_builder(self, keep, subst, b);
        rb.copy_all();
        let map = |rb: &Rebuilder, l: Lit| rb.lit(l);
        for o in &self.outputs {
            let l = map(&rb, o.lit);
            rb.builder.output(&o.name, l);
        }
        let mut new_bbs = self.blackboxes.clone();
        for (path, ins, outs) in bb_records {
            let mut inputs = Vec::new();
            for (port, lit) in ins {
                let name = format!("{path}.{port}");
                let l = map(&rb, lit);
                rb.builder.output(&name, l);
                inputs.push((name, l));
            }
            let outputs = outs
                .into_iter()
                .map(|n| {
                    let node = rb.builder.nl.inputs[rb.builder.nl.input_index(&n).unwrap()].node;
                    (n, node)
                })
                .collect();
            new_bbs.push(BlackBoxInstance { name: path, inputs, outputs });
        }
        let instances = self
            .instances
            .iter()
            .filter(|i| !boxed.iter().any(|x| under(&i.path, &x.path)))
            .map(|i| rb.boundary(i))
            .collect();
        let mut b = rb.builder;
        b.nl.blackboxes = new_bbs;
        b.nl.instances = instances;
        Ok(b.finish())
    }

    /// Structural hashing with constant propagation. Duplicated AND nodes
    /// merge and trivial patterns fold; dead logic is dropped.
    pub fn structural_hash(&self) -> Netlist {
        let mut roots: Vec<Lit> = self.outputs.iter().map(|o| o.lit).collect();
        roots.extend(self.registers.iter().map(|r| Lit::new(r.node, false)));
        roots.extend(self.names.values().copied());
        for bb in &self.blackboxes {
            roots.extend(bb.inputs.iter().map(|(_, l)| *l));
        }
        let mut keep = self.sequential_support(&roots);
        for i in &self.inputs {
            keep[i.node as usize] = true;
        }
        let mut rb = Rebuilder::new(self, keep, HashMap::new(), true);
        rb.copy_all();
        for o in &self.outputs {
            let l = rb.lit(o.lit);
            rb.builder.output(&o.name, l);
        }
        let blackboxes = self
            .blackboxes
            .iter()
            .map(|bb| BlackBoxInstance {
                name: bb.name.clone(),
                inputs: bb.inputs.iter().map(|(n, l)| (n.clone(), rb.lit(*l))).collect(),
                outputs: bb.outputs.iter().map(|(n, id)| (n.clone(), rb.map[*id as usize].unwrap().node())).collect(),
            })
            .collect();
        let instances = self.instances.iter().map(|i| rb.boundary(i)).collect();
        let mut b = rb.builder;
        b.nl.blackboxes = blackboxes;
        b.nl.instances = instances;
        b.finish()
    }

    /// Line-oriented dump for diffing.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for i in &self.inputs {
            let kind = match i.kind {
                InputKind::Primary => "input",
                InputKind::BlackBox => "bbinput",
                InputKind::XSource => "xinput",
            };
            let _ = writeln!(s, "n{} = {} {}", i.node, kind, i.name);
        }
        for r in &self.registers {
            let init = match r.init {
                Init::Zero => "0",
                Init::One => "1",
                Init::Uninit => "uninit",
            };
            let _ = writeln!(s, "n{} = REG {} init {}", r.node, r.name, init);
        }
        for (id, n) in self.nodes.iter().enumerate() {
            if let Node::And(a, b) = n {
                let _ = writeln!(s, "n{id} = AND {a} {b}");
            }
        }
        for r in &self.registers {
            let _ = writeln!(s, "next {} = {}", r.name, r.next);
        }
        for o in &self.outputs {
            let _ = writeln!(s, "output {} = {}", o.name, o.lit);
        }
        s
    }
}

/// Copies a subset of a netlist into a fresh builder, applying a node
/// substitution on the way.
struct Rebuilder<'a> {
    src: &'a Netlist,
    keep: Vec<bool>,
    subst: HashMap<NodeId, Lit>,
    map: Vec<Option<Lit>>,
    builder: NetlistBuilder,
}

impl<'a> Rebuilder<'a> {
    fn new(src: &'a Netlist, keep: Vec<bool>, subst: HashMap<NodeId, Lit>, global_hash: bool) -> Self {
        let mut builder = NetlistBuilder::new();
        builder.global_hash = global_hash;
        builder.nl.scopes = src.scopes.clone();
        Self::with_builder(src, keep, subst, builder)
    }

    fn with_builder(src: &'a Netlist, keep: Vec<bool>, subst: HashMap<NodeId, Lit>, builder: NetlistBuilder) -> Self {
        let mut map = vec![None; src.nodes.len()];
        map[0] = Some(Lit::FALSE);
        for (n, l) in &subst {
            map[*n as usize] = Some(*l);
        }
        Rebuilder { src, keep, subst, map, builder }
    }

    fn lit(&self, l: Lit) -> Lit {
        self.map[l.node() as usize]
            .expect("reference outside the rebuilt cone")
            .inv_if(l.is_inverted())
    }

    fn map_opt(&self, l: Lit) -> Option<Lit> {
        self.map[l.node() as usize].map(|m| m.inv_if(l.is_inverted()))
    }

    fn boundary(&self, i: &InstanceBoundary) -> InstanceBoundary {
        let remap = |v: &[(String, Lit)]| {
            v.iter().filter_map(|(n, l)| self.map_opt(*l).map(|l| (n.clone(), l))).collect()
        };
        InstanceBoundary {
            path: i.path.clone(),
            scope: i.scope,
            inputs: remap(&i.inputs),
            outputs: remap(&i.outputs),
        }
    }

    fn copy_all(&mut self) {
        let src = self.src;
        for inp in &src.inputs {
            if self.keep[inp.node as usize] && !self.subst.contains_key(&inp.node) {
                let l = self.builder.input(&inp.name, inp.kind);
                self.builder.nl.node_scope[l.node() as usize] =
                    src.node_scope.get(inp.node as usize).copied().unwrap_or(0);
                self.map[inp.node as usize] = Some(l);
            }
        }
        let mut regs = Vec::new();
        for (ri, r) in src.registers.iter().enumerate() {
            if self.keep[r.node as usize] && !self.subst.contains_key(&r.node) {
                let scope = src.node_scope.get(r.node as usize).copied().unwrap_or(0);
                self.builder.scope = scope;
                let (idx, l) = self.builder.register(&r.name, r.init);
                self.map[r.node as usize] = Some(l);
                regs.push((ri, idx));
            }
        }
        for id in 0..src.nodes.len() {
            if !self.keep[id] || self.map[id].is_some() {
                continue;
            }
            if let Node::And(a, b) = src.nodes[id] {
                self.builder.scope = src.node_scope.get(id).copied().unwrap_or(0);
                let l = self.builder.and(self.lit(a), self.lit(b));
                self.map[id] = Some(l);
            }
        }
        self.builder.scope = 0;
        for (ri, idx) in regs {
            let next = self.lit(src.registers[ri].next);
            self.builder.set_next(idx, next);
        }
        for (name, l) in &src.names {
            if let Some(m) = self.map_opt(*l) {
                self.builder.nl.names.insert(name.clone(), m);
            }
        }
    }
}

/// Incremental netlist construction with on-the-fly hashing and constant
/// folding.
#[derive(Debug, Clone)]
pub struct NetlistBuilder {
    pub(crate) nl: Netlist,
    hash: HashMap<(Lit, Lit, u32), NodeId>,
    /// Scope attached to newly created nodes.
    pub scope: u32,
    /// When false, hashing never merges nodes across scopes.
    pub global_hash: bool,
}

impl Default for NetlistBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl NetlistBuilder {
    pub fn new() -> Self {
        let nl = Netlist {
            nodes: vec![Node::Const],
            node_scope: vec![0],
            scopes: vec![String::new()],
            ..Default::default()
        };
        NetlistBuilder { nl, hash: HashMap::new(), scope: 0, global_hash: false }
    }

    /// Continues building on top of an existing (topologically ordered)
    /// netlist; existing AND nodes take part in hashing.
    pub fn from_netlist(nl: Netlist) -> Self {
        let mut hash = HashMap::new();
        for (id, n) in nl.nodes.iter().enumerate() {
            if let Node::And(a, b) = *n {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                hash.entry((a, b, 0)).or_insert(id as NodeId);
            }
        }
        NetlistBuilder { nl, hash, scope: 0, global_hash: true }
    }

    pub fn netlist(&self) -> &Netlist {
        &self.nl
    }

    pub fn add_scope(&mut self, path: &str) -> u32 {
        self.nl.scopes.push(path.to_string());
        (self.nl.scopes.len() - 1) as u32
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nl.nodes.push(node);
        self.nl.node_scope.push(self.scope);
        (self.nl.nodes.len() - 1) as NodeId
    }

    pub fn input(&mut self, name: &str, kind: InputKind) -> Lit {
        let idx = self.nl.inputs.len() as u32;
        let node = self.push(Node::Input(idx));
        self.nl.inputs.push(Input { name: name.to_string(), node, kind });
        self.nl.names.insert(name.to_string(), Lit::new(node, false));
        Lit::new(node, false)
    }

    /// Creates a register whose next-state function is set later with
    /// [`set_next`](Self::set_next); until then it holds its value.
    pub fn register(&mut self, name: &str, init: Init) -> (usize, Lit) {
        let idx = self.nl.registers.len();
        let node = self.push(Node::Reg(idx as u32));
        let lit = Lit::new(node, false);
        self.nl.registers.push(Register { name: name.to_string(), node, next: lit, init });
        self.nl.names.insert(name.to_string(), lit);
        (idx, lit)
    }

    pub fn set_next(&mut self, reg: usize, next: Lit) {
        self.nl.registers[reg].next = next;
    }

    pub fn output(&mut self, name: &str, lit: Lit) {
        self.nl.outputs.push(Output { name: name.to_string(), lit });
    }

    pub fn name(&mut self, name: &str, lit: Lit) {
        self.nl.names.insert(name.to_string(), lit);
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == Lit::FALSE || a == !b {
            return Lit::FALSE;
        }
        if a == Lit::TRUE || a == b {
            return b;
        }
        let key = (a, b, if self.global_hash { 0 } else { self.scope });
        if let Some(&n) = self.hash.get(&key) {
            return Lit::new(n, false);
        }
        let n = self.push(Node::And(a, b));
        self.hash.insert(key, n);
        Lit::new(n, false)
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        if a.is_const() {
            return b.inv_if(a == Lit::TRUE);
        }
        if b.is_const() {
            return a.inv_if(b == Lit::TRUE);
        }
        if a == b {
            return Lit::FALSE;
        }
        if a == !b {
            return Lit::TRUE;
        }
        let x = self.and(a, !b);
        let y = self.and(!a, b);
        self.or(x, y)
    }

    pub fn xnor(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    pub fn mux(&mut self, sel: Lit, then: Lit, els: Lit) -> Lit {
        if sel == Lit::TRUE || then == els {
            return then;
        }
        if sel == Lit::FALSE {
            return els;
        }
        let t = self.and(sel, then);
        let e = self.and(!sel, els);
        self.or(t, e)
    }

    pub fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(Lit::TRUE, |acc, l| self.and(acc, l))
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(Lit::FALSE, |acc, l| self.or(acc, l))
    }

    pub fn finish(self) -> Netlist {
        self.nl
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_input() -> (NetlistBuilder, Lit, Lit) {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let c = b.input("b", InputKind::Primary);
        (b, a, c)
    }

    #[test]
    fn empty_netlist_is_valid() {
        assert_eq!(NetlistBuilder::new().finish().validate(), Ok(()));
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let (b, _a, bb) = two_input();
        let mut nl = b.finish();
        // a = a & b with no register in between
        let id = nl.nodes.len() as u32;
        nl.nodes.push(Node::And(Lit::new(id, false), bb));
        nl.node_scope.push(0);
        nl.names.insert("a_loop".into(), Lit::new(id, false));
        match nl.validate() {
            Err(NetlistError::CombinationalCycle(path)) => assert!(path.contains(&"a_loop".to_string())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_and_duplicates() {
        let (mut b, a, _) = two_input();
        b.output("y", a);
        let mut nl = b.clone().finish();
        nl.outputs[0].lit = Lit::new(99, false);
        assert_eq!(nl.validate(), Err(NetlistError::DanglingRef("y".into())));
        let mut nl = b.finish();
        nl.outputs.push(Output { name: "y".into(), lit: Lit::TRUE });
        assert_eq!(nl.validate(), Err(NetlistError::DuplicateName("y".into())));
    }

    #[test]
    fn normalize_reorders() {
        let mut nl = NetlistBuilder::new().finish();
        // n1 = AND n2 n3, n2/n3 inputs declared later
        nl.nodes.push(Node::And(Lit::new(2, false), Lit::new(3, true)));
        nl.nodes.push(Node::Input(0));
        nl.nodes.push(Node::Input(1));
        nl.node_scope = vec![0; 4];
        nl.inputs = vec![
            Input { name: "a".into(), node: 2, kind: InputKind::Primary },
            Input { name: "b".into(), node: 3, kind: InputKind::Primary },
        ];
        nl.outputs.push(Output { name: "y".into(), lit: Lit::new(1, false) });
        let n = nl.normalized().unwrap();
        assert!(n.is_topological());
        let y = n.outputs[0].lit;
        assert!(matches!(n.nodes[y.node() as usize], Node::And(..)));
    }

    #[test]
    fn strash_merges_duplicates_and_folds() {
        let (mut b, a, c) = two_input();
        b.global_hash = false;
        b.scope = 0;
        let x = b.and(a, c);
        b.scope = b.add_scope("u");
        let y = b.and(a, c);
        assert_ne!(x, y);
        b.scope = 0;
        b.output("x", x);
        b.output("y", y);
        let contra = b.and(a, !a);
        b.output("z", contra);
        let nl = b.finish();
        assert_eq!(nl.num_ands(), 2);
        let h = nl.structural_hash();
        assert_eq!(h.num_ands(), 1);
        assert_eq!(h.outputs[0].lit, h.outputs[1].lit);
        assert_eq!(h.outputs[2].lit, Lit::FALSE);
        assert_eq!(h.structural_hash().num_ands(), 1);
    }

    #[test]
    fn coi_single_wire() {
        let (mut b, a, c) = two_input();
        b.output("y", a);
        let g = b.and(a, c);
        b.output("z", g);
        let nl = b.finish();
        let cone = nl.cone_of_influence(&["y"]).unwrap();
        assert_eq!(cone.inputs.len(), 1);
        assert_eq!(cone.inputs[0].name, "a");
        assert_eq!(cone.num_ands(), 0);
        assert!(matches!(nl.cone_of_influence(&["nope"]), Err(NetlistError::UnknownNet(_))));
    }

    #[test]
    fn bit_names() {
        assert_eq!(split_bit_name("u.w[12]"), ("u.w", Some(12)));
        assert_eq!(split_bit_name("w"), ("w", None));
        assert_eq!(bit_name("w", 1, 0), "w");
        assert_eq!(bit_name("w", 4, 2), "w[2]");
        let words = Netlist::words(["a[0]", "a[1]", "b", "a[2]"]);
        assert_eq!(words, vec![("a".to_string(), 3), ("b".to_string(), 1)]);
    }

    #[test]
    fn dump_format() {
        let (mut b, a, c) = two_input();
        let g = b.and(a, !c);
        b.output("y", g);
        let d = b.finish().dump();
        assert!(d.contains("n3 = AND n1 !n2"), "{d}");
    }
}
