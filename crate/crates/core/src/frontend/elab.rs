//! Elaboration: parameter substitution, hierarchy flattening and
//! bit-blasting into a netlist.
//!
//! Nets are resolved lazily from their drivers, so declaration order does
//! not matter and combinational loops surface as
//! [`FrontendError::CombinationalCycle`] with the offending net path.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::{Binding, Dir, Expr, Item, LValue, Module, Range, RegInit, Select};
use super::blast::{const_eval, eval, Env};
use super::{FrontendError, Loc, XMode, XPolicy};
use crate::netlist::{bit_name, Init, InputKind, InstanceBoundary, Lit, Netlist, NetlistBuilder};
use crate::tri::Tri;

#[derive(Clone, Debug, Default)]
pub struct ElabOptions {
    pub params: BTreeMap<String, u64>,
    pub xpolicy: XPolicy,
    /// Treat undriven net bits as X sources instead of failing.
    pub allow_undriven: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum XSiteKind {
    UninitRegister,
    XLiteral,
    Undriven,
}

/// One place in the source that can produce X.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct XSite {
    pub kind: XSiteKind,
    /// Register or net name, or `<scope>@line:col` for literals.
    pub name: String,
    pub bits: u32,
    pub line: u32,
    pub col: u32,
    /// Netlist names carrying the X: X-initialized register bits, or the
    /// free inputs created under the symbolic policy.
    pub nets: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NetKind {
    Input,
    Output,
    Wire,
    Reg,
}

#[derive(Clone, Debug)]
struct NetDecl {
    name: String,
    width: u32,
    lsb: i64,
    kind: NetKind,
    loc: Loc,
}

#[derive(Clone, Copy, Debug)]
enum Driver {
    None,
    Assign(usize, u32),
    ChildOut(usize, usize, u32),
    /// Input port of a child, driven by an expression in the parent.
    Port,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Todo,
    Busy,
    Done(Lit),
}

struct Assign {
    rhs: Expr,
    width: u32,
    loc: Loc,
    memo: Option<Vec<Lit>>,
    busy: bool,
}

struct Reg {
    net: usize,
    idxs: Vec<usize>,
    next: Option<Expr>,
    loc: Loc,
}

struct PortExpr {
    expr: Expr,
    memo: Option<Vec<Lit>>,
    busy: bool,
}

#[derive(Default)]
struct Inst {
    path: String,
    scope: u32,
    parent: Option<usize>,
    params: HashMap<String, u64>,
    nets: Vec<NetDecl>,
    by_name: HashMap<String, usize>,
    drivers: Vec<Vec<Driver>>,
    slots: Vec<Vec<Slot>>,
    assigns: Vec<Assign>,
    regs: Vec<Reg>,
    children: Vec<usize>,
    ports: Vec<usize>,
    port_exprs: HashMap<usize, PortExpr>,
}

impl Inst {
    fn full(&self, local: &str) -> String {
        if self.path.is_empty() {
            local.to_string()
        } else {
            format!("{}.{}", self.path, local)
        }
    }

    fn bit_full(&self, net: usize, bit: u32) -> String {
        let d = &self.nets[net];
        self.full(&bit_name(&d.name, d.width, bit))
    }
}

struct Elaborator<'m> {
    modules: &'m [Module],
    opts: &'m ElabOptions,
    b: NetlistBuilder,
    insts: Vec<Inst>,
    stack: Vec<String>,
    sites: Vec<XSite>,
    site_index: HashMap<(XSiteKind, String), usize>,
    seen_x_bits: HashSet<(usize, u32, u32, u32)>,
}

fn find_module<'m>(modules: &'m [Module], name: &str) -> Result<(usize, &'m Module), FrontendError> {
    modules
        .iter()
        .enumerate()
        .find(|(_, m)| m.name == name)
        .ok_or_else(|| FrontendError::UnknownModule(name.to_string()))
}

fn flatten_items<'a>(
    items: &'a [Item],
    params: &HashMap<String, u64>,
    out: &mut Vec<&'a Item>,
) -> Result<(), FrontendError> {
    for it in items {
        if let Item::If { cond, then, els, .. } = it {
            let v = const_eval(cond, &|n| params.get(n).copied())?;
            flatten_items(if v != 0 { then } else { els }, params, out)?;
        } else {
            out.push(it);
        }
    }
    Ok(())
}

impl<'m> Elaborator<'m> {
    fn record_site(&mut self, kind: XSiteKind, name: String, loc: Loc, net: Option<String>) {
        let key = (kind, name.clone());
        let idx = match self.site_index.get(&key) {
            Some(&i) => i,
            None => {
                self.sites.push(XSite { kind, name, bits: 0, line: loc.line, col: loc.col, nets: vec![] });
                self.site_index.insert(key, self.sites.len() - 1);
                self.sites.len() - 1
            }
        };
        self.sites[idx].bits += 1;
        if let Some(n) = net {
            self.sites[idx].nets.push(n);
        }
    }

    fn width_of(
        &self,
        range: &Option<Range>,
        params: &HashMap<String, u64>,
        name: &str,
        loc: Loc,
    ) -> Result<(u32, i64), FrontendError> {
        let Some(r) = range else { return Ok((1, 0)) };
        let p = |n: &str| params.get(n).copied();
        let (msb, lsb) = (const_eval(&r.msb, &p)?, const_eval(&r.lsb, &p)?);
        let w = msb - lsb + 1;
        if w <= 0 {
            return Err(FrontendError::ZeroWidth { name: name.to_string(), loc });
        }
        if w > 1 << 16 {
            return Err(FrontendError::semantic(loc, format!("{name} is too wide")));
        }
        Ok((w as u32, lsb))
    }

    fn declare(&mut self, id: usize, decl: NetDecl) -> Result<usize, FrontendError> {
        let inst = &mut self.insts[id];
        if inst.by_name.contains_key(&decl.name) || inst.params.contains_key(&decl.name) {
            return Err(FrontendError::DuplicateName { name: decl.name.clone(), loc: decl.loc });
        }
        let n = inst.nets.len();
        inst.by_name.insert(decl.name.clone(), n);
        inst.drivers.push(vec![Driver::None; decl.width as usize]);
        inst.slots.push(vec![Slot::Todo; decl.width as usize]);
        inst.nets.push(decl);
        Ok(n)
    }

    /// Flattens an lvalue into (net, bit) pairs, LSB first.
    fn lvalue_bits(&self, id: usize, lv: &LValue) -> Result<Vec<(usize, u32)>, FrontendError> {
        let inst = &self.insts[id];
        match lv {
            LValue::Concat(parts) => {
                let mut out = Vec::new();
                for p in parts.iter().rev() {
                    out.extend(self.lvalue_bits(id, p)?);
                }
                Ok(out)
            }
            LValue::Net { name, sel, loc } => {
                let &n = inst
                    .by_name
                    .get(name)
                    .ok_or_else(|| FrontendError::Undeclared { name: name.clone(), loc: *loc })?;
                let d = &inst.nets[n];
                let p = |x: &str| inst.params.get(x).copied();
                let (lo, hi) = match sel {
                    None => (0, d.width as i64 - 1),
                    Some(Select::Bit(i)) => {
                        let i = const_eval(i, &p)? - d.lsb;
                        (i, i)
                    }
                    Some(Select::Range(h, l)) => (const_eval(l, &p)? - d.lsb, const_eval(h, &p)? - d.lsb),
                };
                if lo < 0 || hi < lo || hi >= d.width as i64 {
                    return Err(FrontendError::semantic(*loc, format!("bad select of {name}")));
                }
                Ok((lo..=hi).map(|b| (n, b as u32)).collect())
            }
        }
    }

    fn expr_as_lvalue(e: &Expr) -> Option<LValue> {
        Some(match e {
            Expr::Ident(n, loc) => LValue::Net { name: n.clone(), sel: None, loc: *loc },
            Expr::Index(n, i, loc) => LValue::Net { name: n.clone(), sel: Some(Select::Bit(i.clone())), loc: *loc },
            Expr::Slice(n, h, l, loc) => LValue::Net {
                name: n.clone(),
                sel: Some(Select::Range(h.clone(), l.clone())),
                loc: *loc,
            },
            Expr::Concat(v) => LValue::Concat(v.iter().map(Self::expr_as_lvalue).collect::<Option<_>>()?),
            _ => return None,
        })
    }

    fn set_driver(&mut self, id: usize, net: usize, bit: u32, d: Driver) -> Result<(), FrontendError> {
        let inst = &mut self.insts[id];
        if !matches!(inst.drivers[net][bit as usize], Driver::None) {
            return Err(FrontendError::MultipleDrivers(inst.bit_full(net, bit)));
        }
        inst.drivers[net][bit as usize] = d;
        Ok(())
    }

    fn instantiate(
        &mut self,
        module: &'m Module,
        path: String,
        parent: Option<usize>,
        params: HashMap<String, u64>,
        chain: &mut Vec<String>,
    ) -> Result<usize, FrontendError> {
        let id = self.insts.len();
        let scope = if parent.is_none() { 0 } else { self.b.add_scope(&path) };
        self.insts.push(Inst { path, scope, parent, params, ..Default::default() });
        let saved_scope = self.b.scope;
        self.b.scope = scope;

        let mut items = Vec::new();
        flatten_items(&module.items, &self.insts[id].params, &mut items)?;

        for p in &module.ports {
            let (width, lsb) = self.width_of(&p.range, &self.insts[id].params, &p.name, p.loc)?;
            let kind = if p.dir == Dir::Input { NetKind::Input } else { NetKind::Output };
            let n = self.declare(id, NetDecl { name: p.name.clone(), width, lsb, kind, loc: p.loc })?;
            self.insts[id].ports.push(n);
            if kind == NetKind::Input {
                if parent.is_none() {
                    for bit in 0..width {
                        let name = bit_name(&p.name, width, bit);
                        let l = self.b.input(&name, InputKind::Primary);
                        self.insts[id].slots[n][bit as usize] = Slot::Done(l);
                    }
                } else {
                    for bit in 0..width {
                        self.insts[id].drivers[n][bit as usize] = Driver::Port;
                    }
                }
            }
        }

        // Declarations first so that use-before-declaration works.
        for it in &items {
            match it {
                Item::Wire { range, name, loc } => {
                    let (width, lsb) = self.width_of(range, &self.insts[id].params, name, *loc)?;
                    self.declare(id, NetDecl { name: name.clone(), width, lsb, kind: NetKind::Wire, loc: *loc })?;
                }
                Item::Reg { range, name, init, loc } => {
                    let (width, lsb) = self.width_of(range, &self.insts[id].params, name, *loc)?;
                    let n = self.declare(id, NetDecl { name: name.clone(), width, lsb, kind: NetKind::Reg, loc: *loc })?;
                    let bits = self.init_bits(id, init, width, *loc)?;
                    let mut idxs = Vec::new();
                    for (bit, t) in bits.iter().enumerate() {
                        let full = self.insts[id].bit_full(n, bit as u32);
                        let init = match (t, self.opts.xpolicy.regs) {
                            (Tri::Zero, _) | (Tri::X, XMode::Zero) => Init::Zero,
                            (Tri::One, _) | (Tri::X, XMode::One) => Init::One,
                            (Tri::X, XMode::Symbolic) => Init::Uninit,
                        };
                        if *t == Tri::X {
                            let word = self.insts[id].full(name);
                            self.record_site(XSiteKind::UninitRegister, word, *loc, Some(full.clone()));
                        }
                        let (idx, l) = self.b.register(&full, init);
                        idxs.push(idx);
                        self.insts[id].slots[n][bit] = Slot::Done(l);
                    }
                    self.insts[id].regs.push(Reg { net: n, idxs, next: None, loc: *loc });
                }
                _ => {}
            }
        }

        for it in &items {
            match it {
                Item::Assign { lhs, rhs, loc } => {
                    let bits = self.lvalue_bits(id, lhs)?;
                    let ai = self.insts[id].assigns.len();
                    for (off, &(n, bit)) in bits.iter().enumerate() {
                        let kind = self.insts[id].nets[n].kind;
                        if kind == NetKind::Input || kind == NetKind::Reg {
                            let name = self.insts[id].nets[n].name.clone();
                            return Err(FrontendError::semantic(*loc, format!("cannot assign to {name}")));
                        }
                        self.set_driver(id, n, bit, Driver::Assign(ai, off as u32))?;
                    }
                    self.insts[id].assigns.push(Assign {
                        rhs: rhs.clone(),
                        width: bits.len() as u32,
                        loc: *loc,
                        memo: None,
                        busy: false,
                    });
                }
                Item::Always { name, rhs, loc } => {
                    let inst = &mut self.insts[id];
                    let Some(&n) = inst.by_name.get(name) else {
                        return Err(FrontendError::Undeclared { name: name.clone(), loc: *loc });
                    };
                    let Some(r) = inst.regs.iter_mut().find(|r| r.net == n) else {
                        return Err(FrontendError::semantic(*loc, format!("{name} is not a register")));
                    };
                    if r.next.is_some() {
                        return Err(FrontendError::MultipleDrivers(inst.full(name)));
                    }
                    r.next = Some(rhs.clone());
                }
                Item::Instance { module: mname, params: overrides, name, conns, loc } => {
                    let (_, child_mod) = find_module(self.modules, mname)?;
                    if chain.contains(mname) {
                        let mut c = chain.clone();
                        c.push(mname.clone());
                        return Err(FrontendError::RecursiveInstantiation(c));
                    }
                    let child_params = self.child_params(id, child_mod, overrides)?;
                    let child_path = self.insts[id].full(name);
                    chain.push(mname.clone());
                    let cid = self.instantiate(child_mod, child_path, Some(id), child_params, chain)?;
                    chain.pop();
                    self.insts[id].children.push(cid);
                    self.connect(id, cid, child_mod, conns, *loc)?;
                }
                _ => {}
            }
        }
        self.b.scope = saved_scope;
        Ok(id)
    }

    fn init_bits(&mut self, id: usize, init: &RegInit, width: u32, loc: Loc) -> Result<Vec<Tri>, FrontendError> {
        let mut bits = match init {
            RegInit::Uninit => vec![Tri::X; width as usize],
            RegInit::Value(Expr::Const(c, _)) => c.bits.clone(),
            RegInit::Value(e) => {
                let params = &self.insts[id].params;
                let v = const_eval(e, &|n| params.get(n).copied())? as u64;
                let n = (64 - v.leading_zeros()).max(1);
                (0..n).map(|i| Tri::from_bool(v >> i & 1 == 1)).collect()
            }
        };
        if bits.len() > width as usize {
            if bits[width as usize..].iter().any(|t| *t != Tri::Zero) {
                return Err(FrontendError::WidthMismatch {
                    msg: format!("init value wider than {width} bits"),
                    loc,
                });
            }
            bits.truncate(width as usize);
        }
        bits.resize(width as usize, Tri::Zero);
        Ok(bits)
    }

    fn child_params(
        &self,
        id: usize,
        child: &Module,
        overrides: &[Binding],
    ) -> Result<HashMap<String, u64>, FrontendError> {
        let parent = &self.insts[id].params;
        let mut given: HashMap<String, u64> = HashMap::new();
        for (i, b) in overrides.iter().enumerate() {
            let pname = match &b.name {
                Some(n) => n.clone(),
                None => child
                    .params
                    .get(i)
                    .map(|p| p.name.clone())
                    .ok_or_else(|| FrontendError::UnknownParameter(format!("{}#{}", child.name, i)))?,
            };
            if !child.params.iter().any(|p| p.name == pname) {
                return Err(FrontendError::UnknownParameter(pname));
            }
            given.insert(pname, const_eval(&b.expr, &|n| parent.get(n).copied())? as u64);
        }
        resolve_params(child, &given)
    }

    fn connect(
        &mut self,
        id: usize,
        cid: usize,
        child: &Module,
        conns: &[Binding],
        loc: Loc,
    ) -> Result<(), FrontendError> {
        for (i, b) in conns.iter().enumerate() {
            let port = match &b.name {
                Some(n) => child.ports.iter().position(|p| &p.name == n),
                None => (i < child.ports.len()).then_some(i),
            }
            .ok_or_else(|| {
                FrontendError::semantic(loc, format!("no port {} on {}", b.name.clone().unwrap_or(i.to_string()), child.name))
            })?;
            let pnet = self.insts[cid].ports[port];
            let pwidth = self.insts[cid].nets[pnet].width;
            if child.ports[port].dir == Dir::Input {
                let prev = self.insts[cid].port_exprs.insert(
                    pnet,
                    PortExpr { expr: b.expr.clone(), memo: None, busy: false },
                );
                if prev.is_some() {
                    return Err(FrontendError::MultipleDrivers(self.insts[cid].full(&child.ports[port].name)));
                }
            } else {
                let lv = Self::expr_as_lvalue(&b.expr).ok_or_else(|| {
                    FrontendError::semantic(b.expr.loc(), "output port must connect to a net")
                })?;
                let bits = self.lvalue_bits(id, &lv)?;
                if bits.len() > pwidth as usize {
                    return Err(FrontendError::WidthMismatch {
                        msg: format!("{} bits connected to {}-bit port {}", bits.len(), pwidth, child.ports[port].name),
                        loc: b.expr.loc(),
                    });
                }
                for (j, (n, bit)) in bits.into_iter().enumerate() {
                    if self.insts[id].nets[n].kind == NetKind::Input || self.insts[id].nets[n].kind == NetKind::Reg {
                        return Err(FrontendError::semantic(b.expr.loc(), "output port drives an input or register"));
                    }
                    self.set_driver(id, n, bit, Driver::ChildOut(cid, pnet, j as u32))?;
                }
            }
        }
        Ok(())
    }

    fn cycle(&self, name: String) -> FrontendError {
        let start = self.stack.iter().position(|s| *s == name).unwrap_or(0);
        let mut path: Vec<String> = self.stack[start..].to_vec();
        path.push(name);
        FrontendError::CombinationalCycle(path)
    }

    fn bit(&mut self, id: usize, net: usize, bit: u32) -> Result<Lit, FrontendError> {
        match self.insts[id].slots[net][bit as usize] {
            Slot::Done(l) => return Ok(l),
            Slot::Busy => return Err(self.cycle(self.insts[id].bit_full(net, bit))),
            Slot::Todo => {}
        }
        let full = self.insts[id].bit_full(net, bit);
        self.insts[id].slots[net][bit as usize] = Slot::Busy;
        self.stack.push(full.clone());
        let saved = self.b.scope;
        self.b.scope = self.insts[id].scope;
        let lit = match self.insts[id].drivers[net][bit as usize] {
            Driver::Assign(ai, off) => self.assign_value(id, ai)?[off as usize],
            Driver::ChildOut(c, pn, j) => self.bit(c, pn, j)?,
            Driver::Port => match self.port_value(id, net)? {
                Some(v) => v[bit as usize],
                None => self.undriven(id, net, full.clone())?,
            },
            Driver::None => self.undriven(id, net, full.clone())?,
        };
        self.b.scope = saved;
        self.stack.pop();
        self.insts[id].slots[net][bit as usize] = Slot::Done(lit);
        Ok(lit)
    }

    fn undriven(&mut self, id: usize, net: usize, full: String) -> Result<Lit, FrontendError> {
        if !self.opts.allow_undriven {
            return Err(FrontendError::Undriven(full));
        }
        let word = self.insts[id].full(&self.insts[id].nets[net].name);
        let loc = self.insts[id].nets[net].loc;
        Ok(match self.opts.xpolicy.logic {
            XMode::Zero => {
                self.record_site(XSiteKind::Undriven, word, loc, None);
                Lit::FALSE
            }
            XMode::One => {
                self.record_site(XSiteKind::Undriven, word, loc, None);
                Lit::TRUE
            }
            XMode::Symbolic => {
                self.record_site(XSiteKind::Undriven, word, loc, Some(full.clone()));
                self.b.input(&full, InputKind::XSource)
            }
        })
    }

    fn assign_value(&mut self, id: usize, ai: usize) -> Result<Vec<Lit>, FrontendError> {
        let a = &mut self.insts[id].assigns[ai];
        if let Some(v) = &a.memo {
            return Ok(v.clone());
        }
        if a.busy {
            let top = self.stack.last().cloned().unwrap_or_default();
            return Err(self.cycle(top));
        }
        a.busy = true;
        let (rhs, width, loc) = (a.rhs.clone(), a.width, a.loc);
        let v = self.eval_in(id, &rhs)?;
        let v = fit(v, width, loc)?;
        let a = &mut self.insts[id].assigns[ai];
        a.busy = false;
        a.memo = Some(v.clone());
        Ok(v)
    }

    fn port_value(&mut self, id: usize, net: usize) -> Result<Option<Vec<Lit>>, FrontendError> {
        let width = self.insts[id].nets[net].width;
        let Some(pe) = self.insts[id].port_exprs.get_mut(&net) else { return Ok(None) };
        if let Some(v) = &pe.memo {
            return Ok(Some(v.clone()));
        }
        if pe.busy {
            let top = self.stack.last().cloned().unwrap_or_default();
            return Err(self.cycle(top));
        }
        pe.busy = true;
        let expr = pe.expr.clone();
        let parent = self.insts[id].parent.expect("port driven without a parent");
        let saved = self.b.scope;
        self.b.scope = self.insts[parent].scope;
        let v = self.eval_in(parent, &expr)?;
        self.b.scope = saved;
        let v = fit(v, width, expr.loc())?;
        let pe = self.insts[id].port_exprs.get_mut(&net).unwrap();
        pe.busy = false;
        pe.memo = Some(v.clone());
        Ok(Some(v))
    }

    fn eval_in(&mut self, id: usize, e: &Expr) -> Result<Vec<Lit>, FrontendError> {
        let saved = self.b.scope;
        self.b.scope = self.insts[id].scope;
        let r = eval(&mut InstEnv { el: self, id }, e);
        self.b.scope = saved;
        r
    }

    fn run(&mut self, top: &'m Module) -> Result<(), FrontendError> {
        let given: HashMap<String, u64> = self.opts.params.clone().into_iter().collect();
        let params = resolve_params(top, &given)?;
        self.instantiate(top, String::new(), None, params, &mut vec![top.name.clone()])?;
        // Top outputs first so their logic gets the lowest ids.
        for &p in &self.insts[0].ports.clone() {
            let d = self.insts[0].nets[p].clone();
            if d.kind != NetKind::Output {
                continue;
            }
            for bit in 0..d.width {
                let l = self.bit(0, p, bit)?;
                self.b.output(&bit_name(&d.name, d.width, bit), l);
            }
        }
        for id in 0..self.insts.len() {
            for net in 0..self.insts[id].nets.len() {
                for bit in 0..self.insts[id].nets[net].width {
                    let l = self.bit(id, net, bit)?;
                    let name = self.insts[id].bit_full(net, bit);
                    self.b.name(&name, l);
                }
            }
        }
        for id in 0..self.insts.len() {
            for ri in 0..self.insts[id].regs.len() {
                let Some(next) = self.insts[id].regs[ri].next.clone() else { continue };
                let (net, loc) = (self.insts[id].regs[ri].net, self.insts[id].regs[ri].loc);
                let width = self.insts[id].nets[net].width;
                let v = self.eval_in(id, &next)?;
                let v = fit(v, width, loc)?;
                for (k, l) in v.into_iter().enumerate() {
                    let idx = self.insts[id].regs[ri].idxs[k];
                    self.b.set_next(idx, l);
                }
            }
        }
        for id in 1..self.insts.len() {
            let inst = &self.insts[id];
            let mut bound = InstanceBoundary { path: inst.path.clone(), scope: inst.scope, inputs: vec![], outputs: vec![] };
            for &p in &inst.ports {
                let d = &inst.nets[p];
                for bit in 0..d.width {
                    let Slot::Done(l) = inst.slots[p][bit as usize] else { unreachable!() };
                    let entry = (bit_name(&d.name, d.width, bit), l);
                    if d.kind == NetKind::Input {
                        bound.inputs.push(entry);
                    } else {
                        bound.outputs.push(entry);
                    }
                }
            }
            self.b.nl.instances.push(bound);
        }
        Ok(())
    }
}

fn fit(mut v: Vec<Lit>, width: u32, loc: Loc) -> Result<Vec<Lit>, FrontendError> {
    if v.len() > width as usize {
        return Err(FrontendError::WidthMismatch {
            msg: format!("{}-bit value assigned to {}-bit target", v.len(), width),
            loc,
        });
    }
    v.resize(width as usize, Lit::FALSE);
    Ok(v)
}

fn resolve_params(m: &Module, given: &HashMap<String, u64>) -> Result<HashMap<String, u64>, FrontendError> {
    let mut keys: Vec<&String> = given.keys().collect();
    keys.sort();
    if let Some(k) = keys.into_iter().find(|k| !m.params.iter().any(|p| &p.name == *k)) {
        return Err(FrontendError::UnknownParameter(k.clone()));
    }
    let mut env: HashMap<String, u64> = HashMap::new();
    for p in &m.params {
        let v = match given.get(&p.name) {
            Some(&v) => v,
            None => const_eval(&p.default, &|n| env.get(n).copied())? as u64,
        };
        env.insert(p.name.clone(), v);
    }
    Ok(env)
}

struct InstEnv<'a, 'm> {
    el: &'a mut Elaborator<'m>,
    id: usize,
}

impl Env for InstEnv<'_, '_> {
    fn builder(&mut self) -> &mut NetlistBuilder {
        &mut self.el.b
    }

    fn param(&self, name: &str) -> Option<u64> {
        self.el.insts[self.id].params.get(name).copied()
    }

    fn net(&mut self, name: &str, loc: Loc) -> Result<Vec<Lit>, FrontendError> {
        let Some(&n) = self.el.insts[self.id].by_name.get(name) else {
            return Err(FrontendError::Undeclared { name: name.to_string(), loc });
        };
        let width = self.el.insts[self.id].nets[n].width;
        (0..width).map(|b| self.el.bit(self.id, n, b)).collect()
    }

    fn lsb(&self, name: &str) -> i64 {
        let inst = &self.el.insts[self.id];
        inst.by_name.get(name).map(|&n| inst.nets[n].lsb).unwrap_or(0)
    }

    fn x_bit(&mut self, loc: Loc, bit: u32) -> Lit {
        let site = format!("{}@{}", self.el.insts[self.id].path, loc);
        if !self.el.seen_x_bits.insert((self.id, loc.line, loc.col, bit)) {
            return Lit::FALSE;
        }
        match self.el.opts.xpolicy.logic {
            XMode::Zero => {
                self.el.record_site(XSiteKind::XLiteral, site, loc, None);
                Lit::FALSE
            }
            XMode::One => {
                self.el.record_site(XSiteKind::XLiteral, site, loc, None);
                Lit::TRUE
            }
            XMode::Symbolic => {
                let name = self.el.insts[self.id].full(&format!("$x{}_{}[{bit}]", loc.line, loc.col));
                self.el.record_site(XSiteKind::XLiteral, site, loc, Some(name.clone()));
                self.el.b.input(&name, InputKind::XSource)
            }
        }
    }
}

fn run_elab(modules: &[Module], top: &str, opts: &ElabOptions) -> Result<(Netlist, Vec<XSite>), FrontendError> {
    let (_, top_mod) = find_module(modules, top)?;
    let mut el = Elaborator {
        modules,
        opts,
        b: NetlistBuilder::new(),
        insts: Vec::new(),
        stack: Vec::new(),
        sites: Vec::new(),
        site_index: HashMap::new(),
        seen_x_bits: HashSet::new(),
    };
    el.run(top_mod)?;
    let mut sites = std::mem::take(&mut el.sites);
    let nl = el.b.finish();
    nl.validate()?;
    sites.sort_by(|a, b| (a.line, a.col, a.kind, &a.name).cmp(&(b.line, b.col, b.kind, &b.name)));
    Ok((nl, sites))
}

/// Deep designs recurse deeply; elaborate on a thread with a roomy stack.
fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn_scoped(s, f)
            .expect("spawn elaboration thread")
            .join()
            .expect("elaboration panicked")
    })
}

/// Elaborates `top` into a bit-level netlist.
pub fn elaborate(modules: &[Module], top: &str, opts: &ElabOptions) -> Result<Netlist, FrontendError> {
    with_big_stack(|| run_elab(modules, top, opts).map(|(nl, _)| nl))
}

/// Every X source of the elaborated design: uninitialized or X-initialized
/// registers, X literals and undriven nets, one entry per source site.
pub fn list_x_sources(
    modules: &[Module],
    top: &str,
    params: &BTreeMap<String, u64>,
) -> Result<Vec<XSite>, FrontendError> {
    let opts = ElabOptions {
        params: params.clone(),
        xpolicy: XPolicy::uniform(XMode::Symbolic),
        allow_undriven: true,
    };
    with_big_stack(|| run_elab(modules, top, &opts).map(|(_, s)| s))
}
