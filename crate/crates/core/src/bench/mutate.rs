//! Single-site source mutations for detection-power experiments.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frontend::ast::{BinOp, Dir, Expr, Item, Module, Range, RegInit, UnOp};
use crate::frontend::{parse, Loc};
use crate::tri::Tri;

use super::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MutationKind {
    OperatorSwap,
    OperandSwap,
    InvertedLiteral,
    ConstantFlip,
    WrongWire,
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutationKind::OperatorSwap => "operator-swap",
            MutationKind::OperandSwap => "operand-swap",
            MutationKind::InvertedLiteral => "inverted-literal",
            MutationKind::ConstantFlip => "constant-flip",
            MutationKind::WrongWire => "wrong-wire",
        })
    }
}

/// Where and what was changed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutation {
    pub kind: MutationKind,
    pub module: String,
    /// Pre-order index of the mutated expression node in the module.
    pub site: usize,
    pub loc: Loc,
    pub before: String,
    pub after: String,
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in {} at {} (site {}): {} -> {}", self.kind, self.module, self.loc, self.site, self.before, self.after)
    }
}

fn swapped_op(op: BinOp) -> Option<BinOp> {
    Some(match op {
        BinOp::And => BinOp::Or,
        BinOp::Or => BinOp::And,
        BinOp::Xor => BinOp::Or,
        BinOp::Eq => BinOp::Ne,
        BinOp::Ne => BinOp::Eq,
        BinOp::Lt => BinOp::Le,
        BinOp::Le => BinOp::Lt,
        BinOp::Gt => BinOp::Ge,
        BinOp::Ge => BinOp::Gt,
        BinOp::LogAnd => BinOp::LogOr,
        BinOp::LogOr => BinOp::LogAnd,
        BinOp::Add => BinOp::Sub,
        BinOp::Sub => BinOp::Add,
        BinOp::Mul => BinOp::Add,
    })
}

fn ordered(op: BinOp) -> bool {
    matches!(op, BinOp::Sub | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
}

/// Inputs and registers grouped by declared range; a wrong wire is drawn
/// from the same group so widths stay legal and no combinational cycle
/// can appear.
fn sources(m: &Module) -> (HashMap<String, Option<Range>>, Vec<String>) {
    let mut decl = HashMap::new();
    let mut names = Vec::new();
    for p in &m.ports {
        if p.dir == Dir::Input {
            decl.insert(p.name.clone(), p.range.clone());
            names.push(p.name.clone());
        }
    }
    fn regs(items: &[Item], decl: &mut HashMap<String, Option<Range>>, names: &mut Vec<String>) {
        for it in items {
            match it {
                Item::Reg { range, name, .. } => {
                    decl.insert(name.clone(), range.clone());
                    names.push(name.clone());
                }
                Item::If { then, els, .. } => {
                    regs(then, decl, names);
                    regs(els, decl, names);
                }
                _ => {}
            }
        }
    }
    regs(&m.items, &mut decl, &mut names);
    (decl, names)
}

struct Ctx<'a> {
    decl: &'a HashMap<String, Option<Range>>,
    names: &'a [String],
    params: Vec<String>,
}

impl Ctx<'_> {
    fn alternatives(&self, name: &str) -> Vec<&str> {
        match self.decl.get(name) {
            Some(r) => {
                self.names.iter().filter(|n| *n != name && self.decl.get(*n) == Some(r)).map(String::as_str).collect()
            }
            None => Vec::new(),
        }
    }

    /// Mutations possible at this node.
    fn kinds(&self, e: &Expr) -> Vec<MutationKind> {
        let mut out = Vec::new();
        match e {
            Expr::Binary(op, ..) => {
                if swapped_op(*op).is_some() {
                    out.push(MutationKind::OperatorSwap);
                }
                if ordered(*op) {
                    out.push(MutationKind::OperandSwap);
                }
            }
            Expr::Ternary(..) => out.push(MutationKind::OperandSwap),
            Expr::Ident(n, _) if !self.params.contains(n) => {
                out.push(MutationKind::InvertedLiteral);
                if !self.alternatives(n).is_empty() {
                    out.push(MutationKind::WrongWire);
                }
            }
            Expr::Index(..) => out.push(MutationKind::InvertedLiteral),
            Expr::Const(c, _) if c.bits.iter().any(|b| *b != Tri::X) => out.push(MutationKind::ConstantFlip),
            _ => {}
        }
        out
    }

    fn apply(&self, e: &mut Expr, kind: MutationKind, rng: &mut ChaCha8Rng) {
        let old = std::mem::replace(e, Expr::int(0));
        *e = match (kind, old) {
            (MutationKind::OperatorSwap, Expr::Binary(op, a, b)) => Expr::Binary(swapped_op(op).unwrap(), a, b),
            (MutationKind::OperandSwap, Expr::Binary(op, a, b)) => Expr::Binary(op, b, a),
            (MutationKind::OperandSwap, Expr::Ternary(c, a, b)) => Expr::Ternary(c, b, a),
            (MutationKind::InvertedLiteral, x) => Expr::Unary(UnOp::Not, Box::new(x)),
            (MutationKind::ConstantFlip, Expr::Const(mut c, l)) => {
                let known: Vec<usize> = (0..c.bits.len()).filter(|&i| c.bits[i] != Tri::X).collect();
                let i = known[rng.gen_range(0..known.len())];
                c.bits[i] = if c.bits[i] == Tri::One { Tri::Zero } else { Tri::One };
                if c.width.is_none() && c.bits.iter().all(|b| *b == Tri::Zero) {
                    c.bits.truncate(1);
                }
                Expr::Const(c, l)
            }
            (MutationKind::WrongWire, Expr::Ident(n, l)) => {
                let alts = self.alternatives(&n);
                Expr::Ident(alts[rng.gen_range(0..alts.len())].to_string(), l)
            }
            (_, x) => x,
        };
    }
}

/// Pre-order walk over every mutable expression of a module: assignment
/// and update right-hand sides, register inits and instance input
/// connections. Ranges and parameters are left alone so widths never
/// change. `ports` gives each child module's ports in order, flagged when
/// they are outputs.
fn walk(items: &mut [Item], ports: &HashMap<String, Vec<(String, bool)>>, f: &mut dyn FnMut(&mut Expr) -> bool) -> bool {
    fn expr(e: &mut Expr, f: &mut dyn FnMut(&mut Expr) -> bool) -> bool {
        if f(e) {
            return true;
        }
        match e {
            Expr::Unary(_, a) => expr(a, f),
            Expr::Binary(_, a, b) => expr(a, f) || expr(b, f),
            Expr::Ternary(a, b, c) => expr(a, f) || expr(b, f) || expr(c, f),
            Expr::Concat(v) => v.iter_mut().any(|x| expr(x, f)),
            Expr::Repeat(_, v) => v.iter_mut().any(|x| expr(x, f)),
            _ => false,
        }
    }
    for it in items {
        let stop = match it {
            Item::Assign { rhs, .. } | Item::Always { rhs, .. } => expr(rhs, f),
            Item::Reg { init: RegInit::Value(v), .. } => expr(v, f),
            Item::Instance { module, conns, .. } => {
                let ps = ports.get(module);
                let is_out = |i: usize, c: &crate::frontend::ast::Binding| {
                    ps.and_then(|ps| match &c.name {
                        Some(n) => ps.iter().find(|p| &p.0 == n),
                        None => ps.get(i),
                    })
                    .is_some_and(|p| p.1)
                };
                conns.iter_mut().enumerate().filter(|(i, c)| !is_out(*i, c)).any(|(_, c)| expr(&mut c.expr, f))
            }
            Item::If { then, els, .. } => walk(then, ports, f) || walk(els, ports, f),
            _ => false,
        };
        if stop {
            return true;
        }
    }
    false
}

/// Applies one seeded mutation to the parsed source and prints it back.
/// Only the last module (the top) is mutated.
pub fn mutate(source: &str, seed: u64) -> Result<(String, Mutation), BenchError> {
    let mut mods = parse(source)?;
    let ports: HashMap<String, Vec<(String, bool)>> = mods
        .iter()
        .map(|m| (m.name.clone(), m.ports.iter().map(|p| (p.name.clone(), p.dir != Dir::Input)).collect()))
        .collect();
    let top = mods.last_mut().ok_or(BenchError::NoMutationSite)?;
    let (decl, names) = sources(top);
    let ctx = Ctx { decl: &decl, names: &names, params: top.params.iter().map(|p| p.name.clone()).collect() };

    let mut sites = Vec::new();
    let mut idx = 0;
    walk(&mut top.items, &ports, &mut |e| {
        for k in ctx.kinds(e) {
            sites.push((idx, k));
        }
        idx += 1;
        false
    });
    if sites.is_empty() {
        return Err(BenchError::NoMutationSite);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (site, kind) = sites[rng.gen_range(0..sites.len())];
    let mut idx = 0;
    let mut record = None;
    walk(&mut top.items, &ports, &mut |e| {
        if idx == site {
            let before = e.to_string();
            let loc = e.loc();
            ctx.apply(e, kind, &mut rng);
            record = Some((loc, before, e.to_string()));
            return true;
        }
        idx += 1;
        false
    });
    let (loc, before, after) = record.expect("site exists");
    let m = Mutation { kind, module: top.name.clone(), site, loc, before, after };
    let text: String = mods.iter().map(|m| format!("{m}\n")).collect();
    Ok((text, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_becomes_or() {
        let src = "module m(input a, input b, output y); assign y = a & b; endmodule";
        let found = (0..64).map(|s| mutate(src, s).unwrap()).find(|(_, m)| m.kind == MutationKind::OperatorSwap).unwrap();
        assert_eq!((found.1.before.as_str(), found.1.after.as_str()), ("a & b", "a | b"));
        assert!(found.0.contains("assign y = a | b;"), "{}", found.0);
        assert_eq!(found.1.site, 0);
    }

    #[test]
    fn instance_outputs_are_not_sites() {
        let src = "module c(input d, output p); assign p = d; endmodule\n\
                   module m(input a, output y, output z, output w); c u (.d(a), .p(z)); c v (a, y); assign w = a; endmodule";
        for s in 0..64 {
            let (_, m) = mutate(src, s).unwrap();
            assert!(m.before != "z" && m.before != "y", "{m}");
        }
    }

    #[test]
    fn deterministic_and_reparses() {
        let src = "module m(input [1:0] a, input [1:0] b, output [1:0] y); reg [1:0] r init 2'b01; \
                   always r <= a - b; assign y = r[0] ? a : r; endmodule";
        for s in 0..40 {
            let (t1, m1) = mutate(src, s).unwrap();
            let (t2, m2) = mutate(src, s).unwrap();
            assert_eq!((t1.clone(), m1), (t2, m2));
            parse(&t1).unwrap();
        }
    }

    #[test]
    fn wrong_wire_keeps_width() {
        let src = "module m(input [1:0] a, input c, output [1:0] y); reg [1:0] r init 0; always r <= a; assign y = r; endmodule";
        for s in 0..40 {
            let (_, m) = mutate(src, s).unwrap();
            if m.kind == MutationKind::WrongWire {
                assert!(matches!((m.before.as_str(), m.after.as_str()), ("a", "r") | ("r", "a")), "{m}");
            }
        }
    }

    #[test]
    fn no_site() {
        let src = "module m(output y); endmodule";
        assert!(matches!(mutate(src, 0), Err(BenchError::NoMutationSite)));
    }
}
