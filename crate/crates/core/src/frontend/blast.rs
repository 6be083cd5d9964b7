//! Word-level expression evaluation into and-inverter logic.
//!
//! Words are `Vec<Lit>`, least significant bit first, unsigned.

use super::ast::{BinOp, Const, Expr, UnOp};
use super::{FrontendError, Loc};
use crate::netlist::{Lit, NetlistBuilder};
use crate::tri::Tri;

/// Name resolution and X handling for [`eval`].
pub trait Env {
    fn builder(&mut self) -> &mut NetlistBuilder;
    /// Compile-time parameter value, if `name` is a parameter.
    fn param(&self, name: &str) -> Option<u64>;
    /// Bits of the net `name`.
    fn net(&mut self, name: &str, loc: Loc) -> Result<Vec<Lit>, FrontendError>;
    /// Declared LSB index of `name` (for selects); 0 by default.
    fn lsb(&self, _name: &str) -> i64 {
        0
    }
    /// Replacement for bit `bit` of an X literal at `loc`.
    fn x_bit(&mut self, loc: Loc, bit: u32) -> Lit;
}

/// Evaluates a constant expression over parameters.
pub fn const_eval(e: &Expr, param: &dyn Fn(&str) -> Option<u64>) -> Result<i64, FrontendError> {
    let rec = |x: &Expr| const_eval(x, param);
    Ok(match e {
        Expr::Const(c, loc) => c
            .value()
            .ok_or_else(|| FrontendError::semantic(*loc, "constant expected"))? as i64,
        Expr::Ident(n, loc) => param(n)
            .ok_or_else(|| FrontendError::semantic(*loc, format!("{n} is not a parameter")))?
            as i64,
        Expr::Unary(op, a) => {
            let v = rec(a)?;
            match op {
                UnOp::Not => !v,
                UnOp::LogNot => (v == 0) as i64,
                UnOp::RedOr => (v != 0) as i64,
                UnOp::RedAnd | UnOp::RedXor => {
                    return Err(FrontendError::semantic(e.loc(), "reduction in constant expression"))
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let (x, y) = (rec(a)?, rec(b)?);
            match op {
                BinOp::And => x & y,
                BinOp::Or => x | y,
                BinOp::Xor => x ^ y,
                BinOp::Eq => (x == y) as i64,
                BinOp::Ne => (x != y) as i64,
                BinOp::Lt => (x < y) as i64,
                BinOp::Le => (x <= y) as i64,
                BinOp::Gt => (x > y) as i64,
                BinOp::Ge => (x >= y) as i64,
                BinOp::LogAnd => (x != 0 && y != 0) as i64,
                BinOp::LogOr => (x != 0 || y != 0) as i64,
                BinOp::Add => x.wrapping_add(y),
                BinOp::Sub => x.wrapping_sub(y),
                BinOp::Mul => x.wrapping_mul(y),
            }
        }
        Expr::Ternary(c, t, f) => {
            if rec(c)? != 0 {
                rec(t)?
            } else {
                rec(f)?
            }
        }
        _ => return Err(FrontendError::semantic(e.loc(), "constant expression expected")),
    })
}

fn extend(mut v: Vec<Lit>, w: usize) -> Vec<Lit> {
    v.resize(w.max(v.len()), Lit::FALSE);
    v
}

pub fn bitwise(b: &mut NetlistBuilder, x: Vec<Lit>, y: Vec<Lit>, f: fn(&mut NetlistBuilder, Lit, Lit) -> Lit) -> Vec<Lit> {
    let w = x.len().max(y.len());
    let (x, y) = (extend(x, w), extend(y, w));
    x.iter().zip(&y).map(|(&p, &q)| f(b, p, q)).collect()
}

pub fn reduce_or(b: &mut NetlistBuilder, x: &[Lit]) -> Lit {
    b.or_all(x.iter().copied())
}

pub fn equal(b: &mut NetlistBuilder, x: Vec<Lit>, y: Vec<Lit>) -> Lit {
    let eqs = bitwise(b, x, y, NetlistBuilder::xnor);
    b.and_all(eqs)
}

/// Ripple-carry sum, truncated to the wider operand.
pub fn add(b: &mut NetlistBuilder, x: Vec<Lit>, y: Vec<Lit>, carry_in: Lit) -> Vec<Lit> {
    let w = x.len().max(y.len());
    let (x, y) = (extend(x, w), extend(y, w));
    let mut c = carry_in;
    let mut out = Vec::with_capacity(w);
    for i in 0..w {
        let p = b.xor(x[i], y[i]);
        out.push(b.xor(p, c));
        let g = b.and(x[i], y[i]);
        let t = b.and(p, c);
        c = b.or(g, t);
    }
    out
}

pub fn sub(b: &mut NetlistBuilder, x: Vec<Lit>, y: Vec<Lit>) -> Vec<Lit> {
    let w = x.len().max(y.len());
    let ny: Vec<Lit> = extend(y, w).into_iter().map(|l| !l).collect();
    add(b, x, ny, Lit::TRUE)
}

/// Unsigned `x < y`.
pub fn less(b: &mut NetlistBuilder, x: Vec<Lit>, y: Vec<Lit>) -> Lit {
    let w = x.len().max(y.len());
    let (x, y) = (extend(x, w), extend(y, w));
    // scan from LSB: lt_i = (!x_i & y_i) | (x_i == y_i) & lt_{i-1}
    let mut lt = Lit::FALSE;
    for i in 0..w {
        let strict = b.and(!x[i], y[i]);
        let same = b.xnor(x[i], y[i]);
        let keep = b.and(same, lt);
        lt = b.or(strict, keep);
    }
    lt
}

/// Shift-and-add product, truncated to the wider operand.
pub fn mul(b: &mut NetlistBuilder, x: Vec<Lit>, y: Vec<Lit>) -> Vec<Lit> {
    let w = x.len().max(y.len());
    let (x, y) = (extend(x, w), extend(y, w));
    let mut acc = vec![Lit::FALSE; w];
    for (i, &yi) in y.iter().enumerate() {
        let mut partial = vec![Lit::FALSE; w];
        for j in 0..w - i {
            partial[i + j] = b.and(x[j], yi);
        }
        acc = add(b, acc, partial, Lit::FALSE);
    }
    acc
}

fn const_bits<E: Env>(env: &mut E, c: &Const, loc: Loc) -> Vec<Lit> {
    c.bits
        .iter()
        .enumerate()
        .map(|(i, t)| match t {
            Tri::Zero => Lit::FALSE,
            Tri::One => Lit::TRUE,
            Tri::X => env.x_bit(loc, i as u32),
        })
        .collect()
}

fn select_bit<E: Env>(env: &mut E, name: &str, idx: &Expr) -> Result<i64, FrontendError> {
    let v = const_eval(idx, &|n| env.param(n))?;
    Ok(v - env.lsb(name))
}

fn bool_of(b: &mut NetlistBuilder, v: &[Lit]) -> Lit {
    reduce_or(b, v)
}

/// Evaluates `e` to a word.
pub fn eval<E: Env>(env: &mut E, e: &Expr) -> Result<Vec<Lit>, FrontendError> {
    Ok(match e {
        Expr::Const(c, loc) => const_bits(env, c, *loc),
        Expr::Ident(n, loc) => {
            if let Some(v) = env.param(n) {
                const_bits(env, &Const::unsized_int(v), *loc)
            } else {
                env.net(n, *loc)?
            }
        }
        Expr::Index(n, idx, loc) => {
            let word = env.net(n, *loc)?;
            let i = select_bit(env, n, idx)?;
            if i < 0 || i as usize >= word.len() {
                return Err(FrontendError::semantic(*loc, format!("index out of range for {n}")));
            }
            vec![word[i as usize]]
        }
        Expr::Slice(n, h, l, loc) => {
            let word = env.net(n, *loc)?;
            let (h, l) = (select_bit(env, n, h)?, select_bit(env, n, l)?);
            if l < 0 || h < l || h as usize >= word.len() {
                return Err(FrontendError::semantic(*loc, format!("bad slice of {n}")));
            }
            word[l as usize..=h as usize].to_vec()
        }
        Expr::Unary(op, a) => {
            let v = eval(env, a)?;
            let b = env.builder();
            match op {
                UnOp::Not => v.into_iter().map(|l| !l).collect(),
                UnOp::LogNot => vec![!bool_of(b, &v)],
                UnOp::RedOr => vec![bool_of(b, &v)],
                UnOp::RedAnd => vec![b.and_all(v)],
                UnOp::RedXor => vec![v.into_iter().fold(Lit::FALSE, |acc, l| b.xor(acc, l))],
            }
        }
        Expr::Binary(op, x, y) => {
            let (x, y) = (eval(env, x)?, eval(env, y)?);
            let b = env.builder();
            match op {
                BinOp::And => bitwise(b, x, y, NetlistBuilder::and),
                BinOp::Or => bitwise(b, x, y, NetlistBuilder::or),
                BinOp::Xor => bitwise(b, x, y, NetlistBuilder::xor),
                BinOp::Eq => vec![equal(b, x, y)],
                BinOp::Ne => vec![!equal(b, x, y)],
                BinOp::Lt => vec![less(b, x, y)],
                BinOp::Gt => vec![less(b, y, x)],
                BinOp::Le => vec![!less(b, y, x)],
                BinOp::Ge => vec![!less(b, x, y)],
                BinOp::LogAnd => {
                    let (p, q) = (bool_of(b, &x), bool_of(b, &y));
                    vec![b.and(p, q)]
                }
                BinOp::LogOr => {
                    let (p, q) = (bool_of(b, &x), bool_of(b, &y));
                    vec![b.or(p, q)]
                }
                BinOp::Add => add(b, x, y, Lit::FALSE),
                BinOp::Sub => sub(b, x, y),
                BinOp::Mul => mul(b, x, y),
            }
        }
        Expr::Ternary(c, t, f) => {
            let c = eval(env, c)?;
            let (t, f) = (eval(env, t)?, eval(env, f)?);
            let b = env.builder();
            let s = bool_of(b, &c);
            let w = t.len().max(f.len());
            let (t, f) = (extend(t, w), extend(f, w));
            t.iter().zip(&f).map(|(&p, &q)| b.mux(s, p, q)).collect()
        }
        Expr::Concat(parts) => {
            let mut out = Vec::new();
            for p in parts.iter().rev() {
                out.extend(eval(env, p)?);
            }
            out
        }
        Expr::Repeat(n, parts) => {
            let count = const_eval(n, &|name| env.param(name))?;
            if count <= 0 {
                return Err(FrontendError::ZeroWidth { name: "replication".into(), loc: n.loc() });
            }
            let mut one = Vec::new();
            for p in parts.iter().rev() {
                one.extend(eval(env, p)?);
            }
            one.repeat(count as usize)
        }
    })
}

/// Environment resolving identifiers through a lookup function; X
/// literals read as 0.
pub struct LookupEnv<'a> {
    pub builder: &'a mut NetlistBuilder,
    pub lookup: &'a mut dyn FnMut(&str) -> Option<Vec<Lit>>,
}

impl Env for LookupEnv<'_> {
    fn builder(&mut self) -> &mut NetlistBuilder {
        self.builder
    }
    fn param(&self, _: &str) -> Option<u64> {
        None
    }
    fn net(&mut self, name: &str, loc: Loc) -> Result<Vec<Lit>, FrontendError> {
        (self.lookup)(name).ok_or_else(|| FrontendError::Undeclared { name: name.to_string(), loc })
    }
    fn x_bit(&mut self, _: Loc, _: u32) -> Lit {
        Lit::FALSE
    }
}

/// Bit-blasts `e` into `b`, resolving identifiers with `lookup`, and
/// reduces the result to a single truth value.
pub fn compile_condition(
    b: &mut NetlistBuilder,
    e: &Expr,
    lookup: &mut dyn FnMut(&str) -> Option<Vec<Lit>>,
) -> Result<Lit, FrontendError> {
    let v = eval(&mut LookupEnv { builder: b, lookup }, e)?;
    Ok(reduce_or(b, &v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;
    use crate::netlist::{InputKind, Netlist};
    use std::collections::HashMap;

    struct Words {
        b: NetlistBuilder,
        nets: HashMap<String, Vec<Lit>>,
    }

    impl Env for Words {
        fn builder(&mut self) -> &mut NetlistBuilder {
            &mut self.b
        }
        fn param(&self, name: &str) -> Option<u64> {
            (name == "P").then_some(3)
        }
        fn net(&mut self, name: &str, loc: Loc) -> Result<Vec<Lit>, FrontendError> {
            self.nets
                .get(name)
                .cloned()
                .ok_or(FrontendError::Undeclared { name: name.into(), loc })
        }
        fn x_bit(&mut self, _: Loc, _: u32) -> Lit {
            Lit::FALSE
        }
    }

    fn eval_nl(nl: &Netlist, l: Lit, inputs: &[bool]) -> bool {
        let mut val = vec![false; nl.nodes.len()];
        for (id, n) in nl.nodes.iter().enumerate() {
            val[id] = match *n {
                crate::netlist::Node::Const => false,
                crate::netlist::Node::Input(i) => inputs[i as usize],
                crate::netlist::Node::Reg(_) => false,
                crate::netlist::Node::And(a, b) => {
                    (val[a.node() as usize] ^ a.is_inverted()) && (val[b.node() as usize] ^ b.is_inverted())
                }
            };
        }
        val[l.node() as usize] ^ l.is_inverted()
    }

    /// Checks a 4-bit binary operator against integer arithmetic on every
    /// input pair.
    fn check(expr: &str, oracle: fn(u64, u64) -> u64, out_bits: usize) {
        let mut b = NetlistBuilder::new();
        let a: Vec<Lit> = (0..4).map(|i| b.input(&format!("a{i}"), InputKind::Primary)).collect();
        let c: Vec<Lit> = (0..4).map(|i| b.input(&format!("c{i}"), InputKind::Primary)).collect();
        let mut env = Words { b, nets: HashMap::from([("a".into(), a), ("c".into(), c)]) };
        let e = parse_expr(expr).unwrap();
        let out = eval(&mut env, &e).unwrap();
        assert_eq!(out.len(), out_bits, "{expr}");
        let nl = env.b.finish();
        for x in 0..16u64 {
            for y in 0..16u64 {
                let ins: Vec<bool> = (0..8).map(|i| if i < 4 { x >> i & 1 == 1 } else { y >> (i - 4) & 1 == 1 }).collect();
                let got = out.iter().enumerate().fold(0u64, |acc, (i, &l)| acc | (eval_nl(&nl, l, &ins) as u64) << i);
                assert_eq!(got, oracle(x, y), "{expr} with {x},{y}");
            }
        }
    }

    #[test]
    fn arithmetic_matches_integers() {
        check("a + c", |x, y| (x + y) % 16, 4);
        check("a - c", |x, y| x.wrapping_sub(y) % 16, 4);
        check("a * c", |x, y| (x * y) % 16, 4);
        check("a < c", |x, y| (x < y) as u64, 1);
        check("a >= c", |x, y| (x >= y) as u64, 1);
        check("a <= P", |x, _| (x <= 3) as u64, 1);
        check("a == c", |x, y| (x == y) as u64, 1);
        check("a ^ ~c", |x, y| (x ^ !y) & 15, 4);
        check("{a[1:0], c[3]}", |x, y| ((x & 3) << 1) | (y >> 3), 3);
        check("{2{a[0]}}", |x, _| (x & 1) * 3, 2);
        check("a[3] ? c : a", |x, y| if x & 8 != 0 { y } else { x }, 4);
        check("^a", |x, _| (x.count_ones() & 1) as u64, 1);
        check("!a || &c", |x, y| (x == 0 || y == 15) as u64, 1);
    }

    #[test]
    fn const_eval_params() {
        let e = parse_expr("P * 2 - 1").unwrap();
        assert_eq!(const_eval(&e, &|n| (n == "P").then_some(4)).unwrap(), 7);
    }
}
