//! Syntax tree for SNL sources.

use super::Loc;
use crate::tri::Tri;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Module {
    pub name: String,
    pub params: Vec<Param>,
    pub ports: Vec<Port>,
    pub items: Vec<Item>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub default: Expr,
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub dir: Dir,
    pub range: Option<Range>,
    pub name: String,
    pub loc: Loc,
}

/// `[msb:lsb]`, both constant expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegInit {
    Value(Expr),
    Uninit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Wire {
        range: Option<Range>,
        name: String,
        loc: Loc,
    },
    Assign {
        lhs: LValue,
        rhs: Expr,
        loc: Loc,
    },
    Reg {
        range: Option<Range>,
        name: String,
        init: RegInit,
        loc: Loc,
    },
    Always {
        name: String,
        rhs: Expr,
        loc: Loc,
    },
    Instance {
        module: String,
        params: Vec<Binding>,
        name: String,
        conns: Vec<Binding>,
        loc: Loc,
    },
    If {
        cond: Expr,
        then: Vec<Item>,
        els: Vec<Item>,
        loc: Loc,
    },
}

/// Positional (`name == None`) or named `.name(expr)` binding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub name: Option<String>,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LValue {
    Net { name: String, sel: Option<Select>, loc: Loc },
    Concat(Vec<LValue>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Select {
    Bit(Box<Expr>),
    Range(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    /// `~`
    Not,
    /// `!`
    LogNot,
    /// `&` reduction
    RedAnd,
    /// `|` reduction
    RedOr,
    /// `^` reduction
    RedXor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogAnd,
    LogOr,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::LogAnd => "&&",
            BinOp::LogOr => "||",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::LogOr => 1,
            BinOp::LogAnd => 2,
            BinOp::Or => 3,
            BinOp::Xor => 4,
            BinOp::And => 5,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 7,
            BinOp::Add | BinOp::Sub => 8,
            BinOp::Mul => 9,
        }
    }
}

/// Literal value, LSB first. Unsized decimals carry `width: None` and
/// their minimal binary form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Const {
    pub width: Option<u32>,
    pub bits: Vec<Tri>,
}

impl Const {
    pub fn unsized_int(v: u64) -> Const {
        let n = (64 - v.leading_zeros()).max(1);
        Const { width: None, bits: (0..n).map(|i| Tri::from_bool(v >> i & 1 == 1)).collect() }
    }

    /// Integer value, or None if any bit is X or it does not fit.
    pub fn value(&self) -> Option<u64> {
        let mut v = 0u64;
        for (i, b) in self.bits.iter().enumerate() {
            match b {
                Tri::One if i >= 64 => return None,
                Tri::One => v |= 1 << i,
                Tri::X => return None,
                Tri::Zero => {}
            }
        }
        Some(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Ident(String, Loc),
    Const(Const, Loc),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    Repeat(Box<Expr>, Vec<Expr>),
    Index(String, Box<Expr>, Loc),
    Slice(String, Box<Expr>, Box<Expr>, Loc),
}

impl Expr {
    pub fn int(v: u64) -> Expr {
        Expr::Const(Const::unsized_int(v), Loc::default())
    }

    pub fn ident(name: &str) -> Expr {
        Expr::Ident(name.to_string(), Loc::default())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Some location inside the expression, for diagnostics.
    pub fn loc(&self) -> Loc {
        match self {
            Expr::Ident(_, l) | Expr::Const(_, l) | Expr::Index(_, _, l) | Expr::Slice(_, _, _, l) => *l,
            Expr::Unary(_, e) => e.loc(),
            Expr::Binary(_, a, _) | Expr::Ternary(a, _, _) | Expr::Repeat(a, _) => a.loc(),
            Expr::Concat(v) => v.first().map(|e| e.loc()).unwrap_or_default(),
        }
    }

    /// Identifiers referenced anywhere in the expression.
    pub fn idents(&self, out: &mut Vec<String>) {
        match self {
            Expr::Ident(n, _) | Expr::Index(n, _, _) => out.push(n.clone()),
            Expr::Slice(n, _, _, _) => out.push(n.clone()),
            Expr::Const(..) => {}
            Expr::Unary(_, e) => e.idents(out),
            Expr::Binary(_, a, b) => {
                a.idents(out);
                b.idents(out);
            }
            Expr::Ternary(a, b, c) => {
                a.idents(out);
                b.idents(out);
                c.idents(out);
            }
            Expr::Concat(v) => v.iter().for_each(|e| e.idents(out)),
            Expr::Repeat(n, v) => {
                n.idents(out);
                v.iter().for_each(|e| e.idents(out));
            }
        }
    }
}
