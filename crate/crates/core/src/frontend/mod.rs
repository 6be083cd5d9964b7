//! SNL: a small synthesizable HDL subset.
//!
//! Text goes through [`parse`] into [`ast::Module`]s, then [`elaborate`]
//! flattens the hierarchy, substitutes parameters and bit-blasts everything
//! into a [`Netlist`](crate::netlist::Netlist).

pub mod ast;
pub mod blast;
mod elab;
mod lexer;
mod parser;
mod printer;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::netlist::NetlistError;

pub use elab::{elaborate, list_x_sources, ElabOptions, XSite, XSiteKind};
pub use parser::{parse, parse_expr};

/// Source position, 1-based. Positions never take part in AST equality so
/// that printed-and-reparsed trees compare equal.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Loc {
    fn eq(&self, _: &Loc) -> bool {
        true
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: expected {expected}")]
    Syntax { line: u32, col: u32, expected: String },
    #[error("{loc}: duplicate port {name}")]
    DuplicatePort { name: String, loc: Loc },
    #[error("{loc}: width mismatch: {msg}")]
    WidthMismatch { msg: String, loc: Loc },
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("unknown module {0}")]
    UnknownModule(String),
    #[error("recursive instantiation: {}", .0.join(" -> "))]
    RecursiveInstantiation(Vec<String>),
    #[error("multiple drivers for {0}")]
    MultipleDrivers(String),
    #[error("{loc}: zero width for {name}")]
    ZeroWidth { name: String, loc: Loc },
    #[error("{loc}: undeclared identifier {name}")]
    Undeclared { name: String, loc: Loc },
    #[error("{loc}: duplicate declaration of {name}")]
    DuplicateName { name: String, loc: Loc },
    #[error("undriven net {0} (pass allow_undriven to treat it as an X source)")]
    Undriven(String),
    #[error("combinational cycle: {}", .0.join(" -> "))]
    CombinationalCycle(Vec<String>),
    #[error("{loc}: {msg}")]
    Semantic { msg: String, loc: Loc },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

impl FrontendError {
    pub(crate) fn semantic(loc: Loc, msg: impl Into<String>) -> Self {
        FrontendError::Semantic { msg: msg.into(), loc }
    }
}

/// How one class of X source is turned into two-valued logic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum XMode {
    #[default]
    Zero,
    One,
    /// Registers get a free initial value; X literals and undriven nets a
    /// fresh free input every cycle.
    Symbolic,
}

impl FromStr for XMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "x_to_zero" | "zero" | "0" => Ok(XMode::Zero),
            "x_to_one" | "one" | "1" => Ok(XMode::One),
            "x_symbolic" | "symbolic" => Ok(XMode::Symbolic),
            _ => Err(format!("unknown X policy {s}")),
        }
    }
}

impl fmt::Display for XMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XMode::Zero => "X_TO_ZERO",
            XMode::One => "X_TO_ONE",
            XMode::Symbolic => "X_SYMBOLIC",
        })
    }
}

/// Independent treatment of uninitialized registers and of X literals /
/// undriven nets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct XPolicy {
    pub regs: XMode,
    pub logic: XMode,
}

impl XPolicy {
    pub fn uniform(m: XMode) -> XPolicy {
        XPolicy { regs: m, logic: m }
    }
}

/// Reads and parses a source file.
pub fn parse_file(path: &std::path::Path) -> Result<Vec<ast::Module>, FrontendError> {
    let text = std::fs::read_to_string(path).map_err(|e| FrontendError::Semantic {
        msg: format!("{}: {e}", path.display()),
        loc: Loc::default(),
    })?;
    parse(&text)
}

/// Adds the logic of a boolean condition over `nl`'s named nets to a copy
/// of `nl`, returning the copy and the condition literal.
pub fn attach_condition(
    nl: &crate::netlist::Netlist,
    e: &ast::Expr,
) -> Result<(crate::netlist::Netlist, crate::netlist::Lit), FrontendError> {
    let mut b = crate::netlist::NetlistBuilder::from_netlist(nl.clone());
    let l = blast::compile_condition(&mut b, e, &mut |name| nl.lookup_word(name))?;
    Ok((b.finish(), l))
}
