use std::collections::HashSet;

use super::ast::*;
use super::lexer::{lex, Tok};
use super::{FrontendError, Loc};

const KEYWORDS: &[&str] = &[
    "module", "endmodule", "input", "output", "wire", "assign", "reg", "init", "uninit", "always",
    "if", "else", "endif", "param",
];

/// Parses a source text into its modules.
pub fn parse(text: &str) -> Result<Vec<Module>, FrontendError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut mods = Vec::new();
    while p.peek() != &Tok::Eof {
        mods.push(p.module()?);
    }
    Ok(mods)
}

/// Parses a standalone expression (constraints, qualifiers, case predicates).
pub fn parse_expr(text: &str) -> Result<Expr, FrontendError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.expected("end of expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expected(&self, what: &str) -> FrontendError {
        let loc = self.loc();
        FrontendError::Syntax {
            line: loc.line,
            col: loc.col,
            expected: format!("{what}, found {}", self.peek().describe()),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), FrontendError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{p}`")))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), FrontendError> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(&format!("`{k}`")))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.expected("identifier")),
        }
    }

    fn module(&mut self) -> Result<Module, FrontendError> {
        let loc = self.loc();
        self.expect_kw("module")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_punct("#(") {
            loop {
                let ploc = self.loc();
                self.expect_kw("param")?;
                let pname = self.ident()?;
                self.expect_punct("=")?;
                let default = self.expr()?;
                params.push(Param { name: pname, default, loc: ploc });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(")")?;
        }
        self.expect_punct("(")?;
        let mut ports: Vec<Port> = Vec::new();
        let mut seen = HashSet::new();
        if !self.is_punct(")") {
            loop {
                let ploc = self.loc();
                let (dir, range) = if self.is_kw("input") || self.is_kw("output") {
                    let dir = if self.is_kw("input") { Dir::Input } else { Dir::Output };
                    self.bump();
                    (dir, self.opt_range()?)
                } else if let Some(prev) = ports.last() {
                    (prev.dir, prev.range.clone())
                } else {
                    return Err(self.expected("`input` or `output`"));
                };
                let pname = self.ident()?;
                if !seen.insert(pname.clone()) {
                    return Err(FrontendError::DuplicatePort { name: pname, loc: ploc });
                }
                ports.push(Port { dir, range, name: pname, loc: ploc });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        let mut items = Vec::new();
        while !self.is_kw("endmodule") {
            if self.peek() == &Tok::Eof {
                return Err(self.expected("`endmodule`"));
            }
            items.push(self.item()?);
        }
        self.bump();
        Ok(Module { name, params, ports, items, loc })
    }

    fn opt_range(&mut self) -> Result<Option<Range>, FrontendError> {
        if !self.eat_punct("[") {
            return Ok(None);
        }
        let msb = self.expr()?;
        self.expect_punct(":")?;
        let lsb = self.expr()?;
        self.expect_punct("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn item(&mut self) -> Result<Item, FrontendError> {
        let loc = self.loc();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.expected("module item")),
        };
        match kw.as_str() {
            "wire" => {
                self.bump();
                let range = self.opt_range()?;
                let name = self.ident()?;
                self.expect_punct(";")?;
                Ok(Item::Wire { range, name, loc })
            }
            "assign" => {
                self.bump();
                let lhs = self.lvalue()?;
                self.expect_punct("=")?;
                let rhs = self.expr()?;
                self.expect_punct(";")?;
                Ok(Item::Assign { lhs, rhs, loc })
            }
            "reg" => {
                self.bump();
                let range = self.opt_range()?;
                let name = self.ident()?;
                self.expect_kw("init")?;
                let init = if self.is_kw("uninit") {
                    self.bump();
                    RegInit::Uninit
                } else {
                    RegInit::Value(self.expr()?)
                };
                self.expect_punct(";")?;
                Ok(Item::Reg { range, name, init, loc })
            }
            "always" => {
                self.bump();
                let name = self.ident()?;
                self.expect_punct("<=")?;
                let rhs = self.expr()?;
                self.expect_punct(";")?;
                Ok(Item::Always { name, rhs, loc })
            }
            "if" => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let mut then = Vec::new();
                let mut els = Vec::new();
                while !self.is_kw("else") && !self.is_kw("endif") {
                    if self.peek() == &Tok::Eof {
                        return Err(self.expected("`endif`"));
                    }
                    then.push(self.item()?);
                }
                if self.is_kw("else") {
                    self.bump();
                    while !self.is_kw("endif") {
                        if self.peek() == &Tok::Eof {
                            return Err(self.expected("`endif`"));
                        }
                        els.push(self.item()?);
                    }
                }
                self.expect_kw("endif")?;
                Ok(Item::If { cond, then, els, loc })
            }
            _ if KEYWORDS.contains(&kw.as_str()) => Err(self.expected("module item")),
            _ => {
                let module = self.ident()?;
                let params = if self.eat_punct("#(") {
                    let b = self.bindings()?;
                    self.expect_punct(")")?;
                    b
                } else {
                    Vec::new()
                };
                let name = self.ident()?;
                self.expect_punct("(")?;
                let conns = self.bindings()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                Ok(Item::Instance { module, params, name, conns, loc })
            }
        }
    }

    fn bindings(&mut self) -> Result<Vec<Binding>, FrontendError> {
        let mut out = Vec::new();
        if self.is_punct(")") {
            return Ok(out);
        }
        loop {
            if self.eat_punct(".") {
                let name = self.ident()?;
                self.expect_punct("(")?;
                let expr = self.expr()?;
                self.expect_punct(")")?;
                out.push(Binding { name: Some(name), expr });
            } else {
                out.push(Binding { name: None, expr: self.expr()? });
            }
            if !self.eat_punct(",") {
                return Ok(out);
            }
        }
    }

    fn lvalue(&mut self) -> Result<LValue, FrontendError> {
        if self.eat_punct("{") {
            let mut parts = vec![self.lvalue()?];
            while self.eat_punct(",") {
                parts.push(self.lvalue()?);
            }
            self.expect_punct("}")?;
            return Ok(LValue::Concat(parts));
        }
        let loc = self.loc();
        let name = self.ident()?;
        let sel = self.opt_select()?;
        Ok(LValue::Net { name, sel, loc })
    }

    fn opt_select(&mut self) -> Result<Option<Select>, FrontendError> {
        if !self.eat_punct("[") {
            return Ok(None);
        }
        let a = self.expr()?;
        let sel = if self.eat_punct(":") {
            Select::Range(Box::new(a), Box::new(self.expr()?))
        } else {
            Select::Bit(Box::new(a))
        };
        self.expect_punct("]")?;
        Ok(Some(sel))
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, FrontendError> {
        let c = self.binary(1)?;
        if self.eat_punct("?") {
            let t = self.expr()?;
            self.expect_punct(":")?;
            let e = self.expr()?;
            return Ok(Expr::Ternary(Box::new(c), Box::new(t), Box::new(e)));
        }
        Ok(c)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else { return None };
        Some(match *p {
            "&" => BinOp::And,
            "|" => BinOp::Or,
            "^" => BinOp::Xor,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::LogAnd,
            "||" => BinOp::LogOr,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let op = match self.peek() {
            Tok::Punct("~") => UnOp::Not,
            Tok::Punct("!") => UnOp::LogNot,
            Tok::Punct("&") => UnOp::RedAnd,
            Tok::Punct("|") => UnOp::RedOr,
            Tok::Punct("^") => UnOp::RedXor,
            _ => return self.primary(),
        };
        self.bump();
        Ok(Expr::Unary(op, Box::new(self.unary()?)))
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Const(Const::unsized_int(v), loc))
            }
            Tok::Sized(w, bits) => {
                self.bump();
                Ok(Expr::Const(Const { width: Some(w), bits }, loc))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("{") => {
                self.bump();
                let first = self.expr()?;
                if self.eat_punct("{") {
                    let mut parts = vec![self.expr()?];
                    while self.eat_punct(",") {
                        parts.push(self.expr()?);
                    }
                    self.expect_punct("}")?;
                    self.expect_punct("}")?;
                    return Ok(Expr::Repeat(Box::new(first), parts));
                }
                let mut parts = vec![first];
                while self.eat_punct(",") {
                    parts.push(self.expr()?);
                }
                self.expect_punct("}")?;
                Ok(Expr::Concat(parts))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                match self.opt_select()? {
                    None => Ok(Expr::Ident(name, loc)),
                    Some(Select::Bit(i)) => Ok(Expr::Index(name, i, loc)),
                    Some(Select::Range(h, l)) => Ok(Expr::Slice(name, h, l, loc)),
                }
            }
            _ => Err(self.expected("expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_module() {
        let m = parse("module m(input a, output y); assign y = a; endmodule").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].ports.len(), 2);
        assert_eq!(m[0].ports[1].dir, Dir::Output);
    }

    #[test]
    fn truncated_expression_reports_position() {
        let err = parse("module m(input a, output y);\nassign y = a &").unwrap_err();
        match err {
            FrontendError::Syntax { line, col, expected } => {
                assert_eq!((line, col), (2, 15));
                assert!(expected.contains("expression"), "{expected}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_port() {
        assert!(matches!(
            parse("module m(input a, output a); endmodule"),
            Err(FrontendError::DuplicatePort { .. })
        ));
    }

    #[test]
    fn overflowing_literal() {
        assert!(matches!(
            parse("module m(output [1:0] y); assign y = 2'd7; endmodule"),
            Err(FrontendError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a | b & c == d").unwrap();
        let expect = Expr::bin(
            BinOp::Or,
            Expr::ident("a"),
            Expr::bin(BinOp::And, Expr::ident("b"), Expr::bin(BinOp::Eq, Expr::ident("c"), Expr::ident("d"))),
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn repeat_and_instances() {
        let src = "module t #(param W = 2) (input [W-1:0] a, output [W-1:0] y);
            sub #(.W(W)) u (.a({2{a[0]}}), .y(y));
            if (W > 1) wire z; else wire q; endif
        endmodule";
        let m = parse(src).unwrap();
        assert_eq!(m[0].params.len(), 1);
        assert!(matches!(&m[0].items[0], Item::Instance { conns, .. } if conns.len() == 2));
        assert!(matches!(&m[0].items[1], Item::If { then, els, .. } if then.len() == 1 && els.len() == 1));
    }
}
