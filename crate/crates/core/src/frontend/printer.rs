//! Source re-emission. Output always re-parses to an equal tree.

use std::fmt::{self, Display, Formatter, Write as _};

use super::ast::*;

impl Display for Const {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.width {
            None => write!(f, "{}", self.value().unwrap_or(0)),
            Some(w) => {
                write!(f, "{w}'b")?;
                for b in self.bits.iter().rev() {
                    f.write_char(b.as_char())?;
                }
                Ok(())
            }
        }
    }
}

fn atomic(e: &Expr) -> bool {
    !matches!(e, Expr::Binary(..) | Expr::Ternary(..))
}

fn sub(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
    if atomic(e) {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

fn list(f: &mut Formatter<'_>, v: &[Expr]) -> fmt::Result {
    for (i, e) in v.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Ident(n, _) => f.write_str(n),
            Expr::Const(c, _) => write!(f, "{c}"),
            Expr::Unary(op, e) => {
                let s = match op {
                    UnOp::Not => "~",
                    UnOp::LogNot => "!",
                    UnOp::RedAnd => "&",
                    UnOp::RedOr => "|",
                    UnOp::RedXor => "^",
                };
                f.write_str(s)?;
                sub(f, e)
            }
            Expr::Binary(op, a, b) => {
                sub(f, a)?;
                write!(f, " {} ", op.symbol())?;
                sub(f, b)
            }
            Expr::Ternary(c, t, e) => {
                sub(f, c)?;
                f.write_str(" ? ")?;
                sub(f, t)?;
                f.write_str(" : ")?;
                sub(f, e)
            }
            Expr::Concat(v) => {
                f.write_char('{')?;
                list(f, v)?;
                f.write_char('}')
            }
            Expr::Repeat(n, v) => {
                f.write_char('{')?;
                sub(f, n)?;
                f.write_char('{')?;
                list(f, v)?;
                f.write_str("}}")
            }
            Expr::Index(n, i, _) => write!(f, "{n}[{i}]"),
            Expr::Slice(n, h, l, _) => write!(f, "{n}[{h}:{l}]"),
        }
    }
}

impl Display for Range {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "[{}:{}] ", self.msb, self.lsb)
    }
}

fn range(r: &Option<Range>) -> String {
    r.as_ref().map(|r| r.to_string()).unwrap_or_default()
}

impl Display for LValue {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            LValue::Net { name, sel, .. } => {
                f.write_str(name)?;
                match sel {
                    None => Ok(()),
                    Some(Select::Bit(i)) => write!(f, "[{i}]"),
                    Some(Select::Range(h, l)) => write!(f, "[{h}:{l}]"),
                }
            }
            LValue::Concat(v) => {
                f.write_char('{')?;
                for (i, l) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}")?;
                }
                f.write_char('}')
            }
        }
    }
}

fn bindings(v: &[Binding]) -> String {
    v.iter()
        .map(|b| match &b.name {
            Some(n) => format!(".{n}({})", b.expr),
            None => b.expr.to_string(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn item(out: &mut String, it: &Item, depth: usize) {
    let pad = "    ".repeat(depth);
    match it {
        Item::Wire { range: r, name, .. } => {
            let _ = writeln!(out, "{pad}wire {}{name};", range(r));
        }
        Item::Assign { lhs, rhs, .. } => {
            let _ = writeln!(out, "{pad}assign {lhs} = {rhs};");
        }
        Item::Reg { range: r, name, init, .. } => {
            let init = match init {
                RegInit::Uninit => "uninit".to_string(),
                RegInit::Value(e) => e.to_string(),
            };
            let _ = writeln!(out, "{pad}reg {}{name} init {init};", range(r));
        }
        Item::Always { name, rhs, .. } => {
            let _ = writeln!(out, "{pad}always {name} <= {rhs};");
        }
        Item::Instance { module, params, name, conns, .. } => {
            let ps = if params.is_empty() { String::new() } else { format!(" #({})", bindings(params)) };
            let _ = writeln!(out, "{pad}{module}{ps} {name} ({});", bindings(conns));
        }
        Item::If { cond, then, els, .. } => {
            let _ = writeln!(out, "{pad}if ({cond})");
            for i in then {
                item(out, i, depth + 1);
            }
            if !els.is_empty() {
                let _ = writeln!(out, "{pad}else");
                for i in els {
                    item(out, i, depth + 1);
                }
            }
            let _ = writeln!(out, "{pad}endif");
        }
    }
}

impl Display for Module {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "module {}", self.name)?;
        if !self.params.is_empty() {
            let ps: Vec<String> =
                self.params.iter().map(|p| format!("param {} = {}", p.name, p.default)).collect();
            write!(f, " #({})", ps.join(", "))?;
        }
        let ports: Vec<String> = self
            .ports
            .iter()
            .map(|p| {
                let dir = match p.dir {
                    Dir::Input => "input",
                    Dir::Output => "output",
                };
                format!("{dir} {}{}", range(&p.range), p.name)
            })
            .collect();
        writeln!(f, " ({});", ports.join(", "))?;
        let mut body = String::new();
        for it in &self.items {
            item(&mut body, it, 1);
        }
        f.write_str(&body)?;
        writeln!(f, "endmodule")
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    #[test]
    fn round_trip() {
        let src = "module t #(param W = 4, param D = W * 2 - 1) (input [W-1:0] a, b, output [W-1:0] y, output z);
            wire [W-1:0] s;
            reg [W-1:0] r init 4'b1x0_0;
            reg q init uninit;
            assign s = (a + b) ^ ~r;
            assign {z, y} = {1'b0, s};
            always r <= s[W-1] ? {2{a[1:0]}} : (a & b) | {|a, ^b, &r, !q};
            always q <= (a < b) && (a >= 3) || a != b;
            sub #(.K(1), 2) u (.i(a), y);
            if (D > 3)
                wire w;
            else
                wire v;
            endif
        endmodule";
        let ast = parse(src).unwrap();
        let printed = ast[0].to_string();
        let again = parse(&printed).unwrap();
        assert_eq!(ast, again);
        assert_eq!(printed, again[0].to_string());
    }
}
