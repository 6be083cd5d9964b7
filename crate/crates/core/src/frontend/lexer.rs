use super::{FrontendError, Loc};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Unsized decimal.
    Int(u64),
    /// Sized literal: width and digits (LSB first) already expanded.
    Sized(u32, Vec<crate::tri::Tri>),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("number {v}"),
            Tok::Sized(w, _) => format!("{w}-bit literal"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

const PUNCT: &[&str] = &[
    "<=", ">=", "==", "!=", "&&", "||", "#(", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=",
    "?", "~", "&", "|", "^", "!", "<", ">", "+", "-", "*", ".",
];

pub(crate) fn lex(text: &str) -> Result<Vec<(Tok, Loc)>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let err = |line, col, what: &str| FrontendError::Syntax { line, col, expected: what.to_string() };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let loc = Loc { line, col };
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), loc));
        } else if c.is_ascii_digit() {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                i += 1;
            }
            let digits: String = chars[start..i].iter().filter(|&&c| c != '_').collect();
            let value: u64 = digits.parse().map_err(|_| err(line, col, "number below 2^64"))?;
            if chars.get(i) == Some(&'\'') {
                i += 1;
                let base = chars.get(i).copied().unwrap_or(' ').to_ascii_lowercase();
                i += 1;
                let ds = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let body: String = chars[ds..i].iter().filter(|&&c| c != '_').collect();
                let bits = sized_bits(value, base, &body).map_err(|(overflow, msg)| {
                    if overflow {
                        FrontendError::WidthMismatch { msg, loc }
                    } else {
                        err(loc.line, loc.col, &msg)
                    }
                })?;
                out.push((Tok::Sized(value as u32, bits), loc));
            } else {
                out.push((Tok::Int(value), loc));
            }
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let p = PUNCT
                .iter()
                .find(|p| rest.starts_with(**p))
                .ok_or_else(|| err(line, col, "a token"))?;
            i += p.len();
            out.push((Tok::Punct(p), loc));
        }
        col += (i - start) as u32;
    }
    out.push((Tok::Eof, Loc { line, col }));
    Ok(out)
}

/// Expands a sized literal body; the error flag marks value overflow.
fn sized_bits(width: u64, base: char, body: &str) -> Result<Vec<crate::tri::Tri>, (bool, String)> {
    use crate::tri::Tri;
    let syntax = |m: &str| (false, m.to_string());
    if width == 0 || width > 4096 {
        return Err(syntax("literal width between 1 and 4096"));
    }
    let width = width as usize;
    let mut bits: Vec<Tri> = match base {
        'b' => {
            if body.is_empty() {
                return Err(syntax("binary digits"));
            }
            let mut v = Vec::new();
            for c in body.chars().rev() {
                v.push(Tri::from_char(c).ok_or_else(|| syntax("binary digit 0, 1 or x"))?);
            }
            v
        }
        'd' => {
            let value: u128 = body.parse().map_err(|_| syntax("decimal digits"))?;
            let n = 128 - value.leading_zeros() as usize;
            (0..n.max(1)).map(|i| Tri::from_bool(value >> i & 1 == 1)).collect()
        }
        _ => return Err(syntax("'b or 'd")),
    };
    if bits.len() > width {
        if bits[width..].iter().any(|b| *b != Tri::Zero) {
            return Err((true, format!("literal value does not fit in {width} bits")));
        }
        bits.truncate(width);
    }
    let fill = if bits.last() == Some(&Tri::X) { Tri::X } else { Tri::Zero };
    bits.resize(width, fill);
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tri::Tri::*;

    #[test]
    fn tokens_and_positions() {
        let toks = lex("a <= 4'b1x00; // c\n  b").unwrap();
        assert_eq!(toks[0], (Tok::Ident("a".into()), Loc { line: 1, col: 1 }));
        assert_eq!(toks[1].0, Tok::Punct("<="));
        assert_eq!(toks[2].0, Tok::Sized(4, vec![Zero, Zero, X, One]));
        assert_eq!(toks[4].1.line, 2);
        assert_eq!(toks[4].1.col, 3);
    }

    #[test]
    fn literal_padding() {
        assert_eq!(sized_bits(3, 'd', "2").unwrap(), vec![Zero, One, Zero]);
        assert_eq!(sized_bits(3, 'b', "x").unwrap(), vec![X, X, X]);
        assert!(sized_bits(2, 'd', "4").is_err());
    }
}
