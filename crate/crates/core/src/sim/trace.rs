//! Line-oriented counterexample traces.
//!
//! ```text
//! cycles 2
//! @0
//! in a 1
//! reg spec/r 0
//! out y=1 y=0 MISMATCH
//! @1
//! in a x
//! out y=0 y=0
//! ```
//!
//! Inputs tied between both designs use the SPEC name; inputs present on
//! one side only are written `spec/<name>` or `imp/<name>`. `reg` lines
//! carry the initial value chosen for a symbolic register.

use std::fmt::Write as _;

use thiserror::Error;

use crate::tri::Tri;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("trace line {line}: {msg}")]
pub struct TraceError {
    pub line: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutValue {
    pub spec: String,
    pub spec_val: Tri,
    pub imp: String,
    pub imp_val: Tri,
    pub mismatch: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Step {
    pub inputs: Vec<(String, Tri)>,
    pub regs: Vec<(String, bool)>,
    pub outs: Vec<OutValue>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// First cycle with an output line marked MISMATCH.
    pub fn mismatch_cycle(&self) -> Option<usize> {
        self.steps.iter().position(|s| s.outs.iter().any(|o| o.mismatch))
    }

    /// Value of input `name` at `cycle`, if recorded.
    pub fn input(&self, cycle: usize, name: &str) -> Option<Tri> {
        self.steps.get(cycle)?.inputs.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "cycles {}", self.steps.len()).unwrap();
        for (k, step) in self.steps.iter().enumerate() {
            writeln!(s, "@{k}").unwrap();
            for (n, v) in &step.inputs {
                writeln!(s, "in {n} {v}").unwrap();
            }
            for (n, v) in &step.regs {
                writeln!(s, "reg {n} {}", *v as u8).unwrap();
            }
            for o in &step.outs {
                write!(s, "out {}={} {}={}", o.spec, o.spec_val, o.imp, o.imp_val).unwrap();
                if o.mismatch {
                    s.push_str(" MISMATCH");
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut declared = None;
        let mut steps: Vec<Step> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: &str| TraceError { line, msg: msg.to_string() };
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks[0] {
                "cycles" if declared.is_none() && toks.len() == 2 => {
                    declared = Some(toks[1].parse::<usize>().map_err(|_| err("bad cycle count"))?);
                }
                t if t.starts_with('@') => {
                    let k: usize = t[1..].parse().map_err(|_| err("bad cycle marker"))?;
                    if k != steps.len() {
                        return Err(err("cycle markers must be consecutive from @0"));
                    }
                    steps.push(Step::default());
                }
                "in" | "reg" | "out" if declared.is_none() => return Err(err("missing `cycles` header")),
                "in" | "reg" | "out" if steps.is_empty() => return Err(err("value before first cycle marker")),
                "in" if toks.len() == 3 => {
                    let v = parse_tri(toks[2]).ok_or_else(|| err("value must be 0, 1 or x"))?;
                    steps.last_mut().unwrap().inputs.push((toks[1].to_string(), v));
                }
                "reg" if toks.len() == 3 => {
                    let v = match toks[2] {
                        "0" => false,
                        "1" => true,
                        _ => return Err(err("register choice must be 0 or 1")),
                    };
                    steps.last_mut().unwrap().regs.push((toks[1].to_string(), v));
                }
                "out" if toks.len() == 3 || (toks.len() == 4 && toks[3] == "MISMATCH") => {
                    let (spec, spec_val) = parse_assign(toks[1]).ok_or_else(|| err("expected name=value"))?;
                    let (imp, imp_val) = parse_assign(toks[2]).ok_or_else(|| err("expected name=value"))?;
                    steps.last_mut().unwrap().outs.push(OutValue {
                        spec,
                        spec_val,
                        imp,
                        imp_val,
                        mismatch: toks.len() == 4,
                    });
                }
                _ => return Err(err("unrecognized line")),
            }
        }
        match declared {
            None => Err(TraceError { line: 1, msg: "missing `cycles` header".into() }),
            Some(n) if n != steps.len() => Err(TraceError {
                line: text.lines().count(),
                msg: format!("header declares {n} cycles, found {}", steps.len()),
            }),
            Some(_) => Ok(Trace { steps }),
        }
    }
}

fn parse_tri(s: &str) -> Option<Tri> {
    match s {
        "0" => Some(Tri::Zero),
        "1" => Some(Tri::One),
        "x" | "X" => Some(Tri::X),
        _ => None,
    }
}

fn parse_assign(s: &str) -> Option<(String, Tri)> {
    let (n, v) = s.rsplit_once('=')?;
    if n.is_empty() {
        return None;
    }
    Some((n.to_string(), parse_tri(v)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        Trace {
            steps: vec![
                Step {
                    inputs: vec![("a".into(), Tri::One), ("imp/b[0]".into(), Tri::X)],
                    regs: vec![("spec/r".into(), false)],
                    outs: vec![OutValue {
                        spec: "y".into(),
                        spec_val: Tri::Zero,
                        imp: "y".into(),
                        imp_val: Tri::Zero,
                        mismatch: false,
                    }],
                },
                Step {
                    inputs: vec![("a".into(), Tri::Zero)],
                    regs: vec![],
                    outs: vec![OutValue {
                        spec: "y".into(),
                        spec_val: Tri::One,
                        imp: "z".into(),
                        imp_val: Tri::Zero,
                        mismatch: true,
                    }],
                },
            ],
        }
    }

    #[test]
    fn exact_text() {
        let t = sample();
        assert_eq!(
            t.to_text(),
            "cycles 2\n@0\nin a 1\nin imp/b[0] x\nreg spec/r 0\nout y=0 y=0\n@1\nin a 0\nout y=1 z=0 MISMATCH\n"
        );
        assert_eq!(Trace::parse(&t.to_text()).unwrap(), t);
        assert_eq!(t.mismatch_cycle(), Some(1));
    }

    #[test]
    fn rejects_malformed() {
        assert!(Trace::parse("@0\n").is_err());
        assert!(Trace::parse("cycles 2\n@0\n").is_err());
        assert!(Trace::parse("cycles 1\n@0\nin a 2\n").is_err());
        assert_eq!(Trace::parse("cycles 1\n@1\n").unwrap_err().line, 2);
        assert_eq!(Trace::parse("cycles 0\n").unwrap(), Trace::default());
    }
}
