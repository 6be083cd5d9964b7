//! X-propagation checking: the same design is elaborated twice with
//! different treatments of its X sources and the two copies are checked
//! for sequential equivalence. Any difference means some X source can
//! reach an output.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::frontend::{ast::Module, elaborate, list_x_sources, ElabOptions, FrontendError, XMode, XPolicy, XSite};
use crate::mapper::{map_by_name, MapError};
use crate::netlist::Lit;
use crate::sec::{check_sec, Budget, SecError, Status, Task, Verdict};

#[derive(Debug, Error)]
pub enum XCheckError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Sec(#[from] SecError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Which X-source classes differ between the two copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum XCheckMode {
    #[default]
    UninitFlops,
    XSources,
    Both,
}

impl FromStr for XCheckMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "uninit" | "uninit_flops" => Ok(XCheckMode::UninitFlops),
            "xsrc" | "x_sources" => Ok(XCheckMode::XSources),
            "both" => Ok(XCheckMode::Both),
            _ => Err(format!("unknown xcheck mode {s}")),
        }
    }
}

impl fmt::Display for XCheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XCheckMode::UninitFlops => "UNINIT_FLOPS",
            XCheckMode::XSources => "X_SOURCES",
            XCheckMode::Both => "BOTH",
        })
    }
}

/// 0-vs-1 (SPEC copy resolves X to 0, IMP copy to 1) or independent
/// symbolic values on each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PolicyPair {
    #[default]
    ZeroOne,
    Symbolic,
}

impl FromStr for PolicyPair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "01" | "zero_one" => Ok(PolicyPair::ZeroOne),
            "symbolic" => Ok(PolicyPair::Symbolic),
            _ => Err(format!("unknown policy pair {s}")),
        }
    }
}

impl PolicyPair {
    fn modes(self) -> (XMode, XMode) {
        match self {
            PolicyPair::ZeroOne => (XMode::Zero, XMode::One),
            PolicyPair::Symbolic => (XMode::Symbolic, XMode::Symbolic),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct XCheckOptions {
    pub mode: XCheckMode,
    pub policy: PolicyPair,
    pub params: BTreeMap<String, u64>,
    pub constraints: Vec<String>,
    pub allow_undriven: bool,
    pub budget: Budget,
}

#[derive(Clone, Debug)]
pub struct XCheckReport {
    pub mode: XCheckMode,
    pub policies: (XPolicy, XPolicy),
    pub clean: bool,
    pub verdict: Verdict,
    /// X sources whose nets lie in the cone of the mismatching output.
    pub culprits: Vec<XSite>,
    pub sources: Vec<XSite>,
    pub notes: Vec<String>,
}

/// The (SPEC copy, IMP copy) elaboration policies for a check.
pub fn policies(mode: XCheckMode, pair: PolicyPair) -> (XPolicy, XPolicy) {
    let (a, b) = pair.modes();
    let pin = XMode::Zero;
    match mode {
        XCheckMode::UninitFlops => (XPolicy { regs: a, logic: pin }, XPolicy { regs: b, logic: pin }),
        XCheckMode::XSources => (XPolicy { regs: pin, logic: a }, XPolicy { regs: pin, logic: b }),
        XCheckMode::Both => (XPolicy::uniform(a), XPolicy::uniform(b)),
    }
}

/// Checks that no X source of the selected classes can change an output.
pub fn check_x(modules: &[Module], top: &str, opts: &XCheckOptions) -> Result<XCheckReport, XCheckError> {
    let sources = if opts.allow_undriven {
        list_x_sources(modules, top, &opts.params)?
    } else {
        // Elaborate once strictly so undriven nets still error out.
        elaborate(modules, top, &ElabOptions { params: opts.params.clone(), ..Default::default() })?;
        list_x_sources(modules, top, &opts.params)?
    };
    let (pa, pb) = policies(opts.mode, opts.policy);
    let mut notes = Vec::new();
    if sources.is_empty() {
        notes.push("design has no X sources".to_string());
        let mut v = Verdict::new(Status::Equivalent);
        v.notes.push("no X sources".into());
        return Ok(XCheckReport { mode: opts.mode, policies: (pa, pb), clean: true, verdict: v, culprits: vec![], sources, notes });
    }
    let elab = |p: XPolicy| {
        elaborate(modules, top, &ElabOptions { params: opts.params.clone(), xpolicy: p, allow_undriven: opts.allow_undriven })
    };
    let a = elab(pa)?;
    let b = elab(pb)?;
    let mapping = map_by_name(&a, &b, &[])?;
    let mut task = Task::new(a, b, mapping);
    task.constraints = opts.constraints.clone();
    task.budget = opts.budget;
    task.refine = true;
    let verdict = check_sec(&task)?;
    let clean = verdict.status == Status::Equivalent;
    let mut culprits = Vec::new();
    if verdict.status == Status::NotEquivalent {
        if let Some(out) = &verdict.failing_output {
            let sym = elab(XPolicy::uniform(XMode::Symbolic))?;
            if let Some(l) = sym.lookup(out) {
                let cone = sym.sequential_support(&[l]);
                let in_cone = |n: &str| sym.lookup(n).is_some_and(|x: Lit| cone[x.node() as usize]);
                culprits = sources.iter().filter(|s| s.nets.iter().any(|n| in_cone(n))).cloned().collect();
            }
        }
    }
    if verdict.status == Status::Inconclusive {
        notes.push("equivalence of the two copies was not decided".into());
    }
    Ok(XCheckReport { mode: opts.mode, policies: (pa, pb), clean, verdict, culprits, sources, notes })
}

/// [`check_x`] with independent symbolic X values on both copies.
pub fn check_x_symbolic(modules: &[Module], top: &str, opts: &XCheckOptions) -> Result<XCheckReport, XCheckError> {
    check_x(modules, top, &XCheckOptions { policy: PolicyPair::Symbolic, ..opts.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn run(src: &str, policy: PolicyPair) -> XCheckReport {
        let m = parse(src).unwrap();
        check_x(&m, "t", &XCheckOptions { policy, ..Default::default() }).unwrap()
    }

    #[test]
    fn reset_design_is_clean() {
        let r = run("module t(input a, output y); reg r init 0; always r <= a; assign y = r; endmodule", PolicyPair::ZeroOne);
        assert!(r.clean);
        assert_eq!(r.notes, vec!["design has no X sources".to_string()]);
    }

    #[test]
    fn uninit_leak_is_localized() {
        let r = run(
            "module t(input a, output y); reg r init uninit; reg s init 0; always r <= a; always s <= a; assign y = r; endmodule",
            PolicyPair::ZeroOne,
        );
        assert!(!r.clean);
        assert_eq!(r.culprits.len(), 1);
        assert_eq!(r.culprits[0].name, "r");
    }

    #[test]
    fn masked_uninit_is_clean() {
        let r = run("module t(input a, output y); reg r init uninit; always r <= a; assign y = r & 0; endmodule", PolicyPair::ZeroOne);
        assert!(r.clean);
    }

    #[test]
    fn xor_of_uninit_needs_symbolic() {
        let src = "module t(input a, output y); reg r1 init uninit; reg r2 init uninit; \
                   always r1 <= r1; always r2 <= r2; assign y = r1 ^ r2; endmodule";
        assert!(run(src, PolicyPair::ZeroOne).clean);
        assert!(!run(src, PolicyPair::Symbolic).clean);
    }
}
