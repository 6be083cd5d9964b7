//! Building and refining the SPEC/IMP correspondence.

use std::collections::{HashMap, HashSet};

use regex::Regex;
use thiserror::Error;

use crate::mapping::{Mapping, OutputPair, PairTag, RegPair};
use crate::netlist::{split_bit_name, InputKind, Lit, Netlist};
use crate::sec::{induct_pairs, Task};
use crate::sim::{random_signatures_keyed, Signatures};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("rename rule {rule} maps both {a} and {b} to {target}")]
    AmbiguousRule { rule: String, a: String, b: String, target: String },
    #[error("bad rename rule {0}: {1}")]
    BadRule(String, String),
    #[error("signature tables differ in runs/depth/seed")]
    SignatureMismatchConfig,
    #[error("solver budget exhausted; still unresolved: {}", .0.join(", "))]
    BudgetExhausted(Vec<String>),
}

/// Which class of names a rule applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RuleScope {
    #[default]
    All,
    Inputs,
    Outputs,
    Registers,
}

/// A regex substitution applied to SPEC base names (without bit index)
/// before looking them up in IMP.
#[derive(Clone, Debug)]
pub struct RenameRule {
    pub pattern: Regex,
    pub replacement: String,
    pub scope: RuleScope,
}

impl RenameRule {
    pub fn new(pattern: &str, replacement: &str, scope: RuleScope) -> Result<RenameRule, MapError> {
        let pattern = Regex::new(pattern).map_err(|e| MapError::BadRule(pattern.to_string(), e.to_string()))?;
        Ok(RenameRule { pattern, replacement: replacement.to_string(), scope })
    }

    fn describe(&self) -> String {
        format!("{} -> {}", self.pattern.as_str(), self.replacement)
    }
}

fn rename(name: &str, rules: &[RenameRule], scope: RuleScope) -> String {
    let (base, bit) = split_bit_name(name);
    let mut base = base.to_string();
    for r in rules.iter().filter(|r| r.scope == RuleScope::All || r.scope == scope) {
        base = r.pattern.replace_all(&base, r.replacement.as_str()).into_owned();
    }
    match bit {
        Some(i) => format!("{base}[{i}]"),
        None => base,
    }
}

/// Pairs `names` with IMP names through the rules; errors if two SPEC
/// names land on the same IMP name.
fn pair_names<'a>(
    names: impl Iterator<Item = &'a str>,
    exists: impl Fn(&str) -> bool,
    rules: &[RenameRule],
    scope: RuleScope,
) -> Result<(Vec<(String, String)>, Vec<String>), MapError> {
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    let mut taken: HashMap<String, String> = HashMap::new();
    for n in names {
        let t = rename(n, rules, scope);
        if !exists(&t) {
            unmatched.push(n.to_string());
            continue;
        }
        if let Some(prev) = taken.insert(t.clone(), n.to_string()) {
            let rule = rules.iter().map(|r| r.describe()).collect::<Vec<_>>().join("; ");
            return Err(MapError::AmbiguousRule { rule, a: prev, b: n.to_string(), target: t });
        }
        pairs.push((n.to_string(), t));
    }
    Ok((pairs, unmatched))
}

/// Pairs inputs, outputs and registers whose (renamed) SPEC name exists in
/// IMP. Only primary and black-box inputs are paired; X sources stay per
/// design. Registers come out CANDIDATE, outputs with latency (0, 0).
pub fn map_by_name(spec: &Netlist, imp: &Netlist, rules: &[RenameRule]) -> Result<Mapping, MapError> {
    let tieable = |k: InputKind| k != InputKind::XSource;
    let imp_in: HashSet<&str> = imp.inputs.iter().filter(|i| tieable(i.kind)).map(|i| i.name.as_str()).collect();
    let (inputs, mut un_s) = pair_names(
        spec.inputs.iter().filter(|i| tieable(i.kind)).map(|i| i.name.as_str()),
        |n| imp_in.contains(n),
        rules,
        RuleScope::Inputs,
    )?;
    let (outs, un_o) =
        pair_names(spec.outputs.iter().map(|o| o.name.as_str()), |n| imp.output_index(n).is_some(), rules, RuleScope::Outputs)?;
    let (regs, un_r) = pair_names(
        spec.registers.iter().map(|r| r.name.as_str()),
        |n| imp.register_index(n).is_some(),
        rules,
        RuleScope::Registers,
    )?;
    un_s.extend(un_o);
    un_s.extend(un_r);

    let used: HashSet<&str> =
        inputs.iter().chain(&outs).chain(&regs).map(|(_, i)| i.as_str()).collect();
    let un_i: Vec<String> = imp
        .inputs
        .iter()
        .filter(|i| tieable(i.kind))
        .map(|i| &i.name)
        .chain(imp.outputs.iter().map(|o| &o.name))
        .chain(imp.registers.iter().map(|r| &r.name))
        .filter(|n| !used.contains(n.as_str()))
        .cloned()
        .collect();
    Ok(Mapping {
        inputs,
        outputs: outs.into_iter().map(|(spec, imp)| OutputPair { spec, imp, latency: (0, 0) }).collect(),
        registers: regs
            .into_iter()
            .map(|(spec, imp)| RegPair { spec, imp, tag: PairTag::Candidate, dropped: None })
            .collect(),
        qualifier: None,
        unmatched_spec: un_s,
        unmatched_imp: un_i,
    })
}

/// Signature tables for both designs under identical stimulus: IMP inputs
/// draw the random stream of the SPEC input they are tied to.
pub fn signatures_for(
    spec: &Netlist,
    imp: &Netlist,
    mapping: &Mapping,
    runs: usize,
    depth: usize,
    seed: u64,
) -> (Signatures, Signatures) {
    let to_spec: HashMap<&str, &str> = mapping.inputs.iter().map(|(s, i)| (i.as_str(), s.as_str())).collect();
    let s = random_signatures_keyed(spec, runs, depth, seed, &|n| n.to_string());
    let i = random_signatures_keyed(imp, runs, depth, seed, &|n| match to_spec.get(n) {
        Some(s) => s.to_string(),
        None => format!("imp/{n}"),
    });
    (s, i)
}

/// Register pairs whose signatures match exactly one register on each
/// side. Registers already paired in `existing` are left alone.
pub fn map_by_signature(
    spec: &Netlist,
    spec_sigs: &Signatures,
    imp: &Netlist,
    imp_sigs: &Signatures,
    existing: &Mapping,
) -> Result<Vec<RegPair>, MapError> {
    if (spec_sigs.runs, spec_sigs.depth, spec_sigs.seed) != (imp_sigs.runs, imp_sigs.depth, imp_sigs.seed) {
        return Err(MapError::SignatureMismatchConfig);
    }
    let paired_s: HashSet<&str> = existing.registers.iter().map(|r| r.spec.as_str()).collect();
    let paired_i: HashSet<&str> = existing.registers.iter().map(|r| r.imp.as_str()).collect();
    let mut groups: HashMap<crate::sim::Signature, (Vec<&str>, Vec<&str>)> = HashMap::new();
    for r in &spec.registers {
        let sig = spec_sigs.of(Lit::new(r.node, false));
        groups.entry(sig).or_default().0.push(&r.name);
    }
    for r in &imp.registers {
        let sig = imp_sigs.of(Lit::new(r.node, false));
        groups.entry(sig).or_default().1.push(&r.name);
    }
    let mut out = Vec::new();
    for (s, i) in groups.values() {
        if let ([s], [i]) = (s.as_slice(), i.as_slice()) {
            if !paired_s.contains(s) && !paired_i.contains(i) {
                out.push(RegPair { spec: s.to_string(), imp: i.to_string(), tag: PairTag::Candidate, dropped: None });
            }
        }
    }
    out.sort_by(|a, b| a.spec.cmp(&b.spec));
    Ok(out)
}

/// Proves or drops every CANDIDATE register pair of `task.mapping`.
pub fn refine_mapping(task: &Task) -> Result<Mapping, MapError> {
    let ind = induct_pairs(task, task.budget.conflicts);
    let mut m = task.mapping.clone();
    let mut left = Vec::new();
    for r in &mut m.registers {
        if r.tag != PairTag::Candidate {
            continue;
        }
        if let Some((_, _, why)) = ind.dropped.iter().find(|(s, i, _)| *s == r.spec && *i == r.imp) {
            r.tag = PairTag::Dropped;
            r.dropped = Some(why.clone());
        } else if ind.proven.iter().any(|(s, i)| *s == r.spec && *i == r.imp) {
            r.tag = PairTag::Proven;
        } else {
            left.push(format!("{}/{}", r.spec, r.imp));
        }
    }
    if ind.unknown && !left.is_empty() {
        return Err(MapError::BudgetExhausted(left));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{Init, NetlistBuilder};

    fn design(reg: &str) -> Netlist {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let (r, q) = b.register(reg, Init::Zero);
        b.set_next(r, a);
        b.output("y", q);
        b.finish()
    }

    #[test]
    fn identity_mapping() {
        let d = design("r");
        let m = map_by_name(&d, &d, &[]).unwrap();
        assert_eq!(m.inputs, vec![("a".into(), "a".into())]);
        assert_eq!(m.registers.len(), 1);
        assert_eq!(m.registers[0].tag, PairTag::Candidate);
        assert!(m.unmatched_spec.is_empty() && m.unmatched_imp.is_empty());
    }

    #[test]
    fn suffix_rule() {
        let m = map_by_name(&design("r"), &design("r_q"), &[RenameRule::new("$", "_q", RuleScope::Registers).unwrap()])
            .unwrap();
        assert_eq!(m.registers[0].imp, "r_q");
        assert_eq!(rename("w[3]", &[RenameRule::new("$", "_q", RuleScope::All).unwrap()], RuleScope::All), "w_q[3]");
    }

    #[test]
    fn ambiguous_rule() {
        let mut b = NetlistBuilder::new();
        b.input("a1", InputKind::Primary);
        b.input("a2", InputKind::Primary);
        let spec = b.finish();
        let mut b = NetlistBuilder::new();
        b.input("a", InputKind::Primary);
        let imp = b.finish();
        let r = map_by_name(&spec, &imp, &[RenameRule::new("[0-9]", "", RuleScope::All).unwrap()]);
        assert!(matches!(r, Err(MapError::AmbiguousRule { .. })));
    }

    #[test]
    fn constant_registers_collide() {
        let mut b = NetlistBuilder::new();
        for n in ["z0", "z1"] {
            let (r, _) = b.register(n, Init::Zero);
            b.set_next(r, Lit::FALSE);
        }
        let d = b.finish();
        let m = Mapping::default();
        let (s, i) = signatures_for(&d, &d, &m, 64, 4, 1);
        assert!(map_by_signature(&d, &s, &d, &i, &m).unwrap().is_empty());
        let (_, i2) = signatures_for(&d, &d, &m, 64, 5, 1);
        assert_eq!(map_by_signature(&d, &s, &d, &i2, &m), Err(MapError::SignatureMismatchConfig));
    }

    #[test]
    fn renamed_registers_recovered() {
        let spec = design("r");
        let imp = design("other");
        let m = map_by_name(&spec, &imp, &[]).unwrap();
        assert!(m.registers.is_empty());
        let (s, i) = signatures_for(&spec, &imp, &m, 128, 3, 7);
        let pairs = map_by_signature(&spec, &s, &imp, &i, &m).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!((pairs[0].spec.as_str(), pairs[0].imp.as_str()), ("r", "other"));
    }
}
