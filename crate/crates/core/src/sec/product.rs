//! Product machine construction.
//!
//! Naming inside the product: tied inputs keep their bare SPEC name, every
//! other SPEC net is `spec/<name>`, every IMP net `imp/<name>`, and the
//! bookkeeping logic lives under `pm/`. These are exactly the names a
//! counterexample trace uses.

use std::collections::HashMap;

use crate::frontend::{ast::Expr, blast::compile_condition, parse_expr, FrontendError};
use crate::mapping::{Mapping, OutputPair};
use crate::netlist::{Init, Lit, Netlist, NetlistBuilder, Node};

use super::{SecError, Task};

#[derive(Clone, Debug)]
pub struct ProductMachine {
    pub nl: Netlist,
    /// OR of all qualified miter bits.
    pub bad: Lit,
    /// Per output pair (SPEC name, qualified miter bit).
    pub miters: Vec<(String, Lit)>,
    /// AND of all constraints.
    pub constraint: Lit,
    /// AND of all helper equalities that are assumed, not merged.
    pub lemma: Lit,
    pub qualifier: Lit,
    /// Some constraint reads register state.
    pub state_constraints: bool,
    /// IMP registers replaced by their SPEC partner: (IMP, SPEC) product names.
    pub merged: Vec<(String, String)>,
}

pub fn build_product(task: &Task, lemmas: &[(String, String)]) -> Result<ProductMachine, SecError> {
    build(&task.spec, &task.imp, &task.mapping, &task.mapping.outputs, &task.constraints, lemmas)
}

pub(crate) fn import(
    b: &mut NetlistBuilder,
    nl: &Netlist,
    side: &str,
    tied: &HashMap<&str, Lit>,
    merge: &HashMap<&str, Lit>,
) -> Vec<Lit> {
    let mut map = vec![Lit::FALSE; nl.nodes.len()];
    let mut regs = Vec::new();
    let tr = |map: &[Lit], l: Lit| map[l.node() as usize].inv_if(l.is_inverted());
    for (id, n) in nl.nodes.iter().enumerate() {
        map[id] = match *n {
            Node::Const => Lit::FALSE,
            Node::Input(i) => {
                let inp = &nl.inputs[i as usize];
                match tied.get(inp.name.as_str()) {
                    Some(&l) => l,
                    None => b.input(&format!("{side}/{}", inp.name), inp.kind),
                }
            }
            Node::Reg(r) => {
                let reg = &nl.registers[r as usize];
                match merge.get(reg.name.as_str()) {
                    Some(&l) => l,
                    None => {
                        let (idx, l) = b.register(&format!("{side}/{}", reg.name), reg.init);
                        regs.push((idx, reg.next));
                        l
                    }
                }
            }
            Node::And(x, y) => {
                let (x, y) = (tr(&map, x), tr(&map, y));
                b.and(x, y)
            }
        };
    }
    for (idx, next) in regs {
        let l = tr(&map, next);
        b.set_next(idx, l);
    }
    for (name, l) in &nl.names {
        b.name(&format!("{side}/{name}"), tr(&map, *l));
    }
    for o in &nl.outputs {
        if !nl.names.contains_key(&o.name) {
            b.name(&format!("{side}/{}", o.name), tr(&map, o.lit));
        }
    }
    map
}

/// Compiles a condition against SPEC names, falling back to IMP names.
pub(crate) fn compile_sided(b: &mut NetlistBuilder, e: &Expr) -> Result<Lit, FrontendError> {
    let snapshot = b.clone();
    let r = compile_in(b, e, "spec");
    match r {
        Ok(l) => Ok(l),
        Err(first) => {
            *b = snapshot;
            compile_in(b, e, "imp").map_err(|_| first)
        }
    }
}

fn compile_in(b: &mut NetlistBuilder, e: &Expr, side: &str) -> Result<Lit, FrontendError> {
    let nl = b.netlist().clone();
    compile_condition(b, e, &mut |n| nl.lookup_word(&format!("{side}/{n}")))
}

fn reads_state(nl: &Netlist, l: Lit) -> bool {
    let mut seen = vec![false; nl.nodes.len()];
    let mut stack = vec![l.node()];
    while let Some(n) = stack.pop() {
        if std::mem::replace(&mut seen[n as usize], true) {
            continue;
        }
        match nl.nodes[n as usize] {
            Node::Reg(_) => return true,
            Node::And(a, c) => {
                stack.push(a.node());
                stack.push(c.node());
            }
            _ => {}
        }
    }
    false
}

pub(crate) fn build(
    spec: &Netlist,
    imp: &Netlist,
    mapping: &Mapping,
    outputs: &[OutputPair],
    constraints: &[String],
    lemmas: &[(String, String)],
) -> Result<ProductMachine, SecError> {
    let mut b = NetlistBuilder::new();
    b.global_hash = true;

    let mut spec_tied = HashMap::new();
    let mut imp_tied = HashMap::new();
    for (s, i) in &mapping.inputs {
        let si = spec.input_index(s).ok_or_else(|| SecError::UnknownNet(format!("spec/{s}")))?;
        imp.input_index(i).ok_or_else(|| SecError::UnknownNet(format!("imp/{i}")))?;
        let l = b.input(s, spec.inputs[si].kind);
        spec_tied.insert(s.as_str(), l);
        imp_tied.insert(i.as_str(), l);
    }

    let smap = import(&mut b, spec, "spec", &spec_tied, &HashMap::new());
    let tr_spec = |l: Lit| smap[l.node() as usize].inv_if(l.is_inverted());

    // Register pairs among the lemmas are merged; other points are assumed.
    let mut merge = HashMap::new();
    let mut merged = Vec::new();
    let mut assumed = Vec::new();
    for (s, i) in lemmas {
        if i.starts_with('~') {
            assumed.push((s, i));
            continue;
        }
        match (spec.register_index(s), imp.register_index(i)) {
            (Some(rs), Some(_)) if !merge.contains_key(i.as_str()) => {
                merge.insert(i.as_str(), tr_spec(Lit::new(spec.registers[rs].node, false)));
                merged.push((format!("imp/{i}"), format!("spec/{s}")));
            }
            _ => assumed.push((s, i)),
        }
    }
    import(&mut b, imp, "imp", &imp_tied, &merge);

    // A leading `~` names the complement of a net; `0` and `1` are
    // constants on the IMP side.
    let find = |b: &NetlistBuilder, side: &str, n: &str| {
        let (n, inv) = super::helpers::split_inversion(n);
        let l = match (side, n) {
            ("imp", "0") => Some(Lit::FALSE),
            ("imp", "1") => Some(Lit::TRUE),
            _ => b.netlist().lookup(&format!("{side}/{n}")),
        };
        l
            .map(|l| l.inv_if(inv))
            .ok_or_else(|| SecError::UnknownNet(format!("{side}/{n}")))
    };

    let mut lemma = Lit::TRUE;
    for (s, i) in assumed {
        let ls = find(&b, "spec", s)?;
        let li = find(&b, "imp", i)?;
        let eq = b.xnor(ls, li);
        lemma = b.and(lemma, eq);
    }

    let mut constraint = Lit::TRUE;
    for c in constraints {
        let e = parse_expr(c)?;
        let l = compile_sided(&mut b, &e)?;
        constraint = b.and(constraint, l);
    }
    let qualifier = match &mapping.qualifier {
        Some(q) => {
            let e = parse_expr(q)?;
            compile_sided(&mut b, &e)?
        }
        None => Lit::TRUE,
    };

    // valid[j] is 1 from cycle j+1 on.
    let lmax = outputs.iter().map(|o| o.latency.0.max(o.latency.1)).max().unwrap_or(0) as usize;
    let mut valid = vec![Lit::TRUE];
    let mut prev = Lit::TRUE;
    for j in 0..lmax {
        let (idx, q) = b.register(&format!("pm/valid[{j}]"), Init::Zero);
        b.set_next(idx, prev);
        prev = q;
        valid.push(q);
    }

    let mut miters = Vec::new();
    let mut bad = Lit::FALSE;
    for (k, o) in outputs.iter().enumerate() {
        let mut a = find(&b, "spec", &o.spec)?;
        let mut c = find(&b, "imp", &o.imp)?;
        let (ls, li) = (o.latency.0 as usize, o.latency.1 as usize);
        let (short, d) = if ls < li { (&mut a, li - ls) } else { (&mut c, ls - li) };
        for j in 0..d {
            let (idx, q) = b.register(&format!("pm/delay{k}[{j}]"), Init::Zero);
            b.set_next(idx, *short);
            *short = q;
        }
        let diff = b.xor(a, c);
        let gate = b.and(valid[ls.max(li)], qualifier);
        let m = b.and(gate, diff);
        b.name(&format!("pm/miter/{}", o.spec), m);
        miters.push((o.spec.clone(), m));
        bad = b.or(bad, m);
    }
    b.name("pm/bad", bad);
    b.name("pm/constraint", constraint);
    b.output("bad", bad);
    b.output("constraint", constraint);
    let nl = b.finish();
    let state_constraints = reads_state(&nl, constraint);
    Ok(ProductMachine { nl, bad, miters, constraint, lemma, qualifier, state_constraints, merged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{PairTag, RegPair};
    use crate::netlist::InputKind;

    /// y = register(a) (or a directly when `reg` is false).
    fn design(reg: bool, invert: bool) -> Netlist {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let y = if reg {
            let (r, q) = b.register("r", Init::Zero);
            b.set_next(r, a);
            q
        } else {
            a
        };
        b.output("y", y.inv_if(invert));
        b.finish()
    }

    fn mapping(lat: (u32, u32)) -> Mapping {
        Mapping {
            inputs: vec![("a".into(), "a".into())],
            outputs: vec![OutputPair { spec: "y".into(), imp: "y".into(), latency: lat }],
            ..Default::default()
        }
    }

    #[test]
    fn identical_combinational_hashes_away() {
        let d = design(false, false);
        let t = Task::new(d.clone(), d, mapping((0, 0)));
        assert_eq!(build_product(&t, &[]).unwrap().bad, Lit::FALSE);
    }

    #[test]
    fn merged_register_pair_hashes_away() {
        let d = design(true, false);
        let mut m = mapping((0, 0));
        m.registers.push(RegPair { spec: "r".into(), imp: "r".into(), tag: PairTag::Proven, dropped: None });
        let t = Task::new(d.clone(), d, m);
        let pm = build_product(&t, &[("r".into(), "r".into())]).unwrap();
        assert_eq!(pm.bad, Lit::FALSE);
        assert_eq!(pm.merged, vec![("imp/r".to_string(), "spec/r".to_string())]);
    }

    #[test]
    fn delay_line_on_spec_side() {
        let t = Task::new(design(false, false), design(true, false), mapping((0, 1)));
        let pm = build_product(&t, &[]).unwrap();
        let names: Vec<&str> = pm.nl.registers.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["imp/r", "pm/valid[0]", "pm/delay0[0]"]);
        // Delayed SPEC and IMP are the same function of `a`.
        assert_ne!(pm.bad, Lit::FALSE);
    }

    #[test]
    fn qualifier_masks_miter() {
        let mut m = mapping((0, 0));
        m.qualifier = Some("a".into());
        let t = Task::new(design(false, false), design(false, true), m);
        let pm = build_product(&t, &[]).unwrap();
        // y xor !y = 1, gated by a.
        assert_eq!(pm.bad, pm.nl.lookup("a").unwrap());
    }

    #[test]
    fn contradictory_constraint_folds() {
        let d = design(false, false);
        let mut t = Task::new(d.clone(), d, mapping((0, 0)));
        t.constraints = vec!["a == 0 && a == 1".into()];
        assert_eq!(build_product(&t, &[]).unwrap().constraint, Lit::FALSE);
    }
}
