//! Independent re-execution of a trace on both designs.

use std::collections::{BTreeMap, HashMap};

use crate::frontend::{attach_condition, parse_expr};
use crate::mapping::Mapping;
use crate::netlist::{Lit, Netlist};
use crate::tri::Tri;

use super::{OutValue, SimError, Simulator, Trace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    /// First aligned cycle and SPEC output name where the designs differ.
    pub first_mismatch: Option<(usize, String)>,
    /// Aligned output values per trace cycle; a pair only appears from
    /// cycle `max(l_spec, l_imp)` on.
    pub outs: Vec<Vec<OutValue>>,
}

impl ReplayReport {
    /// `trace` with its `out` lines replaced by the replayed values.
    pub fn annotate(&self, trace: &Trace) -> Trace {
        let mut t = trace.clone();
        for (s, o) in t.steps.iter_mut().zip(&self.outs) {
            s.outs = o.clone();
        }
        t
    }
}

/// Simulates one design over the trace and returns per-cycle node values
/// for the literals in `probe`.
fn run_side(nl: &Netlist, side: &str, tied: &HashMap<&str, &str>, trace: &Trace, probe: &[Lit]) -> Vec<Vec<Tri>> {
    let mut init = BTreeMap::new();
    if let Some(s0) = trace.steps.first() {
        for (n, v) in &s0.regs {
            if let Some(r) = n.strip_prefix(side).and_then(|r| r.strip_prefix('/')) {
                init.insert(r.to_string(), Tri::from_bool(*v));
            }
        }
    }
    let mut sim = Simulator::new(nl, &init);
    let mut rows = Vec::with_capacity(trace.len());
    for step in &trace.steps {
        let vals: HashMap<&str, Tri> = step.inputs.iter().map(|(n, v)| (n.as_str(), *v)).collect();
        let ins: Vec<Tri> = nl
            .inputs
            .iter()
            .map(|i| {
                let own = format!("{side}/{}", i.name);
                vals.get(own.as_str())
                    .or_else(|| tied.get(i.name.as_str()).and_then(|t| vals.get(t)))
                    .copied()
                    .unwrap_or(Tri::X)
            })
            .collect();
        let v = sim.step(&ins);
        rows.push(
            probe
                .iter()
                .map(|l| {
                    let x = v[l.node() as usize];
                    if l.is_inverted() {
                        !x
                    } else {
                        x
                    }
                })
                .collect(),
        );
    }
    rows
}

/// Replays `trace` on both designs and compares mapped outputs after
/// latency alignment: at cycle `t >= L = max(ls, li)` SPEC's value from
/// `t - (L - ls)` is compared with IMP's from `t - (L - li)`. A pair
/// mismatches when the qualifier (if any) is 1 at `t` and the two
/// three-valued values differ.
pub fn replay(spec: &Netlist, imp: &Netlist, mapping: &Mapping, trace: &Trace) -> Result<ReplayReport, SimError> {
    let need = mapping.max_latency() as usize + 1;
    if trace.len() < need {
        return Err(SimError::TraceTooShort { have: trace.len(), need });
    }
    let mut spec_lits = Vec::new();
    let mut imp_lits = Vec::new();
    for o in &mapping.outputs {
        spec_lits.push(spec.lookup(&o.spec).ok_or_else(|| SimError::UnmappedOutput(o.spec.clone()))?);
        imp_lits.push(imp.lookup(&o.imp).ok_or_else(|| SimError::UnmappedOutput(o.imp.clone()))?);
    }

    // Qualifier: compiled against SPEC, falling back to IMP.
    let mut qual_side = None;
    let (mut spec_q, mut imp_q) = (spec.clone(), imp.clone());
    if let Some(q) = &mapping.qualifier {
        let e = parse_expr(q).map_err(|e| SimError::Qualifier(e.to_string()))?;
        match attach_condition(spec, &e) {
            Ok((nl, l)) => {
                spec_q = nl;
                qual_side = Some((true, l));
            }
            Err(first) => {
                let (nl, l) = attach_condition(imp, &e).map_err(|_| SimError::Qualifier(first.to_string()))?;
                imp_q = nl;
                qual_side = Some((false, l));
            }
        }
    }
    let mut sp = spec_lits.clone();
    let mut ip = imp_lits.clone();
    match qual_side {
        Some((true, l)) => sp.push(l),
        Some((false, l)) => ip.push(l),
        None => {}
    }

    let spec_tied: HashMap<&str, &str> = mapping.inputs.iter().map(|(s, _)| (s.as_str(), s.as_str())).collect();
    let imp_tied: HashMap<&str, &str> = mapping.inputs.iter().map(|(s, i)| (i.as_str(), s.as_str())).collect();
    let sv = run_side(&spec_q, "spec", &spec_tied, trace, &sp);
    let iv = run_side(&imp_q, "imp", &imp_tied, trace, &ip);

    let n = mapping.outputs.len();
    let mut first = None;
    let mut outs = vec![Vec::new(); trace.len()];
    for (t, row) in outs.iter_mut().enumerate() {
        let qual = match qual_side {
            Some((true, _)) => sv[t][n],
            Some((false, _)) => iv[t][n],
            None => Tri::One,
        };
        for (k, o) in mapping.outputs.iter().enumerate() {
            let (ls, li) = (o.latency.0 as usize, o.latency.1 as usize);
            let l = ls.max(li);
            if t < l {
                continue;
            }
            let a = sv[t - (l - ls)][k];
            let b = iv[t - (l - li)][k];
            let mismatch = qual == Tri::One && a != b;
            if mismatch && first.is_none() {
                first = Some((t, o.spec.clone()));
            }
            row.push(OutValue { spec: o.spec.clone(), spec_val: a, imp: o.imp.clone(), imp_val: b, mismatch });
        }
    }
    Ok(ReplayReport { first_mismatch: first, outs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::OutputPair;
    use crate::netlist::{Init, InputKind, NetlistBuilder};
    use crate::sim::Step;

    /// y = a, optionally through `delay` registers.
    fn delayed(delay: usize) -> Netlist {
        let mut b = NetlistBuilder::new();
        let mut cur = b.input("a", InputKind::Primary);
        for i in 0..delay {
            let (r, q) = b.register(&format!("d{i}"), Init::Zero);
            b.set_next(r, cur);
            cur = q;
        }
        b.output("y", cur);
        b.finish()
    }

    fn mapping(lat: (u32, u32)) -> Mapping {
        Mapping {
            inputs: vec![("a".into(), "a".into())],
            outputs: vec![OutputPair { spec: "y".into(), imp: "y".into(), latency: lat }],
            ..Default::default()
        }
    }

    fn stim(bits: &[u8]) -> Trace {
        Trace {
            steps: bits
                .iter()
                .map(|&b| Step { inputs: vec![("a".into(), Tri::from_bool(b == 1))], ..Default::default() })
                .collect(),
        }
    }

    #[test]
    fn self_replay_is_clean() {
        let nl = delayed(2);
        let r = replay(&nl, &nl, &mapping((0, 0)), &stim(&[1, 0, 1, 1, 0])).unwrap();
        assert_eq!(r.first_mismatch, None);
    }

    #[test]
    fn latency_alignment() {
        let (s, i) = (delayed(0), delayed(1));
        let t = stim(&[1, 0, 0, 1]);
        assert_eq!(replay(&s, &i, &mapping((0, 1)), &t).unwrap().first_mismatch, None);
        assert_eq!(replay(&s, &i, &mapping((0, 0)), &t).unwrap().first_mismatch, Some((0, "y".into())));
        assert!(matches!(
            replay(&s, &i, &mapping((0, 4)), &t),
            Err(SimError::TraceTooShort { have: 4, need: 5 })
        ));
    }

    #[test]
    fn symbolic_register_choice() {
        let mut b = NetlistBuilder::new();
        let (_, r) = b.register("r", Init::Uninit);
        b.output("y", r);
        let nl = b.finish();
        let m = Mapping {
            outputs: vec![OutputPair { spec: "y".into(), imp: "y".into(), latency: (0, 0) }],
            ..Default::default()
        };
        let t = Trace {
            steps: vec![Step {
                regs: vec![("spec/r".into(), false), ("imp/r".into(), true)],
                ..Default::default()
            }],
        };
        let r = replay(&nl, &nl, &m, &t).unwrap();
        assert_eq!(r.first_mismatch, Some((0, "y".into())));
        assert_eq!(r.annotate(&t).to_text(), "cycles 1\n@0\nreg spec/r 0\nreg imp/r 1\nout y=0 y=1 MISMATCH\n");
    }

    #[test]
    fn unmapped_output() {
        let nl = delayed(0);
        let mut m = mapping((0, 0));
        m.outputs[0].imp = "nope".into();
        assert_eq!(replay(&nl, &nl, &m, &stim(&[0])).unwrap_err(), SimError::UnmappedOutput("nope".into()));
    }
}
