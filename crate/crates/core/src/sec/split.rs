//! Case splitting over input predicates.

use rayon::prelude::*;

use crate::frontend::parse_expr;
use crate::netlist::{Lit, NetlistBuilder};
use crate::sat::unroll::{InitMode, Unroller};
use crate::sat::{new_solver, Lit as SatLit, Outcome};

use super::helpers::pool;
use super::product::{build, compile_sided};
use super::{check_sec, SecError, Status, Task, Verdict};

/// Checks that under the constraints every input valuation satisfies at
/// least one case predicate. On failure returns the valuation of the bits
/// the predicates read.
pub fn check_completeness(task: &Task, cases: &[(String, String)]) -> Result<(), SecError> {
    let m = crate::mapping::Mapping { qualifier: None, ..task.mapping.clone() };
    let pm = build(&task.spec, &task.imp, &m, &[], &task.constraints, &[])?;
    let mut b = NetlistBuilder::from_netlist(pm.nl.clone());
    let mut any = Lit::FALSE;
    let mut read = Vec::new();
    for (_, c) in cases {
        let e = parse_expr(c)?;
        e.idents(&mut read);
        let l = compile_sided(&mut b, &e)?;
        any = b.or(any, l);
    }
    let nl = b.finish();
    let mut u = Unroller::new(&nl, InitMode::Free);
    let mut s = new_solver();
    u.add_frame();
    let g = u.and(u.at(0, pm.constraint), !u.at(0, any));
    let q = u.encode(&mut s, g);
    match s.solve(&[q], Some(task.budget.conflicts)) {
        Outcome::Sat => {
            read.sort();
            read.dedup();
            let model = |l: SatLit| s.model_value(l);
            let mut memo = Default::default();
            let mut witness = Vec::new();
            for name in read {
                for side in ["spec", "imp"] {
                    if let Some(bits) = nl.lookup_word(&format!("{side}/{name}")) {
                        for (k, l) in bits.iter().enumerate() {
                            let n = if bits.len() == 1 { name.clone() } else { format!("{name}[{k}]") };
                            witness.push((n, u.eval(u.at(0, *l), &model, &mut memo)));
                        }
                        break;
                    }
                }
            }
            Err(SecError::IncompleteSplit(witness))
        }
        Outcome::Unsat => Ok(()),
        Outcome::Unknown => Err(SecError::Internal("completeness check ran out of budget".into())),
    }
}

/// Proves the task once per case, after checking that the cases cover
/// every input valuation. A case predicate qualifies the compared cycle
/// rather than constraining the whole run: any mismatch happens in a cycle
/// some case covers, so runs that move between cases stay covered.
pub fn case_split(task: &Task, cases: &[(String, String)]) -> Result<Verdict, SecError> {
    check_completeness(task, cases)?;
    let subs: Vec<Task> = cases
        .iter()
        .map(|(_, pred)| {
            let mut t = task.clone();
            t.cases.clear();
            t.mapping.qualifier = Some(match &task.mapping.qualifier {
                Some(q) => format!("({q}) && ({pred})"),
                None => pred.clone(),
            });
            t
        })
        .collect();
    let results: Vec<Result<Verdict, SecError>> = pool(task.jobs).install(|| subs.par_iter().map(check_sec).collect());
    let mut per_case = Vec::new();
    for ((name, _), r) in cases.iter().zip(results) {
        per_case.push((name.clone(), r?));
    }
    let statuses: Vec<Status> = per_case.iter().map(|(_, v)| v.status).collect();
    let mut v = if let Some((name, bad)) = per_case.iter().find(|(_, v)| v.status == Status::NotEquivalent) {
        let mut v = bad.clone();
        v.cases.clear();
        v.notes.push(format!("falsified in case {name}"));
        v
    } else if statuses.iter().all(|s| *s == Status::Vacuous) {
        Verdict::new(Status::Vacuous)
    } else if statuses.iter().all(|s| matches!(s, Status::Equivalent | Status::Vacuous)) {
        let mut v = Verdict::new(Status::Equivalent);
        v.k = per_case.iter().filter_map(|(_, c)| c.k).max();
        v
    } else {
        Verdict::new(Status::Inconclusive)
    };
    v.cases = per_case;
    Ok(v)
}
