//! Acceptance suite. Each criterion is one test that prints a single
//! `criterion N: PASS|FAIL ...` line (written past the harness capture so
//! it always shows) and then fails the test if the criterion failed.

use std::collections::HashSet;
use std::io::Write as _;
use std::time::{Duration, Instant};

use seqeq::bench::{explore, incomplete_split, mutate, random_task, variants, Kind, Scenario, Size, DEFAULT_MAX_STATES};
use seqeq::cec::{check_cec, CecError};
use seqeq::config::Mode;
use seqeq::sec::{check_completeness, check_sec, SecError, Status, Task, Verdict};
use seqeq::sim::replay;
use seqeq::tri::Tri;
use seqeq::xcheck::check_x;

type Outcome = Result<String, String>;

fn report(n: u32, title: &str, r: Outcome) {
    let line = match &r {
        Ok(d) => format!("criterion {n:>2}: PASS {title}: {d}\n"),
        Err(d) => format!("criterion {n:>2}: FAIL {title}: {d}\n"),
    };
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    if let Err(d) = r {
        panic!("criterion {n} failed: {d}");
    }
}

fn pick(kind: Kind, seed: u64, size: Size, variant: &str) -> Scenario {
    variants(kind, seed, size).unwrap().into_iter().find(|s| s.variant == variant).unwrap()
}

fn sec(s: &Scenario) -> Result<Verdict, String> {
    let t = s.task().map_err(|e| e.to_string())?;
    check_sec(&t).map_err(|e| e.to_string())
}

/// The trace replays to a mismatch at exactly the claimed cycle.
fn replays(t: &Task, v: &Verdict) -> Result<(), String> {
    let trace = v.trace.as_ref().ok_or("no trace")?;
    let r = replay(&t.spec, &t.imp, &t.mapping, trace).map_err(|e| e.to_string())?;
    match (r.first_mismatch, v.cex_cycle) {
        (Some((c, _)), Some(claimed)) if c == claimed => Ok(()),
        (got, claimed) => Err(format!("replay mismatch {got:?}, claimed {claimed:?}")),
    }
}

#[test]
fn criterion_01_oracle_soundness() {
    let t0 = Instant::now();
    let r = (|| {
        let (mut eq, mut neq) = (0, 0);
        for seed in 0..200u64 {
            let s = random_task(seed).map_err(|e| e.to_string())?;
            let t = s.task().map_err(|e| e.to_string())?;
            if t.spec.inputs.len() > 6 || t.spec.registers.len() > 10 || t.imp.registers.len() > 10 {
                return Err(format!("seed {seed} exceeds task bounds"));
            }
            let v = check_sec(&t).map_err(|e| e.to_string())?;
            if v.status != s.expected {
                return Err(format!("seed {seed}: engine {} oracle {}", v.status, s.expected));
            }
            match v.status {
                Status::Equivalent => eq += 1,
                Status::NotEquivalent => {
                    replays(&t, &v).map_err(|e| format!("seed {seed}: {e}"))?;
                    neq += 1
                }
                _ => {}
            }
        }
        let dt = t0.elapsed();
        if dt > Duration::from_secs(600) {
            return Err(format!("took {dt:?}"));
        }
        Ok(format!("200/200 agree ({eq} EQ, {neq} NEQ) in {:.1}s", dt.as_secs_f64()))
    })();
    report(1, "oracle soundness", r);
}

#[test]
fn criterion_02_retiming() {
    let r = (|| {
        let mut worst = Duration::ZERO;
        for seed in 0..20 {
            let s = pick(Kind::Retime, seed, Size { width: 8, depth: 4 }, "base");
            let t = s.task().map_err(|e| e.to_string())?;
            let t0 = Instant::now();
            let v = check_sec(&t).map_err(|e| e.to_string())?;
            let dt = t0.elapsed();
            worst = worst.max(dt);
            if v.status != Status::Equivalent || dt > Duration::from_secs(10) {
                return Err(format!("seed {seed}: {} in {dt:?}", v.summary()));
            }
            match check_cec(&t) {
                Err(CecError::UnmappedState(_)) => {}
                other => return Err(format!("seed {seed}: CEC gave {:?}", other.map(|r| r.verdict.status))),
            }
        }
        Ok(format!("20/20 EQUIVALENT (slowest {:.2}s), CEC UnmappedState on all", worst.as_secs_f64()))
    })();
    report(2, "retiming", r);
}

#[test]
fn criterion_03_latency() {
    let r = (|| {
        for seed in 0..20 {
            let size = Kind::PipelineDelta.default_size();
            let base = pick(Kind::PipelineDelta, seed, size, "base");
            if sec(&base)?.status != Status::Equivalent {
                return Err(format!("seed {seed}: not EQUIVALENT with latency"));
            }
            let bare = pick(Kind::PipelineDelta, seed, size, "no_latency");
            let t = bare.task().map_err(|e| e.to_string())?;
            let v = check_sec(&t).map_err(|e| e.to_string())?;
            if v.status != Status::NotEquivalent {
                return Err(format!("seed {seed}: {} without latency", v.summary()));
            }
            replays(&t, &v).map_err(|e| format!("seed {seed}: {e}"))?;
        }
        Ok("20/20 EQ with latency, NEQ with replayable trace without".into())
    })();
    report(3, "latency handling", r);
}

#[test]
fn criterion_04_chicken_bit() {
    let r = (|| {
        let size = Kind::ChickenBit.default_size();
        let base = pick(Kind::ChickenBit, 0, size, "base");
        if sec(&base)?.status != Status::Equivalent {
            return Err("not EQUIVALENT under chicken == 0".into());
        }
        let open = pick(Kind::ChickenBit, 0, size, "unconstrained");
        let t = open.task().map_err(|e| e.to_string())?;
        let v = check_sec(&t).map_err(|e| e.to_string())?;
        if v.status != Status::NotEquivalent {
            return Err(format!("unconstrained: {}", v.summary()));
        }
        replays(&t, &v)?;
        let trace = v.trace.as_ref().unwrap();
        let raised = trace.steps.iter().any(|s| s.inputs.iter().any(|(n, b)| n.trim_start_matches("imp/") == "chicken" && *b == Tri::One));
        if !raised {
            return Err("trace never sets chicken=1".into());
        }
        let vac = pick(Kind::ChickenBit, 0, size, "vacuous");
        let vv = sec(&vac)?;
        if vv.status != Status::Vacuous {
            return Err(format!("contradictory constraint gave {}", vv.summary()));
        }
        Ok("EQ constrained, NEQ with chicken=1 in trace, VACUOUS for chicken==0 && chicken==1".into())
    })();
    report(4, "chicken bit", r);
}

#[test]
fn criterion_05_clock_gating() {
    let r = (|| {
        for seed in 0..20 {
            let size = Kind::ClockGate.default_size();
            let base = pick(Kind::ClockGate, seed, size, "base");
            if sec(&base)?.status != Status::Equivalent {
                return Err(format!("seed {seed}: gated pair not EQUIVALENT under qualifier"));
            }
            let broken = pick(Kind::ClockGate, seed, size, "broken_gate");
            let t = broken.task().map_err(|e| e.to_string())?;
            let v = check_sec(&t).map_err(|e| e.to_string())?;
            if v.status != Status::NotEquivalent {
                return Err(format!("seed {seed}: corrupted gate gave {}", v.summary()));
            }
            replays(&t, &v).map_err(|e| format!("seed {seed}: {e}"))?;
        }
        Ok("20/20 EQ under qualifier, corrupted gate NEQ".into())
    })();
    report(5, "clock gating", r);
}

fn xrun(s: &Scenario) -> Result<bool, String> {
    let (mods, top) = s.config.spec.modules(&s.spec).map_err(|e| e.to_string())?;
    let opts = s.config.xcheck_options().map_err(|e| e.to_string())?;
    Ok(check_x(&mods, &top, &opts).map_err(|e| e.to_string())?.clean)
}

#[test]
fn criterion_06_x_checks() {
    let r = (|| {
        let size = Kind::XUninit.default_size();
        let leak = pick(Kind::XUninit, 0, size, "leak");
        if xrun(&leak)? {
            return Err("uninit leak not detected under 0-vs-1".into());
        }
        if !xrun(&pick(Kind::XUninit, 0, size, "masked"))? {
            return Err("masked X reported as a leak".into());
        }
        let x01 = pick(Kind::XUninit, 0, size, "xor_01");
        let xsym = pick(Kind::XUninit, 0, size, "xor_symbolic");
        if xsym.spec != x01.spec {
            return Err("xor variants differ in design".into());
        }
        if !xrun(&x01)? {
            return Err("xor of two uninit registers was caught by 0-vs-1".into());
        }
        if xrun(&xsym)? {
            return Err("xor of two uninit registers missed by symbolic mode".into());
        }
        let opts = xsym.config.xcheck_options().map_err(|e| e.to_string())?;
        let sym = matches!(opts.policy, seqeq::xcheck::PolicyPair::Symbolic);
        Ok(format!("leak caught, masked clean, xor missed by 0-vs-1 and caught by symbolic ({sym})"))
    })();
    report(6, "X checks", r);
}

#[test]
fn criterion_07_mutation_detection() {
    let r = (|| {
        let base = pick(Kind::OpcodeBuckets, 0, Kind::OpcodeBuckets.default_size(), "base");
        let mut seen = HashSet::new();
        let (mut neq, mut tried) = (0, 0);
        let mut seed = 0u64;
        while neq < 100 {
            if seed > 5000 {
                return Err(format!("only {neq} non-equivalent mutants in {tried} tries"));
            }
            let (imp, m) = mutate(&base.imp, seed).map_err(|e| e.to_string())?;
            seed += 1;
            if !seen.insert(imp.clone()) {
                continue;
            }
            tried += 1;
            let t = base.config.task_from_sources(&base.spec, &imp).map_err(|e| format!("{m}: {e}"))?;
            let label = explore(&t, DEFAULT_MAX_STATES).map_err(|e| e.to_string())?;
            if label.status != Status::NotEquivalent {
                continue;
            }
            neq += 1;
            let v = check_sec(&t).map_err(|e| e.to_string())?;
            if v.status != Status::NotEquivalent {
                return Err(format!("missed mutant ({m}): {}", v.summary()));
            }
            replays(&t, &v).map_err(|e| format!("{m}: {e}"))?;
        }
        Ok(format!("100/100 detected with replaying traces ({tried} distinct mutants labeled)"))
    })();
    report(7, "mutation detection", r);
}

/// The corpus for transparency: every generator variant at default size
/// for two seeds, plus random tasks.
fn corpus() -> Vec<Scenario> {
    let mut out = Vec::new();
    for kind in Kind::ALL {
        for seed in 0..2 {
            out.extend(variants(kind, seed, kind.default_size()).unwrap());
        }
    }
    out.extend((0..40).map(|s| random_task(s).unwrap()));
    out.retain(|s| s.config.mode != Mode::Xcheck);
    out
}

fn flips(a: Status, b: Status) -> bool {
    matches!(
        (a, b),
        (Status::Equivalent, Status::NotEquivalent) | (Status::NotEquivalent, Status::Equivalent)
    )
}

#[test]
fn criterion_08_technique_transparency() {
    let r = (|| {
        let mut runs = 0;
        for s in corpus() {
            let t = s.task().map_err(|e| e.to_string())?;
            // Split on a top-level input bit (black-box outputs contain a dot).
            let first_in = t.spec.inputs.iter().find(|i| !i.name.contains('.')).unwrap().name.clone();
            let mut alts: Vec<(&str, Task)> = Vec::new();
            let mut plain = t.clone();
            plain.helpers.clear();
            plain.cases.clear();
            plain.refine = false;
            alts.push(("plain", plain.clone()));
            let mut h = plain.clone();
            h.helpers = s.correspondence.clone();
            alts.push(("helpers", h));
            let mut c = plain.clone();
            c.cases = vec![("lo".into(), format!("{first_in} == 0")), ("hi".into(), format!("{first_in} == 1"))];
            alts.push(("case split", c));
            let mut rf = plain.clone();
            rf.refine = true;
            alts.push(("refinement", rf));
            alts.push(("configured", t));
            let mut seen: Vec<(&str, Status)> = Vec::new();
            for (name, task) in alts {
                let st = check_sec(&task).map_err(|e| format!("{} {} {name}: {e}", s.kind, s.variant))?.status;
                if let Some((other, o)) = seen.iter().find(|(_, o)| flips(*o, st)) {
                    return Err(format!("{} {} seed {}: {other} {o} vs {name} {st}", s.kind, s.variant, s.seed));
                }
                seen.push((name, st));
                runs += 1;
            }
        }
        // Black-boxing the unchanged checker instance.
        for seed in 0..5 {
            let size = Kind::ParamDefault.default_size();
            let a = sec(&pick(Kind::ParamDefault, seed, size, "base"))?.status;
            let b = sec(&pick(Kind::ParamDefault, seed, size, "blackbox"))?.status;
            if flips(a, b) {
                return Err(format!("param_default seed {seed}: {a} vs blackboxed {b}"));
            }
            runs += 2;
        }
        let mut p3 = 0;
        for seed in 0..3 {
            let size = Kind::HelperChain.default_size();
            let with = sec(&pick(Kind::HelperChain, seed, size, "helpers"))?;
            let without = sec(&pick(Kind::HelperChain, seed, size, "no_helpers"))?;
            if without.status == Status::Inconclusive && with.status == Status::Equivalent {
                p3 += 1;
            }
        }
        if p3 == 0 {
            return Err("no task is INCONCLUSIVE without helpers and EQUIVALENT with them".into());
        }
        Ok(format!("no flips over {runs} runs; {p3} helper-chain tasks go INCONCLUSIVE -> EQUIVALENT at k_max=5"))
    })();
    report(8, "technique transparency", r);
}

#[test]
fn criterion_09_case_split_completeness() {
    let r = (|| {
        let size = Kind::OpcodeBuckets.default_size();
        let s = pick(Kind::OpcodeBuckets, 0, size, "base");
        let t = s.task().map_err(|e| e.to_string())?;
        let cases: Vec<(String, String)> = incomplete_split().into_iter().map(|c| (c.name, c.predicate)).collect();
        let witness = match check_completeness(&t, &cases) {
            Err(SecError::IncompleteSplit(w)) if !w.is_empty() => w,
            other => return Err(format!("incomplete split gave {other:?}")),
        };
        let mut split = t.clone();
        split.cases = cases;
        if !matches!(check_sec(&split), Err(SecError::IncompleteSplit(_))) {
            return Err("check with incomplete split did not report IncompleteSplit".into());
        }
        let mut n = 0;
        for seed in 0..5 {
            for variant in ["base", "split"] {
                let s = pick(Kind::OpcodeBuckets, seed, size, variant);
                let t = s.task().map_err(|e| e.to_string())?;
                let mut mono = t.clone();
                mono.cases.clear();
                let mut cased = t;
                cased.cases = vec![("lo".into(), "op < 8".into()), ("hi".into(), "op >= 8".into())];
                let (a, b) = (check_sec(&mono).map_err(|e| e.to_string())?, check_sec(&cased).map_err(|e| e.to_string())?);
                if a.status != b.status || b.cases.len() != 2 {
                    return Err(format!("seed {seed} {variant}: monolithic {} vs split {}", a.status, b.status));
                }
                n += 1;
            }
        }
        let w: Vec<String> = witness.iter().map(|(n, b)| format!("{n}={}", *b as u8)).collect();
        Ok(format!("IncompleteSplit witness [{}]; split == monolithic on {n} scenarios", w.join(" ")))
    })();
    report(9, "case-split completeness", r);
}

#[test]
fn criterion_10_scale() {
    let r = (|| {
        let s = pick(Kind::Retime, 0, Size { width: 8, depth: 32 }, "base");
        let t = s.task().map_err(|e| e.to_string())?;
        let (ns, ni) = (t.spec.registers.len(), t.imp.registers.len());
        if ns.min(ni) < 256 {
            return Err(format!("only {ns}/{ni} registers"));
        }
        let t0 = Instant::now();
        let v = check_sec(&t).map_err(|e| e.to_string())?;
        let dt = t0.elapsed();
        if v.status != Status::Equivalent || dt > Duration::from_secs(300) {
            return Err(format!("{} in {dt:?}", v.summary()));
        }
        let oracle = explore(&t, DEFAULT_MAX_STATES).is_err();
        Ok(format!(
            "{ns} SPEC / {ni} IMP registers EQUIVALENT in {:.2}s (oracle out of range: {oracle})",
            dt.as_secs_f64()
        ))
    })();
    report(10, "scale smoke test", r);
}
