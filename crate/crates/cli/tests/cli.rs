use std::fs;
use std::path::Path;

use seqeq::bench::{variants, Kind};
use seqeq_cli::report::Report;
use seqeq_cli::run;

fn seqeq(args: &[&str]) -> i32 {
    run(std::iter::once("seqeq").chain(args.iter().copied()))
}

fn fixture(dir: &Path, kind: Kind, variant: &str) -> String {
    let s = variants(kind, 0, kind.default_size()).unwrap().into_iter().find(|s| s.variant == variant).unwrap();
    let d = dir.join(variant);
    s.write(&d).unwrap();
    d.join("task.cfg").display().to_string()
}

#[test]
fn exit_codes_follow_status() {
    let t = tempfile::tempdir().unwrap();
    let cases = [
        (Kind::ChickenBit, "base", 0),
        (Kind::ChickenBit, "unconstrained", 1),
        (Kind::ChickenBit, "vacuous", 2),
        (Kind::HelperChain, "no_helpers", 2),
        (Kind::HelperChain, "helpers", 0),
    ];
    for (kind, variant, code) in cases {
        let cfg = fixture(&t.path().join(kind.name()), kind, variant);
        assert_eq!(seqeq(&["check", "--config", &cfg]), code, "{kind} {variant}");
    }
}

#[test]
fn xcheck_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let leak = fixture(t.path(), Kind::XUninit, "leak");
    let masked = fixture(t.path(), Kind::XUninit, "masked");
    assert_eq!(seqeq(&["xcheck", "--config", &leak]), 1);
    assert_eq!(seqeq(&["xcheck", "--config", &masked]), 0);
    assert!(t.path().join("leak/x.trace").exists());
}

#[test]
fn counterexample_is_written_and_replays() {
    let t = tempfile::tempdir().unwrap();
    let cfg = fixture(t.path(), Kind::PipelineDelta, "no_latency");
    let rep = t.path().join("r.json");
    let code = seqeq(&["check", "--config", &cfg, "--format", "json", "--report", rep.to_str().unwrap()]);
    assert_eq!(code, 1);
    let trace = t.path().join("no_latency/cex.trace");
    assert!(trace.exists());
    let r = Report::from_json(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert!(!r.trace.is_empty());
    assert_eq!(seqeq(&["replay", "--config", &cfg, "--trace", trace.to_str().unwrap()]), 1);
    // With the latency the same stimulus shows no mismatch.
    let base = fixture(t.path(), Kind::PipelineDelta, "base");
    assert_eq!(seqeq(&["replay", "--config", &base, "--trace", trace.to_str().unwrap()]), 0);
}

#[test]
fn flags_override_config() {
    let t = tempfile::tempdir().unwrap();
    let cfg = fixture(t.path(), Kind::PipelineDelta, "no_latency");
    assert_eq!(seqeq(&["check", "--config", &cfg, "--latency", "0,1"]), 0);
    let cfg = fixture(t.path(), Kind::ChickenBit, "unconstrained");
    assert_eq!(seqeq(&["check", "--config", &cfg, "--constraint", "chicken == 0"]), 0);
}

#[test]
fn errors_exit_3() {
    let t = tempfile::tempdir().unwrap();
    let cfg = fixture(t.path(), Kind::ChickenBit, "base");
    let text = fs::read_to_string(&cfg).unwrap().replace("[engine]\n", "[engine]\nlatencyy = 2\n");
    let bad = t.path().join("bad.cfg");
    fs::write(&bad, text).unwrap();
    assert_eq!(seqeq(&["check", "--config", bad.to_str().unwrap()]), 3);
    assert_eq!(seqeq(&["check", "--config", "/nonexistent/task.cfg"]), 3);
    assert_eq!(seqeq(&["nosuchcommand"]), 3);
    assert_eq!(seqeq(&["--help"]), 0);
    let snl = t.path().join("broken.snl");
    fs::write(&snl, "module m(input a, output y);\n  assign y = a +;\nendmodule\n").unwrap();
    assert_eq!(seqeq(&["parse", snl.to_str().unwrap()]), 3);
}

#[test]
fn bench_writes_fixtures_and_summary() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("b");
    assert_eq!(seqeq(&["bench", "--kind", "clock_gate", "--all-variants", "--run", "--out", out.to_str().unwrap()]), 0);
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("clock_gate_0_base,sec,EQUIVALENT"));
    assert!(csv.contains("clock_gate_0_broken_gate,sec,NOT_EQUIVALENT"));
    let cfg = out.join("clock_gate_0_base/task.cfg");
    assert_eq!(seqeq(&["check", "--config", cfg.to_str().unwrap()]), 0);
    let exp = fs::read_to_string(out.join("clock_gate_0_base/expected.txt")).unwrap();
    assert!(exp.contains("expected EQUIVALENT"));
}

#[test]
fn dump_cnf_writes_one_file_per_depth() {
    let t = tempfile::tempdir().unwrap();
    let cfg = fixture(t.path(), Kind::ChickenBit, "base");
    let d = t.path().join("cnf");
    assert_eq!(seqeq(&["check", "--config", &cfg, "--bmc-depth", "2", "--dump-cnf", d.to_str().unwrap()]), 0);
    for k in 0..=2 {
        assert!(fs::read_to_string(d.join(format!("bmc_{k}.cnf"))).unwrap().starts_with("p cnf "));
    }
}

#[test]
fn parse_and_map_succeed() {
    let t = tempfile::tempdir().unwrap();
    let cfg = fixture(t.path(), Kind::Retime, "base");
    let spec = t.path().join("base/spec.snl");
    assert_eq!(seqeq(&["parse", spec.to_str().unwrap(), "--print"]), 0);
    assert_eq!(seqeq(&["map", "--config", &cfg, "--refine"]), 0);
}
