//! Per-kind SPEC/IMP generators. Every design is emitted as SNL text; the
//! initial values the IMP needs to stay in step with the SPEC are computed
//! here by plain integer arithmetic.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BlackboxConfig, CaseConfig, DesignConfig, Mode, TaskConfig};
use crate::sec::Status;

use super::{random, BenchError, Kind, Scenario, Size, MAX_DEPTH, MAX_REGS, MAX_WIDTH};

/// One pipeline stage function `F(x, c)` on W-bit words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Op {
    Xor,
    And,
    Or,
    Add,
    Sub,
    XnorLike,
    Rot,
}

impl Op {
    const ALL: [Op; 7] = [Op::Xor, Op::And, Op::Or, Op::Add, Op::Sub, Op::XnorLike, Op::Rot];

    /// Ops where every output value is reachable by choosing `c`.
    fn bijective(self) -> bool {
        !matches!(self, Op::And | Op::Or)
    }

    fn pool(w: u32, bijective_only: bool) -> Vec<Op> {
        Op::ALL.into_iter().filter(|o| (w >= 2 || *o != Op::Rot) && (!bijective_only || o.bijective())).collect()
    }

    /// SNL text; `x` must be a plain identifier.
    fn text(self, x: &str, c: &str, w: u32) -> String {
        match self {
            Op::Xor => format!("{x} ^ {c}"),
            Op::And => format!("{x} & {c}"),
            Op::Or => format!("{x} | {c}"),
            Op::Add => format!("{x} + {c}"),
            Op::Sub => format!("{x} - {c}"),
            Op::XnorLike => format!("~{x} ^ {c}"),
            Op::Rot => format!("{{{x}[{}:0], {x}[{}]}} ^ {c}", w - 2, w - 1),
        }
    }

    fn eval(self, x: u64, c: u64, w: u32) -> u64 {
        let m = mask(w);
        let v = match self {
            Op::Xor => x ^ c,
            Op::And => x & c,
            Op::Or => x | c,
            Op::Add => x.wrapping_add(c),
            Op::Sub => x.wrapping_sub(c),
            Op::XnorLike => !x ^ c,
            Op::Rot => ((x << 1) | (x >> (w - 1))) ^ c,
        };
        v & m
    }
}

fn mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1 << w) - 1
    }
}

fn lit(w: u32, v: u64) -> String {
    format!("{w}'d{}", v & mask(w))
}

fn range(w: u32) -> String {
    if w == 1 {
        String::new()
    } else {
        format!("[{}:0] ", w - 1)
    }
}

fn bit0(name: &str, w: u32) -> String {
    if w == 1 {
        name.to_string()
    } else {
        format!("{name}[0]")
    }
}

fn rng_for(kind: Kind, seed: u64) -> ChaCha8Rng {
    // Distinct streams per kind for the same seed.
    ChaCha8Rng::seed_from_u64(seed ^ (kind as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn base_config(with_imp: bool) -> TaskConfig {
    TaskConfig {
        spec: DesignConfig { file: "spec.snl".into(), ..Default::default() },
        imp: with_imp.then(|| DesignConfig { file: "imp.snl".into(), ..Default::default() }),
        ..Default::default()
    }
}

fn scenario(kind: Kind, seed: u64, size: Size, variant: &str, spec: String, imp: String, config: TaskConfig, expected: Status) -> Scenario {
    Scenario {
        kind,
        seed,
        size,
        variant: variant.to_string(),
        spec,
        imp,
        config,
        expected,
        correspondence: Vec::new(),
        x_sources: 0,
        certified: false,
        note: String::new(),
    }
}

/// Largest register count either side can reach for a kind and size.
fn max_regs(kind: Kind, s: Size) -> u32 {
    let (w, d) = (s.width, s.depth);
    match kind {
        Kind::Retime | Kind::ParallelPath => 2 * w * d,
        Kind::PipelineDelta => w * d + 3 * w,
        Kind::ChickenBit | Kind::ParamDefault | Kind::HelperChain => w * d,
        Kind::ClockGate => w * d + d,
        Kind::XUninit => 3 * w + 2,
        Kind::OpcodeBuckets => w,
        Kind::Random => 10,
    }
}

pub fn check_size(kind: Kind, size: Size) -> Result<(), BenchError> {
    if !(1..=MAX_WIDTH).contains(&size.width) {
        return Err(BenchError::SizeOutOfRange(format!("width {} not in 1..={MAX_WIDTH}", size.width)));
    }
    if !(1..=MAX_DEPTH).contains(&size.depth) {
        return Err(BenchError::SizeOutOfRange(format!("depth {} not in 1..={MAX_DEPTH}", size.depth)));
    }
    if kind == Kind::OpcodeBuckets && size.width < 2 {
        return Err(BenchError::SizeOutOfRange("opcode buckets need width >= 2".into()));
    }
    let r = max_regs(kind, size);
    if r > MAX_REGS {
        return Err(BenchError::SizeOutOfRange(format!("up to {r} registers per side, limit {MAX_REGS}")));
    }
    Ok(())
}

/// The canonical scenario of a kind, certified by the oracle when small
/// enough.
pub fn generate(kind: Kind, seed: u64, size: Size) -> Result<Scenario, BenchError> {
    Ok(variants(kind, seed, size)?.swap_remove(0))
}

/// The canonical scenario followed by its contrast cases (missing
/// latency, missing constraint, corrupted gating and so on). Each one is
/// certified when the oracle can handle it.
pub fn variants(kind: Kind, seed: u64, size: Size) -> Result<Vec<Scenario>, BenchError> {
    check_size(kind, size)?;
    let mut out = match kind {
        Kind::Retime => retime(seed, size),
        Kind::ParallelPath => parallel_path(seed, size),
        Kind::PipelineDelta => pipeline_delta(seed, size),
        Kind::ChickenBit => chicken_bit(seed, size),
        Kind::ClockGate => clock_gate(seed, size),
        Kind::ParamDefault => param_default(seed, size),
        Kind::XUninit => x_uninit(seed, size),
        Kind::OpcodeBuckets => opcode_buckets(seed, size),
        Kind::HelperChain => helper_chain(seed, size),
        Kind::Random => vec![random::random_task(seed)?],
    };
    for s in &mut out {
        if s.kind == Kind::Random {
            continue;
        }
        if let Some(r) = s.certify()? {
            if r.status != s.expected {
                return Err(BenchError::Uncertified { kind, seed, want: s.expected, got: r.status });
            }
            s.certified = true;
        }
    }
    Ok(out)
}

/// A random choice of stage ops.
fn pick_ops(rng: &mut ChaCha8Rng, n: u32, w: u32, bijective_only: bool) -> Vec<Op> {
    let pool = Op::pool(w, bijective_only);
    (0..n).map(|_| *pool.choose(rng).unwrap()).collect()
}

fn operand(i: u32) -> &'static str {
    if i.is_multiple_of(2) {
        "b"
    } else {
        "a"
    }
}

fn header(name: &str, w: u32, extra_in: &str, outs: &str) -> String {
    let r = range(w);
    format!("module {name}(input {r}a, input {r}b{extra_in}, output {r}y{outs});\n")
}

/// Straight SPEC chain `s_i <= F_i(prev, operand)` with the given inits.
fn spec_chain(name: &str, w: u32, ops: &[Op], inits: &[u64]) -> String {
    let mut s = header(name, w, "", "");
    let r = range(w);
    for (i, op) in ops.iter().enumerate() {
        let prev = if i == 0 { "a".to_string() } else { format!("s{}", i - 1) };
        let _ = writeln!(s, "  reg {r}s{i} init {};", lit(w, inits[i]));
        let _ = writeln!(s, "  always s{i} <= {};", op.text(&prev, operand(i as u32), w));
    }
    let _ = writeln!(s, "  assign y = s{};\nendmodule", ops.len() - 1);
    s
}

/// Inits that keep a stage-by-stage retimed copy in step: stage i starts
/// at F_i(init_{i-1}, 0), with 0 before the first stage.
fn chained_inits(w: u32, ops: &[Op]) -> Vec<u64> {
    let mut prev = 0;
    ops.iter()
        .map(|op| {
            prev = op.eval(prev, 0, w);
            prev
        })
        .collect()
}

fn retime(seed: u64, size: Size) -> Vec<Scenario> {
    let (w, d) = (size.width, size.depth);
    let mut rng = rng_for(Kind::Retime, seed);
    let ops = pick_ops(&mut rng, d, w, false);
    let inits = chained_inits(w, &ops);
    let mut moved: Vec<bool> = (0..d).map(|_| rng.gen_bool(0.5)).collect();
    if !moved.contains(&true) {
        moved[rng.gen_range(0..d as usize)] = true;
    }
    let spec = spec_chain("retime_spec", w, &ops, &inits);
    let r = range(w);
    let mut imp = header("retime_imp", w, "", "");
    for (i, op) in ops.iter().enumerate() {
        let prev = if i == 0 { "a".to_string() } else { format!("s{}", i - 1) };
        let c = operand(i as u32);
        if moved[i] {
            // The stage function moves to the register outputs.
            let prev_init = if i == 0 { 0 } else { inits[i - 1] };
            let _ = writeln!(imp, "  reg {r}s{i}_x init {};", lit(w, prev_init));
            let _ = writeln!(imp, "  reg {r}s{i}_o init {};", lit(w, 0));
            let _ = writeln!(imp, "  always s{i}_x <= {prev};");
            let _ = writeln!(imp, "  always s{i}_o <= {c};");
            let _ = writeln!(imp, "  wire {r}s{i};");
            let _ = writeln!(imp, "  assign s{i} = {};", op.text(&format!("s{i}_x"), &format!("s{i}_o"), w));
        } else {
            let _ = writeln!(imp, "  reg {r}s{i} init {};", lit(w, inits[i]));
            let _ = writeln!(imp, "  always s{i} <= {};", op.text(&prev, c, w));
        }
    }
    let _ = writeln!(imp, "  assign y = s{};\nendmodule", d - 1);
    let mut s = scenario(Kind::Retime, seed, size, "base", spec, imp, base_config(true), Status::Equivalent);
    s.correspondence = (0..d).map(|i| (format!("s{i}"), format!("s{i}"))).collect();
    let n = moved.iter().filter(|m| **m).count();
    s.note = format!("{n} of {d} stages retimed across their register");
    vec![s]
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PathMode {
    Plain,
    Split,
    Inverted,
    Duplicate,
}

fn parallel_path(seed: u64, size: Size) -> Vec<Scenario> {
    let (w, d) = (size.width, size.depth);
    let mut rng = rng_for(Kind::ParallelPath, seed);
    let ops = pick_ops(&mut rng, d, w, false);
    let inits: Vec<u64> = (0..d).map(|_| rng.gen_range(0..=mask(w))).collect();
    let mut modes: Vec<PathMode> = (0..d)
        .map(|_| match rng.gen_range(0..4) {
            0 => PathMode::Plain,
            1 if w >= 2 => PathMode::Split,
            1 | 2 => PathMode::Inverted,
            _ => PathMode::Duplicate,
        })
        .collect();
    if !modes.contains(&PathMode::Inverted) {
        modes[rng.gen_range(0..d as usize)] = PathMode::Inverted;
    }
    let spec = spec_chain("pp_spec", w, &ops, &inits);
    let r = range(w);
    let mut imp = header("pp_imp", w, "", "");
    let mut corr = Vec::new();
    // Name the next stage reads from.
    let mut prev = "a".to_string();
    for (i, op) in ops.iter().enumerate() {
        let k = inits[i];
        let _ = writeln!(imp, "  wire {r}n{i};");
        let _ = writeln!(imp, "  assign n{i} = {};", op.text(&prev, operand(i as u32), w));
        match modes[i] {
            PathMode::Plain => {
                let _ = writeln!(imp, "  reg {r}s{i} init {};\n  always s{i} <= n{i};", lit(w, k));
                corr.push((format!("s{i}"), format!("s{i}")));
                prev = format!("s{i}");
            }
            PathMode::Split => {
                let h = w / 2;
                let (lo, hi) = (k & mask(h), k >> h);
                let _ = writeln!(imp, "  reg {}s{i}_lo init {};", range(h), lit(h, lo));
                let _ = writeln!(imp, "  reg {}s{i}_hi init {};", range(w - h), lit(w - h, hi));
                let lo_sel = if h == 1 { "0".to_string() } else { format!("{}:0", h - 1) };
                let hi_sel = if w - h == 1 { format!("{h}") } else { format!("{}:{h}", w - 1) };
                let _ = writeln!(imp, "  always s{i}_lo <= n{i}[{lo_sel}];\n  always s{i}_hi <= n{i}[{hi_sel}];");
                let _ = writeln!(imp, "  wire {r}s{i};\n  assign s{i} = {{s{i}_hi, s{i}_lo}};");
                corr.push((format!("s{i}"), format!("s{i}")));
                prev = format!("s{i}");
            }
            PathMode::Inverted => {
                let _ = writeln!(imp, "  reg {r}s{i}_n init {};\n  always s{i}_n <= ~n{i};", lit(w, !k));
                let _ = writeln!(imp, "  wire {r}s{i};\n  assign s{i} = ~s{i}_n;");
                corr.push((format!("s{i}"), format!("~s{i}_n")));
                prev = format!("s{i}");
            }
            PathMode::Duplicate => {
                let _ = writeln!(imp, "  reg {r}s{i}_a init {};\n  always s{i}_a <= n{i};", lit(w, k));
                let _ = writeln!(imp, "  reg {r}s{i}_b init {};\n  always s{i}_b <= n{i};", lit(w, k));
                corr.push((format!("s{i}"), format!("s{i}_a")));
                corr.push((format!("s{i}"), format!("s{i}_b")));
                // Output logic reads one copy, the next stage the other.
                prev = format!("s{i}_b");
                let _ = writeln!(imp, "  wire {r}s{i};\n  assign s{i} = s{i}_a;");
            }
        }
    }
    let _ = writeln!(imp, "  assign y = s{};\nendmodule", d - 1);
    let mut s = scenario(Kind::ParallelPath, seed, size, "base", spec, imp, base_config(true), Status::Equivalent);
    s.correspondence = corr;
    vec![s]
}

fn pipeline_delta(seed: u64, size: Size) -> Vec<Scenario> {
    let (w, d) = (size.width, size.depth);
    let mut rng = rng_for(Kind::PipelineDelta, seed);
    let ops = pick_ops(&mut rng, d, w, true);
    let j = rng.gen_range(0..d) as usize;
    // Stages up to j keep random inits; later ones must follow from e's.
    let mut inits: Vec<u64> = (0..d).map(|_| rng.gen_range(0..=mask(w))).collect();
    for i in j + 1..d as usize {
        inits[i] = ops[i].eval(inits[i - 1], 0, w);
    }
    let spec = spec_chain("pd_spec", w, &ops, &inits);
    let r = range(w);
    let mut imp = header("pd_imp", w, "", "");
    let _ = writeln!(imp, "  reg {r}e init {};", lit(w, inits[j]));
    let _ = writeln!(imp, "  reg {r}a_d init {};\n  reg {r}b_d init {};", lit(w, 0), lit(w, 0));
    let _ = writeln!(imp, "  always a_d <= a;\n  always b_d <= b;");
    for (i, op) in ops.iter().enumerate() {
        let (prev, c) = if i <= j {
            (if i == 0 { "a".to_string() } else { format!("s{}", i - 1) }, operand(i as u32).to_string())
        } else {
            (if i == j + 1 { "e".to_string() } else { format!("s{}", i - 1) }, format!("{}_d", operand(i as u32)))
        };
        let _ = writeln!(imp, "  reg {r}s{i} init {};", lit(w, inits[i]));
        let _ = writeln!(imp, "  always s{i} <= {};", op.text(&prev, &c, w));
    }
    let _ = writeln!(imp, "  always e <= s{j};");
    let y = if j + 1 == d as usize { "e".to_string() } else { format!("s{}", d - 1) };
    let _ = writeln!(imp, "  assign y = {y};\nendmodule");

    let mut cfg = base_config(true);
    cfg.mapping.latency = Some((0, 1));
    let mut base = scenario(Kind::PipelineDelta, seed, size, "base", spec.clone(), imp.clone(), cfg, Status::Equivalent);
    base.note = format!("extra register after stage {j}");
    base.correspondence = (0..=j).map(|i| (format!("s{i}"), format!("s{i}"))).collect();
    let mut bare = scenario(Kind::PipelineDelta, seed, size, "no_latency", spec, imp, base_config(true), Status::NotEquivalent);
    bare.note = "latency (0,1) omitted".into();
    vec![base, bare]
}

fn chicken_bit(seed: u64, size: Size) -> Vec<Scenario> {
    let (w, d) = (size.width, size.depth);
    let mut rng = rng_for(Kind::ChickenBit, seed);
    let r = range(w);
    let pipe_inits: Vec<u64> = (1..d).map(|_| rng.gen_range(0..=mask(w))).collect();
    let acc_init = rng.gen_range(0..=mask(w));
    let feat = ["legacy + 1", "~legacy", "acc - a", "acc ^ a"][rng.gen_range(0..4)];
    let tail = |s: &mut String| {
        for i in 1..d {
            let prev = if i == 1 { "acc".to_string() } else { format!("p{}", i - 1) };
            let _ = writeln!(s, "  reg {r}p{i} init {};\n  always p{i} <= {prev};", lit(w, pipe_inits[i as usize - 1]));
        }
        let y = if d == 1 { "acc".to_string() } else { format!("p{}", d - 1) };
        let _ = writeln!(s, "  assign y = {y};\nendmodule");
    };
    let mut spec = format!("module cb_spec(input {r}a, input en, output {r}y);\n");
    let _ = writeln!(spec, "  reg {r}acc init {};\n  always acc <= en ? acc + a : acc;", lit(w, acc_init));
    tail(&mut spec);
    let mut imp = format!("module cb_imp(input {r}a, input en, input chicken, output {r}y);\n");
    let _ = writeln!(imp, "  reg {r}acc init {};", lit(w, acc_init));
    let _ = writeln!(imp, "  wire {r}legacy;\n  assign legacy = en ? acc + a : acc;");
    let _ = writeln!(imp, "  wire {r}feat;\n  assign feat = {feat};");
    let _ = writeln!(imp, "  always acc <= chicken ? feat : legacy;");
    tail(&mut imp);

    let with = |c: &[&str]| {
        let mut cfg = base_config(true);
        cfg.constraints = c.iter().map(|s| s.to_string()).collect();
        cfg
    };
    let mut base = scenario(Kind::ChickenBit, seed, size, "base", spec.clone(), imp.clone(), with(&["chicken == 0"]), Status::Equivalent);
    base.note = format!("new feature computes {feat}");
    base.correspondence = vec![("acc".into(), "acc".into())];
    let free = scenario(Kind::ChickenBit, seed, size, "unconstrained", spec.clone(), imp.clone(), with(&[]), Status::NotEquivalent);
    let vac = scenario(Kind::ChickenBit, seed, size, "vacuous", spec, imp, with(&["chicken == 0 && chicken == 1"]), Status::Vacuous);
    vec![base, free, vac]
}

fn clock_gate(seed: u64, size: Size) -> Vec<Scenario> {
    let (w, d) = (size.width, size.depth);
    let mut rng = rng_for(Kind::ClockGate, seed);
    let ops = pick_ops(&mut rng, d, w, true);
    let consts: Vec<u64> = (0..d).map(|_| rng.gen_range(0..=mask(w))).collect();
    let inits: Vec<u64> = (0..d).map(|_| rng.gen_range(0..=mask(w))).collect();
    let bad_stage = rng.gen_range(0..d) as usize;
    let bad_kind = rng.gen_range(0..2);
    let r = range(w);
    let gate = |i: usize| if i == 0 { "en".to_string() } else { format!("v{}", i - 1) };

    let build = |name: &str, gated: bool, corrupt: bool| {
        let mut s = format!("module {name}(input {r}a, input en, output {r}y, output vld);\n");
        for i in 0..d as usize {
            let _ = writeln!(s, "  reg v{i} init 0;\n  always v{i} <= {};", gate(i));
        }
        for (i, op) in ops.iter().enumerate() {
            let prev = if i == 0 { "a".to_string() } else { format!("s{}", i - 1) };
            let f = op.text(&prev, &lit(w, consts[i]), w);
            let _ = writeln!(s, "  reg {r}s{i} init {};", lit(w, inits[i]));
            if gated {
                let g = match (corrupt && i == bad_stage, bad_kind) {
                    (false, _) => gate(i),
                    (true, 0) => format!("!{}", gate(i)),
                    (true, _) => format!("{} & {}", gate(i), bit0("a", w)),
                };
                let _ = writeln!(s, "  always s{i} <= {g} ? {f} : s{i};");
            } else {
                let _ = writeln!(s, "  always s{i} <= {f};");
            }
        }
        let _ = writeln!(s, "  assign y = s{};\n  assign vld = v{};\nendmodule", d - 1, d - 1);
        s
    };
    let spec = build("cg_spec", false, false);
    let mut cfg = base_config(true);
    cfg.mapping.qualifier = Some(format!("v{}", d - 1));
    let mut base = scenario(Kind::ClockGate, seed, size, "base", spec.clone(), build("cg_imp", true, false), cfg.clone(), Status::Equivalent);
    base.correspondence = (0..d).map(|i| (format!("v{i}"), format!("v{i}"))).collect();
    let mut broken = scenario(Kind::ClockGate, seed, size, "broken_gate", spec, build("cg_imp", true, true), cfg, Status::NotEquivalent);
    broken.note = format!("gating condition of stage {bad_stage} corrupted");
    vec![base, broken]
}

const CHK: &str = "module chk #(param WIDTH = 8) (input [WIDTH-1:0] d, output p);\n  assign p = ^d;\nendmodule\n";

fn param_default(seed: u64, size: Size) -> Vec<Scenario> {
    let (w, d) = (size.width, size.depth);
    let mut rng = rng_for(Kind::ParamDefault, seed);
    let ops = pick_ops(&mut rng, d, w, false);
    let inits: Vec<u64> = (0..d).map(|_| rng.gen_range(0..=mask(w))).collect();
    let r = range(w);

    let mut spec = CHK.to_string();
    let _ = writeln!(spec, "module pd_spec(input {r}a, input {r}b, output {r}y, output p);");
    for (i, op) in ops.iter().enumerate() {
        let prev = if i == 0 { "a".to_string() } else { format!("s{}", i - 1) };
        let _ = writeln!(spec, "  reg {r}s{i} init {};\n  always s{i} <= {};", lit(w, inits[i]), op.text(&prev, operand(i as u32), w));
    }
    let _ = writeln!(spec, "  assign y = s{};\n  chk #(.WIDTH({w})) u_chk (.d(y), .p(p));\nendmodule", d - 1);

    let mut imp = CHK.to_string();
    imp.push_str("module mix #(param WIDTH = 8, param OP = 0) (input [WIDTH-1:0] x, input [WIDTH-1:0] c, output [WIDTH-1:0] z);\n");
    for (k, op) in Op::ALL.iter().enumerate() {
        let body = match op {
            Op::Rot => "{x[WIDTH-2:0], x[WIDTH-1]} ^ c".to_string(),
            o => o.text("x", "c", 2),
        };
        let _ = writeln!(imp, "  if (OP == {k})\n    assign z = {body};\n  endif");
    }
    imp.push_str("endmodule\n");
    let _ = writeln!(
        imp,
        "module pd_imp #(param WIDTH = {w}, param STAGES = {d}) (input [WIDTH-1:0] a, input [WIDTH-1:0] b, output [WIDTH-1:0] y, output p);"
    );
    for (i, op) in ops.iter().enumerate() {
        let prev = if i == 0 { "a".to_string() } else { format!("s{}", i - 1) };
        let k = Op::ALL.iter().position(|o| o == op).unwrap();
        let ind = if i == 0 { "  " } else { "    " };
        if i > 0 {
            let _ = writeln!(imp, "  if (STAGES > {i})");
        }
        let _ = writeln!(imp, "{ind}wire [WIDTH-1:0] n{i};");
        let _ = writeln!(imp, "{ind}mix #(.WIDTH(WIDTH), .OP({k})) u{i} (.x({prev}), .c({}), .z(n{i}));", operand(i as u32));
        let _ = writeln!(imp, "{ind}reg [WIDTH-1:0] s{i} init {};\n{ind}always s{i} <= n{i};", inits[i]);
        if i > 0 {
            let _ = writeln!(imp, "  endif");
        }
    }
    for i in 0..d {
        let _ = writeln!(imp, "  if (STAGES == {})\n    assign y = s{i};\n  endif", i + 1);
    }
    let _ = writeln!(imp, "  chk #(.WIDTH(WIDTH)) u_chk (.d(y), .p(p));\nendmodule");

    let mut base = scenario(Kind::ParamDefault, seed, size, "base", spec.clone(), imp.clone(), base_config(true), Status::Equivalent);
    base.correspondence = (0..d).map(|i| (format!("s{i}"), format!("s{i}"))).collect();
    base.note = "IMP elaborated at its parameter defaults".into();
    let mut cfg = base_config(true);
    cfg.blackboxes = BlackboxConfig { spec: vec!["u_chk".into()], imp: vec!["u_chk".into()] };
    let bb = scenario(Kind::ParamDefault, seed, size, "blackbox", spec, imp, cfg, Status::Equivalent);
    vec![base, bb]
}

fn x_uninit(seed: u64, size: Size) -> Vec<Scenario> {
    let w = size.width;
    let mut rng = rng_for(Kind::XUninit, seed);
    let r = range(w);
    let k = rng.gen_range(0..=mask(w));
    let design = |name: &str, y: &str, uninit: bool| {
        let mut s = format!("module {name}(input {r}a, input en, output {r}y, output z);\n");
        let ui = if uninit { "uninit".to_string() } else { lit(w, k) };
        let _ = writeln!(s, "  reg {r}u init {ui};\n  always u <= a;");
        let _ = writeln!(s, "  reg {r}d init {};\n  always d <= a;", lit(w, k));
        let _ = writeln!(s, "  assign y = {y};\n  assign z = en;\nendmodule");
        s
    };
    let zero = lit(w, 0);
    let leak = design("xu_leak", &format!("d ^ (en ? u : {zero})"), true);
    let masked = design("xu_masked", &format!("d ^ (u & {zero})"), true);
    let reset = design("xu_reset", &format!("d ^ (en ? u : {zero})"), false);
    let xor = format!(
        "module xu_xor(input {r}a, input en, output {r}y, output z);\n  reg {r}d init {};\n  always d <= a;\n  \
         reg u1 init uninit;\n  reg u2 init uninit;\n  always u1 <= u2 ^ {a0};\n  always u2 <= u1 ^ {a0};\n  \
         assign y = d;\n  assign z = u1 ^ u2;\nendmodule\n",
        lit(w, k),
        a0 = bit0("a", w)
    );
    let cfg = |policy: &str, constraints: &[&str]| {
        let mut c = base_config(false);
        c.mode = Mode::Xcheck;
        c.xcheck.mode = "uninit".into();
        c.xcheck.policy = policy.into();
        c.constraints = constraints.iter().map(|s| s.to_string()).collect();
        c
    };
    let mk = |variant: &str, src: &str, c: TaskConfig, st: Status, n: usize| {
        let mut s = scenario(Kind::XUninit, seed, size, variant, src.to_string(), String::new(), c, st);
        s.x_sources = n;
        s
    };
    vec![
        mk("leak", &leak, cfg("01", &[]), Status::NotEquivalent, 1),
        mk("leak_constrained", &leak, cfg("01", &["en == 0"]), Status::Equivalent, 1),
        mk("masked", &masked, cfg("01", &[]), Status::Equivalent, 1),
        mk("xor_01", &xor, cfg("01", &[]), Status::Equivalent, 2),
        mk("xor_symbolic", &xor, cfg("symbolic", &[]), Status::NotEquivalent, 2),
        mk("reset", &reset, cfg("01", &[]), Status::Equivalent, 0),
    ]
}

/// The sixteen opcode functions of `acc` and `a`, before permutation.
fn opcode_pool(w: u32) -> Vec<String> {
    let z = lit(w, 0);
    vec![
        "acc + a".into(),
        "acc - a".into(),
        "acc ^ a".into(),
        "acc & a".into(),
        "acc | a".into(),
        "~acc".into(),
        "a".into(),
        "acc".into(),
        format!("acc + {}", lit(w, 1)),
        format!("acc - {}", lit(w, 1)),
        "a - acc".into(),
        "~(acc ^ a)".into(),
        "~(acc & a)".into(),
        "~(acc | a)".into(),
        format!("{{acc[{}:0], acc[{}]}}", w - 2, w - 1),
        z,
    ]
}

fn opcode_buckets(seed: u64, size: Size) -> Vec<Scenario> {
    let w = size.width;
    let mut rng = rng_for(Kind::OpcodeBuckets, seed);
    let mut f = opcode_pool(w);
    f.shuffle(&mut rng);
    let init = rng.gen_range(0..=mask(w));
    let r = range(w);
    let head = |name: &str| {
        let mut s = CHK.to_string();
        let _ = writeln!(s, "module {name}(input [3:0] op, input {r}a, output {r}y, output par);");
        let _ = writeln!(s, "  reg {r}acc init {};", lit(w, init));
        s
    };
    let foot = format!("  always acc <= res;\n  assign y = acc;\n  chk #(.WIDTH({w})) u_chk (.d(acc), .p(par));\nendmodule\n");

    let mut spec = head("alu_spec");
    let mut chain = f[15].clone();
    for k in (0..15).rev() {
        chain = format!("op == 4'd{k} ? {} : {chain}", f[k]);
    }
    let _ = writeln!(spec, "  wire {r}res;\n  assign res = {chain};");
    spec.push_str(&foot);

    let mut imp = head("alu_imp");
    for j in 0..8 {
        let _ = writeln!(imp, "  wire {r}m0_{j};\n  assign m0_{j} = op[0] ? {} : {};", f[2 * j + 1], f[2 * j]);
    }
    for j in 0..4 {
        let _ = writeln!(imp, "  wire {r}m1_{j};\n  assign m1_{j} = op[1] ? m0_{} : m0_{};", 2 * j + 1, 2 * j);
    }
    let _ = writeln!(imp, "  wire {r}lo;\n  assign lo = op[2] ? m1_1 : m1_0;");
    let _ = writeln!(imp, "  wire {r}hi;\n  assign hi = op[2] ? m1_3 : m1_2;");
    let _ = writeln!(imp, "  wire {r}res;\n  assign res = op[3] ? hi : lo;");
    imp.push_str(&foot);

    let mut base = scenario(Kind::OpcodeBuckets, seed, size, "base", spec.clone(), imp.clone(), base_config(true), Status::Equivalent);
    base.correspondence = vec![("acc".into(), "acc".into())];
    let mut cfg = base_config(true);
    cfg.cases = vec![
        CaseConfig { name: "lo".into(), predicate: "op < 8".into() },
        CaseConfig { name: "hi".into(), predicate: "op >= 8".into() },
    ];
    let split = scenario(Kind::OpcodeBuckets, seed, size, "split", spec, imp, cfg, Status::Equivalent);
    vec![base, split]
}

/// Case predicates that leave opcodes 4..8 uncovered.
pub fn incomplete_split() -> Vec<CaseConfig> {
    vec![
        CaseConfig { name: "low".into(), predicate: "op < 4".into() },
        CaseConfig { name: "high".into(), predicate: "op >= 8".into() },
    ]
}

fn helper_chain(seed: u64, size: Size) -> Vec<Scenario> {
    let (w, d) = (size.width, size.depth);
    let r = range(w);
    let mut spec = format!("module hc_spec(input {r}a, output {r}y);\n");
    let mut imp = format!("module hc_imp(input {r}a, output {r}y);\n");
    for i in 0..d {
        let (sp, ip) = if i == 0 { ("a".to_string(), "~a".to_string()) } else { (format!("r{}", i - 1), format!("q{}", i - 1)) };
        let _ = writeln!(spec, "  reg {r}r{i} init {};\n  always r{i} <= {sp};", lit(w, 0));
        let _ = writeln!(imp, "  reg {r}q{i} init {};\n  always q{i} <= {ip};", lit(w, mask(w)));
    }
    let _ = writeln!(spec, "  assign y = r{};\nendmodule", d - 1);
    let _ = writeln!(imp, "  assign y = ~q{};\nendmodule", d - 1);
    let pairs: Vec<(String, String)> = (0..d).map(|i| (format!("r{i}"), format!("~q{i}"))).collect();
    let cfg = |helpers: bool| {
        let mut c = base_config(true);
        c.mapping.refine = false;
        c.engine.k_max = 5;
        c.engine.bmc_depth = 2 * d as usize + 2;
        if helpers {
            c.helpers = pairs.clone();
        }
        c
    };
    let mut base = scenario(Kind::HelperChain, seed, size, "helpers", spec.clone(), imp.clone(), cfg(true), Status::Equivalent);
    base.correspondence = pairs.clone();
    let mut bare = scenario(Kind::HelperChain, seed, size, "no_helpers", spec, imp, cfg(false), Status::Equivalent);
    bare.note = format!("equivalent, but not {}-inductive without helpers", 5);
    vec![base, bare]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_eval_matches_known_values() {
        assert_eq!(Op::Rot.eval(0b1001, 0, 4), 0b0011);
        assert_eq!(Op::Sub.eval(1, 2, 4), 15);
        assert_eq!(Op::XnorLike.eval(0b1010, 0b0001, 4), 0b0100);
    }

    #[test]
    fn sizes_are_bounded() {
        assert!(check_size(Kind::Retime, Size { width: 8, depth: 32 }).is_ok());
        assert!(matches!(check_size(Kind::Retime, Size { width: 8, depth: 33 }), Err(BenchError::SizeOutOfRange(_))));
        assert!(matches!(check_size(Kind::Retime, Size { width: 0, depth: 3 }), Err(BenchError::SizeOutOfRange(_))));
        assert!(matches!(check_size(Kind::OpcodeBuckets, Size { width: 1, depth: 1 }), Err(BenchError::SizeOutOfRange(_))));
    }
}
