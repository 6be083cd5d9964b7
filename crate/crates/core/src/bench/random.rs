//! Small random SEC tasks: a random 1-bit SPEC machine, an IMP obtained by
//! re-encoding its registers and rewriting its logic, and (half the time)
//! a random mutation of the IMP. Labels come from the oracle.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{DesignConfig, TaskConfig};

use super::oracle::explore;
use super::{mutate, BenchError, Kind, Scenario, Size};

/// Product states the oracle may visit for a random task.
pub const RANDOM_MAX_STATES: usize = 1 << 16;

#[derive(Clone, Debug)]
enum E {
    Var(String),
    Const(bool),
    Not(Box<E>),
    Bin(&'static str, Box<E>, Box<E>),
    Mux(Box<E>, Box<E>, Box<E>),
}

impl fmt::Display for E {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            E::Var(n) => f.write_str(n),
            E::Const(b) => write!(f, "1'b{}", *b as u8),
            E::Not(x) => match **x {
                E::Var(_) => write!(f, "~{x}"),
                _ => write!(f, "~({x})"),
            },
            E::Bin(op, a, b) => write!(f, "({a} {op} {b})"),
            E::Mux(c, t, e) => write!(f, "({c} ? {t} : {e})"),
        }
    }
}

fn not(x: E) -> E {
    E::Not(Box::new(x))
}

fn bin(op: &'static str, a: E, b: E) -> E {
    E::Bin(op, Box::new(a), Box::new(b))
}

/// Leaf: input `i*` or SPEC register `r*`.
fn leaf(rng: &mut ChaCha8Rng, n_in: usize, n_reg: usize) -> E {
    match rng.gen_range(0..10) {
        0 => E::Const(rng.gen()),
        k if k < 5 => E::Var(format!("i{}", rng.gen_range(0..n_in))),
        _ => E::Var(format!("r{}", rng.gen_range(0..n_reg))),
    }
}

fn expr(rng: &mut ChaCha8Rng, depth: u32, n_in: usize, n_reg: usize) -> E {
    if depth == 0 || rng.gen_bool(0.25) {
        return leaf(rng, n_in, n_reg);
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(expr(rng, depth - 1, n_in, n_reg));
    match rng.gen_range(0..5) {
        0 => E::Not(sub(rng)),
        1 => E::Bin("&", sub(rng), sub(rng)),
        2 => E::Bin("|", sub(rng), sub(rng)),
        3 => E::Bin("^", sub(rng), sub(rng)),
        _ => E::Mux(sub(rng), sub(rng), sub(rng)),
    }
}

#[derive(Clone, Copy)]
enum Enc {
    Plain,
    Inverted,
    Duplicate,
}

/// Rewrites a SPEC expression for the IMP: register reads go through the
/// chosen encodings, and gates are re-expressed at random.
fn lower(e: &E, enc: &[Enc], rng: &mut ChaCha8Rng) -> E {
    match e {
        E::Var(n) if n.starts_with('r') => {
            let k: usize = n[1..].parse().unwrap();
            match enc[k] {
                Enc::Plain => E::Var(format!("q{k}")),
                Enc::Inverted => not(E::Var(format!("qn{k}"))),
                Enc::Duplicate => E::Var(format!("{}{k}", if rng.gen() { "qa" } else { "qb" })),
            }
        }
        E::Var(_) | E::Const(_) => e.clone(),
        E::Not(x) => not(lower(x, enc, rng)),
        E::Bin(op, a, b) => {
            let (a, b) = (lower(a, enc, rng), lower(b, enc, rng));
            if !rng.gen_bool(0.5) {
                return bin(op, a, b);
            }
            match *op {
                "&" => not(bin("|", not(a), not(b))),
                "|" => not(bin("&", not(a), not(b))),
                _ => bin("|", bin("&", a.clone(), not(b.clone())), bin("&", not(a), b)),
            }
        }
        E::Mux(c, t, f) => {
            let (c, t, f) = (lower(c, enc, rng), lower(t, enc, rng), lower(f, enc, rng));
            if rng.gen_bool(0.5) {
                bin("|", bin("&", c.clone(), t), bin("&", not(c), f))
            } else {
                E::Mux(Box::new(c), Box::new(t), Box::new(f))
            }
        }
    }
}

fn ports(n_in: usize) -> String {
    let ins: Vec<String> = (0..n_in).map(|i| format!("input i{i}")).collect();
    format!("{}, output y0, output y1", ins.join(", "))
}

/// A random task with 2 to 5 inputs and 1 to 4 SPEC registers; the IMP
/// has at most 8 registers. The expected verdict is the oracle's.
pub fn random_task(seed: u64) -> Result<Scenario, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5241_4e44);
    let n_in = rng.gen_range(2..=5);
    let n_reg = rng.gen_range(1..=4);
    let inits: Vec<bool> = (0..n_reg).map(|_| rng.gen()).collect();
    let next: Vec<E> = (0..n_reg).map(|_| expr(&mut rng, 3, n_in, n_reg)).collect();
    let outs: Vec<E> = (0..2).map(|_| expr(&mut rng, 3, n_in, n_reg)).collect();

    let mut spec = format!("module rnd_spec({});\n", ports(n_in));
    for k in 0..n_reg {
        spec += &format!("  reg r{k} init 1'b{};\n  always r{k} <= {};\n", inits[k] as u8, next[k]);
    }
    spec += &format!("  assign y0 = {};\n  assign y1 = {};\nendmodule\n", outs[0], outs[1]);

    let enc: Vec<Enc> = (0..n_reg)
        .map(|_| match rng.gen_range(0..3) {
            0 => Enc::Plain,
            1 => Enc::Inverted,
            _ => Enc::Duplicate,
        })
        .collect();
    let mut imp = format!("module rnd_imp({});\n", ports(n_in));
    let mut corr = Vec::new();
    for k in 0..n_reg {
        let nx = lower(&next[k], &enc, &mut rng);
        let b = inits[k] as u8;
        match enc[k] {
            Enc::Plain => {
                imp += &format!("  reg q{k} init 1'b{b};\n  always q{k} <= {nx};\n");
                corr.push((format!("r{k}"), format!("q{k}")));
            }
            Enc::Inverted => {
                imp += &format!("  reg qn{k} init 1'b{};\n  always qn{k} <= {};\n", 1 - b, not(nx));
                corr.push((format!("r{k}"), format!("~qn{k}")));
            }
            Enc::Duplicate => {
                let nx2 = lower(&next[k], &enc, &mut rng);
                imp += &format!("  reg qa{k} init 1'b{b};\n  always qa{k} <= {nx};\n");
                imp += &format!("  reg qb{k} init 1'b{b};\n  always qb{k} <= {nx2};\n");
                corr.push((format!("r{k}"), format!("qa{k}")));
                corr.push((format!("r{k}"), format!("qb{k}")));
            }
        }
    }
    for (j, o) in outs.iter().enumerate() {
        imp += &format!("  assign y{j} = {};\n", lower(o, &enc, &mut rng));
    }
    imp += "endmodule\n";

    let mut note = "re-encoded".to_string();
    if rng.gen_bool(0.5) {
        let (m, desc) = mutate(&imp, rng.gen())?;
        imp = m;
        note = format!("mutant: {desc}");
        corr.clear();
    }
    let mut config = TaskConfig {
        spec: DesignConfig { file: "spec.snl".into(), ..Default::default() },
        imp: Some(DesignConfig { file: "imp.snl".into(), ..Default::default() }),
        ..Default::default()
    };
    if rng.gen_bool(0.25) {
        let a = rng.gen_range(0..n_in);
        let b = (a + 1) % n_in;
        config.constraints.push(match rng.gen_range(0..3) {
            0 => format!("i{a} == 0"),
            1 => format!("!(i{a} & i{b})"),
            _ => format!("i{a} | i{b}"),
        });
    }
    let task = config.task_from_sources(&spec, &imp)?;
    let label = explore(&task, RANDOM_MAX_STATES)?;
    Ok(Scenario {
        kind: Kind::Random,
        seed,
        size: Size { width: 1, depth: n_reg as u32 },
        variant: "base".into(),
        spec,
        imp,
        config,
        expected: label.status,
        correspondence: corr,
        x_sources: 0,
        certified: true,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        for seed in 0..20 {
            let a = random_task(seed).unwrap();
            let b = random_task(seed).unwrap();
            assert_eq!((&a.spec, &a.imp, a.expected), (&b.spec, &b.imp, b.expected));
            let t = a.task().unwrap();
            assert!(t.spec.inputs.len() <= 6);
            assert!(t.spec.registers.len() <= 10 && t.imp.registers.len() <= 10);
        }
    }

    #[test]
    fn unmutated_tasks_are_equivalent() {
        for seed in 0..30 {
            let s = random_task(seed).unwrap();
            if !s.note.starts_with("mutant") {
                assert_eq!(s.expected, crate::sec::Status::Equivalent, "seed {seed}\n{}\n{}", s.spec, s.imp);
            }
        }
    }
}
