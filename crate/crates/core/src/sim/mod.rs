//! Cycle-based three-valued simulation.
//!
//! [`Simulator`] is the scalar Kleene evaluator used as a reference
//! everywhere; [`packed`] runs 64 random stimuli per machine word for
//! signature generation.

pub mod packed;
mod replay;
pub mod trace;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::netlist::{Init, InputKind, Lit, Netlist, Node};
use crate::tri::Tri;

pub use packed::{random_signatures, random_signatures_keyed, Signature, Signatures};
pub use replay::{replay, ReplayReport};
pub use trace::{OutValue, Step, Trace, TraceError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("no value for input {name} at cycle {cycle}")]
    MissingInput { name: String, cycle: usize },
    #[error("trace has {have} cycles, at least {need} needed")]
    TraceTooShort { have: usize, need: usize },
    #[error("output {0} is not in both designs")]
    UnmappedOutput(String),
    #[error("qualifier: {0}")]
    Qualifier(String),
}

/// Values of every node at every simulated cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Waveform {
    pub cycles: usize,
    values: Vec<Vec<Tri>>,
}

impl Waveform {
    pub fn value(&self, cycle: usize, l: Lit) -> Tri {
        let v = self.values[cycle][l.node() as usize];
        if l.is_inverted() {
            !v
        } else {
            v
        }
    }

    /// Value of a named net (or output) at `cycle`.
    pub fn net(&self, nl: &Netlist, cycle: usize, name: &str) -> Option<Tri> {
        nl.lookup(name).map(|l| self.value(cycle, l))
    }

    pub fn outputs(&self, nl: &Netlist, cycle: usize) -> Vec<Tri> {
        nl.outputs.iter().map(|o| self.value(cycle, o.lit)).collect()
    }
}

/// Incremental scalar simulator.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    nl: &'a Netlist,
    state: Vec<Tri>,
    vals: Vec<Tri>,
}

impl<'a> Simulator<'a> {
    /// Registers start at their init value (X for UNINIT) unless `init`
    /// (keyed by register name) overrides it.
    pub fn new(nl: &'a Netlist, init: &BTreeMap<String, Tri>) -> Self {
        let state = nl
            .registers
            .iter()
            .map(|r| match (init.get(&r.name), r.init) {
                (Some(v), _) => *v,
                (None, Init::Zero) => Tri::Zero,
                (None, Init::One) => Tri::One,
                (None, Init::Uninit) => Tri::X,
            })
            .collect();
        Simulator { nl, state, vals: vec![Tri::Zero; nl.nodes.len()] }
    }

    pub fn state(&self) -> &[Tri] {
        &self.state
    }

    pub fn set_state(&mut self, s: &[Tri]) {
        self.state.copy_from_slice(s);
    }

    /// Evaluates the current cycle for the given input values (indexed like
    /// `Netlist::inputs`) and advances the registers. Returns node values
    /// of the evaluated cycle.
    pub fn step(&mut self, inputs: &[Tri]) -> &[Tri] {
        self.eval(inputs);
        for (i, r) in self.nl.registers.iter().enumerate() {
            self.state[i] = lit_val(&self.vals, r.next);
        }
        &self.vals
    }

    /// Evaluates the combinational logic without clocking.
    pub fn eval(&mut self, inputs: &[Tri]) -> &[Tri] {
        for (id, n) in self.nl.nodes.iter().enumerate() {
            self.vals[id] = match *n {
                Node::Const => Tri::Zero,
                Node::Input(i) => inputs[i as usize],
                Node::Reg(r) => self.state[r as usize],
                Node::And(a, b) => lit_val(&self.vals, a).and(lit_val(&self.vals, b)),
            };
        }
        &self.vals
    }
}

fn lit_val(vals: &[Tri], l: Lit) -> Tri {
    let v = vals[l.node() as usize];
    if l.is_inverted() {
        !v
    } else {
        v
    }
}

/// Simulates `stimulus.len()` cycles. Primary and black-box inputs must be
/// given every cycle; X-source inputs default to X.
pub fn simulate(nl: &Netlist, stimulus: &[BTreeMap<String, Tri>]) -> Result<Waveform, SimError> {
    simulate_from(nl, &BTreeMap::new(), stimulus)
}

/// [`simulate`] with overridden initial register values.
pub fn simulate_from(
    nl: &Netlist,
    init: &BTreeMap<String, Tri>,
    stimulus: &[BTreeMap<String, Tri>],
) -> Result<Waveform, SimError> {
    let mut sim = Simulator::new(nl, init);
    let mut values = Vec::with_capacity(stimulus.len());
    for (cycle, stim) in stimulus.iter().enumerate() {
        let mut ins = Vec::with_capacity(nl.inputs.len());
        for i in &nl.inputs {
            match (stim.get(&i.name), i.kind) {
                (Some(v), _) => ins.push(*v),
                (None, InputKind::XSource) => ins.push(Tri::X),
                (None, _) => return Err(SimError::MissingInput { name: i.name.clone(), cycle }),
            }
        }
        values.push(sim.step(&ins).to_vec());
    }
    Ok(Waveform { cycles: stimulus.len(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::NetlistBuilder;

    #[test]
    fn annihilation_and_uninit() {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let (_, r) = b.register("r", Init::Uninit);
        let y = b.and(a, Lit::FALSE);
        b.output("y", y);
        b.output("z", r);
        let nl = b.finish();
        let stim = vec![BTreeMap::from([("a".to_string(), Tri::X)]); 3];
        let w = simulate(&nl, &stim).unwrap();
        assert_eq!(w.net(&nl, 0, "y"), Some(Tri::Zero));
        assert_eq!(w.net(&nl, 0, "z"), Some(Tri::X));
    }

    #[test]
    fn missing_input() {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        b.output("y", a);
        let nl = b.finish();
        assert_eq!(
            simulate(&nl, &[BTreeMap::new()]).unwrap_err(),
            SimError::MissingInput { name: "a".into(), cycle: 0 }
        );
    }
}
