//! SPEC/IMP correspondence: paired inputs, outputs with latencies, and
//! tagged register pairs. All names are bit-level netlist names.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairTag {
    /// Taken on trust from the user; never checked.
    Assumed,
    Candidate,
    Proven,
    Dropped,
}

impl fmt::Display for PairTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairTag::Assumed => "ASSUMED",
            PairTag::Candidate => "CANDIDATE",
            PairTag::Proven => "PROVEN",
            PairTag::Dropped => "DROPPED",
        })
    }
}

/// Why a pair was dropped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    /// A concrete run from reset makes the pair differ at this cycle.
    Trace { cycle: usize },
    /// Only the inductive step failed; no differing run was constructed.
    Induction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegPair {
    pub spec: String,
    pub imp: String,
    pub tag: PairTag,
    pub dropped: Option<DropReason>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPair {
    pub spec: String,
    pub imp: String,
    /// (SPEC latency, IMP latency) in cycles.
    pub latency: (u32, u32),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<OutputPair>,
    pub registers: Vec<RegPair>,
    /// SNL expression gating output comparison.
    pub qualifier: Option<String>,
    pub unmatched_spec: Vec<String>,
    pub unmatched_imp: Vec<String>,
}

impl Mapping {
    /// Largest latency over all output pairs.
    pub fn max_latency(&self) -> u32 {
        self.outputs.iter().map(|o| o.latency.0.max(o.latency.1)).max().unwrap_or(0)
    }

    pub fn set_latency(&mut self, lat: (u32, u32)) {
        for o in &mut self.outputs {
            o.latency = lat;
        }
    }

    /// Same mapping with SPEC and IMP exchanged.
    pub fn swapped(&self) -> Mapping {
        Mapping {
            inputs: self.inputs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
            outputs: self
                .outputs
                .iter()
                .map(|o| OutputPair { spec: o.imp.clone(), imp: o.spec.clone(), latency: (o.latency.1, o.latency.0) })
                .collect(),
            registers: self
                .registers
                .iter()
                .map(|r| RegPair { spec: r.imp.clone(), imp: r.spec.clone(), ..r.clone() })
                .collect(),
            qualifier: self.qualifier.clone(),
            unmatched_spec: self.unmatched_imp.clone(),
            unmatched_imp: self.unmatched_spec.clone(),
        }
    }

    pub fn pairs_with(&self, tag: PairTag) -> impl Iterator<Item = &RegPair> {
        self.registers.iter().filter(move |r| r.tag == tag)
    }
}
