//! Scenario corpus: labeled SPEC/IMP pairs for each design-change pattern,
//! a mutation injector, random small tasks, and the explicit-state oracle
//! that certifies all of them.

pub mod gen;
pub mod mutate;
pub mod oracle;
pub mod random;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::config::{ConfigError, Mode, TaskConfig};
use crate::frontend::{elaborate, ElabOptions, FrontendError};
use crate::mapper::map_by_name;
use crate::sec::{Status, Task};
use crate::xcheck::{policies, XCheckMode, PolicyPair};

pub use gen::{check_size, generate, incomplete_split, variants};
pub use mutate::{mutate, Mutation, MutationKind};
pub use oracle::{explore, OracleError, OracleResult, DEFAULT_MAX_STATES};
pub use random::random_task;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("size out of range: {0}")]
    SizeOutOfRange(String),
    #[error("no mutation site in source")]
    NoMutationSite,
    #[error("generated {kind} (seed {seed}) is {got} by the oracle, expected {want}")]
    Uncertified { kind: Kind, seed: u64, want: Status, got: Status },
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Retime,
    ParallelPath,
    PipelineDelta,
    ChickenBit,
    ClockGate,
    ParamDefault,
    XUninit,
    OpcodeBuckets,
    /// Inverted-encoding shift chain whose proof needs internal lemmas.
    HelperChain,
    /// Small random machine with a re-encoded or mutated IMP.
    Random,
}

impl Kind {
    /// The generator kinds; [`Kind::Random`] is separate.
    pub const ALL: [Kind; 9] = [
        Kind::Retime,
        Kind::ParallelPath,
        Kind::PipelineDelta,
        Kind::ChickenBit,
        Kind::ClockGate,
        Kind::ParamDefault,
        Kind::XUninit,
        Kind::OpcodeBuckets,
        Kind::HelperChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Retime => "retime",
            Kind::ParallelPath => "parallel_path",
            Kind::PipelineDelta => "pipeline_delta",
            Kind::ChickenBit => "chicken_bit",
            Kind::ClockGate => "clock_gate",
            Kind::ParamDefault => "param_default",
            Kind::XUninit => "x_uninit",
            Kind::OpcodeBuckets => "opcode_buckets",
            Kind::HelperChain => "helper_chain",
            Kind::Random => "random",
        }
    }

    /// Desk-scale default size.
    pub fn default_size(self) -> Size {
        let (width, depth) = match self {
            Kind::Retime => (8, 4),
            Kind::ParallelPath | Kind::PipelineDelta | Kind::ClockGate | Kind::ParamDefault => (4, 3),
            Kind::ChickenBit => (4, 2),
            Kind::XUninit => (2, 1),
            Kind::OpcodeBuckets => (4, 1),
            Kind::HelperChain => (1, 8),
            Kind::Random => (1, 1),
        };
        Size { width, depth }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_ascii_uppercase())
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Kind, String> {
        let l = s.to_ascii_lowercase().replace('-', "_");
        Kind::ALL.into_iter().chain([Kind::Random]).find(|k| k.name() == l).ok_or_else(|| format!("unknown scenario kind {s}"))
    }
}

/// Width of datapath words and pipeline depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Size {
    pub width: u32,
    pub depth: u32,
}

pub const MAX_WIDTH: u32 = 16;
pub const MAX_DEPTH: u32 = 64;
/// Registers per side: desk tier up to 64, stress tier up to 512.
pub const DESK_REGS: u32 = 64;
pub const MAX_REGS: u32 = 512;
/// Input bits per cycle beyond which generation skips certification.
pub const CERTIFY_INPUT_BITS: usize = 14;

/// A generated equivalence task with its expected verdict.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub kind: Kind,
    pub seed: u64,
    pub size: Size,
    /// `base` for the canonical task, otherwise the contrast case.
    pub variant: String,
    pub spec: String,
    /// Empty for X checks, which compare a design with itself.
    pub imp: String,
    pub config: TaskConfig,
    pub expected: Status,
    /// Ground-truth (SPEC register, IMP net) equalities; `~` marks a
    /// complemented IMP net.
    pub correspondence: Vec<(String, String)>,
    /// X sources injected into the design.
    pub x_sources: usize,
    /// Whether the explicit-state oracle confirmed `expected`.
    pub certified: bool,
    pub note: String,
}

impl Scenario {
    /// The SEC task the config describes. For X checks, the two copies of
    /// the design under the configured policy pair.
    pub fn task(&self) -> Result<Task, BenchError> {
        if self.config.mode == Mode::Xcheck {
            let o = self.config.xcheck_options()?;
            return xcheck_task(&self.spec, o.mode, o.policy, &self.config);
        }
        Ok(self.config.task_from_sources(&self.spec, &self.imp)?)
    }

    /// Runs the oracle on the task; `Ok(None)` when it is beyond the
    /// explicit-state tier.
    pub fn certify(&self) -> Result<Option<OracleResult>, BenchError> {
        let t = self.task()?;
        let tied: Vec<&str> = t.mapping.inputs.iter().map(|p| p.1.as_str()).collect();
        let free = t.spec.inputs.len() + t.imp.inputs.iter().filter(|i| !tied.contains(&i.name.as_str())).count();
        if free > CERTIFY_INPUT_BITS {
            return Ok(None);
        }
        match explore(&t, DEFAULT_MAX_STATES) {
            Ok(r) => Ok(Some(r)),
            Err(OracleError::TooManyStates(_) | OracleError::TooManyInputs(_) | OracleError::StateTooWide(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes spec.snl, imp.snl (unless empty), task.cfg and expected.txt.
    pub fn write(&self, dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("spec.snl"), &self.spec)?;
        if !self.imp.is_empty() {
            std::fs::write(dir.join("imp.snl"), &self.imp)?;
        }
        std::fs::write(dir.join("task.cfg"), self.config.to_toml())?;
        let mut exp = format!(
            "kind {}\nvariant {}\nseed {}\nwidth {}\ndepth {}\nexpected {}\ncertified {}\n",
            self.kind, self.variant, self.seed, self.size.width, self.size.depth, self.expected, self.certified
        );
        if self.config.mode == Mode::Xcheck {
            exp.push_str(&format!("x_sources {}\n", self.x_sources));
        }
        for (s, i) in &self.correspondence {
            exp.push_str(&format!("pair {s} {i}\n"));
        }
        if !self.note.is_empty() {
            exp.push_str(&format!("note {}\n", self.note));
        }
        std::fs::write(dir.join("expected.txt"), exp)?;
        Ok(())
    }
}

/// The design elaborated under both policies of an X check, mapped by
/// name.
pub fn xcheck_task(src: &str, mode: XCheckMode, pair: PolicyPair, cfg: &TaskConfig) -> Result<Task, BenchError> {
    let (mods, top) = cfg.spec.modules(src)?;
    let (pa, pb) = policies(mode, pair);
    let el = |p| {
        elaborate(&mods, &top, &ElabOptions { params: cfg.spec.params.clone(), xpolicy: p, allow_undriven: cfg.spec.allow_undriven })
    };
    let (a, b) = (el(pa)?, el(pb)?);
    let m = map_by_name(&a, &b, &[]).map_err(ConfigError::from)?;
    let mut t = Task::new(a, b, m);
    t.constraints = cfg.constraints.clone();
    t.budget = cfg.engine.budget();
    t.refine = true;
    Ok(t)
}
