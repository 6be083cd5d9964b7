//! Task configuration files (TOML). Unknown keys are rejected.
//!
//! ```toml
//! mode = "sec"                      # cec | sec | xcheck
//! constraints = ["chicken == 0"]
//! helpers = [["acc", "acc_q"]]
//!
//! [spec]
//! file = "spec.snl"
//! top = "top"
//! params = { W = 8 }
//! xpolicy = "x_to_zero"             # x_to_zero | x_to_one | x_symbolic
//!
//! [imp]
//! file = "imp.snl"
//! top = "top"
//!
//! [mapping]
//! latency = [0, 1]
//! qualifier = "en"
//!
//! [engine]
//! k_max = 20
//!
//! [[cases]]
//! name = "low"
//! predicate = "op < 8"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{self, ElabOptions, FrontendError, XMode, XPolicy};
use crate::mapper::{map_by_name, map_by_signature, signatures_for, MapError, RenameRule, RuleScope};
use crate::mapping::{Mapping, OutputPair, PairTag, RegPair};
use crate::netlist::{split_bit_name, Netlist, NetlistError};
use crate::sec::{Budget, Task};
use crate::xcheck::{PolicyPair, XCheckMode, XCheckOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("config: {0}")]
    Parse(String),
    #[error("referenced file {0} does not exist")]
    MissingFile(String),
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cec,
    #[default]
    Sec,
    Xcheck,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, u64>,
    /// Applies to both X classes unless overridden below.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xpolicy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xpolicy_regs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xpolicy_logic: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_undriven: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_true(b: &bool) -> bool {
    *b
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenameConfig {
    pub pattern: String,
    pub replacement: String,
    #[serde(default = "scope_all")]
    pub scope: String,
}

fn scope_all() -> String {
    "all".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    /// Pair equally named (after renaming) inputs, outputs and registers.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub by_name: bool,
    /// Pair leftover registers by simulation signature.
    #[serde(default, skip_serializing_if = "is_false")]
    pub signatures: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rename: Vec<RenameConfig>,
    /// Explicit (SPEC, IMP) pairs; word names expand to their bits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub registers: Vec<(String, String)>,
    /// Register pairs taken on trust.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assume: Vec<(String, String)>,
    /// (SPEC, IMP) latency for every output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<(u32, u32)>,
    /// Per-output latency keyed by SPEC output name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub output_latency: BTreeMap<String, (u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
    /// Prove or drop candidate register pairs before the main proof.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub refine: bool,
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            by_name: true,
            signatures: false,
            rename: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            registers: Vec::new(),
            assume: Vec::new(),
            latency: None,
            output_latency: BTreeMap::new(),
            qualifier: None,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackboxConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spec: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub imp: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: String,
    pub predicate: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default = "d_bmc")]
    pub bmc_depth: usize,
    #[serde(default = "d_kmax")]
    pub k_max: usize,
    #[serde(default = "d_conflicts")]
    pub conflicts: u64,
    #[serde(default = "d_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn d_bmc() -> usize {
    Budget::default().bmc_depth
}
fn d_kmax() -> usize {
    Budget::default().k_max
}
fn d_conflicts() -> u64 {
    Budget::default().conflicts
}
fn d_jobs() -> usize {
    1
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { bmc_depth: d_bmc(), k_max: d_kmax(), conflicts: d_conflicts(), jobs: d_jobs(), seed: 0 }
    }
}

impl EngineConfig {
    pub fn budget(&self) -> Budget {
        Budget { bmc_depth: self.bmc_depth, k_max: self.k_max, conflicts: self.conflicts }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Where a counterexample trace is written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    /// Where the report is written; stdout only when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: ReportFormat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XCheckConfig {
    #[serde(default = "d_xmode")]
    pub mode: String,
    #[serde(default = "d_xpair")]
    pub policy: String,
}

fn d_xmode() -> String {
    "uninit".into()
}
fn d_xpair() -> String {
    "01".into()
}

impl Default for XCheckConfig {
    fn default() -> Self {
        XCheckConfig { mode: d_xmode(), policy: d_xpair() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub helpers: Vec<(String, String)>,
    pub spec: DesignConfig,
    /// Absent only in xcheck mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imp: Option<DesignConfig>,
    #[serde(default)]
    pub mapping: MappingConfig,
    #[serde(default)]
    pub blackboxes: BlackboxConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub xcheck: XCheckConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseConfig>,
}

fn mode_of(s: &str) -> Result<XMode, ConfigError> {
    s.parse().map_err(ConfigError::Invalid)
}

impl DesignConfig {
    pub fn xpolicy(&self) -> Result<XPolicy, ConfigError> {
        let base = match &self.xpolicy {
            Some(s) => mode_of(s)?,
            None => XMode::Zero,
        };
        Ok(XPolicy {
            regs: self.xpolicy_regs.as_deref().map(mode_of).transpose()?.unwrap_or(base),
            logic: self.xpolicy_logic.as_deref().map(mode_of).transpose()?.unwrap_or(base),
        })
    }

    fn path(&self, dir: &Path) -> PathBuf {
        dir.join(&self.file)
    }

    pub fn read(&self, dir: &Path) -> Result<String, ConfigError> {
        let path = self.path(dir);
        std::fs::read_to_string(&path).map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })
    }

    /// Parses source text; the top module defaults to the last one.
    pub fn modules(&self, text: &str) -> Result<(Vec<frontend::ast::Module>, String), ConfigError> {
        let mods = frontend::parse(text)?;
        let top = match &self.top {
            Some(t) => t.clone(),
            None => mods.last().map(|m| m.name.clone()).ok_or_else(|| ConfigError::Invalid("empty design".into()))?,
        };
        Ok((mods, top))
    }

    pub fn elaborate(&self, text: &str) -> Result<Netlist, ConfigError> {
        let (mods, top) = self.modules(text)?;
        let opts = ElabOptions { params: self.params.clone(), xpolicy: self.xpolicy()?, allow_undriven: self.allow_undriven };
        Ok(frontend::elaborate(&mods, &top, &opts)?)
    }
}

/// Bit names for `name`: itself if listed, else all bits of that word.
fn expand(name: &str, all: &[&str]) -> Vec<String> {
    if all.contains(&name) {
        return vec![name.to_string()];
    }
    all.iter().filter(|n| matches!(split_bit_name(n), (base, Some(_)) if base == name)).map(|n| n.to_string()).collect()
}

fn expand_pair(
    spec: &Netlist,
    imp: &Netlist,
    (s, i): &(String, String),
    pick: fn(&Netlist) -> Vec<&str>,
) -> Result<Vec<(String, String)>, ConfigError> {
    let a = expand(s, &pick(spec));
    let b = expand(i, &pick(imp));
    if a.is_empty() || a.len() != b.len() {
        return Err(ConfigError::Invalid(format!("cannot pair {s} with {i}")));
    }
    Ok(a.into_iter().zip(b).collect())
}

fn input_names(nl: &Netlist) -> Vec<&str> {
    nl.inputs.iter().map(|i| i.name.as_str()).collect()
}
fn output_names(nl: &Netlist) -> Vec<&str> {
    nl.outputs.iter().map(|o| o.name.as_str()).collect()
}
fn register_names(nl: &Netlist) -> Vec<&str> {
    nl.registers.iter().map(|r| r.name.as_str()).collect()
}

impl MappingConfig {
    pub fn rules(&self) -> Result<Vec<RenameRule>, ConfigError> {
        self.rename
            .iter()
            .map(|r| {
                let scope = match r.scope.as_str() {
                    "all" => RuleScope::All,
                    "inputs" => RuleScope::Inputs,
                    "outputs" => RuleScope::Outputs,
                    "registers" => RuleScope::Registers,
                    s => return Err(ConfigError::Invalid(format!("unknown rename scope {s}"))),
                };
                Ok(RenameRule::new(&r.pattern, &r.replacement, scope)?)
            })
            .collect()
    }

    /// Builds the mapping for a concrete pair of netlists.
    pub fn build(&self, spec: &Netlist, imp: &Netlist, seed: u64) -> Result<Mapping, ConfigError> {
        let mut m = if self.by_name { map_by_name(spec, imp, &self.rules()?)? } else { Mapping::default() };
        for p in &self.inputs {
            for (s, i) in expand_pair(spec, imp, p, input_names)? {
                m.inputs.retain(|(a, b)| *a != s && *b != i);
                m.inputs.push((s, i));
            }
        }
        for p in &self.outputs {
            for (s, i) in expand_pair(spec, imp, p, output_names)? {
                m.outputs.retain(|o| o.spec != s && o.imp != i);
                m.outputs.push(OutputPair { spec: s, imp: i, latency: (0, 0) });
            }
        }
        for (list, tag) in [(&self.registers, PairTag::Candidate), (&self.assume, PairTag::Assumed)] {
            for p in list {
                for (s, i) in expand_pair(spec, imp, p, register_names)? {
                    m.registers.retain(|r| r.spec != s && r.imp != i);
                    m.registers.push(RegPair { spec: s, imp: i, tag, dropped: None });
                }
            }
        }
        if self.signatures {
            let (ss, si) = signatures_for(spec, imp, &m, 256, 16, seed);
            let extra = map_by_signature(spec, &ss, imp, &si, &m)?;
            m.registers.extend(extra);
        }
        let paired_s: Vec<String> = m.inputs.iter().map(|p| p.0.clone()).chain(m.outputs.iter().map(|o| o.spec.clone())).chain(m.registers.iter().map(|r| r.spec.clone())).collect();
        let paired_i: Vec<String> = m.inputs.iter().map(|p| p.1.clone()).chain(m.outputs.iter().map(|o| o.imp.clone())).chain(m.registers.iter().map(|r| r.imp.clone())).collect();
        m.unmatched_spec.retain(|n| !paired_s.contains(n));
        m.unmatched_imp.retain(|n| !paired_i.contains(n));
        if let Some(l) = self.latency {
            m.set_latency(l);
        }
        for (name, &l) in &self.output_latency {
            let mut hit = false;
            for o in &mut m.outputs {
                if o.spec == *name || split_bit_name(&o.spec).0 == name {
                    o.latency = l;
                    hit = true;
                }
            }
            if !hit {
                return Err(ConfigError::Invalid(format!("output_latency names unknown output {name}")));
            }
        }
        m.qualifier = self.qualifier.clone();
        Ok(m)
    }
}

impl TaskConfig {
    pub fn parse(text: &str) -> Result<TaskConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a config file and checks that the files it names exist.
    pub fn load(path: &Path) -> Result<(TaskConfig, PathBuf), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let cfg = TaskConfig::parse(&text)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check_files(&dir)?;
        Ok((cfg, dir))
    }

    pub fn check_files(&self, dir: &Path) -> Result<(), ConfigError> {
        for d in std::iter::once(&self.spec).chain(self.imp.as_ref()) {
            let p = d.path(dir);
            if !p.is_file() {
                return Err(ConfigError::MissingFile(p.display().to_string()));
            }
        }
        Ok(())
    }

    /// Reads both design files and builds the task.
    pub fn task(&self, dir: &Path) -> Result<Task, ConfigError> {
        let imp_cfg = self.imp.as_ref().ok_or_else(|| ConfigError::Invalid("missing [imp] section".into()))?;
        self.task_from_sources(&self.spec.read(dir)?, &imp_cfg.read(dir)?)
    }

    /// Elaborates both designs, applies black boxes and builds the task.
    pub fn task_from_sources(&self, spec_src: &str, imp_src: &str) -> Result<Task, ConfigError> {
        let imp_cfg = self.imp.as_ref().ok_or_else(|| ConfigError::Invalid("missing [imp] section".into()))?;
        let mut spec = self.spec.elaborate(spec_src)?;
        let mut imp = imp_cfg.elaborate(imp_src)?;
        if !self.blackboxes.spec.is_empty() {
            let p: Vec<&str> = self.blackboxes.spec.iter().map(String::as_str).collect();
            spec = spec.black_box(&p)?;
        }
        if !self.blackboxes.imp.is_empty() {
            let p: Vec<&str> = self.blackboxes.imp.iter().map(String::as_str).collect();
            imp = imp.black_box(&p)?;
        }
        let mapping = self.mapping.build(&spec, &imp, self.engine.seed)?;
        let mut t = Task::new(spec, imp, mapping);
        t.constraints = self.constraints.clone();
        t.helpers = self.helpers.clone();
        t.cases = self.cases.iter().map(|c| (c.name.clone(), c.predicate.clone())).collect();
        t.budget = self.engine.budget();
        t.refine = self.mapping.refine;
        t.jobs = self.engine.jobs.max(1);
        Ok(t)
    }

    pub fn xcheck_options(&self) -> Result<XCheckOptions, ConfigError> {
        let mode: XCheckMode = self.xcheck.mode.parse().map_err(ConfigError::Invalid)?;
        let policy: PolicyPair = self.xcheck.policy.parse().map_err(ConfigError::Invalid)?;
        Ok(XCheckOptions {
            mode,
            policy,
            params: self.spec.params.clone(),
            constraints: self.constraints.clone(),
            allow_undriven: self.spec.allow_undriven,
            budget: self.engine.budget(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
mode = "sec"
constraints = ["chicken == 0"]

[spec]
file = "spec.snl"

[imp]
file = "imp.snl"

[mapping]
latency = [0, 1]
"#;

    #[test]
    fn parses_and_defaults() {
        let c = TaskConfig::parse(BASIC).unwrap();
        assert_eq!(c.mode, Mode::Sec);
        assert_eq!(c.mapping.latency, Some((0, 1)));
        assert!(c.mapping.refine && c.mapping.by_name);
        assert_eq!(c.engine.budget(), Budget::default());
        assert_eq!(c.spec.xpolicy().unwrap(), XPolicy::uniform(XMode::Zero));
    }

    #[test]
    fn unknown_key_named() {
        let e = TaskConfig::parse(&BASIC.replace("latency =", "latencyy =")).unwrap_err();
        assert!(e.to_string().contains("latencyy"), "{e}");
    }

    #[test]
    fn toml_round_trip() {
        let mut c = TaskConfig::parse(BASIC).unwrap();
        c.cases.push(CaseConfig { name: "lo".into(), predicate: "op < 8".into() });
        c.helpers.push(("a".into(), "b".into()));
        c.mapping.output_latency.insert("y".into(), (1, 2));
        let back = TaskConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn missing_file_reported() {
        let c = TaskConfig::parse(BASIC).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(c.check_files(dir.path()), Err(ConfigError::MissingFile(_))));
    }

    #[test]
    fn builds_task_with_word_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let src = "module top(input [1:0] a, output [1:0] y); reg [1:0] r init 0; always r <= a; assign y = r; endmodule";
        std::fs::write(dir.path().join("spec.snl"), src).unwrap();
        let imp = "module top(input [1:0] b, output [1:0] y); reg [1:0] q init 0; always q <= b; assign y = q; endmodule";
        std::fs::write(dir.path().join("imp.snl"), imp).unwrap();
        let mut c = TaskConfig::parse(BASIC).unwrap();
        c.constraints.clear();
        c.mapping.inputs.push(("a".into(), "b".into()));
        c.mapping.registers.push(("r".into(), "q".into()));
        let t = c.task(dir.path()).unwrap();
        assert_eq!(t.mapping.inputs, vec![("a[0]".into(), "b[0]".into()), ("a[1]".into(), "b[1]".into())]);
        assert_eq!(t.mapping.registers.len(), 2);
        assert!(t.mapping.outputs.iter().all(|o| o.latency == (0, 1)));
        assert!(t.mapping.unmatched_spec.is_empty(), "{:?}", t.mapping.unmatched_spec);
    }
}
