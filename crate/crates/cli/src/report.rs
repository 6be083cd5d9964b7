//! Run reports: a JSON document with stable field names, a human-readable
//! rendering, and CSV aggregation over many runs.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use seqeq::mapping::{Mapping, PairTag};
use seqeq::sec::{Budget, Status, Verdict};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("malformed report: {0}")]
    Parse(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputResult {
    pub spec: String,
    pub imp: String,
    pub latency: (u32, u32),
    /// `proved`, `mismatch`, `unknown` or `vacuous`.
    pub result: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingSummary {
    pub inputs: usize,
    pub outputs: usize,
    pub proven: usize,
    pub assumed: usize,
    pub candidate: usize,
    pub dropped: usize,
    pub unmatched_spec: usize,
    pub unmatched_imp: usize,
}

impl MappingSummary {
    pub fn of(m: &Mapping) -> MappingSummary {
        let count = |t| m.registers.iter().filter(|r| r.tag == t).count();
        MappingSummary {
            inputs: m.inputs.len(),
            outputs: m.outputs.len(),
            proven: count(PairTag::Proven),
            assumed: count(PairTag::Assumed),
            candidate: count(PairTag::Candidate),
            dropped: count(PairTag::Dropped),
            unmatched_spec: m.unmatched_spec.len(),
            unmatched_imp: m.unmatched_imp.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub mode: String,
    pub status: Status,
    pub summary: String,
    pub k: Option<usize>,
    pub bmc_depth_reached: Option<usize>,
    pub cex_cycle: Option<usize>,
    pub failing_output: Option<String>,
    pub outputs: Vec<OutputResult>,
    pub mapping: MappingSummary,
    pub lemmas: usize,
    pub budget: Budget,
    pub time_ms: u128,
    /// Counterexample in trace format; empty unless NOT_EQUIVALENT.
    pub trace: String,
    pub trace_path: Option<String>,
    pub notes: Vec<String>,
    pub cases: Vec<Report>,
}

impl Report {
    /// `mapping` is the task's mapping before refinement; the refined one
    /// from the verdict takes precedence when present.
    pub fn new(name: &str, mode: &str, v: &Verdict, mapping: &Mapping, budget: Budget) -> Report {
        let m = v.mapping.as_ref().unwrap_or(mapping);
        let outputs = m
            .outputs
            .iter()
            .map(|o| {
                let result = match v.status {
                    Status::Equivalent => "proved",
                    Status::Vacuous => "vacuous",
                    Status::NotEquivalent if v.failing_output.as_deref() == Some(o.spec.as_str()) => "mismatch",
                    _ => "unknown",
                };
                OutputResult { spec: o.spec.clone(), imp: o.imp.clone(), latency: o.latency, result: result.into() }
            })
            .collect();
        Report {
            name: name.to_string(),
            mode: mode.to_string(),
            status: v.status,
            summary: v.summary(),
            k: v.k,
            bmc_depth_reached: v.depth,
            cex_cycle: v.cex_cycle,
            failing_output: v.failing_output.clone(),
            outputs,
            mapping: MappingSummary::of(m),
            lemmas: v.lemmas.len(),
            budget,
            time_ms: v.time_ms,
            trace: v.trace.as_ref().map(|t| t.to_text()).unwrap_or_default(),
            trace_path: None,
            notes: v.notes.clone(),
            cases: v.cases.iter().map(|(n, c)| Report::new(n, mode, c, mapping, budget)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Report, ReportError> {
        serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.summary);
        let _ = writeln!(s, "  task      {}", self.name);
        let _ = writeln!(s, "  mode      {}", self.mode);
        let _ = writeln!(s, "  time      {} ms", self.time_ms);
        let _ = writeln!(
            s,
            "  budget    bmc_depth={} k_max={} conflicts={}",
            self.budget.bmc_depth, self.budget.k_max, self.budget.conflicts
        );
        let m = &self.mapping;
        let _ = writeln!(
            s,
            "  mapping   {} inputs, {} outputs, registers proven={} assumed={} candidate={} dropped={}",
            m.inputs, m.outputs, m.proven, m.assumed, m.candidate, m.dropped
        );
        if !self.outputs.is_empty() {
            let w = self.outputs.iter().map(|o| o.spec.len()).max().unwrap_or(0).max(6);
            let _ = writeln!(s, "  {:<w$}  {:<w$}  latency  result", "spec", "imp");
            for o in &self.outputs {
                let lat = format!("{},{}", o.latency.0, o.latency.1);
                let _ = writeln!(s, "  {:<w$}  {:<w$}  {lat:<7}  {}", o.spec, o.imp, o.result);
            }
        }
        for c in &self.cases {
            let _ = writeln!(s, "  case {}: {}", c.name, c.summary);
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        if let Some(p) = &self.trace_path {
            let _ = writeln!(s, "  trace written to {p}");
        }
        s
    }

    pub fn write(&self, path: &Path, json: bool) -> Result<(), ReportError> {
        let body = if json { self.to_json() } else { self.to_text() };
        std::fs::write(path, body).map_err(|e| ReportError::Io { path: path.display().to_string(), msg: e.to_string() })
    }
}

#[derive(Debug, Serialize)]
struct Row<'a> {
    name: &'a str,
    mode: &'a str,
    status: Status,
    k: Option<usize>,
    bmc_depth_reached: Option<usize>,
    cex_cycle: Option<usize>,
    lemmas: usize,
    proven_pairs: usize,
    dropped_pairs: usize,
    time_ms: u128,
}

/// One CSV row per report.
pub fn to_csv(reports: &[Report]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(Row {
            name: &r.name,
            mode: &r.mode,
            status: r.status,
            k: r.k,
            bmc_depth_reached: r.bmc_depth_reached,
            cex_cycle: r.cex_cycle,
            lemmas: r.lemmas,
            proven_pairs: r.mapping.proven,
            dropped_pairs: r.mapping.dropped,
            time_ms: r.time_ms,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use seqeq::mapping::OutputPair;

    fn mapping() -> Mapping {
        Mapping { outputs: vec![OutputPair { spec: "y".into(), imp: "y".into(), latency: (0, 1) }], ..Default::default() }
    }

    #[test]
    fn status_round_trips_for_every_status() {
        for st in [Status::Equivalent, Status::NotEquivalent, Status::Inconclusive, Status::Vacuous] {
            let r = Report::new("t", "sec", &Verdict::new(st), &mapping(), Budget::default());
            assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
            assert!(r.to_text().starts_with(&st.to_string()));
        }
    }

    #[test]
    fn equivalent_has_empty_trace() {
        let mut v = Verdict::new(Status::Equivalent);
        v.k = Some(2);
        let r = Report::new("t", "sec", &v, &mapping(), Budget::default());
        assert_eq!(r.trace, "");
        assert_eq!(r.outputs[0].result, "proved");
        assert!(r.to_json().contains("\"trace\": \"\""));
    }

    #[test]
    fn cases_become_sub_reports() {
        let mut v = Verdict::new(Status::Equivalent);
        v.cases = vec![("lo".into(), Verdict::new(Status::Equivalent)), ("hi".into(), Verdict::new(Status::Equivalent))];
        let r = Report::new("t", "sec", &v, &mapping(), Budget::default());
        assert_eq!(r.cases.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["lo", "hi"]);
        assert!(r.to_text().contains("case hi: EQUIVALENT"));
    }

    #[test]
    fn csv_has_one_row_per_report() {
        let rs: Vec<Report> = (0..5)
            .map(|i| Report::new(&format!("t{i}"), "sec", &Verdict::new(Status::Equivalent), &mapping(), Budget::default()))
            .collect();
        let text = to_csv(&rs).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let hdr = rd.headers().unwrap().clone();
        assert_eq!(&hdr[0], "name");
        let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 5);
        assert_eq!(&rows[3][0], "t3");
        assert_eq!(&rows[3][2], "EQUIVALENT");
    }
}
