//! JSON reports and their text renderings.

use std::fmt::Write as _;
use std::time::Duration;

use kpos_core::check::{CheckOutcome, Criterion};
use kpos_core::io::VerdictJson;
use kpos_core::kcriteria::{Status, Verdict};
use kpos_core::suites::SuiteReport;
use kpos_core::SearchBudget;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "kpos";

/// `sha256:<hex>` of the text.
pub fn digest(text: &str) -> String {
    let hash = Sha256::digest(text.as_bytes());
    let mut s = String::from("sha256:");
    for b in hash {
        write!(s, "{b:02x}").expect("string write");
    }
    s
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub criterion: String,
    pub verdict: VerdictJson,
    pub elapsed_ms: f64,
}

/// Everything needed to replay a run: digest of the canonical map JSON,
/// budget (including the seed), criteria and verdicts with witnesses.
/// Timings are the only fields that change between identical runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input_digest: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<SearchBudget>,
    #[serde(default)]
    pub criteria: Vec<String>,
    #[serde(default)]
    pub exhaustive: bool,
    pub k: usize,
    pub status: Status,
    pub verdicts: Vec<CheckRecord>,
    pub elapsed_ms: f64,
}

impl RunReport {
    pub fn check(
        input_digest: String,
        budget: SearchBudget,
        criteria: &[Criterion],
        exhaustive: bool,
        outcome: &CheckOutcome<f64>,
        elapsed: Duration,
    ) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: "check".into(),
            input_digest,
            seed: budget.seed,
            budget: Some(budget),
            criteria: criteria.iter().map(|c| c.name().to_string()).collect(),
            exhaustive,
            k: outcome.k,
            status: outcome.status,
            verdicts: outcome
                .runs
                .iter()
                .map(|r| CheckRecord {
                    criterion: r.criterion.name().into(),
                    verdict: (&r.verdict).into(),
                    elapsed_ms: millis(r.elapsed),
                })
                .collect(),
            elapsed_ms: millis(elapsed),
        }
    }

    pub fn decompose(input_digest: String, verdict: &Verdict<f64>, elapsed: Duration) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: "decompose".into(),
            input_digest,
            seed: 0,
            budget: None,
            criteria: vec![verdict.method.clone()],
            exhaustive: false,
            k: verdict.k,
            status: verdict.status,
            verdicts: vec![CheckRecord {
                criterion: verdict.method.clone(),
                verdict: verdict.into(),
                elapsed_ms: millis(elapsed),
            }],
            elapsed_ms: millis(elapsed),
        }
    }
}

fn margin(m: Option<f64>) -> String {
    m.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"))
}

pub fn check_text(r: &RunReport) -> String {
    let mut s = String::new();
    writeln!(s, "{} {} ({})", r.tool, r.command, r.input_digest).ok();
    if let Some(b) = &r.budget {
        writeln!(s, "budget: restarts={} max_iters={} seed={} tol={:e}", b.restarts, b.max_iters, b.seed, b.tol).ok();
    }
    for v in &r.verdicts {
        let witness = v.verdict.witness.as_ref().map_or(String::new(), |w| format!(", witness {}", w.kind));
        writeln!(
            s,
            "  {:<22} {:?} (k={}, margin {}, {}{witness}) [{:.1} ms]",
            v.criterion,
            v.verdict.status,
            v.verdict.k,
            margin(v.verdict.margin),
            v.verdict.method,
            v.elapsed_ms
        )
        .ok();
    }
    writeln!(s, "status: {:?} at k = {}", r.status, r.k).ok();
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRecord {
    pub criterion: String,
    pub witness: String,
    pub value: f64,
    pub threshold: f64,
    pub reproduced: bool,
}

pub fn verify_text(r: &VerifyRecord) -> String {
    format!(
        "{}: {} witness value {:.6e} (threshold {:.3e}) {}",
        r.criterion,
        r.witness,
        r.value,
        r.threshold,
        if r.reproduced { "refutes" } else { "does not refute" }
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteCheckRecord {
    pub label: String,
    pub passed: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteRecord {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<SuiteCheckRecord>,
    pub elapsed_ms: f64,
}

impl SuiteRecord {
    pub fn new(rep: &SuiteReport, elapsed: Duration) -> Self {
        Self {
            suite: rep.suite.name().into(),
            seed: rep.seed,
            passed: rep.passed(),
            checks: rep
                .checks
                .iter()
                .map(|c| SuiteCheckRecord {
                    label: c.label.clone(),
                    passed: c.passed,
                    detail: c.detail.clone(),
                    verdict: c.verdict.as_ref().map(Into::into),
                })
                .collect(),
            elapsed_ms: millis(elapsed),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub suites: Vec<SuiteRecord>,
}

impl ReproduceReport {
    pub fn new(suites: Vec<SuiteRecord>) -> Self {
        Self { tool: TOOL.into(), version: env!("CARGO_PKG_VERSION").into(), command: "reproduce".into(), suites }
    }
}

pub fn reproduce_text(r: &ReproduceReport) -> String {
    let mut s = String::new();
    for suite in &r.suites {
        for c in &suite.checks {
            writeln!(s, "{} {}: {}: {}", if c.passed { "PASS" } else { "FAIL" }, suite.suite, c.label, c.detail).ok();
        }
        let failed = suite.checks.iter().filter(|c| !c.passed).count();
        writeln!(
            s,
            "suite {} (seed {}): {} of {} checks passed [{:.0} ms]",
            suite.suite,
            suite.seed,
            suite.checks.len() - failed,
            suite.checks.len(),
            suite.elapsed_ms
        )
        .ok();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_sha256() {
        assert_eq!(digest("abc"), "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
