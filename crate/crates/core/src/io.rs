//! Ledger and report serialization. Series fixtures use the canonical text
//! format implemented on [`ModalSeries`](crate::algebra::ModalSeries) itself.

use crate::algebra::{format_crat, format_rat};
use crate::engine::NormalFormResult;

/// Per-order construction ledger: one line per update solve, recording the
/// resonance exponent, its exact margin against `mu_tilde`, the structural
/// classification, the truncation-sensitivity flag, and the solved
/// coefficients.
pub fn serialize_ledger(result: &NormalFormResult) -> String {
    let mut s = String::from("# modalnf ledger v1\n");
    s.push_str(
        "# order | action | q | j | mu | re_margin | in_jq | trunc_flag | forcing | xi_hat | f_hat\n",
    );
    for ledger in &result.orders {
        for r in &ledger.records {
            s.push_str(&format!(
                "{} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {}\n",
                ledger.order,
                if r.eliminated { "eliminated" } else { "kept" },
                r.q.to_text(),
                r.j,
                format_crat(&r.mu),
                format_rat(&r.re_margin),
                r.in_jq,
                r.truncation_flagged,
                r.forcing.to_text(),
                r.xi_hat.to_text(),
                r.f_hat.to_text(),
            ));
        }
    }
    s
}

/// One verification line of a run report.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Human- and machine-readable run summary.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub problem: String,
    pub order: u32,
    pub checks: Vec<CheckLine>,
    pub elapsed_ms: u128,
}

impl RunReport {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# modalnf report v1\n");
        s.push_str(&format!("problem = {}\n", self.problem));
        s.push_str(&format!("order = {}\n", self.order));
        s.push_str(&format!("elapsed_ms = {}\n", self.elapsed_ms));
        for c in &self.checks {
            s.push_str(&format!(
                "{} | {} | {}\n",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        s.push_str(&format!(
            "verdict = {}\n",
            if self.all_passed() { "pass" } else { "FAIL" }
        ));
        s
    }
}
