//! Shared verification report shape used by the library drivers and the CLI.

use serde::Serialize;

/// Outcome of one named check, serializable as
/// `{check, algebra, m, r, status, mismatches[]}`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub check: String,
    pub algebra: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    pub status: String,
    pub mismatches: Vec<String>,
}

impl Report {
    pub fn new(check: &str, algebra: &str, m: Option<u32>, r: Option<u32>) -> Self {
        Report {
            check: check.to_string(),
            algebra: algebra.to_string(),
            m,
            r,
            status: "pass".to_string(),
            mismatches: Vec::new(),
        }
    }

    pub fn fail(mut self, detail: impl Into<String>) -> Self {
        self.status = "fail".to_string();
        self.mismatches.push(detail.into());
        self
    }

    pub fn with_result(mut self, ok: bool, detail: impl Into<String>) -> Self {
        if !ok {
            self.status = "fail".to_string();
            self.mismatches.push(detail.into());
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn one_line(&self) -> String {
        let mr = match (self.m, self.r) {
            (Some(m), Some(r)) => format!(" m={m} r={r}"),
            (Some(m), None) => format!(" m={m}"),
            (None, Some(r)) => format!(" r={r}"),
            (None, None) => String::new(),
        };
        let extra = if self.mismatches.is_empty() {
            String::new()
        } else {
            format!("  [{}]", self.mismatches.join("; "))
        };
        format!(
            "{:<4} {} ({}{}){}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.check,
            self.algebra,
            mr,
            extra
        )
    }
}

impl From<&crate::hamiltonian::BiHamReport> for Report {
    fn from(b: &crate::hamiltonian::BiHamReport) -> Self {
        Report {
            check: "bihamiltonian".to_string(),
            algebra: b.algebra.clone(),
            m: Some(b.m),
            r: Some(b.r),
            status: if b.pass { "pass" } else { "fail" }.to_string(),
            mismatches: b
                .mismatches
                .iter()
                .map(|mm| {
                    format!(
                        "{} order {} component {}: {}",
                        mm.comparison, mm.order, mm.component, mm.detail
                    )
                })
                .collect(),
        }
    }
}
