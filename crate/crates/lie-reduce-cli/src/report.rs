use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Duration;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    /// Inputs rendered in the expression grammar, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub verdict: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl Check {
    pub fn new(id: impl Into<String>, verdict: impl Into<String>, passed: bool) -> Check {
        Check {
            id: id.into(),
            inputs: BTreeMap::new(),
            verdict: verdict.into(),
            passed,
            detail: None,
            wall_ms: None,
        }
    }

    pub fn input(mut self, k: &str, v: impl Into<String>) -> Check {
        self.inputs.insert(k.into(), v.into());
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Check {
        self.detail = Some(d.into());
        self
    }

    pub fn timed(mut self, d: Option<Duration>) -> Check {
        self.wall_ms = d.map(|d| d.as_secs_f64() * 1e3);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub catalog_sha256: String,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    /// Sorts checks by id. Panics on a duplicate id.
    pub fn new(command: &str, catalog_sha256: String, mut checks: Vec<Check>) -> Report {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in checks.windows(2) {
            assert_ne!(pair[0].id, pair[1].id, "duplicate check id");
        }
        let passed = checks.iter().filter(|c| c.passed).count();
        Report {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            catalog_sha256,
            summary: Summary {
                total: checks.len(),
                passed,
                failed: checks.len() - passed,
            },
            checks,
        }
    }

    pub fn ok(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.verdict
            ));
            if let Some(d) = &c.detail {
                out.push_str(&format!("  {d}"));
            }
            if let Some(ms) = c.wall_ms {
                out.push_str(&format!("  [{ms:.1} ms]"));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "{} of {} checks passed\n",
            self.summary.passed, self.summary.total
        ));
        out
    }
}
