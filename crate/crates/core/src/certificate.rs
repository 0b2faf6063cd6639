use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// Outcome of an inequality or coexistence check: the inputs, the computed
/// quantities, and the verdict with its margin (positive when passing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub check: String,
    pub parameters: BTreeMap<String, f64>,
    pub quantities: BTreeMap<String, serde_json::Value>,
    pub verdict: Verdict,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(check: impl Into<String>) -> Self {
        Certificate {
            check: check.into(),
            parameters: BTreeMap::new(),
            quantities: BTreeMap::new(),
            verdict: Verdict::Fail,
            margin: f64::NAN,
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn quantity(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.quantities.insert(key.to_string(), v);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn verdict(mut self, ok: bool, margin: f64) -> Self {
        self.verdict = Verdict::from_bool(ok);
        self.margin = margin;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}
