use serde::{Deserialize, Serialize};

/// A critical parameter value together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    /// Extraction method tag, e.g. `"locus-intersection"` or `"bisection"`.
    pub method: String,
    pub value: f64,
    /// Interval known (or estimated) to contain the critical value.
    pub bracket: (f64, f64),
    /// Method-specific scalar diagnostics (residuals, mean used, ...).
    #[serde(default)]
    pub diagnostics: Vec<(String, f64)>,
}

impl CriticalEstimate {
    pub fn new(method: impl Into<String>, value: f64, bracket: (f64, f64)) -> Self {
        CriticalEstimate {
            method: method.into(),
            value,
            bracket,
            diagnostics: Vec::new(),
        }
    }

    pub fn with_diagnostic(mut self, name: impl Into<String>, value: f64) -> Self {
        self.diagnostics.push((name.into(), value));
        self
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics
            .iter()
            .find(|(k, _)| k == name)
            .map(|&(_, v)| v)
    }

    pub fn width(&self) -> f64 {
        (self.bracket.1 - self.bracket.0).abs()
    }
}
