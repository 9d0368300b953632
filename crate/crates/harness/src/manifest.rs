//! Per-run manifest: what was asked, what ran, what was written.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::output::FileRecord;

pub const UNITS: &str = "reduced van der Waals units: density rho/rho_c, temperature T/T_c, \
pressure P/P_c, chemical potential per particle in units of P_c/rho_c; lengths in the unit \
fixed by lambda (profiles scale as sqrt(lambda))";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed,
    ConfigError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRecord {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub residuals: BTreeMap<String, f64>,
    /// Absent for tasks timed as part of a larger batch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl TaskRecord {
    pub fn ok(name: impl Into<String>, elapsed_seconds: impl Into<Option<f64>>) -> Self {
        Self {
            name: name.into(),
            status: Status::Ok,
            error: None,
            residuals: BTreeMap::new(),
            elapsed_seconds: elapsed_seconds.into(),
        }
    }

    pub fn failed(
        name: impl Into<String>,
        error: impl ToString,
        elapsed_seconds: impl Into<Option<f64>>,
    ) -> Self {
        Self {
            name: name.into(),
            status: Status::Failed,
            error: Some(error.to_string()),
            residuals: BTreeMap::new(),
            elapsed_seconds: elapsed_seconds.into(),
        }
    }

    pub fn residual(mut self, key: &str, value: f64) -> Self {
        self.residuals.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub toolkit: &'static str,
    pub toolkit_version: &'static str,
    pub units: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Fully resolved configuration; feeding this manifest back via `--config` repeats
    /// the run.
    pub config: Value,
    pub tasks: Vec<TaskRecord>,
    pub files: Vec<FileRecord>,
    pub elapsed_seconds: f64,
}

impl RunManifest {
    pub fn new(config: Value) -> Self {
        Self {
            toolkit: "capillary",
            toolkit_version: env!("CARGO_PKG_VERSION"),
            units: UNITS,
            status: Status::Ok,
            error: None,
            config,
            tasks: Vec::new(),
            files: Vec::new(),
            elapsed_seconds: 0.0,
        }
    }

    /// Overall status from the task list.
    pub fn settle(&mut self) {
        if self.status == Status::Ok && self.tasks.iter().any(|t| t.status != Status::Ok) {
            self.status = Status::Failed;
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::ConfigError => 2,
        }
    }
}
