//! The report printed by every command. JSON reports carry
//! `"schema": "sessfes-report/1"` and the fields of [`Report`].

use std::io::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::Format;

pub const SCHEMA: &str = "sessfes-report/1";

#[derive(Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    /// `true`/`false` for decision commands, `null` otherwise.
    pub verdict: Option<bool>,
    pub diagnostics: Vec<Value>,
    pub artifacts: Value,
    #[serde(skip)]
    pub text: Vec<String>,
}

impl Report {
    pub fn new(command: &str, verdict: Option<bool>, text: Vec<String>, artifacts: Value) -> Report {
        Report { schema: SCHEMA, command: command.into(), verdict, diagnostics: vec![], artifacts, text }
    }

    pub fn diagnostics(mut self, ds: Vec<Value>) -> Report {
        self.diagnostics = ds;
        self
    }

    pub fn failure(f: Failure) -> Report {
        let d = json!({"code": f.code, "location": "", "message": f.message});
        let mut r = Report::new("error", None, vec![format!("error[{}]: {}", f.code, f.message)], Value::Null);
        r.diagnostics = vec![d];
        r
    }

    /// Write errors (e.g. a closed pipe) are ignored.
    pub fn emit(&self, format: Format) {
        let mut out = std::io::stdout().lock();
        match format {
            Format::Json => {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(self).expect("reports serialize"));
            }
            Format::Text if self.command == "error" => {
                let mut err = std::io::stderr().lock();
                for l in &self.text {
                    let _ = writeln!(err, "{l}");
                }
            }
            Format::Text => {
                for l in &self.text {
                    let _ = writeln!(out, "{l}");
                }
            }
        }
    }
}

/// A command that could not produce a verdict.
#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub message: String,
    exit: u8,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Failure {
        Failure { code: "input", message: message.into(), exit: 2 }
    }
    pub fn cap(message: impl Into<String>) -> Failure {
        Failure { code: "cap-exceeded", message: message.into(), exit: 3 }
    }
    pub fn internal(message: impl Into<String>) -> Failure {
        Failure { code: "internal", message: message.into(), exit: 2 }
    }
    pub fn exit_code(&self) -> u8 {
        self.exit
    }
}
