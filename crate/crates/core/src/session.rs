//! Line-oriented evidence entry with a posterior table after every statement.
//!
//! Statements: `X=value`, `retract X`, `show`, `quit`. Blank lines and
//! lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::inference::{posteriors, PosteriorResult, Status, Strategy, TsEvidence};
use crate::kernel::CompiledKernel;
use crate::model::TroubleshootingModel;

/// Fixed-width table of cause, count and posterior.
pub fn render_table(result: &PosteriorResult) -> String {
    let width = result.causes.iter().map(|c| c.name.len()).max().unwrap_or(0).max(5);
    let mut s = String::new();
    writeln!(s, "{:<width$}  {:>12}  {:>14}  {:>12}", "cause", "card", "weighted_card", "posterior").unwrap();
    for c in &result.causes {
        writeln!(
            s,
            "{:<width$}  {:>12}  {:>14.6}  {:>12.9}",
            c.name, c.card, c.weighted_card, c.posterior
        )
        .unwrap();
    }
    match result.status {
        Status::Ok => writeln!(s, "P(evidence) = {:.12e}", result.evidence_probability).unwrap(),
        Status::InconsistentEvidence => writeln!(s, "inconsistent evidence").unwrap(),
    }
    s
}

pub struct Session<'a> {
    model: &'a TroubleshootingModel,
    kernel: &'a CompiledKernel,
    evidence: TsEvidence,
}

pub enum Outcome {
    Continue(String),
    Quit,
}

impl<'a> Session<'a> {
    pub fn new(model: &'a TroubleshootingModel, kernel: &'a CompiledKernel) -> Session<'a> {
        Session {
            model,
            kernel,
            evidence: TsEvidence::new(),
        }
    }

    pub fn evidence(&self) -> &TsEvidence {
        &self.evidence
    }

    fn report(&self) -> String {
        let mut s = format!("evidence: {}\n", if self.evidence.is_empty() { "(none)".to_string() } else { self.evidence.to_string() });
        match posteriors(self.model, self.kernel, &self.evidence, Strategy::Both) {
            Ok(r) => s.push_str(&render_table(&r)),
            Err(e) => writeln!(s, "error: {e}").unwrap(),
        }
        s
    }

    /// Applies one statement and returns the text to print.
    pub fn step(&mut self, line: &str) -> Outcome {
        let line = line.trim();
        if line == "quit" {
            return Outcome::Quit;
        }
        if line == "show" {
            return Outcome::Continue(self.report());
        }
        if let Some(var) = line.strip_prefix("retract ") {
            let var = var.trim();
            if !self.evidence.retract(var) {
                return Outcome::Continue(format!("error: no evidence on {var:?}\n"));
            }
            return Outcome::Continue(self.report());
        }
        let mut next = self.evidence.clone();
        match next.assign(self.model, line) {
            Ok(()) => {
                self.evidence = next;
                Outcome::Continue(self.report())
            }
            Err(e) => Outcome::Continue(format!("error: {e}\n")),
        }
    }

    /// Reads statements until `quit` or end of input, echoing each one.
    pub fn run<R: BufRead, W: Write>(&mut self, input: R, mut output: W) -> io::Result<()> {
        for line in input.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            writeln!(output, "> {t}")?;
            match self.step(t) {
                Outcome::Quit => break,
                Outcome::Continue(text) => output.write_all(text.as_bytes())?,
            }
        }
        output.flush()
    }
}
