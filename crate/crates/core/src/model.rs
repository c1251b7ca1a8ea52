//! Troubleshooting models: system variables organised into a subsystem
//! decomposition under a problem variable, fault causes with priors and
//! target sets, and observable actions with conditional probability tables.
//!
//! Text format, one declaration per line, `#` starts a comment:
//!
//! ```text
//! problem S
//! system S  subsystems S1 S2
//! system S1
//! system S2
//! cause C1 targets S1 prior 0.5
//! action A parents S1
//!   row S1=1 p 0.3
//!   row S1=0 p 0.6
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::counting::WeightFunction;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemVar {
    pub name: String,
    pub subsystems: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauseVar {
    pub name: String,
    pub targets: Vec<String>,
    /// Probability that the cause is present.
    pub prior: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionVar {
    pub name: String,
    pub parents: Vec<String>,
    /// `P(action = y | parents)`; entry `i` is the configuration in which
    /// `parents[d]` takes bit `d` of `i`.
    pub cpt: Vec<f64>,
}

impl ActionVar {
    /// `P(action = observed | parents)` as a weight function.
    pub fn likelihood(&self, observed: bool) -> WeightFunction {
        let table = self.cpt.iter().map(|&p| if observed { p } else { 1.0 - p }).collect();
        WeightFunction::new(self.parents.clone(), table).expect("cpt shape is checked at construction")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TroubleshootingModel {
    pub problem: String,
    pub systems: Vec<SystemVar>,
    pub causes: Vec<CauseVar>,
    pub actions: Vec<ActionVar>,
}

impl TroubleshootingModel {
    pub fn system(&self, name: &str) -> Option<&SystemVar> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn cause(&self, name: &str) -> Option<&CauseVar> {
        self.causes.iter().find(|c| c.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionVar> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn n_kernel_vars(&self) -> usize {
        self.systems.len() + self.causes.len()
    }

    pub fn n_vars(&self) -> usize {
        self.n_kernel_vars() + self.actions.len()
    }

    /// System variables without subsystems.
    pub fn leaves(&self) -> impl Iterator<Item = &SystemVar> {
        self.systems.iter().filter(|s| s.subsystems.is_empty())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelIssue {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub vars: Vec<String>,
}

impl ModelIssue {
    fn error(code: &'static str, message: impl Into<String>, vars: &[&str]) -> ModelIssue {
        ModelIssue {
            severity: Severity::Error,
            code,
            message: message.into(),
            vars: vars.iter().map(|v| v.to_string()).collect(),
        }
    }

    fn warning(code: &'static str, message: impl Into<String>, vars: &[&str]) -> ModelIssue {
        ModelIssue {
            severity: Severity::Warning,
            ..ModelIssue::error(code, message, vars)
        }
    }
}

pub fn has_errors(issues: &[ModelIssue]) -> bool {
    issues.iter().any(|i| i.severity == Severity::Error)
}

/// Structural checks. The result is empty exactly when the model is well formed.
pub fn validate(model: &TroubleshootingModel) -> Vec<ModelIssue> {
    let mut issues = Vec::new();
    let mut kind: HashMap<&str, &'static str> = HashMap::new();
    let declared = model
        .systems
        .iter()
        .map(|s| (s.name.as_str(), "system"))
        .chain(model.causes.iter().map(|c| (c.name.as_str(), "cause")))
        .chain(model.actions.iter().map(|a| (a.name.as_str(), "action")));
    for (name, k) in declared {
        if kind.insert(name, k).is_some() {
            issues.push(ModelIssue::error("duplicate-variable", format!("{name} is declared twice"), &[name]));
        }
    }

    match kind.get(model.problem.as_str()) {
        Some(&"system") => {}
        _ => issues.push(ModelIssue::error(
            "missing-problem",
            format!("problem variable {} is not a system variable", model.problem),
            &[&model.problem],
        )),
    }

    let mut successors: HashMap<&str, Vec<&str>> = HashMap::new();
    for s in &model.systems {
        let mut seen = HashSet::new();
        for sub in &s.subsystems {
            if !seen.insert(sub.as_str()) {
                issues.push(ModelIssue::warning(
                    "repeated-reference",
                    format!("{} lists subsystem {sub} twice", s.name),
                    &[&s.name, sub],
                ));
                continue;
            }
            match kind.get(sub.as_str()) {
                None => issues.push(ModelIssue::error(
                    "undeclared-variable",
                    format!("{} lists undeclared subsystem {sub}", s.name),
                    &[&s.name, sub],
                )),
                Some(&"system") => successors.entry(sub.as_str()).or_default().push(s.name.as_str()),
                Some(&"cause") => issues.push(ModelIssue::error(
                    "cause-as-subsystem",
                    format!("cause {sub} is listed as a subsystem of {}; causes act only through targets", s.name),
                    &[sub, &s.name],
                )),
                Some(_) => issues.push(ModelIssue::error(
                    "action-has-children",
                    format!("action {sub} is listed as a subsystem of {}", s.name),
                    &[sub, &s.name],
                )),
            }
        }
    }

    if let Some(succ) = successors.get(model.problem.as_str()) {
        issues.push(ModelIssue::error(
            "problem-has-successor",
            format!("problem variable {} is a subsystem of {}", model.problem, succ.join(", ")),
            &[&model.problem],
        ));
    }

    if let Some(cycle) = find_cycle(model) {
        let vars: Vec<&str> = cycle.iter().map(|s| s.as_str()).collect();
        issues.push(ModelIssue::error(
            "cyclic-decomposition",
            format!("subsystem decomposition has a cycle through {}", cycle.join(" -> ")),
            &vars,
        ));
    }

    // everything must reach the problem variable through "is a subsystem of"
    let mut reaches: HashSet<&str> = HashSet::new();
    if kind.get(model.problem.as_str()) == Some(&"system") {
        let mut stack = vec![model.problem.as_str()];
        while let Some(x) = stack.pop() {
            if !reaches.insert(x) {
                continue;
            }
            if let Some(s) = model.system(x) {
                stack.extend(s.subsystems.iter().map(|s| s.as_str()));
            }
        }
    }
    for s in &model.systems {
        if !reaches.contains(s.name.as_str()) && kind.contains_key(model.problem.as_str()) {
            issues.push(ModelIssue::error(
                "disconnected-system",
                format!("disconnected system variable {} has no path to {}", s.name, model.problem),
                &[&s.name],
            ));
        }
    }

    let mut covered: HashSet<&str> = HashSet::new();
    for c in &model.causes {
        if !(0.0..=1.0).contains(&c.prior) {
            issues.push(ModelIssue::error(
                "probability-out-of-range",
                format!("prior of {} is {}, outside [0, 1]", c.name, c.prior),
                &[&c.name],
            ));
        }
        if c.targets.is_empty() {
            issues.push(ModelIssue::error(
                "cause-without-targets",
                format!("cause {} is not a parent of any system variable", c.name),
                &[&c.name],
            ));
        }
        let mut seen = HashSet::new();
        for t in &c.targets {
            if !seen.insert(t.as_str()) {
                issues.push(ModelIssue::warning(
                    "repeated-reference",
                    format!("{} lists target {t} twice", c.name),
                    &[&c.name, t],
                ));
                continue;
            }
            match kind.get(t.as_str()) {
                None => issues.push(ModelIssue::error(
                    "undeclared-variable",
                    format!("{} targets undeclared {t}", c.name),
                    &[&c.name, t],
                )),
                Some(&"system") => {
                    covered.insert(t.as_str());
                }
                Some(&"cause") => issues.push(ModelIssue::error(
                    "cause-has-parents",
                    format!("cause has parents: {t} is targeted by {}", c.name),
                    &[t, &c.name],
                )),
                Some(_) => issues.push(ModelIssue::error(
                    "action-has-children",
                    format!("action {t} is targeted by {}", c.name),
                    &[t, &c.name],
                )),
            }
        }
    }
    for leaf in model.leaves() {
        if !covered.contains(leaf.name.as_str()) {
            issues.push(ModelIssue::warning(
                "uncovered-leaf",
                format!("no cause targets leaf {}", leaf.name),
                &[&leaf.name],
            ));
        }
    }

    for a in &model.actions {
        let mut seen = HashSet::new();
        for p in &a.parents {
            if !seen.insert(p.as_str()) {
                issues.push(ModelIssue::error(
                    "repeated-reference",
                    format!("{} lists parent {p} twice", a.name),
                    &[&a.name, p],
                ));
                continue;
            }
            match kind.get(p.as_str()) {
                Some(&"system") => {}
                None => issues.push(ModelIssue::error(
                    "undeclared-variable",
                    format!("{} has undeclared parent {p}", a.name),
                    &[&a.name, p],
                )),
                Some(&"action") => issues.push(ModelIssue::error(
                    "action-has-children",
                    format!("action {p} is a parent of {}", a.name),
                    &[p, &a.name],
                )),
                Some(_) => issues.push(ModelIssue::error(
                    "action-parent-not-system",
                    format!("parent {p} of {} is not a system variable", a.name),
                    &[&a.name, p],
                )),
            }
        }
        if a.cpt.len() != 1usize << a.parents.len().min(30) {
            issues.push(ModelIssue::error(
                "incomplete-cpt",
                format!("incomplete CPT for {}: {} rows for {} parents", a.name, a.cpt.len(), a.parents.len()),
                &[&a.name],
            ));
        }
        if a.cpt.iter().any(|p| !(0.0..=1.0).contains(p)) {
            issues.push(ModelIssue::error(
                "probability-out-of-range",
                format!("CPT of {} has an entry outside [0, 1]", a.name),
                &[&a.name],
            ));
        }
    }
    issues
}

fn find_cycle(model: &TroubleshootingModel) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit<'a>(
        model: &'a TroubleshootingModel,
        x: &'a str,
        marks: &mut HashMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        match marks.get(x) {
            Some(Mark::Done) => return None,
            Some(Mark::Open) => {
                let start = path.iter().position(|&p| p == x).unwrap();
                let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(x.to_string());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(x, Mark::Open);
        path.push(x);
        if let Some(s) = model.system(x) {
            for sub in &s.subsystems {
                if let Some(c) = visit(model, sub, marks, path) {
                    return Some(c);
                }
            }
        }
        path.pop();
        marks.insert(x, Mark::Done);
        None
    }
    let mut marks = HashMap::new();
    for s in &model.systems {
        if let Some(c) = visit(model, &s.name, &mut marks, &mut Vec::new()) {
            return Some(c);
        }
    }
    None
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate variable {name}")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: reference to undeclared variable {name}")]
    Undeclared { line: usize, name: String },
    #[error("line {line}: probability out of range: {value}")]
    ProbabilityOutOfRange { line: usize, value: String },
    #[error("line {line}: incomplete CPT for {action}")]
    IncompleteCpt { line: usize, action: String },
}

fn syntax(line: usize, message: impl Into<String>) -> ModelParseError {
    ModelParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn probability(line: usize, text: &str) -> Result<f64, ModelParseError> {
    let p: f64 = text
        .parse()
        .map_err(|_| syntax(line, format!("expected a probability, found {text:?}")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(ModelParseError::ProbabilityOutOfRange {
            line,
            value: text.to_string(),
        });
    }
    Ok(p)
}

struct PendingAction {
    line: usize,
    var: ActionVar,
    filled: Vec<bool>,
}

impl PendingAction {
    fn finish(self) -> Result<ActionVar, ModelParseError> {
        if self.filled.iter().all(|&f| f) {
            Ok(self.var)
        } else {
            Err(ModelParseError::IncompleteCpt {
                line: self.line,
                action: self.var.name,
            })
        }
    }
}

pub fn parse_model(text: &str) -> Result<TroubleshootingModel, ModelParseError> {
    let mut problem: Option<String> = None;
    let mut systems = Vec::new();
    let mut causes = Vec::new();
    let mut actions = Vec::new();
    let mut pending: Option<PendingAction> = None;
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut references: Vec<(usize, String)> = Vec::new();

    let mut declare = |name: &str, line: usize| -> Result<(), ModelParseError> {
        if names.insert(name.to_string(), line).is_some() {
            return Err(ModelParseError::Duplicate {
                line,
                name: name.to_string(),
            });
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = content.split_whitespace().collect();
        let Some(&keyword) = words.first() else { continue };
        if keyword != "row" {
            if let Some(p) = pending.take() {
                actions.push(p.finish()?);
            }
        }
        match keyword {
            "problem" => {
                if words.len() != 2 {
                    return Err(syntax(line, "expected `problem <name>`"));
                }
                if problem.is_some() {
                    return Err(syntax(line, "problem variable declared twice"));
                }
                problem = Some(words[1].to_string());
                references.push((line, words[1].to_string()));
            }
            "system" => {
                let name = *words.get(1).ok_or_else(|| syntax(line, "expected a system name"))?;
                let subsystems = match words.get(2) {
                    None => Vec::new(),
                    Some(&"subsystems") => words[3..].iter().map(|s| s.to_string()).collect(),
                    Some(w) => return Err(syntax(line, format!("expected `subsystems`, found {w:?}"))),
                };
                declare(name, line)?;
                references.extend(subsystems.iter().map(|s: &String| (line, s.clone())));
                systems.push(SystemVar {
                    name: name.to_string(),
                    subsystems,
                });
            }
            "cause" => {
                let name = *words.get(1).ok_or_else(|| syntax(line, "expected a cause name"))?;
                if words.get(2) != Some(&"targets") {
                    return Err(syntax(line, "expected `cause <name> targets ... prior <p>`"));
                }
                let prior_at = words
                    .iter()
                    .position(|&w| w == "prior")
                    .ok_or_else(|| syntax(line, "missing `prior`"))?;
                if prior_at + 2 != words.len() {
                    return Err(syntax(line, "expected a single value after `prior`"));
                }
                let targets: Vec<String> = words[3..prior_at].iter().map(|s| s.to_string()).collect();
                let prior = probability(line, words[prior_at + 1])?;
                declare(name, line)?;
                references.extend(targets.iter().map(|s| (line, s.clone())));
                causes.push(CauseVar {
                    name: name.to_string(),
                    targets,
                    prior,
                });
            }
            "action" => {
                let name = *words.get(1).ok_or_else(|| syntax(line, "expected an action name"))?;
                let parents: Vec<String> = match words.get(2) {
                    None => Vec::new(),
                    Some(&"parents") => words[3..].iter().map(|s| s.to_string()).collect(),
                    Some(w) => return Err(syntax(line, format!("expected `parents`, found {w:?}"))),
                };
                if parents.len() > 20 {
                    return Err(syntax(line, "too many action parents"));
                }
                declare(name, line)?;
                references.extend(parents.iter().map(|s| (line, s.clone())));
                let size = 1usize << parents.len();
                pending = Some(PendingAction {
                    line,
                    var: ActionVar {
                        name: name.to_string(),
                        parents,
                        cpt: vec![0.0; size],
                    },
                    filled: vec![false; size],
                });
            }
            "row" => {
                let Some(p) = pending.as_mut() else {
                    return Err(syntax(line, "`row` outside an action"));
                };
                let k = p.var.parents.len();
                if words.len() != k + 3 || words[k + 1] != "p" {
                    return Err(syntax(line, format!("expected `row` with {k} assignments then `p <value>`")));
                }
                let mut idx = 0usize;
                let mut seen = vec![false; k];
                for w in &words[1..=k] {
                    let (var, val) = w
                        .split_once('=')
                        .ok_or_else(|| syntax(line, format!("expected `Var=0|1`, found {w:?}")))?;
                    let d = p
                        .var
                        .parents
                        .iter()
                        .position(|x| x == var)
                        .ok_or_else(|| syntax(line, format!("{var} is not a parent of {}", p.var.name)))?;
                    if std::mem::replace(&mut seen[d], true) {
                        return Err(syntax(line, format!("{var} assigned twice")));
                    }
                    match val {
                        "1" => idx |= 1 << d,
                        "0" => {}
                        _ => return Err(syntax(line, format!("expected 0 or 1 for {var}"))),
                    }
                }
                if std::mem::replace(&mut p.filled[idx], true) {
                    return Err(syntax(line, "row given twice"));
                }
                p.var.cpt[idx] = probability(line, words[k + 2])?;
            }
            other => return Err(syntax(line, format!("unknown declaration {other:?}"))),
        }
    }
    if let Some(p) = pending.take() {
        actions.push(p.finish()?);
    }
    for (line, name) in references {
        if !names.contains_key(&name) {
            return Err(ModelParseError::Undeclared { line, name });
        }
    }
    let problem = problem.ok_or_else(|| syntax(text.lines().count().max(1), "missing `problem` declaration"))?;
    Ok(TroubleshootingModel {
        problem,
        systems,
        causes,
        actions,
    })
}

pub fn serialize_model(model: &TroubleshootingModel) -> String {
    let mut out = String::new();
    writeln!(out, "problem {}", model.problem).unwrap();
    for s in &model.systems {
        write!(out, "system {}", s.name).unwrap();
        if !s.subsystems.is_empty() {
            write!(out, " subsystems {}", s.subsystems.join(" ")).unwrap();
        }
        out.push('\n');
    }
    for c in &model.causes {
        writeln!(out, "cause {} targets {} prior {}", c.name, c.targets.join(" "), c.prior).unwrap();
    }
    for a in &model.actions {
        write!(out, "action {}", a.name).unwrap();
        if !a.parents.is_empty() {
            write!(out, " parents {}", a.parents.join(" ")).unwrap();
        }
        out.push('\n');
        let k = a.parents.len();
        // first parent is the most significant digit, all-ones row first
        for r in (0..1usize << k).rev() {
            let mut idx = 0;
            out.push_str("  row");
            for (d, p) in a.parents.iter().enumerate() {
                let bit = r >> (k - 1 - d) & 1;
                idx |= bit << d;
                write!(out, " {p}={bit}").unwrap();
            }
            writeln!(out, " p {}", a.cpt[idx]).unwrap();
        }
    }
    out
}

/// Names of all system variables that can reach `target` through the
/// subsystem relation, `target` included.
pub fn ancestors_in_decomposition(model: &TroubleshootingModel, target: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![target.to_string()];
    while let Some(x) = stack.pop() {
        if !out.insert(x.clone()) {
            continue;
        }
        for s in &model.systems {
            if s.subsystems.contains(&x) {
                stack.push(s.name.clone());
            }
        }
    }
    out
}

/// The model used throughout the examples: five system variables, two
/// causes and one action with the reference CPT.
pub fn example_model() -> TroubleshootingModel {
    parse_model(EXAMPLE_MODEL).expect("built-in example parses")
}

pub const EXAMPLE_MODEL: &str = "\
problem S
system S  subsystems S1 S2
system S1 subsystems S3 S4
system S2
system S3
system S4
cause C1 targets S3 S4 prior 0.5
cause C2 targets S2 S4 prior 0.5
action A parents S2 S4
  row S2=1 S4=1 p 0.3
  row S2=1 S4=0 p 0.6
  row S2=0 S4=1 p 0.2
  row S2=0 S4=0 p 0.4
";

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(m: &TroubleshootingModel) -> Vec<&'static str> {
        validate(m).into_iter().filter(|i| i.severity == Severity::Error).map(|i| i.code).collect()
    }

    #[test]
    fn example_is_valid() {
        let m = example_model();
        assert!(validate(&m).is_empty(), "{:?}", validate(&m));
        assert_eq!(m.systems.len(), 5);
        assert_eq!(m.causes.len(), 2);
        assert_eq!(m.actions.len(), 1);
        let a = m.action("A").unwrap();
        // bit 0 is S2, bit 1 is S4
        assert_eq!(a.cpt, vec![0.4, 0.6, 0.2, 0.3]);
    }

    #[test]
    fn round_trip() {
        let m = example_model();
        let text = serialize_model(&m);
        assert_eq!(parse_model(&text).unwrap(), m);
        assert_eq!(text, EXAMPLE_MODEL.replace("system S  ", "system S "));
    }

    #[test]
    fn validate_is_repeatable() {
        let mut m = example_model();
        m.systems.push(SystemVar {
            name: "S9".into(),
            subsystems: vec![],
        });
        assert_eq!(validate(&m), validate(&m));
    }

    #[test]
    fn cause_with_parents() {
        let mut m = example_model();
        m.causes[0].targets.push("C2".into());
        assert!(codes(&m).contains(&"cause-has-parents"));
    }

    #[test]
    fn disconnected_system() {
        let mut m = example_model();
        m.systems.push(SystemVar {
            name: "S9".into(),
            subsystems: vec![],
        });
        m.causes[0].targets.push("S9".into());
        assert_eq!(codes(&m), vec!["disconnected-system"]);
        let issue = validate(&m).into_iter().find(|i| i.code == "disconnected-system").unwrap();
        assert!(issue.message.contains("disconnected system variable"));
    }

    #[test]
    fn problem_with_successor_and_cycle() {
        let mut m = example_model();
        m.systems[3].subsystems.push("S".into());
        let c = codes(&m);
        assert!(c.contains(&"problem-has-successor"));
        assert!(c.contains(&"cyclic-decomposition"));
    }

    #[test]
    fn action_as_parent_and_bad_cpt() {
        let mut m = example_model();
        m.systems[2].subsystems.push("A".into());
        m.actions[0].cpt.pop();
        let c = codes(&m);
        assert!(c.contains(&"action-has-children"));
        assert!(c.contains(&"incomplete-cpt"));
    }

    #[test]
    fn uncovered_leaf_is_a_warning() {
        let mut m = example_model();
        m.causes[0].targets = vec!["S4".into()];
        let issues = validate(&m);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].code, "uncovered-leaf");
        assert!(!has_errors(&issues));
    }

    #[test]
    fn prior_out_of_range() {
        let text = EXAMPLE_MODEL.replace("prior 0.5\ncause C2", "prior 1.3\ncause C2");
        let err = parse_model(&text).unwrap_err();
        assert_eq!(
            err,
            ModelParseError::ProbabilityOutOfRange {
                line: 7,
                value: "1.3".into()
            }
        );
        assert!(err.to_string().contains("probability out of range"));
    }

    #[test]
    fn incomplete_cpt() {
        let text = EXAMPLE_MODEL.replace("  row S2=0 S4=0 p 0.4\n", "");
        let err = parse_model(&text).unwrap_err();
        assert!(matches!(err, ModelParseError::IncompleteCpt { line: 9, .. }));
        assert!(err.to_string().contains("incomplete CPT"));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let bad = "problem S\nsystem S\nfrobnicate X\n";
        assert!(matches!(parse_model(bad), Err(ModelParseError::Syntax { line: 3, .. })));
        let dup = "problem S\nsystem S\nsystem S\n";
        assert!(matches!(parse_model(dup), Err(ModelParseError::Duplicate { line: 3, .. })));
        let undeclared = "problem S\nsystem S subsystems T\n";
        assert!(matches!(parse_model(undeclared), Err(ModelParseError::Undeclared { line: 2, .. })));
        let stray = "problem S\nsystem S\n  row p 0.1\n";
        assert!(matches!(parse_model(stray), Err(ModelParseError::Syntax { line: 3, .. })));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{}", EXAMPLE_MODEL.replace("problem S", "problem S # the device"));
        assert_eq!(parse_model(&text).unwrap(), example_model());
    }

    #[test]
    fn likelihood_complements() {
        let a = &example_model().actions[0];
        let n = a.likelihood(false);
        assert_eq!(n.table()[3], 1.0 - 0.3);
    }
}
