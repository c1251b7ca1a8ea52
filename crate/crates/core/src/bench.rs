//! Operation-count benchmarks over generated models, with CSV and SVG output.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::{generate_model, GenError, GenSpec};
use crate::inference::{posteriors, InferenceError, Strategy, TsEvidence};
use crate::kernel::{compile_kernel, model_size_bound, FaultMode, KernelError};

pub const CSV_HEADER: &str = "model_id,n_system,n_cause,n_action,mode,nodes,size_bound,adds,muls,divs,wall_ns";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub model_id: String,
    pub n_system: usize,
    pub n_cause: usize,
    pub n_action: usize,
    pub mode: String,
    pub nodes: usize,
    pub size_bound: u128,
    pub adds: u64,
    pub muls: u64,
    pub divs: u64,
    pub wall_ns: u64,
}

impl BenchRecord {
    pub fn n_vars(&self) -> usize {
        self.n_system + self.n_cause + self.n_action
    }

    pub fn n_kernel_vars(&self) -> usize {
        self.n_system + self.n_cause
    }

    pub fn ops(&self) -> u64 {
        self.adds + self.muls + self.divs
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BenchOptions {
    /// Record wall-clock time; off by default so output is reproducible.
    pub timing: bool,
    /// Number of actions to observe in addition to the faulty problem variable.
    pub observe_actions: usize,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{id}: {source}")]
    Generate { id: String, source: GenError },
    #[error("{id}: {source}")]
    Compile { id: String, source: KernelError },
    #[error("{id}: {source}")]
    Inference { id: String, source: InferenceError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Compiles each model, sets the problem variable faulty (and observes the
/// first `observe_actions` actions, alternating `y`/`n`), computes all
/// posteriors in one pass and records the sizes and operation counts.
pub fn run_benchmark(
    specs: &[(String, GenSpec)],
    mode: FaultMode,
    opts: BenchOptions,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut out = Vec::with_capacity(specs.len());
    for (id, spec) in specs {
        let model = generate_model(spec).map_err(|source| BenchError::Generate { id: id.clone(), source })?;
        let start = Instant::now();
        let kernel = compile_kernel(&model, mode, true).map_err(|source| BenchError::Compile { id: id.clone(), source })?;
        let mut e = TsEvidence::new();
        e.kernel.set(model.problem.clone(), true);
        for (i, a) in model.actions.iter().take(opts.observe_actions).enumerate() {
            e.actions.insert(a.name.clone(), i % 2 == 0);
        }
        let result = posteriors(&model, &kernel, &e, Strategy::SinglePass)
            .map_err(|source| BenchError::Inference { id: id.clone(), source })?;
        let elapsed = start.elapsed().as_nanos() as u64;
        let ops = result.ops();
        out.push(BenchRecord {
            model_id: id.clone(),
            n_system: spec.n_system,
            n_cause: spec.n_cause,
            n_action: spec.n_action,
            mode: mode.to_string(),
            nodes: kernel.node_count(),
            size_bound: model_size_bound(&model, mode),
            adds: ops.additions,
            muls: ops.multiplications,
            divs: ops.divisions,
            wall_ns: if opts.timing { elapsed } else { 0 },
        });
    }
    Ok(out)
}

/// CSV text: one `#` comment line, the header, then one row per record.
pub fn to_csv(records: &[BenchRecord], comment: &str) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv output is utf-8");
    Ok(format!("# {}\n{body}", comment.replace('\n', " ")))
}

pub fn from_csv(text: &str) -> Result<Vec<BenchRecord>, BenchError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

/// Least-squares fit of `y = a * x^b` on log-log axes; returns `(a, b)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> (f64, f64) {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let (slope, intercept) = least_squares(&logs);
    (intercept.exp(), slope)
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Coefficient of determination of the least-squares line through `points`.
pub fn linear_r2(points: &[(f64, f64)]) -> f64 {
    let (slope, intercept) = least_squares(points);
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_res: f64 = points.iter().map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Scatter plot of total operations against total variables, log-scale y.
pub fn svg_scatter(records: &[BenchRecord]) -> String {
    let (w, h, margin) = (640.0, 420.0, 60.0);
    let xs: Vec<f64> = records.iter().map(|r| r.n_vars() as f64).collect();
    let ys: Vec<f64> = records.iter().map(|r| (r.ops().max(1) as f64).log10()).collect();
    let fold = |v: &[f64], init: f64, f: fn(f64, f64) -> f64| v.iter().copied().fold(init, f);
    let (x0, x1) = (fold(&xs, f64::INFINITY, f64::min).min(0.0), fold(&xs, 1.0, f64::max));
    let (y0, y1) = (fold(&ys, f64::INFINITY, f64::min).floor(), fold(&ys, 0.0, f64::max).ceil().max(1.0));
    let y0 = if y0.is_finite() { y0.min(y1 - 1.0) } else { 0.0 };
    let px = |x: f64| margin + (x - x0) / (x1 - x0).max(1.0) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = margin,
        t = margin,
        b = h - margin,
        r = w - margin
    )
    .unwrap();
    for d in (y0 as i32)..=(y1 as i32) {
        let y = py(d as f64);
        writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#, margin - 6.0, y + 4.0).unwrap();
        writeln!(s, r##"<path d="M{margin} {y:.1} H{}" stroke="#ddd"/>"##, w - margin).unwrap();
    }
    for t in 0..=4 {
        let x = x0 + (x1 - x0) * t as f64 / 4.0;
        writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.0}</text>"#, px(x), h - margin + 18.0, x).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">variables</text>"#, w / 2.0, h - 15.0).unwrap();
    writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">operations</text>"#,
        h / 2.0,
        h / 2.0
    )
    .unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="steelblue"/>"#, px(*x), py(*y)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
