//! Trajectory records with per-iterate certificates, exported as CSV and
//! JSON.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::json;

use crate::error::{invalid, Result};
use crate::functionals::FunctionalSpec;
use crate::scalar::Scalar;
use crate::spaces::{GeodesicBall, Point, SpaceDescriptor};
use crate::tolerance::Tolerances;

/// Certificate residuals of one iterate; each is nonnegative when the
/// corresponding inequality holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Residuals {
    /// `f(x_{m-1}) - f(x_m)`
    pub monotone: Option<f64>,
    /// `d(y,x_0)²/(2Σλ) - (f(x_m) - f(y))`
    pub suboptimality: Option<f64>,
    /// intra-cycle drift bound minus `d(x_{kn}, x_{kn+i})`
    pub drift: Option<f64>,
    /// `a_k - d(x_{kn}, y)²`
    pub envelope: Option<f64>,
    /// `Z_k - f(S_k)`
    pub jensen: Option<f64>,
    /// per-step resolvent estimate at the reference point
    pub estimate: Option<f64>,
}

impl Residuals {
    fn named(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("res_monotone", self.monotone),
            ("res_suboptimality", self.suboptimality),
            ("res_drift", self.drift),
            ("res_envelope", self.envelope),
            ("res_jensen", self.jensen),
            ("res_estimate", self.estimate),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateRow {
    pub m: usize,
    pub coords: Vec<f64>,
    pub f: f64,
    /// `d(x_m, reference)`
    pub dist_ref: Option<f64>,
    /// step size used to reach `x_m`
    pub lambda: Option<f64>,
    /// running average `Z_m` of Jensen runs
    pub z: Option<f64>,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Ppa,
    CyclicPpa,
    StochasticPpa,
    InductiveMean,
    Jensen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RunStatus {
    Running,
    /// Ran to the iteration limit.
    Completed,
    /// Stopped because a full cycle moved less than the stopping tolerance.
    Stationary {
        m: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub m: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalSummary {
    pub modulus: f64,
    pub lipschitz: f64,
    pub certified: bool,
}

/// A failed certificate: the row, the residual column and its value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub m: usize,
    pub column: String,
    pub residual: f64,
    pub tolerance: f64,
}

/// Full trajectory of a flow with its certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct RunRecord<T> {
    pub flow: FlowKind,
    pub space: SpaceDescriptor<T>,
    pub region_center: Vec<f64>,
    pub region_radius: f64,
    pub functionals: Vec<FunctionalSummary>,
    pub schedule: Option<String>,
    /// Step size of each cycle (one entry per cycle).
    pub cycle_lambdas: Vec<f64>,
    pub start: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub generator: Option<&'static str>,
    pub rows: Vec<IterateRow>,
    pub envelope: Vec<f64>,
    pub events: Vec<Event>,
    pub extras: BTreeMap<String, f64>,
    pub status: RunStatus,
    #[serde(skip)]
    m_offset: usize,
    #[serde(skip)]
    last: Point<T>,
    #[serde(skip)]
    cycle_rows: Vec<usize>,
}

pub(crate) fn coords_f64<T: Scalar>(p: &Point<T>) -> Vec<f64> {
    p.to_vec().into_iter().map(Scalar::as_f64).collect()
}

impl<T: Scalar> RunRecord<T> {
    pub(crate) fn new(
        flow: FlowKind,
        region: &GeodesicBall<T>,
        functionals: &[FunctionalSpec<T>],
        start: &Point<T>,
    ) -> Self {
        Self {
            flow,
            space: *region.space(),
            region_center: coords_f64(region.center()),
            region_radius: region.radius().as_f64(),
            functionals: functionals
                .iter()
                .map(|f| FunctionalSummary {
                    modulus: f.modulus().as_f64(),
                    lipschitz: f.lipschitz().as_f64(),
                    certified: f.is_certified(),
                })
                .collect(),
            schedule: None,
            cycle_lambdas: Vec::new(),
            start: coords_f64(start),
            reference: None,
            seed: None,
            generator: None,
            rows: Vec::new(),
            envelope: Vec::new(),
            events: Vec::new(),
            extras: BTreeMap::new(),
            status: RunStatus::Running,
            m_offset: 0,
            last: start.clone(),
            cycle_rows: Vec::new(),
        }
    }

    /// Index of the first row (1 for flows whose first iterate is `S_1`).
    pub(crate) fn start_at(&mut self, m: usize) {
        self.m_offset = m;
    }

    /// Appends the next iterate; rows are dense in `m`.
    pub(crate) fn push(&mut self, x: &Point<T>, mut row: IterateRow) {
        row.m = self.m_offset + self.rows.len();
        row.coords = coords_f64(x);
        self.rows.push(row);
        self.last = x.clone();
    }

    /// Marks the most recent row as the start of a cycle.
    pub(crate) fn mark_cycle(&mut self) {
        self.cycle_rows.push(self.rows.len() - 1);
    }

    pub(crate) fn event(&mut self, message: impl Into<String>) {
        self.events.push(Event {
            m: (self.m_offset + self.rows.len()).saturating_sub(1),
            message: message.into(),
        });
    }

    /// The last iterate.
    pub fn last_point(&self) -> &Point<T> {
        &self.last
    }

    /// Row indices `m = kn` at which cycles start.
    pub fn cycle_rows(&self) -> &[usize] {
        &self.cycle_rows
    }

    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    /// First residual below its tolerance, if any. Terminal residuals are
    /// the `extras` whose key starts with `res_`.
    pub fn first_violation(&self, tol: &Tolerances) -> Option<Violation> {
        let terminal = self.extras.iter().filter(|(k, _)| k.starts_with("res_"));
        for (key, v) in terminal {
            if !(*v >= -tol.certificate) {
                return Some(Violation {
                    m: self.rows.last().map_or(0, |r| r.m),
                    column: key.clone(),
                    residual: *v,
                    tolerance: tol.certificate,
                });
            }
        }
        for row in &self.rows {
            for (column, value) in row.residuals.named() {
                let t = if column == "res_estimate" {
                    tol.estimate
                } else {
                    tol.certificate
                };
                if let Some(v) = value {
                    if !(v >= -t) {
                        return Some(Violation {
                            m: row.m,
                            column: column.to_string(),
                            residual: v,
                            tolerance: t,
                        });
                    }
                }
            }
        }
        None
    }

    /// Smallest value of each residual column over the run.
    pub fn worst_residuals(&self) -> BTreeMap<&'static str, f64> {
        let mut out = BTreeMap::new();
        for row in &self.rows {
            for (column, value) in row.residuals.named() {
                if let Some(v) = value {
                    let e = out.entry(column).or_insert(f64::INFINITY);
                    if v < *e || v.is_nan() {
                        *e = v;
                    }
                }
            }
        }
        out
    }

    /// CSV header: `m`, one column per coordinate, then the fixed columns.
    pub fn csv_header(&self) -> Vec<String> {
        let dim = self.start.len();
        let mut h = vec!["m".to_string()];
        h.extend((0..dim).map(|i| format!("x{i}")));
        for c in ["f", "dist_ref", "lambda", "z"] {
            h.push(c.into());
        }
        h.extend(
            Residuals::default()
                .named()
                .iter()
                .map(|(n, _)| n.to_string()),
        );
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| invalid(format!("csv output failed: {e}"));
        w.write_record(self.csv_header()).map_err(io)?;
        for row in &self.rows {
            let mut rec = vec![row.m.to_string()];
            rec.extend(row.coords.iter().map(|c| fmt_num(*c)));
            rec.push(fmt_num(row.f));
            for v in [row.dist_ref, row.lambda, row.z] {
                rec.push(v.map(fmt_num).unwrap_or_default());
            }
            for (_, v) in row.residuals.named() {
                rec.push(v.map(fmt_num).unwrap_or_default());
            }
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()
            .map_err(|e| invalid(format!("csv output failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// JSON document with the run metadata, the rows and an optional echo of
    /// the configuration that produced it.
    pub fn to_json(&self, config: Option<serde_json::Value>) -> serde_json::Value {
        let mut doc = serde_json::to_value(self).expect("run record serializes");
        doc["config"] = config.unwrap_or(serde_json::Value::Null);
        doc["worst_residuals"] = json!(self.worst_residuals());
        doc
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}
