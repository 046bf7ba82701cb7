//! Multi-trial summaries: median decay of `d(x_m, reference)²`, its
//! log-log slope and an out-of-sample `C/m` envelope.

use std::io::Write;

use alexflow::flows::{fmt_num, RunRecord};
use serde::Serialize;

use crate::CliError;

/// Decay summary of a group of trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decay {
    pub trials: usize,
    /// Row indices `m` with their median `d²`.
    pub m: Vec<usize>,
    pub median: Vec<f64>,
    /// Least-squares slope and intercept of `ln median` against `ln m` on
    /// `m >= fit_from`, over log-spaced `m`.
    pub slope: f64,
    pub intercept: f64,
    pub fit_from: usize,
    /// `max m d²` over all trials and `fit_from <= m <= M/2`.
    pub envelope_constant: f64,
    /// Largest `m d² / C` over all trials and `M/2 < m <= M`.
    pub envelope_ratio: f64,
    pub envelope_holds: bool,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// About twenty `m` per decade from `from` to `to`, without repeats.
fn log_spaced(from: usize, to: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let (a, b) = ((from.max(1) as f64).ln(), (to as f64).ln());
    let count = ((b - a) / std::f64::consts::LN_10 * 20.0).ceil().max(1.0) as usize;
    for i in 0..=count {
        let m = (a + (b - a) * i as f64 / count as f64).exp().round() as usize;
        if out.last() != Some(&m) {
            out.push(m.clamp(from, to));
        }
    }
    out.dedup();
    out
}

/// Summarizes trials whose rows carry distances to a common reference.
pub fn decay<T: alexflow::Scalar>(
    runs: &[&RunRecord<T>],
    fit_from: usize,
) -> Result<Decay, CliError> {
    let first = runs
        .first()
        .ok_or_else(|| CliError::Config("no trials to aggregate".into()))?;
    let len = runs.iter().map(|r| r.rows.len()).min().unwrap_or(0);
    let m0 = first.rows.first().map_or(0, |r| r.m);
    let mut ms = Vec::with_capacity(len);
    let mut med = Vec::with_capacity(len);
    let mut d2 = vec![Vec::with_capacity(runs.len()); len];
    for i in 0..len {
        for r in runs {
            let d = r.rows[i]
                .dist_ref
                .ok_or_else(|| CliError::Config("decay needs a reference point".into()))?;
            d2[i].push(d * d);
        }
        ms.push(m0 + i);
        med.push(median(&mut d2[i].clone()));
    }
    let last = m0 + len.saturating_sub(1);
    let fit_from = fit_from.max(1).max(m0);
    if last < 2 * fit_from {
        return Err(CliError::Config(format!(
            "horizon {last} too short for a decay fit from m = {fit_from}"
        )));
    }
    let pts: Vec<(f64, f64)> = log_spaced(fit_from, last)
        .into_iter()
        .map(|m| ((m as f64).ln(), med[m - m0].max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let half = last / 2;
    let mut c = 0.0f64;
    let mut ratio = 0.0f64;
    for (i, row) in d2.iter().enumerate() {
        let m = (m0 + i) as f64;
        let worst = row.iter().copied().fold(0.0, f64::max) * m;
        if m0 + i >= fit_from && m0 + i <= half {
            c = c.max(worst);
        }
        if m0 + i > half {
            ratio = ratio.max(worst);
        }
    }
    let ratio = ratio / c;
    Ok(Decay {
        trials: runs.len(),
        m: ms,
        median: med,
        slope,
        intercept,
        fit_from,
        envelope_constant: c,
        envelope_ratio: ratio,
        envelope_holds: ratio <= 1.0,
    })
}

impl Decay {
    /// Columns `m, median_dist_sq, envelope`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| CliError::Config(format!("csv output failed: {e}"));
        w.write_record(["m", "median_dist_sq", "envelope"])
            .map_err(err)?;
        for (m, d) in self.m.iter().zip(&self.median) {
            let env = if *m == 0 {
                String::new()
            } else {
                fmt_num(self.envelope_constant / *m as f64)
            };
            w.write_record([m.to_string(), fmt_num(*d), env])
                .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn slope_in(&self, lo: f64, hi: f64) -> bool {
        self.slope >= lo && self.slope <= hi
    }
}
