//! `run` and `sweep`.

use std::path::Path;

use alexflow::flows::{
    cyclic_ppa, envelope_kconvex, expectation_and_variance, inductive_mean, jensen_run, ppa,
    reference_minimizer, stochastic_ppa, Event, FlowOptions, RunRecord, Violation,
};
use alexflow::functionals::{concavity_constant, Functional, FunctionalSpec};
use alexflow::rng::child_seed;
use alexflow::schedules::StepSchedule;
use alexflow::spaces::{GeodesicBall, Point};
use alexflow::Tolerances;
use rayon::prelude::*;
use serde_json::json;

use crate::aggregate::{decay, Decay};
use crate::config::{point, FlowChoice, ReferenceChoice, RunConfig};
use crate::{write_json, CliError, Overrides, Status};

pub type Record = RunRecord<f64>;

/// Seed of trial `i`: the base seed itself for single-trial runs.
pub fn trial_seed(base: u64, trials: usize, i: usize) -> u64 {
    if trials == 1 {
        base
    } else {
        child_seed(base, i as u64)
    }
}

/// Reference point for the certificates, computed once for all trials.
fn reference(cfg: &RunConfig, g: &GeodesicBall<f64>) -> Result<Option<Point<f64>>, CliError> {
    let name = match &cfg.flow.reference {
        ReferenceChoice::Point(c) => return Ok(Some(point(&cfg.space, c)?)),
        ReferenceChoice::Named(n) => n.as_str(),
    };
    match name {
        "none" => return Ok(None),
        "minimizer" => {}
        other => return Err(CliError::Config(format!("unknown reference {other:?}"))),
    }
    let y = match cfg.flow.kind {
        FlowChoice::Ppa | FlowChoice::CyclicPpa => {
            let fs = cfg.functionals(g)?;
            let sum = match fs.as_slice() {
                [f] => f.clone(),
                _ => FunctionalSpec::new(
                    Functional::weighted_sum(
                        fs.iter().map(|f| (1.0, f.functional().clone())).collect(),
                    )?,
                    g.clone(),
                )?,
            };
            reference_minimizer(&sum)?.point
        }
        FlowChoice::StochasticPpa | FlowChoice::Jensen => {
            let mu = cfg.measure(g)?;
            let ex = expectation_and_variance(&mu, cfg.seed)?;
            if !ex.variance_check.passed {
                return Err(CliError::Config(format!(
                    "variance inequality fails at the computed expectation: {:?}",
                    ex.variance_check
                )));
            }
            ex.mean.point
        }
        FlowChoice::InductiveMean => {
            let anchors = cfg.anchors()?;
            let n = anchors.len();
            let uniform = vec![1.0 / n as f64; n];
            let m = cfg.measure_config();
            let g_fn = Functional::frechet(&anchors, m.weights.as_deref().unwrap_or(&uniform))?;
            reference_minimizer(&FunctionalSpec::new(g_fn, g.clone())?)?.point
        }
    };
    Ok(Some(y))
}

fn flow_options(cfg: &RunConfig, reference: Option<Point<f64>>) -> FlowOptions<f64> {
    FlowOptions {
        reference,
        stop_tol: (cfg.flow.stop_tol > 0.0).then_some(cfg.flow.stop_tol),
    }
}

/// Envelope of a cyclic run against its reference, when it applies.
fn attach_envelope(
    cfg: &RunConfig,
    g: &GeodesicBall<f64>,
    fs: &[FunctionalSpec<f64>],
    rec: &mut Record,
) -> Result<(), CliError> {
    if cfg.flow.envelope == Some(false) {
        return Ok(());
    }
    let k: f64 = fs.iter().map(|f| f.modulus()).sum();
    let l = fs.iter().map(|f| f.lipschitz()).fold(0.0, f64::max);
    let lam0 = rec.cycle_lambdas.iter().copied().fold(0.0, f64::max);
    let reason = if rec.reference.is_none() {
        Some("no reference point".to_string())
    } else if !(k > 0.0) {
        Some(format!("modulus {k} is not positive"))
    } else if !(lam0 * k < 1.0) {
        Some(format!("lambda K = {} is not below 1", lam0 * k))
    } else {
        None
    };
    match (reason, cfg.flow.envelope) {
        (Some(r), Some(true)) => Err(CliError::Config(format!("envelope does not apply: {r}"))),
        (Some(r), _) => {
            rec.events.push(Event {
                m: 0,
                message: format!("envelope skipped: {r}"),
            });
            Ok(())
        }
        (None, _) => {
            envelope_kconvex(rec, k, l, fs.len(), cfg.flow.mode, concavity_constant(g))?;
            Ok(())
        }
    }
}

/// One trial of the configured flow.
pub fn run_trial(
    cfg: &RunConfig,
    schedule: Option<&StepSchedule<f64>>,
    g: &GeodesicBall<f64>,
    reference: Option<Point<f64>>,
    seed: u64,
) -> Result<Record, CliError> {
    let opts = flow_options(cfg, reference);
    let max_k = cfg.flow.max_k;
    let need = || {
        schedule
            .copied()
            .ok_or_else(|| CliError::Config(format!("{:?} needs a [schedule]", cfg.flow.kind)))
    };
    let rec = match cfg.flow.kind {
        FlowChoice::Ppa => {
            let fs = cfg.functionals(g)?;
            let [f] = fs.as_slice() else {
                return Err(CliError::Config("ppa takes exactly one functional".into()));
            };
            ppa(f, &need()?, &cfg.start(g)?, g, max_k, &opts)?
        }
        FlowChoice::CyclicPpa => {
            let fs = cfg.functionals(g)?;
            let mut rec = cyclic_ppa(
                &fs,
                &need()?,
                &cfg.start(g)?,
                g,
                cfg.flow.mode,
                max_k,
                &opts,
            )?;
            attach_envelope(cfg, g, &fs, &mut rec)?;
            rec
        }
        FlowChoice::StochasticPpa => {
            let mu = cfg.measure(g)?;
            stochastic_ppa(&mu, &need()?, &cfg.start(g)?, seed, max_k, &opts)?
        }
        FlowChoice::InductiveMean => {
            let anchors = cfg.anchors()?;
            let m = cfg.measure_config();
            let uniform = vec![1.0 / anchors.len().max(1) as f64; anchors.len()];
            let weights = match (&m.weights, m.random) {
                (Some(w), _) => Some(w.as_slice()),
                (None, true) => Some(uniform.as_slice()),
                (None, false) => None,
            };
            inductive_mean(&anchors, weights, g, seed, max_k, &opts)?
        }
        FlowChoice::Jensen => {
            let mu = cfg.measure(g)?;
            let j = cfg
                .jensen
                .as_ref()
                .ok_or_else(|| CliError::Config("jensen needs a [jensen] functional".into()))?;
            let f = FunctionalSpec::new(j.functional.build(&cfg.space)?, g.clone())?;
            jensen_run(&mu, &f, seed, max_k, &opts)?
        }
    };
    Ok(rec)
}

/// Outcome of a group of trials.
pub struct Group {
    pub seeds: Vec<u64>,
    pub records: Vec<Record>,
    pub violation: Option<(u64, Violation)>,
    pub decay: Option<Decay>,
}

/// Runs every trial of `cfg` with `schedule`, in parallel on `pool`.
pub fn run_group(
    cfg: &RunConfig,
    schedule: Option<&StepSchedule<f64>>,
    base_seed: u64,
    tol: &Tolerances,
    pool: &rayon::ThreadPool,
) -> Result<Group, CliError> {
    let g = cfg.region()?;
    let reference = reference(cfg, &g)?;
    let seeds: Vec<u64> = (0..cfg.trials)
        .map(|i| trial_seed(base_seed, cfg.trials, i))
        .collect();
    let records = pool.install(|| {
        seeds
            .par_iter()
            .map(|s| run_trial(cfg, schedule, &g, reference.clone(), *s))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let violation = seeds
        .iter()
        .zip(&records)
        .find_map(|(s, r)| r.first_violation(tol).map(|v| (*s, v)));
    let fit_from = cfg.sweep.as_ref().map_or(10, |s| s.fit_from);
    let decay = if records.len() > 1 && records[0].reference.is_some() {
        let refs: Vec<&Record> = records.iter().collect();
        Some(decay(&refs, fit_from)?)
    } else {
        None
    };
    Ok(Group {
        seeds,
        records,
        violation,
        decay,
    })
}

pub(crate) fn tolerances(cfg_tol: Option<f64>, ov: &Overrides) -> Tolerances {
    match ov.tolerance.or(cfg_tol) {
        Some(t) => Tolerances::default().with_certificate(t),
        None => Tolerances::default(),
    }
}

fn config_echo(text: &str) -> serde_json::Value {
    toml::from_str::<toml::Value>(text)
        .ok()
        .and_then(|v| serde_json::to_value(v).ok())
        .unwrap_or(serde_json::Value::Null)
}

/// Writes per-trial CSV/JSON and the aggregate of a group into `dir`.
fn write_group(
    dir: &Path,
    label: &str,
    group: &Group,
    echo: &serde_json::Value,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let single = group.records.len() == 1;
    for (i, (seed, rec)) in group.seeds.iter().zip(&group.records).enumerate() {
        let stem = if single {
            label.to_string()
        } else {
            format!("{label}_trial{i:03}")
        };
        let file = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        rec.write_csv(std::io::BufWriter::new(file))?;
        let mut doc = rec.to_json(Some(echo.clone()));
        doc["trial_seed"] = json!(seed);
        write_json(&dir.join(format!("{stem}.json")), &doc)?;
    }
    if let Some(d) = &group.decay {
        let file = std::fs::File::create(dir.join(format!("{label}_median_decay.csv")))?;
        d.write_csv(std::io::BufWriter::new(file))?;
        let summary = json!({
            "trials": d.trials,
            "slope": d.slope,
            "intercept": d.intercept,
            "fit_from": d.fit_from,
            "envelope_constant": d.envelope_constant,
            "envelope_ratio": d.envelope_ratio,
            "envelope_holds": d.envelope_holds,
        });
        write_json(&dir.join(format!("{label}_summary.json")), &summary)?;
    }
    Ok(())
}

fn report_violation(label: &str, v: &(u64, Violation), rec: Option<&Record>) {
    let (seed, v) = v;
    eprintln!(
        "{label}: certificate {} failed at m = {} (seed {seed}): residual {:e} below -{:e}",
        v.column, v.m, v.residual, v.tolerance
    );
    if let Some(row) = rec.and_then(|r| r.rows.iter().find(|row| row.m == v.m)) {
        eprintln!("  row: {}", serde_json::to_string(row).unwrap_or_default());
    }
}

/// `run <config>`.
pub fn run(path: &Path, ov: &Overrides) -> Result<Status, CliError> {
    let text = crate::config::read(path)?;
    let cfg = crate::config::parse_run(&text)?;
    let tol = tolerances(cfg.tolerance, ov);
    let pool = ov.pool()?;
    let seed = ov.seed.unwrap_or(cfg.seed);
    let schedule = cfg.schedule;
    let group = run_group(&cfg, schedule.as_ref(), seed, &tol, &pool)?;
    let dir = ov.out_dir(cfg.output.as_ref());
    let label = cfg.label();
    let mut echo = config_echo(&text);
    echo["effective_seed"] = json!(seed);
    write_group(&dir, &label, &group, &echo)?;
    summarize(&label, &group);
    Ok(match &group.violation {
        Some(v) => {
            let rec = group
                .seeds
                .iter()
                .position(|s| *s == v.0)
                .map(|i| &group.records[i]);
            report_violation(&label, v, rec);
            Status::Violation
        }
        None => Status::Ok,
    })
}

fn summarize(label: &str, group: &Group) {
    let iterations: usize = group.records.iter().map(|r| r.iterations()).sum();
    println!(
        "{label}: {} trial(s), {iterations} iterations, certificates {}",
        group.records.len(),
        if group.violation.is_some() {
            "FAILED"
        } else {
            "ok"
        }
    );
    for r in &group.records {
        for e in &r.events {
            println!("  event at m = {}: {}", e.m, e.message);
        }
    }
    if let Some(d) = &group.decay {
        println!(
            "  median decay slope {:.4}, envelope C = {:.6e} ({})",
            d.slope,
            d.envelope_constant,
            if d.envelope_holds {
                "holds"
            } else {
                "exceeded"
            }
        );
    }
}

/// `sweep <config>`: every schedule of the `[sweep]` grid, each with all
/// trials, plus a summary table.
pub fn sweep(path: &Path, ov: &Overrides) -> Result<Status, CliError> {
    let text = crate::config::read(path)?;
    let cfg = crate::config::parse_run(&text)?;
    let tol = tolerances(cfg.tolerance, ov);
    let pool = ov.pool()?;
    let seed = ov.seed.unwrap_or(cfg.seed);
    let dir = ov.out_dir(cfg.output.as_ref());
    let label = cfg.label();
    let mut schedules: Vec<Option<StepSchedule<f64>>> = cfg
        .sweep
        .as_ref()
        .map(|s| s.schedules.iter().copied().map(Some).collect())
        .unwrap_or_default();
    if schedules.is_empty() {
        schedules.push(cfg.schedule);
    }
    let mut echo = config_echo(&text);
    echo["effective_seed"] = json!(seed);
    std::fs::create_dir_all(&dir)?;
    let file = std::fs::File::create(dir.join("sweep_summary.csv"))?;
    let mut table = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let err = |e: csv::Error| CliError::Config(format!("csv output failed: {e}"));
    table
        .write_record([
            "cell",
            "schedule",
            "trials",
            "slope",
            "intercept",
            "envelope_constant",
            "envelope_holds",
            "certificates",
        ])
        .map_err(err)?;
    let mut status = Status::Ok;
    for (i, schedule) in schedules.iter().enumerate() {
        let group = run_group(&cfg, schedule.as_ref(), seed, &tol, &pool)?;
        let cell_dir = dir.join(format!("cell{i:02}"));
        let mut cell_echo = echo.clone();
        cell_echo["sweep_schedule"] = json!(schedule);
        write_group(&cell_dir, &label, &group, &cell_echo)?;
        let sched = schedule.map(|s| s.label()).unwrap_or_default();
        println!("cell {i}: {sched}");
        summarize(&label, &group);
        let (slope, intercept, c, holds) = match &group.decay {
            Some(d) => (
                alexflow::flows::fmt_num(d.slope),
                alexflow::flows::fmt_num(d.intercept),
                alexflow::flows::fmt_num(d.envelope_constant),
                d.envelope_holds.to_string(),
            ),
            None => Default::default(),
        };
        let certs = if group.violation.is_some() {
            "fail"
        } else {
            "pass"
        };
        table
            .write_record([
                i.to_string(),
                sched,
                group.records.len().to_string(),
                slope,
                intercept,
                c,
                holds,
                certs.into(),
            ])
            .map_err(err)?;
        if let Some(v) = &group.violation {
            let rec = group
                .seeds
                .iter()
                .position(|s| *s == v.0)
                .map(|j| &group.records[j]);
            report_violation(&format!("{label} cell {i}"), v, rec);
            status = Status::Violation;
        }
    }
    table.flush()?;
    Ok(status)
}
