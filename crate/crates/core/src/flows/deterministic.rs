//! Proximal point algorithm, cyclic proximal splitting and the envelope of
//! `d(x_{kn}, y)²` for strongly convex sums.

use serde::{Deserialize, Serialize};

use super::record::{coords_f64, FlowKind, IterateRow, Residuals, RunRecord, RunStatus};
use super::FlowOptions;
use crate::error::{invalid, Result};
use crate::functionals::{concavity_constant, FunctionalSpec};
use crate::resolvent::{
    check_estimate_lower, check_estimate_upper, prox_upper, step_lower, ResolventStep,
};
use crate::scalar::Scalar;
use crate::schedules::StepSchedule;
use crate::spaces::{distance, GeodesicBall, Point};

/// Which resolvent a flow uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    /// Moreau–Yosida proximal steps (upper curvature bound).
    Upper,
    /// Gradient-exponential steps (lower curvature bound).
    Lower,
}

fn check_start<T: Scalar>(x0: &Point<T>, region: &GeodesicBall<T>) -> Result<()> {
    if x0.space() != region.space() {
        return Err(invalid("start point and region live in different spaces"));
    }
    if !region.contains(x0, T::cst(1e-10))? {
        return Err(invalid("start point lies outside the region"));
    }
    Ok(())
}

fn dist_ref<T: Scalar>(x: &Point<T>, reference: Option<&Point<T>>) -> Result<Option<f64>> {
    reference
        .map(|y| distance(x, y).map(Scalar::as_f64))
        .transpose()
}

/// Proximal point algorithm `x_k = J_{λ_k}^f(x_{k-1})`, with `λ_k` the
/// schedule value at `k - 1`.
///
/// Certifies that `f(x_k)` is non-increasing and, given a reference point
/// `y`, that `f(x_k) - f(y) <= d(y,x_0)² / (2 Σ_{i<=k} λ_i)`.
pub fn ppa<T: Scalar>(
    f: &FunctionalSpec<T>,
    schedule: &StepSchedule<T>,
    x0: &Point<T>,
    region: &GeodesicBall<T>,
    max_k: usize,
    opts: &FlowOptions<T>,
) -> Result<RunRecord<T>> {
    if !schedule.divergent_sum() {
        return Err(invalid(
            "proximal point algorithm needs a schedule with divergent sum",
        ));
    }
    if !region.space().bound_side().has_upper() {
        return Err(invalid(
            "proximal point algorithm needs an upper curvature bound",
        ));
    }
    region.check_upper_flows()?;
    check_start(x0, region)?;
    let reference = opts.reference.as_ref();
    let mut rec = RunRecord::new(FlowKind::Ppa, region, std::slice::from_ref(f), x0);
    rec.schedule = Some(schedule.label());
    rec.reference = reference.map(coords_f64);
    let (fy, d0sq) = match reference {
        Some(y) => (f.value(y)?, distance(x0, y)?.powi(2)),
        None => (T::zero(), T::zero()),
    };
    rec.push(
        x0,
        IterateRow {
            m: 0,
            coords: vec![],
            f: f.value(x0)?.as_f64(),
            dist_ref: dist_ref(x0, reference)?,
            lambda: None,
            z: None,
            residuals: Residuals::default(),
        },
    );
    rec.mark_cycle();
    let mut x = x0.clone();
    let mut sum = T::zero();
    for k in 1..=max_k {
        let lambda = schedule.value(k - 1);
        sum = sum + lambda;
        let step = prox_upper(f, lambda, &x, region)?;
        let mut res = Residuals {
            monotone: Some((step.f_value_in - step.f_value_out).as_f64()),
            ..Residuals::default()
        };
        if let Some(y) = reference {
            let bound = d0sq / (T::cst(2.0) * sum);
            res.suboptimality = Some((bound - (step.f_value_out - fy)).as_f64());
            res.estimate = Some(check_estimate_upper(&step, f, y)?.as_f64());
        }
        let moved = distance(&x, &step.output)?;
        x = step.output;
        rec.push(
            &x,
            IterateRow {
                m: 0,
                coords: vec![],
                f: step.f_value_out.as_f64(),
                dist_ref: dist_ref(&x, reference)?,
                lambda: Some(lambda.as_f64()),
                z: None,
                residuals: res,
            },
        );
        rec.cycle_lambdas.push(lambda.as_f64());
        rec.mark_cycle();
        if opts.stop_tol.is_some_and(|tol| moved < tol) {
            rec.status = RunStatus::Stationary { m: k };
            return Ok(rec);
        }
    }
    rec.status = RunStatus::Completed;
    Ok(rec)
}

/// Cyclic proximal splitting `x_{kn+i} = J_{λ_k}^{f_i}(x_{kn+i-1})` for
/// `f = f_1 + ... + f_n`, `k = 0, ..., max_k - 1`.
///
/// Certifies the drift bound `d(x_{kn}, x_{kn+i}) <= 2 λ_k L i` (upper mode)
/// or `λ_k L i` (lower mode), where `L` is the largest Lipschitz constant,
/// and, given a reference point, the per-step resolvent estimate. In lower
/// mode a cycle whose iterate leaves the region is repeated with half the
/// step size; the reduction persists and is logged as an event.
pub fn cyclic_ppa<T: Scalar>(
    fs: &[FunctionalSpec<T>],
    schedule: &StepSchedule<T>,
    x0: &Point<T>,
    region: &GeodesicBall<T>,
    mode: FlowMode,
    max_k: usize,
    opts: &FlowOptions<T>,
) -> Result<RunRecord<T>> {
    if fs.is_empty() {
        return Err(invalid("cyclic splitting needs at least one functional"));
    }
    if !(schedule.divergent_sum() && schedule.square_summable()) {
        return Err(invalid(format!(
            "cyclic splitting needs a divergent, square-summable schedule; {} is not",
            schedule.label()
        )));
    }
    let space = region.space();
    if fs.iter().any(|f| f.space() != *space) {
        return Err(invalid("functionals and region live in different spaces"));
    }
    match mode {
        FlowMode::Upper if !space.bound_side().has_upper() => {
            return Err(invalid("upper mode needs an upper curvature bound"))
        }
        FlowMode::Upper => region.check_upper_flows()?,
        FlowMode::Lower if !space.bound_side().has_lower() => {
            return Err(invalid(format!(
                "lower mode needs a lower curvature bound; {:?} has none",
                space.kind()
            )))
        }
        FlowMode::Lower => {}
    }
    check_start(x0, region)?;
    let reference = opts.reference.as_ref();
    let lipschitz = fs.iter().map(|f| f.lipschitz()).fold(T::zero(), T::max);
    let concavity = concavity_constant(region);
    let total = |x: &Point<T>| -> Result<T> { fs.iter().map(|f| f.value(x)).sum() };

    let mut rec = RunRecord::new(FlowKind::CyclicPpa, region, fs, x0);
    rec.schedule = Some(schedule.label());
    rec.reference = reference.map(coords_f64);
    rec.push(
        x0,
        IterateRow {
            m: 0,
            coords: vec![],
            f: total(x0)?.as_f64(),
            dist_ref: dist_ref(x0, reference)?,
            lambda: None,
            z: None,
            residuals: Residuals::default(),
        },
    );
    rec.mark_cycle();

    let mut shrink = T::one();
    let mut x = x0.clone();
    let drift_rate = match mode {
        FlowMode::Upper => T::cst(2.0) * lipschitz,
        FlowMode::Lower => lipschitz,
    };
    for k in 0..max_k {
        let (lambda, steps) = loop {
            let lambda = schedule.value(k) * shrink;
            match run_cycle(fs, lambda, &x, region, mode)? {
                Some(steps) => break (lambda, steps),
                None => {
                    shrink = shrink / T::cst(2.0);
                    rec.event(format!(
                        "cycle {k}: iterate left the region; step factor reduced to {}",
                        shrink.as_f64()
                    ));
                    if shrink < T::cst(1e-30) {
                        return Err(invalid(
                            "step size collapsed while keeping iterates in the region",
                        ));
                    }
                }
            }
        };
        let start = x.clone();
        let mut max_move = T::zero();
        for (i, (f, step)) in fs.iter().zip(&steps).enumerate() {
            let drift =
                drift_rate * lambda * T::cst((i + 1) as f64) - distance(&start, &step.output)?;
            let estimate = match reference {
                Some(y) => Some(match mode {
                    FlowMode::Upper => check_estimate_upper(step, f, y)?,
                    FlowMode::Lower => check_estimate_lower(step, f, y, concavity)?,
                }),
                None => None,
            };
            max_move = max_move.max(distance(&step.input, &step.output)?);
            rec.push(
                &step.output,
                IterateRow {
                    m: 0,
                    coords: vec![],
                    f: total(&step.output)?.as_f64(),
                    dist_ref: dist_ref(&step.output, reference)?,
                    lambda: Some(lambda.as_f64()),
                    z: None,
                    residuals: Residuals {
                        drift: Some(drift.as_f64()),
                        estimate: estimate.map(Scalar::as_f64),
                        ..Residuals::default()
                    },
                },
            );
        }
        x = steps.last().unwrap().output.clone();
        rec.cycle_lambdas.push(lambda.as_f64());
        rec.mark_cycle();
        if opts.stop_tol.is_some_and(|tol| max_move < tol) {
            rec.status = RunStatus::Stationary {
                m: rec.iterations(),
            };
            return Ok(rec);
        }
    }
    rec.status = RunStatus::Completed;
    Ok(rec)
}

/// One cycle from `x`; `None` if a lower-mode iterate left the region.
fn run_cycle<T: Scalar>(
    fs: &[FunctionalSpec<T>],
    lambda: T,
    x: &Point<T>,
    region: &GeodesicBall<T>,
    mode: FlowMode,
) -> Result<Option<Vec<ResolventStep<T>>>> {
    let mut steps: Vec<ResolventStep<T>> = Vec::with_capacity(fs.len());
    let mut cur = x.clone();
    for f in fs {
        let step = match mode {
            FlowMode::Upper => prox_upper(f, lambda, &cur, region)?,
            FlowMode::Lower => {
                let s = step_lower(f, lambda, &cur)?;
                if !region.contains(&s.output, T::cst(1e-10))? {
                    return Ok(None);
                }
                s
            }
        };
        cur = step.output.clone();
        steps.push(step);
    }
    Ok(Some(steps))
}

/// Additive constant of the envelope recursion: `2L²n(n+1)` in upper mode,
/// `L²n(K'/2 + n - 1)` in lower mode with `K'` the concavity constant.
pub fn envelope_constant<T: Scalar>(lipschitz: T, n: usize, mode: FlowMode, concavity: T) -> T {
    let n = T::cst(n as f64);
    let l2n = lipschitz * lipschitz * n;
    match mode {
        FlowMode::Upper => T::cst(2.0) * l2n * (n + T::one()),
        FlowMode::Lower => l2n * (concavity / T::cst(2.0) + n - T::one()),
    }
}

/// `a_0, ..., a_N` with `a_{k+1} = (1 - λ_k K) a_k + c λ_k²`.
pub fn envelope_sequence<T: Scalar>(lambdas: &[T], k: T, c: T, a0: T) -> Vec<T> {
    let mut out = Vec::with_capacity(lambdas.len() + 1);
    let mut a = a0;
    out.push(a);
    for &l in lambdas {
        a = (T::one() - l * k) * a + c * l * l;
        out.push(a);
    }
    out
}

/// `a_{N}` for `N = lambdas.len() >= 1` from the product formula
/// `Π_{i<N}(1 - λ_i K) a_0 + c [Σ_{j=1}^{N-1} λ_{j-1}² Π_{i=j}^{N-1}(1 - λ_i K) + λ_{N-1}²]`.
pub fn envelope_closed_form<T: Scalar>(lambdas: &[T], k: T, c: T, a0: T) -> Result<T> {
    let n = lambdas.len();
    if n == 0 {
        return Ok(a0);
    }
    let last = n - 1;
    // suffix products Π_{i=j}^{last}
    let mut suffix = T::one();
    let mut sum = T::zero();
    for j in (1..=last).rev() {
        suffix = suffix * (T::one() - lambdas[j] * k);
        sum = sum + lambdas[j - 1] * lambdas[j - 1] * suffix;
    }
    let full = suffix * (T::one() - lambdas[0] * k);
    Ok(full * a0 + c * (sum + lambdas[last] * lambdas[last]))
}

/// Envelope `a_k` of `d(x_{kn}, y)²` along a run with a reference point:
/// `a_0 = d(x_0, y)²` and `a_{k+1} = (1 - λ_k K) a_k + c λ_k²` with `c` from
/// [`envelope_constant`]. Stores the sequence in the record and writes the
/// margins `a_k - d(x_{kn}, y)²` into the cycle-start rows.
pub fn envelope_kconvex<T: Scalar>(
    run: &mut RunRecord<T>,
    k: T,
    lipschitz: T,
    n: usize,
    mode: FlowMode,
    concavity: T,
) -> Result<Vec<T>> {
    if !(k > T::zero()) {
        return Err(invalid("envelope needs a positive modulus"));
    }
    let lambdas: Vec<T> = run.cycle_lambdas.iter().map(|l| T::cst(*l)).collect();
    if let Some(l) = lambdas.iter().find(|l| !(**l * k < T::one())) {
        return Err(invalid(format!(
            "envelope needs lambda_k K < 1, got {}",
            (*l * k).as_f64()
        )));
    }
    let d0 = run
        .rows
        .first()
        .and_then(|r| r.dist_ref)
        .ok_or_else(|| invalid("envelope needs a run with a reference point"))?;
    let a0 = T::cst(d0 * d0);
    let c = envelope_constant(lipschitz, n, mode, concavity);
    let seq = envelope_sequence(&lambdas, k, c, a0);
    let rows: Vec<usize> = run.cycle_rows().to_vec();
    for (a, idx) in seq.iter().zip(rows) {
        let row = &mut run.rows[idx];
        let d = row.dist_ref.unwrap_or(f64::NAN);
        row.residuals.envelope = Some(a.as_f64() - d * d);
    }
    run.envelope = seq.iter().map(|a| a.as_f64()).collect();
    Ok(seq)
}
