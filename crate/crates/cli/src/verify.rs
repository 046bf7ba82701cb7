//! `verify`: oracle checks listed in a configuration.

use std::path::Path;

use alexflow::flows::{reference_minimizer, FlowMode, MeasureSpec};
use alexflow::functionals::{concavity_constant, Functional, FunctionalSpec};
use alexflow::oracle::{
    verify_curvature, verify_k_convexity, verify_lipschitz, verify_variance_inequality, Report,
};
use alexflow::resolvent::{check_estimate_lower, check_estimate_upper, prox_upper, step_lower};
use alexflow::spaces::sampling::TupleSampler;
use alexflow::spaces::{distance, GeodesicBall, Point, SpaceDescriptor};
use serde_json::json;

use crate::config::{point, region, CheckConfig, CheckKind, Expectation};
use crate::{write_json, CliError, Overrides, Status};

const DEFAULT_TOLERANCE: f64 = 1e-8;
const ESTIMATE_TOLERANCE: f64 = 1e-7;

fn default_samples(kind: CheckKind) -> usize {
    match kind {
        CheckKind::Curvature => 10_000,
        _ => 1000,
    }
}

fn functional(c: &CheckConfig, g: &GeodesicBall<f64>) -> Result<FunctionalSpec<f64>, CliError> {
    let d = c
        .functional
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{:?} check needs a functional", c.kind)))?;
    Ok(FunctionalSpec::new(d.build(&c.space)?, g.clone())?)
}

fn anchors(c: &CheckConfig) -> Result<Vec<Point<f64>>, CliError> {
    c.anchors.iter().map(|a| point(&c.space, a)).collect()
}

/// Runs one check and returns its report.
pub fn run_check(c: &CheckConfig, tolerance: Option<f64>) -> Result<Report, CliError> {
    let g = region(&c.space, &c.region)?;
    let samples = c.samples.unwrap_or_else(|| default_samples(c.kind));
    let default_tol = match c.kind {
        CheckKind::Variance | CheckKind::Estimates => ESTIMATE_TOLERANCE,
        _ => DEFAULT_TOLERANCE,
    };
    let tol = tolerance.or(c.tolerance).unwrap_or(default_tol);
    let mut report = match c.kind {
        CheckKind::Curvature => {
            let side = c
                .side
                .ok_or_else(|| CliError::Config("curvature check needs a side".into()))?;
            verify_curvature(&c.space, &g, samples, side, c.seed, tol)?
        }
        CheckKind::KConvexity => {
            let f = functional(c, &g)?;
            let k = c.constant.unwrap_or(f.modulus()) + c.offset;
            verify_k_convexity(&|x: &Point<f64>| f.value(x), &g, k, samples, c.seed, tol)?
        }
        CheckKind::Lipschitz => {
            let f = functional(c, &g)?;
            let l = c.constant.unwrap_or(f.lipschitz()) + c.offset;
            verify_lipschitz(&|x: &Point<f64>| f.value(x), &g, l, samples, c.seed, tol)?
        }
        CheckKind::Concavity => concavity(c, &g, samples, tol)?,
        CheckKind::Variance => {
            let mu = MeasureSpec::squared_distances(&anchors(c)?, c.weights.as_deref(), &g)?;
            let mean = mu.mean_spec()?;
            let y = reference_minimizer(&mean)?;
            let k = c.constant.unwrap_or(mean.modulus()) + c.offset;
            verify_variance_inequality(
                &|x: &Point<f64>| mean.value(x),
                &y.point,
                k,
                &g,
                samples,
                c.seed,
                tol,
            )?
        }
        CheckKind::Estimates => estimates(c, &g, samples, tol)?,
    };
    if let Some(name) = &c.name {
        report.check = format!("{name}: {}", report.check);
    }
    Ok(report)
}

/// `-d_y²` is `(-K')`-convex for `y` in the region; the anchors are the
/// base points `y` (the center when none are given).
fn concavity(
    c: &CheckConfig,
    g: &GeodesicBall<f64>,
    samples: usize,
    tol: f64,
) -> Result<Report, CliError> {
    let k = -(c.constant.unwrap_or(concavity_constant(g))) + c.offset;
    let mut ys = anchors(c)?;
    if ys.is_empty() {
        ys.push(g.center().clone());
    }
    let mut report = Report::new(format!("concavity K'={}", -k), tol);
    let per = samples.div_ceil(ys.len());
    for (i, y) in ys.iter().enumerate() {
        let f = |x: &Point<f64>| -> alexflow::Result<f64> { Ok(-distance(x, y)?.powi(2)) };
        report.absorb(verify_k_convexity(
            &f,
            g,
            k,
            per,
            c.seed.wrapping_add(i as u64),
            tol,
        )?);
    }
    Ok(report.finish())
}

/// Per-step resolvent estimates on random instances `(f, λ, x, y)`: `f` is a
/// squared distance, a two-anchor weighted sum or a distance power.
/// Lower-mode instances whose step leaves the region are outside the
/// estimate's hypotheses and are not counted.
fn estimates(
    c: &CheckConfig,
    g: &GeodesicBall<f64>,
    samples: usize,
    tol: f64,
) -> Result<Report, CliError> {
    let mode = c.mode.unwrap_or(FlowMode::Upper);
    let space: &SpaceDescriptor<f64> = &c.space;
    match mode {
        FlowMode::Lower if !space.bound_side().has_lower() => {
            return Err(CliError::Config(format!(
                "{:?} has no lower curvature bound",
                space.kind()
            )))
        }
        FlowMode::Upper => g.check_upper_flows()?,
        _ => {}
    }
    let concavity = concavity_constant(g);
    let mut sampler = TupleSampler::new(g, 4, 3, c.seed)?;
    let mut report = Report::new(format!("estimates {mode:?} {:?}", space.kind()), tol);
    let mut skipped = 0usize;
    while report.samples < samples {
        let (p, u) = sampler.next_tuple()?;
        let (a1, a2, x, y) = (&p[0], &p[1], &p[2], &p[3]);
        let kind = (u[1] * 3.0) as usize;
        let f = match kind {
            0 => Functional::squared_distance(a1.clone()),
            1 => Functional::frechet(&[a1.clone(), a2.clone()], &[u[2], 1.0 - u[2]])?,
            _ => Functional::distance_power(a1.clone(), 1.0 + u[2])?,
        };
        // neither estimate reads the modulus
        let f = FunctionalSpec::with_samples(f, g.clone(), 100)?;
        let (lambda, residual, step) = match mode {
            FlowMode::Upper => {
                let lambda = 10f64.powf(-2.0 + 2.5 * u[0]);
                let step = prox_upper(&f, lambda, x, g)?;
                (lambda, check_estimate_upper(&step, &f, y)?, step)
            }
            FlowMode::Lower => {
                let lambda = 10f64.powf(-3.0 + 2.0 * u[0]);
                let step = step_lower(&f, lambda, x)?;
                if step.certificate.left_region {
                    skipped += 1;
                    if skipped > 10 * samples {
                        return Err(CliError::Config(
                            "almost every lower step leaves the region".into(),
                        ));
                    }
                    continue;
                }
                (lambda, check_estimate_lower(&step, &f, y, concavity)?, step)
            }
        };
        report.record(residual, || {
            json!({
                "functional": kind,
                "lambda": lambda,
                "x": x.to_vec(),
                "y": y.to_vec(),
                "output": step.output.to_vec(),
            })
        });
    }
    if skipped > 0 {
        report.check = format!("{} ({skipped} steps left the region)", report.check);
    }
    Ok(report.finish())
}

/// Whether a finished report meets the check's expectation.
pub fn meets(c: &CheckConfig, r: &Report) -> bool {
    match c.expect {
        Expectation::Pass => r.passed,
        Expectation::Violation => !r.passed && r.witness.is_some(),
    }
}

/// `verify <config>`.
pub fn verify(path: &Path, ov: &Overrides) -> Result<Status, CliError> {
    let text = crate::config::read(path)?;
    let mut cfg = crate::config::parse_verify(&text)?;
    if let Some(seed) = ov.seed {
        cfg.checks.iter_mut().for_each(|c| c.seed = seed);
    }
    let pool = ov.pool()?;
    let reports = pool.install(|| {
        use rayon::prelude::*;
        cfg.checks
            .par_iter()
            .map(|c| run_check(c, ov.tolerance))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut status = Status::Ok;
    let mut docs = Vec::new();
    for (c, r) in cfg.checks.iter().zip(&reports) {
        let ok = meets(c, r);
        println!(
            "{} {}: {} samples, worst margin {:e} (tolerance {:e}), expected {:?}",
            if ok { "ok  " } else { "FAIL" },
            r.check,
            r.samples,
            r.min_margin,
            r.tolerance,
            c.expect
        );
        if !ok {
            status = Status::Violation;
            eprintln!(
                "  worst-margin witness: {}",
                r.witness
                    .as_ref()
                    .map(|w| w.to_string())
                    .unwrap_or_default()
            );
        }
        docs.push(json!({"report": r, "expect": c.expect, "met": ok}));
    }
    let dir = ov.out_dir(cfg.output.as_ref());
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("verify_report.json"), &json!({"checks": docs}))?;
    Ok(status)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alexflow::spaces::SpaceKind;

    #[test]
    fn spider_has_no_lower_estimates() {
        let c: CheckConfig = toml::from_str(
            r#"
            kind = "estimates"
            mode = "lower"
            space = { kind = "spider", dimension = 3 }
            region = { radius = 1.0 }
            "#,
        )
        .unwrap();
        assert_eq!(c.space.kind(), SpaceKind::Spider);
        assert!(run_check(&c, None).is_err());
    }
}
