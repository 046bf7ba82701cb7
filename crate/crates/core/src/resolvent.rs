//! Resolvents `J_λ^f`: the Moreau–Yosida proximal step for spaces with an
//! upper curvature bound and the gradient-exponential step for spaces with a
//! lower bound, each with per-step certificates.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::functionals::{Functional, FunctionalSpec};
use crate::scalar::Scalar;
use crate::spaces::sampling::sample_directions;
use crate::spaces::{
    distance, geodesic_point, grad_exp, inner_product, log_map, project_to_ball, GeodesicBall,
    Point, SpaceKind, TangentVector,
};

/// Iteration cap of the inner proximal solver.
pub const MAX_INNER_ITERATIONS: usize = 10_000;
/// The inner solver stops once successive iterates are this close.
pub const INNER_STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventMode {
    UpperProx,
    LowerGrad,
}

/// How the proximal subproblem was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "path")]
pub enum SolverPath {
    /// Squared distance: point on the geodesic toward the anchor.
    ClosedForm,
    /// Distance (`p = 1`): move `λw` toward the anchor, stopping on it.
    SoftThreshold,
    /// Other powers: bisection on the geodesic toward the anchor.
    SegmentSearch,
    /// Projected geodesic descent.
    Descent { iterations: usize },
    /// Spider: per-leg bisection, best leg wins. `tie` is set when two legs
    /// gave equal values and the lower index was taken.
    LegSearch { tie: bool },
    /// Gradient-exponential step.
    GradientExp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepCertificate<T> {
    pub path: SolverPath,
    /// Upper: `f(x) - f(J) - d(x,J)²/(2λ)`; lower: `λ|∇₋f|(x) - d(x,J)`.
    /// Both are nonnegative for a correct step.
    pub step_gap: T,
    /// Lower mode: the output left the region.
    pub left_region: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventStep<T> {
    pub input: Point<T>,
    pub output: Point<T>,
    pub lambda: T,
    pub mode: ResolventMode,
    pub f_value_in: T,
    pub f_value_out: T,
    /// `|∇₋f|(input)`, recorded in lower mode.
    pub absolute_gradient: Option<T>,
    pub certificate: StepCertificate<T>,
}

impl<T: Scalar> ResolventStep<T> {
    pub fn displacement(&self) -> Result<T> {
        distance(&self.input, &self.output)
    }
}

/// `(w, anchor, p)` when `f` is `w · d(·, anchor)^p`.
fn single_power_term<T: Scalar>(f: &Functional<T>) -> Option<(T, &Point<T>, T)> {
    match f {
        Functional::SquaredDistance(a) => Some((T::one(), a, T::cst(2.0))),
        Functional::DistancePower { anchor, p } => Some((T::one(), anchor, *p)),
        Functional::WeightedSum(terms) if terms.len() == 1 => {
            let (w, inner) = &terms[0];
            single_power_term(inner).map(|(v, a, p)| (*w * v, a, p))
        }
        _ => None,
    }
}

/// Moreau–Yosida resolvent: the minimizer over `region` of
/// `y ↦ f(y) + d(x,y)²/(2λ)`.
pub fn prox_upper<T: Scalar>(
    f: &FunctionalSpec<T>,
    lambda: T,
    x: &Point<T>,
    region: &GeodesicBall<T>,
) -> Result<ResolventStep<T>> {
    let space = f.space();
    if !space.bound_side().has_upper() {
        return Err(invalid("proximal step needs an upper curvature bound"));
    }
    if *x.space() != space || *region.space() != space {
        return Err(invalid(
            "point, region and functional live in different spaces",
        ));
    }
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(invalid(format!("step size must be positive, got {lambda}")));
    }
    region.check_upper_flows()?;

    let tol = T::cst(1e-12) * (T::one() + region.radius());
    let closed = single_power_term(f.functional()).filter(|(_, a, p)| {
        *p >= T::one()
            && region.contains(a, tol).unwrap_or(false)
            && region.contains(x, tol).unwrap_or(false)
    });
    let (output, path) = match closed {
        Some((w, a, p)) if p == T::cst(2.0) => {
            let two_lw = T::cst(2.0) * lambda * w;
            (
                geodesic_point(x, a, two_lw / (T::one() + two_lw))?,
                SolverPath::ClosedForm,
            )
        }
        Some((w, a, p)) if p == T::one() => {
            let d = distance(x, a)?;
            let out = if d <= lambda * w {
                a.clone()
            } else {
                geodesic_point(x, a, lambda * w / d)?
            };
            (out, SolverPath::SoftThreshold)
        }
        Some((w, a, p)) => {
            let d = distance(x, a)?;
            let t = if d == T::zero() {
                T::zero()
            } else {
                segment_minimizer(w, p, lambda, d) / d
            };
            (geodesic_point(x, a, t)?, SolverPath::SegmentSearch)
        }
        None if space.kind() == SpaceKind::Spider => {
            let (y, tie) = solve_spider(f.functional(), lambda, x, region)?;
            (y, SolverPath::LegSearch { tie })
        }
        None => {
            let (y, iterations) = solve_descent(f, lambda, x, region)?;
            (
                project_to_ball(&y, region)?,
                SolverPath::Descent { iterations },
            )
        }
    };
    let f_value_in = f.value(x)?;
    let f_value_out = f.value(&output)?;
    let d = distance(x, &output)?;
    Ok(ResolventStep {
        input: x.clone(),
        output,
        lambda,
        mode: ResolventMode::UpperProx,
        f_value_in,
        f_value_out,
        absolute_gradient: None,
        certificate: StepCertificate {
            path,
            step_gap: f_value_in - f_value_out - d * d / (T::cst(2.0) * lambda),
            left_region: false,
        },
    })
}

/// Distance `s` from `x` minimizing `w (d - s)^p + s²/(2λ)` on `[0, d]`.
/// The minimizer of a single power term lies on the geodesic from `x` to
/// the anchor, and this is `h` restricted to it.
fn segment_minimizer<T: Scalar>(w: T, p: T, lambda: T, d: T) -> T {
    let slope = |s: T| s / lambda - w * p * (d - s).powf(p - T::one());
    let (mut a, mut b) = (T::zero(), d);
    for _ in 0..200 {
        let m = (a + b) / T::cst(2.0);
        if m <= a || m >= b {
            break;
        }
        if slope(m) >= T::zero() {
            b = m;
        } else {
            a = m;
        }
    }
    (a + b) / T::cst(2.0)
}

/// `h = f + d(x,·)²/(2λ)`
fn moreau_objective<T: Scalar>(
    f: &Functional<T>,
    lambda: T,
    x: &Point<T>,
) -> Result<Functional<T>> {
    Functional::weighted_sum(vec![
        (T::one(), f.clone()),
        (
            T::one() / (T::cst(2.0) * lambda),
            Functional::SquaredDistance(x.clone()),
        ),
    ])
}

/// Projected geodesic descent with Armijo backtracking. Near the rounding
/// floor of `h`, a step is also accepted when it reduces `|∇₋h|`.
fn solve_descent<T: Scalar>(
    f: &FunctionalSpec<T>,
    lambda: T,
    x: &Point<T>,
    region: &GeodesicBall<T>,
) -> Result<(Point<T>, usize)> {
    let h = moreau_objective(f.functional(), lambda, x)?;
    let k_prox = Functional::SquaredDistance(x.clone())
        .certified_constants(region)?
        .0
        .unwrap_or(T::cst(2.0))
        .max(T::cst(0.5));
    let modulus = f.modulus().max(T::zero()) + k_prox / (T::cst(2.0) * lambda);
    let eta0 = T::one() / modulus;
    let floor = T::cst(64.0) * T::epsilon();
    let step_tol = T::cst(INNER_STEP_TOL);

    let mut y = project_to_ball(x, region)?;
    let mut hy = h.value(&y)?;
    let mut grad = h.descent(&y)?;
    let mut eta = eta0;
    for it in 0..MAX_INNER_ITERATIONS {
        if grad.absolute_gradient == T::zero() {
            return Ok((y, it));
        }
        let mut accepted = None;
        for _ in 0..80 {
            let mag = (eta * grad.absolute_gradient).min(region.diameter());
            let cand = project_to_ball(&grad_exp(&grad.descent.with_magnitude(mag))?, region)?;
            let step = distance(&y, &cand)?;
            let hc = h.value(&cand)?;
            if hc <= hy - step * step / (T::cst(2.0) * eta) {
                accepted = Some((cand, hc, step, None));
                break;
            }
            if (hc - hy).abs() <= floor * (T::one() + hy.abs()) {
                let gc = h.descent(&cand)?;
                if gc.absolute_gradient < grad.absolute_gradient {
                    accepted = Some((cand, hc, step, Some(gc)));
                    break;
                }
            }
            eta = eta / T::cst(2.0);
        }
        let Some((cand, hc, step, gc)) = accepted else {
            // no representable improvement left
            return Ok((y, it + 1));
        };
        y = cand;
        hy = hc;
        grad = match gc {
            Some(g) => g,
            None => h.descent(&y)?,
        };
        if step < step_tol * (T::one() + region.radius()) {
            return Ok((y, it + 1));
        }
        eta = (eta * T::cst(2.0)).min(eta0);
    }
    Err(Error::ConvergenceFailure {
        iterations: MAX_INNER_ITERATIONS,
        residual: grad.absolute_gradient.as_f64(),
        best: y.to_vec().iter().map(|c| c.as_f64()).collect(),
    })
}

/// Right derivative of `h` at distance `s` along `leg`, moving outward
/// (`outward`) or toward the branch point.
fn leg_derivative<T: Scalar>(h: &Functional<T>, leg: usize, s: T, outward: bool) -> Result<T> {
    let space = h.space();
    let p = space.leg_point(leg, s)?;
    h.directional_derivative(&TangentVector::along_leg(p, leg, outward, T::one())?)
}

/// Spider resolvent: on each leg `h` is convex in the distance from the
/// branch point, so the sign of its right derivative locates the leg
/// minimizer by bisection.
fn solve_spider<T: Scalar>(
    f: &Functional<T>,
    lambda: T,
    x: &Point<T>,
    region: &GeodesicBall<T>,
) -> Result<(Point<T>, bool)> {
    let h = moreau_objective(f, lambda, x)?;
    let space = *region.space();
    let (lc, rc) = region.center().leg().unwrap();
    let rho = region.radius();
    let mut best: Option<(T, Point<T>)> = None;
    let mut tie = false;
    for leg in 0..space.dimension() {
        let (lo, hi) = if rc == T::zero() {
            (T::zero(), rho)
        } else if leg == lc {
            ((rc - rho).max(T::zero()), rc + rho)
        } else if rho >= rc {
            (T::zero(), rho - rc)
        } else {
            continue;
        };
        let s = minimize_on_leg(&h, leg, lo, hi)?;
        let y = space.leg_point(leg, s)?;
        let hy = h.value(&y)?;
        match &best {
            Some((hb, yb)) => {
                let close = (hy - *hb).abs() <= T::cst(16.0) * T::epsilon() * (T::one() + hb.abs());
                if close && distance(&y, yb)? > T::cst(INNER_STEP_TOL) {
                    tie = true;
                }
                if hy < *hb && !close {
                    best = Some((hy, y));
                }
            }
            None => best = Some((hy, y)),
        }
    }
    let (_, y) = best.ok_or_else(|| invalid("region contains no spider leg segment"))?;
    Ok((y, tie))
}

fn minimize_on_leg<T: Scalar>(h: &Functional<T>, leg: usize, lo: T, hi: T) -> Result<T> {
    if hi <= lo || leg_derivative(h, leg, lo, true)? >= T::zero() {
        return Ok(lo);
    }
    if leg_derivative(h, leg, hi, false)? >= T::zero() {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = (a + b) / T::cst(2.0);
        if m <= a || m >= b {
            break;
        }
        if leg_derivative(h, leg, m, true)? >= T::zero() {
            b = m;
        } else {
            a = m;
        }
    }
    Ok((a + b) / T::cst(2.0))
}

/// Gradient-exponential resolvent `g-exp(λ ∇(-f)(x))`.
pub fn step_lower<T: Scalar>(
    f: &FunctionalSpec<T>,
    lambda: T,
    x: &Point<T>,
) -> Result<ResolventStep<T>> {
    let space = f.space();
    if !space.bound_side().has_lower() {
        return Err(Error::UnsupportedSpace(
            "gradient-exponential step needs a lower curvature bound".into(),
        ));
    }
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(invalid(format!(
            "step size must be nonnegative, got {lambda}"
        )));
    }
    let info = f.descent(x)?;
    let output = grad_exp(&info.descent.scaled(lambda))?;
    let d = distance(x, &output)?;
    let left_region = !f.region().contains(&output, T::cst(1e-10))?;
    Ok(ResolventStep {
        input: x.clone(),
        f_value_in: f.value(x)?,
        f_value_out: f.value(&output)?,
        output,
        lambda,
        mode: ResolventMode::LowerGrad,
        absolute_gradient: Some(info.absolute_gradient),
        certificate: StepCertificate {
            path: SolverPath::GradientExp,
            step_gap: lambda * info.absolute_gradient - d,
            left_region,
        },
    })
}

/// Residual of `d(y,J)² <= d(y,x)² - 2λ[f(J) - f(y)]` for a proximal step.
pub fn check_estimate_upper<T: Scalar>(
    step: &ResolventStep<T>,
    f: &FunctionalSpec<T>,
    y: &Point<T>,
) -> Result<T> {
    if step.mode != ResolventMode::UpperProx {
        return Err(invalid("estimate needs a proximal step"));
    }
    let dyx = distance(y, &step.input)?;
    let dyj = distance(y, &step.output)?;
    Ok(dyx * dyx - T::cst(2.0) * step.lambda * (step.f_value_out - f.value(y)?) - dyj * dyj)
}

/// Residual of
/// `d(y,J)² <= d(y,x)² - 2λ[f(x) - f(y)] + (K'/2)(λ|∇₋f|(x))²`
/// for a gradient-exponential step, with `K'` the concavity constant.
pub fn check_estimate_lower<T: Scalar>(
    step: &ResolventStep<T>,
    f: &FunctionalSpec<T>,
    y: &Point<T>,
    concavity: T,
) -> Result<T> {
    let grad = match (step.mode, step.absolute_gradient) {
        (ResolventMode::LowerGrad, Some(g)) => g,
        _ => return Err(invalid("estimate needs a gradient-exponential step")),
    };
    let dyx = distance(y, &step.input)?;
    let dyj = distance(y, &step.output)?;
    let lg = step.lambda * grad;
    Ok(
        dyx * dyx - T::cst(2.0) * step.lambda * (step.f_value_in - f.value(y)?)
            + concavity / T::cst(2.0) * lg * lg
            - dyj * dyj,
    )
}

/// Smallest `D_J f(w) - ⟨w, log_J x⟩/λ` over sampled unit directions `w`
/// at the output of a proximal step that keep `J` inside `region`. It is
/// nonnegative at the exact resolvent.
pub fn optimality_residual<T: Scalar>(
    step: &ResolventStep<T>,
    f: &FunctionalSpec<T>,
    region: &GeodesicBall<T>,
    samples: usize,
    seed: u64,
) -> Result<T> {
    let j = &step.output;
    let to_x = log_map(j, &step.input)?;
    let to_center = log_map(j, region.center())?;
    let on_boundary = distance(j, region.center())? >= region.radius() - T::cst(1e-9);
    let mut worst = T::infinity();
    for w in sample_directions(j, samples, seed)? {
        let feasible = match j.leg() {
            Some((_, r)) => {
                let probe = crate::spaces::exp_map(&w.with_magnitude(r.min(T::cst(1e-9))))
                    .or_else(|_| crate::spaces::exp_map(&w.with_magnitude(T::cst(1e-9))))?;
                region.contains(&probe, T::cst(1e-12))?
            }
            None => !on_boundary || inner_product(&w, &to_center)? >= T::zero(),
        };
        if !feasible {
            continue;
        }
        let r = f.directional_derivative(&w)? - inner_product(&w, &to_x)? / step.lambda;
        worst = worst.min(r);
    }
    Ok(if worst.is_finite() { worst } else { T::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::concavity_constant;
    use crate::spaces::SpaceDescriptor;
    use approx::assert_abs_diff_eq;

    fn line() -> SpaceDescriptor<f64> {
        SpaceDescriptor::euclidean(1).unwrap()
    }

    fn sq_spec(anchor: Point<f64>, region: &GeodesicBall<f64>) -> FunctionalSpec<f64> {
        FunctionalSpec::new(Functional::squared_distance(anchor), region.clone()).unwrap()
    }

    #[test]
    fn euclidean_closed_form() {
        let e = SpaceDescriptor::<f64>::euclidean(2).unwrap();
        let g = GeodesicBall::new(e.origin(), 10.0).unwrap();
        let a = e.point(&[1.0, 2.0]).unwrap();
        let x = e.point(&[-3.0, 0.5]).unwrap();
        let f = sq_spec(a, &g);
        for lambda in [0.1, 0.5, 3.0] {
            let s = prox_upper(&f, lambda, &x, &g).unwrap();
            let y = s.output.ambient().unwrap();
            assert_abs_diff_eq!(
                y[0],
                (-3.0 + 2.0 * lambda) / (1.0 + 2.0 * lambda),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                y[1],
                (0.5 + 4.0 * lambda) / (1.0 + 2.0 * lambda),
                epsilon = 1e-14
            );
            assert_eq!(s.certificate.path, SolverPath::ClosedForm);
            assert!(s.certificate.step_gap >= -1e-12);
        }
    }

    #[test]
    fn sphere_closed_form_is_inductive_mean_step() {
        let s = SpaceDescriptor::<f64>::sphere(2, 1.0).unwrap();
        let c = s.point(&[0.0, 0.0, 1.0]).unwrap();
        let g = GeodesicBall::for_upper_flows(c.clone(), 0.35).unwrap();
        let a = s.project(&[0.2, 0.1, 1.0]).unwrap();
        let x = s.project(&[-0.1, -0.2, 1.0]).unwrap();
        let f = sq_spec(a.clone(), &g);
        for k in 1..6 {
            let step = prox_upper(&f, 1.0 / (2.0 * k as f64), &x, &g).unwrap();
            let want = geodesic_point(&x, &a, 1.0 / (k as f64 + 1.0)).unwrap();
            assert!(distance(&step.output, &want).unwrap() < 1e-14);
        }
    }

    #[test]
    fn closed_form_and_descent_agree() {
        let s = SpaceDescriptor::<f64>::sphere(2, 1.0).unwrap();
        let c = s.point(&[0.0, 0.0, 1.0]).unwrap();
        let g = GeodesicBall::for_upper_flows(c.clone(), 0.35).unwrap();
        let a = s.project(&[0.2, 0.1, 1.0]).unwrap();
        let x = s.project(&[-0.1, -0.2, 1.0]).unwrap();
        let f = sq_spec(a, &g);
        let closed = prox_upper(&f, 0.7, &x, &g).unwrap();
        let (y, _) = solve_descent(&f, 0.7, &x, &g).unwrap();
        assert!(distance(&closed.output, &y).unwrap() < 1e-7);
    }

    #[test]
    fn soft_threshold() {
        let e = line();
        let g = GeodesicBall::new(e.origin(), 5.0).unwrap();
        let f = FunctionalSpec::new(
            Functional::distance_power(e.origin(), 1.0).unwrap(),
            g.clone(),
        )
        .unwrap();
        let s = prox_upper(&f, 0.5, &e.point(&[2.0]).unwrap(), &g).unwrap();
        assert_eq!(s.output.ambient().unwrap()[0], 1.5);
        assert_eq!(s.certificate.path, SolverPath::SoftThreshold);
        let s = prox_upper(&f, 3.0, &e.point(&[2.0]).unwrap(), &g).unwrap();
        assert_eq!(s.output.ambient().unwrap()[0], 0.0);
    }

    #[test]
    fn segment_search_for_fractional_powers() {
        // stalls plain descent: the curvature of d^p blows up at the anchor
        let e = SpaceDescriptor::<f64>::euclidean(2).unwrap();
        let g = GeodesicBall::new(e.origin(), 1.0).unwrap();
        let a = e
            .point(&[-0.2200582879878404, 0.04484007609360678])
            .unwrap();
        let x = e.point(&[0.6377644447870513, -0.2276648904814555]).unwrap();
        let p = 1.1597670665204518;
        let lambda = 1.5469169711553847;
        let f = FunctionalSpec::new(Functional::distance_power(a.clone(), p).unwrap(), g.clone())
            .unwrap();
        let s = prox_upper(&f, lambda, &x, &g).unwrap();
        assert_eq!(s.certificate.path, SolverPath::SegmentSearch);
        // first-order condition along the segment
        let (d, r) = (distance(&x, &a).unwrap(), distance(&s.output, &a).unwrap());
        assert_abs_diff_eq!((d - r) / lambda, p * r.powf(p - 1.0), epsilon = 1e-12);
        assert!(s.certificate.step_gap >= 0.0);
    }

    #[test]
    fn descent_solves_weighted_sums() {
        let e = line();
        let g = GeodesicBall::new(e.origin(), 5.0).unwrap();
        let f = FunctionalSpec::new(
            Functional::frechet(
                &[e.point(&[0.0]).unwrap(), e.point(&[2.0]).unwrap()],
                &[1.0, 1.0],
            )
            .unwrap(),
            g.clone(),
        )
        .unwrap();
        // minimize y² + (y-2)² + (y-x)²/(2λ) with x = 4, λ = 1/2: y = 6/3
        let s = prox_upper(&f, 0.5, &e.point(&[4.0]).unwrap(), &g).unwrap();
        assert_abs_diff_eq!(s.output.ambient().unwrap()[0], 2.0, epsilon = 1e-9);
        assert!(matches!(s.certificate.path, SolverPath::Descent { .. }));
    }

    #[test]
    fn spider_two_legs() {
        let sp = SpaceDescriptor::<f64>::spider(3).unwrap();
        let g = GeodesicBall::new(sp.branch(), 3.0).unwrap();
        let f = FunctionalSpec::new(
            Functional::frechet(
                &[sp.leg_point(0, 1.0).unwrap(), sp.leg_point(1, 2.0).unwrap()],
                &[0.5, 0.5],
            )
            .unwrap(),
            g.clone(),
        )
        .unwrap();
        // from the branch with λ = 1/2: on leg 1, minimize
        // ½(s+1)² + ½(s-2)² + s², derivative 4s - 1 -> s = 1/4
        let s = prox_upper(&f, 0.5, &sp.branch(), &g).unwrap();
        assert_eq!(s.output.leg().unwrap().0, 1);
        assert_abs_diff_eq!(s.output.leg().unwrap().1, 0.25, epsilon = 1e-12);
        assert_eq!(s.certificate.path, SolverPath::LegSearch { tie: false });
    }

    #[test]
    fn spider_symmetric_legs_meet_at_branch() {
        let sp = SpaceDescriptor::<f64>::spider(3).unwrap();
        let g = GeodesicBall::new(sp.branch(), 3.0).unwrap();
        let f = FunctionalSpec::new(
            Functional::weighted_sum(vec![
                (
                    1.0,
                    Functional::distance_power(sp.leg_point(1, 2.0).unwrap(), 3.0).unwrap(),
                ),
                (
                    1.0,
                    Functional::distance_power(sp.leg_point(2, 2.0).unwrap(), 3.0).unwrap(),
                ),
            ])
            .unwrap(),
            g.clone(),
        )
        .unwrap();
        let s = prox_upper(&f, 0.5, &sp.branch(), &g).unwrap();
        assert!(s.output.is_branch());
        assert_eq!(s.certificate.path, SolverPath::LegSearch { tie: false });
    }

    #[test]
    fn region_checks() {
        let s = SpaceDescriptor::<f64>::sphere(2, 1.0).unwrap();
        let big = GeodesicBall::new(s.origin(), 1.0).unwrap();
        let f = FunctionalSpec::new(Functional::squared_distance(s.origin()), big.clone()).unwrap();
        assert!(prox_upper(&f, 0.5, &s.origin(), &big).is_err());
    }

    #[test]
    fn lower_step_examples() {
        let e = line();
        let g = GeodesicBall::new(e.origin(), 5.0).unwrap();
        let a = e.point(&[3.0]).unwrap();
        let f = sq_spec(a.clone(), &g);
        let s = step_lower(&f, 0.5, &e.point(&[1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(s.output.ambient().unwrap()[0], 3.0, epsilon = 1e-15);
        let s = step_lower(&f, 0.5, &a).unwrap();
        assert_eq!(s.output, a);
        let z = step_lower(&f, 0.0, &e.point(&[1.0]).unwrap()).unwrap();
        let y = e.point(&[-2.0]).unwrap();
        assert_eq!(check_estimate_lower(&z, &f, &y, 2.0).unwrap(), 0.0);

        let sp = SpaceDescriptor::<f64>::spider(3).unwrap();
        let sg = GeodesicBall::new(sp.branch(), 1.0).unwrap();
        let h = sq_spec(sp.leg_point(0, 0.5).unwrap(), &sg);
        assert!(matches!(
            step_lower(&h, 0.1, &sp.branch()),
            Err(Error::UnsupportedSpace(_))
        ));
    }

    #[test]
    fn estimate_hand_computations() {
        let e = line();
        let g = GeodesicBall::new(e.origin(), 5.0).unwrap();
        let f = sq_spec(e.origin(), &g);
        let x = e.point(&[1.0]).unwrap();
        let y = e.origin();
        let up = prox_upper(&f, 0.5, &x, &g).unwrap();
        assert_abs_diff_eq!(up.output.ambient().unwrap()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            check_estimate_upper(&up, &f, &y).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let at_j = check_estimate_upper(&up, &f, &up.output).unwrap();
        assert_abs_diff_eq!(at_j, 0.25, epsilon = 1e-15);

        let lo = step_lower(&f, 0.25, &x).unwrap();
        assert_abs_diff_eq!(lo.output.ambient().unwrap()[0], 0.5, epsilon = 1e-15);
        // 1 - (1/2)(1 - 0) + (K'/2)(1/2)² - 1/4 with K' = 2
        let r = check_estimate_lower(&lo, &f, &y, concavity_constant(&g)).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn optimality_at_prox_output() {
        let h = SpaceDescriptor::<f64>::hyperbolic(2, -1.0).unwrap();
        let g = GeodesicBall::new(h.origin(), 1.0).unwrap();
        let anchors = [
            h.project(&[0.0, 0.3, 0.1]).unwrap(),
            h.project(&[0.0, -0.2, 0.4]).unwrap(),
            h.project(&[0.0, 0.1, -0.5]).unwrap(),
        ];
        let f = FunctionalSpec::new(
            Functional::frechet(&anchors, &[0.2, 0.3, 0.5]).unwrap(),
            g.clone(),
        )
        .unwrap();
        let x = h.project(&[0.0, 0.6, 0.2]).unwrap();
        let s = prox_upper(&f, 0.4, &x, &g).unwrap();
        assert!(optimality_residual(&s, &f, &g, 64, 1).unwrap() >= -1e-5);
    }
}
