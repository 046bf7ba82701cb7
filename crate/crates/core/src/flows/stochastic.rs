//! Finitely supported measures of functionals, their expectation, the
//! stochastic proximal iteration, inductive means and the coupled Jensen
//! sequences.

use rand::Rng;

use super::record::{coords_f64, FlowKind, IterateRow, Residuals, RunRecord, RunStatus};
use super::FlowOptions;
use crate::error::{invalid, Error, Result};
use crate::functionals::{Functional, FunctionalSpec};
use crate::oracle::{
    grid_minimize, verify_k_convexity, verify_variance_inequality, GridResolution, Report,
};
use crate::resolvent::{check_estimate_upper, prox_upper};
use crate::rng::{generator, Generator, GENERATOR_NAME};
use crate::scalar::Scalar;
use crate::schedules::StepSchedule;
use crate::spaces::{distance, geodesic_point, GeodesicBall, Point};

/// Stationarity target for the polished minimizer: `d(x, J_λ x)/λ`.
const POLISH_RESIDUAL: f64 = 1e-9;
const POLISH_MAX_STEPS: usize = 500;
const VARIANCE_SAMPLES: usize = 1000;
const VARIANCE_TOL: f64 = 1e-7;
const CONVEXITY_SAMPLES: usize = 1000;

/// A probability measure with finite support on functionals over a common
/// region.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec<T> {
    atoms: Vec<FunctionalSpec<T>>,
    weights: Vec<T>,
    cumulative: Vec<f64>,
}

impl<T: Scalar> MeasureSpec<T> {
    /// Weights must be nonnegative and sum to one within `1e-12`; atoms must
    /// share the region and have a positive modulus.
    pub fn new(atoms: Vec<FunctionalSpec<T>>, weights: Vec<T>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(invalid("measure needs one weight per atom"));
        }
        if weights.iter().any(|w| !(*w >= T::zero())) {
            return Err(invalid("measure weights must be nonnegative"));
        }
        let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("measure weights sum to {total}, not 1")));
        }
        let region = atoms[0].region();
        if atoms.iter().any(|a| a.region() != region) {
            return Err(invalid("measure atoms live on different regions"));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.modulus() > T::zero())) {
            return Err(invalid(format!(
                "measure atoms need a common positive modulus; found {}",
                a.modulus().as_f64()
            )));
        }
        let cumulative = cumulative(&weights);
        Ok(Self {
            atoms,
            weights,
            cumulative,
        })
    }

    pub fn uniform(atoms: Vec<FunctionalSpec<T>>) -> Result<Self> {
        let w = T::one() / T::cst(atoms.len().max(1) as f64);
        let n = atoms.len();
        Self::new(atoms, vec![w; n])
    }

    /// Uniform (or weighted) measure on `d(·, a_i)²`.
    pub fn squared_distances(
        anchors: &[Point<T>],
        weights: Option<&[T]>,
        region: &GeodesicBall<T>,
    ) -> Result<Self> {
        let atoms = anchors
            .iter()
            .map(|a| FunctionalSpec::new(Functional::squared_distance(a.clone()), region.clone()))
            .collect::<Result<Vec<_>>>()?;
        match weights {
            Some(w) => Self::new(atoms, w.to_vec()),
            None => Self::uniform(atoms),
        }
    }

    pub fn atoms(&self) -> &[FunctionalSpec<T>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn region(&self) -> &GeodesicBall<T> {
        self.atoms[0].region()
    }

    /// Common modulus: the smallest over the support.
    pub fn modulus(&self) -> T {
        self.atoms
            .iter()
            .map(|a| a.modulus())
            .fold(T::infinity(), T::min)
    }

    /// Common Lipschitz constant: the largest over the support.
    pub fn lipschitz(&self) -> T {
        self.atoms
            .iter()
            .map(|a| a.lipschitz())
            .fold(T::zero(), T::max)
    }

    /// `g = Σ w_i f_i`.
    pub fn mean_functional(&self) -> Result<Functional<T>> {
        Functional::weighted_sum(
            self.weights
                .iter()
                .zip(&self.atoms)
                .map(|(w, a)| (*w, a.functional().clone()))
                .collect(),
        )
    }

    pub fn mean_spec(&self) -> Result<FunctionalSpec<T>> {
        FunctionalSpec::new(self.mean_functional()?, self.region().clone())
    }

    /// Anchors of the atoms when every atom is a squared distance.
    pub fn anchors(&self) -> Option<Vec<Point<T>>> {
        self.atoms
            .iter()
            .map(|a| match a.functional() {
                Functional::SquaredDistance(p) => Some(p.clone()),
                _ => None,
            })
            .collect()
    }

    /// Index of an atom drawn from the measure.
    pub fn draw(&self, rng: &mut Generator) -> usize {
        draw_index(&self.cumulative, rng)
    }

    fn draws(&self, seed: u64, count: usize) -> Vec<usize> {
        let mut rng = generator(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Minimizer of a strongly convex functional over its region, with the
/// evidence for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer<T> {
    pub point: Point<T>,
    pub value: T,
    /// `d(x, J_λ x)/λ` at the returned point.
    pub residual: T,
    /// Distance to the grid-oracle minimizer.
    pub grid_distance: T,
    /// Coarse spacing of the grid oracle.
    pub grid_spacing: T,
}

/// Grid-oracle minimizer polished by proximal steps with `λ = 10/K` until
/// `d(x, J_λ x)/λ < 1e-9`. Fails unless the polished point lies within two
/// coarse grid spacings of the grid minimizer.
pub fn reference_minimizer<T: Scalar>(f: &FunctionalSpec<T>) -> Result<Minimizer<T>> {
    let region = f.region();
    let k = f.modulus();
    if !(k > T::zero()) {
        return Err(invalid("minimizer needs a positive modulus for uniqueness"));
    }
    let dim = region.space().dimension();
    let grid = grid_minimize(f, region, GridResolution::default_for(dim)?)?;
    let lambda = T::cst(10.0) / k;
    let target = T::cst(POLISH_RESIDUAL);
    let mut x = grid.point.clone();
    let mut residual = T::infinity();
    // past the target, keep stepping while the steps still shrink
    for _ in 0..POLISH_MAX_STEPS {
        let step = prox_upper(f, lambda, &x, region)?;
        let r = distance(&x, &step.output)? / lambda;
        x = step.output;
        let stalled = !(r < T::cst(0.5) * residual);
        residual = r;
        if residual < target && (stalled || residual == T::zero()) {
            break;
        }
    }
    if !(residual < target) {
        return Err(Error::ConvergenceFailure {
            iterations: POLISH_MAX_STEPS,
            residual: residual.as_f64(),
            best: coords_f64(&x),
        });
    }
    let grid_distance = distance(&x, &grid.point)?;
    if grid_distance > T::cst(2.0) * grid.coarse_spacing {
        return Err(invalid(format!(
            "polished minimizer is {} from the grid minimizer (spacing {})",
            grid_distance.as_f64(),
            grid.coarse_spacing.as_f64()
        )));
    }
    Ok(Minimizer {
        value: f.value(&x)?,
        point: x,
        residual,
        grid_distance,
        grid_spacing: grid.coarse_spacing,
    })
}

/// `𝔼μ`, `var(μ)` and the sampled variance inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation<T> {
    pub mean: Minimizer<T>,
    pub variance: T,
    pub variance_check: Report,
}

/// `𝔼μ = argmin g` and `var(μ) = g(𝔼μ)` for `g = Σ w_i f_i`, certifying
/// `d(x,𝔼μ)² <= (2/K)[g(x) - g(𝔼μ)]` on sampled `x`.
pub fn expectation_and_variance<T: Scalar>(
    mu: &MeasureSpec<T>,
    seed: u64,
) -> Result<Expectation<T>> {
    let g = mu.mean_spec()?;
    let mean = reference_minimizer(&g)?;
    let variance_check = verify_variance_inequality(
        &|x: &Point<T>| g.value(x),
        &mean.point,
        g.modulus(),
        g.region(),
        VARIANCE_SAMPLES,
        seed,
        VARIANCE_TOL,
    )?;
    Ok(Expectation {
        variance: mean.value,
        mean,
        variance_check,
    })
}

/// `S_{k+1} = J_{λ_k}^{f_k}(S_k)` with `f_k` drawn i.i.d. from `mu`.
///
/// Identical seeds give bitwise-identical records. Distances are measured
/// against `opts.reference`, which should be `𝔼μ`; pass it in when running
/// many seeds so it is computed once.
pub fn stochastic_ppa<T: Scalar>(
    mu: &MeasureSpec<T>,
    schedule: &StepSchedule<T>,
    s0: &Point<T>,
    seed: u64,
    max_k: usize,
    opts: &FlowOptions<T>,
) -> Result<RunRecord<T>> {
    let draws = mu.draws(seed, max_k);
    let mut rec = stochastic_ppa_with_draws(mu, schedule, s0, &draws, opts)?;
    rec.seed = Some(seed);
    rec.generator = Some(GENERATOR_NAME);
    Ok(rec)
}

/// The stochastic iteration along a given sequence of atom indices.
pub fn stochastic_ppa_with_draws<T: Scalar>(
    mu: &MeasureSpec<T>,
    schedule: &StepSchedule<T>,
    s0: &Point<T>,
    draws: &[usize],
    opts: &FlowOptions<T>,
) -> Result<RunRecord<T>> {
    let region = mu.region();
    if !region.space().bound_side().has_upper() {
        return Err(invalid(
            "stochastic iteration needs an upper curvature bound",
        ));
    }
    region.check_upper_flows()?;
    if !region.contains(s0, T::cst(1e-10))? {
        return Err(invalid("start point lies outside the region"));
    }
    if !schedule.divergent_sum() || schedule.value(usize::MAX / 2) > T::cst(1e-6) {
        return Err(invalid(
            "stochastic iteration needs steps tending to zero with divergent sum",
        ));
    }
    if let Some(i) = draws.iter().find(|i| **i >= mu.atoms.len()) {
        return Err(invalid(format!("draw {i} is not an atom index")));
    }
    let reference = opts.reference.as_ref();
    let mut rec = RunRecord::new(FlowKind::StochasticPpa, region, &mu.atoms, s0);
    rec.schedule = Some(schedule.label());
    rec.reference = reference.map(coords_f64);
    let k = mu.modulus();
    if let Some(first) = (0..draws.len()).find(|j| schedule.value(*j) * k < T::one()) {
        if first > 0 {
            rec.event(format!(
                "lambda_k K >= 1 for k < {first}; the rate applies from there on"
            ));
        }
    }
    let dref = |x: &Point<T>| -> Result<Option<f64>> {
        reference
            .map(|y| distance(x, y).map(Scalar::as_f64))
            .transpose()
    };
    rec.push(
        s0,
        IterateRow {
            m: 0,
            coords: vec![],
            f: mu.mean_functional()?.value(s0)?.as_f64(),
            dist_ref: dref(s0)?,
            lambda: None,
            z: None,
            residuals: Residuals::default(),
        },
    );
    let mut s = s0.clone();
    for (j, &i) in draws.iter().enumerate() {
        let f = &mu.atoms[i];
        let lambda = schedule.value(j);
        let step = prox_upper(f, lambda, &s, region)?;
        let estimate = match reference {
            Some(y) => Some(check_estimate_upper(&step, f, y)?.as_f64()),
            None => None,
        };
        s = step.output;
        rec.push(
            &s,
            IterateRow {
                m: 0,
                coords: vec![],
                f: step.f_value_out.as_f64(),
                dist_ref: dref(&s)?,
                lambda: Some(lambda.as_f64()),
                z: None,
                residuals: Residuals {
                    estimate,
                    ..Residuals::default()
                },
            },
        );
        rec.cycle_lambdas.push(lambda.as_f64());
    }
    rec.status = RunStatus::Completed;
    Ok(rec)
}

/// Inductive means only need unique geodesics (a convex region); Jensen
/// runs also need the diameter bound of upper-bound flows.
fn check_anchors<T: Scalar>(
    anchors: &[Point<T>],
    region: &GeodesicBall<T>,
    flows: bool,
) -> Result<()> {
    if anchors.is_empty() {
        return Err(invalid("need at least one anchor"));
    }
    if !region.space().bound_side().has_upper() {
        return Err(invalid("inductive means need an upper curvature bound"));
    }
    if flows {
        region.check_upper_flows()?;
    } else {
        region.check_convex()?;
    }
    for a in anchors {
        if a.space() != region.space() || !region.contains(a, T::cst(1e-10))? {
            return Err(invalid("anchor lies outside the region"));
        }
    }
    Ok(())
}

/// Anchor indices of a stream: i.i.d. draws when weights are given,
/// otherwise the anchors in order, repeated.
fn stream<T: Scalar>(n: usize, weights: Option<&[T]>, seed: u64, len: usize) -> Result<Vec<usize>> {
    let Some(w) = weights else {
        return Ok((0..len).map(|k| k % n).collect());
    };
    if w.len() != n || w.iter().any(|x| !(*x >= T::zero())) {
        return Err(invalid("need one nonnegative weight per anchor"));
    }
    let total: f64 = w.iter().map(|x| x.as_f64()).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("weights sum to {total}, not 1")));
    }
    let cumulative = cumulative(w);
    let mut rng = generator(seed);
    Ok((0..len)
        .map(|_| draw_index(&cumulative, &mut rng))
        .collect())
}

fn cumulative<T: Scalar>(weights: &[T]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w.as_f64();
            acc
        })
        .collect()
}

fn draw_index(cumulative: &[f64], rng: &mut Generator) -> usize {
    let u: f64 = rng.random();
    cumulative
        .iter()
        .position(|c| u < *c)
        .unwrap_or(cumulative.len() - 1)
}

/// `S_1 = a_1`, `S_{k+1} = S_k #_{1/(k+1)} a_{k+1}`. The stream is the
/// anchors in order (cycled) or, with weights, i.i.d. draws. Rows start at
/// `m = 1`.
pub fn inductive_mean<T: Scalar>(
    anchors: &[Point<T>],
    weights: Option<&[T]>,
    region: &GeodesicBall<T>,
    seed: u64,
    max_k: usize,
    opts: &FlowOptions<T>,
) -> Result<RunRecord<T>> {
    check_anchors(anchors, region, false)?;
    if max_k == 0 {
        return Err(invalid("inductive mean needs at least one term"));
    }
    let order = stream(anchors.len(), weights, seed, max_k)?;
    let uniform = vec![T::one() / T::cst(anchors.len() as f64); anchors.len()];
    let g = Functional::frechet(anchors, weights.unwrap_or(&uniform))?;
    let atoms = anchors
        .iter()
        .map(|a| FunctionalSpec::new(Functional::squared_distance(a.clone()), region.clone()))
        .collect::<Result<Vec<_>>>()?;
    let reference = opts.reference.as_ref();
    let mut s = anchors[order[0]].clone();
    let mut rec = RunRecord::new(FlowKind::InductiveMean, region, &atoms, &s);
    rec.start_at(1);
    rec.reference = reference.map(coords_f64);
    if weights.is_some() {
        rec.seed = Some(seed);
        rec.generator = Some(GENERATOR_NAME);
    }
    for (j, &i) in order.iter().enumerate() {
        let k = j + 1;
        if j > 0 {
            s = geodesic_point(&s, &anchors[i], T::one() / T::cst(k as f64))?;
        }
        rec.push(
            &s,
            IterateRow {
                m: 0,
                coords: vec![],
                f: g.value(&s)?.as_f64(),
                dist_ref: reference
                    .map(|y| distance(&s, y).map(Scalar::as_f64))
                    .transpose()?,
                lambda: (j > 0).then(|| 1.0 / (2.0 * j as f64)),
                z: None,
                residuals: Residuals::default(),
            },
        );
    }
    rec.status = RunStatus::Completed;
    Ok(rec)
}

/// Coupled sequences `S_{k+1} = S_k #_{1/(k+1)} Y_{k+1}` and
/// `Z_{k+1} = (k Z_k + f(Y_{k+1}))/(k+1)` for `Y_k` drawn from a measure on
/// squared distances (identified with its anchors). Certifies
/// `f(S_k) <= Z_k` at every step and `f(𝔼μ) <= 𝔼f` at the end, with `𝔼μ`
/// taken from `opts.reference` or computed.
pub fn jensen_run<T: Scalar>(
    mu: &MeasureSpec<T>,
    f: &FunctionalSpec<T>,
    seed: u64,
    max_k: usize,
    opts: &FlowOptions<T>,
) -> Result<RunRecord<T>> {
    let anchors = mu
        .anchors()
        .ok_or_else(|| invalid("Jensen runs need a measure on squared distances"))?;
    let region = mu.region();
    check_anchors(&anchors, region, true)?;
    if f.space() != *region.space() {
        return Err(invalid("functional and measure live in different spaces"));
    }
    if max_k == 0 {
        return Err(invalid("Jensen run needs at least one term"));
    }
    let convex = verify_k_convexity(
        &|x: &Point<T>| f.value(x),
        region,
        T::zero(),
        CONVEXITY_SAMPLES,
        seed,
        1e-8,
    )?;
    if !convex.passed {
        return Err(invalid(format!(
            "functional fails the convexity check on the region (margin {})",
            convex.min_margin
        )));
    }
    let mean = match &opts.reference {
        Some(y) => y.clone(),
        None => expectation_and_variance(mu, seed)?.mean.point,
    };
    let draws = mu.draws(seed, max_k);
    let mut s = anchors[draws[0]].clone();
    let mut z = f.value(&s)?;
    let mut rec = RunRecord::new(FlowKind::Jensen, region, std::slice::from_ref(f), &s);
    rec.start_at(1);
    rec.seed = Some(seed);
    rec.generator = Some(GENERATOR_NAME);
    rec.reference = Some(coords_f64(&mean));
    for (j, &i) in draws.iter().enumerate() {
        let k = T::cst((j + 1) as f64);
        if j > 0 {
            let y = &anchors[i];
            s = geodesic_point(&s, y, T::one() / k)?;
            z = ((k - T::one()) * z + f.value(y)?) / k;
        }
        let fs = f.value(&s)?;
        rec.push(
            &s,
            IterateRow {
                m: 0,
                coords: vec![],
                f: fs.as_f64(),
                dist_ref: Some(distance(&s, &mean)?.as_f64()),
                lambda: None,
                z: Some(z.as_f64()),
                residuals: Residuals {
                    jensen: Some((z - fs).as_f64()),
                    ..Residuals::default()
                },
            },
        );
    }
    let f_of_mean = f.value(&mean)?;
    let mut mean_of_f = T::zero();
    for (w, a) in mu.weights.iter().zip(&anchors) {
        mean_of_f = mean_of_f + *w * f.value(a)?;
    }
    rec.extras.insert("f_of_mean".into(), f_of_mean.as_f64());
    rec.extras.insert("mean_of_f".into(), mean_of_f.as_f64());
    rec.extras.insert(
        "res_jensen_terminal".into(),
        (mean_of_f - f_of_mean).as_f64(),
    );
    rec.status = RunStatus::Completed;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceDescriptor;
    use crate::tolerance::Tolerances;
    use approx::assert_abs_diff_eq;

    fn line() -> (SpaceDescriptor<f64>, GeodesicBall<f64>) {
        let e = SpaceDescriptor::euclidean(1).unwrap();
        let g = GeodesicBall::new(e.origin(), 3.0).unwrap();
        (e, g)
    }

    #[test]
    fn measure_validation() {
        let (e, g) = line();
        let a = FunctionalSpec::new(Functional::squared_distance(e.origin()), g.clone()).unwrap();
        assert!(MeasureSpec::new(vec![a.clone(), a.clone()], vec![0.5, 0.6]).is_err());
        assert!(MeasureSpec::new(vec![a.clone()], vec![1.0]).is_ok());
        let affine =
            FunctionalSpec::new(Functional::affine(e, vec![1.0], 0.0).unwrap(), g.clone()).unwrap();
        assert!(MeasureSpec::new(vec![a, affine], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn two_point_expectation_is_midpoint_with_equality() {
        let (e, g) = line();
        let anchors = [e.point(&[-1.0]).unwrap(), e.point(&[2.0]).unwrap()];
        let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
        let ex = expectation_and_variance(&mu, 3).unwrap();
        assert_abs_diff_eq!(ex.mean.point.to_vec()[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(ex.variance, 2.25, epsilon = 1e-10);
        assert!(ex.variance_check.passed);
        assert!(ex.variance_check.min_margin.abs() < 1e-10);
    }

    #[test]
    fn single_atom_expectation() {
        let (e, g) = line();
        let a = e.point(&[0.7]).unwrap();
        let mu = MeasureSpec::squared_distances(&[a], None, &g).unwrap();
        let ex = expectation_and_variance(&mu, 0).unwrap();
        assert_abs_diff_eq!(ex.mean.point.to_vec()[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(ex.variance, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn stochastic_euclidean_is_running_mean() {
        let e = SpaceDescriptor::<f64>::euclidean(2).unwrap();
        let g = GeodesicBall::new(e.origin(), 3.0).unwrap();
        let anchors: Vec<_> = [[1.0, 0.0], [0.0, 2.0], [-1.5, -0.5], [0.3, 0.3]]
            .iter()
            .map(|c| e.point(c).unwrap())
            .collect();
        let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
        let draws = mu.draws(11, 200);
        let sched = StepSchedule::harmonic(0.5).unwrap();
        let s0 = anchors[draws[0]].clone();
        let opts = FlowOptions {
            reference: None,
            stop_tol: None,
        };
        let rec = stochastic_ppa_with_draws(&mu, &sched, &s0, &draws[1..], &opts).unwrap();
        let mut sum = [0.0, 0.0];
        for (k, &i) in draws.iter().enumerate() {
            let c = anchors[i].to_vec();
            sum[0] += c[0];
            sum[1] += c[1];
            let row = &rec.rows[k];
            for d in 0..2 {
                assert_abs_diff_eq!(row.coords[d], sum[d] / (k + 1) as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stochastic_replay_is_bitwise() {
        let s = SpaceDescriptor::<f64>::sphere(2, 1.0).unwrap();
        let c = s.point(&[0.0, 0.0, 1.0]).unwrap();
        let g = GeodesicBall::new(c.clone(), 0.4).unwrap();
        let anchors: Vec<_> = [[0.2, 0.0, 1.0], [0.0, 0.2, 1.0], [-0.2, 0.1, 1.0]]
            .iter()
            .map(|p| s.project(p).unwrap())
            .collect();
        let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
        let sched = StepSchedule::harmonic(0.5).unwrap();
        let opts = FlowOptions {
            reference: Some(c.clone()),
            stop_tol: None,
        };
        let a = stochastic_ppa(&mu, &sched, &c, 5, 100, &opts).unwrap();
        let b = stochastic_ppa(&mu, &sched, &c, 5, 100, &opts).unwrap();
        assert_eq!(a, b);
        let other = stochastic_ppa(&mu, &sched, &c, 6, 100, &opts).unwrap();
        assert_ne!(a.rows, other.rows);
        assert_eq!(a.generator, Some(GENERATOR_NAME));
    }

    #[test]
    fn inductive_mean_examples() {
        let (e, g) = line();
        let a = e.point(&[0.4]).unwrap();
        let rec = inductive_mean(
            &[a.clone(), a.clone()],
            None,
            &g,
            0,
            10,
            &FlowOptions::default(),
        )
        .unwrap();
        assert!(rec.rows.iter().all(|r| r.coords[0] == 0.4));
        assert_eq!(rec.rows[0].m, 1);
        let pair = [e.origin(), e.point(&[1.0]).unwrap()];
        let rec = inductive_mean(&pair, None, &g, 0, 2, &FlowOptions::default()).unwrap();
        assert_eq!(rec.rows[1].coords[0], 0.5);
    }

    #[test]
    fn inductive_mean_matches_stochastic_ppa() {
        let s = SpaceDescriptor::<f64>::sphere(2, 1.0).unwrap();
        let c = s.point(&[0.0, 0.0, 1.0]).unwrap();
        let g = GeodesicBall::new(c, 0.5).unwrap();
        let anchors: Vec<_> = [[0.3, 0.0, 1.0], [0.0, 0.3, 1.0], [-0.3, -0.1, 1.0]]
            .iter()
            .map(|p| s.project(p).unwrap())
            .collect();
        let ind = inductive_mean(&anchors, None, &g, 0, 30, &FlowOptions::default()).unwrap();
        let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
        let draws: Vec<usize> = (1..30).map(|k| k % 3).collect();
        let sched = StepSchedule::harmonic(0.5).unwrap();
        let opts = FlowOptions {
            reference: None,
            stop_tol: None,
        };
        let st = stochastic_ppa_with_draws(&mu, &sched, &anchors[0], &draws, &opts).unwrap();
        for (a, b) in ind.rows.iter().zip(&st.rows) {
            for (x, y) in a.coords.iter().zip(&b.coords) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn jensen_equality_for_affine() {
        let (e, g) = line();
        let anchors = [
            e.point(&[-1.0]).unwrap(),
            e.point(&[1.0]).unwrap(),
            e.point(&[0.5]).unwrap(),
        ];
        let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
        let f = FunctionalSpec::new(Functional::affine(e, vec![1.5], 0.25).unwrap(), g.clone())
            .unwrap();
        let rec = jensen_run(&mu, &f, 9, 200, &FlowOptions::default()).unwrap();
        for r in &rec.rows {
            assert_abs_diff_eq!(r.residuals.jensen.unwrap(), 0.0, epsilon = 1e-12);
        }
        assert!(rec.first_violation(&Tolerances::default()).is_none());
    }

    #[test]
    fn jensen_rejects_concave() {
        let s = SpaceDescriptor::<f64>::sphere(2, 1.0).unwrap();
        let north = s.point(&[0.0, 0.0, 1.0]).unwrap();
        let cap = GeodesicBall::new(north.clone(), 0.3).unwrap();
        let cap_mu = MeasureSpec::squared_distances(&[north], None, &cap).unwrap();
        // distance to a point near the antipode is concave on the cap
        let far = FunctionalSpec::new(
            Functional::distance_power(s.project(&[0.1, 0.0, -1.0]).unwrap(), 1.0).unwrap(),
            cap,
        )
        .unwrap();
        assert!(jensen_run(&cap_mu, &far, 0, 10, &FlowOptions::default()).is_err());
        let (e, g) = line();
        let anchors = [e.point(&[-1.0]).unwrap(), e.point(&[1.0]).unwrap()];
        let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
        let square = FunctionalSpec::new(Functional::squared_distance(e.origin()), g).unwrap();
        let rec = jensen_run(&mu, &square, 0, 50, &FlowOptions::default()).unwrap();
        assert_abs_diff_eq!(rec.extras["f_of_mean"], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.extras["mean_of_f"], 1.0, epsilon = 1e-12);
    }
}
