//! Brute-force and finite-difference oracles. None of these call the
//! resolvents or the closed-form derivatives they are used to check.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::functionals::FunctionalSpec;
use crate::scalar::Scalar;
use crate::spaces::sampling::{BallChart, LowDiscrepancy, TupleSampler};
use crate::spaces::{
    comparison_distance, distance, exp_map, geodesic_point, BoundSide, GeodesicBall, Point,
    SpaceDescriptor, SpaceKind, TangentVector,
};

/// Outcome of a sampled check: the worst margin and the inputs attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub samples: usize,
    pub min_margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub witness: Option<serde_json::Value>,
}

impl Report {
    pub fn new(check: impl Into<String>, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            samples: 0,
            min_margin: f64::INFINITY,
            tolerance,
            passed: true,
            witness: None,
        }
    }

    /// Counts a sample and keeps its witness if it is the worst so far.
    pub fn record(&mut self, margin: f64, witness: impl FnOnce() -> serde_json::Value) {
        self.samples += 1;
        if margin < self.min_margin || margin.is_nan() {
            self.min_margin = margin;
            self.witness = Some(witness());
        }
    }

    /// Folds in the samples of another report of the same check.
    pub fn absorb(&mut self, other: Report) {
        self.samples += other.samples;
        if other.min_margin < self.min_margin || other.min_margin.is_nan() {
            self.min_margin = other.min_margin;
            self.witness = other.witness;
        }
    }

    pub fn finish(mut self) -> Self {
        self.passed = self.min_margin >= -self.tolerance;
        self
    }
}

fn coords<T: Scalar>(p: &Point<T>) -> Vec<f64> {
    p.to_vec().into_iter().map(Scalar::as_f64).collect()
}

/// Grid size and number of refinement passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridResolution {
    pub points_per_dim: usize,
    pub refinements: usize,
}

impl GridResolution {
    /// 201 points per dimension up to dimension 2, 61 in dimension 3, five
    /// refinement passes.
    pub fn default_for(dim: usize) -> Result<Self> {
        let points_per_dim = match dim {
            0..=2 => 201,
            3 => 61,
            _ => {
                return Err(Error::Unsupported(format!(
                    "grid search needs dimension <= 3, got {dim}"
                )))
            }
        };
        Ok(Self {
            points_per_dim,
            refinements: 5,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum<T> {
    pub point: Point<T>,
    pub value: T,
    /// Spacing of the coarse grid (in chart coordinates, i.e. distance).
    pub coarse_spacing: T,
    /// Spacing of the last refinement pass.
    pub spacing: T,
}

type Objective<'a, T> = dyn Fn(&Point<T>) -> Result<T> + Sync + 'a;

/// Minimum of a functional over a region by exhaustive grid evaluation.
pub fn grid_minimize<T: Scalar>(
    f: &FunctionalSpec<T>,
    region: &GeodesicBall<T>,
    resolution: GridResolution,
) -> Result<GridMinimum<T>> {
    grid_minimize_fn(&|p: &Point<T>| f.value(p), region, resolution)
}

/// Evaluates `(value, index)` pairs in parallel and keeps the smallest value,
/// breaking ties by index so the result does not depend on scheduling.
fn argmin<T: Scalar, C: Sync>(
    candidates: &[C],
    eval: impl Fn(&C) -> Result<Option<T>> + Sync,
) -> Result<Option<(usize, T)>> {
    let values = candidates
        .par_iter()
        .map(&eval)
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if let Some(v) = v {
            let v = if v.is_nan() { T::infinity() } else { v };
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    Ok(best)
}

/// Grid minimization of an arbitrary objective. Manifold regions use a
/// Cartesian grid in normal coordinates at the center; spider regions use a
/// 1-D grid on each leg.
pub fn grid_minimize_fn<T: Scalar>(
    f: &Objective<'_, T>,
    region: &GeodesicBall<T>,
    resolution: GridResolution,
) -> Result<GridMinimum<T>> {
    if resolution.points_per_dim < 2 {
        return Err(invalid("grid needs at least two points per dimension"));
    }
    match region.space().kind() {
        SpaceKind::Spider => grid_spider(f, region, resolution),
        _ => grid_manifold(f, region, resolution),
    }
}

fn grid_manifold<T: Scalar>(
    f: &Objective<'_, T>,
    region: &GeodesicBall<T>,
    resolution: GridResolution,
) -> Result<GridMinimum<T>> {
    let chart = BallChart::new(region)?;
    let dim = chart.dim();
    if dim > 3 {
        return Err(Error::Unsupported(format!(
            "grid search needs dimension <= 3, got {dim}"
        )));
    }
    let rho = region.radius().as_f64();
    let n = resolution.points_per_dim;
    let coarse = 2.0 * rho / (n - 1) as f64;
    let inside = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>().sqrt() <= rho * (1.0 + 1e-12);
    let eval = |c: &Vec<f64>| -> Result<Option<T>> {
        if !inside(c) {
            return Ok(None);
        }
        let coeffs: Vec<T> = c.iter().map(|x| T::cst(*x)).collect();
        Ok(Some(f(&chart.manifold_point(&coeffs)?)?))
    };

    let cells = lattice(dim, n, |i| -rho + coarse * i as f64, &[]);
    let (mut bi, mut bv) =
        argmin(&cells, eval)?.ok_or_else(|| invalid("grid has no points in the region"))?;
    let mut center = cells[bi].clone();
    let mut h = coarse;
    for _ in 0..resolution.refinements {
        h /= 2.0;
        let local = lattice(dim, 5, |i| (i as f64 - 2.0) * h, &center);
        if let Some((i, v)) = argmin(&local, eval)? {
            if v < bv {
                bi = i;
                bv = v;
                center = local[bi].clone();
            }
        }
    }
    let coeffs: Vec<T> = center.iter().map(|x| T::cst(*x)).collect();
    Ok(GridMinimum {
        point: chart.manifold_point(&coeffs)?,
        value: bv,
        coarse_spacing: T::cst(coarse),
        spacing: T::cst(h),
    })
}

/// All points `offset + (g(i_1), ..., g(i_dim))` with `i_j < n`.
fn lattice(dim: usize, n: usize, g: impl Fn(usize) -> f64, offset: &[f64]) -> Vec<Vec<f64>> {
    let total = n.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|j| {
                    let i = idx % n;
                    idx /= n;
                    g(i) + offset.get(j).copied().unwrap_or(0.0)
                })
                .collect()
        })
        .collect()
}

/// Closed interval of distances from the branch covered by `region` on `leg`.
pub(crate) fn leg_interval<T: Scalar>(region: &GeodesicBall<T>, leg: usize) -> Option<(T, T)> {
    let (lc, rc) = region.center().leg()?;
    let rho = region.radius();
    if rc == T::zero() {
        Some((T::zero(), rho))
    } else if leg == lc {
        Some(((rc - rho).max(T::zero()), rc + rho))
    } else if rho >= rc {
        Some((T::zero(), rho - rc))
    } else {
        None
    }
}

fn grid_spider<T: Scalar>(
    f: &Objective<'_, T>,
    region: &GeodesicBall<T>,
    resolution: GridResolution,
) -> Result<GridMinimum<T>> {
    let space = *region.space();
    let n = resolution.points_per_dim;
    let mut best: Option<(T, usize, f64, f64)> = None;
    let mut coarse_max = 0.0f64;
    let mut fine_max = 0.0f64;
    for leg in 0..space.dimension() {
        let Some((lo, hi)) = leg_interval(region, leg) else {
            continue;
        };
        let (lo, hi) = (lo.as_f64(), hi.as_f64());
        let coarse = (hi - lo) / (n - 1) as f64;
        let eval = |s: &f64| -> Result<Option<T>> {
            if *s < lo - 1e-15 || *s > hi + 1e-15 {
                return Ok(None);
            }
            Ok(Some(f(&space.leg_point(leg, T::cst(s.clamp(lo, hi)))?)?))
        };
        let grid: Vec<f64> = (0..n).map(|i| lo + coarse * i as f64).collect();
        let Some((i, mut v)) = argmin(&grid, eval)? else {
            continue;
        };
        let mut s = grid[i];
        let mut h = coarse;
        for _ in 0..resolution.refinements {
            h /= 2.0;
            let local: Vec<f64> = (0..5).map(|j| s + (j as f64 - 2.0) * h).collect();
            if let Some((j, lv)) = argmin(&local, eval)? {
                if lv < v {
                    v = lv;
                    s = local[j];
                }
            }
        }
        coarse_max = coarse_max.max(coarse);
        fine_max = fine_max.max(h);
        if best.as_ref().is_none_or(|(bv, ..)| v < *bv) {
            best = Some((v, leg, s, h));
        }
    }
    let (value, leg, s, _) = best.ok_or_else(|| invalid("region covers no leg"))?;
    Ok(GridMinimum {
        point: space.leg_point(leg, T::cst(s.max(0.0)))?,
        value,
        coarse_spacing: T::cst(coarse_max),
        spacing: T::cst(fine_max),
    })
}

/// Richardson-extrapolated one-sided difference quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate<T> {
    pub value: T,
    /// Difference between the last two extrapolation levels.
    pub error: T,
}

/// `D_x f(v)` by one-sided differences `(f(exp(x, h v̂)) - f(x))/h` at
/// `h = h_0 2^{-i}`, `i <= orders`, extrapolated to `h -> 0`.
pub fn fd_directional<T: Scalar>(
    f: &Objective<'_, T>,
    v: &TangentVector<T>,
    orders: usize,
) -> Result<FdEstimate<T>> {
    if v.magnitude() == T::zero() {
        return Ok(FdEstimate {
            value: T::zero(),
            error: T::zero(),
        });
    }
    let x = v.base();
    let mut h0 = T::cst(1e-2);
    if let (Some((_, r)), crate::spaces::Direction::Leg { outward: false, .. }) =
        (x.leg(), v.direction())
    {
        h0 = h0.min(r / T::cst(2.0));
    }
    let fx = f(x)?;
    let two = T::cst(2.0);
    let mut table: Vec<Vec<T>> = Vec::with_capacity(orders + 1);
    let mut h = h0;
    for i in 0..=orders {
        let y = exp_map(&v.with_magnitude(h))?;
        let mut row = vec![(f(&y)? - fx) / h];
        let mut pow = T::one();
        for j in 1..=i {
            pow = pow * two;
            let prev = table[i - 1][j - 1];
            row.push((pow * row[j - 1] - prev) / (pow - T::one()));
        }
        table.push(row);
        h = h / two;
    }
    let last = &table[orders];
    let value = *last.last().unwrap() * v.magnitude();
    let error = if orders == 0 {
        T::infinity()
    } else {
        (*last.last().unwrap() - table[orders - 1][orders - 1]).abs() * v.magnitude()
    };
    Ok(FdEstimate { value, error })
}

/// Samples triples `(x, y, z)` in `region` and `t ∈ {0.1, ..., 0.9}` and
/// compares `d(x, y #_t z)` with the model-plane value at the space's
/// curvature. The margin is `comparison - actual` for the upper side,
/// `actual - comparison` for the lower side, the smaller of both for `Both`.
pub fn verify_curvature<T: Scalar>(
    space: &SpaceDescriptor<T>,
    region: &GeodesicBall<T>,
    samples: usize,
    side: BoundSide,
    seed: u64,
    tolerance: f64,
) -> Result<Report> {
    if region.space() != space {
        return Err(invalid("region lives in another space"));
    }
    let kappa = space.curvature();
    let mut report = Report::new(
        format!("curvature {:?} {:?}", space.kind(), side),
        tolerance,
    );
    let mut sampler = TupleSampler::new(region, 3, 0, seed)?;
    for _ in 0..samples {
        let (p, _) = sampler.next_tuple()?;
        let (x, y, z) = (&p[0], &p[1], &p[2]);
        let (dxy, dyz, dzx) = (distance(x, y)?, distance(y, z)?, distance(z, x)?);
        for i in 1..10 {
            let t = T::cst(i as f64 / 10.0);
            let actual = distance(x, &geodesic_point(y, z, t)?)?;
            let comp = comparison_distance(dxy, dyz, dzx, t, kappa)?;
            let (up, lo) = ((comp - actual).as_f64(), (actual - comp).as_f64());
            let margin = match side {
                BoundSide::Upper => up,
                BoundSide::Lower => lo,
                BoundSide::Both => up.min(lo),
            };
            report.record(margin, || {
                json!({"x": coords(x), "y": coords(y), "z": coords(z), "t": t.as_f64(),
                       "actual": actual.as_f64(), "comparison": comp.as_f64()})
            });
        }
    }
    Ok(report.finish())
}

/// Worst defect of
/// `f(x #_t y) <= (1-t) f(x) + t f(y) - (K/2) t (1-t) d(x,y)²`
/// over sampled pairs. Half the pairs are spread over the region, the
/// other half are close pairs on its boundary sphere, where moduli of
/// distance functions are usually attained.
pub fn verify_k_convexity<T: Scalar>(
    f: &Objective<'_, T>,
    region: &GeodesicBall<T>,
    k: T,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Report> {
    let mut report = Report::new(format!("k-convexity K={}", k.as_f64()), tolerance);
    let mut interior = TupleSampler::new(region, 2, 1, seed)?;
    let chart = BallChart::new(region)?;
    let dim = chart.dim();
    let mut edge = LowDiscrepancy::new(2 * dim + 1, seed ^ 0x5EED);
    let half = T::cst(0.5);
    for i in 0..samples {
        let (x, y, t) = if i % 2 == 0 {
            let (p, e) = interior.next_tuple()?;
            (p[0].clone(), p[1].clone(), e[0])
        } else {
            let u = edge.next_point();
            let near: Vec<f64> = (0..dim)
                .map(|j| (u[j] + 0.02 * (u[dim + j] - 0.5)).clamp(0.0, 1.0))
                .collect();
            (
                chart.boundary_from_unit(&u[..dim])?,
                chart.boundary_from_unit(&near)?,
                u[2 * dim],
            )
        };
        let t = T::cst(0.05 + 0.9 * t);
        let d = distance(&x, &y)?;
        let m = geodesic_point(&x, &y, t)?;
        let defect =
            (T::one() - t) * f(&x)? + t * f(&y)? - half * k * t * (T::one() - t) * d * d - f(&m)?;
        report.record(
            defect.as_f64(),
            || json!({"x": coords(&x), "y": coords(&y), "t": t.as_f64(), "d": d.as_f64()}),
        );
    }
    Ok(report.finish())
}

/// Worst margin of `|f(x) - f(y)| <= L d(x,y)` over sampled pairs.
pub fn verify_lipschitz<T: Scalar>(
    f: &Objective<'_, T>,
    region: &GeodesicBall<T>,
    lipschitz: T,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Report> {
    let mut report = Report::new(format!("lipschitz L={}", lipschitz.as_f64()), tolerance);
    let mut sampler = TupleSampler::new(region, 2, 0, seed)?;
    for _ in 0..samples {
        let (p, _) = sampler.next_tuple()?;
        let margin = lipschitz * distance(&p[0], &p[1])? - (f(&p[0])? - f(&p[1])?).abs();
        report.record(
            margin.as_f64(),
            || json!({"x": coords(&p[0]), "y": coords(&p[1])}),
        );
    }
    Ok(report.finish())
}

/// Worst residual of `d(x, m)² <= (2/K)[g(x) - g(m)]` over sampled `x`,
/// where `m` minimizes `g` and `g` is `K`-convex.
pub fn verify_variance_inequality<T: Scalar>(
    g: &Objective<'_, T>,
    mean: &Point<T>,
    k: T,
    region: &GeodesicBall<T>,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Report> {
    if !(k > T::zero()) {
        return Err(invalid("variance inequality needs K > 0"));
    }
    let mut report = Report::new("variance inequality", tolerance);
    let gm = g(mean)?;
    let mut sampler = TupleSampler::new(region, 1, 0, seed)?;
    for i in 0..samples {
        let x = if i == 0 {
            mean.clone()
        } else {
            sampler.next_tuple()?.0.remove(0)
        };
        let d = distance(&x, mean)?;
        let r = T::cst(2.0) / k * (g(&x)? - gm) - d * d;
        report.record(r.as_f64(), || json!({"x": coords(&x)}));
    }
    Ok(report.finish())
}
