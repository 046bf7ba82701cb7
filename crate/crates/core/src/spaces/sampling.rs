//! Charts of geodesic balls and deterministic point samplers.
//!
//! A ball in a manifold is charted by normal coordinates at its center:
//! coefficients `c` in an orthonormal tangent basis map to
//! `exp(center, Σ c_i e_i)`. A spider ball is charted by `(route, s)` where
//! `route` picks one of the `m` ways to leave the center and `s` is the
//! distance travelled.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::{
    ambient_dot, exp_map, Coords, GeodesicBall, Point, SpaceDescriptor, SpaceKind, TangentVector,
};
use crate::error::{invalid, Error, Result};
use crate::scalar::{vecops, Scalar};

/// Orthonormal basis of the tangent space at a manifold point, as ambient
/// vectors.
pub fn tangent_basis<T: Scalar>(x: &Point<T>) -> Result<Vec<Vec<T>>> {
    let space = *x.space();
    let base = x
        .ambient()
        .ok_or_else(|| Error::UnsupportedSpace("spiders have no tangent basis".into()))?;
    let n = space.ambient_dim();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(space.dimension());
    let r2 = space.model_radius() * space.model_radius();
    let start = usize::from(space.kind() == SpaceKind::Hyperbolic);
    for i in start..n {
        let mut e = vec![T::zero(); n];
        e[i] = T::one();
        // project onto the tangent space
        match space.kind() {
            SpaceKind::Sphere => {
                let c = vecops::dot(base, &e) / r2;
                e = vecops::lincomb(&e, T::one(), base, -c);
            }
            SpaceKind::Hyperbolic => {
                let c = vecops::mdot(base, &e) / r2;
                e = vecops::lincomb(&e, T::one(), base, c);
            }
            _ => {}
        }
        for b in &basis {
            let c = ambient_dot(&space, b, &e);
            e = vecops::lincomb(&e, T::one(), b, -c);
        }
        let len = ambient_dot(&space, &e, &e).max(T::zero()).sqrt();
        if len > T::cst(1e-6) {
            basis.push(vecops::scale(&e, T::one() / len));
        }
        if basis.len() == space.dimension() {
            break;
        }
    }
    debug_assert_eq!(basis.len(), space.dimension());
    Ok(basis)
}

/// Normal-coordinate chart of a geodesic ball.
#[derive(Debug, Clone)]
pub struct BallChart<T> {
    ball: GeodesicBall<T>,
    basis: Vec<Vec<T>>,
}

impl<T: Scalar> BallChart<T> {
    pub fn new(ball: &GeodesicBall<T>) -> Result<Self> {
        let basis = if ball.space().is_manifold() {
            tangent_basis(ball.center())?
        } else {
            Vec::new()
        };
        Ok(Self {
            ball: ball.clone(),
            basis,
        })
    }

    pub fn ball(&self) -> &GeodesicBall<T> {
        &self.ball
    }

    /// Number of chart coordinates (manifold dimension, or 2 for spiders).
    pub fn dim(&self) -> usize {
        match self.ball.space().kind() {
            SpaceKind::Spider => 2,
            _ => self.ball.space().dimension(),
        }
    }

    /// Number of distinct routes out of the center of a spider ball.
    pub fn routes(&self) -> usize {
        self.ball.space().dimension()
    }

    /// Manifold point with normal coordinates `coeffs` (not clipped).
    pub fn manifold_point(&self, coeffs: &[T]) -> Result<Point<T>> {
        if coeffs.len() != self.basis.len() {
            return Err(invalid("chart coefficient count mismatch"));
        }
        let center = self.ball.center();
        let mut v = vec![T::zero(); center.space().ambient_dim()];
        for (c, e) in coeffs.iter().zip(&self.basis) {
            v = vecops::lincomb(&v, T::one(), e, *c);
        }
        exp_map(&TangentVector::from_ambient(center.clone(), &v)?)
    }

    /// Spider point reached by leaving the center along `route` for length
    /// `s`. Route equal to the center leg means outward along it; any other
    /// route first walks to the branch point and then out along that leg.
    pub fn spider_point(&self, route: usize, s: T) -> Result<Point<T>> {
        let space = *self.ball.space();
        let (leg, rc) = match self.ball.center().coords() {
            Coords::Leg { leg, radius } => (*leg, *radius),
            Coords::Ambient(_) => return Err(invalid("not a spider ball")),
        };
        if route >= space.dimension() {
            return Err(invalid("route index out of range"));
        }
        if rc == T::zero() {
            return Ok(space.leg_point_unchecked(route, s));
        }
        if route == leg {
            Ok(space.leg_point_unchecked(leg, rc + s))
        } else if s <= rc {
            Ok(space.leg_point_unchecked(leg, rc - s))
        } else {
            Ok(space.leg_point_unchecked(route, s - rc))
        }
    }

    /// Maps a point of the unit cube `[0,1]^dim` into the ball.
    ///
    /// Manifolds: the cube `[-1,1]^n` is mapped radially onto the unit ball
    /// (each ray keeps its direction, the cube surface goes to the sphere)
    /// and scaled by the ball radius.
    pub fn from_unit(&self, u: &[f64]) -> Result<Point<T>> {
        self.map_unit_scaled(u, None)
    }

    /// Like [`from_unit`](Self::from_unit) but on the boundary sphere.
    pub fn boundary_from_unit(&self, u: &[f64]) -> Result<Point<T>> {
        self.map_unit_scaled(u, Some(1.0))
    }

    fn map_unit_scaled(&self, u: &[f64], fixed_radius: Option<f64>) -> Result<Point<T>> {
        let rho = self.ball.radius();
        if self.ball.space().kind() == SpaceKind::Spider {
            let routes = self.routes();
            let route = ((u[0] * routes as f64) as usize).min(routes - 1);
            let frac = fixed_radius.unwrap_or(u[1]);
            return self.spider_point(route, rho * T::cst(frac));
        }
        let v: Vec<f64> = u.iter().map(|&x| 2.0 * x - 1.0).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            return Ok(self.ball.center().clone());
        }
        let cube = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let radial = fixed_radius.unwrap_or(cube);
        let coeffs: Vec<T> = v.iter().map(|x| rho * T::cst(x / len * radial)).collect();
        self.manifold_point(&coeffs)
    }
}

/// Seeded additive-recurrence (Kronecker) low-discrepancy sequence in the
/// unit cube, with a random Cranley–Patterson shift.
#[derive(Debug, Clone)]
pub struct LowDiscrepancy {
    alpha: Vec<f64>,
    state: Vec<f64>,
}

impl LowDiscrepancy {
    pub fn new(dim: usize, seed: u64) -> Self {
        // generalized golden ratio: positive root of x^(d+1) = x + 1
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim)
            .map(|j| (1.0 / phi.powi(j as i32)).fract())
            .collect();
        let mut rng = SplitMix64::seed_from_u64(seed);
        let state = (0..dim).map(|_| rng.random::<f64>()).collect();
        Self { alpha, state }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        for (s, a) in self.state.iter_mut().zip(&self.alpha) {
            *s = (*s + a).fract();
        }
        self.state.clone()
    }
}

/// Draws tuples of points from a ball together with extra uniform
/// parameters, all from one low-discrepancy sequence.
#[derive(Debug, Clone)]
pub struct TupleSampler<T> {
    chart: BallChart<T>,
    seq: LowDiscrepancy,
    arity: usize,
    extras: usize,
}

impl<T: Scalar> TupleSampler<T> {
    pub fn new(ball: &GeodesicBall<T>, arity: usize, extras: usize, seed: u64) -> Result<Self> {
        let chart = BallChart::new(ball)?;
        let seq = LowDiscrepancy::new(chart.dim() * arity + extras, seed);
        Ok(Self {
            chart,
            seq,
            arity,
            extras,
        })
    }

    pub fn chart(&self) -> &BallChart<T> {
        &self.chart
    }

    /// Next tuple: `arity` points and `extras` numbers in `[0, 1)`.
    pub fn next_tuple(&mut self) -> Result<(Vec<Point<T>>, Vec<f64>)> {
        let u = self.seq.next_point();
        let d = self.chart.dim();
        let points = (0..self.arity)
            .map(|i| self.chart.from_unit(&u[i * d..(i + 1) * d]))
            .collect::<Result<Vec<_>>>()?;
        let extras = u[d * self.arity..d * self.arity + self.extras].to_vec();
        Ok((points, extras))
    }
}

/// Convenience: `count` points of `space` spread over `ball`.
pub fn sample_ball<T: Scalar>(
    ball: &GeodesicBall<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<Point<T>>> {
    let chart = BallChart::new(ball)?;
    let mut seq = LowDiscrepancy::new(chart.dim(), seed);
    (0..count)
        .map(|_| chart.from_unit(&seq.next_point()))
        .collect()
}

/// Uniformly spread unit tangent vectors at a manifold point, or the leg
/// directions available at a spider point.
pub fn sample_directions<T: Scalar>(
    x: &Point<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<TangentVector<T>>> {
    let space: SpaceDescriptor<T> = *x.space();
    if let Some((leg, r)) = x.leg() {
        return if r == T::zero() {
            (0..space.dimension())
                .map(|l| TangentVector::along_leg(x.clone(), l, true, T::one()))
                .collect()
        } else {
            [true, false]
                .iter()
                .map(|&o| TangentVector::along_leg(x.clone(), leg, o, T::one()))
                .collect()
        };
    }
    let basis = tangent_basis(x)?;
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let coeffs: Vec<f64> = (0..basis.len())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let len = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(len > 1e-3 && len <= 1.0) {
            continue;
        }
        let mut v = vec![T::zero(); space.ambient_dim()];
        for (c, e) in coeffs.iter().zip(&basis) {
            v = vecops::lincomb(&v, T::one(), e, T::cst(c / len));
        }
        out.push(TangentVector::from_ambient(x.clone(), &v)?);
    }
    Ok(out)
}
