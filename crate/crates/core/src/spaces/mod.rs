//! Model Alexandrov spaces: Euclidean space, round spheres, hyperbolic space
//! (hyperboloid model) and spiders (half-lines glued at one branch point).
//!
//! Every point is tagged with the [`SpaceDescriptor`] it lives in, and every
//! geodesic primitive is exact (closed form) for the model.

mod comparison;
mod geometry;
pub mod sampling;

use serde::{Deserialize, Serialize};

pub use comparison::comparison_distance;
pub use geometry::{
    distance, exp_map, geodesic_point, grad_exp, inner_product, log_map, project_to_ball,
};

use crate::error::{invalid, Result};
use crate::scalar::{vecops, Scalar};

/// Absolute tolerance on the sphere/hyperboloid constraint accepted by
/// [`SpaceDescriptor::point`], relative to the model radius.
const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean,
    Sphere,
    Hyperbolic,
    Spider,
}

/// Which comparison inequality a space satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Upper,
    Lower,
    Both,
}

impl BoundSide {
    pub fn has_upper(self) -> bool {
        matches!(self, BoundSide::Upper | BoundSide::Both)
    }

    pub fn has_lower(self) -> bool {
        matches!(self, BoundSide::Lower | BoundSide::Both)
    }
}

#[derive(Deserialize)]
struct RawSpace<T> {
    kind: SpaceKind,
    dimension: usize,
    #[serde(default)]
    curvature: Option<T>,
}

/// Kind, dimension and curvature of a model space.
///
/// For a spider `dimension` is the number of legs. The curvature of a spider
/// is its upper bound, always 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace<T>", bound(deserialize = "T: Scalar"))]
pub struct SpaceDescriptor<T> {
    kind: SpaceKind,
    dimension: usize,
    curvature: T,
}

impl<T: Scalar> TryFrom<RawSpace<T>> for SpaceDescriptor<T> {
    type Error = crate::error::Error;

    fn try_from(raw: RawSpace<T>) -> Result<Self> {
        let curvature = match (raw.kind, raw.curvature) {
            (_, Some(k)) => k,
            (SpaceKind::Sphere, None) => T::one(),
            (SpaceKind::Hyperbolic, None) => -T::one(),
            _ => T::zero(),
        };
        SpaceDescriptor::new(raw.kind, raw.dimension, curvature)
    }
}

impl<T: Scalar> SpaceDescriptor<T> {
    pub fn new(kind: SpaceKind, dimension: usize, curvature: T) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        match kind {
            SpaceKind::Euclidean | SpaceKind::Spider if curvature != T::zero() => {
                return Err(invalid(format!(
                    "{kind:?} has curvature 0, got {curvature}"
                )))
            }
            SpaceKind::Spider if dimension < 3 => {
                return Err(invalid("a spider needs at least 3 legs"))
            }
            SpaceKind::Sphere if !(curvature > T::zero() && curvature.is_finite()) => {
                return Err(invalid("sphere curvature must be positive"))
            }
            SpaceKind::Hyperbolic if !(curvature < T::zero() && curvature.is_finite()) => {
                return Err(invalid("hyperbolic curvature must be negative"))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            dimension,
            curvature,
        })
    }

    pub fn euclidean(dimension: usize) -> Result<Self> {
        Self::new(SpaceKind::Euclidean, dimension, T::zero())
    }

    pub fn sphere(dimension: usize, curvature: T) -> Result<Self> {
        Self::new(SpaceKind::Sphere, dimension, curvature)
    }

    pub fn hyperbolic(dimension: usize, curvature: T) -> Result<Self> {
        Self::new(SpaceKind::Hyperbolic, dimension, curvature)
    }

    pub fn spider(legs: usize) -> Result<Self> {
        Self::new(SpaceKind::Spider, legs, T::zero())
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn curvature(&self) -> T {
        self.curvature
    }

    pub fn bound_side(&self) -> BoundSide {
        match self.kind {
            SpaceKind::Spider => BoundSide::Upper,
            _ => BoundSide::Both,
        }
    }

    pub fn is_manifold(&self) -> bool {
        self.kind != SpaceKind::Spider
    }

    /// Length of the coordinate vector of a point.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            SpaceKind::Euclidean => self.dimension,
            SpaceKind::Sphere | SpaceKind::Hyperbolic => self.dimension + 1,
            SpaceKind::Spider => 2,
        }
    }

    /// `1/sqrt(|κ|)`, or 1 for flat spaces.
    pub fn model_radius(&self) -> T {
        if self.curvature == T::zero() {
            T::one()
        } else {
            T::one() / self.curvature.abs().sqrt()
        }
    }

    pub fn injectivity_radius(&self) -> T {
        match self.kind {
            SpaceKind::Sphere => T::PI() * self.model_radius(),
            _ => T::infinity(),
        }
    }

    /// Builds a point from raw coordinates.
    ///
    /// Sphere and hyperboloid coordinates must satisfy their constraint to
    /// 1e-12 (relative to the model radius); they are then renormalized onto
    /// it. Spider coordinates are `[leg, distance_from_branch]`.
    pub fn point(&self, coords: &[T]) -> Result<Point<T>> {
        if coords.len() != self.ambient_dim() {
            return Err(invalid(format!(
                "{:?} point needs {} coordinates, got {}",
                self.kind,
                self.ambient_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        let r = self.model_radius();
        let tol = T::cst(CONSTRAINT_TOL);
        match self.kind {
            SpaceKind::Euclidean => Ok(self.raw_point(coords.to_vec())),
            SpaceKind::Sphere => {
                let n = vecops::norm(coords);
                if ((n - r) / r).abs() > tol {
                    return Err(invalid(format!("|x| = {n} is not the sphere radius {r}")));
                }
                Ok(self.normalized(coords.to_vec()))
            }
            SpaceKind::Hyperbolic => {
                let q = vecops::mdot(coords, coords);
                let target = T::one() / self.curvature;
                if coords[0] <= T::zero() || ((q - target) / (r * r)).abs() > tol {
                    return Err(invalid("point is not on the upper hyperboloid sheet"));
                }
                Ok(self.normalized(coords.to_vec()))
            }
            SpaceKind::Spider => {
                let leg = coords[0];
                if leg < T::zero() || leg.fract() != T::zero() {
                    return Err(invalid("spider leg index must be a nonnegative integer"));
                }
                let leg = leg.to_usize().unwrap_or(usize::MAX);
                self.leg_point(leg, coords[1])
            }
        }
    }

    /// Projects an arbitrary vector onto the model: normalizes onto the
    /// sphere, or lifts the spatial part onto the hyperboloid (the given
    /// time coordinate is ignored).
    pub fn project(&self, coords: &[T]) -> Result<Point<T>> {
        if coords.len() != self.ambient_dim() {
            return Err(invalid("wrong coordinate count"));
        }
        match self.kind {
            SpaceKind::Sphere if vecops::norm(coords) == T::zero() => {
                Err(invalid("cannot project the zero vector onto a sphere"))
            }
            SpaceKind::Sphere | SpaceKind::Hyperbolic => Ok(self.normalized(coords.to_vec())),
            _ => self.point(coords),
        }
    }

    /// A point on a spider leg; distance 0 is the branch point.
    pub fn leg_point(&self, leg: usize, radius: T) -> Result<Point<T>> {
        if self.kind != SpaceKind::Spider {
            return Err(invalid("leg points exist only on spiders"));
        }
        if leg >= self.dimension {
            return Err(invalid(format!(
                "leg {leg} out of range (m = {})",
                self.dimension
            )));
        }
        if !(radius >= T::zero()) || !radius.is_finite() {
            return Err(invalid(
                "distance from branch must be finite and nonnegative",
            ));
        }
        Ok(self.leg_point_unchecked(leg, radius))
    }

    /// The distinguished base point: the origin, the first pole, the
    /// hyperboloid vertex, or the branch point.
    pub fn origin(&self) -> Point<T> {
        match self.kind {
            SpaceKind::Spider => self.leg_point_unchecked(0, T::zero()),
            SpaceKind::Euclidean => self.raw_point(vec![T::zero(); self.ambient_dim()]),
            SpaceKind::Sphere | SpaceKind::Hyperbolic => {
                let mut v = vec![T::zero(); self.ambient_dim()];
                v[0] = self.model_radius();
                self.raw_point(v)
            }
        }
    }

    /// Branch point of a spider (its origin).
    pub fn branch(&self) -> Point<T> {
        self.leg_point_unchecked(0, T::zero())
    }

    pub(crate) fn leg_point_unchecked(&self, leg: usize, radius: T) -> Point<T> {
        let coords = if radius <= T::zero() {
            Coords::Leg {
                leg: 0,
                radius: T::zero(),
            }
        } else {
            Coords::Leg { leg, radius }
        };
        Point {
            space: *self,
            coords,
        }
    }

    pub(crate) fn raw_point(&self, v: Vec<T>) -> Point<T> {
        Point {
            space: *self,
            coords: Coords::Ambient(v),
        }
    }

    /// Renormalizes ambient coordinates onto the constraint surface.
    pub(crate) fn normalized(&self, mut v: Vec<T>) -> Point<T> {
        match self.kind {
            SpaceKind::Sphere => {
                let s = self.model_radius() / vecops::norm(&v);
                v.iter_mut().for_each(|c| *c = *c * s);
            }
            SpaceKind::Hyperbolic => {
                let r = self.model_radius();
                let spatial = vecops::dot(&v[1..], &v[1..]);
                v[0] = (r * r + spatial).sqrt();
            }
            _ => {}
        }
        self.raw_point(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coords<T> {
    Ambient(Vec<T>),
    Leg { leg: usize, radius: T },
}

/// A point of a model space.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T> {
    space: SpaceDescriptor<T>,
    coords: Coords<T>,
}

impl<T: Scalar> Point<T> {
    pub fn space(&self) -> &SpaceDescriptor<T> {
        &self.space
    }

    pub fn coords(&self) -> &Coords<T> {
        &self.coords
    }

    pub fn ambient(&self) -> Option<&[T]> {
        match &self.coords {
            Coords::Ambient(v) => Some(v),
            Coords::Leg { .. } => None,
        }
    }

    /// `(leg, distance_from_branch)` for spider points.
    pub fn leg(&self) -> Option<(usize, T)> {
        match self.coords {
            Coords::Leg { leg, radius } => Some((leg, radius)),
            Coords::Ambient(_) => None,
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self.coords, Coords::Leg { radius, .. } if radius == T::zero())
    }

    /// Flat coordinate array, the serialized form of a point.
    pub fn to_vec(&self) -> Vec<T> {
        match &self.coords {
            Coords::Ambient(v) => v.clone(),
            Coords::Leg { leg, radius } => vec![T::from_usize(*leg).unwrap(), *radius],
        }
    }

    pub fn distance(&self, other: &Point<T>) -> Result<T> {
        distance(self, other)
    }
}

/// Direction part of a tangent vector.
///
/// On manifolds it is an ambient vector of unit length in the space's metric
/// (Minkowski for the hyperboloid) tangent at the base. On spiders it names a
/// leg and whether it points away from (`outward`) or toward the branch.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction<T> {
    Ambient(Vec<T>),
    Leg { leg: usize, outward: bool },
}

/// An element of the tangent cone at `base`; magnitude 0 is the cone origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T> {
    base: Point<T>,
    direction: Direction<T>,
    magnitude: T,
}

impl<T: Scalar> TangentVector<T> {
    pub fn zero(base: Point<T>) -> Self {
        let direction = match base.coords {
            Coords::Ambient(ref v) => Direction::Ambient(vec![T::zero(); v.len()]),
            Coords::Leg { leg, .. } => Direction::Leg { leg, outward: true },
        };
        Self {
            base,
            direction,
            magnitude: T::zero(),
        }
    }

    /// Tangent vector from an ambient vector at a manifold point. The vector
    /// is first projected onto the tangent space.
    pub fn from_ambient(base: Point<T>, v: &[T]) -> Result<Self> {
        let space = *base.space();
        let x = base
            .ambient()
            .ok_or_else(|| invalid("ambient tangent vectors need a manifold base point"))?;
        if v.len() != x.len() {
            return Err(invalid("tangent vector has wrong length"));
        }
        let r2 = space.model_radius() * space.model_radius();
        let projected: Vec<T> = match space.kind() {
            SpaceKind::Euclidean => v.to_vec(),
            SpaceKind::Sphere => {
                let c = vecops::dot(x, v) / r2;
                vecops::lincomb(v, T::one(), x, -c)
            }
            SpaceKind::Hyperbolic => {
                // <x,x> = -R^2
                let c = vecops::mdot(x, v) / r2;
                vecops::lincomb(v, T::one(), x, c)
            }
            SpaceKind::Spider => unreachable!(),
        };
        let magnitude = ambient_norm(&space, &projected);
        if magnitude == T::zero() {
            return Ok(Self::zero(base));
        }
        let direction = Direction::Ambient(vecops::scale(&projected, T::one() / magnitude));
        Ok(Self {
            base,
            direction,
            magnitude,
        })
    }

    /// Spider tangent vector along a leg.
    pub fn along_leg(base: Point<T>, leg: usize, outward: bool, magnitude: T) -> Result<Self> {
        let (base_leg, r) = base
            .leg()
            .ok_or_else(|| invalid("leg directions exist only on spiders"))?;
        if leg >= base.space().dimension() {
            return Err(invalid("leg index out of range"));
        }
        if r == T::zero() && !outward {
            return Err(invalid("at the branch point every direction is outward"));
        }
        if r > T::zero() && leg != base_leg {
            return Err(invalid(
                "off-branch spider directions must follow the base leg",
            ));
        }
        if !(magnitude >= T::zero()) {
            return Err(invalid("magnitude must be nonnegative"));
        }
        Ok(Self {
            base,
            direction: Direction::Leg { leg, outward },
            magnitude,
        })
    }

    pub fn base(&self) -> &Point<T> {
        &self.base
    }

    pub fn direction(&self) -> &Direction<T> {
        &self.direction
    }

    pub fn magnitude(&self) -> T {
        self.magnitude
    }

    /// Multiplies the magnitude by `s >= 0`.
    pub fn scaled(&self, s: T) -> Self {
        debug_assert!(s >= T::zero());
        Self {
            base: self.base.clone(),
            direction: self.direction.clone(),
            magnitude: self.magnitude * s,
        }
    }

    pub fn with_magnitude(&self, magnitude: T) -> Self {
        Self {
            base: self.base.clone(),
            direction: self.direction.clone(),
            magnitude,
        }
    }

    /// `direction * magnitude` as an ambient vector (manifolds only).
    pub fn ambient(&self) -> Option<Vec<T>> {
        match &self.direction {
            Direction::Ambient(u) => Some(vecops::scale(u, self.magnitude)),
            Direction::Leg { .. } => None,
        }
    }
}

/// Norm of an ambient tangent vector in the metric of `space`.
pub(crate) fn ambient_norm<T: Scalar>(space: &SpaceDescriptor<T>, v: &[T]) -> T {
    match space.kind() {
        SpaceKind::Hyperbolic => vecops::mdot(v, v).max(T::zero()).sqrt(),
        _ => vecops::norm(v),
    }
}

/// Inner product of two ambient tangent vectors at the same point.
pub(crate) fn ambient_dot<T: Scalar>(space: &SpaceDescriptor<T>, u: &[T], v: &[T]) -> T {
    match space.kind() {
        SpaceKind::Hyperbolic => vecops::mdot(u, v),
        _ => vecops::dot(u, v),
    }
}

/// Closed metric ball, the region `G` on which flows run.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicBall<T> {
    center: Point<T>,
    radius: T,
}

impl<T: Scalar> GeodesicBall<T> {
    pub fn new(center: Point<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(invalid("ball radius must be positive and finite"));
        }
        let space = center.space();
        if space.kind() == SpaceKind::Sphere && radius * T::cst(2.0) >= space.injectivity_radius() {
            return Err(invalid(
                "sphere ball must have diameter below pi/sqrt(kappa)",
            ));
        }
        Ok(Self { center, radius })
    }

    /// A ball usable as the region of upper-bound flows: on a sphere of
    /// curvature κ its diameter must be below `π/(2√κ)`.
    pub fn for_upper_flows(center: Point<T>, radius: T) -> Result<Self> {
        let ball = Self::new(center, radius)?;
        ball.check_upper_flows()?;
        Ok(ball)
    }

    pub fn check_upper_flows(&self) -> Result<()> {
        let space = self.center.space();
        if space.kind() == SpaceKind::Sphere {
            let limit = T::FRAC_PI_2() * space.model_radius();
            if self.diameter() >= limit {
                return Err(invalid(format!(
                    "region diameter {} must be below pi/(2 sqrt(kappa)) = {limit}",
                    self.diameter()
                )));
            }
        }
        Ok(())
    }

    /// On a sphere, balls of radius below `π/(2√κ)` are geodesically
    /// convex with unique geodesics between their points.
    pub fn check_convex(&self) -> Result<()> {
        let space = self.center.space();
        if space.kind() == SpaceKind::Sphere {
            let limit = T::FRAC_PI_2() * space.model_radius();
            if self.radius >= limit {
                return Err(invalid(format!(
                    "region radius {} must be below pi/(2 sqrt(kappa)) = {limit}",
                    self.radius
                )));
            }
        }
        Ok(())
    }

    pub fn center(&self) -> &Point<T> {
        &self.center
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn space(&self) -> &SpaceDescriptor<T> {
        self.center.space()
    }

    /// Upper bound on the diameter, `2 * radius`.
    pub fn diameter(&self) -> T {
        self.radius * T::cst(2.0)
    }

    pub fn contains(&self, x: &Point<T>, tol: T) -> Result<bool> {
        Ok(distance(&self.center, x)? <= self.radius + tol)
    }
}
