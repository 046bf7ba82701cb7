//! Convex functionals built from distance functions, with convexity
//! modulus `K`, Lipschitz constant `L`, directional derivatives and the
//! descent vector `∇(-f)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{vecops, Scalar};
use crate::spaces::sampling::TupleSampler;
use crate::spaces::{
    distance, geodesic_point, inner_product, log_map, GeodesicBall, Point, SpaceDescriptor,
    SpaceKind, TangentVector,
};

/// Number of samples used for empirical moduli.
pub const EMPIRICAL_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Functional<T> {
    /// `d(·, a)²`
    SquaredDistance(Point<T>),
    /// `d(·, a)^p`, `p >= 1`
    DistancePower { anchor: Point<T>, p: T },
    /// `Σ wᵢ fᵢ`, `wᵢ >= 0`
    WeightedSum(Vec<(T, Functional<T>)>),
    /// `⟨slope, x⟩ + offset` on Euclidean space.
    Affine {
        space: SpaceDescriptor<T>,
        slope: Vec<T>,
        offset: T,
    },
}

impl<T: Scalar> Functional<T> {
    pub fn squared_distance(anchor: Point<T>) -> Self {
        Functional::SquaredDistance(anchor)
    }

    pub fn distance_power(anchor: Point<T>, p: T) -> Result<Self> {
        if !(p >= T::one()) || !p.is_finite() {
            return Err(invalid(format!("distance power needs p >= 1, got {p}")));
        }
        Ok(Functional::DistancePower { anchor, p })
    }

    pub fn weighted_sum(terms: Vec<(T, Functional<T>)>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| invalid("weighted sum needs at least one term"))?;
        let space = first.1.space();
        for (w, f) in &terms {
            if !(*w >= T::zero()) || !w.is_finite() {
                return Err(invalid(format!("weights must be nonnegative, got {w}")));
            }
            if f.space() != space {
                return Err(invalid("weighted sum mixes spaces"));
            }
        }
        Ok(Functional::WeightedSum(terms))
    }

    /// Weighted sum of squared distances to `anchors`.
    pub fn frechet(anchors: &[Point<T>], weights: &[T]) -> Result<Self> {
        if anchors.len() != weights.len() {
            return Err(invalid("anchor and weight counts differ"));
        }
        Self::weighted_sum(
            weights
                .iter()
                .zip(anchors)
                .map(|(w, a)| (*w, Functional::SquaredDistance(a.clone())))
                .collect(),
        )
    }

    pub fn affine(space: SpaceDescriptor<T>, slope: Vec<T>, offset: T) -> Result<Self> {
        if space.kind() != SpaceKind::Euclidean {
            return Err(Error::UnsupportedSpace(
                "affine functionals exist only on Euclidean space".into(),
            ));
        }
        if slope.len() != space.dimension() {
            return Err(invalid("slope has wrong length"));
        }
        Ok(Functional::Affine {
            space,
            slope,
            offset,
        })
    }

    pub fn space(&self) -> SpaceDescriptor<T> {
        match self {
            Functional::SquaredDistance(a) => *a.space(),
            Functional::DistancePower { anchor, .. } => *anchor.space(),
            Functional::WeightedSum(terms) => terms[0].1.space(),
            Functional::Affine { space, .. } => *space,
        }
    }

    /// Anchor of a single distance term, if this is one.
    pub fn anchor(&self) -> Option<&Point<T>> {
        match self {
            Functional::SquaredDistance(a) | Functional::DistancePower { anchor: a, .. } => Some(a),
            _ => None,
        }
    }

    fn check_space(&self, x: &Point<T>) -> Result<()> {
        if *x.space() != self.space() {
            return Err(invalid("point and functional live in different spaces"));
        }
        Ok(())
    }

    pub fn value(&self, x: &Point<T>) -> Result<T> {
        self.check_space(x)?;
        Ok(match self {
            Functional::SquaredDistance(a) => distance(x, a)?.powi(2),
            Functional::DistancePower { anchor, p } => distance(x, anchor)?.powf(*p),
            Functional::WeightedSum(terms) => {
                let mut s = T::zero();
                for (w, f) in terms {
                    s = s + *w * f.value(x)?;
                }
                s
            }
            Functional::Affine { slope, offset, .. } => {
                vecops::dot(slope, x.ambient().unwrap()) + *offset
            }
        })
    }

    /// One-sided directional derivative `D_x f(v)` in closed form.
    pub fn directional_derivative(&self, v: &TangentVector<T>) -> Result<T> {
        let x = v.base();
        self.check_space(x)?;
        if v.magnitude() == T::zero() {
            return Ok(T::zero());
        }
        match self {
            Functional::SquaredDistance(a) => power_derivative(x, a, T::cst(2.0), v),
            Functional::DistancePower { anchor, p } => power_derivative(x, anchor, *p, v),
            Functional::WeightedSum(terms) => {
                let mut s = T::zero();
                for (w, f) in terms {
                    s = s + *w * f.directional_derivative(v)?;
                }
                Ok(s)
            }
            Functional::Affine { slope, .. } => Ok(vecops::dot(slope, &v.ambient().unwrap())),
        }
    }

    /// The descent vector `∇(-f)(x)`; its magnitude is `|∇₋f|(x)`.
    ///
    /// At the anchor of a `p = 1` term the minimal-norm element of the
    /// subdifferential is used.
    pub fn descent(&self, x: &Point<T>) -> Result<GradientInfo<T>> {
        self.check_space(x)?;
        if !x.space().is_manifold() {
            return Err(Error::UnsupportedSpace(
                "gradient vectors need a lower curvature bound; spiders have none".into(),
            ));
        }
        let mut g = vec![T::zero(); x.space().ambient_dim()];
        let mut kink = T::zero();
        self.accumulate_gradient(x, T::one(), &mut g, &mut kink)?;
        let norm = crate::spaces::ambient_norm(x.space(), &g);
        let shrink = if norm > kink {
            (norm - kink) / norm
        } else {
            T::zero()
        };
        let descent = TangentVector::from_ambient(x.clone(), &vecops::scale(&g, -shrink))?;
        Ok(GradientInfo {
            absolute_gradient: descent.magnitude(),
            descent,
        })
    }

    fn accumulate_gradient(
        &self,
        x: &Point<T>,
        weight: T,
        g: &mut Vec<T>,
        kink: &mut T,
    ) -> Result<()> {
        let add_power = |a: &Point<T>, p: T, g: &mut Vec<T>, kink: &mut T| -> Result<()> {
            let log = log_map(x, a)?;
            let d = log.magnitude();
            if d == T::zero() {
                if p == T::one() {
                    *kink = *kink + weight;
                }
                return Ok(());
            }
            // grad d^p = -p d^(p-2) log_x a
            let c = -weight * p * d.powf(p - T::cst(2.0));
            *g = vecops::lincomb(g, T::one(), &log.ambient().unwrap(), c);
            Ok(())
        };
        match self {
            Functional::SquaredDistance(a) => add_power(a, T::cst(2.0), g, kink),
            Functional::DistancePower { anchor, p } => add_power(anchor, *p, g, kink),
            Functional::WeightedSum(terms) => {
                for (w, f) in terms {
                    f.accumulate_gradient(x, weight * *w, g, kink)?;
                }
                Ok(())
            }
            Functional::Affine { slope, .. } => {
                *g = vecops::lincomb(g, T::one(), slope, weight);
                Ok(())
            }
        }
    }

    /// Certified modulus and Lipschitz constant on `region`. The modulus is
    /// `None` when no closed-form constant is known.
    pub fn certified_constants(&self, region: &GeodesicBall<T>) -> Result<(Option<T>, T)> {
        match self {
            Functional::SquaredDistance(a) => {
                let reach = reach(a, region)?;
                Ok((
                    squared_distance_modulus(region.space(), reach),
                    T::cst(2.0) * reach,
                ))
            }
            Functional::DistancePower { anchor, p } => {
                let reach = reach(anchor, region)?;
                let k = if *p == T::cst(2.0) {
                    squared_distance_modulus(region.space(), reach)
                } else {
                    None
                };
                Ok((k, *p * reach.powf(*p - T::one())))
            }
            Functional::WeightedSum(terms) => {
                let mut k = Some(T::zero());
                let mut l = T::zero();
                for (w, f) in terms {
                    let (ki, li) = f.certified_constants(region)?;
                    k = k.zip(ki).map(|(a, b)| a + *w * b);
                    l = l + *w * li;
                }
                Ok((k, l))
            }
            Functional::Affine { slope, .. } => Ok((Some(T::zero()), vecops::norm(slope))),
        }
    }
}

/// `D_x d_a^p (v) = -p d^(p-2) ⟨v, log_x a⟩`, with the kink at `a` for `p = 1`.
fn power_derivative<T: Scalar>(
    x: &Point<T>,
    a: &Point<T>,
    p: T,
    v: &TangentVector<T>,
) -> Result<T> {
    let log = match log_map(x, a) {
        Ok(l) => l,
        // at the antipode every direction decreases the distance at unit rate
        Err(Error::NonUniqueGeodesic) => {
            let d = distance(x, a)?;
            return Ok(-p * d.powf(p - T::one()) * v.magnitude());
        }
        Err(e) => return Err(e),
    };
    let d = log.magnitude();
    if d == T::zero() {
        return Ok(if p == T::one() {
            v.magnitude()
        } else {
            T::zero()
        });
    }
    Ok(-p * d.powf(p - T::cst(2.0)) * inner_product(v, &log)?)
}

/// Largest distance from `a` to a point of `region` that the constants are
/// certified for: at least the region's diameter.
fn reach<T: Scalar>(a: &Point<T>, region: &GeodesicBall<T>) -> Result<T> {
    Ok(region
        .diameter()
        .max(distance(a, region.center())? + region.radius()))
}

/// Modulus of `d_a²` on points within `reach` of `a`: 2 without positive
/// curvature, `(π - 2ε) tan ε` with `reach = (π/2 - ε)/√κ` on spheres.
fn squared_distance_modulus<T: Scalar>(space: &SpaceDescriptor<T>, reach: T) -> Option<T> {
    match space.kind() {
        SpaceKind::Sphere => {
            let eps = T::FRAC_PI_2() - reach * space.curvature().sqrt();
            if eps > T::zero() {
                Some((T::PI() - T::cst(2.0) * eps) * eps.tan())
            } else {
                None
            }
        }
        _ => Some(T::cst(2.0)),
    }
}

/// `K'` such that `-d_y²` is `(-K')`-convex on `region` for every `y` in it:
/// `2(1 - κ(2r)²)` for `κ < 0` and 2 otherwise.
pub fn concavity_constant<T: Scalar>(region: &GeodesicBall<T>) -> T {
    let kappa = region.space().curvature();
    let two = T::cst(2.0);
    if kappa < T::zero() {
        two * (T::one() - kappa * region.diameter().powi(2))
    } else {
        two
    }
}

/// `|∇₋f|(x)` together with the descent vector `∇(-f)(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientInfo<T> {
    pub absolute_gradient: T,
    pub descent: TangentVector<T>,
}

/// A value together with whether the point lies in the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<T> {
    pub value: T,
    pub in_region: bool,
}

/// A functional on a region with its modulus `K` and Lipschitz constant `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSpec<T> {
    functional: Functional<T>,
    region: GeodesicBall<T>,
    modulus: T,
    lipschitz: T,
    certified: bool,
}

impl<T: Scalar> FunctionalSpec<T> {
    /// Attaches certified constants, or an empirical modulus (flagged as not
    /// certified) when none is known.
    pub fn new(functional: Functional<T>, region: GeodesicBall<T>) -> Result<Self> {
        Self::with_samples(functional, region, EMPIRICAL_SAMPLES)
    }

    /// As [`FunctionalSpec::new`], drawing `samples` points for an empirical
    /// modulus.
    pub fn with_samples(
        functional: Functional<T>,
        region: GeodesicBall<T>,
        samples: usize,
    ) -> Result<Self> {
        if functional.space() != *region.space() {
            return Err(invalid("functional and region live in different spaces"));
        }
        let (k, lipschitz) = functional.certified_constants(&region)?;
        let (modulus, certified) = match k {
            Some(k) => (k, true),
            None => (empirical_modulus(&functional, &region, samples, 0)?, false),
        };
        Ok(Self {
            functional,
            region,
            modulus,
            lipschitz,
            certified,
        })
    }

    pub fn functional(&self) -> &Functional<T> {
        &self.functional
    }

    pub fn region(&self) -> &GeodesicBall<T> {
        &self.region
    }

    pub fn modulus(&self) -> T {
        self.modulus
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub fn space(&self) -> SpaceDescriptor<T> {
        self.functional.space()
    }

    pub fn value(&self, x: &Point<T>) -> Result<T> {
        self.functional.value(x)
    }

    pub fn evaluate_checked(&self, x: &Point<T>) -> Result<Evaluation<T>> {
        Ok(Evaluation {
            value: self.functional.value(x)?,
            in_region: self.region.contains(x, T::cst(1e-10))?,
        })
    }

    pub fn directional_derivative(&self, v: &TangentVector<T>) -> Result<T> {
        self.functional.directional_derivative(v)
    }

    pub fn descent(&self, x: &Point<T>) -> Result<GradientInfo<T>> {
        self.functional.descent(x)
    }
}

/// Largest `K` consistent with the convexity inequality
/// `f(x #_t y) <= (1-t) f(x) + t f(y) - (K/2) t (1-t) d(x,y)²`
/// over `samples` low-discrepancy draws from `region`.
pub fn empirical_modulus<T: Scalar>(
    f: &Functional<T>,
    region: &GeodesicBall<T>,
    samples: usize,
    seed: u64,
) -> Result<T> {
    let mut sampler = TupleSampler::new(region, 2, 1, seed)?;
    let mut best = T::infinity();
    for _ in 0..samples {
        let (pts, extra) = sampler.next_tuple()?;
        let t = T::cst(0.05 + 0.9 * extra[0]);
        let d = distance(&pts[0], &pts[1])?;
        if d < T::cst(1e-4) * (T::one() + region.radius()) {
            continue;
        }
        let m = geodesic_point(&pts[0], &pts[1], t)?;
        let gap = (T::one() - t) * f.value(&pts[0])? + t * f.value(&pts[1])? - f.value(&m)?;
        let k = T::cst(2.0) * gap / (t * (T::one() - t) * d * d);
        best = best.min(k);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(invalid("region too small to sample a modulus"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    SquaredDistance,
    DistancePower,
    WeightedSum,
    Affine,
}

/// Serialized form of a functional: `weighted_sum` combines one distance
/// term per anchor (power `p`, default 2) with the given weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct FunctionalDescriptor<T> {
    pub kind: FunctionalKind,
    #[serde(default)]
    pub anchors: Vec<Vec<T>>,
    #[serde(default)]
    pub weights: Vec<T>,
    #[serde(default)]
    pub p: Option<T>,
    #[serde(default)]
    pub slope: Vec<T>,
    #[serde(default)]
    pub offset: Option<T>,
}

impl<T: Scalar> FunctionalDescriptor<T> {
    pub fn build(&self, space: &SpaceDescriptor<T>) -> Result<Functional<T>> {
        let anchors = self
            .anchors
            .iter()
            .map(|c| space.point(c))
            .collect::<Result<Vec<_>>>()?;
        let two = T::cst(2.0);
        let term = |a: Point<T>| -> Result<Functional<T>> {
            match self.p {
                Some(p) if p != two => Functional::distance_power(a, p),
                _ => Ok(Functional::SquaredDistance(a)),
            }
        };
        let single = || -> Result<Point<T>> {
            match anchors.as_slice() {
                [a] => Ok(a.clone()),
                _ => Err(invalid(format!("{:?} needs exactly one anchor", self.kind))),
            }
        };
        match self.kind {
            FunctionalKind::SquaredDistance => Ok(Functional::SquaredDistance(single()?)),
            FunctionalKind::DistancePower => {
                let p = self.p.ok_or_else(|| invalid("distance_power needs p"))?;
                Functional::distance_power(single()?, p)
            }
            FunctionalKind::WeightedSum => {
                if anchors.is_empty() {
                    return Err(invalid("weighted_sum needs anchors"));
                }
                let weights = if self.weights.is_empty() {
                    vec![T::one() / T::cst(anchors.len() as f64); anchors.len()]
                } else if self.weights.len() == anchors.len() {
                    self.weights.clone()
                } else {
                    return Err(invalid("weights and anchors differ in length"));
                };
                let terms = weights
                    .into_iter()
                    .zip(anchors)
                    .map(|(w, a)| Ok((w, term(a)?)))
                    .collect::<Result<Vec<_>>>()?;
                Functional::weighted_sum(terms)
            }
            FunctionalKind::Affine => {
                Functional::affine(*space, self.slope.clone(), self.offset.unwrap_or(T::zero()))
            }
        }
    }
}
