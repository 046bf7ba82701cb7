use super::{ambient_dot, Coords, Direction, GeodesicBall, Point, SpaceKind, TangentVector};
use crate::error::{invalid, Error, Result};
use crate::scalar::{vecops, Scalar};

fn same_space<T: Scalar>(x: &Point<T>, y: &Point<T>) -> Result<()> {
    if x.space() != y.space() {
        return Err(invalid(format!(
            "points from different spaces ({:?} vs {:?})",
            x.space(),
            y.space()
        )));
    }
    Ok(())
}

fn ambient_pair<'a, T: Scalar>(x: &'a Point<T>, y: &'a Point<T>) -> (&'a [T], &'a [T]) {
    (x.ambient().unwrap(), y.ambient().unwrap())
}

fn leg_pair<T: Scalar>(x: &Point<T>, y: &Point<T>) -> ((usize, T), (usize, T)) {
    (x.leg().unwrap(), y.leg().unwrap())
}

/// Geodesic distance, in closed form for every model.
pub fn distance<T: Scalar>(x: &Point<T>, y: &Point<T>) -> Result<T> {
    same_space(x, y)?;
    let space = x.space();
    let r = space.model_radius();
    let two = T::cst(2.0);
    Ok(match space.kind() {
        SpaceKind::Euclidean => {
            let (a, b) = ambient_pair(x, y);
            vecops::norm(&vecops::sub(a, b))
        }
        SpaceKind::Sphere => {
            // angle = 2 atan2(|x - y|, |x + y|) is accurate at both ends
            let (a, b) = ambient_pair(x, y);
            let diff = vecops::norm(&vecops::sub(a, b));
            let sum = vecops::norm(&vecops::add(a, b));
            r * two * diff.atan2(sum)
        }
        SpaceKind::Hyperbolic => {
            // <x-y, x-y> = 4 R^2 sinh^2(d / 2R)
            let (a, b) = ambient_pair(x, y);
            let diff = vecops::sub(a, b);
            let q = vecops::mdot(&diff, &diff).max(T::zero());
            two * r * (q.sqrt() / (two * r)).asinh()
        }
        SpaceKind::Spider => {
            let ((lx, rx), (ly, ry)) = leg_pair(x, y);
            if lx == ly {
                (rx - ry).abs()
            } else {
                rx + ry
            }
        }
    })
}

/// The point `x #_t y` at fraction `t` along the minimal geodesic.
pub fn geodesic_point<T: Scalar>(x: &Point<T>, y: &Point<T>, t: T) -> Result<Point<T>> {
    same_space(x, y)?;
    if !(t >= T::zero() && t <= T::one()) {
        return Err(invalid(format!("geodesic parameter {t} outside [0, 1]")));
    }
    if t == T::zero() {
        return Ok(x.clone());
    }
    if t == T::one() {
        return Ok(y.clone());
    }
    let space = *x.space();
    match space.kind() {
        SpaceKind::Euclidean => {
            let (a, b) = ambient_pair(x, y);
            Ok(space.raw_point(vecops::lincomb(a, T::one(), &vecops::sub(b, a), t)))
        }
        SpaceKind::Sphere | SpaceKind::Hyperbolic => {
            let v = log_map(x, y)?;
            exp_map(&v.scaled(t))
        }
        SpaceKind::Spider => {
            let ((lx, rx), (ly, ry)) = leg_pair(x, y);
            if lx == ly {
                return Ok(space.leg_point_unchecked(lx, rx + t * (ry - rx)));
            }
            let s = t * (rx + ry);
            if s <= rx {
                Ok(space.leg_point_unchecked(lx, rx - s))
            } else {
                Ok(space.leg_point_unchecked(ly, s - rx))
            }
        }
    }
}

/// Initial direction and length of the minimal geodesic from `x` to `y`.
pub fn log_map<T: Scalar>(x: &Point<T>, y: &Point<T>) -> Result<TangentVector<T>> {
    let d = distance(x, y)?;
    if d == T::zero() {
        return Ok(TangentVector::zero(x.clone()));
    }
    let space = *x.space();
    let r = space.model_radius();
    let two = T::cst(2.0);
    match space.kind() {
        SpaceKind::Euclidean => {
            let (a, b) = ambient_pair(x, y);
            let u = vecops::scale(&vecops::sub(b, a), T::one() / d);
            Ok(TangentVector {
                base: x.clone(),
                direction: Direction::Ambient(u),
                magnitude: d,
            })
        }
        SpaceKind::Sphere | SpaceKind::Hyperbolic => {
            let (a, b) = ambient_pair(x, y);
            if space.kind() == SpaceKind::Sphere && vecops::dot(a, b) < T::zero() {
                let sum = vecops::norm(&vecops::add(a, b));
                if sum <= T::epsilon() * r * T::cst(16.0) {
                    return Err(Error::NonUniqueGeodesic);
                }
            }
            // w = (y - x) + c x with c = 1 - cos(d/R) on the sphere and
            // c = 1 - cosh(d/R) on the hyperboloid, written without cancellation.
            let half = d / (two * r);
            let c = match space.kind() {
                SpaceKind::Sphere => two * half.sin().powi(2),
                _ => -two * half.sinh().powi(2),
            };
            let w = vecops::lincomb(&vecops::sub(b, a), T::one(), a, c);
            let nw = super::ambient_norm(&space, &w);
            if nw == T::zero() {
                return Err(Error::NonUniqueGeodesic);
            }
            Ok(TangentVector {
                base: x.clone(),
                direction: Direction::Ambient(vecops::scale(&w, T::one() / nw)),
                magnitude: d,
            })
        }
        SpaceKind::Spider => {
            let ((lx, rx), (ly, ry)) = leg_pair(x, y);
            let direction = if rx == T::zero() {
                Direction::Leg {
                    leg: ly,
                    outward: true,
                }
            } else if lx == ly && ry > rx {
                Direction::Leg {
                    leg: lx,
                    outward: true,
                }
            } else {
                Direction::Leg {
                    leg: lx,
                    outward: false,
                }
            };
            Ok(TangentVector {
                base: x.clone(),
                direction,
                magnitude: d,
            })
        }
    }
}

/// Unit-speed geodesic from the base in the given direction, evaluated at
/// the vector's magnitude.
///
/// On a spider the geodesic must stay on one leg (or leave the branch point
/// along a named leg).
pub fn exp_map<T: Scalar>(v: &TangentVector<T>) -> Result<Point<T>> {
    let base = v.base();
    let s = v.magnitude();
    if s == T::zero() {
        return Ok(base.clone());
    }
    let space = *base.space();
    let r = space.model_radius();
    match (&v.direction, base.coords()) {
        (Direction::Ambient(u), Coords::Ambient(x)) => match space.kind() {
            SpaceKind::Euclidean => Ok(space.raw_point(vecops::lincomb(x, T::one(), u, s))),
            SpaceKind::Sphere => {
                let th = s / r;
                Ok(space.normalized(vecops::lincomb(x, th.cos(), u, r * th.sin())))
            }
            SpaceKind::Hyperbolic => {
                let th = s / r;
                Ok(space.normalized(vecops::lincomb(x, th.cosh(), u, r * th.sinh())))
            }
            SpaceKind::Spider => unreachable!(),
        },
        (&Direction::Leg { leg, outward }, &Coords::Leg { leg: bl, radius }) => {
            if radius == T::zero() {
                if !outward {
                    return Err(invalid("direction at the branch point must name a leg"));
                }
                return Ok(space.leg_point_unchecked(leg, s));
            }
            if leg != bl {
                return Err(invalid("spider direction does not follow the base leg"));
            }
            if outward {
                Ok(space.leg_point_unchecked(leg, radius + s))
            } else if s <= radius {
                Ok(space.leg_point_unchecked(leg, radius - s))
            } else {
                Err(invalid(
                    "spider geodesic would pass the branch point; continuation is ambiguous",
                ))
            }
        }
        _ => Err(invalid("tangent direction does not match the base point")),
    }
}

/// Gradient exponential: agrees with [`exp_map`] inside the injectivity
/// radius; on a sphere, magnitudes at or beyond `π/√κ` land on the antipode
/// of the base. Never moves farther than the magnitude.
pub fn grad_exp<T: Scalar>(v: &TangentVector<T>) -> Result<Point<T>> {
    let base = v.base();
    let space = *base.space();
    match space.kind() {
        SpaceKind::Spider => Err(Error::UnsupportedSpace(
            "gradient exponential needs a lower curvature bound; spiders have none".into(),
        )),
        SpaceKind::Sphere if v.magnitude() >= space.injectivity_radius() => {
            let x = base.ambient().unwrap();
            Ok(space.normalized(vecops::scale(x, -T::one())))
        }
        _ => exp_map(v),
    }
}

/// `⟨u, v⟩ = |u| |v| cos ∠(u, v)` in the tangent cone.
pub fn inner_product<T: Scalar>(u: &TangentVector<T>, v: &TangentVector<T>) -> Result<T> {
    if u.base() != v.base() {
        return Err(invalid("tangent vectors have different base points"));
    }
    if u.magnitude() == T::zero() || v.magnitude() == T::zero() {
        return Ok(T::zero());
    }
    let cos = match (u.direction(), v.direction()) {
        (Direction::Ambient(a), Direction::Ambient(b)) => ambient_dot(u.base().space(), a, b)
            .max(-T::one())
            .min(T::one()),
        // Distinct spider directions meet at angle π.
        (Direction::Leg { .. }, Direction::Leg { .. }) => {
            if u.direction() == v.direction() {
                T::one()
            } else {
                -T::one()
            }
        }
        _ => return Err(invalid("mismatched tangent representations")),
    };
    Ok(u.magnitude() * v.magnitude() * cos)
}

/// Nearest point of the ball along the geodesic from its center.
pub fn project_to_ball<T: Scalar>(x: &Point<T>, ball: &GeodesicBall<T>) -> Result<Point<T>> {
    let d = distance(ball.center(), x)?;
    if d <= ball.radius() {
        return Ok(x.clone());
    }
    geodesic_point(ball.center(), x, ball.radius() / d)
}
