use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Distance in the model plane M²(κ) from the vertex `x̃` of a comparison
/// triangle to the point `ỹ #_t z̃`, given the three side lengths.
///
/// Uses the Stewart-type identities of the three model planes:
/// `d² = (1-t)a² + tc² - t(1-t)b²` for κ = 0, and the spherical/hyperbolic
/// analogues written in half-angle form so that nearby points keep full
/// relative accuracy.
pub fn comparison_distance<T: Scalar>(d_xy: T, d_yz: T, d_zx: T, t: T, kappa: T) -> Result<T> {
    let (a, b, c) = (d_xy, d_yz, d_zx);
    if !(a >= T::zero() && b >= T::zero() && c >= T::zero()) {
        return Err(invalid("side lengths must be nonnegative"));
    }
    if !(t >= T::zero() && t <= T::one()) {
        return Err(invalid("t must lie in [0, 1]"));
    }
    let slack = T::cst(1e-9) * (T::one() + a + b + c);
    if a > b + c + slack || b > a + c + slack || c > a + b + slack {
        return Err(invalid("side lengths violate the triangle inequality"));
    }
    if kappa > T::zero() {
        let limit = T::cst(2.0) * T::PI() / kappa.sqrt();
        if a + b + c >= limit {
            return Err(invalid(format!(
                "perimeter {} must be below 2 pi / sqrt(kappa) = {limit}",
                a + b + c
            )));
        }
    }
    if t == T::zero() {
        return Ok(a);
    }
    if t == T::one() {
        return Ok(c);
    }
    let flat = || {
        let q = (T::one() - t) * a * a + t * c * c - t * (T::one() - t) * b * b;
        q.max(T::zero()).sqrt()
    };
    if kappa == T::zero() {
        return Ok(flat());
    }
    let s = kappa.abs().sqrt();
    let (a, b, c) = (a * s, b * s, c * s);
    // Below this length the model plane is flat to working precision.
    if b < T::cst(1e-7) {
        return Ok(flat());
    }
    let two = T::cst(2.0);
    let half = T::cst(0.5);
    let (u, w) = ((T::one() - t) * b, t * b);
    let d = if kappa > T::zero() {
        // 1 - cos d = [sin u (1-cos a) + sin w (1-cos c)
        //             - sin u (1-cos w) - sin w (1-cos u)] / sin b
        let vers = |x: T| two * (x * half).sin().powi(2);
        let num = u.sin() * (vers(a) - vers(w)) + w.sin() * (vers(c) - vers(u));
        let q = (num / b.sin()).max(T::zero()) * half;
        two * q.sqrt().min(T::one()).asin()
    } else {
        let vers = |x: T| two * (x * half).sinh().powi(2);
        let num = u.sinh() * (vers(a) - vers(w)) + w.sinh() * (vers(c) - vers(u));
        let q = (num / b.sinh()).max(T::zero()) * half;
        two * q.sqrt().asinh()
    };
    Ok(d / s)
}
