//! Step-size sequences `λ_k` and the convergence-rate envelope for
//! recursions `a_{k+1} <= (1 - α/(k+1)) a_k + β/(k+1)²`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "snake_case",
    bound(deserialize = "T: Scalar")
)]
pub enum ScheduleKind<T> {
    /// `λ_k = c`
    Constant { c: T },
    /// `λ_k = c/(k+1)`
    Harmonic { c: T },
    /// `λ_k = c/(k+1)^q`
    Power { c: T, q: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule<T>", bound(deserialize = "T: Scalar"))]
pub struct StepSchedule<T> {
    #[serde(flatten)]
    kind: ScheduleKind<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cap: Option<T>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
struct RawSchedule<T> {
    #[serde(flatten)]
    kind: ScheduleKind<T>,
    #[serde(default)]
    cap: Option<T>,
}

impl<T: Scalar> TryFrom<RawSchedule<T>> for StepSchedule<T> {
    type Error = crate::error::Error;

    fn try_from(raw: RawSchedule<T>) -> Result<Self> {
        let s = StepSchedule::new(raw.kind)?;
        match raw.cap {
            Some(cap) => s.with_cap(cap),
            None => Ok(s),
        }
    }
}

impl<T: Scalar> StepSchedule<T> {
    pub fn new(kind: ScheduleKind<T>) -> Result<Self> {
        let (c, q) = match kind {
            ScheduleKind::Constant { c } | ScheduleKind::Harmonic { c } => (c, T::one()),
            ScheduleKind::Power { c, q } => (c, q),
        };
        if !(c > T::zero() && c.is_finite()) {
            return Err(invalid(format!("step constant must be positive, got {c}")));
        }
        if !(q > T::zero() && q.is_finite()) {
            return Err(invalid(format!("power exponent must be positive, got {q}")));
        }
        Ok(Self { kind, cap: None })
    }

    pub fn constant(c: T) -> Result<Self> {
        Self::new(ScheduleKind::Constant { c })
    }

    pub fn harmonic(c: T) -> Result<Self> {
        Self::new(ScheduleKind::Harmonic { c })
    }

    pub fn power(c: T, q: T) -> Result<Self> {
        Self::new(ScheduleKind::Power { c, q })
    }

    /// Clips every step to at most `cap`.
    pub fn with_cap(self, cap: T) -> Result<Self> {
        if !(cap > T::zero()) {
            return Err(invalid("step cap must be positive"));
        }
        Ok(Self {
            cap: Some(self.cap.map_or(cap, |c| c.min(cap))),
            ..self
        })
    }

    pub fn kind(&self) -> ScheduleKind<T> {
        self.kind
    }

    pub fn cap(&self) -> Option<T> {
        self.cap
    }

    pub fn value(&self, k: usize) -> T {
        let k1 = T::cst(k as f64 + 1.0);
        let raw = match self.kind {
            ScheduleKind::Constant { c } => c,
            ScheduleKind::Harmonic { c } => c / k1,
            ScheduleKind::Power { c, q } => c / k1.powf(q),
        };
        match self.cap {
            Some(cap) => raw.min(cap),
            None => raw,
        }
    }

    /// `Σ λ_k = ∞`
    pub fn divergent_sum(&self) -> bool {
        match self.kind {
            ScheduleKind::Constant { .. } | ScheduleKind::Harmonic { .. } => true,
            ScheduleKind::Power { q, .. } => q <= T::one(),
        }
    }

    /// `Σ λ_k² < ∞`
    pub fn square_summable(&self) -> bool {
        match self.kind {
            ScheduleKind::Constant { .. } => false,
            ScheduleKind::Harmonic { .. } => true,
            ScheduleKind::Power { q, .. } => q > T::cst(0.5),
        }
    }

    /// Short identifier such as `harmonic(0.5)`.
    pub fn label(&self) -> String {
        let base = match self.kind {
            ScheduleKind::Constant { c } => format!("constant({c})"),
            ScheduleKind::Harmonic { c } => format!("harmonic({c})"),
            ScheduleKind::Power { c, q } => format!("power({c},{q})"),
        };
        match self.cap {
            Some(cap) => format!("{base} cap {cap}"),
            None => base,
        }
    }
}

/// Closed-form bound on `a_k` for the recursion
/// `a_{k+1} <= (1 - α/(k+1)) a_k + β/(k+1)²`, in three cases by `α`.
pub fn rate_envelope<T: Scalar>(alpha: T, beta: T, a0: T, k: usize) -> Result<T> {
    if !(alpha > T::zero()) || !(beta > T::zero()) {
        return Err(invalid("rate envelope needs alpha > 0 and beta > 0"));
    }
    let one = T::one();
    let k1 = T::cst(k as f64 + 1.0);
    let k2 = T::cst(k as f64 + 2.0);
    Ok(if alpha < one {
        let two = T::cst(2.0);
        (a0 + two.powf(alpha) * beta * (two - alpha) / (one - alpha)) / k2.powf(alpha)
    } else if alpha == one {
        beta * (one + k1.ln()) / k1
    } else {
        let am1 = alpha - one;
        (beta + (am1 * a0 - beta) / k2.powf(am1)) / (am1 * k2)
    })
}

/// `a_0, ..., a_{k_max}` for the extremal recursion
/// `a_{k+1} = (1 - α/(k+1)) a_k + β/(k+1)²`.
pub fn rate_recursion<T: Scalar>(alpha: T, beta: T, a0: T, k_max: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut a = a0;
    out.push(a);
    for k in 0..k_max {
        let k1 = T::cst(k as f64 + 1.0);
        a = (T::one() - alpha / k1) * a + beta / (k1 * k1);
        out.push(a);
    }
    out
}
