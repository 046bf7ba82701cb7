//! Discrete-time gradient flows on model spaces with curvature bounded above
//! or below: proximal point iterations, cyclic proximal splitting and
//! stochastic (inductive-mean) flows, each step checked against the
//! inequalities that govern it.

pub mod error;
pub mod flows;
pub mod functionals;
pub mod oracle;
pub mod resolvent;
pub mod rng;
pub mod scalar;
pub mod schedules;
pub mod spaces;
pub mod tolerance;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tolerance::Tolerances;

pub type Point64 = spaces::Point<f64>;
pub type Point32 = spaces::Point<f32>;
pub type SpaceDescriptor64 = spaces::SpaceDescriptor<f64>;
pub type GeodesicBall64 = spaces::GeodesicBall<f64>;
pub type Functional64 = functionals::Functional<f64>;
pub type FunctionalSpec64 = functionals::FunctionalSpec<f64>;
pub type StepSchedule64 = schedules::StepSchedule<f64>;
pub type RunRecord64 = flows::RunRecord<f64>;
pub type MeasureSpec64 = flows::MeasureSpec<f64>;
