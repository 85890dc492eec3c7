//! Truncated power-series toolkit for checking membership in classes of
//! `p`-valently close-to-convex functions defined through a starlike
//! comparison function, together with numerical checks of the associated
//! coefficient, distortion and subordination results.

pub mod classes;
pub mod error;
pub mod generators;
pub mod par;
pub mod sampling;
pub mod series;
pub mod sweep;
pub mod theorems;

pub use classes::{ClassParams, KskReport, SchwarzWitness};
pub use error::{Error, Result};
pub use sampling::{ComplexPoint, MembershipReport, SamplingPolicy};
pub use series::TruncatedSeries;
