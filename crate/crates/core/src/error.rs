use thiserror::Error;

use crate::sampling::ComplexPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative leading exponent {0}")]
    NegativeLead(i64),
    #[error("series needs at least one coefficient")]
    EmptyCoefficients,
    #[error("non-finite coefficient at index {0}")]
    NonFiniteCoefficient(usize),
    #[error("division by a series with vanishing leading coefficient")]
    SingularDivision,
    #[error("removing z^{shift} from a series with leading exponent {lead} leaves a pole")]
    Pole { lead: i64, shift: i64 },
    #[error("series with leading term {coeff} z^{lead} has no normalized primitive of valence {p}")]
    InconsistentPrimitive { lead: i64, coeff: String, p: u32 },
    #[error("{what} is not of the form z^{p} + ...")]
    NotNormalized { what: &'static str, p: u32 },
    #[error("constant term {0:e} does not vanish")]
    NonVanishingConstant(f64),

    #[error("invalid sampling policy: {0}")]
    InvalidPolicy(String),
    #[error("quadrature needs an even step count >= 2, got {0}")]
    InvalidSteps(usize),
    #[error("integrand is not finite at t = {0}")]
    NonFiniteIntegrand(f64),
    #[error("evaluation is not finite at {0}")]
    NonFiniteValue(ComplexPoint),
    #[error("{what} vanishes at {at}")]
    VanishesAt { what: &'static str, at: ComplexPoint },

    #[error("invalid class parameters: {0}")]
    InvalidParams(String),
    #[error("g fails starlikeness of order {order}: margin {margin:e} at {witness}")]
    NotStarlike { order: f64, margin: f64, witness: ComplexPoint },
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),
    #[error("|phi| reaches {max} > beta = {beta} at {at}")]
    BoundExceeded { max: f64, beta: f64, at: ComplexPoint },
    #[error("parameters violate the required ordering: {0}")]
    Ordering(String),
    #[error("function is not a certified class member (margin {margin:e} at {witness})")]
    NotAMember { margin: f64, witness: ComplexPoint },
    #[error("radius {0} outside [0, 1)")]
    RadiusOutOfRange(f64),
    #[error("index {requested} exceeds truncation degree {available}")]
    DegreeExceeded { requested: usize, available: usize },
    #[error("not a Schwarz function: {0}")]
    NotSchwarz(String),
}
