pub mod exactalg;
pub mod cech;
pub mod ci_engine;
pub mod fermat;
pub mod field;
pub mod lambda;
pub mod poly;

pub use field::{Field, Fp};
pub use lambda::{LambdaPair, LambdaSetting, SequenceKind};

/// Exact rationals.
pub type Rational = num_rational::BigRational;

pub type F11 = Fp<11>;
pub type F13 = Fp<13>;
pub type F31 = Fp<31>;
/// The prime field of size 2^31 - 1.
pub type FLarge = Fp<2147483647>;
