//! Numerical toolkit for stratification-regularity analysis: evaluates
//! Whitney (a)/(b), Kuo (r), Kuo–Verdier (w), (r^e) and (r_∫) conditions,
//! normal-cone and normal-pseudo-flatness checks, and Lelong densities on
//! stratified sets given as graphs of definable functions.
//!
//! The built-in catalog carries the two exponential-flat counterexample
//! surfaces (`Sg`, `Sf`), the subgraph region `Kg`, and polynomially
//! bounded control examples.

pub mod cones;
pub mod density;
pub mod expr;
pub mod geom;
pub mod numscale;
pub mod probes;
pub mod regularity;
pub mod strata;

pub use expr::{parse, Expr, Jet};
pub use geom::{delta, eta, orthonormalize, Direction, GraphLayout, Subspace};
pub use numscale::{Scalar, XScalar};
pub use probes::{classify_limit, LimitClass, LimitConfig, LimitEstimate, ProbeCurve};
pub use regularity::{Condition, Outcome, PairAtPoint, Verdict};
pub use strata::{catalog, Retraction, StratifiedSet, Stratum};
