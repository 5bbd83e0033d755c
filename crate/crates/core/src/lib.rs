//! Moment relaxations for polynomial optimization over complex variables.
//!
//! Instances are polynomials in `z` and `z̄` with self-conjugate data. Relaxations come in
//! three flavors: a real moment hierarchy, a complex (Hermitian) one, and the classical
//! real-variable hierarchy on the realified problem. Each compiles to an LMI program
//! solved by a primal-dual interior-point method, after which optimality is checked
//! and minimizers are extracted from the moment matrix.

pub mod extract;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod moment;
pub mod poly;
pub mod relax;
pub mod report;
pub mod sampler;
pub mod sdp;
pub mod tolerances;

pub use moment::{AtomicMeasure, Atom, MomentKey, Moments, MonomialBasis, SymbolicMatrix};
pub use poly::{CPoly, CpopInstance, DegreeStats, ExponentPair, Monomial, RPoly, RealPop, Sense, ValueTransform};
pub use relax::{ComplexityStats, Hierarchy, LmiProgram};
pub use sdp::{SdpOptions, SdpSolution, SolverStatus};
