//! Exact-arithmetic workbench for bracket conditions on block matrix
//! algebras.
//!
//! The crate models finite-dimensional algebras over the rationals (full
//! matrix algebras, block-diagonal sums, custom structure constants),
//! solves for all families of linear maps satisfying the ξ-bracket
//! condition on zero products, and verifies or constructs the structural
//! decompositions those families admit: transfer recursions between map
//! families and derivation sequences, inner-family-plus-functional
//! decompositions, and the ξ-classification into higher or generalized
//! higher derivations.
//!
//! Everything is computed in exact rational arithmetic; all randomized
//! behavior is reproducible from a `u64` seed.

pub mod algebra;
pub mod json;
pub mod linalg;
pub mod maps;
pub mod rng;
pub mod scalar;
pub mod solver;
pub mod structure;

pub use algebra::{Algebra, AlgebraError, Block, Element, RankOneSpec};
pub use maps::{GeneratorSequence, LinMap, MapError, MapFamily, Violation};
pub use rng::SplitMix64;
pub use scalar::{format_scalar, frac, parse_scalar, scalar, Scalar};
pub use solver::{
    ExtensionChoice, LevelSolver, LevelSystem, SolutionSpace, SolverError, SpanProvenance,
    TensorSpanBasis,
};
pub use structure::{
    Decomposition, DeltaOrdering, DeltaSequence, StructureError, XiClassification, XiVerdict,
};
