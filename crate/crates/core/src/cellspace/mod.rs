//! Finite cell spaces, open covers, dynamical joins and the two cover
//! optimisers.

mod bundle;
mod cover;
pub(crate) mod family;
mod map;
mod refine;
pub(crate) mod setcover;
mod space;

/// Cell index. Models are capped at `u32::MAX` cells.
pub type Cell = u32;

pub use bundle::{Bundle, BundleDoc};
pub use cover::{dynamical_join, join, pullback, Cover, DynamicalJoins};
pub use family::SetFamily;
pub use map::{CellMap, ImageIter};
pub use refine::{
    minimal_coloured_refinement, minimal_subcover, Atoms, ColouredOutcome, ColouredRefinement,
    SolverConfig, Subcover,
};
pub use space::{CellSpace, Permutation};
