//! Coloured topological entropy on finite combinatorial models.
//!
//! Compact spaces are replaced by finite cell complexes, open covers by
//! families of cell sets and homeomorphisms by (possibly multivalued) cell
//! relations. On these models the minimal subcover count `N` and the minimal
//! `(d+1)`-coloured refinement count `N_c` are computed exactly whenever the
//! search is small enough, and every count carries an exactness flag.
//!
//! Modules:
//!
//! * [`cellspace`]: spaces, covers, dynamical joins and the two optimisers.
//! * [`symbolic`]: subshifts of finite type, word spaces and their entropy.
//! * [`cpapprox`]: partition-of-unity approximation systems, quasidiagonal
//!   conversion and the matrix shift model.
//! * [`lowerbound`]: `l1`-equivalence constants of vector families.
//! * [`estimator`]: growth rates, sandwich and permanence verdicts.

pub mod cellspace;
pub mod cpapprox;
pub mod error;
pub mod estimator;
pub mod lowerbound;
pub mod symbolic;

pub use error::{Error, Result};
