//! Real projective structures on ideally triangulated 3-manifolds, described
//! by flag coordinates.
//!
//! The crate builds the gluing equations of a triangulation of flags, checks
//! them through the monodromy cocycle, solves them numerically and classifies
//! solutions into hyperbolic, Anti-de Sitter, half-pipe or generic projective
//! geometry.
//!
//! Module map:
//! - [`edgeface`]: the 12 edge-faces of a tetrahedron as even permutations.
//! - [`triangulation`]: face pairings, edge cycles and cusps.
//! - [`flags`]: explicit flags in RP³ and the ratios they determine.
//! - [`params`]: edge ratios, gluing parameters and scalar residuals.
//! - [`monodromy`]: Rot/Flip/Glue matrices, paths, edge matrices, holonomy.
//! - [`geometry`]: Thurston parameters over B_⋆ and the subgeometry tests.
//! - [`solver`]: Levenberg-Marquardt solving and continuation.
//! - [`cli`]: the `flag-gluer` command-line front end.

pub mod cli;
pub mod edgeface;
pub mod error;
pub mod flags;
pub mod geometry;
pub mod monodromy;
pub mod params;
pub mod solver;
pub mod triangulation;

pub use edgeface::EdgeFace;
pub use error::{Error, Result};
pub use flags::{Flag, ProjMatrix, TetOfFlags};
pub use params::{DerivedTet, ParamSet, TetShape};
pub use triangulation::Triangulation;
