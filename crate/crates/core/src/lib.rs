//! Simple `t-(v,k,λ)` designs with a prescribed automorphism group.
//!
//! A group `G` acting on `{1, …, v}` splits the `t`-subsets and `k`-subsets
//! into orbits. Choosing a set of `k`-orbits whose union covers every
//! `t`-subset exactly `λ` times is the same as solving `A · x = λ·j` over
//! `{0,1}` for the Kramer–Mesner matrix `A`. The modules follow that pipeline:
//!
//! - [`groups`]: permutations in cycle notation and the groups they generate
//! - [`orbits`]: complete and short-orbit censuses of `k`-subsets
//! - [`kramer_mesner`]: the matrix `A`
//! - [`solver`]: exact 0-1 enumeration
//! - [`designs`]: parameters, expansion, verification, supplements, complements, unions
//! - [`iso`]: isomorphism tests and automorphism group orders
//! - [`formats`]: the plain-text file formats

pub mod designs;
pub mod error;
pub mod formats;
pub mod groups;
pub mod iso;
pub mod kramer_mesner;
mod lattice;
pub mod orbits;
pub mod pointset;
pub mod solver;

pub use designs::{Design, DesignParameters, Verification};
pub use error::{Error, Result};
pub use groups::{Permutation, PermutationGroup};
pub use kramer_mesner::KmMatrix;
pub use orbits::{OrbitSet, SubsetOrbit};
pub use pointset::PointSet;
pub use solver::{Engine, Solution, SolveMode, SolveOutcome, SolveRequest, SolveStatus};
