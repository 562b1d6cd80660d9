//! Constructors for admissible pairs on standard decompositions.

pub mod canonical;
pub mod gamma2;
pub mod moves;
pub mod triangulation;
pub mod trinion;

pub use gamma2::{boundary_monodromy, build_gamma2, ContourSpec, Gamma2, PieceSpec, Side, SurfaceSpec};
pub use triangulation::Triangulation;
pub use trinion::{build_trinion_decomposition, build_trinion_rep, toric_shift, TrinionGraph2, TrinionRep};
pub use canonical::{build_gamma0, gamma0_loops, glue_nonseparating, glue_separating, Handle, PieceData, TwoBoundaryData};
pub use moves::{reduce_separating_torus_pair, MoveStep};
