//! Order-sensitive sequential valuation on finite posets.
//!
//! Admissible action sequences are maximal chains in the lattice of order
//! ideals. An edge-additive valuation on that lattice splits into a
//! reference-path score plus signed diamond curvatures, which is the basis
//! for estimating order effects from event logs and for exact planning.

pub mod causal;
pub mod error;
pub mod integrability;
pub mod io;
pub mod lattice;
pub mod path;
pub mod planner;
pub mod poset;
pub mod valuation;

pub use error::{Error, Result};
pub use lattice::{build_lattice, enumerate_diamonds, Diamond, Edge, LatticeSlice};
pub use path::{enumerate_paths, min_swap_distance, reference_path, rewrite_sequence, Path, RewriteSequence, RewriteStep};
pub use poset::{parse_poset, write_poset, Elem, Ideal, Poset};
pub use valuation::{DiamondField, EdgeField, NodeField, Potential, ThetaSystem};
