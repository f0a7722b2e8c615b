//! Collared tiles and the renormalization cocycle on top-degree cochain weights.

mod collared;
mod spectrum;

pub use collared::{classify, collared_matrix, collared_tiles, make_class, CollarKey, CollaredClass, CollaredTileSet, NeighborIndex};
pub use spectrum::{
    class_norm, lambda1_consistency, lyapunov_spectrum, oseledets_filtration, stabilized_subspace, Cocycle, Filtration, Lambda1Report, LyapunovReport,
    SpectrumParams, StabilizedSubspace, MERGE_TOL, RANK_TOL,
};
