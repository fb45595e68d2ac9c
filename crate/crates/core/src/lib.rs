//! Backtrack-downweighted walks on directed graphs.
//!
//! Each walk is weighted by `θ` raised to the number of immediate
//! reversals it makes (`θ = 1` counts every walk, `θ = 0` only
//! nonbacktracking ones). From the resulting count matrices `q_k(A)` the
//! crate derives Katz-style, eigenvector and matrix-function centralities,
//! together with closed-form oracles and ranking diagnostics.
//!
//! ```
//! use btdw_core::{katz_btdw, BtdwParams, NamedGraph};
//!
//! let g = NamedGraph::Squid.build().unwrap();
//! let x = katz_btdw(&g, 0.2, BtdwParams::new(0.5).unwrap()).unwrap();
//! assert_eq!(x.scores.len(), 11);
//! ```

// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod genfun;
pub mod graph;
pub mod io;
pub mod katz;
pub mod linalg;
pub mod metrics;
pub mod oracles;
pub mod spectral;
pub mod sweep;
pub mod walks;

pub use error::{Error, Result};
pub use genfun::{expm_btdw_action, genfun_blockz, genfun_direct, CoefficientSeries, GenfunResult};
pub use graph::{DerivedMatrices, Graph, NamedGraph};
pub use io::{load_graph, parse_edge_list, parse_matrix_market, EdgeListOptions};
pub use katz::{
    katz_btdw, katz_series_oracle, katz_standard, normalize, CentralityResult, Normalization,
    ResultMetadata, SolveInfo,
};
pub use linalg::SolverChoice;
pub use metrics::{ipr, kendall_tau, rank_of, spearman_rho, Ranking};
pub use oracles::{regular_singular_alpha, squid_spectrum, star_katz, star_qk, StarParams};
pub use spectral::{
    alpha_star, eigen_centrality_btdw, katz_to_spectral_consistency, spectral_radius,
    BlockOperatorZ, PowerConfig, SpectralEstimate,
};
pub use sweep::{run_sweep, AlphaGrid, Measure, SweepConfig, SweepOutput};
pub use walks::{brute_force_btdw, btdw_sequence, nbt_sequence, BtdwParams, Side, WalkCountMatrix};
