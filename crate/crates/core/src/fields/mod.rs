//! Grids, sampled fields, finite-difference operators and analytic test fields.

mod catalog;
mod dump;
mod field;
mod grid;
mod ops;
mod report;

pub use catalog::{
    sample_catalog_field, AngleProfile, AxisFactor, CatalogField, Deformation, VectorWave, Wave,
    CATALOG_IDS,
};
pub use dump::{dump_to_string, read_dump, write_dump};
pub(crate) use field::multilinear_stencil;
pub use field::{MatrixField, ScalarField, ThirdOrderField, VectorField};
pub use grid::{make_grid, Grid, GridSpec, Mask, MIN_NODES_PER_AXIS};
pub(crate) use ops::first_derivative_stencil;
pub use ops::{
    curl_general, curl_general_from_gradient, curl_rowwise, div_rowwise, fd_gradient, integrate,
    integrate_nodes, laplacian, rowwise_curl_from_gradient, scalar_gradient, vector_curl,
    vector_div, vector_gradient, Laplacian, RowwiseCurl,
};
pub use report::{
    convergence_rate, reports_to_csv, reports_to_json, ResidualReport, SampleNodes,
    REPORT_CSV_HEADER,
};

/// Margin used to select nodes for residual statistics: operators composed of
/// two first-derivative stencils are interior-order there.
pub const STATS_MARGIN: usize = 2;
