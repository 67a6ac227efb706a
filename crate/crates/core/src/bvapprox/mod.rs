//! Piecewise-constant rotation approximations on cube covers and their jump
//! total variation compared with the curl.

mod cover;
mod piecewise;

pub use cover::{cube_cover, BoxRegion, CubeCover};
pub use piecewise::{
    build_piecewise, build_piecewise_with, bv_ratio, bv_rows_to_csv, curl_total_variation,
    l1_distance, BvRow, FitRegion, PiecewiseRotation, BV_CSV_HEADER, JUMP_TOL, ZERO_TV,
};
