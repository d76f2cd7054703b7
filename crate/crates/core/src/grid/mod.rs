//! Raster domains, discrete fields and discrete measures.

mod contour;
mod domain;
mod edt;
mod field;
mod measure;

pub use contour::contour_length;
pub use domain::{build_domain, GridDomain, ShapeTag, MIN_RESOLUTION};
pub use edt::{distance_to_complement, squared_edt};
pub use field::{BinaryRegion, ScalarField};
pub use measure::{
    dilate, grad_energy_p, inner_region, inner_region_from_distance, lq_norm, measure_region,
    perimeter, perimeter_kernel_width, rayleigh_quotient, total_variation, upwind_total_variation,
};
pub(crate) use measure::{energy_raw, for_each_cell_gradient};
