//! Via inspection metrics: slice contours, least-squares circles,
//! roundness, depth and diameter, and comparison against references.

pub mod circle;
pub mod contour;
pub mod via;

pub use circle::{fit_algebraic, fit_lsc, geometric_cost, roundness, Circle};
pub use contour::{extract_slice_contour, iso_contours, surface_reference, Contour};
pub use via::{
    compare_measurements, compare_to_reference, measure_via, slice_fractions, ComparisonReport,
    ComparisonRow, Reference, SliceProfile, ViaMeasurement,
};
