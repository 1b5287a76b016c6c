//! Engine operations over extended cospans: normalization, saturation,
//! extraction and DOT export.

mod dot;
mod extract;
mod normalize;
mod saturate;

pub use dot::export_dot;
pub use extract::{cost_of, extract, extract_cospan, CostError, CostModel, ExtractError};
pub use normalize::{is_normal, normal_components, normalize, normalize_with, MatchOrder, NormalizeError, NormalizeOptions};
pub use saturate::{saturate, DirectionPolicy, Saturation, SaturationStatus, Strategy};
