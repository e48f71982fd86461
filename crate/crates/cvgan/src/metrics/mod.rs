//! Classification metrics and generated-data distribution diagnostics.

mod confusion;
mod histogram;
mod pcolor;

pub use confusion::ConfusionMatrix;
pub use histogram::{histogram_compare, ks_statistic, reports_to_csv, HistogramReport};
pub use pcolor::{pcolor_ppm, write_ppm};
