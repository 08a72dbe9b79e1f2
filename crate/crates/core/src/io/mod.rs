//! File formats: JSON model files and CSV tables.

mod model;
mod tables;

pub use model::{parse_model, read_model, render_model, write_model, FORMAT_VERSION};
pub use tables::{
    fmt_f64, read_conditions, read_grid, read_profiles, read_traces, write_conditions, write_ensembles,
    write_ensembles_to, write_generators, write_grid, write_profiles, write_traces, Profile,
};
