//! File formats: network cases (TOML), measurement records (CSV), fitted
//! templates (TOML with exponent-labeled coefficients) and plot-ready
//! result tables (CSV).

mod case;
mod measurements;
mod results;
mod template;

pub use case::{load_case, load_model, parse_case, parse_model, ModelSpec, CASE_FORMAT_VERSION};
pub use measurements::{load_measurements, read_measurements, save_measurements, write_measurements};
pub use results::{write_history, write_solve_results, write_stamps, write_validation};
pub use template::{
    load_template, parse_template, render_template, save_template, StoredTemplate, UnitSystem, TEMPLATE_FORMAT_VERSION,
};

use crate::error::Error;

pub(crate) fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

/// `toml` deserialization errors carry line/column and key path in their message.
pub(crate) fn toml_error(source: &str, e: toml::de::Error) -> Error {
    let location = match e.span() {
        Some(span) => {
            let line = source[..span.start.min(source.len())].matches('\n').count() + 1;
            format!("{source_name} line {line}", source_name = "toml")
        }
        None => "toml".to_string(),
    };
    Error::format(location, e.message().to_string())
}
