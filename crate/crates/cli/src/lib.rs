//! Configuration loading, experiment orchestration and result output for
//! the `infrashare` command-line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod quantity;
pub mod table;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, validation_config};
pub use table::{emit, write_table, Format, ResultTable};

/// Presets shipped with the binary, one per numerical figure.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2", include_str!("../presets/fig2.json")),
    ("fig3", include_str!("../presets/fig3.json")),
    ("fig4", include_str!("../presets/fig4.json")),
    ("fig5", include_str!("../presets/fig5.json")),
    ("fig6", include_str!("../presets/fig6.json")),
    ("fig7", include_str!("../presets/fig7.json")),
    ("fig8", include_str!("../presets/fig8.json")),
    ("fig9", include_str!("../presets/fig9.json")),
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::UnknownPreset(name.to_string()))?;
    parse_config(text, name)
}
