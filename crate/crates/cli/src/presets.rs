//! Bundled figure-reproduction configs.

use crate::config;

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

impl Preset {
    pub fn description(&self) -> String {
        config::parse(self.text).map(|c| c.description).unwrap_or_else(|e| format!("<invalid: {e}>"))
    }
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        &[$(Preset { name: $name, text: include_str!(concat!("../presets/", $name, ".toml")) }),*]
    };
}

static PRESETS: &[Preset] = presets![
    "fig2", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "fig4d", "fig4e", "fig4f", "fig5a", "fig5b", "fig5c",
    "fig5d", "fig5e", "fig5f", "fig5g", "fig5h", "fig6a", "fig6b", "fig6c", "fig6d", "fig6e", "fig6f", "fig7",
    "hofstadter-q9",
];

pub fn all() -> &'static [Preset] {
    PRESETS
}

pub fn get(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
