//! Built-in scenarios, compiled in from `scenarios/*.toml`.

use crate::config::Scenario;
use crate::error::LabResult;

#[cfg(feature = "builtin-scenarios")]
const SOURCES: &[(&str, &str)] = &[
    ("constant-conservation", include_str!("../scenarios/constant-conservation.toml")),
    ("example1-case-i", include_str!("../scenarios/example1-case-i.toml")),
    ("example1-case-ii", include_str!("../scenarios/example1-case-ii.toml")),
    ("example2-case-iii", include_str!("../scenarios/example2-case-iii.toml")),
    ("gevrey36", include_str!("../scenarios/gevrey36.toml")),
    ("gevrey37", include_str!("../scenarios/gevrey37.toml")),
    ("gevrey37-boundedness", include_str!("../scenarios/gevrey37-boundedness.toml")),
    ("hypotheses", include_str!("../scenarios/hypotheses.toml")),
    ("resonant-growth", include_str!("../scenarios/resonant-growth.toml")),
];

#[cfg(not(feature = "builtin-scenarios"))]
const SOURCES: &[(&str, &str)] = &[];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: String,
    pub example: String,
    pub description: String,
}

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(name, _)| *name)
}

pub fn builtin(name: &str) -> Option<LabResult<Scenario>> {
    SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::parse(text))
}

pub fn catalog() -> LabResult<Vec<CatalogEntry>> {
    SOURCES
        .iter()
        .map(|(_, text)| {
            let s = Scenario::parse(text)?;
            Ok(CatalogEntry {
                name: s.name,
                example: s.example,
                description: s.description,
            })
        })
        .collect()
}
