//! Builtin levels with their reference programs.

use std::fmt;
use std::path::{Path, PathBuf};

use declbot_core::geometry::law_of_cosines;

use crate::level::{load_level, Expected, LevelDocument, LevelError};

/// Overrides the directory named levels are looked up in.
pub const LEVEL_DIR_ENV: &str = "DECLBOT_LEVEL_DIR";
pub const LEVEL_SUFFIX: &str = ".level.json";
pub const PROGRAM_SUFFIX: &str = ".lgc";

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioBundle {
    pub level: LevelDocument,
    pub program_source: String,
    pub expected: Option<Expected>,
}

impl ScenarioBundle {
    pub fn new(level: LevelDocument, program_source: String) -> Self {
        ScenarioBundle {
            expected: level.expected,
            level,
            program_source,
        }
    }

    pub fn name(&self) -> &str {
        &self.level.name
    }
}

const BUILTIN: [(&str, &str, &str); 4] = [
    (
        "level01_open_field",
        include_str!("../../../levels/level01_open_field.level.json"),
        include_str!("../../../levels/level01_open_field.lgc"),
    ),
    (
        "level07_station",
        include_str!("../../../levels/level07_station.level.json"),
        include_str!("../../../levels/level07_station.lgc"),
    ),
    (
        "level08_formation",
        include_str!("../../../levels/level08_formation.level.json"),
        include_str!("../../../levels/level08_formation.lgc"),
    ),
    (
        "level10_mapping",
        include_str!("../../../levels/level10_mapping.level.json"),
        include_str!("../../../levels/level10_mapping.lgc"),
    ),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _, _)| *n).collect()
}

/// The levels compiled into this build.
pub fn builtin_scenarios() -> Vec<ScenarioBundle> {
    BUILTIN
        .iter()
        .map(|(name, level, program)| {
            let level = load_level(level)
                .unwrap_or_else(|e| panic!("builtin level {name} is invalid: {e}"));
            ScenarioBundle::new(level, program.to_string())
        })
        .collect()
}

#[derive(Debug)]
pub enum ScenarioError {
    NotFound(String),
    Io(PathBuf, std::io::Error),
    Level(PathBuf, LevelError),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::NotFound(name) => write!(f, "no level named `{name}`"),
            ScenarioError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            ScenarioError::Level(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl std::error::Error for ScenarioError {}

/// Reads a level file, pairing it with the `.lgc` beside it when present.
pub fn load_level_file(path: &Path) -> Result<(LevelDocument, Option<String>), ScenarioError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(path.to_path_buf(), e))?;
    let level = load_level(&text).map_err(|e| ScenarioError::Level(path.to_path_buf(), e))?;
    let program = sibling_program(path).and_then(|p| std::fs::read_to_string(p).ok());
    Ok((level, program))
}

fn sibling_program(level_path: &Path) -> Option<PathBuf> {
    let file = level_path.file_name()?.to_str()?;
    let stem = file.strip_suffix(LEVEL_SUFFIX)?;
    Some(level_path.with_file_name(format!("{stem}{PROGRAM_SUFFIX}")))
}

/// The names of the levels in `dir`, sorted.
pub fn level_names_in(dir: &Path) -> std::io::Result<Vec<String>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            e.file_name()
                .to_str()
                .and_then(|f| f.strip_suffix(LEVEL_SUFFIX))
                .map(str::to_string)
        })
        .collect();
    names.sort();
    Ok(names)
}

/// The level directory from the environment, if set.
pub fn level_dir() -> Option<PathBuf> {
    std::env::var_os(LEVEL_DIR_ENV).map(PathBuf::from)
}

/// Names of every level available: the override directory's if set, else the
/// builtins.
pub fn available_names() -> Result<Vec<String>, ScenarioError> {
    match level_dir() {
        Some(dir) => level_names_in(&dir).map_err(|e| ScenarioError::Io(dir, e)),
        None => Ok(builtin_names().into_iter().map(str::to_string).collect()),
    }
}

/// Resolves a level by name, from the override directory if set.
pub fn find_scenario(name: &str) -> Result<ScenarioBundle, ScenarioError> {
    if let Some(dir) = level_dir() {
        return find_in_dir(&dir, name);
    }
    builtin_scenarios()
        .into_iter()
        .find(|b| b.name() == name)
        .ok_or_else(|| ScenarioError::NotFound(name.to_string()))
}

pub fn find_in_dir(dir: &Path, name: &str) -> Result<ScenarioBundle, ScenarioError> {
    if name.contains(['/', '\\']) || name.starts_with('.') {
        return Err(ScenarioError::NotFound(name.to_string()));
    }
    let path = dir.join(format!("{name}{LEVEL_SUFFIX}"));
    if !path.is_file() {
        return Err(ScenarioError::NotFound(name.to_string()));
    }
    let (level, program) = load_level_file(&path)?;
    Ok(ScenarioBundle::new(level, program.unwrap_or_default()))
}

/// Distance between two objects seen by rays `delta_angle` apart at
/// distances `d1` and `d2` in one scan.
pub fn edge_distance(d1: f64, d2: f64, delta_angle: f64) -> f64 {
    law_of_cosines(d1, d2, delta_angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn edge_distance_examples() {
        assert!((edge_distance(3.0, 4.0, PI / 2.0) - 5.0).abs() < 1e-12);
        assert!((edge_distance(3.0, 5.0, 0.0) - 2.0).abs() < 1e-12);
        assert!((edge_distance(1.0, 1.0, PI / 3.0) - 1.0).abs() < 1e-12);
        assert_eq!(edge_distance(2.0, 2.0, 0.0), 0.0);
    }

    #[test]
    fn sibling_program_path() {
        assert_eq!(
            sibling_program(Path::new("/x/a.level.json")),
            Some(PathBuf::from("/x/a.lgc"))
        );
        assert_eq!(sibling_program(Path::new("/x/a.json")), None);
    }

    #[test]
    fn directory_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let b = &builtin_scenarios()[0];
        let text = crate::level::save_level(&b.level);
        std::fs::write(dir.path().join("custom.level.json"), text).unwrap();
        std::fs::write(dir.path().join("custom.lgc"), "P(x: 1);").unwrap();
        assert_eq!(level_names_in(dir.path()).unwrap(), vec!["custom"]);
        let found = find_in_dir(dir.path(), "custom").unwrap();
        assert_eq!(found.program_source, "P(x: 1);");
        assert!(matches!(
            find_in_dir(dir.path(), "other"),
            Err(ScenarioError::NotFound(_))
        ));
        assert!(matches!(
            find_in_dir(dir.path(), "../custom"),
            Err(ScenarioError::NotFound(_))
        ));
    }
}
