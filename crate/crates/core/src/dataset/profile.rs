use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Per-file ingestion settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    /// Dataset name; defaults to the ARFF `@relation`.
    pub name: Option<String>,
    /// Candidate names of the effort column, matched case-insensitively; first hit wins.
    pub effort_columns: Vec<String>,
    /// Column holding project ids; excluded from the attribute schema.
    pub id_column: Option<String>,
    /// Numeric columns to reinterpret as categorical (terms = distinct values, ascending).
    pub categorical: Vec<String>,
    /// Columns dropped at load time.
    pub exclude: Vec<String>,
    pub effort_unit: String,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            name: None,
            effort_columns: vec![
                "act_effort".into(),
                "actual_effort".into(),
                "effort".into(),
                "actual".into(),
            ],
            id_column: None,
            categorical: Vec::new(),
            exclude: Vec::new(),
            effort_unit: "person-months".into(),
        }
    }
}

impl LoadOptions {
    /// Options for a file: preset settings when `name` (or else the file stem)
    /// names a known dataset, defaults otherwise. An explicit `name` always wins.
    pub fn for_file(path: &Path, name: Option<&str>) -> LoadOptions {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
        let preset = Preset::detect(name.unwrap_or(stem)).or_else(|| Preset::detect(stem));
        let mut options = preset.map(Preset::load_options).unwrap_or_default();
        if let Some(n) = name {
            options.name = Some(n.to_string());
        }
        options
    }
}

/// Built-in settings for the three PROMISE datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Nasa60,
    Nasa93,
    Desharnais,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Nasa60, Preset::Nasa93, Preset::Desharnais];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Nasa60 => "nasa60",
            Preset::Nasa93 => "nasa93",
            Preset::Desharnais => "desharnais",
        }
    }

    /// Recognizes a preset from a dataset name or file stem
    /// (`nasa93`, `cocomonasa_v1`, `desharnais`, ...).
    pub fn detect(name: &str) -> Option<Preset> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .flat_map(|c| c.to_lowercase())
            .collect();
        match key.as_str() {
            "nasa60" | "cocomonasa" | "cocomonasav1" | "cocomonasa60" | "coc60" => Some(Preset::Nasa60),
            "nasa93" | "cocomonasa93" | "nasa93dem" => Some(Preset::Nasa93),
            "desharnais" | "desharnaisdataset" => Some(Preset::Desharnais),
            _ => None,
        }
    }

    /// File names probed when looking for this dataset in a data directory.
    pub fn file_names(self) -> &'static [&'static str] {
        match self {
            Preset::Nasa60 => &["nasa60.arff", "cocomonasa_v1.arff", "cocomonasa.arff"],
            Preset::Nasa93 => &["nasa93.arff"],
            Preset::Desharnais => &["desharnais.arff"],
        }
    }

    pub fn load_options(self) -> LoadOptions {
        let base = LoadOptions {
            name: Some(self.name().into()),
            ..LoadOptions::default()
        };
        match self {
            Preset::Nasa60 => base,
            Preset::Nasa93 => LoadOptions {
                id_column: Some("recordnumber".into()),
                ..base
            },
            Preset::Desharnais => LoadOptions {
                effort_columns: vec!["Effort".into()],
                id_column: Some("Project".into()),
                categorical: vec!["Language".into()],
                effort_unit: "person-hours".into(),
                ..base
            },
        }
    }

    /// First of [`Preset::file_names`] present in `dir`.
    pub fn locate(self, dir: &Path) -> Option<PathBuf> {
        self.file_names().iter().map(|f| dir.join(f)).find(|p| p.is_file())
    }

    /// Size attribute (KLOC) used by the COCOMO-adjusted estimator.
    pub fn size_attributes(self) -> &'static [&'static str] {
        match self {
            Preset::Nasa60 | Preset::Nasa93 => &["loc", "kloc", "equivphyskloc"],
            Preset::Desharnais => &[],
        }
    }
}
