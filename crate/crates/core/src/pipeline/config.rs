use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::classify::BreakMethod;
use crate::error::{Error, Result};
use crate::fr::ZONE_COUNT;
use crate::validation::{DEFAULT_BINS, DEFAULT_TRAIN_RATIO};

/// Rasters the pipeline can compute from its primary inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivedOp {
    Elevation,
    Slope,
    Aspect,
    Curvature,
    Spi,
    Twi,
    DrainageDistance,
    DrainageDensity,
    RoadDistance,
    Ndvi,
    CutFill,
}

impl DerivedOp {
    pub const ALL: [DerivedOp; 11] = [
        DerivedOp::Elevation,
        DerivedOp::Slope,
        DerivedOp::Aspect,
        DerivedOp::Curvature,
        DerivedOp::Spi,
        DerivedOp::Twi,
        DerivedOp::DrainageDistance,
        DerivedOp::DrainageDensity,
        DerivedOp::RoadDistance,
        DerivedOp::Ndvi,
        DerivedOp::CutFill,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DerivedOp::Elevation => "elevation",
            DerivedOp::Slope => "slope",
            DerivedOp::Aspect => "aspect",
            DerivedOp::Curvature => "curvature",
            DerivedOp::Spi => "spi",
            DerivedOp::Twi => "twi",
            DerivedOp::DrainageDistance => "drainage_distance",
            DerivedOp::DrainageDensity => "drainage_density",
            DerivedOp::RoadDistance => "road_distance",
            DerivedOp::Ndvi => "ndvi",
            DerivedOp::CutFill => "cut_fill",
        }
    }

    pub fn is_categorical(self) -> bool {
        self == DerivedOp::CutFill
    }
}

impl fmt::Display for DerivedOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DerivedOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DerivedOp::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown derived raster `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    #[default]
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationSpec {
    pub method: BreakMethod,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub uppers: Option<Vec<f64>>,
    /// Class ID (as a string key) to display label.
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
}

impl ClassificationSpec {
    pub fn parsed_labels(&self) -> Result<BTreeMap<i32, String>> {
        self.labels
            .iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<i32>()
                    .map(|id| (id, v.clone()))
                    .map_err(|_| Error::Config(format!("label key `{k}` is not an integer class ID")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub name: String,
    #[serde(default)]
    pub derived: Option<DerivedOp>,
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub kind: Option<FactorKind>,
    #[serde(default)]
    pub classification: Option<ClassificationSpec>,
}

impl FactorSpec {
    pub fn kind(&self) -> FactorKind {
        self.kind.unwrap_or(match self.derived {
            Some(op) if op.is_categorical() => FactorKind::Categorical,
            _ => FactorKind::Continuous,
        })
    }

    /// Explicit classification, or Jenks k=5 / categorical passthrough.
    pub fn classification(&self) -> ClassificationSpec {
        self.classification.clone().unwrap_or_else(|| ClassificationSpec {
            method: match self.kind() {
                FactorKind::Continuous => BreakMethod::Jenks,
                FactorKind::Categorical => BreakMethod::Categorical,
            },
            k: Some(5),
            uppers: None,
            labels: BTreeMap::new(),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub roads: Option<PathBuf>,
    pub nir: Option<PathBuf>,
    pub red: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventorySource {
    /// CSV of `x,y[,id]` points.
    pub points: Option<PathBuf>,
    /// Binary raster, 1 = landslide cell.
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonationSpec {
    pub method: BreakMethod,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub uppers: Option<Vec<f64>>,
}

impl Default for ZonationSpec {
    fn default() -> Self {
        ZonationSpec {
            method: BreakMethod::Jenks,
            k: Some(ZONE_COUNT),
            uppers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSpec {
    pub train_ratio: f64,
    pub seed: u64,
    pub bins: usize,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        ValidationSpec {
            train_ratio: DEFAULT_TRAIN_RATIO,
            seed: 42,
            bins: DEFAULT_BINS,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_stream_threshold() -> f64 {
    100.0
}

fn default_true() -> bool {
    true
}

/// A complete pipeline run, usually read from TOML.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dem: PathBuf,
    #[serde(default)]
    pub dem_old: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Minimum upstream cell count for a stream cell.
    #[serde(default = "default_stream_threshold")]
    pub stream_threshold: f64,
    /// Half-width of the drainage-density window in map units; five cells
    /// when unset.
    #[serde(default)]
    pub density_radius: Option<f64>,
    #[serde(default)]
    pub cut_fill_tolerance: f64,
    #[serde(default)]
    pub jenks_seed: u64,
    #[serde(default = "default_true")]
    pub render: bool,
    #[serde(default)]
    pub inputs: Inputs,
    pub inventory: InventorySource,
    pub factors: Vec<FactorSpec>,
    #[serde(default)]
    pub zonation: ZonationSpec,
    #[serde(default)]
    pub validation: ValidationSpec,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses, resolves relative paths against the file's directory and
    /// validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config error: "))))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dem);
        fix(&mut self.output_dir);
        for p in [
            &mut self.dem_old,
            &mut self.inputs.roads,
            &mut self.inputs.nir,
            &mut self.inputs.red,
            &mut self.inventory.points,
            &mut self.inventory.mask,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        for f in &mut self.factors {
            if let Some(p) = &mut f.file {
                fix(p);
            }
        }
    }

    /// Structural checks plus existence of every referenced input file.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        let must_exist = |field: &str, p: &Path| -> Result<()> {
            if p.is_file() {
                Ok(())
            } else {
                Err(Error::Config(format!("{field}: file not found: {}", p.display())))
            }
        };

        must_exist("dem", &self.dem)?;
        if let Some(p) = &self.dem_old {
            must_exist("dem_old", p)?;
        }
        for (field, p) in [
            ("inputs.roads", &self.inputs.roads),
            ("inputs.nir", &self.inputs.nir),
            ("inputs.red", &self.inputs.red),
        ] {
            if let Some(p) = p {
                must_exist(field, p)?;
            }
        }
        match (&self.inventory.points, &self.inventory.mask) {
            (Some(p), None) => must_exist("inventory.points", p)?,
            (None, Some(p)) => must_exist("inventory.mask", p)?,
            _ => return cfg_err("inventory: set exactly one of `points` or `mask`".into()),
        }

        if !(self.stream_threshold > 0.0) {
            return cfg_err(format!("stream_threshold must be > 0, got {}", self.stream_threshold));
        }
        if let Some(r) = self.density_radius {
            if !(r > 0.0) {
                return cfg_err(format!("density_radius must be > 0, got {r}"));
            }
        }
        if !(self.cut_fill_tolerance >= 0.0) {
            return cfg_err(format!("cut_fill_tolerance must be >= 0, got {}", self.cut_fill_tolerance));
        }
        let v = &self.validation;
        if !(v.train_ratio > 0.0 && v.train_ratio < 1.0) {
            return cfg_err(format!("validation.train_ratio must be in (0, 1), got {}", v.train_ratio));
        }
        if v.bins == 0 {
            return cfg_err("validation.bins must be >= 1".into());
        }
        self.validate_zonation()?;

        if self.factors.is_empty() {
            return cfg_err("factors: at least one factor is required".into());
        }
        let mut seen = BTreeSet::new();
        for f in &self.factors {
            self.validate_factor(f)?;
            if !seen.insert(f.name.as_str()) {
                return cfg_err(format!("factors: duplicate factor name `{}`", f.name));
            }
        }
        Ok(())
    }

    fn validate_zonation(&self) -> Result<()> {
        let z = &self.zonation;
        match z.method {
            BreakMethod::Manual => match &z.uppers {
                Some(u) if u.len() == ZONE_COUNT => Ok(()),
                _ => Err(Error::Config(format!(
                    "zonation: manual method needs `uppers` with {ZONE_COUNT} values"
                ))),
            },
            BreakMethod::Jenks | BreakMethod::EqualInterval => match z.k {
                None | Some(ZONE_COUNT) => Ok(()),
                Some(k) => Err(Error::Config(format!("zonation: k must be {ZONE_COUNT}, got {k}"))),
            },
            BreakMethod::Categorical => Err(Error::Config("zonation: categorical method is not allowed".into())),
        }
    }

    fn validate_factor(&self, f: &FactorSpec) -> Result<()> {
        let err = |m: String| Err(Error::Config(format!("factor `{}`: {m}", f.name)));
        if f.name.is_empty()
            || !f.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return err("name must be non-empty and use only letters, digits, `_` or `-`".into());
        }
        match (f.derived, &f.file) {
            (Some(_), Some(_)) | (None, None) => {
                return err("set exactly one of `derived` or `file`".into())
            }
            (None, Some(p)) => {
                if !p.is_file() {
                    return err(format!("file not found: {}", p.display()));
                }
            }
            (Some(op), None) => {
                let needs: &[(&str, bool)] = match op {
                    DerivedOp::RoadDistance => &[("inputs.roads", self.inputs.roads.is_some())],
                    DerivedOp::Ndvi => &[
                        ("inputs.nir", self.inputs.nir.is_some()),
                        ("inputs.red", self.inputs.red.is_some()),
                    ],
                    DerivedOp::CutFill => &[("dem_old", self.dem_old.is_some())],
                    _ => &[],
                };
                if let Some((field, _)) = needs.iter().find(|(_, ok)| !ok) {
                    return err(format!("derived `{op}` requires `{field}`"));
                }
            }
        }

        let c = f.classification();
        c.parsed_labels()
            .map_err(|e| Error::Config(format!("factor `{}`: {}", f.name, e.to_string().trim_start_matches("config error: "))))?;
        match (f.kind(), c.method) {
            (FactorKind::Categorical, BreakMethod::Categorical) => Ok(()),
            (FactorKind::Categorical, m) => {
                err(format!("categorical factors must use the categorical method, not `{}`", m.as_str()))
            }
            (FactorKind::Continuous, BreakMethod::Categorical) => {
                err("continuous factors cannot use the categorical method".into())
            }
            (FactorKind::Continuous, BreakMethod::Manual) => match &c.uppers {
                Some(u) if !u.is_empty() => Ok(()),
                _ => err("manual classification needs `uppers`".into()),
            },
            (FactorKind::Continuous, _) => match c.k {
                Some(k) if k >= 2 => Ok(()),
                None => Ok(()),
                Some(k) => err(format!("classification k must be >= 2, got {k}")),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_min(dir: &Path, extra: &str) -> PathBuf {
        fs::write(dir.join("dem.asc"), "x").unwrap();
        fs::write(dir.join("inv.csv"), "x,y\n").unwrap();
        let p = dir.join("c.toml");
        fs::write(
            &p,
            format!(
                "dem = \"dem.asc\"\n{extra}\n[inventory]\npoints = \"inv.csv\"\n\n[[factors]]\nname = \"slope\"\nderived = \"slope\"\n"
            ),
        )
        .unwrap();
        p
    }

    #[test]
    fn defaults_and_paths() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::load(write_min(dir.path(), "")).unwrap();
        assert_eq!(cfg.dem, dir.path().join("dem.asc"));
        assert_eq!(cfg.output_dir, dir.path().join("out"));
        assert_eq!(cfg.validation, ValidationSpec::default());
        assert_eq!(cfg.factors[0].classification().method, BreakMethod::Jenks);
    }

    #[test]
    fn missing_prerequisite_names_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_min(dir.path(), "");
        let text = fs::read_to_string(&p).unwrap() + "\n[[factors]]\nname = \"ndvi\"\nderived = \"ndvi\"\n";
        fs::write(&p, text).unwrap();
        let e = PipelineConfig::load(&p).unwrap_err().to_string();
        assert!(e.contains("inputs.nir"), "{e}");
    }

    #[test]
    fn missing_dem_field_and_file() {
        let e = PipelineConfig::from_toml_str("factors = []\n[inventory]\n").unwrap_err();
        assert!(e.to_string().contains("dem"));
        let dir = tempfile::tempdir().unwrap();
        let p = write_min(dir.path(), "");
        fs::remove_file(dir.path().join("dem.asc")).unwrap();
        let e = PipelineConfig::load(&p).unwrap_err().to_string();
        assert!(e.contains("dem: file not found"), "{e}");
    }

    #[test]
    fn rejects_bad_zonation_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_min(dir.path(), "[zonation]\nmethod = \"manual\"\nuppers = [1.0, 2.0]\n");
        assert!(PipelineConfig::load(&p).unwrap_err().to_string().contains("zonation"));

        let p = write_min(dir.path(), "");
        let text = fs::read_to_string(&p).unwrap() + "\n[[factors]]\nname = \"slope\"\nderived = \"aspect\"\n";
        fs::write(&p, text).unwrap();
        assert!(PipelineConfig::load(&p).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn derived_op_names_roundtrip() {
        for op in DerivedOp::ALL {
            assert_eq!(op.as_str().parse::<DerivedOp>().unwrap(), op);
        }
        assert!("bogus".parse::<DerivedOp>().is_err());
    }
}
