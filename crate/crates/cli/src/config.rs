//! Configuration file schema (TOML, version 1).
//!
//! Every key is optional at parse time; each subcommand then asks for the
//! sections it needs and fails with an argument error if one is missing.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use fsl::experiments::{ExperimentSpec, SourceSpec};
use fsl::geometry::{make_family, CompactSet, ConeSpec, FamilyKind};
use fsl::solver::SolverConfig;
use fsl::{Error, Result};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    /// Output directory (overridden by `--out`).
    pub out: Option<PathBuf>,
    pub geometry: Option<GeometrySpec>,
    /// Second set for `hausdorff`; defaults to the family limit.
    pub other: Option<GeometrySpec>,
    pub family: Option<FamilyRange>,
    pub cone: Option<ConeSpec>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub angular_samples: Option<usize>,
    pub h: Option<f64>,
    pub p: Option<f64>,
    pub solver: Option<SolverConfig>,
    pub source: Option<SourceSpec>,
    pub capacity: Option<CapacitySection>,
    pub experiment: Option<ExperimentSpec>,
}

/// One compact set: a family member (`family`, `n`, optionally `limit`), an
/// inline box list (`set`), or a JSON file holding one (`file`, relative to
/// the configuration file).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub family: Option<FamilyKind>,
    pub n: Option<usize>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub limit: bool,
    pub set: Option<CompactSet>,
    pub file: Option<PathBuf>,
}

/// A finite part `(K_n)_{n in indices}` of a named family.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyRange {
    pub kind: FamilyKind,
    pub indices: Vec<usize>,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    pub radii: Vec<f64>,
    /// Exponents of the slit-line contrast; when set, `geometry` is ignored.
    pub contrast_p: Option<Vec<f64>>,
    pub threshold: Option<f64>,
}

fn default_dim() -> usize {
    3
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            Error::Parse(format!("config: {}", e.message().replace('\n', " ")))
        })?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "config: unsupported schema {} (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text)?, base))
    }
}

pub fn require<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Argument(format!("config is missing `{key}`")))
}

impl GeometrySpec {
    pub fn resolve(&self, base: &Path) -> Result<CompactSet> {
        match (&self.family, &self.set, &self.file) {
            (Some(kind), None, None) => {
                let n = self
                    .n
                    .ok_or_else(|| Error::Argument("geometry.n is required with a family".into()))?;
                let (member, limit) = make_family(*kind, n, self.dim)?;
                Ok(if self.limit { limit } else { member })
            }
            (None, Some(set), None) => Ok(set.clone()),
            (None, None, Some(file)) => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::Argument(format!("cannot read {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
            }
            _ => Err(Error::Argument(
                "geometry needs exactly one of `family`, `set`, `file`".into(),
            )),
        }
    }

    /// The family limit, when this names a family member.
    pub fn family_limit(&self) -> Result<Option<CompactSet>> {
        match (self.family, self.n) {
            (Some(kind), Some(n)) => Ok(Some(make_family(kind, n, self.dim)?.1)),
            _ => Ok(None),
        }
    }
}

impl FamilyRange {
    pub fn members(&self) -> Result<Vec<(usize, CompactSet)>> {
        self.indices
            .iter()
            .map(|&n| Ok((n, make_family(self.kind, n, self.dim)?.0)))
            .collect()
    }

    pub fn limit(&self) -> Result<CompactSet> {
        let n = *self
            .indices
            .first()
            .ok_or_else(|| Error::Argument("family.indices is empty".into()))?;
        Ok(make_family(self.kind, n, self.dim)?.1)
    }
}
