//! Run manifests.
//!
//! A manifest is a TOML file with up to four tables. Only `[dataset]` is
//! required; the others fall back to their defaults. Unknown keys anywhere
//! are rejected.
//!
//! ```toml
//! [dataset]
//! path = "pairs.csv"          # relative to the manifest file
//! text_a = "req_a"            # column names, defaulting to text_a/text_b/label
//! text_b = "req_b"
//! label = "dependency"
//! id = "pair_id"              # optional
//!
//! [sweep]                     # SweepConfig
//! fractions = [0.2, 0.5, 0.8]
//! seed = 7
//!
//! [[sweep.families]]
//! hyperparams = { family = "random_forest", n_trees = 50 }
//!
//! [costs]                     # CostParams
//! c_resource = 440.0
//!
//! [active]                    # ALConfig
//! sampling = "LEAST_CONFIDENCE"
//! annotation_budget = 300
//! ```
//!
//! Instead of `path`, a dataset may name a stored `hash`, or carry a
//! `[dataset.synthetic]` table (`n`, `class_ratio`, `signal_strength`,
//! `seed`) to generate one.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use aroi_core::active::ALConfig;
use aroi_core::dataset::{ingest_csv, ColumnMap, LabelVocab, LabeledPairDataset, SyntheticSpec};
use aroi_core::roi::CostParams;
use aroi_core::store::Store;
use aroi_core::sweep::SweepConfig;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub hash: Option<String>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "text_a")]
    pub text_a: String,
    #[serde(default = "text_b")]
    pub text_b: String,
    #[serde(default = "label")]
    pub label: String,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub positive: Option<String>,
    #[serde(default)]
    pub negative: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
}

fn text_a() -> String {
    "text_a".into()
}
fn text_b() -> String {
    "text_b".into()
}
fn label() -> String {
    "label".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub costs: CostParams,
    #[serde(default)]
    pub active: ALConfig,
}

/// A parsed manifest together with the exact text it came from.
#[derive(Clone, Debug)]
pub struct LoadedManifest {
    pub manifest: RunManifest,
    pub text: String,
    pub dir: PathBuf,
}

impl LoadedManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read manifest {}: {e}", path.display())))?;
        let manifest = parse(&text)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { manifest, text, dir })
    }

    pub fn sha256(&self) -> String {
        crate::sha256_hex(self.text.as_bytes())
    }

    /// Loads the dataset the manifest points at.
    pub fn dataset(&self, store: &Store) -> Result<LabeledPairDataset, CliError> {
        self.manifest.dataset.load(&self.dir, store)
    }
}

pub fn parse(text: &str) -> Result<RunManifest, CliError> {
    toml::from_str(text).map_err(|e| CliError::validation("INVALID_MANIFEST", e.message().to_string()))
}

impl DatasetSource {
    pub fn column_map(&self) -> ColumnMap {
        let mut map = ColumnMap::new(&self.text_a, &self.text_b, &self.label);
        if let Some(id) = &self.id {
            map = map.with_id(id);
        }
        if self.positive.is_some() || self.negative.is_some() {
            let d = LabelVocab::default();
            map = map.with_vocab(LabelVocab {
                positive: self.positive.clone().unwrap_or(d.positive),
                negative: self.negative.clone().unwrap_or(d.negative),
            });
        }
        map
    }

    pub fn load(&self, base: &Path, store: &Store) -> Result<LabeledPairDataset, CliError> {
        match (&self.path, &self.hash, &self.synthetic) {
            (Some(path), None, None) => {
                let full = base.join(path);
                let file = std::fs::File::open(&full)
                    .map_err(|e| CliError::io(format!("cannot open {}: {e}", full.display())))?;
                let name = self.name.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default()
                });
                Ok(ingest_csv(file, &self.column_map(), name)?.dataset)
            }
            (None, Some(hash), None) => Ok(store.get_dataset(hash)?),
            (None, None, Some(spec)) => Ok(aroi_core::dataset::generate_synthetic_with(spec)?.dataset),
            _ => Err(CliError::validation(
                "INVALID_MANIFEST",
                "[dataset] needs exactly one of `path`, `hash` or a [dataset.synthetic] table",
            )),
        }
    }
}
