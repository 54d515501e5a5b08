//! Manifest-driven build: every ingest stage in fixed order, then link and
//! freeze.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::error::{Error, Result};
use crate::fer::{self, Rejection};
use crate::linker::{self, LinkReport};
use crate::query::DEFAULT_MIN_SIMILARITY;
use crate::schema;
use crate::store::{Store, StoreStats, ValidationReport};
use crate::world::{self, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Stage {
    Frames,
    Taxonomy,
    Assertions,
    Annotations,
    Rules,
    World,
    SameAs,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Frames => "frames",
            Stage::Taxonomy => "taxonomy",
            Stage::Assertions => "assertions",
            Stage::Annotations => "annotations",
            Stage::Rules => "rules",
            Stage::World => "world",
            Stage::SameAs => "sameAs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ManifestInput {
    pub stage: Stage,
    pub path: PathBuf,
    /// Source name recorded on frames; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ManifestOptions {
    #[serde(default = "default_min_similarity")]
    pub min_similarity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_output_path: Option<PathBuf>,
}

fn default_min_similarity() -> f64 {
    DEFAULT_MIN_SIMILARITY
}

impl Default for ManifestOptions {
    fn default() -> Self {
        ManifestOptions {
            min_similarity: DEFAULT_MIN_SIMILARITY,
            annotation_output_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Manifest {
    pub inputs: Vec<ManifestInput>,
    #[serde(default)]
    pub options: ManifestOptions,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        let mut manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
        manifest.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.check()?;
        Ok(manifest)
    }

    /// Stages must appear in pipeline order; world triples need rules first.
    pub fn check(&self) -> Result<()> {
        for pair in self.inputs.windows(2) {
            if pair[1].stage < pair[0].stage {
                return Err(Error::Manifest(format!(
                    "stage `{}` must not follow `{}`",
                    pair[1].stage.as_str(),
                    pair[0].stage.as_str()
                )));
            }
        }
        let has = |s: Stage| self.inputs.iter().any(|i| i.stage == s);
        if has(Stage::World) && !has(Stage::Rules) {
            return Err(Error::Manifest("stage `world` needs a `rules` input".into()));
        }
        if !(0.0..=1.0).contains(&self.options.min_similarity) {
            return Err(Error::Manifest("minSimilarity must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub path: PathBuf,
    pub report: Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NeedsAnnotation {
    pub path: Option<PathBuf>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BuildReport {
    pub stages: Vec<StageReport>,
    pub needs_annotation: NeedsAnnotation,
    pub link: LinkReport,
    pub validation: ValidationReport,
    pub stats: StoreStats,
}

#[derive(Debug)]
pub struct BuildOutput {
    pub store: Store,
    pub report: BuildReport,
    pub min_similarity: f64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn to_json(value: &impl Serialize) -> Json {
    serde_json::to_value(value).expect("reports serialize")
}

/// Runs every stage of `manifest` plus linking, writes the needs-annotation
/// file, and returns the raw store before freezing.
pub fn run_stages(manifest: &Manifest, annotation_output: Option<&Path>) -> Result<(Store, Vec<StageReport>, NeedsAnnotation, LinkReport)> {
    manifest.check()?;
    let mut store = Store::new();
    let mut stages = Vec::new();
    let mut rules = RuleSet::default();
    let mut rejected: Vec<Rejection> = Vec::new();
    for input in &manifest.inputs {
        let path = manifest.resolve(&input.path);
        let text = read(&path)?;
        let report = match input.stage {
            Stage::Frames => {
                let source = input.source.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "schema".into())
                });
                to_json(&schema::ingest_frames(&mut store, &text, &source)?)
            }
            Stage::Taxonomy => to_json(&schema::ingest_taxonomy(&mut store, &text)?),
            Stage::Assertions => {
                let r = fer::ingest_assertions(&mut store, &text)?;
                rejected.extend(r.rejected.iter().cloned());
                to_json(&r)
            }
            Stage::Annotations => to_json(&fer::import_annotations(&mut store, &text)?),
            Stage::Rules => {
                let loaded = world::load_rules(&store, &text)?;
                let json = serde_json::json!({
                    "rules": loaded.len(),
                    "warnings": loaded.warnings,
                });
                for (k, v) in loaded.rules {
                    rules.rules.insert(k, v);
                }
                json
            }
            Stage::World => to_json(&world::ingest_world(&mut store, &rules, &text)?),
            Stage::SameAs => to_json(&world::merge_entities(&mut store, &text)?),
        };
        stages.push(StageReport {
            stage: input.stage,
            path: input.path.clone(),
            report,
        });
    }

    let out_path = annotation_output
        .map(Path::to_path_buf)
        .or_else(|| manifest.options.annotation_output_path.as_ref().map(|p| manifest.resolve(p)));
    if let Some(p) = &out_path {
        let mut buf = Vec::new();
        fer::write_needs_annotation(&rejected, &mut buf)?;
        fs::write(p, buf)?;
    }
    let needs = NeedsAnnotation {
        path: out_path,
        count: rejected.len(),
    };
    let link = linker::link_all(&mut store)?;
    Ok((store, stages, needs, link))
}

/// Full build. Validation violations surface as `ValidationFailed`.
pub fn build(manifest_path: &Path, annotation_output: Option<&Path>) -> Result<BuildOutput> {
    let manifest = Manifest::load(manifest_path)?;
    let (mut store, stages, needs_annotation, link) = run_stages(&manifest, annotation_output)?;
    let validation = store.freeze()?;
    let report = BuildReport {
        stages,
        needs_annotation,
        link,
        validation,
        stats: store.stats(),
    };
    Ok(BuildOutput {
        store,
        report,
        min_similarity: manifest.options.min_similarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(json: &str) -> Result<Manifest> {
        let m: Manifest = serde_json::from_str(json).map_err(|e| Error::Manifest(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    #[test]
    fn stage_order_is_enforced() {
        assert!(manifest(r#"{"inputs":[{"stage":"frames","path":"a"},{"stage":"taxonomy","path":"b"}]}"#).is_ok());
        assert!(matches!(
            manifest(r#"{"inputs":[{"stage":"taxonomy","path":"b"},{"stage":"frames","path":"a"}]}"#),
            Err(Error::Manifest(_))
        ));
        assert!(matches!(
            manifest(r#"{"inputs":[{"stage":"world","path":"w"}]}"#),
            Err(Error::Manifest(_))
        ));
        assert!(matches!(
            manifest(r#"{"inputs":[{"stage":"frames","path":"a","extra":1}]}"#),
            Err(Error::Manifest(_))
        ));
        let m = manifest(r#"{"inputs":[]}"#).unwrap();
        assert_eq!(m.options.min_similarity, 0.5);
    }
}
