//! Run manifests: a TOML file whose tables are merged onto a parameter
//! profile and a base scenario, with command-line flags applied last.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use mupf_core::harness::{box_scenario, RunOptions};
use mupf_core::simulate::ScenarioSpec;
use mupf_core::{FilterConfig, Pose, SuccessThresholds, TriMesh};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Simulation,
    Experimental,
}

/// On-disk layout. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    profile: Option<Profile>,
    seed: Option<u64>,
    trials: Option<usize>,
    output: Option<PathBuf>,
    timing: Option<bool>,
    mesh: Option<PathBuf>,
    measurements: Option<PathBuf>,
    filter: Option<toml::Table>,
    scenario: Option<toml::Table>,
    thresholds: Option<toml::Table>,
}

/// Flag values that take precedence over the manifest.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub mesh: Option<PathBuf>,
    pub measurements: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub contacts: Option<usize>,
    pub output: Option<PathBuf>,
    pub no_timing: bool,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: FilterConfig,
    pub scenario: ScenarioSpec,
    pub mesh: Arc<TriMesh>,
    pub measurements: Option<PathBuf>,
    pub trials: usize,
    pub output: Option<PathBuf>,
    pub options: RunOptions,
    pub seed: u64,
}

/// Configuration problems; reported with exit code 2.
#[derive(Debug)]
pub struct Invalid(pub anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Invalid {
    fn from(e: E) -> Self {
        Invalid(e.into())
    }
}

fn merge(base: &mut toml::Table, patch: toml::Table) {
    for (key, value) in patch {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// `base` with the keys of `patch` replaced, re-validated through serde.
fn patched<T: Serialize + DeserializeOwned>(
    base: &T,
    patch: Option<toml::Table>,
    what: &str,
) -> anyhow::Result<T> {
    let Some(patch) = patch else {
        return Ok(toml::Value::try_from(base)?.try_into()?);
    };
    let mut table =
        toml::Table::try_from(base).with_context(|| format!("encoding default {what}"))?;
    merge(&mut table, patch);
    toml::Value::Table(table)
        .try_into()
        .with_context(|| format!("invalid [{what}] table"))
}

fn relative_to(dir: Option<&Path>, p: PathBuf) -> PathBuf {
    match dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p,
    }
}

impl RunManifest {
    pub fn load(path: Option<&Path>, flags: &Overrides) -> Result<Self, Invalid> {
        let (file, dir) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading manifest {}", p.display()))?;
                let file: ManifestFile = toml::from_str(&text)
                    .with_context(|| format!("parsing manifest {}", p.display()))?;
                (file, p.parent().map(Path::to_path_buf))
            }
            None => (ManifestFile::default(), None),
        };
        let dir = dir.as_deref();

        let profile = match file.profile.unwrap_or_default() {
            Profile::Simulation => FilterConfig::simulation_profile(),
            Profile::Experimental => FilterConfig::experimental_profile(),
        };
        let mut config: FilterConfig = patched(&profile, file.filter, "filter")?;
        let thresholds: SuccessThresholds =
            patched(&SuccessThresholds::default(), file.thresholds, "thresholds")?;

        let mesh_path = flags
            .mesh
            .clone()
            .or_else(|| file.mesh.map(|p| relative_to(dir, p)));
        let (mesh, base_scenario) = match &mesh_path {
            Some(p) => {
                let mesh = TriMesh::load_obj(p)?;
                let spec = ScenarioSpec {
                    mesh_path: Some(p.clone()),
                    true_pose: Pose::default(),
                    measurements: 15,
                    face_subset: None,
                    noise_sigma: 0.0,
                    seed: 0,
                    symmetries: Vec::new(),
                };
                (mesh, spec)
            }
            None => box_scenario()?,
        };
        let mut scenario: ScenarioSpec = patched(&base_scenario, file.scenario, "scenario")?;
        if let Some(l) = flags.contacts {
            scenario.measurements = l;
        }

        let seed = flags.seed.or(file.seed).unwrap_or(config.seed);
        config.seed = seed;
        scenario.seed = seed;
        let trials = flags.trials.or(file.trials).unwrap_or(1);

        config.validate()?;
        scenario.validate(&mesh)?;
        if trials == 0 {
            return Err(Invalid(anyhow!("trials must be >= 1")));
        }
        let measurements = flags
            .measurements
            .clone()
            .or_else(|| file.measurements.map(|p| relative_to(dir, p)));
        Ok(Self {
            config,
            scenario,
            mesh: Arc::new(mesh),
            measurements,
            trials,
            output: flags.output.clone().or(file.output),
            options: RunOptions {
                thresholds,
                timed: !flags.no_timing && file.timing.unwrap_or(true),
            },
            seed,
        })
    }
}
