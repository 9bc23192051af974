//! Batch transform jobs: one schedule lookup, applied to many files in parallel.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spectral_curriculum::augment::{randaug, AugPolicy};
use spectral_curriculum::curriculum::{Schedule, TransformSpec};
use spectral_curriculum::{Error, Result};

use crate::imageio::{load_image, save_png, tensor_from_image};

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobManifest {
    pub inputs: Vec<PathBuf>,
    pub schedule: PathBuf,
    pub epoch: u32,
    pub out_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub augment: bool,
    #[serde(default)]
    pub emit_png: bool,
}

impl JobManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Checks everything that would abort the whole job, and loads the schedule.
    pub fn validate(&self) -> Result<Schedule> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let missing: Vec<_> = self.inputs.iter().filter(|p| !p.exists()).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing inputs: {missing:?}")));
        }
        let mut stems = BTreeSet::new();
        for input in &self.inputs {
            let stem = output_stem(input)?;
            if !stems.insert(stem.clone()) {
                return Err(Error::Config(format!("two inputs share the output name {stem:?}")));
            }
        }
        let schedule: Schedule = serde_json::from_str(&fs::read_to_string(&self.schedule)?)?;
        schedule.lookup(self.epoch)?;
        Ok(schedule)
    }
}

fn output_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::Config(format!("input {} has no usable file name", path.display())))
}

/// Per-file record written next to each output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub input: PathBuf,
    pub index: u64,
    pub epoch: u32,
    pub transform: TransformSpec,
    pub magnitude: f64,
    pub augment: bool,
    pub seed: u64,
    pub shape: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileError {
    pub index: u64,
    pub input: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSummary {
    pub epoch: u32,
    pub transform: TransformSpec,
    pub magnitude: f64,
    pub seed: u64,
    pub written: Vec<PathBuf>,
    pub errors: Vec<FileError>,
}

/// Runs the job. Unreadable inputs are recorded in the summary; anything that
/// invalidates the whole job is returned as an error before any file is written.
pub fn run_transform(manifest: &JobManifest) -> Result<JobSummary> {
    let schedule = manifest.validate()?;
    let (transform, magnitude) = schedule.lookup(manifest.epoch)?;
    fs::create_dir_all(&manifest.out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let base = schedule.base_resolution();
    let results: Vec<std::result::Result<PathBuf, FileError>> = pool.install(|| {
        manifest
            .inputs
            .par_iter()
            .enumerate()
            .map(|(i, input)| {
                process_one(manifest, &transform, magnitude, base, i as u64, input).map_err(|e| FileError {
                    index: i as u64,
                    input: input.clone(),
                    error: e.to_string(),
                })
            })
            .collect()
    });

    let mut summary = JobSummary {
        epoch: manifest.epoch,
        transform,
        magnitude,
        seed: manifest.seed,
        written: Vec::new(),
        errors: Vec::new(),
    };
    for r in results {
        match r {
            Ok(path) => summary.written.push(path),
            Err(e) => summary.errors.push(e),
        }
    }
    Ok(summary)
}

fn process_one(
    manifest: &JobManifest,
    transform: &TransformSpec,
    magnitude: f64,
    base: u32,
    index: u64,
    input: &Path,
) -> std::result::Result<PathBuf, Box<dyn std::error::Error + Send + Sync>> {
    let image = load_image(input)?;
    let image = if manifest.augment {
        randaug(
            &image,
            &AugPolicy::baseline(manifest.seed).with_magnitude(magnitude),
            index,
        )?
    } else {
        image
    };
    let out = transform.apply(&image, base)?;

    let stem = output_stem(input)?;
    let tensor_path = manifest.out_dir.join(format!("{stem}.etns"));
    tensor_from_image(&out).write(&tensor_path)?;
    if manifest.emit_png {
        save_png(&out, &manifest.out_dir.join(format!("{stem}.png")))?;
    }
    let sidecar = Sidecar {
        input: input.to_path_buf(),
        index,
        epoch: manifest.epoch,
        transform: transform.clone(),
        magnitude,
        augment: manifest.augment,
        seed: manifest.seed,
        shape: [out.channels(), out.height(), out.width()],
    };
    fs::write(
        manifest.out_dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    Ok(tensor_path)
}
