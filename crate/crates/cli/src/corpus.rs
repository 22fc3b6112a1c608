//! Corpus directories: `manifest.toml` plus one directory per pair.
//!
//! ```text
//! corpus/manifest.toml
//! corpus/train/000/{clean,noisy}.{txt,pgm}
//! corpus/heldout/000/...
//! ```
//! In row layout each pair directory also holds `clean_row.txt` and
//! `noisy_row.txt`, the signals used for training.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steplearn::datagen::{gen_pairs, split_seed, GeneratedPair};
use steplearn::TrainingSet;

use crate::config::{streams, CorpusConfig, LayoutName, NoiseConfig};
use crate::error::CliError;
use crate::formats::{encode_pgm, read_samples, render_samples, Samples};

pub const MANIFEST: &str = "manifest.toml";

/// Seeds are stored as decimal strings because TOML integers are signed 64-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub index: usize,
    pub scene_seed: String,
    pub noise_seed: String,
    /// Row used in row layout.
    pub row: usize,
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRecord {
    pub name: String,
    pub scene_master: String,
    pub noise_master: String,
    pub pairs: Vec<PairRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub layout: LayoutName,
    pub side: usize,
    pub squares: usize,
    pub size_min: usize,
    pub size_max: usize,
    pub level_min: f64,
    pub level_max: f64,
    pub background: f64,
    pub level_steps: u32,
    pub noise: NoiseConfig,
    pub splits: Vec<SplitRecord>,
}

impl Manifest {
    pub fn split(&self, name: &str) -> Option<&SplitRecord> {
        self.splits.iter().find(|s| s.name == name)
    }
}

struct GeneratedSplit {
    record: SplitRecord,
    pairs: Vec<GeneratedPair>,
}

fn generate_split(
    c: &CorpusConfig,
    seed: u64,
    name: &str,
    count: usize,
    scene_stream: u64,
    noise_stream: u64,
) -> Result<GeneratedSplit, CliError> {
    let scene_master = split_seed(seed, scene_stream);
    let noise_master = split_seed(seed, noise_stream);
    let pairs = if count == 0 {
        Vec::new()
    } else {
        gen_pairs(&c.scene_spec(scene_master), &c.noise.spec(noise_master), count)?
    };
    let records = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| PairRecord {
            index: i,
            scene_seed: p.scene_seed.to_string(),
            noise_seed: p.noise_seed.to_string(),
            row: p.clean.probe_row(),
            dir: format!("{name}/{i:03}"),
        })
        .collect();
    Ok(GeneratedSplit {
        record: SplitRecord {
            name: name.into(),
            scene_master: scene_master.to_string(),
            noise_master: noise_master.to_string(),
            pairs: records,
        },
        pairs,
    })
}

/// Writes a corpus for `c` under `dir`. An existing manifest that is
/// unreadable or describes a different corpus is only replaced with `force`.
pub fn generate_corpus(c: &CorpusConfig, seed: u64, dir: &Path, force: bool) -> Result<Manifest, CliError> {
    let train = generate_split(c, seed, "train", c.train, streams::TRAIN_SCENES, streams::TRAIN_NOISE)?;
    let heldout = generate_split(c, seed, "heldout", c.heldout, streams::HELDOUT_SCENES, streams::HELDOUT_NOISE)?;
    let spec = c.scene_spec(0);
    let manifest = Manifest {
        version: 1,
        seed,
        layout: c.layout,
        side: c.side,
        squares: c.squares,
        size_min: spec.size_range.0,
        size_max: spec.size_range.1,
        level_min: c.level_min,
        level_max: c.level_max,
        background: c.background,
        level_steps: spec.level_steps.unwrap_or(0),
        noise: c.noise,
        splits: vec![train.record.clone(), heldout.record.clone()],
    };
    let path = dir.join(MANIFEST);
    if path.exists() && !force {
        let existing = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        match toml::from_str::<Manifest>(&existing) {
            Ok(m) if m == manifest => {}
            Ok(_) => return Err(CliError::Exists(path)),
            Err(e) => {
                return Err(CliError::Validation(format!(
                    "{} is corrupt ({e}); pass --force to overwrite",
                    path.display()
                )))
            }
        }
    }
    for split in [&train, &heldout] {
        for (p, r) in split.pairs.iter().zip(&split.record.pairs) {
            write_pair(dir, r, p, c.layout)?;
        }
    }
    let text = toml::to_string(&manifest).map_err(|e| CliError::Validation(format!("manifest: {e}")))?;
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_pair(root: &Path, r: &PairRecord, p: &GeneratedPair, layout: LayoutName) -> Result<(), CliError> {
    let dir = root.join(&r.dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let side = p.noisy.side();
    for (name, img) in [("clean", &p.clean.image), ("noisy", &p.noisy)] {
        let s = Samples::Image {
            side,
            data: img.data().to_vec(),
        };
        write_file(&dir.join(format!("{name}.txt")), render_samples(&s).as_bytes())?;
        write_file(&dir.join(format!("{name}.pgm")), &encode_pgm(side, img.data()))?;
        if layout == LayoutName::Row {
            let row = Samples::Signal(img.row(r.row).to_vec());
            write_file(&dir.join(format!("{name}_row.txt")), render_samples(&row).as_bytes())?;
        }
    }
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Clean/noisy sample files of one pair in the training layout.
pub fn pair_files(dir: &Path, m: &Manifest, r: &PairRecord) -> (PathBuf, PathBuf) {
    let d = dir.join(&r.dir);
    match m.layout {
        LayoutName::Row => (d.join("clean_row.txt"), d.join("noisy_row.txt")),
        LayoutName::Image => (d.join("clean.txt"), d.join("noisy.txt")),
    }
}

/// Sample-domain `(clean, noisy)` vectors of a split.
pub fn load_split(dir: &Path, m: &Manifest, name: &str) -> Result<Vec<(Vec<f64>, Vec<f64>)>, CliError> {
    let split = m
        .split(name)
        .ok_or_else(|| CliError::Validation(format!("manifest has no `{name}` split")))?;
    split
        .pairs
        .iter()
        .map(|r| {
            let (c, n) = pair_files(dir, m, r);
            Ok((read_samples(&c)?.values().to_vec(), read_samples(&n)?.values().to_vec()))
        })
        .collect()
}

pub fn to_training_set(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<TrainingSet, CliError> {
    Ok(TrainingSet::from_arrays(pairs)?)
}
