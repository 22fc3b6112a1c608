//! Synthetic corpora: scenes of flat squares on a flat background, plus noise.
//!
//! Every output is a pure function of its spec. Randomness comes from
//! ChaCha8 (`rand_chacha` 0.9); per-pair seeds are split from a master seed by
//! [`split_seed`].

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{CoefficientVector, TrainingSet};

const PLACEMENT_RETRIES: usize = 1000;

/// Seed of the `index`-th child of `master`: first output word of ChaCha8
/// seeded with `master` on stream `index`.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Square grayscale image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    side: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn filled(side: usize, value: f64) -> Self {
        Self {
            side,
            data: vec![value; side * side],
        }
    }

    pub fn from_data(side: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != side * side {
            return Err(Error::Shape(format!("{} pixels for a {side}x{side} image", data.len())));
        }
        Ok(Self { side, data })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.side + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.side..(row + 1) * self.side]
    }

    fn fill_rect(&mut self, row: usize, col: usize, size: usize, v: f64) {
        for r in row..(row + size).min(self.side) {
            for c in col..(col + size).min(self.side) {
                self.set(r, c, v);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub row: usize,
    pub col: usize,
    pub size: usize,
    pub level: f64,
}

impl Square {
    fn overlaps(&self, o: &Square) -> bool {
        self.row < o.row + o.size && o.row < self.row + self.size && self.col < o.col + o.size && o.col < self.col + self.size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    /// Power of two.
    pub side: usize,
    pub squares: usize,
    /// Inclusive range of square side lengths.
    pub size_range: (usize, usize),
    /// Range of square levels, inside `[0, 1]`.
    pub level_range: (f64, f64),
    pub background: f64,
    /// Quantize levels to multiples of `1 / steps`.
    pub level_steps: Option<u32>,
    pub seed: u64,
}

impl SceneSpec {
    /// Two squares of side `side/8 ..= side/4`, levels in `[0.2, 0.9]` quantized to `k/255`.
    pub fn medium_squares(side: usize, seed: u64) -> Self {
        Self {
            side,
            squares: 2,
            size_range: ((side / 8).max(1), (side / 4).max(1)),
            level_range: (0.2, 0.9),
            background: 0.0,
            level_steps: Some(255),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.side < 2 || !self.side.is_power_of_two() {
            return Err(Error::Domain(format!("side {} is not a power of two >= 2", self.side)));
        }
        let (lo, hi) = self.size_range;
        if lo == 0 || lo > hi || hi > self.side {
            return Err(Error::Domain(format!("square sizes {lo}..={hi} do not fit a {}-pixel side", self.side)));
        }
        let (a, b) = self.level_range;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::Domain(format!("level range [{a}, {b}] outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.background) {
            return Err(Error::Domain(format!("background {} outside [0, 1]", self.background)));
        }
        if self.level_steps == Some(0) {
            return Err(Error::Domain("level_steps must be positive".into()));
        }
        Ok(())
    }

    fn quantize(&self, v: f64) -> f64 {
        match self.level_steps {
            Some(s) => ((v * s as f64).round() / s as f64).clamp(0.0, 1.0),
            None => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: Image,
    pub squares: Vec<Square>,
}

impl Scene {
    /// Row through the center of the first square, or the middle row.
    pub fn probe_row(&self) -> usize {
        self.squares
            .first()
            .map(|s| s.row + s.size / 2)
            .unwrap_or(self.image.side() / 2)
    }
}

/// Draws `spec.squares` non-overlapping squares.
pub fn gen_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut squares: Vec<Square> = Vec::with_capacity(spec.squares);
    for i in 0..spec.squares {
        let mut placed = None;
        for _ in 0..PLACEMENT_RETRIES {
            let size = rng.random_range(spec.size_range.0..=spec.size_range.1);
            let row = rng.random_range(0..=spec.side - size);
            let col = rng.random_range(0..=spec.side - size);
            let cand = Square { row, col, size, level: 0.0 };
            if squares.iter().all(|s| !s.overlaps(&cand)) {
                placed = Some(cand);
                break;
            }
        }
        let mut sq = placed.ok_or_else(|| {
            Error::Domain(format!("could not place square {} after {PLACEMENT_RETRIES} attempts", i + 1))
        })?;
        let (a, b) = spec.level_range;
        sq.level = spec.quantize(if a < b { rng.random_range(a..=b) } else { a });
        squares.push(sq);
    }
    let mut image = Image::filled(spec.side, spec.background);
    for s in &squares {
        image.fill_rect(s.row, s.col, s.size, s.level);
    }
    Ok(Scene { image, squares })
}

/// Increasing scalar map applied per pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonotoneMap {
    /// `x + c`.
    Shift(f64),
    /// `a x + b`, `a > 0`.
    Affine { scale: f64, shift: f64 },
    /// `x + a x^3`, `a >= 0`.
    Cubic(f64),
}

impl MonotoneMap {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            MonotoneMap::Shift(c) => x + c,
            MonotoneMap::Affine { scale, shift } => scale * x + shift,
            MonotoneMap::Cubic(a) => x + a * x * x * x,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MonotoneMap::Affine { scale, .. } if !(scale > 0.0) => {
                Err(Error::Domain(format!("affine scale {scale} is not positive")))
            }
            MonotoneMap::Cubic(a) if !(a >= 0.0) => Err(Error::Domain(format!("cubic coefficient {a} is negative"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Random count of 1..=2-pixel squares with random levels.
    TinySquares { count: (usize, usize), level_range: (f64, f64) },
    Gaussian { sigma: f64 },
    /// Each pixel independently becomes 0 or 1 (equal odds) with probability `rate`.
    SaltPepper { rate: f64 },
    MonotoneMap(MonotoneMap),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::TinySquares { count, level_range } => {
                if count.0 > count.1 || level_range.0 > level_range.1 {
                    return Err(Error::Domain("tiny-squares ranges are reversed".into()));
                }
                if !level_range.0.is_finite() || !level_range.1.is_finite() {
                    return Err(Error::Domain("tiny-squares levels must be finite".into()));
                }
            }
            NoiseKind::Gaussian { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::Domain(format!("gaussian sigma {sigma} is not a finite nonnegative number")));
                }
            }
            NoiseKind::SaltPepper { rate } => {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(Error::Domain(format!("salt-pepper rate {rate} outside [0, 1]")));
                }
            }
            NoiseKind::MonotoneMap(m) => m.validate()?,
        }
        Ok(())
    }
}

/// Applies the noise model; output values are not clamped.
pub fn apply_noise(image: &Image, spec: &NoiseSpec) -> Result<Image> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = image.clone();
    let side = image.side();
    match spec.kind {
        NoiseKind::TinySquares { count, level_range } => {
            let n = rng.random_range(count.0..=count.1);
            for _ in 0..n {
                let size = rng.random_range(1..=2usize.min(side));
                let row = rng.random_range(0..=side - size);
                let col = rng.random_range(0..=side - size);
                let level = if level_range.0 < level_range.1 {
                    rng.random_range(level_range.0..=level_range.1)
                } else {
                    level_range.0
                };
                out.fill_rect(row, col, size, level);
            }
        }
        NoiseKind::Gaussian { sigma } => {
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
                for v in out.data.iter_mut() {
                    *v += normal.sample(&mut rng);
                }
            }
        }
        NoiseKind::SaltPepper { rate } => {
            for v in out.data.iter_mut() {
                if rng.random::<f64>() < rate {
                    *v = if rng.random::<bool>() { 1.0 } else { 0.0 };
                }
            }
        }
        NoiseKind::MonotoneMap(m) => {
            for v in out.data.iter_mut() {
                *v = m.apply(*v);
            }
        }
    }
    Ok(out)
}

/// How an image pair becomes a training pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// All pixels, row-major.
    Image,
    /// The row through the first square of the clean scene.
    Row,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPair {
    pub clean: Scene,
    pub noisy: Image,
    pub scene_seed: u64,
    pub noise_seed: u64,
}

impl GeneratedPair {
    pub fn to_training_pair(&self, layout: Layout) -> (CoefficientVector, CoefficientVector) {
        match layout {
            Layout::Image => (
                CoefficientVector::from_values(self.clean.image.data().to_vec()),
                CoefficientVector::from_values(self.noisy.data().to_vec()),
            ),
            Layout::Row => {
                let r = self.clean.probe_row();
                (
                    CoefficientVector::from_values(self.clean.image.row(r).to_vec()),
                    CoefficientVector::from_values(self.noisy.row(r).to_vec()),
                )
            }
        }
    }
}

/// `m` pairs; pair `i` uses scene seed `split_seed(scene.seed, i)` and noise
/// seed `split_seed(noise.seed, i)`.
pub fn gen_pairs(scene: &SceneSpec, noise: &NoiseSpec, m: usize) -> Result<Vec<GeneratedPair>> {
    if m == 0 {
        return Err(Error::Domain("at least one pair is required".into()));
    }
    scene.validate()?;
    noise.validate()?;
    (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let scene_seed = split_seed(scene.seed, i);
            let noise_seed = split_seed(noise.seed, i);
            let clean = gen_scene(&SceneSpec {
                seed: scene_seed,
                ..scene.clone()
            })?;
            let noisy = apply_noise(
                &clean.image,
                &NoiseSpec {
                    seed: noise_seed,
                    ..*noise
                },
            )?;
            Ok(GeneratedPair {
                clean,
                noisy,
                scene_seed,
                noise_seed,
            })
        })
        .collect()
}

/// Sample-domain training set of `m` generated pairs.
pub fn gen_training_set(scene: &SceneSpec, noise: &NoiseSpec, m: usize, layout: Layout) -> Result<TrainingSet> {
    let pairs = gen_pairs(scene, noise, m)?;
    TrainingSet::new(pairs.iter().map(|p| p.to_training_pair(layout)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn scene_is_deterministic_and_flat() {
        let spec = SceneSpec::medium_squares(64, 11);
        let a = gen_scene(&spec).unwrap();
        assert_eq!(a, gen_scene(&spec).unwrap());
        assert_eq!(a.squares.len(), 2);
        let levels: BTreeSet<u64> = a.image.data().iter().map(|v| v.to_bits()).collect();
        let mut expect: BTreeSet<u64> = a.squares.iter().map(|s| s.level.to_bits()).collect();
        expect.insert(spec.background.to_bits());
        assert_eq!(levels, expect);
    }

    #[test]
    fn no_squares_is_background() {
        let spec = SceneSpec {
            squares: 0,
            background: 0.25,
            ..SceneSpec::medium_squares(16, 0)
        };
        assert!(gen_scene(&spec).unwrap().image.data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn crowded_scene_fails() {
        let spec = SceneSpec {
            squares: 5,
            size_range: (8, 8),
            ..SceneSpec::medium_squares(16, 0)
        };
        assert!(gen_scene(&spec).is_err());
    }

    #[test]
    fn shift_map() {
        let img = gen_scene(&SceneSpec::medium_squares(16, 2)).unwrap().image;
        let out = apply_noise(
            &img,
            &NoiseSpec {
                kind: NoiseKind::MonotoneMap(MonotoneMap::Shift(0.1)),
                seed: 0,
            },
        )
        .unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_strength_is_identity() {
        let img = gen_scene(&SceneSpec::medium_squares(16, 2)).unwrap().image;
        for kind in [
            NoiseKind::Gaussian { sigma: 0.0 },
            NoiseKind::SaltPepper { rate: 0.0 },
            NoiseKind::TinySquares {
                count: (0, 0),
                level_range: (0.0, 1.0),
            },
            NoiseKind::MonotoneMap(MonotoneMap::Shift(0.0)),
        ] {
            assert_eq!(apply_noise(&img, &NoiseSpec { kind, seed: 5 }).unwrap(), img);
        }
    }

    #[test]
    fn seed_splitting_differs() {
        assert_ne!(split_seed(1, 0), split_seed(1, 1));
        assert_eq!(split_seed(1, 3), split_seed(1, 3));
    }
}
