//! Seeded synthetic data: planted low-rank + sparse matrices, occluded
//! "face" image sets with known clean images, and recognition galleries.
//!
//! A subject's clean images are `base + a_j1 * G1 + a_j2 * G2`, where `base`
//! is a smooth sum of three separable outer products and `G1`, `G2` are
//! smooth illumination patterns, so the clean stack has rank at most 3.
//! Occlusions are added per image and clamped to `[0, 1]`; the recorded mask
//! is the effective change `occluded - clean`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{self, GrayImage};
use crate::linalg::Matrix;
use crate::recognition::{self, Gallery};

/// A synthetic `M = L0 + S0` with known parts.
#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub observed: Matrix,
    pub low_rank: Matrix,
    pub sparse: Matrix,
}

/// `L0 = A * B` with standard normal `A` (`rows x rank`) and `B` (`rank x cols`);
/// `S0` has `round(sparse_fraction * rows * cols)` entries of +-1 at distinct
/// random positions.
pub fn planted_instance(rows: usize, cols: usize, rank: usize, sparse_fraction: f64, seed: u64) -> PlantedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::<f64>::from_fn(rows, rank, |_, _| rng.sample(StandardNormal));
    let b = DMatrix::<f64>::from_fn(rank, cols, |_, _| rng.sample(StandardNormal));
    let low = &a * &b;

    let total = rows * cols;
    let count = ((sparse_fraction * total as f64).round() as usize).min(total);
    let positions = rand::seq::index::sample(&mut rng, total, count);
    let mut sparse = DMatrix::<f64>::zeros(rows, cols);
    for idx in positions.iter() {
        sparse[(idx % rows, idx / rows)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    PlantedInstance {
        observed: Matrix::from_dmatrix_unchecked(&low + &sparse),
        low_rank: Matrix::from_dmatrix_unchecked(low),
        sparse: Matrix::from_dmatrix_unchecked(sparse),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionKind {
    ShadowLeft,
    ShadowRight,
    /// Frontal light: shadow rising from the lower edge (chin and neck).
    ShadowFront,
    ShadowTop,
    Glasses,
    Expression,
}

impl OcclusionKind {
    pub const ALL: [OcclusionKind; 6] = [
        OcclusionKind::ShadowLeft,
        OcclusionKind::ShadowRight,
        OcclusionKind::ShadowFront,
        OcclusionKind::ShadowTop,
        OcclusionKind::Glasses,
        OcclusionKind::Expression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OcclusionKind::ShadowLeft => "shadow_left",
            OcclusionKind::ShadowRight => "shadow_right",
            OcclusionKind::ShadowFront => "shadow_front",
            OcclusionKind::ShadowTop => "shadow_top",
            OcclusionKind::Glasses => "glasses",
            OcclusionKind::Expression => "expression",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u64
    }
}

impl fmt::Display for OcclusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OcclusionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown occlusion kind '{s}'")))
    }
}

/// Parameters of a synthetic benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub subjects: usize,
    pub images_per_subject: usize,
    pub width: usize,
    pub height: usize,
    pub kinds: Vec<OcclusionKind>,
    pub seed: u64,
    /// Rank of each subject's clean stack, 1 to 3.
    pub rank: usize,
    /// Multiplies every occlusion; 0 yields clean inputs.
    pub severity: f64,
}

impl Default for SynthSpec {
    /// 6 subjects x 11 images of 64x64 under every occlusion kind.
    fn default() -> Self {
        SynthSpec {
            subjects: 6,
            images_per_subject: 11,
            width: 64,
            height: 64,
            kinds: OcclusionKind::ALL.to_vec(),
            seed: 0,
            rank: 3,
            severity: 1.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 {
            return Err(Error::invalid("need at least one subject"));
        }
        if self.images_per_subject < 2 {
            return Err(Error::invalid("need at least two images per subject"));
        }
        if self.width < 11 || self.height < 11 {
            return Err(Error::invalid(format!(
                "images must be at least 11x11 for SSIM, got {}x{}",
                self.width, self.height
            )));
        }
        if self.kinds.is_empty() {
            return Err(Error::invalid("no occlusion kinds selected"));
        }
        if !(1..=3).contains(&self.rank) {
            return Err(Error::invalid(format!("clean rank must be 1..=3, got {}", self.rank)));
        }
        if !(0.0..=1.0).contains(&self.severity) {
            return Err(Error::invalid(format!(
                "severity must lie in [0, 1], got {}",
                self.severity
            )));
        }
        Ok(())
    }
}

/// One subject under one occlusion kind.
#[derive(Clone, Debug)]
pub struct SyntheticCase {
    pub case_id: String,
    pub subject: String,
    pub kind: OcclusionKind,
    pub clean_images: Vec<GrayImage>,
    pub occluded_images: Vec<GrayImage>,
    /// `occluded - clean`, row-major per image.
    pub occlusion_masks: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SyntheticCase {
    /// Fraction of non-zero mask entries over the whole case.
    pub fn mask_density(&self) -> f64 {
        let total: usize = self.occlusion_masks.iter().map(Vec::len).sum();
        let nonzero = self.occlusion_masks.iter().flatten().filter(|v| **v != 0.0).count();
        nonzero as f64 / total as f64
    }

    pub fn to_case_data(&self, dataset: &str) -> CaseData {
        CaseData {
            dataset: dataset.to_string(),
            case_id: self.case_id.clone(),
            subject: self.subject.clone(),
            inputs: self.occluded_images.clone(),
            references: Some(self.clean_images.clone()),
        }
    }
}

/// Mixes a base seed with small integers into an independent stream seed.
fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut x = base ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        x = x
            .wrapping_add(p.wrapping_mul(0xBF58_476D_1CE4_E5B9))
            .wrapping_add(0x94D0_49BB_1331_11EB);
        x ^= x >> 30;
        x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x ^= x >> 27;
        x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}

/// Smooth positive 1-D profile: a few Gaussian bumps over a floor, peak 1.
fn bump_profile(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.15..0.85),
                rng.random_range(0.08..0.3),
                rng.random_range(0.3..1.0),
            )
        })
        .collect();
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            0.2 + bumps
                .iter()
                .map(|(c, s, a)| a * (-(t - c) * (t - c) / (2.0 * s * s)).exp())
                .sum::<f64>()
        })
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    raw.into_iter().map(|v| v / max).collect()
}

/// Smooth signed 1-D profile in `[-1, 1]`.
fn wave_profile(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let freq = rng.random_range(0.5..1.5);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            (std::f64::consts::PI * freq * t + phase).cos() + 0.5 * (2.0 * t - 1.0)
        })
        .collect();
    let max = raw.iter().map(|v| v.abs()).fold(0.0, f64::max);
    raw.into_iter().map(|v| v / max).collect()
}

fn outer(col: &[f64], row: &[f64]) -> Vec<f64> {
    col.iter().flat_map(|c| row.iter().map(move |r| c * r)).collect()
}

fn rescale(values: &mut [f64], lo: f64, hi: f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(f64::MIN_POSITIVE);
    for v in values {
        *v = lo + (hi - lo) * (*v - min) / span;
    }
}

/// A subject's base face plus its illumination patterns.
struct SubjectModel {
    base: Vec<f64>,
    variations: Vec<Vec<f64>>,
}

const BASE_RANGE: (f64, f64) = (0.3, 0.7);
const VARIATION_AMPLITUDE: f64 = 0.1;

fn subject_model(seed: u64, subject: usize, w: usize, h: usize, base_terms: usize) -> SubjectModel {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1, subject as u64]));
    let mut base = vec![0.0; w * h];
    let mut amplitude = 1.0;
    for _ in 0..base_terms {
        let term = outer(&bump_profile(&mut rng, h), &bump_profile(&mut rng, w));
        for (b, t) in base.iter_mut().zip(term) {
            *b += amplitude * t;
        }
        amplitude *= rng.random_range(0.4..0.7);
    }
    rescale(&mut base, BASE_RANGE.0, BASE_RANGE.1);

    let variations = vec![
        outer(&bump_profile(&mut rng, h), &wave_profile(&mut rng, w)),
        outer(&wave_profile(&mut rng, h), &bump_profile(&mut rng, w)),
    ];
    SubjectModel { base, variations }
}

fn clean_images(
    model: &SubjectModel,
    rank: usize,
    count: usize,
    w: usize,
    h: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<GrayImage>> {
    (0..count)
        .map(|_| {
            let mut px = model.base.clone();
            for g in model.variations.iter().take(rank - 1) {
                let a = rng.random_range(-VARIATION_AMPLITUDE..VARIATION_AMPLITUDE);
                for (p, v) in px.iter_mut().zip(g) {
                    *p += a * v;
                }
            }
            GrayImage::new(w, h, px)
        })
        .collect()
}

/// Additive occlusion of one kind for a `w x h` image, before clamping.
fn occlusion_delta(kind: OcclusionKind, clean: &[f64], w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut delta = vec![0.0; w * h];
    match kind {
        OcclusionKind::ShadowLeft
        | OcclusionKind::ShadowRight
        | OcclusionKind::ShadowFront
        | OcclusionKind::ShadowTop => {
            let coverage = rng.random_range(0.2..0.35);
            let depth = rng.random_range(0.3..0.6);
            for y in 0..h {
                for x in 0..w {
                    // Distance from the lit edge, normalized to [0, 1].
                    let t = match kind {
                        OcclusionKind::ShadowLeft => (x as f64 + 0.5) / w as f64,
                        OcclusionKind::ShadowRight => 1.0 - (x as f64 + 0.5) / w as f64,
                        OcclusionKind::ShadowTop => (y as f64 + 0.5) / h as f64,
                        _ => 1.0 - (y as f64 + 0.5) / h as f64,
                    };
                    if t < coverage {
                        let ramp = 1.0 - t / coverage;
                        delta[y * w + x] = -depth * ramp.sqrt();
                    }
                }
            }
        }
        OcclusionKind::Glasses => {
            let eye_y = rng.random_range(0.3..0.4);
            let half_h = 0.06;
            let lens = rng.random_range(0.02..0.1);
            for (x0, x1) in [(0.16, 0.42), (0.58, 0.84)] {
                for y in 0..h {
                    let ty = (y as f64 + 0.5) / h as f64;
                    if (ty - eye_y).abs() > half_h {
                        continue;
                    }
                    for x in 0..w {
                        let tx = (x as f64 + 0.5) / w as f64;
                        if tx >= x0 && tx <= x1 {
                            delta[y * w + x] = lens - clean[y * w + x];
                        }
                    }
                }
            }
        }
        OcclusionKind::Expression => {
            let cy = rng.random_range(0.68..0.76);
            let cx = rng.random_range(0.45..0.55);
            let (rx, ry) = (0.16, 0.07);
            let amp = if rng.random_bool(0.5) { 0.4 } else { -0.4 };
            for y in 0..h {
                let dy = ((y as f64 + 0.5) / h as f64 - cy) / ry;
                for x in 0..w {
                    let dx = ((x as f64 + 0.5) / w as f64 - cx) / rx;
                    if dx * dx + dy * dy <= 1.0 {
                        delta[y * w + x] = amp;
                    }
                }
            }
        }
    }
    delta
}

/// Applies `delta` with clamping; returns the occluded pixels and effective mask.
fn apply_occlusion(clean: &[f64], delta: &[f64], severity: f64) -> (Vec<f64>, Vec<f64>) {
    let occluded: Vec<f64> = clean
        .iter()
        .zip(delta)
        .map(|(c, d)| (c + severity * d).clamp(0.0, 1.0))
        .collect();
    let mask = occluded.iter().zip(clean).map(|(o, c)| o - c).collect();
    (occluded, mask)
}

/// Indices `1..count` that receive an occlusion: half the images, never the first.
fn occluded_indices(count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = count.div_ceil(2).min(count - 1);
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, count - 1, k)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    picked.sort_unstable();
    picked
}

pub fn subject_id(subject: usize) -> String {
    format!("s{}", subject + 1)
}

/// One case: subject `subject` (0-based) under `kind`.
pub fn synth_case(spec: &SynthSpec, subject: usize, kind: OcclusionKind) -> Result<SyntheticCase> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let model = subject_model(spec.seed, subject, w, h, 3);
    let case_seed = derive_seed(spec.seed, &[2, subject as u64, kind.index()]);
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    let clean = clean_images(&model, spec.rank, spec.images_per_subject, w, h, &mut rng)?;
    let targets = occluded_indices(spec.images_per_subject, &mut rng);

    let mut occluded = Vec::with_capacity(clean.len());
    let mut masks = Vec::with_capacity(clean.len());
    for (j, img) in clean.iter().enumerate() {
        if targets.contains(&j) && spec.severity > 0.0 {
            let delta = occlusion_delta(kind, img.pixels(), w, h, &mut rng);
            let (px, mask) = apply_occlusion(img.pixels(), &delta, spec.severity);
            occluded.push(GrayImage::new(w, h, px)?);
            masks.push(mask);
        } else {
            occluded.push(img.clone());
            masks.push(vec![0.0; w * h]);
        }
    }
    let subject_name = subject_id(subject);
    Ok(SyntheticCase {
        case_id: format!("{subject_name}_{kind}"),
        subject: subject_name,
        kind,
        clean_images: clean,
        occluded_images: occluded,
        occlusion_masks: masks,
        seed: case_seed,
    })
}

/// Every (subject, kind) case, subject-major.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Vec<SyntheticCase>> {
    spec.validate()?;
    let mut cases = Vec::with_capacity(spec.subjects * spec.kinds.len());
    for subject in 0..spec.subjects {
        for &kind in &spec.kinds {
            cases.push(synth_case(spec, subject, kind)?);
        }
    }
    Ok(cases)
}

/// The images a sweep runs on, with optional ground truth.
#[derive(Clone, Debug)]
pub struct CaseData {
    pub dataset: String,
    pub case_id: String,
    pub subject: String,
    pub inputs: Vec<GrayImage>,
    /// Occlusion-free images in input order, when known.
    pub references: Option<Vec<GrayImage>>,
}

pub const MANIFEST_FILE: &str = "dataset.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub spec: Option<SynthSpec>,
    pub cases: Vec<ManifestCase>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestCase {
    pub case: String,
    pub subject: String,
    pub kind: Option<OcclusionKind>,
    pub images: usize,
    pub seed: Option<u64>,
}

fn image_name(prefix: &str, j: usize) -> String {
    format!("{prefix}_{j:02}.pgm")
}

/// Writes `dataset.json` and one directory per case holding
/// `clean_NN.pgm`, `occluded_NN.pgm` and `mask_NN.pgm` (display-mapped).
pub fn write_dataset(dir: &Path, name: &str, spec: &SynthSpec, cases: &[SyntheticCase]) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(cases.len());
    for case in cases {
        let case_dir = dir.join(&case.case_id);
        fs::create_dir_all(&case_dir).map_err(|e| Error::io(&case_dir, e))?;
        for j in 0..case.clean_images.len() {
            imaging::save_image(&case.clean_images[j], case_dir.join(image_name("clean", j)))?;
            imaging::save_image(&case.occluded_images[j], case_dir.join(image_name("occluded", j)))?;
            let shown = recognition::sparse_display_transform(&case.occlusion_masks[j]);
            let mask = GrayImage::new(spec.width, spec.height, shown)?;
            imaging::save_image(&mask, case_dir.join(image_name("mask", j)))?;
        }
        entries.push(ManifestCase {
            case: case.case_id.clone(),
            subject: case.subject.clone(),
            kind: Some(case.kind),
            images: case.clean_images.len(),
            seed: Some(case.seed),
        });
    }
    let manifest = DatasetManifest {
        name: name.to_string(),
        spec: Some(spec.clone()),
        cases: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Loads a dataset directory.
///
/// With a `dataset.json` manifest, each case reads `occluded_NN` as inputs and
/// `clean_NN` as references. Without one, every subdirectory is a case whose
/// image files (sorted by name) are inputs with no references.
pub fn load_dataset(dir: &Path) -> Result<Vec<CaseData>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::MalformedData {
            path: manifest_path.clone(),
            reason: e.to_string(),
        })?;
        return manifest
            .cases
            .iter()
            .map(|c| {
                let case_dir = dir.join(&c.case);
                let load = |prefix: &str| -> Result<Vec<GrayImage>> {
                    (0..c.images)
                        .map(|j| imaging::load_image(case_dir.join(image_name(prefix, j))))
                        .collect()
                };
                let inputs = load("occluded")?;
                let references = if case_dir.join(image_name("clean", 0)).exists() {
                    Some(load("clean")?)
                } else {
                    None
                };
                Ok(CaseData {
                    dataset: manifest.name.clone(),
                    case_id: c.case.clone(),
                    subject: c.subject.clone(),
                    inputs,
                    references,
                })
            })
            .collect();
    }

    let dataset = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let mut case_dirs: Vec<PathBuf> = read_dir_sorted(dir)?.into_iter().filter(|p| p.is_dir()).collect();
    case_dirs.sort();
    let mut cases = Vec::new();
    for case_dir in case_dirs {
        let files = image_files(&case_dir)?;
        if files.is_empty() {
            continue;
        }
        let inputs = files.iter().map(imaging::load_image).collect::<Result<Vec<_>>>()?;
        let name = case_dir.file_name().unwrap().to_string_lossy().into_owned();
        cases.push(CaseData {
            dataset: dataset.clone(),
            case_id: name.clone(),
            subject: name,
            inputs,
            references: None,
        });
    }
    if cases.is_empty() {
        return Err(Error::MalformedData {
            path: dir.to_path_buf(),
            reason: "no cases found".into(),
        });
    }
    Ok(cases)
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}

/// `.pgm` and `.png` files directly inside `dir`, sorted by name.
pub fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(read_dir_sorted(dir)?
        .into_iter()
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
        })
        .collect())
}

/// Candidate galleries and a test image of known identity.
#[derive(Clone, Debug)]
pub struct RecognitionInstance {
    pub galleries: Vec<Gallery>,
    pub test: GrayImage,
    pub true_subject: String,
}

/// Each subject is a distinct rank-1 face; gallery images carry random
/// occlusions except the first, which is clean. The test image is subject
/// `true_subject` (0-based) with a fresh occlusion.
pub fn recognition_instance(
    subjects: usize,
    images_per_subject: usize,
    width: usize,
    height: usize,
    true_subject: usize,
    seed: u64,
) -> Result<RecognitionInstance> {
    if subjects == 0 || true_subject >= subjects {
        return Err(Error::invalid(format!(
            "true subject {true_subject} out of range for {subjects} subjects"
        )));
    }
    if images_per_subject == 0 {
        return Err(Error::invalid("galleries need at least one image"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3]));
    let bases: Vec<Vec<f64>> = (0..subjects)
        .map(|s| subject_model(derive_seed(seed, &[4]), s, width, height, 1).base)
        .collect();

    let occlude = |base: &[f64], rng: &mut ChaCha8Rng| -> Result<GrayImage> {
        let kind = OcclusionKind::ALL[rng.random_range(0..OcclusionKind::ALL.len())];
        let delta = occlusion_delta(kind, base, width, height, rng);
        GrayImage::new(width, height, apply_occlusion(base, &delta, 1.0).0)
    };

    let mut galleries = Vec::with_capacity(subjects);
    for (s, base) in bases.iter().enumerate() {
        let mut images = vec![GrayImage::new(width, height, base.clone())?];
        for _ in 1..images_per_subject {
            images.push(occlude(base, &mut rng)?);
        }
        galleries.push(Gallery {
            subject: subject_id(s),
            images,
        });
    }
    let test = occlude(&bases[true_subject], &mut rng)?;
    Ok(RecognitionInstance {
        galleries,
        test,
        true_subject: subject_id(true_subject),
    })
}
