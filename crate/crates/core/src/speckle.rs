//! Pseudothermal speckle: circular complex Gaussian fields with unit mean intensity.
//!
//! Draws are counter-based. The amplitude at pixel `(x, y)` of realization `k`
//! is a pure function of `(seed, k, x, y)`:
//!
//! ```text
//! key  = mix(mix(seed ^ K0) ^ k·K1)
//! h    = mix(mix(key ^ x·K2) ^ y·K3)
//! a, b = mix(h + G), mix(h + 2G)                 (SplitMix64 output steps)
//! u1   = (a >> 11 + 1) / 2^53   in (0, 1]
//! u2   = (b >> 11) / 2^53       in [0, 1)
//! E    = sqrt(-ln u1) · exp(2πi·u2)
//! ```
//!
//! `mix` is the SplitMix64 finalizer. Changing any constant here changes every
//! stored experiment, so they are frozen.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

const K0: u64 = 0x243F_6A88_85A3_08D3;
const K1: u64 = 0x9E37_79B9_7F4A_7C15;
const K2: u64 = 0xC2B2_AE3D_27D4_EB4F;
const K3: u64 = 0x1656_67B1_9E37_79F9;
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM: u64 = 0xD1B5_4A32_D192_ED03;

/// Truncation of the coherence kernel, in standard deviations.
const KERNEL_SIGMAS: f64 = 4.0;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for sub-experiment `stream` (one scan offset, one rim sample).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed ^ STREAM) ^ stream.wrapping_mul(K1))
}

/// Per-realization key; hoisted so drawing a pixel costs two more mixes.
#[derive(Debug, Clone, Copy)]
pub struct RealizationKey(u64);

impl RealizationKey {
    pub fn new(seed: u64, realization: u64) -> Self {
        Self(mix64(mix64(seed ^ K0) ^ realization.wrapping_mul(K1)))
    }

    /// Delta-correlated circular Gaussian amplitude at lattice site `(x, y)`.
    #[inline]
    pub fn draw(self, x: i64, y: i64) -> Complex64 {
        let h = mix64(mix64(self.0 ^ (x as u64).wrapping_mul(K2)) ^ (y as u64).wrapping_mul(K3));
        let a = mix64(h.wrapping_add(GAMMA));
        let b = mix64(h.wrapping_add(GAMMA.wrapping_mul(2)));
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        Complex64::new(r * c, r * s)
    }
}

/// 1-D Gaussian amplitude kernel with unit squared norm.
fn coherence_kernel(coherence_px: f64) -> Vec<f64> {
    let radius = (KERNEL_SIGMAS * coherence_px).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * coherence_px * coherence_px)).exp())
        .collect();
    let norm = raw.iter().map(|w| w * w).sum::<f64>().sqrt();
    raw.into_iter().map(|w| w / norm).collect()
}

/// Samples the field on the lattice rectangle `[x0, x0+w) x [y0, y0+h)`.
///
/// The underlying i.i.d. lattice is unbounded, so any sub-rectangle is
/// bit-identical to the corresponding crop of a larger request.
pub fn sample_region(
    key: RealizationKey,
    coherence_px: f64,
    x0: i64,
    y0: i64,
    w: usize,
    h: usize,
) -> Vec<Complex64> {
    if coherence_px <= 0.0 {
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                out.push(key.draw(x0 + x, y0 + y));
            }
        }
        return out;
    }
    let kernel = coherence_kernel(coherence_px);
    let r = (kernel.len() / 2) as i64;
    let hh = h + 2 * r as usize;
    // horizontal pass over the padded rows
    let mut rows = Vec::with_capacity(w * hh);
    for y in 0..hh as i64 {
        let yy = y0 - r + y;
        for x in 0..w as i64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &k) in kernel.iter().enumerate() {
                acc += key.draw(x0 + x - r + j as i64, yy) * k;
            }
            rows.push(acc);
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &k) in kernel.iter().enumerate() {
                acc += rows[(y + j) * w + x] * k;
            }
            out.push(acc);
        }
    }
    out
}

/// One pseudothermal realization over a `width x height` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Complex64>,
    pub seed: u64,
    pub realization: u64,
    pub coherence_px: f64,
}

impl SpeckleField {
    pub fn at(&self, x: usize, y: usize) -> Complex64 {
        self.values[y * self.width + x]
    }
}

pub fn sample_field(
    width: usize,
    height: usize,
    seed: u64,
    realization: u64,
    coherence_px: f64,
) -> Result<SpeckleField> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    let key = RealizationKey::new(seed, realization);
    Ok(SpeckleField {
        width,
        height,
        values: sample_region(key, coherence_px, 0, 0, width, height),
        seed,
        realization,
        coherence_px,
    })
}

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub stderr: f64,
}

impl Moment {
    /// Deviation from `expected` in units of the standard error.
    pub fn z_score(&self, expected: f64) -> f64 {
        (self.value - expected) / self.stderr
    }
}

/// Sample moments of a set of complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMoments {
    pub n: usize,
    /// `⟨|E|²⟩`, expected 1.
    pub mean_intensity: Moment,
    /// `Re ⟨E²⟩`, expected 0.
    pub pseudo_variance_re: Moment,
    /// `Im ⟨E²⟩`, expected 0.
    pub pseudo_variance_im: Moment,
    /// `⟨|E|⁴⟩`, expected 2.
    pub fourth_moment: Moment,
    /// std/mean of `|E|²`, expected 1.
    pub contrast: Moment,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: f64) -> Moment {
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Moment {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

impl SampleMoments {
    pub fn from_samples(samples: &[Complex64]) -> Self {
        let n = samples.len() as f64;
        let intensity = samples.iter().map(Complex64::norm_sqr);
        let mean_intensity = mean_and_se(intensity.clone(), n);
        let pseudo_variance_re = mean_and_se(samples.iter().map(|e| (e * e).re), n);
        let pseudo_variance_im = mean_and_se(samples.iter().map(|e| (e * e).im), n);
        let fourth_moment = mean_and_se(intensity.clone().map(|i| i * i), n);

        // delta method for C = sqrt(m2/m1² - 1) on the intensity moments
        let m1 = mean_intensity.value;
        let m2 = fourth_moment.value;
        let contrast = (m2 / (m1 * m1) - 1.0).max(0.0).sqrt();
        let (mut v11, mut v12, mut v22) = (0.0, 0.0, 0.0);
        for i in intensity {
            let d1 = i - m1;
            let d2 = i * i - m2;
            v11 += d1 * d1;
            v12 += d1 * d2;
            v22 += d2 * d2;
        }
        let (v11, v12, v22) = (v11 / (n - 1.0), v12 / (n - 1.0), v22 / (n - 1.0));
        let g1 = -m2 / (m1 * m1 * m1 * contrast);
        let g2 = 1.0 / (2.0 * m1 * m1 * contrast);
        let var = (g1 * g1 * v11 + 2.0 * g1 * g2 * v12 + g2 * g2 * v22) / n;

        Self {
            n: samples.len(),
            mean_intensity,
            pseudo_variance_re,
            pseudo_variance_im,
            fourth_moment,
            contrast: Moment {
                value: contrast,
                stderr: var.max(0.0).sqrt(),
            },
        }
    }
}

/// Collects one amplitude per realization `k = 0..n` at the centre pixel of a
/// `width x height` field, so samples are i.i.d. even at finite coherence.
pub fn collect_center_samples(
    width: usize,
    height: usize,
    n: usize,
    seed: u64,
    coherence_px: f64,
) -> Result<Vec<Complex64>> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    let (cx, cy) = ((width / 2) as i64, (height / 2) as i64);
    Ok((0..n as u64)
        .into_par_iter()
        .map(|k| sample_region(RealizationKey::new(seed, k), coherence_px, cx, cy, 1, 1)[0])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_realization_is_bit_identical() {
        let a = sample_field(32, 24, 7, 3, 0.0).unwrap();
        let b = sample_field(32, 24, 7, 3, 0.0).unwrap();
        assert_eq!(a, b);
        let c = sample_field(32, 24, 7, 3, 1.5).unwrap();
        assert_eq!(c, sample_field(32, 24, 7, 3, 1.5).unwrap());
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(matches!(sample_field(0, 3, 0, 0, 0.0), Err(Error::InvalidDimensions { .. })));
    }

    #[test]
    fn distinct_realizations_are_uncorrelated() {
        let n = 128;
        let a = sample_field(n, n, 11, 0, 0.0).unwrap();
        let b = sample_field(n, n, 11, 1, 0.0).unwrap();
        let ia: Vec<f64> = a.values.iter().map(|e| e.norm_sqr()).collect();
        let ib: Vec<f64> = b.values.iter().map(|e| e.norm_sqr()).collect();
        let m = (n * n) as f64;
        let (ma, mb) = (ia.iter().sum::<f64>() / m, ib.iter().sum::<f64>() / m);
        let cov: f64 = ia.iter().zip(&ib).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / m;
        let va: f64 = ia.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / m;
        let vb: f64 = ib.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / m;
        let rho = cov / (va * vb).sqrt();
        assert!(rho.abs() < 5.0 / m.sqrt(), "rho = {rho}");
    }

    #[test]
    fn region_matches_crop_of_full_field() {
        for coherence in [0.0, 2.0] {
            let full = sample_field(40, 30, 5, 9, coherence).unwrap();
            let region = sample_region(RealizationKey::new(5, 9), coherence, 12, 7, 10, 6);
            for y in 0..6 {
                for x in 0..10 {
                    assert_eq!(region[y * 10 + x], full.at(12 + x, 7 + y));
                }
            }
        }
    }

    #[test]
    fn kernel_has_unit_energy() {
        for s in [0.5, 1.0, 3.7] {
            let k = coherence_kernel(s);
            assert!((k.iter().map(|w| w * w).sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(k.len() % 2, 1);
        }
    }

    #[test]
    fn coherent_field_is_spatially_correlated() {
        let f = sample_field(96, 96, 2, 0, 3.0).unwrap();
        let n = f.values.len() as f64;
        let mean_i = f.values.iter().map(|e| e.norm_sqr()).sum::<f64>() / n;
        // neighbours share most of their kernel
        let mut nn = Complex64::new(0.0, 0.0);
        for y in 0..96 {
            for x in 0..95 {
                nn += f.at(x, y) * f.at(x + 1, y).conj();
            }
        }
        let rho = nn.norm() / (96.0 * 95.0) / mean_i;
        assert!(rho > 0.8, "neighbour correlation {rho}");
    }

    #[test]
    fn coherent_samples_keep_unit_intensity() {
        let s = collect_center_samples(16, 16, 20_000, 4, 1.2).unwrap();
        let m = SampleMoments::from_samples(&s);
        assert!(m.mean_intensity.z_score(1.0).abs() < 5.0, "{:?}", m.mean_intensity);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|s| derive_seed(42, s)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(0, 0), derive_seed(1, 0));
    }
}
