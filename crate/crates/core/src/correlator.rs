//! Second-order intensity correlation between the test and reference arms.
//!
//! Both arms see the same speckle field `E(x)` on the window plane. The test
//! arm transmits through the object displaced by `offset`, the reference arm
//! through the filter, and each detector projects its masked field onto the
//! uniform mode of the window:
//!
//! ```text
//! A_t = Σ_x E(x) t_obj(x + offset)        A_r = Σ_x E(x) t_fil(x)
//! ```
//!
//! For circular Gaussian light `⟨I_t I_r⟩ = ⟨I_t⟩⟨I_r⟩ + |⟨A_t A_r*⟩|²`, and
//! `⟨A_t A_r*⟩ = Γ = Σ t_obj(x + offset) t_fil*(x)`, which gives
//! `g2 = 1 + |Γ|² / (M_t M_r)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::masks::{PhaseMask, Window};
use crate::speckle::{derive_seed, sample_region, RealizationKey, SpeckleField};

/// Integer displacement of the object relative to the window plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Offset {
    pub dx: i64,
    pub dy: i64,
}

impl Offset {
    pub const ZERO: Offset = Offset { dx: 0, dy: 0 };

    pub const fn new(dx: i64, dy: i64) -> Self {
        Self { dx, dy }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    MonteCarlo,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::MonteCarlo => "montecarlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub gamma: Complex64,
    /// Transmitting object pixels inside the window.
    pub test_count: usize,
    /// Transmitting filter pixels inside the window.
    pub reference_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub g2: f64,
    pub delta_g2: f64,
    pub stderr: f64,
    pub n_realizations: usize,
    pub mode: Mode,
}

/// Window pixels (in filter coordinates) paired with both arms' transmissions.
struct ArmPairs {
    coords: Vec<(i64, i64)>,
    test: Vec<Complex64>,
    reference: Vec<Complex64>,
    bbox: (i64, i64, usize, usize),
}

impl ArmPairs {
    fn new(object: &PhaseMask, filter: &PhaseMask, offset: Offset, window: &Window) -> Result<Self> {
        let set = window.pixels(filter.width(), filter.height())?;
        let mut coords = Vec::with_capacity(set.len());
        let mut test = Vec::with_capacity(set.len());
        let mut reference = Vec::with_capacity(set.len());
        for &(x, y) in &set.pixels {
            let (x, y) = (x as i64, y as i64);
            coords.push((x, y));
            test.push(object.transmission(x + offset.dx, y + offset.dy));
            reference.push(filter.transmission(x, y));
        }
        let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for &(x, y) in &coords {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let bbox = (x0, y0, (x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
        Ok(Self {
            coords,
            test,
            reference,
            bbox,
        })
    }

    /// `(I_t, I_r)` for one realization.
    fn intensities(&self, key: RealizationKey, coherence_px: f64) -> (f64, f64) {
        let mut at = Complex64::new(0.0, 0.0);
        let mut ar = Complex64::new(0.0, 0.0);
        if coherence_px <= 0.0 {
            for ((&(x, y), &tt), &tr) in self.coords.iter().zip(&self.test).zip(&self.reference) {
                let e = key.draw(x, y);
                at += e * tt;
                ar += e * tr;
            }
        } else {
            let (x0, y0, w, h) = self.bbox;
            let field = sample_region(key, coherence_px, x0, y0, w, h);
            for ((&(x, y), &tt), &tr) in self.coords.iter().zip(&self.test).zip(&self.reference) {
                let e = field[(y - y0) as usize * w + (x - x0) as usize];
                at += e * tt;
                ar += e * tr;
            }
        }
        (at.norm_sqr(), ar.norm_sqr())
    }
}

/// `Γ = Σ s_t s_r exp(i[φ_obj(x + offset) - φ_fil(x)])` over the window.
pub fn overlap(object: &PhaseMask, filter: &PhaseMask, offset: Offset, window: &Window) -> Result<Overlap> {
    let set = window.pixels(filter.width(), filter.height())?;
    let mut gamma = Complex64::new(0.0, 0.0);
    let mut test_count = 0;
    let mut reference_count = 0;
    for &(x, y) in &set.pixels {
        let (ox, oy) = (x as i64 + offset.dx, y as i64 + offset.dy);
        test_count += usize::from(object.transmits_at(ox, oy));
        reference_count += usize::from(filter.is_transmitting(x, y));
        gamma += object.transmission(ox, oy) * filter.transmission(x as i64, y as i64).conj();
    }
    Ok(Overlap {
        gamma,
        test_count,
        reference_count,
    })
}

pub fn analytic_g2(gamma: Complex64, test_count: usize, reference_count: usize) -> Result<CorrelationEstimate> {
    if test_count == 0 {
        return Err(Error::NoTransmission { arm: "test" });
    }
    if reference_count == 0 {
        return Err(Error::NoTransmission { arm: "reference" });
    }
    let delta_g2 = gamma.norm_sqr() / (test_count as f64 * reference_count as f64);
    Ok(CorrelationEstimate {
        g2: 1.0 + delta_g2,
        delta_g2,
        stderr: 0.0,
        n_realizations: 0,
        mode: Mode::Analytic,
    })
}

/// Single-mode detection of one arm: `|Σ_x E(x) t(x + offset)|²`.
pub fn mc_detect(field: &SpeckleField, mask: &PhaseMask, offset: Offset, window: &Window) -> Result<f64> {
    let set = window.pixels(field.width, field.height)?;
    let amplitude: Complex64 = set
        .pixels
        .iter()
        .map(|&(x, y)| field.at(x, y) * mask.transmission(x as i64 + offset.dx, y as i64 + offset.dy))
        .sum();
    Ok(amplitude.norm_sqr())
}

/// Per-realization intensity pairs for `k = 0..n`, in realization order.
pub fn mc_intensities(
    object: &PhaseMask,
    filter: &PhaseMask,
    offset: Offset,
    window: &Window,
    n: usize,
    seed: u64,
    coherence_px: f64,
) -> Result<Vec<(f64, f64)>> {
    let pairs = ArmPairs::new(object, filter, offset, window)?;
    Ok((0..n)
        .into_par_iter()
        .with_min_len(256)
        .map(|k| pairs.intensities(RealizationKey::new(seed, k as u64), coherence_px))
        .collect())
}

/// Ratio-of-means g2 with a delete-one jackknife standard error.
pub fn g2_from_intensities(samples: &[(f64, f64)]) -> Result<CorrelationEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewRealizations(n));
    }
    let (mut st, mut sr, mut str_) = (0.0, 0.0, 0.0);
    for &(t, r) in samples {
        st += t;
        sr += r;
        str_ += t * r;
    }
    if st <= 0.0 {
        return Err(Error::DegenerateIntensity { arm: "test" });
    }
    if sr <= 0.0 {
        return Err(Error::DegenerateIntensity { arm: "reference" });
    }
    let nf = n as f64;
    let g2 = (str_ / nf) / ((st / nf) * (sr / nf));

    let m = nf - 1.0;
    let leave_one_out = |&(t, r): &(f64, f64)| {
        let (lt, lr) = ((st - t) / m, (sr - r) / m);
        ((str_ - t * r) / m) / (lt * lr)
    };
    let mean = samples.iter().map(leave_one_out).sum::<f64>() / nf;
    let ss: f64 = samples
        .iter()
        .map(|s| {
            let d = leave_one_out(s) - mean;
            d * d
        })
        .sum();
    let stderr = (ss * m / nf).sqrt();
    let stderr = if stderr.is_finite() { stderr } else { f64::INFINITY };

    Ok(CorrelationEstimate {
        g2,
        delta_g2: g2 - 1.0,
        stderr,
        n_realizations: n,
        mode: Mode::MonteCarlo,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn mc_correlate(
    object: &PhaseMask,
    filter: &PhaseMask,
    offset: Offset,
    window: &Window,
    n: usize,
    seed: u64,
    coherence_px: f64,
) -> Result<CorrelationEstimate> {
    if n < 2 {
        return Err(Error::TooFewRealizations(n));
    }
    let samples = mc_intensities(object, filter, offset, window, n, seed, coherence_px)?;
    g2_from_intensities(&samples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub realizations: usize,
    pub seed: u64,
    pub coherence_px: f64,
}

/// How each correlation value is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Analytic,
    MonteCarlo(MonteCarlo),
}

impl Estimator {
    pub fn mode(&self) -> Mode {
        match self {
            Estimator::Analytic => Mode::Analytic,
            Estimator::MonteCarlo(_) => Mode::MonteCarlo,
        }
    }

    /// Correlation at one placement. Monte Carlo draws from an independent
    /// realization block keyed by `stream`.
    pub fn estimate(
        &self,
        object: &PhaseMask,
        filter: &PhaseMask,
        offset: Offset,
        window: &Window,
        stream: u64,
    ) -> Result<CorrelationEstimate> {
        match self {
            Estimator::Analytic => {
                let o = overlap(object, filter, offset, window)?;
                analytic_g2(o.gamma, o.test_count, o.reference_count)
            }
            Estimator::MonteCarlo(mc) => {
                let o = overlap(object, filter, offset, window)?;
                analytic_g2(o.gamma, o.test_count, o.reference_count)?;
                mc_correlate(
                    object,
                    filter,
                    offset,
                    window,
                    mc.realizations,
                    derive_seed(mc.seed, stream),
                    mc.coherence_px,
                )
            }
        }
    }
}
