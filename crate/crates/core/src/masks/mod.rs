//! Phase masks for the two arms: object holograms and reference filters.
//!
//! Every generator samples its phase function at pixel centres, so oriented
//! steps at non-axial angles come out as staircases. Phases are stored wrapped
//! to `[0, 2π)`; the binary generators emit exactly `0.0` or `PI`.

mod pbm;
mod window;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use pbm::{parse_pbm, read_pbm};
pub use window::{PixelSet, Point, Window, WindowShape};

/// Parseval and leakage tolerance for spectra computed on windows of radius >= 32 px.
pub const DISCRETE_TOLERANCE: f64 = 0.02;

/// Wraps a phase into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs, and keeps -0.0
    if r >= TAU || r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    width: usize,
    height: usize,
    phase: Vec<f64>,
    support: Vec<bool>,
    label: String,
}

impl PhaseMask {
    /// Builds a fully transmitting mask from a phase function of pixel coordinates.
    pub fn from_fn(
        width: usize,
        height: usize,
        label: impl Into<String>,
        mut phase: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(wrap_phase(phase(x, y)));
            }
        }
        Ok(Self {
            width,
            height,
            phase: values,
            support: vec![true; width * height],
            label: label.into(),
        })
    }

    /// Replaces the transmission support. Pixels where `support` is false are opaque.
    pub fn with_support(mut self, mut support: impl FnMut(usize, usize) -> bool) -> Self {
        for y in 0..self.height {
            for x in 0..self.width {
                self.support[y * self.width + x] = support(x, y);
            }
        }
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn phases(&self) -> &[f64] {
        &self.phase
    }

    pub fn phase(&self, x: usize, y: usize) -> f64 {
        self.phase[y * self.width + x]
    }

    pub fn is_transmitting(&self, x: usize, y: usize) -> bool {
        self.support[y * self.width + x]
    }

    /// Complex transmission at signed coordinates; zero outside the grid or the support.
    pub fn transmission(&self, x: i64, y: i64) -> Complex64 {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return Complex64::new(0.0, 0.0);
        }
        let i = y as usize * self.width + x as usize;
        if self.support[i] {
            Complex64::from_polar(1.0, self.phase[i])
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Whether the pixel at signed coordinates exists and transmits.
    pub fn transmits_at(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.support[y as usize * self.width + x as usize]
    }

    /// The same mask with a constant added to every phase.
    pub fn with_global_phase(&self, delta: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.phase {
            *p = wrap_phase(*p + delta);
        }
        out
    }
}

pub fn make_uniform(n: usize, phase: f64) -> Result<PhaseMask> {
    PhaseMask::from_fn(n, n, format!("uniform({phase})"), |_, _| phase)
}

/// Spiral phase plate `l·atan2(y - cy, x - cx)` carrying OAM charge `l`.
pub fn make_spiral(n: usize, l: i32, center: Point) -> Result<PhaseMask> {
    PhaseMask::from_fn(n, n, format!("spiral(l={l})"), |x, y| {
        if l == 0 {
            return 0.0;
        }
        f64::from(l) * (y as f64 - center.y).atan2(x as f64 - center.x)
    })
}

/// Which side of an oriented line through `center` a pixel centre falls on.
/// Points on the line count as the zero-phase side.
fn step_phase(x: f64, y: f64, orientation: f64, center: Point) -> f64 {
    let (s, c) = orientation.sin_cos();
    let side = -(x - center.x) * s + (y - center.y) * c;
    if side >= 0.0 {
        0.0
    } else {
        PI
    }
}

/// Binary π-step whose edge runs through `center` along direction `orientation`.
pub fn make_step(n: usize, orientation: f64, center: Point) -> Result<PhaseMask> {
    PhaseMask::from_fn(n, n, format!("step({orientation})"), |x, y| {
        step_phase(x as f64, y as f64, orientation, center)
    })
}

/// Disk phase object: `π` inside, `0` outside.
pub fn make_disk(n: usize, radius: f64, center: Point) -> Result<PhaseMask> {
    let max = n as f64 / 2.0;
    if !(radius > 0.0 && radius <= max) {
        return Err(Error::RadiusOutOfRange { radius, max });
    }
    PhaseMask::from_fn(n, n, format!("disk(r={radius})"), |x, y| {
        let dx = x as f64 - center.x;
        let dy = y as f64 - center.y;
        if dx * dx + dy * dy <= radius * radius {
            PI
        } else {
            0.0
        }
    })
}

/// Binary raster to phase object: nonzero cells carry phase `π`.
pub fn from_bitmap(rows: &[Vec<u8>]) -> Result<PhaseMask> {
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if width == 0 {
        return Err(Error::EmptyRaster);
    }
    for (row, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::RaggedRaster {
                row,
                expected: width,
                found: r.len(),
            });
        }
    }
    PhaseMask::from_fn(width, rows.len(), "bitmap", |x, y| {
        if rows[y][x] != 0 {
            PI
        } else {
            0.0
        }
    })
}

/// Local OAM decomposition of a mask over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct AzimuthalSpectrum {
    l_max: i32,
    coefficients: Vec<Complex64>,
    pub window: Window,
    pub pixel_count: usize,
}

impl AzimuthalSpectrum {
    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    /// `c_l`, or `None` for `|l| > l_max`.
    pub fn coefficient(&self, l: i32) -> Option<Complex64> {
        if l.abs() > self.l_max {
            return None;
        }
        Some(self.coefficients[(l + self.l_max) as usize])
    }

    pub fn power(&self, l: i32) -> f64 {
        self.coefficient(l).map_or(0.0, |c| c.norm_sqr())
    }

    pub fn total_power(&self) -> f64 {
        self.coefficients.iter().map(Complex64::norm_sqr).sum()
    }

    /// `(l, c_l)` pairs from `-l_max` to `l_max`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        (-self.l_max..=self.l_max).zip(self.coefficients.iter().copied())
    }
}

/// `c_l = (1/M) Σ exp(iφ(x)) exp(-i l ϑ(x))`, with `ϑ` the azimuth of each
/// window pixel about the window centre and uniform radial weighting.
pub fn azimuthal_spectrum(mask: &PhaseMask, window: &Window, l_max: i32) -> Result<AzimuthalSpectrum> {
    if l_max < 1 {
        return Err(Error::InvalidLMax(l_max));
    }
    let set = window.pixels(mask.width(), mask.height())?;
    let len = (2 * l_max + 1) as usize;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); len];
    for &(x, y) in &set.pixels {
        let t = mask.transmission(x as i64, y as i64);
        let azimuth = (y as f64 - window.center.y).atan2(x as f64 - window.center.x);
        for (c, l) in coefficients.iter_mut().zip(-l_max..=l_max) {
            *c += t * Complex64::from_polar(1.0, -f64::from(l) * azimuth);
        }
    }
    let m = set.len() as f64;
    for c in &mut coefficients {
        *c /= m;
    }
    Ok(AzimuthalSpectrum {
        l_max,
        coefficients,
        window: *window,
        pixel_count: set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_phase_range(mask: &PhaseMask) {
        for &p in mask.phases() {
            assert!((0.0..TAU).contains(&p), "phase {p} outside [0, 2π)");
        }
    }

    #[test]
    fn uniform_masks() {
        let m = make_uniform(4, 0.0).unwrap();
        assert_eq!(m.width(), 4);
        assert!(m.phases().iter().all(|&p| p == 0.0));
        assert!(make_uniform(4, TAU).unwrap().phases().iter().all(|&p| p == 0.0));
        assert!(make_uniform(10, PI).unwrap().phases().iter().all(|&p| p == PI));
        assert!(matches!(make_uniform(0, 0.0), Err(Error::InvalidDimensions { .. })));
    }

    #[test]
    fn wrap_phase_edges() {
        assert_eq!(wrap_phase(-0.0), 0.0);
        assert_eq!(wrap_phase(-1e-17), 0.0);
        assert_eq!(wrap_phase(3.0 * PI), PI);
        assert!((wrap_phase(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn spiral_zero_charge_is_uniform() {
        let c = Point::grid_center(12);
        assert_eq!(
            make_spiral(12, 0, c).unwrap().phases(),
            make_uniform(12, 0.0).unwrap().phases()
        );
    }

    #[test]
    fn spiral_spectra_concentrate_on_their_charge() {
        let c = Point::grid_center(64);
        let w = Window::disk(c, 32.0);
        for l in [1, 2, -1] {
            let s = azimuthal_spectrum(&make_spiral(64, l, c).unwrap(), &w, 4).unwrap();
            assert!(s.power(l) >= 0.99, "l={l}: {}", s.power(l));
            for k in -4..=4 {
                if k != l {
                    assert!(s.power(k) <= 0.01, "l={l} k={k}: {}", s.power(k));
                }
            }
        }
    }

    #[test]
    fn generators_stay_in_phase_range() {
        let c = Point::new(7.3, 4.1);
        assert_phase_range(&make_spiral(16, -3, c).unwrap());
        assert_phase_range(&make_spiral(16, 5, c).unwrap());
        assert_phase_range(&make_step(16, 2.1, c).unwrap());
        assert_phase_range(&make_disk(16, 5.0, c).unwrap());
        assert_phase_range(&make_uniform(3, -7.0).unwrap());
    }

    #[test]
    fn step_masks_are_binary() {
        let m = make_step(33, 0.7, Point::grid_center(33)).unwrap();
        assert!(m.phases().iter().all(|&p| p == 0.0 || p == PI));
        let zeros = m.phases().iter().filter(|&&p| p == 0.0).count();
        assert!(zeros > 0 && zeros < 33 * 33);
    }

    #[test]
    fn step_orientation_pi_swaps_sides() {
        let c = Point::grid_center(128);
        let a = make_step(128, 0.0, c).unwrap();
        let b = make_step(128, PI, c).unwrap();
        for (pa, pb) in a.phases().iter().zip(b.phases()) {
            assert_eq!(wrap_phase(pa + PI), *pb);
        }
        let w = Window::disk(c, 40.0);
        let sa = azimuthal_spectrum(&a, &w, 5).unwrap();
        let sb = azimuthal_spectrum(&b, &w, 5).unwrap();
        for l in -5..=5 {
            assert!((sa.power(l) - sb.power(l)).abs() < 1e-12);
        }
    }

    #[test]
    fn horizontal_step_has_odd_spectrum() {
        let c = Point::grid_center(128);
        let m = make_step(128, 0.0, c).unwrap();
        let s = azimuthal_spectrum(&m, &Window::disk(c, 40.0), 4).unwrap();
        let four_over_pi2 = 4.0 / (PI * PI);
        assert!(s.power(0) <= 1e-20, "antisymmetry: {}", s.power(0));
        assert!((s.power(1) - four_over_pi2).abs() <= 0.02);
        assert!((s.power(-1) - four_over_pi2).abs() <= 0.02);
        assert!(s.power(2) <= 0.01);
        assert!((s.power(3) - four_over_pi2 / 9.0).abs() <= 0.02);
        // c_1 = -2i/π
        let c1 = s.coefficient(1).unwrap();
        assert!(c1.re.abs() < 1e-10 && c1.im < 0.0);
        assert!(s.total_power() <= 1.0 + DISCRETE_TOLERANCE);
    }

    #[test]
    fn diagonal_step_within_staircase_tolerance() {
        let c = Point::grid_center(128);
        let m = make_step(128, PI / 4.0, c).unwrap();
        let s = azimuthal_spectrum(&m, &Window::disk(c, 40.0), 2).unwrap();
        assert!((s.power(1) - 4.0 / (PI * PI)).abs() <= 0.05);
    }

    #[test]
    fn disk_patches() {
        let n = 128;
        let c = Point::grid_center(n);
        let d = make_disk(n, 40.0, c).unwrap();
        // fully inside
        let s = azimuthal_spectrum(&d, &Window::disk(c, 8.0), 2).unwrap();
        assert!((s.coefficient(0).unwrap().norm() - 1.0).abs() < 1e-12);
        // centred on the rim
        let rim = Window::disk(Point::new(c.x + 40.0, c.y), 6.0);
        let s = azimuthal_spectrum(&d, &rim, 2).unwrap();
        assert!(s.power(1) > 0.3 && s.power(-1) > 0.3, "{} {}", s.power(1), s.power(-1));
    }

    #[test]
    fn disk_radius_validation() {
        let c = Point::grid_center(10);
        assert!(make_disk(10, 5.0, c).is_ok());
        assert!(matches!(make_disk(10, 5.5, c), Err(Error::RadiusOutOfRange { .. })));
        assert!(matches!(make_disk(10, 0.0, c), Err(Error::RadiusOutOfRange { .. })));
    }

    #[test]
    fn rim_tangent_geometry() {
        // the circle's tangent at azimuth θ is perpendicular to its radius vector
        for k in 0..12 {
            let theta = k as f64 * PI / 6.0;
            let radial = (theta.cos(), theta.sin());
            let tangent = wrap_phase(theta + PI / 2.0) % PI;
            let t = (tangent.cos(), tangent.sin());
            assert!((radial.0 * t.0 + radial.1 * t.1).abs() < 1e-12);
        }
    }

    #[test]
    fn bitmaps() {
        let zeros = from_bitmap(&[vec![0, 0], vec![0, 0]]).unwrap();
        assert!(zeros.phases().iter().all(|&p| p == 0.0));
        let ones = from_bitmap(&[vec![1, 3], vec![255, 1]]).unwrap();
        assert!(ones.phases().iter().all(|&p| p == PI));
        let checker = from_bitmap(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(checker.phases(), &[0.0, PI, PI, 0.0]);
        assert!(matches!(
            from_bitmap(&[vec![0, 1], vec![1]]),
            Err(Error::RaggedRaster { row: 1, .. })
        ));
        assert!(matches!(from_bitmap(&[]), Err(Error::EmptyRaster)));
    }

    #[test]
    fn spectrum_rejects_bad_inputs() {
        let m = make_uniform(8, 0.0).unwrap();
        let w = Window::disk(Point::new(3.5, 3.5), 3.0);
        assert!(matches!(azimuthal_spectrum(&m, &w, 0), Err(Error::InvalidLMax(0))));
        let outside = Window::disk(Point::new(100.0, 100.0), 3.0);
        assert!(matches!(azimuthal_spectrum(&m, &outside, 2), Err(Error::EmptyWindow { .. })));
        let s = azimuthal_spectrum(&m, &w, 2).unwrap();
        assert!((s.coefficient(0).unwrap() - 1.0).norm() < 1e-15);
        assert!(s.coefficient(3).is_none());
    }

    #[test]
    fn opaque_pixels_do_not_contribute() {
        let m = make_uniform(8, 0.0).unwrap().with_support(|x, _| x < 4);
        assert_eq!(m.transmission(5, 0), Complex64::new(0.0, 0.0));
        assert_eq!(m.transmission(-1, 0), Complex64::new(0.0, 0.0));
        let s = azimuthal_spectrum(&m, &Window::square(0, 0, 8), 1).unwrap();
        assert!((s.coefficient(0).unwrap().re - 0.5).abs() < 1e-15);
    }
}
