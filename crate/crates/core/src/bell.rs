//! CHSH analysis of rim correlations on a disk phase object.
//!
//! The filter is a π-step oriented at `θ_A`; the object is probed at rim
//! azimuth `θ_B`, where its local edge runs along the tangent `θ_B + π/2`.
//! Correlations `C` are raw `g2` values, background included:
//!
//! ```text
//! E(θ_A, θ_B) = [C(A,B) + C(A*,B*) - C(A*,B) - C(A,B*)] / [sum of the four],  θ* = θ + π/2
//! S = E(θ_A,θ_B) - E(θ_A,θ_B') + E(θ_A',θ_B) + E(θ_A',θ_B')
//! ```
//!
//! With `1 <= C <= 2` every `|E| <= 1/3`, hence `|S| <= 4/3`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use rayon::prelude::*;

use crate::correlator::{CorrelationEstimate, Estimator, Offset};
use crate::error::{Error, Result};
use crate::masks::{make_disk, make_step, PhaseMask, Point, Window};

/// Filter orientations of the four reference holograms.
pub const FILTER_ORIENTATIONS: [f64; 4] = [0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4];

/// Upper bound on `|E|` for raw correlations in `[1, 2]`.
pub const E_BOUND: f64 = 1.0 / 3.0;

/// Upper bound on `|S|` implied by [`E_BOUND`].
pub const S_BOUND: f64 = 4.0 / 3.0;

const ANGLE_MATCH: f64 = 1e-9;

/// Reduces an angle into `[0, π)`.
pub fn fold_pi(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Local edge orientation of the rim at azimuth `theta_b`, in `[0, π)`.
pub fn rim_tangent(theta_b: f64) -> f64 {
    fold_pi(theta_b + FRAC_PI_2)
}

/// Angle between the filter step and the local rim edge, in `[0, π)`.
pub fn relative_angle(theta_a: f64, theta_b: f64) -> f64 {
    fold_pi(theta_a - rim_tangent(theta_b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskObject {
    pub mask: PhaseMask,
    pub center: Point,
    pub radius: f64,
}

impl DiskObject {
    pub fn new(n: usize, radius: f64, center: Point) -> Result<Self> {
        Ok(Self {
            mask: make_disk(n, radius, center)?,
            center,
            radius,
        })
    }

    pub fn centered(n: usize, radius: f64) -> Result<Self> {
        Self::new(n, radius, Point::grid_center(n))
    }

    pub fn rim_point(&self, theta_b: f64, radius: f64) -> Point {
        Point::new(
            self.center.x + radius * theta_b.cos(),
            self.center.y + radius * theta_b.sin(),
        )
    }
}

/// Averaging cell used for each curve sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub radial_px: f64,
    pub azimuthal_deg: f64,
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            radial_px: 8.0,
            azimuthal_deg: 3.0,
        }
    }
}

impl Binning {
    pub fn bin_count(&self) -> usize {
        (180.0 / self.azimuthal_deg).round() as usize
    }

    fn radial_samples(&self) -> usize {
        self.radial_px.round() as usize
    }

    pub fn validate(&self, radius: f64) -> Result<()> {
        if self.radial_px.is_nan() || self.radial_px < 1.0 {
            return Err(Error::DegenerateBinning(format!(
                "radial extent {} px is below one pixel",
                self.radial_px
            )));
        }
        if !(self.azimuthal_deg > 0.0 && self.azimuthal_deg <= 90.0) {
            return Err(Error::DegenerateBinning(format!(
                "azimuthal extent {} deg outside (0, 90]",
                self.azimuthal_deg
            )));
        }
        let bins = 180.0 / self.azimuthal_deg;
        if (bins - bins.round()).abs() > 1e-9 {
            return Err(Error::DegenerateBinning(format!(
                "{} deg bins do not tile 180 deg",
                self.azimuthal_deg
            )));
        }
        let arc = radius * self.azimuthal_deg.to_radians();
        if arc < 1.0 {
            return Err(Error::DegenerateBinning(format!(
                "adjacent bins are {arc:.3} px apart on a radius {radius} rim"
            )));
        }
        Ok(())
    }

    /// Centre of azimuthal bin `k`, in radians.
    pub fn bin_center(&self, k: usize) -> f64 {
        ((k as f64 + 0.5) * self.azimuthal_deg).to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub theta_b: f64,
    pub c: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellCurve {
    pub theta_a: f64,
    pub samples: Vec<CurveSample>,
    pub binning: Binning,
}

impl BellCurve {
    /// Samples a function on the bin centres of `binning`.
    pub fn from_fn(theta_a: f64, binning: Binning, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..binning.bin_count())
            .map(|k| {
                let theta_b = binning.bin_center(k);
                CurveSample {
                    theta_b,
                    c: f(theta_b),
                    stderr: 0.0,
                }
            })
            .collect();
        Self {
            theta_a,
            samples,
            binning,
        }
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().map(|s| s.c).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> f64 {
        self.samples
            .iter()
            .fold(None::<&CurveSample>, |best, s| match best {
                Some(b) if b.c >= s.c => Some(b),
                _ => Some(s),
            })
            .map_or(0.0, |s| s.theta_b)
    }

    /// `C(θ_B)` with period `π`, interpolated linearly between adjacent bins.
    pub fn interpolate(&self, theta_b: f64) -> f64 {
        let s = &self.samples;
        let t = fold_pi(theta_b);
        let n = s.len();
        if n == 1 {
            return s[0].c;
        }
        let upper = s.partition_point(|p| p.theta_b <= t);
        let (lo, hi, lo_theta, hi_theta) = match upper {
            0 => (&s[n - 1], &s[0], s[n - 1].theta_b - PI, s[0].theta_b),
            u if u == n => (&s[n - 1], &s[0], s[n - 1].theta_b, s[0].theta_b + PI),
            u => (&s[u - 1], &s[u], s[u - 1].theta_b, s[u].theta_b),
        };
        let w = (t - lo_theta) / (hi_theta - lo_theta);
        lo.c + w * (hi.c - lo.c)
    }
}

/// Source of `C(θ_A, θ_B)` values for the CHSH combination.
pub trait CorrelationTable {
    fn correlation(&self, theta_a: f64, theta_b: f64) -> Result<f64>;
}

impl CorrelationTable for [BellCurve] {
    fn correlation(&self, theta_a: f64, theta_b: f64) -> Result<f64> {
        let curve = self
            .iter()
            .find(|c| {
                let d = fold_pi(theta_a - c.theta_a);
                d.min(PI - d) < ANGLE_MATCH
            })
            .ok_or(Error::MissingCurve(theta_a))?;
        Ok(curve.interpolate(theta_b))
    }
}

impl CorrelationTable for Vec<BellCurve> {
    fn correlation(&self, theta_a: f64, theta_b: f64) -> Result<f64> {
        self.as_slice().correlation(theta_a, theta_b)
    }
}

/// Closed-form correlation model.
pub struct FnTable<F>(pub F);

impl<F: Fn(f64, f64) -> f64> CorrelationTable for FnTable<F> {
    fn correlation(&self, theta_a: f64, theta_b: f64) -> Result<f64> {
        Ok((self.0)(theta_a, theta_b))
    }
}

/// Filter hologram for orientation `theta_a`.
pub fn step_filter(window_size: usize, theta_a: f64) -> Result<PhaseMask> {
    make_step(window_size, theta_a, Point::grid_center(window_size))
}

/// Correlation with the window centre placed as close to `point` as integer offsets allow.
fn correlation_at(
    disk: &DiskObject,
    filter: &PhaseMask,
    point: Point,
    estimator: &Estimator,
    stream: u64,
) -> Result<CorrelationEstimate> {
    let size = filter.width();
    let wc = Point::grid_center(size);
    let offset = Offset::new((point.x - wc.x).round() as i64, (point.y - wc.y).round() as i64);
    let (n_x, n_y) = (disk.mask.width() as i64, disk.mask.height() as i64);
    if offset.dx < 0 || offset.dy < 0 || offset.dx + size as i64 > n_x || offset.dy + size as i64 > n_y {
        return Err(Error::RimWindowClipped { x: point.x, y: point.y });
    }
    estimator.estimate(&disk.mask, filter, offset, &Window::square(0, 0, size), stream)
}

/// Raw correlation `C = g2` with the step filter at `theta_a` probing the rim at `theta_b`.
pub fn rim_correlation(
    disk: &DiskObject,
    theta_a: f64,
    theta_b: f64,
    window_size: usize,
    estimator: &Estimator,
) -> Result<(f64, f64)> {
    let filter = step_filter(window_size, theta_a)?;
    let stream = theta_a.to_bits() ^ theta_b.to_bits().rotate_left(32);
    let e = correlation_at(disk, &filter, disk.rim_point(theta_b, disk.radius), estimator, stream)?;
    Ok((e.g2, e.stderr))
}

/// Binned correlation curves `C(θ_A, θ_B)` over rim azimuths in `[0, π)`.
///
/// Each bin averages the correlation over window centres spread across
/// `radial_px` radii and the bin's azimuthal extent, about one pixel apart.
pub fn sweep_curves(
    disk: &DiskObject,
    window_size: usize,
    theta_a_list: &[f64],
    binning: Binning,
    estimator: &Estimator,
) -> Result<Vec<BellCurve>> {
    binning.validate(disk.radius)?;
    let bins = binning.bin_count();
    let width = binning.azimuthal_deg.to_radians();
    let n_radial = binning.radial_samples();
    let n_az = ((disk.radius * width).ceil() as usize).max(1);

    theta_a_list
        .iter()
        .enumerate()
        .map(|(ci, &theta_a)| {
            let filter = step_filter(window_size, theta_a)?;
            let samples = (0..bins)
                .into_par_iter()
                .map(|k| {
                    let theta_c = binning.bin_center(k);
                    let mut sum = 0.0;
                    let mut var = 0.0;
                    for j in 0..n_radial {
                        let r = disk.radius - binning.radial_px / 2.0 + j as f64 + 0.5;
                        for i in 0..n_az {
                            let theta = theta_c - width / 2.0 + (i as f64 + 0.5) * width / n_az as f64;
                            let stream = ((ci as u64) << 48) | ((k as u64) << 24) | (j * n_az + i) as u64;
                            let e = correlation_at(disk, &filter, disk.rim_point(theta, r), estimator, stream)?;
                            sum += e.g2;
                            var += e.stderr * e.stderr;
                        }
                    }
                    let count = (n_radial * n_az) as f64;
                    Ok(CurveSample {
                        theta_b: theta_c,
                        c: sum / count,
                        stderr: var.sqrt() / count,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BellCurve {
                theta_a,
                samples,
                binning,
            })
        })
        .collect()
}

/// Numerator and denominator of `E`; background subtraction removes 1 from every `C`.
pub fn chsh_terms<T: CorrelationTable + ?Sized>(
    table: &T,
    theta_a: f64,
    theta_b: f64,
    subtract_background: bool,
) -> Result<(f64, f64)> {
    let bg = if subtract_background { 1.0 } else { 0.0 };
    let c = |a: f64, b: f64| table.correlation(a, b).map(|v| v - bg);
    let (a_star, b_star) = (theta_a + FRAC_PI_2, theta_b + FRAC_PI_2);
    let same = c(theta_a, theta_b)?;
    let both = c(a_star, b_star)?;
    let cross_a = c(a_star, theta_b)?;
    let cross_b = c(theta_a, b_star)?;
    Ok((same + both - cross_a - cross_b, same + both + cross_a + cross_b))
}

pub fn chsh_e<T: CorrelationTable + ?Sized>(
    table: &T,
    theta_a: f64,
    theta_b: f64,
    subtract_background: bool,
) -> Result<f64> {
    let (num, den) = chsh_terms(table, theta_a, theta_b, subtract_background)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator { theta_a, theta_b });
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub theta_a: f64,
    pub theta_b: f64,
    pub theta_a_prime: f64,
    pub theta_b_prime: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            theta_a: 0.0,
            theta_b: FRAC_PI_8,
            theta_a_prime: FRAC_PI_4,
            theta_b_prime: 3.0 * FRAC_PI_8,
        }
    }
}

impl Settings {
    /// The four `(θ_A, θ_B)` pairs with their sign in `S`.
    pub fn terms(&self) -> [(f64, f64, f64); 4] {
        [
            (self.theta_a, self.theta_b, 1.0),
            (self.theta_a, self.theta_b_prime, -1.0),
            (self.theta_a_prime, self.theta_b, 1.0),
            (self.theta_a_prime, self.theta_b_prime, 1.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ETerm {
    pub theta_a: f64,
    pub theta_b: f64,
    pub sign: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chsh {
    pub terms: [ETerm; 4],
    pub s: f64,
}

pub fn chsh_value<T: CorrelationTable + ?Sized>(table: &T, settings: &Settings, subtract_background: bool) -> Result<Chsh> {
    let mut terms = [ETerm {
        theta_a: 0.0,
        theta_b: 0.0,
        sign: 0.0,
        numerator: 0.0,
        denominator: 0.0,
        e: 0.0,
    }; 4];
    for (slot, (theta_a, theta_b, sign)) in terms.iter_mut().zip(settings.terms()) {
        let (numerator, denominator) = chsh_terms(table, theta_a, theta_b, subtract_background)?;
        if denominator == 0.0 {
            return Err(Error::ZeroDenominator { theta_a, theta_b });
        }
        *slot = ETerm {
            theta_a,
            theta_b,
            sign,
            numerator,
            denominator,
            e: numerator / denominator,
        };
    }
    let s = terms.iter().map(|t| t.sign * t.e).sum();
    Ok(Chsh { terms, s })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellResult {
    pub curves: Vec<BellCurve>,
    pub terms: [ETerm; 4],
    pub s: f64,
    pub settings: Settings,
    pub subtract_background: bool,
}

impl BellResult {
    pub fn max_abs_e(&self) -> f64 {
        self.terms.iter().map(|t| t.e.abs()).fold(0.0, f64::max)
    }

    /// `|E| <= 1/3` and `|S| <= 4/3`, the thermal bounds for raw correlations.
    pub fn within_thermal_bound(&self) -> bool {
        self.max_abs_e() <= E_BOUND + 1e-12 && self.s.abs() <= S_BOUND + 1e-12
    }
}

pub fn chsh_s(curves: Vec<BellCurve>, settings: Settings, subtract_background: bool) -> Result<BellResult> {
    let chsh = chsh_value(curves.as_slice(), &settings, subtract_background)?;
    Ok(BellResult {
        curves,
        terms: chsh.terms,
        s: chsh.s,
        settings,
        subtract_background,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos2(theta_a: f64, theta_b: f64) -> f64 {
        1.0 + (theta_a - theta_b).cos().powi(2)
    }

    #[test]
    fn angle_helpers() {
        assert_eq!(fold_pi(-FRAC_PI_2), FRAC_PI_2);
        assert_eq!(fold_pi(PI), 0.0);
        assert!((rim_tangent(0.0) - FRAC_PI_2).abs() < 1e-15);
        assert!(rim_tangent(FRAC_PI_2).abs() < 1e-15);
        assert!(relative_angle(FRAC_PI_2, 0.0).abs() < 1e-15);
    }

    #[test]
    fn binning_validation() {
        let b = Binning::default();
        assert_eq!(b.bin_count(), 60);
        assert!(b.validate(60.0).is_ok());
        assert!(b.validate(10.0).is_err());
        assert!(Binning { radial_px: 0.5, ..b }.validate(60.0).is_err());
        assert!(Binning { azimuthal_deg: 7.0, ..b }.validate(60.0).is_err());
        assert!(Binning { azimuthal_deg: 0.0, ..b }.validate(60.0).is_err());
        assert!((b.bin_center(7) - FRAC_PI_8).abs() < 1e-15);
    }

    #[test]
    fn interpolation_wraps_across_pi() {
        let b = Binning {
            radial_px: 1.0,
            azimuthal_deg: 45.0,
        };
        // samples at 22.5, 67.5, 112.5, 157.5 deg
        let curve = BellCurve::from_fn(0.0, b, |t| t);
        assert!((curve.interpolate(45f64.to_radians()) - 45f64.to_radians()).abs() < 1e-12);
        // between 157.5 and 202.5: endpoint values 157.5° and 22.5° (the latter at +π)
        let mid = curve.interpolate(0.0);
        let expected = (157.5f64.to_radians() + 22.5f64.to_radians()) / 2.0;
        assert!((mid - expected).abs() < 1e-12);
        assert!((curve.interpolate(PI) - mid).abs() < 1e-12);
    }

    #[test]
    fn equal_correlations_give_zero_e() {
        let table = FnTable(|_, _| 1.7);
        assert_eq!(chsh_e(&table, 0.3, 1.1, false).unwrap(), 0.0);
    }

    #[test]
    fn ideal_cos2_model() {
        let table = FnTable(cos2);
        for k in 0..20 {
            let d = k as f64 * 0.17;
            let e = chsh_e(&table, d, 0.0, false).unwrap();
            assert!((e - (2.0 * d).cos() / 3.0).abs() < 1e-12);
        }
        let s = chsh_value(&table, &Settings::default(), false).unwrap().s;
        assert!((s - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-12);
        let s_sub = chsh_value(&table, &Settings::default(), true).unwrap().s;
        assert!((s_sub - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn missing_curve_is_reported() {
        let curves = vec![BellCurve::from_fn(0.0, Binning::default(), |_| 1.5)];
        assert!(matches!(chsh_e(&curves, 0.0, 0.3, false), Err(Error::MissingCurve(_))));
        // π-periodic lookup finds the curve
        assert!(curves.correlation(PI, 0.3).is_ok());
    }

    #[test]
    fn zero_denominator_after_subtraction() {
        let table = FnTable(|_, _| 1.0);
        assert!(matches!(chsh_e(&table, 0.0, 0.0, true), Err(Error::ZeroDenominator { .. })));
    }

    #[test]
    fn rim_windows_must_fit() {
        let disk = DiskObject::centered(40, 18.0).unwrap();
        assert!(rim_correlation(&disk, 0.0, 0.0, 10, &Estimator::Analytic).is_err());
        let disk = DiskObject::centered(60, 20.0).unwrap();
        let (c, se) = rim_correlation(&disk, 0.0, 0.3, 10, &Estimator::Analytic).unwrap();
        assert!((1.0..=2.0).contains(&c));
        assert_eq!(se, 0.0);
    }

    #[test]
    fn tangent_matched_filter_maximizes_rim_correlation() {
        let disk = DiskObject::centered(160, 60.0).unwrap();
        for &theta_b in &[0.0, FRAC_PI_2, 0.6, 2.2] {
            let tangent = rim_tangent(theta_b);
            let sweep: Vec<(f64, f64)> = (0..36)
                .map(|k| {
                    let a = k as f64 * PI / 36.0;
                    (a, rim_correlation(&disk, a, theta_b, 10, &Estimator::Analytic).unwrap().0)
                })
                .collect();
            let at = |a: f64| rim_correlation(&disk, a, theta_b, 10, &Estimator::Analytic).unwrap().0;
            let best = sweep.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let worst = sweep.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            assert!(at(tangent) >= best - 1e-12, "θ_B={theta_b}: {} < {best}", at(tangent));
            assert!(at(tangent + FRAC_PI_2) <= worst + 0.02, "θ_B={theta_b}");
        }
    }
}
