//! Ghost image acquisition by stepping the object across the filter window.

use rayon::prelude::*;

use crate::correlator::{Estimator, Mode, Offset};
use crate::error::{Error, Result};
use crate::masks::{PhaseMask, Window};

/// Rectangular grid of object offsets, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffsetGrid {
    pub x_range: (i64, i64),
    pub y_range: (i64, i64),
    pub stride: usize,
}

impl OffsetGrid {
    /// Offsets that keep a `window`-sized block entirely inside an `object`-sized grid.
    pub fn interior(object: usize, window: usize, stride: usize) -> Self {
        let last = object as i64 - window as i64;
        Self {
            x_range: (0, last),
            y_range: (0, last),
            stride,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::InvalidOffsets("stride must be at least 1".into()));
        }
        if self.x_range.1 < self.x_range.0 || self.y_range.1 < self.y_range.0 {
            return Err(Error::InvalidOffsets(format!(
                "empty range x={:?} y={:?}",
                self.x_range, self.y_range
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        ((self.x_range.1 - self.x_range.0) as usize) / self.stride + 1
    }

    pub fn height(&self) -> usize {
        ((self.y_range.1 - self.y_range.0) as usize) / self.stride + 1
    }

    /// Offset at image pixel `(i, j)`.
    pub fn offset(&self, i: usize, j: usize) -> Offset {
        Offset::new(
            self.x_range.0 + (i * self.stride) as i64,
            self.y_range.0 + (j * self.stride) as i64,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub object: PhaseMask,
    pub filter: PhaseMask,
    pub window: Window,
    pub offsets: OffsetGrid,
    pub estimator: Estimator,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.offsets.validate()?;
        if let Estimator::MonteCarlo(mc) = &self.estimator {
            if mc.realizations < 2 {
                return Err(Error::TooFewRealizations(mc.realizations));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanImage {
    pub width: usize,
    pub height: usize,
    /// `delta_g2` per offset, row-major.
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mode: Mode,
    pub offsets: OffsetGrid,
}

impl ScanImage {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn stderr_at(&self, i: usize, j: usize) -> f64 {
        self.stderr[j * self.width + i]
    }

    /// Image value at an offset, if the offset lies on the grid.
    pub fn at_offset(&self, offset: Offset) -> Option<f64> {
        let g = &self.offsets;
        let (rx, ry) = (offset.dx - g.x_range.0, offset.dy - g.y_range.0);
        let s = g.stride as i64;
        if rx < 0 || ry < 0 || rx % s != 0 || ry % s != 0 {
            return None;
        }
        let (i, j) = ((rx / s) as usize, (ry / s) as usize);
        (i < self.width && j < self.height).then(|| self.value(i, j))
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        (best % self.width, best / self.width)
    }
}

/// Correlation image over every offset of the grid. Offset `k` (row-major)
/// uses Monte Carlo stream `k`, so results do not depend on scheduling.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanImage> {
    cfg.validate()?;
    let (width, height) = (cfg.offsets.width(), cfg.offsets.height());
    let estimates = (0..width * height)
        .into_par_iter()
        .map(|k| {
            let offset = cfg.offsets.offset(k % width, k / width);
            cfg.estimator
                .estimate(&cfg.object, &cfg.filter, offset, &cfg.window, k as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanImage {
        width,
        height,
        values: estimates.iter().map(|e| e.delta_g2).collect(),
        stderr: estimates.iter().map(|e| e.stderr).collect(),
        mode: cfg.estimator.mode(),
        offsets: cfg.offsets,
    })
}

/// Affine map of the values onto `[0, 1]`; constant images map to zero.
pub fn normalize_image(img: &ScanImage) -> Result<ScanImage> {
    if img.values.is_empty() {
        return Err(Error::EmptyImage);
    }
    let min = img.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = img.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut out = img.clone();
    if span > 0.0 {
        for v in &mut out.values {
            *v = (*v - min) / span;
        }
        for s in &mut out.stderr {
            *s /= span;
        }
    } else {
        out.values.iter_mut().for_each(|v| *v = 0.0);
        out.stderr.iter_mut().for_each(|s| *s = 0.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::{make_disk, make_spiral, make_uniform, Point};

    fn analytic(object: PhaseMask, filter: PhaseMask, offsets: OffsetGrid) -> ScanConfig {
        let n = filter.width();
        ScanConfig {
            object,
            filter,
            window: Window::square(0, 0, n),
            offsets,
            estimator: Estimator::Analytic,
        }
    }

    fn image(values: Vec<f64>) -> ScanImage {
        let n = values.len();
        ScanImage {
            width: n,
            height: 1,
            stderr: vec![0.0; n],
            values,
            mode: Mode::Analytic,
            offsets: OffsetGrid {
                x_range: (0, n as i64 - 1),
                y_range: (0, 0),
                stride: 1,
            },
        }
    }

    #[test]
    fn offset_grid_geometry() {
        let g = OffsetGrid {
            x_range: (-3, 7),
            y_range: (2, 2),
            stride: 2,
        };
        assert_eq!((g.width(), g.height()), (6, 1));
        assert_eq!(g.offset(5, 0), Offset::new(7, 2));
        assert!(OffsetGrid { stride: 0, ..g }.validate().is_err());
        assert!(OffsetGrid { x_range: (1, 0), ..g }.validate().is_err());
        assert_eq!(OffsetGrid::interior(128, 10, 1).width(), 119);
    }

    #[test]
    fn uniform_object_and_filter_give_constant_unit_image() {
        let img = run_scan(&analytic(
            make_uniform(32, 0.0).unwrap(),
            make_uniform(10, 0.0).unwrap(),
            OffsetGrid::interior(32, 10, 1),
        ))
        .unwrap();
        assert!(img.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn uniform_object_with_spiral_filter_is_dark() {
        let img = run_scan(&analytic(
            make_uniform(32, 0.0).unwrap(),
            make_spiral(10, 1, Point::grid_center(10)).unwrap(),
            OffsetGrid::interior(32, 10, 3),
        ))
        .unwrap();
        assert!(img.values.iter().all(|&v| v <= 0.01));
    }

    #[test]
    fn disk_rim_darkens_under_plane_filter() {
        let n = 128;
        let c = Point::grid_center(n);
        let img = run_scan(&analytic(
            make_disk(n, 40.0, c).unwrap(),
            make_uniform(10, 0.0).unwrap(),
            OffsetGrid::interior(n, 10, 1),
        ))
        .unwrap();
        // window centre sits at offset + 4.5
        let inside = img.at_offset(Offset::new(59, 59)).unwrap();
        let outside = img.at_offset(Offset::new(2, 2)).unwrap();
        assert_eq!((inside, outside), (1.0, 1.0));
        // window straddling the rim at azimuth 0: centre x = 63.5 + 40
        let rim = img.at_offset(Offset::new(99, 59)).unwrap();
        assert!(rim <= 0.1, "{rim}");
    }

    #[test]
    fn scan_validation() {
        let u = make_uniform(16, 0.0).unwrap();
        let mut cfg = analytic(u.clone(), make_uniform(4, 0.0).unwrap(), OffsetGrid::interior(16, 4, 1));
        cfg.estimator = Estimator::MonteCarlo(crate::correlator::MonteCarlo {
            realizations: 1,
            seed: 0,
            coherence_px: 0.0,
        });
        assert!(matches!(run_scan(&cfg), Err(Error::TooFewRealizations(1))));
        // offsets that leave the object entirely propagate the correlator error
        let cfg = analytic(
            u,
            make_uniform(4, 0.0).unwrap(),
            OffsetGrid {
                x_range: (100, 101),
                y_range: (0, 0),
                stride: 1,
            },
        );
        assert!(matches!(run_scan(&cfg), Err(Error::NoTransmission { .. })));
    }

    #[test]
    fn normalization() {
        let z = normalize_image(&image(vec![2.0; 4])).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        let two = normalize_image(&image(vec![1.0, 3.0, 3.0, 1.0])).unwrap();
        assert_eq!(two.values, vec![0.0, 1.0, 1.0, 0.0]);
        let img = image(vec![0.2, 0.9, -0.1, 0.4]);
        assert_eq!(normalize_image(&img).unwrap().argmax(), img.argmax());
        assert!(matches!(normalize_image(&image(vec![])), Err(Error::EmptyImage)));
    }
}
