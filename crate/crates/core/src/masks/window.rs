use crate::error::{Error, Result};

/// A point in pixel coordinates. Pixel `(i, j)` has its centre at `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Centre of an `n`-pixel-wide square grid.
    pub fn grid_center(n: usize) -> Self {
        let c = (n as f64 - 1.0) / 2.0;
        Self { x: c, y: c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowShape {
    /// Pixels whose centres satisfy `c - h <= p < c + h` on both axes.
    Square { half_width: f64 },
    /// Pixels whose centres lie within `radius` of the window centre.
    Disk { radius: f64 },
}

/// Region of a grid over which a detector integrates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub center: Point,
    pub shape: WindowShape,
}

/// The clipped pixel set of a window, in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSet {
    pub pixels: Vec<(usize, usize)>,
    pub clipped: bool,
}

impl PixelSet {
    /// Effective pixel count `M` after clipping.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

impl Window {
    /// Square window covering the `size x size` pixel block whose top-left pixel is `(x0, y0)`.
    pub fn square(x0: i64, y0: i64, size: usize) -> Self {
        let c = (size as f64 - 1.0) / 2.0;
        Self {
            center: Point::new(x0 as f64 + c, y0 as f64 + c),
            shape: WindowShape::Square {
                half_width: size as f64 / 2.0,
            },
        }
    }

    pub fn disk(center: Point, radius: f64) -> Self {
        Self {
            center,
            shape: WindowShape::Disk { radius },
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center.x;
        let dy = y - self.center.y;
        match self.shape {
            WindowShape::Square { half_width: h } => -h <= dx && dx < h && -h <= dy && dy < h,
            WindowShape::Disk { radius } => dx * dx + dy * dy <= radius * radius,
        }
    }

    fn extent(&self) -> f64 {
        match self.shape {
            WindowShape::Square { half_width } => half_width,
            WindowShape::Disk { radius } => radius,
        }
    }

    /// Every pixel the window covers, ignoring grid bounds.
    fn unclipped(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let e = self.extent();
        let x_lo = (self.center.x - e).floor() as i64;
        let x_hi = (self.center.x + e).ceil() as i64;
        let y_lo = (self.center.y - e).floor() as i64;
        let y_hi = (self.center.y + e).ceil() as i64;
        (y_lo..=y_hi)
            .flat_map(move |y| (x_lo..=x_hi).map(move |x| (x, y)))
            .filter(|&(x, y)| self.contains(x as f64, y as f64))
    }

    /// Pixels of the window inside a `width x height` grid.
    pub fn pixels(&self, width: usize, height: usize) -> Result<PixelSet> {
        let mut clipped = false;
        let mut pixels = Vec::new();
        for (x, y) in self.unclipped() {
            if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                pixels.push((x as usize, y as usize));
            } else {
                clipped = true;
            }
        }
        if pixels.is_empty() {
            return Err(Error::EmptyWindow { width, height });
        }
        Ok(PixelSet { pixels, clipped })
    }

    /// Bounding box `(x0, y0, w, h)` of the unclipped pixel set.
    pub fn bounding_box(&self) -> (i64, i64, usize, usize) {
        let mut x0 = i64::MAX;
        let mut y0 = i64::MAX;
        let mut x1 = i64::MIN;
        let mut y1 = i64::MIN;
        for (x, y) in self.unclipped() {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        if x0 > x1 {
            return (0, 0, 0, 0);
        }
        (x0, y0, (x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize)
    }
}
