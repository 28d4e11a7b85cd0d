//! Experiment configuration: TOML in, fully resolved config out.
//!
//! Parsing walks the document section by section, consuming keys as it goes,
//! so any key left over is reported by its dotted path. The resolved config
//! renders back to TOML with every default written out; parsing that text
//! yields the same config.

use std::fmt::Write as _;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::bell::Binning;
use crate::correlator::Mode;
use crate::error::{Error, Result};
use crate::masks::{read_pbm, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Scan,
    Bell,
    Spectrum,
    SpeckleCheck,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Scan => "scan",
            ExperimentKind::Bell => "bell",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::SpeckleCheck => "speckle_check",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "scan" => Some(Self::Scan),
            "bell" => Some(Self::Bell),
            "spectrum" => Some(Self::Spectrum),
            "speckle_check" | "speckle-check" => Some(Self::SpeckleCheck),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectSpec {
    Uniform { size: usize, phase: f64 },
    Disk { size: usize, radius: f64, center: Point },
    Step { size: usize, orientation_deg: f64, center: Point },
    Spiral { size: usize, l: i32, center: Point },
    Bitmap { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSpec {
    Uniform { phase: f64 },
    Spiral { l: i32 },
    Step { orientation_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowShapeSpec {
    Square,
    Disk,
}

impl WindowShapeSpec {
    fn as_str(self) -> &'static str {
        match self {
            WindowShapeSpec::Square => "square",
            WindowShapeSpec::Disk => "disk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub size: usize,
    pub shape: WindowShapeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub x_range: (i64, i64),
    pub y_range: (i64, i64),
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellSpec {
    pub binning: Binning,
    pub filter_orientations_deg: Vec<f64>,
    /// `θ_A, θ_B, θ_A', θ_B'` in degrees.
    pub settings_deg: [f64; 4],
    pub subtract_background: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSpec {
    pub center: Point,
    pub radius: f64,
    pub shape: WindowShapeSpec,
    pub l_max: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeckleSpec {
    pub samples: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub mode: Mode,
    pub mc_realizations: usize,
    pub coherence_px: f64,
    pub output: PathBuf,
    /// Detector pixel pitch; recorded, not used.
    pub pixel_pitch_um: f64,
    pub object: Option<ObjectSpec>,
    pub filter: Option<FilterSpec>,
    pub window: Option<WindowSpec>,
    pub scan: Option<ScanSpec>,
    pub bell: Option<BellSpec>,
    pub spectrum: Option<SpectrumSpec>,
    pub speckle: Option<SpeckleSpec>,
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub mc_realizations: Option<usize>,
    pub coherence_px: Option<f64>,
    pub output: Option<PathBuf>,
    pub subtract_background: bool,
}

fn err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

/// A table whose keys are removed as they are read.
struct Section {
    prefix: String,
    table: Table,
}

impl Section {
    fn new(prefix: &str, table: Table) -> Self {
        Self {
            prefix: prefix.to_string(),
            table,
        }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn table(&mut self, key: &str) -> Result<Option<Section>> {
        let path = self.path(key);
        match self.take(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section::new(&path, t))),
            Some(v) => Err(err(&path, format!("expected a table, got {}", type_name(&v)))),
        }
    }

    fn int(&mut self, key: &str) -> Result<Option<i64>> {
        let path = self.path(key);
        match self.take(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(i)),
            Some(Value::Float(f)) => Err(err(&path, format!("expected an integer, got {f}"))),
            Some(v) => Err(err(&path, format!("expected an integer, got {}", type_name(&v)))),
        }
    }

    fn count(&mut self, key: &str, min: i64) -> Result<Option<usize>> {
        let path = self.path(key);
        match self.int(key)? {
            None => Ok(None),
            Some(i) if i < min => Err(err(&path, format!("must be at least {min}, got {i}"))),
            Some(i) => Ok(Some(i as usize)),
        }
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        let path = self.path(key);
        let v = match self.take(key) {
            None => return Ok(None),
            Some(Value::Integer(i)) => i as f64,
            Some(Value::Float(f)) => f,
            Some(v) => return Err(err(&path, format!("expected a number, got {}", type_name(&v)))),
        };
        if !v.is_finite() {
            return Err(err(&path, format!("must be finite, got {v}")));
        }
        Ok(Some(v))
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        let path = self.path(key);
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(err(&path, format!("expected a string, got {}", type_name(&v)))),
        }
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        let path = self.path(key);
        match self.take(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(v) => Err(err(&path, format!("expected a boolean, got {}", type_name(&v)))),
        }
    }

    fn floats(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let path = self.path(key);
        let items = match self.take(key) {
            None => return Ok(None),
            Some(Value::Array(a)) => a,
            Some(v) => return Err(err(&path, format!("expected an array, got {}", type_name(&v)))),
        };
        items
            .into_iter()
            .map(|v| match v {
                Value::Integer(i) => Ok(i as f64),
                Value::Float(f) if f.is_finite() => Ok(f),
                other => Err(err(&path, format!("expected finite numbers, found {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn ints(&mut self, key: &str) -> Result<Option<Vec<i64>>> {
        let path = self.path(key);
        let items = match self.take(key) {
            None => return Ok(None),
            Some(Value::Array(a)) => a,
            Some(v) => return Err(err(&path, format!("expected an array, got {}", type_name(&v)))),
        };
        items
            .into_iter()
            .map(|v| match v {
                Value::Integer(i) => Ok(i),
                other => Err(err(&path, format!("expected integers, found {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn point(&mut self, key: &str) -> Result<Option<Point>> {
        let path = self.path(key);
        match self.floats(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some(Point::new(v[0], v[1]))),
            Some(v) => Err(err(&path, format!("expected [x, y], got {} values", v.len()))),
        }
    }

    fn range(&mut self, key: &str) -> Result<Option<(i64, i64)>> {
        let path = self.path(key);
        match self.ints(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[0] <= v[1] => Ok(Some((v[0], v[1]))),
            Some(v) => Err(err(&path, format!("expected [start, end] with start <= end, got {v:?}"))),
        }
    }

    fn shape(&mut self, key: &str) -> Result<Option<WindowShapeSpec>> {
        let path = self.path(key);
        match self.string(key)?.as_deref() {
            None => Ok(None),
            Some("square") => Ok(Some(WindowShapeSpec::Square)),
            Some("disk") => Ok(Some(WindowShapeSpec::Disk)),
            Some(other) => Err(err(&path, format!("unknown shape \"{other}\" (square | disk)"))),
        }
    }

    fn charge(&mut self, key: &str) -> Result<i32> {
        let path = self.path(key);
        let l = self.int(key)?.ok_or_else(|| err(&path, "required"))?;
        i32::try_from(l).map_err(|_| err(&path, format!("charge {l} out of range")))
    }

    /// Errors on the first unread key, in sorted order.
    fn finish(self) -> Result<()> {
        match self.table.keys().min() {
            Some(k) => Err(err(&self.path(k), "unknown key")),
            None => Ok(()),
        }
    }
}

fn parse_object(sec: Option<Section>, kind: ExperimentKind) -> Result<ObjectSpec> {
    let Some(mut s) = sec else {
        if kind == ExperimentKind::Bell {
            return Ok(ObjectSpec::Disk {
                size: 160,
                radius: 60.0,
                center: Point::grid_center(160),
            });
        }
        return Err(err("object", "required section"));
    };
    let ty = s.string("type")?.ok_or_else(|| err("object.type", "required"))?;
    let default_size = if kind == ExperimentKind::Bell { 160 } else { 128 };
    let spec = if ty == "bitmap" {
        let path = s
            .string("path")?
            .ok_or_else(|| err("object.path", "required for bitmap objects"))?;
        ObjectSpec::Bitmap { path: path.into() }
    } else {
        let size = s.count("size", 1)?.unwrap_or(default_size);
        match ty.as_str() {
            "uniform" => ObjectSpec::Uniform {
                size,
                phase: s.float("phase")?.unwrap_or(0.0),
            },
            "disk" => {
                let radius = s
                    .float("radius")?
                    .unwrap_or(if kind == ExperimentKind::Bell { 60.0 } else { 40.0 });
                if !(radius > 0.0 && radius <= size as f64 / 2.0) {
                    return Err(err(
                        "object.radius",
                        format!("must lie in (0, {}], got {radius}", size as f64 / 2.0),
                    ));
                }
                ObjectSpec::Disk {
                    size,
                    radius,
                    center: s.point("center")?.unwrap_or(Point::grid_center(size)),
                }
            }
            "step" => ObjectSpec::Step {
                size,
                orientation_deg: s.float("orientation_deg")?.unwrap_or(0.0),
                center: s.point("center")?.unwrap_or(Point::grid_center(size)),
            },
            "spiral" => ObjectSpec::Spiral {
                size,
                l: s.charge("l")?,
                center: s.point("center")?.unwrap_or(Point::grid_center(size)),
            },
            other => {
                return Err(err(
                    "object.type",
                    format!("unknown object type \"{other}\" (uniform | disk | step | spiral | bitmap)"),
                ))
            }
        }
    };
    if kind == ExperimentKind::Bell && !matches!(spec, ObjectSpec::Disk { .. }) {
        return Err(err("object.type", "bell experiments require a disk object"));
    }
    s.finish()?;
    Ok(spec)
}

fn parse_filter(sec: Option<Section>) -> Result<FilterSpec> {
    let mut s = sec.ok_or_else(|| err("filter", "required section"))?;
    let ty = s.string("type")?.ok_or_else(|| err("filter.type", "required"))?;
    let spec = match ty.as_str() {
        "uniform" => FilterSpec::Uniform {
            phase: s.float("phase")?.unwrap_or(0.0),
        },
        "spiral" => FilterSpec::Spiral { l: s.charge("l")? },
        "step" => FilterSpec::Step {
            orientation_deg: s.float("orientation_deg")?.unwrap_or(0.0),
        },
        other => {
            return Err(err(
                "filter.type",
                format!("unknown filter type \"{other}\" (uniform | spiral | step)"),
            ))
        }
    };
    s.finish()?;
    Ok(spec)
}

fn parse_window(sec: Option<Section>, kind: ExperimentKind) -> Result<WindowSpec> {
    let mut size = 10;
    let mut shape = WindowShapeSpec::Square;
    if let Some(mut s) = sec {
        size = s.count("size", 1)?.unwrap_or(size);
        shape = s.shape("shape")?.unwrap_or(shape);
        s.finish()?;
    }
    if kind == ExperimentKind::Bell && shape != WindowShapeSpec::Square {
        return Err(err("window.shape", "bell experiments use square windows"));
    }
    Ok(WindowSpec { size, shape })
}

/// Object grid dimensions, reading bitmap headers where needed.
pub fn object_dims(spec: &ObjectSpec) -> Result<(usize, usize)> {
    match spec {
        ObjectSpec::Uniform { size, .. }
        | ObjectSpec::Disk { size, .. }
        | ObjectSpec::Step { size, .. }
        | ObjectSpec::Spiral { size, .. } => Ok((*size, *size)),
        ObjectSpec::Bitmap { path } => {
            let m = read_pbm(path)?;
            Ok((m.width(), m.height()))
        }
    }
}

fn parse_scan(sec: Option<Section>, object: &ObjectSpec, window: &WindowSpec) -> Result<ScanSpec> {
    let (w, h) = object_dims(object)?;
    let mut spec = ScanSpec {
        x_range: (0, w as i64 - window.size as i64),
        y_range: (0, h as i64 - window.size as i64),
        stride: 1,
    };
    if let Some(mut s) = sec {
        spec.x_range = s.range("x_range")?.unwrap_or(spec.x_range);
        spec.y_range = s.range("y_range")?.unwrap_or(spec.y_range);
        spec.stride = s.count("stride", 1)?.unwrap_or(1);
        s.finish()?;
    }
    if spec.x_range.0 > spec.x_range.1 || spec.y_range.0 > spec.y_range.1 {
        return Err(err("scan", "window does not fit inside the object; set x_range and y_range"));
    }
    Ok(spec)
}

fn parse_bell(sec: Option<Section>, object: &ObjectSpec) -> Result<BellSpec> {
    let mut spec = BellSpec {
        binning: Binning::default(),
        filter_orientations_deg: vec![0.0, 90.0, 45.0, 135.0],
        settings_deg: [0.0, 22.5, 45.0, 67.5],
        subtract_background: false,
    };
    if let Some(mut s) = sec {
        if let Some(r) = s.float("radial_px")? {
            spec.binning.radial_px = r;
        }
        if let Some(a) = s.float("azimuthal_deg")? {
            spec.binning.azimuthal_deg = a;
        }
        if let Some(o) = s.floats("filter_orientations_deg")? {
            if o.is_empty() {
                return Err(err("bell.filter_orientations_deg", "must not be empty"));
            }
            spec.filter_orientations_deg = o;
        }
        if let Some(v) = s.floats("settings_deg")? {
            spec.settings_deg = v.try_into().map_err(|v: Vec<f64>| {
                err(
                    "bell.settings_deg",
                    format!("expected [theta_A, theta_B, theta_A', theta_B'], got {} values", v.len()),
                )
            })?;
        }
        spec.subtract_background = s.boolean("subtract_background")?.unwrap_or(false);
        s.finish()?;
    }
    if let ObjectSpec::Disk { radius, .. } = object {
        spec.binning
            .validate(*radius)
            .map_err(|e| err("bell.azimuthal_deg", e))?;
    }
    Ok(spec)
}

fn parse_spectrum(sec: Option<Section>, object: &ObjectSpec) -> Result<SpectrumSpec> {
    let (w, h) = object_dims(object)?;
    let center = Point::new((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut spec = SpectrumSpec {
        center,
        radius: (w.min(h) as f64 / 2.0).min(32.0),
        shape: WindowShapeSpec::Disk,
        l_max: 5,
    };
    if let Some(mut s) = sec {
        spec.center = s.point("center")?.unwrap_or(spec.center);
        spec.radius = s.float("radius")?.unwrap_or(spec.radius);
        spec.shape = s.shape("shape")?.unwrap_or(spec.shape);
        if let Some(l) = s.count("l_max", 1)? {
            spec.l_max = i32::try_from(l).map_err(|_| err("spectrum.l_max", "too large"))?;
        }
        s.finish()?;
    }
    if spec.radius <= 0.0 {
        return Err(err("spectrum.radius", format!("must be positive, got {}", spec.radius)));
    }
    Ok(spec)
}

fn parse_speckle(sec: Option<Section>) -> Result<SpeckleSpec> {
    let mut spec = SpeckleSpec {
        samples: 100_000,
        size: 64,
    };
    if let Some(mut s) = sec {
        spec.samples = s.count("samples", 2)?.unwrap_or(spec.samples);
        spec.size = s.count("size", 1)?.unwrap_or(spec.size);
        s.finish()?;
    }
    Ok(spec)
}

/// Parses and resolves a config. `kind` comes from the subcommand; a config
/// may also name it with `experiment = "..."`, and the two must agree.
pub fn parse_config(text: &str, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("syntax error: {}", e.message())))?;
    let mut root = Section::new("", table);

    let named = match root.string("experiment")? {
        None => None,
        Some(s) => Some(
            ExperimentKind::parse(&s)
                .ok_or_else(|| err("experiment", format!("unknown experiment \"{s}\"")))?,
        ),
    };
    let kind = match (kind, named) {
        (Some(a), Some(b)) if a != b => {
            return Err(err(
                "experiment",
                format!("config is for \"{}\" but \"{}\" was requested", b.as_str(), a.as_str()),
            ))
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(err("experiment", "required")),
    };

    let seed = root
        .int("seed")?
        .map(|s| u64::try_from(s).map_err(|_| err("seed", format!("must be non-negative, got {s}"))))
        .transpose()?
        .unwrap_or(0);
    let mode = match root.string("mode")?.as_deref() {
        None | Some("analytic") => Mode::Analytic,
        Some("montecarlo") => Mode::MonteCarlo,
        Some(other) => return Err(err("mode", format!("unknown mode \"{other}\" (analytic | montecarlo)"))),
    };
    let mc_realizations = root.count("mc_realizations", 2)?.unwrap_or(10_000);
    let coherence_px = root.float("coherence_px")?.unwrap_or(0.0);
    let output = root.string("output")?.unwrap_or_else(|| "out".into()).into();
    let pixel_pitch_um = root.float("pixel_pitch_um")?.unwrap_or(8.3);

    let object_sec = root.table("object")?;
    let filter_sec = root.table("filter")?;
    let window_sec = root.table("window")?;
    let scan_sec = root.table("scan")?;
    let bell_sec = root.table("bell")?;
    let spectrum_sec = root.table("spectrum")?;
    let speckle_sec = root.table("speckle")?;

    let mut cfg = ExperimentConfig {
        kind,
        seed,
        mode,
        mc_realizations,
        coherence_px,
        output,
        pixel_pitch_um,
        object: None,
        filter: None,
        window: None,
        scan: None,
        bell: None,
        spectrum: None,
        speckle: None,
    };

    // sections belonging to other experiment kinds stay unread and are reported by finish()
    let mut leftover = Vec::new();
    match kind {
        ExperimentKind::Scan => {
            let object = parse_object(object_sec, kind)?;
            let filter = parse_filter(filter_sec)?;
            let window = parse_window(window_sec, kind)?;
            cfg.scan = Some(parse_scan(scan_sec, &object, &window)?);
            cfg.object = Some(object);
            cfg.filter = Some(filter);
            cfg.window = Some(window);
            leftover.extend([("bell", bell_sec), ("spectrum", spectrum_sec), ("speckle", speckle_sec)]);
        }
        ExperimentKind::Bell => {
            let object = parse_object(object_sec, kind)?;
            cfg.window = Some(parse_window(window_sec, kind)?);
            cfg.bell = Some(parse_bell(bell_sec, &object)?);
            cfg.object = Some(object);
            leftover.extend([
                ("filter", filter_sec),
                ("scan", scan_sec),
                ("spectrum", spectrum_sec),
                ("speckle", speckle_sec),
            ]);
        }
        ExperimentKind::Spectrum => {
            let object = parse_object(object_sec, kind)?;
            cfg.spectrum = Some(parse_spectrum(spectrum_sec, &object)?);
            cfg.object = Some(object);
            leftover.extend([
                ("filter", filter_sec),
                ("window", window_sec),
                ("scan", scan_sec),
                ("bell", bell_sec),
                ("speckle", speckle_sec),
            ]);
        }
        ExperimentKind::SpeckleCheck => {
            cfg.speckle = Some(parse_speckle(speckle_sec)?);
            leftover.extend([
                ("object", object_sec),
                ("filter", filter_sec),
                ("window", window_sec),
                ("scan", scan_sec),
                ("bell", bell_sec),
                ("spectrum", spectrum_sec),
            ]);
        }
    }
    if let Some((name, _)) = leftover.iter().find(|(_, s)| s.is_some()) {
        return Err(err(name, format!("section not used by {} experiments", kind.as_str())));
    }
    root.finish()?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mc_realizations < 2 {
            return Err(err("mc_realizations", format!("must be at least 2, got {}", self.mc_realizations)));
        }
        if !(self.coherence_px >= 0.0 && self.coherence_px.is_finite()) {
            return Err(err("coherence_px", format!("must be a finite non-negative number, got {}", self.coherence_px)));
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(n) = o.mc_realizations {
            self.mc_realizations = n;
        }
        if let Some(c) = o.coherence_px {
            self.coherence_px = c;
        }
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
        if o.subtract_background {
            match &mut self.bell {
                Some(b) => b.subtract_background = true,
                None => return Err(err("subtract_background", "only applies to bell experiments")),
            }
        }
        self.validate()
    }

    /// TOML rendering of the resolved config, defaults included.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "experiment = {}", quote(self.kind.as_str()));
        let _ = writeln!(w, "seed = {}", self.seed);
        let _ = writeln!(w, "mode = {}", quote(self.mode.as_str()));
        let _ = writeln!(w, "mc_realizations = {}", self.mc_realizations);
        let _ = writeln!(w, "coherence_px = {}", float(self.coherence_px));
        let _ = writeln!(w, "output = {}", quote(&self.output.to_string_lossy()));
        let _ = writeln!(w, "pixel_pitch_um = {}", float(self.pixel_pitch_um));

        if let Some(obj) = &self.object {
            let _ = writeln!(w, "\n[object]");
            match obj {
                ObjectSpec::Uniform { size, phase } => {
                    let _ = writeln!(w, "type = \"uniform\"\nsize = {size}\nphase = {}", float(*phase));
                }
                ObjectSpec::Disk { size, radius, center } => {
                    let _ = writeln!(
                        w,
                        "type = \"disk\"\nsize = {size}\nradius = {}\ncenter = {}",
                        float(*radius),
                        point(center)
                    );
                }
                ObjectSpec::Step {
                    size,
                    orientation_deg,
                    center,
                } => {
                    let _ = writeln!(
                        w,
                        "type = \"step\"\nsize = {size}\norientation_deg = {}\ncenter = {}",
                        float(*orientation_deg),
                        point(center)
                    );
                }
                ObjectSpec::Spiral { size, l, center } => {
                    let _ = writeln!(w, "type = \"spiral\"\nsize = {size}\nl = {l}\ncenter = {}", point(center));
                }
                ObjectSpec::Bitmap { path } => {
                    let _ = writeln!(w, "type = \"bitmap\"\npath = {}", quote(&path.to_string_lossy()));
                }
            }
        }
        if let Some(f) = &self.filter {
            let _ = writeln!(w, "\n[filter]");
            match f {
                FilterSpec::Uniform { phase } => {
                    let _ = writeln!(w, "type = \"uniform\"\nphase = {}", float(*phase));
                }
                FilterSpec::Spiral { l } => {
                    let _ = writeln!(w, "type = \"spiral\"\nl = {l}");
                }
                FilterSpec::Step { orientation_deg } => {
                    let _ = writeln!(w, "type = \"step\"\norientation_deg = {}", float(*orientation_deg));
                }
            }
        }
        if let Some(win) = &self.window {
            let _ = writeln!(w, "\n[window]\nsize = {}\nshape = {}", win.size, quote(win.shape.as_str()));
        }
        if let Some(s) = &self.scan {
            let _ = writeln!(
                w,
                "\n[scan]\nx_range = [{}, {}]\ny_range = [{}, {}]\nstride = {}",
                s.x_range.0, s.x_range.1, s.y_range.0, s.y_range.1, s.stride
            );
        }
        if let Some(b) = &self.bell {
            let _ = writeln!(
                w,
                "\n[bell]\nradial_px = {}\nazimuthal_deg = {}\nfilter_orientations_deg = {}\nsettings_deg = {}\nsubtract_background = {}",
                float(b.binning.radial_px),
                float(b.binning.azimuthal_deg),
                floats(&b.filter_orientations_deg),
                floats(&b.settings_deg),
                b.subtract_background
            );
        }
        if let Some(s) = &self.spectrum {
            let _ = writeln!(
                w,
                "\n[spectrum]\ncenter = {}\nradius = {}\nshape = {}\nl_max = {}",
                point(&s.center),
                float(s.radius),
                quote(s.shape.as_str()),
                s.l_max
            );
        }
        if let Some(s) = &self.speckle {
            let _ = writeln!(w, "\n[speckle]\nsamples = {}\nsize = {}", s.samples, s.size);
        }
        out
    }
}

fn quote(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Float literal that TOML reads back as the same `f64`.
fn float(v: f64) -> String {
    format!("{v:?}")
}

fn floats(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| float(*x)).collect();
    format!("[{}]", items.join(", "))
}

fn point(p: &Point) -> String {
    format!("[{}, {}]", float(p.x), float(p.y))
}
