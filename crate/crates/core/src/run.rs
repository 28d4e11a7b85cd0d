//! Experiment dispatch: resolved config in, output files out.

use std::path::PathBuf;

use crate::bell::{self, rim_tangent, BellResult, DiskObject, Settings};
use crate::config::{ExperimentConfig, ExperimentKind, FilterSpec, ObjectSpec, WindowShapeSpec};
use crate::correlator::{Estimator, Mode, MonteCarlo};
use crate::error::{Error, Result};
use crate::masks::{
    azimuthal_spectrum, make_disk, make_spiral, make_step, make_uniform, read_pbm, PhaseMask, Point, Window, WindowShape,
};
use crate::output::{encode_csv, encode_pgm16, num, scan_csv, write_artifacts, Artifact};
use crate::scan::{normalize_image, run_scan, OffsetGrid, ScanConfig};
use crate::speckle::{collect_center_samples, SampleMoments};

fn estimator(cfg: &ExperimentConfig) -> Estimator {
    match cfg.mode {
        Mode::Analytic => Estimator::Analytic,
        Mode::MonteCarlo => Estimator::MonteCarlo(MonteCarlo {
            realizations: cfg.mc_realizations,
            seed: cfg.seed,
            coherence_px: cfg.coherence_px,
        }),
    }
}

pub fn build_object(spec: &ObjectSpec) -> Result<PhaseMask> {
    match spec {
        ObjectSpec::Uniform { size, phase } => make_uniform(*size, *phase),
        ObjectSpec::Disk { size, radius, center } => make_disk(*size, *radius, *center),
        ObjectSpec::Step {
            size,
            orientation_deg,
            center,
        } => make_step(*size, orientation_deg.to_radians(), *center),
        ObjectSpec::Spiral { size, l, center } => make_spiral(*size, *l, *center),
        ObjectSpec::Bitmap { path } => read_pbm(path),
    }
}

pub fn build_filter(spec: &FilterSpec, size: usize) -> Result<PhaseMask> {
    let center = Point::grid_center(size);
    match spec {
        FilterSpec::Uniform { phase } => make_uniform(size, *phase),
        FilterSpec::Spiral { l } => make_spiral(size, *l, center),
        FilterSpec::Step { orientation_deg } => make_step(size, orientation_deg.to_radians(), center),
    }
}

fn window_for(shape: WindowShapeSpec, size: usize) -> Window {
    match shape {
        WindowShapeSpec::Square => Window::square(0, 0, size),
        WindowShapeSpec::Disk => Window::disk(Point::grid_center(size), size as f64 / 2.0),
    }
}

fn missing(section: &str) -> Error {
    Error::Config(format!("{section}: required section"))
}

fn resolved(cfg: &ExperimentConfig) -> Artifact {
    Artifact::new("config.resolved", cfg.to_toml().into_bytes())
}

fn scan_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let object = build_object(cfg.object.as_ref().ok_or_else(|| missing("object"))?)?;
    let window = cfg.window.ok_or_else(|| missing("window"))?;
    let filter = build_filter(cfg.filter.as_ref().ok_or_else(|| missing("filter"))?, window.size)?;
    let scan = cfg.scan.ok_or_else(|| missing("scan"))?;
    let img = run_scan(&ScanConfig {
        object,
        filter,
        window: window_for(window.shape, window.size),
        offsets: OffsetGrid {
            x_range: scan.x_range,
            y_range: scan.y_range,
            stride: scan.stride,
        },
        estimator: estimator(cfg),
    })?;
    let norm = normalize_image(&img)?;
    Ok(vec![
        Artifact::new("image.pgm", encode_pgm16(norm.width, norm.height, &norm.values)),
        Artifact::new("scan.csv", scan_csv(&img)),
        resolved(cfg),
    ])
}

fn deg(rad: f64) -> f64 {
    rad.to_degrees()
}

fn settings_from_deg(d: [f64; 4]) -> Settings {
    Settings {
        theta_a: d[0].to_radians(),
        theta_b: d[1].to_radians(),
        theta_a_prime: d[2].to_radians(),
        theta_b_prime: d[3].to_radians(),
    }
}

/// Curves, E table and S for a bell config.
pub fn bell_result(cfg: &ExperimentConfig) -> Result<BellResult> {
    let spec = cfg.bell.as_ref().ok_or_else(|| missing("bell"))?;
    let Some(ObjectSpec::Disk { size, radius, center }) = cfg.object.clone() else {
        return Err(Error::Config("object.type: bell experiments require a disk object".into()));
    };
    let window = cfg.window.ok_or_else(|| missing("window"))?;
    let disk = DiskObject::new(size, radius, center)?;
    let orientations: Vec<f64> = spec.filter_orientations_deg.iter().map(|d| d.to_radians()).collect();
    let curves = bell::sweep_curves(&disk, window.size, &orientations, spec.binning, &estimator(cfg))?;
    bell::chsh_s(curves, settings_from_deg(spec.settings_deg), spec.subtract_background)
}

fn bell_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let spec = cfg.bell.as_ref().ok_or_else(|| missing("bell"))?;
    let result = bell_result(cfg)?;
    let mut out = Vec::new();
    for (curve, label) in result.curves.iter().zip(&spec.filter_orientations_deg) {
        let rows = curve.samples.iter().enumerate().map(|(k, s)| {
            let theta_b_deg = (k as f64 + 0.5) * curve.binning.azimuthal_deg;
            vec![
                num(curve.theta_a),
                num(theta_b_deg),
                num(s.c),
                num(s.stderr),
                num((theta_b_deg + 90.0) % 180.0),
            ]
        });
        out.push(Artifact::new(
            format!("curve_{}.csv", num(*label)),
            encode_csv(&["theta_A", "theta_B_deg", "C", "stderr", "tangent_deg"], rows),
        ));
    }

    let rows = result.terms.iter().map(|t| {
        vec![
            num(deg(t.theta_a)),
            num(deg(t.theta_b)),
            num(t.sign),
            num(t.numerator),
            num(t.denominator),
            num(t.e),
        ]
    });
    out.push(Artifact::new(
        "e_table.csv",
        encode_csv(
            &["theta_A_deg", "theta_B_deg", "sign", "numerator", "denominator", "E"],
            rows,
        ),
    ));

    let d = spec.settings_deg;
    let summary = vec![
        num(result.s),
        num(d[0]),
        num(d[1]),
        num(d[2]),
        num(d[3]),
        num(deg(rim_tangent(d[1].to_radians()))),
        num(deg(rim_tangent(d[3].to_radians()))),
        result.subtract_background.to_string(),
        num(result.max_abs_e()),
        num(bell::E_BOUND),
        num(bell::S_BOUND),
        result.within_thermal_bound().to_string(),
    ];
    out.push(Artifact::new(
        "summary.csv",
        encode_csv(
            &[
                "S",
                "theta_A_deg",
                "theta_B_deg",
                "theta_A_prime_deg",
                "theta_B_prime_deg",
                "tangent_B_deg",
                "tangent_B_prime_deg",
                "subtract_background",
                "max_abs_E",
                "E_bound",
                "S_bound",
                "within_thermal_bound",
            ],
            [summary],
        ),
    ));
    out.push(resolved(cfg));
    Ok(out)
}

fn spectrum_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let mask = build_object(cfg.object.as_ref().ok_or_else(|| missing("object"))?)?;
    let spec = cfg.spectrum.ok_or_else(|| missing("spectrum"))?;
    let window = match spec.shape {
        WindowShapeSpec::Disk => Window::disk(spec.center, spec.radius),
        WindowShapeSpec::Square => Window {
            center: spec.center,
            shape: WindowShape::Square {
                half_width: spec.radius,
            },
        },
    };
    let s = azimuthal_spectrum(&mask, &window, spec.l_max)?;
    let rows = s
        .iter()
        .map(|(l, c)| vec![l.to_string(), num(c.re), num(c.im), num(c.norm_sqr())]);
    Ok(vec![
        Artifact::new("spectrum.csv", encode_csv(&["l", "re", "im", "power"], rows)),
        resolved(cfg),
    ])
}

fn speckle_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let spec = cfg.speckle.ok_or_else(|| missing("speckle"))?;
    let samples = collect_center_samples(spec.size, spec.size, spec.samples, cfg.seed, cfg.coherence_px)?;
    let m = SampleMoments::from_samples(&samples);
    let stats = [
        ("mean_intensity", m.mean_intensity, 1.0),
        ("re_mean_e2", m.pseudo_variance_re, 0.0),
        ("im_mean_e2", m.pseudo_variance_im, 0.0),
        ("mean_intensity_sq", m.fourth_moment, 2.0),
        ("contrast", m.contrast, 1.0),
    ];
    let rows = stats.iter().map(|(name, moment, expected)| {
        vec![
            name.to_string(),
            num(moment.value),
            num(moment.stderr),
            num(*expected),
            num(moment.z_score(*expected)),
        ]
    });
    Ok(vec![
        Artifact::new(
            "speckle.csv",
            encode_csv(&["statistic", "value", "stderr", "expected", "z_score"], rows),
        ),
        resolved(cfg),
    ])
}

/// Every output file of a run, in write order. Pure in the config.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Scan => scan_artifacts(cfg),
        ExperimentKind::Bell => bell_artifacts(cfg),
        ExperimentKind::Spectrum => spectrum_artifacts(cfg),
        ExperimentKind::SpeckleCheck => speckle_artifacts(cfg),
    }
}

/// Computes all outputs, then writes them into `cfg.output`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let artifacts = execute(cfg)?;
    write_artifacts(&cfg.output, &artifacts)
}
