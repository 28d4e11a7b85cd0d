//! Randomized invariants of masks, overlaps, scans and the CHSH combination.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use ghost_edge::bell::{chsh_e, chsh_terms, BellCurve, Binning, CurveSample};
use ghost_edge::correlator::{analytic_g2, overlap, Estimator, Offset};
use ghost_edge::masks::{azimuthal_spectrum, make_disk, make_spiral, make_step, PhaseMask, Point, Window};
use ghost_edge::scan::{run_scan, OffsetGrid, ScanConfig, ScanImage};
use proptest::prelude::*;

fn mask_from(n: usize, phases: &[f64]) -> PhaseMask {
    PhaseMask::from_fn(n, n, "random", |x, y| phases[y * n + x]).unwrap()
}

fn phases(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n * n)
}

fn analytic_scan(object: PhaseMask, filter: PhaseMask, offsets: OffsetGrid) -> ScanImage {
    let w = filter.width();
    run_scan(&ScanConfig {
        object,
        filter,
        window: Window::square(0, 0, w),
        offsets,
        estimator: Estimator::Analytic,
    })
    .unwrap()
}

fn mirrored(m: &PhaseMask) -> PhaseMask {
    let n = m.width();
    PhaseMask::from_fn(n, m.height(), "mirrored", |x, y| m.phase(n - 1 - x, y)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_phases_lie_in_one_turn(
        l in -6i32..=6,
        orientation in -10.0..10.0f64,
        cx in 0.0..15.0f64,
        cy in 0.0..15.0f64,
        raw in phases(6),
    ) {
        let c = Point::new(cx, cy);
        let masks = [
            make_spiral(16, l, c).unwrap(),
            make_step(16, orientation, c).unwrap(),
            mask_from(6, &raw),
        ];
        for m in &masks {
            prop_assert!(m.phases().iter().all(|&p| (0.0..TAU).contains(&p)));
        }
    }

    #[test]
    fn global_phase_leaves_moduli_unchanged(obj in phases(8), fil in phases(8), delta in -7.0..7.0f64) {
        let (o, f) = (mask_from(8, &obj), mask_from(8, &fil));
        let w = Window::square(0, 0, 8);
        let a = overlap(&o, &f, Offset::ZERO, &w).unwrap().gamma.norm();
        let b = overlap(&o.with_global_phase(delta), &f, Offset::ZERO, &w).unwrap().gamma.norm();
        prop_assert!((a - b).abs() <= 1e-12 * 64.0);
        let dw = Window::disk(Point::grid_center(8), 4.0);
        let s0 = azimuthal_spectrum(&o, &dw, 3).unwrap();
        let s1 = azimuthal_spectrum(&o.with_global_phase(delta), &dw, 3).unwrap();
        for l in -3..=3 {
            prop_assert!((s0.power(l) - s1.power(l)).abs() <= 1e-12);
        }
    }

    #[test]
    fn overlap_is_bounded_and_g2_thermal(obj in phases(10), fil in phases(6), dx in -3i64..8, dy in -3i64..8) {
        let (o, f) = (mask_from(10, &obj), mask_from(6, &fil));
        let ov = overlap(&o, &f, Offset::new(dx, dy), &Window::square(0, 0, 6));
        if let Ok(ov) = ov {
            let bound = ov.test_count.min(ov.reference_count) as f64;
            prop_assert!(ov.gamma.norm() <= bound + 1e-9);
            let g2 = analytic_g2(ov.gamma, ov.test_count, ov.reference_count).unwrap().g2;
            prop_assert!((1.0..=2.0 + 1e-12).contains(&g2));
        }
    }

    #[test]
    fn swapping_arms_conjugates_overlap(a in phases(7), b in phases(7)) {
        let (ma, mb) = (mask_from(7, &a), mask_from(7, &b));
        let w = Window::square(0, 0, 7);
        let ab = overlap(&ma, &mb, Offset::ZERO, &w).unwrap().gamma;
        let ba = overlap(&mb, &ma, Offset::ZERO, &w).unwrap().gamma;
        prop_assert!((ab - ba.conj()).norm() <= 1e-12);
    }

    #[test]
    fn scan_is_translation_equivariant(cx in 14.0..18.0f64, cy in 14.0..18.0f64, r in 4.0..7.0f64, sx in 0i64..4, sy in 0i64..4) {
        let n = 40;
        let base = make_disk(n, r, Point::new(cx, cy)).unwrap();
        let moved = make_disk(n, r, Point::new(cx + sx as f64, cy + sy as f64)).unwrap();
        let filter = make_spiral(6, 1, Point::grid_center(6)).unwrap();
        let g = |x0: i64, y0: i64| OffsetGrid { x_range: (x0, x0 + 20), y_range: (y0, y0 + 20), stride: 1 };
        let a = analytic_scan(base, filter.clone(), g(4, 4));
        let b = analytic_scan(moved, filter, g(4 + sx, 4 + sy));
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn mirroring_object_and_filter_mirrors_image(obj in phases(14), fil in phases(5)) {
        let (o, f) = (mask_from(14, &obj), mask_from(5, &fil));
        let grid = OffsetGrid::interior(14, 5, 1);
        let a = analytic_scan(o.clone(), f.clone(), grid);
        let b = analytic_scan(mirrored(&o), mirrored(&f), grid);
        for j in 0..a.height {
            for i in 0..a.width {
                let (va, vb) = (a.value(i, j), b.value(a.width - 1 - i, j));
                prop_assert!((va - vb).abs() <= 1e-12, "{} vs {}", va, vb);
            }
        }
    }

    #[test]
    fn pi_flip_of_object_leaves_image_unchanged(obj in phases(12), fil in phases(4)) {
        let (o, f) = (mask_from(12, &obj), mask_from(4, &fil));
        let grid = OffsetGrid::interior(12, 4, 1);
        let a = analytic_scan(o.with_global_phase(PI), f.clone(), grid);
        let b = analytic_scan(o, f, grid);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn theta_star_relabeling_negates_e(
        cs in prop::collection::vec(1.0..2.0f64, 4 * 60),
        a_index in 0usize..4,
        b in -7.0..7.0f64,
    ) {
        let binning = Binning::default();
        let orientations = [0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4];
        let curves: Vec<BellCurve> = orientations
            .iter()
            .enumerate()
            .map(|(i, &theta_a)| BellCurve {
                theta_a,
                samples: (0..60)
                    .map(|k| CurveSample { theta_b: binning.bin_center(k), c: cs[i * 60 + k], stderr: 0.0 })
                    .collect(),
                binning,
            })
            .collect();
        let a = orientations[a_index];
        let e = chsh_e(&curves, a, b, false).unwrap();
        let flipped = chsh_e(&curves, a + FRAC_PI_2, b, false).unwrap();
        prop_assert!((e + flipped).abs() <= 1e-14);
        prop_assert!(e.abs() <= 1.0 / 3.0 + 1e-15);
        let (nr, dr) = chsh_terms(&curves, a, b, false).unwrap();
        let (ns, ds) = chsh_terms(&curves, a, b, true).unwrap();
        prop_assert!((nr - ns).abs() <= 1e-14 && (dr - ds - 4.0).abs() <= 1e-14);
    }
}
