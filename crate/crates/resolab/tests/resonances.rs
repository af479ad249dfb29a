mod common;

use std::f64::consts::PI;

use common::{box_resonance, c};
use num_complex::Complex64;
use resolab::counterexample::{blowup_region, blowup_window};
use resolab::determinants::{log_det_along_path, perturbation_determinant, DetConfig};
use resolab::freefield::SpectralRegion;
use resolab::potentials::Potential;
use resolab::resonances::*;

fn barrier() -> Potential {
    Potential::unit_box(1.0).unwrap()
}

/// Closed boundary of a polar rectangle, counterclockwise in `(ln r, arg)`.
fn polar_loop(r0: f64, r1: f64, a0: f64, a1: f64, n: usize) -> Vec<Complex64> {
    let mut pts = Vec::new();
    let lerp = |x: f64, y: f64, s: f64| x + (y - x) * s;
    let (u0, u1) = (r0.ln(), r1.ln());
    for i in 0..n {
        pts.push(Complex64::from_polar(lerp(u0, u1, i as f64 / n as f64).exp(), a0));
    }
    for i in 0..n {
        pts.push(Complex64::from_polar(r1, lerp(a0, a1, i as f64 / n as f64)));
    }
    for i in 0..n {
        pts.push(Complex64::from_polar(lerp(u1, u0, i as f64 / n as f64).exp(), a1));
    }
    for i in 0..=n {
        pts.push(Complex64::from_polar(r0, lerp(a1, a0, i as f64 / n as f64)));
    }
    pts
}

#[test]
fn box_well_resonance_matches_closed_form() {
    let region = SpectralRegion::with_defaults(12.0).unwrap();
    let pot = Potential::box_potential(1.0, -1.0).unwrap();
    let rs = locate_resonances(&pot, &region, 1.0, &SearchConfig::for_region(&region)).unwrap();
    assert_eq!(rs.count(), 1);
    let w = rs.positions()[0];
    let exact = box_resonance(w, 1.0, 1.0, -1.0, region.arg_lo());
    assert!((w - exact).norm() < 1e-8, "{w} {exact}");
    assert!((w - c(1.9108120160605315, -8.9993496876525903)).norm() < 1e-8);
}

#[test]
fn refining_boundary_sampling_keeps_the_winding() {
    let region = SpectralRegion::with_defaults(6.0).unwrap();
    let base = SearchConfig::for_region(&region);
    let fine = SearchConfig { edge_points: 2 * base.edge_points, ..base };
    for h in [1.0, 0.5] {
        let a = locate_resonances(&barrier(), &region, h, &base).unwrap();
        let b = locate_resonances(&barrier(), &region, h, &fine).unwrap();
        assert_eq!(a.boundary_winding, b.boundary_winding);
        assert_eq!(a.count(), b.count());
        assert_eq!(a.count() as i64, a.boundary_winding);
        for (x, y) in a.positions().iter().zip(b.positions()) {
            assert!((x - y).norm() < 1e-8);
        }
    }
}

#[test]
fn sub_box_counts_match_windings() {
    let region = SpectralRegion::with_defaults(6.0).unwrap();
    let h = 0.5;
    let rs = locate_resonances(&barrier(), &region, h, &SearchConfig::for_region(&region)).unwrap();
    let det = DetConfig::for_region(&region);
    let (lo, hi) = (region.arg_lo() + 0.05, region.arg_hi() - 0.05);
    let cuts = [(0.3, 2.1, lo, hi), (2.1, 5.8, lo, -0.6), (2.1, 5.8, -0.6, hi)];
    let mut total = 0;
    for (r0, r1, a0, a1) in cuts {
        let inside = rs
            .resonances
            .iter()
            .filter(|r| {
                let (m, a) = (r.w.norm(), region.branch.arg(r.w).unwrap());
                m > r0 && m < r1 && a > a0 && a < a1
            })
            .map(|r| r.multiplicity as i64)
            .sum::<i64>();
        let l = log_det_along_path(1, &barrier(), &polar_loop(r0, r1, a0, a1, 400), h, &det).unwrap();
        assert_eq!(winding_number(&l).unwrap(), inside, "box {r0} {r1} {a0} {a1}");
        total += inside;
    }
    assert!(total > 0);
}

#[test]
fn resonances_pair_across_the_negative_axis() {
    let theta0 = (PI + 0.5) / 2.0;
    let region = SpectralRegion::new(0.3, 6.0, theta0, 0.3).unwrap();
    let in_strip = |w: Complex64| (region.branch.arg(w).unwrap() + PI).abs() < 0.4;
    let det = DetConfig::for_region(&region);
    for (pot, h) in [(Potential::box_potential(1.0, -4.0).unwrap(), 0.5), (barrier(), 2.0)] {
        let rs = locate_resonances(&pot, &region, h, &SearchConfig::for_region(&region)).unwrap();
        let strip: Vec<Complex64> = rs.positions().into_iter().filter(|&w| in_strip(w)).collect();
        assert!(!strip.is_empty());
        for &w in &strip {
            let d = rs.positions().iter().map(|v| (v - w.conj()).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-7, "{w} has no mirror image ({d})");
        }
        for (r, t) in [(0.7, 0.1), (2.0, 0.3), (4.5, 0.2)] {
            let z = Complex64::from_polar(r, -PI + t);
            let a = perturbation_determinant(1, &pot, z, h, &det).unwrap().value;
            let b = perturbation_determinant(1, &pot, z.conj(), h, &det).unwrap().value;
            assert!((a.conj() - b).norm() < 1e-10 * a.norm(), "{z}: {a} {b}");
        }
    }
}

#[test]
fn background_is_single_valued_on_closed_loops() {
    let region = SpectralRegion::with_defaults(6.0).unwrap();
    let cfg = SearchConfig::for_region(&region);
    let rs = locate_resonances(&barrier(), &region, 1.0, &cfg).unwrap();
    assert!(rs.count() > 0);
    let path = polar_loop(0.5, 5.5, region.arg_lo() + 0.1, 0.2, 120);
    for p in 1..=2 {
        let bg = factor_background(p, &barrier(), &rs, &path, &cfg.det).unwrap();
        let (first, last) = (bg.samples[0].phi, bg.samples.last().unwrap().phi);
        assert!((first - last).norm() < 1e-8, "p={p}: {first} {last}");
    }
}

#[test]
fn well_resonances_multiply_as_h_shrinks() {
    let region = SpectralRegion::with_defaults(12.0).unwrap();
    let pot = Potential::box_potential(1.0, -1.0).unwrap();
    let cfg = SearchConfig::for_region(&region);
    let coarse = locate_resonances(&pot, &region, 1.0, &cfg).unwrap();
    let fine = locate_resonances(&pot, &region, 0.5, &cfg).unwrap();
    assert!(fine.count() > coarse.count(), "{} {}", coarse.count(), fine.count());
    assert_eq!(fine.count() as i64, fine.boundary_winding);
}

#[test]
fn free_operator_scaling_table_is_zero() {
    let region = blowup_region().unwrap();
    let rows = scaling_study(2, &Potential::zero(), &region, &[0.5, 0.25], &blowup_window(), 4, 0.5, &SearchConfig::for_region(&region)).unwrap();
    assert!(rows.iter().all(|r| r.sup == 0.0 && r.weighted_sup == 0.0 && r.resonance_count == 0));
}
