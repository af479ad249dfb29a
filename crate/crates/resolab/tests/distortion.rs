use num_complex::Complex64;
use resolab::distortion::*;
use resolab::freefield::SpectralRegion;
use resolab::potentials::Potential;
use resolab::resonances::{locate_resonances, SearchConfig};

fn setup() -> (Potential, SpectralRegion, ScalingProfile) {
    let pot = Potential::unit_box(1.0).unwrap();
    let region = SpectralRegion::new(0.25, 4.0, 0.45, 0.3).unwrap();
    (pot, region, ScalingProfile::new(1.05, 2.1, 1.5, 0.6).unwrap())
}

fn nearest(x: Complex64, ys: &[(Complex64, usize)]) -> f64 {
    ys.iter().map(|(y, _)| (x - y).norm()).fold(f64::INFINITY, f64::min)
}

#[test]
fn spectrum_stays_in_the_rotated_sector() {
    let (pot, _, sp) = setup();
    let op = build_distorted(&pot, &sp, 0.5, 8.4, 1600).unwrap();
    let ev = all_eigenvalues(&op).unwrap();
    let low: Vec<Complex64> = ev.into_iter().filter(|l| l.norm() > 0.05 && l.norm() < 20.0).collect();
    assert!(low.len() > 20);
    for l in low {
        let a = l.arg();
        assert!(a >= -2.0 * sp.theta - 0.1 && a <= 0.01, "{l} arg {a}");
    }
}

#[test]
fn isolated_eigenvalues_ignore_the_box_size() {
    let (pot, region, sp) = setup();
    // same step 0.0105 and aligned nodes for both boxes
    let a = isolated_eigenvalues(&build_distorted(&pot, &sp, 0.5, 8.4, 1599).unwrap(), &region, 0.05).unwrap();
    let b = isolated_eigenvalues(&build_distorted(&pot, &sp, 0.5, 12.6, 2399).unwrap(), &region, 0.05).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a.len(), b.len());
    for (x, m) in &a {
        let d = nearest(*x, &b);
        assert!(d < 1e-6, "{x}: drift {d}");
        assert_eq!(*m, b.iter().find(|(y, _)| (x - y).norm() == d).unwrap().1);
    }
}

#[test]
fn grid_refinement_converges_to_determinant_zeros() {
    let (pot, region, sp) = setup();
    let rs = locate_resonances(&pot, &region, 0.5, &SearchConfig::for_region(&region)).unwrap();
    let coarse = isolated_eigenvalues(&build_distorted(&pot, &sp, 0.5, 8.4, 800).unwrap(), &region, 0.05).unwrap();
    let fine = isolated_eigenvalues(&build_distorted(&pot, &sp, 0.5, 8.4, 1600).unwrap(), &region, 0.05).unwrap();
    assert_eq!(coarse.len(), fine.len());
    for w in rs.positions().into_iter().filter(|w| w.norm() < 3.9 && w.arg() > -0.85) {
        let (ec, ef) = (nearest(w, &coarse), nearest(w, &fine));
        assert!(ef < 1e-3, "{w}: {ef}");
        // second order in the step
        assert!(ef < 0.35 * ec, "{w}: {ec} -> {ef}");
    }
}

#[test]
fn theta_independence_holds_for_the_barrier() {
    let (pot, region, sp) = setup();
    let sp2 = ScalingProfile::new(1.05, 2.1, 1.5, 0.75).unwrap();
    let rep = theta_independence_check(&pot, &[sp, sp2], &region, 0.5, 8.4, 1600).unwrap();
    assert!(!rep.first.is_empty());
    assert!(rep.max_distance < 1e-3 && rep.multiplicities_match, "{rep:?}");
    assert!(theta_independence_check(&pot, &[sp2, sp], &region, 0.5, 8.4, 1600).is_err());
}

#[test]
fn invalid_setups_are_rejected() {
    let pot = Potential::unit_box(1.0).unwrap();
    let inner = ScalingProfile::new(0.9, 2.0, 1.5, 0.5).unwrap();
    assert!(build_distorted(&pot, &inner, 0.5, 8.4, 1600).is_err());
    let sp = ScalingProfile::new(1.05, 2.1, 1.5, 0.5).unwrap();
    assert!(build_distorted(&pot, &sp, 0.5, 8.0, 1600).is_err());
    assert!(build_distorted(&pot, &sp, 0.5, 8.4, 400).is_err());
}
