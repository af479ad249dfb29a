use std::f64::consts::PI;

use resolab::determinants::DetConfig;
use resolab::distortion::{all_eigenvalues, build_distorted, ScalingProfile};
use resolab::freefield::{SpectralRegion, SqrtBranch};
use resolab::potentials::Potential;
use resolab::resonances::{locate_resonances, SearchConfig};
use resolab::ssf::*;

fn physical() -> DetConfig {
    DetConfig::new(SqrtBranch::new(-0.5, PI + 0.5).unwrap())
}

#[test]
fn bound_state_carries_unit_weight() {
    let pot = Potential::box_potential(1.0, -1.0).unwrap();
    let op = build_distorted(&pot, &ScalingProfile::dilation(0.0), 1.0, 8.0, 1600).unwrap();
    let bound: Vec<f64> = all_eigenvalues(&op).unwrap().into_iter().filter(|l| l.re < 0.0).map(|l| l.re).collect();
    assert_eq!(bound.len(), 1);
    let e = bound[0];
    let jump = integrated_ssf(1, &pot, e - 0.05, e + 0.05, 1.0, 1e-3, &physical()).unwrap();
    assert!((jump - 1.0).abs() < 0.05, "bound state {e}: {jump}");
    // nothing away from the eigenvalue
    let quiet = integrated_ssf(1, &pot, e - 0.2, e - 0.1, 1.0, 1e-3, &physical()).unwrap();
    assert!(quiet.abs() < 0.05, "{quiet}");
}

#[test]
fn lorentzian_part_is_positive_near_resonances() {
    let pot = Potential::unit_box(1.0).unwrap();
    let region = SpectralRegion::with_defaults(6.0).unwrap();
    let rs = locate_resonances(&pot, &region, 0.5, &SearchConfig::for_region(&region)).unwrap();
    assert!(rs.count() > 0);
    for w in rs.positions() {
        assert!(w.im < 0.0);
        for t in [-0.1, 0.0, 0.1] {
            assert!(lorentzian(w.re + t, &rs) > 0.0);
        }
    }
}

#[test]
fn breit_wigner_background_is_smooth() {
    let pot = Potential::unit_box(1.0).unwrap();
    let region = SpectralRegion::with_defaults(6.0).unwrap();
    let h = 0.5;
    let rs = locate_resonances(&pot, &region, h, &SearchConfig::for_region(&region)).unwrap();
    let lambdas: Vec<f64> = (0..120).map(|i| 0.6 + 3.4 * i as f64 / 119.0).collect();
    let prof = ssf_profile(1, &pot, &lambdas, h, 1e-4, &DetConfig::for_region(&region)).unwrap();
    let bw = breit_wigner_decompose(&prof, &rs).unwrap();
    let d2 = |v: &[f64]| v.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).fold(0.0, f64::max);
    let (b, l) = (d2(&bw.background_part), d2(&bw.lorentzian_part));
    assert!(l > 0.0 && b <= 100.0 * l, "background {b}, lorentzian {l}");
    for ((x, lo), bg) in prof.xi_prime.iter().zip(&bw.lorentzian_part).zip(&bw.background_part) {
        assert!((x - lo - bg).abs() < 1e-14 * (1.0 + x.abs()));
    }
}

#[test]
fn free_profile_vanishes() {
    let prof = ssf_profile(2, &Potential::zero(), &[0.5, 1.0, 2.0], 0.3, 1e-3, &physical()).unwrap();
    assert!(prof.xi_prime.iter().all(|&x| x == 0.0));
    assert!(ssf_profile(1, &Potential::zero(), &[1.0, 0.5], 0.3, 1e-3, &physical()).is_err());
}

#[test]
fn birman_krein_holds_for_a_smooth_bump() {
    let pot = Potential::gaussian_bump(1.0, 0.8).unwrap();
    let lambdas: Vec<f64> = (0..30).map(|i| 0.5 + 0.1 * i as f64).collect();
    let rep = birman_krein_check(&pot, &lambdas, 1.0, 1e-3, &physical()).unwrap();
    let scale = rep.max_xi_prime;
    assert!(rep.max_deviation < 0.05 * 2.0 * PI * scale, "{rep:?}");
}
