mod common;

use common::{box_det, c};
use faer::Mat;
use num_complex::Complex64;
use resolab::determinants::t_pk_trace;
use resolab::grid::{operator, GridSpec, Stencil};
use resolab::potentials::Potential;
use resolab::special::loglog_slope;
use resolab::zeta::*;

fn well() -> Potential {
    Potential::box_potential(1.0, -1.0).unwrap()
}

fn physical_ln_det(z: Complex64, p: usize) -> Complex64 {
    let k = z.sqrt();
    let k = if k.im < 0.0 { -k } else { k };
    let d = box_det(k, 1.0, 1.0, -1.0).ln();
    // D_2 = D_1 e^{-tr V R0}, tr V R0 = i int V / (2 h k)
    if p == 2 {
        d - c(0.0, 1.0) * (-2.0) / (2.0 * k)
    } else {
        d
    }
}

#[test]
fn coincides_with_fredholm_determinant() {
    let pot = well();
    let g = default_grid(&pot, 1.0, 0.01).unwrap();
    for (p, tol) in [(1, 1e-2f64), (2, 2e-2)] {
        let sm = heat_trace_samples(&pot, 1.0, p, &g, &log_spaced(T_FLOOR, 0.05, 40)).unwrap();
        let ex = fit_heat_expansion(&sm, 6).unwrap();
        for z in [c(-1.0, 0.5), c(-1.5, 1.0)] {
            let ld = ln_dpzeta(z, &ex, &sm, &ZetaConfig::default()).unwrap();
            let dev = ((ld - physical_ln_det(z, p)).exp() - 1.0).norm();
            assert!(dev < tol.min(1e-3), "p {p} z {z}: {dev}");
        }
    }
}

#[test]
fn second_order_trace_scales_like_t_three_halves() {
    let pot = well();
    let g = default_grid(&pot, 1.0, 0.01).unwrap();
    let ts = log_spaced(T_FLOOR, 1e-2, 12);
    let sm = heat_trace_samples(&pot, 1.0, 2, &g, &ts).unwrap();
    let slope = loglog_slope(&sm.t_values, &sm.traces);
    assert!((slope - 1.5).abs() < 0.1, "{slope}");
}

#[test]
fn weyl_coefficient_and_window_residual() {
    let pot = well();
    let g = default_grid(&pot, 1.0, 0.01).unwrap();
    let sm = heat_trace_samples(&pot, 1.0, 1, &g, &log_spaced(T_FLOOR, 1e-2, 30)).unwrap();
    let ex = fit_heat_expansion(&sm, 4).unwrap();
    let w = weyl_leading_coefficient(&pot, 1.0);
    assert!((ex.leading() / w - 1.0).abs() < 0.05);
    let narrow = fit_heat_expansion(&sm.window(T_FLOOR, 5e-3), 4).unwrap();
    assert!(narrow.fit_residual <= ex.fit_residual * 1.0001, "{} {}", narrow.fit_residual, ex.fit_residual);
}

#[test]
fn zeta_at_integers_matches_resolvent_traces() {
    let pot = well();
    let g = GridSpec::aligned(9.5, 0.05).unwrap();
    let a0 = operator(&pot, 0.0, 1.0, &g, Stencil::Fourth);
    let a1 = operator(&pot, 1.0, 1.0, &g, Stencil::Fourth);
    let n = g.n;
    let a = Mat::from_fn(n, n, |i, j| c(a0[(i, j)], 0.0));
    let b = Mat::from_fn(n, n, |i, j| c(a1[(i, j)] - a0[(i, j)], 0.0));
    for p in [1, 2] {
        let sm = heat_trace_samples(&pot, 1.0, p, &g, &log_spaced(T_FLOOR, 0.05, 40)).unwrap();
        let ex = fit_heat_expansion(&sm, 6).unwrap();
        let z = c(-1.0, 0.5);
        let zeta2 = zeta_eval(c(2.0, 0.0), z, &ex, &sm, &ZetaConfig::default()).unwrap();
        let oracle = t_pk_trace(a.as_ref(), b.as_ref(), z, p, 2).unwrap();
        assert!((zeta2.value - oracle).norm() < 1e-3 * oracle.norm(), "p {p}: {} vs {oracle}", zeta2.value);
        let sum = zeta2.split.0 + zeta2.split.1 + zeta2.split.2;
        assert!((sum - zeta2.value).norm() <= 1e-15 * sum.norm());
    }
}

#[test]
fn second_z_derivative_of_log_det_is_zeta_two() {
    let pot = well();
    let g = GridSpec::aligned(9.5, 0.04).unwrap();
    let sm = heat_trace_samples(&pot, 1.0, 1, &g, &log_spaced(T_FLOOR, 0.05, 40)).unwrap();
    let ex = fit_heat_expansion(&sm, 6).unwrap();
    let cfg = ZetaConfig::default();
    let z = c(-1.2, 0.6);
    let d = 1e-2;
    let f = |w: Complex64| zeta_s_derivative_at_zero(w, &ex, &sm, &cfg).unwrap();
    let second = (f(z + d) - 2.0 * f(z) + f(z - d)) / (d * d);
    let zeta2 = zeta_eval(c(2.0, 0.0), z, &ex, &sm, &cfg).unwrap().value;
    assert!((second - zeta2).norm() < 1e-2 * zeta2.norm(), "{second} {zeta2}");
}

#[test]
fn cut_point_does_not_matter() {
    let pot = well();
    let g = GridSpec::aligned(9.5, 0.04).unwrap();
    let sm = heat_trace_samples(&pot, 1.0, 1, &g, &log_spaced(T_FLOOR, 0.05, 40)).unwrap();
    let ex = fit_heat_expansion(&sm, 6).unwrap();
    let z = c(-1.0, 0.5);
    let s = c(0.4, 0.2);
    let a = zeta_eval(s, z, &ex, &sm, &ZetaConfig::default()).unwrap().value;
    let b = zeta_eval(s, z, &ex, &sm, &ZetaConfig { t_cut: 0.025, ..Default::default() }).unwrap().value;
    assert!((a - b).norm() < 1e-6 * a.norm(), "{a} {b}");
}

#[test]
fn rejects_points_right_of_the_spectrum() {
    let pot = well();
    let g = GridSpec::aligned(9.5, 0.05).unwrap();
    let sm = heat_trace_samples(&pot, 1.0, 1, &g, &log_spaced(T_FLOOR, 0.05, 40)).unwrap();
    let ex = fit_heat_expansion(&sm, 6).unwrap();
    assert!(ln_dpzeta(c(0.5, 0.5), &ex, &sm, &ZetaConfig::default()).is_err());
}

#[test]
fn heat_trace_weyl_window_and_guards() {
    let pot = well();
    let g = default_grid(&pot, 1.0, 0.01).unwrap();
    let iv = pot.integral();
    for t in [1e-3, 3e-3, 1e-2] {
        let v = regularized_heat_trace(&pot, t, 1.0, 1, &g).unwrap();
        let weyl = -(t / std::f64::consts::PI).sqrt() * iv / 2.0;
        assert!((v / weyl - 1.0).abs() < 0.05, "{t}: {v} {weyl}");
    }
    assert_eq!(regularized_heat_trace(&Potential::zero(), 1e-2, 1.0, 2, &g).unwrap(), 0.0);
    assert!(regularized_heat_trace(&pot, 1e-4, 1.0, 1, &g).is_err());
    let tight = GridSpec::aligned(8.0, 0.05).unwrap();
    assert!(regularized_heat_trace(&pot, 1e-2, 1.0, 1, &tight).is_err());
}
