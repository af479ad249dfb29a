#![allow(dead_code)]

use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `1 / t(k)` for a rectangular potential of height `v0` on `[-a, a]`,
/// which equals `det(I + V R0(k^2))`.
pub fn box_det(k: Complex64, h: f64, a: f64, v0: f64) -> Complex64 {
    let kap = k / h;
    let q = (k * k - v0).sqrt() / h;
    let l = 2.0 * a;
    let i = c(0.0, 1.0);
    // sin(q l) / q and q sin(q l) are even in q, so the branch of q is irrelevant
    let sinc = if q.norm() < 1e-12 { c(l, 0.0) } else { (q * l).sin() / q };
    (i * kap * l).exp() * ((q * l).cos() - i * 0.5 * (kap + q * q / kap) * sinc)
}

/// Newton iteration on `box_det` in `z = k^2`, `k` on the lower sheet.
pub fn box_resonance(z0: Complex64, h: f64, a: f64, v0: f64, arg_lo: f64) -> Complex64 {
    let kz = |z: Complex64| {
        let mut t = z.arg();
        if t > 0.5 && arg_lo < -std::f64::consts::PI {
            t -= 2.0 * std::f64::consts::PI;
        }
        Complex64::from_polar(z.norm().sqrt(), 0.5 * t)
    };
    let f = |z: Complex64| box_det(kz(z), h, a, v0);
    let mut z = z0;
    for _ in 0..100 {
        let d = 1e-7 * (1.0 + z.norm());
        let df = (f(z + d) - f(z - d)) / (2.0 * d);
        let dz = f(z) / df;
        z -= dz;
        if dz.norm() < 1e-15 * z.norm() {
            break;
        }
    }
    z
}
