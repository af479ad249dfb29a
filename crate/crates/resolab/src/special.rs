//! Complex Gamma function and small numeric helpers.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::c;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(z)` for `Re z >= 1/2` (Lanczos, g = 7).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = c(LANCZOS[0], 0.0);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `Gamma(z)`; infinite at the non-positive integers.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (PI * z).sin();
        if s.norm() == 0.0 {
            return c(f64::INFINITY, 0.0);
        }
        PI / (s * gamma(1.0 - z))
    } else {
        ln_gamma_right(z).exp()
    }
}

/// `1 / Gamma(z)`, entire.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        (PI * z).sin() * gamma(1.0 - z) / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// `e^w - 1` without cancellation for small `|w|`.
pub fn cexpm1(w: Complex64) -> Complex64 {
    let em1 = w.re.exp_m1();
    let (s, co) = w.im.sin_cos();
    let half = (0.5 * w.im).sin();
    c(em1 * co - 2.0 * half * half, (em1 + 1.0) * s)
}

/// Romberg extrapolation for a sequence with an error expansion in even
/// powers of a step that halves along the sequence.
pub fn romberg(values: &[Complex64]) -> Complex64 {
    let mut t = values.to_vec();
    let mut f = 1.0;
    for _ in 1..values.len() {
        f *= 4.0;
        t = t.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
    }
    t[0]
}

/// Add multiples of `2 pi i` to `next` so that its imaginary part is
/// closest to that of `prev`.
pub fn unwrap_log(prev: Complex64, next: Complex64) -> Complex64 {
    let k = ((prev.im - next.im) / (2.0 * PI)).round();
    next + c(0.0, 2.0 * PI * k)
}

/// Least-squares slope of `ln |y|` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.abs().ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    sxy / sxx
}
