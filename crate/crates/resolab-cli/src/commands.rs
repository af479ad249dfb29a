//! Subcommand drivers. Each writes CSV plot data and a JSON summary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resolab::counterexample::{dz_phi, paley_wiener_sup, phi_box_closed_form, phi_via_autocorr, phi_via_transform, Density};
use resolab::determinants::{ln_perturbation_determinant, DetConfig};
use resolab::distortion::{build_distorted, isolated_eigenvalues, theta_independence_check, ScalingProfile};
use resolab::freefield::{SpectralRegion, SqrtBranch};
use resolab::potentials::Potential;
use resolab::resonances::{locate_resonances, scaling_study};
use resolab::special::loglog_slope;
use resolab::ssf::{birman_krein_check, breit_wigner_decompose, ssf_profile, BirmanKreinReport};
use resolab::zeta::{default_grid, fit_heat_expansion, heat_trace_samples, ln_dpzeta, log_spaced, weyl_leading_coefficient, ZetaConfig, T_FLOOR};
use serde_json::{json, Map, Value};

use crate::config::{points, ExperimentConfig, PotentialSpec};
use crate::output::{check, Sink};

#[derive(Debug)]
pub enum RunError {
    Numerical(resolab::Error),
    Io(std::io::Error),
}

impl From<resolab::Error> for RunError {
    fn from(e: resolab::Error) -> Self {
        Self::Numerical(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Numerical(e) => write!(f, "numerical failure: {e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

type Run = Result<(), RunError>;

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub pot: Potential,
    pub region: SpectralRegion,
    pub sink: Sink,
}

impl Ctx {
    pub fn new(cfg: ExperimentConfig, sink: Sink) -> resolab::Result<Self> {
        let pot = cfg.potential.build()?;
        let region = cfg.region.build()?;
        Ok(Self { cfg, pot, region, sink })
    }

    fn det(&self) -> DetConfig {
        self.cfg.det_config(&self.region)
    }

    /// Same numerics on the physical sheet `(-0.5, pi + 0.5)`.
    fn physical(&self) -> resolab::Result<DetConfig> {
        Ok(DetConfig { branch: SqrtBranch::new(-0.5, PI + 0.5)?, ..self.det() })
    }
}

fn tag(h: f64) -> String {
    format!("h{h}")
}

fn summary(checks: Vec<Value>, mut fields: Map<String, Value>) -> Map<String, Value> {
    let pass = checks.iter().all(|c| c["pass"] == json!(true));
    fields.insert("checks".into(), Value::Array(checks));
    fields.insert("pass".into(), json!(pass));
    fields
}

pub fn det(ctx: &Ctx) -> Run {
    let cfg = ctx.det();
    let zs = points(&ctx.cfg.det.points);
    let mut rows = Vec::new();
    for &h in &ctx.cfg.h_list {
        for &p in &ctx.cfg.p_orders {
            for &z in &zs {
                let l = ln_perturbation_determinant(p, &ctx.pot, z, h, &cfg)?;
                let d = l.exp();
                rows.push(vec![h, p as f64, z.re, z.im, l.re, l.im, d.re, d.im]);
            }
        }
    }
    ctx.sink.csv("det.csv", &["h", "p", "re_z", "im_z", "re_ln_d", "im_ln_d", "re_d", "im_d"], &rows)?;
    let finite = rows.iter().all(|r| r[4].is_finite() && r[5].is_finite());
    let mut f = Map::new();
    f.insert("evaluations".into(), json!(rows.len()));
    ctx.sink.json("det_summary.json", "det", summary(vec![check(0, "finite log-determinants", 0.0, 0.0, finite)], f))?;
    Ok(())
}

pub fn resonances(ctx: &Ctx) -> Run {
    let search = ctx.cfg.search_config(&ctx.region);
    let mut runs = Vec::new();
    let mut checks = Vec::new();
    for &h in &ctx.cfg.h_list {
        log::info!("locating resonances at h = {h}");
        let rs = locate_resonances(&ctx.pot, &ctx.region, h, &search)?;
        let rows: Vec<Vec<f64>> = rs.resonances.iter().map(|r| vec![r.w.re, r.w.im, r.multiplicity as f64, r.newton_residual]).collect();
        ctx.sink.csv(&format!("resonances_{}.csv", tag(h)), &["re_w", "im_w", "multiplicity", "newton_residual"], &rows)?;
        let list: Vec<Value> = rs.resonances.iter().map(|r| json!({ "re": r.w.re, "im": r.w.im, "multiplicity": r.multiplicity, "newton_residual": r.newton_residual })).collect();
        runs.push(json!({ "h": h, "count": rs.count(), "boundary_winding": rs.boundary_winding, "resonances": list }));
        let gap = (rs.count() as i64 - rs.boundary_winding).abs() as f64;
        checks.push(check(4, &format!("winding equals count at h = {h}"), gap, 0.0, gap == 0.0));
    }
    let mut f = Map::new();
    f.insert("runs".into(), Value::Array(runs));
    ctx.sink.json("resonances_summary.json", "resonances", summary(checks, f))?;
    Ok(())
}

/// `max |xi' - (2 pi)^{-1} d arg det S|`.
fn bk_deviation(r: &BirmanKreinReport) -> f64 {
    r.xi_prime.iter().zip(&r.darg_det_s).map(|(x, d)| (x - d / (2.0 * PI)).abs()).fold(0.0, f64::max)
}

pub fn ssf(ctx: &Ctx) -> Run {
    let s = &ctx.cfg.ssf;
    let lambdas: Vec<f64> = (0..s.n_lambda).map(|i| s.lambda_lo + (s.lambda_hi - s.lambda_lo) * i as f64 / (s.n_lambda - 1) as f64).collect();
    let cfg = ctx.det();
    let search = ctx.cfg.search_config(&ctx.region);
    let mut checks = Vec::new();
    let mut f = Map::new();
    let mut bk_rel: f64 = 0.0;
    for &h in &ctx.cfg.h_list {
        let rs = locate_resonances(&ctx.pot, &ctx.region, h, &search)?;
        for &p in &ctx.cfg.p_orders {
            let prof = ssf_profile(p, &ctx.pot, &lambdas, h, s.eps, &cfg)?;
            let bw = breit_wigner_decompose(&prof, &rs)?;
            let rows: Vec<Vec<f64>> = (0..lambdas.len()).map(|i| vec![lambdas[i], prof.xi_prime[i], bw.lorentzian_part[i], bw.background_part[i]]).collect();
            ctx.sink.csv(&format!("ssf_{}_p{p}.csv", tag(h)), &["lambda", "xi_prime", "lorentzian", "background"], &rows)?;
        }
        if ctx.pot.is_zero() {
            continue;
        }
        let a = birman_krein_check(&ctx.pot, &lambdas, h, s.eps, &cfg)?;
        let da = bk_deviation(&a);
        let scale = a.max_xi_prime.max(f64::MIN_POSITIVE);
        bk_rel = bk_rel.max(da / scale);
        checks.push(check(8, &format!("Birman-Krein deviation at h = {h}"), da / scale, 1e-2, da < 1e-2 * scale));
        if s.eps / 2.0 >= 1e-4 {
            let db = bk_deviation(&birman_krein_check(&ctx.pot, &lambdas, h, s.eps / 2.0, &cfg)?);
            checks.push(check(8, &format!("Birman-Krein deviation shrinks with eps at h = {h}"), db / da, 1.0, db < da));
        }
    }
    f.insert("birman_krein_rel_dev".into(), json!(bk_rel));
    ctx.sink.json("ssf_summary.json", "ssf", summary(checks, f))?;
    Ok(())
}

pub fn counterexample(ctx: &Ctx) -> Run {
    let c = &ctx.cfg.counterexample;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let ks: Vec<Complex64> = (0..c.n_random).map(|_| Complex64::from_polar(rng.random_range(0.3..3.0), rng.random_range(0.05..PI - 0.05))).collect();
    let h0 = ctx.cfg.h_list[0];
    let mut rows = Vec::new();
    let (mut dev_closed, mut dev_transform): (f64, f64) = (0.0, 0.0);
    for &k in &ks {
        let a = phi_via_autocorr(&ctx.pot, k, h0)?;
        let t = phi_via_transform(&ctx.pot, k, h0)?;
        let scale = a.norm().max(f64::MIN_POSITIVE);
        dev_transform = dev_transform.max((a - t).norm() / scale);
        let closed = match ctx.cfg.potential {
            PotentialSpec::Box { a: half, depth } => {
                let b = phi_box_closed_form(half, k, h0)? * (depth * depth);
                dev_closed = dev_closed.max((a - b).norm() / scale);
                b
            }
            _ => Complex64::new(f64::NAN, f64::NAN),
        };
        rows.push(vec![k.re, k.im, a.re, a.im, t.re, t.im, closed.re, closed.im]);
    }
    ctx.sink.csv("phi_samples.csv", &["re_k", "im_k", "re_phi", "im_phi", "re_phi_transform", "im_phi_transform", "re_phi_closed", "im_phi_closed"], &rows)?;

    let w = ctx.cfg.window;
    let mut grid_rows = Vec::new();
    for z in w.window().grid(w.grid_n) {
        let d = dz_phi(&ctx.pot, z, h0, &ctx.region.branch)?;
        grid_rows.push(vec![z.re, z.im, d.re, d.im]);
    }
    ctx.sink.csv(&format!("dz_phi_{}.csv", tag(h0)), &["re_z", "im_z", "re_dz_phi", "im_dz_phi"], &grid_rows)?;

    let mut checks = vec![check(1, "autocorrelation and transform routes agree", dev_transform, 1e-9, dev_transform < 1e-9)];
    if matches!(ctx.cfg.potential, PotentialSpec::Box { .. }) {
        checks.push(check(1, "closed form for the box", dev_closed, 1e-10, dev_closed < 1e-10));
    }
    let mut f = Map::new();
    if !ctx.pot.is_zero() {
        let g = Density::counterexample(&ctx.pot, 2.0 / c.pw_h_fine);
        let coarse = paley_wiener_sup(&g, g.b / 2.0, c.pw_h_coarse, c.pw_grid)?;
        let fine = paley_wiener_sup(&g, g.b / 2.0, c.pw_h_fine, c.pw_grid)?;
        f.insert("paley_wiener".into(), json!({ "b": g.b, "h_coarse": c.pw_h_coarse, "h_fine": c.pw_h_fine, "sup_coarse": coarse, "sup_fine": fine }));
        checks.push(check(15, "Paley-Wiener growth", fine / coarse, 10.0, fine >= 10.0 * coarse));
    }
    f.insert("phi_route_rel_dev".into(), json!(dev_transform));
    ctx.sink.json("counterexample_summary.json", "counterexample", summary(checks, f))?;
    Ok(())
}

pub fn zeta_check(ctx: &Ctx) -> Run {
    let z = &ctx.cfg.zeta;
    let zs = points(&z.points);
    let phys = ctx.physical()?;
    let mut checks = Vec::new();
    let mut worst: f64 = 0.0;
    let mut f = Map::new();
    for &h in &ctx.cfg.h_list {
        let g = default_grid(&ctx.pot, h, z.grid_step)?;
        for &p in &ctx.cfg.p_orders {
            let sm = heat_trace_samples(&ctx.pot, h, p, &g, &log_spaced(T_FLOOR, z.t_max, z.n_t))?;
            let ex = fit_heat_expansion(&sm, z.j_count)?;
            let rows: Vec<Vec<f64>> = sm.t_values.iter().zip(&sm.traces).map(|(&t, &v)| vec![t, v, ex.eval(t)]).collect();
            ctx.sink.csv(&format!("heat_trace_{}_p{p}.csv", tag(h)), &["t", "trace", "fit"], &rows)?;
            let tol = if p == 1 { 1e-2 } else { 2e-2 };
            for &w in &zs {
                let lz = ln_dpzeta(w, &ex, &sm, &ZetaConfig::default())?;
                let lf = ln_perturbation_determinant(p, &ctx.pot, w, h, &phys)?;
                let dev = ((lz - lf).exp() - 1.0).norm();
                worst = worst.max(dev);
                checks.push(check(11, &format!("zeta/Fredholm coincidence p = {p}, h = {h}, z = {w}"), dev, tol, dev < tol));
            }
            if p == 1 && !ctx.pot.is_zero() {
                let sm = heat_trace_samples(&ctx.pot, h, 1, &g, &log_spaced(T_FLOOR, 1e-2, 30))?;
                let rel = (fit_heat_expansion(&sm, 4)?.leading() / weyl_leading_coefficient(&ctx.pot, h) - 1.0).abs();
                f.insert(format!("weyl_rel_dev_{}", tag(h)), json!(rel));
                checks.push(check(12, &format!("Weyl coefficient at h = {h}"), rel, 0.05, rel < 0.05));
            }
            if p == 2 && !ctx.pot.is_zero() {
                let sm = heat_trace_samples(&ctx.pot, h, 2, &g, &log_spaced(T_FLOOR, 1e-2, 12))?;
                let slope = loglog_slope(&sm.t_values, &sm.traces);
                f.insert(format!("p2_slope_{}", tag(h)), json!(slope));
                checks.push(check(12, &format!("p = 2 heat-trace slope at h = {h}"), slope, 1.5, (slope - 1.5).abs() < 0.1));
            }
        }
    }
    f.insert("fredholm_zeta_rel_dev".into(), json!(worst));
    ctx.sink.json("zeta_summary.json", "zeta-check", summary(checks, f))?;
    Ok(())
}

pub fn distort_check(ctx: &Ctx) -> Run {
    let d = &ctx.cfg.distort;
    let sps = [ScalingProfile::new(d.r1, d.t_inf, d.eps1, d.thetas[0])?, ScalingProfile::new(d.r1, d.t_inf, d.eps1, d.thetas[1])?];
    let search = ctx.cfg.search_config(&ctx.region);
    let r = &ctx.region;
    let inner = |z: Complex64| {
        let a = r.branch.arg(z).unwrap_or(f64::NAN);
        z.norm() > r.r_min + 0.05 && z.norm() < r.r_max - 0.1 && a > r.arg_lo() + d.margin
    };
    let (mut mismatch, mut drift): (f64, f64) = (0.0, 0.0);
    let mut checks = Vec::new();
    for &h in &ctx.cfg.h_list {
        let rep = theta_independence_check(&ctx.pot, &sps, r, h, d.box_length, d.n_grid)?;
        let rs = locate_resonances(&ctx.pot, r, h, &search)?;
        let iso = isolated_eigenvalues(&build_distorted(&ctx.pot, &sps[0], h, d.box_length, d.n_grid)?, r, d.margin)?;
        let nearest = |x: Complex64, ys: &[Complex64]| ys.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
        let ws = rs.positions();
        let es: Vec<Complex64> = iso.iter().map(|(e, _)| *e).collect();
        let mut m: f64 = 0.0;
        for &w in ws.iter().filter(|&&w| inner(w)) {
            m = m.max(nearest(w, &es));
        }
        for &e in es.iter().filter(|&&e| inner(e)) {
            m = m.max(nearest(e, &ws));
        }
        mismatch = mismatch.max(m);
        drift = drift.max(rep.max_distance);
        let rows: Vec<Vec<f64>> = iso.iter().map(|(e, k)| vec![e.re, e.im, *k as f64]).collect();
        ctx.sink.csv(&format!("distorted_{}.csv", tag(h)), &["re_lambda", "im_lambda", "multiplicity"], &rows)?;
        checks.push(check(5, &format!("determinant zeros match isolated eigenvalues at h = {h}"), m, 1e-3, m < 1e-3));
        checks.push(check(5, &format!("theta independence at h = {h}"), rep.max_distance, 1e-3, rep.max_distance < 1e-3 && rep.multiplicities_match));
    }
    let mut f = Map::new();
    f.insert("max_resonance_mismatch".into(), json!(mismatch));
    f.insert("max_theta_drift".into(), json!(drift));
    ctx.sink.json("distort_summary.json", "distort-check", summary(checks, f))?;
    Ok(())
}

pub fn scaling(ctx: &Ctx) -> Run {
    let w = ctx.cfg.window;
    let search = ctx.cfg.search_config(&ctx.region);
    let hs = &ctx.cfg.h_list;
    let mut checks = Vec::new();
    let mut f = Map::new();
    for &p in &ctx.cfg.p_orders {
        let rows = scaling_study(p, &ctx.pot, &ctx.region, hs, &w.window(), w.grid_n, w.delta, &search)?;
        let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.h, r.resonance_count as f64, r.sup, r.weighted_sup]).collect();
        ctx.sink.csv(&format!("scaling_p{p}.csv"), &["h", "resonance_count", "sup", "weighted_sup"], &table)?;
        let sups: Vec<f64> = rows.iter().map(|r| r.sup).collect();
        if hs.len() >= 2 && sups.iter().all(|&s| s > 0.0) {
            let slope = loglog_slope(hs, &sups);
            f.insert(format!("slope_p{p}"), json!(slope));
            if p <= 2 {
                checks.push(check(9, &format!("sup slope for p = {p}"), slope, -1.3, slope >= -1.3));
            }
        }
        if p == 3 && w.delta > 0.0 && rows.len() >= 2 {
            let growth = rows.last().unwrap().weighted_sup / rows[0].weighted_sup;
            f.insert("weighted_growth_p3".into(), json!(growth));
            checks.push(check(10, "weighted p = 3 growth", growth, 5.0, growth >= 5.0));
        }
    }
    ctx.sink.json("scaling_summary.json", "scaling-study", summary(checks, f))?;
    Ok(())
}
