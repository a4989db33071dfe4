//! Acceptance criteria for the two worked examples and the property suites. Each criterion
//! test prints one PASS or FAIL line and then asserts the same verdict.

use std::sync::{Arc, OnceLock};

use hinfstab::contour::ContourOptions;
use hinfstab::controller::Controller;
use hinfstab::finite::{build_p1p2, pick_points, q_sweep, stabilize_finite, FinSearchConfig, P1P2};
use hinfstab::infinite::{l1u_stable_ranges, stabilize_infinite, InfSearchConfig, InfSearchResult};
use hinfstab::pick::{mu_opt_search, PickProblem};
use hinfstab::stability::{admissible_uinf, asymptotics, chain_abscissa, default_window, rhp_zero_scan};
use hinfstab::synthesis::{gamma_opt, Mode, SynthesisContext};
use hinfstab::FrequencyGrid;
use hinfstab_cli::commands::{cmd_stabilize, cmd_verify, Method, StabilizeArgs};
use hinfstab_cli::report::to_json;
use hinfstab_suite::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const RHO1: f64 = 0.814;
const RHO2: f64 = 1.9454;

fn gamma1() -> f64 {
    static G: OnceLock<f64> = OnceLock::new();
    *G.get_or_init(|| {
        let (p, w) = ex1();
        gamma_opt(&p, &w, 0.61, 0.99).unwrap().gamma
    })
}

fn gamma2() -> f64 {
    static G: OnceLock<f64> = OnceLock::new();
    *G.get_or_init(|| {
        let (p, w) = ex2();
        gamma_opt(&p, &w, 1.6, 2.2).unwrap().gamma
    })
}

fn ctx1() -> Arc<SynthesisContext> {
    let (p, w) = ex1();
    Arc::new(SynthesisContext::suboptimal(&p, &w, RHO1, gamma1(), EX1_A).unwrap())
}

fn search1() -> &'static InfSearchResult {
    static R: OnceLock<InfSearchResult> = OnceLock::new();
    R.get_or_init(|| {
        let (p, w) = ex1();
        stabilize_infinite(&p, &w, &InfSearchConfig::constant(RHO1, gamma1(), EX1_A)).unwrap()
    })
}

fn p1p2_2() -> &'static (Arc<P1P2>, PickProblem) {
    static R: OnceLock<(Arc<P1P2>, PickProblem)> = OnceLock::new();
    R.get_or_init(|| {
        let (p, w) = ex2();
        let ctx = Arc::new(SynthesisContext::suboptimal(&p, &w, RHO2, gamma2(), EX2_A).unwrap());
        let pp = Arc::new(build_p1p2(ctx, &FrequencyGrid::default(), &ContourOptions::for_delay(3.0)).unwrap());
        let pick = pick_points(&pp, 1.0).unwrap();
        (pp, pick)
    })
}

fn has(list: &[num_complex::Complex64], want: num_complex::Complex64, tol: f64) -> bool {
    list.iter().any(|z| (z.re - want.re).abs() <= tol && (z.im - want.im).abs() <= tol)
}

#[test]
fn criterion_01_gamma_opt_one_block() {
    let g = gamma1();
    let ok = near(g, 0.8108, 1e-3);
    verdict(1, ok, &format!("gamma_opt = {g:.6} (want 0.8108 +- 1e-3)"));
    assert!(ok);
}

#[test]
fn criterion_02_suboptimal_data_one_block() {
    let ctx = ctx1();
    let lead = ctx.l1.lead();
    let l1: Vec<f64> = ctx.l1.coeffs().iter().map(|v| v / lead).collect();
    let l2: Vec<f64> = ctx.l2.coeffs().iter().map(|v| v / lead).collect();
    let asym = asymptotics(&ctx).unwrap();
    let ok = l1.len() == 2
        && l2.len() == 2
        && near(l1[0], 1.8373, 2e-3)
        && near(l1[1], 1.0, 2e-3)
        && near(l2[0], -1.8716, 2e-3)
        && near(l2[1], -0.9413, 2e-3)
        && near(asym.k, -0.9413, 1e-3)
        && near(asym.f_inf, 1.3567, 1e-3);
    verdict(2, ok, &format!("L1 = {l1:?}, L2 = {l2:?}, k = {:.5}, f_inf = {:.5}", asym.k, asym.f_inf));
    assert!(ok);
}

#[test]
fn criterion_03_admissible_intervals() {
    let ctx = ctx1();
    let adm = admissible_uinf(&asymptotics(&ctx).unwrap());
    let st = l1u_stable_ranges(&ctx, 1e-3);
    let ok = adm.len() == 1
        && near(adm[0].0, -0.9909, 5e-3)
        && near(adm[0].1, -0.6668, 5e-3)
        && st.len() == 1
        && near(st[0].0, -1.0, 1e-2)
        && near(st[0].1, 0.98, 1e-2);
    verdict(3, ok, &format!("admissible {adm:?}, L1U stable on {st:?}"));
    assert!(ok);
}

#[test]
fn criterion_04_infinite_search_outcome() {
    let r = search1();
    let w = r.peak.omega_max.unwrap_or(f64::NAN);
    let e_zeros = r.scan.excluded.clone();
    let ok = near(r.u.u_inf, -0.813, 2e-3)
        && r.u.is_constant()
        && near(w, 19.458, 0.5)
        && r.scan.zeros.is_empty()
        && r.recheck.zeros.is_empty()
        && has(&e_zeros, num_complex::Complex64::new(0.0, 1.056), 5e-3)
        && has(&e_zeros, num_complex::Complex64::new(0.0, -1.056), 5e-3)
        && r.verified_norm <= RHO1 * (1.0 + 1e-3);
    verdict(
        4,
        ok,
        &format!(
            "u_inf = {}, omega_max = {w:.4}, unstable zeros {:?}, cancelled {:?}, norm {:.6}",
            r.u.u_inf, r.scan.zeros, e_zeros, r.verified_norm
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_05_pole_chains() {
    let (p, w) = ex1();
    let opt = SynthesisContext::new(&p, &w, gamma1(), Mode::Optimal).unwrap();
    let a_opt = chain_abscissa(&opt, 0.0);
    let a_sub = chain_abscissa(&ctx1(), 0.0);
    let ok = a_opt.map_or(false, |v| near(v, 3.0109, 5e-3)) && a_sub.map_or(false, |v| near(v, 2.445, 5e-3));
    verdict(5, ok, &format!("optimal chain at {a_opt:?}, central rho = 0.814 chain at {a_sub:?}"));
    assert!(ok);
}

#[test]
fn criterion_06_gamma_opt_two_block() {
    let g = gamma2();
    let (p, w) = ex2();
    let ctx = Arc::new(SynthesisContext::new(&p, &w, g, Mode::Optimal).unwrap());
    let ctrl = Controller::central(ctx);
    let grid = FrequencyGrid::default();
    let (win, _) = default_window(&ctrl, &grid).unwrap();
    let scan = rhp_zero_scan(&ctrl, &win, &ContourOptions::for_delay(3.0)).unwrap();
    let ok = near(g, 1.9452, 1e-3)
        && scan.zeros.len() == 2
        && has(&scan.zeros, num_complex::Complex64::new(0.0292, 2.2354), 5e-3)
        && has(&scan.zeros, num_complex::Complex64::new(0.0292, -2.2354), 5e-3);
    verdict(6, ok, &format!("gamma_opt = {g:.6}, optimal controller unstable poles {:?}", scan.zeros));
    assert!(ok);
}

#[test]
fn criterion_07_p1_p2_zeros_and_pick_data() {
    let (pp, pick) = p1p2_2();
    let c = num_complex::Complex64::new;
    let p_ok = pp.p_roots.len() == 2 && has(&pp.p_roots, c(0.0287, 2.2346), 5e-3) && has(&pp.p_roots, c(0.0287, -2.2346), 5e-3);
    let s_ok = has(&pp.s_roots, c(0.0297, 2.2346), 5e-3) && has(&pp.s_roots, c(0.0297, -2.2346), 5e-3);
    let md = pp.m_tilde_d.num().monic();
    let md_ok = md.coeffs().len() == 3 && near(md.coeff(1), -0.0574, 5e-3) && near(md.coeff(0), 4.9943, 5e-3);
    let upper = pick.z.iter().position(|z| z.im > 0.5).expect("upper pair point");
    let (z, w) = (pick.z[upper], pick.w[upper]);
    let z_ok = near(z.re, 0.6598, 2e-3) && near(z.im, 0.7383, 2e-3);
    let w_ok = near(w.re, 58.4002, 0.1) && near(w.im, -0.7501, 0.05);
    let ok = p_ok && s_ok && md_ok && z_ok && w_ok;
    verdict(
        7,
        ok,
        &format!(
            "P1 zeros {:?} [{}]; P2 zeros {:?} [{}]; M~_d num {:?} [{}]; z = {z:.5} [{}]; w = {w:.5} [{}]",
            pp.p_roots,
            p_ok,
            pp.s_roots,
            s_ok,
            md.coeffs(),
            md_ok,
            z_ok,
            w_ok
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_mu_opt() {
    let (_, pick) = p1p2_2();
    let ms = mu_opt_search(pick, 20).unwrap();
    let value_ok = near(ms.mu_opt, 58.4167, 0.5);
    let zero_ok = ms.n.iter().all(|&k| k == 0);
    let below = pick.min_eigenvalue(ms.mu_opt - 1e-2, &ms.n).unwrap();
    let above = pick.min_eigenvalue(ms.mu_opt + 1e-2, &ms.n).unwrap();
    let bracket_ok = below < 0.0 && above >= -1e-10;
    let ok = value_ok && zero_ok && bracket_ok;
    verdict(
        8,
        ok,
        &format!(
            "mu_opt = {:.4} over {} points [{}], n = {:?} [{}], min eig {below:.3e} below and {above:.3e} above [{}]",
            ms.mu_opt,
            pick.len(),
            value_ok,
            ms.n,
            zero_ok,
            bracket_ok
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_09_finite_design() {
    let (p, w) = ex2();
    let cfg = FinSearchConfig::new(RHO2, gamma2(), EX2_A);
    let (pp, pick) = p1p2_2();
    // Direct look at mu = 64 with the all-zero integers, as in the worked design.
    let n = vec![0; pick.len()];
    let ngrid = pp.norm_grid(&cfg.grid).unwrap();
    let at64 = q_sweep(pp, pick, 64.0, &n, &cfg.q_candidates(), &ngrid, cfg.a).unwrap();
    let r = stabilize_finite(&p, &w, &cfg);
    let (ok, detail) = match &r {
        Ok(r) => {
            let ok = near(r.mu, 64.0, 1.0)
                && near(r.q.u_inf, 0.323, 5e-3)
                && near(r.u_norm, 0.9924, 1e-2)
                && r.stable
                && r.scan.zeros.is_empty()
                && r.verified_norm <= RHO2 * (1.0 + 1e-3);
            (ok, format!("mu = {}, Q = {:?}, ||U|| = {:.5}, norm {:.6}, stable {}", r.mu, r.q, r.u_norm, r.verified_norm, r.stable))
        }
        Err(e) => (false, format!("search failed: {e}")),
    };
    verdict(
        9,
        ok,
        &format!("at mu = 64: best Q = {:?} with max|U| = {:.5} ({} passing); {detail}", at64.best_q, at64.best_norm, at64.passing),
    );
    assert!(ok);
}

#[test]
fn criterion_10_property_suites() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut fails: Vec<String> = Vec::new();

    let mut n_spec = 0;
    let mut guard = 0;
    while n_spec < 50 && guard < 500 {
        guard += 1;
        let (w1, w2, level) = random_weights(&mut rng);
        tally(&mut fails, "spectral factor", spectral_identity(&w1, &w2, level), 1e-8, &mut n_spec);
    }
    let mut n_interp = 0;
    guard = 0;
    while n_interp < 50 && guard < 500 {
        guard += 1;
        let (p, w, level, a) = random_problem(&mut rng);
        tally(&mut fails, "interpolation", interpolation_residual(&p, &w, level, a), 1e-8, &mut n_interp);
    }
    let mut n_alg = 0;
    for _ in 0..100 {
        let f = random_rational(&mut rng);
        let g = random_rational(&mut rng);
        if mirror_involution(&f) > 1e-12 {
            fails.push(format!("mirror: {f}"));
        }
        if !phi_additive(&f, &g) {
            fails.push(format!("relative degree: {f} and {g}"));
        }
        let roots = random_rhp_roots(&mut rng);
        let h = rng.gen_range(0.0..3.0);
        if inner_modulus(&roots, h) > 1e-10 {
            fails.push(format!("inner modulus for {roots:?}"));
        }
        n_alg += 1;
    }
    let mut n_arg = 0;
    guard = 0;
    while n_arg < 100 && guard < 400 {
        guard += 1;
        let roots = random_poly_roots(&mut rng);
        tally(&mut fails, "argument principle", argument_principle(&roots), 1e-6, &mut n_arg);
    }
    for _ in 0..50 {
        let z = c(rng.gen_range(-0.9..0.9), 0.0);
        let w = rng.gen_range(0.05..100.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (mu, at, below) = pick_scalar(z, w);
        if mu != w.abs() || !at || below {
            fails.push(format!("scalar Pick: mu {mu} for |w| = {}", w.abs()));
        }
    }
    let mut n_np = 0;
    guard = 0;
    while n_np < 50 && guard < 400 {
        guard += 1;
        let (z, wz, x, wx) = random_pick(&mut rng);
        tally(&mut fails, "Nevanlinna-Pick", np_residual(z, wz, x, wx), 1e-8, &mut n_np);
    }
    let ok = fails.is_empty() && n_spec == 50 && n_interp == 50 && n_arg == 100 && n_np == 50;
    verdict(
        10,
        ok,
        &format!(
            "spectral {n_spec}/50, interpolation {n_interp}/50, algebra {n_alg}/100, argument principle {n_arg}/100, NP {n_np}/50; failures {fails:?}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_11_magnitude_condition_not_necessary() {
    let r = search1();
    let ok = r.peak.eta_max > 1.0 && r.stable && r.scan.zeros.is_empty();
    verdict(11, ok, &format!("accepted u_inf = {} has eta_max = {:.5} and is certified stable", r.u.u_inf, r.peak.eta_max));
    assert!(ok);
}

#[test]
fn cli_example2_stabilize_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let config = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example2.toml");
    let args = StabilizeArgs { config: config.clone(), rho: RHO2, method: Method::Auto, emit_plots: None, timing: false };
    let out = cmd_stabilize(&args).unwrap();
    let r = &out.report;
    let summary = match (&r.design, &r.frontier) {
        (Some(d), _) => format!("mu = {:?}, u_inf = {:?}, ||U|| = {:?}", d.u.mu, d.u.u_inf, d.norms.u_norm),
        (None, Some(f)) => format!("{}: best u_inf = {:?}, ||U|| = {:?} at mu = {:?}", f.message, f.best_u_inf, f.best_u_norm, f.best_mu),
        _ => String::new(),
    };
    assert_eq!(out.code, 0, "exit {} ({}); {summary}", out.code, r.status);
    assert_eq!(r.pole_class, "finite");
    let d = r.design.as_ref().unwrap();
    assert!(near(d.u.u_inf.unwrap(), 0.323, 2e-3), "{summary}");
    assert!(near(d.norms.u_norm.unwrap(), 0.9924, 1e-2), "{summary}");
    assert!(d.certificates.stable && d.norms.within_level, "{summary}");

    let path = dir.path().join("report.json");
    std::fs::write(&path, to_json(r)).unwrap();
    let v = cmd_verify(&config, &path).unwrap();
    assert!(v.pass, "{:?}", v.diagnostics);
}

fn tally(fails: &mut Vec<String>, name: &str, ck: Check, tol: f64, done: &mut usize) {
    match ck {
        Check::Ok(v) if v <= tol => *done += 1,
        Check::Ok(v) => fails.push(format!("{name}: {v:e} > {tol:e}")),
        Check::Skip => {}
        Check::Bad(m) => fails.push(format!("{name}: {m}")),
    }
}

// ---- random instance generators for criterion 10 ----

fn random_weights(rng: &mut StdRng) -> (hinfstab::RationalFn, hinfstab::RationalFn, f64) {
    let u: [f64; 6] = rng.gen();
    weights_from(&u)
}

fn random_problem(rng: &mut StdRng) -> (hinfstab::plant::DelayPlant, hinfstab::plant::WeightPair, f64, f64) {
    let u: [f64; 6] = rng.gen();
    problem_from(&u)
}

fn random_rational(rng: &mut StdRng) -> hinfstab::RationalFn {
    let u: [f64; 6] = rng.gen();
    rational_from(&u)
}

fn random_rhp_roots(rng: &mut StdRng) -> Vec<num_complex::Complex64> {
    let u: [f64; 6] = rng.gen();
    rhp_roots_from(&u)
}

fn random_poly_roots(rng: &mut StdRng) -> Vec<num_complex::Complex64> {
    let u: [f64; 12] = rng.gen();
    poly_roots_from(&u)
}

fn random_pick(rng: &mut StdRng) -> (num_complex::Complex64, num_complex::Complex64, f64, f64) {
    let u: [f64; 6] = rng.gen();
    pick_from(&u)
}
