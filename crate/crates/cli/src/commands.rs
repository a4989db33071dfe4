use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use hinfstab::contour::ContourOptions;
use hinfstab::controller::{verify_performance, Controller, UParam, PERFORMANCE_SLACK};
use hinfstab::finite::{
    build_p1p2, build_u, interpolant_for, pick_points, stabilize_finite_traced, FinSearchConfig, FinSearchResult,
    FinTrace, NORM_SLACK, REMOVABLE_TOL,
};
use hinfstab::infinite::{stabilize_infinite, sweep_context, sweep_report, InfSearchConfig, InfSearchResult};
use hinfstab::stability::{
    admissible_uinf, asymptotics, default_window, finitely_many_poles, loop_limit, properness_criterion, rhp_zero_scan,
    PoleClass, Window,
};
use hinfstab::synthesis::{gamma_opt, Mode, SynthesisContext};
use hinfstab::Error;

use crate::config::{self, Problem};
use crate::plots;
use crate::report::*;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Auto,
    Infinite,
    Finite,
}

#[derive(Debug, Clone)]
pub struct StabilizeArgs {
    pub config: PathBuf,
    pub rho: f64,
    pub method: Method,
    pub emit_plots: Option<PathBuf>,
    pub timing: bool,
}

/// Result of a stabilize run: the report and the process exit code.
pub struct Outcome {
    pub report: RunReport,
    pub code: i32,
    pub message: Option<String>,
}

pub fn cmd_gamma_opt(path: &Path) -> Result<GammaReport, CliError> {
    let p = config::load(path)?;
    let (lo, hi) = p.bracket()?;
    let g = gamma_opt(&p.plant, &p.weights, lo, hi).map_err(bracket_error)?;
    let (l1, l2) = match SynthesisContext::new(&p.plant, &p.weights, g.gamma, Mode::Optimal) {
        Ok(ctx) => (sigs(ctx.l1.coeffs()), sigs(ctx.l2.coeffs())),
        Err(_) => (Vec::new(), Vec::new()),
    };
    Ok(GammaReport {
        schema: SCHEMA.into(),
        gamma_opt: sig(g.gamma),
        bracket: [sig(lo), sig(hi)],
        sigma_min: sig(g.sigma_min),
        factorization_failures: g.factorization_failures,
        interpolation_failures: g.interpolation_failures,
        l1,
        l2,
    })
}

fn bracket_error(e: Error) -> CliError {
    match e {
        Error::BracketFailure { .. } => CliError::Input(format!("options.gamma_bracket: {e}")),
        other => CliError::Numeric(other),
    }
}

fn interpolation(ctx: &SynthesisContext) -> Interpolation {
    let a = match ctx.mode {
        Mode::Suboptimal { a } => sig(a),
        Mode::Optimal => None,
    };
    Interpolation { a, l1: sigs(ctx.l1.coeffs()), l2: sigs(ctx.l2.coeffs()), max_residual: sig(ctx.max_residual) }
}

/// Pole class of the suboptimal family: finite when the weights guarantee it, or when the
/// central controller's asymptotic loop gain stays within one.
fn pole_class(p: &Problem, rho: f64, gamma: f64) -> Result<bool, CliError> {
    if properness_criterion(&p.weights, &p.plant) == PoleClass::GuaranteedFinite {
        return Ok(true);
    }
    let ctx = SynthesisContext::suboptimal(&p.plant, &p.weights, rho, gamma, p.config.options.a)?;
    Ok(finitely_many_poles(&ctx, &UParam::constant(0.0)))
}

fn inf_config(p: &Problem, rho: f64, gamma: f64) -> InfSearchConfig {
    let s = &p.config.options.search;
    InfSearchConfig {
        rho,
        gamma_opt: gamma,
        a: p.config.options.a,
        uinf_step: s.uinf_step,
        up_grid: s.up_grid.clone(),
        uz_grid: s.uz_grid.clone(),
        scan_budget: s.scan_budget,
        grid: p.grid.clone(),
    }
}

fn fin_config(p: &Problem, rho: f64, gamma: f64) -> FinSearchConfig {
    let s = &p.config.options.search;
    let mut cfg = FinSearchConfig::new(rho, gamma, p.config.options.a);
    cfg.rho_schedule.extend(s.rho_schedule.iter().copied());
    cfg.a = s.conformal_a;
    cfg.mu_factors = s.mu_factors.clone();
    cfg.mu_max = s.mu_max;
    cfg.q_step = s.q_step;
    cfg.up_grid = s.up_grid.clone();
    cfg.uz_grid = s.uz_grid.clone();
    cfg.integer_bound = s.integer_bound;
    cfg.grid = p.grid.clone();
    cfg
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn cmd_stabilize(args: &StabilizeArgs) -> Result<Outcome, CliError> {
    let p = config::load(&args.config)?;
    let (lo, hi) = p.bracket()?;
    if !(args.rho > 0.0 && args.rho.is_finite()) {
        return Err(CliError::Input(format!("--rho: {} is not a positive level", args.rho)));
    }
    let t0 = Instant::now();
    let gamma = gamma_opt(&p.plant, &p.weights, lo, hi).map_err(bracket_error)?.gamma;
    let t_gamma = secs(t0);
    if args.rho <= gamma {
        return Err(CliError::Input(format!("--rho: {} does not exceed gamma_opt = {gamma}", args.rho)));
    }
    let finite_class = pole_class(&p, args.rho, gamma)?;
    let use_finite = match args.method {
        Method::Auto => finite_class,
        Method::Finite => true,
        Method::Infinite => false,
    };
    let mut report = RunReport {
        schema: SCHEMA.into(),
        status: "ok".into(),
        gamma_opt: sig(gamma),
        rho: sig(args.rho),
        pole_class: if finite_class { "finite" } else { "infinite" }.into(),
        branch_taken: if use_finite { "finite" } else { "infinite" }.into(),
        interpolation: None,
        design: None,
        frontier: None,
        timing: None,
    };
    let t1 = Instant::now();
    let mut out = if use_finite { run_finite(&p, args, gamma, &mut report)? } else { run_infinite(&p, args, gamma, &mut report)? };
    if args.timing {
        let t = Timing { gamma_opt_s: sig(t_gamma), search_s: sig(secs(t1)) };
        eprintln!("timing: gamma_opt {:.3} s, search and plots {:.3} s", t_gamma, secs(t1));
        out.report.timing = Some(t);
    }
    Ok(out)
}

fn exhausted(mut report: RunReport, frontier: Frontier, code: i32, status: &str) -> Outcome {
    let message = Some(frontier.message.clone());
    report.status = status.into();
    report.frontier = Some(frontier);
    Outcome { report, code, message }
}

fn bare_frontier(message: String) -> Frontier {
    Frontier {
        message,
        mu_opt: None,
        mu_opt_integers: Vec::new(),
        best_mu: None,
        best_integers: Vec::new(),
        best_u_inf: None,
        best_u_norm: None,
    }
}

fn run_infinite(p: &Problem, args: &StabilizeArgs, gamma: f64, report: &mut RunReport) -> Result<Outcome, CliError> {
    let cfg = inf_config(p, args.rho, gamma);
    let r = match stabilize_infinite(&p.plant, &p.weights, &cfg) {
        Ok(r) => r,
        Err(e @ Error::Exhausted(_)) => {
            if let Some(dir) = &args.emit_plots {
                plots::fig1_sweep(dir, &sweep_report(&p.plant, &p.weights, &cfg)?)?;
            }
            return Ok(exhausted(report.clone(), bare_frontier(e.to_string()), 3, "exhausted"));
        }
        Err(e @ Error::CertificateContradiction(_)) => {
            return Ok(exhausted(report.clone(), bare_frontier(e.to_string()), 4, "contradiction"));
        }
        Err(e) => return Err(e.into()),
    };
    report.interpolation = Some(interpolation(&r.ctx));
    report.design = Some(infinite_design(&r));
    if let Some(dir) = &args.emit_plots {
        plots::fig1_sweep(dir, &sweep_context(&r.ctx, &r.admissible, cfg.uinf_step, &p.grid)?)?;
        let ctrl = Controller { ctx: r.ctx.clone(), u: Arc::new(r.u) };
        let w = Window { sigma_max: r.scan.sigma_max, omega_bound: r.scan.omega_bound };
        plots::fig2_zgrid(dir, &ctrl, &w)?;
    }
    Ok(Outcome { report: report.clone(), code: 0, message: None })
}

fn infinite_design(r: &InfSearchResult) -> Design {
    let kind = if r.u.is_constant() { "constant" } else { "first_order" };
    Design {
        u: FreeParam {
            kind: kind.into(),
            u_inf: sig(r.u.u_inf),
            u_z: sig(r.u.u_z),
            u_p: sig(r.u.u_p),
            mu: None,
            integers: Vec::new(),
            conformal_a: None,
        },
        certificates: Certificates {
            sigma_max: sig(r.scan.sigma_max),
            omega_bound: sig(r.scan.omega_bound),
            unstable_zeros: pairs(&r.scan.zeros),
            cancelled_zeros: pairs(&r.scan.excluded),
            winding: r.scan.winding_total,
            recheck_zeros: Some(pairs(&r.recheck.zeros)),
            removability: None,
            stable: r.stable,
        },
        norms: Norms {
            performance: sig(r.verified_norm),
            level: sig(r.ctx.level),
            within_level: r.verified_norm <= r.ctx.level * (1.0 + PERFORMANCE_SLACK),
            u_norm: sig(r.u.hinf_norm()),
            eta_max: sig(r.peak.eta_max),
            omega_max: r.peak.omega_max.and_then(sig),
        },
    }
}

fn run_finite(p: &Problem, args: &StabilizeArgs, gamma: f64, report: &mut RunReport) -> Result<Outcome, CliError> {
    let cfg = fin_config(p, args.rho, gamma);
    let mut trace = FinTrace::default();
    let res = stabilize_finite_traced(&p.plant, &p.weights, &cfg, &mut trace);
    if let Some(pp) = &trace.p1p2 {
        report.interpolation = Some(interpolation(&pp.ctx));
    }
    if let Some(dir) = &args.emit_plots {
        finite_plots(dir, p, &cfg, &trace, res.as_ref().ok())?;
    }
    match res {
        Ok(r) => {
            report.rho = sig(r.rho);
            report.branch_taken = if r.u.is_none() { "central-stable" } else { "finite" }.into();
            report.design = Some(finite_design(&r, cfg.a));
            Ok(Outcome { report: report.clone(), code: 0, message: None })
        }
        Err(e @ Error::Exhausted(_)) => Ok(exhausted(report.clone(), finite_frontier(e.to_string(), &trace), 3, "exhausted")),
        Err(e @ Error::CertificateContradiction(_)) => {
            Ok(exhausted(report.clone(), finite_frontier(e.to_string(), &trace), 4, "contradiction"))
        }
        Err(e) => Err(e.into()),
    }
}

fn finite_frontier(message: String, trace: &FinTrace) -> Frontier {
    let best = trace.best();
    Frontier {
        message,
        mu_opt: trace.mu_search.as_ref().and_then(|m| sig(m.mu_opt)),
        mu_opt_integers: trace.mu_search.as_ref().map(|m| m.n.clone()).unwrap_or_default(),
        best_mu: best.and_then(|b| sig(b.mu)),
        best_integers: best.map(|b| b.integers.clone()).unwrap_or_default(),
        best_u_inf: best.and_then(|b| b.best_q).and_then(|q| sig(q.u_inf)),
        best_u_norm: best.and_then(|b| sig(b.best_norm)),
    }
}

fn finite_design(r: &FinSearchResult, conformal_a: f64) -> Design {
    let central = r.u.is_none();
    Design {
        u: FreeParam {
            kind: if central { "central" } else { "nevanlinna_pick" }.into(),
            u_inf: sig(r.q.u_inf),
            u_z: sig(r.q.u_z),
            u_p: sig(r.q.u_p),
            mu: if central { None } else { sig(r.mu) },
            integers: r.integers.clone(),
            conformal_a: if central { None } else { sig(conformal_a) },
        },
        certificates: Certificates {
            sigma_max: sig(r.scan.sigma_max),
            omega_bound: sig(r.scan.omega_bound),
            unstable_zeros: pairs(&r.scan.zeros),
            cancelled_zeros: pairs(&r.scan.excluded),
            winding: r.scan.winding_total,
            recheck_zeros: None,
            removability: sig(r.removability),
            stable: r.stable && r.scan.stable(),
        },
        norms: Norms {
            performance: sig(r.verified_norm),
            level: sig(r.ctx.level),
            within_level: r.verified_norm <= r.ctx.level * (1.0 + PERFORMANCE_SLACK),
            u_norm: sig(r.u_norm),
            eta_max: None,
            omega_max: None,
        },
    }
}

fn finite_plots(
    dir: &Path,
    p: &Problem,
    cfg: &FinSearchConfig,
    trace: &FinTrace,
    res: Option<&FinSearchResult>,
) -> Result<(), CliError> {
    if let Some(ms) = &trace.mu_search {
        plots::fig3_mu(dir, &ms.curve)?;
    }
    // Per level, the profile of the integer tuple that came closest.
    let mut rows = Vec::new();
    let mut mus: Vec<f64> = trace.attempts.iter().map(|a| a.mu).collect();
    mus.dedup();
    for mu in mus {
        let best = trace
            .attempts
            .iter()
            .filter(|a| a.mu == mu && !a.profile.is_empty())
            .min_by(|a, b| a.best_norm.total_cmp(&b.best_norm));
        if let Some(a) = best {
            rows.extend(a.profile.iter().map(|&(u, n)| (mu, u, n, n <= 1.0 + NORM_SLACK)));
        }
    }
    if !rows.is_empty() {
        plots::fig5_ranges(dir, &rows)?;
    }
    match res {
        Some(r) => {
            let ctrl = match &r.u {
                Some(u) => {
                    plots::fig4_umag(dir, &u.magnitude(&p.grid)?)?;
                    Controller { ctx: r.ctx.clone(), u: Arc::new(u.clone()) }
                }
                None => Controller::central(r.ctx.clone()),
            };
            let w = Window { sigma_max: r.scan.sigma_max, omega_bound: r.scan.omega_bound };
            plots::fig2_zgrid(dir, &ctrl, &w)?;
        }
        None => {
            // No design: plot |U| of the closest candidate instead.
            if let (Some(pp), Some(pick), Some(b)) = (&trace.p1p2, &trace.pick, trace.best()) {
                if let Some(q) = b.best_q {
                    let interp = Arc::new(interpolant_for(pick, b.mu, &b.integers)?);
                    let u = build_u(pp.clone(), interp, b.mu, q, cfg.a, &p.grid)?;
                    plots::fig4_umag(dir, &u.magnitude(&p.grid)?)?;
                }
            }
        }
    }
    Ok(())
}

/// Outcome of an independent re-certification.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VerifyReport {
    pub schema: String,
    pub pass: bool,
    pub performance: Option<f64>,
    pub level: Option<f64>,
    pub sigma_max: Option<f64>,
    pub omega_bound: Option<f64>,
    pub unstable_zeros: Vec<[Option<f64>; 2]>,
    pub removability: Option<f64>,
    pub diagnostics: Vec<String>,
}

pub fn cmd_verify(config_path: &Path, report_path: &Path) -> Result<VerifyReport, CliError> {
    let p = config::load(config_path)?;
    let text = std::fs::read_to_string(report_path).map_err(|e| CliError::Io(format!("{}: {e}", report_path.display())))?;
    let rr: RunReport = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", report_path.display())))?;
    if rr.schema != SCHEMA {
        return Err(CliError::Input(format!("schema: expected {SCHEMA}, found {}", rr.schema)));
    }
    let design = rr.design.as_ref().ok_or_else(|| CliError::Input(format!("design: report status is {}", rr.status)))?;
    let rho = rr.rho.ok_or_else(|| CliError::Input("rho: missing".into()))?;
    let a = rr.interpolation.as_ref().and_then(|i| i.a).unwrap_or(p.config.options.a);
    let ctx = Arc::new(SynthesisContext::new(&p.plant, &p.weights, rho, Mode::Suboptimal { a })?);
    let u = &design.u;
    let num = |v: Option<f64>, f: &str| v.ok_or_else(|| CliError::Input(format!("design.u.{f}: missing")));
    let q = UParam { u_inf: num(u.u_inf, "u_inf")?, u_z: u.u_z.unwrap_or(0.0), u_p: u.u_p.unwrap_or(0.0) };
    let grid = p.grid.refined(2);
    let opts = ContourOptions::for_delay(p.plant.h).refined();
    let mut diag = Vec::new();
    let mut removability = None;
    let ctrl = match u.kind.as_str() {
        "constant" | "first_order" => {
            if let Err(e) = q.validate() {
                diag.push(format!("free parameter rejected: {e}"));
            }
            if q.hinf_norm() > 1.0 + NORM_SLACK {
                diag.push(format!("||U|| = {} exceeds one", q.hinf_norm()));
            }
            if !finitely_many_poles(&ctx, &q) {
                let adm = admissible_uinf(&asymptotics(&ctx)?);
                diag.push(format!(
                    "infinite pole class: u_inf = {} lies outside the admissible intervals {adm:?}, asymptotic loop gain {} > 1",
                    q.u_inf,
                    loop_limit(&ctx, q.u_inf)
                ));
            }
            Controller { ctx: ctx.clone(), u: Arc::new(q) }
        }
        "central" => Controller::central(ctx.clone()),
        "nevanlinna_pick" => {
            let mu = num(u.mu, "mu")?;
            let ca = num(u.conformal_a, "conformal_a")?;
            let pp = Arc::new(build_p1p2(ctx.clone(), &grid, &ContourOptions::for_delay(p.plant.h))?);
            let pick = pick_points(&pp, ca)?;
            if pick.len() != u.integers.len() {
                diag.push(format!("{} Pick points but {} integers in the report", pick.len(), u.integers.len()));
                Controller::central(ctx.clone())
            } else {
                let interp = Arc::new(interpolant_for(&pick, mu, &u.integers)?);
                let ngrid = pp.norm_grid(&grid)?;
                let fu = build_u(pp, interp, mu, q, ca, &ngrid)?;
                if fu.grid_norm > 1.0 + NORM_SLACK {
                    diag.push(format!("max |U| = {} exceeds one", fu.grid_norm));
                }
                let r = fu.removability()?;
                if r > REMOVABLE_TOL {
                    diag.push(format!("U has a pole at a zero of P2: |1 - S_U| = {r}"));
                }
                removability = sig(r);
                Controller { ctx: ctx.clone(), u: Arc::new(fu) }
            }
        }
        other => return Err(CliError::Input(format!("design.u.kind: unknown kind {other}"))),
    };
    let mut out = VerifyReport {
        schema: "hinfstab.verify/v1".into(),
        pass: false,
        performance: None,
        level: sig(rho),
        sigma_max: None,
        omega_bound: None,
        unstable_zeros: Vec::new(),
        removability,
        diagnostics: Vec::new(),
    };
    if diag.is_empty() {
        let (w, _) = default_window(&ctrl, &grid)?;
        let stored = Window {
            sigma_max: design.certificates.sigma_max.unwrap_or(0.0),
            omega_bound: design.certificates.omega_bound.unwrap_or(0.0),
        };
        let w = Window { sigma_max: w.sigma_max.max(stored.sigma_max), omega_bound: w.omega_bound.max(stored.omega_bound) }.doubled();
        out.sigma_max = sig(w.sigma_max);
        out.omega_bound = sig(w.omega_bound);
        match rhp_zero_scan(&ctrl, &w, &opts) {
            Ok(scan) => {
                if !scan.stable() {
                    diag.push(format!("{} unstable controller poles in the doubled window", scan.zeros.len()));
                }
                out.unstable_zeros = pairs(&scan.zeros);
            }
            Err(e) => diag.push(format!("zero scan failed: {e}")),
        }
        let (norm, ok) = verify_performance(&ctrl, &grid)?;
        out.performance = sig(norm);
        if !ok {
            diag.push(format!("performance {norm} exceeds the level {rho}"));
        }
    }
    out.pass = diag.is_empty();
    out.diagnostics = diag;
    Ok(out)
}
