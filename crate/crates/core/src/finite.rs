//! Stable controllers when every suboptimal controller has finitely many unstable poles:
//! the free parameter is recovered from a logarithmic Nevanlinna-Pick problem.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::contour::ContourOptions;
use crate::controller::{verify_performance, Controller, FreeParameter, UParam};
use crate::error::{Error, Result};
use crate::grid::{sup_on_grid, FrequencyGrid};
use crate::nevanlinna::{np_interpolant, NpInterpolant};
use crate::pick::{mu_opt_search, MuSearch, PickProblem};
use crate::plant::{DelayPlant, WeightPair};
use crate::rational::RationalFn;
use crate::stability::{
    default_window, loop_limit, peak_of, rhp_zero_scan, scan_function, PeakData, RegionScan, Window,
};
use crate::synthesis::SynthesisContext;

/// Largest `|1 - S_U|` accepted at a right half plane zero of `P2`.
pub const REMOVABLE_TOL: f64 = 1e-6;
/// Slack on the norm condition `|U(jw)| <= 1`.
pub const NORM_SLACK: f64 = 1e-9;

/// Numerators `N1 = L1 + m_n F L2`, `N2 = L2(-s) + m_n F L1(-s)` of the controller
/// denominator `P1 + P2 U`, with their right half plane zeros.
#[derive(Debug, Clone)]
pub struct P1P2 {
    pub ctx: Arc<SynthesisContext>,
    pub window: Window,
    /// Right half plane zeros of `P1`, i.e. of the inner factor `M~_d`.
    pub p_roots: Vec<Complex64>,
    /// Right half plane zeros of `P2`, i.e. of the inner factor `M~`.
    pub s_roots: Vec<Complex64>,
    pub m_tilde_d: RationalFn,
    pub n1_scan: RegionScan,
    pub n2_scan: RegionScan,
}

impl P1P2 {
    pub fn n1(&self, s: Complex64) -> Result<Complex64> {
        let c = &self.ctx;
        Ok(c.l1.eval_c(s) + c.mnf(s)? * c.l2.eval_c(s))
    }

    pub fn n2(&self, s: Complex64) -> Result<Complex64> {
        let c = &self.ctx;
        Ok(c.l2.eval_c(-s) + c.mnf(s)? * c.l1.eval_c(-s))
    }

    /// `nE nm_d`, the common denominator of `P1` and `P2`.
    pub fn common_den(&self, s: Complex64) -> Complex64 {
        self.ctx.e.num().eval_c(s) * self.ctx.plant.m_d.num().eval_c(s)
    }

    pub fn p1(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.n1(s)? / self.common_den(s))
    }

    pub fn p2(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.n2(s)? / self.common_den(s))
    }

    /// `P1/P2 = N1/N2`.
    pub fn ratio(&self, s: Complex64) -> Result<Complex64> {
        let d = self.n2(s)?;
        if d.norm() == 0.0 {
            return Err(Error::PoleProximity { s, den_abs: 0.0 });
        }
        Ok(self.n1(s)? / d)
    }

    /// Limit of `N1/N2` as `|s|` grows in the closed right half plane.
    pub fn ratio_limit(&self) -> Option<f64> {
        let (l1, l2) = (&self.ctx.l1, &self.ctx.l2);
        let d = l1.degree().unwrap_or(0).max(l2.degree().unwrap_or(0));
        let sign = if d % 2 == 1 { -1.0 } else { 1.0 };
        let (c1, c2) = (l1.coeff(d), l2.coeff(d));
        if c2 == 0.0 {
            None
        } else {
            Some(c1 / (sign * c2))
        }
    }

    /// The base grid with dense points around every local maximum of `|P1/P2(jw)|` above one.
    pub fn norm_grid(&self, base: &FrequencyGrid) -> Result<FrequencyGrid> {
        let om = base.omegas();
        let r: Vec<f64> = om
            .par_iter()
            .map(|&w| self.ratio(Complex64::new(0.0, w)).map(|v| v.norm()))
            .collect::<Result<_>>()?;
        let mut pts = om.to_vec();
        for k in 1..om.len().saturating_sub(1) {
            if r[k] > 1.0 && r[k] >= r[k - 1] && r[k] >= r[k + 1] {
                let (lo, hi) = (om[k - 1], om[k + 1]);
                pts.extend((1..64).map(|i| lo + (hi - lo) * i as f64 / 64.0));
            }
        }
        Ok(FrequencyGrid::from_points(pts))
    }
}

/// Locates the right half plane zeros of `N1` and `N2` and assembles `M~_d`.
pub fn build_p1p2(ctx: Arc<SynthesisContext>, grid: &FrequencyGrid, opts: &ContourOptions) -> Result<P1P2> {
    let lim1 = loop_limit(&ctx, 0.0);
    if lim1 > 1.0 + 1e-12 {
        return Err(Error::InfinitelyManyZeros { limit: lim1 });
    }
    let f_inf = ctx.f.limit_at_infinity().abs();
    let d = ctx.l1.degree().unwrap_or(0).max(ctx.l2.degree().unwrap_or(0));
    let (c1, c2) = (ctx.l1.coeff(d), ctx.l2.coeff(d));
    let lim2 = if f_inf == 0.0 {
        0.0
    } else if c2 == 0.0 {
        f64::INFINITY
    } else {
        f_inf * (c1 / c2).abs()
    };
    if lim2 > 1.0 + 1e-12 {
        return Err(Error::InfinitelyManyZeros { limit: lim2 });
    }
    let g1 = |w: f64| -> Result<f64> {
        let s = Complex64::new(0.0, w);
        Ok((ctx.f.eval(s)? * ctx.l2.eval_c(s) / ctx.l1.eval_c(s)).norm())
    };
    let g2 = |w: f64| -> Result<f64> {
        let s = Complex64::new(0.0, w);
        Ok((ctx.f.eval(s)? * ctx.l1.eval_c(-s) / ctx.l2.eval_c(-s)).norm())
    };
    let k1 = peak_of(&g1, lim1, grid)?;
    let k2 = peak_of(&g2, lim2, grid)?;
    let peak = PeakData {
        omega_max: match (k1.omega_max, k2.omega_max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        },
        eta_max: k1.eta_max.max(k2.eta_max),
    };
    let cancel = ctx.cancelling_zeros()?;
    let window = Window::default_for(ctx.plant.h, &peak, &cancel);
    build_p1p2_in(ctx, window, opts)
}

/// [`build_p1p2`] over a given window.
pub fn build_p1p2_in(ctx: Arc<SynthesisContext>, window: Window, opts: &ContourOptions) -> Result<P1P2> {
    let cancel = ctx.cancelling_zeros()?;
    let ctx_ref = &ctx;
    let n1 = |s: Complex64| -> Result<Complex64> { Ok(ctx_ref.l1.eval_c(s) + ctx_ref.mnf(s)? * ctx_ref.l2.eval_c(s)) };
    let n2 = |s: Complex64| -> Result<Complex64> { Ok(ctx_ref.l2.eval_c(-s) + ctx_ref.mnf(s)? * ctx_ref.l1.eval_c(-s)) };
    let gain1 = |s: Complex64| -> Result<Complex64> { Ok(ctx_ref.mnf(s)? * ctx_ref.l2.eval_c(s) / ctx_ref.l1.eval_c(s)) };
    let gain2 = |s: Complex64| -> Result<Complex64> { Ok(ctx_ref.mnf(s)? * ctx_ref.l1.eval_c(-s) / ctx_ref.l2.eval_c(-s)) };
    let n1_scan = scan_function(&n1, Some(&gain1), &window, &cancel, opts)?;
    let n2_scan = scan_function(&n2, Some(&gain2), &window, &cancel, opts)?;
    let p_roots = n1_scan.zeros.clone();
    let s_roots = n2_scan.zeros.clone();
    let m_tilde_d = RationalFn::blaschke(&p_roots);
    Ok(P1P2 { ctx, window, p_roots, s_roots, m_tilde_d, n1_scan, n2_scan })
}

/// `z_i = (s_i - a)/(s_i + a)` and `w_i = 1/M~_d(s_i)`.
pub fn pick_points(p1p2: &P1P2, a: f64) -> Result<PickProblem> {
    if !(a > 0.0) {
        return Err(Error::Precondition(format!("conformal parameter a = {a} must be positive")));
    }
    if p1p2.s_roots.is_empty() {
        return Err(Error::Precondition("P2 has no right half plane zeros".into()));
    }
    let mut z = Vec::new();
    let mut w = Vec::new();
    for &s in &p1p2.s_roots {
        if !(s.re > 0.0) {
            return Err(Error::Precondition(format!("zero {s} of P2 is not in the open right half plane")));
        }
        let md = p1p2.m_tilde_d.eval(s)?;
        if md.norm() <= 1e-12 {
            return Err(Error::DegenerateInterpolation(format!("zero {s} of P2 coincides with a zero of P1")));
        }
        z.push((s - a) / (s + a));
        w.push(1.0 / md);
    }
    PickProblem::new(z, w)
}

/// `U = ((1 - S_U)/S_U) P1/P2` with `S_U = mu M~_d exp(-G)` and `G(s) = g((s-a)/(s+a), Q(s))`.
#[derive(Debug, Clone)]
pub struct FiniteU {
    pub p1p2: Arc<P1P2>,
    pub interp: Arc<NpInterpolant>,
    pub mu: f64,
    pub q: UParam,
    pub a: f64,
    /// `max |U(jw)|` on the certifying grid, including the limit at infinity.
    pub grid_norm: f64,
}

impl FiniteU {
    pub fn g(&self, s: Complex64) -> Result<Complex64> {
        let z = (s - self.a) / (s + self.a);
        self.interp.eval(z, self.q.eval(s)?)
    }

    pub fn sensitivity(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.mu * self.p1p2.m_tilde_d.eval(s)? * (-self.g(s)?).exp())
    }

    fn value(&self, s: Complex64) -> Result<Complex64> {
        let sens = self.sensitivity(s)?;
        if sens.norm() == 0.0 {
            return Err(Error::SensitivityZero { omega: s.im });
        }
        let u = (1.0 - sens) / sens * self.p1p2.ratio(s)?;
        if u.is_finite() {
            Ok(u)
        } else {
            Err(Error::Overflow { s })
        }
    }

    fn limit(&self) -> Option<f64> {
        let r = self.p1p2.ratio_limit()?;
        let g1 = self.interp.eval(Complex64::new(1.0, 0.0), Complex64::new(self.q.u_inf, 0.0)).ok()?;
        let sens = self.mu * (-g1).exp();
        let u = (1.0 - sens) / sens * r;
        if u.im.abs() <= 1e-9 * (1.0 + u.re.abs()) && u.re.is_finite() {
            Some(u.re)
        } else {
            None
        }
    }

    /// `(w, |U(jw)|)` on a grid.
    pub fn magnitude(&self, grid: &FrequencyGrid) -> Result<Vec<(f64, f64)>> {
        grid.omegas()
            .par_iter()
            .map(|&w| self.value(Complex64::new(0.0, w)).map(|u| (w, u.norm())))
            .collect()
    }

    /// Largest `|1 - S_U(s_j)|` over the right half plane zeros of `P2`; small values mean
    /// `U` has removable singularities there.
    pub fn removability(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &s in &self.p1p2.s_roots {
            worst = worst.max((1.0 - self.sensitivity(s)?).norm());
        }
        Ok(worst)
    }
}

impl FreeParameter for FiniteU {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        self.value(s)
    }

    fn limit_at_infinity(&self) -> Option<f64> {
        self.limit()
    }

    fn norm_bound(&self) -> Option<f64> {
        Some(self.grid_norm)
    }
}

/// Builds `U` and its grid norm (grid supremum with local refinement, and the limit at infinity).
pub fn build_u(
    p1p2: Arc<P1P2>,
    interp: Arc<NpInterpolant>,
    mu: f64,
    q: UParam,
    a: f64,
    grid: &FrequencyGrid,
) -> Result<FiniteU> {
    q.validate()?;
    let mut u = FiniteU { p1p2, interp, mu, q, a, grid_norm: f64::INFINITY };
    let (sup, _) = sup_on_grid(|w| u.value(Complex64::new(0.0, w)).map(|v| v.norm()), grid)?;
    let tail = u.limit().map(f64::abs).unwrap_or(f64::INFINITY);
    u.grid_norm = sup.max(tail);
    Ok(u)
}

// Values along the grid that do not depend on mu or Q.
struct FreqCache {
    s: Vec<Complex64>,
    z: Vec<Complex64>,
    md: Vec<Complex64>,
    ratio: Vec<Complex64>,
}

impl FreqCache {
    fn new(p1p2: &P1P2, grid: &FrequencyGrid, a: f64) -> Result<Self> {
        let s: Vec<Complex64> = grid.omegas().iter().map(|&w| Complex64::new(0.0, w)).collect();
        let z = s.iter().map(|&s| (s - a) / (s + a)).collect();
        let md = s.iter().map(|&s| p1p2.m_tilde_d.eval(s)).collect::<Result<_>>()?;
        let ratio = s.par_iter().map(|&s| p1p2.ratio(s)).collect::<Result<_>>()?;
        Ok(FreqCache { s, z, md, ratio })
    }

    // Per-frequency Moebius coefficients of the interpolant, combined with mu M~_d and P1/P2.
    fn bind(&self, interp: &NpInterpolant, mu: f64) -> Vec<([Complex64; 4], Complex64)> {
        (0..self.s.len())
            .into_par_iter()
            .map(|k| (interp.coefficients(self.z[k]), mu * self.md[k]))
            .collect()
    }

    // Grid maximum of |U| for one free parameter; infinite on any evaluation failure.
    fn max_u(&self, bound: &[([Complex64; 4], Complex64)], q: &UParam, tail: Option<f64>) -> f64 {
        let mut m = tail.map(f64::abs).unwrap_or(0.0);
        for (k, (c, smd)) in bound.iter().enumerate() {
            let qv = match q.eval(self.s[k]) {
                Ok(v) => v,
                Err(_) => return f64::INFINITY,
            };
            let f = (c[0] * qv + c[1]) / (c[2] * qv + c[3]);
            let g = (1.0 - f) / (1.0 + f);
            let sens = smd * (-g).exp();
            let u = ((1.0 - sens) / sens * self.ratio[k]).norm();
            if !u.is_finite() {
                return f64::INFINITY;
            }
            m = m.max(u);
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct FinSearchConfig {
    pub rho_schedule: Vec<f64>,
    pub gamma_opt: f64,
    /// Extra interpolation point of the suboptimal problem.
    pub interpolation_point: f64,
    /// Conformal parameter of the map to the disk.
    pub a: f64,
    /// Multiples of `mu_opt` tried after `mu_opt` itself.
    pub mu_factors: Vec<f64>,
    pub mu_max: Option<f64>,
    pub q_step: f64,
    /// Pole grid for first-order `Q`; `[0]` with `uz_grid = [0]` keeps `Q` constant.
    pub up_grid: Vec<f64>,
    pub uz_grid: Vec<f64>,
    pub integer_bound: i64,
    pub grid: FrequencyGrid,
}

impl FinSearchConfig {
    pub fn new(rho: f64, gamma_opt: f64, interpolation_point: f64) -> Self {
        FinSearchConfig {
            rho_schedule: vec![rho],
            gamma_opt,
            interpolation_point,
            a: 1.0,
            mu_factors: vec![1.02, 1.05, 1.1, 1.2, 1.5, 2.0],
            mu_max: None,
            q_step: 1e-3,
            up_grid: vec![0.0],
            uz_grid: vec![0.0],
            integer_bound: 20,
            grid: FrequencyGrid::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rho_schedule.is_empty() {
            return Err(Error::Precondition("empty rho schedule".into()));
        }
        for &r in &self.rho_schedule {
            if r <= self.gamma_opt {
                return Err(Error::LevelNotAboveOptimal { level: r, gamma_opt: self.gamma_opt });
            }
        }
        if !(self.q_step > 0.0) || self.up_grid.is_empty() || self.uz_grid.is_empty() {
            return Err(Error::Precondition("free parameter grids must be nonempty with a positive step".into()));
        }
        Ok(())
    }

    /// Candidate free parameters: constants `u` on the step grid over `[-1, 1]`, and first-order
    /// ones for every admissible grid pair.
    pub fn q_candidates(&self) -> Vec<UParam> {
        let n = (2.0 / self.q_step).round() as i64;
        let us: Vec<f64> = (0..=n).map(|k| ((-1.0 + k as f64 * self.q_step) * 1e9).round() / 1e9).collect();
        let mut out = Vec::new();
        for &up in &self.up_grid {
            for &uz in &self.uz_grid {
                for &u in &us {
                    let q = if up == 0.0 && uz == 0.0 { Ok(UParam::constant(u)) } else { UParam::first_order(u, uz, up) };
                    if let Ok(q) = q {
                        out.push(q);
                    }
                }
            }
        }
        out
    }
}

/// Best free parameter found at one level `mu`.
#[derive(Debug, Clone)]
pub struct MuAttempt {
    pub mu: f64,
    pub integers: Vec<i64>,
    pub best_q: Option<UParam>,
    pub best_norm: f64,
    /// Candidates meeting the norm condition.
    pub passing: usize,
    /// `(u_inf, grid max |U|)` for the constant candidates.
    pub profile: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct FinSearchResult {
    pub rho: f64,
    pub ctx: Arc<SynthesisContext>,
    pub p1p2: Arc<P1P2>,
    pub pick: Option<PickProblem>,
    pub mu_search: Option<MuSearch>,
    pub mu: f64,
    pub integers: Vec<i64>,
    pub q: UParam,
    /// `None` when the central controller is already stable.
    pub u: Option<FiniteU>,
    pub u_norm: f64,
    pub removability: f64,
    pub scan: RegionScan,
    pub verified_norm: f64,
    pub stable: bool,
    pub attempts: Vec<MuAttempt>,
}

/// Interpolant for `mu` and `n`, after shifting `n` to its conjugate symmetric form.
pub fn interpolant_for(pp: &PickProblem, mu: f64, n: &[i64]) -> Result<NpInterpolant> {
    let m = pp.symmetric_shift(n).ok_or_else(|| {
        Error::DegenerateInterpolation(format!("integers {n:?} admit no conjugate symmetric interpolant"))
    })?;
    let shifted: Vec<i64> = n.iter().map(|k| k + m).collect();
    np_interpolant(&pp.z, &pp.targets(mu, &shifted))
}

/// Sweeps the free parameter candidates at one `mu` and integer tuple.
pub fn q_sweep(
    p1p2: &Arc<P1P2>,
    pp: &PickProblem,
    mu: f64,
    n: &[i64],
    candidates: &[UParam],
    grid: &FrequencyGrid,
    a: f64,
) -> Result<MuAttempt> {
    let interp = interpolant_for(pp, mu, n)?;
    let cache = FreqCache::new(p1p2, grid, a)?;
    let bound = cache.bind(&interp, mu);
    let r_inf = p1p2.ratio_limit();
    let one = Complex64::new(1.0, 0.0);
    let norms: Vec<f64> = candidates
        .par_iter()
        .map(|q| {
            let tail = r_inf.and_then(|r| {
                let g1 = interp.eval(one, Complex64::new(q.u_inf, 0.0)).ok()?;
                let sens = mu * (-g1).exp();
                Some(((1.0 - sens) / sens * r).norm())
            });
            cache.max_u(&bound, q, tail.or(Some(f64::INFINITY)))
        })
        .collect();
    let mut best: Option<(UParam, f64)> = None;
    for (q, &v) in candidates.iter().zip(&norms) {
        let better = match best {
            None => true,
            Some((bq, bv)) => v < bv || (v == bv && (q.u_inf.abs(), q.u_p) < (bq.u_inf.abs(), bq.u_p)),
        };
        if better {
            best = Some((*q, v));
        }
    }
    let passing = norms.iter().filter(|&&v| v <= 1.0 + NORM_SLACK).count();
    let profile = candidates
        .iter()
        .zip(&norms)
        .filter(|(q, _)| q.is_constant())
        .map(|(q, &v)| (q.u_inf, v))
        .collect();
    Ok(MuAttempt {
        mu,
        integers: n.to_vec(),
        best_q: best.map(|b| b.0),
        best_norm: best.map_or(f64::INFINITY, |b| b.1),
        passing,
        profile,
    })
}

/// Certificates for a finite-case design: no uncancelled zero of `N1 + N2 U` in the window,
/// removable singularities of `U` at the zeros of `P2`, and the performance level.
pub fn certify_finite(u: &FiniteU, grid: &FrequencyGrid, opts: &ContourOptions) -> Result<(RegionScan, f64, f64, bool)> {
    let ctrl = Controller { ctx: u.p1p2.ctx.clone(), u: Arc::new(u.clone()) };
    let (window, _) = default_window(&ctrl, grid)?;
    let window = Window {
        sigma_max: window.sigma_max.max(u.p1p2.window.sigma_max),
        omega_bound: window.omega_bound.max(u.p1p2.window.omega_bound),
    };
    let scan = rhp_zero_scan(&ctrl, &window, opts)?;
    let removable = u.removability()?;
    let (norm, ok) = verify_performance(&ctrl, grid)?;
    Ok((scan, removable, norm, ok && removable <= REMOVABLE_TOL))
}

/// Intermediate data of the last scheduled level, kept whether or not the search succeeds.
#[derive(Debug, Clone, Default)]
pub struct FinTrace {
    pub p1p2: Option<Arc<P1P2>>,
    pub pick: Option<PickProblem>,
    pub mu_search: Option<MuSearch>,
    pub attempts: Vec<MuAttempt>,
}

impl FinTrace {
    /// Attempt with the smallest grid norm.
    pub fn best(&self) -> Option<&MuAttempt> {
        self.attempts.iter().min_by(|a, b| a.best_norm.total_cmp(&b.best_norm))
    }
}

/// Runs the finite-pole stabilization over the level schedules.
pub fn stabilize_finite(plant: &DelayPlant, weights: &WeightPair, cfg: &FinSearchConfig) -> Result<FinSearchResult> {
    stabilize_finite_traced(plant, weights, cfg, &mut FinTrace::default())
}

/// [`stabilize_finite`], recording the Pick data and the per-level attempts in `trace`.
pub fn stabilize_finite_traced(
    plant: &DelayPlant,
    weights: &WeightPair,
    cfg: &FinSearchConfig,
    trace: &mut FinTrace,
) -> Result<FinSearchResult> {
    cfg.validate()?;
    let opts = ContourOptions::for_delay(plant.h);
    let candidates = cfg.q_candidates();
    let mut report = Vec::new();
    for &rho in &cfg.rho_schedule {
        let ctx = Arc::new(SynthesisContext::suboptimal(plant, weights, rho, cfg.gamma_opt, cfg.interpolation_point)?);
        let p1p2 = Arc::new(build_p1p2(ctx.clone(), &cfg.grid, &opts)?);
        *trace = FinTrace { p1p2: Some(p1p2.clone()), ..FinTrace::default() };
        if p1p2.p_roots.is_empty() {
            let ctrl = Controller::central(ctx.clone());
            let (window, _) = default_window(&ctrl, &cfg.grid)?;
            let scan = rhp_zero_scan(&ctrl, &window, &opts)?;
            let (norm, ok) = verify_performance(&ctrl, &cfg.grid)?;
            if !scan.stable() {
                return Err(Error::CertificateContradiction(format!(
                    "P1 has no unstable zeros but the central controller scan finds {:?}",
                    scan.zeros
                )));
            }
            return Ok(FinSearchResult {
                rho,
                ctx,
                p1p2,
                pick: None,
                mu_search: None,
                mu: 0.0,
                integers: Vec::new(),
                q: UParam::constant(0.0),
                u: None,
                u_norm: 0.0,
                removability: 0.0,
                scan,
                verified_norm: norm,
                stable: ok,
                attempts: Vec::new(),
            });
        }
        let pp = pick_points(&p1p2, cfg.a)?;
        trace.pick = Some(pp.clone());
        let ms = mu_opt_search(&pp, cfg.integer_bound)?;
        trace.mu_search = Some(ms.clone());
        let ngrid = p1p2.norm_grid(&cfg.grid)?;
        let mut mus = vec![ms.mu_opt];
        mus.extend(cfg.mu_factors.iter().map(|f| f * ms.mu_opt).filter(|&m| cfg.mu_max.map_or(true, |mx| m <= mx)));
        let mut attempts = Vec::new();
        for (i, &mu) in mus.iter().enumerate() {
            let tuples: Vec<Vec<i64>> = if i == 0 {
                vec![ms.n.clone()]
            } else {
                ms.tuples.iter().filter(|(_, t)| *t <= mu).map(|(n, _)| n.clone()).collect()
            };
            for n in &tuples {
                if pp.symmetric_shift(n).is_none() {
                    continue;
                }
                // At mu_opt the interpolant is unique, so one candidate suffices.
                let cands: Vec<UParam> = if i == 0 { vec![UParam::constant(0.0)] } else { candidates.clone() };
                let att = match q_sweep(&p1p2, &pp, mu, n, &cands, &ngrid, cfg.a) {
                    Ok(a) => a,
                    Err(e) => {
                        report.push(format!("rho {rho}, mu {mu}, n {n:?}: {e}"));
                        continue;
                    }
                };
                let best = att.best_q.filter(|_| att.best_norm <= 1.0 + NORM_SLACK);
                attempts.push(att.clone());
                trace.attempts.push(att.clone());
                let Some(q) = best else { continue };
                let interp = Arc::new(interpolant_for(&pp, mu, n)?);
                let u = build_u(p1p2.clone(), interp, mu, q, cfg.a, &ngrid)?;
                if u.grid_norm > 1.0 + NORM_SLACK {
                    report.push(format!("rho {rho}, mu {mu}: refined norm {} above one", u.grid_norm));
                    continue;
                }
                let (scan, removable, norm, ok) = certify_finite(&u, &cfg.grid, &opts)?;
                if !scan.stable() || removable > REMOVABLE_TOL {
                    return Err(Error::CertificateContradiction(format!(
                        "norm condition holds (max |U| = {}) but the controller scan finds {:?} and |1 - S_U| reaches {removable} at the zeros of P2",
                        u.grid_norm, scan.zeros
                    )));
                }
                return Ok(FinSearchResult {
                    rho,
                    ctx,
                    p1p2: p1p2.clone(),
                    pick: Some(pp),
                    mu_search: Some(ms),
                    mu,
                    integers: n.clone(),
                    q,
                    u_norm: u.grid_norm,
                    u: Some(u),
                    removability: removable,
                    scan,
                    verified_norm: norm,
                    stable: ok,
                    attempts,
                });
            }
        }
        let best = attempts
            .iter()
            .min_by(|a, b| a.best_norm.total_cmp(&b.best_norm))
            .map(|a| format!("best max |U| = {} at mu = {} with {:?}", a.best_norm, a.mu, a.best_q))
            .unwrap_or_else(|| "no candidate evaluated".into());
        report.push(format!("rho {rho}: mu_opt = {} with n = {:?}; {best}", ms.mu_opt, ms.n));
    }
    Err(Error::Exhausted(format!(
        "no free parameter meets the norm condition for any scheduled level: {}",
        report.join("; ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::roots::poly_roots;
    use crate::synthesis::Mode;

    fn rf(n: &[f64], d: &[f64]) -> RationalFn {
        RationalFn::from_coeffs(n, d).unwrap()
    }

    fn ex2() -> (DelayPlant, WeightPair) {
        let c = 5f64.sqrt();
        let g = FrequencyGrid::default();
        let p = DelayPlant::new(3.0, RationalFn::one(), RationalFn::one(), RationalFn::one(), &g).unwrap();
        let w = WeightPair::new(rf(&[c, 1.0], &[1.0, 1.0]), rf(&[0.5 * c, 0.5], &[1.0])).unwrap();
        (p, w)
    }

    #[test]
    fn two_block_p_and_s_roots() {
        let (p, w) = ex2();
        let ctx = Arc::new(SynthesisContext::suboptimal(&p, &w, 1.9454, 1.9452, 3.0).unwrap());
        let g = FrequencyGrid::log(1e-3, 1e4, 2000);
        let pp = build_p1p2(ctx, &g, &ContourOptions::for_delay(3.0)).unwrap();
        assert_eq!(pp.p_roots.len(), 2);
        for r in &pp.p_roots {
            assert!((r.re - 0.0287).abs() < 5e-3 && (r.im.abs() - 2.2346).abs() < 5e-3, "{r}");
        }
        assert!(pp.s_roots.iter().any(|r| (r.re - 0.0297).abs() < 5e-3 && (r.im - 2.2346).abs() < 5e-3));
        for k in 0..50 {
            let om = 0.01 + 0.2 * k as f64;
            assert!((pp.m_tilde_d.eval_jw(om).unwrap().norm() - 1.0).abs() < 1e-10);
        }
        // Near the axis zeros of E the quotient stays bounded.
        for b in pp.ctx.betas.expanded() {
            let s = b + Complex64::new(1e-7, 1e-7);
            assert!(pp.p1(s).unwrap().norm() < 1e6 && pp.p2(s).unwrap().norm() < 1e6);
        }
    }

    #[test]
    fn pick_point_map() {
        let (p, w) = ex2();
        let ctx = Arc::new(SynthesisContext::suboptimal(&p, &w, 1.9454, 1.9452, 3.0).unwrap());
        let mut pp = build_p1p2(ctx, &FrequencyGrid::log(1e-3, 1e4, 2000), &ContourOptions::for_delay(3.0)).unwrap();
        pp.s_roots = vec![Complex64::new(1.0, 0.0)];
        let prob = pick_points(&pp, 1.0).unwrap();
        assert_eq!(prob.z[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn delay_free_zeros_match_polynomial_roots() {
        // With h -> 0 and m_n = 1, N1 = L1 + F L2 is rational; compare its zeros.
        let g = FrequencyGrid::default();
        let p = DelayPlant::new(1e-9, RationalFn::one(), RationalFn::one(), RationalFn::one(), &g).unwrap();
        let c = 5f64.sqrt();
        let w = WeightPair::new(rf(&[c, 1.0], &[1.0, 1.0]), rf(&[0.5 * c, 0.5], &[1.0])).unwrap();
        let ctx = Arc::new(SynthesisContext::new(&p, &w, 1.9454, Mode::Suboptimal { a: 3.0 }).unwrap());
        let win = Window { sigma_max: 30.0, omega_bound: 300.0 };
        let pp = build_p1p2_in(ctx.clone(), win, &ContourOptions::default()).unwrap();
        let f = &ctx.f;
        let num: Poly = &(&ctx.l1 * f.den()) + &(&ctx.l2 * f.num());
        let cancel = ctx.cancelling_zeros().unwrap();
        let want: Vec<Complex64> = poly_roots(&num)
            .unwrap()
            .expanded()
            .into_iter()
            .filter(|r| r.re > 1e-9 && !cancel.iter().any(|c| (c - r).norm() < 1e-6))
            .collect();
        assert_eq!(pp.p_roots.len(), want.len());
        for r in &want {
            assert!(pp.p_roots.iter().any(|q| (q - r).norm() < 1e-8));
        }
    }
}
