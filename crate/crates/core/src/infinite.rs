//! Search over first-order free parameters for a stable controller when the central
//! controller has infinitely many unstable poles.

use std::sync::Arc;

use rayon::prelude::*;

use crate::contour::ContourOptions;
use crate::controller::{verify_performance, Controller, UParam};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::plant::{DelayPlant, WeightPair};
use crate::poly::Poly;
use crate::roots::poly_roots;
use crate::stability::{
    admissible_uinf, asymptotics, default_window, peak_data, rhp_zero_scan, AsymptoticData, PeakData, RegionScan,
};
use crate::synthesis::SynthesisContext;

#[derive(Debug, Clone)]
pub struct InfSearchConfig {
    pub rho: f64,
    /// Optimal level; `rho` must exceed it.
    pub gamma_opt: f64,
    /// Extra interpolation point of the suboptimal problem.
    pub a: f64,
    pub uinf_step: f64,
    /// Candidate poles `u_p`; `[0]` together with `uz_grid = [0]` means constant `U`.
    pub up_grid: Vec<f64>,
    pub uz_grid: Vec<f64>,
    /// Maximum number of contour scans.
    pub scan_budget: usize,
    pub grid: FrequencyGrid,
}

impl InfSearchConfig {
    pub fn constant(rho: f64, gamma_opt: f64, a: f64) -> Self {
        InfSearchConfig {
            rho,
            gamma_opt,
            a,
            uinf_step: 1e-3,
            up_grid: vec![0.0],
            uz_grid: vec![0.0],
            scan_budget: 25,
            grid: FrequencyGrid::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rho <= self.gamma_opt {
            return Err(Error::LevelNotAboveOptimal { level: self.rho, gamma_opt: self.gamma_opt });
        }
        if !(self.uinf_step > 0.0) || self.up_grid.is_empty() || self.uz_grid.is_empty() {
            return Err(Error::Precondition("search grids must be nonempty with a positive step".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub u: UParam,
    pub peak: PeakData,
}

#[derive(Debug, Clone)]
pub struct InfSearchResult {
    pub ctx: Arc<SynthesisContext>,
    pub asymptotics: AsymptoticData,
    pub admissible: Vec<(f64, f64)>,
    pub u: UParam,
    pub peak: PeakData,
    pub scan: RegionScan,
    /// Zero scan repeated with a doubled window and a finer contour.
    pub recheck: RegionScan,
    pub verified_norm: f64,
    pub stable: bool,
    pub scans_used: usize,
}

/// Multiples of `step` strictly inside each interval.
pub fn uinf_candidates(intervals: &[(f64, f64)], step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &(lo, hi) in intervals {
        let k0 = (lo / step).floor() as i64;
        let k1 = (hi / step).ceil() as i64;
        for k in k0..=k1 {
            let u = k as f64 * step;
            let u = (u * 1e9).round() / 1e9;
            if u > lo && u < hi && u.abs() <= 1.0 {
                out.push(u);
            }
        }
    }
    out
}

fn strictly_stable(p: &Poly) -> bool {
    if p.degree().unwrap_or(0) == 0 {
        return !p.is_zero();
    }
    match poly_roots(p) {
        Ok(r) => r.roots.iter().all(|z| z.re < 0.0),
        Err(_) => false,
    }
}

/// Whether `L1U` (with the denominator of `U` cleared) has all its zeros in the open left half plane.
pub fn l1u_stable(ctx: &SynthesisContext, u: &UParam) -> bool {
    strictly_stable(&u.l1u_poly(&ctx.l1, &ctx.l2))
}

/// Maximal runs of constant `u` on a `step` grid over `[-1, 1]` for which `L1 + u L2(-s)` is stable.
pub fn l1u_stable_ranges(ctx: &SynthesisContext, step: f64) -> Vec<(f64, f64)> {
    let us = uinf_candidates(&[(-1.0 - 1e-12, 1.0 + 1e-12)], step);
    let flags: Vec<bool> = us.par_iter().map(|&u| l1u_stable(ctx, &UParam::constant(u))).collect();
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for (i, &u) in us.iter().enumerate() {
        match (flags[i], start) {
            (true, None) => start = Some(u),
            (false, Some(s)) => {
                out.push((s, us[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    if let (Some(s), Some(&last)) = (start, us.last()) {
        out.push((s, last));
    }
    out
}

fn rank_key(c: &Candidate) -> (f64, f64, f64, f64) {
    let w = c.peak.omega_max.unwrap_or(0.0);
    (w, c.peak.eta_max, c.u.u_inf.abs(), c.u.u_p)
}

/// Admissible, `L1U`-stable candidates with their peak data, best first.
pub fn ranked_candidates(ctx: &Arc<SynthesisContext>, cfg: &InfSearchConfig, intervals: &[(f64, f64)]) -> Result<Vec<Candidate>> {
    let mut triples = Vec::new();
    for u_inf in uinf_candidates(intervals, cfg.uinf_step) {
        for &up in &cfg.up_grid {
            for &uz in &cfg.uz_grid {
                let u = if up == 0.0 && uz == 0.0 {
                    UParam::constant(u_inf)
                } else {
                    match UParam::first_order(u_inf, uz, up) {
                        Ok(u) => u,
                        Err(_) => continue,
                    }
                };
                triples.push(u);
            }
        }
    }
    let mut cands: Vec<Candidate> = triples
        .into_par_iter()
        .filter(|u| l1u_stable(ctx, u))
        .map(|u| {
            let ctrl = Controller { ctx: ctx.clone(), u: Arc::new(u) };
            peak_data(&ctrl, &cfg.grid).map(|peak| Candidate { u, peak })
        })
        .collect::<Result<_>>()?;
    cands.sort_by(|a, b| rank_key(a).partial_cmp(&rank_key(b)).unwrap_or(std::cmp::Ordering::Equal));
    Ok(cands)
}

/// Runs the first-order free parameter search at level `cfg.rho`.
pub fn stabilize_infinite(plant: &DelayPlant, weights: &WeightPair, cfg: &InfSearchConfig) -> Result<InfSearchResult> {
    cfg.validate()?;
    let ctx = Arc::new(SynthesisContext::suboptimal(plant, weights, cfg.rho, cfg.gamma_opt, cfg.a)?);
    let asym = asymptotics(&ctx)?;
    let admissible = admissible_uinf(&asym);
    if admissible.is_empty() {
        return Err(Error::Exhausted(format!(
            "no u_inf in [-1, 1] keeps the asymptotic loop gain at or below one (f_inf = {}, k = {})",
            asym.f_inf, asym.k
        )));
    }
    let cands = ranked_candidates(&ctx, cfg, &admissible)?;
    if cands.is_empty() {
        return Err(Error::Exhausted("no admissible candidate has a stable L1U".into()));
    }
    let opts = ContourOptions::for_delay(plant.h);
    let mut scans = 0;
    let mut failures = Vec::new();
    for c in cands.iter().take(cfg.scan_budget) {
        scans += 1;
        let ctrl = Controller { ctx: ctx.clone(), u: Arc::new(c.u) };
        let (window, _) = default_window(&ctrl, &cfg.grid)?;
        let scan = match rhp_zero_scan(&ctrl, &window, &opts) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("u_inf = {}: {e}", c.u.u_inf));
                continue;
            }
        };
        if !scan.stable() {
            failures.push(format!("u_inf = {}: {} unstable poles", c.u.u_inf, scan.zeros.len()));
            continue;
        }
        let recheck = rhp_zero_scan(&ctrl, &window.doubled(), &opts.refined())?;
        if !recheck.stable() {
            failures.push(format!("u_inf = {}: refined scan disagrees", c.u.u_inf));
            continue;
        }
        let (norm, ok) = verify_performance(&ctrl, &cfg.grid)?;
        if !ok {
            failures.push(format!("u_inf = {}: performance {norm} above level", c.u.u_inf));
            continue;
        }
        return Ok(InfSearchResult {
            ctx,
            asymptotics: asym,
            admissible,
            u: c.u,
            peak: c.peak,
            scan,
            recheck,
            verified_norm: norm,
            stable: true,
            scans_used: scans,
        });
    }
    let frontier: Vec<String> = cands
        .iter()
        .take(5)
        .map(|c| format!("(u_inf {}, omega_max {:?}, eta_max {})", c.u.u_inf, c.peak.omega_max, c.peak.eta_max))
        .collect();
    Err(Error::Exhausted(format!(
        "{scans} scans without a stable candidate; best frontier {}; {}",
        frontier.join(", "),
        failures.join("; ")
    )))
}

/// One row of the sweep over constant `u_inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub u_inf: f64,
    pub omega_max: Option<f64>,
    pub eta_max: f64,
}

/// `(u_inf, omega_max, eta_max)` for constant `U` across the admissible intervals.
pub fn sweep_report(plant: &DelayPlant, weights: &WeightPair, cfg: &InfSearchConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let ctx = Arc::new(SynthesisContext::suboptimal(plant, weights, cfg.rho, cfg.gamma_opt, cfg.a)?);
    let admissible = admissible_uinf(&asymptotics(&ctx)?);
    sweep_context(&ctx, &admissible, cfg.uinf_step, &cfg.grid)
}

pub fn sweep_context(
    ctx: &Arc<SynthesisContext>,
    intervals: &[(f64, f64)],
    step: f64,
    grid: &FrequencyGrid,
) -> Result<Vec<SweepRow>> {
    uinf_candidates(intervals, step)
        .into_par_iter()
        .map(|u_inf| {
            let ctrl = Controller { ctx: ctx.clone(), u: Arc::new(UParam::constant(u_inf)) };
            let p = peak_data(&ctrl, grid)?;
            Ok(SweepRow { u_inf, omega_max: p.omega_max, eta_max: p.eta_max })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalFn;

    fn rf(n: &[f64], d: &[f64]) -> RationalFn {
        RationalFn::from_coeffs(n, d).unwrap()
    }

    fn ex1() -> (DelayPlant, WeightPair) {
        let g = FrequencyGrid::default();
        let p = DelayPlant::new(0.1, rf(&[-1.0, 1.0], &[1.0, 1.0]), RationalFn::one(), RationalFn::one(), &g).unwrap();
        let w = WeightPair::new(rf(&[1.0, 0.6], &[1.0, 1.0]), RationalFn::zero()).unwrap();
        (p, w)
    }

    #[test]
    fn candidates_are_step_multiples() {
        let u = uinf_candidates(&[(-0.9909, -0.6668)], 1e-3);
        assert_eq!(u.first().copied(), Some(-0.990));
        assert_eq!(u.last().copied(), Some(-0.667));
        assert_eq!(u.len(), 324);
    }

    #[test]
    fn rho_below_optimal_rejected() {
        let (p, w) = ex1();
        let cfg = InfSearchConfig::constant(0.8, 0.8108, 2.0);
        assert!(matches!(stabilize_infinite(&p, &w, &cfg), Err(Error::LevelNotAboveOptimal { .. })));
    }

    #[test]
    fn one_block_search_finds_stable_u() {
        let (p, w) = ex1();
        let mut cfg = InfSearchConfig::constant(0.814, 0.81081, 2.0);
        cfg.uinf_step = 1e-2;
        cfg.grid = FrequencyGrid::log(1e-3, 1e4, 1500);
        let r = stabilize_infinite(&p, &w, &cfg).unwrap();
        assert!(r.stable && r.scan.zeros.is_empty());
        assert!(r.verified_norm <= 0.814 * 1.001);
        assert!(r.u.u_inf > -0.9909 && r.u.u_inf < -0.6668);
    }

    #[test]
    fn sweep_without_crossing_has_empty_column() {
        let (p, w) = ex1();
        let ctx = Arc::new(SynthesisContext::new(&p, &w, 0.95, crate::synthesis::Mode::Suboptimal { a: 2.0 }).unwrap());
        let rows = sweep_context(&ctx, &[(-0.05, 0.05)], 1e-2, &FrequencyGrid::log(1e-3, 1e3, 300)).unwrap();
        for r in rows {
            if r.eta_max < 1.0 {
                assert!(r.omega_max.is_none());
            }
        }
    }
}
