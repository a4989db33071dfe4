//! Unstable poles of the delay controller: asymptotic limits, finiteness tests,
//! loop-gain peak data and certified right half plane zero scans.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::contour::{locate_zeros, ContourOptions, Rect};
use crate::controller::{Controller, FreeParameter};
use crate::error::{Error, Result};
use crate::grid::{golden_max, FrequencyGrid};
use crate::plant::{DelayPlant, WeightPair};
use crate::synthesis::{SynthesisContext, AXIS_TOL};

/// Limits at infinity of the controller building blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticData {
    /// `lim |F(jw)|`.
    pub f_inf: f64,
    /// `lim L2(jw)/L1(jw)`.
    pub k: f64,
    /// Parity of `n1 + l`.
    pub odd: bool,
}

pub fn asymptotics(ctx: &SynthesisContext) -> Result<AsymptoticData> {
    if ctx.l1.is_zero() {
        return Err(Error::Precondition("L1 is identically zero".into()));
    }
    let d = ctx.l1.degree().unwrap_or(0).max(ctx.l2.degree().unwrap_or(0));
    let c1 = ctx.l1.coeff(d);
    let k = if c1 == 0.0 { f64::INFINITY } else { ctx.l2.coeff(d) / c1 };
    Ok(AsymptoticData {
        f_inf: ctx.f.limit_at_infinity().abs(),
        k,
        odd: (ctx.n1() + ctx.l()) % 2 == 1,
    })
}

/// `lim L_U` for a free parameter tending to `u_inf`, from the top coefficients of `L1`, `L2`.
pub fn l_u_limit(ctx: &SynthesisContext, u_inf: f64) -> f64 {
    let d = ctx.l1.degree().unwrap_or(0).max(ctx.l2.degree().unwrap_or(0));
    let sign = if d % 2 == 1 { -1.0 } else { 1.0 };
    let (c1, c2) = (ctx.l1.coeff(d), ctx.l2.coeff(d));
    let num = c2 + sign * c1 * u_inf;
    let den = c1 + sign * c2 * u_inf;
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `lim |F L_U|` at infinity.
pub fn loop_limit(ctx: &SynthesisContext, u_inf: f64) -> f64 {
    let f = ctx.f.limit_at_infinity().abs();
    if f == 0.0 {
        return 0.0;
    }
    f * l_u_limit(ctx, u_inf).abs()
}

/// Finitely many unstable controller poles if and only if `lim |F L_U| <= 1`.
pub fn finitely_many_poles(ctx: &SynthesisContext, u: &dyn FreeParameter) -> bool {
    match u.limit_at_infinity() {
        Some(u_inf) => loop_limit(ctx, u_inf) <= 1.0 + 1e-12,
        None => false,
    }
}

/// Signed intervals of `u_inf` (within `[-1, 1]`) that leave finitely many unstable poles.
pub fn admissible_uinf(asym: &AsymptoticData) -> Vec<(f64, f64)> {
    let f = asym.f_inf;
    let k = asym.k;
    if f <= 1.0 {
        return vec![(-1.0, 1.0)];
    }
    if !f.is_finite() || !k.is_finite() {
        return Vec::new();
    }
    let ak = k.abs();
    if ak == 0.0 {
        let b = (1.0 / f).min(1.0);
        return vec![(-b, b)];
    }
    // Sign of u_inf in the regime of the first inequality: k u < 0 for odd n1 + l, k u > 0 for even.
    let s1 = if asym.odd { -k.signum() } else { k.signum() };
    let mut out = Vec::new();
    if ak <= 1.0 / f {
        let b = ((1.0 - f * ak) / (f - ak)).min(1.0);
        out.push(if s1 > 0.0 { (0.0, b) } else { (-b, 0.0) });
    }
    if ak < 1.0 {
        let lo = ((f * ak - 1.0) / (f - ak)).max(0.0);
        let hi = ((f * ak + 1.0) / (f + ak)).min(1.0);
        if hi > lo {
            out.push(if s1 > 0.0 { (-hi, -lo) } else { (lo, hi) });
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Adjacent pieces meeting at zero form one interval.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for iv in out {
        match merged.last_mut() {
            Some(last) if last.1 >= iv.0 => last.1 = last.1.max(iv.1),
            _ => merged.push(iv),
        }
    }
    merged
}

/// Highest crossing of `|F L_U(jw)|` through one and the supremum of `|F L_U(jw)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakData {
    /// `None` when `|F L_U| < 1` everywhere; infinite when the limit at infinity exceeds one.
    pub omega_max: Option<f64>,
    pub eta_max: f64,
}

fn bisect_crossing<F: Fn(f64) -> Result<f64>>(g: &F, mut a: f64, mut b: f64) -> Result<f64> {
    // g(a) > 1 >= g(b)
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 1e-13 * b.max(1.0) {
            break;
        }
        if g(m)? > 1.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn peak_data(ctrl: &Controller, grid: &FrequencyGrid) -> Result<PeakData> {
    let g = |w: f64| -> Result<f64> { Ok(ctrl.fl(Complex64::new(0.0, w))?.norm()) };
    let limit = match ctrl.u.limit_at_infinity() {
        Some(u) => loop_limit(&ctrl.ctx, u),
        None => f64::NAN,
    };
    peak_of(&g, limit, grid)
}

/// Peak data of a modulus `g(w)` whose limit as `w` grows is `limit` (`NaN` if unknown).
pub fn peak_of<G>(g: &G, limit: f64, grid: &FrequencyGrid) -> Result<PeakData>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    let om = grid.omegas();
    let mut ws: Vec<f64> = Vec::with_capacity(om.len() + 1);
    ws.push(0.0);
    ws.extend(om.iter().copied().filter(|&w| w > 0.0));
    let vals: Vec<f64> = ws
        .par_iter()
        .map(|&w| g(w).map_err(|e| Error::GridEvaluation { omega: w, reason: e.to_string() }))
        .collect::<Result<_>>()?;
    let (imax, &vmax) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("nonempty grid");
    let mut eta = vmax;
    let lo = if imax > 0 { ws[imax - 1] } else { ws[0] };
    let hi = if imax + 1 < ws.len() { ws[imax + 1] } else { ws[imax] };
    if hi > lo {
        eta = eta.max(golden_max(g, lo, hi)?.0);
    }
    if limit.is_finite() {
        eta = eta.max(limit);
    }
    if limit > 1.0 + 1e-12 {
        return Ok(PeakData { omega_max: Some(f64::INFINITY), eta_max: eta.max(limit) });
    }
    let last = *vals.last().unwrap();
    let w_last = *ws.last().unwrap();
    if last > 1.0 {
        // Crossing beyond the grid: march outward until the modulus drops below one.
        let mut a = w_last;
        let mut b = 2.0 * w_last;
        let mut guard = 0;
        while g(b)? > 1.0 {
            a = b;
            b *= 2.0;
            guard += 1;
            if guard > 60 {
                return Ok(PeakData { omega_max: Some(f64::INFINITY), eta_max: eta });
            }
        }
        return Ok(PeakData { omega_max: Some(bisect_crossing(g, a, b)?), eta_max: eta });
    }
    for k in (0..vals.len() - 1).rev() {
        if vals[k] > 1.0 && vals[k + 1] <= 1.0 {
            return Ok(PeakData { omega_max: Some(bisect_crossing(g, ws[k], ws[k + 1])?), eta_max: eta });
        }
    }
    Ok(PeakData { omega_max: None, eta_max: eta })
}

/// Scan window `[0, sigma_max] x [-omega_bound, omega_bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub sigma_max: f64,
    pub omega_bound: f64,
}

impl Window {
    /// `sigma_max = max(5, 3 ln(eta_max)/h + 1)`, `omega_bound = 2 (omega_max + 2 pi/h)`,
    /// widened to cover every cancelling zero.
    pub fn default_for(h: f64, peak: &PeakData, cancelling: &[Complex64]) -> Self {
        let sigma = if peak.eta_max > 1.0 { 3.0 * peak.eta_max.ln() / h + 1.0 } else { 0.0 };
        let sigma_max = sigma.max(5.0);
        let wmax = match peak.omega_max {
            Some(w) if w.is_finite() => w,
            _ => 0.0,
        };
        let zmax = cancelling.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
        let zre = cancelling.iter().fold(0.0_f64, |m, z| m.max(z.re));
        Window {
            sigma_max: sigma_max.max(2.0 * zre + 1.0),
            omega_bound: (2.0 * (wmax + 2.0 * PI / h)).max(2.0 * zmax + 1.0),
        }
    }

    pub fn doubled(&self) -> Self {
        Window { sigma_max: 2.0 * self.sigma_max, omega_bound: 2.0 * self.omega_bound }
    }

    pub fn rect(&self) -> Rect {
        Rect::window(self.sigma_max, self.omega_bound)
    }
}

/// Result of a right half plane zero scan of the controller characteristic function.
#[derive(Debug, Clone)]
pub struct RegionScan {
    pub sigma_max: f64,
    pub omega_bound: f64,
    /// Zeros that are not cancelled, i.e. unstable controller poles.
    pub zeros: Vec<Complex64>,
    /// Cancelling zeros of `E` and `m_d`: the open right half plane ones found inside the
    /// window, then the imaginary-axis ones detoured by the contour.
    pub excluded: Vec<Complex64>,
    /// Winding number of the window boundary.
    pub winding_total: i64,
}

impl RegionScan {
    pub fn stable(&self) -> bool {
        self.zeros.is_empty()
    }
}

fn split_cancelling(cancel: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    cancel.iter().partition(|z| z.re.abs() <= AXIS_TOL * (1.0 + z.norm()))
}

// Checks |exp(-h s) M F L_U| < 1 on the right, top and bottom edges of the window.
fn validate_window<F>(gain: &F, w: &Window) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let n = 400;
    let mut pts = Vec::with_capacity(3 * (n + 1));
    for k in 0..=n {
        let t = k as f64 / n as f64;
        pts.push(Complex64::new(w.sigma_max, -w.omega_bound + 2.0 * w.omega_bound * t));
        pts.push(Complex64::new(w.sigma_max * t, w.omega_bound));
        pts.push(Complex64::new(w.sigma_max * t, -w.omega_bound));
    }
    let bad = pts.par_iter().find_any(|&&s| match gain(s) {
        Ok(v) => v.norm() >= 1.0,
        Err(_) => false,
    });
    if let Some(s) = bad {
        return Err(Error::WindowTooSmall(format!(
            "loop gain modulus reaches one at {s} on the boundary of [0, {}] x [-{}, {}]",
            w.sigma_max, w.omega_bound, w.omega_bound
        )));
    }
    Ok(())
}

/// Zero scan of an analytic function over a window, excluding the cancelling zeros.
pub fn scan_function<F, G>(
    f: &F,
    gain: Option<&G>,
    window: &Window,
    cancelling: &[Complex64],
    opts: &ContourOptions,
) -> Result<RegionScan>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
    G: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if let Some(g) = gain {
        validate_window(g, window)?;
    }
    let (axis, open): (Vec<Complex64>, Vec<Complex64>) = split_cancelling(cancelling);
    let indent: Vec<f64> = axis.iter().map(|z| z.im).collect();
    let found = locate_zeros(f, &window.rect(), &indent, opts)?;
    let mut remaining = open.clone();
    let mut zeros = Vec::new();
    let mut excluded = Vec::new();
    for z in found.zeros {
        let hit = remaining
            .iter()
            .position(|c| (c - z).norm() <= 1e-6 * (1.0 + c.norm()));
        match hit {
            Some(i) => excluded.push(remaining.swap_remove(i)),
            None => zeros.push(z),
        }
    }
    excluded.extend(axis);
    zeros.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(RegionScan {
        sigma_max: window.sigma_max,
        omega_bound: window.omega_bound,
        zeros,
        excluded,
        winding_total: found.winding,
    })
}

/// Right half plane zeros of `L1U + m_n F L2U` inside the window, excluding the zeros of `E`
/// and `m_d` that cancel in the controller. Refuses controllers with infinitely many
/// unstable poles.
pub fn rhp_zero_scan(ctrl: &Controller, window: &Window, opts: &ContourOptions) -> Result<RegionScan> {
    if !finitely_many_poles(&ctrl.ctx, ctrl.u.as_ref()) {
        let limit = ctrl.u.limit_at_infinity().map(|u| loop_limit(&ctrl.ctx, u)).unwrap_or(f64::NAN);
        return Err(Error::InfinitelyManyZeros { limit });
    }
    let cancel = ctrl.ctx.cancelling_zeros()?;
    let f = |s: Complex64| ctrl.characteristic(s);
    let gain = |s: Complex64| ctrl.loop_gain(s);
    scan_function(&f, Some(&gain), window, &cancel, opts)
}

/// Default window for a controller, derived from its peak data.
pub fn default_window(ctrl: &Controller, grid: &FrequencyGrid) -> Result<(Window, PeakData)> {
    let peak = peak_data(ctrl, grid)?;
    let cancel = ctrl.ctx.cancelling_zeros()?;
    Ok((Window::default_for(ctrl.ctx.plant.h, &peak, &cancel), peak))
}

/// Real part `sigma_o` of the asymptotic chain of unstable poles, from
/// `exp(-h sigma_o) lim |F L_U| = 1`; `None` when the limit does not exceed one.
pub fn chain_abscissa(ctx: &SynthesisContext, u_inf: f64) -> Option<f64> {
    let lim = loop_limit(ctx, u_inf);
    if lim > 1.0 && lim.is_finite() {
        Some(lim.ln() / ctx.plant.h)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleClass {
    GuaranteedFinite,
    PossiblyInfinite,
}

/// Weight and plant structure that guarantees finitely many unstable controller poles.
pub fn properness_criterion(weights: &WeightPair, plant: &DelayPlant) -> PoleClass {
    let w1_proper = weights.w1.relative_degree().map(|p| p >= 0).unwrap_or(false);
    let ok = if weights.one_block() {
        w1_proper && plant.strictly_proper()
    } else {
        w1_proper && weights.w2.relative_degree().map(|p| p < 0).unwrap_or(false)
    };
    if ok {
        PoleClass::GuaranteedFinite
    } else {
        PoleClass::PossiblyInfinite
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalFn;

    #[test]
    fn admissible_intervals_first_regime() {
        let a = AsymptoticData { f_inf: 2.0, k: 0.0, odd: true };
        assert_eq!(admissible_uinf(&a), vec![(-0.5, 0.5)]);
        let a = AsymptoticData { f_inf: 0.8, k: 0.3, odd: false };
        assert_eq!(admissible_uinf(&a), vec![(-1.0, 1.0)]);
    }

    #[test]
    fn admissible_intervals_match_direct_condition() {
        for &(f, k, odd) in &[(1.3567, -0.9413, true), (2.0, 0.3, true), (2.0, 0.3, false), (1.5, -0.2, false)] {
            let a = AsymptoticData { f_inf: f, k, odd };
            let iv = admissible_uinf(&a);
            let sign = if odd { -1.0 } else { 1.0 };
            for i in 0..=2000 {
                let u = -1.0 + i as f64 * 1e-3;
                let lim = f * ((k + sign * u) / (1.0 + sign * k * u)).abs();
                let inside = iv.iter().any(|&(lo, hi)| u >= lo - 1e-12 && u <= hi + 1e-12);
                let strict = iv.iter().any(|&(lo, hi)| u > lo + 1e-9 && u < hi - 1e-9);
                if strict {
                    assert!(lim <= 1.0 + 1e-9, "f={f} k={k} u={u} lim={lim}");
                }
                if !inside {
                    assert!(lim > 1.0 - 1e-9, "f={f} k={k} u={u} lim={lim}");
                }
            }
        }
    }

    #[test]
    fn properness_cases() {
        let g = FrequencyGrid::default();
        let p = DelayPlant::new(1.0, RationalFn::one(), RationalFn::one(), RationalFn::one(), &g).unwrap();
        let w = WeightPair::new(RationalFn::one(), RationalFn::from_coeffs(&[0.0, 1.0], &[1.0]).unwrap()).unwrap();
        assert_eq!(properness_criterion(&w, &p), PoleClass::GuaranteedFinite);
        let w = WeightPair::new(RationalFn::one(), RationalFn::zero()).unwrap();
        assert_eq!(properness_criterion(&w, &p), PoleClass::PossiblyInfinite);
    }

    #[test]
    fn window_sizing() {
        let pk = PeakData { omega_max: Some(19.5), eta_max: 1.2 };
        let w = Window::default_for(0.1, &pk, &[Complex64::new(0.0, 1.056)]);
        assert!((w.sigma_max - (30.0 * 1.2f64.ln() + 1.0).max(5.0)).abs() < 1e-12);
        assert!((w.omega_bound - 2.0 * (19.5 + 20.0 * PI)).abs() < 1e-12);
    }
}
