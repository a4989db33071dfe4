//! Level-dependent objects of the mixed sensitivity problem and the controller parameter polynomials.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plant::{DelayPlant, WeightPair};
use crate::poly::Poly;
use crate::rational::RationalFn;
use crate::roots::RootSet;

/// Real-part tolerance (relative) for deciding that a root sits on the imaginary axis.
pub const AXIS_TOL: f64 = 1e-9;
/// Relative tolerance on the interpolation residuals of a solved context.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Smallest singular value below which the optimal-mode system counts as singular.
pub const SINGULAR_TOL: f64 = 1e-6;
pub const GAMMA_SCAN_POINTS: usize = 200;

fn on_axis(r: Complex64) -> bool {
    r.re.abs() <= AXIS_TOL * (1.0 + r.norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Optimal,
    /// Suboptimal level with the extra interpolation condition placed at `s = a`.
    Suboptimal { a: f64 },
}

/// `E = W1(-s) W1(s) / level^2 - 1`.
pub fn build_e(level: f64, w1: &RationalFn) -> RationalFn {
    let ww = (w1 * &w1.mirror()).scale(1.0 / (level * level));
    &ww - &RationalFn::one()
}

/// The para-Hermitian right side `1 - (W2(-s) W2(s)/level^2 - 1) E`.
fn factorization_rhs(level: f64, w1: &RationalFn, w2: &RationalFn) -> RationalFn {
    let e = build_e(level, w1);
    let q = if w2.is_zero() {
        RationalFn::constant(-1.0)
    } else {
        &(w2 * &w2.mirror()).scale(1.0 / (level * level)) - &RationalFn::one()
    };
    &RationalFn::one() - &(&q * &e)
}

fn stable_half(p: &Poly, what: &str) -> Result<Vec<Complex64>> {
    if p.degree().unwrap_or(0) == 0 {
        return Ok(Vec::new());
    }
    let rs = crate::roots::poly_roots(p)?;
    let all = rs.expanded();
    if let Some(r) = all.iter().find(|r| on_axis(**r)) {
        return Err(Error::SpectralFactorization(format!(
            "{what} has a root on the imaginary axis at {r}"
        )));
    }
    let lhp: Vec<Complex64> = all.iter().copied().filter(|r| r.re < 0.0).collect();
    if 2 * lhp.len() != all.len() {
        return Err(Error::SpectralFactorization(format!(
            "{what} roots are not symmetric about the imaginary axis"
        )));
    }
    Ok(lhp)
}

/// Stable, minimum phase `G` with `G(s) G(-s)` equal to the inverse of the factorization right side.
/// Normalized so that `G(0) > 0`.
pub fn spectral_factor(level: f64, w1: &RationalFn, w2: &RationalFn) -> Result<RationalFn> {
    if !(level > 0.0) {
        return Err(Error::Precondition(format!("level {level} must be positive")));
    }
    let r = factorization_rhs(level, w1, w2);
    if r.is_zero() {
        return Err(Error::SpectralFactorization("right side vanishes identically".into()));
    }
    // G G~ = den(R)/num(R): zeros of G from den(R), poles of G from num(R).
    let zeros = stable_half(r.den(), "denominator")?;
    let poles = stable_half(r.num(), "numerator")?;
    let num = Poly::from_roots(&zeros);
    let den = Poly::from_roots(&poles);
    let s0 = Complex64::new(0.0, 0.0);
    let r0 = r.eval(s0)?;
    if r0.re <= 0.0 {
        return Err(Error::SpectralFactorization(format!(
            "right side is not positive on the imaginary axis (value {} at s = 0)",
            r0.re
        )));
    }
    let g0 = num.eval_c(s0) / den.eval_c(s0);
    let k = (1.0 / r0.re).sqrt() / g0.norm() * g0.re.signum();
    RationalFn::new_unreduced(num.scale(k), den)
}

/// `F = G * prod (eta - s)/(eta + s)` over the right half plane poles `eta` of `W1(-s)`.
/// The sign of each factor is chosen so that `F(0)` has the sign of `G(0)`.
pub fn build_f(level: f64, weights: &WeightPair) -> Result<(RationalFn, RootSet)> {
    let g = spectral_factor(level, &weights.w1, &weights.w2)?;
    let etas = etas(&weights.w1)?;
    let mut b = RationalFn::blaschke(&etas.expanded());
    if etas.degree() % 2 == 1 {
        b = -&b;
    }
    Ok((&g * &b, etas))
}

fn etas(w1: &RationalFn) -> Result<RootSet> {
    if w1.den().degree().unwrap_or(0) == 0 {
        return Ok(RootSet::default());
    }
    Ok(w1.mirror().poles()?.open_rhp(0.0))
}

/// Zeros of `E` counted as right half plane interpolation points: open right half plane
/// zeros plus imaginary-axis zeros with nonnegative imaginary part.
fn betas(e: &RationalFn) -> Result<RootSet> {
    if e.num().degree().unwrap_or(0) == 0 {
        return Ok(RootSet::default());
    }
    let z = e.zeros()?;
    Ok(z.filter(|r| if on_axis(r) { r.im >= 0.0 } else { r.re > 0.0 }))
}

/// All closed right half plane zeros of `E`, both members of imaginary-axis pairs included.
fn closed_rhp_zeros(e: &RationalFn) -> Result<RootSet> {
    if e.num().degree().unwrap_or(0) == 0 {
        return Ok(RootSet::default());
    }
    Ok(e.zeros()?.filter(|r| on_axis(r) || r.re > 0.0))
}

/// Real homogeneous system in the stacked coefficients `[L1; L2]`.
#[derive(Debug, Clone)]
pub struct InterpolationSystem {
    pub matrix: DMatrix<f64>,
    /// Degree bound of `L1` and `L2`.
    pub deg: usize,
    /// Row structure, used to compare systems at nearby levels.
    pub signature: Vec<u8>,
}

struct Point {
    z: Complex64,
    phi: Complex64,
    axis: bool,
    real: bool,
}

fn powers(z: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        out.push(p);
        p *= z;
    }
    out
}

fn push_complex_row(rows: &mut Vec<Vec<f64>>, row: Vec<Complex64>, real_only: bool) {
    let nrm = row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    rows.push(row.iter().map(|c| c.re / nrm).collect());
    if !real_only {
        rows.push(row.iter().map(|c| c.im / nrm).collect());
    }
}

// Conditions at a point z with phi = m_n(z) F(z):
//   L1(z) + phi L2(z) = 0 and L2(-z) + phi L1(-z) = 0.
// On the imaginary axis |phi| = 1 and the second is the conjugate of the first.
fn interpolation_rows(points: &[Point], deg: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let n = deg + 1;
    let mut rows = Vec::new();
    let mut sig = Vec::new();
    for p in points {
        let zp = powers(p.z, n);
        let zm = powers(-p.z, n);
        let eq1: Vec<Complex64> = zp.iter().copied().chain(zp.iter().map(|&c| p.phi * c)).collect();
        let eq3: Vec<Complex64> = zm.iter().map(|&c| p.phi * c).chain(zm.iter().copied()).collect();
        if p.axis {
            push_complex_row(&mut rows, eq1, p.real);
            sig.push(1);
        } else {
            push_complex_row(&mut rows, eq1, p.real);
            push_complex_row(&mut rows, eq3, p.real);
            sig.push(if p.real { 2 } else { 3 });
        }
    }
    (rows, sig)
}

fn collect_points(
    plant: &DelayPlant,
    f: &RationalFn,
    betas: &RootSet,
    alphas: &RootSet,
) -> Result<Vec<Point>> {
    let mut pts: Vec<(Complex64, usize)> = betas
        .roots
        .iter()
        .zip(&betas.multiplicities)
        .chain(alphas.roots.iter().zip(&alphas.multiplicities))
        .map(|(&r, &m)| (r, m))
        .collect();
    for (i, &(r, m)) in pts.iter().enumerate() {
        let dup = pts[..i].iter().filter(|(q, _)| crate::roots::roots_match(*q, r)).count();
        if m > 1 || dup > 0 {
            return Err(Error::RepeatedInterpolationPoint { point: r, multiplicity: m + dup });
        }
    }
    pts.sort_by(|a, b| {
        (b.0.im, a.0.re)
            .partial_cmp(&(a.0.im, b.0.re))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = Vec::new();
    for (z, _) in pts {
        let real = z.im == 0.0;
        let axis = on_axis(z);
        if z.im < 0.0 && !axis {
            continue;
        }
        let phi = plant.m_n(z)? * f.eval(z)?;
        out.push(Point { z, phi, axis, real });
    }
    Ok(out)
}

/// Polynomial pair `(L1, L2)` with the free-parameter controller family built from it.
#[derive(Debug, Clone)]
pub struct SynthesisContext {
    pub level: f64,
    pub mode: Mode,
    pub plant: DelayPlant,
    pub weights: WeightPair,
    pub e: RationalFn,
    pub g: RationalFn,
    pub f: RationalFn,
    pub betas: RootSet,
    pub alphas: RootSet,
    pub etas: RootSet,
    pub l1: Poly,
    pub l2: Poly,
    /// Largest relative interpolation residual of the returned polynomials.
    pub max_residual: f64,
}

struct Pieces {
    e: RationalFn,
    g: RationalFn,
    f: RationalFn,
    betas: RootSet,
    alphas: RootSet,
    etas: RootSet,
}

fn pieces(plant: &DelayPlant, weights: &WeightPair, level: f64) -> Result<Pieces> {
    let e = build_e(level, &weights.w1);
    let g = spectral_factor(level, &weights.w1, &weights.w2)?;
    let (f, etas) = build_f(level, weights)?;
    let betas = betas(&e)?;
    let alphas = plant.alphas()?;
    if betas.degree() != etas.degree() {
        return Err(Error::DegenerateInterpolation(format!(
            "E has {} right half plane zeros but W1(-s) has {} right half plane poles",
            betas.degree(),
            etas.degree()
        )));
    }
    Ok(Pieces { e, g, f, betas, alphas, etas })
}

fn degree_bound(pc: &Pieces, mode: Mode) -> Result<usize> {
    let d = pc.etas.degree() + pc.alphas.degree();
    match mode {
        Mode::Optimal if d == 0 => Err(Error::DegenerateInterpolation(
            "no interpolation points: the problem has no right half plane constraints".into(),
        )),
        Mode::Optimal => Ok(d - 1),
        Mode::Suboptimal { .. } => Ok(d),
    }
}

/// Assembles the real homogeneous system whose null vectors are the stacked coefficients of `L1`, `L2`.
pub fn interpolation_system(
    plant: &DelayPlant,
    weights: &WeightPair,
    level: f64,
    mode: Mode,
) -> Result<InterpolationSystem> {
    let pc = pieces(plant, weights, level)?;
    system_from_pieces(plant, weights, level, mode, &pc)
}

fn system_from_pieces(
    plant: &DelayPlant,
    weights: &WeightPair,
    level: f64,
    mode: Mode,
    pc: &Pieces,
) -> Result<InterpolationSystem> {
    let deg = degree_bound(pc, mode)?;
    let pts = collect_points(plant, &pc.f, &pc.betas, &pc.alphas)?;
    let (mut rows, mut sig) = interpolation_rows(&pts, deg);
    if let Mode::Suboptimal { a } = mode {
        if !(a > 0.0) {
            return Err(Error::Precondition(format!("interpolation point a = {a} must be positive")));
        }
        let c = extra_coefficient(plant, weights, level, &pc.f, a)?;
        let n = deg + 1;
        let am = powers(Complex64::new(-a, 0.0), n);
        let row: Vec<Complex64> = am.iter().map(|&p| c * p).chain(am.iter().copied()).collect();
        push_complex_row(&mut rows, row, true);
        sig.push(4);
    }
    let ncols = 2 * (deg + 1);
    let matrix = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    Ok(InterpolationSystem { matrix, deg, signature: sig })
}

/// `(E(a) + 1) F(a) m_n(a)`, with `(E + 1) F` formed as a reduced rational first so that
/// cancelling poles of `E` do not break the evaluation.
fn extra_coefficient(plant: &DelayPlant, weights: &WeightPair, level: f64, f: &RationalFn, a: f64) -> Result<Complex64> {
    let ww = (&weights.w1 * &weights.w1.mirror()).scale(1.0 / (level * level));
    let ef = &ww * f;
    let s = Complex64::new(a, 0.0);
    Ok(ef.eval(s)? * plant.m_n(s)?)
}

/// Right singular vectors of the square zero-padded matrix, ordered by ascending singular value.
fn null_space(m: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.ncols();
    let mut sq = DMatrix::<f64>::zeros(n.max(m.nrows()), n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    let sv = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let vecs = idx.iter().map(|&i| vt.row(i).iter().copied().collect()).collect();
    (sv, vecs)
}

impl SynthesisContext {
    /// Builds the context at `level`, solving the interpolation system for `L1`, `L2`.
    /// In suboptimal mode `level` must be strictly above the optimal level; callers that know
    /// the optimal level should use [`SynthesisContext::suboptimal`].
    pub fn new(plant: &DelayPlant, weights: &WeightPair, level: f64, mode: Mode) -> Result<Self> {
        let pc = pieces(plant, weights, level)?;
        let sys = system_from_pieces(plant, weights, level, mode, &pc)?;
        let (sv, vecs) = null_space(&sys.matrix);
        let n = sys.deg + 1;
        let scale = sv.last().copied().unwrap_or(1.0).max(1.0);
        if sv.len() > 1 && sv[1] <= 1e-10 * scale {
            return Err(Error::DegenerateInterpolation(format!(
                "null space has dimension above one (singular values {:e}, {:e})",
                sv[0], sv[1]
            )));
        }
        let x = &vecs[0];
        let lead = x[sys.deg];
        let xmax = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if lead.abs() <= 1e-10 * xmax {
            return Err(Error::DegenerateInterpolation("L1 has degree below its bound".into()));
        }
        let l1 = Poly::new(x[..n].iter().map(|v| v / lead).collect());
        let l2 = Poly::new(x[n..].iter().map(|v| v / lead).collect());
        if let Mode::Suboptimal { a } = mode {
            let v = l1.eval(-a);
            if v.abs() <= 1e-10 * l1.max_abs_coeff() {
                return Err(Error::DegenerateInterpolation(format!("L1(-a) vanishes at a = {a}")));
            }
        }
        let mut ctx = SynthesisContext {
            level,
            mode,
            plant: plant.clone(),
            weights: weights.clone(),
            e: pc.e,
            g: pc.g,
            f: pc.f,
            betas: pc.betas,
            alphas: pc.alphas,
            etas: pc.etas,
            l1,
            l2,
            max_residual: 0.0,
        };
        ctx.max_residual = ctx.interpolation_residuals()?.into_iter().fold(0.0, f64::max);
        if matches!(mode, Mode::Suboptimal { .. }) && ctx.max_residual > RESIDUAL_TOL {
            return Err(Error::DegenerateInterpolation(format!(
                "interpolation residual {:e} exceeds tolerance",
                ctx.max_residual
            )));
        }
        Ok(ctx)
    }

    /// Suboptimal context, refusing levels at or below `gamma_opt`.
    pub fn suboptimal(plant: &DelayPlant, weights: &WeightPair, rho: f64, gamma_opt: f64, a: f64) -> Result<Self> {
        if rho <= gamma_opt {
            return Err(Error::LevelNotAboveOptimal { level: rho, gamma_opt });
        }
        Self::new(plant, weights, rho, Mode::Suboptimal { a })
    }

    /// Number of right half plane poles of `W1(-s)`.
    pub fn n1(&self) -> usize {
        self.etas.degree()
    }

    /// Number of right half plane poles of the plant.
    pub fn l(&self) -> usize {
        self.alphas.degree()
    }

    /// `m_n(s) F(s)`.
    pub fn mnf(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.plant.m_n(s)? * self.f.eval(s)?)
    }

    /// Residuals of every interpolation condition (and the extra one in suboptimal mode),
    /// relative to the coefficient scale `sum |c_k| |z|^k` of the terms involved.
    pub fn interpolation_residuals(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let pts = self.betas.expanded().into_iter().chain(self.alphas.expanded());
        for z in pts {
            let phi = self.mnf(z)?;
            let (a1, a2) = (self.l1.eval_c(z), self.l2.eval_c(z));
            let (b1, b2) = (self.l1.eval_c(-z), self.l2.eval_c(-z));
            let scale = self.l1.abs_scale(z) * (1.0 + phi.norm()) + self.l2.abs_scale(z) * (1.0 + phi.norm());
            out.push((a1 + phi * a2).norm() / scale.max(f64::MIN_POSITIVE));
            out.push((b2 + phi * b1).norm() / scale.max(f64::MIN_POSITIVE));
        }
        if let Mode::Suboptimal { a } = self.mode {
            let c = extra_coefficient(&self.plant, &self.weights, self.level, &self.f, a)?;
            let (b1, b2) = (self.l1.eval(-a), self.l2.eval(-a));
            let s = Complex64::new(a, 0.0);
            let scale = self.l1.abs_scale(s) * c.norm() + self.l2.abs_scale(s);
            out.push((b2 + c * b1).norm() / scale.max(f64::MIN_POSITIVE));
        }
        Ok(out)
    }

    /// Closed right half plane zeros of `E` and `m_d`, which cancel in the controller.
    pub fn cancelling_zeros(&self) -> Result<Vec<Complex64>> {
        let mut z = closed_rhp_zeros(&self.e)?.expanded();
        z.extend(self.alphas.expanded());
        Ok(z)
    }
}

/// Result of the optimal level search.
#[derive(Debug, Clone)]
pub struct GammaOpt {
    pub gamma: f64,
    /// Smallest singular value of the optimal-mode system at `gamma`.
    pub sigma_min: f64,
    /// Scan points where the spectral factorization did not exist.
    pub factorization_failures: usize,
    /// Scan points where the interpolation system could not be formed.
    pub interpolation_failures: usize,
}

#[derive(Debug, Clone)]
struct Sample {
    gamma: f64,
    signed: f64,
    sigma: f64,
    sig: Vec<u8>,
}

enum SampleError {
    Factorization,
    Interpolation,
}

fn sample(plant: &DelayPlant, weights: &WeightPair, gamma: f64) -> std::result::Result<Sample, SampleError> {
    let pc = match pieces(plant, weights, gamma) {
        Ok(p) => p,
        Err(Error::SpectralFactorization(_)) => return Err(SampleError::Factorization),
        Err(_) => return Err(SampleError::Interpolation),
    };
    let sys = system_from_pieces(plant, weights, gamma, Mode::Optimal, &pc)
        .map_err(|_| SampleError::Interpolation)?;
    if sys.matrix.nrows() != sys.matrix.ncols() {
        return Err(SampleError::Interpolation);
    }
    let det = sys.matrix.determinant();
    let sv = sys.matrix.singular_values();
    let sigma = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Sample { gamma, signed: det.signum() * sigma, sigma, sig: sys.signature })
}

/// Smallest singular value of the optimal-mode interpolation system at `gamma`.
pub fn singular_surrogate(plant: &DelayPlant, weights: &WeightPair, gamma: f64) -> Result<f64> {
    let sys = interpolation_system(plant, weights, gamma, Mode::Optimal)?;
    Ok(sys.matrix.singular_values().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest level in `[lo, hi]` at which the optimal-mode system is singular.
pub fn gamma_opt(plant: &DelayPlant, weights: &WeightPair, lo: f64, hi: f64) -> Result<GammaOpt> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::BracketFailure { lo, hi, reason: "bracket must satisfy 0 < lo < hi".into() });
    }
    let n = GAMMA_SCAN_POINTS;
    let results: Vec<_> = (0..n)
        .into_par_iter()
        .map(|k| {
            let g = hi - (hi - lo) * k as f64 / (n - 1) as f64;
            sample(plant, weights, g)
        })
        .collect();
    let fact_fail = results.iter().filter(|r| matches!(r, Err(SampleError::Factorization))).count();
    let interp_fail = results.iter().filter(|r| matches!(r, Err(SampleError::Interpolation))).count();
    let samples: Vec<Option<Sample>> = results.into_iter().map(|r| r.ok()).collect();
    let done = |gamma: f64| -> Result<GammaOpt> {
        let sigma = singular_surrogate(plant, weights, gamma)?;
        Ok(GammaOpt { gamma, sigma_min: sigma, factorization_failures: fact_fail, interpolation_failures: interp_fail })
    };

    // Sign changes of sign(det) * sigma_min, largest level first.
    for w in samples.windows(2) {
        let (Some(a), Some(b)) = (&w[0], &w[1]) else { continue };
        if a.sig != b.sig || a.signed.signum() == b.signed.signum() {
            continue;
        }
        if let Some(g) = bisect(plant, weights, a, b) {
            if let Ok(sigma) = singular_surrogate(plant, weights, g) {
                if sigma <= SINGULAR_TOL {
                    return done(g);
                }
            }
        }
    }
    // Touching zeros without a sign change: local minima of sigma_min.
    for w in samples.windows(3) {
        let (Some(a), Some(b), Some(c)) = (&w[0], &w[1], &w[2]) else { continue };
        if b.sigma <= a.sigma && b.sigma <= c.sigma && a.sig == c.sig {
            let f = |g: f64| singular_surrogate(plant, weights, g).map(|s| -s);
            if let Ok((neg, g)) = crate::grid::golden_max(&f, c.gamma, a.gamma) {
                if -neg <= SINGULAR_TOL {
                    return done(g);
                }
            }
        }
    }
    let reason = format!(
        "no singular point found ({fact_fail} scan points without a spectral factor, {interp_fail} without an interpolation system)"
    );
    Err(Error::BracketFailure { lo, hi, reason })
}

fn bisect(plant: &DelayPlant, weights: &WeightPair, hi: &Sample, lo: &Sample) -> Option<f64> {
    let (mut a, mut b) = (lo.gamma, hi.gamma);
    let sa = lo.signed.signum();
    // Continue past the 1e-6 relative width down to rounding level; extra digits are free here.
    for _ in 0..200 {
        if b - a <= 1e-15 * b {
            break;
        }
        let m = 0.5 * (a + b);
        match sample(plant, weights, m) {
            Ok(s) if s.sig == hi.sig => {
                if s.signed == 0.0 {
                    return Some(m);
                }
                if s.signed.signum() == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            _ => return None,
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;

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
    fn e_of_unit_weight_vanishes() {
        assert!(build_e(1.0, &RationalFn::one()).is_zero());
    }

    #[test]
    fn e_one_block_example() {
        let r = 0.814;
        let e = build_e(r, &rf(&[1.0, 0.6], &[1.0, 1.0]));
        for s in [Complex64::new(0.3, 0.4), Complex64::new(0.0, 2.0)] {
            let want = ((1.0 - r * r) + (r * r - 0.36) * s * s) / (r * r * (1.0 - s * s));
            assert!((e.eval(s).unwrap() - want).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_weight_factor_is_one() {
        let g = spectral_factor(2.0, &RationalFn::constant(2.0), &RationalFn::zero()).unwrap();
        assert!((g.eval_real(0.3).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_block_factor_identity() {
        let (_, w) = ex1();
        let r = 0.814;
        let g = spectral_factor(r, &w.w1, &w.w2).unwrap();
        for om in [0.0, 0.5, 3.0, 40.0] {
            let s = Complex64::new(0.0, om);
            let ww = w.w1.eval(s).unwrap().norm_sqr() / (r * r);
            assert!((g.eval(s).unwrap().norm_sqr() * ww - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn f_for_one_block_example() {
        let (_, w) = ex1();
        let r = 0.814;
        let (f, etas) = build_f(r, &w).unwrap();
        assert_eq!(etas.degree(), 1);
        let want = |s: Complex64| r * (1.0 - s) / (1.0 + 0.6 * s);
        for s in [Complex64::new(0.0, 0.0), Complex64::new(0.2, 3.0)] {
            assert!((f.eval(s).unwrap() - want(s)).norm() < 1e-12);
        }
    }

    #[test]
    fn optimal_system_is_square() {
        let (p, w) = ex1();
        let sys = interpolation_system(&p, &w, 0.9, Mode::Optimal).unwrap();
        assert_eq!(sys.matrix.shape(), (2, 2));
        let sys = interpolation_system(&p, &w, 0.9, Mode::Suboptimal { a: 1.0 }).unwrap();
        assert_eq!(sys.matrix.shape(), (3, 4));
    }

    #[test]
    fn gamma_opt_one_block() {
        let (p, w) = ex1();
        let g = gamma_opt(&p, &w, 0.61, 0.99).unwrap();
        assert!((g.gamma - 0.8108).abs() < 1e-3, "{}", g.gamma);
        assert!(g.sigma_min < 1e-9);
    }

    #[test]
    fn suboptimal_refused_below_optimal() {
        let (p, w) = ex1();
        let r = SynthesisContext::suboptimal(&p, &w, 0.8, 0.8108, 1.0);
        assert!(matches!(r, Err(Error::LevelNotAboveOptimal { .. })));
    }

    #[test]
    fn suboptimal_residuals_small() {
        let (p, w) = ex1();
        let ctx = SynthesisContext::new(&p, &w, 0.814, Mode::Suboptimal { a: 2.0 }).unwrap();
        assert!(ctx.max_residual < 1e-10);
        assert_eq!(ctx.l1.degree(), Some(1));
        assert_eq!(ctx.l1.lead(), 1.0);
    }

    #[test]
    fn no_constraints_is_degenerate() {
        let g = FrequencyGrid::default();
        let p = DelayPlant::new(1.0, RationalFn::one(), RationalFn::one(), RationalFn::one(), &g).unwrap();
        let w = WeightPair::new(RationalFn::constant(2.0), RationalFn::zero()).unwrap();
        assert!(matches!(gamma_opt(&p, &w, 0.1, 1.9), Err(Error::BracketFailure { .. })));
    }
}
