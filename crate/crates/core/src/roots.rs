//! Polynomial roots by Aberth simultaneous iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Poly;

pub const ROOT_TOL: f64 = 1e-12;
pub const MAX_ITER: usize = 200;
pub const MATCH_TOL: f64 = 1e-8;
pub const REAL_SNAP: f64 = 1e-9;

/// Distinct roots with multiplicities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
}

impl RootSet {
    pub fn degree(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Every root repeated according to its multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&r, &m)| std::iter::repeat(r).take(m))
            .collect()
    }

    /// Roots with real part strictly above `-tol`.
    pub fn closed_rhp(&self, tol: f64) -> RootSet {
        self.filter(|r| r.re > -tol)
    }

    /// Roots with real part above `tol`.
    pub fn open_rhp(&self, tol: f64) -> RootSet {
        self.filter(|r| r.re > tol)
    }

    pub fn filter(&self, keep: impl Fn(Complex64) -> bool) -> RootSet {
        let mut out = RootSet::default();
        for (&r, &m) in self.roots.iter().zip(&self.multiplicities) {
            if keep(r) {
                out.roots.push(r);
                out.multiplicities.push(m);
            }
        }
        out
    }

    /// Monic polynomial with these roots.
    pub fn to_poly(&self) -> Poly {
        Poly::from_roots(&self.expanded())
    }
}

/// True when two roots coincide within the matching tolerance.
pub fn roots_match(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= MATCH_TOL * (1.0 + a.norm())
}

pub fn poly_roots(p: &Poly) -> Result<RootSet> {
    let deg = p.degree().ok_or(Error::ZeroPolynomial)?;
    let c = p.coeffs();
    let zeros_at_origin = c.iter().take_while(|&&x| x == 0.0).count();
    let reduced = Poly::new(c[zeros_at_origin..].to_vec());
    let mut all: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if deg > zeros_at_origin {
        all.extend(aberth(&reduced)?);
    }
    let all = pair_conjugates(all);
    Ok(cluster(p, all))
}

fn aberth(p: &Poly) -> Result<Vec<Complex64>> {
    let p = p.monic();
    let n = p.degree().unwrap_or(0);
    if n == 1 {
        return Ok(vec![Complex64::new(-p.coeff(0), 0.0)]);
    }
    let dp = p.derivative();
    // Initial guesses on a circle sized by the geometric mean of root moduli.
    let radius = p.coeff(0).abs().powf(1.0 / n as f64).max(1e-3);
    let center = -p.coeff(n - 1) / n as f64;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
            Complex64::new(center, 0.0) + Complex64::from_polar(radius, th)
        })
        .collect();

    let converged = |z: &[Complex64]| {
        z.iter()
            .all(|&x| p.eval_c(x).norm() <= ROOT_TOL * p.abs_scale(x))
    };
    let mut done = false;
    for _ in 0..MAX_ITER {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let zi = z[i];
            let pv = p.eval_c(zi);
            if pv.norm() == 0.0 {
                continue;
            }
            let ratio = pv / dp.eval_c(zi);
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    sum += 1.0 / (zi - zj);
                }
            }
            let w = ratio / (1.0 - ratio * sum);
            if w.is_finite() {
                z[i] = zi - w;
                moved = moved.max(w.norm() / (1.0 + zi.norm()));
            }
        }
        if converged(&z) || moved < 1e-16 {
            done = true;
            break;
        }
    }
    // Newton polish: accept a step only if it lowers the residual.
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let d = dp.eval_c(*zi);
            if d.norm() == 0.0 {
                break;
            }
            let cand = *zi - p.eval_c(*zi) / d;
            if cand.is_finite() && p.eval_c(cand).norm() < p.eval_c(*zi).norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    let worst = z
        .iter()
        .map(|&x| p.eval_c(x).norm() / p.abs_scale(x).max(f64::MIN_POSITIVE))
        .fold(0.0_f64, f64::max);
    if !done && worst > 1e-9 {
        return Err(Error::RootNonConvergence { worst_residual: worst });
    }
    Ok(z)
}

fn pair_conjugates(mut z: Vec<Complex64>) -> Vec<Complex64> {
    for r in z.iter_mut() {
        if r.im.abs() < REAL_SNAP * (1.0 + r.re.abs()) {
            r.im = 0.0;
        }
    }
    let (reals, mut cplx): (Vec<_>, Vec<_>) = z.into_iter().partition(|r| r.im == 0.0);
    let mut out = reals;
    cplx.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal));
    let mut lower: Vec<Complex64> = cplx.iter().copied().filter(|r| r.im < 0.0).collect();
    for up in cplx.iter().copied().filter(|r| r.im > 0.0) {
        let target = up.conj();
        let best = lower
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - target)
                    .norm()
                    .partial_cmp(&(b.1 - target).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(k, _)| k);
        match best {
            Some(k) => {
                let lo = lower.swap_remove(k);
                let avg = (up + lo.conj()) * 0.5;
                out.push(avg);
                out.push(avg.conj());
            }
            None => {
                out.push(Complex64::new(up.re, 0.0));
            }
        }
    }
    for lo in lower {
        out.push(Complex64::new(lo.re, 0.0));
    }
    out
}

fn cluster(p: &Poly, mut z: Vec<Complex64>) -> RootSet {
    z.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for r in z {
        let mut placed = false;
        for g in groups.iter_mut() {
            let mean = mean(g);
            if roots_match(mean, r) || near_multiple(p, g, r) {
                g.push(r);
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push(vec![r]);
        }
    }
    let mut out = RootSet::default();
    for g in groups {
        let mut m = mean(&g);
        if g.len() > 1 {
            m = polish_multiple(p, m, g.len());
        }
        if m.im.abs() < REAL_SNAP * (1.0 + m.re.abs()) {
            m.im = 0.0;
        }
        out.roots.push(m);
        out.multiplicities.push(g.len());
    }
    out
}

// A root of multiplicity m is a simple root of the (m-1)th derivative.
fn polish_multiple(p: &Poly, start: Complex64, m: usize) -> Complex64 {
    let mut d = p.clone();
    for _ in 1..m {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut z = start;
    for _ in 0..8 {
        let den = dd.eval_c(z);
        if den.norm() == 0.0 {
            break;
        }
        let step = d.eval_c(z) / den;
        if !step.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
            break;
        }
        z -= step;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

fn mean(g: &[Complex64]) -> Complex64 {
    g.iter().sum::<Complex64>() / g.len() as f64
}

// Multiple roots split into a small cluster whose radius scales like eps^(1/m);
// merge nearby roots when the residual at the cluster mean is at rounding level.
fn near_multiple(p: &Poly, g: &[Complex64], r: Complex64) -> bool {
    let m0 = mean(g);
    if (m0 - r).norm() > 1e-4 * (1.0 + m0.norm()) {
        return false;
    }
    let mut all = g.to_vec();
    all.push(r);
    let m = mean(&all);
    p.eval_c(m).norm() <= ROOT_TOL * p.abs_scale(m)
}
