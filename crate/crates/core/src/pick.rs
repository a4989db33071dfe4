//! Logarithmic Pick problem of the strong stabilization step: Pick matrices, their
//! positivity thresholds in `mu`, and the search over branch integers.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-10;
/// Largest tuple count enumerated by [`mu_opt_search`].
pub const MAX_TUPLES: usize = 2_000_000;

const CONJ_TOL: f64 = 1e-8;

/// Disk points `z_i` with nonzero targets `w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PickProblem {
    pub z: Vec<Complex64>,
    pub w: Vec<Complex64>,
    /// `partner[i]` is the index of the conjugate point (itself for real points).
    pub partner: Vec<usize>,
}

impl PickProblem {
    pub fn new(z: Vec<Complex64>, w: Vec<Complex64>) -> Result<Self> {
        if z.len() != w.len() || z.is_empty() {
            return Err(Error::InvalidPickProblem(format!("{} points and {} targets", z.len(), w.len())));
        }
        for (i, zi) in z.iter().enumerate() {
            if !(zi.norm() < 1.0) {
                return Err(Error::InvalidPickProblem(format!("|z_{}| = {} is not inside the unit disk", i + 1, zi.norm())));
            }
            if z[..i].iter().any(|zk| (zk - zi).norm() <= 1e-12) {
                return Err(Error::RepeatedInterpolationPoint { point: *zi, multiplicity: 2 });
            }
        }
        for (i, wi) in w.iter().enumerate() {
            if wi.norm() == 0.0 || !wi.is_finite() {
                return Err(Error::InvalidPickProblem(format!("target w_{} = {wi} has no logarithm", i + 1)));
            }
        }
        let mut partner = Vec::with_capacity(z.len());
        for (i, zi) in z.iter().enumerate() {
            let tol = CONJ_TOL * (1.0 + zi.norm());
            let j = z
                .iter()
                .position(|zk| (zk - zi.conj()).norm() <= tol)
                .ok_or_else(|| Error::InvalidPickProblem(format!("z_{} = {zi} has no conjugate partner", i + 1)))?;
            if (w[j] - w[i].conj()).norm() > CONJ_TOL * (1.0 + w[i].norm()) {
                return Err(Error::InvalidPickProblem(format!("targets at z_{} and its conjugate are not conjugate", i + 1)));
            }
            partner.push(j);
        }
        Ok(PickProblem { z, w, partner })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `g_i = -ln(w_i/mu) - j 2 pi n_i` on the principal branch.
    pub fn targets(&self, mu: f64, n: &[i64]) -> Vec<Complex64> {
        self.w
            .iter()
            .zip(n)
            .map(|(w, &k)| -(w / mu).ln() - Complex64::new(0.0, 2.0 * PI * k as f64))
            .collect()
    }

    pub fn pick_matrix(&self, mu: f64, n: &[i64]) -> Result<DMatrix<Complex64>> {
        if !(mu > 0.0) {
            return Err(Error::InvalidPickProblem(format!("mu = {mu} must be positive")));
        }
        if n.len() != self.len() {
            return Err(Error::InvalidPickProblem(format!("{} integers for {} points", n.len(), self.len())));
        }
        let g = self.targets(mu, n);
        let m = self.len();
        Ok(DMatrix::from_fn(m, m, |i, k| (g[i] + g[k].conj()) / (1.0 - self.z[i] * self.z[k].conj())))
    }

    pub fn min_eigenvalue(&self, mu: f64, n: &[i64]) -> Result<f64> {
        let p = self.pick_matrix(mu, n)?;
        let e = p.symmetric_eigenvalues();
        Ok(e.iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn is_psd(&self, mu: f64, n: &[i64]) -> Result<bool> {
        Ok(self.min_eigenvalue(mu, n)? >= PSD_TOL)
    }

    /// Common shift `m` with `n + m` conjugate symmetric (`n_partner = -n`, zero at real
    /// points), if one exists. Shifting all targets by `j 2 pi m` leaves `exp(-g)` unchanged.
    pub fn symmetric_shift(&self, n: &[i64]) -> Option<i64> {
        let mut m: Option<i64> = None;
        for (i, &j) in self.partner.iter().enumerate() {
            let s = n[i] + n[j];
            if s % 2 != 0 {
                return None;
            }
            let need = -s / 2;
            match m {
                None => m = Some(need),
                Some(v) if v != need => return None,
                _ => {}
            }
        }
        // Real points also need a real logarithm.
        for (i, &j) in self.partner.iter().enumerate() {
            if i == j && self.w[i].re < 0.0 {
                return None;
            }
        }
        m
    }

    /// Smallest `mu` in `[max |w_i|, max |w_i| * span]` with a positive semidefinite Pick
    /// matrix for the integers `n`.
    pub fn mu_min(&self, n: &[i64], span: f64) -> Result<Option<f64>> {
        let lo0 = self.w.iter().map(|w| w.norm()).fold(0.0, f64::max);
        if self.len() == 1 {
            return Ok(Some(lo0));
        }
        let hi0 = lo0 * span;
        if !self.is_psd(hi0, n)? {
            return Ok(None);
        }
        let (mut lo, mut hi) = (lo0.ln(), hi0.ln());
        while hi - lo > 1e-14 * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.is_psd(mid.exp(), n)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi.exp()))
    }
}

/// Result of the search over branch integers.
#[derive(Debug, Clone)]
pub struct MuSearch {
    pub mu_opt: f64,
    pub n: Vec<i64>,
    /// `(n_2, smallest mu over the remaining integers)` for each `n_2` in range.
    pub curve: Vec<(i64, Option<f64>)>,
    /// Every tuple with a finite threshold, sorted by threshold.
    pub tuples: Vec<(Vec<i64>, f64)>,
}

fn all_tuples(m: usize, bound: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![0i64]];
    for _ in 1..m {
        let mut next = Vec::with_capacity(out.len() * (2 * bound as usize + 1));
        for t in &out {
            for k in -bound..=bound {
                let mut v = t.clone();
                v.push(k);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Bracket multiplier used by [`mu_opt_search`].
pub const MU_SPAN: f64 = 1e6;

/// Minimum Pick threshold over `n_1 = 0`, `|n_k| <= bound`.
pub fn mu_opt_search(pp: &PickProblem, bound: i64) -> Result<MuSearch> {
    if bound < 0 {
        return Err(Error::Precondition(format!("integer bound {bound} is negative")));
    }
    let m = pp.len();
    let count = (2 * bound as u128 + 1).checked_pow(m.saturating_sub(1) as u32).unwrap_or(u128::MAX);
    if count > MAX_TUPLES as u128 {
        return Err(Error::Precondition(format!("{count} integer tuples exceed the limit of {MAX_TUPLES}")));
    }
    let tuples = all_tuples(m, bound);
    let found: Vec<(Vec<i64>, Option<f64>)> = tuples
        .into_par_iter()
        .map(|n| pp.mu_min(&n, MU_SPAN).map(|v| (n, v)))
        .collect::<Result<_>>()?;
    let mut ok: Vec<(Vec<i64>, f64)> = found.iter().filter_map(|(n, v)| v.map(|v| (n.clone(), v))).collect();
    ok.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let (n, mu_opt) = ok.first().cloned().ok_or(Error::NoPsdTuple)?;
    let curve = if m >= 2 {
        (-bound..=bound)
            .map(|k| {
                let best = found
                    .iter()
                    .filter(|(n, _)| n[1] == k)
                    .filter_map(|(_, v)| *v)
                    .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
                (k, best)
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(MuSearch { mu_opt, n, curve, tuples: ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair() -> PickProblem {
        PickProblem::new(vec![c(0.6598, 0.7383), c(0.6598, -0.7383)], vec![c(60.36, -0.70), c(60.36, 0.70)]).unwrap()
    }

    #[test]
    fn hermitian() {
        let p = pair().pick_matrix(64.0, &[0, 3]).unwrap();
        assert!((&p - p.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn scalar_threshold_is_modulus() {
        let pp = PickProblem::new(vec![c(0.3, 0.0)], vec![c(-2.5, 0.0)]).unwrap();
        let s = mu_opt_search(&pp, 3).unwrap();
        assert_eq!(s.mu_opt, 2.5);
        assert!(pp.is_psd(2.5, &[0]).unwrap());
        assert!(!pp.is_psd(2.5 * (1.0 - 1e-6), &[0]).unwrap());
    }

    #[test]
    fn large_mu_is_psd() {
        let pp = pair();
        assert!(pp.min_eigenvalue(1e6, &[0, 0]).unwrap() > 0.0);
    }

    #[test]
    fn threshold_brackets() {
        let pp = pair();
        let s = mu_opt_search(&pp, 5).unwrap();
        assert_eq!(s.n, vec![0, 0]);
        assert!(pp.min_eigenvalue(s.mu_opt * (1.0 + 1e-9), &s.n).unwrap() >= -1e-9);
        assert!(pp.min_eigenvalue(s.mu_opt - 1e-3, &s.n).unwrap() < 0.0);
        let at_zero = s.curve.iter().find(|(k, _)| *k == 0).unwrap().1.unwrap();
        for (_, v) in &s.curve {
            assert!(v.map_or(true, |v| v >= at_zero));
        }
    }

    #[test]
    fn symmetric_shift_rules() {
        let pp = pair();
        assert_eq!(pp.symmetric_shift(&[0, 0]), Some(0));
        assert_eq!(pp.symmetric_shift(&[0, -2]), Some(1));
        assert_eq!(pp.symmetric_shift(&[0, 1]), None);
        let neg = PickProblem::new(vec![c(0.5, 0.0)], vec![c(-1.0, 0.0)]).unwrap();
        assert_eq!(neg.symmetric_shift(&[0]), None);
    }

    #[test]
    fn rejects_bad_data() {
        assert!(PickProblem::new(vec![c(1.2, 0.0)], vec![c(1.0, 0.0)]).is_err());
        assert!(PickProblem::new(vec![c(0.2, 0.0)], vec![c(0.0, 0.0)]).is_err());
        assert!(PickProblem::new(vec![c(0.2, 0.1)], vec![c(1.0, 0.0)]).is_err());
    }
}
