use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const GOLDEN_ITERS: usize = 50;

/// Sorted set of nonnegative frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid::log(1e-3, 1e4, 4000)
    }
}

impl FrequencyGrid {
    pub fn log(lo: f64, hi: f64, points: usize) -> Self {
        let n = points.max(2);
        let (a, b) = (lo.ln(), hi.ln());
        let omegas = (0..n)
            .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
            .collect();
        FrequencyGrid { omegas }
    }

    pub fn linear(lo: f64, hi: f64, points: usize) -> Self {
        let n = points.max(2);
        let omegas = (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect();
        FrequencyGrid { omegas }
    }

    /// Arbitrary frequencies; sorted and deduplicated.
    pub fn from_points(mut omegas: Vec<f64>) -> Self {
        omegas.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        omegas.dedup();
        FrequencyGrid { omegas }
    }

    /// Same range with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Self {
        let mut out = Vec::with_capacity(self.omegas.len() * factor);
        for w in self.omegas.windows(2) {
            for k in 0..factor {
                out.push(w[0] + (w[1] - w[0]) * k as f64 / factor as f64);
            }
        }
        if let Some(&last) = self.omegas.last() {
            out.push(last);
        }
        FrequencyGrid { omegas: out }
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.omegas.first().copied().unwrap_or(0.0)
    }

    pub fn hi(&self) -> f64 {
        self.omegas.last().copied().unwrap_or(0.0)
    }
}

fn wrap(omega: f64, e: Error) -> Error {
    match e {
        Error::GridEvaluation { .. } => e,
        other => Error::GridEvaluation { omega, reason: other.to_string() },
    }
}

/// Supremum of a real-valued function over the grid, refined by golden-section
/// search around the coarse maximizer. Returns `(value, argmax)`.
pub fn sup_on_grid<F>(f: F, grid: &FrequencyGrid) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let om = grid.omegas();
    if om.is_empty() {
        return Err(Error::Precondition("empty frequency grid".into()));
    }
    let vals: Vec<f64> = om
        .par_iter()
        .map(|&w| f(w).map_err(|e| wrap(w, e)))
        .collect::<Result<_>>()?;
    let (imax, &vmax) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("nonempty");
    let lo = if imax > 0 { om[imax - 1] } else { om[0] };
    let hi = if imax + 1 < om.len() { om[imax + 1] } else { om[imax] };
    let (mut best, mut arg) = (vmax, om[imax]);
    if hi > lo {
        let (v, w) = golden_max(&f, lo, hi)?;
        if v > best {
            best = v;
            arg = w;
        }
    }
    Ok((best, arg))
}

/// Supremum of |f(jw)| for a complex frequency response.
pub fn sup_norm_on_grid<F>(f: F, grid: &FrequencyGrid) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    sup_on_grid(|w| f(w).map(|z| z.norm()), grid)
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max<F>(f: &F, mut lo: f64, mut hi: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1).map_err(|e| wrap(x1, e))?;
    let mut f2 = f(x2).map_err(|e| wrap(x2, e))?;
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2).map_err(|e| wrap(x2, e))?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1).map_err(|e| wrap(x1, e))?;
        }
    }
    Ok(if f1 > f2 { (f1, x1) } else { (f2, x2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalFn;

    #[test]
    fn default_grid_shape() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 4000);
        assert!((g.lo() - 1e-3).abs() < 1e-15 && (g.hi() - 1e4).abs() < 1e-8);
    }

    #[test]
    fn lowpass_peak_at_dc() {
        let f = RationalFn::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let (v, w) = sup_norm_on_grid(|w| f.eval_jw(w), &FrequencyGrid::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        assert!(w < 2e-3);
    }

    #[test]
    fn resonance_is_refined() {
        // |1/(s^2 + 0.1 s + 1)| peaks near w = sqrt(1 - 0.005).
        let f = RationalFn::from_coeffs(&[1.0], &[1.0, 0.1, 1.0]).unwrap();
        let (v, w) = sup_norm_on_grid(|w| f.eval_jw(w), &FrequencyGrid::log(0.1, 10.0, 50)).unwrap();
        let wp = (1.0_f64 - 0.005).sqrt();
        assert!((w - wp).abs() < 1e-6);
        let exact = 1.0 / (0.1 * (1.0_f64 - 0.0025).sqrt());
        assert!((v - exact).abs() < 1e-8);
    }

    #[test]
    fn failure_carries_frequency() {
        let r = sup_on_grid(
            |w| if w > 1.0 { Err(Error::Overflow { s: Complex64::new(0.0, w) }) } else { Ok(w) },
            &FrequencyGrid::linear(0.0, 2.0, 3),
        );
        match r {
            Err(Error::GridEvaluation { omega, .. }) => assert_eq!(omega, 2.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
