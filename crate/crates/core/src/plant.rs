use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::rational::RationalFn;

/// Tolerance on |M(jw)| = 1 and |m_d(jw)| = 1.
pub const INNER_TOL: f64 = 1e-8;
/// Roots with real part above `-STRICT_LHP` count as not strictly stable.
pub const STRICT_LHP: f64 = 1e-12;

/// `P(s) = exp(-h s) M(s) N_o(s) / m_d(s)` with `M`, `m_d` inner and `N_o` outer.
#[derive(Debug, Clone)]
pub struct DelayPlant {
    pub h: f64,
    pub m: RationalFn,
    pub m_d: RationalFn,
    pub n_o: RationalFn,
}

#[derive(Debug, Clone)]
pub struct WeightPair {
    pub w1: RationalFn,
    /// Identically zero for the one-block problem.
    pub w2: RationalFn,
}

fn all_strictly_lhp(f: &RationalFn, what: &str, zeros: bool) -> Result<()> {
    let set = if zeros { f.zeros() } else { f.poles() };
    let set = match set {
        Ok(s) => s,
        Err(Error::ZeroPolynomial) => return Ok(()),
        Err(e) => return Err(e),
    };
    if let Some(r) = set.roots.iter().find(|r| r.re > -STRICT_LHP) {
        let kind = if zeros { "zero" } else { "pole" };
        return Err(Error::InvalidPlant(format!("{what} has a {kind} at {r} outside the open left half plane")));
    }
    Ok(())
}

fn check_inner(f: &RationalFn, what: &str, grid: &FrequencyGrid) -> Result<()> {
    all_strictly_lhp(f, what, false)?;
    for &w in grid.omegas() {
        let v = f.eval_jw(w).map_err(|e| Error::InvalidPlant(format!("{what}: {e}")))?;
        if (v.norm() - 1.0).abs() > INNER_TOL {
            return Err(Error::InvalidPlant(format!(
                "{what} is not inner: |{what}(j{w})| = {}",
                v.norm()
            )));
        }
    }
    Ok(())
}

impl DelayPlant {
    /// Builds and validates a plant on the given frequency grid.
    pub fn new(h: f64, m: RationalFn, m_d: RationalFn, n_o: RationalFn, grid: &FrequencyGrid) -> Result<Self> {
        let p = DelayPlant { h, m, m_d, n_o };
        p.validate(grid)?;
        Ok(p)
    }

    pub fn validate(&self, grid: &FrequencyGrid) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidPlant(format!("delay h = {} must be positive", self.h)));
        }
        check_inner(&self.m, "M", grid)?;
        check_inner(&self.m_d, "m_d", grid)?;
        if self.n_o.is_zero() {
            return Err(Error::InvalidPlant("N_o is identically zero".into()));
        }
        all_strictly_lhp(&self.n_o, "N_o", false)?;
        all_strictly_lhp(&self.n_o, "N_o", true)?;
        Ok(())
    }

    /// `m_n(s) = exp(-h s) M(s)`.
    pub fn m_n(&self, s: Complex64) -> Result<Complex64> {
        Ok((-self.h * s).exp() * self.m.eval(s)?)
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.m_n(s)? * self.n_o.eval(s)? / self.m_d.eval(s)?)
    }

    /// Right half plane poles of P, i.e. the zeros of `m_d`.
    pub fn alphas(&self) -> Result<crate::roots::RootSet> {
        match self.m_d.zeros() {
            Ok(z) => Ok(z.open_rhp(0.0)),
            Err(Error::ZeroPolynomial) => Err(Error::InvalidPlant("m_d is identically zero".into())),
            Err(e) => Err(e),
        }
    }

    /// True when `M N_o / m_d` is strictly proper.
    pub fn strictly_proper(&self) -> bool {
        let phi = self.m.relative_degree().unwrap_or(0) + self.n_o.relative_degree().unwrap_or(0)
            - self.m_d.relative_degree().unwrap_or(0);
        phi > 0
    }
}

impl WeightPair {
    pub fn new(w1: RationalFn, w2: RationalFn) -> Result<Self> {
        let w = WeightPair { w1, w2 };
        w.validate()?;
        Ok(w)
    }

    pub fn one_block(&self) -> bool {
        self.w2.is_zero()
    }

    pub fn validate(&self) -> Result<()> {
        let phi = self
            .w1
            .relative_degree()
            .ok_or_else(|| Error::InvalidWeights("W1 is identically zero".into()))?;
        if phi < 0 {
            return Err(Error::InvalidWeights(format!("W1 must be proper (relative degree {phi})")));
        }
        all_strictly_lhp(&self.w1, "W1", false).map_err(to_weights)?;
        Ok(())
    }

    /// Checks that `W2 N_o` has its finite zeros and poles in the open left half plane.
    pub fn validate_against(&self, plant: &DelayPlant) -> Result<()> {
        if self.one_block() {
            return Ok(());
        }
        let w2no = &self.w2 * &plant.n_o;
        all_strictly_lhp(&w2no, "W2 N_o", false).map_err(to_weights)?;
        all_strictly_lhp(&w2no, "W2 N_o", true).map_err(to_weights)?;
        Ok(())
    }

    /// Supremum of |W1(jw)| over the grid together with the limit at infinity.
    pub fn w1_peak(&self, grid: &FrequencyGrid) -> Result<f64> {
        let (v, _) = crate::grid::sup_norm_on_grid(|w| self.w1.eval_jw(w), grid)?;
        let dc = self.w1.eval_real(0.0).map(f64::abs).unwrap_or(0.0);
        Ok(v.max(dc).max(self.w1.limit_at_infinity().abs()))
    }
}

fn to_weights(e: Error) -> Error {
    match e {
        Error::InvalidPlant(m) => Error::InvalidWeights(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(n: &[f64], d: &[f64]) -> RationalFn {
        RationalFn::from_coeffs(n, d).unwrap()
    }

    #[test]
    fn allpass_plant_accepted() {
        let g = FrequencyGrid::default();
        let p = DelayPlant::new(0.1, rf(&[-1.0, 1.0], &[1.0, 1.0]), RationalFn::one(), RationalFn::one(), &g).unwrap();
        let v = p.eval(Complex64::new(0.0, 2.0)).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-14);
        assert!(p.alphas().unwrap().is_empty());
        assert!(!p.strictly_proper());
    }

    #[test]
    fn rejects_non_inner_and_bad_delay() {
        let g = FrequencyGrid::default();
        let bad = DelayPlant::new(0.1, rf(&[1.0], &[1.0, 1.0]), RationalFn::one(), RationalFn::one(), &g);
        assert!(matches!(bad, Err(Error::InvalidPlant(_))));
        let bad = DelayPlant::new(-1.0, RationalFn::one(), RationalFn::one(), RationalFn::one(), &g);
        assert!(matches!(bad, Err(Error::InvalidPlant(_))));
        let bad = DelayPlant::new(1.0, RationalFn::one(), RationalFn::one(), rf(&[-1.0, 1.0], &[1.0, 1.0]), &g);
        assert!(matches!(bad, Err(Error::InvalidPlant(_))));
    }

    #[test]
    fn unstable_pole_from_md() {
        let g = FrequencyGrid::default();
        let p = DelayPlant::new(1.0, RationalFn::one(), rf(&[-2.0, 1.0], &[2.0, 1.0]), RationalFn::one(), &g).unwrap();
        let a = p.alphas().unwrap();
        assert_eq!(a.roots.len(), 1);
        assert!((a.roots[0].re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weight_checks() {
        assert!(WeightPair::new(rf(&[1.0, 1.0], &[1.0]), RationalFn::zero()).is_err());
        let w = WeightPair::new(rf(&[1.0, 0.6], &[1.0, 1.0]), RationalFn::zero()).unwrap();
        assert!(w.one_block());
        assert!((w.w1_peak(&FrequencyGrid::default()).unwrap() - 1.0).abs() < 1e-6);
    }
}
