use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::roots::{poly_roots, roots_match, RootSet};

/// Relative size of |den(s)| below which evaluation is treated as hitting a pole.
pub const POLE_TOL: f64 = 1e-14;

/// Real rational function `num / den`, kept in reduced form.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    num: Poly,
    den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(RationalFn { num, den }.reduced())
    }

    /// Builds without cancelling common factors.
    pub fn new_unreduced(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(RationalFn { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Poly::new(num.to_vec()), Poly::new(den.to_vec()))
    }

    pub fn poly(p: Poly) -> Self {
        RationalFn { num: p, den: Poly::constant(1.0) }
    }

    pub fn constant(c: f64) -> Self {
        Self::poly(Poly::constant(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Blaschke product prod (s - r)/(s + conj(r)); inner when every r lies in the open RHP.
    pub fn blaschke(roots: &[Complex64]) -> Self {
        let mirrored: Vec<Complex64> = roots.iter().map(|r| -r.conj()).collect();
        RationalFn {
            num: Poly::from_roots(roots),
            den: Poly::from_roots(&mirrored),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Cancels common roots of numerator and denominator.
    pub fn reduced(self) -> Self {
        if self.num.is_zero() {
            return RationalFn { num: Poly::zero(), den: Poly::constant(1.0) };
        }
        if self.num.degree() == Some(0) || self.den.degree() == Some(0) {
            return self;
        }
        let (Ok(zn), Ok(zd)) = (poly_roots(&self.num), poly_roots(&self.den)) else {
            return self;
        };
        let mut nz = zn.expanded();
        let mut dz = zd.expanded();
        let mut cancelled = false;
        let mut i = 0;
        while i < nz.len() {
            if let Some(j) = dz.iter().position(|&d| roots_match(nz[i], d)) {
                nz.swap_remove(i);
                dz.swap_remove(j);
                cancelled = true;
            } else {
                i += 1;
            }
        }
        if !cancelled {
            return self;
        }
        let gain = self.num.lead() / self.den.lead();
        RationalFn {
            num: Poly::from_roots(&nz).scale(gain),
            den: Poly::from_roots(&dz),
        }
    }

    /// Evaluates `num(s)/den(s)`, signalling pole proximity distinctly from overflow.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval_c(s);
        let scale = self.den.abs_scale(s);
        if d.norm() <= POLE_TOL * scale {
            return Err(Error::PoleProximity { s, den_abs: d.norm() });
        }
        let v = self.num.eval_c(s) / d;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow { s })
        }
    }

    pub fn eval_jw(&self, omega: f64) -> Result<Complex64> {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn eval_real(&self, x: f64) -> Result<f64> {
        Ok(self.eval(Complex64::new(x, 0.0))?.re)
    }

    /// f(-s).
    pub fn mirror(&self) -> Self {
        RationalFn { num: self.num.mirror(), den: self.den.mirror() }
    }

    /// deg(den) - deg(num); `None` for the zero function.
    pub fn relative_degree(&self) -> Option<i64> {
        let n = self.num.degree()? as i64;
        let d = self.den.degree()? as i64;
        Some(d - n)
    }

    /// Limit as |s| grows along the imaginary axis, signed when finite.
    /// Improper functions return an infinity.
    pub fn limit_at_infinity(&self) -> f64 {
        match self.relative_degree() {
            None => 0.0,
            Some(phi) if phi > 0 => 0.0,
            Some(0) => self.num.lead() / self.den.lead(),
            Some(_) => f64::INFINITY,
        }
    }

    pub fn zeros(&self) -> Result<RootSet> {
        poly_roots(&self.num)
    }

    pub fn poles(&self) -> Result<RootSet> {
        poly_roots(&self.den)
    }

    pub fn scale(&self, k: f64) -> Self {
        RationalFn { num: self.num.scale(k), den: self.den.clone() }.reduced()
    }

    pub fn inv(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn checked_div(&self, rhs: &RationalFn) -> Result<Self> {
        Self::new(&self.num * &rhs.den, &self.den * &rhs.num)
    }

    /// Divides numerator and denominator by the denominator's leading coefficient.
    pub fn normalized(&self) -> Self {
        let l = self.den.lead();
        RationalFn { num: self.num.scale(1.0 / l), den: self.den.scale(1.0 / l) }
    }
}

impl Add for &RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: &RationalFn) -> RationalFn {
        if self.den == rhs.den {
            let num = (&self.num + &rhs.num).trimmed(1e-14);
            return RationalFn { num, den: self.den.clone() }.reduced();
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalFn { num: num.trimmed(1e-14), den: &self.den * &rhs.den }.reduced()
    }
}

impl Sub for &RationalFn {
    type Output = RationalFn;
    fn sub(self, rhs: &RationalFn) -> RationalFn {
        self + &(-rhs)
    }
}

impl Mul for &RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: &RationalFn) -> RationalFn {
        RationalFn { num: &self.num * &rhs.num, den: &self.den * &rhs.den }.reduced()
    }
}

impl Neg for &RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        RationalFn { num: -&self.num, den: self.den.clone() }
    }
}

/// Panics on division by the zero function; use `checked_div` when that can happen.
impl Div for &RationalFn {
    type Output = RationalFn;
    fn div(self, rhs: &RationalFn) -> RationalFn {
        self.checked_div(rhs).expect("division by the zero rational function")
    }
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(n: &[f64], d: &[f64]) -> RationalFn {
        RationalFn::from_coeffs(n, d).unwrap()
    }

    #[test]
    fn mirror_simple() {
        let f = rf(&[1.0, 1.0], &[2.0, 1.0]);
        let m = f.mirror();
        assert_eq!(m.num().coeffs(), &[1.0, -1.0]);
        assert_eq!(m.den().coeffs(), &[2.0, -1.0]);
        assert_eq!(m.mirror(), f);
    }

    #[test]
    fn weight_times_mirror() {
        let w = rf(&[1.0, 0.6], &[1.0, 1.0]);
        let p = &w * &w.mirror();
        let x = Complex64::new(0.37, 0.81);
        let want = (1.0 - 0.36 * x * x) / (1.0 - x * x);
        assert!((p.eval(x).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn eval_and_pole() {
        let f = rf(&[1.0], &[1.0, 1.0]);
        assert_eq!(f.eval(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(
            f.eval(Complex64::new(-1.0, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn allpass_on_axis() {
        let f = rf(&[-1.0, 1.0], &[1.0, 1.0]);
        for w in [0.0, 0.3, 7.0, 1e3] {
            assert!((f.eval_jw(w).unwrap().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reduction_cancels_common_root() {
        let f = RationalFn::new(
            Poly::new(vec![-1.0, 0.0, 1.0]),
            Poly::new(vec![1.0, 2.0, 1.0]),
        )
        .unwrap();
        assert_eq!(f.den().degree(), Some(1));
        assert!((f.eval_real(3.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn relative_degree_cases() {
        assert_eq!(RationalFn::constant(2.0).relative_degree(), Some(0));
        assert_eq!(rf(&[2.24, 1.0], &[2.0]).relative_degree(), Some(-1));
        assert_eq!(RationalFn::zero().relative_degree(), None);
    }

    #[test]
    fn limits() {
        assert_eq!(rf(&[1.0, 0.6], &[1.0, 1.0]).limit_at_infinity(), 0.6);
        assert_eq!(rf(&[1.0], &[1.0, 1.0]).limit_at_infinity(), 0.0);
        assert!(rf(&[1.0, 1.0], &[1.0]).limit_at_infinity().is_infinite());
    }

    #[test]
    fn blaschke_is_inner() {
        let b = RationalFn::blaschke(&[Complex64::new(0.5, 2.0), Complex64::new(0.5, -2.0)]);
        for w in [0.0, 1.0, 2.0, 50.0] {
            assert!((b.eval_jw(w).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }
}
