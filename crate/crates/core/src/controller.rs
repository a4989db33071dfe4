use std::fmt::Debug;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{sup_on_grid, FrequencyGrid};
use crate::poly::Poly;
use crate::rational::RationalFn;
use crate::synthesis::{Mode, SynthesisContext};

/// Relative slack allowed on the performance level.
pub const PERFORMANCE_SLACK: f64 = 1e-3;

/// A stable free parameter `U` with `||U|| <= 1`.
pub trait FreeParameter: Send + Sync + Debug {
    fn eval(&self, s: Complex64) -> Result<Complex64>;

    /// Limit of `U(s)` as `|s|` grows in the closed right half plane, when it is
    /// direction independent.
    fn limit_at_infinity(&self) -> Option<f64>;

    /// Known upper bound on the H-infinity norm, if available in closed form.
    fn norm_bound(&self) -> Option<f64>;
}

/// `U(s) = u_inf (u_z + s)/(u_p + s)`; `u_z = u_p = 0` is the constant `u_inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UParam {
    pub u_inf: f64,
    pub u_z: f64,
    pub u_p: f64,
}

impl UParam {
    pub fn constant(u: f64) -> Self {
        UParam { u_inf: u, u_z: 0.0, u_p: 0.0 }
    }

    pub fn first_order(u_inf: f64, u_z: f64, u_p: f64) -> Result<Self> {
        let u = UParam { u_inf, u_z, u_p };
        u.validate()?;
        Ok(u)
    }

    pub fn is_constant(&self) -> bool {
        self.u_z == 0.0 && self.u_p == 0.0
    }

    /// Exact `||U||`, `|u_inf| max(1, |u_z|/u_p)`.
    pub fn hinf_norm(&self) -> f64 {
        if self.is_constant() {
            self.u_inf.abs()
        } else {
            self.u_inf.abs() * (self.u_z.abs() / self.u_p).max(1.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_constant() && !(self.u_p > 0.0) {
            return Err(Error::FreeParameterNorm(format!("pole u_p = {} must be positive", self.u_p)));
        }
        if self.u_inf.abs() > 1.0 + 1e-12 {
            return Err(Error::FreeParameterNorm(format!("|u_inf| = {} exceeds one", self.u_inf.abs())));
        }
        if !self.is_constant() && self.u_p < (self.u_inf * self.u_z).abs() {
            return Err(Error::FreeParameterNorm(format!(
                "u_p = {} is below |u_inf u_z| = {}",
                self.u_p,
                (self.u_inf * self.u_z).abs()
            )));
        }
        Ok(())
    }

    pub fn rational(&self) -> RationalFn {
        if self.is_constant() {
            RationalFn::constant(self.u_inf)
        } else {
            RationalFn::new_unreduced(
                Poly::new(vec![self.u_inf * self.u_z, self.u_inf]),
                Poly::new(vec![self.u_p, 1.0]),
            )
            .expect("nonzero denominator")
        }
    }

    /// `L1U` with the denominator of `U` cleared: `(u_p + s) L1(s) + u_inf (u_z + s) L2(-s)`.
    pub fn l1u_poly(&self, l1: &Poly, l2: &Poly) -> Poly {
        let r = self.rational();
        &(r.den() * l1) + &(r.num() * &l2.mirror())
    }
}

impl FreeParameter for UParam {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        if self.is_constant() {
            Ok(Complex64::new(self.u_inf, 0.0))
        } else {
            self.rational().eval(s)
        }
    }

    fn limit_at_infinity(&self) -> Option<f64> {
        Some(self.u_inf)
    }

    fn norm_bound(&self) -> Option<f64> {
        Some(self.hinf_norm())
    }
}

/// Suboptimal (or optimal, with `U = 0`) controller
/// `C = E m_d N_o^{-1} F L_U / (1 + m_n F L_U)`.
#[derive(Debug, Clone)]
pub struct Controller {
    pub ctx: Arc<SynthesisContext>,
    pub u: Arc<dyn FreeParameter>,
}

pub fn build_controller(ctx: Arc<SynthesisContext>, u: Arc<dyn FreeParameter>) -> Result<Controller> {
    if let Some(n) = u.norm_bound() {
        if n > 1.0 + 1e-9 {
            return Err(Error::FreeParameterNorm(format!("||U|| = {n} exceeds one")));
        }
    }
    if ctx.mode == Mode::Optimal && u.norm_bound() != Some(0.0) {
        return Err(Error::Precondition("the optimal controller admits only U = 0".into()));
    }
    Ok(Controller { ctx, u })
}

impl Controller {
    pub fn central(ctx: Arc<SynthesisContext>) -> Self {
        Controller { ctx, u: Arc::new(UParam::constant(0.0)) }
    }

    pub fn l1u(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.ctx.l1.eval_c(s) + self.ctx.l2.eval_c(-s) * self.u.eval(s)?)
    }

    pub fn l2u(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.ctx.l2.eval_c(s) + self.ctx.l1.eval_c(-s) * self.u.eval(s)?)
    }

    pub fn l_u(&self, s: Complex64) -> Result<Complex64> {
        let d = self.l1u(s)?;
        if d.norm() == 0.0 {
            return Err(Error::PoleProximity { s, den_abs: 0.0 });
        }
        Ok(self.l2u(s)? / d)
    }

    /// `F L_U`, the delay-free part of the loop gain.
    pub fn fl(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.ctx.f.eval(s)? * self.l_u(s)?)
    }

    /// `m_n F L_U`.
    pub fn loop_gain(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.ctx.mnf(s)? * self.l_u(s)?)
    }

    /// `L1U + m_n F L2U`; its closed right half plane zeros other than those of `E` and `m_d`
    /// are the unstable poles of the controller.
    pub fn characteristic(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.l1u(s)? + self.ctx.mnf(s)? * self.l2u(s)?)
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let ctx = &self.ctx;
        let lu = self.l_u(s)?;
        let x = ctx.mnf(s)? * lu;
        let num = ctx.e.eval(s)? * ctx.plant.m_d.eval(s)? * ctx.f.eval(s)? * lu / ctx.plant.n_o.eval(s)?;
        let den = 1.0 + x;
        if den.norm() == 0.0 {
            return Err(Error::PoleProximity { s, den_abs: 0.0 });
        }
        Ok(num / den)
    }

    /// Sensitivity `S = 1/(1 + P C)` and complementary sensitivity `T = P C/(1 + P C)`.
    pub fn sensitivities(&self, s: Complex64) -> Result<(Complex64, Complex64)> {
        let pc = self.ctx.plant.eval(s)? * self.eval(s)?;
        let d = 1.0 + pc;
        if !(d.norm() > 0.0) {
            return Err(Error::PoleProximity { s, den_abs: d.norm() });
        }
        Ok((1.0 / d, pc / d))
    }
}

/// Grid supremum of `sqrt(|W1 S|^2 + |W2 T|^2)` and whether it stays within the level.
pub fn verify_performance(ctrl: &Controller, grid: &FrequencyGrid) -> Result<(f64, bool)> {
    let w = &ctrl.ctx.weights;
    let (norm, _) = sup_on_grid(
        |om| {
            let s = Complex64::new(0.0, om);
            let (sens, comp) = ctrl.sensitivities(s)?;
            let a = (w.w1.eval(s)? * sens).norm_sqr();
            let b = if w.w2.is_zero() { 0.0 } else { (w.w2.eval(s)? * comp).norm_sqr() };
            let v = (a + b).sqrt();
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Overflow { s })
            }
        },
        grid,
    )?;
    Ok((norm, norm <= ctrl.ctx.level * (1.0 + PERFORMANCE_SLACK)))
}
