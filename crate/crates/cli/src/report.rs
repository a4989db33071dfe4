//! JSON run reports. Field order is fixed by the struct layout and every float is rounded
//! to 12 significant digits, so identical runs give identical bytes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "hinfstab.report/v1";

/// Rounds to 12 significant digits; non-finite values become `None` (JSON `null`).
pub fn sig(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some(0.0);
    }
    format!("{x:.11e}").parse().ok()
}

pub fn sigs(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|&x| sig(x)).collect()
}

pub fn pair(z: Complex64) -> [Option<f64>; 2] {
    [sig(z.re), sig(z.im)]
}

pub fn pairs(v: &[Complex64]) -> Vec<[Option<f64>; 2]> {
    v.iter().map(|&z| pair(z)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GammaReport {
    pub schema: String,
    pub gamma_opt: Option<f64>,
    pub bracket: [Option<f64>; 2],
    pub sigma_min: Option<f64>,
    pub factorization_failures: usize,
    pub interpolation_failures: usize,
    /// `L1`, `L2` of the optimal level, ascending coefficients, `L1` monic.
    pub l1: Vec<Option<f64>>,
    pub l2: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Interpolation {
    pub a: Option<f64>,
    pub l1: Vec<Option<f64>>,
    pub l2: Vec<Option<f64>>,
    pub max_residual: Option<f64>,
}

/// The free parameter. For the finite class, `q` is the free parameter of the
/// Nevanlinna-Pick family and `U` follows from `mu` and `integers`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FreeParam {
    pub kind: String,
    pub u_inf: Option<f64>,
    pub u_z: Option<f64>,
    pub u_p: Option<f64>,
    pub mu: Option<f64>,
    pub integers: Vec<i64>,
    pub conformal_a: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Certificates {
    pub sigma_max: Option<f64>,
    pub omega_bound: Option<f64>,
    pub unstable_zeros: Vec<[Option<f64>; 2]>,
    pub cancelled_zeros: Vec<[Option<f64>; 2]>,
    pub winding: i64,
    /// Zero scan of the doubled window with a finer contour (infinite class).
    pub recheck_zeros: Option<Vec<[Option<f64>; 2]>>,
    /// Largest `|1 - S_U|` at the unstable zeros of `P2` (finite class).
    pub removability: Option<f64>,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Norms {
    pub performance: Option<f64>,
    pub level: Option<f64>,
    pub within_level: bool,
    pub u_norm: Option<f64>,
    pub eta_max: Option<f64>,
    pub omega_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Design {
    pub u: FreeParam,
    pub certificates: Certificates,
    pub norms: Norms,
}

/// Best point reached by an exhausted search.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Frontier {
    pub message: String,
    pub mu_opt: Option<f64>,
    pub mu_opt_integers: Vec<i64>,
    pub best_mu: Option<f64>,
    pub best_integers: Vec<i64>,
    pub best_u_inf: Option<f64>,
    pub best_u_norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Timing {
    pub gamma_opt_s: Option<f64>,
    pub search_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub schema: String,
    pub status: String,
    pub gamma_opt: Option<f64>,
    pub rho: Option<f64>,
    pub pole_class: String,
    pub branch_taken: String,
    pub interpolation: Option<Interpolation>,
    pub design: Option<Design>,
    pub frontier: Option<Frontier>,
    pub timing: Option<Timing>,
}

pub fn to_json<T: Serialize>(r: &T) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}
