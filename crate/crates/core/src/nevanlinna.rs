//! Nevanlinna-Pick interpolation in the unit disk with positive real part targets,
//! by the Schur recursion on the Cayley transform `f = (1 - g)/(1 + g)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Modulus margin below one treated as a unimodular Schur parameter.
pub const SINGULAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct NpInterpolant {
    z: Vec<Complex64>,
    targets: Vec<Complex64>,
    /// Schur parameters `(z_k, gamma_k)` of the recursion, first point first.
    stages: Vec<(Complex64, Complex64)>,
    /// Unimodular terminal constant when the Pick matrix is singular.
    terminal: Option<Complex64>,
    /// Inverse of the chain matrix at `z = 1`, so that `f(1, q) = q`.
    norm_at_one: [Complex64; 4],
}

fn cayley(g: Complex64) -> Complex64 {
    (1.0 - g) / (1.0 + g)
}

fn disk_auto(z: Complex64, a: Complex64) -> Complex64 {
    (z - a) / (1.0 - a.conj() * z)
}

/// Builds the interpolant with `g(z_i) = targets[i]`. All targets need `Re >= 0`.
pub fn np_interpolant(z: &[Complex64], targets: &[Complex64]) -> Result<NpInterpolant> {
    if z.len() != targets.len() || z.is_empty() {
        return Err(Error::InvalidPickProblem(format!("{} points and {} targets", z.len(), targets.len())));
    }
    let mut pts: Vec<Complex64> = z.to_vec();
    let mut vals: Vec<Complex64> = targets.iter().map(|&g| cayley(g)).collect();
    let mut stages = Vec::with_capacity(pts.len());
    let mut terminal = None;
    while !pts.is_empty() {
        let (z1, f1) = (pts[0], vals[0]);
        let m = f1.norm();
        if !m.is_finite() || m > 1.0 + SINGULAR_TOL {
            return Err(Error::InvalidPickProblem(format!(
                "Schur parameter {m} exceeds one at stage {}: the Pick matrix is not positive semidefinite",
                stages.len() + 1
            )));
        }
        if m >= 1.0 - SINGULAR_TOL {
            // Unique interpolant: the remaining function is the constant f1.
            for (k, v) in vals.iter().enumerate().skip(1) {
                if (v - f1).norm() > 1e-6 {
                    return Err(Error::DegenerateInterpolation(format!(
                        "singular Pick matrix but point {} needs {v} instead of {f1}",
                        stages.len() + k + 1
                    )));
                }
            }
            terminal = Some(f1 / m);
            break;
        }
        stages.push((z1, f1));
        let mut next_p = Vec::with_capacity(pts.len() - 1);
        let mut next_v = Vec::with_capacity(pts.len() - 1);
        for (zk, fk) in pts.iter().zip(&vals).skip(1) {
            let b = disk_auto(*zk, z1);
            next_v.push(disk_auto(*fk, f1) / b);
            next_p.push(*zk);
        }
        pts = next_p;
        vals = next_v;
    }
    // Chain matrix at z = 1 for the map v -> (f_k + b v)/(1 + conj(f_k) b v).
    let one = Complex64::new(1.0, 0.0);
    let mut t = [one, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), one];
    for &(zk, fk) in &stages {
        let b = disk_auto(one, zk);
        let m = [b, fk, fk.conj() * b, one];
        t = [t[0] * m[0] + t[1] * m[2], t[0] * m[1] + t[1] * m[3], t[2] * m[0] + t[3] * m[2], t[2] * m[1] + t[3] * m[3]];
    }
    let norm_at_one = [t[3], -t[1], -t[2], t[0]];
    Ok(NpInterpolant { z: z.to_vec(), targets: targets.to_vec(), stages, terminal, norm_at_one })
}

impl NpInterpolant {
    pub fn points(&self) -> &[Complex64] {
        &self.z
    }

    pub fn targets(&self) -> &[Complex64] {
        &self.targets
    }

    /// Whether the Pick matrix was singular, in which case `q` is ignored.
    pub fn is_singular(&self) -> bool {
        self.terminal.is_some()
    }

    /// Schur function `f(z, q)` with `|f| <= 1`, for a free parameter value `q` at `z`.
    /// The parameterization is normalized so that `f(1, q) = q`; real data and real `q`
    /// give `f(conj z) = conj f(z)`.
    pub fn schur(&self, z: Complex64, q: Complex64) -> Complex64 {
        let n = &self.norm_at_one;
        let mut v = self.terminal.unwrap_or_else(|| (n[0] * q + n[1]) / (n[2] * q + n[3]));
        for &(zk, fk) in self.stages.iter().rev() {
            let b = disk_auto(z, zk);
            v = (fk + b * v) / (1.0 + fk.conj() * b * v);
        }
        v
    }

    /// Coefficients `[a, b, c, d]` with `f(z, q) = (a q + b)/(c q + d)` for every `q`.
    pub fn coefficients(&self, z: Complex64) -> [Complex64; 4] {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut t = match self.terminal {
            Some(v) => [zero, v, zero, one],
            None => self.norm_at_one,
        };
        for &(zk, fk) in self.stages.iter().rev() {
            let b = disk_auto(z, zk);
            let m = [b, fk, fk.conj() * b, one];
            t = [m[0] * t[0] + m[1] * t[2], m[0] * t[1] + m[1] * t[3], m[2] * t[0] + m[3] * t[2], m[2] * t[1] + m[3] * t[3]];
        }
        t
    }

    /// `g(z, q)`, with `Re g >= 0` in the closed disk.
    pub fn eval(&self, z: Complex64, q: Complex64) -> Result<Complex64> {
        let f = self.schur(z, q);
        let d = 1.0 + f;
        if d.norm() == 0.0 {
            return Err(Error::Overflow { s: z });
        }
        let g = (1.0 - f) / d;
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::Overflow { s: z })
        }
    }

    /// Largest `|g(z_i, q) - target_i|`.
    pub fn residual(&self, q: Complex64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (z, t) in self.z.iter().zip(&self.targets) {
            worst = worst.max((self.eval(*z, q)? - t).norm());
        }
        Ok(worst)
    }
}
