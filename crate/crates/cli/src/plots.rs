//! CSV emitters for the figure data. Floats use Rust's round-trip formatting; missing
//! values are written as `NaN` so every row has every column.

use std::fmt::Write as _;
use std::path::Path;

use hinfstab::controller::Controller;
use hinfstab::infinite::SweepRow;
use hinfstab::stability::Window;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::CliError;

/// Samples per axis of the `|Z|` grid.
pub const ZGRID_SIGMA: usize = 81;
pub const ZGRID_OMEGA: usize = 161;

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        debug_assert_eq!(r.len(), header.len());
        for (i, v) in r.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn fig1_sweep(dir: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.u_inf, r.omega_max.unwrap_or(f64::NAN), r.eta_max]).collect();
    write_csv(dir, "fig1_sweep.csv", &["u_inf", "omega_max", "eta_max"], &rows)
}

/// `|1 + exp(-h s) M F L_U|` on a grid spanning exactly `[0, sigma_max] x [-omega_bound, omega_bound]`.
pub fn fig2_zgrid(dir: &Path, ctrl: &Controller, window: &Window) -> Result<(), CliError> {
    let mut pts = Vec::with_capacity(ZGRID_SIGMA * ZGRID_OMEGA);
    for i in 0..ZGRID_SIGMA {
        let sigma = window.sigma_max * i as f64 / (ZGRID_SIGMA - 1) as f64;
        for k in 0..ZGRID_OMEGA {
            let omega = -window.omega_bound + 2.0 * window.omega_bound * k as f64 / (ZGRID_OMEGA - 1) as f64;
            pts.push((sigma, omega));
        }
    }
    let rows: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|&(sigma, omega)| {
            let z = ctrl.loop_gain(Complex64::new(sigma, omega)).map(|g| (1.0 + g).norm()).unwrap_or(f64::NAN);
            vec![sigma, omega, z]
        })
        .collect();
    write_csv(dir, "fig2_zgrid.csv", &["sigma", "omega", "abs_z"], &rows)
}

pub fn fig3_mu(dir: &Path, curve: &[(i64, Option<f64>)]) -> Result<(), CliError> {
    let rows: Vec<Vec<f64>> = curve.iter().map(|&(n, m)| vec![n as f64, m.unwrap_or(f64::NAN)]).collect();
    write_csv(dir, "fig3_mu.csv", &["n_2", "mu_min"], &rows)
}

pub fn fig4_umag(dir: &Path, mag: &[(f64, f64)]) -> Result<(), CliError> {
    let rows: Vec<Vec<f64>> = mag.iter().map(|&(w, m)| vec![w, m]).collect();
    write_csv(dir, "fig4_umag.csv", &["omega", "abs_u"], &rows)
}

/// Rows `(mu, u_inf, max |U|, flag)` with `flag = 1` where the norm condition holds.
pub fn fig5_ranges(dir: &Path, rows: &[(f64, f64, f64, bool)]) -> Result<(), CliError> {
    let rows: Vec<Vec<f64>> = rows.iter().map(|&(m, u, n, ok)| vec![m, u, n, if ok { 1.0 } else { 0.0 }]).collect();
    write_csv(dir, "fig5_ranges.csv", &["mu", "u_inf", "u_norm", "stable"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_values_stay_parseable() {
        let dir = std::env::temp_dir().join(format!("hinfstab-plots-{}", std::process::id()));
        fig3_mu(&dir, &[(-1, None), (0, Some(63.5)), (1, Some(70.25))]).unwrap();
        let text = std::fs::read_to_string(dir.join("fig3_mu.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n_2,mu_min"));
        for l in lines {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(v.len(), 2);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
