//! Zero counting and location in right half plane rectangles by the argument principle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ContourOptions {
    /// Radius of the semicircular detours around known imaginary-axis zeros.
    pub indentation: f64,
    /// Largest phase change accepted between consecutive samples.
    pub max_phase_step: f64,
    /// Largest spacing of the initial samples along an edge.
    pub max_spacing: f64,
    /// Minimum number of initial samples per edge.
    pub min_samples: usize,
    /// Bisection depth allowed when resolving a fast phase change.
    pub max_refine_depth: usize,
    /// Subdivision depth allowed when isolating zeros.
    pub max_subdivision_depth: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            indentation: 1e-4,
            max_phase_step: PI / 4.0,
            max_spacing: 0.05,
            min_samples: 64,
            max_refine_depth: 48,
            max_subdivision_depth: 60,
        }
    }
}

impl ContourOptions {
    /// Options with initial spacing fine enough to follow `exp(-h s)` along vertical edges.
    pub fn for_delay(h: f64) -> Self {
        let mut o = ContourOptions::default();
        if h > 0.0 {
            o.max_spacing = o.max_spacing.min(PI / (8.0 * h));
        }
        o
    }

    /// Halved spacing and phase step, used for independent re-verification.
    pub fn refined(&self) -> Self {
        ContourOptions {
            max_phase_step: self.max_phase_step / 2.0,
            max_spacing: self.max_spacing / 2.0,
            min_samples: self.min_samples * 2,
            ..*self
        }
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    /// The right half plane window `[0, sigma_max] x [-omega, omega]`.
    pub fn window(sigma_max: f64, omega: f64) -> Self {
        Rect::new(0.0, sigma_max, -omega, omega)
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    pub fn contains(&self, z: Complex64, margin: f64) -> bool {
        z.re >= self.x0 - margin && z.re <= self.x1 + margin && z.im >= self.y0 - margin && z.im <= self.y1 + margin
    }
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Line(Complex64, Complex64),
    Arc { c: Complex64, r: f64, th0: f64, th1: f64 },
}

impl Piece {
    fn at(&self, t: f64) -> Complex64 {
        match *self {
            Piece::Line(a, b) => a + (b - a) * t,
            Piece::Arc { c, r, th0, th1 } => c + Complex64::from_polar(r, th0 + (th1 - th0) * t),
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Piece::Line(a, b) => (b - a).norm(),
            Piece::Arc { r, th0, th1, .. } => r * (th1 - th0).abs(),
        }
    }
}

// Counter-clockwise boundary. The left edge, when it lies on the imaginary axis, detours
// into the right half plane around each indentation point so those zeros stay outside.
fn boundary(rect: &Rect, indent: &[f64], r: f64) -> Vec<Piece> {
    let c = |x: f64, y: f64| Complex64::new(x, y);
    let mut out = vec![
        Piece::Line(c(rect.x0, rect.y0), c(rect.x1, rect.y0)),
        Piece::Line(c(rect.x1, rect.y0), c(rect.x1, rect.y1)),
        Piece::Line(c(rect.x1, rect.y1), c(rect.x0, rect.y1)),
    ];
    let mut pts: Vec<f64> = if rect.x0 == 0.0 {
        indent.iter().copied().filter(|&w| w > rect.y0 && w < rect.y1).collect()
    } else {
        Vec::new()
    };
    pts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut y = rect.y1;
    for w in pts {
        out.push(Piece::Line(c(rect.x0, y), c(rect.x0, w + r)));
        out.push(Piece::Arc { c: c(0.0, w), r, th0: PI / 2.0, th1: -PI / 2.0 });
        y = w - r;
    }
    out.push(Piece::Line(c(rect.x0, y), c(rect.x0, rect.y0)));
    out
}

fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

fn too_close(z: Complex64) -> Error {
    Error::ContourTooClose { near: z }
}

fn piece_phase<F>(f: &F, piece: &Piece, opts: &ContourOptions) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let n = ((piece.length() / opts.max_spacing).ceil() as usize).max(opts.min_samples);
    let ts: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let vals: Vec<Complex64> = ts
        .par_iter()
        .map(|&t| {
            let z = piece.at(t);
            let v = f(z)?;
            if v.norm() == 0.0 || !v.is_finite() {
                return Err(too_close(z));
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for k in 0..n {
        total += refine(f, piece, ts[k], ts[k + 1], vals[k], vals[k + 1], opts, 0)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    piece: &Piece,
    t0: f64,
    t1: f64,
    v0: Complex64,
    v1: Complex64,
    opts: &ContourOptions,
    depth: usize,
) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let d = phase_step(v0, v1);
    if d.abs() <= opts.max_phase_step {
        return Ok(d);
    }
    let tm = 0.5 * (t0 + t1);
    let zm = piece.at(tm);
    if depth >= opts.max_refine_depth {
        return Err(too_close(zm));
    }
    let vm = f(zm)?;
    if vm.norm() == 0.0 || !vm.is_finite() {
        return Err(too_close(zm));
    }
    Ok(refine(f, piece, t0, tm, v0, vm, opts, depth + 1)? + refine(f, piece, tm, t1, vm, v1, opts, depth + 1)?)
}

/// Winding number of `f` around the boundary of `rect`, i.e. the number of zeros inside
/// (minus poles), with the imaginary-axis points in `indent` detoured around.
pub fn winding_number<F>(f: &F, rect: &Rect, indent: &[f64], opts: &ContourOptions) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut total = 0.0;
    for piece in boundary(rect, indent, opts.indentation) {
        total += piece_phase(f, &piece, opts)?;
    }
    let turns = total / (2.0 * PI);
    let n = turns.round();
    if (turns - n).abs() > 0.1 {
        return Err(too_close(rect.center()));
    }
    Ok(n as i64)
}

/// Zeros found inside a rectangle together with the winding number of its boundary.
#[derive(Debug, Clone)]
pub struct LocatedZeros {
    pub winding: i64,
    pub zeros: Vec<Complex64>,
}

/// Counts and isolates the zeros of `f` in `rect` by recursive subdivision, refining
/// each isolated zero with Newton steps.
pub fn locate_zeros<F>(f: &F, rect: &Rect, indent: &[f64], opts: &ContourOptions) -> Result<LocatedZeros>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let winding = winding_number(f, rect, indent, opts)?;
    if winding < 0 {
        return Err(Error::Precondition(format!("negative winding number {winding}: the function has poles in the window")));
    }
    let mut zeros = Vec::new();
    isolate(f, rect, winding, indent, opts, 0, &mut zeros)?;
    Ok(LocatedZeros { winding, zeros })
}

const SPLIT_FRACTIONS: [f64; 5] = [0.5, 0.4617, 0.5389, 0.4231, 0.5773];

fn split(rect: &Rect, frac: f64, indent: &[f64], r: f64) -> Option<(Rect, Rect)> {
    let w = rect.x1 - rect.x0;
    let hgt = rect.y1 - rect.y0;
    let indented = rect.x0 == 0.0 && indent.iter().any(|&p| p > rect.y0 && p < rect.y1);
    if w >= hgt && !(indented && rect.x0 + frac * w < 4.0 * r) {
        let xm = rect.x0 + frac * w;
        return Some((Rect { x1: xm, ..*rect }, Rect { x0: xm, ..*rect }));
    }
    let ym = rect.y0 + frac * hgt;
    if rect.x0 == 0.0 && indent.iter().any(|&p| (p - ym).abs() < 2.0 * r) {
        return None;
    }
    Some((Rect { y1: ym, ..*rect }, Rect { y0: ym, ..*rect }))
}

fn isolate<F>(
    f: &F,
    rect: &Rect,
    count: i64,
    indent: &[f64],
    opts: &ContourOptions,
    depth: usize,
    out: &mut Vec<Complex64>,
) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if count <= 0 {
        return Ok(());
    }
    let c = rect.center();
    let scale = 1.0 + c.norm();
    if count == 1 && rect.size() < 0.05 * scale {
        if let Some(z) = newton(f, c, rect.size()) {
            if rect.contains(z, 1e-9 * scale) {
                out.push(z);
                return Ok(());
            }
        }
    }
    if rect.size() < 1e-11 * scale || depth >= opts.max_subdivision_depth {
        for _ in 0..count {
            out.push(c);
        }
        return Ok(());
    }
    let mut last_err = None;
    for frac in SPLIT_FRACTIONS {
        let Some((a, b)) = split(rect, frac, indent, opts.indentation) else { continue };
        let ca = winding_number(f, &a, indent, opts);
        let cb = winding_number(f, &b, indent, opts);
        match (ca, cb) {
            (Ok(ca), Ok(cb)) if ca + cb == count && ca >= 0 && cb >= 0 => {
                isolate(f, &a, ca, indent, opts, depth + 1, out)?;
                isolate(f, &b, cb, indent, opts, depth + 1, out)?;
                return Ok(());
            }
            (Err(e), _) | (_, Err(e)) => last_err = Some(e),
            _ => last_err = Some(too_close(c)),
        }
    }
    Err(last_err.unwrap_or_else(|| too_close(c)))
}

/// Newton iteration with a central-difference derivative.
pub fn newton<F>(f: &F, start: Complex64, radius: f64) -> Option<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut z = start;
    for _ in 0..60 {
        let fz = f(z).ok()?;
        if fz.norm() == 0.0 {
            return Some(z);
        }
        let h = 1e-7 * (1.0 + z.norm());
        let d = (f(z + h).ok()? - f(z - h).ok()?) / (2.0 * h);
        let step = fz / d;
        if !step.is_finite() || (z - step - start).norm() > 4.0 * radius.max(1e-12) {
            return None;
        }
        z -= step;
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    let fz = f(z).ok()?;
    let h = 1e-7 * (1.0 + z.norm());
    let d = (f(z + h).ok()? - f(z - h).ok()?) / (2.0 * h);
    if (fz / d).norm() <= 1e-10 * (1.0 + z.norm()) {
        Some(z)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn counts_polynomial_zeros() {
        let f = |s: Complex64| Ok((s - c(1.0, 2.0)) * (s - c(1.0, -2.0)) * (s + 3.0) * (s - c(0.5, 0.0)));
        let n = winding_number(&f, &Rect::window(5.0, 5.0), &[], &ContourOptions::default()).unwrap();
        assert_eq!(n, 3);
    }

    #[test]
    fn indentation_excludes_axis_zero() {
        let f = |s: Complex64| Ok((s - c(0.0, 1.5)) * (s - c(0.0, -1.5)) * (s - c(2.0, 0.0)));
        let n = winding_number(&f, &Rect::window(5.0, 5.0), &[1.5, -1.5], &ContourOptions::default()).unwrap();
        assert_eq!(n, 1);
        let r = winding_number(&f, &Rect::window(5.0, 5.0), &[], &ContourOptions::default());
        assert!(matches!(r, Err(Error::ContourTooClose { .. })));
    }

    #[test]
    fn delay_quasipolynomial() {
        // 1 + 2 exp(-s): zeros at s = ln 2 + j(2k+1) pi.
        let f = |s: Complex64| Ok(1.0 + 2.0 * (-s).exp());
        let opts = ContourOptions::for_delay(1.0);
        let found = locate_zeros(&f, &Rect::window(3.0, 10.0), &[], &opts).unwrap();
        assert_eq!(found.winding, 4);
        for z in &found.zeros {
            assert!((z.re - 2f64.ln()).abs() < 1e-10);
            let k = (z.im / PI - 1.0) / 2.0;
            assert!((k - k.round()).abs() < 1e-10);
        }
    }

    #[test]
    fn locates_close_pair() {
        let f = |s: Complex64| Ok((s - c(0.0287, 2.2346)) * (s - c(0.0297, 2.2346)) * (s - c(0.0287, -2.2346)) * (s - c(0.0297, -2.2346)));
        let found = locate_zeros(&f, &Rect::window(1.0, 4.0), &[], &ContourOptions::default()).unwrap();
        assert_eq!(found.zeros.len(), 4);
        for z in &found.zeros {
            let d = [c(0.0287, 2.2346), c(0.0297, 2.2346), c(0.0287, -2.2346), c(0.0297, -2.2346)]
                .iter()
                .map(|q| (q - z).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-10);
        }
    }
}
