//! Magnetic fields on a periodic grid: analytic profiles, spectral
//! Biot-Savart inversion, rescaling, the Poincare-gauge remainder and the
//! local-density energy.
//!
//! Grids are cubic tori of side `n * spacing`. Node `(i0, i1, i2)` sits at
//! `spacing * (i0, i1, i2)` and is stored at `(i0 * n + i1) * n + i2`.
//!
//! # Grid files
//!
//! Version 1 is plain text:
//!
//! ```text
//! magvac-grid 1
//! n 32
//! spacing 0.25
//! profile gaussian-vortex
//! bx by bz
//! ...
//! ```
//!
//! followed by `n^3` lines of three floats in storage order. A profile of
//! `-` means the grid was not synthesized from a built-in profile.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num::complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::pvscheme::{f_pv, PvScheme};
use crate::quad::{integrate, QuadratureConfig};

pub const GRID_FORMAT_VERSION: u32 = 1;

/// Largest `n` accepted for spectral resampling.
pub const MAX_GRID_N: usize = 256;

type V3 = [f64; 3];

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Built-in divergence-free fields with closed-form potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Profile {
    Zero,
    Constant { b: V3 },
    /// `A = (a/2) g (-y2, y1, 0)`, `g = e^{-|y|^2/w^2}`, `y = x - centre`;
    /// the field is `a e3` at the centre and has zero total flux.
    GaussianVortex { amplitude: f64, width: f64, centre: V3 },
    /// `B = (0, 0, a cos(2 pi x1/L))` with `A = (0, (a/k) sin(k x1), 0)`.
    FourierMode { amplitude: f64, length: f64 },
    /// `B = b0 + M x` with `tr M = 0`, potential `b0 x x/2 + (M x) x x/3`.
    Linear { b0: V3, m: [V3; 3] },
    /// `A = grad sin(k.x)`, so `B = 0`.
    PureGauge { k: V3 },
}

impl Profile {
    pub fn tag(&self) -> &'static str {
        match self {
            Profile::Zero => "zero",
            Profile::Constant { .. } => "constant",
            Profile::GaussianVortex { .. } => "gaussian-vortex",
            Profile::FourierMode { .. } => "fourier-mode",
            Profile::Linear { .. } => "linear",
            Profile::PureGauge { .. } => "pure-gauge",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Profile::GaussianVortex { width, .. } if !(width > 0.0) => domain("vortex width must be positive"),
            Profile::FourierMode { length, .. } if !(length > 0.0) => domain("mode length must be positive"),
            Profile::Linear { m, .. } => {
                let tr = m[0][0] + m[1][1] + m[2][2];
                let size = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                if tr.abs() > 1e-14 * size.max(1.0) {
                    return domain(format!("linear profile needs a traceless gradient, trace {tr}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn field(&self, x: V3) -> V3 {
        match *self {
            Profile::Zero | Profile::PureGauge { .. } => [0.0; 3],
            Profile::Constant { b } => b,
            Profile::GaussianVortex { amplitude: a, width: w, centre: c } => {
                let y = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
                let w2 = w * w;
                let g = (-dot(y, y) / w2).exp();
                let rho2 = y[0] * y[0] + y[1] * y[1];
                [a / w2 * y[0] * y[2] * g, a / w2 * y[1] * y[2] * g, a * g * (1.0 - rho2 / w2)]
            }
            Profile::FourierMode { amplitude, length } => [0.0, 0.0, amplitude * (2.0 * PI * x[0] / length).cos()],
            Profile::Linear { b0, m } => add(b0, [dot(m[0], x), dot(m[1], x), dot(m[2], x)]),
        }
    }

    pub fn potential(&self, x: V3) -> V3 {
        match *self {
            Profile::Zero => [0.0; 3],
            Profile::Constant { b } => scale(cross(b, x), 0.5),
            Profile::GaussianVortex { amplitude: a, width: w, centre: c } => {
                let y = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
                let g = (-dot(y, y) / (w * w)).exp();
                [-0.5 * a * g * y[1], 0.5 * a * g * y[0], 0.0]
            }
            Profile::FourierMode { amplitude, length } => {
                let k = 2.0 * PI / length;
                [0.0, amplitude / k * (k * x[0]).sin(), 0.0]
            }
            Profile::Linear { b0, m } => {
                let mx = [dot(m[0], x), dot(m[1], x), dot(m[2], x)];
                add(scale(cross(b0, x), 0.5), scale(cross(mx, x), 1.0 / 3.0))
            }
            Profile::PureGauge { k } => scale(k, dot(k, x).cos()),
        }
    }
}

/// `A_eps(x) = A(eps x)/eps` for an analytic profile.
pub fn scaled_profile_potential(profile: &Profile, eps: f64, x: V3) -> Result<V3> {
    if !(eps > 0.0 && eps.is_finite()) {
        return domain(format!("scale must be positive, got {eps}"));
    }
    Ok(scale(profile.potential(scale(x, eps)), 1.0 / eps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldGrid {
    pub n: usize,
    pub spacing: f64,
    pub values: Vec<V3>,
    pub profile: Option<String>,
}

impl FieldGrid {
    pub fn new(n: usize, spacing: f64, values: Vec<V3>, profile: Option<String>) -> Result<FieldGrid> {
        if n < 2 {
            return domain("grid needs at least two points per dimension");
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return domain(format!("spacing must be positive, got {spacing}"));
        }
        if values.len() != n * n * n {
            return domain(format!("expected {} nodes, got {}", n * n * n, values.len()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return domain("grid values must be finite");
        }
        Ok(FieldGrid { n, spacing, values, profile })
    }

    /// Samples a profile at the nodes.
    pub fn from_profile(profile: &Profile, n: usize, spacing: f64) -> Result<FieldGrid> {
        profile.validate()?;
        let values = (0..n * n * n).map(|idx| profile.field(node(idx, n, spacing))).collect();
        FieldGrid::new(n, spacing, values, Some(profile.tag().to_string()))
    }

    /// Samples a profile's potential at the nodes.
    pub fn potential_from_profile(profile: &Profile, n: usize, spacing: f64) -> Result<FieldGrid> {
        profile.validate()?;
        let values = (0..n * n * n).map(|idx| profile.potential(node(idx, n, spacing))).collect();
        FieldGrid::new(n, spacing, values, Some(format!("potential:{}", profile.tag())))
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    pub fn node(&self, idx: usize) -> V3 {
        node(idx, self.n, self.spacing)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> V3 {
        let k = 1.0 / self.values.len() as f64;
        let mut m = [0.0; 3];
        for v in &self.values {
            m = add(m, *v);
        }
        scale(m, k)
    }

    /// `max |div|` relative to `max |v| * pi/spacing`, the largest value a
    /// resolved derivative can take.
    pub fn divergence_residual(&self) -> f64 {
        let d = spectral_divergence(self);
        let top = self.max_norm() * PI / self.spacing;
        if top == 0.0 {
            return 0.0;
        }
        d.iter().fold(0.0f64, |a, v| a.max(v.abs())) / top
    }
}

fn node(idx: usize, n: usize, h: f64) -> V3 {
    let i2 = idx % n;
    let i1 = (idx / n) % n;
    let i0 = idx / (n * n);
    [i0 as f64 * h, i1 as f64 * h, i2 as f64 * h]
}

/// In-place 3D FFT; the inverse is normalized.
fn fft3(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for stride in [1, n, n * n] {
        for base in 0..n * n {
            // Enumerate every line along the axis with this stride.
            let start = match stride {
                1 => base * n,
                s if s == n => (base / n) * n * n + base % n,
                _ => base,
            };
            for k in 0..n {
                line[k] = data[start + k * stride];
            }
            fft.process(&mut line);
            for k in 0..n {
                data[start + k * stride] = line[k];
            }
        }
    }
    if inverse {
        let s = 1.0 / (n * n * n) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Derivative wavenumber; the Nyquist mode of an even grid is dropped.
fn wavenumber(i: usize, n: usize, length: f64) -> f64 {
    let m = if 2 * i < n {
        i as f64
    } else if 2 * i == n {
        0.0
    } else {
        i as f64 - n as f64
    };
    2.0 * PI * m / length
}

fn kvec(idx: usize, n: usize, length: f64) -> V3 {
    let i2 = idx % n;
    let i1 = (idx / n) % n;
    let i0 = idx / (n * n);
    [wavenumber(i0, n, length), wavenumber(i1, n, length), wavenumber(i2, n, length)]
}

fn to_spectrum(grid: &FieldGrid) -> [Vec<Complex64>; 3] {
    let n = grid.n;
    [0, 1, 2].map(|c| {
        let mut d: Vec<Complex64> = grid.values.iter().map(|v| Complex64::new(v[c], 0.0)).collect();
        fft3(&mut d, n, false);
        d
    })
}

fn from_spectrum(mut spec: [Vec<Complex64>; 3], n: usize) -> Vec<V3> {
    for d in spec.iter_mut() {
        fft3(d, n, true);
    }
    (0..n * n * n).map(|i| [spec[0][i].re, spec[1][i].re, spec[2][i].re]).collect()
}

/// Spectral divergence at the nodes.
pub fn spectral_divergence(grid: &FieldGrid) -> Vec<f64> {
    let n = grid.n;
    let l = grid.length();
    let s = to_spectrum(grid);
    let mut d: Vec<Complex64> = (0..n * n * n)
        .map(|i| {
            let k = kvec(i, n, l);
            Complex64::new(0.0, 1.0) * (s[0][i] * k[0] + s[1][i] * k[1] + s[2][i] * k[2])
        })
        .collect();
    fft3(&mut d, n, true);
    d.iter().map(|v| v.re).collect()
}

/// Spectral curl.
pub fn spectral_curl(grid: &FieldGrid) -> FieldGrid {
    let n = grid.n;
    let l = grid.length();
    let s = to_spectrum(grid);
    let i = Complex64::new(0.0, 1.0);
    let mut out = [vec![Complex64::new(0.0, 0.0); n * n * n], vec![Complex64::new(0.0, 0.0); n * n * n], vec![Complex64::new(0.0, 0.0); n * n * n]];
    for idx in 0..n * n * n {
        let k = kvec(idx, n, l);
        let v = [s[0][idx], s[1][idx], s[2][idx]];
        out[0][idx] = i * (v[2] * k[1] - v[1] * k[2]);
        out[1][idx] = i * (v[0] * k[2] - v[2] * k[0]);
        out[2][idx] = i * (v[1] * k[0] - v[0] * k[1]);
    }
    let values = from_spectrum(out, n);
    FieldGrid { n, spacing: grid.spacing, values, profile: None }
}

/// Divergence-free potential with `curl A = B` and zero mean.
///
/// The torus stands in for decay at infinity, so B must have zero mean; a
/// net flux admits no periodic potential.
pub fn biot_savart(grid: &FieldGrid) -> Result<FieldGrid> {
    let mean = grid.mean();
    let top = grid.max_norm();
    if norm(mean) > 1e-10 * top.max(f64::MIN_POSITIVE) && top > 0.0 {
        return Err(Error::Unsupported(format!("field has nonzero mean {mean:?}; no periodic potential exists")));
    }
    let n = grid.n;
    let l = grid.length();
    let s = to_spectrum(grid);
    let i = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut out = [vec![zero; n * n * n], vec![zero; n * n * n], vec![zero; n * n * n]];
    for idx in 0..n * n * n {
        let k = kvec(idx, n, l);
        let k2 = dot(k, k);
        if k2 == 0.0 {
            continue;
        }
        let b = [s[0][idx], s[1][idx], s[2][idx]];
        // i k x B / |k|^2
        out[0][idx] = i * (b[2] * k[1] - b[1] * k[2]) / k2;
        out[1][idx] = i * (b[0] * k[2] - b[2] * k[0]) / k2;
        out[2][idx] = i * (b[1] * k[0] - b[0] * k[1]) / k2;
    }
    let values = from_spectrum(out, n);
    let tag = grid.profile.as_deref().map(|t| format!("biot-savart:{t}"));
    Ok(FieldGrid { n, spacing: grid.spacing, values, profile: tag })
}

/// `max |curl A - B| / max |B|`.
pub fn curl_residual(a: &FieldGrid, b: &FieldGrid) -> Result<f64> {
    if a.n != b.n || a.spacing != b.spacing {
        return domain("grids differ in shape");
    }
    let c = spectral_curl(a);
    let top = b.max_norm();
    let worst = c.values.iter().zip(&b.values).map(|(u, v)| norm([u[0] - v[0], u[1] - v[1], u[2] - v[2]])).fold(0.0, f64::max);
    Ok(if top > 0.0 { worst / top } else { worst })
}

/// `A_eps(x) = A(eps x)/eps` on an `n_out` grid over the torus of side `L/eps`.
///
/// The nodes `eps x` then fall on an `n_out` grid over the original torus,
/// so the resampling is a trigonometric interpolation of A.
pub fn scale_potential(a: &FieldGrid, eps: f64, n_out: usize) -> Result<FieldGrid> {
    if !(eps > 0.0 && eps <= 1.0) {
        return domain(format!("scale must lie in (0, 1], got {eps}"));
    }
    if n_out > MAX_GRID_N {
        return Err(Error::DimensionTooLarge { dim: n_out, cap: MAX_GRID_N });
    }
    if n_out < 2 {
        return domain("target grid needs at least two points per dimension");
    }
    let n = a.n;
    let s = to_spectrum(a);
    let zero = Complex64::new(0.0, 0.0);
    let keep = n.min(n_out) as i64;
    // Signed mode numbers; a Nyquist mode survives only when the sizes match.
    let modes: Vec<i64> = (0..keep)
        .map(|m| if 2 * m < keep { m } else { m - keep })
        .filter(|m| n == n_out || 2 * m.abs() < keep)
        .collect();
    let wrap = |m: i64, size: usize| -> usize { m.rem_euclid(size as i64) as usize };
    let factor = (n_out * n_out * n_out) as f64 / (n * n * n) as f64;
    let mut out = [vec![zero; n_out.pow(3)], vec![zero; n_out.pow(3)], vec![zero; n_out.pow(3)]];
    for &m0 in &modes {
        for &m1 in &modes {
            for &m2 in &modes {
                let src = (wrap(m0, n) * n + wrap(m1, n)) * n + wrap(m2, n);
                let dst = (wrap(m0, n_out) * n_out + wrap(m1, n_out)) * n_out + wrap(m2, n_out);
                for c in 0..3 {
                    out[c][dst] = s[c][src] * factor;
                }
            }
        }
    }
    let values = from_spectrum(out, n_out).into_iter().map(|v| scale(v, 1.0 / eps)).collect();
    let spacing = a.length() / (eps * n_out as f64);
    let tag = a.profile.as_deref().map(|t| format!("scaled:{t}"));
    FieldGrid::new(n_out, spacing, values, tag)
}

/// `R = x x int_0^1 [B(y) - B(y + t eps x)]/eps t dt`.
pub fn poincare_remainder(profile: &Profile, eps: f64, y: V3, x: V3, cfg: &QuadratureConfig) -> Result<V3> {
    if !(eps > 0.0 && eps.is_finite()) {
        return domain(format!("scale must be positive, got {eps}"));
    }
    let by = profile.field(y);
    let mut v = [0.0; 3];
    for c in 0..3 {
        v[c] = integrate(
            |t| {
                let p = add(y, scale(x, t * eps));
                (by[c] - profile.field(p)[c]) / eps * t
            },
            0.0,
            1.0,
            cfg,
        )?
        .value;
    }
    Ok(cross(x, v))
}

/// Residual of
/// `A(y + x) = grad_x (x . int_0^1 A(y + t x) dt) - x x int_0^1 B(y + t x) t dt`,
/// with the gradient by a five-point difference.
pub fn poincare_gauge_check(profile: &Profile, y: V3, x: V3, cfg: &QuadratureConfig) -> Result<V3> {
    let phi = |x: V3| -> Result<f64> {
        let mut s = 0.0;
        for c in 0..3 {
            s += x[c] * integrate(|t| profile.potential(add(y, scale(x, t)))[c], 0.0, 1.0, cfg)?.value;
        }
        Ok(s)
    };
    let h = 1e-3 * (1.0 + norm(x));
    let mut grad = [0.0; 3];
    for j in 0..3 {
        let shifted = |d: f64| {
            let mut p = x;
            p[j] += d;
            phi(p)
        };
        grad[j] = (8.0 * (shifted(h)? - shifted(-h)?) - (shifted(2.0 * h)? - shifted(-2.0 * h)?)) / (12.0 * h);
    }
    let mut bt = [0.0; 3];
    for c in 0..3 {
        bt[c] = integrate(|t| profile.field(add(y, scale(x, t)))[c] * t, 0.0, 1.0, cfg)?.value;
    }
    let rhs = add(grad, scale(cross(x, bt), -1.0));
    let lhs = profile.potential(add(y, x));
    Ok([lhs[0] - rhs[0], lhs[1] - rhs[1], lhs[2] - rhs[2]])
}

/// `sum_nodes f_pv(e |B(node)|) spacing^3`.
///
/// Nodes sharing a field strength share one evaluation.
pub fn lda_energy(grid: &FieldGrid, e: f64, scheme: &PvScheme, cfg: &QuadratureConfig) -> Result<f64> {
    if !(e > 0.0 && e.is_finite()) {
        return domain(format!("charge must be positive, got {e}"));
    }
    let strengths: Vec<f64> = grid.values.iter().map(|v| e * norm(*v)).collect();
    let mut unique: Vec<u64> = strengths.iter().map(|x| x.to_bits()).collect();
    unique.sort_unstable();
    unique.dedup();
    let vals: Result<Vec<f64>> = unique.par_iter().map(|&bits| f_pv(f64::from_bits(bits), scheme, cfg)).collect();
    let table: HashMap<u64, f64> = unique.into_iter().zip(vals?).collect();
    let sum = crate::quad::neumaier_sum(strengths.iter().map(|x| table[&x.to_bits()]));
    Ok(sum * grid.spacing.powi(3))
}

pub fn write_grid(grid: &FieldGrid) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "magvac-grid {GRID_FORMAT_VERSION}");
    let _ = writeln!(s, "n {}", grid.n);
    let _ = writeln!(s, "spacing {}", grid.spacing);
    let _ = writeln!(s, "profile {}", grid.profile.as_deref().unwrap_or("-"));
    for v in &grid.values {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    s
}

pub fn read_grid(text: &str) -> Result<FieldGrid> {
    let bad = |m: &str| Error::Parse(m.to_string());
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut header = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad(&format!("missing {key} line")))?;
        let rest = line.strip_prefix(key).ok_or_else(|| bad(&format!("expected '{key}', got '{line}'")))?;
        Ok(rest.trim().to_string())
    };
    let version: u32 = header("magvac-grid")?.parse().map_err(|_| bad("bad version"))?;
    if version != GRID_FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported grid version {version}")));
    }
    let n: usize = header("n")?.parse().map_err(|_| bad("bad n"))?;
    let spacing: f64 = header("spacing")?.parse().map_err(|_| bad("bad spacing"))?;
    let tag = header("profile")?;
    let profile = if tag == "-" { None } else { Some(tag) };
    let mut values = Vec::with_capacity(n * n * n);
    for (k, line) in lines.enumerate() {
        let parts: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(&format!("bad number on data line {}", k + 1)))?;
        if parts.len() != 3 {
            return Err(bad(&format!("data line {} needs three values", k + 1)));
        }
        values.push([parts[0], parts[1], parts[2]]);
    }
    FieldGrid::new(n, spacing, values, profile)
}

/// CSV histogram of `|B|` with `bins` equal-width bins.
pub fn histogram_csv(grid: &FieldGrid, bins: usize) -> Result<String> {
    if bins == 0 {
        return domain("need at least one bin");
    }
    let top = grid.max_norm();
    let mut counts = vec![0usize; bins];
    for v in &grid.values {
        let k = if top > 0.0 { ((norm(*v) / top) * bins as f64) as usize } else { 0 };
        counts[k.min(bins - 1)] += 1;
    }
    let width = if top > 0.0 { top / bins as f64 } else { 0.0 };
    let mut s = String::from("lower,upper,count\n");
    for (k, c) in counts.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", k as f64 * width, (k + 1) as f64 * width, c);
    }
    Ok(s)
}
