//! Constant-field closed forms: Landau levels, the Pauli heat kernel and its
//! resolvent, localized heat traces and pointwise kernel bounds.
//!
//! The field is `B = b e3` with potential `A = B x x/2` and Pauli operator
//! `(-i grad - A)^2 - sigma.B`, so the spin-up component carries `e^{+bs}`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num::complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::pvscheme::PvScheme;
use crate::quad::{gauss_legendre, integrate_half_line, lred, neumaier_sum, proper_time_integrate, QuadratureConfig, Weight};

pub type Mat2 = Matrix2<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauLevel {
    pub n: u64,
    pub nu: i8,
    /// Transverse energy `(2n + 1 + nu) b`.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauSpectrum {
    pub b: f64,
    pub n_max: u64,
    pub levels: Vec<LandauLevel>,
    /// States per unit area in each level.
    pub degeneracy_density: f64,
}

pub fn landau_spectrum(b: f64, n_max: u64) -> Result<LandauSpectrum> {
    if !(b >= 0.0 && b.is_finite()) {
        return domain(format!("field must be nonnegative, got {b}"));
    }
    let mut levels = Vec::with_capacity(2 * (n_max as usize + 1));
    for n in 0..=n_max {
        for nu in [-1i8, 1] {
            let k = (2 * n) as i64 + 1 + nu as i64;
            levels.push(LandauLevel { n, nu, energy: k as f64 * b });
        }
    }
    Ok(LandauSpectrum { b, n_max, levels, degeneracy_density: b / (2.0 * PI) })
}

/// `sum_nu sum_{n<=n_max} e^{-(2n+1+nu) t}`, which tends to `coth t`.
pub fn landau_partition_sum(t: f64, n_max: u64) -> f64 {
    neumaier_sum((0..=n_max).flat_map(|n| {
        let k = 2.0 * n as f64;
        [(-k * t).exp(), (-(k + 2.0) * t).exp()]
    }))
}

/// Smallest `n_max` with `e^{-2 n_max t} < tol`.
pub fn levels_needed(s: f64, b: f64, tol: f64) -> u64 {
    let t = s * b;
    if t <= 0.0 {
        return 0;
    }
    (-tol.ln() / (2.0 * t)).ceil() as u64 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatDensity {
    pub s: f64,
    pub b: f64,
    pub n_max: u64,
    pub landau_sum: f64,
    pub closed_form: f64,
    pub tail_bound: f64,
    pub truncation_sufficient: bool,
}

/// Level-n share of `coth t - 1/t`: `e^{-2nt} h(t)` with
/// `h(t) = 1 + e^{-2t} - (1 - e^{-2t})/t`.
fn level_weight(t: f64) -> f64 {
    if t < 0.5 {
        // sum_{k>=2} (-2)^k (k-1)/(k+1)! t^k
        let mut sum = 0.0;
        let mut p = 4.0 * t * t / 6.0;
        for k in 2..40 {
            let term = p * (k - 1) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            p *= -2.0 * t / (k + 2) as f64;
        }
        sum
    } else {
        let e = (-2.0 * t).exp();
        1.0 + e + (-2.0 * t).exp_m1() / t
    }
}

/// Relative heat trace per unit volume, by the truncated Landau sum and by
/// `L(sb)/(4 pi^{3/2} s^{3/2})`.
///
/// The free density `2 (4 pi s)^{-3/2}` is distributed over the levels before
/// summing, so the sum never subtracts two large numbers.
pub fn landau_heat_density(s: f64, b: f64, n_max: u64) -> Result<HeatDensity> {
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("proper time must be positive, got {s}"));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return domain(format!("field must be nonnegative, got {b}"));
    }
    let t = s * b;
    let closed_form = lred(t) / (4.0 * PI.powf(1.5) * s.powf(1.5));
    if b == 0.0 {
        return Ok(HeatDensity { s, b, n_max, landau_sum: 0.0, closed_form, tail_bound: 0.0, truncation_sufficient: true });
    }
    let h = level_weight(t);
    let sum = neumaier_sum((0..=n_max).map(|n| (-2.0 * n as f64 * t).exp() * h));
    let pref = b / (2.0 * PI) / (4.0 * PI * s).sqrt();
    let landau_sum = pref * sum;
    let tail_bound = pref * h.abs() * (-2.0 * (n_max + 1) as f64 * t).exp() / (-(-2.0 * t).exp_m1());
    let truncation_sufficient = tail_bound <= 1e-14 * landau_sum.abs();
    Ok(HeatDensity { s, b, n_max, landau_sum, closed_form, tail_bound, truncation_sufficient })
}

/// `G(x) = (pi rho^2/2)^{-3/4} e^{-|x|^2/rho^2}`, normalized in L^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianLocalizer {
    pub rho: f64,
}

impl GaussianLocalizer {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return domain(format!("localization length must be positive, got {rho}"));
        }
        Ok(GaussianLocalizer { rho })
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        (PI * self.rho * self.rho / 2.0).powf(-0.75) * (-r2 / (self.rho * self.rho)).exp()
    }

    /// Tensor Gauss-Legendre rule covering the support of `G^2`.
    fn rule(&self, n: usize) -> Vec<(f64, f64)> {
        let (x, w) = gauss_legendre(n);
        let half = 4.0 * self.rho;
        x.iter().zip(&w).map(|(x, w)| (half * x, half * w)).collect()
    }

    /// `int G^2` by quadrature; the square is separable, so one axis suffices.
    pub fn norm_squared(&self) -> f64 {
        let rule = self.rule(48);
        let r2 = self.rho * self.rho;
        let axis: f64 = rule.iter().map(|&(x, w)| w * (-2.0 * x * x / r2).exp()).sum();
        (PI * r2 / 2.0).powf(-1.5) * axis.powi(3)
    }
}

/// `b e^{bs}/sinh(bs) = 2q`, `b e^{-bs}/sinh(bs) = 2q e^{-2bs}`,
/// `(b/4) coth(bs) = q (1 + e^{-2bs})/4` with `q = b/(1 - e^{-2bs})`.
fn kernel_factors(s: f64, b: f64) -> (f64, f64) {
    let e2 = (-2.0 * b * s).exp();
    let q = if b * s > 0.0 { b / -(-2.0 * b * s).exp_m1() } else { 1.0 / (2.0 * s) };
    (q, e2)
}

fn phase(b: f64, x: [f64; 3], y: [f64; 3]) -> Complex64 {
    Complex64::from_polar(1.0, -0.5 * b * (x[0] * y[1] - x[1] * y[0]))
}

/// Real spin-up and spin-down parts of the heat kernel, without the phase.
fn kernel_parts(s: f64, b: f64, rho2: f64, d3: f64) -> (f64, f64) {
    let (q, e2) = kernel_factors(s, b);
    let common = (-q * (1.0 + e2) / 4.0 * rho2 - d3 * d3 / (4.0 * s)).exp() / (8.0 * PI.powf(1.5) * s.sqrt());
    (2.0 * q * common, 2.0 * q * e2 * common)
}

fn split(x: [f64; 3], y: [f64; 3]) -> (f64, f64, [f64; 3]) {
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    (d[0] * d[0] + d[1] * d[1], d[2], d)
}

/// `e^{-s P}(x, y)` for the constant field `b e3`.
pub fn pauli_heat_kernel(s: f64, b: f64, x: [f64; 3], y: [f64; 3]) -> Result<Mat2> {
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("proper time must be positive, got {s}"));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return domain(format!("field must be nonnegative, got {b}"));
    }
    let (rho2, d3, _) = split(x, y);
    let (up, down) = kernel_parts(s, b, rho2, d3);
    let ph = phase(b, x, y);
    Ok(Mat2::new(ph * up, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), ph * down))
}

/// `tr_2 e^{-sP}(x, x) = s b coth(s b)/(4 pi^{3/2} s^{3/2})`.
pub fn heat_kernel_diagonal_trace(s: f64, b: f64) -> f64 {
    (1.0 + lred(s * b)) / (4.0 * PI.powf(1.5) * s.powf(1.5))
}

/// `int G_rho(x)^2 tr_2 e^{-sP}(x, x) dx` by tensor quadrature.
pub fn localized_heat_trace(s: f64, b: f64, loc: &GaussianLocalizer) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("proper time must be positive, got {s}"));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return domain(format!("field must be nonnegative, got {b}"));
    }
    let rule = loc.rule(40);
    let planes: Vec<f64> = rule
        .par_iter()
        .map(|&(x, wx)| {
            let mut acc = Vec::with_capacity(rule.len() * rule.len());
            for &(y, wy) in &rule {
                for &(z, wz) in &rule {
                    let p = [x, y, z];
                    let k = pauli_heat_kernel(s, b, p, p).map(|m| m.trace().re).unwrap_or(f64::NAN);
                    acc.push(wx * wy * wz * loc.eval(p).powi(2) * k);
                }
            }
            neumaier_sum(acc)
        })
        .collect();
    Ok(neumaier_sum(planes))
}

/// `(P + mu^2)^{-1}(x, y)` as a proper-time integral of the heat kernel.
pub fn pauli_resolvent_kernel(mu: f64, b: f64, x: [f64; 3], y: [f64; 3], cfg: &QuadratureConfig) -> Result<Mat2> {
    let parts = resolvent_parts(mu, b, x, y, cfg)?;
    let ph = phase(b, x, y);
    let z = Complex64::new(0.0, 0.0);
    Ok(Mat2::new(ph * parts.k[0], z, z, ph * parts.k[1]))
}

struct ResolventParts {
    /// `int K_sigma`
    k: [f64; 2],
    /// `int q (1 + e^{-2bs})/2 K_sigma`, i.e. `(b/2) coth(bs)` weighted
    kc: [f64; 2],
    /// `int K_sigma/(2s)`
    ks: [f64; 2],
    d: [f64; 3],
}

fn resolvent_parts(mu: f64, b: f64, x: [f64; 3], y: [f64; 3], cfg: &QuadratureConfig) -> Result<ResolventParts> {
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("mu must be positive, got {mu}"));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return domain(format!("field must be nonnegative, got {b}"));
    }
    let (rho2, d3, d) = split(x, y);
    let r2 = rho2 + d3 * d3;
    if r2 == 0.0 {
        return domain("resolvent kernel is singular at coincident points");
    }
    let w = Weight::Single { mass: mu };
    let mut cfg = *cfg;
    if cfg.split_point.is_none() {
        cfg.split_point = Some(r2.sqrt() / mu);
    }
    let mut out = ResolventParts { k: [0.0; 2], kc: [0.0; 2], ks: [0.0; 2], d };
    for spin in 0..2 {
        let pick = move |s: f64| {
            let (u, v) = kernel_parts(s, b, rho2, d3);
            if spin == 0 {
                u
            } else {
                v
            }
        };
        // The kernel vanishes faster than any power as s -> 0 when x != y.
        out.k[spin] = proper_time_integrate(pick, 8.0, 0.0, &w, &cfg)?.value;
        out.kc[spin] = proper_time_integrate(
            |s| {
                let (q, e2) = kernel_factors(s, b);
                0.5 * q * (1.0 + e2) * pick(s)
            },
            8.0,
            0.0,
            &w,
            &cfg,
        )?
        .value;
        out.ks[spin] = proper_time_integrate(|s| pick(s) / (2.0 * s), 8.0, 0.0, &w, &cfg)?.value;
    }
    Ok(out)
}

/// `(-i d_j - A_j)(P + mu^2)^{-1}(x, y)` for j = 1, 2, 3.
pub fn pauli_resolvent_gradient(mu: f64, b: f64, x: [f64; 3], y: [f64; 3], cfg: &QuadratureConfig) -> Result<[Mat2; 3]> {
    let p = resolvent_parts(mu, b, x, y, cfg)?;
    let ph = phase(b, x, y);
    let z = Complex64::new(0.0, 0.0);
    let d = p.d;
    let entry = |j: usize, spin: usize| -> Complex64 {
        let c = match j {
            0 => Complex64::new(0.5 * b * d[1] * p.k[spin], d[0] * p.kc[spin]),
            1 => Complex64::new(-0.5 * b * d[0] * p.k[spin], d[1] * p.kc[spin]),
            _ => Complex64::new(0.0, d[2] * p.ks[spin]),
        };
        ph * c
    };
    Ok([0, 1, 2].map(|j| Mat2::new(entry(j, 0), z, z, entry(j, 1))))
}

/// Operator norm of a 2x2 matrix.
pub fn sup_norm(m: &Mat2) -> f64 {
    m.svd(false, false).singular_values.max()
}

/// `(1/4pi)(1/r + 2b/mu) e^{-mu r}`.
pub fn resolvent_bound(mu: f64, b: f64, r: f64) -> f64 {
    (1.0 / r + 2.0 * b / mu) * (-mu * r).exp() / (4.0 * PI)
}

/// `(b/2pi + 2/(pi r^2) + 2mu/(pi r) + 5 b^2 r_perp/(4 pi mu)) e^{-mu r}`.
pub fn gradient_bound(mu: f64, b: f64, r: f64, r_perp: f64) -> f64 {
    (b / (2.0 * PI) + 2.0 / (PI * r * r) + 2.0 * mu / (PI * r) + 5.0 * b * b * r_perp / (4.0 * PI * mu)) * (-mu * r).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSample {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub resolvent_norm: f64,
    pub resolvent_bound: f64,
    pub gradient_norm: f64,
    pub gradient_bound: f64,
    /// `(bound - norm)/bound`.
    pub resolvent_margin: f64,
    pub gradient_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelBoundReport {
    pub mu: f64,
    pub b: f64,
    pub samples: Vec<KernelSample>,
    pub min_resolvent_margin: f64,
    pub min_gradient_margin: f64,
    pub violations: Vec<usize>,
    pub passed: bool,
}

/// Evaluates both pointwise bounds at every sample pair.
///
/// A margin counts as nonnegative when it is above `-10 rel_tol`, the
/// accuracy of the quadrature; the free kernel meets the first bound with
/// equality.
pub fn check_kernel_bounds(mu: f64, b: f64, samples: &[([f64; 3], [f64; 3])], cfg: &QuadratureConfig) -> Result<KernelBoundReport> {
    let rows: Result<Vec<KernelSample>> = samples
        .par_iter()
        .map(|&(x, y)| {
            let (rho2, d3, _) = split(x, y);
            let r = (rho2 + d3 * d3).sqrt();
            let k = pauli_resolvent_kernel(mu, b, x, y, cfg)?;
            let g = pauli_resolvent_gradient(mu, b, x, y, cfg)?;
            let resolvent_norm = sup_norm(&k);
            let gradient_norm = g.iter().map(sup_norm).fold(0.0, f64::max);
            let rb = resolvent_bound(mu, b, r);
            let gb = gradient_bound(mu, b, r, rho2.sqrt());
            Ok(KernelSample {
                x,
                y,
                resolvent_norm,
                resolvent_bound: rb,
                gradient_norm,
                gradient_bound: gb,
                resolvent_margin: (rb - resolvent_norm) / rb,
                gradient_margin: (gb - gradient_norm) / gb,
            })
        })
        .collect();
    let samples = rows?;
    let slack = -10.0 * cfg.rel_tol;
    let violations: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| !(s.resolvent_margin >= slack && s.gradient_margin >= slack))
        .map(|(i, _)| i)
        .collect();
    let min_resolvent_margin = samples.iter().map(|s| s.resolvent_margin).fold(f64::INFINITY, f64::min);
    let min_gradient_margin = samples.iter().map(|s| s.gradient_margin).fold(f64::INFINITY, f64::min);
    Ok(KernelBoundReport { mu, b, passed: violations.is_empty(), samples, min_resolvent_margin, min_gradient_margin, violations })
}

/// `(1/4 pi^{3/2}) int_0^inf e^{-s w^2} w(s) L(sb) s^{-3/2} ds`.
pub fn f_pv_omega(omega: f64, b: f64, scheme: &PvScheme, cfg: &QuadratureConfig) -> Result<f64> {
    if !omega.is_finite() {
        return domain("frequency must be finite");
    }
    if !(b >= 0.0 && b.is_finite()) {
        return domain(format!("field must be nonnegative, got {b}"));
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    let w2 = omega * omega;
    let r = proper_time_integrate(|s| (-s * w2).exp() * lred(s * b), 2.0, 1.5, &Weight::Pv(*scheme), cfg)?;
    Ok(r.value / (4.0 * PI.powf(1.5)))
}

/// `f_pv(b) = (1/pi) int_R f_pv_omega(w) w^2 dw`, by nested quadrature.
pub fn f_pv_via_omega(b: f64, scheme: &PvScheme, cfg: &QuadratureConfig) -> Result<f64> {
    if b == 0.0 {
        return Ok(0.0);
    }
    let inner = *cfg;
    let h = |w: f64| f_pv_omega(w, b, scheme, &inner).map(|f| f * w * w).unwrap_or(f64::NAN);
    let m = scheme.masses()[0];
    let r = integrate_half_line(h, 3.0, m.max(b.sqrt()), cfg)?;
    Ok(2.0 * r.value / PI)
}
