//! Special functions and adaptive quadrature shared by the energy densities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::pvscheme::PvScheme;

const SERIES_SWITCH: f64 = 1e-2;
const FRACTION_SWITCH: f64 = 4.0;
const FRACTION_DEPTH: usize = 26;

/// `x coth x - 1`, checked.
pub fn coth_reduced(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("coth_reduced needs x >= 0, got {x}"));
    }
    Ok(lred(x))
}

/// Tail of Lambert's continued fraction, `x^2/(5 + x^2/(7 + ...))`.
fn lambert_tail(x2: f64) -> f64 {
    let mut t = 0.0;
    for k in (2..FRACTION_DEPTH).rev() {
        t = x2 / ((2 * k + 1) as f64 + t);
    }
    t
}

/// Unchecked `x coth x - 1` for `x >= 0`.
///
/// Degree-8 series below 1e-2, Lambert's continued fraction up to 4 and the
/// exponential form beyond. The continued fraction has no cancellation, which
/// the textbook `x cosh x / sinh x - 1` suffers from until x is of order one.
#[inline]
pub fn lred(x: f64) -> f64 {
    let x2 = x * x;
    if x < SERIES_SWITCH {
        x2 * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 - x2 / 4725.0)))
    } else if x < FRACTION_SWITCH {
        x2 / (3.0 + lambert_tail(x2))
    } else {
        let e = (-2.0 * x).exp();
        x - 1.0 + 2.0 * x * e / (-(-2.0 * x).exp_m1())
    }
}

/// Unchecked `x coth x - 1 - x^2/3`, fused so that no digits cancel.
#[inline]
pub fn lred_sub(x: f64) -> f64 {
    let x2 = x * x;
    if x < SERIES_SWITCH {
        x2 * x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * 2.0 / 93555.0)))
    } else if x < FRACTION_SWITCH {
        let t = lambert_tail(x2);
        -x2 * t / (3.0 * (3.0 + t))
    } else {
        lred(x) - x2 / 3.0
    }
}

/// Tolerances and layout for semi-infinite proper-time integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Proper time around which the log-scale scan is centred. `None` means
    /// `1/m0^2` of the weight in use.
    pub split_point: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rel_tol: 1e-12, abs_tol: 0.0, max_subdivisions: 4000, split_point: None }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadratureConfig { rel_tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return domain(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.abs_tol >= 0.0) {
            return domain(format!("abs_tol must be nonnegative, got {}", self.abs_tol));
        }
        if self.max_subdivisions < 1 {
            return domain("max_subdivisions must be at least 1");
        }
        if let Some(s) = self.split_point {
            if !(s > 0.0 && s.is_finite()) {
                return domain(format!("split_point must be positive, got {s}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Proper-time weight: the regulated combination of a scheme or one mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Pv(PvScheme),
    Single { mass: f64 },
}

impl Weight {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Weight::Pv(scheme) => scheme.weight_unchecked(s),
            Weight::Single { mass } => (-s * mass * mass).exp(),
        }
    }

    /// Power of s with which the weight vanishes at s = 0.
    pub fn small_s_order(&self) -> f64 {
        match self {
            Weight::Pv(_) => 2.0,
            Weight::Single { .. } => 0.0,
        }
    }

    pub fn lightest_mass(&self) -> f64 {
        match self {
            Weight::Pv(scheme) => scheme.masses()[0],
            Weight::Single { mass } => *mass,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Weight::Pv(_) => Ok(()),
            Weight::Single { mass } if *mass > 0.0 && mass.is_finite() => Ok(()),
            Weight::Single { mass } => domain(format!("mass must be positive, got {mass}")),
        }
    }
}

/// `int_0^inf w(s) g(s) s^(-p) ds`.
///
/// `g_order` is the power with which g vanishes at s = 0; together with the
/// weight it fixes the analytic left tail.
pub fn proper_time_integrate<G>(g: G, g_order: f64, p: f64, weight: &Weight, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    G: Fn(f64) -> f64,
{
    weight.validate()?;
    cfg.validate()?;
    let kappa = weight.small_s_order() + g_order - p + 1.0;
    if !(kappa > 0.0) {
        return domain(format!("integrand not integrable at s = 0 (exponent {kappa} <= 0)"));
    }
    let centre = cfg.split_point.unwrap_or_else(|| {
        let m = weight.lightest_mass();
        1.0 / (m * m)
    });
    let h = |s: f64| {
        let w = weight.eval(s);
        if w == 0.0 {
            0.0
        } else {
            w * g(s) * s.powf(-p)
        }
    };
    integrate_half_line(h, kappa, centre, cfg)
}

const SCAN_HALF_WIDTH: f64 = 60.0;
const SCAN_STEP: f64 = 0.5;
const SUPPORT_CUT: f64 = 1e-18;
const MAX_LEFT_EXTENSIONS: usize = 6;

/// `int_0^inf h(s) ds` where `h(s) ~ s^(kappa-1)` as s -> 0 and h decays at
/// least exponentially at large s. Integrates in `u = ln s` over the support
/// found by a coarse scan around `ln centre`.
pub fn integrate_half_line<H>(h: H, kappa: f64, centre: f64, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    H: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !(kappa > 0.0) {
        return domain("small-s exponent must be positive");
    }
    if !(centre > 0.0 && centre.is_finite()) {
        return domain("scan centre must be positive");
    }
    let hu = |u: f64| {
        let s = u.exp();
        let v = h(s);
        if v == 0.0 {
            0.0
        } else {
            v * s
        }
    };
    let uc = centre.ln();
    // Push the left edge out until h follows its small-s power law there.
    let mut left_u = uc - SCAN_HALF_WIDTH;
    for _ in 0..MAX_LEFT_EXTENSIONS {
        let (v0, v1) = (hu(left_u), hu(left_u + SCAN_STEP));
        if v0 == 0.0 || v1 == 0.0 || !(v0.is_finite() && v1.is_finite()) {
            break;
        }
        let slope = (v1 / v0).abs().ln() / SCAN_STEP;
        if (slope - kappa).abs() <= 1e-3 * kappa.max(1.0) {
            break;
        }
        left_u -= SCAN_HALF_WIDTH;
    }
    let npts = ((uc + SCAN_HALF_WIDTH - left_u) / SCAN_STEP).round() as usize + 1;
    let grid: Vec<f64> = (0..npts).map(|k| left_u + SCAN_STEP * k as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| hu(u)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return domain("integrand is not finite on the scan grid");
    }
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: npts });
    }
    let cut = SUPPORT_CUT * peak;
    let first = vals.iter().position(|v| v.abs() > cut).unwrap();
    let last = vals.iter().rposition(|v| v.abs() > cut).unwrap();
    if last + 1 >= npts {
        return Err(Error::Unsupported("integrand does not decay within the scan window".into()));
    }
    let lo = first.saturating_sub(1);
    let hi = last + 1;
    let breaks = &grid[lo..=hi];
    let mut res = integrate_breaks(&hu, breaks, cfg)?;
    // Left tail from the power law; right tail only enters the error.
    let left = vals[lo] / kappa;
    let right = {
        let (a, b) = (vals[hi - 1].abs(), vals[hi].abs());
        if b > 0.0 && a > b {
            b / ((a / b).ln() / SCAN_STEP)
        } else {
            b * SCAN_STEP
        }
    };
    res.value += left;
    res.error += right + if first == 0 { left.abs() * 1e-3 } else { 0.0 };
    res.evaluations += npts;
    Ok(res)
}

/// Adaptive Gauss-Kronrod over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return domain("integration limits must be finite");
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let r = integrate_breaks(&f, &[lo, hi], cfg)?;
    Ok(QuadResult { value: sign * r.value, ..r })
}

/// Adaptive Gauss-Kronrod over consecutive panels `breaks[i]..breaks[i+1]`,
/// followed by a node-doubling check.
pub fn integrate_breaks<F>(f: &F, breaks: &[f64], cfg: &QuadratureConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if breaks.len() < 2 {
        return domain("need at least two breakpoints");
    }
    let mut evals = 0usize;
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let p = Panel::new(f, w[0], w[1])?;
        evals += 21;
        heap.push(p);
    }
    let budget = cfg.max_subdivisions.max(breaks.len() - 1);
    loop {
        let (value, error) = totals(heap.iter());
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target {
            // Node doubling: bisect every panel once and compare.
            let mut halves = Vec::with_capacity(2 * heap.len());
            for p in heap.iter() {
                let m = 0.5 * (p.a + p.b);
                halves.push(Panel::new(f, p.a, m)?);
                halves.push(Panel::new(f, m, p.b)?);
                evals += 42;
            }
            let (doubled, derr) = totals(halves.iter());
            let abs_sum: f64 = halves.iter().map(|p| p.abs_sum).sum();
            let diff = (doubled - value).abs();
            let floor = 64.0 * f64::EPSILON * abs_sum;
            if diff <= target.max(cfg.abs_tol.max(cfg.rel_tol * doubled.abs())) + floor {
                return Ok(QuadResult { value: doubled, error: diff.max(derr), evaluations: evals });
            }
            if halves.len() > budget {
                return Err(Error::Convergence { estimate: doubled, residual: diff });
            }
            heap = halves.into_iter().collect();
            continue;
        }
        if heap.len() >= budget {
            return Err(Error::Convergence { estimate: value, residual: error });
        }
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            return Err(Error::Convergence { estimate: value, residual: error });
        }
        heap.push(Panel::new(f, worst.a, m)?);
        heap.push(Panel::new(f, m, worst.b)?);
        evals += 42;
    }
}

/// Value and error summed in ascending panel order, value compensated.
fn totals<'a, I: Iterator<Item = &'a Panel>>(panels: I) -> (f64, f64) {
    let mut ps: Vec<&Panel> = panels.collect();
    ps.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = neumaier_sum(ps.iter().map(|p| p.value));
    let error = ps.iter().map(|p| p.error).sum();
    (value, error)
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_sum: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
        let (value, error, abs_sum) = gk21(f, a, b);
        if !value.is_finite() {
            return domain(format!("integrand is not finite on [{a}, {b}]"));
        }
        Ok(Panel { a, b, value, error, abs_sum })
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.a.total_cmp(&self.a))
    }
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208863945550,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs_sum = WGK[10] * fc.abs();
    for j in 0..10 {
        let d = h * XGK[j];
        let (f1, f2) = (f(c - d), f(c + d));
        kron += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let err = ((kron - gauss) * h).abs().max(50.0 * f64::EPSILON * abs_sum * h);
    (kron * h, err, abs_sum * h.abs())
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Even-index Bernoulli number `B_2n`, exact and as the nearest double.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliNumber {
    pub index: u32,
    pub exact: BigRational,
    pub value: f64,
}

pub const BERNOULLI_MAX_N: u32 = 64;

fn bernoulli_table() -> &'static Vec<BigRational> {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // sum_{k<=m} C(m+1, k) B_k = 0 for m >= 1
        let top = 2 * BERNOULLI_MAX_N as usize;
        let mut b: Vec<BigRational> = Vec::with_capacity(top + 1);
        b.push(BigRational::one());
        for m in 1..=top {
            let mut binom = BigInt::one();
            let mut acc = BigRational::zero();
            for (k, bk) in b.iter().enumerate() {
                if !bk.is_zero() {
                    acc += BigRational::from_integer(binom.clone()) * bk;
                }
                binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
            }
            b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
        }
        b
    })
}

pub fn bernoulli_even(n: u32) -> Result<BernoulliNumber> {
    if n < 1 || n > BERNOULLI_MAX_N {
        return domain(format!("Bernoulli index n must be in 1..={BERNOULLI_MAX_N}, got {n}"));
    }
    let exact = bernoulli_table()[2 * n as usize].clone();
    let value = exact.to_f64().ok_or_else(|| Error::Domain("Bernoulli number not representable".into()))?;
    Ok(BernoulliNumber { index: 2 * n, exact, value })
}
