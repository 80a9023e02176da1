//! Renormalized Euler-Heisenberg density, asymptotics and its Taylor series.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num::{BigInt, BigRational, ToPrimitive};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quad::{bernoulli_even, lred_sub, proper_time_integrate, QuadResult, QuadratureConfig, Weight};

/// `(1/8 pi^2) int_0^inf e^{-m^2 s} (s x coth(s x) - 1 - (s x)^2/3) s^-3 ds`.
///
/// Negative, concave and decreasing in x; `-x^4/(360 pi^2 m^4)` for weak
/// fields and `-(x^2/24 pi^2) log(x/m^2)` to leading order for strong ones.
pub fn f_eh(x: f64, mass: f64, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(f_eh_detailed(x, mass, cfg)?.value)
}

pub fn f_eh_detailed(x: f64, mass: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    if !(x >= 0.0) {
        return domain(format!("field strength must be nonnegative, got {x}"));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return domain(format!("mass must be positive, got {mass}"));
    }
    if x == 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let r = proper_time_integrate(|s| lred_sub(s * x), 4.0, 3.0, &Weight::Single { mass }, cfg)?;
    let k = 1.0 / (8.0 * PI * PI);
    Ok(QuadResult { value: k * r.value, error: k * r.error, evaluations: r.evaluations })
}

/// Derivative in x, from the s-differentiated integrand.
///
/// `d/dx [L(sx) - (sx)^2/3] = s (coth(sx) - sx/sinh^2(sx) - 2sx/3)`.
pub fn f_eh_derivative(x: f64, mass: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("field strength must be positive, got {x}"));
    }
    let dl = |t: f64| -> f64 {
        if t < 1.0 {
            let t2 = t * t;
            let c = derivative_series();
            let mut acc = 0.0;
            for &ck in c.iter().rev() {
                acc = acc * t2 + ck;
            }
            acc * t * t2
        } else {
            let sh = t.sinh();
            1.0 / t.tanh() - t / (sh * sh) - 2.0 * t / 3.0
        }
    };
    let r = proper_time_integrate(|s| s * dl(s * x), 4.0, 3.0, &Weight::Single { mass }, cfg)?;
    Ok(r.value / (8.0 * PI * PI))
}

/// Coefficients of `d/dt [t coth t - 1 - t^2/3] = t^3 sum_k c_k t^(2k)`,
/// `c_k = 2^(2n) B_2n / (2n-1)!` with `n = k + 2`. Converges for `|t| < pi`.
fn derivative_series() -> &'static [f64] {
    static C: OnceLock<Vec<f64>> = OnceLock::new();
    C.get_or_init(|| {
        let mut fact = 6.0f64; // (2n-1)! at n = 2
        let mut out = Vec::new();
        for n in 2u32..=24 {
            if n > 2 {
                let k = 2 * n as u64;
                fact *= ((k - 2) * (k - 1)) as f64;
            }
            let b = bernoulli_even(n).map(|b| b.value).unwrap_or(0.0);
            out.push(4f64.powi(n as i32) * b / fact);
        }
        out
    })
}

/// Restricted evaluator for orthogonal fields with `|E| < |B|`.
pub fn f_eh_orthogonal(xe: f64, xb: f64, mass: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(xe >= 0.0) {
        return domain(format!("|E| must be nonnegative, got {xe}"));
    }
    if !(xb > xe) {
        return Err(Error::Unsupported(format!(
            "need |E| < |B| (got {xe} and {xb}); the electric regime is unstable"
        )));
    }
    let x = ((xb - xe) * (xb + xe)).sqrt();
    f_eh(x, mass, cfg)
}

/// Vector form; rejects fields that are not orthogonal.
pub fn f_eh_fields(e: [f64; 3], b: [f64; 3], mass: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let dot = e[0] * b[0] + e[1] * b[1] + e[2] * b[2];
    let ne = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dot.abs() > 1e-12 * ne * nb {
        return Err(Error::Unsupported("E.B != 0 is outside the supported regime".into()));
    }
    f_eh_orthogonal(ne, nb, mass, cfg)
}

/// Weak-field Taylor coefficients of f_eh in powers of x.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EhSeries {
    pub mass: f64,
    /// `(2n, coefficient of x^(2n))` for n = 2, 3, ...
    pub coefficients: Vec<(u32, f64)>,
}

impl EhSeries {
    pub fn coefficient(&self, order: u32) -> Option<f64> {
        self.coefficients.iter().find(|(o, _)| *o == order).map(|(_, c)| *c)
    }
}

/// Coefficients `(m^4/8 pi^2) B_2n / (2n(2n-1)(2n-2)) (2/m^2)^(2n)` for
/// `2 <= n <= n_max`.
pub fn taylor_series(n_max: u32, mass: f64) -> Result<EhSeries> {
    if !(2..=64).contains(&n_max) {
        return domain(format!("n_max must lie in 2..=64, got {n_max}"));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return domain(format!("mass must be positive, got {mass}"));
    }
    let mut coefficients = Vec::new();
    let m2 = mass * mass;
    for n in 2..=n_max {
        let b = bernoulli_even(n)?;
        let k = 2 * n as i64;
        // exact rational part B_2n 2^(2n) / (2n(2n-1)(2n-2))
        let denom = BigInt::from(k * (k - 1) * (k - 2));
        let rat = b.exact * BigRational::from_integer(BigInt::from(2).pow(2 * n)) / BigRational::from_integer(denom);
        let r = rat.to_f64().ok_or_else(|| Error::Domain("coefficient overflow".into()))?;
        let c = r * m2 * m2 / m2.powi(2 * n as i32) / (8.0 * PI * PI);
        coefficients.push((2 * n, c));
    }
    Ok(EhSeries { mass, coefficients })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub value: f64,
    /// Highest power of x kept.
    pub order: u32,
    /// Magnitude of the first omitted term.
    pub error_estimate: f64,
}

/// Sums the divergent series up to just before its smallest term.
pub fn optimal_truncation_eval(x: f64, mass: f64, n_max: u32) -> Result<Truncation> {
    if !(x >= 0.0) {
        return domain(format!("field strength must be nonnegative, got {x}"));
    }
    if x > 0.3 * mass * mass {
        return Err(Error::Unsupported(format!("x = {x} exceeds the asymptotic regime 0.3 m^2")));
    }
    let series = taylor_series(n_max, mass)?;
    if x == 0.0 {
        return Ok(Truncation { value: 0.0, order: 4, error_estimate: 0.0 });
    }
    let terms: Vec<f64> = series.coefficients.iter().map(|&(o, c)| c * x.powi(o as i32)).collect();
    let smallest = terms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap();
    // At least the leading term is kept.
    let keep = smallest.max(1);
    let value = terms[..keep].iter().rev().sum();
    let order = series.coefficients[keep - 1].0;
    let error_estimate = terms.get(keep).map(|t| t.abs()).unwrap_or(0.0);
    Ok(Truncation { value, order, error_estimate })
}
