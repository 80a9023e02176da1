//! Pauli-Villars coefficients, proper-time weights and the regulated density.

use std::f64::consts::PI;

use serde::Serialize;

use crate::ehdensity::f_eh;
use crate::error::{domain, Result};
use crate::quad::{lred, proper_time_integrate, QuadResult, QuadratureConfig, Weight};

/// Three masses `m0 < m1 < m2` with coefficients obeying
/// `sum c_j = 0` and `sum c_j m_j^2 = 0`, `c0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PvScheme {
    m: [f64; 3],
    c: [f64; 3],
    log_lambda: f64,
}

/// Builds the scheme for the given masses.
pub fn make_scheme(m0: f64, m1: f64, m2: f64) -> Result<PvScheme> {
    PvScheme::new(m0, m1, m2)
}

impl PvScheme {
    pub fn new(m0: f64, m1: f64, m2: f64) -> Result<PvScheme> {
        if !(m0 > 0.0 && m0 < m1 && m1 < m2 && m2.is_finite()) {
            return domain(format!("masses must satisfy 0 < m0 < m1 < m2, got ({m0}, {m1}, {m2})"));
        }
        let (s0, s1, s2) = (m0 * m0, m1 * m1, m2 * m2);
        let c1 = -(s2 - s0) / (s2 - s1);
        let c2 = (s1 - s0) / (s2 - s1);
        let c = [1.0, c1, c2];
        let log_lambda = -(c1 * (m1 / m0).ln() + c2 * (m2 / m0).ln()) - (1.0 + c1 + c2) * m0.ln();
        Ok(PvScheme { m: [m0, m1, m2], c, log_lambda })
    }

    pub fn masses(&self) -> [f64; 3] {
        self.m
    }

    pub fn coefficients(&self) -> [f64; 3] {
        self.c
    }

    /// `log Lambda = -sum c_j log m_j`.
    pub fn log_lambda(&self) -> f64 {
        self.log_lambda
    }

    /// `(sum_j c_j, sum_j c_j m_j^2)`, both zero up to rounding.
    pub fn sum_rules(&self) -> (f64, f64) {
        let s0 = self.c.iter().sum();
        let s1 = self.c.iter().zip(&self.m).map(|(c, m)| c * m * m).sum();
        (s0, s1)
    }

    /// Same ratios with every mass multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<PvScheme> {
        PvScheme::new(self.m[0] * lambda, self.m[1] * lambda, self.m[2] * lambda)
    }

    /// `sum_j c_j f(m_j^2)`.
    pub fn combine<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.c.iter().zip(&self.m).map(|(c, m)| c * f(m * m)).sum()
    }

    /// Weight without the domain check.
    ///
    /// For small s the sum rules let each exponential be replaced by
    /// `e^{-t} - 1 + t`, evaluated by its series when t is small. Past
    /// `s m0^2 = 1` the plain sum is used, since the rounding left in the
    /// linear terms would otherwise never decay.
    pub fn weight_unchecked(&self, s: f64) -> f64 {
        if s * self.m[0] * self.m[0] < 1.0 {
            self.combine(|m2| phi(s * m2))
        } else {
            self.combine(|m2| (-s * m2).exp())
        }
    }
}

fn phi(t: f64) -> f64 {
    if t < 0.1 {
        // t^2/2 - t^3/6 + ... to t^12
        let mut term = t * t / 2.0;
        let mut sum = term;
        for k in 3..=12 {
            term *= -t / k as f64;
            sum += term;
        }
        sum
    } else {
        (-t).exp_m1() + t
    }
}

/// `sum_j c_j e^{-s m_j^2}`.
pub fn pv_weight(s: f64, scheme: &PvScheme) -> Result<f64> {
    if !(s >= 0.0) {
        return domain(format!("proper time must be nonnegative, got {s}"));
    }
    Ok(scheme.weight_unchecked(s))
}

/// `sum_j c_j / (x + m_j^2)`.
///
/// With both sum rules the partial fractions collapse to
/// `prod_k m_k^2 * (sum_j c_j / m_j^2) / prod_k (x + m_k^2)`.
pub fn pv_resolvent_weight(x: f64, scheme: &PvScheme) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("argument must be nonnegative, got {x}"));
    }
    let [m0, m1, m2] = scheme.m;
    let (s0, s1, s2) = (m0 * m0, m1 * m1, m2 * m2);
    let inv: f64 = scheme.combine(|m2| 1.0 / m2);
    Ok(s0 * s1 * s2 * inv / ((x + s0) * (x + s1) * (x + s2)))
}

/// The same quantity as `sum_j c_j (m_j^2 - m_0^2)^2 / ((x + m_j^2)(x + m_0^2)^2)`.
pub fn pv_resolvent_identity(x: f64, scheme: &PvScheme) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("argument must be nonnegative, got {x}"));
    }
    let s0 = scheme.m[0] * scheme.m[0];
    Ok(scheme.combine(|m2| (m2 - s0) * (m2 - s0) / ((x + m2) * (x + s0) * (x + s0))))
}

/// Plain `sum_j c_j / (x + m_j^2)`.
pub fn pv_resolvent_direct(x: f64, scheme: &PvScheme) -> f64 {
    scheme.combine(|m2| 1.0 / (x + m2))
}

/// `lim_{x->0} f_pv(x)/x^2 = log Lambda / (12 pi^2)`.
pub fn weak_field_coefficient(scheme: &PvScheme) -> f64 {
    scheme.log_lambda / (12.0 * PI * PI)
}

/// `lim_{x->inf} f_pv(x)/x = (1/8 pi^2) sum_j c_j m_j^2 log m_j^2`.
pub fn strong_field_coefficient(scheme: &PvScheme) -> f64 {
    scheme.combine(|m2| m2 * m2.ln()) / (8.0 * PI * PI)
}

/// Regulated vacuum energy density
/// `(1/8 pi^2) int_0^inf w(s) (s x coth(s x) - 1) s^-3 ds`.
pub fn f_pv(x: f64, scheme: &PvScheme, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(f_pv_detailed(x, scheme, cfg)?.value)
}

pub fn f_pv_detailed(x: f64, scheme: &PvScheme, cfg: &QuadratureConfig) -> Result<QuadResult> {
    if !(x >= 0.0) {
        return domain(format!("field strength must be nonnegative, got {x}"));
    }
    if x == 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let r = proper_time_integrate(|s| lred(s * x), 2.0, 3.0, &Weight::Pv(*scheme), cfg)?;
    let k = 1.0 / (8.0 * PI * PI);
    Ok(QuadResult { value: k * r.value, error: k * r.error, evaluations: r.evaluations })
}

/// Terms of the decomposition of `f_pv` into unregulated densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationCheck {
    pub x: f64,
    pub f_pv: f64,
    /// `f_eh(x)`, `c1 (m1/m)^4 f_eh(m^2 x/m1^2)`, `c2 (m2/m)^4 f_eh(m^2 x/m2^2)`.
    pub eh_terms: [f64; 3],
    pub quadratic: f64,
    pub residual: f64,
    /// Largest magnitude among the terms.
    pub scale: f64,
}

/// Residual of
/// `f_pv(x) = f_eh(x) + sum_{j=1,2} c_j (m_j/m)^4 f_eh(m^2 x/m_j^2) + q x^2`
/// where f_eh is taken at the physical mass `m = m0`.
///
/// The quadratic coefficient comes from the Frullani integral
/// `int w(s) ds/s = 2 log Lambda`, giving `q = log Lambda/(12 pi^2)`; a
/// written form with `log Lambda/(24 pi^2)` is off by a factor two and
/// contradicts the weak-field limit of `f_pv`.
pub fn relation_residual(x: f64, scheme: &PvScheme, cfg: &QuadratureConfig) -> Result<RelationCheck> {
    if !(x >= 0.0) {
        return domain(format!("field strength must be nonnegative, got {x}"));
    }
    let m = scheme.m[0];
    let fpv = f_pv(x, scheme, cfg)?;
    let mut eh_terms = [0.0; 3];
    for j in 0..3 {
        let r = m / scheme.m[j];
        let scale = scheme.c[j] / r.powi(4);
        eh_terms[j] = scale * f_eh(x * r * r, m, cfg)?;
    }
    let quadratic = weak_field_coefficient(scheme) * x * x;
    let residual = fpv - (eh_terms.iter().sum::<f64>() + quadratic);
    let scale = [fpv, quadratic, eh_terms[0], eh_terms[1], eh_terms[2]].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(RelationCheck { x, f_pv: fpv, eh_terms, quadratic, residual, scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_branches_meet() {
        let a = phi(0.1 * (1.0 - 1e-15));
        let b = phi(0.1);
        assert!(((a - b) / b).abs() < 1e-13);
    }

    #[test]
    fn collapsed_resolvent_matches_direct_sum() {
        let s = PvScheme::new(1.0, 2.0, 3.0).unwrap();
        for &x in &[0.0, 0.5, 3.0] {
            let a = pv_resolvent_weight(x, &s).unwrap();
            let b = pv_resolvent_direct(x, &s);
            assert!(((a - b) / a).abs() < 1e-13);
        }
    }
}
