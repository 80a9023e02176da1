//! Charge renormalization and the comparison between regulated and physical
//! energies.

use std::f64::consts::PI;

use serde::Serialize;

use crate::ehdensity::f_eh;
use crate::error::{domain, Result};
use crate::pvscheme::{f_pv, PvScheme};
use crate::quad::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenormState {
    pub e: f64,
    pub e_ph: f64,
    pub z3: f64,
    pub scheme: PvScheme,
}

/// `Z3 = 1/(1 + (2 e^2/3 pi) log Lambda)` and `e_ph = sqrt(Z3) e`.
pub fn renormalize(e: f64, scheme: &PvScheme) -> Result<RenormState> {
    if !(e > 0.0 && e.is_finite()) {
        return domain(format!("charge must be positive, got {e}"));
    }
    let z3 = 1.0 / (1.0 + 2.0 * e * e / (3.0 * PI) * scheme.log_lambda());
    Ok(RenormState { e, e_ph: z3.sqrt() * e, z3, scheme: *scheme })
}

/// Physical field `b_ph = b e / e_ph = b / sqrt(Z3)`, so that `e b = e_ph b_ph`.
///
/// The alternative reading `b_ph = sqrt(Z3) b` breaks this product and with it
/// the cancellation of the quadratic terms.
pub fn bph_of(b: f64, state: &RenormState) -> Result<f64> {
    if !(b >= 0.0) {
        return domain(format!("field must be nonnegative, got {b}"));
    }
    Ok(b * state.e / state.e_ph)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyDifference {
    pub b: f64,
    pub b_ph: f64,
    /// `[b^2/8pi + f_pv(e b)] - [b_ph^2/8pi + f_eh(e_ph b_ph)]`.
    pub difference: f64,
    /// `sum_{j=1,2} c_j (m_j/m)^4 f_eh(m^2 e b/m_j^2)`.
    pub identity: f64,
    /// `K |c1| (e_ph b_ph/m)^4 exp(-6 pi (1 - Z3)/e_ph^2)`.
    pub bound: f64,
    pub k: f64,
    /// Magnitude of the vacuum terms; the identity is checked relative to it.
    pub scale: f64,
}

/// Compares the regulated energy at bare charge with the physical one.
///
/// The classical parts differ by `b^2 (1 - 1/Z3)/8pi = -(e b)^2 log Lambda/(12 pi^2)`,
/// which is kept in closed form so that the difference is not swamped by the
/// much larger `b^2/8pi`.
pub fn energy_difference(b: f64, state: &RenormState, cfg: &QuadratureConfig) -> Result<EnergyDifference> {
    let k = bound_constant(state.scheme.masses()[0], cfg)?;
    energy_difference_with_k(b, state, k, cfg)
}

pub fn energy_difference_with_k(b: f64, state: &RenormState, k: f64, cfg: &QuadratureConfig) -> Result<EnergyDifference> {
    let b_ph = bph_of(b, state)?;
    let scheme = &state.scheme;
    let m = scheme.masses()[0];
    let x = state.e * b;
    let classical = -(state.e * b).powi(2) * scheme.log_lambda() / (12.0 * PI * PI);
    let fpv = f_pv(x, scheme, cfg)?;
    let feh = f_eh(state.e_ph * b_ph, m, cfg)?;
    let difference = classical + fpv - feh;
    let mut identity = 0.0;
    let (ms, cs) = (scheme.masses(), scheme.coefficients());
    for j in 1..3 {
        let r = m / ms[j];
        identity += cs[j] / r.powi(4) * f_eh(x * r * r, m, cfg)?;
    }
    let bound = k * cs[1].abs() * (state.e_ph * b_ph / m).powi(4) * (-6.0 * PI * (1.0 - state.z3) / (state.e_ph * state.e_ph)).exp();
    let scale = fpv.abs().max(feh.abs()).max(identity.abs());
    Ok(EnergyDifference { b, b_ph, difference, identity, bound, k, scale })
}

/// `K = sup_x 2 m^4 |f_eh(x)| / x^4`, by golden-section search in log x over
/// `[1e-6, 1e8]`.
pub fn bound_constant(mass: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let ratio = |lx: f64| -> Result<f64> {
        let x = lx.exp();
        Ok(2.0 * mass.powi(4) * f_eh(x, mass, cfg)?.abs() / x.powi(4))
    };
    let (mut a, mut b) = (1e-6f64.ln(), 1e8f64.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ratio(c)?, ratio(d)?);
    let mut best = fc.max(fd).max(ratio(a)?).max(ratio(b)?);
    while b - a > 1e-6 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ratio(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ratio(d)?;
        }
        best = best.max(fc).max(fd);
    }
    Ok(best)
}
