//! Thermodynamic-limit formulas: the free Bose gas in `d` dimensions, the
//! variational pressure of the imperfect gas, and the critical inverse
//! temperature.
//!
//! Every integral over `k` is available in two forms: a polylogarithm series
//! (the value we return) and an adaptive radial quadrature used to cross-check
//! it. In the quadrature we integrate over `u = k·sqrt(β/2m)`, which turns the
//! Bose factor into `1/(e^{u²-βα} - 1)` and removes the `α = 0` endpoint
//! singularity of the density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{bose_of_exponent, unit_sphere_area, zeta};

/// `sqrt(2πβ/m)`.
pub fn thermal_wavelength(beta: f64, mass: f64) -> f64 {
    (2.0 * std::f64::consts::PI * beta / mass).sqrt()
}

fn check_common(alpha: f64, beta: f64, mass: f64, dimension: usize) -> Result<()> {
    if !(beta > 0.0 && mass > 0.0 && dimension >= 1) {
        return Err(Error::Domain(format!("need beta > 0, m > 0, d >= 1 (got beta={beta}, m={mass}, d={dimension})")));
    }
    if alpha > 0.0 || alpha.is_nan() {
        return Err(Error::Domain(format!("free-gas quantities need alpha <= 0, got {alpha}")));
    }
    Ok(())
}

/// Free-gas pressure `p(α) = β⁻¹ λ_T^{-d} g_{d/2+1}(e^{βα})`.
pub fn bose_pressure(alpha: f64, beta: f64, mass: f64, dimension: usize) -> Result<f64> {
    check_common(alpha, beta, mass, dimension)?;
    let s = dimension as f64 / 2.0 + 1.0;
    let lt = thermal_wavelength(beta, mass);
    Ok(bose_of_exponent(s, beta * alpha)? / (beta * lt.powi(dimension as i32)))
}

/// Free-gas density `ρ(α) = p'(α) = λ_T^{-d} g_{d/2}(e^{βα})`.
pub fn bose_density(alpha: f64, beta: f64, mass: f64, dimension: usize) -> Result<f64> {
    check_common(alpha, beta, mass, dimension)?;
    if alpha == 0.0 && dimension <= 2 {
        return Err(Error::Domain(format!("the critical density diverges in d = {dimension}")));
    }
    let s = dimension as f64 / 2.0;
    let lt = thermal_wavelength(beta, mass);
    Ok(bose_of_exponent(s, beta * alpha)? / lt.powi(dimension as i32))
}

/// `ρ_c(β) = ρ(0)`; finite only for `d ≥ 3`.
pub fn critical_density(beta: f64, mass: f64, dimension: usize) -> Result<f64> {
    bose_density(0.0, beta, mass, dimension)
}

/// `S_d/(2π)^d · (2m/β)^{d/2}`: converts `∫ u^{d-1} f(u²) du` into `∫ dk/(2π)^d f(βε_k)`.
fn radial_prefactor(beta: f64, mass: f64, dimension: usize) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    unit_sphere_area(dimension) / two_pi.powi(dimension as i32) * (2.0 * mass / beta).powf(dimension as f64 / 2.0)
}

/// `∫_a^b u^{d-1} f(u) du` split at `u = 1` where the integrand changes character.
fn radial_integral<F: Fn(f64) -> f64>(f: F, lower: f64, upper: f64) -> f64 {
    let mut points = vec![lower];
    if lower < 1.0 && upper > 1.0 {
        points.push(1.0);
    }
    points.push(upper);
    points.windows(2).map(|w| quad::integrate(&f, w[0], w[1], 1e-16, 1e-14, 4000).value).sum()
}

/// Upper limit in `u` beyond which the Bose factor is below `e^{-45}`.
fn radial_cut(beta_alpha: f64) -> f64 {
    (45.0 + beta_alpha.max(0.0)).sqrt()
}

/// Quadrature form of [`bose_pressure`].
pub fn bose_pressure_quadrature(alpha: f64, beta: f64, mass: f64, dimension: usize) -> Result<f64> {
    check_common(alpha, beta, mass, dimension)?;
    let ba = beta * alpha;
    let d = dimension as i32;
    let integral = radial_integral(
        |u| {
            if u == 0.0 {
                return 0.0;
            }
            -u.powi(d - 1) * (-(-(u * u - ba)).exp_m1()).ln()
        },
        0.0,
        radial_cut(ba),
    );
    Ok(radial_prefactor(beta, mass, dimension) * integral / beta)
}

/// Quadrature form of [`bose_density`].
pub fn bose_density_quadrature(alpha: f64, beta: f64, mass: f64, dimension: usize) -> Result<f64> {
    check_common(alpha, beta, mass, dimension)?;
    if alpha == 0.0 && dimension <= 2 {
        return Err(Error::Domain(format!("the critical density diverges in d = {dimension}")));
    }
    let ba = beta * alpha;
    let d = dimension as i32;
    let integral = radial_integral(
        |u| {
            let y = u * u - ba;
            if y == 0.0 {
                // Only reached at u = 0, α = 0, where u^{d-1}/y → 0 for d ≥ 3.
                return 0.0;
            }
            u.powi(d - 1) / y.exp_m1()
        },
        0.0,
        radial_cut(ba),
    );
    Ok(radial_prefactor(beta, mass, dimension) * integral)
}

/// `∫ dk/(2π)^d 1/(e^{β(ε_k - shift)} - 1)` over `k_lo ≤ |k| < k_hi`.
///
/// Requires `shift < ε_k` on the whole range.
pub fn shell_density(k_lo: f64, k_hi: f64, shift: f64, beta: f64, mass: f64, dimension: usize) -> Result<f64> {
    let scale = (beta / (2.0 * mass)).sqrt();
    let (u_lo, u_hi) = (k_lo * scale, (k_hi * scale).min(radial_cut(beta * shift)));
    if u_lo * u_lo <= beta * shift && shift != 0.0 {
        return Err(Error::Domain(format!(
            "Bose factor is singular inside the shell (shift {shift} >= lowest energy)"
        )));
    }
    if shift == 0.0 && k_lo == 0.0 && dimension <= 2 {
        return Err(Error::Domain(format!("band density diverges in d = {dimension}")));
    }
    if u_hi <= u_lo {
        return Ok(0.0);
    }
    let bs = beta * shift;
    let d = dimension as i32;
    let integral = radial_integral(
        |u| {
            let y = u * u - bs;
            if y == 0.0 {
                return 0.0;
            }
            u.powi(d - 1) / y.exp_m1()
        },
        u_lo,
        u_hi,
    );
    Ok(radial_prefactor(beta, mass, dimension) * integral)
}

/// Result of the variational problem `inf_{α≤0} p(α) + (μ-α)²/4λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldPressure {
    pub pressure: f64,
    pub alpha_star: f64,
}

/// The imperfect-gas pressure and its minimizer `α*`.
pub fn mf_pressure(mu: f64, lambda: f64, beta: f64, mass: f64, dimension: usize) -> Result<MeanFieldPressure> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("mean-field pressure needs lambda > 0, got {lambda}")));
    }
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite, got {mu}")));
    }
    let objective = |alpha: f64| -> Result<f64> {
        Ok(bose_pressure(alpha, beta, mass, dimension)? + (mu - alpha).powi(2) / (4.0 * lambda))
    };
    if dimension >= 3 {
        let rho_c = critical_density(beta, mass, dimension)?;
        if mu >= 2.0 * lambda * rho_c {
            return Ok(MeanFieldPressure { pressure: objective(0.0)?, alpha_star: 0.0 });
        }
    }
    // F(α) = ρ(α) - (μ-α)/2λ is strictly increasing; find its root on α < 0.
    let f =
        |alpha: f64| -> Result<f64> { Ok(bose_density(alpha, beta, mass, dimension)? - (mu - alpha) / (2.0 * lambda)) };
    let mut hi = if dimension >= 3 { 0.0 } else { -1e-300 };
    if dimension < 3 {
        // g_{d/2} diverges at 0 for d ≤ 2; walk towards zero until F > 0.
        let mut step = -1.0 / beta;
        while f(step)? <= 0.0 {
            step *= 0.5;
            if step > -1e-300 {
                return Err(Error::Bracket("no sign change of F near alpha = 0".into()));
            }
        }
        hi = step;
    }
    let mut width = 1.0 / beta + mu.abs();
    let mut lo = hi - width;
    let mut grow = 0;
    while f(lo)? >= 0.0 {
        width *= 2.0;
        lo = hi - width;
        grow += 1;
        if grow > 200 {
            return Err(Error::Bracket("could not bracket the mean-field alpha*".into()));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * lo.abs().max(1e-300) {
            break;
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok(MeanFieldPressure { pressure: objective(alpha)?, alpha_star: alpha })
}

/// Critical inverse temperature from `ρ = ρ_c(β_c)`, in closed form.
pub fn critical_beta(rho: f64, mass: f64, dimension: usize) -> Result<f64> {
    if dimension < 3 {
        return Err(Error::Domain(format!("no finite critical temperature in d = {dimension}")));
    }
    if !(rho > 0.0 && mass > 0.0) {
        return Err(Error::Domain(format!("need rho > 0 and m > 0, got {rho}, {mass}")));
    }
    let d = dimension as f64;
    Ok(mass / (2.0 * std::f64::consts::PI) * (zeta(d / 2.0)? / rho).powf(2.0 / d))
}

/// Critical inverse temperature by bisection on `ρ_c(β) - ρ`, for cross-checks.
pub fn critical_beta_by_root(rho: f64, mass: f64, dimension: usize) -> Result<f64> {
    if dimension < 3 {
        return Err(Error::Domain(format!("no finite critical temperature in d = {dimension}")));
    }
    let g = |beta: f64| -> Result<f64> { Ok(critical_density(beta, mass, dimension)? - rho) };
    let (mut lo, mut hi) = (1.0, 1.0);
    while g(lo)? <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Bracket("beta_c bracket underflow".into()));
        }
    }
    while g(hi)? >= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Bracket("beta_c bracket overflow".into()));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// How a limit value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    Quadrature,
    Bisection,
    ClosedForm,
}

/// A value tagged with the method used to compute it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub value: f64,
    pub method: Method,
}

/// Limit quantities at one `(α, μ)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitQuantities {
    pub alpha: f64,
    pub mu: f64,
    pub pressure: Tagged,
    pub density: Tagged,
    pub critical_density: Option<Tagged>,
    pub alpha_star: Tagged,
    pub pressure_mf: Tagged,
    pub beta_c: Option<Tagged>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitInputs {
    pub alpha: f64,
    pub mu: f64,
    pub lambda: f64,
    pub beta: f64,
    pub mass: f64,
    pub dimension: usize,
    pub rho: f64,
}

pub fn limit_quantities(inputs: &LimitInputs) -> Result<LimitQuantities> {
    let LimitInputs { alpha, mu, lambda, beta, mass, dimension, rho } = *inputs;
    let mf = mf_pressure(mu, lambda, beta, mass, dimension)?;
    let series = |value| Tagged { value, method: Method::Series };
    Ok(LimitQuantities {
        alpha,
        mu,
        pressure: series(bose_pressure(alpha, beta, mass, dimension)?),
        density: series(bose_density(alpha, beta, mass, dimension)?),
        critical_density: if dimension >= 3 { Some(series(critical_density(beta, mass, dimension)?)) } else { None },
        alpha_star: Tagged { value: mf.alpha_star, method: Method::Bisection },
        pressure_mf: Tagged { value: mf.pressure, method: Method::Series },
        beta_c: if dimension >= 3 {
            Some(Tagged { value: critical_beta(rho, mass, dimension)?, method: Method::ClosedForm })
        } else {
            None
        },
    })
}
