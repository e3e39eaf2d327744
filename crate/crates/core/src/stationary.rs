//! The radially symmetric stationary solution `(σ_s, p_s, R)`.

use serde::{Deserialize, Serialize};

use crate::bessel::{self, RatioTable};
use crate::error::{Error, Result};

/// Bisection stops once `|f(R)|` is below this value.
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_BISECTION_ITERS: usize = 200;
const BRACKET_LOW: f64 = 1e-6;
const BRACKET_LIMIT: f64 = 1e6;

/// Physical constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Nutrient supply rate in the Robin condition.
    pub beta: f64,
    /// Threshold concentration, in `(0, 1)`.
    pub sigma_tilde: f64,
    /// Cell-to-cell adhesiveness.
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(beta: f64, sigma_tilde: f64, gamma: f64) -> Result<Self> {
        let p = Self {
            beta,
            sigma_tilde,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.sigma_tilde > 0.0 && self.sigma_tilde < 1.0) {
            return Err(Error::InvalidParams(format!(
                "sigma_tilde must lie in (0, 1), got {}",
                self.sigma_tilde
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma must be > 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Left side minus right side of `β P_0(R) / (β + R P_0(R)) = σ̃/3`.
pub fn radius_equation(beta: f64, sigma_tilde: f64, r: f64) -> Result<f64> {
    let p0 = bessel::p0_closed(r)?;
    Ok(beta * p0 / (beta + r * p0) - sigma_tilde / 3.0)
}

/// Unique stationary radius, by bisection on a doubling bracket.
pub fn solve_radius(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let f = |r: f64| radius_equation(params.beta, params.sigma_tilde, r);

    let lo_val = f(BRACKET_LOW)?;
    if lo_val <= 0.0 {
        return Err(Error::Convergence(format!(
            "radius equation already non-positive at R = {BRACKET_LOW} (sigma_tilde = {})",
            params.sigma_tilde
        )));
    }
    let mut lo = BRACKET_LOW;
    let mut hi = 1.0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::Convergence(format!(
                "no sign change of the radius equation below R = {BRACKET_LIMIT}"
            )));
        }
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTION_ITERS {
        mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if v == 0.0 || hi - lo <= 2.0 * f64::EPSILON * mid {
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let residual = f(mid)?.abs();
    if residual > RESIDUAL_TOL {
        return Err(Error::Convergence(format!(
            "bisection stalled with residual {residual:e} at R = {mid}"
        )));
    }
    Ok(mid)
}

fn sigma_s_unchecked(r: f64, big_r: f64, beta: f64) -> Result<f64> {
    let p0 = bessel::p_ratio(0, big_r)?;
    Ok(beta / (beta + big_r * p0) * bessel::profile_ratio(0, r, big_r)?)
}

fn p_s_unchecked(r: f64, big_r: f64, beta: f64, mu: f64, sigma_tilde: f64, gamma: f64) -> Result<f64> {
    let p0 = bessel::p_ratio(0, big_r)?;
    let sigma = sigma_s_unchecked(r, big_r, beta)?;
    Ok(-mu * sigma
        + mu * sigma_tilde * (r * r - big_r * big_r) / 6.0
        + gamma / big_r
        + mu * beta / (beta + big_r * p0))
}

fn check_inside(r: f64, big_r: f64) -> Result<()> {
    if r > 0.0 && r <= big_r {
        Ok(())
    } else {
        Err(Error::Domain(format!("r = {r} outside (0, R = {big_r}]")))
    }
}

/// Nutrient concentration `σ_s(r)`.
pub fn sigma_s_at(r: f64, big_r: f64, beta: f64) -> Result<f64> {
    check_inside(r, big_r)?;
    sigma_s_unchecked(r, big_r, beta)
}

/// Pressure `p_s(r)`.
pub fn p_s_at(r: f64, big_r: f64, beta: f64, mu: f64, sigma_tilde: f64, gamma: f64) -> Result<f64> {
    check_inside(r, big_r)?;
    p_s_unchecked(r, big_r, beta, mu, sigma_tilde, gamma)
}

/// Values and first three radial derivatives of `σ_s` and `p_s` at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryDerivs {
    /// `σ_s, σ_s', σ_s'', σ_s'''` at `R`.
    pub sigma: [f64; 4],
    /// `p_s, p_s', p_s'', p_s'''` at `R`; `p_s'(R)` is zero by construction.
    pub pressure: [f64; 4],
}

/// Boundary derivative block for the equilibrium of radius `big_r` at aggressiveness `mu`.
pub fn boundary_derivs(big_r: f64, params: &ModelParams, mu: f64) -> Result<BoundaryDerivs> {
    let t = RatioTable::new(big_r, 1)?;
    Ok(derivs_from_ratios(big_r, params, mu, t.get(0)?, t.get(1)?))
}

fn derivs_from_ratios(r: f64, params: &ModelParams, mu: f64, p0: f64, p1: f64) -> BoundaryDerivs {
    let beta = params.beta;
    let c = beta * p0 / (beta + r * p0);
    let r2 = r * r;
    BoundaryDerivs {
        sigma: [
            beta / (beta + r * p0),
            c * r,
            c * (1.0 + r2 * p1),
            c * r * (1.0 - 2.0 * p1),
        ],
        pressure: [
            params.gamma / r,
            0.0,
            -mu * c * r2 * p1,
            mu * c * r * (2.0 * p1 - 1.0),
        ],
    }
}

/// Solved stationary radius with the ratios `P_0 … P_3` cached at `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialEquilibrium {
    pub params: ModelParams,
    pub radius: f64,
    /// `|β P_0/(β + R P_0) - σ̃/3|` at the solved radius.
    pub residual: f64,
    /// `P_0(R), P_1(R), P_2(R), P_3(R)`.
    pub ratios: [f64; 4],
}

impl RadialEquilibrium {
    pub fn solve(params: &ModelParams) -> Result<Self> {
        let radius = solve_radius(params)?;
        Self::at_radius(params, radius)
    }

    /// Builds the cached record at a given radius without solving; used for radius sweeps
    /// that do not tie `R` to `σ̃`.
    pub fn at_radius(params: &ModelParams, radius: f64) -> Result<Self> {
        let t = RatioTable::new(radius, 3)?;
        let residual = radius_equation(params.beta, params.sigma_tilde, radius)?.abs();
        Ok(Self {
            params: *params,
            radius,
            residual,
            ratios: [t.get(0)?, t.get(1)?, t.get(2)?, t.get(3)?],
        })
    }

    pub fn p(&self, n: usize) -> f64 {
        self.ratios[n]
    }

    /// `β P_0(R) / (β + R P_0(R))`, which equals `σ̃/3` on a solved equilibrium.
    pub fn flux_coeff(&self) -> f64 {
        let (b, p0) = (self.params.beta, self.ratios[0]);
        b * p0 / (b + self.radius * p0)
    }

    pub fn boundary_derivs(&self, mu: f64) -> BoundaryDerivs {
        derivs_from_ratios(self.radius, &self.params, mu, self.ratios[0], self.ratios[1])
    }

    pub fn sigma_at(&self, r: f64) -> Result<f64> {
        sigma_s_at(r, self.radius, self.params.beta)
    }

    pub fn pressure_at(&self, r: f64, mu: f64) -> Result<f64> {
        let p = &self.params;
        p_s_at(r, self.radius, p.beta, mu, p.sigma_tilde, p.gamma)
    }
}
