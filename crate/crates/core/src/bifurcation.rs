//! Bifurcation values `μ_n`, eigenvalue coefficients `B_n`, the first- and second-order
//! boundary data along the `n = 2` branch, and the slope `μ_2'(0)`.
//!
//! Everything is evaluated from a [`RadialEquilibrium`], which caches `P_0 … P_3` at the
//! stationary radius. The second-order bracket is computed two ways: by assembling the
//! boundary terms one at a time, and from the compact `E_1 R β² + E_2 β + E_3` form.

use serde::Serialize;

use crate::bessel;
use crate::certificates::{self, ECoeffs};
use crate::error::{Error, Result};
use crate::harmonics;
use crate::stationary::RadialEquilibrium;

/// Relative tolerance for every two-path comparison in this module.
pub const TWO_PATH_TOL: f64 = 1e-10;

/// `⟨Y_20 Y_20, Y_20⟩` in closed form.
pub fn y20_cubed() -> f64 {
    (5.0 / std::f64::consts::PI).sqrt() / 7.0
}

/// The two triple products that enter the second-order boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleConstants {
    /// `⟨Y_20², Y_20⟩`.
    pub plain: f64,
    /// `⟨(∂_θ Y_20)², Y_20⟩`.
    pub deriv: f64,
}

impl TripleConstants {
    pub fn closed() -> Self {
        let c = y20_cubed();
        Self { plain: c, deriv: 3.0 * c }
    }

    /// Both constants by surface quadrature on the default grid.
    pub fn from_quadrature() -> Self {
        let grid = harmonics::SphereGrid::default();
        let plain = grid.integrate(|t, _| harmonics::theta_part(2, 0, t).powi(3));
        let deriv = grid.integrate(|t, _| harmonics::theta_part_dtheta(2, 0, t).powi(2) * harmonics::theta_part(2, 0, t));
        Self { plain, deriv }
    }
}

/// `μ_n`, `B_n` for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationData {
    pub n: usize,
    pub mu_n: f64,
    pub b_n: f64,
}

fn a_n(eq: &RadialEquilibrium, n: usize, pn: f64) -> f64 {
    eq.params.beta + n as f64 / eq.radius + eq.radius * pn
}

/// Bifurcation value `μ_n` for `n ≥ 2`.
pub fn mu_n(eq: &RadialEquilibrium, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("mu_n needs n >= 2, got {n}")));
    }
    let (r, p) = (eq.radius, &eq.params);
    let pn = if n <= 3 { eq.p(n) } else { bessel::p_ratio(n, r)? };
    let nf = n as f64;
    let br = p.beta * r;
    let denom = (nf + br) * eq.p(1) - (1.0 + br) * pn;
    if !(denom > 0.0) {
        return Err(Error::Degenerate(format!(
            "mu_{n} denominator {denom:e} is not positive at R = {r}, beta = {}",
            p.beta
        )));
    }
    let pref = p.gamma * 3.0 * nf * (nf - 1.0) * (nf + 2.0) / (2.0 * p.sigma_tilde * r.powi(4));
    Ok(pref * a_n(eq, n, pn) / denom)
}

/// `μ_2` after eliminating `σ̃` through the radius equation.
pub fn mu2_alt(eq: &RadialEquilibrium) -> Result<f64> {
    let (r, p) = (eq.radius, &eq.params);
    let (p0, p1, p2) = (eq.p(0), eq.p(1), eq.p(2));
    let a1 = a_n(eq, 1, p1);
    let a2 = a_n(eq, 2, p2);
    let denom = a2 * p1 - a1 * p2;
    if !(denom > 0.0) {
        return Err(Error::Degenerate(format!("mu_2 denominator {denom:e} is not positive")));
    }
    Ok(p.gamma * 4.0 / r.powi(5) * (p.beta + r * p0) / (p.beta * p0) * a2 / denom)
}

/// Coefficient `B_n` in `H_R̃(0, μ)[Y_nm] = B_n (μ_n - μ) Y_nm`.
///
/// `mu_n` is ignored for `n ≤ 1`.
pub fn b_n(eq: &RadialEquilibrium, n: usize, mu_n: f64) -> f64 {
    let (r, p) = (eq.radius, &eq.params);
    match n {
        0 => {
            let p0 = eq.p(0);
            -(p.sigma_tilde * r / 3.0) * (p.beta * r * (p0 - eq.p(1)) + p0) / (p.beta + r * p0)
        }
        1 => 0.0,
        _ => {
            let nf = n as f64;
            p.gamma * nf * (nf - 1.0) * (nf + 2.0) / (2.0 * r.powi(3) * mu_n)
        }
    }
}

pub fn bifurcation_data(eq: &RadialEquilibrium, n: usize) -> Result<BifurcationData> {
    let mu = mu_n(eq, n)?;
    Ok(BifurcationData { n, mu_n: mu, b_n: b_n(eq, n, mu) })
}

/// One eigenvalue of `-H_R̃(0, μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub n: usize,
    /// `None` for the translation modes, which have no bifurcation value.
    pub mu_n: Option<f64>,
    pub b_n: f64,
    /// `λ_n = B_n (μ - μ_n)`.
    pub lambda: f64,
}

/// Eigenvalues of `-H_R̃(0, μ)` for `n = 1..=n_max`. The radial mode `n = 0` is left out.
pub fn spectrum_neg_h(eq: &RadialEquilibrium, mu: f64, n_max: usize) -> Result<Vec<SpectrumEntry>> {
    (1..=n_max)
        .map(|n| {
            if n == 1 {
                return Ok(SpectrumEntry { n, mu_n: None, b_n: 0.0, lambda: 0.0 });
            }
            let d = bifurcation_data(eq, n)?;
            Ok(SpectrumEntry { n, mu_n: Some(d.mu_n), b_n: d.b_n, lambda: d.b_n * (mu - d.mu_n) })
        })
        .collect()
}

/// First-order correction `(σ_1, p_1)` along `Y_20`, with its boundary data at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrderProfile {
    pub radius: f64,
    pub mu: f64,
    /// `β P_0 / (β + R P_0)`.
    pub c: f64,
    /// `(β + 1/R + R P_1) / (β + 2/R + R P_2)`.
    pub k: f64,
    /// `σ_1, ∂_r σ_1, ∂_r² σ_1` at `R`, as multiples of `Y_20`.
    pub sigma: [f64; 3],
    /// Coefficient of `∂_θ Y_20` in `∂_θ σ_1` at `R`.
    pub sigma_theta: f64,
    /// Coefficient of `(r/R)² Y_20` in `p_1 + μ σ_1`.
    pub q: f64,
    /// `∂_r p_1, ∂_r² p_1` at `R`.
    pub pressure: [f64; 2],
    /// Coefficient of `∂_θ Y_20` in `∂_θ p_1` at `R`.
    pub pressure_theta: f64,
}

pub fn first_order_profile(eq: &RadialEquilibrium, mu: f64) -> FirstOrderProfile {
    let (r, p) = (eq.radius, &eq.params);
    let p2 = eq.p(2);
    let c = eq.flux_coeff();
    let k = a_n(eq, 1, eq.p(1)) / a_n(eq, 2, p2);
    let ck = c * k;
    let sigma = [
        -ck * r,
        -ck * (2.0 + r * r * p2),
        -ck * r * (2.0 / (r * r) + 1.0 - 2.0 * p2),
    ];
    let q = 2.0 * p.gamma / (r * r) - mu * ck * r;
    // The `(r/R)²` part contributes `2q/R`, `2q/R²` to the first two radial derivatives.
    let pressure = [-mu * sigma[1] + 2.0 * q / r, -mu * sigma[2] + 2.0 * q / (r * r)];
    FirstOrderProfile {
        radius: r,
        mu,
        c,
        k,
        sigma,
        sigma_theta: sigma[0],
        q,
        pressure,
        pressure_theta: -mu * sigma[0] + q,
    }
}

impl FirstOrderProfile {
    /// Radial coefficient of `σ_1` at `0 < r ≤ R`.
    pub fn sigma_at(&self, r: f64) -> Result<f64> {
        Ok(self.sigma[0] * bessel::radial_profile(2, r, self.radius)?)
    }

    /// Radial coefficient of `p_1` at `0 < r ≤ R`.
    pub fn pressure_at(&self, r: f64) -> Result<f64> {
        let s = r / self.radius;
        Ok(-self.mu * self.sigma_at(r)? + self.q * s * s)
    }
}

/// The coefficients `D_1, D_2` of the `Y_20` component of `(σ_2, p_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DCoeffs {
    pub d1: f64,
    pub d2: f64,
}

/// `D_1`, `D_2` from their closed forms.
pub fn d_coeffs(eq: &RadialEquilibrium, mu: f64) -> DCoeffs {
    let (r, p) = (eq.radius, &eq.params);
    let (p1, p2) = (eq.p(1), eq.p(2));
    let beta = p.beta;
    let c = eq.flux_coeff();
    let a1 = a_n(eq, 1, p1);
    let a2 = a_n(eq, 2, p2);
    let cst = y20_cubed();
    let r2 = r * r;
    let outer = -0.5 * (r * (1.0 - 2.0 * p1) + beta * (1.0 + r2 * p1) - 3.0 / r) * a2;
    let inner = (-1.0 / r + r * (1.0 - 2.0 * p2) + beta * (2.0 + r2 * p2)) * a1;
    let d1 = cst * c / (a2 * a2) * (outer + inner);
    let d2 = mu * d1
        + cst * (-9.0 * p.gamma / r.powi(3) + 0.5 * mu * c * r2 * p1 - mu * c * a1 / a2 * r2 * p2);
    DCoeffs { d1, d2 }
}

/// Intermediate quantities of the assembled second-order computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondOrderAssembly {
    /// `⟨(∂_r σ_2 + β σ_2)|_R, Y_20⟩`.
    pub robin_rhs: f64,
    pub d: DCoeffs,
    /// `⟨p_2|_R, Y_20⟩`.
    pub p2_boundary: f64,
    /// `⟨∂_r p_2|_R, Y_20⟩`.
    pub dr_p2: f64,
}

/// Builds `D_1, D_2` and `⟨∂_r p_2, Y_20⟩` from the boundary conditions of `(σ_2, p_2)`.
pub fn second_order_assembly(eq: &RadialEquilibrium, mu: f64, k: &TripleConstants) -> SecondOrderAssembly {
    let (r, p) = (eq.radius, &eq.params);
    let beta = p.beta;
    let r2 = r * r;
    let s = eq.boundary_derivs(mu);
    let f = first_order_profile(eq, mu);
    let a2 = a_n(eq, 2, eq.p(2));

    let robin_rhs = -0.5 * (s.sigma[3] + beta * s.sigma[2]) * k.plain
        + s.sigma[1] / (2.0 * r2) * k.deriv
        - (f.sigma[2] + beta * f.sigma[1]) * k.plain
        + f.sigma_theta / r2 * k.deriv;
    let d1 = robin_rhs / a2;

    // Δ_ω Y_20 = -6 Y_20 on the curvature term.
    let p2_boundary = p.gamma / r.powi(3) * (1.0 - 6.0) * k.plain
        - 0.5 * s.pressure[2] * k.plain
        - f.pressure[0] * k.plain;
    let d2 = mu * d1 + p2_boundary;
    let dr_p2 = -mu * d1 * (2.0 / r + r * eq.p(2)) + d2 * 2.0 / r;
    SecondOrderAssembly { robin_rhs, d: DCoeffs { d1, d2 }, p2_boundary, dr_p2 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BracketMethod {
    Assembly,
    Compact,
}

/// `⟨½ H_R̃R̃(0, μ)[Y_20, Y_20], Y_20⟩`.
///
/// The assembly path is valid for any `μ`; the compact path substitutes `μ = μ_2` while
/// simplifying and therefore only agrees with it at `μ_2`.
pub fn bracket_hrr(eq: &RadialEquilibrium, mu: f64, method: BracketMethod, k: &TripleConstants) -> Result<f64> {
    let r = eq.radius;
    match method {
        BracketMethod::Assembly => {
            let s = eq.boundary_derivs(mu);
            let f = first_order_profile(eq, mu);
            let second = second_order_assembly(eq, mu, k);
            Ok(0.5 * s.pressure[3] * k.plain + f.pressure[1] * k.plain
                - f.pressure_theta / (r * r) * k.deriv
                + second.dr_p2)
        }
        BracketMethod::Compact => {
            let e = certificates::e_coeffs(r)?;
            let beta = eq.params.beta;
            let a2 = a_n(eq, 2, eq.p(2));
            Ok(k.plain * mu * eq.flux_coeff() / (a2 * a2) * e.combine(r, beta))
        }
    }
}

/// Everything needed to certify the sign of `μ_2'(0)` at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeCertificate {
    pub beta: f64,
    pub sigma_tilde: f64,
    pub gamma: f64,
    pub radius: f64,
    pub mu2: f64,
    /// `μ_2` with `σ̃` eliminated.
    pub mu2_alt: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub bracket_assembly: f64,
    pub bracket_compact: f64,
    /// `⟨H_R̃μ(0, μ_2)[Y_20], Y_20⟩ = -B_2`.
    pub hrmu: f64,
    /// `-bracket / hrmu`.
    pub slope: f64,
    pub slope_closed: f64,
    /// `⟨H_R̃R̃(0, μ_2)[Y_20, Y_20], Y_20⟩`.
    pub a: f64,
}

fn rel_delta(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

impl SlopeCertificate {
    pub fn mu2_delta(&self) -> f64 {
        rel_delta(self.mu2, self.mu2_alt)
    }

    pub fn bracket_delta(&self) -> f64 {
        rel_delta(self.bracket_assembly, self.bracket_compact)
    }

    pub fn slope_delta(&self) -> f64 {
        rel_delta(self.slope, self.slope_closed)
    }

    /// True when every sign claim holds.
    pub fn signs_ok(&self) -> bool {
        self.e1 < 0.0 && self.e2 < 0.0 && self.e3 < 0.0 && self.slope < 0.0 && self.a < 0.0 && self.hrmu < 0.0
    }

    /// Fails if a sign claim is violated or two paths disagree beyond `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if !self.signs_ok() {
            return Err(Error::CertificateViolation(format!(
                "sign check failed at beta = {}, sigma_tilde = {}: {self:?}",
                self.beta, self.sigma_tilde
            )));
        }
        for (name, d) in [("mu2", self.mu2_delta()), ("bracket", self.bracket_delta()), ("slope", self.slope_delta())] {
            if !(d <= tol) {
                return Err(Error::CertificateViolation(format!(
                    "{name} paths differ by {d:e} at beta = {}, sigma_tilde = {}",
                    self.beta, self.sigma_tilde
                )));
            }
        }
        Ok(())
    }
}

pub fn mu2_slope(eq: &RadialEquilibrium) -> Result<SlopeCertificate> {
    let k = TripleConstants::closed();
    let p = &eq.params;
    let r = eq.radius;
    let mu2 = mu_n(eq, 2)?;
    let e: ECoeffs = certificates::e_coeffs(r)?;
    let bracket_assembly = bracket_hrr(eq, mu2, BracketMethod::Assembly, &k)?;
    let bracket_compact = bracket_hrr(eq, mu2, BracketMethod::Compact, &k)?;
    let hrmu = -b_n(eq, 2, mu2);
    let a2 = a_n(eq, 2, eq.p(2));
    let slope_closed =
        k.plain * mu2 * mu2 * r.powi(3) / (4.0 * p.gamma) * eq.flux_coeff() / (a2 * a2) * e.combine(r, p.beta);
    Ok(SlopeCertificate {
        beta: p.beta,
        sigma_tilde: p.sigma_tilde,
        gamma: p.gamma,
        radius: r,
        mu2,
        mu2_alt: mu2_alt(eq)?,
        e1: e.e1,
        e2: e.e2,
        e3: e.e3,
        bracket_assembly,
        bracket_compact,
        hrmu,
        slope: -bracket_assembly / hrmu,
        slope_closed,
        a: 2.0 * bracket_assembly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::ModelParams;

    const BETAS: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

    fn grid() -> Vec<RadialEquilibrium> {
        let mut out = Vec::new();
        for beta in BETAS {
            for i in 1..=9 {
                let p = ModelParams::new(beta, i as f64 / 10.0, 1.0).unwrap();
                out.push(RadialEquilibrium::solve(&p).unwrap());
            }
        }
        out
    }

    fn eq(beta: f64, st: f64, gamma: f64) -> RadialEquilibrium {
        RadialEquilibrium::solve(&ModelParams::new(beta, st, gamma).unwrap()).unwrap()
    }

    fn rel(x: f64, y: f64) -> f64 {
        rel_delta(x, y)
    }

    #[test]
    fn mu2_two_forms_agree() {
        for e in grid() {
            let a = mu_n(&e, 2).unwrap();
            let b = mu2_alt(&e).unwrap();
            assert!(rel(a, b) <= 1e-12, "{a} vs {b} at beta = {}", e.params.beta);
        }
    }

    #[test]
    fn mu_n_strictly_increasing() {
        for e in grid() {
            let mus: Vec<f64> = (2..=10).map(|n| mu_n(&e, n).unwrap()).collect();
            assert!(mus.iter().all(|&m| m > 0.0));
            assert!(mus.windows(2).all(|w| w[0] < w[1]), "{mus:?}");
        }
    }

    #[test]
    fn mu_n_linear_in_gamma() {
        let (a, b) = (eq(2.0, 0.4, 1.0), eq(2.0, 0.4, 2.0));
        for n in 2..6 {
            assert!(rel(2.0 * mu_n(&a, n).unwrap(), mu_n(&b, n).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn mu_n_rejects_low_modes() {
        let e = eq(1.0, 0.5, 1.0);
        assert!(matches!(mu_n(&e, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn reference_mu2_and_slope() {
        let e = eq(1.0, 0.5, 1.0);
        let cert = mu2_slope(&e).unwrap();
        assert!(rel(cert.mu2, 7.577_620_579_502_577) < 1e-12, "{}", cert.mu2);
        assert!(rel(cert.bracket_assembly, -0.108_653_626_663_125_95) < 1e-11);
        assert!(rel(cert.slope, -2.091_744_685_029_411) < 1e-11);
    }

    #[test]
    fn b_n_sign_pattern() {
        for e in grid() {
            assert!(b_n(&e, 0, f64::NAN) < 0.0);
            assert_eq!(b_n(&e, 1, f64::NAN), 0.0);
            for n in 2..=10 {
                let d = bifurcation_data(&e, n).unwrap();
                assert!(d.b_n > 0.0);
            }
            let m2 = mu_n(&e, 2).unwrap();
            let want = 4.0 * e.params.gamma / (e.radius.powi(3) * m2);
            assert!(rel(b_n(&e, 2, m2), want) < 1e-15);
        }
    }

    #[test]
    fn spectrum_at_first_bifurcation() {
        for e in grid() {
            let m2 = mu_n(&e, 2).unwrap();
            let s = spectrum_neg_h(&e, m2, 10).unwrap();
            assert_eq!(s[0].lambda, 0.0);
            assert_eq!(s[0].mu_n, None);
            assert_eq!(s[1].lambda, 0.0);
            assert!(s[2..].iter().all(|x| x.lambda < 0.0));
            // crossing speed
            let h = 1e-6 * m2;
            let up = spectrum_neg_h(&e, m2 + h, 2).unwrap()[1].lambda;
            assert!(rel(up / h, s[1].b_n) < 1e-6);
        }
    }

    #[test]
    fn first_order_theta_coefficient_collapses() {
        for e in grid() {
            let m2 = mu_n(&e, 2).unwrap();
            let f = first_order_profile(&e, m2);
            let want = 2.0 * e.params.gamma / (e.radius * e.radius);
            assert!(rel(f.pressure_theta, want) < 1e-9, "{} vs {want}", f.pressure_theta);
        }
    }

    #[test]
    fn first_order_simplified_boundary_forms() {
        for e in grid() {
            let m = mu_n(&e, 2).unwrap();
            let f = first_order_profile(&e, m);
            let (r, g, p2) = (e.radius, e.params.gamma, e.p(2));
            let ck = f.c * f.k;
            let dp = m * ck * r * r * p2 + 4.0 * g / r.powi(3);
            let ddp = m * ck * r * (1.0 - 2.0 * p2) + 4.0 * g / r.powi(4);
            assert!(rel(f.pressure[0], dp) < 1e-9);
            assert!(rel(f.pressure[1], ddp) < 1e-9);
        }
    }

    #[test]
    fn first_order_robin_condition() {
        for e in grid() {
            let m = mu_n(&e, 2).unwrap();
            let f = first_order_profile(&e, m);
            let s = e.boundary_derivs(m);
            let beta = e.params.beta;
            let lhs = f.sigma[1] + beta * f.sigma[0];
            let rhs = -(s.sigma[2] + beta * s.sigma[1]);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn first_order_radial_derivatives_match_finite_differences() {
        let e = eq(1.5, 0.45, 1.2);
        let f = first_order_profile(&e, 4.0);
        let r = e.radius;
        let h = 1e-4;
        let s = |x: f64| f.sigma_at(x).unwrap();
        assert!((f.sigma_at(r).unwrap() - f.sigma[0]).abs() < 1e-14);
        let d1 = (3.0 * s(r) - 4.0 * s(r - h) + s(r - 2.0 * h)) / (2.0 * h);
        assert!((d1 - f.sigma[1]).abs() < 1e-6 * f.sigma[1].abs().max(1.0));
        let q = |x: f64| f.pressure_at(x).unwrap();
        let dq = (3.0 * q(r) - 4.0 * q(r - h) + q(r - 2.0 * h)) / (2.0 * h);
        assert!((dq - f.pressure[0]).abs() < 1e-6 * f.pressure[0].abs().max(1.0));
    }

    #[test]
    fn d_coeffs_closed_vs_assembled() {
        let k = TripleConstants::closed();
        for e in grid() {
            for mu in [0.5, mu_n(&e, 2).unwrap()] {
                let closed = d_coeffs(&e, mu);
                let asm = second_order_assembly(&e, mu, &k);
                assert!(rel(closed.d1, asm.d.d1) < TWO_PATH_TOL, "{closed:?} {asm:?}");
                assert!(rel(closed.d2, asm.d.d2) < TWO_PATH_TOL, "{closed:?} {asm:?}");
                let a2 = e.params.beta + 2.0 / e.radius + e.radius * e.p(2);
                assert!(rel(asm.robin_rhs, closed.d1 * a2) < TWO_PATH_TOL);
            }
        }
    }

    #[test]
    fn d2_curvature_part_scales_with_gamma() {
        let e1 = eq(3.0, 0.3, 1.0);
        let e2 = RadialEquilibrium::at_radius(&ModelParams { gamma: 2.0, ..e1.params }, e1.radius).unwrap();
        let mu = 2.5;
        let (a, b) = (d_coeffs(&e1, mu), d_coeffs(&e2, mu));
        assert_eq!(a.d1, b.d1);
        let curv = -9.0 / e1.radius.powi(3) * y20_cubed();
        assert!(((b.d2 - a.d2) - curv).abs() < 1e-12 * curv.abs());
        // D_2 - μ D_1 equals the boundary projection of p_2
        let asm = second_order_assembly(&e1, mu, &TripleConstants::closed());
        assert!(rel(a.d2 - mu * a.d1, asm.p2_boundary) < 1e-12);
    }

    #[test]
    fn bracket_two_paths_agree_on_grid() {
        let k = TripleConstants::closed();
        for e in grid() {
            let m2 = mu_n(&e, 2).unwrap();
            let a = bracket_hrr(&e, m2, BracketMethod::Assembly, &k).unwrap();
            let c = bracket_hrr(&e, m2, BracketMethod::Compact, &k).unwrap();
            assert!(rel(a, c) <= TWO_PATH_TOL, "{a} vs {c} at beta = {}, st = {}", e.params.beta, e.params.sigma_tilde);
            assert!(a < 0.0);
        }
    }

    #[test]
    fn quadrature_constants_reproduce_closed_ones() {
        let (q, c) = (TripleConstants::from_quadrature(), TripleConstants::closed());
        assert!(rel(q.plain, c.plain) < 1e-12);
        assert!(rel(q.deriv, c.deriv) < 1e-12);
        let e = eq(1.0, 0.5, 1.0);
        let m2 = mu_n(&e, 2).unwrap();
        let a = bracket_hrr(&e, m2, BracketMethod::Assembly, &q).unwrap();
        let b = bracket_hrr(&e, m2, BracketMethod::Compact, &c).unwrap();
        assert!(rel(a, b) < 1e-10);
    }

    #[test]
    fn slope_certificates_hold_on_grid() {
        for e in grid() {
            let cert = mu2_slope(&e).unwrap();
            cert.check(TWO_PATH_TOL).unwrap();
            assert!(rel(cert.a, -2.0 * cert.slope * cert.hrmu) < 1e-14);
            assert!(rel(cert.a, 2.0 * cert.bracket_assembly) == 0.0);
        }
    }

    #[test]
    fn certificate_check_reports_violations() {
        let e = eq(1.0, 0.5, 1.0);
        let mut cert = mu2_slope(&e).unwrap();
        cert.bracket_compact *= 1.0 + 1e-6;
        assert!(matches!(cert.check(TWO_PATH_TOL), Err(Error::CertificateViolation(_))));
        let mut cert = mu2_slope(&e).unwrap();
        cert.e2 = 0.1;
        assert!(matches!(cert.check(TWO_PATH_TOL), Err(Error::CertificateViolation(_))));
    }

    mod props {
        use super::super::*;
        use crate::stationary::ModelParams;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn two_path_bracket_holds_off_grid(beta in 0.05f64..200.0, st in 0.05f64..0.95, gamma in 0.1f64..10.0) {
                let p = ModelParams::new(beta, st, gamma).unwrap();
                let e = RadialEquilibrium::solve(&p).unwrap();
                let cert = mu2_slope(&e).unwrap();
                prop_assert!(cert.check(TWO_PATH_TOL).is_ok(), "{:?}", cert);
            }
        }
    }
}
