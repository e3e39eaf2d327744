//! Half-integer modified Bessel machinery.
//!
//! Everything here is expressed through the ratio
//!
//! ```text
//! P_n(r) = I_{n+3/2}(r) / (r I_{n+1/2}(r))
//! ```
//!
//! which satisfies `r² P_n P_{n+1} + (2n+3) P_n = 1`. The ratios are evaluated with the
//! backward form of that identity, `P_n = 1 / (2n+3 + r² P_{n+1})`, which is contracting
//! for every `r > 0`. The hyperbolic closed forms of `P_0`, `P_1`, `P_2` are kept as
//! independent evaluations.

use crate::error::{Error, Result};

/// Largest mode index for which ratios are certified.
pub const DEFAULT_N_MAX: usize = 50;

/// Below this radius `P_0` is evaluated from ascending series.
pub const SERIES_THRESHOLD: f64 = 0.5;

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive and finite, got {r}")))
    }
}

fn check_order(n: usize, n_max: usize) -> Result<()> {
    if n <= n_max {
        Ok(())
    } else {
        Err(Error::Range(format!("mode index {n} exceeds n_max = {n_max}")))
    }
}

/// `P_0` from the ratio of the ascending series of `r cosh r - sinh r` and `r² sinh r`.
fn p0_series(r: f64) -> f64 {
    // numerator:   sum_{k>=1} 2k r^{2k-2} / (2k+1)!
    // denominator: sum_{k>=0} r^{2k} / (2k+1)!
    let r2 = r * r;
    let mut num = 0.0;
    let mut den = 1.0;
    let mut inv_fact = 1.0;
    let mut prev_pow = 1.0;
    for k in 1..30usize {
        inv_fact /= ((2 * k) * (2 * k + 1)) as f64;
        num += 2.0 * k as f64 * inv_fact * prev_pow;
        prev_pow *= r2;
        let term = inv_fact * prev_pow;
        den += term;
        if term < 1e-18 * den {
            break;
        }
    }
    num / den
}

fn p0_hyperbolic(r: f64) -> f64 {
    (r / r.tanh() - 1.0) / (r * r)
}

/// Closed form `P_0(r) = (r cosh r - sinh r) / (r² sinh r)`, with a series branch for
/// `r < 0.5` to avoid cancellation.
pub fn p0_closed(r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(if r < SERIES_THRESHOLD {
        p0_series(r)
    } else {
        p0_hyperbolic(r)
    })
}

/// Radius below which the explicit `P_1`, `P_2` forms are summed as series.
const EXPLICIT_SERIES_THRESHOLD: f64 = 2.0;

/// `Σ_{j≥0} c(j) r^{2j+1} / (2j+1)!` for a coefficient sequence with no sign changes.
fn odd_series(r: f64, c: impl Fn(f64) -> f64) -> f64 {
    let r2 = r * r;
    let mut term = r; // r^{2j+1} / (2j+1)!
    let mut sum = 0.0;
    for j in 0..60usize {
        if j > 0 {
            term *= r2 / ((2 * j) * (2 * j + 1)) as f64;
        }
        let t = c(j as f64) * term;
        sum += t;
        if j > 3 && t < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Explicit form `P_1 = (r² sinh r - 3r cosh r + 3 sinh r) / (r²(r cosh r - sinh r))`.
/// Both sides expand into positive series, `4j(j-1)` and `2j` over `(2j+1)!`, which
/// are used below [`EXPLICIT_SERIES_THRESHOLD`].
pub fn p1_closed(r: f64) -> Result<f64> {
    check_radius(r)?;
    let r2 = r * r;
    if r < EXPLICIT_SERIES_THRESHOLD {
        let num = odd_series(r, |j| 4.0 * j * (j - 1.0));
        let den = odd_series(r, |j| 2.0 * j);
        return Ok(num / (r2 * den));
    }
    let t = r.tanh();
    Ok((r2 * t - 3.0 * r + 3.0 * t) / (r2 * (r - t)))
}

/// Explicit form `P_2 = (r³ cosh r - 6r² sinh r + 15r cosh r - 15 sinh r) / (r²(r² sinh r - 3r cosh r + 3 sinh r))`,
/// with numerator series coefficients `8j(j-1)(j-2)/(2j+1)!` for small `r`.
pub fn p2_closed(r: f64) -> Result<f64> {
    check_radius(r)?;
    let r2 = r * r;
    if r < EXPLICIT_SERIES_THRESHOLD {
        let num = odd_series(r, |j| 8.0 * j * (j - 1.0) * (j - 2.0));
        let den = odd_series(r, |j| 4.0 * j * (j - 1.0));
        return Ok(num / (r2 * den));
    }
    let t = r.tanh();
    let num = r2 * r - 6.0 * r2 * t + 15.0 * r - 15.0 * t;
    let den = r2 * (r2 * t - 3.0 * r + 3.0 * t);
    Ok(num / den)
}

/// `P_0(r), …, P_{n_top}(r)` by the backward continued fraction.
fn ratio_sequence(r: f64, n_top: usize) -> Vec<f64> {
    let r2 = r * r;
    // The backward map contracts strongly once 2k+3 exceeds r; start well past that.
    let start = n_top + (r / 2.0).ceil() as usize + 40;
    let x = (2 * start + 3) as f64;
    let mut p = 2.0 / (x + (x * x + 4.0 * r2).sqrt());
    let mut out = vec![0.0; n_top + 1];
    for k in (0..start).rev() {
        p = 1.0 / ((2 * k + 3) as f64 + r2 * p);
        if k <= n_top {
            out[k] = p;
        }
    }
    out
}

/// `P_n(r)` for `0 <= n <= DEFAULT_N_MAX`.
pub fn p_ratio(n: usize, r: f64) -> Result<f64> {
    check_radius(r)?;
    check_order(n, DEFAULT_N_MAX)?;
    Ok(ratio_sequence(r, n)[n])
}

/// Cached `P_0(r), …, P_{n_max}(r)` at a fixed radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    r: f64,
    values: Vec<f64>,
}

impl RatioTable {
    pub fn new(r: f64, n_max: usize) -> Result<Self> {
        check_radius(r)?;
        check_order(n_max, DEFAULT_N_MAX)?;
        Ok(Self {
            r,
            values: ratio_sequence(r, n_max),
        })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<f64> {
        self.values
            .get(n)
            .copied()
            .ok_or_else(|| Error::Range(format!("mode index {n} exceeds table n_max = {}", self.n_max())))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `|r² P_n P_{n+1} + (2n+3) P_n - 1|`, for `n < n_max`.
    pub fn identity_residual(&self, n: usize) -> Result<f64> {
        let pn = self.get(n)?;
        let pn1 = self.get(n + 1)?;
        Ok((self.r * self.r * pn * pn1 + (2 * n + 3) as f64 * pn - 1.0).abs())
    }
}

/// `(I_{n+1/2}(r)/r^{1/2}) / (I_{n+1/2}(R)/R^{1/2})` without the `r <= R` restriction.
pub(crate) fn profile_ratio(n: usize, r: f64, big_r: f64) -> Result<f64> {
    check_radius(r)?;
    check_radius(big_r)?;
    check_order(n, DEFAULT_N_MAX)?;
    // n = 0: (sinh r / r) (R / sinh R), written with exponentials scaled out.
    let base = (big_r / r) * (r - big_r).exp() * ((-2.0 * r).exp_m1() / (-2.0 * big_r).exp_m1());
    if n == 0 {
        return Ok(base);
    }
    // I_{k+3/2}/I_{k+1/2} = r P_k(r) raises the order one step at a time.
    let inner = ratio_sequence(r, n - 1);
    let outer = ratio_sequence(big_r, n - 1);
    let ladder = inner
        .iter()
        .zip(&outer)
        .fold(1.0, |acc, (pi, po)| acc * (r * pi) / (big_r * po));
    Ok(base * ladder)
}

/// Normalized radial profile `(I_{n+1/2}(r)/r^{1/2}) · (R^{1/2}/I_{n+1/2}(R))` on `0 < r <= R`.
pub fn radial_profile(n: usize, r: f64, big_r: f64) -> Result<f64> {
    check_radius(big_r)?;
    if r > big_r {
        return Err(Error::Domain(format!(
            "profile is evaluated inside the ball only: r = {r} > R = {big_r}"
        )));
    }
    profile_ratio(n, r, big_r)
}

/// First three radial derivatives of the normalized profile at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileDerivs {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

pub fn profile_boundary_derivs(n: usize, big_r: f64) -> Result<ProfileDerivs> {
    let pn = p_ratio(n, big_r)?;
    Ok(boundary_derivs_from_ratio(n, big_r, pn))
}

pub(crate) fn boundary_derivs_from_ratio(n: usize, big_r: f64, pn: f64) -> ProfileDerivs {
    let nf = n as f64;
    let r = big_r;
    let r2 = r * r;
    let shape = nf * (nf - 1.0) / r2 + 1.0;
    ProfileDerivs {
        d1: nf / r + r * pn,
        d2: shape - 2.0 * pn,
        d3: (nf - 2.0) / r * shape + ((nf * nf + nf + 6.0) / r2 + 1.0) * r * pn,
    }
}
