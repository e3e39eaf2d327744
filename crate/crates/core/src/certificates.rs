//! Sign certificates for the slope coefficients `E_1, E_2, E_3` and the exact-integer
//! series argument showing `G_1(R) < 0`.
//!
//! `G_1` is the numerator of `E_2` once the ratios are written with hyperbolic functions.
//! Its Taylor series is `-4 Σ_{n≥4} n R^{2n+1}/(2n+1)! · (a_n + b_n 3^{2n-5})` with integer
//! polynomials `a_n`, `b_n`; the combined integers are non-negative, so every term is `≤ 0`.

use rayon::prelude::*;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::bessel::RatioTable;
use crate::bifurcation;
use crate::error::{Error, Result};
use crate::stationary::{ModelParams, RadialEquilibrium};

/// The three coefficients of `E_1 R β² + E_2 β + E_3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ECoeffs {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

impl ECoeffs {
    pub fn combine(&self, r: f64, beta: f64) -> f64 {
        self.e1 * r * beta * beta + self.e2 * beta + self.e3
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive, got {r}")))
    }
}

fn p12(r: f64) -> Result<(f64, f64)> {
    let t = RatioTable::new(r, 2)?;
    Ok((t.get(1)?, t.get(2)?))
}

pub fn e_coeffs(r: f64) -> Result<ECoeffs> {
    check_radius(r)?;
    let (p1, p2) = p12(r)?;
    let r2 = r * r;
    let r4 = r2 * r2;
    let e1 = -0.5 * (p1 + p2 + 2.0 * r2 * p2 * p2 - 2.0 * r2 * p1 * p2);
    let e2 = 1.0 - 12.0 * p1 + 1.5 * p2 + r2 * p1 - 0.5 * r2 * p2 + 2.5 * r2 * p2 * p2
        - 7.0 * r2 * p1 * p2
        - 0.5 * r4 * p1 * p2 * p2;
    let e3 = -(24.0 * p1 - 4.0 * r2 * p1 + 2.0 * r2 * p2 - 3.0 * r2 * p2 * p2 + 22.0 * r2 * p1 * p2
        + 2.0 * r4 * p1 * p2 * p2)
        / (2.0 * r);
    Ok(ECoeffs { e1, e2, e3 })
}

/// `E_1` in the form it takes before the ratio identity with `n = 1` is applied.
pub fn e1_unreduced(r: f64) -> Result<f64> {
    check_radius(r)?;
    let (p1, p2) = p12(r)?;
    let r2 = r * r;
    Ok(-0.5 * (-1.0 + 6.0 * p1 + p2 + 2.0 * r2 * p2 * p2 - r2 * p1 * p2))
}

/// The four summands of `E_3 = -(1/2R)[24P_1 + 4R⁴P_1P_2(P_2-P_3) + R²P_1P_2 + 3R²P_2(P_1-P_2)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct E3Decomposition {
    pub radius: f64,
    pub term_24p1: f64,
    pub term_p2diff: f64,
    pub term_p1p2: f64,
    pub term_p1minusp2: f64,
}

impl E3Decomposition {
    pub fn all_positive(&self) -> bool {
        self.term_24p1 > 0.0 && self.term_p2diff > 0.0 && self.term_p1p2 > 0.0 && self.term_p1minusp2 > 0.0
    }

    pub fn recombine(&self) -> f64 {
        -(self.term_24p1 + self.term_p2diff + self.term_p1p2 + self.term_p1minusp2) / (2.0 * self.radius)
    }
}

pub fn e3_decomposition(r: f64) -> Result<E3Decomposition> {
    check_radius(r)?;
    let t = RatioTable::new(r, 3)?;
    let (p1, p2, p3) = (t.get(1)?, t.get(2)?, t.get(3)?);
    let r2 = r * r;
    Ok(E3Decomposition {
        radius: r,
        term_24p1: 24.0 * p1,
        term_p2diff: 4.0 * r2 * r2 * p1 * p2 * (p2 - p3),
        term_p1p2: r2 * p1 * p2,
        term_p1minusp2: 3.0 * r2 * p2 * (p1 - p2),
    })
}

/// Largest radius accepted by [`g1_closed`].
pub const G1_MAX_RADIUS: f64 = 300.0;

// Polynomial coefficients (in R², ascending) multiplying R cosh R, R cosh 3R, sinh R, sinh 3R.
const G1_COSH1: [i128; 4] = [-1269, 741, 366, 44];
const G1_COSH3: [i128; 3] = [3 * 423, 3 * 317, 3 * 30];
const G1_SINH1: [i128; 5] = [1269, -648, -606, -146, -8];
const G1_SINH3: [i128; 4] = [-423, -1476, -378, -10];

fn poly_r2(c: &[i128], r2: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * r2 + k as f64)
}

/// Below this radius the closed form is summed in double-double arithmetic.
pub const G1_EXTENDED_RADIUS: f64 = 8.0;

fn poly_r2_dd(c: &[i128], r2: TwoFloat) -> TwoFloat {
    c.iter().rev().fold(TwoFloat::from(0.0), |acc, &k| acc * r2 + k as f64)
}

// (cosh x, sinh x) by Taylor series, adequate for |x| <= 3 * G1_EXTENDED_RADIUS
fn cosh_sinh_dd(x: TwoFloat) -> (TwoFloat, TwoFloat) {
    let x2 = x * x;
    let (mut ch, mut sh) = (TwoFloat::from(1.0), x);
    let (mut tc, mut ts) = (TwoFloat::from(1.0), x);
    for k in 1..200 {
        let k = k as f64;
        tc = tc * x2 / ((2.0 * k - 1.0) * (2.0 * k));
        ts = ts * x2 / ((2.0 * k) * (2.0 * k + 1.0));
        ch += tc;
        sh += ts;
        if ts.hi().abs() < 1e-34 * sh.hi().abs() {
            break;
        }
    }
    (ch, sh)
}

// The four summands cancel to O(R^15) near zero, so f64 loses about ten digits at R = 0.5.
fn g1_closed_dd(r: f64) -> TwoFloat {
    let rd = TwoFloat::from(r);
    let r2 = rd * rd;
    let (c1, s1) = cosh_sinh_dd(rd);
    let (c3, s3) = cosh_sinh_dd(rd * 3.0);
    poly_r2_dd(&G1_COSH1, r2) * rd * c1
        + poly_r2_dd(&G1_COSH3, r2) * rd * c3
        + poly_r2_dd(&G1_SINH1, r2) * s1
        + poly_r2_dd(&G1_SINH3, r2) * s3
}

/// `G_1(R)` from its hyperbolic closed form.
pub fn g1_closed(r: f64) -> Result<f64> {
    check_radius(r)?;
    if r > G1_MAX_RADIUS {
        return Err(Error::Overflow(format!("g1_closed rejects R = {r} > {G1_MAX_RADIUS}")));
    }
    if r <= G1_EXTENDED_RADIUS {
        return Ok(g1_closed_dd(r).hi());
    }
    let r2 = r * r;
    let v = poly_r2(&G1_COSH1, r2) * r * r.cosh()
        + poly_r2(&G1_COSH3, r2) * r * (3.0 * r).cosh()
        + poly_r2(&G1_SINH1, r2) * r.sinh()
        + poly_r2(&G1_SINH3, r2) * (3.0 * r).sinh();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("G_1({r}) is not representable; use g1_scaled")))
    }
}

/// `G_1(R) e^{-3R}`, finite for every `R > 0`.
pub fn g1_scaled(r: f64) -> Result<f64> {
    check_radius(r)?;
    if r <= G1_EXTENDED_RADIUS {
        return Ok(g1_closed_dd(r).hi() * (-3.0 * r).exp());
    }
    let r2 = r * r;
    let (e2, e4, e6) = ((-2.0 * r).exp(), (-4.0 * r).exp(), (-6.0 * r).exp());
    Ok(poly_r2(&G1_COSH1, r2) * r * 0.5 * (e2 + e4)
        + poly_r2(&G1_COSH3, r2) * r * 0.5 * (1.0 + e6)
        + poly_r2(&G1_SINH1, r2) * 0.5 * (e2 - e4)
        + poly_r2(&G1_SINH3, r2) * 0.5 * (1.0 - e6))
}

/// `E_2` as `G_1 / (8R²(-3R cosh R + (3+R²) sinh R)²(R cosh R - sinh R))`, evaluated with
/// every factor scaled by `e^{-R}` so it stays finite at large `R`.
pub fn e2_from_g1(r: f64) -> Result<f64> {
    let g = g1_scaled(r)?;
    let em = (-2.0 * r).exp();
    let (ch, sh) = (0.5 * (1.0 + em), 0.5 * (1.0 - em));
    let d1 = -3.0 * r * ch + (3.0 + r * r) * sh;
    let d2 = r * ch - sh;
    Ok(g / (8.0 * r * r * d1 * d1 * d2))
}

/// Value of `G_1` using the series below `R = 0.5`, where the closed form cancels badly.
pub fn g1_value(r: f64) -> Result<f64> {
    if r < 0.5 {
        Ok(g1_series(r, 60)?.value)
    } else {
        g1_closed(r)
    }
}

/// Integer coefficients of `a_n` (degree 7) and `b_n` (degree 5), ascending in `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeriesPolys {
    pub a: [i128; 8],
    pub b: [i128; 6],
}

impl Default for SeriesPolys {
    fn default() -> Self {
        Self {
            a: [10305, -20712, -18498, 77432, -73920, 31904, -6528, 512],
            b: [-77235, 114544, -67962, 20008, -2880, 160],
        }
    }
}

/// One term of the `G_1` series with exact integer coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactSeriesTerm {
    pub n: u32,
    pub a_n: i128,
    pub b_n: i128,
    /// `a_n + b_n 3^{2n-5}`.
    pub combined: i128,
}

fn horner_exact(c: &[i128], n: i128) -> Option<i128> {
    c.iter().rev().try_fold(0i128, |acc, &k| acc.checked_mul(n)?.checked_add(k))
}

fn overflow(n: u32) -> Error {
    Error::Overflow(format!("series term n = {n} exceeds 128-bit range"))
}

impl SeriesPolys {
    /// A copy with `delta` added to coefficient `index` of `a_n`; used to exercise failure paths.
    pub fn corrupted(mut self, index: usize, delta: i128) -> Self {
        self.a[index % self.a.len()] += delta;
        self
    }

    pub fn term(&self, n: u32) -> Result<ExactSeriesTerm> {
        if n < 4 {
            return Err(Error::Domain(format!("series starts at n = 4, got {n}")));
        }
        let ni = n as i128;
        let a_n = horner_exact(&self.a, ni).ok_or_else(|| overflow(n))?;
        let b_n = horner_exact(&self.b, ni).ok_or_else(|| overflow(n))?;
        let combined = 3i128
            .checked_pow(2 * n - 5)
            .and_then(|p| p.checked_mul(b_n))
            .and_then(|v| v.checked_add(a_n))
            .ok_or_else(|| overflow(n))?;
        Ok(ExactSeriesTerm { n, a_n, b_n, combined })
    }

    /// `a_n + b_n 3^{2n-5}` as a float, valid far beyond the 128-bit range.
    pub fn combined_f64(&self, n: u32) -> f64 {
        let nf = n as f64;
        let ev = |c: &[i128]| c.iter().rev().fold(0.0, |acc, &k| acc * nf + k as f64);
        ev(&self.a) + ev(&self.b) * 3f64.powi(2 * n as i32 - 5)
    }
}

pub fn series_polys(n: u32) -> Result<ExactSeriesTerm> {
    SeriesPolys::default().term(n)
}

/// Published values of `a_n + b_n 3^{2n-5}` for `n = 4..=17`.
pub const PUBLISHED_TABLE1: [i128; 14] = [
    0,
    0,
    0,
    656308224,
    32037857280,
    935872045056,
    21237572689920,
    412227655004160,
    7180490438922240,
    115430374226534400,
    1743676765861109760,
    25059810408839424000,
    345732732222060165120,
    4609555109351370768384,
];

pub fn table1() -> Result<Vec<ExactSeriesTerm>> {
    table1_with(&SeriesPolys::default())
}

pub fn table1_with(polys: &SeriesPolys) -> Result<Vec<ExactSeriesTerm>> {
    (4..=17).map(|n| polys.term(n)).collect()
}

/// Compares the computed table with [`PUBLISHED_TABLE1`]; any mismatch is an error.
pub fn verify_table1(polys: &SeriesPolys) -> Result<Vec<ExactSeriesTerm>> {
    let rows = table1_with(polys)?;
    for (row, &want) in rows.iter().zip(PUBLISHED_TABLE1.iter()) {
        if row.combined != want {
            return Err(Error::CertificateViolation(format!(
                "table entry n = {}: computed {} but published {}",
                row.n, row.combined, want
            )));
        }
        if row.combined < 0 {
            return Err(Error::CertificateViolation(format!("negative combined value at n = {}", row.n)));
        }
    }
    Ok(rows)
}

/// `(2k+1)! · [R^{2k+1}] G_1(R)`, computed exactly from the closed form.
///
/// The factorial quotient against each hyperbolic series coefficient is a falling factorial of
/// length at most 9, so every product stays well inside 128 bits for `k ≤ 17`.
pub fn g1_taylor_scaled(k: u32) -> Result<i128> {
    let m = 2 * k as i128 + 1;
    // (2k+1)! / (2k+1-len)!
    let falling = |len: i128| -> i128 { (0..len).map(|i| m - i).product() };
    let pow3 = |e: i128| -> Result<i128> { 3i128.checked_pow(e as u32).ok_or_else(|| overflow(k)) };
    let mut acc: i128 = 0;
    for (j, &c) in G1_COSH1.iter().enumerate() {
        let j = j as i128;
        // R^{2j+1} cosh R contributes R^{2j+1} R^{2(k-j)}/(2(k-j))!
        if j <= k as i128 {
            acc += c * falling(2 * j + 1);
        }
    }
    for (j, &c) in G1_COSH3.iter().enumerate() {
        let j = j as i128;
        if j <= k as i128 {
            acc += c * pow3(2 * (k as i128 - j))? * falling(2 * j + 1);
        }
    }
    for (j, &c) in G1_SINH1.iter().enumerate() {
        let j = j as i128;
        if j <= k as i128 {
            acc += c * falling(2 * j);
        }
    }
    for (j, &c) in G1_SINH3.iter().enumerate() {
        let j = j as i128;
        if j <= k as i128 {
            acc += c * pow3(2 * (k as i128 - j) + 1)? * falling(2 * j);
        }
    }
    Ok(acc)
}

/// One collected low-order coefficient of `G_1`, as an exact multiple of `1/5040`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CancellationRecord {
    /// Power of `R`.
    pub power: u32,
    pub numerator_over_5040: i128,
}

/// Coefficients of `R, R³, R⁵, R⁷` in `G_1`; all four must vanish.
pub fn low_order_cancellation() -> Result<Vec<CancellationRecord>> {
    let mut out = Vec::with_capacity(4);
    for k in 0..4u32 {
        let fact: i128 = (1..=(2 * k as i128 + 1)).product();
        let scaled = g1_taylor_scaled(k)?;
        out.push(CancellationRecord { power: 2 * k + 1, numerator_over_5040: scaled * (5040 / fact) });
    }
    if let Some(bad) = out.iter().find(|c| c.numerator_over_5040 != 0) {
        return Err(Error::CertificateViolation(format!(
            "coefficient of R^{} is {}/5040, not 0",
            bad.power, bad.numerator_over_5040
        )));
    }
    Ok(out)
}

/// Checks `(2k+1)! [R^{2k+1}] G_1 = -4k (a_k + b_k 3^{2k-5})` for `k = 4..=17`, tying the
/// series polynomials back to the closed form.
pub fn verify_series_against_closed_form(polys: &SeriesPolys) -> Result<()> {
    for k in 4..=17u32 {
        let lhs = g1_taylor_scaled(k)?;
        let rhs = -4 * k as i128 * polys.term(k)?.combined;
        if lhs != rhs {
            return Err(Error::CertificateViolation(format!(
                "series coefficient mismatch at n = {k}: closed form gives {lhs}, polynomials give {rhs}"
            )));
        }
    }
    Ok(())
}

/// A linear factor `c0 + c1 n` from the grouped forms of `a_n` and `b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BracketFactor {
    pub poly: &'static str,
    pub c0: i128,
    pub c1: i128,
    pub value_at_18: i128,
}

// a_n = 10305 + 20712 n(n²-1) + (-18498 + 56720 n) n² + (-73920 + 31904 n) n⁴ + (-6528 + 512 n) n⁶
const A_BRACKETS: [(i128, i128, u32); 3] = [(-18498, 56720, 2), (-73920, 31904, 4), (-6528, 512, 6)];
// b_n = (-77235 + 114544 n) + (-67962 + 20008 n) n² + (-2880 + 160 n) n⁴
const B_BRACKETS: [(i128, i128, u32); 3] = [(-77235, 114544, 0), (-67962, 20008, 2), (-2880, 160, 4)];

fn grouped_a(n: i128) -> i128 {
    10305 + 20712 * n * (n * n - 1) + A_BRACKETS.iter().map(|&(c0, c1, e)| (c0 + c1 * n) * n.pow(e)).sum::<i128>()
}

fn grouped_b(n: i128) -> i128 {
    B_BRACKETS.iter().map(|&(c0, c1, e)| (c0 + c1 * n) * n.pow(e)).sum()
}

/// Record showing `a_n > 0` and `b_n > 0` for every `n ≥ 18`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TailPositivity {
    pub factors: Vec<BracketFactor>,
    /// Factors that vanish at `n = 18` and are positive beyond.
    pub zero_at_18: Vec<&'static str>,
}

/// Each linear factor has positive slope and is non-negative at `n = 18`, so it is
/// non-negative for all `n ≥ 18`; the constant `10305` and the `n(n²-1)` term are positive,
/// which makes `a_n > 0`; `b_n > 0` because its first factor is positive at 18. The grouped
/// forms are checked against the expanded polynomials at nine points, which pins down any
/// polynomial of degree ≤ 8.
pub fn tail_positivity(polys: &SeriesPolys) -> Result<TailPositivity> {
    let ev = |c: &[i128], n: i128| horner_exact(c, n).expect("small n");
    for n in 0..9i128 {
        if grouped_a(n) != ev(&polys.a, n) || grouped_b(n) != ev(&polys.b, n) {
            return Err(Error::CertificateViolation(format!(
                "grouped form differs from the expanded polynomial at n = {n}"
            )));
        }
    }
    let mut factors = Vec::new();
    let mut zero_at_18 = Vec::new();
    for (name, table) in [("a", &A_BRACKETS), ("b", &B_BRACKETS)] {
        for &(c0, c1, _) in table.iter() {
            let v = c0 + c1 * 18;
            if c1 <= 0 || v < 0 {
                return Err(Error::CertificateViolation(format!(
                    "factor {c0} + {c1} n of {name}_n is negative for some n >= 18"
                )));
            }
            if v == 0 {
                zero_at_18.push(name);
            }
            factors.push(BracketFactor { poly: name, c0, c1, value_at_18: v });
        }
    }
    if B_BRACKETS[0].0 + B_BRACKETS[0].1 * 18 <= 0 {
        return Err(Error::CertificateViolation("b_n has no strictly positive factor".into()));
    }
    Ok(TailPositivity { factors, zero_at_18 })
}

/// Partial sum of the `G_1` series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G1Series {
    pub radius: f64,
    pub terms: usize,
    pub value: f64,
    /// Magnitude of the last included term.
    pub last_term: f64,
    /// Geometric estimate of the omitted tail.
    pub tail_estimate: f64,
}

/// Largest radius accepted by [`g1_series`].
pub const SERIES_MAX_RADIUS: f64 = 20.0;

fn series_terms(polys: &SeriesPolys, r: f64, terms: usize) -> Result<Vec<f64>> {
    if !(0.0..=SERIES_MAX_RADIUS).contains(&r) {
        return Err(Error::Domain(format!("series radius must lie in [0, {SERIES_MAX_RADIUS}], got {r}")));
    }
    if terms == 0 {
        return Err(Error::Domain("series needs at least one term".into()));
    }
    // R^{2n+1}/(2n+1)! carried as a running ratio.
    let mut scale = r.powi(9) / 362_880.0;
    let mut out = Vec::with_capacity(terms);
    for i in 0..terms {
        let n = 4 + i as u32;
        if i > 0 {
            let nf = n as f64;
            scale *= r * r / ((2.0 * nf) * (2.0 * nf + 1.0));
        }
        let combined = match polys.term(n) {
            Ok(t) => t.combined as f64,
            Err(_) => polys.combined_f64(n),
        };
        out.push(-4.0 * n as f64 * scale * combined);
    }
    Ok(out)
}

pub fn g1_series(r: f64, terms: usize) -> Result<G1Series> {
    g1_series_with(&SeriesPolys::default(), r, terms)
}

pub fn g1_series_with(polys: &SeriesPolys, r: f64, terms: usize) -> Result<G1Series> {
    let t = series_terms(polys, r, terms)?;
    let value = t.iter().sum();
    let last = t.last().copied().unwrap_or(0.0).abs();
    let n = (3 + terms) as f64;
    // combined grows by at most ~9((n+1)/n)^5 per step while the factorial ratio shrinks.
    let q = 9.0 * r * r / ((2.0 * n + 2.0) * (2.0 * n + 3.0)) * ((n + 1.0) / n).powi(8);
    let tail_estimate = if q < 1.0 { last * q / (1.0 - q) } else { f64::INFINITY };
    Ok(G1Series { radius: r, terms, value, last_term: last, tail_estimate })
}

/// Running partial sums of the `G_1` series.
pub fn g1_partial_sums(r: f64, terms: usize) -> Result<Vec<f64>> {
    let t = series_terms(&SeriesPolys::default(), r, terms)?;
    Ok(t.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect())
}

/// Parameter grid for [`sign_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub betas: Vec<f64>,
    pub sigma_tildes: Vec<f64>,
    pub gamma: f64,
    /// Extra radii where only the `β`-free quantities `E_i`, `G_1` are checked.
    pub radii: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            betas: vec![0.1, 1.0, 10.0, 100.0],
            sigma_tildes: (1..=9).map(|i| i as f64 / 10.0).collect(),
            gamma: 1.0,
            radii: (1..=200).map(|i| i as f64 * 0.25).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub sigma_tilde: f64,
    pub radius: f64,
    pub residual: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub g1: f64,
    pub mu2: f64,
    pub slope: f64,
    pub a: f64,
    pub mu2_delta: f64,
    pub bracket_delta: f64,
    pub slope_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusRow {
    pub radius: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub g1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NegativeFlags {
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub g1: bool,
    pub slope: bool,
}

impl NegativeFlags {
    pub fn all(&self) -> bool {
        self.e1 && self.e2 && self.e3 && self.g1 && self.slope
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignSweepReport {
    pub grid: SweepGrid,
    pub rows: Vec<SweepRow>,
    pub radius_rows: Vec<RadiusRow>,
    pub all_negative: NegativeFlags,
    /// Description of the first point where a sign claim fails.
    pub first_failure: Option<String>,
}

impl SignSweepReport {
    pub fn passed(&self) -> bool {
        self.all_negative.all() && self.first_failure.is_none()
    }
}

fn sweep_point(beta: f64, sigma_tilde: f64, gamma: f64) -> Result<SweepRow> {
    let eq = RadialEquilibrium::solve(&ModelParams::new(beta, sigma_tilde, gamma)?)?;
    let cert = bifurcation::mu2_slope(&eq)?;
    Ok(SweepRow {
        beta,
        sigma_tilde,
        radius: eq.radius,
        residual: eq.residual,
        e1: cert.e1,
        e2: cert.e2,
        e3: cert.e3,
        g1: g1_value(eq.radius)?,
        mu2: cert.mu2,
        slope: cert.slope,
        a: cert.a,
        mu2_delta: cert.mu2_delta(),
        bracket_delta: cert.bracket_delta(),
        slope_delta: cert.slope_delta(),
    })
}

fn radius_point(r: f64) -> Result<RadiusRow> {
    let e = e_coeffs(r)?;
    // Past the overflow point of cosh 3R only the sign matters; the scaled value carries it.
    let g1 = match g1_value(r) {
        Ok(v) => v,
        Err(Error::Overflow(_)) => g1_scaled(r)?,
        Err(e) => return Err(e),
    };
    Ok(RadiusRow { radius: r, e1: e.e1, e2: e.e2, e3: e.e3, g1 })
}

/// Evaluates every sign claim over the grid. Rows come back in grid order.
pub fn sign_sweep(grid: &SweepGrid) -> Result<SignSweepReport> {
    if grid.betas.is_empty() || grid.sigma_tildes.is_empty() {
        return Err(Error::EmptyGrid("beta and sigma_tilde grids must be nonempty".into()));
    }
    let points: Vec<(f64, f64)> = grid
        .betas
        .iter()
        .flat_map(|&b| grid.sigma_tildes.iter().map(move |&s| (b, s)))
        .collect();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(b, s)| sweep_point(b, s, grid.gamma))
        .collect::<Result<_>>()?;
    let radius_rows: Vec<RadiusRow> = grid.radii.par_iter().map(|&r| radius_point(r)).collect::<Result<_>>()?;

    let neg = |v: f64| v < 0.0;
    let all_negative = NegativeFlags {
        e1: rows.iter().all(|r| neg(r.e1)) && radius_rows.iter().all(|r| neg(r.e1)),
        e2: rows.iter().all(|r| neg(r.e2)) && radius_rows.iter().all(|r| neg(r.e2)),
        e3: rows.iter().all(|r| neg(r.e3)) && radius_rows.iter().all(|r| neg(r.e3)),
        g1: rows.iter().all(|r| neg(r.g1)) && radius_rows.iter().all(|r| neg(r.g1)),
        slope: rows.iter().all(|r| neg(r.slope) && neg(r.a)),
    };
    let first_failure = rows
        .iter()
        .find(|r| !(neg(r.e1) && neg(r.e2) && neg(r.e3) && neg(r.g1) && neg(r.slope) && neg(r.a)))
        .map(|r| format!("beta = {}, sigma_tilde = {}, R = {}", r.beta, r.sigma_tilde, r.radius))
        .or_else(|| {
            radius_rows
                .iter()
                .find(|r| !(neg(r.e1) && neg(r.e2) && neg(r.e3) && neg(r.g1)))
                .map(|r| format!("R = {}", r.radius))
        });
    Ok(SignSweepReport { grid: grid.clone(), rows, radius_rows, all_negative, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / x.abs().max(y.abs())
    }

    fn radii() -> impl Iterator<Item = f64> {
        (1..=400).map(|i| i as f64 * 0.125)
    }

    #[test]
    fn reference_e_values() {
        let r = 2.166_026_975_179_906;
        let e = e_coeffs(r).unwrap();
        assert!(rel(e.e1, -0.127_781_708_390_157_27) < 1e-11);
        assert!(rel(e.e2, -1.016_628_304_235_310_2) < 1e-11);
        assert!(rel(e.e3, -1.042_766_098_811_897) < 1e-11);
    }

    #[test]
    fn e1_two_forms() {
        for r in radii() {
            let a = e_coeffs(r).unwrap().e1;
            let b = e1_unreduced(r).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-3), "R = {r}: {a} vs {b}");
        }
    }

    #[test]
    fn e2_matches_hyperbolic_quotient() {
        for i in 0..=95 {
            let r = 0.5 + 0.1 * i as f64;
            let a = e_coeffs(r).unwrap().e2;
            let b = e2_from_g1(r).unwrap();
            assert!(rel(a, b) <= 1e-9, "R = {r}: {a} vs {b}");
        }
    }

    #[test]
    fn e_coefficients_negative() {
        for r in radii().chain([1e-3, 1e-2, 80.0, 150.0]) {
            let e = e_coeffs(r).unwrap();
            assert!(e.e1 < 0.0 && e.e2 < 0.0 && e.e3 < 0.0, "R = {r}: {e:?}");
        }
        assert!(matches!(e_coeffs(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn e3_decomposition_terms() {
        for r in radii() {
            let d = e3_decomposition(r).unwrap();
            assert!(d.all_positive(), "R = {r}");
            let e3 = e_coeffs(r).unwrap().e3;
            assert!((d.recombine() - e3).abs() <= 1e-12 * e3.abs());
        }
        // near zero the 24 P_1 term dominates: E_3 ≈ -12 P_1 / R with P_1 → 1/5
        let r = 1e-3;
        let e3 = e_coeffs(r).unwrap().e3;
        assert!(rel(e3, -12.0 / (5.0 * r)) < 1e-3);
    }

    #[test]
    fn g1_closed_negative_and_guarded() {
        for i in 1..=200 {
            let r = 0.25 * i as f64;
            assert!(g1_value(r).unwrap() < 0.0, "R = {r}");
            assert!(g1_scaled(r).unwrap() < 0.0, "R = {r}");
        }
        assert!(matches!(g1_closed(301.0), Err(Error::Overflow(_))));
        assert!(matches!(g1_closed(250.0), Err(Error::Overflow(_))));
        assert!(g1_scaled(299.0).unwrap() < 0.0);
    }

    #[test]
    fn g1_scaled_agrees_with_closed() {
        for r in [0.5, 1.0, 7.0, 30.0, 200.0] {
            let a = g1_closed(r).unwrap() * (-3.0 * r).exp();
            assert!(rel(a, g1_scaled(r).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn series_matches_closed_form() {
        for i in 0..=95 {
            let r = 0.5 + 0.1 * i as f64;
            let s = g1_series(r, 60).unwrap();
            let c = g1_closed(r).unwrap();
            assert!(rel(s.value, c) <= 1e-8, "R = {r}: {} vs {c}", s.value);
            assert!(s.tail_estimate < 1e-8 * c.abs());
        }
    }

    #[test]
    fn series_small_radius_behaviour() {
        assert_eq!(g1_series(0.0, 10).unwrap().value, 0.0);
        // first nonzero term is n = 7
        let r: f64 = 0.1;
        let lead = -4.0 * 7.0 * r.powi(15) / 1_307_674_368_000.0 * 656_308_224.0;
        assert!(rel(g1_series(r, 60).unwrap().value, lead) < 1e-2);
        // closed form is only good to an absolute tolerance scaled by its largest summand here
        let c = g1_closed(0.3).unwrap();
        assert!((c - g1_series(0.3, 60).unwrap().value).abs() < 1e-12 * 1269.0 * 3.0 * 0.3 * 3.0_f64.cosh());
        assert!(matches!(g1_series(21.0, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn partial_sums_decrease() {
        for r in [0.5, 2.0, 10.0, 20.0] {
            let s = g1_partial_sums(r, 60).unwrap();
            assert!(s.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn exact_terms() {
        let t = series_polys(4).unwrap();
        assert_eq!((t.a_n, t.b_n, t.combined), (-16767, 621, 0));
        assert_eq!(series_polys(7).unwrap().combined, 656_308_224);
        assert_eq!(series_polys(17).unwrap().combined, 4_609_555_109_351_370_768_384);
        assert!(matches!(series_polys(3), Err(Error::Domain(_))));
        assert!(matches!(series_polys(60), Err(Error::Overflow(_))));
    }

    #[test]
    fn table_matches_published() {
        let rows = verify_table1(&SeriesPolys::default()).unwrap();
        assert_eq!(rows.len(), 14);
        assert_eq!(rows[4].combined, 32_037_857_280);
        assert_eq!(rows[8].combined, 7_180_490_438_922_240);
        assert!(rows[..3].iter().all(|r| r.combined == 0));
        assert!(rows[3..].iter().all(|r| r.combined > 0));
    }

    #[test]
    fn corrupted_table_is_rejected() {
        let bad = SeriesPolys::default().corrupted(3, 1);
        assert!(matches!(verify_table1(&bad), Err(Error::CertificateViolation(_))));
        assert!(verify_series_against_closed_form(&bad).is_err());
        assert!(tail_positivity(&bad).is_err());
    }

    #[test]
    fn low_orders_cancel() {
        let recs = low_order_cancellation().unwrap();
        assert_eq!(recs.iter().map(|r| r.power).collect::<Vec<_>>(), vec![1, 3, 5, 7]);
        // R³ bracket written out by hand over 5040
        let r3 = -1269 * 2520 + 741 * 5040 + 423 * 27 * 2520 + 317 * 3 * 5040 + 1269 * 840
            - 648 * 5040
            - 423 * 27 * 840
            - 1476 * 3 * 5040;
        assert_eq!(r3, 0);
    }

    #[test]
    fn closed_form_taylor_matches_series_polynomials() {
        verify_series_against_closed_form(&SeriesPolys::default()).unwrap();
        // and the first nonvanishing float coefficient agrees with the derivative of the closed form
        assert_ne!(g1_taylor_scaled(7).unwrap(), 0);
    }

    #[test]
    fn tail_brackets_nonnegative() {
        let t = tail_positivity(&SeriesPolys::default()).unwrap();
        assert_eq!(t.factors.len(), 6);
        assert_eq!(t.zero_at_18, vec!["b"]);
        let polys = SeriesPolys::default();
        for n in 18..=40u32 {
            assert!(polys.combined_f64(n) > 0.0);
        }
    }

    #[test]
    fn sweep_default_grid() {
        let rep = sign_sweep(&SweepGrid::default()).unwrap();
        assert_eq!(rep.rows.len(), 36);
        assert!(rep.passed(), "{:?}", rep.first_failure);
        assert_eq!(rep.rows[0].beta, 0.1);
        assert_eq!(rep.rows[1].sigma_tilde, 0.2);
    }

    #[test]
    fn sweep_edge_cases() {
        let single = SweepGrid { betas: vec![1.0], sigma_tildes: vec![0.5], gamma: 1.0, radii: vec![] };
        assert_eq!(sign_sweep(&single).unwrap().rows.len(), 1);
        let empty = SweepGrid { betas: vec![], ..single.clone() };
        assert!(matches!(sign_sweep(&empty), Err(Error::EmptyGrid(_))));
        let bad = SweepGrid { sigma_tildes: vec![1.2], ..single };
        assert!(matches!(sign_sweep(&bad), Err(Error::InvalidParams(_))));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn e_coefficients_negative_anywhere(r in 1e-3f64..150.0) {
                let e = e_coeffs(r).unwrap();
                prop_assert!(e.e1 < 0.0 && e.e2 < 0.0 && e.e3 < 0.0);
                prop_assert!(e3_decomposition(r).unwrap().all_positive());
            }

            #[test]
            fn g1_negative_anywhere(r in 0.01f64..299.0) {
                prop_assert!(g1_scaled(r).unwrap() < 0.0 || r < 0.5);
                if r <= SERIES_MAX_RADIUS {
                    prop_assert!(g1_series(r, 60).unwrap().value < 0.0);
                }
            }
        }
    }
}
