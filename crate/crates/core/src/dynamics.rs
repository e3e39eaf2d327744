//! Linearized shape dynamics `∂R̃/∂t = -H(R̃, μ)` in spectral coordinates, and the
//! first-order splitting of the eigenvalue-0 cluster along the `n = 2` branch.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bifurcation;
use crate::error::{Error, Result};
use crate::stationary::RadialEquilibrium;

pub const DEFAULT_N_MAX: usize = 16;
/// Lower bound on RK4 steps per run.
pub const MIN_RK4_STEPS: usize = 1000;
/// Largest `|λ| h` allowed for RK4.
pub const RK4_MAX_LAMBDA_STEP: f64 = 0.01;

/// Mode amplitudes `A_{n,m}` at one time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeState {
    pub time: f64,
    pub amplitudes: BTreeMap<(usize, i32), f64>,
}

impl ModeState {
    pub fn new(amplitudes: impl IntoIterator<Item = ((usize, i32), f64)>) -> Result<Self> {
        let amplitudes: BTreeMap<_, _> = amplitudes.into_iter().collect();
        for (&(n, m), &a) in &amplitudes {
            if m.unsigned_abs() as usize > n {
                return Err(Error::Domain(format!("mode ({n}, {m}) has |m| > n")));
            }
            if !a.is_finite() {
                return Err(Error::Domain(format!("mode ({n}, {m}) has non-finite amplitude")));
            }
        }
        Ok(Self { time: 0.0, amplitudes })
    }

    pub fn get(&self, n: usize, m: i32) -> f64 {
        self.amplitudes.get(&(n, m)).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Exact,
    Rk4,
}

/// Growth rates `λ_n = B_n (μ - μ_n)` of `-H` indexed by `n`, with `λ_0` unused and `λ_1 = 0`.
pub fn mode_rates(eq: &RadialEquilibrium, mu: f64, n_max: usize) -> Result<Vec<f64>> {
    let mut rates = vec![f64::NAN; n_max + 1];
    for s in bifurcation::spectrum_neg_h(eq, mu, n_max)? {
        rates[s.n] = s.lambda;
    }
    Ok(rates)
}

fn rk4_steps(max_rate: f64, t: f64) -> usize {
    let needed = (max_rate * t / RK4_MAX_LAMBDA_STEP).ceil();
    if needed.is_finite() {
        MIN_RK4_STEPS.max(needed as usize)
    } else {
        MIN_RK4_STEPS
    }
}

/// Advances `A' = λ A` for one scalar mode.
pub fn evolve_scalar(a0: f64, rate: f64, t: f64, method: Integrator) -> f64 {
    match method {
        Integrator::Exact => a0 * (rate * t).exp(),
        Integrator::Rk4 => {
            let steps = rk4_steps(rate.abs(), t);
            let h = t / steps as f64;
            let z = rate * h;
            // one RK4 step of a linear ODE multiplies by the degree-4 Taylor polynomial
            let g = 1.0 + z * (1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0)));
            (0..steps).fold(a0, |a, _| a * g)
        }
    }
}

/// Evolves every mode of `state` for time `t` at aggressiveness `mu`.
pub fn evolve_modes(
    eq: &RadialEquilibrium,
    state: &ModeState,
    mu: f64,
    t: f64,
    method: Integrator,
    n_max: usize,
) -> Result<ModeState> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("duration must be non-negative, got {t}")));
    }
    let rates = mode_rates(eq, mu, n_max)?;
    let mut amplitudes = BTreeMap::new();
    for (&(n, m), &a) in &state.amplitudes {
        if n == 0 || n > n_max {
            return Err(Error::Domain(format!("mode n = {n} outside [1, {n_max}]")));
        }
        amplitudes.insert((n, m), evolve_scalar(a, rates[n], t, method));
    }
    Ok(ModeState { time: state.time + t, amplitudes })
}

/// Samples an evolution at `samples + 1` equally spaced times in `[0, t_end]`.
pub fn simulate(
    eq: &RadialEquilibrium,
    initial: &ModeState,
    mu: f64,
    t_end: f64,
    samples: usize,
    method: Integrator,
    n_max: usize,
) -> Result<Vec<ModeState>> {
    if samples == 0 {
        return Err(Error::Domain("need at least one sample interval".into()));
    }
    (0..=samples)
        .map(|i| {
            let t = t_end * i as f64 / samples as f64;
            let mut s = evolve_modes(eq, initial, mu, t, method, n_max)?;
            s.time = initial.time + t;
            Ok(s)
        })
        .collect()
}

/// Basis of the eigenvalue-0 cluster, in display order.
pub const ZERO_GROUP_BASIS: [(usize, i32); 8] = [(1, 0), (1, 1), (1, -1), (2, 0), (2, 1), (2, -1), (2, 2), (2, -2)];

/// First-order perturbation of `H` restricted to the eigenvalue-0 cluster; it is diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroGroupMatrix {
    pub basis: [(usize, i32); 8],
    pub diagonal: [f64; 8],
}

impl ZeroGroupMatrix {
    pub fn trace(&self) -> f64 {
        self.diagonal.iter().sum()
    }

    pub fn dense(&self) -> [[f64; 8]; 8] {
        let mut m = [[0.0; 8]; 8];
        for (i, &d) in self.diagonal.iter().enumerate() {
            m[i][i] = d;
        }
        m
    }
}

/// Diagonal entries are `(b_m - ½) a` on the `n = 2` modes and zero on translations.
pub fn zero_group_matrix(a: f64) -> ZeroGroupMatrix {
    if a >= 0.0 {
        log::warn!("zero-group matrix built with a = {a} >= 0; the slope certificate expects a < 0");
    }
    let mut diagonal = [0.0; 8];
    for (i, &(n, m)) in ZERO_GROUP_BASIS.iter().enumerate() {
        if n == 2 {
            let b = crate::harmonics::b_m_closed(m);
            diagonal[i] = (b - 0.5) * a + 0.0;
        }
    }
    // b_m - ½ is 0 for m = ±1 and the entries carry no sign noise
    ZeroGroupMatrix { basis: ZERO_GROUP_BASIS, diagonal }
}

/// `(λ_1'(0), λ_2'(0)) = (a/2, -3a/2)` for the perturbed eigenvalues of `H`.
pub fn zero_group_eigen_derivs(a: f64) -> (f64, f64) {
    (0.5 * a, -1.5 * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationClass {
    Axisymmetric,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Neutral,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// Largest first-order growth rate of `-H` among the exposed non-translation modes.
    pub leading_rate: f64,
}

fn leading_rate(eps: f64, class: PerturbationClass, a: f64) -> f64 {
    let (d1, d2) = zero_group_eigen_derivs(a);
    match class {
        // exchange of stability along the transcritical branch: stable side is ε > 0
        PerturbationClass::Axisymmetric => d1 * eps + 0.0,
        // -H flips the sign of each eigenvalue
        PerturbationClass::Full => (-d1 * eps + 0.0).max(-d2 * eps + 0.0),
    }
}

fn classify(rate: f64) -> Verdict {
    if rate > 0.0 {
        Verdict::Unstable
    } else if rate < 0.0 {
        Verdict::Stable
    } else {
        Verdict::Neutral
    }
}

/// First-order-in-`ε` verdict for the bifurcating solution at `ε`.
pub fn stability_verdict(eps: f64, class: PerturbationClass, a: f64) -> Result<StabilityVerdict> {
    if !(a < 0.0) {
        return Err(Error::CertificateViolation(format!("stability analysis needs a < 0, got {a}")));
    }
    let r = leading_rate(eps, class, a);
    Ok(StabilityVerdict { verdict: classify(r), leading_rate: r })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramRow {
    pub eps: f64,
    pub axisym_rate: f64,
    pub full_rate: f64,
    pub axisym_verdict: Verdict,
    pub full_verdict: Verdict,
}

/// Rates on `samples` points symmetric about zero in `[-eps_max, eps_max]`.
pub fn stability_diagram(eps_max: f64, a: f64, samples: usize) -> Result<Vec<DiagramRow>> {
    if !(eps_max > 0.0) || samples < 2 {
        return Err(Error::Domain(format!(
            "diagram needs eps_max > 0 and at least 2 samples, got {eps_max} and {samples}"
        )));
    }
    let half = (samples - 1) as f64;
    (0..samples)
        .map(|i| {
            // 2i - (samples-1) is exact and antisymmetric in i
            let eps = eps_max * (2.0 * i as f64 - half) / half;
            let ax = stability_verdict(eps, PerturbationClass::Axisymmetric, a)?;
            let full = stability_verdict(eps, PerturbationClass::Full, a)?;
            Ok(DiagramRow {
                eps,
                axisym_rate: ax.leading_rate,
                full_rate: full.leading_rate,
                axisym_verdict: ax.verdict,
                full_verdict: full.verdict,
            })
        })
        .collect()
}
