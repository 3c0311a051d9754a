//! The constant `kappa(sigma, tau) = g(1/rho)^{-rho}` in `lambda_n ~ kappa n^{-rho}`,
//! where `g(s) = prod_p g_p(s)` and `g_p(s) = (1 - p^{-rho s}) sum_k lambda_k(E_p)^s`.

use crate::arith::{zeta_real, SpectralParams};
use crate::error::{Error, Result};
use crate::global::GlobalSpectrumTable;
use crate::local::{local_spectrum, LocalSpectrum};
use crate::numeric::{exp_integral_e1, CompensatedSum};

/// `s_0 = max(1/(2 rho), (2 - tau)/(2 rho))`; the Euler product converges for `s > s_0`.
pub fn convergence_threshold(params: &SpectralParams) -> f64 {
    let rho = params.rho();
    (1.0 / (2.0 * rho)).max((2.0 - params.tau()) / (2.0 * rho))
}

/// Exponent of the decay `|g_p(1/rho) - 1| = O(p^{-alpha})`.
pub fn tail_exponent(params: &SpectralParams) -> f64 {
    let (tau, rho) = (params.tau(), params.rho());
    (tau + rho).min(2.0).min(1.0 + tau / 2.0)
}

/// `g_p(s)` from an already computed local spectrum.
pub fn g_p_from_spectrum(spectrum: &LocalSpectrum, s: f64) -> Result<f64> {
    let params = &spectrum.params;
    let s0 = convergence_threshold(params);
    if !(s > s0) {
        return Err(Error::InvalidArgument(format!("s = {s} must exceed s_0 = {s0}")));
    }
    let mut sum = CompensatedSum::new();
    for &l in &spectrum.eigenvalues {
        let term = l.powf(s);
        if term < 1e-16 * sum.value() {
            break;
        }
        sum.add(term);
    }
    Ok(-(-params.rho() * s * spectrum.p.ln()).exp_m1() * sum.value())
}

/// `g_p(s)` at a single `p`.
pub fn g_p_at(p: f64, params: &SpectralParams, s: f64, floor: f64) -> Result<f64> {
    g_p_from_spectrum(&local_spectrum(p, params, floor)?, s)
}

/// Euler-product evaluation of `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaComputation {
    pub params: SpectralParams,
    /// Evaluation point `1/rho`.
    pub s: f64,
    pub s0: f64,
    pub p_max: u64,
    /// `(p, g_p(1/rho))` for every prime `p <= p_max`.
    pub factors: Vec<(u64, f64)>,
    /// `ln prod_{p <= p_max} g_p`.
    pub log_g_partial: f64,
    /// Estimated `ln prod_{p > p_max} g_p`.
    pub log_tail: f64,
    /// Fitted `C` in `g_p - 1 ~ C p^{-alpha}` over the top decade of primes.
    pub tail_constant: f64,
    pub tail_exponent: f64,
    /// `kappa` with the tail estimate applied.
    pub kappa: f64,
    /// `kappa` from the partial product alone.
    pub kappa_partial: f64,
    /// Empirical (non-rigorous) uncertainty of `kappa`.
    pub uncertainty: f64,
}

/// `kappa` from the primes up to `p_max`, with the prime tail
/// `sum_{p > P} C p^{-alpha} ~ C E_1((alpha - 1) ln P)` estimated from a fit
/// over `P/10 < p <= P`. The uncertainty is ten times the same integral taken
/// with the largest `|C|` seen in the fit window.
pub fn kappa_numeric(params: &SpectralParams, p_max: u64, floor: f64) -> Result<KappaComputation> {
    let table = GlobalSpectrumTable::build(params, p_max, floor)?;
    kappa_from_table(&table)
}

pub fn kappa_from_table(table: &GlobalSpectrumTable) -> Result<KappaComputation> {
    let params = *table.params();
    let rho = params.rho();
    let s = 1.0 / rho;
    let factors: Vec<(u64, f64)> = table
        .primes()
        .iter()
        .zip(table.locals())
        .map(|(&p, l)| g_p_from_spectrum(l, s).map(|g| (p, g)))
        .collect::<Result<_>>()?;
    let log_g: CompensatedSum = factors.iter().map(|&(_, g)| g.ln()).collect();
    let log_g_partial = log_g.value();

    let alpha = tail_exponent(&params);
    let p_max = table.p_max();
    let window_start = p_max / 10;
    let scaled: Vec<f64> = factors
        .iter()
        .filter(|&&(p, _)| p > window_start)
        .map(|&(p, g)| (g - 1.0) * (p as f64).powf(alpha))
        .collect();
    let (tail_constant, c_max) = if scaled.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        (mean, scaled.iter().fold(0.0f64, |m, c| m.max(c.abs())))
    };
    let e1 = exp_integral_e1((alpha - 1.0) * (p_max as f64).ln());
    let log_tail = tail_constant * e1;
    let log_uncertainty = 10.0 * c_max * e1;

    let kappa = (-rho * (log_g_partial + log_tail)).exp();
    let kappa_partial = (-rho * log_g_partial).exp();
    let rounding = 1e-12 * kappa;
    Ok(KappaComputation {
        params,
        s,
        s0: convergence_threshold(&params),
        p_max,
        factors,
        log_g_partial,
        log_tail,
        tail_constant,
        tail_exponent: alpha,
        kappa,
        kappa_partial,
        uncertainty: kappa * rho * log_uncertainty + rounding,
    })
}

/// Closed forms: `kappa = 1` at `rho = 1`, `sqrt(zeta(2 + 4 sigma)) / zeta(1 + 2 sigma)` at `rho = 1/2`.
pub fn kappa_closed_form(params: &SpectralParams) -> Result<f64> {
    params.require_full_regime()?;
    let rho = params.rho();
    if (rho - 1.0).abs() <= 1e-12 {
        return Ok(1.0);
    }
    if (rho - 0.5).abs() <= 1e-12 {
        let sigma = params.sigma();
        if sigma <= 0.0 {
            return Err(params.invalid("the rho = 1/2 closed form needs sigma > 0"));
        }
        return Ok(zeta_real(2.0 + 4.0 * sigma)?.sqrt() / zeta_real(1.0 + 2.0 * sigma)?);
    }
    Err(Error::NoClosedForm { rho })
}
