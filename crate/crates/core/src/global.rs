//! The spectrum of `E(sigma, tau)` assembled from local spectra through the
//! product formula `lambda_n = prod_p lambda_{k_p}(E_p)`, `n = prod_p p^{k_p}`.

use rayon::prelude::*;

use crate::arith::{entry_e, factorize, primes_up_to, FactoredIndex, SpectralParams, SpfTable};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, SymMatrix};
use crate::local::{hs_norm_sq_bound, local_spectrum, LocalSpectrum};
use crate::numeric::CompensatedSum;

/// Local spectra for every prime `p <= p_max`, plus the base product
/// `Lambda0 = prod_{p <= p_max} lambda_0(E_p)`.
#[derive(Debug, Clone)]
pub struct GlobalSpectrumTable {
    params: SpectralParams,
    p_max: u64,
    floor: f64,
    primes: Vec<u64>,
    locals: Vec<LocalSpectrum>,
    log_lambda0: f64,
    tail: std::result::Result<f64, f64>,
}

impl GlobalSpectrumTable {
    /// Diagonalizes `E_p` for all primes up to `p_max` (in parallel) and forms
    /// the base product with a compensated sum of logarithms, ascending in `p`.
    pub fn build(params: &SpectralParams, p_max: u64, floor: f64) -> Result<Self> {
        params.require_full_regime()?;
        if p_max < 2 {
            return Err(Error::InvalidArgument(format!("p_max must be at least 2, got {p_max}")));
        }
        let primes = primes_up_to(p_max);
        let locals: Vec<LocalSpectrum> = primes
            .par_iter()
            .map(|&p| local_spectrum(p as f64, params, floor))
            .collect::<Result<_>>()?;
        Ok(Self::assemble(params, p_max, floor, primes, locals))
    }

    /// Table from previously computed local spectra, one per prime `<= p_max` in ascending order.
    pub fn from_locals(
        params: &SpectralParams,
        p_max: u64,
        floor: f64,
        locals: Vec<LocalSpectrum>,
    ) -> Result<Self> {
        params.require_full_regime()?;
        let primes = primes_up_to(p_max);
        let consistent = primes.len() == locals.len()
            && primes.iter().zip(&locals).all(|(&p, l)| {
                l.p == p as f64 && l.params == *params && l.floor == floor && !l.eigenvalues.is_empty()
            });
        if !consistent {
            return Err(Error::InvalidArgument(format!(
                "local spectra do not match the primes up to {p_max} at {params}, floor {floor}"
            )));
        }
        Ok(Self::assemble(params, p_max, floor, primes, locals))
    }

    fn assemble(
        params: &SpectralParams,
        p_max: u64,
        floor: f64,
        primes: Vec<u64>,
        locals: Vec<LocalSpectrum>,
    ) -> Self {
        let log_lambda0: CompensatedSum = locals.iter().map(|l| l.top().ln()).collect();
        Self {
            params: *params,
            p_max,
            floor,
            primes,
            locals,
            log_lambda0: log_lambda0.value(),
            tail: tail_bound(params, p_max),
        }
    }

    pub fn params(&self) -> &SpectralParams {
        &self.params
    }

    pub fn p_max(&self) -> u64 {
        self.p_max
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn locals(&self) -> &[LocalSpectrum] {
        &self.locals
    }

    pub fn local(&self, p: u64) -> Option<&LocalSpectrum> {
        self.primes.binary_search(&p).ok().map(|i| &self.locals[i])
    }

    /// `Lambda0` over the primes in the table.
    pub fn lambda0(&self) -> f64 {
        self.log_lambda0.exp()
    }

    pub fn log_lambda0(&self) -> f64 {
        self.log_lambda0
    }

    /// Certified bound on `ln(Lambda_inf / Lambda0)` from the primes beyond `p_max`.
    ///
    /// Fails with [`Error::CertificateUnavailable`] when `h_{p_max} >= 1`.
    pub fn t_bound(&self) -> Result<f64> {
        self.tail.map_err(|h| Error::CertificateUnavailable { p: self.p_max as f64, h })
    }

    /// `lambda_n = Lambda0 * prod_{p | n} lambda_{k_p}(E_p) / lambda_0(E_p)`.
    pub fn lambda_of(&self, n: u64) -> Result<GlobalEigenvalue> {
        if n == 0 {
            return Err(Error::InvalidArgument("eigenvalues are indexed from n = 1".into()));
        }
        let factored = factorize(n);
        let mut log = self.log_lambda0;
        for (p, k) in factored.iter() {
            log += self.log_ratio(n, p, k)?;
        }
        Ok(GlobalEigenvalue { n, factored, value: log.exp() })
    }

    fn log_ratio(&self, n: u64, p: u64, k: u32) -> Result<f64> {
        let local = self
            .local(p)
            .ok_or(Error::PrimeBeyondCutoff { n, p, p_max: self.p_max })?;
        local
            .ratio(k as usize)
            .map(f64::ln)
            .ok_or(Error::BelowFloor { p: p as f64, k: k as usize })
    }

    /// `lambda_n` for `n = 1..=n_max`, indexed by `n - 1`. Indices needing a
    /// local eigenvalue below the floor get the value 0.
    pub fn values_up_to(&self, n_max: u64) -> Result<Vec<f64>> {
        if n_max > self.p_max {
            return Err(Error::EnumerationTooLarge { required: n_max, available: self.p_max });
        }
        if n_max == 0 {
            return Ok(Vec::new());
        }
        let spf = SpfTable::new(n_max as u32);
        let ratios: Vec<Vec<f64>> = self
            .locals
            .iter()
            .map(|l| l.eigenvalues.iter().map(|v| (v / l.top()).ln()).collect())
            .collect();
        Ok((1..=n_max)
            .into_par_iter()
            .map(|n| {
                let mut log = self.log_lambda0;
                let mut below = false;
                spf.for_each_prime_power(n, |p, k| {
                    let i = self.primes.binary_search(&p).expect("p <= n_max <= p_max");
                    match ratios[i].get(k as usize) {
                        Some(r) => log += r,
                        None => below = true,
                    }
                });
                if below {
                    0.0
                } else {
                    log.exp()
                }
            })
            .collect())
    }

    /// The eigenvalues `lambda_1..lambda_{n_max}` sorted descending, ties by ascending `n`.
    pub fn enumerate_spectrum(&self, n_max: u64) -> Result<Vec<GlobalEigenvalue>> {
        let sorted = self.sorted_spectrum(n_max)?;
        let spf = SpfTable::new(n_max.max(1) as u32);
        Ok(sorted
            .entries
            .into_iter()
            .map(|(n, value)| GlobalEigenvalue { n, factored: spf.factorize(n), value })
            .collect())
    }

    pub fn sorted_spectrum(&self, n_max: u64) -> Result<SortedSpectrum> {
        let values = self.values_up_to(n_max)?;
        Ok(SortedSpectrum::from_values(values))
    }

    /// `C*` with `lambda_n <= C* Lambda0 n^{-rho}` for every `n`.
    ///
    /// Interlacing gives `lambda_k(E_p) <= p^{-rho k} lambda_0(E_p)`, hence
    /// `lambda_n <= Lambda_inf n^{-rho} <= e^{t_bound} Lambda0 n^{-rho}`.
    pub fn envelope_constant(&self) -> Result<f64> {
        Ok(self.t_bound()?.exp() * (1.0 + 1e-9))
    }

    /// `N_cut = ceil((C* Lambda0 t)^{1/rho})`: no `n > N_cut` has `lambda_n > 1/t`.
    pub fn certified_cutoff(&self, t: f64) -> Result<(u64, f64)> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("t must be positive and finite, got {t}")));
        }
        let c_star = self.envelope_constant()?;
        let raw = (c_star * self.lambda0() * t).powf(1.0 / self.params.rho()).ceil();
        if raw > self.p_max as f64 {
            return Err(Error::EnumerationTooLarge {
                required: if raw >= u64::MAX as f64 { u64::MAX } else { raw as u64 },
                available: self.p_max,
            });
        }
        Ok(((raw as u64).max(1), c_star))
    }

    /// `mu(t) = #{n : lambda_n > 1/t}` with a certified enumeration cutoff.
    pub fn counting_mu(&self, t: f64) -> Result<CountingResult> {
        let (n_cut, c_star) = self.certified_cutoff(t)?;
        let threshold = 1.0 / t;
        let mu = self.values_up_to(n_cut)?.iter().filter(|&&v| v > threshold).count() as u64;
        Ok(CountingResult { t, mu, certified_cutoff: n_cut, envelope_constant: c_star })
    }

    /// `mu` at every `t` in `ts`, sharing one enumeration up to the largest cutoff.
    pub fn counting_curve(&self, ts: &[f64]) -> Result<Vec<CountingResult>> {
        let cuts: Vec<(u64, f64)> = ts.iter().map(|&t| self.certified_cutoff(t)).collect::<Result<_>>()?;
        let n_max = cuts.iter().map(|c| c.0).max().unwrap_or(1);
        let sorted = self.sorted_spectrum(n_max)?;
        Ok(ts
            .iter()
            .zip(cuts)
            .map(|(&t, (n_cut, c_star))| CountingResult {
                t,
                mu: sorted.count_above(1.0 / t),
                certified_cutoff: n_cut,
                envelope_constant: c_star,
            })
            .collect())
    }
}

/// `t_bound = C_P P^{1-(tau+rho)} / (tau+rho-1)` bounds
/// `sum_{m > P} ||a_m||^2 / (1 - h_m)`, with `C_P = 1/((1 - P^{-(tau+rho)})(1 - h_P))`.
/// `Err(h_P)` when `h_P >= 1`.
fn tail_bound(params: &SpectralParams, p_max: u64) -> std::result::Result<f64, f64> {
    let p = p_max as f64;
    let e = params.tau() + params.rho();
    let h = p.powf(-params.rho()) * hs_norm_sq_bound(p, params).sqrt();
    if h >= 1.0 {
        return Err(h);
    }
    let c = 1.0 / ((1.0 - p.powf(-e)) * (1.0 - h));
    Ok(c * p.powf(1.0 - e) / (e - 1.0))
}

/// `(Lambda0, t_bound)` for the primes up to `p_max`.
pub fn base_product(params: &SpectralParams, p_max: u64, floor: f64) -> Result<(f64, f64)> {
    let table = GlobalSpectrumTable::build(params, p_max, floor)?;
    Ok((table.lambda0(), table.t_bound()?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalEigenvalue {
    pub n: u64,
    pub factored: FactoredIndex,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingResult {
    pub t: f64,
    pub mu: u64,
    pub certified_cutoff: u64,
    pub envelope_constant: f64,
}

/// `(n, lambda_n)` pairs sorted by value descending, ties by ascending `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSpectrum {
    pub entries: Vec<(u64, f64)>,
}

impl SortedSpectrum {
    /// `values[i]` is `lambda_{i+1}`.
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut entries: Vec<(u64, f64)> =
            values.into_iter().enumerate().map(|(i, v)| (i as u64 + 1, v)).collect();
        entries.par_sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries strictly greater than `lambda`.
    pub fn count_above(&self, lambda: f64) -> u64 {
        self.entries.partition_point(|e| e.1 > lambda) as u64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    /// Median of `rank^rho * lambda_(rank)` over ranks in `[lo, hi]` (1-based).
    pub fn scaled_median(&self, rho: f64, lo: usize, hi: usize) -> Option<f64> {
        let hi = hi.min(self.entries.len());
        if lo == 0 || lo > hi {
            return None;
        }
        let mut scaled: Vec<f64> =
            (lo..=hi).map(|r| (r as f64).powf(rho) * self.entries[r - 1].1).collect();
        scaled.sort_by(f64::total_cmp);
        let m = scaled.len();
        Some(if m % 2 == 1 { scaled[m / 2] } else { 0.5 * (scaled[m / 2 - 1] + scaled[m / 2]) })
    }
}

/// The `n x n` top-left section `{E(n, m)}_{n,m <= N}`.
pub fn finite_section(params: &SpectralParams, n: usize) -> SymMatrix {
    SymMatrix::from_fn(n, |i, j| entry_e(i as u64 + 1, j as u64 + 1, params))
}

/// Descending eigenvalues of the `n x n` finite section.
pub fn finite_section_eigs(params: &SpectralParams, n: usize) -> Result<Vec<f64>> {
    if !params.is_bounded() {
        return Err(params.invalid("finite-section comparison needs the bounded regime"));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("section size must be positive".into()));
    }
    symmetric_eigenvalues(&finite_section(params, n))
}
