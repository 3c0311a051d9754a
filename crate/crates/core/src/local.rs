//! The per-prime factor `E_p(sigma, tau) = { p^{sigma j} p^{-tau max(j,k)} p^{sigma k} }`,
//! `j, k >= 0`, and certified information about its spectrum.
//!
//! `p > 1` may be any real number; prime-indexed callers pass primes.
//!
//! Deleting the first row and column of `E_p` leaves exactly `p^{-rho} E_p`,
//! so Cauchy interlacing gives `lambda_{k+1}(E_p) <= p^{-rho} lambda_k(E_p)`.
//! The same holds for every leading truncation.

use crate::arith::SpectralParams;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, SymMatrix};
use crate::numeric::CompensatedSum;

/// Default floor below which local eigenvalues are discarded.
pub const DEFAULT_FLOOR: f64 = 1e-14;

/// Largest truncation order accepted by [`local_spectrum`].
pub const MAX_TRUNCATION: usize = 512;

/// The `K x K` leading block of `E_p(sigma, tau)`.
pub fn build_local_matrix(p: f64, params: &SpectralParams, order: usize) -> SymMatrix {
    let ln_p = p.ln();
    let (sigma, tau) = (params.sigma(), params.tau());
    SymMatrix::from_fn(order, |j, k| {
        let (j, k) = (j as f64, k as f64);
        ((sigma * (j + k) - tau * j.max(k)) * ln_p).exp()
    })
}

/// Truncation order `K = ceil(ln(floor / 10) / (-rho ln p)) + 2`.
pub fn truncation_order(p: f64, rho: f64, floor: f64) -> usize {
    let raw = ((floor / 10.0).ln() / (-rho * p.ln())).ceil();
    (raw.max(0.0) as usize) + 2
}

/// Truncated eigendecomposition of `E_p(sigma, tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpectrum {
    pub p: f64,
    pub params: SpectralParams,
    pub truncation_order: usize,
    pub floor: f64,
    /// Eigenvalues above `floor`, descending.
    pub eigenvalues: Vec<f64>,
    /// `|<phi_p, e_0>|` for the normalized top eigenvector.
    pub top_overlap: f64,
    /// Hilbert–Schmidt norm of the part of `E_p` outside the `K x K` block;
    /// by Weyl's inequality it bounds the truncation shift of every eigenvalue.
    pub tail_bound: f64,
}

impl LocalSpectrum {
    pub fn lambda(&self, k: usize) -> Option<f64> {
        self.eigenvalues.get(k).copied()
    }

    pub fn top(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `lambda_k / lambda_0`.
    pub fn ratio(&self, k: usize) -> Option<f64> {
        self.lambda(k).map(|l| l / self.eigenvalues[0])
    }
}

/// Spectrum of `E_p` down to `floor`, with the default truncation order.
pub fn local_spectrum(p: f64, params: &SpectralParams, floor: f64) -> Result<LocalSpectrum> {
    params.require_local_regime()?;
    check_p(p)?;
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::InvalidArgument(format!("floor must lie in (0, 1), got {floor}")));
    }
    let order = truncation_order(p, params.rho(), floor);
    if order > MAX_TRUNCATION {
        return Err(Error::InvalidArgument(format!(
            "truncation order {order} at p = {p} exceeds {MAX_TRUNCATION}; raise the floor"
        )));
    }
    local_spectrum_with_order(p, params, order, floor)
}

/// Spectrum of the `order x order` truncation, eigenvalues kept above `floor`.
pub fn local_spectrum_with_order(
    p: f64,
    params: &SpectralParams,
    order: usize,
    floor: f64,
) -> Result<LocalSpectrum> {
    params.require_local_regime()?;
    check_p(p)?;
    if order == 0 {
        return Err(Error::InvalidArgument("truncation order must be positive".into()));
    }
    let matrix = build_local_matrix(p, params, order);
    let dec = jacobi_eigen(&matrix, true)?;
    let top_overlap = dec.vector_component(0, 0).map(f64::abs).unwrap_or(1.0).min(1.0);
    let eigenvalues: Vec<f64> = dec.values.into_iter().take_while(|&l| l > floor).collect();
    Ok(LocalSpectrum {
        p,
        params: *params,
        truncation_order: order,
        floor,
        eigenvalues,
        top_overlap,
        tail_bound: truncation_tail_bound(p, params, order),
    })
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p must be a finite real > 1, got {p}")));
    }
    Ok(())
}

/// Exact `||E_p||_HS^2 = (1 + x) / ((1 - x)(1 - y))`, `x = p^{-(tau+rho)}`, `y = p^{-2 rho}`.
pub fn hs_norm_sq_exact(p: f64, params: &SpectralParams) -> f64 {
    let rho = params.rho();
    let x = p.powf(-(params.tau() + rho));
    let y = p.powf(-2.0 * rho);
    (1.0 + x) / ((1.0 - x) * (1.0 - y))
}

/// Closed upper bound for `||E_p||_HS^2`.
///
/// The bound `2 / ((1 - x^2)(1 - y))` dominates the exact value only while
/// `x <= sqrt(2) - 1`; the maximum of the two is always a valid bound.
pub fn hs_norm_sq_bound(p: f64, params: &SpectralParams) -> f64 {
    let rho = params.rho();
    let x = p.powf(-(params.tau() + rho));
    let y = p.powf(-2.0 * rho);
    let closed = 2.0 / ((1.0 - x * x) * (1.0 - y));
    closed.max(hs_norm_sq_exact(p, params))
}

pub(crate) fn truncation_tail_bound(p: f64, params: &SpectralParams, order: usize) -> f64 {
    let rho = params.rho();
    let k = order as f64;
    let x = p.powf(-(params.tau() + rho));
    // rows/columns >= K: the block p^{-rho K} E_p plus the two coupling blocks
    let corner = p.powf(-2.0 * rho * k) * hs_norm_sq_bound(p, params);
    let head: CompensatedSum = (0..order).map(|j| p.powf(2.0 * params.sigma() * j as f64)).collect();
    let coupling = 2.0 * head.value() * x.powf(k) / (1.0 - x);
    (corner + coupling).sqrt()
}

/// Two-sided envelope `c_lower p^{-rho k} <= lambda_k(E_p) <= c_upper p^{-rho k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichEnvelope {
    pub p: f64,
    pub params: SpectralParams,
    pub a: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    /// `a >= sqrt(q)`: the lower constant carries no information and is clamped to 0.
    pub lower_clamped: bool,
}

impl SandwichEnvelope {
    pub fn lower(&self, k: usize) -> f64 {
        self.c_lower * self.p.powf(-self.params.rho() * k as f64)
    }

    pub fn upper(&self, k: usize) -> f64 {
        self.c_upper * self.p.powf(-self.params.rho() * k as f64)
    }

    /// Whether `lambda` lies in the envelope for index `k`, up to `rel_tol`.
    pub fn contains(&self, k: usize, lambda: f64, rel_tol: f64) -> bool {
        lambda >= self.lower(k) * (1.0 - rel_tol) && lambda <= self.upper(k) * (1.0 + rel_tol)
    }
}

/// Sandwich envelope obtained from the quadratic-form comparison of
/// `E_q(0, 1)` with `D(q^{-k})`, `q = p^tau`, conjugated by `D(p^{sigma k})`.
pub fn sandwich_envelope(p: f64, params: &SpectralParams, a: f64) -> Result<SandwichEnvelope> {
    check_p(p)?;
    if params.tau() <= 0.0 {
        return Err(params.invalid("sandwich envelope needs tau > 0"));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("mixing parameter a must be positive, got {a}")));
    }
    let q = p.powf(params.tau());
    let sq = q.sqrt();
    let base = 1.0 - 1.0 / q;
    let denom_upper = base - 1.0 / (a * sq);
    if denom_upper <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "a = {a} must exceed q^(-1/2) / (1 - 1/q) = {} at q = {q}",
            1.0 / (sq * base)
        )));
    }
    let c_upper = base * (1.0 + a / sq) / denom_upper;
    let lower_clamped = a >= sq;
    let c_lower = if lower_clamped {
        0.0
    } else {
        base * (1.0 - a / sq) / (base + 1.0 / (a * sq))
    };
    Ok(SandwichEnvelope { p, params: *params, a, c_lower, c_upper, lower_clamped })
}

/// Two evaluations of `<E_p(0,1) x, x>`: the direct double sum, and
/// `(1 - 1/p) sum_k p^{-k} |x_0 + ... + x_k|^2` with its geometric tail summed
/// in closed form.
pub fn corner_quadratic_form(p: f64, x: &[f64]) -> (f64, f64) {
    let ln_p = p.ln();
    let mut lhs = CompensatedSum::new();
    for (j, xj) in x.iter().enumerate() {
        for (k, xk) in x.iter().enumerate() {
            lhs.add(xj * xk * (-(j.max(k) as f64) * ln_p).exp());
        }
    }
    let mut rhs = CompensatedSum::new();
    let mut partial = 0.0;
    let w = 1.0 - 1.0 / p;
    for (k, xk) in x.iter().enumerate() {
        partial += xk;
        rhs.add(w * (-(k as f64) * ln_p).exp() * partial * partial);
    }
    // k >= len: the partial sum is frozen, sum_{k>=L} w p^{-k} = p^{-L}
    rhs.add((-(x.len() as f64) * ln_p).exp() * partial * partial);
    (lhs.value(), rhs.value())
}

/// `||a_p||^2 = sum_{k>=1} p^{-2k(tau - sigma)}`.
pub fn a_norm_squared(p: f64, params: &SpectralParams) -> Result<f64> {
    check_p(p)?;
    let gap = params.tau() - params.sigma();
    if gap <= 0.0 {
        return Err(params.invalid("||a_p||^2 diverges unless tau > sigma"));
    }
    let r = p.powf(-2.0 * gap);
    Ok(r / (1.0 - r))
}

/// Rigorous enclosure `lambda_0(E_p) in [1, 1 + bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopEigCertificate {
    pub p: f64,
    pub a_norm_sq: f64,
    /// `h_p = p^{-rho} ||E_p||_HS`, which bounds `||E_p^perp||`.
    pub h: f64,
    pub bound: f64,
}

impl TopEigCertificate {
    pub fn upper(&self) -> f64 {
        1.0 + self.bound
    }

    pub fn contains(&self, lambda0: f64) -> bool {
        lambda0 >= 1.0 && lambda0 <= self.upper()
    }
}

/// `lambda_0 = 1 + <(lambda_0 - E_p^perp)^{-1} a_p, a_p>` with `lambda_0 >= 1`
/// and `||E_p^perp|| <= h_p` gives `lambda_0 <= 1 + ||a_p||^2 / (1 - h_p)`.
///
/// Returns [`Error::CertificateUnavailable`] when `h_p >= 1`.
pub fn top_eig_certificate(p: f64, params: &SpectralParams) -> Result<TopEigCertificate> {
    params.require_local_regime()?;
    let a_norm_sq = a_norm_squared(p, params)?;
    let h = p.powf(-params.rho()) * hs_norm_sq_bound(p, params).sqrt();
    if h >= 1.0 {
        return Err(Error::CertificateUnavailable { p, h });
    }
    Ok(TopEigCertificate { p, a_norm_sq, h, bound: a_norm_sq / (1.0 - h) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(sigma: f64, tau: f64) -> SpectralParams {
        SpectralParams::new(sigma, tau).unwrap()
    }

    #[test]
    fn local_matrix_examples() {
        let m = build_local_matrix(2.0, &params(0.0, 1.0), 3);
        let expected = [[1.0, 0.5, 0.25], [0.5, 0.5, 0.25], [0.25, 0.25, 0.25]];
        for (j, row) in expected.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert_relative_eq!(m.get(j, k), *v, max_relative = 1e-15);
            }
        }
        assert!(m.is_symmetric());

        let pr = params(0.25, 1.5);
        let m3 = build_local_matrix(3.0, &pr, 6);
        assert_relative_eq!(m3.get(0, 1), 0.253_278_561_883_864_16, max_relative = 1e-12);
        for k in 0..6 {
            assert_relative_eq!(m3.get(k, k), 3f64.powf(-pr.rho() * k as f64), max_relative = 1e-14);
        }
    }

    #[test]
    fn truncation_order_formula() {
        // ln(1e-15) / (-1 * ln 2) = 49.83 -> 50 + 2
        assert_eq!(truncation_order(2.0, 1.0, 1e-14), 52);
        assert_eq!(truncation_order(1e6, 1.0, 1e-14), 5);
    }

    #[test]
    fn trace_identity_rho_one() {
        let pr = params(0.25, 1.5);
        for p in [2.0, 3.0, 5.0, 7.0, 11.0, 2.5] {
            let ls = local_spectrum(p, &pr, DEFAULT_FLOOR).unwrap();
            let sum: f64 = ls.eigenvalues.iter().sum();
            assert!((sum - 1.0 / (1.0 - 1.0 / p)).abs() < 1e-10, "p={p}: {sum}");
        }
    }

    #[test]
    fn second_moment_identity_rho_half() {
        for sigma in [0.0, 0.25, 0.4] {
            let pr = params(sigma, 0.5 + 2.0 * sigma);
            for p in [2.0, 3.0, 5.0, 13.0] {
                let ls = local_spectrum(p, &pr, DEFAULT_FLOOR).unwrap();
                let sum_sq: f64 = ls.eigenvalues.iter().map(|l| l * l).sum();
                let lhs = (1.0 - 1.0 / p) * sum_sq;
                let rhs = (1.0 - p.powf(-(2.0 + 4.0 * sigma))) / (1.0 - p.powf(-(1.0 + 2.0 * sigma))).powi(2);
                assert!((lhs - rhs).abs() < 1e-10, "sigma={sigma} p={p}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn eigenvalues_positive_descending_and_interlaced() {
        for (sigma, tau) in [(0.25, 1.5), (0.0, 1.0), (0.25, 1.0), (-0.5, 0.3), (0.4, 1.2)] {
            let pr = params(sigma, tau);
            for p in [2.0, 3.0, 7.0, 1.5, 101.0] {
                let ls = local_spectrum(p, &pr, DEFAULT_FLOOR).unwrap();
                assert!(ls.top() >= 1.0);
                assert!(ls.top_overlap > 0.0 && ls.top_overlap <= 1.0);
                let shrink = p.powf(-pr.rho());
                for w in ls.eigenvalues.windows(2) {
                    assert!(w[1] > 0.0 && w[1] <= w[0]);
                    assert!(w[1] <= shrink * w[0] * (1.0 + 1e-9), "interlacing p={p}");
                }
                let trace: f64 = (0..ls.truncation_order).map(|k| p.powf(-pr.rho() * k as f64)).sum();
                assert!(ls.eigenvalues.iter().sum::<f64>() <= trace * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn truncation_stability() {
        let pr = params(0.25, 1.0);
        for p in [2.0, 5.0, 31.0] {
            let base = local_spectrum(p, &pr, DEFAULT_FLOOR).unwrap();
            let wider =
                local_spectrum_with_order(p, &pr, base.truncation_order + 5, DEFAULT_FLOOR).unwrap();
            assert_eq!(base.eigenvalues.len(), wider.eigenvalues.len());
            for (a, b) in base.eigenvalues.iter().zip(&wider.eigenvalues) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!(base.tail_bound < 1e-6, "tail {}", base.tail_bound);
        }
    }

    #[test]
    fn regime_and_argument_errors() {
        assert!(local_spectrum(2.0, &params(1.0, 1.5), DEFAULT_FLOOR).is_err());
        assert!(local_spectrum(2.0, &params(-0.5, -0.1), DEFAULT_FLOOR).is_err());
        assert!(local_spectrum(1.0, &params(0.25, 1.5), DEFAULT_FLOOR).is_err());
        assert!(local_spectrum(2.0, &params(0.25, 1.5), 1.5).is_err());
    }

    #[test]
    fn sandwich_formula_values() {
        // q = p^tau = 16 with a = 1/2: 0.9375 * 1.125 / 0.4375
        let env = sandwich_envelope(16.0, &params(0.0, 1.0), 0.5).unwrap();
        assert_relative_eq!(env.c_upper, 0.9375 * 1.125 / 0.4375, max_relative = 1e-14);
        assert!(env.c_lower <= 1.0 && env.c_upper >= 1.0);
        let far = sandwich_envelope(1e12, &params(0.0, 1.0), 0.5).unwrap();
        assert!((far.c_upper - 1.0).abs() < 1e-5 && (far.c_lower - 1.0).abs() < 1e-5);
        // a too small: upper denominator non-positive
        assert!(sandwich_envelope(3.0, &params(0.25, 1.5), 0.5).is_err());
        let clamped = sandwich_envelope(3.0, &params(0.25, 1.5), 3.0).unwrap();
        assert!(clamped.lower_clamped && clamped.c_lower == 0.0);
    }

    #[test]
    fn sandwich_contains_computed_eigenvalues() {
        let pr = params(0.25, 1.5);
        for (p, a) in [(5.0, 0.5), (7.0, 0.5), (11.0, 0.5), (101.0, 0.5), (3.0, 1.0), (13.0, 1.0)] {
            let env = sandwich_envelope(p, &pr, a).unwrap();
            let ls = local_spectrum(p, &pr, DEFAULT_FLOOR).unwrap();
            for (k, &l) in ls.eigenvalues.iter().enumerate() {
                assert!(env.contains(k, l, 1e-10), "p={p} k={k}: {} <= {l} <= {}", env.lower(k), env.upper(k));
            }
        }
    }

    #[test]
    fn corner_identity_examples() {
        for p in [2.0, 3.0, 10.0] {
            let (l, r) = corner_quadratic_form(p, &[1.0]);
            assert_relative_eq!(l, 1.0, max_relative = 1e-15);
            assert_relative_eq!(r, 1.0, max_relative = 1e-15);
        }
        let (l, r) = corner_quadratic_form(2.0, &[1.0, 1.0]);
        assert_relative_eq!(l, 2.5, max_relative = 1e-15);
        assert_relative_eq!(r, 2.5, max_relative = 1e-15);
    }

    #[test]
    fn corner_identity_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2021);
        for p in [2.0, 3.0, 5.0, 17.0] {
            for _ in 0..100 {
                let len = rng.gen_range(1..40);
                let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let (l, r) = corner_quadratic_form(p, &x);
                assert!((l - r).abs() <= 1e-12 * l.abs().max(1e-300), "{l} vs {r}");
            }
        }
    }

    #[test]
    fn a_norm_examples() {
        let pr = params(0.25, 1.5);
        let direct = 2f64.powf(-2.5) / (1.0 - 2f64.powf(-2.5));
        assert_relative_eq!(a_norm_squared(2.0, &pr).unwrap(), direct, max_relative = 1e-15);
        assert_relative_eq!(direct, 0.214_737_233_854_592_92, max_relative = 1e-14);
        for p in [2.0f64, 3.0, 7.5] {
            let series: CompensatedSum = (1..400).map(|k| p.powf(-2.0 * k as f64 * 1.25)).collect();
            assert!((a_norm_squared(p, &pr).unwrap() - series.value()).abs() < 1e-14);
        }
        let mut last = f64::INFINITY;
        for p in [2.0, 4.0, 10.0, 1e3, 1e6] {
            let v = a_norm_squared(p, &pr).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-14);
        assert!(a_norm_squared(2.0, &params(1.0, 1.0)).is_err());
    }

    #[test]
    fn hs_closed_forms_against_double_sum() {
        for (sigma, tau) in [(0.25, 1.5), (0.0, 1.0), (0.25, 1.0), (0.0, 0.6), (-0.5, 0.2)] {
            let pr = params(sigma, tau);
            for p in [2.0, 3.0, 11.0] {
                let order = 400;
                let m = build_local_matrix(p, &pr, order);
                let direct = m.frobenius_sq();
                assert!((hs_norm_sq_exact(p, &pr) - direct).abs() < 1e-9 * direct);
                assert!(hs_norm_sq_bound(p, &pr) >= direct * (1.0 - 1e-12));
            }
        }
        // x = 2^{-1.2} > sqrt(2) - 1: the product-form bound alone undershoots.
        let pr = params(0.0, 0.6);
        let x = 2f64.powf(-1.2);
        let product_form = 2.0 / ((1.0 - x * x) * (1.0 - 2f64.powf(-1.2)));
        assert!(product_form < hs_norm_sq_exact(2.0, &pr));
    }

    #[test]
    fn certificate_examples() {
        let pr = params(0.25, 1.5);
        let c2 = top_eig_certificate(2.0, &pr).unwrap();
        assert!((c2.h - 0.8296).abs() < 1e-4, "h = {}", c2.h);
        assert!((c2.bound - 1.261).abs() < 2e-3, "bound = {}", c2.bound);
        let c11 = top_eig_certificate(11.0, &pr).unwrap();
        assert!(c11.bound < 0.01);
        let weak = params(0.25, 1.0);
        assert!(matches!(top_eig_certificate(2.0, &weak), Err(Error::CertificateUnavailable { .. })));
    }

    #[test]
    fn certificate_encloses_computed_top() {
        for (sigma, tau) in [(0.25, 1.5), (0.25, 1.0), (0.0, 1.0), (0.4, 1.2)] {
            let pr = params(sigma, tau);
            for p in [2.0, 3.0, 5.0, 7.0, 11.0, 97.0, 1009.0] {
                let Ok(cert) = top_eig_certificate(p, &pr) else { continue };
                let ls = local_spectrum(p, &pr, DEFAULT_FLOOR).unwrap();
                assert!(cert.contains(ls.top()), "p={p}: {} not in [1, {}]", ls.top(), cert.upper());
            }
        }
    }

    #[test]
    fn top_overlap_approaches_one() {
        let pr = params(0.25, 1.5);
        let decay = pr.tau() + pr.rho();
        let defect = |p: f64| 1.0 - local_spectrum(p, &pr, DEFAULT_FLOOR).unwrap().top_overlap;
        let c = defect(13.0) * 13f64.powf(decay);
        for p in crate::arith::primes_up_to(97).into_iter().filter(|&p| p >= 17) {
            let p = p as f64;
            assert!(defect(p) <= c * p.powf(-decay), "p={p}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn top_eigenvalue_at_least_one(p in 1.2f64..500.0, sigma in -0.5f64..0.5, extra in 0.2f64..2.0) {
            let tau = (2.0 * sigma + extra).max(0.05);
            let pr = params(sigma, tau);
            prop_assume!(pr.rho() > 0.0);
            let ls = local_spectrum(p, &pr, 1e-12).unwrap();
            prop_assert!(ls.top() >= 1.0);
            prop_assert!(ls.eigenvalues.iter().all(|&l| l > 0.0));
        }

        #[test]
        fn corner_identity_holds(p in 1.05f64..50.0, x in proptest::collection::vec(-10.0f64..10.0, 1..30)) {
            let (l, r) = corner_quadratic_form(p, &x);
            prop_assert!((l - r).abs() <= 1e-11 * (l.abs() + x.iter().map(|v| v * v).sum::<f64>()));
        }
    }
}
