//! Truncated multiplicative Toeplitz matrices `T_N(psi_sigma)`, with entries
//! `(n/m)^{-sigma}` when `m | n`, their Gram matrices and Schatten norms.
//!
//! Indices are 1-based in the mathematical sense; storage is 0-based.

use rayon::prelude::*;

use crate::arith::{gcd, PowerSumTable, SpectralParams};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, SymMatrix};
use crate::numeric::CompensatedSum;

/// Dense `N x N` truncation of the multiplicative Toeplitz matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzTruncation {
    n: usize,
    sigma: f64,
    data: Vec<f64>,
}

impl ToeplitzTruncation {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Entry `(n, m)` with 1-based indices.
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.data[(n - 1) * self.n + (m - 1)]
    }

    /// `T^T T` by dense multiplication; `O(N^3)`, meant for cross-checks.
    pub fn gram_direct(&self) -> SymMatrix {
        let n = self.n;
        SymMatrix::from_fn(n, |i, j| {
            let mut acc = CompensatedSum::new();
            // T[r][i] vanishes unless i+1 divides r+1
            for r in (i.max(j)..n).step_by(i + 1) {
                acc.add(self.data[r * n + i] * self.data[r * n + j]);
            }
            acc.value()
        })
    }
}

pub fn build_toeplitz(n: usize, sigma: f64) -> Result<ToeplitzTruncation> {
    if n == 0 {
        return Err(Error::InvalidArgument("Toeplitz dimension must be positive".into()));
    }
    let mut data = vec![0.0; n * n];
    for m in 1..=n {
        for k in 1..=n / m {
            data[(k * m - 1) * n + (m - 1)] = (k as f64).powf(-sigma);
        }
    }
    Ok(ToeplitzTruncation { n, sigma, data })
}

/// `T_N^T T_N` assembled entrywise as `n^sigma m^sigma [n,m]^{-2 sigma} F(N / [n,m])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub n: usize,
    pub sigma: f64,
    pub matrix: SymMatrix,
}

pub fn gram_via_formula(n: usize, sigma: f64) -> Result<GramMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("Gram dimension must be positive".into()));
    }
    let f = PowerSumTable::new(sigma, n as u64);
    let big_n = n as u64;
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = i as u64 + 1;
            let f = &f;
            (0..n).map(move |j| {
                let b = j as u64 + 1;
                let l = a / gcd(a, b) * b;
                if l > big_n {
                    0.0
                } else {
                    let ln = sigma * ((a as f64).ln() + (b as f64).ln() - 2.0 * (l as f64).ln());
                    ln.exp() * f.at(big_n / l)
                }
            })
        })
        .collect();
    Ok(GramMatrix { n, sigma, matrix: SymMatrix::from_row_major(n, data)? })
}

/// `rho N^{-rho} s_k^2(T_N)`, descending, with `rho = 1 - 2 sigma`.
///
/// Round-off can leave the smallest Gram eigenvalues slightly negative; they are
/// reported as 0.
pub fn rescaled_singular_values(n: usize, sigma: f64) -> Result<Vec<f64>> {
    let rho = 1.0 - 2.0 * sigma;
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rescaling needs sigma < 1/2, got {sigma}")));
    }
    let gram = gram_via_formula(n, sigma)?;
    let scale = rho * (n as f64).powf(-rho);
    Ok(symmetric_eigenvalues(&gram.matrix)?.into_iter().map(|v| scale * v.max(0.0)).collect())
}

/// `[G_N]_{n,m} = [n,m]^rho F(N/[n,m]) / F(N)` on the leading `M x M` block.
#[derive(Debug, Clone, PartialEq)]
pub struct HadamardFactor {
    pub n: u64,
    pub sigma: f64,
    pub matrix: SymMatrix,
}

impl HadamardFactor {
    pub fn max_abs(&self) -> f64 {
        self.matrix.as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_deviation_from_one(&self) -> f64 {
        self.matrix.as_slice().iter().fold(0.0, |m, v| m.max((v - 1.0).abs()))
    }
}

pub fn hadamard_factor(n: u64, m: usize, sigma: f64) -> Result<HadamardFactor> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("N and M must be positive".into()));
    }
    let rho = 1.0 - 2.0 * sigma;
    let f = PowerSumTable::new(sigma, n);
    let f_n = f.at(n);
    let matrix = SymMatrix::from_fn(m, |i, j| {
        let (a, b) = (i as u64 + 1, j as u64 + 1);
        let l = a / gcd(a, b) * b;
        if l > n {
            0.0
        } else {
            (l as f64).powf(rho) * f.at(n / l) / f_n
        }
    });
    Ok(HadamardFactor { n, sigma, matrix })
}

/// `(Tr A^q)^{1/q}` for symmetric `A` and even `q`, through `q/2 - 1` products
/// and a final trace of a product.
pub fn schatten_norm_even(a: &SymMatrix, q: u32) -> Result<f64> {
    if q == 0 || q % 2 == 1 {
        return Err(Error::InvalidArgument(format!("Schatten exponent must be even, got {q}")));
    }
    let mut power = a.clone();
    for _ in 1..q / 2 {
        power = power.matmul(a);
    }
    Ok(power.trace_of_product(&power).max(0.0).powf(1.0 / q as f64))
}

/// Truncated Schatten-`q` norm of `E(sigma,1) . G_N - E(sigma,1)` on the leading `M x M` block.
pub fn schatten_diff(n: u64, m: usize, q: u32, sigma: f64) -> Result<f64> {
    let rho = 1.0 - 2.0 * sigma;
    if q == 0 || q % 2 == 1 {
        return Err(Error::InvalidArgument(format!("Schatten exponent must be even, got {q}")));
    }
    if !(q as f64 * rho > 1.0) {
        return Err(Error::InvalidArgument(format!("need q * rho > 1, got q = {q}, rho = {rho}")));
    }
    let params = SpectralParams::new(sigma, 1.0)?;
    let g = hadamard_factor(n, m, sigma)?;
    let d = SymMatrix::from_fn(m, |i, j| {
        crate::arith::entry_e(i as u64 + 1, j as u64 + 1, &params) * (g.matrix.get(i, j) - 1.0)
    });
    schatten_norm_even(&d, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{lcm, partial_power_sum, zeta_real};
    use crate::global::finite_section;
    use proptest::prelude::*;

    #[test]
    fn toeplitz_entries() {
        let t = build_toeplitz(8, 0.3).unwrap();
        assert!((t.get(4, 2) - 2f64.powf(-0.3)).abs() < 1e-15);
        assert_eq!(t.get(3, 2), 0.0);
        assert_eq!(t.get(2, 4), 0.0);
        for n in 1..=8 {
            assert_eq!(t.get(n, n), 1.0);
            assert!((t.get(n, 1) - (n as f64).powf(-0.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn gram_examples() {
        let g = gram_via_formula(4, 0.25).unwrap();
        assert!((g.matrix.get(1, 3) - 2f64.powf(-0.25)).abs() < 1e-15);
        assert!((g.matrix.get(1, 3) - 0.840_896_415_253_714_5).abs() < 1e-15);
        assert_eq!(g.matrix.get(2, 3), 0.0);
        assert_eq!(g.matrix.get(3, 3), 1.0);
        let g = gram_via_formula(30, -0.5).unwrap();
        for n in 1..=30u64 {
            let diag = g.matrix.get(n as usize - 1, n as usize - 1);
            assert!((diag - partial_power_sum(30.0 / n as f64, -0.5)).abs() < 1e-12 * diag);
            for m in 1..=30u64 {
                if lcm(n, m).unwrap() > 30 {
                    assert_eq!(g.matrix.get(n as usize - 1, m as usize - 1), 0.0);
                }
            }
        }
        assert!(g.matrix.is_symmetric());
    }

    #[test]
    fn gram_matches_direct_product() {
        for n in [16, 64, 256] {
            for sigma in [-0.5, 0.0, 0.25, 0.4] {
                let direct = build_toeplitz(n, sigma).unwrap().gram_direct();
                let formula = gram_via_formula(n, sigma).unwrap().matrix;
                for (a, b) in direct.as_slice().iter().zip(formula.as_slice()) {
                    assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "N={n} sigma={sigma}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn gram_eigenvalues_match_direct_product() {
        let direct = symmetric_eigenvalues(&build_toeplitz(128, 0.25).unwrap().gram_direct()).unwrap();
        let formula = symmetric_eigenvalues(&gram_via_formula(128, 0.25).unwrap().matrix).unwrap();
        for (a, b) in direct.iter().zip(&formula) {
            assert!((a - b).abs() < 1e-10 * direct[0]);
        }
    }

    #[test]
    fn rescaled_values_basic() {
        let one = rescaled_singular_values(1, 0.25).unwrap();
        assert_eq!(one, vec![0.5]);
        let vals = rescaled_singular_values(64, 0.25).unwrap();
        assert!(vals.iter().all(|&v| v >= 0.0));
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let t = build_toeplitz(64, 0.25).unwrap();
        let frob_sq: f64 = (1..=64).flat_map(|n| (1..=64).map(move |m| (n, m))).map(|(n, m)| t.get(n, m).powi(2)).sum();
        assert!(vals[0] <= 0.5 * 64f64.powf(-0.5) * frob_sq);
        assert!(rescaled_singular_values(8, 0.5).is_err());
    }

    #[test]
    fn hadamard_factor_properties() {
        let g = hadamard_factor(1000, 40, 0.25).unwrap();
        assert_eq!(g.matrix.get(0, 0), 1.0);
        let small = hadamard_factor(20, 10, 0.0).unwrap();
        assert_eq!(small.matrix.get(6, 8), 0.0); // [7, 9] = 63 > 20
        let dev: Vec<f64> = [100, 1_000, 10_000, 100_000]
            .iter()
            .map(|&n| hadamard_factor(n, 10, 0.25).unwrap().max_deviation_from_one())
            .collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
        assert!(dev[3] < 0.05);
    }

    #[test]
    fn hadamard_uniform_bound_is_stable() {
        // for sigma < 0 a block whose lcms reach ~N/2 sees F(N/[n,m]) jump
        for (sigma, m) in [(0.0, 64), (0.25, 64), (0.4, 64), (-0.5, 16), (-0.5, 256)] {
            let c1 = hadamard_factor(10_000, m, sigma).unwrap().max_abs();
            let c2 = hadamard_factor(20_000, m, sigma).unwrap().max_abs();
            assert!((c2 / c1 - 1.0).abs() <= 0.1, "sigma={sigma}: {c1} vs {c2}");
        }
    }

    #[test]
    fn schatten_two_is_frobenius() {
        let d = SymMatrix::from_fn(5, |i, j| (i as f64 - j as f64).sin() + (i * j) as f64 * 0.1);
        let hs = d.frobenius_sq().sqrt();
        assert!((schatten_norm_even(&d, 2).unwrap() - hs).abs() < 1e-13 * hs);
        assert_eq!(schatten_norm_even(&SymMatrix::zeros(4), 4).unwrap(), 0.0);
        assert!(schatten_norm_even(&d, 3).is_err());
    }

    #[test]
    fn schatten_even_matches_eigenvalue_route() {
        let d = SymMatrix::from_fn(12, |i, j| 1.0 / (1.0 + i as f64 + j as f64) - 0.05);
        let eig = symmetric_eigenvalues(&d).unwrap();
        for q in [2u32, 4, 6, 8] {
            let via_eig: f64 = eig.iter().map(|l| l.abs().powi(q as i32)).sum::<f64>().powf(1.0 / q as f64);
            let via_trace = schatten_norm_even(&d, q).unwrap();
            assert!((via_eig - via_trace).abs() < 1e-12 * via_eig, "q={q}");
        }
    }

    #[test]
    fn schatten_diff_decreases() {
        let at16 = schatten_diff(16, 64, 2, 0.0).unwrap();
        let at1024 = schatten_diff(1024, 64, 2, 0.0).unwrap();
        assert!(at1024 < at16);
        assert!(schatten_diff(16, 8, 3, 0.0).is_err());
        assert!(schatten_diff(16, 8, 2, 0.3).is_err());
        assert!(schatten_diff(16, 8, 4, 0.3).is_ok());
    }

    #[test]
    fn large_sigma_gram_tracks_zeta_multiple() {
        let n = 512;
        let gram = gram_via_formula(n, 2.0).unwrap();
        let z4 = zeta_real(4.0).unwrap();
        assert!((gram.matrix.get(0, 0) / z4 - 1.0).abs() < 1e-3);
        let top_gram = symmetric_eigenvalues(&gram.matrix).unwrap()[0];
        let section = finite_section(&SpectralParams::new(2.0, 4.0).unwrap(), n);
        let top_section = symmetric_eigenvalues(&section).unwrap()[0];
        assert!((top_gram / (z4 * top_section) - 1.0).abs() < 0.02, "{top_gram} vs {}", z4 * top_section);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gram_formula_equals_product(n in 1usize..48, sigma in -1.0f64..1.0) {
            let direct = build_toeplitz(n, sigma).unwrap().gram_direct();
            let formula = gram_via_formula(n, sigma).unwrap().matrix;
            for (a, b) in direct.as_slice().iter().zip(formula.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
            }
        }
    }
}
