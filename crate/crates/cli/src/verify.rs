//! Exact-identity suite behind the `verify` subcommand.

use lcm_spectra::arith::SpectralParams;
use lcm_spectra::global::{finite_section, GlobalSpectrumTable};
use lcm_spectra::kappa::g_p_at;
use lcm_spectra::local::{corner_quadratic_form, local_spectrum, sandwich_envelope, DEFAULT_FLOOR};
use lcm_spectra::toeplitz::{build_toeplitz, gram_via_formula};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::output::{Body, Cell, Meta, Report, Table};

type Result<T> = std::result::Result<T, lcm_spectra::Error>;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

fn params(sigma: f64, tau: f64) -> Result<SpectralParams> {
    SpectralParams::new(sigma, tau)
}

fn corner_identity(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let p = [2.0, 3.0, 5.0, 17.0][i % 4];
        let len = rng.gen_range(1..=40);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (lhs, rhs) = corner_quadratic_form(p, &x);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE));
    }
    Check { name: "corner_quadratic_form", max_error: worst, tolerance: 1e-12 }
}

fn gram_identity() -> Result<Check> {
    let mut worst = 0.0f64;
    for n in [16, 64, 256] {
        for sigma in [-0.5, 0.0, 0.25, 0.4] {
            let direct = build_toeplitz(n, sigma)?.gram_direct();
            let formula = gram_via_formula(n, sigma)?.matrix;
            for (a, b) in direct.as_slice().iter().zip(formula.as_slice()) {
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    Ok(Check { name: "gram_formula_vs_product", max_error: worst, tolerance: 1e-10 })
}

fn trace_identity() -> Result<Check> {
    let pr = params(0.25, 1.5)?;
    let mut worst = 0.0f64;
    for p in [2.0, 3.0, 5.0, 7.0, 11.0] {
        let s = local_spectrum(p, &pr, DEFAULT_FLOOR)?;
        let sum: f64 = s.eigenvalues.iter().sum();
        worst = worst.max(((1.0 - 1.0 / p) * sum - 1.0).abs());
    }
    Ok(Check { name: "trace_identity_rho_1", max_error: worst, tolerance: 1e-10 })
}

fn second_moment_identity() -> Result<Check> {
    let mut worst = 0.0f64;
    for sigma in [0.0, 0.25] {
        let pr = params(sigma, 0.5 + 2.0 * sigma)?;
        for p in [2.0f64, 3.0, 5.0] {
            let s = local_spectrum(p, &pr, DEFAULT_FLOOR)?;
            let lhs = (1.0 - 1.0 / p) * s.eigenvalues.iter().map(|l| l * l).sum::<f64>();
            let rhs = (1.0 - p.powf(-(2.0 + 4.0 * sigma))) / (1.0 - p.powf(-(1.0 + 2.0 * sigma))).powi(2);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(Check { name: "second_moment_identity_rho_half", max_error: worst, tolerance: 1e-10 })
}

/// Largest relative excursion of a computed eigenvalue outside its envelope.
fn sandwich_containment() -> Result<Check> {
    let pr = params(0.25, 1.5)?;
    let mut worst = 0.0f64;
    for p in [3.0, 5.0, 7.0, 11.0, 13.0] {
        let a = if sandwich_envelope(p, &pr, 0.5).is_ok() { 0.5 } else { 1.0 };
        let env = sandwich_envelope(p, &pr, a)?;
        let s = local_spectrum(p, &pr, DEFAULT_FLOOR)?;
        for (k, &l) in s.eigenvalues.iter().enumerate() {
            let below = (env.lower(k) - l) / l;
            let above = (l - env.upper(k)) / l;
            worst = worst.max(below).max(above);
        }
    }
    Ok(Check { name: "sandwich_envelope_containment", max_error: worst.max(0.0), tolerance: 1e-10 })
}

fn determinant_2x2() -> Result<Check> {
    let mut worst = 0.0f64;
    for (sigma, tau) in [(0.25, 1.5), (0.0, 1.0), (0.3, 1.1)] {
        let m = finite_section(&params(sigma, tau)?, 2);
        let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
        let expected = 2f64.powf(2.0 * sigma - tau) * (1.0 - 2f64.powf(-tau));
        worst = worst.max((det - expected).abs());
    }
    Ok(Check { name: "section_determinant_2x2", max_error: worst, tolerance: 1e-14 })
}

fn product_formula() -> Result<Check> {
    let t = GlobalSpectrumTable::build(&params(0.25, 1.5)?, 100, DEFAULT_FLOOR)?;
    let l = |n| t.lambda_of(n).map(|e| e.value);
    let (l1, l2, l3, l6) = (l(1)?, l(2)?, l(3)?, l(6)?);
    Ok(Check { name: "product_formula_multiplicativity", max_error: (l6 * l1 - l2 * l3).abs() / (l2 * l3), tolerance: 1e-14 })
}

fn euler_factor_rho_half() -> Result<Check> {
    let g = g_p_at(2.0, &params(0.0, 0.5)?, 2.0, DEFAULT_FLOOR)?;
    Ok(Check { name: "euler_factor_g2_at_2", max_error: (g - 3.0).abs(), tolerance: 1e-10 })
}

pub fn run_checks(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        corner_identity(seed),
        gram_identity()?,
        trace_identity()?,
        second_moment_identity()?,
        sandwich_containment()?,
        determinant_2x2()?,
        product_formula()?,
        euler_factor_rho_half()?,
    ])
}

pub fn report(seed: u64) -> Result<(Report, usize)> {
    let checks = run_checks(seed)?;
    let mut out = Table::new(vec!["check", "max_error", "tolerance", "status"]);
    let mut failed = 0;
    for c in &checks {
        if !c.passed() {
            failed += 1;
        }
        out.push(vec![
            Cell::Text(c.name.into()),
            Cell::Float(c.max_error),
            Cell::Float(c.tolerance),
            Cell::Text(if c.passed() { "pass" } else { "fail" }.into()),
        ]);
    }
    let report = Report { meta: Meta::new("verify").with("seed", seed), body: Body::Table(out), plot: None };
    Ok((report, failed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold() {
        for c in run_checks(7).unwrap() {
            assert!(c.passed(), "{}: {} > {}", c.name, c.max_error, c.tolerance);
        }
    }
}
