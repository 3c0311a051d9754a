//! Generalized prime systems: the generators `r_p = (lambda_1(E_p)/lambda_0(E_p))^{-1/rho}`
//! and the multiplicative semigroup they generate.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::arith::SpectralParams;
use crate::error::{Error, Result};
use crate::global::GlobalSpectrumTable;

/// Default cap on the candidate heap during enumeration.
pub const DEFAULT_HEAP_CAP: usize = 50_000_000;

/// Relative gap under which two distinct products are flagged as coincident.
pub const COLLISION_TOL: f64 = 1e-12;

/// Ascending generators `1 < r_1 <= r_2 <= ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeurlingSystem {
    generators: Vec<f64>,
    params: Option<SpectralParams>,
    /// Counts are complete for `x` up to this bound (every generator `<= x` is present).
    coverage: Option<f64>,
}

impl BeurlingSystem {
    pub fn new(mut generators: Vec<f64>) -> Result<Self> {
        if let Some(bad) = generators.iter().find(|g| !(**g > 1.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument(format!("generators must be finite reals > 1, got {bad}")));
        }
        generators.sort_by(f64::total_cmp);
        Ok(Self { generators, params: None, coverage: None })
    }

    pub fn generators(&self) -> &[f64] {
        &self.generators
    }

    pub fn params(&self) -> Option<&SpectralParams> {
        self.params.as_ref()
    }

    pub fn coverage(&self) -> Option<f64> {
        self.coverage
    }
}

/// `r_p = gamma_{1,p}^{-1/rho}` for every prime in the table.
///
/// Interlacing gives `gamma_{1,p} <= p^{-rho}`, so `r_p >= p`: every generator
/// below `p_max` comes from a prime in the table.
pub fn system_from_spectra(table: &GlobalSpectrumTable) -> Result<BeurlingSystem> {
    let rho = table.params().rho();
    let generators = table
        .primes()
        .iter()
        .zip(table.locals())
        .map(|(&p, l)| {
            l.ratio(1)
                .map(|g| g.powf(-1.0 / rho))
                .ok_or(Error::BelowFloor { p: p as f64, k: 1 })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut system = BeurlingSystem::new(generators)?;
    system.params = Some(*table.params());
    system.coverage = Some(table.p_max() as f64);
    Ok(system)
}

/// Count of Beurling integers `<= x` plus the number of adjacent products that
/// agree within [`COLLISION_TOL`] (counted separately, never merged).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeurlingCount {
    pub count: u64,
    pub collisions: u64,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    value: f64,
    parent: f64,
    last: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then(self.last.cmp(&other.last))
    }
}

/// Streams the Beurling integers `<= x_max` in ascending order into `visit`.
///
/// Node `(v = u r_i, u, i)` has two successors: `v r_i` (repeat the last
/// generator) and `u r_{i+1}` (advance it). Each multiset of generators is
/// reached along exactly one path, and both successors are `>= v`.
fn enumerate(system: &BeurlingSystem, x_max: f64, cap: usize, mut visit: impl FnMut(f64)) -> Result<u64> {
    if !(x_max >= 1.0) {
        return Ok(0);
    }
    let g = &system.generators;
    let mut heap = BinaryHeap::new();
    let mut emitted = 1u64;
    visit(1.0);
    if let Some(&g0) = g.first() {
        if g0 <= x_max {
            heap.push(Reverse(Node { value: g0, parent: 1.0, last: 0 }));
        }
    }
    while let Some(Reverse(node)) = heap.pop() {
        emitted += 1;
        visit(node.value);
        let repeat = node.value * g[node.last];
        if repeat <= x_max {
            heap.push(Reverse(Node { value: repeat, parent: node.value, last: node.last }));
        }
        if let Some(&next) = g.get(node.last + 1) {
            let advance = node.parent * next;
            if advance <= x_max {
                heap.push(Reverse(Node { value: advance, parent: node.parent, last: node.last + 1 }));
            }
        }
        if heap.len() > cap {
            return Err(Error::CapExceeded { cap, partial: emitted });
        }
    }
    Ok(emitted)
}

fn check_coverage(system: &BeurlingSystem, x: f64) -> Result<()> {
    match system.coverage {
        Some(c) if x > c => Err(Error::EnumerationTooLarge { required: x.ceil() as u64, available: c as u64 }),
        _ => Ok(()),
    }
}

/// `#{Beurling integers <= x}`, each multiset of generators counted once.
pub fn count_integers(system: &BeurlingSystem, x: f64) -> Result<u64> {
    count_integers_detailed(system, x, DEFAULT_HEAP_CAP).map(|c| c.count)
}

pub fn count_integers_detailed(system: &BeurlingSystem, x: f64, cap: usize) -> Result<BeurlingCount> {
    check_coverage(system, x)?;
    let mut previous = f64::NAN;
    let mut collisions = 0;
    let count = enumerate(system, x, cap, |v| {
        if (v - previous).abs() <= COLLISION_TOL * v {
            collisions += 1;
        }
        previous = v;
    })?;
    Ok(BeurlingCount { count, collisions })
}

/// Counts at each point of an ascending grid from a single enumeration.
pub fn counts_on_grid(system: &BeurlingSystem, grid: &[f64]) -> Result<Vec<u64>> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("grid must be ascending".into()));
    }
    let Some(&x_max) = grid.last() else { return Ok(Vec::new()) };
    check_coverage(system, x_max)?;
    let mut values = Vec::new();
    enumerate(system, x_max, DEFAULT_HEAP_CAP, |v| values.push(v))?;
    Ok(grid.iter().map(|&x| values.partition_point(|&v| v <= x) as u64).collect())
}

/// `c(x) = count_integers(x) / x` on the grid.
pub fn density_fit(system: &BeurlingSystem, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if grid.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument("grid points must be positive".into()));
    }
    let counts = counts_on_grid(system, grid)?;
    Ok(grid.iter().zip(counts).map(|(&x, c)| (x, c as f64 / x)).collect())
}

/// Nested-loop count over exponent vectors, for at most three generators.
pub fn count_integers_brute_force(generators: &[f64], x: f64) -> Result<u64> {
    if generators.len() > 3 {
        return Err(Error::InvalidArgument("the nested-loop count handles at most 3 generators".into()));
    }
    if !(x >= 1.0) {
        return Ok(0);
    }
    fn go(gens: &[f64], remaining: f64) -> u64 {
        match gens.split_first() {
            None => 1,
            Some((&g, rest)) => {
                let mut total = 0;
                let mut power = 1.0;
                while power <= remaining {
                    total += go(rest, remaining / power);
                    power *= g;
                }
                total
            }
        }
    }
    Ok(go(generators, x))
}
