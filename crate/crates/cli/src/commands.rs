use std::path::PathBuf;

use clap::Args;
use lcm_spectra::arith::SpectralParams;
use lcm_spectra::global::GlobalSpectrumTable;
use lcm_spectra::local::{local_spectrum, sandwich_envelope, DEFAULT_FLOOR};
use lcm_spectra::{beurling, cache, kappa, toeplitz};
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::output::{float_json, Body, Cell, Meta, PlotData, Report, Table};

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Local eigenvalues below this value are discarded.
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    pub floor: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<SpectralParams> {
        Ok(SpectralParams::new(self.sigma, self.tau)?)
    }

    fn meta(&self, command: &'static str) -> Meta {
        Meta::new(command).with_f("sigma", self.sigma).with_f("tau", self.tau).with_f("floor", self.floor)
    }
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(cache::CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn table(params: &SpectralParams, p_max: u64, floor: f64) -> Result<GlobalSpectrumTable> {
    Ok(cache::load_or_build(cache_dir().as_deref(), params, p_max, floor)?)
}

#[derive(Debug, Clone, Args)]
pub struct LocalEigsArgs {
    /// Base of the local factor (any real > 1; primes in the product formula).
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Mixing parameter of the sandwich envelope; chosen automatically when absent.
    #[arg(long)]
    pub a: Option<f64>,
}

pub fn local_eigs(args: &LocalEigsArgs) -> Result<Report> {
    let params = args.params.params()?;
    params.require_local_regime()?;
    let spectrum = local_spectrum(args.p, &params, args.params.floor)?;
    let a = match args.a {
        Some(a) => a,
        None => [0.5, 1.0]
            .into_iter()
            .find(|&a| sandwich_envelope(args.p, &params, a).is_ok())
            .unwrap_or_else(|| {
                let q = args.p.powf(params.tau());
                2.0 / (q.sqrt() * (1.0 - 1.0 / q))
            }),
    };
    let envelope = sandwich_envelope(args.p, &params, a)?;
    let rho = params.rho();
    let mut out = Table::new(vec!["k", "lambda", "envelope_lo", "envelope_hi"]);
    let mut points = Vec::new();
    for (k, &l) in spectrum.eigenvalues.iter().enumerate() {
        out.push(vec![
            Cell::Int(k as u64),
            Cell::Float(l),
            if envelope.lower_clamped { Cell::Empty } else { Cell::Float(envelope.lower(k)) },
            Cell::Float(envelope.upper(k)),
        ]);
        points.push((k as f64, l * args.p.powf(rho * k as f64)));
    }
    let meta = args
        .params
        .meta("local-eigs")
        .with_f("p", args.p)
        .with_f("a", a)
        .with("truncation_order", spectrum.truncation_order)
        .with_f("top_overlap", spectrum.top_overlap)
        .with_f("tail_bound", spectrum.tail_bound);
    Ok(Report {
        meta,
        body: Body::Table(out),
        plot: Some(PlotData { x_label: "k", y_label: "lambda_times_p_rho_k", points }),
    })
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 10_000)]
    pub nmax: u64,
    /// Prime cutoff of the local table; defaults to `nmax`.
    #[arg(long)]
    pub pmax: Option<u64>,
}

pub fn spectrum(args: &SpectrumArgs) -> Result<Report> {
    let params = args.params.params()?;
    params.require_full_regime()?;
    let p_max = args.pmax.unwrap_or(args.nmax).max(2);
    let t = table(&params, p_max, args.params.floor)?;
    let sorted = t.sorted_spectrum(args.nmax)?;
    let rho = params.rho();
    let mut out = Table::new(vec!["rank", "n", "lambda", "n_rho_lambda"]);
    let mut points = Vec::with_capacity(sorted.len());
    for (i, &(n, value)) in sorted.entries.iter().enumerate() {
        let rank = i as u64 + 1;
        let scaled = (rank as f64).powf(rho) * value;
        out.push(vec![Cell::Int(rank), Cell::Int(n), Cell::Float(value), Cell::Float(scaled)]);
        points.push((rank as f64, scaled));
    }
    let meta = args
        .params
        .meta("spectrum")
        .with("nmax", args.nmax)
        .with("pmax", p_max)
        .with_f("lambda0", t.lambda0())
        .with("t_bound", t.t_bound().map(|v| format!("{v:e}")).unwrap_or_else(|_| "unavailable".into()));
    Ok(Report {
        meta,
        body: Body::Table(out),
        plot: Some(PlotData { x_label: "rank", y_label: "rank_rho_lambda", points }),
    })
}

#[derive(Debug, Clone, Args)]
pub struct CountingArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Comma-separated values of t.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,40000")]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub pmax: u64,
}

pub fn counting(args: &CountingArgs) -> Result<Report> {
    let params = args.params.params()?;
    params.require_full_regime()?;
    let t = table(&params, args.pmax, args.params.floor)?;
    let exponent = -1.0 / params.rho();
    let curve = t.counting_curve(&args.t)?;
    let mut out = Table::new(vec!["t", "mu", "mu_scaled", "certified_cutoff", "envelope_constant"]);
    let mut points = Vec::new();
    for c in &curve {
        let scaled = c.mu as f64 * c.t.powf(exponent);
        out.push(vec![
            Cell::Float(c.t),
            Cell::Int(c.mu),
            Cell::Float(scaled),
            Cell::Int(c.certified_cutoff),
            Cell::Float(c.envelope_constant),
        ]);
        points.push((c.t, scaled));
    }
    let ts: Vec<String> = args.t.iter().map(|v| format!("{v:e}")).collect();
    let meta = args.params.meta("counting").with("t", ts.join(";")).with("pmax", args.pmax).with_f("lambda0", t.lambda0());
    Ok(Report {
        meta,
        body: Body::Table(out),
        plot: Some(PlotData { x_label: "t", y_label: "mu_t_pow_minus_inv_rho", points }),
    })
}

#[derive(Debug, Clone, Args)]
pub struct KappaArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub pmax: u64,
}

pub fn kappa(args: &KappaArgs) -> Result<Report> {
    let params = args.params.params()?;
    params.require_full_regime()?;
    let t = table(&params, args.pmax, args.params.floor)?;
    let k = kappa::kappa_from_table(&t)?;
    let closed = match kappa::kappa_closed_form(&params) {
        Ok(v) => float_json(v),
        Err(lcm_spectra::Error::NoClosedForm { .. }) | Err(lcm_spectra::Error::InvalidParams { .. }) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let mut doc = Map::new();
    doc.insert("kappa".into(), float_json(k.kappa));
    doc.insert("uncertainty".into(), float_json(k.uncertainty));
    doc.insert("uncertainty_kind".into(), Value::from("empirical tail fit, not certified"));
    doc.insert("closed_form".into(), closed);
    doc.insert("kappa_partial".into(), float_json(k.kappa_partial));
    doc.insert("log_tail".into(), float_json(k.log_tail));
    doc.insert("tail_constant".into(), float_json(k.tail_constant));
    doc.insert("tail_exponent".into(), float_json(k.tail_exponent));
    doc.insert("s".into(), float_json(k.s));
    doc.insert("s0".into(), float_json(k.s0));
    doc.insert("p_max".into(), Value::from(k.p_max));

    // partial kappa along a decade grid of prime cutoffs
    let rho = params.rho();
    let mut points = Vec::new();
    let mut log_g = 0.0;
    let mut next = 10u64;
    for &(p, g) in &k.factors {
        while p > next {
            points.push((next as f64, (-rho * log_g).exp()));
            next = next.saturating_mul(10);
        }
        log_g += g.ln();
    }
    points.push((k.p_max as f64, k.kappa_partial));

    Ok(Report {
        meta: args.params.meta("kappa").with("pmax", args.pmax),
        body: Body::Document(doc),
        plot: Some(PlotData { x_label: "p_max", y_label: "kappa_partial", points }),
    })
}

#[derive(Debug, Clone, Args)]
pub struct ToeplitzArgs {
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Comma-separated truncation sizes.
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
    pub n: Vec<usize>,
    /// Number of leading singular values compared.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    /// Prime cutoff for the product-formula eigenvalues of E(sigma, 1).
    #[arg(long, default_value_t = 100_000)]
    pub pmax: u64,
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    pub floor: f64,
}

pub fn toeplitz_compare(args: &ToeplitzArgs) -> Result<Report> {
    let params = SpectralParams::new(args.sigma, 1.0)?;
    params.require_full_regime()?;
    if args.top == 0 {
        return Err(CliError::Usage("--top must be positive".into()));
    }
    let t = table(&params, args.pmax, args.floor)?;
    let reference = top_eigenvalues(&t, args.top)?;
    let mut out = Table::new(vec!["N", "k", "rescaled_s2", "lambda_product", "rel_deviation"]);
    let mut points = Vec::new();
    for &n in &args.n {
        let rescaled = toeplitz::rescaled_singular_values(n, args.sigma)?;
        for (k, (&s, &l)) in rescaled.iter().zip(&reference).enumerate() {
            out.push(vec![
                Cell::Int(n as u64),
                Cell::Int(k as u64 + 1),
                Cell::Float(s),
                Cell::Float(l),
                Cell::Float((s - l) / l),
            ]);
            if k == 0 {
                points.push((n as f64, s));
            }
        }
    }
    let sizes: Vec<String> = args.n.iter().map(|v| v.to_string()).collect();
    let meta = Meta::new("toeplitz-compare")
        .with_f("sigma", args.sigma)
        .with_f("tau", 1.0)
        .with("N", sizes.join(";"))
        .with("top", args.top)
        .with("pmax", args.pmax)
        .with_f("floor", args.floor);
    Ok(Report {
        meta,
        body: Body::Table(out),
        plot: Some(PlotData { x_label: "N", y_label: "rescaled_s1_squared", points }),
    })
}

/// The `count` largest eigenvalues, with the enumeration range certified to contain them.
pub fn top_eigenvalues(t: &GlobalSpectrumTable, count: usize) -> Result<Vec<f64>> {
    let n_max = t.p_max().min(100_000);
    let values: Vec<f64> = t.sorted_spectrum(n_max)?.values().take(count).collect();
    if let Some(&last) = values.last() {
        let (cut, _) = t.certified_cutoff(1.0 / last)?;
        if cut > n_max || values.len() < count {
            return Err(lcm_spectra::Error::EnumerationTooLarge { required: cut, available: n_max }.into());
        }
    }
    Ok(values)
}

#[derive(Debug, Clone, Args)]
pub struct SchattenArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Even Schatten exponent.
    #[arg(long, default_value_t = 2)]
    pub q: u32,
    /// Truncation dimension of the difference matrix.
    #[arg(long, default_value_t = 256)]
    pub m: usize,
    #[arg(long, value_delimiter = ',', default_value = "16,64,256,1024")]
    pub n: Vec<u64>,
}

pub fn schatten(args: &SchattenArgs) -> Result<Report> {
    let mut out = Table::new(vec!["N", "M", "q", "truncated_norm"]);
    let mut points = Vec::new();
    for &n in &args.n {
        let norm = toeplitz::schatten_diff(n, args.m, args.q, args.sigma)?;
        out.push(vec![Cell::Int(n), Cell::Int(args.m as u64), Cell::Int(args.q as u64), Cell::Float(norm)]);
        points.push((n as f64, norm));
    }
    let sizes: Vec<String> = args.n.iter().map(|v| v.to_string()).collect();
    let meta = Meta::new("schatten")
        .with_f("sigma", args.sigma)
        .with("q", args.q)
        .with("M", args.m)
        .with("N", sizes.join(";"));
    Ok(Report {
        meta,
        body: Body::Table(out),
        plot: Some(PlotData { x_label: "N", y_label: "truncated_norm", points }),
    })
}

#[derive(Debug, Clone, Args)]
pub struct BeurlingArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Comma-separated ascending grid of x values.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,5000,10000,20000,40000")]
    pub x: Vec<f64>,
    /// Prime cutoff; defaults to the largest grid point.
    #[arg(long)]
    pub pmax: Option<u64>,
}

pub fn beurling(args: &BeurlingArgs) -> Result<Report> {
    let params = args.params.params()?;
    params.require_full_regime()?;
    let x_max = args.x.iter().cloned().fold(1.0, f64::max);
    let p_max = args.pmax.unwrap_or(x_max.ceil() as u64).max(2);
    let t = table(&params, p_max, args.params.floor)?;
    let system = beurling::system_from_spectra(&t)?;
    let counts = beurling::counts_on_grid(&system, &args.x)?;
    let collisions =
        beurling::count_integers_detailed(&system, x_max, beurling::DEFAULT_HEAP_CAP)?.collisions;
    let mut out = Table::new(vec!["x", "count", "density"]);
    let mut points = Vec::new();
    for (&x, &c) in args.x.iter().zip(&counts) {
        let density = c as f64 / x;
        out.push(vec![Cell::Float(x), Cell::Int(c), Cell::Float(density)]);
        points.push((x, density));
    }
    let grid: Vec<String> = args.x.iter().map(|v| format!("{v:e}")).collect();
    let meta = args
        .params
        .meta("beurling")
        .with("x", grid.join(";"))
        .with("pmax", p_max)
        .with("generators", system.generators().len())
        .with("collisions", collisions);
    Ok(Report {
        meta,
        body: Body::Table(out),
        plot: Some(PlotData { x_label: "x", y_label: "density", points }),
    })
}
