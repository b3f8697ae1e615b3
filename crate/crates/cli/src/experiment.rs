//! Seeded scheme-comparison sweeps.
//!
//! At every sweep point each trial draws one layout from its own stream
//! `(seed, sweep index, trial index)` and evaluates every scheme on it, so
//! scheme differences are paired. Per-trial values are collected in trial
//! order and reduced by pairwise summation, which keeps the output
//! independent of thread count and scheduling.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::Write;

use rayon::prelude::*;

use pinchopt::channel::nats_to_bpcu;
use pinchopt::noma::{
    noma_conventional_power, order_users_by_y, solve_noma_closed_form, solve_noma_search, NomaInputs, CERTIFIED_RATE,
};
use pinchopt::oma_fairness::{
    conventional_maxmin, conventional_power_min, solve_maxmin, solve_maxmin_search, solve_power_min,
    solve_power_min_search,
};
use pinchopt::oma_greedy::{
    greedy_power_given_x, solve_throughput_highsnr, solve_throughput_search, throughput, GreedyInputs,
};
use pinchopt::outage::{analytic_outage_two_user, in_outage, OutageInputs};
use pinchopt::rng::{sample_layout, trial_rng};
use pinchopt::{Error, GridSpec, UserLayout};

use crate::config::{ExperimentConfig, Scheme};
use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "sweep_value,scheme,metric,mean,stderr,trials";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub sweep_value: f64,
    pub scheme: String,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Per-trial metric values of one experiment.
#[derive(Debug, Clone)]
pub struct Samples {
    pub sweep_values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// `values[sweep][scheme][trial]`.
    pub values: Vec<Vec<Vec<f64>>>,
    /// Digest of all layouts drawn at each sweep point.
    pub layout_digests: Vec<u64>,
    /// Trials whose closed form lost to its oracle (only with certification).
    pub certification_failures: Vec<String>,
}

impl Samples {
    pub fn series(&self, sweep: usize, scheme: Scheme) -> Option<&[f64]> {
        let k = self.schemes.iter().position(|&s| s == scheme)?;
        Some(&self.values[sweep][k])
    }
}

struct Point<'a> {
    cfg: &'a ExperimentConfig,
    grid: GridSpec,
    power: f64,
    rate: f64,
    analytic_outage: Option<f64>,
}

fn infeasible_as_zero(r: pinchopt::Result<f64>) -> Result<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::Infeasible(_)) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

fn evaluate(scheme: Scheme, pt: &Point, layout: &UserLayout) -> Result<f64> {
    let p = &pt.cfg.params;
    let (power, rate) = (pt.power, pt.rate);
    let pair_greedy = || GreedyInputs::new(*p, layout.clone(), power, rate);
    let pair_noma = |l: UserLayout| NomaInputs::new(*p, l, rate);
    let outage = || OutageInputs::new(*p, layout.len(), rate, power);
    Ok(match scheme {
        Scheme::OmaMaxmin => nats_to_bpcu(solve_maxmin(p, layout, power)?.objective),
        Scheme::OmaMaxminSearch => nats_to_bpcu(solve_maxmin_search(p, layout, power, &pt.grid)?.objective),
        Scheme::OmaMaxminConventional => nats_to_bpcu(conventional_maxmin(p, layout, power)?.objective),
        Scheme::OmaPowermin => solve_power_min(p, layout, rate)?.objective,
        Scheme::OmaPowerminSearch => solve_power_min_search(p, layout, rate, &pt.grid)?.objective,
        Scheme::OmaPowerminConventional => conventional_power_min(p, layout, rate)?,
        // A layout whose rate floors cannot be met contributes zero throughput.
        Scheme::OmaGreedySearch => {
            nats_to_bpcu(infeasible_as_zero(solve_throughput_search(&pair_greedy()?, &pt.grid).map(|s| s.objective))?)
        }
        Scheme::OmaGreedyHighsnr => {
            nats_to_bpcu(infeasible_as_zero(solve_throughput_highsnr(&pair_greedy()?).map(|s| s.placement.objective))?)
        }
        Scheme::OmaGreedyConventional => {
            let g = pair_greedy()?;
            nats_to_bpcu(infeasible_as_zero(greedy_power_given_x(&g, 0.0).map(|a| throughput(&g, 0.0, &a)))?)
        }
        Scheme::Noma => solve_noma_closed_form(&pair_noma(order_users_by_y(layout).0)?)?.total,
        Scheme::NomaSearch => solve_noma_search(&pair_noma(layout.clone())?, &pt.grid)?.total,
        Scheme::NomaConventional => noma_conventional_power(&pair_noma(layout.clone())?),
        Scheme::OmaOutage => {
            let missed = in_outage(&outage()?, layout, layout.mean_x());
            if missed {
                0.0
            } else {
                nats_to_bpcu(rate)
            }
        }
        Scheme::OmaOutageConventional => {
            let missed = in_outage(&outage()?, layout, 0.0);
            if missed {
                0.0
            } else {
                nats_to_bpcu(rate)
            }
        }
        Scheme::OmaOutageAnalytic => {
            let prob = pt.analytic_outage.expect("computed for two users");
            (1.0 - prob) * nats_to_bpcu(rate)
        }
    })
}

/// Checks a closed-form scheme against its brute-force reference on one layout.
/// Returns a message when the closed form loses by more than the tolerance.
fn certify(scheme: Scheme, pt: &Point, layout: &UserLayout) -> Result<Option<String>> {
    let p = &pt.cfg.params;
    let (closed, oracle, tol, higher_is_better) = match scheme {
        Scheme::OmaMaxmin => (
            solve_maxmin(p, layout, pt.power)?.objective,
            solve_maxmin_search(p, layout, pt.power, &pt.grid)?.objective,
            1e-9,
            true,
        ),
        Scheme::OmaPowermin => (
            solve_power_min(p, layout, pt.rate)?.objective,
            solve_power_min_search(p, layout, pt.rate, &pt.grid)?.objective,
            1e-9,
            false,
        ),
        Scheme::Noma if pt.rate >= CERTIFIED_RATE => {
            let ordered = NomaInputs::new(*p, order_users_by_y(layout).0, pt.rate)?;
            let both = NomaInputs::new(*p, layout.clone(), pt.rate)?;
            (solve_noma_closed_form(&ordered)?.total, solve_noma_search(&both, &pt.grid)?.total, 1e-6, false)
        }
        _ => return Ok(None),
    };
    let loss = if higher_is_better { oracle - closed } else { closed - oracle };
    Ok((loss > tol * oracle.abs()).then(|| format!("{scheme}: closed form {closed} vs oracle {oracle}")))
}

fn digest(layout: &UserLayout) -> u64 {
    let mut h = DefaultHasher::new();
    for u in layout.users() {
        u.x.to_bits().hash(&mut h);
        u.y.to_bits().hash(&mut h);
    }
    h.finish()
}

struct TrialOutcome {
    values: Vec<f64>,
    digest: u64,
    failures: Vec<String>,
}

fn run_point(
    cfg: &ExperimentConfig,
    sweep: usize,
    pt: &Point,
    certify_closed_forms: bool,
) -> Result<Vec<TrialOutcome>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let layout =
                sample_layout(&mut trial_rng(cfg.seed, sweep as u64, t), cfg.users, &cfg.params, cfg.clustering);
            let values = cfg.schemes.iter().map(|&s| evaluate(s, pt, &layout)).collect::<Result<Vec<_>>>()?;
            let mut failures = Vec::new();
            if certify_closed_forms {
                for &s in &cfg.schemes {
                    if let Some(msg) = certify(s, pt, &layout)? {
                        failures.push(format!("sweep {sweep}, trial {t}: {msg}"));
                    }
                }
            }
            Ok(TrialOutcome { values, digest: digest(&layout), failures })
        })
        .collect()
}

fn run_all(cfg: &ExperimentConfig, certify_closed_forms: bool) -> Result<Samples> {
    let grid = cfg.grid()?;
    let sweep_values = cfg.sweep.values();
    let mut samples = Samples {
        sweep_values: sweep_values.clone(),
        schemes: cfg.schemes.clone(),
        values: Vec::with_capacity(sweep_values.len()),
        layout_digests: Vec::with_capacity(sweep_values.len()),
        certification_failures: Vec::new(),
    };
    for (i, &v) in sweep_values.iter().enumerate() {
        let (power, rate) = cfg.operating_point(v);
        let analytic_outage = if cfg.schemes.contains(&Scheme::OmaOutageAnalytic) {
            Some(analytic_outage_two_user(&OutageInputs::new(cfg.params, cfg.users, rate, power)?)?)
        } else {
            None
        };
        let pt = Point { cfg, grid, power, rate, analytic_outage };
        let outcomes = run_point(cfg, i, &pt, certify_closed_forms)?;

        let mut h = DefaultHasher::new();
        let mut per_scheme = vec![Vec::with_capacity(outcomes.len()); cfg.schemes.len()];
        for o in outcomes {
            o.digest.hash(&mut h);
            for (k, v) in o.values.into_iter().enumerate() {
                per_scheme[k].push(v);
            }
            samples.certification_failures.extend(o.failures);
        }
        let layout_digest = h.finish();
        log::debug!("sweep {i} ({v}): {} shared layouts, digest {layout_digest:016x}", cfg.trials);
        samples.values.push(per_scheme);
        samples.layout_digests.push(layout_digest);
    }
    Ok(samples)
}

/// Runs every trial and keeps the per-trial values.
///
/// With `threads > 0` in the config the work runs on a dedicated pool of that
/// size; the result is identical either way.
pub fn run_samples(cfg: &ExperimentConfig, certify_closed_forms: bool) -> Result<Samples> {
    cfg.validate_experiment()?;
    if cfg.threads == 0 {
        return run_all(cfg, certify_closed_forms);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} threads: {e}", cfg.threads)))?;
    pool.install(|| run_all(cfg, certify_closed_forms))
}

pub fn summarize(samples: &Samples) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for (i, &v) in samples.sweep_values.iter().enumerate() {
        for (k, &scheme) in samples.schemes.iter().enumerate() {
            let xs = &samples.values[i][k];
            let (mean, stderr) = mean_stderr(xs);
            rows.push(CsvRow {
                sweep_value: v,
                scheme: scheme.label().to_owned(),
                metric: scheme.metric().label().to_owned(),
                mean,
                stderr,
                trials: xs.len() as u64,
            });
        }
    }
    rows
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    Ok(summarize(&run_samples(cfg, false)?))
}

/// Sum with a fixed binary split, so the rounding depends only on the order
/// of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and its standard error (`s/√n`, zero for a single sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of the trial-wise difference `a − b`.
pub fn paired_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_stderr(&d)
}

fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_csv<W: Write>(rows: &[CsvRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_num(r.sweep_value),
            r.scheme,
            r.metric,
            fmt_num(r.mean),
            fmt_num(r.stderr),
            r.trials
        )?;
    }
    Ok(())
}
