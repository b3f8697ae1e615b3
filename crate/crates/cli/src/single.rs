//! Single-instance solves behind the `maxmin`, `powermin`, `greedy`, `noma`
//! and `outage` subcommands.
//!
//! Each produces a [`Report`]: labelled values for the terminal plus the same
//! values as CSV rows (`trials = 1`, `stderr = 0` unless Monte Carlo).

use std::fmt::Write as _;

use pinchopt::channel::{nats_to_bpcu, watt_to_dbm};
use pinchopt::noma::{
    order_users_by_y, solve_noma_closed_form, solve_noma_search, validate_assumptions, NomaInputs, CERTIFIED_RATE,
};
use pinchopt::oma_fairness::{
    conventional_power_min, power_gain_delta, solve_maxmin, solve_maxmin_search, solve_power_min,
    solve_power_min_search, user_rates, EpsilonTau,
};
use pinchopt::oma_greedy::{
    greedy_power_given_x, solve_throughput_highsnr, solve_throughput_search, throughput, GreedyInputs,
};
use pinchopt::oracle::grid_power_alloc_sweep;
use pinchopt::outage::{
    analytic_outage_two_user, empirical_outage, empirical_outage_conventional, in_outage, OutageInputs,
};
use pinchopt::{GridSpec, UserLayout};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiment::CsvRow;

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub gap: f64,
    pub tolerance: f64,
    pub what: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    /// Value the machine-readable rows are keyed by (dBm or BPCU).
    pub sweep_value: f64,
    pub lines: Vec<(String, String)>,
    pub rows: Vec<CsvRow>,
    pub certification: Option<Certification>,
}

impl Report {
    fn new(title: impl Into<String>, sweep_value: f64) -> Self {
        Self { title: title.into(), sweep_value, lines: Vec::new(), rows: Vec::new(), certification: None }
    }

    fn value(&mut self, scheme: &str, metric: &str, v: f64) {
        self.estimate(scheme, metric, v, 0.0, 1);
    }

    fn estimate(&mut self, scheme: &str, metric: &str, mean: f64, stderr: f64, trials: u64) {
        let shown = if trials > 1 { format!("{mean} ± {stderr} ({trials} trials)") } else { format!("{mean}") };
        self.lines.push((format!("{scheme} {metric}"), shown));
        self.rows.push(CsvRow {
            sweep_value: self.sweep_value,
            scheme: scheme.to_owned(),
            metric: metric.to_owned(),
            mean,
            stderr,
            trials,
        });
    }

    fn note(&mut self, key: &str, text: impl Into<String>) {
        self.lines.push((key.to_owned(), text.into()));
    }

    fn certify(&mut self, what: impl Into<String>, gap: f64, tolerance: f64) {
        self.certification = Some(Certification { gap, tolerance, what: what.into(), passed: gap <= tolerance });
    }

    pub fn render(&self) -> String {
        let mut out = format!("{}\n", self.title);
        let width = self.lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.lines {
            let _ = writeln!(out, "  {k:width$}  {v}");
        }
        if let Some(c) = &self.certification {
            let verdict = if c.passed { "ok" } else { "FAILED" };
            let _ = writeln!(out, "  certify: {} gap {:e} (tolerance {:e}) {verdict}", c.what, c.gap, c.tolerance);
        }
        out
    }
}

fn per_user(report: &mut Report, scheme: &str, metric: &str, values: &[f64]) {
    for (i, &v) in values.iter().enumerate() {
        report.value(scheme, &format!("{metric}_{}", i + 1), v);
    }
}

/// Relative shortfall of `closed` against `oracle` (positive when worse).
fn relative_loss(closed: f64, oracle: f64, higher_is_better: bool) -> f64 {
    let loss = if higher_is_better { oracle - closed } else { closed - oracle };
    loss / oracle.abs()
}

pub fn maxmin(cfg: &ExperimentConfig, layout: &UserLayout, power_dbm: f64, certify: bool) -> Result<Report> {
    let p = &cfg.params;
    let power = pinchopt::channel::dbm_to_watt(power_dbm);
    let sol = solve_maxmin(p, layout, power)?;
    let mut r = Report::new(format!("max-min OMA, {} users, P = {power_dbm} dBm", layout.len()), power_dbm);
    r.value("oma-maxmin", "x_star_m", sol.x_star);
    per_user(&mut r, "oma-maxmin", "power_w", &sol.powers);
    per_user(&mut r, "oma-maxmin", "rate_nats", &user_rates(p, layout, &sol));
    r.value("oma-maxmin", "min_rate_nats", sol.objective);
    r.value("oma-maxmin", "min_rate_bpcu", nats_to_bpcu(sol.objective));
    if certify {
        let oracle = solve_maxmin_search(p, layout, power, &cfg.grid()?)?;
        r.value("oma-maxmin-search", "min_rate_nats", oracle.objective);
        r.certify("max-min rate vs grid oracle, relative", relative_loss(sol.objective, oracle.objective, true), 1e-9);
    }
    Ok(r)
}

pub fn powermin(cfg: &ExperimentConfig, layout: &UserLayout, rate: f64, certify: bool) -> Result<Report> {
    let p = &cfg.params;
    let sol = solve_power_min(p, layout, rate)?;
    let bpcu = nats_to_bpcu(rate);
    let mut r = Report::new(format!("power-min OMA, {} users, R = {rate} nats ({bpcu} BPCU)", layout.len()), bpcu);
    r.value("oma-powermin", "epsilon_w", EpsilonTau::new(p, layout, rate).epsilon);
    r.value("oma-powermin", "x_star_m", sol.x_star);
    per_user(&mut r, "oma-powermin", "power_w", &sol.powers);
    r.value("oma-powermin", "total_power_w", sol.objective);
    r.value("oma-powermin", "total_power_dbm", watt_to_dbm(sol.objective));
    r.value("oma-powermin-conventional", "total_power_w", conventional_power_min(p, layout, rate)?);
    r.value("oma-powermin", "power_gain_w", power_gain_delta(p, layout, rate)?);
    if certify {
        let oracle = solve_power_min_search(p, layout, rate, &cfg.grid()?)?;
        r.value("oma-powermin-search", "total_power_w", oracle.objective);
        r.certify("total power vs grid oracle, relative", relative_loss(sol.objective, oracle.objective, false), 1e-9);
    }
    Ok(r)
}

fn allocation_sweep_gap(inputs: &GreedyInputs, x: f64, returned: f64) -> Result<f64> {
    let eps = inputs.epsilon();
    let taus = inputs.layout.taus(&inputs.params, x);
    let total = inputs.total_power;
    let (lo, hi) = (eps * taus[0], total - eps * taus[1]);
    if hi <= lo {
        return Ok(0.0);
    }
    let spec = GridSpec::new(lo, hi, 100_001, 0)?;
    let rate = |pw: f64, t: f64| pinchopt::channel::rate_oma(&inputs.params, pw, t, 2);
    let (_, best) = grid_power_alloc_sweep(|p1| Some(rate(p1, taus[0]) + rate(total - p1, taus[1])), total, &spec)?;
    Ok(best - returned)
}

pub fn greedy(cfg: &ExperimentConfig, layout: &UserLayout, power_dbm: f64, rate: f64, certify: bool) -> Result<Report> {
    let power = pinchopt::channel::dbm_to_watt(power_dbm);
    let inputs = GreedyInputs::new(cfg.params, layout.clone(), power, rate)?;
    let search = solve_throughput_search(&inputs, &cfg.grid()?)?;
    let alloc = greedy_power_given_x(&inputs, search.x_star)?;
    let mut r = Report::new(format!("throughput OMA, 2 users, P = {power_dbm} dBm, rate floor {rate} nats"), power_dbm);
    r.value("oma-greedy-search", "x_star_m", search.x_star);
    per_user(&mut r, "oma-greedy-search", "power_w", &search.powers);
    r.note("oma-greedy-search allocation", format!("{:?}", alloc.case));
    r.value("oma-greedy-search", "throughput_nats", search.objective);
    r.value("oma-greedy-search", "throughput_bpcu", nats_to_bpcu(search.objective));

    match solve_throughput_highsnr(&inputs) {
        Ok(h) => {
            r.value("oma-greedy-highsnr", "x_star_m", h.placement.x_star);
            r.value("oma-greedy-highsnr", "throughput_nats", h.placement.objective);
            r.note("oma-greedy-highsnr roots", format!("{:?} (winner {:?})", h.roots, h.winner));
            r.note("oma-greedy-highsnr regime", if h.high_snr_regime { "interior split" } else { "floor active" });
        }
        Err(pinchopt::Error::Infeasible(msg)) => r.note("oma-greedy-highsnr", msg),
        Err(e) => return Err(e.into()),
    }
    match greedy_power_given_x(&inputs, 0.0) {
        Ok(a) => r.value("oma-greedy-conventional", "throughput_nats", throughput(&inputs, 0.0, &a)),
        Err(_) => r.note("oma-greedy-conventional", "rate floors unreachable from x = 0"),
    }
    if certify {
        let gap = allocation_sweep_gap(&inputs, search.x_star, search.objective)?;
        r.certify("power split vs 1e5-point sweep at x*, nats", gap, 1e-9);
    }
    Ok(r)
}

pub fn noma(cfg: &ExperimentConfig, layout: &UserLayout, rate: f64, certify: bool) -> Result<Report> {
    let (ordered, perm) = order_users_by_y(layout);
    let inputs = NomaInputs::new(cfg.params, ordered, rate)?;
    let sol = solve_noma_closed_form(&inputs)?;
    let bpcu = nats_to_bpcu(rate);
    let mut r = Report::new(format!("NOMA, 2 users, R = {rate} nats ({bpcu} BPCU)"), bpcu);
    // Report in the caller's user numbering.
    let original = |k: usize| perm[k] + 1;
    r.value("noma", "x_star_m", sol.x_star);
    r.value("noma", "sic_user", original(sol.sic_user) as f64);
    let mut powers = [0.0; 2];
    let mut rates = [0.0; 2];
    for k in 0..2 {
        powers[perm[k]] = sol.powers[k];
        rates[perm[k]] = if k == sol.sic_user { sol.rates.strong } else { sol.rates.weak };
    }
    per_user(&mut r, "noma", "power_w", &powers);
    per_user(&mut r, "noma", "rate_nats", &rates);
    r.value("noma", "sic_rate_nats", sol.rates.sic);
    r.value("noma", "total_power_w", sol.total);
    let checks = validate_assumptions(&sol, &inputs);
    r.note("noma assumptions", format!("{checks:?}"));
    if certify {
        let oracle = solve_noma_search(&NomaInputs::new(cfg.params, layout.clone(), rate)?, &cfg.grid()?)?;
        r.value("noma-search", "total_power_w", oracle.total);
        let gap = relative_loss(sol.total, oracle.total, false);
        if rate >= CERTIFIED_RATE {
            r.certify("total power vs two-order grid search, relative", gap, 1e-6);
        } else {
            r.note("certify", format!("gap {gap:e}; closed form is only certified for R >= {CERTIFIED_RATE} nats"));
        }
        if !checks.all_pass() {
            r.certify("assumption checks", f64::INFINITY, 0.0);
        }
    }
    Ok(r)
}

pub fn outage(
    cfg: &ExperimentConfig,
    layout: Option<&UserLayout>,
    budget_dbm: f64,
    rate: f64,
    certify: bool,
) -> Result<Report> {
    let users = layout.map_or(cfg.users, UserLayout::len);
    let budget = pinchopt::channel::dbm_to_watt(budget_dbm);
    let inputs = OutageInputs::new(cfg.params, users, rate, budget)?;
    let mut r = Report::new(
        format!("power outage, {users} users, per-user budget {budget_dbm} dBm, R = {rate} nats"),
        budget_dbm,
    );
    if let Some(l) = layout {
        let x = l.mean_x();
        r.value("oma-outage", "x_star_m", x);
        for m in 0..users {
            let mut i = inputs;
            i.user_index = m;
            r.value("oma-outage", &format!("in_outage_{}", m + 1), f64::from(u8::from(in_outage(&i, l, x))));
        }
    }
    let analytic = (users == 2).then(|| analytic_outage_two_user(&inputs)).transpose()?;
    if let Some(p) = analytic {
        r.value("oma-outage-analytic", "outage_probability", p);
    }
    let mc = empirical_outage(&inputs, cfg.trials, cfg.seed)?;
    let conv = empirical_outage_conventional(&inputs, cfg.trials, cfg.seed)?;
    r.estimate("oma-outage", "outage_probability", mc.probability, mc.stderr, mc.trials);
    r.estimate("oma-outage-conventional", "outage_probability", conv.probability, conv.stderr, conv.trials);
    if certify {
        let Some(p) = analytic else {
            return Err(CliError::Config("outage certification needs users = 2".into()));
        };
        // Measured in standard errors; exact agreement passes when the estimate is degenerate.
        let diff = (p - mc.probability).abs();
        let gap = if diff <= 1e-12 { 0.0 } else { diff / mc.stderr };
        r.certify("analytic vs Monte Carlo, standard errors", gap, 3.0);
    }
    Ok(r)
}
