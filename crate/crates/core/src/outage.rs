//! Power outage probability of the mean-position placement.
//!
//! With the antenna at the mean user abscissa and the minimum-power
//! allocation, user `m` is in outage when its required power
//! `ε((x* − x_m)² + y_m² + d²)` reaches the per-user budget `P̄`. Users are
//! independent and uniform over the service area.
//!
//! For two users the probability has a closed form; for any `M` it is
//! estimated by Monte Carlo with per-trial counter-based streams.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::channel::{SystemParams, UserLayout};
use crate::error::{Error, Result};
use crate::oma_fairness::oma_epsilon;
use crate::rng::{sample_layout, trial_rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageInputs {
    pub params: SystemParams,
    pub users: usize,
    /// Rate target, nats per channel use.
    pub rate: f64,
    /// Per-user power budget `P̄`, watts.
    pub budget: f64,
    /// Which user's outage is counted. All users share the same law.
    pub user_index: usize,
}

impl OutageInputs {
    pub fn new(params: SystemParams, users: usize, rate: f64, budget: f64) -> Result<Self> {
        if users < 2 {
            return Err(Error::InvalidParams(format!("outage needs at least two users, got {users}")));
        }
        for (name, v) in [("rate target", rate), ("per-user budget", budget)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { params, users, rate, budget, user_index: 0 })
    }

    pub fn epsilon(&self) -> f64 {
        oma_epsilon(&self.params, self.users, self.rate)
    }

    /// `P̄/ε − d²`; outage is certain when this is not positive.
    pub fn headroom(&self) -> f64 {
        let d = self.params.height();
        self.budget / self.epsilon() - d * d
    }
}

/// Intermediates of the two-user closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSet {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
}

impl ThetaSet {
    pub fn new(inputs: &OutageInputs) -> Self {
        let len = inputs.params.length();
        let quarter_l2 = len * len / 4.0;
        let theta1 = inputs.headroom() / quarter_l2;
        let theta4 = quarter_l2 * theta1;
        Self {
            theta1,
            theta2: (inputs.params.width() / 2.0).min(theta4.max(0.0).sqrt()),
            theta3: (quarter_l2 * (theta1 - 1.0)).max(0.0).sqrt(),
            theta4,
        }
    }
}

fn asin_guarded(arg: f64) -> f64 {
    let arg = if arg.abs() > 1.0 {
        assert!(arg.abs() - 1.0 <= 1e-12, "asin argument {arg} outside [-1, 1]");
        arg.signum()
    } else {
        arg
    };
    arg.asin()
}

/// Antiderivative of the conditional outage probability over `y ∈ [θ3, θ2]`.
fn outage_antiderivative(theta: &ThetaSet, length: f64, y: f64) -> f64 {
    let t4 = theta.theta4;
    let root = (t4 - y * y).max(0.0).sqrt();
    let arc = asin_guarded(y / t4.sqrt());
    y + theta.theta1 * y - 4.0 / (3.0 * length * length) * y.powi(3) - 4.0 / length * (y / 2.0 * root + t4 / 2.0 * arc)
}

/// Exact outage probability for two uniformly placed users.
pub fn analytic_outage_two_user(inputs: &OutageInputs) -> Result<f64> {
    if inputs.users != 2 {
        return Err(Error::DomainError { expected: 2, got: inputs.users });
    }
    if inputs.headroom() <= 0.0 {
        return Ok(1.0);
    }
    let theta = ThetaSet::new(inputs);
    let half_w = inputs.params.width() / 2.0;
    let len = inputs.params.length();

    let far_strip = (half_w - half_w.min(theta.theta4.sqrt())) / half_w;
    let partial = if theta.theta2 >= theta.theta3 {
        (outage_antiderivative(&theta, len, theta.theta2) - outage_antiderivative(&theta, len, theta.theta3)) / half_w
    } else {
        0.0
    };
    let p = far_strip + partial;
    debug_assert!((-1e-9..=1.0 + 1e-9).contains(&p), "outage probability {p} out of range");
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub probability: f64,
    /// Binomial standard error `√(p(1 − p)/n)`.
    pub stderr: f64,
    pub trials: u64,
}

impl OutageEstimate {
    fn from_count(outages: u64, trials: u64) -> Self {
        let p = outages as f64 / trials as f64;
        Self { probability: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), trials }
    }
}

/// Whether user `inputs.user_index` of `layout` misses its rate with the
/// antenna at `x_a`.
pub fn in_outage(inputs: &OutageInputs, layout: &UserLayout, x_a: f64) -> bool {
    let u = layout.users()[inputs.user_index.min(layout.len() - 1)];
    let d2 = inputs.params.height().powi(2);
    inputs.epsilon() * ((x_a - u.x).powi(2) + u.y * u.y + d2) >= inputs.budget
}

#[derive(Clone, Copy)]
enum Antenna {
    Pinching,
    Conventional,
}

const BATCH: u64 = 4096;

fn count_outages(inputs: &OutageInputs, trials: u64, seed: u64, antenna: Antenna) -> u64 {
    let batch = |b: u64| -> u64 {
        let end = ((b + 1) * BATCH).min(trials);
        (b * BATCH..end)
            .filter(|&t| {
                let layout = sample_layout(&mut trial_rng(seed, 0, t), inputs.users, &inputs.params, false);
                let x_a = match antenna {
                    Antenna::Pinching => layout.mean_x(),
                    Antenna::Conventional => 0.0,
                };
                in_outage(inputs, &layout, x_a)
            })
            .count() as u64
    };
    let batches = trials.div_ceil(BATCH);
    #[cfg(feature = "parallel")]
    let total = (0..batches).into_par_iter().map(batch).sum();
    #[cfg(not(feature = "parallel"))]
    let total = (0..batches).map(batch).sum();
    total
}

/// Monte Carlo outage estimate for the pinching antenna at the mean position.
///
/// Trial `t` draws its layout from stream `(seed, 0, t)`, so the estimate is
/// fixed by `(seed, trials)` whatever the thread count.
pub fn empirical_outage(inputs: &OutageInputs, trials: u64, seed: u64) -> Result<OutageEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParams("need at least one trial".into()));
    }
    Ok(OutageEstimate::from_count(count_outages(inputs, trials, seed, Antenna::Pinching), trials))
}

/// Same estimate for a conventional antenna fixed above the area centre.
pub fn empirical_outage_conventional(inputs: &OutageInputs, trials: u64, seed: u64) -> Result<OutageEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParams("need at least one trial".into()));
    }
    Ok(OutageEstimate::from_count(count_outages(inputs, trials, seed, Antenna::Conventional), trials))
}

/// Effective rate `(1 − P_out) R`.
pub fn outage_rate(probability: f64, rate: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&probability));
    (1.0 - probability) * rate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bpcu_to_nats, dbm_to_watt};

    fn inputs(budget_dbm: f64) -> OutageInputs {
        OutageInputs::new(SystemParams::default(), 2, bpcu_to_nats(2.5), dbm_to_watt(budget_dbm)).unwrap()
    }

    #[test]
    fn starved_budget_is_certain_outage() {
        let mut i = inputs(0.0);
        // Exactly at ε d².
        i.budget = i.epsilon() * 9.0;
        assert_eq!(analytic_outage_two_user(&i).unwrap(), 1.0);
        let est = empirical_outage(&i, 1000, 3).unwrap();
        assert_eq!(est.probability, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn generous_budget_never_fails() {
        let i = inputs(60.0);
        let theta = ThetaSet::new(&i);
        assert!(theta.theta3 > 5.0);
        assert_eq!(analytic_outage_two_user(&i).unwrap(), 0.0);
        assert_eq!(empirical_outage(&i, 5000, 1).unwrap().probability, 0.0);
    }

    #[test]
    fn closed_form_only_for_pairs() {
        let i = OutageInputs::new(SystemParams::default(), 3, 1.0, 1.0).unwrap();
        assert_eq!(analytic_outage_two_user(&i), Err(Error::DomainError { expected: 2, got: 3 }));
    }

    #[test]
    fn theta_relations() {
        let i = inputs(10.0);
        let t = ThetaSet::new(&i);
        assert!((t.theta4 - 400.0 * t.theta1).abs() < 1e-12 * t.theta4);
        assert!(t.theta2 <= t.theta4.sqrt());
    }

    #[test]
    fn analytic_agrees_with_monte_carlo_at_20dbm() {
        let i = inputs(20.0);
        let exact = analytic_outage_two_user(&i).unwrap();
        let est = empirical_outage(&i, 1_000_000, 2024).unwrap();
        assert!((exact - est.probability).abs() <= 3.0 * est.stderr, "{exact} vs {est:?}");
    }

    #[test]
    fn analytic_agrees_with_monte_carlo_in_partial_regime() {
        // 12.55 dBm: g-difference term active with θ3 > 0; 5 dBm: θ3 = 0.
        for (dbm, theta3_positive) in [(12.55, true), (5.0, false)] {
            let i = inputs(dbm);
            let t = ThetaSet::new(&i);
            assert_eq!(t.theta3 > 0.0, theta3_positive);
            assert!(t.theta2 > t.theta3);
            let exact = analytic_outage_two_user(&i).unwrap();
            let est = empirical_outage(&i, 400_000, 77).unwrap();
            assert!(est.stderr > 0.0);
            assert!((exact - est.probability).abs() <= 3.0 * est.stderr, "{dbm} dBm: {exact} vs {est:?}");
        }
    }

    #[test]
    fn outage_decreases_with_budget() {
        let mut last = 1.0;
        for k in 0..200 {
            let p = analytic_outage_two_user(&inputs(-10.0 + 0.25 * k as f64)).unwrap();
            assert!(p <= last + 1e-12);
            last = p;
        }
    }

    #[test]
    fn pinching_beats_conventional() {
        let i = inputs(10.0);
        let pin = empirical_outage(&i, 50_000, 5).unwrap().probability;
        let conv = empirical_outage_conventional(&i, 50_000, 5).unwrap().probability;
        assert!(pin < conv);
    }

    #[test]
    fn effective_rate() {
        assert_eq!(outage_rate(1.0, 3.0), 0.0);
        assert_eq!(outage_rate(0.0, 3.0), 3.0);
        assert_eq!(outage_rate(0.25, 2.0), 1.5);
    }
}
