//! User-fairness OMA: max-min rate under a power budget, total-power
//! minimization under a common rate target, and the power saved relative to a
//! fixed antenna at the centre of the service area.
//!
//! Both problems activate the antenna at the mean user abscissa. The users'
//! distances to the waveguide never enter the placement.

use crate::channel::{rate_oma, PlacementSolution, SystemParams, UserLayout};
use crate::error::{Error, Result};
use crate::oracle::{grid_optimize, GridSpec, Sense};

/// Per-user rate-floor coefficients for `M`-slot TDMA at rate `R` (nats).
///
/// A user at squared antenna distance `τ` needs `ε·τ` watts, i.e.
/// `ε (x − x_m)² + τ_m` with `τ_m = ε (y_m² + d²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonTau {
    pub epsilon: f64,
    pub tau: Vec<f64>,
}

impl EpsilonTau {
    pub fn new(params: &SystemParams, layout: &UserLayout, rate: f64) -> Self {
        let epsilon = oma_epsilon(params, layout.len(), rate);
        let d2 = params.height() * params.height();
        let tau = layout.users().iter().map(|u| epsilon * (u.y * u.y + d2)).collect();
        Self { epsilon, tau }
    }
}

/// `(σ²/η)(e^{M R} − 1)`.
pub fn oma_epsilon(params: &SystemParams, users: usize, rate: f64) -> f64 {
    params.noise_over_gain() * (users as f64 * rate).exp_m1()
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive and finite, got {value}")))
    }
}

fn assert_on_waveguide(params: &SystemParams, x: f64) {
    let (lo, hi) = params.waveguide_span();
    let slack = 1e-12 * params.length();
    debug_assert!(x >= lo - slack && x <= hi + slack, "placement {x} left the waveguide");
}

/// Best max-min allocation for an antenna held at `x`.
///
/// Powers are proportional to the squared distances, so every user gets the
/// same rate `t = (1/M) ln((ηP + σ²Στ)/(σ²Στ))`, which is the objective.
pub fn maxmin_at(params: &SystemParams, layout: &UserLayout, total_power: f64, x: f64) -> PlacementSolution {
    let taus = layout.taus(params, x);
    let sum: f64 = taus.iter().sum();
    let m = layout.len() as f64;
    let powers = taus.iter().map(|t| t / sum * total_power).collect();
    let objective = (params.eta() * total_power / (params.noise_w() * sum)).ln_1p() / m;
    PlacementSolution { x_star: x, powers, objective }
}

/// Maximizes the worst user's OMA rate under the sum-power budget.
pub fn solve_maxmin(params: &SystemParams, layout: &UserLayout, total_power: f64) -> Result<PlacementSolution> {
    check_positive("total power", total_power)?;
    let x = layout.mean_x();
    assert_on_waveguide(params, x);
    Ok(maxmin_at(params, layout, total_power, x))
}

/// Per-user rates of a solution, for checking that they coincide.
pub fn user_rates(params: &SystemParams, layout: &UserLayout, solution: &PlacementSolution) -> Vec<f64> {
    let m = layout.len();
    layout
        .taus(params, solution.x_star)
        .iter()
        .zip(&solution.powers)
        .map(|(&t, &p)| rate_oma(params, p, t, m))
        .collect()
}

/// Least total power that gives every user rate `rate` with the antenna at `x`.
pub fn power_min_at(params: &SystemParams, layout: &UserLayout, rate: f64, x: f64) -> PlacementSolution {
    let coeffs = EpsilonTau::new(params, layout, rate);
    let powers: Vec<f64> =
        layout.users().iter().zip(&coeffs.tau).map(|(u, t)| coeffs.epsilon * (x - u.x).powi(2) + t).collect();
    let objective = powers.iter().sum();
    PlacementSolution { x_star: x, powers, objective }
}

/// Minimizes the total transmit power subject to every user reaching `rate`.
pub fn solve_power_min(params: &SystemParams, layout: &UserLayout, rate: f64) -> Result<PlacementSolution> {
    check_positive("rate target", rate)?;
    let x = layout.mean_x();
    assert_on_waveguide(params, x);
    Ok(power_min_at(params, layout, rate, x))
}

/// Total power with a conventional antenna fixed above the area centre.
pub fn conventional_power_min(params: &SystemParams, layout: &UserLayout, rate: f64) -> Result<f64> {
    check_positive("rate target", rate)?;
    Ok(power_min_at(params, layout, rate, 0.0).objective)
}

/// Max-min rate with a conventional antenna fixed above the area centre.
pub fn conventional_maxmin(params: &SystemParams, layout: &UserLayout, total_power: f64) -> Result<PlacementSolution> {
    check_positive("total power", total_power)?;
    Ok(maxmin_at(params, layout, total_power, 0.0))
}

/// Max-min placement by exhaustive search over `spec`, with the closed-form
/// allocation at each candidate position.
pub fn solve_maxmin_search(
    params: &SystemParams,
    layout: &UserLayout,
    total_power: f64,
    spec: &GridSpec,
) -> Result<PlacementSolution> {
    check_positive("total power", total_power)?;
    let (x, _) = grid_optimize(|x| maxmin_at(params, layout, total_power, x).objective, spec, Sense::Maximize)?;
    Ok(maxmin_at(params, layout, total_power, x))
}

/// Power-minimizing placement by exhaustive search over `spec`.
pub fn solve_power_min_search(
    params: &SystemParams,
    layout: &UserLayout,
    rate: f64,
    spec: &GridSpec,
) -> Result<PlacementSolution> {
    check_positive("rate target", rate)?;
    let (x, _) = grid_optimize(|x| power_min_at(params, layout, rate, x).objective, spec, Sense::Minimize)?;
    Ok(power_min_at(params, layout, rate, x))
}

/// Power saved by the pinching antenna: `(1/M) ε (Σ x_m)²`.
pub fn power_gain_delta(params: &SystemParams, layout: &UserLayout, rate: f64) -> Result<f64> {
    check_positive("rate target", rate)?;
    let epsilon = oma_epsilon(params, layout.len(), rate);
    let s = layout.sum_x();
    Ok(epsilon * s * s / layout.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bpcu_to_nats;
    use proptest::prelude::*;

    fn params() -> SystemParams {
        SystemParams::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn symmetric_pair_centres_the_antenna() {
        let p = params();
        let layout = UserLayout::from_coords(&[(-7.5, 4.0), (7.5, -1.0)], &p).unwrap();
        let sol = solve_maxmin(&p, &layout, 0.1).unwrap();
        assert_eq!(sol.x_star, 0.0);
    }

    #[test]
    fn single_user_gets_everything() {
        let p = params();
        let layout = UserLayout::from_coords(&[(12.25, -3.5)], &p).unwrap();
        let sol = solve_maxmin(&p, &layout, 0.25).unwrap();
        assert_eq!(sol.x_star, 12.25);
        assert_eq!(sol.powers, vec![0.25]);
    }

    #[test]
    fn maxmin_rates_are_equal_and_budget_is_spent() {
        let p = params();
        let layout = UserLayout::from_coords(&[(-18.0, 4.0), (3.0, -2.0), (11.0, 0.5), (19.0, -4.9)], &p).unwrap();
        let sol = solve_maxmin(&p, &layout, 0.02).unwrap();
        assert!(rel(sol.total_power(), 0.02) < 1e-12);
        for r in user_rates(&p, &layout, &sol) {
            assert!(rel(r, sol.objective) < 1e-12);
        }
    }

    #[test]
    fn maxmin_matches_grid_oracle() {
        let p = params();
        let layout = UserLayout::from_coords(&[(-14.3, 2.2), (6.1, -4.4), (17.8, 3.9)], &p).unwrap();
        let total = 0.1;
        let sol = solve_maxmin(&p, &layout, total).unwrap();
        let (_, best) =
            grid_optimize(|x| maxmin_at(&p, &layout, total, x).objective, &GridSpec::waveguide(&p), Sense::Maximize)
                .unwrap();
        assert!(sol.objective >= best * (1.0 - 1e-9));
    }

    #[test]
    fn power_min_with_colocated_users() {
        let p = params();
        let layout = UserLayout::from_coords(&[(5.0, 1.0), (5.0, -4.0), (5.0, 2.5)], &p).unwrap();
        let rate = 0.8;
        let sol = solve_power_min(&p, &layout, rate).unwrap();
        let coeffs = EpsilonTau::new(&p, &layout, rate);
        assert_eq!(sol.x_star, 5.0);
        for (power, t) in sol.powers.iter().zip(&coeffs.tau) {
            assert!(rel(*power, *t) < 1e-15);
        }
    }

    #[test]
    fn power_min_meets_every_rate_exactly() {
        let p = params();
        let layout = UserLayout::from_coords(&[(-9.0, 3.0), (2.0, -1.0), (16.0, 4.5)], &p).unwrap();
        let rate = bpcu_to_nats(2.5);
        let sol = solve_power_min(&p, &layout, rate).unwrap();
        for r in user_rates(&p, &layout, &sol) {
            assert!(rel(r, rate) < 1e-12);
        }
        assert!(sol.powers.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn power_min_matches_grid_oracle() {
        let p = params();
        let layout = UserLayout::from_coords(&[(-16.4, -2.7), (9.3, 4.1)], &p).unwrap();
        let rate = bpcu_to_nats(2.5);
        let sol = solve_power_min(&p, &layout, rate).unwrap();
        let (_, best) =
            grid_optimize(|x| power_min_at(&p, &layout, rate, x).objective, &GridSpec::waveguide(&p), Sense::Minimize)
                .unwrap();
        assert!(sol.objective <= best * (1.0 + 1e-9));
    }

    #[test]
    fn search_solvers_land_on_the_mean() {
        let p = params();
        let layout = UserLayout::from_coords(&[(-11.0, 0.5), (4.0, -3.0), (13.0, 2.0)], &p).unwrap();
        let spec = GridSpec::waveguide(&p);
        let a = solve_maxmin_search(&p, &layout, 0.05, &spec).unwrap();
        let b = solve_power_min_search(&p, &layout, 1.2, &spec).unwrap();
        assert!((a.x_star - 2.0).abs() < 1e-6);
        assert!((b.x_star - 2.0).abs() < 1e-6);
        assert!(rel(b.objective, solve_power_min(&p, &layout, 1.2).unwrap().objective) < 1e-12);
    }

    #[test]
    fn balanced_layout_has_no_gain() {
        let p = params();
        let layout = UserLayout::from_coords(&[(-6.0, 1.0), (2.0, -3.0), (4.0, 4.0)], &p).unwrap();
        let rate = 1.0;
        assert_eq!(power_gain_delta(&p, &layout, rate).unwrap(), 0.0);
        let pin = solve_power_min(&p, &layout, rate).unwrap().objective;
        let conv = conventional_power_min(&p, &layout, rate).unwrap();
        assert!(rel(pin, conv) < 1e-14);
    }

    #[test]
    fn single_user_gain_and_conventional_baseline() {
        let p = params();
        let rate = 0.7;
        let layout = UserLayout::from_coords(&[(-11.0, 2.0)], &p).unwrap();
        let eps = oma_epsilon(&p, 1, rate);
        assert!(rel(power_gain_delta(&p, &layout, rate).unwrap(), eps * 121.0) < 1e-14);

        let centred = UserLayout::from_coords(&[(0.0, 2.0)], &p).unwrap();
        assert!(rel(conventional_power_min(&p, &centred, rate).unwrap(), eps * 13.0) < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_budgets() {
        let p = params();
        let layout = UserLayout::from_coords(&[(0.0, 0.0)], &p).unwrap();
        assert!(solve_maxmin(&p, &layout, 0.0).is_err());
        assert!(solve_power_min(&p, &layout, -1.0).is_err());
        assert!(power_gain_delta(&p, &layout, 0.0).is_err());
    }

    fn layout_strategy(max_users: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-20.0f64..=20.0, -5.0f64..=5.0), 1..=max_users)
    }

    proptest! {
        #[test]
        fn gain_identity_and_sign(coords in layout_strategy(6), rate in 0.05f64..3.0) {
            let p = params();
            let layout = UserLayout::from_coords(&coords, &p).unwrap();
            let delta = power_gain_delta(&p, &layout, rate).unwrap();
            let conv = conventional_power_min(&p, &layout, rate).unwrap();
            let pin = solve_power_min(&p, &layout, rate).unwrap().objective;
            prop_assert!(delta >= 0.0);
            prop_assert!(conv >= pin);
            prop_assert!((conv - pin - delta).abs() <= 1e-12 * conv);
        }

        #[test]
        fn same_side_users_gain_more(
            mags in prop::collection::vec((0.1f64..=20.0, -5.0f64..=5.0), 2..=5),
            flip in 0usize..5,
            rate in 0.1f64..2.0,
        ) {
            // Equal |x_m|; all on one side versus one user flipped across the centre.
            let p = params();
            let same: Vec<_> = mags.iter().map(|&(a, y)| (a, y)).collect();
            let mut mixed = same.clone();
            let k = flip % mixed.len();
            mixed[k].0 = -mixed[k].0;
            let gain_same = power_gain_delta(&p, &UserLayout::from_coords(&same, &p).unwrap(), rate).unwrap();
            let gain_mixed = power_gain_delta(&p, &UserLayout::from_coords(&mixed, &p).unwrap(), rate).unwrap();
            prop_assert!(gain_same > gain_mixed);
        }

        #[test]
        fn placement_stays_on_waveguide(coords in layout_strategy(8), total in 1e-4f64..10.0) {
            let p = params();
            let layout = UserLayout::from_coords(&coords, &p).unwrap();
            let sol = solve_maxmin(&p, &layout, total).unwrap();
            prop_assert!(sol.x_star.abs() <= 20.0);
            prop_assert!(sol.powers.iter().all(|&x| x > 0.0));
        }
    }
}
