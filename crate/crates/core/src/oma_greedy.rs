//! Two-user OMA throughput maximization with per-user rate floors.
//!
//! For a fixed antenna position the optimal power split has a closed form
//! with three branches: user 2 held at its floor, user 1 held at its floor,
//! or the interior water-filling split. The placement itself has no closed
//! form. It is found either by a one-dimensional search over the waveguide or,
//! at high SNR, by evaluating the real roots of the derivative of the
//! distance product `f(x) = τ₁(x) τ₂(x)` together with the waveguide ends.

use crate::channel::{rate_oma, PlacementSolution, SystemParams, User, UserLayout};
use crate::cubic::{polish, real_cubic_roots};
use crate::error::{Error, Result};
use crate::oma_fairness::oma_epsilon;
use crate::oracle::{grid_optimize, grid_optimize_partial, GridSpec, Sense};

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyInputs {
    pub params: SystemParams,
    pub layout: UserLayout,
    /// Sum-power budget, watts.
    pub total_power: f64,
    /// Per-user rate floor, nats per channel use.
    pub rate_floor: f64,
}

impl GreedyInputs {
    pub fn new(params: SystemParams, layout: UserLayout, total_power: f64, rate_floor: f64) -> Result<Self> {
        if layout.len() != 2 {
            return Err(Error::DomainError { expected: 2, got: layout.len() });
        }
        for (name, v) in [("total power", total_power), ("rate floor", rate_floor)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { params, layout, total_power, rate_floor })
    }

    /// Power per unit squared distance needed to reach the floor.
    pub fn epsilon(&self) -> f64 {
        oma_epsilon(&self.params, 2, self.rate_floor)
    }

    fn taus(&self, x: f64) -> (f64, f64) {
        let t = self.layout.taus(&self.params, x);
        (t[0], t[1])
    }
}

/// Which branch of the fixed-placement allocation fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyCase {
    /// User 2 sits at its rate floor, user 1 takes the rest.
    SecondAtFloor,
    /// User 1 sits at its rate floor, user 2 takes the rest.
    FirstAtFloor,
    /// Both floors slack; equal water level.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyAllocation {
    pub p1: f64,
    pub p2: f64,
    pub case: GreedyCase,
}

/// Throughput-optimal power split with the antenna held at `x`.
pub fn greedy_power_given_x(inputs: &GreedyInputs, x: f64) -> Result<GreedyAllocation> {
    let p = inputs.total_power;
    let eps = inputs.epsilon();
    let (t1, t2) = inputs.taus(x);
    let (floor1, floor2) = (eps * t1, eps * t2);
    if p < floor1 + floor2 - 1e-12 * p {
        return Err(Error::Infeasible(format!(
            "budget {p} W is below the {} W needed for both rate floors at x = {x}",
            floor1 + floor2
        )));
    }
    let nog = inputs.params.noise_over_gain();
    let (s1, s2) = (nog * t1, nog * t2);

    let second_floor_mult = 1.0 / (p - floor2 + s1) - 1.0 / (floor2 + s2);
    if second_floor_mult >= 0.0 {
        return Ok(GreedyAllocation { p1: p - floor2, p2: floor2, case: GreedyCase::SecondAtFloor });
    }
    let first_floor_mult = 1.0 / (p - floor1 + s2) - 1.0 / (floor1 + s1);
    if first_floor_mult >= 0.0 {
        return Ok(GreedyAllocation { p1: floor1, p2: p - floor1, case: GreedyCase::FirstAtFloor });
    }
    Ok(GreedyAllocation { p1: p / 2.0 + (s2 - s1) / 2.0, p2: p / 2.0 + (s1 - s2) / 2.0, case: GreedyCase::Interior })
}

/// Sum of the two users' OMA rates.
pub fn throughput(inputs: &GreedyInputs, x: f64, allocation: &GreedyAllocation) -> f64 {
    let (t1, t2) = inputs.taus(x);
    rate_oma(&inputs.params, allocation.p1, t1, 2) + rate_oma(&inputs.params, allocation.p2, t2, 2)
}

fn best_throughput_at(inputs: &GreedyInputs, x: f64) -> Option<f64> {
    greedy_power_given_x(inputs, x).ok().map(|a| throughput(inputs, x, &a))
}

fn solution_at(inputs: &GreedyInputs, x: f64) -> Result<PlacementSolution> {
    let a = greedy_power_given_x(inputs, x)?;
    Ok(PlacementSolution { x_star: x, powers: vec![a.p1, a.p2], objective: throughput(inputs, x, &a) })
}

/// Throughput-maximizing placement by exhaustive search over `spec`.
pub fn solve_throughput_search(inputs: &GreedyInputs, spec: &GridSpec) -> Result<PlacementSolution> {
    let (x, _) =
        grid_optimize_partial(|x| best_throughput_at(inputs, x), spec, Sense::Maximize).map_err(|e| match e {
            Error::Infeasible(_) => Error::Infeasible("no antenna position admits both rate floors".into()),
            other => other,
        })?;
    solution_at(inputs, x)
}

/// `f(x) = τ₁(x) τ₂(x)`.
pub fn distance_product(params: &SystemParams, layout: &UserLayout, x: f64) -> f64 {
    layout.taus(params, x).iter().product()
}

fn product_derivative(u1: User, u2: User, b1: f64, b2: f64, x: f64) -> (f64, f64) {
    let (e1, e2) = (x - u1.x, x - u2.x);
    let (q1, q2) = (e1 * e1 + b1, e2 * e2 + b2);
    let v = 2.0 * e1 * q2 + 2.0 * e2 * q1;
    let dv = 2.0 * (q1 + q2) + 8.0 * e1 * e2;
    (v, dv)
}

/// `|f′(x)|` relative to the magnitude of its two terms.
pub fn product_derivative_residual(params: &SystemParams, layout: &UserLayout, x: f64) -> f64 {
    let (u1, u2, b1, b2) = pair_terms(params, layout);
    let (e1, e2) = (x - u1.x, x - u2.x);
    let (q1, q2) = (e1 * e1 + b1, e2 * e2 + b2);
    let (v, _) = product_derivative(u1, u2, b1, b2, x);
    let scale = 2.0 * e1.abs() * q2 + 2.0 * e2.abs() * q1;
    if scale == 0.0 {
        0.0
    } else {
        v.abs() / scale
    }
}

fn pair_terms(params: &SystemParams, layout: &UserLayout) -> (User, User, f64, f64) {
    let u = layout.users();
    let d2 = params.height() * params.height();
    (u[0], u[1], u[0].y * u[0].y + d2, u[1].y * u[1].y + d2)
}

/// Real stationary points of `f(x) = τ₁(x) τ₂(x)`: the roots of the cubic
///
/// `f′(x) = 2(x − x₁)((x − x₂)² + y₂² + d²) + 2(x − x₂)((x − x₁)² + y₁² + d²)`.
pub fn cubic_roots_highsnr(layout: &UserLayout, params: &SystemParams) -> Vec<f64> {
    assert_eq!(layout.len(), 2, "the distance product is defined for two users");
    let (u1, u2, b1, b2) = pair_terms(params, layout);
    let s = u1.x + u2.x;
    let p = u1.x * u2.x;
    // f′/2 = 2x³ − 3s x² + (s² + 2p + b₁ + b₂) x − (p s + b₂ x₁ + b₁ x₂)
    let coeffs = [2.0, -3.0 * s, s * s + 2.0 * p + b1 + b2, -(p * s + b2 * u1.x + b1 * u2.x)];
    let mut roots: Vec<f64> =
        real_cubic_roots(coeffs).into_iter().map(|r| polish(|x| product_derivative(u1, u2, b1, b2, x), r, 8)).collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    roots
}

/// Where the winning high-SNR candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate {
    /// Index into the ascending list of real roots, after clipping to the waveguide.
    Root(usize),
    LowerEnd,
    UpperEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HighSnrSolution {
    pub placement: PlacementSolution,
    pub winner: Candidate,
    pub roots: Vec<f64>,
    /// True when the interior split is active at the chosen placement, i.e.
    /// the high-SNR approximation behind the candidate set is in force.
    pub high_snr_regime: bool,
}

/// Placement from the roots of `f′` plus the waveguide ends, each scored with
/// the exact fixed-placement allocation.
pub fn solve_throughput_highsnr(inputs: &GreedyInputs) -> Result<HighSnrSolution> {
    let (lo, hi) = inputs.params.waveguide_span();
    let roots = cubic_roots_highsnr(&inputs.layout, &inputs.params);
    let candidates = roots
        .iter()
        .enumerate()
        .map(|(i, &r)| (Candidate::Root(i), r.clamp(lo, hi)))
        .chain([(Candidate::LowerEnd, lo), (Candidate::UpperEnd, hi)]);

    let mut best: Option<(Candidate, f64, f64)> = None;
    for (tag, x) in candidates {
        let Some(value) = best_throughput_at(inputs, x) else { continue };
        if best.is_none_or(|(_, _, b)| value > b) {
            best = Some((tag, x, value));
        }
    }
    let (winner, x, _) =
        best.ok_or_else(|| Error::Infeasible("no root or waveguide end admits both rate floors".into()))?;
    let allocation = greedy_power_given_x(inputs, x)?;
    Ok(HighSnrSolution {
        placement: solution_at(inputs, x)?,
        winner,
        roots,
        high_snr_regime: allocation.case == GreedyCase::Interior,
    })
}

/// Global minimizer of the distance product over `spec`.
pub fn minimize_distance_product(params: &SystemParams, layout: &UserLayout, spec: &GridSpec) -> Result<f64> {
    grid_optimize(|x| distance_product(params, layout, x), spec, Sense::Minimize).map(|(x, _)| x)
}

/// Whether the distance-product minimizer `x_star` sits nearer (along the
/// waveguide) to the user closer to the waveguide.
///
/// Equal `|y|` imposes nothing: the product is then symmetric under swapping
/// the users, so mirror-image minimizers tie.
pub fn nearer_user_attracts_antenna(layout: &UserLayout, x_star: f64) -> bool {
    const SLACK: f64 = 1e-9;
    let u = layout.users();
    let (g1, g2) = ((x_star - u[0].x).abs(), (x_star - u[1].x).abs());
    let (a1, a2) = (u[0].y.abs(), u[1].y.abs());
    if a1 < a2 {
        g1 <= g2 + SLACK
    } else if a1 > a2 {
        g1 + SLACK >= g2
    } else {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bpcu_to_nats, dbm_to_watt};
    use crate::oracle::grid_power_alloc_sweep;
    use proptest::prelude::*;

    fn inputs(coords: [(f64, f64); 2], power_dbm: f64, floor_bpcu: f64) -> GreedyInputs {
        let params = SystemParams::default();
        let layout = UserLayout::from_coords(&coords, &params).unwrap();
        GreedyInputs::new(params, layout, dbm_to_watt(power_dbm), bpcu_to_nats(floor_bpcu)).unwrap()
    }

    #[test]
    fn equal_distances_split_evenly() {
        let i = inputs([(-4.0, 2.0), (4.0, -2.0)], 20.0, 1.0);
        let a = greedy_power_given_x(&i, 0.0).unwrap();
        assert_eq!(a.case, GreedyCase::Interior);
        assert_eq!(a.p1, a.p2);
        assert!((a.p1 - i.total_power / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_slack_budget_pins_both_floors() {
        let mut i = inputs([(-12.0, 3.0), (9.0, -1.0)], 0.0, 1.0);
        let x = 2.5;
        let (t1, t2) = i.taus(x);
        i.total_power = i.epsilon() * (t1 + t2);
        let a = greedy_power_given_x(&i, x).unwrap();
        assert!((a.p1 - i.epsilon() * t1).abs() <= 1e-12 * i.total_power);
        assert!((a.p2 - i.epsilon() * t2).abs() <= 1e-12 * i.total_power);
    }

    #[test]
    fn below_floor_budget_is_infeasible() {
        let mut i = inputs([(-12.0, 3.0), (9.0, -1.0)], 0.0, 1.0);
        let (t1, t2) = i.taus(0.0);
        i.total_power = 0.99 * i.epsilon() * (t1 + t2);
        assert!(matches!(greedy_power_given_x(&i, 0.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn floor_branches_fire_at_low_budget() {
        // A budget barely above both floors pushes the far user to its floor.
        let mut i = inputs([(-15.0, 0.5), (15.0, 4.5)], 0.0, 2.0);
        let x = -15.0;
        let (t1, t2) = i.taus(x);
        i.total_power = i.epsilon() * (t1 + t2) * 1.2;
        assert_eq!(greedy_power_given_x(&i, x).unwrap().case, GreedyCase::SecondAtFloor);
        let (t1, t2) = i.taus(15.0);
        i.total_power = i.epsilon() * (t1 + t2) * 1.2;
        assert_eq!(greedy_power_given_x(&i, 15.0).unwrap().case, GreedyCase::FirstAtFloor);
    }

    #[test]
    fn allocation_beats_power_split_sweep() {
        let i = inputs([(-7.7, 3.1), (13.4, -0.6)], 30.0, 1.0);
        for x in [-20.0, -7.7, 0.0, 3.3, 13.4, 20.0] {
            let a = greedy_power_given_x(&i, x).unwrap();
            let got = throughput(&i, x, &a);
            let (t1, t2) = i.taus(x);
            let eps = i.epsilon();
            let p = i.total_power;
            let spec = GridSpec::new(eps * t1, p - eps * t2, 100_000, 0).unwrap();
            let eval = |p1: f64| {
                let cand = GreedyAllocation { p1, p2: p - p1, case: GreedyCase::Interior };
                Some(throughput(&i, x, &cand))
            };
            let (_, best) = grid_power_alloc_sweep(eval, p, &spec).unwrap();
            assert!(best <= got + 1e-9, "x = {x}: sweep {best} > closed form {got}");
        }
    }

    #[test]
    fn throughput_examples() {
        let i = inputs([(-3.0, 1.0), (3.0, 1.0)], 20.0, 0.5);
        let zero = GreedyAllocation { p1: 0.0, p2: 0.0, case: GreedyCase::Interior };
        assert_eq!(throughput(&i, 0.0, &zero), 0.0);
        let half = GreedyAllocation { p1: 0.05, p2: 0.05, case: GreedyCase::Interior };
        let single = rate_oma(&i.params, 0.05, 19.0, 2);
        assert!((throughput(&i, 0.0, &half) - 2.0 * single).abs() < 1e-15);
    }

    #[test]
    fn symmetric_layout_has_mirror_optima() {
        let i = inputs([(-9.0, 2.0), (9.0, 2.0)], 30.0, 1.0);
        let sol = solve_throughput_search(&i, &GridSpec::waveguide(&i.params)).unwrap();
        let mirror = best_throughput_at(&i, -sol.x_star).unwrap();
        assert!((mirror - sol.objective).abs() < 1e-9);
    }

    #[test]
    fn colocated_users() {
        let i = inputs([(6.0, 1.0), (6.0, -3.0)], 30.0, 1.0);
        let sol = solve_throughput_search(&i, &GridSpec::waveguide(&i.params)).unwrap();
        assert!((sol.x_star - 6.0).abs() < 1e-6);
        let hs = solve_throughput_highsnr(&i).unwrap();
        assert_eq!(hs.roots, vec![6.0]);
        assert_eq!(hs.placement.x_star, 6.0);
    }

    #[test]
    fn symmetric_roots() {
        // x = ±a, y₁ = y₂ = y: roots 0 and ±√(a² − y² − d²).
        let params = SystemParams::default();
        let (a, y) = (10.0, 2.0);
        let layout = UserLayout::from_coords(&[(-a, y), (a, y)], &params).unwrap();
        let roots = cubic_roots_highsnr(&layout, &params);
        let off = (a * a - y * y - 9.0f64).sqrt();
        assert_eq!(roots.len(), 3);
        for (got, want) in roots.iter().zip([-off, 0.0, off]) {
            assert!((got - want).abs() < 1e-12, "{roots:?}");
        }
        let i = GreedyInputs::new(params, layout, dbm_to_watt(40.0), bpcu_to_nats(1.0)).unwrap();
        let hs = solve_throughput_highsnr(&i).unwrap();
        assert!(matches!(hs.winner, Candidate::Root(0) | Candidate::Root(2)));
        assert!(hs.high_snr_regime);
    }

    #[test]
    fn highsnr_matches_search_at_40dbm() {
        let i = inputs([(-17.2, 0.8), (5.9, -4.6)], 40.0, 1.0);
        let search = solve_throughput_search(&i, &GridSpec::waveguide(&i.params)).unwrap();
        let hs = solve_throughput_highsnr(&i).unwrap();
        assert!(hs.placement.objective >= search.objective - 1e-6);
    }

    #[test]
    fn nearer_user_example() {
        let params = SystemParams::default();
        let layout = UserLayout::from_coords(&[(-10.0, 0.0), (10.0, 5.0)], &params).unwrap();
        let x = minimize_distance_product(&params, &layout, &GridSpec::waveguide(&params)).unwrap();
        assert!((x + 10.0).abs() < (x - 10.0).abs());
        assert!(nearer_user_attracts_antenna(&layout, x));
        assert!(!nearer_user_attracts_antenna(&layout, 9.0));
    }

    #[test]
    fn rejects_wrong_user_count() {
        let params = SystemParams::default();
        let layout = UserLayout::from_coords(&[(0.0, 0.0)], &params).unwrap();
        assert_eq!(
            GreedyInputs::new(params, layout, 1.0, 1.0).unwrap_err(),
            Error::DomainError { expected: 2, got: 1 }
        );
    }

    fn pair() -> impl Strategy<Value = [(f64, f64); 2]> {
        prop::array::uniform2((-20.0f64..=20.0, -5.0f64..=5.0))
    }

    proptest! {
        #[test]
        fn chosen_branch_dominates_feasible_alternatives(coords in pair(), x in -20.0f64..=20.0, dbm in 0.0f64..45.0) {
            let i = inputs(coords, dbm, 1.0);
            let Ok(a) = greedy_power_given_x(&i, x) else { return Ok(()) };
            let got = throughput(&i, x, &a);
            let (t1, t2) = i.taus(x);
            let (f1, f2) = (i.epsilon() * t1, i.epsilon() * t2);
            let nog = i.params.noise_over_gain();
            let p = i.total_power;
            let alts = [
                (p - f2, f2),
                (f1, p - f1),
                (p / 2.0 + nog * (t2 - t1) / 2.0, p / 2.0 + nog * (t1 - t2) / 2.0),
            ];
            for (p1, p2) in alts {
                if p1 >= f1 && p2 >= f2 {
                    let alt = GreedyAllocation { p1, p2, case: GreedyCase::Interior };
                    prop_assert!(got >= throughput(&i, x, &alt) - 1e-12);
                }
            }
        }

        #[test]
        fn roots_have_small_residuals(coords in pair()) {
            let params = SystemParams::default();
            let layout = UserLayout::from_coords(&coords, &params).unwrap();
            let roots = cubic_roots_highsnr(&layout, &params);
            prop_assert!(roots.len() == 1 || roots.len() == 3 || roots.len() == 2);
            for r in roots {
                prop_assert!(product_derivative_residual(&params, &layout, r) < 1e-9);
            }
        }
    }
}
