//! Two-user NOMA total-power minimization with successive interference
//! cancellation.
//!
//! Users are first ordered so that user 1 is nearer the waveguide
//! (`y₁² ≤ y₂²`). With user 1 performing SIC, the optimum places the antenna
//! at `x* = (x₂ + e^R x₁)/(e^R + 1)`, between the two users and pulled toward
//! user 1 as the rate target grows. A brute-force search over both SIC orders
//! serves as the reference.

use crate::channel::{rates_noma, NomaRates, SystemParams, UserLayout};
use crate::error::{Error, Result};
use crate::oma_fairness::conventional_power_min;
use crate::oracle::{grid_optimize, GridSpec, Sense};

/// Rate target from which the closed form is certified optimal, in nats.
pub const CERTIFIED_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct NomaInputs {
    pub params: SystemParams,
    pub layout: UserLayout,
    /// Common rate target, nats per channel use.
    pub rate: f64,
}

impl NomaInputs {
    pub fn new(params: SystemParams, layout: UserLayout, rate: f64) -> Result<Self> {
        if layout.len() != 2 {
            return Err(Error::DomainError { expected: 2, got: layout.len() });
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParams(format!("rate target must be positive and finite, got {rate}")));
        }
        Ok(Self { params, layout, rate })
    }

    /// `e^R − 1`, the SINR each decoding step must reach.
    fn sinr_target(&self) -> f64 {
        self.rate.exp_m1()
    }
}

/// `ε̃ = (σ²/η)(e^R − 1)` and `τ̃_m = ε̃ (y_m² + d²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonTauTilde {
    pub eps_tilde: f64,
    pub tau_tilde: [f64; 2],
}

impl EpsilonTauTilde {
    pub fn new(inputs: &NomaInputs) -> Self {
        let eps_tilde = inputs.params.noise_over_gain() * inputs.sinr_target();
        let d2 = inputs.params.height().powi(2);
        let u = inputs.layout.users();
        Self { eps_tilde, tau_tilde: [eps_tilde * (u[0].y.powi(2) + d2), eps_tilde * (u[1].y.powi(2) + d2)] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomaSolution {
    pub x_star: f64,
    pub powers: [f64; 2],
    /// 0-based index of the user performing SIC.
    pub sic_user: usize,
    /// Rates with the SIC user in the strong role.
    pub rates: NomaRates,
    pub total: f64,
    /// Set when the rate target is high enough for the closed form to be
    /// provably optimal over both SIC orders.
    pub certified: bool,
}

/// Reorders a pair so the user nearer the waveguide comes first.
///
/// Returns the reordered layout and, for each new position, the original
/// index. Ties keep the input order.
pub fn order_users_by_y(layout: &UserLayout) -> (UserLayout, [usize; 2]) {
    let u = layout.users();
    if u.len() == 2 && u[0].y * u[0].y > u[1].y * u[1].y {
        (layout.swapped(), [1, 0])
    } else {
        (layout.clone(), [0, 1])
    }
}

fn solution_for(
    inputs: &NomaInputs,
    x: f64,
    sic_user: usize,
    p_sic: f64,
    p_other: f64,
    certified: bool,
) -> NomaSolution {
    let taus = inputs.layout.taus(&inputs.params, x);
    let other = 1 - sic_user;
    let rates = rates_noma(&inputs.params, p_sic, p_other, taus[sic_user], taus[other]);
    let mut powers = [0.0; 2];
    powers[sic_user] = p_sic;
    powers[other] = p_other;
    NomaSolution { x_star: x, powers, sic_user, rates, total: p_sic + p_other, certified }
}

/// Closed-form minimum-power placement and allocation; user 1 performs SIC.
pub fn solve_noma_closed_form(inputs: &NomaInputs) -> Result<NomaSolution> {
    let u = inputs.layout.users();
    let (y1_sq, y2_sq) = (u[0].y * u[0].y, u[1].y * u[1].y);
    if y1_sq > y2_sq {
        return Err(Error::OrderingViolation { y1_sq, y2_sq });
    }
    let coeffs = EpsilonTauTilde::new(inputs);
    let e_r = inputs.rate.exp();
    let x = u[1].x / (e_r + 1.0) + e_r * u[0].x / (e_r + 1.0);
    let p1 = coeffs.eps_tilde * (x - u[0].x).powi(2) + coeffs.tau_tilde[0];
    let p2 = inputs.sinr_target() * p1 + coeffs.eps_tilde * (x - u[1].x).powi(2) + coeffs.tau_tilde[1];
    Ok(solution_for(inputs, x, 0, p1, p2, inputs.rate >= CERTIFIED_RATE))
}

/// Least total power with the antenna at `x` and `sic_user` decoding first.
///
/// Returns `(P_sic, P_other)`: the SIC user's power meets its own rate, and the
/// other user's power meets the larger of its own and the SIC-decoding
/// requirement.
pub fn noma_min_power_at(inputs: &NomaInputs, x: f64, sic_user: usize) -> (f64, f64) {
    let eps_tilde = inputs.params.noise_over_gain() * inputs.sinr_target();
    let taus = inputs.layout.taus(&inputs.params, x);
    let (t_sic, t_other) = (taus[sic_user], taus[1 - sic_user]);
    let p_sic = eps_tilde * t_sic;
    let p_other = inputs.sinr_target() * p_sic + eps_tilde * t_sic.max(t_other);
    (p_sic, p_other)
}

/// Brute-force minimum over antenna positions and both SIC orders.
///
/// Ties between orders go to user 1 (index 0).
pub fn solve_noma_search(inputs: &NomaInputs, spec: &GridSpec) -> Result<NomaSolution> {
    let mut best: Option<(usize, f64, f64)> = None;
    for sic_user in 0..2 {
        let (x, total) = grid_optimize(
            |x| {
                let (a, b) = noma_min_power_at(inputs, x, sic_user);
                a + b
            },
            spec,
            Sense::Minimize,
        )?;
        if best.is_none_or(|(_, _, b)| total < b) {
            best = Some((sic_user, x, total));
        }
    }
    let (sic_user, x, _) = best.expect("two orders searched");
    let (p_sic, p_other) = noma_min_power_at(inputs, x, sic_user);
    Ok(solution_for(inputs, x, sic_user, p_sic, p_other, false))
}

/// Checks behind the closed form's optimality for the original problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    /// `(x* − x₁)² + y₁² − [(x* − x₂)² + y₂²]`; non-positive when user 1 is the
    /// strong user.
    pub delta_d: f64,
    pub strong_user_ok: bool,
    /// `x*` lies between the users, hence on the waveguide.
    pub between_users: bool,
    pub nonnegative_powers: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.strong_user_ok && self.between_users && self.nonnegative_powers
    }
}

pub fn validate_assumptions(solution: &NomaSolution, inputs: &NomaInputs) -> AssumptionReport {
    let u = inputs.layout.users();
    let x = solution.x_star;
    let near = (x - u[0].x).powi(2) + u[0].y.powi(2);
    let far = (x - u[1].x).powi(2) + u[1].y.powi(2);
    let delta_d = near - far;
    let tol = 1e-12 * (near + far).max(1.0);
    let (lo, hi) = if u[0].x <= u[1].x { (u[0].x, u[1].x) } else { (u[1].x, u[0].x) };
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    AssumptionReport {
        delta_d,
        strong_user_ok: delta_d <= tol,
        between_users: x >= lo - slack && x <= hi + slack,
        nonnegative_powers: solution.powers.iter().all(|&p| p >= 0.0),
    }
}

/// Total power of NOMA with a conventional antenna above the area centre,
/// using the better SIC order.
pub fn noma_conventional_power(inputs: &NomaInputs) -> f64 {
    let by_order = |sic| {
        let (a, b) = noma_min_power_at(inputs, 0.0, sic);
        a + b
    };
    by_order(0).min(by_order(1))
}

/// `P^OMA − P^NOMA`: power saved by pinching-antenna NOMA over conventional
/// OMA with the antenna fixed at the centre.
pub fn power_gap_oma_noma(inputs: &NomaInputs) -> Result<f64> {
    let noma = solve_noma_closed_form(inputs)?;
    let params = &inputs.params;
    let u = inputs.layout.users();
    let d2 = params.height().powi(2);
    let oma_eps = crate::oma_fairness::oma_epsilon(params, 2, inputs.rate);
    let dist_oma: f64 = u.iter().map(|v| v.x * v.x + v.y * v.y + d2).sum();
    let dist_noma = |i: usize| (noma.x_star - u[i].x).powi(2) + u[i].y.powi(2) + d2;
    let e_r = inputs.rate.exp();
    let p_noma = params.noise_over_gain() * inputs.sinr_target() * (dist_noma(1) + e_r * dist_noma(0));
    Ok(oma_eps * dist_oma - p_noma)
}

/// Same gap computed by subtracting the two solvers' outputs.
pub fn power_gap_by_subtraction(inputs: &NomaInputs) -> Result<f64> {
    let oma = conventional_power_min(&inputs.params, &inputs.layout, inputs.rate)?;
    Ok(oma - solve_noma_closed_form(inputs)?.total)
}
