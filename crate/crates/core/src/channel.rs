//! Geometry, free-space channel model and rate formulas shared by every solver.
//!
//! The waveguide runs along the x-axis at height `d` above the centre line of a
//! `D_L × D_W` rectangular service area. A pinching antenna activated at `x_a`
//! sits at `(x_a, 0, d)`, so its squared distance to a user at `(x, y, 0)` is
//! `(x_a − x)² + y² + d²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Physical constants and deployment geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    carrier_hz: f64,
    noise_w: f64,
    height: f64,
    length: f64,
    width: f64,
}

impl SystemParams {
    pub fn new(carrier_hz: f64, noise_w: f64, height: f64, length: f64, width: f64) -> Result<Self> {
        let checks = [
            ("carrier frequency", carrier_hz),
            ("noise power", noise_w),
            ("waveguide height", height),
            ("service-area length", length),
            ("service-area width", width),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {value}")));
            }
        }
        Ok(Self { carrier_hz, noise_w, height, length, width })
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn noise_w(&self) -> f64 {
        self.noise_w
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn with_length(self, length: f64) -> Result<Self> {
        Self::new(self.carrier_hz, self.noise_w, self.height, length, self.width)
    }

    /// `[−D_L/2, D_L/2]`, the admissible antenna positions.
    pub fn waveguide_span(&self) -> (f64, f64) {
        (-self.length / 2.0, self.length / 2.0)
    }

    pub fn eta(&self) -> f64 {
        eta(self)
    }

    /// `σ²/η`: the power that gives unit SNR at unit squared distance.
    pub fn noise_over_gain(&self) -> f64 {
        self.noise_w / self.eta()
    }
}

impl Default for SystemParams {
    /// 28 GHz carrier, −90 dBm noise, 3 m waveguide height, 40 m × 10 m area.
    fn default() -> Self {
        Self { carrier_hz: 28e9, noise_w: dbm_to_watt(-90.0), height: 3.0, length: 40.0, width: 10.0 }
    }
}

/// Ground position of a user, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct User {
    pub x: f64,
    pub y: f64,
}

impl User {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Users served by one waveguide, all inside the service area.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLayout {
    users: Vec<User>,
}

impl UserLayout {
    pub fn new(users: Vec<User>, params: &SystemParams) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::InvalidParams("a layout needs at least one user".into()));
        }
        let half_l = params.length() / 2.0;
        let half_w = params.width() / 2.0;
        for (index, u) in users.iter().enumerate() {
            let inside = u.x.is_finite() && u.y.is_finite() && u.x.abs() <= half_l && u.y.abs() <= half_w;
            if !inside {
                return Err(Error::UserOutOfArea { index, x: u.x, y: u.y });
            }
        }
        Ok(Self { users })
    }

    pub fn from_coords(coords: &[(f64, f64)], params: &SystemParams) -> Result<Self> {
        Self::new(coords.iter().map(|&(x, y)| User::new(x, y)).collect(), params)
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Mean of the users' x-coordinates.
    pub fn mean_x(&self) -> f64 {
        self.sum_x() / self.users.len() as f64
    }

    pub fn sum_x(&self) -> f64 {
        self.users.iter().map(|u| u.x).sum()
    }

    /// Squared antenna distances `τ_m` for an antenna at `x_a`.
    pub fn taus(&self, params: &SystemParams, x_a: f64) -> Vec<f64> {
        self.users.iter().map(|&u| tau(params, u, x_a)).collect()
    }

    pub(crate) fn swapped(&self) -> Self {
        Self { users: self.users.iter().rev().copied().collect() }
    }
}

/// Antenna position, per-user powers and the achieved objective.
///
/// The objective's unit depends on the problem: nats per channel use for the
/// rate problems, watts for the power problems.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSolution {
    pub x_star: f64,
    pub powers: Vec<f64>,
    pub objective: f64,
}

impl PlacementSolution {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Free-space path-gain constant `c²/(16π² f_c²)`, in m².
pub fn eta(params: &SystemParams) -> f64 {
    let c = SPEED_OF_LIGHT;
    c * c / (16.0 * PI * PI * params.carrier_hz * params.carrier_hz)
}

/// Squared distance from the antenna at `(x_a, 0, d)` to `user`.
pub fn tau(params: &SystemParams, user: User, x_a: f64) -> f64 {
    let dx = x_a - user.x;
    dx * dx + user.y * user.y + params.height * params.height
}

/// Per-user TDMA rate `(1/M) ln(1 + η P / (σ² τ))`.
pub fn rate_oma(params: &SystemParams, power: f64, tau: f64, users: usize) -> f64 {
    let snr = eta(params) * power / (params.noise_w * tau);
    snr.ln_1p() / users as f64
}

/// The three rates of a two-user NOMA downlink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomaRates {
    /// Strong user's own rate after SIC.
    pub strong: f64,
    /// Weak user decoding its own signal under interference.
    pub weak: f64,
    /// Strong user decoding the weak user's signal during SIC.
    pub sic: f64,
}

impl NomaRates {
    pub fn min(&self) -> f64 {
        self.strong.min(self.weak).min(self.sic)
    }
}

/// NOMA rates with user 1 (`p_strong`, `tau_strong`) performing SIC.
pub fn rates_noma(params: &SystemParams, p_strong: f64, p_weak: f64, tau_strong: f64, tau_weak: f64) -> NomaRates {
    let eta = eta(params);
    let n = params.noise_w;
    NomaRates {
        strong: (eta * p_strong / (n * tau_strong)).ln_1p(),
        weak: (eta * p_weak / (eta * p_strong + n * tau_weak)).ln_1p(),
        sic: (eta * p_weak / (eta * p_strong + n * tau_strong)).ln_1p(),
    }
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

pub fn bpcu_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}

pub fn nats_to_bpcu(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn eta_at_28ghz() {
        // mpmath, 40 digits: 7.25948170554011539568886517902916724822e-7
        let p = SystemParams::default();
        assert!(rel(eta(&p), 7.259_481_705_540_115e-7) < 1e-14);
    }

    #[test]
    fn eta_scaling_and_unit_point() {
        let p = SystemParams::default();
        let doubled = SystemParams::new(56e9, p.noise_w(), 3.0, 40.0, 10.0).unwrap();
        assert!(rel(eta(&doubled), eta(&p) / 4.0) < 1e-14);

        let unit = SystemParams::new(SPEED_OF_LIGHT / (4.0 * PI), 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((eta(&unit) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tau_examples() {
        let p = SystemParams::default();
        assert_eq!(tau(&p, User::new(0.0, 0.0), 0.0), 9.0);
        assert_eq!(tau(&p, User::new(4.0, 0.0), 1.0), 18.0);
        assert_eq!(tau(&p, User::new(-2.5, 1.5), -2.5), 1.5 * 1.5 + 9.0);
    }

    #[test]
    fn rate_oma_examples() {
        let p = SystemParams::default();
        assert_eq!(rate_oma(&p, 0.0, 9.0, 2), 0.0);

        // Choose P so that ηP/(σ²τ) = e^M − 1.
        let m = 3;
        let tau = 17.0;
        let power = (3f64.exp() - 1.0) * p.noise_w() * tau / p.eta();
        assert!((rate_oma(&p, power, tau, m) - 1.0).abs() < 1e-12);

        // mpmath: 0.5·ln(1 + η·1e-3/(1e-12·9)) = 2.20128770156859195...
        assert!(rel(rate_oma(&p, 1e-3, 9.0, 2), 2.201_287_701_568_592) < 1e-13);
    }

    #[test]
    fn noma_rates_examples() {
        let p = SystemParams::default();
        let r = rates_noma(&p, 0.0, 1e-3, 10.0, 20.0);
        assert_eq!(r.strong, 0.0);
        let interference_free = (p.eta() * 1e-3 / (p.noise_w() * 20.0)).ln_1p();
        assert!(rel(r.weak, interference_free) < 1e-14);

        let r = rates_noma(&p, 1e-4, 1e-3, 12.0, 12.0);
        assert_eq!(r.sic, r.weak);
    }

    #[test]
    fn dbm_conversions() {
        assert!(rel(dbm_to_watt(-90.0), 1e-12) < 1e-14);
        assert!(rel(dbm_to_watt(0.0), 1e-3) < 1e-14);
        assert_eq!(dbm_to_watt(30.0), 1.0);
        assert!((watt_to_dbm(1e-3)).abs() < 1e-12);
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(SystemParams::new(0.0, 1e-12, 3.0, 40.0, 10.0).is_err());
        assert!(SystemParams::new(28e9, 1e-12, -3.0, 40.0, 10.0).is_err());
        assert!(SystemParams::new(28e9, f64::NAN, 3.0, 40.0, 10.0).is_err());
    }

    #[test]
    fn layout_validation() {
        let p = SystemParams::default();
        assert!(UserLayout::new(vec![], &p).is_err());
        assert!(UserLayout::from_coords(&[(20.0, 5.0), (-20.0, -5.0)], &p).is_ok());
        assert_eq!(
            UserLayout::from_coords(&[(0.0, 0.0), (20.5, 0.0)], &p),
            Err(Error::UserOutOfArea { index: 1, x: 20.5, y: 0.0 })
        );
    }

    proptest! {
        #[test]
        fn tau_never_below_height_squared(x in -20.0f64..20.0, y in -5.0f64..5.0, xa in -20.0f64..20.0) {
            let p = SystemParams::default();
            prop_assert!(tau(&p, User::new(x, y), xa) >= 9.0);
        }

        #[test]
        fn rate_oma_monotone(power in 1e-9f64..10.0, bump in 1e-6f64..1.0, t in 9.0f64..2000.0, m in 1usize..6) {
            let p = SystemParams::default();
            let base = rate_oma(&p, power, t, m);
            prop_assert!(rate_oma(&p, power * (1.0 + bump), t, m) > base);
            prop_assert!(rate_oma(&p, power, t * (1.0 + bump), m) < base);
            prop_assert_eq!(base.to_bits(), rate_oma(&p, power, t, m).to_bits());
        }

        #[test]
        fn sic_rate_dominates_when_strong_is_closer(
            p1 in 0.0f64..1.0, p2 in 0.0f64..1.0, t1 in 9.0f64..2000.0, t2 in 9.0f64..2000.0,
        ) {
            let p = SystemParams::default();
            let r = rates_noma(&p, p1, p2, t1, t2);
            if t1 <= t2 {
                prop_assert!(r.sic >= r.weak);
            }
        }
    }
}
