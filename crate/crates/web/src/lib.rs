//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no generated type definitions. Coordinates travel as a flat
//! `[x1, y1, x2, y2, …]` array.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pinchopt::channel::{bpcu_to_nats, dbm_to_watt, nats_to_bpcu};
use pinchopt::noma::{noma_conventional_power, order_users_by_y, solve_noma_closed_form, NomaInputs};
use pinchopt::oma_fairness::{conventional_maxmin, conventional_power_min, solve_maxmin, solve_power_min};
use pinchopt::oma_greedy::{cubic_roots_highsnr, distance_product, solve_throughput_highsnr, GreedyInputs};
use pinchopt::outage::{analytic_outage_two_user, outage_rate, OutageInputs};
use pinchopt::{Error, SystemParams, UserLayout};

#[derive(Debug, Serialize)]
pub struct Fairness {
    pub x_star: f64,
    pub min_rate_bpcu: f64,
    pub min_rate_conventional_bpcu: f64,
    pub total_power_w: f64,
    pub total_power_conventional_w: f64,
}

#[derive(Debug, Serialize)]
pub struct Noma {
    pub x_star: f64,
    /// 1-based, in the caller's numbering.
    pub sic_user: usize,
    pub total_power_w: f64,
    pub total_power_conventional_w: f64,
}

#[derive(Debug, Serialize)]
pub struct Greedy {
    pub x_star: f64,
    pub throughput_bpcu: f64,
    pub high_snr_regime: bool,
}

#[derive(Debug, Serialize)]
pub struct Placements {
    pub fairness: Fairness,
    /// Two-user schemes; absent for other user counts.
    pub noma: Option<Noma>,
    /// Absent when the rate floors cannot be met.
    pub greedy: Option<Greedy>,
    pub waveguide: (f64, f64),
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub markers: Vec<f64>,
}

fn layout(coords: &[f64], params: &SystemParams) -> Result<UserLayout, Error> {
    if coords.is_empty() || !coords.len().is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("expected x/y pairs, got {} numbers", coords.len())));
    }
    let pairs: Vec<(f64, f64)> = coords.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    UserLayout::from_coords(&pairs, params)
}

/// Placements of every scheme for one layout.
pub fn placements(coords: &[f64], power_dbm: f64, rate_bpcu: f64) -> Result<Placements, Error> {
    let p = SystemParams::default();
    let users = layout(coords, &p)?;
    let (power, rate) = (dbm_to_watt(power_dbm), bpcu_to_nats(rate_bpcu));

    let mm = solve_maxmin(&p, &users, power)?;
    let fairness = Fairness {
        x_star: mm.x_star,
        min_rate_bpcu: nats_to_bpcu(mm.objective),
        min_rate_conventional_bpcu: nats_to_bpcu(conventional_maxmin(&p, &users, power)?.objective),
        total_power_w: solve_power_min(&p, &users, rate)?.objective,
        total_power_conventional_w: conventional_power_min(&p, &users, rate)?,
    };

    let (noma, greedy) = if users.len() == 2 {
        let (ordered, perm) = order_users_by_y(&users);
        let inputs = NomaInputs::new(p, ordered, rate)?;
        let sol = solve_noma_closed_form(&inputs)?;
        let noma = Noma {
            x_star: sol.x_star,
            sic_user: perm[sol.sic_user] + 1,
            total_power_w: sol.total,
            total_power_conventional_w: noma_conventional_power(&inputs),
        };
        let greedy = match solve_throughput_highsnr(&GreedyInputs::new(p, users.clone(), power, rate)?) {
            Ok(h) => Some(Greedy {
                x_star: h.placement.x_star,
                throughput_bpcu: nats_to_bpcu(h.placement.objective),
                high_snr_regime: h.high_snr_regime,
            }),
            Err(Error::Infeasible(_)) => None,
            Err(e) => return Err(e),
        };
        (Some(noma), greedy)
    } else {
        (None, None)
    };
    Ok(Placements { fairness, noma, greedy, waveguide: p.waveguide_span() })
}

/// `f(x) = τ₁(x) τ₂(x)` across the waveguide, normalized to its maximum, with
/// the real stationary points as markers.
pub fn distance_product_curve(coords: &[f64], samples: usize) -> Result<Curve, Error> {
    let p = SystemParams::default();
    let users = layout(coords, &p)?;
    if users.len() != 2 {
        return Err(Error::DomainError { expected: 2, got: users.len() });
    }
    let (lo, hi) = p.waveguide_span();
    let n = samples.max(2);
    let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let y: Vec<f64> = x.iter().map(|&v| distance_product(&p, &users, v)).collect();
    let top = y.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    Ok(Curve { x, y: y.iter().map(|v| v / top).collect(), markers: cubic_roots_highsnr(&users, &p) })
}

/// Two-user outage rate `(1 − P_out) R` against the per-user budget in dBm.
pub fn outage_curve(rate_bpcu: f64, dbm_lo: f64, dbm_hi: f64, points: usize) -> Result<Curve, Error> {
    let p = SystemParams::default();
    let rate = bpcu_to_nats(rate_bpcu);
    let n = points.max(2);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let dbm = dbm_lo + (dbm_hi - dbm_lo) * i as f64 / (n - 1) as f64;
        let prob = analytic_outage_two_user(&OutageInputs::new(p, 2, rate, dbm_to_watt(dbm))?)?;
        x.push(dbm);
        y.push(outage_rate(prob, rate_bpcu));
    }
    Ok(Curve { x, y, markers: Vec::new() })
}

fn to_js<T: Serialize>(r: Result<T, Error>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = placements)]
pub fn placements_js(coords: &[f64], power_dbm: f64, rate_bpcu: f64) -> Result<String, JsError> {
    to_js(placements(coords, power_dbm, rate_bpcu))
}

#[wasm_bindgen(js_name = distanceProductCurve)]
pub fn distance_product_curve_js(coords: &[f64], samples: usize) -> Result<String, JsError> {
    to_js(distance_product_curve(coords, samples))
}

#[wasm_bindgen(js_name = outageCurve)]
pub fn outage_curve_js(rate_bpcu: f64, dbm_lo: f64, dbm_hi: f64, points: usize) -> Result<String, JsError> {
    to_js(outage_curve(rate_bpcu, dbm_lo, dbm_hi, points))
}
