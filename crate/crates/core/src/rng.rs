//! Per-trial random streams.
//!
//! Every trial owns a ChaCha8 stream selected by its index, under a key derived
//! from the master seed and the sweep index. A trial's draws therefore depend
//! only on `(seed, sweep, trial)`, never on which thread ran it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{SystemParams, User, UserLayout};

pub type TrialRng = ChaCha8Rng;

/// Random stream for one trial of one sweep point.
pub fn trial_rng(seed: u64, sweep: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(sweep.wrapping_add(0x9e37_79b9_7f4a_7c15))));
    rng.set_stream(trial);
    rng
}

/// Draws `users` independent users uniformly over the service area.
///
/// With `clustering`, x is confined to `[−D_L/4, −D_L/8]`; y always spans the
/// full width. Each user consumes two draws, x then y.
pub fn sample_layout<R: Rng + ?Sized>(
    rng: &mut R,
    users: usize,
    params: &SystemParams,
    clustering: bool,
) -> UserLayout {
    let half_w = params.width() / 2.0;
    let (x_lo, x_hi) =
        if clustering { (-params.length() / 4.0, -params.length() / 8.0) } else { params.waveguide_span() };
    let users = (0..users.max(1))
        .map(|_| {
            let x = rng.random_range(x_lo..=x_hi);
            let y = rng.random_range(-half_w..=half_w);
            User::new(x, y)
        })
        .collect();
    UserLayout::new(users, params).expect("sampled users lie inside the service area")
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
