//! Flat `key = value` configuration shared by every subcommand.
//!
//! Values are layered: built-in defaults, then the config file, then
//! `--set key=value` overrides, then dedicated flags. Unknown keys and
//! unknown scheme labels are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use pinchopt::channel::{bpcu_to_nats, dbm_to_watt};
use pinchopt::{GridSpec, SystemParams};

use crate::error::{CliError, Result};

/// Every recognised key with a one-line description, for `--help`.
pub const KEYS: &[(&str, &str)] = &[
    ("schemes", "comma-separated scheme labels (see below)"),
    ("sweep", "swept quantity: power (dBm) or rate (BPCU)"),
    ("sweep_start", "first sweep value [power: 0, rate: 0.5]"),
    ("sweep_stop", "last sweep value [power: 40, rate: 4]"),
    ("sweep_points", "number of evenly spaced sweep values [9]"),
    ("power_dbm", "total power, or per-user budget for outage, when not swept [20]"),
    ("rate_bpcu", "rate target / rate floor when not swept [1]"),
    ("users", "users per layout, M [2]"),
    ("trials", "random layouts per sweep point [1000]"),
    ("seed", "master seed [1]"),
    ("clustering", "confine user x to [-D_L/4, -D_L/8]: true/false [false]"),
    ("carrier_hz", "carrier frequency [28e9]"),
    ("noise_dbm", "noise power [-90]"),
    ("height", "waveguide height d, m [3]"),
    ("length", "service-area length D_L, m [40]"),
    ("width", "service-area width D_W, m [10]"),
    ("grid_points", "samples of every search/oracle grid [20001]"),
    ("grid_refine", "golden-section refinement steps after the grid [40]"),
    ("threads", "worker threads, 0 = all cores [0]"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Power,
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    MinRateBpcu,
    TotalPowerW,
    ThroughputBpcu,
    OutageRateBpcu,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::MinRateBpcu => "min_rate_bpcu",
            Metric::TotalPowerW => "total_power_w",
            Metric::ThroughputBpcu => "throughput_bpcu",
            Metric::OutageRateBpcu => "outage_rate_bpcu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    OmaMaxmin,
    OmaMaxminSearch,
    OmaMaxminConventional,
    OmaPowermin,
    OmaPowerminSearch,
    OmaPowerminConventional,
    OmaGreedySearch,
    OmaGreedyHighsnr,
    OmaGreedyConventional,
    Noma,
    NomaSearch,
    NomaConventional,
    OmaOutage,
    OmaOutageConventional,
    OmaOutageAnalytic,
}

impl Scheme {
    pub const ALL: [Scheme; 15] = [
        Scheme::OmaMaxmin,
        Scheme::OmaMaxminSearch,
        Scheme::OmaMaxminConventional,
        Scheme::OmaPowermin,
        Scheme::OmaPowerminSearch,
        Scheme::OmaPowerminConventional,
        Scheme::OmaGreedySearch,
        Scheme::OmaGreedyHighsnr,
        Scheme::OmaGreedyConventional,
        Scheme::Noma,
        Scheme::NomaSearch,
        Scheme::NomaConventional,
        Scheme::OmaOutage,
        Scheme::OmaOutageConventional,
        Scheme::OmaOutageAnalytic,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::OmaMaxmin => "oma-maxmin",
            Scheme::OmaMaxminSearch => "oma-maxmin-search",
            Scheme::OmaMaxminConventional => "oma-maxmin-conventional",
            Scheme::OmaPowermin => "oma-powermin",
            Scheme::OmaPowerminSearch => "oma-powermin-search",
            Scheme::OmaPowerminConventional => "oma-powermin-conventional",
            Scheme::OmaGreedySearch => "oma-greedy-search",
            Scheme::OmaGreedyHighsnr => "oma-greedy-highsnr",
            Scheme::OmaGreedyConventional => "oma-greedy-conventional",
            Scheme::Noma => "noma",
            Scheme::NomaSearch => "noma-search",
            Scheme::NomaConventional => "noma-conventional",
            Scheme::OmaOutage => "oma-outage",
            Scheme::OmaOutageConventional => "oma-outage-conventional",
            Scheme::OmaOutageAnalytic => "oma-outage-analytic",
        }
    }

    pub fn metric(self) -> Metric {
        use Scheme::*;
        match self {
            OmaMaxmin | OmaMaxminSearch | OmaMaxminConventional => Metric::MinRateBpcu,
            OmaPowermin | OmaPowerminSearch | OmaPowerminConventional | Noma | NomaSearch | NomaConventional => {
                Metric::TotalPowerW
            }
            OmaGreedySearch | OmaGreedyHighsnr | OmaGreedyConventional => Metric::ThroughputBpcu,
            OmaOutage | OmaOutageConventional | OmaOutageAnalytic => Metric::OutageRateBpcu,
        }
    }

    /// The only axis along which the metric varies, if restricted.
    fn required_axis(self) -> Option<Axis> {
        match self.metric() {
            Metric::MinRateBpcu => Some(Axis::Power),
            Metric::TotalPowerW => Some(Axis::Rate),
            _ => None,
        }
    }

    fn needs_pair(self) -> bool {
        use Scheme::*;
        matches!(
            self,
            OmaGreedySearch
                | OmaGreedyHighsnr
                | OmaGreedyConventional
                | Noma
                | NomaSearch
                | NomaConventional
                | OmaOutageAnalytic
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| if i + 1 == self.points { self.stop } else { self.start + step * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub schemes: Vec<Scheme>,
    pub sweep: Sweep,
    pub power_dbm: f64,
    pub rate_bpcu: f64,
    pub users: usize,
    pub trials: u64,
    pub seed: u64,
    pub clustering: bool,
    pub params: SystemParams,
    pub grid_points: usize,
    pub grid_refine: usize,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_entries(&Entries::default()).expect("defaults are valid")
    }
}

/// Raw `key → value` pairs; later insertions win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Entries(BTreeMap<String, String>);

impl Entries {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{raw}`", n + 1)))?;
            entries.set(k.trim(), v.trim())?;
        }
        Ok(entries)
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) =
            pair.split_once('=').ok_or_else(|| CliError::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.0.insert(key.to_owned(), value.into());
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Config(format!("bad value `{v}` for `{key}`"))),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("bad value `{v}` for `{key}`: expected true or false"))),
    }
}

impl ExperimentConfig {
    /// Builds a config from layered entries. Checks everything that does not
    /// depend on the subcommand.
    pub fn from_entries(e: &Entries) -> Result<Self> {
        let schemes = e
            .get("schemes", "oma-maxmin,oma-maxmin-conventional".to_owned())?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Scheme>>>()?;

        let axis = match e.get("sweep", "power".to_owned())?.as_str() {
            "power" => Axis::Power,
            "rate" => Axis::Rate,
            other => return Err(CliError::Config(format!("bad value `{other}` for `sweep`: expected power or rate"))),
        };
        let (start, stop) = match axis {
            Axis::Power => (0.0, 40.0),
            Axis::Rate => (0.5, 4.0),
        };
        let default_points =
            if e.has("sweep_start") && e.has("sweep_stop") && e.0["sweep_start"] == e.0["sweep_stop"] { 1 } else { 9 };
        let sweep = Sweep {
            axis,
            start: e.get("sweep_start", start)?,
            stop: e.get("sweep_stop", stop)?,
            points: e.get("sweep_points", default_points)?,
        };
        if sweep.points == 0 || !(sweep.start.is_finite() && sweep.stop.is_finite()) {
            return Err(CliError::Config("sweep range is empty".into()));
        }
        if sweep.start > sweep.stop || (sweep.points > 1 && sweep.start == sweep.stop) {
            return Err(CliError::Config(format!(
                "sweep range [{}, {}] with {} points is empty or degenerate",
                sweep.start, sweep.stop, sweep.points
            )));
        }
        if axis == Axis::Rate && sweep.start <= 0.0 {
            return Err(CliError::Config("rate sweep must stay positive".into()));
        }

        let params = SystemParams::new(
            e.get("carrier_hz", 28e9)?,
            dbm_to_watt(e.get("noise_dbm", -90.0)?),
            e.get("height", 3.0)?,
            e.get("length", 40.0)?,
            e.get("width", 10.0)?,
        )
        .map_err(|err| CliError::Config(err.to_string()))?;

        let cfg = Self {
            schemes,
            sweep,
            power_dbm: e.get("power_dbm", 20.0)?,
            rate_bpcu: e.get("rate_bpcu", 1.0)?,
            users: e.get("users", 2)?,
            trials: e.get("trials", 1000)?,
            seed: e.get("seed", 1)?,
            clustering: parse_bool("clustering", &e.get("clustering", "false".to_owned())?)?,
            params,
            grid_points: e.get("grid_points", 20_001)?,
            grid_refine: e.get("grid_refine", 40)?,
            threads: e.get("threads", 0)?,
        };
        if !cfg.power_dbm.is_finite() {
            return Err(CliError::Config("power_dbm must be finite".into()));
        }
        if !(cfg.rate_bpcu.is_finite() && cfg.rate_bpcu > 0.0) {
            return Err(CliError::Config(format!("rate_bpcu must be positive, got {}", cfg.rate_bpcu)));
        }
        if cfg.users == 0 {
            return Err(CliError::Config("users must be at least 1".into()));
        }
        if cfg.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        cfg.grid()?;
        Ok(cfg)
    }

    /// Extra checks for `experiment`: scheme/axis/user-count combinations.
    pub fn validate_experiment(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(CliError::Config("no schemes selected".into()));
        }
        for &s in &self.schemes {
            if s.needs_pair() && self.users != 2 {
                return Err(CliError::Config(format!("scheme {s} needs exactly 2 users, got {}", self.users)));
            }
            if s.metric() == Metric::OutageRateBpcu && self.users < 2 {
                return Err(CliError::Config(format!("scheme {s} needs at least 2 users")));
            }
            if let Some(axis) = s.required_axis() {
                if axis != self.sweep.axis {
                    let want = if axis == Axis::Power { "power" } else { "rate" };
                    return Err(CliError::Config(format!("scheme {s} needs sweep = {want}")));
                }
            }
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("scheme listed twice".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let (lo, hi) = self.params.waveguide_span();
        GridSpec::new(lo, hi, self.grid_points, self.grid_refine).map_err(|e| CliError::Config(e.to_string()))
    }

    /// `(power in watts, rate in nats)` at a sweep value.
    pub fn operating_point(&self, sweep_value: f64) -> (f64, f64) {
        match self.sweep.axis {
            Axis::Power => (dbm_to_watt(sweep_value), bpcu_to_nats(self.rate_bpcu)),
            Axis::Rate => (dbm_to_watt(self.power_dbm), bpcu_to_nats(sweep_value)),
        }
    }
}
