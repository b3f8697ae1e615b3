//! Brute-force one-dimensional searches used to certify the closed forms.
//!
//! A search evaluates the objective on an equally spaced grid, keeps the best
//! sample (smallest abscissa on ties), then runs golden-section refinement
//! inside the interval bracketing that sample.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::channel::SystemParams;
use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Sense::Minimize => candidate < incumbent,
            Sense::Maximize => candidate > incumbent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub refine_iters: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize, refine_iters: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParams(format!("grid needs lo < hi, got [{lo}, {hi}]")));
        }
        if points < 3 {
            return Err(Error::InvalidParams(format!("grid needs at least 3 points, got {points}")));
        }
        Ok(Self { lo, hi, points, refine_iters })
    }

    /// 20001 points over the whole waveguide with 40 refinement rounds.
    pub fn waveguide(params: &SystemParams) -> Self {
        let (lo, hi) = params.waveguide_span();
        Self { lo, hi, points: 20_001, refine_iters: 40 }
    }

    pub fn with_points(self, points: usize) -> Self {
        Self { points, ..self }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn abscissa(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + self.step() * i as f64
        }
    }
}

/// Optimizes `objective` over `spec`; returns `(x_best, value)`.
pub fn grid_optimize<F>(objective: F, spec: &GridSpec, sense: Sense) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + Sync,
{
    grid_optimize_partial(|x| Some(objective(x)), spec, sense)
}

/// Like [`grid_optimize`], for objectives that are undefined at some points.
///
/// `None` marks an infeasible abscissa, which is skipped. Fails with
/// [`Error::Infeasible`] when no grid point is feasible.
pub fn grid_optimize_partial<F>(objective: F, spec: &GridSpec, sense: Sense) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    let values = evaluate_grid(&objective, spec);

    let mut best: Option<(usize, f64)> = None;
    for (i, value) in values.iter().enumerate() {
        let Some(v) = *value else { continue };
        if !v.is_finite() {
            return Err(Error::NonFinite { at: spec.abscissa(i) });
        }
        match best {
            Some((_, b)) if !sense.better(v, b) => {}
            _ => best = Some((i, v)),
        }
    }
    let (index, value) = best.ok_or_else(|| Error::Infeasible("no feasible point on the search grid".into()))?;

    let lo = spec.abscissa(index.saturating_sub(1));
    let hi = spec.abscissa((index + 1).min(spec.points - 1));
    let incumbent = (spec.abscissa(index), value);
    Ok(golden_refine(&objective, lo, hi, spec.refine_iters, sense, incumbent))
}

#[cfg(feature = "parallel")]
fn evaluate_grid<F>(objective: &F, spec: &GridSpec) -> Vec<Option<f64>>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    (0..spec.points).into_par_iter().map(|i| objective(spec.abscissa(i))).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_grid<F>(objective: &F, spec: &GridSpec) -> Vec<Option<f64>>
where
    F: Fn(f64) -> Option<f64>,
{
    (0..spec.points).map(|i| objective(spec.abscissa(i))).collect()
}

fn golden_refine<F>(
    objective: &F,
    mut a: f64,
    mut b: f64,
    iters: usize,
    sense: Sense,
    incumbent: (f64, f64),
) -> (f64, f64)
where
    F: Fn(f64) -> Option<f64>,
{
    let mut best = incumbent;
    // Non-finite and infeasible probes rank below everything.
    let mut probe = |x: f64| -> f64 {
        match objective(x) {
            Some(v) if v.is_finite() => {
                if sense.better(v, best.1) {
                    best = (x, v);
                }
                match sense {
                    Sense::Minimize => v,
                    Sense::Maximize => -v,
                }
            }
            _ => f64::INFINITY,
        }
    };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = probe(c);
    let mut fd = probe(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = probe(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = probe(d);
        }
    }
    best
}

/// Maximizes `evaluator(P_1)` over power splits `P_1 ∈ spec`, `P_2 = total − P_1`.
///
/// The evaluator returns `None` for splits violating its own feasibility
/// rules; `spec` must lie inside `[0, total]`.
pub fn grid_power_alloc_sweep<F>(evaluator: F, total: f64, spec: &GridSpec) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidParams(format!("total power must be positive, got {total}")));
    }
    if spec.lo < 0.0 || spec.hi > total {
        return Err(Error::InvalidParams(format!("power grid [{}, {}] exceeds [0, {total}]", spec.lo, spec.hi)));
    }
    grid_optimize_partial(evaluator, spec, Sense::Maximize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{SystemParams, UserLayout};
    use proptest::prelude::*;

    #[test]
    fn quadratic_minimum() {
        let spec = GridSpec::new(-10.0, 10.0, 10_001, 40).unwrap();
        let (x, v) = grid_optimize(|x| (x - 2.0).powi(2), &spec, Sense::Minimize).unwrap();
        assert!((x - 2.0).abs() < 1e-6);
        assert!(v < 1e-12);
    }

    #[test]
    fn constant_objective_returns_lo() {
        let spec = GridSpec::new(-3.0, 7.0, 101, 40).unwrap();
        for sense in [Sense::Minimize, Sense::Maximize] {
            let (x, v) = grid_optimize(|_| 4.0, &spec, sense).unwrap();
            assert_eq!(x, -3.0);
            assert_eq!(v, 4.0);
        }
    }

    #[test]
    fn sum_of_squared_distances_is_minimized_at_mean() {
        let params = SystemParams::default();
        let layout = UserLayout::from_coords(&[(-13.2, 1.0), (4.7, -3.3), (18.9, 4.9), (-0.4, 0.2)], &params).unwrap();
        let spec = GridSpec::waveguide(&params);
        let (x, _) = grid_optimize(|x| layout.taus(&params, x).iter().sum(), &spec, Sense::Minimize).unwrap();
        assert!((x - layout.mean_x()).abs() < 1e-6);
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let spec = GridSpec::new(-1.0, 1.0, 5, 0).unwrap();
        let err = grid_optimize(|x| if x == 0.0 { f64::NAN } else { x }, &spec, Sense::Minimize).unwrap_err();
        assert_eq!(err, Error::NonFinite { at: 0.0 });
    }

    #[test]
    fn invalid_specs() {
        assert!(GridSpec::new(1.0, 1.0, 10, 0).is_err());
        assert!(GridSpec::new(0.0, 1.0, 2, 0).is_err());
    }

    #[test]
    fn symmetric_split_is_even() {
        let total = 2.0;
        let spec = GridSpec::new(0.0, total, 1001, 40).unwrap();
        let (p1, _) = grid_power_alloc_sweep(|p1| Some(p1.ln_1p() + (total - p1).ln_1p()), total, &spec).unwrap();
        assert!((p1 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn interior_split_matches_water_level() {
        // ln(1 + p/a) + ln(1 + (T − p)/b) peaks at p = (T + b − a)/2.
        let (a, b, total) = (0.3, 0.9, 2.0);
        let spec = GridSpec::new(0.0, total, 2001, 40).unwrap();
        let (p1, _) =
            grid_power_alloc_sweep(|p| Some((p / a).ln_1p() + ((total - p) / b).ln_1p()), total, &spec).unwrap();
        assert!((p1 - (total + b - a) / 2.0).abs() < 1e-8);
    }

    #[test]
    fn no_feasible_split() {
        let spec = GridSpec::new(0.0, 1.0, 11, 5).unwrap();
        let err = grid_power_alloc_sweep(|p| if p > 2.0 { Some(p) } else { None }, 1.0, &spec).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    proptest! {
        #[test]
        fn never_worse_than_any_sample(c in -9.0f64..9.0, w in 0.5f64..3.0, points in 3usize..400) {
            let f = |x: f64| (w * x).sin() + 0.1 * (x - c).powi(2);
            let spec = GridSpec::new(-10.0, 10.0, points, 20).unwrap();
            let (_, v) = grid_optimize(f, &spec, Sense::Minimize).unwrap();
            for i in 0..points {
                prop_assert!(v <= f(spec.abscissa(i)));
            }
        }

        #[test]
        fn doubling_points_does_not_hurt(c in -9.0f64..9.0, s in 0.1f64..5.0, points in 3usize..2000) {
            let f = |x: f64| s * (x - c).powi(2) + 1.0;
            let spec = GridSpec::new(-10.0, 10.0, points, 40).unwrap();
            let (_, coarse) = grid_optimize(f, &spec, Sense::Minimize).unwrap();
            let (_, fine) = grid_optimize(f, &spec.with_points(2 * points), Sense::Minimize).unwrap();
            prop_assert!(fine <= coarse + 1e-12);
        }

        #[test]
        fn deterministic(c in -9.0f64..9.0) {
            let f = |x: f64| (x - c).abs().sqrt() - (3.0 * x).cos();
            let spec = GridSpec::new(-10.0, 10.0, 997, 30).unwrap();
            let a = grid_optimize(f, &spec, Sense::Maximize).unwrap();
            let b = grid_optimize(f, &spec, Sense::Maximize).unwrap();
            prop_assert_eq!(a.0.to_bits(), b.0.to_bits());
            prop_assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
    }
}
