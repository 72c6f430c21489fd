//! Gradient descent on the two couplings.
//!
//! The forward model is the steady magnetization
//! `A = (J₁²s₁ + J₂²s₂) / (J₁² + J₂²)` with `s_i = ⟨σ_z⟩` of reservoir `i`,
//! the loss is `C = (Y − A)²/2`, and each step moves `J_i` by `−η ∂C/∂J_i`.

use crate::classifier::SimulationSetup;
use crate::collision::{simulate_with, ReservoirSpec};
use crate::error::{invalid, Error, Result};
use crate::states::pure_state;

pub fn actual_magnetization(j: (f64, f64), sz: (f64, f64)) -> Result<f64> {
    let s = j.0 * j.0 + j.1 * j.1;
    if !(s > 0.0) {
        return Err(invalid("both couplings are zero"));
    }
    Ok((j.0 * j.0 * sz.0 + j.1 * j.1 * sz.1) / s)
}

pub fn cost(target: f64, actual: f64) -> f64 {
    0.5 * (target - actual).powi(2)
}

/// `∂A/∂J₁ = 2J₁(s₁ − A)/ΣJ²`, and symmetrically for `J₂`.
pub fn magnetization_gradient(j: (f64, f64), sz: (f64, f64)) -> Result<(f64, f64)> {
    let a = actual_magnetization(j, sz)?;
    let s = j.0 * j.0 + j.1 * j.1;
    Ok((2.0 * j.0 * (sz.0 - a) / s, 2.0 * j.1 * (sz.1 - a) / s))
}

/// `∂C/∂J_i = (Y − A)(−∂A/∂J_i)`.
pub fn gradient(j: (f64, f64), sz: (f64, f64), target: f64) -> Result<(f64, f64)> {
    let a = actual_magnetization(j, sz)?;
    let (d1, d2) = magnetization_gradient(j, sz)?;
    Ok((-(target - a) * d1, -(target - a) * d2))
}

/// Heuristic largest learning rate for a monotone descent:
/// `ΣJ² / (8Δ²)` with `Δ = |s₁ − s₂|`.
///
/// `|∇A|² ≤ Δ²/ΣJ²`, and `ΣJ²` never shrinks under the update because
/// `∇A ⊥ J`.
pub fn stability_bound(j: (f64, f64), sz: (f64, f64)) -> f64 {
    let delta = (sz.0 - sz.1).abs();
    if delta == 0.0 {
        return f64::INFINITY;
    }
    (j.0 * j.0 + j.1 * j.1) / (8.0 * delta * delta)
}

/// Where the forward pass comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forward {
    ClosedForm,
    /// `A` read off a simulated run with reservoirs at `θ_i = arccos s_i`,
    /// `φ_i = 0`; the gradient chain still uses the analytic `∂A/∂J`.
    Simulated(SimulationSetup),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub target: f64,
    pub max_iters: usize,
    pub cost_tol: f64,
    pub sz: (f64, f64),
    pub j_init: (f64, f64),
    pub forward: Forward,
}

impl TrainConfig {
    pub fn new(eta: f64, target: f64, sz: (f64, f64), j_init: (f64, f64)) -> Self {
        Self { eta, target, max_iters: 50_000, cost_tol: 1e-12, sz, j_init, forward: Forward::ClosedForm }
    }

    /// `false` when the target lies outside `[min s, max s]`, where no
    /// coupling pair can reach it.
    pub fn target_reachable(&self) -> bool {
        let (lo, hi) = (self.sz.0.min(self.sz.1), self.sz.0.max(self.sz.1));
        (lo..=hi).contains(&self.target)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(invalid(format!("learning rate must be finite and >= 0, got {}", self.eta)));
        }
        if !(-1.0..=1.0).contains(&self.target) {
            return Err(invalid(format!("target {} outside [-1, 1]", self.target)));
        }
        for s in [self.sz.0, self.sz.1] {
            if !(-1.0..=1.0).contains(&s) {
                return Err(invalid(format!("reservoir magnetization {s} outside [-1, 1]")));
            }
        }
        if !(self.cost_tol >= 0.0) {
            return Err(invalid("cost tolerance must be >= 0"));
        }
        actual_magnetization(self.j_init, self.sz).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRow {
    pub iter: usize,
    pub j1: f64,
    pub j2: f64,
    pub actual: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub eta: f64,
    pub rows: Vec<TrainRow>,
    pub converged: bool,
}

impl TrainTrace {
    pub fn last(&self) -> &TrainRow {
        self.rows.last().expect("trace has the initial row")
    }

    /// `true` when no step increased the cost.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].cost <= w[0].cost)
    }
}

/// Runs descent until the cost drops to `cost_tol` or `max_iters` steps
/// were taken. Row 0 holds the initial couplings. Couplings may change
/// sign; rows report `|J_i|`.
pub fn train(config: &TrainConfig) -> Result<TrainTrace> {
    config.validate()?;
    let forward = |j: (f64, f64)| -> Result<f64> {
        match &config.forward {
            Forward::ClosedForm => actual_magnetization(j, config.sz),
            Forward::Simulated(sim) => simulated_magnetization(j, config.sz, sim),
        }
    };
    let mut j = config.j_init;
    let mut a = forward(j)?;
    let initial = cost(config.target, a);
    let mut rows = vec![TrainRow { iter: 0, j1: j.0.abs(), j2: j.1.abs(), actual: a, cost: initial }];
    let mut converged = initial <= config.cost_tol;
    let mut iter = 0;
    while !converged && iter < config.max_iters {
        iter += 1;
        let (d1, d2) = magnetization_gradient(j, config.sz)?;
        let err = config.target - a;
        j = (j.0 + config.eta * err * d1, j.1 + config.eta * err * d2);
        a = forward(j)?;
        let c = cost(config.target, a);
        if c > 10.0 * initial {
            return Err(Error::Divergence { eta: config.eta, cost: c, initial });
        }
        rows.push(TrainRow { iter, j1: j.0.abs(), j2: j.1.abs(), actual: a, cost: c });
        converged = c <= config.cost_tol;
    }
    Ok(TrainTrace { eta: config.eta, rows, converged })
}

fn simulated_magnetization(j: (f64, f64), sz: (f64, f64), sim: &SimulationSetup) -> Result<f64> {
    let specs = [
        ReservoirSpec::new(sz.0.clamp(-1.0, 1.0).acos(), 0.0, j.0.abs())?,
        ReservoirSpec::new(sz.1.clamp(-1.0, 1.0).acos(), 0.0, j.1.abs())?,
    ];
    let tr = simulate_with(&pure_state(sim.probe), &specs, &sim.schedule, sim.noise, &sim.options)?;
    Ok(tr.steady[2])
}

/// Cost on the grid `j1s × j2s`, indexed `[i][k]` for `(j1s[i], j2s[k])`.
/// The origin, where `A` is undefined, yields `NaN`.
pub fn cost_surface(j1s: &[f64], j2s: &[f64], sz: (f64, f64), target: f64) -> Vec<Vec<f64>> {
    j1s.iter()
        .map(|&a| {
            j2s.iter().map(|&b| actual_magnetization((a, b), sz).map(|m| cost(target, m)).unwrap_or(f64::NAN)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SZ: (f64, f64) = (0.94, -0.10);

    #[test]
    fn magnetization_examples() {
        assert!((actual_magnetization((0.03, 0.03), SZ).unwrap() - 0.42).abs() < 1e-15);
        let a = actual_magnetization((0.002, 0.05), SZ).unwrap();
        assert!((a + 0.09834).abs() < 5e-6, "{a}");
        assert_eq!(actual_magnetization((0.02, 0.0), SZ).unwrap(), 0.94);
        assert!(actual_magnetization((0.0, 0.0), SZ).is_err());
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost(0.42, 0.42), 0.0);
        assert!((cost(0.42, -0.09834) - 0.13434).abs() < 1e-5);
        assert_eq!(cost(0.3, -0.1), cost(-0.1, 0.3));
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(gradient((0.03, 0.03), SZ, 0.42).unwrap(), (0.0, 0.0));
        let (d1, _) = magnetization_gradient((0.002, 0.05), SZ).unwrap();
        assert!((d1 - 1.6587).abs() < 1e-4, "{d1}");
        let (g1, _) = gradient((0.002, 0.05), SZ, 0.42).unwrap();
        let step = -2.6e-5 * g1;
        assert!((step - 2.236e-5).abs() < 1e-8, "{step}");
    }

    #[test]
    fn training_reaches_the_valley() {
        let trace = train(&TrainConfig::new(2.6e-5, 0.42, SZ, (0.002, 0.05))).unwrap();
        assert!(trace.converged);
        let last = trace.last();
        assert!((last.actual - 0.42).abs() < 1e-3);
        assert!((last.j1 / last.j2 - 1.0).abs() < 0.01);
        assert!(trace.is_monotone());
        assert!((trace.rows[0].cost - 0.13434).abs() < 1e-5);
    }

    #[test]
    fn boundary_target_shrinks_second_coupling() {
        let mut cfg = TrainConfig::new(2.6e-5, SZ.0, SZ, (0.03, 0.02));
        cfg.max_iters = 3000;
        let trace = train(&cfg).unwrap();
        assert!(trace.is_monotone());
        assert!(trace.last().j2 < 0.02);
    }

    #[test]
    fn zero_rate_keeps_couplings() {
        let mut cfg = TrainConfig::new(0.0, 0.42, SZ, (0.002, 0.05));
        cfg.max_iters = 10;
        let trace = train(&cfg).unwrap();
        assert_eq!(trace.rows.len(), 11);
        assert!(trace.rows.iter().all(|r| r.j1 == 0.002 && r.j2 == 0.05));
        assert!(!trace.converged);
    }

    #[test]
    fn huge_rate_diverges() {
        // the cost is bounded by (Y − s)²/2, so start close to the valley
        let err = train(&TrainConfig::new(10.0, 0.42, SZ, (0.03, 0.0301))).unwrap_err();
        match err {
            Error::Divergence { eta, .. } => assert_eq!(eta, 10.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_rates_sit_below_the_bound() {
        let bound = stability_bound((0.002, 0.05), SZ);
        for eta in [1.3e-5, 2.6e-5, 5.2e-5] {
            assert!(eta < bound);
            let trace = train(&TrainConfig::new(eta, 0.42, SZ, (0.002, 0.05))).unwrap();
            assert!(trace.is_monotone(), "eta {eta}");
            assert!(trace.converged, "eta {eta}");
        }
    }

    #[test]
    fn surface_examples() {
        let grid: Vec<f64> = (1..=10).map(|k| 0.005 * k as f64).collect();
        let s = cost_surface(&grid, &grid, SZ, 0.42);
        for (i, row) in s.iter().enumerate() {
            assert!(row[i].abs() < 1e-15);
        }
        let s = cost_surface(&[0.002, -0.002], &[0.05], SZ, 0.42);
        assert!((s[0][0] - 0.13434).abs() < 1e-5);
        assert_eq!(s[0][0], s[1][0]);
        assert!(cost_surface(&[0.0], &[0.0], SZ, 0.42)[0][0].is_nan());
    }

    #[test]
    fn config_validation() {
        assert!(train(&TrainConfig::new(-1.0, 0.42, SZ, (0.002, 0.05))).is_err());
        assert!(train(&TrainConfig::new(1e-5, 1.5, SZ, (0.002, 0.05))).is_err());
        assert!(train(&TrainConfig::new(1e-5, 0.42, SZ, (0.0, 0.0))).is_err());
        assert!(!TrainConfig::new(1e-5, 0.99, SZ, (0.01, 0.01)).target_reachable());
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(j1 in 0.001..0.1f64, j2 in 0.001..0.1f64, s1 in -1.0..1.0f64, s2 in -1.0..1.0f64, y in -1.0..1.0f64) {
            let f = |a: f64, b: f64| cost(y, actual_magnetization((a, b), (s1, s2)).unwrap());
            let (g1, g2) = gradient((j1, j2), (s1, s2), y).unwrap();
            let (h1, h2) = (1e-6, 1e-6);
            let n1 = (f(j1 + h1, j2) - f(j1 - h1, j2)) / (2.0 * h1);
            let n2 = (f(j1, j2 + h2) - f(j1, j2 - h2)) / (2.0 * h2);
            prop_assert!((g1 - n1).abs() <= 1e-6 * g1.abs() + 1e-8, "{} vs {}", g1, n1);
            prop_assert!((g2 - n2).abs() <= 1e-6 * g2.abs() + 1e-8, "{} vs {}", g2, n2);
        }

        #[test]
        fn magnetization_is_convex_combination(j1 in -0.1..0.1f64, j2 in 0.001..0.1f64, s1 in -1.0..1.0f64, s2 in -1.0..1.0f64) {
            let a = actual_magnetization((j1, j2), (s1, s2)).unwrap();
            prop_assert!(a >= s1.min(s2) - 1e-15 && a <= s1.max(s2) + 1e-15);
        }
    }
}
