//! Binary decision rules on the probe's steady Bloch vector and labelled
//! sweeps over reservoir parameter pairs.

use std::f64::consts::{PI, SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::collision::{simulate_with, CollisionSchedule, NoiseParams, ReservoirSpec, SimulationOptions};
use crate::error::{invalid, Result};
use crate::linalg::Physicality;
use crate::master::closed_form_steady_state;
use crate::states::{pure_state, BlochParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Class1,
    Class2,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Class1 => "class1",
            Label::Class2 => "class2",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Theta,
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub label: Label,
    pub observable_value: f64,
    pub rule: Rule,
}

/// Class 1 iff `⟨σ_z⟩ ≥ 0`.
pub fn decide_theta(sz: f64) -> Decision {
    let label = if sz >= 0.0 { Label::Class1 } else { Label::Class2 };
    Decision { label, observable_value: sz, rule: Rule::Theta }
}

/// Sign of the monitored quadrature, flipped when `⟨σ_z⟩ < 0`:
/// for `⟨σ_z⟩ ≥ 0` class 1 iff `q ≥ 0`; otherwise class 2 iff `q ≥ 0`.
pub fn decide_phi(q: f64, sz: f64) -> Decision {
    let positive = q >= 0.0;
    let label = match (sz >= 0.0, positive) {
        (true, true) | (false, false) => Label::Class1,
        _ => Label::Class2,
    };
    Decision { label, observable_value: q, rule: Rule::Phi }
}

/// Bloch component read by the azimuth rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    X,
    #[default]
    Y,
}

impl std::str::FromStr for Quadrature {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Self::X),
            "y" => Ok(Self::Y),
            other => Err(invalid(format!("unknown quadrature `{other}` (expected x or y)"))),
        }
    }
}

/// Which pair of angles a pattern varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternSpace {
    /// `(θ₁, θ₂)`, azimuths fixed.
    Theta,
    /// `(φ₁, φ₂)`, polar angles fixed.
    Phi,
}

/// Settings of the simulator path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSetup {
    pub schedule: CollisionSchedule,
    pub noise: NoiseParams,
    pub probe: BlochParams,
    pub options: SimulationOptions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    ClosedForm,
    Simulate(SimulationSetup),
}

/// A two-reservoir pattern sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSetup {
    pub space: PatternSpace,
    pub points: Vec<(f64, f64)>,
    pub couplings: (f64, f64),
    /// Angles held fixed: azimuths in θ space, polar angles in φ space.
    pub fixed: (f64, f64),
    pub r: f64,
    pub tau: f64,
    pub quadrature: Quadrature,
}

impl PatternSetup {
    pub fn specs(&self, (a, b): (f64, f64)) -> Result<Vec<ReservoirSpec>> {
        let (j1, j2) = self.couplings;
        let (f1, f2) = self.fixed;
        Ok(match self.space {
            PatternSpace::Theta => vec![ReservoirSpec::new(a, f1, j1)?, ReservoirSpec::new(b, f2, j2)?],
            PatternSpace::Phi => vec![ReservoirSpec::new(f1, a, j1)?, ReservoirSpec::new(f2, b, j2)?],
        })
    }

    fn decide(&self, bloch: [f64; 3]) -> Decision {
        match self.space {
            PatternSpace::Theta => decide_theta(bloch[2]),
            PatternSpace::Phi => {
                let q = match self.quadrature {
                    Quadrature::X => bloch[0],
                    Quadrature::Y => bloch[1],
                };
                decide_phi(q, bloch[2])
            }
        }
    }

    /// Distance of a point from the equal-coupling decision boundary:
    /// `θ₁ + θ₂ = π` in θ space, `φ₂ − φ₁ = π` (y quadrature) or
    /// `φ₁ + φ₂ = 2π` (x quadrature) in φ space.
    pub fn boundary_distance(&self, (a, b): (f64, f64)) -> f64 {
        match (self.space, self.quadrature) {
            (PatternSpace::Theta, _) => (a + b - PI).abs() / SQRT_2,
            (PatternSpace::Phi, Quadrature::Y) => (b - a - PI).abs() / SQRT_2,
            (PatternSpace::Phi, Quadrature::X) => (a + b - TAU).abs() / SQRT_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternRow {
    pub a: f64,
    pub b: f64,
    pub bloch: [f64; 3],
    pub decision: Decision,
    /// Label from the closed-form steady state.
    pub reference: Label,
    pub boundary_distance: f64,
    /// Convergence flag of the simulated run; `None` on the closed-form path.
    pub converged: Option<bool>,
    /// Worst probe physicality of the simulated run.
    pub physicality: Option<Physicality>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternScan {
    pub rows: Vec<PatternRow>,
}

impl PatternScan {
    /// Fraction of rows whose label matches the closed-form label.
    pub fn agreement(&self) -> f64 {
        let hits = self.rows.iter().filter(|r| r.decision.label == r.reference).count();
        hits as f64 / self.rows.len() as f64
    }

    /// `(matching, total)` over rows at least `margin` from the boundary.
    pub fn agreement_beyond(&self, margin: f64) -> (usize, usize) {
        let far: Vec<_> = self.rows.iter().filter(|r| r.boundary_distance >= margin).collect();
        (far.iter().filter(|r| r.decision.label == r.reference).count(), far.len())
    }
}

/// Labels every point of `setup` with the chosen engine. Points are
/// evaluated in parallel and returned in input order.
pub fn pattern_scan(setup: &PatternSetup, engine: &Engine) -> Result<PatternScan> {
    if setup.points.is_empty() {
        return Err(invalid("pattern has no points"));
    }
    let rows = setup
        .points
        .par_iter()
        .map(|&pt| -> Result<PatternRow> {
            let specs = setup.specs(pt)?;
            let cf = closed_form_steady_state(&specs, setup.r, setup.tau)?;
            let reference = setup.decide(cf.bloch).label;
            let (bloch, converged, physicality) = match engine {
                Engine::ClosedForm => (cf.bloch, None, None),
                Engine::Simulate(sim) => {
                    let tr = simulate_with(&pure_state(sim.probe), &specs, &sim.schedule, sim.noise, &sim.options)?;
                    (tr.steady, Some(tr.converged), Some(tr.physicality))
                }
            };
            Ok(PatternRow {
                a: pt.0,
                b: pt.1,
                bloch,
                decision: setup.decide(bloch),
                reference,
                boundary_distance: setup.boundary_distance(pt),
                converged,
                physicality,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternScan { rows })
}

/// `n × n` grid over `[0, π]²`, row-major in the first angle.
pub fn theta_pair_grid(n: usize) -> Vec<(f64, f64)> {
    let axis = crate::qfi::theta_grid(n);
    axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect()
}

/// `count` pairs drawn uniformly from `range1 × range2`.
pub fn random_pairs(count: usize, seed: u64, range1: (f64, f64), range2: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    for (lo, hi) in [range1, range2] {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("empty range ({lo}, {hi})")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| (rng.random_range(range1.0..range1.1), rng.random_range(range2.0..range2.1))).collect())
}

/// Pairs with `0 < θ₁, θ₂ < π`.
pub fn random_theta_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    random_pairs(count, seed, (0.0, PI), (0.0, PI)).expect("valid ranges")
}

/// Pairs with `0 < φ₁ < π < φ₂ < 2π`.
pub fn random_phi_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    random_pairs(count, seed, (0.0, PI), (PI, TAU)).expect("valid ranges")
}

/// Sign changes of `values` along the second axis of a square grid, each
/// located by linear interpolation: `(first angle, crossing in the second)`.
pub fn zero_crossings(axis: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let n = axis.len();
    assert_eq!(values.len(), n * n, "values must cover the full grid");
    let mut out = Vec::new();
    for (i, &a) in axis.iter().enumerate() {
        let row = &values[i * n..(i + 1) * n];
        for k in 0..n - 1 {
            let (v0, v1) = (row[k], row[k + 1]);
            if v0 == 0.0 {
                out.push((a, axis[k]));
            } else if v0 * v1 < 0.0 {
                out.push((a, axis[k] + (axis[k + 1] - axis[k]) * v0 / (v0 - v1)));
            }
        }
        if row[n - 1] == 0.0 {
            out.push((a, axis[n - 1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn theta_setup(points: Vec<(f64, f64)>) -> PatternSetup {
        PatternSetup {
            space: PatternSpace::Theta,
            points,
            couplings: (0.01, 0.01),
            fixed: (0.0, 0.0),
            r: 0.2,
            tau: 3.0,
            quadrature: Quadrature::Y,
        }
    }

    #[test]
    fn theta_rule_examples() {
        assert_eq!(decide_theta(0.774).label, Label::Class1);
        assert_eq!(decide_theta(-0.492).label, Label::Class2);
        assert_eq!(decide_theta(0.0).label, Label::Class1);
        assert_eq!(decide_theta(-0.492).rule, Rule::Theta);
    }

    #[test]
    fn phi_rule_examples() {
        assert_eq!(decide_phi(0.3, 0.5).label, Label::Class1);
        assert_eq!(decide_phi(0.3, -0.5).label, Label::Class2);
        assert_eq!(decide_phi(0.0, 0.0).label, Label::Class1);
        assert_eq!(decide_phi(-0.3, 0.5).label, Label::Class2);
        assert_eq!(decide_phi(-0.3, -0.5).label, Label::Class1);
    }

    #[test]
    fn grid_boundary_is_anti_diagonal() {
        let setup = theta_setup(theta_pair_grid(19));
        let scan = pattern_scan(&setup, &Engine::ClosedForm).unwrap();
        assert_eq!(scan.rows.len(), 361);
        for row in &scan.rows {
            let expected = if row.a + row.b <= PI + 1e-12 { Label::Class1 } else { Label::Class2 };
            // points on the boundary sit at |sz| ~ 1e-17 and may land either way
            if (row.a + row.b - PI).abs() > 1e-9 {
                assert_eq!(row.decision.label, expected, "({}, {})", row.a, row.b);
            }
        }
        let axis = crate::qfi::theta_grid(19);
        let sz: Vec<f64> = scan.rows.iter().map(|r| r.bloch[2]).collect();
        for (a, b) in zero_crossings(&axis, &sz) {
            assert!((a + b - PI).abs() <= PI / 18.0, "crossing at ({a}, {b})");
        }
    }

    #[test]
    fn random_theta_pairs_follow_cosine_sum() {
        let setup = theta_setup(random_theta_pairs(32, 7));
        let scan = pattern_scan(&setup, &Engine::ClosedForm).unwrap();
        for row in &scan.rows {
            let expected = if row.a.cos() + row.b.cos() >= 0.0 { Label::Class1 } else { Label::Class2 };
            assert_eq!(row.decision.label, expected);
        }
        assert_eq!(scan.agreement(), 1.0);
    }

    #[test]
    fn equal_angles_reduce_to_one_reservoir() {
        let points: Vec<_> = (0..10).map(|k| (0.3 * k as f64, 0.3 * k as f64)).collect();
        let scan = pattern_scan(&theta_setup(points), &Engine::ClosedForm).unwrap();
        for row in &scan.rows {
            assert_eq!(row.decision.label, decide_theta(row.a.cos()).label);
        }
    }

    #[test]
    fn phi_pairs_closed_form() {
        let setup = PatternSetup {
            space: PatternSpace::Phi,
            points: random_phi_pairs(32, 3),
            couplings: (0.01, 0.01),
            fixed: (FRAC_PI_3, FRAC_PI_3),
            r: 0.16,
            tau: 3.0,
            quadrature: Quadrature::Y,
        };
        let scan = pattern_scan(&setup, &Engine::ClosedForm).unwrap();
        for row in &scan.rows {
            // ⟨σ_y⟩ ∝ −(cosφ₁ + cosφ₂) with ⟨σ_z⟩ = 1/2 > 0
            let expected = if -(row.a.cos() + row.b.cos()) >= 0.0 { Label::Class1 } else { Label::Class2 };
            assert_eq!(row.decision.label, expected);
            assert!(row.a > 0.0 && row.a < PI && row.b > PI && row.b < TAU);
        }
    }

    #[test]
    fn simulated_theta_pattern_matches_closed_form() {
        let sim = SimulationSetup {
            schedule: CollisionSchedule::regular(3.0, 0.0, 18000, 0).unwrap(),
            noise: NoiseParams::none(),
            probe: BlochParams::plus(),
            options: SimulationOptions::default(),
        };
        let setup = theta_setup(random_theta_pairs(12, 11));
        let scan = pattern_scan(&setup, &Engine::Simulate(sim)).unwrap();
        let (hit, total) = scan.agreement_beyond(0.05);
        assert_eq!(hit, total);
    }

    #[test]
    fn scale_invariance_of_labels() {
        let points = random_theta_pairs(40, 5);
        let base = pattern_scan(&theta_setup(points.clone()), &Engine::ClosedForm).unwrap();
        for scale in [0.5, 1.7, 2.0] {
            let setup = PatternSetup { couplings: (0.01 * scale, 0.01 * scale), ..theta_setup(points.clone()) };
            let scaled = pattern_scan(&setup, &Engine::ClosedForm).unwrap();
            for (x, y) in base.rows.iter().zip(&scaled.rows) {
                assert_eq!(x.decision.label, y.decision.label);
            }
        }
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(pattern_scan(&theta_setup(vec![]), &Engine::ClosedForm).is_err());
        assert!(random_pairs(3, 0, (1.0, 1.0), (0.0, 1.0)).is_err());
        assert!("z".parse::<Quadrature>().is_err());
    }

    #[test]
    fn random_pairs_are_seeded() {
        assert_eq!(random_theta_pairs(5, 1), random_theta_pairs(5, 1));
        assert_ne!(random_theta_pairs(5, 1), random_theta_pairs(5, 2));
    }

    #[test]
    fn crossings_by_interpolation() {
        let axis = [0.0, 1.0];
        let c = zero_crossings(&axis, &[1.0, -1.0, 0.5, 0.25]);
        assert_eq!(c, vec![(0.0, 0.5)]);
    }
}
