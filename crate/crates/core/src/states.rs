//! Bloch-parametrized qubit states and the moments a reservoir unit
//! contributes to the probe dynamics.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::linalg::{c, CMatrix, DensityMatrix};

const THETA_SLACK: f64 = 1e-12;

/// Polar angle `theta ∈ [0, π]` and azimuth `phi ∈ [0, 2π)` of a pure qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochParams {
    theta: f64,
    phi: f64,
}

impl BlochParams {
    /// Rejects `theta` outside `[0, π]` by more than `1e-12` (values inside
    /// the slack are clamped) and wraps `phi` into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(invalid(format!("Bloch angles must be finite, got ({theta}, {phi})")));
        }
        if !(-THETA_SLACK..=PI + THETA_SLACK).contains(&theta) {
            return Err(invalid(format!("theta = {theta} outside [0, pi]")));
        }
        Ok(Self { theta: theta.clamp(0.0, PI), phi: normalize_phi(phi) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Excited state `|e⟩`.
    pub fn excited() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    /// Ground state `|g⟩`.
    pub fn ground() -> Self {
        Self { theta: PI, phi: 0.0 }
    }

    /// `|+⟩ = (|e⟩ + |g⟩)/√2`.
    pub fn plus() -> Self {
        Self { theta: PI / 2.0, phi: 0.0 }
    }
}

fn normalize_phi(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// `[[ (1+cosθ)/2, e^{−iφ} sinθ/2 ], [ e^{iφ} sinθ/2, (1−cosθ)/2 ]]`
pub fn pure_state(p: BlochParams) -> DensityMatrix {
    let (s, co) = p.theta.sin_cos();
    let off = Complex64::from_polar(0.5 * s, -p.phi);
    let m = CMatrix::from_2x2([[c(0.5 * (1.0 + co), 0.0), off], [off.conj(), c(0.5 * (1.0 - co), 0.0)]]);
    DensityMatrix::new_unchecked(m)
}

/// Single-qubit state from a Bloch vector.
pub fn state_from_bloch(x: f64, y: f64, z: f64) -> Result<DensityMatrix> {
    let off = c(0.5 * x, -0.5 * y);
    DensityMatrix::new(CMatrix::from_2x2([[c(0.5 * (1.0 + z), 0.0), off], [off.conj(), c(0.5 * (1.0 - z), 0.0)]]))
}

/// `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` of a single-qubit state.
pub fn pauli_expectations(rho: &DensityMatrix) -> Result<(f64, f64, f64)> {
    if rho.dim() != 2 {
        return Err(invalid(format!("expected a single-qubit state, got dimension {}", rho.dim())));
    }
    Ok(bloch_of(rho.matrix()))
}

pub(crate) fn bloch_of(m: &CMatrix) -> (f64, f64, f64) {
    let r01 = m[(0, 1)];
    (2.0 * r01.re, -2.0 * r01.im, (m[(0, 0)] - m[(1, 1)]).re)
}

/// Single-unit reservoir moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirMoments {
    /// ⟨σ⁺⟩
    pub sp: Complex64,
    /// ⟨σ⁻⟩, the upper-right entry of the unit's density matrix
    pub sm: Complex64,
    /// ⟨σ⁺σ⁻⟩, excited population
    pub spm: f64,
    /// ⟨σ⁻σ⁺⟩, ground population
    pub smp: f64,
    /// ⟨σ_z⟩
    pub sz: f64,
}

impl ReservoirMoments {
    /// Rebuilds the unit's density matrix.
    pub fn density_matrix(&self) -> CMatrix {
        CMatrix::from_2x2([[c(self.spm, 0.0), self.sm], [self.sp, c(self.smp, 0.0)]])
    }
}

pub fn reservoir_moments(p: BlochParams) -> ReservoirMoments {
    let (s, co) = p.theta.sin_cos();
    let sm = Complex64::from_polar(0.5 * s, -p.phi);
    ReservoirMoments { sp: sm.conj(), sm, spm: 0.5 * (1.0 + co), smp: 0.5 * (1.0 - co), sz: co }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    const EPS: f64 = 1e-12;

    #[test]
    fn pure_state_examples() {
        let e = pure_state(BlochParams::new(0.0, 0.0).unwrap());
        assert!(e.matrix().max_abs_diff(&CMatrix::from_diag(&[c(1.0, 0.0), c(0.0, 0.0)])) < EPS);

        let plus = pure_state(BlochParams::plus());
        assert!(plus.matrix().max_abs_diff(&CMatrix::from_2x2([[c(0.5, 0.0); 2]; 2])) < EPS);

        let m = pure_state(BlochParams::new(PI / 3.0, FRAC_PI_2).unwrap());
        let m = m.matrix();
        assert!((m[(0, 0)].re - 0.75).abs() < EPS);
        assert!((m[(1, 1)].re - 0.25).abs() < EPS);
        assert!((m[(0, 1)] - c(0.0, -(3f64.sqrt()) / 4.0)).norm() < EPS);
    }

    #[test]
    fn theta_range_is_checked() {
        assert!(BlochParams::new(-1e-6, 0.0).is_err());
        assert!(BlochParams::new(PI + 1e-6, 0.0).is_err());
        assert_eq!(BlochParams::new(PI + 1e-13, 0.0).unwrap().theta(), PI);
        assert!(BlochParams::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn phi_is_wrapped() {
        assert_eq!(BlochParams::new(1.0, 3.0 * FRAC_PI_2).unwrap().phi(), 3.0 * FRAC_PI_2);
        assert!((BlochParams::new(1.0, -FRAC_PI_2).unwrap().phi() - 3.0 * FRAC_PI_2).abs() < EPS);
        assert_eq!(BlochParams::new(1.0, TAU).unwrap().phi(), 0.0);
        assert!(BlochParams::new(1.0, -1e-300).unwrap().phi() < TAU);
    }

    #[test]
    fn pauli_examples() {
        let (x, y, z) = pauli_expectations(&DensityMatrix::maximally_mixed(1)).unwrap();
        assert_eq!((x, y, z), (0.0, 0.0, 0.0));

        let (x, y, z) = pauli_expectations(&pure_state(BlochParams::new(2.0 * PI / 3.0, FRAC_PI_2).unwrap())).unwrap();
        assert!(x.abs() < EPS);
        assert!((y - 3f64.sqrt() / 2.0).abs() < EPS);
        assert!((z + 0.5).abs() < EPS);

        assert!(pauli_expectations(&DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn moments_examples() {
        let m = reservoir_moments(BlochParams::excited());
        assert_eq!((m.spm, m.smp, m.sz), (1.0, 0.0, 1.0));
        assert_eq!(m.sm.norm(), 0.0);

        let m = reservoir_moments(BlochParams::ground());
        assert!(m.spm.abs() < EPS && (m.smp - 1.0).abs() < EPS && (m.sz + 1.0).abs() < EPS);
        assert!(m.sm.norm() < EPS);

        let m = reservoir_moments(BlochParams::new(FRAC_PI_2, FRAC_PI_2).unwrap());
        assert!((m.sm - c(0.0, -0.5)).norm() < EPS);
        assert!(m.sz.abs() < EPS);
    }

    #[test]
    fn bloch_round_trip() {
        let rho = state_from_bloch(0.1, -0.2, 0.3).unwrap();
        let (x, y, z) = pauli_expectations(&rho).unwrap();
        assert!((x - 0.1).abs() < EPS && (y + 0.2).abs() < EPS && (z - 0.3).abs() < EPS);
        assert!(state_from_bloch(1.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn pure_states_are_pure(theta in 0.0..=PI, phi in 0.0..TAU) {
            let rho = pure_state(BlochParams::new(theta, phi).unwrap());
            prop_assert!(rho.det2().abs() < EPS);
            prop_assert!((rho.purity() - 1.0).abs() < EPS);
            prop_assert!(rho.physicality().is_valid());
        }

        #[test]
        fn bloch_vector_of_pure_state(theta in 0.0..=PI, phi in 0.0..TAU) {
            let p = BlochParams::new(theta, phi).unwrap();
            let (x, y, z) = pauli_expectations(&pure_state(p)).unwrap();
            prop_assert!((x - theta.sin() * phi.cos()).abs() < EPS);
            prop_assert!((y - theta.sin() * phi.sin()).abs() < EPS);
            prop_assert!((z - theta.cos()).abs() < EPS);
            prop_assert!((x * x + y * y + z * z).sqrt() <= 1.0 + 1e-9);
        }

        #[test]
        fn moments_rebuild_state(theta in 0.0..=PI, phi in 0.0..TAU) {
            let p = BlochParams::new(theta, phi).unwrap();
            let m = reservoir_moments(p);
            prop_assert!((m.spm + m.smp - 1.0).abs() < EPS);
            prop_assert_eq!(m.sp, m.sm.conj());
            prop_assert!((m.sm.norm() - theta.sin() / 2.0).abs() < EPS);
            prop_assert!(m.density_matrix().max_abs_diff(pure_state(p).matrix()) < EPS);
        }
    }
}
