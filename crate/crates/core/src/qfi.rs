//! Quantum Fisher information of the closed-form steady state with respect
//! to the reservoir angles.
//!
//! The reference evaluator is the two-level formula
//! `F = Tr[(∂ρ)²] + Tr[(ρ∂ρ)²] / det ρ`. A derivative "with respect to θ"
//! shifts every reservoir's θ by the same amount, and likewise for φ.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::collision::ReservoirSpec;
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, CMatrix, DensityMatrix, I};
use crate::master::{angles, closed_form_matrix, closed_form_parts};

/// Determinant at or below which a state counts as pure.
pub const PURE_DET: f64 = 1e-12;
/// Step of the central finite differences.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameter {
    Theta,
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Two-level determinant formula.
    DeterminantFormula,
    /// `2 Tr[(∂ρ)²]`, valid for pure states.
    PureState,
    /// Closed trigonometric expression for one reservoir, θ parameter.
    SingleReservoirTheta,
    /// `ξ² sin²2θ` for one reservoir.
    SingleReservoirPhi,
    /// `4|C|²` expanded as a quadruple sum over reservoirs.
    QuadrupleSum,
    /// Determinant formula fed a finite-difference derivative.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiResult {
    pub value: f64,
    pub parameter: Option<Parameter>,
    pub method: Method,
}

fn check_pair(rho: &DensityMatrix, drho: &CMatrix) -> Result<()> {
    if rho.dim() != 2 || drho.rows() != 2 || drho.cols() != 2 {
        return Err(invalid("QFI formulas need 2x2 inputs"));
    }
    if !drho.is_hermitian(1e-10) {
        return Err(invalid("derivative of a density matrix must be Hermitian"));
    }
    Ok(())
}

/// `Tr[(∂ρ)²] + Tr[(ρ∂ρ)²] / det ρ`. Pure states are rejected with
/// [`Error::PureState`]; use [`qfi`] to route them automatically.
pub fn qfi_tls(rho: &DensityMatrix, drho: &CMatrix) -> Result<QfiResult> {
    check_pair(rho, drho)?;
    let det = rho.det2();
    if det <= PURE_DET {
        return Err(Error::PureState(det));
    }
    let dd = (drho * drho).trace().re;
    let rd = rho.matrix() * drho;
    let value = dd + (&rd * &rd).trace().re / det;
    Ok(QfiResult { value, parameter: None, method: Method::DeterminantFormula })
}

/// [`qfi_tls`] for mixed states, `2 Tr[(∂ρ)²]` for pure ones.
pub fn qfi(rho: &DensityMatrix, drho: &CMatrix) -> Result<QfiResult> {
    match qfi_tls(rho, drho) {
        Err(Error::PureState(_)) => {
            let value = 2.0 * (drho * drho).trace().re;
            Ok(QfiResult { value, parameter: None, method: Method::PureState })
        }
        other => other,
    }
}

fn sum_j2(specs: &[ReservoirSpec]) -> Result<f64> {
    let s: f64 = specs.iter().map(|s| s.coupling * s.coupling).sum();
    if !(s > 0.0) {
        return Err(invalid("sum of squared couplings must be positive"));
    }
    Ok(s)
}

/// `∂ρ/∂φ = [[0, −iC], [iC*, 0]]`, since every term of `C` carries `e^{−iφ_i}`.
pub fn dphi_rho(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<CMatrix> {
    let (_, coh) = closed_form_parts(&angles(specs), r, tau)?;
    let d = -I * coh;
    Ok(CMatrix::from_2x2([[c(0.0, 0.0), d], [d.conj(), c(0.0, 0.0)]]))
}

/// `∂ρ/∂θ`: diagonal `∓ Σ J_i² sinθ_i / 2ΣJ²`, coherence
/// `(iτr / 2ΣJ²) Σ_{i,j} J_i J_j² cos(θ_i + θ_j) e^{−iφ_i}`.
pub fn dtheta_rho(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<CMatrix> {
    let s = sum_j2(specs)?;
    let diag = specs.iter().map(|a| a.coupling * a.coupling * a.theta().sin()).sum::<f64>() / (2.0 * s);
    let mut acc = Complex64::new(0.0, 0.0);
    for a in specs {
        for b in specs {
            acc +=
                Complex64::from_polar(a.coupling * b.coupling * b.coupling * (a.theta() + b.theta()).cos(), -a.phi());
        }
    }
    let off = I * acc * (tau * r / (2.0 * s));
    Ok(CMatrix::from_2x2([[c(-diag, 0.0), off], [off.conj(), c(diag, 0.0)]]))
}

/// Central finite difference of the closed-form steady state under a
/// common shift of every reservoir's angle.
pub fn finite_difference_drho(
    specs: &[ReservoirSpec],
    r: f64,
    tau: f64,
    parameter: Parameter,
    h: f64,
) -> Result<CMatrix> {
    let base = angles(specs);
    let shifted = |sign: f64| -> Vec<(f64, f64, f64)> {
        base.iter()
            .map(|&(t, p, j)| match parameter {
                Parameter::Theta => (t + sign * h, p, j),
                Parameter::Phi => (t, p + sign * h, j),
            })
            .collect()
    };
    let plus = closed_form_matrix(&shifted(1.0), r, tau)?;
    let minus = closed_form_matrix(&shifted(-1.0), r, tau)?;
    Ok((&plus - &minus).scale(c(0.5 / h, 0.0)))
}

/// `F_φ = 4|C|² = (τr/ΣJ²)² Σ_{i,j,k,l} J_iJ_j²J_kJ_l² sinθ_i cosθ_j sinθ_k cosθ_l e^{−i(φ_i−φ_k)}`.
pub fn qfi_phi_analytic(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<QfiResult> {
    let s = sum_j2(specs)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in specs {
        for j in specs {
            for k in specs {
                for l in specs {
                    let mag = i.coupling
                        * j.coupling.powi(2)
                        * k.coupling
                        * l.coupling.powi(2)
                        * i.theta().sin()
                        * j.theta().cos()
                        * k.theta().sin()
                        * l.theta().cos();
                    acc += Complex64::from_polar(mag, -(i.phi() - k.phi()));
                }
            }
        }
    }
    let pref = (tau * r / s).powi(2);
    if (pref * acc.im).abs() > 1e-14 {
        return Err(invalid(format!("quadruple sum has imaginary part {:e}", pref * acc.im)));
    }
    Ok(QfiResult { value: pref * acc.re, parameter: Some(Parameter::Phi), method: Method::QuadrupleSum })
}

/// `ξ² sin²2θ` with `ξ = τrJ/2`.
pub fn qfi_phi_single(theta: f64, xi: f64) -> QfiResult {
    QfiResult {
        value: (xi * (2.0 * theta).sin()).powi(2),
        parameter: Some(Parameter::Phi),
        method: Method::SingleReservoirPhi,
    }
}

/// Closed trigonometric expression for the single-reservoir θ-QFI as
/// published. At `θ = π/2` it evaluates to `1 + 3ξ²`, while the
/// determinant formula on the same state gives `1 + 4ξ²`.
pub fn qfi_theta_analytic_single(theta: f64, xi: f64) -> Result<QfiResult> {
    let (s, co) = theta.sin_cos();
    let s2 = (2.0 * theta).sin();
    let c2 = (2.0 * theta).cos();
    let s4 = (4.0 * theta).sin();
    let denom = s * s - xi * xi * s2 * s2;
    if denom.abs() <= 1e-12 {
        return Err(Error::SingularPoint(format!("denominator vanishes at theta = {theta}")));
    }
    let bracket = s * s / 2.0
        + s2 * s2 / 8.0
        + xi * xi * (-1.5 * s2 * s4 + c2 * c2 + co * co * c2 * c2 - s * s * s2 * s2 + xi * xi / 2.0 * s4 * s4);
    let value = s * s / 2.0 + 2.0 * xi * xi * c2 * c2 + bracket / denom;
    Ok(QfiResult { value, parameter: Some(Parameter::Theta), method: Method::SingleReservoirTheta })
}

/// `n` evenly spaced points over `[0, π]`, endpoints included.
pub fn theta_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|k| PI * k as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` evenly spaced points over `[0, 2π)`.
pub fn phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Outcome of a QFI scan over a trial parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiScan {
    pub trial: Vec<f64>,
    /// `None` where the closed form is outside its validity domain.
    pub qfi: Vec<Option<f64>>,
    pub argmax: f64,
    /// `0` iff the argmax is at least `π/2`, `1` otherwise.
    pub label: u8,
}

/// Evaluates the QFI of the closed-form steady state for every trial
/// value. `build` maps a trial value to the reservoir set. The derivative
/// is a central finite difference with step [`FD_STEP`].
///
/// Argmax ties (within `1e-9` relative) go to the smaller trial value.
pub fn qfi_scan_decide<F>(build: F, grid: &[f64], parameter: Parameter, r: f64, tau: f64) -> Result<QfiScan>
where
    F: Fn(f64) -> Result<Vec<ReservoirSpec>> + Sync,
{
    if grid.is_empty() {
        return Err(invalid("QFI scan grid is empty"));
    }
    let qfi: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&t| -> Result<Option<f64>> {
            let specs = build(t)?;
            let rho = match crate::master::closed_form_steady_state(&specs, r, tau) {
                Ok(ss) => ss.rho,
                Err(Error::OutsideValidity(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let drho = finite_difference_drho(&specs, r, tau, parameter, FD_STEP)?;
            Ok(Some(qfi(&rho, &drho)?.value))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (k, v) in qfi.iter().enumerate() {
        if let Some(v) = *v {
            match best {
                Some((_, b)) if v <= b + 1e-9 * b.abs() => {}
                _ => best = Some((k, v)),
            }
        }
    }
    let (k, _) = best.ok_or_else(|| Error::SingularPoint("every grid point is singular".into()))?;
    let argmax = grid[k];
    Ok(QfiScan { trial: grid.to_vec(), qfi, argmax, label: if argmax >= FRAC_PI_2 { 0 } else { 1 } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ops;
    use crate::master::closed_form_steady_state;
    use crate::states::pure_state;
    use crate::states::BlochParams;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    const XI: f64 = 0.003;

    fn spec(theta: f64, phi: f64, j: f64) -> ReservoirSpec {
        ReservoirSpec::new(theta, phi, j).unwrap()
    }

    fn pair(t1: f64, t2: f64) -> Result<Vec<ReservoirSpec>> {
        Ok(vec![ReservoirSpec::new(t1, 0.0, 0.01)?, ReservoirSpec::new(t2, 0.0, 0.01)?])
    }

    #[test]
    fn tls_examples() {
        let mixed = DensityMatrix::maximally_mixed(1);
        let f = qfi_tls(&mixed, &ops::sigma_z().scale(c(0.5, 0.0))).unwrap();
        assert!((f.value - 1.0).abs() < 1e-15);
        assert_eq!(qfi_tls(&mixed, &CMatrix::zeros(2, 2)).unwrap().value, 0.0);

        let ss = closed_form_steady_state(&[spec(FRAC_PI_2, 0.7, 0.01)], 0.2, 3.0).unwrap();
        let d = dtheta_rho(&[spec(FRAC_PI_2, 0.7, 0.01)], 0.2, 3.0).unwrap();
        let f = qfi_tls(&ss.rho, &d).unwrap();
        assert!((f.value - (1.0 + 4.0 * XI * XI)).abs() < 1e-12, "{}", f.value);
    }

    #[test]
    fn pure_states_are_routed() {
        let rho = pure_state(BlochParams::new(1.0, 0.3).unwrap());
        let d = ops::sigma_x().scale(c(0.5, 0.0));
        assert!(matches!(qfi_tls(&rho, &d), Err(Error::PureState(_))));
        let f = qfi(&rho, &d).unwrap();
        assert_eq!(f.method, Method::PureState);
        assert!((f.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tls_rejects_non_hermitian_derivative() {
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!(qfi_tls(&mixed, &ops::sigma_plus()).is_err());
    }

    #[test]
    fn dphi_examples() {
        let d = dphi_rho(&[spec(0.0, 1.0, 0.01), spec(PI, 2.0, 0.02)], 0.2, 3.0).unwrap();
        assert!(d.max_abs() < 1e-17);

        // C = iξ·sinθcosθ = 0.0015i at θ = π/4, so ∂C/∂φ = −iC = +0.0015
        let d = dphi_rho(&[spec(FRAC_PI_4, 0.0, 0.01)], 0.2, 3.0).unwrap();
        assert!((d[(0, 1)] - c(0.0015, 0.0)).norm() < 1e-15);
        assert!(d.is_hermitian(0.0));
        assert_eq!(d[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn dtheta_examples() {
        let d = dtheta_rho(&[spec(0.0, 0.0, 0.01), spec(0.0, 0.0, 0.02)], 0.2, 3.0).unwrap();
        assert_eq!(d[(0, 0)], c(0.0, 0.0));
        // Σ_i J_i · Σ_j J_j² terms with cos(0) = 1
        let expected = I * (0.03 * 5e-4) * (0.6 / (2.0 * 5e-4));
        assert!((d[(0, 1)] - expected).norm() < 1e-15);

        let phi = 0.9;
        let d = dtheta_rho(&[spec(FRAC_PI_2, phi, 0.01)], 0.2, 3.0).unwrap();
        assert!((d[(0, 0)].re + 0.5).abs() < 1e-15 && (d[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!((d[(0, 1)] - (-I * Complex64::from_polar(XI, -phi))).norm() < 1e-15);
        assert!(d.is_hermitian(0.0));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let specs = [spec(0.7, 1.1, 0.01), spec(2.2, 4.0, 0.006)];
        let fd = finite_difference_drho(&specs, 0.2, 3.0, Parameter::Theta, FD_STEP).unwrap();
        assert!(fd.max_abs_diff(&dtheta_rho(&specs, 0.2, 3.0).unwrap()) < 1e-8);
        let fd = finite_difference_drho(&specs, 0.2, 3.0, Parameter::Phi, FD_STEP).unwrap();
        assert!(fd.max_abs_diff(&dphi_rho(&specs, 0.2, 3.0).unwrap()) < 1e-8);
    }

    #[test]
    fn phi_analytic_examples() {
        let f = qfi_phi_analytic(&[spec(FRAC_PI_4, 0.0, 0.01)], 0.2, 3.0).unwrap();
        assert!((f.value - 9e-6).abs() < 1e-12);
        assert!((f.value - qfi_phi_single(FRAC_PI_4, XI).value).abs() < 1e-12);
        assert_eq!(qfi_phi_analytic(&[spec(0.0, 0.0, 0.01)], 0.2, 3.0).unwrap().value, 0.0);
    }

    #[test]
    fn phi_scan_peaks_at_equal_azimuths() {
        let t = PI / 6.0;
        let build = |d: f64| Ok(vec![ReservoirSpec::new(t, d, 0.01)?, ReservoirSpec::new(t, 0.0, 0.01)?]);
        let scan = qfi_scan_decide(build, &phi_grid(361), Parameter::Phi, 0.2, 3.0).unwrap();
        assert_eq!(scan.argmax, 0.0);
        let build = |d: f64| Ok(vec![ReservoirSpec::new(t, PI, 0.01)?, ReservoirSpec::new(t, d, 0.01)?]);
        let scan = qfi_scan_decide(build, &phi_grid(361), Parameter::Phi, 0.2, 3.0).unwrap();
        assert!((scan.argmax - PI).abs() <= TAU / 361.0);
    }

    #[test]
    fn theta_single_examples() {
        assert!((qfi_theta_analytic_single(FRAC_PI_2, 0.0).unwrap().value - 1.0).abs() < 1e-15);
        let v = qfi_theta_analytic_single(FRAC_PI_2, XI).unwrap().value;
        assert!((v - (1.0 + 3.0 * XI * XI)).abs() < 1e-15, "{v}");
        assert!(matches!(qfi_theta_analytic_single(0.0, XI), Err(Error::SingularPoint(_))));
        for &t in &[0.2, 0.9, 1.3] {
            let a = qfi_theta_analytic_single(t, XI).unwrap().value;
            let b = qfi_theta_analytic_single(PI - t, XI).unwrap().value;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_scan_cases() {
        let grid = theta_grid(181);
        let step = PI / 180.0;
        let s1 = qfi_scan_decide(|d| pair(d, PI - d), &grid, Parameter::Theta, 0.2, 3.0).unwrap();
        assert!((s1.argmax - FRAC_PI_2).abs() <= step);
        let s2 = qfi_scan_decide(|d| pair(d, 11.0 * PI / 12.0), &grid, Parameter::Theta, 0.2, 3.0).unwrap();
        assert!((s2.argmax - 11.0 * PI / 12.0).abs() <= step);
        assert_eq!(s2.label, 0);
        let s3 = qfi_scan_decide(|d| pair(PI / 12.0, d), &grid, Parameter::Theta, 0.2, 3.0).unwrap();
        assert!((s3.argmax - PI / 12.0).abs() <= step);
        assert_eq!(s3.label, 1);
    }

    #[test]
    fn scan_errors() {
        assert!(qfi_scan_decide(|d| pair(d, d), &[], Parameter::Theta, 0.2, 3.0).is_err());
        // every point outside the validity domain
        let huge = |d: f64| Ok(vec![ReservoirSpec::new(d, 0.0, 50.0)?]);
        let r = qfi_scan_decide(huge, &[0.5, 0.7], Parameter::Theta, 0.2, 3.0);
        assert!(matches!(r, Err(Error::SingularPoint(_))));
    }

    #[test]
    fn grids() {
        let g = theta_grid(181);
        assert_eq!(g.len(), 181);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[180], PI);
        let g = phi_grid(361);
        assert_eq!(g.len(), 361);
        assert!(*g.last().unwrap() < TAU);
    }

    fn spec_strategy() -> impl Strategy<Value = Vec<ReservoirSpec>> {
        prop::collection::vec((0.05..PI - 0.05, 0.0..TAU, 0.002..0.02f64), 1..=3)
            .prop_map(|v| v.into_iter().map(|(t, p, j)| spec(t, p, j)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn phi_qfi_is_four_coherence_squared(specs in spec_strategy()) {
            let f = qfi_phi_analytic(&specs, 0.2, 3.0).unwrap().value;
            let ss = closed_form_steady_state(&specs, 0.2, 3.0).unwrap();
            prop_assert!((f - 4.0 * ss.coherence.norm_sqr()).abs() < 1e-12);
        }

        #[test]
        fn phi_qfi_ignores_global_phase(specs in spec_strategy(), shift in 0.0..TAU) {
            let moved: Vec<_> = specs.iter().map(|s| spec(s.theta(), s.phi() + shift, s.coupling)).collect();
            let a = qfi_phi_analytic(&specs, 0.2, 3.0).unwrap().value;
            let b = qfi_phi_analytic(&moved, 0.2, 3.0).unwrap().value;
            prop_assert!((a - b).abs() < 1e-15);
        }

        #[test]
        fn analytic_and_numeric_derivatives_agree(specs in spec_strategy()) {
            let ss = closed_form_steady_state(&specs, 0.2, 3.0).unwrap();
            prop_assume!(ss.rho.det2() > 1e-6);
            for (param, exact) in [(Parameter::Theta, dtheta_rho(&specs, 0.2, 3.0).unwrap()), (Parameter::Phi, dphi_rho(&specs, 0.2, 3.0).unwrap())] {
                let fd = finite_difference_drho(&specs, 0.2, 3.0, param, FD_STEP).unwrap();
                let a = qfi_tls(&ss.rho, &exact).unwrap().value;
                let b = qfi_tls(&ss.rho, &fd).unwrap().value;
                prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12), "{:?}: {} vs {}", param, a, b);
            }
        }

        #[test]
        fn qfi_is_nonnegative(specs in spec_strategy()) {
            let ss = closed_form_steady_state(&specs, 0.2, 3.0).unwrap();
            let d = dtheta_rho(&specs, 0.2, 3.0).unwrap();
            prop_assert!(qfi(&ss.rho, &d).unwrap().value >= -1e-12);
        }
    }
}
