//! Coarse-grained (micromaser) description of the probe dynamics.
//!
//! Averaging collisions that arrive at rate `r` gives
//!
//! ```text
//! dρ/dt = −i[γ₁σ⁺ + γ₂σ⁻, ρ] + γ₃ L[σ⁺] + γ₄ L[σ⁻] + γ₅ Ls[σ⁺] + γ₆ Ls[σ⁻]
//! L[o]  = 2oρo† − o†oρ − ρo†o
//! Ls[o] = 2oρo − o²ρ − ρo²
//! ```
//!
//! with `γ₁ = rτ Σ J_i⟨σ_i⁻⟩`, `γ₂ = γ₁*`, `γ₃ = (rτ²/2) Σ J_i²⟨σ⁺σ⁻⟩_i`,
//! `γ₄ = (rτ²/2) Σ J_i²⟨σ⁻σ⁺⟩_i`, `γ₅ = 2rτ² Σ_{i<j} J_iJ_j⟨σ_i⁻⟩⟨σ_j⁻⟩` and
//! `γ₆ = γ₅*`.

use num_complex::Complex64;

use crate::collision::ReservoirSpec;
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, ops, sandwich, spost, spre, CMatrix, DensityMatrix, I};
use crate::states::reservoir_moments;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicromaserCoefficients {
    pub gamma1m: Complex64,
    pub gamma2p: Complex64,
    pub gamma3p: f64,
    pub gamma4m: f64,
    pub gamma5m: Complex64,
    pub gamma6p: Complex64,
    pub r: f64,
    pub tau: f64,
    /// `Σ J_i²`
    pub sum_j2: f64,
}

impl MicromaserCoefficients {
    /// Drops the squeezing pair `γ₅`, `γ₆`.
    pub fn without_squeezing(mut self) -> Self {
        self.gamma5m = Complex64::new(0.0, 0.0);
        self.gamma6p = Complex64::new(0.0, 0.0);
        self
    }

    /// Largest RK4 step accepted by [`integrate_bloch`].
    pub fn max_step(&self) -> f64 {
        let rate = self.r * self.tau * self.tau * self.sum_j2;
        if rate > 0.0 {
            0.1 / rate
        } else {
            f64::INFINITY
        }
    }
}

fn check_model(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid(format!("collision rate r must be positive, got {r}")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("interaction time tau must be positive, got {tau}")));
    }
    if specs.is_empty() {
        return Err(invalid("need at least one reservoir"));
    }
    if let Some(s) = specs.iter().find(|s| !s.coupling.is_finite() || s.coupling < 0.0) {
        return Err(invalid(format!("coupling must be finite and >= 0, got {}", s.coupling)));
    }
    Ok(())
}

pub fn coefficients(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<MicromaserCoefficients> {
    check_model(specs, r, tau)?;
    let moments: Vec<_> = specs.iter().map(|s| reservoir_moments(s.params)).collect();
    let mut g1 = Complex64::new(0.0, 0.0);
    let (mut g3, mut g4, mut sum_j2) = (0.0, 0.0, 0.0);
    let mut g5 = Complex64::new(0.0, 0.0);
    for (i, (s, m)) in specs.iter().zip(&moments).enumerate() {
        let j = s.coupling;
        g1 += m.sm * j;
        g3 += j * j * m.spm;
        g4 += j * j * m.smp;
        sum_j2 += j * j;
        for (t, n) in specs.iter().zip(&moments).skip(i + 1) {
            g5 += m.sm * n.sm * (j * t.coupling);
        }
    }
    let g1 = g1 * (r * tau);
    let half = 0.5 * r * tau * tau;
    let g5 = g5 * (2.0 * r * tau * tau);
    Ok(MicromaserCoefficients {
        gamma1m: g1,
        gamma2p: g1.conj(),
        gamma3p: half * g3,
        gamma4m: half * g4,
        gamma5m: g5,
        gamma6p: g5.conj(),
        r,
        tau,
        sum_j2,
    })
}

/// Time derivative of the Bloch vector under the master equation.
///
/// With `c = (x − iy)/2` the `|e⟩⟨g|` coherence:
///
/// ```text
/// dz/dt = −2(γ₃ + γ₄) z + 2(γ₃ − γ₄) − 2i(γ₁c* − γ₂c)
/// dc/dt = iγ₁ z − (γ₃ + γ₄) c + 2γ₅ c*
/// ```
pub fn bloch_rhs(v: [f64; 3], k: &MicromaserCoefficients) -> [f64; 3] {
    let [x, y, z] = v;
    let coh = c(0.5 * x, -0.5 * y);
    let g34 = k.gamma3p + k.gamma4m;
    let dz = -2.0 * g34 * z + 2.0 * (k.gamma3p - k.gamma4m) - 2.0 * (I * (k.gamma1m * coh.conj() - k.gamma2p * coh)).re;
    let dc = I * k.gamma1m * z - coh * g34 + k.gamma5m * coh.conj() * 2.0;
    [2.0 * dc.re, -2.0 * dc.im, dz]
}

/// Fixed-step RK4 over [`bloch_rhs`]. Returns `(t, v)` at every step,
/// starting with `(0, v0)`.
pub fn integrate_bloch(v0: [f64; 3], k: &MicromaserCoefficients, t_end: f64, dt: f64) -> Result<Vec<(f64, [f64; 3])>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("step dt must be positive, got {dt}")));
    }
    if dt > k.max_step() {
        return Err(invalid(format!("step dt = {dt} exceeds the stability limit {}", k.max_step())));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(invalid(format!("t_end must be >= 0, got {t_end}")));
    }
    let steps = (t_end / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut v = v0;
    out.push((0.0, v));
    for n in 0..steps {
        let h = dt.min(t_end - n as f64 * dt);
        let k1 = bloch_rhs(v, k);
        let k2 = bloch_rhs(axpy(v, 0.5 * h, k1), k);
        let k3 = bloch_rhs(axpy(v, 0.5 * h, k2), k);
        let k4 = bloch_rhs(axpy(v, h, k3), k);
        for i in 0..3 {
            v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push((((n + 1) as f64 * dt).min(t_end), v));
    }
    Ok(out)
}

fn axpy(v: [f64; 3], a: f64, d: [f64; 3]) -> [f64; 3] {
    [v[0] + a * d[0], v[1] + a * d[1], v[2] + a * d[2]]
}

/// Closed-form steady state of the probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)`
    pub bloch: [f64; 3],
    /// Upper-right entry `C`.
    pub coherence: Complex64,
}

/// `⟨σ_z⟩ = Σ J_i² cosθ_i / Σ J_i²`.
pub fn steady_sz(specs: &[ReservoirSpec]) -> Result<f64> {
    Ok(closed_form_parts(&angles(specs), 1.0, 1.0)?.0)
}

/// `C = (iτr / 2ΣJ²) Σ_{i,j} J_i J_j² sinθ_i cosθ_j e^{−iφ_i}`.
pub fn steady_coherence(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<Complex64> {
    Ok(closed_form_parts(&angles(specs), r, tau)?.1)
}

pub(crate) fn angles(specs: &[ReservoirSpec]) -> Vec<(f64, f64, f64)> {
    specs.iter().map(|s| (s.theta(), s.phi(), s.coupling)).collect()
}

/// `(⟨σ_z⟩, C)` from unvalidated `(θ, φ, J)` triples, so that finite
/// differences may step past the ends of the angle ranges.
pub(crate) fn closed_form_parts(params: &[(f64, f64, f64)], r: f64, tau: f64) -> Result<(f64, Complex64)> {
    let sum_j2: f64 = params.iter().map(|p| p.2 * p.2).sum();
    if !(sum_j2 > 0.0) {
        return Err(invalid("sum of squared couplings must be positive"));
    }
    let weighted_cos: f64 = params.iter().map(|&(t, _, j)| j * j * t.cos()).sum();
    let drive: Complex64 = params.iter().map(|&(t, p, j)| Complex64::from_polar(j * t.sin(), -p)).sum();
    let coherence = I * drive * weighted_cos * (tau * r / (2.0 * sum_j2));
    Ok((weighted_cos / sum_j2, coherence))
}

/// Closed-form steady state as a bare matrix.
pub(crate) fn closed_form_matrix(params: &[(f64, f64, f64)], r: f64, tau: f64) -> Result<CMatrix> {
    let (z, coh) = closed_form_parts(params, r, tau)?;
    Ok(CMatrix::from_2x2([[c(0.5 * (1.0 + z), 0.0), coh], [coh.conj(), c(0.5 * (1.0 - z), 0.0)]]))
}

/// Populations `(1 ± ⟨σ_z⟩)/2` and coherence `C`; rejected when the
/// result is not positive semidefinite, which happens once `rτJ` is too
/// large for the perturbative expansion.
pub fn closed_form_steady_state(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<SteadyState> {
    check_model(specs, r, tau)?;
    let (z, coherence) = closed_form_parts(&angles(specs), r, tau)?;
    let pe = 0.5 * (1.0 + z);
    let pg = 0.5 * (1.0 - z);
    if coherence.norm_sqr() > pe * pg + 1e-15 {
        return Err(Error::OutsideValidity(format!(
            "|C|^2 = {:e} exceeds p_e p_g = {:e}",
            coherence.norm_sqr(),
            pe * pg
        )));
    }
    let m = CMatrix::from_2x2([[c(pe, 0.0), coherence], [coherence.conj(), c(pg, 0.0)]]);
    let rho = DensityMatrix::new(m).map_err(|e| Error::OutsideValidity(e.to_string()))?;
    Ok(SteadyState { rho, bloch: [2.0 * coherence.re, -2.0 * coherence.im, z], coherence })
}

/// `L[o]` as a superoperator.
fn dissipator(o: &CMatrix) -> CMatrix {
    let od = o.dagger();
    let odo = &od * o;
    &(&sandwich(o, &od).scale(c(2.0, 0.0)) - &spre(&odo)) - &spost(&odo)
}

/// `Ls[o]` as a superoperator.
fn squeezer(o: &CMatrix) -> CMatrix {
    let o2 = o * o;
    &(&sandwich(o, o).scale(c(2.0, 0.0)) - &spre(&o2)) - &spost(&o2)
}

/// 4×4 generator of the master equation in column-stacking convention.
pub fn micromaser_liouvillian(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<CMatrix> {
    Ok(liouvillian_from(&coefficients(specs, r, tau)?))
}

pub fn liouvillian_from(k: &MicromaserCoefficients) -> CMatrix {
    let (sp, sm) = (ops::sigma_plus(), ops::sigma_minus());
    let h = &sp.scale(k.gamma1m) + &sm.scale(k.gamma2p);
    let unitary = (&spre(&h) - &spost(&h)).scale(-I);
    let mut l = unitary;
    l = &l + &dissipator(&sp).scale(c(k.gamma3p, 0.0));
    l = &l + &dissipator(&sm).scale(c(k.gamma4m, 0.0));
    l = &l + &squeezer(&sp).scale(k.gamma5m);
    l = &l + &squeezer(&sm).scale(k.gamma6p);
    l
}

/// Steady state of [`micromaser_liouvillian`] by null-space search.
pub fn numeric_steady_state(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<DensityMatrix> {
    crate::linalg::liouvillian_steady_state(&micromaser_liouvillian(specs, r, tau)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{simulate, CollisionSchedule, NoiseParams};
    use crate::states::{pauli_expectations, pure_state, state_from_bloch, BlochParams};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn spec(theta: f64, phi: f64, j: f64) -> ReservoirSpec {
        ReservoirSpec::new(theta, phi, j).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let k = coefficients(&[spec(0.0, 0.0, 0.01)], 0.2, 3.0).unwrap();
        assert_eq!(k.gamma1m.norm(), 0.0);
        assert_eq!(k.gamma2p.norm(), 0.0);
        assert!((k.gamma3p - 0.5 * 0.2 * 9.0 * 1e-4).abs() < 1e-18);
        assert_eq!(k.gamma4m, 0.0);

        let j = 0.01;
        let k = coefficients(&[spec(FRAC_PI_2, 0.0, j), spec(FRAC_PI_2, 0.0, j)], 0.2, 3.0).unwrap();
        let expected = 2.0 * 0.2 * 9.0 * j * j * 0.25;
        assert!((k.gamma5m - c(expected, 0.0)).norm() < 1e-18);
        assert_eq!(k.gamma6p, k.gamma5m.conj());

        assert!(coefficients(&[spec(0.0, 0.0, 0.01)], 0.0, 3.0).is_err());
        assert!(coefficients(&[spec(0.0, 0.0, 0.01)], 0.2, -3.0).is_err());
    }

    #[test]
    fn bloch_rhs_pumps_toward_reservoir() {
        // one collision per unit time: the short-time slope equals τ²J² per collision
        let (j, tau) = (0.01, 3.0);
        let k = coefficients(&[spec(0.0, 0.0, j)], 1.0, tau).unwrap();
        let d = bloch_rhs([0.0, 0.0, 0.0], &k);
        assert!((d[2] - tau * tau * j * j).abs() < 1e-15);
        assert!((d[2] - 2.0 * k.gamma3p).abs() < 1e-15);

        let sched = CollisionSchedule::regular(tau, 0.0, 1, 0).unwrap();
        let probe = state_from_bloch(0.0, 0.0, 0.0).unwrap();
        let tr = simulate(&probe, &[spec(0.0, 0.0, j)], &sched, NoiseParams::none()).unwrap();
        assert!((tr.last()[2] - d[2]).abs() < 1e-6);
    }

    #[test]
    fn bloch_rhs_zero_couplings() {
        let k = coefficients(&[spec(1.0, 2.0, 0.0), spec(0.3, 0.1, 0.0)], 0.2, 3.0).unwrap();
        assert_eq!(bloch_rhs([0.3, -0.2, 0.5], &k), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn bloch_rhs_vanishes_at_closed_form_for_poles() {
        let specs = [spec(0.0, 0.0, 0.00737), spec(PI, 0.0, 0.00263)];
        let ss = closed_form_steady_state(&specs, 0.2, 3.0).unwrap();
        let k = coefficients(&specs, 0.2, 3.0).unwrap().without_squeezing();
        let d = bloch_rhs(ss.bloch, &k);
        assert!(d.iter().all(|x| x.abs() <= 1e-10), "{d:?}");
    }

    #[test]
    fn bloch_rhs_residual_with_coherent_reservoirs() {
        // the coherent drive leaves dz = −4|γ₁|² z at the closed-form point
        let specs = [spec(1.0, 0.4, 0.01), spec(2.5, 2.0, 0.006)];
        let ss = closed_form_steady_state(&specs, 0.2, 3.0).unwrap();
        let k = coefficients(&specs, 0.2, 3.0).unwrap().without_squeezing();
        let d = bloch_rhs(ss.bloch, &k);
        let expected = -4.0 * k.gamma1m.norm_sqr() * ss.bloch[2];
        assert!((d[2] - expected).abs() < 1e-15 * (1.0 + expected.abs()), "{} vs {expected}", d[2]);
    }

    #[test]
    fn integrate_examples() {
        let k = coefficients(&[spec(1.0, 1.0, 0.0)], 0.2, 3.0).unwrap();
        let tr = integrate_bloch([0.1, 0.2, 0.3], &k, 100.0, 1.0).unwrap();
        assert!(tr.iter().all(|(_, v)| *v == [0.1, 0.2, 0.3]));

        let k = coefficients(&[spec(0.0, 0.0, 0.01)], 0.2, 3.0).unwrap();
        let tr = integrate_bloch([0.0, 0.0, -1.0], &k, 2e5, k.max_step()).unwrap();
        let v = tr.last().unwrap().1;
        assert!((v[2] - 1.0).abs() < 1e-6 && v[0].abs() < 1e-12 && v[1].abs() < 1e-12, "{v:?}");
        assert_eq!(tr.last().unwrap().0, 2e5);

        assert!(integrate_bloch([0.0; 3], &k, 10.0, 2.0 * k.max_step()).is_err());
        assert!(integrate_bloch([0.0; 3], &k, 10.0, 0.0).is_err());
    }

    #[test]
    fn integrate_matches_collisions_at_slot_times() {
        let (j, tau, tau0) = (0.01, 3.0, 2.0);
        let specs = [spec(0.0, 0.0, j), spec(PI, 0.0, 0.6 * j)];
        let sched = CollisionSchedule::regular(tau, tau0, 18000, 0).unwrap();
        let probe = pure_state(BlochParams::plus());
        let sim = simulate(&probe, &specs, &sched, NoiseParams::none()).unwrap();
        let k = coefficients(&specs, sched.rate(), tau).unwrap();
        let dt = sched.slot_time();
        let ode = integrate_bloch([1.0, 0.0, 0.0], &k, dt * 18000.0, dt).unwrap();
        let worst = (0..18000).map(|n| (sim.bloch[n][2] - ode[n + 1].1[2]).abs()).fold(0.0, f64::max);
        assert!(worst < 0.02, "max z deviation {worst}");
    }

    #[test]
    fn closed_form_examples() {
        let ss =
            closed_form_steady_state(&[spec(PI / 3.0, 0.0, 0.01), spec(2.0 * PI / 3.0, 0.0, 0.01)], 0.2, 3.0).unwrap();
        assert!(ss.bloch[2].abs() < 1e-15);

        let ss = closed_form_steady_state(&[spec(0.0, 0.0, 0.00737), spec(PI, 0.0, 0.00263)], 0.2, 3.0).unwrap();
        assert_eq!(format!("{:.4}", ss.bloch[2]), "0.7741");

        let xi: f64 = 3.0 * 0.2 * 0.01 / 2.0;
        assert!((xi - 0.003).abs() < 1e-15);
        for &(theta, phi) in &[(0.4, 0.0), (1.2, 2.0), (2.9, 5.5)] {
            let ss = closed_form_steady_state(&[spec(theta, phi, 0.01)], 0.2, 3.0).unwrap();
            let expected = I * Complex64::from_polar(xi * theta.sin() * theta.cos(), -phi);
            assert!((ss.coherence - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn closed_form_rejects_invalid_regimes() {
        assert!(closed_form_steady_state(&[spec(0.0, 0.0, 0.0)], 0.2, 3.0).is_err());
        // ξ = 1.5 pushes |C| past the population bound
        let err = closed_form_steady_state(&[spec(PI / 4.0, 0.0, 5.0)], 0.2, 3.0).unwrap_err();
        assert!(matches!(err, Error::OutsideValidity(_)));
    }

    #[test]
    fn liouvillian_examples() {
        let l = micromaser_liouvillian(&[spec(0.7, 0.2, 0.0), spec(2.0, 1.0, 0.0)], 0.2, 3.0).unwrap();
        assert_eq!(l.max_abs(), 0.0);

        let rho = numeric_steady_state(&[spec(0.0, 0.0, 0.01)], 0.2, 3.0).unwrap();
        assert!(rho.matrix().max_abs_diff(&CMatrix::from_diag(&[c(1.0, 0.0), c(0.0, 0.0)])) < 1e-9);
    }

    #[test]
    fn liouvillian_matches_closed_form_for_poles() {
        let specs = [spec(0.0, 0.0, 0.00737), spec(PI, 0.0, 0.00263)];
        let num = numeric_steady_state(&specs, 0.2, 3.0).unwrap();
        let cf = closed_form_steady_state(&specs, 0.2, 3.0).unwrap();
        assert!(num.matrix().max_abs_diff(cf.rho.matrix()) < 1e-9);
    }

    #[test]
    fn liouvillian_is_trace_preserving_and_hermiticity_preserving() {
        let specs = [spec(1.0, 0.4, 0.01), spec(2.5, 2.0, 0.006), spec(0.3, 4.0, 0.004)];
        let l = micromaser_liouvillian(&specs, 0.2, 3.0).unwrap();
        // Tr(L ρ) = 0: rows 0 and 3 of the stacked generator sum to zero column-wise
        for col in 0..4 {
            assert!((l[(0, col)] + l[(3, col)]).norm() < 1e-18);
        }
        let rho = pure_state(BlochParams::new(0.8, 1.3).unwrap()).into_matrix();
        let d = CMatrix::unvectorize(&l.apply(&rho.vectorize()).unwrap(), 2).unwrap();
        assert!(d.hermiticity_error() < 1e-18);
    }

    fn spec_strategy() -> impl Strategy<Value = Vec<ReservoirSpec>> {
        prop::collection::vec((0.0..=PI, 0.0..TAU, 0.001..0.02f64), 1..=4)
            .prop_map(|v| v.into_iter().map(|(t, p, j)| spec(t, p, j)).collect())
    }

    proptest! {
        #[test]
        fn bloch_rhs_equals_liouvillian_action(specs in spec_strategy(), x in -0.5..0.5f64, y in -0.5..0.5f64, z in -0.7..0.7f64) {
            let k = coefficients(&specs, 0.2, 3.0).unwrap();
            let rho = state_from_bloch(x, y, z).unwrap();
            let d = CMatrix::unvectorize(&liouvillian_from(&k).apply(&rho.matrix().vectorize()).unwrap(), 2).unwrap();
            let (dx, dy, dz) = (2.0 * d[(0, 1)].re, -2.0 * d[(0, 1)].im, (d[(0, 0)] - d[(1, 1)]).re);
            let rhs = bloch_rhs([x, y, z], &k);
            prop_assert!((rhs[0] - dx).abs() < 1e-15);
            prop_assert!((rhs[1] - dy).abs() < 1e-15);
            prop_assert!((rhs[2] - dz).abs() < 1e-15);
        }

        #[test]
        fn coefficient_identities(specs in spec_strategy(), r in 0.01..1.0f64, tau in 0.1..5.0f64) {
            let k = coefficients(&specs, r, tau).unwrap();
            prop_assert_eq!(k.gamma2p, k.gamma1m.conj());
            prop_assert_eq!(k.gamma6p, k.gamma5m.conj());
            let total = 0.5 * r * tau * tau * specs.iter().map(|s| s.coupling * s.coupling).sum::<f64>();
            prop_assert!((k.gamma3p + k.gamma4m - total).abs() < 1e-12);
        }

        #[test]
        fn steady_sz_is_a_convex_combination(specs in spec_strategy()) {
            let z = steady_sz(&specs).unwrap();
            let lo = specs.iter().map(|s| s.theta().cos()).fold(f64::INFINITY, f64::min);
            let hi = specs.iter().map(|s| s.theta().cos()).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(z >= lo - 1e-12 && z <= hi + 1e-12);
        }

        #[test]
        fn steady_sz_is_scale_invariant(specs in spec_strategy(), scale in 0.5..2.0f64) {
            let scaled: Vec<_> = specs.iter().map(|s| ReservoirSpec { coupling: s.coupling * scale, ..*s }).collect();
            prop_assert!((steady_sz(&specs).unwrap() - steady_sz(&scaled).unwrap()).abs() < 1e-14);
        }

        #[test]
        fn coherence_vanishes_at_poles(poles in prop::collection::vec((prop::bool::ANY, 0.0..TAU, 0.001..0.02f64), 1..=4)) {
            let specs: Vec<_> = poles.into_iter().map(|(up, p, j)| spec(if up { 0.0 } else { PI }, p, j)).collect();
            prop_assert!(steady_coherence(&specs, 0.2, 3.0).unwrap().norm() < 1e-15);
        }

        #[test]
        fn sy_matches_direct_sum(specs in spec_strategy()) {
            let (r, tau) = (0.2, 3.0);
            let ss = closed_form_steady_state(&specs, r, tau).unwrap();
            let sum_j2: f64 = specs.iter().map(|s| s.coupling * s.coupling).sum();
            let mut direct = 0.0;
            for a in &specs {
                for b in &specs {
                    direct += a.coupling * a.theta().sin() * a.phi().cos() * b.coupling * b.coupling * b.theta().cos();
                }
            }
            direct *= -r * tau / sum_j2;
            prop_assert!((ss.bloch[1] - direct).abs() < 1e-12);
            let (_, y, _) = pauli_expectations(&ss.rho).unwrap();
            prop_assert!((y - direct).abs() < 1e-12);
        }
    }
}
