//! Repeated-collision simulator.
//!
//! Each successful slot attaches one fresh ancilla per reservoir, evolves the
//! joint register with the exact exchange unitary for a time `τ`, and traces
//! the ancillas out. The probe then decays freely for the idle time `τ₀`
//! (or for the whole slot `τ + τ₀` when no collision happened).
//!
//! The per-collision map is linear in the probe state, so it is tabulated
//! once as a 4×4 superoperator and reused for every slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, herm_unitary, kron, ops, CMatrix, DensityMatrix, Physicality, ONE, ZERO};
use crate::states::{bloch_of, pure_state, BlochParams};

pub const MAX_RESERVOIRS: usize = 4;

/// One information reservoir: the Bloch angles of its units and the
/// coupling `J ≥ 0` of each unit to the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirSpec {
    pub params: BlochParams,
    pub coupling: f64,
}

impl ReservoirSpec {
    pub fn new(theta: f64, phi: f64, coupling: f64) -> Result<Self> {
        if !coupling.is_finite() || coupling < 0.0 {
            return Err(invalid(format!("coupling must be finite and >= 0, got {coupling}")));
        }
        Ok(Self { params: BlochParams::new(theta, phi)?, coupling })
    }

    pub fn theta(&self) -> f64 {
        self.params.theta()
    }

    pub fn phi(&self) -> f64 {
        self.params.phi()
    }
}

pub(crate) fn check_specs(specs: &[ReservoirSpec]) -> Result<()> {
    if specs.is_empty() || specs.len() > MAX_RESERVOIRS {
        return Err(invalid(format!("need 1 to {MAX_RESERVOIRS} reservoirs, got {}", specs.len())));
    }
    if let Some(s) = specs.iter().find(|s| !s.coupling.is_finite() || s.coupling < 0.0) {
        return Err(invalid(format!("coupling must be finite and >= 0, got {}", s.coupling)));
    }
    if specs.iter().all(|s| s.coupling == 0.0) {
        return Err(invalid("at least one reservoir needs a positive coupling"));
    }
    Ok(())
}

/// Probe noise rates. The generator is
/// `Γθ(2σ⁻ρσ⁺ − {σ⁺σ⁻, ρ}) + Γφ(2σ_zρσ_z − 2ρ)`, so the excited population
/// decays as `e^{−2Γθ t}` and the coherence as `e^{−(Γθ + 4Γφ) t}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseParams {
    pub gamma_theta: f64,
    pub gamma_phi: f64,
}

impl NoiseParams {
    pub fn new(gamma_theta: f64, gamma_phi: f64) -> Result<Self> {
        for (name, g) in [("gamma_theta", gamma_theta), ("gamma_phi", gamma_phi)] {
            if !g.is_finite() || g < 0.0 {
                return Err(invalid(format!("{name} must be finite and >= 0, got {g}")));
            }
        }
        Ok(Self { gamma_theta, gamma_phi })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.gamma_theta == 0.0 && self.gamma_phi == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticsMode {
    /// Every slot holds a collision.
    Regular,
    /// Each slot holds a collision with probability `p`.
    Stochastic,
}

impl std::str::FromStr for StatisticsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Self::Regular),
            "stochastic" => Ok(Self::Stochastic),
            other => Err(invalid(format!("unknown statistics mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for StatisticsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Regular => "regular",
            Self::Stochastic => "stochastic",
        })
    }
}

/// Slot layout of a run. A slot lasts `τ + τ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionSchedule {
    pub tau: f64,
    pub tau0: f64,
    pub p: f64,
    pub slots: usize,
    pub seed: u64,
    pub mode: StatisticsMode,
}

impl CollisionSchedule {
    pub fn regular(tau: f64, tau0: f64, slots: usize, seed: u64) -> Result<Self> {
        let s = Self { tau, tau0, p: 1.0, slots, seed, mode: StatisticsMode::Regular };
        s.validate()?;
        Ok(s)
    }

    pub fn stochastic(tau: f64, tau0: f64, p: f64, slots: usize, seed: u64) -> Result<Self> {
        let s = Self { tau, tau0, p, slots, seed, mode: StatisticsMode::Stochastic };
        s.validate()?;
        Ok(s)
    }

    /// Derives the slot layout from a mean collision number `k_mean`, an
    /// interaction time `tau` and a total time `total_time`.
    ///
    /// Regular mode uses `k_mean` slots of length `T/⟨k⟩`, so
    /// `τ₀ = T/⟨k⟩ − τ`. Stochastic mode uses `⌊T/τ⌋` slots of length `τ`
    /// with success probability `p = ⟨k⟩τ/T`.
    pub fn from_budget(k_mean: f64, tau: f64, total_time: f64, mode: StatisticsMode, seed: u64) -> Result<Self> {
        if !(k_mean >= 1.0) || !k_mean.is_finite() {
            return Err(invalid(format!("mean collision number must be >= 1, got {k_mean}")));
        }
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(invalid(format!("total time must be positive, got {total_time}")));
        }
        check_tau(tau)?;
        let p = success_probability(k_mean, tau, total_time)?;
        match mode {
            StatisticsMode::Regular => {
                let tau0 = (total_time / k_mean - tau).max(0.0);
                Self::regular(tau, tau0, k_mean.round() as usize, seed)
            }
            StatisticsMode::Stochastic => {
                let slots = (total_time / tau).floor() as usize;
                Self::stochastic(tau, 0.0, p, slots, seed)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if !(self.tau0 >= 0.0) || !self.tau0.is_finite() {
            return Err(invalid(format!("idle time tau0 must be >= 0, got {}", self.tau0)));
        }
        if self.slots == 0 {
            return Err(invalid("slot count must be positive"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid(format!("success probability p = {} outside (0, 1]", self.p)));
        }
        if self.mode == StatisticsMode::Regular && self.p != 1.0 {
            return Err(invalid("regular statistics require p = 1"));
        }
        Ok(())
    }

    /// Slot duration `τ + τ₀`.
    pub fn slot_time(&self) -> f64 {
        self.tau + self.tau0
    }

    /// Expected number of collisions `p·K`.
    pub fn k_mean(&self) -> f64 {
        self.p * self.slots as f64
    }

    /// Mean collision rate `p / (τ + τ₀)`.
    pub fn rate(&self) -> f64 {
        self.p / self.slot_time()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("interaction time tau must be positive, got {tau}")));
    }
    Ok(())
}

/// `p = ⟨k⟩τ/T`, rejected above 1.
pub fn success_probability(k_mean: f64, tau: f64, total_time: f64) -> Result<f64> {
    let p = k_mean * tau / total_time;
    if p > 1.0 {
        return Err(invalid(format!("probability of success p = <k>tau/T = {p} exceeds 1")));
    }
    Ok(p)
}

/// `Σ_i J_i (σ₀⁺σ_i⁻ + σ₀⁻σ_i⁺)` on the register `(probe, reservoir 1..N)`.
pub fn build_interaction_hamiltonian(specs: &[ReservoirSpec]) -> Result<CMatrix> {
    if specs.is_empty() || specs.len() > MAX_RESERVOIRS {
        return Err(invalid(format!("need 1 to {MAX_RESERVOIRS} reservoirs, got {}", specs.len())));
    }
    let n = specs.len() + 1;
    let sp0 = ops::embed(&ops::sigma_plus(), 0, n);
    let sm0 = ops::embed(&ops::sigma_minus(), 0, n);
    let mut h = CMatrix::zeros(1 << n, 1 << n);
    for (i, s) in specs.iter().enumerate() {
        let spi = ops::embed(&ops::sigma_plus(), i + 1, n);
        let smi = ops::embed(&ops::sigma_minus(), i + 1, n);
        let term = &(&sp0 * &smi) + &(&sm0 * &spi);
        h = &h + &term.scale(c(s.coupling, 0.0));
    }
    Ok(h)
}

/// Precomputed pieces of one collision: the joint unitary and the product
/// state of the fresh ancillas.
struct Collider {
    u: CMatrix,
    u_dag: CMatrix,
    ancillas: CMatrix,
}

impl Collider {
    fn new(specs: &[ReservoirSpec], tau: f64) -> Result<Self> {
        let h = build_interaction_hamiltonian(specs)?;
        let u = herm_unitary(&h, tau)?;
        let mut ancillas = pure_state(specs[0].params).into_matrix();
        for s in &specs[1..] {
            ancillas = kron(&ancillas, pure_state(s.params).matrix());
        }
        Ok(Self { u_dag: u.dagger(), u, ancillas })
    }

    /// Joint state after the unitary.
    fn evolve_joint(&self, probe: &CMatrix) -> CMatrix {
        let joint = kron(probe, &self.ancillas);
        &(&self.u * &joint) * &self.u_dag
    }

    fn apply(&self, probe: &CMatrix) -> CMatrix {
        trace_out_ancillas(&self.evolve_joint(probe), self.ancillas.rows())
    }
}

fn trace_out_ancillas(joint: &CMatrix, d: usize) -> CMatrix {
    let mut out = CMatrix::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            out[(a, b)] = (0..d).map(|k| joint[(a * d + k, b * d + k)]).sum();
        }
    }
    out
}

/// One simultaneous collision of the probe with a fresh unit of every
/// reservoir.
pub fn collide_once(probe: &DensityMatrix, specs: &[ReservoirSpec], tau: f64) -> Result<DensityMatrix> {
    check_probe(probe)?;
    check_tau(tau)?;
    let collider = Collider::new(specs, tau)?;
    DensityMatrix::new(collider.apply(probe.matrix()))
}

fn check_probe(probe: &DensityMatrix) -> Result<()> {
    if probe.dim() != 2 {
        return Err(invalid(format!("probe must be a single qubit, got dimension {}", probe.dim())));
    }
    Ok(())
}

/// The collision map tabulated as a 4×4 superoperator (column stacking).
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionChannel {
    superop: CMatrix,
}

impl CollisionChannel {
    pub fn new(specs: &[ReservoirSpec], tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let collider = Collider::new(specs, tau)?;
        let mut superop = CMatrix::zeros(4, 4);
        for j in 0..2 {
            for i in 0..2 {
                let mut unit = CMatrix::zeros(2, 2);
                unit[(i, j)] = ONE;
                let image = collider.apply(&unit).vectorize();
                for (row, v) in image.into_iter().enumerate() {
                    superop[(row, i + 2 * j)] = v;
                }
            }
        }
        Ok(Self { superop })
    }

    pub fn superoperator(&self) -> &CMatrix {
        &self.superop
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = self.superop.apply(&rho.vectorize()).expect("4x4 channel on a 2x2 state");
        CMatrix::unvectorize(&v, 2).expect("length 4")
    }
}

/// Free decay of the probe for `duration` under [`NoiseParams`].
pub fn decay_step(probe: &DensityMatrix, noise: NoiseParams, duration: f64) -> Result<DensityMatrix> {
    check_probe(probe)?;
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(invalid(format!("duration must be >= 0, got {duration}")));
    }
    NoiseParams::new(noise.gamma_theta, noise.gamma_phi)?;
    DensityMatrix::new(decay_matrix(probe.matrix(), noise, duration))
}

fn decay_matrix(m: &CMatrix, noise: NoiseParams, t: f64) -> CMatrix {
    if t == 0.0 || noise.is_zero() {
        return m.clone();
    }
    let pop = (-2.0 * noise.gamma_theta * t).exp();
    let coh = (-(noise.gamma_theta + 4.0 * noise.gamma_phi) * t).exp();
    let pe = m[(0, 0)] * pop;
    let off = m[(0, 1)] * coh;
    let off_dn = m[(1, 0)] * coh;
    let trace = m[(0, 0)] + m[(1, 1)];
    CMatrix::from_2x2([[pe, off], [off_dn, trace - pe]])
}

/// Per-slot collision outcomes. Regular schedules collide every slot;
/// stochastic ones draw `K` independent Bernoulli(`p`) trials.
pub fn sample_schedule(schedule: &CollisionSchedule) -> Result<Vec<bool>> {
    schedule.validate()?;
    if schedule.mode == StatisticsMode::Regular {
        return Ok(vec![true; schedule.slots]);
    }
    let mut rng = stream(schedule.seed, SCHEDULE_STREAM);
    Ok((0..schedule.slots).map(|_| rng.random::<f64>() < schedule.p).collect())
}

const SCHEDULE_STREAM: u64 = 0;
const MIXTURE_STREAM: u64 = 1;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// How a successful slot uses several reservoirs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionMode {
    /// One fresh unit from every reservoir, joint unitary.
    #[default]
    Simultaneous,
    /// One reservoir per slot, drawn with probability `J_i / ΣJ`.
    Mixture,
}

impl std::str::FromStr for CollisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simultaneous" => Ok(Self::Simultaneous),
            "mixture" => Ok(Self::Mixture),
            other => Err(invalid(format!("unknown collision mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for CollisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Simultaneous => "simultaneous",
            Self::Mixture => "mixture",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// Tail length for the steady-state estimate (capped at `K/2`).
    pub window: usize,
    /// Convergence tolerance on the tail spread.
    pub tol: f64,
    pub mode: CollisionMode,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { window: 1000, tol: 0.01, mode: CollisionMode::Simultaneous }
    }
}

/// Probe history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// End time of each slot.
    pub slot_times: Vec<f64>,
    /// Bloch vector after each slot.
    pub bloch: Vec<[f64; 3]>,
    pub collided: Vec<bool>,
    /// Tail-averaged Bloch vector.
    pub steady: [f64; 3],
    pub converged: bool,
    /// Worst Hermiticity, trace and positivity deviation over all slots.
    pub physicality: Physicality,
    /// Final probe state.
    pub final_state: CMatrix,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.bloch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bloch.is_empty()
    }

    pub fn last(&self) -> [f64; 3] {
        *self.bloch.last().expect("nonempty trajectory")
    }

    pub fn collisions(&self) -> usize {
        self.collided.iter().filter(|&&b| b).count()
    }
}

pub fn simulate(
    probe0: &DensityMatrix,
    specs: &[ReservoirSpec],
    schedule: &CollisionSchedule,
    noise: NoiseParams,
) -> Result<TrajectoryRecord> {
    simulate_with(probe0, specs, schedule, noise, &SimulationOptions::default())
}

pub fn simulate_with(
    probe0: &DensityMatrix,
    specs: &[ReservoirSpec],
    schedule: &CollisionSchedule,
    noise: NoiseParams,
    opts: &SimulationOptions,
) -> Result<TrajectoryRecord> {
    check_probe(probe0)?;
    check_specs(specs)?;
    NoiseParams::new(noise.gamma_theta, noise.gamma_phi)?;
    let collided = sample_schedule(schedule)?;

    let channels: Vec<CollisionChannel> = match opts.mode {
        CollisionMode::Simultaneous => vec![CollisionChannel::new(specs, schedule.tau)?],
        CollisionMode::Mixture => {
            specs.iter().map(|s| CollisionChannel::new(std::slice::from_ref(s), schedule.tau)).collect::<Result<_>>()?
        }
    };
    let total_j: f64 = specs.iter().map(|s| s.coupling).sum();
    let mut picker = stream(schedule.seed, MIXTURE_STREAM);

    let k = schedule.slots;
    let mut rho = probe0.matrix().clone();
    let mut bloch = Vec::with_capacity(k);
    let mut slot_times = Vec::with_capacity(k);
    let mut physicality = Physicality::of(&rho);
    for (n, &hit) in collided.iter().enumerate() {
        if hit {
            let channel = match opts.mode {
                CollisionMode::Simultaneous => &channels[0],
                CollisionMode::Mixture => &channels[pick(&mut picker, specs, total_j)],
            };
            rho = channel.apply(&rho);
            rho = decay_matrix(&rho, noise, schedule.tau0);
        } else {
            rho = decay_matrix(&rho, noise, schedule.slot_time());
        }
        let report = Physicality::of(&rho);
        debug_assert!(report.is_valid(), "unphysical probe at slot {n}: {report:?}");
        physicality = physicality.merge(report);
        let (x, y, z) = bloch_of(&rho);
        bloch.push([x, y, z]);
        slot_times.push((n + 1) as f64 * schedule.slot_time());
    }

    let window = opts.window.clamp(1, (k / 2).max(1));
    let (steady, converged) = steady_state_estimate(&bloch, window, opts.tol)?;
    Ok(TrajectoryRecord { slot_times, bloch, collided, steady, converged, physicality, final_state: rho })
}

fn pick(rng: &mut ChaCha8Rng, specs: &[ReservoirSpec], total: f64) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, s) in specs.iter().enumerate() {
        acc += s.coupling;
        if u < acc {
            return i;
        }
    }
    specs.iter().rposition(|s| s.coupling > 0.0).expect("a positive coupling")
}

/// Mean of the last `window` Bloch vectors, and whether the largest
/// per-component spread (max − min) inside the window is at most `tol`.
pub fn steady_state_estimate(bloch: &[[f64; 3]], window: usize, tol: f64) -> Result<([f64; 3], bool)> {
    if bloch.is_empty() {
        return Err(invalid("empty trajectory"));
    }
    if window == 0 || (bloch.len() > 1 && window > bloch.len() / 2) {
        return Err(invalid(format!("window {window} must be in 1..={}", (bloch.len() / 2).max(1))));
    }
    let tail = &bloch[bloch.len() - window..];
    let mut mean = [0.0; 3];
    let mut spread = 0.0_f64;
    for comp in 0..3 {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in tail {
            lo = lo.min(v[comp]);
            hi = hi.max(v[comp]);
            sum += v[comp];
        }
        mean[comp] = sum / window as f64;
        spread = spread.max(hi - lo);
    }
    Ok((mean, spread <= tol))
}

/// Steady probe state predicted by `simulate` without sampling: the fixed
/// point of one regular slot (collision, then idle decay).
pub fn regular_fixed_point(specs: &[ReservoirSpec], tau: f64, tau0: f64, noise: NoiseParams) -> Result<DensityMatrix> {
    check_specs(specs)?;
    let channel = CollisionChannel::new(specs, tau)?;
    // slot map S = D ∘ C; fixed point solves (S − 1) vec ρ = 0
    let mut s = CMatrix::zeros(4, 4);
    for col in 0..4 {
        let mut e = vec![ZERO; 4];
        e[col] = ONE;
        let m = CMatrix::unvectorize(&e, 2)?;
        let out = decay_matrix(&channel.apply(&m), noise, tau0).vectorize();
        for (row, v) in out.into_iter().enumerate() {
            s[(row, col)] = v;
        }
    }
    let generator = &s - &CMatrix::identity(4);
    crate::linalg::liouvillian_steady_state(&generator)
}

/// `Tr[(Σ σ_z) ρ]` over all qubits of a register.
pub fn total_excitation(joint: &CMatrix) -> f64 {
    let n = joint.rows().trailing_zeros() as usize;
    (0..joint.rows())
        .map(|k| {
            // a zero bit is |e⟩ (σ_z = +1)
            let excited = (0..n).filter(|b| (k >> (n - 1 - b)) & 1 == 0).count() as f64;
            (2.0 * excited - n as f64) * joint[(k, k)].re
        })
        .sum()
}

#[doc(hidden)]
pub fn joint_before_after(probe: &DensityMatrix, specs: &[ReservoirSpec], tau: f64) -> Result<(CMatrix, CMatrix)> {
    let collider = Collider::new(specs, tau)?;
    let before = kron(probe.matrix(), &collider.ancillas);
    Ok((before, collider.evolve_joint(probe.matrix())))
}
