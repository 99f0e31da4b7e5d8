//! Cat-code error correction over the lossy surface channel.
//!
//! Trajectories unravel pure loss into no-jump decay and single-photon jumps.
//! Parity is checked on a schedule and recovery is applied only at read-out.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{propagate_eta, ChannelSpec};
use crate::coupling::{code_superposition, excite_code, CoherentMixture, CoherentSuperposition, CouplerSpec};
use crate::error::{Error, Result};
use crate::qstate::{
    annihilation, coherent_tail_mass, minimal_truncation_dimension, number, truncation_dimension, Operator,
    StateVector,
};

/// Per-step jump probability used to pick the default micro-step.
pub const TARGET_STEP_PROBABILITY: f64 = 0.01;
/// User micro-steps must keep the initial jump probability below this.
pub const MAX_STEP_PROBABILITY: f64 = 0.05;
pub const DEFAULT_TRAJECTORIES: usize = 10_000;
/// Recovery projections below this norm are flagged as inconsistent.
pub const RECOVERY_WARNING_NORM: f64 = 0.5;
pub const ORTHOGONALITY_BOUND: f64 = 1e-2;
const PARITY_FLOOR: f64 = 1e-14;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeWord {
    ZeroPlus,
    ZeroMinus,
    OnePlus,
    OneMinus,
}

impl CodeWord {
    pub fn is_even(self) -> bool {
        matches!(self, CodeWord::ZeroPlus | CodeWord::OnePlus)
    }

    pub fn is_one(self) -> bool {
        matches!(self, CodeWord::OnePlus | CodeWord::OneMinus)
    }

    /// Same logical value, opposite parity.
    pub fn flipped(self) -> Self {
        match self {
            CodeWord::ZeroPlus => CodeWord::ZeroMinus,
            CodeWord::ZeroMinus => CodeWord::ZeroPlus,
            CodeWord::OnePlus => CodeWord::OneMinus,
            CodeWord::OneMinus => CodeWord::OnePlus,
        }
    }
}

/// Four-component cat code on `{+-alpha, +-i alpha}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatCode {
    alpha: Complex64,
    dim: usize,
}

impl CatCode {
    pub fn new(alpha: Complex64, dim: usize) -> Result<Self> {
        if !(alpha.norm() > 0.0) || !alpha.norm().is_finite() {
            return Err(Error::invalid("alpha", "must be finite and non-zero"));
        }
        let need = minimal_truncation_dimension(alpha);
        if dim < need {
            return Err(Error::TruncationTooSmall { dim, norm: 1.0 - coherent_tail_mass(alpha, dim) });
        }
        Ok(Self { alpha, dim })
    }

    pub fn with_default_dim(alpha: Complex64) -> Result<Self> {
        Self::new(alpha, truncation_dimension(alpha))
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `2(1 + e^{-2|alpha|^2})`.
    pub fn n_plus(&self) -> f64 {
        2.0 * (1.0 + (-2.0 * self.alpha.norm_sqr()).exp())
    }

    /// `2(1 - e^{-2|alpha|^2})`.
    pub fn n_minus(&self) -> f64 {
        2.0 * (1.0 - (-2.0 * self.alpha.norm_sqr()).exp())
    }

    pub fn word(&self, w: CodeWord) -> CoherentSuperposition {
        let a = if w.is_one() { Complex64::i() * self.alpha } else { self.alpha };
        let (n, s) = if w.is_even() { (self.n_plus(), 1.0) } else { (self.n_minus(), -1.0) };
        let k = 1.0 / n.sqrt();
        CoherentSuperposition::new(vec![(c(k, 0.0), a), (c(s * k, 0.0), -a)])
    }

    pub fn state(&self, w: CodeWord) -> StateVector {
        self.word(w).to_state(self.dim)
    }

    /// `c0 |0+> + c1 |1+>`, normalized exactly.
    pub fn logical(&self, c0: Complex64, c1: Complex64) -> Result<CoherentSuperposition> {
        code_superposition(c0, c1, self.alpha)
    }

    /// Same code at a different amplitude.
    pub fn at(&self, alpha: Complex64) -> Result<Self> {
        Self::new(alpha, self.dim)
    }

    /// `max(|<0+|1+>|, |<0-|1->|)`.
    pub fn orthogonality(&self) -> f64 {
        let p = self.word(CodeWord::ZeroPlus).inner(&self.word(CodeWord::OnePlus)).norm();
        let m = self.word(CodeWord::ZeroMinus).inner(&self.word(CodeWord::OneMinus)).norm();
        p.max(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeStates {
    pub zero_plus: StateVector,
    pub zero_minus: StateVector,
    pub one_plus: StateVector,
    pub one_minus: StateVector,
}

pub fn code_states(code: &CatCode) -> CodeStates {
    CodeStates {
        zero_plus: code.state(CodeWord::ZeroPlus),
        zero_minus: code.state(CodeWord::ZeroMinus),
        one_plus: code.state(CodeWord::OnePlus),
        one_minus: code.state(CodeWord::OneMinus),
    }
}

/// Analytic `a|w> = coefficient |w'>`; logical one carries the extra factor `i`.
pub fn apply_annihilation(code: &CatCode, w: CodeWord) -> (Complex64, CodeWord) {
    let ratio = if w.is_even() { code.n_minus() / code.n_plus() } else { code.n_plus() / code.n_minus() };
    let mut coef = code.alpha * ratio.sqrt();
    if w.is_one() {
        coef *= Complex64::i();
    }
    (coef, w.flipped())
}

fn lower(v: &DVector<Complex64>) -> DVector<Complex64> {
    let d = v.len();
    DVector::from_fn(d, |n, _| if n + 1 < d { v[n + 1] * ((n + 1) as f64).sqrt() } else { c(0.0, 0.0) })
}

fn mean_n(v: &DVector<Complex64>) -> f64 {
    v.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
}

/// `e^{-(gamma dt/2) n} |psi>` renormalized, with the squared norm before renormalization.
pub fn no_jump(state: &StateVector, gamma_dt: f64) -> Result<(StateVector, f64)> {
    if !(gamma_dt >= 0.0) {
        return Err(Error::invalid("gamma_dt", "must be non-negative"));
    }
    let v = state.amplitudes();
    let out = DVector::from_fn(v.len(), |n, _| v[n] * (-0.5 * gamma_dt * n as f64).exp());
    let norm = out.norm();
    if !(norm > 0.0) {
        return Err(Error::invalid("state", "no-jump evolution annihilated the state"));
    }
    Ok((StateVector::from_amplitudes(out / c(norm, 0.0)), norm * norm))
}

/// First-order Kraus pair `E0 = sqrt(gamma dt) a`, `E1 = 1 - (gamma dt/2) n`.
pub fn kraus_pair(gamma_dt: f64, dim: usize) -> (Operator, Operator) {
    let e0 = annihilation(dim) * c(gamma_dt.sqrt(), 0.0);
    let e1 = Operator::identity(dim, dim) - number(dim) * c(0.5 * gamma_dt, 0.0);
    (e0, e1)
}

/// Operator norm of `E0^dag E0 + E1^dag E1 - I`.
pub fn completeness_residual(gamma_dt: f64, dim: usize) -> f64 {
    let (e0, e1) = kraus_pair(gamma_dt, dim);
    let r = e0.adjoint() * &e0 + e1.adjoint() * &e1 - Operator::identity(dim, dim);
    let h = (&r + r.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn parity_weights(v: &DVector<Complex64>) -> (f64, f64) {
    let mut even = 0.0;
    let mut odd = 0.0;
    for (n, a) in v.iter().enumerate() {
        if n % 2 == 0 {
            even += a.norm_sqr();
        } else {
            odd += a.norm_sqr();
        }
    }
    (even, odd)
}

fn check_parity<R: Rng + ?Sized>(v: &mut DVector<Complex64>, rng: &mut R) -> Result<i8> {
    let (even, odd) = parity_weights(v);
    if even < PARITY_FLOOR && odd < PARITY_FLOOR {
        return Err(Error::ParityUndefined);
    }
    let outcome: i8 = if rng.random::<f64>() * (even + odd) < even { 1 } else { -1 };
    let keep = if outcome == 1 { 0 } else { 1 };
    for (n, a) in v.iter_mut().enumerate() {
        if n % 2 != keep {
            *a = c(0.0, 0.0);
        }
    }
    let norm = v.norm();
    *v /= c(norm, 0.0);
    Ok(outcome)
}

/// Born-rule parity measurement; returns the outcome and the projected, renormalized state.
pub fn parity_check<R: Rng + ?Sized>(state: &StateVector, rng: &mut R) -> Result<(i8, StateVector)> {
    let mut v = state.amplitudes().clone();
    let o = check_parity(&mut v, rng)?;
    Ok((o, StateVector::from_amplitudes(v)))
}

/// End-of-line correction for a code at amplitude `alpha'`.
///
/// With `k` parity flips the state is read in the code words of parity `(-1)^k`
/// (oblique projection through the 2x2 Gram matrix), moved to the even words,
/// and logical one is multiplied by `i^{-k}`.
#[derive(Debug, Clone)]
pub struct Recovery {
    code: CatCode,
    words: [[CoherentSuperposition; 2]; 2],
    fock: [[DVector<Complex64>; 2]; 2],
    gram_inv: [Matrix2<Complex64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    pub state: StateVector,
    pub projection_norm: f64,
    pub consistent: bool,
}

fn i_pow(k: i64) -> Complex64 {
    [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)][k.rem_euclid(4) as usize]
}

impl Recovery {
    pub fn new(code: CatCode) -> Result<Self> {
        let words = [
            [code.word(CodeWord::ZeroPlus), code.word(CodeWord::OnePlus)],
            [code.word(CodeWord::ZeroMinus), code.word(CodeWord::OneMinus)],
        ];
        let fock = [
            [words[0][0].to_state(code.dim).amplitudes().clone(), words[0][1].to_state(code.dim).amplitudes().clone()],
            [words[1][0].to_state(code.dim).amplitudes().clone(), words[1][1].to_state(code.dim).amplitudes().clone()],
        ];
        let mut gram_inv = [Matrix2::zeros(); 2];
        for (s, w) in words.iter().enumerate() {
            let g = Matrix2::new(w[0].inner(&w[0]), w[0].inner(&w[1]), w[1].inner(&w[0]), w[1].inner(&w[1]));
            gram_inv[s] = g.try_inverse().ok_or_else(|| Error::invalid("alpha", "code words are linearly dependent"))?;
        }
        Ok(Self { code, words, fock, gram_inv })
    }

    pub fn code(&self) -> &CatCode {
        &self.code
    }

    fn coefficients(&self, v: &DVector<Complex64>, sector: usize) -> Vector2<Complex64> {
        let s = Vector2::new(self.fock[sector][0].dotc(v), self.fock[sector][1].dotc(v));
        self.gram_inv[sector] * s
    }

    pub fn apply(&self, state: &StateVector, flips: usize) -> Result<RecoveryOutcome> {
        if state.dim() != self.code.dim {
            return Err(Error::DimensionMismatch { expected: self.code.dim, found: state.dim() });
        }
        let sector = flips % 2;
        let d = self.coefficients(state.amplitudes(), sector);
        let w = &self.fock[sector];
        let projection_norm = (&w[0] * d[0] + &w[1] * d[1]).norm();
        let phase = i_pow(-(flips as i64));
        let out = &self.fock[0][0] * d[0] + &self.fock[0][1] * (d[1] * phase);
        Ok(RecoveryOutcome {
            state: StateVector::from_amplitudes(out),
            projection_norm,
            consistent: projection_norm >= RECOVERY_WARNING_NORM,
        })
    }

    /// `R_k^dag |reference>` as a coherent superposition, so `<ref|R_k psi> = <u|psi>`.
    pub fn adjoint_on(&self, reference: &CoherentSuperposition, flips: usize) -> CoherentSuperposition {
        let sector = flips % 2;
        let phase = [c(1.0, 0.0), i_pow(-(flips as i64))];
        let t = Vector2::new(
            phase[0] * reference.inner(&self.words[0][0]),
            phase[1] * reference.inner(&self.words[0][1]),
        );
        // <ref|R psi> = t^T G^{-1} s with s_l = <src_l|psi>.
        let coef = self.gram_inv[sector].transpose() * t;
        let mut terms = Vec::with_capacity(4);
        for l in 0..2 {
            for &(cw, a) in &self.words[sector][l].terms {
                terms.push((coef[l].conj() * cw, a));
            }
        }
        CoherentSuperposition::new(terms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub jump_count: usize,
    /// Micro-step index of each jump (1-based).
    pub jump_steps: Vec<usize>,
    pub parity_outcomes: Vec<i8>,
    /// Micro-step index after which each check ran; the post-excitation check is step 0.
    pub check_steps: Vec<usize>,
    pub final_state: StateVector,
    /// Recovered fidelity at each checkpoint.
    pub fidelities: Vec<f64>,
    /// Final recovery projection fell below [`RECOVERY_WARNING_NORM`].
    pub warning: bool,
    pub seed: u64,
    pub stream: u64,
}

impl TrajectoryRecord {
    /// Sign changes along the outcome sequence, starting from a +1 baseline.
    pub fn parity_flips(&self) -> usize {
        let mut last = 1i8;
        let mut flips = 0;
        for &o in &self.parity_outcomes {
            if o != last {
                flips += 1;
                last = o;
            }
        }
        flips
    }
}

pub fn recover(record: &TrajectoryRecord, code: &CatCode) -> Result<RecoveryOutcome> {
    Recovery::new(*code)?.apply(&record.final_state, record.parity_flips())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParitySchedule {
    /// No checks at all, including the post-excitation one.
    Disabled,
    /// Post-excitation check, then one every `dx / p`; `p = 0` keeps only the first.
    Probability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputSet {
    /// Pauli eigenstates, a qubit 2-design.
    SixCardinal,
    /// Haar-random logical states, drawn from a dedicated stream of the seed.
    Haar(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QecRunConfig {
    /// Photonic cat amplitude before excitation.
    pub alpha: Complex64,
    pub coupler: CouplerSpec,
    /// Attenuation, group velocity and total distance.
    pub channel: ChannelSpec,
    /// Requested micro-step (m); rounded down to divide each checkpoint segment.
    pub dx: Option<f64>,
    /// Initial jump probability per micro-step used when `dx` is unset.
    pub step_probability: f64,
    pub schedule: ParitySchedule,
    pub trajectories: usize,
    pub inputs: InputSet,
    pub seed: u64,
    pub dim: Option<usize>,
    /// Number of equal segments; fidelities are reported at `checkpoints + 1` distances.
    pub checkpoints: usize,
}

impl QecRunConfig {
    pub fn new(alpha: Complex64, coupler: CouplerSpec, channel: ChannelSpec, seed: u64) -> Self {
        Self {
            alpha,
            coupler,
            channel,
            dx: None,
            step_probability: TARGET_STEP_PROBABILITY,
            schedule: ParitySchedule::Probability(1.0),
            trajectories: DEFAULT_TRAJECTORIES,
            inputs: InputSet::SixCardinal,
            seed,
            dim: None,
            checkpoints: 10,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.schedule = ParitySchedule::Probability(p);
        self
    }

    pub fn with_schedule(mut self, s: ParitySchedule) -> Self {
        self.schedule = s;
        self
    }

    pub fn with_trajectories(mut self, n: usize) -> Self {
        self.trajectories = n;
        self
    }

    pub fn with_inputs(mut self, inputs: InputSet) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn with_dx(mut self, dx: f64) -> Self {
        self.dx = Some(dx);
        self
    }

    pub fn with_step_probability(mut self, p: f64) -> Self {
        self.step_probability = p;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }

    pub fn with_checkpoints(mut self, n: usize) -> Self {
        self.checkpoints = n;
        self
    }

    /// Surface-mode amplitude right after excitation, `-beta* alpha`.
    pub fn excited_alpha(&self) -> Complex64 {
        -self.coupler.beta_amp().conj() * self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        if self.excited_alpha().norm() == 0.0 {
            return Err(Error::invalid("g", "coupler transfers nothing into the surface mode"));
        }
        if let ParitySchedule::Probability(p) = self.schedule {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("p", "parity-check probability must lie in [0, 1]"));
            }
        }
        if self.trajectories == 0 {
            return Err(Error::invalid("trajectories", "must be positive"));
        }
        if self.checkpoints == 0 {
            return Err(Error::invalid("checkpoints", "must be positive"));
        }
        if let InputSet::Haar(0) = self.inputs {
            return Err(Error::invalid("inputs", "Haar sample size must be positive"));
        }
        if !(self.step_probability > 0.0 && self.step_probability < MAX_STEP_PROBABILITY) {
            return Err(Error::invalid("step_probability", format!("must lie in (0, {MAX_STEP_PROBABILITY})")));
        }
        if let Some(dx) = self.dx {
            if !(dx > 0.0) || !dx.is_finite() {
                return Err(Error::invalid("dx", "must be positive"));
            }
        }
        Ok(())
    }

    /// Logical inputs `(c0, c1)` averaged over.
    pub fn input_states(&self) -> Vec<(Complex64, Complex64)> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self.inputs {
            InputSet::SixCardinal => vec![
                (c(1.0, 0.0), c(0.0, 0.0)),
                (c(0.0, 0.0), c(1.0, 0.0)),
                (c(h, 0.0), c(h, 0.0)),
                (c(h, 0.0), c(-h, 0.0)),
                (c(h, 0.0), c(0.0, h)),
                (c(h, 0.0), c(0.0, -h)),
            ],
            InputSet::Haar(m) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(u64::MAX);
                (0..m)
                    .map(|_| {
                        let z: f64 = rng.random_range(-1.0..=1.0);
                        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                        let th = z.acos();
                        (c((0.5 * th).cos(), 0.0), Complex64::from_polar((0.5 * th).sin(), phi))
                    })
                    .collect()
            }
        }
    }
}

/// Fixed step grid derived from a config.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub dim: usize,
    pub dx: f64,
    pub steps: usize,
    pub steps_per_segment: usize,
    /// `gamma dt = 2 k0 kappa'' dx`.
    pub gamma_dt: f64,
    /// `check[i]` is true when a check follows micro-step `i` (index 0 is the post-excitation check).
    pub check: Vec<bool>,
    /// Distance of each checkpoint (m).
    pub distances: Vec<f64>,
}

impl Schedule {
    pub fn new(cfg: &QecRunConfig) -> Result<Self> {
        cfg.validate()?;
        let a0 = cfg.excited_alpha();
        let dim = cfg.dim.unwrap_or_else(|| truncation_dimension(a0));
        let n0 = a0.norm_sqr().max(1.0);
        let k = cfg.channel.k0_kappa2();
        let x_total = cfg.channel.x();
        let seg = x_total / cfg.checkpoints as f64;
        let dx_max = match cfg.dx {
            Some(dx) => dx,
            None if k > 0.0 => cfg.step_probability / (2.0 * k * n0),
            None => seg.max(f64::MIN_POSITIVE),
        };
        let steps_per_segment = if seg > 0.0 { (seg / dx_max).ceil().max(1.0) as usize } else { 1 };
        let dx = if seg > 0.0 { seg / steps_per_segment as f64 } else { 0.0 };
        let gamma_dt = 2.0 * k * dx;
        if gamma_dt * a0.norm_sqr() >= MAX_STEP_PROBABILITY {
            return Err(Error::invalid(
                "dx",
                format!("initial jump probability {:.3} per step is not small", gamma_dt * a0.norm_sqr()),
            ));
        }
        let steps = steps_per_segment * cfg.checkpoints;
        let check = (0..=steps)
            .map(|i| match cfg.schedule {
                ParitySchedule::Disabled => false,
                ParitySchedule::Probability(_) if i == 0 => true,
                ParitySchedule::Probability(p) => {
                    let f = |j: usize| (p * j as f64 + 1e-9).floor();
                    f(i) > f(i - 1)
                }
            })
            .collect();
        let distances = (0..=cfg.checkpoints).map(|j| (j * steps_per_segment) as f64 * dx).collect();
        Ok(Self { dim, dx, steps, steps_per_segment, gamma_dt, check, distances })
    }

    pub fn losses(&self, cfg: &QecRunConfig) -> Vec<f64> {
        self.distances.iter().map(|x| cfg.channel.k0_kappa2() * x).collect()
    }
}

/// Everything a trajectory needs for one logical input.
struct PreparedInput {
    weights: Vec<f64>,
    states: Vec<DVector<Complex64>>,
    /// `[checkpoint][flips mod 4]` read-out vectors `R_k^dag |ref>`.
    readout: Vec<[DVector<Complex64>; 4]>,
}

struct Prepared {
    schedule: Schedule,
    recoveries: Vec<Recovery>,
    inputs: Vec<PreparedInput>,
    decay: DVector<Complex64>,
}

fn prepare(cfg: &QecRunConfig) -> Result<Prepared> {
    let schedule = Schedule::new(cfg)?;
    let a0 = cfg.excited_alpha();
    let base = CatCode::new(a0, schedule.dim)?;
    let recoveries = schedule
        .losses(cfg)
        .iter()
        .map(|y| Recovery::new(base.at(a0 * (-y).exp())?))
        .collect::<Result<Vec<_>>>()?;
    let inputs = cfg
        .input_states()
        .into_iter()
        .map(|(c0, c1)| {
            let rho = excite_code(c0, c1, cfg.alpha, &cfg.coupler)?.to_density(schedule.dim);
            let (weights, states) = rho.eigen();
            let readout = recoveries
                .iter()
                .map(|r| {
                    let reference = r.code().logical(c0, c1)?;
                    Ok(std::array::from_fn(|k| r.adjoint_on(&reference, k).to_state(schedule.dim).amplitudes().clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PreparedInput {
                weights: weights.into_iter().map(|w| w.max(0.0)).collect(),
                states: states.into_iter().map(|s| s.amplitudes().clone()).collect(),
                readout,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decay = DVector::from_fn(schedule.dim, |n, _| c((-0.5 * schedule.gamma_dt * n as f64).exp(), 0.0));
    Ok(Prepared { schedule, recoveries, inputs, decay })
}

fn sample_initial<R: Rng + ?Sized>(input: &PreparedInput, rng: &mut R) -> DVector<Complex64> {
    let total: f64 = input.weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (w, s) in input.weights.iter().zip(&input.states) {
        if u < *w {
            return s.clone();
        }
        u -= w;
    }
    let best = input.weights.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    input.states[best].clone()
}

fn trajectory(cfg: &QecRunConfig, prep: &Prepared, input: &PreparedInput, stream: u64) -> Result<TrajectoryRecord> {
    let sch = &prep.schedule;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut psi = sample_initial(input, &mut rng);
    let mut outcomes = Vec::new();
    let mut check_steps = Vec::new();
    let mut jump_steps = Vec::new();
    let mut flips = 0usize;
    let mut last = 1i8;
    let mut fidelities = Vec::with_capacity(cfg.checkpoints + 1);
    let collapse = |norm: f64, step: usize| -> Result<()> {
        if !(norm > 1e-150) || !norm.is_finite() {
            return Err(Error::NormCollapse { norm, step, trajectory: stream });
        }
        Ok(())
    };

    for i in 0..=sch.steps {
        if i > 0 {
            let dp = sch.gamma_dt * mean_n(&psi);
            // A jump is followed by the same step's decay, as in the exact one-jump Kraus term.
            if rng.random::<f64>() < dp {
                psi = lower(&psi);
                jump_steps.push(i);
            }
            psi.component_mul_assign(&prep.decay);
            let norm = psi.norm();
            collapse(norm, i)?;
            psi /= c(norm, 0.0);
        }
        if sch.check[i] {
            let o = check_parity(&mut psi, &mut rng)?;
            if o != last {
                flips += 1;
                last = o;
            }
            outcomes.push(o);
            check_steps.push(i);
        }
        if i % sch.steps_per_segment == 0 {
            let u = &input.readout[i / sch.steps_per_segment][flips % 4];
            fidelities.push(u.dotc(&psi).norm_sqr().min(1.0));
        }
    }
    let final_state = StateVector::from_amplitudes(psi);
    let warning = !prep.recoveries.last().expect("at least one checkpoint").apply(&final_state, flips)?.consistent;
    Ok(TrajectoryRecord {
        jump_count: jump_steps.len(),
        jump_steps,
        parity_outcomes: outcomes,
        check_steps,
        final_state,
        fidelities,
        warning,
        seed: cfg.seed,
        stream,
    })
}

/// Runs one trajectory for a logical input on the given random stream.
pub fn run_trajectory(cfg: &QecRunConfig, input: (Complex64, Complex64), stream: u64) -> Result<TrajectoryRecord> {
    let one = QecRunConfig { inputs: InputSet::SixCardinal, ..cfg.clone() };
    let mut prep = prepare(&QecRunConfig { inputs: InputSet::Haar(1), ..one.clone() })?;
    let rho = excite_code(input.0, input.1, cfg.alpha, &cfg.coupler)?.to_density(prep.schedule.dim);
    let (weights, states) = rho.eigen();
    let readout = prep
        .recoveries
        .iter()
        .map(|r| {
            let reference = r.code().logical(input.0, input.1)?;
            Ok(std::array::from_fn(|k| r.adjoint_on(&reference, k).to_state(prep.schedule.dim).amplitudes().clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    prep.inputs = vec![PreparedInput {
        weights: weights.into_iter().map(|w| w.max(0.0)).collect(),
        states: states.into_iter().map(|s| s.amplitudes().clone()).collect(),
        readout,
    }];
    trajectory(cfg, &prep, &prep.inputs[0], stream)
}

/// Maps every `(input, trajectory)` pair through `f`, in parallel, in a fixed order.
/// The random stream of trajectory `t` of input `j` is `j * trajectories + t`.
pub fn map_trajectories<T, F>(cfg: &QecRunConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &TrajectoryRecord) -> T + Sync,
{
    let prep = prepare(cfg)?;
    let n = cfg.trajectories;
    (0..prep.inputs.len() * n)
        .into_par_iter()
        .map(|idx| {
            let j = idx / n;
            trajectory(cfg, &prep, &prep.inputs[j], idx as u64).map(|r| f(j, &r))
        })
        .collect()
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QecResult {
    pub distances: Vec<f64>,
    /// `k0 kappa'' x` at each checkpoint.
    pub losses: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Average fidelity right after excitation, before the first check.
    pub f0: f64,
    pub samples: usize,
    pub warnings: usize,
    pub mean_jumps: f64,
}

/// Average over inputs of the excited state's fidelity with the code at `-beta* alpha`.
pub fn initial_fidelity(cfg: &QecRunConfig) -> Result<f64> {
    let code = CatCode::new(cfg.excited_alpha(), truncation_dimension(cfg.excited_alpha()))?;
    let inputs = cfg.input_states();
    let mut s = NeumaierSum::default();
    for &(c0, c1) in &inputs {
        let rho = excite_code(c0, c1, cfg.alpha, &cfg.coupler)?;
        s.add(rho.fidelity(&code.logical(c0, c1)?));
    }
    Ok(s.value() / inputs.len() as f64)
}

pub fn average_fidelity(cfg: &QecRunConfig) -> Result<QecResult> {
    let schedule = Schedule::new(cfg)?;
    let records = map_trajectories(cfg, |_, r| (r.fidelities.clone(), r.warning, r.jump_count))?;
    let m = records.len();
    let points = schedule.distances.len();
    let mut sums = vec![NeumaierSum::default(); points];
    let mut sq = vec![NeumaierSum::default(); points];
    let mut warnings = 0;
    let mut jumps = NeumaierSum::default();
    for (f, w, k) in &records {
        for (j, v) in f.iter().enumerate() {
            sums[j].add(*v);
            sq[j].add(v * v);
        }
        warnings += usize::from(*w);
        jumps.add(*k as f64);
    }
    let mf = m as f64;
    let f_bar: Vec<f64> = sums.iter().map(|s| s.value() / mf).collect();
    let std_err = sq
        .iter()
        .zip(&f_bar)
        .map(|(s, mean)| {
            let var = if m > 1 { ((s.value() / mf - mean * mean) * mf / (mf - 1.0)).max(0.0) } else { 0.0 };
            (var / mf).sqrt()
        })
        .collect();
    Ok(QecResult {
        losses: schedule.losses(cfg),
        distances: schedule.distances,
        f_bar,
        std_err,
        f0: initial_fidelity(cfg)?,
        samples: m,
        warnings,
        mean_jumps: jumps.value() / mf,
    })
}

/// Parity projection of a coherent mixture: `P|a> = (|a> +- |-a>)/2`.
pub fn project_parity(rho: &CoherentMixture, even: bool) -> CoherentMixture {
    let mut terms = Vec::with_capacity(rho.terms.len() * 4);
    for &(w, a, b) in &rho.terms {
        for s in [1.0, -1.0] {
            for t in [1.0, -1.0] {
                let sign = if even { 1.0 } else { s * t };
                terms.push((w * (0.25 * sign), a * s, b * t));
            }
        }
    }
    CoherentMixture { terms }
}

/// Deterministic average fidelity at each checkpoint for runs without mid-flight checks
/// (`Disabled` or `p = 0`), from the coherent-state channel.
pub fn analytic_fidelity(cfg: &QecRunConfig) -> Result<Vec<f64>> {
    let schedule = Schedule::new(cfg)?;
    let branches: Vec<(bool, usize)> = match cfg.schedule {
        ParitySchedule::Disabled => vec![],
        ParitySchedule::Probability(0.0) => vec![(true, 0), (false, 1)],
        ParitySchedule::Probability(_) => {
            return Err(Error::invalid("p", "the analytic oracle covers p = 0 and disabled checks only"))
        }
    };
    let a0 = cfg.excited_alpha();
    let base = CatCode::new(a0, schedule.dim)?;
    let inputs = cfg.input_states();
    let losses = schedule.losses(cfg);
    let mut out = Vec::with_capacity(losses.len());
    for &y in &losses {
        let rec = Recovery::new(base.at(a0 * (-y).exp())?)?;
        let eta = (-2.0 * y).exp();
        let mut s = NeumaierSum::default();
        for &(c0, c1) in &inputs {
            let rho = excite_code(c0, c1, cfg.alpha, &cfg.coupler)?;
            let reference = rec.code().logical(c0, c1)?;
            if branches.is_empty() {
                s.add(propagate_eta(&rho, eta).expectation(&rec.adjoint_on(&reference, 0)).re);
            }
            for &(even, k) in &branches {
                let part = propagate_eta(&project_parity(&rho, even), eta);
                s.add(part.expectation(&rec.adjoint_on(&reference, k)).re);
            }
        }
        out.push(s.value() / inputs.len() as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityReport {
    pub losses: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub max: f64,
    pub within_bound: bool,
}

/// `max(|<0'+|1'+>|, |<0'-|1'->|)` along the decayed code at every micro-step.
pub fn orthogonality_monitor(cfg: &QecRunConfig) -> Result<OrthogonalityReport> {
    let schedule = Schedule::new(cfg)?;
    let a0 = cfg.excited_alpha();
    let base = CatCode::new(a0, schedule.dim)?;
    let k = cfg.channel.k0_kappa2();
    let losses: Vec<f64> = (0..=schedule.steps).map(|i| k * schedule.dx * i as f64).collect();
    let overlaps = losses
        .iter()
        .map(|y| Ok(base.at(a0 * (-y).exp()).map(|c| c.orthogonality()).unwrap_or(1.0)))
        .collect::<Result<Vec<f64>>>()?;
    let max = overlaps.iter().copied().fold(0.0, f64::max);
    Ok(OrthogonalityReport { losses, overlaps, max, within_bound: max <= ORTHOGONALITY_BOUND })
}

/// Helper for tests and callers: `|psi><psi|` averaged over records.
pub fn ensemble_density(records: &[TrajectoryRecord]) -> Option<DMatrix<Complex64>> {
    let first = records.first()?;
    let d = first.final_state.dim();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for r in records {
        let v = r.final_state.amplitudes();
        m += v * v.adjoint();
    }
    Some(m / c(records.len() as f64, 0.0))
}
