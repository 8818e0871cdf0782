//! Two-qubit gate-level simulator for the flip-channel experiment.
//!
//! Qubit 0 is the environment ancilla and qubit 1 carries the system.
//! Basis index is `b0 + 2·b1`, so q0 is the least significant bit, and
//! bitstrings are written `"{b1}{b0}"`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{FlipAxis, KrausChannel};
use crate::ensembles::BlochVec;
use crate::error::{Error, Result};
use crate::qmat::{c, pauli, CMat};
use crate::twirl::{fit_depolarizing, twirl_channel, TwoDesign};

pub const N_QUBITS: usize = 2;

/// The single-qubit gate of the experiment in Euler form.
pub fn u3(theta: f64, phi: f64, lambda: f64) -> CMat {
    let (s, co) = (theta / 2.0).sin_cos();
    let e = |a: f64| Complex64::from_polar(1.0, a);
    CMat::from_rows(&[
        [c(co, 0.0), -e(lambda) * s],
        [e(phi) * s, e(lambda + phi) * co],
    ])
}

/// Euler angles `(θ, φ, λ)` with `u = e^{iα} u3(θ, φ, λ)` for some phase α.
pub fn u3_angles(u: &CMat) -> Result<(f64, f64, f64)> {
    if u.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: u.dim(),
        });
    }
    let err = u.unitarity_error();
    if err > 1e-10 {
        return Err(Error::NotUnitary(format!("deviation {err:.3e}")));
    }
    let (a, b) = (u[(0, 0)].norm(), u[(1, 0)].norm());
    let theta = 2.0 * b.atan2(a);
    const EPS: f64 = 1e-12;
    if b < EPS {
        let alpha = u[(0, 0)].arg();
        return Ok((theta, 0.0, u[(1, 1)].arg() - alpha));
    }
    if a < EPS {
        let alpha = (-u[(0, 1)]).arg();
        return Ok((theta, u[(1, 0)].arg() - alpha, 0.0));
    }
    let alpha = u[(0, 0)].arg();
    Ok((theta, u[(1, 0)].arg() - alpha, (-u[(0, 1)]).arg() - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    U3 {
        qubit: usize,
        theta: f64,
        phi: f64,
        lambda: f64,
    },
    H {
        qubit: usize,
    },
    X {
        qubit: usize,
    },
    Cx {
        control: usize,
        target: usize,
    },
    Barrier,
}

impl Gate {
    /// Arbitrary single-qubit unitary as a U3 gate (global phase dropped).
    pub fn unitary(qubit: usize, u: &CMat) -> Result<Gate> {
        let (theta, phi, lambda) = u3_angles(u)?;
        Ok(Gate::U3 {
            qubit,
            theta,
            phi,
            lambda,
        })
    }

    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::U3 { qubit, .. } | Gate::H { qubit } | Gate::X { qubit } => vec![qubit],
            Gate::Cx { control, target } => vec![control, target],
            Gate::Barrier => vec![],
        }
    }

    /// The 4×4 matrix of this gate on the two-qubit register.
    pub fn matrix(&self) -> CMat {
        let on = |q: usize, g: CMat| {
            if q == 0 {
                pauli::i2().kron(&g)
            } else {
                g.kron(&pauli::i2())
            }
        };
        match *self {
            Gate::U3 {
                qubit,
                theta,
                phi,
                lambda,
            } => on(qubit, u3(theta, phi, lambda)),
            Gate::H { qubit } => on(qubit, pauli::h()),
            Gate::X { qubit } => on(qubit, pauli::x()),
            Gate::Cx { control, target } => CMat::from_fn(4, |row, col| {
                let bit = |i: usize, q: usize| (i >> q) & 1;
                let image = if bit(col, control) == 1 {
                    col ^ (1 << target)
                } else {
                    col
                };
                if row == image {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }),
            Gate::Barrier => CMat::identity(4),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new() -> Self {
        Circuit::default()
    }

    pub fn push(&mut self, g: Gate) -> Result<&mut Self> {
        let wires = g.wires();
        if wires.iter().any(|&q| q >= N_QUBITS) {
            return Err(Error::InvalidArgument(format!(
                "gate {g:?} uses a wire outside 0..{N_QUBITS}"
            )));
        }
        if wires.len() == 2 && wires[0] == wires[1] {
            return Err(Error::InvalidArgument(
                "controlled gate needs distinct wires".into(),
            ));
        }
        self.gates.push(g);
        Ok(self)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Product of all gate matrices, first gate rightmost.
    pub fn unitary(&self) -> CMat {
        self.gates
            .iter()
            .fold(CMat::identity(4), |acc, g| &g.matrix() * &acc)
    }

    /// Final amplitudes starting from |00⟩.
    pub fn statevector(&self) -> [Complex64; 4] {
        let u = self.unitary();
        [u[(0, 0)], u[(1, 0)], u[(2, 0)], u[(3, 0)]]
    }

    /// Computational-basis distribution, indexed by `b0 + 2·b1`.
    pub fn probabilities(&self) -> [f64; 4] {
        self.statevector().map(|a| a.norm_sqr())
    }
}

/// Marginal probability that the system qubit reads `bit`.
pub fn system_marginal(probs: &[f64; 4], bit: usize) -> f64 {
    probs[2 * bit] + probs[2 * bit + 1]
}

/// Gates that realize the controlled flip (ancilla q0 controls system q1).
/// The Y block is C_X (I⊗H) C_X (I⊗H), with the rightmost factor applied first.
pub fn flip_block(axis: FlipAxis) -> Vec<Gate> {
    let cx = Gate::Cx {
        control: 0,
        target: 1,
    };
    match axis {
        FlipAxis::X => vec![cx],
        FlipAxis::Y => vec![Gate::H { qubit: 1 }, cx, Gate::H { qubit: 1 }, cx],
    }
}

/// Ancilla rotation angle θ = 2α with cos²α = 1 − p_f.
pub fn ancilla_angle(p_f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_f) || p_f.is_nan() {
        return Err(Error::ProbOutOfRange(p_f));
    }
    Ok(2.0 * (1.0 - p_f).sqrt().acos())
}

/// Full experiment circuit: ancilla preparation, system preparation, twirl,
/// controlled flip, untwirl and measurement-basis rotation.
pub fn build_flip_circuit(
    axis: FlipAxis,
    p_f: f64,
    prep: &CMat,
    meas_rot: &CMat,
    twirl_u: Option<&CMat>,
) -> Result<Circuit> {
    let theta = ancilla_angle(p_f)?;
    let mut circ = Circuit::new();
    circ.push(Gate::U3 {
        qubit: 0,
        theta,
        phi: 0.0,
        lambda: 0.0,
    })?;
    circ.push(Gate::unitary(1, prep)?)?;
    circ.push(Gate::Barrier)?;
    if let Some(u) = twirl_u {
        circ.push(Gate::unitary(1, u)?)?;
    }
    for g in flip_block(axis) {
        circ.push(g)?;
    }
    if let Some(u) = twirl_u {
        circ.push(Gate::unitary(1, &u.adjoint())?)?;
    }
    circ.push(Gate::Barrier)?;
    circ.push(Gate::unitary(1, meas_rot)?)?;
    Ok(circ)
}

/// The system channel obtained by tracing out the ancilla:
/// K_b[i][j] = ⟨b, i| V |0, j⟩ with the ancilla in the low bit.
pub fn channel_of_circuit(axis: FlipAxis, p_f: f64) -> Result<KrausChannel> {
    let theta = ancilla_angle(p_f)?;
    let mut circ = Circuit::new();
    circ.push(Gate::U3 {
        qubit: 0,
        theta,
        phi: 0.0,
        lambda: 0.0,
    })?;
    for g in flip_block(axis) {
        circ.push(g)?;
    }
    let v = circ.unitary();
    let kraus = (0..2)
        .map(|b| CMat::from_fn(2, |i, j| v[(b + 2 * i, 2 * j)]))
        .collect();
    KrausChannel::new(kraus)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl ShotResult {
    /// Number of shots in which the system qubit read `bit`.
    pub fn system_count(&self, bit: usize) -> u64 {
        self.counts
            .iter()
            .filter(|(k, _)| k.as_bytes()[0] == b'0' + bit as u8)
            .map(|(_, v)| v)
            .sum()
    }
}

pub fn bitstring(index: usize) -> String {
    format!("{}{}", (index >> 1) & 1, index & 1)
}

/// Multinomial sampling as a chain of conditional binomials.
fn multinomial(rng: &mut ChaCha8Rng, shots: u64, probs: &[f64; 4]) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut left = shots;
    let mut mass = 1.0;
    for i in 0..3 {
        if left == 0 {
            break;
        }
        let p = if mass > 0.0 {
            (probs[i] / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = Binomial::new(left, p)
            .expect("p clamped to [0, 1]")
            .sample(rng);
        out[i] = k;
        left -= k;
        mass -= probs[i];
    }
    out[3] = left;
    out
}

/// Runs `shots` readouts of both qubits in the computational basis.
pub fn simulate_counts(circ: &Circuit, shots: u64, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let probs = circ.probabilities();
    let total: f64 = probs.iter().sum();
    let probs = probs.map(|p| p / total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = multinomial(&mut rng, shots, &probs);
    let counts = (0..4).map(|i| (bitstring(i), k[i])).collect();
    Ok(ShotResult { shots, counts })
}

/// Readout degraded as ρ → (1−η)ρ + ηI/2: tr(M[...]) = (1−η)·tr(Mρ) + η·tr(M)/2.
pub fn shot_noise(expectation: f64, eta: f64, trace_m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
        return Err(Error::EtaOutOfRange(eta));
    }
    Ok((1.0 - eta) * expectation + eta * trace_m / 2.0)
}

/// The two experiment panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    /// Z eigenstates, X flips, Z measurement.
    A,
    /// BB84 states, Y flips, each state read in its own basis with weight 1/2.
    B,
}

impl Panel {
    pub fn default_noise_eta(&self) -> f64 {
        match self {
            Panel::A => 0.05,
            Panel::B => 0.15,
        }
    }

    pub fn axis(&self) -> FlipAxis {
        match self {
            Panel::A => FlipAxis::X,
            Panel::B => FlipAxis::Y,
        }
    }

    /// Each readout: prior weight, preparation, basis rotation, correct system bit.
    fn readouts(&self) -> Vec<Readout> {
        let id = pauli::i2();
        let x = pauli::x();
        let h = pauli::h();
        match self {
            Panel::A => vec![
                Readout {
                    weight: 0.5,
                    prep: id.clone(),
                    rot: id.clone(),
                    bit: 0,
                },
                Readout {
                    weight: 0.5,
                    prep: x,
                    rot: id,
                    bit: 1,
                },
            ],
            Panel::B => {
                let hx = &h * &x;
                vec![
                    Readout {
                        weight: 0.125,
                        prep: id.clone(),
                        rot: id.clone(),
                        bit: 0,
                    },
                    Readout {
                        weight: 0.125,
                        prep: x,
                        rot: id,
                        bit: 1,
                    },
                    Readout {
                        weight: 0.125,
                        prep: h.clone(),
                        rot: h.clone(),
                        bit: 0,
                    },
                    Readout {
                        weight: 0.125,
                        prep: hx,
                        rot: h,
                        bit: 1,
                    },
                ]
            }
        }
    }
}

impl std::str::FromStr for Panel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Panel::A),
            "b" => Ok(Panel::B),
            other => Err(Error::Parse(format!(
                "unknown panel '{other}' (expected a or b)"
            ))),
        }
    }
}

struct Readout {
    /// Prior of the state times the probability of choosing its basis.
    weight: f64,
    prep: CMat,
    rot: CMat,
    bit: usize,
}

/// One row of the sweep; `sigma_*` are the binomial standard errors of the sampled columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure3Row {
    pub p_f: f64,
    pub p_n_analytic: f64,
    pub p_tn_analytic: f64,
    pub p_n_sim: f64,
    pub p_tn_sim: f64,
    pub p_n_noise: f64,
    pub p_tn_noise: f64,
    pub sigma_n: f64,
    pub sigma_tn: f64,
    pub relabeled_n: bool,
    pub relabeled_tn: bool,
}

pub const FIGURE3_COLUMNS: [&str; 7] = [
    "p_f",
    "p_N_analytic",
    "p_TN_analytic",
    "p_N_sim",
    "p_TN_sim",
    "p_N_noise",
    "p_TN_noise",
];

impl Figure3Row {
    pub fn columns(&self) -> [f64; 7] {
        [
            self.p_f,
            self.p_n_analytic,
            self.p_tn_analytic,
            self.p_n_sim,
            self.p_tn_sim,
            self.p_n_noise,
            self.p_tn_noise,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure3Config {
    pub panel: Panel,
    pub sweep: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
    pub noise_eta: f64,
}

impl Figure3Config {
    pub fn new(panel: Panel) -> Self {
        Figure3Config {
            panel,
            sweep: default_sweep(),
            shots: 8000,
            seed: 0,
            noise_eta: panel.default_noise_eta(),
        }
    }
}

/// p_f = 0, 0.05, …, 1.
pub fn default_sweep() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

/// Stateless 64-bit mixer used to derive per-job seeds.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

/// Exact and sampled success of one curve (twirl off or on) at one p_f.
struct Curve {
    analytic: f64,
    sampled: f64,
    noisy: f64,
    sigma: f64,
    relabeled: bool,
}

fn evaluate_curve(
    cfg: &Figure3Config,
    p_f: f64,
    point: usize,
    design: Option<&TwoDesign>,
) -> Result<Curve> {
    let readouts = cfg.panel.readouts();
    let twirls: Vec<Option<&CMat>> = match design {
        Some(w) => w.unitaries().iter().map(Some).collect(),
        None => vec![None],
    };
    let share = 1.0 / twirls.len() as f64;

    // exact distribution of every circuit in the curve
    let mut jobs = Vec::new();
    for (r_idx, r) in readouts.iter().enumerate() {
        for (t_idx, u) in twirls.iter().enumerate() {
            let circ = build_flip_circuit(cfg.panel.axis(), p_f, &r.prep, &r.rot, *u)?;
            let correct = system_marginal(&circ.probabilities(), r.bit).clamp(0.0, 1.0);
            jobs.push((r_idx, t_idx, circ, r.weight * share, r.bit, correct));
        }
    }

    // The receiver flips its labels when that does better. With twirling the
    // decision comes from the sign of the fitted shrink factor.
    let raw: f64 = jobs.iter().map(|j| j.3 * j.5).sum();
    let flipped: f64 = jobs.iter().map(|j| j.3 * (1.0 - j.5)).sum();
    let relabeled = match design {
        Some(w) => {
            let n = channel_of_circuit(cfg.panel.axis(), p_f)?;
            fit_depolarizing(&twirl_channel(&n, w)?)?.shrink() < 0.0
        }
        None => flipped > raw,
    };
    let analytic = if relabeled { flipped } else { raw };
    let counted = |bit: usize| if relabeled { 1 - bit } else { bit };

    let curve_id = u64::from(design.is_some());
    let mut sampled = 0.0;
    let mut variance = 0.0;
    let mut noisy = 0.0;
    for (r_idx, t_idx, circ, weight, bit, correct) in &jobs {
        let seed = mix_seed(&[
            cfg.seed,
            point as u64,
            curve_id,
            *r_idx as u64,
            *t_idx as u64,
        ]);
        let counts = simulate_counts(circ, cfg.shots, seed)?;
        let hits = counts.system_count(counted(*bit)) as f64;
        sampled += weight * hits / cfg.shots as f64;
        let p = if relabeled { 1.0 - correct } else { *correct };
        variance += weight * weight * p * (1.0 - p) / cfg.shots as f64;
        // each counted element is a rank-one projector, weighted by `weight`
        noisy += weight * shot_noise(p, cfg.noise_eta, 1.0)?;
    }
    Ok(Curve {
        analytic,
        sampled,
        noisy,
        sigma: variance.sqrt(),
        relabeled,
    })
}

/// Sweeps p_f and returns one row per point, in sweep order.
pub fn figure3(cfg: &Figure3Config, design: &TwoDesign) -> Result<Vec<Figure3Row>> {
    if cfg.shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.noise_eta) || cfg.noise_eta.is_nan() {
        return Err(Error::EtaOutOfRange(cfg.noise_eta));
    }
    if let Some(&bad) = cfg
        .sweep
        .iter()
        .find(|p| !(0.0..=1.0).contains(*p) || p.is_nan())
    {
        return Err(Error::ProbOutOfRange(bad));
    }
    cfg.sweep
        .par_iter()
        .enumerate()
        .map(|(point, &p_f)| {
            let off = evaluate_curve(cfg, p_f, point, None)?;
            let on = evaluate_curve(cfg, p_f, point, Some(design))?;
            Ok(Figure3Row {
                p_f,
                p_n_analytic: off.analytic,
                p_tn_analytic: on.analytic,
                p_n_sim: off.sampled,
                p_tn_sim: on.sampled,
                p_n_noise: off.noisy,
                p_tn_noise: on.noisy,
                sigma_n: off.sigma,
                sigma_tn: on.sigma,
                relabeled_n: off.relabeled,
                relabeled_tn: on.relabeled,
            })
        })
        .collect()
}

/// Bloch vector of the system qubit after a circuit, for diagnostics.
pub fn system_bloch(circ: &Circuit) -> BlochVec {
    let psi = circ.statevector();
    // reduced state of q1: ρ[i][j] = Σ_b ψ(b + 2i) ψ*(b + 2j)
    let rho = CMat::from_fn(2, |i, j| {
        (0..2).map(|b| psi[b + 2 * i] * psi[b + 2 * j].conj()).sum()
    });
    BlochVec::of_matrix(&rho)
}
