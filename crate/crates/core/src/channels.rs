//! CPTP maps in Kraus form and the qubit Pauli-transfer representation.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensembles::{matrix_from_json, matrix_to_json, DensityOp, StateSpec};
use crate::error::{Error, Result};
use crate::qmat::{c, pauli, psd_sqrt, CMat, MAX_DIM};

pub const TP_TOL: f64 = 1e-10;

/// A channel ρ ↦ Σ_k K_k ρ K_k†.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMat>,
}

impl KrausChannel {
    /// Validates Σ K†K = I within 1e-10.
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyChannel)?;
        let dim = first.dim();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDim(dim));
        }
        if let Some(k) = kraus.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                got: k.dim(),
            });
        }
        let ch = KrausChannel { dim, kraus };
        let err = ch.trace_preservation_error();
        if !(err < TP_TOL) {
            return Err(Error::NotTracePreserving(err));
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim,
            kraus: vec![CMat::identity(dim)],
        }
    }

    /// ρ ↦ UρU†
    pub fn unitary(u: CMat) -> Result<Self> {
        KrausChannel::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn trace_preservation_error(&self) -> f64 {
        let mut sum = CMat::zeros(self.dim);
        for k in &self.kraus {
            sum = &sum + &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&CMat::identity(self.dim))
    }

    /// The linear map on an arbitrary operator.
    pub fn apply_op(&self, a: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim);
        for k in &self.kraus {
            out = &out + &(&(k * a) * &k.adjoint());
        }
        out
    }

    pub fn apply(&self, rho: &DensityOp) -> Result<DensityOp> {
        if rho.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: rho.dim(),
            });
        }
        DensityOp::new(self.apply_op(rho.mat()).hermitian_part())
    }

    /// Max-entry distance between the images of every matrix unit |i⟩⟨j|.
    /// Zero iff the two channels are the same map.
    pub fn map_distance(&self, other: &KrausChannel) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut e = CMat::zeros(self.dim);
                e[(i, j)] = c(1.0, 0.0);
                worst = worst.max(self.apply_op(&e).max_abs_diff(&other.apply_op(&e)));
            }
        }
        worst
    }
}

/// Pauli axis for flip channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlipAxis {
    X,
    Y,
}

impl FlipAxis {
    pub fn matrix(&self) -> CMat {
        match self {
            FlipAxis::X => pauli::x(),
            FlipAxis::Y => pauli::y(),
        }
    }
}

impl FromStr for FlipAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(FlipAxis::X),
            "Y" | "y" => Ok(FlipAxis::Y),
            _ => Err(Error::Parse(format!("unknown flip axis '{s}'"))),
        }
    }
}

impl fmt::Display for FlipAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlipAxis::X => "X",
            FlipAxis::Y => "Y",
        })
    }
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbOutOfRange(p));
    }
    Ok(())
}

/// Generalized Pauli (clock-and-shift) operators X^a Z^b for a, b in 0..d.
/// For d = 2 these are replaced by I, X, Y, Z.
fn weyl_operators(dim: usize) -> Vec<CMat> {
    if dim == 2 {
        return pauli::basis().to_vec();
    }
    let omega = |k: usize| c(0.0, 2.0 * std::f64::consts::PI * k as f64 / dim as f64).exp();
    let mut ops = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            // X^a Z^b |j⟩ = ω^{bj} |j + a⟩
            ops.push(CMat::from_fn(dim, |row, col| {
                if row == (col + a) % dim {
                    omega(b * col % dim)
                } else {
                    c(0.0, 0.0)
                }
            }));
        }
    }
    ops
}

/// ρ ↦ (1−η)ρ + η I/d, valid for 1−η ∈ [−1/(d²−1), 1].
///
/// Realized as a mixture of the d² Weyl operators: weight 1 − η(d²−1)/d² on
/// the identity and η/d² on each of the others.
pub fn depolarizing(eta: f64, dim: usize) -> Result<KrausChannel> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDim(dim));
    }
    let d2 = (dim * dim) as f64;
    let eta_max = d2 / (d2 - 1.0);
    if !(eta >= -1e-12 && eta <= eta_max + 1e-12) {
        return Err(Error::EtaOutOfRange(eta));
    }
    let eta = eta.clamp(0.0, eta_max);
    let w_id = 1.0 - eta * (d2 - 1.0) / d2;
    let w_other = eta / d2;
    let kraus = weyl_operators(dim)
        .into_iter()
        .enumerate()
        .map(|(i, w)| w.scale(if i == 0 { w_id } else { w_other }.sqrt()))
        .collect();
    KrausChannel::new(kraus)
}

/// ρ ↦ (1−p)ρ + p RρR with R ∈ {X, Y}.
pub fn flip_channel(axis: FlipAxis, p_f: f64) -> Result<KrausChannel> {
    check_prob(p_f)?;
    KrausChannel::new(vec![
        CMat::identity(2).scale((1.0 - p_f).sqrt()),
        axis.matrix().scale(p_f.sqrt()),
    ])
}

/// ρ ↦ (1−η)ρ + η tr(ρ) σ.
///
/// Kraus set: √(1−η) I together with √η √σ |i⟩⟨j| for all i, j.
pub fn fixed_state_channel(sigma: &DensityOp, eta: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::EtaOutOfRange(eta));
    }
    let d = sigma.dim();
    let root = psd_sqrt(sigma.mat())?.scale(eta.sqrt());
    let mut kraus = vec![CMat::identity(d).scale((1.0 - eta).sqrt())];
    for j in 0..d {
        // √σ |i⟩⟨j| is column i of √σ moved into column j
        for i in 0..d {
            kraus.push(CMat::from_fn(d, |r, col| {
                if col == j {
                    root[(r, i)]
                } else {
                    c(0.0, 0.0)
                }
            }));
        }
    }
    KrausChannel::new(kraus)
}

/// A ∘ B (B acts first).
pub fn compose(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let mut kraus = Vec::with_capacity(a.kraus.len() * b.kraus.len());
    for ka in &a.kraus {
        for kb in &b.kraus {
            kraus.push(ka * kb);
        }
    }
    Ok(KrausChannel { dim: a.dim, kraus })
}

/// Real 4×4 matrix t[i][j] = ½ tr(σ_i N[σ_j]) over σ = (I, X, Y, Z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTransfer {
    pub t: [[f64; 4]; 4],
}

impl PauliTransfer {
    pub fn identity() -> Self {
        Self::diag([1.0; 4])
    }

    pub fn diag(d: [f64; 4]) -> Self {
        let mut t = [[0.0; 4]; 4];
        for i in 0..4 {
            t[i][i] = d[i];
        }
        PauliTransfer { t }
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [self.t[0][0], self.t[1][1], self.t[2][2], self.t[3][3]]
    }

    pub fn max_abs_diff(&self, other: &PauliTransfer) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((self.t[i][j] - other.t[i][j]).abs());
            }
        }
        m
    }
}

impl Mul for PauliTransfer {
    type Output = PauliTransfer;
    fn mul(self, rhs: PauliTransfer) -> PauliTransfer {
        let mut t = [[0.0; 4]; 4];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (0..4).map(|k| self.t[i][k] * rhs.t[k][j]).sum();
            }
        }
        PauliTransfer { t }
    }
}

pub fn pauli_transfer(n: &KrausChannel) -> Result<PauliTransfer> {
    if n.dim != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: n.dim,
        });
    }
    let basis = pauli::basis();
    let mut t = [[0.0; 4]; 4];
    for (j, sj) in basis.iter().enumerate() {
        let image = n.apply_op(sj);
        for (i, si) in basis.iter().enumerate() {
            t[i][j] = 0.5 * (si * &image).trace().re;
        }
    }
    Ok(PauliTransfer { t })
}

// ---- JSON schema ----

fn default_dim() -> usize {
    2
}

/// `{"kind":"flip","axis":"X","p":0.25}` and friends.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Identity {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Flip {
        axis: FlipAxis,
        p: f64,
    },
    Depolarizing {
        eta: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    FixedState {
        eta: f64,
        sigma: StateSpec,
    },
    Kraus {
        ops: Vec<Vec<Vec<[f64; 2]>>>,
    },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<KrausChannel> {
        match self {
            ChannelSpec::Identity { dim } => {
                if !(1..=MAX_DIM).contains(dim) {
                    return Err(Error::UnsupportedDim(*dim));
                }
                Ok(KrausChannel::identity(*dim))
            }
            ChannelSpec::Flip { axis, p } => flip_channel(*axis, *p),
            ChannelSpec::Depolarizing { eta, dim } => depolarizing(*eta, *dim),
            ChannelSpec::FixedState { eta, sigma } => fixed_state_channel(&sigma.to_state()?, *eta),
            ChannelSpec::Kraus { ops } => KrausChannel::new(
                ops.iter()
                    .map(|m| matrix_from_json(m))
                    .collect::<Result<_>>()?,
            ),
        }
    }

    pub fn from_channel(n: &KrausChannel) -> Self {
        ChannelSpec::Kraus {
            ops: n.kraus.iter().map(matrix_to_json).collect(),
        }
    }
}

pub fn channel_from_json(text: &str) -> Result<KrausChannel> {
    let spec: ChannelSpec =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("channel JSON: {e}")))?;
    spec.build()
}
