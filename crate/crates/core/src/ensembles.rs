//! Density operators, Bloch vectors and prior-weighted ensembles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::qmat::{c, herm_eig, pauli, CMat, MAX_DIM};

pub const STATE_TOL: f64 = 1e-10;

/// A validated density operator: Hermitian, unit trace, PSD (all within 1e-10).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp(CMat);

impl DensityOp {
    pub fn new(mat: CMat) -> Result<Self> {
        let d = mat.dim();
        if d == 0 || d > MAX_DIM {
            return Err(Error::UnsupportedDim(d));
        }
        let herm = mat.hermiticity_error();
        if !(herm < STATE_TOL) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (error {herm:.3e})"
            )));
        }
        let tr = mat.trace();
        if !((tr.re - 1.0).abs() < STATE_TOL && tr.im.abs() < STATE_TOL) {
            return Err(Error::InvalidState(format!("trace {:.12} != 1", tr.re)));
        }
        let min = herm_eig(&mat)?.eigenvalues[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityOp(mat))
    }

    /// |ψ⟩⟨ψ| after normalizing ψ.
    pub fn pure(psi: &[num_complex::Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v: Vec<_> = psi.iter().map(|z| z / norm).collect();
        DensityOp::new(CMat::outer(&v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOp(CMat::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn is_pure(&self) -> bool {
        ((&self.0 * &self.0).trace().re - 1.0).abs() < STATE_TOL
    }
}

/// Bloch vector of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVec {
    pub const ZERO: BlochVec = BlochVec {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVec { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, o: &BlochVec) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn scale(&self, s: f64) -> BlochVec {
        BlochVec::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// r·σ
    pub fn dot_sigma(&self) -> CMat {
        CMat::from_rows(&[
            [c(self.z, 0.0), c(self.x, -self.y)],
            [c(self.x, self.y), c(-self.z, 0.0)],
        ])
    }

    /// (I + r·σ)/2 without any norm check; used for POVM directions.
    pub fn half_projector(&self) -> CMat {
        (&CMat::identity(2) + &self.dot_sigma()).scale(0.5)
    }

    /// Components (tr(Xa), tr(Ya), tr(Za)) of a 2×2 matrix.
    pub fn of_matrix(a: &CMat) -> BlochVec {
        let comp = |p: &CMat| (p * a).trace().re;
        BlochVec::new(comp(&pauli::x()), comp(&pauli::y()), comp(&pauli::z()))
    }
}

/// (I + r·σ)/2
pub fn bloch_to_state(r: BlochVec) -> Result<DensityOp> {
    let n = r.norm();
    if !(n <= 1.0 + STATE_TOL) {
        return Err(Error::BlochOutOfBall(n));
    }
    Ok(DensityOp(r.half_projector()))
}

pub fn state_to_bloch(rho: &DensityOp) -> Result<BlochVec> {
    if rho.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: rho.dim(),
        });
    }
    Ok(BlochVec::of_matrix(rho.mat()))
}

/// A finite ensemble {q_x, ρ_x}.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim: usize,
    items: Vec<(f64, DensityOp)>,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, DensityOp)>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::InvalidEnsemble(format!(
                "need at least 2 states, got {}",
                items.len()
            )));
        }
        let dim = items[0].1.dim();
        for (q, rho) in &items {
            if rho.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: rho.dim(),
                });
            }
            if !(0.0..=1.0).contains(q) {
                return Err(Error::InvalidEnsemble(format!("prior {q} outside [0, 1]")));
            }
        }
        let total: f64 = items.iter().map(|(q, _)| q).sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidEnsemble(format!("priors sum to {total}")));
        }
        Ok(Ensemble { dim, items })
    }

    /// Equal priors 1/n over the given states.
    pub fn uniform(states: Vec<DensityOp>) -> Result<Self> {
        let n = states.len() as f64;
        Ensemble::new(states.into_iter().map(|s| (1.0 / n, s)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(f64, DensityOp)] {
        &self.items
    }

    pub fn priors(&self) -> impl Iterator<Item = f64> + '_ {
        self.items.iter().map(|(q, _)| *q)
    }

    pub fn states(&self) -> impl Iterator<Item = &DensityOp> + '_ {
        self.items.iter().map(|(_, s)| s)
    }

    /// q_x ρ_x for every item.
    pub fn weighted(&self) -> Vec<CMat> {
        self.items.iter().map(|(q, s)| s.mat().scale(*q)).collect()
    }

    pub fn has_equal_priors(&self) -> bool {
        let target = 1.0 / self.len() as f64;
        self.priors().all(|q| (q - target).abs() < STATE_TOL)
    }

    pub fn max_prior(&self) -> f64 {
        self.priors().fold(0.0, f64::max)
    }
}

/// {q_x, N[ρ_x]}
pub fn apply_channel_to_ensemble(e: &Ensemble, n: &KrausChannel) -> Result<Ensemble> {
    let items = e
        .items
        .iter()
        .map(|(q, rho)| Ok((*q, n.apply(rho)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { dim: e.dim, items })
}

/// Ensembles with a name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// {|0⟩, |1⟩}, equal priors.
    Sz,
    /// {|0⟩, |1⟩, |+⟩, |−⟩}, equal priors.
    Bb84,
    /// Modified trine: priors (1/2, 1/4, 1/4), Bloch vectors (1/2,0,0),
    /// (−1/2, √3/2, 0), (−1/2, −√3/2, 0).
    TrineMod,
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Sz => "SZ",
            Builtin::Bb84 => "SBB84",
            Builtin::TrineMod => "TRINE_MOD",
        }
    }

    pub fn build(&self) -> Ensemble {
        let s3 = 3f64.sqrt() / 2.0;
        let b = |x, y, z| bloch_to_state(BlochVec::new(x, y, z)).expect("builtin Bloch vector");
        let items = match self {
            Builtin::Sz => vec![(0.5, b(0., 0., 1.)), (0.5, b(0., 0., -1.))],
            Builtin::Bb84 => vec![
                (0.25, b(0., 0., 1.)),
                (0.25, b(0., 0., -1.)),
                (0.25, b(1., 0., 0.)),
                (0.25, b(-1., 0., 0.)),
            ],
            Builtin::TrineMod => vec![
                (0.5, b(0.5, 0., 0.)),
                (0.25, b(-0.5, s3, 0.)),
                (0.25, b(-0.5, -s3, 0.)),
            ],
        };
        Ensemble::new(items).expect("builtin ensemble")
    }
}

impl FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "SZ" | "S_Z" => Ok(Builtin::Sz),
            "SBB84" | "BB84" | "S_BB84" => Ok(Builtin::Bb84),
            "TRINE_MOD" | "TRINE" => Ok(Builtin::TrineMod),
            _ => Err(Error::Parse(format!("unknown builtin ensemble '{s}'"))),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn builtin(name: Builtin) -> Ensemble {
    name.build()
}

// ---- JSON schema ----

/// `{"bloch":[x,y,z]}` or `{"matrix":[[[re,im],...],...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Bloch { bloch: [f64; 3] },
    Matrix { matrix: Vec<Vec<[f64; 2]>> },
}

impl StateSpec {
    pub fn to_matrix(&self) -> Result<CMat> {
        match self {
            StateSpec::Bloch { bloch } => {
                Ok(BlochVec::new(bloch[0], bloch[1], bloch[2]).half_projector())
            }
            StateSpec::Matrix { matrix } => matrix_from_json(matrix),
        }
    }

    pub fn to_state(&self) -> Result<DensityOp> {
        match self {
            StateSpec::Bloch { bloch } => {
                bloch_to_state(BlochVec::new(bloch[0], bloch[1], bloch[2]))
            }
            StateSpec::Matrix { .. } => DensityOp::new(self.to_matrix()?),
        }
    }

    pub fn from_state(rho: &DensityOp) -> Self {
        StateSpec::Matrix {
            matrix: matrix_to_json(rho.mat()),
        }
    }
}

pub fn matrix_from_json(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let d = rows.len();
    let mut data = Vec::with_capacity(d * d);
    for r in rows {
        if r.len() != d {
            return Err(Error::BadShape {
                expected: d * d,
                got: r.len() * d,
            });
        }
        data.extend(r.iter().map(|[re, im]| c(*re, *im)));
    }
    CMat::from_vec(d, data)
}

pub fn matrix_to_json(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleItemSpec {
    pub prior: f64,
    pub state: StateSpec,
}

/// `{"dim":2, "items":[{"prior":0.5, "state":{...}}, ...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub dim: usize,
    pub items: Vec<EnsembleItemSpec>,
}

impl EnsembleSpec {
    pub fn build(&self) -> Result<Ensemble> {
        let items = self
            .items
            .iter()
            .map(|it| Ok((it.prior, it.state.to_state()?)))
            .collect::<Result<Vec<_>>>()?;
        let e = Ensemble::new(items)?;
        if e.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: e.dim(),
            });
        }
        Ok(e)
    }

    pub fn from_ensemble(e: &Ensemble) -> Self {
        EnsembleSpec {
            dim: e.dim(),
            items: e
                .items()
                .iter()
                .map(|(q, s)| EnsembleItemSpec {
                    prior: *q,
                    state: StateSpec::from_state(s),
                })
                .collect(),
        }
    }
}

pub fn ensemble_from_json(text: &str) -> Result<Ensemble> {
    let spec: EnsembleSpec =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("ensemble JSON: {e}")))?;
    spec.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, flip_channel, FlipAxis, KrausChannel};

    #[test]
    fn bloch_examples() {
        let zero = bloch_to_state(BlochVec::new(0., 0., 1.)).unwrap();
        assert!(zero.mat().approx_eq(&CMat::diag(&[1.0, 0.0]), 0.0));
        assert!(zero.is_pure());
        let mixed = bloch_to_state(BlochVec::ZERO).unwrap();
        assert!(mixed.mat().approx_eq(&CMat::identity(2).scale(0.5), 0.0));
        assert!(!mixed.is_pure());
        let half_x = bloch_to_state(BlochVec::new(0.5, 0., 0.)).unwrap();
        let expected = CMat::from_rows(&[[c(0.5, 0.), c(0.25, 0.)], [c(0.25, 0.), c(0.5, 0.)]]);
        assert!(half_x.mat().approx_eq(&expected, 1e-15));
    }

    #[test]
    fn bloch_out_of_ball() {
        assert!(matches!(
            bloch_to_state(BlochVec::new(1.0, 0.1, 0.0)),
            Err(Error::BlochOutOfBall(_))
        ));
    }

    #[test]
    fn state_to_bloch_examples() {
        let one = DensityOp::new(CMat::diag(&[0.0, 1.0])).unwrap();
        assert_eq!(state_to_bloch(&one).unwrap(), BlochVec::new(0., 0., -1.));
        let plus = DensityOp::pure(&[c(1., 0.), c(1., 0.)]).unwrap();
        let r = state_to_bloch(&plus).unwrap();
        assert!((r.x - 1.0).abs() < 1e-15 && r.y.abs() < 1e-15 && r.z.abs() < 1e-15);
        assert_eq!(
            state_to_bloch(&DensityOp::maximally_mixed(2)).unwrap(),
            BlochVec::ZERO
        );
        assert!(matches!(
            state_to_bloch(&DensityOp::maximally_mixed(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn density_op_validation() {
        assert!(DensityOp::new(CMat::diag(&[0.6, 0.6])).is_err());
        assert!(DensityOp::new(CMat::diag(&[1.2, -0.2])).is_err());
        let nh = CMat::from_rows(&[[c(0.5, 0.), c(0.1, 0.)], [c(0.2, 0.), c(0.5, 0.)]]);
        assert!(DensityOp::new(nh).is_err());
    }

    #[test]
    fn builtins() {
        let sz = builtin(Builtin::Sz);
        assert_eq!(sz.len(), 2);
        assert!(sz.priors().all(|q| q == 0.5));
        let bb = builtin(Builtin::Bb84);
        assert_eq!(bb.len(), 4);
        assert!(bb.priors().all(|q| q == 0.25));
        let t = builtin(Builtin::TrineMod);
        let q: Vec<f64> = t.priors().collect();
        assert_eq!(q[0], 0.5);
        assert_eq!(q[0], 2.0 * q[1]);
        assert_eq!(q[1], q[2]);
        assert!(!t.has_equal_priors());
        assert_eq!("sbb84".parse::<Builtin>().unwrap(), Builtin::Bb84);
        assert!("nope".parse::<Builtin>().is_err());
    }

    #[test]
    fn ensemble_validation() {
        let s = DensityOp::maximally_mixed(2);
        assert!(Ensemble::new(vec![(1.0, s.clone())]).is_err());
        assert!(Ensemble::new(vec![(0.5, s.clone()), (0.6, s.clone())]).is_err());
        assert!(
            Ensemble::new(vec![(0.5, s.clone()), (0.5, DensityOp::maximally_mixed(3))]).is_err()
        );
    }

    #[test]
    fn channel_on_ensemble() {
        let sz = builtin(Builtin::Sz);
        assert_eq!(
            apply_channel_to_ensemble(&sz, &KrausChannel::identity(2)).unwrap(),
            sz
        );

        let flipped =
            apply_channel_to_ensemble(&sz, &flip_channel(FlipAxis::X, 0.5).unwrap()).unwrap();
        for s in flipped.states() {
            assert!(s.mat().approx_eq(&CMat::identity(2).scale(0.5), 1e-15));
        }

        let eta = 0.3;
        let dep = apply_channel_to_ensemble(&sz, &depolarizing(eta, 2).unwrap()).unwrap();
        for (a, b) in sz.states().zip(dep.states()) {
            let ra = state_to_bloch(a).unwrap();
            let rb = state_to_bloch(b).unwrap();
            assert!((rb.z - (1.0 - eta) * ra.z).abs() < 1e-14);
        }
        assert_eq!(
            dep.priors().collect::<Vec<_>>(),
            sz.priors().collect::<Vec<_>>()
        );
    }

    #[test]
    fn json_roundtrip_both_encodings() {
        let text = r#"{"dim":2,"items":[
            {"prior":0.5,"state":{"bloch":[0,0,1]}},
            {"prior":0.5,"state":{"matrix":[[[0,0],[0,0]],[[0,0],[1,0]]]}}]}"#;
        let e = ensemble_from_json(text).unwrap();
        assert_eq!(e, builtin(Builtin::Sz));
        let back = serde_json::to_string(&EnsembleSpec::from_ensemble(&e)).unwrap();
        assert_eq!(ensemble_from_json(&back).unwrap(), e);
        assert!(ensemble_from_json(r#"{"dim":3,"items":[]}"#).is_err());
    }
}
