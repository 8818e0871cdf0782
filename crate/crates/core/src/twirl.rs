//! Channel twirling over a finite unitary 2-design.
//!
//! The reference design is the 12-element tetrahedral subgroup
//! {I, −iX, −iY, −iZ, U₅, …, U₁₂}. Averaging U†N[U·U†]U over it turns any
//! qubit channel into a depolarizing channel, whose parameter is read off
//! the Pauli-transfer diagonal.

use crate::channels::{pauli_transfer, KrausChannel, PauliTransfer};
use crate::error::{Error, Result};
use crate::qmat::{c, pauli, CMat};

/// Residual below which a twirled channel counts as depolarizing.
pub const DESIGN_TOL: f64 = 1e-9;

/// A finite set of qubit unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDesign {
    unitaries: Vec<CMat>,
}

impl TwoDesign {
    /// Each element must be a 2×2 unitary within 1e-10.
    pub fn new(unitaries: Vec<CMat>) -> Result<Self> {
        if unitaries.is_empty() {
            return Err(Error::NotUnitary("empty design".into()));
        }
        for (i, u) in unitaries.iter().enumerate() {
            if u.dim() != 2 {
                return Err(Error::DimMismatch {
                    expected: 2,
                    got: u.dim(),
                });
            }
            let err = u.unitarity_error();
            if !(err < 1e-10) {
                return Err(Error::NotUnitary(format!("element {i} (error {err:.3e})")));
            }
        }
        Ok(TwoDesign { unitaries })
    }

    pub fn unitaries(&self) -> &[CMat] {
        &self.unitaries
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    /// {I, X, Y, Z}: a 1-design that is not a 2-design.
    pub fn pauli_group() -> Self {
        TwoDesign {
            unitaries: pauli::basis().to_vec(),
        }
    }
}

/// Half-integer 2×2 matrix from sign pairs: entry = (a + b i)/2.
fn half(entries: [[(f64, f64); 2]; 2]) -> CMat {
    CMat::from_fn(2, |i, j| c(entries[i][j].0 * 0.5, entries[i][j].1 * 0.5))
}

/// The 12-element tetrahedral design, entry-for-entry.
pub fn tetrahedral_design() -> TwoDesign {
    let minus_i = c(0.0, -1.0);
    let unitaries = vec![
        CMat::identity(2),
        pauli::x().scale_c(minus_i),
        pauli::y().scale_c(minus_i),
        pauli::z().scale_c(minus_i),
        half([[(1., -1.), (-1., -1.)], [(1., -1.), (1., 1.)]]),
        half([[(1., 1.), (1., -1.)], [(-1., -1.), (1., -1.)]]),
        half([[(-1., -1.), (-1., -1.)], [(1., -1.), (-1., 1.)]]),
        half([[(-1., 1.), (1., -1.)], [(-1., -1.), (-1., -1.)]]),
        half([[(-1., 1.), (-1., 1.)], [(1., 1.), (-1., -1.)]]),
        half([[(-1., -1.), (1., 1.)], [(-1., 1.), (-1., 1.)]]),
        half([[(1., 1.), (-1., 1.)], [(1., 1.), (1., -1.)]]),
        half([[(1., -1.), (1., 1.)], [(-1., 1.), (1., 1.)]]),
    ];
    TwoDesign::new(unitaries).expect("tetrahedral elements are unitary")
}

/// The channel U†N[UρU†]U as a Kraus set {U†K U}.
pub fn conjugated(n: &KrausChannel, u: &CMat) -> KrausChannel {
    let ud = u.adjoint();
    let kraus = n.kraus().iter().map(|k| &(&ud * k) * u).collect();
    KrausChannel::new(kraus).expect("unitary conjugation preserves trace")
}

/// ρ ↦ (1/|W|) Σ_i U_i† N[U_i ρ U_i†] U_i, materialized as |W|·|K| Kraus
/// operators U_i†K U_i/√|W| in design order.
pub fn twirl_channel(n: &KrausChannel, w: &TwoDesign) -> Result<KrausChannel> {
    if n.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: n.dim(),
        });
    }
    let s = 1.0 / (w.len() as f64).sqrt();
    let mut kraus = Vec::with_capacity(w.len() * n.kraus().len());
    for u in w.unitaries() {
        let ud = u.adjoint();
        for k in n.kraus() {
            kraus.push((&(&ud * k) * u).scale(s));
        }
    }
    KrausChannel::new(kraus)
}

/// Closest depolarizing channel by Pauli-transfer diagonal average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizingFit {
    pub eta: f64,
    /// Max absolute deviation of the transfer matrix from diag(1, 1−η, 1−η, 1−η).
    pub residual: f64,
}

impl DepolarizingFit {
    /// 1 − η
    pub fn shrink(&self) -> f64 {
        1.0 - self.eta
    }

    pub fn is_depolarizing(&self) -> bool {
        self.residual < DESIGN_TOL
    }
}

pub fn fit_transfer(t: &PauliTransfer) -> DepolarizingFit {
    let shrink = (t.t[1][1] + t.t[2][2] + t.t[3][3]) / 3.0;
    let target = PauliTransfer::diag([1.0, shrink, shrink, shrink]);
    DepolarizingFit {
        eta: 1.0 - shrink,
        residual: t.max_abs_diff(&target),
    }
}

pub fn fit_depolarizing(n: &KrausChannel) -> Result<DepolarizingFit> {
    Ok(fit_transfer(&pauli_transfer(n)?))
}

/// Channels used by [`verify_two_design`] when the caller has no preference:
/// flip(X, 0.3), flip(Y, 0.7), fixed_state(|+⟩⟨+|, 0.5) and a seeded random
/// two-Kraus channel.
pub fn default_probes() -> Vec<KrausChannel> {
    use crate::channels::{fixed_state_channel, flip_channel, FlipAxis};
    use crate::ensembles::{bloch_to_state, BlochVec};
    use rand::SeedableRng;

    let plus = bloch_to_state(BlochVec::new(1.0, 0.0, 0.0)).expect("pure state");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x2de5);
    vec![
        flip_channel(FlipAxis::X, 0.3).expect("valid"),
        flip_channel(FlipAxis::Y, 0.7).expect("valid"),
        fixed_state_channel(&plus, 0.5).expect("valid"),
        crate::random::random_channel(&mut rng),
    ]
}

/// True iff every probe twirled over `w` is depolarizing (residual < 1e-9)
/// and agrees as a map with the tetrahedral twirl within 1e-9.
pub fn verify_two_design(w: &TwoDesign, probes: &[KrausChannel]) -> bool {
    let reference = tetrahedral_design();
    probes.iter().all(|n| {
        let (Ok(tw), Ok(tr)) = (twirl_channel(n, w), twirl_channel(n, &reference)) else {
            return false;
        };
        match fit_depolarizing(&tw) {
            Ok(fit) => fit.is_depolarizing() && tw.map_distance(&tr) < DESIGN_TOL,
            Err(_) => false,
        }
    })
}
