//! Minimum-error discrimination.
//!
//! Two states are handled in closed form (Helstrom). For more states the
//! solver runs the fixed-point iteration
//! `M_x ← L⁻¹ q_xρ_x M_x q_xρ_x L⁻¹`, `L = (Σ_y q_yρ_y M_y q_yρ_y)^{1/2}`,
//! and accepts a point only when the Holevo optimality certificate holds:
//! `Γ = Σ_y q_yρ_y M_y` Hermitian and `Γ − q_xρ_x ≥ 0` for every x.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::KrausChannel;
use crate::ensembles::{BlochVec, Ensemble};
use crate::error::{Error, Result};
use crate::qmat::{herm_eig, min_eigenvalue, trace_norm, CMat};

pub const POVM_TOL: f64 = 1e-9;
/// Certificate residual accepted as optimal.
pub const CERT_TOL: f64 = 1e-8;
pub const OMP_TOL: f64 = 1e-9;
/// Slack used when comparing the two sides of the triviality test.
pub const TRIVIAL_TOL: f64 = 1e-12;

const RESTARTS: usize = 20;
const MAX_ITERS: usize = 100_000;
const CHECK_EVERY: usize = 25;
const SOLVER_SEED: u64 = 0x05_eed0_f0b7;

/// A measurement: PSD elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMat>,
}

impl Povm {
    pub fn new(elements: Vec<CMat>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidPovm("no elements".into()))?;
        let d = first.dim();
        let mut sum = CMat::zeros(d);
        for (i, m) in elements.iter().enumerate() {
            if m.dim() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: m.dim(),
                });
            }
            if !m.is_hermitian(POVM_TOL) {
                return Err(Error::InvalidPovm(format!("element {i} is not Hermitian")));
            }
            let min = min_eigenvalue(&m.hermitian_part())?;
            if min < -POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {i} has negative eigenvalue {min:.3e}"
                )));
            }
            sum = &sum + m;
        }
        let err = sum.max_abs_diff(&CMat::identity(d));
        if !(err < POVM_TOL) {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {err:.3e}"
            )));
        }
        Ok(Povm { elements })
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Born probabilities tr(ρ M_k), clipped at zero.
    pub fn probabilities(&self, rho: &CMat) -> Vec<f64> {
        self.elements
            .iter()
            .map(|m| (m * rho).trace().re.max(0.0))
            .collect()
    }

    /// Max-entry distance between corresponding elements.
    pub fn max_abs_diff(&self, other: &Povm) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// M_x = w_x s(m_x) with s(m) = (I + m·σ)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmBloch {
    pub items: Vec<(f64, BlochVec)>,
}

impl PovmBloch {
    pub fn to_matrices(&self) -> Vec<CMat> {
        self.items
            .iter()
            .map(|(w, m)| m.half_projector().scale(*w))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DiscrimResult {
    pub povm: Povm,
    pub p_guess: f64,
    pub trivial: bool,
    pub certificate_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpCheckResult {
    pub holds: bool,
    pub kappa: Option<f64>,
    pub max_residual: f64,
    /// Pairs (x, y) with q_xρ_x = q_yρ_y, skipped in the fit.
    pub degenerate_pairs: Vec<(usize, usize)>,
}

fn check_counts(e: &Ensemble, m: &Povm) -> Result<()> {
    if m.len() != e.len() {
        return Err(Error::CountMismatch {
            povm: m.len(),
            states: e.len(),
        });
    }
    if m.dim() != e.dim() {
        return Err(Error::DimMismatch {
            expected: e.dim(),
            got: m.dim(),
        });
    }
    Ok(())
}

/// Σ_x q_x tr(ρ_x M_x)
pub fn success_probability(e: &Ensemble, m: &Povm) -> Result<f64> {
    check_counts(e, m)?;
    Ok(e.items()
        .iter()
        .zip(m.elements())
        .map(|((q, rho), mx)| q * (rho.mat() * mx).trace().re)
        .sum())
}

/// max(‖Γ−Γ†‖_max, max_x −λ_min(Γ_h − q_xρ_x)), floored at zero, with
/// Γ = Σ_y q_yρ_y M_y. Below [`CERT_TOL`] the POVM is globally optimal.
pub fn certify_optimality(e: &Ensemble, m: &Povm) -> Result<f64> {
    check_counts(e, m)?;
    let weighted = e.weighted();
    Ok(certificate(&weighted, m.elements()))
}

fn certificate(weighted: &[CMat], elements: &[CMat]) -> f64 {
    let d = weighted[0].dim();
    let mut gamma = CMat::zeros(d);
    for (w, m) in weighted.iter().zip(elements) {
        gamma = &gamma + &(w * m);
    }
    let asym = gamma.max_abs_diff(&gamma.adjoint());
    let gh = gamma.hermitian_part();
    let mut worst = 0.0f64;
    for w in weighted {
        match min_eigenvalue(&(&gh - w)) {
            Ok(min) => worst = worst.max(-min),
            Err(_) => return f64::INFINITY,
        }
    }
    asym.max(worst)
}

/// Whether guessing a single state without measuring is optimal.
///
/// Guessing j is optimal iff q_jρ_j − q_kρ_k ≥ 0 for all k, which is the
/// equality case q_j − q_k = ‖q_jρ_j − q_kρ_k‖₁ of the trace-norm bound.
/// For two states this is the negation of |q₁−q₂| < ‖q₁ρ₁−q₂ρ₂‖₁.
pub fn is_trivial(e: &Ensemble) -> bool {
    trivial_index(e).is_some()
}

fn trivial_index(e: &Ensemble) -> Option<usize> {
    let items = e.items();
    (0..items.len()).find(|&j| {
        let (qj, rj) = &items[j];
        items
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .all(|(_, (qk, rk))| {
                let diff = &rj.mat().scale(*qj) - &rk.mat().scale(*qk);
                qj - qk >= trace_norm(&diff) - TRIVIAL_TOL
            })
    })
}

/// Two-state optimum from the spectral split of q₁ρ₁ − q₂ρ₂.
/// Zero eigenvalues go to M₁.
pub fn helstrom(e: &Ensemble) -> Result<DiscrimResult> {
    if e.len() != 2 {
        return Err(Error::UnsupportedSize(e.len()));
    }
    let w = e.weighted();
    let lambda = &w[0] - &w[1];
    let eig = herm_eig(&lambda.hermitian_part())?;
    let m1 = eig.projector_where(|v| v >= -TRIVIAL_TOL);
    let m2 = &CMat::identity(e.dim()) - &m1;
    let norm: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum();
    let povm = Povm::new(vec![m1, m2])?;
    let certificate_residual = certificate(&w, povm.elements());
    Ok(DiscrimResult {
        povm,
        p_guess: 0.5 * (1.0 + norm),
        trivial: is_trivial(e),
        certificate_residual,
    })
}

/// Square-root measurement S^{-1/2} q_xρ_x S^{-1/2}, S = Σ q_xρ_x.
pub fn square_root_measurement(e: &Ensemble) -> Result<Povm> {
    Povm::new(srm_elements(&e.weighted())?)
}

fn srm_elements(weighted: &[CMat]) -> Result<Vec<CMat>> {
    let d = weighted[0].dim();
    let mut total = CMat::zeros(d);
    for w in weighted {
        total = &total + w;
    }
    let eig = herm_eig(&total.hermitian_part())?;
    let inv_root = eig.map(|v| if v > 1e-14 { 1.0 / v.sqrt() } else { 0.0 });
    let share = eig
        .projector_where(|v| v <= 1e-14)
        .scale(1.0 / weighted.len() as f64);
    Ok(weighted
        .iter()
        .map(|w| (&(&(&inv_root * w) * &inv_root) + &share).hermitian_part())
        .collect())
}

/// One step: M'_x = L⁻¹ A_x M_x A_x L⁻¹ with L = (Σ A_x M_x A_x)^{1/2}, A_x = q_xρ_x.
fn fixed_point_step(weighted: &[CMat], current: &[CMat]) -> Result<Vec<CMat>> {
    let d = weighted[0].dim();
    let terms: Vec<CMat> = weighted
        .iter()
        .zip(current)
        .map(|(a, m)| (&(a * m) * a).hermitian_part())
        .collect();
    let mut total = CMat::zeros(d);
    for t in &terms {
        total = &total + t;
    }
    let eig = herm_eig(&total)?;
    let scale = eig
        .eigenvalues
        .last()
        .copied()
        .unwrap_or(0.0)
        .abs()
        .max(1e-300);
    let l_inv = eig.map(|v| {
        if v > 1e-14 * scale {
            1.0 / v.sqrt()
        } else {
            0.0
        }
    });
    // projector onto the kernel of L keeps the elements summing to I
    let kernel = eig.projector_where(|v| v <= 1e-14 * scale);
    let share = kernel.scale(1.0 / terms.len() as f64);
    Ok(terms
        .iter()
        .map(|t| (&(&(&l_inv * t) * &l_inv) + &share).hermitian_part())
        .collect())
}

fn random_start(rng: &mut impl Rng, n: usize, d: usize) -> Result<Vec<CMat>> {
    // random PSD operators, then normalized to sum to I
    let ops: Vec<CMat> = (0..n)
        .map(|_| {
            let g = CMat::from_fn(d, |_, _| {
                crate::qmat::c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            (&g * &g.adjoint()).hermitian_part()
        })
        .collect();
    let mut total = CMat::zeros(d);
    for o in &ops {
        total = &total + o;
    }
    let inv_root = herm_eig(&total)?.map(|v| 1.0 / v.max(1e-300).sqrt());
    Ok(ops
        .iter()
        .map(|o| (&(&inv_root * o) * &inv_root).hermitian_part())
        .collect())
}

/// Runs the fixed-point iteration from `start`. Returns the best point seen
/// and its certificate residual.
fn iterate(weighted: &[CMat], start: Vec<CMat>) -> Result<(Vec<CMat>, f64)> {
    let mut current = start;
    let mut best = (current.clone(), certificate(weighted, &current));
    if best.1 < CERT_TOL {
        return Ok(best);
    }
    for it in 1..=MAX_ITERS {
        current = fixed_point_step(weighted, &current)?;
        if it % CHECK_EVERY == 0 {
            let r = certificate(weighted, &current);
            if r < best.1 {
                best = (current.clone(), r);
            }
            if r < CERT_TOL {
                break;
            }
        }
    }
    Ok(best)
}

/// Certified minimum-error measurement for a qubit ensemble of 2..=8 states.
pub fn optimal_discrimination(e: &Ensemble) -> Result<DiscrimResult> {
    if e.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: e.dim(),
        });
    }
    if !(2..=8).contains(&e.len()) {
        return Err(Error::UnsupportedSize(e.len()));
    }
    if e.len() == 2 {
        return helstrom(e);
    }
    let weighted = e.weighted();
    let trivial = trivial_index(e);
    if let Some(j) = trivial {
        let elements = (0..e.len())
            .map(|k| {
                if k == j {
                    CMat::identity(2)
                } else {
                    CMat::zeros(2)
                }
            })
            .collect();
        let povm = Povm::new(elements)?;
        let certificate_residual = certificate(&weighted, povm.elements());
        if certificate_residual < CERT_TOL {
            return Ok(DiscrimResult {
                p_guess: success_probability(e, &povm)?,
                povm,
                trivial: true,
                certificate_residual,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SOLVER_SEED);
    let mut best_residual = f64::INFINITY;
    for restart in 0..RESTARTS {
        let start = if restart == 0 {
            srm_elements(&weighted)?
        } else {
            random_start(&mut rng, e.len(), 2)?
        };
        let (elements, residual) = iterate(&weighted, start)?;
        best_residual = best_residual.min(residual);
        if residual < CERT_TOL {
            let povm = Povm::new(elements)?;
            return Ok(DiscrimResult {
                p_guess: success_probability(e, &povm)?,
                povm,
                trivial: trivial.is_some(),
                certificate_residual: residual,
            });
        }
    }
    Err(Error::ConvergenceFailure(best_residual))
}

/// w_x = tr M_x and m_x the Bloch vector of M_x / w_x; zero elements map to (0, 0).
pub fn povm_bloch_decompose(m: &Povm) -> Result<PovmBloch> {
    if m.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: m.dim(),
        });
    }
    let items = m
        .elements()
        .iter()
        .map(|mx| {
            let w = mx.trace().re;
            if w.abs() < POVM_TOL {
                (0.0, BlochVec::ZERO)
            } else {
                (w, BlochVec::of_matrix(mx).scale(1.0 / w))
            }
        })
        .collect();
    Ok(PovmBloch { items })
}

/// w_x s(m_x) ↦ w_x s(−m_x) for every element.
pub fn update_measurement(m: &Povm) -> Result<Povm> {
    let decomposed = povm_bloch_decompose(m)?;
    let flipped = PovmBloch {
        items: decomposed
            .items
            .iter()
            .map(|(w, v)| (*w, v.scale(-1.0)))
            .collect(),
    };
    Povm::new(flipped.to_matrices()).map_err(|_| Error::NotResolvable)
}

/// Checks (q_xρ_x − q_yρ_y) = κ⁻¹ (q_xN[ρ_x] − q_yN[ρ_y]) for one κ ∈ (0, 1].
pub fn omp_check(e: &Ensemble, n: &KrausChannel) -> Result<OmpCheckResult> {
    if e.dim() != n.dim() {
        return Err(Error::DimMismatch {
            expected: e.dim(),
            got: n.dim(),
        });
    }
    let before = e.weighted();
    let after: Vec<CMat> = e
        .items()
        .iter()
        .map(|(q, rho)| n.apply_op(rho.mat()).scale(*q))
        .collect();

    let mut pairs = Vec::new();
    let mut degenerate_pairs = Vec::new();
    for x in 0..before.len() {
        for y in x + 1..before.len() {
            let delta = &before[x] - &before[y];
            let delta_out = &after[x] - &after[y];
            let norm2 = delta.hs_inner(&delta).re;
            if norm2.sqrt() < OMP_TOL {
                degenerate_pairs.push((x, y));
                continue;
            }
            let kappa = delta.hs_inner(&delta_out).re / norm2;
            pairs.push((kappa, delta, delta_out));
        }
    }
    if pairs.is_empty() {
        return Err(Error::DegeneratePair);
    }
    let kappas: Vec<f64> = pairs.iter().map(|(k, _, _)| *k).collect();
    let kappa = kappas.iter().sum::<f64>() / kappas.len() as f64;
    let spread = kappas.iter().map(|k| (k - kappa).abs()).fold(0.0, f64::max);
    let max_residual = pairs
        .iter()
        .map(|(_, d, d_out)| d_out.max_abs_diff(&d.scale(kappa)))
        .fold(0.0, f64::max);
    let holds = spread < OMP_TOL && kappa > 0.0 && kappa <= 1.0 + OMP_TOL && max_residual < OMP_TOL;
    Ok(OmpCheckResult {
        holds,
        kappa: holds.then_some(kappa.min(1.0)),
        max_residual,
        degenerate_pairs,
    })
}
