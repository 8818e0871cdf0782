//! Seeded random states, channels and ensembles for property checks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channels::KrausChannel;
use crate::ensembles::{bloch_to_state, BlochVec, DensityOp, Ensemble};
use crate::qmat::{c, CMat};
use num_complex::Complex64;

fn gaussian_c(rng: &mut impl Rng) -> Complex64 {
    c(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Point uniformly distributed in the unit Bloch ball.
pub fn random_bloch(rng: &mut impl Rng) -> BlochVec {
    loop {
        let v = BlochVec::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm() <= 1.0 {
            return v;
        }
    }
}

/// Uniformly random direction on the Bloch sphere.
pub fn random_direction(rng: &mut impl Rng) -> BlochVec {
    loop {
        let v = random_bloch(rng);
        let n = v.norm();
        if n > 1e-3 {
            return v.scale(1.0 / n);
        }
    }
}

pub fn random_state(rng: &mut impl Rng) -> DensityOp {
    bloch_to_state(random_bloch(rng)).expect("point inside the ball")
}

pub fn random_pure_state(rng: &mut impl Rng) -> DensityOp {
    bloch_to_state(random_direction(rng)).expect("unit vector")
}

/// Random qubit channel with two Kraus operators.
///
/// Two Gaussian 2×2 complex matrices are stacked into a 4×2 matrix whose
/// columns are Gram–Schmidt orthonormalized; the resulting isometry V
/// splits into K₁ (top block) and K₂ (bottom block) with K₁†K₁ + K₂†K₂ = V†V = I.
pub fn random_channel(rng: &mut impl Rng) -> KrausChannel {
    let mut cols = [[c(0.0, 0.0); 4]; 2];
    for col in cols.iter_mut() {
        for z in col.iter_mut() {
            *z = gaussian_c(rng);
        }
    }
    let norm = |v: &[Complex64; 4]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&cols[0]);
    for z in cols[0].iter_mut() {
        *z /= n0;
    }
    let proj: Complex64 = cols[0]
        .iter()
        .zip(&cols[1])
        .map(|(a, b)| a.conj() * b)
        .sum();
    let first = cols[0];
    for (z, a) in cols[1].iter_mut().zip(&first) {
        *z -= proj * a;
    }
    let n1 = norm(&cols[1]);
    for z in cols[1].iter_mut() {
        *z /= n1;
    }
    let block = |offset: usize| CMat::from_fn(2, |i, j| cols[j][offset + i]);
    KrausChannel::new(vec![block(0), block(2)]).expect("isometry gives a CPTP map")
}

/// Random priors from a flat Dirichlet, floored so that no prior is tiny.
pub fn random_priors(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| 0.05 - rng.random::<f64>().max(1e-300).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

/// Random qubit ensemble of `n` states (mixed or pure with equal chance).
pub fn random_ensemble(rng: &mut impl Rng, n: usize, equal_priors: bool) -> Ensemble {
    let states: Vec<DensityOp> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                random_pure_state(rng)
            } else {
                random_state(rng)
            }
        })
        .collect();
    if equal_priors {
        return Ensemble::uniform(states).expect("valid ensemble");
    }
    let mut priors = random_priors(rng, n);
    // absorb rounding into the last prior so the sum is exactly 1 within tolerance
    let head: f64 = priors[..n - 1].iter().sum();
    priors[n - 1] = 1.0 - head;
    Ensemble::new(priors.into_iter().zip(states).collect()).expect("valid ensemble")
}
