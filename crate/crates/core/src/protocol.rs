//! The channel-coding protocol between a sender and a receiver.
//!
//! Per round the sender draws a state label x and a design index j, applies
//! U_j before the channel, and announces j; the receiver undoes U_j and
//! measures with the measurement that is optimal for the noiseless ensemble.
//! Averaged over j the effective channel is the twirl of N, which is
//! depolarizing, so the noiseless optimum (possibly relabeled) stays optimal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::discrim::{optimal_discrimination, success_probability, update_measurement, Povm};
use crate::ensembles::{apply_channel_to_ensemble, Ensemble};
use crate::error::{Error, Result};
use crate::qmat::CMat;
use crate::twirl::{conjugated, fit_depolarizing, twirl_channel, TwoDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
}

/// One protocol round: the prepared label, the shared design index and the
/// receiver's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub round: usize,
    pub x: usize,
    pub j: usize,
    pub outcome: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub mode: Mode,
    pub seed: Option<u64>,
    pub rounds: Vec<Round>,
}

impl ProtocolTranscript {
    /// One JSON object per line, in round order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r).expect("plain struct serializes"));
            out.push('\n');
        }
        out
    }

    pub fn successes(&self) -> usize {
        self.rounds.iter().filter(|r| r.x == r.outcome).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    /// Guessing probability without noise, using the fixed measurement.
    pub p_id: f64,
    /// Re-optimized guessing probability after the raw channel.
    #[serde(rename = "p_N")]
    pub p_n: f64,
    /// The fixed measurement used directly after the raw channel.
    #[serde(rename = "p_N_fixed")]
    pub p_n_fixed: f64,
    /// Success with channel coding (exact, or the empirical fraction when sampled).
    #[serde(rename = "p_TN")]
    pub p_tn: f64,
    pub eta_fit: f64,
    pub measurement_updated: bool,
}

struct Prepared {
    twirled: KrausChannel,
    receiver: Povm,
    eta_fit: f64,
    updated: bool,
    p_id: f64,
    p_n: f64,
    p_n_fixed: f64,
}

fn prepare(e: &Ensemble, n: &KrausChannel, w: &TwoDesign, fixed_m: &Povm) -> Result<Prepared> {
    if !e.has_equal_priors() {
        return Err(Error::NotEqualPriors);
    }
    if fixed_m.len() != e.len() {
        return Err(Error::CountMismatch {
            povm: fixed_m.len(),
            states: e.len(),
        });
    }
    let twirled = twirl_channel(n, w)?;
    let fit = fit_depolarizing(&twirled)?;
    let updated = fit.shrink() < 0.0;
    let receiver = if updated {
        update_measurement(fixed_m)?
    } else {
        fixed_m.clone()
    };
    let noisy = apply_channel_to_ensemble(e, n)?;
    Ok(Prepared {
        p_id: success_probability(e, fixed_m)?,
        p_n: optimal_discrimination(&noisy)?.p_guess,
        p_n_fixed: success_probability(&noisy, fixed_m)?,
        twirled,
        receiver,
        eta_fit: fit.eta,
        updated,
    })
}

/// Evaluates the protocol on the averaged (twirled) channel.
pub fn run_exact(
    e: &Ensemble,
    n: &KrausChannel,
    w: &TwoDesign,
    fixed_m: &Povm,
) -> Result<ProtocolReport> {
    let p = prepare(e, n, w, fixed_m)?;
    let coded = apply_channel_to_ensemble(e, &p.twirled)?;
    Ok(ProtocolReport {
        p_id: p.p_id,
        p_n: p.p_n,
        p_n_fixed: p.p_n_fixed,
        p_tn: success_probability(&coded, &p.receiver)?,
        eta_fit: p.eta_fit,
        measurement_updated: p.updated,
    })
}

/// Random stream for one round, independent of evaluation order.
fn round_rng(seed: u64, round: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round as u64);
    rng
}

fn sample_index(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left a sliver above the cumulative sum: take the last outcome with mass
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Plays the protocol round by round and reports the empirical success rate.
pub fn run_sampled(
    e: &Ensemble,
    n: &KrausChannel,
    w: &TwoDesign,
    fixed_m: &Povm,
    rounds: usize,
    seed: u64,
) -> Result<(ProtocolTranscript, ProtocolReport)> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be at least 1".into()));
    }
    let p = prepare(e, n, w, fixed_m)?;

    // outcome distribution for every (design element, state) pair
    let per_design: Vec<KrausChannel> = w.unitaries().iter().map(|u| conjugated(n, u)).collect();
    let table: Vec<Vec<Vec<f64>>> = per_design
        .iter()
        .map(|ch| {
            e.states()
                .map(|rho| {
                    let out: CMat = ch.apply_op(rho.mat());
                    p.receiver
                        .probabilities(&out)
                        .into_iter()
                        .map(|q| q.max(0.0))
                        .collect()
                })
                .collect()
        })
        .collect();

    let n_states = e.len();
    let n_design = w.len();
    let log: Vec<Round> = (0..rounds)
        .into_par_iter()
        .map(|round| {
            let mut rng = round_rng(seed, round);
            let x = rng.random_range(0..n_states);
            let j = rng.random_range(0..n_design);
            let outcome = sample_index(&mut rng, &table[j][x]);
            Round {
                round,
                x,
                j,
                outcome,
            }
        })
        .collect();

    let transcript = ProtocolTranscript {
        mode: Mode::Sampled,
        seed: Some(seed),
        rounds: log,
    };
    let report = ProtocolReport {
        p_id: p.p_id,
        p_n: p.p_n,
        p_n_fixed: p.p_n_fixed,
        p_tn: transcript.successes() as f64 / rounds as f64,
        eta_fit: p.eta_fit,
        measurement_updated: p.updated,
    };
    Ok((transcript, report))
}
