//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs with a custom main so the verdict lines always reach the output.
//! Tolerances and runtime budgets are pinned next to each check.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chancode::channels::{depolarizing, fixed_state_channel, flip_channel, FlipAxis};
use chancode::circuit::{channel_of_circuit, figure3, flip_block, Circuit, Figure3Config, Panel};
use chancode::cli;
use chancode::discrim::{
    certify_optimality, helstrom, is_trivial, omp_check, optimal_discrimination,
    update_measurement, Povm,
};
use chancode::ensembles::{apply_channel_to_ensemble, builtin, Builtin, Ensemble};
use chancode::qmat::{c, pauli, trace_norm, CMat};
use chancode::random::{random_channel, random_ensemble, random_state};
use chancode::twirl::{fit_depolarizing, tetrahedral_design, twirl_channel};
use common::{grid_oracle, theo_bb84, theo_sz, BlochEnsemble};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    check: Check,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---- 1 ----

const C1_RESIDUAL: f64 = 1e-9;
const C1_RANGE_SLACK: f64 = 1e-12;

fn twirl_to_depolarizing() -> Result<String, String> {
    let w = tetrahedral_design();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut lo, mut hi) = (0.0f64, f64::MAX, f64::MIN);
    for k in 0..200 {
        let fit = fit_depolarizing(&twirl_channel(&random_channel(&mut rng), &w).map_err(err)?)
            .map_err(err)?;
        ensure(fit.residual < C1_RESIDUAL, || {
            format!("channel {k}: residual {:.3e}", fit.residual)
        })?;
        let s = fit.shrink();
        ensure(
            (-1.0 / 3.0 - C1_RANGE_SLACK..=1.0 + C1_RANGE_SLACK).contains(&s),
            || format!("channel {k}: 1-eta = {s}"),
        )?;
        worst = worst.max(fit.residual);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok(format!(
        "200 channels, max residual {worst:.1e}, 1-eta in [{lo:.3}, {hi:.3}]"
    ))
}

// ---- 2 and 10 share the CLI output ----

fn figure3_csv(panel: &str, extra: &[&str]) -> Result<Vec<Vec<f64>>, String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let out = dir.path().join("fig.csv");
    let mut args = vec![
        "chancode",
        "figure3",
        "--panel",
        panel,
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let code = cli::run(args);
    ensure(code == 0, || format!("figure3 exited with {code}"))?;
    let text = std::fs::read_to_string(&out).map_err(err)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    ensure(
        header == "p_f,p_N_analytic,p_TN_analytic,p_N_sim,p_TN_sim,p_N_noise,p_TN_noise",
        || format!("unexpected header '{header}'"),
    )?;
    lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().map_err(err))
                .collect()
        })
        .collect()
}

const C2_TOL: f64 = 1e-12;

fn figure3_analytic() -> Result<String, String> {
    let mut checked = 0;
    for (panel, theo) in [("a", theo_sz as fn(f64) -> (f64, f64)), ("b", theo_bb84)] {
        let rows = figure3_csv(panel, &[])?;
        ensure(rows.len() == 21, || {
            format!("panel {panel}: {} rows", rows.len())
        })?;
        for (k, row) in rows.iter().enumerate() {
            let p = k as f64 / 20.0;
            ensure((row[0] - p).abs() < C2_TOL, || {
                format!("panel {panel} row {k}: p_f {}", row[0])
            })?;
            let (n, tn) = theo(p);
            ensure(
                (row[1] - n).abs() < C2_TOL && (row[2] - tn).abs() < C2_TOL,
                || {
                    format!(
                        "panel {panel} p_f={p}: got ({}, {}), expected ({n}, {tn})",
                        row[1], row[2]
                    )
                },
            )?;
            checked += 1;
        }
        if panel == "a" {
            let mid = &rows[10];
            ensure(
                (mid[1] - 0.5).abs() < C2_TOL && (mid[2] - 2.0 / 3.0).abs() < C2_TOL,
                || format!("panel a at 0.5: ({}, {})", mid[1], mid[2]),
            )?;
        }
    }
    Ok(format!(
        "{checked} sweep points match the closed forms within {C2_TOL:.0e}"
    ))
}

// ---- 3 ----

const C3_SIGMAS: f64 = 3.0;
const C3_MIN_FRACTION: f64 = 0.99;

fn figure3_sampled() -> Result<String, String> {
    let w = tetrahedral_design();
    let (mut inside, mut total) = (0usize, 0usize);
    for seed in 0..20u64 {
        for panel in [Panel::A, Panel::B] {
            let mut cfg = Figure3Config::new(panel);
            cfg.seed = seed;
            for row in figure3(&cfg, &w).map_err(err)? {
                for (sim, exact, sigma) in [
                    (row.p_n_sim, row.p_n_analytic, row.sigma_n),
                    (row.p_tn_sim, row.p_tn_analytic, row.sigma_tn),
                ] {
                    total += 1;
                    // a deterministic point (sigma = 0) must be reproduced exactly
                    if (sim - exact).abs() <= C3_SIGMAS * sigma + 1e-12 {
                        inside += 1;
                    }
                }
            }
        }
    }
    let frac = inside as f64 / total as f64;
    ensure(frac >= C3_MIN_FRACTION, || {
        format!("{inside}/{total} within 3 sigma")
    })?;
    Ok(format!(
        "{inside}/{total} sampled values within 3 sigma ({:.2}%), 8000 shots each",
        100.0 * frac
    ))
}

// ---- 4 ----

const C4_TOL: f64 = 0.005;
const C4_MIN_DIFF: f64 = 0.01;

fn printed_trine(a: f64, b: f64, re: f64, im: f64) -> Vec<CMat> {
    vec![
        CMat::from_rows(&[[c(a, 0.), c(a, 0.)], [c(a, 0.), c(a, 0.)]]),
        CMat::from_rows(&[[c(b, 0.), c(re, -im)], [c(re, im), c(b, 0.)]]),
        CMat::from_rows(&[[c(b, 0.), c(re, im)], [c(re, -im), c(b, 0.)]]),
    ]
}

fn max_entry_diff(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

fn trine_counterexample() -> Result<String, String> {
    let trine = builtin(Builtin::TrineMod);
    let before = optimal_discrimination(&trine).map_err(err)?;
    let d1 = max_entry_diff(
        before.povm.elements(),
        &printed_trine(0.44, 0.28, -0.22, 0.17),
    );
    ensure(d1 < C4_TOL, || format!("first display off by {d1:.4}"))?;

    let noisy = apply_channel_to_ensemble(&trine, &depolarizing(1.0 / 3.0, 2).map_err(err)?)
        .map_err(err)?;
    let after = optimal_discrimination(&noisy).map_err(err)?;
    let d2 = max_entry_diff(
        after.povm.elements(),
        &printed_trine(0.46, 0.27, -0.23, 0.14),
    );
    ensure(d2 < C4_TOL, || format!("second display off by {d2:.4}"))?;

    let moved = before.povm.max_abs_diff(&after.povm);
    ensure(moved > C4_MIN_DIFF, || {
        format!("POVMs differ by only {moved:.4}")
    })?;
    let omp = omp_check(&trine, &depolarizing(1.0 / 3.0, 2).map_err(err)?).map_err(err)?;
    ensure(!omp.holds, || "OMP condition unexpectedly holds".into())?;
    Ok(format!(
        "display errors {d1:.4} and {d2:.4}; POVMs differ by {moved:.3}"
    ))
}

// ---- 5 ----

const C5_TOL: f64 = 1e-8;
const C5_TRIALS: usize = 1000;
const C5_MAX_DRAWS: usize = 50_000;

/// Helstrom projector onto the positive part of q1ρ1 − q2ρ2.
fn helstrom_projector(e: &Ensemble) -> Result<CMat, String> {
    Ok(helstrom(e).map_err(err)?.povm.elements()[0].clone())
}

fn two_state_preservation() -> Result<String, String> {
    let w = tetrahedral_design();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut in_scope, mut relabeled, mut trivial) = (0usize, 0usize, 0usize);
    for k in 0.. {
        if in_scope == C5_TRIALS {
            break;
        }
        ensure(k < C5_MAX_DRAWS, || {
            format!("only {in_scope} non-trivial trials in {k} draws")
        })?;
        let e = random_ensemble(&mut rng, 2, false);
        let n = random_channel(&mut rng);
        let tn = twirl_channel(&n, &w).map_err(err)?;
        let shrink = fit_depolarizing(&tn).map_err(err)?.shrink();
        let coded = apply_channel_to_ensemble(&e, &tn).map_err(err)?;

        // outside the claim: a trivial measurement before or after the channel
        if is_trivial(&e) || is_trivial(&coded) {
            let wts = e.weighted();
            let gap = (e.items()[0].0 - e.items()[1].0).abs();
            let predicted = gap >= shrink.abs() * trace_norm(&(&wts[0] - &wts[1])) - 1e-12;
            ensure(is_trivial(&e) || predicted == is_trivial(&coded), || {
                format!("trial {k}: triviality after the channel disagrees with |q1-q2| vs |1-eta|·‖Λ‖₁")
            })?;
            trivial += 1;
            continue;
        }
        in_scope += 1;
        let p0 = helstrom_projector(&e)?;
        let p1 = helstrom_projector(&coded)?;
        let expected = if shrink < 0.0 {
            relabeled += 1;
            &CMat::identity(2) - &p0
        } else {
            p0.clone()
        };
        let d = p1.max_abs_diff(&expected);
        ensure(d < C5_TOL, || {
            format!("trial {k}: projector moved by {d:.3e} (1-eta = {shrink:.4})")
        })?;
    }
    Ok(format!(
        "{in_scope} non-trivial trials preserved ({relabeled} via relabel), {trivial} trivial trials match the triviality condition"
    ))
}

// ---- 6 ----

const C6_RESIDUAL: f64 = 1e-8;

fn update_proposition() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = 2 + k % 3;
        let e = random_ensemble(&mut rng, n, true);
        let shrink: f64 = -rng.random_range(1e-3..=1.0 / 3.0);
        let noisy = apply_channel_to_ensemble(&e, &depolarizing(1.0 - shrink, 2).map_err(err)?)
            .map_err(err)?;
        let m: Povm = optimal_discrimination(&e).map_err(err)?.povm;
        let updated = update_measurement(&m).map_err(err)?;
        let r = certify_optimality(&noisy, &updated).map_err(err)?;
        ensure(r < C6_RESIDUAL, || {
            format!("ensemble {k} (n={n}, 1-eta={shrink:.3}): residual {r:.3e}")
        })?;
        worst = worst.max(r);
    }
    Ok(format!(
        "200 ensembles, max certificate residual {worst:.1e}"
    ))
}

// ---- 7 ----

const C7_TOL: f64 = 1e-9;

fn omp_sufficiency_only() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..100 {
        let e = random_ensemble(&mut rng, 2 + k % 4, true);
        let sigma = random_state(&mut rng);
        let eta: f64 = rng.random_range(0.0..1.0);
        let r = omp_check(&e, &fixed_state_channel(&sigma, eta).map_err(err)?).map_err(err)?;
        ensure(r.holds && r.max_residual < C7_TOL, || {
            format!("trial {k}: check failed ({r:?})")
        })?;
        let kappa = r.kappa.ok_or("missing kappa")?;
        ensure((kappa - (1.0 - eta)).abs() < C7_TOL, || {
            format!("trial {k}: kappa {kappa} vs {}", 1.0 - eta)
        })?;
    }

    // unequal priors under depolarizing: preserved, yet the condition fails
    let mut shown = 0;
    let mut attempts = 0;
    while shown < 100 {
        attempts += 1;
        ensure(attempts < 10_000, || {
            "could not draw preserved unequal-prior ensembles".into()
        })?;
        let e = random_ensemble(&mut rng, 2, false);
        let eta: f64 = rng.random_range(0.05..0.95);
        let d = depolarizing(eta, 2).map_err(err)?;
        let noisy = apply_channel_to_ensemble(&e, &d).map_err(err)?;
        if is_trivial(&e) || is_trivial(&noisy) {
            continue;
        }
        let moved = helstrom_projector(&noisy)?.max_abs_diff(&helstrom_projector(&e)?);
        ensure(moved < C5_TOL, || {
            format!("depolarizing moved the projector by {moved:.3e}")
        })?;
        let r = omp_check(&e, &d).map_err(err)?;
        ensure(!r.holds, || {
            format!(
                "OMP condition held for priors {:?}",
                e.priors().collect::<Vec<_>>()
            )
        })?;
        shown += 1;
    }
    Ok("100 fixed-state trials hold with kappa = 1-eta; 100 preserved unequal-prior pairs fail the condition".into())
}

// ---- 8 ----

const C8_SLACK: f64 = 2e-3;

fn solver_vs_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut max_excess = f64::MIN;
    let mut max_gap = 0.0f64;
    for k in 0..50 {
        let n = 2 + k % 2;
        let e = random_ensemble(&mut rng, n, k % 4 >= 2);
        let p = optimal_discrimination(&e).map_err(err)?.p_guess;
        let oracle = grid_oracle(&BlochEnsemble::of(&e));
        ensure(oracle <= p + C8_SLACK, || {
            format!("ensemble {k}: oracle {oracle} > certified {p}")
        })?;
        max_excess = max_excess.max(oracle - p);
        max_gap = max_gap.max(p - oracle);
    }
    Ok(format!("50 ensembles; oracle - certified at most {max_excess:.1e}, grid shortfall at most {max_gap:.1e}"))
}

// ---- 9 ----

const C9_TOL: f64 = 1e-12;

fn circuit_fidelity() -> Result<String, String> {
    let mut worst = 0.0f64;
    for k in 0..=20 {
        let p = k as f64 / 20.0;
        for axis in [FlipAxis::X, FlipAxis::Y] {
            let d = channel_of_circuit(axis, p)
                .map_err(err)?
                .map_distance(&flip_channel(axis, p).map_err(err)?);
            ensure(d < C9_TOL, || {
                format!("{axis:?} flip at {p}: map distance {d:.3e}")
            })?;
            worst = worst.max(d);
        }
    }

    let mut circ = Circuit::new();
    for g in flip_block(FlipAxis::Y) {
        circ.push(g).map_err(err)?;
    }
    let u = circ.unitary();
    // basis index b0 + 2·b1 with the control on q0
    let block = |a: usize, b: usize| CMat::from_fn(2, |i, j| u[([a, b][i], [a, b][j])]);
    let idle = block(0, 2).max_abs_diff(&CMat::identity(2));
    let active = block(1, 3);
    let cross = [(0, 1), (0, 3), (2, 1), (2, 3)]
        .iter()
        .map(|&(i, j)| u[(i, j)].norm().max(u[(j, i)].norm()))
        .fold(0.0, f64::max);
    // the flipped branch applies Y; its phase is compared through the action on the Pauli basis
    let y = pauli::y();
    let action = pauli::basis()
        .iter()
        .map(|s| (&(&(&active * s) * &active.adjoint()) - &(&(&y * s) * &y)).max_abs())
        .fold(0.0, f64::max);
    let unitary = active.unitarity_error();
    ensure(
        idle < C9_TOL && cross < C9_TOL && action < C9_TOL && unitary < C9_TOL,
        || format!("Y block: idle {idle:.1e}, cross {cross:.1e}, action {action:.1e}"),
    )?;
    let phase = (&active * &y).trace() / c(2.0, 0.0);
    Ok(format!(
        "map distance at most {worst:.1e} over 42 channels; Y block acts as controlled-Y, flipped branch = ({:.0}{:+.0}i)·Y",
        phase.re, phase.im
    ))
}

// ---- 10 ----

const C10_TOL: f64 = 1e-12;

fn shot_noise_fit() -> Result<String, String> {
    for (panel, eta, offset) in [("a", 0.05, 0.05 / 2.0), ("b", 0.15, 0.15 / 4.0)] {
        for row in figure3_csv(panel, &[])? {
            for (analytic, noisy) in [(row[1], row[5]), (row[2], row[6])] {
                let expected = (1.0 - eta) * analytic + offset;
                ensure((noisy - expected).abs() < C10_TOL, || {
                    format!(
                        "panel {panel} p_f={}: noise column {noisy} vs {expected}",
                        row[0]
                    )
                })?;
            }
        }
    }
    let spot = figure3_csv("a", &["--pf", "0"])?[0][5];
    ensure((spot - 0.975).abs() < C10_TOL, || {
        format!("panel a at p_f=0: {spot}")
    })?;
    let custom = figure3_csv("b", &["--pf", "0.75", "--noise-eta", "0.5"])?[0][5];
    ensure((custom - (0.5 * 0.375 + 0.125)).abs() < C10_TOL, || {
        format!("custom eta: {custom}")
    })?;
    Ok(format!(
        "noise columns match (1-eta)p + eta·trM/2 for both panels; panel a at p_f=0 gives {spot}"
    ))
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "twirl-to-depolarizing",
            budget: Some(Duration::from_secs(5)),
            check: twirl_to_depolarizing,
        },
        Criterion {
            id: 2,
            name: "sweep analytic columns",
            budget: Some(Duration::from_secs(10)),
            check: figure3_analytic,
        },
        Criterion {
            id: 3,
            name: "sweep sampled columns",
            budget: Some(Duration::from_secs(120)),
            check: figure3_sampled,
        },
        Criterion {
            id: 4,
            name: "trine counterexample",
            budget: None,
            check: trine_counterexample,
        },
        Criterion {
            id: 5,
            name: "two-state preservation",
            budget: None,
            check: two_state_preservation,
        },
        Criterion {
            id: 6,
            name: "measurement update",
            budget: None,
            check: update_proposition,
        },
        Criterion {
            id: 7,
            name: "OMP condition is sufficient only",
            budget: None,
            check: omp_sufficiency_only,
        },
        Criterion {
            id: 8,
            name: "solver versus grid oracle",
            budget: Some(Duration::from_secs(120)),
            check: solver_vs_oracle,
        },
        Criterion {
            id: 9,
            name: "circuit fidelity",
            budget: None,
            check: circuit_fidelity,
        },
        Criterion {
            id: 10,
            name: "shot-noise columns",
            budget: None,
            check: shot_noise_fit,
        },
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());

    let mut failed = 0;
    println!("acceptance criteria");
    for c in criteria.iter().filter(|c| only.is_none_or(|id| id == c.id)) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:.0?}")),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "[{tag}] {:>2} {:<34} {:>8.2?}  {detail}",
            c.id, c.name, elapsed
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
