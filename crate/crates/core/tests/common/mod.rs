//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the solver under test. The grid oracle searches qubit
//! measurements directly in Bloch coordinates, the dual bound searches the
//! dual variable, and the closed-form curves are written out by hand.

#![allow(dead_code)]

use chancode::ensembles::{state_to_bloch, Ensemble};

/// Success probability at flip probability `p` for Z-basis states with X flips.
pub fn theo_sz(p: f64) -> (f64, f64) {
    (
        0.5 + (1.0 - 2.0 * p).abs() / 2.0,
        0.5 + (3.0 - 4.0 * p).abs() / 6.0,
    )
}

/// Same for the four BB84 states with Y flips and half-weight X/Z readout.
pub fn theo_bb84(p: f64) -> (f64, f64) {
    (
        0.25 + (1.0 - 2.0 * p).abs() / 4.0,
        0.25 + (3.0 - 4.0 * p).abs() / 12.0,
    )
}

/// Qubit ensemble in Bloch form: priors and Bloch vectors.
pub struct BlochEnsemble {
    pub q: Vec<f64>,
    pub r: Vec<[f64; 3]>,
}

impl BlochEnsemble {
    pub fn of(e: &Ensemble) -> Self {
        BlochEnsemble {
            q: e.priors().collect(),
            r: e.states()
                .map(|s| state_to_bloch(s).unwrap().as_array())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn direction(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// One rank-one element `w·(I + m·σ)/2` in angle form.
#[derive(Clone, Copy, Debug)]
struct Element {
    theta: f64,
    phi: f64,
    w: f64,
}

/// Success probability when outcome `rem` receives the remainder
/// `I − t·Σ others`, where t ≤ 1 is the largest factor keeping the remainder
/// positive semidefinite. Every parameter point therefore maps to a valid
/// measurement.
fn value(e: &BlochEnsemble, rem: usize, els: &[Element]) -> Option<f64> {
    let mut gain = 0.0;
    let mut wsum = 0.0;
    let mut v = [0.0; 3];
    let mut k = 0;
    for x in 0..e.len() {
        if x == rem {
            continue;
        }
        let el = els[k];
        k += 1;
        if !(0.0..=2.0).contains(&el.w) {
            return None;
        }
        let m = direction(el.theta, el.phi);
        gain += e.q[x] * el.w * (1.0 + dot(m, e.r[x])) / 2.0;
        wsum += el.w;
        for i in 0..3 {
            v[i] += el.w * m[i];
        }
    }
    // remainder is (1 − t·wsum/2) I − t·(v/2)·σ, PSD iff t·(wsum + |v|)/2 ≤ 1
    let load = (wsum + norm(v)) / 2.0;
    let t = if load > 1.0 { 1.0 / load } else { 1.0 };
    let a_rem = 1.0 - t * wsum / 2.0;
    let v_rem = [-t * v[0] / 2.0, -t * v[1] / 2.0, -t * v[2] / 2.0];
    // tr(ρ (aI + u·σ)) = a + u·r
    Some(t * gain + e.q[rem] * (a_rem + dot(v_rem, e.r[rem])))
}

/// Finest grid resolution reached by the refinement.
pub const GRID_ANGLE_DEG: f64 = 2.0;
pub const GRID_WEIGHT: f64 = 0.01;

/// Best success probability found on a measurement grid.
///
/// The search covers POVMs in which every outcome except one is rank one and
/// the remaining outcome takes whatever is left of the identity (after
/// scaling the others back when they would overfill it). A coarse
/// global grid (30° directions, weights in steps of 0.25) seeds a
/// coordinate-wise pattern search whose steps shrink to 2° and 0.01. Every
/// evaluated point is a valid measurement, so the result is a lower bound on
/// the optimum.
pub fn grid_oracle(e: &BlochEnsemble) -> f64 {
    let n = e.len();
    assert!(
        (2..=3).contains(&n),
        "grid oracle handles two or three states"
    );
    let coarse_dirs: Vec<(f64, f64)> = {
        let mut v = vec![(0.0, 0.0), (180.0, 0.0)];
        for t in (30..180).step_by(30) {
            for p in (0..360).step_by(30) {
                v.push((t as f64, p as f64));
            }
        }
        v
    };
    let coarse_w = [0.0, 0.25, 0.5, 0.75, 1.0];

    let mut best = e.q.iter().cloned().fold(0.0, f64::max);
    for rem in 0..n {
        // coarse global grid
        let mut seeds: Vec<(f64, Vec<Element>)> = Vec::new();
        let mk = |d: (f64, f64), w: f64| Element {
            theta: d.0.to_radians(),
            phi: d.1.to_radians(),
            w,
        };
        if n == 2 {
            for &d in &coarse_dirs {
                for &w in &coarse_w {
                    let els = vec![mk(d, w)];
                    if let Some(v) = value(e, rem, &els) {
                        seeds.push((v, els));
                    }
                }
            }
        } else {
            for &d1 in &coarse_dirs {
                for &d2 in &coarse_dirs {
                    for &w1 in &coarse_w {
                        for &w2 in &coarse_w {
                            let els = vec![mk(d1, w1), mk(d2, w2)];
                            if let Some(v) = value(e, rem, &els) {
                                seeds.push((v, els));
                            }
                        }
                    }
                }
            }
        }
        seeds.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        seeds.truncate(8);
        for (v0, els) in seeds {
            let (v, _) = refine(e, rem, els, v0);
            best = best.max(v);
        }
    }
    best
}

/// Pattern search on the grid: try ± steps on each coordinate, move on any
/// improvement, halve the steps when stuck, stop at the finest resolution.
fn refine(e: &BlochEnsemble, rem: usize, mut els: Vec<Element>, mut v: f64) -> (f64, Vec<Element>) {
    let mut da = 16.0f64;
    let mut dw = 0.16f64;
    loop {
        let step_a = da.max(GRID_ANGLE_DEG).to_radians();
        let step_w = dw.max(GRID_WEIGHT);
        let mut improved = true;
        while improved {
            improved = false;
            for k in 0..els.len() {
                for coord in 0..3 {
                    for sign in [-1.0, 1.0] {
                        let mut trial = els.clone();
                        match coord {
                            0 => trial[k].theta += sign * step_a,
                            1 => trial[k].phi += sign * step_a,
                            _ => trial[k].w = (trial[k].w + sign * step_w).clamp(0.0, 2.0),
                        }
                        if let Some(tv) = value(e, rem, &trial) {
                            if tv > v + 1e-15 {
                                v = tv;
                                els = trial;
                                improved = true;
                            }
                        }
                    }
                }
            }
        }
        if da <= GRID_ANGLE_DEG && dw <= GRID_WEIGHT {
            return (v, els);
        }
        da /= 2.0;
        dw /= 2.0;
    }
}

/// Upper bound on the optimum from the dual problem.
///
/// Every Hermitian Γ = aI + b·σ with Γ ≥ q_xρ_x for all x bounds the success
/// probability by tr Γ. The constraint reads a ≥ q_x/2 + |b − q_x r_x/2|, so
/// tr Γ = max_x (q_x + 2|b − q_x r_x/2|) for the best a. This minimizes that
/// over b by a shrinking grid search; any b gives a valid bound.
pub fn dual_bound(e: &BlochEnsemble) -> f64 {
    let c: Vec<[f64; 3]> =
        e.r.iter()
            .zip(&e.q)
            .map(|(r, q)| [q * r[0] / 2.0, q * r[1] / 2.0, q * r[2] / 2.0])
            .collect();
    let f = |b: [f64; 3]| {
        e.q.iter()
            .zip(&c)
            .map(|(q, cx)| q + 2.0 * norm([b[0] - cx[0], b[1] - cx[1], b[2] - cx[2]]))
            .fold(f64::MIN, f64::max)
    };
    let mut center = [0.0; 3];
    let mut best = f(center);
    let mut half = 0.5;
    while half > 1e-7 {
        let mut local = center;
        for i in -4..=4 {
            for j in -4..=4 {
                for k in -4..=4 {
                    let b = [
                        center[0] + half * i as f64 / 4.0,
                        center[1] + half * j as f64 / 4.0,
                        center[2] + half * k as f64 / 4.0,
                    ];
                    let v = f(b);
                    if v < best {
                        best = v;
                        local = b;
                    }
                }
            }
        }
        center = local;
        half /= 2.0;
    }
    best
}
