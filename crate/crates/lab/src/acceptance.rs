//! The acceptance criteria, grouped into suites.
//!
//! Each criterion runs at its pinned tolerance and reports pass/fail with
//! the measured numbers. Oracles are computed here from closed forms,
//! independently of the routines under test.

use std::f64::consts::PI;
use std::time::Instant;

use disloc_core::homog::{
    meanfield_vs_particles, orowan_row, solve_cell, solve_meanfield, CellProblem, MeanFieldOptions,
    OrowanOptions, OrowanTable,
};
use disloc_core::layers::compute_gamma;
use disloc_core::multibump::{build_windows, minimize_constrained_with, MultibumpOptions};
use disloc_core::parabolic::{
    assemble_convergence, classify_asymptotics, convergence_row, evolve, extract_cores,
    measure_relaxation, memory_statistic, AsymptoticClass, EvolveOptions, InitialData,
    RelaxationOptions,
};
use disloc_core::particles::{
    collision_bounds, integrate, Clause, CollisionKind, LayerConfig, TrajectoryStatus, BOUND_SLACK,
};
use disloc_core::{
    Error, FarField, Field, FractionalOrder, GammaConvention, Grid1D, Modulation, Potential,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::LayerGridSpec;
use crate::experiments::{half_layer, layer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Collisions,
    Heteroclinic,
    Convergence,
    Asymptotics,
    Multibump,
    Cell,
    Orowan,
    Meanfield,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Collisions => "collisions",
            Suite::Heteroclinic => "heteroclinic",
            Suite::Convergence => "convergence",
            Suite::Asymptotics => "asymptotics",
            Suite::Multibump => "multibump",
            Suite::Cell => "cell",
            Suite::Orowan => "orowan",
            Suite::Meanfield => "meanfield",
            Suite::All => "all",
        }
    }
}

/// Outcome of one check before timing is attached.
#[derive(Debug, Clone)]
pub struct Check {
    pub passed: bool,
    pub summary: String,
    pub detail: Value,
}

pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub suite: Suite,
    pub check: fn() -> Result<Check, Error>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    pub suite: &'static str,
    pub passed: bool,
    pub summary: String,
    pub detail: Value,
    pub seconds: f64,
}

impl CriterionResult {
    /// `PASS id: summary` or `FAIL id: summary`.
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.seconds,
            self.summary
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub criteria: Vec<CriterionResult>,
}

pub const CRITERIA: &[Criterion] = &[
    Criterion {
        id: "two-body",
        title: "two-body collision time",
        suite: Suite::Collisions,
        check: two_body,
    },
    Criterion {
        id: "collision-theorem",
        title: "collision-time bounds",
        suite: Suite::Collisions,
        check: collision_theorem,
    },
    Criterion {
        id: "repulsive",
        title: "repulsive configurations never collide",
        suite: Suite::Collisions,
        check: repulsive,
    },
    Criterion {
        id: "heteroclinic",
        title: "heteroclinic layer oracle",
        suite: Suite::Heteroclinic,
        check: heteroclinic,
    },
    Criterion {
        id: "stationarity",
        title: "single layer is stationary",
        suite: Suite::Convergence,
        check: stationarity,
    },
    Criterion {
        id: "pde-ode",
        title: "PDE cores converge to particles",
        suite: Suite::Convergence,
        check: pde_ode,
    },
    Criterion {
        id: "relaxation",
        title: "exponential relaxation after a collision",
        suite: Suite::Asymptotics,
        check: relaxation,
    },
    Criterion {
        id: "classification",
        title: "long-time limits by parity",
        suite: Suite::Asymptotics,
        check: classification,
    },
    Criterion {
        id: "multibump",
        title: "multibump equilibria",
        suite: Suite::Multibump,
        check: multibump,
    },
    Criterion {
        id: "cell",
        title: "cell problem against the constant-state ODE",
        suite: Suite::Cell,
        check: cell,
    },
    Criterion {
        id: "orowan",
        title: "Orowan ratio",
        suite: Suite::Orowan,
        check: orowan,
    },
    Criterion {
        id: "meanfield",
        title: "mean-field transport",
        suite: Suite::Meanfield,
        check: meanfield,
    },
];

pub fn criterion(id: &str) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

pub fn run_criterion(c: &Criterion) -> CriterionResult {
    let t0 = Instant::now();
    let check = (c.check)().unwrap_or_else(|e| Check {
        passed: false,
        summary: format!("error: {e}"),
        detail: json!({ "error": e.to_string() }),
    });
    CriterionResult {
        id: c.id,
        title: c.title,
        suite: c.suite.name(),
        passed: check.passed,
        summary: check.summary,
        detail: check.detail,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

pub fn run_suite(suite: Suite) -> Report {
    let selected: Vec<&Criterion> = CRITERIA
        .iter()
        .filter(|c| suite == Suite::All || c.suite == suite)
        .collect();
    let criteria: Vec<CriterionResult> = selected.par_iter().map(|c| run_criterion(c)).collect();
    let passed = criteria.iter().filter(|c| c.passed).count();
    Report {
        suite: suite.name(),
        passed,
        failed: criteria.len() - passed,
        criteria,
    }
}

const GAMMA: f64 = 2.0 * PI;
const COLLISION_SEED: u64 = 0x5eed_c011;

fn order(s: f64) -> Result<FractionalOrder, Error> {
    FractionalOrder::new(s)
}

fn layer_error(e: crate::LabError) -> Error {
    match e {
        crate::LabError::Core { source, .. } => source,
        other => Error::InvalidInput(other.to_string()),
    }
}

/// Separable two-body law `d' = -γ/(s d^{2s})`: `T = s d^{2s+1}/((2s+1)γ)`.
fn tau(s: f64, d: f64) -> f64 {
    s * d.powf(2.0 * s + 1.0) / ((2.0 * s + 1.0) * GAMMA)
}

/// `C = 2^{2s+1}/(2^{2s} - 1)`.
fn triple_constant(s: f64) -> f64 {
    2f64.powf(2.0 * s + 1.0) / (2f64.powf(2.0 * s) - 1.0)
}

fn two_body() -> Result<Check, Error> {
    let mut rows = Vec::new();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for s in [0.3, 0.5, 0.75] {
        let cfg = LayerConfig::new(vec![0.0, 1.0], vec![1, -1])?;
        let tr = integrate(&cfg, order(s)?, GAMMA, 1.0, None)?;
        let c = tr
            .collision
            .ok_or(Error::InvalidInput("opposite pair did not collide".into()))?;
        let exact = tau(s, 1.0);
        let rel = ((c.t_c - exact) / exact).abs();
        ok &= rel < 1e-5 && c.kind == CollisionKind::Pair;
        worst = worst.max(rel);
        rows.push(json!({ "s": s, "T_c": c.t_c, "exact": exact, "relative_error": rel }));
    }
    Ok(Check {
        passed: ok,
        summary: format!("worst relative error {worst:.2e} (< 1e-5)"),
        detail: json!(rows),
    })
}

fn alternating(x: Vec<f64>, first: i8) -> Result<LayerConfig, Error> {
    let z = (0..x.len())
        .map(|i| if i % 2 == 0 { first } else { -first })
        .collect();
    LayerConfig::new(x, z)
}

fn collision_theorem() -> Result<Check, Error> {
    let mut ok = true;
    let mut notes = Vec::new();

    // Clause (ii) on seeded random triples; unequal gaps collide pairwise.
    let mut rng = ChaCha8Rng::seed_from_u64(COLLISION_SEED);
    let mut random = Vec::new();
    for _ in 0..20 {
        let s = rng.gen_range(0.2..0.8);
        let (g1, g2) = (rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0));
        let first = if rng.gen_bool(0.5) { 1 } else { -1 };
        let cfg = alternating(vec![0.0, g1, g1 + g2], first)?;
        let c = integrate(&cfg, order(s)?, GAMMA, 1e3, None)?
            .collision
            .ok_or(Error::InvalidInput("no collision".into()))?;
        let lo = tau(s, g1.min(g2));
        let hi = triple_constant(s) * lo;
        let inside = c.t_c >= lo * (1.0 - BOUND_SLACK) && c.t_c <= hi * (1.0 + BOUND_SLACK);
        let pair = c.kind == CollisionKind::Pair;
        ok &= inside && pair;
        random.push(json!({ "s": s, "gaps": [g1, g2], "T_c": c.t_c, "tau": lo, "C_tau": hi, "inside": inside, "type": c.kind.name() }));
    }
    let random_ok = random
        .iter()
        .all(|r| r["inside"] == true && r["type"] == "pair");
    notes.push(format!(
        "20 random triples {}",
        if random_ok {
            "in [tau, C tau]"
        } else {
            "FAILED"
        }
    ));

    // Equal gaps collide triply at C·τ.
    let mut equal = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for s in [0.3, 0.5, 0.75] {
        for d in [0.5, 1.0, 2.0] {
            let cfg = alternating(vec![0.0, d, 2.0 * d], 1)?;
            let c = integrate(&cfg, order(s)?, GAMMA, 1e3, None)?
                .collision
                .ok_or(Error::InvalidInput("no collision".into()))?;
            let ratio = c.t_c / (triple_constant(s) * tau(s, d));
            let good = c.kind == CollisionKind::Triple && (0.999..=1.001).contains(&ratio);
            ok &= good;
            worst_ratio = worst_ratio.max((ratio - 1.0).abs());
            equal.push(json!({ "s": s, "gap": d, "ratio": ratio, "type": c.kind.name() }));
        }
    }
    notes.push(format!(
        "equal gaps triple, |T_c/C tau - 1| <= {worst_ratio:.1e}"
    ));

    // Perturbed gaps collide pairwise before C·τ of the smaller gap.
    let mut perturbed = Vec::new();
    for s in [0.3, 0.5, 0.75] {
        for eta in [0.01, 0.1] {
            for gaps in [[1.0, 1.0 + eta], [1.0 + eta, 1.0]] {
                let cfg = alternating(vec![0.0, gaps[0], gaps[0] + gaps[1]], 1)?;
                let c = integrate(&cfg, order(s)?, GAMMA, 1e3, None)?
                    .collision
                    .ok_or(Error::InvalidInput("no collision".into()))?;
                let c_tau = triple_constant(s) * tau(s, 1.0);
                let closer = if gaps[0] < gaps[1] {
                    vec![0, 1]
                } else {
                    vec![1, 2]
                };
                let good = c.kind == CollisionKind::Pair && c.t_c < c_tau && c.indices == closer;
                ok &= good;
                perturbed.push(json!({ "s": s, "gaps": gaps, "T_c": c.t_c, "C_tau": c_tau, "type": c.kind.name(), "indices": c.indices, "ok": good }));
            }
        }
    }
    let perturbed_ok = perturbed.iter().all(|r| r["ok"] == true);
    notes.push(format!(
        "perturbed gaps {}",
        if perturbed_ok {
            "pairwise before C tau"
        } else {
            "FAILED"
        }
    ));

    // Clause (iv) for alternating chains.
    let mut chains = Vec::new();
    for n in [3usize, 4, 5] {
        for (k, x) in [
            (0..n).map(|i| i as f64).collect::<Vec<_>>(),
            (0..n).map(|i| i as f64 + 0.15 * (i * i) as f64).collect(),
        ]
        .into_iter()
        .enumerate()
        {
            let cfg = alternating(x, 1)?;
            let s = FractionalOrder::half();
            let c = integrate(&cfg, s, GAMMA, 1e3, None)?
                .collision
                .ok_or(Error::InvalidInput("no collision".into()))?;
            let iv = collision_bounds(&cfg, s, GAMMA, None)
                .into_iter()
                .find(|b| b.clause == Clause::IV)
                .ok_or(Error::InvalidInput("clause (iv) missing".into()))?;
            let good = iv.applies() && iv.contains(c.t_c, BOUND_SLACK);
            ok &= good;
            chains
                .push(json!({ "n": n, "layout": k, "T_c": c.t_c, "upper": iv.upper, "ok": good }));
        }
    }
    notes.push("clause (iv) for N = 3, 4, 5".into());
    Ok(Check {
        passed: ok,
        summary: notes.join("; "),
        detail: json!({ "seed": COLLISION_SEED, "random": random, "equal": equal, "perturbed": perturbed, "chains": chains }),
    })
}

fn repulsive() -> Result<Check, Error> {
    let cases: [(f64, Vec<f64>, i8); 4] = [
        (0.5, vec![0.0, 1.0], 1),
        (0.3, vec![0.0, 0.4, 1.5], -1),
        (0.5, vec![0.0, 0.7, 1.0, 2.2], -1),
        (0.75, vec![0.0, 0.5, 0.8, 2.0, 2.3], 1),
    ];
    let mut ok = true;
    let mut rows = Vec::new();
    for (s, x, z) in cases {
        let n = x.len();
        let cfg = LayerConfig::new(x, vec![z; n])?;
        let g0 = cfg.gaps().into_iter().fold(f64::INFINITY, f64::min);
        let horizon = 100.0 * tau(s, g0);
        let tr = integrate(&cfg, order(s)?, GAMMA, horizon, None)?;
        let transient = 0.01 * horizon;
        let mins: Vec<f64> = tr
            .times
            .iter()
            .zip(&tr.positions)
            .filter(|(t, _)| **t >= transient)
            .map(|(_, p)| {
                p.windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let monotone = mins.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
        let reached = tr.status == TrajectoryStatus::Running
            && (tr.final_time() - horizon).abs() <= 1e-9 * horizon;
        ok &= monotone && reached;
        rows.push(json!({ "s": s, "n": n, "horizon": horizon, "reached": reached, "min_gap_nondecreasing": monotone,
            "final_min_gap": mins.last() }));
    }
    Ok(Check {
        passed: ok,
        summary: format!("{} configurations reach 100x the two-body time", rows.len()),
        detail: json!(rows),
    })
}

fn heteroclinic() -> Result<Check, Error> {
    let h = half_layer().map_err(layer_error)?;
    let err = h
        .grid()
        .nodes()
        .iter()
        .zip(&h.profile.values)
        .map(|(x, u)| (u - 0.5 - x.atan() / PI).abs())
        .fold(0.0, f64::max);
    let gamma = compute_gamma(&h, GammaConvention::ReciprocalNormSquared).gamma;
    let three = layer(
        order(0.75)?,
        &Potential::standard(),
        &LayerGridSpec::default(),
    )
    .map_err(layer_error)?;
    let mut fits = Vec::new();
    let mut fits_ok = true;
    for (s, l) in [(0.5, &h), (0.75, &three)] {
        let (beta, r2) = l.decay_fit();
        let rel = (beta - 2.0 * s).abs() / (2.0 * s);
        fits_ok &= rel < 0.1;
        fits.push(json!({ "s": s, "exponent": beta, "r2": r2, "relative_error": rel }));
    }
    let passed = err < 1e-4 && fits_ok && (gamma - 2.0 * PI).abs() < 1e-3;
    Ok(Check {
        passed,
        summary: format!(
            "arctan error {err:.2e}, tail exponents {:.3}/{:.3}, gamma - 2pi = {:.1e}",
            fits[0]["exponent"].as_f64().unwrap_or(f64::NAN),
            fits[1]["exponent"].as_f64().unwrap_or(f64::NAN),
            gamma - 2.0 * PI
        ),
        detail: json!({ "arctan_sup_error": err, "gamma": gamma, "decay_fits": fits, "residual": h.residual }),
    })
}

fn stationarity() -> Result<Check, Error> {
    let h = half_layer().map_err(layer_error)?;
    let cfg = LayerConfig::new(vec![0.0], vec![1])?;
    let run = evolve(
        &h,
        InitialData::Layers(&cfg),
        0.1,
        1.0,
        0.1,
        &EvolveOptions::default(),
    )?;
    let drift = run
        .snapshots
        .iter()
        .map(|v| {
            v.iter()
                .zip(&run.snapshots[0])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok(Check {
        passed: drift < 1e-4,
        summary: format!("sup drift {drift:.2e} (< 1e-4)"),
        detail: json!({ "eps": 0.1, "drift": drift }),
    })
}

fn pde_ode() -> Result<Check, Error> {
    let h = half_layer().map_err(layer_error)?;
    let cfg = LayerConfig::new(vec![-0.5, 0.5], vec![1, 1])?;
    let t: Vec<f64> = (0..=5).map(|k| 0.1 * k as f64).collect();
    let rows = [0.2, 0.1, 0.05]
        .par_iter()
        .map(|&e| convergence_row(&h, &cfg, e, &t, &EvolveOptions::default()))
        .collect::<Result<Vec<_>, _>>()?;
    let table = assemble_convergence(&h, rows);
    let conv = GammaConvention::ReciprocalNormSquared;
    let complete = table.rows.iter().all(|r| r.cores_complete);
    let passed = complete && table.strictly_decreasing(conv) && table.final_error(conv) < 0.05;
    let errs: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{:.2e}", r.error(conv)))
        .collect();
    Ok(Check {
        passed,
        summary: format!(
            "errors {} at eps 0.2/0.1/0.05 (strictly decreasing, final < 0.05)",
            errs.join(" > ")
        ),
        detail: json!({
            "gamma_norm": table.gamma_norm,
            "gamma_norm_sq": table.gamma_norm_sq,
            "preferred": table.preferred.name(),
            "rows": table.rows.iter().map(|r| json!({
                "eps": r.eps, "h": r.h, "error_norm": r.error_norm, "error_norm_sq": r.error_norm_sq,
                "cores_complete": r.cores_complete,
            })).collect::<Vec<_>>(),
        }),
    })
}

fn relaxation() -> Result<Check, Error> {
    let h = half_layer().map_err(layer_error)?;
    let cfg = LayerConfig::new(vec![-0.5, 0.5], vec![1, -1])?;
    let fits = [(0.1, 0.002), (0.05, 0.0005)]
        .par_iter()
        .map(|&(eps, dt_out)| -> Result<Value, Error> {
            let run = evolve(&h, InitialData::Layers(&cfg), eps, 0.3, dt_out, &EvolveOptions::default())?;
            let tracks = extract_cores(&run)?;
            let m = tracks.merges.first().ok_or(Error::InvalidInput(format!("no merge at eps = {eps}")))?;
            let fit = measure_relaxation(&run, m.time, &RelaxationOptions::default())?;
            let memory = memory_statistic(&run, &tracks).map(|m| m.0);
            Ok(json!({
                "eps": eps, "merge_time": m.time, "onset": fit.onset, "rate": fit.rate, "scaled_rate": fit.scaled_rate,
                "rho": fit.rho, "r2": fit.r2, "samples": fit.samples, "accepted": fit.accepted, "memory_stat": memory,
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let num = |v: &Value, k: &str| v[k].as_f64().unwrap_or(f64::NAN);
    let r2_ok = fits
        .iter()
        .all(|f| num(f, "r2") > 0.98 && f["accepted"] == true);
    let (a, b) = (num(&fits[0], "scaled_rate"), num(&fits[1], "scaled_rate"));
    let spread = a.max(b) / a.min(b);
    let memory = num(&fits[1], "memory_stat");
    let passed = r2_ok && spread <= 1.5 && memory >= 0.8;
    Ok(Check {
        passed,
        summary: format!(
            "R2 {:.4}/{:.4}, scaled rates {a:.3}/{b:.3} (ratio {spread:.3} <= 1.5), memory {memory:.3} (>= 0.8)",
            num(&fits[0], "r2"),
            num(&fits[1], "r2")
        ),
        detail: json!(fits),
    })
}

/// Horizon of the `(4,1)` classification run.
pub const FOUR_BODY_HORIZON: f64 = 2.0;

fn classification() -> Result<Check, Error> {
    let h = half_layer().map_err(layer_error)?;
    let cases = [
        (
            "(2,1)",
            vec![-0.5, 0.5],
            vec![1, -1],
            0.3,
            0.01,
            AsymptoticClass::Zero,
        ),
        (
            "(3,1)",
            vec![-0.6, 0.0, 1.2],
            vec![1, -1, 1],
            0.6,
            0.02,
            AsymptoticClass::Heteroclinic,
        ),
        (
            "(4,1)",
            vec![-1.5, -0.5, 0.0, 1.5],
            vec![1, 1, -1, 1],
            FOUR_BODY_HORIZON,
            0.02,
            AsymptoticClass::Constant,
        ),
    ];
    let rows = cases
        .par_iter()
        .map(|(name, x, z, t_end, dt_out, expected)| -> Result<Value, Error> {
            let cfg = LayerConfig::new(x.clone(), z.clone())?;
            let run = evolve(&h, InitialData::Layers(&cfg), 0.1, *t_end, *dt_out, &EvolveOptions::default())?;
            let c = classify_asymptotics(&cfg, &run)?;
            Ok(json!({
                "config": name, "expected": expected.name(), "predicted": c.predicted.name(), "observed": c.observed.name(),
                "ok": c.observed == *expected && c.predicted == *expected,
                "distance_zero": c.distance_zero, "distance_constant": c.distance_constant, "distance_layer": c.distance_layer,
                "terminal_cores": c.terminal_cores,
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let passed = rows.iter().all(|r| r["ok"] == true);
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "{} -> {}",
                r["config"].as_str().unwrap_or("?"),
                r["observed"].as_str().unwrap_or("?")
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Check {
        passed,
        summary,
        detail: json!(rows),
    })
}

fn multibump() -> Result<Check, Error> {
    let s = order(0.75)?;
    let p = Potential::standard();
    let tol = 1e-5;
    let cosine = Modulation::cosine(0.3, 10.0)?;
    let flat = Modulation::constant();
    let cases = [
        (vec![0, 1, 0], cosine, 50.0, 0.2, true),
        (vec![0, 1, 2, 1], cosine, 50.0, 0.2, true),
        (vec![0, 1, 0], flat, 50.0, 0.2, false),
        (vec![0, 1, 0], flat, 20.0, 0.1, false),
    ];
    let rows = cases
        .par_iter()
        .map(|(levels, a, spacing, h, want)| -> Result<Value, Error> {
            let ws = build_windows(levels, a, *spacing)?;
            let grid = ws.suggested_grid(*h, 1.0)?;
            let sol =
                minimize_constrained_with(&ws, s, &p, a, &grid, tol, MultibumpOptions::default())?;
            let accepted = sol.detachment_margin > 0.0 && sol.euler_lagrange_residual < tol;
            Ok(json!({
                "levels": levels, "amplitude": a.amplitude, "spacing": spacing, "h": h,
                "accepted": accepted, "expected": want, "ok": accepted == *want,
                "detachment_margin": sol.detachment_margin, "residual": sol.euler_lagrange_residual,
                "energy": sol.energy, "iterations": sol.iterations,
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let passed = rows.iter().all(|r| r["ok"] == true);
    let margins: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{:.2e}",
                r["detachment_margin"].as_f64().unwrap_or(f64::NAN)
            )
        })
        .collect();
    Ok(Check {
        passed,
        summary: format!(
            "margins {} (modulated > 0, constant <= 0 or unconverged)",
            margins.join(", ")
        ),
        detail: json!(rows),
    })
}

fn cell() -> Result<Check, Error> {
    let s = FractionalOrder::half();
    let b = 1.0 / (2.0 * PI);
    let oracle = |l: f64| {
        if l.abs() <= b {
            0.0
        } else {
            l.signum() * (l * l - b * b).sqrt()
        }
    };
    let ls = [
        1.0 / (4.0 * PI),
        1.0 / (2.0 * PI) - 0.01,
        1.0 / PI,
        1.5 / PI,
        2.0 / PI,
    ];
    let samples = ls
        .par_iter()
        .map(|&l| solve_cell(&CellProblem::new(s, 0.0, l, 1.0, 16)?, 1000.0))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for r in &samples {
        let exact = oracle(r.l);
        let err = (r.lambda - exact).abs();
        let pinned_l = [1.0 / (4.0 * PI), 1.0 / PI, 2.0 / PI]
            .iter()
            .any(|l| (*l - r.l).abs() < 1e-15);
        if pinned_l {
            ok &= err < 1e-3;
            worst = worst.max(err);
        }
        rows.push(json!({ "L": r.l, "lambda": r.lambda, "exact": exact, "error": err, "converged": r.converged }));
    }
    let monotone = samples
        .windows(2)
        .all(|w| w[1].lambda >= w[0].lambda - 1e-9);
    Ok(Check {
        passed: ok && monotone,
        summary: format!("worst error {worst:.1e} (< 1e-3), monotone in L: {monotone}"),
        detail: json!(rows),
    })
}

fn orowan() -> Result<Check, Error> {
    let s = FractionalOrder::half();
    let eps = [0.4, 0.2, 0.1];
    let opts = OrowanOptions::default();
    let rows = eps
        .par_iter()
        .map(|&e| orowan_row(s, 1.0, 1.0, e, GAMMA, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let table = OrowanTable {
        s: 0.5,
        p0: 1.0,
        l0: 1.0,
        gamma: GAMMA,
        rows,
    };
    let last = table.final_ratio().unwrap_or(f64::NAN);
    let passed = table.monotone_approach() && (last - 1.0).abs() < 0.15;
    let ratios: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{:.3}", r.ratio.unwrap_or(f64::NAN)))
        .collect();
    Ok(Check {
        passed,
        summary: format!(
            "ratios {} at eps 0.4/0.2/0.1 (final within 0.15 of 1)",
            ratios.join(", ")
        ),
        detail: json!(table.rows.iter().map(|r| json!({
            "eps": r.eps, "p": r.p, "L": r.l, "lambda": r.sample.lambda, "ratio": r.ratio,
            "converged": r.sample.converged, "spread": r.sample.spread, "tau_end": r.sample.tau_end,
        })).collect::<Vec<_>>()),
    })
}

fn meanfield() -> Result<Check, Error> {
    let g = Grid1D::new(-3.0, 4.0, 1401, false)?;
    let centers = [0.0, 0.3, 0.5, 1.0];
    let (delta, sigma) = (0.25, 0.2);
    let v = g
        .nodes()
        .iter()
        .map(|&x| {
            centers
                .iter()
                .map(|c| 0.5 * delta * (1.0 + libm::erf((x - c) / sigma)))
                .sum()
        })
        .collect();
    let u0 = Field::decaying(g, v, FarField::constant(0.0, 1.0))?;
    let run = solve_meanfield(
        &u0,
        0.02,
        &MeanFieldOptions {
            dt_out: 0.002,
            ..Default::default()
        },
    )?;
    let monotone = run
        .snapshots
        .iter()
        .all(|u| u.windows(2).all(|w| w[1] >= w[0]));
    let limits = run
        .snapshots
        .iter()
        .map(|u| u[0].abs().max((u[u.len() - 1] - 1.0).abs()))
        .fold(0.0, f64::max);
    let m = run.masses();
    let mass = m.iter().map(|x| (x - m[0]).abs()).fold(0.0, f64::max);

    let n = 16;
    let cfg = LayerConfig::new(
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        vec![1; n],
    )?;
    let opts = MeanFieldOptions {
        dt_out: 0.001,
        ..Default::default()
    };
    let cmp = meanfield_vs_particles(&cfg, 1.0 / n as f64, 0.01, 1.0 / 400.0, &opts)?;
    let passed =
        monotone && limits < 1e-6 && mass < 1e-6 && cmp.sup_gap < 0.1 && !cmp.delta_too_large;
    Ok(Check {
        passed,
        summary: format!(
            "monotone {monotone}, limit drift {limits:.1e}, mass drift {mass:.1e}, 16-particle gap {:.3} (< 0.1)",
            cmp.sup_gap
        ),
        detail: json!({
            "monotone": monotone, "limit_drift": limits, "mass_drift": mass, "sup_gap": cmp.sup_gap,
            "particles_ordered": cmp.particles_ordered, "level_sets_ordered": cmp.level_sets_ordered,
        }),
    })
}
