//! One function per experiment: run the core routine, write its files,
//! return the summary that also goes to `summary.json`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use disloc_core::homog::{
    constant_state_lambda, meanfield_vs_particles, orowan_row, solve_cell_converged,
    solve_meanfield, CellOptions, CellProblem, MeanFieldOptions, OrowanOptions, OrowanTable,
};
use disloc_core::layers::{compute_gamma, evolution_gamma, solve_heteroclinic};
use disloc_core::multibump::{build_windows, minimize_constrained_with, MultibumpOptions};
use disloc_core::parabolic::{
    classify_asymptotics, evolve, extract_cores, measure_relaxation, memory_statistic,
    sup_distance, EvolveOptions, InitialData, RelaxationOptions,
};
use disloc_core::particles::{collision_bounds, integrate_with, IntegrateOptions};
use disloc_core::{
    Error, FarField, Field, FractionalOrder, GammaConvention, Grid1D, Heteroclinic, Potential,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::*;
use crate::error::{LabError, Result};
use crate::io::{OutputDir, Table};

type LayerKey = (u64, &'static str, u64, usize, u64);

/// Heteroclinic layers are shared by every run in the process.
pub fn layer(s: FractionalOrder, p: &Potential, spec: &LayerGridSpec) -> Result<Arc<Heteroclinic>> {
    static CACHE: Mutex<Option<HashMap<LayerKey, Arc<Heteroclinic>>>> = Mutex::new(None);
    let key = (
        s.get().to_bits(),
        p.name,
        spec.half_width.to_bits(),
        spec.n,
        spec.tol.to_bits(),
    );
    if let Some(h) = CACHE
        .lock()
        .expect("unpoisoned")
        .get_or_insert_with(HashMap::new)
        .get(&key)
    {
        return Ok(h.clone());
    }
    let h = Arc::new(
        solve_heteroclinic(s, p, &spec.grid()?, spec.tol)
            .map_err(LabError::core("heteroclinic"))?,
    );
    CACHE
        .lock()
        .expect("unpoisoned")
        .get_or_insert_with(HashMap::new)
        .insert(key, h.clone());
    Ok(h)
}

/// The `s = 1/2` layer on the default grid.
pub fn half_layer() -> Result<Arc<Heteroclinic>> {
    layer(
        FractionalOrder::half(),
        &Potential::standard(),
        &LayerGridSpec::default(),
    )
}

fn resolve_gamma(
    g: &GammaSpec,
    s: FractionalOrder,
    conv: GammaConvention,
    grid: &LayerGridSpec,
) -> Result<f64> {
    match g {
        GammaSpec::Value(v) => Ok(*v),
        _ => Ok(compute_gamma(&*layer(s, &Potential::standard(), grid)?, conv).gamma),
    }
}

/// Validates, runs and writes `summary.json`.
pub fn execute(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Value> {
    cfg.validate()?;
    let summary = match cfg {
        ExperimentConfig::Heteroclinic(c) => heteroclinic(c, out),
        ExperimentConfig::Multibump(c) => multibump(c, out),
        ExperimentConfig::Particles(c) => particles(c, out),
        ExperimentConfig::Parabolic(c) => parabolic(c, out),
        ExperimentConfig::Cell(c) => cell(c, out),
        ExperimentConfig::Orowan(c) => orowan(c, out),
        ExperimentConfig::Meanfield(c) => meanfield(c, out),
    };
    match summary {
        Ok(v) => {
            out.write_json("summary.json", &v)?;
            Ok(v)
        }
        // Partial results were written; the summary records the failure.
        Err(Outcome::Failed(v, e)) => {
            out.write_json("summary.json", &v)?;
            Err(e)
        }
        Err(Outcome::Error(e)) => Err(e),
    }
}

enum Outcome {
    Failed(Value, LabError),
    Error(LabError),
}

impl From<LabError> for Outcome {
    fn from(e: LabError) -> Self {
        Outcome::Error(e)
    }
}

type Run = std::result::Result<Value, Outcome>;

fn heteroclinic(c: &HeteroclinicSpec, out: &OutputDir) -> Run {
    let s = order(c.s)?;
    let conv = convention(&c.gamma_convention)?;
    let h = layer(s, &potential(&c.potential)?, &c.layer)?;
    out.write_field("profile.csv", &h.profile)?;
    let norm = compute_gamma(&h, GammaConvention::ReciprocalNorm);
    let sq = compute_gamma(&h, GammaConvention::ReciprocalNormSquared);
    let (exponent, r2) = h.decay_fit();
    Ok(json!({
        "s": c.s,
        "potential": c.potential,
        "gamma_convention": conv.name(),
        "gamma": compute_gamma(&h, conv).gamma,
        "gamma_norm": norm.gamma,
        "gamma_norm_sq": sq.gamma,
        "derivative_norm_sq": sq.norm_sq,
        "evolution_gamma": evolution_gamma(&h, conv),
        "residual": h.residual,
        "iterations": h.iterations,
        "decay_fit": { "exponent": exponent, "r2": r2, "expected": 2.0 * c.s },
    }))
}

fn multibump(c: &MultibumpSpec, out: &OutputDir) -> Run {
    let s = order(c.s)?;
    let p = potential(&c.potential)?;
    let a = c.modulation.build()?;
    let ws =
        build_windows(&c.levels, &a, c.spacing()).map_err(LabError::core("multibump windows"))?;
    let grid = ws
        .suggested_grid(c.h, 1.0)
        .map_err(LabError::core("multibump grid"))?;
    let opts = MultibumpOptions {
        max_iterations: c.max_iterations,
        ..Default::default()
    };
    let sol = minimize_constrained_with(&ws, s, &p, &a, &grid, c.tol, opts)
        .map_err(LabError::core("multibump"))?;
    out.write_field("profile.csv", &sol.profile)?;
    let mut w = Table::new(["lo", "hi", "level"]);
    for win in &ws.windows {
        w.push([win.lo, win.hi, win.level as f64]);
    }
    out.write_table("windows.csv", &w)?;
    let mut e = Table::new(["iteration", "energy"]);
    for (k, v) in sol.energy_history.iter().enumerate() {
        e.push([k as f64, *v]);
    }
    out.write_table("energy.csv", &e)?;
    let accepted = sol.accepted(c.tol);
    let summary = json!({
        "s": c.s,
        "levels": c.levels,
        "modulation": c.modulation,
        "spacing": c.spacing(),
        "h": grid.h(),
        "energy": sol.energy,
        "energy_elastic": sol.energy_parts.elastic,
        "energy_potential": sol.energy_parts.potential,
        "residual": sol.euler_lagrange_residual,
        "full_residual": sol.full_residual,
        "detachment_margin": sol.detachment_margin,
        "iterations": sol.iterations,
        "accepted": accepted,
    });
    if accepted {
        Ok(summary)
    } else if sol.detachment_margin <= 0.0 {
        let e = LabError::Core {
            context: "multibump",
            source: Error::ConstraintTouching {
                margin: sol.detachment_margin,
            },
        };
        Err(Outcome::Failed(summary, e))
    } else {
        let source = Error::SolverFailure {
            solver: "projected descent",
            residual: sol.euler_lagrange_residual,
            iterations: sol.iterations,
        };
        Err(Outcome::Failed(
            summary,
            LabError::Core {
                context: "multibump",
                source,
            },
        ))
    }
}

fn particles(c: &ParticlesSpec, out: &OutputDir) -> Run {
    let s = order(c.s)?;
    let cfg = layer_config(&c.positions, &c.orientations)?;
    let conv = convention(&c.gamma_convention)?;
    let gamma = resolve_gamma(&c.gamma, s, conv, &c.layer)?;
    let opts = IntegrateOptions {
        gap_tol: c.gap_tol,
        a0: c.a0,
        max_step: c.t_end / c.samples as f64,
        ..Default::default()
    };
    let tr = integrate_with(&cfg, s, gamma, c.t_end, opts).map_err(LabError::core("particles"))?;
    let n = cfg.len();
    let mut t =
        Table::new(std::iter::once("t".to_string()).chain((1..=n).map(|i| format!("x{i}"))));
    for (ti, x) in tr.times.iter().zip(&tr.positions) {
        t.push(std::iter::once(*ti).chain(x.iter().copied()));
    }
    out.write_table("trajectory.csv", &t)?;
    let bounds: Vec<Value> = collision_bounds(&cfg, s, gamma, c.a0)
        .iter()
        .map(|b| {
            let satisfied = tr
                .collision
                .as_ref()
                .filter(|_| b.applies())
                .map(|r| b.contains(r.t_c, disloc_core::particles::BOUND_SLACK));
            json!({
                "clause": b.clause.name(),
                "lower": b.lower,
                "upper": b.upper,
                "literal_upper": b.literal_upper,
                "skipped": b.skipped,
                "satisfied": satisfied,
            })
        })
        .collect();
    let collision = match &tr.collision {
        Some(r) => json!({
            "T_c": r.t_c,
            "indices": r.indices,
            "type": r.kind.name(),
            "t_stop": r.t_stop,
            "gap_stop": r.gap_stop,
            "gamma": gamma,
            "bounds": bounds,
        }),
        None => {
            json!({ "T_c": null, "indices": [], "type": null, "gamma": gamma, "bounds": bounds })
        }
    };
    out.write_json("collision.json", &collision)?;
    Ok(json!({
        "s": c.s,
        "gamma": gamma,
        "gamma_convention": conv.name(),
        "status": if tr.collision.is_some() { "collided" } else { "running" },
        "t_final": tr.final_time(),
        "steps": tr.times.len() - 1,
        "T_c": tr.collision.as_ref().map(|r| r.t_c),
    }))
}

fn parabolic(c: &ParabolicSpec, out: &OutputDir) -> Run {
    let s = order(c.s)?;
    let lay = layer(s, &potential(&c.potential)?, &c.layer)?;
    let cfg = layer_config(&c.positions, &c.orientations)?;
    let opts = EvolveOptions {
        nodes_per_eps: c.nodes_per_eps,
        padding: c.padding,
        dt: c.dt,
        ..Default::default()
    };
    let run = evolve(
        &lay,
        InitialData::Layers(&cfg),
        c.eps,
        c.t_end,
        c.dt_out,
        &opts,
    )
    .map_err(LabError::core("parabolic"))?;
    if c.write_snapshots {
        let mut index = Table::new(["k", "t"]);
        for k in (0..run.snapshots.len()).step_by(c.snapshot_stride) {
            let f = Field::periodic(run.grid, run.snapshots[k].clone())
                .map_err(LabError::core("snapshot"))?;
            out.write_field(&format!("snapshots/v_{k:05}.csv"), &f)?;
            index.push([k as f64, run.times[k]]);
        }
        out.write_table("snapshots/index.csv", &index)?;
    }
    let tracks = extract_cores(&run).map_err(LabError::core("core tracking"))?;
    let n = cfg.len();
    let header = std::iter::once("t".to_string()).chain((1..=n).map(|i| format!("core{i}")));
    let mut cores = Table::new(header.clone());
    for (t, pos) in tracks.times.iter().zip(&tracks.per_snapshot) {
        cores.push_opt(std::iter::once(Some(*t)).chain((0..n).map(|i| pos.get(i).copied())));
    }
    out.write_table("cores.csv", &cores)?;

    let gamma = evolution_gamma(&lay, GammaConvention::ReciprocalNormSquared);
    let mut particle_tc = None;
    if c.compare_particles {
        let io = IntegrateOptions {
            max_step: c.dt_out,
            ..Default::default()
        };
        let tr =
            integrate_with(&cfg, s, gamma, c.t_end, io).map_err(LabError::core("particles"))?;
        particle_tc = tr.collision.as_ref().map(|r| r.t_c);
        let mut p =
            Table::new(std::iter::once("t".to_string()).chain((1..=n).map(|i| format!("x{i}"))));
        for &t in &run.times {
            match tr.position_at(t) {
                Some(x) => p.push(std::iter::once(t).chain(x)),
                None => break,
            }
        }
        out.write_table("particles.csv", &p)?;
    }

    let class = classify_asymptotics(&cfg, &run).map_err(LabError::core("classification"))?;
    let first_merge = tracks.merges.first();
    let relaxation = match first_merge {
        Some(m) => match measure_relaxation(&run, m.time, &RelaxationOptions::default()) {
            Ok(fit) => json!({
                "T_eps": fit.onset,
                "rate": fit.rate,
                "scaled_rate": fit.scaled_rate,
                "rho": fit.rho,
                "r2": fit.r2,
                "samples": fit.samples,
                "accepted": fit.accepted,
            }),
            Err(e) => json!({ "error": e.to_string() }),
        },
        None => Value::Null,
    };
    let mut decay = Table::new(["t", "sup_distance"]);
    for (t, d) in sup_distance(&run) {
        decay.push([t, d]);
    }
    out.write_table("decay.csv", &decay)?;
    let memory = memory_statistic(&run, &tracks);
    Ok(json!({
        "s": c.s,
        "eps": c.eps,
        "h": run.grid.h(),
        "nodes": run.grid.n,
        "dt": run.dt,
        "steps": run.steps,
        "evolution_gamma": gamma,
        "envelope": [run.envelope.0, run.envelope.1],
        "merges": tracks.merges.iter().map(|m| json!({ "time": m.time, "position": m.position })).collect::<Vec<_>>(),
        "particle_collision": particle_tc,
        "classification": {
            "ell": class.ell,
            "predicted": class.predicted.name(),
            "observed": class.observed.name(),
            "agrees": class.agrees(),
            "distance_zero": class.distance_zero,
            "distance_constant": class.distance_constant,
            "distance_layer": class.distance_layer,
            "layer_center": class.layer_center,
            "terminal_cores": class.terminal_cores,
        },
        "relaxation": relaxation,
        "memory_stat": memory.map(|m| m.0),
        "merge_time": first_merge.map(|m| m.time),
    }))
}

fn cell(c: &CellSpec, out: &OutputDir) -> Run {
    let s = order(c.s)?;
    let points = c.points();
    let samples = points
        .par_iter()
        .map(|&(p, l)| {
            let cp = CellProblem::resolved(s, p, l, c.min_period, c.h)?;
            solve_cell_converged(&cp, c.tau_end, c.max_doublings, &CellOptions::default())
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(LabError::core("cell problem"))?;
    let mut t = Table::new(["p", "L", "lambda", "spread"]);
    let mut rows = Vec::new();
    for r in &samples {
        t.push([r.p, r.l, r.lambda, r.spread]);
        let oracle = (r.p == 0.0 && c.s == 0.5).then(|| constant_state_lambda(r.l));
        rows.push(json!({
            "p": r.p, "L": r.l, "period": r.period, "lambda": r.lambda, "spread": r.spread,
            "converged": r.converged, "tau_end": r.tau_end, "constant_state_lambda": oracle,
        }));
    }
    out.write_table("hbar.csv", &t)?;
    Ok(json!({ "s": c.s, "rows": rows, "all_converged": samples.iter().all(|r| r.converged) }))
}

fn orowan(c: &OrowanSpec, out: &OutputDir) -> Run {
    let s = order(c.s)?;
    let gamma = resolve_gamma(
        &c.gamma,
        s,
        GammaConvention::ReciprocalNormSquared,
        &c.layer,
    )?;
    disloc_core::homog::check_orowan(c.p0, &c.eps, gamma).map_err(LabError::core("orowan"))?;
    let opts = OrowanOptions {
        h: c.h,
        tau_min: c.tau_min,
        crossings: c.crossings,
        ..Default::default()
    };
    let rows = c
        .eps
        .par_iter()
        .map(|&e| orowan_row(s, c.p0, c.l0, e, gamma, &opts))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(LabError::core("orowan"))?;
    let table = OrowanTable {
        s: c.s,
        p0: c.p0,
        l0: c.l0,
        gamma,
        rows,
    };
    let mut t = Table::new(["eps", "lambda", "ratio"]);
    for r in &table.rows {
        t.push_opt([Some(r.eps), Some(r.sample.lambda), r.ratio]);
    }
    out.write_table("orowan.csv", &t)?;
    Ok(json!({
        "s": c.s,
        "p0": c.p0,
        "L0": c.l0,
        "gamma": gamma,
        "final_ratio": table.final_ratio(),
        "monotone_approach": table.monotone_approach(),
        "all_converged": table.all_converged(),
        "rows": table.rows.iter().map(|r| json!({
            "eps": r.eps, "p": r.p, "L": r.l, "period": r.sample.period, "lambda": r.sample.lambda,
            "ratio": r.ratio, "spread": r.sample.spread, "converged": r.sample.converged, "tau_end": r.sample.tau_end,
        })).collect::<Vec<_>>(),
    }))
}

/// Samples the initial datum of a mean-field run.
pub fn initial_profile(init: &InitProfile) -> Result<Field> {
    let grid = |d: [f64; 2], n: usize| {
        Grid1D::new(d[0], d[1], n, false).map_err(LabError::core("init grid"))
    };
    let field = match init {
        InitProfile::CosineRamp {
            left,
            right,
            low,
            high,
            domain,
            n,
        } => {
            let g = grid(*domain, *n)?;
            let mid = 0.5 * (left + right);
            let w = right - left;
            let v = g
                .nodes()
                .iter()
                .map(|&x| {
                    if x <= *left {
                        *low
                    } else if x >= *right {
                        *high
                    } else {
                        low + (high - low)
                            * 0.5
                            * (1.0 + (std::f64::consts::PI * (x - mid) / w).sin())
                    }
                })
                .collect();
            Field::decaying(g, v, FarField::constant(*low, *high))
        }
        InitProfile::ErfStaircase {
            centers,
            delta,
            sigma,
            domain,
            n,
        } => {
            let g = grid(*domain, *n)?;
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
            Field::decaying(g, v, FarField::constant(0.0, delta * centers.len() as f64))
        }
        InitProfile::Field { csv } => return crate::io::read_field(std::path::Path::new(csv)),
        InitProfile::Particles { .. } => {
            return Err(LabError::Config(
                "particle data has no single profile".into(),
            ))
        }
    };
    field.map_err(LabError::core("init profile"))
}

fn meanfield(c: &MeanfieldSpec, out: &OutputDir) -> Run {
    let opts = MeanFieldOptions {
        gamma: c.gamma,
        monotone: c.monotone,
        cfl: c.cfl,
        dt: c.dt,
        dt_out: c.dt_out,
    };
    let init = c.init.load()?;
    if let InitProfile::Particles {
        positions,
        delta,
        h,
    } = &init
    {
        let cfg = layer_config(positions, &vec![1; positions.len()])?;
        let cmp = meanfield_vs_particles(&cfg, *delta, c.t_end, *h, &opts)
            .map_err(LabError::core("mean-field comparison"))?;
        let mut t = Table::new(["t", "i", "particle", "level_set"]);
        for (k, &tk) in cmp.times.iter().enumerate() {
            for i in 0..positions.len() {
                t.push([
                    tk,
                    (i + 1) as f64,
                    cmp.particles[k][i],
                    cmp.level_sets[k][i],
                ]);
            }
        }
        out.write_table("comparison.csv", &t)?;
        return Ok(json!({
            "mode": "particles",
            "delta": cmp.delta,
            "sup_gap": cmp.sup_gap,
            "particles_ordered": cmp.particles_ordered,
            "level_sets_ordered": cmp.level_sets_ordered,
            "delta_too_large": cmp.delta_too_large,
        }));
    }
    let u0 = initial_profile(&init)?;
    out.write_field("init.csv", &u0)?;
    let run = solve_meanfield(&u0, c.t_end, &opts).map_err(LabError::core("mean-field"))?;
    let x = run.grid.nodes();
    let mut t = Table::new(["t", "x", "value"]);
    for (tk, u) in run.times.iter().zip(&run.snapshots) {
        for (xj, uj) in x.iter().zip(u) {
            t.push([*tk, *xj, *uj]);
        }
    }
    out.write_table("meanfield.csv", &t)?;
    let m = run.masses();
    let mass_drift = m.iter().map(|v| (v - m[0]).abs()).fold(0.0, f64::max);
    let limit_drift = run
        .snapshots
        .iter()
        .map(|u| {
            (u[0] - run.l_minus)
                .abs()
                .max((u[u.len() - 1] - run.l_plus).abs())
        })
        .fold(0.0, f64::max);
    let monotone = run
        .snapshots
        .iter()
        .all(|u| u.windows(2).all(|w| w[1] >= w[0]));
    Ok(json!({
        "mode": "profile",
        "steps": run.steps,
        "snapshots": run.times.len(),
        "l_minus": run.l_minus,
        "l_plus": run.l_plus,
        "mass_drift": mass_drift,
        "limit_drift": limit_drift,
        "monotone": monotone,
    }))
}
