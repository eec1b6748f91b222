use std::sync::OnceLock;

use disloc_core::layers::{evolution_gamma, solve_heteroclinic};
use disloc_core::parabolic::{
    classify_asymptotics, convergence_row, convergence_study, evolve, extract_cores,
    measure_relaxation, AsymptoticClass, EvolveOptions, InitialData, RelaxationOptions,
};
use disloc_core::particles::two_body_collision_time;
use disloc_core::{FractionalOrder, GammaConvention, Grid1D, Heteroclinic, LayerConfig, Potential};
use proptest::prelude::*;

fn layer() -> &'static Heteroclinic {
    static L: OnceLock<Heteroclinic> = OnceLock::new();
    L.get_or_init(|| {
        let g = Grid1D::symmetric(200.0, 8193).unwrap();
        solve_heteroclinic(FractionalOrder::half(), &Potential::standard(), &g, 1e-9).unwrap()
    })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn single_layer_is_stationary() {
    let cfg = LayerConfig::new(vec![0.0], vec![1]).unwrap();
    let run = evolve(
        layer(),
        InitialData::Layers(&cfg),
        0.1,
        1.0,
        0.1,
        &EvolveOptions::default(),
    )
    .unwrap();
    let drift = run
        .snapshots
        .iter()
        .map(|v| sup_diff(v, &run.snapshots[0]))
        .fold(0.0, f64::max);
    assert!(drift < 1e-4, "drift {drift}");
    let tracks = extract_cores(&run).unwrap();
    assert_eq!(tracks.tracks.len(), 1);
    assert!(tracks.merges.is_empty());
    let h = run.grid.h();
    assert!(tracks.tracks[0].positions.iter().all(|x| x.abs() <= h));
}

#[test]
fn repulsive_pair_tracks_diverge() {
    let cfg = LayerConfig::new(vec![-0.5, 0.5], vec![1, 1]).unwrap();
    let run = evolve(
        layer(),
        InitialData::Layers(&cfg),
        0.05,
        0.2,
        0.02,
        &EvolveOptions::default(),
    )
    .unwrap();
    let tracks = extract_cores(&run).unwrap();
    assert_eq!(tracks.tracks.len(), 2);
    assert!(tracks.merges.is_empty());
    let gaps: Vec<f64> = tracks.per_snapshot.iter().map(|c| c[1] - c[0]).collect();
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
}

#[test]
fn pde_cores_follow_particles_as_eps_shrinks() {
    let cfg = LayerConfig::new(vec![-0.5, 0.5], vec![1, 1]).unwrap();
    let t: Vec<f64> = (0..=5).map(|k| 0.1 * k as f64).collect();
    let table =
        convergence_study(layer(), &cfg, &[0.2, 0.1], &t, &EvolveOptions::default()).unwrap();
    assert!(table.strictly_decreasing(GammaConvention::ReciprocalNormSquared));
    assert_eq!(table.preferred, GammaConvention::ReciprocalNormSquared);
    assert!(table.final_error(GammaConvention::ReciprocalNormSquared) < 0.01);
    // C(1/2)·2π = 2.
    assert!((table.gamma_norm_sq - 2.0).abs() < 1e-3);
}

#[test]
fn single_layer_convergence_error_below_h() {
    let cfg = LayerConfig::new(vec![0.25], vec![1]).unwrap();
    let t = [0.0, 0.1, 0.2];
    for eps in [0.2, 0.1] {
        let row = convergence_row(layer(), &cfg, eps, &t, &EvolveOptions::default()).unwrap();
        assert!(row.cores_complete);
        assert!(
            row.error_norm_sq < row.h && row.error_norm < row.h,
            "{row:?}"
        );
    }
}

#[test]
fn dipole_merges_near_particle_collision_and_relaxes() {
    let cfg = LayerConfig::new(vec![-0.5, 0.5], vec![1, -1]).unwrap();
    let eps = 0.1;
    let run = evolve(
        layer(),
        InitialData::Layers(&cfg),
        eps,
        0.3,
        0.002,
        &EvolveOptions::default(),
    )
    .unwrap();
    let tracks = extract_cores(&run).unwrap();
    assert_eq!(tracks.merges.len(), 1);
    let m = &tracks.merges[0];
    assert!(m.position.abs() < 1e-6);
    let gamma = evolution_gamma(layer(), GammaConvention::ReciprocalNormSquared);
    let t_c = two_body_collision_time(FractionalOrder::half(), gamma, 1.0);
    assert!((t_c - 0.125).abs() < 1e-4);
    assert!(
        m.time < t_c && t_c - m.time < 0.02,
        "merge at {} vs {t_c}",
        m.time
    );

    let fit = measure_relaxation(&run, m.time, &RelaxationOptions::default()).unwrap();
    assert!(fit.accepted && fit.rate > 0.0);
    assert!(fit.r2 > 0.98, "r2 {}", fit.r2);
    assert!(fit.onset >= m.time);
    // The slowest linear mode decays like exp(-t W''(0)/ε^{2s+1}).
    assert!(
        fit.scaled_rate > 0.5 && fit.scaled_rate < 2.0,
        "{}",
        fit.scaled_rate
    );

    let sup = |k: usize| run.snapshots[k].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let last = run.snapshots.len() - 1;
    assert!(sup(last) < sup(last / 2));
    let c = classify_asymptotics(&cfg, &run).unwrap();
    assert_eq!(c.observed, AsymptoticClass::Zero);
    assert!(c.agrees());
}

#[test]
fn odd_configuration_ends_on_a_layer() {
    let cfg = LayerConfig::new(vec![-0.6, 0.0, 1.2], vec![1, -1, 1]).unwrap();
    let run = evolve(
        layer(),
        InitialData::Layers(&cfg),
        0.1,
        0.6,
        0.02,
        &EvolveOptions::default(),
    )
    .unwrap();
    let c = classify_asymptotics(&cfg, &run).unwrap();
    assert_eq!(c.predicted, AsymptoticClass::Heteroclinic);
    assert!(c.agrees());
    assert!(c.distance_layer.unwrap() < 0.05);
    assert_eq!(c.terminal_cores.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn envelope_and_core_order(d1 in 0.4f64..1.0, d2 in 0.4f64..1.0, flip in 0usize..4) {
        let z: Vec<i8> = match flip { 0 => vec![1, 1, 1], 1 => vec![1, -1, 1], 2 => vec![-1, 1, 1], _ => vec![1, 1, -1] };
        let cfg = LayerConfig::new(vec![-d1, 0.0, d2], z).unwrap();
        let opts = EvolveOptions { padding: 3.0, ..Default::default() };
        let run = evolve(layer(), InitialData::Layers(&cfg), 0.2, 0.1, 0.01, &opts).unwrap();
        let k = cfg.k() as f64;
        let n = cfg.len() as f64;
        let init_sup = run.snapshots[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in &run.snapshots {
            for x in v {
                prop_assert!(*x >= -k - 1.0 && *x <= n - k + 1.0);
                prop_assert!(*x <= init_sup + 1.0);
            }
        }
        let tracks = extract_cores(&run).unwrap();
        let first_merge = tracks.merges.first().map(|m| m.time).unwrap_or(f64::INFINITY);
        for (t, c) in tracks.times.iter().zip(&tracks.per_snapshot) {
            prop_assert!(c.len() <= cfg.len());
            if *t < first_merge {
                prop_assert!(c.windows(2).all(|w| w[1] > w[0]));
            }
        }
    }
}
