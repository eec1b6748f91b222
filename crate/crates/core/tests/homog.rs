use std::f64::consts::PI;
use std::sync::OnceLock;

use disloc_core::homog::{
    constant_state_lambda, density_approximation_error, hamiltonian_slope_only,
    hamiltonian_stress_only, level_set_points, meanfield_vs_particles, orowan_scan, solve_cell,
    solve_meanfield, stress_identity_gap, CellProblem, MeanFieldOptions, OrowanOptions,
};
use disloc_core::layers::solve_heteroclinic;
use disloc_core::{
    Error, FarField, Field, FractionalOrder, Grid1D, Heteroclinic, LayerConfig, Potential,
};
use proptest::prelude::*;

fn half_layer() -> &'static Heteroclinic {
    static L: OnceLock<Heteroclinic> = OnceLock::new();
    L.get_or_init(|| {
        let g = Grid1D::symmetric(200.0, 8193).unwrap();
        solve_heteroclinic(FractionalOrder::half(), &Potential::standard(), &g, 1e-9).unwrap()
    })
}

fn arctan_field(half: f64, n: usize) -> Field {
    let g = Grid1D::symmetric(half, n).unwrap();
    let v = g.nodes().iter().map(|x| 0.5 + x.atan() / PI).collect();
    Field::decaying(
        g,
        v,
        FarField {
            l_minus: 0.0,
            l_plus: 1.0,
            beta: 1.0,
            c_minus: 1.0 / PI,
            c_plus: 1.0 / PI,
        },
    )
    .unwrap()
}

/// `0` left of `-5`, `1` right of `5`, a cosine ramp between.
fn ramp(n: usize, half: f64) -> Field {
    let g = Grid1D::symmetric(half, n).unwrap();
    let v = g
        .nodes()
        .iter()
        .map(|&x| {
            if x <= -5.0 {
                0.0
            } else if x >= 5.0 {
                1.0
            } else {
                0.5 * (1.0 + (PI * x / 10.0).sin())
            }
        })
        .collect();
    Field::decaying(g, v, FarField::constant(0.0, 1.0)).unwrap()
}

#[test]
fn level_sets_of_arctan_profile() {
    let y = level_set_points(&arctan_field(50.0, 20001), 0.25).unwrap();
    assert_eq!(y.len(), 3);
    for (yi, exact) in y.iter().zip([-1.0, 0.0, 1.0]) {
        assert!((yi - exact).abs() < 1e-4, "{yi} vs {exact}");
    }
    // Levels the grid misses come from the tail model.
    let y = level_set_points(&arctan_field(5.0, 1001), 0.05).unwrap();
    assert_eq!(y.len(), 19);
    assert!((y[0] - (PI * (0.05 - 0.5)).tan()).abs() < 0.1);
    assert!(y.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn level_sets_of_sharp_and_short_profiles() {
    let g = Grid1D::symmetric(10.0, 2001).unwrap();
    let sharp = Field::decaying(
        g,
        g.nodes()
            .iter()
            .map(|x| 0.5 * (1.0 + (x / 0.05).tanh()))
            .collect(),
        FarField::constant(0.0, 1.0),
    )
    .unwrap();
    let y = level_set_points(&sharp, 0.1).unwrap();
    assert_eq!(y.len(), 9);
    assert!(y.iter().all(|yi| yi.abs() < 0.2));
    assert!(level_set_points(&sharp, 1.5).unwrap().is_empty());
    let bumpy = sharp.with_values(g.nodes().iter().map(|x| (-x * x).exp()).collect());
    assert!(matches!(
        level_set_points(&bumpy, 0.1),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn layer_sums_approximate_a_ramp() {
    let v = ramp(8001, 40.0);
    let coarse = density_approximation_error(&v, half_layer(), 0.1, 0.1).unwrap();
    let fine = density_approximation_error(&v, half_layer(), 0.05, 0.05).unwrap();
    assert!(coarse < 0.15, "{coarse}");
    assert!(fine < coarse, "{fine} vs {coarse}");

    // A single δ-scaled layer has no interior level set.
    let g = Grid1D::symmetric(40.0, 4001).unwrap();
    let delta = 0.1;
    let one = Field::decaying(
        g,
        g.nodes()
            .iter()
            .map(|x| delta * half_layer().eval(x / (0.1 * delta)))
            .collect(),
        FarField::constant(0.0, delta),
    )
    .unwrap();
    assert!(density_approximation_error(&one, half_layer(), 0.1, delta).unwrap() < 2.0 * delta);
}

#[test]
fn stress_at_level_sets_matches_discrete_sum() {
    let v = ramp(16001, 40.0);
    let gaps: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|d| stress_identity_gap(&v, *d).unwrap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.05, "{gaps:?}");
}

#[test]
fn constant_state_cells_match_the_ode() {
    let s = FractionalOrder::half();
    let mut lambdas = Vec::new();
    for l in [
        1.0 / (4.0 * PI),
        1.0 / (2.0 * PI) - 0.01,
        1.0 / PI,
        1.5 / PI,
        2.0 / PI,
    ] {
        let cp = CellProblem::new(s, 0.0, l, 1.0, 16).unwrap();
        let r = solve_cell(&cp, 1000.0).unwrap();
        assert!(
            (r.lambda - constant_state_lambda(l)).abs() < 1e-3,
            "L = {l}: {} vs {}",
            r.lambda,
            constant_state_lambda(l)
        );
        assert!(r.converged);
        lambdas.push(r.lambda);
    }
    assert!(lambdas.windows(2).all(|w| w[1] >= w[0] - 1e-6));
    assert!(lambdas[0].abs() < 1e-8 && lambdas[1].abs() < 1e-8);
}

#[test]
fn stress_free_cells_do_not_drift() {
    let s = FractionalOrder::half();
    let cp = CellProblem::resolved(s, 0.2, 0.0, 1.0, 0.05).unwrap();
    let r = solve_cell(&cp, 200.0).unwrap();
    assert!(r.lambda.abs() < 1e-6, "{}", r.lambda);
    // Reversing the stress reverses λ.
    let up = solve_cell(&CellProblem { l: 0.05, ..cp }, 200.0).unwrap();
    let down = solve_cell(&CellProblem { l: -0.05, ..cp }, 200.0).unwrap();
    assert!(up.lambda > 0.0);
    assert!(
        (up.lambda + down.lambda).abs() < 1e-6,
        "{} {}",
        up.lambda,
        down.lambda
    );
}

#[test]
fn scaling_restrictions_are_the_same_cell() {
    let s = FractionalOrder::new(0.75).unwrap();
    let base = CellProblem::new(s, 0.25, 0.1, 4.0, 128).unwrap();
    let a = hamiltonian_slope_only(&base, 0.25, 64.0).unwrap();
    let b = solve_cell(&CellProblem { l: 0.0, ..base }, 64.0).unwrap();
    assert_eq!(a.lambda, b.lambda);
    let c = hamiltonian_stress_only(&base, 0.3, 64.0).unwrap();
    let d = solve_cell(
        &CellProblem {
            p: 0.0,
            l: 0.3,
            ..base
        },
        64.0,
    )
    .unwrap();
    assert_eq!(c.lambda, d.lambda);
}

#[test]
fn orowan_ratio_approaches_one() {
    let s = FractionalOrder::half();
    let t = orowan_scan(
        s,
        1.0,
        1.0,
        &[0.4, 0.2, 0.1],
        2.0 * PI,
        &OrowanOptions::default(),
    )
    .unwrap();
    assert!(t.all_converged());
    assert!(t.monotone_approach());
    assert!((t.final_ratio().unwrap() - 1.0).abs() < 0.15);

    let zero = orowan_scan(
        s,
        1.0,
        0.0,
        &[0.4, 0.2],
        2.0 * PI,
        &OrowanOptions::default(),
    )
    .unwrap();
    assert!(zero
        .rows
        .iter()
        .all(|r| r.sample.lambda.abs() < 1e-6 && r.ratio.is_none()));
    assert!(orowan_scan(s, 0.0, 1.0, &[0.4], 2.0 * PI, &OrowanOptions::default()).is_err());
    assert!(orowan_scan(
        s,
        1.0,
        1.0,
        &[0.1, 0.2],
        2.0 * PI,
        &OrowanOptions::default()
    )
    .is_err());
}

fn erf_ramp(centers: &[f64], delta: f64, sigma: f64, g: &Grid1D) -> Field {
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
    Field::decaying(*g, v, FarField::constant(0.0, delta * centers.len() as f64)).unwrap()
}

#[test]
fn meanfield_keeps_monotonicity_limits_and_mass() {
    let g = Grid1D::new(-3.0, 4.0, 1401, false).unwrap();
    let u0 = erf_ramp(&[0.0, 0.3, 0.5, 1.0], 0.25, 0.2, &g);
    let run = solve_meanfield(
        &u0,
        0.02,
        &MeanFieldOptions {
            dt_out: 0.002,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(run.times.len(), 11);
    for u in &run.snapshots {
        assert!(u.windows(2).all(|w| w[1] >= w[0]));
        assert!(u[0].abs() < 1e-6 && (u[u.len() - 1] - 1.0).abs() < 1e-6);
    }
    let m = run.masses();
    assert!(m.iter().all(|x| (x - m[0]).abs() < 1e-6));
    // The repulsive front spreads.
    let width = |u: &[f64]| u.iter().filter(|v| **v > 0.05 && **v < 0.95).count();
    assert!(width(run.snapshots.last().unwrap()) > width(&run.snapshots[0]));

    let flat = Field::decaying(g, vec![0.5; g.n], FarField::constant(0.5, 0.5)).unwrap();
    let still = solve_meanfield(&flat, 0.01, &MeanFieldOptions::default()).unwrap();
    assert!(still.snapshots.iter().all(|u| u.iter().all(|v| *v == 0.5)));

    let forced = MeanFieldOptions {
        dt: Some(1.0),
        ..Default::default()
    };
    assert!(matches!(
        solve_meanfield(&u0, 0.01, &forced),
        Err(Error::CflViolation { .. })
    ));
}

#[test]
fn meanfield_level_sets_follow_particles() {
    let n = 16;
    let cfg = LayerConfig::new(
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        vec![1; n],
    )
    .unwrap();
    let opts = MeanFieldOptions {
        dt_out: 0.001,
        ..Default::default()
    };
    let cmp = meanfield_vs_particles(&cfg, 1.0 / n as f64, 0.01, 1.0 / 400.0, &opts).unwrap();
    assert!(cmp.sup_gap < 0.1, "{}", cmp.sup_gap);
    assert!(cmp.particles_ordered && cmp.level_sets_ordered);
    assert!(!cmp.delta_too_large);
    // The outermost particle moves visibly over the horizon.
    assert!(cmp.particles.last().unwrap()[n - 1] - 1.0 > 0.01);

    let pair = LayerConfig::new(vec![0.0, 1.0], vec![1, 1]).unwrap();
    assert!(
        meanfield_vs_particles(&pair, 0.5, 0.01, 1.0 / 200.0, &opts)
            .unwrap()
            .delta_too_large
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn meanfield_scheme_is_order_preserving(a in -0.5f64..0.5, gap in 0.05f64..0.5, lift in 0.0f64..0.3, w in 0.1f64..0.4) {
        let g = Grid1D::new(-4.0, 4.0, 801, false).unwrap();
        let u0 = erf_ramp(&[a, a + gap], 0.5, w, &g);
        // Shifting a nondecreasing profile left raises it.
        let v0 = erf_ramp(&[a - lift, a + gap - lift], 0.5, w, &g);
        prop_assert!(u0.values.iter().zip(&v0.values).all(|(u, v)| u <= v));
        let opts = MeanFieldOptions { dt_out: 0.005, ..Default::default() };
        let ru = solve_meanfield(&u0, 0.02, &opts).unwrap();
        let rv = solve_meanfield(&v0, 0.02, &opts).unwrap();
        for (u, v) in ru.snapshots.iter().zip(&rv.snapshots) {
            prop_assert!(u.iter().zip(v).all(|(x, y)| *x <= *y + 1e-12));
        }
    }
}
