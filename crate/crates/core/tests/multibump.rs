use disloc_core::layers::solve_heteroclinic;
use disloc_core::multibump::{
    build_windows, energy_of, energy_with_weight, minimize_constrained, minimize_constrained_with,
    MultibumpOptions, WindowSet,
};
use disloc_core::{Error, FarField, Field, FractionalOrder, Grid1D, Modulation, Potential};
use proptest::prelude::*;

fn s075() -> FractionalOrder {
    FractionalOrder::new(0.75).unwrap()
}

fn crossing(f: &Field, level: f64) -> f64 {
    let x = f.grid.nodes();
    let v = &f.values;
    let j = v
        .windows(2)
        .position(|w| (w[0] - level) * (w[1] - level) <= 0.0)
        .unwrap();
    x[j] + (level - v[j]) / (v[j + 1] - v[j]) * (x[j + 1] - x[j])
}

#[test]
fn constant_modulation_pair_is_the_heteroclinic() {
    let (s, p, a) = (s075(), Potential::standard(), Modulation::constant());
    let ws = build_windows(&[0, 1], &a, 60.0).unwrap();
    let grid = ws.suggested_grid(0.1, 1.0).unwrap();
    let sol = minimize_constrained(&ws, s, &p, &a, &grid, 1e-6).unwrap();
    assert!(sol.detachment_margin > 0.0);

    let het = solve_heteroclinic(s, &p, &Grid1D::symmetric(150.0, 3001).unwrap(), 1e-9).unwrap();
    let x0 = crossing(&sol.profile, 0.5);
    let err = grid
        .nodes()
        .iter()
        .zip(&sol.profile.values)
        .filter(|(x, _)| (*x - x0).abs() < 40.0)
        .map(|(x, u)| (u - het.eval(x - x0)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "sup error {err}");
}

#[test]
fn constant_levels_give_zero() {
    let (s, p, a) = (
        s075(),
        Potential::standard(),
        Modulation::cosine(0.3, 10.0).unwrap(),
    );
    let ws = WindowSet::constant(0, -10.0, 10.0).unwrap();
    let grid = Grid1D::new(-40.0, 40.0, 401, false).unwrap();
    let sol = minimize_constrained(&ws, s, &p, &a, &grid, 1e-8).unwrap();
    assert!(sol.profile.values.iter().all(|u| *u == 0.0));
    assert_eq!(sol.energy, 0.0);
    assert_eq!(sol.iterations, 0);
}

#[test]
fn modulated_homoclinic_and_multibump_detach() {
    let (s, p) = (s075(), Potential::standard());
    let a = Modulation::cosine(0.3, 10.0).unwrap();
    for levels in [vec![0, 1, 0], vec![0, 1, 2, 1]] {
        let ws = build_windows(&levels, &a, 50.0).unwrap();
        let grid = ws.suggested_grid(0.2, 1.0).unwrap();
        let sol = minimize_constrained(&ws, s, &p, &a, &grid, 1e-5).unwrap();
        assert!(
            sol.accepted(1e-5),
            "{levels:?}: margin {}",
            sol.detachment_margin
        );
        assert!(sol.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        // Every level is actually visited between the windows.
        for w in &ws.windows {
            let u = sol.profile.eval(w.center());
            assert!((u - w.level as f64).abs() < ws.half_width);
        }
    }
}

#[test]
fn constant_modulation_has_no_homoclinic() {
    let (s, p, a) = (s075(), Potential::standard(), Modulation::constant());
    let ws = build_windows(&[0, 1, 0], &a, 20.0).unwrap();
    let grid = ws.suggested_grid(0.1, 1.0).unwrap();
    match minimize_constrained(&ws, s, &p, &a, &grid, 1e-5) {
        Err(Error::ConstraintTouching { margin }) => assert!(margin <= 0.0),
        Err(e) => assert!(!e.is_validation(), "{e}"),
        Ok(sol) => panic!(
            "accepted a homoclinic with margin {}",
            sol.detachment_margin
        ),
    }
}

#[test]
fn tight_windows_report_touching() {
    let (s, p) = (s075(), Potential::standard());
    let a = Modulation::cosine(0.3, 10.0).unwrap();
    let ws = build_windows(&[0, 1, 0], &a, 30.0).unwrap();
    let grid = ws.suggested_grid(0.2, 1.0).unwrap();
    let sol = minimize_constrained_with(&ws, s, &p, &a, &grid, 1e-5, MultibumpOptions::default())
        .unwrap();
    assert!(sol.detachment_margin <= 0.0);
    assert!(!sol.accepted(1e-5));
    assert!(matches!(
        minimize_constrained(&ws, s, &p, &a, &grid, 1e-5),
        Err(Error::ConstraintTouching { .. })
    ));
}

#[test]
fn rejects_orders_outside_the_finite_energy_range() {
    let a = Modulation::constant();
    let ws = build_windows(&[0, 1], &a, 20.0).unwrap();
    let grid = ws.suggested_grid(0.2, 1.0).unwrap();
    let r = minimize_constrained(
        &ws,
        FractionalOrder::half(),
        &Potential::standard(),
        &a,
        &grid,
        1e-5,
    );
    assert!(matches!(r, Err(Error::InvalidOrder { .. })));
    let small = Grid1D::new(-20.0, 20.0, 201, false).unwrap();
    let r = minimize_constrained(&ws, s075(), &Potential::standard(), &a, &small, 1e-5);
    assert!(matches!(r, Err(Error::InvalidGrid(_))));
}

#[test]
fn energy_of_simple_profiles() {
    let (s, p) = (s075(), Potential::standard());
    let grid = Grid1D::symmetric(60.0, 1201).unwrap();
    let zero = Field::decaying(grid, vec![0.0; 1201], FarField::constant(0.0, 0.0)).unwrap();
    assert_eq!(
        energy_of(&zero, s, &p, &Modulation::constant())
            .unwrap()
            .total(),
        0.0
    );

    let het = solve_heteroclinic(s, &p, &grid, 1e-9).unwrap();
    let e = energy_of(&het.profile, s, &p, &Modulation::constant()).unwrap();
    assert!(e.total() > 0.0 && e.elastic > 0.0 && e.potential > 0.0);

    // A bump on the layer costs energy.
    let bumped = het.profile.with_values(
        grid.nodes()
            .iter()
            .zip(&het.profile.values)
            .map(|(x, u)| u + 0.05 * (-(x - 1.0) * (x - 1.0)).exp())
            .collect(),
    );
    assert!(
        energy_of(&bumped, s, &p, &Modulation::constant())
            .unwrap()
            .total()
            > e.total()
    );

    let a = Modulation::cosine(0.3, 10.0).unwrap();
    let single = energy_of(&het.profile, s, &p, &a).unwrap();
    let double = energy_with_weight(&het.profile, s, &p, |x| 2.0 * a.eval(x)).unwrap();
    assert_eq!(double.elastic, single.elastic);
    assert!((double.potential - 2.0 * single.potential).abs() <= 1e-15 * single.potential);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn projected_descent_never_raises_energy(amp in 0.1f64..0.5, period in 6.0f64..10.0, mult in 2.0f64..4.0) {
        let a = Modulation::cosine(amp, period).unwrap();
        let ws = build_windows(&[0, 1, 0], &a, mult * period).unwrap();
        let grid = ws.suggested_grid(0.25, 1.0).unwrap();
        let sol = minimize_constrained_with(&ws, s075(), &Potential::standard(), &a, &grid, 1e-5, MultibumpOptions::default()).unwrap();
        prop_assert!(sol.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
