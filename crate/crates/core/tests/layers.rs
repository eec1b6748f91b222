use disloc_core::grid::{Field, FractionalOrder, Grid1D};
use disloc_core::layers::{compute_gamma, solve_heteroclinic, GammaConvention, Heteroclinic};
use disloc_core::math::GaussLegendre;
use disloc_core::Potential;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn half_layer_200() -> &'static Heteroclinic {
    static H: OnceLock<Heteroclinic> = OnceLock::new();
    H.get_or_init(|| {
        let g = Grid1D::symmetric(200.0, 8193).unwrap();
        solve_heteroclinic(FractionalOrder::half(), &Potential::standard(), &g, 1e-9).unwrap()
    })
}

#[test]
fn half_layer_is_arctan() {
    let h = half_layer_200();
    let err = h
        .grid()
        .nodes()
        .iter()
        .zip(&h.profile.values)
        .map(|(x, u)| (u - 0.5 - x.atan() / PI).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-4, "max node error {err}");
    assert!((h.eval(0.0) - 0.5).abs() < 1e-10);
    assert!(h.profile.values.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn residual_history_is_decreasing() {
    let h = half_layer_200();
    assert!(h.residual_history.windows(2).all(|w| w[1] < w[0]));
    let g = Grid1D::symmetric(40.0, 1025).unwrap();
    let h = solve_heteroclinic(
        FractionalOrder::new(0.3).unwrap(),
        &Potential::standard(),
        &g,
        1e-8,
    )
    .unwrap();
    assert!(h.residual_history.len() > 2);
    assert!(h.residual_history.windows(2).all(|w| w[1] < w[0]));
    assert!(h.residual < 1e-8);
}

#[test]
fn gamma_at_half_matches_analytic_norm() {
    // Independent oracle: ‖u'‖² for u' = 1/(π(1+x²)) by Gauss-Legendre on
    // x = tan θ, where the integrand is cos²θ/π².
    let gl = GaussLegendre::new(40);
    let norm_sq = gl.integrate(-PI / 2.0, PI / 2.0, |t| t.cos().powi(2) / (PI * PI));
    assert!((norm_sq - 1.0 / (2.0 * PI)).abs() < 1e-14);
    let h = half_layer_200();
    let sq = compute_gamma(h, GammaConvention::ReciprocalNormSquared);
    let lin = compute_gamma(h, GammaConvention::ReciprocalNorm);
    assert!(
        (sq.gamma - 1.0 / norm_sq).abs() < 1e-3,
        "gamma {}",
        sq.gamma
    );
    assert!(
        (lin.gamma - (1.0 / norm_sq).sqrt()).abs() < 1e-3,
        "gamma {}",
        lin.gamma
    );
    let again = compute_gamma(h, GammaConvention::ReciprocalNormSquared);
    assert!((again.gamma - sq.gamma).abs() < 1e-8);
}

#[test]
fn gamma_is_translation_invariant() {
    let h = half_layer_200();
    let g = *h.grid();
    let shift = 10.0 * g.h();
    let moved = Grid1D::new(g.left + shift, g.right + shift, g.n, false).unwrap();
    let values: Vec<f64> = (0..g.n)
        .map(|j| {
            if j + 10 < g.n {
                h.profile.values[j + 10]
            } else {
                h.eval(moved.x(j))
            }
        })
        .collect();
    let field = Field::decaying(moved, values, h.far_field()).unwrap();
    let h2 = Heteroclinic::from_profile(field, h.s, &h.potential).unwrap();
    let a = compute_gamma(h, GammaConvention::ReciprocalNormSquared).gamma;
    let b = compute_gamma(&h2, GammaConvention::ReciprocalNormSquared).gamma;
    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
}

#[test]
fn gamma_is_grid_independent() {
    let p = Potential::standard();
    let s = FractionalOrder::half();
    let fine = solve_heteroclinic(s, &p, &Grid1D::symmetric(200.0, 16385).unwrap(), 1e-9).unwrap();
    let a = compute_gamma(&fine, GammaConvention::ReciprocalNormSquared).gamma;
    let b = compute_gamma(half_layer_200(), GammaConvention::ReciprocalNormSquared).gamma;
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn decay_exponent_at_three_quarters() {
    let g = Grid1D::symmetric(200.0, 8193).unwrap();
    let h = solve_heteroclinic(
        FractionalOrder::new(0.75).unwrap(),
        &Potential::standard(),
        &g,
        1e-9,
    )
    .unwrap();
    let (beta, r2) = h.decay_fit();
    assert!((1.35..=1.65).contains(&beta), "decay exponent {beta}");
    assert!(r2 > 0.99);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn layer_is_odd_about_the_centre(s in 0.15f64..0.9) {
        let g = Grid1D::symmetric(30.0, 513).unwrap();
        let h = solve_heteroclinic(FractionalOrder::new(s).unwrap(), &Potential::standard(), &g, 1e-8).unwrap();
        for x in [0.3, 1.7, 5.0, 12.5, 29.0] {
            prop_assert!((h.eval(-x) + h.eval(x) - 1.0).abs() < 1e-8);
        }
        prop_assert!(h.profile.values.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(h.profile.values.iter().all(|u| *u > 0.0 && *u < 1.0));
    }
}
