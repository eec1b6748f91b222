//! The heteroclinic layer `u⋆` joining the wells `0` and `1`, the mobility
//! constant built from `‖u⋆'‖`, and superpositions of rescaled layers.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fraclap::{PaddedPreconditioner, QuadratureOperator};
use crate::grid::{FarField, Field, FractionalOrder, Grid1D};
use crate::math::{atan, cubic_at, fabs, first_crossing, fit_line, log, pow, sup_norm, PI};
use crate::particles::LayerConfig;
use crate::potential::Potential;

/// Monotone solution of `(-Δ)^s u + W'(u) = 0` with `u(-∞) = 0`,
/// `u(+∞) = 1`, `u(0) = 1/2`.
#[derive(Debug, Clone)]
pub struct Heteroclinic {
    pub profile: Field,
    pub s: FractionalOrder,
    pub potential: Potential,
    /// Sup-norm of `(-Δ)^s u + W'(u)` on the grid.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after each accepted step, starting with the initial guess.
    pub residual_history: Vec<f64>,
    derivative: Vec<f64>,
}

impl Heteroclinic {
    /// Wraps an existing profile (for instance one read from disk or moved
    /// to another window), recomputing its residual and derivative.
    pub fn from_profile(profile: Field, s: FractionalOrder, p: &Potential) -> Result<Self> {
        let far = profile.far_field.ok_or(Error::IncompleteField(
            "heteroclinic profile needs a tail model",
        ))?;
        let op = QuadratureOperator::new(&profile.grid, s)?;
        let mut r = op.apply(&profile.values, &far);
        for (ri, ui) in r.iter_mut().zip(&profile.values) {
            *ri += p.dw(*ui);
        }
        let derivative = derivative_with_tail(&profile.grid, &profile.values, &far);
        Ok(Heteroclinic {
            residual: sup_norm(&r),
            profile,
            s,
            potential: *p,
            iterations: 0,
            residual_history: Vec::new(),
            derivative,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.profile.grid
    }

    pub fn far_field(&self) -> FarField {
        self.profile
            .far_field
            .expect("heteroclinic always carries a tail model")
    }

    /// `u⋆(x)` anywhere on the line.
    pub fn eval(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    /// `u⋆'(x)` anywhere on the line.
    pub fn deriv(&self, x: f64) -> f64 {
        let g = self.grid();
        if x < g.left || x > g.right {
            let far = self.far_field();
            let c = if x > 0.0 { far.c_plus } else { far.c_minus };
            return far.beta * c / pow(fabs(x), far.beta + 1.0);
        }
        cubic_at(&self.derivative, g.position(x))
    }

    /// Node values of `u⋆'`.
    pub fn derivative(&self) -> &[f64] {
        &self.derivative
    }

    /// Least-squares slope of `log(1 - u⋆)` against `log x` on
    /// `[0.1 L, 0.5 L]`; returns `(exponent, r²)`.
    pub fn decay_fit(&self) -> (f64, f64) {
        let g = self.grid();
        let (lo, hi) = (0.1 * g.right, 0.5 * g.right);
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        for (j, &u) in self.profile.values.iter().enumerate() {
            let x = g.x(j);
            if x >= lo && x <= hi && u < 1.0 {
                lx.push(log(x));
                ly.push(log(1.0 - u));
            }
        }
        let (_, b, r2) = fit_line(&lx, &ly);
        (-b, r2)
    }
}

/// Options for [`solve_heteroclinic_with`].
#[derive(Debug, Clone, Copy)]
pub struct HeteroclinicOptions {
    pub max_iterations: usize,
    /// Shift `α` of the preconditioner `(α + |ξ|^{2s})^{-1}`.
    pub shift: f64,
}

impl Default for HeteroclinicOptions {
    fn default() -> Self {
        HeteroclinicOptions {
            max_iterations: 20_000,
            shift: 1.0,
        }
    }
}

pub fn solve_heteroclinic(
    s: FractionalOrder,
    p: &Potential,
    grid: &Grid1D,
    tol: f64,
) -> Result<Heteroclinic> {
    solve_heteroclinic_with(s, p, grid, tol, HeteroclinicOptions::default())
}

/// Damped, preconditioned relaxation of `u_t = -(-Δ)^s u - W'(u)`.
///
/// Each step moves along `-(α + P)^{-1} F(u)` where `F` is the residual and
/// `P` the spectral operator on an end-value-padded periodic copy of the
/// grid. A
/// step is accepted only if the residual drops and the iterate stays
/// monotone; otherwise it is halved. The odd symmetry
/// `u(-x) = 1 - u(x)` is imposed after every step, which also removes the
/// translation mode.
pub fn solve_heteroclinic_with(
    s: FractionalOrder,
    p: &Potential,
    grid: &Grid1D,
    tol: f64,
    opts: HeteroclinicOptions,
) -> Result<Heteroclinic> {
    if grid.periodic {
        return Err(Error::WrongBoundary {
            expected: "decaying (whole-line)",
        });
    }
    if fabs(grid.left + grid.right) > 1e-12 * grid.right {
        return Err(Error::InvalidGrid(
            "heteroclinic grid must be symmetric about 0".into(),
        ));
    }
    if !(tol >= 1e-10) {
        return Err(Error::InvalidInput(
            "heteroclinic tolerance must be at least 1e-10".into(),
        ));
    }
    let beta = s.two_s();
    let op = QuadratureOperator::new(grid, s)?;
    let pre = PaddedPreconditioner::new(grid, s, opts.shift)?;

    let residual_of = |u: &[f64]| -> (Vec<f64>, FarField) {
        let far = match_far_field(grid, u, beta);
        let mut r = op.apply(u, &far);
        for (ri, ui) in r.iter_mut().zip(u) {
            *ri += p.dw(*ui);
        }
        (r, far)
    };
    let mut u: Vec<f64> = grid.nodes().iter().map(|&x| initial_guess(s, x)).collect();
    symmetrize(&mut u);
    let (mut r, mut far) = residual_of(&u);
    let mut res = sup_norm(&r);
    let mut tau: f64 = 1.0;
    let mut it = 0;
    let mut history = vec![res];
    while res >= tol {
        if it >= opts.max_iterations || tau < 1e-10 {
            return Err(Error::SolverFailure {
                solver: "heteroclinic relaxation",
                residual: res,
                iterations: it,
            });
        }
        it += 1;
        let d = pre.apply(&r);
        let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - tau * b).collect();
        symmetrize(&mut trial);
        if !is_monotone(&trial) {
            tau *= 0.5;
            continue;
        }
        let (rt, ft) = residual_of(&trial);
        let rest = sup_norm(&rt);
        if rest < res {
            u = trial;
            r = rt;
            far = ft;
            res = rest;
            history.push(res);
            tau = (tau * 1.5).min(1.0);
        } else {
            tau *= 0.5;
        }
    }

    // The symmetric iterate already crosses 1/2 at 0 (up to rounding);
    // recentre anyway in case the grid is not node-centred.
    let nodes = grid.nodes();
    let shift = first_crossing(&nodes, &u, 0.5).unwrap_or(0.0);
    if fabs(shift) > 1e-13 {
        let f = Field::decaying(*grid, u.clone(), far)?;
        u = nodes.iter().map(|x| f.eval(x + shift)).collect();
        symmetrize(&mut u);
        let (rt, ft) = residual_of(&u);
        res = sup_norm(&rt);
        far = ft;
    }
    let derivative = derivative_with_tail(grid, &u, &far);
    Ok(Heteroclinic {
        profile: Field::decaying(*grid, u, far)?,
        s,
        potential: *p,
        residual: res,
        iterations: it,
        residual_history: history,
        derivative,
    })
}

/// Tail `1 - c/x^β` continuous with the end nodes.
fn match_far_field(grid: &Grid1D, u: &[f64], beta: f64) -> FarField {
    let n = u.len();
    FarField {
        l_minus: 0.0,
        l_plus: 1.0,
        beta,
        c_minus: u[0] * pow(-grid.left, beta),
        c_plus: (1.0 - u[n - 1]) * pow(grid.right, beta),
    }
}

/// `1/2 + arctan(x)/π` at `s = 1/2`; otherwise a monotone profile with the
/// same slope at 0 and the `|x|^{-2s}` tail.
pub(crate) fn initial_guess(s: FractionalOrder, x: f64) -> f64 {
    if s.get() == 0.5 {
        return 0.5 + atan(x) / PI;
    }
    let beta = s.two_s();
    let w = 0.5 * beta * PI;
    let v = 0.5 * (1.0 - pow(1.0 + fabs(x) / w, -beta));
    if x >= 0.0 {
        0.5 + v
    } else {
        0.5 - v
    }
}

fn symmetrize(u: &mut [f64]) {
    let n = u.len();
    for j in 0..n.div_ceil(2) {
        let k = n - 1 - j;
        let v = 0.5 * (u[j] + 1.0 - u[k]);
        u[j] = v;
        u[k] = 1.0 - v;
    }
}

fn is_monotone(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[1] >= w[0])
}

/// Eighth-order centred differences inside, the tail model's derivative on
/// the four outermost nodes of each side.
fn derivative_with_tail(grid: &Grid1D, u: &[f64], far: &FarField) -> Vec<f64> {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = u.len();
    let h = grid.h();
    let mut d = vec![0.0; n];
    for j in 4..n - 4 {
        d[j] = C
            .iter()
            .enumerate()
            .map(|(k, c)| c * (u[j + k + 1] - u[j - k - 1]))
            .sum::<f64>()
            / h;
    }
    for j in (0..4).chain(n - 4..n) {
        let x = grid.x(j);
        let c = if x > 0.0 { far.c_plus } else { far.c_minus };
        d[j] = far.beta * c / pow(fabs(x), far.beta + 1.0);
    }
    d
}

/// Which power of `‖u⋆'‖` the mobility is the reciprocal of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaConvention {
    /// `γ = 1/‖u⋆'‖`, the literal definition.
    ReciprocalNorm,
    /// `γ = 1/‖u⋆'‖²`.
    ReciprocalNormSquared,
}

impl GammaConvention {
    pub fn name(self) -> &'static str {
        match self {
            GammaConvention::ReciprocalNorm => "reciprocal-norm",
            GammaConvention::ReciprocalNormSquared => "reciprocal-norm-squared",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "reciprocal-norm" | "norm" => Some(GammaConvention::ReciprocalNorm),
            "reciprocal-norm-squared" | "norm-squared" | "norm_sq" => {
                Some(GammaConvention::ReciprocalNormSquared)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobility {
    pub gamma: f64,
    pub convention: GammaConvention,
    /// `‖u⋆'‖²_{L²}`.
    pub norm_sq: f64,
}

/// `‖u⋆'‖²` by the trapezoid rule on the grid plus the analytic integral of
/// the tail `(β c / |x|^{β+1})²` beyond it.
pub fn derivative_norm_sq(h: &Heteroclinic) -> f64 {
    let g = h.grid();
    let d = h.derivative();
    let n = d.len();
    let mut acc = 0.0;
    for (j, v) in d.iter().enumerate() {
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        acc += w * v * v;
    }
    acc *= g.h();
    let far = h.far_field();
    let e = 2.0 * far.beta + 1.0;
    let tail = |c: f64, r: f64| far.beta * far.beta * c * c / (e * pow(r, e));
    acc + tail(far.c_plus, g.right) + tail(far.c_minus, -g.left)
}

pub fn compute_gamma(h: &Heteroclinic, convention: GammaConvention) -> Mobility {
    let norm_sq = derivative_norm_sq(h);
    let gamma = match convention {
        GammaConvention::ReciprocalNorm => 1.0 / libm::sqrt(norm_sq),
        GammaConvention::ReciprocalNormSquared => 1.0 / norm_sq,
    };
    Mobility {
        gamma,
        convention,
        norm_sq,
    }
}

/// Mobility in the particle law obeyed by the cores of the scaled
/// evolution. With the operator normalized by its symbol, the far-field
/// stress of a layer carries the kernel constant `C(s)`, so the effective
/// coefficient is `C(s)·γ`; at `s = 1/2` and the squared convention it is 2.
pub fn evolution_gamma(h: &Heteroclinic, convention: GammaConvention) -> f64 {
    crate::fraclap::kernel_constant(h.s) * compute_gamma(h, convention).gamma
}

/// `Σ u⋆(ζ_i (x - x̄_i)/ε) - K` sampled on `grid`.
///
/// The far-field model is exact at leading order: both limits follow from
/// the orientations and each layer contributes `± c⋆ ε^{2s}/|x|^{2s}`.
pub fn superpose_layers(
    h: &Heteroclinic,
    cfg: &LayerConfig,
    eps: f64,
    grid: &Grid1D,
) -> Result<Field> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    if grid.periodic {
        return Err(Error::WrongBoundary {
            expected: "decaying (whole-line)",
        });
    }
    let k = cfg.k() as f64;
    let values = grid
        .nodes()
        .iter()
        .map(|&x| superposition_at(h, cfg, eps, x))
        .collect();
    let far = h.far_field();
    let ell = cfg.ell() as f64;
    let scale = pow(eps, far.beta);
    let plus_minus = cfg.len() as f64 - k;
    let far = FarField {
        l_minus: 0.0,
        l_plus: plus_minus - k,
        beta: far.beta,
        c_minus: ell * far.c_minus * scale,
        c_plus: ell * far.c_plus * scale,
    };
    Field::decaying(*grid, values, far)
}

/// Value of the well-prepared superposition at a single point.
pub fn superposition_at(h: &Heteroclinic, cfg: &LayerConfig, eps: f64, x: f64) -> f64 {
    let mut v = -(cfg.k() as f64);
    for (xi, z) in cfg.positions().iter().zip(cfg.orientations()) {
        v += h.eval(*z as f64 * (x - xi) / eps);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_layer() -> Heteroclinic {
        let g = Grid1D::symmetric(50.0, 1025).unwrap();
        solve_heteroclinic(FractionalOrder::half(), &Potential::standard(), &g, 1e-9).unwrap()
    }

    #[test]
    fn symmetry_and_centering() {
        let h = half_layer();
        let n = h.profile.values.len();
        assert!((h.profile.values[n / 2] - 0.5).abs() < 1e-12);
        for j in 0..n {
            assert!((h.profile.values[j] + h.profile.values[n - 1 - j] - 1.0).abs() < 1e-12);
        }
        assert!(h.residual < 1e-9);
    }

    #[test]
    fn rejects_asymmetric_grid_and_tiny_tol() {
        let p = Potential::standard();
        let s = FractionalOrder::half();
        let g = Grid1D::new(-10.0, 20.0, 64, false).unwrap();
        assert!(solve_heteroclinic(s, &p, &g, 1e-8).is_err());
        let g = Grid1D::symmetric(10.0, 64).unwrap();
        assert!(solve_heteroclinic(s, &p, &g, 1e-12).is_err());
    }

    #[test]
    fn single_layer_superposition_is_the_profile() {
        let h = half_layer();
        let cfg = LayerConfig::new(vec![1.0], vec![1]).unwrap();
        let g = Grid1D::symmetric(10.0, 201).unwrap();
        let f = superpose_layers(&h, &cfg, 1.0, &g).unwrap();
        let far = f.far_field.unwrap();
        assert_eq!((far.l_minus, far.l_plus), (0.0, 1.0));
        for (x, v) in g.nodes().iter().zip(&f.values) {
            assert!((v - h.eval(x - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn dipole_and_tripole_limits() {
        let h = half_layer();
        let g = Grid1D::symmetric(10.0, 201).unwrap();
        let cfg = LayerConfig::new(vec![-1.0, 1.0], vec![1, -1]).unwrap();
        let far = superpose_layers(&h, &cfg, 0.5, &g)
            .unwrap()
            .far_field
            .unwrap();
        assert_eq!((far.l_minus, far.l_plus), (0.0, 0.0));
        let cfg = LayerConfig::alternating(vec![-1.0, 0.0, 1.0]).unwrap();
        let far = superpose_layers(&h, &cfg, 0.5, &g)
            .unwrap()
            .far_field
            .unwrap();
        assert_eq!((far.l_minus, far.l_plus), (0.0, 1.0));
    }
}
