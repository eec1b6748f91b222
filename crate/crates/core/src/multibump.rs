//! Stationary solutions of `(-Δ)^s u + a(x) W'(u) = 0` for `s ∈ (1/2, 1)`
//! obtained by minimizing the energy over profiles forced through a chain of
//! windows, one integer level per window.
//!
//! When the minimizer stays strictly inside every window the constraints are
//! inactive and the profile is a genuine critical point. Touching a window
//! means the windows were badly placed (or, for constant `a`, that the
//! requested orbit does not exist).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fraclap::{kernel_constant, PaddedPreconditioner, QuadratureOperator};
use crate::grid::{FarField, Field, FractionalOrder, Grid1D};
use crate::layers::initial_guess;
use crate::math::{ceil, fabs, floor, sqrt};
use crate::potential::{Modulation, Potential};

/// Half-width of the band `|u - ζ| ≤ δ_w` enforced on window nodes.
pub const WINDOW_HALF_WIDTH: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub level: i64,
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Ordered, disjoint windows. The profile tends to the first level on the
/// left and to the last on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub windows: Vec<Window>,
    pub half_width: f64,
    /// Distance between consecutive window centres.
    pub spacing: f64,
}

impl WindowSet {
    /// Checks order, disjointness and unit jumps between levels.
    pub fn new(windows: Vec<Window>, spacing: f64) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidLevels(
                "at least one window is required".into(),
            ));
        }
        for w in &windows {
            if !(w.hi > w.lo) {
                return Err(Error::InvalidInput(format!(
                    "empty window [{}, {}]",
                    w.lo, w.hi
                )));
            }
        }
        for pair in windows.windows(2) {
            if !(pair[1].lo > pair[0].hi) {
                return Err(Error::InvalidInput(
                    "windows must be disjoint and increasing".into(),
                ));
            }
            if (pair[1].level - pair[0].level).abs() != 1 {
                return Err(Error::InvalidLevels(format!(
                    "levels {} -> {} do not differ by one",
                    pair[0].level, pair[1].level
                )));
            }
        }
        Ok(WindowSet {
            windows,
            half_width: WINDOW_HALF_WIDTH,
            spacing,
        })
    }

    /// A single window pinning the profile to one level.
    pub fn constant(level: i64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![Window { lo, hi, level }], hi - lo)
    }

    pub fn levels(&self) -> Vec<i64> {
        self.windows.iter().map(|w| w.level).collect()
    }

    pub fn left_level(&self) -> f64 {
        self.windows[0].level as f64
    }

    pub fn right_level(&self) -> f64 {
        self.windows[self.windows.len() - 1].level as f64
    }

    /// `[lo, hi]` of the outermost windows.
    pub fn span(&self) -> (f64, f64) {
        (self.windows[0].lo, self.windows[self.windows.len() - 1].hi)
    }

    /// A whole-line grid of step about `h` covering the windows with a margin
    /// of `margin_factor · spacing` on both sides.
    pub fn suggested_grid(&self, h: f64, margin_factor: f64) -> Result<Grid1D> {
        let (lo, hi) = self.span();
        let margin = margin_factor.max(1.0) * self.spacing;
        let (left, right) = (lo - margin, hi + margin);
        let n = ceil((right - left) / h) as usize + 1;
        Grid1D::new(left, right, n, false)
    }

    /// Index of the window containing `x`, if any.
    pub fn window_at(&self, x: f64) -> Option<usize> {
        self.windows.iter().position(|w| w.contains(x))
    }

    /// Piecewise-linear background: the window level on each window, linear
    /// in the gaps, the end levels outside.
    pub fn reference(&self, x: f64) -> f64 {
        let ws = &self.windows;
        if x <= ws[0].hi {
            return ws[0].level as f64;
        }
        for pair in ws.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if x <= b.lo {
                let t = (x - a.hi) / (b.lo - a.hi);
                return a.level as f64 + t * (b.level - a.level) as f64;
            }
            if x <= b.hi {
                return b.level as f64;
            }
        }
        ws[ws.len() - 1].level as f64
    }
}

/// Windows of width `min(P_a, spacing/2)` with centres `spacing` apart,
/// placed so that the midpoint of every gap is a minimum of `a`. The layout
/// is roughly centred on `x = 0`. When `spacing` is an odd multiple of `P_a`
/// the window centres fall on maxima of `a`.
pub fn build_windows(levels: &[i64], a: &Modulation, spacing: f64) -> Result<WindowSet> {
    if levels.len() < 2 {
        return Err(Error::InvalidLevels("need at least two levels".into()));
    }
    for pair in levels.windows(2) {
        if (pair[1] - pair[0]).abs() != 1 {
            return Err(Error::InvalidLevels(format!(
                "levels {} -> {} do not differ by one",
                pair[0], pair[1]
            )));
        }
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidInput(
            "window spacing must be positive".into(),
        ));
    }
    let width = if a.is_constant() {
        0.5 * spacing
    } else {
        if spacing < 2.0 * a.period {
            return Err(Error::InvalidInput(format!(
                "spacing {spacing} is less than two modulation periods ({})",
                2.0 * a.period
            )));
        }
        a.period
    };
    let n = levels.len();
    let target = -0.5 * (n as f64 - 2.0) * spacing;
    let first_gap = if a.is_constant() {
        target
    } else {
        let p = a.period;
        let m = a.a_minimum();
        m + p * floor((target - m) / p + 0.5)
    };
    let c0 = first_gap - 0.5 * spacing;
    let windows = levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let c = c0 + i as f64 * spacing;
            Window {
                lo: c - 0.5 * width,
                hi: c + 0.5 * width,
                level,
            }
        })
        .collect();
    WindowSet::new(windows, spacing)
}

#[derive(Debug, Clone, Copy)]
pub struct MultibumpOptions {
    pub max_iterations: usize,
    /// Shift `α` of the preconditioner `(α + (-Δ)^s)^{-1}`.
    pub shift: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub max_step: f64,
}

impl Default for MultibumpOptions {
    fn default() -> Self {
        MultibumpOptions {
            max_iterations: 50_000,
            shift: 1.0,
            armijo: 1e-4,
            max_step: 1e3,
        }
    }
}

/// Elastic and potential parts of the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub elastic: f64,
    pub potential: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.elastic + self.potential
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedSolution {
    pub profile: Field,
    pub windows: WindowSet,
    pub energy: f64,
    pub energy_parts: Energy,
    /// Sup of `|(-Δ)^s u + a W'(u)|` over nodes outside the windows.
    pub euler_lagrange_residual: f64,
    /// Sup of the same residual over every node.
    pub full_residual: f64,
    /// `min (δ_w - |u - ζ|)` over window nodes.
    pub detachment_margin: f64,
    pub iterations: usize,
    /// Energy after each accepted step, starting with the initial guess.
    pub energy_history: Vec<f64>,
}

impl ConstrainedSolution {
    pub fn accepted(&self, tol: f64) -> bool {
        self.detachment_margin > 0.0 && self.euler_lagrange_residual < tol
    }
}

/// Far-field coefficient of a layer of unit height: linearizing around a
/// well gives `u - ζ ≈ ∓ C(s) / (2s ā W''(ζ)) |x|^{-2s}`, with `ā` the
/// harmonic mean of `a`.
pub fn tail_coefficient(s: FractionalOrder, p: &Potential, a: &Modulation) -> f64 {
    let a_harm = sqrt(1.0 - a.amplitude * a.amplitude);
    kernel_constant(s) / (s.two_s() * a_harm * p.d2w(0.0))
}

struct Problem<'a> {
    op: QuadratureOperator,
    far: FarField,
    a_nodes: Vec<f64>,
    reference: Vec<f64>,
    /// `(-Δ)^s` of the reference closed by `far`.
    a_ref: Vec<f64>,
    p: &'a Potential,
    h: f64,
}

impl Problem<'_> {
    /// Returns `((-Δ)^s u + a W'(u), J(u))`.
    fn eval(&self, u: &[f64]) -> (Vec<f64>, Energy) {
        let au = self.op.apply(u, &self.far);
        let mut elastic = 0.0;
        let mut potential = 0.0;
        let mut g = Vec::with_capacity(u.len());
        for j in 0..u.len() {
            let w = u[j] - self.reference[j];
            // The far-field part of the operator cancels in A u - A u_ref.
            let lw = au[j] - self.a_ref[j];
            elastic += w * (0.5 * lw + self.a_ref[j]);
            potential += self.a_nodes[j] * self.p.w(u[j]);
            g.push(au[j] + self.a_nodes[j] * self.p.dw(u[j]));
        }
        (
            g,
            Energy {
                elastic: self.h * elastic,
                potential: self.h * potential,
            },
        )
    }
}

fn make_problem<'a>(
    grid: &Grid1D,
    s: FractionalOrder,
    p: &'a Potential,
    weight: impl Fn(f64) -> f64,
    far: FarField,
    reference: Vec<f64>,
) -> Result<Problem<'a>> {
    let op = QuadratureOperator::new(grid, s)?;
    let a_ref = op.apply(&reference, &far);
    let a_nodes = grid.nodes().iter().map(|&x| weight(x)).collect();
    Ok(Problem {
        op,
        far,
        a_nodes,
        reference,
        a_ref,
        p,
        h: grid.h(),
    })
}

/// Energy `½⟨w, (-Δ)^s w⟩ + ⟨w, (-Δ)^s u_ref⟩ + h Σ a W(u)` with
/// `w = u - u_ref`, where `u_ref` ramps linearly between the end levels of the
/// profile over the middle tenth of the grid.
pub fn energy_of(
    profile: &Field,
    s: FractionalOrder,
    p: &Potential,
    a: &Modulation,
) -> Result<Energy> {
    energy_with_weight(profile, s, p, |x| a.eval(x))
}

/// [`energy_of`] with an arbitrary weight in place of `a`.
pub fn energy_with_weight(
    profile: &Field,
    s: FractionalOrder,
    p: &Potential,
    weight: impl Fn(f64) -> f64,
) -> Result<Energy> {
    let far = profile
        .far_field
        .ok_or(Error::IncompleteField("energy needs a tail model"))?;
    let g = &profile.grid;
    let (lm, lp) = (far.l_minus, far.l_plus);
    let mid = 0.5 * (g.left + g.right);
    let half = 0.05 * (g.right - g.left);
    let reference = g
        .nodes()
        .iter()
        .map(|&x| {
            let t = ((x - mid + half) / (2.0 * half)).clamp(0.0, 1.0);
            lm + t * (lp - lm)
        })
        .collect();
    let prob = make_problem(g, s, p, weight, far, reference)?;
    Ok(prob.eval(&profile.values).1)
}

/// Initial guess: unit-width layers at the gap midpoints, clamped into the
/// windows.
fn initial_profile(ws: &WindowSet, s: FractionalOrder, grid: &Grid1D) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|&x| {
            let mut u = ws.left_level();
            for pair in ws.windows.windows(2) {
                let mid = 0.5 * (pair[0].hi + pair[1].lo);
                let jump = (pair[1].level - pair[0].level) as f64;
                u += jump * initial_guess(s, x - mid);
            }
            u
        })
        .collect()
}

/// Spec-level entry point with default options.
pub fn minimize_constrained(
    windows: &WindowSet,
    s: FractionalOrder,
    p: &Potential,
    a: &Modulation,
    grid: &Grid1D,
    tol: f64,
) -> Result<ConstrainedSolution> {
    let sol = minimize_constrained_with(windows, s, p, a, grid, tol, MultibumpOptions::default())?;
    if sol.detachment_margin <= 0.0 {
        return Err(Error::ConstraintTouching {
            margin: sol.detachment_margin,
        });
    }
    Ok(sol)
}

/// Projected, preconditioned descent with Armijo backtracking. Returns the
/// converged profile whether or not it touches a window; the caller decides
/// acceptance from `detachment_margin`.
pub fn minimize_constrained_with(
    windows: &WindowSet,
    s: FractionalOrder,
    p: &Potential,
    a: &Modulation,
    grid: &Grid1D,
    tol: f64,
    opts: MultibumpOptions,
) -> Result<ConstrainedSolution> {
    if !(s.get() > 0.5 && s.get() < 1.0) {
        return Err(Error::InvalidOrder {
            s: s.get(),
            reason: "constrained minimization needs 1/2 < s < 1",
        });
    }
    if grid.periodic {
        return Err(Error::WrongBoundary {
            expected: "decaying (whole-line)",
        });
    }
    let (lo, hi) = windows.span();
    if grid.left > lo - windows.spacing || grid.right < hi + windows.spacing {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] must cover the windows [{lo}, {hi}] with margin {}",
            grid.left, grid.right, windows.spacing
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let n = grid.n;
    let nodes = grid.nodes();
    let delta = windows.half_width;
    let bounds: Vec<Option<f64>> = nodes
        .iter()
        .map(|&x| {
            windows
                .window_at(x)
                .map(|i| windows.windows[i].level as f64)
        })
        .collect();
    if bounds.iter().all(Option::is_none) {
        return Err(Error::InvalidGrid(
            "no grid node falls inside a window".into(),
        ));
    }
    let clamp = |u: &mut [f64]| {
        for (v, b) in u.iter_mut().zip(&bounds) {
            if let Some(z) = b {
                *v = v.clamp(z - delta, z + delta);
            }
        }
    };

    let (lm, lp) = (windows.left_level(), windows.right_level());
    let c = fabs(lp - lm) * tail_coefficient(s, p, a);
    let far = FarField {
        l_minus: lm,
        l_plus: lp,
        beta: s.two_s(),
        c_minus: c,
        c_plus: c,
    };
    let reference: Vec<f64> = nodes.iter().map(|&x| windows.reference(x)).collect();
    let prob = make_problem(grid, s, p, |x| a.eval(x), far, reference)?;
    let pre = PaddedPreconditioner::new(grid, s, opts.shift)?;
    let h = grid.h();

    let mut u = initial_profile(windows, s, grid);
    clamp(&mut u);
    let (mut g, mut e) = prob.eval(&u);
    let mut history = vec![e.total()];
    let mut tau: f64 = 1.0;
    let mut last: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut it = 0;
    let projected = |u: &[f64], g: &[f64]| -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..n {
            let step = match bounds[j] {
                Some(z) => u[j] - (u[j] - g[j]).clamp(z - delta, z + delta),
                None => g[j],
            };
            m = m.max(fabs(step));
        }
        m
    };
    loop {
        let pg = projected(&u, &g);
        if pg < tol {
            break;
        }
        if it >= opts.max_iterations {
            return Err(Error::SolverFailure {
                solver: "multibump",
                residual: pg,
                iterations: it,
            });
        }
        it += 1;
        // Two-metric projection: nodes within `eps` of a bound that the
        // gradient pushes outward take a plain gradient step, the rest a
        // preconditioned one.
        let eps = pg.min(0.1 * delta);
        let active: Vec<bool> = (0..n)
            .map(|j| match bounds[j] {
                Some(z) => {
                    (u[j] <= z - delta + eps && g[j] > 0.0)
                        || (u[j] >= z + delta - eps && g[j] < 0.0)
                }
                None => false,
            })
            .collect();
        let free: Vec<f64> = (0..n).map(|j| if active[j] { 0.0 } else { g[j] }).collect();
        let mut d = pre.apply(&free);
        for j in 0..n {
            if active[j] {
                d[j] = g[j];
            }
        }
        // Preconditioned Barzilai-Borwein guess `⟨s, M⁻¹s⟩ / ⟨s, y⟩`, where
        // `M⁻¹ s ≈ -τ g` for the previous step.
        if let Some((step, g_old, tau_old)) = &last {
            let sy: f64 = step
                .iter()
                .zip(&g)
                .zip(g_old)
                .map(|((s, gn), go)| s * (gn - go))
                .sum();
            let sg: f64 = step.iter().zip(g_old).map(|(s, go)| s * go).sum();
            tau = if sy > 0.0 {
                (-tau_old * sg / sy).clamp(1e-6, opts.max_step)
            } else {
                opts.max_step
            };
        }
        loop {
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(ui, di)| ui - tau * di).collect();
            clamp(&mut trial);
            let slope: f64 = h * trial
                .iter()
                .zip(&u)
                .zip(&g)
                .map(|((t, ui), gi)| (t - ui) * gi)
                .sum::<f64>();
            if slope < 0.0 {
                let (gt, et) = prob.eval(&trial);
                if et.total() <= e.total() + opts.armijo * slope {
                    let step: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
                    last = Some((step, core::mem::take(&mut g), tau));
                    u = trial;
                    g = gt;
                    e = et;
                    history.push(e.total());
                    break;
                }
            }
            tau *= 0.5;
            if tau < 1e-14 {
                return Err(Error::SolverFailure {
                    solver: "multibump",
                    residual: pg,
                    iterations: it,
                });
            }
        }
    }

    let mut el: f64 = 0.0;
    let mut full: f64 = 0.0;
    let mut margin = f64::INFINITY;
    for j in 0..n {
        full = full.max(fabs(g[j]));
        match bounds[j] {
            Some(z) => margin = margin.min(delta - fabs(u[j] - z)),
            None => el = el.max(fabs(g[j])),
        }
    }
    let profile = Field::decaying(*grid, u, far)?;
    Ok(ConstrainedSolution {
        profile,
        windows: windows.clone(),
        energy: e.total(),
        energy_parts: e,
        euler_lagrange_residual: el,
        full_residual: full,
        detachment_margin: margin,
        iterations: it,
        energy_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_layout() {
        let a = Modulation::cosine(0.3, 10.0).unwrap();
        let ws = build_windows(&[0, 1], &a, 20.0).unwrap();
        assert_eq!(ws.windows.len(), 2);
        let gap = 0.5 * (ws.windows[0].hi + ws.windows[1].lo);
        assert!((a.eval(gap) - a.a_min()).abs() < 1e-12);
        assert!((ws.windows[0].hi - ws.windows[0].lo - 10.0).abs() < 1e-12);

        let ws = build_windows(&[0, 1, 2, 1], &a, 50.0).unwrap();
        for pair in ws.windows.windows(2) {
            let gap = 0.5 * (pair[0].hi + pair[1].lo);
            assert!((a.eval(gap) - a.a_min()).abs() < 1e-12);
            assert!((a.eval(pair[0].center()) - a.a_max()).abs() < 1e-12);
        }
    }

    #[test]
    fn level_jumps_are_checked() {
        let a = Modulation::cosine(0.3, 10.0).unwrap();
        assert!(matches!(
            build_windows(&[0, 2], &a, 20.0),
            Err(Error::InvalidLevels(_))
        ));
        assert!(matches!(
            build_windows(&[0, 0], &a, 20.0),
            Err(Error::InvalidLevels(_))
        ));
        assert!(matches!(
            build_windows(&[0, 1], &a, 15.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn reference_is_piecewise_linear() {
        let ws = WindowSet::new(
            vec![
                Window {
                    lo: -3.0,
                    hi: -1.0,
                    level: 0,
                },
                Window {
                    lo: 1.0,
                    hi: 3.0,
                    level: 1,
                },
            ],
            4.0,
        )
        .unwrap();
        assert_eq!(ws.reference(-10.0), 0.0);
        assert_eq!(ws.reference(0.0), 0.5);
        assert_eq!(ws.reference(2.0), 1.0);
        assert_eq!(ws.reference(10.0), 1.0);
    }
}
