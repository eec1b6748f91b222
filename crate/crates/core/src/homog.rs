//! Effective dynamics: level-set discretization of a density, the periodic
//! cell problem and its ergodic constant `H̄(p, L)`, the Orowan scan, and the
//! mean-field transport equation at `s = 1/2`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fraclap::{kernel_constant, QuadratureOperator, SpectralOperator};
use crate::grid::{Boundary, Field, FractionalOrder, Grid1D};
use crate::layers::Heteroclinic;
use crate::math::{ceil, erf, fabs, first_crossing, fit_line, floor, pow, round, sqrt, PI};
use crate::particles::{integrate_with, IntegrateOptions, LayerConfig};
use crate::potential::Potential;

// ---------------------------------------------------------------------------
// Level sets

/// First crossings `y_i = inf{x : v(x) = δi}` for `i = 1..N_δ`,
/// `N_δ = ⌊(v(+∞) - δ)/δ⌋`, measured from `v(-∞)`.
///
/// Levels the grid does not reach are located on the far-field model.
pub fn level_set_points(v: &Field, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    if v.boundary != Boundary::Decaying {
        return Err(Error::WrongBoundary {
            expected: "decaying (whole-line)",
        });
    }
    let vals = &v.values;
    let scale = vals.iter().fold(1.0f64, |a, x| a.max(fabs(*x)));
    if let Some(j) = vals.windows(2).position(|w| w[1] < w[0] - 1e-12 * scale) {
        return Err(Error::InvalidInput(format!(
            "profile decreases between nodes {j} and {}",
            j + 1
        )));
    }
    let far = v
        .far_field
        .ok_or(Error::IncompleteField("level sets need the limits at ±∞"))?;
    let (lo, hi) = (far.l_minus, far.l_plus);
    let count = floor((hi - lo - delta) / delta + 1e-9);
    if count < 1.0 {
        return Ok(Vec::new());
    }
    let nodes = v.nodes();
    let first = vals[0];
    let last = vals[vals.len() - 1];
    let mut out = Vec::with_capacity(count as usize);
    for i in 1..=count as usize {
        let level = lo + delta * i as f64;
        let y = if level <= first {
            // Left tail `l₋ + c₋/|x|^β`.
            if far.c_minus <= 0.0 || level <= lo {
                return Err(Error::InvalidInput(format!(
                    "level {level} is not reached on the left"
                )));
            }
            -pow(far.c_minus / (level - lo), 1.0 / far.beta)
        } else if level > last {
            if far.c_plus <= 0.0 || level >= hi {
                return Err(Error::InvalidInput(format!(
                    "level {level} is not reached on the right"
                )));
            }
            pow(far.c_plus / (hi - level), 1.0 / far.beta)
        } else {
            first_crossing(&nodes, vals, level).expect("level lies between the end values")
        };
        out.push(y);
    }
    Ok(out)
}

/// Sup over the grid of `|Σ δ u⋆((x - y_i)/(εδ)) - v(x)|` with `y_i` the
/// level-set points of `v`.
pub fn density_approximation_error(
    v: &Field,
    u_star: &Heteroclinic,
    eps: f64,
    delta: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let y = level_set_points(v, delta)?;
    let lo = v.far_field.map(|f| f.l_minus).unwrap_or(0.0);
    let w = eps * delta;
    Ok(v.nodes()
        .iter()
        .zip(&v.values)
        .map(|(&x, &vx)| {
            let sum: f64 = y.iter().map(|yi| delta * u_star.eval((x - yi) / w)).sum();
            fabs(lo + sum - vx)
        })
        .fold(0.0, f64::max))
}

/// Largest gap, over the level-set points, between `(-Δ)^{1/2} v(y_i)` and
/// the discrete stress `C(1/2) Σ_{j≠i} δ/(y_i - y_j)` of unit steps at the
/// other points.
pub fn stress_identity_gap(v: &Field, delta: f64) -> Result<f64> {
    let y = level_set_points(v, delta)?;
    let far = v
        .far_field
        .ok_or(Error::IncompleteField("stress needs the limits at ±∞"))?;
    let s = FractionalOrder::half();
    let op = QuadratureOperator::new(&v.grid, s)?;
    let stress = op.apply(&v.values, &far);
    let field = v.with_values(stress);
    let c = kernel_constant(s);
    let mut gap: f64 = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let discrete: f64 = y
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, yj)| delta / (yi - yj))
            .sum::<f64>()
            * c;
        gap = gap.max(fabs(field.eval(*yi) - discrete));
    }
    Ok(gap)
}

// ---------------------------------------------------------------------------
// Cell problem

/// `∂_τ w = -(-Δ)^s w + L - W'(w + p·y)` for `w` periodic on `[-P/2, P/2)`.
#[derive(Debug, Clone, Copy)]
pub struct CellProblem {
    pub s: FractionalOrder,
    pub p: f64,
    pub l: f64,
    pub period: f64,
    pub n: usize,
    pub potential: Potential,
}

impl CellProblem {
    /// Requires `p·P ∈ ℤ` and a power-of-two node count.
    pub fn new(s: FractionalOrder, p: f64, l: f64, period: f64, n: usize) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidInput("cell period must be positive".into()));
        }
        let k = p * period;
        if !p.is_finite() || fabs(k - round(k)) > 1e-9 * (1.0 + fabs(k)) {
            return Err(Error::InvalidInput(format!("p·P = {k} is not an integer")));
        }
        if !l.is_finite() {
            return Err(Error::InvalidInput("stress L must be finite".into()));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "cell needs a power-of-two node count >= 16, got {n}"
            )));
        }
        Ok(CellProblem {
            s,
            p,
            l,
            period,
            n,
            potential: Potential::standard(),
        })
    }

    /// Smallest period `k/|p| ≥ min_period` (or `min_period` when `p = 0`)
    /// and a node count giving a spacing of at most `h`.
    pub fn resolved(s: FractionalOrder, p: f64, l: f64, min_period: f64, h: f64) -> Result<Self> {
        if !(min_period > 0.0 && h > 0.0) {
            return Err(Error::InvalidInput(
                "min_period and h must be positive".into(),
            ));
        }
        let period = if p == 0.0 {
            min_period
        } else {
            let k = (min_period * fabs(p)).max(1.0);
            let k = if k == floor(k) { k } else { floor(k) + 1.0 };
            k / fabs(p)
        };
        let n = ((period / h) as usize + 1).next_power_of_two().max(16);
        Self::new(s, p, l, period, n)
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::periodic(0.5 * self.period, self.n).expect("validated cell")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CellOptions {
    pub dt: f64,
    /// Samples with a larger spread between the last two dyadic windows are
    /// reported as unconverged.
    pub spread_tol: f64,
    /// Shortest dyadic window that is still fitted.
    pub min_window: f64,
}

impl Default for CellOptions {
    fn default() -> Self {
        CellOptions {
            dt: 0.01,
            spread_tol: 1e-3,
            min_window: 2.0,
        }
    }
}

/// Slope of the cell average over `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSlope {
    pub t0: f64,
    pub t1: f64,
    pub slope: f64,
}

/// Ergodic constant `λ = lim w/τ` of one cell problem.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonianSample {
    pub p: f64,
    pub l: f64,
    pub period: f64,
    pub lambda: f64,
    /// Least-squares slopes of `⟨w⟩(τ)` over `[τ/2^{k+1}, τ/2^k]`, latest
    /// window first.
    pub windows: Vec<WindowSlope>,
    /// `|slope₀ - slope₁|` over the last two windows.
    pub spread: f64,
    pub converged: bool,
    pub tau_end: f64,
}

/// Spec-level entry point with default options.
pub fn solve_cell(cp: &CellProblem, tau_end: f64) -> Result<EffectiveHamiltonianSample> {
    solve_cell_with(cp, tau_end, &CellOptions::default())
}

/// SBDF2 in time with the operator implicit in Fourier space, started by
/// one implicit-explicit Euler step, from `w(0) = 0`.
pub fn solve_cell_with(
    cp: &CellProblem,
    tau_end: f64,
    opts: &CellOptions,
) -> Result<EffectiveHamiltonianSample> {
    if !(opts.dt > 0.0) || !(opts.min_window > 0.0) {
        return Err(Error::InvalidInput(
            "dt and min_window must be positive".into(),
        ));
    }
    let mut n_windows = 0;
    while n_windows < 8
        && tau_end / pow(2.0, (n_windows + 1) as f64) >= opts.min_window.max(16.0 * opts.dt)
    {
        n_windows += 1;
    }
    if n_windows < 4 {
        return Err(Error::InvalidInput(format!(
            "tau_end = {tau_end} leaves fewer than four dyadic windows"
        )));
    }
    let grid = cp.grid();
    let op = SpectralOperator::new(&grid, cp.s)?;
    let y = grid.nodes();
    let steps = ceil(tau_end / opts.dt - 1e-9) as usize;
    let dt = tau_end / steps as f64;
    let pot = cp.potential;
    let forcing = |w: &[f64]| -> Vec<f64> {
        w.iter()
            .zip(&y)
            .map(|(wi, yi)| cp.l - pot.dw(wi + cp.p * yi))
            .collect()
    };
    let mean = |w: &[f64]| w.iter().sum::<f64>() / w.len() as f64;

    let mut w_prev = vec![0.0; cp.n];
    let mut f_prev = forcing(&w_prev);
    let rhs: Vec<f64> = w_prev
        .iter()
        .zip(&f_prev)
        .map(|(w, f)| w + dt * f)
        .collect();
    let mut w = op.solve_shifted(1.0, dt, &rhs);
    let mut avg = Vec::with_capacity(steps + 1);
    avg.push(0.0);
    avg.push(mean(&w));
    for _ in 1..steps {
        let f = forcing(&w);
        let rhs: Vec<f64> = (0..cp.n)
            .map(|j| 4.0 * w[j] - w_prev[j] + 2.0 * dt * (2.0 * f[j] - f_prev[j]))
            .collect();
        let next = op.solve_shifted(3.0, 2.0 * dt, &rhs);
        if let Some(bad) = next.iter().find(|v| !v.is_finite()) {
            return Err(Error::Unstable {
                time: avg.len() as f64 * dt,
                sup: *bad,
            });
        }
        w_prev = core::mem::replace(&mut w, next);
        f_prev = f;
        avg.push(mean(&w));
    }

    let windows: Vec<WindowSlope> = (0..n_windows)
        .map(|k| {
            let t1 = tau_end / pow(2.0, k as f64);
            let t0 = 0.5 * t1;
            let (i0, i1) = ((t0 / dt) as usize, ((t1 / dt) as usize).min(steps));
            let t: Vec<f64> = (i0..=i1).map(|i| i as f64 * dt).collect();
            let (_, slope, _) = fit_line(&t, &avg[i0..=i1]);
            WindowSlope { t0, t1, slope }
        })
        .collect();
    let spread = fabs(windows[0].slope - windows[1].slope);
    Ok(EffectiveHamiltonianSample {
        p: cp.p,
        l: cp.l,
        period: cp.period,
        lambda: windows[0].slope,
        spread,
        converged: spread < opts.spread_tol,
        windows,
        tau_end,
    })
}

/// Retries with doubled `tau_end` until the sample converges or
/// `max_doublings` is exhausted; returns the last sample either way.
pub fn solve_cell_converged(
    cp: &CellProblem,
    tau_end: f64,
    max_doublings: usize,
    opts: &CellOptions,
) -> Result<EffectiveHamiltonianSample> {
    let mut tau = tau_end;
    let mut sample = solve_cell_with(cp, tau, opts)?;
    for _ in 0..max_doublings {
        if sample.converged {
            break;
        }
        tau *= 2.0;
        sample = solve_cell_with(cp, tau, opts)?;
    }
    Ok(sample)
}

/// `H̄₁(p) = H̄(p, 0)`, the Hamiltonian of the `s > 1/2` limit.
pub fn hamiltonian_slope_only(
    base: &CellProblem,
    p: f64,
    tau_end: f64,
) -> Result<EffectiveHamiltonianSample> {
    let mut cp = CellProblem::new(base.s, p, 0.0, base.period, base.n)?;
    cp.potential = base.potential;
    solve_cell(&cp, tau_end)
}

/// `H̄₂(L) = H̄(0, L)`, the Hamiltonian of the `s < 1/2` limit.
pub fn hamiltonian_stress_only(
    base: &CellProblem,
    l: f64,
    tau_end: f64,
) -> Result<EffectiveHamiltonianSample> {
    let cp = CellProblem { p: 0.0, l, ..*base };
    solve_cell(&cp, tau_end)
}

/// Ergodic constant of the spatially constant reduction `ẇ = L - W'(w)`
/// for the standard potential: `sign(L) √(L² - b²)` above the pinning
/// threshold `b = 1/(2π)` and `0` below it.
pub fn constant_state_lambda(l: f64) -> f64 {
    let b = 1.0 / (2.0 * PI);
    if fabs(l) <= b {
        0.0
    } else {
        l.signum() * sqrt(l * l - b * b)
    }
}

// ---------------------------------------------------------------------------
// Orowan scan

#[derive(Debug, Clone, Copy)]
pub struct OrowanOptions {
    /// Grid spacing on the cell.
    pub h: f64,
    /// Lower bound on the cell integration time.
    pub tau_min: f64,
    /// Number of times a layer should cross the cell during the run.
    pub crossings: f64,
    pub cell: CellOptions,
}

impl Default for OrowanOptions {
    fn default() -> Self {
        OrowanOptions {
            h: 0.05,
            tau_min: 200.0,
            crossings: 12.0,
            cell: CellOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrowanRow {
    pub eps: f64,
    pub p: f64,
    pub l: f64,
    pub sample: EffectiveHamiltonianSample,
    /// `λ / (ε^{1+2s} γ |p₀| L₀)`; `None` when `L₀ = 0`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OrowanTable {
    pub s: f64,
    pub p0: f64,
    pub l0: f64,
    pub gamma: f64,
    pub rows: Vec<OrowanRow>,
}

impl OrowanTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.sample.converged)
    }

    pub fn final_ratio(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.ratio)
    }

    /// `|ratio - 1|` strictly decreasing along the table.
    pub fn monotone_approach(&self) -> bool {
        let d: Vec<f64> = self
            .rows
            .iter()
            .filter_map(|r| r.ratio)
            .map(|r| fabs(r - 1.0))
            .collect();
        d.len() == self.rows.len() && d.windows(2).all(|w| w[1] < w[0])
    }
}

/// One row of the scan: the cell problem at `p = ε p₀`, `L = ε^{2s} L₀`.
pub fn orowan_row(
    s: FractionalOrder,
    p0: f64,
    l0: f64,
    eps: f64,
    gamma: f64,
    opts: &OrowanOptions,
) -> Result<OrowanRow> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let p = eps * p0;
    let l = pow(eps, s.two_s()) * l0;
    let cp = CellProblem::resolved(s, p, l, 1.0, opts.h)?;
    let speed = gamma * fabs(l);
    let tau = if speed > 0.0 {
        opts.tau_min.max(opts.crossings * cp.period / speed)
    } else {
        opts.tau_min
    };
    let sample = solve_cell_converged(&cp, tau, 2, &opts.cell)?;
    let ratio = if l0 != 0.0 {
        Some(sample.lambda / (pow(eps, 1.0 + s.two_s()) * gamma * fabs(p0) * l0))
    } else {
        None
    };
    Ok(OrowanRow {
        eps,
        p,
        l,
        sample,
        ratio,
    })
}

/// `H̄(ε p₀, ε^{2s} L₀) / (ε^{1+2s} γ |p₀| L₀)` over decreasing `ε`. Here
/// `γ = 1/‖u⋆'‖²` is the mobility of a single layer in the unscaled cell
/// equation (`2π` at `s = 1/2`).
pub fn orowan_scan(
    s: FractionalOrder,
    p0: f64,
    l0: f64,
    eps_list: &[f64],
    gamma: f64,
    opts: &OrowanOptions,
) -> Result<OrowanTable> {
    check_orowan(p0, eps_list, gamma)?;
    let rows = eps_list
        .iter()
        .map(|&e| orowan_row(s, p0, l0, e, gamma, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrowanTable {
        s: s.get(),
        p0,
        l0,
        gamma,
        rows,
    })
}

/// Validates scan inputs; exposed so callers can run rows in parallel.
pub fn check_orowan(p0: f64, eps_list: &[f64], gamma: f64) -> Result<()> {
    if p0 == 0.0 || !p0.is_finite() {
        return Err(Error::InvalidInput("p0 must be nonzero".into()));
    }
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput(
            "eps list must be nonempty and strictly decreasing".into(),
        ));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput("gamma must be positive".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Mean-field equation

#[derive(Debug, Clone, Copy)]
pub struct MeanFieldOptions {
    pub gamma: f64,
    /// Use `∂_x u` (nondecreasing data) rather than `|∂_x u|`.
    pub monotone: bool,
    /// Fraction of the stability limit `h / (2γ max|stress|)` used per step.
    pub cfl: f64,
    /// Fixed step; must respect the stability limit at every step.
    pub dt: Option<f64>,
    pub dt_out: f64,
}

impl Default for MeanFieldOptions {
    fn default() -> Self {
        MeanFieldOptions {
            gamma: 2.0 * PI,
            monotone: true,
            cfl: 0.9,
            dt: None,
            dt_out: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeanFieldRun {
    pub grid: Grid1D,
    pub l_minus: f64,
    pub l_plus: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub steps: usize,
}

impl MeanFieldRun {
    /// Discrete mass `Σ h ∂_x u` of each snapshot.
    pub fn masses(&self) -> Vec<f64> {
        self.snapshots
            .iter()
            .map(|u| u[u.len() - 1] - u[0])
            .collect()
    }

    pub fn field(&self, k: usize) -> Field {
        let far = crate::grid::FarField::constant(self.l_minus, self.l_plus);
        Field::decaying(self.grid, self.snapshots[k].clone(), far).expect("finite snapshot")
    }
}

/// `∂_t u = -γ ∂_x u (-Δ)^{1/2} u` (or with `|∂_x u|`), explicit and
/// upwinded on the sign of the stress. The stress uses the whole-line
/// quadrature with the limits of `u0` held fixed outside the grid.
pub fn solve_meanfield(u0: &Field, t_end: f64, opts: &MeanFieldOptions) -> Result<MeanFieldRun> {
    if u0.boundary != Boundary::Decaying {
        return Err(Error::WrongBoundary {
            expected: "decaying (whole-line)",
        });
    }
    if !(t_end > 0.0)
        || !(opts.dt_out > 0.0)
        || !(opts.gamma > 0.0)
        || !(opts.cfl > 0.0 && opts.cfl <= 1.0)
    {
        return Err(Error::InvalidInput(
            "t_end, dt_out, gamma must be positive and cfl in (0, 1]".into(),
        ));
    }
    let far = u0
        .far_field
        .ok_or(Error::IncompleteField("mean-field data need limits at ±∞"))?;
    let far = crate::grid::FarField::constant(far.l_minus, far.l_plus);
    let grid = u0.grid;
    let n = grid.n;
    let h = grid.h();
    let op = QuadratureOperator::new(&grid, FractionalOrder::half())?;
    let mut u = u0.values.clone();
    let mut times = vec![0.0];
    let mut snapshots = vec![u.clone()];
    let mut t = 0.0;
    let mut next_out = opts.dt_out.min(t_end);
    let mut steps = 0;
    while t < t_end - 1e-14 * t_end {
        let stress = op.apply(&u, &far);
        let smax = stress.iter().fold(0.0f64, |a, v| a.max(fabs(*v)));
        let limit = if smax > 0.0 {
            h / (2.0 * opts.gamma * smax)
        } else {
            f64::INFINITY
        };
        let mut dt = match opts.dt {
            Some(dt) if dt > limit => return Err(Error::CflViolation { dt, limit }),
            Some(dt) => dt,
            None => opts.cfl * limit,
        };
        dt = dt.min(next_out - t);
        let mut next = u.clone();
        for j in 0..n {
            let left = if j == 0 { far.l_minus } else { u[j - 1] };
            let right = if j + 1 == n { far.l_plus } else { u[j + 1] };
            let dm = (u[j] - left) / h;
            let dp = (right - u[j]) / h;
            let speed = opts.gamma * stress[j];
            let rate = if opts.monotone {
                if speed > 0.0 {
                    speed * dm
                } else {
                    speed * dp
                }
            } else if speed > 0.0 {
                speed * dm.max(0.0).max(-dp.min(0.0))
            } else {
                speed * dp.max(0.0).max(-dm.min(0.0))
            };
            next[j] = u[j] - dt * rate;
        }
        u = next;
        t += dt;
        steps += 1;
        if t >= next_out - 1e-12 * t_end {
            times.push(next_out);
            snapshots.push(u.clone());
            t = next_out;
            next_out = (next_out + opts.dt_out).min(t_end);
        }
    }
    Ok(MeanFieldRun {
        grid,
        l_minus: far.l_minus,
        l_plus: far.l_plus,
        times,
        snapshots,
        steps,
    })
}

/// Fewer particles than this leave the mean-field description unresolved.
pub const MIN_RESOLVED_PARTICLES: usize = 8;

#[derive(Debug, Clone)]
pub struct MeanFieldComparison {
    pub delta: f64,
    pub times: Vec<f64>,
    pub particles: Vec<Vec<f64>>,
    /// Crossings of the levels `δ(i - 1/2)` by the mean-field solution.
    pub level_sets: Vec<Vec<f64>>,
    pub sup_gap: f64,
    pub particles_ordered: bool,
    pub level_sets_ordered: bool,
    pub delta_too_large: bool,
}

/// Runs the repulsive particle system (mobility `γδ/π` so that level sets
/// and particles obey the same law) against the mean-field equation started
/// from the staircase `Σ δ H(x - y_i)` smoothed by `erf` at the mean gap.
pub fn meanfield_vs_particles(
    cfg: &LayerConfig,
    delta: f64,
    t_end: f64,
    h: f64,
    opts: &MeanFieldOptions,
) -> Result<MeanFieldComparison> {
    if cfg.orientations().iter().any(|z| *z != 1) {
        return Err(Error::InvalidConfig(
            "mean-field comparison needs all orientations +1".into(),
        ));
    }
    if cfg.len() < 2 {
        return Err(Error::InvalidConfig(
            "mean-field comparison needs at least two particles".into(),
        ));
    }
    if !(delta > 0.0 && h > 0.0) {
        return Err(Error::InvalidInput("delta and h must be positive".into()));
    }
    let x = cfg.positions();
    let n = x.len();
    let (a, b) = (x[0], x[n - 1]);
    let sigma = (b - a) / (n - 1) as f64;
    let margin = (b - a) + 10.0 * sigma;
    let (left, right) = (a - margin, b + margin);
    let nodes = ((right - left) / h) as usize + 1;
    let grid = Grid1D::new(left, right, nodes, false)?;
    let values = grid
        .nodes()
        .iter()
        .map(|&z| {
            x.iter()
                .map(|&y| 0.5 * delta * (1.0 + erf((z - y) / sigma)))
                .sum()
        })
        .collect();
    let u0 = Field::decaying(
        grid,
        values,
        crate::grid::FarField::constant(0.0, delta * n as f64),
    )?;
    let run = solve_meanfield(&u0, t_end, opts)?;

    let s = FractionalOrder::half();
    let io = IntegrateOptions {
        max_step: opts.dt_out,
        ..Default::default()
    };
    let traj = integrate_with(cfg, s, opts.gamma * delta / PI, t_end, io)?;
    let node_x = run.grid.nodes();
    let mut particles = Vec::new();
    let mut level_sets = Vec::new();
    let mut gap: f64 = 0.0;
    for (k, &t) in run.times.iter().enumerate() {
        let pos = traj.position_at(t).ok_or(Error::SolverFailure {
            solver: "particles",
            residual: t,
            iterations: traj.times.len(),
        })?;
        let lv: Vec<f64> = (1..=n)
            .map(|i| {
                first_crossing(&node_x, &run.snapshots[k], delta * (i as f64 - 0.5))
                    .unwrap_or(f64::NAN)
            })
            .collect();
        for (p, l) in pos.iter().zip(&lv) {
            gap = gap.max(if l.is_nan() {
                f64::INFINITY
            } else {
                fabs(p - l)
            });
        }
        particles.push(pos);
        level_sets.push(lv);
    }
    let ordered = |v: &Vec<Vec<f64>>| v.iter().all(|p| p.windows(2).all(|w| w[1] > w[0]));
    Ok(MeanFieldComparison {
        delta,
        times: run.times.clone(),
        particles_ordered: ordered(&particles),
        level_sets_ordered: ordered(&level_sets),
        particles,
        level_sets,
        sup_gap: gap,
        delta_too_large: n < MIN_RESOLVED_PARTICLES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_period_must_match_slope() {
        let s = FractionalOrder::half();
        assert!(CellProblem::new(s, 0.3, 0.0, 1.0, 64).is_err());
        assert!(CellProblem::new(s, 0.25, 0.0, 4.0, 64).is_ok());
        assert!(CellProblem::new(s, 0.25, 0.0, 4.0, 60).is_err());
        let cp = CellProblem::resolved(s, 0.1, 0.1, 1.0, 0.05).unwrap();
        assert!((cp.period - 10.0).abs() < 1e-12);
        assert!(cp.period / cp.n as f64 <= 0.05);
    }

    #[test]
    fn constant_state_oracle() {
        assert_eq!(constant_state_lambda(1.0 / (4.0 * PI)), 0.0);
        assert!((constant_state_lambda(1.0 / PI) - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-15);
        assert!((constant_state_lambda(-1.0 / PI) + 3f64.sqrt() / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn too_short_runs_are_rejected() {
        let cp = CellProblem::new(FractionalOrder::half(), 0.0, 0.0, 1.0, 16).unwrap();
        assert!(matches!(solve_cell(&cp, 10.0), Err(Error::InvalidInput(_))));
    }
}
