//! The scaled evolution `ε v_t = -(-Δ)^s v - ε^{-2s} W'(v)`, core tracking,
//! comparison with the particle system, relaxation after collisions and the
//! classification of the long-time state.
//!
//! The solution is split as `v = R + w`. The background `R` is the initial
//! layer superposition (or a constant); `(-Δ)^s R` is the sum of the
//! rescaled images of the single layers, each computed once by quadrature on
//! the layer's own fine grid. The correction `w`
//! decays away from the cores and is advanced on a periodic grid by a
//! second-order IMEX scheme: Crank-Nicolson for the operator in Fourier
//! space, Adams-Bashforth for `W'`. Since
//! `R` carries the limits `0` and `ℓ`, the periodic part never has to jump
//! across the seam. Balanced configurations (`ℓ = 0`) need no background
//! and are evolved directly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fraclap::QuadratureOperator;
use crate::grid::{Boundary, FarField, Field, Grid1D};
use crate::layers::{evolution_gamma, superpose_layers, GammaConvention, Heteroclinic};
use crate::math::{cubic_at, fabs, first_crossing, fit_line, log, pow, Complex, Fft};
use crate::particles::{integrate_with, IntegrateOptions, LayerConfig};
use crate::potential::Potential;

/// Initial datum of a run.
#[derive(Debug, Clone, Copy)]
pub enum InitialData<'a> {
    /// Well-prepared superposition `Σ u⋆(ζ_i(x - x̄_i)/ε) - K`.
    Layers(&'a LayerConfig),
    /// Any bounded whole-line field with equal limits at both ends.
    Field(&'a Field),
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Grid nodes per unit `ε`.
    pub nodes_per_eps: f64,
    /// Half-width of the periodic domain in multiples of the layer span.
    pub padding: f64,
    /// Lower bound on the half-width, in multiples of `ε`.
    pub min_half_width_eps: f64,
    /// Fixed time step; must respect the stability rule. `None` uses it.
    pub dt: Option<f64>,
    pub max_nodes: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            nodes_per_eps: 20.0,
            padding: 8.0,
            min_half_width_eps: 40.0,
            dt: None,
            max_nodes: 1 << 18,
        }
    }
}

/// Snapshots of `v` on the periodic computational grid.
#[derive(Debug, Clone)]
pub struct ParabolicRun {
    pub eps: f64,
    pub layer: Heteroclinic,
    pub reference: Option<LayerConfig>,
    pub grid: Grid1D,
    /// `R` at the nodes.
    pub background: Vec<f64>,
    /// `R'` at the nodes.
    pub background_slope: Vec<f64>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub dt: f64,
    pub steps: usize,
    /// Comparison envelope `[lo, hi]` checked at every step.
    pub envelope: (f64, f64),
}

impl ParabolicRun {
    pub fn s(&self) -> f64 {
        self.layer.s.get()
    }

    pub fn potential(&self) -> &Potential {
        &self.layer.potential
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.grid.left + self.grid.right)
    }

    /// Node range `[lo, hi)` of the central half of the domain, away from
    /// the periodic seam.
    pub fn interior(&self) -> (usize, usize) {
        let n = self.grid.n;
        (n / 4, n - n / 4)
    }

    /// `v(t_k, x)` by cubic interpolation.
    pub fn value_at(&self, k: usize, x: f64) -> f64 {
        cubic_at(&self.snapshots[k], self.grid.position(x))
    }

    /// `∂_x v` at snapshot `k`: analytic for `R`, spectral for `w`.
    pub fn slope(&self, k: usize) -> Vec<f64> {
        let g = &self.grid;
        let fft = Fft::new(g.n);
        let w: Vec<f64> = self.snapshots[k]
            .iter()
            .zip(&self.background)
            .map(|(v, r)| v - r)
            .collect();
        let mut spec = fft.forward_real(&w);
        let xi = fft.wavenumbers(g.period());
        for (j, z) in spec.iter_mut().enumerate() {
            *z = if j == g.n / 2 {
                Complex::ZERO
            } else {
                Complex::new(-z.im * xi[j], z.re * xi[j])
            };
        }
        let dw = fft.inverse_real(spec);
        dw.iter()
            .zip(&self.background_slope)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn terminal(&self) -> &[f64] {
        self.snapshots.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// `Δt ≤ min(ε^{2s} h^{2s} / 4, ε^{2s+1} / (4 max|W''|))`.
pub fn stable_time_step(s: f64, eps: f64, h: f64, p: &Potential) -> f64 {
    let a = pow(eps, 2.0 * s) * pow(h, 2.0 * s) / 4.0;
    let b = pow(eps, 2.0 * s + 1.0) / (4.0 * p.max_curvature);
    a.min(b)
}

/// `(-Δ)^s u⋆` by quadrature on the layer's own grid. Beyond the grid the
/// layer equation gives `-W'(u⋆)`.
fn layer_image(layer: &Heteroclinic) -> Result<Field> {
    let far = layer.far_field();
    let values = QuadratureOperator::new(layer.grid(), layer.s)?.apply(&layer.profile.values, &far);
    let beta = far.beta;
    // -W'(u⋆) ≈ -(u⋆ - limit) in the tails.
    let image_far = FarField {
        l_minus: 0.0,
        l_plus: 0.0,
        beta,
        c_minus: -far.c_minus,
        c_plus: -far.c_plus,
    };
    Field::decaying(*layer.grid(), values, image_far)
}

/// Runs the evolution and stores snapshots at the multiples of `dt_out` in
/// `[0, t_end]`.
pub fn evolve(
    layer: &Heteroclinic,
    initial: InitialData<'_>,
    eps: f64,
    t_end: f64,
    dt_out: f64,
    opts: &EvolveOptions,
) -> Result<ParabolicRun> {
    if !(dt_out > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(
            "need dt_out > 0 and a finite t_end >= 0".into(),
        ));
    }
    let count = (t_end / dt_out + 1e-9) as usize;
    if count > 1_000_000 {
        return Err(Error::InvalidInput(
            "more than a million output times".into(),
        ));
    }
    let mut times: Vec<f64> = (0..=count).map(|k| k as f64 * dt_out).collect();
    if t_end - times[count] > 1e-9 * dt_out {
        times.push(t_end);
    }
    evolve_at(layer, initial, eps, &times, opts)
}

/// Like [`evolve`] with an explicit increasing list of output times.
pub fn evolve_at(
    layer: &Heteroclinic,
    initial: InitialData<'_>,
    eps: f64,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<ParabolicRun> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "output times must be nonnegative and strictly increasing".into(),
        ));
    }
    if !(opts.nodes_per_eps >= 4.0) || !(opts.padding > 0.0) {
        return Err(Error::InvalidInput(
            "need nodes_per_eps >= 4 and padding > 0".into(),
        ));
    }
    let s = layer.s.get();
    let p = layer.potential;

    // Periodic domain.
    let (center, half) = match initial {
        InitialData::Layers(cfg) => {
            let x = cfg.positions();
            let span = x[x.len() - 1] - x[0];
            (
                0.5 * (x[0] + x[x.len() - 1]),
                (opts.padding * span).max(opts.min_half_width_eps * eps),
            )
        }
        InitialData::Field(f) => {
            if f.boundary != Boundary::Decaying {
                return Err(Error::WrongBoundary {
                    expected: "decaying (whole-line)",
                });
            }
            let far = f
                .far_field
                .ok_or(Error::IncompleteField("initial field needs a tail model"))?;
            if fabs(far.l_plus - far.l_minus) > 1e-12 {
                return Err(Error::InvalidInput(
                    "a field with different limits must be given as layer initial data".into(),
                ));
            }
            (
                0.5 * (f.grid.left + f.grid.right),
                0.5 * (f.grid.right - f.grid.left),
            )
        }
    };
    let n = ((2.0 * half * opts.nodes_per_eps / eps) as usize)
        .next_power_of_two()
        .max(64);
    if n > opts.max_nodes {
        return Err(Error::InvalidGrid(alloc::format!(
            "{n} nodes exceed the limit {}; reduce padding or resolution",
            opts.max_nodes
        )));
    }
    let grid = Grid1D::new(center - half, center + half, n, true)?;
    let h = grid.h();
    let line = Grid1D::new(grid.left, grid.left + (n - 1) as f64 * h, n, false)?;

    // Background and its operator image.
    let (background, background_slope, op_background, w0, envelope, reference) = match initial {
        InitialData::Layers(cfg) => {
            let r = superpose_layers(layer, cfg, eps, &line)?;
            let image = layer_image(layer)?;
            let scale = pow(eps, -2.0 * s);
            let ar = line
                .nodes()
                .iter()
                .map(|&x| {
                    cfg.positions()
                        .iter()
                        .zip(cfg.orientations())
                        .map(|(xi, z)| scale * image.eval(*z as f64 * (x - xi) / eps))
                        .sum()
                })
                .collect();
            let slope = line
                .nodes()
                .iter()
                .map(|&x| {
                    cfg.positions()
                        .iter()
                        .zip(cfg.orientations())
                        .map(|(xi, z)| *z as f64 * layer.deriv(*z as f64 * (x - xi) / eps) / eps)
                        .sum()
                })
                .collect();
            let k = cfg.k() as f64;
            let env = (-k - 1.0, cfg.len() as f64 - k + 1.0);
            if cfg.ell() == 0 {
                // Equal limits: evolve v itself, so that 0 stays an exact
                // discrete equilibrium.
                (
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                    r.values,
                    env,
                    Some(cfg.clone()),
                )
            } else {
                (r.values, slope, ar, vec![0.0; n], env, Some(cfg.clone()))
            }
        }
        InitialData::Field(f) => {
            let l = f.far_field.map(|far| far.l_minus).unwrap_or(0.0);
            let w0: Vec<f64> = line.nodes().iter().map(|&x| f.eval(x) - l).collect();
            let lo = w0.iter().cloned().fold(f64::INFINITY, f64::min) + l;
            let hi = w0.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + l;
            (
                vec![l; n],
                vec![0.0; n],
                vec![0.0; n],
                w0,
                (lo - 1.0, hi + 1.0),
                None,
            )
        }
    };

    let dt_max = stable_time_step(s, eps, h, &p);
    let dt = match opts.dt {
        Some(dt) if dt > dt_max => return Err(Error::CflViolation { dt, limit: dt_max }),
        Some(dt) if !(dt > 0.0) => return Err(Error::InvalidInput("dt must be positive".into())),
        Some(dt) => dt,
        None => dt_max,
    };

    let fft = Fft::new(n);
    let symbol: Vec<f64> = fft
        .wavenumbers(grid.period())
        .iter()
        .map(|k| pow(fabs(*k), 2.0 * s))
        .collect();
    let react = pow(eps, -2.0 * s);
    let mut w = w0;
    let mut w_hat = fft.forward_real(&w);
    let mut g = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut prev: Option<(Vec<Complex>, f64)> = None;
    let mut snapshots = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut steps = 0usize;
    let (lo, hi) = envelope;
    for &t_out in times {
        while t < t_out - 1e-12 * t_out.max(1.0) {
            let step = dt.min(t_out - t);
            let a = step / eps;
            for j in 0..n {
                let vj = background[j] + w[j];
                g[j] = -op_background[j] - react * p.dw(vj);
            }
            let g_hat = fft.forward_real(&g);
            // Crank-Nicolson on the operator, variable-step Adams-Bashforth 2
            // on the rest (Euler on the first step).
            let (c0, c1) = match &prev {
                Some((_, dt_prev)) => {
                    let r = step / dt_prev;
                    (1.0 + 0.5 * r, -0.5 * r)
                }
                None => (1.0, 0.0),
            };
            for (j, (z, m)) in w_hat.iter_mut().zip(&symbol).enumerate() {
                let mut rhs = g_hat[j].scale(c0);
                if let Some((gp, _)) = &prev {
                    rhs = rhs + gp[j].scale(c1);
                }
                *z = (z.scale(1.0 - 0.5 * a * m) + rhs.scale(a)).scale(1.0 / (1.0 + 0.5 * a * m));
            }
            prev = Some((g_hat, step));
            w = fft.inverse_real(w_hat.clone());
            t += step;
            steps += 1;
            for j in 0..n {
                v[j] = background[j] + w[j];
                if !(v[j] >= lo && v[j] <= hi) {
                    return Err(Error::Unstable { time: t, sup: v[j] });
                }
            }
        }
        snapshots.push(background.iter().zip(&w).map(|(r, x)| r + x).collect());
    }

    Ok(ParabolicRun {
        eps,
        layer: layer.clone(),
        reference,
        grid,
        background,
        background_slope,
        times: times.to_vec(),
        snapshots,
        dt,
        steps,
        envelope,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreTrack {
    /// Sign of `∂_x v` at the core.
    pub orientation: i8,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

/// A drop in the core count between consecutive snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent {
    /// First output time at which the cores are missing.
    pub time: f64,
    pub last_seen: f64,
    /// Mean of the last positions of the vanished cores.
    pub position: f64,
    pub tracks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreTracks {
    pub times: Vec<f64>,
    /// Sorted core positions at each snapshot.
    pub per_snapshot: Vec<Vec<f64>>,
    pub tracks: Vec<CoreTrack>,
    pub merges: Vec<MergeEvent>,
}

impl CoreTracks {
    /// Core positions at the snapshot nearest to `t`.
    pub fn at(&self, t: f64) -> &[f64] {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| fabs(a.1 - t).total_cmp(&fabs(b.1 - t)))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.per_snapshot[k]
    }
}

/// Cores of snapshot `k`: local maxima of `|∂_x v|` above half the peak
/// slope `u⋆'(0)/ε` of a single layer, refined by a parabola through the
/// three nodes. Returns `(position, orientation)` pairs in increasing order.
pub fn cores_of(run: &ParabolicRun, k: usize) -> Vec<(f64, i8)> {
    let d = run.slope(k);
    let a: Vec<f64> = d.iter().map(|x| fabs(*x)).collect();
    let threshold = 0.5 * run.layer.deriv(0.0) / run.eps;
    let n = a.len();
    let h = run.grid.h();
    let mut out = Vec::new();
    for j in 1..n - 1 {
        if a[j] > threshold && a[j] >= a[j - 1] && a[j] > a[j + 1] {
            let den = a[j - 1] - 2.0 * a[j] + a[j + 1];
            let off = if den < 0.0 {
                0.5 * (a[j - 1] - a[j + 1]) / den
            } else {
                0.0
            };
            out.push((run.grid.x(j) + off * h, if d[j] > 0.0 { 1 } else { -1 }));
        }
    }
    out
}

/// Cores at every snapshot, linked into tracks by greedy nearest-neighbour
/// matching. Tracks that lose their core end in a merge event.
pub fn extract_cores(run: &ParabolicRun) -> Result<CoreTracks> {
    if run.snapshots.len() < 2 {
        return Err(Error::InvalidInput(
            "core tracking needs at least two snapshots".into(),
        ));
    }
    let mut tracks: Vec<CoreTrack> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut merges = Vec::new();
    let mut per_snapshot = Vec::with_capacity(run.snapshots.len());
    for (k, &t) in run.times.iter().enumerate() {
        let cores = cores_of(run, k);
        per_snapshot.push(cores.iter().map(|c| c.0).collect());
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ai, &tr) in active.iter().enumerate() {
            let last = *tracks[tr].positions.last().unwrap();
            for (ci, c) in cores.iter().enumerate() {
                pairs.push((fabs(c.0 - last), ai, ci));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut track_used = vec![false; active.len()];
        let mut core_used = vec![false; cores.len()];
        for (_, ai, ci) in pairs {
            if track_used[ai] || core_used[ci] {
                continue;
            }
            track_used[ai] = true;
            core_used[ci] = true;
            let tr = &mut tracks[active[ai]];
            tr.times.push(t);
            tr.positions.push(cores[ci].0);
        }
        let ended: Vec<usize> = active
            .iter()
            .zip(&track_used)
            .filter(|(_, u)| !**u)
            .map(|(tr, _)| *tr)
            .collect();
        if !ended.is_empty() {
            let position = ended
                .iter()
                .map(|&i| *tracks[i].positions.last().unwrap())
                .sum::<f64>()
                / ended.len() as f64;
            let last_seen = ended
                .iter()
                .map(|&i| *tracks[i].times.last().unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            merges.push(MergeEvent {
                time: t,
                last_seen,
                position,
                tracks: ended,
            });
        }
        let mut next: Vec<usize> = active
            .iter()
            .zip(&track_used)
            .filter(|(_, u)| **u)
            .map(|(tr, _)| *tr)
            .collect();
        for (ci, c) in cores.iter().enumerate() {
            if !core_used[ci] {
                tracks.push(CoreTrack {
                    orientation: c.1,
                    times: vec![t],
                    positions: vec![c.0],
                });
                next.push(tracks.len() - 1);
            }
        }
        active = next;
    }
    Ok(CoreTracks {
        times: run.times.clone(),
        per_snapshot,
        tracks,
        merges,
    })
}

/// One row of the PDE-versus-particles comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// Sup over the time grid and cores of `|core_i - x_i|`, one entry per
    /// mobility convention (reciprocal norm, reciprocal norm squared).
    pub error_norm: f64,
    pub error_norm_sq: f64,
    /// False if some snapshot did not show exactly `N` cores.
    pub cores_complete: bool,
    pub h: f64,
}

impl ConvergenceRow {
    pub fn error(&self, c: GammaConvention) -> f64 {
        match c {
            GammaConvention::ReciprocalNorm => self.error_norm,
            GammaConvention::ReciprocalNormSquared => self.error_norm_sq,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub s: f64,
    /// `C(s)/‖u⋆'‖` and `C(s)/‖u⋆'‖²`.
    pub gamma_norm: f64,
    pub gamma_norm_sq: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Convention with the smaller error at the smallest `ε`.
    pub preferred: GammaConvention,
}

impl ConvergenceTable {
    /// Errors of `convention` strictly decrease along the rows.
    pub fn strictly_decreasing(&self, convention: GammaConvention) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].error(convention) < w[0].error(convention))
    }

    pub fn final_error(&self, convention: GammaConvention) -> f64 {
        self.rows
            .last()
            .map(|r| r.error(convention))
            .unwrap_or(f64::NAN)
    }
}

fn check_time_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 2 || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "time grid needs >= 2 strictly increasing nonnegative times".into(),
        ));
    }
    Ok(())
}

/// Compares the cores of one run at scale `eps` with the particle system.
pub fn convergence_row(
    layer: &Heteroclinic,
    cfg: &LayerConfig,
    eps: f64,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<ConvergenceRow> {
    check_time_grid(t_grid)?;
    let run = evolve_at(layer, InitialData::Layers(cfg), eps, t_grid, opts)?;
    let cores: Vec<Vec<f64>> = (0..run.snapshots.len())
        .map(|k| cores_of(&run, k).iter().map(|c| c.0).collect())
        .collect();
    let complete = cores.iter().all(|c| c.len() == cfg.len());
    let t_end = t_grid[t_grid.len() - 1];
    let mut errs = [0.0f64; 2];
    for (e, conv) in errs.iter_mut().zip([
        GammaConvention::ReciprocalNorm,
        GammaConvention::ReciprocalNormSquared,
    ]) {
        let gamma = evolution_gamma(layer, conv);
        let io = IntegrateOptions {
            max_step: t_end / 200.0,
            ..Default::default()
        };
        let traj = integrate_with(cfg, layer.s, gamma, t_end, io)?;
        for (k, &t) in t_grid.iter().enumerate() {
            let x = match traj.position_at(t) {
                Some(x) if x.len() == cores[k].len() => x,
                _ => {
                    *e = f64::INFINITY;
                    break;
                }
            };
            for (c, p) in cores[k].iter().zip(&x) {
                *e = e.max(fabs(c - p));
            }
        }
    }
    Ok(ConvergenceRow {
        eps,
        error_norm: errs[0],
        error_norm_sq: errs[1],
        cores_complete: complete,
        h: run.grid.h(),
    })
}

/// Runs [`convergence_row`] for each `ε` in the decreasing list.
pub fn convergence_study(
    layer: &Heteroclinic,
    cfg: &LayerConfig,
    eps_list: &[f64],
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<ConvergenceTable> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput(
            "eps list must be strictly decreasing".into(),
        ));
    }
    let rows = eps_list
        .iter()
        .map(|&e| convergence_row(layer, cfg, e, t_grid, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_convergence(layer, rows))
}

/// Builds the table from rows computed elsewhere (for instance in parallel).
pub fn assemble_convergence(layer: &Heteroclinic, rows: Vec<ConvergenceRow>) -> ConvergenceTable {
    let last = rows.last();
    let preferred = match last {
        Some(r) if r.error_norm < r.error_norm_sq => GammaConvention::ReciprocalNorm,
        _ => GammaConvention::ReciprocalNormSquared,
    };
    ConvergenceTable {
        s: layer.s.get(),
        gamma_norm: evolution_gamma(layer, GammaConvention::ReciprocalNorm),
        gamma_norm_sq: evolution_gamma(layer, GammaConvention::ReciprocalNormSquared),
        rows,
        preferred,
    }
}

/// Long-time state predicted by the parity of `ℓ = N - 2K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptote {
    Zero,
    /// The constant `ℓ/2` for even `ℓ ≠ 0`.
    Constant(f64),
    /// `(ℓ-1)/2 + u⋆((x - center)/ε)`.
    Layer {
        lower: f64,
        center: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticClass {
    Zero,
    Constant,
    Heteroclinic,
    Unclassified,
}

impl AsymptoticClass {
    pub fn name(self) -> &'static str {
        match self {
            AsymptoticClass::Zero => "zero",
            AsymptoticClass::Constant => "constant",
            AsymptoticClass::Heteroclinic => "heteroclinic",
            AsymptoticClass::Unclassified => "unclassified",
        }
    }

    pub fn predicted(ell: i64) -> Self {
        if ell == 0 {
            AsymptoticClass::Zero
        } else if ell % 2 == 0 {
            AsymptoticClass::Constant
        } else {
            AsymptoticClass::Heteroclinic
        }
    }
}

/// Terminal state compared with the three candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub ell: i64,
    pub predicted: AsymptoticClass,
    pub observed: AsymptoticClass,
    /// Sup distances on the window to `0`, to `ℓ/2` and to the fitted layer.
    pub distance_zero: f64,
    pub distance_constant: f64,
    pub distance_layer: Option<f64>,
    /// Center of the fitted layer, when one was found.
    pub layer_center: Option<f64>,
    pub window: (f64, f64),
    pub terminal_cores: Vec<f64>,
}

impl Classification {
    pub fn agrees(&self) -> bool {
        self.predicted == self.observed
    }
}

/// Largest sup distance accepted as a match.
pub const CLASSIFY_TOLERANCE: f64 = 0.25;

/// Window used to judge snapshot `k`: between the outermost remaining cores,
/// around a single core, or over the initial span when no core is left.
fn judging_window(run: &ParabolicRun, cores: &[f64]) -> (f64, f64) {
    let span = run
        .reference
        .as_ref()
        .map(|c| c.positions()[c.len() - 1] - c.positions()[0])
        .unwrap_or(0.0);
    let c = run.center();
    match cores.len() {
        0 => (
            c - 0.5 * span - 5.0 * run.eps,
            c + 0.5 * span + 5.0 * run.eps,
        ),
        1 => {
            let w = (0.5 * span).max(10.0 * run.eps);
            (cores[0] - w, cores[0] + w)
        }
        _ => {
            let (a, b) = (cores[0], cores[cores.len() - 1]);
            let q = 0.25 * (b - a);
            (a + q, b - q)
        }
    }
}

fn sup_on(run: &ParabolicRun, k: usize, window: (f64, f64), target: impl Fn(f64) -> f64) -> f64 {
    let mut m: f64 = 0.0;
    for (j, v) in run.snapshots[k].iter().enumerate() {
        let x = run.grid.x(j);
        if x >= window.0 && x <= window.1 {
            m = m.max(fabs(v - target(x)));
        }
    }
    m
}

/// Compares the last snapshot with zero, the constant `ℓ/2` and a layer
/// from `(ℓ-1)/2` to `(ℓ+1)/2`, and checks against the parity prediction.
pub fn classify_asymptotics(cfg: &LayerConfig, run: &ParabolicRun) -> Result<Classification> {
    let k = run
        .snapshots
        .len()
        .checked_sub(1)
        .ok_or(Error::InvalidInput("run has no snapshots".into()))?;
    let ell = cfg.ell();
    let cores: Vec<f64> = cores_of(run, k).iter().map(|c| c.0).collect();
    let window = judging_window(run, &cores);
    let half = ell as f64 / 2.0;
    let distance_zero = sup_on(run, k, window, |_| 0.0);
    let distance_constant = sup_on(run, k, window, |_| half);
    let layer_center = if ell % 2 != 0 {
        if cores.len() == 1 {
            Some(cores[0])
        } else {
            let x = run.nodes();
            let (lo, hi) = (run.grid.nearest(window.0), run.grid.nearest(window.1));
            let level = half;
            first_crossing(&x[lo..=hi], &run.snapshots[k][lo..=hi], level)
        }
    } else {
        None
    };
    let lower = (ell as f64 - 1.0) / 2.0;
    let sign = if ell >= 0 { 1.0 } else { -1.0 };
    let distance_layer = layer_center.map(|c| {
        sup_on(run, k, window, |x| {
            lower + run.layer.eval(sign * (x - c) / run.eps)
        })
    });
    let mut best = (distance_zero, AsymptoticClass::Zero);
    if ell != 0 && distance_constant < best.0 {
        best = (distance_constant, AsymptoticClass::Constant);
    }
    if let Some(d) = distance_layer {
        if d < best.0 {
            best = (d, AsymptoticClass::Heteroclinic);
        }
    }
    let observed = if best.0 <= CLASSIFY_TOLERANCE {
        best.1
    } else {
        AsymptoticClass::Unclassified
    };
    Ok(Classification {
        ell,
        predicted: AsymptoticClass::predicted(ell),
        observed,
        distance_zero,
        distance_constant,
        distance_layer,
        layer_center,
        window,
        terminal_cores: cores,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RelaxationOptions {
    /// The fit starts at the first sample with `sup|v - v∞|` below this,
    /// leaving out the nonlinear collapse right after the merge.
    pub start_below: f64,
    /// Samples below this are left out of the fit.
    pub floor: f64,
    pub min_samples: usize,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        RelaxationOptions {
            start_below: 0.1,
            floor: 1e-12,
            min_samples: 20,
        }
    }
}

/// Exponential decay `sup|v - v∞| ≈ ρ exp(-c (t - T))` after a collision.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationFit {
    /// Onset `T`, the first fitted sample.
    pub onset: f64,
    pub rate: f64,
    /// `rate · ε^{2s+1}`.
    pub scaled_rate: f64,
    /// Sup distance at the onset.
    pub rho: f64,
    pub r2: f64,
    pub samples: usize,
    pub accepted: bool,
    pub asymptote: Asymptote,
    /// `max v(t, x_c)` for `t ∈ [0.9 T_m, T_m]`, `T_m` the first merge time.
    pub memory_stat: Option<f64>,
    pub merge_time: Option<f64>,
}

/// Predicted limit of a run with reference configuration, with the layer
/// center read from the terminal snapshot for odd `ℓ`.
pub fn asymptote_of(run: &ParabolicRun) -> Asymptote {
    let ell = run.reference.as_ref().map(|c| c.ell()).unwrap_or(0);
    if ell == 0 {
        return Asymptote::Zero;
    }
    if ell % 2 == 0 {
        return Asymptote::Constant(ell as f64 / 2.0);
    }
    let k = run.snapshots.len() - 1;
    let cores = cores_of(run, k);
    let center = if cores.len() == 1 {
        cores[0].0
    } else {
        let (lo, hi) = run.interior();
        let x = run.nodes();
        first_crossing(&x[lo..hi], &run.snapshots[k][lo..hi], ell as f64 / 2.0)
            .unwrap_or(run.center())
    };
    Asymptote::Layer {
        lower: (ell as f64 - 1.0) / 2.0,
        center,
    }
}

fn asymptote_value(run: &ParabolicRun, a: Asymptote, x: f64) -> f64 {
    match a {
        Asymptote::Zero => 0.0,
        Asymptote::Constant(c) => c,
        Asymptote::Layer { lower, center } => lower + run.layer.eval((x - center) / run.eps),
    }
}

/// `max v(t, x_c)` over `t ∈ [0.9 T_m, T_m]` for the first merge event.
pub fn memory_statistic(run: &ParabolicRun, tracks: &CoreTracks) -> Option<(f64, f64)> {
    let m = tracks.merges.first()?;
    let t_m = m.time;
    let mut best = f64::NEG_INFINITY;
    for (k, &t) in run.times.iter().enumerate() {
        if t >= 0.9 * t_m && t <= t_m {
            best = best.max(run.value_at(k, m.position));
        }
    }
    if best.is_finite() {
        Some((best, t_m))
    } else {
        None
    }
}

/// Log-linear fit of the sup distance to the predicted limit on the
/// central half of the domain, using the snapshots at `t ≥ after`.
/// `(t, sup_x |v(t, ·) − v_∞|)` over the interior for every output time,
/// with `v_∞` from [`asymptote_of`].
pub fn sup_distance(run: &ParabolicRun) -> Vec<(f64, f64)> {
    let asymptote = asymptote_of(run);
    let (lo, hi) = run.interior();
    let target: Vec<f64> = (lo..hi)
        .map(|j| asymptote_value(run, asymptote, run.grid.x(j)))
        .collect();
    run.times
        .iter()
        .zip(&run.snapshots)
        .map(|(&t, v)| {
            (
                t,
                v[lo..hi]
                    .iter()
                    .zip(&target)
                    .map(|(v, z)| fabs(v - z))
                    .fold(0.0, f64::max),
            )
        })
        .collect()
}

pub fn measure_relaxation(
    run: &ParabolicRun,
    after: f64,
    opts: &RelaxationOptions,
) -> Result<RelaxationFit> {
    let asymptote = asymptote_of(run);
    let samples: Vec<(f64, f64)> = sup_distance(run)
        .into_iter()
        .filter(|&(t, _)| t >= after)
        .collect();
    // A flat end means the discretization floor was reached; stay a decade
    // above it.
    let mut floor = opts.floor;
    if samples.len() > 5 {
        let last = samples[samples.len() - 1].1;
        if last > 0.5 * samples[samples.len() - 6].1 {
            floor = floor.max(10.0 * last);
        }
    }
    let mut ts = Vec::new();
    let mut ls = Vec::new();
    let mut rho = f64::NAN;
    for &(t, d) in &samples {
        if d > opts.start_below && ts.is_empty() {
            continue;
        }
        if d <= floor {
            break;
        }
        if ts.is_empty() {
            rho = d;
        }
        ts.push(t);
        ls.push(log(d));
    }
    if ts.len() < opts.min_samples {
        return Err(Error::InvalidInput(alloc::format!(
            "relaxation window has {} usable snapshots, need {}",
            ts.len(),
            opts.min_samples
        )));
    }
    let (_, b, r2) = fit_line(&ts, &ls);
    let rate = -b;
    let (memory_stat, merge_time) = match extract_cores(run)
        .ok()
        .and_then(|t| memory_statistic(run, &t))
    {
        Some((m, t)) => (Some(m), Some(t)),
        None => (None, None),
    };
    Ok(RelaxationFit {
        onset: ts[0],
        rate,
        scaled_rate: rate * pow(run.eps, 2.0 * run.s() + 1.0),
        rho,
        r2,
        samples: ts.len(),
        accepted: rate > 0.0,
        asymptote,
        memory_stat,
        merge_time,
    })
}
