//! The particle system for dislocation cores,
//!
//! `ẋ_i = γ Σ_{j≠i} ζ_i ζ_j (x_i - x_j) / (2s |x_i - x_j|^{1+2s})`,
//!
//! integrated with an embedded Runge-Kutta 5(4) pair up to the first
//! collision, together with the closed-form collision-time bounds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::FractionalOrder;
use crate::math::{fabs, fit_line, log, pow};

/// Positions `x̄₁ < … < x̄_N` with orientations `ζ_i ∈ {-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerConfig {
    positions: Vec<f64>,
    orientations: Vec<i8>,
}

impl LayerConfig {
    pub fn new(positions: Vec<f64>, orientations: Vec<i8>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidConfig("need at least one layer".into()));
        }
        if positions.len() != orientations.len() {
            return Err(Error::InvalidConfig(format!(
                "{} positions but {} orientations",
                positions.len(),
                orientations.len()
            )));
        }
        if let Some(z) = orientations.iter().find(|z| **z != 1 && **z != -1) {
            return Err(Error::InvalidConfig(format!("orientation {z} is not ±1")));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("non-finite position".into()));
        }
        if let Some(i) = positions.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(format!(
                "positions must be strictly increasing (x[{}] = {} ≥ x[{}] = {})",
                i,
                positions[i],
                i + 1,
                positions[i + 1]
            )));
        }
        Ok(LayerConfig {
            positions,
            orientations,
        })
    }

    /// Orientations `+1, -1, +1, …` at the given positions.
    pub fn alternating(positions: Vec<f64>) -> Result<Self> {
        let z = (0..positions.len())
            .map(|i| if i % 2 == 0 { 1 } else { -1 })
            .collect();
        Self::new(positions, z)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn orientations(&self) -> &[i8] {
        &self.orientations
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of negative orientations.
    pub fn k(&self) -> usize {
        self.orientations.iter().filter(|z| **z == -1).count()
    }

    /// `ℓ = N - 2K`, the far-right level of the superposition.
    pub fn ell(&self) -> i64 {
        self.len() as i64 - 2 * self.k() as i64
    }

    pub fn is_alternating(&self) -> bool {
        self.orientations.windows(2).all(|w| w[0] != w[1])
    }

    /// Gaps `x_{i+1} - x_i` of the initial configuration.
    pub fn gaps(&self) -> Vec<f64> {
        gaps(&self.positions)
    }

    /// Same orientations, positions multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        Self::new(
            self.positions.iter().map(|x| lambda * x).collect(),
            self.orientations.clone(),
        )
    }
}

pub fn gaps(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn min_gap(x: &[f64]) -> (usize, f64) {
    x.windows(2)
        .enumerate()
        .map(|(i, w)| (i, w[1] - w[0]))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

/// Velocities of the particle system. Fails on coincident positions.
pub fn rhs(
    positions: &[f64],
    orientations: &[i8],
    s: FractionalOrder,
    gamma: f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; positions.len()];
    rhs_into(positions, orientations, s, gamma, &mut out)?;
    Ok(out)
}

fn rhs_into(x: &[f64], z: &[i8], s: FractionalOrder, gamma: f64, out: &mut [f64]) -> Result<()> {
    let two_s = s.two_s();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = x[i] - x[j];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::SingularState { i, j });
            }
            // Pair term for i; j receives the opposite.
            let f = gamma * (z[i] * z[j]) as f64 * d / (two_s * pow(fabs(d), 1.0 + two_s));
            out[i] += f;
            out[j] -= f;
        }
    }
    Ok(())
}

/// Interaction energy whose negative gradient is [`rhs`]:
/// `-γ Σ_{i<j} ζ_iζ_j |x_i-x_j|^{1-2s} / (2s(1-2s))`, and
/// `-γ Σ_{i<j} ζ_iζ_j log|x_i-x_j|` at `s = 1/2`.
pub fn energy(positions: &[f64], orientations: &[i8], s: FractionalOrder, gamma: f64) -> f64 {
    let s = s.get();
    let mut e = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = fabs(positions[i] - positions[j]);
            let zz = (orientations[i] * orientations[j]) as f64;
            e -= if s == 0.5 {
                gamma * zz * log(d)
            } else {
                gamma * zz * pow(d, 1.0 - 2.0 * s) / (2.0 * s * (1.0 - 2.0 * s))
            };
        }
    }
    e
}

/// Closed-form collision time of an opposite pair at distance `d0`.
pub fn two_body_collision_time(s: FractionalOrder, gamma: f64, d0: f64) -> f64 {
    let s = s.get();
    s * pow(d0, 2.0 * s + 1.0) / ((2.0 * s + 1.0) * gamma)
}

/// Gap of a repelling equal-orientation pair at time `t`.
pub fn two_body_repulsive_gap(s: FractionalOrder, gamma: f64, d0: f64, t: f64) -> f64 {
    let s = s.get();
    let e = 2.0 * s + 1.0;
    pow(pow(d0, e) + e * gamma * t / s, 1.0 / e)
}

/// Collision time of the alternating triple with equal gaps `d0`.
pub fn symmetric_triple_collision_time(s: FractionalOrder, gamma: f64, d0: f64) -> f64 {
    let s = s.get();
    2.0 * s * pow(d0, 2.0 * s + 1.0) / ((2.0 * s + 1.0) * gamma * (1.0 - pow(2.0, -2.0 * s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    /// Reached `t_end` without a collision.
    Running,
    Collided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionKind {
    Pair,
    Triple,
}

impl CollisionKind {
    pub fn name(self) -> &'static str {
        match self {
            CollisionKind::Pair => "pair",
            CollisionKind::Triple => "triple",
        }
    }
}

/// Clauses of the collision-time theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// Opposite pair.
    I,
    /// Alternating triple: `T_c ∈ [τ, Cτ]`.
    II,
    /// A close opposite pair among `N` particles.
    III,
    /// `N` alternating particles.
    IV,
}

impl Clause {
    pub fn name(self) -> &'static str {
        match self {
            Clause::I => "i",
            Clause::II => "ii",
            Clause::III => "iii",
            Clause::IV => "iv",
        }
    }
}

/// One clause evaluated on a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionBound {
    pub clause: Clause,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// The upper bound with the length taken to the first power instead of
    /// `2s+1`, as printed for clauses (i) and (iii).
    pub literal_upper: Option<f64>,
    /// Why the clause does not apply, if it does not.
    pub skipped: Option<&'static str>,
}

impl CollisionBound {
    fn skip(clause: Clause, why: &'static str) -> Self {
        CollisionBound {
            clause,
            lower: None,
            upper: None,
            literal_upper: None,
            skipped: Some(why),
        }
    }

    pub fn applies(&self) -> bool {
        self.skipped.is_none()
    }

    /// Whether `t_c` lies within the bound, with relative slack `rel`.
    pub fn contains(&self, t_c: f64, rel: f64) -> bool {
        self.lower.is_none_or(|lo| t_c >= lo * (1.0 - rel))
            && self.upper.is_none_or(|hi| t_c <= hi * (1.0 + rel))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub bound: CollisionBound,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    /// Extrapolated collision time.
    pub t_c: f64,
    /// Zero-based indices of the colliding particles (two or three).
    pub indices: Vec<usize>,
    pub kind: CollisionKind,
    pub bound_checks: Vec<BoundCheck>,
    /// Time and smallest gap when integration stopped.
    pub t_stop: f64,
    pub gap_stop: f64,
}

/// Relative slack used when checking bounds that can hold with equality.
pub const BOUND_SLACK: f64 = 1e-6;

/// Evaluates every clause of the collision theorem on `cfg`. Clause (iii)
/// needs the ratio `a0`; without it the clause is skipped.
pub fn collision_bounds(
    cfg: &LayerConfig,
    s: FractionalOrder,
    gamma: f64,
    a0: Option<f64>,
) -> Vec<CollisionBound> {
    let sv = s.get();
    let e = 2.0 * sv + 1.0;
    let n = cfg.len();
    let x = cfg.positions();
    let g = cfg.gaps();
    let mut out = Vec::with_capacity(4);

    out.push(if n == 2 && cfg.k() == 1 {
        CollisionBound {
            clause: Clause::I,
            lower: None,
            upper: Some(sv * pow(g[0], e) / (e * gamma)),
            literal_upper: Some(sv * g[0] / (e * gamma)),
            skipped: None,
        }
    } else {
        CollisionBound::skip(Clause::I, "needs N = 2 with opposite orientations")
    });

    out.push(if n == 3 && cfg.is_alternating() {
        let tau = sv * pow(g[0].min(g[1]), e) / (e * gamma);
        let c = pow(2.0, e) / (pow(2.0, 2.0 * sv) - 1.0);
        CollisionBound {
            clause: Clause::II,
            lower: Some(tau),
            upper: Some(c * tau),
            literal_upper: None,
            skipped: None,
        }
    } else {
        CollisionBound::skip(Clause::II, "needs N = 3 with alternating orientations")
    });

    out.push(clause_three(cfg, s, gamma, a0));

    out.push(if n >= 2 && cfg.is_alternating() {
        let span = pow(x[n - 1] - x[0], e);
        let upper = if n % 2 == 1 {
            (n - 1) as f64 * span / (e * gamma)
        } else {
            sv * span / (e * gamma)
        };
        CollisionBound {
            clause: Clause::IV,
            lower: None,
            upper: Some(upper),
            literal_upper: None,
            skipped: None,
        }
    } else {
        CollisionBound::skip(Clause::IV, "needs alternating orientations")
    });
    out
}

/// The opposite pair with the smallest gap, if any.
pub fn closest_opposite_pair(cfg: &LayerConfig) -> Option<usize> {
    let z = cfg.orientations();
    cfg.gaps()
        .iter()
        .enumerate()
        .filter(|(i, _)| z[*i] != z[*i + 1])
        .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
            Some((_, bg)) if bg <= *g => best,
            _ => Some((i, *g)),
        })
        .map(|(i, _)| i)
}

fn min_other_gap(gaps: &[f64], i0: usize) -> f64 {
    gaps.iter()
        .enumerate()
        .filter(|(i, _)| *i != i0)
        .map(|(_, g)| *g)
        .fold(f64::INFINITY, f64::min)
}

fn clause_three(
    cfg: &LayerConfig,
    s: FractionalOrder,
    gamma: f64,
    a0: Option<f64>,
) -> CollisionBound {
    let n = cfg.len();
    if n < 2 || cfg.k() > n - 1 {
        return CollisionBound::skip(Clause::III, "needs N ≥ 2 and K ≤ N-1");
    }
    let Some(i0) = closest_opposite_pair(cfg) else {
        return CollisionBound::skip(
            Clause::III,
            "no neighbouring pair with opposite orientations",
        );
    };
    let Some(a0) = a0 else {
        return CollisionBound::skip(Clause::III, "no ratio a0 supplied");
    };
    let sv = s.get();
    let a_max = if n > 2 {
        pow((n - 2) as f64, -1.0 / (2.0 * sv))
    } else {
        f64::INFINITY
    };
    if !(a0 > 0.0 && a0 < a_max) {
        return CollisionBound::skip(Clause::III, "a0 outside (0, (N-2)^{-1/(2s)})");
    }
    let g = cfg.gaps();
    if g[i0] > a0 * min_other_gap(&g, i0) {
        return CollisionBound::skip(Clause::III, "the opposite pair is not a0-close");
    }
    let e = 2.0 * sv + 1.0;
    let den = e * gamma * (1.0 - (n as f64 - 2.0) * pow(a0, 2.0 * sv));
    CollisionBound {
        clause: Clause::III,
        lower: None,
        upper: Some(sv * pow(g[i0], e) / den),
        literal_upper: Some(sv * g[i0] / den),
        skipped: None,
    }
}

#[derive(Debug, Clone)]
pub struct ParticleTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub orientations: Vec<i8>,
    pub status: TrajectoryStatus,
    pub collision: Option<CollisionReport>,
}

impl ParticleTrajectory {
    pub fn final_positions(&self) -> &[f64] {
        self.positions
            .last()
            .expect("trajectory has at least the initial sample")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory has at least the initial sample")
    }

    /// Positions at time `t` by cubic Hermite interpolation between stored
    /// samples. `None` outside the integrated interval.
    pub fn position_at(&self, t: f64) -> Option<Vec<f64>> {
        let last = self.final_time();
        if t < self.times[0] || t > last {
            return None;
        }
        let k = match self
            .times
            .binary_search_by(|v| v.partial_cmp(&t).expect("finite times"))
        {
            Ok(k) => return Some(self.positions[k].clone()),
            Err(k) => k - 1,
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let dt = t1 - t0;
        let u = (t - t0) / dt;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u),
            u * (1.0 - u) * (1.0 - u),
            u * u * (3.0 - 2.0 * u),
            u * u * (u - 1.0),
        );
        let (p0, p1, v0, v1) = (
            &self.positions[k],
            &self.positions[k + 1],
            &self.velocities[k],
            &self.velocities[k + 1],
        );
        Some(
            (0..p0.len())
                .map(|i| h00 * p0[i] + h10 * dt * v0[i] + h01 * p1[i] + h11 * dt * v1[i])
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// Per-step relative error target.
    pub rtol: f64,
    /// Stop when the smallest gap drops below this; defaults to `1e-4` times
    /// the smallest initial gap.
    pub gap_tol: Option<f64>,
    /// Largest allowed step (for dense sampling).
    pub max_step: f64,
    pub max_steps: usize,
    /// Ratio used for clause (iii) in the bound checks.
    pub a0: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-9,
            gap_tol: None,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
            a0: None,
        }
    }
}

pub fn integrate(
    cfg: &LayerConfig,
    s: FractionalOrder,
    gamma: f64,
    t_end: f64,
    gap_tol: Option<f64>,
) -> Result<ParticleTrajectory> {
    integrate_with(
        cfg,
        s,
        gamma,
        t_end,
        IntegrateOptions {
            gap_tol,
            ..Default::default()
        },
    )
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration from the configuration until
/// `t_end` or the first collision.
///
/// Steps whose stages would reorder or merge particles are rejected and
/// halved. Once the smallest gap falls below `gap_tol` the collision time
/// is extrapolated from the last samples, using that `gap^{2s+1}` is affine
/// in time for an isolated opposite pair.
pub fn integrate_with(
    cfg: &LayerConfig,
    s: FractionalOrder,
    gamma: f64,
    t_end: f64,
    opts: IntegrateOptions,
) -> Result<ParticleTrajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidInput("t_end must be positive".into()));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidInput(
            "gamma must be positive and finite".into(),
        ));
    }
    let n = cfg.len();
    let z = cfg.orientations();
    let g0 = if n > 1 {
        min_gap(cfg.positions()).1
    } else {
        1.0
    };
    let gap_tol = opts.gap_tol.unwrap_or(1e-4 * g0);
    if !(gap_tol > 0.0 && gap_tol < g0) {
        return Err(Error::InvalidInput(
            "gap_tol must lie in (0, smallest initial gap)".into(),
        ));
    }
    let sv = s.get();
    let e = 2.0 * sv + 1.0;

    // The law is translation invariant. Working about the midpoint of the
    // outer particles keeps mirror-symmetric data exactly symmetric.
    let x0 = cfg.positions();
    let centre = if n > 0 {
        0.5 * (x0[0] + x0[n - 1])
    } else {
        0.0
    };
    let mut y: Vec<f64> = x0.iter().map(|x| x - centre).collect();
    let shifted = |y: &[f64]| -> Vec<f64> { y.iter().map(|v| v + centre).collect() };
    let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
    rhs_into(&y, z, s, gamma, &mut k[0])?;
    let mut traj = ParticleTrajectory {
        times: vec![0.0],
        positions: vec![x0.to_vec()],
        velocities: vec![k[0].clone()],
        orientations: z.to_vec(),
        status: TrajectoryStatus::Running,
        collision: None,
    };
    if n < 2 {
        traj.times.push(t_end);
        traj.positions.push(shifted(&y));
        traj.velocities.push(k[0].clone());
        return Ok(traj);
    }

    let mut t = 0.0;
    let mut h = (1e-3 * sv * pow(g0, e) / (e * gamma))
        .min(opts.max_step)
        .min(t_end);
    let mut stage = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut steps = 0;
    let mut collided = false;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::SolverFailure {
                solver: "particle integrator",
                residual: h,
                iterations: steps,
            });
        }
        if h < 1e-15 * (1.0 + t) {
            collided = true;
            break;
        }
        let h_step = h.min(t_end - t);
        let mut ok = true;
        for st in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (m, a) in A[st - 1].iter().enumerate().take(st) {
                    acc += h_step * a * k[m][i];
                }
                stage[i] = acc;
            }
            if min_gap(&stage).1 <= 0.0 || rhs_into(&stage, z, s, gamma, &mut k[st]).is_err() {
                ok = false;
                break;
            }
            if st == 6 {
                y5.copy_from_slice(&stage);
            }
        }
        if !ok {
            h *= 0.5;
            continue;
        }
        // Error estimate: 5th-order minus embedded 4th-order solution.
        let gmin = min_gap(&y).1.min(min_gap(&y5).1);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut y4 = y[i];
            for (m, b) in B4.iter().enumerate() {
                y4 += h_step * b * k[m][i];
            }
            let sc = opts.rtol * (gmin + fabs(y[i]).max(fabs(y5[i])));
            err = err.max(fabs(y5[i] - y4) / sc);
        }
        if err > 1.0 {
            h = h_step * (0.9 * pow(err, -0.2)).max(0.2);
            continue;
        }
        t += h_step;
        y.copy_from_slice(&y5);
        k.swap(0, 6);
        traj.times.push(t);
        traj.positions.push(shifted(&y));
        traj.velocities.push(k[0].clone());
        let grow = if err == 0.0 {
            5.0
        } else {
            (0.9 * pow(err, -0.2)).clamp(0.2, 5.0)
        };
        h = (h_step * grow).min(opts.max_step);
        if min_gap(&y).1 < gap_tol {
            collided = true;
            break;
        }
    }

    if collided {
        traj.status = TrajectoryStatus::Collided;
        let (i0, gstop) = min_gap(&y);
        let g = gaps(&y);
        let left = i0 > 0 && g[i0 - 1] <= 2.0 * gap_tol;
        let right = i0 + 1 < g.len() && g[i0 + 1] <= 2.0 * gap_tol;
        let (kind, indices) = if left {
            (CollisionKind::Triple, vec![i0 - 1, i0, i0 + 1])
        } else if right {
            (CollisionKind::Triple, vec![i0, i0 + 1, i0 + 2])
        } else {
            (CollisionKind::Pair, vec![i0, i0 + 1])
        };
        let t_c = extrapolate_collision(&traj, i0, e).max(t);
        let bound_checks = collision_bounds(cfg, s, gamma, opts.a0)
            .into_iter()
            .filter(CollisionBound::applies)
            .map(|b| BoundCheck {
                satisfied: b.contains(t_c, BOUND_SLACK),
                bound: b,
            })
            .collect();
        traj.collision = Some(CollisionReport {
            t_c,
            indices,
            kind,
            bound_checks,
            t_stop: t,
            gap_stop: gstop,
        });
    }
    Ok(traj)
}

/// Root of the least-squares line through `(t, gap^{2s+1})` over the last
/// samples of the pair `(i0, i0+1)`.
fn extrapolate_collision(traj: &ParticleTrajectory, i0: usize, e: f64) -> f64 {
    let m = traj.times.len();
    let take = m.min(6);
    let ts: Vec<f64> = traj.times[m - take..].to_vec();
    let gs: Vec<f64> = traj.positions[m - take..]
        .iter()
        .map(|p| pow(p[i0 + 1] - p[i0], e))
        .collect();
    let (a, b, _) = fit_line(&ts, &gs);
    if b < 0.0 {
        -a / b
    } else {
        *ts.last().expect("non-empty")
    }
}

/// Outcome of [`ordering_persistence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceReport {
    pub check: PersistenceKind,
    /// Number of accepted steps examined (all before the collision).
    pub samples: usize,
    pub holds: bool,
    /// Largest violation measure: `max (g_close - g_far)` for the gap order,
    /// `max |g₁ - g₂|` for equal gaps, `max ratio` for clause (iii).
    pub worst: f64,
    pub t_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PersistenceKind {
    /// Alternating triple with unequal gaps: the closer pair stays closer.
    GapOrder,
    /// Alternating triple with equal gaps: they stay equal.
    EqualGaps,
    /// Clause (iii): the close pair stays `a0`-close.
    CloseRatio,
}

/// Integrates to the collision and checks that the initial gap ordering
/// (alternating triple) or the clause-(iii) ratio (when `a0` is given)
/// holds at every accepted step.
pub fn ordering_persistence_check(
    cfg: &LayerConfig,
    s: FractionalOrder,
    gamma: f64,
    a0: Option<f64>,
) -> Result<PersistenceReport> {
    let kind = match a0 {
        Some(_) => PersistenceKind::CloseRatio,
        None if cfg.len() == 3 && cfg.is_alternating() => {
            let g = cfg.gaps();
            if g[0] == g[1] {
                PersistenceKind::EqualGaps
            } else {
                PersistenceKind::GapOrder
            }
        }
        None => {
            return Err(Error::InvalidInput(
                "persistence check needs an alternating triple or a ratio a0".into(),
            ))
        }
    };
    let bounds = collision_bounds(cfg, s, gamma, a0);
    let horizon = bounds
        .iter()
        .filter_map(|b| b.upper)
        .fold(f64::INFINITY, f64::min);
    if kind == PersistenceKind::CloseRatio
        && !bounds
            .iter()
            .any(|b| b.clause == Clause::III && b.applies())
    {
        return Err(Error::InvalidInput(
            "clause (iii) hypotheses do not hold for this configuration".into(),
        ));
    }
    let t_end = if horizon.is_finite() {
        4.0 * horizon
    } else {
        1e6
    };
    let traj = integrate_with(
        cfg,
        s,
        gamma,
        t_end,
        IntegrateOptions {
            a0,
            ..Default::default()
        },
    )?;
    let samples = traj.positions.len();
    let (holds, worst) = match kind {
        PersistenceKind::GapOrder => {
            let g = cfg.gaps();
            let (close, far) = if g[0] < g[1] { (0, 1) } else { (1, 0) };
            let worst = traj.positions.iter().map(|p| {
                let g = gaps(p);
                g[close] - g[far]
            });
            let worst = worst.fold(f64::NEG_INFINITY, f64::max);
            (worst < 0.0, worst)
        }
        PersistenceKind::EqualGaps => {
            let worst = traj
                .positions
                .iter()
                .map(|p| {
                    let g = gaps(p);
                    fabs(g[0] - g[1])
                })
                .fold(0.0, f64::max);
            (worst <= 1e-9, worst)
        }
        PersistenceKind::CloseRatio => {
            let i0 = closest_opposite_pair(cfg).expect("clause (iii) applies");
            let a0 = a0.expect("ratio given");
            let worst = traj
                .positions
                .iter()
                .map(|p| {
                    let g = gaps(p);
                    g[i0] / min_other_gap(&g, i0)
                })
                .fold(0.0, f64::max);
            (worst <= a0 * (1.0 + 1e-12), worst)
        }
    };
    Ok(PersistenceReport {
        check: kind,
        samples,
        holds,
        worst,
        t_c: traj.collision.map(|c| c.t_c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    #[test]
    fn config_validation() {
        assert!(LayerConfig::new(vec![0.0, 0.0], vec![1, -1]).is_err());
        assert!(LayerConfig::new(vec![1.0, 0.0], vec![1, -1]).is_err());
        assert!(LayerConfig::new(vec![0.0, 1.0], vec![1, 0]).is_err());
        assert!(LayerConfig::new(vec![0.0], vec![1, 1]).is_err());
        let c = LayerConfig::new(vec![0.0, 1.0, 2.0, 3.0], vec![1, -1, 1, 1]).unwrap();
        assert_eq!((c.k(), c.ell()), (1, 2));
    }

    #[test]
    fn pair_velocities() {
        let s = FractionalOrder::half();
        let v = rhs(&[0.0, 0.5], &[1, -1], s, 2.0 * PI).unwrap();
        assert!((v[0] - 4.0 * PI).abs() < 1e-12 && (v[1] + 4.0 * PI).abs() < 1e-12);
        let v = rhs(&[0.0, 0.5], &[1, 1], s, 2.0 * PI).unwrap();
        assert!(v[0] < 0.0 && v[1] > 0.0);
        assert!(matches!(
            rhs(&[1.0, 1.0], &[1, -1], s, 1.0),
            Err(Error::SingularState { i: 0, j: 1 })
        ));
    }

    #[test]
    fn symmetric_triple_centre_is_still() {
        let v = rhs(
            &[-1.0, 0.0, 1.0],
            &[1, -1, 1],
            FractionalOrder::new(0.3).unwrap(),
            1.0,
        )
        .unwrap();
        assert_eq!(v[1], 0.0);
        assert!((v[0] + v[2]).abs() < 1e-15);
    }

    #[test]
    fn energy_gradient_matches_rhs() {
        for s in [0.3, 0.5, 0.8] {
            let s = FractionalOrder::new(s).unwrap();
            let x = [-1.0, 0.2, 0.9, 2.5];
            let z = [1, -1, -1, 1];
            let v = rhs(&x, &z, s, 1.7).unwrap();
            for i in 0..4 {
                let h = 1e-6;
                let mut a = x;
                let mut b = x;
                a[i] += h;
                b[i] -= h;
                let grad = (energy(&a, &z, s, 1.7) - energy(&b, &z, s, 1.7)) / (2.0 * h);
                assert!((grad + v[i]).abs() < 1e-6, "s={} i={i}", s.get());
            }
        }
    }

    #[test]
    fn clause_three_hypotheses() {
        let s = FractionalOrder::half();
        let cfg = LayerConfig::new(vec![0.0, 0.1, 2.0, 4.0], vec![1, -1, 1, -1]).unwrap();
        let b = collision_bounds(&cfg, s, 1.0, Some(0.1));
        let iii = b.iter().find(|b| b.clause == Clause::III).unwrap();
        assert!(iii.applies());
        let b = collision_bounds(&cfg, s, 1.0, Some(0.01));
        assert!(!b
            .iter()
            .find(|b| b.clause == Clause::III)
            .unwrap()
            .applies());
        let b = collision_bounds(&cfg, s, 1.0, Some(0.6));
        assert!(!b
            .iter()
            .find(|b| b.clause == Clause::III)
            .unwrap()
            .applies());
    }
}
