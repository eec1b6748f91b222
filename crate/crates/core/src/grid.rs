//! Uniform 1-D grids and sampled fields with an explicit far-field model.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{fabs, floor, pow};

/// Fractional order `s ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s < 1.0 {
            Ok(FractionalOrder(s))
        } else {
            Err(Error::InvalidOrder {
                s,
                reason: "FractionalOrder requires 0 < s < 1",
            })
        }
    }

    pub fn half() -> Self {
        FractionalOrder(0.5)
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `2s`, the exponent of the layer tail and of the symbol `|ξ|^{2s}`.
    #[inline]
    pub fn two_s(self) -> f64 {
        2.0 * self.0
    }
}

/// Uniform grid on `[left, right]`.
///
/// Whole-line grids include both endpoints (`h = (right-left)/(n-1)`);
/// periodic grids omit the right endpoint (`h = (right-left)/n`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub left: f64,
    pub right: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Grid1D {
    /// Symmetric whole-line grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n, false)
    }

    /// Periodic grid on `[-half_width, half_width)`.
    pub fn periodic(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n, true)
    }

    pub fn new(left: f64, right: f64, n: usize, periodic: bool) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidGrid(format!(
                "need at least 16 nodes, got {n}"
            )));
        }
        if !(right > left) || !left.is_finite() || !right.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "empty or non-finite interval [{left}, {right}]"
            )));
        }
        Ok(Grid1D {
            left,
            right,
            n,
            periodic,
        })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        if self.periodic {
            (self.right - self.left) / self.n as f64
        } else {
            (self.right - self.left) / (self.n - 1) as f64
        }
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.left + j as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Length of the periodic cell.
    pub fn period(&self) -> f64 {
        self.right - self.left
    }

    /// Fractional node index of `x` (not clamped).
    #[inline]
    pub fn position(&self, x: f64) -> f64 {
        (x - self.left) / self.h()
    }

    /// Nearest node index, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let p = floor(self.position(x) + 0.5);
        if p < 0.0 {
            0
        } else {
            (p as usize).min(self.n - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Decaying,
}

/// Power-law closure `u(x) ≈ ℓ± ∓ c± / |x|^β` outside the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarField {
    pub l_minus: f64,
    pub l_plus: f64,
    pub beta: f64,
    pub c_minus: f64,
    pub c_plus: f64,
}

impl FarField {
    /// Exactly constant outside the grid.
    pub fn constant(l_minus: f64, l_plus: f64) -> Self {
        FarField {
            l_minus,
            l_plus,
            beta: 1.0,
            c_minus: 0.0,
            c_plus: 0.0,
        }
    }

    /// Tail value at `x` outside the grid.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.l_plus - self.c_plus / pow(x, self.beta)
        } else {
            self.l_minus + self.c_minus / pow(-x, self.beta)
        }
    }

    pub fn has_tail(&self) -> bool {
        self.c_minus != 0.0 || self.c_plus != 0.0
    }
}

/// Values on a grid plus the information needed by nonlocal operators to
/// see the rest of the line.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub far_field: Option<FarField>,
    pub boundary: Boundary,
}

impl Field {
    pub fn periodic(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if !grid.periodic {
            return Err(Error::InvalidGrid(
                "periodic field needs a periodic grid".into(),
            ));
        }
        Self::checked(Field {
            grid,
            values,
            far_field: None,
            boundary: Boundary::Periodic,
        })
    }

    pub fn decaying(grid: Grid1D, values: Vec<f64>, far_field: FarField) -> Result<Self> {
        if grid.periodic {
            return Err(Error::InvalidGrid(
                "decaying field needs a whole-line grid".into(),
            ));
        }
        if !(far_field.beta > 0.0) {
            return Err(Error::IncompleteField(
                "tail exponent beta must be positive",
            ));
        }
        Self::checked(Field {
            grid,
            values,
            far_field: Some(far_field),
            boundary: Boundary::Decaying,
        })
    }

    /// Samples `f` on a periodic grid.
    pub fn sample_periodic(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::periodic(grid, values)
    }

    /// Samples `f` on a whole-line grid and fits the far-field model with
    /// exponent `beta` against the given limits.
    pub fn sample_decaying(
        grid: Grid1D,
        f: impl Fn(f64) -> f64,
        l_minus: f64,
        l_plus: f64,
        beta: f64,
    ) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        let far = fit_far_field(&grid, &values, l_minus, l_plus, beta);
        Self::decaying(grid, values, far)
    }

    fn checked(self) -> Result<Self> {
        if self.values.len() != self.grid.n {
            return Err(Error::InvalidGrid(format!(
                "field has {} values for {} nodes",
                self.values.len(),
                self.grid.n
            )));
        }
        if let Some(j) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at node {j}")));
        }
        Ok(self)
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// Value at an arbitrary point: cubic interpolation inside the grid, the
    /// far-field model (or periodic wrap) outside.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        match self.boundary {
            Boundary::Periodic => {
                let p = g.period();
                let xr = x - g.left;
                let xr = xr - floor(xr / p) * p;
                let pos = xr / g.h();
                let n = g.n;
                let i = floor(pos) as usize % n;
                let t = pos - floor(pos);
                let at = |k: isize| self.values[(i as isize + k).rem_euclid(n as isize) as usize];
                let (p0, p1, p2, p3) = (at(-1), at(0), at(1), at(2));
                let t2 = t * t;
                0.5 * (2.0 * p1
                    + (-p0 + p2) * t
                    + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
                    + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t2 * t)
            }
            Boundary::Decaying => {
                if x < g.left || x > g.right {
                    self.far_field.map(|f| f.eval(x)).unwrap_or_else(|| {
                        if x < g.left {
                            self.values[0]
                        } else {
                            self.values[g.n - 1]
                        }
                    })
                } else {
                    crate::math::cubic_at(&self.values, g.position(x))
                }
            }
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Field {
            values,
            ..self.clone()
        }
    }

    /// Pointwise linear combination `a·self + b·other` on the same grid.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Field {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let far_field = match (self.far_field, other.far_field) {
            (Some(f), Some(g)) if fabs(f.beta - g.beta) < 1e-15 => Some(FarField {
                l_minus: a * f.l_minus + b * g.l_minus,
                l_plus: a * f.l_plus + b * g.l_plus,
                beta: f.beta,
                c_minus: a * f.c_minus + b * g.c_minus,
                c_plus: a * f.c_plus + b * g.c_plus,
            }),
            (f, _) => f,
        };
        Field {
            grid: self.grid,
            values,
            far_field,
            boundary: self.boundary,
        }
    }
}

/// Least-squares fit of `c±` in `u ≈ ℓ± ∓ c±/|x|^β` on the outermost 10% of
/// nodes on each side.
pub fn fit_far_field(
    grid: &Grid1D,
    values: &[f64],
    l_minus: f64,
    l_plus: f64,
    beta: f64,
) -> FarField {
    let n = grid.n;
    let m = (n / 10).max(2);
    let mut num_p = 0.0;
    let mut den_p = 0.0;
    let mut num_m = 0.0;
    let mut den_m = 0.0;
    for k in 0..m {
        let j = n - 1 - k;
        let x = grid.x(j);
        if x > 0.0 {
            let phi = pow(x, -beta);
            num_p += (l_plus - values[j]) * phi;
            den_p += phi * phi;
        }
        let x = grid.x(k);
        if x < 0.0 {
            let phi = pow(-x, -beta);
            num_m += (values[k] - l_minus) * phi;
            den_m += phi * phi;
        }
    }
    FarField {
        l_minus,
        l_plus,
        beta,
        c_minus: if den_m > 0.0 { num_m / den_m } else { 0.0 },
        c_plus: if den_p > 0.0 { num_p / den_p } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_bounds() {
        assert!(FractionalOrder::new(0.5).is_ok());
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(1.0).is_err());
        assert!(FractionalOrder::new(1.5).is_err());
        assert!(FractionalOrder::new(f64::NAN).is_err());
    }

    #[test]
    fn grid_spacing_conventions() {
        let g = Grid1D::symmetric(1.0, 21).unwrap();
        assert!((g.h() - 0.1).abs() < 1e-15);
        assert!((g.x(20) - 1.0).abs() < 1e-15);
        let p = Grid1D::periodic(1.0, 20).unwrap();
        assert!((p.h() - 0.1).abs() < 1e-15);
        assert!(Grid1D::symmetric(1.0, 8).is_err());
    }

    #[test]
    fn far_field_fit_recovers_coefficients() {
        let g = Grid1D::symmetric(100.0, 401).unwrap();
        let f = |x: f64| {
            if x > 0.0 {
                1.0 - 0.3 / (1.0 + x)
            } else {
                0.2 / (1.0 - x)
            }
        };
        let field = Field::sample_decaying(g, f, 0.0, 1.0, 1.0).unwrap();
        let far = field.far_field.unwrap();
        assert!((far.c_plus - 0.3).abs() < 0.01);
        assert!((far.c_minus - 0.2).abs() < 0.01);
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = Grid1D::symmetric(1.0, 16).unwrap();
        let mut v = alloc::vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(Field::decaying(g, v, FarField::constant(0.0, 0.0)).is_err());
    }
}
