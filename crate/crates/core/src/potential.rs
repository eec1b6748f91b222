//! The multiwell potential `W` and the modulation `a(x)`.

use crate::error::{Error, Result};
use crate::math::{cos, fabs, sin, PI};

/// A 1-periodic, even potential with wells at the integers.
///
/// Stored as plain function pointers so a potential is `Copy` and usable
/// from any thread.
#[derive(Debug, Clone, Copy)]
pub struct Potential {
    pub name: &'static str,
    pub value: fn(f64) -> f64,
    pub deriv: fn(f64) -> f64,
    pub deriv2: fn(f64) -> f64,
    /// `max |W'|`, the pinning threshold for a constant stress.
    pub max_slope: f64,
    /// `max |W''|`, used by explicit time-step rules.
    pub max_curvature: f64,
}

fn cosine_value(u: f64) -> f64 {
    (1.0 - cos(2.0 * PI * u)) / (4.0 * PI * PI)
}

fn cosine_deriv(u: f64) -> f64 {
    sin(2.0 * PI * u) / (2.0 * PI)
}

fn cosine_deriv2(u: f64) -> f64 {
    cos(2.0 * PI * u)
}

impl Potential {
    /// `W(u) = (1 - cos 2πu) / (4π²)`, normalized so that `W''(0) = 1`.
    pub fn standard() -> Self {
        Potential {
            name: "standard-cosine",
            value: cosine_value,
            deriv: cosine_deriv,
            deriv2: cosine_deriv2,
            max_slope: 1.0 / (2.0 * PI),
            max_curvature: 1.0,
        }
    }

    /// Registry lookup used by configuration files.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "standard-cosine" => Some(Self::standard()),
            _ => None,
        }
    }

    #[inline]
    pub fn w(&self, u: f64) -> f64 {
        (self.value)(u)
    }

    #[inline]
    pub fn dw(&self, u: f64) -> f64 {
        (self.deriv)(u)
    }

    #[inline]
    pub fn d2w(&self, u: f64) -> f64 {
        (self.deriv2)(u)
    }

    /// Sampling check of the structural hypotheses on `W`.
    pub fn validate(&self, samples: usize) -> Result<PotentialReport> {
        if samples < 8 {
            return Err(Error::InvalidInput(
                "potential validation needs at least 8 samples".into(),
            ));
        }
        let mut report = PotentialReport::default();
        for k in -2..=2 {
            report.well = report.well.max(fabs(self.w(k as f64)));
        }
        let mut min_off = f64::INFINITY;
        for i in 0..samples {
            // Off-integer samples in (-2, 2), avoiding the wells.
            let r = -2.0 + 4.0 * (i as f64 + 0.5) / samples as f64;
            let frac = r - libm::round(r);
            if fabs(frac) > 1e-3 {
                min_off = min_off.min(self.w(r));
            }
            report.periodicity = report.periodicity.max(fabs(self.w(r + 1.0) - self.w(r)));
            report.evenness = report.evenness.max(fabs(self.w(-r) - self.w(r)));
        }
        report.min_off_well = min_off;
        report.curvature_at_zero = self.d2w(0.0);
        report.passed = report.well < 1e-14
            && min_off > 0.0
            && report.periodicity < 1e-14
            && report.evenness < 1e-14
            && report.curvature_at_zero != 0.0;
        Ok(report)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PotentialReport {
    /// `max_k |W(k)|` over `k ∈ {-2..2}`.
    pub well: f64,
    /// Smallest off-well value; must be positive.
    pub min_off_well: f64,
    pub periodicity: f64,
    pub evenness: f64,
    pub curvature_at_zero: f64,
    pub passed: bool,
}

impl PotentialReport {
    pub fn max_violation(&self) -> f64 {
        self.well.max(self.periodicity).max(self.evenness)
    }
}

/// `a(x) = 1 + A cos(2πx / P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub amplitude: f64,
    /// Oscillation period; `f64::INFINITY` when the modulation is constant.
    pub period: f64,
}

impl Modulation {
    pub fn constant() -> Self {
        Modulation {
            amplitude: 0.0,
            period: f64::INFINITY,
        }
    }

    pub fn cosine(amplitude: f64, period: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::InvalidModulation { amplitude });
        }
        if !(period > 0.0) {
            return Err(Error::InvalidInput(
                "modulation period must be positive".into(),
            ));
        }
        let period = if amplitude == 0.0 {
            f64::INFINITY
        } else {
            period
        };
        Ok(Modulation { amplitude, period })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if self.amplitude == 0.0 {
            1.0
        } else {
            1.0 + self.amplitude * cos(2.0 * PI * x / self.period)
        }
    }

    pub fn a_min(&self) -> f64 {
        1.0 - self.amplitude
    }

    pub fn a_max(&self) -> f64 {
        1.0 + self.amplitude
    }

    pub fn is_constant(&self) -> bool {
        self.amplitude == 0.0
    }

    /// A minimum of `a` (at `P/2`), or `0` when `a` is constant.
    pub fn a_minimum(&self) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            0.5 * self.period
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_values() {
        let p = Potential::standard();
        assert_eq!(p.w(0.0), 0.0);
        assert!((p.w(0.5) - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!((p.dw(0.25) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(p.d2w(0.0), 1.0);
    }

    #[test]
    fn standard_passes_validation() {
        let r = Potential::standard().validate(1000).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_violation() < 1e-13);
        let p = Potential::standard();
        assert!((p.w(0.37) - p.w(-0.37)).abs() < 1e-14);
    }

    #[test]
    fn quadratic_fails_periodicity() {
        fn sq(u: f64) -> f64 {
            u * u
        }
        fn dsq(u: f64) -> f64 {
            2.0 * u
        }
        fn d2sq(_: f64) -> f64 {
            2.0
        }
        let p = Potential {
            name: "square",
            value: sq,
            deriv: dsq,
            deriv2: d2sq,
            max_slope: f64::INFINITY,
            max_curvature: 2.0,
        };
        let r = p.validate(100).unwrap();
        assert!(!r.passed);
        assert!(r.periodicity > 1.0);
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(Potential::standard().validate(4).is_err());
    }

    #[test]
    fn slope_maximum_at_quarter() {
        let p = Potential::standard();
        let mut best = (0.0, 0.0);
        for i in 0..=100_000 {
            let u = i as f64 / 100_000.0;
            if p.dw(u) > best.1 {
                best = (u, p.dw(u));
            }
        }
        assert!((best.1 - p.max_slope).abs() < 1e-10);
        assert!((best.0 - 0.25).abs() < 1e-4);
    }

    #[test]
    fn derivative_is_second_order_consistent() {
        let p = Potential::standard();
        let u = 0.31;
        let err = |h: f64| ((p.w(u + h) - p.w(u - h)) / (2.0 * h) - p.dw(u)).abs();
        let (e3, e4) = (err(1e-3), err(1e-4));
        let order = (e3 / e4).log10();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn cosine_modulation_values() {
        let a = Modulation::cosine(0.3, 10.0).unwrap();
        assert!((a.eval(5.0) - 0.7).abs() < 1e-15);
        assert!((a.eval(0.0) - 1.3).abs() < 1e-15);
        let c = Modulation::cosine(0.0, 10.0).unwrap();
        assert_eq!((c.a_min(), c.a_max()), (1.0, 1.0));
        assert!(c.eval(3.3) == 1.0);
        assert!(matches!(
            Modulation::cosine(1.0, 10.0),
            Err(Error::InvalidModulation { .. })
        ));
    }
}
