use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

/// Quintic smoothstep on [0, tau] with its first two derivatives.
fn ramp(t: f64, tau: f64) -> [f64; 3] {
    if tau <= 0.0 || t >= tau {
        return [1.0, 0.0, 0.0];
    }
    if t <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    let x = t / tau;
    [
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x),
        30.0 * x * x * (1.0 - x) * (1.0 - x) / tau,
        60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (tau * tau),
    ]
}

fn product(f: [f64; 3], g: [f64; 3]) -> [f64; 3] {
    [
        f[0] * g[0],
        f[1] * g[0] + f[0] * g[1],
        f[2] * g[0] + 2.0 * f[1] * g[1] + f[0] * g[2],
    ]
}

/// Time factor `s(t)` of the Neumann data. All variants vanish with their
/// first derivative at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimeSignal {
    Zero,
    RampedSine {
        amplitude: f64,
        frequency: f64,
        ramp_time: f64,
    },
    GaussianPulse {
        amplitude: f64,
        center: f64,
        width: f64,
        ramp_time: f64,
    },
    /// `sin^3(pi t / duration)` on [0, duration], zero afterwards.
    Burst {
        amplitude: f64,
        duration: f64,
    },
}

impl TimeSignal {
    /// `[s, s', s'']` at time `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        match *self {
            TimeSignal::Zero => [0.0; 3],
            TimeSignal::RampedSine {
                amplitude,
                frequency,
                ramp_time,
            } => {
                let w = 2.0 * PI * frequency;
                let (s, c) = (w * t).sin_cos();
                let p = product(ramp(t, ramp_time), [s, w * c, -w * w * s]);
                p.map(|v| amplitude * v)
            }
            TimeSignal::GaussianPulse {
                amplitude,
                center,
                width,
                ramp_time,
            } => {
                let z = (t - center) / width;
                let e = (-0.5 * z * z).exp();
                let g = [e, -z / width * e, (z * z - 1.0) / (width * width) * e];
                product(ramp(t, ramp_time), g).map(|v| amplitude * v)
            }
            TimeSignal::Burst { amplitude, duration } => {
                if t <= 0.0 || t >= duration {
                    return [0.0; 3];
                }
                let u = PI / duration;
                let (s, c) = (u * t).sin_cos();
                [
                    amplitude * s * s * s,
                    amplitude * 3.0 * s * s * c * u,
                    amplitude * (6.0 * s * c * c - 3.0 * s * s * s) * u * u,
                ]
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t)[0]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        match &mut out {
            TimeSignal::Zero => {}
            TimeSignal::RampedSine { amplitude, .. }
            | TimeSignal::GaussianPulse { amplitude, .. }
            | TimeSignal::Burst { amplitude, .. } => *amplitude *= factor,
        }
        out
    }
}

/// Spatial factor `G(x)` of the Neumann data, defined on the whole plane so
/// that it can be composed with a domain map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpatialProfile {
    Constant {
        value: f64,
    },
    /// `exp(-|x - center|^2 / (2 width^2))`
    Gaussian {
        center: [f64; 2],
        width: f64,
    },
}

impl SpatialProfile {
    pub fn value(&self, x: Vec2) -> f64 {
        match *self {
            SpatialProfile::Constant { value } => value,
            SpatialProfile::Gaussian { center, width } => {
                let d = x - Vec2::new(center[0], center[1]);
                (-0.5 * d.norm_squared() / (width * width)).exp()
            }
        }
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        match *self {
            SpatialProfile::Constant { .. } => Vec2::zeros(),
            SpatialProfile::Gaussian { center, width } => {
                let d = x - Vec2::new(center[0], center[1]);
                -d * (self.value(x) / (width * width))
            }
        }
    }
}

/// `g(x, t) = G(x) s(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryExcitation {
    pub profile: SpatialProfile,
    pub signal: TimeSignal,
}

impl BoundaryExcitation {
    pub fn none() -> Self {
        Self {
            profile: SpatialProfile::Constant { value: 0.0 },
            signal: TimeSignal::Zero,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            profile: self.profile,
            signal: self.signal.scaled(factor),
        }
    }

    /// Rest initial data need `s(0) = s'(0) = 0`.
    pub fn check_rest_compatible(&self) -> Result<()> {
        let [s, ds, _] = self.signal.eval(0.0);
        if s.abs() > 1e-14 || ds.abs() > 1e-14 {
            return Err(Error::InvalidInput(format!(
                "excitation incompatible with rest initial data: s(0)={s:e}, s'(0)={ds:e}"
            )));
        }
        Ok(())
    }

    /// `c^2 s(t) + b s'(t)`, the time factor of the mapped Neumann load.
    pub fn load_factor(&self, c: f64, b: f64, t: f64) -> f64 {
        let [s, ds, _] = self.signal.eval(t);
        c * c * s + b * ds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn check_derivatives(sig: TimeSignal, times: &[f64]) {
        let eps = 1e-6;
        for &t in times {
            let [_, d1, d2] = sig.eval(t);
            let [p, pd, _] = sig.eval(t + eps);
            let [m, md, _] = sig.eval(t - eps);
            assert_abs_diff_eq!(d1, (p - m) / (2.0 * eps), epsilon = 1e-5 * (1.0 + d1.abs()));
            assert_abs_diff_eq!(d2, (pd - md) / (2.0 * eps), epsilon = 1e-4 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn signals_start_at_rest_and_have_consistent_derivatives() {
        let sigs = [
            TimeSignal::RampedSine {
                amplitude: 0.3,
                frequency: 2.0,
                ramp_time: 0.4,
            },
            TimeSignal::GaussianPulse {
                amplitude: 1.0,
                center: 0.5,
                width: 0.1,
                ramp_time: 0.2,
            },
            TimeSignal::Burst {
                amplitude: 2.0,
                duration: 0.7,
            },
        ];
        for s in sigs {
            let [v, d, _] = s.eval(0.0);
            assert_eq!((v, d), (0.0, 0.0));
            check_derivatives(s, &[0.05, 0.13, 0.33, 0.5, 0.61]);
        }
    }

    #[test]
    fn gaussian_profile_gradient() {
        let p = SpatialProfile::Gaussian {
            center: [1.0, 0.0],
            width: 0.3,
        };
        let x = Vec2::new(0.8, 0.3);
        let eps = 1e-6;
        let fd = Vec2::new(
            (p.value(x + Vec2::new(eps, 0.0)) - p.value(x - Vec2::new(eps, 0.0))) / (2.0 * eps),
            (p.value(x + Vec2::new(0.0, eps)) - p.value(x - Vec2::new(0.0, eps))) / (2.0 * eps),
        );
        assert!((p.gradient(x) - fd).norm() < 1e-8);
    }
}
