//! Analytic forcing signals of dimensionless time.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A total function of `t*`.
///
/// ```
/// use hygrosim::signal::Signal;
/// // 1 − 0.02 sin²(2πt/24)
/// let u_inf = Signal::Sinusoid { mean: 1.0, amplitude: -0.02, period: 24.0, phase: 0.0, power: 2 };
/// assert!((u_inf.at(6.0) - 0.98).abs() < 1e-12);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    Constant {
        value: f64,
    },
    /// `mean + amplitude · sin(2π t/period + phase)^power`
    Sinusoid {
        mean: f64,
        amplitude: f64,
        period: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default = "one")]
        power: i32,
    },
    /// `base` plus `value` on every window `start ≤ t < end`, optionally
    /// repeated with `period`.
    Schedule {
        #[serde(default)]
        base: f64,
        #[serde(default)]
        period: Option<f64>,
        #[serde(default)]
        pulses: Vec<Pulse>,
    },
    Sum {
        terms: Vec<Signal>,
    },
    Scaled {
        factor: f64,
        signal: Box<Signal>,
    },
}

fn one() -> i32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Default for Signal {
    fn default() -> Self {
        Signal::Constant { value: 0.0 }
    }
}

impl Signal {
    pub fn constant(value: f64) -> Self {
        Signal::Constant { value }
    }

    pub fn zero() -> Self {
        Signal::Constant { value: 0.0 }
    }

    pub fn scaled(self, factor: f64) -> Self {
        match self {
            Signal::Constant { value } => Signal::Constant {
                value: value * factor,
            },
            other => Signal::Scaled {
                factor,
                signal: Box::new(other),
            },
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Signal::Constant { value } => *value,
            Signal::Sinusoid {
                mean,
                amplitude,
                period,
                phase,
                power,
            } => mean + amplitude * (2.0 * PI * t / period + phase).sin().powi(*power),
            Signal::Schedule {
                base,
                period,
                pulses,
            } => {
                let tau = match period {
                    Some(p) => t.rem_euclid(*p),
                    None => t,
                };
                base + pulses
                    .iter()
                    .filter(|w| w.start <= tau && tau < w.end)
                    .map(|w| w.value)
                    .sum::<f64>()
            }
            Signal::Sum { terms } => terms.iter().map(|s| s.at(t)).sum(),
            Signal::Scaled { factor, signal } => factor * signal.at(t),
        }
    }

    /// Lower and upper bounds of the signal over all time.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Signal::Constant { value } => (*value, *value),
            Signal::Sinusoid {
                mean,
                amplitude,
                power,
                ..
            } => {
                let (lo, hi) = if power % 2 == 0 {
                    (0.0, 1.0)
                } else {
                    (-1.0, 1.0)
                };
                let a = mean + amplitude * lo;
                let b = mean + amplitude * hi;
                (a.min(b), a.max(b))
            }
            Signal::Schedule { base, pulses, .. } => {
                // Breakpoints are enough: the schedule is piecewise constant.
                let mut lo = *base;
                let mut hi = *base;
                for p in pulses {
                    for t in [p.start, p.end] {
                        for probe in [t - 1e-9, t] {
                            let v = self.at(probe);
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                }
                (lo, hi)
            }
            Signal::Sum { terms } => terms.iter().fold((0.0, 0.0), |(lo, hi), s| {
                let (a, b) = s.range();
                (lo + a, hi + b)
            }),
            Signal::Scaled { factor, signal } => {
                let (a, b) = signal.range();
                let (a, b) = (a * factor, b * factor);
                (a.min(b), a.max(b))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Signal::Constant { value } => finite(*value),
            Signal::Sinusoid {
                mean,
                amplitude,
                period,
                phase,
                power,
            } => {
                finite(*mean)?;
                finite(*amplitude)?;
                finite(*phase)?;
                if !(*period > 0.0) {
                    return Err(Error::Config(format!(
                        "sinusoid period must be positive, got {period}"
                    )));
                }
                if *power < 1 {
                    return Err(Error::Config(format!(
                        "sinusoid power must be ≥ 1, got {power}"
                    )));
                }
                Ok(())
            }
            Signal::Schedule {
                base,
                period,
                pulses,
            } => {
                finite(*base)?;
                if let Some(p) = period {
                    if !(*p > 0.0) {
                        return Err(Error::Config(format!(
                            "schedule period must be positive, got {p}"
                        )));
                    }
                }
                for p in pulses {
                    finite(p.value)?;
                    if !(p.end > p.start) {
                        return Err(Error::Config(format!(
                            "pulse window [{}, {}) is empty",
                            p.start, p.end
                        )));
                    }
                }
                Ok(())
            }
            Signal::Sum { terms } => terms.iter().try_for_each(Signal::validate),
            Signal::Scaled { factor, signal } => {
                finite(*factor)?;
                signal.validate()
            }
        }
    }
}

fn finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "signal parameter must be finite, got {v}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn daily_schedule_repeats() {
        let s = Signal::Schedule {
            base: 6.25e-2,
            period: Some(24.0),
            pulses: vec![Pulse {
                start: 6.0,
                end: 9.0,
                value: 1.0,
            }],
        };
        assert_eq!(s.at(7.0), 1.0625);
        assert_eq!(s.at(31.0), 1.0625);
        assert_eq!(s.at(9.0), 6.25e-2);
        assert_eq!(s.at(5.999), 6.25e-2);
        assert_eq!(s.range(), (6.25e-2, 1.0625));
    }

    #[test]
    fn sinusoid_range() {
        let v = Signal::Sinusoid {
            mean: 1.0,
            amplitude: 0.06,
            period: 24.0,
            phase: 0.0,
            power: 1,
        };
        assert_eq!(v.range(), (0.94, 1.06));
        let u = Signal::Sinusoid {
            mean: 1.0,
            amplitude: -0.02,
            period: 24.0,
            phase: 0.0,
            power: 2,
        };
        assert_eq!(u.range(), (0.98, 1.0));
    }

    #[test]
    fn scaling_is_linear() {
        let s = Signal::Sinusoid {
            mean: 0.5,
            amplitude: 0.25,
            period: 10.0,
            phase: 0.3,
            power: 1,
        };
        let k = s.clone().scaled(3.0);
        for i in 0..50 {
            let t = i as f64 * 0.37;
            assert!((k.at(t) - 3.0 * s.at(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn parses_from_toml() {
        #[derive(Deserialize)]
        struct W {
            s: Signal,
        }
        let w: W = toml::from_str(
            r#"s = { kind = "sinusoid", mean = 1.0, amplitude = -0.02, period = 24.0, power = 2 }"#,
        )
        .unwrap();
        assert!((w.s.at(6.0) - 0.98).abs() < 1e-12);
        assert!(toml::from_str::<W>(r#"s = { kind = "sawtooth" }"#).is_err());
    }
}
