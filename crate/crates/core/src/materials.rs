//! Hygrothermal property correlations of the load-bearing material and the
//! storage/transport coefficients built from them.
//!
//! Conventions that differ from a literal reading of the correlations are
//! documented in the book chapter on materials; the short version:
//!
//! * the sorption isotherm is evaluated at the capillary potential
//!   `P_c / ρ_l = R_v T ln φ` (J/kg), which is what the fitted constants
//!   `c₁`, `c₂` were fitted against;
//! * the closed-form moisture storage coefficient uses the natural log;
//! * the coupling storage coefficient references liquid enthalpy to 0 °C.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kelvin offset of the Celsius scale.
pub const KELVIN: f64 = 273.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Dry material density, kg/m³.
    pub rho_0: f64,
    /// Dry material heat capacity, J/(kg·K).
    pub c_0: f64,
    /// Liquid water heat capacity, J/(kg·K).
    pub c_w: f64,
    /// Liquid water density, kg/m³.
    pub rho_l: f64,
    /// Water vapour gas constant, J/(kg·K).
    pub r_v: f64,
    /// Latent heat of evaporation, J/kg.
    pub l_v: f64,
    /// Stefan–Boltzmann constant, W/(m²·K⁴).
    pub sigma: f64,
}

impl PhysicalConstants {
    pub const LOAD_BEARING: PhysicalConstants = PhysicalConstants {
        rho_0: 790.0,
        c_0: 870.0,
        c_w: 4180.0,
        rho_l: 1000.0,
        r_v: 461.5,
        l_v: 2.5e6,
        sigma: 5.67e-8,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("rho_0", self.rho_0),
            ("c_0", self.c_0),
            ("c_w", self.c_w),
            ("rho_l", self.rho_l),
            ("R_v", self.r_v),
            ("L_v", self.l_v),
            ("sigma", self.sigma),
        ];
        for (name, value) in all {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Argument(format!(
                    "physical constant {name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::LOAD_BEARING
    }
}

/// Saturation vapour pressure over liquid water (Antoine form), Pa.
///
/// `P_s = 133.322368 · 10^(8.07131 − 1730.63 / (233.426 + T_C))`, valid for
/// 273 K ≤ T ≤ 373.15 K. It gives 2329.6 Pa at 20 °C and 101.34 kPa at 100 °C.
///
/// ```
/// let p = hygrosim::materials::saturation_pressure(373.15).unwrap();
/// assert!((p / 101_325.0 - 1.0).abs() < 1e-3);
/// ```
pub fn saturation_pressure(t: f64) -> Result<f64> {
    if !(273.0..=373.15).contains(&t) {
        return Err(Error::Domain(format!(
            "saturation pressure: T = {t} K outside [273, 373.15]"
        )));
    }
    Ok(antoine(t))
}

/// Same correlation without the range check.
#[inline]
pub fn saturation_pressure_unchecked(t: f64) -> f64 {
    antoine(t)
}

#[inline]
fn antoine(t: f64) -> f64 {
    133.322368 * 10f64.powf(8.07131 - 1730.63 / (233.426 + (t - KELVIN)))
}

/// Kelvin relation `P_c = ρ_l R_v T ln(P_v / P_s(T))`, Pa.
pub fn capillary_pressure(p_v: f64, t: f64) -> Result<f64> {
    capillary_pressure_with(&PhysicalConstants::LOAD_BEARING, p_v, t)
}

pub fn capillary_pressure_with(k: &PhysicalConstants, p_v: f64, t: f64) -> Result<f64> {
    if !(p_v > 0.0) {
        return Err(Error::Domain(format!(
            "capillary pressure: P_v = {p_v} Pa must be positive"
        )));
    }
    let p_s = saturation_pressure(t)?;
    Ok(k.rho_l * k.r_v * t * (p_v / p_s).ln())
}

/// Two-term sorption isotherm
/// `f = Σ a_i [1 + (−c_i s)^{n_i}]^{−m_i}` with `s ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SorptionCurve {
    pub terms: [SorptionTerm; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SorptionTerm {
    pub amplitude: f64,
    pub c: f64,
    pub n: f64,
    pub m: f64,
}

impl SorptionCurve {
    pub const LOAD_BEARING: SorptionCurve = SorptionCurve {
        terms: [
            SorptionTerm {
                amplitude: 47.1,
                c: 1.25e-5,
                n: 1.65,
                m: 0.39,
            },
            SorptionTerm {
                amplitude: 109.9,
                c: 1.8e-5,
                n: 6.0,
                m: 0.83,
            },
        ],
    };

    /// Content at zero suction (sum of the plateau amplitudes), kg/m³.
    pub fn saturation_content(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude).sum()
    }

    /// Moisture content ρ_w, kg/m³.
    pub fn evaluate(&self, p_c: f64) -> Result<f64> {
        if p_c > 0.0 || p_c.is_nan() {
            return Err(Error::Domain(format!(
                "sorption isotherm: argument {p_c} must be ≤ 0"
            )));
        }
        Ok(self.eval_unchecked(p_c))
    }

    /// dρ_w/dP_c.
    pub fn derivative(&self, p_c: f64) -> Result<f64> {
        if p_c > 0.0 || p_c.is_nan() {
            return Err(Error::Domain(format!(
                "sorption isotherm: argument {p_c} must be ≤ 0"
            )));
        }
        Ok(self.derivative_unchecked(p_c))
    }

    #[inline]
    fn eval_unchecked(&self, p_c: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let a = -t.c * p_c;
                if a.is_infinite() {
                    return 0.0;
                }
                t.amplitude * (1.0 + a.powf(t.n)).powf(-t.m)
            })
            .sum()
    }

    #[inline]
    fn derivative_unchecked(&self, p_c: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let a = -t.c * p_c;
                if a == 0.0 {
                    return 0.0;
                }
                // d/dP_c of amp·(1 + a^n)^(−m), with da/dP_c = −c.
                t.amplitude
                    * (-t.m)
                    * (1.0 + a.powf(t.n)).powf(-t.m - 1.0)
                    * t.n
                    * a.powf(t.n - 1.0)
                    * (-t.c)
            })
            .sum()
    }
}

/// Sorption content of the load-bearing material at capillary pressure `p_c`.
pub fn sorption_content(p_c: f64) -> Result<f64> {
    SorptionCurve::LOAD_BEARING.evaluate(p_c)
}

/// Storage and transport coefficients of the coupled wall equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSet {
    /// Moisture storage, s²/m².
    #[serde(rename = "c_M")]
    pub c_m: f64,
    /// Moisture transport, s.
    #[serde(rename = "k_M")]
    pub k_m: f64,
    /// Heat storage, W·s/(m³·K).
    #[serde(rename = "c_TT")]
    pub c_tt: f64,
    /// Thermal conductivity, W/(m·K).
    #[serde(rename = "k_TT")]
    pub k_tt: f64,
    /// Heat storage due to moisture, W·s³/(kg·m²).
    #[serde(rename = "c_TM")]
    pub c_tm: f64,
    /// Heat transport due to vapour diffusion, m²/s.
    #[serde(rename = "k_TM")]
    pub k_tm: f64,
}

impl CoefficientSet {
    pub const ONES: CoefficientSet = CoefficientSet {
        c_m: 1.0,
        k_m: 1.0,
        c_tt: 1.0,
        k_tt: 1.0,
        c_tm: 1.0,
        k_tm: 1.0,
    };

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.c_m, self.k_m, self.c_tt, self.k_tt, self.c_tm, self.k_tm,
        ]
    }

    pub fn all_positive(&self) -> bool {
        self.as_array().iter().all(|v| *v > 0.0 && v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if self.all_positive() {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "coefficient set must be positive and finite: {self:?}"
            )))
        }
    }

    /// Entry-wise ratio, used to normalise against a reference set.
    pub fn ratio(&self, reference: &CoefficientSet) -> CoefficientSet {
        CoefficientSet {
            c_m: self.c_m / reference.c_m,
            k_m: self.k_m / reference.k_m,
            c_tt: self.c_tt / reference.c_tt,
            k_tt: self.k_tt / reference.k_tt,
            c_tm: self.c_tm / reference.c_tm,
            k_tm: self.k_tm / reference.k_tm,
        }
    }
}

/// State box on which the correlations are trusted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleBox {
    pub t_min: f64,
    pub t_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl AdmissibleBox {
    /// 1 °C to 40 °C. The lower end sits above 0 °C because c_TM is referenced
    /// to the liquid enthalpy at 0 °C and vanishes there.
    pub const DEFAULT: AdmissibleBox = AdmissibleBox {
        t_min: 274.15,
        t_max: 313.15,
        phi_min: 0.01,
        phi_max: 0.99,
    };

    /// Membership with a relative slack of 1e-12, so that a state built as
    /// `φ·P_s(T)` on the edge of the box is still inside it.
    pub fn contains(&self, t: f64, phi: f64) -> bool {
        const SLACK: f64 = 1e-12;
        t >= self.t_min * (1.0 - SLACK)
            && t <= self.t_max * (1.0 + SLACK)
            && phi >= self.phi_min * (1.0 - SLACK)
            && phi <= self.phi_max * (1.0 + SLACK)
    }

    pub fn clamp(&self, t: f64, phi: f64) -> (f64, f64) {
        (
            t.clamp(self.t_min, self.t_max),
            phi.clamp(self.phi_min, self.phi_max),
        )
    }
}

/// The load-bearing material of the nonlinear cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialModel {
    pub constants: PhysicalConstants,
    pub sorption: SorptionCurve,
    pub admissible: AdmissibleBox,
}

impl Default for MaterialModel {
    fn default() -> Self {
        Self::load_bearing()
    }
}

impl MaterialModel {
    pub fn load_bearing() -> Self {
        MaterialModel {
            constants: PhysicalConstants::LOAD_BEARING,
            sorption: SorptionCurve::LOAD_BEARING,
            admissible: AdmissibleBox::DEFAULT,
        }
    }

    /// Moisture content at relative humidity `phi` and temperature `t`.
    ///
    /// The isotherm is fed the capillary potential `P_c/ρ_l`.
    pub fn moisture_content(&self, t: f64, phi: f64) -> f64 {
        let psi = self.constants.r_v * t * phi.ln();
        self.sorption.eval_unchecked(psi)
    }

    /// Vapour permeability δ_v(T, f), s.
    pub fn delta_v(&self, t: f64, f: f64) -> f64 {
        let w = 1.0 - f / self.sorption.saturation_content();
        1.88e-6 / t * w / (0.503 * w * w + 0.497)
    }

    /// Thermal conductivity λ(f), W/(m·K).
    pub fn lambda(&self, f: f64) -> f64 {
        0.2 + 0.0045 * f
    }

    /// Closed-form moisture transport coefficient k_M(φ), s.
    pub fn k_m_corr(&self, p_v: f64, p_s: f64) -> f64 {
        let x = 2.0 * p_v / p_s;
        1.97e-10 * 10f64.powf(1.44 - 0.07 * x.log10()) + 1.77e-7 * (-8.0 * (x - 2.0).powi(2)).exp()
    }

    /// Closed-form moisture storage coefficient c_M, s²/m².
    pub fn c_m_corr(&self, t: f64, p_v: f64, p_s: f64) -> f64 {
        let [s1, s2] = self.sorption.terms;
        let rvt = self.constants.r_v * t;
        let ln_phi = (p_v / p_s).ln();
        let a = -s1.c * rvt * ln_phi;
        let b = -s2.c * rvt * ln_phi;
        -30.62 * (-s1.c * rvt / p_v) * a.powf(0.65) * (1.0 + a.powf(1.65)).powf(-1.39)
            - 549.5 * (-s2.c * rvt / p_v) * b.powi(5) * (1.0 + b.powi(6)).powf(-1.83)
    }

    /// All six coefficients at temperature `t` (K) and vapour pressure `p_v` (Pa).
    pub fn evaluate_coefficients(&self, t: f64, p_v: f64) -> Result<CoefficientSet> {
        if !(t.is_finite() && p_v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite state T = {t}, P_v = {p_v}"
            )));
        }
        let p_s = saturation_pressure(t)?;
        let phi = p_v / p_s;
        if !self.admissible.contains(t, phi) {
            return Err(Error::Domain(format!(
                "state T = {t:.3} K, φ = {phi:.4} outside the admissible box"
            )));
        }
        Ok(self.coefficients_at(t, p_v, p_s))
    }

    /// Coefficients at the nearest admissible state; never fails for finite input.
    pub fn evaluate_clamped(&self, t: f64, p_v: f64) -> CoefficientSet {
        let t0 = if t.is_finite() {
            t
        } else {
            self.admissible.t_max
        };
        let tc = t0.clamp(self.admissible.t_min, self.admissible.t_max);
        let p_s = antoine(tc);
        let phi = if p_v.is_finite() {
            p_v / p_s
        } else {
            self.admissible.phi_max
        };
        let phi = phi.clamp(self.admissible.phi_min, self.admissible.phi_max);
        self.coefficients_at(tc, phi * p_s, p_s)
    }

    fn coefficients_at(&self, t: f64, p_v: f64, p_s: f64) -> CoefficientSet {
        let k = &self.constants;
        let f = self.moisture_content(t, p_v / p_s);
        let delta = self.delta_v(t, f);
        let c_m = self.c_m_corr(t, p_v, p_s);
        CoefficientSet {
            c_m,
            k_m: self.k_m_corr(p_v, p_s),
            c_tt: k.rho_0 * k.c_0 + f * k.c_w,
            k_tt: self.lambda(f),
            c_tm: k.c_w * (t - KELVIN) * c_m,
            k_tm: k.l_v * delta,
        }
    }

    /// Frozen coefficients at (T, φ), used for the linear wall models.
    pub fn linearize(&self, t: f64, phi: f64) -> Result<CoefficientSet> {
        let p_s = saturation_pressure(t)?;
        self.evaluate_coefficients(t, phi * p_s)
    }
}

/// Coefficients of the built-in load-bearing material.
pub fn evaluate_coefficients(t: f64, p_v: f64) -> Result<CoefficientSet> {
    MaterialModel::load_bearing().evaluate_coefficients(t, p_v)
}

/// Frozen coefficients of the built-in load-bearing material.
pub fn linearize(t: f64, phi: f64) -> Result<CoefficientSet> {
    MaterialModel::load_bearing().linearize(t, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // High-precision evaluations of the same formulas (30 significant digits).
    const P_S_293: f64 = 2329.5753445794184;
    const P_S_373: f64 = 101336.51462159073;
    const F_AT_MINUS_9_38E7: f64 = 0.49893655691973423;

    #[test]
    fn saturation_pressure_anchors() {
        assert_relative_eq!(
            saturation_pressure(293.15).unwrap(),
            P_S_293,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            saturation_pressure(373.15).unwrap(),
            P_S_373,
            max_relative = 1e-12
        );
        // steam-table values 2339 Pa and 101325 Pa
        assert!((saturation_pressure(293.15).unwrap() / 2339.0 - 1.0).abs() < 0.01);
        assert!((saturation_pressure(373.15).unwrap() / 101_325.0 - 1.0).abs() < 1e-3);
        assert!(saturation_pressure(303.15).unwrap() > saturation_pressure(293.15).unwrap());
        assert!(saturation_pressure(250.0).is_err());
        assert!(saturation_pressure(400.0).is_err());
    }

    #[test]
    fn kelvin_relation() {
        let t = 293.15;
        let p_s = saturation_pressure(t).unwrap();
        assert_eq!(capillary_pressure(p_s, t).unwrap(), 0.0);
        let full = capillary_pressure(0.8 * p_s, t).unwrap();
        let half = capillary_pressure(0.4 * p_s, t).unwrap();
        assert_relative_eq!(
            half - full,
            1000.0 * 461.5 * t * 0.5f64.ln(),
            max_relative = 1e-10
        );
        let pc = capillary_pressure(0.5 * p_s, t).unwrap();
        assert_relative_eq!(pc, -9.38e7, max_relative = 1e-3);
        assert!(capillary_pressure(0.0, t).is_err());
        assert!(capillary_pressure(-1.0, t).is_err());
    }

    #[test]
    fn sorption_values() {
        assert_eq!(sorption_content(0.0).unwrap(), 157.0);
        assert!(sorption_content(-1e30).unwrap() < 1e-6);
        assert_relative_eq!(
            sorption_content(-9.38e7).unwrap(),
            F_AT_MINUS_9_38E7,
            max_relative = 1e-12
        );
        assert!(sorption_content(1.0).is_err());
    }

    #[test]
    fn sorption_derivative_matches_finite_differences() {
        let curve = SorptionCurve::LOAD_BEARING;
        for i in 0..20 {
            let pc = -(10f64.powf(2.0 + 5.0 * i as f64 / 19.0));
            let h = 1e-5 * pc.abs();
            let fd =
                (curve.evaluate(pc + h).unwrap() - curve.evaluate(pc - h).unwrap()) / (2.0 * h);
            let d = curve.derivative(pc).unwrap();
            assert!(((d - fd) / d).abs() < 1e-4, "pc = {pc}: {d} vs {fd}");
        }
    }

    #[test]
    fn sorption_monotone_in_suction() {
        let curve = SorptionCurve::LOAD_BEARING;
        let mut last = curve.evaluate(0.0).unwrap();
        for i in 1..200 {
            let pc = -(10f64.powf(i as f64 * 0.05));
            let now = curve.evaluate(pc).unwrap();
            assert!(now <= last);
            last = now;
        }
    }

    #[test]
    fn permeability_vanishes_at_saturation() {
        let m = MaterialModel::load_bearing();
        assert_eq!(m.delta_v(293.15, 157.0), 0.0);
        assert_relative_eq!(m.lambda(157.0), 0.90650, max_relative = 1e-12);
    }

    fn check_column(set: CoefficientSet, expected: [f64; 6], tol: f64) {
        for (got, want) in set.as_array().iter().zip(expected) {
            assert!((got / want - 1.0).abs() < tol, "{got} vs {want} ({set:?})");
        }
    }

    #[test]
    fn reproduces_published_wall_columns() {
        // Columns in order c_M, k_M, c_TT, k_TT, c_TM, k_TM. They are met at
        // 20 °C (and φ = 0.75 for the wet column); see the book's material notes.
        let east_west = [6.09e-2, 5.47e-9, 8.61e5, 3.87e-1, 5.09e3, 1.53e-2];
        let north = [1.82e-2, 5.89e-9, 7.7e5, 0.294, 1.52e3, 1.59e-2];
        let south = [1.18e-1, 2.92e-8, 1.28e6, 0.841, 9.88e3, 2.96e-3];
        check_column(linearize(293.15, 0.5).unwrap(), east_west, 0.05);
        check_column(linearize(293.15, 0.15).unwrap(), north, 0.05);
        check_column(linearize(293.15, 0.75).unwrap(), south, 0.05);
    }

    #[test]
    fn coefficients_match_high_precision_oracle() {
        let m = MaterialModel::load_bearing();
        let c = m.linearize(293.15, 0.5).unwrap();
        let oracle = [
            0.061942132661713789,
            5.4852074307149325e-9,
            862289.26175329745,
            0.38838556887316711,
            5178.3622905192669,
            0.015319102202428568,
        ];
        for (got, want) in c.as_array().iter().zip(oracle) {
            assert_relative_eq!(*got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn positive_on_admissible_grid() {
        let m = MaterialModel::load_bearing();
        let b = m.admissible;
        for i in 0..10 {
            for j in 0..10 {
                let t = b.t_min + (b.t_max - b.t_min) * i as f64 / 9.0;
                let phi = b.phi_min + (b.phi_max - b.phi_min) * j as f64 / 9.0;
                let c = m.linearize(t, phi).unwrap();
                assert!(c.all_positive(), "T = {t}, φ = {phi}: {c:?}");
            }
        }
    }

    #[test]
    fn outside_box_is_a_domain_error() {
        let m = MaterialModel::load_bearing();
        assert!(matches!(m.linearize(293.15, 0.995), Err(Error::Domain(_))));
        assert!(matches!(m.linearize(320.0, 0.5), Err(Error::Domain(_))));
        assert!(m.evaluate_clamped(400.0, 1e9).all_positive());
    }

    #[test]
    fn deterministic() {
        let a = linearize(296.15, 0.5).unwrap();
        let b = linearize(296.15, 0.5).unwrap();
        assert_eq!(
            a.as_array().map(f64::to_bits),
            b.as_array().map(f64::to_bits)
        );
    }
}
