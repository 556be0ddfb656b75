//! Dimensionless groups of the wall and zone equations.
//!
//! Wall: `u = T/T_i`, `v = P_v/P_vi`, `x* = x/L`, `t* = t/t_0` and
//! `Fo_X = t_0 k_X,0 / (L² c_X,0)`, `γ = c_TM,0 P_vi / (c_TT,0 T_i)`,
//! `Bi_M = h_M L / k_M,0`, `Bi_TT = h_T L / k_TT,0`,
//! `Bi_TM = L_v h_M L P_vi / (k_TT,0 T_i)`.
//!
//! Zone: the air's heat capacity is `κ_TT,0 = ρ_a V c_pa` and its vapour
//! storage, with the humidity ratio written `w ≈ P_v/P_v°`, is
//! `κ_M = ρ_a V / P_v°`. This pairing is the one that makes the starred
//! source terms, the θ weights and the published one-zone values agree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{
    saturation_pressure, saturation_pressure_unchecked, CoefficientSet, MaterialModel,
    PhysicalConstants,
};
use crate::signal::Signal;

/// Reference vapour pressure scale of the humidity ratio, `w ≈ P_v / P_v°`, Pa.
pub const P_V_DEGREE: f64 = 1.61e5;

/// Global reference state: temperature, vapour pressure and time scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    /// K
    pub t_i: f64,
    /// Pa
    pub p_vi: f64,
    /// s
    pub t_0: f64,
}

impl Reference {
    pub fn new(t_i: f64, p_vi: f64, t_0: f64) -> Result<Self> {
        for (name, v) in [("T_i", t_i), ("P_vi", p_vi), ("t_0", t_0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::DegenerateScaling(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Reference { t_i, p_vi, t_0 })
    }

    /// Reference at temperature `t_i` and relative humidity `phi_i`.
    pub fn from_humidity(t_i: f64, phi_i: f64, t_0: f64) -> Result<Self> {
        if !(phi_i > 0.0 && phi_i <= 1.0) {
            return Err(Error::DegenerateScaling(format!(
                "reference humidity must lie in (0, 1], got {phi_i}"
            )));
        }
        Reference::new(t_i, phi_i * saturation_pressure(t_i)?, t_0)
    }

    pub fn phi_i(&self) -> f64 {
        self.p_vi / saturation_pressure_unchecked(self.t_i)
    }
}

/// Scaling of one wall: global reference plus its thickness and reference coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingContext {
    pub t_i: f64,
    pub p_vi: f64,
    pub length: f64,
    pub t_0: f64,
    pub ref_coeffs: CoefficientSet,
}

impl ScalingContext {
    pub fn new(reference: Reference, length: f64, ref_coeffs: CoefficientSet) -> Result<Self> {
        let r = Reference::new(reference.t_i, reference.p_vi, reference.t_0)?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::DegenerateScaling(format!(
                "wall thickness must be positive, got {length}"
            )));
        }
        if !ref_coeffs.all_positive() {
            return Err(Error::DegenerateScaling(format!(
                "reference coefficients must be positive: {ref_coeffs:?}"
            )));
        }
        Ok(ScalingContext {
            t_i: r.t_i,
            p_vi: r.p_vi,
            length,
            t_0: r.t_0,
            ref_coeffs,
        })
    }

    /// Context whose reference coefficients are the wall's own at `(T_i, P_vi)`.
    pub fn for_wall(
        reference: Reference,
        length: f64,
        coefficients: &WallCoefficients,
    ) -> Result<Self> {
        let refs = match coefficients {
            WallCoefficients::Frozen(set) => *set,
            WallCoefficients::Material(model) => {
                model.evaluate_coefficients(reference.t_i, reference.p_vi)?
            }
        };
        ScalingContext::new(reference, length, refs)
    }

    pub fn reference(&self) -> Reference {
        Reference {
            t_i: self.t_i,
            p_vi: self.p_vi,
            t_0: self.t_0,
        }
    }
}

/// Dimensional coefficients of a wall: frozen, or the full nonlinear material.
#[derive(Debug, Clone, PartialEq)]
pub enum WallCoefficients {
    Frozen(CoefficientSet),
    Material(MaterialModel),
}

/// Convective transfer coefficients of one face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convective {
    /// W/(m²·K)
    pub h_t: f64,
    /// s/m
    pub h_m: f64,
}

/// Biot numbers of one face.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Biot {
    pub m: f64,
    pub tt: f64,
    pub tm: f64,
}

/// Normalised coefficient functions `c*(u, v) = c(T_i u, P_vi v) / c_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizedCoefficients {
    /// Frozen coefficients: every starred function is identically 1.
    Unit,
    Material {
        model: MaterialModel,
        t_i: f64,
        p_vi: f64,
        reference: CoefficientSet,
    },
}

impl NormalizedCoefficients {
    pub fn is_constant(&self) -> bool {
        matches!(self, NormalizedCoefficients::Unit)
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> Result<CoefficientSet> {
        match self {
            NormalizedCoefficients::Unit => Ok(CoefficientSet::ONES),
            NormalizedCoefficients::Material {
                model,
                t_i,
                p_vi,
                reference,
            } => Ok(model
                .evaluate_coefficients(u * t_i, v * p_vi)?
                .ratio(reference)),
        }
    }

    /// Evaluation at the nearest admissible state; used where divergence
    /// must stay observable instead of being trapped.
    #[inline]
    pub fn eval_clamped(&self, u: f64, v: f64) -> CoefficientSet {
        match self {
            NormalizedCoefficients::Unit => CoefficientSet::ONES,
            NormalizedCoefficients::Material {
                model,
                t_i,
                p_vi,
                reference,
            } => model.evaluate_clamped(u * t_i, v * p_vi).ratio(reference),
        }
    }
}

/// Dimensionless wall problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct WallDimensionless {
    pub fo_m: f64,
    pub fo_tt: f64,
    pub fo_tm: f64,
    pub gamma: f64,
    /// Biot numbers at x* = 0 and x* = 1.
    pub biot: [Biot; 2],
    pub coefficients: NormalizedCoefficients,
    /// Multiplies a dimensional vapour flux (kg/(m²·s)) into g*.
    pub g_scale: f64,
    /// Multiplies a dimensional heat flux (W/m²) into q*.
    pub q_scale: f64,
}

impl WallDimensionless {
    /// Linear problem with the given groups and unit coefficient functions.
    pub fn linear(fo_m: f64, fo_tt: f64, fo_tm: f64, gamma: f64, biot: [Biot; 2]) -> Self {
        WallDimensionless {
            fo_m,
            fo_tt,
            fo_tm,
            gamma,
            biot,
            coefficients: NormalizedCoefficients::Unit,
            g_scale: 1.0,
            q_scale: 1.0,
        }
    }
}

pub fn biot_numbers(h: Convective, ctx: &ScalingContext, constants: &PhysicalConstants) -> Biot {
    let r = &ctx.ref_coeffs;
    Biot {
        m: h.h_m * ctx.length / r.k_m,
        tt: h.h_t * ctx.length / r.k_tt,
        tm: constants.l_v * h.h_m * ctx.length * ctx.p_vi / (r.k_tt * ctx.t_i),
    }
}

pub fn scale_wall(
    coefficients: &WallCoefficients,
    faces: [Convective; 2],
    ctx: &ScalingContext,
    constants: &PhysicalConstants,
) -> Result<WallDimensionless> {
    let r = &ctx.ref_coeffs;
    if !r.all_positive() {
        return Err(Error::DegenerateScaling(format!(
            "reference coefficients must be positive: {r:?}"
        )));
    }
    for h in &faces {
        if !(h.h_t >= 0.0 && h.h_m >= 0.0) {
            return Err(Error::Argument(format!(
                "convective coefficients must be non-negative: {h:?}"
            )));
        }
    }
    let l2 = ctx.length * ctx.length;
    let normalized = match coefficients {
        WallCoefficients::Frozen(_) => NormalizedCoefficients::Unit,
        WallCoefficients::Material(model) => NormalizedCoefficients::Material {
            model: *model,
            t_i: ctx.t_i,
            p_vi: ctx.p_vi,
            reference: *r,
        },
    };
    Ok(WallDimensionless {
        fo_m: ctx.t_0 * r.k_m / (l2 * r.c_m),
        fo_tt: ctx.t_0 * r.k_tt / (l2 * r.c_tt),
        fo_tm: ctx.t_0 * r.k_tm / (l2 * r.c_tm),
        gamma: r.c_tm * ctx.p_vi / (r.c_tt * ctx.t_i),
        biot: faces.map(|h| biot_numbers(h, ctx, constants)),
        coefficients: normalized,
        g_scale: ctx.length / (ctx.p_vi * r.k_m),
        q_scale: ctx.length / (ctx.t_i * r.k_tt),
    })
}

/// Air properties of a zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirProperties {
    /// kg/m³
    pub rho: f64,
    /// J/(kg·K)
    pub cp_air: f64,
    /// J/(kg·K)
    pub cp_vapour: f64,
}

impl Default for AirProperties {
    fn default() -> Self {
        AirProperties {
            rho: 1.02,
            cp_air: 1006.0,
            cp_vapour: 1970.0,
        }
    }
}

/// Dimensional description of a zone, as needed for scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneAir {
    /// m³
    pub volume: f64,
    pub air: AirProperties,
    /// Air changes per hour exchanged with the exterior.
    pub ventilation_ach: f64,
    /// Vapour production, kg/s, as a function of t*.
    pub moisture_load: Signal,
    /// Sensible heat source, W, as a function of t*.
    pub heat_load: Signal,
    /// (peer zone index, air changes per hour from this zone's volume).
    pub interzone: Vec<(usize, f64)>,
}

/// Wall data a zone needs for its θ weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneWallInput {
    /// m²
    pub area: f64,
    /// m
    pub length: f64,
    pub ref_coeffs: CoefficientSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterzoneScalars {
    pub peer: usize,
    pub g: f64,
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theta {
    pub t: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneDimensionless {
    pub kappa_tt0: f64,
    pub kappa_m: f64,
    pub kappa_star: f64,
    pub g_o: Signal,
    pub q_o: Signal,
    /// Sensible heat source on the energy balance.
    pub q_h: Signal,
    pub g_v: f64,
    pub q_v1: f64,
    pub q_v2: f64,
    pub interzone: Vec<InterzoneScalars>,
    /// One entry per wall input, in order.
    pub theta: Vec<Theta>,
}

pub fn scale_zone(
    zone: &ZoneAir,
    walls: &[ZoneWallInput],
    reference: &Reference,
    constants: &PhysicalConstants,
) -> Result<ZoneDimensionless> {
    let a = &zone.air;
    if !(zone.volume > 0.0) {
        return Err(Error::DegenerateScaling(format!(
            "zone volume must be positive, got {}",
            zone.volume
        )));
    }
    if !(a.rho > 0.0 && a.cp_air > 0.0 && a.cp_vapour > 0.0) {
        return Err(Error::DegenerateScaling(format!(
            "air properties must be positive: {a:?}"
        )));
    }
    if zone.ventilation_ach < 0.0 || zone.interzone.iter().any(|(_, ach)| *ach < 0.0) {
        return Err(Error::Argument(
            "air change rates must be non-negative".into(),
        ));
    }
    let Reference { t_i, p_vi, t_0 } = *reference;
    let mass = a.rho * zone.volume;
    let kappa_tt0 = mass * a.cp_air;
    let kappa_tt1 = mass * a.cp_vapour / P_V_DEGREE;
    let kappa_m = mass / P_V_DEGREE;
    // Air mass flow, kg/s, for a rate given in air changes per hour.
    let flow = |ach: f64| ach / 3600.0 * mass;
    let sensible = |g: f64| a.cp_vapour * g * t_0 * p_vi / (P_V_DEGREE * kappa_tt0);
    let latent = |g: f64| constants.l_v * g * t_0 * p_vi / (P_V_DEGREE * kappa_tt0 * t_i);
    let exchange = |g: f64| g * t_0 / (P_V_DEGREE * kappa_m);

    let g_v = flow(zone.ventilation_ach);
    let interzone = zone
        .interzone
        .iter()
        .map(|&(peer, ach)| {
            let g = flow(ach);
            InterzoneScalars {
                peer,
                g: exchange(g),
                q1: sensible(g),
                q2: latent(g),
            }
        })
        .collect();
    let theta = walls
        .iter()
        .map(|w| {
            if !(w.area >= 0.0 && w.length > 0.0) {
                return Err(Error::DegenerateScaling(format!(
                    "wall area/thickness invalid: {w:?}"
                )));
            }
            Ok(Theta {
                t: w.ref_coeffs.k_tt * w.area * t_0 / (w.length * kappa_tt0),
                m: w.ref_coeffs.k_m * w.area * t_0 / (w.length * kappa_m),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ZoneDimensionless {
        kappa_tt0,
        kappa_m,
        kappa_star: kappa_tt1 * p_vi / kappa_tt0,
        g_o: zone.moisture_load.clone().scaled(t_0 / (p_vi * kappa_m)),
        q_o: zone
            .moisture_load
            .clone()
            .scaled(t_0 * constants.l_v / (t_i * kappa_tt0)),
        q_h: zone.heat_load.clone().scaled(t_0 / (t_i * kappa_tt0)),
        g_v: exchange(g_v),
        q_v1: sensible(g_v),
        q_v2: latent(g_v),
        interzone,
        theta,
    })
}

/// `(T, P_v) = (u T_i, v P_vi)`.
pub fn unscale_fields(u: f64, v: f64, reference: &Reference) -> (f64, f64) {
    (u * reference.t_i, v * reference.p_vi)
}

/// Relative humidity `P_v / P_s(T)` of a dimensionless state.
pub fn to_relative_humidity(v: f64, u: f64, reference: &Reference) -> f64 {
    let (t, p_v) = unscale_fields(u, v, reference);
    p_v / saturation_pressure_unchecked(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::linearize;

    fn reference() -> Reference {
        Reference::from_humidity(293.15, 0.5, 3600.0).unwrap()
    }

    #[test]
    fn identity_scaling_reproduces_h_values() {
        let ctx = ScalingContext::new(
            Reference::new(1.0, 1.0, 1.0).unwrap(),
            1.0,
            CoefficientSet::ONES,
        )
        .unwrap();
        let k = PhysicalConstants {
            l_v: 1.0,
            ..PhysicalConstants::LOAD_BEARING
        };
        let h = Convective {
            h_t: 8.0,
            h_m: 3e-8,
        };
        let w = scale_wall(
            &WallCoefficients::Frozen(CoefficientSet::ONES),
            [h, h],
            &ctx,
            &k,
        )
        .unwrap();
        assert_eq!(
            w.biot[0],
            Biot {
                m: 3e-8,
                tt: 8.0,
                tm: 3e-8
            }
        );
        assert_eq!((w.fo_m, w.fo_tt, w.fo_tm, w.gamma), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn material_normalisation_is_one_at_reference() {
        let r = reference();
        let m = WallCoefficients::Material(MaterialModel::load_bearing());
        let ctx = ScalingContext::for_wall(r, 0.1, &m).unwrap();
        let h = Convective {
            h_t: 8.0,
            h_m: 3e-8,
        };
        let w = scale_wall(&m, [h, h], &ctx, &PhysicalConstants::LOAD_BEARING).unwrap();
        for c in w.coefficients.eval(1.0, 1.0).unwrap().as_array() {
            assert!((c - 1.0).abs() < 1e-12);
        }
        assert!(!w.coefficients.is_constant());
    }

    #[test]
    fn decoded_material_matches_published_east_west_groups() {
        // The nonlinear material at (20 °C, 50 %) reproduces the E/W Fourier
        // numbers, which were built from the same frozen column.
        let r = reference();
        let set = linearize(293.15, 0.5).unwrap();
        let ctx = ScalingContext::new(r, 0.1, set).unwrap();
        let h = Convective {
            h_t: 8.0,
            h_m: 3e-8,
        };
        let w = scale_wall(
            &WallCoefficients::Frozen(set),
            [h, h],
            &ctx,
            &PhysicalConstants::LOAD_BEARING,
        )
        .unwrap();
        for (got, want) in [
            (w.fo_m, 3.23e-2),
            (w.fo_tt, 1.61e-1),
            (w.fo_tm, 1.08),
            (w.gamma, 2.35e-2),
        ] {
            assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
        }
    }

    #[test]
    fn round_trip() {
        let r = reference();
        for (t, p) in [(283.0, 900.0), (300.5, 2100.0), (293.15, r.p_vi)] {
            let (u, v) = (t / r.t_i, p / r.p_vi);
            let (t2, p2) = unscale_fields(u, v, &r);
            assert!(((t2 - t) / t).abs() < 1e-12 && ((p2 - p) / p).abs() < 1e-12);
        }
        assert_eq!(unscale_fields(1.0, 1.0, &r), (r.t_i, r.p_vi));
        assert!((to_relative_humidity(1.0, 1.0, &r) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_sources_scale_to_zero() {
        let zone = ZoneAir {
            volume: 54.0,
            air: AirProperties::default(),
            ventilation_ach: 0.0,
            moisture_load: Signal::zero(),
            heat_load: Signal::zero(),
            interzone: vec![],
        };
        let z = scale_zone(&zone, &[], &reference(), &PhysicalConstants::LOAD_BEARING).unwrap();
        for t in [0.0, 7.0, 50.0] {
            assert_eq!(z.g_o.at(t), 0.0);
            assert_eq!(z.q_o.at(t), 0.0);
            assert_eq!(z.q_h.at(t), 0.0);
        }
        assert_eq!((z.g_v, z.q_v1, z.q_v2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let zone = ZoneAir {
            volume: 0.0,
            air: AirProperties::default(),
            ventilation_ach: 0.5,
            moisture_load: Signal::zero(),
            heat_load: Signal::zero(),
            interzone: vec![],
        };
        assert!(matches!(
            scale_zone(&zone, &[], &reference(), &PhysicalConstants::LOAD_BEARING),
            Err(Error::DegenerateScaling(_))
        ));
        let zero = CoefficientSet {
            k_m: 0.0,
            ..CoefficientSet::ONES
        };
        assert!(matches!(
            ScalingContext::new(reference(), 0.1, zero),
            Err(Error::DegenerateScaling(_))
        ));
    }
}
