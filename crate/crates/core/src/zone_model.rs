//! Lumped, perfectly mixed air zones.
//!
//! ```text
//! (1 + κ*) du_a/dt* = q*_o + q*_h + q*_v1 (u∞v∞ − u_a v_a) + q*_v2 (u∞ − u_a)
//!                   + Σ_peers [q*_inz1 (u_p v_p − u_a v_a) + q*_inz2 (u_p − u_a)]
//!                   + Σ_walls θ_T [Bi_TT (u_i − u_a) + Bi_TM (v_i − v_a)]
//! dv_a/dt* = g*_o + g*_v (v∞ − v_a) + Σ_peers g*_inz (v_p − v_a) + Σ_walls ± Bi_M θ_M (v_a − v_i)
//! ```
//!
//! The sign of the wall moisture term is selectable, see [`MoistureExchange`].

use serde::{Deserialize, Serialize};

use crate::dimensionless::{Biot, Reference, Theta, ZoneDimensionless};
use crate::error::{Error, Result};
use crate::materials::PhysicalConstants;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZoneState {
    pub u_a: f64,
    pub v_a: f64,
}

impl ZoneState {
    pub fn new(u_a: f64, v_a: f64) -> Self {
        ZoneState { u_a, v_a }
    }
}

/// Sign convention of the wall term in the vapour balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoistureExchange {
    /// `+Bi_M θ_M (v_a − v_i)`: the zone gains vapour when it is more humid
    /// than the wall surface.
    Printed,
    /// `+Bi_M θ_M (v_i − v_a)`: the zone receives exactly what the wall
    /// surface loses, mirroring the heat term.
    #[default]
    Conservative,
}

impl MoistureExchange {
    fn sign(self) -> f64 {
        match self {
            MoistureExchange::Printed => 1.0,
            MoistureExchange::Conservative => -1.0,
        }
    }
}

/// A wall face bounding a zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallLink {
    pub wall: usize,
    /// 0 for `x* = 0`, 1 for `x* = 1`.
    pub face: usize,
    /// Biot numbers of that face.
    pub biot: Biot,
    pub theta: Theta,
}

/// A wall face, by wall index and face (0 or 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SurfaceRef {
    pub wall: usize,
    pub face: usize,
}

/// Long-wave exchange from `emitter` onto `receiver`: `s ε σ (T_e⁴ − T_r⁴)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiationLink {
    pub view_factor: f64,
    pub emissivity: f64,
    pub emitter: SurfaceRef,
    pub receiver: SurfaceRef,
}

impl RadiationLink {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.view_factor) {
            return Err(Error::Config(format!(
                "view factor must lie in [0, 1], got {}",
                self.view_factor
            )));
        }
        if !(self.emissivity > 0.0 && self.emissivity <= 1.0) {
            return Err(Error::Config(format!(
                "emissivity must lie in (0, 1], got {}",
                self.emissivity
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneConfig {
    pub params: ZoneDimensionless,
    pub walls: Vec<WallLink>,
    pub radiation: Vec<RadiationLink>,
    pub moisture_exchange: MoistureExchange,
}

/// Everything a zone balance reads besides its own state.
#[derive(Debug, Clone, Copy)]
pub struct ZoneInputs<'a> {
    /// `(u, v)` at both faces of every wall: `surfaces[wall][face]`.
    pub surfaces: &'a [[(f64, f64); 2]],
    /// States of all zones (peers are looked up by index).
    pub zones: &'a [ZoneState],
    /// `(u∞, v∞)`
    pub exterior: (f64, f64),
    pub t_star: f64,
}

fn surface(inputs: &ZoneInputs, link: &WallLink) -> Result<(f64, f64)> {
    inputs
        .surfaces
        .get(link.wall)
        .and_then(|s| s.get(link.face))
        .copied()
        .ok_or_else(|| {
            Error::Config(format!(
                "zone references missing wall surface {}:{}",
                link.wall, link.face
            ))
        })
}

fn peer(inputs: &ZoneInputs, index: usize) -> Result<ZoneState> {
    inputs
        .zones
        .get(index)
        .copied()
        .ok_or_else(|| Error::Config(format!("zone references missing peer zone {index}")))
}

/// Time derivatives `(du_a/dt*, dv_a/dt*)`.
pub fn zone_rhs(state: ZoneState, config: &ZoneConfig, inputs: &ZoneInputs) -> Result<(f64, f64)> {
    let p = &config.params;
    let t = inputs.t_star;
    let ZoneState { u_a, v_a } = state;
    let (u_inf, v_inf) = inputs.exterior;

    let mut heat =
        p.q_o.at(t) + p.q_h.at(t) + p.q_v1 * (u_inf * v_inf - u_a * v_a) + p.q_v2 * (u_inf - u_a);
    let mut vapour = p.g_o.at(t) + p.g_v * (v_inf - v_a);
    for link in &p.interzone {
        let other = peer(inputs, link.peer)?;
        heat += link.q1 * (other.u_a * other.v_a - u_a * v_a) + link.q2 * (other.u_a - u_a);
        vapour += link.g * (other.v_a - v_a);
    }
    let sign = config.moisture_exchange.sign();
    for w in &config.walls {
        let (u_i, v_i) = surface(inputs, w)?;
        heat += w.theta.t * (w.biot.tt * (u_i - u_a) + w.biot.tm * (v_i - v_a));
        vapour += sign * w.biot.m * w.theta.m * (v_a - v_i);
    }
    Ok((heat / (1.0 + p.kappa_star), vapour))
}

pub fn zone_step_explicit(
    state: ZoneState,
    config: &ZoneConfig,
    inputs: &ZoneInputs,
    dt: f64,
) -> Result<ZoneState> {
    let (du, dv) = zone_rhs(state, config, inputs)?;
    Ok(ZoneState {
        u_a: state.u_a + dt * du,
        v_a: state.v_a + dt * dv,
    })
}

/// Backward-Euler step of one zone with walls, peers and exterior frozen at
/// `inputs` (all read at the new layer). Vapour is solved first; the energy
/// balance is then linear in `u_a`.
pub fn zone_step_implicit(
    state: ZoneState,
    config: &ZoneConfig,
    inputs: &ZoneInputs,
    dt: f64,
) -> Result<ZoneState> {
    let p = &config.params;
    let t = inputs.t_star;
    let (u_inf, v_inf) = inputs.exterior;
    let sign = config.moisture_exchange.sign();

    let mut a = p.g_o.at(t) + p.g_v * v_inf;
    let mut b = p.g_v;
    for link in &p.interzone {
        let other = peer(inputs, link.peer)?;
        a += link.g * other.v_a;
        b += link.g;
    }
    let mut walls = Vec::with_capacity(config.walls.len());
    for w in &config.walls {
        let s = surface(inputs, w)?;
        let k = w.biot.m * w.theta.m;
        a -= sign * k * s.1;
        b -= sign * k;
        walls.push(s);
    }
    let v_a = (state.v_a + dt * a) / (1.0 + dt * b);

    let cap = 1.0 + p.kappa_star;
    let mut c = p.q_o.at(t) + p.q_h.at(t) + p.q_v1 * u_inf * v_inf + p.q_v2 * u_inf;
    let mut d = p.q_v1 * v_a + p.q_v2;
    for link in &p.interzone {
        let other = peer(inputs, link.peer)?;
        c += link.q1 * other.u_a * other.v_a + link.q2 * other.u_a;
        d += link.q1 * v_a + link.q2;
    }
    for (w, (u_i, v_i)) in config.walls.iter().zip(walls) {
        c += w.theta.t * (w.biot.tt * u_i + w.biot.tm * (v_i - v_a));
        d += w.theta.t * w.biot.tt;
    }
    let u_a = (cap * state.u_a + dt * c) / (cap + dt * d);
    Ok(ZoneState { u_a, v_a })
}

/// Long-wave flux (W/m²) received by `receiver` from every link that targets
/// it, with surface temperatures `u[wall][face]` in units of `T_i`.
pub fn radiative_flux(
    u: &[[f64; 2]],
    receiver: SurfaceRef,
    links: &[RadiationLink],
    reference: &Reference,
) -> f64 {
    let sigma = PhysicalConstants::LOAD_BEARING.sigma;
    let temp = |s: SurfaceRef| u[s.wall][s.face] * reference.t_i;
    links
        .iter()
        .filter(|l| l.receiver == receiver)
        .map(|l| {
            l.view_factor
                * l.emissivity
                * sigma
                * (temp(l.emitter).powi(4) - temp(l.receiver).powi(4))
        })
        .sum()
}

/// Outcome of the moisture-direction check: the wall surface is made more
/// humid than the air and the sign of the zone's vapour rate is reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoistureAudit {
    pub convention: MoistureExchange,
    /// dv_a/dt* from the wall terms alone, with `v_i − v_a = +0.1`.
    pub rate: f64,
    /// True if the zone gains vapour from the wetter wall.
    pub physical: bool,
}

pub fn audit_moisture_exchange(config: &ZoneConfig) -> MoistureAudit {
    let sign = config.moisture_exchange.sign();
    let (v_a, v_i) = (1.0, 1.1);
    let rate: f64 = config
        .walls
        .iter()
        .map(|w| sign * w.biot.m * w.theta.m * (v_a - v_i))
        .sum();
    MoistureAudit {
        convention: config.moisture_exchange,
        rate,
        physical: rate > 0.0 || config.walls.is_empty(),
    }
}
