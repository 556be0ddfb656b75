//! Scenario files (TOML) and the bundled fixtures.
//!
//! A scenario declares the scaling reference, numerics, materials, walls
//! (with what each face touches), zones and the analytic forcing signals.
//! Signals of time take `t*` as argument. Exterior and face signals are
//! dimensionless; zone loads are in g/h (vapour) and W (heat).
//!
//! ```
//! use hygrosim::scenario::Scenario;
//! let s = Scenario::bundled("one_zone_linear").unwrap();
//! let model = s.build(&Default::default()).unwrap();
//! assert_eq!(model.walls.len(), 4);
//! assert_eq!(model.horizon, 80.0);
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::building::{BuildingModel, ExteriorFace, FaceContact, WallInitial, WallModel};
use crate::dimensionless::{
    scale_wall, scale_zone, AirProperties, Convective, Reference, ScalingContext, WallCoefficients,
    ZoneAir, ZoneWallInput,
};
use crate::error::{Error, Result};
use crate::materials::{CoefficientSet, MaterialModel, PhysicalConstants};
use crate::signal::Signal;
use crate::wall_solver::{Grid1D, SchemeKind};
use crate::zone_model::{
    MoistureExchange, RadiationLink, SurfaceRef, WallLink, ZoneConfig, ZoneState,
};

const BUNDLED: [(&str, &str); 3] = [
    (
        "wall_nonlinear",
        include_str!("../scenarios/wall_nonlinear.toml"),
    ),
    (
        "one_zone_linear",
        include_str!("../scenarios/one_zone_linear.toml"),
    ),
    (
        "two_zone_nonlinear",
        include_str!("../scenarios/two_zone_nonlinear.toml"),
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scaling: ScalingSpec,
    pub numerics: NumericsSpec,
    #[serde(default)]
    pub air: AirProperties,
    pub exterior: ExteriorSpec,
    pub materials: BTreeMap<String, MaterialSpec>,
    pub walls: Vec<WallSpec>,
    #[serde(default)]
    pub zones: Vec<ZoneSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    /// K
    #[serde(rename = "T_i")]
    pub t_i: f64,
    pub phi_i: f64,
    /// s
    pub t_0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeName {
    #[serde(rename = "df", alias = "dufort-frankel", alias = "dufort_frankel")]
    DufortFrankel,
    #[serde(
        rename = "euler-implicit",
        alias = "euler_implicit",
        alias = "implicit"
    )]
    EulerImplicit,
    #[serde(
        rename = "euler-explicit",
        alias = "euler_explicit",
        alias = "explicit"
    )]
    EulerExplicit,
}

impl SchemeName {
    pub fn parse(s: &str) -> Result<Self> {
        let quoted = format!("\"{s}\"");
        toml::Value::deserialize(toml::de::ValueDeserializer::new(&quoted))
            .ok()
            .and_then(|v| SchemeName::deserialize(v).ok())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme '{s}' (expected df, euler-implicit or euler-explicit)"
                ))
            })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SchemeName::DufortFrankel => "df",
            SchemeName::EulerImplicit => "euler-implicit",
            SchemeName::EulerExplicit => "euler-explicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSpec {
    pub scheme: SchemeName,
    pub dx_star: f64,
    pub dt_star: f64,
    pub horizon: f64,
    /// Fixed-point tolerance; defaults to `1e-2 · dt_star`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_max_subiters")]
    pub max_subiters: usize,
    /// Recording interval in `t*`.
    #[serde(default = "default_cadence")]
    pub cadence: f64,
}

fn default_max_subiters() -> usize {
    100
}

fn default_cadence() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExteriorSpec {
    pub u_inf: Signal,
    pub v_inf: Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialSpec {
    /// Frozen coefficients, SI units.
    Constant(CoefficientSet),
    /// The nonlinear load-bearing material.
    LoadBearing,
    /// The load-bearing material frozen at `(T, φ)`.
    Linearized {
        #[serde(rename = "T")]
        t: f64,
        phi: f64,
    },
}

impl MaterialSpec {
    fn resolve(&self) -> Result<WallCoefficients> {
        Ok(match self {
            MaterialSpec::Constant(set) => {
                set.validate()?;
                WallCoefficients::Frozen(*set)
            }
            MaterialSpec::LoadBearing => WallCoefficients::Material(MaterialModel::load_bearing()),
            MaterialSpec::Linearized { t, phi } => {
                WallCoefficients::Frozen(MaterialModel::load_bearing().linearize(*t, *phi)?)
            }
        })
    }

    fn label(&self) -> String {
        match self {
            MaterialSpec::Constant(_) => "constant coefficients".into(),
            MaterialSpec::LoadBearing => "load-bearing, nonlinear".into(),
            MaterialSpec::Linearized { t, phi } => {
                format!("load-bearing, frozen at T = {t} K, φ = {phi}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub name: String,
    pub material: String,
    /// m
    pub thickness: f64,
    /// m²
    pub area: f64,
    pub x0: FaceSpec,
    pub x1: FaceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contact {
    Exterior,
    Zone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSpec {
    pub contact: Contact,
    /// Zone name, when `contact = "zone"`.
    #[serde(default)]
    pub zone: Option<String>,
    /// W/(m²·K)
    #[serde(rename = "h_T")]
    pub h_t: f64,
    /// s/m
    #[serde(rename = "h_M")]
    pub h_m: f64,
    /// Exterior faces only: overrides of the building's ambient signals and
    /// dimensionless imposed fluxes.
    #[serde(default)]
    pub u_inf: Option<Signal>,
    #[serde(default)]
    pub v_inf: Option<Signal>,
    #[serde(default)]
    pub g_inf: Option<Signal>,
    #[serde(default)]
    pub q_inf: Option<Signal>,
    /// Zone faces in a radiating zone.
    #[serde(default)]
    pub emissivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    pub name: String,
    /// m³
    pub volume: f64,
    #[serde(default)]
    pub ventilation_ach: f64,
    #[serde(default)]
    pub moisture_load_g_per_h: Signal,
    #[serde(default)]
    pub heat_load_w: Signal,
    #[serde(default)]
    pub moisture_exchange: MoistureExchange,
    #[serde(default)]
    pub interzone: Vec<InterzoneSpec>,
    #[serde(default)]
    pub radiation: Option<RadiationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterzoneSpec {
    pub zone: String,
    /// Air changes per hour of this zone's volume flowing in from `zone`.
    pub ach: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiationSpec {
    pub view_factor: f64,
}

/// Command-line overrides of the numerics block.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Overrides {
    pub scheme: Option<SchemeName>,
    pub dt_star: Option<f64>,
    pub dx_star: Option<f64>,
    pub eta: Option<f64>,
    pub horizon: Option<f64>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        let mut s = Scenario::from_toml_str(&text).map_err(|e| {
            Error::Config(format!(
                "{}: {}",
                path.display(),
                e.to_string().trim_start_matches("configuration error: ")
            ))
        })?;
        if s.name.is_empty() {
            s.name = path
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(s)
    }

    pub fn bundled_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    /// Raw text of a bundled fixture.
    pub fn bundled_text(name: &str) -> Option<&'static str> {
        BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("no bundled scenario named '{name}'")))?;
        let mut s = Scenario::from_toml_str(text)?;
        if s.name.is_empty() {
            s.name = name.to_string();
        }
        Ok(s)
    }

    /// A bundled name, or else a path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if Scenario::bundled_names().any(|n| n == name_or_path) {
            Scenario::bundled(name_or_path)
        } else {
            Scenario::load(Path::new(name_or_path))
        }
    }

    pub fn reference(&self) -> Result<Reference> {
        let s = &self.scaling;
        Reference::from_humidity(s.t_i, s.phi_i, s.t_0)
            .map_err(|e| Error::Config(format!("scaling: {e}")))
    }

    pub fn scheme(&self, overrides: &Overrides) -> Result<SchemeKind> {
        let dt = overrides.dt_star.unwrap_or(self.numerics.dt_star);
        Ok(match overrides.scheme.unwrap_or(self.numerics.scheme) {
            SchemeName::DufortFrankel => SchemeKind::DufortFrankel,
            SchemeName::EulerExplicit => SchemeKind::EulerExplicit,
            SchemeName::EulerImplicit => {
                let eta = overrides.eta.or(self.numerics.eta).unwrap_or(1e-2 * dt);
                SchemeKind::implicit(eta, self.numerics.max_subiters)
                    .map_err(|e| Error::Config(format!("numerics: {e}")))?
            }
        })
    }

    /// Effective fixed-point tolerance.
    pub fn eta(&self, overrides: &Overrides) -> f64 {
        let dt = overrides.dt_star.unwrap_or(self.numerics.dt_star);
        overrides.eta.or(self.numerics.eta).unwrap_or(1e-2 * dt)
    }

    /// Resolves names, scales every wall and zone and assembles the model.
    pub fn build(&self, overrides: &Overrides) -> Result<BuildingModel> {
        let reference = self.reference()?;
        let constants = PhysicalConstants::LOAD_BEARING;
        let dx = overrides.dx_star.unwrap_or(self.numerics.dx_star);
        let dt = overrides.dt_star.unwrap_or(self.numerics.dt_star);
        let horizon = overrides.horizon.unwrap_or(self.numerics.horizon);
        let grid = Grid1D::from_spacing(dx)
            .map_err(|e| Error::Config(format!("numerics.dx_star: {e}")))?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "numerics.dt_star must be positive, got {dt}"
            )));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!(
                "numerics.horizon must be non-negative, got {horizon}"
            )));
        }
        self.exterior
            .u_inf
            .validate()
            .map_err(|e| Error::Config(format!("exterior.u_inf: {e}")))?;
        self.exterior
            .v_inf
            .validate()
            .map_err(|e| Error::Config(format!("exterior.v_inf: {e}")))?;

        let zone_index = |name: &str, field: &str| -> Result<usize> {
            self.zones
                .iter()
                .position(|z| z.name == name)
                .ok_or_else(|| Error::Config(format!("{field}: unknown zone '{name}'")))
        };
        for (i, z) in self.zones.iter().enumerate() {
            if self.zones[..i].iter().any(|o| o.name == z.name) {
                return Err(Error::Config(format!(
                    "zones[{i}].name: duplicate zone '{}'",
                    z.name
                )));
            }
        }

        let mut walls = Vec::with_capacity(self.walls.len());
        let mut contexts = Vec::with_capacity(self.walls.len());
        for (i, w) in self.walls.iter().enumerate() {
            let path = format!("walls[{i}]");
            let material = self.materials.get(&w.material).ok_or_else(|| {
                Error::Config(format!(
                    "{path}.material: unknown material '{}'",
                    w.material
                ))
            })?;
            let coeffs = material
                .resolve()
                .map_err(|e| Error::Config(format!("materials.{}: {e}", w.material)))?;
            let ctx = ScalingContext::for_wall(reference, w.thickness, &coeffs)
                .map_err(|e| Error::Config(format!("{path}: {e}")))?;
            if !(w.area > 0.0) {
                return Err(Error::Config(format!(
                    "{path}.area must be positive, got {}",
                    w.area
                )));
            }
            let h = [&w.x0, &w.x1].map(|f| Convective {
                h_t: f.h_t,
                h_m: f.h_m,
            });
            let params = scale_wall(&coeffs, h, &ctx, &constants)
                .map_err(|e| Error::Config(format!("{path}: {e}")))?;
            let mut faces = Vec::with_capacity(2);
            for (k, f) in [&w.x0, &w.x1].into_iter().enumerate() {
                let fpath = format!("{path}.x{k}");
                faces.push(match f.contact {
                    Contact::Exterior => {
                        if f.zone.is_some() || f.emissivity.is_some() {
                            return Err(Error::Config(format!(
                                "{fpath}: 'zone'/'emissivity' only apply to zone faces"
                            )));
                        }
                        let e = ExteriorFace {
                            u_inf: f.u_inf.clone(),
                            v_inf: f.v_inf.clone(),
                            g_inf: f.g_inf.clone().unwrap_or_default(),
                            q_inf: f.q_inf.clone().unwrap_or_default(),
                        };
                        for s in [&e.g_inf, &e.q_inf]
                            .into_iter()
                            .chain(e.u_inf.as_ref())
                            .chain(e.v_inf.as_ref())
                        {
                            s.validate()
                                .map_err(|err| Error::Config(format!("{fpath}: {err}")))?;
                        }
                        FaceContact::Exterior(e)
                    }
                    Contact::Zone => {
                        if f.u_inf.is_some()
                            || f.v_inf.is_some()
                            || f.g_inf.is_some()
                            || f.q_inf.is_some()
                        {
                            return Err(Error::Config(format!(
                                "{fpath}: ambient overrides only apply to exterior faces"
                            )));
                        }
                        let name = f
                            .zone
                            .as_deref()
                            .ok_or_else(|| Error::Config(format!("{fpath}.zone is required")))?;
                        FaceContact::Zone(zone_index(name, &format!("{fpath}.zone"))?)
                    }
                });
            }
            let faces: [FaceContact; 2] = faces.try_into().expect("two faces");
            walls.push(WallModel {
                name: w.name.clone(),
                grid,
                params,
                faces,
                initial: WallInitial::Uniform(1.0, 1.0),
            });
            contexts.push(ctx);
        }

        let mut zones = Vec::with_capacity(self.zones.len());
        for (z, spec) in self.zones.iter().enumerate() {
            let path = format!("zones[{z}]");
            let mut links = Vec::new();
            let mut inputs = Vec::new();
            for (i, w) in walls.iter().enumerate() {
                for face in 0..2 {
                    if w.faces[face] == FaceContact::Zone(z) {
                        links.push((i, face));
                        inputs.push(ZoneWallInput {
                            area: self.walls[i].area,
                            length: self.walls[i].thickness,
                            ref_coeffs: contexts[i].ref_coeffs,
                        });
                    }
                }
            }
            let interzone = spec
                .interzone
                .iter()
                .enumerate()
                .map(|(k, l)| {
                    Ok((
                        zone_index(&l.zone, &format!("{path}.interzone[{k}].zone"))?,
                        l.ach,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let air = ZoneAir {
                volume: spec.volume,
                air: self.air,
                ventilation_ach: spec.ventilation_ach,
                moisture_load: spec.moisture_load_g_per_h.clone().scaled(1e-3 / 3600.0),
                heat_load: spec.heat_load_w.clone(),
                interzone,
            };
            spec.moisture_load_g_per_h
                .validate()
                .map_err(|e| Error::Config(format!("{path}.moisture_load_g_per_h: {e}")))?;
            spec.heat_load_w
                .validate()
                .map_err(|e| Error::Config(format!("{path}.heat_load_w: {e}")))?;
            let params = scale_zone(&air, &inputs, &reference, &constants)
                .map_err(|e| Error::Config(format!("{path}: {e}")))?;
            let wall_links = links
                .iter()
                .zip(&params.theta)
                .map(|(&(wall, face), theta)| WallLink {
                    wall,
                    face,
                    biot: walls[wall].params.biot[face],
                    theta: *theta,
                })
                .collect();
            let mut radiation = Vec::new();
            if let Some(r) = spec.radiation {
                for &(rw, rf) in &links {
                    let face_spec = if rf == 0 {
                        &self.walls[rw].x0
                    } else {
                        &self.walls[rw].x1
                    };
                    let eps = face_spec.emissivity.ok_or_else(|| {
                        Error::Config(format!(
                            "walls[{rw}].x{rf}.emissivity is required: zone '{}' radiates",
                            spec.name
                        ))
                    })?;
                    for &(ew, ef) in &links {
                        if (ew, ef) != (rw, rf) {
                            let link = RadiationLink {
                                view_factor: r.view_factor,
                                emissivity: eps,
                                emitter: SurfaceRef { wall: ew, face: ef },
                                receiver: SurfaceRef { wall: rw, face: rf },
                            };
                            link.validate()
                                .map_err(|e| Error::Config(format!("{path}.radiation: {e}")))?;
                            radiation.push(link);
                        }
                    }
                }
            }
            zones.push(ZoneConfig {
                params,
                walls: wall_links,
                radiation,
                moisture_exchange: spec.moisture_exchange,
            });
        }

        let model = BuildingModel {
            reference,
            walls,
            zone_initial: vec![ZoneState::new(1.0, 1.0); zones.len()],
            zones,
            exterior_u: self.exterior.u_inf.clone(),
            exterior_v: self.exterior.v_inf.clone(),
            scheme: self.scheme(overrides)?,
            dt,
            horizon,
        };
        model.validate()?;
        Ok(model)
    }

    /// Dimensional inputs and the derived dimensionless groups, one item per line.
    pub fn echo(&self, model: &BuildingModel, overrides: &Overrides) -> String {
        let mut s = String::new();
        let r = &model.reference;
        let dx = model
            .walls
            .first()
            .map(|w| w.grid.dx())
            .unwrap_or(self.numerics.dx_star);
        let eta = match model.scheme {
            SchemeKind::EulerImplicit { eta, .. } => format!("{eta:e}"),
            _ => "n/a".into(),
        };
        let _ = writeln!(
            s,
            "# scenario {}: scheme = {}, dx* = {dx:e}, dt* = {:e}, eta = {eta}, horizon = {}, t_0 = {} s",
            self.name,
            overrides.scheme.unwrap_or(self.numerics.scheme).label(),
            model.dt,
            model.horizon,
            r.t_0
        );
        let _ = writeln!(
            s,
            "# reference: T_i = {} K, phi_i = {}, P_vi = {:.2} Pa",
            r.t_i, self.scaling.phi_i, r.p_vi
        );
        for (i, (w, spec)) in model.walls.iter().zip(&self.walls).enumerate() {
            let p = &w.params;
            let material = self
                .materials
                .get(&spec.material)
                .map(MaterialSpec::label)
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "# wall {i} '{}': material '{}' ({material}), L = {} m, A = {} m2",
                w.name, spec.material, spec.thickness, spec.area
            );
            let _ = writeln!(
                s,
                "#   Fo_M = {:.4e}, Fo_TT = {:.4e}, Fo_TM = {:.4e}, gamma = {:.4e}",
                p.fo_m, p.fo_tt, p.fo_tm, p.gamma
            );
            for f in 0..2 {
                let b = p.biot[f];
                let touches = match &w.faces[f] {
                    FaceContact::Exterior(_) => "exterior".to_string(),
                    FaceContact::Zone(z) => format!("zone '{}'", self.zones[*z].name),
                };
                let _ = writeln!(
                    s,
                    "#   x* = {f} ({touches}): Bi_M = {:.4e}, Bi_TT = {:.4e}, Bi_TM = {:.4e}",
                    b.m, b.tt, b.tm
                );
            }
        }
        for (z, (cfg, spec)) in model.zones.iter().zip(&self.zones).enumerate() {
            let p = &cfg.params;
            let _ = writeln!(
                s,
                "# zone {z} '{}': V = {} m3, kappa* = {:.4e}, g_v* = {:.4e}, q_v1* = {:.4e}, q_v2* = {:.4e}, moisture exchange = {:?}",
                spec.name, spec.volume, p.kappa_star, p.g_v, p.q_v1, p.q_v2, cfg.moisture_exchange
            );
            for l in &cfg.walls {
                let _ = writeln!(
                    s,
                    "#   wall '{}' x* = {}: theta_T = {:.4e}, theta_M = {:.4e}",
                    model.walls[l.wall].name, l.face, l.theta.t, l.theta.m
                );
            }
            for l in &p.interzone {
                let _ = writeln!(
                    s,
                    "#   from zone '{}': g_inz* = {:.4e}, q_inz1* = {:.4e}, q_inz2* = {:.4e}",
                    self.zones[l.peer].name, l.g, l.q1, l.q2
                );
            }
        }
        s
    }
}
