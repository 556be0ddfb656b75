//! Whole-building time march: walls and zones advanced together.
//!
//! Implicit variant: at every step a fixed point over all unknowns. Each
//! sub-iteration solves every wall by backward Euler against the current zone
//! iterate (one coefficient refresh per sub-iteration), then every zone by
//! backward Euler against the new wall iterate, until the max-norm change of
//! the concatenated unknowns drops below η.
//!
//! Explicit variant: DuFort–Frankel (or forward Euler) walls and forward-Euler
//! zones, all reading layer n; one pass, no iteration. The three-layer walls
//! get their second starting layer from one implicit step.

use std::time::Instant;

use crate::dimensionless::{Reference, WallDimensionless};
use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::wall_solver::{
    cfl_limit, cfl_samples, df_step_coupled, df_step_nonlinear, euler_explicit_step, max_change,
    CflLimit, FaceState, Grid1D, ImplicitSolver, SchemeKind, WallField,
};
use crate::zone_model::{
    radiative_flux, zone_step_explicit, zone_step_implicit, SurfaceRef, ZoneConfig, ZoneInputs,
    ZoneState,
};

/// Max-norm above which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

/// What one wall face touches.
#[derive(Debug, Clone, PartialEq)]
pub enum FaceContact {
    Exterior(ExteriorFace),
    Zone(usize),
}

/// Exterior face forcing. Ambient values default to the building's exterior
/// signals; `g_inf`/`q_inf` are dimensionless imposed fluxes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExteriorFace {
    pub u_inf: Option<Signal>,
    pub v_inf: Option<Signal>,
    pub g_inf: Signal,
    pub q_inf: Signal,
}

/// Initial `(u, v)` of a wall, either uniform or as a function of `x*`
/// (so that it can be sampled on any grid).
#[derive(Debug, Clone, Copy)]
pub enum WallInitial {
    Uniform(f64, f64),
    Profile(fn(f64) -> (f64, f64)),
}

impl PartialEq for WallInitial {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (WallInitial::Uniform(a, b), WallInitial::Uniform(c, d)) => a == c && b == d,
            (WallInitial::Profile(f), WallInitial::Profile(g)) => std::ptr::fn_addr_eq(*f, *g),
            _ => false,
        }
    }
}

impl WallInitial {
    pub fn field(&self, grid: &Grid1D) -> WallField {
        match *self {
            WallInitial::Uniform(u, v) => WallField::uniform(grid, u, v),
            WallInitial::Profile(f) => {
                let (u, v) = grid.positions().into_iter().map(f).unzip();
                WallField::from_profiles(u, v, 0.0).expect("grid has at least 3 nodes")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WallModel {
    pub name: String,
    pub grid: Grid1D,
    pub params: WallDimensionless,
    pub faces: [FaceContact; 2],
    pub initial: WallInitial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingModel {
    pub reference: Reference,
    pub walls: Vec<WallModel>,
    pub zones: Vec<ZoneConfig>,
    pub zone_initial: Vec<ZoneState>,
    pub exterior_u: Signal,
    pub exterior_v: Signal,
    pub scheme: SchemeKind,
    pub dt: f64,
    pub horizon: f64,
}

impl BuildingModel {
    /// Checks that every wall face resolves to the exterior or a zone and
    /// that the zone link lists agree with the wall faces.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt_star must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon must be non-negative, got {}",
                self.horizon
            )));
        }
        if let SchemeKind::EulerImplicit { eta, max_subiters } = self.scheme {
            SchemeKind::implicit(eta, max_subiters).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.zone_initial.len() != self.zones.len() {
            return Err(Error::Config(
                "one initial state per zone is required".into(),
            ));
        }
        self.exterior_u.validate()?;
        self.exterior_v.validate()?;
        for (i, w) in self.walls.iter().enumerate() {
            if w.grid.n() < 3 {
                return Err(Error::Config(format!(
                    "wall '{}' has fewer than 3 nodes",
                    w.name
                )));
            }
            for (f, contact) in w.faces.iter().enumerate() {
                match contact {
                    FaceContact::Zone(z) => {
                        let zone = self.zones.get(*z).ok_or_else(|| {
                            Error::Config(format!(
                                "wall '{}' face {f} touches unknown zone {z}",
                                w.name
                            ))
                        })?;
                        if !zone.walls.iter().any(|l| l.wall == i && l.face == f) {
                            return Err(Error::Config(format!(
                                "wall '{}' face {f} touches zone {z}, which does not list it",
                                w.name
                            )));
                        }
                    }
                    FaceContact::Exterior(e) => {
                        for s in [&e.g_inf, &e.q_inf]
                            .into_iter()
                            .chain(e.u_inf.as_ref())
                            .chain(e.v_inf.as_ref())
                        {
                            s.validate()?;
                        }
                    }
                }
            }
        }
        for (z, zone) in self.zones.iter().enumerate() {
            for l in &zone.walls {
                match self.walls.get(l.wall).map(|w| &w.faces[l.face.min(1)]) {
                    Some(FaceContact::Zone(zz)) if *zz == z && l.face < 2 => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "zone {z} lists wall {} face {} which does not touch it",
                            l.wall, l.face
                        )))
                    }
                }
            }
            for link in &zone.params.interzone {
                if link.peer >= self.zones.len() || link.peer == z {
                    return Err(Error::Config(format!(
                        "zone {z} has an interzone link to invalid zone {}",
                        link.peer
                    )));
                }
            }
            for r in &zone.radiation {
                r.validate()?;
                for s in [r.emitter, r.receiver] {
                    if s.wall >= self.walls.len() || s.face > 1 {
                        return Err(Error::Config(format!(
                            "radiation link references missing surface {s:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn initial_state(&self) -> BuildingState {
        BuildingState {
            walls: self
                .walls
                .iter()
                .map(|w| w.initial.field(&w.grid))
                .collect(),
            zones: self.zone_initial.clone(),
            t_star: 0.0,
        }
    }

    /// Face forcing of every wall, with zones at `zones`, exterior at `t` and
    /// radiation from the surface temperatures of `walls`.
    fn faces(
        &self,
        walls: &[(&[f64], &[f64])],
        zones: &[ZoneState],
        t: f64,
    ) -> Vec<[FaceState; 2]> {
        let u_surf: Vec<[f64; 2]> = walls.iter().map(|(u, _)| [u[0], u[u.len() - 1]]).collect();
        self.walls
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let one = |f: usize| match &w.faces[f] {
                    FaceContact::Exterior(e) => FaceState {
                        u_inf: e.u_inf.as_ref().unwrap_or(&self.exterior_u).at(t),
                        v_inf: e.v_inf.as_ref().unwrap_or(&self.exterior_v).at(t),
                        g_inf: e.g_inf.at(t),
                        q_inf: e.q_inf.at(t),
                    },
                    FaceContact::Zone(z) => {
                        let links = &self.zones[*z].radiation;
                        let q = if links.is_empty() {
                            0.0
                        } else {
                            radiative_flux(
                                &u_surf,
                                SurfaceRef { wall: i, face: f },
                                links,
                                &self.reference,
                            )
                        };
                        FaceState {
                            u_inf: zones[*z].u_a,
                            v_inf: zones[*z].v_a,
                            g_inf: 0.0,
                            q_inf: w.params.q_scale * q,
                        }
                    }
                };
                [one(0), one(1)]
            })
            .collect()
    }

    /// Forward-Euler stability bounds of every wall. States are sampled on a
    /// 3×3 grid spanning the initial field and the extremes of the ambient
    /// values its faces see (zones at their initial state).
    pub fn cfl_report(&self) -> Result<Vec<WallCfl>> {
        self.walls
            .iter()
            .map(|w| {
                let init = w.initial.field(&w.grid);
                let span = |xs: &[f64]| {
                    xs.iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                            (a.min(x), b.max(x))
                        })
                };
                let (mut u, mut v) = (span(&init.u_curr), span(&init.v_curr));
                let widen = |(lo, hi): (f64, f64), (a, b): (f64, f64)| (lo.min(a), hi.max(b));
                for face in &w.faces {
                    let (fu, fv) = match face {
                        FaceContact::Exterior(e) => (
                            e.u_inf.as_ref().unwrap_or(&self.exterior_u).range(),
                            e.v_inf.as_ref().unwrap_or(&self.exterior_v).range(),
                        ),
                        FaceContact::Zone(z) => {
                            let s = self.zone_initial[*z];
                            ((s.u_a, s.u_a), (s.v_a, s.v_a))
                        }
                    };
                    u = widen(u, fu);
                    v = widen(v, fv);
                }
                let limit = cfl_limit(&w.params, w.grid.dx(), &cfl_samples(u, v))?;
                Ok(WallCfl {
                    wall: w.name.clone(),
                    limit,
                    u_range: u,
                    v_range: v,
                })
            })
            .collect()
    }

    fn exterior(&self, t: f64) -> (f64, f64) {
        (self.exterior_u.at(t), self.exterior_v.at(t))
    }
}

/// Stability bounds of one wall and the state box they were sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct WallCfl {
    pub wall: String,
    pub limit: CflLimit,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
}

/// All wall fields and zone states at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingState {
    pub walls: Vec<WallField>,
    pub zones: Vec<ZoneState>,
    pub t_star: f64,
}

impl BuildingState {
    fn surfaces(&self) -> Vec<[(f64, f64); 2]> {
        self.walls
            .iter()
            .map(|w| [w.surface(0), w.surface(1)])
            .collect()
    }

    fn layers(&self) -> Vec<(&[f64], &[f64])> {
        self.walls
            .iter()
            .map(|w| (w.u_curr.as_slice(), w.v_curr.as_slice()))
            .collect()
    }

    /// Max |value| over every wall node and zone scalar.
    pub fn max_abs(&self) -> f64 {
        let zones = self.zones.iter().flat_map(|z| [z.u_a.abs(), z.v_a.abs()]);
        let mut m = 0.0f64;
        for x in self.walls.iter().map(WallField::max_abs).chain(zones) {
            if x.is_nan() {
                return f64::NAN;
            }
            m = m.max(x);
        }
        m
    }

    fn check_divergence(&self) -> Result<()> {
        let norm = self.max_abs();
        if !norm.is_finite() || norm > DIVERGENCE_LIMIT {
            return Err(Error::Divergence {
                norm: if norm.is_nan() { f64::INFINITY } else { norm },
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// Fixed-point sub-iterations (0 for the explicit variant).
    pub subiterations: usize,
    /// Last fixed-point change (0 for the explicit variant).
    pub residual: f64,
    /// Wall-clock seconds spent in the step.
    pub wall_clock: f64,
}

/// Explicit step: every update reads layer n only.
pub fn step_explicit(
    model: &BuildingModel,
    state: &BuildingState,
) -> Result<(BuildingState, StepReport)> {
    let start = Instant::now();
    let t = state.t_star;
    let dt = model.dt;
    let faces = model.faces(&state.layers(), &state.zones, t);
    let walls = model
        .walls
        .iter()
        .zip(&state.walls)
        .zip(&faces)
        .map(|((w, field), f)| match model.scheme {
            SchemeKind::EulerExplicit => Ok(euler_explicit_step(field, &w.params, f, dt)),
            _ if w.params.coefficients.is_constant() => {
                Ok(df_step_coupled(field, &w.params, f, dt))
            }
            _ => df_step_nonlinear(field, &w.params, f, dt),
        })
        .collect::<Result<Vec<_>>>()?;
    let surfaces = state.surfaces();
    let inputs = ZoneInputs {
        surfaces: &surfaces,
        zones: &state.zones,
        exterior: model.exterior(t),
        t_star: t,
    };
    let zones = model
        .zones
        .iter()
        .zip(&state.zones)
        .map(|(cfg, s)| zone_step_explicit(*s, cfg, &inputs, dt))
        .collect::<Result<Vec<_>>>()?;
    let next = BuildingState {
        walls,
        zones,
        t_star: t + dt,
    };
    next.check_divergence()?;
    Ok((
        next,
        StepReport {
            subiterations: 0,
            residual: 0.0,
            wall_clock: start.elapsed().as_secs_f64(),
        },
    ))
}

/// One implicit step, iterated to the tolerance `eta`. `solvers` holds one
/// [`ImplicitSolver`] per wall (their factorisations are reused across steps).
pub fn step_implicit(
    model: &BuildingModel,
    state: &BuildingState,
    solvers: &mut [ImplicitSolver],
    eta: f64,
    max_subiters: usize,
) -> Result<(BuildingState, StepReport)> {
    if !(eta > 0.0) || max_subiters == 0 {
        return Err(Error::Argument(format!(
            "need η > 0 and max_subiters ≥ 1 (got {eta}, {max_subiters})"
        )));
    }
    if solvers.len() != model.walls.len() {
        return Err(Error::Argument(
            "one implicit solver per wall is required".into(),
        ));
    }
    let start = Instant::now();
    let dt = model.dt;
    let t_next = state.t_star + dt;
    let exterior = model.exterior(t_next);

    let mut walls: Vec<(Vec<f64>, Vec<f64>)> = state
        .walls
        .iter()
        .map(|w| (w.u_curr.clone(), w.v_curr.clone()))
        .collect();
    let mut scratch = walls.clone();
    let mut zones = state.zones.clone();
    let mut change = f64::INFINITY;
    for k in 1..=max_subiters {
        let layers: Vec<(&[f64], &[f64])> = walls
            .iter()
            .map(|(u, v)| (u.as_slice(), v.as_slice()))
            .collect();
        let faces = model.faces(&layers, &zones, t_next);
        change = 0.0;
        for (i, w) in model.walls.iter().enumerate() {
            let field = &state.walls[i];
            let (u_out, v_out) = &mut scratch[i];
            solvers[i].pass_into(
                &w.params,
                &field.u_curr,
                &field.v_curr,
                &walls[i].0,
                &walls[i].1,
                &faces[i],
                u_out,
                v_out,
            )?;
            change = change
                .max(max_change(u_out, &walls[i].0))
                .max(max_change(v_out, &walls[i].1));
        }
        std::mem::swap(&mut walls, &mut scratch);
        let surfaces: Vec<[(f64, f64); 2]> = walls
            .iter()
            .map(|(u, v)| [(u[0], v[0]), (u[u.len() - 1], v[v.len() - 1])])
            .collect();
        let inputs = ZoneInputs {
            surfaces: &surfaces,
            zones: &zones,
            exterior,
            t_star: t_next,
        };
        let next_zones = model
            .zones
            .iter()
            .zip(&state.zones)
            .map(|(cfg, s)| zone_step_implicit(*s, cfg, &inputs, dt))
            .collect::<Result<Vec<_>>>()?;
        for (a, b) in next_zones.iter().zip(&zones) {
            change = change.max((a.u_a - b.u_a).abs()).max((a.v_a - b.v_a).abs());
        }
        zones = next_zones;
        if change.is_nan() {
            change = f64::INFINITY;
        }
        if change < eta {
            let next = BuildingState {
                walls: state
                    .walls
                    .iter()
                    .zip(walls)
                    .map(|(f, (u, v))| f.advance(u, v, dt))
                    .collect(),
                zones,
                t_star: t_next,
            };
            next.check_divergence()?;
            let report = StepReport {
                subiterations: k,
                residual: change,
                wall_clock: start.elapsed().as_secs_f64(),
            };
            return Ok((next, report));
        }
    }
    Err(Error::Convergence {
        subiterations: max_subiters,
        residual: change,
    })
}

/// Stepping driver holding the state and the per-wall solvers.
#[derive(Debug, Clone)]
pub struct Simulation<'m> {
    model: &'m BuildingModel,
    state: BuildingState,
    solvers: Vec<ImplicitSolver>,
    steps: usize,
}

/// Tolerance and cap of the starting implicit step of the explicit variants.
const BOOTSTRAP_SUBITERS: usize = 200;

impl<'m> Simulation<'m> {
    pub fn new(model: &'m BuildingModel) -> Result<Self> {
        model.validate()?;
        Ok(Simulation {
            model,
            state: model.initial_state(),
            solvers: model
                .walls
                .iter()
                .map(|_| ImplicitSolver::new(model.dt))
                .collect(),
            steps: 0,
        })
    }

    pub fn state(&self) -> &BuildingState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Advances one step. Errors are wrapped with the time the step started.
    pub fn step(&mut self) -> Result<StepReport> {
        let t = self.state.t_star;
        let result = match self.model.scheme {
            SchemeKind::EulerImplicit { eta, max_subiters } => step_implicit(
                self.model,
                &self.state,
                &mut self.solvers,
                eta,
                max_subiters,
            ),
            SchemeKind::DufortFrankel if self.steps == 0 => {
                // η is not set for the explicit variants; use a tight one.
                let eta = 1e-2 * self.model.dt * 1e-2;
                step_implicit(
                    self.model,
                    &self.state,
                    &mut self.solvers,
                    eta,
                    BOOTSTRAP_SUBITERS,
                )
            }
            _ => step_explicit(self.model, &self.state),
        };
        let (mut next, report) = result.map_err(|e| Error::Step {
            t_star: t,
            source: Box::new(e),
        })?;
        self.steps += 1;
        next.t_star = self.steps as f64 * self.model.dt;
        for w in &mut next.walls {
            w.t_star = next.t_star;
        }
        self.state = next;
        Ok(report)
    }
}

/// Recorded state at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t_star: f64,
    /// `(u, v)` profiles per wall.
    pub walls: Vec<(Vec<f64>, Vec<f64>)>,
    pub zones: Vec<ZoneState>,
}

impl Snapshot {
    fn of(state: &BuildingState) -> Self {
        Snapshot {
            t_star: state.t_star,
            walls: state
                .walls
                .iter()
                .map(|w| (w.u_curr.clone(), w.v_curr.clone()))
                .collect(),
            zones: state.zones.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub scheme: SchemeKind,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub reports: Vec<StepReport>,
    /// Seconds for the whole march.
    pub wall_clock: f64,
}

impl SimulationResult {
    /// Mean sub-iterations per step.
    pub fn mean_subiterations(&self) -> f64 {
        if self.reports.is_empty() {
            0.0
        } else {
            self.reports.iter().map(|r| r.subiterations).sum::<usize>() as f64
                / self.reports.len() as f64
        }
    }

    pub fn max_subiterations(&self) -> usize {
        self.reports
            .iter()
            .map(|r| r.subiterations)
            .max()
            .unwrap_or(0)
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("a result always holds the initial snapshot")
    }
}

/// Marches from `t* = 0` to the horizon, recording every `cadence` (rounded
/// to a whole number of steps) and at the final time.
pub fn run(model: &BuildingModel, cadence: f64) -> Result<SimulationResult> {
    run_observed(model, cadence, |_| Ok(()))
}

/// [`run`], handing each snapshot to `observe` as soon as it is recorded, so
/// that a failing run still leaves everything up to the failure behind.
pub fn run_observed(
    model: &BuildingModel,
    cadence: f64,
    mut observe: impl FnMut(&Snapshot) -> Result<()>,
) -> Result<SimulationResult> {
    let start = Instant::now();
    let mut sim = Simulation::new(model)?;
    let every = if cadence > 0.0 {
        ((cadence / model.dt).round() as usize).max(1)
    } else {
        1
    };
    let n = model.n_steps();
    let first = Snapshot::of(sim.state());
    observe(&first)?;
    let mut snapshots = vec![first];
    let mut reports = Vec::with_capacity(n);
    for k in 1..=n {
        reports.push(sim.step()?);
        if k % every == 0 || k == n {
            let s = Snapshot::of(sim.state());
            observe(&s)?;
            snapshots.push(s);
        }
    }
    Ok(SimulationResult {
        scheme: model.scheme,
        dt: model.dt,
        snapshots,
        reports,
        wall_clock: start.elapsed().as_secs_f64(),
    })
}
