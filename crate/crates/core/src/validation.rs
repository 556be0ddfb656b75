//! Error metrics against a fine-grid reference, and convergence studies.
//!
//! All errors are max-norm differences of the dimensionless fields, sampled
//! at nodes and times shared by both runs (the grids are nested, so no
//! interpolation is involved).

use std::io::Write;
use std::thread;

use crate::building::{run, BuildingModel, SimulationResult, Snapshot};
use crate::error::{Error, Result};
use crate::wall_solver::{Grid1D, SchemeKind};
use crate::zone_model::ZoneState;

/// Sup-norm error over space–time, and its profiles in `x*` and `t*`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    pub eps_global: f64,
    /// `ε(x) = sup_t |·|` per node; empty for lumped (zone) quantities.
    pub eps_of_x: Vec<f64>,
    /// `ε(t) = sup_x |·|` per compared time.
    pub eps_of_t: Vec<f64>,
}

impl ErrorReport {
    /// From samples indexed `[time][node]`.
    pub fn from_samples(num: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<Self> {
        if num.len() != reference.len() || num.is_empty() {
            return Err(Error::Argument(format!(
                "cannot compare {} sampled times against {}",
                num.len(),
                reference.len()
            )));
        }
        let width = num[0].len();
        if num.iter().chain(reference).any(|row| row.len() != width) {
            return Err(Error::Argument(
                "sampled profiles have different lengths".into(),
            ));
        }
        let mut eps_of_x = vec![0.0f64; width];
        let mut eps_of_t = Vec::with_capacity(num.len());
        for (a, b) in num.iter().zip(reference) {
            let mut sup = 0.0f64;
            for (j, (x, y)) in a.iter().zip(b).enumerate() {
                let d = abs_diff(*x, *y);
                sup = sup.max(d);
                eps_of_x[j] = eps_of_x[j].max(d);
            }
            eps_of_t.push(sup);
        }
        let eps_global = eps_of_t.iter().copied().fold(0.0, f64::max);
        Ok(ErrorReport {
            eps_global,
            eps_of_x,
            eps_of_t,
        })
    }

    /// The same metric for a scalar series (no space profile).
    pub fn from_series(num: &[f64], reference: &[f64]) -> Result<Self> {
        let a: Vec<Vec<f64>> = num.iter().map(|x| vec![*x]).collect();
        let b: Vec<Vec<f64>> = reference.iter().map(|x| vec![*x]).collect();
        let mut r = ErrorReport::from_samples(&a, &b)?;
        r.eps_of_x.clear();
        Ok(r)
    }
}

/// NaN compares as infinitely wrong.
fn abs_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

/// Errors of every wall field and zone of a building run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BuildingErrors {
    /// Compared times.
    pub times: Vec<f64>,
    /// Per wall: `[u, v]`.
    pub walls: Vec<[ErrorReport; 2]>,
    /// Per zone: `[u_a, v_a]`.
    pub zones: Vec<[ErrorReport; 2]>,
    pub eps_global: f64,
}

impl BuildingErrors {
    /// Largest error over the wall fields only.
    pub fn eps_walls(&self) -> f64 {
        self.walls
            .iter()
            .flatten()
            .map(|r| r.eps_global)
            .fold(0.0, f64::max)
    }

    /// Largest error over the zone states only.
    pub fn eps_zones(&self) -> f64 {
        self.zones
            .iter()
            .flatten()
            .map(|r| r.eps_global)
            .fold(0.0, f64::max)
    }
}

/// A fine implicit run used as the oracle, with its self-check.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub result: SimulationResult,
    pub space_factor: usize,
    pub time_factor: usize,
    /// Estimated max-norm change of the reference under a further 2× time
    /// refinement.
    pub richardson_delta: f64,
}

/// How the reference is built from fine implicit runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceKind {
    /// The implicit run at the fine step; the check runs again at half that
    /// step and measures the change.
    Plain,
    /// Richardson extrapolation `2 u(h) − u(2h)` of the first-order implicit
    /// runs, which is second order in time. The check compares it with the
    /// same extrapolation one level coarser (`2 u(2h) − u(4h)`): for a
    /// second-order quantity the change under a further halving is a quarter
    /// of that difference.
    #[default]
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    pub space_factor: usize,
    pub time_factor: usize,
    /// Recording interval in `t*`; compared runs must record at the same times.
    pub cadence: f64,
    /// Fixed-point tolerance; defaults to `1e-2` times each run's step.
    pub eta: Option<f64>,
    pub kind: ReferenceKind,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions {
            space_factor: 4,
            time_factor: 16,
            cadence: 0.1,
            eta: None,
            kind: ReferenceKind::Extrapolated,
        }
    }
}

/// `model` refined in space and switched to implicit Euler at step `dt`.
pub fn refined_model(
    model: &BuildingModel,
    space_factor: usize,
    dt: f64,
    eta: Option<f64>,
) -> Result<BuildingModel> {
    let mut fine = model.clone();
    for w in &mut fine.walls {
        w.grid = Grid1D::new((w.grid.n() - 1) * space_factor + 1)?;
    }
    fine.dt = dt;
    fine.scheme = SchemeKind::implicit(eta.unwrap_or(1e-2 * dt), 500)?;
    Ok(fine)
}

/// Runs at the fine space grid and the time steps `dts`, concurrently.
fn fine_runs(
    model: &BuildingModel,
    opts: &ReferenceOptions,
    dts: &[f64],
) -> Result<Vec<SimulationResult>> {
    let dt_ref = model.dt / opts.time_factor as f64;
    let models = dts
        .iter()
        .map(|&dt| {
            refined_model(
                model,
                opts.space_factor,
                dt,
                opts.eta.map(|e| e * dt / dt_ref),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<SimulationResult>> = thread::scope(|s| {
        let handles: Vec<_> = models
            .iter()
            .map(|m| s.spawn(move || run(m, opts.cadence)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("reference run panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// `2a − b` on the records `a` and `b` share.
fn extrapolate(a: &SimulationResult, b: &SimulationResult) -> Result<SimulationResult> {
    let mut out = a.clone();
    let mut k = 0;
    out.snapshots.clear();
    for sa in &a.snapshots {
        let tol = 1e-9 * sa.t_star.abs().max(1.0);
        while k < b.snapshots.len() && b.snapshots[k].t_star < sa.t_star - tol {
            k += 1;
        }
        let Some(sb) = b
            .snapshots
            .get(k)
            .filter(|sb| (sb.t_star - sa.t_star).abs() <= tol)
        else {
            continue;
        };
        let comb = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .map(|(x, y)| 2.0 * x - y)
                .collect::<Vec<_>>()
        };
        out.snapshots.push(Snapshot {
            t_star: sa.t_star,
            walls: sa
                .walls
                .iter()
                .zip(&sb.walls)
                .map(|(p, q)| (comb(&p.0, &q.0), comb(&p.1, &q.1)))
                .collect(),
            zones: sa
                .zones
                .iter()
                .zip(&sb.zones)
                .map(|(p, q)| ZoneState::new(2.0 * p.u_a - q.u_a, 2.0 * p.v_a - q.v_a))
                .collect(),
        });
    }
    if out.snapshots.is_empty() {
        return Err(Error::Argument("runs share no record times".into()));
    }
    Ok(out)
}

/// Builds the oracle for runs at `model.dt` on `model`'s grids.
pub fn compute_reference(
    model: &BuildingModel,
    opts: &ReferenceOptions,
) -> Result<ReferenceSolution> {
    if opts.space_factor < 4 || opts.time_factor < 16 {
        return Err(Error::Argument(format!(
            "reference must be at least 4× finer in space and 16× in time (got {}×, {}×)",
            opts.space_factor, opts.time_factor
        )));
    }
    let h = model.dt / opts.time_factor as f64;
    let (result, richardson_delta) = match opts.kind {
        ReferenceKind::Plain => {
            let mut runs = fine_runs(model, opts, &[h, h / 2.0])?.into_iter();
            let (fine, finer) = (
                runs.next().expect("two runs"),
                runs.next().expect("two runs"),
            );
            let delta = linf_snapshots(&finer.snapshots, &fine.snapshots, 1)?.eps_global;
            (fine, delta)
        }
        ReferenceKind::Extrapolated => {
            let mut runs = fine_runs(model, opts, &[h, 2.0 * h, 4.0 * h])?.into_iter();
            let (u1, u2, u4) = (
                runs.next().expect("three runs"),
                runs.next().expect("three runs"),
                runs.next().expect("three runs"),
            );
            let r1 = extrapolate(&u1, &u2)?;
            let r2 = extrapolate(&u2, &u4)?;
            let delta = linf_snapshots(&r2.snapshots, &r1.snapshots, 1)?.eps_global / 4.0;
            (r1, delta)
        }
    };
    Ok(ReferenceSolution {
        result,
        space_factor: opts.space_factor,
        time_factor: opts.time_factor,
        richardson_delta,
    })
}

impl ReferenceSolution {
    /// Fails when the reference is not an order of magnitude more accurate
    /// than the error it is asked to measure.
    pub fn check(&self, measured: f64) -> Result<()> {
        if !(self.richardson_delta < 0.1 * measured) {
            return Err(Error::ReferenceQuality {
                delta: self.richardson_delta,
                measured,
            });
        }
        Ok(())
    }
}

/// Errors of `num` against `reference` on shared times and nodes. `stride`
/// is the node ratio of the nested grids.
fn linf_snapshots(
    num: &[Snapshot],
    reference: &[Snapshot],
    stride: usize,
) -> Result<BuildingErrors> {
    let mut pairs = Vec::with_capacity(num.len());
    let mut k = 0;
    for a in num {
        let tol = 1e-9 * a.t_star.abs().max(1.0);
        while k < reference.len() && reference[k].t_star < a.t_star - tol {
            k += 1;
        }
        match reference.get(k) {
            Some(b) if (b.t_star - a.t_star).abs() <= tol => pairs.push((a, b)),
            _ => {
                return Err(Error::Argument(format!(
                    "reference has no record at t* = {} (incompatible domains)",
                    a.t_star
                )))
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Argument("nothing to compare".into()));
    }
    let (a0, b0) = pairs[0];
    if a0.walls.len() != b0.walls.len() || a0.zones.len() != b0.zones.len() {
        return Err(Error::Argument(
            "runs have different walls or zones (incompatible domains)".into(),
        ));
    }
    let mut walls = Vec::with_capacity(a0.walls.len());
    for i in 0..a0.walls.len() {
        let (n_num, n_ref) = (a0.walls[i].0.len(), b0.walls[i].0.len());
        if (n_num - 1) * stride != n_ref - 1 {
            return Err(Error::Argument(format!(
                "wall {i}: grids of {n_num} and {n_ref} nodes are not nested by {stride} (incompatible domains)"
            )));
        }
        let field = |pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> Result<ErrorReport> {
            let x: Vec<Vec<f64>> = pairs
                .iter()
                .map(|(a, _)| pick(&a.walls[i]).clone())
                .collect();
            let y: Vec<Vec<f64>> = pairs
                .iter()
                .map(|(_, b)| pick(&b.walls[i]).iter().step_by(stride).copied().collect())
                .collect();
            ErrorReport::from_samples(&x, &y)
        };
        walls.push([field(|w| &w.0)?, field(|w| &w.1)?]);
    }
    let mut zones = Vec::with_capacity(a0.zones.len());
    for z in 0..a0.zones.len() {
        let series = |f: fn(&crate::zone_model::ZoneState) -> f64| -> Result<ErrorReport> {
            let x: Vec<f64> = pairs.iter().map(|(a, _)| f(&a.zones[z])).collect();
            let y: Vec<f64> = pairs.iter().map(|(_, b)| f(&b.zones[z])).collect();
            ErrorReport::from_series(&x, &y)
        };
        zones.push([series(|s| s.u_a)?, series(|s| s.v_a)?]);
    }
    let eps_global = walls
        .iter()
        .chain(&zones)
        .flatten()
        .map(|r| r.eps_global)
        .fold(0.0, f64::max);
    Ok(BuildingErrors {
        times: pairs.iter().map(|(a, _)| a.t_star).collect(),
        walls,
        zones,
        eps_global,
    })
}

/// Errors of a run against the reference, at every record of the run.
pub fn linf_errors(
    run: &SimulationResult,
    reference: &ReferenceSolution,
) -> Result<BuildingErrors> {
    linf_snapshots(
        &run.snapshots,
        &reference.result.snapshots,
        reference.space_factor,
    )
}

/// [`linf_errors`] followed by the reference self-check.
pub fn assess(run: &SimulationResult, reference: &ReferenceSolution) -> Result<BuildingErrors> {
    let errors = linf_errors(run, reference)?;
    reference.check(errors.eps_global)?;
    Ok(errors)
}

/// Errors of two runs on identical grids.
pub fn compare_runs(a: &SimulationResult, b: &SimulationResult) -> Result<BuildingErrors> {
    linf_snapshots(&a.snapshots, &b.snapshots, 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub dt_star: f64,
    pub eps_global: f64,
    /// The run blew up, or its error exceeds 1.
    pub divergent: bool,
    /// Used in the slope fit.
    pub in_slope_region: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub scheme: SchemeKind,
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of `log ε` against `log Δt*` over the slope region.
    pub slope: Option<f64>,
}

impl ConvergenceStudy {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dt_star", "scheme", "eps_global", "slope_region"])?;
        for r in &self.rows {
            w.write_record([
                format!("{:e}", r.dt_star),
                self.scheme.name().to_string(),
                format!("{:e}", r.eps_global),
                r.in_slope_region.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits the slope of `(dt, ε)` after dropping divergent points and the error
/// floor: the smallest-dt points whose slope to the next point is below 0.5.
/// Returns the slope and the membership flags (in input order).
pub fn fit_slope(points: &[(f64, f64, bool)]) -> (Option<f64>, Vec<bool>) {
    let mut idx: Vec<usize> = (0..points.len())
        .filter(|&i| !points[i].2 && points[i].1 > 0.0 && points[i].1.is_finite())
        .collect();
    idx.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0));
    let pair_slope = |a: usize, b: usize| {
        (points[b].1.ln() - points[a].1.ln()) / (points[b].0.ln() - points[a].0.ln())
    };
    while idx.len() >= 2 && pair_slope(idx[0], idx[1]) < 0.5 {
        idx.remove(0);
    }
    let mut flags = vec![false; points.len()];
    if idx.len() < 2 {
        return (None, flags);
    }
    for &i in &idx {
        flags[i] = true;
    }
    let xs: Vec<f64> = idx.iter().map(|&i| points[i].0.ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| points[i].1.ln()).collect();
    (Some(least_squares_slope(&xs, &ys)), flags)
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs `scheme` at every `dt` (concurrently) and measures each against one
/// reference computed from the smallest `dt`. `cadence` must be a multiple of
/// every `dt`.
pub fn convergence_study(
    model: &BuildingModel,
    scheme: SchemeKind,
    dt_list: &[f64],
    opts: &ReferenceOptions,
) -> Result<ConvergenceStudy> {
    let (lo, hi) = dt_list
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if dt_list.len() < 4 || hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(Error::Argument(format!(
            "a convergence study needs at least 4 time steps spanning 2 decades (got {} over {:.2} decades)",
            dt_list.len(),
            (hi / lo).log10()
        )));
    }
    let mut base = model.clone();
    base.dt = lo;
    let reference = compute_reference(&base, opts)?;
    let results: Vec<Result<SimulationResult>> = thread::scope(|s| {
        let handles: Vec<_> = dt_list
            .iter()
            .map(|&dt| {
                let mut m = model.clone();
                m.dt = dt;
                m.scheme = scheme;
                s.spawn(move || run(&m, opts.cadence))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("study run panicked"))
            .collect()
    });
    let mut points = Vec::with_capacity(dt_list.len());
    for (&dt, r) in dt_list.iter().zip(results) {
        let (eps, divergent) = match r {
            Ok(res) => {
                let e = linf_errors(&res, &reference)?.eps_global;
                (e, !(e <= 1.0))
            }
            Err(e) if e.is_numerical() => (f64::INFINITY, true),
            Err(e) => return Err(e),
        };
        points.push((dt, eps, divergent));
    }
    let (slope, flags) = fit_slope(&points);
    let rows = points
        .iter()
        .zip(flags)
        .map(
            |(&(dt_star, eps_global, divergent), in_slope_region)| StudyRow {
                dt_star,
                eps_global,
                divergent,
                in_slope_region,
            },
        )
        .collect();
    Ok(ConvergenceStudy {
        scheme,
        rows,
        slope,
    })
}

/// A wall with unit coefficients, zero-flux faces and no coupling, whose
/// field `1 + A e^{−ν k t} cos(πx)` is known in closed form, both for the PDE
/// (`k = π²`) and for the three-point discretisation (`k = (2 − 2cos πΔx)/Δx²`).
pub mod cosine_mode {
    use std::f64::consts::PI;

    use crate::building::{BuildingModel, ExteriorFace, FaceContact, WallInitial, WallModel};
    use crate::dimensionless::{Biot, Reference, WallDimensionless};
    use crate::error::Result;
    use crate::signal::Signal;
    use crate::wall_solver::{Grid1D, SchemeKind};

    pub const AMPLITUDE: f64 = 0.1;

    fn initial(x: f64) -> (f64, f64) {
        let c = AMPLITUDE * (PI * x).cos();
        (1.0 + c, 1.0 + c)
    }

    /// Diffusivity `nu` for both fields.
    pub fn model(
        nu: f64,
        nodes: usize,
        dt: f64,
        horizon: f64,
        scheme: SchemeKind,
    ) -> Result<BuildingModel> {
        let params = WallDimensionless::linear(nu, nu, 0.0, 0.0, [Biot::default(); 2]);
        let wall = WallModel {
            name: "cosine".into(),
            grid: Grid1D::new(nodes)?,
            params,
            faces: [
                FaceContact::Exterior(ExteriorFace::default()),
                FaceContact::Exterior(ExteriorFace::default()),
            ],
            initial: WallInitial::Profile(initial),
        };
        Ok(BuildingModel {
            reference: Reference::from_humidity(293.15, 0.5, 3600.0)?,
            walls: vec![wall],
            zones: vec![],
            zone_initial: vec![],
            exterior_u: Signal::constant(1.0),
            exterior_v: Signal::constant(1.0),
            scheme,
            dt,
            horizon,
        })
    }

    /// The PDE solution.
    pub fn exact(nu: f64, x: f64, t: f64) -> f64 {
        1.0 + AMPLITUDE * (-nu * PI * PI * t).exp() * (PI * x).cos()
    }

    /// The exact solution of the space-discretised system on `nodes` nodes.
    pub fn semi_discrete(nu: f64, nodes: usize, x: f64, t: f64) -> f64 {
        let dx = 1.0 / (nodes - 1) as f64;
        let k = (2.0 - 2.0 * (PI * dx).cos()) / (dx * dx);
        1.0 + AMPLITUDE * (-nu * k * t).exp() * (PI * x).cos()
    }
}

/// Error of a single-wall run against a closed form `f(x, t)`, over both
/// fields and every record.
pub fn error_against(
    result: &SimulationResult,
    f: impl Fn(f64, f64) -> f64,
) -> Result<ErrorReport> {
    let mut num = Vec::new();
    let mut exact = Vec::new();
    for s in &result.snapshots {
        let (u, v) = s
            .walls
            .first()
            .ok_or_else(|| Error::Argument("run has no wall".into()))?;
        let n = u.len();
        let x = |j: usize| j as f64 / (n - 1) as f64;
        num.push(u.iter().chain(v).copied().collect::<Vec<_>>());
        exact.push(
            (0..n)
                .chain(0..n)
                .map(|j| f(x(j), s.t_star))
                .collect::<Vec<_>>(),
        );
    }
    ErrorReport::from_samples(&num, &exact)
}
