//! Time stepping of the dimensionless coupled wall equations
//!
//! ```text
//! c_M* ∂v/∂t = Fo_M ∂x(k_M* ∂x v)
//! c_TT* ∂u/∂t + γ c_TM* ∂v/∂t = Fo_TT ∂x(k_TT* ∂x u) + γ Fo_TM ∂x(k_TM* ∂x v)
//! ```
//!
//! on `x* ∈ [0, 1]` with Robin faces closed by ghost nodes. Three schemes:
//! DuFort–Frankel (three layers, explicit, unconditionally stable), forward
//! Euler and backward Euler with fixed-point refresh of the coefficients.
//!
//! Every scheme advances `v` first and then `u` with the new `v`.

use crate::dimensionless::{Biot, NormalizedCoefficients, WallDimensionless};
use crate::error::{Error, Result};
use crate::materials::CoefficientSet;
use crate::signal::Signal;
use crate::tridiag::Factorized;

/// Uniform grid on `[0, 1]`, nodes at both faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Argument(format!(
                "a wall grid needs at least 3 nodes, got {n}"
            )));
        }
        Ok(Grid1D {
            n,
            dx: 1.0 / (n - 1) as f64,
        })
    }

    /// Grid with spacing `dx`, which must divide 1.
    pub fn from_spacing(dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx <= 0.5) {
            return Err(Error::Argument(format!(
                "Δx* must lie in (0, 0.5], got {dx}"
            )));
        }
        let cells = (1.0 / dx).round();
        if ((cells * dx) - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "Δx* = {dx} does not divide the unit interval"
            )));
        }
        Grid1D::new(cells as usize + 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn position(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.position(j)).collect()
    }
}

/// Two time layers of both fields, as the DuFort–Frankel stencil needs.
/// One-layer schemes only read `*_curr`.
#[derive(Debug, Clone, PartialEq)]
pub struct WallField {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub v_prev: Vec<f64>,
    pub v_curr: Vec<f64>,
    pub t_star: f64,
}

impl WallField {
    /// Uniform initial state; both layers equal.
    pub fn uniform(grid: &Grid1D, u: f64, v: f64) -> Self {
        WallField {
            u_prev: vec![u; grid.n()],
            u_curr: vec![u; grid.n()],
            v_prev: vec![v; grid.n()],
            v_curr: vec![v; grid.n()],
            t_star: 0.0,
        }
    }

    pub fn from_profiles(u: Vec<f64>, v: Vec<f64>, t_star: f64) -> Result<Self> {
        if u.len() != v.len() || u.len() < 3 {
            return Err(Error::Argument(format!(
                "profile lengths {} and {} are not a valid grid",
                u.len(),
                v.len()
            )));
        }
        Ok(WallField {
            u_prev: u.clone(),
            u_curr: u,
            v_prev: v.clone(),
            v_curr: v,
            t_star,
        })
    }

    pub fn len(&self) -> usize {
        self.u_curr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_curr.is_empty()
    }

    /// Shift layers: `curr` becomes `prev`, the new layer becomes `curr`.
    pub fn advance(&self, u_next: Vec<f64>, v_next: Vec<f64>, dt: f64) -> WallField {
        WallField {
            u_prev: self.u_curr.clone(),
            u_curr: u_next,
            v_prev: self.v_curr.clone(),
            v_curr: v_next,
            t_star: self.t_star + dt,
        }
    }

    /// Value of `(u, v)` on face 0 (`x* = 0`) or 1 (`x* = 1`).
    pub fn surface(&self, face: usize) -> (f64, f64) {
        let j = if face == 0 { 0 } else { self.len() - 1 };
        (self.u_curr[j], self.v_curr[j])
    }

    /// Max |value| of the current layer; NaN if any value is NaN.
    pub fn max_abs(&self) -> f64 {
        let (mut m, mut sum) = (0.0f64, 0.0);
        for part in [&self.u_curr, &self.v_curr] {
            for &x in part.iter() {
                let a = x.abs();
                m = if a > m { a } else { m };
                sum += x;
            }
        }
        if sum.is_nan() {
            f64::NAN
        } else {
            m
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u_curr
            .iter()
            .chain(&self.v_curr)
            .all(|x| x.is_finite())
    }
}

/// Ambient state seen by one face at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceState {
    pub u_inf: f64,
    pub v_inf: f64,
    /// Imposed vapour flux g*∞.
    pub g_inf: f64,
    /// Imposed heat flux q*∞.
    pub q_inf: f64,
}

impl FaceState {
    pub fn ambient(u_inf: f64, v_inf: f64) -> Self {
        FaceState {
            u_inf,
            v_inf,
            g_inf: 0.0,
            q_inf: 0.0,
        }
    }
}

/// Forcing of one face as functions of `t*`. The Biot numbers live in
/// [`WallDimensionless::biot`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundarySpec {
    pub u_inf: Signal,
    pub v_inf: Signal,
    pub g_inf: Signal,
    pub q_inf: Signal,
}

impl BoundarySpec {
    pub fn ambient(u_inf: Signal, v_inf: Signal) -> Self {
        BoundarySpec {
            u_inf,
            v_inf,
            g_inf: Signal::zero(),
            q_inf: Signal::zero(),
        }
    }

    pub fn at(&self, t: f64) -> FaceState {
        FaceState {
            u_inf: self.u_inf.at(t),
            v_inf: self.v_inf.at(t),
            g_inf: self.g_inf.at(t),
            q_inf: self.q_inf.at(t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in [&self.u_inf, &self.v_inf, &self.g_inf, &self.q_inf] {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    EulerExplicit,
    EulerImplicit { eta: f64, max_subiters: usize },
    DufortFrankel,
}

impl SchemeKind {
    pub fn implicit(eta: f64, max_subiters: usize) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::Argument(format!(
                "fixed-point tolerance η must be positive, got {eta}"
            )));
        }
        if max_subiters == 0 {
            return Err(Error::Argument("max_subiters must be at least 1".into()));
        }
        Ok(SchemeKind::EulerImplicit { eta, max_subiters })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::EulerExplicit => "euler-explicit",
            SchemeKind::EulerImplicit { .. } => "euler-implicit",
            SchemeKind::DufortFrankel => "df",
        }
    }
}

/// Coefficients on a layer: at nodes and at half-nodes `j + ½`.
enum Layer {
    Unit,
    Table {
        nodes: Vec<CoefficientSet>,
        halves: Vec<CoefficientSet>,
    },
}

impl Layer {
    /// Strict evaluation; half-node values at the midpoint state.
    fn strict(c: &NormalizedCoefficients, u: &[f64], v: &[f64]) -> Result<Layer> {
        if c.is_constant() {
            return Ok(Layer::Unit);
        }
        let at = |j: usize, uu: f64, vv: f64| {
            c.eval(uu, vv).map_err(|e| Error::NodeDomain {
                node: j,
                u: uu,
                v: vv,
                reason: e.to_string(),
            })
        };
        let nodes = (0..u.len())
            .map(|j| at(j, u[j], v[j]))
            .collect::<Result<Vec<_>>>()?;
        let halves = (0..u.len() - 1)
            .map(|j| at(j, 0.5 * (u[j] + u[j + 1]), 0.5 * (v[j] + v[j + 1])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Layer::Table { nodes, halves })
    }

    fn clamped(c: &NormalizedCoefficients, u: &[f64], v: &[f64]) -> Layer {
        if c.is_constant() {
            return Layer::Unit;
        }
        let nodes = (0..u.len()).map(|j| c.eval_clamped(u[j], v[j])).collect();
        let halves = (0..u.len() - 1)
            .map(|j| c.eval_clamped(0.5 * (u[j] + u[j + 1]), 0.5 * (v[j] + v[j + 1])))
            .collect();
        Layer::Table { nodes, halves }
    }

    #[inline]
    fn node(&self, j: usize) -> CoefficientSet {
        match self {
            Layer::Unit => CoefficientSet::ONES,
            Layer::Table { nodes, .. } => nodes[j],
        }
    }

    #[inline]
    fn half(&self, j: usize) -> CoefficientSet {
        match self {
            Layer::Unit => CoefficientSet::ONES,
            Layer::Table { halves, .. } => halves[j],
        }
    }

    /// Half-node coefficients on the (right, left) of node `j`. At a face the
    /// ghost side mirrors the interior one.
    #[inline]
    fn sides(&self, j: usize, n: usize) -> (CoefficientSet, CoefficientSet) {
        if j == 0 {
            let h = self.half(0);
            (h, h)
        } else if j == n - 1 {
            let h = self.half(n - 2);
            (h, h)
        } else {
            (self.half(j), self.half(j - 1))
        }
    }
}

/// Index of the interior neighbour mirrored by the ghost at a face node.
#[inline]
fn mirror(j: usize, n: usize) -> usize {
    if j == 0 {
        1
    } else {
        n - 2
    }
}

#[inline]
fn face_of(j: usize, n: usize) -> Option<usize> {
    if j == 0 {
        Some(0)
    } else if j == n - 1 {
        Some(1)
    } else {
        None
    }
}

/// Ratio `γ Fo_TM / Fo_TT` multiplying the vapour gradient in the heat-flux condition.
#[inline]
fn heat_flux_coupling(p: &WallDimensionless) -> f64 {
    if p.fo_tt > 0.0 {
        p.gamma * p.fo_tm / p.fo_tt
    } else {
        0.0
    }
}

/// Textbook DuFort–Frankel update of every interior node with the boundary
/// nodes held, for `u_t = ν u_xx` and `λ = 2νΔt/Δx²`. Applied to `u` and `v`.
///
/// ```
/// use hygrosim::wall_solver::{df_step_linear, WallField};
/// let mut f = WallField::from_profiles(vec![0.0, 1.0, 0.0], vec![0.0; 3], 0.0).unwrap();
/// f.u_prev = vec![0.0; 3];
/// let next = df_step_linear(&f, 0.5);
/// assert_eq!(next.u_curr[1], 0.0);
/// ```
pub fn df_step_linear(field: &WallField, lambda: f64) -> WallField {
    let step = |prev: &[f64], curr: &[f64]| {
        let n = curr.len();
        let mut next = curr.to_vec();
        let a = (1.0 - lambda) / (1.0 + lambda);
        let b = lambda / (1.0 + lambda);
        for j in 1..n - 1 {
            next[j] = a * prev[j] + b * (curr[j + 1] + curr[j - 1]);
        }
        next
    };
    let u = step(&field.u_prev, &field.u_curr);
    let v = step(&field.v_prev, &field.v_curr);
    let dt = 0.0;
    field.advance(u, v, dt)
}

/// DuFort–Frankel step of the coupled problem with frozen (unit) coefficients,
/// written with `λ = 2Fo_MΔt/Δx²`, `μ = 2Fo_TTΔt/Δx²`, `β = 2γFo_TMΔt/Δx²`.
/// Face forcing is taken from `faces` (the layer-n values).
pub fn df_step_coupled(
    field: &WallField,
    p: &WallDimensionless,
    faces: &[FaceState; 2],
    dt: f64,
) -> WallField {
    let n = field.len();
    let dx = 1.0 / (n - 1) as f64;
    let h2 = dx * dx;
    let lambda = 2.0 * p.fo_m * dt / h2;
    let mu = 2.0 * p.fo_tt * dt / h2;
    let beta = 2.0 * p.fo_tm * p.gamma * dt / h2;
    let gamma = p.gamma;
    let ratio = heat_flux_coupling(p);
    let (u0, u1) = (&field.u_prev, &field.u_curr);
    let (v0, v1) = (&field.v_prev, &field.v_curr);

    let mut v = vec![0.0; n];
    for j in 1..n - 1 {
        v[j] = ((1.0 - lambda) * v0[j] + lambda * (v1[j + 1] + v1[j - 1])) / (1.0 + lambda);
    }
    for (j, side) in [(0, 0), (n - 1, 1)] {
        let m = mirror(j, n);
        let bi = p.biot[side].m;
        let f = &faces[side];
        v[j] = ((1.0 - lambda - lambda * dx * bi) * v0[j]
            + lambda * (2.0 * v1[m] + 2.0 * dx * (bi * f.v_inf + f.g_inf)))
            / (1.0 + lambda + lambda * dx * bi);
    }

    let mut u = vec![0.0; n];
    for j in 1..n - 1 {
        u[j] = ((1.0 - mu) * u0[j]
            + mu * (u1[j + 1] + u1[j - 1])
            + (gamma - beta) * v0[j]
            + beta * (v1[j + 1] + v1[j - 1])
            - (gamma + beta) * v[j])
            / (1.0 + mu);
    }
    for (j, side) in [(0, 0), (n - 1, 1)] {
        let m = mirror(j, n);
        let Biot {
            m: bi_m,
            tt: bi_tt,
            tm: bi_tm,
        } = p.biot[side];
        let f = &faces[side];
        let v_mean = 0.5 * (v[j] + v0[j]);
        let v_ghost = v1[m] - 2.0 * dx * (bi_m * (v_mean - f.v_inf) - f.g_inf);
        u[j] = ((1.0 - mu - mu * dx * bi_tt) * u0[j]
            + mu * (2.0 * u1[m] + ratio * (v1[m] - v_ghost) + 2.0 * dx * bi_tt * f.u_inf
                - 2.0 * dx * bi_tm * (v_mean - f.v_inf)
                + 2.0 * dx * f.q_inf)
            + (gamma - beta) * v0[j]
            + beta * (v1[m] + v_ghost)
            - (gamma + beta) * v[j])
            / (1.0 + mu + mu * dx * bi_tt);
    }
    field.advance(u, v, dt)
}

/// DuFort–Frankel node update `x` solving
/// `x(1 + r(kr+kl)/2 − r·g) = (1 − r(kr+kl)/2)·w_old + r(kr·w_r + kl·w_l) + extra`,
/// where `g` is the coefficient of `x` carried by a ghost neighbour.
#[inline]
fn df_node(
    w_old: f64,
    r: f64,
    kr: f64,
    w_r: f64,
    kl: f64,
    w_l: f64,
    ghost_slope: f64,
    extra: f64,
) -> f64 {
    let s = 0.5 * r * (kr + kl);
    ((1.0 - s) * w_old + r * (kr * w_r + kl * w_l) + extra) / (1.0 + s - r * ghost_slope)
}

fn df_general(
    field: &WallField,
    p: &WallDimensionless,
    faces: &[FaceState; 2],
    dt: f64,
    c: &Layer,
) -> WallField {
    let n = field.len();
    let dx = 1.0 / (n - 1) as f64;
    let h2 = dx * dx;
    let ratio = heat_flux_coupling(p);
    let (u_old, u_n) = (&field.u_prev, &field.u_curr);
    let (v_old, v_n) = (&field.v_prev, &field.v_curr);

    let mut v = vec![0.0; n];
    for j in 0..n {
        let cj = c.node(j);
        let (hr, hl) = c.sides(j, n);
        let r = 2.0 * dt * p.fo_m / (cj.c_m * h2);
        v[j] = match face_of(j, n) {
            None => df_node(
                v_old[j],
                r,
                hr.k_m,
                v_n[j + 1],
                hl.k_m,
                v_n[j - 1],
                0.0,
                0.0,
            ),
            Some(side) => {
                // ghost = a + b·x with the face average (x + v_old)/2
                let bi = p.biot[side].m;
                let f = &faces[side];
                let k = cj.k_m;
                let a =
                    v_n[mirror(j, n)] - 2.0 * dx / k * (bi * (0.5 * v_old[j] - f.v_inf) - f.g_inf);
                let b = -dx / k * bi;
                df_node(
                    v_old[j],
                    r,
                    hr.k_m,
                    v_n[mirror(j, n)],
                    hl.k_m,
                    a,
                    hl.k_m * b,
                    0.0,
                )
            }
        };
    }

    let mut u = vec![0.0; n];
    for j in 0..n {
        let cj = c.node(j);
        let (hr, hl) = c.sides(j, n);
        let r = 2.0 * dt * p.fo_tt / (cj.c_tt * h2);
        let sigma = 2.0 * dt * p.gamma * p.fo_tm / (cj.c_tt * h2);
        let storage = p.gamma * cj.c_tm / cj.c_tt;
        let v_mean = 0.5 * (v[j] + v_old[j]);
        let (v_r, v_l) = match face_of(j, n) {
            None => (v_n[j + 1], v_n[j - 1]),
            Some(side) => {
                let bi = p.biot[side].m;
                let f = &faces[side];
                let v_m = v_n[mirror(j, n)];
                (
                    v_m,
                    v_m - 2.0 * dx / cj.k_m * (bi * (v_mean - f.v_inf) - f.g_inf),
                )
            }
        };
        let extra = sigma * (hr.k_tm * (v_r - v_mean) - hl.k_tm * (v_mean - v_l))
            - storage * (v[j] - v_old[j]);
        u[j] = match face_of(j, n) {
            None => df_node(
                u_old[j],
                r,
                hr.k_tt,
                u_n[j + 1],
                hl.k_tt,
                u_n[j - 1],
                0.0,
                extra,
            ),
            Some(side) => {
                let Biot {
                    tt: bi_tt,
                    tm: bi_tm,
                    ..
                } = p.biot[side];
                let f = &faces[side];
                let k = cj.k_tt;
                let u_m = u_n[mirror(j, n)];
                let a = u_m + ratio * cj.k_tm / k * (v_r - v_l)
                    - 2.0 * dx / k
                        * (bi_tt * (0.5 * u_old[j] - f.u_inf) + bi_tm * (v_mean - f.v_inf)
                            - f.q_inf);
                let b = -dx / k * bi_tt;
                df_node(u_old[j], r, hr.k_tt, u_m, hl.k_tt, a, hl.k_tt * b, extra)
            }
        };
    }
    field.advance(u, v, dt)
}

/// DuFort–Frankel step with state-dependent coefficients frozen at layer n:
/// nodes at the node state, half-nodes at the midpoint state. No iteration.
pub fn df_step_nonlinear(
    field: &WallField,
    p: &WallDimensionless,
    faces: &[FaceState; 2],
    dt: f64,
) -> Result<WallField> {
    let c = Layer::strict(&p.coefficients, &field.u_curr, &field.v_curr)?;
    Ok(df_general(field, p, faces, dt, &c))
}

/// Forward Euler with every spatial term at layer n. Coefficients are taken
/// at the nearest admissible state so that an unstable step diverges visibly
/// instead of stopping on a domain error.
pub fn euler_explicit_step(
    field: &WallField,
    p: &WallDimensionless,
    faces: &[FaceState; 2],
    dt: f64,
) -> WallField {
    let n = field.len();
    let dx = 1.0 / (n - 1) as f64;
    let h2 = dx * dx;
    let ratio = heat_flux_coupling(p);
    let (u_n, v_n) = (&field.u_curr, &field.v_curr);
    let c = Layer::clamped(&p.coefficients, u_n, v_n);

    let mut v_ghost = [0.0; 2];
    let mut v = vec![0.0; n];
    for j in 0..n {
        let cj = c.node(j);
        let (hr, hl) = c.sides(j, n);
        let (w_r, w_l) = match face_of(j, n) {
            None => (v_n[j + 1], v_n[j - 1]),
            Some(side) => {
                let f = &faces[side];
                let g = v_n[mirror(j, n)]
                    - 2.0 * dx / cj.k_m * (p.biot[side].m * (v_n[j] - f.v_inf) - f.g_inf);
                v_ghost[side] = g;
                (v_n[mirror(j, n)], g)
            }
        };
        v[j] = v_n[j]
            + dt * p.fo_m / (cj.c_m * h2) * (hr.k_m * (w_r - v_n[j]) - hl.k_m * (v_n[j] - w_l));
    }

    let mut u = vec![0.0; n];
    for j in 0..n {
        let cj = c.node(j);
        let (hr, hl) = c.sides(j, n);
        let ((u_r, u_l), (v_r, v_l)) = match face_of(j, n) {
            None => ((u_n[j + 1], u_n[j - 1]), (v_n[j + 1], v_n[j - 1])),
            Some(side) => {
                let Biot {
                    tt: bi_tt,
                    tm: bi_tm,
                    ..
                } = p.biot[side];
                let f = &faces[side];
                let m = mirror(j, n);
                let vg = v_ghost[side];
                let ug = u_n[m] + ratio * cj.k_tm / cj.k_tt * (v_n[m] - vg)
                    - 2.0 * dx / cj.k_tt
                        * (bi_tt * (u_n[j] - f.u_inf) + bi_tm * (v_n[j] - f.v_inf) - f.q_inf);
                ((u_n[m], ug), (v_n[m], vg))
            }
        };
        let heat = p.fo_tt * (hr.k_tt * (u_r - u_n[j]) - hl.k_tt * (u_n[j] - u_l));
        let cross = p.gamma * p.fo_tm * (hr.k_tm * (v_r - v_n[j]) - hl.k_tm * (v_n[j] - v_l));
        u[j] = u_n[j] + dt / (cj.c_tt * h2) * (heat + cross)
            - p.gamma * cj.c_tm / cj.c_tt * (v[j] - v_n[j]);
    }
    field.advance(u, v, dt)
}

/// Backward-Euler solver for one wall: one call to [`ImplicitSolver::pass`]
/// solves both tridiagonal systems with coefficients taken at a given iterate.
/// Constant-coefficient matrices are factorised once and reused.
#[derive(Debug, Clone)]
pub struct ImplicitSolver {
    dt: f64,
    cached: Option<(Factorized, Factorized)>,
    rhs: Vec<f64>,
}

impl ImplicitSolver {
    pub fn new(dt: f64) -> Self {
        ImplicitSolver {
            dt,
            cached: None,
            rhs: Vec::new(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Solves for layer n+1 from layer n (`u_n`, `v_n`), with coefficients
    /// at the iterate (`u_it`, `v_it`) and face forcing `faces` (layer n+1).
    #[allow(clippy::too_many_arguments)]
    pub fn pass(
        &mut self,
        p: &WallDimensionless,
        u_n: &[f64],
        v_n: &[f64],
        u_it: &[f64],
        v_it: &[f64],
        faces: &[FaceState; 2],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut u = vec![0.0; u_n.len()];
        let mut v = vec![0.0; u_n.len()];
        self.pass_into(p, u_n, v_n, u_it, v_it, faces, &mut u, &mut v)?;
        Ok((u, v))
    }

    /// [`Self::pass`] writing into `u_out` and `v_out`.
    #[allow(clippy::too_many_arguments)]
    pub fn pass_into(
        &mut self,
        p: &WallDimensionless,
        u_n: &[f64],
        v_n: &[f64],
        u_it: &[f64],
        v_it: &[f64],
        faces: &[FaceState; 2],
        u_out: &mut [f64],
        v_out: &mut [f64],
    ) -> Result<()> {
        if p.coefficients.is_constant() && self.cached.is_some() {
            return self.pass_unit(p, u_n, v_n, faces, u_out, v_out);
        }
        let c = Layer::strict(&p.coefficients, u_it, v_it)?;
        let (u, v) = self.pass_with(&c, p, u_n, v_n, faces)?;
        u_out.copy_from_slice(&u);
        v_out.copy_from_slice(&v);
        Ok(())
    }

    fn pass_with(
        &mut self,
        c: &Layer,
        p: &WallDimensionless,
        u_n: &[f64],
        v_n: &[f64],
        faces: &[FaceState; 2],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = u_n.len();
        let dx = 1.0 / (n - 1) as f64;
        let h2 = dx * dx;
        let dt = self.dt;
        let ratio = heat_flux_coupling(p);

        let build = |heat: bool| -> Result<Factorized> {
            let mut lower = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for j in 0..n {
                let cj = c.node(j);
                let (hr, hl) = c.sides(j, n);
                let (s, kr, kl, k_face) = if heat {
                    (dt * p.fo_tt / (cj.c_tt * h2), hr.k_tt, hl.k_tt, cj.k_tt)
                } else {
                    (dt * p.fo_m / (cj.c_m * h2), hr.k_m, hl.k_m, cj.k_m)
                };
                let bi = |b: &Biot| if heat { b.tt } else { b.m };
                diag[j] = 1.0 + s * (kr + kl);
                match face_of(j, n) {
                    None => {
                        lower[j] = -s * kl;
                        upper[j] = -s * kr;
                    }
                    Some(side) => {
                        // Ghost = mirror − (2Δx/k)·Bi·x + (terms in the rhs).
                        diag[j] += s * kl * 2.0 * dx * bi(&p.biot[side]) / k_face;
                        if side == 0 {
                            upper[j] = -s * (kr + kl);
                        } else {
                            lower[j] = -s * (kr + kl);
                        }
                    }
                }
            }
            Factorized::new(&lower, &diag, &upper)
        };

        let fresh;
        let (mv, mu) = if c_is_unit(c) {
            if self.cached.is_none() {
                self.cached = Some((build(false)?, build(true)?));
            }
            let (a, b) = self.cached.as_ref().expect("cached factorisation");
            (a, b)
        } else {
            fresh = (build(false)?, build(true)?);
            (&fresh.0, &fresh.1)
        };

        let mut rhs = vec![0.0; n];
        for j in 0..n {
            rhs[j] = v_n[j];
            if let Some(side) = face_of(j, n) {
                let cj = c.node(j);
                let (_, hl) = c.sides(j, n);
                let s = dt * p.fo_m / (cj.c_m * h2);
                let f = &faces[side];
                rhs[j] += s * hl.k_m * 2.0 * dx / cj.k_m * (p.biot[side].m * f.v_inf + f.g_inf);
            }
        }
        let mut v = vec![0.0; n];
        mv.solve_into(&rhs, &mut v);

        for j in 0..n {
            let cj = c.node(j);
            let (hr, hl) = c.sides(j, n);
            let cross = dt * p.gamma * p.fo_tm / (cj.c_tt * h2);
            let storage = p.gamma * cj.c_tm / cj.c_tt;
            let (v_r, v_l) = match face_of(j, n) {
                None => (v[j + 1], v[j - 1]),
                Some(side) => {
                    let f = &faces[side];
                    let vm = v[mirror(j, n)];
                    (
                        vm,
                        vm - 2.0 * dx / cj.k_m * (p.biot[side].m * (v[j] - f.v_inf) - f.g_inf),
                    )
                }
            };
            rhs[j] = u_n[j] - storage * (v[j] - v_n[j])
                + cross * (hr.k_tm * (v_r - v[j]) - hl.k_tm * (v[j] - v_l));
            if let Some(side) = face_of(j, n) {
                let Biot {
                    tt: bi_tt,
                    tm: bi_tm,
                    ..
                } = p.biot[side];
                let f = &faces[side];
                let s = dt * p.fo_tt / (cj.c_tt * h2);
                // Ghost = mirror + shift − (2Δx/k_TT)·Bi_TT·x.
                let shift = ratio * cj.k_tm / cj.k_tt * (v_r - v_l)
                    - 2.0 * dx / cj.k_tt * (-bi_tt * f.u_inf + bi_tm * (v[j] - f.v_inf) - f.q_inf);
                rhs[j] += s * hl.k_tt * shift;
            }
        }
        let mut u = vec![0.0; n];
        mu.solve_into(&rhs, &mut u);
        Ok((u, v))
    }

    /// [`Self::pass_with`] specialised to unit coefficients (factorisations
    /// already cached), where every stencil weight is a constant.
    fn pass_unit(
        &mut self,
        p: &WallDimensionless,
        u_n: &[f64],
        v_n: &[f64],
        faces: &[FaceState; 2],
        u: &mut [f64],
        v: &mut [f64],
    ) -> Result<()> {
        let n = u_n.len();
        let dx = 1.0 / (n - 1) as f64;
        let h2 = dx * dx;
        let dt = self.dt;
        let ratio = heat_flux_coupling(p);
        let s_m = dt * p.fo_m / h2;
        let s_tt = dt * p.fo_tt / h2;
        let cross = dt * p.gamma * p.fo_tm / h2;
        let storage = p.gamma;
        let (mv, mu) = self.cached.as_ref().expect("cached factorisation");
        let rhs = &mut self.rhs;
        rhs.clear();
        rhs.extend_from_slice(v_n);
        for (side, j) in [(0, 0), (1, n - 1)] {
            let f = &faces[side];
            rhs[j] += s_m * 2.0 * dx * (p.biot[side].m * f.v_inf + f.g_inf);
        }
        mv.solve_into(rhs, v);

        for (((r, w), un), vn) in rhs[1..n - 1]
            .iter_mut()
            .zip(v.windows(3))
            .zip(&u_n[1..n - 1])
            .zip(&v_n[1..n - 1])
        {
            *r = un - storage * (w[1] - vn) + cross * (w[2] - 2.0 * w[1] + w[0]);
        }
        for (side, j) in [(0, 0), (1, n - 1)] {
            let f = &faces[side];
            let Biot {
                m: bi_m,
                tt: bi_tt,
                tm: bi_tm,
            } = p.biot[side];
            let vm = v[mirror(j, n)];
            let (v_r, v_l) = (vm, vm - 2.0 * dx * (bi_m * (v[j] - f.v_inf) - f.g_inf));
            rhs[j] = u_n[j] - storage * (v[j] - v_n[j]) + cross * ((v_r - v[j]) - (v[j] - v_l));
            let shift = ratio * (v_r - v_l)
                - 2.0 * dx * (-bi_tt * f.u_inf + bi_tm * (v[j] - f.v_inf) - f.q_inf);
            rhs[j] += s_tt * shift;
        }
        mu.solve_into(rhs, u);
        Ok(())
    }
}

fn c_is_unit(c: &Layer) -> bool {
    matches!(c, Layer::Unit)
}

/// Max-norm distance between two profiles.
/// Infinite if any difference is NaN.
pub fn max_change(a: &[f64], b: &[f64]) -> f64 {
    let (mut m, mut sum) = (0.0f64, 0.0);
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        m = if d > m { d } else { m };
        sum += d;
    }
    if sum.is_nan() {
        f64::INFINITY
    } else {
        m
    }
}

/// Backward-Euler step with fixed-point refresh of the coefficients.
/// Returns the new field and the number of linear solves performed.
pub fn euler_implicit_step(
    field: &WallField,
    p: &WallDimensionless,
    faces: &[FaceState; 2],
    dt: f64,
    eta: f64,
    max_subiters: usize,
) -> Result<(WallField, usize)> {
    if !(eta > 0.0) || max_subiters == 0 {
        return Err(Error::Argument(format!(
            "need η > 0 and max_subiters ≥ 1 (got {eta}, {max_subiters})"
        )));
    }
    let mut solver = ImplicitSolver::new(dt);
    let mut u_it = field.u_curr.clone();
    let mut v_it = field.v_curr.clone();
    for k in 1..=max_subiters {
        let (u, v) = solver.pass(p, &field.u_curr, &field.v_curr, &u_it, &v_it, faces)?;
        let change = max_change(&u, &u_it).max(max_change(&v, &v_it));
        u_it = u;
        v_it = v;
        if p.coefficients.is_constant() || change < eta {
            return Ok((field.advance(u_it, v_it, dt), k));
        }
        if k == max_subiters {
            return Err(Error::Convergence {
                subiterations: k,
                residual: change,
            });
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Produces the second starting layer the three-layer scheme needs, with one
/// backward-Euler step. `faces` is the forcing at `t* = Δt*`.
pub fn bootstrap_first_layer(
    field: &WallField,
    p: &WallDimensionless,
    faces: &[FaceState; 2],
    dt: f64,
    eta: f64,
    max_subiters: usize,
) -> Result<WallField> {
    euler_implicit_step(field, p, faces, dt, eta, max_subiters).map(|(f, _)| f)
}

/// Stability bounds of the forward-Euler scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflLimit {
    pub dt_heat: f64,
    pub dt_moisture: f64,
}

impl CflLimit {
    /// The binding bound.
    pub fn dt(&self) -> f64 {
        self.dt_heat.min(self.dt_moisture)
    }
}

/// `Δx²/2 · min` over the sample states of the heat and moisture stability
/// ratios. The cross term is `c_TT*/(γ Fo_TM k_TM*)`: γ multiplies every
/// vapour term of the heat equation.
pub fn cfl_limit(p: &WallDimensionless, dx: f64, samples: &[(f64, f64)]) -> Result<CflLimit> {
    if samples.is_empty() {
        return Err(Error::Argument(
            "CFL estimate needs at least one state sample".into(),
        ));
    }
    if !(dx > 0.0) {
        return Err(Error::Argument(format!("Δx* must be positive, got {dx}")));
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    let mut heat = f64::INFINITY;
    let mut moisture = f64::INFINITY;
    for &(u, v) in samples {
        let c = p.coefficients.eval(u, v)?;
        heat = heat
            .min(ratio(c.c_tt, p.fo_tt * c.k_tt))
            .min(ratio(c.c_tt, p.gamma * p.fo_tm * c.k_tm))
            .min(ratio(c.c_tt * c.c_m, c.c_tm * p.gamma * p.fo_m * c.k_m));
        moisture = moisture.min(ratio(c.c_m, p.fo_m * c.k_m));
    }
    let half = 0.5 * dx * dx;
    Ok(CflLimit {
        dt_heat: half * heat,
        dt_moisture: half * moisture,
    })
}

/// 3×3 grid over `[u_lo, u_hi] × [v_lo, v_hi]`.
pub fn cfl_samples(u: (f64, f64), v: (f64, f64)) -> Vec<(f64, f64)> {
    let pts = |(lo, hi): (f64, f64)| [lo, 0.5 * (lo + hi), hi];
    pts(u)
        .iter()
        .flat_map(|&a| pts(v).map(move |b| (a, b)))
        .collect()
}

/// One step of `scheme` for a standalone wall. For the three-layer scheme a
/// field whose two layers coincide is first bootstrapped; `faces_n` and
/// `faces_next` are the forcing at `t*` and `t* + Δt*`.
pub fn step(
    scheme: SchemeKind,
    field: &WallField,
    p: &WallDimensionless,
    faces_n: &[FaceState; 2],
    faces_next: &[FaceState; 2],
    dt: f64,
) -> Result<(WallField, usize)> {
    match scheme {
        SchemeKind::EulerExplicit => Ok((euler_explicit_step(field, p, faces_n, dt), 0)),
        SchemeKind::EulerImplicit { eta, max_subiters } => {
            euler_implicit_step(field, p, faces_next, dt, eta, max_subiters)
        }
        SchemeKind::DufortFrankel => {
            if p.coefficients.is_constant() {
                Ok((df_step_coupled(field, p, faces_n, dt), 0))
            } else {
                Ok((df_step_nonlinear(field, p, faces_n, dt)?, 0))
            }
        }
    }
}
