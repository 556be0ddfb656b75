#![allow(dead_code)]

use std::f64::consts::PI;

use hygrosim::dimensionless::{scale_wall, Biot, Convective, Reference, ScalingContext, WallCoefficients, WallDimensionless};
use hygrosim::materials::{CoefficientSet, MaterialModel, PhysicalConstants};
use hygrosim::wall_solver::{FaceState, WallField};

/// A building at rest: every ambient value, wall and zone at the reference
/// state, no sources. Mixes nonlinear and constant walls, ventilation,
/// interzone exchange and radiation so that every term is exercised.
pub const EQUILIBRIUM: &str = r#"
name = "equilibrium"

[scaling]
T_i = 293.15
phi_i = 0.5
t_0 = 3600.0

[numerics]
scheme = "df"
dx_star = 0.05
dt_star = 1e-3
horizon = 0.05
cadence = 0.01

[exterior]
u_inf = { kind = "constant", value = 1.0 }
v_inf = { kind = "constant", value = 1.0 }

[materials.load_bearing]
kind = "load_bearing"

[materials.brick]
kind = "constant"
c_M = 6.09e-2
k_M = 5.47e-9
c_TT = 8.61e5
k_TT = 0.387
c_TM = 5.09e3
k_TM = 1.53e-2

[[walls]]
name = "outer1"
material = "load_bearing"
thickness = 0.1
area = 18.0
x0 = { contact = "exterior", h_T = 25.0, h_M = 2e-7 }
x1 = { contact = "zone", zone = "a", h_T = 8.0, h_M = 3e-8, emissivity = 0.9 }

[[walls]]
name = "partition"
material = "brick"
thickness = 0.1
area = 12.0
x0 = { contact = "zone", zone = "a", h_T = 8.0, h_M = 3e-8, emissivity = 0.5 }
x1 = { contact = "zone", zone = "b", h_T = 8.0, h_M = 3e-8, emissivity = 0.5 }

[[walls]]
name = "outer2"
material = "load_bearing"
thickness = 0.1
area = 9.0
x0 = { contact = "exterior", h_T = 12.0, h_M = 4e-7 }
x1 = { contact = "zone", zone = "b", h_T = 8.0, h_M = 3e-8, emissivity = 0.7 }

[[zones]]
name = "a"
volume = 54.0
ventilation_ach = 0.5
interzone = [{ zone = "b", ach = 0.3 }]
radiation = { view_factor = 0.2 }

[[zones]]
name = "b"
volume = 40.0
ventilation_ach = 1.0
interzone = [{ zone = "a", ach = 0.3 }]
radiation = { view_factor = 0.3 }
"#;

pub fn coupled_params() -> WallDimensionless {
    WallDimensionless::linear(
        1.0,
        1.0,
        1.0,
        0.1,
        [Biot { m: 2.0, tt: 3.0, tm: 0.5 }, Biot { m: 0.7, tt: 1.5, tm: 0.2 }],
    )
}

pub fn material_params() -> WallDimensionless {
    let r = Reference::from_humidity(293.15, 0.5, 3600.0).unwrap();
    let m = WallCoefficients::Material(MaterialModel::load_bearing());
    let ctx = ScalingContext::for_wall(r, 0.1, &m).unwrap();
    let h = [Convective { h_t: 25.0, h_m: 2e-7 }, Convective { h_t: 8.0, h_m: 3e-8 }];
    scale_wall(&m, h, &ctx, &PhysicalConstants::LOAD_BEARING).unwrap()
}

pub fn forcing() -> [FaceState; 2] {
    [
        FaceState { u_inf: 1.1, v_inf: 0.8, g_inf: 0.05, q_inf: -0.02 },
        FaceState { u_inf: 0.95, v_inf: 1.2, g_inf: 0.0, q_inf: 0.01 },
    ]
}

/// Two distinct layers of smooth profiles of size `amp` around 1.
pub fn sinusoidal(n: usize, amp: f64) -> WallField {
    let x = |j: usize| j as f64 / (n - 1) as f64;
    WallField {
        u_prev: (0..n).map(|j| 1.0 + amp * (PI * x(j)).sin()).collect(),
        u_curr: (0..n).map(|j| 1.0 + 1.2 * amp * (PI * x(j)).sin()).collect(),
        v_prev: (0..n).map(|j| 1.0 + 2.0 * amp * (2.0 * PI * x(j)).cos()).collect(),
        v_curr: (0..n).map(|j| 1.0 + 1.8 * amp * (2.0 * PI * x(j)).cos()).collect(),
        t_star: 0.0,
    }
}

/// Straight transcription of the three-layer update with explicit ghost
/// values. The node unknown enters its own residual affinely, so it is found
/// from two trial evaluations instead of by algebra.
pub fn df_oracle(
    field: &WallField,
    p: &WallDimensionless,
    f: &[FaceState; 2],
    dt: f64,
    c: &dyn Fn(f64, f64) -> CoefficientSet,
) -> (Vec<f64>, Vec<f64>) {
    let n = field.len();
    let dx = 1.0 / (n - 1) as f64;
    let (uo, un, vo, vn) = (&field.u_prev, &field.u_curr, &field.v_prev, &field.v_curr);
    let node = |j: usize| c(un[j], vn[j]);
    let half = |j: usize| c((un[j] + un[j + 1]) / 2.0, (vn[j] + vn[j + 1]) / 2.0);
    let ks = |j: usize| {
        if j == 0 {
            (half(0), half(0))
        } else if j == n - 1 {
            (half(n - 2), half(n - 2))
        } else {
            (half(j), half(j - 1))
        }
    };
    let nb = |w: &[f64], j: usize, ghost: f64| {
        if j == 0 {
            (w[1], ghost)
        } else if j == n - 1 {
            (ghost, w[n - 2])
        } else {
            (w[j + 1], w[j - 1])
        }
    };
    let side = |j: usize| usize::from(j != 0);
    let inner = |j: usize| if j == 0 { 1 } else { n - 2 };
    let edge = |j: usize| j == 0 || j == n - 1;

    let v_res = |j: usize, x: f64| {
        let cj = node(j);
        let (kr, kl) = ks(j);
        let mean = (x + vo[j]) / 2.0;
        let ghost = if edge(j) {
            let s = side(j);
            vn[inner(j)] - 2.0 * dx / cj.k_m * (p.biot[s].m * (mean - f[s].v_inf) - f[s].g_inf)
        } else {
            0.0
        };
        let (wr, wl) = nb(vn, j, ghost);
        cj.c_m * (x - vo[j]) / (2.0 * dt) - p.fo_m / (dx * dx) * (kr.k_m * (wr - mean) - kl.k_m * (mean - wl))
    };
    let solve = |res: &dyn Fn(f64) -> f64| {
        let (r0, r1) = (res(0.0), res(1.0));
        -r0 / (r1 - r0)
    };
    let v: Vec<f64> = (0..n).map(|j| solve(&|x| v_res(j, x))).collect();
    let u_res = |j: usize, x: f64| {
        let cj = node(j);
        let (kr, kl) = ks(j);
        let vm = (v[j] + vo[j]) / 2.0;
        let um = (x + uo[j]) / 2.0;
        let (ug, vg) = if edge(j) {
            let s = side(j);
            let m = inner(j);
            let vg = vn[m] - 2.0 * dx / cj.k_m * (p.biot[s].m * (vm - f[s].v_inf) - f[s].g_inf);
            let ug = un[m] + p.gamma * p.fo_tm / p.fo_tt * cj.k_tm / cj.k_tt * (vn[m] - vg)
                - 2.0 * dx / cj.k_tt
                    * (p.biot[s].tt * (um - f[s].u_inf) + p.biot[s].tm * (vm - f[s].v_inf) - f[s].q_inf);
            (ug, vg)
        } else {
            (0.0, 0.0)
        };
        let (ur, ul) = nb(un, j, ug);
        let (vr, vl) = nb(vn, j, vg);
        cj.c_tt * (x - uo[j]) / (2.0 * dt) + p.gamma * cj.c_tm * (v[j] - vo[j]) / (2.0 * dt)
            - p.fo_tt / (dx * dx) * (kr.k_tt * (ur - um) - kl.k_tt * (um - ul))
            - p.gamma * p.fo_tm / (dx * dx) * (kr.k_tm * (vr - vm) - kl.k_tm * (vm - vl))
    };
    let u: Vec<f64> = (0..n).map(|j| solve(&|x| u_res(j, x))).collect();
    (u, v)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
