//! Browser bindings: each export takes plain numbers or JSON and returns JSON.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use xyclock::constructions::{transition_field, vortex_product_field, JumpSpec, VortexSpec, Wall};
use xyclock::energy::{clock_energy, EnergyReport};
use xyclock::lattice::project_clock;
use xyclock::minimization::{core_energy, core_options};
use xyclock::render::render_svg;
use xyclock::vorticity::vorticity_measure;
use xyclock::{ClockParams, Domain, Lattice, Point, Result, UnitVec, VortexMeasure};

/// Spacing below which the page refuses to compute.
pub const FINEST_EPS: f64 = 1.0 / 128.0;

fn check_eps(eps: f64) -> Result<()> {
    if !(FINEST_EPS..=0.5).contains(&eps) {
        return Err(xyclock::Error::InvalidArgument(format!("eps must lie in [1/128, 1/2], got {eps}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct FieldView {
    svg: String,
    measure: VortexMeasure,
    energy: EnergyReport,
}

/// Vortices `[{center:{x,y}, degree}]` in the unit disk, projected onto `n` clock values.
pub fn field_view_json(eps: f64, n: u32, vortices: &str) -> Result<String> {
    check_eps(eps)?;
    let vs: Vec<VortexSpec> = serde_json::from_str(vortices)?;
    for v in &vs {
        VortexSpec::new(v.center, v.degree, v.alpha)?;
    }
    let l = Arc::new(Lattice::new(Domain::unit_disk(), eps)?);
    let u = project_clock(&vortex_product_field(&l, &vs), ClockParams::new(n)?);
    let measure = vorticity_measure(&u)?;
    let view =
        FieldView { svg: render_svg(&u.embed(), Some(&measure)), energy: EnergyReport::for_clock(&u, None), measure };
    Ok(serde_json::to_string(&view)?)
}

#[derive(Serialize)]
struct JumpRow {
    eps: f64,
    n: u32,
    theta: f64,
    scaled: f64,
    limit: f64,
}

/// Quarter-turn transition across `x₁ = 1/2` in the unit square with `θ ≈ ε^a`.
pub fn jump_energy_json(eps: f64, a: f64) -> Result<String> {
    check_eps(eps)?;
    if !(a > 0.0 && a < 1.0) {
        return Err(xyclock::Error::InvalidArgument(format!("exponent must lie in (0,1), got {a}")));
    }
    let mut c = ClockParams::from_theta_target(eps.powf(a))?;
    while c.n() % 4 != 0 {
        c = ClockParams::new(c.n() + 1)?;
    }
    let l = Arc::new(Lattice::new(Domain::unit_square(), eps)?);
    let s = JumpSpec { v1: UnitVec::ONE, v2: UnitVec::I, wall: Wall::vertical(0.5) };
    let u = transition_field(&l, &s, c)?;
    let raw = clock_energy(&u, None);
    let row = JumpRow { eps, n: c.n(), theta: c.theta(), scaled: raw / (eps * c.theta()), limit: FRAC_PI_2 };
    Ok(serde_json::to_string(&row)?)
}

#[derive(Serialize)]
struct CoreRow {
    eps: f64,
    gamma: f64,
    g: f64,
    sweeps: usize,
    converged: bool,
}

/// Relaxed degree-one vortex in `B₁(center)` with radial boundary data.
pub fn core_energy_json(eps: f64, cx: f64, cy: f64) -> Result<String> {
    check_eps(eps)?;
    if cx.hypot(cy) > 0.5 {
        return Err(xyclock::Error::InvalidArgument("center offset must be at most 1/2".into()));
    }
    let c = core_energy(eps, 1.0, Point::new(cx, cy), &core_options(eps, 1.0))?;
    let row = CoreRow {
        eps,
        gamma: c.gamma,
        g: c.gamma - TAU * (1.0 / eps).ln(),
        sweeps: c.result.iterations,
        converged: c.result.converged,
    };
    Ok(serde_json::to_string(&row)?)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = fieldView)]
pub fn field_view(eps: f64, n: u32, vortices: &str) -> std::result::Result<String, JsError> {
    js(field_view_json(eps, n, vortices))
}

#[wasm_bindgen(js_name = jumpEnergy)]
pub fn jump_energy(eps: f64, a: f64) -> std::result::Result<String, JsError> {
    js(jump_energy_json(eps, a))
}

#[wasm_bindgen(js_name = coreEnergy)]
pub fn core_energy_js(eps: f64, cx: f64, cy: f64) -> std::result::Result<String, JsError> {
    js(core_energy_json(eps, cx, cy))
}
