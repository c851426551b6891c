//! Explicit fields: pure jumps, clock transitions across a wall, vortices,
//! glued composites and point samples of smooth maps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{Domain, Point, Region, UnitVec};
use crate::lattice::{project_clock, ClockField, ClockParams, Lattice, SpinField};

/// An oriented line through `point` with unit normal `normal`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub point: Point,
    pub normal: UnitVec,
}

impl Wall {
    /// The vertical line `x₁ = x` with normal `e₁`.
    pub fn vertical(x: f64) -> Self {
        Wall { point: Point::new(x, 0.0), normal: UnitVec::ONE }
    }

    /// Signed distance `(p − point)·ν`.
    pub fn side(&self, p: Point) -> f64 {
        (p - self.point).dot(self.normal.as_point())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    pub v1: UnitVec,
    pub v2: UnitVec,
    pub wall: Wall,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VortexSpec {
    pub center: Point,
    pub degree: i32,
    #[serde(default = "one")]
    pub alpha: UnitVec,
}

fn one() -> UnitVec {
    UnitVec::ONE
}

impl VortexSpec {
    pub fn new(center: Point, degree: i32, alpha: UnitVec) -> Result<Self> {
        if degree == 0 {
            return invalid("vortex degree must be nonzero");
        }
        Ok(VortexSpec { center, degree, alpha })
    }

    /// `α ⊙ ((x − x₀)/|x − x₀|)^d`, and `α` at the center.
    pub fn value(&self, x: Point) -> UnitVec {
        let q = x - self.center;
        if q.norm() < 1e-12 {
            return self.alpha;
        }
        let r = UnitVec::normalize(q.x, q.y).unwrap_or(UnitVec::ONE);
        self.alpha.rotate(r.powi(self.degree))
    }
}

/// `v₁` where `(εi − p)·ν ≤ 0`, `v₂` elsewhere.
pub fn pure_jump_field(l: &Arc<Lattice>, s: &JumpSpec) -> SpinField {
    SpinField::from_fn(l.clone(), |p| if s.wall.side(p) <= 0.0 { s.v1 } else { s.v2 })
}

/// Shortest signed index path from `k1` to `k2`; a half-turn goes counterclockwise.
pub fn clock_arc(c: ClockParams, k1: u32, k2: u32) -> i64 {
    let n = c.n() as i64;
    let d = (k2 as i64 - k1 as i64).rem_euclid(n);
    if 2 * d <= n {
        d
    } else {
        d - n
    }
}

/// Clock transition from `v₁` to `v₂` across an axis-aligned wall.
///
/// Sites with `(εi − p)·ν ≤ 0` take `v₁`. The site columns `c = 1, 2, …` with
/// `(c−1)ε < (εi − p)·ν ≤ cε` advance by one clock step per column along the
/// shortest arc until `v₂` is reached after `|Δk|` columns, so the strip has
/// width `η = |φ₁ − φ₂| ε/θ`.
pub fn transition_field(l: &Arc<Lattice>, s: &JumpSpec, clock: ClockParams) -> Result<ClockField> {
    let (Some(k1), Some(k2)) = (clock.index_of(s.v1), clock.index_of(s.v2)) else {
        return invalid(format!("wall values are not clock values for N = {}", clock.n()));
    };
    let nrm = s.wall.normal;
    let axis = nrm.x().abs().max(nrm.y().abs());
    if (axis - 1.0).abs() > 1e-12 {
        return invalid("transition wall must be axis-aligned");
    }
    let steps = clock_arc(clock, k1, k2);
    let n = clock.n() as i64;
    let eps = l.eps();
    let indices = (0..l.len())
        .map(|k| {
            let t = s.wall.side(l.position(k)) / eps;
            let col = (t - 1e-9).ceil().max(0.0) as i64;
            let adv = steps.signum() * col.min(steps.abs());
            (k1 as i64 + adv).rem_euclid(n) as u32
        })
        .collect();
    ClockField::new(l.clone(), clock, indices)
}

pub fn vortex_field(l: &Arc<Lattice>, s: &VortexSpec) -> SpinField {
    SpinField::from_fn(l.clone(), |p| s.value(p))
}

/// Site-wise product of several vortex fields.
pub fn vortex_product_field(l: &Arc<Lattice>, vs: &[VortexSpec]) -> SpinField {
    SpinField::from_fn(l.clone(), |p| vs.iter().fold(UnitVec::ONE, |acc, v| acc.rotate(v.value(p))))
}

/// Vortex values inside each open ball `B_{r_h}(x_h)`, `background` elsewhere.
pub fn composite_field(vortices: &[VortexSpec], background: &SpinField, radii: &[f64]) -> Result<SpinField> {
    if vortices.len() != radii.len() {
        return invalid(format!("{} vortices but {} radii", vortices.len(), radii.len()));
    }
    let l = background.lattice();
    let domain = l.domain();
    for (h, (v, &r)) in vortices.iter().zip(radii).enumerate() {
        if !(r > 0.0) {
            return invalid(format!("ball radius {r} must be positive"));
        }
        if domain.boundary_dist(v.center) < r {
            return invalid(format!("ball around {} leaves the domain", v.center));
        }
        for (w, &s) in vortices[..h].iter().zip(radii) {
            if v.center.dist(w.center) < r + s {
                return invalid(format!("balls around {} and {} overlap", v.center, w.center));
            }
        }
    }
    let mut out = background.clone();
    for k in 0..l.len() {
        let p = l.position(k);
        if let Some(v) = vortices.iter().zip(radii).find(|(v, &r)| p.dist(v.center) < r) {
            out.set(k, v.0.value(p));
        }
    }
    Ok(out)
}

/// `f(εi + shift)` at every site; `f` must return unit vectors.
pub fn sample_smooth(l: &Arc<Lattice>, f: impl Fn(Point) -> (f64, f64), shift: Point) -> Result<SpinField> {
    let values = (0..l.len())
        .map(|k| {
            let (x, y) = f(l.position(k) + shift);
            UnitVec::new(x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    SpinField::new(l.clone(), values)
}

/// A field recipe, as read from JSON by the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    Constant {
        value: UnitVec,
    },
    Jump(JumpSpec),
    /// Needs a clock; `v1` and `v2` must be clock values.
    Transition(JumpSpec),
    Vortex {
        vortices: Vec<VortexSpec>,
    },
    Composite {
        vortices: Vec<VortexSpec>,
        radii: Vec<f64>,
        background: Box<Construction>,
    },
    /// Site-wise product of the factors.
    Product {
        factors: Vec<Construction>,
    },
}

/// Domain, spacing, optional clock and recipe of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub domain: Domain,
    pub eps: f64,
    /// Clock size; the built field is projected onto `S_ε` when present.
    #[serde(default)]
    pub n: Option<u32>,
    pub construction: Construction,
}

/// A built field: unconstrained or clock-valued.
#[derive(Clone, Debug)]
pub enum AnyField {
    Spin(SpinField),
    Clock(ClockField),
}

impl AnyField {
    pub fn lattice(&self) -> &Arc<Lattice> {
        match self {
            AnyField::Spin(u) => u.lattice(),
            AnyField::Clock(u) => u.lattice(),
        }
    }

    pub fn spin(&self) -> SpinField {
        match self {
            AnyField::Spin(u) => u.clone(),
            AnyField::Clock(u) => u.embed(),
        }
    }
}

impl Construction {
    fn build_spin(&self, l: &Arc<Lattice>, clock: Option<ClockParams>) -> Result<SpinField> {
        Ok(match self {
            Construction::Constant { value } => SpinField::constant(l.clone(), *value),
            Construction::Jump(s) => pure_jump_field(l, s),
            Construction::Transition(s) => {
                let Some(c) = clock else {
                    return invalid("a transition needs a clock size n");
                };
                transition_field(l, s, c)?.embed()
            }
            Construction::Vortex { vortices } => {
                for v in vortices {
                    VortexSpec::new(v.center, v.degree, v.alpha)?;
                }
                vortex_product_field(l, vortices)
            }
            Construction::Composite { vortices, radii, background } => {
                composite_field(vortices, &background.build_spin(l, clock)?, radii)?
            }
            Construction::Product { factors } => {
                let mut acc = SpinField::constant(l.clone(), UnitVec::ONE);
                for f in factors {
                    let g = f.build_spin(l, clock)?;
                    for k in 0..l.len() {
                        acc.set(k, acc.value(k).rotate(g.value(k)));
                    }
                }
                acc
            }
        })
    }
}

impl FieldSpec {
    pub fn build(&self) -> Result<AnyField> {
        let l = Arc::new(Lattice::new(self.domain, self.eps)?);
        let clock = self.n.map(ClockParams::new).transpose()?;
        if let (Construction::Transition(s), Some(c)) = (&self.construction, clock) {
            return Ok(AnyField::Clock(transition_field(&l, s, c)?));
        }
        let u = self.construction.build_spin(&l, clock)?;
        Ok(match clock {
            Some(c) => AnyField::Clock(project_clock(&u, c)),
            None => AnyField::Spin(u),
        })
    }
}

/// Sites inside `region`, as a predicate helper for seam measurements.
pub fn sites_in(l: &Lattice, region: &dyn Region) -> Vec<usize> {
    (0..l.len()).filter(|&k| region.contains(l.position(k))).collect()
}
