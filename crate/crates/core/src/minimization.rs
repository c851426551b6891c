//! Relaxation of S¹-valued lattice fields, core energy of a lattice vortex,
//! the harmonic correction `R₀`, the renormalized energy `𝕎` and the
//! discrete minimum `m̃(η, μ)` outside small balls around the vortices.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constructions::VortexSpec;
use crate::error::{invalid, Error, Result};
use crate::geometry::{Domain, Point, UnitVec};
use crate::lattice::{Lattice, SpinField, STEPS};
use crate::pairwise_sum;
use crate::vorticity::VortexMeasure;

const NONE: u32 = u32::MAX;

/// Prescribed values on a set of sites.
#[derive(Clone, Debug, Default)]
pub struct BoundaryCondition {
    pub fixed: Vec<(usize, UnitVec)>,
}

impl BoundaryCondition {
    pub fn new(l: &Lattice, fixed: Vec<(usize, UnitVec)>) -> Result<Self> {
        if let Some(&(k, _)) = fixed.iter().find(|(k, _)| *k >= l.len()) {
            return invalid(format!("fixed site {k} is not a lattice site"));
        }
        Ok(BoundaryCondition { fixed })
    }

    /// Fixes `sites` to `f(εi)`.
    pub fn from_fn(l: &Lattice, sites: &[usize], f: impl Fn(Point) -> UnitVec) -> Result<Self> {
        BoundaryCondition::new(l, sites.iter().map(|&k| (k, f(l.position(k)))).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    /// Stop once the largest angular update of a sweep is below `tol` radians.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Angular over-relaxation factor in `(0, 2)`; 1 sets each site to the
    /// normalized neighbor sum.
    pub omega: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions { tol: 1e-10, max_sweeps: 200_000, omega: 1.0 }
    }
}

impl RelaxOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return invalid(format!("tolerance must be positive, got {}", self.tol));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return invalid(format!("relaxation factor must lie in (0, 2), got {}", self.omega));
        }
        Ok(())
    }

    /// Over-relaxation factor `2/(1 + sin(π/n))` for a problem `n` sites across.
    pub fn sor_omega(n: f64) -> f64 {
        2.0 / (1.0 + (PI / n.max(2.0)).sin())
    }
}

#[derive(Clone, Debug)]
pub struct MinimizationResult {
    pub field: SpinField,
    /// Discrete Dirichlet energy `Σ |u(εi) − u(εj)|²` of `field`.
    pub energy: f64,
    pub iterations: usize,
    /// Largest angular update of the last sweep.
    pub residual: f64,
    pub converged: bool,
    /// Energy after each sweep.
    pub history: Vec<f64>,
}

/// Checkerboard coordinate descent on a subset of lattice sites.
struct Solver {
    xs: Vec<f64>,
    ys: Vec<f64>,
    nbrs: Vec<[u32; 4]>,
    free: [Vec<u32>; 2],
    bonds: Vec<(u32, u32)>,
}

impl Solver {
    /// `active[k]`: site takes part at all. `fixed[k]`: site is not updated.
    /// Bonds between two fixed sites are dropped when `fixed_bonds` is false.
    fn new(u: &SpinField, active: &[bool], fixed: &[bool], fixed_bonds: bool) -> Self {
        let l = u.lattice();
        let n = l.len();
        let mut nbrs = vec![[NONE; 4]; n];
        let mut free = [Vec::new(), Vec::new()];
        let mut bonds = Vec::new();
        for k in 0..n {
            if !active[k] {
                continue;
            }
            for (d, st) in STEPS.iter().enumerate() {
                if let Some(m) = l.neighbor(k, *st) {
                    if active[m] && (fixed_bonds || !(fixed[k] && fixed[m])) {
                        nbrs[k][d] = m as u32;
                        if d < 2 {
                            bonds.push((k as u32, m as u32));
                        }
                    }
                }
            }
            if !fixed[k] {
                let [i, j] = l.site(k);
                free[(i + j).rem_euclid(2) as usize].push(k as u32);
            }
        }
        Solver {
            xs: u.values().iter().map(|v| v.x()).collect(),
            ys: u.values().iter().map(|v| v.y()).collect(),
            nbrs,
            free,
            bonds,
        }
    }

    fn set(&mut self, k: usize, v: UnitVec) {
        self.xs[k] = v.x();
        self.ys[k] = v.y();
    }

    fn value(&self, k: usize) -> UnitVec {
        UnitVec::normalize(self.xs[k], self.ys[k]).unwrap_or(UnitVec::ONE)
    }

    fn energy(&self) -> f64 {
        let terms: Vec<f64> = self
            .bonds
            .iter()
            .map(|&(a, b)| {
                let dx = self.xs[a as usize] - self.xs[b as usize];
                let dy = self.ys[a as usize] - self.ys[b as usize];
                dx * dx + dy * dy
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// One red-black sweep; returns the largest angular update.
    fn sweep(&mut self, omega: f64) -> f64 {
        let mut res = 0.0f64;
        for color in 0..2 {
            for idx in 0..self.free[color].len() {
                let k = self.free[color][idx] as usize;
                let (mut sx, mut sy) = (0.0, 0.0);
                for &m in &self.nbrs[k] {
                    if m != NONE {
                        sx += self.xs[m as usize];
                        sy += self.ys[m as usize];
                    }
                }
                let s = sx.hypot(sy);
                if s < 1e-300 {
                    continue;
                }
                let (tx, ty) = (sx / s, sy / s);
                let (ux, uy) = (self.xs[k], self.ys[k]);
                let delta = (ux * ty - uy * tx).atan2(ux * tx + uy * ty);
                res = res.max((omega * delta).abs());
                if omega == 1.0 {
                    self.xs[k] = tx;
                    self.ys[k] = ty;
                } else {
                    let (sn, cs) = (omega * delta).sin_cos();
                    let nx = ux * cs - uy * sn;
                    let ny = ux * sn + uy * cs;
                    let r = nx.hypot(ny);
                    self.xs[k] = nx / r;
                    self.ys[k] = ny / r;
                }
            }
        }
        res
    }

    fn field(&self, l: &Arc<Lattice>) -> SpinField {
        let values = (0..self.xs.len()).map(|k| self.value(k)).collect();
        SpinField::new(l.clone(), values).expect("one value per site")
    }

    fn has_free(&self) -> bool {
        !self.free[0].is_empty() || !self.free[1].is_empty()
    }
}

/// Minimizes `Σ |u(εi) − u(εj)|²` over the free sites by checkerboard
/// coordinate descent with angular over-relaxation. Each update rotates `u`
/// toward the normalized neighbor sum by `ω` times their angle, so the energy
/// never increases for `ω ∈ (0, 2)`.
pub fn relax(u0: &SpinField, bc: &BoundaryCondition, opts: &RelaxOptions) -> Result<MinimizationResult> {
    opts.check()?;
    let l = u0.lattice();
    let mut u = u0.clone();
    let mut fixed = vec![false; l.len()];
    for &(k, v) in &bc.fixed {
        if k >= l.len() {
            return invalid(format!("fixed site {k} is not a lattice site"));
        }
        fixed[k] = true;
        u.set(k, v);
    }
    let active = vec![true; l.len()];
    let mut s = Solver::new(&u, &active, &fixed, true);
    run(&mut s, l, opts, |_| {})
}

fn run(
    s: &mut Solver,
    l: &Arc<Lattice>,
    opts: &RelaxOptions,
    mut after_sweep: impl FnMut(&mut Solver),
) -> Result<MinimizationResult> {
    let mut history = Vec::new();
    let mut residual = 0.0;
    let mut iterations = 0;
    let mut converged = !s.has_free();
    while !converged && iterations < opts.max_sweeps {
        residual = s.sweep(opts.omega);
        after_sweep(s);
        iterations += 1;
        history.push(s.energy());
        converged = residual < opts.tol;
    }
    let energy = s.energy();
    Ok(MinimizationResult { field: s.field(l), energy, iterations, residual, converged, history })
}

/// `γ_{x₀}(ε, r)` with its minimizer.
#[derive(Clone, Debug)]
pub struct CoreEnergy {
    pub eps: f64,
    pub r: f64,
    pub center: Point,
    pub gamma: f64,
    pub result: MinimizationResult,
}

/// Minimal `(1/ε²)·XY_ε` on `εZ² ∩ B_r(x₀)` with `v = (x−x₀)/|x−x₀|` on the
/// discrete boundary, started from the vortex field. A site at `x₀` is free
/// and starts at `(1, 0)`.
pub fn core_energy(eps: f64, r: f64, center: Point, opts: &RelaxOptions) -> Result<CoreEnergy> {
    let disk = Domain::disk(center, r)?;
    let l = Arc::new(Lattice::new(disk, eps)?);
    let v = VortexSpec::new(center, 1, UnitVec::ONE)?;
    let u0 = SpinField::from_fn(l.clone(), |p| v.value(p));
    let ring = l.discrete_boundary(&disk);
    let bc = BoundaryCondition::from_fn(&l, &ring, |p| v.value(p))?;
    let result = relax(&u0, &bc, opts)?;
    Ok(CoreEnergy { eps, r, center, gamma: result.energy, result })
}

/// Relaxation options tuned for a disk of radius `r` at spacing `eps`.
pub fn core_options(eps: f64, r: f64) -> RelaxOptions {
    RelaxOptions { omega: RelaxOptions::sor_omega(2.0 * r / eps), ..RelaxOptions::default() }
}

/// `g(ε) = γ(ε, r) − 2π log(r/ε)` for each `ε`.
pub fn core_energy_limit(eps_list: &[f64], r: f64, center: Point) -> Result<Vec<(f64, CoreEnergy)>> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("spacings must decrease");
    }
    eps_list
        .iter()
        .map(|&e| {
            let c = core_energy(e, r, center, &core_options(e, r))?;
            Ok((c.gamma - TAU * (r / e).ln(), c))
        })
        .collect()
}

/// `−Σ d_h log|x − x_h|`.
pub fn log_potential(mu: &VortexMeasure, x: Point) -> f64 {
    -mu.atoms.iter().map(|a| a.d as f64 * x.dist(a.pos()).ln()).sum::<f64>()
}

/// Finite-difference solution of `ΔR₀ = 0` in `Ω`, `R₀ = −Σ d_h log|x − x_h|`
/// on `∂Ω`, on a uniform grid with Shortley-Weller arms at the boundary.
#[derive(Clone, Debug)]
pub struct HarmonicR0 {
    pub domain: Domain,
    pub h: f64,
    origin: Point,
    nx: usize,
    ny: usize,
    inside: Vec<bool>,
    values: Vec<f64>,
    measure: VortexMeasure,
    pub residual: f64,
    pub sweeps: usize,
}

/// Largest grid accepted by [`harmonic_r0`].
pub const MAX_GRID_NODES: usize = 20_000_000;

pub fn harmonic_r0(mu: &VortexMeasure, h: f64) -> Result<HarmonicR0> {
    harmonic_r0_with(mu, h, 1e-10, 1_000_000)
}

pub fn harmonic_r0_with(mu: &VortexMeasure, h: f64, tol: f64, max_sweeps: usize) -> Result<HarmonicR0> {
    if !(h > 0.0 && h.is_finite()) {
        return invalid(format!("grid step must be positive, got {h}"));
    }
    let domain = mu.domain;
    for a in &mu.atoms {
        if domain.boundary_dist(a.pos()) <= 0.0 {
            return invalid(format!("atom at {} is not inside the domain", a.pos()));
        }
    }
    let (x0, x1, y0, y1) = domain.bounding_box();
    let nx = ((x1 - x0) / h).ceil() as usize + 1;
    let ny = ((y1 - y0) / h).ceil() as usize + 1;
    if nx.saturating_mul(ny) > MAX_GRID_NODES {
        return Err(Error::Resource(format!("{nx}x{ny} grid")));
    }
    let origin = Point::new(x0, y0);
    let at = |i: usize, j: usize| Point::new(x0 + i as f64 * h, y0 + j as f64 * h);
    let g = |p: Point| log_potential(mu, p);
    let mut inside = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            inside[j * nx + i] = domain.boundary_dist(at(i, j)) > 1e-9 * h;
        }
    }

    // Per interior node: four (coefficient, neighbor) pairs and a constant from
    // boundary values.
    struct Stencil {
        node: u32,
        nb: [u32; 4],
        a: [f64; 4],
        rhs: f64,
        diag: f64,
    }
    let dirs = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)];
    let mut stencils = [Vec::new(), Vec::new()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if !inside[k] {
                continue;
            }
            let p = at(i, j);
            let mut arm = [h; 4];
            let mut nb = [NONE; 4];
            let mut bval = [0.0; 4];
            for (d, &(di, dj)) in dirs.iter().enumerate() {
                let (qi, qj) = (i as i64 + di, j as i64 + dj);
                let q = (qj as usize) * nx + qi as usize;
                if inside[q] {
                    nb[d] = q as u32;
                } else {
                    let dir = Point::new(di as f64, dj as f64);
                    let t = domain.ray_exit(p, dir).min(h).max(1e-12 * h);
                    arm[d] = t;
                    bval[d] = g(p + t * dir);
                }
            }
            let mut a = [0.0; 4];
            for d in 0..4 {
                let opp = d ^ 1;
                a[d] = 2.0 / (arm[d] * (arm[d] + arm[opp]));
            }
            let diag: f64 = a.iter().sum();
            let rhs: f64 = (0..4).filter(|&d| nb[d] == NONE).map(|d| a[d] * bval[d]).sum();
            stencils[(i + j) % 2].push(Stencil { node: k as u32, nb, a, rhs, diag });
        }
    }

    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            if !inside[j * nx + i] {
                values[j * nx + i] = g(at(i, j));
            }
        }
    }
    let n_across = (x1 - x0).max(y1 - y0) / h;
    let omega = RelaxOptions::sor_omega(n_across);
    let residual_of = |values: &[f64], st: &Stencil| {
        let mut s = st.rhs;
        for d in 0..4 {
            if st.nb[d] != NONE {
                s += st.a[d] * values[st.nb[d] as usize];
            }
        }
        s / st.diag - values[st.node as usize]
    };
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    while sweeps < max_sweeps {
        for color in &stencils {
            for st in color {
                let r = residual_of(&values, st);
                values[st.node as usize] += omega * r;
            }
        }
        sweeps += 1;
        if sweeps % 10 == 0 || sweeps == max_sweeps {
            residual = stencils.iter().flatten().map(|st| residual_of(&values, st).abs()).fold(0.0, f64::max);
            if residual < tol {
                break;
            }
        }
    }
    Ok(HarmonicR0 { domain, h, origin, nx, ny, inside, values, measure: mu.clone(), residual, sweeps })
}

impl HarmonicR0 {
    pub fn converged(&self, tol: f64) -> bool {
        self.residual < tol
    }

    /// Bilinear interpolation; grid nodes outside `Ω` carry the boundary formula.
    pub fn eval(&self, p: Point) -> f64 {
        let fx = ((p.x - self.origin.x) / self.h).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.origin.y) / self.h).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let (s, t) = (fx - i as f64, fy - j as f64);
        let v = |i: usize, j: usize| {
            let k = j * self.nx + i;
            if self.inside[k] {
                self.values[k]
            } else {
                let q = Point::new(self.origin.x + i as f64 * self.h, self.origin.y + j as f64 * self.h);
                log_potential(&self.measure, q)
            }
        };
        (1.0 - s) * (1.0 - t) * v(i, j)
            + s * (1.0 - t) * v(i + 1, j)
            + (1.0 - s) * t * v(i, j + 1)
            + s * t * v(i + 1, j + 1)
    }
}

/// `𝕎(μ) = −2π Σ_{h≠k} d_h d_k log|x_h − x_k| − 2π Σ_h d_h R₀(x_h)`, the first
/// sum over ordered pairs.
pub fn renormalized_energy(mu: &VortexMeasure, h: f64) -> Result<f64> {
    let r0 = harmonic_r0(mu, h)?;
    renormalized_energy_with(mu, &r0)
}

pub fn renormalized_energy_with(mu: &VortexMeasure, r0: &HarmonicR0) -> Result<f64> {
    let atoms = &mu.atoms;
    let mut pair = 0.0;
    for (a, p) in atoms.iter().enumerate() {
        for (b, q) in atoms.iter().enumerate() {
            if a != b {
                let r = p.pos().dist(q.pos());
                if r < 1e-12 {
                    return invalid(format!("coincident atoms at {}", p.pos()));
                }
                pair += (p.d * q.d) as f64 * r.ln();
            }
        }
    }
    let self_term: f64 = atoms.iter().map(|a| a.d as f64 * r0.eval(a.pos())).sum();
    Ok(-TAU * pair - TAU * self_term)
}

/// Data of the minimum problem `m̃(η, μ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedInput {
    pub measure: VortexMeasure,
    pub eta: f64,
    /// Lattice spacing of the discrete problem.
    pub grid_h: f64,
}

#[derive(Clone, Debug)]
pub struct MTilde {
    pub eta: f64,
    /// Discrete Dirichlet energy of the minimizer on `Ω` minus the balls.
    pub value: f64,
    pub alphas: Vec<UnitVec>,
    pub result: MinimizationResult,
}

/// Minimal discrete Dirichlet energy on `εZ² ∩ Ω` outside the balls `B_η(x_h)`,
/// with `α_h ⊙ ((x − x_h)/|x − x_h|)^{d_h}` on the discrete boundary of each
/// ball, free phases `α_h` and no condition on `∂Ω`.
///
/// Sites inside a ball but off its discrete boundary are dropped, as are
/// bonds between two boundary sites of a ball. After each sweep every `α_h` is
/// reset to its exact minimizer given the field, the normalized sum of
/// `w(y) ⊙ conj(ρ_h(x))` over bonds from a ring site `x` to an outside site `y`.
pub fn m_tilde(input: &RenormalizedInput, opts: &RelaxOptions) -> Result<MTilde> {
    opts.check()?;
    let mu = &input.measure;
    let eta = input.eta;
    if mu.is_empty() {
        return invalid("m̃ needs at least one vortex");
    }
    if !(eta > 0.0) {
        return invalid(format!("ball radius must be positive, got {eta}"));
    }
    for (h, a) in mu.atoms.iter().enumerate() {
        if mu.domain.boundary_dist(a.pos()) <= eta {
            return invalid(format!("ball around {} leaves the domain", a.pos()));
        }
        for b in &mu.atoms[..h] {
            if a.pos().dist(b.pos()) <= 2.0 * eta {
                return invalid(format!("balls around {} and {} overlap", a.pos(), b.pos()));
            }
        }
    }
    let l = Arc::new(Lattice::new(mu.domain, input.grid_h)?);
    let eps = l.eps();
    let specs: Vec<VortexSpec> =
        mu.atoms.iter().map(|a| VortexSpec { center: a.pos(), degree: a.d, alpha: UnitVec::ONE }).collect();

    // ring[h]: sites of the discrete boundary of B_η(x_h)
    let mut active = vec![true; l.len()];
    let mut owner = vec![usize::MAX; l.len()];
    for k in 0..l.len() {
        let p = l.position(k);
        for (h, v) in specs.iter().enumerate() {
            let r = p.dist(v.center);
            if r < eta {
                if r >= eta - eps {
                    owner[k] = h;
                } else {
                    active[k] = false;
                }
            }
        }
    }
    let fixed: Vec<bool> = owner.iter().map(|&o| o != usize::MAX).collect();
    let rings: Vec<Vec<usize>> = (0..specs.len()).map(|h| (0..l.len()).filter(|&k| owner[k] == h).collect()).collect();
    if let Some(h) = rings.iter().position(|r| r.is_empty()) {
        return invalid(format!("ball around {} holds no lattice site", specs[h].center));
    }
    let radial: Vec<UnitVec> = (0..l.len())
        .map(|k| match owner[k] {
            usize::MAX => UnitVec::ONE,
            h => VortexSpec { alpha: UnitVec::ONE, ..specs[h] }.value(l.position(k)),
        })
        .collect();

    // warm start: product field, each α_h matching the other vortices at x_h
    let mut alphas: Vec<UnitVec> = specs
        .iter()
        .enumerate()
        .map(|(h, v)| {
            specs
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != h)
                .fold(UnitVec::ONE, |acc, (_, w)| acc.rotate(w.value(v.center)))
        })
        .collect();
    let mut u0 = SpinField::from_fn(l.clone(), |p| specs.iter().fold(UnitVec::ONE, |acc, v| acc.rotate(v.value(p))));
    for (h, ring) in rings.iter().enumerate() {
        for &k in ring {
            u0.set(k, alphas[h].rotate(radial[k]));
        }
    }

    // bonds from ring sites to free sites, for the α update
    let mut ring_bonds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); specs.len()];
    for (h, ring) in rings.iter().enumerate() {
        for &k in ring {
            for st in STEPS {
                if let Some(m) = l.neighbor(k, st) {
                    if active[m] && !fixed[m] {
                        ring_bonds[h].push((k, m));
                    }
                }
            }
        }
    }

    let mut s = Solver::new(&u0, &active, &fixed, false);
    let result = run(&mut s, &l, opts, |s| {
        for h in 0..specs.len() {
            let (mut ax, mut ay) = (0.0, 0.0);
            for &(k, m) in &ring_bonds[h] {
                let w = s.value(m).rotate(radial[k].conj());
                ax += w.x();
                ay += w.y();
            }
            if let Some(a) = UnitVec::normalize(ax, ay) {
                alphas[h] = a;
                for &k in &rings[h] {
                    s.set(k, a.rotate(radial[k]));
                }
            }
        }
    })?;
    Ok(MTilde { eta, value: result.energy, alphas, result })
}

/// Relaxation options for `m̃` on a domain of diameter `diam` at spacing `eps`.
pub fn m_tilde_options(eps: f64, diam: f64) -> RelaxOptions {
    RelaxOptions { tol: 1e-9, omega: RelaxOptions::sor_omega(2.0 * diam / eps), ..RelaxOptions::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::dirichlet_energy;
    use crate::vorticity::Atom;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn chain3() -> Arc<Lattice> {
        let d = Domain::rectangle(0.5, 3.5, 0.5, 1.5).unwrap();
        Arc::new(Lattice::new(d, 1.0).unwrap())
    }

    #[test]
    fn chain_bisector() {
        let l = chain3();
        let u0 = SpinField::constant(l.clone(), UnitVec::from_angle(2.0));
        let bc = BoundaryCondition::new(&l, vec![(0, UnitVec::ONE), (2, UnitVec::I)]).unwrap();
        for omega in [1.0, 1.5] {
            let r = relax(&u0, &bc, &RelaxOptions { omega, ..Default::default() }).unwrap();
            assert!(r.converged);
            assert_abs_diff_eq!(r.field.value(1).phase(), FRAC_PI_4, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_boundary_converges_at_once() {
        let l = Arc::new(Lattice::new(Domain::unit_disk(), 0.125).unwrap());
        let v = UnitVec::from_angle(0.7);
        let u0 = SpinField::constant(l.clone(), v);
        let ring = l.discrete_boundary(&Domain::unit_disk());
        let bc = BoundaryCondition::from_fn(&l, &ring, |_| v).unwrap();
        let r = relax(&u0, &bc, &RelaxOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.energy, 0.0);
    }

    #[test]
    fn no_free_sites_and_bad_options() {
        let l = chain3();
        let u0 = SpinField::constant(l.clone(), UnitVec::ONE);
        let all = BoundaryCondition::from_fn(&l, &[0, 1, 2], |_| UnitVec::I).unwrap();
        let r = relax(&u0, &all, &RelaxOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
        assert!(relax(&u0, &all, &RelaxOptions { tol: 0.0, ..Default::default() }).is_err());
        assert!(relax(&u0, &all, &RelaxOptions { omega: 2.0, ..Default::default() }).is_err());
        assert!(BoundaryCondition::new(&l, vec![(3, UnitVec::ONE)]).is_err());
    }

    #[test]
    fn energy_never_increases() {
        let l = Arc::new(Lattice::new(Domain::unit_square(), 1.0 / 16.0).unwrap());
        let mut seed = 3u64;
        let u0 = SpinField::from_fn(l.clone(), |_| {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            UnitVec::from_angle((seed >> 11) as f64 / (1u64 << 53) as f64 * TAU)
        });
        let ring = l.discrete_boundary(&Domain::unit_square());
        let bc = BoundaryCondition::from_fn(&l, &ring, |p| UnitVec::from_angle(3.0 * p.x)).unwrap();
        for omega in [1.0, 1.8] {
            let opts = RelaxOptions { tol: 1e-8, max_sweeps: 3000, omega };
            let r = relax(&u0, &bc, &opts).unwrap();
            let start = dirichlet_energy(&u0, None);
            assert!(r.history[0] <= start);
            assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
        let r = relax(&u0, &bc, &RelaxOptions { tol: 1e-8, max_sweeps: 5, omega: 1.0 }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }

    #[test]
    fn core_energy_small_cases() {
        // r ≤ ε: the only site is a boundary site
        let c = core_energy(0.5, 0.5, Point::ORIGIN, &RelaxOptions::default()).unwrap();
        assert_eq!(c.result.iterations, 0);
        assert_eq!(c.gamma, 0.0);
        // the free center has a vanishing neighbor sum and keeps its value
        let c = core_energy(0.5, 0.9, Point::ORIGIN, &RelaxOptions::default()).unwrap();
        assert_eq!(c.result.iterations, 1);
        let l = c.result.field.lattice().clone();
        let v = VortexSpec::new(Point::ORIGIN, 1, UnitVec::ONE).unwrap();
        let direct = dirichlet_energy(&SpinField::from_fn(l, |p| v.value(p)), None);
        assert_abs_diff_eq!(c.gamma, direct, epsilon = 1e-12);

        let c = core_energy(1.0 / 16.0, 1.0, Point::ORIGIN, &core_options(1.0 / 16.0, 1.0)).unwrap();
        assert!(c.result.converged);
        assert!(c.gamma >= 0.0);
        assert!(c.gamma < TAU * 16f64.ln() + 10.0);
    }

    #[test]
    fn r0_examples() {
        let d = Domain::unit_disk();
        let center = VortexMeasure::single(d, Point::ORIGIN, 1).unwrap();
        let r0 = harmonic_r0(&center, 1.0 / 32.0).unwrap();
        assert!(r0.residual < 1e-10);
        assert_eq!(r0.eval(Point::ORIGIN), 0.0);
        assert_abs_diff_eq!(renormalized_energy_with(&center, &r0).unwrap(), 0.0, epsilon = 1e-12);

        let edge = VortexMeasure::single(d, Point::new(1.0, 0.0), 1).unwrap();
        assert!(harmonic_r0(&edge, 0.1).is_err());
    }

    #[test]
    fn r0_single_off_center_matches_image() {
        // one image charge: R₀(a) = −log(1 − |a|²)
        let d = Domain::unit_disk();
        let a = Point::new(0.4, 0.1);
        let mu = VortexMeasure::single(d, a, 1).unwrap();
        let h = 1.0 / 64.0;
        let r0 = harmonic_r0(&mu, h).unwrap();
        let exact = -(1.0 - a.dot(a)).ln();
        assert!((r0.eval(a) - exact).abs() < 3.0 * h, "{} vs {exact}", r0.eval(a));
    }

    #[test]
    fn m_tilde_rejects_bad_balls() {
        let d = Domain::unit_disk();
        let mu = VortexMeasure::new(d, [Atom { x: 0.1, y: 0.0, d: 1 }, Atom { x: -0.1, y: 0.0, d: -1 }]).unwrap();
        let input = RenormalizedInput { measure: mu, eta: 0.15, grid_h: 1.0 / 32.0 };
        assert!(m_tilde(&input, &RelaxOptions::default()).is_err());
    }

    #[test]
    fn m_tilde_symmetric_fixed_point_and_monotone() {
        let d = Domain::unit_disk();
        let mu = VortexMeasure::single(d, Point::ORIGIN, 1).unwrap();
        let eps = 1.0 / 32.0;
        let opts = m_tilde_options(eps, 2.0);
        let big = m_tilde(&RenormalizedInput { measure: mu.clone(), eta: 0.4, grid_h: eps }, &opts).unwrap();
        let small = m_tilde(&RenormalizedInput { measure: mu, eta: 0.2, grid_h: eps }, &opts).unwrap();
        assert!(big.result.converged && small.result.converged);
        // symmetric data keeps α = 1
        assert!(big.alphas[0].chord(UnitVec::ONE) < 1e-6);
        assert!(big.value <= small.value);
        assert!(big.result.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
