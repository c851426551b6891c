//! Lattice site sets `Ω ∩ εZ²`, spin and clock fields, the clock projection
//! and the piecewise-constant / piecewise-affine views of a field.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Domain, Mat2, Point, Region, UnitVec};

const ABSENT: u32 = u32::MAX;

/// Upper bound on the number of candidate lattice points scanned.
pub const MAX_CANDIDATES: usize = 50_000_000;

/// Integer lattice coordinates.
pub type Site = [i64; 2];

/// Unit lattice steps `+e₁, +e₂, -e₁, -e₂`.
pub const STEPS: [Site; 4] = [[1, 0], [0, 1], [-1, 0], [0, -1]];

/// The sites `{i ∈ Z² : εi ∈ Ω}` in lexicographic order.
#[derive(Clone, Debug)]
pub struct Lattice {
    eps: f64,
    domain: Domain,
    sites: Vec<Site>,
    imin: i64,
    jmin: i64,
    ni: usize,
    nj: usize,
    grid: Vec<u32>,
}

impl Lattice {
    pub fn new(domain: Domain, eps: f64) -> Result<Self> {
        domain.validate()?;
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("lattice spacing must be positive, got {eps}"));
        }
        let (x0, x1, y0, y1) = domain.bounding_box();
        let imin = (x0 / eps).floor() as i64;
        let imax = (x1 / eps).ceil() as i64;
        let jmin = (y0 / eps).floor() as i64;
        let jmax = (y1 / eps).ceil() as i64;
        let ni = (imax - imin + 1) as usize;
        let nj = (jmax - jmin + 1) as usize;
        if ni.saturating_mul(nj) > MAX_CANDIDATES {
            return Err(Error::Resource(format!("lattice of {ni}x{nj} candidate points")));
        }
        let mut sites = Vec::new();
        let mut grid = vec![ABSENT; ni * nj];
        for i in imin..=imax {
            for j in jmin..=jmax {
                let p = Point::new(i as f64 * eps, j as f64 * eps);
                if domain.contains(p) {
                    grid[(i - imin) as usize * nj + (j - jmin) as usize] = sites.len() as u32;
                    sites.push([i, j]);
                }
            }
        }
        if sites.is_empty() {
            return Err(Error::DegenerateLattice { eps });
        }
        Ok(Lattice { eps, domain, sites, imin, jmin, ni, nj, grid })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, k: usize) -> Site {
        self.sites[k]
    }

    /// Physical position `εi` of site `k`.
    pub fn position(&self, k: usize) -> Point {
        self.point_of(self.sites[k])
    }

    pub fn point_of(&self, s: Site) -> Point {
        Point::new(s[0] as f64 * self.eps, s[1] as f64 * self.eps)
    }

    /// Ordinal of the site `s`, if it belongs to the lattice.
    pub fn index_of(&self, s: Site) -> Option<usize> {
        let di = s[0] - self.imin;
        let dj = s[1] - self.jmin;
        if di < 0 || dj < 0 || di as usize >= self.ni || dj as usize >= self.nj {
            return None;
        }
        match self.grid[di as usize * self.nj + dj as usize] {
            ABSENT => None,
            k => Some(k as usize),
        }
    }

    pub fn neighbor(&self, k: usize, step: Site) -> Option<usize> {
        let s = self.sites[k];
        self.index_of([s[0] + step[0], s[1] + step[1]])
    }

    /// Neighbors in the order of [`STEPS`].
    pub fn neighbors(&self, k: usize) -> [Option<usize>; 4] {
        STEPS.map(|st| self.neighbor(k, st))
    }

    /// Each unordered nearest-neighbor pair once, as `(site, site + e_r)`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.len());
        for k in 0..self.len() {
            for step in [[1, 0], [0, 1]] {
                if let Some(m) = self.neighbor(k, step) {
                    out.push((k, m));
                }
            }
        }
        out
    }

    /// Sites of `A` within one lattice spacing of `∂A`.
    pub fn discrete_boundary(&self, a: &Domain) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| {
                let d = a.boundary_dist(self.position(k));
                d > 0.0 && d <= self.eps
            })
            .collect()
    }

    /// The four corners of the plaquette `εi + [0,ε]²` in counterclockwise order
    /// starting at `εi`, if all are sites.
    pub fn plaquette(&self, s: Site) -> Option<[usize; 4]> {
        let [i, j] = s;
        Some([
            self.index_of([i, j])?,
            self.index_of([i + 1, j])?,
            self.index_of([i + 1, j + 1])?,
            self.index_of([i, j + 1])?,
        ])
    }

    /// Bottom-left corners of all plaquettes with four sites.
    pub fn plaquettes(&self) -> impl Iterator<Item = (Site, [usize; 4])> + '_ {
        self.sites.iter().filter_map(move |&s| self.plaquette(s).map(|c| (s, c)))
    }

    /// Site whose half-open cell `εi + [0,ε)²` contains `x`.
    pub fn cell_of(&self, x: Point) -> Option<usize> {
        let i = floor_index(x.x, self.eps);
        let j = floor_index(x.y, self.eps);
        self.index_of([i, j])
    }
}

/// `⌊t/ε⌋` corrected so that `k·ε ≤ t < (k+1)·ε` holds in floating point.
fn floor_index(t: f64, eps: f64) -> i64 {
    let mut k = (t / eps).floor() as i64;
    if (k as f64) * eps > t {
        k -= 1;
    } else if ((k + 1) as f64) * eps <= t {
        k += 1;
    }
    k
}

/// `N`-clock parameters; `θ = 2π/N` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ClockParams {
    n: u32,
}

impl ClockParams {
    pub fn new(n: u32) -> Result<Self> {
        if n < 3 {
            return invalid(format!("clock needs N >= 3, got {n}"));
        }
        Ok(ClockParams { n })
    }

    /// Smallest `N` with `2π/N ≤ theta_target`.
    pub fn from_theta_target(theta_target: f64) -> Result<Self> {
        if !(theta_target > 0.0 && theta_target.is_finite()) {
            return invalid(format!("bad target angle {theta_target}"));
        }
        let n = (TAU / theta_target).ceil();
        if n > u32::MAX as f64 / 2.0 {
            return Err(Error::Resource(format!("N = {n} is too large")));
        }
        ClockParams::new((n as u32).max(3))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn theta(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn value(&self, k: u32) -> UnitVec {
        UnitVec::from_angle(k as f64 * self.theta())
    }

    /// Clock distance `min(|Δk|, N - |Δk|)`.
    pub fn index_dist(&self, a: u32, b: u32) -> u32 {
        let d = a.abs_diff(b) % self.n;
        d.min(self.n - d)
    }

    /// Exact chord `2 sin(|Δk|_N θ/2)` between two clock values.
    pub fn chord(&self, a: u32, b: u32) -> f64 {
        2.0 * (0.5 * self.index_dist(a, b) as f64 * self.theta()).sin()
    }

    /// Index of `u` under `exp(ιθ⌊φ_u/θ⌋)`. Phases within `1e-9·θ` of a clock
    /// angle are taken to lie on it, so clock values are fixed points.
    pub fn project(&self, u: UnitVec) -> u32 {
        let q = u.phase() / self.theta();
        let r = q.round();
        let k = if (q - r).abs() < 1e-9 { r } else { q.floor() };
        (k.max(0.0) as u32) % self.n
    }

    /// Exact clock index of `u`, if `u` is a clock value to 1e-9.
    pub fn index_of(&self, u: UnitVec) -> Option<u32> {
        let k = self.project(u);
        (self.value(k).chord(u) < 1e-9).then_some(k)
    }
}

/// An `S¹`-valued field on a lattice.
#[derive(Clone, Debug)]
pub struct SpinField {
    lattice: Arc<Lattice>,
    values: Vec<UnitVec>,
}

impl SpinField {
    pub fn new(lattice: Arc<Lattice>, values: Vec<UnitVec>) -> Result<Self> {
        if values.len() != lattice.len() {
            return invalid(format!("{} values for {} sites", values.len(), lattice.len()));
        }
        Ok(SpinField { lattice, values })
    }

    pub fn constant(lattice: Arc<Lattice>, v: UnitVec) -> Self {
        let values = vec![v; lattice.len()];
        SpinField { lattice, values }
    }

    pub fn from_fn(lattice: Arc<Lattice>, mut f: impl FnMut(Point) -> UnitVec) -> Self {
        let values = (0..lattice.len()).map(|k| f(lattice.position(k))).collect();
        SpinField { lattice, values }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn values(&self) -> &[UnitVec] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [UnitVec] {
        &mut self.values
    }

    pub fn value(&self, k: usize) -> UnitVec {
        self.values[k]
    }

    pub fn set(&mut self, k: usize, v: UnitVec) {
        self.values[k] = v;
    }

    /// Multiplies every spin by `r`.
    pub fn rotated(&self, r: UnitVec) -> SpinField {
        SpinField { lattice: self.lattice.clone(), values: self.values.iter().map(|v| v.rotate(r)).collect() }
    }

    /// Value of the piecewise-constant interpolation at `x`.
    pub fn pc_value(&self, x: Point) -> Result<UnitVec> {
        self.lattice.cell_of(x).map(|k| self.values[k]).ok_or(Error::OutOfSupport { x: x.x, y: x.y })
    }

    pub fn affine(&self) -> AffineInterpolation<'_> {
        AffineInterpolation { field: self }
    }
}

/// A field with values in the clock set `S_ε`, stored as indices.
#[derive(Clone, Debug)]
pub struct ClockField {
    lattice: Arc<Lattice>,
    clock: ClockParams,
    indices: Vec<u32>,
}

impl ClockField {
    pub fn new(lattice: Arc<Lattice>, clock: ClockParams, indices: Vec<u32>) -> Result<Self> {
        if indices.len() != lattice.len() {
            return invalid(format!("{} indices for {} sites", indices.len(), lattice.len()));
        }
        if let Some(k) = indices.iter().find(|&&k| k >= clock.n()) {
            return invalid(format!("clock index {k} out of range for N = {}", clock.n()));
        }
        Ok(ClockField { lattice, clock, indices })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn clock(&self) -> ClockParams {
        self.clock
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn index(&self, k: usize) -> u32 {
        self.indices[k]
    }

    pub fn value(&self, k: usize) -> UnitVec {
        self.clock.value(self.indices[k])
    }

    /// `k ↦ exp(ιkθ)` as an unconstrained spin field.
    pub fn embed(&self) -> SpinField {
        SpinField { lattice: self.lattice.clone(), values: self.indices.iter().map(|&k| self.clock.value(k)).collect() }
    }
}

/// Site-wise clock projection `u ↦ exp(ιθ⌊φ_u/θ⌋)`.
pub fn project_clock(u: &SpinField, clock: ClockParams) -> ClockField {
    ClockField { lattice: u.lattice.clone(), clock, indices: u.values.iter().map(|&v| clock.project(v)).collect() }
}

/// One triangle of the lattice triangulation. Each square `εi + [0,ε]²` is cut
/// along its bottom-left to top-right diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    /// Bottom-left corner of the containing square.
    pub square: Site,
    /// `false`: corners `εi, εi+εe₁, εi+ε(e₁+e₂)`; `true`: `εi, εi+ε(e₁+e₂), εi+εe₂`.
    pub upper: bool,
    pub corners: [usize; 3],
}

impl Triangle {
    pub fn centroid(&self, eps: f64) -> Point {
        let [i, j] = self.square;
        let (a, b) = if self.upper { (1.0 / 3.0, 2.0 / 3.0) } else { (2.0 / 3.0, 1.0 / 3.0) };
        Point::new((i as f64 + a) * eps, (j as f64 + b) * eps)
    }

    /// Constant gradient `(∂₁f, ∂₂f)` of the affine interpolant of corner values.
    pub fn gradient(&self, f: [f64; 3], eps: f64) -> [f64; 2] {
        if self.upper {
            // corners a, c, d
            [(f[1] - f[2]) / eps, (f[2] - f[0]) / eps]
        } else {
            // corners a, b, c
            [(f[1] - f[0]) / eps, (f[2] - f[1]) / eps]
        }
    }
}

impl Lattice {
    /// Both triangles of every square whose four corners are sites.
    pub fn triangles(&self) -> impl Iterator<Item = Triangle> + '_ {
        self.plaquettes().flat_map(|(s, [a, b, c, d])| {
            [
                Triangle { square: s, upper: false, corners: [a, b, c] },
                Triangle { square: s, upper: true, corners: [a, c, d] },
            ]
        })
    }

    /// Triangle containing `x`, if its square is complete.
    pub fn triangle_at(&self, x: Point) -> Option<(Triangle, f64, f64)> {
        let i = floor_index(x.x, self.eps);
        let j = floor_index(x.y, self.eps);
        let [a, b, c, d] = self.plaquette([i, j])?;
        let s = x.x / self.eps - i as f64;
        let t = x.y / self.eps - j as f64;
        let tri = if s >= t {
            Triangle { square: [i, j], upper: false, corners: [a, b, c] }
        } else {
            Triangle { square: [i, j], upper: true, corners: [a, c, d] }
        };
        Some((tri, s, t))
    }
}

/// Piecewise-affine interpolation of a spin field (not normalized).
#[derive(Clone, Copy, Debug)]
pub struct AffineInterpolation<'a> {
    field: &'a SpinField,
}

impl AffineInterpolation<'_> {
    fn corner_values(&self, tri: &Triangle) -> ([f64; 3], [f64; 3]) {
        let v = tri.corners.map(|k| self.field.values[k]);
        (v.map(|u| u.x()), v.map(|u| u.y()))
    }

    pub fn eval(&self, x: Point) -> Result<[f64; 2]> {
        let lat = &self.field.lattice;
        let (tri, s, t) = lat.triangle_at(x).ok_or(Error::OutOfSupport { x: x.x, y: x.y })?;
        let (fx, fy) = self.corner_values(&tri);
        let interp = |f: [f64; 3]| {
            if tri.upper {
                f[0] + s * (f[1] - f[2]) + t * (f[2] - f[0])
            } else {
                f[0] + s * (f[1] - f[0]) + t * (f[2] - f[1])
            }
        };
        Ok([interp(fx), interp(fy)])
    }

    /// Jacobian matrix `[[∂₁û₁, ∂₂û₁], [∂₁û₂, ∂₂û₂]]` on the triangle.
    pub fn triangle_gradient(&self, tri: &Triangle) -> Mat2 {
        let eps = self.field.lattice.eps();
        let (fx, fy) = self.corner_values(tri);
        let gx = tri.gradient(fx, eps);
        let gy = tri.gradient(fy, eps);
        Mat2::new(gx[0], gx[1], gy[0], gy[1])
    }

    pub fn gradient(&self, x: Point) -> Result<Mat2> {
        let (tri, _, _) = self.field.lattice.triangle_at(x).ok_or(Error::OutOfSupport { x: x.x, y: x.y })?;
        Ok(self.triangle_gradient(&tri))
    }

    /// `∫|∇û|²` over the triangles whose centroid lies in `region`.
    pub fn dirichlet_energy(&self, region: &dyn Region) -> f64 {
        let lat = &self.field.lattice;
        let area = 0.5 * lat.eps() * lat.eps();
        let terms: Vec<f64> = lat
            .triangles()
            .filter(|t| region.contains(t.centroid(lat.eps())))
            .map(|t| {
                let g = self.triangle_gradient(&t);
                let f = g.frobenius();
                f * f * area
            })
            .collect();
        crate::pairwise_sum(&terms)
    }
}
