//! Flat distance between integer atomic measures.
//!
//! The distance is the value of the finite linear program
//!
//! ```text
//! maximize Σ a_i ψ_i   subject to   |ψ_i| ≤ min(1, dist(x_i, ∂Ω)),  |ψ_i − ψ_j| ≤ |x_i − x_j|
//! ```
//!
//! over the atoms `Σ a_i δ_{x_i} = μ − ν`. It is solved through its dual, a
//! min-cost transshipment on the complete graph of atoms plus one ground node
//! (edge cost `|x_i − x_j|` between atoms and `cap_i` to ground), by
//! successive shortest paths. The node potentials give the optimal `ψ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Domain, Point};
use crate::vorticity::{Atom, VortexMeasure};

/// Largest number of distinct atoms of `μ − ν` accepted by [`flat_distance`].
pub const MAX_ATOMS: usize = 5000;

const FEAS_TOL: f64 = 1e-9;

/// Test-function value at one atom of `μ − ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub x: f64,
    pub y: f64,
    pub d: i32,
    pub psi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatResult {
    pub value: f64,
    pub witness: Vec<WitnessEntry>,
}

/// `min(1, dist(x, ∂Ω))`, and 0 outside `Ω`.
pub fn cap(domain: &Domain, x: Point) -> f64 {
    domain.boundary_dist(x).clamp(0.0, 1.0)
}

/// Exact flat distance between `mu` and `nu`, with an optimal test function.
pub fn flat_distance(mu: &VortexMeasure, nu: &VortexMeasure) -> Result<FlatResult> {
    let diff = mu.difference(nu)?;
    if diff.atoms.len() > MAX_ATOMS {
        return Err(Error::Resource(format!("{} atoms exceed the limit of {MAX_ATOMS}", diff.atoms.len())));
    }
    let (value, psi) = solve(&diff.domain, &diff.atoms);
    let witness = diff.atoms.iter().zip(psi).map(|(a, psi)| WitnessEntry { x: a.x, y: a.y, d: a.d, psi }).collect();
    Ok(FlatResult { value, witness })
}

fn solve(domain: &Domain, atoms: &[Atom]) -> (f64, Vec<f64>) {
    let n = atoms.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let g = n;
    let pos: Vec<Point> = atoms.iter().map(|a| a.pos()).collect();
    let caps: Vec<f64> = pos.iter().map(|&p| cap(domain, p)).collect();
    let cost = |u: usize, v: usize| -> f64 {
        if u == g {
            caps[v]
        } else if v == g {
            caps[u]
        } else {
            pos[u].dist(pos[v])
        }
    };

    let mut excess: Vec<i64> = atoms.iter().map(|a| a.d as i64).collect();
    excess.push(-excess.iter().sum::<i64>());
    // flow[u][v] > 0: net flow u -> v
    let mut flow: Vec<BTreeMap<usize, i64>> = vec![BTreeMap::new(); n + 1];
    let mut pot = vec![0.0f64; n + 1];
    let nodes = n + 1;

    loop {
        if excess.iter().all(|&e| e <= 0) {
            break;
        }
        // multi-source Dijkstra on reduced costs
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        for v in 0..nodes {
            if excess[v] > 0 {
                dist[v] = 0.0;
            }
        }
        let mut target = usize::MAX;
        for _ in 0..nodes {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if excess[u] < 0 {
                target = u;
                break;
            }
            for v in 0..nodes {
                if done[v] || v == u {
                    continue;
                }
                let c = cost(u, v);
                // pushing u -> v first cancels flow v -> u at cost -c
                let arc = if flow[v].get(&u).copied().unwrap_or(0) > 0 { -c } else { c };
                let rc = (arc + pot[u] - pot[v]).max(0.0);
                let nd = dist[u] + rc;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                }
            }
        }
        debug_assert!(target != usize::MAX, "complete graph always reaches a deficit");
        let dt = dist[target];
        for v in 0..nodes {
            pot[v] += dist[v].min(dt);
        }

        // path and bottleneck
        let mut path = vec![target];
        while prev[*path.last().unwrap()] != usize::MAX {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        let source = path[0];
        let mut delta = excess[source].min(-excess[target]);
        for w in path.windows(2) {
            let back = flow[w[1]].get(&w[0]).copied().unwrap_or(0);
            if back > 0 {
                delta = delta.min(back);
            }
        }
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            let back = flow[v].get(&u).copied().unwrap_or(0);
            if back > 0 {
                let left = back - delta;
                if left == 0 {
                    flow[v].remove(&u);
                } else {
                    flow[v].insert(u, left);
                }
            } else {
                *flow[u].entry(v).or_insert(0) += delta;
            }
        }
        excess[source] -= delta;
        excess[target] += delta;
    }

    let primal: f64 = flow
        .iter()
        .enumerate()
        .flat_map(|(u, m)| m.iter().map(move |(&v, &f)| (u, v, f)))
        .map(|(u, v, f)| f as f64 * cost(u, v))
        .sum();
    let psi: Vec<f64> = (0..n).map(|i| (pot[g] - pot[i]).clamp(-caps[i], caps[i])).collect();
    let dual: f64 = atoms.iter().zip(&psi).map(|(a, p)| a.d as f64 * p).sum();
    debug_assert!((primal - dual).abs() <= FEAS_TOL * (1.0 + primal.abs()), "primal {primal} and dual {dual} disagree");
    (dual, psi)
}

/// Checks `|ψ_i| ≤ cap_i` and `|ψ_i − ψ_j| ≤ |x_i − x_j|` up to `tol`.
pub fn witness_is_admissible(domain: &Domain, w: &[WitnessEntry], tol: f64) -> bool {
    let pts: Vec<Point> = w.iter().map(|e| Point::new(e.x, e.y)).collect();
    w.iter().enumerate().all(|(i, e)| {
        e.psi.abs() <= cap(domain, pts[i]) + tol
            && (0..i).all(|j| (e.psi - w[j].psi).abs() <= pts[i].dist(pts[j]) + tol)
    })
}

/// A test function sampled on the grid `origin + h·(i, j)`, `0 ≤ i < nx`, `0 ≤ j < ny`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in `j`: value `(i, j)` at `values[j * nx + i]`.
    pub values: Vec<f64>,
}

impl GridFunction {
    /// Samples `f` on a grid of step `h` covering the bounding box of `domain`.
    pub fn sample(domain: &Domain, h: f64, f: impl Fn(Point) -> f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return invalid(format!("grid step must be positive, got {h}"));
        }
        let (x0, x1, y0, y1) = domain.bounding_box();
        let nx = ((x1 - x0) / h).ceil() as usize + 1;
        let ny = ((y1 - y0) / h).ceil() as usize + 1;
        if nx.saturating_mul(ny) > 50_000_000 {
            return Err(Error::Resource(format!("{nx}x{ny} grid")));
        }
        let origin = Point::new(x0, y0);
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(Point::new(x0 + i as f64 * h, y0 + j as f64 * h)));
            }
        }
        Ok(GridFunction { origin, h, nx, ny, values })
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(self.origin.x + i as f64 * self.h, self.origin.y + j as f64 * self.h)
    }

    /// Checks the cap at every sample and the Lipschitz bound between
    /// 8-neighbors.
    pub fn check_admissible(&self, domain: &Domain) -> Result<()> {
        if self.values.len() != self.nx * self.ny {
            return invalid("grid function has the wrong number of samples");
        }
        let tol = 1e-12;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = self.values[j * self.nx + i];
                let p = self.point(i, j);
                if !(v.abs() <= cap(domain, p) + tol) {
                    return invalid(format!("test function value {v} at {p} exceeds its cap"));
                }
                for (di, dj) in [(1usize, 0usize), (0, 1), (1, 1)] {
                    if i + di < self.nx && j + dj < self.ny {
                        let w = self.values[(j + dj) * self.nx + i + di];
                        let q = self.point(i + di, j + dj);
                        if (v - w).abs() > p.dist(q) * (1.0 + tol) {
                            return invalid(format!("test function is not 1-Lipschitz at {p}"));
                        }
                    }
                    if i >= 1 && j + 1 < self.ny {
                        let w = self.values[(j + 1) * self.nx + i - 1];
                        let q = self.point(i - 1, j + 1);
                        if (v - w).abs() > p.dist(q) * (1.0 + tol) {
                            return invalid(format!("test function is not 1-Lipschitz at {p}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `min_p (φ_p + |x − p|)` clamped to `±cap(x)`: a 1-Lipschitz, capped
    /// function of `x`.
    pub fn extension(&self, domain: &Domain, x: Point) -> f64 {
        let mut m = f64::INFINITY;
        for j in 0..self.ny {
            for i in 0..self.nx {
                m = m.min(self.values[j * self.nx + i] + x.dist(self.point(i, j)));
            }
        }
        let c = cap(domain, x);
        m.clamp(-c, c)
    }
}

/// `Σ a_i φ̃(x_i)` for an admissible sampled `φ`; never exceeds the flat distance.
pub fn flat_lower_bound(mu: &VortexMeasure, nu: &VortexMeasure, phi: &GridFunction) -> Result<f64> {
    let diff = mu.difference(nu)?;
    phi.check_admissible(&diff.domain)?;
    Ok(diff.pair(|x| phi.extension(&diff.domain, x)))
}
