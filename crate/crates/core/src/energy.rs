//! Lattice energies: XY and clock energies, the jump functional, the discrete
//! Dirichlet form and the Jacobian pairing of the affine interpolation.
//!
//! Sums run over unordered bonds with weight one, which is the ordered-pair
//! sum with its factor ½ already applied. Bond sums use [`pairwise_sum`] in
//! bond order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_dist, Domain, Region};
use crate::lattice::{ClockField, Lattice, SpinField};
use crate::pairwise_sum;

fn in_region(l: &Lattice, region: Option<&Domain>, a: usize, b: usize) -> bool {
    match region {
        None => true,
        Some(d) => d.contains(l.position(a)) && d.contains(l.position(b)),
    }
}

fn bond_sum(l: &Lattice, region: Option<&Domain>, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    let terms: Vec<f64> =
        l.bonds().into_iter().filter(|&(a, b)| in_region(l, region, a, b)).map(|(a, b)| f(a, b)).collect();
    pairwise_sum(&terms)
}

/// `Σ ε²|u(εi) − u(εj)|²` over bonds with both ends in `region`.
pub fn xy_energy(u: &SpinField, region: Option<&Domain>) -> f64 {
    let l = u.lattice();
    let e2 = l.eps() * l.eps();
    e2 * bond_sum(l, region, |a, b| u.value(a).chord_sq(u.value(b)))
}

/// XY energy of a clock field, with the exact chord `2 sin(|Δk|_N θ/2)`.
pub fn clock_energy(u: &ClockField, region: Option<&Domain>) -> f64 {
    let l = u.lattice();
    let c = u.clock();
    let e2 = l.eps() * l.eps();
    e2 * bond_sum(l, region, |a, b| {
        let ch = c.chord(u.index(a), u.index(b));
        ch * ch
    })
}

/// `Σ ε·d_{S¹}(u(εi), u(εj))`: the anisotropic jump energy of the
/// piecewise-constant interpolation.
pub fn jump_functional(u: &SpinField) -> f64 {
    let l = u.lattice();
    l.eps() * bond_sum(l, None, |a, b| geodesic_dist(u.value(a), u.value(b)))
}

/// `√(ξ₂₁² + ξ₂₂²) + √(ξ₁₁² + ξ₁₂²)`.
pub fn phi_integrand(xi21: f64, xi22: f64, xi11: f64, xi12: f64) -> f64 {
    xi21.hypot(xi22) + xi11.hypot(xi12)
}

/// Discrete Dirichlet form `Σ |u(εi) − u(εj)|²` over bonds in `region`.
pub fn dirichlet_energy(u: &SpinField, region: Option<&Domain>) -> f64 {
    bond_sum(u.lattice(), region, |a, b| u.value(a).chord_sq(u.value(b)))
}

/// `⟨π⁻¹Jû, φ⟩ = −(1/2π)∫ (û₁∂₂û₂ − û₂∂₂û₁, −û₁∂₁û₂ + û₂∂₁û₁)·∇φ`, where `û`
/// and `φ` are the affine interpolations of the site values of `u` and `phi`.
///
/// Every site where `phi` is nonzero must have all its triangles present.
pub fn jacobian_pairing(u: &SpinField, phi: &[f64]) -> Result<f64> {
    let l = u.lattice();
    if phi.len() != l.len() {
        return crate::error::invalid(format!("{} test values for {} sites", phi.len(), l.len()));
    }
    for (k, &s) in l.sites().iter().enumerate() {
        if phi[k] != 0.0 {
            let [i, j] = s;
            for sq in [[i, j], [i - 1, j], [i, j - 1], [i - 1, j - 1]] {
                if l.plaquette(sq).is_none() {
                    let p = l.position(k);
                    return Err(Error::OutOfSupport { x: p.x, y: p.y });
                }
            }
        }
    }
    let eps = l.eps();
    let area = 0.5 * eps * eps;
    let aff = u.affine();
    let mut terms = Vec::new();
    for t in l.triangles() {
        let fphi = t.corners.map(|k| phi[k]);
        let gphi = t.gradient(fphi, eps);
        if gphi == [0.0, 0.0] {
            continue;
        }
        let g = aff.triangle_gradient(&t);
        // The integrand is affine on the triangle, so the edge-midpoint rule is
        // exact; its average is the corner average.
        let v = t.corners.map(|k| u.value(k));
        let u1 = (v[0].x() + v[1].x() + v[2].x()) / 3.0;
        let u2 = (v[0].y() + v[1].y() + v[2].y()) / 3.0;
        let (d1u1, d2u1, d1u2, d2u2) = (g.a11, g.a12, g.a21, g.a22);
        let j1 = u1 * d2u2 - u2 * d2u1;
        let j2 = -u1 * d1u2 + u2 * d1u1;
        terms.push((j1 * gphi[0] + j2 * gphi[1]) * area);
    }
    Ok(-pairwise_sum(&terms) / std::f64::consts::TAU)
}

/// Samples a scalar function at the sites of `l`.
pub fn sample_scalar(l: &Lattice, f: impl Fn(crate::Point) -> f64) -> Vec<f64> {
    (0..l.len()).map(|k| f(l.position(k))).collect()
}

/// Raw energy with its regime normalizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub eps: f64,
    pub theta: Option<f64>,
    pub raw: f64,
    pub scaled: BTreeMap<String, f64>,
    pub region: Option<Domain>,
}

impl EnergyReport {
    pub fn new(raw: f64, eps: f64, theta: Option<f64>, region: Option<Domain>) -> Self {
        let mut scaled = BTreeMap::new();
        let e2 = eps * eps;
        if let Some(t) = theta {
            scaled.insert("per_eps_theta".to_string(), raw / (eps * t));
        }
        scaled.insert("per_eps2".to_string(), raw / e2);
        let log = eps.ln().abs();
        if log > 0.0 {
            scaled.insert("per_eps2_log".to_string(), raw / (e2 * log));
        }
        EnergyReport { eps, theta, raw, scaled, region }
    }

    pub fn for_spin(u: &SpinField, region: Option<Domain>) -> Self {
        let raw = xy_energy(u, region.as_ref());
        EnergyReport::new(raw, u.lattice().eps(), None, region)
    }

    pub fn for_clock(u: &ClockField, region: Option<Domain>) -> Self {
        let raw = clock_energy(u, region.as_ref());
        EnergyReport::new(raw, u.lattice().eps(), Some(u.clock().theta()), region)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, UnitVec};
    use crate::lattice::{project_clock, ClockParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    fn pair(eps: f64) -> Arc<Lattice> {
        let d = Domain::rectangle(0.5 * eps, 2.5 * eps, 0.5 * eps, 1.5 * eps).unwrap();
        Arc::new(Lattice::new(d, eps).unwrap())
    }

    #[test]
    fn single_bond_values() {
        let eps = 0.1;
        let l = pair(eps);
        let u = SpinField::new(l.clone(), vec![UnitVec::ONE, UnitVec::from_angle(PI)]).unwrap();
        assert_abs_diff_eq!(xy_energy(&u, None), 4.0 * eps * eps, epsilon = 1e-15);
        let u = SpinField::new(l.clone(), vec![UnitVec::ONE, UnitVec::I]).unwrap();
        assert_abs_diff_eq!(xy_energy(&u, None), 2.0 * eps * eps, epsilon = 1e-15);
        assert_abs_diff_eq!(jump_functional(&u), eps * FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(dirichlet_energy(&u, None), 2.0, epsilon = 1e-14);

        let c = ClockParams::new(4).unwrap();
        let cf = ClockField::new(l.clone(), c, vec![0, 1]).unwrap();
        assert_abs_diff_eq!(clock_energy(&cf, None), 2.0 * eps * eps, epsilon = 1e-15);
        let cf = ClockField::new(l, c, vec![3, 3]).unwrap();
        assert_eq!(clock_energy(&cf, None), 0.0);
    }

    #[test]
    fn clock_energy_matches_embedding() {
        let l = Arc::new(Lattice::new(Domain::unit_disk(), 0.07).unwrap());
        let mut seed = 12345u64;
        for n in [3, 4, 7, 16, 101] {
            let c = ClockParams::new(n).unwrap();
            let idx = (0..l.len())
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((seed >> 33) % n as u64) as u32
                })
                .collect();
            let cf = ClockField::new(l.clone(), c, idx).unwrap();
            assert_abs_diff_eq!(clock_energy(&cf, None), xy_energy(&cf.embed(), None), epsilon = 1e-12);
        }
    }

    #[test]
    fn localized_energy_requires_both_endpoints() {
        let eps = 0.1;
        let l = pair(eps);
        let u = SpinField::new(l, vec![UnitVec::ONE, UnitVec::I]).unwrap();
        let left = Domain::disk(Point::new(eps, eps), 0.5 * eps).unwrap();
        assert_eq!(xy_energy(&u, Some(&left)), 0.0);
        let both = Domain::disk(Point::new(1.5 * eps, eps), eps).unwrap();
        assert_abs_diff_eq!(xy_energy(&u, Some(&both)), 2.0 * eps * eps, epsilon = 1e-15);
    }

    #[test]
    fn rotation_invariance() {
        let l = Arc::new(Lattice::new(Domain::unit_square(), 1.0 / 20.0).unwrap());
        let u = SpinField::from_fn(l, |p| UnitVec::from_angle(5.0 * p.x * p.y + 3.0 * p.x));
        let r = u.rotated(UnitVec::from_angle(1.234));
        assert_abs_diff_eq!(xy_energy(&u, None), xy_energy(&r, None), epsilon = 1e-12);
    }

    #[test]
    fn vertical_wall_jump() {
        let eps = 1.0 / 32.0;
        let l = Arc::new(Lattice::new(Domain::unit_square(), eps).unwrap());
        let (v1, v2) = (UnitVec::ONE, UnitVec::from_angle(2.0));
        let u = SpinField::from_fn(l, |p| if p.x <= 0.5 { v1 } else { v2 });
        let j = jump_functional(&u);
        assert!((j - 2.0).abs() <= 2.0 * eps * 2.0, "{j}");
    }

    #[test]
    fn phi_integrand_examples() {
        assert_eq!(phi_integrand(0.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(phi_integrand(1.0, 0.0, 0.0, 0.0), 1.0);
        let (a, b, c, d) = (0.3, -1.2, 2.0, 0.7);
        assert_abs_diff_eq!(
            phi_integrand(2.5 * a, 2.5 * b, 2.5 * c, 2.5 * d),
            2.5 * phi_integrand(a, b, c, d),
            epsilon = 1e-12
        );
    }

    #[test]
    fn dirichlet_is_energy_over_eps2() {
        let eps = 1.0 / 16.0;
        let l = Arc::new(Lattice::new(Domain::unit_disk(), eps).unwrap());
        let u = SpinField::from_fn(l, |p| UnitVec::from_angle(3.0 * p.x - p.y * p.y));
        assert_abs_diff_eq!(dirichlet_energy(&u, None), xy_energy(&u, None) / (eps * eps), epsilon = 1e-10);
    }

    #[test]
    fn discrete_dirichlet_of_radial_field() {
        let (r, big_r) = (0.25, 1.0);
        let eps = r / 8.0;
        let l = Arc::new(Lattice::new(Domain::disk(Point::ORIGIN, 1.1).unwrap(), eps).unwrap());
        let off = Point::new(0.5 * eps, 0.5 * eps);
        let u = SpinField::from_fn(l, |p| {
            let q = p - off;
            UnitVec::normalize(q.x, q.y).unwrap()
        });
        let outer = Domain::disk(off, big_r).unwrap();
        let inner = Domain::disk(off, r).unwrap();
        let e = dirichlet_energy(&u, Some(&outer)) - dirichlet_energy(&u, Some(&inner));
        let exact = 2.0 * PI * (big_r / r).ln();
        assert!((e - exact).abs() < 0.1 * exact, "{e} vs {exact}");
    }

    #[test]
    fn jacobian_pairing_examples() {
        let eps = 1.0 / 64.0;
        let l = Arc::new(Lattice::new(Domain::unit_disk(), eps).unwrap());
        let cone = sample_scalar(&l, |p| ((2.0 / 3.0 - p.norm()) * 3.0).clamp(0.0, 1.0));
        let c = SpinField::constant(l.clone(), UnitVec::from_angle(0.3));
        assert_abs_diff_eq!(jacobian_pairing(&c, &cone).unwrap(), 0.0, epsilon = 1e-15);

        let off = Point::new(0.3 * eps, 0.6 * eps);
        let v = SpinField::from_fn(l.clone(), |p| {
            let q = p - off;
            UnitVec::normalize(q.x, q.y).unwrap_or(UnitVec::ONE)
        });
        let j = jacobian_pairing(&v, &cone).unwrap();
        assert!((j - 1.0).abs() < 0.05, "{j}");

        let plateau = sample_scalar(&l, |p| if p.norm() < 0.5 { 1.0 } else { 0.0 });
        let inside = sample_scalar(&l, |p| if p.norm() < 0.4 { 1.0 } else { 0.0 });
        let ring = jacobian_pairing(&c, &plateau).unwrap() - jacobian_pairing(&c, &inside).unwrap();
        assert_eq!(ring, 0.0);
        let everywhere = vec![1.0; l.len()];
        assert!(matches!(jacobian_pairing(&v, &everywhere), Err(Error::OutOfSupport { .. })));

        // degree -1
        let w = SpinField::from_fn(l, |p| {
            let q = p - off;
            UnitVec::normalize(q.x, -q.y).unwrap_or(UnitVec::ONE)
        });
        assert!((jacobian_pairing(&w, &cone).unwrap() + 1.0).abs() < 0.05);
    }

    #[test]
    fn report_scalings() {
        let l = Arc::new(Lattice::new(Domain::unit_square(), 0.125).unwrap());
        let u = SpinField::from_fn(l, |p| UnitVec::from_angle(p.x));
        let cf = project_clock(&u, ClockParams::new(32).unwrap());
        let r = EnergyReport::for_clock(&cf, None);
        let t = cf.clock().theta();
        assert_abs_diff_eq!(r.scaled["per_eps_theta"] * 0.125 * t, r.raw, epsilon = 1e-12);
        assert_abs_diff_eq!(r.scaled["per_eps2"] * 0.125 * 0.125, r.raw, epsilon = 1e-12);
        let json = serde_json::to_string(&r).unwrap();
        let back: EnergyReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
