//! Regime sweeps over ε and the vorticity/Jacobian comparison.

use std::f64::consts::TAU;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constructions::{AnyField, Construction, FieldSpec, VortexSpec};
use crate::energy::{clock_energy, jacobian_pairing, sample_scalar};
use crate::error::{invalid, Error, Result};
use crate::flat_metric::flat_distance;
use crate::geometry::{Domain, Point, UnitVec};
use crate::lattice::{ClockField, ClockParams};
use crate::vorticity::{vorticity_measure, Atom, VortexMeasure};

/// Finest spacing accepted without `allow_fine`.
pub const FINEST_DESK_EPS: f64 = 1.0 / 512.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Jump,
    Critical,
    Vortex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThetaRule {
    /// `θ = c·ε^a`.
    Power {
        a: f64,
        c: f64,
    },
    /// `θ = ε|log ε|`.
    Critical,
    FixedN {
        n: u32,
    },
}

impl ThetaRule {
    pub fn target(&self, eps: f64) -> f64 {
        match *self {
            ThetaRule::Power { a, c } => c * eps.powf(a),
            ThetaRule::Critical => eps * eps.ln().abs(),
            ThetaRule::FixedN { n } => TAU / n as f64,
        }
    }
}

/// `θ/(ε|log ε|)`.
pub fn critical_ratio(theta: f64, eps: f64) -> f64 {
    theta / (eps * eps.ln().abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSweepSpec {
    pub regime: Regime,
    pub eps_list: Vec<f64>,
    pub theta_rule: ThetaRule,
    pub domain: Domain,
    pub construction: Construction,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub allow_fine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub n: u32,
    pub theta: f64,
    pub raw: f64,
    pub scaled: f64,
    pub vorticity_total: i64,
    pub flat_distance: f64,
    pub wall_ms: f64,
}

impl RegimeSweepSpec {
    /// Rejects specs whose θ-rule contradicts the regime, before any field is built.
    pub fn check(&self) -> Result<()> {
        self.domain.validate()?;
        if self.eps_list.is_empty() {
            return invalid("empty eps list");
        }
        for &eps in &self.eps_list {
            if !(eps > 0.0 && eps < 1.0) {
                return invalid(format!("eps must lie in (0,1), got {eps}"));
            }
            if eps < FINEST_DESK_EPS && !self.allow_fine {
                return invalid(format!("eps = {eps} is finer than 2^-9; pass allow_fine"));
            }
            let t = self.theta_rule.target(eps);
            if !(t > 0.0 && t.is_finite()) {
                return invalid(format!("theta rule gives {t} at eps = {eps}"));
            }
        }
        let finest = self.eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
        match self.regime {
            Regime::Jump => {
                let r = critical_ratio(self.theta_rule.target(finest), finest);
                if r < 5.0 {
                    return invalid(format!(
                        "jump regime needs theta/(eps|log eps|) >= 5 at the finest eps, got {r:.3}"
                    ));
                }
            }
            Regime::Vortex => {
                for &eps in &self.eps_list {
                    let t = self.theta_rule.target(eps);
                    if t > eps / 5.0 {
                        return invalid(format!("vortex regime needs theta <= eps/5, got {t} at eps = {eps}"));
                    }
                }
            }
            Regime::Critical => {
                for &eps in &self.eps_list {
                    let r = critical_ratio(self.theta_rule.target(eps), eps);
                    if !(0.2..=5.0).contains(&r) {
                        return invalid(format!(
                            "critical regime needs theta/(eps|log eps|) in [1/5, 5], got {r:.3} at eps = {eps}"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Limit measure of the construction: one atom per vortex inside the domain.
    pub fn target_measure(&self) -> Result<VortexMeasure> {
        let mut vs = Vec::new();
        collect_vortices(&self.construction, &mut vs);
        VortexMeasure::new(
            self.domain,
            vs.iter().filter(|v| self.domain.boundary_dist(v.center) > 0.0).map(|v| Atom {
                x: v.center.x,
                y: v.center.y,
                d: v.degree,
            }),
        )
    }

    /// Clock for a given `ε`: `⌈2π/θ⌉`, raised to the first `N` for which every
    /// transition value is a clock value.
    pub fn clock_for(&self, eps: f64) -> Result<ClockParams> {
        let base = match self.theta_rule {
            ThetaRule::FixedN { n } => ClockParams::new(n)?,
            rule => ClockParams::from_theta_target(rule.target(eps))?,
        };
        let mut wall_values = Vec::new();
        collect_transition_values(&self.construction, &mut wall_values);
        if wall_values.is_empty() {
            return Ok(base);
        }
        if let ThetaRule::FixedN { .. } = self.theta_rule {
            return if wall_values.iter().all(|&v| base.index_of(v).is_some()) {
                Ok(base)
            } else {
                invalid(format!("transition values are not clock values for N = {}", base.n()))
            };
        }
        let n0 = base.n();
        for n in n0..=n0.saturating_mul(4).max(n0 + 64) {
            let c = ClockParams::new(n)?;
            if wall_values.iter().all(|&v| c.index_of(v).is_some()) {
                return Ok(c);
            }
        }
        invalid(format!("no clock size near {n0} represents the transition values"))
    }

    /// Normalization of the raw energy for this regime.
    pub fn scale(&self, raw: f64, eps: f64, theta: f64, mass: i64) -> f64 {
        match self.regime {
            Regime::Jump | Regime::Critical => raw / (eps * theta),
            Regime::Vortex => raw / (eps * eps) - TAU * mass as f64 * eps.ln().abs(),
        }
    }
}

fn collect_vortices(c: &Construction, out: &mut Vec<VortexSpec>) {
    match c {
        Construction::Vortex { vortices } => out.extend(vortices.iter().copied()),
        Construction::Composite { vortices, background, .. } => {
            out.extend(vortices.iter().copied());
            collect_vortices(background, out);
        }
        Construction::Product { factors } => factors.iter().for_each(|f| collect_vortices(f, out)),
        Construction::Constant { .. } | Construction::Jump(_) | Construction::Transition(_) => {}
    }
}

fn collect_transition_values(c: &Construction, out: &mut Vec<UnitVec>) {
    match c {
        Construction::Transition(s) => out.extend([s.v1, s.v2]),
        Construction::Composite { background, .. } => collect_transition_values(background, out),
        Construction::Product { factors } => factors.iter().for_each(|f| collect_transition_values(f, out)),
        Construction::Constant { .. } | Construction::Jump(_) | Construction::Vortex { .. } => {}
    }
}

/// One row per `ε`, in the order of `eps_list`.
pub fn run_sweep(spec: &RegimeSweepSpec) -> Result<Vec<SweepRow>> {
    spec.check()?;
    let target = spec.target_measure()?;
    let mass = target.total_variation();
    spec.eps_list
        .iter()
        .map(|&eps| {
            let start = Instant::now();
            let clock = spec.clock_for(eps)?;
            let fs =
                FieldSpec { domain: spec.domain, eps, n: Some(clock.n()), construction: spec.construction.clone() };
            let AnyField::Clock(u) = fs.build()? else {
                unreachable!("a clock size was given");
            };
            let raw = clock_energy(&u, None);
            let theta = clock.theta();
            let mu = vorticity_measure(&u)?;
            let flat = flat_distance(&mu, &target)?.value;
            Ok(SweepRow {
                eps,
                n: clock.n(),
                theta,
                raw,
                scaled: spec.scale(raw, eps, theta, mass),
                vorticity_total: mu.total_variation(),
                flat_distance: flat,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect()
}

/// CSV with a leading `# seed=…` comment line.
pub fn write_sweep_csv(spec: &RegimeSweepSpec, rows: &[SweepRow], w: impl Write) -> Result<()> {
    let mut w = w;
    let regime = serde_json::to_value(spec.regime)?;
    writeln!(w, "# seed={} regime={}", spec.seed, regime.as_str().unwrap_or("?"))?;
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidArgument(format!("{other:?}")),
    }
}

/// `1` on `B_{r_in}(center)`, `0` outside `B_{r_out}(center)`, radially affine between.
pub fn cone(center: Point, r_in: f64, r_out: f64) -> impl Fn(Point) -> f64 {
    move |x| ((r_out - x.dist(center)) / (r_out - r_in)).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianCheck {
    pub vorticity: f64,
    pub jacobian: f64,
    pub difference: f64,
}

/// `⟨μ_u, φ⟩` against `⟨π⁻¹ J û, φ⟩` for the affine interpolation `û`.
pub fn jacobian_equivalence_check(u: &ClockField, phi: impl Fn(Point) -> f64) -> Result<JacobianCheck> {
    let mu = vorticity_measure(u)?;
    let vorticity = mu.pair(&phi);
    let jacobian = jacobian_pairing(&u.embed(), &sample_scalar(u.lattice(), &phi))?;
    Ok(JacobianCheck { vorticity, jacobian, difference: vorticity - jacobian })
}
