//! Spectral quantities from fixed-point solutions: Stieltjes transforms,
//! densities as Plemelj limits, the atom at zero of the covariance model,
//! tail constants and whole density curves with their CDFs.

use crate::error::{Error, Result};
use crate::matrices::{DiagonalLaw, SigmaProfile};
use crate::solver::{FixedPointConfig, FixedPointSolution, FixedPointSystem, Tracker};
use crate::special_fn::{c_alpha, g_family, ppow, AlphaParam};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    Wigner,
    Band { profile: SigmaProfile },
    Wishart { gamma: f64 },
    Perturbed { profile: SigmaProfile, diag: DiagonalLaw },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Wigner => "wigner",
            Model::Band { .. } => "band",
            Model::Wishart { .. } => "wishart",
            Model::Perturbed { .. } => "perturbed",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Wigner => Ok(()),
            Model::Band { profile } => profile.validate(),
            Model::Wishart { gamma } => {
                if *gamma > 0.0 && *gamma <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("gamma", format!("{gamma} must lie in (0, 1]")))
                }
            }
            Model::Perturbed { profile, diag } => {
                profile.validate()?;
                diag.validate()
            }
        }
    }

    pub fn system(&self, a: &AlphaParam, band_blocks: usize) -> Result<FixedPointSystem> {
        self.validate()?;
        match self {
            Model::Wigner => Ok(FixedPointSystem::wigner(*a)),
            Model::Band { profile } => FixedPointSystem::band(*a, profile, band_blocks),
            Model::Wishart { gamma } => FixedPointSystem::wishart(*a, *gamma),
            Model::Perturbed { profile, diag } => {
                FixedPointSystem::perturbed(*a, profile, diag, band_blocks)
            }
        }
    }

    /// Whether the limiting measure is symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Model::Wishart { .. } => false,
            Model::Perturbed { diag, .. } => diag.is_symmetric(),
            _ => true,
        }
    }

    /// Exponent `p` in `ρ(t) ~ c t^{-p-1}`.
    pub fn tail_exponent(&self, a: &AlphaParam) -> f64 {
        match self {
            Model::Wishart { .. } => a.value() / 2.0,
            _ => a.value(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    /// Smallest `ε` of the Richardson triple `ε·{4, 2, 1}`.
    pub eps_floor: f64,
    pub fixed_point: FixedPointConfig,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            eps_floor: 1e-6,
            fixed_point: FixedPointConfig::default(),
        }
    }
}

impl DensityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_floor >= 1e-6 && self.eps_floor < 1.0) {
            return Err(Error::invalid("eps_floor", "must lie in [1e-6, 1)"));
        }
        self.fixed_point.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Converged,
    /// Continuation broke down; the value comes from the smallest `ε` reached.
    Degraded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub t: f64,
    /// Richardson limit of `-(1/π) Im G(t + iε)`.
    pub rho: f64,
    /// The same quantity from the boundary value of the fixed point, when
    /// the real-axis solve succeeds.
    pub boundary: Option<f64>,
    pub eps_reached: f64,
    pub quality: Quality,
}

fn h(a: &AlphaParam, y: Complex64) -> Result<Complex64> {
    Ok(g_family(a, [2.0], y, &Default::default())?[0])
}

fn richardson(v4: f64, v2: f64, v1: f64) -> f64 {
    (8.0 * v1 - 6.0 * v2 + v4) / 3.0
}

/// Plemelj limit along `Re z = x` of `f(solution)`.
fn plemelj<F>(sys: &FixedPointSystem, x: f64, t: f64, cfg: &DensityConfig, f: F) -> Result<DensityPoint>
where
    F: Fn(&FixedPointSolution) -> Result<f64>,
{
    cfg.validate()?;
    let eps = [4.0 * cfg.eps_floor, 2.0 * cfg.eps_floor, cfg.eps_floor];
    let mut tracker = Tracker::start(sys, x, eps[0], &cfg.fixed_point)?;
    let mut vals = Vec::with_capacity(3);
    let mut reached = f64::INFINITY;
    for &e in &eps {
        if tracker.advance_to(e).is_err() {
            break;
        }
        vals.push(f(&tracker.solution())?);
        reached = e;
    }
    if vals.is_empty() {
        let sol = tracker.solution();
        return Ok(DensityPoint {
            t,
            rho: f(&sol)?,
            boundary: None,
            eps_reached: sol.z.im,
            quality: Quality::Degraded,
        });
    }
    if vals.len() < 3 {
        return Ok(DensityPoint {
            t,
            rho: *vals.last().unwrap(),
            boundary: None,
            eps_reached: reached,
            quality: Quality::Degraded,
        });
    }
    let rho = richardson(vals[0], vals[1], vals[2]);
    let boundary = match tracker.advance_to(0.0) {
        Ok(()) => f(&tracker.solution()).ok(),
        Err(_) => None,
    };
    Ok(DensityPoint {
        t,
        rho,
        boundary,
        eps_reached: reached,
        quality: Quality::Converged,
    })
}

/// Stieltjes transform of the band (or Wigner) law at `Im z > 0`.
pub fn stieltjes_band(
    a: &AlphaParam,
    profile: &SigmaProfile,
    z: Complex64,
    cfg: &FixedPointConfig,
) -> Result<Complex64> {
    let sys = FixedPointSystem::band(*a, profile, cfg.band_blocks)?;
    let sol = crate::solver::solve_system(&sys, z, cfg)?;
    sys.stieltjes(z, &sol.values())
}

pub fn stieltjes_perturbed(
    a: &AlphaParam,
    profile: &SigmaProfile,
    diag: &DiagonalLaw,
    z: Complex64,
    cfg: &FixedPointConfig,
) -> Result<Complex64> {
    let sys = FixedPointSystem::perturbed(*a, profile, diag, cfg.band_blocks)?;
    let sol = crate::solver::solve_system(&sys, z, cfg)?;
    sys.stieltjes(z, &sol.values())
}

/// `G^γ(w) = h_α(Y_1(√w)) / w` for `Im w > 0`.
pub fn stieltjes_wishart(a: &AlphaParam, gamma: f64, w: Complex64, cfg: &FixedPointConfig) -> Result<Complex64> {
    if !(w.im > 0.0) {
        return Err(Error::Domain(format!("need Im w > 0, got {w}")));
    }
    let sys = FixedPointSystem::wishart(*a, gamma)?;
    let z = w.sqrt();
    let sol = crate::solver::solve_system(&sys, z, cfg)?;
    Ok(h(a, sol.unknowns[0].value)? / w)
}

/// `|h(Y_1) - (1 - γ) - γ h(Y_2)|` at `z`.
pub fn serban_residual(a: &AlphaParam, gamma: f64, z: Complex64, cfg: &FixedPointConfig) -> Result<f64> {
    let sys = FixedPointSystem::wishart(*a, gamma)?;
    let sol = crate::solver::solve_system(&sys, z, cfg)?;
    let y = sol.values();
    Ok((h(a, y[0])? - (1.0 - gamma) - gamma * h(a, y[1])?).norm())
}

fn band_point(sys: &FixedPointSystem, t: f64, cfg: &DensityConfig) -> Result<DensityPoint> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::invalid("t", "must be finite and non-zero"));
    }
    if t < 0.0 && sys.is_symmetric() {
        let p = band_point(sys, -t, cfg)?;
        return Ok(DensityPoint { t, ..p });
    }
    plemelj(sys, t, t, cfg, |s| Ok(-sys.stieltjes(s.z, &s.values())?.im / PI))
}

pub fn density_band(a: &AlphaParam, profile: &SigmaProfile, t: f64, cfg: &DensityConfig) -> Result<DensityPoint> {
    band_point(&FixedPointSystem::band(*a, profile, cfg.fixed_point.band_blocks)?, t, cfg)
}

pub fn density_wigner(a: &AlphaParam, t: f64, cfg: &DensityConfig) -> Result<DensityPoint> {
    band_point(&FixedPointSystem::wigner(*a), t, cfg)
}

pub fn density_perturbed(
    a: &AlphaParam,
    profile: &SigmaProfile,
    diag: &DiagonalLaw,
    t: f64,
    cfg: &DensityConfig,
) -> Result<DensityPoint> {
    band_point(
        &FixedPointSystem::perturbed(*a, profile, diag, cfg.fixed_point.band_blocks)?,
        t,
        cfg,
    )
}

/// `α|t|^{α-1} / (2|C_α|π) · Im(i^{-α} Y(|t|)^2)`.
pub fn wigner_formula_from(a: &AlphaParam, t: f64, y: Complex64) -> f64 {
    let al = a.value();
    let c = c_alpha(a).norm();
    al * t.abs().powf(al - 1.0) / (2.0 * c * PI) * (ppow(Complex64::i(), -al) * y * y).im
}

/// The Wigner density from the boundary value `Y(|t|)`, evaluated in both
/// closed forms, which must agree to `1e-8`.
pub fn density_wigner_formula(a: &AlphaParam, t: f64, cfg: &DensityConfig) -> Result<f64> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::invalid("t", "must be finite and non-zero"));
    }
    let sys = FixedPointSystem::wigner(*a);
    let x = t.abs();
    let mut tracker = Tracker::start(&sys, x, cfg.eps_floor, &cfg.fixed_point)?;
    tracker.advance_to(0.0)?;
    let y = tracker.solution().unknowns[0].value;
    let first = -h(a, y)?.im / (PI * x);
    let second = wigner_formula_from(a, x, y);
    if (first - second).abs() > 1e-8 * first.abs().max(1e-3) {
        return Err(Error::Extrapolation(format!(
            "closed forms disagree at t = {t}: {first} vs {second}"
        )));
    }
    Ok(first)
}

fn wishart_point(sys: &FixedPointSystem, gamma: f64, t: f64, cfg: &DensityConfig) -> Result<DensityPoint> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", "must be positive"));
    }
    let a = sys.alpha;
    // The atom's pole term is removed exactly before extrapolating in ε.
    let atom = (1.0 - gamma).max(0.0);
    plemelj(sys, t.sqrt(), t, cfg, |s| {
        Ok(-((h(&a, s.unknowns[0].value)? - atom) / (s.z * s.z)).im / PI)
    })
}

/// Density of the covariance model; `γ = 1` goes through the Wigner law.
pub fn density_wishart(a: &AlphaParam, gamma: f64, t: f64, cfg: &DensityConfig) -> Result<DensityPoint> {
    Model::Wishart { gamma }.validate()?;
    if gamma == 1.0 {
        if !(t > 0.0) {
            return Err(Error::invalid("t", "must be positive"));
        }
        let s = 2f64.powf(1.0 / a.value());
        let p = density_wigner(a, s * t.sqrt(), cfg)?;
        let k = s / t.sqrt();
        return Ok(DensityPoint {
            t,
            rho: k * p.rho,
            boundary: p.boundary.map(|b| k * b),
            ..p
        });
    }
    wishart_point(&FixedPointSystem::wishart(*a, gamma)?, gamma, t, cfg)
}

/// Mass of the atom at zero, `lim_{x↓0} h_α(Y_1(ix))`, from the values at
/// `x = 10^{-1}, …, 10^{-4}` with a power-law extrapolation.
pub fn atom_at_zero_wishart(a: &AlphaParam, gamma: f64, cfg: &FixedPointConfig) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma", "must lie in (0, 1)"));
    }
    let (values, _) = atom_path(a, gamma, &[1e-1, 1e-2, 1e-3, 1e-4], cfg)?;
    extrapolate_geometric(&values)
}

/// `h_α(Y_1(ix))` along the given decreasing `x`, together with `Y_1(ix)`.
pub fn atom_path(
    a: &AlphaParam,
    gamma: f64,
    xs: &[f64],
    cfg: &FixedPointConfig,
) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let sys = FixedPointSystem::wishart(*a, gamma)?;
    let mut tracker = Tracker::start(&sys, 0.0, xs[0], cfg)?;
    let mut hs = Vec::with_capacity(xs.len());
    let mut ys = Vec::with_capacity(xs.len());
    for &x in xs {
        tracker.advance_to(x)?;
        let y = tracker.solution().unknowns[0].value;
        hs.push(h(a, y)?.re);
        ys.push(y);
    }
    Ok((hs, ys))
}

/// Limit of `v_k = m + c r^k` from its last three terms.
fn extrapolate_geometric(v: &[f64]) -> Result<f64> {
    let n = v.len();
    if n < 3 {
        return v.last().copied().ok_or_else(|| Error::Extrapolation("no values".into()));
    }
    let (a, b, c) = (v[n - 3], v[n - 2], v[n - 1]);
    let d1 = b - a;
    let d2 = c - b;
    if d2 == 0.0 {
        return Ok(c);
    }
    let r = d2 / d1;
    if !(r.abs() < 1.0) || !r.is_finite() {
        return Err(Error::Extrapolation(format!(
            "sequence {v:?} is not converging geometrically"
        )));
    }
    Ok(c + d2 * r / (1.0 - r))
}

/// Tail constant `c` in `t^{p+1} ρ(t) → c`, by exact piecewise integration.
pub fn tail_constant(a: &AlphaParam, model: &Model) -> f64 {
    let al = a.value();
    match model {
        Model::Wigner => al / 2.0,
        Model::Band { profile } | Model::Perturbed { profile, .. } => {
            al / 2.0 * profile.alpha_integral(al)
        }
        Model::Wishart { gamma } => al * gamma / (2.0 * (1.0 + gamma)),
    }
}

/// Density at any real `t ≠ 0` for any model.
pub fn density_point(sys: &FixedPointSystem, model: &Model, t: f64, cfg: &DensityConfig) -> Result<DensityPoint> {
    match model {
        Model::Wishart { gamma } => {
            if t < 0.0 {
                return Ok(DensityPoint {
                    t,
                    rho: 0.0,
                    boundary: Some(0.0),
                    eps_reached: 0.0,
                    quality: Quality::Converged,
                });
            }
            if *gamma == 1.0 {
                density_wishart(&sys.alpha, 1.0, t, cfg)
            } else {
                wishart_point(sys, *gamma, t, cfg)
            }
        }
        _ => band_point(sys, t, cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    /// Points per sign, log-spaced.
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            t_min: 1e-3,
            t_max: 1e3,
            points: 400,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::invalid("grid", "need 0 < t_min < t_max < ∞"));
        }
        if self.points < 2 {
            return Err(Error::invalid("points", "need at least 2"));
        }
        Ok(())
    }

    pub fn positive(&self) -> Vec<f64> {
        let n = self.points;
        let (lo, hi) = (self.t_min.ln(), self.t_max.ln());
        (0..n)
            .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub alpha: f64,
    pub model: Model,
    pub grid: Vec<f64>,
    pub rho: Vec<f64>,
    pub atom_at_zero: f64,
    /// Exact tail constant.
    pub tail_constant: f64,
    /// Mean of `t^{p+1} ρ(t)` over `t ∈ {50, 100, 200}`.
    pub tail_constant_estimate: f64,
    pub tail_discrepancy: f64,
    pub mass_check: f64,
    pub eps_floor: f64,
    /// Grid indices whose continuation broke down.
    pub degraded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasureSummary {
    /// Grid estimates of `∫ t dμ` and `∫ t^2 dμ`.
    pub moments: [f64; 2],
    pub tail_exponent_fit: f64,
    pub support_hint: (f64, f64),
}

pub fn build_density_curve(
    a: &AlphaParam,
    model: &Model,
    grid: &GridSpec,
    cfg: &DensityConfig,
) -> Result<DensityCurve> {
    grid.validate()?;
    cfg.validate()?;
    let sys = model.system(a, cfg.fixed_point.band_blocks)?;
    let pos = grid.positive();
    let points = |ts: &[f64]| -> Result<Vec<DensityPoint>> {
        ts.par_iter()
            .map(|&t| density_point(&sys, model, t, cfg))
            .collect()
    };
    let right = points(&pos)?;
    let left: Vec<DensityPoint> = match model {
        Model::Wishart { .. } => Vec::new(),
        _ if model.is_symmetric() => right.iter().map(|p| DensityPoint { t: -p.t, ..*p }).collect(),
        _ => {
            let neg: Vec<f64> = pos.iter().map(|t| -t).collect();
            points(&neg)?
        }
    };
    let mut all: Vec<DensityPoint> = left.into_iter().rev().chain(right).collect();
    all.sort_by(|p, q| p.t.total_cmp(&q.t));

    let atom = match model {
        Model::Wishart { gamma } if *gamma < 1.0 => atom_at_zero_wishart(a, *gamma, &cfg.fixed_point)?,
        _ => 0.0,
    };
    let c = tail_constant(a, model);
    let p = model.tail_exponent(a);
    let probes: Vec<f64> = [50.0f64, 100.0, 200.0]
        .par_iter()
        .map(|&t| Ok(t.powf(p + 1.0) * density_point(&sys, model, t, cfg)?.rho))
        .collect::<Result<_>>()?;
    let estimate = probes.iter().sum::<f64>() / probes.len() as f64;
    let discrepancy = if c > 0.0 { (estimate - c).abs() / c } else { estimate.abs() };

    let grid_t: Vec<f64> = all.iter().map(|q| q.t).collect();
    let rho: Vec<f64> = all.iter().map(|q| q.rho.max(0.0)).collect();
    let degraded = all
        .iter()
        .enumerate()
        .filter(|(_, q)| q.quality == Quality::Degraded)
        .map(|(i, _)| i)
        .collect();
    let mut curve = DensityCurve {
        alpha: a.value(),
        model: model.clone(),
        grid: grid_t,
        rho,
        atom_at_zero: atom,
        tail_constant: c,
        tail_constant_estimate: estimate,
        tail_discrepancy: discrepancy,
        mass_check: 0.0,
        eps_floor: cfg.eps_floor,
        degraded,
    };
    curve.mass_check = curve.cdf().total_mass();
    Ok(curve)
}

impl DensityCurve {
    fn tail_exponent(&self) -> f64 {
        match self.model {
            Model::Wishart { .. } => self.alpha / 2.0,
            _ => self.alpha,
        }
    }

    pub fn cdf(&self) -> TheoryCdf {
        TheoryCdf::from_curve(self)
    }

    /// Density at `t` by linear interpolation in `ln |t|`, zero off the grid.
    pub fn interpolate(&self, t: f64) -> f64 {
        let k = self.grid.partition_point(|&s| s < t);
        if k == 0 || k == self.grid.len() {
            return 0.0;
        }
        let (t0, t1) = (self.grid[k - 1], self.grid[k]);
        if t0 * t1 <= 0.0 {
            return 0.0;
        }
        let w = (t.abs().ln() - t0.abs().ln()) / (t1.abs().ln() - t0.abs().ln());
        self.rho[k - 1] + w * (self.rho[k] - self.rho[k - 1])
    }

    pub fn summary(&self) -> SpectralMeasureSummary {
        let mut m = [0.0; 2];
        for w in 0..self.grid.len().saturating_sub(1) {
            let (t0, t1) = (self.grid[w], self.grid[w + 1]);
            if t0 * t1 <= 0.0 {
                continue;
            }
            for (k, mk) in m.iter_mut().enumerate() {
                let f0 = t0.powi(k as i32 + 1) * self.rho[w];
                let f1 = t1.powi(k as i32 + 1) * self.rho[w + 1];
                *mk += 0.5 * (f0 + f1) * (t1 - t0);
            }
        }
        let n = self.grid.len();
        let tail: Vec<(f64, f64)> = self
            .grid
            .iter()
            .zip(&self.rho)
            .skip(n - n / 8)
            .filter(|(t, r)| **t > 0.0 && **r > 0.0)
            .map(|(t, r)| (t.ln(), r.ln()))
            .collect();
        let slope = if tail.len() >= 2 {
            let k = tail.len() as f64;
            let mx = tail.iter().map(|p| p.0).sum::<f64>() / k;
            let my = tail.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
            -sxy / sxx - 1.0
        } else {
            f64::NAN
        };
        let peak = self.rho.iter().cloned().fold(0.0, f64::max);
        let above: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.rho)
            .filter(|(_, r)| **r > 1e-6 * peak)
            .map(|(t, _)| *t)
            .collect();
        SpectralMeasureSummary {
            moments: m,
            tail_exponent_fit: slope,
            support_hint: (
                above.first().copied().unwrap_or(f64::NAN),
                above.last().copied().unwrap_or(f64::NAN),
            ),
        }
    }
}

/// Piecewise-linear CDF on the curve's grid, closed by the analytic tails.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCdf {
    knots: Vec<f64>,
    values: Vec<f64>,
    tail_c: f64,
    tail_p: f64,
    left_tail: bool,
}

impl TheoryCdf {
    fn from_curve(curve: &DensityCurve) -> Self {
        let p = curve.tail_exponent();
        let c = curve.tail_constant;
        let symmetric_tails = !matches!(curve.model, Model::Wishart { .. });
        let t_first = curve.grid[0];
        let mut knots = Vec::with_capacity(curve.grid.len() + 2);
        let mut values = Vec::with_capacity(curve.grid.len() + 2);
        let mut acc = if symmetric_tails {
            c * t_first.abs().powf(-p) / p
        } else {
            knots.push(0.0);
            values.push(curve.atom_at_zero);
            curve.atom_at_zero + curve.grid[0] * curve.rho[0]
        };
        knots.push(t_first);
        values.push(acc);
        for k in 1..curve.grid.len() {
            let (t0, t1) = (curve.grid[k - 1], curve.grid[k]);
            let (r0, r1) = (curve.rho[k - 1], curve.rho[k]);
            acc += if t0 < 0.0 && t1 > 0.0 {
                // Across the excluded neighbourhood of zero.
                -t0 * r0 + t1 * r1 + curve.atom_at_zero
            } else {
                // Trapezoid in ln|t| on t·ρ(t).
                let l = (t1.abs() / t0.abs()).ln().abs();
                0.5 * (t0.abs() * r0 + t1.abs() * r1) * l
            };
            knots.push(t1);
            values.push(acc);
        }
        Self {
            knots,
            values,
            tail_c: c,
            tail_p: p,
            left_tail: symmetric_tails,
        }
    }

    fn right_tail(&self) -> f64 {
        let t = *self.knots.last().unwrap();
        self.tail_c * t.powf(-self.tail_p) / self.tail_p
    }

    /// Atom, grid integral and both tail closures.
    pub fn total_mass(&self) -> f64 {
        self.values.last().unwrap() + self.right_tail()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let first = self.knots[0];
        let last = *self.knots.last().unwrap();
        let v = if t < first {
            if self.left_tail {
                self.tail_c * t.abs().powf(-self.tail_p) / self.tail_p
            } else {
                0.0
            }
        } else if t >= last {
            self.values.last().unwrap() + self.right_tail() - self.tail_c * t.powf(-self.tail_p) / self.tail_p
        } else {
            let k = self.knots.partition_point(|&s| s <= t);
            let (t0, t1) = (self.knots[k - 1], self.knots[k]);
            let w = (t - t0) / (t1 - t0);
            self.values[k - 1] + w * (self.values[k] - self.values[k - 1])
        };
        v.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_is_exact_on_quadratics() {
        let f = |e: f64| 1.5 - 2.0 * e + 7.0 * e * e;
        assert!((richardson(f(4.0), f(2.0), f(1.0)) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn geometric_extrapolation() {
        let v: Vec<f64> = (0..4).map(|k| 0.5 + 0.3 * 0.1f64.powi(k)).collect();
        assert!((extrapolate_geometric(&v).unwrap() - 0.5).abs() < 1e-14);
        assert!(extrapolate_geometric(&[1.0, 2.0, 4.0]).is_err());
    }

    #[test]
    fn semicircle_point() {
        let p = density_wigner(&AlphaParam::two(), 1.0, &DensityConfig::default()).unwrap();
        assert!((p.rho - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-9);
        assert_eq!(p.quality, Quality::Converged);
    }

    #[test]
    fn tail_constants() {
        let a = AlphaParam::new(1.0).unwrap();
        assert_eq!(tail_constant(&a, &Model::Wigner), 0.5);
        let cov = Model::Band {
            profile: SigmaProfile::covariance(0.5).unwrap(),
        };
        assert!((tail_constant(&a, &cov) - 0.5 * 2.0 * 0.5 / 2.25).abs() < 1e-15);
        let zero = Model::Band {
            profile: SigmaProfile::constant(0.0),
        };
        assert_eq!(tail_constant(&a, &zero), 0.0);
    }
}
