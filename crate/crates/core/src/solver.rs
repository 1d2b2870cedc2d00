//! Fixed-point systems for the unknowns `Y_r(z)` (Wigner, band, covariance)
//! and `X̂_r(z)` (diagonally perturbed), solved on the decaying branch.
//!
//! Every solve starts where the map is a guaranteed contraction, iterates
//! from zero there, then lowers `Im z` geometrically with Newton steps
//! warm-started from the previous point. Each accepted step must stay inside
//! the cone that contains the true solution.

use crate::error::{Error, Result};
use crate::matrices::{Coupling, DiagonalLaw, SigmaProfile, DEFAULT_BAND_BLOCKS};
use crate::special_fn::{
    ball_bound, c_alpha, c_alpha_bar, cone_bound, cone_contains, g_family, ppow, AlphaParam,
    Cone, ConePoint, QuadratureRule, DEFAULT_CONE_SLACK,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    /// Target for the sup-norm residual `|Y - F(Y)| / max(1, |Y|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial Picard damping in `(0, 1]`.
    pub damping: f64,
    /// Geometric factor applied to `Im z` between continuation steps.
    pub continuation_factor: f64,
    /// Let the factor shrink after easy steps.
    pub adaptive: bool,
    pub cone_slack: f64,
    pub band_blocks: usize,
    pub rule: QuadratureRule,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 500,
            damping: 1.0,
            continuation_factor: 0.8,
            adaptive: true,
            cone_slack: DEFAULT_CONE_SLACK,
            band_blocks: DEFAULT_BAND_BLOCKS,
            rule: QuadratureRule::default(),
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", "must lie in (0, 1]"));
        }
        if !(self.continuation_factor > 0.0 && self.continuation_factor < 1.0) {
            return Err(Error::invalid("continuation_factor", "must lie in (0, 1)"));
        }
        if !(self.cone_slack >= 0.0) {
            return Err(Error::invalid("cone_slack", "must be non-negative"));
        }
        self.rule.validate()
    }

    /// Settings used close to a critical point.
    pub fn near_critical(&self) -> Self {
        Self {
            continuation_factor: 0.95,
            max_iter: self.max_iter * 4,
            adaptive: false,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSolution {
    pub z: Complex64,
    pub unknowns: Vec<ConePoint>,
    pub residual: f64,
    pub iterations: usize,
    /// `z^{-α}`.
    pub u: Complex64,
}

impl FixedPointSolution {
    pub fn values(&self) -> Vec<Complex64> {
        self.unknowns.iter().map(|p| p.value).collect()
    }

    /// The solution at `-conj(z)` of the reflected system: unknowns are
    /// conjugated, then rotated by `phase`.
    fn mirrored(&self, phase: Complex64) -> Self {
        Self {
            z: -self.z.conj(),
            unknowns: self
                .unknowns
                .iter()
                .map(|p| ConePoint {
                    value: phase * p.value.conj(),
                    cone: p.cone,
                })
                .collect(),
            residual: self.residual,
            iterations: self.iterations,
            u: self.u.conj(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    /// `z^α Y_r = C_α Σ_s a_rs g_α(Y_s)`.
    Band,
    /// `X̂_r = C̄_α Σ_s a_rs Σ_i w_i ζ_i g_α(ζ_i X̂_s)`, `ζ_i = (λ_i - z)^{-α/2}`.
    Perturbed { atoms: Vec<(f64, f64)> },
}

/// A fixed-point system together with its startup height.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSystem {
    pub alpha: AlphaParam,
    pub coupling: Coupling,
    pub kind: SystemKind,
    start: f64,
    rule: QuadratureRule,
}

/// `(λ - z)^{-α/2}` taken as the boundary value from `Im z > 0`.
fn zeta(alpha: f64, lambda: f64, z: Complex64) -> Complex64 {
    let u = lambda - z;
    let arg = if u.im == 0.0 && u.re < 0.0 {
        -PI
    } else {
        u.im.atan2(u.re)
    };
    Complex64::from_polar(u.norm().powf(-alpha / 2.0), -alpha / 2.0 * arg)
}

fn lu_solve(mut m: Vec<Complex64>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i * n + k].norm().total_cmp(&m[j * n + k].norm()))?;
        if m[p * n + k].norm() == 0.0 {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            let f = m[i * n + k] / pivot;
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let v = m[k * n + j];
                m[i * n + j] -= f * v;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= m[k * n + j] * b[j];
        }
        b[k] = s / m[k * n + k];
    }
    b.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(b)
}

struct Evaluation {
    f: Vec<Complex64>,
    jac: Option<Vec<Complex64>>,
}

impl FixedPointSystem {
    fn build(alpha: AlphaParam, coupling: Coupling, kind: SystemKind) -> Result<Self> {
        let mut sys = Self {
            alpha,
            coupling,
            kind,
            start: 0.0,
            rule: QuadratureRule::default(),
        };
        sys.start = sys.startup_height();
        Ok(sys)
    }

    /// Scalar Wigner equation (`σ ≡ 1`).
    pub fn wigner(alpha: AlphaParam) -> Self {
        Self::build(
            alpha,
            Coupling {
                delta: vec![1.0],
                weights: vec![vec![1.0]],
            },
            SystemKind::Band,
        )
        .expect("scalar system is always valid")
    }

    pub fn band(alpha: AlphaParam, profile: &SigmaProfile, band_blocks: usize) -> Result<Self> {
        let coupling = profile.coupling(alpha.value(), band_blocks)?;
        Self::build(alpha, coupling, SystemKind::Band)
    }

    /// The pair `(Y_1, Y_2)` of the covariance model with ratio `γ`.
    pub fn wishart(alpha: AlphaParam, gamma: f64) -> Result<Self> {
        Self::band(alpha, &SigmaProfile::covariance(gamma)?, 2)
    }

    pub fn perturbed(
        alpha: AlphaParam,
        profile: &SigmaProfile,
        diag: &DiagonalLaw,
        band_blocks: usize,
    ) -> Result<Self> {
        diag.validate()?;
        let coupling = profile.coupling(alpha.value(), band_blocks)?;
        let atoms = diag.atoms.iter().map(|a| (a.lambda, a.w)).collect();
        Self::build(alpha, coupling, SystemKind::Perturbed { atoms })
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn dim(&self) -> usize {
        self.coupling.len()
    }

    pub fn cone(&self) -> Cone {
        match self.kind {
            SystemKind::Band => Cone::KAlpha,
            SystemKind::Perturbed { .. } => Cone::KHatAlpha,
        }
    }

    /// Maps a solution at `z` to the solution at `-conj(z)` of the system
    /// with reflected diagonal law: `Y(-z̄) = conj Y(z)` for band systems and
    /// `X̂(-z̄) = e^{-iπα/2} conj X̂(z)` for perturbed ones.
    pub fn mirror_solution(&self, sol: &FixedPointSolution) -> FixedPointSolution {
        let phase = match self.kind {
            SystemKind::Band => ONE,
            SystemKind::Perturbed { .. } => Complex64::from_polar(1.0, -PI * self.alpha.value() / 2.0),
        };
        sol.mirrored(phase)
    }

    /// Whether the system is its own reflection.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            SystemKind::Band => true,
            SystemKind::Perturbed { atoms } => {
                let law = DiagonalLaw {
                    atoms: atoms
                        .iter()
                        .map(|&(lambda, w)| crate::matrices::Atom { lambda, w })
                        .collect(),
                };
                law.is_symmetric()
            }
        }
    }

    /// Height above which iteration from zero is a contraction: `|z| ≥ R`
    /// for band systems, `Im z ≥ H` for perturbed systems.
    pub fn start_height(&self) -> f64 {
        self.start
    }

    fn startup_height(&self) -> f64 {
        let k = self.coupling.max_row_sum();
        if k == 0.0 {
            return 1.0;
        }
        let a = &self.alpha;
        let al = a.value();
        let c = c_alpha(a).norm();
        let g_k = if a.is_two_mode() {
            2.0
        } else {
            cone_bound(a, al)
        };
        let lhs: Box<dyn Fn(f64) -> f64> = match self.kind {
            SystemKind::Band => Box::new(move |r_big: f64| {
                let r = 2.0 * k * r_big.powf(-al) * c * g_k;
                let norm = c * (ball_bound(a, al, r) + ball_bound(a, 2.0 * al, r));
                r_big.powf(-al) * norm * k
            }),
            SystemKind::Perturbed { .. } => Box::new(move |h: f64| {
                let r = 2.0 * c * g_k * k * h.powf(-al);
                let lip = c * k * h.powf(-al) * ball_bound(a, 2.0 * al, r);
                let sup = ball_bound(a, al, r) / (2.0 * g_k);
                lip.max(sup / 3.0)
            }),
        };
        let mut h = 0.25;
        while !(lhs(h) <= 1.0 / 3.0) && h < 1e12 {
            h *= 1.1;
        }
        h
    }

    fn zetas(&self, z: Complex64) -> Vec<(f64, Complex64)> {
        match &self.kind {
            SystemKind::Band => Vec::new(),
            SystemKind::Perturbed { atoms } => atoms
                .iter()
                .map(|&(lambda, w)| (w, zeta(self.alpha.value(), lambda, z)))
                .collect(),
        }
    }

    fn prefactor(&self, z: Complex64) -> Complex64 {
        match self.kind {
            SystemKind::Band => c_alpha(&self.alpha) * ppow(z, -self.alpha.value()),
            SystemKind::Perturbed { .. } => c_alpha_bar(&self.alpha),
        }
    }

    fn g_and_dg(&self, y: Complex64) -> Result<(Complex64, Complex64)> {
        let al = self.alpha.value();
        let [g, g1] = g_family(&self.alpha, [al, 2.0 * al], y, &self.rule)?;
        Ok((g, -g1))
    }

    fn active_columns(&self) -> Vec<bool> {
        let q = self.dim();
        (0..q)
            .map(|s| (0..q).any(|r| self.coupling.weights[r][s] != 0.0))
            .collect()
    }

    fn evaluate(&self, z: Complex64, y: &[Complex64], with_jac: bool) -> Result<Evaluation> {
        let q = self.dim();
        let pre = self.prefactor(z);
        let zetas = self.zetas(z);
        let active = self.active_columns();
        let mut inner = vec![ZERO; q];
        let mut dinner = vec![ZERO; q];
        for s in 0..q {
            if !active[s] {
                continue;
            }
            match self.kind {
                SystemKind::Band => {
                    let (g, dg) = if with_jac {
                        self.g_and_dg(y[s])?
                    } else {
                        (
                            g_family(&self.alpha, [self.alpha.value()], y[s], &self.rule)?[0],
                            ZERO,
                        )
                    };
                    inner[s] = g;
                    dinner[s] = dg;
                }
                SystemKind::Perturbed { .. } => {
                    for &(w, zt) in &zetas {
                        let (g, dg) = self.g_and_dg(zt * y[s])?;
                        inner[s] += w * zt * g;
                        dinner[s] += w * zt * zt * dg;
                    }
                }
            }
        }
        let f = (0..q)
            .map(|r| {
                pre * (0..q)
                    .map(|s| self.coupling.weights[r][s] * inner[s])
                    .sum::<Complex64>()
            })
            .collect();
        let jac = with_jac.then(|| {
            let mut j = vec![ZERO; q * q];
            for r in 0..q {
                for s in 0..q {
                    j[r * q + s] = pre * self.coupling.weights[r][s] * dinner[s];
                }
            }
            j
        });
        Ok(Evaluation { f, jac })
    }

    /// Image of `y` under the fixed-point map.
    pub fn apply(&self, z: Complex64, y: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.evaluate(z, y, false)?.f)
    }

    /// Image of `y` with a caller-supplied `g_α`.
    pub fn apply_with<G: Fn(Complex64) -> Complex64>(
        &self,
        z: Complex64,
        y: &[Complex64],
        g: G,
    ) -> Vec<Complex64> {
        let q = self.dim();
        let pre = self.prefactor(z);
        let zetas = self.zetas(z);
        let inner: Vec<Complex64> = (0..q)
            .map(|s| match self.kind {
                SystemKind::Band => g(y[s]),
                SystemKind::Perturbed { .. } => {
                    zetas.iter().map(|&(w, zt)| w * zt * g(zt * y[s])).sum()
                }
            })
            .collect();
        (0..q)
            .map(|r| {
                pre * (0..q)
                    .map(|s| self.coupling.weights[r][s] * inner[s])
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn residual(&self, z: Complex64, y: &[Complex64]) -> Result<f64> {
        Ok(residual_of(y, &self.apply(z, y)?))
    }

    /// Residual with an independent `g_α`, for re-verification.
    pub fn residual_with<G: Fn(Complex64) -> Complex64>(
        &self,
        z: Complex64,
        y: &[Complex64],
        g: G,
    ) -> f64 {
        residual_of(y, &self.apply_with(z, y, g))
    }

    fn in_cone(&self, y: &[Complex64], slack: f64) -> Option<usize> {
        let cone = self.cone();
        y.iter()
            .position(|&v| !cone_contains(cone, &self.alpha, v, slack))
    }

    /// Stieltjes transform from a solution at `z`.
    pub fn stieltjes(&self, z: Complex64, y: &[Complex64]) -> Result<Complex64> {
        let h = |v: Complex64| -> Result<Complex64> {
            Ok(g_family(&self.alpha, [2.0], v, &self.rule)?[0])
        };
        let delta = &self.coupling.delta;
        match &self.kind {
            SystemKind::Band => {
                let mut acc = ZERO;
                for (d, &v) in delta.iter().zip(y) {
                    acc += *d * h(v)?;
                }
                Ok(acc / z)
            }
            SystemKind::Perturbed { .. } => {
                let mut total = ZERO;
                for (&(w, zt), &(lambda, _)) in self.zetas(z).iter().zip(self.atoms()) {
                    let mut acc = ZERO;
                    for (d, &v) in delta.iter().zip(y) {
                        acc += *d * h(zt * v)?;
                    }
                    total += w * acc / (z - lambda);
                }
                Ok(total)
            }
        }
    }

    fn atoms(&self) -> &[(f64, f64)] {
        match &self.kind {
            SystemKind::Band => &[],
            SystemKind::Perturbed { atoms } => atoms,
        }
    }

    /// `|C_α| ‖g_α‖_{K_α} max_r Σ_s a_rs`, the constant in `|X̂| ≤ c Im(z)^{-α/2}`.
    pub fn perturbed_bound_constant(&self) -> f64 {
        c_alpha(&self.alpha).norm()
            * cone_bound(&self.alpha, self.alpha.value())
            * self.coupling.max_row_sum()
    }

    fn solution(&self, z: Complex64, y: Vec<Complex64>, residual: f64, iterations: usize) -> FixedPointSolution {
        let cone = self.cone();
        FixedPointSolution {
            z,
            unknowns: y.into_iter().map(|value| ConePoint { value, cone }).collect(),
            residual,
            iterations,
            u: if z == ZERO {
                Complex64::new(f64::INFINITY, 0.0)
            } else {
                ppow(z, -self.alpha.value())
            },
        }
    }
}

fn residual_of(y: &[Complex64], f: &[Complex64]) -> f64 {
    y.iter()
        .zip(f)
        .map(|(a, b)| (a - b).norm() / a.norm().max(1.0))
        .fold(0.0, f64::max)
}

struct Converged {
    y: Vec<Complex64>,
    residual: f64,
    iterations: usize,
}

/// Damped Picard iteration: damping halves when the residual grows and is
/// restored after five consecutive decreases.
fn picard(
    sys: &FixedPointSystem,
    z: Complex64,
    y0: Vec<Complex64>,
    cfg: &FixedPointConfig,
    max_iter: usize,
) -> Result<Converged> {
    let mut y = y0;
    let mut f = sys.apply(z, &y)?;
    let mut res = residual_of(&y, &f);
    let mut d = cfg.damping;
    let mut streak = 0;
    for it in 0..max_iter {
        if res <= cfg.tol {
            return Ok(Converged {
                y,
                residual: res,
                iterations: it,
            });
        }
        let trial: Vec<Complex64> = y.iter().zip(&f).map(|(a, b)| (1.0 - d) * a + d * b).collect();
        let f_trial = sys.apply(z, &trial)?;
        let res_trial = residual_of(&trial, &f_trial);
        if res_trial > res {
            d *= 0.5;
            streak = 0;
            if d < 1e-6 {
                break;
            }
            continue;
        }
        y = trial;
        f = f_trial;
        res = res_trial;
        streak += 1;
        if streak >= 5 {
            d = (2.0 * d).min(cfg.damping);
            streak = 0;
        }
    }
    if res <= cfg.tol {
        return Ok(Converged {
            y,
            residual: res,
            iterations: max_iter,
        });
    }
    Err(Error::NoConvergence {
        z,
        residual: res,
        iterations: max_iter,
        last: y,
    })
}

/// Newton iteration on `Y - F(Y) = 0` with step halving when the residual
/// fails to decrease.
fn newton(
    sys: &FixedPointSystem,
    z: Complex64,
    y0: Vec<Complex64>,
    cfg: &FixedPointConfig,
    max_iter: usize,
) -> Result<Converged> {
    let q = sys.dim();
    let mut y = y0;
    let mut best: Option<(Vec<Complex64>, Vec<Complex64>, f64)> = None;
    let mut lambda = 1.0;
    let mut last_res = f64::INFINITY;
    for it in 0..max_iter {
        let ev = match sys.evaluate(z, &y, true) {
            Ok(ev) => Some(ev),
            Err(Error::Quadrature { .. }) if best.is_some() => None,
            Err(e) => return Err(e),
        };
        let res = ev.as_ref().map_or(f64::INFINITY, |ev| residual_of(&y, &ev.f));
        if res <= cfg.tol {
            return Ok(Converged {
                y,
                residual: res,
                iterations: it,
            });
        }
        if let Some((prev, step, prev_res)) = &best {
            if !(res < *prev_res) {
                lambda *= 0.5;
                if lambda < 1.0 / 64.0 {
                    last_res = *prev_res;
                    break;
                }
                y = prev.iter().zip(step).map(|(a, d)| a + lambda * d).collect();
                continue;
            }
        }
        let ev = ev.expect("residual is finite");
        let jac = ev.jac.expect("jacobian requested");
        let mut m = vec![ZERO; q * q];
        for r in 0..q {
            for s in 0..q {
                m[r * q + s] = if r == s { ONE } else { ZERO } - jac[r * q + s];
            }
        }
        let rhs: Vec<Complex64> = ev.f.iter().zip(&y).map(|(f, v)| f - v).collect();
        let Some(step) = lu_solve(m, rhs) else {
            last_res = res;
            break;
        };
        lambda = 1.0;
        let next: Vec<Complex64> = y.iter().zip(&step).map(|(a, d)| a + d).collect();
        best = Some((y, step, res));
        y = next;
        last_res = res;
    }
    Err(Error::NoConvergence {
        z,
        residual: last_res,
        iterations: max_iter,
        last: y,
    })
}

fn newton_step(sys: &FixedPointSystem, z: Complex64, y: &[Complex64]) -> Result<Vec<Complex64>> {
    let q = sys.dim();
    let ev = sys.evaluate(z, y, true)?;
    let jac = ev.jac.expect("jacobian requested");
    let mut m = vec![ZERO; q * q];
    for r in 0..q {
        for s in 0..q {
            m[r * q + s] = if r == s { ONE } else { ZERO } - jac[r * q + s];
        }
    }
    let rhs: Vec<Complex64> = ev.f.iter().zip(y).map(|(f, v)| f - v).collect();
    let step = lu_solve(m, rhs).ok_or_else(|| Error::Domain("singular Newton system".into()))?;
    Ok(y.iter().zip(&step).map(|(a, d)| a + d).collect())
}

/// Continuation state along the vertical line `Re z = x`.
pub struct Tracker<'a> {
    sys: &'a FixedPointSystem,
    cfg: FixedPointConfig,
    x: f64,
    im: f64,
    y: Vec<Complex64>,
    residual: f64,
    iterations: usize,
    factor: f64,
    steps: usize,
}

impl<'a> Tracker<'a> {
    /// Solve at `x + i·im0` by Picard iteration from zero, where `im0` is
    /// the smallest height at which the map is known to contract, but not
    /// below `min_im`.
    pub fn start(sys: &'a FixedPointSystem, x: f64, min_im: f64, cfg: &FixedPointConfig) -> Result<Self> {
        cfg.validate()?;
        let h = sys.start_height();
        let im0 = match sys.kind {
            SystemKind::Band => {
                let need = (h * h - x * x).max(0.0).sqrt();
                need.max(min_im)
            }
            SystemKind::Perturbed { .. } => h.max(min_im),
        };
        let z0 = Complex64::new(x, im0);
        if im0 == 0.0 && x == 0.0 {
            return Err(Error::Domain("z = 0 is not admissible".into()));
        }
        let zero = vec![ZERO; sys.dim()];
        let conv = match picard(sys, z0, zero.clone(), cfg, cfg.max_iter) {
            Ok(c) => c,
            Err(_) => newton(sys, z0, zero, cfg, cfg.max_iter)?,
        };
        if let Some(index) = sys.in_cone(&conv.y, cfg.cone_slack) {
            return Err(Error::ConeViolation {
                z: z0,
                index,
                value: conv.y[index],
            });
        }
        Ok(Self {
            sys,
            cfg: *cfg,
            x,
            im: im0,
            residual: conv.residual,
            iterations: conv.iterations,
            y: conv.y,
            factor: cfg.continuation_factor,
            steps: 0,
        })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.im)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn solution(&self) -> FixedPointSolution {
        self.sys
            .solution(self.z(), self.y.clone(), self.residual, self.iterations)
    }

    fn try_step(&self, im: f64) -> Result<Converged> {
        let z = Complex64::new(self.x, im);
        let conv = newton(self.sys, z, self.y.clone(), &self.cfg, self.cfg.max_iter.min(60))
            .or_else(|_| picard(self.sys, z, self.y.clone(), &self.cfg, self.cfg.max_iter))?;
        if let Some(index) = self.sys.in_cone(&conv.y, self.cfg.cone_slack) {
            return Err(Error::ConeViolation {
                z,
                index,
                value: conv.y[index],
            });
        }
        Ok(conv)
    }

    /// Up to three further Newton steps at the current point, each kept only
    /// if it lowers the residual.
    pub fn polish(&mut self) {
        let z = self.z();
        for _ in 0..3 {
            if self.residual == 0.0 {
                break;
            }
            let Ok(next) = newton_step(self.sys, z, &self.y) else { break };
            if self.sys.in_cone(&next, self.cfg.cone_slack).is_some() {
                break;
            }
            match self.sys.residual(z, &next) {
                Ok(r) if r < self.residual => {
                    self.y = next;
                    self.residual = r;
                }
                _ => break,
            }
        }
    }

    /// Lower `Im z` to `target` (which may be zero for a boundary value).
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        if target > self.im {
            return Err(Error::invalid("target", "continuation only lowers Im z"));
        }
        let floor = if self.cfg.adaptive { 0.05 } else { self.cfg.continuation_factor };
        while self.im > target {
            let mut next = (self.im * self.factor).max(target);
            if next < target * 1.02 || (target == 0.0 && self.im < 1e-7) {
                next = target;
            }
            match self.try_step(next) {
                Ok(conv) => {
                    self.im = next;
                    self.steps += 1;
                    let easy = conv.iterations <= 3;
                    self.y = conv.y;
                    self.residual = conv.residual;
                    self.iterations = conv.iterations;
                    if self.cfg.adaptive && easy {
                        self.factor = (self.factor * self.factor).max(floor);
                    }
                }
                Err(e) => {
                    if self.factor > 0.999 || (next == target && target == 0.0 && self.factor > 0.99) {
                        return Err(match e {
                            Error::ConeViolation { .. } => e,
                            other => Error::Continuation {
                                index: self.steps,
                                reason: other.to_string(),
                            },
                        });
                    }
                    self.factor = self.factor.sqrt();
                    if target == 0.0 && next == 0.0 {
                        // Approach the axis more gently before retrying.
                        let im = self.im * self.factor;
                        if let Ok(conv) = self.try_step(im) {
                            self.im = im;
                            self.y = conv.y;
                            self.residual = conv.residual;
                            self.iterations = conv.iterations;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn require_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() {
        return Err(Error::Domain(format!("need Im z > 0, got {z}")));
    }
    Ok(())
}

/// Solve `sys` at `z`, `Im z > 0`, continuing from the contraction region.
pub fn solve_system(sys: &FixedPointSystem, z: Complex64, cfg: &FixedPointConfig) -> Result<FixedPointSolution> {
    require_upper(z)?;
    let cfg = match near_critical_config(sys, z.re, cfg) {
        Some(c) => c,
        None => *cfg,
    };
    let mut tr = Tracker::start(sys, z.re, z.im, &cfg)?;
    tr.advance_to(z.im)?;
    tr.polish();
    Ok(tr.solution())
}

pub fn solve_wigner(a: &AlphaParam, z: Complex64, cfg: &FixedPointConfig) -> Result<FixedPointSolution> {
    solve_system(&FixedPointSystem::wigner(*a), z, cfg)
}

pub fn solve_band(
    a: &AlphaParam,
    profile: &SigmaProfile,
    z: Complex64,
    cfg: &FixedPointConfig,
) -> Result<FixedPointSolution> {
    solve_system(&FixedPointSystem::band(*a, profile, cfg.band_blocks)?, z, cfg)
}

pub fn solve_wishart_pair(
    a: &AlphaParam,
    gamma: f64,
    z: Complex64,
    cfg: &FixedPointConfig,
) -> Result<FixedPointSolution> {
    solve_system(&FixedPointSystem::wishart(*a, gamma)?, z, cfg)
}

pub fn solve_perturbed(
    a: &AlphaParam,
    profile: &SigmaProfile,
    diag: &DiagonalLaw,
    z: Complex64,
    cfg: &FixedPointConfig,
) -> Result<FixedPointSolution> {
    solve_system(
        &FixedPointSystem::perturbed(*a, profile, diag, cfg.band_blocks)?,
        z,
        cfg,
    )
}

/// Solutions along `z = t + iε` for each `ε` of a decreasing list, or the
/// longest prefix reached before a breakdown.
#[derive(Debug, Clone)]
pub struct ContinuationPath {
    pub t: f64,
    pub solutions: Vec<FixedPointSolution>,
    pub failure: Option<(usize, Error)>,
}

impl ContinuationPath {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn continue_to_real_axis(
    sys: &FixedPointSystem,
    t: f64,
    eps_list: &[f64],
    cfg: &FixedPointConfig,
) -> Result<ContinuationPath> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::invalid("t", "must be finite and non-zero"));
    }
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("eps_list", "must be non-empty and strictly decreasing"));
    }
    if !(*eps_list.last().unwrap() >= 1e-6) {
        return Err(Error::invalid("eps_list", "entries must be at least 1e-6"));
    }
    if t < 0.0 && sys.is_symmetric() {
        let mut path = continue_to_real_axis(sys, -t, eps_list, cfg)?;
        path.t = t;
        for s in path.solutions.iter_mut() {
            *s = sys.mirror_solution(s);
        }
        return Ok(path);
    }
    let cfg = near_critical_config(sys, t, cfg).unwrap_or(*cfg);
    let mut tracker = Tracker::start(sys, t, eps_list[0], &cfg)?;
    let mut solutions = Vec::with_capacity(eps_list.len());
    for (k, &eps) in eps_list.iter().enumerate() {
        if let Err(e) = tracker.advance_to(eps) {
            return Ok(ContinuationPath {
                t,
                solutions,
                failure: Some((k, e)),
            });
        }
        solutions.push(tracker.solution());
    }
    Ok(ContinuationPath {
        t,
        solutions,
        failure: None,
    })
}

/// Box of seeds `y = r e^{iθ}` in `K_α` for the critical-set search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub r_min: f64,
    pub r_max: f64,
    pub radial: usize,
    pub angular: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            r_min: 0.05,
            r_max: 20.0,
            radial: 12,
            angular: 9,
        }
    }
}

/// Critical points `t > 0` with `t^α = C_α g_α'(y)`, `g_α(y) = y g_α'(y)`,
/// `y ∈ K_α`.
pub fn find_critical_set(a: &AlphaParam, search: &SearchBox, cfg: &FixedPointConfig) -> Result<Vec<f64>> {
    let al = a.value();
    let rule = cfg.rule;
    let c = c_alpha(a);
    let half = if a.is_two_mode() { PI * 0.999 } else { al * PI / 2.0 };
    let mut roots: Vec<Complex64> = Vec::new();
    let mut out: Vec<f64> = Vec::new();
    let eval = |y: Complex64| -> Result<(Complex64, Complex64, Complex64)> {
        let [g, g1, g2] = g_family(a, [al, 2.0 * al, 3.0 * al], y, &rule)?;
        Ok((g, -g1, g2))
    };
    for i in 0..search.radial.max(1) {
        let frac = if search.radial > 1 {
            i as f64 / (search.radial - 1) as f64
        } else {
            0.0
        };
        let r = search.r_min * (search.r_max / search.r_min).powf(frac);
        for j in 0..search.angular.max(1) {
            let th = if search.angular > 1 {
                -half + 2.0 * half * j as f64 / (search.angular - 1) as f64
            } else {
                0.0
            };
            let mut y = Complex64::from_polar(r, th);
            let mut ok = false;
            for _ in 0..60 {
                let Ok((g, dg, d2g)) = eval(y) else { break };
                let phi = g - y * dg;
                let dphi = -y * d2g;
                if dphi.norm() == 0.0 {
                    break;
                }
                let step = phi / dphi;
                y -= step;
                if !y.re.is_finite() || y.norm() > 1e4 {
                    break;
                }
                if step.norm() <= 1e-14 * y.norm().max(1.0) {
                    ok = true;
                    break;
                }
            }
            if !ok || !cone_contains(Cone::KAlpha, a, y, cfg.cone_slack) {
                continue;
            }
            if roots.iter().any(|r| (r - y).norm() < 1e-8) {
                continue;
            }
            roots.push(y);
            let Ok((g, dg, _)) = eval(y) else { continue };
            let v = c * dg;
            if v.re > 0.0 && v.im.abs() <= 1e-8 * v.norm() {
                let t = v.re.powf(1.0 / al);
                let phi = (g - y * dg).norm();
                if phi <= 1e-8 && !out.iter().any(|&s| (s - t).abs() < 1e-8) {
                    out.push(t);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn critical_cache() -> &'static Mutex<HashMap<u64, Vec<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<f64>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Critical points of the scalar equation, memoized per `α`.
pub fn wigner_critical_points(a: &AlphaParam) -> Vec<f64> {
    let key = a.value().to_bits();
    if let Some(v) = critical_cache().lock().unwrap().get(&key) {
        return v.clone();
    }
    let pts = find_critical_set(a, &SearchBox::default(), &FixedPointConfig::default()).unwrap_or_default();
    critical_cache().lock().unwrap().insert(key, pts.clone());
    pts
}

/// Finer settings when `|t|` is within `10^{-2}` of a critical point of a
/// system whose rows all carry the same total weight.
fn near_critical_config(sys: &FixedPointSystem, t: f64, cfg: &FixedPointConfig) -> Option<FixedPointConfig> {
    if !matches!(sys.kind, SystemKind::Band) {
        return None;
    }
    let sums: Vec<f64> = sys.coupling.weights.iter().map(|r| r.iter().sum()).collect();
    let k = sums[0];
    if k <= 0.0 || sums.iter().any(|s| (s - k).abs() > 1e-12 * k) {
        return None;
    }
    let scale = k.powf(1.0 / sys.alpha.value());
    let near = wigner_critical_points(&sys.alpha)
        .iter()
        .any(|&c| (t.abs() - scale * c).abs() < 1e-2);
    near.then(|| cfg.near_critical())
}
