//! The entire functions `g_{α,β}`, `g_α = g_{α,α}` and `h_α = g_{α,2}`,
//!
//! ```text
//! g_{α,β}(y) = ∫_0^∞ t^{β/2-1} e^{-t} exp(-t^{α/2} y) dt,
//! ```
//!
//! the constant `C_α = i^α Γ(1-α/2)/Γ(α/2)`, the principal power branch and
//! the two sectors `K_α` and `K̂_α` in which the fixed-point unknowns live.
//!
//! On `K_α` with `α > 1` the integrand on the real half line can grow by many
//! orders of magnitude before `e^{-t}` takes over, so the integral is taken
//! along a ray `t = r e^{iφ}` rotated against `arg y`. Along the ray it is
//! evaluated in `ln r` with a double-exponential rule (adaptive Gauss-Kronrod
//! as the second scheme). The `α = 2` limit is a separate closed-form mode:
//! `g_{2,β}(y) = Γ(β/2) (1+y)^{-β/2}`, `C_2 = -1`.

use crate::error::{Error, Result};
use crate::quadrature::{self, LogPhase, QuadOutcome};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Tail exponent of the entry law, or the closed-form `α = 2` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaParam {
    alpha: f64,
    alpha_two_mode: bool,
}

impl AlphaParam {
    /// `alpha` in `(0, 2)`, or exactly `2.0` for the semicircle limit.
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha == 2.0 {
            return Ok(Self::two());
        }
        Self::stable(alpha)
    }

    /// Heavy-tailed exponent; rejects `α = 2`.
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::invalid("alpha", format!("{alpha} is not in (0, 2)")));
        }
        Ok(Self {
            alpha,
            alpha_two_mode: false,
        })
    }

    pub fn two() -> Self {
        Self {
            alpha: 2.0,
            alpha_two_mode: true,
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn is_two_mode(&self) -> bool {
        self.alpha_two_mode
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    /// sinh-sinh trapezoid rule in `ln r` with step halving.
    DoubleExponential,
    /// Gauss-Kronrod 7/15 bisection on a finite `ln r` window.
    AdaptiveSubdivision,
}

/// Settings for evaluating `g_{α,β}`. `node_count` is the evaluation budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub node_count: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            kind: QuadratureKind::DoubleExponential,
            node_count: 40_000,
            abs_tol: 1e-15,
            rel_tol: 1e-13,
        }
    }
}

impl QuadratureRule {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 8 {
            return Err(Error::invalid("node_count", "must be at least 8"));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::invalid("tolerance", "tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    /// `{R e^{iθ} : |θ| ≤ απ/2}`
    KAlpha,
    /// `{R e^{iθ} : -απ/2 ≤ θ ≤ 0}`
    KHatAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub value: Complex64,
    pub cone: Cone,
}

impl ConePoint {
    pub fn contained(&self, a: &AlphaParam, slack: f64) -> bool {
        cone_contains(self.cone, a, self.value, slack)
    }
}

pub const DEFAULT_CONE_SLACK: f64 = 1e-9;

pub fn cone_contains(cone: Cone, a: &AlphaParam, y: Complex64, slack: f64) -> bool {
    if y == Complex64::new(0.0, 0.0) {
        return true;
    }
    let theta = y.im.atan2(y.re);
    let half = a.value() * FRAC_PI_2;
    match cone {
        Cone::KAlpha => theta.abs() <= half + slack,
        Cone::KHatAlpha => theta >= -half - slack && theta <= slack,
    }
}

/// `x^p = r^p e^{ipθ}` with `θ ∈ (-π, π)`.
pub fn principal_power(x: Complex64, p: f64) -> Result<Complex64> {
    if x.im == 0.0 && x.re <= 0.0 {
        return Err(Error::Domain(format!(
            "principal power undefined on the closed negative axis (x = {x})"
        )));
    }
    Ok(ppow(x, p))
}

/// Unchecked principal power; the caller guarantees `x` is off the cut.
#[inline]
pub(crate) fn ppow(x: Complex64, p: f64) -> Complex64 {
    let r = x.norm();
    let theta = x.im.atan2(x.re);
    Complex64::from_polar(r.powf(p), p * theta)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Real Gamma function (Lanczos, g = 7, 9 terms) with reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// `C_α = i^α Γ(1-α/2) / Γ(α/2)`; `-1` in the `α = 2` mode.
pub fn c_alpha(a: &AlphaParam) -> Complex64 {
    if a.is_two_mode() {
        return Complex64::new(-1.0, 0.0);
    }
    let al = a.value();
    let modulus = gamma(1.0 - al / 2.0) / gamma(al / 2.0);
    Complex64::from_polar(modulus, FRAC_PI_2 * al)
}

/// Coefficient of the diagonally perturbed system, the conjugate of `C_α`.
pub fn c_alpha_bar(a: &AlphaParam) -> Complex64 {
    c_alpha(a).conj()
}

struct RayPhase {
    half_alpha: f64,
    rot: Complex64,
    rot_y: Complex64,
}

impl LogPhase for RayPhase {
    #[inline]
    fn exponent(&self, x: f64) -> Complex64 {
        -(x.exp() * self.rot) - (self.half_alpha * x).exp() * self.rot_y
    }
    #[inline]
    fn envelope(&self, x: f64) -> f64 {
        -x.exp() * self.rot.re - (self.half_alpha * x).exp() * self.rot_y.re
    }
    fn envelope_slope(&self, x: f64) -> f64 {
        -x.exp() * self.rot.re - self.half_alpha * (self.half_alpha * x).exp() * self.rot_y.re
    }
    fn concave(&self) -> bool {
        self.rot_y.re >= 0.0
    }
}

/// Ray angle for the contour: rotate only as far as needed to bring the
/// `y` term within `π/2 - 0.5` of the positive axis, never past the angle
/// that balances both exponents.
fn ray_angle(alpha: f64, y: Complex64) -> f64 {
    if y.norm() == 0.0 {
        return 0.0;
    }
    let theta = y.im.atan2(y.re);
    let need = ((theta.abs() - (FRAC_PI_2 - 0.5)) * 2.0 / alpha).max(0.0);
    let balanced = theta.abs() / (1.0 + alpha / 2.0);
    -theta.signum() * need.min(balanced).min(1.45)
}

fn integrate_ray<const K: usize>(
    alpha: f64,
    y: Complex64,
    phi: f64,
    betas: [f64; K],
    rule: &QuadratureRule,
) -> Result<[Complex64; K]> {
    let phase = RayPhase {
        half_alpha: alpha / 2.0,
        rot: Complex64::from_polar(1.0, phi),
        rot_y: Complex64::from_polar(1.0, alpha * phi / 2.0) * y,
    };
    let powers = betas.map(|b| b / 2.0);
    let run = |kind: QuadratureKind| -> QuadOutcome<K> {
        match kind {
            QuadratureKind::DoubleExponential => quadrature::double_exponential(
                &phase,
                powers,
                rule.abs_tol,
                rule.rel_tol,
                rule.node_count,
            ),
            QuadratureKind::AdaptiveSubdivision => quadrature::adaptive_kronrod(
                &phase,
                powers,
                rule.abs_tol,
                rule.rel_tol,
                rule.node_count,
            ),
        }
    };
    let mut out = run(rule.kind);
    if !out.converged {
        let other = match rule.kind {
            QuadratureKind::DoubleExponential => QuadratureKind::AdaptiveSubdivision,
            QuadratureKind::AdaptiveSubdivision => QuadratureKind::DoubleExponential,
        };
        let second = run(other);
        if second.converged || second.error < out.error {
            out = second;
        }
    }
    let scale = out.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // Accept a stalled estimate when it is within 100x of the requested
    // tolerance; anything worse is reported.
    if !out.converged && out.error > 100.0 * (rule.abs_tol + rule.rel_tol * scale) {
        return Err(Error::Quadrature {
            y,
            estimate: out.values[0],
            error: out.error,
        });
    }
    let mut values = out.values;
    for (v, b) in values.iter_mut().zip(betas.iter()) {
        *v *= Complex64::from_polar(1.0, phi * b / 2.0);
    }
    Ok(values)
}

/// `g_{α,β}(y)` for several `β` sharing one quadrature pass.
pub fn g_family<const K: usize>(
    a: &AlphaParam,
    betas: [f64; K],
    y: Complex64,
    rule: &QuadratureRule,
) -> Result<[Complex64; K]> {
    for &b in &betas {
        if !(b > 0.0) {
            return Err(Error::invalid("beta", format!("{b} must be positive")));
        }
    }
    if a.is_two_mode() {
        let base = Complex64::new(1.0, 0.0) + y;
        return Ok(betas.map(|b| gamma(b / 2.0) * ppow(base, -b / 2.0)));
    }
    if !y.re.is_finite() || !y.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {y}")));
    }
    integrate_ray(a.value(), y, ray_angle(a.value(), y), betas, rule)
}

pub fn g_alpha_beta(
    a: &AlphaParam,
    beta: f64,
    y: Complex64,
    rule: &QuadratureRule,
) -> Result<Complex64> {
    Ok(g_family(a, [beta], y, rule)?[0])
}

/// `g_α = g_{α,α}` with the default rule.
pub fn g_alpha(a: &AlphaParam, y: Complex64) -> Result<Complex64> {
    g_alpha_beta(a, a.value(), y, &QuadratureRule::default())
}

/// `h_α = g_{α,2}` with the default rule.
pub fn h_alpha(a: &AlphaParam, y: Complex64) -> Result<Complex64> {
    g_alpha_beta(a, 2.0, y, &QuadratureRule::default())
}

/// Values needed by Newton steps: `(g_α(y), g_α'(y))`, using
/// `d/dy g_{α,β} = -g_{α,β+α}`.
pub fn g_alpha_and_derivative(a: &AlphaParam, y: Complex64) -> Result<(Complex64, Complex64)> {
    let al = a.value();
    let [g, g1] = g_family(a, [al, 2.0 * al], y, &QuadratureRule::default())?;
    Ok((g, -g1))
}

/// `(g_α, g_α', g_α'')` for the critical-set search.
pub fn g_alpha_derivatives2(
    a: &AlphaParam,
    y: Complex64,
) -> Result<(Complex64, Complex64, Complex64)> {
    let al = a.value();
    let [g, g1, g2] = g_family(a, [al, 2.0 * al, 3.0 * al], y, &QuadratureRule::default())?;
    Ok((g, -g1, g2))
}

/// Angle `η(α)` from the boundedness argument: `η ≤ π/2` with
/// `πα/4 + αη/2 < π/2`.
pub fn eta(alpha: f64) -> f64 {
    FRAC_PI_2.min(0.9 * (PI / alpha - FRAC_PI_2))
}

/// Uniform bound `(sin η)^{-β/2} Γ(β/2)` of `|g_{α,β}|` on `K_α`.
pub fn cone_bound(a: &AlphaParam, beta: f64) -> f64 {
    if a.is_two_mode() {
        return f64::INFINITY;
    }
    eta(a.value()).sin().powf(-beta / 2.0) * gamma(beta / 2.0)
}

/// `sup_{|y| ≤ r} |g_{α,β}(y)| ≤ g_{α,β}(-r)` (the power series has
/// alternating coefficients of constant modulus sign).
pub fn ball_bound(a: &AlphaParam, beta: f64, r: f64) -> f64 {
    if a.is_two_mode() {
        return if r < 1.0 {
            gamma(beta / 2.0) * (1.0 - r).powf(-beta / 2.0)
        } else {
            f64::INFINITY
        };
    }
    if r == 0.0 {
        return gamma(beta / 2.0);
    }
    let rule = QuadratureRule {
        rel_tol: 1e-10,
        ..QuadratureRule::default()
    };
    match integrate_ray(a.value(), Complex64::new(-r, 0.0), 0.0, [beta], &rule) {
        Ok(v) if v[0].re.is_finite() => v[0].re,
        _ => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn branch_convention() {
        let p = principal_power(c(0.0, 1.0), 1.0).unwrap();
        assert!((p - c(0.0, 1.0)).norm() < 1e-15);
        let p = principal_power(c(4.0, 0.0), 0.5).unwrap();
        assert!((p - c(2.0, 0.0)).norm() < 1e-15);
        let up = principal_power(c(-1.0, 1e-9), 0.5).unwrap();
        let dn = principal_power(c(-1.0, -1e-9), 0.5).unwrap();
        assert!((up - c(0.0, 1.0)).norm() < 1e-8);
        assert!((dn - c(0.0, -1.0)).norm() < 1e-8);
        for al in [0.3, 1.0, 1.7] {
            let v = principal_power(c(0.0, 1.0), al).unwrap();
            assert!((v - Complex64::from_polar(1.0, PI * al / 2.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn principal_power_rejects_cut() {
        assert!(principal_power(c(0.0, 0.0), 0.5).is_err());
        assert!(principal_power(c(-2.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn gamma_table() {
        let table = [
            (0.5, PI.sqrt()),
            (1.0, 1.0),
            (0.25, 3.625_609_908_221_908),
            (0.75, 1.225_416_702_465_178),
            (5.0, 24.0),
            (1.5, 0.886_226_925_452_758),
        ];
        for (x, want) in table {
            assert!(((gamma(x) - want) / want).abs() < 1e-13, "Γ({x})");
        }
    }

    #[test]
    fn c_alpha_values() {
        let one = AlphaParam::new(1.0).unwrap();
        assert!((c_alpha(&one) - c(0.0, 1.0)).norm() < 1e-14);
        assert_eq!(c_alpha(&AlphaParam::two()), c(-1.0, 0.0));
        let half = AlphaParam::new(0.5).unwrap();
        let v = c_alpha(&half);
        assert!((v.norm() - 0.337_989_120_033_642_4).abs() < 1e-12);
        assert!((v.arg() - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn alpha_validation() {
        assert!(AlphaParam::new(0.0).is_err());
        assert!(AlphaParam::new(2.5).is_err());
        assert!(AlphaParam::stable(2.0).is_err());
        assert!(AlphaParam::new(2.0).unwrap().is_two_mode());
    }

    #[test]
    fn cone_membership() {
        let one = AlphaParam::new(1.0).unwrap();
        assert!(cone_contains(Cone::KAlpha, &one, c(1.0, 0.0), 0.0));
        assert!(cone_contains(Cone::KAlpha, &one, c(0.0, 1.0), 0.0));
        assert!(!cone_contains(Cone::KHatAlpha, &one, c(0.0, 1.0), 0.0));
        assert!(cone_contains(Cone::KHatAlpha, &one, c(0.0, -1.0), 0.0));
        assert!(cone_contains(Cone::KHatAlpha, &one, c(0.0, 0.0), 0.0));
        assert!(!cone_contains(Cone::KAlpha, &one, c(-1.0, 0.1), 0.0));
    }

    #[test]
    fn g_at_zero_is_gamma() {
        for al in [0.5, 1.0, 1.5] {
            let a = AlphaParam::new(al).unwrap();
            let rule = QuadratureRule::default();
            let v = g_alpha_beta(&a, 1.0, c(0.0, 0.0), &rule).unwrap();
            assert!((v - c(PI.sqrt(), 0.0)).norm() < 1e-13);
            assert!((h_alpha(&a, c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-13);
        }
        let a = AlphaParam::new(1.5).unwrap();
        assert!((g_alpha(&a, c(0.0, 0.0)).unwrap().re - 1.225_416_702_465_178).abs() < 1e-12);
    }

    #[test]
    fn two_mode_closed_forms() {
        let a = AlphaParam::two();
        let rule = QuadratureRule::default();
        let v = g_alpha_beta(&a, 2.0, c(0.5, 0.0), &rule).unwrap();
        assert!((v.re - 2.0 / 3.0).abs() < 1e-15);
        assert!((g_alpha(&a, c(1.0, 0.0)).unwrap().re - 0.5).abs() < 1e-15);
        assert!((h_alpha(&a, c(3.0, 0.0)).unwrap().re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn adaptive_route_agrees_with_double_exponential() {
        let a = AlphaParam::new(1.3).unwrap();
        let de = QuadratureRule::default();
        let gk = QuadratureRule {
            kind: QuadratureKind::AdaptiveSubdivision,
            ..de
        };
        for y in [c(0.3, 0.2), c(-2.0, 4.0), c(40.0, -10.0)] {
            let u = g_alpha_beta(&a, 1.3, y, &de).unwrap();
            let v = g_alpha_beta(&a, 1.3, y, &gk).unwrap();
            assert!((u - v).norm() < 1e-11 * u.norm().max(1.0), "{y}: {u} vs {v}");
        }
    }

    #[test]
    fn rule_validation() {
        let bad = QuadratureRule {
            node_count: 4,
            ..QuadratureRule::default()
        };
        assert!(bad.validate().is_err());
        assert!(QuadratureRule::default().validate().is_ok());
    }
}
