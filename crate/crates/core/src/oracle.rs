//! Brute-force reference computations, deliberately sharing no code with the
//! production paths: composite Simpson for `g_{α,β}`, plain Picard iteration
//! for the perturbed system, semicircle closed forms and determinant
//! bisection for eigenvalues.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Simpson panels used by [`g_simpson`] unless stated otherwise.
pub const DEFAULT_PANELS: usize = 1_000_000;

/// `g_{α,β}(y)` by composite Simpson along a rotated ray, after the
/// substitution `t = s^m` that removes the algebraic endpoint behaviour.
pub fn g_simpson(alpha: f64, beta: f64, y: Complex64, panels: usize) -> Complex64 {
    let theta = if y.norm() == 0.0 { 0.0 } else { y.arg() };
    let psi = (theta.abs() / (1.0 + alpha / 2.0)).min(1.3);
    let phi = -theta.signum() * psi;
    let rot = Complex64::from_polar(1.0, phi);
    let rot_y = Complex64::from_polar(1.0, alpha * phi / 2.0) * y;
    let m = (8.0 / alpha.min(beta)).ceil();

    let log_mod =
        |r: f64| (beta / 2.0 - 1.0) * r.ln() - r * rot.re - r.powf(alpha / 2.0) * rot_y.re;
    let mut peak = f64::NEG_INFINITY;
    let mut r = 1e-300f64;
    while r < 1e6 {
        peak = peak.max(log_mod(r));
        r *= 1.05;
    }
    let mut r_max = (60.0 / rot.re).max(50.0);
    while log_mod(r_max) > peak - 50.0 {
        r_max *= 1.5;
    }

    let s_max = r_max.powf(1.0 / m);
    let n = panels + panels % 2;
    let h = s_max / n as f64;
    let f = |s: f64| -> Complex64 {
        if s == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let r = s.powf(m);
        let ex = -(r * rot) - r.powf(alpha / 2.0) * rot_y;
        let w = m * s.powf(m * beta / 2.0 - 1.0);
        if ex.re < -745.0 {
            Complex64::new(0.0, 0.0)
        } else {
            w * ex.exp()
        }
    };
    let mut acc = f(0.0) + f(s_max);
    for k in 1..n {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(k as f64 * h);
    }
    acc * (h / 3.0) * Complex64::from_polar(1.0, phi * beta / 2.0)
}

/// Principal `x^p`, written out independently of the library helper.
fn pow_principal(x: Complex64, p: f64) -> Complex64 {
    let (r, th) = x.to_polar();
    Complex64::from_polar(r.powf(p), p * th)
}

/// Fixed point of the diagonally perturbed system by plain Picard iteration
/// from zero, `iterations` steps, with `g` supplied by the caller.
///
/// `a[r][s]` are the coupling weights `|σ_rs|^α Δ_s`; `c_bar` the coefficient.
pub fn perturbed_picard<G>(
    alpha: f64,
    a: &[Vec<f64>],
    atoms: &[(f64, f64)],
    c_bar: Complex64,
    z: Complex64,
    iterations: usize,
    g: G,
) -> Vec<Complex64>
where
    G: Fn(Complex64) -> Complex64,
{
    let q = a.len();
    let zetas: Vec<(f64, Complex64)> = atoms
        .iter()
        .map(|&(lambda, w)| (w, pow_principal(1.0 / (lambda - z), alpha / 2.0)))
        .collect();
    let mut x = vec![Complex64::new(0.0, 0.0); q];
    for _ in 0..iterations {
        let inner: Vec<Complex64> = x
            .iter()
            .map(|&xs| zetas.iter().map(|&(w, zeta)| w * zeta * g(zeta * xs)).sum())
            .collect();
        x = (0..q)
            .map(|r| c_bar * (0..q).map(|s| a[r][s] * inner[s]).sum::<Complex64>())
            .collect();
    }
    x
}

/// `G_2(z) = (z - sqrt(z^2 - 4))/2` on the branch with `G_2(z) ~ 1/z`.
pub fn semicircle_stieltjes(z: Complex64) -> Complex64 {
    let root = (z - 2.0).sqrt() * (z + 2.0).sqrt();
    (z - root) / 2.0
}

pub fn semicircle_density(t: f64) -> f64 {
    if t.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - t * t).sqrt() / (2.0 * PI)
    }
}

pub fn semicircle_cdf(t: f64) -> f64 {
    if t <= -2.0 {
        return 0.0;
    }
    if t >= 2.0 {
        return 1.0;
    }
    0.5 + (t * (4.0 - t * t).sqrt() / 4.0 + (t / 2.0).asin()) / PI
}

/// Marchenko-Pastur density of ratio one with the `a_{N+M}` scaling:
/// support `(0, 2]`.
pub fn wishart_square_density(t: f64) -> f64 {
    if t <= 0.0 || t >= 2.0 {
        0.0
    } else {
        (8.0 - 4.0 * t).sqrt() / (2.0 * PI * t.sqrt())
    }
}

/// `P(X > x)` for the standard symmetric stable law (characteristic function
/// `exp(-|u|^α)`) by Gil-Pelaez inversion with composite Simpson.
pub fn stable_upper_tail_gil_pelaez(alpha: f64, x: f64, panels: usize) -> f64 {
    let u_max = 45f64.powf(1.0 / alpha);
    let n = panels + panels % 2;
    let h = u_max / n as f64;
    let f = |u: f64| {
        if u == 0.0 {
            x
        } else {
            (u * x).sin() * (-u.powf(alpha)).exp() / u
        }
    };
    let mut acc = f(0.0) + f(u_max);
    for k in 1..n {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(k as f64 * h);
    }
    0.5 - acc * h / 3.0 / PI
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if m[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            m.swap(p, k);
            d = -d;
        }
        d *= m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    d
}

/// Eigenvalues of a small symmetric matrix by scanning `det(M - tI)` for
/// sign changes and bisecting each bracket. Assumes simple eigenvalues.
pub fn eigenvalues_by_bisection(m: &[Vec<f64>], scan_points: usize) -> Vec<f64> {
    let n = m.len();
    let bound: f64 = m
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let char_poly = |t: f64| {
        let mut a = m.to_vec();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] -= t;
        }
        det(a)
    };
    let mut roots = Vec::with_capacity(n);
    let step = 2.0 * bound / scan_points as f64;
    let mut lo = -bound;
    let mut f_lo = char_poly(lo);
    for k in 1..=scan_points {
        let hi = -bound + k as f64 * step;
        let f_hi = char_poly(hi);
        if f_lo == 0.0 {
            roots.push(lo);
        } else if f_lo * f_hi < 0.0 {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                let fc = char_poly(c);
                if fc == 0.0 || b - a < 1e-15 * bound {
                    a = c;
                    b = c;
                    break;
                }
                if fa * fc < 0.0 {
                    b = c;
                } else {
                    a = c;
                    fa = fc;
                }
            }
            roots.push(0.5 * (a + b));
        }
        lo = hi;
        f_lo = f_hi;
    }
    roots
}
