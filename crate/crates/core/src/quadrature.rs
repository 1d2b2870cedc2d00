//! Quadrature on the half line for integrands of the form
//! `r^{p-1} exp(phase(r))`, evaluated in the logarithmic variable `x = ln r`.
//!
//! Two independent schemes are provided: a double-exponential (sinh-sinh in
//! `x`) trapezoid rule with step halving, and adaptive Gauss-Kronrod (7/15)
//! subdivision on a finite window of `x`. Both integrate several power
//! weights `p_j` that share the same phase in a single pass, which is how the
//! derivatives of the `g` family are obtained alongside the function itself.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Log-modulus drop below the peak at which tails are discarded (e^-42 ~ 6e-19).
const TAIL_DROP: f64 = 42.0;
const MAX_LEVELS: usize = 12;
const U_CAP: f64 = 6.5;

/// Phase `x -> exponent(x)` together with its real-part envelope.
///
/// `exponent` must return the complex exponent at `x = ln r` without the
/// power weight; `envelope` must return its real part (it is evaluated far
/// more often, so it is kept separate and cheap).
pub(crate) trait LogPhase {
    fn exponent(&self, x: f64) -> Complex64;
    fn envelope(&self, x: f64) -> f64;
    /// Derivative of the envelope, used to locate its peak.
    fn envelope_slope(&self, x: f64) -> f64;
    /// True when `envelope_slope` is decreasing (envelope concave).
    fn concave(&self) -> bool;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadOutcome<const K: usize> {
    pub values: [Complex64; K],
    pub error: f64,
    pub converged: bool,
}

fn peak_location<P: LogPhase>(phase: &P, p: f64) -> f64 {
    let total = |x: f64| p * x + phase.envelope(x);
    if phase.concave() {
        let slope = |x: f64| p + phase.envelope_slope(x);
        let (mut lo, mut hi) = (-400.0, 60.0);
        if slope(lo) <= 0.0 {
            return lo;
        }
        if slope(hi) >= 0.0 {
            return hi;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    } else {
        let mut best = (-400.0, f64::NEG_INFINITY);
        let mut x = -400.0;
        while x <= 60.0 {
            let v = total(x);
            if v > best.1 {
                best = (x, v);
            }
            x += 0.25;
        }
        best.0
    }
}

fn log_term_bound<P: LogPhase>(phase: &P, powers: &[f64], x: f64) -> f64 {
    let pmax = powers.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let pmin = powers.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let p = if x >= 0.0 { pmax } else { pmin };
    p * x + phase.envelope(x)
}

/// Double-exponential rule for `sum_j`-shared phases:
/// returns `∫_R exp(p_j x + exponent(x)) dx` for every `p_j`.
pub(crate) fn double_exponential<P: LogPhase, const K: usize>(
    phase: &P,
    powers: [f64; K],
    abs_tol: f64,
    rel_tol: f64,
    budget: usize,
) -> QuadOutcome<K> {
    let pmin = powers.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let center = peak_location(phase, pmin);
    let peak = powers
        .iter()
        .map(|&p| p * center + phase.envelope(center))
        .fold(f64::NEG_INFINITY, f64::max);

    let x_of = |u: f64| center + FRAC_PI_2 * u.sinh();
    let log_weight = |u: f64| (FRAC_PI_2 * u.cosh()).ln();

    // Walk outward on the coarse lattice to fix the truncation window.
    let h0 = 0.5;
    let mut u_hi = 0.0;
    let mut prev = f64::INFINITY;
    loop {
        let u = u_hi + h0;
        if u > U_CAP {
            break;
        }
        let b = log_term_bound(phase, &powers, x_of(u)) + log_weight(u);
        u_hi = u;
        if b < peak - TAIL_DROP && b <= prev {
            break;
        }
        prev = b;
    }
    let mut u_lo = 0.0;
    prev = f64::INFINITY;
    loop {
        let u = u_lo - h0;
        if u < -U_CAP {
            break;
        }
        let b = log_term_bound(phase, &powers, x_of(u)) + log_weight(u);
        u_lo = u;
        if b < peak - TAIL_DROP && b <= prev {
            break;
        }
        prev = b;
    }

    let term = |u: f64, acc: &mut [Complex64; K]| {
        let x = x_of(u);
        let e = phase.exponent(x);
        let w = FRAC_PI_2 * u.cosh();
        for (slot, &p) in acc.iter_mut().zip(powers.iter()) {
            let ex = e + p * x;
            if ex.re > -745.0 {
                *slot += w * Complex64::from_polar(ex.re.exp(), ex.im);
            }
        }
    };

    let mut sums = [Complex64::new(0.0, 0.0); K];
    let mut evals = 0usize;
    let n0 = ((u_hi - u_lo) / h0).round() as i64;
    for k in 0..=n0 {
        term(u_lo + k as f64 * h0, &mut sums);
        evals += 1;
    }
    let mut h = h0;
    let mut estimate = sums.map(|s| s * h);
    let mut error = f64::INFINITY;
    let mut converged = false;
    for level in 1..=MAX_LEVELS {
        h *= 0.5;
        let n = ((u_hi - u_lo) / h).round() as i64;
        if evals + (n as usize) / 2 > budget {
            break;
        }
        let mut k = 1;
        while k < n {
            term(u_lo + k as f64 * h, &mut sums);
            evals += 1;
            k += 2;
        }
        let next = sums.map(|s| s * h);
        error = 0.0;
        let mut ok = true;
        for j in 0..K {
            let d = (next[j] - estimate[j]).norm();
            error = error.max(d);
            if d > abs_tol + rel_tol * next[j].norm() {
                ok = false;
            }
        }
        estimate = next;
        if ok && level >= 2 {
            converged = true;
            break;
        }
    }
    QuadOutcome {
        values: estimate,
        error,
        converged,
    }
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss-Kronrod 7/15 on `[a, b]` for a real integrand: `(K15, |K15 - G7|)`.
fn kronrod_real<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let (mut kron, mut gauss) = (0.0, 0.0);
    for i in 0..8 {
        let offs: &[f64] = if i == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &s in offs {
            let v = f(c + s * half * XGK[i]);
            kron += WGK[i] * v;
            if i % 2 == 1 {
                gauss += WG[i / 2] * v;
            }
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod over the intervals between consecutive
/// `breaks`, splitting the panel with the largest error estimate until the
/// total estimate is below `abs_tol` or `max_panels` is reached.
pub(crate) fn integrate_real<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], abs_tol: f64, max_panels: usize) -> (f64, f64) {
    let mut panels: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .map(|w| {
            let (v, e) = kronrod_real(f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !(err > abs_tol) || panels.len() >= max_panels {
            let total = panels.iter().map(|p| p.2).sum();
            return (total, err);
        }
        let (k, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (a, b, _, _) = panels.swap_remove(k);
        let m = 0.5 * (a + b);
        for (lo, hi) in [(a, m), (m, b)] {
            let (v, e) = kronrod_real(f, lo, hi);
            panels.push((lo, hi, v, e));
        }
    }
}

fn kronrod_panel<P: LogPhase, const K: usize>(
    phase: &P,
    powers: &[f64; K],
    a: f64,
    b: f64,
) -> ([Complex64; K], f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = [Complex64::new(0.0, 0.0); K];
    let mut gauss = [Complex64::new(0.0, 0.0); K];
    let eval = |x: f64| -> [Complex64; K] {
        let e = phase.exponent(x);
        let mut out = [Complex64::new(0.0, 0.0); K];
        for (o, &p) in out.iter_mut().zip(powers.iter()) {
            let ex = e + p * x;
            if ex.re > -745.0 {
                *o = Complex64::from_polar(ex.re.exp(), ex.im);
            }
        }
        out
    };
    for i in 0..8 {
        let offs: &[f64] = if i == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &s in offs {
            let v = eval(c + s * half * XGK[i]);
            for j in 0..K {
                kron[j] += WGK[i] * v[j];
                if i % 2 == 1 {
                    gauss[j] += WG[i / 2] * v[j];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for j in 0..K {
        kron[j] *= half;
        gauss[j] *= half;
        err = err.max((kron[j] - gauss[j]).norm());
    }
    (kron, err)
}

/// Adaptive Gauss-Kronrod subdivision on the window of `x` where the
/// integrand is within `TAIL_DROP` of its peak.
pub(crate) fn adaptive_kronrod<P: LogPhase, const K: usize>(
    phase: &P,
    powers: [f64; K],
    abs_tol: f64,
    rel_tol: f64,
    budget: usize,
) -> QuadOutcome<K> {
    let pmin = powers.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let center = peak_location(phase, pmin);
    let peak = powers
        .iter()
        .map(|&p| p * center + phase.envelope(center))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut lo = center;
    let mut step = 0.5;
    while log_term_bound(phase, &powers, lo) > peak - TAIL_DROP && lo > -2000.0 {
        lo -= step;
        step *= 1.25;
    }
    let mut hi = center;
    step = 0.5;
    while log_term_bound(phase, &powers, hi) > peak - TAIL_DROP && hi < 60.0 {
        hi += step;
        step *= 1.25;
    }

    let mut panels: Vec<(f64, f64, [Complex64; K], f64)> = Vec::new();
    let pieces = 16;
    let w = (hi - lo) / pieces as f64;
    for i in 0..pieces {
        let a = lo + i as f64 * w;
        let (v, e) = kronrod_panel(phase, &powers, a, a + w);
        panels.push((a, a + w, v, e));
    }
    let mut evals = pieces * 15;
    loop {
        let mut total = [Complex64::new(0.0, 0.0); K];
        let mut err = 0.0;
        for p in &panels {
            for j in 0..K {
                total[j] += p.2[j];
            }
            err += p.3;
        }
        let scale = total.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if err <= abs_tol + rel_tol * scale {
            return QuadOutcome {
                values: total,
                error: err,
                converged: true,
            };
        }
        if evals + 30 > budget {
            return QuadOutcome {
                values: total,
                error: err,
                converged: false,
            };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (a, b, _, _) = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (v1, e1) = kronrod_panel(phase, &powers, a, m);
        let (v2, e2) = kronrod_panel(phase, &powers, m, b);
        panels.push((a, m, v1, e1));
        panels.push((m, b, v2, e2));
        evals += 30;
    }
}
