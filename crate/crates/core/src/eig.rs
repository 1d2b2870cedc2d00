//! Symmetric eigenvalues (Householder tridiagonalization followed by
//! implicit-shift QL), empirical spectral distributions and distances
//! between distribution functions.

use crate::error::{Error, Result};
use crate::matrices::Matrix;
use serde::{Deserialize, Serialize};

const MAX_QL_SWEEPS: usize = 50;

struct Reflector {
    alpha: f64,
    tau: f64,
}

/// Householder vector for `x = a[start.., col]` (read along row `col` by
/// symmetry) stored in `v[start..]`; `None` when `x` is already a multiple
/// of `e_1`.
fn reflector(a: &Matrix, col: usize, start: usize, v: &mut [f64]) -> Option<Reflector> {
    let n = a.rows;
    let row = &a.row(col)[start..n];
    let norm_sq = dot(row, row);
    let x0 = row[0];
    if norm_sq - x0 * x0 <= f64::MIN_POSITIVE {
        return None;
    }
    let alpha = if x0 >= 0.0 { -norm_sq.sqrt() } else { norm_sq.sqrt() };
    v[start..n].copy_from_slice(row);
    v[start] -= alpha;
    let v_sq = norm_sq - x0 * x0 + v[start] * v[start];
    Some(Reflector {
        alpha,
        tau: 2.0 / v_sq,
    })
}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

/// Reduce a symmetric matrix (consumed) to tridiagonal form; returns the
/// diagonal and the sub-diagonal (`e[0]` unused, `e[i]` couples `i-1, i`).
///
/// The product `τ A v` needed by step `k+1` is accumulated while step `k`
/// applies its rank-two update, so each step streams the trailing block once.
fn tridiagonalize(mut a: Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut v_next = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_next = vec![0.0; n];
    let mut have_p = false;
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        let Some(h) = reflector(&a, k, m, &mut v) else {
            e[m] = a.get(k, m);
            have_p = false;
            continue;
        };
        e[m] = h.alpha;
        if !have_p {
            for i in m..n {
                p[i] = h.tau * dot(&a.row(i)[m..n], &v[m..n]);
            }
        }
        let half = 0.5 * h.tau * dot(&p[m..n], &v[m..n]);
        for i in m..n {
            p[i] -= half * v[i];
        }
        let update = |a: &mut Matrix, i: usize, v: &[f64], p: &[f64]| {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a.data[i * n + m..i * n + n];
            for ((x, &vj), &wj) in row.iter_mut().zip(&v[m..n]).zip(&p[m..n]) {
                *x -= vi * wj + wi * vj;
            }
        };
        update(&mut a, m, &v, &p);
        let next = if m + 2 < n {
            reflector(&a, m, m + 1, &mut v_next)
        } else {
            None
        };
        match &next {
            Some(hn) => {
                for i in m + 1..n {
                    update(&mut a, i, &v, &p);
                    p_next[i] = hn.tau * dot(&a.row(i)[m + 1..n], &v_next[m + 1..n]);
                }
                have_p = true;
                std::mem::swap(&mut p, &mut p_next);
            }
            None => {
                for i in m + 1..n {
                    update(&mut a, i, &v, &p);
                }
                have_p = false;
            }
        }
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a.get(i, i);
    }
    if n >= 2 {
        e[n - 1] = a.get(n - 1, n - 2);
    }
    (d, e)
}

/// Eigenvalues of a symmetric tridiagonal matrix, implicit-shift QL.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let norm = d
        .iter()
        .zip(e.iter())
        .fold(0.0f64, |a, (x, y)| a.max(x.abs() + y.abs()));
    let floor = f64::EPSILON * norm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues_symmetric(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::invalid("matrix", "must be square"));
    }
    let n = m.rows;
    let scale = m.data.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for i in 0..n {
        for j in 0..i {
            let (x, y) = (m.get(i, j), m.get(j, i));
            if (x - y).abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::invalid("matrix", "must be symmetric"));
            }
        }
    }
    let (mut d, mut e) = tridiagonalize(m.clone());
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    pub eigenvalues: Vec<f64>,
    pub n: usize,
    pub trial_id: u64,
    pub ensemble_tag: String,
}

impl EmpiricalSpectrum {
    pub fn new(mut eigenvalues: Vec<f64>, trial_id: u64, ensemble_tag: impl Into<String>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self {
            n: eigenvalues.len(),
            eigenvalues,
            trial_id,
            ensemble_tag: ensemble_tag.into(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        empirical_cdf(&self.eigenvalues, t)
    }

    /// Union of several spectra, each eigenvalue with equal weight.
    pub fn pooled(spectra: &[EmpiricalSpectrum], tag: impl Into<String>) -> Self {
        let all: Vec<f64> = spectra
            .iter()
            .flat_map(|s| s.eigenvalues.iter().copied())
            .collect();
        Self::new(all, 0, tag)
    }
}

/// Right-continuous step CDF of a sorted sample.
pub fn empirical_cdf(sorted: &[f64], t: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.partition_point(|&x| x <= t) as f64 / sorted.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub ks: f64,
    pub w1_window: f64,
    pub window: (f64, f64),
    pub excluded_neighborhood: Option<f64>,
}

pub const DISTANCE_GRID: usize = 2001;

/// KS and windowed `W1` between two distribution functions on the grid of
/// `window` minus `(-excluded0, excluded0)`.
pub fn cdf_distance<F, G>(f: F, g: G, window: (f64, f64), excluded0: f64) -> Result<DistanceReport>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let (a, b) = window;
    if !(b > a) {
        return Err(Error::invalid("window", "empty window"));
    }
    let keep = |t: f64| excluded0 <= 0.0 || t.abs() >= excluded0;
    let h = (b - a) / (DISTANCE_GRID - 1) as f64;
    let mut ks = 0.0f64;
    let mut w1 = 0.0;
    let mut prev: Option<f64> = None;
    let mut kept = 0;
    for k in 0..DISTANCE_GRID {
        let t = a + k as f64 * h;
        if !keep(t) {
            prev = None;
            continue;
        }
        kept += 1;
        let diff = (f(t) - g(t)).abs();
        ks = ks.max(diff);
        if let Some(p) = prev {
            w1 += 0.5 * h * (p + diff);
        }
        prev = Some(diff);
    }
    if kept == 0 {
        return Err(Error::invalid("window", "no grid point outside the excluded set"));
    }
    Ok(DistanceReport {
        ks: ks.min(1.0),
        w1_window: w1,
        window,
        excluded_neighborhood: (excluded0 > 0.0).then_some(excluded0),
    })
}

/// Distance between an empirical spectrum and a theoretical CDF.
pub fn distribution_distance<G>(
    empirical: &EmpiricalSpectrum,
    theory_cdf: G,
    window: (f64, f64),
    excluded0: f64,
) -> Result<DistanceReport>
where
    G: Fn(f64) -> f64,
{
    cdf_distance(|t| empirical.cdf(t), theory_cdf, window, excluded0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_involution() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let ev = eigenvalues_symmetric(&m).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_matrix() {
        let m = Matrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        assert_eq!(eigenvalues_symmetric(&m).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn trivial_sizes() {
        assert!(eigenvalues_symmetric(&Matrix::zeros(0, 0)).unwrap().is_empty());
        let one = Matrix::from_rows(&[vec![4.0]]);
        assert_eq!(eigenvalues_symmetric(&one).unwrap(), vec![4.0]);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(eigenvalues_symmetric(&m).is_err());
    }

    #[test]
    fn cdf_basics() {
        let s = EmpiricalSpectrum::new(vec![1.0, -1.0], 0, "t");
        assert_eq!(s.cdf(0.0), 0.5);
        assert_eq!(s.cdf(-5.0), 0.0);
        assert_eq!(s.cdf(5.0), 1.0);
        assert_eq!(s.cdf(1.0), 1.0);
    }

    #[test]
    fn point_masses_are_at_distance_one() {
        let a = EmpiricalSpectrum::new(vec![0.0], 0, "a");
        let b = EmpiricalSpectrum::new(vec![1.0], 0, "b");
        let r = distribution_distance(&a, |t| b.cdf(t), (-2.0, 2.0), 0.0).unwrap();
        assert_eq!(r.ks, 1.0);
        let same = distribution_distance(&a, |t| a.cdf(t), (-2.0, 2.0), 0.0).unwrap();
        assert_eq!((same.ks, same.w1_window), (0.0, 0.0));
        assert!(distribution_distance(&a, |t| a.cdf(t), (1.0, 1.0), 0.0).is_err());
    }
}
