//! Variance profiles, diagonal laws and the finite-size ensembles built from
//! them.

use crate::error::{Error, Result};
use crate::sampling::{normalizer_a_n, sample_entry, RngStreamSpec, StableTailLaw};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Exact symmetry check.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::invalid("matrix", "inner dimensions differ"));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for (d, b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `X X^t`, filling only what symmetry needs.
    pub fn gram_rows(&self) -> Matrix {
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..=i {
                let v: f64 = ri.iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }
}

/// The variance profile `σ(x, y)` on `[0,1]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SigmaProfile {
    Constant {
        c: f64,
    },
    /// `σ(x,y) = matrix[r][s]` for `x ∈ (b_{r-1}, b_r]`, `y ∈ (b_{s-1}, b_s]`.
    Piecewise {
        breaks: Vec<f64>,
        matrix: Vec<Vec<f64>>,
    },
    /// `σ(x,y) = φ(x - y)` with `φ` even, period one, and equal to
    /// `values[k]` on `(breakpoints[k], breakpoints[k+1])`.
    Band {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Piecewise constant on a uniform `resolution × resolution` grid.
    Grid {
        resolution: usize,
        values: Vec<Vec<f64>>,
    },
}

/// Discretized coupling of the band fixed-point system:
/// `weights[r][s] = |σ_rs|^α Δ_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub delta: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

impl Coupling {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// `max_r Σ_s weights[r][s]`.
    pub fn max_row_sum(&self) -> f64 {
        self.weights
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    pub fn is_symmetric_in_rows(&self) -> bool {
        let q = self.len();
        (0..q).all(|r| {
            (0..q).all(|s| {
                let a = self.weights[r][s] * self.delta[r];
                let b = self.weights[s][r] * self.delta[s];
                (a - b).abs() <= 1e-14 * (1.0 + a.abs())
            })
        })
    }
}

/// Default number of blocks used to discretize a band profile.
pub const DEFAULT_BAND_BLOCKS: usize = 32;

fn check_breaks(name: &'static str, b: &[f64]) -> Result<()> {
    if b.len() < 2 {
        return Err(Error::invalid(name, "need at least two break points"));
    }
    if b[0] != 0.0 || *b.last().unwrap() != 1.0 {
        return Err(Error::invalid(name, "must start at 0 and end at 1"));
    }
    if b.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(name, "must be strictly increasing"));
    }
    Ok(())
}

fn check_square_symmetric(name: &'static str, m: &[Vec<f64>], q: usize) -> Result<()> {
    if m.len() != q || m.iter().any(|r| r.len() != q) {
        return Err(Error::invalid(name, format!("must be {q}×{q}")));
    }
    for r in 0..q {
        for s in 0..q {
            if !m[r][s].is_finite() {
                return Err(Error::invalid(name, "entries must be finite"));
            }
            if m[r][s] != m[s][r] {
                return Err(Error::invalid(name, "must be symmetric"));
            }
        }
    }
    Ok(())
}

/// Index `r` with `x ∈ (b_r, b_{r+1}]`, and `0` for `x ≤ b_0`.
fn block_of(breaks: &[f64], x: f64) -> usize {
    let q = breaks.len() - 1;
    let k = breaks.partition_point(|&b| b < x);
    k.saturating_sub(1).min(q - 1)
}

impl SigmaProfile {
    pub fn constant(c: f64) -> Self {
        SigmaProfile::Constant { c }
    }

    /// Block profile of the covariance embedding with aspect ratio `γ`:
    /// zero diagonal blocks, unit off-diagonal blocks, sizes `1/(1+γ)` and
    /// `γ/(1+γ)`.
    pub fn covariance(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid("gamma", format!("{gamma} is not in (0, 1]")));
        }
        Ok(SigmaProfile::Piecewise {
            breaks: vec![0.0, 1.0 / (1.0 + gamma), 1.0],
            matrix: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        })
    }

    /// Band profile from an indicator `φ = 1_{|x| ≤ b}`, `0 < b < 1/2`.
    pub fn band_indicator(b: f64) -> Result<Self> {
        if !(b > 0.0 && b < 0.5) {
            return Err(Error::invalid("b", "must lie in (0, 1/2)"));
        }
        Ok(SigmaProfile::Band {
            breakpoints: vec![0.0, b, 1.0 - b, 1.0],
            values: vec![1.0, 0.0, 1.0],
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SigmaProfile::Constant { c } => {
                if !c.is_finite() {
                    return Err(Error::invalid("c", "must be finite"));
                }
            }
            SigmaProfile::Piecewise { breaks, matrix } => {
                check_breaks("breaks", breaks)?;
                check_square_symmetric("matrix", matrix, breaks.len() - 1)?;
            }
            SigmaProfile::Band {
                breakpoints,
                values,
            } => {
                check_breaks("breakpoints", breakpoints)?;
                let k = values.len();
                if k + 1 != breakpoints.len() {
                    return Err(Error::invalid("values", "need one value per interval"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("values", "must be finite"));
                }
                for i in 0..=k {
                    if (breakpoints[i] + breakpoints[k - i] - 1.0).abs() > 1e-12 {
                        return Err(Error::invalid("breakpoints", "φ must be even"));
                    }
                }
                for i in 0..k {
                    if values[i] != values[k - 1 - i] {
                        return Err(Error::invalid("values", "φ must be even"));
                    }
                }
            }
            SigmaProfile::Grid { resolution, values } => {
                if *resolution == 0 {
                    return Err(Error::invalid("resolution", "must be positive"));
                }
                check_square_symmetric("values", values, *resolution)?;
            }
        }
        Ok(())
    }

    /// `σ(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            SigmaProfile::Constant { c } => *c,
            SigmaProfile::Piecewise { breaks, matrix } => {
                matrix[block_of(breaks, x)][block_of(breaks, y)]
            }
            SigmaProfile::Band {
                breakpoints,
                values,
            } => {
                let u = (x - y).rem_euclid(1.0);
                values[block_of(breakpoints, u)]
            }
            SigmaProfile::Grid { resolution, values } => {
                let p = *resolution;
                let idx = |x: f64| (((x * p as f64).ceil() as usize).max(1) - 1).min(p - 1);
                values[idx(x)][idx(y)]
            }
        }
    }

    /// `k_σ = sup_x ∫ |σ(x,v)|^α dv`.
    pub fn k_sigma(&self, alpha: f64) -> f64 {
        match self {
            SigmaProfile::Constant { c } => c.abs().powf(alpha),
            SigmaProfile::Band {
                breakpoints,
                values,
            } => band_alpha_integral(breakpoints, values, alpha),
            _ => self
                .coupling(alpha, DEFAULT_BAND_BLOCKS)
                .map(|c| c.max_row_sum())
                .unwrap_or(f64::NAN),
        }
    }

    /// `∬ |σ|^α`.
    pub fn alpha_integral(&self, alpha: f64) -> f64 {
        match self {
            SigmaProfile::Constant { c } => c.abs().powf(alpha),
            SigmaProfile::Band {
                breakpoints,
                values,
            } => band_alpha_integral(breakpoints, values, alpha),
            _ => match self.coupling(alpha, DEFAULT_BAND_BLOCKS) {
                Ok(c) => (0..c.len())
                    .map(|r| c.delta[r] * c.weights[r].iter().sum::<f64>())
                    .sum(),
                Err(_) => f64::NAN,
            },
        }
    }

    /// Lattice seminorm `((1/N²) Σ_{i,j} σ(i/N, j/N)²)^{1/2}`.
    pub fn lattice_norm(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        let mut acc = 0.0;
        for i in 1..=n {
            for j in 1..=n {
                let s = self.eval(i as f64 / nf, j as f64 / nf);
                acc += s * s;
            }
        }
        (acc / (nf * nf)).sqrt()
    }

    /// Block coupling `|σ_rs|^α Δ_s` of the fixed-point system. Band
    /// profiles are averaged over `band_blocks` equal blocks.
    pub fn coupling(&self, alpha: f64, band_blocks: usize) -> Result<Coupling> {
        self.validate()?;
        let from_blocks = |breaks: &[f64], m: &[Vec<f64>]| {
            let q = breaks.len() - 1;
            let delta: Vec<f64> = breaks.windows(2).map(|w| w[1] - w[0]).collect();
            let weights = (0..q)
                .map(|r| (0..q).map(|s| m[r][s].abs().powf(alpha) * delta[s]).collect())
                .collect();
            Coupling { delta, weights }
        };
        Ok(match self {
            SigmaProfile::Constant { c } => Coupling {
                delta: vec![1.0],
                weights: vec![vec![c.abs().powf(alpha)]],
            },
            SigmaProfile::Piecewise { breaks, matrix } => from_blocks(breaks, matrix),
            SigmaProfile::Grid { resolution, values } => {
                let p = *resolution;
                let breaks: Vec<f64> = (0..=p).map(|k| k as f64 / p as f64).collect();
                from_blocks(&breaks, values)
            }
            SigmaProfile::Band {
                breakpoints,
                values,
            } => {
                if band_blocks == 0 {
                    return Err(Error::invalid("band_blocks", "must be positive"));
                }
                let q = band_blocks;
                let h = 1.0 / q as f64;
                let psi: Vec<f64> = values.iter().map(|v| v.abs().powf(alpha)).collect();
                let by_offset: Vec<f64> = (0..q)
                    .map(|d| tent_average(breakpoints, &psi, d as f64 * h, h) / h)
                    .collect();
                let weights = (0..q)
                    .map(|r| {
                        (0..q)
                            .map(|s| by_offset[(r + q - s) % q])
                            .collect::<Vec<f64>>()
                    })
                    .collect();
                Coupling {
                    delta: vec![h; q],
                    weights,
                }
            }
        })
    }
}

fn band_alpha_integral(breakpoints: &[f64], values: &[f64], alpha: f64) -> f64 {
    breakpoints
        .windows(2)
        .zip(values)
        .map(|(w, v)| (w[1] - w[0]) * v.abs().powf(alpha))
        .sum()
}

/// `∫_{-h}^{h} (h - |u|) ψ(d + u) du` for a period-one step function `ψ`.
fn tent_average(breakpoints: &[f64], psi: &[f64], d: f64, h: f64) -> f64 {
    // Antiderivative of the tent weight.
    let tent_primitive = |u: f64| {
        if u <= 0.0 {
            h * u + 0.5 * u * u
        } else {
            h * u - 0.5 * u * u
        }
    };
    let mut cuts = vec![-h, h];
    let lo = (d - h).floor() as i64;
    let hi = (d + h).ceil() as i64;
    for period in lo..=hi {
        for &b in breakpoints {
            let u = period as f64 + b - d;
            if u > -h && u < h {
                cuts.push(u);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = (d + 0.5 * (a + b)).rem_euclid(1.0);
        let v = psi[block_of(breakpoints, mid)];
        acc += v * (tent_primitive(b) - tent_primitive(a));
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileNorms {
    pub k_sigma: f64,
    pub lattice_norm: f64,
}

pub fn profile_alpha_norm(profile: &SigmaProfile, alpha: f64, n: usize) -> Result<ProfileNorms> {
    profile.validate()?;
    Ok(ProfileNorms {
        k_sigma: profile.k_sigma(alpha),
        lattice_norm: profile.lattice_norm(n),
    })
}

/// `σ̃ = (∫_0^1 |φ|^α)^{1/α}` for a band profile.
pub fn equivalent_constant(profile: &SigmaProfile, alpha: f64) -> Result<SigmaProfile> {
    profile.validate()?;
    match profile {
        SigmaProfile::Band {
            breakpoints,
            values,
        } => Ok(SigmaProfile::Constant {
            c: band_alpha_integral(breakpoints, values, alpha).powf(1.0 / alpha),
        }),
        _ => Err(Error::invalid("profile", "equivalent constant needs a band profile")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lambda: f64,
    pub w: f64,
}

/// Finitely supported law of the diagonal perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalLaw {
    pub atoms: Vec<Atom>,
}

impl DiagonalLaw {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let law = Self { atoms };
        law.validate()?;
        Ok(law)
    }

    pub fn dirac(lambda: f64) -> Self {
        Self {
            atoms: vec![Atom { lambda, w: 1.0 }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::invalid("atoms", "need at least one atom"));
        }
        if self
            .atoms
            .iter()
            .any(|a| !(a.w > 0.0) || !a.lambda.is_finite())
        {
            return Err(Error::invalid("atoms", "weights must be positive, locations finite"));
        }
        let total: f64 = self.atoms.iter().map(|a| a.w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("atoms", format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.w * a.lambda * a.lambda).sum()
    }

    /// True when the law is invariant under `λ -> -λ`.
    pub fn is_symmetric(&self) -> bool {
        let mass = |l: f64| {
            self.atoms
                .iter()
                .filter(|b| b.lambda == l)
                .map(|b| b.w)
                .sum::<f64>()
        };
        self.atoms
            .iter()
            .all(|a| (mass(a.lambda) - mass(-a.lambda)).abs() <= 1e-12)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.gen();
        for a in &self.atoms {
            if u < a.w {
                return a.lambda;
            }
            u -= a.w;
        }
        self.atoms.last().unwrap().lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    None,
    /// Keep `x` only when `|x| < B a_N`.
    FixedB { b: f64 },
    /// Keep `x` only when `|x| < N^κ a_N`.
    PolynomialKappa { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub law: StableTailLaw,
    pub profile: SigmaProfile,
    pub truncation: Truncation,
    pub diagonal: Option<DiagonalLaw>,
    pub seed: RngStreamSpec,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        self.law.validate()?;
        self.profile.validate()?;
        match self.truncation {
            Truncation::None => {}
            Truncation::FixedB { b } => {
                if !(b > 0.0) {
                    return Err(Error::invalid("B", "must be positive"));
                }
            }
            Truncation::PolynomialKappa { kappa } => {
                let top = 1.0 / (2.0 * (2.0 - self.law.alpha));
                if !(kappa > 0.0 && kappa < top) {
                    return Err(Error::invalid("kappa", format!("must lie in (0, {top})")));
                }
            }
        }
        if let Some(d) = &self.diagonal {
            d.validate()?;
        }
        Ok(())
    }

    /// Entry cut-off in units of the raw draws, if any.
    pub fn cutoff(&self, a_n: f64) -> f64 {
        match self.truncation {
            Truncation::None => f64::INFINITY,
            Truncation::FixedB { b } => b * a_n,
            Truncation::PolynomialKappa { kappa } => (self.n as f64).powf(kappa) * a_n,
        }
    }
}

/// Band matrix with entries supplied by `draw` in the order `i ≤ j`, row by
/// row; the diagonal perturbation, if any, is supplied by `diag`.
pub fn assemble_band_matrix<F, D>(spec: &EnsembleSpec, mut draw: F, mut diag: D) -> Result<Matrix>
where
    F: FnMut() -> f64,
    D: FnMut() -> f64,
{
    spec.validate()?;
    let n = spec.n;
    let a_n = normalizer_a_n(&spec.law, n)?;
    let cutoff = spec.cutoff(a_n);
    let nf = n as f64;
    let sigma: Vec<Vec<f64>> = match &spec.profile {
        SigmaProfile::Band { .. } => Vec::new(),
        p => (1..=n)
            .map(|i| (1..=n).map(|j| p.eval(i as f64 / nf, j as f64 / nf)).collect())
            .collect(),
    };
    let sig = |i: usize, j: usize| -> f64 {
        if sigma.is_empty() {
            spec.profile.eval((i + 1) as f64 / nf, (j + 1) as f64 / nf)
        } else {
            sigma[i][j]
        }
    };
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x = draw();
            let x = if x.abs() < cutoff { x } else { 0.0 };
            let v = sig(i, j) * x / a_n;
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    if spec.diagonal.is_some() {
        for k in 0..n {
            let d = diag();
            m.set(k, k, m.get(k, k) + d);
        }
    }
    Ok(m)
}

/// `A_N^σ = a_N^{-1} (σ(i/N, j/N) x_ij)` drawn from the spec's stream.
pub fn build_band_matrix(spec: &EnsembleSpec) -> Result<Matrix> {
    let mut rng = spec.seed.rng();
    let mut rng_diag = spec.seed.rng();
    rng_diag.set_word_pos(1u128 << 64);
    let law = spec.law;
    let diag_law = spec.diagonal.clone();
    assemble_band_matrix(
        spec,
        || sample_entry(&law, &mut rng),
        || diag_law.as_ref().map_or(0.0, |d| d.sample(&mut rng_diag)),
    )
}

/// `N × M` matrix of i.i.d. draws, row by row.
pub fn sample_rectangular(law: &StableTailLaw, n: usize, m: usize, seed: RngStreamSpec) -> Matrix {
    let mut rng = seed.rng();
    let mut x = Matrix::zeros(n, m);
    for v in x.data.iter_mut() {
        *v = sample_entry(law, &mut rng);
    }
    x
}

/// `W = X X^t / a_{N+M}^2` for a given `X`.
pub fn covariance_from(law: &StableTailLaw, x: &Matrix) -> Result<Matrix> {
    let a = normalizer_a_n(law, x.rows + x.cols)?;
    let mut w = x.gram_rows();
    for v in w.data.iter_mut() {
        *v /= a * a;
    }
    Ok(w)
}

pub fn build_covariance_matrix(
    law: &StableTailLaw,
    n: usize,
    m: usize,
    seed: RngStreamSpec,
) -> Result<Matrix> {
    law.validate()?;
    if m == 0 || m > n {
        return Err(Error::invalid("M", format!("need 1 ≤ M ≤ N, got M = {m}, N = {n}")));
    }
    covariance_from(law, &sample_rectangular(law, n, m, seed))
}

/// `[[0, sX], [sX^t, 0]]`.
pub fn block_embed(x: &Matrix, scale: f64) -> Matrix {
    let (n, m) = (x.rows, x.cols);
    let mut out = Matrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..m {
            let v = scale * x.get(i, j);
            out.set(i, n + j, v);
            out.set(n + j, i, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::TailFamily;

    fn spec(n: usize, profile: SigmaProfile) -> EnsembleSpec {
        EnsembleSpec {
            n,
            law: StableTailLaw::new(1.0, TailFamily::SymmetricPareto, 1.0).unwrap(),
            profile,
            truncation: Truncation::None,
            diagonal: None,
            seed: RngStreamSpec::new(1, 0),
        }
    }

    #[test]
    fn two_by_two_forced() {
        let s = spec(2, SigmaProfile::constant(1.0));
        let mut draws = [1.0, 2.0, 3.0].into_iter();
        let m = assemble_band_matrix(&s, || draws.next().unwrap(), || 0.0).unwrap();
        assert_eq!(m.data, vec![0.5, 1.0, 1.0, 1.5]);
    }

    #[test]
    fn zero_profile_gives_zero_matrix() {
        let m = build_band_matrix(&spec(7, SigmaProfile::constant(0.0))).unwrap();
        assert!(m.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_scalar() {
        let law = StableTailLaw::pareto(1.0).unwrap();
        let x = Matrix::from_rows(&[vec![2.0]]);
        let w = covariance_from(&law, &x).unwrap();
        assert_eq!(w.data, vec![1.0]);
    }

    #[test]
    fn embed_two_by_two() {
        let e = block_embed(&Matrix::from_rows(&[vec![1.0]]), 0.5);
        assert_eq!(e.data, vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn band_integrals() {
        let p = SigmaProfile::band_indicator(0.25).unwrap();
        assert!((p.k_sigma(1.3) - 0.5).abs() < 1e-15);
        let c = equivalent_constant(&p, 1.0).unwrap();
        assert_eq!(c, SigmaProfile::Constant { c: 0.5 });
        let one = SigmaProfile::Band {
            breakpoints: vec![0.0, 1.0],
            values: vec![1.0],
        };
        assert_eq!(equivalent_constant(&one, 1.5).unwrap(), SigmaProfile::Constant { c: 1.0 });
        assert!(equivalent_constant(&SigmaProfile::constant(1.0), 1.0).is_err());
    }

    #[test]
    fn band_coupling_rows_sum_to_integral() {
        let p = SigmaProfile::band_indicator(0.25).unwrap();
        for q in [1, 3, 8, 32, 37] {
            let c = p.coupling(1.5, q).unwrap();
            for row in &c.weights {
                let s: f64 = row.iter().sum();
                assert!((s - 0.5).abs() < 1e-13, "q = {q}: {s}");
            }
        }
    }

    #[test]
    fn covariance_profile_norms() {
        for gamma in [0.3, 0.5, 1.0] {
            let p = SigmaProfile::covariance(gamma).unwrap();
            let want = gamma.max(1.0) / (1.0 + gamma);
            assert!((p.k_sigma(1.2) - want).abs() < 1e-15);
            let area = 2.0 * gamma / (1.0 + gamma).powi(2);
            assert!((p.alpha_integral(1.2) - area).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_norms() {
        let n = profile_alpha_norm(&SigmaProfile::constant(-2.0), 1.5, 10).unwrap();
        assert!((n.k_sigma - 2f64.powf(1.5)).abs() < 1e-14);
        assert!((n.lattice_norm - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_profiles() {
        let asym = SigmaProfile::Piecewise {
            breaks: vec![0.0, 0.5, 1.0],
            matrix: vec![vec![1.0, 2.0], vec![3.0, 1.0]],
        };
        assert!(asym.validate().is_err());
        let odd = SigmaProfile::Band {
            breakpoints: vec![0.0, 0.3, 1.0],
            values: vec![1.0, 0.0],
        };
        assert!(odd.validate().is_err());
        assert!(SigmaProfile::covariance(1.5).is_err());
    }

    #[test]
    fn diagonal_law_validation() {
        assert!(DiagonalLaw::new(vec![Atom { lambda: 0.0, w: 0.4 }]).is_err());
        let d = DiagonalLaw::new(vec![
            Atom { lambda: -1.0, w: 0.5 },
            Atom { lambda: 1.0, w: 0.5 },
        ])
        .unwrap();
        assert!(d.is_symmetric());
        assert_eq!(d.second_moment(), 1.0);
        assert!(!DiagonalLaw::dirac(1.0).is_symmetric());
    }

    #[test]
    fn profile_json_round_trip() {
        let text = r#"{"type":"piecewise","breaks":[0,0.5,1],"matrix":[[1,2],[2,1]]}"#;
        let p: SigmaProfile = serde_json::from_str(text).unwrap();
        assert!(p.validate().is_ok());
        let back: SigmaProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);
        let d: DiagonalLaw =
            serde_json::from_str(r#"{"atoms":[{"lambda":-1,"w":0.5},{"lambda":1,"w":0.5}]}"#)
                .unwrap();
        assert!(d.validate().is_ok());
    }
}
