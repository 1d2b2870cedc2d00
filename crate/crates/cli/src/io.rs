//! File formats: density CSV with JSON sidecar, eigenvalue CSV with campaign
//! JSON, config echoes and gnuplot scripts.

use crate::CliError;
use htspectra::density::{DensityCurve, Model};
use htspectra::eig::EmpiricalSpectrum;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySidecar {
    pub alpha: f64,
    #[serde(flatten)]
    pub model: Model,
    pub atom_at_zero: f64,
    pub tail_constant: f64,
    /// Atom, grid integral and tail closures; absent for point evaluations.
    pub mass_check: Option<f64>,
    pub eps_floor: f64,
    /// Points whose continuation broke down before the smallest `ε`.
    pub degraded: usize,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_string(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    write_string(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Format(format!("{}:{}: {e}", path.display(), e.line()))
    })
}

pub fn write_density_csv(path: &Path, rows: &[(f64, f64)]) -> Result<(), CliError> {
    let mut text = String::from("t,rho\n");
    for (t, r) in rows {
        text.push_str(&format!("{},{}\n", fmt17(*t), fmt17(*r)));
    }
    write_string(path, &text)
}

pub fn write_eigenvalue_csv(path: &Path, trials: &[EmpiricalSpectrum]) -> Result<(), CliError> {
    let mut text = String::from("trial,lambda\n");
    for s in trials {
        for v in &s.eigenvalues {
            text.push_str(&format!("{},{}\n", s.trial_id, fmt17(*v)));
        }
    }
    write_string(path, &text)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let found = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(CliError::Format(format!(
            "{}:1: expected header `{}`",
            path.display(),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec.map_err(|e: csv::Error| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Format(format!("{}:{line}: {e}", path.display()))
        })?);
    }
    Ok(rows)
}

pub fn read_density_csv(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    read_rows(path, &["t", "rho"])
}

/// Trials in ascending id order, each with its eigenvalues sorted.
pub fn read_eigenvalue_csv(path: &Path) -> Result<Vec<EmpiricalSpectrum>, CliError> {
    let rows: Vec<(u64, f64)> = read_rows(path, &["trial", "lambda"])?;
    let mut trials: Vec<(u64, Vec<f64>)> = Vec::new();
    for (k, v) in rows {
        match trials.iter_mut().find(|t| t.0 == k) {
            Some(t) => t.1.push(v),
            None => trials.push((k, vec![v])),
        }
    }
    trials.sort_by_key(|t| t.0);
    Ok(trials
        .into_iter()
        .map(|(k, v)| EmpiricalSpectrum::new(v, k, "csv"))
        .collect())
}

/// Density curve rebuilt from a CSV and its sidecar.
pub fn read_theory(path: &Path) -> Result<DensityCurve, CliError> {
    let side: DensitySidecar = read_json(&sidecar_path(path))?;
    let mut rows = read_density_csv(path)?;
    if rows.len() < 2 {
        return Err(CliError::Format(format!("{}: need at least two rows", path.display())));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut curve = DensityCurve {
        alpha: side.alpha,
        model: side.model,
        grid: rows.iter().map(|r| r.0).collect(),
        rho: rows.iter().map(|r| r.1.max(0.0)).collect(),
        atom_at_zero: side.atom_at_zero,
        tail_constant: side.tail_constant,
        tail_constant_estimate: f64::NAN,
        tail_discrepancy: f64::NAN,
        mass_check: 0.0,
        eps_floor: side.eps_floor,
        degraded: Vec::new(),
    };
    curve.mass_check = curve.cdf().total_mass();
    Ok(curve)
}

pub fn density_plot_script(csv_name: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key top right\n\
         set xlabel 't'\n\
         set ylabel 'density'\n\
         set title '{title}'\n\
         plot '{csv_name}' every ::1 using 1:2 with lines lw 2 title 'rho(t)'\n"
    )
}

pub fn histogram_plot_script(csv_name: &str, window: (f64, f64), count: usize) -> String {
    let bins = 200;
    let width = (window.1 - window.0) / bins as f64;
    format!(
        "set datafile separator ','\n\
         set xrange [{a}:{b}]\n\
         set xlabel 'lambda'\n\
         set ylabel 'density'\n\
         width = {width}\n\
         bin(x) = width * floor(x / width) + width / 2\n\
         set style fill solid 0.5\n\
         plot '{csv_name}' every ::1 using (bin($2)):(1.0 / ({count} * width)) smooth frequency with boxes title 'eigenvalues'\n",
        a = window.0,
        b = window.1
    )
}
