use crate::args::{
    Cli, Command, CompareArgs, CriticalSetArgs, LawKind, ModelArgs, ModelKind, SelftestArgs, SimulateArgs,
    TheoryArgs,
};
use crate::io::{self, DensitySidecar};
use crate::CliError;
use htspectra::acceptance::{run_criterion, Scale, CRITERIA};
use htspectra::density::{
    atom_at_zero_wishart, build_density_curve, density_point, DensityConfig, DensityCurve, GridSpec, Model,
    Quality,
};
use htspectra::eig::{distribution_distance, DistanceReport, EmpiricalSpectrum};
use htspectra::matrices::{DiagonalLaw, EnsembleSpec, SigmaProfile, Truncation};
use htspectra::montecarlo::{positive_part, run_campaign, CampaignReport, CampaignSpec, Ensemble};
use htspectra::sampling::{RngStreamSpec, StableTailLaw};
use htspectra::solver::{find_critical_set, FixedPointConfig, FixedPointSystem, SearchBox};
use htspectra::special_fn::AlphaParam;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads", "must be at least 1"));
        }
        // A pool configured earlier in the same process is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    let out = cli.out.as_path();
    let name = match &cli.command {
        Command::Theory(_) => "theory",
        Command::Simulate(_) => "simulate",
        Command::Compare(_) => "compare",
        Command::CriticalSet(_) => "critical_set",
        Command::Selftest(_) => "selftest",
    };
    io::write_json(&out.join(format!("{name}.config.json")), cli)?;
    match &cli.command {
        Command::Theory(a) => theory(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Compare(a) => compare(a, out),
        Command::CriticalSet(a) => critical_set(a, out),
        Command::Selftest(a) => selftest(a),
    }
}

fn json_arg<T: for<'de> Deserialize<'de>>(flag: &str, value: &str) -> Result<T, CliError> {
    let text = if value.trim_start().starts_with('{') {
        value.to_string()
    } else {
        fs::read_to_string(value).map_err(|e| CliError::config(flag, format!("{value}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::config(flag, e.to_string()))
}

pub fn resolve_model(m: &ModelArgs) -> Result<(AlphaParam, Model), CliError> {
    let a = AlphaParam::new(m.alpha).map_err(|_| {
        CliError::config("--alpha", format!("{} is not in (0, 2]", m.alpha))
    })?;
    let wishart = m.model == ModelKind::Wishart;
    if m.gamma.is_some() && !wishart {
        return Err(CliError::config("--gamma", "only valid with --model wishart"));
    }
    if m.profile.is_some() && !matches!(m.model, ModelKind::Band | ModelKind::Perturbed) {
        return Err(CliError::config("--profile", "only valid with --model band or perturbed"));
    }
    if m.diag.is_some() && m.model != ModelKind::Perturbed {
        return Err(CliError::config("--diag", "only valid with --model perturbed"));
    }
    let profile = |required: bool| -> Result<SigmaProfile, CliError> {
        match &m.profile {
            Some(p) => json_arg("--profile", p),
            None if required => Err(CliError::config("--profile", "required with --model band")),
            None => Ok(SigmaProfile::constant(1.0)),
        }
    };
    let model = match m.model {
        ModelKind::Wigner => Model::Wigner,
        ModelKind::Band => Model::Band { profile: profile(true)? },
        ModelKind::Wishart => Model::Wishart {
            gamma: m
                .gamma
                .ok_or_else(|| CliError::config("--gamma", "required with --model wishart"))?,
        },
        ModelKind::Perturbed => {
            let diag: DiagonalLaw = match &m.diag {
                Some(d) => json_arg("--diag", d)?,
                None => return Err(CliError::config("--diag", "required with --model perturbed")),
            };
            Model::Perturbed {
                profile: profile(false)?,
                diag,
            }
        }
    };
    model.validate()?;
    Ok((a, model))
}

/// Densities at `ts`, skipping the points where the solve fails.
fn pointwise(
    sys: &FixedPointSystem,
    model: &Model,
    ts: &[f64],
    cfg: &DensityConfig,
) -> (Vec<(f64, f64)>, usize, Vec<String>) {
    let results: Vec<_> = ts.par_iter().map(|&t| (t, density_point(sys, model, t, cfg))).collect();
    let mut rows = Vec::new();
    let mut degraded = 0;
    let mut failures = Vec::new();
    for (t, r) in results {
        match r {
            Ok(p) => {
                degraded += (p.quality == Quality::Degraded) as usize;
                rows.push((t, p.rho.max(0.0)));
            }
            Err(e) => failures.push(format!("t = {t}: {e}")),
        }
    }
    (rows, degraded, failures)
}

fn theory(args: &TheoryArgs, out: &Path) -> Result<(), CliError> {
    let (a, model) = resolve_model(&args.model)?;
    let cfg = DensityConfig {
        eps_floor: args.eps_floor,
        ..Default::default()
    };
    cfg.validate()?;
    if let Some(t) = args.t.iter().find(|t| !t.is_finite()) {
        return Err(CliError::config("--t", format!("{t} is not finite")));
    }
    let grid = GridSpec {
        t_min: args.t_min,
        t_max: args.t_max,
        points: args.points,
    };
    if args.t.is_empty() {
        grid.validate()?;
    }
    let csv = out.join("density.csv");
    let title = format!("{} density, alpha = {}", model.name(), a.value());
    io::write_string(&out.join("density.plt"), &io::density_plot_script("density.csv", &title))?;
    let sys = model.system(&a, cfg.fixed_point.band_blocks)?;
    let sidecar = |atom: f64, mass: Option<f64>, degraded: usize| DensitySidecar {
        alpha: a.value(),
        model: model.clone(),
        atom_at_zero: atom,
        tail_constant: htspectra::density::tail_constant(&a, &model),
        mass_check: mass,
        eps_floor: cfg.eps_floor,
        degraded,
    };

    let curve = if args.t.is_empty() {
        match build_density_curve(&a, &model, &grid, &cfg) {
            Ok(c) => Some(c),
            Err(e) => {
                let mut ts = grid.positive();
                if !matches!(model, Model::Wishart { .. }) {
                    ts.extend(grid.positive().iter().map(|t| -t));
                }
                ts.sort_by(f64::total_cmp);
                let (rows, degraded, _) = pointwise(&sys, &model, &ts, &cfg);
                io::write_density_csv(&csv, &rows)?;
                io::write_json(&io::sidecar_path(&csv), &sidecar(f64::NAN, None, degraded))?;
                return Err(CliError::from(e));
            }
        }
    } else {
        None
    };

    let atom = match model {
        Model::Wishart { gamma } if gamma < 1.0 => atom_at_zero_wishart(&a, gamma, &cfg.fixed_point),
        _ => Ok(0.0),
    };
    match curve {
        Some(c) => {
            let rows: Vec<(f64, f64)> = c.grid.iter().copied().zip(c.rho.iter().copied()).collect();
            io::write_density_csv(&csv, &rows)?;
            io::write_json(
                &io::sidecar_path(&csv),
                &sidecar(c.atom_at_zero, Some(c.mass_check), c.degraded.len()),
            )?;
            report_curve(&c);
            Ok(())
        }
        None => {
            let (rows, degraded, failures) = pointwise(&sys, &model, &args.t, &cfg);
            io::write_density_csv(&csv, &rows)?;
            let atom_value = atom.as_ref().copied().unwrap_or(f64::NAN);
            io::write_json(&io::sidecar_path(&csv), &sidecar(atom_value, None, degraded))?;
            for (t, r) in &rows {
                println!("{} {}", io::fmt17(*t), io::fmt17(*r));
            }
            if degraded > 0 {
                eprintln!("warning: {degraded} point(s) stopped short of the smallest eps");
            }
            atom?;
            if !failures.is_empty() {
                return Err(CliError::Numerical(failures.join("; ")));
            }
            Ok(())
        }
    }
}

fn report_curve(c: &DensityCurve) {
    println!(
        "{} points, atom at zero {:.6}, tail constant {:.6} (estimate {:.6}), mass {:.6}",
        c.grid.len(),
        c.atom_at_zero,
        c.tail_constant,
        c.tail_constant_estimate,
        c.mass_check
    );
    if !c.degraded.is_empty() {
        eprintln!("warning: {} point(s) stopped short of the smallest eps", c.degraded.len());
    }
    if !(0.98..=1.02).contains(&c.mass_check) {
        eprintln!("warning: total mass {:.4} is outside [0.98, 1.02]", c.mass_check);
    }
}

fn ensemble_for(args: &SimulateArgs, a: &AlphaParam, model: &Model) -> Result<Ensemble, CliError> {
    let seed = RngStreamSpec::new(args.seed, 0);
    if a.is_two_mode() {
        return match model {
            Model::Wigner => Ok(Ensemble::Bernoulli { n: args.n, seed }),
            _ => Err(CliError::config("--alpha", "alpha = 2 is only simulated for --model wigner")),
        };
    }
    let law = match args.law {
        LawKind::Pareto => StableTailLaw::pareto(a.value()),
        LawKind::Stable => StableTailLaw::stable(a.value()),
    }?;
    Ok(match model {
        Model::Wishart { gamma } => {
            let m = args.m.unwrap_or_else(|| (gamma * args.n as f64).round() as usize);
            Ensemble::Covariance {
                law,
                n: args.n,
                m,
                seed,
            }
        }
        Model::Wigner | Model::Band { .. } | Model::Perturbed { .. } => {
            let (profile, diagonal) = match model {
                Model::Band { profile } => (profile.clone(), None),
                Model::Perturbed { profile, diag } => (profile.clone(), Some(diag.clone())),
                _ => (SigmaProfile::constant(1.0), None),
            };
            Ensemble::Band(EnsembleSpec {
                n: args.n,
                law,
                profile,
                truncation: Truncation::None,
                diagonal,
                seed,
            })
        }
    })
}

fn simulate(args: &SimulateArgs, out: &Path) -> Result<(), CliError> {
    let mut margs = args.model.clone();
    if margs.model == ModelKind::Wishart && margs.gamma.is_none() {
        if let Some(m) = args.m {
            margs.gamma = Some(m as f64 / args.n.max(1) as f64);
        }
    }
    if args.m.is_some() && margs.model != ModelKind::Wishart {
        return Err(CliError::config("--m", "only valid with --model wishart"));
    }
    let (a, model) = resolve_model(&margs)?;
    let spec = CampaignSpec {
        ensemble: ensemble_for(args, &a, &model)?,
        trials: args.trials,
        comparison: None,
    };
    spec.validate()?;
    let outcome = run_campaign(&spec, None::<fn(f64) -> f64>, 0.0)?;
    let csv = out.join("eigenvalues.csv");
    io::write_eigenvalue_csv(&csv, &outcome.trials)?;
    io::write_json(&io::sidecar_path(&csv), &outcome.report)?;
    let window = match model {
        Model::Wishart { .. } => (0.0, 20.0),
        _ => (-10.0, 10.0),
    };
    io::write_string(
        &out.join("eigenvalues.plt"),
        &io::histogram_plot_script("eigenvalues.csv", window, outcome.pooled.n),
    )?;
    println!(
        "{} trials of size {}, {} eigenvalues, near-zero fraction {:.4}, {:.1} s",
        outcome.trials.len(),
        outcome.trials.first().map_or(0, |s| s.n),
        outcome.pooled.n,
        outcome.report.near_zero_fraction,
        outcome.report.runtime_seconds
    );
    if outcome.report.aborted_trials > 0 {
        eprintln!("warning: {} trial(s) aborted", outcome.report.aborted_trials);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub theory: String,
    pub eigenvalues: String,
    pub alpha: f64,
    pub model: String,
    pub trials: usize,
    pub samples: usize,
    /// Only eigenvalues above the numerical-zero threshold were compared,
    /// against the theory conditioned on `(0, ∞)`.
    pub positive_part: bool,
    pub near_zero_fraction: f64,
    pub atom_at_zero: f64,
    pub per_trial_ks: Vec<f64>,
    pub pooled: DistanceReport,
    pub warnings: Vec<String>,
}

fn ensemble_alpha(report: &CampaignReport) -> f64 {
    match &report.spec.ensemble {
        Ensemble::Band(s) => s.law.alpha,
        Ensemble::Covariance { law, .. } => law.alpha,
        Ensemble::Bernoulli { .. } => 2.0,
    }
}

fn compare(args: &CompareArgs, out: &Path) -> Result<(), CliError> {
    let curve = io::read_theory(&args.theory)?;
    let trials = io::read_eigenvalue_csv(&args.eigenvalues)?;
    if trials.is_empty() {
        return Err(CliError::Format(format!("{}: no eigenvalues", args.eigenvalues.display())));
    }
    let mut warnings = Vec::new();
    let campaign = io::sidecar_path(&args.eigenvalues);
    if campaign.exists() {
        let report: CampaignReport = io::read_json(&campaign)?;
        let sim = ensemble_alpha(&report);
        if sim != curve.alpha {
            warnings.push(format!("alpha mismatch: theory {} vs eigenvalues {}", curve.alpha, sim));
        }
    } else {
        warnings.push(format!("{} not found; metadata not checked", campaign.display()));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let positive = matches!(curve.model, Model::Wishart { .. });
    let window = args.window.unwrap_or(if positive { (0.1, 20.0) } else { (-10.0, 10.0) });
    let excluded = args.exclude_zero.unwrap_or(0.0);
    if !(excluded >= 0.0) {
        return Err(CliError::config("--exclude-zero", "must be non-negative"));
    }
    let cdf = curve.cdf();
    let atom = curve.atom_at_zero;
    let theory_cdf = |t: f64| {
        if positive {
            ((cdf.eval(t) - atom) / (1.0 - atom)).clamp(0.0, 1.0)
        } else {
            cdf.eval(t)
        }
    };
    let mut small = 0;
    let total: usize = trials.iter().map(|s| s.n).sum();
    let compared: Vec<EmpiricalSpectrum> = trials
        .iter()
        .map(|s| {
            let (k, p) = positive_part(s);
            small += k;
            if positive {
                p
            } else {
                s.clone()
            }
        })
        .collect();
    let per_trial_ks = compared
        .iter()
        .map(|s| Ok(distribution_distance(s, theory_cdf, window, excluded)?.ks))
        .collect::<Result<Vec<f64>, htspectra::Error>>()?;
    let pooled_spec = EmpiricalSpectrum::pooled(&compared, "pooled");
    let pooled = distribution_distance(&pooled_spec, theory_cdf, window, excluded)?;
    let report = CompareReport {
        theory: args.theory.display().to_string(),
        eigenvalues: args.eigenvalues.display().to_string(),
        alpha: curve.alpha,
        model: curve.model.name().to_string(),
        trials: trials.len(),
        samples: pooled_spec.n,
        positive_part: positive,
        near_zero_fraction: small as f64 / total as f64,
        atom_at_zero: atom,
        per_trial_ks,
        pooled,
        warnings,
    };
    io::write_json(&out.join("compare.json"), &report)?;
    println!(
        "pooled KS {:.6}, W1 {:.6} on [{}, {}] over {} samples",
        pooled.ks, pooled.w1_window, window.0, window.1, report.samples
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub alpha: f64,
    /// Positive critical points; the set is symmetric about zero.
    pub points: Vec<f64>,
}

fn critical_set(args: &CriticalSetArgs, out: &Path) -> Result<(), CliError> {
    let a = AlphaParam::new(args.alpha)
        .map_err(|_| CliError::config("--alpha", format!("{} is not in (0, 2]", args.alpha)))?;
    if !(args.r_min > 0.0 && args.r_max > args.r_min) {
        return Err(CliError::config("--r-min/--r-max", "need 0 < r_min < r_max"));
    }
    let search = SearchBox {
        r_min: args.r_min,
        r_max: args.r_max,
        ..Default::default()
    };
    let points = find_critical_set(&a, &search, &FixedPointConfig::default())?;
    for t in &points {
        println!("±{}", io::fmt17(*t));
    }
    io::write_json(
        &out.join("critical_set.json"),
        &CriticalSet {
            alpha: a.value(),
            points,
        },
    )
}

fn selftest(args: &SelftestArgs) -> Result<(), CliError> {
    let ids: Vec<u8> = if args.criteria.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        args.criteria.clone()
    };
    if let Some(id) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(CliError::config("criteria", format!("no criterion {id}")));
    }
    let scale = if args.full { Scale::Full } else { Scale::Reduced };
    let mut failed = Vec::new();
    for id in ids {
        let r = run_criterion(id, scale);
        println!("{}", r.line());
        if !r.passed {
            failed.push(id.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("criteria failed: {}", failed.join(", "))))
    }
}
