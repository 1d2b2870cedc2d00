use htspectra::matrices::{
    block_embed, build_band_matrix, build_covariance_matrix, equivalent_constant, profile_alpha_norm,
    sample_rectangular, DiagonalLaw, EnsembleSpec, Matrix, SigmaProfile, Truncation,
};
use htspectra::sampling::{normalizer_a_n, RngStreamSpec, StableTailLaw};
use proptest::prelude::*;

fn spec(n: usize, profile: SigmaProfile, seed: u64) -> EnsembleSpec {
    EnsembleSpec {
        n,
        law: StableTailLaw::pareto(1.5).unwrap(),
        profile,
        truncation: Truncation::None,
        diagonal: None,
        seed: RngStreamSpec::new(seed, 0),
    }
}

#[test]
fn profile_json_forms() {
    let forms = [
        r#"{"type":"constant","c":1.0}"#,
        r#"{"type":"piecewise","breaks":[0,0.5,1],"matrix":[[1,0.5],[0.5,2]]}"#,
        r#"{"type":"band","breakpoints":[0,0.25,0.75,1],"values":[1,0,1]}"#,
        r#"{"type":"grid","resolution":2,"values":[[1,2],[2,3]]}"#,
    ];
    for f in forms {
        let p: SigmaProfile = serde_json::from_str(f).unwrap();
        p.validate().unwrap();
        let back: SigmaProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);
    }
    let d: DiagonalLaw =
        serde_json::from_str(r#"{"atoms":[{"lambda":-1,"w":0.5},{"lambda":1,"w":0.5}]}"#).unwrap();
    d.validate().unwrap();
    assert!(d.is_symmetric());
    assert_eq!(d.second_moment(), 1.0);
}

#[test]
fn invalid_profiles_rejected() {
    let bad = [
        r#"{"type":"piecewise","breaks":[0,0.5,0.9],"matrix":[[1,0],[0,1]]}"#,
        r#"{"type":"piecewise","breaks":[0,0.5,1],"matrix":[[1,0.5],[0.4,1]]}"#,
        r#"{"type":"grid","resolution":2,"values":[[1,2]]}"#,
        r#"{"type":"band","breakpoints":[0,0.6,1],"values":[1]}"#,
    ];
    for f in bad {
        let p: SigmaProfile = serde_json::from_str(f).unwrap();
        assert!(p.validate().is_err(), "{f}");
    }
    assert!(DiagonalLaw::new(vec![]).is_err());
}

#[test]
fn band_indicator_norms() {
    let p = SigmaProfile::band_indicator(0.25).unwrap();
    assert!((p.alpha_integral(1.5) - 0.5).abs() < 1e-15);
    assert!((p.k_sigma(1.5) - 0.5).abs() < 1e-15);
    match equivalent_constant(&p, 1.5).unwrap() {
        SigmaProfile::Constant { c } => assert!((c - 0.5f64.powf(1.0 / 1.5)).abs() < 1e-15),
        other => panic!("{other:?}"),
    }
    let coupling = p.coupling(1.5, 32).unwrap();
    for r in 0..coupling.len() {
        let row: f64 = coupling.weights[r].iter().sum();
        assert!((row - 0.5).abs() < 1e-12);
    }
}

#[test]
fn piecewise_integral() {
    let p = SigmaProfile::Piecewise {
        breaks: vec![0.0, 0.4, 1.0],
        matrix: vec![vec![1.0, 0.5], vec![0.5, 1.5]],
    };
    let al = 1.2;
    let want = 0.16 + 2.0 * 0.24 * 0.5f64.powf(al) + 0.36 * 1.5f64.powf(al);
    assert!((p.alpha_integral(al) - want).abs() < 1e-14);
    let norms = profile_alpha_norm(&p, al, 10).unwrap();
    assert!((norms.k_sigma - (0.4 * 0.5f64.powf(al) + 0.6 * 1.5f64.powf(al))).abs() < 1e-14);
}

#[test]
fn band_matrix_is_symmetric_and_deterministic() {
    let p = SigmaProfile::band_indicator(0.2).unwrap();
    let a = build_band_matrix(&spec(60, p.clone(), 3)).unwrap();
    let b = build_band_matrix(&spec(60, p.clone(), 3)).unwrap();
    let c = build_band_matrix(&spec(60, p, 4)).unwrap();
    assert!(a.is_symmetric());
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn band_profile_zeroes_far_entries() {
    let n = 40;
    let m = build_band_matrix(&spec(n, SigmaProfile::band_indicator(0.1).unwrap(), 1)).unwrap();
    for i in 0..n {
        for j in 0..n {
            let d = (i as f64 - j as f64).abs() / n as f64;
            let wrapped = d.min(1.0 - d);
            if wrapped > 0.1 + 1e-12 {
                assert_eq!(m.get(i, j), 0.0, "({i}, {j})");
            }
        }
    }
}

#[test]
fn truncation_caps_entries() {
    let n = 200;
    let mut s = spec(n, SigmaProfile::constant(1.0), 8);
    s.truncation = Truncation::FixedB { b: 0.5 };
    let m = build_band_matrix(&s).unwrap();
    assert!(m.data.iter().all(|v| v.abs() < 0.5));
    s.truncation = Truncation::PolynomialKappa { kappa: 2.0 };
    assert!(s.validate().is_err());
}

#[test]
fn diagonal_perturbation_shifts_the_trace() {
    let n = 50;
    let mut s = spec(n, SigmaProfile::constant(0.0), 2);
    s.diagonal = Some(DiagonalLaw::dirac(3.0));
    let m = build_band_matrix(&s).unwrap();
    assert_eq!(m.trace(), 3.0 * n as f64);
    assert_eq!(m.frobenius_sq(), 9.0 * n as f64);
}

#[test]
fn covariance_is_gram_matrix() {
    let law = StableTailLaw::pareto(1.2).unwrap();
    let seed = RngStreamSpec::new(6, 1);
    let w = build_covariance_matrix(&law, 30, 12, seed).unwrap();
    let x = sample_rectangular(&law, 30, 12, seed);
    let a = normalizer_a_n(&law, 42).unwrap();
    let xt = x.transpose();
    let direct = x.matmul(&xt).unwrap();
    for (u, v) in w.data.iter().zip(&direct.data) {
        assert!((u - v / (a * a)).abs() <= 1e-12 * v.abs().max(1.0) / (a * a));
    }
    assert!(build_covariance_matrix(&law, 10, 11, seed).is_err());
}

#[test]
fn embedding_squares_to_block_gram() {
    let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
    let e = block_embed(&x, 0.5);
    let e2 = e.matmul(&e).unwrap();
    let g = x.gram_rows();
    for i in 0..3 {
        for j in 0..3 {
            assert!((e2.get(i, j) - 0.25 * g.get(i, j)).abs() < 1e-14);
        }
    }
}

proptest! {
    #[test]
    fn lattice_norm_of_constant(c in -3.0f64..3.0, n in 1usize..30) {
        prop_assert!((SigmaProfile::constant(c).lattice_norm(n) - c.abs()).abs() < 1e-12);
    }

    #[test]
    fn band_eval_is_even_and_periodic(x in 0.0f64..1.0, y in 0.0f64..1.0, b in 0.05f64..0.45) {
        let p = SigmaProfile::band_indicator(b).unwrap();
        prop_assert_eq!(p.eval(x, y), p.eval(y, x));
        prop_assert_eq!(p.eval(x, y), if (x - y).abs().min(1.0 - (x - y).abs()) <= b { 1.0 } else { 0.0 });
    }
}
