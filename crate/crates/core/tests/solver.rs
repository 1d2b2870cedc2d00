use htspectra::density::{stieltjes_band, stieltjes_perturbed};
use htspectra::matrices::{Atom, DiagonalLaw, SigmaProfile};
use htspectra::oracle::semicircle_stieltjes;
use htspectra::solver::{
    continue_to_real_axis, solve_band, solve_system, solve_wigner, FixedPointConfig, FixedPointSystem,
};
use htspectra::special_fn::{cone_contains, AlphaParam};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn alpha(v: f64) -> AlphaParam {
    AlphaParam::new(v).unwrap()
}

fn g_wigner(al: f64, z: Complex64) -> Complex64 {
    stieltjes_band(&alpha(al), &SigmaProfile::constant(1.0), z, &FixedPointConfig::default()).unwrap()
}

#[test]
fn semicircle_stieltjes_transform() {
    for z in [c(0.0, 3.0), c(1.0, 0.5), c(-2.5, 0.1), c(0.3, 1e-3), c(10.0, 2.0)] {
        let g = g_wigner(2.0, z);
        assert!((g - semicircle_stieltjes(z)).norm() < 1e-10, "{z}: {g}");
    }
}

#[test]
fn residual_and_cone() {
    let cfg = FixedPointConfig::default();
    for al in [0.6, 1.0, 1.5, 1.9] {
        let a = alpha(al);
        let sys = FixedPointSystem::wigner(a);
        for z in [c(0.5, 0.01), c(-3.0, 0.2), c(0.0, 1.0)] {
            let sol = solve_wigner(&a, z, &cfg).unwrap();
            assert!(sys.residual(z, &sol.values()).unwrap() < 1e-10);
            assert!(sol.values().iter().all(|&y| cone_contains(sys.cone(), &a, y, 1e-9)));
        }
    }
}

#[test]
fn reflection_symmetry() {
    for al in [0.8, 1.4] {
        for z in [c(0.7, 0.05), c(3.0, 1.0)] {
            let g = g_wigner(al, z);
            let m = g_wigner(al, -z.conj());
            assert!((m + g.conj()).norm() < 1e-10, "α={al} {z}");
        }
    }
}

#[test]
fn mirror_solution_matches_direct_solve() {
    let cfg = FixedPointConfig::default();
    let a = alpha(1.3);
    let diag = DiagonalLaw::new(vec![
        Atom { lambda: -1.0, w: 0.5 },
        Atom { lambda: 1.0, w: 0.5 },
    ])
    .unwrap();
    let sys = FixedPointSystem::perturbed(a, &SigmaProfile::constant(1.0), &diag, cfg.band_blocks).unwrap();
    let z = c(0.6, 0.2);
    let s = solve_system(&sys, z, &cfg).unwrap();
    let m = solve_system(&sys, -z.conj(), &cfg).unwrap();
    let mirrored = sys.mirror_solution(&s);
    for (u, v) in mirrored.values().iter().zip(m.values()) {
        assert!((u - v).norm() < 1e-9, "{u} vs {v}");
    }
}

#[test]
fn constant_profile_rescales() {
    let cfg = FixedPointConfig::default();
    let a = alpha(1.2);
    let s = 2.5f64;
    for z in [c(0.4, 0.3), c(-1.0, 0.05)] {
        let g = stieltjes_band(&a, &SigmaProfile::constant(s), z, &cfg).unwrap();
        let want = g_wigner(1.2, z / s) / s;
        assert!((g - want).norm() < 1e-9, "{z}: {g} vs {want}");
    }
}

#[test]
fn centred_dirac_perturbation_is_the_band_model() {
    let cfg = FixedPointConfig::default();
    let a = alpha(1.6);
    let p = SigmaProfile::band_indicator(0.3).unwrap();
    for z in [c(0.2, 0.4), c(2.0, 0.02)] {
        let b = stieltjes_band(&a, &p, z, &cfg).unwrap();
        let q = stieltjes_perturbed(&a, &p, &DiagonalLaw::dirac(0.0), z, &cfg).unwrap();
        assert!((b - q).norm() < 1e-9);
    }
}

#[test]
fn band_matches_wigner_for_constant_profile() {
    let cfg = FixedPointConfig::default();
    let a = alpha(0.9);
    let z = c(1.3, 0.1);
    let w = solve_wigner(&a, z, &cfg).unwrap().values()[0];
    let b = solve_band(&a, &SigmaProfile::constant(1.0), z, &cfg).unwrap();
    assert!(b.values().iter().all(|v| (v - w).norm() < 1e-10));
}

#[test]
fn continuation_reaches_small_eps() {
    let sys = FixedPointSystem::wigner(alpha(1.5));
    let cfg = FixedPointConfig::default();
    let path = continue_to_real_axis(&sys, 0.8, &[1e-2, 1e-4, 1e-6], &cfg).unwrap();
    assert!(path.is_complete());
    assert_eq!(path.solutions.len(), 3);
    assert!((path.solutions[2].z.im - 1e-6).abs() < 1e-18);
    let neg = continue_to_real_axis(&sys, -0.8, &[1e-2, 1e-4, 1e-6], &cfg).unwrap();
    assert!((neg.solutions[2].z - c(-0.8, 1e-6)).norm() < 1e-15);
    assert!(continue_to_real_axis(&sys, 0.0, &[1e-2], &cfg).is_err());
    assert!(continue_to_real_axis(&sys, 1.0, &[1e-4, 1e-2], &cfg).is_err());
    assert!(continue_to_real_axis(&sys, 1.0, &[1e-7], &cfg).is_err());
    assert!(solve_wigner(&alpha(1.0), c(1.0, 0.0), &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn herglotz_bounds(al in 0.5f64..2.0, x in -20.0f64..20.0, y in 0.01f64..10.0) {
        let z = c(x, y);
        let g = g_wigner(al, z);
        prop_assert!(g.im <= 0.0, "{}", g);
        prop_assert!(g.norm() <= (1.0 + 1e-9) / y, "{}", g);
    }
}
