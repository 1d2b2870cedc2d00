use htspectra::oracle::stable_upper_tail_gil_pelaez;
use htspectra::sampling::{
    cms_symmetric, normalizer_a_n, pareto_from_uniform, sample_entry, stable_upper_tail, RngStreamSpec,
    StableTailLaw, TailFamily,
};
use proptest::prelude::*;
use rand::Rng;

// P(X > x) for the symmetric stable law with characteristic function
// exp(-|u|^α), from 30-digit inversion and, for α < 1, the convergent series.
const FROZEN_TAILS: [(f64, f64, f64); 4] = [
    (0.7, 0.5, 0.34044046420450736),
    (0.7, 3.0, 0.1460570266979639),
    (1.5, 0.5, 0.3605957735187284),
    (1.5, 3.0, 0.051597803559185047),
];

#[test]
fn stable_tail_frozen() {
    for (al, x, want) in FROZEN_TAILS {
        let got = stable_upper_tail(al, x);
        assert!((got - want).abs() < 1e-13, "α={al} x={x}: {got} vs {want}");
        assert!((stable_upper_tail(al, -x) - (1.0 - want)).abs() < 1e-13);
    }
}

#[test]
fn stable_tail_against_inversion_oracle() {
    for (al, x) in [(0.9, 0.2), (1.2, 2.0), (1.8, 1.0)] {
        let a = stable_upper_tail(al, x);
        let b = stable_upper_tail_gil_pelaez(al, x, 400_000);
        assert!((a - b).abs() < 1e-8, "α={al} x={x}: {a} vs {b}");
    }
}

#[test]
fn normalizers_frozen() {
    let a = normalizer_a_n(&StableTailLaw::stable(1.5).unwrap(), 1000).unwrap();
    assert!((a / 54.336941742537097 - 1.0).abs() < 1e-12, "{a}");
    let a = normalizer_a_n(&StableTailLaw::stable(0.7).unwrap(), 500).unwrap();
    assert!((a / 4626.2079598342828 - 1.0).abs() < 1e-12, "{a}");
    let a = normalizer_a_n(&StableTailLaw::pareto(1.5).unwrap(), 1000).unwrap();
    assert!((a - 100.0).abs() < 1e-10);
    let scaled = StableTailLaw::new(1.5, TailFamily::SymmetricPareto, 3.0).unwrap();
    assert!((normalizer_a_n(&scaled, 1000).unwrap() - 300.0).abs() < 1e-9);
}

#[test]
fn cauchy_case() {
    assert!((stable_upper_tail(1.0, 1.0) - 0.25).abs() < 1e-15);
    let a = normalizer_a_n(&StableTailLaw::stable(1.0).unwrap(), 100).unwrap();
    let want = (std::f64::consts::PI / 2.0 * (1.0 - 1.0 / 100.0)).tan();
    assert!((a / want - 1.0).abs() < 1e-12);
}

#[test]
fn streams_reproducible_and_independent() {
    let s = RngStreamSpec::new(11, 3);
    let a: Vec<u64> = (0..8).map({
        let mut r = s.rng();
        move |_| r.gen()
    }).collect();
    let b: Vec<u64> = (0..8).map({
        let mut r = s.rng();
        move |_| r.gen()
    }).collect();
    let c: Vec<u64> = (0..8).map({
        let mut r = s.substream(4).rng();
        move |_| r.gen()
    }).collect();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

fn empirical_tail(law: &StableTailLaw, u: f64, n: usize, seed: u64) -> f64 {
    let mut rng = RngStreamSpec::new(seed, 0).rng();
    (0..n).filter(|_| sample_entry(law, &mut rng).abs() >= u).count() as f64 / n as f64
}

#[test]
fn sampled_tails_match_the_law() {
    let n = 200_000;
    for law in [
        StableTailLaw::pareto(0.8).unwrap(),
        StableTailLaw::stable(1.3).unwrap(),
        StableTailLaw::stable(0.6).unwrap(),
    ] {
        for u in [0.5, 2.0, 10.0] {
            let p = law.tail(u);
            let got = empirical_tail(&law, u, n, 99);
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((got - p).abs() <= 5.0 * sd + 1e-12, "{law:?} u={u}: {got} vs {p}");
        }
    }
}

#[test]
fn samples_are_symmetric() {
    let law = StableTailLaw::stable(1.1).unwrap();
    let mut rng = RngStreamSpec::new(5, 0).rng();
    let n = 100_000;
    let pos = (0..n).filter(|_| sample_entry(&law, &mut rng) > 0.0).count() as f64 / n as f64;
    assert!((pos - 0.5).abs() < 5.0 * (0.25 / n as f64).sqrt());
}

#[test]
fn cms_at_alpha_one_is_cauchy() {
    // With α = 1 the transform reduces to tan(v).
    for v in [-1.2, -0.3, 0.4, 1.1] {
        assert!((cms_symmetric(1.0, v, 0.7) - f64::tan(v)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn pareto_inversion(al in 0.1f64..1.99, scale in 0.1f64..10.0, u in 1e-12f64..1.0) {
        let x = pareto_from_uniform(al, scale, u, true);
        let law = StableTailLaw::new(al, TailFamily::SymmetricPareto, scale).unwrap();
        prop_assert!((law.tail(x) - u).abs() <= 1e-10 * u.max(1e-300) + 1e-15);
    }

    #[test]
    fn stable_tail_is_monotone(al in 0.3f64..1.95, x in 0.01f64..50.0) {
        prop_assert!(stable_upper_tail(al, x * 1.1) <= stable_upper_tail(al, x) + 1e-15);
    }
}
