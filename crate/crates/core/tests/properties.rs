//! Property suites for the module invariants: control superadditivity,
//! norm ordering, seminorm homogeneity, kappa mesh identities and exact
//! power-law fits.

use emlab_core::brownian::kappa;
use emlab_core::drift::{
    DriftSpec, QExponent, SpaceKind, SpaceProfile, TimeKind, TimeProfile,
};
use emlab_core::norms::{
    lp_sup_norm, rate_fit, sup_lp_norm, weighted_holder_seminorm, PairedSample,
};
use proptest::prelude::*;

fn arbitrary_spec() -> impl Strategy<Value = DriftSpec> {
    let kind = prop_oneof![
        Just(SpaceKind::Constant { level: 1.5 }),
        Just(SpaceKind::Smooth { wavenumber: 1.0 }),
        Just(SpaceKind::CappedPower {
            exponent: 0.5,
            cap: 1.0
        }),
        Just(SpaceKind::Weierstrass {
            base: 2,
            exponent: 0.5,
            terms: 8
        }),
    ];
    let time = prop_oneof![
        Just(TimeKind::One),
        (0.05f64..0.45).prop_map(|beta| TimeKind::Power { beta }),
    ];
    (kind, time, 0.25f64..3.0, 1.45f64..2.2).prop_map(|(kind, time, amplitude, q)| {
        DriftSpec::new(
            SpaceProfile::new(kind),
            TimeProfile::new(time, 1.0).unwrap(),
            amplitude,
            0.5,
            QExponent::Finite(q),
            1,
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn control_is_superadditive(
        spec in arbitrary_spec(),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        c in 0.0f64..1.0,
    ) {
        let mut ts = [a, b, c];
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let [s, u, t] = ts;
        let left = spec.control(s, u).unwrap() + spec.control(u, t).unwrap();
        let whole = spec.control(s, t).unwrap();
        prop_assert!(left <= whole + 1e-12 + 1e-12 * whole.abs(),
            "w(s,u) + w(u,t) = {left} > w(s,t) = {whole}");
    }

    #[test]
    fn control_matches_separable_identity(
        spec in arbitrary_spec(),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        let q = match spec.q { QExponent::Finite(q) => q, _ => unreachable!() };
        let factor = spec.amplitude.abs() * spec.h_norm();
        let expect = factor.powf(q)
            * emlab_core::drift::time_integral(&spec.time, q, s, t).unwrap();
        let got = spec.control(s, t).unwrap();
        prop_assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    #[test]
    fn kappa_identities(n_pow in 0u32..10, t in 0.0f64..1.0, horizon in 0.5f64..4.0) {
        let n = 1usize << n_pow;
        let t = t * horizon;
        let k = kappa(n, t, horizon);
        prop_assert!(k <= t + 1e-15);
        if t > 0.0 {
            prop_assert!(t - horizon / (n as f64) < k + 1e-12);
        }
        prop_assert_eq!(kappa(n, k, horizon), k);
    }

    #[test]
    fn sup_lp_dominates_lp_sup_and_is_monotone_in_p(
        seed in 0u64..5_000,
        m in 4usize..24,
        nodes in 3usize..20,
    ) {
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1).max(1) as f64).collect();
        let mut state = seed.wrapping_mul(0x9e37_79b9).wrapping_add(1);
        let mut next = || {
            state = emlab_core::rng::hash_words(&[state]);
            emlab_core::rng::uniform_open01(state) * 2.0 - 1.0
        };
        let diffs: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..nodes).map(|_| next()).collect())
            .collect();
        let sample = PairedSample::new(times, 1, diffs, 8).unwrap();
        let sup_lp2 = sup_lp_norm(&sample, 2.0).unwrap().value;
        let lp_sup2 = lp_sup_norm(&sample, 2.0).unwrap();
        prop_assert!(lp_sup2 <= sup_lp2 + 1e-12);
        let sup_lp4 = sup_lp_norm(&sample, 4.0).unwrap().value;
        prop_assert!(sup_lp2 <= sup_lp4 + 1e-12);
    }

    #[test]
    fn sup_lp_triangle_inequality(
        seed in 0u64..5_000,
        m in 4usize..16,
        nodes in 3usize..12,
    ) {
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1).max(1) as f64).collect();
        let mut state = seed.wrapping_add(77);
        let mut next = || {
            state = emlab_core::rng::hash_words(&[state]);
            emlab_core::rng::uniform_open01(state) * 2.0 - 1.0
        };
        let d: Vec<Vec<f64>> = (0..m).map(|_| (0..nodes).map(|_| next()).collect()).collect();
        let e: Vec<Vec<f64>> = (0..m).map(|_| (0..nodes).map(|_| next()).collect()).collect();
        let sum: Vec<Vec<f64>> = d
            .iter()
            .zip(&e)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        let sd = sup_lp_norm(&PairedSample::new(times.clone(), 1, d, 8).unwrap(), 2.0).unwrap();
        let se = sup_lp_norm(&PairedSample::new(times.clone(), 1, e, 8).unwrap(), 2.0).unwrap();
        let ss = sup_lp_norm(&PairedSample::new(times, 1, sum, 8).unwrap(), 2.0).unwrap();
        prop_assert!(ss.value <= sd.value + se.value + 1e-12);
    }

    #[test]
    fn weighted_seminorm_is_absolutely_homogeneous(
        spec in arbitrary_spec(),
        seed in 0u64..5_000,
        scale in -4.0f64..4.0,
    ) {
        let nodes = 17;
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1) as f64).collect();
        let mut state = seed.wrapping_add(3);
        let vals: Vec<f64> = (0..nodes)
            .map(|_| {
                state = emlab_core::rng::hash_words(&[state]);
                emlab_core::rng::uniform_open01(state) - 0.5
            })
            .collect();
        let scaled: Vec<f64> = vals.iter().map(|v| v * scale).collect();
        let base = weighted_holder_seminorm(&times, &vals, 1, 0.25, &spec).unwrap();
        let got = weighted_holder_seminorm(&times, &scaled, 1, 0.25, &spec).unwrap();
        prop_assert!((got - scale.abs() * base).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn rate_fit_recovers_exact_power_laws(
        rate in 0.1f64..2.0,
        scale in 0.1f64..10.0,
        points in 3usize..8,
    ) {
        let data: Vec<(f64, f64)> = (0..points)
            .map(|i| {
                let n = 2f64.powi(i as i32 + 2);
                (n, scale * n.powf(-rate))
            })
            .collect();
        let fit = rate_fit(&data).unwrap();
        prop_assert!((fit.rate - rate).abs() < 1e-10);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-10);
        prop_assert!(fit.stderr_slope < 1e-8);
    }
}

/// Randomized high-volume sweep used by the acceptance gate: 10^4 triples
/// with zero tolerance violations.
#[test]
fn superadditivity_bulk_sweep() {
    let specs = [
        DriftSpec::new(
            SpaceProfile::new(SpaceKind::Weierstrass {
                base: 2,
                exponent: 0.5,
                terms: 12,
            }),
            TimeProfile::new(TimeKind::Power { beta: 0.4 }, 1.0).unwrap(),
            1.0,
            0.5,
            QExponent::Finite(1.5),
            1,
        )
        .unwrap(),
        DriftSpec::new(
            SpaceProfile::new(SpaceKind::Smooth { wavenumber: 1.0 }),
            TimeProfile::new(TimeKind::One, 1.0).unwrap(),
            2.0,
            0.5,
            QExponent::Finite(2.0),
            1,
        )
        .unwrap(),
    ];
    let mut state = 0xfeed_u64;
    let mut violations = 0usize;
    for spec in &specs {
        for _ in 0..5_000 {
            let mut ts = [0.0f64; 3];
            for t in &mut ts {
                state = emlab_core::rng::hash_words(&[state]);
                *t = emlab_core::rng::uniform_open01(state);
            }
            ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let [s, u, t] = ts;
            let parts = spec.control(s, u).unwrap() + spec.control(u, t).unwrap();
            let whole = spec.control(s, t).unwrap();
            if parts > whole + 1e-12 + 1e-12 * whole {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}
