use proptest::prelude::*;
use tw_edge::ensembles::{
    build_sigma, draw_sample, replicate_seed, Beta, EntryDistribution, SigmaModel,
};
use tw_edge::hypothesis::*;

fn ordered_triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (1e-3f64..1e3, 0.0f64..1e2, 1e-6f64..1e2).prop_map(|(l3, g2, g1)| (l3 + g2 + g1, l3 + g2, l3))
}

proptest! {
    #[test]
    fn power_of_two_scaling_is_exact((l1, l2, l3) in ordered_triple(), k in -20i32..20) {
        let a = 2f64.powi(k);
        let base = onatski_statistic(l1, l2, l3).unwrap();
        prop_assert_eq!(onatski_statistic(a * l1, a * l2, a * l3).unwrap(), base);
    }

    #[test]
    fn general_scaling_is_invariant((l1, l2, l3) in ordered_triple(), a in 1e-3f64..1e3) {
        prop_assume!(l2 - l3 > 1e-6 * l2);
        let base = onatski_statistic(l1, l2, l3).unwrap();
        let scaled = onatski_statistic(a * l1, a * l2, a * l3).unwrap();
        let rel_gap = (l2 - l3) / l2;
        // rounding of a·lᵢ is amplified by the conditioning of the lower gap
        prop_assert!((scaled - base).abs() <= 8.0 * f64::EPSILON / rel_gap * base.max(1.0));
    }

    #[test]
    fn top_three_are_ordered(m in 3usize..40, n in 3usize..40, seed in any::<u64>()) {
        let sigma = build_sigma(&SigmaModel::Identity, m, n as f64 / m as f64).unwrap();
        let top = draw_sample(&sigma, EntryDistribution::DiscreteUReal, m, n, 3, seed, false)
            .unwrap()
            .top_eigenvalues;
        prop_assert!(top[0] >= top[1] && top[1] >= top[2] && top[2] >= -1e-12);
    }
}

fn spec(
    alternative: Option<AltFamily>,
    tau: f64,
    shapes: Vec<(usize, usize)>,
    reps: usize,
) -> SizePowerSpec {
    SizePowerSpec {
        setting: Setting::I,
        alternative,
        tau,
        shapes,
        reps,
        seed: 0,
        level: 0.05,
        dist: EntryDistribution::DiscreteUReal,
    }
}

#[test]
fn zero_strength_matches_null_bitwise() {
    let table = build_null_table(Beta::Real, 100, 1000, 0).unwrap();
    let null =
        size_power_experiment(&spec(None, 0.0, vec![(40, 40), (30, 60)], 300), &table).unwrap();
    for family in [
        AltFamily::H1A,
        AltFamily::H1BSpikeE1,
        AltFamily::H1BRank1Ones,
    ] {
        let alt = size_power_experiment(
            &spec(Some(family), 0.0, vec![(40, 40), (30, 60)], 300),
            &table,
        )
        .unwrap();
        for (a, b) in alt.iter().zip(&null) {
            assert_eq!(a.rejection_rate.to_bits(), b.rejection_rate.to_bits());
        }
    }
}

#[test]
fn replicate_order_does_not_matter() {
    let table = build_null_table(Beta::Real, 100, 1000, 0).unwrap();
    let s = spec(Some(AltFamily::H1A), 4.0, vec![(30, 30)], 200);
    let rows = size_power_experiment(&s, &table).unwrap();
    let critical = critical_value(&table, 0.05).unwrap();
    let sigma = build_sigma(&Setting::I.sigma_model(), 30, 1.0).unwrap();
    let alt = AlternativeSpec {
        family: AltFamily::H1A,
        tau: 4.0,
        setting: Setting::I,
    };
    let base = cell_seed(0, 0);
    let rejections = (0..200u64)
        .rev()
        .filter(|&r| {
            let t = generate_alt_sample(&alt, &sigma, s.dist, 30, 30, replicate_seed(base, r))
                .unwrap()
                .top_eigenvalues;
            onatski_statistic(t[0], t[1], t[2]).unwrap() > critical
        })
        .count();
    assert_eq!(rows[0].rejection_rate, rejections as f64 / 200.0);
}

#[test]
fn power_increases_with_strength() {
    let table = build_null_table(Beta::Real, 400, 5000, 0).unwrap();
    let reps = 600;
    let rate = |tau| {
        size_power_experiment(
            &spec(Some(AltFamily::H1A), tau, vec![(60, 60)], reps),
            &table,
        )
        .unwrap()[0]
            .clone()
    };
    let (p05, p4, p6) = (rate(0.5), rate(4.0), rate(6.0));
    let gap_ok = |hi: &SizePowerRow, lo: &SizePowerRow| {
        let se = ((hi.two_se / 2.0).powi(2) + (lo.two_se / 2.0).powi(2)).sqrt();
        hi.rejection_rate - lo.rejection_rate >= -2.0 * se
    };
    assert!(
        gap_ok(&p6, &p4) && gap_ok(&p4, &p05),
        "{p05:?} {p4:?} {p6:?}"
    );
    assert!(p6.rejection_rate > p05.rejection_rate + 0.3);
}

#[test]
fn separable_alternative_in_setting_two() {
    let table = build_null_table(Beta::Real, 400, 5000, 0).unwrap();
    let s = SizePowerSpec {
        setting: Setting::II,
        ..spec(Some(AltFamily::H1BSpikeE1), 4.0, vec![(100, 100)], 2000)
    };
    let row = &size_power_experiment(&s, &table).unwrap()[0];
    assert!((row.rejection_rate - 0.9870).abs() <= 0.02, "{row:?}");
    assert_eq!(
        row.two_se,
        2.0 * (row.rejection_rate * (1.0 - row.rejection_rate) / 2000.0).sqrt()
    );
}

#[test]
fn rank_one_temporal_alternative_has_power() {
    let table = build_null_table(Beta::Real, 400, 5000, 0).unwrap();
    let row = &size_power_experiment(
        &spec(Some(AltFamily::H1BRank1Ones), 6.0, vec![(60, 60)], 500),
        &table,
    )
    .unwrap()[0];
    assert!((row.rejection_rate - 0.8647).abs() <= 0.06, "{row:?}");
}

#[test]
fn null_percentiles_monotone_in_level() {
    let table = build_null_table(Beta::Complex, 60, 500, 2).unwrap();
    let levels = [0.01, 0.05, 0.1, 0.3, 0.5, 0.9];
    let cvs: Vec<f64> = levels
        .iter()
        .map(|&l| critical_value(&table, l).unwrap())
        .collect();
    assert!(cvs.windows(2).all(|w| w[0] >= w[1]), "{cvs:?}");
    assert_eq!(
        critical_value(&table, 0.5).unwrap(),
        tw_edge::stats::quantile_type7(&table.sorted_ratios, 0.5)
    );
}
