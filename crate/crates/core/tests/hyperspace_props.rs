use autovid::hyperspace::*;
use autovid::seed::stream_rng;
use proptest::prelude::*;

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn uniform_and_log_uniform_pass_ks() {
    let n = 5000;
    // critical value at alpha = 0.01
    let critical = 1.63 / (n as f64).sqrt();
    let mut rng = stream_rng(17, 0);
    let u = ParamDomain::uniform(-2.0, 6.0).unwrap();
    let xs: Vec<f64> = (0..n).map(|_| u.sample(&mut rng).as_f64().unwrap()).collect();
    let d = ks_statistic(xs, |x| (x + 2.0) / 8.0);
    assert!(d < critical, "uniform D={d}");

    let l = ParamDomain::log_uniform(1e-4, 1e-1).unwrap();
    let xs: Vec<f64> = (0..n).map(|_| l.sample(&mut rng).as_f64().unwrap()).collect();
    let d = ks_statistic(xs, |x| (x.ln() - 1e-4f64.ln()) / (1e-1f64.ln() - 1e-4f64.ln()));
    assert!(d < critical, "log-uniform D={d}");
}

#[test]
fn choice_frequencies_are_balanced() {
    let c = ParamDomain::choice([8i64, 16, 32]).unwrap();
    let mut rng = stream_rng(5, 0);
    let mut counts = [0usize; 3];
    for _ in 0..9000 {
        let v = c.sample(&mut rng).as_i64().unwrap();
        counts[[8, 16, 32].iter().position(|o| *o == v).unwrap()] += 1;
    }
    // chi-square with 2 degrees of freedom, alpha = 0.001
    let chi: f64 = counts.iter().map(|&o| (o as f64 - 3000.0).powi(2) / 3000.0).sum();
    assert!(chi < 13.8, "{counts:?}");
}

fn domain() -> impl Strategy<Value = ParamDomain> {
    prop_oneof![
        (-1e3f64..1e3, 1e-3f64..1e3).prop_map(|(lo, w)| ParamDomain::uniform(lo, lo + w).unwrap()),
        (1e-6f64..1.0, 1.5f64..1e3).prop_map(|(lo, r)| ParamDomain::log_uniform(lo, lo * r).unwrap()),
        prop::collection::btree_set(-50i64..50, 1..6).prop_map(|s| ParamDomain::choice(s).unwrap()),
        (-5i64..5).prop_map(ParamDomain::constant),
    ]
}

proptest! {
    #[test]
    fn samples_are_contained(d in domain(), seed in any::<u64>()) {
        let v = d.sample(&mut stream_rng(seed, 0));
        prop_assert!(d.contains(&v));
        if let ParamDomain::Uniform { high, .. } | ParamDomain::LogUniform { high, .. } = d {
            prop_assert!(v.as_f64().unwrap() < high);
        }
    }

    #[test]
    fn unit_round_trip(d in domain(), seed in any::<u64>()) {
        let v = d.sample(&mut stream_rng(seed, 0));
        let u = to_unit(&d, &v).unwrap();
        prop_assert!((0.0..=1.0).contains(&u));
        let back = from_unit(&d, u).unwrap();
        match &d {
            ParamDomain::Uniform { low, high } | ParamDomain::LogUniform { low, high } => {
                let (a, b) = (v.as_f64().unwrap(), back.as_f64().unwrap());
                prop_assert!((a - b).abs() <= 1e-9 * (high - low).abs().max(high.abs()).max(low.abs()));
            }
            _ => prop_assert!(back.same_as(&v)),
        }
    }

    #[test]
    fn space_json_round_trip(ds in prop::collection::vec(domain(), 1..5)) {
        let mut space = SearchSpace::new();
        for (i, d) in ds.into_iter().enumerate() {
            space.insert(format!("p{i}"), d).unwrap();
        }
        let back = SearchSpace::from_json(&space.to_json()).unwrap();
        prop_assert_eq!(back, space);
    }

    #[test]
    fn sampled_configs_belong_to_space(seed in any::<u64>()) {
        let space = default_autovideo_space();
        let c = sample_space(&space, &mut stream_rng(seed, 0)).unwrap();
        prop_assert!(contains(&space, &c));
        prop_assert_eq!(c.len(), 4);
    }
}

#[test]
fn same_seed_same_config() {
    let space = default_autovideo_space();
    assert_eq!(
        sample_space(&space, &mut stream_rng(1, 2)).unwrap(),
        sample_space(&space, &mut stream_rng(1, 2)).unwrap()
    );
}
