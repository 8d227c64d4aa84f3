use bflab_core::model::{
    expected_residual, flip_probs, hypergeometric_pmf, observed_partition, partition_law, predict, unsat_probs,
    ModelParams, PartitionSizes,
};
use bflab_core::{decode, gen_qc, gen_regular, syndrome, DecoderConfig, ErrorVector, ParityCheckMatrix};
use proptest::prelude::*;

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Parameter sets the model accepts, from toy sizes up to n in the thousands.
fn params() -> impl Strategy<Value = ModelParams> {
    (3usize..60, 1usize..40, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 2usize..3000).prop_filter_map(
        "partition 𝒱₂ negative",
        |(w, v, tf, bf, gf, extra)| {
            let n = 2 * v * (w - 1) + w + 3 + extra;
            let t = 2 + (tf * (n.min(150) - 2) as f64) as usize;
            let b = 1 + (bf * (v - 1) as f64).round() as usize;
            let gamma = (gf * v as f64).round() as usize;
            let p = ModelParams::new(n, v, w, t, b, gamma);
            p.validate().ok().map(|_| p)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn sweep_stays_in_range(p in params()) {
        let sizes = PartitionSizes::new(&p).unwrap();
        prop_assert_eq!(sizes.total(), p.n - 2);

        let u = unsat_probs(p.n, p.w, p.t).unwrap();
        for x in u.p.iter().flatten().chain(&u.p_e) {
            prop_assert!(unit(*x), "unsat {x}");
        }
        let f = flip_probs(&p).unwrap();
        for x in f.p.iter().flatten().chain([&f.p_e]) {
            prop_assert!(unit(*x), "flip {x}");
        }

        let [a, b, c] = sizes.as_array();
        for (good, bad) in [(a, b + c), (b, c), (p.w - 2, p.n - p.w), (p.w - 1, p.n - p.w - 1)] {
            let (_, pmf) = hypergeometric_pmf(good, bad, (p.t - 2).min(good + bad));
            prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(pmf.iter().all(|&x| unit(x)));
        }
        let law = partition_law(&sizes, p.t);
        prop_assert!((law.iter().map(|t| t.prob).sum::<f64>() - 1.0).abs() < 1e-12);
        for term in &law {
            prop_assert_eq!(term.t.iter().sum::<usize>(), p.t - 2);
        }

        let pred = predict(&p).unwrap();
        prop_assert!((0.0..=p.n as f64).contains(&pred.expected_residual));
        prop_assert!((0.0..=p.n as f64).contains(&pred.expected_flips));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observed_partition_respects_bounds(kind in 0u8..3, seed in 0u64..1000, i0 in 0usize..1000, i1 in 0usize..1000) {
        let h = match kind {
            0 => gen_regular(240, 120, 3, 6, seed).unwrap(),
            1 => gen_regular(300, 150, 5, 10, seed).unwrap(),
            _ => gen_qc(101, 2, 7, seed).unwrap(),
        };
        let (n, v, w) = (h.n(), h.v(), h.w());
        let (i0, i1) = (i0 % n, i1 % n);
        prop_assume!(i0 != i1);
        let g = h.column_intersection(i0, i1).unwrap();
        let [v0, v1, v2] = observed_partition(&h, i0, i1).unwrap();
        prop_assert!(v0 <= g * (w - 2));
        prop_assert!(v1 <= (2 * v - 2 * g) * (w - 1));
        prop_assert!(v2 as i64 >= (n - 2 + g * w) as i64 - (2 * v * (w - 1)) as i64);
    }
}

/// True when no other bit meets more than one check of `i0` or `i1`.
fn single_contact(h: &ParityCheckMatrix, i0: usize, i1: usize) -> bool {
    let mut checks: Vec<u32> = h.col(i0).iter().chain(h.col(i1)).copied().collect();
    checks.sort_unstable();
    checks.dedup();
    let mut hits = vec![0u8; h.n()];
    for &l in &checks {
        for &j in h.row(l as usize) {
            hits[j as usize] += 1;
        }
    }
    (0..h.n()).filter(|&j| j != i0 && j != i1).all(|j| hits[j] <= 1)
}

/// Exact mean of `t′` over every weight-`t` error containing `{i0, i1}`.
fn exhaustive_residual(h: &ParityCheckMatrix, i0: usize, i1: usize, t: usize, b: u32) -> f64 {
    assert_eq!(t, 4, "enumeration is written for two free positions");
    let pool: Vec<u32> = (0..h.n() as u32).filter(|&j| j as usize != i0 && j as usize != i1).collect();
    let cfg = DecoderConfig::new(1, b);
    let (mut sum, mut count) = (0u64, 0u64);
    for (x, &a) in pool.iter().enumerate() {
        for &c in &pool[x + 1..] {
            let e = ErrorVector::new(h.n(), vec![i0 as u32, i1 as u32, a, c]).unwrap();
            let tr = decode(h, &syndrome(h, &e).unwrap(), cfg, Some(&e)).unwrap();
            sum += tr.first_residual_errors().unwrap() as u64;
            count += 1;
        }
    }
    sum as f64 / count as f64
}

/// With the single-contact condition holding exactly, the only remaining
/// approximation is check independence, which fades as the code gets
/// sparser. The model error must shrink with it.
#[test]
fn model_converges_on_sparser_codes() {
    let (v, w, t, b) = (2, 4, 4, 2);
    let mut means = Vec::new();
    for n in [128, 256, 512] {
        let mut errs = Vec::new();
        for seed in 0..6 {
            let h = gen_regular(n, n * v / w, v, w, seed).unwrap();
            let mut found = 0;
            for i1 in 1..n {
                if found == 10 {
                    break;
                }
                if !single_contact(&h, 0, i1) {
                    continue;
                }
                let g = h.column_intersection(0, i1).unwrap();
                let model = expected_residual(&ModelParams::new(n, v, w, t, b, g)).unwrap();
                errs.push((model - exhaustive_residual(&h, 0, i1, t, b as u32)).abs());
                found += 1;
            }
        }
        assert!(errs.len() >= 30, "n = {n}: only {} pairs", errs.len());
        means.push(errs.iter().sum::<f64>() / errs.len() as f64);
    }
    assert!(means.windows(2).all(|m| m[1] < m[0]), "errors {means:?}");
    assert!(means[2] < 0.05, "errors {means:?}");
}
