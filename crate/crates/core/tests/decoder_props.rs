use bflab_core::{decode, gen_qc, gen_regular, syndrome, DecoderConfig, ErrorVector, ParityCheckMatrix};
use proptest::prelude::*;

fn error(n: usize) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::btree_set(0..n as u32, 0..10).prop_map(|s| s.into_iter().collect())
}

fn matrix(kind: u8, seed: u64) -> ParityCheckMatrix {
    match kind % 3 {
        0 => gen_regular(48, 24, 3, 6, seed).unwrap(),
        1 => gen_regular(60, 20, 2, 6, seed).unwrap(),
        _ => gen_qc(23, 2, 3, seed).unwrap(),
    }
}

/// Same matrix with column `j` moved to `perm[j]`.
fn permute_columns(h: &ParityCheckMatrix, perm: &[u32]) -> ParityCheckMatrix {
    let rows: Vec<Vec<u32>> = h
        .rows()
        .map(|row| {
            let mut r: Vec<u32> = row.iter().map(|&j| perm[j as usize]).collect();
            r.sort_unstable();
            r
        })
        .collect();
    ParityCheckMatrix::from_rows(h.n(), &rows, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn syndrome_bookkeeping_and_success_criterion(
        kind in any::<u8>(), seed in 0u64..20, support in error(46), i_max in 1u32..6, b in 1u32..4,
    ) {
        let h = matrix(kind, seed);
        prop_assume!(b as usize <= h.v());
        let e = ErrorVector::new(h.n(), support).unwrap();
        let s = syndrome(&h, &e).unwrap();
        let cfg = DecoderConfig::new(i_max, b);
        let trace = decode(&h, &s, cfg, Some(&e)).unwrap();
        prop_assert!(trace.iterations_run() <= i_max as usize);

        // Replaying the flips reproduces every recorded syndrome weight and
        // residual count: the running syndrome is H·(e ⊕ e′).
        let mut estimate = ErrorVector::zero(h.n());
        for it in &trace.iterations {
            estimate = estimate.xor(&ErrorVector::new(h.n(), it.flips.clone()).unwrap()).unwrap();
            let residual = e.xor(&estimate).unwrap();
            prop_assert_eq!(syndrome(&h, &residual).unwrap().weight(), it.syndrome_weight);
            prop_assert_eq!(Some(residual.weight()), it.residual_errors);
        }
        prop_assert_eq!(estimate.support(), trace.estimate.as_slice());
        let final_syndrome = syndrome(&h, &estimate).unwrap();
        prop_assert_eq!(!trace.failure, final_syndrome == s);
    }

    #[test]
    fn flip_sets_do_not_depend_on_column_order(
        kind in any::<u8>(), seed in 0u64..20, support in error(46), perm_seed in any::<u64>(), b in 1u32..4,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let h = matrix(kind, seed);
        prop_assume!(b as usize <= h.v());
        let mut perm: Vec<u32> = (0..h.n() as u32).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let hp = permute_columns(&h, &perm);
        let e = ErrorVector::new(h.n(), support).unwrap();
        let ep = ErrorVector::new(h.n(), e.support().iter().map(|&j| perm[j as usize]).collect()).unwrap();
        let cfg = DecoderConfig::new(4, b);
        let a = decode(&h, &syndrome(&h, &e).unwrap(), cfg, None).unwrap();
        let c = decode(&hp, &syndrome(&hp, &ep).unwrap(), cfg, None).unwrap();
        prop_assert_eq!(a.iterations.len(), c.iterations.len());
        for (x, y) in a.iterations.iter().zip(&c.iterations) {
            let mut mapped: Vec<u32> = x.flips.iter().map(|&j| perm[j as usize]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(&mapped, &y.flips);
            prop_assert_eq!(x.syndrome_weight, y.syndrome_weight);
        }
    }
}
