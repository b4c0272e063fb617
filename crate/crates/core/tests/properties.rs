use flash_dtl::channel::{
    retention_shift, sample_voltages, state_moments, ChannelParams, GrayMap, NoiseFamily, OperatingPoint, Symbol,
};
use flash_dtl::ecc::{bits_to_symbols, hard_llr, nms_decode, symbols_to_bits, ParityCheckMatrix};
use flash_dtl::oracle::{ber_adjacent, ber_two_bit, optimal_thresholds, ser, ThresholdSet};
use flash_dtl::transfer::{align_target_to_source, kmeans, DomainMeans, KmeansConfig};
use proptest::prelude::*;

fn params(tlc: bool) -> ChannelParams {
    if tlc {
        ChannelParams::tlc()
    } else {
        ChannelParams::mlc()
    }
}

fn family(gamma: bool) -> NoiseFamily {
    if gamma {
        NoiseFamily::Gamma
    } else {
        NoiseFamily::Gaussian
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retention_shift_vanishes_at_x0_and_zero_time(tlc in any::<bool>(), n_pe in 0.0f64..2e4, t in 0.0f64..2e4) {
        let p = params(tlc);
        prop_assert_eq!(retention_shift(&p, 0, n_pe, t).unwrap(), (0.0, 0.0));
        for s in 0..p.num_states() {
            prop_assert_eq!(retention_shift(&p, s, n_pe, 0.0).unwrap().0, 0.0);
        }
    }

    #[test]
    fn retention_shift_grows_with_time(tlc in any::<bool>(), n_pe in 1.0f64..2e4, t in 0.0f64..1e4, dt in 1.0f64..1e4) {
        let p = params(tlc);
        for s in 1..p.num_states() {
            let a = retention_shift(&p, s, n_pe, t).unwrap().0;
            let b = retention_shift(&p, s, n_pe, t + dt).unwrap().0;
            prop_assert!(b > a, "state {} {} !> {}", s, b, a);
        }
    }

    #[test]
    fn moments_are_finite_with_positive_variance(
        tlc in any::<bool>(), gamma in any::<bool>(), n_pe in 0.0f64..2e4, t in 0.0f64..2e4,
    ) {
        let m = state_moments(&params(tlc), &OperatingPoint::new(n_pe, t, family(gamma)));
        prop_assert!(m.means.iter().all(|x| x.is_finite()));
        prop_assert!((0..m.num_states()).all(|s| m.std(s) > 0.0 && m.std(s).is_finite()));
    }

    #[test]
    fn sampling_is_bit_identical_per_seed(
        tlc in any::<bool>(), gamma in any::<bool>(), seed in any::<u64>(), n_pe in 0.0f64..2e4, t in 0.0f64..2e4,
    ) {
        let p = params(tlc);
        let labels: Vec<Symbol> = (0..64).map(|i| (i % p.num_states()) as Symbol).collect();
        let op = OperatingPoint::new(n_pe, t, family(gamma));
        let a = sample_voltages(&p, &labels, &op, seed).unwrap();
        let b = sample_voltages(&p, &labels, &op, seed).unwrap();
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn error_rates_are_ordered_probabilities(
        tlc in any::<bool>(), n_pe in 0.0f64..2e4, t in 0.0f64..2e4,
        jitter in proptest::collection::vec(-0.15f64..0.15, 7),
    ) {
        let p = params(tlc);
        let m = state_moments(&p, &OperatingPoint::gaussian(n_pe, t));
        let base = optimal_thresholds(&m).unwrap();
        let mut th: Vec<f64> = base.as_slice().iter().zip(&jitter).map(|(a, b)| a + b).collect();
        th.sort_by(f64::total_cmp);
        prop_assume!(th.windows(2).all(|w| w[0] < w[1]));
        let th = ThresholdSet::new(th).unwrap();
        let gray = GrayMap::for_bits(p.bits_per_cell);
        let s = ser(&m, &th).unwrap();
        let adj = ber_adjacent(&m, &th, p.bits_per_cell).unwrap();
        let two = ber_two_bit(&m, &th, &gray).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(adj <= two + 1e-15 && two <= s + 1e-15, "{} {} {}", adj, two, s);
    }

    #[test]
    fn reoptimized_thresholds_never_lose_to_stale_ones(
        tlc in any::<bool>(), n_pe in 0.0f64..2e4, t in 0.0f64..2e4,
    ) {
        let p = params(tlc);
        let stale = optimal_thresholds(&state_moments(&p, &OperatingPoint::fresh())).unwrap();
        let m = state_moments(&p, &OperatingPoint::gaussian(n_pe, t));
        let fresh = optimal_thresholds(&m).unwrap();
        prop_assert!(ser(&m, &fresh).unwrap() <= ser(&m, &stale).unwrap() * (1.0 + 1e-9));
    }

    #[test]
    fn kmeans_objective_never_increases(seed in any::<u64>(), n_pe in 0.0f64..2e4, t in 0.0f64..2e4) {
        let p = ChannelParams::mlc();
        let labels: Vec<Symbol> = (0..2000).map(|i| (i % 4) as Symbol).collect();
        let v = sample_voltages(&p, &labels, &OperatingPoint::gaussian(n_pe, t), seed).unwrap();
        let init = state_moments(&p, &OperatingPoint::fresh()).means;
        let r = kmeans(&v, &init, &KmeansConfig::default()).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(r.centroids.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.assignments.iter().all(|&a| (a as usize) < 4));
        prop_assert!(r.objective >= 0.0);
    }

    #[test]
    fn alignment_is_an_exact_per_cluster_translation(
        v in proptest::collection::vec(0.0f64..5.0, 1..200),
        src in proptest::collection::vec(0.0f64..5.0, 4),
        tgt in proptest::collection::vec(0.0f64..5.0, 4),
    ) {
        let labels: Vec<Symbol> = (0..v.len()).map(|i| (i % 4) as Symbol).collect();
        let means = DomainMeans { source: src.clone(), target: tgt.clone() };
        let aligned = align_target_to_source(&v, &labels, &means).unwrap();
        for ((a, x), &l) in aligned.iter().zip(&v).zip(&labels) {
            let c = l as usize;
            prop_assert!((a - x - (src[c] - tgt[c])).abs() < 1e-12);
        }
        let swapped = DomainMeans { source: tgt, target: src };
        let back = align_target_to_source(&aligned, &labels, &swapped).unwrap();
        prop_assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn gray_bit_mapping_round_trips(tlc in any::<bool>(), raw in proptest::collection::vec(any::<u8>(), 0..100)) {
        let bits = if tlc { 3 } else { 2 };
        let gray = GrayMap::for_bits(bits);
        let symbols: Vec<Symbol> = raw.iter().map(|&s| (s as usize % gray.num_states()) as Symbol).collect();
        let b = symbols_to_bits(&symbols, &gray).unwrap();
        prop_assert_eq!(bits_to_symbols(&b, &gray).unwrap(), symbols);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn converged_decodes_have_zero_syndrome(flips in proptest::collection::vec(0usize..4544, 0..120)) {
        let h = ParityCheckMatrix::default_code();
        let mut word = vec![0u8; h.n()];
        for f in flips {
            word[f] ^= 1;
        }
        let out = nms_decode(&h, &hard_llr(&word), 0.75, 20);
        if out.converged {
            prop_assert!(h.is_codeword(&out.bits));
        }
    }
}
