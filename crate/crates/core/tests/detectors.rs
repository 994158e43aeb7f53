use cran_uad::detectors::{fuse_with, qf_detect_from, qf_quantize, sample_sigma, QuantizedFronthaul};
use cran_uad::quantizer::QuantizerSpec;
use cran_uad::{
    cu_detect_unquantized, dtf_fuse, dtf_local, dtf_local_all, qf_detect, threshold_test, FronthaulBudget, GampOptions,
    LlrCalibration, Scenario, Scheme, SystemConfig,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn scenario(n: usize, m: usize, r: usize, p: f64, snr_db: f64, seed: u64) -> Scenario {
    let cfg = SystemConfig::dense(n, m, r, p, snr_db).unwrap();
    Scenario::draw(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn qf_gap_to_unquantized_shrinks_with_bits() {
    let opts = GampOptions::default();
    let s = scenario(16, 32, 2, 0.2, 0.0, 1);
    let reference = cu_detect_unquantized(&s, &opts).unwrap().llr;
    let gaps: Vec<f64> = [4, 8, 16, 32]
        .iter()
        .map(|&b| max_gap(&qf_detect(&s, &FronthaulBudget::new(b, 32, 16), &opts).unwrap().llr, &reference))
        .collect();
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
    // The ±3σ overload bins keep a floor that extra bits cannot remove.
    assert!(gaps[3] < 1.0, "{gaps:?}");
}

#[test]
fn unclipped_fine_quantizer_matches_unquantized() {
    let opts = GampOptions::default();
    let s = scenario(16, 32, 2, 0.2, 0.0, 1);
    let reference = cu_detect_unquantized(&s, &opts).unwrap().llr;
    let levels = 1usize << 16;
    let mut quantizers = Vec::new();
    let mut bins = Vec::new();
    for r in 0..2 {
        let sigma = sample_sigma(&s, r);
        let q = QuantizerSpec::new(levels, -10.0 * sigma, 20.0 * sigma / levels as f64).unwrap();
        for w in s.received.column(r).iter() {
            bins.push(q.quantize(w.re));
            bins.push(q.quantize(w.im));
        }
        quantizers.push(q);
    }
    let llr = qf_detect_from(&s, &QuantizedFronthaul { quantizers, bins }, &opts).unwrap().llr;
    assert!(max_gap(&llr, &reference) < 0.05);
}

#[test]
fn null_scenario_stays_below_prior_plus_margin() {
    let p = 0.1;
    let mut s = scenario(32, 32, 2, p, 0.0, 2);
    s.activity.fill(false);
    s.received = s.noise.clone();
    let llr = cu_detect_unquantized(&s, &GampOptions::default()).unwrap().llr;
    let max = llr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(max < logit(p) + 2.0, "max llr {max}");
}

#[test]
fn rrhs_with_identical_inputs_report_identical_llrs() {
    let mut s = scenario(8, 16, 2, 0.25, 5.0, 3);
    let first = s.received.column(0).clone_owned();
    s.received.set_column(1, &first);
    let local = dtf_local_all(&s, &GampOptions::default()).unwrap();
    assert_eq!(local[0], local[1]);
}

#[test]
fn fusion_is_invariant_to_rrh_order() {
    let s = scenario(8, 16, 3, 0.25, 5.0, 4);
    let local = dtf_local_all(&s, &GampOptions::default()).unwrap();
    let cal = LlrCalibration::from_samples(&local.concat()).unwrap();
    let budget = FronthaulBudget::new(4, 16, 8);
    let forward = dtf_fuse(&local, &budget, Some(&cal)).unwrap();
    let reversed: Vec<Vec<f64>> = local.iter().rev().cloned().collect();
    let backward = dtf_fuse(&reversed, &budget, Some(&cal)).unwrap();
    for (a, b) in forward.iter().zip(&backward) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn fusion_sums_representatives() {
    let q = QuantizerSpec::new(4, -4.0, 2.0).unwrap();
    let fused = fuse_with(&[vec![-3.5, 0.1], vec![1.9, 9.0]], &q).unwrap();
    assert_eq!(fused, vec![-3.0 + 1.0, 1.0 + 3.0]);
}

#[test]
fn orthogonal_noiseless_pair_is_resolved() {
    // Two UEs on orthogonal signatures; only the first is active.
    let m = 4;
    let mut s = scenario(2, m, 1, 0.3, 60.0, 5);
    let a = [1.0, 1.0, 1.0, 1.0];
    let b = [1.0, -1.0, 1.0, -1.0];
    for row in 0..m {
        s.signatures[(row, 0)] = Complex64::new(a[row], 0.0);
        s.signatures[(row, 1)] = Complex64::new(b[row], 0.0);
    }
    s.activity = vec![true, false];
    s.fading[(0, 0)] = Complex64::new(0.6, 0.8);
    s.noise.fill(Complex64::new(0.0, 0.0));
    s.received = s.recompute_received();
    let gamma = s.config.gamma_column(0);
    let llr = dtf_local(&s.received_at(0), &s.signatures, &gamma, 0.3, s.noise_var, &GampOptions::default()).unwrap();
    assert!(llr[0] > 10.0 && llr[1] < 0.0, "{llr:?}");
    let est = threshold_test(&llr, 0.0, Scheme::Dtf);
    assert_eq!(est.lambda_hat, vec![true, false]);
}

#[test]
fn qf_fills_its_budget_and_dtf_stays_within_it() {
    let s = scenario(16, 32, 3, 0.2, 0.0, 6);
    for bits in [2, 4, 6, 8, 10] {
        let budget = FronthaulBudget::new(bits, 32, 16);
        let fronthaul = qf_quantize(&s, &budget).unwrap();
        assert_eq!(fronthaul.bits_per_rrh(), vec![budget.capacity(); 3]);
        assert!(budget.dtf_bits_per_rrh().unwrap() <= budget.capacity());
    }
}

#[test]
fn dtf_without_calibration_is_rejected() {
    assert!(dtf_fuse(&[vec![0.0]], &FronthaulBudget::new(4, 16, 1), None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permuting_rrhs_permutes_local_llrs(seed in any::<u64>()) {
        let s = scenario(6, 12, 3, 0.3, 3.0, seed);
        let mut t = s.clone();
        for r in 0..3 {
            t.received.set_column(r, &s.received.column(2 - r));
        }
        let opts = GampOptions::default();
        let a = dtf_local_all(&s, &opts).unwrap();
        let b = dtf_local_all(&t, &opts).unwrap();
        for r in 0..3 {
            prop_assert_eq!(&a[r], &b[2 - r]);
        }
    }

    #[test]
    fn threshold_test_is_monotone(llr in proptest::collection::vec(-20.0..20.0f64, 1..32), t in -20.0..20.0f64, d in 0.0..5.0f64) {
        let low = threshold_test(&llr, t, Scheme::Qf);
        let high = threshold_test(&llr, t + d, Scheme::Qf);
        for (l, h) in low.lambda_hat.iter().zip(&high.lambda_hat) {
            prop_assert!(*l || !*h);
        }
    }
}
