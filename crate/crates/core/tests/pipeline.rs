use pec_core::adversary::*;
use pec_core::cipher::*;
use pec_core::ffield::{sample_affine_encoder, AffineEncoder, FieldMatrix, FieldSpec};
use pec_core::probsim::{sample_iid, Channel, Pmf};
use pec_core::rng::rng_from_seed;
use pec_core::types_method::enumerate_joint_types;
use proptest::prelude::*;
use rand::Rng;

const BUDGET: u64 = 1 << 24;

fn random_pmf<R: Rng>(rng: &mut R, size: usize) -> Pmf {
    let w: Vec<f64> = (0..size).map(|_| rng.gen_range(0.05..1.0)).collect();
    Pmf::from_weights(&w).unwrap()
}

fn random_channel<R: Rng>(rng: &mut R, a: usize, b: usize) -> Channel {
    Channel::new((0..a).map(|_| random_pmf(rng, b)).collect()).unwrap()
}

#[test]
fn sender_to_sink_round_trip() {
    let f = FieldSpec::new(3).unwrap();
    let mut rng = rng_from_seed(1);
    let n = 6;
    let enc = AffineEncoder::new(FieldMatrix::identity(f, n).unwrap(), vec![1, 2, 0, 0, 1, 2]).unwrap();
    let p = Pmf::new(vec![0.6, 0.3, 0.1]).unwrap();
    for _ in 0..50 {
        let x = sample_iid(&p, n, &mut rng);
        let k = sample_iid(&Pmf::uniform(3), n, &mut rng);
        let c = encrypt(f, &x, &k).unwrap();
        let c_tilde = encode_ciphertext(&enc, &c).unwrap();
        let x_tilde = strip_key(&enc, &c_tilde, &k).unwrap();
        assert_eq!(universal_decode(&enc, &x_tilde, BUDGET).unwrap(), x);
        assert_eq!(decrypt(f, &c, &k).unwrap(), x);
    }
}

#[test]
fn one_time_pad_leaks_nothing_at_zero_adversary_rate() {
    let mut rng = rng_from_seed(2);
    let f = FieldSpec::binary();
    for _ in 0..10 {
        let n = rng.gen_range(2..6);
        let enc = AffineEncoder::new(FieldMatrix::identity(f, n).unwrap(), (0..n).map(|_| rng.gen_range(0..2)).collect())
            .unwrap();
        let sys = CipherSystem::new(random_pmf(&mut rng, 2), Pmf::uniform(2), random_channel(&mut rng, 2, 2), enc, BUDGET)
            .unwrap();
        for scheme in AdversaryScheme::ALL {
            let adv = AdversaryEncoder::new(scheme, n, 2, 0.0, 3).unwrap();
            assert!(exact_leakage(&sys, &adv).unwrap().abs() <= 1e-12);
        }
    }
}

#[test]
fn leakage_stays_below_divergence_and_chain_bounds() {
    let mut rng = rng_from_seed(3);
    let f = FieldSpec::binary();
    for _ in 0..12 {
        let n = rng.gen_range(2..6);
        let m = rng.gen_range(1..=n);
        let enc = sample_affine_encoder(n, m, f, &mut rng).unwrap();
        let sys = CipherSystem::new(random_pmf(&mut rng, 2), random_pmf(&mut rng, 2), random_channel(&mut rng, 2, 2), enc, BUDGET)
            .unwrap();
        let ra = rng.gen_range(0.0..0.7);
        for scheme in AdversaryScheme::ALL {
            let adv = AdversaryEncoder::new(scheme, n, 2, ra, 11).unwrap();
            let rep = leakage_report(&sys, &adv, true).unwrap();
            assert!(rep.margin() >= -1e-9, "{rep:?}");
            assert!(rep.type_chain_bound.unwrap() >= rep.divergence_bound - 1e-9, "{rep:?}");
        }
    }
}

#[test]
fn upsilon_type_factor_inequality_holds_exactly() {
    for n in 1..=4 {
        for scheme in AdversaryScheme::ALL {
            let adv = AdversaryEncoder::new(scheme, n, 2, 0.3, 5).unwrap();
            let table = UpsilonTable::new(&adv, 2, BUDGET).unwrap();
            for (i, jt) in table.family().iter().enumerate() {
                for rate in [0.2, 0.5, std::f64::consts::LN_2] {
                    let lhs = table.upsilon(rate, i);
                    let rhs = type_count_factor(n, (2, 2)) * table.upsilon_iid(rate, &type_as_joint(jt)).unwrap();
                    assert!(lhs <= rhs * (1.0 + 1e-12), "n={n} {jt:?}: {lhs} > {rhs}");
                }
            }
        }
    }
}

#[test]
fn upsilon_table_agrees_with_direct_evaluation() {
    let adv = AdversaryEncoder::new(AdversaryScheme::TypeBin, 3, 2, 0.4, 0).unwrap();
    let table = UpsilonTable::new(&adv, 2, BUDGET).unwrap();
    let family = enumerate_joint_types(3, (2, 2)).unwrap();
    assert_eq!(table.family(), family.as_slice());
    for (i, jt) in family.iter().enumerate() {
        let direct = upsilon(0.5, &adv, jt, BUDGET).unwrap();
        assert!((table.upsilon(0.5, i) - direct).abs() <= 1e-12 * direct.max(1.0));
        let direct_c = upsilon_conditional(0.5, &adv, jt, BUDGET).unwrap();
        assert!((table.upsilon_conditional(0.5, i) - direct_c).abs() <= 1e-12 * direct_c.max(1.0));
    }
}

#[test]
fn best_of_sampled_is_never_worse_than_first_candidate() {
    let p_x = Pmf::new(vec![0.9, 0.1]).unwrap();
    let f = FieldSpec::binary();
    let n = 8;
    let m = compressed_length(n, 0.55, f);
    let template = CipherSystem::new(
        p_x.clone(),
        Pmf::uniform(2),
        Channel::bsc(0.1).unwrap(),
        AffineEncoder::linear_only(FieldMatrix::zeros(f, n, m).unwrap()).unwrap(),
        BUDGET,
    )
    .unwrap();
    let (_, best, score) = best_of_sampled(&template, 8, 17, 1000).unwrap();
    let (_, first, _) = best_of_sampled(&template, 1, 17, 1000).unwrap();
    assert_eq!(score, SelectionScore::Exact);
    assert!(best <= first);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decoder_recovers_minimum_entropy_member(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = rng_from_seed(seed);
        let f = FieldSpec::binary();
        let m = rng.gen_range(1..=n);
        let enc = sample_affine_encoder(n, m, f, &mut rng).unwrap();
        let x = sample_iid(&Pmf::new(vec![0.8, 0.2]).unwrap(), n, &mut rng);
        let xa = enc.linear(&x).unwrap();
        let d = universal_decode(&enc, &xa, BUDGET).unwrap();
        prop_assert_eq!(enc.linear(&d).unwrap(), xa.clone());
        let ones = |v: &[u16]| v.iter().filter(|&&s| s == 1).count();
        // Binary empirical entropy is symmetric around n/2.
        let dist = |c: usize| (2 * c as i64 - n as i64).abs();
        prop_assert!(dist(ones(&d)) >= dist(ones(&x)));
    }
}
