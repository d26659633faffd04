use pec_core::exponents::*;
use pec_core::probsim::{entropy_of, Channel, JointPmf, Pmf};
use pec_core::rng::rng_from_seed;
use rand::Rng;

const F_BSC01: f64 = 0.134_083_498_896_176_88;
const G_BSC01: f64 = 0.092_636_534_623_802_88;

fn bsc_joint(p: f64) -> JointPmf {
    JointPmf::from_input_and_channel(&Pmf::uniform(2), &Channel::bsc(p).unwrap()).unwrap()
}

fn coarse(refine: bool) -> SurfaceSettings {
    SurfaceSettings {
        grid: 8,
        refine,
        cd: CdSettings::default(),
    }
}

/// `F` on the step-1/8 `(mu, alpha)` grid with the inner minimum replaced by
/// a step-1/40 grid over `(q_U, q_{Z|U})`, both binary.
fn dense_grid_f(p_kz: &JointPmf, r_a: f64, r: f64) -> f64 {
    let problem = OmegaProblem::from_joint(p_kz).unwrap();
    let (cond, p_z) = (problem.p_k_given_z(), problem.p_z());
    let steps = 40;
    let qs: Vec<JointPmf> = (0..=steps)
        .flat_map(|a| (0..=steps).flat_map(move |b| (0..=steps).map(move |c| (a, b, c))))
        .map(|(a, b, c)| {
            let (u, z0, z1) = (a as f64 / steps as f64, b as f64 / steps as f64, c as f64 / steps as f64);
            JointPmf::new(vec![2, 2], vec![u * z0, u * (1.0 - z0), (1.0 - u) * z1, (1.0 - u) * (1.0 - z1)]).unwrap()
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for i in 0..=8 {
        for j in 0..=8 {
            let (mu, alpha) = (i as f64 / 8.0, j as f64 / 8.0);
            let inner = qs.iter().map(|q| omega(mu, alpha, q, &cond, &p_z)).fold(f64::INFINITY, f64::min);
            let w = alpha * (1.0 - mu);
            best = best.max((inner - alpha * (mu * r_a + (1.0 - mu) * r)) / (2.0 + w));
        }
    }
    best
}

#[test]
fn f_bsc_fixture_against_dense_grid() {
    let joint = bsc_joint(0.1);
    let oracle = dense_grid_f(&joint, 0.05, 0.05);
    let mut plain = ExponentSurface::new(OmegaProblem::from_joint(&joint).unwrap(), coarse(false)).unwrap();
    let coarse_f = plain.at(0.05, 0.05).unwrap().0.value;
    // The optimizer's inner minimum is at most the grid's.
    assert!(coarse_f <= oracle + 1e-9, "{coarse_f} vs {oracle}");
    assert!(coarse_f >= oracle - 2e-3, "{coarse_f} vs {oracle}");

    let mut full = ExponentSurface::new(OmegaProblem::from_joint(&joint).unwrap(), SurfaceSettings::default()).unwrap();
    let (f, g) = full.at(0.05, 0.05).unwrap();
    assert!((f.value - F_BSC01).abs() < 1e-9, "{}", f.value);
    assert!((g.value - G_BSC01).abs() < 1e-9, "{}", g.value);
    assert!(f.value >= coarse_f - 1e-12);
    assert_eq!(f.bound_direction, BoundDirection::Heuristic);
    for (c, is_g, v) in [(&f.certificate, false, f.value), (&g.certificate, true, g.value)] {
        assert!((full.reevaluate(c, 0.05, 0.05, is_g).unwrap() - v).abs() < 1e-8);
    }
}

#[test]
fn g_is_at_least_a_third_of_f_on_random_joints() {
    let mut rng = rng_from_seed(404);
    for _ in 0..3 {
        let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..1.0)).collect();
        let joint = JointPmf::new(vec![2, 2], Pmf::from_weights(&w).unwrap().probs().to_vec()).unwrap();
        let mut s = ExponentSurface::new(OmegaProblem::from_joint(&joint).unwrap(), coarse(true)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let (f, g) = s.at(0.1 * i as f64, 0.1 * j as f64).unwrap();
                assert!(f.value >= 0.0 && g.value >= 0.0);
                assert!(g.value >= f.value / 3.0 - 1e-9);
            }
        }
    }
}

#[test]
fn outer_g_search_never_exceeds_the_true_joint() {
    let settings = GSearchSettings {
        lattice: 4,
        polish_levels: 1,
        polish_steps: 3,
        light: SurfaceSettings::light(),
        full: coarse(true),
    };
    let w = Channel::bsc(0.2).unwrap();
    let mut search = GSearch::new(&Pmf::uniform(2), &w, settings).unwrap();
    let mut fixed = ExponentSurface::new(OmegaProblem::from_key_and_channel(&Pmf::uniform(2), &w).unwrap(), coarse(true))
        .unwrap();
    for (r_a, r) in [(0.0, 0.1), (0.05, 0.05), (0.2, 0.3)] {
        let g = search.at(r_a, r).unwrap();
        let at_truth = fixed.at(r_a, r).unwrap().1.value;
        assert!(g.value <= at_truth + 1e-12);
        assert!(g.value >= 0.0);
        assert_eq!(g.bound_direction, BoundDirection::BestFoundUpper);
        let Certificate::Joint { joint, divergence, .. } = &g.certificate else {
            panic!("joint certificate expected")
        };
        assert!((joint.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(*divergence >= 0.0);
    }
}

#[test]
fn bsc_region_fixture() {
    let b = rate_region_boundary(&Pmf::uniform(2), &Channel::bsc(0.1).unwrap(), &RegionSettings::default()).unwrap();
    assert_eq!(b.points.len(), 12);
    let h = |p: f64| entropy_of(&[p, 1.0 - p]);
    assert!((b.lines[0].r - h(0.1)).abs() < 1e-12 && (b.lines[0].r_a - 2f64.ln()).abs() < 1e-12);
    assert!((b.lines[1].level - 0.325_776_120_572_008_28).abs() < 1e-9);
    assert!((b.lines[29].level - 0.633_876_547_892_522_6).abs() < 1e-9);
    assert!((b.lines[32].level - 2f64.ln()).abs() < 1e-12);
    assert!(b.lines[45].r_a == 0.0 && (b.lines[45].r - 2f64.ln()).abs() < 1e-12);
    let props = b.properties();
    assert!(props.holds(), "{props:?}");
    for p in &b.points {
        assert!(!inner_region_test(p.r_a, p.r, &Pmf::uniform(2), &b));
    }
}

#[test]
fn f_positive_where_certified_outside_region() {
    let p_k = Pmf::uniform(2);
    let w = Channel::bsc(0.1).unwrap();
    let b = rate_region_boundary(&p_k, &w, &RegionSettings::default()).unwrap();
    let mut s = ExponentSurface::new(OmegaProblem::from_key_and_channel(&p_k, &w).unwrap(), coarse(true)).unwrap();
    let mut checked = 0;
    for i in 0..6 {
        for j in 0..6 {
            let (r_a, r) = (0.1 * i as f64, 0.1 * j as f64);
            if b.outside_by(r_a, r, 0.05) {
                checked += 1;
                assert!(s.at(r_a, r).unwrap().0.value > 0.0, "({r_a}, {r})");
            }
        }
    }
    assert!(checked >= 5);
}

#[test]
fn reliability_exponent_on_random_binary_sources() {
    let mut rng = rng_from_seed(99);
    for _ in 0..10 {
        let p1 = rng.gen_range(0.02..0.48);
        let p = Pmf::new(vec![1.0 - p1, p1]).unwrap();
        let h = entropy_of(p.probs());
        assert_eq!(reliability_exponent(h, &p).unwrap().value, 0.0);
        let e = reliability_exponent(h + 0.1, &p).unwrap();
        assert!(e.value > 0.0);
        assert_eq!(e.bound_direction, BoundDirection::CertifiedLower);
        let grid = (0..=100_000)
            .map(|i| reliability_objective(h + 0.1, &[1.0 - i as f64 * 1e-5, i as f64 * 1e-5], p.probs()))
            .fold(f64::INFINITY, f64::min);
        assert!((e.value - grid).abs() < 1e-4 && e.value <= grid + 1e-12);
    }
}
