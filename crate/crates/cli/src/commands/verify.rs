//! Inequality oracle suite. Every row carries both sides and the margin
//! `rhs - lhs`; a check passes when every margin clears its tolerance.

use pec_core::adversary::{
    leakage_report, sampled_zeta_stats, type_as_joint, type_count_factor, upsilon, upsilon_conditional,
    AdversaryEncoder, AdversaryScheme, UpsilonTable,
};
use pec_core::cipher::CipherSystem;
use pec_core::exponents::{CdSettings, ExponentSurface, OmegaProblem, SurfaceSettings};
use pec_core::ffield::sample_affine_encoder;
use pec_core::probsim::{Channel, JointPmf, Pmf};
use pec_core::rng::{derive_seed, stream, stream_rng};
use pec_core::types_method::{enumerate_joint_types, Counts};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::artifact::{num, Run};
use crate::config::UpsilonForm;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
struct Row {
    check: &'static str,
    case: String,
    lhs: f64,
    rhs: f64,
    margin: f64,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct Summary {
    check: &'static str,
    informational: bool,
    tolerance: f64,
    cases: usize,
    failures: usize,
    worst_margin: f64,
}

#[derive(Default)]
struct Suite {
    rows: Vec<Row>,
    summaries: Vec<Summary>,
}

impl Suite {
    fn check(&mut self, check: &'static str, informational: bool, tolerance: f64, cases: Vec<(String, f64, f64)>) {
        let mut failures = 0;
        let mut worst = f64::INFINITY;
        for (case, lhs, rhs) in cases {
            let margin = rhs - lhs;
            let pass = margin >= -tolerance;
            failures += usize::from(!pass);
            worst = worst.min(margin);
            self.rows.push(Row {
                check,
                case,
                lhs,
                rhs,
                margin,
                pass,
            });
        }
        self.summaries.push(Summary {
            check,
            informational,
            tolerance,
            cases: self.rows.iter().filter(|r| r.check == check).count(),
            failures,
            worst_margin: worst,
        });
    }
}

fn random_pmf<R: Rng>(rng: &mut R, size: usize) -> Pmf {
    let w: Vec<f64> = (0..size).map(|_| rng.gen_range(0.05..1.0)).collect();
    Pmf::from_weights(&w).expect("positive weights")
}

fn random_channel<R: Rng>(rng: &mut R, a: usize, b: usize) -> Channel {
    Channel::new((0..a).map(|_| random_pmf(rng, b)).collect()).expect("rows are pmfs")
}

pub fn run(ctx: &Run) -> Result<(), CliError> {
    let vc = &ctx.config.verify;
    let f2 = pec_core::ffield::FieldSpec::binary();
    let mut suite = Suite::default();

    // Leakage below the divergence bound, and the divergence bound below its
    // type-class decomposition.
    let mut divergence = Vec::new();
    let mut chain = Vec::new();
    for i in 0..vc.systems as u64 {
        let mut rng = stream_rng(ctx.seed, stream::SYSTEM, i);
        let n = rng.gen_range(2..=vc.max_n.max(2));
        let m = rng.gen_range(1..=n);
        let enc = sample_affine_encoder(n, m, f2, &mut rng)?;
        let sys = CipherSystem::new(
            random_pmf(&mut rng, 2),
            random_pmf(&mut rng, 2),
            random_channel(&mut rng, 2, 2),
            enc,
            ctx.budget,
        )?;
        for scheme in AdversaryScheme::ALL {
            let adv = AdversaryEncoder::new(scheme, n, 2, vc.r_a, derive_seed(ctx.seed, stream::ADVERSARY, i))?;
            let rep = leakage_report(&sys, &adv, true)?;
            let case = format!("system={i} n={n} m={m} scheme={}", scheme.name());
            divergence.push((case.clone(), rep.exact_mi, rep.divergence_bound));
            chain.push((case, rep.divergence_bound, rep.type_chain_bound.expect("requested")));
        }
    }
    suite.check("leakage_below_divergence_bound", false, 1e-9, divergence);
    suite.check("divergence_below_type_chain", false, 1e-9, chain);

    // Mean of zeta over sampled encoders against Upsilon.
    let (n, m) = (vc.zeta_n, vc.zeta_m);
    let rate = m as f64 * 2f64.ln() / n as f64;
    let mut verbatim = Vec::new();
    let mut conditional = Vec::new();
    for (s, scheme) in AdversaryScheme::ALL.into_iter().enumerate() {
        let adv = AdversaryEncoder::new(scheme, n, 2, vc.r_a, derive_seed(ctx.seed, stream::ADVERSARY, 1000 + s as u64))?;
        for (j, jt) in enumerate_joint_types(n, (2, 2))?.iter().enumerate() {
            let seed = derive_seed(ctx.seed, stream::ENCODER, (s * 1_000_000 + j) as u64);
            let (mean, sd) = sampled_zeta_stats(n, m, f2, &adv, jt, vc.zeta_samples, seed, ctx.budget)?;
            let slack = 3.0 * sd / (vc.zeta_samples as f64).sqrt();
            let case = format!("n={n} m={m} scheme={} jt={:?}", scheme.name(), jt.counts());
            verbatim.push((case.clone(), mean, upsilon(rate, &adv, jt, ctx.budget)? + slack));
            conditional.push((case, mean, upsilon_conditional(rate, &adv, jt, ctx.budget)? + slack));
        }
    }
    let (main, info) = match vc.upsilon_form {
        UpsilonForm::Verbatim => (verbatim, conditional),
        UpsilonForm::Conditional => (conditional, verbatim),
    };
    let other = match vc.upsilon_form {
        UpsilonForm::Verbatim => "zeta_mean_below_upsilon_conditional",
        UpsilonForm::Conditional => "zeta_mean_below_upsilon_verbatim",
    };
    let name = match vc.upsilon_form {
        UpsilonForm::Verbatim => "zeta_mean_below_upsilon",
        UpsilonForm::Conditional => "zeta_mean_below_upsilon_conditional",
    };
    suite.check(name, false, 0.0, main);
    suite.check(other, true, 0.0, info);

    // Upsilon at a joint type against (n+1)^{|X||Z|} times its i.i.d. average.
    let mut factor = Vec::new();
    for n in 1..=vc.type_factor_max_n {
        for scheme in AdversaryScheme::ALL {
            let adv = AdversaryEncoder::new(scheme, n, 2, vc.r_a, derive_seed(ctx.seed, stream::ADVERSARY, n as u64))?;
            let table = UpsilonTable::new(&adv, 2, ctx.budget)?;
            for (i, jt) in table.family().iter().enumerate() {
                for &r in &vc.type_factor_rates {
                    let rhs = type_count_factor(n, (2, 2)) * table.upsilon_iid(r, &type_as_joint(jt))?;
                    let case = format!("n={n} scheme={} jt={:?} R={}", scheme.name(), jt.counts(), num(r));
                    factor.push((case, table.upsilon(r, i), rhs));
                }
            }
        }
    }
    suite.check("upsilon_type_factor", false, 1e-12, factor);

    // Upsilon under i.i.d. draws against 7 nR e^{n tau_n} e^{-n G}.
    let surface_settings = SurfaceSettings {
        grid: vc.surface_grid,
        refine: true,
        cd: CdSettings::default(),
    };
    let mut exp_bound = Vec::new();
    for &p in &vc.bsc {
        let joint = JointPmf::from_input_and_channel(&Pmf::uniform(2), &Channel::bsc(p)?)?;
        let mut surface = ExponentSurface::new(OmegaProblem::from_joint(&joint)?, surface_settings)?;
        for &n in &vc.exponent_n {
            for scheme in AdversaryScheme::ALL {
                for &r_a in &vc.exponent_r_a {
                    let adv = AdversaryEncoder::new(scheme, n, 2, r_a, derive_seed(ctx.seed, stream::ADVERSARY, n as u64))?;
                    let table = UpsilonTable::new(&adv, 2, ctx.budget)?;
                    for &r in &vc.exponent_r {
                        let g = surface.at(r_a, r)?.1.value;
                        let nf = n as f64;
                        let rhs = 7.0 * nf * r * type_count_factor(n, (2, 2)) * (-nf * g).exp();
                        let case = format!("bsc={} n={n} scheme={} R_A={} R={}", num(p), scheme.name(), num(r_a), num(r));
                        exp_bound.push((case, table.upsilon_iid(r, &joint)?, rhs));
                    }
                }
            }
        }
    }
    suite.check("upsilon_exponential_bound", false, 0.0, exp_bound);

    // G at a joint against a third of F at the same joint.
    let mut linkage = Vec::new();
    for i in 0..vc.joints as u64 {
        let mut rng = stream_rng(ctx.seed, stream::SYSTEM, 10_000 + i);
        let joint = JointPmf::new(vec![2, 2], random_pmf(&mut rng, 4).probs().to_vec())?;
        let mut surface = ExponentSurface::new(OmegaProblem::from_joint(&joint)?, surface_settings)?;
        for &r_a in &vc.exponent_r_a {
            for &r in &vc.exponent_r {
                let (f, g) = surface.at(r_a, r)?;
                linkage.push((format!("joint={i} R_A={} R={}", num(r_a), num(r)), f.value / 3.0, g.value));
            }
        }
    }
    suite.check("g_at_least_third_of_f", false, 1e-9, linkage);

    let failed: Vec<&str> = suite
        .summaries
        .iter()
        .filter(|s| !s.informational && s.failures > 0)
        .map(|s| s.check)
        .collect();
    let status = if failed.is_empty() { "ok" } else { "fail" };
    let rows: Vec<Vec<String>> = suite
        .rows
        .iter()
        .map(|r| vec![r.check.to_string(), r.case.clone(), num(r.lhs), num(r.rhs), num(r.margin), r.pass.to_string()])
        .collect();
    let csv = ctx.write_csv("verify.csv", &["check", "case", "lhs", "rhs", "margin", "pass"], &rows)?;
    let report = ctx.write_json(
        "verify.json",
        &json!({ "status": status, "checks": suite.summaries, "rows": suite.rows }),
    )?;
    ctx.finish(&[csv, report], json!({ "status": status }))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
