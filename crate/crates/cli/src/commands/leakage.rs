use pec_core::adversary::{leakage_report, AdversaryEncoder};
use pec_core::cipher::{compressed_length, CipherSystem};
use pec_core::ffield::sample_affine_encoder;
use pec_core::rng::{derive_seed, stream, stream_rng};
use serde_json::json;

use crate::artifact::{num, Run};
use crate::error::CliError;

pub fn run(ctx: &Run) -> Result<(), CliError> {
    let sys = ctx.config.system()?;
    let lc = &ctx.config.leakage;
    let mut rows = Vec::new();
    for &n in &lc.n {
        let m = compressed_length(n, lc.rate, sys.field);
        let mut rng = stream_rng(derive_seed(ctx.seed, stream::SYSTEM, n as u64), stream::ENCODER, 0);
        let enc = sample_affine_encoder(n, m, sys.field, &mut rng)?;
        let system = CipherSystem::new(sys.p_x.clone(), sys.p_k.clone(), sys.w.clone(), enc, ctx.budget)?;
        for &scheme in &lc.schemes {
            for &r_a in &lc.r_a {
                let adv_seed = derive_seed(ctx.seed, stream::ADVERSARY, n as u64);
                let adv = AdversaryEncoder::new(scheme, n, sys.w.out_size(), r_a, adv_seed)?;
                let rep = leakage_report(&system, &adv, lc.chain)?;
                let (chain, chain_margin) = match rep.type_chain_bound {
                    Some(c) => (num(c), num(c - rep.divergence_bound)),
                    None => (String::new(), String::new()),
                };
                rows.push(vec![
                    n.to_string(),
                    m.to_string(),
                    scheme.name().to_string(),
                    num(r_a),
                    rep.message_count.to_string(),
                    num(rep.exact_mi),
                    num(rep.divergence_bound),
                    num(rep.margin()),
                    chain,
                    chain_margin,
                ]);
            }
        }
    }
    let header = [
        "n",
        "m",
        "scheme",
        "R_A",
        "message_count",
        "exact_leakage",
        "divergence_bound",
        "margin",
        "type_chain_bound",
        "chain_margin",
    ];
    let csv = ctx.write_csv("leakage.csv", &header, &rows)?;
    ctx.finish(&[csv], json!({}))
}
