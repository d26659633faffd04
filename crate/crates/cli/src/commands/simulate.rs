use pec_core::cipher::{best_of_sampled, compressed_length, monte_carlo_error, CipherSystem};
use pec_core::exponents::{delta_terms, reliability_exponent};
use pec_core::ffield::{AffineEncoder, FieldMatrix};
use pec_core::rng::{derive_seed, stream};
use serde_json::json;

use crate::artifact::{num, Run};
use crate::config::EncoderChoice;
use crate::error::CliError;

pub fn run(ctx: &Run) -> Result<(), CliError> {
    let sys = ctx.config.system()?;
    let sc = &ctx.config.simulate;
    let q = sys.field.size();
    let mut rows = Vec::new();
    for &n in &sc.n {
        let (m, encoder, selection, score) = match sc.encoder {
            EncoderChoice::Identity => {
                let enc = AffineEncoder::linear_only(FieldMatrix::identity(sys.field, n)?)?;
                (n, enc, "identity".to_string(), String::new())
            }
            EncoderChoice::Sampled => {
                let m = compressed_length(n, sc.rate, sys.field);
                let template = CipherSystem::new(
                    sys.p_x.clone(),
                    sys.p_k.clone(),
                    sys.w.clone(),
                    AffineEncoder::linear_only(FieldMatrix::zeros(sys.field, n, m)?)?,
                    ctx.budget,
                )?;
                let seed = derive_seed(ctx.seed, stream::SYSTEM, n as u64);
                let (enc, s, how) = best_of_sampled(&template, sc.candidates, seed, sc.pilot_trials)?;
                let how = serde_json::to_value(how)?.as_str().unwrap_or_default().to_string();
                (m, enc, how, num(s))
            }
        };
        let system = CipherSystem::new(sys.p_x.clone(), sys.p_k.clone(), sys.w.clone(), encoder, ctx.budget)?;
        let mc = monte_carlo_error(&system, sc.trials, derive_seed(ctx.seed, stream::MC_TRIAL, n as u64))?;
        let actual_rate = m as f64 * (q as f64).ln() / n as f64;
        let e = reliability_exponent(actual_rate, &sys.p_x)?.value;
        let d3 = delta_terms(n, q, sys.w.out_size(), actual_rate)?.delta3;
        rows.push(vec![
            n.to_string(),
            m.to_string(),
            num(actual_rate),
            selection,
            score,
            mc.trials.to_string(),
            mc.errors.to_string(),
            num(mc.estimate),
            num(mc.ci_low),
            num(mc.ci_high),
            num(e),
            num(d3),
            num((-(n as f64) * (e - d3)).exp()),
        ]);
    }
    let header = [
        "n", "m", "rate", "selection", "selection_score", "trials", "errors", "p_e", "ci_low", "ci_high", "E",
        "delta3", "reference",
    ];
    let csv = ctx.write_csv("simulate.csv", &header, &rows)?;
    ctx.finish(&[csv], json!({ "encoder": sc.encoder }))
}
