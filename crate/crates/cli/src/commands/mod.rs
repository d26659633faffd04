pub mod exponent;
pub mod leakage;
pub mod region;
pub mod simulate;
pub mod verify;

use crate::artifact::Run;
use crate::error::CliError;

pub fn run(name: &str, ctx: &Run) -> Result<(), CliError> {
    match name {
        "region" => region::run(ctx),
        "exponent" => exponent::run(ctx),
        "simulate" => simulate::run(ctx),
        "leakage" => leakage::run(ctx),
        "verify" => verify::run(ctx),
        other => Err(CliError::Config(format!("unknown subcommand {other}"))),
    }
}
