use pec_core::exponents::{rate_region_boundary, RegionSettings};
use serde_json::json;

use crate::artifact::{num, Run};
use crate::error::CliError;

pub fn run(ctx: &Run) -> Result<(), CliError> {
    let sys = ctx.config.system()?;
    let rc = &ctx.config.region;
    let settings = RegionSettings {
        lambdas: rc.lambdas,
        lambda_min: rc.lambda_min,
        lambda_max: rc.lambda_max,
        ..RegionSettings::default()
    };
    let b = rate_region_boundary(&sys.p_k, &sys.w, &settings)?;
    let rows: Vec<Vec<String>> = b.points.iter().map(|p| vec![num(p.lambda), num(p.r_a), num(p.r)]).collect();
    let csv = ctx.write_csv("region.csv", &["lambda", "R_A", "R"], &rows)?;
    let lines: Vec<Vec<String>> = b
        .lines
        .iter()
        .map(|p| vec![num(p.lambda), num(p.r_a), num(p.r), num(p.level)])
        .collect();
    let support = ctx.write_csv("region_lines.csv", &["lambda", "R_A", "R", "level"], &lines)?;
    let props = b.properties();
    let report = json!({
        "H_K": b.h_k,
        "midpoint_convex": props.midpoint_convex,
        "min_sum_gap": props.min_sum_gap,
        "sum_line_holds": props.min_sum_gap >= -1e-6,
        "corner_distance": props.corner_distance,
        "corner_on_boundary": props.corner_distance <= 1e-3,
        "holds": props.holds(),
    });
    let rep = ctx.write_json("region_properties.json", &report)?;
    ctx.finish(&[csv, support, rep], json!({ "points": b.points.len() }))
}
