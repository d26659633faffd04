use pec_core::exponents::{
    reliability_exponent, CdSettings, ExponentSurface, GSearch, GSearchSettings, OmegaProblem, SurfaceSettings,
};
use serde_json::json;

use crate::artifact::{num, Run};
use crate::error::CliError;

pub fn run(ctx: &Run) -> Result<(), CliError> {
    let sys = ctx.config.system()?;
    let ec = &ctx.config.exponent;
    let full = SurfaceSettings {
        grid: ec.surface_grid,
        refine: ec.refine,
        cd: CdSettings::default(),
    };
    let mut search = if ec.compute_g {
        let settings = GSearchSettings {
            lattice: ec.g_lattice,
            polish_levels: ec.g_polish_levels,
            polish_steps: ec.g_polish_steps,
            light: SurfaceSettings {
                grid: ec.g_light_grid,
                refine: true,
                cd: CdSettings::light(),
            },
            full,
        };
        Some(GSearch::new(&sys.p_k, &sys.w, settings)?)
    } else {
        None
    };
    let mut own = match search {
        Some(_) => None,
        None => Some(ExponentSurface::new(OmegaProblem::from_key_and_channel(&sys.p_k, &sys.w)?, full)?),
    };
    let mut rows = Vec::new();
    for &r_a in &ec.r_a {
        for &r in &ec.r {
            let e = reliability_exponent(r, &sys.p_x)?;
            let surface = match (&mut search, &mut own) {
                (Some(s), _) => s.reference_surface(),
                (None, Some(s)) => s,
                (None, None) => unreachable!(),
            };
            let f = surface.at(r_a, r)?.0;
            let g = match &mut search {
                Some(s) => Some(s.at(r_a, r)?),
                None => None,
            };
            let directions = [Some(&e), Some(&f), g.as_ref()]
                .iter()
                .map(|x| x.map_or("none", |x| x.bound_direction.name()))
                .collect::<Vec<_>>()
                .join("/");
            rows.push(vec![
                num(r_a),
                num(r),
                num(e.value),
                num(f.value),
                g.as_ref().map_or(String::new(), |g| num(g.value)),
                directions,
            ]);
        }
    }
    let csv = ctx.write_csv("exponent.csv", &["R_A", "R", "E", "F", "G", "bound_direction"], &rows)?;
    ctx.finish(&[csv], json!({ "surface": full, "compute_g": ec.compute_g }))
}
