//! The rate region `R(p_K, W)`: pairs `(R_A, R)` with `R_A >= I(Z;U)` and
//! `R >= H(K|U)` for some `U - Z - K`, `|U| <= |Z| + 1`.
//!
//! The region is convex and closed upward, so it is the intersection of the
//! half-planes `R + lambda R_A >= c(lambda)` with
//! `c(lambda) = min_U H(K|U) + lambda I(Z;U)`. Each multiplier is solved by
//! multi-start descent over `p_{U|Z}`; `c` is then the lower envelope over
//! every minimizer found, which can only tighten it.

use rayon::prelude::*;
use serde::Serialize;

use super::optimize::{minimize, CdSettings, SimplexProduct};
use crate::error::Result;
use crate::probsim::{entropy, entropy_of, Channel, JointPmf, Pmf};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSettings {
    /// Geometric multipliers in `[lambda_min, lambda_max]`; `0` and the
    /// `lambda -> inf` limit are always added.
    pub lambdas: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub cd: CdSettings,
}

impl Default for RegionSettings {
    fn default() -> Self {
        RegionSettings {
            lambdas: 64,
            lambda_min: 1e-3,
            lambda_max: 1e3,
            cd: CdSettings::default(),
        }
    }
}

impl RegionSettings {
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let (a, b) = (self.lambda_min.ln(), self.lambda_max.ln());
        match self.lambdas {
            0 => {}
            1 => out.push(self.lambda_min),
            k => out.extend((0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())),
        }
        out.push(f64::INFINITY);
        out
    }
}

/// Supporting point for multiplier `lambda` and the line level `c(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportPoint {
    pub lambda: f64,
    pub r_a: f64,
    pub r: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionBoundary {
    /// Pareto-minimal supporting points, sorted by `R_A`.
    pub points: Vec<SupportPoint>,
    /// One entry per multiplier of the schedule, in schedule order.
    pub lines: Vec<SupportPoint>,
    pub multipliers: Vec<f64>,
    pub h_k: f64,
}

/// Slack in the membership test, scaled by `1 + lambda`.
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

impl RegionBoundary {
    /// Largest violation `c(lambda) - R - lambda R_A` over the finite
    /// multipliers, normalized by `1 + lambda`; negative means every
    /// half-plane holds with room to spare.
    pub fn violation(&self, r_a: f64, r: f64) -> f64 {
        let mut worst = -r_a;
        for l in &self.lines {
            if l.lambda.is_finite() {
                worst = worst.max((l.level - r - l.lambda * r_a) / (1.0 + l.lambda));
            }
        }
        worst
    }

    /// Conservative membership: a pair is inside unless some supporting
    /// half-plane excludes it by more than the slack.
    pub fn contains(&self, r_a: f64, r: f64) -> bool {
        self.violation(r_a, r) <= MEMBERSHIP_SLACK
    }

    /// Outside with margin `tau` in the normalized violation.
    pub fn outside_by(&self, r_a: f64, r: f64, tau: f64) -> bool {
        self.violation(r_a, r) > tau
    }

    /// Euclidean distance from `(r_a, r)` to the boundary polyline.
    pub fn distance_to_polyline(&self, r_a: f64, r: f64) -> f64 {
        let pts = &self.points;
        let d = |a: &SupportPoint| ((a.r_a - r_a).powi(2) + (a.r - r).powi(2)).sqrt();
        let mut best = pts.iter().map(d).fold(f64::INFINITY, f64::min);
        for w in pts.windows(2) {
            let (ax, ay, bx, by) = (w[0].r_a, w[0].r, w[1].r_a, w[1].r);
            let (dx, dy) = (bx - ax, by - ay);
            let len2 = dx * dx + dy * dy;
            if len2 > 0.0 {
                let t = (((r_a - ax) * dx + (r - ay) * dy) / len2).clamp(0.0, 1.0);
                best = best.min(((ax + t * dx - r_a).powi(2) + (ay + t * dy - r).powi(2)).sqrt());
            }
        }
        best
    }

    pub fn properties(&self) -> RegionProperties {
        let mut midpoint_convex = true;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                if !self.contains((a.r_a + b.r_a) / 2.0, (a.r + b.r) / 2.0) {
                    midpoint_convex = false;
                }
            }
        }
        let min_sum_gap = self
            .points
            .iter()
            .map(|p| p.r_a + p.r - self.h_k)
            .fold(f64::INFINITY, f64::min);
        RegionProperties {
            midpoint_convex,
            min_sum_gap,
            corner_distance: self.distance_to_polyline(0.0, self.h_k),
        }
    }
}

/// Checks on a computed boundary: closed convex set, sum line, corner point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionProperties {
    pub midpoint_convex: bool,
    /// `min (R_A + R - H(K))` over the boundary points.
    pub min_sum_gap: f64,
    /// Distance from `(0, H(K))` to the boundary.
    pub corner_distance: f64,
}

impl RegionProperties {
    pub fn holds(&self) -> bool {
        self.midpoint_convex && self.min_sum_gap >= -1e-6 && self.corner_distance <= 1e-3
    }
}

struct Problem {
    z_size: usize,
    u_size: usize,
    k_size: usize,
    p_z: Vec<f64>,
    p_kz: Vec<f64>,
    h_z_weights: Vec<f64>,
}

impl Problem {
    /// `(I(Z;U), H(K|U))` for `p_{U|Z}` stored row by row.
    fn rates(&self, x: &[f64], p_u: &mut [f64], p_ku: &mut [f64]) -> (f64, f64) {
        let (zs, us, ks) = (self.z_size, self.u_size, self.k_size);
        p_u.iter_mut().for_each(|v| *v = 0.0);
        p_ku.iter_mut().for_each(|v| *v = 0.0);
        let mut h_u_given_z = 0.0;
        for z in 0..zs {
            let row = &x[z * us..(z + 1) * us];
            for u in 0..us {
                p_u[u] += self.p_z[z] * row[u];
                for k in 0..ks {
                    p_ku[k * us + u] += self.p_kz[k * zs + z] * row[u];
                }
            }
            if self.h_z_weights[z] > 0.0 {
                h_u_given_z += self.h_z_weights[z] * entropy_of(row);
            }
        }
        let h_u = entropy_of(p_u);
        let i_zu = (h_u - h_u_given_z).max(0.0);
        let h_k_given_u = (entropy_of(p_ku) - h_u).max(0.0);
        (i_zu, h_k_given_u)
    }

    fn evaluator(&self) -> impl FnMut(&[f64]) -> (f64, f64) + '_ {
        let mut p_u = vec![0.0; self.u_size];
        let mut p_ku = vec![0.0; self.u_size * self.k_size];
        move |x| self.rates(x, &mut p_u, &mut p_ku)
    }

    /// `U = Z` padded with an unused letter.
    fn identity(&self) -> Vec<f64> {
        let us = self.u_size;
        let mut x = vec![0.0; self.z_size * us];
        for z in 0..self.z_size {
            x[z * us + z] = 1.0;
        }
        x
    }
}

/// Supporting points of `R(p_K, W)` for the given schedule.
pub fn rate_region_boundary(p_k: &Pmf, w: &Channel, settings: &RegionSettings) -> Result<RegionBoundary> {
    let joint = JointPmf::from_input_and_channel(p_k, w)?;
    let (ks, zs) = (p_k.len(), w.out_size());
    let p_z = joint.marginal_pmf(1)?.probs().to_vec();
    let problem = Problem {
        z_size: zs,
        u_size: zs + 1,
        k_size: ks,
        h_z_weights: p_z.clone(),
        p_z,
        p_kz: joint.probs().to_vec(),
    };
    let h_k = entropy(p_k);
    let layout = SimplexProduct::new(vec![zs + 1; zs]);
    let schedule = settings.schedule();

    // Minimizers per finite multiplier, plus U = Z.
    let mut candidates: Vec<(f64, f64)> = schedule
        .par_iter()
        .filter(|l| l.is_finite())
        .map(|&lambda| {
            let mut rates = problem.evaluator();
            let mut f = |x: &[f64]| {
                let (i, h) = rates(x);
                h + lambda * i
            };
            let (_, x) = minimize(&layout, &mut f, &[problem.identity()], &settings.cd);
            problem.evaluator()(&x)
        })
        .collect();
    candidates.push(problem.evaluator()(&problem.identity()));
    candidates.push((0.0, h_k));

    let lines: Vec<SupportPoint> = schedule
        .iter()
        .map(|&lambda| {
            if lambda.is_infinite() {
                return SupportPoint {
                    lambda,
                    r_a: 0.0,
                    r: h_k,
                    level: 0.0,
                };
            }
            let level = candidates.iter().map(|&(i, h)| h + lambda * i).fold(f64::INFINITY, f64::min);
            // Among near-ties the smallest R_A is the extreme point.
            let (r_a, r) = candidates
                .iter()
                .copied()
                .filter(|&(i, h)| h + lambda * i <= level + 1e-12 * (1.0 + lambda))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("level is attained");
            SupportPoint { lambda, r_a, r, level }
        })
        .collect();

    let mut sorted = lines.clone();
    sorted.sort_by(|a, b| a.r_a.total_cmp(&b.r_a).then(a.r.total_cmp(&b.r)));
    let mut points: Vec<SupportPoint> = Vec::new();
    for p in sorted {
        if points.last().is_none_or(|q| p.r < q.r) {
            points.push(p);
        }
    }
    Ok(RegionBoundary {
        points,
        lines,
        multipliers: schedule,
        h_k,
    })
}

/// `(R_A, R)` lies in `{R > H(X)}` intersected with the complement of the
/// region, using the conservative membership test.
pub fn inner_region_test(r_a: f64, r: f64, p_x: &Pmf, boundary: &RegionBoundary) -> bool {
    r > entropy(p_x) + 1e-9 && !boundary.contains(r_a, r)
}
