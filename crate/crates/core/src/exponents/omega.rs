//! `Omega^{(mu, alpha)}` and the secrecy exponents `F` and `G`.
//!
//! For an auxiliary `q = q_U q_{Z|U} p_{K|Z}`,
//!
//! ```text
//! Omega(q | p_Z) = -log E_q[ (p_Z/q_Z)^{1-alpha} (p_Z/q_{Z|U})^{alpha mu} q_{K|U}^{alpha (1-mu)} ]
//! ```
//!
//! and `Omega(p_K, W)` is its minimum over `q` with `|U| = |Z|`. Both `F`
//! and `G` are sups over `(mu, alpha)` of `[Omega - alpha (mu R_A + (1-mu) R)]`
//! divided by `2 + alpha (1-mu)` and `2 + 3 alpha (1-mu)` respectively, so
//! one grid of `Omega` values per joint law serves both and every rate pair.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use super::optimize::{minimize, CdSettings, SimplexProduct};
use super::{BoundDirection, Certificate, ExponentResult};
use crate::error::{Error, Result};
use crate::probsim::{divergence_of, Channel, CompensatedSum, JointPmf, Pmf};

/// `Omega^{(mu, alpha)}(q | p_Z)` for `q_UZ` on `U x Z` and `p_{K|Z}` given as
/// a channel from `Z` to `K`. Returns `+inf` when `q_Z` charges a letter
/// outside the support of `p_Z`.
pub fn omega(mu: f64, alpha: f64, q_uz: &JointPmf, p_k_given_z: &Channel, p_z: &Pmf) -> f64 {
    let (us, zs) = (q_uz.dims()[0], q_uz.dims()[1]);
    let ks = p_k_given_z.out_size();
    let q_z: Vec<f64> = (0..zs).map(|z| (0..us).map(|u| q_uz.get(&[u, z])).sum()).collect();
    if (0..zs).any(|z| q_z[z] > 0.0 && p_z.p(z) == 0.0) {
        return f64::INFINITY;
    }
    let (abar, amu, amubar) = (1.0 - alpha, alpha * mu, alpha * (1.0 - mu));
    let mut e = CompensatedSum::new();
    for u in 0..us {
        let q_u: f64 = (0..zs).map(|z| q_uz.get(&[u, z])).sum();
        if q_u == 0.0 {
            continue;
        }
        let q_k_u: Vec<f64> = (0..ks)
            .map(|k| (0..zs).map(|z| q_uz.get(&[u, z]) / q_u * p_k_given_z.p(k, z)).sum())
            .collect();
        for z in 0..zs {
            let q_uz_v = q_uz.get(&[u, z]);
            if q_uz_v == 0.0 {
                continue;
            }
            let q_z_u = q_uz_v / q_u;
            let base = q_uz_v * (p_z.p(z) / q_z[z]).powf(abar) * (p_z.p(z) / q_z_u).powf(amu);
            for k in 0..ks {
                let pk = p_k_given_z.p(k, z);
                if pk > 0.0 {
                    e.add(base * pk * q_k_u[k].powf(amubar));
                }
            }
        }
    }
    -e.value().ln()
}

/// `(p_Z, p_{K|Z})` of one joint law, with the auxiliary parameterized over
/// the support of `p_Z`.
#[derive(Debug, Clone)]
pub struct OmegaProblem {
    z_size: usize,
    k_size: usize,
    support: Vec<usize>,
    p_z: Vec<f64>,
    /// `p_{K|Z}` on the support, `[j * k_size + k]`.
    p_k_given_z: Vec<f64>,
    layout: SimplexProduct,
}

impl OmegaProblem {
    /// From a joint law on `K x Z`.
    pub fn from_joint(p_kz: &JointPmf) -> Result<Self> {
        if p_kz.dims().len() != 2 {
            return Err(Error::InvalidParameter("OmegaProblem needs a 2-D joint on K x Z".into()));
        }
        let (ks, zs) = (p_kz.dims()[0], p_kz.dims()[1]);
        let p_z = p_kz.marginal_pmf(1)?.probs().to_vec();
        let support: Vec<usize> = (0..zs).filter(|&z| p_z[z] > 0.0).collect();
        let p_k_given_z = support
            .iter()
            .flat_map(|&z| (0..ks).map(move |k| (k, z)))
            .map(|(k, z)| p_kz.get(&[k, z]) / p_z[z])
            .collect();
        let s = support.len();
        let mut blocks = vec![zs];
        blocks.extend(std::iter::repeat_n(s, zs));
        Ok(OmegaProblem {
            z_size: zs,
            k_size: ks,
            support,
            p_z,
            p_k_given_z,
            layout: SimplexProduct::new(blocks),
        })
    }

    pub fn from_key_and_channel(p_k: &Pmf, w: &Channel) -> Result<Self> {
        Self::from_joint(&JointPmf::from_input_and_channel(p_k, w)?)
    }

    pub fn p_z(&self) -> Pmf {
        Pmf::new(self.p_z.clone()).expect("marginal of a pmf")
    }

    /// `p_{K|Z}` as a channel from `Z` to `K`; rows off the support are
    /// uniform and never used.
    pub fn p_k_given_z(&self) -> Channel {
        let rows = (0..self.z_size)
            .map(|z| match self.support.iter().position(|&s| s == z) {
                Some(j) => Pmf::from_weights(&self.p_k_given_z[j * self.k_size..(j + 1) * self.k_size])
                    .expect("conditional of a pmf"),
                None => Pmf::uniform(self.k_size),
            })
            .collect();
        Channel::new(rows).expect("rows are pmfs")
    }

    /// Splits flat parameters into `q_U` and `q_{Z|U}` over the full `Z`.
    pub fn unpack(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (us, s) = (self.z_size, self.support.len());
        let q_u = x[..us].to_vec();
        let rows = (0..us)
            .map(|u| {
                let mut row = vec![0.0; self.z_size];
                for j in 0..s {
                    row[self.support[j]] = x[us + u * s + j];
                }
                row
            })
            .collect();
        (q_u, rows)
    }

    pub fn joint_of(&self, x: &[f64]) -> JointPmf {
        let (q_u, rows) = self.unpack(x);
        let probs = q_u.iter().zip(&rows).flat_map(|(&qu, row)| row.iter().map(move |&v| qu * v)).collect();
        JointPmf::new(vec![self.z_size, self.z_size], probs).expect("product of pmfs")
    }

    fn starts(&self) -> Vec<Vec<f64>> {
        let (us, s) = (self.z_size, self.support.len());
        let p_s: Vec<f64> = self.support.iter().map(|&z| self.p_z[z]).collect();
        // U = Z on the support.
        let mut ident = vec![0.0; self.layout.dim()];
        for u in 0..us {
            ident[u] = if u < s { p_s[u] } else { 0.0 };
            for j in 0..s {
                ident[us + u * s + j] = if u < s { (j == u) as u8 as f64 } else { 1.0 };
            }
        }
        // U independent of Z.
        let mut constant = vec![1.0; us];
        for _ in 0..us {
            constant.extend_from_slice(&p_s);
        }
        vec![ident, constant]
    }

    /// Evaluator with preallocated scratch space.
    fn evaluator(&self, mu: f64, alpha: f64) -> impl FnMut(&[f64]) -> f64 + '_ {
        let (us, s, ks) = (self.z_size, self.support.len(), self.k_size);
        let (abar, amu, amubar) = (1.0 - alpha, alpha * mu, alpha * (1.0 - mu));
        let c_z: Vec<f64> = self.support.iter().map(|&z| self.p_z[z].powf(abar + amu)).collect();
        let mut q_z = vec![0.0; s];
        let mut q_k = vec![0.0; ks];
        move |x: &[f64]| {
            let (q_u, cond) = x.split_at(us);
            q_z.iter_mut().for_each(|v| *v = 0.0);
            for u in 0..us {
                for j in 0..s {
                    q_z[j] += q_u[u] * cond[u * s + j];
                }
            }
            let mut e = 0.0;
            for u in 0..us {
                let row = &cond[u * s..(u + 1) * s];
                q_k.iter_mut().for_each(|v| *v = 0.0);
                for j in 0..s {
                    let pk = &self.p_k_given_z[j * ks..(j + 1) * ks];
                    for k in 0..ks {
                        q_k[k] += row[j] * pk[k];
                    }
                }
                if amubar != 0.0 {
                    q_k.iter_mut().for_each(|v| *v = v.powf(amubar));
                } else {
                    q_k.iter_mut().for_each(|v| *v = 1.0);
                }
                let mut inner = 0.0;
                for j in 0..s {
                    let pk = &self.p_k_given_z[j * ks..(j + 1) * ks];
                    let tail: f64 = pk.iter().zip(q_k.iter()).map(|(a, b)| a * b).sum();
                    inner += row[j].powf(1.0 - amu) * c_z[j] * q_z[j].powf(-abar) * tail;
                }
                e += q_u[u] * inner;
            }
            -e.ln()
        }
    }

    /// `Omega` at flat parameters `x`.
    pub fn evaluate(&self, mu: f64, alpha: f64, x: &[f64]) -> f64 {
        self.evaluator(mu, alpha)(x)
    }

    /// Inner minimum over the auxiliary; `alpha = 0` is exactly zero.
    pub fn minimize(&self, mu: f64, alpha: f64, cd: &CdSettings) -> (f64, Vec<f64>) {
        let starts = self.starts();
        if alpha == 0.0 {
            return (0.0, self.layout.floored(starts[1].clone(), cd.floor));
        }
        let mut f = self.evaluator(mu, alpha);
        minimize(&self.layout, &mut f, &starts, cd)
    }

    fn certificate(&self, mu: f64, alpha: f64, x: &[f64]) -> Certificate {
        let (q_u, q_z_given_u) = self.unpack(x);
        Certificate::MuAlpha {
            mu,
            alpha,
            q_u,
            q_z_given_u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceSettings {
    /// Grid steps per unit in both `mu` and `alpha`.
    pub grid: u32,
    /// Adds a 5x5 patch at a quarter step around the best cells.
    pub refine: bool,
    pub cd: CdSettings,
}

impl Default for SurfaceSettings {
    fn default() -> Self {
        SurfaceSettings {
            grid: 64,
            refine: true,
            cd: CdSettings::default(),
        }
    }
}

impl SurfaceSettings {
    pub fn light() -> Self {
        SurfaceSettings {
            grid: 8,
            refine: true,
            cd: CdSettings::light(),
        }
    }
}

type Key = (u32, u32);

/// Cached `Omega` values over `(mu, alpha)` for one joint law.
#[derive(Debug, Clone)]
pub struct ExponentSurface {
    problem: OmegaProblem,
    settings: SurfaceSettings,
    /// Keys are `(mu, alpha)` in units of a quarter grid step.
    points: BTreeMap<Key, (f64, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Denominator {
    F,
    G,
}

impl ExponentSurface {
    pub fn new(problem: OmegaProblem, settings: SurfaceSettings) -> Result<Self> {
        if settings.grid == 0 {
            return Err(Error::InvalidParameter("surface grid must be positive".into()));
        }
        let mut s = ExponentSurface {
            problem,
            settings,
            points: BTreeMap::new(),
        };
        let keys = s.base_keys();
        s.ensure(&keys);
        Ok(s)
    }

    pub fn problem(&self) -> &OmegaProblem {
        &self.problem
    }

    pub fn settings(&self) -> &SurfaceSettings {
        &self.settings
    }

    fn units(&self) -> u32 {
        4 * self.settings.grid
    }

    fn coords(&self, key: Key) -> (f64, f64) {
        let u = self.units() as f64;
        (key.0 as f64 / u, key.1 as f64 / u)
    }

    fn base_keys(&self) -> Vec<Key> {
        let g = self.settings.grid;
        (0..=g).flat_map(|i| (0..=g).map(move |j| (4 * i, 4 * j))).collect()
    }

    fn ensure(&mut self, keys: &[Key]) {
        let missing: Vec<Key> = keys.iter().copied().filter(|k| !self.points.contains_key(k)).collect();
        let computed: Vec<(f64, Vec<f64>)> = missing
            .par_iter()
            .map(|&k| {
                let (mu, alpha) = self.coords(k);
                self.problem.minimize(mu, alpha, &self.settings.cd)
            })
            .collect();
        self.points.extend(missing.into_iter().zip(computed));
    }

    /// Inner minimum of `Omega` at a grid key.
    pub fn omega_at(&self, mu_units: u32, alpha_units: u32) -> Option<f64> {
        self.points.get(&(mu_units, alpha_units)).map(|p| p.0)
    }

    fn objective(&self, key: Key, r_a: f64, r: f64, den: Denominator) -> f64 {
        let (mu, alpha) = self.coords(key);
        let omega = self.points[&key].0;
        let numer = omega - alpha * (mu * r_a + (1.0 - mu) * r);
        let w = alpha * (1.0 - mu);
        match den {
            Denominator::F => numer / (2.0 + w),
            Denominator::G => numer / (2.0 + 3.0 * w),
        }
    }

    fn argmax<'a>(&self, keys: impl IntoIterator<Item = &'a Key>, r_a: f64, r: f64, den: Denominator) -> (Key, f64) {
        keys.into_iter().fold(((0, 0), f64::NEG_INFINITY), |best, &k| {
            let v = self.objective(k, r_a, r, den);
            if v > best.1 {
                (k, v)
            } else {
                best
            }
        })
    }

    fn patch(&self, center: Key) -> Vec<Key> {
        let top = self.units() as i64;
        let mut out = Vec::new();
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                let (i, j) = (center.0 as i64 + a, center.1 as i64 + b);
                if (0..=top).contains(&i) && (0..=top).contains(&j) {
                    out.push((i as u32, j as u32));
                }
            }
        }
        out
    }

    /// `(F, G)` at one rate pair. Both sups run over the same points: the base
    /// grid plus the refinement patches around the best base cells of each.
    pub fn at(&mut self, r_a: f64, r: f64) -> Result<(ExponentResult, ExponentResult)> {
        check_rates(r_a, r)?;
        let base = self.base_keys();
        let mut set: BTreeSet<Key> = base.iter().copied().collect();
        if self.settings.refine {
            let (kf, _) = self.argmax(&base, r_a, r, Denominator::F);
            let (kg, _) = self.argmax(&base, r_a, r, Denominator::G);
            let mut extra = self.patch(kf);
            extra.extend(self.patch(kg));
            self.ensure(&extra);
            set.extend(extra);
        }
        let result = |den| {
            let (k, v) = self.argmax(&set, r_a, r, den);
            let (mu, alpha) = self.coords(k);
            ExponentResult {
                value: v,
                certificate: self.problem.certificate(mu, alpha, &self.points[&k].1),
                bound_direction: BoundDirection::Heuristic,
            }
        };
        Ok((result(Denominator::F), result(Denominator::G)))
    }

    /// Re-evaluates a `MuAlpha` certificate and applies the chosen
    /// denominator; used to check reported values.
    pub fn reevaluate(&self, cert: &Certificate, r_a: f64, r: f64, g: bool) -> Option<f64> {
        let Certificate::MuAlpha {
            mu,
            alpha,
            q_u,
            q_z_given_u,
        } = cert
        else {
            return None;
        };
        let probs = q_u.iter().zip(q_z_given_u).flat_map(|(&a, row)| row.iter().map(move |&v| a * v)).collect();
        let zs = q_u.len();
        let q_uz = JointPmf::new(vec![zs, q_z_given_u[0].len()], probs).ok()?;
        let om = omega(*mu, *alpha, &q_uz, &self.problem.p_k_given_z(), &self.problem.p_z());
        let numer = om - alpha * (mu * r_a + (1.0 - mu) * r);
        let w = alpha * (1.0 - mu);
        Some(numer / if g { 2.0 + 3.0 * w } else { 2.0 + w })
    }
}

fn check_rates(r_a: f64, r: f64) -> Result<()> {
    if !(r_a >= 0.0 && r >= 0.0) || !r_a.is_finite() || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("rates must be finite and >= 0, got ({r_a}, {r})")));
    }
    Ok(())
}

/// `F(R_A, R | p_K, W)`.
pub fn f_exponent(r_a: f64, r: f64, p_k: &Pmf, w: &Channel, settings: &SurfaceSettings) -> Result<ExponentResult> {
    check_rates(r_a, r)?;
    let mut s = ExponentSurface::new(OmegaProblem::from_key_and_channel(p_k, w)?, *settings)?;
    Ok(s.at(r_a, r)?.0)
}

/// `G(R_A, R | p_KbarZbar)` at a fixed joint on `K x Z`.
pub fn g_exponent_fixed(r_a: f64, r: f64, p_joint: &JointPmf, settings: &SurfaceSettings) -> Result<ExponentResult> {
    check_rates(r_a, r)?;
    let mut s = ExponentSurface::new(OmegaProblem::from_joint(p_joint)?, *settings)?;
    Ok(s.at(r_a, r)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GSearchSettings {
    /// Denominator of the starting lattice over the joint simplex.
    pub lattice: u32,
    /// Each level halves the lattice step for local moves.
    pub polish_levels: u32,
    /// Local moves per level.
    pub polish_steps: usize,
    /// Inner settings at lattice and polish joints.
    pub light: SurfaceSettings,
    /// Inner settings at the reference joint `p_K x W`.
    pub full: SurfaceSettings,
}

impl Default for GSearchSettings {
    fn default() -> Self {
        GSearchSettings {
            lattice: 6,
            polish_levels: 2,
            polish_steps: 6,
            light: SurfaceSettings::light(),
            full: SurfaceSettings::default(),
        }
    }
}

struct Candidate {
    joint: JointPmf,
    divergence: f64,
    surface: ExponentSurface,
}

/// `G(R_A, R | p_K, W) = min_{p_KbarZbar} G(R_A, R | p_KbarZbar) + D(p_KbarZbar || p_K x W)`.
///
/// Surfaces are cached per joint, so a grid of rate pairs shares the work.
pub struct GSearch {
    reference: JointPmf,
    settings: GSearchSettings,
    reference_surface: ExponentSurface,
    cache: HashMap<Vec<u32>, Option<Candidate>>,
}

impl GSearch {
    pub fn new(p_k: &Pmf, w: &Channel, settings: GSearchSettings) -> Result<Self> {
        if settings.lattice == 0 {
            return Err(Error::InvalidParameter("lattice resolution must be positive".into()));
        }
        let reference = JointPmf::from_input_and_channel(p_k, w)?;
        let reference_surface = ExponentSurface::new(OmegaProblem::from_joint(&reference)?, settings.full)?;
        let mut s = GSearch {
            reference,
            settings,
            reference_surface,
            cache: HashMap::new(),
        };
        let cells = s.reference.probs().len();
        let scale = s.scale();
        for counts in compositions(settings.lattice, cells) {
            s.candidate(&counts.iter().map(|c| c * scale).collect::<Vec<_>>())?;
        }
        Ok(s)
    }

    fn scale(&self) -> u32 {
        1 << self.settings.polish_levels
    }

    fn resolution(&self) -> u32 {
        self.settings.lattice * self.scale()
    }

    fn candidate(&mut self, key: &[u32]) -> Result<Option<&Candidate>> {
        if !self.cache.contains_key(key) {
            let res = self.resolution() as f64;
            let probs: Vec<f64> = key.iter().map(|&c| c as f64 / res).collect();
            let divergence = divergence_of(&probs, self.reference.probs());
            let entry = if divergence.is_finite() {
                let joint = JointPmf::new(self.reference.dims().to_vec(), probs)?;
                let surface = ExponentSurface::new(OmegaProblem::from_joint(&joint)?, self.settings.light)?;
                Some(Candidate {
                    joint,
                    divergence,
                    surface,
                })
            } else {
                None
            };
            self.cache.insert(key.to_vec(), entry);
        }
        Ok(self.cache[key].as_ref())
    }

    fn score(&mut self, key: &[u32], r_a: f64, r: f64) -> Result<Option<(f64, ExponentResult)>> {
        if self.candidate(key)?.is_none() {
            return Ok(None);
        }
        let c = self.cache.get_mut(key).and_then(Option::as_mut).expect("inserted above");
        let g = c.surface.at(r_a, r)?.1;
        Ok(Some((g.value + c.divergence, g)))
    }

    pub fn at(&mut self, r_a: f64, r: f64) -> Result<ExponentResult> {
        check_rates(r_a, r)?;
        let cells = self.reference.probs().len();
        let scale = self.scale();
        let lattice: Vec<Vec<u32>> = compositions(self.settings.lattice, cells)
            .into_iter()
            .map(|c| c.iter().map(|v| v * scale).collect())
            .collect();
        let mut best: Option<(f64, Vec<u32>)> = None;
        for key in &lattice {
            if let Some((v, _)) = self.score(key, r_a, r)? {
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, key.clone()));
                }
            }
        }
        let (mut best_v, mut best_key) = best.ok_or(Error::Domain("no lattice joint has finite divergence".into()))?;
        for level in 1..=self.settings.polish_levels {
            let step = scale >> level;
            for _ in 0..self.settings.polish_steps {
                let mut improved = None;
                for i in 0..cells {
                    if best_key[i] < step {
                        continue;
                    }
                    for j in 0..cells {
                        if i == j {
                            continue;
                        }
                        let mut key = best_key.clone();
                        key[i] -= step;
                        key[j] += step;
                        if let Some((v, _)) = self.score(&key, r_a, r)? {
                            let current = improved.as_ref().map_or(best_v, |(bv, _)| *bv);
                            if v < current {
                                improved = Some((v, key));
                            }
                        }
                    }
                }
                match improved {
                    Some((v, key)) => {
                        best_v = v;
                        best_key = key;
                    }
                    None => break,
                }
            }
        }
        let reference_g = self.reference_surface.at(r_a, r)?.1;
        let (value, joint, divergence, inner) = if reference_g.value <= best_v {
            (reference_g.value, self.reference.probs().to_vec(), 0.0, reference_g.certificate)
        } else {
            let (_, g) = self.score(&best_key.clone(), r_a, r)?.expect("finite candidate");
            let c = self.cache[&best_key].as_ref().expect("finite candidate");
            (best_v, c.joint.probs().to_vec(), c.divergence, g.certificate)
        };
        Ok(ExponentResult {
            value,
            certificate: Certificate::Joint {
                joint,
                divergence,
                inner: Box::new(inner),
            },
            bound_direction: BoundDirection::BestFoundUpper,
        })
    }

    pub fn reference_surface(&mut self) -> &mut ExponentSurface {
        &mut self.reference_surface
    }
}

/// `G(R_A, R | p_K, W)` at one rate pair.
pub fn g_exponent(r_a: f64, r: f64, p_k: &Pmf, w: &Channel, settings: &GSearchSettings) -> Result<ExponentResult> {
    GSearch::new(p_k, w, *settings)?.at(r_a, r)
}

/// Compositions of `total` into `parts` parts, lexicographic.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for c in 0..=left {
            cur[pos] = c;
            rec(pos + 1, left - c, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(0, total, &mut vec![0; parts], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn coarse() -> SurfaceSettings {
        SurfaceSettings {
            grid: 8,
            refine: true,
            cd: CdSettings::default(),
        }
    }

    /// Direct triple sum of `q(u,z,k) exp(-omega(z,k|u))` with `omega` taken
    /// from its logarithmic definition.
    fn omega_direct(mu: f64, alpha: f64, q_uz: &JointPmf, p_kz: &Channel, p_z: &Pmf) -> f64 {
        let (us, zs) = (q_uz.dims()[0], q_uz.dims()[1]);
        let ks = p_kz.out_size();
        let mut terms = Vec::new();
        let q_z = |z: usize| (0..us).map(|u| q_uz.get(&[u, z])).sum::<f64>();
        let q_u = |u: usize| (0..zs).map(|z| q_uz.get(&[u, z])).sum::<f64>();
        for u in 0..us {
            for z in 0..zs {
                for k in 0..ks {
                    let w = q_uz.get(&[u, z]) * p_kz.p(k, z);
                    if w == 0.0 {
                        continue;
                    }
                    let q_zu = q_uz.get(&[u, z]) / q_u(u);
                    let q_ku: f64 = (0..zs).map(|z2| q_uz.get(&[u, z2]) / q_u(u) * p_kz.p(k, z2)).sum();
                    let om = (1.0 - alpha) * (q_z(z) / p_z.p(z)).ln()
                        + alpha * (mu * (q_zu / p_z.p(z)).ln() + (1.0 - mu) * (1.0 / q_ku).ln());
                    terms.push(w * (-om).exp());
                }
            }
        }
        terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        -crate::probsim::compensated_sum(terms).ln()
    }

    fn random_joint<R: Rng>(rng: &mut R, a: usize, b: usize) -> JointPmf {
        let w: Vec<f64> = (0..a * b).map(|_| rng.gen_range(0.05..1.0)).collect();
        JointPmf::new(vec![a, b], Pmf::from_weights(&w).unwrap().probs().to_vec()).unwrap()
    }

    #[test]
    fn omega_matches_direct_summation() {
        let mut rng = rng_from_seed(21);
        for _ in 0..200 {
            let zs = rng.gen_range(2..4);
            let ks = rng.gen_range(2..4);
            let p = OmegaProblem::from_joint(&random_joint(&mut rng, ks, zs)).unwrap();
            let q = random_joint(&mut rng, zs, zs);
            let (mu, alpha) = (rng.gen::<f64>(), rng.gen::<f64>());
            let a = omega(mu, alpha, &q, &p.p_k_given_z(), &p.p_z());
            let b = omega_direct(mu, alpha, &q, &p.p_k_given_z(), &p.p_z());
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn omega_examples() {
        let mut rng = rng_from_seed(22);
        let p = OmegaProblem::from_joint(&random_joint(&mut rng, 2, 3)).unwrap();
        for _ in 0..20 {
            let q = random_joint(&mut rng, 3, 3);
            let v = omega(rng.gen(), 0.0, &q, &p.p_k_given_z(), &p.p_z());
            assert!(v.abs() < 1e-15);
        }
        // K a function of U: q_{K|U} is a point mass on the support.
        let w = Channel::identity(2);
        let p = OmegaProblem::from_key_and_channel(&Pmf::new(vec![0.3, 0.7]).unwrap(), &w).unwrap();
        let q = JointPmf::new(vec![2, 2], vec![0.3, 0.0, 0.0, 0.7]).unwrap();
        assert!(omega(0.0, 1.0, &q, &p.p_k_given_z(), &p.p_z()).abs() < 1e-15);
        // Support violation.
        let p_z = Pmf::new(vec![1.0, 0.0]).unwrap();
        let q = JointPmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(omega(0.5, 0.5, &q, &Channel::identity(2), &p_z), f64::INFINITY);
    }

    #[test]
    fn fast_evaluator_matches_public_omega() {
        let mut rng = rng_from_seed(23);
        let p = OmegaProblem::from_joint(&random_joint(&mut rng, 3, 2)).unwrap();
        for i in 0..50 {
            let x = p.layout.halton_point(i, 1e-12);
            let (mu, alpha) = (rng.gen::<f64>(), rng.gen::<f64>());
            let fast = p.evaluate(mu, alpha, &x);
            let slow = omega(mu, alpha, &p.joint_of(&x), &p.p_k_given_z(), &p.p_z());
            assert!((fast - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_when_alpha_collapses() {
        let w = Channel::bsc(0.1).unwrap();
        let f = f_exponent(0.5, 0.6, &Pmf::uniform(2), &w, &coarse()).unwrap();
        assert_eq!(f.value, 0.0);
        let g = g_exponent_fixed(0.5, 0.6, &JointPmf::from_input_and_channel(&Pmf::uniform(2), &w).unwrap(), &coarse())
            .unwrap();
        assert_eq!(g.value, 0.0);
    }

    #[test]
    fn f_is_positive_deep_inside_complement_and_certificate_reevaluates() {
        let w = Channel::bsc(0.1).unwrap();
        let mut s = ExponentSurface::new(OmegaProblem::from_key_and_channel(&Pmf::uniform(2), &w).unwrap(), coarse())
            .unwrap();
        let (f, g) = s.at(0.05, 0.05).unwrap();
        assert!(f.value > 0.0);
        assert!(g.value >= f.value / 3.0 - 1e-12);
        let fr = s.reevaluate(&f.certificate, 0.05, 0.05, false).unwrap();
        let gr = s.reevaluate(&g.certificate, 0.05, 0.05, true).unwrap();
        assert!((fr - f.value).abs() < 1e-8 && (gr - g.value).abs() < 1e-8);
    }

    #[test]
    fn f_is_nonincreasing_in_rates() {
        let w = Channel::bsc(0.2).unwrap();
        let mut s = ExponentSurface::new(OmegaProblem::from_key_and_channel(&Pmf::uniform(2), &w).unwrap(), coarse())
            .unwrap();
        let rates = [0.0, 0.1, 0.2, 0.4];
        for &ra in &rates {
            let mut last = f64::INFINITY;
            for &r in &rates {
                let v = s.at(ra, r).unwrap().0.value;
                assert!(v <= last + 1e-12);
                last = v;
            }
        }
    }

    #[test]
    fn compositions_cover_the_lattice() {
        let c = compositions(3, 4);
        assert_eq!(c.len(), 20);
        assert!(c.iter().all(|v| v.iter().sum::<u32>() == 3));
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }
}
