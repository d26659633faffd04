//! `E(R | p_X) = min_{p_Xbar} [R - H(Xbar)]^+ + D(p_Xbar || p_X)`.
//!
//! The objective is convex in `p_Xbar`. With two support points the minimum
//! is bracketed on a grid, narrowed by golden-section search and certified by
//! the chord bound of a convex function. Larger supports use multi-start
//! coordinate descent.

use super::optimize::{golden_section, minimize, CdSettings, SimplexProduct};
use super::{BoundDirection, Certificate, ExponentResult};
use crate::error::{Error, Result};
use crate::probsim::{divergence_of, entropy, entropy_of, Pmf};

/// `[R - H(p_bar)]^+ + D(p_bar || p_x)`.
pub fn reliability_objective(rate: f64, p_bar: &[f64], p_x: &[f64]) -> f64 {
    (rate - entropy_of(p_bar)).max(0.0) + divergence_of(p_bar, p_x)
}

const GRID: usize = 1000;
const PROBE: f64 = 1e-9;

pub fn reliability_exponent(rate: f64, p_x: &Pmf) -> Result<ExponentResult> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("rate must be finite and >= 0, got {rate}")));
    }
    let exact = |value: f64, p_bar: Vec<f64>| ExponentResult {
        value,
        certificate: Certificate::Source { p_bar },
        bound_direction: BoundDirection::CertifiedLower,
    };
    if rate <= entropy(p_x) {
        return Ok(exact(0.0, p_x.probs().to_vec()));
    }
    let support: Vec<usize> = (0..p_x.len()).filter(|&i| p_x.p(i) > 0.0).collect();
    let embed = |coords: &[f64]| {
        let mut full = vec![0.0; p_x.len()];
        support.iter().zip(coords).for_each(|(&i, &v)| full[i] = v);
        full
    };
    match support.len() {
        1 => Ok(exact(rate, p_x.probs().to_vec())),
        2 => {
            let f = |t: f64| reliability_objective(rate, &embed(&[1.0 - t, t]), p_x.probs());
            let (value, t) = binary_certified(&f);
            Ok(exact(value.max(0.0), embed(&[1.0 - t, t])))
        }
        s => {
            let layout = SimplexProduct::new(vec![s]);
            let restricted: Vec<f64> = support.iter().map(|&i| p_x.p(i)).collect();
            let mut f = |x: &[f64]| reliability_objective(rate, x, &restricted);
            let uniform = vec![1.0 / s as f64; s];
            let tilted = best_tilted(rate, &restricted);
            let settings = CdSettings {
                floor: 0.0,
                ..CdSettings::default()
            };
            let (value, x) = minimize(&layout, &mut f, &[tilted, restricted.clone(), uniform], &settings);
            Ok(ExponentResult {
                value,
                certificate: Certificate::Source { p_bar: embed(&x) },
                bound_direction: BoundDirection::BestFoundUpper,
            })
        }
    }
}

/// `p^s / sum p^s`.
fn tilted(p: &[f64], s: f64) -> Vec<f64> {
    let w: Vec<f64> = p.iter().map(|&v| v.powf(s)).collect();
    let t: f64 = w.iter().sum();
    w.iter().map(|v| v / t).collect()
}

/// Best member of the tilted family `s in [0, 1]`, which contains the
/// minimizer; used as a starting point for the descent.
fn best_tilted(rate: f64, p: &[f64]) -> Vec<f64> {
    let f = |s: f64| reliability_objective(rate, &tilted(p, s), p);
    let (best, _) = (0..=200).map(|i| i as f64 / 200.0).fold((1.0, f(1.0)), |b, s| {
        let v = f(s);
        if v < b.1 { (s, v) } else { b }
    });
    let (s, _) = golden_section(f, (best - 0.005).max(0.0), (best + 0.005).min(1.0), 60);
    tilted(p, s)
}

/// Minimizes a convex `f` on `[0, 1]`. Returns a certified lower bound on
/// the minimum and the point whose value is within `1e-8` of it.
fn binary_certified(f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let grid: Vec<f64> = (0..=GRID).map(|i| f(i as f64 / GRID as f64)).collect();
    let best = (0..=GRID).fold(0, |b, i| if grid[i] < grid[b] { i } else { b });
    let lo = best.saturating_sub(1) as f64 / GRID as f64;
    let hi = (best + 1).min(GRID) as f64 / GRID as f64;
    let (mut t, mut ft) = golden_section(f, lo, hi, 80);
    if grid[best] < ft {
        t = best as f64 / GRID as f64;
        ft = grid[best];
    }
    (convex_lower_bound(f, t, ft), t)
}

/// Lower bound on `min_[0,1] f` for convex `f` from chords next to `t`.
fn convex_lower_bound(f: &impl Fn(f64) -> f64, t: f64, ft: f64) -> f64 {
    let h = PROBE;
    let left = (t - h >= 0.0).then(|| f(t - h));
    let right = (t + h <= 1.0).then(|| f(t + h));
    // Beyond a neighbor that is not lower, convexity keeps f above the chord
    // through t and that neighbor, and that chord is at least ft there. Between
    // t and a neighbor, f stays above the extension of the opposite chord.
    let mut lb = ft;
    match (left, right) {
        (Some(fl), Some(fr)) if fl >= ft && fr >= ft => {
            lb = lb.min(ft - (fr - ft)).min(ft - (fl - ft));
        }
        (None, Some(fr)) if fr >= ft => {
            let fr2 = f(t + 2.0 * h);
            lb = lb.min(fr - (fr2 - fr));
        }
        (Some(fl), None) if fl >= ft => {
            let fl2 = f(t - 2.0 * h);
            lb = lb.min(fl - (fl2 - fl));
        }
        _ => {
            // Not a local minimum at probe resolution: fall back to the
            // lowest probe, which is still an upper bound.
            lb = [Some(ft), left, right].into_iter().flatten().fold(f64::INFINITY, f64::min) - h;
        }
    }
    lb
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p1: f64) -> Pmf {
        Pmf::new(vec![1.0 - p1, p1]).unwrap()
    }

    /// Dense grid over `Bernoulli(t)` with step `1e-5`.
    fn grid_oracle(rate: f64, p: &Pmf) -> f64 {
        (0..=100_000)
            .map(|i| reliability_objective(rate, &[1.0 - i as f64 * 1e-5, i as f64 * 1e-5], p.probs()))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn zero_below_source_entropy() {
        let p = bern(0.1);
        for r in [0.0, 0.1, 0.3, entropy(&p)] {
            assert_eq!(reliability_exponent(r, &p).unwrap().value, 0.0);
        }
        let u = Pmf::uniform(3);
        assert_eq!(reliability_exponent(3f64.ln(), &u).unwrap().value, 0.0);
    }

    #[test]
    fn fixture_and_oracle() {
        let p = bern(0.1);
        let e = reliability_exponent(0.6, &p).unwrap();
        let oracle = grid_oracle(0.6, &p);
        assert!(e.value > 0.0 && e.value <= 0.6 - 0.325083);
        assert!((e.value - oracle).abs() < 1e-6, "{} vs {}", e.value, oracle);
        assert!(e.value <= oracle + 1e-12);
        assert!((e.value - 0.129_996_370_754_264_26).abs() < 1e-9, "{}", e.value);
        let Certificate::Source { p_bar } = &e.certificate else { panic!() };
        assert!((reliability_objective(0.6, p_bar, p.probs()) - e.value).abs() < 1e-8);
    }

    #[test]
    fn degenerate_source() {
        let e = reliability_exponent(0.4, &Pmf::point(2, 0)).unwrap();
        assert_eq!(e.value, 0.4);
    }

    #[test]
    fn three_letter_source_matches_grid() {
        let p = Pmf::new(vec![0.7, 0.2, 0.1]).unwrap();
        let rate = entropy(&p) + 0.2;
        let e = reliability_exponent(rate, &p).unwrap();
        assert_eq!(e.bound_direction, BoundDirection::BestFoundUpper);
        let mut best = f64::INFINITY;
        let steps = 400;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let a = i as f64 / steps as f64;
                let b = j as f64 / steps as f64;
                best = best.min(reliability_objective(rate, &[a, b, 1.0 - a - b], p.probs()));
            }
        }
        assert!(e.value <= best + 1e-9 && e.value > best - 1e-3, "{} vs {}", e.value, best);
    }

    /// `max_{rho in [0,1]} rho R - (1 + rho) log sum_x p(x)^{1/(1+rho)}`.
    fn gallager(rate: f64, p: &[f64]) -> f64 {
        (0..=200_000)
            .map(|i| {
                let rho = i as f64 / 200_000.0;
                let e0 = (1.0 + rho) * p.iter().map(|v| v.powf(1.0 / (1.0 + rho))).sum::<f64>().ln();
                rho * rate - e0
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn matches_parametric_dual() {
        for (p, extra) in [(vec![0.7, 0.2, 0.1], 0.2), (vec![0.5, 0.3, 0.15, 0.05], 0.1), (vec![0.9, 0.1], 0.3)] {
            let pmf = Pmf::new(p.clone()).unwrap();
            let rate = entropy(&pmf) + extra;
            let e = reliability_exponent(rate, &pmf).unwrap();
            let dual = gallager(rate, &p);
            assert!((e.value - dual).abs() < 1e-7, "{p:?}: {} vs {}", e.value, dual);
        }
    }
}
