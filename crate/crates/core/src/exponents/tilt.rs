//! Exponential tilting of a joint law on `U x Z x K` and the pair
//! `vartheta(a) = a + 1.5 a^2`, `g = vartheta^{-1}`.

use crate::error::{Error, Result};
use crate::probsim::{CompensatedSum, JointPmf};

/// `omega~(z, k | u) = mu log(p(z|u) / p(z)) + log(1 / p(k|u))` on the support.
fn omega_tilde(p: &JointPmf, mu: f64) -> Vec<f64> {
    let (us, zs, ks) = (p.dims()[0], p.dims()[1], p.dims()[2]);
    let mut p_u = vec![0.0; us];
    let mut p_z = vec![0.0; zs];
    let mut p_uk = vec![0.0; us * ks];
    let mut p_uz = vec![0.0; us * zs];
    for u in 0..us {
        for z in 0..zs {
            for k in 0..ks {
                let v = p.get(&[u, z, k]);
                p_u[u] += v;
                p_z[z] += v;
                p_uk[u * ks + k] += v;
                p_uz[u * zs + z] += v;
            }
        }
    }
    let mut out = vec![0.0; p.probs().len()];
    for u in 0..us {
        for z in 0..zs {
            for k in 0..ks {
                if p.get(&[u, z, k]) > 0.0 {
                    let z_given_u = p_uz[u * zs + z] / p_u[u];
                    let k_given_u = p_uk[u * ks + k] / p_u[u];
                    out[p.flat_index(&[u, z, k])] = mu * (z_given_u / p_z[z]).ln() - k_given_u.ln();
                }
            }
        }
    }
    out
}

/// `p^(lambda) ∝ p exp(-lambda omega~)` for `lambda` in `[0, 1/2]`.
pub fn tilt(p_uzk: &JointPmf, mu: f64, lambda: f64) -> Result<JointPmf> {
    if p_uzk.dims().len() != 3 {
        return Err(Error::InvalidParameter("tilt needs a 3-D joint on U x Z x K".into()));
    }
    if !(0.0..=1.0).contains(&mu) || !(0.0..=0.5).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "tilt needs mu in [0,1] and lambda in [0,1/2], got ({mu}, {lambda})"
        )));
    }
    if lambda == 0.0 {
        return Ok(p_uzk.clone());
    }
    let om = omega_tilde(p_uzk, mu);
    let weights: Vec<f64> = p_uzk
        .probs()
        .iter()
        .zip(&om)
        .map(|(&p, &o)| if p > 0.0 { p * (-lambda * o).exp() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
    JointPmf::new(p_uzk.dims().to_vec(), weights.iter().map(|w| w / total).collect())
}

pub fn vartheta(a: f64) -> f64 {
    a + 1.5 * a * a
}

/// Inverse of [`vartheta`] on `[0, inf)`.
pub fn g_inv(b: f64) -> f64 {
    // (sqrt(1 + 6b) - 1) / 3 written without cancellation near b = 0.
    2.0 * b / (1.0 + (1.0 + 6.0 * b).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probsim::Pmf;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_joint(seed: u64) -> JointPmf {
        let mut rng = rng_from_seed(seed);
        let w: Vec<f64> = (0..12).map(|_| rng.gen_range(0.01..1.0)).collect();
        JointPmf::new(vec![2, 3, 2], Pmf::from_weights(&w).unwrap().probs().to_vec()).unwrap()
    }

    #[test]
    fn g_inverts_vartheta() {
        assert_eq!(g_inv(0.0), 0.0);
        assert!((g_inv(2.5) - 1.0).abs() < 1e-15);
        for i in 0..=500 {
            let a = i as f64 / 100.0;
            assert!((g_inv(vartheta(a)) - a).abs() < 1e-12);
            let b = vartheta(a);
            assert!((g_inv(b) - ((1.0 + 6.0 * b).sqrt() - 1.0) / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_tilt_is_identity() {
        let p = random_joint(5);
        assert_eq!(tilt(&p, 0.3, 0.0).unwrap(), p);
    }

    #[test]
    fn tilt_normalizes_and_matches_direct_formula() {
        let p = random_joint(6);
        let (mu, lambda) = (0.4, 0.35);
        let t = tilt(&p, mu, lambda).unwrap();
        assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Direct ratio p^(l)(a) / p^(l)(b) = p(a)/p(b) exp(-l (om(a) - om(b))).
        let om = |u: usize, z: usize, k: usize| {
            let pu: f64 = (0..3).flat_map(|z| (0..2).map(move |k| (z, k))).map(|(z, k)| p.get(&[u, z, k])).sum();
            let pz: f64 = (0..2).flat_map(|u| (0..2).map(move |k| (u, k))).map(|(u, k)| p.get(&[u, z, k])).sum();
            let puz: f64 = (0..2).map(|k| p.get(&[u, z, k])).sum();
            let puk: f64 = (0..3).map(|z| p.get(&[u, z, k])).sum();
            mu * ((puz / pu) / pz).ln() + (pu / puk).ln()
        };
        let (a, b) = ([0, 1, 1], [1, 2, 0]);
        let lhs = t.get(&a) / t.get(&b);
        let rhs = p.get(&a) / p.get(&b) * (-lambda * (om(0, 1, 1) - om(1, 2, 0))).exp();
        assert!((lhs / rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let p = random_joint(7);
        assert!(tilt(&p, 0.5, 0.6).is_err());
        assert!(tilt(&p, 1.5, 0.1).is_err());
    }
}
