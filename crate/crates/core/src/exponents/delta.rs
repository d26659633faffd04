//! Finite-blocklength penalties `delta_{i,n}`, evaluated in log space.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaTerms {
    pub n: usize,
    pub x_size: usize,
    pub z_size: usize,
    pub rate: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
}

fn logsumexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// All four penalties for blocklength `n`, alphabets `|X|` and `|Z|`, rate `R`.
pub fn delta_terms(n: usize, x_size: usize, z_size: usize, rate: f64) -> Result<DeltaTerms> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be at least 1".into()));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("rate must be finite and > 0, got {rate}")));
    }
    let nf = n as f64;
    let l = (nf + 1.0).ln();
    let (x, xz) = (x_size as f64, (x_size * z_size) as f64);
    let x_or_one = logsumexp(x * l, 0.0);
    let x_or_xz = logsumexp(x * l, xz * l);
    Ok(DeltaTerms {
        n,
        x_size,
        z_size,
        rate,
        delta1: (1.0 + 2.0 * x * l + x_or_one) / nf,
        delta2: ((5.0 * nf * rate).ln() + x_or_one) / nf,
        delta3: (1.0 + 2.0 * x * l + x_or_xz) / nf,
        delta4: ((7.0 * nf * rate).ln() + 3.0 * xz * l + x_or_xz) / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(n: usize, x: usize, z: usize, r: f64) -> [f64; 4] {
        let m = (n + 1) as f64;
        let (x, xz) = (x as i32, (x * z) as i32);
        let nf = n as f64;
        [
            (std::f64::consts::E * m.powi(2 * x) * (m.powi(x) + 1.0)).ln() / nf,
            (5.0 * nf * r * (m.powi(x) + 1.0)).ln() / nf,
            (std::f64::consts::E * m.powi(2 * x) * (m.powi(x) + m.powi(xz))).ln() / nf,
            (7.0 * nf * r * m.powi(3 * xz) * (m.powi(x) + m.powi(xz))).ln() / nf,
        ]
    }

    #[test]
    fn first_term_at_n_one() {
        let d = delta_terms(1, 2, 2, 0.5).unwrap();
        assert!((d.delta1 - (1.0 + 80f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_direct_products() {
        for n in [1, 2, 5, 17, 100] {
            for (x, z) in [(2, 2), (3, 2), (2, 4)] {
                for r in [0.1, 0.7, 1.5] {
                    let d = delta_terms(n, x, z, r).unwrap();
                    let o = direct(n, x, z, r);
                    for (a, b) in [d.delta1, d.delta2, d.delta3, d.delta4].iter().zip(o) {
                        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_rate() {
        assert!(delta_terms(4, 2, 2, 0.0).is_err());
        assert!(delta_terms(4, 2, 2, -1.0).is_err());
        assert!(delta_terms(0, 2, 2, 1.0).is_err());
    }

    #[test]
    fn shrinks_with_blocklength() {
        for n in 8..200 {
            let a = delta_terms(n, 2, 3, 0.5).unwrap();
            let b = delta_terms(2 * n, 2, 3, 0.5).unwrap();
            assert!(b.delta1 < a.delta1 && b.delta2 < a.delta2);
            assert!(b.delta3 < a.delta3 && b.delta4 < a.delta4);
            assert!(a.delta3 > a.delta1);
            assert!([a.delta1, a.delta2, a.delta3, a.delta4].iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn second_term_goes_negative_for_tiny_rates() {
        let d = delta_terms(1000, 2, 2, 1e-12).unwrap();
        assert!(d.delta2 < 0.0);
    }
}
