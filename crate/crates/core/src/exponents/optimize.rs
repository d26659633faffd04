//! Derivative-free minimization over products of probability simplices.

use serde::Serialize;

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107,
    109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    let b = base as u64;
    while index > 0 {
        f /= base as f64;
        r += f * (index % b) as f64;
        index /= b;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdSettings {
    /// Quasi-random starting points.
    pub starts: usize,
    pub max_sweeps: usize,
    /// A sweep improving the objective by less than this ends the descent.
    pub tol: f64,
    pub golden_iters: usize,
    /// Every coordinate stays at or above this value.
    pub floor: f64,
}

impl Default for CdSettings {
    fn default() -> Self {
        CdSettings {
            starts: 16,
            max_sweeps: 60,
            tol: 1e-9,
            golden_iters: 40,
            floor: 1e-12,
        }
    }
}

impl CdSettings {
    pub fn light() -> Self {
        CdSettings {
            starts: 4,
            max_sweeps: 30,
            tol: 1e-9,
            golden_iters: 30,
            floor: 1e-12,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of `f` on `[lo, hi]`; returns the best
/// point seen and its value.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Layout of a point in a product of simplices stored as one flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexProduct {
    blocks: Vec<usize>,
    offsets: Vec<usize>,
}

impl SimplexProduct {
    pub fn new(blocks: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut acc = 0;
        for &b in &blocks {
            offsets.push(acc);
            acc += b;
        }
        SimplexProduct { blocks, offsets }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.offsets[i]..self.offsets[i] + self.blocks[i]]
    }

    /// Start `index`: each block is a normalized vector of exponential
    /// spacings driven by consecutive Halton coordinates.
    pub fn halton_point(&self, index: u64, floor: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        let mut dim = 0;
        for (b, &size) in self.blocks.iter().enumerate() {
            let off = self.offsets[b];
            for i in 0..size {
                let u = halton(index + 1, PRIMES[dim % PRIMES.len()]).clamp(1e-12, 1.0 - 1e-12);
                x[off + i] = -u.ln();
                dim += 1;
            }
            self.normalize_block(&mut x, b, floor);
        }
        x
    }

    /// Rescales block `b` to sum to one with every entry at least `floor`.
    pub fn normalize_block(&self, x: &mut [f64], b: usize, floor: f64) {
        let (off, size) = (self.offsets[b], self.blocks[b]);
        let s: f64 = x[off..off + size].iter().sum();
        let spare = 1.0 - floor * size as f64;
        for v in &mut x[off..off + size] {
            *v = floor + spare * (*v / s);
        }
    }

    pub fn floored(&self, mut x: Vec<f64>, floor: f64) -> Vec<f64> {
        for b in 0..self.blocks.len() {
            let (off, size) = (self.offsets[b], self.blocks[b]);
            for v in &mut x[off..off + size] {
                *v = v.max(0.0);
            }
            self.normalize_block(&mut x, b, floor);
        }
        x
    }
}

/// Pairwise coordinate descent from one start: mass is moved between two
/// coordinates of one block at a time by golden-section search.
pub fn descend(
    layout: &SimplexProduct,
    f: &mut impl FnMut(&[f64]) -> f64,
    mut x: Vec<f64>,
    s: &CdSettings,
) -> (f64, Vec<f64>) {
    let mut fx = f(&x);
    let mut trial = x.clone();
    for _ in 0..s.max_sweeps {
        let before = fx;
        for b in 0..layout.blocks.len() {
            let (off, size) = (layout.offsets[b], layout.blocks[b]);
            for i in 0..size {
                for j in i + 1..size {
                    let (pi, pj) = (off + i, off + j);
                    let mass = x[pi] + x[pj];
                    if mass <= 2.0 * s.floor {
                        continue;
                    }
                    let (lo, hi) = (s.floor / mass, 1.0 - s.floor / mass);
                    trial.copy_from_slice(&x);
                    let (theta, ft) = golden_section(
                        |t| {
                            trial[pi] = t * mass;
                            trial[pj] = mass - t * mass;
                            f(&trial)
                        },
                        lo,
                        hi,
                        s.golden_iters,
                    );
                    if ft < fx {
                        x[pi] = theta * mass;
                        x[pj] = mass - theta * mass;
                        fx = ft;
                    }
                }
            }
        }
        if !(before - fx > s.tol) {
            break;
        }
    }
    (fx, x)
}

/// Best result over the Halton starts and any caller-supplied starts. Ties
/// keep the earliest start, so the result is a pure function of the inputs.
pub fn minimize(
    layout: &SimplexProduct,
    f: &mut impl FnMut(&[f64]) -> f64,
    extra_starts: &[Vec<f64>],
    s: &CdSettings,
) -> (f64, Vec<f64>) {
    let starts = extra_starts
        .iter()
        .map(|x| layout.floored(x.clone(), s.floor))
        .chain((0..s.starts as u64).map(|i| layout.halton_point(i, s.floor)));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x0 in starts {
        let (v, x) = descend(layout, f, x0, s);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, x));
        }
    }
    best.expect("at least one start")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        let v: Vec<f64> = (1..=4).map(|i| halton(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|t| (t - 0.3).powi(2), 0.0, 1.0, 60);
        assert!((x - 0.3).abs() < 1e-9 && fx < 1e-17);
    }

    #[test]
    fn starts_are_feasible() {
        let layout = SimplexProduct::new(vec![3, 2, 2]);
        for i in 0..16 {
            let x = layout.halton_point(i, 1e-12);
            for b in 0..3 {
                let blk = layout.block(&x, b);
                assert!((blk.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(blk.iter().all(|&v| v >= 1e-12));
            }
        }
    }

    #[test]
    fn minimizes_separable_divergence() {
        // sum_b D(x_b || t_b) has its minimum 0 at x = t.
        let layout = SimplexProduct::new(vec![3, 2]);
        let target = [0.2, 0.5, 0.3, 0.9, 0.1];
        let mut f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| a * (a / b).ln()).sum::<f64>();
        let (v, x) = minimize(&layout, &mut f, &[], &CdSettings::default());
        assert!(v.abs() < 1e-8, "{v}");
        for (a, b) in x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-4);
        }
    }
}
