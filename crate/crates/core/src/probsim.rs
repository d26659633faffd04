//! Finite-alphabet distributions, entropic functionals and seeded sampling.
//!
//! All information quantities are in nats. `0 log 0 = 0`, and a divergence
//! whose first argument puts mass outside the support of the second is
//! `f64::INFINITY`, never a large finite number.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::same_len;
use crate::Symbol;

/// Tolerance on `sum(p) = 1` when validating user-supplied distributions.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[inline]
fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

fn validate(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {bad} is not a nonnegative number")));
    }
    let s = compensated_sum(probs.iter().copied());
    if (s - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("entries sum to {s}, not 1")));
    }
    Ok(())
}

/// Probability vector on `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate(&probs)?;
        Ok(Pmf { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let s = compensated_sum(weights.iter().copied());
        if !(s > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidDistribution("weights must be nonnegative with positive sum".into()));
        }
        Ok(Pmf {
            probs: weights.iter().map(|w| w / s).collect(),
        })
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0);
        Pmf {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn point(size: usize, at: usize) -> Self {
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Pmf { probs }
    }

    /// `(1 - p, p)`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Pmf::new(vec![1.0 - p, p])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn p(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.probs.iter().all(|p| (p - u).abs() <= 1e-12)
    }

    /// Probability of a sequence under the i.i.d. extension.
    pub fn sequence_prob(&self, seq: &[Symbol]) -> f64 {
        seq.iter().map(|&s| self.probs[s as usize]).product()
    }
}

/// Joint pmf over a product alphabet, stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDistribution("dimensions must be positive".into()));
        }
        same_len("JointPmf::new", dims.iter().product(), probs.len())?;
        validate(&probs)?;
        Ok(JointPmf { dims, probs })
    }

    /// `p_A(a) W(b|a)` on `A x B`.
    pub fn from_input_and_channel(p: &Pmf, w: &Channel) -> Result<Self> {
        same_len("JointPmf::from_input_and_channel", w.in_size(), p.len())?;
        let probs = (0..p.len())
            .flat_map(|a| w.row(a).probs().iter().map(move |&t| p.p(a) * t))
            .collect();
        Ok(JointPmf {
            dims: vec![p.len(), w.out_size()],
            probs,
        })
    }

    pub fn product(a: &Pmf, b: &Pmf) -> Self {
        JointPmf {
            dims: vec![a.len(), b.len()],
            probs: a.probs.iter().flat_map(|&x| b.probs.iter().map(move |&y| x * y)).collect(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.probs[self.flat_index(idx)]
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (slot, &d) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        idx
    }

    /// Marginal on the listed axes, in the listed order.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointPmf> {
        if axes.iter().any(|&a| a >= self.dims.len()) {
            return Err(Error::InvalidParameter("marginal axis out of range".into()));
        }
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let mut out = vec![CompensatedSum::new(); dims.iter().product()];
        for (flat, &p) in self.probs.iter().enumerate() {
            let idx = self.unflatten(flat);
            let t = axes.iter().fold(0, |acc, &a| acc * self.dims[a] + idx[a]);
            out[t].add(p);
        }
        Ok(JointPmf {
            dims,
            probs: out.iter().map(CompensatedSum::value).collect(),
        })
    }

    pub fn marginal_pmf(&self, axis: usize) -> Result<Pmf> {
        let m = self.marginal(&[axis])?;
        Ok(Pmf { probs: m.probs })
    }

    /// For a 2-D joint on `A x B`: the channel `p_{B|A}` and marginal `p_A`.
    /// Rows with zero input mass become uniform.
    pub fn split_channel(&self) -> Result<(Pmf, Channel)> {
        if self.dims.len() != 2 {
            return Err(Error::InvalidParameter("split_channel needs a 2-D joint".into()));
        }
        let (na, nb) = (self.dims[0], self.dims[1]);
        let pa = self.marginal_pmf(0)?;
        let rows = (0..na)
            .map(|a| {
                let row = &self.probs[a * nb..(a + 1) * nb];
                if pa.p(a) > 0.0 {
                    Pmf::from_weights(row).expect("positive row mass")
                } else {
                    Pmf::uniform(nb)
                }
            })
            .collect();
        Ok((pa, Channel::new(rows)?))
    }

    /// Swaps the two axes of a 2-D joint.
    pub fn transpose(&self) -> Result<JointPmf> {
        if self.dims.len() != 2 {
            return Err(Error::InvalidParameter("transpose needs a 2-D joint".into()));
        }
        self.marginal(&[1, 0])
    }

    pub fn as_pmf(&self) -> Pmf {
        Pmf {
            probs: self.probs.clone(),
        }
    }
}

/// Stochastic matrix `W(b|a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Channel {
    out_size: usize,
    rows: Vec<Pmf>,
}

impl TryFrom<Vec<Vec<f64>>> for Channel {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Channel::new(rows.into_iter().map(Pmf::new).collect::<Result<_>>()?)
    }
}

impl From<Channel> for Vec<Vec<f64>> {
    fn from(c: Channel) -> Self {
        c.rows.into_iter().map(Into::into).collect()
    }
}

impl Channel {
    pub fn new(rows: Vec<Pmf>) -> Result<Self> {
        let out_size = rows.first().map(Pmf::len).ok_or_else(|| {
            Error::InvalidDistribution("channel needs at least one input".into())
        })?;
        if rows.iter().any(|r| r.len() != out_size) {
            return Err(Error::InvalidDistribution("channel rows differ in length".into()));
        }
        Ok(Channel { out_size, rows })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Channel::new(vec![Pmf::new(vec![1.0 - p, p])?, Pmf::new(vec![p, 1.0 - p])?])
    }

    pub fn identity(size: usize) -> Self {
        Channel {
            out_size: size,
            rows: (0..size).map(|i| Pmf::point(size, i)).collect(),
        }
    }

    /// Output independent of the input.
    pub fn constant(in_size: usize, out: Pmf) -> Self {
        Channel {
            out_size: out.len(),
            rows: vec![out; in_size],
        }
    }

    pub fn in_size(&self) -> usize {
        self.rows.len()
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn row(&self, a: usize) -> &Pmf {
        &self.rows[a]
    }

    #[inline]
    pub fn p(&self, b: usize, a: usize) -> f64 {
        self.rows[a].p(b)
    }

    /// Output distribution for input `p`.
    pub fn push(&self, p: &Pmf) -> Result<Pmf> {
        same_len("Channel::push", self.in_size(), p.len())?;
        let probs = (0..self.out_size)
            .map(|b| compensated_sum((0..p.len()).map(|a| p.p(a) * self.p(b, a))))
            .collect();
        Ok(Pmf { probs })
    }
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(p.probs())
}

/// Entropy of a nonnegative vector assumed to sum to one.
pub fn entropy_of(probs: &[f64]) -> f64 {
    let h = -compensated_sum(probs.iter().map(|&p| xlogx(p)));
    h.max(0.0)
}

pub fn divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    same_len("divergence", p.len(), q.len())?;
    Ok(divergence_of(p.probs(), q.probs()))
}

pub fn divergence_of(p: &[f64], q: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            s.add(a * (a / b).ln());
        }
    }
    s.value().max(0.0)
}

/// `sum_b w(b) D(p_{A|B=b} || q_A)`; rows of `cond` are indexed by `b`.
pub fn divergence_cond(cond: &Channel, q: &Pmf, weights: &Pmf) -> Result<f64> {
    same_len("divergence_cond", cond.in_size(), weights.len())?;
    same_len("divergence_cond", cond.out_size(), q.len())?;
    let mut s = CompensatedSum::new();
    for b in 0..weights.len() {
        let w = weights.p(b);
        if w > 0.0 {
            let d = divergence_of(cond.row(b).probs(), q.probs());
            if d.is_infinite() {
                return Ok(f64::INFINITY);
            }
            s.add(w * d);
        }
    }
    Ok(s.value().max(0.0))
}

/// `I(A;B) = H(A) + H(B) - H(A,B)` for a 2-D joint.
pub fn mutual_information(joint: &JointPmf) -> Result<f64> {
    if joint.dims().len() != 2 {
        return Err(Error::InvalidParameter("mutual_information needs a 2-D joint".into()));
    }
    let ha = entropy(&joint.marginal_pmf(0)?);
    let hb = entropy(&joint.marginal_pmf(1)?);
    let hab = entropy_of(joint.probs());
    Ok((ha + hb - hab).max(0.0))
}

/// `H(B|A)` for a 2-D joint on `A x B`.
pub fn conditional_entropy(joint: &JointPmf) -> Result<f64> {
    if joint.dims().len() != 2 {
        return Err(Error::InvalidParameter("conditional_entropy needs a 2-D joint".into()));
    }
    Ok((entropy_of(joint.probs()) - entropy(&joint.marginal_pmf(0)?)).max(0.0))
}

#[inline]
fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Symbol {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i as Symbol;
            }
        }
    }
    // Rounding left u above the final partial sum.
    last_positive as Symbol
}

pub fn sample_iid<R: Rng + ?Sized>(p: &Pmf, n: usize, rng: &mut R) -> Vec<Symbol> {
    (0..n).map(|_| draw(p.probs(), rng)).collect()
}

/// Passes `k` through the memoryless channel `w` symbol by symbol.
pub fn channel_apply<R: Rng + ?Sized>(w: &Channel, k: &[Symbol], rng: &mut R) -> Result<Vec<Symbol>> {
    k.iter()
        .map(|&s| {
            let a = s as usize;
            if a >= w.in_size() {
                return Err(Error::SymbolOutOfRange {
                    symbol: a,
                    size: w.in_size(),
                });
            }
            Ok(draw(w.row(a).probs(), rng))
        })
        .collect()
}
