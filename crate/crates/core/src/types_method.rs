//! Empirical types, type-family enumeration and exact class sizes.
//!
//! Types are stored as integer count vectors. Families are always listed in
//! ascending lexicographic order of the count vector; that order is the
//! iteration and tie-break order used everywhere downstream.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ffield::same_len;
use crate::Symbol;

/// Largest family [`enumerate_types`] and [`enumerate_joint_types`] will list.
pub const MAX_FAMILY_SIZE: u64 = 1 << 32;

/// Anything described by per-symbol counts summing to a block length.
pub trait Counts {
    fn counts(&self) -> &[u32];

    fn block_length(&self) -> usize {
        self.counts().iter().map(|&c| c as usize).sum()
    }
}

/// Empirical type of a sequence over an alphabet of `counts.len()` symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVector {
    n: usize,
    counts: Vec<u32>,
}

impl Counts for TypeVector {
    fn counts(&self) -> &[u32] {
        &self.counts
    }
}

impl TypeVector {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        let n = counts.iter().map(|&c| c as usize).sum();
        Ok(TypeVector { n, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// Relative frequencies.
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }
}

/// Joint type of a pair of sequences; `counts[k * z_size + z]` counts `(k, z)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointTypeVector {
    n: usize,
    x_size: usize,
    z_size: usize,
    counts: Vec<u32>,
}

impl Counts for JointTypeVector {
    fn counts(&self) -> &[u32] {
        &self.counts
    }
}

impl JointTypeVector {
    pub fn new(x_size: usize, z_size: usize, counts: Vec<u32>) -> Result<Self> {
        if x_size == 0 || z_size == 0 {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        same_len("JointTypeVector::new", x_size * z_size, counts.len())?;
        let n = counts.iter().map(|&c| c as usize).sum();
        Ok(JointTypeVector {
            n,
            x_size,
            z_size,
            counts,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.x_size, self.z_size)
    }

    #[inline]
    pub fn count(&self, k: usize, z: usize) -> u32 {
        self.counts[k * self.z_size + z]
    }

    pub fn k_marginal(&self) -> TypeVector {
        let counts = (0..self.x_size).map(|k| (0..self.z_size).map(|z| self.count(k, z)).sum()).collect();
        TypeVector { n: self.n, counts }
    }

    pub fn z_marginal(&self) -> TypeVector {
        let counts = (0..self.z_size).map(|z| (0..self.x_size).map(|k| self.count(k, z)).sum()).collect();
        TypeVector { n: self.n, counts }
    }

    /// Relative frequencies, row-major.
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// Decodes pair symbol `s = k * z_size + z`.
    #[inline]
    pub fn split_pair(&self, s: Symbol) -> (Symbol, Symbol) {
        let z = self.z_size as Symbol;
        (s / z, s % z)
    }
}

pub fn empirical_type(seq: &[Symbol], alphabet_size: usize) -> Result<TypeVector> {
    let mut counts = vec![0u32; alphabet_size];
    for &s in seq {
        let slot = counts.get_mut(s as usize).ok_or(Error::SymbolOutOfRange {
            symbol: s as usize,
            size: alphabet_size,
        })?;
        *slot += 1;
    }
    TypeVector::new(counts)
}

pub fn empirical_joint_type(k: &[Symbol], z: &[Symbol], x_size: usize, z_size: usize) -> Result<JointTypeVector> {
    same_len("empirical_joint_type", k.len(), z.len())?;
    let mut counts = vec![0u32; x_size * z_size];
    for (&a, &b) in k.iter().zip(z) {
        if a as usize >= x_size {
            return Err(Error::SymbolOutOfRange {
                symbol: a as usize,
                size: x_size,
            });
        }
        if b as usize >= z_size {
            return Err(Error::SymbolOutOfRange {
                symbol: b as usize,
                size: z_size,
            });
        }
        counts[a as usize * z_size + b as usize] += 1;
    }
    JointTypeVector::new(x_size, z_size, counts)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `|P_n|` for an alphabet of `size` symbols: `C(n + size - 1, size - 1)`.
pub fn family_size(n: usize, size: usize) -> BigUint {
    binomial((n + size - 1) as u64, (size - 1) as u64)
}

fn compositions(n: usize, size: usize) -> Result<Vec<Vec<u32>>> {
    if size == 0 {
        return Err(Error::InvalidParameter("empty alphabet".into()));
    }
    let card = family_size(n, size);
    if card > BigUint::from(MAX_FAMILY_SIZE) {
        return Err(Error::Overflow("type enumeration"));
    }
    let mut out = Vec::with_capacity(card.to_usize().unwrap_or(0));
    let mut cur = vec![0u32; size];
    fn rec(pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = remaining;
            out.push(cur.clone());
            return;
        }
        for c in 0..=remaining {
            cur[pos] = c;
            rec(pos + 1, remaining - c, cur, out);
        }
    }
    rec(0, n as u32, &mut cur, &mut out);
    Ok(out)
}

/// `P_n(X)` in lexicographic order.
pub fn enumerate_types(n: usize, alphabet_size: usize) -> Result<Vec<TypeVector>> {
    Ok(compositions(n, alphabet_size)?
        .into_iter()
        .map(|counts| TypeVector { n, counts })
        .collect())
}

/// `P_n(X x Z)` in lexicographic order of the row-major count vector.
pub fn enumerate_joint_types(n: usize, sizes: (usize, usize)) -> Result<Vec<JointTypeVector>> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be positive".into()));
    }
    let (x_size, z_size) = sizes;
    Ok(compositions(n, x_size * z_size)?
        .into_iter()
        .map(|counts| JointTypeVector {
            n,
            x_size,
            z_size,
            counts,
        })
        .collect())
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

fn multinomial(counts: &[u32]) -> BigUint {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    counts.iter().fold(factorial(n), |acc, &c| acc / factorial(c as u64))
}

/// `n! / prod(counts!)`.
pub fn type_class_size<T: Counts + ?Sized>(t: &T) -> BigUint {
    multinomial(t.counts())
}

/// `|T_{Z|K}(k^n)|` for any `k^n` of type `k_marginal`.
pub fn conditional_class_size(jt: &JointTypeVector, k_marginal: &TypeVector) -> Result<BigUint> {
    if jt.k_marginal() != *k_marginal {
        return Err(Error::InvalidParameter("joint type does not have the given k-marginal".into()));
    }
    Ok((0..jt.x_size)
        .map(|k| multinomial(&jt.counts[k * jt.z_size..(k + 1) * jt.z_size]))
        .product())
}

/// Exact rational value of a float.
pub fn exact_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite probability")
}

/// `P^n(T)` for the i.i.d. measure with per-symbol probabilities `probs`,
/// computed exactly on the rational values of the floats.
pub fn class_probability<T: Counts + ?Sized>(t: &T, probs: &[f64]) -> Result<BigRational> {
    same_len("class_probability", t.counts().len(), probs.len())?;
    let mut acc = BigRational::from_integer(BigInt::from(type_class_size(t)));
    for (&c, &p) in t.counts().iter().zip(probs) {
        if c > 0 {
            acc *= num_traits::pow(exact_rational(p), c as usize);
        }
    }
    Ok(acc)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Every sequence with the given counts, in lexicographic order.
pub fn class_members(counts: &[u32]) -> Vec<Vec<Symbol>> {
    let n: usize = counts.iter().map(|&c| c as usize).sum();
    let mut remaining = counts.to_vec();
    let mut cur = Vec::with_capacity(n);
    let mut out = Vec::new();
    fn rec(n: usize, remaining: &mut [u32], cur: &mut Vec<Symbol>, out: &mut Vec<Vec<Symbol>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for s in 0..remaining.len() {
            if remaining[s] > 0 {
                remaining[s] -= 1;
                cur.push(s as Symbol);
                rec(n, remaining, cur, out);
                cur.pop();
                remaining[s] += 1;
            }
        }
    }
    rec(n, &mut remaining, &mut cur, &mut out);
    out
}

/// Position lookup into an enumerated family.
#[derive(Debug, Clone)]
pub struct TypeIndex {
    index: HashMap<Vec<u32>, usize>,
}

impl TypeIndex {
    pub fn new<'a, T: Counts + 'a>(family: impl IntoIterator<Item = &'a T>) -> Self {
        TypeIndex {
            index: family
                .into_iter()
                .enumerate()
                .map(|(i, t)| (t.counts().to_vec(), i))
                .collect(),
        }
    }

    pub fn position(&self, counts: &[u32]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}
